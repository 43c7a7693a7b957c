//! Generator and critic networks, Cramér and WGAN objectives, training.
//!
//! Both networks run a stack of leaky-ReLU dense layers beside a stack of
//! cross layers on the same input and concatenate the two outputs. The
//! generator ends in a sigmoid head for numeric columns and one softmax head
//! per categorical block; the critic first replaces each categorical block
//! `p` by `pᵀE` and ends in a linear layer giving `h(x) ∈ R^k`.

mod config;
mod loss;
mod net;
mod train;

pub use config::{default_embed_dim, GanConfig, InputEncoding, Mode, Variant};
pub use loss::{cramer_graph, cramer_losses, fhat, gradient_penalty, wgan_graph, wgan_losses, CriticFn, LossNodes, Losses};
pub use net::{declare, init_params, CriticArch, GeneratorArch, Init, ParamSpec};
pub use train::{critic_h, generate, generate_encoded, train, train_with, GanModel, IterMetrics, Trainer};
