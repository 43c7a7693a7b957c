//! Dense-matrix expression graphs with reverse-mode differentiation.
//!
//! Gradient rules emit new graph nodes instead of numbers, so the result of
//! [`Graph::grad`] can itself be differentiated. The gradient penalty relies on
//! this: it takes the norm of an input gradient and the critic is trained on it.
//!
//! All values are `f64` matrices. Binary elementwise ops broadcast operands of
//! shape `(1, c)`, `(r, 1)` or `(1, 1)` against `(r, c)`.
//!
//! ```
//! use pnrsynth_core::autodiff::{eval, Bindings, Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.data("x", 1, 1);
//! let cube = g.mul(x, x).unwrap();
//! let cube = g.mul(cube, x).unwrap();
//! let d1 = g.grad(cube, &[x]).unwrap()[0];
//! let d2 = g.grad(d1, &[x]).unwrap()[0];
//! let data = [Tensor::scalar(2.0)];
//! let out = eval(&g, &Bindings::new(&[], &data), &[d1, d2]).unwrap();
//! assert_eq!(out[0].item(), 12.0);
//! assert_eq!(out[1].item(), 12.0);
//! ```

mod adam;
mod eval;
mod grad;
mod graph;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use eval::{eval, Bindings};
pub use graph::{Graph, NodeId, Op};
pub use tensor::Tensor;

/// Shift added under every square root so norms stay differentiable at zero.
pub const SQRT_EPS: f64 = 1e-12;
