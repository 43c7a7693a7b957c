//! Cramér-GAN synthesis of mixed categorical/numerical tabular records with
//! missing values, and the evaluation suite used to judge the output.
//!
//! The crate is `no_std` + `alloc`. File formats, IO and the command line live
//! in the `pnrsynth` companion crate. Enabling the `std` feature only switches
//! dependencies to their std builds (runtime SIMD detection for matrix products).
//!
//! Pipeline in brief:
//!
//! 1. [`data`]: a [`data::Schema`] and typed [`data::Dataset`] rows, plus the
//!    seeded surrogate record generator.
//! 2. [`preprocess`]: an [`preprocess::EncodingPlan`] maps rows into the unit
//!    interval (scaling, one-hot with `UNK`, fill + indicator for missing numerics).
//! 3. [`autodiff`]: expression graphs whose gradients are again graphs, so the
//!    gradient penalty can be differentiated.
//! 4. [`gan`]: generator/critic networks, Cramér and WGAN losses, training loop.
//! 5. [`learners`] and [`evalsuite`]: classifiers, tests and the evaluation report.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod autodiff;
pub mod data;
pub mod error;
pub mod evalsuite;
pub mod gan;
pub mod kernels;
pub mod learners;
pub mod preprocess;
pub mod rng;

pub use error::{Error, Result};
