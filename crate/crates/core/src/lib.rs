//! One-source-at-a-time single-channel source separation.
//!
//! Each target source gets its own small masking network trained against the
//! sum of all other sources (the interferer). The training objective rewards
//! reconstructing the target while pushing the estimate away from the part of
//! the interferer that lies outside the target's principal subspace, and the
//! two objective weights are chosen automatically from probe ratios measured
//! on the training data. Results are scored with projection-based
//! SDR/SIR/SAR.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod signal;

pub use error::{Error, Result};
pub mod subspace;
pub mod masknet;
pub mod tune;
pub mod metrics;
pub mod experiment;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/subspace.md")]
    mod subspace {}
    #[doc = include_str!("../../../book/src/masknet.md")]
    mod masknet {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
