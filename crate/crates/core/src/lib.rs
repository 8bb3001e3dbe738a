//! Oversampled direct-detection channel simulation and achievable-rate
//! estimation for bipolar (ASK) and unipolar (PAM) amplitude constellations.
//!
//! The channel is `y = |H x' + n1 + mu1|^2 + n2 + mu2` at two samples per
//! symbol. Rates are lower bounds obtained with an auxiliary (mismatched)
//! channel law fitted on pilot symbols and evaluated by a trellis forward
//! recursion.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod air;
pub mod channel;
pub mod constellation;
pub mod density;
pub mod error;
pub mod fit;
pub mod harness;

pub use air::{estimate_air, forward_log_marginal, log_conditional, Context, RateEstimate, TrellisSpec};
pub use constellation::{Constellation, Modulation, SymbolBlock};
pub use density::{AuxChannelParams, AuxLikelihood, DensityMode};
pub use error::{Error, Result};
pub use fit::{cross_validate, fit, fit_from, initialize_params, BlockId, DataBlock, FitConfig, FitResult};
