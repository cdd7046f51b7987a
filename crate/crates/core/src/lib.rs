//! Kernel averages and two-step estimation for nonparametric regression with
//! time-varying AR(1) errors, on the fixed design `x_t = t / T`.

// `!(x > y)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averages;
pub mod bandwidth;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod local_linear;
pub mod pipeline;
pub mod plot;
pub mod report;
mod simplex;
pub mod special;
pub mod tvar;

pub use averages::{DesignSeries, MomentMatrix};
pub use diagnostics::{ArmaFit, BicGrid, DiagnosticsReport, LjungBox};
pub use error::{Error, ErrorCategory, Result};
pub use experiments::{MaseReport, RateMode, RateParams, ThetaResult};
pub use kernels::{KernelFamily, KernelSpec, SupportRegion};
pub use local_linear::CurveEstimate;
pub use pipeline::{PipelineConfig, PipelineReport};
pub use tvar::{TvarModel, TwoStepFit};
