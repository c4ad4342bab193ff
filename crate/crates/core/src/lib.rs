//! Tsallis q-statistics: the q-algebra, q-Gaussian distributions, their
//! moments and q-Laplace transforms, estimators, and a verification suite
//! that checks every closed form against an independent numerical oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod estimators;
pub mod moments;
pub mod numerics;
pub mod qalgebra;
pub mod qgaussian;
pub mod qlaplace;
pub mod special;
pub mod verify;

mod serde_f64;

pub use error::{Error, Result};
pub use estimators::{ConfidenceInterval, IntervalKind, SampleStats};
pub use moments::MomentReport;
pub use numerics::QuadratureResult;
pub use qgaussian::{make_params, EscortMap, QGaussian, QGaussianParams, Support};
pub use qlaplace::{LaplaceEval, LaplaceMethod, SignVariant};
pub use verify::{run_verify, Status, VerifyConfig, VerifyEntry, VerifyReport};
