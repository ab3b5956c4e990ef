//! Neural pool operators: a tanh feature space with uniformly distributed
//! partition hyperplanes, a shape parameter tuned against Gaussian random
//! field auxiliaries, and least-squares output weights.

mod basis;
mod grf;
mod lsq;
mod operator;
mod tune;

pub use basis::{sample_locations, sample_unit_ball, tanh_derivs, FeatureBasis};
pub use grf::{grf_realize, se_covariance};
pub use lsq::{ls_fit, lstsq, residual_sse, LsFit};
pub use operator::{build_tn_operator, TnFit, TnOperator, TnOperatorRecord, TnTarget, SUP_GRID};
pub use tune::{tune_gamma, GammaCurve, GammaTuneConfig};
