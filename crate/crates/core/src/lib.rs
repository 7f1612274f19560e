//! Gossip algorithms for estimating and optimizing pairwise functionals
//! (U-statistics) over a network of agents.
//!
//! The numerical core is generic over the scalar type through [`Scalar`]
//! (implemented for `f32` and `f64`); the `*64` aliases below fix it to `f64`.
//!
//! * [`graph`]: topologies, Laplacian spectrum, gossip transition matrices.
//! * [`pairwise`]: kernels, kernel matrices and exact U-statistics.
//! * [`estimation`]: GoSta, U1 and U2 gossip estimation with exact oracles and bounds.
//! * [`dualavg`]: centralized, stochastic, distributed and gossip dual averaging.
//! * [`losses`]: AUC, metric-learning and ranking objectives, AUC metric, gradient checks.
//! * [`bounds`]: convergence rate bounds, mixing time, lower bound and hard instance.

// NaN-rejecting `!(x > 0)` guards and index loops over coupled arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod dualavg;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod linalg;
pub mod losses;
pub mod pairwise;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::{Graph, NetworkConstants, Spectrum, Topology};
pub use linalg::Matrix;
pub use pairwise::{Dataset, KernelMatrix, Observation, PairKernel};
pub use rng::{Draws, ScriptedDraws, SeededDraws};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Spectrum64 = Spectrum<f64>;
pub type NetworkConstants64 = NetworkConstants<f64>;
pub type Dataset64 = Dataset<f64>;
pub type KernelMatrix64 = KernelMatrix<f64>;
pub type StepSchedule64 = dualavg::StepSchedule<f64>;
pub type ProjectionSpec64 = dualavg::ProjectionSpec<f64>;
pub type DaConfig64 = dualavg::DaConfig<f64>;
