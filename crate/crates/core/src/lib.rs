//! Broad ("weak") von Neumann pointers on classical and quantum path
//! networks: collapse of shifted Gaussian sums, path probabilities and
//! quasi-probabilities, post-selected shifts, reshaping filters, and the
//! Monte Carlo machinery to check them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too; index loops
// mirror the i/j subscripts of the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classical;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod output;
pub mod quantum;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod spin;

pub use error::{Error, Result};
pub use experiments::{run_experiment, Experiment, RunOptions};
pub use grid::{DensityGrid, DensityGrid2, Grid, GridConfig};
pub use kernels::{GaussianKernel, KernelForm, WeightedShiftSet};
pub use quantum::{PointerSpec, QuantumScenario, QuasiProbTable};
pub use report::RunReport;
pub use scenario::Scenario;
pub use spin::{BlochDirection, SpinConfiguration};
