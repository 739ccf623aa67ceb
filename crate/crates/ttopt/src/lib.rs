//! Gradient-free optimization of multivariable functions through low-rank
//! cross approximation of an implicit tensor over a (optionally quantized)
//! grid.
//!
//! The search box is discretized into a fine grid, so the objective becomes
//! a huge implicit tensor whose entries are function values. Alternating
//! maximal-volume cross sweeps visit a tiny, adaptively chosen fraction of
//! that tensor and keep track of the smallest entry seen; a monotone
//! transform of the values steers the sweeps toward the minimum. With
//! quantization, every grid axis of size `P^q` unfolds into `q` ternary-,
//! binary- or generally `P`-ary modes, which keeps the per-step matrices
//! tiny even for grids with millions of nodes per axis.
//!
//! ```
//! use ttopt::grid::GridSpec;
//! use ttopt::optimizer::{minimize, ObjectiveAdapter, OptimizerConfig};
//!
//! // minimize (x - 0.3)^2 + (y + 0.5)^2 over [-1, 1]^2 on a 2^8 x 2^8 grid
//! let spec = GridSpec::quantized_box(2, -1.0, 1.0, 2, 8).unwrap();
//! let mut obj = ObjectiveAdapter::from_scalar(2_000, |x: &[f64]| {
//!     (x[0] - 0.3).powi(2) + (x[1] + 0.5).powi(2)
//! });
//! let cfg = OptimizerConfig { rank: 3, budget: 2_000, ..Default::default() };
//! let res = minimize(&mut obj, &spec, &cfg).unwrap();
//! assert!(res.best_value < 1e-3);
//! ```

pub mod benchmarks;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod maxvol;
pub mod optimizer;

pub use grid::GridSpec;
pub use linalg::DenseMatrix;
pub use optimizer::{
    maximize, minimize, optimize, ObjectiveAdapter, OptError, OptResult, OptimizerConfig,
};
