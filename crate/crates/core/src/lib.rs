//! Testing whether the variance of a time series is constant over time.
//!
//! The series is cut into `b = ⌊n/ℓ⌋` blocks of length `ℓ = ⌊n^s⌋`. The
//! statistic is Gini's mean difference of the log local variances,
//! standardized with a subsampling estimate of the long-run standard
//! deviation of the squared errors. Under a constant variance the
//! standardized statistic is asymptotically normal; a rejection can be
//! followed up by binary segmentation to locate the change points.
//!
//! ```
//! use varconst::{dgp, variance_test};
//!
//! let x = dgp::generate_noise(&dgp::NoiseSpec::IidNormal, 2000, 7).unwrap();
//! let r = variance_test::run_test(&x, 0.7, 0.5, 0.05).unwrap();
//! assert!(r.p_value > 0.0 && r.p_value < 1.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod changepoint;
pub mod dgp;
pub mod error;
pub mod io;
pub mod lrv;
pub mod montecarlo;
pub mod series;

pub use changepoint::{locate_all, locate_all_with, ChangePoint, ChangePointSet, LocateConfig, MarginRule};
pub use dgp::{generate_noise, generate_sample, make_alternative, AltId, MeanFn, NoiseSpec, ScenarioSpec, VarianceFn};
pub use error::{Error, Result};
pub use lrv::{estimate_kappa, LrvEstimate};
pub use montecarlo::{ExperimentReport, ExperimentSpec, Mode};
pub use series::{BlockPartition, TimeSeries};
pub use variance_test::{run_test, run_test_with, TestConfig, TestResult};
