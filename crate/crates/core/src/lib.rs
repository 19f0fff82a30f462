//! Repetition counting over multichannel time series.
//!
//! A position's double cycle is the pair of distances to the repetitive
//! frames before and after it. The pipeline estimates double cycles at a
//! coarse-to-fine set of positions and sums their reciprocals into a count.
//!
//! ```
//! use repcount::{generate, run_pipeline, CorrelationEstimator, PipelineConfig, SynthSpec};
//!
//! let spec = SynthSpec { base_cycle: 16.0, cycles: 10, ..SynthSpec::default() };
//! let (series, truth) = generate(&spec).unwrap();
//! let (_, estimate) = run_pipeline(&series, &CorrelationEstimator::new(), &PipelineConfig::default()).unwrap();
//! assert!((estimate.count - truth.count as f64).abs() <= 1.0);
//! ```

// `!(a < b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anchors;
pub mod bench;
pub mod config;
pub mod error;
pub mod estimator;
pub mod io;
pub mod refine;
pub mod synth;
pub mod types;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use estimator::{CorrelationEstimator, DoubleCycleRegressor, RegressorOutput, ReplayEstimator, ReplayTable};
pub use refine::{
    count_dense, count_sampled, run_pipeline, run_pipeline_with, CountEstimate, Execution, RefinementState,
};
pub use synth::{generate, speed_up, GroundTruth, SynthSpec, Template};
pub use types::{DoubleCycle, Interval, PositionEstimate, TimeSeries};
