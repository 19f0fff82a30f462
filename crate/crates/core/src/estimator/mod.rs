//! Double-cycle regression: the stage that turns a rough double-cycle at a
//! position into a refined one.
//!
//! The pipeline only sees the [`DoubleCycleRegressor`] contract. Two
//! implementations ship here: an analytic [`CorrelationEstimator`] and a
//! table-driven [`ReplayEstimator`] for exercising the pipeline against
//! known answers.

mod correlation;
mod replay;

pub use correlation::{correlation_score, CorrelationEstimator, HARMONIC_TOLERANCE, SUBCYCLE_LIMIT};
pub use replay::{ReplayEstimator, ReplayTable};

use crate::anchors::Side;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::types::{clamp_cycle, DoubleCycle, TimeSeries};

/// The 2M frames an estimator looks at around one position.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameWindow {
    /// 1-based frame indices; the first M are at or before the position.
    pub indices: Vec<usize>,
    /// Row-major `2M x C` feature values at `indices`.
    pub values: Vec<f64>,
    pub channels: usize,
}

impl FrameWindow {
    pub fn half(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.channels..(i + 1) * self.channels]
    }
}

/// Evenly spaced points over `[a, b]` inclusive; a single point collapses
/// to `at_single`.
fn uniform_points(a: f64, b: f64, count: usize, at_single: f64) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| {
        if count == 1 {
            at_single
        } else {
            a + (b - a) * k as f64 / (count - 1) as f64
        }
    })
}

/// Samples `M` frames from `[position - 2tp, position]` and `M` frames from
/// `[position + 1, position + 2tn + 1]`. Points round half up and clamp to
/// `[1, N]`, so windows near the edges repeat boundary frames.
pub fn sample_window(series: &TimeSeries, position: f64, dc: &DoubleCycle, half: usize) -> FrameWindow {
    let n = series.frames();
    let to_index = |x: f64| ((x + 0.5).floor().max(1.0) as usize).min(n);
    let first = uniform_points(position - 2.0 * dc.tp, position, half, position);
    let second = uniform_points(position + 1.0, position + 2.0 * dc.tn + 1.0, half, position + 1.0);
    let indices: Vec<usize> = first.chain(second).map(to_index).collect();
    let values = indices.iter().flat_map(|&i| series.row(i).iter().copied()).collect();
    FrameWindow {
        indices,
        values,
        channels: series.channels(),
    }
}

/// Score of one anchor, kept for diagnostics and visualization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorScore {
    pub side: Side,
    pub scale: f64,
    pub length: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorOutput {
    pub refined: DoubleCycle,
    pub confidence: f64,
    pub per_anchor: Vec<AnchorScore>,
}

impl RegressorOutput {
    pub fn new(refined: DoubleCycle, confidence: f64) -> Self {
        RegressorOutput {
            refined,
            confidence,
            per_anchor: Vec::new(),
        }
    }
}

/// Anything that can refine a double-cycle at a position.
///
/// Implementations must be pure functions of their inputs (or synchronize
/// internally) because the pipeline calls them from several threads.
pub trait DoubleCycleRegressor: Send + Sync {
    fn regress(
        &self,
        series: &TimeSeries,
        position: f64,
        dc: &DoubleCycle,
        cfg: &PipelineConfig,
    ) -> Result<RegressorOutput>;

    fn name(&self) -> &str;
}

impl<R: DoubleCycleRegressor + ?Sized> DoubleCycleRegressor for &R {
    fn regress(
        &self,
        series: &TimeSeries,
        position: f64,
        dc: &DoubleCycle,
        cfg: &PipelineConfig,
    ) -> Result<RegressorOutput> {
        (**self).regress(series, position, dc, cfg)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<R: DoubleCycleRegressor + ?Sized> DoubleCycleRegressor for Box<R> {
    fn regress(
        &self,
        series: &TimeSeries,
        position: f64,
        dc: &DoubleCycle,
        cfg: &PipelineConfig,
    ) -> Result<RegressorOutput> {
        (**self).regress(series, position, dc, cfg)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Calls `estimator` and enforces the output contract: the refined
/// double-cycle is clamped and the confidence lies in `[0, 1]`. Non-finite
/// outputs are reported as estimation failures.
pub fn regress_double_cycle<R: DoubleCycleRegressor + ?Sized>(
    estimator: &R,
    series: &TimeSeries,
    position: f64,
    dc: &DoubleCycle,
    cfg: &PipelineConfig,
) -> Result<RegressorOutput> {
    let mut out = estimator.regress(series, position, dc, cfg)?;
    if !out.refined.is_finite() || out.confidence.is_nan() {
        return Err(Error::Estimation(format!(
            "{} produced a non-finite estimate at position {position}",
            estimator.name()
        )));
    }
    out.refined = clamp_cycle(out.refined, cfg, series.frames());
    out.confidence = out.confidence.clamp(0.0, 1.0);
    Ok(out)
}
