//! Coarse-to-fine double-cycle refinement and the counting formulas.
//!
//! Stage 1 searches candidate cycle lengths at the middle frame and refines
//! the winner. Each later stage `m` doubles the number of positions
//! (`2^(m-1)` of them), initializes every position from its nearest refined
//! neighbours, and refines it with a few EMA rounds. The count is read off
//! the final stage.

use std::fmt::Write as _;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::estimator::{regress_double_cycle, DoubleCycleRegressor};
use crate::types::{clamp_cycle, within_bounds, DoubleCycle, PositionEstimate, TimeSeries, MIN_FRAMES};

/// Confidence gap under which two search candidates count as tied.
pub const SEARCH_TIE_TOLERANCE: f64 = 0.02;

/// One estimator round, recorded for visualization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// 0 for the initial search, otherwise the 1-based stage.
    pub stage: usize,
    pub position: f64,
    pub tp: f64,
    pub tn: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementState {
    pub frames: usize,
    pub cfg: PipelineConfig,
    /// Every refined estimate in push order.
    pub queue: Vec<PositionEstimate>,
    /// Estimates grouped per stage; `stages[m - 1]` holds stage `m`.
    pub stages: Vec<Vec<PositionEstimate>>,
    pub trace: Vec<TraceRow>,
    pub forwards: usize,
}

impl RefinementState {
    pub fn new(frames: usize, cfg: PipelineConfig) -> Self {
        RefinementState {
            frames,
            cfg,
            queue: Vec::new(),
            stages: Vec::new(),
            trace: Vec::new(),
            forwards: 0,
        }
    }

    fn push_stage(&mut self, estimates: Vec<PositionEstimate>) {
        debug_assert!(estimates.iter().all(|e| within_bounds(&e.dc, &self.cfg, self.frames)));
        self.queue.extend_from_slice(&estimates);
        self.stages.push(estimates);
    }

    /// Trace as CSV with a `stage,position,tp,tn,confidence` header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("stage,position,tp,tn,confidence\n");
        for r in &self.trace {
            writeln!(out, "{},{},{},{},{}", r.stage, r.position, r.tp, r.tn, r.confidence).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountEstimate {
    pub count: f64,
    pub per_position: Vec<PositionEstimate>,
    /// Estimator invocations spent.
    pub forwards_used: usize,
}

/// Whether stage refinements may run on several threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// `floor((2j - 1) n / 2^m)` for `j = 1..=2^(m-1)`, floored at frame 1.
pub fn stage_positions(n: usize, stage: usize) -> Vec<f64> {
    assert!(stage >= 1, "stages are 1-based");
    let denom = 1u128 << stage;
    (1..=(1u128 << (stage - 1)))
        .map(|j| (((2 * j - 1) * n as u128 / denom) as f64).max(1.0))
        .collect()
}

/// Geometrically spaced candidate cycle lengths over the admissible range.
pub fn search_lengths(n: usize, cfg: &PipelineConfig) -> Vec<f64> {
    let (lo, hi) = cfg.cycle_bounds(n);
    let count = cfg.search_scales;
    if count == 1 {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..count)
        .map(|j| {
            if j + 1 == count {
                hi
            } else {
                lo * ratio.powf(j as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

fn middle(n: usize) -> f64 {
    stage_positions(n, 1)[0]
}

/// First-stage search: queries the estimator at the middle frame once per
/// candidate length and keeps the most confident answer. Near-ties resolve
/// to the shorter candidate.
pub fn exhaustive_init<R: DoubleCycleRegressor + ?Sized>(
    series: &TimeSeries,
    estimator: &R,
    cfg: &PipelineConfig,
) -> Result<PositionEstimate> {
    let position = middle(series.frames());
    let single = cfg.search_scales == 1;
    let mut candidates = Vec::with_capacity(cfg.search_scales);
    let mut last_error = None;
    for length in search_lengths(series.frames(), cfg) {
        match regress_double_cycle(estimator, series, position, &DoubleCycle::uniform(length), cfg) {
            Ok(out) if out.confidence > 0.0 || single => candidates.push(PositionEstimate {
                position,
                dc: out.refined,
                confidence: out.confidence,
            }),
            Ok(_) => {}
            Err(e) => last_error = Some(e),
        }
    }
    let top = candidates
        .iter()
        .map(|c| c.confidence)
        .fold(f64::NEG_INFINITY, f64::max);
    // candidates are ordered shortest first
    candidates
        .into_iter()
        .find(|c| c.confidence >= top - SEARCH_TIE_TOLERANCE)
        .ok_or_else(|| {
            Error::Estimation(match last_error {
                Some(e) => format!("every search scale failed; last error: {e}"),
                None => "every search scale returned zero confidence".into(),
            })
        })
}

/// Initial double-cycle for `position` from the nearest queued estimates
/// strictly to its left and right: their mean when both exist, otherwise
/// whichever one does.
pub fn propagate_init(queue: &[PositionEstimate], position: f64) -> Result<DoubleCycle> {
    if queue.is_empty() {
        return Err(Error::InvalidArgument("cannot propagate from an empty queue".into()));
    }
    // later entries win ties on equal distance, so re-refined positions take precedence
    let nearest = |pick: &dyn Fn(&PositionEstimate) -> bool| {
        queue
            .iter()
            .filter(|e| pick(e))
            .fold(None::<&PositionEstimate>, |acc, e| match acc {
                Some(a) if (a.position - position).abs() < (e.position - position).abs() => Some(a),
                _ => Some(e),
            })
    };
    let left = nearest(&|e| e.position < position);
    let right = nearest(&|e| e.position > position);
    match (left, right) {
        (Some(l), Some(r)) => Ok(l.dc.mean(&r.dc)),
        (Some(one), None) | (None, Some(one)) => Ok(one.dc),
        (None, None) => {
            // only estimates at this exact position exist
            Ok(queue.iter().rev().find(|e| e.position == position).unwrap().dc)
        }
    }
}

/// `beta * current + (1 - beta) * refined`, per component. A convex blend of
/// two clamped double-cycles stays within the clamp bounds.
pub fn ema_update(current: &DoubleCycle, refined: &DoubleCycle, beta: f64) -> DoubleCycle {
    DoubleCycle::new(
        beta * current.tp + (1.0 - beta) * refined.tp,
        beta * current.tn + (1.0 - beta) * refined.tn,
    )
}

/// `iterations` rounds of regression followed by an EMA update. Failed
/// rounds keep the previous estimate and report zero confidence.
pub fn refine_position<R: DoubleCycleRegressor + ?Sized>(
    series: &TimeSeries,
    estimator: &R,
    position: f64,
    init: DoubleCycle,
    iterations: usize,
    cfg: &PipelineConfig,
) -> (PositionEstimate, Vec<TraceRow>) {
    let n = series.frames();
    let mut dc = clamp_cycle(init, cfg, n);
    let mut confidence = 0.0;
    let mut rows = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        match regress_double_cycle(estimator, series, position, &dc, cfg) {
            Ok(out) => {
                dc = clamp_cycle(ema_update(&dc, &out.refined, cfg.beta), cfg, n);
                confidence = out.confidence;
            }
            Err(_) => confidence = 0.0,
        }
        rows.push(TraceRow {
            stage: 0,
            position,
            tp: dc.tp,
            tn: dc.tn,
            confidence,
        });
    }
    (
        PositionEstimate {
            position,
            dc,
            confidence,
        },
        rows,
    )
}

/// Runs the full coarse-to-fine pipeline with the default execution mode.
pub fn run_pipeline<R: DoubleCycleRegressor + ?Sized>(
    series: &TimeSeries,
    estimator: &R,
    cfg: &PipelineConfig,
) -> Result<(RefinementState, CountEstimate)> {
    run_pipeline_with(series, estimator, cfg, Execution::default())
}

pub fn run_pipeline_with<R: DoubleCycleRegressor + ?Sized>(
    series: &TimeSeries,
    estimator: &R,
    cfg: &PipelineConfig,
    execution: Execution,
) -> Result<(RefinementState, CountEstimate)> {
    cfg.validate()?;
    let n = series.frames();
    if n < MIN_FRAMES {
        return Err(Error::Dimension(format!("series has {n} frames")));
    }
    let mut state = RefinementState::new(n, cfg.clone());

    let init = exhaustive_init(series, estimator, cfg)?;
    state.forwards += cfg.search_scales;
    state.trace.push(TraceRow {
        stage: 0,
        position: init.position,
        tp: init.dc.tp,
        tn: init.dc.tn,
        confidence: init.confidence,
    });

    for stage in 1..=cfg.stages {
        let rounds = cfg.refine_schedule[stage - 1];
        let positions = stage_positions(n, stage);
        let inits: Vec<DoubleCycle> = if stage == 1 {
            vec![init.dc]
        } else {
            positions
                .iter()
                .map(|&p| propagate_init(&state.queue, p))
                .collect::<Result<_>>()?
        };
        let refine_one = |(&p, &dc): (&f64, &DoubleCycle)| refine_position(series, estimator, p, dc, rounds, cfg);
        let results: Vec<(PositionEstimate, Vec<TraceRow>)> = match execution {
            Execution::Serial => positions.iter().zip(&inits).map(refine_one).collect(),
            Execution::Parallel => parallel_map(&positions, &inits, refine_one),
        };
        state.forwards += rounds * positions.len();
        let mut estimates = Vec::with_capacity(results.len());
        for (mut est, rows) in results {
            if stage == 1 && rounds == 0 {
                est.confidence = init.confidence;
            }
            state.trace.extend(rows.into_iter().map(|r| TraceRow { stage, ..r }));
            estimates.push(est);
        }
        state.push_stage(estimates);
    }

    let last = state.stages.last().expect("at least one stage");
    let mut count = count_sampled(last, n, cfg.stages)?;
    count.forwards_used = state.forwards;
    Ok((state, count))
}

#[cfg(feature = "parallel")]
fn parallel_map<F>(positions: &[f64], inits: &[DoubleCycle], f: F) -> Vec<(PositionEstimate, Vec<TraceRow>)>
where
    F: Fn((&f64, &DoubleCycle)) -> (PositionEstimate, Vec<TraceRow>) + Sync + Send,
{
    use rayon::prelude::*;
    positions.par_iter().zip(inits.par_iter()).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<F>(positions: &[f64], inits: &[DoubleCycle], f: F) -> Vec<(PositionEstimate, Vec<TraceRow>)>
where
    F: Fn((&f64, &DoubleCycle)) -> (PositionEstimate, Vec<TraceRow>),
{
    positions.iter().zip(inits).map(f).collect()
}

/// Count from the final-stage estimates, each standing in for an equal
/// `n / 2^(K-1)` share of the frames.
pub fn count_sampled(final_stage: &[PositionEstimate], n: usize, stages: usize) -> Result<CountEstimate> {
    let expected = 1usize << (stages - 1);
    if final_stage.len() != expected {
        return Err(Error::LengthMismatch {
            left: final_stage.len(),
            right: expected,
        });
    }
    // each side carries half of a position's share; dividing the share
    // directly keeps constant fields at exactly n / L
    let half_share = n as f64 / expected as f64 / 2.0;
    let terms: Vec<f64> = final_stage
        .iter()
        .flat_map(|e| [half_share / e.dc.tp, half_share / e.dc.tn])
        .collect();
    let count = pairwise_sum(&terms);
    Ok(CountEstimate {
        count,
        per_position: final_stage.to_vec(),
        forwards_used: 0,
    })
}

/// Count from one double-cycle per frame.
pub fn count_dense(per_frame: &[DoubleCycle], n: usize) -> Result<f64> {
    if per_frame.len() != n {
        return Err(Error::LengthMismatch {
            left: per_frame.len(),
            right: n,
        });
    }
    let terms: Vec<f64> = per_frame.iter().flat_map(|dc| [0.5 / dc.tp, 0.5 / dc.tn]).collect();
    Ok(pairwise_sum(&terms))
}

/// Recursive halving sum; exact for `2^k` equal terms.
fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}
