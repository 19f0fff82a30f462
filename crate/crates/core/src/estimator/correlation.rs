//! Analytic double-cycle estimator based on normalized cross-correlation.
//!
//! For every anchor length the candidate cycle next to the position is
//! compared with the adjacent segment of the same length further out. A
//! correct cycle length makes the two segments match. The best anchor plays
//! the role of the classification head; a parabola through its score and its
//! two neighbours stands in for the regression head.

use super::{AnchorScore, DoubleCycleRegressor, RegressorOutput};
use crate::anchors::Side;
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::types::{clamp_cycle, DoubleCycle, TimeSeries};

/// Anchors scoring at least this fraction of the best score count as ties;
/// the shortest tied length wins.
pub const HARMONIC_TOLERANCE: f64 = 0.95;

/// A shortened winner whose two halves correlate at least this well is
/// treated as a sub-cycle artifact and the best-scoring length is kept.
pub const SUBCYCLE_LIMIT: f64 = 0.95;

#[derive(Debug, Clone, Default)]
pub struct CorrelationEstimator {
    /// Comparison grid size; `None` uses the window size 2M.
    pub grid: Option<usize>,
}

impl CorrelationEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    fn grid_points(&self, cfg: &PipelineConfig) -> usize {
        self.grid.unwrap_or(2 * cfg.half_window).max(2)
    }
}

/// Start of the two adjacent segments compared for `side`, shifted inward
/// when they would leave the series.
fn pair_start(n: usize, position: f64, length: f64, side: Side) -> f64 {
    let span = 2.0 * length;
    let start = match side {
        Side::Prev => position + 1.0 - span,
        Side::Next => position + 1.0,
    };
    let last = n as f64 + 1.0 - span;
    if last < 1.0 {
        // both segments cannot fit; keep the raw placement and let sampling clamp
        start
    } else {
        start.clamp(1.0, last)
    }
}

/// Normalized cross-correlation between the cycle of `length` frames next
/// to `position` on `side` and the segment adjacent to it, averaged over
/// channels. Both segments are resampled to `grid` points by linear
/// interpolation. Channels that are constant on either segment score 0.
pub fn correlation_score(series: &TimeSeries, position: f64, length: f64, side: Side, grid: usize) -> f64 {
    let start = pair_start(series.frames(), position, length, side);
    segment_ncc(series, start, start + length, length, grid)
}

/// Mean per-channel NCC between `[a, a + length)` and `[b, b + length)`.
fn segment_ncc(series: &TimeSeries, a: f64, b: f64, length: f64, grid: usize) -> f64 {
    let step = length / grid as f64;
    let mut xs = vec![0.0; grid];
    let mut ys = vec![0.0; grid];
    let mut total = 0.0;
    for ch in 0..series.channels() {
        for k in 0..grid {
            let off = k as f64 * step;
            xs[k] = series.sample(a + off, ch);
            ys[k] = series.sample(b + off, ch);
        }
        total += ncc(&xs, &ys);
    }
    total / series.channels() as f64
}

/// Cross-correlation of the two segments around their joint mean, so a
/// level shift between them (a ramp cut in two) is not mistaken for a match.
fn ncc(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let flat = |v: &[f64], m: f64| {
        let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
        ss <= 1e-12 * n * (1.0 + m * m)
    };
    if flat(xs, mx) || flat(ys, my) {
        return 0.0;
    }
    let m = (mx + my) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - m, y - m);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Vertex of the parabola through three points, if it opens downward.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<f64> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    if denom.abs() < 1e-12 {
        return None;
    }
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    (a < 0.0).then(|| -b / (2.0 * a))
}

/// Relative half-widths of the local re-fits after the anchor-level fit.
const FINE_BRACKETS: [f64; 2] = [0.06, 0.02];

/// One parabolic re-fit on `[x(1 - rel), x, x(1 + rel)]`. Falls back to the
/// best of the three samples when the scores do not form a peak.
fn fine_peak(x: f64, rel: f64, score_at: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let a = (x * (1.0 - rel)).max(lo);
    let b = (x * (1.0 + rel)).min(hi);
    if !(a < x && x < b) {
        return x;
    }
    let pts = [(a, score_at(a)), (x, score_at(x)), (b, score_at(b))];
    match parabola_vertex(pts) {
        Some(v) if v.is_finite() => v.clamp(a, b),
        _ => {
            pts.iter()
                .fold(pts[1], |best, p| if p.1 > best.1 { *p } else { best })
                .0
        }
    }
}

struct SideResult {
    length: f64,
    score: f64,
}

impl CorrelationEstimator {
    fn estimate_side(
        &self,
        series: &TimeSeries,
        position: f64,
        current: f64,
        side: Side,
        cfg: &PipelineConfig,
        diag: &mut Vec<AnchorScore>,
    ) -> Option<SideResult> {
        let grid = self.grid_points(cfg);
        let (lo, hi) = cfg.cycle_bounds(series.frames());
        let score_at = |len: f64| correlation_score(series, position, len, side, grid);

        let lengths: Vec<f64> = cfg.anchor_scales.iter().map(|s| (s * current).clamp(lo, hi)).collect();
        let scores: Vec<f64> = lengths.iter().map(|&l| score_at(l)).collect();
        for ((&scale, &length), &score) in cfg.anchor_scales.iter().zip(&lengths).zip(&scores) {
            diag.push(AnchorScore {
                side,
                scale,
                length,
                score,
            });
        }

        if scores.iter().all(|&s| s == 0.0) {
            return None;
        }
        let (best_idx, best) =
            scores.iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
            );

        // fundamental-period tie-break: shortest length within tolerance of the best
        let mut winner = best_idx;
        if best > 0.0 {
            winner = (0..scores.len())
                .filter(|&i| scores[i] >= HARMONIC_TOLERANCE * best)
                .min_by(|&a, &b| lengths[a].total_cmp(&lengths[b]))
                .unwrap_or(best_idx);
            if winner != best_idx && self.halves_alike(series, position, lengths[winner], side, grid) {
                winner = best_idx;
            }
        }

        let length = self.refine_peak(&lengths, &scores, winner, &score_at, lo, hi);
        Some(SideResult {
            length,
            score: scores[winner],
        })
    }

    /// Whether the two halves of the candidate cycle look the same, which
    /// would make the shortened length itself a doubled sub-cycle.
    fn halves_alike(&self, series: &TimeSeries, position: f64, length: f64, side: Side, grid: usize) -> bool {
        let start = pair_start(series.frames(), position, length, side);
        let cycle_start = match side {
            Side::Prev => start + length,
            Side::Next => start,
        };
        let half = length / 2.0;
        segment_ncc(series, cycle_start, cycle_start + half, half, grid) >= SUBCYCLE_LIMIT
    }

    /// Parabolic interpolation over the winning anchor and its neighbours.
    /// End anchors get a mirrored neighbour at the same length ratio.
    fn refine_peak(
        &self,
        lengths: &[f64],
        scores: &[f64],
        winner: usize,
        score_at: &dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
    ) -> f64 {
        let center = lengths[winner];
        let neighbour = |idx: Option<usize>, other: Option<usize>| -> Option<(f64, f64)> {
            match idx {
                Some(i) if lengths[i] != center => Some((lengths[i], scores[i])),
                _ => {
                    let o = lengths[other?];
                    if o == center {
                        return None;
                    }
                    let x = (center * center / o).clamp(lo, hi);
                    (x != center).then(|| (x, score_at(x)))
                }
            }
        };
        let below = winner.checked_sub(1);
        let above = (winner + 1 < lengths.len()).then_some(winner + 1);
        let (Some(left), Some(right)) = (neighbour(below, above), neighbour(above, below)) else {
            return center;
        };
        let (x0, x2) = if left.0 < right.0 { (left, right) } else { (right, left) };
        let coarse = match parabola_vertex([x0, (center, scores[winner]), x2]) {
            Some(v) if v.is_finite() => v.clamp(x0.0, x2.0),
            _ => center,
        };
        // anchor spacing is wide next to a sharp peak; re-fit on tighter brackets
        FINE_BRACKETS
            .iter()
            .fold(coarse, |x, &rel| fine_peak(x, rel, score_at, lo, hi))
    }
}

impl DoubleCycleRegressor for CorrelationEstimator {
    fn regress(
        &self,
        series: &TimeSeries,
        position: f64,
        dc: &DoubleCycle,
        cfg: &PipelineConfig,
    ) -> Result<RegressorOutput> {
        let n = series.frames();
        let dc = clamp_cycle(*dc, cfg, n);
        let mut per_anchor = Vec::with_capacity(2 * cfg.anchor_scales.len());
        let prev = self.estimate_side(series, position, dc.tp, Side::Prev, cfg, &mut per_anchor);
        let next = self.estimate_side(series, position, dc.tn, Side::Next, cfg, &mut per_anchor);
        let (Some(prev), Some(next)) = (prev, next) else {
            return Ok(RegressorOutput {
                refined: dc,
                confidence: 0.0,
                per_anchor,
            });
        };
        let conf = |s: f64| ((s + 1.0) / 2.0).clamp(0.0, 1.0);
        Ok(RegressorOutput {
            refined: clamp_cycle(DoubleCycle::new(prev.length, next.length), cfg, n),
            confidence: (conf(prev.score) + conf(next.score)) / 2.0,
            per_anchor,
        })
    }

    fn name(&self) -> &str {
        "correlation"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_recovers_known_peak() {
        let f = |x: f64| -(x - 3.2) * (x - 3.2) + 5.0;
        let v = parabola_vertex([(1.0, f(1.0)), (2.5, f(2.5)), (6.0, f(6.0))]).unwrap();
        assert!((v - 3.2).abs() < 1e-12);
        assert!(parabola_vertex([(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]).is_none());
    }

    #[test]
    fn ncc_of_constant_is_zero() {
        assert_eq!(ncc(&[1.0; 8], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]), 0.0);
        let a = [0.0, 1.0, 0.0, -1.0];
        assert!((ncc(&a, &a) - 1.0).abs() < 1e-12);
        let b: Vec<f64> = a.iter().map(|x| -3.0 * x).collect();
        assert!((ncc(&a, &b) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn a_ramp_cut_in_two_does_not_match_itself() {
        // halves of a long ramp: identical shape, offset level
        let ramp: Vec<f64> = (0..64).map(|i| i as f64).collect();
        assert!((ncc(&ramp[..32], &ramp[32..]) + 0.5).abs() < 1e-3);
    }

    #[test]
    fn pairs_shift_inward_at_edges() {
        assert_eq!(pair_start(100, 50.0, 10.0, Side::Prev), 31.0);
        assert_eq!(pair_start(100, 50.0, 10.0, Side::Next), 51.0);
        assert_eq!(pair_start(100, 5.0, 10.0, Side::Prev), 1.0);
        assert_eq!(pair_start(100, 95.0, 10.0, Side::Next), 81.0);
    }
}
