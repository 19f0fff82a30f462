//! Interval geometry for multi-anchor double-cycle regression.
//!
//! Each side of a double-cycle gets one anchor per scale. An anchor is
//! labeled positive when its IoU with the ground-truth cycle exceeds the
//! threshold, and regression targets use the center-offset / log-length
//! parameterization familiar from two-stage object detectors.

use crate::error::{Error, Result};
use crate::types::{DoubleCycle, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// The cycle ending at the anchor position.
    Prev,
    /// The cycle starting right after the anchor position.
    Next,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Prev, Side::Next];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Prev => "prev",
            Side::Next => "next",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionTarget {
    /// Center offset in units of the anchor length.
    pub t_x: f64,
    /// Log of the length ratio.
    pub t_l: f64,
}

impl RegressionTarget {
    pub const ZERO: RegressionTarget = RegressionTarget { t_x: 0.0, t_l: 0.0 };

    pub fn new(t_x: f64, t_l: f64) -> Self {
        RegressionTarget { t_x, t_l }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorLabel {
    Negative = 0,
    Positive = 1,
}

impl AnchorLabel {
    pub fn is_positive(self) -> bool {
        self == AnchorLabel::Positive
    }
}

/// Pre-softmax two-class logits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub negative: f64,
    pub positive: f64,
}

impl ClassScore {
    pub fn new(negative: f64, positive: f64) -> Self {
        ClassScore { negative, positive }
    }

    /// Softmax probability of the positive class.
    pub fn positive_probability(&self) -> f64 {
        1.0 / (1.0 + (self.negative - self.positive).exp())
    }
}

/// Intersection-over-union of two intervals on the real line.
pub fn interval_iou(a: &Interval, b: &Interval) -> f64 {
    let inter = (a.end().min(b.end()) - a.start.max(b.start)).max(0.0);
    let union = a.length + b.length - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// One interval per side and scale: the previous-side anchor ends at
/// `position` (inclusive), the next-side anchor starts at `position + 1`.
/// Prev anchors come first, in scale order.
pub fn anchor_intervals(position: f64, dc: &DoubleCycle, scales: &[f64]) -> Vec<(Side, Interval)> {
    let prev = scales.iter().map(|s| {
        let len = s * dc.tp;
        (
            Side::Prev,
            Interval {
                start: position - len + 1.0,
                length: len,
            },
        )
    });
    let next = scales.iter().map(|s| {
        (
            Side::Next,
            Interval {
                start: position + 1.0,
                length: s * dc.tn,
            },
        )
    });
    prev.chain(next).collect()
}

pub fn encode_target(anchor: &Interval, gt: &Interval) -> Result<RegressionTarget> {
    if !(anchor.length > 0.0 && gt.length > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "interval lengths must be positive (anchor {}, gt {})",
            anchor.length, gt.length
        )));
    }
    Ok(RegressionTarget {
        t_x: (gt.center() - anchor.center()) / anchor.length,
        t_l: (gt.length / anchor.length).ln(),
    })
}

pub fn decode_prediction(anchor: &Interval, t: &RegressionTarget) -> Interval {
    let center = anchor.center() + t.t_x * anchor.length;
    let length = anchor.length * t.t_l.exp();
    Interval {
        start: center - length / 2.0,
        length,
    }
}

/// Positive iff the IoU strictly exceeds `threshold`.
pub fn assign_label(anchor: &Interval, gt: &Interval, threshold: f64) -> AnchorLabel {
    label_for_iou(interval_iou(anchor, gt), threshold)
}

pub fn label_for_iou(iou: f64, threshold: f64) -> AnchorLabel {
    if iou > threshold {
        AnchorLabel::Positive
    } else {
        AnchorLabel::Negative
    }
}

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

/// `-ln softmax(score)[label]`, computed without overflow.
pub fn softmax_ce(score: &ClassScore, label: AnchorLabel) -> f64 {
    let gap = match label {
        AnchorLabel::Positive => score.negative - score.positive,
        AnchorLabel::Negative => score.positive - score.negative,
    };
    softplus(gap)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Network outputs and targets for one side's anchors, aligned by index.
#[derive(Debug, Clone, Default)]
pub struct SideTerms {
    pub scores: Vec<ClassScore>,
    pub predicted: Vec<RegressionTarget>,
    pub targets: Vec<RegressionTarget>,
    pub labels: Vec<AnchorLabel>,
}

impl SideTerms {
    fn check_aligned(&self) -> Result<usize> {
        let n = self.scores.len();
        for len in [self.predicted.len(), self.targets.len(), self.labels.len()] {
            if len != n {
                return Err(Error::LengthMismatch { left: n, right: len });
            }
        }
        if n == 0 {
            return Err(Error::LengthMismatch { left: 0, right: 0 });
        }
        Ok(n)
    }

    fn classification(&self) -> f64 {
        self.scores
            .iter()
            .zip(&self.labels)
            .map(|(s, l)| softmax_ce(s, *l))
            .sum()
    }

    /// Smooth-L1 residual summed over positive anchors, and their count.
    fn regression(&self) -> (f64, usize) {
        self.predicted
            .iter()
            .zip(&self.targets)
            .zip(&self.labels)
            .filter(|(_, l)| l.is_positive())
            .fold((0.0, 0), |(acc, n), ((p, t), _)| {
                let r = smooth_l1(p.t_x - t.t_x) + smooth_l1(p.t_l - t.t_l);
                (acc + r, n + 1)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
    /// Classification averaged over anchors, regression over positive anchors.
    Mean,
}

/// Classification cross-entropy on both sides plus `lambda` times the
/// smooth-L1 regression loss, the latter restricted to positive anchors.
pub fn total_loss(prev: &SideTerms, next: &SideTerms, lambda: f64, reduction: Reduction) -> Result<f64> {
    let n_prev = prev.check_aligned()?;
    let n_next = next.check_aligned()?;
    let mut cls = 0.0;
    let mut reg = 0.0;
    for (side, n) in [(prev, n_prev), (next, n_next)] {
        let c = side.classification();
        let (r, positives) = side.regression();
        match reduction {
            Reduction::Sum => {
                cls += c;
                reg += r;
            }
            Reduction::Mean => {
                cls += c / n as f64;
                if positives > 0 {
                    reg += r / positives as f64;
                }
            }
        }
    }
    Ok(cls + lambda * reg)
}

/// Labels and regression targets for every anchor around `position` against
/// a ground-truth double-cycle at the same position.
pub fn training_targets(
    position: f64,
    current: &DoubleCycle,
    truth: &DoubleCycle,
    scales: &[f64],
    threshold: f64,
) -> Result<Vec<(Side, AnchorLabel, RegressionTarget)>> {
    let gt = anchor_intervals(position, truth, &[1.0]);
    anchor_intervals(position, current, scales)
        .into_iter()
        .map(|(side, anchor)| {
            let g = if side == Side::Prev { &gt[0].1 } else { &gt[1].1 };
            let target = encode_target(&anchor, g)?;
            Ok((side, assign_label(&anchor, g, threshold), target))
        })
        .collect()
}
