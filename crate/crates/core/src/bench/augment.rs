//! Dense training targets from sparse repetition marks.

use super::dataset::Annotation;
use crate::error::{Error, Result};
use crate::types::DoubleCycle;

/// Default relative variation below which two consecutive cycles are
/// treated as periodic and interpolated.
pub const DEFAULT_VARIATION_THRESHOLD: f64 = 0.3;

/// `|a - b|` over the mean of `a` and `b`.
pub fn cycle_variation(a: f64, b: f64) -> f64 {
    (a - b).abs() / ((a + b) / 2.0)
}

/// Expands marks into per-frame double-cycle targets.
///
/// Each pair of consecutive cycles whose variation is under `threshold`
/// yields a target for every integer frame of the two cycles, with the cycle
/// length interpolated linearly from the first cycle's length at its start
/// to the second's at its end. A frame covered by two pairs takes the
/// earlier pair. Pairs at or over the threshold contribute a single target
/// at the mark they share. Output is sorted by frame.
pub fn interpolate_annotation(ann: &Annotation, threshold: f64) -> Result<Vec<(f64, DoubleCycle)>> {
    let marks = &ann.marks;
    if marks.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "interpolation needs at least 3 marks, {} has {}",
            ann.id,
            marks.len()
        )));
    }
    let lengths: Vec<f64> = marks.windows(2).map(|w| w[1] - w[0]).collect();
    let mut out: Vec<(f64, DoubleCycle)> = Vec::new();
    for j in 0..lengths.len() - 1 {
        let (a, b) = (lengths[j], lengths[j + 1]);
        if cycle_variation(a, b) < threshold {
            let (start, end) = (marks[j], marks[j + 2]);
            let mut t = start.ceil();
            while t < end {
                let l = a + (b - a) * (t - start) / (end - start);
                out.push((t, DoubleCycle::uniform(l)));
                t += 1.0;
            }
        } else {
            out.push((marks[j + 1], DoubleCycle::new(a, b)));
        }
    }
    // stable sort keeps the earlier pair first among equal frames
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out.dedup_by(|later, earlier| later.0 == earlier.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::count_dense;
    use proptest::prelude::*;

    fn ann(marks: &[f64]) -> Annotation {
        let end = *marks.last().unwrap();
        Annotation::from_marks("a", (marks[0], end), marks.to_vec()).unwrap()
    }

    fn at(targets: &[(f64, DoubleCycle)], frame: f64) -> Option<DoubleCycle> {
        targets.iter().find(|(t, _)| *t == frame).map(|(_, dc)| *dc)
    }

    #[test]
    fn constant_cycles_interpolate_to_themselves() {
        let t = interpolate_annotation(&ann(&[0.0, 10.0, 20.0]), 0.3).unwrap();
        assert_eq!(t.len(), 20);
        assert_eq!(at(&t, 5.0), Some(DoubleCycle::uniform(10.0)));
    }

    #[test]
    fn large_variation_keeps_only_the_mark() {
        assert!((cycle_variation(10.0, 14.0) - 4.0 / 12.0).abs() < 1e-12);
        let t = interpolate_annotation(&ann(&[0.0, 10.0, 24.0]), 0.3).unwrap();
        assert_eq!(t, vec![(10.0, DoubleCycle::new(10.0, 14.0))]);
    }

    #[test]
    fn small_variation_interpolates_linearly() {
        assert!(cycle_variation(10.0, 12.0) < 0.3);
        let t = interpolate_annotation(&ann(&[0.0, 10.0, 22.0]), 0.3).unwrap();
        assert_eq!(at(&t, 11.0), Some(DoubleCycle::uniform(11.0)));
        assert_eq!(at(&t, 0.0), Some(DoubleCycle::uniform(10.0)));
    }

    #[test]
    fn too_few_marks() {
        assert!(interpolate_annotation(&ann(&[0.0, 10.0]), 0.3).is_err());
    }

    #[test]
    fn frames_are_unique_and_sorted() {
        let t = interpolate_annotation(&ann(&[1.0, 11.0, 22.0, 34.0, 60.0]), 0.3).unwrap();
        assert!(t.windows(2).all(|w| w[0].0 < w[1].0));
        // the last pair (12, 26) is not interpolated and only adds its shared mark
        assert_eq!(*t.last().unwrap(), (34.0, DoubleCycle::new(12.0, 26.0)));
        assert_eq!(t[t.len() - 2].0, 33.0);
    }

    proptest! {
        #[test]
        fn interpolated_targets_count_the_marks(
            base in 6.0f64..40.0,
            steps in prop::collection::vec(-0.08f64..0.08, 3..15),
        ) {
            let mut marks = vec![1.0];
            let mut len = base;
            for s in &steps {
                len *= 1.0 + s;
                let next = marks.last().unwrap() + len.round().max(4.0);
                marks.push(next);
            }
            let a = ann(&marks);
            let t = interpolate_annotation(&a, 0.3).unwrap();
            let per_frame: Vec<DoubleCycle> = t.iter().map(|(_, dc)| *dc).collect();
            let n = per_frame.len();
            prop_assert_eq!(n as f64, marks.last().unwrap() - marks[0]);
            let c = count_dense(&per_frame, n).unwrap();
            prop_assert!((c - a.count).abs() <= 1.0, "count {} vs {}", c, a.count);
        }
    }
}
