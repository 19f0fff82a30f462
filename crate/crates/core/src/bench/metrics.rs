//! Counting accuracy metrics.

use crate::error::{Error, Result};

fn check(predictions: &[f64], truths: &[f64]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one sequence".into()));
    }
    Ok(())
}

/// Per-sequence relative error `|truth - prediction| / truth`.
pub fn relative_error(prediction: f64, truth: f64) -> Result<f64> {
    if !(truth > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ground-truth count must be positive, got {truth}"
        )));
    }
    Ok((truth - prediction).abs() / truth)
}

/// Mean absolute relative error and its population standard deviation.
pub fn mae(predictions: &[f64], truths: &[f64]) -> Result<(f64, f64)> {
    check(predictions, truths)?;
    let errors = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| relative_error(*p, *t))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&errors))
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Whether a prediction is within one repetition of the truth (unrounded).
pub fn off_by_one(prediction: f64, truth: f64) -> bool {
    (truth - prediction).abs() <= 1.0
}

/// Fraction of sequences whose count is off by at most one.
pub fn oboa(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    check(predictions, truths)?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| off_by_one(**p, **t))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn mae_examples() {
        let (m, s) = mae(&[12.0, 20.0], &[10.0, 20.0]).unwrap();
        assert_relative_eq!(m, 0.1);
        assert_relative_eq!(s, 0.1);
        assert_eq!(mae(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), (0.0, 0.0));
        assert_eq!(mae(&[5.0], &[10.0]).unwrap().0, 0.5);
    }

    #[test]
    fn mae_errors() {
        assert!(matches!(mae(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch { .. })));
        assert!(mae(&[1.0], &[0.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    #[test]
    fn oboa_examples() {
        assert_eq!(oboa(&[12.0, 20.0], &[10.0, 20.0]).unwrap(), 0.5);
        assert_eq!(oboa(&[11.0], &[10.0]).unwrap(), 1.0);
        assert_eq!(oboa(&[9.0, 4.0], &[9.0, 4.0]).unwrap(), 1.0);
        assert_eq!(oboa(&[11.0001], &[10.0]).unwrap(), 0.0);
        assert!(oboa(&[1.0], &[]).is_err());
    }

    fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..100.0, 1.0f64..100.0), 1..20)
    }

    proptest! {
        #[test]
        fn metrics_are_permutation_invariant(mut rows in pairs(), rot in 0usize..20) {
            let (p, t): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
            let before = (mae(&p, &t).unwrap().0, oboa(&p, &t).unwrap());
            let k = rot % rows.len();
            rows.rotate_left(k);
            rows.reverse();
            let (p, t): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
            prop_assert!((mae(&p, &t).unwrap().0 - before.0).abs() < 1e-12);
            prop_assert_eq!(oboa(&p, &t).unwrap(), before.1);
        }

        #[test]
        fn doubling_gaps_doubles_mae(rows in pairs()) {
            let (p, t): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
            let wide: Vec<f64> = p.iter().zip(&t).map(|(p, t)| t + 2.0 * (p - t)).collect();
            let a = mae(&p, &t).unwrap().0;
            let b = mae(&wide, &t).unwrap().0;
            prop_assert!((b - 2.0 * a).abs() <= 1e-9 * (1.0 + a));
        }

        #[test]
        fn improving_a_prediction_never_lowers_oboa(rows in pairs(), idx in 0usize..20, frac in 0.0f64..=1.0) {
            let (mut p, t): (Vec<f64>, Vec<f64>) = rows.iter().copied().unzip();
            let before = oboa(&p, &t).unwrap();
            let i = idx % p.len();
            p[i] = t[i] + (p[i] - t[i]) * frac;
            prop_assert!(oboa(&p, &t).unwrap() >= before);
        }
    }
}
