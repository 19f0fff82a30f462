//! Batch evaluation over a manifest and report rendering.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::{Duration, Instant};

use super::dataset::{Annotation, Manifest};
use super::metrics::{mean_std, off_by_one, relative_error};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::estimator::{CorrelationEstimator, DoubleCycleRegressor, ReplayEstimator, ReplayTable};
use crate::io::read_series;
use crate::refine::{run_pipeline_with, Execution};
use crate::synth::{gt_double_cycles, speed_up, GroundTruth};
use crate::types::TimeSeries;

/// Which estimator drives the pipeline during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorChoice {
    #[default]
    Correlation,
    /// Replays each sequence's own annotated cycles. Needs marks.
    Oracle,
}

impl FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "correlation" => Ok(EstimatorChoice::Correlation),
            "oracle" | "replay" => Ok(EstimatorChoice::Oracle),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

impl EstimatorChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorChoice::Correlation => "correlation",
            EstimatorChoice::Oracle => "oracle",
        }
    }
}

/// A series paired with its annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub series: TimeSeries,
    pub annotation: Annotation,
}

impl Sequence {
    pub fn new(series: TimeSeries, annotation: Annotation) -> Self {
        Sequence { series, annotation }
    }

    /// The annotated interval `[start, end)` cut out of the series, with
    /// marks shifted to the cropped frame numbering.
    pub fn cropped(&self) -> Result<Sequence> {
        let (start, end) = self.annotation.interval;
        let first = (start.ceil() as usize).max(1);
        let last = ((end.ceil() as usize).saturating_sub(1)).min(self.series.frames());
        if last < first {
            return Err(Error::InvalidArgument(format!(
                "interval ({start}, {end}) selects no frames of {}",
                self.annotation.id
            )));
        }
        if first == 1 && last == self.series.frames() {
            return Ok(self.clone());
        }
        let shift = (first - 1) as f64;
        let series = self.series.crop(first, last)?;
        let annotation = Annotation {
            interval: (start - shift, end - shift),
            marks: self.annotation.marks.iter().map(|m| m - shift).collect(),
            ..self.annotation.clone()
        };
        Ok(Sequence { series, annotation })
    }

    /// Speeds the sequence up by stride decimation, annotation included.
    pub fn sped_up(&self, factor: usize) -> Result<Sequence> {
        let gt = self
            .annotation
            .ground_truth()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no marks to speed up", self.annotation.id)))?;
        let (series, fast_gt) = speed_up(&self.series, &gt, factor)?;
        let map = |b: f64| ((b - 1.0) / factor as f64).ceil() + 1.0;
        let (s, e) = self.annotation.interval;
        let annotation = Annotation::from_marks(self.annotation.id.clone(), (map(s), map(e)), fast_gt.boundaries)?;
        Ok(Sequence { series, annotation })
    }
}

/// Loads every series of the manifest; failures stay per-sequence.
pub fn load_sequences(manifest: &Manifest) -> Vec<(String, Result<Sequence>)> {
    manifest
        .entries
        .iter()
        .map(|e| {
            let id = e.annotation.id.clone();
            let seq = read_series(&e.series_path).map(|s| Sequence::new(s.with_id(id.clone()), e.annotation.clone()));
            (id, seq)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub truth: f64,
    /// `Err` holds the failure message.
    pub outcome: std::result::Result<Prediction, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub count: f64,
    pub abs_rel_error: f64,
    pub off_by_one: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub dataset: String,
    pub estimator: String,
    pub config: String,
    /// Sorted by id.
    pub rows: Vec<ReportRow>,
    pub mae: f64,
    pub mae_std: f64,
    pub oboa: f64,
    pub runtime: Duration,
}

impl Report {
    pub fn from_rows(
        dataset: &str,
        estimator: &str,
        cfg: &PipelineConfig,
        mut rows: Vec<ReportRow>,
        runtime: Duration,
    ) -> Report {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let ok: Vec<&Prediction> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let (mae, mae_std, oboa) = if ok.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let errors: Vec<f64> = ok.iter().map(|p| p.abs_rel_error).collect();
            let (m, s) = mean_std(&errors);
            let hits = ok.iter().filter(|p| p.off_by_one).count();
            (m, s, hits as f64 / ok.len() as f64)
        };
        Report {
            dataset: dataset.to_string(),
            estimator: estimator.to_string(),
            config: cfg.to_string(),
            rows,
            mae,
            mae_std,
            oboa,
            runtime,
        }
    }

    pub fn evaluated(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_ok()).count()
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.evaluated()
    }

    /// Machine-readable table. Deterministic: excludes wall-clock runtime.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# dataset={}", self.dataset).unwrap();
        writeln!(out, "# estimator={}", self.estimator).unwrap();
        writeln!(out, "# config={}", self.config).unwrap();
        writeln!(out, "# mae_std is the population std of per-sequence relative errors").unwrap();
        writeln!(out, "id,truth,predicted,abs_rel_error,off_by_one,status").unwrap();
        for r in &self.rows {
            match &r.outcome {
                Ok(p) => writeln!(
                    out,
                    "{},{},{},{},{},ok",
                    r.id,
                    r.truth,
                    p.count,
                    p.abs_rel_error,
                    u8::from(p.off_by_one)
                ),
                Err(msg) => writeln!(out, "{},{},,,,failed: {}", r.id, r.truth, msg.replace(',', ";")),
            }
            .unwrap();
        }
        writeln!(
            out,
            "# summary,sequences={},failed={},mae={},mae_std={},oboa={}",
            self.rows.len(),
            self.failed(),
            self.mae,
            self.mae_std,
            self.oboa
        )
        .unwrap();
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{} [{}]: {} sequences ({} failed)  MAE {:.4} ± {:.4}  OBOA {:.3}  in {:.2?}",
            self.dataset,
            self.estimator,
            self.rows.len(),
            self.failed(),
            self.mae,
            self.mae_std,
            self.oboa,
            self.runtime
        )
    }
}

fn estimator_for(choice: EstimatorChoice, seq: &Sequence) -> Result<Box<dyn DoubleCycleRegressor>> {
    Ok(match choice {
        EstimatorChoice::Correlation => Box::new(CorrelationEstimator::new()),
        EstimatorChoice::Oracle => {
            let gt: GroundTruth = seq
                .annotation
                .ground_truth()
                .ok_or_else(|| Error::InvalidArgument(format!("{} has no marks for the oracle", seq.annotation.id)))?;
            let table = ReplayTable::from_per_frame(&gt_double_cycles(&gt, seq.series.frames()))?;
            Box::new(ReplayEstimator::new(table))
        }
    })
}

/// Counts one sequence within its annotated interval.
pub fn count_sequence(seq: &Sequence, choice: EstimatorChoice, cfg: &PipelineConfig) -> Result<f64> {
    let cropped = seq.cropped()?;
    let estimator = estimator_for(choice, &cropped)?;
    // positions of one sequence run serially; parallelism happens across sequences
    let (_, count) = run_pipeline_with(&cropped.series, &estimator, cfg, Execution::Serial)?;
    Ok(count.count)
}

fn row_for(id: &str, truth: f64, result: Result<f64>) -> ReportRow {
    let outcome = result.and_then(|count| {
        Ok(Prediction {
            count,
            abs_rel_error: relative_error(count, truth)?,
            off_by_one: off_by_one(count, truth),
        })
    });
    ReportRow {
        id: id.to_string(),
        truth,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Evaluates already-loaded sequences. Loading failures may be passed in
/// as `Err` and are reported without aborting the batch.
pub fn evaluate_sequences(
    dataset: &str,
    sequences: &[(String, Result<Sequence>)],
    choice: EstimatorChoice,
    cfg: &PipelineConfig,
    execution: Execution,
) -> Report {
    let started = Instant::now();
    let one = |(id, seq): &(String, Result<Sequence>)| match seq {
        Ok(s) => row_for(id, s.annotation.count, count_sequence(s, choice, cfg)),
        Err(e) => ReportRow {
            id: id.clone(),
            truth: f64::NAN,
            outcome: Err(e.to_string()),
        },
    };
    let rows = map_rows(sequences, one, execution);
    Report::from_rows(dataset, choice.as_str(), cfg, rows, started.elapsed())
}

fn map_rows<T: Sync, F>(items: &[T], f: F, execution: Execution) -> Vec<ReportRow>
where
    F: Fn(&T) -> ReportRow + Sync + Send,
{
    match execution {
        Execution::Serial => items.iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => items.iter().map(f).collect(),
    }
}

/// Loads and evaluates a whole manifest.
pub fn evaluate(manifest: &Manifest, choice: EstimatorChoice, cfg: &PipelineConfig, execution: Execution) -> Report {
    let sequences = load_sequences(manifest);
    evaluate_sequences(&manifest.name, &sequences, choice, cfg, execution)
}

/// Evaluates the sequences at each speed-up factor. Sequences that cannot
/// be sped up by a factor are reported as failures in that factor's report.
pub fn speed_experiment(
    dataset: &str,
    sequences: &[(String, Result<Sequence>)],
    factors: &[usize],
    choice: EstimatorChoice,
    cfg: &PipelineConfig,
    execution: Execution,
) -> Vec<(usize, Report)> {
    factors
        .iter()
        .map(|&factor| {
            let fast: Vec<(String, Result<Sequence>)> = sequences
                .iter()
                .map(|(id, seq)| {
                    let sped = match seq {
                        Ok(s) => s.sped_up(factor),
                        Err(e) => Err(Error::InvalidArgument(e.to_string())),
                    };
                    (id.clone(), sped)
                })
                .collect();
            let name = format!("{dataset}@{factor}x");
            (factor, evaluate_sequences(&name, &fast, choice, cfg, execution))
        })
        .collect()
}

/// Per-factor MAE/OBOA table.
pub fn speed_table(reports: &[(usize, Report)]) -> String {
    let mut out = String::from("factor,sequences,failed,mae,mae_std,oboa\n");
    for (f, r) in reports {
        writeln!(
            out,
            "{f},{},{},{},{},{}",
            r.rows.len(),
            r.failed(),
            r.mae,
            r.mae_std,
            r.oboa
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    fn synthetic(seed: u64, base: f64) -> (String, Result<Sequence>) {
        let spec = SynthSpec {
            base_cycle: base,
            cycles: 12,
            seed,
            ..SynthSpec::default()
        };
        let (series, gt) = generate(&spec).unwrap();
        let ann = Annotation::from_ground_truth(spec.id(), &gt).unwrap();
        (spec.id(), Ok(Sequence::new(series, ann)))
    }

    #[test]
    fn cropping_shifts_marks() {
        let (_, seq) = synthetic(1, 16.0);
        let mut seq = seq.unwrap();
        seq.annotation =
            Annotation::from_marks("x", (17.0, 161.0), (1..=10).map(|k| 1.0 + 16.0 * k as f64).collect()).unwrap();
        let c = seq.cropped().unwrap();
        assert_eq!(c.series.frames(), 144);
        assert_eq!(c.annotation.marks[0], 1.0);
        assert_eq!(c.annotation.interval, (1.0, 145.0));
        assert_eq!(c.series.row(1), seq.series.row(17));
    }

    #[test]
    fn oracle_evaluation_is_within_one() {
        let seqs: Vec<_> = (0..3).map(|i| synthetic(i, 10.0 + 5.0 * i as f64)).collect();
        let report = evaluate_sequences(
            "t",
            &seqs,
            EstimatorChoice::Oracle,
            &PipelineConfig::default(),
            Execution::Serial,
        );
        assert_eq!(report.failed(), 0);
        assert_eq!(report.oboa, 1.0);
    }

    #[test]
    fn failures_are_flagged_and_excluded() {
        let mut seqs: Vec<_> = vec![synthetic(0, 16.0)];
        seqs.push(("broken".into(), Err(Error::Estimation("boom".into()))));
        let report = evaluate_sequences(
            "t",
            &seqs,
            EstimatorChoice::Oracle,
            &PipelineConfig::default(),
            Execution::Serial,
        );
        assert_eq!(report.failed(), 1);
        assert_eq!(report.evaluated(), 1);
        assert!(report
            .to_csv()
            .contains("broken,NaN,,,,failed: estimation failed: boom"));
        assert!(report.mae.is_finite());
    }

    #[test]
    fn csv_aggregates_recompute_from_rows() {
        let seqs: Vec<_> = (0..4).map(|i| synthetic(i, 9.0 + 7.0 * i as f64)).collect();
        let report = evaluate_sequences(
            "t",
            &seqs,
            EstimatorChoice::Correlation,
            &PipelineConfig::default(),
            Execution::Serial,
        );
        let csv = report.to_csv();
        let rows: Vec<Vec<&str>> = csv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("id,"))
            .map(|l| l.split(',').collect())
            .collect();
        let preds: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        let truths: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        let (m, s) = crate::bench::mae(&preds, &truths).unwrap();
        assert_eq!(m, report.mae);
        assert_eq!(s, report.mae_std);
        assert_eq!(crate::bench::oboa(&preds, &truths).unwrap(), report.oboa);
    }

    #[test]
    fn unit_speed_matches_plain_evaluation() {
        let seqs: Vec<_> = (0..3).map(|i| synthetic(i, 16.0 + 4.0 * i as f64)).collect();
        let cfg = PipelineConfig::default();
        let plain = evaluate_sequences("t", &seqs, EstimatorChoice::Correlation, &cfg, Execution::Serial);
        let speed = speed_experiment(
            "t",
            &seqs,
            &[1, 2],
            EstimatorChoice::Correlation,
            &cfg,
            Execution::Serial,
        );
        assert_eq!(speed[0].1.rows, plain.rows);
        assert_eq!(speed[1].1.rows.len(), 3);
        assert!(speed_table(&speed).starts_with("factor,sequences,failed,mae,mae_std,oboa\n1,3,0,"));
    }

    #[test]
    fn speed_precondition_failures_are_per_sequence() {
        let seqs = vec![synthetic(0, 8.0), synthetic(1, 32.0)];
        let speed = speed_experiment(
            "t",
            &seqs,
            &[4],
            EstimatorChoice::Correlation,
            &PipelineConfig::default(),
            Execution::Serial,
        );
        assert_eq!(speed[0].1.failed(), 1);
        assert_eq!(speed[0].1.evaluated(), 1);
    }
}
