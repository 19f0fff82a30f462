use std::path::Path;

use super::{DoubleCycleRegressor, RegressorOutput};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::types::{DoubleCycle, TimeSeries};

/// Recorded double-cycles keyed by frame position.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTable {
    /// Sorted by position, no duplicates.
    entries: Vec<(f64, DoubleCycle)>,
}

impl ReplayTable {
    pub fn new(mut entries: Vec<(f64, DoubleCycle)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("replay table must not be empty".into()));
        }
        if entries.iter().any(|(p, dc)| !p.is_finite() || !dc.is_finite()) {
            return Err(Error::InvalidArgument("replay table holds non-finite values".into()));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("replay table repeats a position".into()));
        }
        Ok(ReplayTable { entries })
    }

    /// One entry per frame, positions `1..=len`.
    pub fn from_per_frame(per_frame: &[DoubleCycle]) -> Result<Self> {
        Self::new(
            per_frame
                .iter()
                .enumerate()
                .map(|(i, dc)| ((i + 1) as f64, *dc))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, DoubleCycle)] {
        &self.entries
    }

    /// Entry closest to `position`; the lower position wins ties.
    pub fn lookup(&self, position: f64) -> DoubleCycle {
        let idx = self.entries.partition_point(|(p, _)| *p < position);
        let candidates = [idx.checked_sub(1), (idx < self.entries.len()).then_some(idx)];
        candidates
            .into_iter()
            .flatten()
            .min_by(|&a, &b| {
                let da = (self.entries[a].0 - position).abs();
                let db = (self.entries[b].0 - position).abs();
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .map(|i| self.entries[i].1)
            .expect("table is non-empty")
    }

    /// Parses `position,tp,tn` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Error::parse(path, idx + 1, format!("bad number in {line:?}")))?;
            let [position, tp, tn] = fields[..] else {
                return Err(Error::parse(path, idx + 1, "expected `position,tp,tn`"));
            };
            entries.push((position, DoubleCycle::new(tp, tn)));
        }
        Self::new(entries).map_err(|e| Error::parse(path, 1, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(p, dc)| format!("{p},{},{}\n", dc.tp, dc.tn))
            .collect()
    }
}

/// Returns the table's double-cycle nearest the queried position with full
/// confidence, ignoring the incoming estimate.
#[derive(Debug, Clone)]
pub struct ReplayEstimator {
    pub table: ReplayTable,
}

impl ReplayEstimator {
    pub fn new(table: ReplayTable) -> Self {
        ReplayEstimator { table }
    }
}

impl DoubleCycleRegressor for ReplayEstimator {
    fn regress(&self, _: &TimeSeries, position: f64, _: &DoubleCycle, _: &PipelineConfig) -> Result<RegressorOutput> {
        Ok(RegressorOutput::new(self.table.lookup(position), 1.0))
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ReplayTable {
        ReplayTable::new(vec![
            (150.0, DoubleCycle::uniform(20.0)),
            (50.0, DoubleCycle::uniform(10.0)),
        ])
        .unwrap()
    }

    #[test]
    fn nearest_lookup() {
        assert_eq!(table().lookup(60.0), DoubleCycle::uniform(10.0));
        assert_eq!(table().lookup(140.0), DoubleCycle::uniform(20.0));
        assert_eq!(table().lookup(1e6), DoubleCycle::uniform(20.0));
    }

    #[test]
    fn ties_go_to_the_lower_position() {
        assert_eq!(table().lookup(100.0), DoubleCycle::uniform(10.0));
    }

    #[test]
    fn single_entry_answers_everything() {
        let t = ReplayTable::new(vec![(100.0, DoubleCycle::uniform(16.0))]).unwrap();
        for p in [1.0, 100.0, 400.0] {
            assert_eq!(t.lookup(p), DoubleCycle::uniform(16.0));
        }
    }

    #[test]
    fn estimator_reports_full_confidence() {
        let series = TimeSeries::new("z", 25.0, 1, vec![0.0; 200]).unwrap();
        let t = ReplayTable::new(vec![(100.0, DoubleCycle::uniform(16.0))]).unwrap();
        let out = ReplayEstimator::new(t)
            .regress(&series, 100.0, &DoubleCycle::uniform(40.0), &PipelineConfig::default())
            .unwrap();
        assert_eq!(out.refined, DoubleCycle::uniform(16.0));
        assert_eq!(out.confidence, 1.0);
    }

    #[test]
    fn parses_and_rejects() {
        let p = Path::new("t.csv");
        let t = ReplayTable::parse("# pos,tp,tn\n50,10,10\n150, 20, 20\n", p).unwrap();
        assert_eq!(t, table());
        assert_eq!(ReplayTable::parse(&t.to_text(), p).unwrap(), t);
        assert!(matches!(
            ReplayTable::parse("50,10\n", p),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ReplayTable::parse("", p).is_err());
        assert!(ReplayTable::new(vec![]).is_err());
    }
}
