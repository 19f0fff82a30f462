//! Annotation and manifest files.
//!
//! Annotation file:
//!
//! ```text
//! <id>
//! <interval_start>,<interval_end>
//! <mark>
//! <mark>
//! ...
//! ```
//!
//! The interval is the half-open frame span `[start, end)` holding the
//! repetitions. Marks are repetitive-frame positions; `k + 1` marks delimit
//! `k` repetitions. A `count=<real>` line may replace or double-check the
//! marks.
//!
//! Manifest file: a `name,split` line, then `series_path,annotation_path`
//! rows. Relative paths resolve against the manifest's directory.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub id: String,
    pub interval: (f64, f64),
    pub marks: Vec<f64>,
    pub count: f64,
}

impl Annotation {
    /// Annotation from marks alone; the count follows from them.
    pub fn from_marks(id: impl Into<String>, interval: (f64, f64), marks: Vec<f64>) -> Result<Self> {
        let count = marks.len().saturating_sub(1) as f64;
        let ann = Annotation {
            id: id.into(),
            interval,
            marks,
            count,
        };
        ann.validate().map_err(|(_, m)| Error::InvalidArgument(m))?;
        Ok(ann)
    }

    /// Covers the whole of a synthetic sequence.
    pub fn from_ground_truth(id: impl Into<String>, gt: &GroundTruth) -> Result<Self> {
        let first = gt.boundaries[0];
        let last = *gt.boundaries.last().unwrap();
        Self::from_marks(id, (first, last), gt.boundaries.clone())
    }

    /// Checks the invariants; errors carry the offending line of the file form.
    fn validate(&self) -> std::result::Result<(), (usize, String)> {
        let (start, end) = self.interval;
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err((2, format!("interval ({start}, {end}) is empty or not finite")));
        }
        for (i, w) in self.marks.windows(2).enumerate() {
            if !(w[0] < w[1]) {
                return Err((i + 4, format!("mark {} is not after the previous mark {}", w[1], w[0])));
            }
        }
        if let Some(i) = self.marks.iter().position(|m| *m < start || *m > end) {
            return Err((i + 3, format!("mark {} lies outside the interval", self.marks[i])));
        }
        if !(self.count > 0.0) {
            return Err((1, format!("count must be positive, got {}", self.count)));
        }
        if !self.marks.is_empty() && self.count != (self.marks.len() - 1) as f64 {
            return Err((
                1,
                format!("count {} disagrees with {} marks", self.count, self.marks.len()),
            ));
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> Option<GroundTruth> {
        GroundTruth::new(self.marks.clone()).ok()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, id) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty annotation"))?;
        let (iv_line, iv) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 2, "missing interval line"))?;
        let (s, e) = iv
            .split_once(',')
            .ok_or_else(|| Error::parse(path, iv_line, "interval must be `start,end`"))?;
        let num = |v: &str, line: usize| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("bad number {:?}", v.trim())))
        };
        let interval = (num(s, iv_line)?, num(e, iv_line)?);

        let mut marks = Vec::new();
        let mut mark_lines = Vec::new();
        let mut count = None;
        let mut count_line = 1;
        for (line_no, line) in lines {
            if let Some(v) = line.strip_prefix("count=") {
                count = Some(num(v, line_no)?);
                count_line = line_no;
            } else {
                marks.push(num(line, line_no)?);
                mark_lines.push(line_no);
            }
        }
        let count = match count {
            Some(c) => c,
            None if marks.len() >= 2 => (marks.len() - 1) as f64,
            None => return Err(Error::invariant(path, 1, "annotation has neither marks nor a count")),
        };
        let ann = Annotation {
            id: id.to_string(),
            interval,
            marks,
            count,
        };
        ann.validate().map_err(|(slot, message)| {
            // map logical slots back to physical lines
            let line = match slot {
                1 if count_line > 1 => count_line,
                2 => iv_line,
                s if s >= 3 => mark_lines.get(s - 3).copied().unwrap_or(s),
                s => s,
            };
            Error::invariant(path, line, message)
        })?;
        Ok(ann)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{},{}\n", self.id, self.interval.0, self.interval.1);
        for m in &self.marks {
            writeln!(out, "{m}").unwrap();
        }
        if self.marks.is_empty() {
            writeln!(out, "count={}", self.count).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidArgument(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub series_path: PathBuf,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub split: Split,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Loads the manifest and every annotation it names, and checks that
    /// each series file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty manifest"))?;
        let (name, split) = header
            .split_once(',')
            .ok_or_else(|| Error::parse(path, hl, "header must be `name,split`"))?;
        let split = split
            .parse()
            .map_err(|e: Error| Error::parse(path, hl, e.to_string()))?;

        let mut entries = Vec::new();
        for (line_no, line) in lines {
            let (series, ann) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(path, line_no, "row must be `series_path,annotation_path`"))?;
            let series_path = base.join(series.trim());
            if !series_path.is_file() {
                return Err(Error::invariant(
                    path,
                    line_no,
                    format!("series file {} not found", series_path.display()),
                ));
            }
            let annotation = Annotation::load(&base.join(ann.trim()))?;
            entries.push(ManifestEntry {
                series_path,
                annotation,
            });
        }
        if entries.is_empty() {
            return Err(Error::invariant(path, hl, "manifest lists no sequences"));
        }
        Ok(Manifest {
            name: name.trim().to_string(),
            split,
            entries,
        })
    }
}

/// Manifest text for the given rows.
pub fn manifest_text(name: &str, split: Split, rows: &[(String, String)]) -> String {
    let mut out = format!("{name},{split}\n");
    for (s, a) in rows {
        writeln!(out, "{s},{a}").unwrap();
    }
    out
}
