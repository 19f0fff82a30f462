//! Pipeline configuration and its flat `key=value` file form.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Every tunable constant of the counting pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Number of coarse-to-fine stages (K).
    pub stages: usize,
    /// Samples per half window (M); windows hold 2M frames.
    pub half_window: usize,
    /// EMA decay applied to the running estimate.
    pub beta: f64,
    /// Anchor ratios applied to the current cycle estimate.
    pub anchor_scales: Vec<f64>,
    /// Number of candidate lengths in the first-stage search.
    pub search_scales: usize,
    pub min_cycle: f64,
    /// Upper cycle bound as a fraction of the series length.
    pub max_cycle_fraction: f64,
    /// Refinement rounds per stage; one entry per stage.
    pub refine_schedule: Vec<usize>,
    /// Regression loss weight.
    pub lambda: f64,
    /// IoU above which an anchor is labeled positive.
    pub iou_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: 5,
            half_window: 16,
            beta: 0.5,
            anchor_scales: vec![0.5, 0.66, 0.8, 1.0, 1.25, 1.5, 2.0],
            search_scales: 30,
            min_cycle: 4.0,
            max_cycle_fraction: 0.5,
            refine_schedule: vec![4, 4, 2, 1, 1],
            lambda: 50.0,
            iou_threshold: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.stages < 1 {
            return fail("stages (K) must be >= 1".into());
        }
        if self.half_window < 2 {
            return fail("half_window (M) must be >= 2".into());
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return fail(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.anchor_scales.is_empty() {
            return fail("anchor_scales must not be empty".into());
        }
        if self.anchor_scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return fail("anchor_scales must all be positive".into());
        }
        if self.anchor_scales.windows(2).any(|w| w[0] > w[1]) {
            return fail("anchor_scales must be sorted ascending".into());
        }
        if self.search_scales < 1 {
            return fail("search_scales must be >= 1".into());
        }
        if !(self.min_cycle.is_finite() && self.min_cycle > 0.0) {
            return fail(format!("min_cycle must be positive, got {}", self.min_cycle));
        }
        if !(self.max_cycle_fraction > 0.0 && self.max_cycle_fraction <= 1.0) {
            return fail(format!(
                "max_cycle_fraction must lie in (0, 1], got {}",
                self.max_cycle_fraction
            ));
        }
        if self.refine_schedule.len() != self.stages {
            return fail(format!(
                "refine_schedule has {} entries, expected one per stage ({})",
                self.refine_schedule.len(),
                self.stages
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return fail(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold < 1.0) {
            return fail(format!("iou_threshold must lie in (0, 1), got {}", self.iou_threshold));
        }
        Ok(())
    }

    /// `(min, max)` cycle length admissible in a series of `n` frames.
    pub fn cycle_bounds(&self, n: usize) -> (f64, f64) {
        let hi = (self.max_cycle_fraction * n as f64).max(self.min_cycle);
        (self.min_cycle, hi)
    }

    /// Estimator invocations one pipeline run performs.
    pub fn forwards(&self) -> usize {
        self.search_scales
            + self
                .refine_schedule
                .iter()
                .enumerate()
                .map(|(m, rounds)| rounds << m)
                .sum::<usize>()
    }

    /// Applies one `key=value` setting. Keys mirror the field names; `K`, `M`
    /// and `2M` are accepted as aliases.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad value for {key}: {value:?} ({what})"));
        let int = || value.trim().parse::<usize>().map_err(|_| bad("integer expected"));
        let real = || value.trim().parse::<f64>().map_err(|_| bad("number expected"));
        match key.trim() {
            "stages" | "K" | "k" => self.stages = int()?,
            "half_window" | "M" | "m" => self.half_window = int()?,
            "2M" | "window" => {
                let w = int()?;
                if w % 2 != 0 {
                    return Err(bad("window must be even"));
                }
                self.half_window = w / 2;
            }
            "beta" => self.beta = real()?,
            "anchor_scales" => {
                self.anchor_scales = split_list(value)
                    .map(|v| v.parse::<f64>().map_err(|_| bad("list of numbers expected")))
                    .collect::<Result<_>>()?
            }
            "search_scales" => self.search_scales = int()?,
            "min_cycle" => self.min_cycle = real()?,
            "max_cycle_fraction" => self.max_cycle_fraction = real()?,
            "refine_schedule" => {
                self.refine_schedule = split_list(value)
                    .map(|v| v.parse::<usize>().map_err(|_| bad("list of integers expected")))
                    .collect::<Result<_>>()?
            }
            "lambda" => self.lambda = real()?,
            "iou_threshold" => self.iou_threshold = real()?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a flat `key=value` document over the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", idx + 1)))?;
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split([',', ' ']).map(str::trim).filter(|v| !v.is_empty())
}

/// Canonical `key=value;...` rendering, used as the report fingerprint.
impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(" ");
        write!(
            f,
            "stages={};half_window={};beta={};anchor_scales={};search_scales={};min_cycle={};\
             max_cycle_fraction={};refine_schedule={};lambda={};iou_threshold={}",
            self.stages,
            self.half_window,
            self.beta,
            join(self.anchor_scales.iter().map(f64::to_string).collect()),
            self.search_scales,
            self.min_cycle,
            self.max_cycle_fraction,
            join(self.refine_schedule.iter().map(usize::to_string).collect()),
            self.lambda,
            self.iou_threshold
        )
    }
}
