//! Shared domain types.
//!
//! Frame coordinates are 1-based and real-valued: frame `i` of a series with
//! `N` frames lives at coordinate `i`, and the valid range is `[1, N]`.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};

/// Shortest series for which a cycle of the minimum length fits twice.
pub const MIN_FRAMES: usize = 8;

/// N frames by C channels of real-valued features, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    fps: f64,
    frames: usize,
    channels: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from row-major `values` with `channels` columns.
    pub fn new(id: impl Into<String>, fps: f64, channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Dimension("series needs at least one channel".into()));
        }
        if !values.len().is_multiple_of(channels) {
            return Err(Error::Dimension(format!(
                "{} values do not divide into {} channels",
                values.len(),
                channels
            )));
        }
        let frames = values.len() / channels;
        if frames < MIN_FRAMES {
            return Err(Error::Dimension(format!(
                "series has {frames} frames, need at least {MIN_FRAMES}"
            )));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                frame: pos / channels + 1,
                channel: pos % channels,
            });
        }
        Ok(TimeSeries {
            id: id.into(),
            fps,
            frames,
            channels,
            values,
        })
    }

    /// Builds a series from one row per frame.
    pub fn from_rows(id: impl Into<String>, fps: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let channels = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != channels) {
            return Err(Error::Dimension(format!(
                "frame {} has {} channels, expected {}",
                bad + 1,
                rows[bad].len(),
                channels
            )));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(id, fps, channels, values)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Row-major raw values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Feature row of the 1-based `frame`.
    pub fn row(&self, frame: usize) -> &[f64] {
        assert!(
            (1..=self.frames).contains(&frame),
            "frame {frame} outside [1, {}]",
            self.frames
        );
        let start = (frame - 1) * self.channels;
        &self.values[start..start + self.channels]
    }

    pub fn value(&self, frame: usize, channel: usize) -> f64 {
        self.values[(frame - 1) * self.channels + channel]
    }

    /// Linearly interpolated value at a real frame coordinate. Coordinates
    /// outside `[1, N]` take the boundary frame's value.
    pub fn sample(&self, coord: f64, channel: usize) -> f64 {
        let x = coord.clamp(1.0, self.frames as f64);
        let lo = x.floor() as usize;
        let frac = x - lo as f64;
        if frac == 0.0 || lo >= self.frames {
            return self.value(lo.min(self.frames), channel);
        }
        let a = self.value(lo, channel);
        let b = self.value(lo + 1, channel);
        a + (b - a) * frac
    }

    /// Frames `start..=end` (1-based, inclusive) as a new series.
    pub fn crop(&self, start: usize, end: usize) -> Result<Self> {
        if start < 1 || end > self.frames || start > end {
            return Err(Error::InvalidArgument(format!(
                "crop [{start}, {end}] outside [1, {}]",
                self.frames
            )));
        }
        let values = self.values[(start - 1) * self.channels..end * self.channels].to_vec();
        Self::new(self.id.clone(), self.fps, self.channels, values)
    }

    /// Keeps only the listed channels, in the given order.
    pub fn select_channels(&self, keep: &[usize]) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&c| c >= self.channels) {
            return Err(Error::InvalidArgument(format!(
                "channel {bad} out of range (series has {})",
                self.channels
            )));
        }
        let values = (1..=self.frames)
            .flat_map(|f| {
                let row = self.row(f);
                keep.iter().map(move |&c| row[c])
            })
            .collect();
        Self::new(self.id.clone(), self.fps, keep.len(), values)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// A half-open span `[start, start + length)` on the real frame axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub length: f64,
}

impl Interval {
    pub fn new(start: f64, length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite() && start.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "interval needs finite start and positive length, got ({start}, {length})"
            )));
        }
        Ok(Interval { start, length })
    }

    pub fn from_center(center: f64, length: f64) -> Result<Self> {
        Self::new(center - length / 2.0, length)
    }

    pub fn center(&self) -> f64 {
        self.start + self.length / 2.0
    }

    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// Previous and next cycle lengths anchored at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleCycle {
    pub tp: f64,
    pub tn: f64,
}

impl DoubleCycle {
    pub const fn new(tp: f64, tn: f64) -> Self {
        DoubleCycle { tp, tn }
    }

    pub const fn uniform(length: f64) -> Self {
        DoubleCycle { tp: length, tn: length }
    }

    /// Previous repetitive frame, from `tp = i - p(i) + 1`.
    pub fn previous_frame(&self, position: f64) -> f64 {
        position - self.tp + 1.0
    }

    /// Next repetitive frame, from `tn = n(i) - i + 1`.
    pub fn next_frame(&self, position: f64) -> f64 {
        position + self.tn - 1.0
    }

    pub fn mean(&self, other: &DoubleCycle) -> DoubleCycle {
        DoubleCycle::new((self.tp + other.tp) / 2.0, (self.tn + other.tn) / 2.0)
    }

    pub fn scaled(&self, factor: f64) -> DoubleCycle {
        DoubleCycle::new(self.tp * factor, self.tn * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.tp.is_finite() && self.tn.is_finite()
    }
}

/// A double-cycle estimate attached to a frame position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub position: f64,
    pub dc: DoubleCycle,
    pub confidence: f64,
}

/// Clamps each cycle length to `[cfg.min_cycle, cfg.max_cycle_fraction * n]`.
pub fn clamp_cycle(dc: DoubleCycle, cfg: &PipelineConfig, n: usize) -> DoubleCycle {
    let (lo, hi) = cfg.cycle_bounds(n);
    let clamp = |v: f64| {
        if v.is_nan() {
            lo
        } else {
            v.clamp(lo, hi)
        }
    };
    DoubleCycle::new(clamp(dc.tp), clamp(dc.tn))
}

/// True when `dc` already satisfies the clamp bounds for a series of `n` frames.
pub fn within_bounds(dc: &DoubleCycle, cfg: &PipelineConfig, n: usize) -> bool {
    let (lo, hi) = cfg.cycle_bounds(n);
    (lo..=hi).contains(&dc.tp) && (lo..=hi).contains(&dc.tn)
}
