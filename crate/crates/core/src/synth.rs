//! Synthetic repetitive sequences with exact ground truth.
//!
//! Covers stationary cycles, drifting and jittered (non-stationary) cycles,
//! and double-motion cycles made of two near-identical sub-lobes that only an
//! extra context channel tells apart.
//!
//! Ground-truth boundaries are cycle start frames; the final boundary is one
//! past the last frame, so a sequence of `N` frames ends at `N + 1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::types::{DoubleCycle, TimeSeries, MIN_FRAMES};

/// Shortest cycle the generator will emit.
pub const MIN_GENERATED_CYCLE: f64 = 4.0;

/// Amplitude of the second sub-lobe in double-motion cycles.
const SECOND_LOBE_GAIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Template {
    #[default]
    Sinusoid,
    GaussianPulse,
    AsymmetricSaw,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::Sinusoid, Template::GaussianPulse, Template::AsymmetricSaw];

    /// Waveform value at cycle phase `phase` in `[0, 1)`.
    pub fn eval(self, phase: f64) -> f64 {
        match self {
            Template::Sinusoid => (2.0 * PI * phase).sin(),
            Template::GaussianPulse => {
                let z = (phase - 0.5) / 0.12;
                (-0.5 * z * z).exp()
            }
            Template::AsymmetricSaw => {
                if phase < 0.75 {
                    phase / 0.75
                } else {
                    (1.0 - phase) / 0.25
                }
            }
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Template::Sinusoid => "sinusoid",
            Template::GaussianPulse => "gaussian-pulse",
            Template::AsymmetricSaw => "asymmetric-saw",
        })
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sinusoid" | "sine" => Ok(Template::Sinusoid),
            "gaussian-pulse" | "pulse" => Ok(Template::GaussianPulse),
            "asymmetric-saw" | "saw" => Ok(Template::AsymmetricSaw),
            other => Err(Error::InvalidArgument(format!("unknown template {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub base_cycle: f64,
    pub cycles: usize,
    /// Linear relative length change per cycle.
    pub drift: f64,
    /// Std of the per-cycle relative length noise.
    pub jitter: f64,
    pub noise_std: f64,
    /// Motion channels; double-motion adds one context channel on top.
    pub channels: usize,
    pub double_motion: bool,
    pub template: Template,
    pub seed: u64,
    pub fps: f64,
    /// Upper bound on the generated length.
    pub max_frames: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            base_cycle: 16.0,
            cycles: 10,
            drift: 0.0,
            jitter: 0.0,
            noise_std: 0.0,
            channels: 1,
            double_motion: false,
            template: Template::Sinusoid,
            seed: 0,
            fps: 25.0,
            max_frames: 1 << 20,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.base_cycle >= MIN_GENERATED_CYCLE) {
            return bad(format!(
                "base_cycle must be >= {MIN_GENERATED_CYCLE}, got {}",
                self.base_cycle
            ));
        }
        if self.cycles < 3 {
            return bad(format!("need at least 3 cycles, got {}", self.cycles));
        }
        if self.channels < 1 {
            return bad("need at least one channel".into());
        }
        if !(self.jitter >= 0.0 && self.noise_std >= 0.0 && self.drift.is_finite()) {
            return bad("jitter and noise_std must be non-negative, drift finite".into());
        }
        if !(self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        Ok(())
    }

    /// Total channels in the generated series.
    pub fn total_channels(&self) -> usize {
        self.channels + usize::from(self.double_motion)
    }

    pub fn id(&self) -> String {
        format!("synth-{}", self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Cycle start frames plus the terminal boundary, strictly increasing.
    pub boundaries: Vec<f64>,
    pub count: usize,
}

impl GroundTruth {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidArgument(
                "ground truth needs at least two boundaries".into(),
            ));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("boundaries must be strictly increasing".into()));
        }
        let count = boundaries.len() - 1;
        Ok(GroundTruth { boundaries, count })
    }

    pub fn cycle_lengths(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Sidecar text: an `id,count` line then one boundary per line.
    pub fn to_sidecar(&self, id: &str) -> String {
        let mut out = format!("{id},{}\n", self.count);
        for b in &self.boundaries {
            out.push_str(&format!("{b}\n"));
        }
        out
    }
}

/// Per-cycle lengths as specified, before placement on the frame grid.
pub fn cycle_lengths(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = (spec.jitter > 0.0).then(|| Normal::new(0.0, spec.jitter).expect("jitter is finite"));
    (0..spec.cycles)
        .map(|k| {
            let eps = normal.as_ref().map_or(0.0, |n| n.sample(rng));
            (spec.base_cycle * (1.0 + spec.drift * k as f64) * (1.0 + eps)).max(MIN_GENERATED_CYCLE)
        })
        .collect()
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

pub fn generate(spec: &SynthSpec) -> Result<(TimeSeries, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lengths = cycle_lengths(spec, &mut rng);

    let mut starts = Vec::with_capacity(lengths.len() + 1);
    let mut acc = 1.0;
    starts.push(acc);
    for l in &lengths {
        acc += l;
        starts.push(acc);
    }
    let boundaries: Vec<f64> = starts.iter().map(|&b| round_half_up(b)).collect();
    let frames = *boundaries.last().unwrap() as usize - 1;
    if frames > spec.max_frames {
        return Err(Error::InvalidArgument(format!(
            "spec would generate {frames} frames, cap is {}",
            spec.max_frames
        )));
    }
    if frames < MIN_FRAMES {
        return Err(Error::InvalidArgument(format!("spec generates only {frames} frames")));
    }

    let noise = (spec.noise_std > 0.0).then(|| Normal::new(0.0, spec.noise_std).expect("noise is finite"));
    let width = spec.total_channels();
    let offsets: Vec<f64> = (0..spec.channels).map(|c| c as f64 * 0.29).collect();
    let mut values = Vec::with_capacity(frames * width);
    let mut k = 0;
    for i in 1..=frames {
        let t = i as f64;
        while k + 1 < lengths.len() && t >= starts[k + 1] {
            k += 1;
        }
        let phase = ((t - starts[k]) / lengths[k]).clamp(0.0, 1.0 - f64::EPSILON);
        for off in &offsets {
            let v = if spec.double_motion {
                let (sub, gain) = if phase < 0.5 {
                    (2.0 * phase, 1.0)
                } else {
                    (2.0 * phase - 1.0, SECOND_LOBE_GAIN)
                };
                gain * spec.template.eval((sub + off).fract())
            } else {
                spec.template.eval((phase + off).fract())
            };
            values.push(v);
        }
        if spec.double_motion {
            values.push(if phase < 0.5 { 1.0 } else { -1.0 });
        }
    }
    if let Some(normal) = noise {
        for v in &mut values {
            *v += normal.sample(&mut rng);
        }
    }

    let series = TimeSeries::new(spec.id(), spec.fps, width, values)?;
    Ok((series, GroundTruth::new(boundaries)?))
}

/// Stride decimation: keeps frames `1, 1 + f, 1 + 2f, ...`. Each boundary
/// moves to the first kept frame at or after it.
pub fn speed_up(series: &TimeSeries, gt: &GroundTruth, factor: usize) -> Result<(TimeSeries, GroundTruth)> {
    if factor == 0 {
        return Err(Error::InvalidArgument("speed-up factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok((series.clone(), gt.clone()));
    }
    let f = factor as f64;
    if let Some(short) = gt.cycle_lengths().into_iter().find(|l| l / f < MIN_GENERATED_CYCLE) {
        return Err(Error::InvalidArgument(format!(
            "cycle of {short} frames drops below {MIN_GENERATED_CYCLE} at {factor}x"
        )));
    }
    let values = (1..=series.frames())
        .step_by(factor)
        .flat_map(|fr| series.row(fr).iter().copied())
        .collect();
    let fast = TimeSeries::new(series.id(), series.fps(), series.channels(), values)?;
    let boundaries = gt.boundaries.iter().map(|b| ((b - 1.0) / f).ceil() + 1.0).collect();
    Ok((fast, GroundTruth::new(boundaries)?))
}

/// Resampling by a real factor with linear interpolation; boundaries scale
/// without rounding.
pub fn resample(series: &TimeSeries, gt: &GroundTruth, factor: f64) -> Result<(TimeSeries, GroundTruth)> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad resampling factor {factor}")));
    }
    if let Some(short) = gt
        .cycle_lengths()
        .into_iter()
        .find(|l| l / factor < MIN_GENERATED_CYCLE)
    {
        return Err(Error::InvalidArgument(format!(
            "cycle of {short} frames drops below {MIN_GENERATED_CYCLE} at {factor}x"
        )));
    }
    let frames = ((series.frames() - 1) as f64 / factor).floor() as usize + 1;
    let values = (0..frames)
        .flat_map(|j| {
            let x = 1.0 + j as f64 * factor;
            (0..series.channels()).map(move |c| series.sample(x, c))
        })
        .collect();
    let fast = TimeSeries::new(series.id(), series.fps(), series.channels(), values)?;
    let boundaries = gt.boundaries.iter().map(|b| 1.0 + (b - 1.0) / factor).collect();
    Ok((fast, GroundTruth::new(boundaries)?))
}

/// Per-frame double-cycles implied by the annotation: `tp` is the length of
/// the cycle holding the frame, `tn` that of the cycle after it. Frames
/// before the first or after the last boundary borrow the nearest cycle.
pub fn gt_double_cycles(gt: &GroundTruth, n: usize) -> Vec<DoubleCycle> {
    let lengths = gt.cycle_lengths();
    let last = lengths.len() - 1;
    (1..=n)
        .map(|i| {
            let t = i as f64;
            let k = gt.boundaries.partition_point(|&b| b <= t).saturating_sub(1).min(last);
            DoubleCycle::new(lengths[k], lengths[(k + 1).min(last)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refine::count_dense;

    fn clean(base: f64, cycles: usize) -> SynthSpec {
        SynthSpec {
            base_cycle: base,
            cycles,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn stationary_construction_is_exact() {
        let (s, gt) = generate(&clean(16.0, 10)).unwrap();
        assert_eq!(s.frames(), 160);
        assert_eq!(gt.count, 10);
        let expected: Vec<f64> = (0..=10).map(|k| 1.0 + 16.0 * k as f64).collect();
        assert_eq!(gt.boundaries, expected);
    }

    #[test]
    fn drift_lengths_sum_to_the_hand_total() {
        let spec = SynthSpec {
            drift: 0.05,
            ..clean(16.0, 10)
        };
        let (s, gt) = generate(&spec).unwrap();
        // 16 * sum_{k<10} (1 + 0.05k) = 16 * 12.25
        assert_eq!(s.frames(), 196);
        assert_eq!(gt.count, 10);
        assert_eq!(gt.boundaries[1], 17.0);
        assert_eq!(gt.boundaries[2], 34.0); // 1 + 16 + 16.8 = 33.8
    }

    #[test]
    fn same_seed_same_output() {
        let spec = SynthSpec {
            jitter: 0.1,
            noise_std: 0.2,
            channels: 3,
            seed: 42,
            ..clean(12.0, 20)
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SynthSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn stationary_series_is_exactly_periodic() {
        for template in Template::ALL {
            let spec = SynthSpec {
                template,
                channels: 2,
                ..clean(12.0, 8)
            };
            let (s, _) = generate(&spec).unwrap();
            for i in 1..=s.frames() - 12 {
                for c in 0..2 {
                    assert!((s.value(i, c) - s.value(i + 12, c)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generated_cycles_respect_the_minimum() {
        let spec = SynthSpec {
            drift: -0.2,
            ..clean(8.0, 12)
        };
        let (_, gt) = generate(&spec).unwrap();
        assert!(gt.cycle_lengths().iter().all(|&l| l >= 4.0));
    }

    #[test]
    fn oversized_specs_are_rejected() {
        let spec = SynthSpec {
            max_frames: 100,
            ..clean(16.0, 10)
        };
        assert!(generate(&spec).is_err());
        assert!(generate(&clean(2.0, 10)).is_err());
        assert!(generate(&clean(16.0, 2)).is_err());
    }

    #[test]
    fn double_motion_adds_a_context_channel() {
        let spec = SynthSpec {
            double_motion: true,
            channels: 2,
            ..clean(16.0, 10)
        };
        let (s, _) = generate(&spec).unwrap();
        assert_eq!(s.channels(), 3);
        assert_eq!(s.value(1, 2), 1.0);
        assert_eq!(s.value(9, 2), -1.0);
        assert_eq!(s.value(17, 2), 1.0);
    }

    #[test]
    fn speed_up_examples() {
        let (s, gt) = generate(&clean(16.0, 10)).unwrap();
        let (same, same_gt) = speed_up(&s, &gt, 1).unwrap();
        assert_eq!((same, same_gt), (s.clone(), gt.clone()));

        let (fast, fast_gt) = speed_up(&s, &gt, 2).unwrap();
        assert_eq!(fast.frames(), 80);
        assert_eq!(fast_gt.count, 10);
        assert!(fast_gt.cycle_lengths().iter().all(|&l| l == 8.0));

        let (p8, gt8) = generate(&clean(8.0, 10)).unwrap();
        assert!(speed_up(&p8, &gt8, 4).is_err());
    }

    #[test]
    fn speed_up_composes() {
        let spec = SynthSpec {
            jitter: 0.1,
            seed: 7,
            ..clean(23.0, 12)
        };
        let (s, gt) = generate(&spec).unwrap();
        let (a, agt) = speed_up(&s, &gt, 2).unwrap();
        let (twice, twice_gt) = speed_up(&a, &agt, 2).unwrap();
        let (once, once_gt) = speed_up(&s, &gt, 4).unwrap();
        assert_eq!(twice.frames(), once.frames());
        assert_eq!(twice_gt, once_gt);
        assert_eq!(twice, once);
    }

    #[test]
    fn resample_scales_boundaries() {
        let (s, gt) = generate(&clean(16.0, 10)).unwrap();
        let (fast, fgt) = resample(&s, &gt, 1.6).unwrap();
        assert_eq!(fast.frames(), 100);
        assert!(fgt.cycle_lengths().iter().all(|&l| (l - 10.0).abs() < 1e-12));
    }

    #[test]
    fn per_frame_double_cycles() {
        let gt = GroundTruth::new(vec![1.0, 11.0, 31.0]).unwrap();
        let dcs = gt_double_cycles(&gt, 30);
        assert_eq!(dcs[0], DoubleCycle::new(10.0, 20.0));
        assert_eq!(dcs[9], DoubleCycle::new(10.0, 20.0));
        assert_eq!(dcs[10], DoubleCycle::new(20.0, 20.0));

        let (s, gt) = generate(&clean(16.0, 10)).unwrap();
        assert!(gt_double_cycles(&gt, s.frames())
            .iter()
            .all(|d| *d == DoubleCycle::uniform(16.0)));

        // frames before the first boundary borrow the first cycle
        let late = GroundTruth::new(vec![5.0, 15.0, 35.0]).unwrap();
        assert_eq!(gt_double_cycles(&late, 40)[0], DoubleCycle::new(10.0, 20.0));
        assert_eq!(gt_double_cycles(&late, 40)[39], DoubleCycle::new(20.0, 20.0));
    }

    #[test]
    fn dense_count_of_ground_truth_is_within_one() {
        for seed in 0..40 {
            let spec = SynthSpec {
                drift: (seed as f64 - 20.0) * 0.002,
                jitter: 0.08,
                seed,
                ..clean(6.0 + seed as f64, 12)
            };
            let (s, gt) = generate(&spec).unwrap();
            let c = count_dense(&gt_double_cycles(&gt, s.frames()), s.frames()).unwrap();
            assert!((c - gt.count as f64).abs() <= 1.0, "seed {seed}: {c}");
        }
    }

    #[test]
    fn sidecar_lists_boundaries() {
        let gt = GroundTruth::new(vec![1.0, 9.0, 17.0]).unwrap();
        assert_eq!(gt.to_sidecar("x"), "x,2\n1\n9\n17\n");
    }
}
