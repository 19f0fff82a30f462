//! JSON-in, JSON-out operations behind the browser demo. Kept free of
//! wasm-bindgen types so they run and test natively.

use serde::{Deserialize, Serialize};

use repcount::anchors::Side;
use repcount::estimator::correlation_score;
use repcount::{generate, run_pipeline_with, CorrelationEstimator, Execution, PipelineConfig, SynthSpec, TimeSeries};

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub base_cycle: f64,
    pub cycles: usize,
    pub drift: f64,
    pub jitter: f64,
    pub noise_std: f64,
    pub channels: usize,
    pub double_motion: bool,
    pub template: String,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        let d = SynthSpec::default();
        SynthParams {
            base_cycle: d.base_cycle,
            cycles: d.cycles,
            drift: d.drift,
            jitter: d.jitter,
            noise_std: d.noise_std,
            channels: d.channels,
            double_motion: d.double_motion,
            template: d.template.to_string(),
            seed: d.seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Synthesized {
    pub frames: usize,
    pub channels: usize,
    /// Row-major, `frames * channels`.
    pub values: Vec<f64>,
    pub boundaries: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct StagePoint {
    pub position: f64,
    pub tp: f64,
    pub tn: f64,
    pub confidence: f64,
}

#[derive(Debug, Serialize)]
pub struct Counted {
    pub count: f64,
    pub forwards: usize,
    /// Estimates per stage, coarse to fine.
    pub stages: Vec<Vec<StagePoint>>,
}

#[derive(Debug, Serialize)]
pub struct Profile {
    pub lengths: Vec<f64>,
    pub prev: Vec<f64>,
    pub next: Vec<f64>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn series(values: &[f64], channels: usize) -> Result<TimeSeries, String> {
    TimeSeries::new("demo", 25.0, channels, values.to_vec()).map_err(|e| e.to_string())
}

pub fn synthesize(params_json: &str) -> Result<String, String> {
    let p: SynthParams = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    let spec = SynthSpec {
        base_cycle: p.base_cycle,
        cycles: p.cycles,
        drift: p.drift,
        jitter: p.jitter,
        noise_std: p.noise_std,
        channels: p.channels,
        double_motion: p.double_motion,
        template: p.template.parse().map_err(|e: repcount::Error| e.to_string())?,
        seed: p.seed,
        // keep the page responsive
        max_frames: 20_000,
        ..SynthSpec::default()
    };
    let (s, gt) = generate(&spec).map_err(|e| e.to_string())?;
    to_json(&Synthesized {
        frames: s.frames(),
        channels: s.channels(),
        values: s.values().to_vec(),
        boundaries: gt.boundaries.clone(),
        count: gt.count,
    })
}

/// `config` holds `key=value` lines; empty means defaults.
pub fn count_repetitions(values: &[f64], channels: usize, config: &str) -> Result<String, String> {
    let s = series(values, channels)?;
    let cfg = PipelineConfig::parse(config).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    let (state, estimate) =
        run_pipeline_with(&s, &CorrelationEstimator::new(), &cfg, Execution::Serial).map_err(|e| e.to_string())?;
    let stages = state
        .stages
        .iter()
        .map(|stage| {
            stage
                .iter()
                .map(|e| StagePoint {
                    position: e.position,
                    tp: e.dc.tp,
                    tn: e.dc.tn,
                    confidence: e.confidence,
                })
                .collect()
        })
        .collect();
    to_json(&Counted {
        count: estimate.count,
        forwards: estimate.forwards_used,
        stages,
    })
}

/// Correlation score against candidate length on both sides of `position`.
pub fn score_profile(
    values: &[f64],
    channels: usize,
    position: f64,
    max_length: f64,
    steps: usize,
) -> Result<String, String> {
    let s = series(values, channels)?;
    if !(1.0..=s.frames() as f64).contains(&position) {
        return Err(format!("position {position} is outside 1..={}", s.frames()));
    }
    let lo = PipelineConfig::default().min_cycle;
    let hi = max_length.max(lo + 1.0);
    let steps = steps.max(2);
    let lengths: Vec<f64> = (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect();
    let grid = 2 * PipelineConfig::default().half_window;
    let score = |side| {
        lengths
            .iter()
            .map(|&l| correlation_score(&s, position, l, side, grid))
            .collect()
    };
    to_json(&Profile {
        prev: score(Side::Prev),
        next: score(Side::Next),
        lengths,
    })
}
