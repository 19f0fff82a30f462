//! Seeded synthetic benchmark suites.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Annotation;
use super::evaluate::Sequence;
use crate::error::Result;
use crate::synth::{generate, SynthSpec, Template};

/// Frames per clean fixture.
pub const CLEAN_FRAMES: usize = 512;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn sequence(spec: &SynthSpec) -> Result<Sequence> {
    let (series, gt) = generate(spec)?;
    let ann = Annotation::from_ground_truth(spec.id(), &gt)?;
    Ok(Sequence::new(series, ann))
}

/// Clean periodic specs: `CLEAN_FRAMES` frames holding an integer number
/// of cycles, cycle lengths spread over 8 to 64 frames, no drift or noise.
pub fn clean_specs(count: usize, seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            // 8..=64 repetitions of 512/c frames each
            let cycles = 8 + (rng.next_u32() % 57) as usize;
            SynthSpec {
                base_cycle: CLEAN_FRAMES as f64 / cycles as f64,
                cycles,
                channels: 1 + (rng.next_u32() % 4) as usize,
                template: Template::ALL[i % Template::ALL.len()],
                seed: seed * 1000 + i as u64,
                ..SynthSpec::default()
            }
        })
        .collect()
}

/// Drifting, jittered, lightly noisy specs.
pub fn nonstationary_specs(count: usize, seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let drift = uniform(&mut rng, -0.03, 0.03);
            let base_cycle = uniform(&mut rng, 12.0, 40.0);
            let cycles = 8 + (rng.next_u32() % 13) as usize;
            SynthSpec {
                base_cycle,
                cycles,
                drift,
                jitter: 0.05,
                noise_std: 0.1,
                channels: 1 + (rng.next_u32() % 4) as usize,
                template: Template::ALL[i % Template::ALL.len()],
                seed: seed * 1000 + i as u64,
                ..SynthSpec::default()
            }
        })
        .collect()
}

/// Two near-identical sub-motions per cycle plus a context channel.
pub fn double_motion_specs(count: usize, seed: u64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| SynthSpec {
            base_cycle: uniform(&mut rng, 16.0, 48.0),
            cycles: 8 + (rng.next_u32() % 9) as usize,
            channels: 2,
            double_motion: true,
            template: Template::ALL[i % Template::ALL.len()],
            seed: seed * 1000 + i as u64,
            ..SynthSpec::default()
        })
        .collect()
}

/// Generates the sequences, keyed by id.
pub fn materialize(specs: &[SynthSpec]) -> Vec<(String, Result<Sequence>)> {
    specs.iter().map(|s| (s.id(), sequence(s))).collect()
}
