//! Dataset spec files for `repcount synth`.
//!
//! Flat `key=value` lines. Either name a built-in suite:
//!
//! ```text
//! suite=clean
//! sequences=50
//! seed=6
//! ```
//!
//! or describe the sequences directly (`base_cycle`, `cycles`, `drift`,
//! `jitter`, `noise_std`, `channels`, `double_motion`, `template`, `fps`),
//! in which case `sequences` copies are generated with seeds `seed`,
//! `seed + 1`, and so on.

use std::path::Path;

use repcount::bench::suites::{clean_specs, double_motion_specs, nonstationary_specs};
use repcount::{Error, Result, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub format: SeriesFormat,
    pub sequences: Vec<SynthSpec>,
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("spec line {line}: {msg}"))
}

pub fn parse(text: &str) -> Result<DatasetSpec> {
    let mut base = SynthSpec::default();
    let mut suite = None;
    let mut count = 1usize;
    let mut name = None;
    let mut format = SeriesFormat::Text;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let (key, value) = raw.split_once('=').ok_or_else(|| bad(line, "expected key=value"))?;
        let value = value.trim();
        let real = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(line, format!("{key}: number expected")))
        };
        let int = || {
            value
                .parse::<usize>()
                .map_err(|_| bad(line, format!("{key}: integer expected")))
        };
        match key.trim() {
            "suite" => suite = Some(value.to_string()),
            "sequences" => count = int()?,
            "name" => name = Some(value.to_string()),
            "format" => {
                format = match value {
                    "text" | "csv" => SeriesFormat::Text,
                    "binary" | "bin" => SeriesFormat::Binary,
                    other => return Err(bad(line, format!("unknown format {other:?}"))),
                }
            }
            "base_cycle" => base.base_cycle = real()?,
            "cycles" => base.cycles = int()?,
            "drift" => base.drift = real()?,
            "jitter" => base.jitter = real()?,
            "noise_std" => base.noise_std = real()?,
            "channels" => base.channels = int()?,
            "double_motion" => {
                base.double_motion = value
                    .parse::<bool>()
                    .map_err(|_| bad(line, "double_motion: true or false expected"))?
            }
            "template" => base.template = value.parse().map_err(|e: Error| bad(line, e))?,
            "seed" => base.seed = value.parse().map_err(|_| bad(line, "seed: integer expected"))?,
            "fps" => base.fps = real()?,
            other => return Err(bad(line, format!("unknown key {other:?}"))),
        }
    }
    if count == 0 {
        return Err(Error::Config("sequences must be at least 1".into()));
    }
    let sequences = match suite.as_deref() {
        Some("clean") => clean_specs(count, base.seed),
        Some("nonstationary") => nonstationary_specs(count, base.seed),
        Some("double_motion") => double_motion_specs(count, base.seed),
        Some(other) => return Err(Error::Config(format!("unknown suite {other:?}"))),
        None => (0..count as u64)
            .map(|k| SynthSpec {
                seed: base.seed + k,
                ..base.clone()
            })
            .collect(),
    };
    for s in &sequences {
        s.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(DatasetSpec {
        name: name.or(suite).unwrap_or_else(|| "synthetic".into()),
        format,
        sequences,
    })
}

pub fn load(path: &Path) -> Result<DatasetSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use repcount::Template;

    #[test]
    fn explicit_sequences_take_consecutive_seeds() {
        let d = parse("base_cycle=20\ncycles=6\ntemplate=saw\nsequences=3\nseed=10\n").unwrap();
        assert_eq!(d.sequences.len(), 3);
        assert_eq!(d.sequences[2].seed, 12);
        assert_eq!(d.sequences[0].template, Template::AsymmetricSaw);
        assert_eq!(d.name, "synthetic");
    }

    #[test]
    fn suites_and_errors() {
        let d = parse("suite=clean\nsequences=4\nformat=binary").unwrap();
        assert_eq!(
            (d.sequences.len(), d.format, d.name.as_str()),
            (4, SeriesFormat::Binary, "clean")
        );
        assert!(parse("suite=nope").is_err());
        assert!(parse("cycles=two").is_err());
        assert!(parse("base_cycle=2").is_err());
        assert!(parse("colour=red").is_err());
    }
}
