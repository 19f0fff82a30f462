//! Time-series file formats.
//!
//! Text form: a first line `id,fps,channels`, then one comma-separated row of
//! reals per frame. Binary form: magic `CYC1`, little-endian `u32` frames,
//! `u32` channels, `f64` fps, then `frames * channels` little-endian `f32`
//! values in row-major order. The binary form carries no id; readers take it
//! from the file stem.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::TimeSeries;

pub const BINARY_MAGIC: &[u8; 4] = b"CYC1";
const BINARY_HEADER: usize = 4 + 4 + 4 + 8;

/// Reads either format, detected by the magic bytes.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        decode_binary(&bytes, &id).map_err(|e| relabel(e, path))
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::parse(path, 1, "file is neither CYC1 binary nor UTF-8 text"))?;
        parse_text(&text).map_err(|e| relabel(e, path))
    }
}

fn relabel(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { line, message, .. } => Error::parse(path, line, message),
        other => other,
    }
}

pub fn parse_text(text: &str) -> Result<TimeSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse("", 1, "empty series file"))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(Error::parse("", 1, "header must be `id,fps,channels`"));
    }
    let id = fields[0].to_string();
    let fps: f64 = fields[1]
        .parse()
        .map_err(|_| Error::parse("", 1, format!("bad fps {:?}", fields[1])))?;
    let channels: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse("", 1, format!("bad channel count {:?}", fields[2])))?;

    let mut values = Vec::new();
    for (line_no, line) in lines {
        let before = values.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::parse("", line_no, format!("bad value {:?}", field.trim())))?;
            values.push(v);
        }
        if values.len() - before != channels {
            return Err(Error::parse(
                "",
                line_no,
                format!("expected {channels} values, found {}", values.len() - before),
            ));
        }
    }
    TimeSeries::new(id, fps, channels, values)
}

pub fn format_text(series: &TimeSeries) -> String {
    let mut out = format!("{},{},{}\n", series.id(), series.fps(), series.channels());
    for frame in 1..=series.frames() {
        let row = series.row(frame);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn encode_binary(series: &TimeSeries) -> Vec<u8> {
    let mut out = Vec::with_capacity(BINARY_HEADER + series.values().len() * 4);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(series.frames() as u32).to_le_bytes());
    out.extend_from_slice(&(series.channels() as u32).to_le_bytes());
    out.extend_from_slice(&series.fps().to_le_bytes());
    for v in series.values() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8], id: &str) -> Result<TimeSeries> {
    if bytes.len() < BINARY_HEADER || !bytes.starts_with(BINARY_MAGIC) {
        return Err(Error::parse("", 1, "truncated or missing CYC1 header"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let frames = u32_at(4);
    let channels = u32_at(8);
    let fps = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let expected = frames
        .checked_mul(channels)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::parse("", 1, "header dimensions overflow"))?;
    let payload = &bytes[BINARY_HEADER..];
    if payload.len() != expected {
        return Err(Error::parse(
            "",
            1,
            format!("payload has {} bytes, header implies {expected}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    TimeSeries::new(id, fps, channels, values)
}

pub fn write_series_text(path: &Path, series: &TimeSeries) -> Result<()> {
    fs::write(path, format_text(series)).map_err(|e| Error::io(path, e))
}

pub fn write_series_binary(path: &Path, series: &TimeSeries) -> Result<()> {
    fs::write(path, encode_binary(series)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> TimeSeries {
        let values = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        TimeSeries::new("seq", 25.0, 3, values).unwrap()
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let s = fixture();
        assert_eq!(parse_text(&format_text(&s)).unwrap(), s);
    }

    #[test]
    fn binary_layout_is_little_endian() {
        let s = fixture();
        let bytes = encode_binary(&s);
        assert_eq!(&bytes[..4], b"CYC1");
        assert_eq!(&bytes[4..8], &10u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..20], &25.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 20 + 30 * 4);
        let back = decode_binary(&bytes, "seq").unwrap();
        for (a, b) in back.values().iter().zip(s.values()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let bytes = encode_binary(&fixture());
        assert!(decode_binary(&bytes[..bytes.len() - 1], "x").is_err());
    }

    #[test]
    fn ragged_rows_report_line_numbers() {
        let text = "a,25,2\n1,2\n1,2\n3\n";
        match parse_text(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn reads_both_formats_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let s = fixture();
        let txt = dir.path().join("a.csv");
        let bin = dir.path().join("seq.cyc");
        write_series_text(&txt, &s).unwrap();
        write_series_binary(&bin, &s).unwrap();
        assert_eq!(read_series(&txt).unwrap(), s);
        let b = read_series(&bin).unwrap();
        assert_eq!(b.id(), "seq");
        assert_eq!(b.frames(), 10);
    }
}
