//! Browser bindings for the `repcount` demo page in `www/`.
//!
//! Each export takes and returns JSON strings so the page needs no glue
//! beyond `JSON.parse`. The logic lives in [`demo`] and runs natively too.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Generate a synthetic series. See [`demo::SynthParams`] for the fields.
#[wasm_bindgen]
pub fn synthesize(params_json: &str) -> Result<String, JsError> {
    js(demo::synthesize(params_json))
}

/// Run the coarse-to-fine pipeline on row-major `values`.
#[wasm_bindgen(js_name = countRepetitions)]
pub fn count_repetitions(values: &[f64], channels: usize, config: &str) -> Result<String, JsError> {
    js(demo::count_repetitions(values, channels, config))
}

#[wasm_bindgen(js_name = scoreProfile)]
pub fn score_profile(
    values: &[f64],
    channels: usize,
    position: f64,
    max_length: f64,
    steps: usize,
) -> Result<String, JsError> {
    js(demo::score_profile(values, channels, position, max_length, steps))
}
