//! WebAssembly bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

pub mod api;

#[wasm_bindgen]
pub fn simulate(dot: &str, settings: &str) -> Result<String, JsValue> {
    api::simulate_json(dot, settings).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn upward_ranks(dot: &str, settings: &str) -> Result<String, JsValue> {
    api::upward_ranks_json(dot, settings).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn validate_offsets(trace: &str) -> Result<String, JsValue> {
    api::validate_offsets_json(trace).map_err(|e| JsValue::from_str(&e))
}
