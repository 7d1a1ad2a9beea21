//! Browser demo for the total-stability toolkit: three interactive
//! figures (bandwidth perturbation, loss smoothing, trained-function
//! stability) exposed to JavaScript as JSON payloads.
//!
//! The figure computation is plain Rust in [`figures`]; the wasm access
//! layer below only serializes. Build the wasm package with
//! `wasm-pack build crates/stability-demo --target web` and open
//! `crates/stability-demo/static/index.html` from a static file server.

pub mod figures;

pub use figures::{
    bandwidth_figure, smoothing_figure, stability_figure, BandwidthFigure, SmoothingFigure,
    StabilityFigure,
};

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    fn to_json<T: serde::Serialize>(
        value: Result<T, total_stab::error::Error>,
    ) -> Result<String, JsValue> {
        match value {
            Ok(v) => serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())),
            Err(e) => Err(JsValue::from_str(&e.to_string())),
        }
    }

    /// Gaussian kernel slices and the bandwidth perturbation bound.
    #[wasm_bindgen]
    pub fn bandwidth_figure(
        gamma1: f64,
        gamma2: f64,
        a: f64,
        resolution: usize,
    ) -> Result<String, JsValue> {
        to_json(super::figures::bandwidth_figure(
            gamma1, gamma2, a, resolution,
        ))
    }

    /// A kinked loss and its convolution smoothing at δ.
    #[wasm_bindgen]
    pub fn smoothing_figure(
        loss: &str,
        param: f64,
        delta: f64,
        resolution: usize,
    ) -> Result<String, JsValue> {
        to_json(super::figures::smoothing_figure(
            loss, param, delta, resolution,
        ))
    }

    /// Two trained classifiers under simultaneous perturbation plus the
    /// three-term bound decomposition.
    #[wasm_bindgen]
    pub fn stability_figure(
        ell: usize,
        lambda1: f64,
        lambda2: f64,
        gamma1: f64,
        gamma2: f64,
        seed: u64,
    ) -> Result<String, JsValue> {
        to_json(super::figures::stability_figure(
            ell, lambda1, lambda2, gamma1, gamma2, seed,
        ))
    }
}
