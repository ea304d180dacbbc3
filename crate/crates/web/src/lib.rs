//! WebAssembly bindings for the unirig browser demo.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg` and
//! serve `crates/web/www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(e: unirig::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn preset_names() -> Vec<String> {
    unirig::presets::PRESET_NAMES.iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen]
pub struct View {
    inner: demo::ViewPair,
}

#[wasm_bindgen]
impl View {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.inner.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.inner.height
    }

    #[wasm_bindgen(getter)]
    pub fn coverage(&self) -> f64 {
        self.inner.coverage
    }

    /// RGBA pixels of the view synthesized from the source rig.
    pub fn warped(&self) -> Vec<u8> {
        self.inner.warped.clone()
    }

    /// RGBA pixels rendered directly from the virtual camera.
    pub fn reference(&self) -> Vec<u8> {
        self.inner.reference.clone()
    }
}

/// `target` is a preset name or `"roof-center"`.
#[wasm_bindgen]
pub fn virtual_view(
    source: &str,
    target: &str,
    index: usize,
    seed: u32,
    boxes: usize,
    width: u32,
    d0: f64,
) -> Result<View, JsError> {
    let inner = demo::virtual_view(source, target, index, seed.into(), boxes, width, d0).map_err(js)?;
    Ok(View { inner })
}

/// Flat `[offset, error, offset, error, ...]` pairs.
#[wasm_bindgen]
pub fn error_curve(
    source: &str,
    seed: u32,
    boxes: usize,
    max_offset: f64,
    steps: usize,
    d0: f64,
) -> Result<Vec<f64>, JsError> {
    let curve = demo::error_curve(source, seed.into(), boxes, max_offset, steps, d0).map_err(js)?;
    Ok(curve.into_iter().flatten().collect())
}

/// JSON report of a shared-center rig search.
#[wasm_bindgen]
pub fn search_rig(source: &str, seed: u32, boxes: usize, iterations: usize, d0: f64) -> Result<String, JsError> {
    let report = demo::search_rig(source, seed.into(), boxes, iterations, d0).map_err(js)?;
    serde_json::to_string(&report).map_err(|e| JsError::new(&e.to_string()))
}
