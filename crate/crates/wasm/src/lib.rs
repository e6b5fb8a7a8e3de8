//! Browser bindings for a small interactive tour of the `edukl` indicators.
//! See `www/` for the page that uses them.

pub mod demo;

use edukl::levels::CutPoints;
use wasm_bindgen::prelude::*;

fn js(e: edukl::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Comparison(demo::Comparison);

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(getter)]
    pub fn curve(&self) -> Vec<f64> {
        self.0.curve.clone()
    }

    #[wasm_bindgen(getter, js_name = signedKl)]
    pub fn signed_kl(&self) -> f64 {
        self.0.signed_kl
    }

    #[wasm_bindgen(getter, js_name = rankArea)]
    pub fn rank_area(&self) -> f64 {
        self.0.rank_area
    }

    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.0.label.to_string()
    }
}

/// Relative CDF and signed KL of `N(shift, scale^2)` against `N(0, 1)`.
#[wasm_bindgen(js_name = compareNormal)]
pub fn compare_normal(shift: f64, scale: f64, n: usize, seed: u64) -> Result<Comparison, JsError> {
    demo::compare_normal(shift, scale, n, seed).map(Comparison).map_err(js)
}

#[wasm_bindgen]
pub struct ReferenceDemo(demo::ReferenceDemo);

#[wasm_bindgen]
impl ReferenceDemo {
    #[wasm_bindgen(getter)]
    pub fn table(&self) -> Vec<f64> {
        self.0.table.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> Vec<f64> {
        self.0.rows.clone()
    }

    #[wasm_bindgen(getter, js_name = sampleTable)]
    pub fn sample_table(&self) -> Vec<f64> {
        self.0.sample_table.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn mean(&self) -> f64 {
        self.0.mean
    }

    #[wasm_bindgen(getter)]
    pub fn sd(&self) -> f64 {
        self.0.sd
    }
}

#[wasm_bindgen(js_name = referenceDemo)]
pub fn reference_demo(s: f64, n: usize, seed: u64) -> Result<ReferenceDemo, JsError> {
    demo::reference_demo(s, n, seed).map(ReferenceDemo).map_err(js)
}

#[wasm_bindgen(js_name = fittedScale)]
pub fn fitted_scale() -> f64 {
    demo::fitted_scale()
}

/// Published rows as `[percentile, translated]` pairs, flattened.
#[wasm_bindgen(js_name = publishedRows)]
pub fn published_rows() -> Vec<f64> {
    edukl::reference::TRANSLATION_ROWS
        .iter()
        .flat_map(|r| [r.percentile as f64, r.translated])
        .collect()
}

#[wasm_bindgen(js_name = defaultThresholds)]
pub fn default_thresholds() -> Vec<f64> {
    CutPoints::TABLE2.thresholds().to_vec()
}

/// Band label for `value`; `thresholds` must hold four increasing values.
#[wasm_bindgen]
pub fn classify(value: f64, thresholds: Vec<f64>) -> Result<String, JsError> {
    let t: [f64; 4] = thresholds
        .try_into()
        .map_err(|_| JsError::new("expected four thresholds"))?;
    demo::classify(value, t).map(|l| l.to_string()).map_err(js)
}
