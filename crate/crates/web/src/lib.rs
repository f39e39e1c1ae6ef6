use pairing_ep::atlas::{atlas, AtlasOptions, PointRecord};
use pairing_ep::discriminant::heatmap;
use pairing_ep::monodromy::{restore_count, LoopSpec};
use pairing_ep::spectra::spectrum_along;
use pairing_ep::{Complex64, ModelSpec, PairingModel};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn model(gamma: f64) -> Result<PairingModel, JsError> {
    PairingModel::new(ModelSpec::three_level(gamma)).map_err(|e| JsError::new(&e.to_string()))
}

fn js(e: pairing_ep::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `log10 |D(g)|` on an `nx × ny` grid, row-major from the lowest `Im g`.
#[wasm_bindgen]
pub fn discriminant_map(
    gamma: f64,
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, JsError> {
    let grid = heatmap(&model(gamma)?, (re_lo, re_hi), (im_lo, im_hi), nx, ny).map_err(js)?;
    Ok(grid.into_iter().map(|(_, d)| d.max(f64::MIN_POSITIVE).log10()).collect())
}

/// Classified degeneracies as a JSON array of point records.
#[wasm_bindgen]
pub fn degeneracies(gamma: f64) -> Result<String, JsError> {
    let points: Vec<PointRecord> = atlas(&model(gamma)?, &AtlasOptions::default())
        .map_err(js)?
        .iter()
        .map(PointRecord::from)
        .collect();
    Ok(serde_json::to_string(&points)?)
}

/// Phases and eigenvalues around a loop, with the restoration periods.
#[wasm_bindgen]
pub fn encircle(gamma: f64, center_re: f64, center_im: f64, radius: f64, loops: usize) -> Result<String, JsError> {
    let spec = LoopSpec::new(Complex64::new(center_re, center_im), radius);
    let (count, trace) = restore_count(&model(gamma)?, &spec, loops).map_err(js)?;
    let samples: Vec<_> = trace
        .samples
        .iter()
        .map(|s| {
            json!({
                "phi": s.phi,
                "theta_re": s.theta.iter().map(|t| t.re).collect::<Vec<_>>(),
                "e_re": s.eigenvalues.iter().map(|e| e.re).collect::<Vec<_>>(),
                "e_im": s.eigenvalues.iter().map(|e| e.im).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "eigenvalue_period": count.eigenvalue_period,
        "phase_period": count.phase_period,
        "samples": samples,
    })
    .to_string())
}

/// Labeled eigenvalues along a straight segment.
#[wasm_bindgen]
pub fn cut(gamma: f64, start_re: f64, start_im: f64, end_re: f64, end_im: f64, n: usize) -> Result<String, JsError> {
    let table = spectrum_along(
        &model(gamma)?,
        Complex64::new(start_re, start_im),
        Complex64::new(end_re, end_im),
        n,
        false,
    )
    .map_err(js)?;
    let samples: Vec<_> = table
        .samples
        .iter()
        .map(|s| {
            json!({
                "g_re": s.g.re,
                "g_im": s.g.im,
                "e_re": s.eigenvalues.iter().map(|e| e.re).collect::<Vec<_>>(),
                "e_im": s.eigenvalues.iter().map(|e| e.im).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({ "samples": samples }).to_string())
}
