//! wasm-bindgen entry points for the static page in `www/`. Each export returns a
//! JSON string; the plain functions underneath are usable natively.

use serde::Serialize;
use vegpattern_core::simulate::{classify_pattern, simulate_pde, InitialProfile, Pattern, PatternThresholds, PdeConfig};
use vegpattern_core::turing::{dispersion, select_kstar, th_point, theta2_state_map, vegetated_state, MapState};
use vegpattern_core::ModelParams;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct DispersionCurve {
    pub w: f64,
    pub b: f64,
    /// Largest real part of the mode-k eigenvalues, k = 0..=k_max.
    pub growth: Vec<f64>,
    pub k_star: Option<u32>,
    pub d1_star: Option<f64>,
}

fn params(theta1: f64, theta2: f64, r: f64) -> Result<ModelParams, String> {
    ModelParams::dryland(theta1, theta2, r).validated().map_err(|e| e.to_string())
}

pub fn dispersion_curve(theta1: f64, theta2: f64, r: f64, d1: f64, k_max: u32) -> Result<DispersionCurve, String> {
    let p = params(theta1, theta2, r)?.with_d1(d1).validated().map_err(|e| e.to_string())?;
    let eq = vegetated_state(&p).ok_or("no vegetated equilibrium")?;
    let growth = (0..=k_max.min(200))
        .map(|k| {
            let e = dispersion(&p, eq.state(), k).eigs;
            e[0].re.max(e[1].re)
        })
        .collect();
    let ks = select_kstar(&p, eq.state()).ok();
    Ok(DispersionCurve {
        w: eq.w,
        b: eq.b,
        growth,
        k_star: ks.map(|k| k.k_star),
        d1_star: ks.map(|k| k.d1),
    })
}

#[derive(Serialize)]
pub struct StateGrid {
    pub theta2: Vec<f64>,
    pub d1: Vec<f64>,
    /// Row-major over (theta2, d1): 0 bare soil, 1 uniform vegetation, 2 patterns.
    pub cells: Vec<u8>,
    pub boundary: f64,
    pub d1_curve: Vec<Option<f64>>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn state_grid(theta1: f64, r: f64, theta2: (f64, f64), d1: (f64, f64), n: usize) -> Result<StateGrid, String> {
    let p = params(theta1, 0.5, r)?;
    let n = n.clamp(2, 200);
    let (ts, ds) = (linspace(theta2.0, theta2.1, n), linspace(d1.0, d1.1, n));
    let m = theta2_state_map(&p, &ts, &ds);
    let cells = m
        .cells
        .iter()
        .flatten()
        .map(|s| match s {
            MapState::BareSoilStable => 0,
            MapState::UniformVegetation => 1,
            MapState::PatternRegion => 2,
        })
        .collect();
    Ok(StateGrid {
        theta2: m.theta2,
        d1: m.d1,
        cells,
        boundary: m.boundary,
        d1_curve: m.d1_curve,
    })
}

#[derive(Serialize)]
pub struct PatternRun {
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    /// Spatial mean of b at each unit of time.
    pub mean_b: Vec<f64>,
    pub pattern: Pattern,
}

/// Short run at (ε₁, ε₂) from the Turing-Hopf point of θ₁ = 5, θ₂ = 0.8 with
/// w*, b* + amp·cos x data.
pub fn pattern_run(eps1: f64, eps2: f64, amp: f64, t_end: f64, nx: usize) -> Result<PatternRun, String> {
    let base = ModelParams::dryland(5.0, 0.8, 1.5);
    let th = th_point(&base, (1.13, 2.5), 1.56).map_err(|e| e.to_string())?;
    let p = th.params(&base).with_r(th.r + eps1).with_d1(th.d1 + eps2);
    let cfg = PdeConfig {
        nx: nx.clamp(64, 512),
        t_end: t_end.clamp(10.0, 5000.0),
        ..Default::default()
    };
    let init = InitialProfile::Cosine {
        base: th.state(),
        amp,
        freq: 1.0,
    };
    let f = simulate_pde(&p, &init, &cfg).map_err(|e| e.to_string())?;
    let pattern = classify_pattern(&f, &PatternThresholds::default()).map_or(Pattern::Unresolved, |o| o.pattern);
    let last = f.times.len() - 1;
    Ok(PatternRun {
        x: f.x.clone(),
        b: f.b[last].clone(),
        w: f.w[last].clone(),
        mean_b: f.b.iter().map(|b| b.iter().sum::<f64>() / b.len() as f64).collect(),
        pattern,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string())))
}

#[wasm_bindgen(js_name = dispersionCurve)]
pub fn dispersion_curve_js(theta1: f64, theta2: f64, r: f64, d1: f64, k_max: u32) -> Result<String, JsError> {
    to_js(dispersion_curve(theta1, theta2, r, d1, k_max))
}

#[wasm_bindgen(js_name = stateGrid)]
pub fn state_grid_js(
    theta1: f64,
    r: f64,
    theta2_min: f64,
    theta2_max: f64,
    d1_min: f64,
    d1_max: f64,
    n: usize,
) -> Result<String, JsError> {
    to_js(state_grid(theta1, r, (theta2_min, theta2_max), (d1_min, d1_max), n))
}

#[wasm_bindgen(js_name = patternRun)]
pub fn pattern_run_js(eps1: f64, eps2: f64, amp: f64, t_end: f64, nx: usize) -> Result<String, JsError> {
    to_js(pattern_run(eps1, eps2, amp, t_end, nx))
}
