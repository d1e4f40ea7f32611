//! Diffusion-driven instability on (0, lπ) with Neumann modes cos(kx/l).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{find_positive_equilibria, Equilibrium};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::model::{ModelParams, State};
use crate::poly::bisect;
use crate::stability::{hopf_points, jacobian, Jacobian2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionPoint {
    pub k: u32,
    pub t_k: f64,
    pub j_k: f64,
    pub eigs: [C64; 2],
}

fn dispersion_from(j: &Jacobian2, d1: f64, d2: f64, l: f64, k: u32) -> DispersionPoint {
    let z = (k as f64 / l).powi(2);
    let t_k = j.trace() - (d1 + d2) * z;
    let j_k = d1 * d2 * z * z - (d1 * j.a22 + d2 * j.a11) * z + j.det();
    DispersionPoint {
        k,
        t_k,
        j_k,
        eigs: linalg::quadratic_eigs(t_k, j_k),
    }
}

/// Trace, determinant and eigenvalues of the mode-k linearisation.
pub fn dispersion(p: &ModelParams, eq: State, k: u32) -> DispersionPoint {
    dispersion_from(&jacobian(p, eq), p.d1, p.d2, p.l, k)
}

/// Critical water diffusion for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D1Critical {
    pub value: f64,
    /// False when d₂k² > a₂₂l²: the mode cannot be destabilised by any d₁ ≥ 0.
    pub destabilizing: bool,
}

fn d1_from(j: &Jacobian2, d2: f64, l: f64, k: u32) -> Result<D1Critical> {
    let z = (k as f64).powi(2);
    let b1 = d2 * j.a11;
    let b2 = (j.a12 * j.a21 - j.a11 * j.a22) * l * l;
    let b3 = j.a22 * l * l;
    let gap = d2 * z - b3;
    if z == 0.0 || gap.abs() <= 1e-14 * (d2 * z).abs().max(b3.abs()) {
        return Err(Error::Singular("critical diffusion (d2 k^2 = a22 l^2)"));
    }
    Ok(D1Critical {
        value: l * l * (b1 * z + b2) / (z * gap),
        destabilizing: gap < 0.0,
    })
}

/// d₁ at which J_k vanishes.
pub fn d1_critical(p: &ModelParams, eq: State, k: u32) -> Result<D1Critical> {
    d1_from(&jacobian(p, eq), p.d2, p.l, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KStar {
    /// Continuous minimiser of d₁(R, z).
    pub z_star: f64,
    pub k0: u32,
    pub k_star: u32,
    pub d1: f64,
}

fn kstar_from(j: &Jacobian2, d2: f64, l: f64) -> Result<KStar> {
    if !(j.a22 > 0.0) {
        return Err(Error::NoTuringWindow { a22: j.a22 });
    }
    let det = j.det();
    let z_star = l * l * (det - (-j.a12 * j.a21 * det).sqrt()) / (d2 * j.a11);
    let k0 = z_star.max(0.0).sqrt().floor() as u32;
    let zmax = j.a22 * l * l / d2;
    let mut best: Option<(u32, f64)> = None;
    for k in [k0, k0 + 1] {
        if k == 0 || (k as f64).powi(2) >= zmax {
            continue;
        }
        let v = d1_from(j, d2, l, k)?.value;
        if best.map_or(true, |(_, bv)| v < bv) {
            best = Some((k, v));
        }
    }
    let (k_star, d1) = best.ok_or(Error::NoTuringWindow { a22: j.a22 })?;
    Ok(KStar { z_star, k0, k_star, d1 })
}

/// Integer wavenumber minimising the critical diffusion.
pub fn select_kstar(p: &ModelParams, eq: State) -> Result<KStar> {
    kstar_from(&jacobian(p, eq), p.d2, p.l)
}

/// Largest wavenumber worth scanning: ceil(sqrt(a₂₂l²/d₂)) + 2.
pub fn k_max(p: &ModelParams, eq: State) -> u32 {
    let j = jacobian(p, eq);
    let z = (j.a22 * p.l * p.l / p.d2).max(0.0);
    z.sqrt().ceil() as u32 + 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuringCondition {
    /// a₂₂ ≤ 0.
    H4,
    /// a₂₂ > 0 and d₁ ≤ −d₂a₁₁/a₂₂.
    H5,
    /// Diffusion-driven instability possible.
    H6,
}

pub fn no_turing_check(p: &ModelParams, eq: State) -> TuringCondition {
    let j = jacobian(p, eq);
    if j.a22 <= 0.0 {
        TuringCondition::H4
    } else if p.d1 <= -p.d2 * j.a11 / j.a22 {
        TuringCondition::H5
    } else {
        TuringCondition::H6
    }
}

/// The upper positive equilibrium with positive determinant at `p.r`.
pub fn vegetated_state(p: &ModelParams) -> Option<Equilibrium> {
    find_positive_equilibria(p).into_iter().filter(|e| e.fprime_sign > 0).last()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuringCurvePoint {
    pub r: f64,
    pub k_star: u32,
    pub d1_crit: f64,
    pub z_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSwitch {
    pub r: f64,
    pub k_from: u32,
    pub k_to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuringCurve {
    pub points: Vec<TuringCurvePoint>,
    pub switches: Vec<ModeSwitch>,
}

fn curve_point(p: &ModelParams, r: f64) -> Option<TuringCurvePoint> {
    let pr = p.with_r(r);
    let eq = vegetated_state(&pr)?;
    let ks = select_kstar(&pr, eq.state()).ok()?;
    Some(TuringCurvePoint {
        r,
        k_star: ks.k_star,
        d1_crit: ks.d1,
        z_star: ks.z_star,
    })
}

/// Critical d₁ with the mode fixed, along the vegetated branch.
pub fn d1_along_branch(p: &ModelParams, r: f64, k: u32) -> Option<f64> {
    let pr = p.with_r(r);
    let eq = vegetated_state(&pr)?;
    d1_critical(&pr, eq.state(), k).ok().map(|d| d.value)
}

/// Turing curve over `r_range` with grid spacing `step`; mode switches refined by bisection.
pub fn turing_curve(p: &ModelParams, r_range: (f64, f64), step: f64) -> TuringCurve {
    let (lo, hi) = r_range;
    if !(hi > lo) || !(step > 0.0) {
        return TuringCurve {
            points: Vec::new(),
            switches: Vec::new(),
        };
    }
    let n = ((hi - lo) / step).round() as usize;
    let points: Vec<TuringCurvePoint> = (0..=n)
        .into_par_iter()
        .filter_map(|i| curve_point(p, lo + (hi - lo) * i as f64 / n.max(1) as f64))
        .collect();
    let mut switches = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.k_star == b.k_star {
            continue;
        }
        let (ka, kb) = (a.k_star, b.k_star);
        let diff = |r: f64| match (d1_along_branch(p, r, ka), d1_along_branch(p, r, kb)) {
            (Some(x), Some(y)) => x - y,
            _ => f64::NAN,
        };
        let (da, db) = (diff(a.r), diff(b.r));
        let r = if da.is_finite() && db.is_finite() && (da > 0.0) != (db > 0.0) {
            bisect(diff, a.r, b.r)
        } else {
            0.5 * (a.r + b.r)
        };
        switches.push(ModeSwitch { r, k_from: ka, k_to: kb });
    }
    TuringCurve { points, switches }
}

/// Codimension-two point where a Hopf point meets the Turing curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct THPoint {
    pub r: f64,
    pub d1: f64,
    pub k_star: u32,
    pub w: f64,
    pub b: f64,
    pub omega0: f64,
}

impl THPoint {
    pub fn state(&self) -> State {
        State::new(self.w, self.b)
    }

    /// Parameters at the point (R and d₁ set).
    pub fn params(&self, p: &ModelParams) -> ModelParams {
        p.with_r(self.r).with_d1(self.d1)
    }
}

/// All TH points on Hopf points inside `bracket`.
pub fn th_points(p: &ModelParams, bracket: (f64, f64)) -> Result<Vec<THPoint>> {
    let hopf = hopf_points(p, bracket)?;
    if hopf.is_empty() {
        return Err(Error::NoIntersection("no Hopf point in the bracket".into()));
    }
    let mut out = Vec::new();
    for h in &hopf {
        let pr = p.with_r(h.r);
        let Ok(ks) = select_kstar(&pr, h.state()) else {
            continue;
        };
        let th = THPoint {
            r: h.r,
            d1: ks.d1,
            k_star: ks.k_star,
            w: h.w,
            b: h.b,
            omega0: h.omega0,
        };
        verify_th(p, &th)?;
        out.push(th);
    }
    if out.is_empty() {
        return Err(Error::NoIntersection("Hopf points lie outside the Turing window".into()));
    }
    Ok(out)
}

/// The TH point on the Hopf point closest to `r_hint`.
pub fn th_point(p: &ModelParams, bracket: (f64, f64), r_hint: f64) -> Result<THPoint> {
    th_points(p, bracket)?
        .into_iter()
        .min_by(|x, y| (x.r - r_hint).abs().total_cmp(&(y.r - r_hint).abs()))
        .ok_or_else(|| Error::NoIntersection("no TH point".into()))
}

fn verify_th(p: &ModelParams, th: &THPoint) -> Result<()> {
    let pr = th.params(p);
    let s = th.state();
    let d0 = dispersion(&pr, s, 0);
    let dk = dispersion(&pr, s, th.k_star);
    let scale = d0.j_k.abs().max(1e-12);
    let ok = d0.t_k.abs() < 1e-8
        && d0.j_k > 0.0
        && dk.j_k.abs() < 1e-8 * scale.max(1.0)
        && dk.t_k < 0.0
        && (1..=k_max(&pr, s).max(th.k_star + 2))
            .filter(|&k| k != th.k_star)
            .all(|k| dispersion(&pr, s, k).j_k > 0.0);
    if ok {
        Ok(())
    } else {
        Err(Error::NoIntersection(format!(
            "TH invariants fail at R = {} (T0 = {:.3e}, J_k* = {:.3e})",
            th.r, d0.t_k, dk.j_k
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapState {
    BareSoilStable,
    UniformVegetation,
    PatternRegion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMap {
    pub theta2: Vec<f64>,
    pub d1: Vec<f64>,
    /// `cells[i][j]` is the state at (theta2[i], d1[j]).
    pub cells: Vec<Vec<MapState>>,
    /// θ₂ below which bare soil is stable.
    pub boundary: f64,
    /// Critical d₁ per θ₂ column (None on bare soil or without a Turing window).
    pub d1_curve: Vec<Option<f64>>,
    /// Biomass of the vegetated equilibrium per column.
    pub biomass: Vec<Option<f64>>,
}

/// Three-state classification over a (θ₂, d₁) grid at fixed R.
pub fn theta2_state_map(p: &ModelParams, theta2: &[f64], d1: &[f64]) -> StateMap {
    let boundary = p.a * (p.mu - p.rho) / (p.rho * p.r);
    let columns: Vec<(Vec<MapState>, Option<f64>, Option<f64>)> = theta2
        .par_iter()
        .map(|&t2| {
            let pt = p.with_theta2(t2);
            if t2 < boundary {
                return (vec![MapState::BareSoilStable; d1.len()], None, None);
            }
            let eq = vegetated_state(&pt);
            let crit = eq.and_then(|e| select_kstar(&pt, e.state()).ok()).map(|k| k.d1);
            let cells = d1
                .iter()
                .map(|&d| match crit {
                    Some(c) if d > c => MapState::PatternRegion,
                    _ => MapState::UniformVegetation,
                })
                .collect();
            (cells, crit, eq.map(|e| e.b))
        })
        .collect();
    let mut cells = Vec::with_capacity(columns.len());
    let mut d1_curve = Vec::with_capacity(columns.len());
    let mut biomass = Vec::with_capacity(columns.len());
    for (c, k, b) in columns {
        cells.push(c);
        d1_curve.push(k);
        biomass.push(b);
    }
    StateMap {
        theta2: theta2.to_vec(),
        d1: d1.to_vec(),
        cells,
        boundary,
        d1_curve,
        biomass,
    }
}

/// Right end of the a₂₂ > 0 window along the vegetated branch, by bisection from `r_inside`.
pub fn a22_window_end(p: &ModelParams, r_inside: f64, r_outside: f64) -> Option<f64> {
    let a22 = |r: f64| {
        let pr = p.with_r(r);
        vegetated_state(&pr).map_or(f64::NAN, |e| jacobian(&pr, e.state()).a22)
    };
    let (x, y) = (a22(r_inside), a22(r_outside));
    if x.is_finite() && y.is_finite() && x > 0.0 && y <= 0.0 {
        Some(bisect(a22, r_inside, r_outside))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_zero_dispersion_is_kinetic() {
        let p = ModelParams::default();
        let eq = vegetated_state(&p).unwrap().state();
        let j = jacobian(&p, eq);
        let d = dispersion(&p, eq, 0);
        assert_eq!((d.t_k, d.j_k), (j.trace(), j.det()));
    }

    #[test]
    fn large_mode_cannot_destabilise() {
        let p = ModelParams::default();
        let eq = vegetated_state(&p).unwrap().state();
        let d = d1_critical(&p, eq, 40).unwrap();
        assert!(!d.destabilizing && d.value < 0.0);
    }
}
