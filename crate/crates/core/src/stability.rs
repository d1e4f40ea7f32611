//! Linear stability of equilibria, Hopf points and their criticality.

use serde::{Deserialize, Serialize};

use crate::equilibria::{find_positive_equilibria, Equilibrium};
use crate::error::{Error, Result};
use crate::linalg::{self, c, C64};
use crate::model::{taylor_coefficients, ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Jacobian2 {
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a21, self.a22]]
    }

    pub fn eigenvalues(&self) -> [C64; 2] {
        linalg::quadratic_eigs(self.trace(), self.det())
    }
}

/// Jacobian at a positive equilibrium, with g_b simplified by the equilibrium identity.
pub fn jacobian(p: &ModelParams, eq: State) -> Jacobian2 {
    let (w, b) = (eq.w, eq.b);
    let s = 1.0 + p.theta1 * b + p.theta2 * w;
    Jacobian2 {
        a11: -p.a - p.delta * b,
        a12: -p.delta * w,
        a21: p.rho * b * b / (w * w) + p.mu * p.theta2 * b / (s * s),
        a22: p.mu * p.theta1 * b / (s * s) - p.rho * b / w,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(f64),
    /// μ ≤ ρ: bare soil is unstable for every rainfall.
    AlwaysUnstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareSoilVerdict {
    pub eigenvalues: [f64; 2],
    pub threshold: Threshold,
    pub stable: bool,
}

/// Bare-soil threshold a(μ−ρ)/(ρθ₂); `None` when it is not a finite positive value.
pub fn bare_soil_threshold(p: &ModelParams) -> Option<f64> {
    if p.mu <= p.rho || p.theta2 <= 0.0 {
        None
    } else {
        Some(p.a * (p.mu - p.rho) / (p.rho * p.theta2))
    }
}

pub fn bare_soil_stability(p: &ModelParams) -> BareSoilVerdict {
    let l2 = p.rho - p.mu * p.a / (p.a + p.theta2 * p.r);
    let threshold = if p.mu <= p.rho {
        Threshold::AlwaysUnstable
    } else {
        match bare_soil_threshold(p) {
            Some(t) => Threshold::Finite(t),
            // θ₂ = 0 with μ > ρ: stable for every R.
            None => Threshold::Finite(f64::INFINITY),
        }
    };
    BareSoilVerdict {
        eigenvalues: [-p.a, l2],
        threshold,
        stable: l2 < 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityKind {
    Stable,
    UnstableFocusOrNode,
    Saddle,
    /// Zero trace or determinant, or the T_min = 0 boundary.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    H1,
    H2,
    H3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub kind: StabilityKind,
    pub condition: Option<Condition>,
    pub k0: f64,
    pub k1: f64,
    /// T(R, b*); the trace is −P·T.
    pub t_value: f64,
    pub p_value: f64,
    pub trace: f64,
    pub det: f64,
}

/// (K0, K1) of the trace factorisation at biomass `b`.
pub fn trace_factors(p: &ModelParams, b: f64) -> (f64, f64) {
    let (a, de, rho, t1, t2) = (p.a, p.delta, p.rho, p.theta1, p.theta2);
    let k1 = de * t1 * b * b + (a * t1 + de + rho * t2 - rho * t1) * b + a;
    let k0 = rho * b * (a + de * b) * (1.0 + 2.0 * t1 * b);
    (k0, k1)
}

/// T(R, b) = θ₂R² + K₁R + K₀.
pub fn trace_t(p: &ModelParams, r: f64, b: f64) -> f64 {
    let (k0, k1) = trace_factors(p, b);
    p.theta2 * r * r + k1 * r + k0
}

fn trace_p(p: &ModelParams, r: f64, b: f64) -> f64 {
    let s = p.a + p.delta * b;
    s / (r * ((1.0 + p.theta1 * b) * s + p.theta2 * r))
}

pub fn stability_verdict(p: &ModelParams, eq: State) -> StabilityVerdict {
    let j = jacobian(p, eq);
    let (tr, det) = (j.trace(), j.det());
    let (k0, k1) = trace_factors(p, eq.b);
    let t_value = trace_t(p, p.r, eq.b);
    let p_value = trace_p(p, p.r, eq.b);
    let scale = j.a11.abs() + j.a22.abs() + (j.a12 * j.a21).abs().sqrt();
    let t_scale = (p.theta2 * p.r * p.r).abs() + (k1 * p.r).abs() + k0.abs();

    let t_min = if p.theta2 > 0.0 {
        k0 - k1 * k1 / (4.0 * p.theta2)
    } else {
        f64::NAN
    };
    let on_tmin_boundary = k1 < 0.0 && t_min.is_finite() && t_min.abs() <= 1e-12 * t_scale.max(1.0);

    let kind = if det < 0.0 && det.abs() > 1e-12 * scale * scale {
        StabilityKind::Saddle
    } else if det.abs() <= 1e-12 * scale * scale || tr.abs() <= 1e-12 * scale || on_tmin_boundary {
        StabilityKind::Degenerate
    } else if tr < 0.0 {
        StabilityKind::Stable
    } else {
        StabilityKind::UnstableFocusOrNode
    };
    let condition = if tr < 0.0 && kind != StabilityKind::Degenerate {
        if k1 >= 0.0 {
            Some(Condition::H1)
        } else if t_min > 0.0 {
            Some(Condition::H2)
        } else {
            Some(Condition::H3)
        }
    } else {
        None
    };
    StabilityVerdict {
        kind,
        condition,
        k0,
        k1,
        t_value,
        p_value,
        trace: tr,
        det,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    /// ℓ₁ < 0: stable cycle.
    Super,
    /// ℓ₁ > 0: unstable cycle.
    Sub,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub r: f64,
    pub w: f64,
    pub b: f64,
    pub omega0: f64,
    /// dα/dR, α the real part of the critical pair.
    pub transversality: f64,
    pub lyapunov: f64,
    pub criticality: Criticality,
}

impl HopfPoint {
    pub fn state(&self) -> State {
        State::new(self.w, self.b)
    }

    pub fn transversality_sign(&self) -> i8 {
        if self.transversality > 0.0 {
            1
        } else if self.transversality < 0.0 {
            -1
        } else {
            0
        }
    }
}

/// h(b; R): biomass equation per unit biomass on the water nullcline.
fn h_fn(p: &ModelParams, r: f64, b: f64) -> f64 {
    let s = p.a + p.delta * b;
    p.rho / r * (r - p.a * b - p.delta * b * b) - p.mu * s / ((1.0 + p.theta1 * b) * s + p.theta2 * r)
}

fn h_db(p: &ModelParams, r: f64, b: f64) -> f64 {
    let s = p.a + p.delta * b;
    let den = (1.0 + p.theta1 * b) * s + p.theta2 * r;
    (p.mu * p.theta1 * s * s - p.mu * p.delta * p.theta2 * r) / (den * den) - p.rho / r * (p.a + 2.0 * p.delta * b)
}

fn h_dr(p: &ModelParams, r: f64, b: f64) -> f64 {
    let s = p.a + p.delta * b;
    let den = (1.0 + p.theta1 * b) * s + p.theta2 * r;
    p.rho * b * s / (r * r) + p.mu * p.theta2 * s / (den * den)
}

fn t_dr(p: &ModelParams, r: f64, b: f64) -> f64 {
    let (_, k1) = trace_factors(p, b);
    2.0 * p.theta2 * r + k1
}

fn t_db(p: &ModelParams, r: f64, b: f64) -> f64 {
    let (a, de, rho, t1, t2) = (p.a, p.delta, p.rho, p.theta1, p.theta2);
    let dk1 = 2.0 * de * t1 * b + (a * t1 + de + rho * t2 - rho * t1);
    let dk0 = rho * ((a + 2.0 * de * b) * (1.0 + 2.0 * t1 * b) + 2.0 * t1 * (a * b + de * b * b));
    r * dk1 + dk0
}

/// db*/dR along a branch of positive equilibria.
pub fn branch_slope(p: &ModelParams, r: f64, b: f64) -> f64 {
    -h_dr(p, r, b) / h_db(p, r, b)
}

fn hopf_newton(p: &ModelParams, r0: f64, b0: f64) -> Result<(f64, f64)> {
    let (mut r, mut b) = (r0, b0);
    let res_of = |r: f64, b: f64| {
        let t = trace_t(p, r, b);
        let tscale = 1.0 + trace_factors(p, b).0.abs() + p.theta2 * r * r;
        h_fn(p, r, b).abs().max((t / tscale).abs())
    };
    let mut res = res_of(r, b);
    for _ in 0..100 {
        if res < 1e-14 {
            break;
        }
        let (f1, f2) = (h_fn(p, r, b), trace_t(p, r, b));
        let (j11, j12, j21, j22) = (h_dr(p, r, b), h_db(p, r, b), t_dr(p, r, b), t_db(p, r, b));
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dr = (-f1 * j22 + j12 * f2) / det;
        let db = (-j11 * f2 + j21 * f1) / det;
        let mut lambda = 1.0;
        loop {
            let (rn, bn) = (r + lambda * dr, b + lambda * db);
            let rn_ok = rn > 0.0 && bn > 0.0;
            let resn = if rn_ok { res_of(rn, bn) } else { f64::INFINITY };
            if resn < res || lambda < 1e-8 {
                if rn_ok {
                    r = rn;
                    b = bn;
                    res = resn;
                }
                break;
            }
            lambda *= 0.5;
        }
        if lambda < 1e-8 {
            break;
        }
    }
    if res < 1e-10 {
        Ok((r, b))
    } else {
        Err(Error::NoConvergence { r, b, residual: res })
    }
}

/// Hopf points on branches with det > 0 inside `bracket`, ordered by R.
pub fn hopf_points(p: &ModelParams, bracket: (f64, f64)) -> Result<Vec<HopfPoint>> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let n = 400;
    let samples: Vec<(f64, Vec<Equilibrium>)> = (0..=n)
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / n as f64;
            let eqs = find_positive_equilibria(&p.with_r(r))
                .into_iter()
                .filter(|e| e.fprime_sign > 0)
                .collect();
            (r, eqs)
        })
        .collect();
    let mut found: Vec<HopfPoint> = Vec::new();
    for win in samples.windows(2) {
        let (r0, ref e0) = win[0];
        let (r1, ref e1) = win[1];
        for a in e0 {
            // Continuation partner: the closest stable-determinant root at the next R.
            let Some(bp) = e1
                .iter()
                .min_by(|x, y| (x.b - a.b).abs().total_cmp(&(y.b - a.b).abs()))
            else {
                continue;
            };
            let spread = (bp.b - a.b).abs();
            let nearest_other = e0
                .iter()
                .filter(|o| o.b != a.b)
                .map(|o| (o.b - a.b).abs())
                .fold(f64::INFINITY, f64::min);
            if spread > 0.5 * nearest_other {
                continue;
            }
            let t0 = trace_t(p, r0, a.b);
            let t1 = trace_t(p, r1, bp.b);
            if (t0 > 0.0) == (t1 > 0.0) {
                continue;
            }
            let rm = r0 - t0 * (r1 - r0) / (t1 - t0);
            let bm = a.b + (bp.b - a.b) * (rm - r0) / (r1 - r0);
            let (r, b) = hopf_newton(p, rm, bm)?;
            let jump_allow = 2.0 * spread.max(1e-3 * a.b.max(1.0)) + 0.25 * nearest_other.min(a.b);
            if (b - bm).abs() > jump_allow || r < r0 - (r1 - r0) || r > r1 + (r1 - r0) {
                return Err(Error::BranchSwitch { from: bm, to: b });
            }
            if found.iter().any(|h| (h.r - r).abs() < 1e-9 && (h.b - b).abs() < 1e-9) {
                continue;
            }
            found.push(make_hopf_point(p, r, b));
        }
    }
    found.sort_by(|x, y| x.r.total_cmp(&y.r));
    Ok(found)
}

fn make_hopf_point(p: &ModelParams, r: f64, b: f64) -> HopfPoint {
    let pr = p.with_r(r);
    let w = pr.equilibrium_water(b);
    let j = jacobian(&pr, State::new(w, b));
    let slope = branch_slope(p, r, b);
    let transversality = -0.5 * trace_p(p, r, b) * (t_dr(p, r, b) + t_db(p, r, b) * slope);
    let omega0 = j.det().max(0.0).sqrt();
    let lyapunov = first_lyapunov(&pr, State::new(w, b));
    HopfPoint {
        r,
        w,
        b,
        omega0,
        transversality,
        lyapunov,
        criticality: criticality_of(lyapunov),
    }
}

fn criticality_of(l1: f64) -> Criticality {
    if l1.abs() < 1e-8 || !l1.is_finite() {
        Criticality::Degenerate
    } else if l1 < 0.0 {
        Criticality::Super
    } else {
        Criticality::Sub
    }
}

/// First Lyapunov coefficient at an equilibrium with a purely imaginary pair,
/// using the eigenvector normalised to unit length.
pub fn first_lyapunov(p: &ModelParams, eq: State) -> f64 {
    let t = taylor_coefficients(p, eq);
    let jr = t.linear();
    let a = linalg::real_mat(jr);
    let det = jr[0][0] * jr[1][1] - jr[0][1] * jr[1][0];
    let om = det.sqrt();
    let iw = C64::new(0.0, om);
    let mut pv = [c(1.0), (iw - a[0][0]) / a[0][1]];
    let n = linalg::norm(&pv);
    pv = linalg::scale(c(1.0 / n), &pv);
    // Left eigenvector for iω with qᵀp = 1.
    let mut qv = [c(1.0), (iw - a[0][0]) / a[1][0]];
    let qp = linalg::dot(&qv, &pv);
    qv = linalg::scale(c(1.0) / qp, &qv);
    let pb = linalg::conj(&pv);

    let b_ppb = t.quadratic(pv, pb);
    let b_pp = t.quadratic(pv, pv);
    let Some(h11) = linalg::solve(&a, &b_ppb) else {
        return f64::NAN;
    };
    let Some(h20) = linalg::solve(&linalg::shift_minus(c(2.0) * iw, &a), &b_pp) else {
        return f64::NAN;
    };
    let term = linalg::dot(&qv, &t.cubic(pv, pv, pb)) - c(2.0) * linalg::dot(&qv, &t.quadratic(pv, h11))
        + linalg::dot(&qv, &t.quadratic(pb, h20));
    term.re / (2.0 * om)
}

pub fn first_lyapunov_sign(p: &ModelParams, hp: &HopfPoint) -> Criticality {
    criticality_of(first_lyapunov(&p.with_r(hp.r), hp.state()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_soil_thresholds() {
        for (t2, want) in [(0.075, 12.0), (0.18, 5.0), (0.21, 4.2857142857)] {
            let p = ModelParams::dryland(2.5, t2, 1.0);
            assert!((bare_soil_threshold(&p).unwrap() - want).abs() < 1e-6);
        }
        let mut p = ModelParams::dryland(2.5, 0.2, 1.0);
        p.mu = 0.5;
        assert_eq!(bare_soil_stability(&p).threshold, Threshold::AlwaysUnstable);
        assert!(!bare_soil_stability(&p).stable);
    }

    #[test]
    fn trace_factorisation_matches_trace() {
        let p = ModelParams::dryland(2.5, 0.18, 8.8);
        for e in find_positive_equilibria(&p) {
            let v = stability_verdict(&p, e.state());
            assert!((v.trace + v.p_value * v.t_value).abs() < 1e-10 * (1.0 + v.trace.abs()));
        }
    }

    #[test]
    fn middle_root_is_saddle() {
        let p = ModelParams::dryland(2.5, 0.18, 8.8);
        let eqs = find_positive_equilibria(&p);
        assert_eq!(stability_verdict(&p, eqs[1].state()).kind, StabilityKind::Saddle);
    }
}
