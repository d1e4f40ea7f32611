//! Steady states of the kinetics via the biomass quartic.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::poly;

/// Monic quartic F(b) = b⁴ + c3 b³ + c2 b² + c1 b + c0 whose positive roots are
/// the biomass levels of positive equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticF {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl QuarticF {
    pub fn coeffs(&self) -> [f64; 5] {
        [self.c0, self.c1, self.c2, self.c3, 1.0]
    }

    pub fn eval(&self, b: f64) -> f64 {
        poly::eval(&self.coeffs(), b)
    }

    pub fn deriv(&self, b: f64) -> f64 {
        ((4.0 * b + 3.0 * self.c3) * b + 2.0 * self.c2) * b + self.c1
    }

    pub fn deriv2(&self, b: f64) -> f64 {
        (12.0 * b + 6.0 * self.c3) * b + 2.0 * self.c2
    }
}

pub fn quartic_coeffs(p: &ModelParams) -> QuarticF {
    let (r, a, de, rho, mu, t1, t2) = (p.r, p.a, p.delta, p.rho, p.mu, p.theta1, p.theta2);
    let den = rho * de * de * t1;
    QuarticF {
        c0: (mu * a * r - r * r * rho * t2 - r * a * rho) / den,
        c1: (rho * (r * t2 * a - r * t1 * a + a * a - r * de) + mu * r * de) / den,
        c2: (r * de * t2 - r * de * t1 + 2.0 * a * de + t1 * a * a) / (de * de * t1),
        c3: (2.0 * a * t1 + de) / (de * t1),
    }
}

/// d(c0, c1, c2, c3)/dR.
fn quartic_coeffs_dr(p: &ModelParams) -> [f64; 4] {
    let (r, a, de, rho, mu, t1, t2) = (p.r, p.a, p.delta, p.rho, p.mu, p.theta1, p.theta2);
    let den = rho * de * de * t1;
    [
        (mu * a - 2.0 * r * rho * t2 - a * rho) / den,
        (rho * (t2 * a - t1 * a - de) + mu * de) / den,
        (de * t2 - de * t1) / (de * de * t1),
        0.0,
    ]
}

/// The quartic multiplied through by ρδ²θ₁; stays meaningful when θ₁ = 0.
fn scaled_poly(p: &ModelParams) -> [f64; 5] {
    let (r, a, de, rho, mu, t1, t2) = (p.r, p.a, p.delta, p.rho, p.mu, p.theta1, p.theta2);
    [
        mu * a * r - r * r * rho * t2 - r * a * rho,
        rho * (r * t2 * a - r * t1 * a + a * a - r * de) + mu * r * de,
        rho * (r * de * t2 - r * de * t1 + 2.0 * a * de + t1 * a * a),
        rho * de * (2.0 * a * t1 + de),
        rho * de * de * t1,
    ]
}

/// Curve f₁(θ₂): where c2 changes sign.
pub fn curve_f1(p: &ModelParams) -> f64 {
    let (a, de, t1, t2) = (p.a, p.delta, p.theta1, p.theta2);
    (2.0 * a * de + t1 * a * a) / (de * (t1 - t2))
}

/// Curve f₂(θ₂).
pub fn curve_f2(p: &ModelParams) -> f64 {
    let (a, de, rho, mu, t1, t2) = (p.a, p.delta, p.rho, p.mu, p.theta1, p.theta2);
    rho * a * a / (rho * t1 * a + rho * de - rho * t2 * a - mu * de)
}

/// Curve f₃(θ₂) = a(μ−ρ)/(ρθ₂): where c0 changes sign, the bare-soil threshold.
pub fn curve_f3(p: &ModelParams) -> f64 {
    p.a * (p.mu - p.rho) / (p.rho * p.theta2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRegion {
    pub region: Region,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

/// Region of the (θ₂, R) plane.
pub fn classify_param_region(p: &ModelParams) -> Result<ParamRegion> {
    if !p.mortality_exceeds_growth() {
        return Err(Error::MortalityAssumption { mu: p.mu, rho: p.rho });
    }
    let (f1, f2, f3) = (curve_f1(p), curve_f2(p), curve_f3(p));
    let (r, t1, t2) = (p.r, p.theta1, p.theta2);
    let region = if r > 0.0 && r < f1.min(f3) {
        Region::I
    } else if t2 > t1 && r > f3 {
        Region::II
    } else if t2 < t1 && f3 < r && r < f1 {
        Region::III
    } else if t2 < t1 && r > f1.max(f3) {
        Region::IV
    } else {
        Region::Other
    };
    Ok(ParamRegion { region, f1, f2, f3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EqLabel {
    E0,
    E1,
    E21,
    E22,
    E31,
    E32,
    E33,
}

impl fmt::Display for EqLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EqLabel::E0 => "E0",
            EqLabel::E1 => "E1*",
            EqLabel::E21 => "E21*",
            EqLabel::E22 => "E22*",
            EqLabel::E31 => "E31*",
            EqLabel::E32 => "E32*",
            EqLabel::E33 => "E33*",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EqKind {
    BareSoil,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub w: f64,
    pub b: f64,
    pub kind: EqKind,
    pub label: EqLabel,
    /// Sign of F'(b*) (0 for bare soil).
    pub fprime_sign: i8,
    /// Root is (numerically) a double root: |F'| < 1e-8 there.
    pub near_degenerate: bool,
}

impl Equilibrium {
    pub fn state(&self) -> State {
        State::new(self.w, self.b)
    }
}

pub fn bare_soil_equilibrium(p: &ModelParams) -> Equilibrium {
    Equilibrium {
        w: p.r / p.a,
        b: 0.0,
        kind: EqKind::BareSoil,
        label: EqLabel::E0,
        fprime_sign: 0,
        near_degenerate: false,
    }
}

fn labels(n: usize) -> &'static [EqLabel] {
    match n {
        1 => &[EqLabel::E1],
        2 => &[EqLabel::E21, EqLabel::E22],
        3 => &[EqLabel::E31, EqLabel::E32, EqLabel::E33],
        _ => &[],
    }
}

/// Positive equilibria sorted by biomass.
pub fn find_positive_equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    let roots = poly::positive_roots(&scaled_poly(p));
    let q = if p.theta1 > 0.0 { Some(quartic_coeffs(p)) } else { None };
    let fprime = |b: f64| match q {
        Some(q) => q.deriv(b),
        None => poly::eval(&poly::derivative(&scaled_poly(p)), b),
    };
    let tags = labels(roots.len());
    roots
        .iter()
        .enumerate()
        .map(|(i, root)| {
            let b = root.x;
            let fp = fprime(b);
            Equilibrium {
                w: p.equilibrium_water(b),
                b,
                kind: EqKind::Positive,
                label: tags.get(i).copied().unwrap_or(EqLabel::E1),
                fprime_sign: if fp > 0.0 {
                    1
                } else if fp < 0.0 {
                    -1
                } else {
                    0
                },
                near_degenerate: root.double || fp.abs() < 1e-8,
            }
        })
        .collect()
}

/// Bare soil followed by the positive equilibria.
pub fn all_equilibria(p: &ModelParams) -> Vec<Equilibrium> {
    let mut v = vec![bare_soil_equilibrium(p)];
    v.extend(find_positive_equilibria(p));
    v
}

/// A row of the sign-pattern table for positive roots of the quartic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescartesCase {
    /// Table row 1..=10, or `None` for the sign patterns with no positive root.
    pub row: Option<u8>,
    pub positive_roots: u8,
}

fn sign_of(name: &'static str, v: f64, scale: f64) -> Result<bool> {
    if v.abs() <= 1e-12 * scale.max(1.0) {
        Err(Error::SignBoundary { name, value: v })
    } else {
        Ok(v > 0.0)
    }
}

/// Positive-root count from the coefficient signs and the refinements at the
/// critical points of F and F'.
pub fn descartes_case(q: &QuarticF) -> Result<DescartesCase> {
    if !(q.c3 > 0.0) {
        return Err(Error::Input(format!("c3 = {} must be positive", q.c3)));
    }
    let m2 = sign_of("C2", q.c2, 1.0)?;
    let m1 = sign_of("C1", q.c1, 1.0)?;
    let m0 = sign_of("C0", q.c0, 1.0)?;
    // Positive critical points of F (roots of F').
    let crit: Vec<f64> = poly::positive_roots(&poly::derivative(&q.coeffs()))
        .into_iter()
        .map(|r| r.x)
        .collect();
    let value_scale = |b: f64| poly::magnitude(&q.coeffs(), b);
    let f_at = |name: &'static str, b: f64| sign_of(name, q.eval(b), value_scale(b) * 1e3);
    // Positive inflection point b̄ (unique when C2 < 0).
    let bbar = || -> f64 {
        let disc = 36.0 * q.c3 * q.c3 - 96.0 * q.c2;
        (-6.0 * q.c3 + disc.sqrt()) / 24.0
    };
    let dprime_bbar = |b: f64| {
        sign_of(
            "F'(bbar)",
            q.deriv(b),
            poly::magnitude(&poly::derivative(&q.coeffs()), b) * 1e3,
        )
    };
    let case = |row: u8, n: u8| DescartesCase {
        row: Some(row),
        positive_roots: n,
    };
    let none = DescartesCase {
        row: None,
        positive_roots: 0,
    };
    let last_crit = || -> Result<f64> {
        crit.last()
            .copied()
            .ok_or_else(|| Error::Input("expected a positive critical point".into()))
    };
    Ok(match (m2, m1, m0) {
        (true, true, false) => case(1, 1),
        (true, false, false) => case(2, 1),
        (false, false, false) => case(3, 1),
        (true, true, true) => none,
        (true, false, true) | (false, false, true) => {
            let b12 = last_crit()?;
            if !f_at("F(b12)", b12)? {
                case(if m2 { 7 } else { 8 }, 2)
            } else {
                none
            }
        }
        (false, true, true) => {
            if dprime_bbar(bbar())? {
                none
            } else {
                let b12 = last_crit()?;
                if !f_at("F(b12)", b12)? {
                    case(9, 2)
                } else {
                    none
                }
            }
        }
        (false, true, false) => {
            if dprime_bbar(bbar())? {
                case(4, 1)
            } else {
                if crit.len() < 2 {
                    return Err(Error::SignBoundary {
                        name: "F'(bbar)",
                        value: q.deriv(bbar()),
                    });
                }
                let (b11, b12) = (crit[0], crit[crit.len() - 1]);
                if !f_at("F(b11)", b11)? {
                    case(5, 1)
                } else if f_at("F(b12)", b12)? {
                    case(6, 1)
                } else {
                    case(10, 3)
                }
            }
        }
    })
}

/// Rainfall values of folds (double positive roots) in `bracket`.
pub fn find_saddle_node_r(p: &ModelParams, bracket: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    let n = 400;
    let count = |r: f64| find_positive_equilibria(&p.with_r(r)).len();
    let grid: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let counts: Vec<usize> = grid.iter().map(|&r| count(r)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (c0, c1) = (counts[i], counts[i + 1]);
        if c0 == c1 || (c0 as i64 - c1 as i64).abs() % 2 == 1 {
            // Equal counts or a transcritical crossing through b = 0.
            continue;
        }
        let (mut a, mut b) = (grid[i], grid[i + 1]);
        for _ in 0..40 {
            let m = 0.5 * (a + b);
            if count(m) == c0 {
                a = m;
            } else {
                b = m;
            }
        }
        // Seed biomass: the critical point of F between the merging roots, taken
        // from the grid point on the many-root side where they are well separated.
        let (r_more, n_more) = if c0 > c1 { (grid[i], c0) } else { (grid[i + 1], c1) };
        let eqs = find_positive_equilibria(&p.with_r(r_more));
        if eqs.len() != n_more || n_more < 2 {
            continue;
        }
        let q = quartic_coeffs(&p.with_r(r_more));
        let crit = poly::positive_roots(&poly::derivative(&q.coeffs()));
        let pair = eqs
            .windows(2)
            .min_by(|x, y| (x[1].b - x[0].b).total_cmp(&(y[1].b - y[0].b)))
            .expect("at least two roots");
        let b_seed = crit
            .iter()
            .map(|c| c.x)
            .find(|&c| c > pair[0].b && c < pair[1].b)
            .unwrap_or(0.5 * (pair[0].b + pair[1].b));
        out.push(fold_newton(p, 0.5 * (a + b), b_seed)?);
    }
    Ok(out)
}

fn fold_newton(p: &ModelParams, r0: f64, b0: f64) -> Result<(f64, f64)> {
    let (mut r, mut b) = (r0, b0);
    let mut res = f64::INFINITY;
    for _ in 0..100 {
        let pr = p.with_r(r);
        let q = quartic_coeffs(&pr);
        let dq = quartic_coeffs_dr(&pr);
        let f = q.eval(b);
        let fp = q.deriv(b);
        res = f.abs().max(fp.abs());
        if res < 1e-12 {
            return Ok((r, b));
        }
        let f_r = dq[0] + dq[1] * b + dq[2] * b * b + dq[3] * b * b * b;
        let fp_r = dq[1] + 2.0 * dq[2] * b + 3.0 * dq[3] * b * b;
        let fpp = q.deriv2(b);
        // [fp  f_r; fpp fp_r] [db; dr] = -[f; fp]
        let det = fp * fp_r - f_r * fpp;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let db = (-f * fp_r + f_r * fp) / det;
        let dr = (-fp * fp + fpp * f) / det;
        let mut lambda = 1.0;
        loop {
            let (rn, bn) = (r + lambda * dr, b + lambda * db);
            let qn = quartic_coeffs(&p.with_r(rn));
            let resn = qn.eval(bn).abs().max(qn.deriv(bn).abs());
            if (resn < res && bn > 0.0 && rn > 0.0) || lambda < 1e-6 {
                r = rn;
                b = bn;
                break;
            }
            lambda *= 0.5;
        }
    }
    if res < 1e-9 {
        Ok((r, b))
    } else {
        Err(Error::NoConvergence { r, b, residual: res })
    }
}
