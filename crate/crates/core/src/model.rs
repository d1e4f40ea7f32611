//! Model parameters, kinetics and closed-form Taylor coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar parameters of the water–biomass system on the interval (0, l·π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Rainfall rate.
    pub r: f64,
    /// Evaporation rate.
    pub a: f64,
    /// Water uptake per unit biomass.
    pub delta: f64,
    /// Intrinsic biomass growth rate.
    pub rho: f64,
    /// Base mortality.
    pub mu: f64,
    /// Infiltration feedback on mortality.
    pub theta1: f64,
    /// Soil-moisture feedback on mortality.
    pub theta2: f64,
    /// Water diffusion.
    pub d1: f64,
    /// Biomass diffusion.
    pub d2: f64,
    /// Domain length factor.
    pub l: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            r: 1.564687,
            a: 0.1,
            delta: 0.12,
            rho: 1.0,
            mu: 10.0,
            theta1: 5.0,
            theta2: 0.8,
            d1: 0.03114,
            d2: 0.01,
            l: 3.0,
        }
    }
}

impl ModelParams {
    /// Validated constructor. Diffusion defaults to `d1 = 0.03, d2 = 0.01, l = 3`.
    pub fn new(r: f64, a: f64, delta: f64, rho: f64, mu: f64, theta1: f64, theta2: f64) -> Result<Self> {
        Self {
            r,
            a,
            delta,
            rho,
            mu,
            theta1,
            theta2,
            d1: 0.03,
            d2: 0.01,
            l: 3.0,
        }
        .validated()
    }

    /// The dryland parameter set used throughout the examples
    /// (a = 0.1, δ = 0.12, ρ = 1, μ = 10) with the given feedbacks and rainfall.
    pub fn dryland(theta1: f64, theta2: f64, r: f64) -> Self {
        Self {
            r,
            theta1,
            theta2,
            ..Self::default()
        }
    }

    pub fn validated(self) -> Result<Self> {
        let positive = [
            ("R", self.r),
            ("a", self.a),
            ("delta", self.delta),
            ("rho", self.rho),
            ("mu", self.mu),
            ("l", self.l),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        let nonneg = [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("d1", self.d1),
            ("d2", self.d2),
        ];
        for (name, value) in nonneg {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be nonnegative and finite",
                });
            }
        }
        Ok(self)
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_d1(mut self, d1: f64) -> Self {
        self.d1 = d1;
        self
    }

    pub fn with_theta2(mut self, theta2: f64) -> Self {
        self.theta2 = theta2;
        self
    }

    /// True when base mortality exceeds growth, the regime the region geometry assumes.
    pub fn mortality_exceeds_growth(&self) -> bool {
        self.mu > self.rho
    }

    /// Bare-soil state (R/a, 0).
    pub fn bare_soil(&self) -> State {
        State::new(self.r / self.a, 0.0)
    }

    /// Water level on the equilibrium curve for biomass `b`.
    pub fn equilibrium_water(&self, b: f64) -> f64 {
        self.r / (self.a + self.delta * b)
    }

    /// Scale used for "is an equilibrium" residual checks.
    pub(crate) fn residual_scale(&self) -> f64 {
        self.r.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub w: f64,
    pub b: f64,
}

impl State {
    pub const fn new(w: f64, b: f64) -> Self {
        Self { w, b }
    }
}

/// Reaction rates (f, g) at state `s`.
pub fn kinetics(p: &ModelParams, s: State) -> Result<(f64, f64)> {
    if !(s.w > 0.0) {
        return Err(Error::Domain { w: s.w });
    }
    Ok(kinetics_unchecked(p, s.w, s.b))
}

#[inline]
pub(crate) fn kinetics_unchecked(p: &ModelParams, w: f64, b: f64) -> (f64, f64) {
    let f = p.r - p.a * w - p.delta * w * b;
    let g = p.rho * b * (1.0 - b / w) - p.mu * b / (1.0 + p.theta1 * b + p.theta2 * w);
    (f, g)
}

/// Mortality μ/(1 + θ₁b + θ₂w).
pub fn mortality(p: &ModelParams, s: State) -> f64 {
    p.mu / (1.0 + p.theta1 * s.b + p.theta2 * s.w)
}

/// First partial derivatives [[f_w, f_b], [g_w, g_b]] at an arbitrary state.
pub fn partials(p: &ModelParams, s: State) -> [[f64; 2]; 2] {
    let (w, b) = (s.w, s.b);
    let sden = 1.0 + p.theta1 * b + p.theta2 * w;
    let s2 = sden * sden;
    [
        [-p.a - p.delta * b, -p.delta * w],
        [
            p.rho * b * b / (w * w) + p.mu * p.theta2 * b / s2,
            p.rho * (1.0 - 2.0 * b / w) - p.mu / sden + p.mu * p.theta1 * b / s2,
        ],
    ]
}

/// Taylor coefficients of (f, g) around an equilibrium.
///
/// `a[i][j]` holds A_{i+1, j+1}: the expansion is
/// `A1 u + A2 v + A3 u² + A4 uv + A5 v² + A6 u³ + A7 u²v + A8 uv² + A9 v³`
/// in the deviations u = w − w*, v = b − b*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivTensor {
    pub state: State,
    pub a: [[f64; 9]; 2],
}

impl DerivTensor {
    /// A_{ij} with 1-based indices.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.a[i - 1][j - 1]
    }

    /// Raw second partials [∂²/∂w², ∂²/∂w∂b, ∂²/∂b²] of component `i` (0 = f, 1 = g).
    pub fn second(&self, i: usize) -> [f64; 3] {
        let c = &self.a[i];
        [2.0 * c[2], c[3], 2.0 * c[4]]
    }

    /// Raw third partials [www, wwb, wbb, bbb] of component `i`.
    pub fn third(&self, i: usize) -> [f64; 4] {
        let c = &self.a[i];
        [6.0 * c[5], 2.0 * c[6], 2.0 * c[7], 6.0 * c[8]]
    }

    /// Jacobian at the expansion point.
    pub fn linear(&self) -> [[f64; 2]; 2] {
        [[self.a[0][0], self.a[0][1]], [self.a[1][0], self.a[1][1]]]
    }

    /// Symmetric bilinear form of second derivatives.
    pub fn quadratic(&self, x: [Complex64; 2], y: [Complex64; 2]) -> [Complex64; 2] {
        let mut out = [Complex64::default(); 2];
        for (i, o) in out.iter_mut().enumerate() {
            let [gww, gwb, gbb] = self.second(i);
            *o = x[0] * y[0] * gww + (x[0] * y[1] + x[1] * y[0]) * gwb + x[1] * y[1] * gbb;
        }
        out
    }

    /// Symmetric trilinear form of third derivatives.
    pub fn cubic(&self, x: [Complex64; 2], y: [Complex64; 2], z: [Complex64; 2]) -> [Complex64; 2] {
        let mut out = [Complex64::default(); 2];
        for (i, o) in out.iter_mut().enumerate() {
            let [t0, t1, t2, t3] = self.third(i);
            *o = x[0] * y[0] * z[0] * t0
                + (x[0] * y[0] * z[1] + x[0] * y[1] * z[0] + x[1] * y[0] * z[0]) * t1
                + (x[0] * y[1] * z[1] + x[1] * y[0] * z[1] + x[1] * y[1] * z[0]) * t2
                + x[1] * y[1] * z[1] * t3;
        }
        out
    }
}

/// Taylor coefficients at `eq`, which must be an equilibrium.
pub fn deriv_tensor(p: &ModelParams, eq: State) -> Result<DerivTensor> {
    let (f, g) = kinetics(p, eq)?;
    let residual = f.abs().max(g.abs());
    if residual > 1e-8 * p.residual_scale() {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok(taylor_coefficients(p, eq))
}

/// Taylor coefficients at any state (no equilibrium check).
pub fn taylor_coefficients(p: &ModelParams, s: State) -> DerivTensor {
    let (w, b) = (s.w, s.b);
    let (rho, mu, t1, t2) = (p.rho, p.mu, p.theta1, p.theta2);
    let sd = 1.0 + t1 * b + t2 * w;
    let (s2, s3, s4) = (sd * sd, sd * sd * sd, sd * sd * sd * sd);
    let (w2, w3, w4) = (w * w, w * w * w, w * w * w * w);
    let j = partials(p, s);

    let f_row = [j[0][0], j[0][1], 0.0, -p.delta, 0.0, 0.0, 0.0, 0.0, 0.0];
    let g_row = [
        j[1][0],
        j[1][1],
        -rho * b * b / w3 - mu * t2 * t2 * b / s3,
        2.0 * rho * b / w2 + mu * t2 / s2 - 2.0 * mu * t1 * t2 * b / s3,
        -rho / w + mu * t1 / s2 - mu * t1 * t1 * b / s3,
        rho * b * b / w4 + mu * t2 * t2 * t2 * b / s4,
        -2.0 * rho * b / w3 - mu * t2 * t2 / s3 + 3.0 * mu * t1 * t2 * t2 * b / s4,
        rho / w2 - 2.0 * mu * t1 * t2 / s3 + 3.0 * mu * t1 * t1 * t2 * b / s4,
        -mu * t1 * t1 * (1.0 + t2 * w) / s4,
    ];
    DerivTensor {
        state: s,
        a: [f_row, g_row],
    }
}

/// First-order sensitivity of a positive equilibrium to the rainfall R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumShift {
    pub w_tilde: f64,
    pub b_tilde: f64,
    /// Denominator of the b̃ expression.
    pub m: f64,
}

/// d(w*, b*)/dR at a positive equilibrium.
pub fn equilibrium_shift(p: &ModelParams, eq: State) -> Result<EquilibriumShift> {
    let (r, a, de, rho, mu, t1, t2) = (p.r, p.a, p.delta, p.rho, p.mu, p.theta1, p.theta2);
    let b = eq.b;
    let q = crate::equilibria::quartic_coeffs(p);
    let fp = q.deriv(b);
    let scale = 1.0 + q.c1.abs() + q.c2.abs() * b + q.c3.abs() * b * b + 4.0 * b * b * b;
    if fp.abs() < 1e-10 * scale {
        return Err(Error::DegenerateEquilibrium(format!("F'(b*) = {fp:.3e}")));
    }
    let num = rho * de * (t1 - t2) * b * b + rho * (de + (t1 - t2) * a) * b + 2.0 * rho * r * t2 + a * rho
        - mu * (b * de + a);
    let m = 4.0 * b * b * b * rho * de * de * t1
        + rho * (6.0 * a * de * t1 + 3.0 * de * de) * b * b
        + rho * ((-2.0 * r * t1 + 2.0 * r * t2 + 4.0 * a) * de + 2.0 * a * a * t1) * b
        - rho * r * de
        - a * rho * (-a + r * (t1 - t2))
        + r * de * mu;
    if m == 0.0 {
        return Err(Error::DegenerateEquilibrium("M = 0".into()));
    }
    let b_tilde = num / m;
    let s = a + de * b;
    let w_tilde = (s - de * r * b_tilde) / (s * s);
    Ok(EquilibriumShift { w_tilde, b_tilde, m })
}
