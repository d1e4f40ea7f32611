//! Method-of-lines solver for the 1-D reaction-diffusion system on (0, lπ) with
//! zero-flux ends.

use serde::{Deserialize, Serialize};

use super::ode::invariant_bounds;
use crate::error::{Error, Result};
use crate::model::{kinetics_unchecked, ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Strang splitting: Crank–Nicolson diffusion half-steps around an RK4 reaction
    /// step, step size from step doubling.
    Imex,
    /// Classical RK4 on the full semi-discrete system with dt = cfl·dx²/max(d1, d2).
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdeConfig {
    pub nx: usize,
    pub t_end: f64,
    /// Snapshot spacing.
    pub dt_out: f64,
    pub scheme: Scheme,
    /// Local error tolerance of the IMEX step control (absolute + relative).
    pub tol: f64,
    /// Explicit step as a fraction of dx²/max(d1, d2).
    pub cfl: f64,
    /// Amplitude of the cos(seed_mode·x/l) seed added to both fields.
    pub seed_amp: f64,
    pub seed_mode: u32,
}

impl Default for PdeConfig {
    fn default() -> Self {
        Self {
            nx: 256,
            t_end: 1000.0,
            dt_out: 1.0,
            scheme: Scheme::Imex,
            tol: 1e-7,
            cfl: 0.4,
            seed_amp: 1e-6,
            seed_mode: 8,
        }
    }
}

/// Initial data before the seed is added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialProfile {
    /// base + amp·cos(freq·x) in both components.
    Cosine { base: State, amp: f64, freq: f64 },
    /// Spatially constant base + offset in both components.
    Constant { base: State, offset: f64 },
    Values { w: Vec<f64>, b: Vec<f64> },
}

impl InitialProfile {
    fn sample(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok(match self {
            InitialProfile::Cosine { base, amp, freq } => (
                x.iter().map(|&x| base.w + amp * (freq * x).cos()).collect(),
                x.iter().map(|&x| base.b + amp * (freq * x).cos()).collect(),
            ),
            InitialProfile::Constant { base, offset } => (vec![base.w + offset; x.len()], vec![base.b + offset; x.len()]),
            InitialProfile::Values { w, b } => {
                if w.len() != x.len() || b.len() != x.len() {
                    return Err(Error::Input(format!(
                        "initial profile has {}/{} values for {} grid points",
                        w.len(),
                        b.len(),
                        x.len()
                    )));
                }
                (w.clone(), b.clone())
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Snapshots of (w(x), b(x)) on the cell-centred grid x_i = (i + ½)·lπ/nx.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeField {
    pub l: f64,
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub stats: PdeStats,
}

impl PdeField {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

pub fn grid(nx: usize, l: f64) -> Vec<f64> {
    let dx = l * std::f64::consts::PI / nx as f64;
    (0..nx).map(|i| (i as f64 + 0.5) * dx).collect()
}

/// Discrete Laplacian with mirror ghost cells (u₋₁ = u₀, u_n = u_{n−1}).
fn laplacian(u: &[f64], inv_dx2: f64, out: &mut [f64]) {
    let n = u.len();
    for i in 0..n {
        let left = u[i.saturating_sub(1)];
        let right = u[(i + 1).min(n - 1)];
        out[i] = (left - 2.0 * u[i] + right) * inv_dx2;
    }
}

/// Solves (I − c·Δ) v = rhs for the Neumann Laplacian (Thomas algorithm).
struct Implicit {
    sub: f64,
    diag: Vec<f64>,
    cp: Vec<f64>,
}

impl Implicit {
    fn new(n: usize, c: f64) -> Self {
        let sub = -c;
        let mut diag = vec![1.0 + 2.0 * c; n];
        diag[0] = 1.0 + c;
        diag[n - 1] = 1.0 + c;
        let mut cp = vec![0.0; n];
        let mut m = diag[0];
        for i in 0..n - 1 {
            cp[i] = sub / m;
            m = diag[i + 1] - sub * cp[i];
        }
        Self { sub, diag, cp }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        let mut m = self.diag[0];
        rhs[0] /= m;
        for i in 1..n {
            m = self.diag[i] - self.sub * self.cp[i - 1];
            rhs[i] = (rhs[i] - self.sub * rhs[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.cp[i] * rhs[i + 1];
        }
    }
}

struct Stepper<'a> {
    p: &'a ModelParams,
    inv_dx2: f64,
    scratch: Vec<f64>,
}

impl Stepper<'_> {
    /// Crank–Nicolson over `h` for one component.
    fn diffuse(&mut self, u: &mut [f64], d: f64, h: f64) {
        let c = 0.5 * d * h * self.inv_dx2;
        laplacian(u, self.inv_dx2, &mut self.scratch);
        for (ui, li) in u.iter_mut().zip(&self.scratch) {
            *ui += 0.5 * d * h * li;
        }
        Implicit::new(u.len(), c).solve(u);
    }

    /// Pointwise RK4 on the kinetics.
    fn react(&self, w: &mut [f64], b: &mut [f64], h: f64) {
        for (wi, bi) in w.iter_mut().zip(b.iter_mut()) {
            let k1 = kinetics_unchecked(self.p, *wi, *bi);
            let k2 = kinetics_unchecked(self.p, *wi + 0.5 * h * k1.0, *bi + 0.5 * h * k1.1);
            let k3 = kinetics_unchecked(self.p, *wi + 0.5 * h * k2.0, *bi + 0.5 * h * k2.1);
            let k4 = kinetics_unchecked(self.p, *wi + h * k3.0, *bi + h * k3.1);
            *wi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            *bi += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
    }

    fn strang(&mut self, w: &mut [f64], b: &mut [f64], h: f64) {
        let (d1, d2) = (self.p.d1, self.p.d2);
        self.diffuse(w, d1, 0.5 * h);
        self.diffuse(b, d2, 0.5 * h);
        self.react(w, b, h);
        self.diffuse(w, d1, 0.5 * h);
        self.diffuse(b, d2, 0.5 * h);
    }

    fn rhs(&self, w: &[f64], b: &[f64], fw: &mut [f64], fb: &mut [f64]) {
        laplacian(w, self.inv_dx2, fw);
        laplacian(b, self.inv_dx2, fb);
        for i in 0..w.len() {
            let (f, g) = kinetics_unchecked(self.p, w[i], b[i]);
            fw[i] = self.p.d1 * fw[i] + f;
            fb[i] = self.p.d2 * fb[i] + g;
        }
    }

    /// Classical RK4 on the full semi-discrete system.
    fn rk4(&self, w: &mut [f64], b: &mut [f64], h: f64) {
        let n = w.len();
        let mut kw = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut kb = kw.clone();
        let (mut tw, mut tb) = (vec![0.0; n], vec![0.0; n]);
        self.rhs(w, b, &mut kw[0], &mut kb[0]);
        for s in 1..4 {
            let c = if s == 3 { h } else { 0.5 * h };
            for i in 0..n {
                tw[i] = w[i] + c * kw[s - 1][i];
                tb[i] = b[i] + c * kb[s - 1][i];
            }
            self.rhs(&tw, &tb, &mut kw[s], &mut kb[s]);
        }
        for i in 0..n {
            w[i] += h / 6.0 * (kw[0][i] + 2.0 * kw[1][i] + 2.0 * kw[2][i] + kw[3][i]);
            b[i] += h / 6.0 * (kb[0][i] + 2.0 * kb[1][i] + 2.0 * kb[2][i] + kb[3][i]);
        }
    }
}

/// Integrate the PDE from `init` plus the seed; snapshots every `cfg.dt_out`.
pub fn simulate_pde(p: &ModelParams, init: &InitialProfile, cfg: &PdeConfig) -> Result<PdeField> {
    p.validated()?;
    if cfg.nx < 8 * cfg.seed_mode.max(1) as usize {
        return Err(Error::Input(format!(
            "nx = {} is below 8 grid points per unit of the seed mode {}",
            cfg.nx, cfg.seed_mode
        )));
    }
    if !(cfg.t_end >= 0.0 && cfg.dt_out > 0.0 && cfg.tol > 0.0 && cfg.cfl > 0.0) {
        return Err(Error::Input("t_end, dt_out, tol and cfl must be positive".into()));
    }
    if !(p.d1 > 0.0 && p.d2 > 0.0 && p.l > 0.0) {
        return Err(Error::Input("diffusion coefficients and domain scale must be positive".into()));
    }
    let x = grid(cfg.nx, p.l);
    let (mut w, mut b) = init.sample(&x)?;
    for (i, &xi) in x.iter().enumerate() {
        let s = cfg.seed_amp * (cfg.seed_mode as f64 * xi / p.l).cos();
        w[i] += s;
        b[i] += s;
    }
    if w.iter().any(|&v| !(v > 0.0)) || b.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::Input("initial profile must have w > 0 and b >= 0".into()));
    }
    let start = State::new(w.iter().copied().fold(f64::MIN, f64::max), b.iter().copied().fold(f64::MIN, f64::max));
    let (_, w_max, b_max) = invariant_bounds(p, start);
    let (w_cap, b_cap) = (1e3 * w_max, 1e3 * b_max);
    let blown = |w: &[f64], b: &[f64]| {
        w.iter().any(|v| !(v.abs() <= w_cap)) || b.iter().any(|v| !(v.abs() <= b_cap))
    };

    let dx = p.l * std::f64::consts::PI / cfg.nx as f64;
    let mut st = Stepper {
        p,
        inv_dx2: 1.0 / (dx * dx),
        scratch: vec![0.0; cfg.nx],
    };
    let n_out = (cfg.t_end / cfg.dt_out + 1e-9).floor() as usize;
    let mut field = PdeField {
        l: p.l,
        x,
        times: vec![0.0],
        w: vec![w.clone()],
        b: vec![b.clone()],
        stats: PdeStats::default(),
    };
    let dt_cfl = cfg.cfl * dx * dx / p.d1.max(p.d2);
    let mut h = dt_cfl.min(cfg.dt_out);
    let mut t = 0.0;
    for k in 1..=n_out.max(if cfg.t_end > 0.0 { 1 } else { 0 }) {
        let t_next = (k as f64 * cfg.dt_out).min(cfg.t_end);
        match cfg.scheme {
            Scheme::Explicit => {
                let steps = ((t_next - t) / dt_cfl).ceil().max(1.0) as usize;
                let hs = (t_next - t) / steps as f64;
                for _ in 0..steps {
                    st.rk4(&mut w, &mut b, hs);
                    field.stats.accepted += 1;
                }
                if blown(&w, &b) {
                    return Err(Error::BlowUp { t: t_next });
                }
            }
            Scheme::Imex => {
                let (mut w1, mut b1, mut w2, mut b2) = (w.clone(), b.clone(), w.clone(), b.clone());
                while t < t_next {
                    let last = t + h >= t_next * (1.0 - 1e-14);
                    let hs = if last { t_next - t } else { h };
                    w1.copy_from_slice(&w);
                    b1.copy_from_slice(&b);
                    st.strang(&mut w1, &mut b1, hs);
                    w2.copy_from_slice(&w);
                    b2.copy_from_slice(&b);
                    st.strang(&mut w2, &mut b2, 0.5 * hs);
                    st.strang(&mut w2, &mut b2, 0.5 * hs);
                    let mut err: f64 = 0.0;
                    for i in 0..w.len() {
                        let sw = cfg.tol * (1.0 + w2[i].abs());
                        let sb = cfg.tol * (1.0 + b2[i].abs());
                        err = err.max((w2[i] - w1[i]).abs() / sw).max((b2[i] - b1[i]).abs() / sb);
                    }
                    if !err.is_finite() || blown(&w2, &b2) {
                        if hs < 1e-12 {
                            return Err(Error::BlowUp { t });
                        }
                        h = 0.25 * hs;
                        field.stats.rejected += 1;
                        continue;
                    }
                    // error of the two half steps ≈ diff / 3 for a second-order method
                    let err = err / 3.0;
                    if err <= 1.0 {
                        t = if last { t_next } else { t + hs };
                        std::mem::swap(&mut w, &mut w2);
                        std::mem::swap(&mut b, &mut b2);
                        field.stats.accepted += 1;
                        if !last {
                            h = hs * (0.9 * err.max(1e-10).powf(-1.0 / 3.0)).clamp(0.2, 5.0);
                        }
                    } else {
                        field.stats.rejected += 1;
                        h = hs * (0.9 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.9);
                        if h < 1e-12 {
                            return Err(Error::StepCollapse { t });
                        }
                    }
                }
            }
        }
        t = t_next;
        field.times.push(t_next);
        field.w.push(w.clone());
        field.b.push(b.clone());
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_solve_inverts_operator() {
        let n = 17;
        let c = 0.7;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut v = rhs.clone();
        Implicit::new(n, c).solve(&mut v);
        let mut lap = vec![0.0; n];
        laplacian(&v, 1.0, &mut lap);
        for i in 0..n {
            assert!((v[i] - c * lap[i] - rhs[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_flux_ends_conserve_diffused_mass() {
        let p = ModelParams::default();
        let mut st = Stepper {
            p: &p,
            inv_dx2: 1.0 / 0.03f64.powi(2),
            scratch: vec![0.0; 40],
        };
        let mut u: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 * 0.7).sin() + (i as f64 * 0.05)).collect();
        let before: f64 = u.iter().sum();
        for _ in 0..50 {
            st.diffuse(&mut u, 0.03, 0.5);
        }
        let after: f64 = u.iter().sum();
        assert!((before - after).abs() < 1e-11 * before);
    }

    #[test]
    fn cosine_modes_are_laplacian_eigenvectors() {
        let (nx, l) = (64, 3.0);
        let x = grid(nx, l);
        let dx = l * std::f64::consts::PI / nx as f64;
        for k in [0usize, 1, 5, 17] {
            let u: Vec<f64> = x.iter().map(|&x| (k as f64 * x / l).cos()).collect();
            let mut lap = vec![0.0; nx];
            laplacian(&u, 1.0 / (dx * dx), &mut lap);
            let lam = -4.0 / (dx * dx) * (k as f64 * std::f64::consts::PI / (2.0 * nx as f64)).sin().powi(2);
            for i in 0..nx {
                assert!((lap[i] - lam * u[i]).abs() < 1e-9 * (1.0 + lam.abs()));
            }
        }
    }
}
