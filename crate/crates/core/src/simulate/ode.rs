//! Adaptive Dormand–Prince 5(4) integration of the kinetic system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kinetics_unchecked, ModelParams, State};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Vector field at each stored state (used for Hermite interpolation).
    pub rates: Vec<[f64; 2]>,
    pub stats: StepStats,
    /// Integration stopped early because the state left the admissible region.
    pub escaped: bool,
}

impl OdeTrajectory {
    pub fn last(&self) -> State {
        *self.states.last().expect("trajectory has at least one point")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    /// Cubic Hermite interpolation of `b` inside step `i` (between points i and i+1).
    pub(crate) fn hermite_b(&self, i: usize, theta: f64) -> f64 {
        let h = self.times[i + 1] - self.times[i];
        let (y0, y1) = (self.states[i].b, self.states[i + 1].b);
        let (f0, f1) = (self.rates[i][1], self.rates[i + 1][1]);
        let t = theta;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: [f64; 2], terms: &[(f64, [f64; 2])], h: f64) -> [f64; 2] {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Generic 2-D Dormand–Prince driver. `stop` is checked after every accepted step.
pub(crate) fn dopri<F, S>(
    f: F,
    y0: [f64; 2],
    t_end: f64,
    rtol: f64,
    atol: f64,
    mut stop: S,
) -> Result<OdeTrajectory>
where
    F: Fn([f64; 2]) -> [f64; 2],
    S: FnMut(f64, [f64; 2]) -> bool,
{
    let mut stats = StepStats::default();
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(y);
    stats.evaluations += 1;
    let mut times = vec![t];
    let mut states = vec![State::new(y[0], y[1])];
    let mut rates = vec![k1];
    let scale0 = y[0].abs().max(y[1].abs()).max(1.0);
    let d1 = k1[0].abs().max(k1[1].abs());
    let mut h = if d1 > 0.0 { (0.01 * scale0 / d1).min(1.0) } else { 1e-3 };
    h = h.min(t_end.max(1e-12));
    let h_min = 1e-12 * t_end.abs().max(1.0);
    let mut escaped = false;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let k2 = f(axpy(y, &[(A21, k1)], h));
        let k3 = f(axpy(y, &[(A31, k1), (A32, k2)], h));
        let k4 = f(axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
        let k5 = f(axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
        let k6 = f(axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h));
        let y_new = axpy(y, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)], h);
        let k7 = f(y_new);
        stats.evaluations += 6;
        let mut err = 0.0f64;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            stats.accepted += 1;
            times.push(t);
            states.push(State::new(y[0], y[1]));
            rates.push(k1);
            if stop(t, y) {
                escaped = true;
                break;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= fac;
        }
        if h < h_min {
            return Err(Error::StepCollapse { t });
        }
    }
    Ok(OdeTrajectory {
        times,
        states,
        rates,
        stats,
        escaped,
    })
}

fn field(p: &ModelParams, dir: Direction) -> impl Fn([f64; 2]) -> [f64; 2] + '_ {
    let sgn = match dir {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    move |y: [f64; 2]| {
        if !(y[0] > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        let (f, g) = kinetics_unchecked(p, y[0], y[1]);
        [sgn * f, sgn * g]
    }
}

/// Invariant box: (w_min, w_max, b_max) for forward trajectories from `init`.
pub fn invariant_bounds(p: &ModelParams, init: State) -> (f64, f64, f64) {
    let m_w = init.w.max(p.r / p.a);
    let m_b = init.b.max(m_w);
    let w_min = init.w.min(p.r / (p.a + p.delta * m_b));
    (w_min, m_w, m_b)
}

/// Forward integration with the invariant bounds asserted on every stored point.
pub fn integrate_ode(p: &ModelParams, init: State, t_end: f64, tol: f64) -> Result<OdeTrajectory> {
    if !(init.w > 0.0) || init.b < 0.0 {
        return Err(Error::Input(format!("initial state ({}, {}) outside w > 0, b >= 0", init.w, init.b)));
    }
    let traj = dopri(field(p, Direction::Forward), [init.w, init.b], t_end, tol, 1e-10, |_, _| false)?;
    let (w_min, w_max, b_max) = invariant_bounds(p, init);
    let slack = |v: f64| 1e-6 * v.abs().max(1.0);
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let b_ok = if init.b > 0.0 { s.b > -1e-9 } else { s.b == 0.0 };
        if !b_ok || s.b > b_max + slack(b_max) || s.w > w_max + slack(w_max) || s.w < w_min - slack(w_min) {
            return Err(Error::BoundViolation { t: *t, w: s.w, b: s.b });
        }
    }
    Ok(traj)
}

/// Integration in either time direction that stops when the state leaves a box
/// around the biologically meaningful region; no invariant assertion.
pub fn integrate_directed(p: &ModelParams, init: State, t_end: f64, tol: f64, dir: Direction) -> Result<OdeTrajectory> {
    let (_, w_max, b_max) = invariant_bounds(p, init);
    let (w_cap, b_cap) = (10.0 * w_max, 10.0 * b_max);
    let stop = move |_: f64, y: [f64; 2]| !(y[0] > 1e-9 && y[1] > -1e-12 && y[0] < w_cap && y[1] < b_cap);
    match dopri(field(p, dir), [init.w, init.b], t_end, tol, 1e-10, stop) {
        Err(Error::StepCollapse { .. }) if dir == Direction::Backward => {
            // Backward blow-up: treat as escape.
            Ok(OdeTrajectory {
                times: vec![0.0],
                states: vec![init],
                rates: vec![[0.0, 0.0]],
                stats: StepStats::default(),
                escaped: true,
            })
        }
        other => other,
    }
}
