//! Attractor classification of kinetic trajectories, basins and periodic orbits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ode::{integrate_directed, integrate_ode, Direction, OdeTrajectory};
use crate::equilibria::{all_equilibria, EqLabel, Equilibrium};
use crate::error::Result;
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Distance to an equilibrium that counts as arrival.
    pub eq_tol: f64,
    /// Relative agreement required between consecutive periods.
    pub period_tol: f64,
    /// Number of consecutive periods that must agree.
    pub periods: usize,
    /// Relative agreement required between the b-ranges of those periods.
    pub amplitude_tol: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            eq_tol: 1e-6,
            period_tol: 1e-4,
            periods: 5,
            amplitude_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Attractor {
    Equilibrium { w: f64, b: f64, label: EqLabel },
    LimitCycle { period: f64, b_min: f64, b_max: f64 },
    Unresolved,
}

/// Upward crossings of `level` by b, located by Hermite interpolation.
pub(crate) fn upward_crossings(traj: &OdeTrajectory, from: usize, level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in from..traj.states.len().saturating_sub(1) {
        let (b0, b1) = (traj.states[i].b - level, traj.states[i + 1].b - level);
        if b0 < 0.0 && b1 >= 0.0 {
            let g = |th: f64| traj.hermite_b(i, th) - level;
            let th = crate::poly::bisect(g, 0.0, 1.0);
            out.push(traj.times[i] + th * (traj.times[i + 1] - traj.times[i]));
        }
    }
    out
}

fn index_at(traj: &OdeTrajectory, t: f64) -> usize {
    traj.times.partition_point(|&x| x < t).min(traj.times.len() - 1)
}

/// Time-weighted mean of b from index `from`.
fn trailing_mean(traj: &OdeTrajectory, from: usize) -> f64 {
    let mut acc = 0.0;
    let mut span = 0.0;
    for i in from..traj.states.len() - 1 {
        let h = traj.times[i + 1] - traj.times[i];
        acc += 0.5 * h * (traj.states[i].b + traj.states[i + 1].b);
        span += h;
    }
    if span > 0.0 {
        acc / span
    } else {
        traj.last().b
    }
}

fn b_range(traj: &OdeTrajectory, t0: f64, t1: f64) -> (f64, f64) {
    let (i0, i1) = (index_at(traj, t0), index_at(traj, t1));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &traj.states[i0..=i1] {
        lo = lo.min(s.b);
        hi = hi.max(s.b);
    }
    (lo, hi)
}

/// Classify where a trajectory ends up.
pub fn detect_attractor(traj: &OdeTrajectory, eqs: &[Equilibrium], cfg: &DetectConfig) -> Attractor {
    if traj.states.len() < 3 || traj.escaped {
        return Attractor::Unresolved;
    }
    let last = traj.last();
    let dist = |s: State, e: &Equilibrium| ((s.w - e.w).powi(2) + (s.b - e.b).powi(2)).sqrt();
    if let Some(e) = eqs.iter().min_by(|x, y| dist(last, x).total_cmp(&dist(last, y))) {
        let d_end = dist(last, e);
        if d_end < cfg.eq_tol {
            let earlier = traj.states[index_at(traj, traj.t_end() * 0.9)];
            if dist(earlier, e) >= d_end || dist(earlier, e) < cfg.eq_tol {
                return Attractor::Equilibrium {
                    w: e.w,
                    b: e.b,
                    label: e.label,
                };
            }
        }
    }
    let from = index_at(traj, 0.5 * traj.t_end());
    let level = trailing_mean(traj, from);
    let cross = upward_crossings(traj, from, level);
    let need = cfg.periods + 1;
    if cross.len() < need {
        return Attractor::Unresolved;
    }
    let tail = &cross[cross.len() - need..];
    let periods: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    if periods.iter().any(|&t| ((t - mean) / mean).abs() > cfg.period_tol) {
        return Attractor::Unresolved;
    }
    let ranges: Vec<(f64, f64)> = tail.windows(2).map(|w| b_range(traj, w[0], w[1])).collect();
    let amps: Vec<f64> = ranges.iter().map(|(lo, hi)| hi - lo).collect();
    let amp = amps[amps.len() - 1];
    if !(amp > 1e-9 * level.abs().max(1.0)) || amps.iter().any(|&a| ((a - amp) / amp).abs() > cfg.amplitude_tol) {
        return Attractor::Unresolved;
    }
    let (b_min, b_max) = ranges[ranges.len() - 1];
    Attractor::LimitCycle {
        period: periods[periods.len() - 1],
        b_min,
        b_max,
    }
}

/// Label of a basin cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasinLabel {
    Equilibrium(EqLabel),
    LimitCycle,
    Unresolved,
}

impl From<Attractor> for BasinLabel {
    fn from(a: Attractor) -> Self {
        match a {
            Attractor::Equilibrium { label, .. } => BasinLabel::Equilibrium(label),
            Attractor::LimitCycle { .. } => BasinLabel::LimitCycle,
            Attractor::Unresolved => BasinLabel::Unresolved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub inits: Vec<State>,
    pub labels: Vec<BasinLabel>,
    /// Distinct resolved attractors.
    pub distinct: usize,
    pub unresolved: usize,
}

/// Attractor reached from each initial state (independent runs, in parallel).
pub fn basin_probe(p: &ModelParams, inits: &[State], t_end: f64) -> BasinMap {
    let eqs = all_equilibria(p);
    let cfg = DetectConfig::default();
    let labels: Vec<BasinLabel> = inits
        .par_iter()
        .map(|&s| match integrate_ode(p, s, t_end, 1e-9) {
            Ok(traj) => detect_attractor(&traj, &eqs, &cfg).into(),
            Err(_) => BasinLabel::Unresolved,
        })
        .collect();
    let mut seen: Vec<BasinLabel> = labels.iter().copied().filter(|l| *l != BasinLabel::Unresolved).collect();
    seen.sort_by_key(|l| format!("{l:?}"));
    seen.dedup();
    let unresolved = labels.iter().filter(|l| **l == BasinLabel::Unresolved).count();
    BasinMap {
        inits: inits.to_vec(),
        labels,
        distinct: seen.len(),
        unresolved,
    }
}

/// A periodic orbit of the kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub period: f64,
    pub b_min: f64,
    pub b_max: f64,
    /// Attracting in forward time.
    pub stable: bool,
    /// A point on the orbit.
    pub point: State,
}

impl CycleInfo {
    pub fn amplitude(&self) -> f64 {
        self.b_max - self.b_min
    }
}

/// Integrate in chunks of `chunk` time units (up to `t_max`) until the trajectory
/// settles on an equilibrium or a periodic orbit. Backward runs find unstable orbits.
pub fn settle(p: &ModelParams, start: State, dir: Direction, chunk: f64, t_max: f64) -> Result<(Attractor, State)> {
    let eqs = all_equilibria(p);
    let cfg = DetectConfig::default();
    let mut s = start;
    let mut elapsed = 0.0;
    while elapsed < t_max {
        let traj = integrate_directed(p, s, chunk, 1e-10, dir)?;
        if traj.escaped {
            return Ok((Attractor::Unresolved, traj.last()));
        }
        elapsed += chunk;
        s = traj.last();
        let a = detect_attractor(&traj, &eqs, &cfg);
        if a != Attractor::Unresolved {
            return Ok((a, s));
        }
    }
    Ok((Attractor::Unresolved, s))
}

/// Periodic orbit reached from `start`, if any.
pub fn find_cycle(p: &ModelParams, start: State, dir: Direction, chunk: f64, t_max: f64) -> Result<Option<CycleInfo>> {
    let (a, s) = settle(p, start, dir, chunk, t_max)?;
    Ok(match a {
        Attractor::LimitCycle { period, b_min, b_max } => Some(CycleInfo {
            period,
            b_min,
            b_max,
            stable: dir == Direction::Forward,
            point: s,
        }),
        _ => None,
    })
}
