//! Periodic orbits of the kinetics along an R-family: branch sampling and the
//! homoclinic end of a branch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attractor::{find_cycle, CycleInfo};
use super::ode::Direction;
use crate::equilibria::{find_positive_equilibria, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::stability::jacobian;

/// Integration budget for locating one orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSearch {
    /// Length of one integration chunk.
    pub chunk: f64,
    /// Total time before giving up.
    pub t_max: f64,
}

impl Default for CycleSearch {
    fn default() -> Self {
        Self {
            chunk: 1500.0,
            t_max: 30_000.0,
        }
    }
}

/// The non-saddle positive equilibrium with the least biomass: the one that
/// carries the oscillatory instability in every family studied here.
pub fn hopf_branch_equilibrium(p: &ModelParams) -> Option<Equilibrium> {
    find_positive_equilibria(p)
        .into_iter()
        .filter(|e| jacobian(p, e.state()).det() > 0.0)
        .min_by(|x, y| x.b.total_cmp(&y.b))
}

/// All periodic orbits found around the oscillating equilibrium at `p`: stable ones by
/// forward integration from several starts, an unstable one by backward integration
/// when the equilibrium itself is stable. Sorted by amplitude, duplicates merged.
pub fn cycles_at(p: &ModelParams, search: &CycleSearch) -> Result<Vec<CycleInfo>> {
    let Some(eq) = hopf_branch_equilibrium(p) else {
        return Ok(Vec::new());
    };
    let tr = jacobian(p, eq.state()).trace();
    let mut found = Vec::new();
    for f in [0.01, 0.3, 0.6] {
        let start = State::new(eq.w, eq.b * (1.0 + f));
        if let Some(c) = find_cycle(p, start, Direction::Forward, search.chunk, search.t_max)? {
            found.push(c);
        }
    }
    if tr < 0.0 {
        let start = State::new(eq.w, eq.b * 1.001);
        if let Some(c) = find_cycle(p, start, Direction::Backward, search.chunk, search.t_max)? {
            found.push(c);
        }
    }
    found.sort_by(|x, y| x.amplitude().total_cmp(&y.amplitude()));
    // starts that slid onto the same orbit agree to well within 5% once settled
    found.dedup_by(|x, y| x.stable == y.stable && (x.amplitude() - y.amplitude()).abs() <= 0.05 * y.amplitude());
    Ok(found)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub r: f64,
    pub cycles: Vec<CycleInfo>,
    /// Integration failed at this R.
    pub unresolved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBranch {
    pub samples: Vec<BranchSample>,
    /// Largest sampled R where a stable and an unstable orbit coexist, if any:
    /// the sampled position of the fold of cycles.
    pub fold_r: Option<f64>,
}

impl CycleBranch {
    /// R values where at least one orbit was found.
    pub fn support(&self) -> Vec<f64> {
        self.samples.iter().filter(|s| !s.cycles.is_empty()).map(|s| s.r).collect()
    }
}

/// Sample the orbit branch at `n` evenly spaced R in `range` (endpoints included),
/// independently and in parallel.
pub fn cycle_branch(p: &ModelParams, range: (f64, f64), n: usize, search: &CycleSearch) -> CycleBranch {
    let rs: Vec<f64> = match n {
        0 => Vec::new(),
        1 => vec![range.0],
        _ => (0..n).map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64).collect(),
    };
    let samples: Vec<BranchSample> = rs
        .par_iter()
        .map(|&r| match cycles_at(&p.with_r(r), search) {
            Ok(cycles) => BranchSample {
                r,
                cycles,
                unresolved: false,
            },
            Err(_) => BranchSample {
                r,
                cycles: Vec::new(),
                unresolved: true,
            },
        })
        .collect();
    let fold_r = samples
        .iter()
        .filter(|s| s.cycles.iter().any(|c| c.stable) && s.cycles.iter().any(|c| !c.stable))
        .map(|s| s.r)
        .reduce(f64::max);
    CycleBranch { samples, fold_r }
}

/// Least-squares exponent of amplitude ∝ |R − r_hopf|^γ over the given samples.
pub fn amplitude_exponent(samples: &[(f64, f64)], r_hopf: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, a)| *a > 0.0 && (r - r_hopf).abs() > 0.0)
        .map(|(r, a)| ((r - r_hopf).abs().ln(), a.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Acceptance rule for the end of a branch at a saddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicRule {
    /// Period growth factor (relative to the starting orbit) that declares blow-up outright.
    pub blowup: f64,
    /// Bracket width at which R_HL is reported.
    pub r_tol: f64,
    /// Bisection continues to this width to collect the period-growth history.
    pub refine_to: f64,
    /// Relative tolerance between the fitted logarithmic growth rate of the period
    /// and 1/min(λu, |λs|) of the saddle.
    pub log_law_tol: f64,
}

impl Default for HomoclinicRule {
    fn default() -> Self {
        Self {
            blowup: 10.0,
            r_tol: 1e-3,
            refine_to: 1e-7,
            log_law_tol: 0.15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlowUpEvidence {
    /// The period exceeded `blowup` times its starting value.
    Factor,
    /// T ≈ c − s·ln|R − R_HL| with s matching the saddle eigenvalues.
    LogLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomoclinicEstimate {
    pub r_hl: f64,
    /// Last R with an orbit and the first without.
    pub bracket: (f64, f64),
    pub start_period: f64,
    pub last_period: f64,
    /// Fitted dT/d(−ln|R − R_HL|) near the end of the branch.
    pub growth_rate: Option<f64>,
    /// 1/min(λu, |λs|) at the saddle.
    pub saddle_rate: Option<f64>,
    pub evidence: BlowUpEvidence,
    /// (R, period) of every orbit found during the bisection, in visiting order.
    pub history: Vec<(f64, f64)>,
}

/// 1/min(λu, |λs|) of the saddle equilibrium at `p`.
fn saddle_rate(p: &ModelParams) -> Option<f64> {
    find_positive_equilibria(p).into_iter().find_map(|e| {
        let j = jacobian(p, e.state());
        (j.det() < 0.0).then(|| {
            let [l1, l2] = j.eigenvalues();
            1.0 / l1.re.abs().min(l2.re.abs())
        })
    })
}

/// Slope s of T = c − s·ln|R − r_hl| over history points within `window` of r_hl.
fn growth_rate(history: &[(f64, f64)], r_hl: f64, near: f64, window: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|(r, _)| {
            let d = (r - r_hl).abs();
            d > near && d <= window
        })
        .map(|(r, t)| (-(r - r_hl).abs().ln(), *t))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Bisection on orbit existence between `r_cycle` (orbit present) and `r_none`
/// (absent). The period must grow monotonically towards the end of the branch and
/// either reach `rule.blowup` times its starting value or diverge logarithmically
/// at the rate set by the saddle.
pub fn homoclinic_scan(
    p: &ModelParams,
    r_cycle: f64,
    r_none: f64,
    rule: &HomoclinicRule,
    search: &CycleSearch,
) -> Result<HomoclinicEstimate> {
    let orbit = |r: f64, search: &CycleSearch| -> Result<Option<CycleInfo>> {
        // the orbit that ends at the saddle is the largest one
        Ok(cycles_at(&p.with_r(r), search)?.into_iter().last())
    };
    let first = orbit(r_cycle, search)?
        .ok_or_else(|| Error::NoBlowUp(format!("no periodic orbit at R = {r_cycle}")))?;
    if orbit(r_none, search)?.is_some() {
        return Err(Error::NoBlowUp(format!("periodic orbit still present at R = {r_none}")));
    }
    let (mut lo, mut hi) = (r_cycle, r_none);
    let mut history = vec![(r_cycle, first.period)];
    let mut last = first.period;
    let mut budget = *search;
    let done = |lo: f64, hi: f64, last: f64| {
        let w = (hi - lo).abs();
        (w <= rule.r_tol && last >= rule.blowup * first.period) || w <= rule.refine_to
    };
    while !done(lo, hi, last) {
        let mid = 0.5 * (lo + hi);
        // keep ~12 periods per chunk as the orbit slows down
        budget.chunk = search.chunk.max(12.0 * last);
        budget.t_max = search.t_max.max(20.0 * budget.chunk);
        match orbit(mid, &budget)? {
            Some(c) => {
                if c.period < last * (1.0 - 1e-6) {
                    return Err(Error::NoBlowUp(format!(
                        "period fell from {last} to {} at R = {mid}",
                        c.period
                    )));
                }
                last = c.period;
                history.push((mid, c.period));
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let r_hl = 0.5 * (lo + hi);
    let width = (hi - lo).abs();
    let fitted = growth_rate(&history, r_hl, 4.0 * width, 1e-2 * (r_cycle - r_none).abs().max(1e-2));
    let saddle = saddle_rate(&p.with_r(r_hl));
    let evidence = if last >= rule.blowup * first.period {
        BlowUpEvidence::Factor
    } else {
        match (fitted, saddle) {
            (Some(f), Some(s)) if ((f - s) / s).abs() <= rule.log_law_tol => BlowUpEvidence::LogLaw,
            _ => {
                return Err(Error::NoBlowUp(format!(
                    "period reached {last:.6} (start {:.6}); growth rate {fitted:?} vs saddle {saddle:?}",
                    first.period
                )))
            }
        }
    };
    Ok(HomoclinicEstimate {
        r_hl,
        bracket: (lo, hi),
        start_period: first.period,
        last_period: last,
        growth_rate: fitted,
        saddle_rate: saddle,
        evidence,
        history,
    })
}
