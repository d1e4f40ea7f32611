//! Classification of PDE runs into homogeneous/patterned, steady/periodic states.

use serde::{Deserialize, Serialize};

use super::pde::PdeField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternThresholds {
    /// Relative size of the largest non-constant mode that counts as a pattern.
    pub spatial_rel: f64,
    /// Peak-to-peak oscillation of the tracked mode that counts as time-periodic.
    pub temporal_abs: f64,
    /// Relative spread allowed between consecutive periods.
    pub period_rel: f64,
    /// Relative change of the peak-to-peak range between the two halves of the
    /// window above which an oscillation is still a transient.
    pub amplitude_rel: f64,
    /// Trailing fraction of the run that is classified.
    pub window: f64,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        Self {
            spatial_rel: 1e-3,
            temporal_abs: 1e-4,
            period_rel: 1e-2,
            amplitude_rel: 0.1,
            window: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Pattern {
    HomogeneousSteady,
    HomogeneousPeriodic { period: f64 },
    InhomogeneousSteady { mode: u32, amplitude: f64 },
    InhomogeneousPeriodic { mode: u32, period: f64 },
    Unresolved,
}

impl Pattern {
    pub fn is_inhomogeneous(&self) -> bool {
        matches!(self, Pattern::InhomogeneousSteady { .. } | Pattern::InhomogeneousPeriodic { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternOutcome {
    pub pattern: Pattern,
    /// Pearson correlation of the w and b profiles at the final time (patterns only).
    pub antiphase_corr: Option<f64>,
    /// Spatial mean of b at the final time.
    pub mean_b: f64,
    /// |a_k| of b at the final time, k = 0..nx−1.
    pub modes: Vec<f64>,
}

/// Cosine coefficients a_k = (2/n)·Σ u_i cos(k x_i / l), with a_0 the mean.
pub fn mode_amplitudes(u: &[f64], x: &[f64], l: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|k| {
            let s: f64 = u.iter().zip(x).map(|(ui, xi)| ui * (k as f64 * xi / l).cos()).sum();
            if k == 0 {
                s / n as f64
            } else {
                2.0 * s / n as f64
            }
        })
        .collect()
}

fn mode_coefficient(u: &[f64], x: &[f64], l: f64, k: u32) -> f64 {
    let s: f64 = u.iter().zip(x).map(|(ui, xi)| ui * (k as f64 * xi / l).cos()).sum();
    if k == 0 {
        s / u.len() as f64
    } else {
        2.0 * s / u.len() as f64
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Peak-to-peak range of the spatial mean of b over snapshots with t in [t0, t1].
pub fn mean_oscillation(field: &PdeField, t0: f64, t1: f64) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, b) in field.times.iter().zip(&field.b) {
        if *t >= t0 && *t <= t1 {
            let m = b.iter().sum::<f64>() / b.len() as f64;
            lo = lo.min(m);
            hi = hi.max(m);
        }
    }
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Period of a sampled signal from upward crossings of its mean, if the last
/// crossing intervals agree to `rel`.
fn stable_period(t: &[f64], s: &[f64], rel: f64) -> Option<f64> {
    if s.len() < 2 {
        return None;
    }
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let mut cross = Vec::new();
    for i in 0..s.len() - 1 {
        let (a, b) = (s[i] - mean, s[i + 1] - mean);
        if a < 0.0 && b >= 0.0 {
            cross.push(t[i] + (t[i + 1] - t[i]) * a / (a - b));
        }
    }
    if cross.len() < 3 {
        return None;
    }
    let periods: Vec<f64> = cross.windows(2).map(|w| w[1] - w[0]).collect();
    let avg = periods.iter().sum::<f64>() / periods.len() as f64;
    periods.iter().all(|p| ((p - avg) / avg).abs() <= rel).then_some(avg)
}

fn range(s: &[f64]) -> f64 {
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// False while the oscillation is still growing or decaying across the window.
fn steady_amplitude(s: &[f64], rel: f64) -> bool {
    let (a, b) = s.split_at(s.len() / 2);
    let (ra, rb) = (range(a), range(b));
    (ra - rb).abs() <= rel * ra.max(rb)
}

/// Classify the trailing window of a run.
pub fn classify_pattern(field: &PdeField, th: &PatternThresholds) -> Result<PatternOutcome> {
    let n_snap = field.times.len();
    if n_snap < 2 || field.nx() == 0 {
        return Err(Error::Input("field has no time window to classify".into()));
    }
    let t_end = field.t_end();
    let t_start = t_end * (1.0 - th.window);
    let idx: Vec<usize> = (0..n_snap).filter(|&i| field.times[i] >= t_start).collect();
    if idx.len() < 8 {
        return Err(Error::Input(format!("only {} snapshots in the classification window", idx.len())));
    }
    let last_b = &field.b[n_snap - 1];
    let last_w = &field.w[n_snap - 1];
    let modes: Vec<f64> = mode_amplitudes(last_b, &field.x, field.l).iter().map(|a| a.abs()).collect();
    let mean_b = modes[0];
    let (dom, dom_amp) = modes
        .iter()
        .enumerate()
        .skip(1)
        .fold((0usize, 0.0f64), |acc, (k, &a)| if a > acc.1 { (k, a) } else { acc });
    let patterned = dom_amp > th.spatial_rel * mean_b;
    let tracked = if patterned { dom as u32 } else { 0 };
    let times: Vec<f64> = idx.iter().map(|&i| field.times[i]).collect();
    let series: Vec<f64> = idx.iter().map(|&i| mode_coefficient(&field.b[i], &field.x, field.l, tracked)).collect();
    let oscillating = range(&series) > th.temporal_abs;
    let pattern = match (patterned, oscillating) {
        (false, false) => Pattern::HomogeneousSteady,
        (true, false) => Pattern::InhomogeneousSteady {
            mode: tracked,
            amplitude: dom_amp,
        },
        (p, true) => match stable_period(&times, &series, th.period_rel) {
            Some(_) if !steady_amplitude(&series, th.amplitude_rel) => Pattern::Unresolved,
            Some(period) if p => Pattern::InhomogeneousPeriodic { mode: tracked, period },
            Some(period) => Pattern::HomogeneousPeriodic { period },
            None => Pattern::Unresolved,
        },
    };
    let antiphase_corr = if patterned { pearson(last_w, last_b) } else { None };
    Ok(PatternOutcome {
        pattern,
        antiphase_corr,
        mean_b,
        modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::pde::grid;

    #[test]
    fn modes_recover_cosines() {
        let (nx, l) = (128, 3.0);
        let x = grid(nx, l);
        let u: Vec<f64> = x.iter().map(|&x| 2.0 + 0.3 * (8.0 * x / l).cos() - 0.1 * (3.0 * x / l).cos()).collect();
        let a = mode_amplitudes(&u, &x, l);
        assert!((a[0] - 2.0).abs() < 1e-12);
        assert!((a[8] - 0.3).abs() < 1e-12);
        assert!((a[3] + 0.1).abs() < 1e-12);
        assert!(a[5].abs() < 1e-12);
    }

    #[test]
    fn decaying_oscillation_is_not_steady() {
        let t: Vec<f64> = (0..400).map(|i| i as f64).collect();
        let steady: Vec<f64> = t.iter().map(|t| (t / 7.0).sin()).collect();
        let decaying: Vec<f64> = t.iter().map(|t| (-t / 300.0).exp() * (t / 7.0).sin()).collect();
        assert!(steady_amplitude(&steady, 0.1));
        assert!(!steady_amplitude(&decaying, 0.1));
    }

    #[test]
    fn pearson_sign() {
        let a = [1.0, 2.0, 3.0];
        assert!((pearson(&a, &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&a, &[1.0, 1.0, 1.0]), None);
    }
}
