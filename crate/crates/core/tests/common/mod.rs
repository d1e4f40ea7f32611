//! Oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use vegpattern_core::equilibria::QuarticF;

/// Eigenvalues of a real 2×2 matrix from the half-trace/discriminant form.
pub fn eig_oracle(m: [[f64; 2]; 2]) -> [Complex64; 2] {
    let half = 0.5 * (m[0][0] + m[1][1]);
    let disc = Complex64::new(0.25 * (m[0][0] - m[1][1]).powi(2) + m[0][1] * m[1][0], 0.0).sqrt();
    [half + disc, half - disc]
}

/// Number of sign changes of F on a fine grid over (0, Cauchy bound]; `None` when
/// the sampled |F| gets close to zero away from a crossing (possible tangency).
pub fn bisection_count(q: &QuarticF) -> Option<usize> {
    let c = q.coeffs();
    let bound = 1.0 + c[..4].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let n = 20_000;
    let xs: Vec<f64> = (1..=n).map(|i| bound * i as f64 / n as f64).collect();
    let f: Vec<f64> = xs.iter().map(|&x| q.eval(x)).collect();
    let scale = |x: f64| 1.0 + c.iter().enumerate().map(|(k, v)| v.abs() * x.powi(k as i32)).sum::<f64>();
    let mut count = usize::from(q.c0 * f[0] < 0.0);
    for i in 0..n - 1 {
        if f[i] * f[i + 1] < 0.0 {
            // confirm by bisection that the crossing is a single root
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if q.eval(mid) * q.eval(lo) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            count += 1;
        }
        // local extremum of |F| that nearly touches zero
        if i > 0 && f[i].abs() < f[i - 1].abs() && f[i].abs() < f[i + 1].abs() && f[i].abs() < 1e-6 * scale(xs[i]) {
            return None;
        }
    }
    Some(count)
}
