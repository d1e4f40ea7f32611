//! Real-root isolation for low-degree polynomials on a half line.

/// Horner evaluation, coefficients in ascending order.
pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect()
}

/// Sum of |c_i| x^i, used to judge whether a value is zero to rounding.
pub fn magnitude(c: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    c.iter().rev().fold(0.0, |acc, &ci| acc * ax + ci.abs())
}

/// Cauchy bound on the modulus of the roots.
pub fn root_bound(c: &[f64]) -> f64 {
    let lead = *c.last().expect("nonempty polynomial");
    1.0 + c[..c.len() - 1].iter().map(|ci| (ci / lead).abs()).fold(0.0, f64::max)
}

/// Bisect a sign change of `f` on [lo, hi] down to adjacent floats.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Root sits on a critical point: tangency within rounding.
    pub double: bool,
}

fn trim(c: &[f64]) -> &[f64] {
    let mut n = c.len();
    while n > 1 && c[n - 1] == 0.0 {
        n -= 1;
    }
    &c[..n]
}

/// All roots in (lo, hi), ascending.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<Root> {
    let c = trim(c);
    match c.len() {
        0 | 1 => Vec::new(),
        2 => {
            let x = -c[0] / c[1];
            if x > lo && x < hi {
                vec![Root { x, double: false }]
            } else {
                Vec::new()
            }
        }
        _ => {
            let crit: Vec<f64> = roots_in(&derivative(c), lo, hi).into_iter().map(|r| r.x).collect();
            let mut knots = Vec::with_capacity(crit.len() + 2);
            knots.push(lo);
            knots.extend(&crit);
            knots.push(hi);
            let f = |x: f64| eval(c, x);
            let mut out: Vec<Root> = Vec::new();
            for seg in knots.windows(2) {
                let (a, b) = (seg[0], seg[1]);
                let (fa, fb) = (f(a), f(b));
                if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
                    out.push(Root { x: bisect(f, a, b), double: false });
                }
            }
            for &x in &crit {
                if f(x).abs() <= 1e-13 * magnitude(c, x) {
                    let close = out.iter().any(|r| (r.x - x).abs() <= 1e-7 * x.abs().max(1.0));
                    if !close {
                        out.push(Root { x, double: true });
                    } else {
                        for r in out.iter_mut() {
                            if (r.x - x).abs() <= 1e-7 * x.abs().max(1.0) {
                                r.double = true;
                            }
                        }
                    }
                }
            }
            out.sort_by(|p, q| p.x.total_cmp(&q.x));
            out.dedup_by(|p, q| p.x == q.x);
            out
        }
    }
}

/// All strictly positive roots, ascending.
pub fn positive_roots(c: &[f64]) -> Vec<Root> {
    let c = trim(c);
    if c.len() < 2 {
        return Vec::new();
    }
    roots_in(c, 0.0, root_bound(c))
}
