//! 2×2 complex helpers.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Vec2 = [C64; 2];
pub type Mat2 = [[C64; 2]; 2];

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn real_mat(m: [[f64; 2]; 2]) -> Mat2 {
    [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]]
}

pub fn real_vec(v: [f64; 2]) -> Vec2 {
    [c(v[0]), c(v[1])]
}

pub fn matvec(m: &Mat2, v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Non-conjugating product xᵀy.
pub fn dot(x: &Vec2, y: &Vec2) -> C64 {
    x[0] * y[0] + x[1] * y[1]
}

pub fn scale(s: C64, v: &Vec2) -> Vec2 {
    [s * v[0], s * v[1]]
}

pub fn add(x: &Vec2, y: &Vec2) -> Vec2 {
    [x[0] + y[0], x[1] + y[1]]
}

pub fn sub(x: &Vec2, y: &Vec2) -> Vec2 {
    [x[0] - y[0], x[1] - y[1]]
}

pub fn conj(v: &Vec2) -> Vec2 {
    [v[0].conj(), v[1].conj()]
}

pub fn norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn det(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// s·I − m.
pub fn shift_minus(s: C64, m: &Mat2) -> Mat2 {
    [[s - m[0][0], -m[0][1]], [-m[1][0], s - m[1][1]]]
}

/// Solve m x = rhs by Cramer's rule; `None` when m is singular relative to its size.
pub fn solve(m: &Mat2, rhs: &Vec2) -> Option<Vec2> {
    let d = det(m);
    let size = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if d.norm() <= 1e-14 * size * size || !d.is_finite() {
        return None;
    }
    Some([
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / d,
    ])
}

/// Relative residual ‖m x − rhs‖ / max(1, ‖rhs‖).
pub fn residual(m: &Mat2, x: &Vec2, rhs: &Vec2) -> f64 {
    norm(&sub(&matvec(m, x), rhs)) / norm(rhs).max(1.0)
}

/// Roots of λ² − tλ + d, real roots ordered descending.
pub fn quadratic_eigs(t: f64, d: f64) -> [C64; 2] {
    let disc = t * t - 4.0 * d;
    if disc >= 0.0 {
        // λ² + Bλ + C with B = −t; the stable form q = −(B + sgn(B)√disc)/2.
        let bq = -t;
        let sg = if bq >= 0.0 { 1.0 } else { -1.0 };
        let q = -0.5 * (bq + sg * disc.sqrt());
        let (x, y) = if q == 0.0 { (0.0, 0.0) } else { (q, d / q) };
        [c(x.max(y)), c(x.min(y))]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [C64::new(0.5 * t, im), C64::new(0.5 * t, -im)]
    }
}
