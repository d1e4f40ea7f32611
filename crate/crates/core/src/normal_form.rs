//! Third-order Turing–Hopf normal form at a codimension-two point and the
//! planar amplitude system it reduces to.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat2, Vec2, C64};
use crate::model::{deriv_tensor, equilibrium_shift, DerivTensor, EquilibriumShift, ModelParams};
use crate::stability::jacobian;
use crate::turing::THPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub omega0: f64,
    pub p0: Vec2,
    pub q0: Vec2,
    pub pk: [f64; 2],
    pub qk: [f64; 2],
    /// Normaliser of q0.
    pub d1n: C64,
    /// Normaliser of qk.
    pub d2n: f64,
    /// Max residual of the eigen and biorthogonality relations.
    pub residual: f64,
}

fn l0_of(p: &ModelParams, th: &THPoint) -> [[f64; 2]; 2] {
    jacobian(&th.params(p), th.state()).as_array()
}

/// Eigenvectors of the critical Hopf and Turing modes and their adjoints.
pub fn spectral(p: &ModelParams, th: &THPoint) -> Result<SpectralData> {
    let l0 = l0_of(p, th);
    let (l11, l12, l21) = (l0[0][0], l0[0][1], l0[1][0]);
    let omega0 = (l0[0][0] * l0[1][1] - l12 * l21).sqrt();
    let iw = C64::new(0.0, omega0);
    let den = c(l21 * l12) + (iw - l11) * (iw - l11);
    if den.norm() < 1e-12 * (l21 * l12).abs().max(1.0) {
        return Err(Error::Singular("Hopf adjoint normalisation"));
    }
    let d1n = c(l21 * l12) / den;
    let p0 = [c(1.0), (iw - l11) / l12];
    let q0 = [d1n, d1n * (iw - l11) / l21];

    let z = (th.k_star as f64 / p.l).powi(2);
    let dz = th.d1 * z - l11;
    let den2 = l12 * l21 + dz * dz;
    if den2.abs() < 1e-12 * (l12 * l21).abs().max(1.0) {
        return Err(Error::Singular("Turing adjoint normalisation"));
    }
    let d2n = l12 * l21 / den2;
    let pk = [1.0, dz / l12];
    let qk = [d2n, d2n * dz / l21];

    let l0c = linalg::real_mat(l0);
    let m0 = linalg::shift_minus(iw, &l0c);
    let mk = [[l11 - th.d1 * z, l12], [l21, l0[1][1] - p.d2 * z]];
    let r1 = linalg::norm(&linalg::matvec(&m0, &p0));
    let q0m = [q0[0] * m0[0][0] + q0[1] * m0[1][0], q0[0] * m0[0][1] + q0[1] * m0[1][1]];
    let r2 = linalg::norm(&q0m);
    let r3 = (mk[0][0] * pk[0] + mk[0][1] * pk[1]).abs().max((mk[1][0] * pk[0] + mk[1][1] * pk[1]).abs());
    let r4 = (qk[0] * mk[0][0] + qk[1] * mk[1][0]).abs().max((qk[0] * mk[0][1] + qk[1] * mk[1][1]).abs());
    let r5 = (linalg::dot(&q0, &p0) - 1.0).norm();
    let r6 = linalg::dot(&q0, &linalg::conj(&p0)).norm();
    let r7 = (qk[0] * pk[0] + qk[1] * pk[1] - 1.0).abs();
    let residual = [r1, r2, r3, r4, r5, r6, r7].into_iter().fold(0.0, f64::max);
    Ok(SpectralData {
        omega0,
        p0,
        q0,
        pk,
        qk,
        d1n,
        d2n,
        residual,
    })
}

/// Quadratic and cubic interaction vectors of the critical modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ATensors {
    pub a200: Vec2,
    pub a020: Vec2,
    pub a002: Vec2,
    pub a110: Vec2,
    pub a101: Vec2,
    pub a011: Vec2,
    pub a210: Vec2,
    pub a102: Vec2,
    pub a111: Vec2,
    pub a003: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HVectors {
    pub h00110: Vec2,
    pub h00200: Vec2,
    pub h00002: Vec2,
    pub hk0101: Vec2,
    pub h0k011: Vec2,
    pub hkk002: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicParts {
    pub c: C64,
    pub d: C64,
    pub e: C64,
    /// c + (3/2)(d + e).
    pub b: C64,
}

impl CubicParts {
    fn new(c_: C64, d: C64, e: C64) -> Self {
        Self {
            c: c_,
            d,
            e,
            b: c_ + 1.5 * (d + e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFCoeffs {
    pub th: THPoint,
    pub spectral: SpectralData,
    pub shift: EquilibriumShift,
    pub tensor: DerivTensor,
    /// d(Jacobian)/dR along the equilibrium branch.
    pub l1: [[f64; 2]; 2],
    pub b11: C64,
    pub b21: C64,
    pub b13: f64,
    pub b23: f64,
    pub b210: CubicParts,
    pub b102: CubicParts,
    pub b111: CubicParts,
    pub b003: CubicParts,
    pub a: ATensors,
    pub h: HVectors,
    pub s_yz: [Mat2; 3],
    /// Largest back-substitution residual over all resolvent solves.
    pub solve_residual: f64,
}

/// Contraction matrix S with S·h = Q(v, h).
fn contraction(t: &DerivTensor, v: &Vec2) -> Mat2 {
    let mut m = [[C64::default(); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        let [gww, gwb, gbb] = t.second(i);
        row[0] = c(gww) * v[0] + c(gwb) * v[1];
        row[1] = c(gwb) * v[0] + c(gbb) * v[1];
    }
    m
}

struct Solver {
    worst: f64,
}

impl Solver {
    fn solve(&mut self, m: &Mat2, rhs: &Vec2, what: &'static str) -> Result<Vec2> {
        let x = linalg::solve(m, rhs).ok_or(Error::Singular(what))?;
        self.worst = self.worst.max(linalg::residual(m, &x, rhs));
        Ok(x)
    }
}

/// Normal-form coefficients at a TH point.
pub fn nf_coeffs(p: &ModelParams, th: &THPoint) -> Result<NFCoeffs> {
    let pth = th.params(p);
    let sp = spectral(p, th)?;
    let tensor = deriv_tensor(&pth, th.state())?;
    let shift = equilibrium_shift(&pth, th.state())?;
    let l0r = l0_of(p, th);
    let l0 = linalg::real_mat(l0r);
    let lp = p.l * PI;
    let om = sp.omega0;
    let iw = C64::new(0.0, om);
    let z = (th.k_star as f64 / p.l).powi(2);

    let (p0, q0) = (sp.p0, sp.q0);
    let pb = linalg::conj(&p0);
    let q0b = linalg::conj(&q0);
    let pk = linalg::real_vec(sp.pk);
    let qk = linalg::real_vec(sp.qk);
    let q = |x: &Vec2, y: &Vec2| tensor.quadratic(*x, *y);
    let cu = |x: &Vec2, y: &Vec2, w: &Vec2| tensor.cubic(*x, *y, *w);
    let two = c(2.0);

    let a200 = q(&p0, &p0);
    let a = ATensors {
        a200,
        a020: linalg::conj(&a200),
        a002: q(&pk, &pk),
        a110: linalg::scale(two, &q(&p0, &pb)),
        a101: linalg::scale(two, &q(&p0, &pk)),
        a011: linalg::conj(&linalg::scale(two, &q(&p0, &pk))),
        a210: linalg::scale(c(3.0), &cu(&p0, &p0, &pb)),
        a102: linalg::scale(c(3.0), &cu(&p0, &pk, &pk)),
        a111: linalg::scale(c(6.0), &cu(&p0, &pb, &pk)),
        a003: cu(&pk, &pk, &pk),
    };
    let d = |x: &Vec2, y: &Vec2| linalg::dot(x, y);

    let c6 = c(1.0 / (6.0 * lp));
    let c210 = c6 * d(&q0, &a.a210);
    let c102 = c6 * d(&q0, &a.a102);
    let c111 = c6 * d(&qk, &a.a111);
    let c003 = c6 * d(&qk, &a.a003);

    let f = c(1.0) / (c(6.0 * lp) * iw);
    let d210 = f
        * (-d(&q0, &a.a200) * d(&q0, &a.a110)
            + d(&q0, &a.a110) * d(&q0b, &a.a110)
            + c(2.0 / 3.0) * d(&q0, &a.a020) * d(&q0b, &a.a200));
    let d102 = f
        * (-two * d(&q0, &a.a200) * d(&q0, &a.a002)
            + d(&q0, &a.a110) * d(&q0b, &a.a002)
            + two * d(&q0, &a.a002) * d(&qk, &a.a101));
    let d111 = f * (d(&qk, &a.a011) * d(&q0b, &a.a110) - d(&qk, &a.a101) * d(&q0, &a.a110));
    let d003 = f * (d(&qk, &a.a011) * d(&q0b, &a.a002) - d(&qk, &a.a101) * d(&q0, &a.a002));

    let mut solver = Solver { worst: 0.0 };
    let inv_lp = c(1.0 / lp);
    let third = c(1.0 / 3.0);
    let diff_k = |s: C64, zz: f64| -> Mat2 {
        // s·I + zz·D − L0
        [
            [s + th.d1 * zz - l0[0][0], -l0[0][1]],
            [-l0[1][0], s + p.d2 * zz - l0[1][1]],
        ]
    };
    let neg_l0 = linalg::shift_minus(c(0.0), &l0);

    // −L0⁻¹x is the solution of (−L0) y = x.
    let y110 = solver.solve(&neg_l0, &a.a110, "L0")?;
    let h00110 = linalg::scale(
        inv_lp,
        &linalg::add(
            &y110,
            &linalg::scale(
                c(1.0) / iw,
                &linalg::add(
                    &linalg::scale(d(&q0, &a.a110), &p0),
                    &linalg::scale(third * d(&q0b, &a.a110), &pb),
                ),
            ),
        ),
    );
    let y200 = solver.solve(&linalg::shift_minus(two * iw, &l0), &a.a200, "2iω − L0")?;
    let h00200 = linalg::scale(
        inv_lp,
        &linalg::sub(
            &y200,
            &linalg::scale(
                c(1.0) / iw,
                &linalg::add(
                    &linalg::scale(d(&q0, &a.a200), &p0),
                    &linalg::scale(third * d(&q0b, &a.a200), &pb),
                ),
            ),
        ),
    );
    let y002 = solver.solve(&neg_l0, &a.a002, "L0")?;
    let h00002 = linalg::add(
        &linalg::scale(inv_lp, &y002),
        &linalg::scale(
            c(1.0) / (iw * lp),
            &linalg::sub(
                &linalg::scale(d(&q0, &a.a002), &p0),
                &linalg::scale(d(&q0b, &a.a002), &pb),
            ),
        ),
    );
    let y101 = solver.solve(&diff_k(iw, z), &a.a101, "iω + k²D/l² − L0")?;
    let hk0101 = linalg::sub(
        &linalg::scale(inv_lp, &y101),
        &linalg::scale(c(1.0) / (iw * lp) * d(&qk, &a.a101), &pk),
    );
    let y011 = solver.solve(&diff_k(-iw, z), &a.a011, "−iω + k²D/l² − L0")?;
    let h0k011 = linalg::add(
        &linalg::scale(inv_lp, &y011),
        &linalg::scale(c(1.0) / (iw * lp) * d(&qk, &a.a011), &pk),
    );
    let y2k = solver.solve(&diff_k(c(0.0), 4.0 * z), &a.a002, "(2k)²D/l² − L0")?;
    let hkk002 = linalg::add(&linalg::scale(c(1.0 / (2.0 * lp)), &y2k), &h00002);
    let h = HVectors {
        h00110,
        h00200,
        h00002,
        hk0101,
        h0k011,
        hkk002,
    };

    let s1 = contraction(&tensor, &p0);
    let s2 = contraction(&tensor, &pb);
    // The third contraction pairs with the Turing eigenvector.
    let s3 = contraction(&tensor, &pk);
    let sv = |m: &Mat2, v: &Vec2| linalg::matvec(m, v);
    let sixth = c(1.0 / 6.0);
    let e210 = sixth * d(&q0, &linalg::add(&sv(&s1, &h.h00110), &sv(&s2, &h.h00200)));
    let e102 = sixth * d(&q0, &linalg::add(&sv(&s1, &h.h00002), &sv(&s3, &h.hk0101)));
    let e111 = sixth
        * d(
            &qk,
            &linalg::add(
                &linalg::add(&sv(&s1, &h.h0k011), &sv(&s2, &h.hk0101)),
                &sv(&s3, &h.h00110),
            ),
        );
    let e003 = sixth * d(&qk, &sv(&s3, &h.hkk002));

    let (wt, bt) = (shift.w_tilde, shift.b_tilde);
    let l1 = [
        [-p.delta * bt, -p.delta * wt],
        [
            2.0 * wt * tensor.coeff(2, 3) + bt * tensor.coeff(2, 4),
            wt * tensor.coeff(2, 4) + 2.0 * bt * tensor.coeff(2, 5),
        ],
    ];
    let l1c = linalg::real_mat(l1);
    let b11 = d(&q0, &linalg::matvec(&l1c, &p0));
    let b13 = d(&qk, &linalg::matvec(&l1c, &pk));
    let b23 = c(-z) * qk[0] * pk[0];

    for (name, v) in [("B13", b13), ("B23", b23)] {
        if v.im.abs() > 1e-8 {
            return Err(Error::Input(format!("{name} has imaginary part {:.3e}", v.im)));
        }
    }
    let b003 = CubicParts::new(c003, d003, e003);
    if b003.b.im.abs() > 1e-8 {
        return Err(Error::Input(format!("B003 has imaginary part {:.3e}", b003.b.im)));
    }

    Ok(NFCoeffs {
        th: *th,
        spectral: sp,
        shift,
        tensor,
        l1,
        b11,
        b21: c(0.0),
        b13: b13.re,
        b23: b23.re,
        b210: CubicParts::new(c210, d210, e210),
        b102: CubicParts::new(c102, d102, e102),
        b111: CubicParts::new(c111, d111, e111),
        b003,
        a,
        h,
        s_yz: [s1, s2, s3],
        solve_residual: solver.worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSystem {
    /// ν₁ = nu1[0]·ε₁ + nu1[1]·ε₂.
    pub nu1: [f64; 2],
    /// ν₂ = nu2[0]·ε₁ + nu2[1]·ε₂.
    pub nu2: [f64; 2],
    pub kappa11: f64,
    pub kappa12: f64,
    pub kappa21: f64,
    pub kappa22: f64,
}

/// Rescaled planar system ρ' = ρ(ν₁ + κ₁₁ρ² + κ₁₂s²), s' = s(ν₂ + κ₂₁ρ² + κ₂₂s²).
pub fn amplitude_system(nf: &NFCoeffs) -> Result<AmplitudeSystem> {
    let r210 = nf.b210.b.re;
    let b003 = nf.b003.b.re;
    if r210.abs() < 1e-10 {
        return Err(Error::DegenerateCubic {
            name: "Re B210",
            value: r210,
        });
    }
    if b003.abs() < 1e-10 {
        return Err(Error::DegenerateCubic {
            name: "B003",
            value: b003,
        });
    }
    Ok(AmplitudeSystem {
        nu1: [nf.b11.re, nf.b21.re],
        nu2: [nf.b13, nf.b23],
        kappa11: r210.signum(),
        kappa12: nf.b102.b.re / b003.abs(),
        kappa21: nf.b111.b.re / r210.abs(),
        kappa22: b003.signum(),
    })
}

impl AmplitudeSystem {
    pub fn nu(&self, e1: f64, e2: f64) -> (f64, f64) {
        (
            self.nu1[0] * e1 + self.nu1[1] * e2,
            self.nu2[0] * e1 + self.nu2[1] * e2,
        )
    }

    pub fn rhs(&self, e1: f64, e2: f64, rho: f64, s: f64) -> (f64, f64) {
        let (n1, n2) = self.nu(e1, e2);
        (
            rho * (n1 + self.kappa11 * rho * rho + self.kappa12 * s * s),
            s * (n2 + self.kappa21 * rho * rho + self.kappa22 * s * s),
        )
    }

    fn mixed_det(&self) -> f64 {
        self.kappa11 * self.kappa22 - self.kappa12 * self.kappa21
    }

    /// Coefficients (c1, c2) with ρ² = c1ε₁ + c2ε₂ and s² = c3ε₁ + c4ε₂ on the mixed branch.
    pub fn mixed_branch(&self) -> ([f64; 2], [f64; 2]) {
        let det = self.mixed_det();
        let rho2 = [
            (self.kappa12 * self.nu2[0] - self.kappa22 * self.nu1[0]) / det,
            (self.kappa12 * self.nu2[1] - self.kappa22 * self.nu1[1]) / det,
        ];
        let s2 = [
            (self.kappa21 * self.nu1[0] - self.kappa11 * self.nu2[0]) / det,
            (self.kappa21 * self.nu1[1] - self.kappa11 * self.nu2[1]) / det,
        ];
        (rho2, s2)
    }

    /// Slopes ε₂/ε₁ of the lines where ν₂ = 0 and where the mixed branch meets either axis.
    pub fn critical_lines(&self) -> CriticalLines {
        let (rho2, s2) = self.mixed_branch();
        CriticalLines {
            t: -self.nu2[0] / self.nu2[1],
            t1: -rho2[0] / rho2[1],
            t2: -s2[0] / s2[1],
        }
    }
}

/// Critical lines through the origin of the (ε₁, ε₂) plane; besides these, H₀ is ε₁ = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLines {
    /// Turing line ν₂ = 0.
    pub t: f64,
    /// Mixed modes bifurcate from the Hopf branch (ε₁ < 0).
    pub t1: f64,
    /// Mixed modes bifurcate from the Turing branch (ε₁ < 0).
    pub t2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AmpKind {
    /// Trivial state.
    A0,
    /// Pure Hopf amplitude.
    A1,
    /// Pure Turing amplitude (± pair).
    A2,
    /// Mixed amplitude (± pair).
    A3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpEquilibrium {
    pub kind: AmpKind,
    pub rho: f64,
    /// Nonnegative representative; the pair member has −s.
    pub s: f64,
    pub eigenvalues: [C64; 2],
    pub stable: bool,
}

/// Equilibria of the amplitude system in the half plane ρ ≥ 0 with their linear stability.
pub fn amplitude_equilibria(asys: &AmplitudeSystem, e1: f64, e2: f64) -> Vec<AmpEquilibrium> {
    let (n1, n2) = asys.nu(e1, e2);
    let jac = |rho: f64, s: f64| -> [[f64; 2]; 2] {
        [
            [
                n1 + 3.0 * asys.kappa11 * rho * rho + asys.kappa12 * s * s,
                2.0 * asys.kappa12 * rho * s,
            ],
            [
                2.0 * asys.kappa21 * rho * s,
                n2 + asys.kappa21 * rho * rho + 3.0 * asys.kappa22 * s * s,
            ],
        ]
    };
    let make = |kind: AmpKind, rho: f64, s: f64| {
        let j = jac(rho, s);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let eigenvalues = linalg::quadratic_eigs(tr, det);
        AmpEquilibrium {
            kind,
            rho,
            s,
            eigenvalues,
            stable: eigenvalues.iter().all(|e| e.re < 0.0),
        }
    };
    let mut out = vec![make(AmpKind::A0, 0.0, 0.0)];
    let r2 = -n1 / asys.kappa11;
    if r2 > 0.0 {
        out.push(make(AmpKind::A1, r2.sqrt(), 0.0));
    }
    let s2 = -n2 / asys.kappa22;
    if s2 > 0.0 {
        out.push(make(AmpKind::A2, 0.0, s2.sqrt()));
    }
    let det = asys.mixed_det();
    if det != 0.0 {
        let rho2 = (asys.kappa12 * n2 - asys.kappa22 * n1) / det;
        let ss2 = (asys.kappa21 * n1 - asys.kappa11 * n2) / det;
        if rho2 > 0.0 && ss2 > 0.0 {
            out.push(make(AmpKind::A3, rho2.sqrt(), ss2.sqrt()));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    D1,
    D2,
    D3,
    D4,
    D5,
    D6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PdeBehaviour {
    HomogeneousSteady,
    HomogeneousPeriodic,
    InhomogeneousSteady,
    InhomogeneousPeriodic,
}

impl AmpKind {
    pub fn pde_behaviour(self) -> PdeBehaviour {
        match self {
            AmpKind::A0 => PdeBehaviour::HomogeneousSteady,
            AmpKind::A1 => PdeBehaviour::HomogeneousPeriodic,
            AmpKind::A2 => PdeBehaviour::InhomogeneousSteady,
            AmpKind::A3 => PdeBehaviour::InhomogeneousPeriodic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NFRegion {
    pub region: Region,
    pub equilibria: Vec<AmpEquilibrium>,
    /// Behaviours of the stable amplitude equilibria.
    pub stable_behaviours: Vec<PdeBehaviour>,
}

/// Presence and stability per row: (A0, A1, A2, A3), None when absent.
pub const STABILITY_LEDGER: [(Region, [Option<bool>; 4]); 6] = [
    (Region::D1, [Some(true), None, None, None]),
    (Region::D2, [Some(false), None, Some(true), None]),
    (Region::D3, [Some(false), Some(false), Some(true), None]),
    (Region::D4, [Some(false), Some(true), Some(true), Some(false)]),
    (Region::D5, [Some(false), Some(true), Some(false), None]),
    (Region::D6, [Some(false), Some(true), None, None]),
];

fn signature(eqs: &[AmpEquilibrium]) -> [Option<bool>; 4] {
    let mut sig = [None; 4];
    for e in eqs {
        let i = match e.kind {
            AmpKind::A0 => 0,
            AmpKind::A1 => 1,
            AmpKind::A2 => 2,
            AmpKind::A3 => 3,
        };
        sig[i] = Some(e.stable);
    }
    sig
}

/// Region of the (ε₁, ε₂) plane, read off from the amplitude equilibria.
pub fn classify_epsilon(asys: &AmplitudeSystem, e1: f64, e2: f64) -> Result<NFRegion> {
    let (n1, n2) = asys.nu(e1, e2);
    let (rho2, s2) = asys.mixed_branch();
    let tol = 1e-10;
    if e1.abs() < tol || n1.abs() < tol {
        return Err(Error::OnBoundary("H0"));
    }
    if n2.abs() < tol {
        return Err(Error::OnBoundary("T"));
    }
    if e1 < 0.0 {
        if (rho2[0] * e1 + rho2[1] * e2).abs() < tol {
            return Err(Error::OnBoundary("T1"));
        }
        if (s2[0] * e1 + s2[1] * e2).abs() < tol {
            return Err(Error::OnBoundary("T2"));
        }
    }
    let equilibria = amplitude_equilibria(asys, e1, e2);
    let sig = signature(&equilibria);
    let region = STABILITY_LEDGER
        .iter()
        .find(|(_, row)| *row == sig)
        .map(|(r, _)| *r)
        .ok_or(Error::UnmatchedRegion)?;
    let stable_behaviours = equilibria
        .iter()
        .filter(|e| e.stable)
        .map(|e| e.kind.pde_behaviour())
        .collect();
    Ok(NFRegion {
        region,
        equilibria,
        stable_behaviours,
    })
}
