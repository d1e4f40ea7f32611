//! Randomised invariants of the model, the equilibrium/stability analysis, the
//! dispersion relation and the amplitude system.

use num_complex::Complex64;
use proptest::prelude::*;
use vegpattern_core::equilibria::{
    curve_f3, descartes_case, find_positive_equilibria, quartic_coeffs, QuarticF,
};
use vegpattern_core::model::{kinetics, mortality, partials, taylor_coefficients};
use vegpattern_core::normal_form::{
    amplitude_equilibria, amplitude_system, classify_epsilon, nf_coeffs, AmpKind, AmplitudeSystem, STABILITY_LEDGER,
};
use vegpattern_core::simulate::integrate_ode;
use vegpattern_core::stability::{jacobian, stability_verdict, StabilityKind};
use vegpattern_core::turing::{d1_critical, dispersion, select_kstar, th_point};
use vegpattern_core::{Error, ModelParams, State};

mod common;
use common::bisection_count;

fn params() -> impl Strategy<Value = ModelParams> {
    (
        0.2f64..30.0,
        0.05f64..0.5,
        0.05f64..0.5,
        0.5f64..2.0,
        0.5f64..12.0,
        0.0f64..8.0,
        0.0f64..2.0,
    )
        .prop_map(|(r, a, delta, rho, extra, t1, t2)| {
            ModelParams::new(r, a, delta, rho, rho + extra, t1, t2).unwrap()
        })
}

fn dryland() -> impl Strategy<Value = ModelParams> {
    (0.0f64..8.0, 0.0f64..1.5, 0.3f64..25.0).prop_map(|(t1, t2, r)| ModelParams::dryland(t1, t2, r))
}

/// Feedback strengths and rainfall where the vegetated state often has a Turing window.
fn turing_family() -> impl Strategy<Value = ModelParams> {
    (3.0f64..7.0, 0.3f64..1.2, 1.0f64..3.0).prop_map(|(t1, t2, r)| ModelParams::dryland(t1, t2, r))
}

fn value(p: &ModelParams, w: f64, b: f64, comp: usize) -> f64 {
    let (f, g) = kinetics(p, State::new(w, b)).unwrap();
    [f, g][comp]
}

/// Richardson-extrapolated mixed central difference of order (i, j).
fn fd(p: &ModelParams, s: State, comp: usize, i: u32, j: u32) -> f64 {
    let stencil = |hw: f64, hb: f64| -> f64 {
        let mut pts: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 1.0)];
        for _ in 0..i {
            pts = pts
                .into_iter()
                .flat_map(|(dw, db, c)| [(dw + hw, db, c / (2.0 * hw)), (dw - hw, db, -c / (2.0 * hw))])
                .collect();
        }
        for _ in 0..j {
            pts = pts
                .into_iter()
                .flat_map(|(dw, db, c)| [(dw, db + hb, c / (2.0 * hb)), (dw, db - hb, -c / (2.0 * hb))])
                .collect();
        }
        pts.iter().map(|(dw, db, c)| c * value(p, s.w + dw, s.b + db, comp)).sum()
    };
    let (hw, hb) = match i + j {
        1 => (1e-4 * s.w, 1e-4 * s.b.max(0.05)),
        2 => (1e-3 * s.w, 1e-3 * s.b.max(0.05)),
        _ => (4e-3 * s.w, 4e-3 * s.b.max(0.05)),
    };
    (4.0 * stencil(hw / 2.0, hb / 2.0) - stencil(hw, hb)) / 3.0
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

proptest! {
    #![proptest_config(config(300))]

    #[test]
    fn derivatives_match_finite_differences(p in params(), w in 0.5f64..50.0, b in 0.05f64..5.0) {
        let s = State::new(w, b);
        let j = partials(&p, s);
        let t = taylor_coefficients(&p, s);
        // natural size of an (i, j) derivative: function magnitude / (w^i b^j)
        let mag = [p.r + p.a * w + p.delta * w * b, p.rho * b * (1.0 + b / w) + p.mu * b];
        let ok = |got: f64, want: f64, c: usize, i: i32, j: i32, rel: f64| {
            (got - want).abs() <= rel * (want.abs() + mag[c] / (w.powi(i) * b.powi(j)))
        };
        for c in 0..2 {
            prop_assert!(ok(j[c][0], fd(&p, s, c, 1, 0), c, 1, 0, 1e-6));
            prop_assert!(ok(j[c][1], fd(&p, s, c, 0, 1), c, 0, 1, 1e-6));
            let fd2 = [fd(&p, s, c, 2, 0), fd(&p, s, c, 1, 1), fd(&p, s, c, 0, 2)];
            for (k, (a, e)) in t.second(c).iter().zip(fd2).enumerate() {
                prop_assert!(ok(*a, e, c, 2 - k as i32, k as i32, 1e-6), "second {} {}: {} vs {}", c, k, a, e);
            }
            let fd3 = [fd(&p, s, c, 3, 0), fd(&p, s, c, 2, 1), fd(&p, s, c, 1, 2), fd(&p, s, c, 0, 3)];
            for (k, (a, e)) in t.third(c).iter().zip(fd3).enumerate() {
                prop_assert!(ok(*a, e, c, 3 - k as i32, k as i32, 1e-4), "third {} {}: {} vs {}", c, k, a, e);
            }
        }
    }

    #[test]
    fn mortality_is_nonincreasing(p in params(), w in 0.01f64..100.0, b in 0.0f64..10.0, dw in 0.0f64..10.0, db in 0.0f64..10.0) {
        let m = mortality(&p, State::new(w, b));
        prop_assert!(mortality(&p, State::new(w + dw, b)) <= m);
        prop_assert!(mortality(&p, State::new(w, b + db)) <= m);
    }

    #[test]
    fn without_feedbacks_the_theta_terms_vanish(r in 0.2f64..30.0, w in 0.5f64..50.0, b in 0.05f64..5.0) {
        let p = ModelParams::dryland(0.0, 0.0, r);
        let t = taylor_coefficients(&p, State::new(w, b));
        let rho = p.rho;
        let want = [
            -rho * b * b / (w * w * w),
            2.0 * rho * b / (w * w),
            -rho / w,
            rho * b * b / w.powi(4),
            -2.0 * rho * b / (w * w * w),
            rho / (w * w),
            0.0,
        ];
        for (k, e) in want.iter().enumerate() {
            prop_assert!((t.coeff(2, k + 3) - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
        prop_assert!((t.coeff(2, 2) - (rho * (1.0 - 2.0 * b / w) - p.mu)).abs() < 1e-12 * p.mu);
    }

    #[test]
    fn equilibria_lie_on_the_water_nullcline(p in params()) {
        for e in find_positive_equilibria(&p) {
            prop_assert!(close(e.w * (p.a + p.delta * e.b), p.r, 1e-10));
        }
    }

    #[test]
    fn fprime_signs_alternate_and_match_determinant(p in params()) {
        let eqs = find_positive_equilibria(&p);
        prop_assume!(eqs.iter().all(|e| !e.near_degenerate));
        let signs: Vec<i8> = eqs.iter().map(|e| e.fprime_sign).collect();
        let expected: &[i8] = match eqs.len() {
            0 => &[],
            1 => &[1],
            2 => &[-1, 1],
            3 => &[1, -1, 1],
            n => panic!("{n} positive equilibria"),
        };
        prop_assert_eq!(signs.as_slice(), expected);
        for e in &eqs {
            let det = jacobian(&p, e.state()).det();
            prop_assert_eq!(det.signum() as i8, e.fprime_sign);
        }
    }

    #[test]
    fn verdict_matches_eigenvalues(p in params()) {
        for e in find_positive_equilibria(&p) {
            let v = stability_verdict(&p, e.state());
            prop_assume!(v.kind != StabilityKind::Degenerate);
            let j = partials(&p, e.state());
            let half = 0.5 * (j[0][0] + j[1][1]);
            let disc = Complex64::new(0.25 * (j[0][0] - j[1][1]).powi(2) + j[0][1] * j[1][0], 0.0).sqrt();
            let eig = [half + disc, half - disc];
            let expected = if eig[0].im == 0.0 && eig[0].re * eig[1].re < 0.0 {
                StabilityKind::Saddle
            } else if eig.iter().all(|l| l.re < 0.0) {
                StabilityKind::Stable
            } else {
                StabilityKind::UnstableFocusOrNode
            };
            prop_assert_eq!(v.kind, expected);
        }
    }

    #[test]
    fn branch_rises_where_the_biomass_equation_falls(p in dryland()) {
        let h = |r: f64, b: f64| {
            let s = p.a + p.delta * b;
            p.rho / r * (r - p.a * b - p.delta * b * b) - p.mu * s / ((1.0 + p.theta1 * b) * s + p.theta2 * r)
        };
        let eqs = find_positive_equilibria(&p);
        prop_assume!(eqs.iter().all(|e| !e.near_degenerate));
        let dr = 1e-6 * p.r;
        let up = find_positive_equilibria(&p.with_r(p.r + dr));
        let dn = find_positive_equilibria(&p.with_r(p.r - dr));
        prop_assume!(up.len() == eqs.len() && dn.len() == eqs.len());
        for (i, e) in eqs.iter().enumerate() {
            let hb = (h(p.r, e.b + 1e-7) - h(p.r, e.b - 1e-7)) / 2e-7;
            if hb < -1e-6 {
                prop_assert!(up[i].b - dn[i].b > 0.0);
            }
        }
    }

    #[test]
    fn descartes_count_matches_solver(p in params()) {
        let q = quartic_coeffs(&p);
        let eqs = find_positive_equilibria(&p);
        prop_assume!(eqs.iter().all(|e| !e.near_degenerate));
        match descartes_case(&q) {
            Ok(case) => prop_assert_eq!(case.positive_roots as usize, eqs.len()),
            Err(Error::SignBoundary { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn transcritical_curve_zeroes_the_constant_term(t1 in 0.0f64..8.0, t2 in 0.05f64..2.0) {
        let p = ModelParams::dryland(t1, t2, 1.0);
        let p = p.with_r(curve_f3(&p));
        let q = quartic_coeffs(&p);
        prop_assert!(q.c0.abs() < 1e-10 * (1.0 + q.c1.abs() + q.c2.abs() + q.c3.abs()), "C0 = {}", q.c0);
    }

    #[test]
    fn critical_diffusion_zeroes_the_mode_determinant(p in turing_family(), k in 1u32..30) {
        let Some(eq) = vegpattern_core::turing::vegetated_state(&p) else { return Ok(()); };
        let Ok(d) = d1_critical(&p, eq.state(), k) else { return Ok(()); };
        if !(d.value > 0.0) {
            return Ok(());
        }
        let jk = dispersion(&p.with_d1(d.value), eq.state(), k).j_k;
        let j = jacobian(&p, eq.state());
        let scale = j.det().abs() + (d.value * j.a22.abs() + p.d2 * j.a11.abs()) * (k as f64 / p.l).powi(2)
            + d.value * p.d2 * (k as f64 / p.l).powi(4);
        prop_assert!(jk.abs() < 1e-10 * scale.max(1e-12), "J_k = {jk}");
    }

    #[test]
    fn mode_trace_decreases_with_wavenumber(p in dryland(), d1 in 0.001f64..2.0) {
        let p = p.with_d1(d1);
        let Some(eq) = vegpattern_core::turing::vegetated_state(&p) else { return Ok(()); };
        let t0 = dispersion(&p, eq.state(), 0).t_k;
        let mut prev = t0;
        for k in 1..40 {
            let t = dispersion(&p, eq.state(), k).t_k;
            prop_assert!(t < prev);
            if t0 < 0.0 {
                prop_assert!(t < 0.0);
            }
            prev = t;
        }
    }

    #[test]
    fn critical_diffusion_is_unimodal_in_wavenumber(p in turing_family()) {
        let Some(eq) = vegpattern_core::turing::vegetated_state(&p) else { return Ok(()); };
        let j = jacobian(&p, eq.state());
        if !(j.a22 > 0.0 && j.det() > 0.0) {
            return Ok(());
        }
        let Ok(ks) = select_kstar(&p, eq.state()) else { return Ok(()); };
        let l2 = p.l * p.l;
        let (b1, b2, b3) = (p.d2 * j.a11, (j.a12 * j.a21 - j.a11 * j.a22) * l2, j.a22 * l2);
        let d1 = |z: f64| l2 * (b1 * z + b2) / (z * (p.d2 * z - b3));
        let zmax = b3 / p.d2;
        if !(ks.z_star > 0.0 && ks.z_star < zmax) {
            return Ok(());
        }
        let n = 400;
        let mut prev = f64::INFINITY;
        let mut passed_min = false;
        for i in 1..n {
            let z = zmax * i as f64 / n as f64;
            let v = d1(z);
            if z <= ks.z_star {
                prop_assert!(v <= prev * (1.0 + 1e-12) || prev.is_infinite());
            } else if passed_min {
                prop_assert!(v >= prev * (1.0 - 1e-12), "not increasing after z* at z = {z}");
            }
            passed_min = z > ks.z_star;
            prev = v;
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn descartes_count_matches_bisection_oracle(
        c3 in 0.01f64..10.0,
        c2 in -20.0f64..20.0,
        c1 in -20.0f64..20.0,
        c0 in -20.0f64..20.0,
    ) {
        let q = QuarticF { c0, c1, c2, c3 };
        let Some(oracle) = bisection_count(&q) else { return Ok(()); };
        match descartes_case(&q) {
            Ok(case) => prop_assert_eq!(case.positive_roots as usize, oracle, "{:?}", q),
            Err(Error::SignBoundary { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

proptest! {
    #![proptest_config(config(200))]

    #[test]
    fn ode_trajectories_respect_invariant_bounds(p in params(), w0 in 0.01f64..100.0, b0 in 0.0f64..10.0) {
        let traj = integrate_ode(&p, State::new(w0, b0), 300.0, 1e-8)
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let w_max = w0.max(p.r / p.a);
        let b_max = b0.max(w_max);
        let w_min = w0.min(p.r / (p.a + p.delta * b_max));
        for s in &traj.states {
            prop_assert!(s.w <= w_max * (1.0 + 1e-6) && s.w >= w_min * (1.0 - 1e-6));
            prop_assert!(s.b <= b_max * (1.0 + 1e-6));
            if b0 > 0.0 {
                prop_assert!(s.b > -1e-9);
            } else {
                prop_assert_eq!(s.b, 0.0);
            }
        }
    }
}

fn th_amplitude_system() -> AmplitudeSystem {
    let p = ModelParams::dryland(5.0, 0.8, 1.5);
    let th = th_point(&p, (1.13, 2.5), 1.56).unwrap();
    amplitude_system(&nf_coeffs(&p, &th).unwrap()).unwrap()
}

#[test]
fn epsilon_grid_is_consistent_with_the_ledger() {
    let asys = th_amplitude_system();
    let n = 50;
    let mut seen = std::collections::HashSet::new();
    for i in 0..n {
        for j in 0..n {
            let e1 = -0.05 + 0.1 * (i as f64 + 0.5) / n as f64;
            let e2 = -0.05 + 0.1 * (j as f64 + 0.5) / n as f64;
            let region = match classify_epsilon(&asys, e1, e2) {
                Ok(r) => r,
                Err(Error::OnBoundary(_)) => continue,
                Err(e) => panic!("({e1}, {e2}): {e}"),
            };
            let row = STABILITY_LEDGER.iter().find(|(r, _)| *r == region.region).unwrap().1;
            let eqs = amplitude_equilibria(&asys, e1, e2);
            for (k, kind) in [AmpKind::A0, AmpKind::A1, AmpKind::A2, AmpKind::A3].into_iter().enumerate() {
                let got = eqs.iter().find(|e| e.kind == kind).map(|e| e.stable);
                assert_eq!(got, row[k], "({e1}, {e2}) {:?} {kind:?}", region.region);
            }
            seen.insert(region.region);
        }
    }
    assert_eq!(seen.len(), 6, "regions seen: {seen:?}");
}

#[test]
fn amplitude_flow_settles_on_a_listed_stable_equilibrium() {
    use rand::{Rng, SeedableRng};
    let asys = th_amplitude_system();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let points = [(0.01, -0.005), (0.01, 0.01), (-0.01, 0.015), (-0.03, 0.01), (-0.04, -0.005), (-0.01, -0.005)];
    // The system is invariant under ε → λε, (ρ, s) → √λ(ρ, s), t → t/λ; rescale to unit size.
    let lambda = 100.0;
    for (e1, e2) in points {
        let (e1, e2) = (lambda * e1, lambda * e2);
        let stable: Vec<(f64, f64)> = amplitude_equilibria(&asys, e1, e2)
            .into_iter()
            .filter(|e| e.stable)
            .map(|e| (e.rho, e.s))
            .collect();
        for _ in 0..100 {
            let (mut rho, mut s): (f64, f64) = (rng.gen_range(0.01..1.5), rng.gen_range(-1.5..1.5));
            let h = 0.05;
            for _ in 0..100_000 {
                let k1 = asys.rhs(e1, e2, rho, s);
                let k2 = asys.rhs(e1, e2, rho + 0.5 * h * k1.0, s + 0.5 * h * k1.1);
                let k3 = asys.rhs(e1, e2, rho + 0.5 * h * k2.0, s + 0.5 * h * k2.1);
                let k4 = asys.rhs(e1, e2, rho + h * k3.0, s + h * k3.1);
                rho += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                s += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                if k1.0.abs().max(k1.1.abs()) < 1e-12 {
                    break;
                }
            }
            let hit = stable
                .iter()
                .any(|&(r0, s0)| (rho - r0).abs() < 1e-4 && (s.abs() - s0).abs() < 1e-4);
            assert!(hit, "ε = ({e1}, {e2}): flow ended at ({rho}, {s}), stable set {stable:?}");
        }
    }
}

#[test]
fn turing_line_slope_matches_coefficients() {
    let asys = th_amplitude_system();
    let t = asys.critical_lines().t;
    assert!((t - asys.nu2[0] / -asys.nu2[1]).abs() < 1e-15);
    assert!(((t - 0.17018) / 0.17018).abs() < 0.01, "slope {t}");
}

#[test]
fn th_point_spectra() {
    let p = ModelParams::dryland(5.0, 0.8, 1.5);
    for hint in [1.40036, 1.56469] {
        let th = th_point(&p, (1.13, 2.5), hint).unwrap();
        let pt = th.params(&p);
        let d0 = dispersion(&pt, th.state(), 0);
        for e in d0.eigs {
            assert!(e.re.abs() < 1e-8);
            assert!((e.im.abs() - th.omega0).abs() < 1e-8);
        }
        let dk = dispersion(&pt, th.state(), th.k_star);
        let mut re: Vec<f64> = dk.eigs.iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        assert!(re[1].abs() < 1e-8);
        assert!(re[0] < 0.0 && (re[0] - dk.t_k).abs() < 1e-8);
    }
}
