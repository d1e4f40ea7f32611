use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use vegpattern_core::equilibria::{all_equilibria, classify_param_region, curve_f1, curve_f2, curve_f3, find_saddle_node_r, EqKind};
use vegpattern_core::normal_form::{amplitude_equilibria, amplitude_system, classify_epsilon, nf_coeffs, spectral};
use vegpattern_core::simulate::{
    classify_pattern, cycle_branch, detect_attractor, homoclinic_scan, integrate_ode, simulate_pde, Attractor,
    CycleSearch, DetectConfig, HomoclinicRule, InitialProfile, Pattern, PatternThresholds,
};
use vegpattern_core::stability::{bare_soil_stability, bare_soil_threshold, hopf_points, jacobian, stability_verdict};
use vegpattern_core::turing::{d1_critical, dispersion, select_kstar, th_point, th_points, theta2_state_map, turing_curve, vegetated_state};
use vegpattern_core::model::partials;
use vegpattern_core::{Error, ModelParams, State};

use crate::config::{RunConfig, Shape, SimKind};
use crate::error::CliError;
use crate::table::{Cell, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Equilibria,
    BifScan,
    #[value(name = "2d-map")]
    Map2d,
    Turing,
    NormalForm,
    Simulate,
    StateMap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::BifScan => "bif-scan",
            Command::Map2d => "2d-map",
            Command::Turing => "turing",
            Command::NormalForm => "normal-form",
            Command::Simulate => "simulate",
            Command::StateMap => "state-map",
        }
    }
}

pub enum Artifact {
    Table(ResultTable),
    Json(Value),
}

impl Artifact {
    pub fn render(&self) -> String {
        match self {
            Artifact::Table(t) => t.to_csv_string(),
            Artifact::Json(v) => serde_json::to_string_pretty(v).expect("json") + "\n",
        }
    }
}

/// Files produced by one command; `partial` marks unresolved cells.
pub struct Output {
    pub files: Vec<(String, Artifact)>,
    pub partial: bool,
}

impl Output {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            partial: false,
        }
    }

    fn table(&mut self, name: &str, t: ResultTable) {
        self.files.push((name.into(), Artifact::Table(t)));
    }

    fn json(&mut self, name: &str, v: Value) {
        self.files.push((name.into(), Artifact::Json(v)));
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        Command::Equilibria => equilibria(cfg),
        Command::BifScan => bif_scan(cfg),
        Command::Map2d => map2d(cfg),
        Command::Turing => turing(cfg),
        Command::NormalForm => normal_form(cfg),
        Command::Simulate => simulate(cfg),
        Command::StateMap => state_map(cfg),
    }
}

fn table(cfg: &RunConfig, p: &ModelParams, cmd: &str, columns: &[&str]) -> ResultTable {
    let mut t = ResultTable::new(columns);
    t.meta("command", cmd)
        .meta("version", env!("CARGO_PKG_VERSION"))
        .meta("timestamp", cfg.timestamp.as_str());
    for (k, v) in [
        ("r", p.r),
        ("a", p.a),
        ("delta", p.delta),
        ("rho", p.rho),
        ("mu", p.mu),
        ("theta1", p.theta1),
        ("theta2", p.theta2),
        ("d1", p.d1),
        ("d2", p.d2),
        ("l", p.l),
    ] {
        t.meta(&format!("model.{k}"), v);
    }
    t
}

fn name<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

fn equilibrium_rows(p: &ModelParams) -> Vec<(String, State, String)> {
    all_equilibria(p)
        .into_iter()
        .map(|e| {
            let verdict = if e.kind == EqKind::BareSoil {
                if bare_soil_stability(p).stable { "Stable" } else { "Unstable" }.to_string()
            } else {
                name(stability_verdict(p, e.state()).kind)
            };
            (e.label.to_string(), e.state(), verdict)
        })
        .collect()
}

fn eigenvalues(trace: f64, det: f64) -> [Complex64; 2] {
    let disc = Complex64::new(0.25 * trace * trace - det, 0.0).sqrt();
    [0.5 * trace + disc, 0.5 * trace - disc]
}

fn equilibria(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let mut t = table(
        cfg,
        &p,
        "equilibria",
        &["label", "w", "b", "fprime_sign", "stability", "condition", "trace", "det", "eig1_re", "eig1_im", "eig2_re", "eig2_im"],
    );
    match classify_param_region(&p) {
        Ok(r) => {
            t.meta("region", name(r.region)).meta("f1", r.f1).meta("f2", r.f2).meta("f3", r.f3);
        }
        Err(e) => {
            t.meta("region", e.to_string());
        }
    }
    t.meta("bare_soil_threshold", bare_soil_threshold(&p));
    for e in all_equilibria(&p) {
        let (stability, condition, m) = if e.kind == EqKind::BareSoil {
            let v = bare_soil_stability(&p);
            let stability = if v.stable { "Stable" } else { "Unstable" };
            (stability.to_string(), Cell::Empty, partials(&p, e.state()))
        } else {
            let v = stability_verdict(&p, e.state());
            let cond = v.condition.map_or(Cell::Empty, |c| name(c).into());
            (name(v.kind), cond, jacobian(&p, e.state()).as_array())
        };
        let (trace, det) = (m[0][0] + m[1][1], m[0][0] * m[1][1] - m[0][1] * m[1][0]);
        let [l1, l2] = eigenvalues(trace, det);
        t.push(vec![
            e.label.to_string().into(),
            e.w.into(),
            e.b.into(),
            e.fprime_sign.into(),
            stability.into(),
            condition,
            trace.into(),
            det.into(),
            l1.re.into(),
            l1.im.into(),
            l2.re.into(),
            l2.im.into(),
        ]);
    }
    let mut out = Output::new();
    out.table("equilibria.csv", t);
    Ok(out)
}

fn bif_scan(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let sc = &cfg.bif_scan;
    let mut out = Output::new();

    let mut branches = table(cfg, &p, "bif-scan", &["r", "label", "w", "b", "stability"]);
    let rows: Vec<Vec<Vec<Cell>>> = sc
        .r
        .values()
        .par_iter()
        .map(|&r| {
            equilibrium_rows(&p.with_r(r))
                .into_iter()
                .map(|(label, s, v)| vec![r.into(), label.into(), s.w.into(), s.b.into(), v.into()])
                .collect()
        })
        .collect();
    rows.into_iter().flatten().for_each(|r| branches.push(r));
    out.table("bif_branches.csv", branches);

    let mut points = table(cfg, &p, "bif-scan", &["kind", "r", "w", "b", "detail", "value"]);
    let push = |t: &mut ResultTable, kind: &str, r: Cell, w: Cell, b: Cell, detail: Cell, value: Cell| {
        t.push(vec![kind.into(), r, w, b, detail, value]);
    };
    if let Some(r) = bare_soil_threshold(&p) {
        push(&mut points, "transcritical", r.into(), (r / p.a).into(), 0.0.into(), Cell::Empty, Cell::Empty);
    }
    if sc.r.steps > 1 {
        let bracket = (sc.r.min, sc.r.max);
        match find_saddle_node_r(&p, bracket) {
            Ok(folds) => {
                for (r, b) in folds {
                    let w = p.with_r(r).equilibrium_water(b);
                    push(&mut points, "fold", r.into(), w.into(), b.into(), Cell::Empty, Cell::Empty);
                }
            }
            Err(e) => {
                out.partial = true;
                push(&mut points, "fold", Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into(), Cell::Empty);
            }
        }
        match hopf_points(&p, bracket) {
            Ok(hps) => {
                for h in hps {
                    push(&mut points, "hopf", h.r.into(), h.w.into(), h.b.into(), name(h.criticality).into(), h.lyapunov.into());
                }
            }
            Err(e) => {
                out.partial = true;
                push(&mut points, "hopf", Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into(), Cell::Empty);
            }
        }
    }
    if let Some([r_cycle, r_none]) = sc.homoclinic {
        match homoclinic_scan(&p, r_cycle, r_none, &HomoclinicRule::default(), &CycleSearch::default()) {
            Ok(h) => push(
                &mut points,
                "homoclinic",
                h.r_hl.into(),
                Cell::Empty,
                Cell::Empty,
                name(h.evidence).into(),
                h.last_period.into(),
            ),
            Err(e) => {
                out.partial = true;
                push(&mut points, "homoclinic", Cell::Empty, Cell::Empty, Cell::Empty, e.to_string().into(), Cell::Empty);
            }
        }
    }
    out.table("bif_points.csv", points);

    if sc.cycle_samples > 0 && sc.r.steps > 0 {
        let mut cycles = table(cfg, &p, "bif-scan", &["r", "period", "b_min", "b_max", "stable"]);
        let branch = cycle_branch(&p, (sc.r.min, sc.r.max), sc.cycle_samples, &CycleSearch::default());
        for s in &branch.samples {
            if s.unresolved {
                out.partial = true;
                cycles.push(vec![s.r.into(), Cell::Empty, Cell::Empty, Cell::Empty, "unresolved".into()]);
            }
            for c in &s.cycles {
                cycles.push(vec![s.r.into(), c.period.into(), c.b_min.into(), c.b_max.into(), c.stable.into()]);
            }
        }
        cycles.meta("fold_r", branch.fold_r);
        out.table("bif_cycles.csv", cycles);
    }
    Ok(out)
}

fn map2d(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let mc = &cfg.map2d;
    let (thetas, rs) = (mc.theta2.values(), mc.r.values());
    let mut out = Output::new();

    let mut cells = table(cfg, &p, "2d-map", &["theta2", "r", "region", "positive_equilibria", "bare_soil_stable"]);
    let rows: Vec<(Vec<Cell>, bool)> = thetas
        .iter()
        .flat_map(|&t2| rs.iter().map(move |&r| (t2, r)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(t2, r)| {
            let pc = p.with_theta2(t2).with_r(r);
            let (region, ok) = match classify_param_region(&pc) {
                Ok(reg) => (name(reg.region), true),
                Err(_) => ("unresolved".to_string(), false),
            };
            let n = all_equilibria(&pc).len() - 1;
            (
                vec![t2.into(), r.into(), region.into(), n.into(), bare_soil_stability(&pc).stable.into()],
                ok,
            )
        })
        .collect();
    for (row, ok) in rows {
        out.partial |= !ok;
        cells.push(row);
    }
    out.table("map2d_regions.csv", cells);

    let mut curves = table(cfg, &p, "2d-map", &["theta2", "curve", "r"]);
    let bracket = (mc.r.min, mc.r.max);
    let cols: Vec<(Vec<Vec<Cell>>, bool)> = thetas
        .par_iter()
        .map(|&t2| {
            let pc = p.with_theta2(t2);
            let mut rows: Vec<Vec<Cell>> = vec![
                vec![t2.into(), "f1".into(), curve_f1(&pc).into()],
                vec![t2.into(), "f2".into(), curve_f2(&pc).into()],
                vec![t2.into(), "f3".into(), curve_f3(&pc).into()],
            ];
            if let Some(r) = bare_soil_threshold(&pc) {
                rows.push(vec![t2.into(), "transcritical".into(), r.into()]);
            }
            let mut ok = true;
            if mc.r.steps > 1 {
                match find_saddle_node_r(&pc, bracket) {
                    Ok(f) => rows.extend(f.into_iter().map(|(r, _)| vec![t2.into(), "fold".into(), r.into()])),
                    Err(_) => ok = false,
                }
                match hopf_points(&pc, bracket) {
                    Ok(h) => rows.extend(h.into_iter().map(|h| vec![t2.into(), "hopf".into(), h.r.into()])),
                    Err(_) => ok = false,
                }
            }
            (rows, ok)
        })
        .collect();
    for (rows, ok) in cols {
        out.partial |= !ok;
        rows.into_iter().for_each(|r| curves.push(r));
    }
    out.table("map2d_curves.csv", curves);
    Ok(out)
}

fn turing(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let tc = &cfg.turing;
    let mut out = Output::new();
    let eq = vegetated_state(&p).ok_or_else(|| CliError::Numerical(format!("no vegetated equilibrium at R = {}", p.r)))?;

    let mut disp = table(cfg, &p, "turing", &["k", "t_k", "j_k", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "d1_crit"]);
    disp.meta("w_eq", eq.w).meta("b_eq", eq.b);
    match select_kstar(&p, eq.state()) {
        Ok(ks) => {
            disp.meta("k_star", ks.k_star).meta("d1_star", ks.d1).meta("z_star", ks.z_star);
        }
        Err(e) => {
            disp.meta("k_star", e.to_string());
        }
    }
    for k in 0..=tc.k_max {
        let d = dispersion(&p, eq.state(), k);
        let d1c = if k == 0 { None } else { d1_critical(&p, eq.state(), k).ok().map(|d| d.value) };
        disp.push(vec![
            k.into(),
            d.t_k.into(),
            d.j_k.into(),
            d.eigs[0].re.into(),
            d.eigs[0].im.into(),
            d.eigs[1].re.into(),
            d.eigs[1].im.into(),
            d1c.into(),
        ]);
    }
    out.table("turing_dispersion.csv", disp);

    let mut curve_t = table(cfg, &p, "turing", &["r", "k_star", "d1_crit", "z_star"]);
    let mut points = table(cfg, &p, "turing", &["kind", "r", "d1", "k_star", "k_to", "w", "b", "omega0"]);
    if let Some(step) = tc.r.spacing() {
        let curve = turing_curve(&p, (tc.r.min, tc.r.max), step);
        for pt in &curve.points {
            curve_t.push(vec![pt.r.into(), pt.k_star.into(), pt.d1_crit.into(), pt.z_star.into()]);
        }
        for s in &curve.switches {
            points.push(vec![
                "mode_switch".into(),
                s.r.into(),
                Cell::Empty,
                s.k_from.into(),
                s.k_to.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ]);
        }
    }
    match th_points(&p, (tc.th_bracket[0], tc.th_bracket[1])) {
        Ok(ths) => {
            for th in ths {
                points.push(vec![
                    "turing_hopf".into(),
                    th.r.into(),
                    th.d1.into(),
                    th.k_star.into(),
                    Cell::Empty,
                    th.w.into(),
                    th.b.into(),
                    th.omega0.into(),
                ]);
            }
        }
        Err(Error::NoIntersection(_)) => {}
        Err(e) => {
            out.partial = true;
            points.meta("turing_hopf", e.to_string());
        }
    }
    out.table("turing_curve.csv", curve_t);
    out.table("turing_points.csv", points);
    Ok(out)
}

fn locate_th(cfg: &RunConfig) -> Result<vegpattern_core::turing::THPoint, CliError> {
    let nc = &cfg.normal_form;
    Ok(th_point(&cfg.model, (nc.th_bracket[0], nc.th_bracket[1]), nc.r_hint)?)
}

fn normal_form(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let nc = &cfg.normal_form;
    let mut out = Output::new();
    let th = locate_th(cfg)?;
    let sp = spectral(&p, &th)?;
    let nf = nf_coeffs(&p, &th)?;
    let asys = amplitude_system(&nf)?;
    let lines = asys.critical_lines();

    let region_of = |e1: f64, e2: f64| match classify_epsilon(&asys, e1, e2) {
        Ok(r) => (name(r.region), true),
        Err(Error::OnBoundary(line)) => (format!("boundary {line}"), true),
        Err(_) => ("unresolved".into(), false),
    };
    let samples: Vec<Value> = nc
        .samples
        .iter()
        .map(|&[e1, e2]| {
            let eqs = amplitude_equilibria(&asys, e1, e2);
            let region = classify_epsilon(&asys, e1, e2);
            json!({
                "eps": [e1, e2],
                "region": region.as_ref().map(|r| name(r.region)).unwrap_or_else(|e| e.to_string()),
                "stable_behaviours": region.map(|r| r.stable_behaviours).unwrap_or_default(),
                "equilibria": eqs,
            })
        })
        .collect();
    out.json(
        "normal_form.json",
        json!({
            "command": "normal-form",
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": cfg.timestamp,
            "model": p,
            "th_point": th,
            "spectral": sp,
            "coefficients": nf,
            "amplitude_system": asys,
            "critical_lines": lines,
            "samples": samples,
        }),
    );

    let mut grid = table(cfg, &p, "normal-form", &["eps1", "eps2", "region"]);
    grid.meta("th.r", th.r).meta("th.d1", th.d1).meta("th.k_star", th.k_star);
    let (e1s, e2s) = (nc.eps1.values(), nc.eps2.values());
    let cells: Vec<(f64, f64)> = e1s.iter().flat_map(|&a| e2s.iter().map(move |&b| (a, b))).collect();
    let rows: Vec<(f64, f64, String, bool)> = cells
        .par_iter()
        .map(|&(e1, e2)| {
            let (r, ok) = region_of(e1, e2);
            (e1, e2, r, ok)
        })
        .collect();
    for (e1, e2, r, ok) in rows {
        out.partial |= !ok;
        grid.push(vec![e1.into(), e2.into(), r.into()]);
    }
    out.table("normal_form_regions.csv", grid);
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let sc = &cfg.simulate;
    let mut out = Output::new();
    let (p, default_base) = match sc.th_offset {
        Some([e1, e2]) => {
            let th = locate_th(cfg)?;
            let p = th.params(&cfg.model).with_r(th.r + e1).with_d1(th.d1 + e2);
            (p, Some(th.state()))
        }
        None => (cfg.model, vegetated_state(&cfg.model).map(|e| e.state())),
    };
    let base = match sc.init.base {
        Some([w, b]) => State::new(w, b),
        None => default_base.ok_or_else(|| {
            CliError::Numerical(format!("no vegetated equilibrium at R = {}; set simulate.init.base", p.r))
        })?,
    };
    match sc.kind {
        SimKind::Pde => {
            let init = match sc.init.shape {
                Shape::Cosine => InitialProfile::Cosine {
                    base,
                    amp: sc.init.amp,
                    freq: sc.init.freq,
                },
                Shape::Constant => InitialProfile::Constant {
                    base,
                    offset: sc.init.amp,
                },
            };
            let field = simulate_pde(&p, &init, &sc.pde)?;
            let mut t = table(cfg, &p, "simulate", &["t", "x", "w", "b"]);
            let last = field.times.len() - 1;
            for (i, &time) in field.times.iter().enumerate() {
                if i % sc.dump_every != 0 && i != last {
                    continue;
                }
                for (j, &x) in field.x.iter().enumerate() {
                    t.push(vec![time.into(), x.into(), field.w[i][j].into(), field.b[i][j].into()]);
                }
            }
            out.table("simulate_field.csv", t);
            let outcome = classify_pattern(&field, &PatternThresholds::default());
            let summary = match &outcome {
                Ok(o) => {
                    out.partial |= matches!(o.pattern, Pattern::Unresolved);
                    json!({
                        "pattern": o.pattern,
                        "antiphase_corr": o.antiphase_corr,
                        "mean_b": o.mean_b,
                        "modes": &o.modes[..o.modes.len().min(33)],
                    })
                }
                Err(e) => {
                    out.partial = true;
                    json!({ "pattern": { "kind": "unresolved" }, "error": e.to_string() })
                }
            };
            out.json(
                "simulate_summary.json",
                json!({
                    "command": "simulate",
                    "version": env!("CARGO_PKG_VERSION"),
                    "timestamp": cfg.timestamp,
                    "model": p,
                    "init": init,
                    "pde": sc.pde,
                    "steps": { "accepted": field.stats.accepted, "rejected": field.stats.rejected },
                    "outcome": summary,
                }),
            );
        }
        SimKind::Ode => {
            let init = State::new(base.w + sc.init.amp, base.b + sc.init.amp);
            let traj = integrate_ode(&p, init, sc.ode.t_end, sc.ode.tol)?;
            let mut t = table(cfg, &p, "simulate", &["t", "w", "b"]);
            let last = traj.times.len() - 1;
            for (i, (&time, s)) in traj.times.iter().zip(&traj.states).enumerate() {
                if i % sc.dump_every == 0 || i == last {
                    t.push(vec![time.into(), s.w.into(), s.b.into()]);
                }
            }
            out.table("simulate_trajectory.csv", t);
            let att = detect_attractor(&traj, &all_equilibria(&p), &DetectConfig::default());
            out.partial |= matches!(att, Attractor::Unresolved);
            out.json(
                "simulate_summary.json",
                json!({
                    "command": "simulate",
                    "version": env!("CARGO_PKG_VERSION"),
                    "timestamp": cfg.timestamp,
                    "model": p,
                    "init": init,
                    "ode": sc.ode,
                    "attractor": att,
                }),
            );
        }
    }
    Ok(out)
}

fn state_map(cfg: &RunConfig) -> Result<Output, CliError> {
    let p = cfg.model;
    let sm = theta2_state_map(&p, &cfg.state_map.theta2.values(), &cfg.state_map.d1.values());
    let mut out = Output::new();
    let mut cells = table(cfg, &p, "state-map", &["theta2", "d1", "state"]);
    cells.meta("boundary", sm.boundary);
    for (i, &t2) in sm.theta2.iter().enumerate() {
        for (j, &d1) in sm.d1.iter().enumerate() {
            cells.push(vec![t2.into(), d1.into(), name(sm.cells[i][j]).into()]);
        }
    }
    out.table("state_map.csv", cells);
    let mut curve = table(cfg, &p, "state-map", &["theta2", "d1_crit", "biomass"]);
    curve.meta("boundary", sm.boundary);
    for (i, &t2) in sm.theta2.iter().enumerate() {
        curve.push(vec![t2.into(), sm.d1_curve[i].into(), sm.biomass[i].into()]);
    }
    out.table("state_map_curve.csv", curve);
    Ok(out)
}
