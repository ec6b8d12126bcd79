use std::sync::Arc;

use radial_extremal::branch::{
    minimal_branch, AnalyticNonlinearity, BranchOptions, NonlinearFn, ShootOptions,
};
use radial_extremal::format::{csv_string, fmt_f64, fmt_log, LogScalar};
use radial_extremal::linear_ode::{
    compare_potentials, default_density, grid_for, solve_linearized, LinearSolution,
};
use radial_extremal::potentials::{
    blend, borderline_level, build_oscillatory, hardy_level, OscillationOptions, Phi,
    PotentialSpec, Side,
};
use radial_extremal::radial_core::{LogRadialGrid, RadialProfile};
use radial_extremal::reconstruction::{reconstruct, verify_fprime_equals_psi};
use radial_extremal::verification::{
    bound_check, cstar_from_table, first_eigenvalue, stability_quadratic_form, VerificationReport,
    WindowOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::output::Outputs;
use crate::spec_args::{load_spec, parse_phi, parse_potential};

/// Outputs to write, plus a failure to report after writing them.
pub type RunResult = Result<(Outputs, Option<CliError>), CliError>;

fn scaled(p: &RadialProfile, i: usize) -> String {
    fmt_log(&LogScalar::from_scaled(p.mantissa(i), p.offset(i)))
}

fn scaled_slope(p: &RadialProfile, i: usize) -> String {
    fmt_log(&LogScalar::from_scaled(p.slope_mantissa(i), p.offset(i)))
}

fn radius(t: f64) -> String {
    fmt_log(&LogScalar::positive_ln(t))
}

/// `t, r, omega, omega_t, u` per node.
fn profile_csv(sol: &LinearSolution) -> String {
    let g = sol.omega.grid();
    csv_string(
        &["t", "r", "omega", "omega_t", "u"],
        (0..g.len()).map(|i| {
            let t = g.t(i);
            vec![
                fmt_f64(t),
                radius(t),
                scaled(&sol.omega, i),
                scaled_slope(&sol.omega, i),
                scaled(&sol.u, i),
            ]
        }),
    )
}

fn grid_of(psi: &PotentialSpec, cfg: &RunConfig) -> Result<Arc<LogRadialGrid>, CliError> {
    let density = cfg.density.unwrap_or_else(|| default_density(psi));
    Ok(Arc::new(grid_for(psi, density, cfg.t_min)?))
}

pub fn linsolve(cfg: &RunConfig) -> RunResult {
    let dim = cfg.dim()?;
    let text = cfg
        .potential
        .as_deref()
        .ok_or_else(|| CliError::Validation("--potential is required".into()))?;
    let parsed = parse_potential(text, dim)?;
    let psi = parsed.spec;
    let grid = grid_of(&psi, cfg)?;
    psi.check_admissible(&grid)?;
    let sol = solve_linearized(&psi, &grid)?;

    let mut out = Outputs::new("linsolve", cfg);
    out.input(parsed.input);
    out.json("potential.json", &psi);
    out.text("omega.csv", profile_csv(&sol));
    out.stat(
        "solver",
        serde_json::to_value(sol.stats).expect("stats serialize"),
    );
    out.stat("nodes", json!(grid.len()));
    out.stat("boundary_slope", json!(sol.boundary_slope()));
    Ok((out, None))
}

fn stage_rows(psi: &PotentialSpec, phi: Option<&Phi>) -> Vec<serde_json::Value> {
    let Some(sched) = psi.schedule() else {
        return Vec::new();
    };
    sched
        .stages
        .iter()
        .map(|st| {
            let mut row = json!({
                "n": st.n,
                "tx": st.tx,
                "tg": st.tg,
                "ty": st.ty,
                "c_at_x": psi.level(st.tx),
                "c_at_y": psi.level(st.ty),
            });
            if let Some(phi) = phi {
                let ln_ratio = psi.ln_psi(st.ty, Side::Above) - phi.ln_value(st.ty);
                row["ln_psi_over_phi_at_y"] = json!(ln_ratio);
                row["expected_ln_ratio"] = json!(-((st.n + 1) as f64).ln());
            }
            row
        })
        .collect()
}

pub fn construct(cfg: &RunConfig) -> RunResult {
    let dim = cfg.dim()?;
    let mode = cfg
        .mode
        .ok_or_else(|| CliError::Validation("--mode is required".into()))?;
    let stages = cfg.stages.unwrap_or(2);
    let options = OscillationOptions {
        stages,
        ..Default::default()
    };
    let mut input = None;
    let mut phi = None;
    let psi = match mode {
        Mode::Liminf => {
            let p = parse_phi(cfg.phi.as_deref().unwrap_or("inv_r2"), dim)?;
            phi = Some(p);
            build_oscillatory(p, dim, options)?.0
        }
        Mode::Oscillate => {
            let (c1, c2) = match (cfg.c1, cfg.c2) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(CliError::Validation(
                        "oscillate mode needs --c1 and --c2".into(),
                    ))
                }
            };
            let (inner, _) = build_oscillatory(Phi::borderline(dim), dim, options)?;
            blend(c1, c2, inner, dim)?
        }
        Mode::Prescribed => {
            let text = cfg
                .psi
                .as_deref()
                .ok_or_else(|| CliError::Validation("prescribed mode needs --psi".into()))?;
            let parsed = parse_potential(text, dim)?;
            input = parsed.input;
            if dim == 10 {
                eprintln!("note: N = 10 is degenerate here, 2(N-2) = (N-2)^2/4 leaves only the borderline level");
            }
            parsed.spec
        }
    };
    let grid = grid_of(&psi, cfg)?;
    psi.check_admissible(&grid)?;
    psi.check_strictly_decreasing(&grid)?;
    let rec = reconstruct(&psi, &grid)?;
    let fprime = verify_fprime_equals_psi(&rec.table, &psi, &rec.solution)?;
    let audit = &rec.table.audit;

    let (lo, hi) = (0..grid.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        let c = psi.level(grid.t(i));
        (lo.min(c), hi.max(c))
    });
    let report = json!({
        "mode": mode,
        "dim": dim,
        "passed": audit.passed(),
        "failing_flag": audit.failing_flag(),
        "audit": audit,
        "f0": rec.table.samples[0].f.value(),
        "boundary_slope": rec.solution.boundary_slope(),
        "s_max": rec.table.s_max(),
        "table_samples": rec.table.len(),
        "fprime_check": fprime,
        "level_min": lo,
        "level_max": hi,
        "borderline_level": borderline_level(dim),
        "hardy_level": hardy_level(dim),
        "stages": stage_rows(&psi, phi.as_ref()),
    });

    let mut out = Outputs::new("construct", cfg);
    out.input(input);
    out.json("potential.json", &psi);
    out.json("schedule.json", &psi.schedule());
    out.text("f_table.csv", rec.table.to_csv());
    out.text("u_profile.csv", profile_csv(&rec.solution));
    out.json("audit.json", &report);
    out.stat(
        "solver",
        serde_json::to_value(rec.solution.stats).expect("stats serialize"),
    );
    out.stat("nodes", json!(grid.len()));
    let failure = audit.failing_flag().map(|flag| {
        CliError::Audit(format!(
            "condition on f fails: {flag} ({})",
            audit.violation.clone().unwrap_or_default()
        ))
    });
    Ok((out, failure))
}

fn window_options(cfg: &RunConfig) -> WindowOptions {
    let d = WindowOptions::default();
    WindowOptions {
        width: cfg.window_width.unwrap_or(d.width),
        step: cfg.window_step.unwrap_or(d.step),
        top: d.top,
        tol: cfg.window_tol.unwrap_or(d.tol),
    }
}

/// Piecewise linear `c*(t)`, constant beyond the sampled range.
fn interpolant(samples: &[(f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    move |t| {
        let k = samples.partition_point(|x| x.0 <= t);
        if k == 0 {
            samples[0].1
        } else if k == samples.len() {
            samples[k - 1].1
        } else {
            let (a, b) = (samples[k - 1], samples[k]);
            a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
        }
    }
}

fn summary(
    rep: &VerificationReport,
    source: &str,
    stability: &radial_extremal::verification::StabilityReport,
) -> String {
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    format!(
        "case {} N={} lambda*={} ({source})\n\
         lambda1 = {}\n\
         upper: max c* = {} at t = {}, margin {} {}\n\
         lower: min over {} windows of sup c* - 2(N-2) = {} {}\n\
         stability: min Rayleigh quotient {} with {} negative modes {}\n",
        rep.case,
        rep.dim,
        fmt_f64(rep.lambda_star),
        fmt_f64(rep.lambda1),
        fmt_f64(rep.pointwise_max),
        fmt_f64(rep.pointwise_max_t),
        fmt_f64(rep.upper_margin),
        mark(rep.upper_pass),
        rep.windows.len(),
        fmt_f64(rep.lower_margin),
        mark(rep.lower_pass),
        fmt_f64(stability.min_rayleigh),
        stability.negative_modes,
        mark(stability.passed()),
    )
}

pub fn verify(cfg: &RunConfig) -> RunResult {
    let window = window_options(cfg);
    let mut out = Outputs::new("verify", cfg);
    let (case, dim, lambda_star, source, cstar, grid) = match (cfg.case.as_deref(), &cfg.case_file)
    {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(
                "give either --case or --case-file".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Validation(
                "--case or --case-file is required".into(),
            ))
        }
        (Some("exp10"), None) => {
            let dim = 10;
            let f = AnalyticNonlinearity::Exp;
            let opts = BranchOptions {
                shoot: ShootOptions {
                    rtol: cfg.rtol.unwrap_or(ShootOptions::default().rtol),
                    ..Default::default()
                },
                ..Default::default()
            };
            let m_grid: Vec<f64> = (1..=160).map(|k| 0.25 * k as f64).collect();
            let d = minimal_branch(&f, dim, &m_grid, &opts)?;
            out.text("branch.csv", d.to_csv());
            out.stat("branch_monotone", json!(d.monotone_flag));
            out.stat("branch_m_at_estimate", json!(d.m_at_estimate));
            // u* = −2 log r, so λ* r² f'(u*) = λ*
            let grid = Arc::new(LogRadialGrid::new(
                dim,
                cfg.t_min.unwrap_or(-40.0),
                cfg.density.unwrap_or(20.0),
                &[],
            )?);
            let lam = d.lambda_star_estimate;
            let cstar: Vec<(f64, f64)> = grid.nodes().iter().map(|&t| (t, lam)).collect();
            (
                "exp10".to_string(),
                dim,
                lam,
                "minimal branch, u* = -2 log r",
                cstar,
                grid,
            )
        }
        (Some("torsion"), None) => {
            let f = AnalyticNonlinearity::Constant { value: 10.0 };
            let audit = f.audit(10)?;
            let flag = audit.failing_flag().unwrap_or("none");
            return Err(CliError::Audit(format!(
                "torsion case f = 10 rejected before verification: {flag} fails"
            )));
        }
        (Some(name @ ("hardy12" | "blend10")), None) => {
            let psi = if name == "hardy12" {
                PotentialSpec::hardy(12)?
            } else {
                let (inner, _) =
                    build_oscillatory(Phi::borderline(10), 10, OscillationOptions::default())?;
                blend(8.0, 16.0, inner, 10)?
            };
            let t_min = cfg
                .t_min
                .or(if name == "hardy12" { Some(-40.0) } else { None });
            let density = cfg.density.unwrap_or_else(|| default_density(&psi));
            let grid = Arc::new(grid_for(&psi, density, t_min)?);
            let (cstar, dim) = table_cstar(&psi, &grid)?;
            (name.to_string(), dim, 1.0, "construction", cstar, grid)
        }
        (Some(other), None) => return Err(CliError::Validation(format!("unknown case '{other}'"))),
        (None, Some(path)) => {
            let parsed = load_spec(path)?;
            if let Some(d) = cfg.dim.filter(|d| *d != parsed.spec.dim) {
                return Err(CliError::Validation(format!(
                    "case file has N = {}, run asks N = {d}",
                    parsed.spec.dim
                )));
            }
            out.input(parsed.input);
            let psi = parsed.spec;
            let grid = grid_of(&psi, cfg)?;
            let (cstar, dim) = table_cstar(&psi, &grid)?;
            (
                format!("file:{}", psi.kind()),
                dim,
                1.0,
                "construction",
                cstar,
                grid,
            )
        }
    };

    let rep = bound_check(&case, &cstar, lambda_star, dim, window)?;
    let stability = stability_quadratic_form(&interpolant(&cstar), &grid)?;
    let eigen = first_eigenvalue(dim)?;
    out.json(
        "report.json",
        &json!({
            "report": rep,
            "lambda_star_source": source,
            "stability": stability,
            "eigenvalue": { "dim": eigen.dim, "lambda1": eigen.lambda1 },
            "passed": rep.passed(),
        }),
    );
    out.text("windows.csv", rep.windows_csv());
    out.text(
        "cstar.csv",
        csv_string(
            &["t", "r", "cstar"],
            cstar
                .iter()
                .map(|&(t, c)| vec![fmt_f64(t), radius(t), fmt_f64(c)]),
        ),
    );
    let text = summary(&rep, source, &stability);
    eprint!("{text}");
    out.text("summary.txt", text);

    let failure = if rep.passed() {
        None
    } else {
        let mut parts = Vec::new();
        if !rep.upper_pass {
            parts.push(format!("upper margin {}", fmt_f64(rep.upper_margin)));
        }
        if !rep.lower_pass {
            parts.push(format!("lower margin {}", fmt_f64(rep.lower_margin)));
        }
        Some(CliError::Bound(parts.join(", ")))
    };
    Ok((out, failure))
}

/// `c* = r² f'(u*)` with `λ* = 1` from the reconstruction of `psi`.
fn table_cstar(
    psi: &PotentialSpec,
    grid: &Arc<LogRadialGrid>,
) -> Result<(Vec<(f64, f64)>, usize), CliError> {
    psi.check_admissible(grid)?;
    let rec = reconstruct(psi, grid)?;
    if let Some(flag) = rec.table.audit.failing_flag() {
        return Err(CliError::Audit(format!(
            "reconstructed f fails {flag}; not verifiable"
        )));
    }
    Ok((cstar_from_table(&rec.table, 1.0)?, psi.dim))
}

pub fn sweep(cfg: &RunConfig) -> RunResult {
    let dim = cfg.dim.unwrap_or(10);
    if dim < 3 {
        return Err(CliError::Validation(format!(
            "dimension must be >= 3, got {dim}"
        )));
    }
    let pairs = cfg.pairs.unwrap_or(100);
    let seed = cfg.seed.unwrap_or(0x5eed);
    let t_min = cfg.t_min.unwrap_or(-30.0);
    let density = cfg.density.unwrap_or(8.0);
    let hardy = hardy_level(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(pairs);
    let mut violations = 0;
    for k in 0..pairs {
        let pieces = rng.gen_range(1..=6);
        let mut edges: Vec<f64> = (0..pieces - 1)
            .map(|_| rng.gen_range(t_min + 1.0..-0.1))
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let lo: Vec<f64> = (0..=edges.len())
            .map(|_| rng.gen_range(0.0..=hardy))
            .collect();
        let hi: Vec<f64> = lo.iter().map(|&c| rng.gen_range(c..=hardy)).collect();
        let p1 = PotentialSpec::steps(dim, edges.clone(), lo)?;
        let p2 = PotentialSpec::steps(dim, edges, hi)?;
        let mut knots = p1.knots();
        knots.extend(p2.knots());
        let grid = Arc::new(LogRadialGrid::new(dim, t_min, density, &knots)?);
        let rep = compare_potentials(&p1, &p2, &grid)?;
        if rep.max_excess > 1e-8 {
            violations += 1;
        }
        rows.push(vec![
            k.to_string(),
            p1.knots().len().to_string(),
            fmt_f64(rep.max_excess),
        ]);
    }
    let mut out = Outputs::new("sweep", cfg);
    out.text(
        "sweep.csv",
        csv_string(&["pair", "edges", "max_excess"], rows),
    );
    out.stat("violations", json!(violations));
    out.stat("pairs", json!(pairs));
    eprintln!("comparison sweep: {pairs} pairs, {violations} violations");
    let failure = (violations > 0)
        .then(|| CliError::Bound(format!("{violations} of {pairs} pairs violate ω1 <= ω2")));
    Ok((out, failure))
}
