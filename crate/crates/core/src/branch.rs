//! Minimal branch of `−Δu = λ f(u)` on the unit ball by shooting.
//!
//! For `−Δv = f(v)`, `v(0) = m`, `v'(0) = 0` with first zero `R`, the
//! rescaled `u(x) = v(R x)` solves the Dirichlet problem with `λ = R²`.
//! Integration runs in `τ = log r` on `w = m − v`,
//!
//! `w_ττ + (N−2) w_τ = e^{2τ} f(m − w)`,
//!
//! which keeps full relative precision near the center where `w ~ r²`.

use std::cell::RefCell;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::format::{csv_string, fmt_f64};
use crate::ode::{dopri_step, integrate, Tolerances};
use crate::radial_core::stencil::{fornberg_weights, stencil_window};
use crate::radial_core::RadialProfile;
use crate::reconstruction::{
    check_condition_one, ConditionAudit, NonlinearityTable, Provenance, Reconstruction,
};

/// A nonlinearity `f: [0, ∞) → (0, ∞)` usable by the shooting solver.
pub trait NonlinearFn {
    fn value(&self, s: f64) -> Result<f64>;
    fn derivative(&self, s: f64) -> Result<f64>;
    /// Positivity, monotonicity, convexity and growth audit.
    fn audit(&self, dim: usize) -> Result<ConditionAudit>;
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticNonlinearity {
    /// `e^s`
    Exp,
    /// `f ≡ value`
    Constant { value: f64 },
    /// `scale · e^{rate·s}`
    ScaledExp { scale: f64, rate: f64 },
    /// `(1 + s)^exponent`
    OnePlusPower { exponent: f64 },
}

/// Range sampled when auditing an analytic nonlinearity.
const AUDIT_S_MAX: f64 = 64.0;
const AUDIT_SAMPLES: usize = 256;

impl AnalyticNonlinearity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AnalyticNonlinearity::Exp => Ok(()),
            AnalyticNonlinearity::Constant { value } => {
                ensure(value.is_finite() && value > 0.0, || {
                    format!("constant f must be positive, got {value}")
                })
            }
            AnalyticNonlinearity::ScaledExp { scale, rate } => {
                ensure(
                    scale.is_finite() && scale > 0.0 && rate.is_finite() && rate >= 0.0,
                    || {
                        format!("scaled exponential needs scale > 0 and rate >= 0, got ({scale}, {rate})")
                    },
                )
            }
            AnalyticNonlinearity::OnePlusPower { exponent } => {
                ensure(exponent.is_finite() && exponent >= 0.0, || {
                    format!("exponent must be >= 0, got {exponent}")
                })
            }
        }
    }

    /// `(f, f', f'')` at `s`.
    pub fn jet(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            AnalyticNonlinearity::Exp => {
                let e = s.exp();
                (e, e, e)
            }
            AnalyticNonlinearity::Constant { value } => (value, 0.0, 0.0),
            AnalyticNonlinearity::ScaledExp { scale, rate } => {
                let e = scale * (rate * s).exp();
                (e, rate * e, rate * rate * e)
            }
            AnalyticNonlinearity::OnePlusPower { exponent: p } => {
                let b = 1.0 + s;
                (
                    b.powf(p),
                    p * b.powf(p - 1.0),
                    p * (p - 1.0) * b.powf(p - 2.0),
                )
            }
        }
    }

    /// Samples on `[0, 64]` for auditing and tabulation.
    pub fn to_table(&self, dim: usize) -> Result<NonlinearityTable> {
        self.validate()?;
        let s: Vec<f64> = (0..=AUDIT_SAMPLES)
            .map(|j| AUDIT_S_MAX * j as f64 / AUDIT_SAMPLES as f64)
            .collect();
        NonlinearityTable::from_analytic(dim, &self.describe(), &s, |x| self.jet(x))
    }
}

impl NonlinearFn for AnalyticNonlinearity {
    fn value(&self, s: f64) -> Result<f64> {
        Ok(self.jet(s).0)
    }

    fn derivative(&self, s: f64) -> Result<f64> {
        Ok(self.jet(s).1)
    }

    fn audit(&self, dim: usize) -> Result<ConditionAudit> {
        Ok(self.to_table(dim)?.audit)
    }

    fn describe(&self) -> String {
        match *self {
            AnalyticNonlinearity::Exp => "exp".into(),
            AnalyticNonlinearity::Constant { value } => format!("constant:{value}"),
            AnalyticNonlinearity::ScaledExp { scale, rate } => format!("scaled_exp:{scale},{rate}"),
            AnalyticNonlinearity::OnePlusPower { exponent } => format!("one_plus_power:{exponent}"),
        }
    }
}

/// Negative arguments (only met inside the step that crosses zero) are
/// clamped to `f(0)`.
impl NonlinearFn for NonlinearityTable {
    fn value(&self, s: f64) -> Result<f64> {
        NonlinearityTable::value(self, s.max(0.0))
    }

    fn derivative(&self, s: f64) -> Result<f64> {
        NonlinearityTable::derivative(self, s.max(0.0))
    }

    fn audit(&self, _dim: usize) -> Result<ConditionAudit> {
        Ok(check_condition_one(self, self.audit.options))
    }

    fn describe(&self) -> String {
        match &self.provenance {
            Provenance::Analytic { name } => format!("table:{name}"),
            Provenance::Reconstructed { potential, .. } => {
                format!("reconstructed:{}", potential.kind())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    /// Radius beyond which the search for the first zero stops.
    pub r_cap: f64,
    pub rtol: f64,
    /// Start radius in units of the core length `√(2Nm/f(m))`.
    pub start_scale: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            r_cap: 1e6,
            rtol: 1e-11,
            start_scale: 1e-6,
        }
    }
}

impl ShootOptions {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: 1e-300,
            max_steps: 1_000_000,
        }
    }
}

/// One shot: accepted steps of `w = m − v` in `τ = log r`, ending at the
/// first zero of `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub m: f64,
    pub radius: f64,
    pub lambda: f64,
    pub tau: Vec<f64>,
    pub w: Vec<f64>,
    pub w_tau: Vec<f64>,
}

impl Shot {
    pub fn v(&self, i: usize) -> f64 {
        self.m - self.w[i]
    }

    /// `(log ρ, u(ρ))` of the rescaled solution on the unit ball.
    pub fn unit_ball_profile(&self) -> Vec<(f64, f64)> {
        let ln_r = self.radius.ln();
        (0..self.tau.len())
            .map(|i| (self.tau[i] - ln_r, self.v(i)))
            .collect()
    }
}

fn rhs<'a>(
    f: &'a dyn NonlinearFn,
    m: f64,
    dim: usize,
    err: &'a RefCell<Option<Error>>,
) -> impl FnMut(f64, &[f64; 2]) -> [f64; 2] + 'a {
    let nm2 = dim as f64 - 2.0;
    move |tau, y| {
        let fv = match f.value(m - y[0]) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        [y[1], -nm2 * y[1] + (2.0 * tau).exp() * fv]
    }
}

/// Shoots from `v(0) = m` to the first zero of `v`.
pub fn shoot_ivp(f: &dyn NonlinearFn, m: f64, dim: usize, options: &ShootOptions) -> Result<Shot> {
    ensure(m.is_finite() && m > 0.0, || {
        format!("interior value must be positive, got {m}")
    })?;
    ensure(dim >= 1, || "dimension must be >= 1".to_string())?;
    let nn = dim as f64;
    let fm = f.value(m)?;
    ensure(fm.is_finite() && fm > 0.0, || {
        format!("f(m) must be positive, got {fm} at m = {m}")
    })?;
    let r0 = options.start_scale * (2.0 * nn * m / fm).sqrt().min(1.0);
    let tau0 = r0.ln();
    let tau_cap = options.r_cap.ln();
    ensure(tau_cap > tau0, || {
        format!(
            "radius cap {} is below the start radius {r0}",
            options.r_cap
        )
    })?;
    // v ≈ m − f(m) r²/(2N)
    let w0 = fm * r0 * r0 / (2.0 * nn);
    let err = RefCell::new(None);
    let mut f_rhs = rhs(f, m, dim, &err);

    let mut shot = Shot {
        m,
        radius: 0.0,
        lambda: 0.0,
        tau: vec![tau0],
        w: vec![w0],
        w_tau: vec![2.0 * w0],
    };
    let mut crossing = None;
    let mut decreasing = true;
    let mut h = 0.0;
    let tol = options.tolerances();
    let res = integrate(
        &mut f_rhs,
        tau0,
        [w0, 2.0 * w0],
        tau_cap,
        &mut h,
        &tol,
        |tp, yp, t, y| {
            if y[0] >= m {
                crossing = Some((tp, *yp, t));
                return ControlFlow::Break(());
            }
            if !(y[1] > 0.0) {
                decreasing = false;
                return ControlFlow::Break(());
            }
            shot.tau.push(t);
            shot.w.push(y[0]);
            shot.w_tau.push(y[1]);
            ControlFlow::Continue(())
        },
    );
    // rejected trial steps may probe f out of range; only a failed
    // integration reports it
    if let Err(e) = res {
        return Err(err.borrow_mut().take().unwrap_or(e));
    }
    err.borrow_mut().take();
    if !decreasing {
        return Err(Error::Solver(format!(
            "v is not decreasing before its first zero (m = {m})"
        )));
    }
    let Some((tp, yp, t)) = crossing else {
        return Err(Error::NoZero { cap: options.r_cap });
    };

    // regula falsi (Illinois) on the step length from the last state below m
    let g = |hs: f64, f_rhs: &mut dyn FnMut(f64, &[f64; 2]) -> [f64; 2]| {
        let (y, _) = dopri_step(&mut |a, b: &[f64; 2]| f_rhs(a, b), tp, &yp, hs);
        (y[0] - m, y)
    };
    let (mut a, mut b) = (0.0, t - tp);
    let (mut ga, mut gb) = (yp[0] - m, g(b, &mut f_rhs).0);
    let mut best = (b, g(b, &mut f_rhs).1);
    let mut side = 0i8;
    for _ in 0..200 {
        let c = if gb != ga {
            b - gb * (b - a) / (gb - ga)
        } else {
            0.5 * (a + b)
        };
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let (gc, yc) = g(c, &mut f_rhs);
        if !gc.is_finite() {
            break;
        }
        best = (c, yc);
        if gc.abs() <= 1e-13 * m || (b - a) <= 4.0 * f64::EPSILON * tp.abs().max(1.0) {
            break;
        }
        if (gc < 0.0) == (ga < 0.0) {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    if let Some(e) = err.borrow_mut().take() {
        if !best.1[0].is_finite() {
            return Err(e);
        }
    }
    let tau_r = tp + best.0;
    if (best.1[0] - m).abs() > 1e-10 * m {
        return Err(Error::Solver(format!(
            "root polish stalled at |v(R)| = {} (m = {m})",
            (best.1[0] - m).abs()
        )));
    }
    shot.tau.push(tau_r);
    shot.w.push(best.1[0]);
    shot.w_tau.push(best.1[1]);
    shot.radius = tau_r.exp();
    shot.lambda = (2.0 * tau_r).exp();
    Ok(shot)
}

/// Largest relative residual of `−Δu − λ f(u)` for the rescaled shot,
/// measured on a uniform `τ` grid with 7-point differences.
pub fn scaling_residual(
    f: &dyn NonlinearFn,
    shot: &Shot,
    dim: usize,
    per_unit: f64,
    options: &ShootOptions,
) -> Result<f64> {
    let nm2 = dim as f64 - 2.0;
    let (t0, t1) = (shot.tau[0], *shot.tau.last().expect("non-empty"));
    let n = ((t1 - t0) * per_unit).ceil().max(8.0) as usize;
    let taus: Vec<f64> = (0..=n)
        .map(|k| t0 + (t1 - t0) * k as f64 / n as f64)
        .collect();
    let err = RefCell::new(None);
    let mut f_rhs = rhs(f, shot.m, dim, &err);
    let tol = options.tolerances();
    let mut ws = Vec::with_capacity(n + 1);
    let mut y = [shot.w[0], shot.w_tau[0]];
    let mut h = 0.0;
    ws.push(y[0]);
    for k in 0..n {
        match integrate(
            &mut f_rhs,
            taus[k],
            y,
            taus[k + 1],
            &mut h,
            &tol,
            |_, _, _, _| ControlFlow::Continue(()),
        ) {
            Ok((_, yk)) => y = yk,
            Err(e) => return Err(err.borrow_mut().take().unwrap_or(e)),
        }
        ws.push(y[0]);
    }
    let mut worst = 0.0f64;
    for i in 0..=n {
        let (a, b) = stencil_window(i, 0, n, 7);
        let wts = fornberg_weights(taus[i], &taus[a..=b], 2);
        let d1: f64 = (a..=b).map(|k| wts[1][k - a] * ws[k]).sum();
        let d2: f64 = (a..=b).map(|k| wts[2][k - a] * ws[k]).sum();
        let src = (2.0 * taus[i]).exp() * f.value(shot.m - ws[i])?;
        worst = worst.max(((d2 + nm2 * d1) - src).abs() / src);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub m: f64,
    pub radius: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions {
    pub shoot: ShootOptions,
    /// Golden-section refinement around an interior maximum of `λ(m)`.
    pub refine: bool,
    pub refine_tol: f64,
    /// Accept nonlinearities that fail only the superlinearity audit.
    pub waive_superlinearity: bool,
    /// Relative decrease of `λ` tolerated as noise by the monotonicity flag.
    pub monotone_tol: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            shoot: ShootOptions::default(),
            refine: true,
            refine_tol: 1e-4,
            waive_superlinearity: false,
            monotone_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagram {
    pub dim: usize,
    pub nonlinearity: String,
    pub points: Vec<BranchPoint>,
    pub lambda_star_estimate: f64,
    pub m_at_estimate: f64,
    pub monotone_flag: bool,
    /// No finite `λ*`: growth audit failed (waived) and `λ` still rises at
    /// the end of the sampled range.
    pub unbounded: bool,
    pub refinements: usize,
}

impl BranchDiagram {
    /// `m, R, lambda`.
    pub fn to_csv(&self) -> String {
        csv_string(
            &["m", "R", "lambda"],
            self.points
                .iter()
                .map(|p| vec![fmt_f64(p.m), fmt_f64(p.radius), fmt_f64(p.lambda)]),
        )
    }

    /// Indices of interior local maxima of `λ(m)` above the noise level.
    pub fn local_maxima(&self, rel_tol: f64) -> Vec<usize> {
        let p = &self.points;
        (1..p.len().saturating_sub(1))
            .filter(|&j| {
                let l = p[j].lambda;
                l > p[j - 1].lambda * (1.0 + rel_tol) && l > p[j + 1].lambda * (1.0 + rel_tol)
            })
            .collect()
    }
}

fn point(shot: &Shot) -> BranchPoint {
    BranchPoint {
        m: shot.m,
        radius: shot.radius,
        lambda: shot.lambda,
    }
}

/// Samples `λ(m)` on `m_grid` and estimates `λ*`.
pub fn minimal_branch(
    f: &dyn NonlinearFn,
    dim: usize,
    m_grid: &[f64],
    options: &BranchOptions,
) -> Result<BranchDiagram> {
    ensure(!m_grid.is_empty(), || "empty m grid".to_string())?;
    ensure(m_grid.iter().all(|m| m.is_finite() && *m > 0.0), || {
        "m values must be positive".to_string()
    })?;
    ensure(m_grid.windows(2).all(|w| w[1] > w[0]), || {
        "m grid must be strictly increasing".to_string()
    })?;
    let audit = f.audit(dim)?;
    if !(audit.positive_at_zero && audit.nondecreasing && audit.convex) {
        return Err(Error::InvalidInput(format!(
            "f fails the {} audit",
            audit.failing_flag().unwrap_or("growth")
        )));
    }
    if !audit.superlinear && !options.waive_superlinearity {
        return Err(Error::InvalidInput(
            "f fails the superlinear audit (waive to sample anyway)".into(),
        ));
    }

    let mut points = m_grid
        .iter()
        .map(|&m| shoot_ivp(f, m, dim, &options.shoot).map(|s| point(&s)))
        .collect::<Result<Vec<_>>>()?;
    let argmax = |pts: &[BranchPoint]| {
        pts.iter()
            .enumerate()
            .fold(0, |k, (j, p)| if p.lambda > pts[k].lambda { j } else { k })
    };
    let k = argmax(&points);
    let mut refinements = 0;
    if options.refine && k > 0 && k + 1 < points.len() {
        let extra = golden_refine(f, dim, &points[k - 1..=k + 1], options)?;
        refinements = extra.len();
        points.extend(extra);
        points.sort_by(|a, b| a.m.partial_cmp(&b.m).expect("finite"));
        points.dedup_by(|a, b| a.m == b.m);
    }
    let k = argmax(&points);
    let monotone_flag = points
        .windows(2)
        .all(|w| w[1].lambda >= w[0].lambda * (1.0 - options.monotone_tol));
    Ok(BranchDiagram {
        dim,
        nonlinearity: f.describe(),
        lambda_star_estimate: points[k].lambda,
        m_at_estimate: points[k].m,
        monotone_flag,
        unbounded: !audit.superlinear && k + 1 == points.len(),
        points,
        refinements,
    })
}

/// Golden-section search for the maximum of `λ` inside `[m_a, m_b]` given
/// the bracketing triple `a < c < b` with `λ(c)` largest.
fn golden_refine(
    f: &dyn NonlinearFn,
    dim: usize,
    triple: &[BranchPoint],
    options: &BranchOptions,
) -> Result<Vec<BranchPoint>> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let shoot = |m: f64| shoot_ivp(f, m, dim, &options.shoot).map(|s| point(&s));
    let (mut a, mut b) = (triple[0], triple[2]);
    let mut c = shoot(b.m - inv_phi * (b.m - a.m))?;
    let mut d = shoot(a.m + inv_phi * (b.m - a.m))?;
    let mut out = vec![c, d];
    for _ in 0..200 {
        let best = c.lambda.max(d.lambda).max(triple[1].lambda);
        if (best - a.lambda.max(b.lambda)) <= options.refine_tol * best || b.m - a.m <= 1e-12 * b.m
        {
            break;
        }
        if c.lambda >= d.lambda {
            b = d;
            d = c;
            c = shoot(b.m - inv_phi * (b.m - a.m))?;
            out.push(c);
        } else {
            a = c;
            c = d;
            d = shoot(a.m + inv_phi * (b.m - a.m))?;
            out.push(d);
        }
    }
    Ok(out)
}

/// The minimal solution for `lambda`: the smallest `m` on the sampled branch
/// with `λ(m) = lambda`, refined by bisection.
pub fn minimal_solution_for(
    f: &dyn NonlinearFn,
    dim: usize,
    lambda: f64,
    diagram: &BranchDiagram,
    options: &ShootOptions,
) -> Result<Shot> {
    ensure(lambda > 0.0 && lambda.is_finite(), || {
        format!("λ must be positive, got {lambda}")
    })?;
    let Some(j) = diagram.points.iter().position(|p| p.lambda >= lambda) else {
        return Err(Error::InvalidInput(format!(
            "λ = {lambda} exceeds the sampled branch (estimate {})",
            diagram.lambda_star_estimate
        )));
    };
    let mut hi = diagram.points[j].m;
    let mut lo = if j == 0 { 0.0 } else { diagram.points[j - 1].m };
    let mut shot = shoot_ivp(f, hi, dim, options)?;
    for _ in 0..200 {
        if (shot.lambda - lambda).abs() <= 1e-12 * lambda || hi - lo <= 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = shoot_ivp(f, mid, dim, options)?;
        if s.lambda >= lambda {
            hi = mid;
        } else {
            lo = mid;
        }
        shot = s;
    }
    if shot.lambda < lambda {
        shot = shoot_ivp(f, hi, dim, options)?;
    }
    Ok(shot)
}

/// The extremal solution for a reconstructed `f`: the construction's own
/// `u`, with `λ* = 1`.
pub fn extremal_profile(rec: &Reconstruction) -> Result<RadialProfile> {
    match &rec.table.provenance {
        Provenance::Reconstructed {
            potential: _,
            t_min,
            nodes,
        } => {
            let g = rec.solution.u.grid();
            if *t_min != g.t_min() || *nodes != g.len() {
                return Err(Error::InvalidInput(
                    "table and solution come from different grids".into(),
                ));
            }
            Ok(rec.solution.u.clone())
        }
        Provenance::Analytic { name } => Err(Error::InvalidInput(format!(
            "table '{name}' carries no generating potential"
        ))),
    }
}
