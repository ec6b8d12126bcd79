//! From a solved `ω` to the nonlinearity `f = (-Δu) ∘ u⁻¹`, `u = ∫_r^1 ω`.
//!
//! With `W = ω` as a function of `t`:
//!
//! * `f(u(r)) = (W_t + (N-1) W) e^{-t}`,
//! * `f'(u(r)) = Ψ(r) = c e^{-2t}`,
//! * `f''(u(r)) = -Ψ'(r)/ω(r) = (2c - c_t) e^{-3t} / W`.
//!
//! Values are stored as [`LogScalar`]s because the deep stages of the
//! oscillatory potentials push `f` and its derivatives far beyond `f64`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{csv_string, fmt_f64, fmt_log, LogScalar};
use crate::linear_ode::{solve_linearized, LinearSolution};
use crate::potentials::{PotentialSpec, Side};
use crate::radial_core::stencil::{fornberg_weights, stencil_window};
use crate::radial_core::LogRadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableSample {
    pub s: f64,
    pub f: LogScalar,
    pub fp: LogScalar,
    pub fpp: LogScalar,
    /// Generating log-radius, absent for analytic tables.
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic {
        name: String,
    },
    Reconstructed {
        potential: Box<PotentialSpec>,
        t_min: f64,
        nodes: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub rel_tol: f64,
    /// Superlinearity asks `f'(s_max) > multiple · f(s_max)/s_max`.
    pub superlinear_multiple: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            rel_tol: 1e-8,
            superlinear_multiple: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAudit {
    pub positive_at_zero: bool,
    pub nondecreasing: bool,
    pub convex: bool,
    pub superlinear: bool,
    /// `s_max f'(s_max) / f(s_max)`.
    pub growth_ratio: f64,
    pub first_violation: Option<usize>,
    pub violation: Option<String>,
    pub options: AuditOptions,
}

impl ConditionAudit {
    pub fn passed(&self) -> bool {
        self.positive_at_zero && self.nondecreasing && self.convex && self.superlinear
    }

    /// Name of the first failing condition.
    pub fn failing_flag(&self) -> Option<&'static str> {
        [
            (self.positive_at_zero, "positive_at_zero"),
            (self.nondecreasing, "nondecreasing"),
            (self.convex, "convex"),
            (self.superlinear, "superlinear"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

/// Sampled `f` with `f'` and `f''` on `[0, s_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityTable {
    pub dim: usize,
    pub samples: Vec<TableSample>,
    pub provenance: Provenance,
    /// Evaluation beyond `s_max` continues the last exponential rate.
    pub extrapolate: bool,
    pub audit: ConditionAudit,
}

impl NonlinearityTable {
    /// Builds a table from samples, checking the layout and running the audit.
    pub fn new(dim: usize, samples: Vec<TableSample>, provenance: Provenance) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(
                "a table needs at least two samples".into(),
            ));
        }
        if samples[0].s != 0.0 {
            return Err(Error::InvalidInput(format!(
                "table must start at s = 0, got {}",
                samples[0].s
            )));
        }
        if let Some(j) = samples
            .windows(2)
            .position(|w| !(w[1].s > w[0].s) || !w[1].s.is_finite())
        {
            return Err(Error::Reconstruction(format!(
                "s values not strictly increasing at sample {} (u not injective)",
                j + 1
            )));
        }
        let mut table = NonlinearityTable {
            dim,
            samples,
            provenance,
            extrapolate: false,
            audit: ConditionAudit {
                positive_at_zero: false,
                nondecreasing: false,
                convex: false,
                superlinear: false,
                growth_ratio: 0.0,
                first_violation: None,
                violation: None,
                options: AuditOptions::default(),
            },
        };
        table.audit = check_condition_one(&table, AuditOptions::default());
        Ok(table)
    }

    /// Samples an analytic `f` with derivatives on `s_j`.
    pub fn from_analytic(
        dim: usize,
        name: &str,
        s: &[f64],
        f: impl Fn(f64) -> (f64, f64, f64),
    ) -> Result<Self> {
        let samples = s
            .iter()
            .map(|&x| {
                let (v, d1, d2) = f(x);
                TableSample {
                    s: x,
                    f: LogScalar::from_f64(v),
                    fp: LogScalar::from_f64(d1),
                    fpp: LogScalar::from_f64(d2),
                    t: None,
                }
            })
            .collect();
        Self::new(dim, samples, Provenance::Analytic { name: name.into() })
    }

    pub fn with_extrapolation(mut self, on: bool) -> Self {
        self.extrapolate = on;
        self
    }

    pub fn s_max(&self) -> f64 {
        self.samples.last().expect("non-empty").s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `ln f(s)`: cubic Hermite in `s` on `ln f` with slopes `f'/f`.
    pub fn ln_value(&self, s: f64) -> Result<f64> {
        Ok(self.ln_value_and_slope(s)?.0)
    }

    /// `ln f(s)` and `f'(s)/f(s)` of the interpolant.
    pub fn ln_value_and_slope(&self, s: f64) -> Result<(f64, f64)> {
        let smp = &self.samples;
        let last = smp.last().expect("non-empty");
        if s > last.s {
            if !self.extrapolate {
                return Err(Error::OutsideTable { s, s_max: last.s });
            }
            let rate = last.fp.ratio(&last.f);
            return Ok((last.f.ln() + rate * (s - last.s), rate));
        }
        if s < 0.0 {
            return Err(Error::InvalidInput(format!(
                "f is defined for s >= 0, got {s}"
            )));
        }
        let j = smp.partition_point(|x| x.s <= s).clamp(1, smp.len() - 1) - 1;
        let (a, b) = (&smp[j], &smp[j + 1]);
        if !(a.f.is_positive() && b.f.is_positive()) {
            let w = (s - a.s) / (b.s - a.s);
            let v = (1.0 - w) * a.f.value() + w * b.f.value();
            return Ok((v.ln(), (b.f.value() - a.f.value()) / (b.s - a.s) / v));
        }
        let (y0, y1) = (a.f.ln(), b.f.ln());
        let (d0, d1) = (a.fp.ratio(&a.f), b.fp.ratio(&b.f));
        Ok((
            crate::radial_core::hermite_cubic(a.s, b.s, y0, y1, d0, d1, s),
            crate::radial_core::hermite_cubic_slope(a.s, b.s, y0, y1, d0, d1, s),
        ))
    }

    /// `f'(s)` of the interpolant.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        let (l, d) = self.ln_value_and_slope(s)?;
        Ok(d * l.exp())
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        Ok(self.ln_value(s)?.exp())
    }

    /// `s, f, fp, fpp, t` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        csv_string(
            &["s", "f", "fp", "fpp", "t"],
            self.samples.iter().map(|x| {
                vec![
                    fmt_f64(x.s),
                    fmt_log(&x.f),
                    fmt_log(&x.fp),
                    fmt_log(&x.fpp),
                    x.t.map(fmt_f64).unwrap_or_default(),
                ]
            }),
        )
    }
}

/// Audits `f(0) > 0`, monotonicity, convexity and superlinear growth.
///
/// Superlinearity is a finite-range marker: `f'(s_max)` must exceed
/// `superlinear_multiple · f(s_max)/s_max`, and `f(s)/s` must be
/// nondecreasing over `[s_max/10, s_max]`.
pub fn check_condition_one(table: &NonlinearityTable, options: AuditOptions) -> ConditionAudit {
    let smp = &table.samples;
    let tol = options.rel_tol;
    let mut first: Option<(usize, String)> = None;
    let mut note = |j: usize, msg: String| {
        if first.is_none() {
            first = Some((j, msg));
        }
    };

    let positive_at_zero = smp[0].f.is_positive();
    if !positive_at_zero {
        note(0, "f(0) <= 0".into());
    }

    let mut nondecreasing = true;
    for (j, x) in smp.iter().enumerate() {
        let bad_slope = x.fp.is_negative() && !(x.fp.ln() <= x.f.ln() + tol.ln());
        let bad_step = j > 0 && smp[j - 1].f.is_positive() && x.f.ratio(&smp[j - 1].f) < 1.0 - tol;
        if bad_slope || bad_step || !x.f.is_positive() {
            nondecreasing = false;
            note(j, format!("f decreases or vanishes at s = {}", x.s));
            break;
        }
    }

    let mut convex = true;
    for (j, x) in smp.iter().enumerate() {
        let scale = x.fp.ln().max(x.f.ln());
        let bad_curv = x.fpp.is_negative() && x.fpp.ln() > scale + tol.ln();
        let bad_slope = j > 0 && smp[j - 1].fp.sign > 0 && x.fp.ratio(&smp[j - 1].fp) < 1.0 - tol;
        if bad_curv || bad_slope {
            convex = false;
            note(j, format!("f' decreases at s = {}", x.s));
            break;
        }
    }

    let last = smp.last().expect("non-empty");
    let s_max = last.s;
    let growth_ratio = if last.f.is_positive() {
        s_max * last.fp.ratio(&last.f)
    } else {
        0.0
    };
    let mut superlinear = growth_ratio > options.superlinear_multiple;
    if !superlinear {
        note(smp.len() - 1, format!("s f'/f = {growth_ratio} at s_max"));
    } else {
        let lo = s_max / 10.0;
        let mut prev: Option<f64> = None;
        for (j, x) in smp
            .iter()
            .enumerate()
            .filter(|(_, x)| x.s >= lo && x.s > 0.0)
        {
            let q = x.f.ln() - x.s.ln();
            if let Some(p) = prev {
                if q < p + (1.0 - tol).ln() {
                    superlinear = false;
                    note(j, format!("f(s)/s decreases at s = {}", x.s));
                    break;
                }
            }
            prev = Some(q);
        }
    }

    let (first_violation, violation) = match first {
        Some((j, m)) => (Some(j), Some(m)),
        None => (None, None),
    };
    ConditionAudit {
        positive_at_zero,
        nondecreasing,
        convex,
        superlinear,
        growth_ratio,
        first_violation,
        violation,
        options,
    }
}

/// `u`, `ω` and the table built from them.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub solution: LinearSolution,
    pub table: NonlinearityTable,
}

/// Solves for `ω` and reconstructs `f` in one go.
pub fn reconstruct(psi: &PotentialSpec, grid: &Arc<LogRadialGrid>) -> Result<Reconstruction> {
    let solution = solve_linearized(psi, grid)?;
    let table = reconstruct_nonlinearity(&solution, psi)?;
    Ok(Reconstruction { solution, table })
}

/// `f`, `f'`, `f''` at `s_j = u(r_j)` from a solved `ω`.
pub fn reconstruct_nonlinearity(
    sol: &LinearSolution,
    psi: &PotentialSpec,
) -> Result<NonlinearityTable> {
    let omega = &sol.omega;
    let u = &sol.u;
    let g = omega.grid();
    let nm1 = g.dim() as f64 - 1.0;
    let n = g.len();
    let mut samples = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let t = g.t(i);
        if !(omega.mantissa(i) > 0.0) {
            return Err(Error::Reconstruction(format!(
                "ω is not positive at t = {t}; u is not injective"
            )));
        }
        let s = if i == n - 1 { 0.0 } else { u.value(i) };
        let f = LogScalar::from_scaled(
            omega.slope_mantissa(i) + nm1 * omega.mantissa(i),
            omega.offset(i) - t,
        );
        // one-sided from above at jumps; r = 1 has only the inner side
        let side = if i == n - 1 { Side::Below } else { Side::Above };
        let c = psi.level_side(t, side);
        let dc = psi.level_slope(t, side);
        let fp = LogScalar::from_scaled(c, -2.0 * t);
        let fpp = LogScalar::from_scaled(2.0 * c - dc, -3.0 * t - omega.ln_abs(i));
        samples.push(TableSample {
            s,
            f,
            fp,
            fpp,
            t: Some(t),
        });
    }
    if !samples[0].f.is_positive() {
        return Err(Error::Reconstruction(format!(
            "f(0) = {} is not positive",
            samples[0].f.value()
        )));
    }
    // When u(0+) is finite the increments of u eventually fall below the
    // resolution of s; the table ends where s stops increasing.
    if let Some(j) = samples.windows(2).position(|w| !(w[1].s > w[0].s)) {
        samples.truncate(j + 1);
    }
    NonlinearityTable::new(
        g.dim(),
        samples,
        Provenance::Reconstructed {
            potential: Box::new(psi.clone()),
            t_min: g.t_min(),
            nodes: n,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FprimeCheck {
    pub max_rel_error: f64,
    pub index: usize,
    pub t: f64,
}

/// Compares `f'(u(r))`, obtained by differencing `ln f` along the grid,
/// with `Ψ(r)`. Independent of the chain identity stored in the table.
///
/// `ln f` is differenced in local form (mantissa ratios and offset
/// differences) since at very small radii its stored value is large enough
/// that rounding would swamp the increments.
pub fn verify_fprime_equals_psi(
    table: &NonlinearityTable,
    psi: &PotentialSpec,
    sol: &LinearSolution,
) -> Result<FprimeCheck> {
    let (omega, u) = (&sol.omega, &sol.u);
    let g = u.grid();
    match &table.provenance {
        Provenance::Reconstructed {
            potential,
            t_min,
            nodes,
        } => {
            if **potential != *psi || *t_min != g.t_min() || *nodes != g.len() {
                return Err(Error::InvalidInput(
                    "table was not generated from this potential and grid".into(),
                ));
            }
        }
        Provenance::Analytic { name } => {
            return Err(Error::InvalidInput(format!(
                "table '{name}' has no generating potential"
            )));
        }
    }
    let n = g.len();
    let nm1 = g.dim() as f64 - 1.0;
    // sample j corresponds to node n-1-j; truncated tables cover i >= first
    let first = n - table.len();
    let mantissa = |i: usize| omega.slope_mantissa(i) + nm1 * omega.mantissa(i);
    let ln_f_rel = |k: usize, i: usize| {
        (mantissa(k) / mantissa(i)).ln() + (omega.offset(k) - omega.offset(i)) - (g.t(k) - g.t(i))
    };
    let mut best = FprimeCheck {
        max_rel_error: 0.0,
        index: 0,
        t: 0.0,
    };
    for (lo, hi) in g.smooth_segments() {
        let lo = lo.max(first);
        if lo + 6 > hi {
            continue;
        }
        for i in lo..=hi {
            let (a, b) = stencil_window(i, lo, hi, 7);
            let w = fornberg_weights(g.t(i), &g.nodes()[a..=b], 1);
            let dlnf: f64 = (a..=b).map(|k| w[1][k - a] * ln_f_rel(k, i)).sum();
            // f'(u) = (df/dt)/(du/dt), du/dt = u_t
            let ut = u.slope_mantissa(i);
            if !(dlnf < 0.0 && ut < 0.0) {
                let side = if i == hi { Side::Below } else { Side::Above };
                if psi.level_side(g.t(i), side) == 0.0 && dlnf.abs() < 1e-10 {
                    continue;
                }
                return Err(Error::Reconstruction(format!(
                    "f is not increasing along u at t = {}",
                    g.t(i)
                )));
            }
            let ln_fp = table.samples[n - 1 - i].f.ln() + (-dlnf).ln() - (-ut).ln() - u.offset(i);
            for side in [Side::Below, Side::Above] {
                if (side == Side::Below && i == lo && lo > 0)
                    || (side == Side::Above && i == hi && hi < n - 1)
                {
                    continue;
                }
                let ln_psi = psi.ln_psi(g.t(i), side);
                let err = (ln_fp - ln_psi).exp_m1().abs();
                if err > best.max_rel_error {
                    best = FprimeCheck {
                        max_rel_error: err,
                        index: i,
                        t: g.t(i),
                    };
                }
            }
        }
    }
    Ok(best)
}
