//! Two-sided bound on `λ* r² f'(u*)` and the window integral bound.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::format::{csv_string, fmt_f64};
use crate::linear_ode::WindowSolution;
use crate::radial_core::quad_log;
use crate::reconstruction::NonlinearityTable;

use super::eigen::first_eigenvalue;

/// The profile must reach at least this deep in `t`.
pub const REQUIRED_DEPTH: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    pub width: f64,
    pub step: f64,
    /// Only windows ending at or below this `t` are checked.
    pub top: f64,
    pub tol: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        WindowOptions {
            width: 5.0,
            step: 2.5,
            top: 0.0,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub t_lo: f64,
    pub t_hi: f64,
    pub sup: f64,
    pub inf: f64,
    pub samples: usize,
    /// `sup − 2(N−2)`.
    pub lower_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub case: String,
    pub dim: usize,
    pub lambda_star: f64,
    pub lambda1: f64,
    pub lower: f64,
    pub hardy: f64,
    pub t_min: f64,
    pub nodes: usize,
    pub pointwise_max: f64,
    pub pointwise_max_t: f64,
    /// `λ₁ − max c*`.
    pub upper_margin: f64,
    pub upper_pass: bool,
    /// Smallest `sup − 2(N−2)` over the windows.
    pub lower_margin: f64,
    pub lower_pass: bool,
    pub window: WindowOptions,
    pub windows: Vec<WindowStat>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.upper_pass && self.lower_pass
    }

    /// `t_lo, t_hi, sup, inf, samples, lower_margin` per window.
    pub fn windows_csv(&self) -> String {
        csv_string(
            &["t_lo", "t_hi", "sup", "inf", "samples", "lower_margin"],
            self.windows.iter().map(|w| {
                vec![
                    fmt_f64(w.t_lo),
                    fmt_f64(w.t_hi),
                    fmt_f64(w.sup),
                    fmt_f64(w.inf),
                    w.samples.to_string(),
                    fmt_f64(w.lower_margin),
                ]
            }),
        )
    }
}

/// `c*(t) = λ* r² f'(u*(r))` at the table's nodes, deepest first.
pub fn cstar_from_table(table: &NonlinearityTable, lambda_star: f64) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = table
        .samples
        .iter()
        .map(|x| {
            x.t.map(|t| {
                (
                    t,
                    lambda_star * f64::from(x.fp.sign) * (x.fp.ln_abs + 2.0 * t).exp(),
                )
            })
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidInput("table samples carry no radii".into()))?;
    out.reverse();
    Ok(out)
}

/// Checks `c* ≤ λ₁` pointwise and `sup c* ≥ 2(N−2) − tol` on every window.
pub fn bound_check(
    case: &str,
    cstar: &[(f64, f64)],
    lambda_star: f64,
    dim: usize,
    window: WindowOptions,
) -> Result<VerificationReport> {
    ensure(dim >= 3, || format!("dimension must be >= 3, got {dim}"))?;
    ensure(lambda_star.is_finite() && lambda_star > 0.0, || {
        format!("λ* must be positive, got {lambda_star}")
    })?;
    ensure(
        window.width > 0.0 && window.step > 0.0 && window.tol >= 0.0,
        || "bad window options".to_string(),
    )?;
    ensure(cstar.windows(2).all(|w| w[1].0 > w[0].0), || {
        "c* samples must be sorted by t".to_string()
    })?;
    let t_min = cstar.first().map(|x| x.0).unwrap_or(0.0);
    if t_min > REQUIRED_DEPTH {
        return Err(Error::InsufficientDepth {
            t_min,
            required: REQUIRED_DEPTH,
        });
    }
    let n = dim as f64;
    let lambda1 = first_eigenvalue(dim)?.lambda1;
    let lower = 2.0 * (n - 2.0);
    let (pmax_t, pmax) = cstar.iter().fold((0.0, f64::NEG_INFINITY), |acc, &(t, c)| {
        if c > acc.1 {
            (t, c)
        } else {
            acc
        }
    });

    let mut windows = Vec::new();
    let mut lo = t_min;
    while lo + window.width <= window.top + 1e-12 {
        let hi = lo + window.width;
        let a = cstar.partition_point(|x| x.0 < lo);
        let b = cstar.partition_point(|x| x.0 <= hi);
        let vals = &cstar[a..b];
        if !vals.is_empty() {
            let sup = vals.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.1));
            let inf = vals.iter().fold(f64::INFINITY, |m, x| m.min(x.1));
            windows.push(WindowStat {
                t_lo: lo,
                t_hi: hi,
                sup,
                inf,
                samples: vals.len(),
                lower_margin: sup - lower,
            });
        }
        lo += window.step;
    }
    let lower_margin = windows
        .iter()
        .fold(f64::INFINITY, |m, w| m.min(w.lower_margin));
    Ok(VerificationReport {
        case: case.to_string(),
        dim,
        lambda_star,
        lambda1,
        lower,
        hardy: (n - 2.0) * (n - 2.0) / 4.0,
        t_min,
        nodes: cstar.len(),
        pointwise_max: pmax,
        pointwise_max_t: pmax_t,
        upper_margin: lambda1 - pmax,
        upper_pass: pmax <= lambda1,
        lower_margin,
        lower_pass: !windows.is_empty() && lower_margin >= -window.tol,
        window,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowIntegral {
    pub s: f64,
    pub dim: usize,
    /// `ln A = ln s − 1/s³`.
    pub ln_a: f64,
    pub numeric: f64,
    /// `N(N−4) / (s((N−2)² + 2(N−2)s^N))`.
    pub bound: f64,
    /// `N(N−4) B² log(B/A) / ((N−2)² + 2(N−2)B^N)`.
    pub intermediate: f64,
}

impl WindowIntegral {
    pub fn holds(&self) -> bool {
        self.numeric >= self.bound && self.numeric >= self.intermediate
    }
}

/// `∫₀¹ ω[s e^{−1/s³}, s](r) dr` by quadrature of the closed form, against
/// the lower bounds.
pub fn window_integral_bound(s: f64, dim: usize) -> Result<WindowIntegral> {
    ensure(s > 0.0 && s <= 1.0, || {
        format!("scale must lie in (0, 1], got {s}")
    })?;
    ensure(dim >= 10, || {
        format!("window bound needs N >= 10, got {dim}")
    })?;
    let n = dim as f64;
    let ln_a = s.ln() - s.powi(-3);
    let a = ln_a.exp();
    ensure(a > 0.0 && a.is_normal(), || {
        format!("inner radius e^{ln_a} is not representable")
    })?;
    let sol = WindowSolution::new(a, s, dim)?;
    // ω = k r below A
    let inner = 0.5 * sol.inner * a * a;
    let outer = quad_log(|t| sol.value_t(t), ln_a, 0.0, &[s.ln()], 1e-12)?;
    let d = (n - 2.0) * (n - 2.0) + 2.0 * (n - 2.0) * s.powf(n);
    Ok(WindowIntegral {
        s,
        dim,
        ln_a,
        numeric: inner + outer,
        bound: n * (n - 4.0) / (s * d),
        intermediate: n * (n - 4.0) * s * s * (s.ln() - ln_a) / d,
    })
}
