//! The linearized problem `-Δω = (Ψ - (N-1)/r²) ω` in the unit ball with
//! `ω(1) = 1`, solved in `t = log r` as
//! `W'' + (N-2) W' + (c(t) - (N-1)) W = 0`.
//!
//! The finite-energy solution is selected at the truncation depth `t_min`
//! by the recessive slope `W' = β₊ W` of the frozen-coefficient equation,
//! which is exact whenever the level is constant below `t_min`.

use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, Tolerances};
use crate::potentials::{PotentialSpec, Side};
use crate::radial_core::{LogRadialGrid, RadialProfile};

/// Exponents of the power solutions `r^β` for a constant level `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRoots {
    pub c: f64,
    pub dim: usize,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

/// Roots of `β² + (N-2)β + (c - (N-1)) = 0`.
pub fn power_law_solution(c: f64, dim: usize) -> Result<PowerLawRoots> {
    if dim < 3 {
        return Err(Error::InvalidInput(format!(
            "dimension must be >= 3, got {dim}"
        )));
    }
    if !c.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite level {c}")));
    }
    let n = dim as f64;
    let disc = n * n - 4.0 * c;
    if disc < 0.0 {
        return Err(Error::ComplexRoots {
            c,
            limit: 0.25 * n * n,
        });
    }
    let s = disc.sqrt();
    Ok(PowerLawRoots {
        c,
        dim,
        beta_plus: 0.5 * (2.0 - n + s),
        beta_minus: 0.5 * (2.0 - n - s),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub t_min: f64,
    pub inner_level: f64,
    pub inner_beta: f64,
    pub steps: usize,
    pub rescalings: usize,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    /// `ω` with `t`-slopes `W_t = r ω_r`.
    pub omega: RadialProfile,
    /// `u(r) = ∫_r^1 ω`, with slopes `u_t = -r ω`.
    pub u: RadialProfile,
    pub stats: SolveStats,
}

impl LinearSolution {
    /// `ω'(1)`.
    pub fn boundary_slope(&self) -> f64 {
        self.omega.slope(self.omega.len() - 1)
    }
}

const RESCALE_HIGH: f64 = 1e150;
const RESCALE_LOW: f64 = 1e-150;

/// Nodes per unit of `t` used when none is configured.
pub const DEFAULT_DENSITY: f64 = 20.0;

/// Node density right next to knots; spacing grows geometrically away from
/// them to the base density.
pub const KNOT_DENSITY: f64 = 400.0;

/// Each knot-delimited piece gets at least this many intervals.
pub const MIN_PIECE_INTERVALS: usize = 128;

/// Default density for `psi`: [`DEFAULT_DENSITY`], lowered for very deep
/// constructions so that the grid stays near 250k nodes, but never below
/// one node per unit of `t`.
pub fn default_density(psi: &PotentialSpec) -> f64 {
    let span = -psi.default_t_min();
    (250_000.0 / span).clamp(1.0, DEFAULT_DENSITY)
}

/// Grid adapted to `psi`: knots inserted as nodes, depth `t_min` or the
/// potential's default depth.
pub fn grid_for(psi: &PotentialSpec, density: f64, t_min: Option<f64>) -> Result<LogRadialGrid> {
    let t_min = t_min.unwrap_or_else(|| psi.default_t_min());
    let knots: Vec<f64> = psi
        .knots()
        .into_iter()
        .filter(|k| *k > t_min && *k < 0.0)
        .collect();
    LogRadialGrid::graded(
        psi.dim,
        t_min,
        density,
        density.max(KNOT_DENSITY),
        &knots,
        MIN_PIECE_INTERVALS,
    )
}

/// Solves for `ω` on `grid`; see the module docs for the inner condition.
pub fn solve_linearized(psi: &PotentialSpec, grid: &Arc<LogRadialGrid>) -> Result<LinearSolution> {
    if psi.dim != grid.dim() {
        return Err(Error::InvalidInput(format!(
            "potential has N = {} but grid has N = {}",
            psi.dim,
            grid.dim()
        )));
    }
    psi.check_admissible(grid)?;
    for b in psi.breakpoints() {
        if b > grid.t_min() && b < 0.0 && grid.node_index(b).is_none() {
            return Err(Error::InvalidInput(format!(
                "grid lacks a node at the potential's jump t = {b}"
            )));
        }
    }
    let nm1 = grid.dim() as f64 - 1.0;
    let nm2 = grid.dim() as f64 - 2.0;
    let n = grid.len();
    let t_min = grid.t_min();
    let inner_level = psi.level_side(t_min, Side::Below);
    let inner_beta = power_law_solution(inner_level, grid.dim())?.beta_plus;

    let tol = Tolerances::default();
    let mut w = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut scale = vec![0.0; n];
    let mut piece = vec![0.0; n];
    w[0] = 1.0;
    v[0] = inner_beta;
    let mut h = 0.0;
    let mut steps = 0usize;
    let mut rescalings = 0usize;
    for i in 0..n - 1 {
        let (ta, tb) = (grid.t(i), grid.t(i + 1));
        let mut rhs = |t: f64, y: &[f64; 3]| {
            let side = if t >= tb { Side::Below } else { Side::Above };
            let c = psi.level_side(t, side);
            [y[1], -nm2 * y[1] - (c - nm1) * y[0], y[0] * (t - ta).exp()]
        };
        let mut negative = false;
        let (_, y) = integrate(
            &mut rhs,
            ta,
            [w[i], v[i], 0.0],
            tb,
            &mut h,
            &tol,
            |_, _, _, y| {
                steps += 1;
                if y[0] <= 0.0 {
                    negative = true;
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )?;
        if negative {
            return Err(Error::NotPositive {
                index: i + 1,
                t: tb,
            });
        }
        piece[i] = y[2];
        let m = y[0].abs().max(y[1].abs());
        if !(RESCALE_LOW..=RESCALE_HIGH).contains(&m) {
            w[i + 1] = y[0] / m;
            v[i + 1] = y[1] / m;
            scale[i + 1] = scale[i] + m.ln();
            rescalings += 1;
        } else {
            w[i + 1] = y[0];
            v[i + 1] = y[1];
            scale[i + 1] = scale[i];
        }
    }
    let end = scale[n - 1] + w[n - 1].ln();
    if !end.is_finite() {
        return Err(Error::Solver(
            "normalization at r = 1 impossible (ω(1) = 0)".into(),
        ));
    }
    let w_end = w[n - 1];
    let off: Vec<f64> = scale.iter().map(|s| s - scale[n - 1]).collect();
    let mant: Vec<f64> = w.iter().map(|x| x / w_end).collect();
    let slope: Vec<f64> = v.iter().map(|x| x / w_end).collect();

    // u_i = u_{i+1} + ∫_{t_i}^{t_{i+1}} W e^t dt, summed in the log domain
    let mut ln_u = vec![f64::NEG_INFINITY; n];
    for i in (0..n - 1).rev() {
        let term = (piece[i] / w_end).ln() + off[i] + grid.t(i);
        ln_u[i] = log_add_exp(ln_u[i + 1], term);
    }

    let omega_plain = off
        .iter()
        .zip(&mant)
        .all(|(o, m)| (o + m.abs().ln()).abs() < 600.0);
    let omega = if omega_plain {
        let vals = mant.iter().zip(&off).map(|(m, o)| m * o.exp()).collect();
        let slopes = slope.iter().zip(&off).map(|(m, o)| m * o.exp()).collect();
        RadialProfile::from_samples(grid.clone(), vals, slopes)?
    } else {
        RadialProfile::with_offsets(grid.clone(), mant.clone(), slope, Some(off.clone()))?
    };

    // u_t = -W e^t
    let u_plain = ln_u.iter().all(|l| *l < 600.0) && (0..n).all(|i| off[i] + grid.t(i) < 600.0);
    let u = if u_plain {
        let vals = ln_u.iter().map(|l| l.exp()).collect();
        let slopes = (0..n)
            .map(|i| -mant[i] * (off[i] + grid.t(i)).exp())
            .collect();
        RadialProfile::from_samples(grid.clone(), vals, slopes)?
    } else {
        let mut um = vec![0.0; n];
        let mut uo = vec![0.0; n];
        let mut us = vec![0.0; n];
        for i in 0..n {
            let base = if ln_u[i].is_finite() { ln_u[i] } else { 0.0 };
            um[i] = if ln_u[i].is_finite() { 1.0 } else { 0.0 };
            uo[i] = base;
            us[i] = -mant[i] * (off[i] + grid.t(i) - base).exp();
        }
        RadialProfile::with_offsets(grid.clone(), um, us, Some(uo))?
    };
    Ok(LinearSolution {
        omega,
        u,
        stats: SolveStats {
            t_min,
            inner_level,
            inner_beta,
            steps,
            rescalings,
        },
    })
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Coefficients of the window solution: `k r` inside, `p/r + q r^{3-N}` on
/// the window, `a r + b r^{1-N}` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSolution {
    pub a_radius: f64,
    pub b_radius: f64,
    pub dim: usize,
    pub inner: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
}

impl WindowSolution {
    pub fn new(a_radius: f64, b_radius: f64, dim: usize) -> Result<Self> {
        if dim < 10 {
            return Err(Error::InvalidInput(format!(
                "window solution needs N >= 10, got {dim}"
            )));
        }
        if !(a_radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "window needs A > 0, got {a_radius}"
            )));
        }
        if !(a_radius < b_radius) || b_radius > 1.0 || !b_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "window needs A < B <= 1, got A = {a_radius}, B = {b_radius}"
            )));
        }
        let n = dim as f64;
        let (ta, tb) = (a_radius.ln(), b_radius.ln());
        // unnormalized with p = 1
        let p = 1.0;
        let q = -2.0 * p * ((n - 4.0) * ta).exp() / (n - 2.0);
        let inner = p * (n - 4.0) / ((n - 2.0) * a_radius * a_radius);
        let val = p / b_radius + q * ((3.0 - n) * tb).exp();
        let der = -p / (b_radius * b_radius) + (3.0 - n) * q * ((2.0 - n) * tb).exp();
        let b = (val - der * b_radius) * ((n - 1.0) * tb).exp() / n;
        let a = (val - b * ((1.0 - n) * tb).exp()) / b_radius;
        let norm = a + b;
        Ok(WindowSolution {
            a_radius,
            b_radius,
            dim,
            inner: inner / norm,
            p: p / norm,
            q: q / norm,
            a: a / norm,
            b: b / norm,
        })
    }

    /// `ω` at `r = e^t`.
    pub fn value_t(&self, t: f64) -> f64 {
        let n = self.dim as f64;
        let r = t.exp();
        if r < self.a_radius {
            self.inner * r
        } else if r <= self.b_radius {
            self.p * (-t).exp() + self.q * ((3.0 - n) * t).exp()
        } else {
            self.a * r + self.b * ((1.0 - n) * t).exp()
        }
    }

    /// `r ω'(r)` at `r = e^t`.
    pub fn slope_t(&self, t: f64) -> f64 {
        let n = self.dim as f64;
        let r = t.exp();
        if r < self.a_radius {
            self.inner * r
        } else if r <= self.b_radius {
            -self.p * (-t).exp() + (3.0 - n) * self.q * ((3.0 - n) * t).exp()
        } else {
            self.a * r + (1.0 - n) * self.b * ((1.0 - n) * t).exp()
        }
    }

    /// `∫_0^1 ω(r) dr`, piece by piece.
    pub fn integral(&self) -> f64 {
        let n = self.dim as f64;
        let (ra, rb) = (self.a_radius, self.b_radius);
        let inner = 0.5 * self.inner * ra * ra;
        let window =
            self.p * (rb / ra).ln() + self.q * (rb.powf(4.0 - n) - ra.powf(4.0 - n)) / (4.0 - n);
        let outer = 0.5 * self.a * (1.0 - rb * rb) + self.b * (1.0 - rb.powf(2.0 - n)) / (2.0 - n);
        inner + window + outer
    }
}

/// The window solution `ω[A,B](r)`.
pub fn closed_form_window(a: f64, b: f64, dim: usize, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "radius must lie in (0, 1], got {r}"
        )));
    }
    Ok(WindowSolution::new(a, b, dim)?.value_t(r.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max_i (ω₁ - ω₂)/max(1, ω₂)`.
    pub max_excess: f64,
    pub index: usize,
    pub t: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Solves both potentials and reports how far `ω₁` rises above `ω₂`.
/// Requires `c₁ ≤ c₂` at every node.
pub fn compare_potentials(
    psi1: &PotentialSpec,
    psi2: &PotentialSpec,
    grid: &Arc<LogRadialGrid>,
) -> Result<ComparisonReport> {
    for (i, &t) in grid.nodes().iter().enumerate() {
        for side in [Side::Below, Side::Above] {
            let (c1, c2) = (psi1.level_side(t, side), psi2.level_side(t, side));
            if c1 > c2 {
                return Err(Error::OrderingViolated {
                    index: i,
                    t,
                    c1,
                    c2,
                });
            }
        }
    }
    let s1 = solve_linearized(psi1, grid)?;
    let s2 = solve_linearized(psi2, grid)?;
    let mut rep = ComparisonReport {
        max_excess: f64::NEG_INFINITY,
        index: 0,
        t: 0.0,
        omega1: 0.0,
        omega2: 0.0,
    };
    for i in 0..grid.len() {
        let (l1, l2) = (s1.omega.ln_abs(i), s2.omega.ln_abs(i));
        let excess = if l2 > 0.0 {
            (l1 - l2).exp_m1()
        } else {
            l1.exp() - l2.exp()
        };
        if excess > rep.max_excess {
            rep = ComparisonReport {
                max_excess: excess,
                index: i,
                t: grid.t(i),
                omega1: s1.omega.value(i),
                omega2: s2.omega.value(i),
            };
        }
    }
    Ok(rep)
}

/// `ω'(1)` for `psi` on `grid`.
pub fn boundary_slope(psi: &PotentialSpec, grid: &Arc<LogRadialGrid>) -> Result<f64> {
    Ok(solve_linearized(psi, grid)?.boundary_slope())
}
