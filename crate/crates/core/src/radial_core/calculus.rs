//! Radial calculus in the log-radius variable.
//!
//! With `t = log r`, the radial Laplacian reads
//! `Δu = e^{-2t} (u_tt + (N-2) u_t)` and `∫ g(r) dr = ∫ g(e^t) e^t dt`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::LogRadialGrid;
use super::profile::RadialProfile;
use super::stencil::{fornberg_weights, hermite_second_derivative, stencil_window};
use crate::error::{Error, Result};

/// One-sided values of a derived quantity at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakpointJump {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

impl BreakpointJump {
    pub fn jump(&self) -> f64 {
        self.right - self.left
    }
}

#[derive(Debug, Clone)]
pub struct Laplacian {
    /// `-Δu` at every node; breakpoint nodes hold the one-sided average.
    pub profile: RadialProfile,
    pub jumps: Vec<BreakpointJump>,
}

/// Second `t`-derivative of `u` at node `i` using nodes `[lo, hi]` only,
/// in units of node `i`'s log offset.
fn second_t_derivative(u: &RadialProfile, i: usize, lo: usize, hi: usize) -> Result<f64> {
    let g = u.grid();
    let (a, b) = stencil_window(i, lo, hi, 3);
    let li = u.offset(i);
    let mut offs = Vec::with_capacity(3);
    let mut vals = Vec::with_capacity(3);
    let mut slopes = Vec::with_capacity(3);
    for k in a..=b {
        let rel = (u.offset(k) - li).exp();
        offs.push(g.t(k) - g.t(i));
        vals.push(u.mantissa(k) * rel);
        slopes.push(u.slope_mantissa(k) * rel);
    }
    hermite_second_derivative(&offs, &vals, &slopes)
        .ok_or_else(|| Error::Solver(format!("singular Hermite fit at node {i}")))
}

/// `-Δu` on the grid of `u`.
pub fn radial_laplacian(u: &RadialProfile) -> Result<Laplacian> {
    let g = u.grid();
    if g.len() < 3 {
        return Err(Error::InvalidInput(
            "radial_laplacian needs at least 3 nodes".into(),
        ));
    }
    let nm2 = g.dim() as f64 - 2.0;
    let n = g.len();
    let mut mant: Vec<f64> = vec![0.0; n];
    let mut off: Vec<f64> = vec![0.0; n];
    let mut jumps = Vec::new();
    let segments = g.smooth_segments();
    for (sidx, &(lo, hi)) in segments.iter().enumerate() {
        for i in lo..=hi {
            let utt = second_t_derivative(u, i, lo, hi)?;
            let val = -(utt + nm2 * u.slope_mantissa(i));
            let scale = u.offset(i) - 2.0 * g.t(i);
            if i == lo && sidx > 0 {
                // breakpoint: the previous segment already stored its one-sided value
                let left = mant[i] * off[i].exp();
                let right = val * scale.exp();
                jumps.push(BreakpointJump {
                    t: g.t(i),
                    left,
                    right,
                });
                mant[i] = 0.5 * (mant[i] + val * (scale - off[i]).exp());
            } else {
                mant[i] = val;
                off[i] = scale;
            }
        }
    }
    let profile = if u.has_offsets() {
        scaled_profile(u.grid_arc(), mant, off)?
    } else {
        let vals = mant.iter().zip(&off).map(|(m, o)| m * o.exp()).collect();
        RadialProfile::from_values(u.grid_arc(), vals)?
    };
    Ok(Laplacian { profile, jumps })
}

/// Builds an offset profile from scaled values, with finite-difference slopes
/// computed after aligning neighbours to each node's scale.
fn scaled_profile(
    grid: Arc<LogRadialGrid>,
    mant: Vec<f64>,
    off: Vec<f64>,
) -> Result<RadialProfile> {
    let mut slopes = vec![0.0; mant.len()];
    for (lo, hi) in grid.smooth_segments() {
        for i in lo..=hi {
            let (a, b) = stencil_window(i, lo, hi, 5);
            let w = fornberg_weights(grid.t(i), &grid.nodes()[a..=b], 1);
            let d: f64 = (a..=b)
                .map(|k| w[1][k - a] * mant[k] * (off[k] - off[i]).exp())
                .sum();
            slopes[i] = if i == lo && lo > 0 {
                0.5 * (slopes[i] + d)
            } else {
                d
            };
        }
    }
    RadialProfile::with_offsets(grid, mant, slopes, Some(off))
}

/// `u(r) = ∫_r^1 w(ρ) dρ` on the grid of `w`.
///
/// Uses the end-corrected trapezoid rule on `g(t) = w(e^t) e^t` with the
/// stored slopes, so `u_t = -g` holds exactly at every node.
pub fn integrate_inward(w: &RadialProfile) -> Result<RadialProfile> {
    let g = w.grid();
    let n = g.len();
    let mut gv = vec![0.0; n];
    let mut gd = vec![0.0; n];
    for i in 0..n {
        let t = g.t(i);
        let scale = (w.offset(i) + t).exp();
        gv[i] = w.mantissa(i) * scale;
        gd[i] = (w.slope_mantissa(i) + w.mantissa(i)) * scale;
        if !gv[i].is_finite() || !gd[i].is_finite() {
            return Err(Error::Solver(format!(
                "integrand w(r) r overflows at t = {t}"
            )));
        }
    }
    let mut u = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let h = g.t(i + 1) - g.t(i);
        let piece = 0.5 * h * (gv[i] + gv[i + 1]) + h * h / 12.0 * (gd[i] - gd[i + 1]);
        u[i] = u[i + 1] + piece;
    }
    let slopes = gv.iter().map(|v| -v).collect();
    RadialProfile::from_samples(w.grid_arc(), u, slopes)
}

/// `∫_{e^{t_a}}^{e^{t_b}} f(r) dr` with `f` given as a function of `t`.
///
/// Composite trapezoid in `t` (weight `e^t`) on each breakpoint segment,
/// doubling the panel count until successive Richardson-corrected estimates
/// agree to `rel_tol`.
pub fn quad_log(
    f: impl Fn(f64) -> f64,
    t_a: f64,
    t_b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> Result<f64> {
    if !(t_a.is_finite() && t_b.is_finite()) || t_a > t_b {
        return Err(Error::InvalidInput(format!(
            "bad quadrature range [{t_a}, {t_b}]"
        )));
    }
    let mut edges = vec![t_a];
    edges.extend(breakpoints.iter().copied().filter(|&b| b > t_a && b < t_b));
    edges.push(t_b);
    edges.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let integrand = |t: f64| f(t) * t.exp();
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        // nudge the ends inward so one-sided potentials are evaluated on this segment
        let eps = (b - a) * 1e-15;
        let (fa, fb) = (integrand(a + eps), integrand(b - eps));
        let mut panels = 16usize;
        let mut h = (b - a) / panels as f64;
        let mut sum_inner: f64 = (1..panels).map(|k| integrand(a + k as f64 * h)).sum();
        let mut trap = h * (0.5 * (fa + fb) + sum_inner);
        let mut prev_est = f64::NAN;
        loop {
            let mid: f64 = (0..panels)
                .map(|k| integrand(a + (k as f64 + 0.5) * h))
                .sum();
            sum_inner += mid;
            panels *= 2;
            h *= 0.5;
            let next = h * (0.5 * (fa + fb) + sum_inner);
            let est = next + (next - trap) / 3.0;
            if (est - prev_est).abs() <= rel_tol * est.abs().max(f64::MIN_POSITIVE) {
                total += est;
                break;
            }
            if panels > 1 << 24 {
                return Err(Error::Solver(format!(
                    "quadrature did not converge on [{a}, {b}]"
                )));
            }
            prev_est = est;
            trap = next;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::grid::make_log_grid;

    fn grid(n: usize) -> Arc<LogRadialGrid> {
        Arc::new(make_log_grid(n, -5.0, 100.0, &[]).unwrap())
    }

    #[test]
    fn torsion_profile_has_unit_laplacian() {
        let n = 10.0;
        let u = RadialProfile::from_fn(
            grid(10),
            |t| (1.0 - (2.0 * t).exp()) / (2.0 * n),
            |t| -(2.0 * t).exp() / n,
        )
        .unwrap();
        let lap = radial_laplacian(&u).unwrap();
        for i in 0..lap.profile.len() {
            assert!(
                (lap.profile.value(i) - 1.0).abs() < 1e-8,
                "node {i}: {}",
                lap.profile.value(i)
            );
        }
    }

    #[test]
    fn log_and_linear_profiles() {
        let g = grid(10);
        let u = RadialProfile::from_fn(g.clone(), |t| -t, |_| -1.0).unwrap();
        let lap = radial_laplacian(&u).unwrap();
        let i = g.node_index(g.nodes()[g.locate(0.5f64.ln())]).unwrap();
        let r = g.t(i).exp();
        assert!((lap.profile.value(i) - 8.0 / (r * r)).abs() < 1e-8 * 32.0);

        let u = RadialProfile::from_fn(g.clone(), |t| t.exp(), |t| t.exp()).unwrap();
        let lap = radial_laplacian(&u).unwrap();
        assert!((lap.profile.value(i) + 9.0 / r).abs() < 1e-7);
    }

    #[test]
    fn records_jump_at_breakpoint() {
        let b = -1.0;
        let g = Arc::new(make_log_grid(10, -3.0, 50.0, &[b]).unwrap());
        // u_t continuous but u_tt jumps at t = -1
        let u = RadialProfile::from_fn(
            g.clone(),
            |t| if t < b { t + 0.5 * (t - b).powi(2) } else { t },
            |t| if t < b { 1.0 + (t - b) } else { 1.0 },
        )
        .unwrap();
        let lap = radial_laplacian(&u).unwrap();
        assert_eq!(lap.jumps.len(), 1);
        let r2 = (2.0 * b).exp();
        assert!((lap.jumps[0].jump() - 1.0 / r2).abs() < 1e-6);
    }

    #[test]
    fn inward_integrals() {
        let g = Arc::new(make_log_grid(10, -3.0, 100.0, &[]).unwrap());
        let i = g
            .node_index(g.nodes()[g.locate(0.25f64.ln() + 1e-12)])
            .unwrap();
        let r = g.t(i).exp();
        let one = RadialProfile::from_fn(g.clone(), |_| 1.0, |_| 0.0).unwrap();
        assert!((integrate_inward(&one).unwrap().value(i) - (1.0 - r)).abs() < 1e-10);
        let inv = RadialProfile::from_fn(g.clone(), |t| (-t).exp(), |t| -(-t).exp()).unwrap();
        assert!((integrate_inward(&inv).unwrap().value(i) + g.t(i)).abs() < 1e-10);
        let lin = RadialProfile::from_fn(g.clone(), |t| t.exp(), |t| t.exp()).unwrap();
        assert!((integrate_inward(&lin).unwrap().value(i) - 0.5 * (1.0 - r * r)).abs() < 1e-8);
    }

    #[test]
    fn quad_matches_closed_form() {
        let v = quad_log(|t| (-t).exp(), 0.25f64.ln(), 0.0, &[], 1e-10).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-9);
        let v = quad_log(|t| t.exp(), -40.0, 0.0, &[-3.0], 1e-10).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }
}
