//! First radial Dirichlet eigenvalue of the unit ball.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::ode::{integrate, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub dim: usize,
    pub lambda1: f64,
    /// Radii of the eigenfunction samples, `0` to `1`.
    pub r: Vec<f64>,
    /// Positive eigenfunction with `φ(0) = 1`.
    pub phi: Vec<f64>,
}

const START_RADIUS: f64 = 1e-6;
const PROFILE_POINTS: usize = 200;

fn tolerances() -> Tolerances {
    Tolerances {
        rtol: 1e-13,
        atol: 1e-300,
        max_steps: 1_000_000,
    }
}

/// `φ'' + (N−1)/r φ' + λφ = 0` from the Taylor start `1 − λr²/(2N)`.
fn start(lambda: f64, n: f64) -> [f64; 2] {
    let r = START_RADIUS;
    [1.0 - lambda * r * r / (2.0 * n), -lambda * r / n]
}

/// Whether the regular solution vanishes somewhere in `(0, 1]`.
fn vanishes(lambda: f64, dim: usize) -> Result<bool> {
    let n = dim as f64;
    let mut rhs = |r: f64, y: &[f64; 2]| [y[1], -(n - 1.0) / r * y[1] - lambda * y[0]];
    let mut hit = false;
    let mut h = 0.0;
    let (_, y) = integrate(
        &mut rhs,
        START_RADIUS,
        start(lambda, n),
        1.0,
        &mut h,
        &tolerances(),
        |_, _, _, y| {
            if y[0] <= 0.0 {
                hit = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )?;
    Ok(hit || y[0] <= 0.0)
}

/// Bisection on `[0, 4N²]` for the smallest `λ` whose regular solution
/// reaches zero by `r = 1`; the zero count is monotone in `λ`.
pub fn first_eigenvalue(dim: usize) -> Result<Eigenpair> {
    ensure(dim >= 1, || "dimension must be >= 1".to_string())?;
    let n = dim as f64;
    let (mut lo, mut hi) = (0.0, 4.0 * n * n);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if vanishes(mid, dim)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda1 = 0.5 * (lo + hi);

    let mut rhs = |r: f64, y: &[f64; 2]| [y[1], -(n - 1.0) / r * y[1] - lambda1 * y[0]];
    let mut r = vec![0.0];
    let mut phi = vec![1.0];
    let mut y = start(lambda1, n);
    let mut h = 0.0;
    let mut r_prev = START_RADIUS;
    for k in 1..=PROFILE_POINTS {
        let rk = k as f64 / PROFILE_POINTS as f64;
        y = integrate(
            &mut rhs,
            r_prev,
            y,
            rk,
            &mut h,
            &tolerances(),
            |_, _, _, _| ControlFlow::Continue(()),
        )?
        .1;
        r.push(rk);
        phi.push(if k == PROFILE_POINTS { 0.0 } else { y[0] });
        r_prev = rk;
    }
    Ok(Eigenpair {
        dim,
        lambda1,
        r,
        phi,
    })
}
