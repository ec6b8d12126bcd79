//! Dormand–Prince 5(4) integration for the two-component systems used
//! throughout the crate (linearized equation, Emden–Fowler shooting,
//! radial eigenproblem).

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-300,
            max_steps: 50_000_000,
        }
    }
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], h: f64, coeffs: &[f64], ks: &[[f64; D]]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in coeffs.iter().zip(ks) {
        for (o, kk) in out.iter_mut().zip(k) {
            *o += h * c * kk;
        }
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution and the
/// embedded error estimate.
#[inline]
pub(crate) fn dopri_step<F, const D: usize>(
    f: &mut F,
    t: f64,
    y: &[f64; D],
    h: f64,
) -> ([f64; D], [f64; D])
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let mut k = [[0.0; D]; 7];
    k[0] = f(t, y);
    k[1] = f(t + C[1] * h, &axpy(y, h, &A2, &k[..1]));
    k[2] = f(t + C[2] * h, &axpy(y, h, &A3, &k[..2]));
    k[3] = f(t + C[3] * h, &axpy(y, h, &A4, &k[..3]));
    k[4] = f(t + C[4] * h, &axpy(y, h, &A5, &k[..4]));
    // the last two stages sit exactly on t + h
    k[5] = f(t + h, &axpy(y, h, &A6, &k[..5]));
    let y_new = axpy(y, h, &B, &k[..6]);
    k[6] = f(t + h, &y_new);
    let mut err = [0.0; D];
    for (e, kk) in E.iter().zip(&k) {
        for (er, v) in err.iter_mut().zip(kk) {
            *er += h * e * v;
        }
    }
    (y_new, err)
}

#[inline]
fn error_ratio<const D: usize>(
    y: &[f64; D],
    y_new: &[f64; D],
    err: &[f64; D],
    tol: &Tolerances,
) -> f64 {
    let big = y.iter().chain(y_new).fold(0.0f64, |m, v| m.max(v.abs()));
    let e = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    e / (tol.atol + tol.rtol * big)
}

/// Adaptive integration from `t0` to `t1` (either direction). `h` carries
/// the step-size suggestion between calls. The observer sees every accepted
/// step as `(t_prev, y_prev, t, y)` and may stop the integration early.
pub(crate) fn integrate<F, O, const D: usize>(
    f: &mut F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    h: &mut f64,
    tol: &Tolerances,
    mut observe: O,
) -> Result<(f64, [f64; D])>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    O: FnMut(f64, &[f64; D], f64, &[f64; D]) -> ControlFlow<()>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((t0, y0));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut step = if *h > 0.0 {
        h.min(span.abs())
    } else {
        span.abs()
    };
    let min_step = 1e-14 * (t0.abs().max(t1.abs()).max(1.0));
    let mut steps = 0usize;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = step >= remaining;
        let hs = if last { remaining } else { step };
        let (y_new, err) = dopri_step(f, t, &y, dir * hs);
        if !y_new.iter().all(|v| v.is_finite()) {
            step = hs * 0.25;
            if step < min_step {
                return Err(Error::Solver(format!("non-finite state near t = {t}")));
            }
            continue;
        }
        let ratio = error_ratio(&y, &y_new, &err, tol);
        if ratio <= 1.0 {
            let t_new = if last { t1 } else { t + dir * hs };
            let prev = y;
            let t_prev = t;
            t = t_new;
            y = y_new;
            let grow = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last {
                step = hs * grow;
            }
            *h = (hs * grow).max(min_step);
            if let ControlFlow::Break(()) = observe(t_prev, &prev, t, &y) {
                return Ok((t, y));
            }
            if last {
                break;
            }
        } else {
            step = hs * (0.9 * ratio.powf(-0.25)).clamp(0.1, 0.9);
            if step < min_step {
                return Err(Error::Solver(format!("step size underflow near t = {t}")));
            }
        }
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::Solver(format!("step limit exceeded near t = {t}")));
        }
    }
    Ok((t, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut h = 0.1;
        let tol = Tolerances {
            rtol: 1e-12,
            atol: 1e-14,
            ..Default::default()
        };
        let (_, y) = integrate(&mut f, 0.0, [1.0, 0.0], 10.0, &mut h, &tol, |_, _, _, _| {
            ControlFlow::Continue(())
        })
        .unwrap();
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_direction() {
        let mut f = |_t: f64, y: &[f64; 2]| [y[0], 0.0];
        let mut h = 0.0;
        let (_, y) = integrate(
            &mut f,
            0.0,
            [1.0, 0.0],
            -3.0,
            &mut h,
            &Tolerances::default(),
            |_, _, _, _| ControlFlow::Continue(()),
        )
        .unwrap();
        assert!((y[0] - (-3f64).exp()).abs() < 1e-10);
    }
}
