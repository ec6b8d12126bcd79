//! Monotone polynomial fills between two endpoint jets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_core::stencil::solve_dense;

/// Value and derivatives `[f, f', f'', ...]` of a function at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub t: f64,
    pub derivatives: Vec<f64>,
}

impl Jet {
    pub fn new(t: f64, derivatives: Vec<f64>) -> Self {
        Jet { t, derivatives }
    }

    pub fn value(&self) -> f64 {
        self.derivatives[0]
    }
}

/// Polynomial on `[t0, t1]` in the normalized variable `x = (t - t0)/(t1 - t0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySegment {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<f64>,
}

impl PolySegment {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }

    fn x(&self, t: f64) -> f64 {
        (t - self.t0) / (self.t1 - self.t0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = self.x(t);
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Derivative with respect to `t`.
    pub fn eval_slope(&self, t: f64) -> f64 {
        let x = self.x(t);
        let mut acc = 0.0;
        for (j, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * x + j as f64 * c;
        }
        acc / (self.t1 - self.t0)
    }

    /// `m`-th derivative with respect to `t`.
    pub fn eval_derivative(&self, t: f64, m: usize) -> f64 {
        let x = self.x(t);
        let len = self.t1 - self.t0;
        let mut acc = 0.0;
        for (j, c) in self.coeffs.iter().enumerate().skip(m).rev() {
            let falling: f64 = (0..m).map(|q| (j - q) as f64).product();
            acc = acc * x + falling * c;
        }
        acc / len.powi(m as i32)
    }
}

/// Number of interior samples used to certify monotonicity.
const MONOTONE_SAMPLES: usize = 1024;

/// Strictly monotone Hermite fill between two jets of equal order.
///
/// The polynomial has degree `2k + 1` where `k + 1` is the jet length, so it
/// matches the value and the first `k` derivatives at both ends. Fails when
/// the resulting polynomial is not monotone; the caller then lowers the
/// matching order or adjusts the endpoint data. Monotone fills never leave
/// the range spanned by the endpoint values.
pub fn interpolate_smooth_decreasing(left: &Jet, right: &Jet) -> Result<PolySegment> {
    let k1 = left.derivatives.len();
    if k1 == 0 || right.derivatives.len() != k1 {
        return Err(Error::InvalidInput(
            "endpoint jets must be non-empty and of equal length".into(),
        ));
    }
    if !(right.t > left.t) || !left.t.is_finite() || !right.t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bad segment [{}, {}]",
            left.t, right.t
        )));
    }
    let len = right.t - left.t;
    // the left jet fixes the low coefficients; the right jet the rest
    let mut coeffs = vec![0.0; 2 * k1];
    let mut fact = 1.0;
    for (j, d) in left.derivatives.iter().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        coeffs[j] = d * len.powi(j as i32) / fact;
    }
    let mut a = Vec::with_capacity(k1);
    let mut b = Vec::with_capacity(k1);
    for (m, d) in right.derivatives.iter().enumerate() {
        let falling = |j: usize| (0..m).map(|q| (j - q) as f64).product::<f64>();
        let known: f64 = (m..k1).map(|j| falling(j) * coeffs[j]).sum();
        a.push((k1..2 * k1).map(falling).collect::<Vec<f64>>());
        b.push(d * len.powi(m as i32) - known);
    }
    let high = solve_dense(a, b)
        .ok_or_else(|| Error::NoMonotoneInterpolant("singular Hermite system".into()))?;
    coeffs[k1..].copy_from_slice(&high);
    let seg = PolySegment {
        t0: left.t,
        t1: right.t,
        coeffs,
    };

    let delta = right.value() - left.value();
    if delta == 0.0 {
        let flat = left.derivatives[1..]
            .iter()
            .chain(&right.derivatives[1..])
            .all(|d| *d == 0.0);
        return if flat {
            Ok(seg)
        } else {
            Err(Error::NoMonotoneInterpolant(
                "equal endpoint values with nonzero derivatives".into(),
            ))
        };
    }
    let dir = delta.signum();
    for m in 0..=MONOTONE_SAMPLES {
        let x = m as f64 / MONOTONE_SAMPLES as f64;
        let t = left.t + x * len;
        let s = seg.eval_slope(t) * dir;
        let interior = m > 0 && m < MONOTONE_SAMPLES;
        if (interior && s <= 0.0) || s < -1e-12 * (delta.abs() / len) {
            return Err(Error::NoMonotoneInterpolant(format!(
                "derivative changes sign near t = {t} (order {})",
                k1 - 1
            )));
        }
    }
    Ok(seg)
}

/// Order-`k` smoothstep jets: value `v` with all derivatives zero.
pub(crate) fn flat_jet(t: f64, value: f64, order: usize) -> Jet {
    let mut d = vec![0.0; order + 1];
    d[0] = value;
    Jet::new(t, d)
}

/// Jet with prescribed value and slope, higher derivatives zero.
pub(crate) fn sloped_jet(t: f64, value: f64, slope: f64, order: usize) -> Jet {
    let mut d = vec![0.0; order + 1];
    d[0] = value;
    if order >= 1 {
        d[1] = slope;
    }
    Jet::new(t, d)
}
