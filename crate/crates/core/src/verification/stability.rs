//! Discretized stability form `Q(ξ) = ∫₀¹ (ξ'² − c ξ²/r²) r^{N−1} dr`.
//!
//! The test space is spanned by hat functions (linear in `t`) on the
//! interior nodes of a log grid, so every test function vanishes at `r_min`
//! and at `r = 1`. In `t` the form reads `∫ (ξ_t² − c ξ²) e^{(N−2)t} dt` and
//! the mass `∫ ξ² e^{Nt} dt`. Hat `i` is scaled by `e^{−(N−2)t_i/2}`; the
//! congruence keeps the inertia and brings the stiffness entries to order one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::radial_core::LogRadialGrid;

/// Slack allowed below zero for the minimum Rayleigh quotient.
pub const STABILITY_SLACK: f64 = 1e-8;

const GAUSS_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub dim: usize,
    pub t_min: f64,
    pub unknowns: usize,
    /// Smallest generalized eigenvalue of the stiffness/mass pencil.
    pub min_rayleigh: f64,
    /// Eigenvalues below `−STABILITY_SLACK`.
    pub negative_modes: usize,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.min_rayleigh >= -STABILITY_SLACK
    }
}

struct Pencil {
    kd: Vec<f64>,
    ko: Vec<f64>,
    md: Vec<f64>,
    mo: Vec<f64>,
}

impl Pencil {
    /// Negative pivots of `K − μM` (Sturm count).
    fn count_below(&self, mu: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.kd.len() {
            let a = self.kd[i] - mu * self.md[i];
            let mut di = if i == 0 {
                a
            } else {
                let e = self.ko[i - 1] - mu * self.mo[i - 1];
                a - e * e / d
            };
            if di == 0.0 {
                di = -f64::EPSILON * (a.abs() + f64::MIN_POSITIVE);
            }
            if di < 0.0 {
                count += 1;
            }
            d = di;
        }
        count
    }

    /// Negative pivots of `M`; entries that underflowed to zero (very small
    /// radii) are semidefinite, not negative.
    fn mass_count_negative(&self) -> usize {
        let mut count = 0;
        let mut d = 0.0;
        for i in 0..self.md.len() {
            let e = if i == 0 { 0.0 } else { self.mo[i - 1] };
            let di = if d > 0.0 {
                self.md[i] - e * e / d
            } else {
                self.md[i]
            };
            if di < 0.0 || (d == 0.0 && e != 0.0) {
                count += 1;
            }
            d = di;
        }
        count
    }
}

fn assemble(level: &dyn Fn(f64) -> f64, grid: &LogRadialGrid) -> Pencil {
    let n = grid.dim() as f64;
    let len = grid.len();
    let mut kd = vec![0.0; len];
    let mut ko = vec![0.0; len.saturating_sub(1)];
    let mut md = vec![0.0; len];
    let mut mo = vec![0.0; len.saturating_sub(1)];
    for k in 0..len - 1 {
        let (ta, tb) = (grid.t(k), grid.t(k + 1));
        let h = tb - ta;
        let mid = 0.5 * (ta + tb);
        let (mut k00, mut k01, mut k11, mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (x, w) in GAUSS_X.iter().zip(GAUSS_W) {
            let t = mid + 0.5 * h * x;
            let (p0, p1) = ((tb - t) / h, (t - ta) / h);
            let c = level(t);
            let wk = 0.5 * h * w;
            // weights relative to each pair's scaling
            let e00 = ((n - 2.0) * (t - ta)).exp();
            let e11 = ((n - 2.0) * (t - tb)).exp();
            let e01 = ((n - 2.0) * (t - mid)).exp();
            let d2 = 1.0 / (h * h);
            k00 += wk * (d2 - c * p0 * p0) * e00;
            k11 += wk * (d2 - c * p1 * p1) * e11;
            k01 += wk * (-d2 - c * p0 * p1) * e01;
            m00 += wk * p0 * p0 * (n * t - (n - 2.0) * ta).exp();
            m11 += wk * p1 * p1 * (n * t - (n - 2.0) * tb).exp();
            m01 += wk * p0 * p1 * (n * t - (n - 2.0) * mid).exp();
        }
        kd[k] += k00;
        kd[k + 1] += k11;
        ko[k] += k01;
        md[k] += m00;
        md[k + 1] += m11;
        mo[k] += m01;
    }
    // interior nodes only
    let inner = 1..len - 1;
    Pencil {
        kd: kd[inner.clone()].to_vec(),
        ko: ko[1..len - 2].to_vec(),
        md: md[inner].to_vec(),
        mo: mo[1..len - 2].to_vec(),
    }
}

/// Minimum Rayleigh quotient of `Q` over the hat-function space of `grid`,
/// with `c(t)` given by `level`.
pub fn stability_quadratic_form(
    level: &dyn Fn(f64) -> f64,
    grid: &LogRadialGrid,
) -> Result<StabilityReport> {
    if grid.len() < 3 {
        return Err(Error::InvalidInput("grid has no interior nodes".into()));
    }
    let pencil = assemble(level, grid);
    if pencil.mass_count_negative() > 0 {
        return Err(Error::InvalidInput(
            "mass matrix is indefinite (grid defect)".into(),
        ));
    }
    let mut lo = 0.0;
    while pencil.count_below(lo) > 0 {
        lo = if lo == 0.0 { -1.0 } else { lo * 16.0 };
        if lo < -1e300 {
            break;
        }
    }
    let mut hi = 1.0;
    while pencil.count_below(hi) == 0 && hi < 1e300 {
        hi *= 16.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-13 * hi.abs().max(lo.abs()) {
            break;
        }
        if pencil.count_below(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(StabilityReport {
        dim: grid.dim(),
        t_min: grid.t_min(),
        unknowns: pencil.kd.len(),
        min_rayleigh: 0.5 * (lo + hi),
        negative_modes: pencil.count_below(-STABILITY_SLACK),
    })
}

/// [`stability_quadratic_form`] for the level of `psi`.
pub fn stability_of_potential(
    psi: &PotentialSpec,
    grid: &LogRadialGrid,
) -> Result<StabilityReport> {
    stability_quadratic_form(&|t| psi.level(t), grid)
}

/// `(Q(ξ), ∫ξ² r^{N−1} dr)` per unit sphere measure for a given `ξ(r)` with
/// derivative, integrated in `t` over `[t_min, 0]`.
pub fn quadratic_form(
    level: &dyn Fn(f64) -> f64,
    dim: usize,
    t_min: f64,
    xi: impl Fn(f64) -> (f64, f64),
) -> (f64, f64) {
    let n = dim as f64;
    let panels = ((-t_min) * 16.0).ceil().max(1.0) as usize;
    let h = -t_min / panels as f64;
    let (mut q, mut m) = (0.0, 0.0);
    for k in 0..panels {
        let mid = t_min + (k as f64 + 0.5) * h;
        for (x, w) in GAUSS_X.iter().zip(GAUSS_W) {
            let t = mid + 0.5 * h * x;
            let r = t.exp();
            let (v, dv) = xi(r);
            let wk = 0.5 * h * w;
            q += wk * (dv * dv * r * r - level(t) * v * v) * ((n - 2.0) * t).exp();
            m += wk * v * v * (n * t).exp();
        }
    }
    (q, m)
}
