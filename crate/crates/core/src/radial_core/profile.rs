use std::sync::Arc;

use super::grid::LogRadialGrid;
use super::stencil::{fornberg_weights, stencil_window};
use crate::error::{Error, Result};

/// A radial function sampled on a [`LogRadialGrid`].
///
/// Each node carries a value and its `t`-derivative; evaluation between
/// nodes is cubic Hermite in `t`. Profiles whose magnitude spans more than
/// the double range store a per-node natural-log offset: the represented
/// value at node `i` is `mantissa[i] * exp(offset[i])`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: Arc<LogRadialGrid>,
    mantissa: Vec<f64>,
    slope: Vec<f64>,
    offset: Option<Vec<f64>>,
}

impl RadialProfile {
    pub fn from_samples(
        grid: Arc<LogRadialGrid>,
        values: Vec<f64>,
        slopes: Vec<f64>,
    ) -> Result<Self> {
        Self::with_offsets(grid, values, slopes, None)
    }

    pub fn with_offsets(
        grid: Arc<LogRadialGrid>,
        mantissa: Vec<f64>,
        slope: Vec<f64>,
        offset: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = grid.len();
        if mantissa.len() != n || slope.len() != n || offset.as_ref().is_some_and(|o| o.len() != n)
        {
            return Err(Error::InvalidInput(format!(
                "profile length mismatch: grid has {n} nodes, got {} values / {} slopes",
                mantissa.len(),
                slope.len()
            )));
        }
        if let Some(i) = mantissa.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite profile value at node {i}"
            )));
        }
        if let Some(i) = slope.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite profile slope at node {i}"
            )));
        }
        if let Some(o) = &offset {
            if let Some(i) = o.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite log offset at node {i}"
                )));
            }
        }
        Ok(RadialProfile {
            grid,
            mantissa,
            slope,
            offset,
        })
    }

    /// Samples an analytic function of `t` and its `t`-derivative.
    pub fn from_fn(
        grid: Arc<LogRadialGrid>,
        f: impl Fn(f64) -> f64,
        df: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        let slopes = grid.nodes().iter().map(|&t| df(t)).collect();
        Self::from_samples(grid, values, slopes)
    }

    /// Samples values only; slopes come from five-point finite differences
    /// that never straddle a breakpoint.
    pub fn from_values(grid: Arc<LogRadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("profile length mismatch".into()));
        }
        let mut slopes = vec![0.0; values.len()];
        for (lo, hi) in grid.smooth_segments() {
            for i in lo..=hi {
                let (a, b) = stencil_window(i, lo, hi, 5);
                let w = fornberg_weights(grid.t(i), &grid.nodes()[a..=b], 1);
                let d: f64 = (a..=b).map(|k| w[1][k - a] * values[k]).sum();
                // breakpoint nodes belong to two segments; keep the average
                if i == lo && lo > 0 {
                    slopes[i] = 0.5 * (slopes[i] + d);
                } else {
                    slopes[i] = d;
                }
            }
        }
        Self::from_samples(grid, values, slopes)
    }

    /// Shape-preserving (Fritsch–Carlson) slopes: the interpolant stays
    /// within the range of neighbouring samples.
    pub fn monotone(grid: Arc<LogRadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput("profile length mismatch".into()));
        }
        let slopes = pchip_slopes(grid.nodes(), &values);
        Self::from_samples(grid, values, slopes)
    }

    pub fn grid(&self) -> &LogRadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<LogRadialGrid> {
        Arc::clone(&self.grid)
    }

    pub fn len(&self) -> usize {
        self.mantissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mantissa.is_empty()
    }

    pub fn has_offsets(&self) -> bool {
        self.offset.is_some()
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offset.as_ref().map_or(0.0, |o| o[i])
    }

    pub fn mantissa(&self, i: usize) -> f64 {
        self.mantissa[i]
    }

    pub fn slope_mantissa(&self, i: usize) -> f64 {
        self.slope[i]
    }

    /// Value at node `i`; may over- or underflow for offset profiles.
    pub fn value(&self, i: usize) -> f64 {
        match &self.offset {
            None => self.mantissa[i],
            Some(o) => self.mantissa[i] * o[i].exp(),
        }
    }

    /// `t`-derivative at node `i`.
    pub fn slope(&self, i: usize) -> f64 {
        match &self.offset {
            None => self.slope[i],
            Some(o) => self.slope[i] * o[i].exp(),
        }
    }

    /// `ln |value|` at node `i`, finite whenever the mantissa is nonzero.
    pub fn ln_abs(&self, i: usize) -> f64 {
        self.mantissa[i].abs().ln() + self.offset(i)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    /// Cubic Hermite evaluation at `t`, clamped to the grid range.
    pub fn eval(&self, t: f64) -> f64 {
        let (v, l) = self.eval_scaled(t);
        v * l.exp()
    }

    /// `(mantissa, ln offset)` of the interpolated value at `t`.
    pub fn eval_scaled(&self, t: f64) -> (f64, f64) {
        let g = &self.grid;
        let t = t.clamp(g.t_min(), 0.0);
        let i = g.locate(t);
        let (t0, t1) = (g.t(i), g.t(i + 1));
        let l0 = self.offset(i);
        let rel = (self.offset(i + 1) - l0).exp();
        let (y0, d0) = (self.mantissa[i], self.slope[i]);
        let (y1, d1) = (self.mantissa[i + 1] * rel, self.slope[i + 1] * rel);
        (hermite_cubic(t0, t1, y0, y1, d0, d1, t), l0)
    }

    /// `t`-derivative of the interpolant at `t`.
    pub fn eval_slope(&self, t: f64) -> f64 {
        let g = &self.grid;
        let t = t.clamp(g.t_min(), 0.0);
        let i = g.locate(t);
        let (t0, t1) = (g.t(i), g.t(i + 1));
        let l0 = self.offset(i);
        let rel = (self.offset(i + 1) - l0).exp();
        let (y0, d0) = (self.mantissa[i], self.slope[i]);
        let (y1, d1) = (self.mantissa[i + 1] * rel, self.slope[i + 1] * rel);
        hermite_cubic_slope(t0, t1, y0, y1, d0, d1, t) * l0.exp()
    }
}

pub(crate) fn hermite_cubic(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

pub(crate) fn hermite_cubic_slope(
    t0: f64,
    t1: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
    t: f64,
) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    dh00 * y0 + dh10 * d0 + dh01 * y1 + dh11 * d1
}

/// Fritsch–Carlson monotone slopes for samples `(x, y)`.
pub(crate) fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let mut e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if e * d0 <= 0.0 {
            e = 0.0;
        } else if d0 * d1 <= 0.0 && e.abs() > 3.0 * d0.abs() {
            e = 3.0 * d0;
        }
        e
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::grid::make_log_grid;

    #[test]
    fn hermite_is_exact_for_cubics() {
        let g = Arc::new(make_log_grid(10, -2.0, 4.0, &[]).unwrap());
        let f = |t: f64| 1.0 + t - 0.5 * t * t + 0.25 * t.powi(3);
        let df = |t: f64| 1.0 - t + 0.75 * t * t;
        let p = RadialProfile::from_fn(g, f, df).unwrap();
        for t in [-1.93, -1.1, -0.37, -0.01] {
            assert!((p.eval(t) - f(t)).abs() < 1e-12);
            assert!((p.eval_slope(t) - df(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn offsets_round_trip() {
        let g = Arc::new(make_log_grid(10, -1000.0, 1.0, &[]).unwrap());
        // exp(-t) overflows at t = -1000 unless stored with offsets
        let n = g.len();
        let mant = vec![1.0; n];
        let slope = vec![-1.0; n];
        let off: Vec<f64> = g.nodes().iter().map(|t| -t).collect();
        let p = RadialProfile::with_offsets(g, mant, slope, Some(off)).unwrap();
        assert!((p.ln_abs(0) - 1000.0).abs() < 1e-9);
        let (m, l) = p.eval_scaled(-999.5);
        assert!(((m.ln() + l) - 999.5).abs() < 5e-3, "{m} {l}");
    }

    #[test]
    fn from_values_slopes_are_accurate() {
        let g = Arc::new(make_log_grid(10, -3.0, 50.0, &[-1.0]).unwrap());
        let vals = g.nodes().iter().map(|t| (2.0 * t).exp()).collect();
        let p = RadialProfile::from_values(g.clone(), vals).unwrap();
        for i in 0..g.len() {
            let exact = 2.0 * (2.0 * g.t(i)).exp();
            assert!((p.slope(i) - exact).abs() < 1e-6 * exact.abs().max(1e-3));
        }
    }

    #[test]
    fn monotone_stays_in_range() {
        let g =
            Arc::new(LogRadialGrid::from_nodes(10, vec![-3.0, -2.0, -1.0, 0.0], vec![]).unwrap());
        let p = RadialProfile::monotone(g, vec![16.0, 16.0, 4.0, 4.0]).unwrap();
        for k in 0..=300 {
            let t = -3.0 + k as f64 * 0.01;
            let v = p.eval(t);
            assert!((4.0 - 1e-12..=16.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn rejects_length_mismatch() {
        let g = Arc::new(make_log_grid(10, -1.0, 4.0, &[]).unwrap());
        assert!(RadialProfile::from_samples(g, vec![1.0], vec![0.0]).is_err());
    }
}
