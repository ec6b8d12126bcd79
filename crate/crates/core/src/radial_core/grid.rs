//! Log-radius grids.
//!
//! Every radial quantity lives on `t = log r`, so radii far below the
//! smallest positive double (the deep stages of the oscillatory potentials)
//! remain representable. The last node is always `t = 0`, i.e. `r = 1`.

use crate::error::{ensure, Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of intervals between consecutive breakpoints.
pub const MIN_INTERVALS_PER_SEGMENT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRadialGrid {
    dim: usize,
    nodes: Vec<f64>,
    breakpoints: Vec<f64>,
}

/// Growth factor between neighbouring intervals in a graded ramp.
const GRADING_RATIO: f64 = 1.1;

fn push_uniform(nodes: &mut Vec<f64>, a: f64, b: f64, count: usize) {
    let h = (b - a) / count as f64;
    for k in 0..count {
        // Anchor each interior node to the nearer end so the rounding error
        // does not grow along very long segments.
        let t = if k == 0 {
            a
        } else if 2 * k <= count {
            a + k as f64 * h
        } else {
            b - (count - k) as f64 * h
        };
        nodes.push(t);
    }
}

/// Pushes the nodes of `[a, b)`.
fn push_segment(
    nodes: &mut Vec<f64>,
    a: f64,
    b: f64,
    coarse: f64,
    fine: f64,
    min_intervals: usize,
) {
    let len = b - a;
    let uniform = |d: f64| ((len * d).ceil() as usize).max(min_intervals);
    let (h_fine, h_coarse) = (1.0 / fine, 1.0 / coarse);
    let mut ramp = Vec::new();
    let mut h = h_fine;
    while h < h_coarse {
        ramp.push(h);
        h *= GRADING_RATIO;
    }
    let ramp_len: f64 = ramp.iter().sum();
    let middle = len - 2.0 * ramp_len;
    if ramp.is_empty()
        || middle <= 0.0
        || (middle * coarse).ceil() as usize + 2 * ramp.len() >= uniform(fine)
    {
        let d = if middle <= 0.0 { fine } else { coarse };
        push_uniform(nodes, a, b, uniform(d));
        return;
    }
    let mut t = a;
    for &h in &ramp {
        nodes.push(t);
        t += h;
    }
    let (m0, m1) = (a + ramp_len, b - ramp_len);
    push_uniform(nodes, m0, m1, ((middle * coarse).ceil() as usize).max(1));
    let mut tail = Vec::with_capacity(ramp.len());
    let mut off = ramp_len;
    for &h in ramp.iter().rev() {
        tail.push(b - off);
        off -= h;
    }
    nodes.extend(tail);
}

impl LogRadialGrid {
    /// Builds a grid from `t_min` to `0` with roughly `points_per_unit_t`
    /// intervals per unit of `t`. Breakpoints are inserted exactly and each
    /// breakpoint-delimited segment is split uniformly.
    pub fn new(
        dim: usize,
        t_min: f64,
        points_per_unit_t: f64,
        breakpoints: &[f64],
    ) -> Result<Self> {
        Self::with_min_intervals(
            dim,
            t_min,
            points_per_unit_t,
            breakpoints,
            MIN_INTERVALS_PER_SEGMENT,
        )
    }

    /// Same as [`LogRadialGrid::new`] but forces at least `min_intervals`
    /// intervals on every segment, which keeps short transition segments
    /// resolved on otherwise coarse grids.
    pub fn with_min_intervals(
        dim: usize,
        t_min: f64,
        points_per_unit_t: f64,
        breakpoints: &[f64],
        min_intervals: usize,
    ) -> Result<Self> {
        Self::graded(
            dim,
            t_min,
            points_per_unit_t,
            points_per_unit_t,
            breakpoints,
            min_intervals,
        )
    }

    /// Like [`LogRadialGrid::with_min_intervals`], but spacing starts at
    /// `1 / fine_density` next to each breakpoint and grows geometrically
    /// to `1 / points_per_unit_t` in the interior of long segments.
    pub fn graded(
        dim: usize,
        t_min: f64,
        points_per_unit_t: f64,
        fine_density: f64,
        breakpoints: &[f64],
        min_intervals: usize,
    ) -> Result<Self> {
        ensure(fine_density.is_finite() && fine_density > 0.0, || {
            format!("fine density must be positive, got {fine_density}")
        })?;
        ensure(dim >= 3, || format!("dimension must be >= 3, got {dim}"))?;
        ensure(t_min.is_finite() && t_min < 0.0, || {
            format!("t_min must be finite and negative, got {t_min}")
        })?;
        ensure(
            points_per_unit_t.is_finite() && points_per_unit_t > 0.0,
            || format!("density must be positive, got {points_per_unit_t}"),
        )?;
        for &b in breakpoints {
            ensure(b.is_finite(), || format!("non-finite breakpoint {b}"))?;
            ensure(b >= t_min && b <= 0.0, || {
                format!("breakpoint {b} outside [{t_min}, 0]")
            })?;
        }

        let mut edges: Vec<f64> = breakpoints.to_vec();
        edges.push(t_min);
        edges.push(0.0);
        edges.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        edges.dedup();

        let min_intervals = min_intervals.max(MIN_INTERVALS_PER_SEGMENT);
        let fine = fine_density.max(points_per_unit_t);
        let mut nodes = Vec::new();
        for w in edges.windows(2) {
            push_segment(
                &mut nodes,
                w[0],
                w[1],
                points_per_unit_t,
                fine,
                min_intervals,
            );
        }
        nodes.push(0.0);

        let mut bps: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > t_min && b < 0.0)
            .collect();
        bps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        bps.dedup();

        let grid = LogRadialGrid {
            dim,
            nodes,
            breakpoints: bps,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Wraps explicit nodes, checking every invariant.
    pub fn from_nodes(dim: usize, nodes: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        ensure(dim >= 3, || format!("dimension must be >= 3, got {dim}"))?;
        let grid = LogRadialGrid {
            dim,
            nodes,
            breakpoints,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        ensure(self.nodes.len() >= 2, || {
            "grid needs at least two nodes".into()
        })?;
        ensure(self.nodes.iter().all(|t| t.is_finite()), || {
            "non-finite node".into()
        })?;
        ensure(self.nodes.windows(2).all(|w| w[0] < w[1]), || {
            "nodes must be strictly increasing".into()
        })?;
        ensure(*self.nodes.last().expect("non-empty") == 0.0, || {
            "last node must be t = 0".into()
        })?;
        for &b in &self.breakpoints {
            if self
                .nodes
                .binary_search_by(|t| t.partial_cmp(&b).expect("finite"))
                .is_err()
            {
                return Err(Error::InvalidInput(format!(
                    "breakpoint {b} is not a grid node"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// True when node `i` sits on a breakpoint.
    pub fn is_breakpoint(&self, i: usize) -> bool {
        let t = self.nodes[i];
        self.breakpoints
            .binary_search_by(|b| b.partial_cmp(&t).expect("finite"))
            .is_ok()
    }

    /// Index of the interval `[t_i, t_{i+1}]` containing `t` (clamped).
    pub fn locate(&self, t: f64) -> usize {
        let n = self.nodes.len();
        if t <= self.nodes[0] {
            return 0;
        }
        if t >= self.nodes[n - 1] {
            return n - 2;
        }
        match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite"))
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        }
    }

    /// Index of the node equal to `t`, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        self.nodes
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite"))
            .ok()
    }

    /// Node ranges `[lo, hi]` between consecutive breakpoints (inclusive).
    pub fn smooth_segments(&self) -> Vec<(usize, usize)> {
        let mut cuts = vec![0];
        for i in 1..self.nodes.len() - 1 {
            if self.is_breakpoint(i) {
                cuts.push(i);
            }
        }
        cuts.push(self.nodes.len() - 1);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Builds a log grid; see [`LogRadialGrid::new`].
pub fn make_log_grid(
    dim: usize,
    t_min: f64,
    points_per_unit_t: f64,
    breakpoints: &[f64],
) -> Result<LogRadialGrid> {
    LogRadialGrid::new(dim, t_min, points_per_unit_t, breakpoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_count() {
        let g = make_log_grid(10, -5.0, 100.0, &[]).unwrap();
        assert_eq!(g.len(), 501);
        assert_eq!(*g.nodes().last().unwrap(), 0.0);
        assert_eq!(g.t_min(), -5.0);
    }

    #[test]
    fn breakpoint_inserted_exactly() {
        let b = 0.5f64.ln();
        let g = make_log_grid(10, -5.0, 100.0, &[b]).unwrap();
        let i = g.node_index(b).expect("breakpoint is a node");
        assert!(g.t(i) == b);
        assert!(g.is_breakpoint(i));
        assert_eq!(g.smooth_segments().len(), 2);
    }

    #[test]
    fn deep_grid_is_finite() {
        let edges = [-232704.0, -232700.0, -4.119, -3.426, -1.0];
        let g = make_log_grid(10, -232704.0, 4.0, &edges).unwrap();
        assert!(g.nodes().iter().all(|t| t.is_finite()));
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        for e in edges {
            assert!(g.node_index(e).is_some());
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_log_grid(10, 0.0, 10.0, &[]).is_err());
        assert!(make_log_grid(10, f64::NAN, 10.0, &[]).is_err());
        assert!(make_log_grid(10, -1.0, 10.0, &[-2.0]).is_err());
        assert!(make_log_grid(2, -1.0, 10.0, &[]).is_err());
    }

    #[test]
    fn short_segments_keep_two_intervals() {
        let g = make_log_grid(10, -1.0, 1.0, &[-0.5, -0.49]).unwrap();
        for (lo, hi) in g.smooth_segments() {
            assert!(hi - lo >= 2);
        }
    }
}
