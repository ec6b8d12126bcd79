//! Potentials in canonical form `c(t) = r² Ψ(r)`, `t = log r`.

mod interp;
mod oscillatory;
mod table;

pub use interp::{interpolate_smooth_decreasing, Jet, PolySegment};
pub use oscillatory::{
    build_schedule, max_feasible_stages, GapRule, OscillationOptions, OscillationSchedule,
    OscillatoryPotential, Phi, StagePoints,
};
pub use table::TablePotential;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial_core::LogRadialGrid;

/// `2(N-2)`, the level of `Ψ = 2(N-2)/r²` whose solution is `ω = 1/r`.
pub fn borderline_level(dim: usize) -> f64 {
    2.0 * (dim as f64 - 2.0)
}

/// `(N-2)²/4`, the Hardy constant.
pub fn hardy_level(dim: usize) -> f64 {
    let a = dim as f64 - 2.0;
    0.25 * a * a
}

/// Side from which a piecewise level is read at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PotentialForm {
    Zero,
    Borderline,
    Hardy,
    /// `c = 2(N-2) - epsilon`.
    Shifted {
        epsilon: f64,
    },
    /// Borderline level on `[a, b]` (radii), zero elsewhere.
    Window {
        a: f64,
        b: f64,
    },
    /// Piecewise constant: `levels[k]` on `[edges[k-1], edges[k])` in `t`.
    Steps {
        edges: Vec<f64>,
        levels: Vec<f64>,
    },
    Oscillatory(OscillatoryPotential),
    /// `c = (c2 - c1)/(2(N-2)) · c_inner + c1`.
    Blend {
        c1: f64,
        c2: f64,
        inner: Box<PotentialSpec>,
    },
    Table(TablePotential),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub form: PotentialForm,
}

impl PotentialSpec {
    fn checked(dim: usize, form: PotentialForm) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidInput(format!(
                "dimension must be >= 3, got {dim}"
            )));
        }
        Ok(PotentialSpec { dim, form })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::checked(dim, PotentialForm::Zero)
    }

    pub fn borderline(dim: usize) -> Result<Self> {
        Self::checked(dim, PotentialForm::Borderline)
    }

    pub fn hardy(dim: usize) -> Result<Self> {
        Self::checked(dim, PotentialForm::Hardy)
    }

    pub fn shifted(dim: usize, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite shift {epsilon}")));
        }
        Self::checked(dim, PotentialForm::Shifted { epsilon })
    }

    pub fn steps(dim: usize, edges: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != edges.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "steps need one more level than edges, got {} edges and {} levels",
                edges.len(),
                levels.len()
            )));
        }
        if edges.iter().chain(&levels).any(|v| !v.is_finite())
            || !edges.windows(2).all(|w| w[0] < w[1])
        {
            return Err(Error::InvalidInput(
                "step edges must be finite and strictly increasing".into(),
            ));
        }
        Self::checked(dim, PotentialForm::Steps { edges, levels })
    }

    pub fn table(dim: usize, table: TablePotential) -> Result<Self> {
        Self::checked(dim, PotentialForm::Table(table))
    }

    /// Level at `t`; windows are closed intervals and steps are right-continuous.
    pub fn level(&self, t: f64) -> f64 {
        match &self.form {
            PotentialForm::Window { a, b } => {
                let r = t.exp();
                if r >= *a && r <= *b {
                    borderline_level(self.dim)
                } else {
                    0.0
                }
            }
            _ => self.level_side(t, Side::Above),
        }
    }

    /// One-sided level at `t`.
    pub fn level_side(&self, t: f64, side: Side) -> f64 {
        let n = self.dim;
        match &self.form {
            PotentialForm::Zero => 0.0,
            PotentialForm::Borderline => borderline_level(n),
            PotentialForm::Hardy => hardy_level(n),
            PotentialForm::Shifted { epsilon } => borderline_level(n) - epsilon,
            PotentialForm::Window { a, b } => {
                let (ta, tb) = (a.ln(), b.ln());
                let inside = match side {
                    Side::Below => t > ta && t <= tb,
                    Side::Above => t >= ta && t < tb,
                };
                if inside {
                    borderline_level(n)
                } else {
                    0.0
                }
            }
            PotentialForm::Steps { edges, levels } => {
                let k = match side {
                    Side::Below => edges.partition_point(|e| *e < t),
                    Side::Above => edges.partition_point(|e| *e <= t),
                };
                levels[k]
            }
            PotentialForm::Oscillatory(p) => p.level(t),
            PotentialForm::Blend { c1, c2, inner } => {
                let w = (c2 - c1) / borderline_level(n);
                if w == 0.0 {
                    *c1
                } else {
                    w * inner.level_side(t, side) + c1
                }
            }
            PotentialForm::Table(tab) => tab.level(t),
        }
    }

    /// `dc/dt`, one-sided at jumps (zero on constant pieces).
    pub fn level_slope(&self, t: f64, side: Side) -> f64 {
        match &self.form {
            PotentialForm::Oscillatory(p) => p.level_slope(t),
            PotentialForm::Blend { c1, c2, inner } => {
                (c2 - c1) / borderline_level(self.dim) * inner.level_slope(t, side)
            }
            PotentialForm::Table(tab) => tab.level_slope(t),
            _ => 0.0,
        }
    }

    /// `ln Ψ(e^t) = ln c - 2t`; `-∞` where `c = 0`.
    pub fn ln_psi(&self, t: f64, side: Side) -> f64 {
        self.level_side(t, side).ln() - 2.0 * t
    }

    /// Log-radii where the level jumps; grids must contain them as nodes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.form {
            PotentialForm::Window { a, b } => {
                let mut v = Vec::new();
                if *a > 0.0 {
                    v.push(a.ln());
                }
                if *b < 1.0 {
                    v.push(b.ln());
                }
                v
            }
            PotentialForm::Steps { edges, .. } => {
                edges.iter().copied().filter(|e| *e < 0.0).collect()
            }
            PotentialForm::Blend { inner, .. } => inner.breakpoints(),
            PotentialForm::Table(tab) => {
                let t = tab.t();
                [t[0], t[t.len() - 1]]
                    .into_iter()
                    .filter(|x| *x < 0.0)
                    .collect()
            }
            _ => Vec::new(),
        };
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        out.dedup();
        out
    }

    /// Breakpoints plus the smooth joins of constructed levels.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = self.breakpoints();
        match &self.form {
            PotentialForm::Oscillatory(p) => k.extend(p.knots()),
            PotentialForm::Blend { inner, .. } => k.extend(inner.knots()),
            _ => {}
        }
        k.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        k.dedup();
        k
    }

    /// Default truncation depth: ten units below the deepest knot, or `-40`
    /// for levels without knots.
    pub fn default_t_min(&self) -> f64 {
        match self.knots().first() {
            Some(t) => (t - 10.0).min(-10.0),
            None => -40.0,
        }
    }

    /// Checks `0 ≤ c ≤ (N-2)²/4` at every node, both sides of jumps.
    pub fn check_admissible(&self, grid: &LogRadialGrid) -> Result<()> {
        let upper = hardy_level(self.dim);
        for &t in grid.nodes() {
            for side in [Side::Below, Side::Above] {
                let c = self.level_side(t, side);
                if c < 0.0 {
                    return Err(Error::Unsupported(format!(
                        "sign-changing potential (c = {c} at t = {t}); only nonnegative potentials are handled"
                    )));
                }
                if !(c <= upper * (1.0 + 1e-12)) {
                    return Err(Error::Inadmissible {
                        t,
                        c,
                        lower: 0.0,
                        upper,
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks `Ψ > 0` and `Ψ(r_i) > Ψ(r_{i+1})` over consecutive nodes.
    pub fn check_strictly_decreasing(&self, grid: &LogRadialGrid) -> Result<()> {
        let mut prev: Option<(f64, f64)> = None;
        for &t in grid.nodes() {
            let lo = self.ln_psi(t, Side::Below);
            let hi = self.ln_psi(t, Side::Above);
            if !(lo > f64::NEG_INFINITY && hi > f64::NEG_INFINITY) {
                return Err(Error::InvalidInput(format!(
                    "potential vanishes at t = {t}"
                )));
            }
            if let Some((tp, lp)) = prev {
                if !(lo < lp) {
                    return Err(Error::InvalidInput(format!(
                        "Ψ is not strictly decreasing between t = {tp} and t = {t}"
                    )));
                }
            }
            if hi > lo {
                return Err(Error::InvalidInput(format!("Ψ jumps upward at t = {t}")));
            }
            prev = Some((t, hi));
        }
        Ok(())
    }

    /// Largest level over the grid nodes (both sides of jumps).
    pub fn max_level(&self, grid: &LogRadialGrid) -> f64 {
        grid.nodes()
            .iter()
            .flat_map(|&t| {
                [
                    self.level_side(t, Side::Below),
                    self.level_side(t, Side::Above),
                ]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn schedule(&self) -> Option<&OscillationSchedule> {
        match &self.form {
            PotentialForm::Oscillatory(p) => Some(&p.schedule),
            PotentialForm::Blend { inner, .. } => inner.schedule(),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.form {
            PotentialForm::Zero => "zero",
            PotentialForm::Borderline => "borderline",
            PotentialForm::Hardy => "hardy",
            PotentialForm::Shifted { .. } => "shifted",
            PotentialForm::Window { .. } => "window",
            PotentialForm::Steps { .. } => "steps",
            PotentialForm::Oscillatory(_) => "oscillatory",
            PotentialForm::Blend { .. } => "blend",
            PotentialForm::Table(_) => "table",
        }
    }
}

/// The window `Ψ_{A,B}`: borderline level on `[A, B]`, zero elsewhere.
/// `A = 0, B = 1` is the plain borderline level.
pub fn window_potential(a: f64, b: f64, dim: usize) -> Result<PotentialSpec> {
    if dim < 10 {
        return Err(Error::InvalidInput(format!(
            "window potentials need N >= 10 so that 2(N-2) <= (N-2)^2/4, got N = {dim}"
        )));
    }
    if !(a.is_finite() && b.is_finite()) || a < 0.0 || !(a < b) || b > 1.0 {
        return Err(Error::InvalidInput(format!(
            "window needs 0 <= A < B <= 1, got A = {a}, B = {b}"
        )));
    }
    if a == 0.0 {
        if b == 1.0 {
            return PotentialSpec::borderline(dim);
        }
        return PotentialSpec::steps(dim, vec![b.ln()], vec![borderline_level(dim), 0.0]);
    }
    PotentialSpec::checked(dim, PotentialForm::Window { a, b })
}

/// Oscillatory level for target `φ`; zero stages give the borderline level.
pub fn build_oscillatory(
    phi: Phi,
    dim: usize,
    options: OscillationOptions,
) -> Result<(PotentialSpec, Option<OscillationSchedule>)> {
    match build_schedule(phi, dim, options)? {
        None => Ok((PotentialSpec::borderline(dim)?, None)),
        Some(p) => {
            let sched = p.schedule.clone();
            Ok((
                PotentialSpec::checked(dim, PotentialForm::Oscillatory(p))?,
                Some(sched),
            ))
        }
    }
}

/// `Φ = (C2 - C1)/(2(N-2)) Ψ + C1/r²`.
pub fn blend(c1: f64, c2: f64, inner: PotentialSpec, dim: usize) -> Result<PotentialSpec> {
    if inner.dim != dim {
        return Err(Error::InvalidInput(format!(
            "inner potential has N = {}, expected {dim}",
            inner.dim
        )));
    }
    let (lo, hi) = (borderline_level(dim), hardy_level(dim));
    if !(c2 >= lo && c2 <= hi) {
        return Err(Error::InvalidInput(format!(
            "C2 = {c2} outside [2(N-2), (N-2)^2/4] = [{lo}, {hi}]"
        )));
    }
    if !(c1 >= 0.0 && c1 <= c2) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= C1 <= C2, got C1 = {c1}, C2 = {c2}"
        )));
    }
    PotentialSpec::checked(
        dim,
        PotentialForm::Blend {
            c1,
            c2,
            inner: Box::new(inner),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_levels() {
        let w = window_potential(0.25, 0.5, 10).unwrap();
        assert_eq!(w.level(0.3f64.ln()), 16.0);
        assert_eq!(w.level(0.6f64.ln()), 0.0);
        assert_eq!(w.level_side(0.25f64.ln(), Side::Below), 0.0);
        assert_eq!(w.level_side(0.25f64.ln(), Side::Above), 16.0);
        assert_eq!(
            window_potential(0.0, 1.0, 10).unwrap().form,
            PotentialForm::Borderline
        );
        assert!(window_potential(0.25, 0.5, 9).is_err());
        let deep = window_potential(0.5 * (-8f64).exp(), 0.5, 10).unwrap();
        let bp = deep.breakpoints();
        assert!((bp[0] + 8.693147180559945).abs() < 1e-12);
        assert!((bp[1] + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn blend_identities() {
        let (inner, sched) =
            build_oscillatory(Phi::borderline(10), 10, OscillationOptions::default()).unwrap();
        let sched = sched.unwrap();
        let b = blend(8.0, 16.0, inner, 10).unwrap();
        for s in &sched.stages {
            assert_eq!(b.level(s.tx), 16.0);
            let expect = 8.0 + 8.0 / (s.n + 1) as f64;
            assert!((b.level(s.ty) - expect).abs() < 1e-12);
        }
        let flat = blend(16.0, 16.0, PotentialSpec::zero(10).unwrap(), 10).unwrap();
        assert_eq!(flat.level(-3.0), 16.0);
        assert!(blend(9.0, 8.0, PotentialSpec::zero(10).unwrap(), 10).is_err());
        assert!(blend(8.0, 30.0, PotentialSpec::zero(10).unwrap(), 10).is_err());
    }

    #[test]
    fn zero_stages_is_borderline() {
        let (p, s) = build_oscillatory(
            Phi::inv_r2(),
            10,
            OscillationOptions {
                stages: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(p.form, PotentialForm::Borderline);
        assert!(s.is_none());
    }

    #[test]
    fn json_round_trip() {
        let (p, _) = build_oscillatory(Phi::inv_r2(), 10, OscillationOptions::default()).unwrap();
        let b = blend(8.0, 16.0, p, 10).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let back: PotentialSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        let tab: PotentialSpec =
            serde_json::from_str(r#"{"dim":12,"form":"table","t":[-5,0],"c":[25,25]}"#).unwrap();
        assert_eq!(tab.level(-2.0), 25.0);
    }

    #[test]
    fn admissibility_gate() {
        let g = crate::radial_core::make_log_grid(10, -5.0, 4.0, &[]).unwrap();
        assert!(PotentialSpec::hardy(10)
            .unwrap()
            .check_admissible(&g)
            .is_ok());
        let bad = PotentialSpec::steps(10, vec![-2.0], vec![17.0, 0.0]).unwrap();
        assert!(matches!(
            bad.check_admissible(&g),
            Err(Error::Inadmissible { .. })
        ));
        let neg = PotentialSpec::shifted(10, 20.0).unwrap();
        assert!(matches!(
            neg.check_admissible(&g),
            Err(Error::Unsupported(_))
        ));
    }
}
