//! Multi-stage oscillating potentials.
//!
//! The level `c(t) = r² Ψ(r)` sits on the borderline value `2(N-2)` except on
//! finitely many dips. Stage `n` owns the log-radii
//! `tx_{n+1} < ty_n < tg_n < tx_n` with `tg_n = tx_n - e^{-3 tx_n}` (the gap
//! `x e^{-1/x³}`) and dips to `c(ty_n) = y_n² φ(y_n)/(n+1)`.
//!
//! Internally the level is stored as a deficit `d(t) = ln(2(N-2)/c(t)) ≥ 0`.
//! `Ψ = c e^{-2t}` is strictly decreasing in `r` exactly when `d' > -2`, so
//! each dip is a smooth rise of `d` on `[tx_{n+1}, ty_n]` followed by a
//! descent on `[ty_n, tg_n]` whose slope never reaches `-2`.

use serde::{Deserialize, Serialize};

use super::interp::{flat_jet, interpolate_smooth_decreasing, sloped_jet, PolySegment};
use crate::error::{Error, Result};

/// Target function `φ` of the construction, as `ln φ(t)` with `t = log r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    /// `φ(r) = scale · r^{-exponent}`.
    Power { exponent: f64, scale: f64 },
    /// `φ(r) = scale · r^{-exponent} (1 - log r)`.
    LogPower { exponent: f64, scale: f64 },
    /// `φ(r) = scale · r^{-exponent} (1 + amplitude · sin(frequency · log r))`.
    Modulated {
        exponent: f64,
        scale: f64,
        amplitude: f64,
        frequency: f64,
    },
}

impl Phi {
    pub fn inv_r2() -> Self {
        Phi::Power {
            exponent: 2.0,
            scale: 1.0,
        }
    }

    pub fn inv_r() -> Self {
        Phi::Power {
            exponent: 1.0,
            scale: 1.0,
        }
    }

    /// `2(N-2)/r²`, the largest target that is not capped.
    pub fn borderline(dim: usize) -> Self {
        Phi::Power {
            exponent: 2.0,
            scale: 2.0 * (dim as f64 - 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (exponent, scale) = match *self {
            Phi::Power { exponent, scale } | Phi::LogPower { exponent, scale } => (exponent, scale),
            Phi::Modulated {
                exponent,
                scale,
                amplitude,
                frequency,
            } => {
                if !(amplitude.abs() < 1.0) || !frequency.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "modulated phi needs |amplitude| < 1 and finite frequency, got {amplitude}, {frequency}"
                    )));
                }
                (exponent, scale)
            }
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "phi scale must be positive, got {scale}"
            )));
        }
        let unbounded =
            exponent > 0.0 || matches!(self, Phi::LogPower { exponent, .. } if *exponent >= 0.0);
        if !exponent.is_finite() || !unbounded {
            return Err(Error::InvalidInput(format!(
                "phi must blow up as r -> 0, got exponent {exponent}"
            )));
        }
        Ok(())
    }

    /// `ln φ(e^t)` for `t < 0`.
    pub fn ln_value(&self, t: f64) -> f64 {
        match *self {
            Phi::Power { exponent, scale } => scale.ln() - exponent * t,
            Phi::LogPower { exponent, scale } => scale.ln() - exponent * t + (1.0 - t).ln(),
            Phi::Modulated {
                exponent,
                scale,
                amplitude,
                frequency,
            } => scale.ln() - exponent * t + (amplitude * (frequency * t).sin()).ln_1p(),
        }
    }

    /// `ln(r² φ(r))` at `r = e^t`, evaluated without the `2t` cancellation.
    pub fn ln_r2_value(&self, t: f64) -> f64 {
        match *self {
            Phi::Power { exponent, scale } => scale.ln() + (2.0 - exponent) * t,
            Phi::LogPower { exponent, scale } => scale.ln() + (2.0 - exponent) * t + (1.0 - t).ln(),
            Phi::Modulated {
                exponent,
                scale,
                amplitude,
                frequency,
            } => scale.ln() + (2.0 - exponent) * t + (amplitude * (frequency * t).sin()).ln_1p(),
        }
    }

    /// True when `φ` is nonincreasing in `r`, so the selection inequality
    /// holds on a half-line in `t`.
    pub fn is_monotone(&self) -> bool {
        match *self {
            Phi::Power { .. } | Phi::LogPower { .. } => true,
            Phi::Modulated {
                exponent,
                amplitude,
                frequency,
                ..
            } => (amplitude * frequency).abs() <= exponent * (1.0 - amplitude.abs()),
        }
    }
}

/// How the gap radius `g_n` follows from `x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GapRule {
    /// `g = x e^{-1/x³}`.
    Exact,
    /// `g = x e^{-log_ratio}`, for experiments with more stages.
    Ratio { log_ratio: f64 },
}

impl GapRule {
    fn tg(&self, tx: f64) -> f64 {
        match *self {
            GapRule::Exact => tx - (-3.0 * tx).exp(),
            GapRule::Ratio { log_ratio } => tx - log_ratio,
        }
    }
}

/// Tunable rules of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationOptions {
    pub stages: usize,
    /// Derivative matching order `k` of the joins (polynomials of degree `2k+1`).
    pub order: usize,
    pub gap: GapRule,
    /// `y_n = y_fraction · y_max`.
    pub y_fraction: f64,
    /// `x_{n+1} = x_fraction · y_n`.
    pub x_fraction: f64,
}

impl Default for OscillationOptions {
    fn default() -> Self {
        OscillationOptions {
            stages: 2,
            order: 2,
            gap: GapRule::Exact,
            y_fraction: 0.5,
            x_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StagePoints {
    pub n: usize,
    pub tx: f64,
    pub tg: f64,
    pub ty: f64,
    /// `ln y_max`, the selection boundary before applying `y_fraction`.
    pub ty_max: f64,
    /// `ln φ̄(y_n)` where `φ̄ = min(φ, 2(N-2)/r²)`.
    pub ln_phi_y: f64,
    /// Deficit `ln(2(N-2)/c(ty))`.
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSchedule {
    pub dim: usize,
    pub phi: Phi,
    pub options: OscillationOptions,
    pub stages: Vec<StagePoints>,
    /// `ln x_{K+1}`; the level stays borderline below it.
    pub tail_tx: f64,
}

impl OscillationSchedule {
    fn borderline(&self) -> f64 {
        2.0 * (self.dim as f64 - 2.0)
    }

    /// `ln φ̄(t)` with the cap `2(N-2)/r²`.
    pub fn ln_phi_capped(&self, t: f64) -> f64 {
        self.phi.ln_value(t).min(self.borderline().ln() - 2.0 * t)
    }

    /// `ln(r² φ̄(r))`, at most `ln 2(N-2)`.
    pub fn ln_r2_phi_capped(&self, t: f64) -> f64 {
        self.phi.ln_r2_value(t).min(self.borderline().ln())
    }

    /// Log-domain margin of the selection inequality
    /// `φ̄(y) > (n+1) 2(N-2) / g_n²`.
    pub fn selection_margin(&self, n: usize, tg: f64, t: f64) -> f64 {
        self.ln_phi_capped(t) - (((n + 1) as f64) * self.borderline()).ln() + 2.0 * tg
    }

    /// Checks the ordering chain and the selection inequality on the stored
    /// log-values.
    pub fn check(&self) -> Result<()> {
        for (k, s) in self.stages.iter().enumerate() {
            let next_tx = self.stages.get(k + 1).map_or(self.tail_tx, |n| n.tx);
            if !(next_tx < s.ty && s.ty < s.tg && s.tg < s.tx) {
                return Err(Error::SelectionFailed {
                    stage: s.n,
                    reason: format!(
                        "ordering tx' < ty < tg < tx violated: {next_tx}, {}, {}, {}",
                        s.ty, s.tg, s.tx
                    ),
                });
            }
            if self.selection_margin(s.n, s.tg, s.ty) <= 0.0 {
                return Err(Error::SelectionFailed {
                    stage: s.n,
                    reason: "selection inequality fails at y_n".into(),
                });
            }
        }
        Ok(())
    }
}

/// Oscillating level with its deficit segments (sorted, disjoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatoryPotential {
    pub schedule: OscillationSchedule,
    pub segments: Vec<PolySegment>,
}

impl OscillatoryPotential {
    fn segment(&self, t: f64) -> Option<&PolySegment> {
        let idx = self.segments.partition_point(|s| s.t0 <= t);
        let s = self.segments.get(idx.checked_sub(1)?)?;
        (t <= s.t1).then_some(s)
    }

    pub fn deficit(&self, t: f64) -> f64 {
        self.segment(t).map_or(0.0, |s| s.eval(t).max(0.0))
    }

    pub fn deficit_slope(&self, t: f64) -> f64 {
        self.segment(t).map_or(0.0, |s| s.eval_slope(t))
    }

    pub fn level(&self, t: f64) -> f64 {
        self.schedule.borderline() * (-self.deficit(t)).exp()
    }

    pub fn level_slope(&self, t: f64) -> f64 {
        -self.level(t) * self.deficit_slope(t)
    }

    /// Segment end points, i.e. where the level is joined with finite smoothness.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.segments.iter().flat_map(|s| [s.t0, s.t1]).collect();
        k.extend(self.schedule.stages.iter().map(|s| s.tx));
        k.push(self.schedule.tail_tx);
        k.retain(|t| *t < 0.0);
        k.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        k.dedup();
        k
    }
}

const SCAN_STEP: f64 = 1.0 / 16.0;
const SCAN_MAX_STEPS: usize = 1 << 22;

/// `ln y_max` for stage `n`: the largest `t ≤ tg` where the selection
/// margin is positive.
fn selection_boundary(sched: &OscillationSchedule, n: usize, tg: f64) -> Result<f64> {
    let g = |t: f64| sched.selection_margin(n, tg, t);
    let fail = |reason: String| Error::SelectionFailed { stage: n, reason };
    let (mut lo, mut hi) = if sched.phi.is_monotone() {
        let mut step = 1.0;
        loop {
            let t = tg - step;
            if !t.is_finite() || step > 1e300 {
                return Err(fail("phi never exceeds the stage threshold".into()));
            }
            if g(t) > 0.0 {
                break (t, tg - step / 2.0);
            }
            step *= 2.0;
        }
    } else {
        let mut prev = tg;
        let mut found = None;
        for k in 1..=SCAN_MAX_STEPS {
            let t = tg - k as f64 * SCAN_STEP;
            if g(t) > 0.0 {
                found = Some((t, prev));
                break;
            }
            prev = t;
        }
        found.ok_or_else(|| {
            fail(format!(
                "no admissible y_n within {} units of log-radius",
                SCAN_MAX_STEPS as f64 * SCAN_STEP
            ))
        })?
    };
    if g(hi) > 0.0 {
        hi = tg;
    }
    // invariant: g(lo) > 0 >= g(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Builds the deficit segments of one dip on `[tx_next, tg]`.
fn dip_segments(
    tx_next: f64,
    ty: f64,
    tg: f64,
    deficit: f64,
    order: usize,
) -> Result<Vec<PolySegment>> {
    let mut out = Vec::with_capacity(4);
    out.push(interpolate_smooth_decreasing(
        &flat_jet(tx_next, 0.0, order),
        &flat_jet(ty, deficit, order),
    )?);

    // descent: d' = -(D/L) w with w a flat-top bump of unit mean, height h
    let len = tg - ty;
    let rho = deficit / len;
    debug_assert!(rho < 2.0);
    let sigma = (0.5 * (rho + 2.0)).min(2.0 * rho);
    let h = sigma / rho;
    let delta = 1.0 - 1.0 / h;
    let ramp = delta * len;
    let t_a = ty + ramp;
    let t_b = tg - ramp;
    let d_a = deficit - 0.5 * sigma * ramp;
    let d_b = 0.5 * sigma * ramp;
    out.push(interpolate_smooth_decreasing(
        &flat_jet(ty, deficit, order),
        &sloped_jet(t_a, d_a, -sigma, order),
    )?);
    if t_b - t_a > 1e-12 * len {
        out.push(PolySegment {
            t0: t_a,
            t1: t_b,
            coeffs: vec![d_a, d_b - d_a],
        });
    }
    let start = if t_b - t_a > 1e-12 * len { t_b } else { t_a };
    let d_start = if t_b - t_a > 1e-12 * len { d_b } else { d_a };
    out.push(interpolate_smooth_decreasing(
        &sloped_jet(start, d_start, -sigma, order),
        &flat_jet(tg, 0.0, order),
    )?);
    Ok(out)
}

/// Runs the stage recursion from `x₁ = 1`. Returns `None` for `K = 0`.
pub fn build_schedule(
    phi: Phi,
    dim: usize,
    options: OscillationOptions,
) -> Result<Option<OscillatoryPotential>> {
    if dim < 10 {
        return Err(Error::InvalidInput(format!(
            "oscillatory construction needs N >= 10, got {dim}"
        )));
    }
    phi.validate()?;
    if !(1..=4).contains(&options.order) {
        return Err(Error::InvalidInput(format!(
            "join order must be in 1..=4, got {}",
            options.order
        )));
    }
    for (name, v) in [
        ("y_fraction", options.y_fraction),
        ("x_fraction", options.x_fraction),
    ] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidInput(format!(
                "{name} must lie in (0, 1), got {v}"
            )));
        }
    }
    if let GapRule::Ratio { log_ratio } = options.gap {
        if !(log_ratio > 0.0 && log_ratio.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gap log-ratio must be positive, got {log_ratio}"
            )));
        }
    }
    if options.stages == 0 {
        return Ok(None);
    }
    let mut sched = OscillationSchedule {
        dim,
        phi,
        options,
        stages: Vec::new(),
        tail_tx: 0.0,
    };
    let borderline = sched.borderline();
    let mut tx = 0.0f64;
    let mut segments = Vec::new();
    for n in 1..=options.stages {
        let tg = options.gap.tg(tx);
        if !tg.is_finite() {
            return Err(Error::TooManyStages {
                stage: n,
                max_stages: n - 1,
            });
        }
        let ty_max = selection_boundary(&sched, n, tg)?;
        let mut ty = ty_max + options.y_fraction.ln();
        let mut frac = options.y_fraction;
        while sched.selection_margin(n, tg, ty) <= 0.0 {
            // only reachable for non-monotone φ
            frac = 0.5 * (1.0 + frac);
            if frac >= 1.0 - 1e-15 {
                return Err(Error::SelectionFailed {
                    stage: n,
                    reason: "no interior y_n below y_max".into(),
                });
            }
            ty = ty_max + frac.ln();
        }
        let ln_phi_y = sched.ln_phi_capped(ty);
        let deficit = (((n + 1) as f64) * borderline).ln() - sched.ln_r2_phi_capped(ty);
        let tx_next = ty + options.x_fraction.ln();
        segments.extend(dip_segments(tx_next, ty, tg, deficit, options.order)?);
        sched.stages.push(StagePoints {
            n,
            tx,
            tg,
            ty,
            ty_max,
            ln_phi_y,
            deficit,
        });
        tx = tx_next;
    }
    sched.tail_tx = tx;
    sched.check()?;
    segments.sort_by(|a, b| a.t0.partial_cmp(&b.t0).expect("finite"));
    Ok(Some(OscillatoryPotential {
        schedule: sched,
        segments,
    }))
}

/// Largest stage count whose gap is representable under `gap` starting at `x₁ = 1`.
pub fn max_feasible_stages(phi: Phi, dim: usize, gap: GapRule) -> usize {
    let mut k = 0;
    loop {
        let options = OscillationOptions {
            stages: k + 1,
            gap,
            ..Default::default()
        };
        match build_schedule(phi, dim, options) {
            Ok(_) if k < 64 => k += 1,
            _ => return k,
        }
    }
}
