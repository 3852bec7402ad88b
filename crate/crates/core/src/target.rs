//! Target paths the vehicle is asked to follow.
//!
//! A path is a curve `gamma(t)` in the plane together with a bound `nu` on
//! its speed, `sup_t |d gamma / dt| <= nu`. The bound is what the stability
//! analysis consumes; it is computed analytically where the curve is known in
//! closed form and from finite differences (with a safety margin) for
//! tabulated data.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Drifting sinusoid: `gamma(t) = (0.1 t, sin(0.1 t))`.
const LINE_SINE_RATE: f64 = 0.1;

/// Figure-eight (Lissajous) curve constants:
/// `gamma(t) = (0.8 cos(0.025 t) + 0.08, 0.8 sin(0.05 t) + 0.5)`.
const EIGHT_AMP: f64 = 0.8;
const EIGHT_FREQ_X: f64 = 0.025;
const EIGHT_FREQ_Y: f64 = 0.05;
const EIGHT_OFF_X: f64 = 0.08;
const EIGHT_OFF_Y: f64 = 0.5;

/// Safety factor applied on top of the finite-difference speed estimate for
/// tabulated paths.
const TABULATED_NU_MARGIN: f64 = 1.1;

#[derive(Debug, Clone)]
enum PathKind {
    Constant(Vec2),
    LineSine,
    FigureEight,
    /// Piecewise-linear interpolation of `(t, point)` samples with strictly
    /// increasing times.
    Tabulated(Vec<(f64, Vec2)>),
}

#[derive(Debug, Clone)]
pub struct TargetPath {
    kind: PathKind,
    nu_bound: f64,
}

impl TargetPath {
    pub fn constant(point: Vec2) -> Result<TargetPath> {
        if !point.is_finite() {
            return Err(Error::NonFinite {
                context: "constant target point",
            });
        }
        Ok(TargetPath {
            kind: PathKind::Constant(point),
            nu_bound: 0.0,
        })
    }

    pub fn line_sine() -> TargetPath {
        // |gamma'| = 0.1 sqrt(1 + cos^2(0.1 t)) peaks where cos^2 = 1.
        TargetPath {
            kind: PathKind::LineSine,
            nu_bound: LINE_SINE_RATE * 2.0_f64.sqrt(),
        }
    }

    pub fn figure_eight() -> TargetPath {
        // Component rates 0.02 and 0.04 peak simultaneously: whenever the
        // slow phase sits at an odd multiple of pi/2 the fast phase sits at a
        // multiple of pi, so the bound sqrt(0.02^2 + 0.04^2) is attained.
        let vx = EIGHT_AMP * EIGHT_FREQ_X;
        let vy = EIGHT_AMP * EIGHT_FREQ_Y;
        TargetPath {
            kind: PathKind::FigureEight,
            nu_bound: (vx * vx + vy * vy).sqrt(),
        }
    }

    pub fn tabulated(samples: Vec<(f64, Vec2)>) -> Result<TargetPath> {
        if samples.len() < 2 {
            return Err(Error::Empty("tabulated path needs at least two samples"));
        }
        let mut nu = 0.0_f64;
        for w in samples.windows(2) {
            let (t0, p0) = w[0];
            let (t1, p1) = w[1];
            if !(t1 > t0) {
                return Err(Error::BadTrajectory(format!(
                    "tabulated times must be strictly increasing (got {t0} then {t1})"
                )));
            }
            if !p0.is_finite() || !p1.is_finite() || !t0.is_finite() || !t1.is_finite() {
                return Err(Error::NonFinite {
                    context: "tabulated path sample",
                });
            }
            nu = nu.max((p1 - p0).norm() / (t1 - t0));
        }
        Ok(TargetPath {
            kind: PathKind::Tabulated(samples),
            nu_bound: nu * TABULATED_NU_MARGIN,
        })
    }

    /// Speed bound `nu` valid for every `t` the path accepts.
    pub fn nu_bound(&self) -> f64 {
        self.nu_bound
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, PathKind::Constant(_))
    }

    /// Position of the target at time `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<Vec2> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "target paths are defined for t >= 0",
            });
        }
        match &self.kind {
            PathKind::Constant(p) => Ok(*p),
            PathKind::LineSine => Ok(Vec2::new(
                LINE_SINE_RATE * t,
                (LINE_SINE_RATE * t).sin(),
            )),
            PathKind::FigureEight => Ok(Vec2::new(
                EIGHT_AMP * (EIGHT_FREQ_X * t).cos() + EIGHT_OFF_X,
                EIGHT_AMP * (EIGHT_FREQ_Y * t).sin() + EIGHT_OFF_Y,
            )),
            PathKind::Tabulated(samples) => {
                let lo = samples[0].0;
                let hi = samples[samples.len() - 1].0;
                if t < lo || t > hi {
                    return Err(Error::TimeOutOfRange { t, lo, hi });
                }
                // Index of the first sample with time > t; t lands in the
                // segment just before it.
                let idx = samples.partition_point(|(ts, _)| *ts <= t);
                if idx == samples.len() {
                    return Ok(samples[samples.len() - 1].1);
                }
                let (t0, p0) = samples[idx - 1];
                let (t1, p1) = samples[idx];
                let w = (t - t0) / (t1 - t0);
                Ok(p0 + (p1 - p0) * w)
            }
        }
    }

    /// Exact velocity for the analytic kinds, segment slope for tabulated
    /// data (right-continuous at the knots).
    pub fn velocity(&self, t: f64) -> Result<Vec2> {
        match &self.kind {
            PathKind::Constant(_) => Ok(Vec2::ZERO),
            PathKind::LineSine => Ok(Vec2::new(
                LINE_SINE_RATE,
                LINE_SINE_RATE * (LINE_SINE_RATE * t).cos(),
            )),
            PathKind::FigureEight => Ok(Vec2::new(
                -EIGHT_AMP * EIGHT_FREQ_X * (EIGHT_FREQ_X * t).sin(),
                EIGHT_AMP * EIGHT_FREQ_Y * (EIGHT_FREQ_Y * t).cos(),
            )),
            PathKind::Tabulated(samples) => {
                let lo = samples[0].0;
                let hi = samples[samples.len() - 1].0;
                if t < lo || t > hi {
                    return Err(Error::TimeOutOfRange { t, lo, hi });
                }
                let idx = samples.partition_point(|(ts, _)| *ts <= t).min(samples.len() - 1);
                let (t0, p0) = samples[idx - 1];
                let (t1, p1) = samples[idx];
                Ok((p1 - p0) / (t1 - t0))
            }
        }
    }

    /// Speed bound restricted to a window. Analytic kinds return the global
    /// bound (valid on any window); tabulated paths take the finite-difference
    /// maximum over the window with the same safety margin used at
    /// construction.
    pub fn speed_bound(&self, t0: f64, t_end: f64) -> Result<f64> {
        if !(t_end > t0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: t_end,
                reason: "window must satisfy t_end > t0",
            });
        }
        match &self.kind {
            PathKind::Tabulated(samples) => {
                let mut nu = 0.0_f64;
                for w in samples.windows(2) {
                    let (a, p0) = w[0];
                    let (b, p1) = w[1];
                    if b < t0 || a > t_end {
                        continue;
                    }
                    nu = nu.max((p1 - p0).norm() / (b - a));
                }
                Ok(nu * TABULATED_NU_MARGIN)
            }
            _ => Ok(self.nu_bound),
        }
    }
}
