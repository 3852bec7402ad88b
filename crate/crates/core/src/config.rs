//! Simulation configuration.

use crate::error::{Error, Result};
use crate::vec2::Vec2;
use std::f64::consts::TAU;

/// Resolution below which fixed-step integration of the oscillatory loop is
/// not trusted for reported results.
pub const PRODUCTION_MIN_STEPS_PER_PERIOD: u32 = 100;

/// Parameters of a single closed-loop or averaged run.
///
/// The heading turns at the constant rate `heading_rate` (the vehicle's spin
/// frequency); the dither frequency is always the integer multiple
/// `k * heading_rate` and is derived, never stored.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub x0: Vec2,
    pub t0: f64,
    pub t_end: f64,
    /// Spin rate of the heading (rad/s), strictly positive.
    pub heading_rate: f64,
    /// Dither-to-heading frequency ratio, an integer >= 2.
    pub k: u32,
    /// Initial heading angle at `t0`.
    pub theta0: f64,
    /// Fixed integration steps per dither period.
    pub steps_per_fast_period: u32,
}

impl SimConfig {
    pub fn validated(self) -> Result<SimConfig> {
        if !self.x0.is_finite() {
            return Err(Error::NonFinite { context: "x0" });
        }
        if !(self.t0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t0",
                value: self.t0,
                reason: "start time must be >= 0",
            });
        }
        if !(self.t_end > self.t0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                reason: "horizon must be finite and satisfy t_end > t0",
            });
        }
        if !(self.heading_rate > 0.0) || !self.heading_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "heading_rate",
                value: self.heading_rate,
                reason: "heading rate must be positive and finite",
            });
        }
        if self.k < 2 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: self.k as f64,
                reason: "frequency ratio must be an integer >= 2",
            });
        }
        if self.steps_per_fast_period < 1 {
            return Err(Error::InvalidParameter {
                name: "steps_per_fast_period",
                value: self.steps_per_fast_period as f64,
                reason: "need at least one step per dither period",
            });
        }
        if !self.theta0.is_finite() {
            return Err(Error::NonFinite { context: "theta0" });
        }
        Ok(self)
    }

    /// Dither frequency `k * heading_rate`.
    pub fn omega(&self) -> f64 {
        self.k as f64 * self.heading_rate
    }

    /// Fixed integration step.
    pub fn step(&self) -> f64 {
        TAU / self.omega() / self.steps_per_fast_period as f64
    }

    /// Heading angle at time `t`.
    pub fn heading(&self, t: f64) -> f64 {
        self.theta0 + self.heading_rate * (t - self.t0)
    }

    pub fn is_production_grade(&self) -> bool {
        self.steps_per_fast_period >= PRODUCTION_MIN_STEPS_PER_PERIOD
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        SimConfig {
            x0: Vec2::new(-1.0, 1.0),
            t0: 0.0,
            t_end: 100.0,
            heading_rate: 5.0,
            k: 10,
            theta0: 0.0,
            steps_per_fast_period: 200,
        }
    }

    #[test]
    fn derived_frequency() {
        let c = base().validated().unwrap();
        assert_eq!(c.omega(), 50.0);
        assert!((c.step() - TAU / 50.0 / 200.0).abs() < 1e-18);
        assert!(c.is_production_grade());
    }

    #[test]
    fn rejects_small_ratio() {
        let mut c = base();
        c.k = 1;
        assert!(c.validated().is_err());
    }

    #[test]
    fn rejects_backwards_window() {
        let mut c = base();
        c.t_end = c.t0;
        assert!(c.validated().is_err());
    }

    #[test]
    fn rejects_negative_start() {
        let mut c = base();
        c.t0 = -1.0;
        c.t_end = 1.0;
        assert!(c.validated().is_err());
    }
}
