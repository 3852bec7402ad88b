//! Recorded simulation output.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// One recorded instant of a run.
///
/// `cost` and `err` are redundant by construction (`cost = kappa * err^2`);
/// both are kept because downstream consumers want each directly.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub t: f64,
    pub x: Vec2,
    pub theta: f64,
    pub u: f64,
    pub cost: f64,
    pub err: f64,
}

/// Uniformly sampled trajectory with strictly increasing times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<Sample>,
    step: f64,
}

/// Slack allowed when checking uniform spacing; times are generated as
/// `t0 + n * h`, so only accumulated representation error shows up here.
const STEP_TOL: f64 = 1e-9;

/// Relative consistency required between recorded cost and squared error.
const COST_ERR_TOL: f64 = 1e-12;

impl Trajectory {
    pub fn from_samples(samples: Vec<Sample>, step: f64, kappa: f64) -> Result<Trajectory> {
        if samples.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                reason: "sampling step must be positive",
            });
        }
        for pair in samples.windows(2) {
            let dt = pair[1].t - pair[0].t;
            if !(dt > 0.0) || (dt - step).abs() > STEP_TOL * step.max(1.0) {
                return Err(Error::BadTrajectory(format!(
                    "non-uniform sampling: dt = {dt} where step = {step}"
                )));
            }
        }
        for s in &samples {
            let expect = kappa * s.err * s.err;
            if (s.cost - expect).abs() > COST_ERR_TOL * s.cost.abs().max(1.0) {
                return Err(Error::BadTrajectory(format!(
                    "cost/error mismatch at t = {}: cost = {} but kappa*err^2 = {}",
                    s.t, s.cost, expect
                )));
            }
        }
        Ok(Trajectory { samples, step })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }
}
