//! Time-varying quadratic cost centered on the target path.
//!
//! `J(x, t) = kappa * |x - gamma(t)|^2`. The minimizer at each instant is the
//! target itself, so sublevel sets are disks around `gamma(t)`.

use crate::error::{Error, Result};
use crate::target::TargetPath;
use crate::vec2::Vec2;

#[derive(Debug, Clone)]
pub struct CostFunction {
    kappa: f64,
    path: TargetPath,
}

impl CostFunction {
    pub fn new(kappa: f64, path: TargetPath) -> Result<CostFunction> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: kappa,
                reason: "cost curvature must be positive and finite",
            });
        }
        Ok(CostFunction { kappa, path })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn path(&self) -> &TargetPath {
        &self.path
    }

    /// Vector from the target to `x`.
    pub fn offset(&self, x: Vec2, t: f64) -> Result<Vec2> {
        Ok(x - self.path.eval(t)?)
    }

    pub fn eval(&self, x: Vec2, t: f64) -> Result<f64> {
        Ok(self.kappa * self.offset(x, t)?.norm_sq())
    }

    /// Spatial gradient `2 kappa (x - gamma(t))`.
    pub fn gradient(&self, x: Vec2, t: f64) -> Result<Vec2> {
        Ok(self.offset(x, t)? * (2.0 * self.kappa))
    }
}

/// Family of sublevel sets `{ x : J(x, t) <= lambda }`, one disk per instant.
#[derive(Debug, Clone)]
pub struct LevelSetFamily {
    cost: CostFunction,
    lambda: f64,
}

impl LevelSetFamily {
    pub fn new(cost: CostFunction, lambda: f64) -> Result<LevelSetFamily> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "level must be positive and finite",
            });
        }
        Ok(LevelSetFamily { cost, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    /// Disk radius, identical for every `t`.
    pub fn radius(&self) -> f64 {
        (self.lambda / self.cost.kappa()).sqrt()
    }

    pub fn center(&self, t: f64) -> Result<Vec2> {
        self.cost.path().eval(t)
    }

    pub fn contains(&self, x: Vec2, t: f64) -> Result<bool> {
        Ok(self.cost.eval(x, t)? <= self.lambda)
    }
}
