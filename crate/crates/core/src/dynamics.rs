//! Integration of the oscillatory closed loop and its averaged counterpart,
//! plus the generic averaged-field construction used as a numeric oracle and
//! the one-period solution map with its truncation remainder.

// The 4x4 coefficient sums read clearest with explicit indices.
#![allow(clippy::needless_range_loop)]

use crate::config::SimConfig;
use crate::control::{phi_field, ControlLaw, FD_STEP, ZERO_GUARD_BAND};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::quadrature::{cumulative_simpson, simpson_from_values};
use crate::trajectory::{Sample, Trajectory};
use crate::vec2::Vec2;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

/// States beyond this norm abort a run; the model is only meaningful in a
/// bounded working region and the unbounded law can blow up under bad gains.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Simpson intervals per unit of k for the dither coefficient integrals over
/// one common period (length 2*pi*k): about 2000 nodes per fast oscillation.
const DITHER_GRID_PER_K: usize = 2000;

/// One classical RK4 step of a fallible right-hand side.
pub(crate) fn rk4_step<F>(f: &mut F, t: f64, x: Vec2, h: f64) -> Result<Vec2>
where
    F: FnMut(f64, Vec2) -> Result<Vec2>,
{
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, x + k1 * (0.5 * h))?;
    let k3 = f(t + 0.5 * h, x + k2 * (0.5 * h))?;
    let k4 = f(t + h, x + k3 * h)?;
    Ok(x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0))
}

/// Steps needed to cover `span` with step `h` (the final node may overshoot
/// the nominal end by less than one step).
pub(crate) fn step_count(span: f64, h: f64) -> usize {
    ((span / h - 1e-9).ceil() as usize).max(1)
}

/// The oscillatory vehicle: speed from the control law, heading spinning at
/// the constant configured rate.
#[derive(Debug, Clone)]
pub struct ClosedLoopSystem {
    law: ControlLaw,
    cost: CostFunction,
    config: SimConfig,
}

impl ClosedLoopSystem {
    /// The law and the run configuration each carry the frequency pair
    /// (k, heading rate); they must agree exactly.
    pub fn new(law: ControlLaw, cost: CostFunction, config: SimConfig) -> Result<ClosedLoopSystem> {
        let config = config.validated()?;
        if law.k() != config.k {
            return Err(Error::Mismatch(format!(
                "law has k = {} but config has k = {}",
                law.k(),
                config.k
            )));
        }
        if law.heading_rate() != config.heading_rate {
            return Err(Error::Mismatch(format!(
                "law heading rate {} differs from config heading rate {}",
                law.heading_rate(),
                config.heading_rate
            )));
        }
        if config.x0.norm() > DIVERGENCE_LIMIT {
            return Err(Error::InvalidParameter {
                name: "x0",
                value: config.x0.norm(),
                reason: "initial state outside the working region",
            });
        }
        Ok(ClosedLoopSystem { law, cost, config })
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Control value and state derivative at `(t, x)`.
    pub fn rhs(&self, t: f64, x: Vec2) -> Result<(f64, Vec2)> {
        let j = self.cost.eval(x, t)?;
        let u = self.law.eval_control(t, j);
        let theta = self.config.heading(t);
        Ok((u, Vec2::new(u * theta.cos(), u * theta.sin())))
    }

    pub fn simulate(&self) -> Result<Trajectory> {
        simulate_closed_loop(self)
    }
}

/// Fixed-step RK4 run of the closed loop over the configured window,
/// recording state, heading, control, cost and tracking error at every node.
pub fn simulate_closed_loop(sys: &ClosedLoopSystem) -> Result<Trajectory> {
    let cfg = sys.config();
    let h = cfg.step();
    let n = step_count(cfg.t_end - cfg.t0, h);
    let kappa = sys.cost().kappa();
    let mut field = |t: f64, x: Vec2| sys.rhs(t, x).map(|(_, dx)| dx);

    let mut samples = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    for i in 0..=n {
        let t = cfg.t0 + i as f64 * h;
        let offset = sys.cost().offset(x, t)?;
        let err = offset.norm();
        let j = kappa * offset.norm_sq();
        let u = sys.law().eval_control(t, j);
        samples.push(Sample {
            t,
            x,
            theta: cfg.heading(t),
            u,
            cost: j,
            err,
        });
        if i == n {
            break;
        }
        x = rk4_step(&mut field, t, x, h)?;
        if !x.is_finite() || x.norm() > DIVERGENCE_LIMIT {
            let partial = Trajectory::from_samples(samples, h, kappa)?;
            return Err(Error::Divergence {
                t: t + h,
                limit: DIVERGENCE_LIMIT,
                partial: Box::new(partial),
            });
        }
    }
    Trajectory::from_samples(samples, h, kappa)
}

/// The non-oscillatory system the closed loop approaches as the dither
/// frequency grows: gradient descent on the cost plus the orthogonal
/// rotation field of the law.
#[derive(Debug, Clone)]
pub struct AveragedSystem {
    law: ControlLaw,
    cost: CostFunction,
}

impl AveragedSystem {
    pub fn new(law: ControlLaw, cost: CostFunction) -> AveragedSystem {
        AveragedSystem { law, cost }
    }

    pub fn law(&self) -> &ControlLaw {
        &self.law
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn rhs(&self, t: f64, x: Vec2) -> Result<Vec2> {
        let grad = self.cost.gradient(x, t)?;
        let phi = phi_field(&self.law, &self.cost, x, t)?;
        Ok(phi - grad * self.law.vartheta())
    }

    pub fn simulate(&self, x0: Vec2, t0: f64, t_end: f64, h: f64) -> Result<Trajectory> {
        simulate_averaged(self, x0, t0, t_end, h)
    }
}

/// RK4 run of the averaged flow. Control and heading are not defined for the
/// averaged system; both are recorded as 0.
pub fn simulate_averaged(
    sys: &AveragedSystem,
    x0: Vec2,
    t0: f64,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    if !x0.is_finite() {
        return Err(Error::NonFinite { context: "x0" });
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "step must be positive and finite",
        });
    }
    if !(t_end > t0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "window must have positive length",
        });
    }
    let kappa = sys.cost().kappa();
    // Non-smooth points of the law surface as a time-stamped failure.
    let mut field = |t: f64, x: Vec2| {
        sys.rhs(t, x).map_err(|e| match e {
            Error::GuardBand { .. } | Error::NonFinite { .. } => Error::PhiEvaluation { t },
            other => other,
        })
    };

    let n = step_count(t_end - t0, h);
    let mut samples = Vec::with_capacity(n + 1);
    let mut x = x0;
    for i in 0..=n {
        let t = t0 + i as f64 * h;
        let offset = sys.cost().offset(x, t)?;
        let err = offset.norm();
        samples.push(Sample {
            t,
            x,
            theta: 0.0,
            u: 0.0,
            cost: kappa * offset.norm_sq(),
            err,
        });
        if i == n {
            break;
        }
        x = rk4_step(&mut field, t, x, h)?;
        if !x.is_finite() || x.norm() > DIVERGENCE_LIMIT {
            let partial = Trajectory::from_samples(samples, h, kappa)?;
            return Err(Error::Divergence {
                t: t + h,
                limit: DIVERGENCE_LIMIT,
                partial: Box::new(partial),
            });
        }
    }
    Trajectory::from_samples(samples, h, kappa)
}

/// The four dither waveforms at phase `sigma` (in fast-oscillation radians):
/// index 0 = cos(sigma)cos(sigma/k), 1 = sin(sigma)cos(sigma/k),
/// 2 = cos(sigma)sin(sigma/k), 3 = sin(sigma)sin(sigma/k), each with the
/// fast/slow phase offsets applied.
pub fn dither_value(idx: usize, sigma: f64, k: u32, phase_fast: f64, phase_slow: f64) -> f64 {
    assert!(idx < 4, "dither index out of range");
    let fast = sigma + phase_fast;
    let slow = sigma / k as f64 + phase_slow;
    let a = if idx.is_multiple_of(2) { fast.cos() } else { fast.sin() };
    let b = if idx < 2 { slow.cos() } else { slow.sin() };
    a * b
}

/// Grid of the four dither waveforms over one common period [0, 2*pi*k],
/// plus their running integrals.
fn dither_grids(
    k: u32,
    phase_fast: f64,
    phase_slow: f64,
) -> (usize, f64, [Vec<f64>; 4], [Vec<f64>; 4]) {
    let n = DITHER_GRID_PER_K * k as usize;
    let period = TAU * k as f64;
    let h = period / n as f64;
    let vals: [Vec<f64>; 4] = std::array::from_fn(|j| {
        (0..=n)
            .map(|i| dither_value(j, i as f64 * h, k, phase_fast, phase_slow))
            .collect()
    });
    let cums: [Vec<f64>; 4] = std::array::from_fn(|j| cumulative_simpson(&vals[j], h));
    (n, h, vals, cums)
}

/// Unnormalized coupling integrals over one common period:
/// `C[l][j] = integral_0^{2 pi k} V_l(sigma) v_j(sigma) d sigma` with
/// `V_l` the running integral of `v_l` (l = inner index, j = outer).
pub fn dither_coupling_matrix(k: u32, phase_fast: f64, phase_slow: f64) -> [[f64; 4]; 4] {
    let (n, h, vals, cums) = dither_grids(k, phase_fast, phase_slow);
    let mut c = [[0.0; 4]; 4];
    let mut product = vec![0.0; n + 1];
    for (l, cum) in cums.iter().enumerate() {
        for (j, val) in vals.iter().enumerate() {
            for i in 0..=n {
                product[i] = cum[i] * val[i];
            }
            c[l][j] = simpson_from_values(&product, h);
        }
    }
    c
}

/// Full-period integrals of the four dither waveforms (zero in exact
/// arithmetic; returned for remainder bookkeeping).
pub fn dither_first_order_integrals(k: u32, phase_fast: f64, phase_slow: f64) -> [f64; 4] {
    let (_, h, vals, _) = dither_grids(k, phase_fast, phase_slow);
    std::array::from_fn(|j| simpson_from_values(&vals[j], h))
}

/// Averaging coefficients `nu[i][j]`, the coupling matrix at zero phase
/// normalized by the common period. Cached per k; the matrices are reused
/// heavily by the numeric-oracle comparisons.
pub fn nu_matrix(k: u32) -> [[f64; 4]; 4] {
    static CACHE: OnceLock<Mutex<HashMap<u32, [[f64; 4]; 4]>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(m) = cache.lock().unwrap().get(&k) {
        return *m;
    }
    let c = dither_coupling_matrix(k, 0.0, 0.0);
    let period = TAU * k as f64;
    let mut m = [[0.0; 4]; 4];
    for l in 0..4 {
        for j in 0..4 {
            m[l][j] = c[l][j] / period;
        }
    }
    cache.lock().unwrap().insert(k, m);
    m
}

/// The four control vector fields at a frozen time: shaping values times the
/// common gain factor, components split by heading axis.
fn law_field(law: &ControlLaw, gain: f64, idx: usize, z: f64) -> Vec2 {
    let val = match idx {
        0 | 2 => law.pair().f1(z),
        _ => law.pair().f2(z),
    };
    if idx < 2 {
        Vec2::new(gain * val, 0.0)
    } else {
        Vec2::new(0.0, gain * val)
    }
}

/// Directional derivative of `field(idx)` along `dir` by central differences.
fn lie_derivative<F>(field: &F, idx: usize, x: Vec2, dir: Vec2) -> Result<Vec2>
where
    F: Fn(usize, Vec2) -> Result<Vec2>,
{
    let len = dir.norm();
    if len == 0.0 {
        return Ok(Vec2::ZERO);
    }
    let unit = dir / len;
    let fwd = field(idx, x + unit * FD_STEP)?;
    let back = field(idx, x - unit * FD_STEP)?;
    let d = (fwd - back) / (2.0 * FD_STEP) * len;
    if !d.is_finite() {
        return Err(Error::NonFinite {
            context: "finite-difference Lie derivative",
        });
    }
    Ok(d)
}

/// Generic averaged field assembled from pairwise Lie brackets of the four
/// control fields weighted by the `nu` coefficients. Built without reference
/// to the closed form; agreement with `-vartheta * grad J + Phi` is what the
/// oracle tests check.
pub fn averaged_field_numeric(
    law: &ControlLaw,
    cost: &CostFunction,
    x: Vec2,
    t: f64,
) -> Result<Vec2> {
    let j0 = cost.eval(x, t)?;
    let dist = law.pair().nearest_zero_distance(j0);
    let at_rest = law.pair().f1(j0) == 0.0 && law.pair().f2(j0) == 0.0;
    if dist < ZERO_GUARD_BAND && !at_rest {
        return Err(Error::GuardBand {
            z: j0,
            dist,
            band: ZERO_GUARD_BAND,
        });
    }
    // Nominal gain: the per-law amplitude scale is a closed-loop tuning knob,
    // not part of the averaged model.
    let gain = (law.vartheta() * law.alpha()).sqrt();
    let field = |idx: usize, y: Vec2| -> Result<Vec2> {
        let z = cost.eval(y, t)?;
        Ok(law_field(law, gain, idx, z))
    };
    let nu = nu_matrix(law.k());
    let mut out = Vec2::ZERO;
    for l in 0..4 {
        let gl = field(l, x)?;
        for j in (l + 1)..4 {
            let gj = field(j, x)?;
            let bracket = lie_derivative(&field, j, x, gl)? - lie_derivative(&field, l, x, gj)?;
            out = out + bracket * nu[l][j];
        }
    }
    if !out.is_finite() {
        return Err(Error::NonFinite {
            context: "averaged field assembly",
        });
    }
    Ok(out)
}

/// Exact one-common-period solution map next to its truncated expansion.
///
/// The exact endpoint comes from RK4 at 10x the production resolution. The
/// truncation works in target-relative coordinates xi = x - gamma(t): xi0,
/// minus the target drift over the period, plus the first-order dither
/// integrals, plus the second-order terms with Lie derivatives frozen at
/// xi0. Returns the exact endpoint and the norm of the truncation defect,
/// which shrinks like omega^(-3/2) as the dither speeds up.
pub fn one_period_map(sys: &ClosedLoopSystem, x0: Vec2, t0: f64) -> Result<(Vec2, f64)> {
    let law = sys.law();
    let cost = sys.cost();
    let cfg = sys.config();
    if !x0.is_finite() || !t0.is_finite() || t0 < 0.0 {
        return Err(Error::NonFinite {
            context: "one-period map arguments",
        });
    }
    let j0 = cost.eval(x0, t0)?;
    let dist = law.pair().nearest_zero_distance(j0);
    let at_rest = law.pair().f1(j0) == 0.0 && law.pair().f2(j0) == 0.0;
    if dist < ZERO_GUARD_BAND && !at_rest {
        return Err(Error::GuardBand {
            z: j0,
            dist,
            band: ZERO_GUARD_BAND,
        });
    }

    let omega = law.omega();
    let k = law.k();
    let period = TAU * k as f64 / omega;

    // Exact endpoint, 10x finer than the production step.
    let n_fine = 10 * cfg.steps_per_fast_period as usize * k as usize;
    let h_fine = period / n_fine as f64;
    let mut field = |t: f64, x: Vec2| sys.rhs(t, x).map(|(_, dx)| dx);
    let mut x = x0;
    for i in 0..n_fine {
        let t = t0 + i as f64 * h_fine;
        x = rk4_step(&mut field, t, x, h_fine)?;
        if !x.is_finite() || x.norm() > DIVERGENCE_LIMIT {
            return Err(Error::NonFinite {
                context: "one-period integration",
            });
        }
    }
    let x_exact = x;

    // Truncated expansion. In xi-coordinates the cost loses its explicit
    // time dependence; the closed-loop gain (amplitude scale included) is
    // what multiplies the shaping fields here.
    let kappa = cost.kappa();
    let gain = law.amplitude_scale() * (law.vartheta() * law.alpha()).sqrt();
    let field_xi =
        |idx: usize, xi: Vec2| -> Result<Vec2> { Ok(law_field(law, gain, idx, kappa * xi.norm_sq())) };
    let xi0 = x0 - cost.path().eval(t0)?;

    let phase_fast = (omega * t0).rem_euclid(TAU);
    let phase_slow = cfg.theta0;
    let coupling = dither_coupling_matrix(k, phase_fast, phase_slow);
    let first_order = dither_first_order_integrals(k, phase_fast, phase_slow);

    let drift = cost.path().eval(t0 + period)? - cost.path().eval(t0)?;
    let mut xi = xi0 - drift;
    let sqrt_omega = omega.sqrt();
    for (j, integral) in first_order.iter().enumerate() {
        xi = xi + field_xi(j, xi0)? * (sqrt_omega * integral / omega);
    }
    for l in 0..4 {
        let gl = field_xi(l, xi0)?;
        for j in 0..4 {
            let deriv = lie_derivative(&field_xi, j, xi0, gl)?;
            xi = xi + deriv * (coupling[l][j] / omega);
        }
    }
    let x_trunc = xi + cost.path().eval(t0 + period)?;
    let r_norm = (x_exact - x_trunc).norm();
    Ok((x_exact, r_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{FPair, LawKind};
    use crate::target::TargetPath;

    fn small_config(x0: Vec2, k: u32, heading_rate: f64, t_end: f64) -> SimConfig {
        SimConfig {
            x0,
            t0: 0.0,
            t_end,
            heading_rate,
            k,
            theta0: 0.0,
            steps_per_fast_period: 40,
        }
    }

    #[test]
    fn zero_law_freezes_the_state() {
        let law = ControlLaw::custom(FPair::zero(), 1.0, 10, 5.0).unwrap();
        let cost = CostFunction::new(1.0, TargetPath::constant(Vec2::ZERO).unwrap()).unwrap();
        let sys =
            ClosedLoopSystem::new(law, cost, small_config(Vec2::new(0.3, -0.7), 10, 5.0, 2.0))
                .unwrap();
        let traj = sys.simulate().unwrap();
        for s in traj.samples() {
            assert_eq!(s.x, Vec2::new(0.3, -0.7));
            assert_eq!(s.u, 0.0);
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let make = || {
            let law = ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 5.0).unwrap();
            let cost = CostFunction::new(1.0, TargetPath::line_sine()).unwrap();
            ClosedLoopSystem::new(law, cost, small_config(Vec2::new(-1.0, 1.0), 10, 5.0, 3.0))
                .unwrap()
                .simulate()
                .unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(a.len(), b.len());
        for (sa, sb) in a.samples().iter().zip(b.samples()) {
            assert_eq!(sa.x.x1.to_bits(), sb.x.x1.to_bits());
            assert_eq!(sa.x.x2.to_bits(), sb.x.x2.to_bits());
            assert_eq!(sa.u.to_bits(), sb.u.to_bits());
        }
    }

    #[test]
    fn grid_covers_the_window() {
        let law = ControlLaw::builtin(LawKind::Cont2, 1.0, 10, 5.0).unwrap();
        let cost = CostFunction::new(1.0, TargetPath::constant(Vec2::ZERO).unwrap()).unwrap();
        let cfg = small_config(Vec2::new(1.0, 0.0), 10, 5.0, 1.0);
        let sys = ClosedLoopSystem::new(law, cost, cfg).unwrap();
        let traj = sys.simulate().unwrap();
        let last = traj.last().t;
        assert!(last >= 1.0 - 1e-12 && last < 1.0 + traj.step());
    }

    #[test]
    fn averaged_equilibrium_for_vanishing_law() {
        let law = ControlLaw::builtin(LawKind::Cont4, 1.0, 2, 1.5).unwrap();
        let target = Vec2::new(0.5, 0.7);
        let cost = CostFunction::new(1.0, TargetPath::constant(target).unwrap()).unwrap();
        let sys = AveragedSystem::new(law, cost);
        let traj = sys.simulate(target, 0.0, 5.0, 0.01).unwrap();
        for s in traj.samples() {
            assert_eq!(s.x, target);
        }
    }

    #[test]
    fn divergence_is_reported_with_partial_history() {
        // Unbounded law with a huge gain blows up quickly from far out.
        let law = ControlLaw::builtin(LawKind::Cont1, 1e4, 2, 1.0).unwrap();
        let cost = CostFunction::new(10.0, TargetPath::constant(Vec2::ZERO).unwrap()).unwrap();
        let sys = ClosedLoopSystem::new(
            law,
            cost,
            small_config(Vec2::new(900.0, 0.0), 2, 1.0, 50.0),
        )
        .unwrap();
        match sys.simulate() {
            Err(Error::Divergence { partial, .. }) => assert!(!partial.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn dither_values_at_zero_phase() {
        assert_eq!(dither_value(0, 0.0, 4, 0.0, 0.0), 1.0);
        assert_eq!(dither_value(1, 0.0, 4, 0.0, 0.0), 0.0);
        assert_eq!(dither_value(2, 0.0, 4, 0.0, 0.0), 0.0);
        assert_eq!(dither_value(3, 0.0, 4, 0.0, 0.0), 0.0);
        let sigma = 0.9;
        let v = dither_value(3, sigma, 4, 0.1, 0.2);
        assert!((v - (sigma + 0.1).sin() * (sigma / 4.0 + 0.2).sin()).abs() < 1e-15);
    }

    #[test]
    fn nu_matrix_is_antisymmetric() {
        let nu = nu_matrix(3);
        for l in 0..4 {
            assert!(nu[l][l].abs() < 1e-9);
            for j in 0..4 {
                assert!((nu[l][j] + nu[j][l]).abs() < 1e-9, "({l},{j})");
            }
        }
    }

    #[test]
    fn config_law_mismatch_is_rejected() {
        let law = ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 5.0).unwrap();
        let cost = CostFunction::new(1.0, TargetPath::line_sine()).unwrap();
        let cfg = small_config(Vec2::ZERO, 8, 5.0, 1.0);
        assert!(ClosedLoopSystem::new(law, cost, cfg).is_err());
    }
}
