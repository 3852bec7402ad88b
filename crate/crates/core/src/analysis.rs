//! Tracking metrics, gain-condition validation, and the empirical studies
//! that probe convergence, remainder scaling, and practical stability.

use crate::config::SimConfig;
use crate::control::{ControlLaw, LawKind};
use crate::cost::CostFunction;
use crate::dynamics::{
    one_period_map, rk4_step, step_count, AveragedSystem, ClosedLoopSystem, DIVERGENCE_LIMIT,
};
use crate::error::{Error, Result};
use crate::target::TargetPath;
use crate::trajectory::Trajectory;
use crate::vec2::Vec2;
use std::f64::consts::TAU;
use std::fmt;

/// Cost values at or below this are treated as zero when fitting decay rates.
pub const DECAY_FIT_FLOOR: f64 = 1e-12;

/// Format a real for the flat key-value summaries: 12 significant digits,
/// enough that re-parsing reproduces the printed precision exactly.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

/// Aggregate tracking quality of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Trapezoid integral of the squared tracking error over the window.
    pub accumulated_sq_error: f64,
    /// Trapezoid integral of |u| over the window.
    pub control_effort: f64,
    pub final_error: f64,
    /// Largest error over the last quarter of the window.
    pub max_error_tail: f64,
    /// First time after which the error never again exceeds twice the
    /// tail-window mean; absent when the final sample still does.
    pub settle_time: Option<f64>,
}

impl Metrics {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            (
                "accumulated_sq_error".into(),
                fmt_real(self.accumulated_sq_error),
            ),
            ("control_effort".into(), fmt_real(self.control_effort)),
            ("final_error".into(), fmt_real(self.final_error)),
            ("max_error_tail".into(), fmt_real(self.max_error_tail)),
            (
                "settle_time".into(),
                self.settle_time.map_or("none".into(), fmt_real),
            ),
        ]
    }
}

/// Index of the first sample in the tail window (the last quarter of the
/// sample range, by index).
fn tail_start(len: usize) -> usize {
    (3 * (len - 1)).div_ceil(4)
}

/// Metrics over the recorded samples. Integrals use the trapezoid rule on
/// the recorded grid; the per-sample tracking error is taken as recorded, so
/// this never fails and is exactly stable under integrand-linear resampling.
pub fn compute_metrics(traj: &Trajectory) -> Metrics {
    let s = traj.samples();
    let n = s.len();
    let mut sq = 0.0;
    let mut effort = 0.0;
    for w in s.windows(2) {
        let dt = w[1].t - w[0].t;
        sq += 0.5 * (w[0].err * w[0].err + w[1].err * w[1].err) * dt;
        effort += 0.5 * (w[0].u.abs() + w[1].u.abs()) * dt;
    }
    let tail = &s[tail_start(n)..];
    let max_error_tail = tail.iter().fold(0.0_f64, |m, smp| m.max(smp.err));
    let tail_mean = tail.iter().map(|smp| smp.err).sum::<f64>() / tail.len() as f64;
    let threshold = 2.0 * tail_mean;
    let mut settle_idx = 0;
    for (i, smp) in s.iter().enumerate() {
        if smp.err > threshold {
            settle_idx = i + 1;
        }
    }
    Metrics {
        accumulated_sq_error: sq,
        control_effort: effort,
        final_error: s[n - 1].err,
        max_error_tail,
        settle_time: if settle_idx < n {
            Some(s[settle_idx].t)
        } else {
            None
        },
    }
}

/// Least-squares slope of `y` against `x`.
fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Exponential decay fit of the cost along an averaged run against the
/// closed-form reference rate `4 * kappa * vartheta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRateCheck {
    pub fitted_rate: f64,
    pub reference_rate: f64,
    pub relative_error: f64,
}

impl DecayRateCheck {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("fitted_rate".into(), fmt_real(self.fitted_rate)),
            ("reference_rate".into(), fmt_real(self.reference_rate)),
            ("relative_error".into(), fmt_real(self.relative_error)),
        ]
    }
}

/// Fits `ln J` against time by least squares, ignoring samples at or below
/// the cost floor (the flow reaches double-precision zero in finite time).
pub fn decay_rate_check(traj: &Trajectory, kappa: f64, vartheta: f64) -> Result<DecayRateCheck> {
    let mut ts = Vec::new();
    let mut lnj = Vec::new();
    for s in traj.samples() {
        if s.cost > DECAY_FIT_FLOOR {
            ts.push(s.t);
            lnj.push(s.cost.ln());
        }
    }
    if ts.len() < 2 {
        return Err(Error::DegenerateStudy(
            "decay fit needs at least two samples above the cost floor".into(),
        ));
    }
    let fitted_rate = -ls_slope(&ts, &lnj);
    let reference_rate = 4.0 * kappa * vartheta;
    let relative_error = if reference_rate > 0.0 {
        (fitted_rate - reference_rate).abs() / reference_rate
    } else {
        fitted_rate.abs()
    };
    Ok(DecayRateCheck {
        fitted_rate,
        reference_rate,
        relative_error,
    })
}

/// Closed-form admissibility thresholds for the tracking gain conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem3Report {
    pub rho: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub nu: f64,
    /// Smallest admissible gradient gain, `nu / (2 sqrt(kappa lambda))`.
    pub vartheta_min: f64,
    /// Largest admissible initial-offset margin,
    /// `(sqrt(rho) - sqrt(lambda)) / sqrt(kappa)`.
    pub delta_max: f64,
    /// Verdict for the queried pair below.
    pub vartheta: f64,
    pub delta: f64,
    pub admissible: bool,
}

impl Theorem3Report {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("rho".into(), fmt_real(self.rho)),
            ("lambda".into(), fmt_real(self.lambda)),
            ("kappa".into(), fmt_real(self.kappa)),
            ("nu".into(), fmt_real(self.nu)),
            ("vartheta_min".into(), fmt_real(self.vartheta_min)),
            ("delta_max".into(), fmt_real(self.delta_max)),
            ("vartheta".into(), fmt_real(self.vartheta)),
            ("delta".into(), fmt_real(self.delta)),
            ("admissible".into(), self.admissible.to_string()),
        ]
    }
}

pub fn validate_theorem3(
    kappa: f64,
    lambda: f64,
    rho: f64,
    nu: f64,
    vartheta: f64,
    delta: f64,
) -> Result<Theorem3Report> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "curvature must be positive and finite",
        });
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "working level must be positive and finite",
        });
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            reason: "target speed bound must be nonnegative and finite",
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "level must be positive",
        });
    }
    if lambda >= rho {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "level must be strictly below the working level rho",
        });
    }
    let vartheta_min = nu / (2.0 * (kappa * lambda).sqrt());
    let delta_max = (rho.sqrt() - lambda.sqrt()) / kappa.sqrt();
    let admissible = delta > 0.0 && delta < delta_max && vartheta > vartheta_min;
    Ok(Theorem3Report {
        rho,
        lambda,
        kappa,
        nu,
        vartheta_min,
        delta_max,
        vartheta,
        delta,
        admissible,
    })
}

/// Everything needed to rebuild a run while sweeping frequency parameters.
#[derive(Debug, Clone)]
pub struct SweepScenario {
    pub law_kind: LawKind,
    pub vartheta: f64,
    /// Replaces the law's default amplitude scale when set.
    pub amplitude_scale: Option<f64>,
    pub kappa: f64,
    pub path: TargetPath,
    pub x0: Vec2,
    pub t0: f64,
    pub t_end: f64,
    /// Heading spin rate (the slow frequency).
    pub heading_rate: f64,
    pub k: u32,
    pub theta0: f64,
    pub steps_per_fast_period: u32,
}

impl SweepScenario {
    pub fn cost(&self) -> Result<CostFunction> {
        CostFunction::new(self.kappa, self.path.clone())
    }

    fn law_at(&self, k: u32, heading_rate: f64) -> Result<ControlLaw> {
        let law = ControlLaw::builtin(self.law_kind, self.vartheta, k, heading_rate)?;
        match self.amplitude_scale {
            Some(s) => law.with_amplitude_scale(s),
            None => Ok(law),
        }
    }

    fn config_at(&self, k: u32, heading_rate: f64) -> SimConfig {
        SimConfig {
            x0: self.x0,
            t0: self.t0,
            t_end: self.t_end,
            heading_rate,
            k,
            theta0: self.theta0,
            steps_per_fast_period: self.steps_per_fast_period,
        }
    }

    pub fn closed_loop(&self) -> Result<ClosedLoopSystem> {
        self.closed_loop_with_k(self.k)
    }

    /// Same scenario with the frequency ratio replaced (heading rate kept).
    pub fn closed_loop_with_k(&self, k: u32) -> Result<ClosedLoopSystem> {
        ClosedLoopSystem::new(
            self.law_at(k, self.heading_rate)?,
            self.cost()?,
            self.config_at(k, self.heading_rate),
        )
    }

    /// Same scenario with the dither frequency pinned (ratio kept, heading
    /// rate derived).
    pub fn closed_loop_with_omega(&self, omega: f64) -> Result<ClosedLoopSystem> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "dither frequency must be positive and finite",
            });
        }
        let heading_rate = omega / self.k as f64;
        ClosedLoopSystem::new(
            self.law_at(self.k, heading_rate)?,
            self.cost()?,
            self.config_at(self.k, heading_rate),
        )
    }

    pub fn averaged_with_k(&self, k: u32) -> Result<AveragedSystem> {
        Ok(AveragedSystem::new(
            self.law_at(k, self.heading_rate)?,
            self.cost()?,
        ))
    }
}

/// Integrates the closed loop and the averaged flow on the same grid and
/// returns the largest state distance, without materializing either
/// trajectory. Divergence of either system counts as infinite distance.
fn lockstep_sup_distance(closed: &ClosedLoopSystem, averaged: &AveragedSystem) -> Result<f64> {
    let cfg = closed.config();
    let h = cfg.step();
    let n = step_count(cfg.t_end - cfg.t0, h);
    let mut fc = |t: f64, x: Vec2| closed.rhs(t, x).map(|(_, dx)| dx);
    let mut fa = |t: f64, x: Vec2| averaged.rhs(t, x);
    let mut xc = cfg.x0;
    let mut xa = cfg.x0;
    let mut sup = 0.0_f64;
    for i in 0..=n {
        sup = sup.max(xc.dist(xa));
        if i == n {
            break;
        }
        let t = cfg.t0 + i as f64 * h;
        xc = rk4_step(&mut fc, t, xc, h)?;
        xa = rk4_step(&mut fa, t, xa, h)?;
        if !xc.is_finite()
            || xc.norm() > DIVERGENCE_LIMIT
            || !xa.is_finite()
            || xa.norm() > DIVERGENCE_LIMIT
        {
            return Ok(f64::INFINITY);
        }
    }
    Ok(sup)
}

/// Sup-norm distance between the closed loop and its averaged counterpart
/// for each frequency ratio in `k_list`, over the scenario window.
pub fn omega_convergence_study(
    scenario: &SweepScenario,
    k_list: &[u32],
) -> Result<Vec<(u32, f64)>> {
    if k_list.is_empty() {
        return Err(Error::Empty("k list"));
    }
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let closed = scenario.closed_loop_with_k(k)?;
        let averaged = scenario.averaged_with_k(k)?;
        let sup = lockstep_sup_distance(&closed, &averaged)?;
        rows.push((k, sup));
    }
    Ok(rows)
}

pub fn omega_study_kv(rows: &[(u32, f64)]) -> Vec<(String, String)> {
    rows.iter()
        .map(|(k, d)| (format!("sup_distance_k{k}"), fmt_real(*d)))
        .collect()
}

/// One-period remainder sizes across a dither-frequency sweep, with the
/// log-log slope when enough points survive.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraStudy {
    /// (omega, remainder norm) for the points that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped because the remainder was exactly zero.
    pub excluded: usize,
    /// Least-squares slope of log r against log omega; absent when fewer
    /// than two points survive.
    pub slope: Option<f64>,
}

impl VolterraStudy {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = self
            .points
            .iter()
            .map(|(w, r)| (format!("r_norm_omega{w}"), fmt_real(*r)))
            .collect();
        kv.push(("excluded".into(), self.excluded.to_string()));
        kv.push((
            "slope".into(),
            self.slope.map_or("degenerate".into(), fmt_real),
        ));
        kv
    }
}

/// Runs the one-period map at each dither frequency (frequency ratio fixed,
/// heading rate scaled along) and fits the remainder decay.
pub fn volterra_scaling_study(scenario: &SweepScenario, omega_list: &[f64]) -> Result<VolterraStudy> {
    if omega_list.len() < 4 {
        return Err(Error::InvalidParameter {
            name: "omega_list",
            value: omega_list.len() as f64,
            reason: "remainder fit needs at least 4 frequencies",
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for &w in omega_list {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: w,
                reason: "dither frequency must be positive and finite",
            });
        }
        lo = lo.min(w);
        hi = hi.max(w);
    }
    if hi / lo < 8.0 - 1e-9 {
        return Err(Error::InvalidParameter {
            name: "omega_list",
            value: hi / lo,
            reason: "frequencies must span at least an 8x range",
        });
    }
    let mut points = Vec::with_capacity(omega_list.len());
    let mut excluded = 0;
    for &omega in omega_list {
        let sys = scenario.closed_loop_with_omega(omega)?;
        let (_, r_norm) = one_period_map(&sys, scenario.x0, scenario.t0)?;
        if r_norm == 0.0 {
            excluded += 1;
        } else {
            points.push((omega, r_norm));
        }
    }
    let slope = if points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|(w, _)| w.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|(_, r)| r.ln()).collect();
        Some(ls_slope(&xs, &ys))
    } else {
        None
    };
    Ok(VolterraStudy {
        points,
        excluded,
        slope,
    })
}

/// Grid-sampled practical-stability verdict, strongest clause first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    /// Contained in the inflated level set from the start at some omega.
    Stable,
    /// Enters and stays in the inflated level set after a finite delay.
    Attractive,
    /// Neither, but every sampled run stayed in the working region.
    Bounded,
    /// At least one sampled run left the working region.
    Unbounded,
}

impl fmt::Display for ProbeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProbeVerdict::Stable => "stable",
            ProbeVerdict::Attractive => "attractive",
            ProbeVerdict::Bounded => "bounded",
            ProbeVerdict::Unbounded => "unbounded",
        };
        f.write_str(s)
    }
}

/// Outcome of the sampled practical-stability probe.
#[derive(Debug, Clone)]
pub struct StabilityProbeReport {
    pub epsilon: f64,
    pub delta: f64,
    /// Level defining the target set family, derived from the gain and the
    /// target speed bound.
    pub lambda: f64,
    /// Smallest sampled dither frequency achieving the verdict's clause;
    /// absent for bounded/unbounded verdicts.
    pub omega0: Option<f64>,
    /// Settling delay for the attractive clause.
    pub t1: Option<f64>,
    pub verdict: ProbeVerdict,
    /// Set when the queried delta violates the closed-form admissibility
    /// threshold; the probe still runs.
    pub theorem3_violation: Option<String>,
    /// Scope disclaimer carried into every serialized report.
    pub grid_note: &'static str,
}

impl StabilityProbeReport {
    pub fn to_kv(&self) -> Vec<(String, String)> {
        vec![
            ("epsilon".into(), fmt_real(self.epsilon)),
            ("delta".into(), fmt_real(self.delta)),
            ("lambda".into(), fmt_real(self.lambda)),
            (
                "omega0".into(),
                self.omega0.map_or("none".into(), fmt_real),
            ),
            ("t1".into(), self.t1.map_or("none".into(), fmt_real)),
            ("verdict".into(), self.verdict.to_string()),
            (
                "theorem3_violation".into(),
                self.theorem3_violation.clone().unwrap_or("none".into()),
            ),
            ("note".into(), self.grid_note.into()),
        ]
    }
}

const PROBE_GRID_NOTE: &str =
    "verdict quantifies over the sampled (omega, t0, state) grid only";

/// Containment outcome of one probe run.
struct ProbeRun {
    /// Error stayed within the inflated set at every sample.
    contained_throughout: bool,
    /// Offset from t0 after which the error stayed within the inflated set,
    /// when it eventually did.
    entry_offset: Option<f64>,
    diverged: bool,
}

/// Streams one closed-loop run, checking `err <= bound` as it goes.
fn probe_run(sys: &ClosedLoopSystem, bound: f64) -> Result<ProbeRun> {
    let cfg = sys.config();
    let h = cfg.step();
    let n = step_count(cfg.t_end - cfg.t0, h);
    let mut f = |t: f64, x: Vec2| sys.rhs(t, x).map(|(_, dx)| dx);
    let mut x = cfg.x0;
    let mut last_violation: Option<f64> = None;
    for i in 0..=n {
        let t = cfg.t0 + i as f64 * h;
        let err = (x - sys.cost().path().eval(t)?).norm();
        if err > bound {
            last_violation = Some(t);
        }
        if i == n {
            break;
        }
        x = rk4_step(&mut f, t, x, h)?;
        if !x.is_finite() || x.norm() > DIVERGENCE_LIMIT {
            return Ok(ProbeRun {
                contained_throughout: false,
                entry_offset: None,
                diverged: true,
            });
        }
    }
    Ok(match last_violation {
        None => ProbeRun {
            contained_throughout: true,
            entry_offset: Some(0.0),
            diverged: false,
        },
        Some(t_bad) => ProbeRun {
            contained_throughout: false,
            // Entered for good one step after the last violation, unless the
            // violation was the final sample.
            entry_offset: if t_bad + h <= cfg.t_end {
                Some(t_bad + h - cfg.t0)
            } else {
                None
            },
            diverged: false,
        },
    })
}

/// Samples practical-stability containment over finite grids: for each
/// (omega, t0) pair, eight states on the circle bounding the delta-inflated
/// level set are integrated over the scenario window and checked against the
/// epsilon-inflated set.
pub fn practical_stability_probe(
    scenario: &SweepScenario,
    epsilon: f64,
    delta: f64,
    rho: f64,
    omega_grid: &[f64],
    t0_grid: &[f64],
) -> Result<StabilityProbeReport> {
    if omega_grid.is_empty() {
        return Err(Error::Empty("omega grid"));
    }
    if t0_grid.is_empty() {
        return Err(Error::Empty("t0 grid"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "containment margin must be positive and finite",
        });
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            reason: "initial margin must be positive and finite",
        });
    }

    // The probed level sits at twice the smallest admissible level for the
    // scenario gain, comfortably inside the admissible region.
    let nu = scenario.path.nu_bound();
    let lambda = nu * nu / (2.0 * scenario.kappa * scenario.vartheta * scenario.vartheta);
    let level_radius = (lambda / scenario.kappa).sqrt();
    let bound = level_radius + epsilon;

    let theorem3_violation = if lambda > 0.0 && lambda < rho {
        let report = validate_theorem3(
            scenario.kappa,
            lambda,
            rho,
            nu,
            scenario.vartheta,
            delta,
        )?;
        (delta >= report.delta_max).then(|| {
            format!(
                "delta = {} exceeds delta_max = {}",
                fmt_real(delta),
                fmt_real(report.delta_max)
            )
        })
    } else if lambda >= rho {
        Some(format!(
            "derived lambda = {} is not below rho = {}",
            fmt_real(lambda),
            fmt_real(rho)
        ))
    } else {
        // Constant target: zero level, thresholds vacuous.
        None
    };

    let mut omegas: Vec<f64> = omega_grid.to_vec();
    omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let window = scenario.t_end - scenario.t0;

    let mut stable_omega: Option<f64> = None;
    let mut attractive: Option<(f64, f64)> = None;
    let mut any_divergence = false;

    for &omega in &omegas {
        let ratio = omega / scenario.heading_rate;
        let k = ratio.round();
        if !(k >= 2.0) || (ratio - k).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "grid frequency must be an integer multiple (>= 2) of the heading rate",
            });
        }
        let k = k as u32;

        let mut all_contained = true;
        let mut worst_entry: Option<f64> = Some(0.0);
        for &t0 in t0_grid {
            let center = scenario.path.eval(t0)?;
            for i in 0..8 {
                let angle = TAU * i as f64 / 8.0;
                let x0 = center + Vec2::new(angle.cos(), angle.sin()) * (level_radius + delta);
                let mut per_run = scenario.clone();
                per_run.x0 = x0;
                per_run.t0 = t0;
                per_run.t_end = t0 + window;
                let sys = per_run.closed_loop_with_k(k)?;
                let run = probe_run(&sys, bound)?;
                if run.diverged {
                    any_divergence = true;
                }
                all_contained &= run.contained_throughout;
                worst_entry = match (worst_entry, run.entry_offset) {
                    (Some(w), Some(e)) => Some(w.max(e)),
                    _ => None,
                };
            }
        }
        if all_contained && stable_omega.is_none() {
            stable_omega = Some(omega);
            break; // smallest stable omega found; stronger clauses need nothing more
        }
        if attractive.is_none() {
            if let Some(t1) = worst_entry {
                attractive = Some((omega, t1));
            }
        }
    }

    let (verdict, omega0, t1) = if let Some(w) = stable_omega {
        (ProbeVerdict::Stable, Some(w), None)
    } else if let Some((w, t1)) = attractive {
        (ProbeVerdict::Attractive, Some(w), Some(t1))
    } else if any_divergence {
        (ProbeVerdict::Unbounded, None, None)
    } else {
        (ProbeVerdict::Bounded, None, None)
    };

    Ok(StabilityProbeReport {
        epsilon,
        delta,
        lambda,
        omega0,
        t1,
        verdict,
        theorem3_violation,
        grid_note: PROBE_GRID_NOTE,
    })
}
