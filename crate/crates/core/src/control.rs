//! The control-law family.
//!
//! Each law is built from a pair of scalar shaping functions `(F1, F2)` of
//! the measured cost. Away from the isolated zeros of `F1` the two are tied
//! together by
//!
//! ```text
//! F2(z) = -F1(z) * ( c0 + integral_{z_ref}^{z} ds / F1(s)^2 )
//! ```
//!
//! which is equivalent to the Wronskian identity
//! `F1 * F2' - F1' * F2 = -1`. The actuation applied to the vehicle is
//!
//! ```text
//! u(t) = amplitude_scale * sqrt(vartheta * alpha * omega)
//!        * ( F1(J) cos(omega t) + F2(J) sin(omega t) )
//! ```
//!
//! with `omega = k * heading_rate` and `alpha = 4 (1 - k^-2)`. That
//! normalization makes the averaged closed loop descend the cost gradient
//! with gain exactly `vartheta` (see `dynamics`).

use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::vec2::Vec2;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Step for the central differences used on shaping functions.
pub const FD_STEP: f64 = 1e-6;

/// Half-width of the band around each zero of `F1` inside which
/// derivative-based quantities are refused.
pub const ZERO_GUARD_BAND: f64 = 1e-3;

/// Absolute tolerance for the quadrature behind numerically derived `F2`.
pub const F2_QUADRATURE_TOL: f64 = 1e-10;

/// Below this the bounded-amplitude law treats the cost as exactly zero; the
/// logarithm in its phase would otherwise wander without affecting `u`
/// meaningfully.
const VANISHING_CLAMP: f64 = 1e-300;

/// Built-in laws, in the order they are usually compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LawKind {
    /// `F1 = z`, `F2 = 1`: unbounded linear shaping.
    Cont1,
    /// `F1 = sin z`, `F2 = cos z`: globally bounded actuation.
    Cont2,
    /// `F1 = sqrt|z| sin(ln|z|)`, `F2 = sqrt|z| cos(ln|z|)`: amplitude decays
    /// towards the target.
    Cont3,
    /// Bounded actuation that also vanishes at the target.
    Cont4,
}

impl LawKind {
    pub const ALL: [LawKind; 4] = [LawKind::Cont1, LawKind::Cont2, LawKind::Cont3, LawKind::Cont4];
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LawKind::Cont1 => "cont1",
            LawKind::Cont2 => "cont2",
            LawKind::Cont3 => "cont3",
            LawKind::Cont4 => "cont4",
        };
        f.write_str(s)
    }
}

impl FromStr for LawKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<LawKind> {
        match s {
            "cont1" => Ok(LawKind::Cont1),
            "cont2" => Ok(LawKind::Cont2),
            "cont3" => Ok(LawKind::Cont3),
            "cont4" => Ok(LawKind::Cont4),
            _ => Err(Error::Mismatch(format!("unknown law id `{s}`"))),
        }
    }
}

/// Shapes available for the `F1` of a user-defined pair; `F2` is then derived
/// numerically from the family relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogF1 {
    /// `z`
    Linear,
    /// `sin z`
    Sine,
    /// `sqrt|z| sin(ln|z|)`
    SqrtLog,
    /// `exp z` (zero-free, integrable everywhere)
    Exp,
}

impl FromStr for CatalogF1 {
    type Err = Error;
    fn from_str(s: &str) -> Result<CatalogF1> {
        match s {
            "linear" => Ok(CatalogF1::Linear),
            "sine" => Ok(CatalogF1::Sine),
            "sqrt-log" => Ok(CatalogF1::SqrtLog),
            "exp" => Ok(CatalogF1::Exp),
            _ => Err(Error::Mismatch(format!("unknown F1 shape `{s}`"))),
        }
    }
}

impl fmt::Display for CatalogF1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CatalogF1::Linear => "linear",
            CatalogF1::Sine => "sine",
            CatalogF1::SqrtLog => "sqrt-log",
            CatalogF1::Exp => "exp",
        };
        f.write_str(s)
    }
}

/// Zero structure of `F1`, used for guard-band checks.
#[derive(Debug, Clone, Copy)]
enum ZeroStructure {
    /// Single zero at the origin.
    Origin,
    /// Zeros at integer multiples of pi.
    SineMultiples,
    /// Origin plus `exp(n pi)` for every integer n.
    LogSpaced,
    /// Origin plus the preimages of integer multiples of pi under the
    /// bounded-vanishing phase.
    VanishingPhase,
    /// No zeros at all.
    None,
    /// Identically zero (degenerate test double): everything is a zero.
    Everywhere,
}

fn catalog_f1_fn(shape: CatalogF1) -> ScalarFn {
    match shape {
        CatalogF1::Linear => Arc::new(|z: f64| z),
        CatalogF1::Sine => Arc::new(|z: f64| z.sin()),
        CatalogF1::SqrtLog => Arc::new(sqrt_log_f1),
        CatalogF1::Exp => Arc::new(|z: f64| z.exp()),
    }
}

fn catalog_zero_structure(shape: CatalogF1) -> ZeroStructure {
    match shape {
        CatalogF1::Linear => ZeroStructure::Origin,
        CatalogF1::Sine => ZeroStructure::SineMultiples,
        CatalogF1::SqrtLog => ZeroStructure::LogSpaced,
        CatalogF1::Exp => ZeroStructure::None,
    }
}

fn sqrt_log_f1(z: f64) -> f64 {
    let a = z.abs();
    if a == 0.0 {
        return 0.0;
    }
    a.sqrt() * a.ln().sin()
}

fn sqrt_log_f2(z: f64) -> f64 {
    let a = z.abs();
    if a == 0.0 {
        return 0.0;
    }
    a.sqrt() * a.ln().cos()
}

/// Amplitude-squared envelope of the bounded-vanishing law,
/// `(1 - exp(-z)) / (1 + exp(z))` for `z >= 0`.
fn vanishing_envelope(z: f64) -> f64 {
    (-(-z).exp_m1()) / (1.0 + z.exp())
}

fn vanishing_envelope_deriv(z: f64) -> f64 {
    let e = z.exp();
    (2.0 + (-z).exp() - e) / ((1.0 + e) * (1.0 + e))
}

/// Phase of the bounded-vanishing law, `exp(z) + 2 ln(exp(z) - 1)`, strictly
/// increasing on `z > 0` with range all of R.
fn vanishing_phase(z: f64) -> f64 {
    z.exp() + 2.0 * z.exp_m1().ln()
}

fn vanishing_phase_deriv(z: f64) -> f64 {
    let e = z.exp();
    e * (e + 1.0) / (e - 1.0)
}

fn vanishing_f1(z: f64) -> f64 {
    let a = z.abs();
    if a < VANISHING_CLAMP {
        return 0.0;
    }
    vanishing_envelope(a).sqrt() * vanishing_phase(a).sin()
}

fn vanishing_f2(z: f64) -> f64 {
    let a = z.abs();
    if a < VANISHING_CLAMP {
        return 0.0;
    }
    vanishing_envelope(a).sqrt() * vanishing_phase(a).cos()
}

/// A shaping pair together with the metadata needed to evaluate derivative
/// quantities safely.
#[derive(Clone)]
pub struct FPair {
    f1: ScalarFn,
    f2: ScalarFn,
    /// Analytic `d/dz (F1^2 + F2^2)` where known; otherwise derived by
    /// central differences on demand.
    sum_sq_deriv: Option<ScalarFn>,
    zeros: ZeroStructure,
    zero_set_note: &'static str,
}

impl fmt::Debug for FPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FPair")
            .field("zeros", &self.zeros)
            .field("zero_set_note", &self.zero_set_note)
            .finish()
    }
}

impl FPair {
    pub fn builtin(kind: LawKind) -> FPair {
        match kind {
            LawKind::Cont1 => FPair {
                f1: Arc::new(|z: f64| z),
                f2: Arc::new(|_: f64| 1.0),
                sum_sq_deriv: Some(Arc::new(|z: f64| 2.0 * z)),
                zeros: ZeroStructure::Origin,
                zero_set_note: "F1 vanishes only at z = 0",
            },
            LawKind::Cont2 => FPair {
                f1: Arc::new(|z: f64| z.sin()),
                f2: Arc::new(|z: f64| z.cos()),
                sum_sq_deriv: Some(Arc::new(|_: f64| 0.0)),
                zeros: ZeroStructure::SineMultiples,
                zero_set_note: "F1 vanishes at integer multiples of pi",
            },
            LawKind::Cont3 => FPair {
                f1: Arc::new(sqrt_log_f1),
                f2: Arc::new(sqrt_log_f2),
                // F1^2 + F2^2 = |z|.
                sum_sq_deriv: Some(Arc::new(|z: f64| if z == 0.0 { 0.0 } else { z.signum() })),
                zeros: ZeroStructure::LogSpaced,
                zero_set_note: "F1 vanishes at z = 0 and at exp(n pi) for every integer n",
            },
            LawKind::Cont4 => FPair {
                f1: Arc::new(vanishing_f1),
                f2: Arc::new(vanishing_f2),
                // F1^2 + F2^2 equals the envelope.
                sum_sq_deriv: Some(Arc::new(|z: f64| {
                    if z.abs() < VANISHING_CLAMP {
                        0.5 // limit of the envelope derivative at the origin
                    } else {
                        vanishing_envelope_deriv(z.abs()) * z.signum()
                    }
                })),
                zeros: ZeroStructure::VanishingPhase,
                zero_set_note: "F1 vanishes at z = 0 and where the phase hits n pi",
            },
        }
    }

    /// Pair with a catalog `F1` and `F2` derived numerically from the family
    /// relation anchored at `(z_ref, c0)`.
    ///
    /// The derived `F2` is only valid on the zero-free interval of `F1`
    /// containing `z_ref`; outside it the quadrature cannot cross the
    /// singularity and evaluation yields NaN, which downstream integrators
    /// surface as divergence.
    pub fn from_catalog(shape: CatalogF1, z_ref: f64, c0: f64) -> Result<FPair> {
        let f1 = catalog_f1_fn(shape);
        // Floor rather than exact zero: reference points like z_ref = pi land
        // within an ulp of a sine zero and the quadrature weight 1/F1^2 is
        // useless there.
        if f1(z_ref).abs() <= 1e-9 {
            return Err(Error::InvalidParameter {
                name: "z_ref",
                value: z_ref,
                reason: "anchor must avoid the zeros of F1",
            });
        }
        let derived = derive_f2_numeric(
            {
                let f1 = f1.clone();
                move |z| f1(z)
            },
            z_ref,
            c0,
        );
        let f2: ScalarFn = Arc::new(move |z| derived(z).unwrap_or(f64::NAN));
        Ok(FPair {
            f1,
            f2,
            sum_sq_deriv: None,
            zeros: catalog_zero_structure(shape),
            zero_set_note: "see the underlying F1 shape",
        })
    }

    /// Degenerate pair `F1 = F2 = 0`. Not a family member (its Wronskian is
    /// identically zero); exists so that plumbing can be exercised with a
    /// literally inert input.
    pub fn zero() -> FPair {
        FPair {
            f1: Arc::new(|_: f64| 0.0),
            f2: Arc::new(|_: f64| 0.0),
            sum_sq_deriv: Some(Arc::new(|_: f64| 0.0)),
            zeros: ZeroStructure::Everywhere,
            zero_set_note: "identically zero",
        }
    }

    pub fn f1(&self, z: f64) -> f64 {
        (self.f1)(z)
    }

    pub fn f2(&self, z: f64) -> f64 {
        (self.f2)(z)
    }

    pub fn zero_set_note(&self) -> &'static str {
        self.zero_set_note
    }

    /// Distance from `z` to the nearest zero of `F1` (first-order estimate
    /// where the zeros have no closed form).
    pub fn nearest_zero_distance(&self, z: f64) -> f64 {
        match self.zeros {
            ZeroStructure::Origin => z.abs(),
            ZeroStructure::SineMultiples => (z - PI * (z / PI).round()).abs(),
            ZeroStructure::LogSpaced => {
                let a = z.abs();
                if a == 0.0 {
                    return 0.0;
                }
                let mut d = a; // the zero at the origin
                let n0 = (a.ln() / PI).round();
                for n in [n0 - 1.0, n0, n0 + 1.0] {
                    d = d.min((a - (n * PI).exp()).abs());
                }
                d
            }
            ZeroStructure::VanishingPhase => {
                let a = z.abs();
                if a < VANISHING_CLAMP {
                    return 0.0;
                }
                let mut d = a;
                let phase = vanishing_phase(a);
                let slope = vanishing_phase_deriv(a);
                for n in [(phase / PI).floor(), (phase / PI).ceil()] {
                    d = d.min((phase - n * PI).abs() / slope);
                }
                d
            }
            ZeroStructure::None => f64::INFINITY,
            ZeroStructure::Everywhere => 0.0,
        }
    }

    /// `d/dz (F1^2 + F2^2)` at `z`: analytic when the pair carries it,
    /// otherwise central differences guarded away from the zeros of `F1`.
    pub fn sum_sq_deriv(&self, z: f64) -> Result<f64> {
        if let Some(g) = &self.sum_sq_deriv {
            return Ok(g(z));
        }
        let dist = self.nearest_zero_distance(z);
        if dist < ZERO_GUARD_BAND {
            return Err(Error::GuardBand {
                z,
                dist,
                band: ZERO_GUARD_BAND,
            });
        }
        let g = |y: f64| {
            let a = self.f1(y);
            let b = self.f2(y);
            a * a + b * b
        };
        let d = (g(z + FD_STEP) - g(z - FD_STEP)) / (2.0 * FD_STEP);
        if !d.is_finite() {
            return Err(Error::NonFinite {
                context: "finite-difference envelope derivative",
            });
        }
        Ok(d)
    }
}

/// Numeric counterpart of the family relation: given `F1`, build
/// `F2(z) = -F1(z) * (c0 + integral_{z_ref}^{z} ds / F1(s)^2)`.
///
/// The returned function is valid on the zero-free interval of `F1`
/// containing `z_ref`; queries across a zero fail because the inner integral
/// passes through a non-integrable singularity.
pub fn derive_f2_numeric<F>(f1: F, z_ref: f64, c0: f64) -> impl Fn(f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    move |z: f64| {
        let integrand = |s: f64| {
            let v = f1(s);
            1.0 / (v * v)
        };
        let q = adaptive_simpson(&integrand, z_ref, z, F2_QUADRATURE_TOL)?;
        Ok(-f1(z) * (c0 + q))
    }
}

/// Largest deviation of `F1 F2' - F1' F2` from `-1` over the grid, with the
/// derivatives taken by central differences.
///
/// Every grid point must keep `ZERO_GUARD_BAND` clear of the zeros of `F1`;
/// a point inside the band is rejected outright since the identity is only
/// meaningful away from them.
pub fn wronskian_residual(pair: &FPair, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Empty("Wronskian grid"));
    }
    let mut worst = 0.0_f64;
    for &z in grid {
        let dist = pair.nearest_zero_distance(z);
        if dist < ZERO_GUARD_BAND {
            return Err(Error::GuardBand {
                z,
                dist,
                band: ZERO_GUARD_BAND,
            });
        }
        let d1 = (pair.f1(z + FD_STEP) - pair.f1(z - FD_STEP)) / (2.0 * FD_STEP);
        let d2 = (pair.f2(z + FD_STEP) - pair.f2(z - FD_STEP)) / (2.0 * FD_STEP);
        let w = pair.f1(z) * d2 - d1 * pair.f2(z);
        let r = (w + 1.0).abs();
        if !r.is_finite() {
            return Err(Error::NonFinite {
                context: "Wronskian residual",
            });
        }
        worst = worst.max(r);
    }
    Ok(worst)
}

/// A fully parameterized control law.
#[derive(Debug, Clone)]
pub struct ControlLaw {
    pair: FPair,
    kind: Option<LawKind>,
    vartheta: f64,
    k: u32,
    heading_rate: f64,
    amplitude_scale: f64,
}

impl ControlLaw {
    pub fn builtin(kind: LawKind, vartheta: f64, k: u32, heading_rate: f64) -> Result<ControlLaw> {
        let scale = match kind {
            LawKind::Cont2 => FRAC_1_SQRT_2,
            _ => 1.0,
        };
        Self::validated(ControlLaw {
            pair: FPair::builtin(kind),
            kind: Some(kind),
            vartheta,
            k,
            heading_rate,
            amplitude_scale: scale,
        })
    }

    pub fn custom(pair: FPair, vartheta: f64, k: u32, heading_rate: f64) -> Result<ControlLaw> {
        Self::validated(ControlLaw {
            pair,
            kind: None,
            vartheta,
            k,
            heading_rate,
            amplitude_scale: 1.0,
        })
    }

    fn validated(law: ControlLaw) -> Result<ControlLaw> {
        if !(law.vartheta > 0.0) || !law.vartheta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "vartheta",
                value: law.vartheta,
                reason: "gradient gain must be positive and finite",
            });
        }
        if law.k < 2 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: law.k as f64,
                reason: "frequency ratio must be an integer >= 2",
            });
        }
        if !(law.heading_rate > 0.0) || !law.heading_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "heading_rate",
                value: law.heading_rate,
                reason: "heading rate must be positive and finite",
            });
        }
        if !(law.amplitude_scale > 0.0) || !law.amplitude_scale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "amplitude_scale",
                value: law.amplitude_scale,
                reason: "amplitude scale must be positive and finite",
            });
        }
        Ok(law)
    }

    /// Replace the amplitude scale (the per-law constant multiplying the
    /// common `sqrt(vartheta * alpha * omega)` prefactor).
    pub fn with_amplitude_scale(mut self, scale: f64) -> Result<ControlLaw> {
        self.amplitude_scale = scale;
        Self::validated(self)
    }

    pub fn pair(&self) -> &FPair {
        &self.pair
    }

    pub fn kind(&self) -> Option<LawKind> {
        self.kind
    }

    pub fn vartheta(&self) -> f64 {
        self.vartheta
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn heading_rate(&self) -> f64 {
        self.heading_rate
    }

    pub fn amplitude_scale(&self) -> f64 {
        self.amplitude_scale
    }

    /// Dither frequency `k * heading_rate`.
    pub fn omega(&self) -> f64 {
        self.k as f64 * self.heading_rate
    }

    /// `4 (1 - k^-2)`; the value that normalizes the averaged gradient gain.
    pub fn alpha(&self) -> f64 {
        let kf = self.k as f64;
        4.0 * (1.0 - 1.0 / (kf * kf))
    }

    /// `amplitude_scale * sqrt(vartheta * alpha * omega)`, an upper bound for
    /// `|u|` whenever `|F1|, |F2|` trade off inside the unit disk (as they do
    /// for the bounded laws).
    pub fn amplitude(&self) -> f64 {
        self.amplitude_scale * (self.vartheta * self.alpha() * self.omega()).sqrt()
    }

    /// Actuation for measured cost `j` at time `t`.
    pub fn eval_control(&self, t: f64, j: f64) -> f64 {
        let phase = self.omega() * t;
        self.amplitude() * (self.pair.f1(j) * phase.cos() + self.pair.f2(j) * phase.sin())
    }
}

/// The rotation component of the averaged closed loop.
///
/// With `G = F1^2 + F2^2` the averaged dynamics pick up, next to the gradient
/// descent term, the divergence-free field
///
/// ```text
/// Phi(x, t) = vartheta / (2 k) * G'(J) * ( dJ/dx2, -dJ/dx1 )
/// ```
///
/// i.e. a quarter-turn clockwise rotation of the cost gradient scaled by the
/// envelope slope. It is pointwise orthogonal to the gradient, so it swirls
/// level sets without affecting descent.
pub fn phi_field(law: &ControlLaw, cost: &CostFunction, x: Vec2, t: f64) -> Result<Vec2> {
    let grad = cost.gradient(x, t)?;
    if grad.x1 == 0.0 && grad.x2 == 0.0 {
        // At the target the chain rule collapses regardless of the envelope.
        return Ok(Vec2::ZERO);
    }
    let j = cost.eval(x, t)?;
    let slope = law.pair().sum_sq_deriv(j)?;
    let gain = law.vartheta() * slope / (2.0 * law.k() as f64);
    Ok(Vec2::new(grad.x2, -grad.x1) * gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::TargetPath;

    #[test]
    fn law_ids_round_trip() {
        for kind in LawKind::ALL {
            let parsed: LawKind = kind.to_string().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("cont5".parse::<LawKind>().is_err());
    }

    #[test]
    fn alpha_normalization_values() {
        let law2 = ControlLaw::builtin(LawKind::Cont1, 1.0, 2, 1.5).unwrap();
        assert_eq!(law2.alpha(), 3.0);
        let law10 = ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 5.0).unwrap();
        assert_eq!(law10.alpha(), 3.96);
    }

    #[test]
    fn builtin_pair_values() {
        let p1 = FPair::builtin(LawKind::Cont1);
        assert_eq!((p1.f1(2.0), p1.f2(2.0)), (2.0, 1.0));
        let p2 = FPair::builtin(LawKind::Cont2);
        assert_eq!((p2.f1(0.0), p2.f2(0.0)), (0.0, 1.0));
        let p3 = FPair::builtin(LawKind::Cont3);
        assert_eq!((p3.f1(0.0), p3.f2(0.0)), (0.0, 0.0));
        let p4 = FPair::builtin(LawKind::Cont4);
        assert_eq!((p4.f1(0.0), p4.f2(0.0)), (0.0, 0.0));
    }

    #[test]
    fn known_control_value() {
        // Linear law, vartheta = 1, k = 10, heading 5 rad/s, J = 2 at t = 0:
        // u = sqrt(1 * 3.96 * 50) * (2 * 1 + 1 * 0) = 2 sqrt(198).
        let law = ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 5.0).unwrap();
        let u = law.eval_control(0.0, 2.0);
        assert!((u - 2.0 * 198.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn vanishing_law_is_silent_at_target() {
        let law = ControlLaw::builtin(LawKind::Cont4, 1.0, 2, 1.5).unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert_eq!(law.eval_control(t, 0.0), 0.0);
        }
    }

    #[test]
    fn bounded_law_respects_amplitude() {
        let law = ControlLaw::builtin(LawKind::Cont2, 1.0, 10, 5.0).unwrap();
        let bound = law.amplitude();
        assert!((bound - (3.96_f64 * 50.0 / 2.0).sqrt()).abs() < 1e-12);
        let mut worst = 0.0_f64;
        for i in 0..2000 {
            let t = i as f64 * 0.013;
            let j = (i as f64 * 0.37).sin().abs() * 8.0;
            worst = worst.max(law.eval_control(t, j).abs());
        }
        assert!(worst <= bound + 1e-12);
    }

    #[test]
    fn amplitude_decays_near_target() {
        // Both decaying laws must be far quieter at J = 1e-6 than near J = 1.
        let p4 = FPair::builtin(LawKind::Cont4);
        assert!(p4.f1(1e-6).abs() < 1e-2 * p4.f1(1.0).abs());
        // The sqrt-log F1 has a zero at z = 1 exactly, so compare envelopes.
        let p3 = FPair::builtin(LawKind::Cont3);
        let env = |p: &FPair, z: f64| (p.f1(z).powi(2) + p.f2(z).powi(2)).sqrt();
        assert!(env(&p3, 1e-6) < 1e-2 * env(&p3, 1.0));
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(ControlLaw::builtin(LawKind::Cont1, 0.0, 10, 5.0).is_err());
        assert!(ControlLaw::builtin(LawKind::Cont1, 1.0, 1, 5.0).is_err());
        assert!(ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 0.0).is_err());
        let law = ControlLaw::builtin(LawKind::Cont1, 1.0, 10, 5.0).unwrap();
        assert!(law.with_amplitude_scale(-1.0).is_err());
    }

    #[test]
    fn guard_band_rejects_near_zero_grid_points() {
        let pair = FPair::builtin(LawKind::Cont2);
        let err = wronskian_residual(&pair, &[1.0, PI + 1e-4]).unwrap_err();
        assert!(matches!(err, Error::GuardBand { .. }));
    }

    #[test]
    fn zero_distances() {
        let p2 = FPair::builtin(LawKind::Cont2);
        assert!((p2.nearest_zero_distance(3.0) - (PI - 3.0)).abs() < 1e-12);
        let p3 = FPair::builtin(LawKind::Cont3);
        assert!((p3.nearest_zero_distance(1.1) - 0.1).abs() < 1e-12);
        let p1 = FPair::builtin(LawKind::Cont1);
        assert_eq!(p1.nearest_zero_distance(-0.25), 0.25);
    }

    #[test]
    fn phi_vanishes_for_constant_envelope() {
        let law = ControlLaw::builtin(LawKind::Cont2, 1.3, 10, 5.0).unwrap();
        let cost = CostFunction::new(2.0, TargetPath::line_sine()).unwrap();
        for (x, t) in [(Vec2::new(1.0, -0.4), 0.0), (Vec2::new(-2.0, 0.3), 7.7)] {
            let phi = phi_field(&law, &cost, x, t).unwrap();
            assert_eq!(phi, Vec2::ZERO);
        }
    }

    #[test]
    fn phi_orthogonal_to_gradient() {
        let cost = CostFunction::new(1.5, TargetPath::line_sine()).unwrap();
        for kind in LawKind::ALL {
            let law = ControlLaw::builtin(kind, 0.8, 4, 2.0).unwrap();
            let x = Vec2::new(0.7, -0.9);
            let t = 3.0;
            let phi = phi_field(&law, &cost, x, t).unwrap();
            let grad = cost.gradient(x, t).unwrap();
            let scale = phi.norm() * grad.norm();
            assert!(phi.dot(grad).abs() <= 1e-14 * scale.max(1.0));
        }
    }
}
