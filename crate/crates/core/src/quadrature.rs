//! Simpson-rule quadrature: adaptive for integrals with endpoint tolerance
//! control, composite and cumulative fixed-grid forms for periodic
//! coefficient integrals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

/// Point-evaluation budget per adaptive integral. Smooth integrands at the
/// tolerances used here stay far below this; only nonconvergent cases (poles
/// inside the interval) exhaust it, and the budget turns those into a fast
/// failure instead of exponential shoulder refinement around the pole.
const EVAL_BUDGET: u64 = 1_000_000;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    (fa + 4.0 * fm + fb) * h / 6.0
}

/// Adaptive Simpson integration of `f` over `[a, b]` (either orientation) to
/// absolute tolerance `abs_tol`. Fails if the recursion cannot resolve the
/// integrand, which in practice means a non-integrable singularity or
/// non-finite values inside the interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let (flo, fm, fhi) = (f(lo), f(m), f(hi));
    let whole = simpson(flo, fm, fhi, hi - lo);
    let mut budget = EVAL_BUDGET;
    let v = refine(f, lo, m, hi, flo, fm, fhi, whole, abs_tol, MAX_DEPTH, &mut budget)
        .ok_or(Error::Quadrature { a, b })?;
    if !v.is_finite() {
        return Err(Error::Quadrature { a, b });
    }
    Ok(sign * v)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut u64,
) -> Option<f64> {
    if !whole.is_finite() || *budget < 2 {
        return None;
    }
    *budget -= 2;
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol && delta.is_finite() {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = refine(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)?;
    let r = refine(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)?;
    Some(l + r)
}

/// Composite Simpson rule on a uniform grid with an even number of intervals.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals >= 2 && intervals.is_multiple_of(2), "need an even interval count");
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson rule over uniformly sampled values (spacing `h`).
/// Input length must be odd (an even number of intervals).
pub fn simpson_from_values(values: &[f64], h: f64) -> f64 {
    assert!(values.len() >= 3 && values.len() % 2 == 1, "need an even interval count");
    let mut acc = values[0] + values[values.len() - 1];
    for (i, v) in values.iter().enumerate().take(values.len() - 1).skip(1) {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * v;
    }
    acc * h / 3.0
}

/// Running integral of uniformly sampled values (spacing `h`), Simpson-based.
///
/// Even nodes accumulate full Simpson pairs; odd nodes use the quadratic
/// through the surrounding three samples integrated over its first half.
/// Input length must be odd (an even number of intervals).
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    assert!(values.len() >= 3 && values.len() % 2 == 1, "need an even interval count");
    let mut out = vec![0.0; values.len()];
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < values.len() {
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        out[i + 1] = acc + h * (5.0 * f0 + 8.0 * f1 - f2) / 12.0;
        acc += h * (f0 + 4.0 * f1 + f2) / 3.0;
        out[i + 2] = acc;
        i += 2;
    }
    out
}
