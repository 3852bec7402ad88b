use es_core::control::derive_f2_numeric;
use es_core::{
    phi_field, wronskian_residual, CatalogF1, ControlLaw, CostFunction, FPair, LawKind,
    TargetPath, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

/// 1000 evenly spaced points with anything inside the pair's guard band
/// dropped, so the finite-difference residual is well posed everywhere.
fn admissible_grid(pair: &FPair, lo: f64, hi: f64) -> Vec<f64> {
    let pts: Vec<f64> = (0..1000)
        .map(|i| lo + (hi - lo) * i as f64 / 999.0)
        .filter(|&z| pair.nearest_zero_distance(z) > 1.5e-3)
        .collect();
    assert!(pts.len() > 900, "guard band swallowed the grid: {}", pts.len());
    pts
}

#[test]
fn wronskian_residual_linear_pair() {
    let pair = FPair::builtin(LawKind::Cont1);
    let grid = admissible_grid(&pair, 0.1, 10.0);
    let res = wronskian_residual(&pair, &grid).unwrap();
    assert!(res < 1e-6, "residual {res}");
}

#[test]
fn wronskian_residual_sine_pair() {
    let pair = FPair::builtin(LawKind::Cont2);
    let grid = admissible_grid(&pair, -10.0, 10.0);
    let res = wronskian_residual(&pair, &grid).unwrap();
    assert!(res < 1e-6, "residual {res}");
}

#[test]
fn wronskian_residual_sqrt_log_pair() {
    let pair = FPair::builtin(LawKind::Cont3);
    let grid = admissible_grid(&pair, 0.05, 20.0);
    let res = wronskian_residual(&pair, &grid).unwrap();
    assert!(res < 1e-5, "residual {res}");
}

#[test]
fn wronskian_residual_vanishing_pair() {
    // The phase grows like e^z, so envelope zeros get exponentially dense;
    // past z of about 6 they sit closer together than the guard band.
    let pair = FPair::builtin(LawKind::Cont4);
    let grid = admissible_grid(&pair, 0.05, 5.0);
    let res = wronskian_residual(&pair, &grid).unwrap();
    assert!(res < 1e-5, "residual {res}");
}

#[test]
fn derived_companion_of_linear_is_constant() {
    // F1 = z, reference point 1 with offset -1 gives F2 = 1 exactly.
    let f2 = derive_f2_numeric(|z| z, 1.0, -1.0);
    for z in [0.5, 2.0, 10.0] {
        assert!((f2(z).unwrap() - 1.0).abs() < 1e-8, "z={z}");
    }
}

#[test]
fn derived_companion_of_sine_is_cosine() {
    let f2 = derive_f2_numeric(f64::sin, FRAC_PI_2, 0.0);
    for z in [0.4, 1.0, FRAC_PI_2, 2.0, 2.8] {
        assert!((f2(z).unwrap() - z.cos()).abs() < 1e-8, "z={z}");
    }
}

#[test]
fn derived_companion_of_sqrt_log_matches_builtin() {
    // Between adjacent envelope zeros at z = 1 and z = e^pi the derived
    // companion must coincide with the closed form.
    let pair = FPair::builtin(LawKind::Cont3);
    let z_ref = FRAC_PI_2.exp();
    let f1 = |z: f64| z.abs().sqrt() * z.abs().ln().sin();
    let f2 = derive_f2_numeric(f1, z_ref, 0.0);
    for z in [2.0, 5.0, z_ref, 10.0, 20.0] {
        assert!((f2(z).unwrap() - pair.f2(z)).abs() < 1e-6, "z={z}");
    }
}

#[test]
fn derived_companion_rejects_crossing_a_zero() {
    // Integrating 1/sin^2 across the zero at pi cannot converge.
    let f2 = derive_f2_numeric(f64::sin, FRAC_PI_2, 0.0);
    assert!(f2(4.0).is_err());
}

#[test]
fn catalog_requires_nonzero_reference_value() {
    assert!(FPair::from_catalog(CatalogF1::Sine, PI, 0.0).is_err());
    assert!(FPair::from_catalog(CatalogF1::Linear, 0.0, 0.0).is_err());
}

#[test]
fn catalog_sine_pair_satisfies_the_relation() {
    let pair = FPair::from_catalog(CatalogF1::Sine, FRAC_PI_2, 0.0).unwrap();
    let grid: Vec<f64> = (0..200).map(|i| 0.3 + 2.5 * i as f64 / 199.0).collect();
    let res = wronskian_residual(&pair, &grid).unwrap();
    assert!(res < 1e-5, "residual {res}");
}

#[test]
fn control_signal_respects_amplitude_envelope() {
    let law = ControlLaw::builtin(LawKind::Cont2, 1.3, 10, 5.0).unwrap();
    let amp = law.amplitude();
    for i in 0..5000 {
        let t = i as f64 * 1e-3;
        let j = 0.5 + (i % 37) as f64 * 0.1;
        assert!(law.eval_control(t, j).abs() <= amp + 1e-12);
    }
}

#[test]
fn rotation_term_is_orthogonal_to_the_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0ffee);
    let cost = CostFunction::new(1.7, TargetPath::line_sine()).unwrap();
    for kind in LawKind::ALL {
        let law = ControlLaw::builtin(kind, 0.9, 10, 5.0).unwrap();
        for _ in 0..50 {
            let t = rng.gen_range(0.0..40.0);
            let center = cost.path().eval(t).unwrap();
            let ang = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = rng.gen_range(0.05..3.0);
            let x = center + Vec2::new(ang.cos(), ang.sin()) * r;
            let phi = phi_field(&law, &cost, x, t).unwrap();
            let grad = cost.gradient(x, t).unwrap();
            assert!(phi.dot(grad).abs() < 1e-8, "{kind} at t={t}");
        }
    }
}
