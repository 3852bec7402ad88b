//! Acceptance gate: one test per release criterion. Each test prints a
//! single `criterion NN (label): PASS/FAIL in Ts; detail` line with the
//! measured margin, then asserts, so a failing run shows exactly which
//! guarantee broke and by how much. Tolerances and wall-clock budgets are
//! pinned here and nowhere else.

use es_cli::scenario;
use es_core::{
    averaged_field_numeric, compute_metrics, decay_rate_check, omega_convergence_study,
    phi_field, simulate_averaged, validate_theorem3, volterra_scaling_study, wronskian_residual,
    AveragedSystem, ControlLaw, CostFunction, FPair, LawKind, TargetPath, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::time::Instant;

struct Criterion {
    n: u32,
    label: &'static str,
    started: Instant,
}

impl Criterion {
    fn start(n: u32, label: &'static str) -> Criterion {
        Criterion {
            n,
            label,
            started: Instant::now(),
        }
    }

    /// Prints the verdict line, then asserts the outcome and, when given,
    /// the wall-clock budget in seconds.
    fn finish(self, pass: bool, budget: Option<f64>, detail: &str) {
        let secs = self.started.elapsed().as_secs_f64();
        let in_budget = budget.is_none_or(|b| secs < b);
        let verdict = if pass && in_budget { "PASS" } else { "FAIL" };
        println!(
            "criterion {:02} ({}): {verdict} in {secs:.2}s; {detail}",
            self.n, self.label
        );
        assert!(pass, "criterion {:02} ({}): {detail}", self.n, self.label);
        if let Some(b) = budget {
            assert!(
                secs < b,
                "criterion {:02} ({}): took {secs:.2}s, budget {b}s",
                self.n,
                self.label
            );
        }
    }
}

/// Evenly spaced admissible points: scan a denser candidate grid and keep
/// the first `n` outside the pair's zero guard band.
fn admissible_grid(pair: &FPair, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let candidates = 4 * n;
    let mut pts = Vec::with_capacity(n);
    for i in 0..candidates {
        let z = lo + (hi - lo) * i as f64 / (candidates - 1) as f64;
        if pair.nearest_zero_distance(z) > 1.5e-3 {
            pts.push(z);
            if pts.len() == n {
                break;
            }
        }
    }
    assert_eq!(pts.len(), n, "could not fill an admissible grid on [{lo}, {hi}]");
    pts
}

#[test]
fn criterion_01_wronskian_identity() {
    let c = Criterion::start(1, "wronskian identity");
    let ranges = [
        (LawKind::Cont1, 0.1, 10.0),
        (LawKind::Cont2, -10.0, 10.0),
        (LawKind::Cont3, 0.05, 20.0),
        (LawKind::Cont4, 0.05, 5.0),
    ];
    let mut worst = 0.0_f64;
    for (kind, lo, hi) in ranges {
        let pair = FPair::builtin(kind);
        let grid = admissible_grid(&pair, lo, hi, 1000);
        let res = wronskian_residual(&pair, &grid).unwrap();
        worst = worst.max(res);
    }
    c.finish(
        worst < 1e-5,
        Some(1.0),
        &format!("worst residual {worst:.3e} over 1000-point grids, all four laws (tolerance 1e-5)"),
    );
}

#[test]
fn criterion_02_averaged_field_oracle_equivalence() {
    let c = Criterion::start(2, "averaged-field oracle equivalence");
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE55);
    let kappa = 2.0;
    let vartheta = 0.7;
    let cost = CostFunction::new(kappa, TargetPath::line_sine()).unwrap();
    let t = 3.7;
    let center = cost.path().eval(t).unwrap();
    let mut worst = 0.0_f64;
    for kind in LawKind::ALL {
        for k in [2u32, 10] {
            let law = ControlLaw::builtin(kind, vartheta, k, 5.0).unwrap();
            let mut checked = 0;
            while checked < 100 {
                let ang = rng.gen_range(0.0..TAU);
                // Radius capped so the finite-difference oracle resolves the
                // vanishing pair, whose phase rate grows exponentially in z.
                let r = rng.gen_range(0.1..1.2);
                let x = center + Vec2::new(ang.cos(), ang.sin()) * r;
                let numeric = match averaged_field_numeric(&law, &cost, x, t) {
                    Ok(v) => v,
                    // Sampled on an envelope zero; draw again.
                    Err(_) => continue,
                };
                let grad = cost.gradient(x, t).unwrap();
                let closed = phi_field(&law, &cost, x, t).unwrap() - grad * vartheta;
                worst = worst.max((numeric - closed).norm());
                checked += 1;
            }
        }
    }
    c.finish(
        worst < 1e-5,
        Some(30.0),
        &format!(
            "worst field deviation {worst:.3e} at 100 states per law, k in {{2, 10}} (tolerance 1e-5)"
        ),
    );
}

#[test]
fn criterion_03_rotation_orthogonality() {
    let c = Criterion::start(3, "rotation orthogonality");
    let mut rng = ChaCha8Rng::seed_from_u64(0x0123);
    let cost = CostFunction::new(1.7, TargetPath::line_sine()).unwrap();
    let mut worst = 0.0_f64;
    for kind in LawKind::ALL {
        let law = ControlLaw::builtin(kind, 0.9, 10, 5.0).unwrap();
        let mut checked = 0;
        while checked < 1000 {
            let t = rng.gen_range(0.0..40.0);
            let center = cost.path().eval(t).unwrap();
            let ang = rng.gen_range(0.0..TAU);
            let r = rng.gen_range(0.05..3.0);
            let x = center + Vec2::new(ang.cos(), ang.sin()) * r;
            let phi = match phi_field(&law, &cost, x, t) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let grad = cost.gradient(x, t).unwrap();
            worst = worst.max(phi.dot(grad).abs());
            checked += 1;
        }
    }
    c.finish(
        worst < 1e-8,
        None,
        &format!("worst |<Phi, grad J>| {worst:.3e} at 1000 random (x, t) per law (tolerance 1e-8)"),
    );
}

#[test]
fn criterion_04_averaged_decay_rate() {
    let c = Criterion::start(4, "averaged decay rate");
    let mut rng = ChaCha8Rng::seed_from_u64(0xDECA);
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let kappa = rng.gen_range(0.1..10.0);
        let vartheta = rng.gen_range(0.1..10.0);
        let rate = 4.0 * kappa * vartheta;
        let law = ControlLaw::builtin(LawKind::Cont2, vartheta, 10, 5.0).unwrap();
        let cost = CostFunction::new(kappa, TargetPath::constant(Vec2::ZERO).unwrap()).unwrap();
        let sys = AveragedSystem::new(law, cost);
        // Window sized to the rate so the fit always sees a few e-foldings
        // before the cost hits the fit floor.
        let t_end = (4.0 / rate).clamp(1.0, 50.0);
        let traj = simulate_averaged(&sys, Vec2::new(1.0, 0.0), 0.0, t_end, 1e-3).unwrap();
        let check = decay_rate_check(&traj, kappa, vartheta).unwrap();
        worst = worst.max(check.relative_error);
    }
    c.finish(
        worst < 1e-3,
        Some(5.0),
        &format!("worst relative rate error {worst:.3e} over 10 random (kappa, vartheta) pairs (tolerance 1e-3)"),
    );
}

#[test]
fn criterion_05_remainder_frequency_scaling() {
    let c = Criterion::start(5, "remainder frequency scaling");
    let sc = scenario::resolve("volterra-base", None, &[]).unwrap();
    let study =
        volterra_scaling_study(&sc.sweep, &[50.0, 100.0, 200.0, 400.0, 800.0]).unwrap();
    let slope = study.slope.expect("nondegenerate fit");
    c.finish(
        (-2.0..=-1.2).contains(&slope),
        Some(60.0),
        &format!("log-log remainder slope {slope:.4} (required within [-2.0, -1.2])"),
    );
}

#[test]
fn criterion_06_averaging_convergence() {
    let c = Criterion::start(6, "averaging convergence");
    let sc = scenario::resolve("sim-moving", Some("cont2"), &[]).unwrap();
    let rows = omega_convergence_study(&sc.sweep, &[10, 20, 40, 80]).unwrap();
    let sups: Vec<f64> = rows.iter().map(|&(_, d)| d).collect();
    let pass = sups.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = sups.iter().map(|d| format!("{d:.4}")).collect();
    c.finish(
        pass,
        Some(120.0),
        &format!(
            "sup distances [{}] for k = 10, 20, 40, 80 (required non-increasing)",
            shown.join(", ")
        ),
    );
}

#[test]
fn criterion_07_control_amplitude_bound() {
    let c = Criterion::start(7, "control amplitude bound");
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0BB);
    let base = scenario::resolve("sim-moving", Some("cont2"), &[]).unwrap().sweep;
    let mut sweeps = vec![base.clone()];
    let k_choices = [2u32, 3, 10];
    for _ in 0..5 {
        let mut sw = base.clone();
        sw.vartheta = rng.gen_range(0.1..5.0);
        sw.kappa = rng.gen_range(0.5..4.0);
        sw.heading_rate = rng.gen_range(1.0..6.0);
        sw.k = k_choices[rng.gen_range(0..k_choices.len())];
        sw.amplitude_scale = if rng.gen_bool(0.5) {
            Some(rng.gen_range(0.2..1.5))
        } else {
            None
        };
        sw.x0 = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        sw.t_end = 5.0;
        sweeps.push(sw);
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for sw in &sweeps {
        let sys = sw.closed_loop().unwrap();
        let bound = sys.law().amplitude();
        let traj = sys.simulate().unwrap();
        let max_u = traj.samples().iter().fold(0.0_f64, |m, s| m.max(s.u.abs()));
        worst_excess = worst_excess.max(max_u - bound);
    }
    c.finish(
        worst_excess <= 1e-12,
        None,
        &format!(
            "worst max|u| excess over the amplitude envelope {worst_excess:.3e} across {} runs (allowance 1e-12)",
            sweeps.len()
        ),
    );
}

#[test]
fn criterion_08_moving_target_law_ordering() {
    let c = Criterion::start(8, "moving-target law ordering");
    let mut tails = Vec::new();
    let mut err0 = 0.0;
    for law in ["cont1", "cont2", "cont4"] {
        let sc = scenario::resolve("sim-moving", Some(law), &[]).unwrap();
        let traj = sc.sweep.closed_loop().unwrap().simulate().unwrap();
        err0 = traj.first().err;
        tails.push(compute_metrics(&traj).max_error_tail);
    }
    let converged = tails.iter().all(|&t| t < err0);
    let ordered = tails[2] <= tails[1] && tails[1] <= tails[0];
    c.finish(
        converged && ordered,
        Some(60.0),
        &format!(
            "initial error {err0:.4}; tail maxima cont1 {:.4}, cont2 {:.4}, cont4 {:.4} (required cont4 <= cont2 <= cont1, all below the initial error)",
            tails[0], tails[1], tails[2]
        ),
    );
}

#[test]
fn criterion_09_tuned_experiment_orderings() {
    let c = Criterion::start(9, "tuned experiment orderings");
    let mut fixed = Vec::new();
    for law in ["cont1", "cont2", "cont4"] {
        let sc = scenario::resolve("exp-fixed", Some(law), &[]).unwrap();
        let m = compute_metrics(&sc.sweep.closed_loop().unwrap().simulate().unwrap());
        fixed.push(m.accumulated_sq_error);
    }
    let cont1_worst = fixed[1] < fixed[0] && fixed[2] < fixed[0];
    let mut eight = Vec::new();
    for law in ["cont2", "cont4"] {
        let sc = scenario::resolve("exp-eight", Some(law), &[]).unwrap();
        let m = compute_metrics(&sc.sweep.closed_loop().unwrap().simulate().unwrap());
        eight.push((m.accumulated_sq_error, m.control_effort));
    }
    let eight_ok = eight[1].0 < eight[0].0 && eight[1].1 < eight[0].1;
    c.finish(
        cont1_worst && eight_ok,
        Some(120.0),
        &format!(
            "fixed-target accumulated squared error cont1 {:.2}, cont2 {:.2}, cont4 {:.2} (cont1 must be worst); figure-eight error {:.2} vs {:.2} and effort {:.1} vs {:.1} for cont2 vs cont4 (cont4 must be lower on both)",
            fixed[0], fixed[1], fixed[2], eight[0].0, eight[1].0, eight[0].1, eight[1].1
        ),
    );
}

#[test]
fn criterion_10_gain_threshold_validator() {
    let c = Criterion::start(10, "gain threshold validator");
    let report = validate_theorem3(1.0, 0.25, 1.0, 0.2, 0.3, 0.3).unwrap();
    let exact = report.vartheta_min == 0.2 && report.delta_max == 0.5;
    let mut monotone = true;
    let mut prev = false;
    for i in 0..200 {
        let vartheta = 0.01 + 0.01 * i as f64;
        let r = validate_theorem3(1.0, 0.25, 1.0, 0.2, vartheta, 0.3).unwrap();
        if prev && !r.admissible {
            monotone = false;
        }
        prev = r.admissible;
    }
    c.finish(
        exact && monotone,
        None,
        &format!(
            "vartheta_min = {} (required exactly 0.2), delta_max = {} (required exactly 0.5), admissibility monotone across 200 gain levels: {monotone}",
            report.vartheta_min, report.delta_max
        ),
    );
}

#[test]
fn criterion_11_byte_identical_reruns() {
    let c = Criterion::start(11, "byte-identical reruns");
    let dir = std::env::temp_dir().join(format!("es-acceptance-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    let run = || {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_es-unicycle"))
            .args(["run", "sim-moving", "--law", "cont2", "--override", "t_end=2", "--out"])
            .arg(&dir)
            .env_remove("ES_UNICYCLE_OUT")
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "run failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        std::fs::read(dir.join("sim-moving-cont2.trajectory.csv")).unwrap()
    };
    let first = run();
    let second = run();
    let pass = first == second;
    std::fs::remove_dir_all(&dir).ok();
    c.finish(
        pass,
        None,
        &format!("trajectory CSV of {} bytes reproduced byte-for-byte: {pass}", first.len()),
    );
}
