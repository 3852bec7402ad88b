//! Built-in scenario catalog and the override mechanism that turns a catalog
//! entry plus `key=value` pairs into a runnable sweep description.

use crate::commands::CliError;
use es_core::analysis::SweepScenario;
use es_core::{LawKind, TargetPath, Vec2};

/// Experiment-table entry: the effective dither normalization to realize and
/// the cost curvature used with it.
#[derive(Debug, Clone, Copy)]
pub struct LawTuning {
    pub alpha_target: f64,
    pub kappa: f64,
}

/// Catalog entry. `tuning` carries per-law parameter sets for scenarios that
/// reproduce the experiment table; laws without an entry run with the
/// scenario's base kappa and the law's own default amplitude scale.
pub struct CatalogEntry {
    pub name: &'static str,
    pub blurb: &'static str,
    pub default_law: LawKind,
    pub tuning: &'static [(LawKind, LawTuning)],
    build: fn() -> SweepScenario,
    pub target_label: &'static str,
}

fn sim_moving() -> SweepScenario {
    SweepScenario {
        law_kind: LawKind::Cont2,
        vartheta: 1.0,
        amplitude_scale: None,
        kappa: 1.0,
        path: TargetPath::line_sine(),
        x0: Vec2::new(-1.0, 1.0),
        t0: 0.0,
        t_end: 100.0,
        heading_rate: 5.0,
        k: 10,
        theta0: 0.0,
        steps_per_fast_period: 200,
    }
}

fn exp_fixed() -> SweepScenario {
    SweepScenario {
        law_kind: LawKind::Cont4,
        vartheta: 1.0,
        amplitude_scale: None,
        kappa: 1.0,
        path: TargetPath::constant(Vec2::new(0.5, 0.7)).expect("finite target"),
        x0: Vec2::ZERO,
        t0: 0.0,
        t_end: 200.0,
        heading_rate: 1.5,
        k: 2,
        theta0: 0.0,
        steps_per_fast_period: 200,
    }
}

fn exp_eight() -> SweepScenario {
    SweepScenario {
        law_kind: LawKind::Cont4,
        vartheta: 1.0,
        amplitude_scale: None,
        kappa: 1.0,
        path: TargetPath::figure_eight(),
        x0: Vec2::ZERO,
        t0: 0.0,
        t_end: 500.0,
        heading_rate: 1.0,
        k: 3,
        theta0: 0.0,
        steps_per_fast_period: 200,
    }
}

fn volterra_base() -> SweepScenario {
    SweepScenario {
        law_kind: LawKind::Cont2,
        vartheta: 1.0,
        amplitude_scale: None,
        kappa: 1.0,
        path: TargetPath::constant(Vec2::ZERO).expect("finite target"),
        x0: Vec2::new(1.0, 0.0),
        t0: 0.0,
        t_end: 10.0,
        heading_rate: 5.0,
        k: 10,
        theta0: 0.0,
        steps_per_fast_period: 200,
    }
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "sim-moving",
        blurb: "moving line-sine target, Omega=5, omega=50, the sweep baseline",
        default_law: LawKind::Cont2,
        tuning: &[],
        build: sim_moving,
        target_label: "line-sine",
    },
    CatalogEntry {
        name: "exp-fixed",
        blurb: "fixed target (0.5,0.7), omega=3, per-law experiment tuning",
        default_law: LawKind::Cont4,
        tuning: &[
            (
                LawKind::Cont1,
                LawTuning {
                    alpha_target: 2.25e-4,
                    kappa: 10.0,
                },
            ),
            (
                LawKind::Cont2,
                LawTuning {
                    alpha_target: 4.84e-2,
                    kappa: 4.0,
                },
            ),
            (
                LawKind::Cont4,
                LawTuning {
                    alpha_target: 3.249e-1,
                    kappa: 4.0,
                },
            ),
        ],
        build: exp_fixed,
        target_label: "constant:0.5,0.7",
    },
    CatalogEntry {
        name: "exp-eight",
        blurb: "figure-eight tracking, omega=3, per-law experiment tuning",
        default_law: LawKind::Cont4,
        tuning: &[
            (
                LawKind::Cont2,
                LawTuning {
                    alpha_target: 5.29e-2,
                    kappa: 4.0,
                },
            ),
            (
                LawKind::Cont4,
                LawTuning {
                    alpha_target: 2.5e-1,
                    kappa: 1.0,
                },
            ),
        ],
        build: exp_eight,
        target_label: "figure-eight",
    },
    CatalogEntry {
        name: "volterra-base",
        blurb: "constant target, one-period remainder sweeps",
        default_law: LawKind::Cont2,
        tuning: &[],
        build: volterra_base,
        target_label: "constant:0,0",
    },
];

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}

/// A catalog or config-file scenario with a concrete law selected and all
/// overrides applied.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub name: String,
    pub sweep: SweepScenario,
    pub target_label: String,
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("override {key}: not a number: '{v}'")))?;
    if !x.is_finite() {
        return Err(CliError::Usage(format!(
            "override {key}: must be finite, got '{v}'"
        )));
    }
    Ok(x)
}

fn parse_u32(key: &str, v: &str) -> Result<u32, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("override {key}: not an integer: '{v}'")))
}

fn parse_pair(key: &str, v: &str) -> Result<Vec2, CliError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "override {key}: expected 'a,b', got '{v}'"
        )));
    }
    Ok(Vec2::new(
        parse_f64(key, parts[0])?,
        parse_f64(key, parts[1])?,
    ))
}

pub fn parse_law(v: &str) -> Result<LawKind, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown law '{v}' (cont1..cont4)")))
}

fn parse_target(v: &str) -> Result<(TargetPath, String), CliError> {
    let v = v.trim();
    if v == "line-sine" {
        return Ok((TargetPath::line_sine(), v.into()));
    }
    if v == "figure-eight" {
        return Ok((TargetPath::figure_eight(), v.into()));
    }
    if let Some(rest) = v.strip_prefix("constant:") {
        let c = parse_pair("target", rest)?;
        let path = TargetPath::constant(c)
            .map_err(|e| CliError::Usage(format!("override target: {e}")))?;
        return Ok((path, v.into()));
    }
    Err(CliError::Usage(format!(
        "override target: expected constant:a,b | line-sine | figure-eight, got '{v}'"
    )))
}

/// Applies one `key=value` pair. The `law` key is consumed earlier by
/// `resolve`, so it is rejected here.
fn apply_override(sc: &mut ResolvedScenario, key: &str, value: &str) -> Result<(), CliError> {
    match key {
        "vartheta" => sc.sweep.vartheta = parse_f64(key, value)?,
        "kappa" => sc.sweep.kappa = parse_f64(key, value)?,
        "amplitude_scale" => sc.sweep.amplitude_scale = Some(parse_f64(key, value)?),
        "Omega" => sc.sweep.heading_rate = parse_f64(key, value)?,
        "k" => sc.sweep.k = parse_u32(key, value)?,
        "omega" => {
            // The dither frequency is structural: it must be an integer
            // multiple (>= 2) of the heading rate already in effect.
            let omega = parse_f64(key, value)?;
            let ratio = omega / sc.sweep.heading_rate;
            let k = ratio.round();
            if !ratio.is_finite()
                || !(2.0..=u32::MAX as f64).contains(&k)
                || (ratio - k).abs() > 1e-9
            {
                return Err(CliError::Usage(format!(
                    "override omega: {omega} is not an integer multiple (>= 2) of Omega = {}",
                    sc.sweep.heading_rate
                )));
            }
            sc.sweep.k = k as u32;
        }
        "t0" => sc.sweep.t0 = parse_f64(key, value)?,
        "t_end" => sc.sweep.t_end = parse_f64(key, value)?,
        "theta0" => sc.sweep.theta0 = parse_f64(key, value)?,
        "steps_per_fast_period" => sc.sweep.steps_per_fast_period = parse_u32(key, value)?,
        "x0" => sc.sweep.x0 = parse_pair(key, value)?,
        "target" => {
            let (path, label) = parse_target(value)?;
            sc.sweep.path = path;
            sc.target_label = label;
        }
        "law" => {
            return Err(CliError::Usage(
                "override law is applied before tuning; use --law".into(),
            ))
        }
        _ => {
            return Err(CliError::Usage(format!("unknown override key '{key}'")));
        }
    }
    Ok(())
}

fn split_kv(pair: &str) -> Result<(&str, &str), CliError> {
    pair.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Usage(format!("override '{pair}': expected key=value")))
}

/// Builds the scenario: catalog entry (or config file section), then law
/// selection, then the law's tuning-table entry if it has one, then the
/// remaining overrides in the order given. Explicit kappa or amplitude_scale
/// overrides therefore beat the tuning table.
pub fn resolve(
    scenario_ref: &str,
    law_flag: Option<&str>,
    overrides: &[String],
) -> Result<ResolvedScenario, CliError> {
    let (entry, extra_overrides, name) = if scenario_ref.contains('#') {
        let (base, file_overrides, section) = crate::configfile::load_section(scenario_ref)?;
        let entry = catalog_entry(&base).ok_or_else(|| {
            CliError::Usage(format!("config base '{base}' is not a catalog scenario"))
        })?;
        (entry, file_overrides, section)
    } else {
        let entry = catalog_entry(scenario_ref).ok_or_else(|| {
            CliError::Usage(format!("unknown scenario '{scenario_ref}' (try `list`)"))
        })?;
        (entry, Vec::new(), scenario_ref.to_string())
    };

    let mut sc = ResolvedScenario {
        name,
        sweep: (entry.build)(),
        target_label: entry.target_label.to_string(),
    };

    // Law selection: --law flag, then any law= pair (last wins).
    let mut law = law_flag
        .map(parse_law)
        .transpose()?
        .unwrap_or(entry.default_law);
    for pair in extra_overrides.iter().chain(overrides.iter()) {
        let (k, v) = split_kv(pair)?;
        if k == "law" {
            law = parse_law(v)?;
        }
    }
    sc.sweep.law_kind = law;

    if let Some((_, t)) = entry.tuning.iter().find(|(l, _)| *l == law) {
        sc.sweep.kappa = t.kappa;
        let alpha_k = {
            let k = sc.sweep.k as f64;
            4.0 * (1.0 - 1.0 / (k * k))
        };
        sc.sweep.amplitude_scale = Some((t.alpha_target / alpha_k).sqrt());
    }

    for pair in extra_overrides.iter().chain(overrides.iter()) {
        let (k, v) = split_kv(pair)?;
        if k != "law" {
            apply_override(&mut sc, k, v)?;
        }
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn usage(overrides: &[&str]) -> bool {
        let pairs: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        matches!(resolve("sim-moving", None, &pairs), Err(CliError::Usage(_)))
    }

    #[test]
    fn non_finite_or_oversized_frequency_overrides_are_rejected() {
        assert!(usage(&["omega=inf"]));
        assert!(usage(&["omega=nan"]));
        assert!(usage(&["t_end=1e999"]));
        // Infinite ratio: must not round its way past the integer check.
        assert!(usage(&["Omega=1e-300", "omega=1"]));
        assert!(!usage(&["omega=100"]));
    }
}
