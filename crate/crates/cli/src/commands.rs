//! Command implementations and the process-level error type.
//!
//! Every failure funnels into [`CliError`]; `main` prints it as a single
//! `error: {category}: {message}` line on stderr and exits with the
//! category's code. Commands that produce partial results (a diverged run,
//! a comparison with failed rows, a degenerate study) write their artifacts
//! before returning the error, so the files are always inspectable.

use crate::artifacts;
use crate::scenario::{self, ResolvedScenario, CATALOG};
use es_core::analysis::omega_study_kv;
use es_core::{
    compute_metrics, fmt_real, omega_convergence_study, practical_stability_probe,
    volterra_scaling_study, ClosedLoopSystem, Error as CoreError, Metrics, Trajectory,
};
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unknown scenario, malformed override or config.
    Usage(String),
    /// The closed-loop state left the working region.
    Divergence(String),
    /// At least one comparison row failed; the table was still written.
    RowFailed(String),
    /// A study excluded every data point.
    Degenerate(String),
    /// Filesystem trouble while writing artifacts.
    Io(String),
    /// Numerical failure that is not the user's fault.
    Internal(String),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Divergence(_) => "divergence",
            CliError::RowFailed(_) => "compare",
            CliError::Degenerate(_) => "degenerate",
            CliError::Io(_) => "io",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Divergence(m)
            | CliError::RowFailed(m)
            | CliError::Degenerate(m)
            | CliError::Io(m)
            | CliError::Internal(m) => m,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::RowFailed(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::Io(_) | CliError::Internal(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::InvalidParameter { .. }
            | CoreError::GuardBand { .. }
            | CoreError::TimeOutOfRange { .. }
            | CoreError::Empty(_) => CliError::Usage(e.to_string()),
            CoreError::DegenerateStudy(_) => CliError::Degenerate(e.to_string()),
            CoreError::Divergence { .. } => CliError::Divergence(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// Output directory: `--out`, then `ES_UNICYCLE_OUT`, then the working
/// directory. Created if missing.
fn out_dir(flag: Option<&Path>) -> Result<PathBuf, CliError> {
    let dir = match flag {
        Some(p) => p.to_path_buf(),
        None => env::var_os("ES_UNICYCLE_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("create {}: {e}", dir.display())))?;
    Ok(dir)
}

/// Parameters common to every artifact header.
fn scenario_kv(sc: &ResolvedScenario) -> Vec<(String, String)> {
    vec![
        ("scenario".into(), sc.name.clone()),
        ("law".into(), sc.sweep.law_kind.to_string()),
        ("target".into(), sc.target_label.clone()),
        (
            "x0".into(),
            format!("{},{}", fmt_real(sc.sweep.x0.x1), fmt_real(sc.sweep.x0.x2)),
        ),
        ("t0".into(), fmt_real(sc.sweep.t0)),
        ("t_end".into(), fmt_real(sc.sweep.t_end)),
        ("Omega".into(), fmt_real(sc.sweep.heading_rate)),
        ("k".into(), sc.sweep.k.to_string()),
        ("theta0".into(), fmt_real(sc.sweep.theta0)),
        ("kappa".into(), fmt_real(sc.sweep.kappa)),
        ("vartheta".into(), fmt_real(sc.sweep.vartheta)),
        (
            "steps_per_fast_period".into(),
            sc.sweep.steps_per_fast_period.to_string(),
        ),
    ]
}

fn max_abs_u(traj: &Trajectory) -> f64 {
    traj.samples().iter().fold(0.0, |m, s| m.max(s.u.abs()))
}

fn run_summary_kv(
    sc: &ResolvedScenario,
    sys: &ClosedLoopSystem,
    traj: &Trajectory,
) -> Vec<(String, String)> {
    let mut kv = scenario_kv(sc);
    kv.push(("omega".into(), fmt_real(sys.law().omega())));
    kv.push((
        "amplitude_scale".into(),
        fmt_real(sys.law().amplitude_scale()),
    ));
    kv.push(("samples".into(), traj.len().to_string()));
    kv.push((
        "csv_stride".into(),
        artifacts::downsample_stride(traj.len()).to_string(),
    ));
    kv.extend(compute_metrics(traj).to_kv());
    kv.push(("max_abs_u".into(), fmt_real(max_abs_u(traj))));
    kv.push(("amplitude_bound".into(), fmt_real(sys.law().amplitude())));
    kv
}

/// Writes the full artifact set for one run and returns the paths.
fn write_run_artifacts(
    sc: &ResolvedScenario,
    sys: &ClosedLoopSystem,
    traj: &Trajectory,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let stem = format!("{}-{}", sc.name, sc.sweep.law_kind);
    let files = [
        (
            format!("{stem}.trajectory.csv"),
            artifacts::trajectory_csv(traj, &sc.sweep.path)?,
        ),
        (
            format!("{stem}.summary.txt"),
            artifacts::summary_text(&run_summary_kv(sc, sys, traj)),
        ),
        (
            format!("{stem}.plot-controls.csv"),
            artifacts::plot_controls_csv(traj),
        ),
        (
            format!("{stem}.plot-error.csv"),
            artifacts::plot_error_csv(traj),
        ),
        (
            format!("{stem}.plot-plane.csv"),
            artifacts::plot_plane_csv(traj, &sc.sweep.path)?,
        ),
    ];
    let mut paths = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        artifacts::atomic_write(&path, &contents)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn run(
    scenario_ref: &str,
    law: Option<&str>,
    overrides: &[String],
    out: Option<&Path>,
) -> Result<(), CliError> {
    let sc = scenario::resolve(scenario_ref, law, overrides)?;
    let dir = out_dir(out)?;
    let sys = sc.sweep.closed_loop()?;
    let (traj, divergence) = match sys.simulate() {
        Ok(t) => (t, None),
        Err(CoreError::Divergence { t, limit, partial }) => {
            let msg =
                format!("state norm exceeded {limit:.1e} at t = {t}; partial artifacts written");
            (*partial, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    let paths = write_run_artifacts(&sc, &sys, &traj, &dir)?;
    for (k, v) in run_summary_kv(&sc, &sys, &traj) {
        println!("{k} = {v}");
    }
    for p in &paths {
        println!("wrote {}", p.display());
    }
    match divergence {
        Some(m) => Err(CliError::Divergence(m)),
        None => Ok(()),
    }
}

struct CompareRow {
    law: String,
    metrics: Option<Metrics>,
    note: String,
}

impl CompareRow {
    fn csv_fields(&self) -> [String; 7] {
        match &self.metrics {
            Some(m) => [
                self.law.clone(),
                "ok".into(),
                artifacts::fmt_f(m.accumulated_sq_error),
                artifacts::fmt_f(m.control_effort),
                artifacts::fmt_f(m.final_error),
                artifacts::fmt_f(m.max_error_tail),
                m.settle_time.map_or("none".into(), artifacts::fmt_f),
            ],
            None => [
                self.law.clone(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ],
        }
    }
}

pub fn compare(
    scenario_ref: &str,
    laws: &[String],
    overrides: &[String],
    out: Option<&Path>,
) -> Result<(), CliError> {
    if laws.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 laws, got {}",
            laws.len()
        )));
    }
    for pair in overrides {
        if pair.split('=').next().map(str::trim) == Some("law") {
            return Err(CliError::Usage(
                "compare selects laws positionally; drop the law override".into(),
            ));
        }
    }
    for law in laws {
        scenario::parse_law(law)?;
    }
    // Validate the scenario and overrides once up front so argument mistakes
    // exit as usage errors instead of failing every row.
    let first = scenario::resolve(scenario_ref, Some(&laws[0]), overrides)?;
    let name = first.name.clone();
    let dir = out_dir(out)?;

    let mut rows: Vec<CompareRow> = Vec::with_capacity(laws.len());
    for law in laws {
        let result = scenario::resolve(scenario_ref, Some(law), overrides)
            .map_err(|e| e.message().to_string())
            .and_then(|sc| {
                let sys = sc.sweep.closed_loop().map_err(|e| e.to_string())?;
                let traj = sys.simulate().map_err(|e| e.to_string())?;
                Ok(compute_metrics(&traj))
            });
        match result {
            Ok(m) => rows.push(CompareRow {
                law: law.clone(),
                metrics: Some(m),
                note: String::new(),
            }),
            Err(note) => rows.push(CompareRow {
                law: law.clone(),
                metrics: None,
                note,
            }),
        }
    }

    // Successful rows ranked by tracking quality; failed rows sink to the
    // bottom so the table stays machine-consumable.
    rows.sort_by(|a, b| match (&a.metrics, &b.metrics) {
        (Some(ma), Some(mb)) => ma
            .accumulated_sq_error
            .total_cmp(&mb.accumulated_sq_error)
            .then_with(|| a.law.cmp(&b.law)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.law.cmp(&b.law),
    });

    let header = "law,status,accumulated_sq_error,control_effort,final_error,max_error_tail,settle_time";
    let mut csv = String::from(header);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_fields().join(","));
        csv.push('\n');
    }
    let path = dir.join(format!("{name}.compare.csv"));
    artifacts::atomic_write(&path, &csv)?;

    print!("{csv}");
    println!("wrote {}", path.display());

    let failed: Vec<&CompareRow> = rows.iter().filter(|r| r.metrics.is_none()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        let detail = failed
            .iter()
            .map(|r| format!("{} ({})", r.law, r.note))
            .collect::<Vec<_>>()
            .join("; ");
        Err(CliError::RowFailed(format!(
            "{} of {} rows failed: {detail}",
            failed.len(),
            rows.len()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StudyKind {
    Omega,
    Volterra,
    Probe,
}

impl StudyKind {
    fn parse(s: &str) -> Result<StudyKind, CliError> {
        match s {
            "omega" => Ok(StudyKind::Omega),
            "volterra" => Ok(StudyKind::Volterra),
            "probe" => Ok(StudyKind::Probe),
            other => Err(CliError::Usage(format!(
                "unknown study kind '{other}' (omega | volterra | probe)"
            ))),
        }
    }

    fn default_scenario(self) -> &'static str {
        match self {
            StudyKind::Omega | StudyKind::Probe => "sim-moving",
            StudyKind::Volterra => "volterra-base",
        }
    }

    fn label(self) -> &'static str {
        match self {
            StudyKind::Omega => "omega",
            StudyKind::Volterra => "volterra",
            StudyKind::Probe => "probe",
        }
    }
}

fn parse_list_u32(flag: &str, v: &str) -> Result<Vec<u32>, CliError> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{flag}: not an integer: '{p}'")))
        })
        .collect()
}

fn parse_list_f64(flag: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--{flag}: not a number: '{p}'")))
        })
        .collect()
}

/// Grid arguments for the three study kinds; irrelevant flags are rejected
/// rather than ignored so typos surface immediately.
pub struct StudyArgs<'a> {
    pub kind: &'a str,
    pub scenario: Option<&'a str>,
    pub k_list: Option<&'a str>,
    pub omega_list: Option<&'a str>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub overrides: &'a [String],
    pub out: Option<&'a Path>,
}

pub fn study(args: StudyArgs<'_>) -> Result<(), CliError> {
    let kind = StudyKind::parse(args.kind)?;
    match kind {
        StudyKind::Omega => {
            if args.omega_list.is_some() || args.eps.is_some() || args.delta.is_some() {
                return Err(CliError::Usage(
                    "omega study takes --k (comma-separated ratios) only".into(),
                ));
            }
        }
        StudyKind::Volterra => {
            if args.k_list.is_some() || args.eps.is_some() || args.delta.is_some() {
                return Err(CliError::Usage(
                    "volterra study takes --omega (comma-separated frequencies) only".into(),
                ));
            }
        }
        StudyKind::Probe => {
            if args.k_list.is_some() {
                return Err(CliError::Usage(
                    "probe study takes --omega, --eps, and --delta".into(),
                ));
            }
        }
    }

    let scenario_ref = args.scenario.unwrap_or_else(|| kind.default_scenario());
    let sc = scenario::resolve(scenario_ref, None, args.overrides)?;
    let dir = out_dir(args.out)?;
    let stem = format!("{}.study-{}", sc.name, kind.label());

    match kind {
        StudyKind::Omega => {
            let k_list = match args.k_list {
                Some(v) => parse_list_u32("k", v)?,
                None => vec![10, 20, 40, 80],
            };
            let rows = omega_convergence_study(&sc.sweep, &k_list)?;
            let mut csv = String::from("k,omega,sup_distance\n");
            for &(k, d) in &rows {
                csv.push_str(&format!(
                    "{k},{},{}\n",
                    artifacts::fmt_f(k as f64 * sc.sweep.heading_rate),
                    artifacts::fmt_f(d)
                ));
            }
            let csv_path = dir.join(format!("{stem}.csv"));
            artifacts::atomic_write(&csv_path, &csv)?;

            let mut kv = scenario_kv(&sc);
            kv.extend(omega_study_kv(&rows));
            let sum_path = dir.join(format!("{stem}.summary.txt"));
            artifacts::atomic_write(&sum_path, &artifacts::summary_text(&kv))?;

            print!("{csv}");
            println!("wrote {}", csv_path.display());
            println!("wrote {}", sum_path.display());
            Ok(())
        }
        StudyKind::Volterra => {
            let omegas = match args.omega_list {
                Some(v) => parse_list_f64("omega", v)?,
                None => vec![50.0, 100.0, 200.0, 400.0, 800.0],
            };
            let study = volterra_scaling_study(&sc.sweep, &omegas)?;
            let mut csv = String::from("omega,r_norm\n");
            for &(w, r) in &study.points {
                csv.push_str(&format!(
                    "{},{}\n",
                    artifacts::fmt_f(w),
                    artifacts::fmt_f(r)
                ));
            }
            let csv_path = dir.join(format!("{stem}.csv"));
            artifacts::atomic_write(&csv_path, &csv)?;

            let mut kv = scenario_kv(&sc);
            kv.extend(study.to_kv());
            let sum_path = dir.join(format!("{stem}.summary.txt"));
            artifacts::atomic_write(&sum_path, &artifacts::summary_text(&kv))?;

            print!("{csv}");
            println!("wrote {}", csv_path.display());
            println!("wrote {}", sum_path.display());
            match study.slope {
                Some(s) => {
                    println!("slope = {}", fmt_real(s));
                    Ok(())
                }
                None => Err(CliError::Degenerate(format!(
                    "remainder fit needs at least 2 nonzero points; {} of {} excluded",
                    study.excluded,
                    omegas.len()
                ))),
            }
        }
        StudyKind::Probe => {
            let omegas = match args.omega_list {
                Some(v) => parse_list_f64("omega", v)?,
                None => vec![50.0, 100.0, 200.0],
            };
            let eps = args.eps.unwrap_or(0.5);
            let delta = args.delta.unwrap_or(0.5);
            // The working-region level: fixed at 1.0, comfortably above the
            // derived target level for every catalog scenario.
            let rho = 1.0;
            let report = practical_stability_probe(
                &sc.sweep,
                eps,
                delta,
                rho,
                &omegas,
                &[sc.sweep.t0],
            )?;
            let mut kv = scenario_kv(&sc);
            kv.push(("rho".into(), fmt_real(rho)));
            kv.extend(report.to_kv());
            let sum_path = dir.join(format!("{stem}.summary.txt"));
            artifacts::atomic_write(&sum_path, &artifacts::summary_text(&kv))?;

            for (k, v) in &kv {
                println!("{k} = {v}");
            }
            println!("wrote {}", sum_path.display());
            Ok(())
        }
    }
}

pub fn list() -> Result<(), CliError> {
    for e in CATALOG {
        println!(
            "{:<14} law {:<6} target {:<14} {}",
            e.name, e.default_law, e.target_label, e.blurb
        );
    }
    Ok(())
}
