//! Artifact serialization: trajectory and plot-data CSVs plus flat
//! `key = value` summaries, all written atomically (temp file + rename) so
//! an interrupted run never leaves a half-written artifact behind.

use crate::commands::CliError;
use es_core::{TargetPath, Trajectory};
use std::fs;
use std::path::{Path, PathBuf};

/// Shortest decimal representation that round-trips the double exactly.
/// Identical inputs therefore always serialize to identical bytes.
pub fn fmt_f(x: f64) -> String {
    format!("{x}")
}

/// CSV row stride keeping files under ~1e5 rows. Metrics are always taken
/// from the full-resolution trajectory held in memory, never from the file.
pub fn downsample_stride(n: usize) -> usize {
    n.div_ceil(100_000).max(1)
}

pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)
        .map_err(|e| CliError::Io(format!("write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Io(format!("rename into {}: {e}", path.display())))?;
    Ok(())
}

pub fn summary_text(kv: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in kv {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(v);
        out.push('\n');
    }
    out
}

fn eval_target(path: &TargetPath, t: f64) -> Result<es_core::Vec2, CliError> {
    path.eval(t)
        .map_err(|e| CliError::Internal(format!("target evaluation at t = {t}: {e}")))
}

pub fn trajectory_csv(traj: &Trajectory, path: &TargetPath) -> Result<String, CliError> {
    let stride = downsample_stride(traj.len());
    let mut out = String::with_capacity(80 * (traj.len() / stride + 2));
    out.push_str("t,x1,x2,gamma1,gamma2,theta,u,J,err\n");
    for s in traj.samples().iter().step_by(stride) {
        let g = eval_target(path, s.t)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f(s.t),
            fmt_f(s.x.x1),
            fmt_f(s.x.x2),
            fmt_f(g.x1),
            fmt_f(g.x2),
            fmt_f(s.theta),
            fmt_f(s.u),
            fmt_f(s.cost),
            fmt_f(s.err),
        ));
    }
    Ok(out)
}

pub fn plot_controls_csv(traj: &Trajectory) -> String {
    let stride = downsample_stride(traj.len());
    let mut out = String::from("t,u\n");
    for s in traj.samples().iter().step_by(stride) {
        out.push_str(&format!("{},{}\n", fmt_f(s.t), fmt_f(s.u)));
    }
    out
}

pub fn plot_error_csv(traj: &Trajectory) -> String {
    let stride = downsample_stride(traj.len());
    let mut out = String::from("t,err\n");
    for s in traj.samples().iter().step_by(stride) {
        out.push_str(&format!("{},{}\n", fmt_f(s.t), fmt_f(s.err)));
    }
    out
}

pub fn plot_plane_csv(traj: &Trajectory, path: &TargetPath) -> Result<String, CliError> {
    let stride = downsample_stride(traj.len());
    let mut out = String::from("t,x1,x2,gamma1,gamma2\n");
    for s in traj.samples().iter().step_by(stride) {
        let g = eval_target(path, s.t)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f(s.t),
            fmt_f(s.x.x1),
            fmt_f(s.x.x2),
            fmt_f(g.x1),
            fmt_f(g.x2),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_keeps_row_count_bounded() {
        assert_eq!(downsample_stride(1), 1);
        assert_eq!(downsample_stride(100_000), 1);
        assert_eq!(downsample_stride(100_001), 2);
        let n = 1_270_000;
        let stride = downsample_stride(n);
        assert!(n.div_ceil(stride) <= 100_000);
    }

    #[test]
    fn fmt_f_round_trips() {
        for &x in &[0.1_f64, -3.5e-7, 2.0 / 3.0, 123456.789, 0.0, -0.0] {
            assert_eq!(x.to_bits(), fmt_f(x).parse::<f64>().unwrap().to_bits());
        }
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("es-artifact-{}", std::process::id()));
        atomic_write(&path, "first\n").unwrap();
        atomic_write(&path, "second\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second\n");
        let mut tmp_name = path.file_name().unwrap().to_os_string();
        tmp_name.push(".tmp");
        assert!(!path.with_file_name(tmp_name).exists());
        fs::remove_file(path).ok();
    }
}
