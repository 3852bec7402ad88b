//! Flat `key = value` config files with one `[section]` per scenario.
//!
//! A section extends a catalog entry: it must name its base scenario with
//! `base = <name>` and may add any override pair the command line accepts.
//! Blank lines and full-line `#` comments are skipped. Only the requested
//! section is validated, so unrelated sections can hold anything.

use crate::commands::CliError;
use std::fs;

/// Loads `path#section` and returns the base catalog name, the remaining
/// pairs as `key=value` strings in file order, and the section name (which
/// becomes the scenario name on artifacts).
pub fn load_section(scenario_ref: &str) -> Result<(String, Vec<String>, String), CliError> {
    let (path, section) = scenario_ref.split_once('#').ok_or_else(|| {
        CliError::Usage(format!(
            "config reference '{scenario_ref}': expected file#section"
        ))
    })?;
    if section.is_empty() {
        return Err(CliError::Usage(format!(
            "config reference '{scenario_ref}': empty section name"
        )));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config '{path}': {e}")))?;

    let mut in_section = false;
    let mut found = false;
    let mut base: Option<String> = None;
    let mut pairs: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            in_section = inner.trim() == section;
            found |= in_section;
            continue;
        }
        if !in_section {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{path}:{}: expected key = value", idx + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k == "base" {
            base = Some(v.to_string());
        } else {
            pairs.push(format!("{k}={v}"));
        }
    }
    if !found {
        return Err(CliError::Usage(format!(
            "config '{path}' has no section [{section}]"
        )));
    }
    let base = base.ok_or_else(|| {
        CliError::Usage(format!(
            "section [{section}] in '{path}' is missing base = <scenario>"
        ))
    })?;
    Ok((base, pairs, section.to_string()))
}
