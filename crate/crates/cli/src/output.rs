//! Artifact files and the run manifest.

use std::path::Path;

use serde_json::json;

use crate::commands::Outcome;
use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

/// The manifest for a run: tool version, resolved configuration and the
/// artifacts written.
pub fn manifest(cfg: &RunConfig, outcome: &Outcome) -> String {
    let artifacts: Vec<_> = selected(cfg, outcome)
        .map(|(name, contents)| json!({ "name": name, "bytes": contents.len() }))
        .collect();
    let m = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
        "artifacts": artifacts,
        "summary": outcome.summary,
    });
    let mut text = serde_json::to_string_pretty(&m).expect("manifests serialize");
    text.push('\n');
    text
}

fn selected<'a>(cfg: &'a RunConfig, outcome: &'a Outcome) -> impl Iterator<Item = &'a (String, String)> {
    outcome.artifacts.iter().filter(|(name, _)| Format::of(name).is_none_or(|f| cfg.formats.contains(&f)))
}

/// Writes the selected artifacts and the manifest into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let fail = |path: &Path, source| CliError::Output { path: path.display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(|e| fail(dir, e))?;
    for (name, contents) in selected(cfg, outcome) {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| fail(&path, e))?;
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, manifest(cfg, outcome)).map_err(|e| fail(&path, e))
}
