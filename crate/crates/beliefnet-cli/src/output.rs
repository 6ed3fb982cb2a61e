//! File formats: CSV series, JSON summaries, and the run manifest.
//!
//! CSV files use a comma delimiter, LF line endings, a header row, and UTF-8.
//! Floats in CSV are printed with 17 significant digits (`{:.16e}`) so values
//! round-trip exactly and independent implementations can diff output files
//! byte for byte. JSON floats use serde_json's shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use beliefnet::classify::RegionGrid;
use beliefnet::dynamics::Trajectory;
use beliefnet::harness::{ExperimentConfig, ReplicateSummary, SpeedSweepResult};
use beliefnet::metrics::MetricSeries;

/// 17-significant-digit scientific form; parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Long-format trajectory: one row per (recorded step, agent, state).
pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,agent,state_index,belief")?;
    for state in &trajectory.states {
        for (agent, profile) in state.beliefs.iter().enumerate() {
            for (m, &belief) in profile.beliefs().iter().enumerate() {
                writeln!(w, "{},{},{},{}", state.t, agent, m, fmt_f64(belief))?;
            }
        }
    }
    w.flush()
}

/// Per-step metric series.
pub fn write_metrics_csv(path: &Path, series: &MetricSeries) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,e_t,consensus_gap,mean_truth_belief,min_truth_belief")?;
    for r in &series.records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t,
            fmt_f64(r.belief_uncertainty),
            fmt_f64(r.consensus_gap),
            fmt_f64(r.mean_truth_belief),
            fmt_f64(r.min_truth_belief)
        )?;
    }
    w.flush()
}

/// Region sweep table: `alpha,beta,h,k,type`.
pub fn write_region_csv(path: &Path, grid: &RegionGrid) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "alpha,beta,h,k,type")?;
    for c in &grid.cells {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(c.alpha),
            fmt_f64(c.beta),
            fmt_f64(c.h),
            fmt_f64(c.k),
            c.agent_type
        )?;
    }
    w.flush()
}

/// Speed sweep table: `alpha,beta,abs_k,abs_log_e50`.
pub fn write_speed_csv(path: &Path, result: &SpeedSweepResult) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "alpha,beta,abs_k,abs_log_e50")?;
    for c in &result.cells {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(c.alpha),
            fmt_f64(c.beta),
            fmt_f64(c.abs_k),
            fmt_f64(c.abs_log_e_final)
        )?;
    }
    w.flush()
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Replicate summary, verified on load.
pub fn write_summary_json(path: &Path, summary: &ReplicateSummary) -> std::io::Result<()> {
    write_json_pretty(path, summary)
}

/// Loads a summary and re-checks that its aggregate matches the rows.
pub fn load_summary_json(path: &Path) -> Result<ReplicateSummary, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let summary: ReplicateSummary =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if !summary.verify() {
        return Err(format!(
            "{}: aggregate statistics do not match the per-replicate rows",
            path.display()
        ));
    }
    Ok(summary)
}

/// Record of one CLI run: what produced which files, under which seed.
///
/// `duration_seconds` is wall-clock time and is the one field excluded from
/// byte-identity guarantees; every data file is written deterministically.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
    pub clamped_entries: u64,
    pub max_normalization_deviation: f64,
}

pub fn write_manifest_json(path: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    write_json_pretty(path, manifest)
}

/// Parses a JSON experiment configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    config
        .validate()
        .map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(config)
}

/// Serializes a config in the same JSON form `load_config` accepts.
pub fn config_to_json(config: &ExperimentConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    text
}

/// Joins an output directory and file name, creating the directory.
pub fn prepare_output(dir: &Path, name: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}
