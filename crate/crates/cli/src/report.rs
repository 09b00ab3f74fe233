//! Writes `manifest.json`, `report.json` and per-trace CSV files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::ReportBundle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    seed: u64,
    experiments: Vec<&'a str>,
    config: &'a ExperimentConfig,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

pub fn manifest_json(bundle: &ReportBundle) -> String {
    pretty(&Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: lambda_core::VERSION,
        seed: bundle.seed,
        experiments: bundle.config.experiments.iter().map(|e| e.name.as_str()).collect(),
        config: &bundle.config,
    })
}

pub fn report_json(bundle: &ReportBundle) -> String {
    pretty(bundle)
}

/// Writes the bundle into `dir` and returns the files written, manifest first.
pub fn emit_report(bundle: &ReportBundle, dir: &Path, format: Format) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let manifest = dir.join("manifest.json");
    fs::write(&manifest, manifest_json(bundle))?;
    written.push(manifest);
    if format.json() {
        let report = dir.join("report.json");
        fs::write(&report, report_json(bundle))?;
        written.push(report);
    }
    if format.csv() {
        for trace in bundle.experiments.iter().flat_map(|r| &r.traces) {
            let path = dir.join(format!("{}.csv", trace.file_stem));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&trace.header)?;
            for row in &trace.rows {
                w.write_record(row)?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}
