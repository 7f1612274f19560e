//! CSV and manifest output. Floats use Rust's shortest round-trip formatting, so
//! identical results give identical bytes.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pairgossip::estimation::Trajectory;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{AggregateRow, ExperimentReport, TrialRun};

pub const AGGREGATE_HEADER: [&str; 5] = ["t", "mean_risk", "std_risk", "mean_bias_inner", "mean_auc"];
pub const OPTIMIZER_HEADER: [&str; 7] = ["t", "node_id", "risk", "risk_std", "bias_inner", "auc", "seed"];
pub const ESTIMATION_HEADER: [&str; 6] = ["t", "node_err_l2", "mean_z", "std_z", "seed", "protocol"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Opens `path` for writing, or standard output when `path` is `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
            }
            let f = File::create(p).map_err(|e| HarnessError::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn finish<W: Write>(w: csv::Writer<W>, what: &Path) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| HarnessError::io(what, e.into_error()))?;
    inner.flush().map_err(|e| HarnessError::io(what, e))
}

fn aggregate_fields(row: &AggregateRow) -> [String; 5] {
    [
        row.t.to_string(),
        row.mean_risk.to_string(),
        row.std_risk.to_string(),
        opt(row.mean_bias_inner),
        opt(row.mean_auc),
    ]
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow], label: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for row in rows {
        w.write_record(aggregate_fields(row))?;
    }
    finish(w, label)
}

/// Optimizer rows: one `mean` row per recorded step, followed by one row per
/// evaluated node when `per_node` is set.
pub fn write_trials<W: Write>(out: W, trials: &[TrialRun], per_node: bool, label: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OPTIMIZER_HEADER)?;
    for trial in trials {
        let seed = trial.seed.to_string();
        for rec in &trial.records {
            let t = rec.t.to_string();
            w.write_record([
                t.as_str(),
                "mean",
                &rec.risk.to_string(),
                &rec.risk_std.to_string(),
                &opt(rec.bias_inner),
                &opt(rec.auc),
                &seed,
            ])?;
            if per_node {
                for m in &rec.nodes {
                    w.write_record([&t, &m.node.to_string(), &m.risk.to_string(), "", "", &opt(m.auc), &seed])?;
                }
            }
        }
    }
    finish(w, label)
}

pub fn write_estimation<W: Write>(out: W, runs: &[Trajectory<f64>], label: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATION_HEADER)?;
    for run in runs {
        let seed = run.seed.map_or_else(String::new, |s| s.to_string());
        for p in &run.points {
            w.write_record([
                p.t.to_string(),
                p.error.to_string(),
                p.mean.to_string(),
                p.std.to_string(),
                seed.clone(),
                run.protocol.to_string(),
            ])?;
        }
    }
    finish(w, label)
}

/// Manifest text: configuration echo, spectral report and run summary.
pub fn manifest(cfg: &ExperimentConfig, reports: &[&ExperimentReport]) -> String {
    let mut s = String::from("# pairgossip experiment manifest\n\n");
    s.push_str(&cfg.to_config_text());
    for r in reports {
        let _ = writeln!(s, "\n[spectral]");
        s.push_str(&r.spectral.to_string());
        let _ = writeln!(s, "\n[run]");
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds = {}", seeds.join(","));
        let _ = writeln!(s, "wall_time_s = {:.3}", r.wall_time_s);
        let _ = writeln!(s, "safety_hits = {}", r.safety_hits());
        for note in &r.notes {
            let _ = writeln!(s, "note = {note}");
        }
    }
    s
}

/// Paths written by [`write_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFiles {
    pub aggregate: PathBuf,
    pub trials: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `aggregate.csv`, `trials.csv` and `manifest.txt` into `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<ExperimentFiles> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let files = ExperimentFiles {
        aggregate: dir.join("aggregate.csv"),
        trials: dir.join("trials.csv"),
        manifest: dir.join("manifest.txt"),
    };
    write_aggregate(sink(Some(&files.aggregate))?, &report.aggregate, &files.aggregate)?;
    write_trials(sink(Some(&files.trials))?, &report.trials, false, &files.trials)?;
    fs::write(&files.manifest, manifest(cfg, &[report])).map_err(|e| HarnessError::io(&files.manifest, e))?;
    Ok(files)
}

/// Writes a long-format `sweep.csv` (a `topology` column followed by the aggregate
/// columns) and `manifest.txt` into `dir`. Returns the CSV path.
pub fn write_sweep(dir: &Path, cfg: &ExperimentConfig, reports: &[ExperimentReport]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join("sweep.csv");
    let mut w = csv::Writer::from_writer(sink(Some(&path))?);
    let mut header = vec!["topology"];
    header.extend(AGGREGATE_HEADER);
    w.write_record(&header)?;
    for r in reports {
        let topo = r.spectral.topology.to_string();
        for row in &r.aggregate {
            let mut rec = vec![topo.clone()];
            rec.extend(aggregate_fields(row));
            w.write_record(&rec)?;
        }
    }
    finish(w, &path)?;
    let manifest_path = dir.join("manifest.txt");
    let refs: Vec<&ExperimentReport> = reports.iter().collect();
    fs::write(&manifest_path, manifest(cfg, &refs)).map_err(|e| HarnessError::io(&manifest_path, e))?;
    Ok(path)
}
