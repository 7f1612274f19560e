//! Flat `key = value` configuration files with `[section]` headers.
//!
//! ```text
//! [experiment]
//! mode = sync
//! iterations = 2000
//!
//! [graph]
//! topology = "complete:100"
//! ```
//!
//! Keys are addressed as `section.key`. `#` starts a comment, surrounding double
//! quotes around a value are removed, and unknown keys are rejected so typos do
//! not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pairgossip::dualavg::{ProjectionSpec, StepSchedule};
use pairgossip::graph::Topology;
use pairgossip::losses::HingeConvention;

use crate::data::{CsvOptions, DataSource, LabelMap, SyntheticMixtureSpec};
use crate::error::{config_err, HarnessError, Result};
use crate::experiment::{ObjectiveKind, OptimizerMode};

/// Parsed `section.key → value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return config_err(format!("line {}: unterminated section header", lineno + 1));
                };
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return config_err(format!("line {}: expected `key = value`", lineno + 1));
            };
            let key = key.trim();
            if key.is_empty() {
                return config_err(format!("line {}: empty key", lineno + 1));
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            let value = unquote(value.trim()).to_string();
            if entries.insert(full.clone(), value).is_some() {
                return config_err(format!("line {}: duplicate key `{full}`", lineno + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| HarnessError::Config(format!("`{key}` = `{v}`: {e}"))))
            .transpose()
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

const KNOWN_KEYS: &[&str] = &[
    "experiment.name",
    "experiment.mode",
    "experiment.objective",
    "experiment.iterations",
    "experiment.trials",
    "experiment.base_seed",
    "experiment.record_every",
    "experiment.output",
    "experiment.parallel",
    "experiment.record_bias",
    "graph.topology",
    "schedule.a",
    "schedule.alpha",
    "projection.psi",
    "projection.safety_radius",
    "objective.margin",
    "objective.hinge",
    "data.source",
    "data.path",
    "data.has_header",
    "data.id_column",
    "data.label_column",
    "data.label_map",
    "data.keep_id_as_feature",
    "data.n",
    "data.classes",
    "data.dim",
    "data.subspace",
    "data.variance",
    "data.separation",
    "data.seed",
    "data.binarize",
];

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: Topology,
    pub mode: OptimizerMode,
    pub objective: ObjectiveKind,
    pub margin: f64,
    pub hinge: HingeConvention,
    pub schedule: StepSchedule<f64>,
    pub projection: ProjectionSpec<f64>,
    pub safety_radius: Option<f64>,
    pub iterations: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub record_every: usize,
    pub output: PathBuf,
    pub data: DataSource,
    pub parallel: bool,
    pub record_bias: bool,
}

impl Default for ExperimentConfig {
    /// Protocol constants of the AUC experiments: 50 trials, `γ(t) = 10⁻³/√t`, no
    /// explicit regularization and a safety ball of radius 10⁶.
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            topology: Topology::Complete { n: 100 },
            mode: OptimizerMode::Sync,
            objective: ObjectiveKind::Auc,
            margin: 1.0,
            hinge: HingeConvention::OneMinus,
            schedule: StepSchedule { a: 1e-3, alpha: -0.5 },
            projection: ProjectionSpec::None,
            safety_radius: Some(1e6),
            iterations: 2000,
            trials: 50,
            base_seed: 0,
            record_every: 100,
            output: PathBuf::from("out"),
            data: DataSource::Synthetic { spec: SyntheticMixtureSpec::default(), n_from_graph: true, parity: true },
            parallel: true,
            record_bias: true,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => config_err(format!("`{key}` = `{v}`: expected true or false")),
    }
}

fn parse_optional<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if v.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    v.parse::<T>().map(Some).map_err(|e| HarnessError::Config(format!("`{key}` = `{v}`: {e}")))
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_config(&ConfigFile::parse(&text)?)
    }

    pub fn from_config(file: &ConfigFile) -> Result<Self> {
        if let Some(unknown) = file.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return config_err(format!("unknown key `{unknown}`"));
        }
        let mut cfg = Self::default();
        if let Some(v) = file.get("experiment.name") {
            cfg.name = v.to_string();
        }
        if let Some(v) = file.parsed("experiment.mode")? {
            cfg.mode = v;
        }
        if let Some(v) = file.parsed("experiment.objective")? {
            cfg.objective = v;
        }
        if let Some(v) = file.parsed("experiment.iterations")? {
            cfg.iterations = v;
        }
        if let Some(v) = file.parsed("experiment.trials")? {
            cfg.trials = v;
        }
        if let Some(v) = file.parsed("experiment.base_seed")? {
            cfg.base_seed = v;
        }
        if let Some(v) = file.parsed("experiment.record_every")? {
            cfg.record_every = v;
        }
        if let Some(v) = file.get("experiment.output") {
            cfg.output = PathBuf::from(v);
        }
        if let Some(v) = file.get("experiment.parallel") {
            cfg.parallel = parse_bool("experiment.parallel", v)?;
        }
        if let Some(v) = file.get("experiment.record_bias") {
            cfg.record_bias = parse_bool("experiment.record_bias", v)?;
        }
        if let Some(v) = file.parsed("graph.topology")? {
            cfg.topology = v;
        }
        let a = file.parsed("schedule.a")?.unwrap_or(cfg.schedule.a);
        let alpha = file.parsed("schedule.alpha")?.unwrap_or(cfg.schedule.alpha);
        cfg.schedule = StepSchedule::new(a, alpha)?;
        if let Some(v) = file.parsed("projection.psi")? {
            cfg.projection = v;
        }
        if let Some(v) = file.get("projection.safety_radius") {
            cfg.safety_radius = parse_optional("projection.safety_radius", v)?;
        }
        if let Some(v) = file.parsed("objective.margin")? {
            cfg.margin = v;
        }
        if let Some(v) = file.parsed("objective.hinge")? {
            cfg.hinge = v;
        }
        cfg.data = parse_data(file)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return config_err("experiment.trials must be >= 1");
        }
        if self.iterations == 0 {
            return config_err("experiment.iterations must be >= 1");
        }
        if self.record_every == 0 {
            return config_err("experiment.record_every must be >= 1");
        }
        if !(self.margin > 0.0) {
            return config_err("objective.margin must be positive");
        }
        if let Some(r) = self.safety_radius {
            if !(r > 0.0) {
                return config_err("projection.safety_radius must be positive or none");
            }
        }
        if let DataSource::Synthetic { spec, n_from_graph, .. } = &self.data {
            let n = if *n_from_graph { spec.n.max(1) } else { spec.n };
            SyntheticMixtureSpec { n, ..*spec }.validate()?;
        }
        Ok(())
    }

    /// Canonical text form with every setting spelled out; parses back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |r| r.to_string());
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(s, "name = \"{}\"", self.name);
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "objective = {}", self.objective);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "output = \"{}\"", self.output.display());
        let _ = writeln!(s, "parallel = {}", self.parallel);
        let _ = writeln!(s, "record_bias = {}", self.record_bias);
        let _ = writeln!(s, "\n[graph]\ntopology = \"{}\"", self.topology);
        let _ = writeln!(s, "\n[schedule]\na = {}\nalpha = {}", self.schedule.a, self.schedule.alpha);
        let _ = writeln!(s, "\n[projection]\npsi = {}\nsafety_radius = {}", self.projection, opt(self.safety_radius));
        let _ = writeln!(s, "\n[objective]\nmargin = {}\nhinge = {}", self.margin, self.hinge);
        let _ = writeln!(s, "\n[data]");
        match &self.data {
            DataSource::Synthetic { spec, n_from_graph, parity } => {
                let _ = writeln!(s, "source = synthetic");
                if !n_from_graph {
                    let _ = writeln!(s, "n = {}", spec.n);
                }
                let _ = writeln!(s, "classes = {}", spec.classes);
                let _ = writeln!(s, "dim = {}", spec.dim);
                let _ = writeln!(s, "subspace = {}", spec.subspace);
                let _ = writeln!(s, "variance = {}", spec.variance);
                let _ = writeln!(s, "separation = {}", spec.separation);
                let _ = writeln!(s, "seed = {}", spec.seed);
                let _ = writeln!(s, "binarize = {}", if *parity { "parity" } else { "none" });
            }
            DataSource::File { path, options } => {
                let _ = writeln!(s, "source = file");
                let _ = writeln!(s, "path = \"{}\"", path.display());
                let _ = writeln!(s, "has_header = {}", options.has_header);
                let _ = writeln!(s, "id_column = {}", options.id_column.map_or("none".into(), |c| c.to_string()));
                let _ = writeln!(s, "label_column = {}", options.label_column.map_or("none".into(), |c| c.to_string()));
                let _ = writeln!(s, "label_map = \"{}\"", options.label_map);
                let _ = writeln!(s, "keep_id_as_feature = {}", options.keep_id_as_feature);
            }
        }
        s
    }
}

fn parse_data(file: &ConfigFile) -> Result<DataSource> {
    let source = file.get("data.source").unwrap_or("synthetic");
    let synthetic_keys = ["n", "classes", "dim", "subspace", "variance", "separation", "seed", "binarize"];
    let file_keys = ["path", "has_header", "id_column", "label_column", "label_map", "keep_id_as_feature"];
    let (own, foreign): (&[&str], &[&str]) = match source {
        "synthetic" => (&synthetic_keys, &file_keys),
        "file" => (&file_keys, &synthetic_keys),
        other => return config_err(format!("data.source must be synthetic or file, got `{other}`")),
    };
    debug_assert!(!own.is_empty());
    if let Some(k) = foreign.iter().find(|k| file.get(&format!("data.{k}")).is_some()) {
        return config_err(format!("data.{k} does not apply to data.source = {source}"));
    }
    if source == "synthetic" {
        let mut spec = SyntheticMixtureSpec::default();
        let n: Option<usize> = file.parsed("data.n")?;
        if let Some(n) = n {
            spec.n = n;
        }
        if let Some(v) = file.parsed("data.classes")? {
            spec.classes = v;
        }
        if let Some(v) = file.parsed("data.dim")? {
            spec.dim = v;
        }
        if let Some(v) = file.parsed("data.subspace")? {
            spec.subspace = v;
        }
        if let Some(v) = file.parsed("data.variance")? {
            spec.variance = v;
        }
        if let Some(v) = file.parsed("data.separation")? {
            spec.separation = v;
        }
        if let Some(v) = file.parsed("data.seed")? {
            spec.seed = v;
        }
        let parity = match file.get("data.binarize").unwrap_or("parity") {
            "parity" => true,
            "none" => false,
            other => return config_err(format!("data.binarize must be parity or none, got `{other}`")),
        };
        return Ok(DataSource::Synthetic { spec, n_from_graph: n.is_none(), parity });
    }
    let Some(path) = file.get("data.path") else {
        return config_err("data.source = file needs data.path");
    };
    let mut options = CsvOptions::default();
    if let Some(v) = file.get("data.has_header") {
        options.has_header = parse_bool("data.has_header", v)?;
    }
    if let Some(v) = file.get("data.id_column") {
        options.id_column = parse_optional("data.id_column", v)?;
    }
    if let Some(v) = file.get("data.label_column") {
        options.label_column = parse_optional("data.label_column", v)?;
    }
    if let Some(v) = file.parsed::<LabelMap>("data.label_map")? {
        options.label_map = v;
    }
    if let Some(v) = file.get("data.keep_id_as_feature") {
        options.keep_id_as_feature = parse_bool("data.keep_id_as_feature", v)?;
    }
    Ok(DataSource::File { path: PathBuf::from(path), options })
}
