//! Dataset ingestion from CSV files and the synthetic Gaussian mixture.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pairgossip::Dataset64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{config_err, HarnessError, Result};

/// Raw label value to mapped label value.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap(pub Option<Vec<(f64, f64)>>);

impl LabelMap {
    /// Breast Cancer Wisconsin classes: benign `2 → −1`, malignant `4 → +1`.
    pub fn breast_cancer() -> Self {
        Self(Some(vec![(2.0, -1.0), (4.0, 1.0)]))
    }

    /// Labels are used as read.
    pub fn identity() -> Self {
        Self(None)
    }

    pub fn apply(&self, raw: f64) -> Option<f64> {
        match &self.0 {
            None => Some(raw),
            Some(pairs) => pairs.iter().find(|(from, _)| *from == raw).map(|&(_, to)| to),
        }
    }
}

impl fmt::Display for LabelMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("none"),
            Some(pairs) => {
                for (i, (from, to)) in pairs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{from}:{to}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LabelMap {
    type Err = HarnessError;

    /// `none` or comma-separated `from:to` pairs such as `2:-1,4:1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Self::identity());
        }
        let mut pairs = Vec::new();
        for item in s.split(',') {
            let parsed = item
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)));
            match parsed {
                Some(pair) => pairs.push(pair),
                None => return config_err(format!("label map entry `{item}` is not `from:to`")),
            }
        }
        Ok(Self(Some(pairs)))
    }
}

/// Column layout of a CSV data file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub has_header: bool,
    /// Column holding a sample identifier, excluded from the features unless
    /// `keep_id_as_feature` is set.
    pub id_column: Option<usize>,
    /// Label column; negative values count from the last column (`-1` is the last).
    pub label_column: Option<isize>,
    pub label_map: LabelMap,
    pub keep_id_as_feature: bool,
}

impl Default for CsvOptions {
    /// Layout of the UCI Breast Cancer Wisconsin file: no header, id first, class last.
    fn default() -> Self {
        Self {
            has_header: false,
            id_column: Some(0),
            label_column: Some(-1),
            label_map: LabelMap::breast_cancer(),
            keep_id_as_feature: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCsv {
    pub dataset: Dataset64,
    /// Rows skipped because a field was missing (`?` or empty).
    pub dropped: usize,
}

/// Reads a numeric CSV file into a dataset, dropping rows with missing values.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<LoadedCsv> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(file);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    let mut columns = None;
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::data(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let width = record.len();
        let label_col = match options.label_column {
            None => None,
            Some(c) => Some(resolve_column(c, width).ok_or_else(|| {
                HarnessError::data(path, format!("line {line}: label column {c} out of range for {width} columns"))
            })?),
        };
        if let Some(id) = options.id_column {
            if id >= width {
                return Err(HarnessError::data(path, format!("line {line}: id column {id} out of range")));
            }
        }
        columns.get_or_insert(width);
        if record.iter().any(|f| f.is_empty() || f == "?") {
            dropped += 1;
            continue;
        }
        let mut features = Vec::with_capacity(width);
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                HarnessError::data(path, format!("line {line}, column {}: cannot parse `{field}` as a number", c + 1))
            })?;
            if Some(c) == label_col {
                let mapped = options.label_map.apply(value).ok_or_else(|| {
                    HarnessError::data(
                        path,
                        format!("line {line}, column {}: label `{field}` not in the label map", c + 1),
                    )
                })?;
                labels.push(mapped);
            } else if Some(c) != options.id_column || options.keep_id_as_feature {
                features.push(value);
            }
        }
        points.push(features);
    }
    if columns.is_none() {
        return Err(HarnessError::data(path, "no data rows"));
    }
    if points.is_empty() {
        return Err(HarnessError::data(path, format!("all {dropped} rows have missing values")));
    }
    let labels = options.label_column.map(|_| labels);
    let dataset = Dataset64::new(points, labels).map_err(|e| HarnessError::data(path, e.to_string()))?;
    Ok(LoadedCsv { dataset, dropped })
}

fn resolve_column(c: isize, width: usize) -> Option<usize> {
    let idx = if c < 0 { width as isize + c } else { c };
    (0..width as isize).contains(&idx).then_some(idx as usize)
}

/// Writes `x0,…,x{d−1}[,label]` rows; identical datasets give identical bytes.
pub fn write_dataset_csv(data: &Dataset64, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..data.dim()).map(|c| format!("x{c}")).collect();
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(f64::to_string).collect();
        if let Some(y) = data.label(i) {
            row.push(y.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    let mut inner = w.into_inner().map_err(|e| HarnessError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| HarnessError::io(path, e))
}

/// Balanced mixture of isotropic Gaussians whose means lie in the span of the
/// first `subspace` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticMixtureSpec {
    pub n: usize,
    pub classes: usize,
    pub dim: usize,
    pub subspace: usize,
    /// Shared per-coordinate variance of every component.
    pub variance: f64,
    /// Standard deviation of the mean coordinates inside the subspace.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SyntheticMixtureSpec {
    fn default() -> Self {
        Self { n: 1000, classes: 10, dim: 40, subspace: 5, variance: 1.0, separation: 3.0, seed: 0 }
    }
}

impl SyntheticMixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.classes == 0 || self.dim == 0 {
            return config_err("mixture needs n, classes and dim >= 1");
        }
        if self.subspace == 0 || self.subspace > self.dim {
            return config_err(format!("mixture subspace {} must lie in 1..={}", self.subspace, self.dim));
        }
        if !(self.variance > 0.0) || !self.variance.is_finite() {
            return config_err("mixture variance must be positive");
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return config_err("mixture separation must be non-negative");
        }
        Ok(())
    }
}

/// Samples and component means of one mixture draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub dataset: Dataset64,
    pub means: Vec<Vec<f64>>,
}

/// Draws the mixture. Point `i` belongs to class `i mod classes` and carries the
/// class id as its label.
pub fn synth_mixture(spec: &SyntheticMixtureSpec) -> Result<Mixture> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            (0..spec.dim)
                .map(|c| if c < spec.subspace { spec.separation * unit.sample(&mut rng) } else { 0.0 })
                .collect()
        })
        .collect();
    let sd = spec.variance.sqrt();
    let mut points = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let class = i % spec.classes;
        points.push(means[class].iter().map(|&m| m + sd * unit.sample(&mut rng)).collect());
        labels.push(class as f64);
    }
    let dataset = Dataset64::new(points, Some(labels))?;
    Ok(Mixture { dataset, means })
}

/// Maps class ids to `+1` (even) and `−1` (odd).
pub fn binarize_parity(data: &Dataset64) -> Result<Dataset64> {
    let labels = data.require_labels()?;
    let mapped = labels.iter().map(|&y| if (y as i64) % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Ok(data.with_labels(mapped)?)
}

/// Where an experiment's observations come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        spec: SyntheticMixtureSpec,
        /// Take `n` from the graph's node count rather than `spec.n`.
        n_from_graph: bool,
        /// Apply [`binarize_parity`] to the class labels.
        parity: bool,
    },
    File {
        path: PathBuf,
        options: CsvOptions,
    },
}

/// A dataset together with human-readable notes on how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset64,
    pub notes: Vec<String>,
}

impl DataSource {
    /// Materializes the observations for a graph on `nodes` nodes.
    pub fn load(&self, nodes: usize) -> Result<Loaded> {
        match self {
            Self::Synthetic { spec, n_from_graph, parity } => {
                let spec = SyntheticMixtureSpec { n: if *n_from_graph { nodes } else { spec.n }, ..*spec };
                let mixture = synth_mixture(&spec)?;
                let dataset = if *parity { binarize_parity(&mixture.dataset)? } else { mixture.dataset };
                let note = format!(
                    "synthetic mixture: n={} classes={} dim={} subspace={} seed={}",
                    spec.n, spec.classes, spec.dim, spec.subspace, spec.seed
                );
                Ok(Loaded { dataset, notes: vec![note] })
            }
            Self::File { path, options } => {
                let loaded = load_csv(path, options)?;
                let note = format!(
                    "{}: {} rows loaded, {} dropped for missing values, dim={}",
                    path.display(),
                    loaded.dataset.len(),
                    loaded.dropped,
                    loaded.dataset.dim()
                );
                Ok(Loaded { dataset: loaded.dataset, notes: vec![note] })
            }
        }
    }
}
