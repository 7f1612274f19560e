//! Seeded optimizer trials, multi-trial aggregation and topology sweeps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use pairgossip::dualavg::{gossip_async, gossip_sync, risk, DaConfig, PairwiseObjective, Snapshot, SyncVariant};
use pairgossip::graph::{generate_with_notes, spectrum};
use pairgossip::losses::{auc, AucLogistic, MetricHinge};
use pairgossip::{bounds, Dataset64, Graph, SeededDraws, Topology};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{config_err, HarnessError, Result};

/// Which optimizer a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerMode {
    /// Synchronous gossip dual averaging with propagated observations.
    Sync,
    /// Asynchronous gossip dual averaging, one edge event per tick.
    Async,
    /// Synchronous run where each node pairs with a fresh uniform observation.
    Baseline,
}

impl fmt::Display for OptimizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sync => "sync",
            Self::Async => "async",
            Self::Baseline => "baseline",
        })
    }
}

impl FromStr for OptimizerMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sync" => Ok(Self::Sync),
            "async" => Ok(Self::Async),
            "baseline" => Ok(Self::Baseline),
            other => config_err(format!("unknown mode `{other}` (expected sync, async or baseline)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// Pairwise logistic AUC surrogate.
    Auc,
    /// Mahalanobis metric-learning hinge loss.
    Metric,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auc => "auc",
            Self::Metric => "metric",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auc" => Ok(Self::Auc),
            "metric" => Ok(Self::Metric),
            other => config_err(format!("unknown objective `{other}` (expected auc or metric)")),
        }
    }
}

/// Spectral summary of a network, printed identically by `pg spectral` and in
/// experiment manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub topology: Topology,
    pub nodes: usize,
    pub edges: usize,
    pub spectral_gap: f64,
    /// `λ_{n−1}/|E|`
    pub gap_ratio: f64,
    /// Contraction constant `c(𝒢)` of the mixing-time bound.
    pub c: f64,
    pub notes: Vec<String>,
}

impl SpectralReport {
    pub fn new(topology: Topology, g: &Graph, notes: Vec<String>) -> Result<Self> {
        let net = spectrum::<f64>(g)?.constants();
        Ok(Self {
            topology,
            nodes: g.node_count(),
            edges: g.edge_count(),
            spectral_gap: net.spectral_gap,
            gap_ratio: net.gap_ratio(),
            c: bounds::c_of_graph(&net),
            notes,
        })
    }
}

impl fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "topology = {}", self.topology)?;
        writeln!(f, "nodes = {}", self.nodes)?;
        writeln!(f, "edges = {}", self.edges)?;
        writeln!(f, "spectral_gap = {}", self.spectral_gap)?;
        writeln!(f, "gap_ratio = {}", self.gap_ratio)?;
        writeln!(f, "c = {}", self.c)?;
        for note in &self.notes {
            writeln!(f, "note = {note}")?;
        }
        Ok(())
    }
}

/// Graph, observations and objective shared by every trial of an experiment.
pub struct Problem {
    pub graph: Graph,
    pub topology: Topology,
    pub data: Dataset64,
    pub kind: ObjectiveKind,
    pub objective: Box<dyn PairwiseObjective<f64>>,
    /// Nodes whose averaged iterates are evaluated at recorded steps.
    pub eval_nodes: Vec<usize>,
    pub notes: Vec<String>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("topology", &self.topology)
            .field("nodes", &self.graph.node_count())
            .field("objective", &self.objective.name())
            .field("eval_nodes", &self.eval_nodes.len())
            .finish()
    }
}

impl Problem {
    /// Builds the problem for `cfg.topology`.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::for_topology(cfg, &cfg.topology)
    }

    pub fn for_topology(cfg: &ExperimentConfig, topology: &Topology) -> Result<Self> {
        let generated = generate_with_notes(topology)?;
        let loaded = cfg.data.load(generated.graph.node_count())?;
        let mut notes = generated.notes;
        notes.extend(loaded.notes);
        Self::new(generated.graph, generated.effective, loaded.dataset, cfg.objective, cfg.margin, cfg.hinge, notes)
    }

    pub fn new(
        graph: Graph,
        topology: Topology,
        data: Dataset64,
        kind: ObjectiveKind,
        margin: f64,
        hinge: pairgossip::losses::HingeConvention,
        notes: Vec<String>,
    ) -> Result<Self> {
        if data.len() != graph.node_count() {
            return Err(pairgossip::Error::Shape(format!(
                "dataset has {} points but the graph has {} nodes",
                data.len(),
                graph.node_count()
            ))
            .into());
        }
        let objective: Box<dyn PairwiseObjective<f64>> = match kind {
            ObjectiveKind::Auc => Box::new(AucLogistic::new(&data)?),
            ObjectiveKind::Metric => Box::new(MetricHinge::new(&data, margin, hinge)?),
        };
        let eval_nodes = eval_nodes(graph.node_count());
        Ok(Self { graph, topology, data, kind, objective, eval_nodes, notes })
    }
}

/// All nodes for networks of at most 100 nodes, otherwise 25 evenly spaced ones.
pub fn eval_nodes(n: usize) -> Vec<usize> {
    if n <= 100 {
        return (0..n).collect();
    }
    (0..25).map(|k| (k * (n - 1) + 12) / 24).collect()
}

/// Metrics of one evaluated node at a recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub node: usize,
    /// `F(θ̄_node)`
    pub risk: f64,
    pub auc: Option<f64>,
}

/// Network-level metrics at a recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    /// Mean of `F(θ̄_i)` over the evaluated nodes.
    pub risk: f64,
    /// Sample standard deviation of `F(θ̄_i)` over the evaluated nodes.
    pub risk_std: f64,
    /// `ε̂(t)ᵀω̂(t)` for synchronous runs that record the bias.
    pub bias_inner: Option<f64>,
    pub auc: Option<f64>,
    pub nodes: Vec<NodeMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub safety_hits: usize,
}

/// Optimizer settings of a run, separated from the data description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub mode: OptimizerMode,
    pub da: DaConfig<f64>,
    pub record_bias: bool,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let da = DaConfig::new(cfg.schedule, cfg.projection, cfg.iterations)
            .record_every(cfg.record_every)
            .safety_radius(cfg.safety_radius);
        Self { mode: cfg.mode, da, record_bias: cfg.record_bias }
    }
}

/// Sample mean and standard deviation (`n − 1` denominator, 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn evaluate(problem: &Problem, snap: &Snapshot<'_, f64>) -> pairgossip::Result<StepRecord> {
    let mut nodes = Vec::with_capacity(problem.eval_nodes.len());
    for &k in &problem.eval_nodes {
        let theta = &snap.nodes.theta_bar[k];
        let r = risk(problem.objective.as_ref(), &problem.data, theta);
        let a = match problem.kind {
            ObjectiveKind::Auc => Some(auc(&problem.data, theta)?),
            ObjectiveKind::Metric => None,
        };
        nodes.push(NodeMetrics { node: k, risk: r, auc: a });
    }
    let risks: Vec<f64> = nodes.iter().map(|m| m.risk).collect();
    let (risk, risk_std) = mean_std(&risks);
    let auc = match problem.kind {
        ObjectiveKind::Auc => Some(nodes.iter().filter_map(|m| m.auc).sum::<f64>() / nodes.len() as f64),
        ObjectiveKind::Metric => None,
    };
    Ok(StepRecord { t: snap.t, risk, risk_std, bias_inner: snap.bias.map(|b| b.inner), auc, nodes })
}

/// One optimizer run driven by `SeededDraws::new(seed)`.
pub fn run_trial(problem: &Problem, settings: &RunSettings, seed: u64) -> Result<TrialRun> {
    let mut draws = SeededDraws::new(seed);
    let mut records = Vec::new();
    let observer = |snap: Snapshot<'_, f64>| {
        records.push(evaluate(problem, &snap)?);
        Ok(())
    };
    let (g, obj, data, da) = (&problem.graph, problem.objective.as_ref(), &problem.data, &settings.da);
    let states = match settings.mode {
        OptimizerMode::Sync => {
            gossip_sync(g, obj, data, da, SyncVariant::Gossip, settings.record_bias, &mut draws, observer)
        }
        OptimizerMode::Baseline => {
            gossip_sync(g, obj, data, da, SyncVariant::UnbiasedBaseline, settings.record_bias, &mut draws, observer)
        }
        OptimizerMode::Async => gossip_async(g, obj, data, da, &mut draws, observer),
    }?;
    Ok(TrialRun { seed, records, safety_hits: states.safety_hits })
}

/// Cross-trial summary at one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_risk: f64,
    pub std_risk: f64,
    pub mean_bias_inner: Option<f64>,
    pub mean_auc: Option<f64>,
}

/// Averages the trials step by step in trial order.
pub fn aggregate(trials: &[TrialRun]) -> Vec<AggregateRow> {
    let Some(first) = trials.first() else {
        return Vec::new();
    };
    let mean_opt = |values: Vec<Option<f64>>| -> Option<f64> {
        let present: Vec<f64> = values.into_iter().flatten().collect();
        (!present.is_empty()).then(|| mean_std(&present).0)
    };
    (0..first.records.len())
        .map(|idx| {
            let risks: Vec<f64> = trials.iter().map(|tr| tr.records[idx].risk).collect();
            let (mean_risk, std_risk) = mean_std(&risks);
            AggregateRow {
                t: first.records[idx].t,
                mean_risk,
                std_risk,
                mean_bias_inner: mean_opt(trials.iter().map(|tr| tr.records[idx].bias_inner).collect()),
                mean_auc: mean_opt(trials.iter().map(|tr| tr.records[idx].auc).collect()),
            }
        })
        .collect()
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub spectral: SpectralReport,
    pub trials: Vec<TrialRun>,
    pub aggregate: Vec<AggregateRow>,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn safety_hits(&self) -> usize {
        self.trials.iter().map(|t| t.safety_hits).sum()
    }
}

/// Seeds of the trials: `base_seed, base_seed + 1, …`.
pub fn trial_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.trials as u64).map(|r| cfg.base_seed.wrapping_add(r)).collect()
}

/// Runs every trial of `cfg` on `cfg.topology`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_on(cfg, &cfg.topology)
}

/// Runs every trial of `cfg` on `topology`.
pub fn run_on(cfg: &ExperimentConfig, topology: &Topology) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = Problem::for_topology(cfg, topology)?;
    let spectral = SpectralReport::new(problem.topology.clone(), &problem.graph, Vec::new())?;
    let settings = RunSettings::from_config(cfg);
    let seeds = trial_seeds(cfg);
    let one = |&seed: &u64| {
        run_trial(&problem, &settings, seed).map_err(|e| HarnessError::Trial { seed, source: Box::new(e) })
    };
    let trials: Vec<TrialRun> = if cfg.parallel {
        seeds.par_iter().map(one).collect::<Result<_>>()?
    } else {
        seeds.iter().map(one).collect::<Result<_>>()?
    };
    let aggregate = aggregate(&trials);
    Ok(ExperimentReport {
        spectral,
        trials,
        aggregate,
        seeds,
        wall_time_s: start.elapsed().as_secs_f64(),
        notes: problem.notes,
    })
}

/// Runs the same configuration over several topologies, in the given order.
pub fn run_sweep(cfg: &ExperimentConfig, topologies: &[Topology]) -> Result<Vec<ExperimentReport>> {
    if topologies.is_empty() {
        return config_err("sweep needs at least one topology");
    }
    topologies.iter().map(|t| run_on(cfg, t)).collect()
}

/// Parses a comma-separated topology list such as `complete:100,grid:100`.
pub fn parse_topology_list(text: &str) -> Result<Vec<Topology>> {
    text.split(',').map(|t| Ok(t.trim().parse::<Topology>()?)).collect()
}
