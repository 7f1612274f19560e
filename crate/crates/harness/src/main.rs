use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pairgossip::bounds::{
    c_of_graph, centralized_da_bound, delta_tilde, lower_bound, mixing_time, rate_bound_corollary, worst_pair,
};
use pairgossip::dualavg::{ProjectionSpec, StepSchedule};
use pairgossip::estimation::{simulate, Protocol};
use pairgossip::graph::{generate_with_notes, spectrum};
use pairgossip::losses::HingeConvention;
use pairgossip::pairwise::{kernel_matrix, ClusterScatterKernel, GiniKernel, ProductKernel, SumKernel, VarianceKernel};
use pairgossip::{Dataset64, KernelMatrix64, Topology};
use pairgossip_harness::data::{
    synth_mixture, write_dataset_csv, CsvOptions, DataSource, LabelMap, SyntheticMixtureSpec,
};
use pairgossip_harness::experiment::{
    run_trial, trial_seeds, ObjectiveKind, OptimizerMode, Problem, RunSettings, SpectralReport,
};
use pairgossip_harness::report::{sink, write_estimation, write_experiment, write_sweep, write_trials};
use pairgossip_harness::{experiment, ExperimentConfig, HarnessError, Result};

/// Gossip estimation and optimization of pairwise functionals.
#[derive(Debug, Parser)]
#[command(name = "pg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Laplacian spectral gap and derived constants of a topology.
    Spectral {
        #[arg(long)]
        topology: Topology,
    },
    /// Gossip estimation of a U-statistic; writes `t,node_err_l2,mean_z,std_z,seed,protocol`.
    Estimate(EstimateArgs),
    /// One gossip dual-averaging run; writes `t,node_id,risk,risk_std,bias_inner,auc,seed`.
    Optimize(OptimizeArgs),
    /// Convergence and lower bounds for a topology.
    Bounds(BoundsArgs),
    /// Multi-trial experiment from a configuration file.
    Experiment(ExperimentArgs),
    /// Writes a synthetic Gaussian-mixture dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// `synthetic` or the path of a CSV file.
    #[arg(long, default_value = "synthetic")]
    data: String,
    #[arg(long, default_value_t = 40)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 5)]
    subspace: usize,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    /// Seed of the synthetic mixture; defaults to `--seed`.
    #[arg(long)]
    data_seed: Option<u64>,
    /// CSV input has a header row.
    #[arg(long)]
    has_header: bool,
    /// Keep the id column of a CSV input as a feature.
    #[arg(long)]
    keep_id_as_feature: bool,
    /// Raw-to-mapped label pairs for CSV input, or `none`.
    #[arg(long, default_value = "2:-1,4:1")]
    label_map: LabelMap,
}

impl DataArgs {
    fn source(&self, seed: u64, parity: bool) -> DataSource {
        if self.data == "synthetic" {
            let spec = SyntheticMixtureSpec {
                n: SyntheticMixtureSpec::default().n,
                classes: self.classes,
                dim: self.dim,
                subspace: self.subspace,
                variance: self.variance,
                separation: self.separation,
                seed: self.data_seed.unwrap_or(seed),
            };
            DataSource::Synthetic { spec, n_from_graph: true, parity }
        } else {
            let options = CsvOptions {
                has_header: self.has_header,
                keep_id_as_feature: self.keep_id_as_feature,
                label_map: self.label_map.clone(),
                ..CsvOptions::default()
            };
            DataSource::File { path: PathBuf::from(&self.data), options }
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum KernelChoice {
    Product,
    Sum,
    Variance,
    Gini,
    Scatter,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    topology: Topology,
    /// gosta, u1, u2 or gosta-async.
    #[arg(long, default_value = "gosta")]
    protocol: Protocol,
    #[arg(long, value_enum, default_value = "product")]
    kernel: KernelChoice,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 10)]
    record_every: usize,
    /// Number of independent runs, seeded `seed, seed + 1, …`.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    data: DataArgs,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    topology: Topology,
    #[arg(long, default_value = "sync")]
    mode: OptimizerMode,
    #[arg(long, default_value = "auc")]
    objective: ObjectiveKind,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    record_every: usize,
    /// Step scale `a` in `γ(t) = a·t^α`.
    #[arg(long, default_value_t = 1e-3)]
    a: f64,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    alpha: f64,
    /// `none`, `ball:<r>` or `psd:<d>`.
    #[arg(long, default_value = "none")]
    projection: ProjectionSpec<f64>,
    /// Radius of the safety ball, or `none`.
    #[arg(long, default_value = "1e6")]
    safety_radius: String,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value = "one-minus")]
    hinge: HingeConvention,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the bias record of synchronous runs.
    #[arg(long)]
    no_bias: bool,
    /// Only write the network-mean rows.
    #[arg(long)]
    mean_only: bool,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    topology: Topology,
    /// Horizon `T`.
    #[arg(long, default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    /// `‖θ(0) − θ*‖`, also the radius `R` of the lower bound.
    #[arg(long, default_value_t = 1.0)]
    dist0: f64,
    /// Accuracy of the mixing time.
    #[arg(long, default_value_t = 1e-2)]
    eps: f64,
    /// Also write `t,corollary,centralized,lower_bound` every this many steps.
    #[arg(long, default_value_t = 100)]
    record_every: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated topologies to run the configuration over.
    #[arg(long)]
    sweep: Option<String>,
    /// Overrides `experiment.base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the trials one after another.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 40)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    subspace: usize,
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace class ids by `+1` (even) and `−1` (odd).
    #[arg(long)]
    parity: bool,
    #[arg(long)]
    out: PathBuf,
}

fn spectral(topology: &Topology) -> Result<()> {
    let generated = generate_with_notes(topology)?;
    let report = SpectralReport::new(generated.effective, &generated.graph, generated.notes)?;
    print!("{report}");
    Ok(())
}

fn kernel_for(choice: KernelChoice, data: &Dataset64) -> Result<KernelMatrix64> {
    Ok(match choice {
        KernelChoice::Product => kernel_matrix(&ProductKernel, data)?,
        KernelChoice::Sum => kernel_matrix(&SumKernel, data)?,
        KernelChoice::Variance => kernel_matrix(&VarianceKernel, data)?,
        KernelChoice::Gini => kernel_matrix(&GiniKernel, data)?,
        KernelChoice::Scatter => kernel_matrix(&ClusterScatterKernel::default(), data)?,
    })
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let g = generate_with_notes(&args.topology)?.graph;
    let data = args.data.source(args.seed, false).load(g.node_count())?.dataset;
    let km = kernel_for(args.kernel, &data)?;
    let runs = (0..args.runs as u64)
        .map(|r| Ok(simulate(args.protocol, &g, &km, args.iterations, args.seed.wrapping_add(r), args.record_every)?))
        .collect::<Result<Vec<_>>>()?;
    let label = args.out.clone().unwrap_or_else(|| "stdout".into());
    write_estimation(sink(args.out.as_deref())?, &runs, &label)
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let safety_radius = match args.safety_radius.as_str() {
        "none" => None,
        r => Some(r.parse().map_err(|_| HarnessError::Config(format!("invalid safety radius `{r}`")))?),
    };
    let cfg = ExperimentConfig {
        topology: args.topology.clone(),
        mode: args.mode,
        objective: args.objective,
        margin: args.margin,
        hinge: args.hinge,
        schedule: StepSchedule::new(args.a, args.alpha)?,
        projection: args.projection,
        safety_radius,
        iterations: args.iterations,
        trials: 1,
        base_seed: args.seed,
        record_every: args.record_every,
        data: args.data.source(args.seed, true),
        record_bias: !args.no_bias,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    let problem = Problem::from_config(&cfg)?;
    let trial = run_trial(&problem, &RunSettings::from_config(&cfg), args.seed)?;
    let label = args.out.clone().unwrap_or_else(|| "stdout".into());
    write_trials(sink(args.out.as_deref())?, std::slice::from_ref(&trial), !args.mean_only, &label)
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    if args.record_every == 0 {
        return Err(HarnessError::Config("record_every must be >= 1".into()));
    }
    let g = generate_with_notes(&args.topology)?.graph;
    let net = spectrum::<f64>(&g)?.constants();
    let schedule = StepSchedule::inverse_sqrt(args.a)?;
    let (i, j) = worst_pair(&g)?;
    let dt: f64 = delta_tilde(&g, i, j)?;
    let t = args.horizon;
    println!("c = {}", c_of_graph(&net));
    println!("tau = {}", mixing_time(&net, args.eps)?);
    println!("corollary = {}", rate_bound_corollary(t, args.a, &net, args.lipschitz, args.dist0)?);
    println!("centralized = {}", centralized_da_bound(t, &schedule, args.lipschitz, args.dist0));
    println!("worst_pair = {i},{j}");
    println!("delta_tilde = {dt}");
    println!("lower_bound = {}", lower_bound(args.dist0, args.lipschitz, t as f64, dt));
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_writer(sink(Some(path))?);
        w.write_record(["t", "corollary", "centralized", "lower_bound"])?;
        for s in (args.record_every..=t).step_by(args.record_every) {
            w.write_record([
                s.to_string(),
                rate_bound_corollary(s, args.a, &net, args.lipschitz, args.dist0)?.to_string(),
                centralized_da_bound(s, &schedule, args.lipschitz, args.dist0).to_string(),
                lower_bound(args.dist0, args.lipschitz, s as f64, dt).to_string(),
            ])?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(())
}

fn run_experiment(args: &ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if args.serial {
        cfg.parallel = false;
    }
    match &args.sweep {
        Some(list) => {
            let topologies = experiment::parse_topology_list(list)?;
            let reports = experiment::run_sweep(&cfg, &topologies)?;
            let path = write_sweep(&cfg.output, &cfg, &reports)?;
            println!("wrote {}", path.display());
        }
        None => {
            let report = experiment::run_experiment(&cfg)?;
            let files = write_experiment(&cfg.output, &cfg, &report)?;
            println!("wrote {} ({} trials, seeds {:?})", files.aggregate.display(), cfg.trials, trial_seeds(&cfg));
            if report.safety_hits() > 0 {
                eprintln!("warning: safety ball active {} times", report.safety_hits());
            }
        }
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticMixtureSpec {
        n: args.n,
        classes: args.classes,
        dim: args.dim,
        subspace: args.subspace,
        variance: args.variance,
        separation: args.separation,
        seed: args.seed,
    };
    let mut data = synth_mixture(&spec)?.dataset;
    if args.parity {
        data = pairgossip_harness::data::binarize_parity(&data)?;
    }
    write_dataset_csv(&data, &args.out)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Spectral { topology } => spectral(topology),
        Command::Estimate(a) => estimate(a),
        Command::Optimize(a) => optimize(a),
        Command::Bounds(a) => bounds(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
