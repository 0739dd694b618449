use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use consensus_nids::config::{AttackForm, AttackTemplate, DataSource, ExperimentConfig, Mitigation, OutputFormat, TopologySpec};
use consensus_nids::data::{self, LikelihoodSource};
use consensus_nids::error::HarnessError;
use consensus_nids::export;
use consensus_nids::harness::{self, run_experiment_with, run_phase_traced};
use nids_core::classifier::{self, TrainConfig};

#[derive(Parser)]
#[command(name = "consensus-nids", version, about = "Distributed consensus intrusion detection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-phase experiment and write per-phase records and a summary.
    Simulate(Box<SimulateArgs>),
    /// Show one constant-transmission attack pulling a ring to the attacker's value.
    DemoAttack(DemoArgs),
    /// Train the naive Bayes model on an NSL-KDD file and save it as JSON.
    Train(TrainArgs),
    /// Time every mitigation on the standard topologies.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ring, torus, petersen or random.
    #[arg(long)]
    topology: Option<String>,
    /// Ring length, torus side or random node count.
    #[arg(long)]
    size: Option<usize>,
    /// none, outlier, fault or soft.
    #[arg(long)]
    mitigation: Option<String>,
    /// none, additive, constant or initial-state.
    #[arg(long)]
    attack: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    magnitude: Option<f64>,
    #[arg(long)]
    phases: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// NSL-KDD file; synthetic likelihoods are used when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Pre-trained model for --data.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json for the per-phase file.
    #[arg(long)]
    format: Option<String>,
    /// Run phases on one thread so wall times are comparable.
    #[arg(long)]
    sequential: bool,
    /// Also write trajectory, threshold and residual traces of this phase.
    #[arg(long)]
    trace_phase: Option<usize>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 9)]
    size: usize,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    value: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    phases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write both convergence histograms as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Keep every attack family instead of only DoS.
    #[arg(long)]
    all_attacks: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    phases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the table as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(*args),
        Command::DemoAttack(args) => demo_attack(args),
        Command::Train(args) => train(args),
        Command::Bench(args) => bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn experiment_config(args: &SimulateArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = &args.topology {
        cfg.topology = TopologySpec::from_cli(kind, args.size)?;
    } else if let Some(size) = args.size {
        let kind = cfg.topology.name();
        let kind = kind.split('-').next().unwrap_or("ring");
        cfg.topology = TopologySpec::from_cli(kind, Some(size))?;
    }
    if let Some(m) = &args.mitigation {
        cfg.mitigation = Mitigation::parse(m)?;
    }
    if let Some(a) = &args.attack {
        cfg.attack = AttackForm::parse(a)?.map(|form| AttackTemplate {
            form,
            ..cfg.attack.unwrap_or(AttackTemplate::additive(0.5))
        });
    }
    if let Some(mag) = args.magnitude {
        match &mut cfg.attack {
            Some(a) => a.magnitude = mag,
            None => return Err(HarnessError::Config("--magnitude needs an attack".into())),
        }
    }
    if let Some(p) = args.phases {
        cfg.phases = p;
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    if let Some(m) = args.max_iter {
        cfg.max_iter = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(path) = &args.data {
        cfg.data = DataSource::NslKdd {
            path: path.clone(),
            model: args.model.clone(),
            dos_only: true,
            train: TrainConfig::default(),
        };
    } else if args.model.is_some() {
        return Err(HarnessError::Config("--model needs --data".into()));
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if let Some(f) = &args.format {
        cfg.format = OutputFormat::parse(f)?;
    }
    if args.sequential {
        cfg.parallel = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let cfg = experiment_config(&args)?;
    if let Some(k) = args.trace_phase {
        if k >= cfg.phases {
            return Err(HarnessError::Config(format!("--trace-phase {k} is past the last phase")));
        }
    }
    let started = Instant::now();
    let source = LikelihoodSource::from_config(&cfg.data)?;
    let result = run_experiment_with(&cfg, &source, started)?;
    let m = &result.metrics;
    if m.dataset_wrapped {
        eprintln!("notice: the dataset ran out of records and was reused from the start");
    }
    println!(
        "{} phases on {} with mitigation {}: accuracy {:.4} (TP {} TN {} FP {} FN {}), {} aborted, {} detections ({} correct first), attacker removed in {}",
        m.phases,
        cfg.topology.name(),
        cfg.mitigation.as_str(),
        m.accuracy,
        m.tp,
        m.tn,
        m.fp,
        m.fn_,
        m.aborted,
        m.detections,
        m.correct_detections,
        m.attackers_removed,
    );
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    for path in export::export(&result, &cfg, cfg.format, &dir)? {
        println!("wrote {}", path.display());
    }
    if let Some(k) = args.trace_phase {
        let (_, trace) = run_phase_traced(&cfg, &source, k)?;
        for path in export::write_trace(&trace, &dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn demo_attack(args: DemoArgs) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig {
        topology: TopologySpec::Ring { size: args.size },
        attack: Some(AttackTemplate::constant(args.value)),
        epsilon: args.epsilon,
        phases: args.phases,
        seed: args.seed,
        ..ExperimentConfig::default()
    };
    let cmp = harness::compare_convergence(&cfg)?;
    println!(
        "ring of {} nodes, {} paired phases, attacker transmits {}",
        args.size, args.phases, args.value
    );
    println!(
        "honest:   median {} iterations, {} converged",
        cmp.honest_median, cmp.honest_converged
    );
    println!(
        "attacked: median {} iterations, {} converged, largest distance from {}: {:.3e}",
        cmp.attacked_median, cmp.attacked_converged, args.value, cmp.max_limit_error
    );
    if let Some(path) = &args.out {
        export::write_histograms(("honest", &cmp.honest), ("attacked", &cmp.attacked), path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<(), HarnessError> {
    let mut records = data::read_records(&args.data)?;
    if !args.all_attacks {
        records = classifier::filter_dos(records);
    }
    let cfg = TrainConfig {
        bins: args.bins,
        ..TrainConfig::default()
    };
    let model = data::train_model(&records, &cfg, &args.data)?;
    let scored = data::score(model, &records);
    let correct = records
        .iter()
        .filter(|r| scored.model.classify(r) == r.class())
        .count();
    data::save_model(&scored.model, &args.out)?;
    println!(
        "trained on {} records ({} attack, {} normal), training accuracy {:.4}",
        records.len(),
        scored.attack.len(),
        scored.normal.len(),
        correct as f64 / records.len().max(1) as f64
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), HarnessError> {
    let base = ExperimentConfig {
        phases: args.phases,
        seed: args.seed,
        ..ExperimentConfig::default()
    };
    let rows = harness::bench(&base, &TopologySpec::standard_set(), &Mitigation::ALL)?;
    println!("{:<16} {:<9} {:>10} {:>12} {:>10}", "topology", "mitigation", "phases", "mean us", "mean iter");
    for r in &rows {
        println!(
            "{:<16} {:<9} {:>10} {:>12.1} {:>10.1}",
            r.topology,
            r.mitigation.as_str(),
            r.phases,
            r.mean_us,
            r.mean_iterations
        );
    }
    if let Some(path) = &args.out {
        write_bench(&rows, path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_bench(rows: &[harness::BenchRow], path: &Path) -> Result<(), HarnessError> {
    export::write_csv(rows, path)
}
