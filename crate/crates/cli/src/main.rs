use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcfs_core::harness::median;
use mcfs_core::state::StateRepr;
use mcfs_core::{
    load_csv, run_experiment, sweep, synth_classification, BehaviorMode, Dataset, RecalcMode, ReturnMode,
    RewardWeights, RunReport, SweepParam, TrainConfig, UtilityMode,
};

/// Monte Carlo reinforced feature selection.
#[derive(Parser, Debug)]
#[command(name = "mcfs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train once and write report.json and curves.csv.
    Run(RunArgs),
    /// Train once per (value, seed) pair and write one report per run plus summary.csv.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Output directory.
    #[arg(long, default_value = "mcfs-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    train: TrainArgs,
    /// Parameter to vary: stop-threshold, behavior, advise-steps, utility-mode or decision-history.
    #[arg(long, value_parser = parse_sweep_param)]
    param: SweepParam,
    /// Comma-separated values for the parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Comma-separated run seeds; defaults to --seed.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, default_value = "mcfs-sweep")]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[group(skip)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, requires = "label_col", required_unless_present = "synthetic", conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic benchmark `n,d,k`: n samples, d features, k informative. Generated with --seed.
    #[arg(long, value_parser = parse_synthetic)]
    synthetic: Option<(usize, usize, usize)>,
    /// Name of the label column in --data.
    #[arg(long)]
    label_col: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReturnArg {
    Forward,
    Paper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RecalcArg {
    Rc,
    Paper,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BehaviorArg {
    Greedy,
    Random,
    Target,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReprArg {
    Meta,
    Ae,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UtilityArg {
    Rv,
    Rd,
    Rvrd,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    episodes: u64,
    #[arg(long, default_value_t = 0.9, value_parser = unit_closed)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1, value_parser = unit_open)]
    epsilon: f64,
    /// Early-stopping threshold in [0, 1]; 0 disables stopping.
    #[arg(long, default_value_t = 0.5, value_parser = unit_closed)]
    stop_threshold: f64,
    #[arg(long, default_value_t = 1.0, value_parser = non_negative)]
    shaping_coeff: f64,
    /// Advising window in global environment steps.
    #[arg(long, default_value_t = 500)]
    advise_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReturnArg::Forward)]
    return_mode: ReturnArg,
    #[arg(long, value_enum, default_value_t = RecalcArg::Rc)]
    recalc_mode: RecalcArg,
    #[arg(long, value_enum, default_value_t = BehaviorArg::Greedy)]
    behavior: BehaviorArg,
    #[arg(long, value_enum, default_value_t = ReprArg::Meta)]
    state_repr: ReprArg,
    #[arg(long, value_enum, default_value_t = UtilityArg::Rvrd)]
    utility: UtilityArg,
    /// Reward weights `WACC,WRV,WRD`.
    #[arg(long, value_parser = parse_weights, default_value = "1,0.1,0.1")]
    weights: RewardWeights,
    /// Trees per forest.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    n_trees: u64,
    /// Cap on environment steps across all episodes.
    #[arg(long, default_value_t = 3000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    /// Train share of the outer train/test split.
    #[arg(long, default_value_t = 0.8, value_parser = unit_open)]
    split_ratio: f64,
    #[arg(long, default_value_t = 0.01, value_parser = positive)]
    lr: f64,
    /// Traverse features in index order instead of re-ranking by decision counts.
    #[arg(long)]
    no_decision_history: bool,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        let base = TrainConfig::default();
        TrainConfig {
            episodes: self.episodes as usize,
            gamma: self.gamma,
            epsilon: self.epsilon,
            stop_threshold: self.stop_threshold,
            shaping_coeff: self.shaping_coeff,
            advise_steps: self.advise_steps,
            max_global_steps: self.max_steps as usize,
            lr: self.lr,
            return_mode: match self.return_mode {
                ReturnArg::Forward => ReturnMode::Forward,
                ReturnArg::Paper => ReturnMode::PaperLiteral,
            },
            recalc_mode: match self.recalc_mode {
                RecalcArg::Rc => RecalcMode::RejectionControl,
                RecalcArg::Paper => RecalcMode::PaperLiteral,
            },
            behavior: match self.behavior {
                BehaviorArg::Greedy => BehaviorMode::Greedy,
                BehaviorArg::Random => BehaviorMode::Random,
                BehaviorArg::Target => BehaviorMode::Target,
            },
            state_repr: match self.state_repr {
                ReprArg::Meta => StateRepr::Meta,
                ReprArg::Ae => StateRepr::Ae,
            },
            utility: match self.utility {
                UtilityArg::Rv => UtilityMode::Rv,
                UtilityArg::Rd => UtilityMode::Rd,
                UtilityArg::Rvrd => UtilityMode::RvRd,
            },
            weights: self.weights,
            forest: mcfs_core::ForestParams { n_trees: self.n_trees as usize, ..base.forest },
            decision_history: !self.no_decision_history,
            seed: self.seed,
            ..base
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn unit_closed(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is out of range; expected a value in [0, 1]"))
    }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is out of range; expected a value in (0, 1)"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is out of range; expected a finite value >= 0"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is out of range; expected a finite value > 0"))
    }
}

fn parse_weights(s: &str) -> Result<RewardWeights, String> {
    let parts: Vec<f64> = s.split(',').map(parse_f64).collect::<Result<_, _>>()?;
    let [w_acc, w_rv, w_rd] = parts[..] else {
        return Err(format!("expected three comma-separated weights, got `{s}`"));
    };
    RewardWeights::new(w_acc, w_rv, w_rd).map_err(|e| e.to_string())
}

fn parse_synthetic(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<usize> =
        s.split(',').map(|p| p.trim().parse::<usize>().map_err(|_| format!("`{p}` is not a count"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [n, d, k] if n >= 10 && d >= 1 && k >= 1 && k <= d => Ok((n, d, k)),
        [_, _, _] => Err(format!("`{s}` needs n >= 10 and 1 <= k <= d")),
        _ => Err(format!("expected `n,d,k`, got `{s}`")),
    }
}

fn parse_sweep_param(s: &str) -> Result<SweepParam, String> {
    s.parse::<SweepParam>().map_err(|e| e.to_string())
}

fn load(data: &DataArgs, seed: u64) -> mcfs_core::Result<(Dataset, String)> {
    if let Some((n, d, k)) = data.synthetic {
        let synth = synth_classification(n, d, k, seed)?;
        return Ok((synth.dataset, format!("synthetic:{n},{d},{k}")));
    }
    let path = data.data.as_ref().expect("clap enforces a data source");
    let label = data.label_col.as_deref().expect("clap enforces --label-col with --data");
    Ok((load_csv(path, label)?, path.display().to_string()))
}

/// Sizes the global rayon pool from `MCFS_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MCFS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        format!("MCFS_THREADS must be a positive integer, got `{raw}`")
    })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn print_report(r: &RunReport) {
    println!("best subset ({} features): {}", r.best_subset.indices.len(), r.best_subset.names.join(", "));
    println!("best eval: {:.4}", r.best_eval);
    println!(
        "test accuracy: {:.4}  macro F1: {:.4}  (episodes {}, steps {})",
        r.test_metrics.accuracy, r.test_metrics.f1_macro, r.episodes_completed, r.global_steps
    );
    for (name, m) in &r.baselines {
        println!("  {name:<13} accuracy {:.4}  macro F1 {:.4}", m.accuracy, m.f1_macro);
    }
}

fn run(args: &RunArgs) -> mcfs_core::Result<()> {
    let config = args.train.config();
    let (ds, source) = load(&args.data, config.seed)?;
    let report = run_experiment(&ds, &source, args.train.split_ratio, &config)?;
    report.write(&args.out)?;
    print_report(&report);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> mcfs_core::Result<()> {
    let config = args.train.config();
    let seeds = if args.seeds.is_empty() { vec![config.seed] } else { args.seeds.clone() };
    let (ds, source) = load(&args.data, config.seed)?;
    let report = sweep(&ds, &source, args.train.split_ratio, &config, args.param, &args.values, &seeds)?;
    report.write(&args.out)?;
    println!("{:<12} {:>10} {:>14} {:>12}", args.param.as_str(), "runs", "median eval", "median acc");
    for value in &report.values {
        let runs: Vec<&RunReport> = report.runs_for(value).collect();
        let evals: Vec<f64> = runs.iter().map(|r| r.best_eval).collect();
        let accs: Vec<f64> = runs.iter().map(|r| r.test_metrics.accuracy).collect();
        println!("{value:<12} {:>10} {:>14.4} {:>12.4}", runs.len(), median(&evals), median(&accs));
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => {
            // bad sweep values are usage errors, caught before any data is read
            let base = args.train.config();
            if let Some(e) = args.values.iter().find_map(|v| args.param.apply(&base, v).err()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            run_sweep(args)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
