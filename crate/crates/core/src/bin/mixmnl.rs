use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use mixmnl::io::{write_json, Dataset, ResultsEstimates, ResultsFile};
use mixmnl::mnl_model::fig1_pairwise_marginals;
use mixmnl::pipeline::{
    check_conditions, learn_from_model, learn_mixed_mnl, match_components, LearnConfig,
};
use mixmnl::sweep::{instance, mix_seed, run_sweep, SweepConfig};
use mixmnl::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mixmnl",
    version,
    about = "Learn mixed MNL models from pairwise comparisons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random graph and model and sample a dataset from it.
    Generate(GenerateArgs),
    /// Estimate mixture weights and item weights from a dataset.
    Learn(LearnArgs),
    /// Compare a results file with the dataset's ground truth.
    Evaluate(EvaluateArgs),
    /// Error versus sample size over a grid of sample sizes and seeds.
    Sweep(SweepArgs),
    /// Report learnability conditions of a model on its graph.
    Check(CheckArgs),
    /// Print the pairwise marginals of two indistinguishable mixtures.
    Fig1,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Number of items.
    #[arg(long, default_value_t = 30)]
    n: usize,
    /// Expected degree of the random graph.
    #[arg(long, default_value_t = 8.0)]
    dbar: f64,
    /// Number of mixture components.
    #[arg(long, default_value_t = 2)]
    r: usize,
    /// Lower end of the weight range.
    #[arg(long, default_value_t = 1.0)]
    weight_lo: f64,
    /// Upper end of the weight range.
    #[arg(long, default_value_t = 2.0)]
    weight_hi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceArgs {
    fn sweep_config(&self, ell: usize) -> SweepConfig {
        SweepConfig {
            n: self.n,
            dbar: self.dbar,
            ell,
            r: self.r,
            weight_range: (self.weight_lo, self.weight_hi),
            t1: None,
            t2: None,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Pairs revealed per observation.
    #[arg(long, default_value_t = 10)]
    ell: usize,
    /// Number of observations.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    r: usize,
    /// Matrix-completion iterations.
    #[arg(long)]
    t1: Option<usize>,
    /// Ranking power iterations.
    #[arg(long)]
    t2: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use exact moments of the dataset's ground truth instead of the samples.
    #[arg(long)]
    exact_moments: bool,
    /// Include the whitened tensor and its eigenpairs in the output.
    #[arg(long)]
    dump_intermediates: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 10)]
    ell: usize,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [2000usize, 20_000, 200_000])]
    samples: Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    seeds: Vec<u64>,
    #[arg(long)]
    t1: Option<usize>,
    #[arg(long)]
    t2: Option<usize>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Dataset with ground truth; a random instance is drawn when omitted.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 10)]
    ell: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // The reader went away (`mixmnl ... | head`); nothing left to report.
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &Error) -> bool {
    let kind = match e.root() {
        Error::Io(io) => Some(io.kind()),
        Error::Json(j) => j.io_error_kind(),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io.kind()),
            _ => None,
        },
        _ => None,
    };
    kind == Some(io::ErrorKind::BrokenPipe)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if matches!(e.root(), Error::Io(_) | Error::Csv(_)) {
        1
    } else {
        2
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Learn(a) => learn(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Check(a) => check(a),
        Command::Fig1 => fig1(),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = a.instance.sweep_config(a.ell);
    let (model, graph) = instance(&cfg, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, &[a.samples as u64, 1]));
    let batch = model.sample_batch(&graph, a.ell, a.samples, &mut rng)?;
    Dataset {
        graph,
        batch,
        ground_truth: Some(model),
    }
    .write(&a.out)
}

fn learn(a: LearnArgs) -> Result<()> {
    let ds = Dataset::read(&a.dataset)?;
    let cfg = LearnConfig {
        r: a.r,
        t1: a.t1,
        t2: a.t2,
        seed: a.seed,
    };
    let est = if a.exact_moments {
        let truth = ds.ground_truth.as_ref().ok_or_else(|| {
            Error::Invalid("exact moments need a dataset with ground truth".into())
        })?;
        learn_from_model(truth, &ds.graph, &cfg)?
    } else {
        learn_mixed_mnl(&ds.batch, &ds.graph, &cfg)?
    };
    let matching = match &ds.ground_truth {
        Some(truth) if truth.r() == a.r => Some(match_components(&est.q_hat, &est.w_hat, truth)?),
        _ => None,
    };
    write_json(
        &a.out,
        &ResultsFile::new(&est, matching, a.dump_intermediates),
    )
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let ds = Dataset::read(&a.dataset)?;
    let truth = ds
        .ground_truth
        .ok_or_else(|| Error::Invalid("evaluation needs a dataset with ground truth".into()))?;
    let res = ResultsEstimates::read(&a.results)?;
    let mut report = match_components(&res.q_hat, &res.w_hat, &truth)?;
    report.conditions = Some(check_conditions(&truth, &ds.graph, ds.batch.ell())?);
    emit_json(a.out.as_deref(), &report)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = a.instance.sweep_config(a.ell);
    cfg.t1 = a.t1;
    cfg.t2 = a.t2;
    let table = run_sweep(&cfg, &a.samples, &a.seeds);
    match a.out {
        Some(path) => table.write_csv(BufWriter::new(File::create(path)?)),
        None => table.write_csv(io::stdout().lock()),
    }
}

fn check(a: CheckArgs) -> Result<()> {
    let (model, graph, ell) = match &a.dataset {
        Some(path) => {
            let ds = Dataset::read(path)?;
            let truth = ds
                .ground_truth
                .ok_or_else(|| Error::Invalid("check needs a dataset with ground truth".into()))?;
            (truth, ds.graph, ds.batch.ell())
        }
        None => {
            let (m, g) = instance(&a.instance.sweep_config(a.ell), 0)?;
            (m, g, a.ell)
        }
    };
    let report = check_conditions(&model, &graph, ell)?;
    emit_json(a.out.as_deref(), &report)
}

#[derive(Serialize)]
struct Fig1Report {
    items: [&'static str; 4],
    first: [[f64; 4]; 4],
    second: [[f64; 4]; 4],
    identical: bool,
}

fn fig1() -> Result<()> {
    let (first, second) = fig1_pairwise_marginals();
    emit_json(
        None,
        &Fig1Report {
            items: ["a", "b", "c", "d"],
            first,
            second,
            identical: first == second,
        },
    )
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let mut stdout = io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}
