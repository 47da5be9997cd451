use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use star_ope::abstraction::{fit_on_dataset, read_abstraction_file, write_abstraction_file, Abstraction, KMeansOptions};
use star_ope::arp::write_arp_file;
use star_ope::env::{read_dataset_file, sample_trajectories, write_dataset_file, Dataset, EnvSpec, PolicySpec};
use star_ope::estimators::{
    fit_arp_off_policy, is_estimate, model_based_estimate, model_based_estimate_abstracted, pdis_estimate, wis_estimate, wpdis_estimate, Clip,
    EstimatorId, StarConfig,
};
use star_ope::harness::{compute_truth, read_csv_file, run_sweep, write_reports, SweepConfig, TrialResult};
use star_ope::rng::derive_seed;

/// Off-policy evaluation with abstract reward processes.
#[derive(Parser)]
#[command(name = "star", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset of episodes from an environment under a behavior policy.
    Generate(GenerateArgs),
    /// Run one estimator on a dataset and print the point estimate.
    Estimate(EstimateArgs),
    /// Print the true expected return of a policy.
    Truth(TruthArgs),
    /// Run a full sweep described by a TOML config.
    Sweep(SweepArgs),
    /// Turn a trial CSV into summary, heatmap and selection CSVs.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Environment, e.g. `two_state`, `cartpole`, `random_mdp:states=5,actions=2,horizon=20,branching=3,seed=1`.
    #[arg(long)]
    env: String,
    /// Behavior policy, e.g. `uniform`, `mixed:seed=1,epsilon=0.2`.
    #[arg(long)]
    policy: String,
    /// Number of episodes.
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset file.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset written by `generate`.
    #[arg(long)]
    data: PathBuf,
    /// One of star, is, pdis, wis, wpdis, mbased.
    #[arg(long, default_value = "star")]
    estimator: EstimatorId,
    /// Evaluation policy.
    #[arg(long)]
    policy: String,
    /// Environment the policy is defined on; defaults to the dataset's.
    #[arg(long)]
    env: Option<String>,
    /// `kmeans:K`, `identity`, `single`, or a saved abstraction file.
    #[arg(long, default_value = "identity")]
    abstraction: String,
    /// Clipping window `c`, or `unclipped`.
    #[arg(long, default_value = "unclipped")]
    clip: Clip,
    /// Seed for k-means.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize features before k-means.
    #[arg(long)]
    standardize: bool,
    /// Save the abstraction used.
    #[arg(long)]
    save_abstraction: Option<PathBuf>,
    /// Save the estimated ARP (star only).
    #[arg(long)]
    save_arp: Option<PathBuf>,
}

#[derive(Args)]
struct TruthArgs {
    #[arg(long)]
    env: String,
    #[arg(long)]
    policy: String,
    /// Monte Carlo episodes for non-tabular environments.
    #[arg(long, default_value_t = 1_000_000)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep config.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Trial CSV, e.g. `trials.csv` from a sweep.
    #[arg(long)]
    trials: PathBuf,
    /// Directory for the outputs; defaults to the trial CSV's directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Estimate(args) => estimate(args),
        Command::Truth(args) => truth(args),
        Command::Sweep(args) => sweep(args),
        Command::Summarize(args) => summarize(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let env: EnvSpec = args.env.parse()?;
    let env = env.build();
    let policy = args.policy.parse::<PolicySpec>()?.build(env.as_ref())?;
    let data = sample_trajectories(env.as_ref(), policy.as_ref(), args.n, args.seed)?;
    write_dataset_file(&data, &args.out)?;
    println!("wrote {} episodes ({} steps) to {}", data.len(), data.total_steps(), args.out.display());
    Ok(())
}

fn load_abstraction(spec: &str, data: &Dataset, env: &EnvSpec, seed: u64, standardize: bool) -> Result<Abstraction> {
    if let Some(k) = spec.strip_prefix("kmeans:") {
        let k: usize = k.parse().with_context(|| format!("bad cluster count in {spec:?}"))?;
        let options = KMeansOptions {
            seed,
            standardize,
            ..KMeansOptions::default()
        };
        return Ok(fit_on_dataset(data, k, &options)?.0);
    }
    match spec {
        "single" => Ok(Abstraction::single()),
        "identity" => {
            let mdp = env.tabular().ok_or_else(|| anyhow!("identity abstraction needs a tabular environment"))?;
            Ok(Abstraction::identity(mdp.num_states()))
        }
        path => read_abstraction_file(Path::new(path)).with_context(|| format!("reading abstraction {path}")),
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    if args.save_arp.is_some() && args.estimator != EstimatorId::Star {
        bail!("--save-arp only applies to the star estimator");
    }
    let data = read_dataset_file(&args.data)?;
    let env_spec: EnvSpec = args.env.as_deref().unwrap_or(&data.provenance.env_id).parse()?;
    let pi_e = args.policy.parse::<PolicySpec>()?.build(env_spec.build().as_ref())?;
    let pi_e = pi_e.as_ref();
    let needs_phi = args.estimator == EstimatorId::Star || (args.estimator == EstimatorId::MBased && env_spec.tabular().is_none());
    let phi = if needs_phi {
        let phi = load_abstraction(&args.abstraction, &data, &env_spec, args.seed, args.standardize)?;
        if let Some(path) = &args.save_abstraction {
            write_abstraction_file(&phi, path)?;
        }
        Some(phi)
    } else {
        None
    };
    let value = match args.estimator {
        EstimatorId::Star => {
            let config = StarConfig {
                abstraction: phi.as_ref().expect("abstraction"),
                clip: args.clip,
                pi_e,
            };
            let fit = fit_arp_off_policy(&data, &config)?;
            if let Some(path) = &args.save_arp {
                write_arp_file(&fit.arp, path)?;
            }
            fit.arp.expected_return()?
        }
        EstimatorId::Is => is_estimate(&data, pi_e)?,
        EstimatorId::Pdis => pdis_estimate(&data, pi_e)?,
        EstimatorId::Wis => wis_estimate(&data, pi_e)?,
        EstimatorId::Wpdis => wpdis_estimate(&data, pi_e)?,
        EstimatorId::MBased => match (env_spec.tabular(), &phi) {
            (Some(mdp), _) => model_based_estimate(&data, pi_e, mdp.num_states())?,
            (None, Some(phi)) => model_based_estimate_abstracted(&data, pi_e, phi)?,
            (None, None) => unreachable!("continuous model-based estimates always get an abstraction"),
        },
    };
    println!("{value}");
    Ok(())
}

fn truth(args: TruthArgs) -> Result<()> {
    let env: EnvSpec = args.env.parse()?;
    let pi_e = args.policy.parse::<PolicySpec>()?.build(env.build().as_ref())?;
    let t = compute_truth(&env, pi_e.as_ref(), args.episodes, derive_seed(&[args.seed]))?;
    if t.episodes == 0 {
        println!("{}", t.value);
    } else {
        println!("{} (stderr {}, {} episodes)", t.value, t.stderr, t.episodes);
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = SweepConfig::from_file(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(dir) = args.out_dir {
        config.out_dir = dir;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    config.validate()?;
    let outcome = run_sweep(&config)?;
    println!(
        "truth {}; {} estimates ({} failed); {} jobs run, {} reused; outputs in {}",
        outcome.truth.value,
        outcome.results.len(),
        outcome.failures.len(),
        outcome.jobs_run,
        outcome.jobs_reused,
        config.out_dir.display()
    );
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<()> {
    let results: Vec<TrialResult> = read_csv_file(&args.trials)?;
    let out_dir = match args.out_dir {
        Some(d) => d,
        None => args.trials.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let summary = write_reports(&results, &out_dir)?;
    println!("{} summary rows written to {}", summary.len(), out_dir.display());
    Ok(())
}
