use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ol2m::checks::{run_verification, VerifySettings};
use ol2m::error::Error;
use ol2m::harness::{
    emit_results, run_bench, run_experiment_with_jobs, ExperimentConfig, InstanceSource, LearnerKind, RandomInstance,
};
use ol2m::learner::LearnerConfig;
use ol2m::region::RegionMode;

#[derive(Parser)]
#[command(name = "ol2m", version, about = "Online linear optimization with one-bit logit feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded experiment and write curves and a summary.
    Run(RunArgs),
    /// Run the theory-checks suite and print a JSON report.
    Verify(VerifyArgs),
    /// Compare OL²M with the ridge baseline on shared seeds.
    Bench(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance JSON file.
    #[arg(long, conflicts_with = "random_d")]
    instance: Option<PathBuf>,
    /// Draw a random instance of this dimension instead.
    #[arg(long)]
    random_d: Option<usize>,
    /// Arms of the random instance (0 = unit ball).
    #[arg(long, default_value_t = 20, requires = "random_d")]
    random_arms: usize,
    #[arg(long = "random-R", default_value_t = 1.0, requires = "random_d")]
    random_r: f64,
    #[arg(long)]
    learner: Option<LearnerKind>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lazy_c: Option<f64>,
    #[arg(long, value_parser = parse_region_mode)]
    region_mode: Option<RegionMode>,
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path prefix.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for replicates.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced sample sizes for a fast smoke run.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "T", visible_alias = "horizon")]
    horizon: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    /// Multiplies the confidence radius; values below 1 are an ablation.
    #[arg(long)]
    radius_scale: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_region_mode(s: &str) -> Result<RegionMode, String> {
    match s {
        "ellipsoid" => Ok(RegionMode::Ellipsoid),
        "l1_enlarged" | "l1" => Ok(RegionMode::L1Enlarged),
        other => Err(format!("unknown region mode `{other}` (ellipsoid | l1_enlarged)")),
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let instance = match (&args.instance, args.random_d) {
                (Some(p), _) => InstanceSource::File(p.clone()),
                (None, Some(d)) => InstanceSource::Random {
                    random: RandomInstance {
                        d,
                        arms: args.random_arms,
                        r: args.random_r,
                        seed: None,
                    },
                },
                (None, None) => return Err(Error::Config("need --config, --instance or --random-d".into())),
            };
            ExperimentConfig::new(instance, 0, 1, 0)
        }
    };
    if args.config.is_some() {
        if let Some(p) = &args.instance {
            config.instance = InstanceSource::File(p.clone());
        } else if let Some(d) = args.random_d {
            config.instance = InstanceSource::Random {
                random: RandomInstance {
                    d,
                    arms: args.random_arms,
                    r: args.random_r,
                    seed: None,
                },
            };
        }
    }
    macro_rules! take {
        ($($field:ident),*) => { $(if let Some(v) = args.$field.clone() { config.$field = v; })* };
    }
    take!(learner, eta, lambda, delta, lazy_c, region_mode, horizon, replicates, seed);
    if args.output.is_some() {
        config.output = args.output.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), Error> {
    let config = build_config(&args)?;
    let result = run_experiment_with_jobs(&config, args.jobs)?;
    match &config.output {
        Some(prefix) => {
            let (csv, summary) = emit_results(&result, prefix)?;
            println!("wrote {} and {}", csv.display(), summary.display());
        }
        None => print!("{}", result.curves_csv()),
    }
    eprintln!(
        "mean final regret: linear {:.6}, nonlinear {:.6}",
        result.mean_final_lin_regret(),
        result.mean_final_nonlin_regret()
    );
    Ok(())
}

fn bench(args: RunArgs) -> Result<(), Error> {
    let config = build_config(&args)?;
    let report = run_bench(&config, args.jobs)?;
    let json = report.to_json()?;
    match &config.output {
        Some(prefix) => {
            let mut name = prefix.as_os_str().to_owned();
            name.push("_bench.json");
            let path = PathBuf::from(name);
            std::fs::write(&path, &json).map_err(|source| Error::Io { path: path.clone(), source })?;
            println!("wrote {}", path.display());
        }
        None => print!("{json}"),
    }
    eprintln!(
        "OL2M mean {:.3}, CB2 mean {:.3}, OL2M at or below CB2 on {}/{} seeds",
        report.ol2m_mean, report.cb2_mean, report.ol2m_wins, report.replicates
    );
    Ok(())
}

/// Returns whether every check passed.
fn verify(args: VerifyArgs) -> Result<bool, Error> {
    let mut settings = VerifySettings::default();
    if args.quick {
        settings.horizon = 300;
        settings.replicates = 8;
        settings.property_samples = 1000;
        settings.bernstein_replicates = 2000;
    }
    settings.seed = args.seed.unwrap_or(settings.seed);
    settings.horizon = args.horizon.unwrap_or(settings.horizon);
    settings.replicates = args.replicates.unwrap_or(settings.replicates);
    settings.property_samples = args.samples.unwrap_or(settings.property_samples);
    let base = settings.learner;
    settings.learner = LearnerConfig {
        eta: args.eta.unwrap_or(base.eta),
        lambda: args.lambda.unwrap_or(base.lambda),
        delta: args.delta.unwrap_or(base.delta),
        r: args.r.unwrap_or(base.r),
        radius_scale: args.radius_scale.unwrap_or(base.radius_scale),
        ..base
    };
    settings.learner.validate().map_err(|e| Error::Config(e.to_string()))?;
    if settings.replicates == 0 || settings.horizon == 0 {
        return Err(Error::Config("T and replicates must be at least 1".into()));
    }
    let report = run_verification(&settings)?;
    let json = report.to_json()? + "\n";
    match &args.output {
        Some(path) => std::fs::write(path, &json).map_err(|source| Error::Io { path: path.clone(), source })?,
        None => print!("{json}"),
    }
    for e in &report.entries {
        eprintln!("{} {} (worst slack {:.3e})", if e.passed { "PASS" } else { "FAIL" }, e.name, e.worst_slack);
    }
    Ok(report.passed)
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
        Command::Run(args) => run(args).map(|()| true),
        Command::Bench(args) => bench(args).map(|()| true),
        Command::Verify(args) => verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
