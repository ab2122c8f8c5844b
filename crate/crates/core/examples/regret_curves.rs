//! Write regret curves and a summary for plotting.
//!
//! `cargo run --example regret_curves -- /tmp/curves/run`

use std::path::PathBuf;

use ol2m::harness::{emit_results, run_experiment_with_jobs, ExperimentConfig, InstanceSource, RandomInstance};

fn main() -> Result<(), ol2m::error::Error> {
    let prefix = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ol2m_run"));
    let config = ExperimentConfig::new(
        InstanceSource::Random {
            random: RandomInstance { d: 5, arms: 20, r: 1.0, seed: None },
        },
        5000,
        8,
        42,
    );
    let result = run_experiment_with_jobs(&config, 4)?;
    let (csv, summary) = emit_results(&result, &prefix)?;
    for t in [500, 1000, 2000, 4000, 5000] {
        println!("t = {t:5}  mean regret {:8.1}", result.mean_lin_regret_at(t));
    }
    println!("wrote {} and {}", csv.display(), summary.display());
    Ok(())
}
