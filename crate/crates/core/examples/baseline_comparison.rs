//! Ridge-regression UCB against the online Newton learner on the same noise.

use ol2m::harness::{run_bench, ExperimentConfig, InstanceSource, RandomInstance};

fn main() -> Result<(), ol2m::error::Error> {
    let r = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let config = ExperimentConfig::new(
        InstanceSource::Random {
            random: RandomInstance { d: 5, arms: 20, r, seed: None },
        },
        5000,
        20,
        1,
    );
    let report = run_bench(&config, 1)?;
    println!("R = {r}");
    println!("OL2M  mean final regret {:8.1}", report.ol2m_mean);
    println!("ridge mean final regret {:8.1}", report.cb2_mean);
    println!("OL2M at or below ridge on {}/{} seeds", report.ol2m_wins, report.replicates);
    Ok(())
}
