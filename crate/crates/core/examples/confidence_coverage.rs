//! Fraction of runs whose confidence region holds the true parameter at every round.

use ol2m::checks::{coverage_test, stream_rng};
use ol2m::env::Instance;
use ol2m::learner::LearnerConfig;

fn main() -> Result<(), ol2m::error::Error> {
    let instance = Instance::random(5, 20, 1.0, &mut stream_rng(1, u64::MAX))?;
    for delta in [0.5, 0.05] {
        let config = LearnerConfig { delta, ..LearnerConfig::new(1.0) };
        let report = coverage_test(&instance, &config, 1000, 20, 3)?;
        println!(
            "delta = {delta:<4}  covered {}/{}  (target at least {:.0}%)",
            report.contained.iter().filter(|c| **c).count(),
            report.replicates,
            100.0 * (1.0 - delta)
        );
    }
    Ok(())
}
