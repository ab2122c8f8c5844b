//! The enlarged region trades a wider confidence set for a vertex scan.

use ol2m::harness::{run_experiment, ExperimentConfig, InstanceSource, RandomInstance};
use ol2m::region::RegionMode;

fn main() -> Result<(), ol2m::error::Error> {
    let source = InstanceSource::Random {
        random: RandomInstance { d: 4, arms: 0, r: 1.0, seed: None },
    };
    for mode in [RegionMode::Ellipsoid, RegionMode::L1Enlarged] {
        let mut config = ExperimentConfig::new(source.clone(), 2000, 5, 3);
        config.region_mode = mode;
        let result = run_experiment(&config)?;
        let secs: f64 = result.replicates.iter().map(|r| r.seconds_per_round).sum::<f64>() / 5.0;
        println!(
            "{mode:?}: mean regret {:.1}, {:.1} µs per round",
            result.mean_final_lin_regret(),
            secs * 1e6
        );
    }
    Ok(())
}
