//! Recompute the optimistic action only after the metric's determinant grows.

use ol2m::harness::{run_experiment, ExperimentConfig, InstanceSource, RandomInstance};

fn main() -> Result<(), ol2m::error::Error> {
    let source = InstanceSource::Random {
        random: RandomInstance { d: 5, arms: 20, r: 1.0, seed: None },
    };
    println!("{:>6} {:>14} {:>12} {:>10}", "c", "recomputations", "bound", "regret");
    for c in [0.0, 0.5, 1.0, 4.0] {
        let mut config = ExperimentConfig::new(source.clone(), 5000, 3, 11);
        config.lazy_c = c;
        let result = run_experiment(&config)?;
        let rep = &result.replicates[0];
        let (start, end) = rep.logdet_range.expect("learner run");
        let bound = if c > 0.0 { (end - start) / c.ln_1p() + 1.0 } else { f64::INFINITY };
        println!(
            "{c:>6} {:>14} {bound:>12.1} {:>10.1}",
            rep.recomputations,
            result.mean_final_lin_regret()
        );
    }
    Ok(())
}
