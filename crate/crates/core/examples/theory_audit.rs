//! Audit one trajectory against the inequalities behind the regret bound.

use ol2m::checks::{audit_run, martingale_bound_slack, regret_bound_test, stream_rng};
use ol2m::env::Instance;
use ol2m::learner::LearnerConfig;

fn main() -> Result<(), ol2m::error::Error> {
    let config = LearnerConfig::new(1.0);
    let instance = Instance::random(5, 20, 1.0, &mut stream_rng(5, u64::MAX))?;
    let run = audit_run(&instance, &config, 3000, &mut stream_rng(5, 0))?;

    let (holds, slack) = regret_bound_test(&run);
    println!("parameter covered throughout   {}", run.contained(1.0));
    println!("regret bound holds             {holds} (worst slack {slack:.3})");
    println!("potential step slack           {:.3e}", run.potential_step_slack());
    println!("elliptical potential slack     {:.3e}", run.elliptical_potential_slack());
    println!("log-det growth slack           {:.3e}", run.logdet_growth_slack());
    println!(
        "martingale bound slack         {:.3}",
        martingale_bound_slack(&run.martingale_trace(), config.r, config.delta)
    );
    let last = run.rounds.last().expect("nonempty run");
    println!(
        "final regret {:.1}, final radius² {:.1}",
        run.cumulative_lin_regret().last().unwrap(),
        last.gamma_next
    );
    Ok(())
}
