//! Run the learner on a small random instance and watch the regret.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ol2m::env::{best_action, round_regrets, sample_feedback, Instance};
use ol2m::learner::{Learner, LearnerConfig};

fn main() -> Result<(), ol2m::error::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let instance = Instance::random(5, 20, 1.0, &mut rng)?;
    let x_star = best_action(&instance.set, &instance.params);

    let mut learner = Learner::new(instance.dim(), LearnerConfig::new(1.0))?;
    let mut regret = 0.0;
    for t in 1..=2000 {
        let (choice, _) = learner.choose(&instance.set)?;
        let y = sample_feedback(&instance.params, &choice.x, &mut rng);
        learner.observe(&choice.x, y)?;
        regret += round_regrets(&instance.params, &x_star, &choice.x).0;
        if t % 400 == 0 {
            println!("t = {t:4}  cumulative regret {regret:8.2}  radius² {:9.2}", learner.state().gamma);
        }
    }
    let w = &learner.state().w;
    println!("estimate {w:.3?}");
    println!("truth    {:.3?}", instance.params.w_star());
    Ok(())
}
