//! Save the learner mid-run and resume from the JSON checkpoint.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ol2m::env::{sample_feedback, Instance};
use ol2m::learner::{Learner, LearnerConfig, LearnerState};

fn main() -> Result<(), ol2m::error::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let instance = Instance::random(3, 10, 1.0, &mut rng)?;
    let config = LearnerConfig::new(1.0);

    let mut learner = Learner::new(3, config)?;
    for _ in 0..500 {
        let (choice, _) = learner.choose(&instance.set)?;
        let y = sample_feedback(&instance.params, &choice.x, &mut rng);
        learner.observe(&choice.x, y)?;
    }
    let json = learner.into_state().to_json()?;
    println!("{json}");

    let mut resumed = Learner::from_state(LearnerState::from_json(&json)?, config);
    let (choice, _) = resumed.choose(&instance.set)?;
    println!("next action after resuming: arm {:?}", choice.arm);
    Ok(())
}
