pub mod baseline;
pub mod checks;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod linalg;
pub mod region;
mod secular;
pub mod select;
