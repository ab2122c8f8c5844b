//! Empirical tail of a bounded martingale next to the Bernstein bound.

use ol2m::checks::{bernstein_mc_test, BernsteinSetup, IncrementModel};

fn main() {
    let setup = BernsteinSetup {
        model: IncrementModel::CoinFlip,
        k: 1.0,
        steps: 100,
        nu: 100.0,
    };
    println!("{:>5} {:>10} {:>10}", "t", "observed", "bound");
    for p in bernstein_mc_test(&setup, &[0.25, 0.5, 1.0, 2.0, 3.0], 20_000, 9) {
        println!("{:>5} {:>10.4} {:>10.4}", p.t, p.exceedance, p.bound);
    }
}
