//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its line; exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ol2m::checks::{
    audit_replicates, audit_run, bernstein_mc_test, bernstein_setups, check_expected_loss_minimizer,
    check_gradient_norm_bound, check_regret_sandwich, check_strong_convexity, check_update_inequality,
    regret_bound_test, CoverageReport, Trajectory,
};
use ol2m::env::{sample_in_ball, sample_on_sphere, DecisionSet, Instance};
use ol2m::harness::{
    run_bench, run_replicate, ExperimentConfig, InstanceSource, LearnerKind, RandomInstance,
};
use ol2m::learner::{logistic_grad, ons_update, LearnerConfig, LearnerState};
use ol2m::linalg::{dot, SpdMatrix};
use ol2m::region::{ConfidenceRegion, RegionMode};
use ol2m::select::{select_ball, select_l1};

const SEED: u64 = 20_240_601;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

/// d = 5, 20 fixed arms in the unit ball, R = 1.
fn reference_experiment(horizon: usize, replicates: usize) -> ExperimentConfig {
    ExperimentConfig::new(
        InstanceSource::Random {
            random: RandomInstance {
                d: 5,
                arms: 20,
                r: 1.0,
                seed: None,
            },
        },
        horizon,
        replicates,
        SEED,
    )
}

fn reference_instance() -> Instance {
    reference_experiment(1, 1).instance.resolve(SEED).unwrap()
}

struct Audit {
    trajectories: Vec<Trajectory>,
    coverage: CoverageReport,
    seconds: f64,
}

fn coverage_audit() -> Audit {
    let config = LearnerConfig::new(1.0);
    let instance = reference_instance();
    let start = Instant::now();
    let trajectories = single_thread(|| audit_replicates(&instance, &config, 2000, 50, SEED)).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let coverage = CoverageReport::from_trajectories(&trajectories, config.delta, 1.0);
    Audit {
        trajectories,
        coverage,
        seconds,
    }
}

fn criterion_1(audit: &Audit) -> Verdict {
    let c = &audit.coverage;
    verdict(
        c.coverage >= 0.95 && audit.seconds < 60.0,
        format!(
            "coverage {:.3} over {} replicates (need >= 0.95), {:.1} s single-threaded (need < 60)",
            c.coverage, c.replicates, audit.seconds
        ),
    )
}

fn criterion_2(audit: &Audit) -> Verdict {
    let mut checked = 0;
    let mut failed = 0;
    let mut worst = f64::INFINITY;
    for (t, &covered) in audit.trajectories.iter().zip(&audit.coverage.contained) {
        if covered {
            let (holds, slack) = regret_bound_test(t);
            checked += 1;
            failed += usize::from(!holds);
            worst = worst.min(slack);
        }
    }
    verdict(
        checked > 0 && failed == 0,
        format!("{checked} covered replicates, {failed} violations, worst prefix slack {worst:.4e} (tol 1e-8)"),
    )
}

fn criterion_3() -> Verdict {
    let mut at_t = Vec::new();
    let mut at_2t = Vec::new();
    for s in 0..20 {
        let mut config = reference_experiment(5000, 1);
        config.seed = SEED + s;
        let instance = config.instance.resolve(config.seed).unwrap();
        let rep = run_replicate(&config, LearnerKind::Ol2m, &instance, 0).unwrap();
        at_t.push(rep.lin_regret_cum[2499]);
        at_2t.push(rep.lin_regret_cum[4999]);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ratio = mean(&at_2t) / mean(&at_t);
    let per_seed: Vec<f64> = at_2t.iter().zip(&at_t).map(|(b, a)| b / a).collect();
    verdict(
        ratio <= 1.7,
        format!(
            "regret(5000)/regret(2500) = {ratio:.4} over 20 seeds (need <= 1.7); mean of per-seed ratios {:.4}; mean regret(5000) {:.1}",
            mean(&per_seed),
            mean(&at_2t)
        ),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let outcomes = [
        check_regret_sandwich(10_000, SEED + 1),
        check_strong_convexity(10_000, SEED + 2),
        check_expected_loss_minimizer(10_000, SEED + 3),
        check_update_inequality(10_000, SEED + 4),
        check_gradient_norm_bound(10_000, SEED + 5),
    ];
    let seconds = start.elapsed().as_secs_f64();
    let violations: usize = outcomes.iter().map(|o| o.violations).sum();
    let all_sized = outcomes.iter().all(|o| o.samples == 10_000);
    let detail = outcomes
        .iter()
        .map(|o| format!("{} {}/{} worst {:.2e}", o.name, o.violations, o.samples, o.worst_slack))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        violations == 0 && all_sized && seconds < 10.0,
        format!("{detail}; {seconds:.1} s (need < 10)"),
    )
}

fn criterion_5(audit: &Audit) -> Verdict {
    let mut runs: Vec<&Trajectory> = audit.trajectories.iter().collect();
    // a few other settings: unit ball, l1 region, lazy updates, larger R
    let mut extra = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 50);
    for (arms, r, mode, lazy_c) in [
        (0, 1.0, RegionMode::Ellipsoid, 0.0),
        (20, 1.0, RegionMode::L1Enlarged, 0.0),
        (20, 1.0, RegionMode::Ellipsoid, 1.0),
        (10, 3.0, RegionMode::Ellipsoid, 0.0),
    ] {
        let instance = Instance::random(5, arms, r, &mut rng).unwrap();
        let config = LearnerConfig {
            region_mode: mode,
            lazy_c,
            ..LearnerConfig::new(r)
        };
        extra.push(audit_run(&instance, &config, 2000, &mut rng).unwrap());
    }
    runs.extend(extra.iter());
    let lemma7 = runs.iter().map(|t| t.elliptical_potential_slack()).fold(f64::INFINITY, f64::min);
    let cor1 = runs.iter().map(|t| t.logdet_growth_slack()).fold(f64::INFINITY, f64::min);
    verdict(
        lemma7 >= -1e-8 && cor1 >= -1e-8,
        format!(
            "{} trajectories; elliptical potential worst slack {lemma7:.3e}, log-det growth worst slack {cor1:.3e} (tol 1e-8)",
            runs.len()
        ),
    )
}

fn random_metric(d: usize, updates: usize, lambda: f64, step: f64, rng: &mut ChaCha8Rng) -> SpdMatrix {
    let mut z = SpdMatrix::identity(d, lambda).unwrap();
    for _ in 0..updates {
        z.rank1_update_in_place(&sample_in_ball(d, 1.0, rng), step).unwrap();
    }
    z
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);

    // constrained online Newton steps against projected gradient
    let mut ons_worst: f64 = 0.0;
    let mut ons_cases = 0;
    while ons_cases < 100 {
        let d = [2, 3, 5][ons_cases % 3];
        let r = rng.random_range(0.5..2.0);
        let config = LearnerConfig {
            eta: rng.random_range(5.0..50.0),
            lambda: rng.random_range(0.5..2.0),
            ..LearnerConfig::new(r)
        };
        let mut state = LearnerState::initial(d, &config).unwrap();
        state.z = random_metric(d, rng.random_range(0..10), config.lambda, config.metric_step(), &mut rng);
        state.w = sample_on_sphere(d, &mut rng).iter().map(|v| v * r * rng.random_range(0.8..1.0)).collect();
        let x = sample_in_ball(d, 1.0, &mut rng);
        let y = if rng.random::<bool>() { 1 } else { -1 };

        let mut z_next = common::dense(&state.z);
        let xv = common::vector(&x);
        z_next += &xv * xv.transpose() * config.metric_step();
        let (z_inv, _) = common::inverse_and_logdet(&z_next);
        let u = common::vector(&state.w) - &z_inv * common::vector(&logistic_grad(&state.w, &x, y)) * config.eta;
        if u.norm() <= r {
            continue;
        }
        let next = ons_update(&state, &x, y, &config).unwrap();
        let oracle = common::pgd_projection(&z_next, &u, r);
        ons_worst = ons_worst.max((common::vector(&next.w) - oracle).norm());
        ons_cases += 1;
    }

    // unit-ball maximization against a dense boundary scan
    let mut ball_worst: f64 = 0.0;
    for _ in 0..100 {
        let z = random_metric(2, rng.random_range(0..8), rng.random_range(0.2..2.0), rng.random_range(0.1..3.0), &mut rng);
        let center = sample_in_ball(2, rng.random_range(0.0..2.0), &mut rng);
        let gamma = rng.random_range(0.01..4.0);
        let brute = common::ball_value_brute_force_2d(&common::dense(&z), &center, gamma, 1_000_000);
        let region = ConfidenceRegion::new(center, z, gamma, RegionMode::Ellipsoid).unwrap();
        let choice = select_ball(&region).unwrap();
        ball_worst = ball_worst.max((choice.value - brute).abs() / brute.max(1e-300));
    }

    // ℓ1 vertex scan against an independent enumeration
    let mut l1_mismatches = 0;
    let mut l1_worst: f64 = 0.0;
    for k in 0..100 {
        let d = rng.random_range(2..=6);
        let z = random_metric(d, rng.random_range(0..15), 1.0, rng.random_range(0.05..1.0), &mut rng);
        let center = sample_in_ball(d, 1.0, &mut rng);
        let gamma = rng.random_range(0.01..4.0);
        let vertices = common::l1_vertices(&common::dense(&z), &center, gamma);
        let region = ConfidenceRegion::new(center, z, gamma, RegionMode::L1Enlarged).unwrap();
        if k % 2 == 0 {
            let arms: Vec<Vec<f64>> = (0..15).map(|_| sample_in_ball(d, 1.0, &mut rng)).collect();
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for (i, x) in arms.iter().enumerate() {
                for (j, v) in vertices.iter().enumerate() {
                    let value = dot(x, v.as_slice());
                    if value > best.0 {
                        best = (value, i, j);
                    }
                }
            }
            let choice = select_l1(&DecisionSet::FiniteArms(arms), &region).unwrap();
            let w_err = (common::vector(&choice.w_hat) - &vertices[best.2]).amax();
            if choice.arm != Some(best.1) || w_err > 1e-12 {
                l1_mismatches += 1;
            }
            l1_worst = l1_worst.max((choice.value - best.0).abs()).max(w_err);
        } else {
            let (j, norm) = vertices
                .iter()
                .map(|v| v.norm())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (j, n)| if n > acc.1 { (j, n) } else { acc });
            let choice = select_l1(&DecisionSet::UnitBall(d), &region).unwrap();
            let w_err = (common::vector(&choice.w_hat) - &vertices[j]).amax();
            if w_err > 1e-12 {
                l1_mismatches += 1;
            }
            l1_worst = l1_worst.max((choice.value - norm).abs()).max(w_err);
        }
    }

    verdict(
        ons_worst <= 1e-6 && ball_worst <= 1e-4 && l1_mismatches == 0,
        format!(
            "projection max error {ons_worst:.2e} (need <= 1e-6); ball max relative error {ball_worst:.2e} (need <= 1e-4); \
             l1 scan {l1_mismatches} mismatches, max deviation {l1_worst:.2e}"
        ),
    )
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let d = 5;
    let mut z = SpdMatrix::identity(d, 1.0).unwrap();
    let mut reference = DMatrix::<f64>::identity(d, d);
    for _ in 0..1000 {
        let x = sample_in_ball(d, 1.0, &mut rng);
        let alpha = rng.random_range(0.01..1.0);
        z.rank1_update_in_place(&x, alpha).unwrap();
        let xv = common::vector(&x);
        reference += &xv * xv.transpose() * alpha;
    }
    let (inv_ref, logdet_ref) = common::inverse_and_logdet(&reference);
    let inv = DMatrix::from_row_slice(d, d, z.inverse_entries());
    let inv_err = (&inv - &inv_ref).norm() / inv_ref.norm();
    let logdet_err = (z.logdet() - logdet_ref).abs() / logdet_ref.abs();
    let metric_err = (common::dense(&z) - &reference).norm() / reference.norm();
    verdict(
        inv_err <= 1e-6 && logdet_err <= 1e-6 && metric_err <= 1e-6,
        format!("inverse rel. error {inv_err:.2e}, logdet rel. error {logdet_err:.2e}, metric rel. error {metric_err:.2e} (need <= 1e-6)"),
    )
}

fn criterion_8() -> Verdict {
    let instance = reference_instance();
    let mut lazy = reference_experiment(10_000, 10);
    lazy.lazy_c = 1.0;
    let eager = reference_experiment(10_000, 10);
    let mut bound_ok = true;
    let mut max_count = 0;
    let mut worst_margin = f64::INFINITY;
    let (mut lazy_sum, mut eager_sum) = (0.0, 0.0);
    for rep in 0..10 {
        let l = run_replicate(&lazy, LearnerKind::Ol2m, &instance, rep).unwrap();
        let e = run_replicate(&eager, LearnerKind::Ol2m, &instance, rep).unwrap();
        let (start, end) = l.logdet_range.unwrap();
        let bound = (end - start) / std::f64::consts::LN_2 + 1.0;
        bound_ok &= l.recomputations as f64 <= bound;
        worst_margin = worst_margin.min(bound - l.recomputations as f64);
        max_count = max_count.max(l.recomputations);
        lazy_sum += l.final_lin_regret();
        eager_sum += e.final_lin_regret();
    }
    let ratio = lazy_sum / eager_sum;
    verdict(
        bound_ok && max_count <= 100 && ratio <= 2.0,
        format!(
            "max recomputations {max_count} (need <= 100), worst margin to the log-det bound {worst_margin:.2}; \
             lazy/eager mean final regret {ratio:.3} over 10 shared seeds (need <= 2)"
        ),
    )
}

fn criterion_9() -> Verdict {
    let report = run_bench(&reference_experiment(5000, 20), 1).unwrap();
    let losses = report.replicates - report.ol2m_wins;
    verdict(
        losses <= 10,
        format!(
            "OL2M at or below the ridge baseline on {}/{} seeds (target >= 15, fail if it loses on > 10); mean final regret OL2M {:.1} vs baseline {:.1}",
            report.ol2m_wins, report.replicates, report.ol2m_mean, report.cb2_mean
        ),
    )
}

fn criterion_10() -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, setup) in bernstein_setups() {
        let points = bernstein_mc_test(&setup, &[0.5, 1.0, 2.0], 10_000, SEED + 10);
        passed &= points.iter().all(|p| p.passed);
        parts.push(format!(
            "{label}: {}",
            points
                .iter()
                .map(|p| format!("t={} {:.4}<={:.4}", p.t, p.exceedance, p.bound + p.margin))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    verdict(passed, parts.join("; "))
}

fn main() -> ExitCode {
    let audit = coverage_audit();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("confidence coverage", Box::new(|| criterion_1(&audit))),
        ("regret-bound audit", Box::new(|| criterion_2(&audit))),
        ("sublinearity", Box::new(criterion_3)),
        ("lemma suite", Box::new(criterion_4)),
        ("deterministic inequalities", Box::new(|| criterion_5(&audit))),
        ("solver oracles", Box::new(criterion_6)),
        ("numerical substrate", Box::new(criterion_7)),
        ("lazy updating", Box::new(criterion_8)),
        ("baseline comparison", Box::new(criterion_9)),
        ("Bernstein Monte-Carlo", Box::new(criterion_10)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        failures += usize::from(!v.passed);
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
