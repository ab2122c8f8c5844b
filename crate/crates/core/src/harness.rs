//! Seeded experiments: configuration, the simulation loop, and result files.
//!
//! Replicate `r` of a run seeded with `s` draws its feedback from a ChaCha8
//! stream `(s, r)`, one uniform variate per round, so different policies run on
//! the same seed see the same noise. Randomly generated instances use stream
//! [`INSTANCE_STREAM`] and the uniform policy draws its actions from stream
//! `r + `[`POLICY_STREAM_OFFSET`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{Cb2Config, Cb2State};
use crate::checks::stream_rng;
use crate::env::{best_action, round_regrets, sample_feedback, sample_in_ball, DecisionSet, Instance, InstanceFile};
use crate::error::{Error, Result};
use crate::learner::{Learner, LearnerConfig};
use crate::linalg::{norm2, sub};
use crate::region::RegionMode;
use crate::select::select_action;

pub const INSTANCE_STREAM: u64 = u64::MAX;
pub const POLICY_STREAM_OFFSET: u64 = 1 << 32;

pub const CSV_HEADER: &str = "replicate,t,lin_regret_cum,nonlin_regret_cum,recomputed";

/// Top-level keys of `<prefix>_summary.json`, in order.
pub const SUMMARY_FIELDS: [&str; 8] = [
    "config",
    "instance",
    "seed",
    "streams",
    "replicates",
    "mean_final_lin_regret",
    "mean_final_nonlin_regret",
    "coverage",
];

/// Keys of each entry of the summary's `replicates` array, in order.
pub const REPLICATE_FIELDS: [&str; 6] = [
    "replicate",
    "stream",
    "final_lin_regret",
    "final_nonlin_regret",
    "recomputations",
    "covered",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[default]
    Ol2m,
    Cb2,
    /// Uniformly random actions; a reference point, not a learner.
    Uniform,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ol2m" => Ok(Self::Ol2m),
            "cb2" => Ok(Self::Cb2),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Config(format!("unknown learner `{other}`"))),
        }
    }
}

/// A randomly drawn instance. `arms == 0` selects the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInstance {
    pub d: usize,
    #[serde(default)]
    pub arms: usize,
    #[serde(rename = "R", default = "one")]
    pub r: f64,
    /// Defaults to the experiment seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    File(PathBuf),
    Random { random: RandomInstance },
    Inline(InstanceFile),
}

impl InstanceSource {
    pub fn resolve(&self, experiment_seed: u64) -> Result<Instance> {
        match self {
            Self::File(path) => Instance::load(path),
            Self::Inline(file) => Instance::from_file(file.clone()),
            Self::Random { random } => {
                let mut rng = stream_rng(random.seed.unwrap_or(experiment_seed), INSTANCE_STREAM);
                Instance::random(random.d, random.arms, random.r, &mut rng)
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(default)]
    pub learner: LearnerKind,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub lazy_c: f64,
    #[serde(default)]
    pub region_mode: RegionMode,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSource, horizon: usize, replicates: usize, seed: u64) -> Self {
        Self {
            instance,
            learner: LearnerKind::Ol2m,
            eta: 1.0,
            lambda: 1.0,
            delta: default_delta(),
            lazy_c: 0.0,
            region_mode: RegionMode::Ellipsoid,
            horizon,
            replicates,
            seed,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        Ok(())
    }

    pub fn learner_config(&self, r: f64) -> LearnerConfig {
        LearnerConfig {
            eta: self.eta,
            lambda: self.lambda,
            delta: self.delta,
            r,
            lazy_c: self.lazy_c,
            region_mode: self.region_mode,
            radius_scale: 1.0,
        }
    }

    pub fn cb2_config(&self, r: f64) -> Cb2Config {
        Cb2Config {
            lambda: self.lambda,
            delta: self.delta,
            r,
        }
    }
}

/// Curves and bookkeeping of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub stream: u64,
    pub lin_regret_cum: Vec<f64>,
    pub nonlin_regret_cum: Vec<f64>,
    pub recomputed: Vec<bool>,
    pub recomputations: usize,
    /// Whether `w*` stayed in the learner's region at every round (OL²M only).
    pub covered: Option<bool>,
    /// `log det` of the learner's metric before the first and after the last round.
    pub logdet_range: Option<(f64, f64)>,
    /// Wall-clock seconds per round. Kept out of emitted files so they stay
    /// byte-reproducible.
    pub seconds_per_round: f64,
}

impl ReplicateResult {
    pub fn final_lin_regret(&self) -> f64 {
        self.lin_regret_cum.last().copied().unwrap_or(0.0)
    }

    pub fn final_nonlin_regret(&self) -> f64 {
        self.nonlin_regret_cum.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub replicates: Vec<ReplicateResult>,
}

/// One line of the curves CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub replicate: usize,
    pub t: usize,
    pub lin_regret_cum: f64,
    pub nonlin_regret_cum: f64,
    pub recomputed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub stream: u64,
    pub final_lin_regret: f64,
    pub final_nonlin_regret: f64,
    pub recomputations: usize,
    pub covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub instance: InstanceFile,
    pub seed: u64,
    pub streams: Vec<u64>,
    pub replicates: Vec<ReplicateSummary>,
    pub mean_final_lin_regret: f64,
    pub mean_final_nonlin_regret: f64,
    pub coverage: Option<f64>,
}

impl ExperimentResult {
    pub fn mean_final_lin_regret(&self) -> f64 {
        mean(self.replicates.iter().map(ReplicateResult::final_lin_regret))
    }

    pub fn mean_final_nonlin_regret(&self) -> f64 {
        mean(self.replicates.iter().map(ReplicateResult::final_nonlin_regret))
    }

    /// Mean cumulative linear regret after round `t` (1-based).
    pub fn mean_lin_regret_at(&self, t: usize) -> f64 {
        mean(self.replicates.iter().map(|r| r.lin_regret_cum[t - 1]))
    }

    pub fn coverage(&self) -> Option<f64> {
        let flags: Option<Vec<bool>> = self.replicates.iter().map(|r| r.covered).collect();
        flags.map(|f| f.iter().filter(|&&c| c).count() as f64 / f.len() as f64)
    }

    pub fn curve_rows(&self) -> Vec<CurveRow> {
        self.replicates
            .iter()
            .flat_map(|rep| {
                (0..rep.lin_regret_cum.len()).map(move |k| CurveRow {
                    replicate: rep.replicate,
                    t: k + 1,
                    lin_regret_cum: rep.lin_regret_cum[k],
                    nonlin_regret_cum: rep.nonlin_regret_cum[k],
                    recomputed: rep.recomputed[k],
                })
            })
            .collect()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            config: self.config.clone(),
            instance: self.instance.to_file(),
            seed: self.config.seed,
            streams: self.replicates.iter().map(|r| r.stream).collect(),
            replicates: self
                .replicates
                .iter()
                .map(|r| ReplicateSummary {
                    replicate: r.replicate,
                    stream: r.stream,
                    final_lin_regret: r.final_lin_regret(),
                    final_nonlin_regret: r.final_nonlin_regret(),
                    recomputations: r.recomputations,
                    covered: r.covered,
                })
                .collect(),
            mean_final_lin_regret: self.mean_final_lin_regret(),
            mean_final_nonlin_regret: self.mean_final_nonlin_regret(),
            coverage: self.coverage(),
        }
    }

    pub fn curves_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.replicates.len() * self.config.horizon + 64);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in self.curve_rows() {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{}",
                row.replicate, row.t, row.lin_regret_cum, row.nonlin_regret_cum, row.recomputed as u8
            )
            .expect("writing to a String");
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

enum Policy {
    Ol2m(Box<Learner>),
    Cb2(Cb2State, Cb2Config),
    Uniform(ChaCha8Rng),
}

impl Policy {
    fn choose(&mut self, set: &DecisionSet) -> Result<(Vec<f64>, bool)> {
        match self {
            Self::Ol2m(learner) => learner.choose(set).map(|(c, fresh)| (c.x, fresh)),
            Self::Cb2(state, _) => select_action(set, &state.region()).map(|c| (c.x, true)),
            Self::Uniform(rng) => Ok((
                match set {
                    DecisionSet::FiniteArms(arms) => arms[rng.random_range(0..arms.len())].clone(),
                    DecisionSet::UnitBall(d) => sample_in_ball(*d, 1.0, rng),
                },
                true,
            )),
        }
    }

    fn observe(&mut self, x: &[f64], y: i8) -> Result<()> {
        match self {
            Self::Ol2m(learner) => learner.observe(x, y).map(|_| ()),
            Self::Cb2(state, config) => state.update(x, f64::from(y), config),
            Self::Uniform(_) => Ok(()),
        }
    }
}

/// Runs one replicate of `config` under `kind` on a resolved instance.
pub fn run_replicate(
    config: &ExperimentConfig,
    kind: LearnerKind,
    instance: &Instance,
    replicate: usize,
) -> Result<ReplicateResult> {
    let d = instance.dim();
    let params = &instance.params;
    let r = params.r();
    let w_star = params.w_star();
    let stream = replicate as u64;
    let mut rng = stream_rng(config.seed, stream);
    let mut policy = match kind {
        LearnerKind::Ol2m => Policy::Ol2m(Box::new(Learner::new(d, config.learner_config(r))?)),
        LearnerKind::Cb2 => {
            let cb2 = config.cb2_config(r);
            Policy::Cb2(Cb2State::new(d, &cb2)?, cb2)
        }
        LearnerKind::Uniform => Policy::Uniform(stream_rng(config.seed, stream + POLICY_STREAM_OFFSET)),
    };
    let x_star = best_action(&instance.set, params);
    let horizon = config.horizon;
    let mut lin_cum = Vec::with_capacity(horizon);
    let mut nonlin_cum = Vec::with_capacity(horizon);
    let mut recomputed = Vec::with_capacity(horizon);
    let (mut lin, mut nonlin) = (0.0, 0.0);
    let mut covered = true;
    let logdet_start = match &policy {
        Policy::Ol2m(l) => Some(l.state().z.logdet()),
        _ => None,
    };

    let start = Instant::now();
    for t in 1..=horizon {
        let (x, fresh) = policy.choose(&instance.set)?;
        let y = sample_feedback(params, &x, &mut rng);
        let gamma_before = match &policy {
            Policy::Ol2m(l) => l.state().gamma,
            _ => 0.0,
        };
        policy.observe(&x, y)?;
        let (l, n) = round_regrets(params, &x_star, &x);
        if !(l.is_finite() && n.is_finite()) {
            return Err(Error::Invariant {
                round: t,
                what: format!("non-finite regret ({l}, {n})"),
            });
        }
        if let Policy::Ol2m(learner) = &policy {
            let state = learner.state();
            if norm2(&state.w) > r * (1.0 + 1e-9) {
                return Err(Error::Invariant {
                    round: t,
                    what: format!("iterate left the {r}-ball (norm {})", norm2(&state.w)),
                });
            }
            if state.gamma < gamma_before {
                return Err(Error::Invariant {
                    round: t,
                    what: "confidence radius decreased".into(),
                });
            }
            covered &= state.z.quad(&sub(&state.w, w_star)) <= state.gamma;
        }
        lin += l;
        nonlin += n;
        lin_cum.push(lin);
        nonlin_cum.push(nonlin);
        recomputed.push(fresh);
    }
    let seconds_per_round = start.elapsed().as_secs_f64() / horizon.max(1) as f64;

    let (recomputations, covered, logdet_range) = match &policy {
        Policy::Ol2m(l) => (
            l.recomputations(),
            Some(covered),
            logdet_start.map(|s| (s, l.state().z.logdet())),
        ),
        _ => (recomputed.iter().filter(|&&f| f).count(), None, None),
    };
    Ok(ReplicateResult {
        replicate,
        stream,
        lin_regret_cum: lin_cum,
        nonlin_regret_cum: nonlin_cum,
        recomputed,
        recomputations,
        covered,
        logdet_range,
        seconds_per_round,
    })
}

fn run_all(config: &ExperimentConfig, kind: LearnerKind, instance: &Instance, jobs: usize) -> Result<Vec<ReplicateResult>> {
    let reps = 0..config.replicates;
    if jobs <= 1 {
        return reps.map(|r| run_replicate(config, kind, instance, r)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| {
        reps.into_par_iter()
            .map(|r| run_replicate(config, kind, instance, r))
            .collect()
    })
}

/// Runs every replicate on the calling thread.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_jobs(config, 1)
}

/// Runs replicates on `jobs` threads. Output does not depend on `jobs`.
pub fn run_experiment_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let instance = config.instance.resolve(config.seed)?;
    let replicates = run_all(config, config.learner, &instance, jobs)?;
    Ok(ExperimentResult {
        config: config.clone(),
        instance,
        replicates,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn to_pretty_json<T: Serialize>(value: &T, what: &str) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|source| Error::Json {
            context: format!("serializing {what}"),
            source,
        })
}

/// Writes `<prefix>_curves.csv` and `<prefix>_summary.json`; returns both paths.
pub fn emit_results(result: &ExperimentResult, prefix: &Path) -> Result<(PathBuf, PathBuf)> {
    let csv = with_suffix(prefix, "_curves.csv");
    let summary = with_suffix(prefix, "_summary.json");
    write_file(&csv, &result.curves_csv())?;
    write_file(&summary, &to_pretty_json(&result.summary(), "summary")?)?;
    Ok((csv, summary))
}

/// Parses a curves file written by [`emit_results`].
pub fn read_curves_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_curves_csv(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn parse_curves_csv(text: &str) -> std::result::Result<Vec<CurveRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let bad = |what: &str| format!("line {}: bad {what}", k + 2);
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(bad("field count"));
            }
            Ok(CurveRow {
                replicate: fields[0].parse().map_err(|_| bad("replicate"))?,
                t: fields[1].parse().map_err(|_| bad("t"))?,
                lin_regret_cum: fields[2].parse().map_err(|_| bad("lin_regret_cum"))?,
                nonlin_regret_cum: fields[3].parse().map_err(|_| bad("nonlin_regret_cum"))?,
                recomputed: match fields[4] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad("recomputed")),
                },
            })
        })
        .collect()
}

/// OL²M against the ridge baseline on one instance and shared seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub replicates: usize,
    pub ol2m_final_regret: Vec<f64>,
    pub cb2_final_regret: Vec<f64>,
    /// Replicates on which OL²M's final regret is at most the baseline's.
    pub ol2m_wins: usize,
    pub ol2m_mean: f64,
    pub cb2_mean: f64,
    pub ol2m_seconds_per_round: f64,
    pub cb2_seconds_per_round: f64,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        to_pretty_json(self, "bench report")
    }
}

pub fn run_bench(config: &ExperimentConfig, jobs: usize) -> Result<BenchReport> {
    config.validate()?;
    let instance = config.instance.resolve(config.seed)?;
    let ol2m = run_all(config, LearnerKind::Ol2m, &instance, jobs)?;
    let cb2 = run_all(config, LearnerKind::Cb2, &instance, jobs)?;
    let finals = |reps: &[ReplicateResult]| reps.iter().map(ReplicateResult::final_lin_regret).collect::<Vec<_>>();
    let secs = |reps: &[ReplicateResult]| mean(reps.iter().map(|r| r.seconds_per_round));
    let (a, b) = (finals(&ol2m), finals(&cb2));
    Ok(BenchReport {
        seed: config.seed,
        horizon: config.horizon,
        replicates: config.replicates,
        ol2m_wins: a.iter().zip(&b).filter(|(x, y)| x <= y).count(),
        ol2m_mean: mean(a.iter().copied()),
        cb2_mean: mean(b.iter().copied()),
        ol2m_final_regret: a,
        cb2_final_regret: b,
        ol2m_seconds_per_round: secs(&ol2m),
        cb2_seconds_per_round: secs(&cb2),
    })
}
