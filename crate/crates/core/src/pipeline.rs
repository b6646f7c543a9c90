//! Training of the backward and forward agents, and inference on a level.

use std::io;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::board::Mode;
use crate::features::{BackwardTrajectory, FeatureConfig, FeatureSet};
use crate::lurd::{reconstruct_lurd, LurdError};
use crate::search::{
    extract_backward_trajectory, run_search, run_search_with_rng, Problem, SearchConfig,
    SearchError, SearchResult,
};
use crate::value::Weights;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub alpha0: f64,
    pub alpha_decay: f64,
    pub backward_cap: usize,
    pub forward_cap: usize,
    /// Backward cap used to build the training levels' trajectories.
    pub hint_cap: usize,
    pub epsilon: f64,
    pub gamma: f64,
    /// Forward feature set; the backward agent uses it without hints.
    pub features: FeatureSet,
    pub seed: u64,
    pub dead_square_pruning: bool,
    pub transposition: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 100,
            alpha0: 0.01,
            alpha_decay: 0.98,
            backward_cap: 50,
            forward_cap: 100,
            hint_cap: 50,
            epsilon: SearchConfig::DEFAULT_EPSILON,
            gamma: FeatureConfig::DEFAULT_GAMMA,
            features: FeatureSet::all(),
            seed: 0,
            dead_square_pruning: true,
            transposition: true,
        }
    }
}

impl TrainConfig {
    pub fn alpha(&self, iteration: usize) -> f64 {
        self.alpha0 * self.alpha_decay.powi(iteration as i32)
    }

    fn search(&self, mode: Mode, node_cap: usize, alpha: f64, seed: u64) -> SearchConfig {
        SearchConfig {
            epsilon: self.epsilon,
            gamma: self.gamma,
            alpha,
            seed,
            dead_square_pruning: self.dead_square_pruning,
            transposition: self.transposition,
            ..SearchConfig::new(mode, node_cap)
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no training levels")]
    NoLevels,
    #[error("backward weights [{backward}] do not fit forward weights [{forward}]")]
    IncompatibleWeights {
        backward: FeatureSet,
        forward: FeatureSet,
    },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("solution could not be written as LURD: {0}")]
    Lurd(#[from] LurdError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub alpha: f64,
    pub solved: usize,
    pub expansions: usize,
    /// Weights at the end of the iteration, in feature order.
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub mode: Mode,
    pub features: FeatureSet,
    pub seed: u64,
    pub levels: usize,
    pub iterations: Vec<IterationRecord>,
    pub elapsed: Duration,
}

impl TrainReport {
    /// CSV with columns `iteration,alpha,solved,expansions` followed by one
    /// column per feature weight.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string(), "alpha".into(), "solved".into(), "expansions".into()];
        header.extend(self.features.iter().map(|k| k.name().to_string()));
        w.write_record(&header)?;
        for rec in &self.iterations {
            let mut row = vec![
                rec.iteration.to_string(),
                rec.alpha.to_string(),
                rec.solved.to_string(),
                rec.expansions.to_string(),
            ];
            row.extend(rec.weights.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Seed of a derived random stream, so that independent consumers of one
/// run seed do not share draws.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut x = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const ORDER_STREAM: u64 = 1;
const EXPLORE_STREAM: u64 = 2;
const HINT_STREAM: u64 = 3;

fn train(
    problems: &[Problem],
    mut weights: Weights,
    config: &TrainConfig,
    mode: Mode,
    hints: Option<&[BackwardTrajectory]>,
) -> Result<(Weights, TrainReport), PipelineError> {
    if problems.is_empty() {
        return Err(PipelineError::NoLevels);
    }
    let started = Instant::now();
    let cap = match mode {
        Mode::Forward => config.forward_cap,
        Mode::Backward => config.backward_cap,
    };
    let stream = match mode {
        Mode::Forward => 10,
        Mode::Backward => 20,
    };
    let mut order_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream + ORDER_STREAM, 0));
    let mut explore_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, stream + EXPLORE_STREAM, 0));
    let mut order: Vec<usize> = (0..problems.len()).collect();
    let mut records = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let alpha = config.alpha(iteration);
        order.shuffle(&mut order_rng);
        let search = config.search(mode, cap, alpha, 0);
        let mut solved = 0;
        let mut expansions = 0;
        for &i in &order {
            let hint = hints.map(|h| &h[i]);
            let out = run_search_with_rng(&problems[i], &mut weights, &search, hint, &mut explore_rng)?;
            solved += out.result.solved as usize;
            expansions += out.result.expansions;
        }
        weights.iterations = iteration + 1;
        log::info!(
            "{mode:?} iteration {} alpha {alpha:.6} solved {solved}/{} weights {:?}",
            iteration + 1,
            problems.len(),
            weights.values()
        );
        records.push(IterationRecord {
            iteration: iteration + 1,
            alpha,
            solved,
            expansions,
            weights: weights.values().to_vec(),
        });
    }
    let report = TrainReport {
        mode,
        features: weights.features(),
        seed: config.seed,
        levels: problems.len(),
        iterations: records,
        elapsed: started.elapsed(),
    };
    Ok((weights, report))
}

/// Trains the backward agent from the packed goal placements, with the
/// relaxed reward and pull moves.
pub fn train_backward(problems: &[Problem], config: &TrainConfig) -> Result<(Weights, TrainReport), PipelineError> {
    let weights = Weights::zeros(config.features.without_hints(), config.gamma);
    train(problems, weights, config, Mode::Backward, None)
}

/// Runs the frozen backward agent on a level and keeps the branch to its
/// rewarded node, or to its best leaf when the cap is hit first.
pub fn build_hint_context(
    problem: &Problem,
    backward: &Weights,
    node_cap: usize,
    epsilon: f64,
    seed: u64,
    time_limit: Option<Duration>,
) -> Result<(BackwardTrajectory, SearchResult), PipelineError> {
    let mut config = SearchConfig::new(Mode::Backward, node_cap);
    config.epsilon = epsilon;
    config.gamma = backward.gamma;
    config.seed = seed;
    config.time_limit = time_limit;
    let mut frozen = backward.clone();
    let out = run_search(problem, &mut frozen, &config, None)?;
    let trajectory = extract_backward_trajectory(&problem.level, &out);
    Ok((trajectory, out.result))
}

/// Trajectories of the training levels under the frozen backward agent, one
/// per level, computed once before forward training.
pub fn training_trajectories(
    problems: &[Problem],
    backward: &Weights,
    config: &TrainConfig,
) -> Result<Vec<BackwardTrajectory>, PipelineError> {
    problems
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let seed = derive_seed(config.seed, HINT_STREAM, i as u64);
            build_hint_context(p, backward, config.hint_cap, config.epsilon, seed, None).map(|(t, _)| t)
        })
        .collect()
}

pub fn train_forward(
    problems: &[Problem],
    backward: &Weights,
    config: &TrainConfig,
) -> Result<(Weights, TrainReport), PipelineError> {
    let weights = Weights::zeros(config.features, config.gamma);
    if config.features.has_hints() {
        let trajectories = training_trajectories(problems, backward, config)?;
        train(problems, weights, config, Mode::Forward, Some(&trajectories))
    } else {
        train(problems, weights, config, Mode::Forward, None)
    }
}

/// Both agents, trained one after the other.
#[derive(Debug, Clone)]
pub struct Trained {
    pub backward: Weights,
    pub forward: Weights,
    pub backward_report: TrainReport,
    pub forward_report: TrainReport,
}

pub fn train_both(problems: &[Problem], config: &TrainConfig) -> Result<Trained, PipelineError> {
    let (backward, backward_report) = train_backward(problems, config)?;
    let (forward, forward_report) = train_forward(problems, &backward, config)?;
    Ok(Trained {
        backward,
        forward,
        backward_report,
        forward_report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub backward_cap: usize,
    pub forward_cap: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Wall-clock budget for the whole solve, backward part included.
    pub time_limit: Option<Duration>,
    pub dead_square_pruning: bool,
    pub transposition: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            backward_cap: 10_000,
            forward_cap: 50_000,
            epsilon: SearchConfig::DEFAULT_EPSILON,
            seed: 0,
            time_limit: Some(Duration::from_secs(600)),
            dead_square_pruning: true,
            transposition: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub forward: SearchResult,
    /// Present when the forward weights use hint features.
    pub backward: Option<SearchResult>,
    pub trajectory: Option<BackwardTrajectory>,
    pub lurd: Option<String>,
    pub elapsed: Duration,
}

impl Solution {
    pub fn solved(&self) -> bool {
        self.forward.solved
    }
}

pub fn check_compatible(backward: &Weights, forward: &Weights) -> Result<(), PipelineError> {
    let expected = forward.features().without_hints();
    if backward.features() != expected {
        return Err(PipelineError::IncompatibleWeights {
            backward: backward.features(),
            forward: forward.features(),
        });
    }
    Ok(())
}

/// Backward agent first (only when hints are used), then the forward agent
/// with hint features from its trajectory. Weights stay frozen throughout.
pub fn solve(
    problem: &Problem,
    backward: &Weights,
    forward: &Weights,
    config: &SolveConfig,
) -> Result<Solution, PipelineError> {
    check_compatible(backward, forward)?;
    let started = Instant::now();
    let (trajectory, backward_result) = if forward.features().has_hints() {
        let seed = derive_seed(config.seed, HINT_STREAM, 0);
        let (t, r) = build_hint_context(
            problem,
            backward,
            config.backward_cap,
            config.epsilon,
            seed,
            config.time_limit,
        )?;
        (Some(t), Some(r))
    } else {
        (None, None)
    };
    let mut search = SearchConfig::new(Mode::Forward, config.forward_cap);
    search.epsilon = config.epsilon;
    search.gamma = forward.gamma;
    search.seed = derive_seed(config.seed, EXPLORE_STREAM, 0);
    search.dead_square_pruning = config.dead_square_pruning;
    search.transposition = config.transposition;
    search.time_limit = config
        .time_limit
        .map(|limit| limit.saturating_sub(started.elapsed()));
    let mut frozen = forward.clone();
    let out = run_search(problem, &mut frozen, &search, trajectory.as_ref())?;
    let lurd = match &out.result.solution {
        Some(moves) => Some(reconstruct_lurd(&problem.level, moves)?),
        None => None,
    };
    Ok(Solution {
        forward: out.result,
        backward: backward_result,
        trajectory,
        lurd,
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;
    use crate::levels::parse_xsb;

    fn corridor() -> Vec<Problem> {
        vec![Problem::new(parse_xsb("#####\n#@$.#\n#####").unwrap())]
    }

    #[test]
    fn alpha_schedule() {
        let c = TrainConfig::default();
        for i in 0..100 {
            assert!((c.alpha(i) - 0.01 * 0.98f64.powi(i as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn corridor_training() {
        let problems = corridor();
        let config = TrainConfig {
            iterations: 1,
            ..TrainConfig::default()
        };
        let (bw, report) = train_backward(&problems, &config).unwrap();
        assert_eq!(report.iterations.len(), 1);
        assert_eq!(report.iterations[0].solved, 1);
        assert!(bw.values().iter().any(|&w| w != 0.0));
        let (traj, _) = build_hint_context(&problems[0], &bw, 50, 0.1, 0, None).unwrap();
        assert_eq!(traj.states.len(), 2);
        let (fw, _) = train_forward(&problems, &bw, &config).unwrap();
        let greedy = SolveConfig {
            epsilon: 0.0,
            ..SolveConfig::default()
        };
        let s = solve(&problems[0], &bw, &fw, &greedy).unwrap();
        assert_eq!(s.lurd.as_deref(), Some("R"));
    }

    #[test]
    fn no_hints_weights() {
        let config = TrainConfig {
            iterations: 2,
            features: FeatureSet::with_options(false, false, true),
            ..TrainConfig::default()
        };
        let t = train_both(&corridor(), &config).unwrap();
        assert_eq!(t.forward.get(FeatureKind::Overlap), None);
        assert_eq!(t.forward.get(FeatureKind::Perm), None);
        let s = solve(&corridor()[0], &t.backward, &t.forward, &SolveConfig::default()).unwrap();
        assert!(s.trajectory.is_none() && s.backward.is_none());
    }

    #[test]
    fn trajectory_with_cap_one() {
        let p = Problem::new(parse_xsb("#######\n#@ $ .#\n# $ . #\n#######").unwrap());
        let bw = Weights::zeros(FeatureSet::core(), 0.95);
        let (t, _) = build_hint_context(&p, &bw, 1, 0.1, 0, None).unwrap();
        assert_eq!(t.packing_order, p.level.targets().to_vec());
    }

    #[test]
    fn dead_level_is_unsolved() {
        let p = Problem::new(parse_xsb("######\n#$   #\n#  @.#\n######").unwrap());
        let bw = Weights::zeros(FeatureSet::core(), 0.95);
        let fw = Weights::zeros(FeatureSet::with_options(true, true, false), 0.95);
        let s = solve(&p, &bw, &fw, &SolveConfig::default()).unwrap();
        assert!(!s.solved());
        assert_eq!(s.forward.expansions, 1);
        assert_eq!(s.forward.nodes_created, 1);
    }

    #[test]
    fn incompatible_sets() {
        let bw = Weights::zeros(FeatureSet::all().without_hints(), 0.95);
        let fw = Weights::zeros(FeatureSet::with_options(true, true, false), 0.95);
        assert!(matches!(
            solve(&corridor()[0], &bw, &fw, &SolveConfig::default()),
            Err(PipelineError::IncompatibleWeights { .. })
        ));
    }

    #[test]
    fn report_csv() {
        let config = TrainConfig {
            iterations: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let (_, a) = train_backward(&corridor(), &config).unwrap();
        let (_, b) = train_backward(&corridor(), &config).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let csv = a.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iteration,alpha,solved,expansions,Targets,Distance,Gamma1,Gamma2,Connectivity"
        );
        assert_eq!(lines.count(), 3);
    }
}
