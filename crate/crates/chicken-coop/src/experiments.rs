//! Orchestration of the three experiments: emergence, observation ablation
//! and cross-population transmission, plus the summary statistics derived
//! from them. Populations are independent work units trained in parallel,
//! each with its own counter-derived random stream.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{CoopConfig, GameError, RewardConstants};
use crate::learner::{train_generation, AgentTrainState, LearnerError, PpoHyperparams};
use crate::metrics::{
    build_hierarchy_partial, condense, dhtf, is_transitive, overall_aggressiveness,
    rank_linearity, rapport, DominanceDigraph, InteractionLog, MetricError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed split: each (master, tag-path) pair maps to a stable
/// stream seed, so changing the number of populations never perturbs the
/// seeds of earlier ones.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ splitmix64(t.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    s
}

// Tag namespaces for the per-population seed derivation.
const TAG_EMERGENCE: u64 = 0;
const TAG_ABLATION: u64 = 1;
const TAG_TRANSMISSION: u64 = 2;

/// Parameters of an emergence run (also the base of the other experiments).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmergenceConfig {
    pub n_populations: usize,
    pub n_agents: usize,
    pub max_generations: usize,
    pub hyper: PpoHyperparams,
    pub eta: f64,
    /// A population is converged once the minimum pair rapport exceeds `eta`
    /// for this many consecutive generations.
    pub convergence_window: usize,
    pub master_seed: u64,
    pub rewards: RewardConstants,
}

impl EmergenceConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_populations < 1 {
            return Err(ExperimentError::InvalidConfig(
                "n_populations must be at least 1".into(),
            ));
        }
        if self.n_agents < 2 || self.n_agents % 2 != 0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "n_agents must be even and >= 2, got {}",
                self.n_agents
            )));
        }
        if self.max_generations < 1 {
            return Err(ExperimentError::InvalidConfig(
                "max_generations must be at least 1".into(),
            ));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(ExperimentError::InvalidConfig(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if self.convergence_window < 1 {
            return Err(ExperimentError::InvalidConfig(
                "convergence_window must be at least 1".into(),
            ));
        }
        self.hyper.validate()?;
        self.rewards.validate()?;
        Ok(())
    }

    fn coop_config(&self, opa: f64) -> CoopConfig {
        CoopConfig {
            n_agents: self.n_agents,
            opa,
            rewards: self.rewards,
            rng_seed: self.master_seed,
        }
    }
}

/// Observation-ablation parameters: a grid of OPA values, each trained on
/// fresh populations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationConfig {
    pub opa_grid: Vec<f64>,
    pub populations_per_point: usize,
    pub base: EmergenceConfig,
}

impl AblationConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.base.validate()?;
        if self.opa_grid.is_empty() {
            return Err(ExperimentError::InvalidConfig("empty opa_grid".into()));
        }
        if self.opa_grid.iter().any(|o| !(0.0..=1.0).contains(o)) {
            return Err(ExperimentError::InvalidConfig(
                "opa_grid values must lie in [0, 1]".into(),
            ));
        }
        if self.opa_grid.windows(2).any(|w| w[0] > w[1]) {
            return Err(ExperimentError::InvalidConfig(
                "opa_grid must be sorted ascending".into(),
            ));
        }
        if self.populations_per_point < 1 {
            return Err(ExperimentError::InvalidConfig(
                "populations_per_point must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Transmission parameters: how many source populations, repeats and
/// experienced-agent counts to run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransmissionConfig {
    pub n_source_populations: usize,
    pub repeats_per_population: usize,
    /// Number of experienced agents per transplant; `k <= n_agents - 2` keeps
    /// at least one naive pair for the fidelity measurement.
    pub k_values: Vec<usize>,
    pub naive_hyper: PpoHyperparams,
    pub base: EmergenceConfig,
}

impl TransmissionConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.base.validate()?;
        self.naive_hyper.validate()?;
        if self.n_source_populations < 1 || self.repeats_per_population < 1 {
            return Err(ExperimentError::InvalidConfig(
                "n_source_populations and repeats_per_population must be at least 1".into(),
            ));
        }
        if self.k_values.is_empty() {
            return Err(ExperimentError::InvalidConfig("empty k_values".into()));
        }
        for &k in &self.k_values {
            if k > self.base.n_agents - 2 {
                return Err(ExperimentError::InvalidConfig(format!(
                    "k_values entry {k} exceeds n_agents - 2 = {}",
                    self.base.n_agents - 2
                )));
            }
        }
        Ok(())
    }
}

/// Per-generation measurements of one population.
#[derive(Clone, Debug)]
pub struct GenerationMetrics {
    pub generation: usize,
    pub aggressiveness: Vec<f64>,
    /// `(i, j, rapport)` for every unordered pair; `None` when the pair never
    /// met during the generation.
    pub pair_rapport: Vec<(usize, usize, Option<f64>)>,
    /// Minimum over pairs; `None` when any pair rapport is undefined.
    pub min_rapport: Option<f64>,
    pub hierarchy: DominanceDigraph,
}

/// Full trace of one trained population.
#[derive(Clone, Debug)]
pub struct PopulationOutcome {
    pub history: Vec<GenerationMetrics>,
    pub final_states: Vec<AgentTrainState>,
    /// Final-generation hierarchy; present whenever every pair met.
    pub hierarchy: Option<DominanceDigraph>,
    pub converged: bool,
    pub generations: usize,
}

impl PopulationOutcome {
    pub fn final_metrics(&self) -> &GenerationMetrics {
        self.history.last().expect("at least one generation runs")
    }
}

#[derive(Debug)]
pub struct EmergenceResult {
    pub populations: Vec<PopulationOutcome>,
}

fn generation_metrics(
    generation: usize,
    log: &InteractionLog,
    eta: f64,
) -> Result<GenerationMetrics, ExperimentError> {
    let n = log.n_agents();
    let mut aggressiveness = Vec::with_capacity(n);
    for i in 0..n {
        aggressiveness.push(overall_aggressiveness(log, i)?);
    }
    let mut pair_rapport = Vec::with_capacity(n * (n - 1) / 2);
    let mut min_rapport = Some(f64::INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = rapport(log, i, j).ok();
            match r {
                Some(v) => {
                    if let Some(m) = min_rapport {
                        min_rapport = Some(m.min(v));
                    }
                }
                None => min_rapport = None,
            }
            pair_rapport.push((i, j, r));
        }
    }
    Ok(GenerationMetrics {
        generation,
        aggressiveness,
        pair_rapport,
        min_rapport,
        hierarchy: build_hierarchy_partial(log, eta),
    })
}

/// Trains one population until convergence or the generation cap. `initial`
/// lets callers start from transplanted agents; `None` means a fresh
/// zero-initialized (uniform) population.
pub fn run_population(
    cfg: &EmergenceConfig,
    opa: f64,
    seed: u64,
    initial: Option<Vec<AgentTrainState>>,
) -> Result<PopulationOutcome, ExperimentError> {
    cfg.validate()?;
    let n = cfg.n_agents;
    let mut states = match initial {
        Some(s) => {
            if s.len() != n {
                return Err(ExperimentError::InvalidConfig(format!(
                    "initial population size {} does not match n_agents {}",
                    s.len(),
                    n
                )));
            }
            s
        }
        None => (0..n).map(|_| AgentTrainState::new_zeroed(n)).collect(),
    };
    let coop = cfg.coop_config(opa);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut history = Vec::new();
    let mut streak = 0usize;
    let mut converged = false;
    for generation in 0..cfg.max_generations {
        let (episodes, _stats) = train_generation(&mut states, &coop, &cfg.hyper, &mut rng)?;
        let log = InteractionLog::from_episodes(&episodes, n);
        let metrics = generation_metrics(generation, &log, cfg.eta)?;
        let settled = metrics.min_rapport.map_or(false, |m| m > cfg.eta);
        history.push(metrics);
        streak = if settled { streak + 1 } else { 0 };
        if streak >= cfg.convergence_window {
            converged = true;
            break;
        }
    }

    let hierarchy = {
        let last = history.last().expect("max_generations >= 1");
        if last.hierarchy.is_complete() {
            Some(last.hierarchy.clone())
        } else {
            None
        }
    };
    let generations = history.len();
    Ok(PopulationOutcome {
        history,
        final_states: states,
        hierarchy,
        converged,
        generations,
    })
}

/// Trains `n_populations` independent populations at full observation
/// accuracy. No parameters are shared across populations.
pub fn run_emergence(cfg: &EmergenceConfig) -> Result<EmergenceResult, ExperimentError> {
    cfg.validate()?;
    let populations: Result<Vec<_>, _> = (0..cfg.n_populations)
        .into_par_iter()
        .map(|p| {
            let seed = derive_seed(cfg.master_seed, &[TAG_EMERGENCE, p as u64]);
            run_population(cfg, 1.0, seed, None)
        })
        .collect();
    Ok(EmergenceResult {
        populations: populations?,
    })
}

/// Mean-rapport trajectory of one OPA grid point.
#[derive(Clone, Debug)]
pub struct AblationPoint {
    pub opa: f64,
    /// Mean pair rapport per generation, averaged over populations. After a
    /// population converges its final value is carried forward.
    pub mean_rapport_per_generation: Vec<f64>,
    /// Mean pair rapport of each population's final generation, averaged.
    pub final_mean_rapport: f64,
    /// Mean pair rapport of the final generation, per population.
    pub final_rapport_per_population: Vec<f64>,
}

#[derive(Debug)]
pub struct AblationResult {
    pub points: Vec<AblationPoint>,
}

fn mean_defined_rapport(metrics: &GenerationMetrics) -> f64 {
    let defined: Vec<f64> = metrics
        .pair_rapport
        .iter()
        .filter_map(|&(_, _, r)| r)
        .collect();
    if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

/// Trains fresh populations for every OPA value in the grid and records how
/// rapport develops under each observation-noise level.
pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationResult, ExperimentError> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.opa_grid.len());
    for (point_idx, &opa) in cfg.opa_grid.iter().enumerate() {
        let outcomes: Result<Vec<_>, _> = (0..cfg.populations_per_point)
            .into_par_iter()
            .map(|p| {
                let seed = derive_seed(
                    cfg.base.master_seed,
                    &[TAG_ABLATION, point_idx as u64, p as u64],
                );
                run_population(&cfg.base, opa, seed, None)
            })
            .collect();
        let outcomes = outcomes?;
        let horizon = outcomes
            .iter()
            .map(|o| o.generations)
            .max()
            .unwrap_or(0);
        let mut trajectory = Vec::with_capacity(horizon);
        for g in 0..horizon {
            let mut total = 0.0;
            for o in &outcomes {
                let m = if g < o.generations {
                    &o.history[g]
                } else {
                    o.final_metrics()
                };
                total += mean_defined_rapport(m);
            }
            trajectory.push(total / outcomes.len() as f64);
        }
        let final_rapport_per_population: Vec<f64> = outcomes
            .iter()
            .map(|o| mean_defined_rapport(o.final_metrics()))
            .collect();
        let final_mean_rapport = final_rapport_per_population.iter().sum::<f64>()
            / final_rapport_per_population.len() as f64;
        points.push(AblationPoint {
            opa,
            mean_rapport_per_generation: trajectory,
            final_mean_rapport,
            final_rapport_per_population,
        });
    }
    Ok(AblationResult { points })
}

/// A converged source population used as transplant material.
#[derive(Clone, Debug)]
pub struct SourcePopulation {
    pub hierarchy: DominanceDigraph,
    pub states: Vec<AgentTrainState>,
}

/// One transplant outcome.
#[derive(Clone, Debug)]
pub struct TransmissionSample {
    pub source: usize,
    pub repeat: usize,
    pub k: usize,
    pub experienced_indices: Vec<usize>,
    pub naive_indices: Vec<usize>,
    /// Fidelity against the source hierarchy; `None` when the mixed
    /// population failed to converge to a complete hierarchy.
    pub dhtf: Option<f64>,
    pub converged: bool,
}

#[derive(Debug)]
pub struct TransmissionResult {
    pub samples: Vec<TransmissionSample>,
}

/// For each source population and repeat, transplants a random sample of `k`
/// experienced agents (kept frozen, keeping their indices) into an otherwise
/// naive population, trains the naive agents, and measures the fidelity of
/// the naive-pair relations against the source hierarchy.
pub fn run_transmission(
    cfg: &TransmissionConfig,
    sources: &[SourcePopulation],
) -> Result<TransmissionResult, ExperimentError> {
    cfg.validate()?;
    let n = cfg.base.n_agents;
    if sources.len() < cfg.n_source_populations {
        return Err(ExperimentError::InvalidInput(format!(
            "need {} converged source populations, got {}",
            cfg.n_source_populations,
            sources.len()
        )));
    }
    for (s, src) in sources.iter().enumerate().take(cfg.n_source_populations) {
        if !src.hierarchy.is_complete() || src.hierarchy.n_agents() != n {
            return Err(ExperimentError::InvalidInput(format!(
                "source population {s} lacks a complete hierarchy on {n} agents"
            )));
        }
        if src.states.len() != n {
            return Err(ExperimentError::InvalidInput(format!(
                "source population {s} has {} agents, expected {n}",
                src.states.len()
            )));
        }
    }

    let naive_cfg = EmergenceConfig {
        hyper: cfg.naive_hyper,
        ..cfg.base.clone()
    };

    let mut jobs = Vec::new();
    for s in 0..cfg.n_source_populations {
        for m in 0..cfg.repeats_per_population {
            for &k in &cfg.k_values {
                jobs.push((s, m, k));
            }
        }
    }

    let samples: Result<Vec<_>, ExperimentError> = jobs
        .into_par_iter()
        .map(|(s, m, k)| {
            let seed = derive_seed(
                cfg.base.master_seed,
                &[TAG_TRANSMISSION, s as u64, m as u64, k as u64],
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut experienced_indices: Vec<usize> =
                sample(&mut rng, n, k).into_iter().collect();
            experienced_indices.sort_unstable();
            let naive_indices: Vec<usize> = (0..n)
                .filter(|i| !experienced_indices.contains(i))
                .collect();

            let source = &sources[s];
            let initial: Vec<AgentTrainState> = (0..n)
                .map(|i| {
                    if experienced_indices.contains(&i) {
                        AgentTrainState {
                            policy: source.states[i].policy.clone(),
                            frozen: true,
                        }
                    } else {
                        AgentTrainState::new_zeroed(n)
                    }
                })
                .collect();

            let train_seed = splitmix64(seed);
            let outcome = run_population(&naive_cfg, 1.0, train_seed, Some(initial))?;

            // Frozen transplants must come back bit-identical.
            for &i in &experienced_indices {
                debug_assert_eq!(
                    outcome.final_states[i].policy, source.states[i].policy,
                    "experienced agent {i} changed during naive training"
                );
            }

            let fidelity = match (&outcome.hierarchy, outcome.converged) {
                (Some(h_prime), true) => {
                    Some(dhtf(&source.hierarchy, h_prime, &naive_indices)?)
                }
                _ => None,
            };
            Ok(TransmissionSample {
                source: s,
                repeat: m,
                k,
                experienced_indices,
                naive_indices,
                dhtf: fidelity,
                converged: outcome.converged,
            })
        })
        .collect();

    Ok(TransmissionResult { samples: samples? })
}

/// Mean final aggressiveness per rank over the populations that converged to
/// a linear (transitive) hierarchy. `None` when no population qualifies.
pub fn summarize_by_rank(
    outcomes: &[PopulationOutcome],
) -> Result<Option<Vec<f64>>, ExperimentError> {
    let mut sums: Option<Vec<f64>> = None;
    let mut count = 0usize;
    for o in outcomes {
        let Some(h) = &o.hierarchy else { continue };
        if !o.converged || !is_transitive(h)? {
            continue;
        }
        let ranks = condense(h)?;
        let final_aggr = &o.final_metrics().aggressiveness;
        let n = h.n_agents();
        let sums = sums.get_or_insert_with(|| vec![0.0; n]);
        for (rank, block) in ranks.blocks.iter().enumerate() {
            sums[rank] += final_aggr[block[0]];
        }
        count += 1;
    }
    Ok(sums.map(|s| s.into_iter().map(|x| x / count as f64).collect()))
}

/// Rank linearity for each rank `0..n`.
pub fn rank_linearity_profile(
    hierarchies: &[DominanceDigraph],
) -> Result<Vec<f64>, ExperimentError> {
    if hierarchies.is_empty() {
        return Err(ExperimentError::InvalidInput(
            "rank linearity profile over an empty hierarchy list".into(),
        ));
    }
    let n = hierarchies[0].n_agents();
    (0..n)
        .map(|r| rank_linearity(hierarchies, r).map_err(ExperimentError::from))
        .collect()
}
