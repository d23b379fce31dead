//! Independent per-agent policy learning with a clipped-surrogate update over
//! an exact tabular parameterization of the finite observation space.
//!
//! The observation space is just the opponent index, so each agent's policy is
//! a logit table with one row per observed opponent and one column per action,
//! plus a per-context value baseline. Gradients are closed-form.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{play_episode, Action, CoopConfig, EpisodeRecord};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("context {context} out of range for {n_contexts} contexts")]
    ContextOutOfRange { context: usize, n_contexts: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("snapshot decode error: {0}")]
    Decode(String),
}

/// Logit column order: `[hawk, dove]`.
const HAWK: usize = 0;
const DOVE: usize = 1;

/// Per-agent policy parameters: one logit pair and one baseline value per
/// observed opponent index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub logits: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

impl PolicyTable {
    /// Zero logits give the uniform policy; zero values give a neutral baseline.
    pub fn new_zeroed(n_contexts: usize) -> Self {
        PolicyTable {
            logits: vec![[0.0, 0.0]; n_contexts],
            values: vec![0.0; n_contexts],
        }
    }

    pub fn n_contexts(&self) -> usize {
        self.logits.len()
    }

    /// Softmax over the two logits of `context`, returned as
    /// `(hawk_probability, dove_probability)`. The pair sums to 1 exactly up
    /// to one rounding.
    pub fn action_probabilities(&self, context: usize) -> Result<(f64, f64), LearnerError> {
        let [zh, zd] = *self
            .logits
            .get(context)
            .ok_or(LearnerError::ContextOutOfRange {
                context,
                n_contexts: self.n_contexts(),
            })?;
        // Two-action softmax via the logistic function; subtracting logits
        // keeps the exponent bounded on one side.
        let hawk_p = 1.0 / (1.0 + (zd - zh).exp());
        Ok((hawk_p, 1.0 - hawk_p))
    }

    /// Samples an action and returns it together with its probability at
    /// sampling time (needed later for the surrogate ratio).
    pub fn sample_action<R: Rng>(
        &self,
        context: usize,
        rng: &mut R,
    ) -> Result<(Action, f64), LearnerError> {
        let (hawk_p, dove_p) = self.action_probabilities(context)?;
        if rng.gen::<f64>() < hawk_p {
            Ok((Action::Hawk, hawk_p))
        } else {
            Ok((Action::Dove, dove_p))
        }
    }
}

/// Hyperparameters for the clipped-surrogate update.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PpoHyperparams {
    pub learning_rate: f64,
    pub clip_epsilon: f64,
    /// Stored for completeness; inert because every episode is a single round.
    pub discount_gamma: f64,
    pub episodes_per_generation: usize,
    pub update_epochs: usize,
    pub entropy_coefficient: f64,
    pub value_learning_rate: f64,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        PpoHyperparams {
            learning_rate: 0.1,
            clip_epsilon: 0.3,
            discount_gamma: 0.99,
            episodes_per_generation: 512,
            update_epochs: 10,
            entropy_coefficient: 0.0,
            value_learning_rate: 0.1,
        }
    }
}

impl PpoHyperparams {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.learning_rate <= 0.0 {
            return Err(LearnerError::InvalidArgument(
                "learning_rate must be positive".into(),
            ));
        }
        if self.clip_epsilon <= 0.0 {
            return Err(LearnerError::InvalidArgument(
                "clip_epsilon must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.discount_gamma) {
            return Err(LearnerError::InvalidArgument(
                "discount_gamma must lie in [0, 1]".into(),
            ));
        }
        if self.episodes_per_generation == 0 || self.update_epochs == 0 {
            return Err(LearnerError::InvalidArgument(
                "episodes_per_generation and update_epochs must be positive".into(),
            ));
        }
        if self.entropy_coefficient < 0.0 {
            return Err(LearnerError::InvalidArgument(
                "entropy_coefficient must be non-negative".into(),
            ));
        }
        if self.value_learning_rate <= 0.0 {
            return Err(LearnerError::InvalidArgument(
                "value_learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One round of experience from the acting agent's point of view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub context: usize,
    pub action: Action,
    pub reward: f64,
    pub old_action_probability: f64,
}

/// A policy plus its training mode. Frozen agents never change parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTrainState {
    pub policy: PolicyTable,
    pub frozen: bool,
}

impl AgentTrainState {
    pub fn new_zeroed(n_contexts: usize) -> Self {
        AgentTrainState {
            policy: PolicyTable::new_zeroed(n_contexts),
            frozen: false,
        }
    }
}

/// Single-round episodes make the advantage reward minus baseline.
pub fn compute_advantage(tr: &Transition, policy: &PolicyTable) -> f64 {
    tr.reward - policy.values[tr.context]
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub surrogate: f64,
    pub value_loss: f64,
    pub mean_abs_logit_change: f64,
}

fn action_column(a: Action) -> usize {
    match a {
        Action::Hawk => HAWK,
        Action::Dove => DOVE,
    }
}

/// Mean clipped surrogate plus entropy bonus over `batch`, evaluated at
/// `logits` with per-transition advantages fixed. Exposed separately so the
/// gradient can be checked against finite differences of this function.
pub fn surrogate_objective(
    logits: &[[f64; 2]],
    batch: &[Transition],
    advantages: &[f64],
    clip_epsilon: f64,
    entropy_coefficient: f64,
) -> f64 {
    let mut total = 0.0;
    for (tr, &adv) in batch.iter().zip(advantages) {
        let [zh, zd] = logits[tr.context];
        let hawk_p = 1.0 / (1.0 + (zd - zh).exp());
        let p = match tr.action {
            Action::Hawk => hawk_p,
            Action::Dove => 1.0 - hawk_p,
        };
        let ratio = p / tr.old_action_probability;
        let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
        total += (ratio * adv).min(clipped * adv);
        if entropy_coefficient != 0.0 {
            let dove_p = 1.0 - hawk_p;
            let entropy = -(hawk_p * hawk_p.ln() + dove_p * dove_p.ln());
            total += entropy_coefficient * entropy;
        }
    }
    total / batch.len() as f64
}

/// Analytic gradient of [`surrogate_objective`] with respect to the logits.
pub fn surrogate_gradient(
    logits: &[[f64; 2]],
    batch: &[Transition],
    advantages: &[f64],
    clip_epsilon: f64,
    entropy_coefficient: f64,
) -> Vec<[f64; 2]> {
    let mut grad = vec![[0.0, 0.0]; logits.len()];
    let scale = 1.0 / batch.len() as f64;
    for (tr, &adv) in batch.iter().zip(advantages) {
        let [zh, zd] = logits[tr.context];
        let hawk_p = 1.0 / (1.0 + (zd - zh).exp());
        let dove_p = 1.0 - hawk_p;
        let (p_taken, p_other) = match tr.action {
            Action::Hawk => (hawk_p, dove_p),
            Action::Dove => (dove_p, hawk_p),
        };
        let ratio = p_taken / tr.old_action_probability;
        // The clipped min passes gradient through the ratio unless the ratio
        // sits strictly beyond the clip boundary on the profitable side.
        let active = !((ratio > 1.0 + clip_epsilon && adv > 0.0)
            || (ratio < 1.0 - clip_epsilon && adv < 0.0));
        if active {
            // d(ratio)/dz_taken = ratio * p_other, d/dz_other = -ratio * p_other.
            let g = adv * ratio * p_other * scale;
            let taken = action_column(tr.action);
            grad[tr.context][taken] += g;
            grad[tr.context][1 - taken] -= g;
        }
        if entropy_coefficient != 0.0 {
            // dH/dz_hawk = p*q*ln(q/p), and the opposite for z_dove.
            let gh = hawk_p * dove_p * (dove_p.ln() - hawk_p.ln());
            grad[tr.context][HAWK] += entropy_coefficient * gh * scale;
            grad[tr.context][DOVE] -= entropy_coefficient * gh * scale;
        }
    }
    grad
}

/// Runs `update_epochs` full-batch gradient-ascent steps on the clipped
/// surrogate and gradient-descent steps on the squared baseline error.
/// Advantages are computed once from the incoming baseline and held fixed.
/// Frozen agents are left untouched.
pub fn ppo_update(
    state: &mut AgentTrainState,
    batch: &[Transition],
    hyper: &PpoHyperparams,
) -> Result<UpdateStats, LearnerError> {
    if state.frozen {
        return Ok(UpdateStats::default());
    }
    if batch.is_empty() {
        return Err(LearnerError::InvalidArgument(
            "empty transition batch for a non-frozen agent".into(),
        ));
    }
    hyper.validate()?;
    let n_contexts = state.policy.n_contexts();
    for tr in batch {
        if tr.context >= n_contexts {
            return Err(LearnerError::ContextOutOfRange {
                context: tr.context,
                n_contexts,
            });
        }
        if tr.old_action_probability <= 0.0 {
            return Err(LearnerError::InvalidArgument(
                "old_action_probability must be positive".into(),
            ));
        }
    }

    let advantages: Vec<f64> = batch
        .iter()
        .map(|tr| compute_advantage(tr, &state.policy))
        .collect();
    let initial_logits = state.policy.logits.clone();
    let scale = 1.0 / batch.len() as f64;

    for _ in 0..hyper.update_epochs {
        let grad = surrogate_gradient(
            &state.policy.logits,
            batch,
            &advantages,
            hyper.clip_epsilon,
            hyper.entropy_coefficient,
        );
        for (row, g) in state.policy.logits.iter_mut().zip(&grad) {
            row[0] += hyper.learning_rate * g[0];
            row[1] += hyper.learning_rate * g[1];
        }
        // Descent on mean squared baseline error.
        let mut vgrad = vec![0.0; n_contexts];
        for tr in batch {
            vgrad[tr.context] += 2.0 * (state.policy.values[tr.context] - tr.reward) * scale;
        }
        for (v, g) in state.policy.values.iter_mut().zip(&vgrad) {
            *v -= hyper.value_learning_rate * g;
        }
    }

    let surrogate = surrogate_objective(
        &state.policy.logits,
        batch,
        &advantages,
        hyper.clip_epsilon,
        hyper.entropy_coefficient,
    );
    let value_loss = batch
        .iter()
        .map(|tr| {
            let d = tr.reward - state.policy.values[tr.context];
            d * d
        })
        .sum::<f64>()
        * scale;
    let mean_abs_logit_change = state
        .policy
        .logits
        .iter()
        .zip(&initial_logits)
        .map(|(a, b)| (a[0] - b[0]).abs() + (a[1] - b[1]).abs())
        .sum::<f64>()
        / (2.0 * n_contexts as f64);

    Ok(UpdateStats {
        surrogate,
        value_loss,
        mean_abs_logit_change,
    })
}

/// Plays one generation of episodes with the current (fixed) policies, then
/// applies one clipped-surrogate update per non-frozen agent from its own
/// transitions. Returns the full episode log for metric computation.
pub fn train_generation<R: Rng>(
    population: &mut [AgentTrainState],
    config: &CoopConfig,
    hyper: &PpoHyperparams,
    rng: &mut R,
) -> Result<(Vec<EpisodeRecord>, Vec<UpdateStats>), LearnerError> {
    config
        .validate()
        .map_err(|e| LearnerError::InvalidArgument(e.to_string()))?;
    hyper.validate()?;
    let n = config.n_agents;
    if population.len() != n {
        return Err(LearnerError::InvalidArgument(format!(
            "population size {} does not match n_agents {}",
            population.len(),
            n
        )));
    }

    // Policies are fixed for the whole generation; actions and the recorded
    // old probabilities both come from this copy.
    let policies: Vec<PolicyTable> = population.iter().map(|s| s.policy.clone()).collect();

    let mut episodes = Vec::with_capacity(hyper.episodes_per_generation);
    let mut batches: Vec<Vec<Transition>> = vec![Vec::new(); n];
    for episode_id in 0..hyper.episodes_per_generation {
        let ep = play_episode(&policies, config, episode_id as u64, rng)
            .map_err(|e| LearnerError::InvalidArgument(e.to_string()))?;
        for i in 0..n {
            let context = ep.observed_opponent[i];
            let (hawk_p, dove_p) = policies[i].action_probabilities(context)?;
            let old_action_probability = match ep.action[i] {
                Action::Hawk => hawk_p,
                Action::Dove => dove_p,
            };
            batches[i].push(Transition {
                context,
                action: ep.action[i],
                reward: ep.reward[i],
                old_action_probability,
            });
        }
        episodes.push(ep);
    }

    let mut stats = Vec::with_capacity(n);
    for (state, batch) in population.iter_mut().zip(&batches) {
        stats.push(ppo_update(state, batch, hyper)?);
    }
    Ok((episodes, stats))
}

/// On-disk policy snapshot. Field names are part of the CLI's file contract.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySnapshot {
    format_version: u32,
    n_contexts: usize,
    /// Row-major `[hawk, dove]` logits, `2 * n_contexts` entries.
    logits: Vec<f64>,
    values: Vec<f64>,
    frozen: bool,
}

/// Serializes a policy to the structured text snapshot format. The encoding
/// round-trips f64 values exactly.
pub fn snapshot(state: &AgentTrainState) -> String {
    let snap = PolicySnapshot {
        format_version: SNAPSHOT_FORMAT_VERSION,
        n_contexts: state.policy.n_contexts(),
        logits: state.policy.logits.iter().flatten().copied().collect(),
        values: state.policy.values.clone(),
        frozen: state.frozen,
    };
    serde_json::to_string_pretty(&snap).expect("snapshot serialization cannot fail")
}

/// Decodes a snapshot produced by [`snapshot`]. Malformed input yields a
/// decode error and no partial state.
pub fn restore(text: &str) -> Result<AgentTrainState, LearnerError> {
    let snap: PolicySnapshot =
        serde_json::from_str(text).map_err(|e| LearnerError::Decode(e.to_string()))?;
    if snap.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(LearnerError::Decode(format!(
            "unsupported snapshot format version {}",
            snap.format_version
        )));
    }
    if snap.logits.len() != 2 * snap.n_contexts || snap.values.len() != snap.n_contexts {
        return Err(LearnerError::Decode(format!(
            "inconsistent snapshot shapes: n_contexts={}, logits={}, values={}",
            snap.n_contexts,
            snap.logits.len(),
            snap.values.len()
        )));
    }
    if !snap.logits.iter().chain(&snap.values).all(|x| x.is_finite()) {
        return Err(LearnerError::Decode("non-finite parameter".into()));
    }
    let logits = snap.logits.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
    Ok(AgentTrainState {
        policy: PolicyTable {
            logits,
            values: snap.values,
        },
        frozen: snap.frozen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::RewardConstants;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn equal_logits_give_uniform_probabilities() {
        let p = PolicyTable::new_zeroed(4);
        assert_eq!(p.action_probabilities(2).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn softmax_closed_form() {
        let mut p = PolicyTable::new_zeroed(1);
        p.logits[0] = [2.0, 0.0];
        let (h, d) = p.action_probabilities(0).unwrap();
        let e2 = 2.0_f64.exp();
        assert!((h - e2 / (e2 + 1.0)).abs() < 1e-15);
        assert!((d - 1.0 / (e2 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut a = PolicyTable::new_zeroed(1);
        a.logits[0] = [5.0, 0.0];
        let mut b = PolicyTable::new_zeroed(1);
        b.logits[0] = [5.0 + 17.25, 17.25];
        assert_eq!(
            a.action_probabilities(0).unwrap(),
            b.action_probabilities(0).unwrap()
        );
    }

    #[test]
    fn out_of_range_context_is_error() {
        let p = PolicyTable::new_zeroed(3);
        assert!(matches!(
            p.action_probabilities(3),
            Err(LearnerError::ContextOutOfRange { .. })
        ));
        assert!(p.sample_action(7, &mut rng(0)).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one_and_are_open(zh in -15.0..15.0f64, zd in -15.0..15.0f64) {
            let mut p = PolicyTable::new_zeroed(1);
            p.logits[0] = [zh, zd];
            let (h, d) = p.action_probabilities(0).unwrap();
            prop_assert!(h > 0.0 && h < 1.0);
            prop_assert!(d > 0.0 && d < 1.0);
            prop_assert!((h + d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_policy_samples_hawk() {
        let mut p = PolicyTable::new_zeroed(1);
        p.logits[0] = [30.0, -30.0];
        let mut r = rng(1);
        let hawks = (0..100_000)
            .filter(|_| p.sample_action(0, &mut r).unwrap().0 == Action::Hawk)
            .count();
        assert!(hawks as f64 / 100_000.0 > 0.9999);
    }

    #[test]
    fn uniform_policy_samples_half_hawk() {
        let p = PolicyTable::new_zeroed(1);
        let mut r = rng(2);
        let draws = 100_000usize;
        let hawks = (0..draws)
            .filter(|_| p.sample_action(0, &mut r).unwrap().0 == Action::Hawk)
            .count();
        let sigma = (draws as f64 * 0.25).sqrt();
        assert!((hawks as f64 - draws as f64 * 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = PolicyTable::new_zeroed(1);
        let seq1: Vec<_> = {
            let mut r = rng(3);
            (0..50).map(|_| p.sample_action(0, &mut r).unwrap()).collect()
        };
        let seq2: Vec<_> = {
            let mut r = rng(3);
            (0..50).map(|_| p.sample_action(0, &mut r).unwrap()).collect()
        };
        assert_eq!(seq1, seq2);
    }

    #[test]
    fn advantage_is_reward_minus_baseline() {
        let mut p = PolicyTable::new_zeroed(2);
        p.values[1] = -10.0;
        let tr = Transition {
            context: 0,
            action: Action::Hawk,
            reward: 5.0,
            old_action_probability: 0.5,
        };
        assert_eq!(compute_advantage(&tr, &p), 5.0);
        let tr2 = Transition {
            context: 1,
            action: Action::Dove,
            reward: -10.0,
            old_action_probability: 0.5,
        };
        assert_eq!(compute_advantage(&tr2, &p), 0.0);
    }

    #[test]
    fn zero_advantage_batch_leaves_logits_unchanged() {
        let mut state = AgentTrainState::new_zeroed(3);
        state.policy.values = vec![5.0, 5.0, 5.0];
        let before = state.policy.logits.clone();
        let batch: Vec<Transition> = (0..10)
            .map(|i| Transition {
                context: i % 3,
                action: if i % 2 == 0 { Action::Hawk } else { Action::Dove },
                reward: 5.0,
                old_action_probability: 0.5,
            })
            .collect();
        ppo_update(&mut state, &batch, &PpoHyperparams::default()).unwrap();
        assert_eq!(state.policy.logits, before);
    }

    #[test]
    fn positive_advantage_increases_hawk_probability() {
        let mut state = AgentTrainState::new_zeroed(2);
        let batch = [Transition {
            context: 1,
            action: Action::Hawk,
            reward: 5.0,
            old_action_probability: 0.5,
        }];
        let hyper = PpoHyperparams {
            update_epochs: 1,
            ..Default::default()
        };
        let before = state.policy.action_probabilities(1).unwrap().0;
        ppo_update(&mut state, &batch, &hyper).unwrap();
        let after = state.policy.action_probabilities(1).unwrap().0;
        assert!(after > before);
    }

    #[test]
    fn frozen_agent_never_changes() {
        let mut state = AgentTrainState::new_zeroed(2);
        state.frozen = true;
        let before = state.clone();
        let batch = [Transition {
            context: 0,
            action: Action::Hawk,
            reward: 5.0,
            old_action_probability: 0.5,
        }];
        ppo_update(&mut state, &batch, &PpoHyperparams::default()).unwrap();
        assert_eq!(state, before);
        // Empty batch is fine for a frozen agent.
        ppo_update(&mut state, &[], &PpoHyperparams::default()).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn empty_batch_on_trainable_agent_is_error() {
        let mut state = AgentTrainState::new_zeroed(2);
        assert!(ppo_update(&mut state, &[], &PpoHyperparams::default()).is_err());
    }

    /// With one freshly-sampled transition (ratio 1) and no clipping, one
    /// epoch must reduce to vanilla policy gradient on A * log pi.
    #[test]
    fn single_step_reduces_to_vanilla_policy_gradient() {
        let mut r = rng(4);
        for _ in 0..50 {
            let mut state = AgentTrainState::new_zeroed(1);
            state.policy.logits[0] = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
            let (hawk_p, dove_p) = state.policy.action_probabilities(0).unwrap();
            let action = if r.gen::<bool>() { Action::Hawk } else { Action::Dove };
            let (p_taken, p_other) = match action {
                Action::Hawk => (hawk_p, dove_p),
                Action::Dove => (dove_p, hawk_p),
            };
            let reward = r.gen_range(-10.0..5.0);
            let batch = [Transition {
                context: 0,
                action,
                reward,
                old_action_probability: p_taken,
            }];
            let hyper = PpoHyperparams {
                clip_epsilon: 1e9,
                update_epochs: 1,
                ..Default::default()
            };
            let before = state.policy.logits[0];
            ppo_update(&mut state, &batch, &hyper).unwrap();
            let after = state.policy.logits[0];
            // Vanilla PG: delta z_taken = lr * A * (1 - p_taken).
            let adv = reward; // zero baseline
            let expect = hyper.learning_rate * adv * p_other;
            let taken = action_column(action);
            let got = after[taken] - before[taken];
            assert!(
                (got - expect).abs() <= 1e-8 * expect.abs().max(1e-12),
                "delta {got} vs vanilla {expect}"
            );
            assert!((after[1 - taken] - before[1 - taken] + expect).abs() <= 1e-8 * expect.abs().max(1e-12));
        }
    }

    fn coop_config(n: usize) -> CoopConfig {
        CoopConfig {
            n_agents: n,
            opa: 1.0,
            rewards: RewardConstants::default(),
            rng_seed: 0,
        }
    }

    #[test]
    fn generation_gives_each_agent_one_transition_per_episode() {
        let mut population: Vec<_> = (0..6).map(|_| AgentTrainState::new_zeroed(6)).collect();
        let hyper = PpoHyperparams {
            episodes_per_generation: 512,
            ..Default::default()
        };
        let (episodes, stats) =
            train_generation(&mut population, &coop_config(6), &hyper, &mut rng(5)).unwrap();
        assert_eq!(episodes.len(), 512);
        assert_eq!(stats.len(), 6);
    }

    #[test]
    fn all_frozen_generation_changes_nothing() {
        let mut population: Vec<_> = (0..4)
            .map(|_| {
                let mut s = AgentTrainState::new_zeroed(4);
                s.frozen = true;
                s
            })
            .collect();
        let before = population.clone();
        let hyper = PpoHyperparams {
            episodes_per_generation: 32,
            ..Default::default()
        };
        let (episodes, _) =
            train_generation(&mut population, &coop_config(4), &hyper, &mut rng(6)).unwrap();
        assert_eq!(episodes.len(), 32);
        assert_eq!(population, before);
    }

    #[test]
    fn generation_is_deterministic_under_seed() {
        let hyper = PpoHyperparams {
            episodes_per_generation: 64,
            ..Default::default()
        };
        let run = |seed: u64| {
            let mut population: Vec<_> = (0..4).map(|_| AgentTrainState::new_zeroed(4)).collect();
            let (eps, _) =
                train_generation(&mut population, &coop_config(4), &hyper, &mut rng(seed)).unwrap();
            (eps, population)
        };
        let (e1, p1) = run(7);
        let (e2, p2) = run(7);
        assert_eq!(e1, e2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mut state = AgentTrainState::new_zeroed(3);
        let mut r = rng(8);
        for row in &mut state.policy.logits {
            row[0] = r.gen_range(-5.0..5.0);
            row[1] = r.gen_range(-5.0..5.0);
        }
        for v in &mut state.policy.values {
            *v = r.gen_range(-10.0..10.0);
        }
        state.frozen = true;
        let restored = restore(&snapshot(&state)).unwrap();
        assert_eq!(restored, state);
    }

    #[test]
    fn snapshot_of_fresh_state_is_all_zero() {
        let state = AgentTrainState::new_zeroed(2);
        let restored = restore(&snapshot(&state)).unwrap();
        assert!(restored.policy.logits.iter().flatten().all(|&x| x == 0.0));
        assert!(restored.policy.values.iter().all(|&x| x == 0.0));
        assert!(!restored.frozen);
    }

    #[test]
    fn corrupted_snapshot_is_decode_error() {
        let state = AgentTrainState::new_zeroed(2);
        let text = snapshot(&state);
        assert!(restore(&text[..text.len() / 2]).is_err());
        assert!(restore("{}").is_err());
        let wrong_shape = text.replace("\"n_contexts\": 2", "\"n_contexts\": 3");
        assert!(restore(&wrong_shape).is_err());
    }
}
