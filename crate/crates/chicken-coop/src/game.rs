//! The Chicken payoff matrix and the N-player Chicken Coop episode mechanics:
//! uniform random pairing, opponent observation (with optional perception
//! noise), simultaneous action resolution and reward assignment.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::PolicyTable;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The two moves available in a round of Chicken. `Hawk` is the aggressive
/// action; a hawk/dove outcome is one of the game's two pure Nash equilibria.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Hash, Serialize, Deserialize)]
pub enum Action {
    Hawk,
    Dove,
}

/// The four Chicken payoffs. A valid set satisfies `T > R > S > P`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConstants {
    pub t_reward: f64,
    pub r_reward: f64,
    pub s_reward: f64,
    pub p_reward: f64,
}

impl RewardConstants {
    pub fn new(t: f64, r: f64, s: f64, p: f64) -> Result<Self, GameError> {
        let c = RewardConstants {
            t_reward: t,
            r_reward: r,
            s_reward: s,
            p_reward: p,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.t_reward > self.r_reward
            && self.r_reward > self.s_reward
            && self.s_reward > self.p_reward)
        {
            return Err(GameError::InvalidConfig(format!(
                "reward constants must satisfy T > R > S > P, got T={} R={} S={} P={}",
                self.t_reward, self.r_reward, self.s_reward, self.p_reward
            )));
        }
        Ok(())
    }
}

impl Default for RewardConstants {
    /// T = 5, R = 0, S = -2, P = -10.
    fn default() -> Self {
        RewardConstants {
            t_reward: 5.0,
            r_reward: 0.0,
            s_reward: -2.0,
            p_reward: -10.0,
        }
    }
}

/// Row-player and column-player rewards for one round of Chicken.
pub fn payoff(a: Action, b: Action, c: &RewardConstants) -> (f64, f64) {
    match (a, b) {
        (Action::Dove, Action::Dove) => (c.r_reward, c.r_reward),
        (Action::Dove, Action::Hawk) => (c.s_reward, c.t_reward),
        (Action::Hawk, Action::Dove) => (c.t_reward, c.s_reward),
        (Action::Hawk, Action::Hawk) => (c.p_reward, c.p_reward),
    }
}

/// Static parameters of one Chicken Coop population.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoopConfig {
    /// Population size; must be even so every agent gets paired.
    pub n_agents: usize,
    /// Opponent perception accuracy: probability that an observation is left
    /// unperturbed. With probability `1 - opa` the observed index is replaced
    /// by a uniform draw over all `n_agents` indices.
    pub opa: f64,
    pub rewards: RewardConstants,
    pub rng_seed: u64,
}

impl CoopConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if self.n_agents < 2 || self.n_agents % 2 != 0 {
            return Err(GameError::InvalidConfig(format!(
                "n_agents must be even and >= 2, got {}",
                self.n_agents
            )));
        }
        if !(0.0..=1.0).contains(&self.opa) {
            return Err(GameError::InvalidConfig(format!(
                "opa must lie in [0, 1], got {}",
                self.opa
            )));
        }
        self.rewards.validate()
    }
}

/// A perfect matching on the agent indices `{0, .., n_agents - 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Opponent lookup table: entry `i` is the index paired with agent `i`.
    pub fn opponents(&self) -> Vec<usize> {
        let n = self.pairs.len() * 2;
        let mut opp = vec![usize::MAX; n];
        for &(a, b) in &self.pairs {
            opp[a] = b;
            opp[b] = a;
        }
        opp
    }
}

/// Draws a uniformly random perfect matching by shuffling the index list and
/// pairing adjacent positions. Every matching corresponds to exactly
/// `2^(n/2) * (n/2)!` permutations, so the induced distribution is uniform.
pub fn sample_pairing<R: Rng>(n_agents: usize, rng: &mut R) -> Result<Pairing, GameError> {
    if n_agents < 2 || n_agents % 2 != 0 {
        return Err(GameError::InvalidConfig(format!(
            "n_agents must be even and >= 2, got {n_agents}"
        )));
    }
    let mut order: Vec<usize> = (0..n_agents).collect();
    order.shuffle(rng);
    let pairs = order.chunks_exact(2).map(|c| (c[0], c[1])).collect();
    Ok(Pairing { pairs })
}

/// Applies perception noise to a true opponent index: with probability `opa`
/// the index passes through, otherwise it is replaced by a uniform draw over
/// all indices (which may coincide with the true opponent or the observer).
pub fn observe_opponent<R: Rng>(
    true_idx: usize,
    opa: f64,
    n_agents: usize,
    rng: &mut R,
) -> usize {
    if rng.gen::<f64>() < opa {
        true_idx
    } else {
        rng.gen_range(0..n_agents)
    }
}

/// Everything that happened in one Chicken Coop episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_id: u64,
    pub pairing: Pairing,
    pub true_opponent: Vec<usize>,
    pub observed_opponent: Vec<usize>,
    pub action: Vec<Action>,
    pub reward: Vec<f64>,
}

/// Plays one episode: samples a pairing, produces each agent's (possibly
/// noisy) observation, samples each agent's action conditioned on what it
/// observed, and assigns payoffs from the true pairing.
pub fn play_episode<R: Rng>(
    policies: &[PolicyTable],
    config: &CoopConfig,
    episode_id: u64,
    rng: &mut R,
) -> Result<EpisodeRecord, GameError> {
    config.validate()?;
    let n = config.n_agents;
    if policies.len() != n {
        return Err(GameError::InvalidConfig(format!(
            "expected {} policies, got {}",
            n,
            policies.len()
        )));
    }

    let pairing = sample_pairing(n, rng)?;
    let true_opponent = pairing.opponents();

    let observed_opponent: Vec<usize> = true_opponent
        .iter()
        .map(|&t| observe_opponent(t, config.opa, n, rng))
        .collect();

    let mut action = Vec::with_capacity(n);
    for (i, policy) in policies.iter().enumerate() {
        let (a, _prob) = policy
            .sample_action(observed_opponent[i], rng)
            .map_err(|e| GameError::InvalidConfig(e.to_string()))?;
        action.push(a);
    }

    let mut reward = vec![0.0; n];
    for &(a, b) in &pairing.pairs {
        let (ra, rb) = payoff(action[a], action[b], &config.rewards);
        reward[a] = ra;
        reward[b] = rb;
    }

    Ok(EpisodeRecord {
        episode_id,
        pairing,
        true_opponent,
        observed_opponent,
        action,
        reward,
    })
}
