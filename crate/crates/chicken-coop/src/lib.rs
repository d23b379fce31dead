//! Chicken Coop: an N-player Chicken environment in which independent
//! policy-gradient agents invent, enforce and transmit dominance hierarchies.
//!
//! - [`game`]: payoff matrix and episode mechanics
//! - [`learner`]: tabular clipped-surrogate policy learning
//! - [`metrics`]: dominance statistics and tournament analysis
//! - [`experiments`]: emergence, ablation and transmission runs
//! - [`cli`]: command implementations and file formats

pub mod cli;
pub mod experiments;
pub mod game;
pub mod learner;
pub mod metrics;
