//! Dominance statistics over episode logs: aggressiveness, rapport, pairwise
//! dominance relations, tournament construction, transitivity and
//! condensation analysis, rank linearity and the hierarchy distance family
//! (DHD, RDHD, DHTF).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Action, EpisodeRecord};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Hawk/meeting counts over a measurement window. `hawk_count(i, j)` counts
/// the rounds in which `i` faced `j` and played hawk; `meet_count` is
/// symmetric and the diagonals are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionLog {
    n_agents: usize,
    hawk_count: Vec<u64>,
    meet_count: Vec<u64>,
}

impl InteractionLog {
    pub fn new(n_agents: usize) -> Self {
        InteractionLog {
            n_agents,
            hawk_count: vec![0; n_agents * n_agents],
            meet_count: vec![0; n_agents * n_agents],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_agents && j < self.n_agents);
        i * self.n_agents + j
    }

    pub fn hawk_count(&self, i: usize, j: usize) -> u64 {
        self.hawk_count[self.idx(i, j)]
    }

    pub fn meet_count(&self, i: usize, j: usize) -> u64 {
        self.meet_count[self.idx(i, j)]
    }

    /// Records one round between `i` and `j` with their respective actions.
    pub fn record_round(&mut self, i: usize, j: usize, action_i: Action, action_j: Action) {
        assert_ne!(i, j, "an agent cannot meet itself");
        let ij = self.idx(i, j);
        let ji = self.idx(j, i);
        self.meet_count[ij] += 1;
        self.meet_count[ji] += 1;
        if action_i == Action::Hawk {
            self.hawk_count[ij] += 1;
        }
        if action_j == Action::Hawk {
            self.hawk_count[ji] += 1;
        }
    }

    pub fn from_episodes(episodes: &[EpisodeRecord], n_agents: usize) -> Self {
        let mut log = InteractionLog::new(n_agents);
        for ep in episodes {
            for &(a, b) in &ep.pairing.pairs {
                log.record_round(a, b, ep.action[a], ep.action[b]);
            }
        }
        log
    }
}

/// Fraction of agent `i`'s rounds against `opponents` in which it played hawk.
/// A window with no meetings is an error, not zero.
pub fn aggressiveness(
    log: &InteractionLog,
    i: usize,
    opponents: &[usize],
) -> Result<f64, MetricError> {
    let mut hawks = 0u64;
    let mut meets = 0u64;
    for &j in opponents {
        if j == i {
            continue;
        }
        hawks += log.hawk_count(i, j);
        meets += log.meet_count(i, j);
    }
    if meets == 0 {
        return Err(MetricError::UndefinedMetric(format!(
            "agent {i} has no meetings in the requested window"
        )));
    }
    Ok(hawks as f64 / meets as f64)
}

/// Aggressiveness of `i` over all its opponents.
pub fn overall_aggressiveness(log: &InteractionLog, i: usize) -> Result<f64, MetricError> {
    let all: Vec<usize> = (0..log.n_agents()).filter(|&j| j != i).collect();
    aggressiveness(log, i, &all)
}

/// Absolute aggressiveness gap between `i` and `j`, both measured on the
/// rounds the two played against each other.
pub fn rapport(log: &InteractionLog, i: usize, j: usize) -> Result<f64, MetricError> {
    let meets = log.meet_count(i, j);
    if meets == 0 {
        return Err(MetricError::UndefinedMetric(format!(
            "agents {i} and {j} never met in the window"
        )));
    }
    let gi = log.hawk_count(i, j) as f64 / meets as f64;
    let gj = log.hawk_count(j, i) as f64 / meets as f64;
    Ok((gi - gj).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominanceRelation {
    FirstDominates,
    SecondDominates,
    NoRelation,
}

/// Compares the pair-window aggressiveness gap against the threshold `eta`.
/// The inequality is strict: a gap exactly equal to `eta` is no relation.
pub fn dominance_relation(
    log: &InteractionLog,
    i: usize,
    j: usize,
    eta: f64,
) -> Result<DominanceRelation, MetricError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(MetricError::InvalidArgument(format!(
            "eta must lie in (0, 1], got {eta}"
        )));
    }
    let meets = log.meet_count(i, j);
    if meets == 0 {
        return Err(MetricError::UndefinedMetric(format!(
            "agents {i} and {j} never met in the window"
        )));
    }
    // Single division of exact counts so the comparison against eta is as
    // sharp as f64 permits.
    let diff = (log.hawk_count(i, j) as f64 - log.hawk_count(j, i) as f64) / meets as f64;
    if diff > eta {
        Ok(DominanceRelation::FirstDominates)
    } else if -diff > eta {
        Ok(DominanceRelation::SecondDominates)
    } else {
        Ok(DominanceRelation::NoRelation)
    }
}

/// A (possibly partial) tournament of dominance relations. Edge `(d, s)`
/// means `d` dominates `s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceDigraph {
    n_agents: usize,
    edges: BTreeSet<(usize, usize)>,
    complete: bool,
}

impl DominanceDigraph {
    pub fn from_edges<I>(n_agents: usize, edges: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (d, s) in edges {
            if d >= n_agents || s >= n_agents || d == s {
                return Err(MetricError::InvalidArgument(format!(
                    "edge ({d}, {s}) invalid for {n_agents} agents"
                )));
            }
            if set.contains(&(s, d)) {
                return Err(MetricError::InvalidArgument(format!(
                    "edges ({d}, {s}) and ({s}, {d}) both present"
                )));
            }
            set.insert((d, s));
        }
        let complete = set.len() == n_agents * (n_agents - 1) / 2;
        Ok(DominanceDigraph {
            n_agents,
            edges: set,
            complete,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn has_edge(&self, d: usize, s: usize) -> bool {
        self.edges.contains(&(d, s))
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(d, _)| d == i).count()
    }
}

/// Builds the dominance digraph from a log, requiring every pair to have met.
/// Pairs whose gap stays below the threshold leave the tournament incomplete.
pub fn build_hierarchy(log: &InteractionLog, eta: f64) -> Result<DominanceDigraph, MetricError> {
    let n = log.n_agents();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if log.meet_count(i, j) == 0 {
                return Err(MetricError::UndefinedMetric(format!(
                    "pair ({i}, {j}) never met in the window"
                )));
            }
            match dominance_relation(log, i, j, eta)? {
                DominanceRelation::FirstDominates => edges.push((i, j)),
                DominanceRelation::SecondDominates => edges.push((j, i)),
                DominanceRelation::NoRelation => {}
            }
        }
    }
    DominanceDigraph::from_edges(n, edges)
}

/// Like [`build_hierarchy`] but tolerant of unmet pairs, for per-generation
/// snapshots taken before every pair has interacted.
pub fn build_hierarchy_partial(log: &InteractionLog, eta: f64) -> DominanceDigraph {
    let n = log.n_agents();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            match dominance_relation(log, i, j, eta) {
                Ok(DominanceRelation::FirstDominates) => edges.push((i, j)),
                Ok(DominanceRelation::SecondDominates) => edges.push((j, i)),
                _ => {}
            }
        }
    }
    DominanceDigraph::from_edges(n, edges).expect("pairwise relations form a valid digraph")
}

/// A complete tournament is transitive iff its out-degree sequence is a
/// permutation of `{0, .., n-1}`.
pub fn is_transitive(h: &DominanceDigraph) -> Result<bool, MetricError> {
    if !h.is_complete() {
        return Err(MetricError::InvalidArgument(
            "transitivity requires a complete tournament".into(),
        ));
    }
    let n = h.n_agents();
    let mut scores: Vec<usize> = (0..n).map(|i| h.out_degree(i)).collect();
    scores.sort_unstable();
    Ok(scores.iter().enumerate().all(|(rank, &s)| s == rank))
}

/// Condensation components of a complete tournament, ordered from most to
/// least dominant. Multi-agent blocks are dominance cycles occupying a
/// contiguous tied rank interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankAssignment {
    /// Each block's agent indices, sorted; blocks ordered top to bottom.
    pub blocks: Vec<Vec<usize>>,
    /// Per agent: the inclusive rank interval `(start, end)` of its block.
    pub rank_of: Vec<(usize, usize)>,
}

impl RankAssignment {
    /// True when the given rank falls inside a singleton block.
    pub fn is_rank_linear(&self, rank: usize) -> bool {
        let mut start = 0;
        for block in &self.blocks {
            let end = start + block.len() - 1;
            if rank >= start && rank <= end {
                return block.len() == 1;
            }
            start = end + 1;
        }
        false
    }
}

fn tarjan_scc(n: usize, h: &DominanceDigraph) -> Vec<Vec<usize>> {
    struct State {
        index: usize,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        idx: Vec<Option<usize>>,
        low: Vec<usize>,
        comps: Vec<Vec<usize>>,
    }

    fn connect(v: usize, adj: &[Vec<usize>], st: &mut State) {
        st.idx[v] = Some(st.index);
        st.low[v] = st.index;
        st.index += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &adj[v] {
            if st.idx[w].is_none() {
                connect(w, adj, st);
                st.low[v] = st.low[v].min(st.low[w]);
            } else if st.on_stack[w] {
                st.low[v] = st.low[v].min(st.idx[w].unwrap());
            }
        }
        if st.low[v] == st.idx[v].unwrap() {
            let mut comp = Vec::new();
            loop {
                let w = st.stack.pop().expect("stack underflow");
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            st.comps.push(comp);
        }
    }

    let mut adj = vec![Vec::new(); n];
    for &(d, s) in h.edges() {
        adj[d].push(s);
    }
    let mut st = State {
        index: 0,
        stack: Vec::new(),
        on_stack: vec![false; n],
        idx: vec![None; n],
        low: vec![0; n],
        comps: Vec::new(),
    };
    for v in 0..n {
        if st.idx[v].is_none() {
            connect(v, &adj, &mut st);
        }
    }
    st.comps
}

/// Strongly-connected-component condensation of a complete tournament. The
/// condensation of a tournament is always a total order.
pub fn condense(h: &DominanceDigraph) -> Result<RankAssignment, MetricError> {
    if !h.is_complete() {
        return Err(MetricError::InvalidArgument(
            "condensation requires a complete tournament".into(),
        ));
    }
    let n = h.n_agents();
    let mut blocks = tarjan_scc(n, h);
    // Between two distinct SCCs of a tournament all edges point one way, so a
    // representative pair decides the order.
    blocks.sort_by(|a, b| {
        if h.has_edge(a[0], b[0]) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    for block in &mut blocks {
        block.sort_unstable();
    }
    // Sanity: earlier blocks beat later blocks edge by edge.
    for (bi, upper) in blocks.iter().enumerate() {
        for lower in &blocks[bi + 1..] {
            for &d in upper {
                for &s in lower {
                    if !h.has_edge(d, s) {
                        return Err(MetricError::InvalidArgument(format!(
                            "condensation order violated by edge ({s}, {d})"
                        )));
                    }
                }
            }
        }
    }
    let mut rank_of = vec![(0, 0); n];
    let mut start = 0;
    for block in &blocks {
        let end = start + block.len() - 1;
        for &agent in block {
            rank_of[agent] = (start, end);
        }
        start = end + 1;
    }
    Ok(RankAssignment { blocks, rank_of })
}

/// Fraction of the hierarchies in which `rank` is occupied by a single agent.
pub fn rank_linearity(
    hierarchies: &[DominanceDigraph],
    rank: usize,
) -> Result<f64, MetricError> {
    if hierarchies.is_empty() {
        return Err(MetricError::InvalidArgument(
            "rank linearity over an empty hierarchy list".into(),
        ));
    }
    let n = hierarchies[0].n_agents();
    if rank >= n {
        return Err(MetricError::InvalidArgument(format!(
            "rank {rank} out of range for {n} agents"
        )));
    }
    let mut linear = 0usize;
    for h in hierarchies {
        if h.n_agents() != n {
            return Err(MetricError::InvalidArgument(
                "hierarchies must share the same population size".into(),
            ));
        }
        if condense(h)?.is_rank_linear(rank) {
            linear += 1;
        }
    }
    Ok(linear as f64 / hierarchies.len() as f64)
}

fn require_comparable(h: &DominanceDigraph, h2: &DominanceDigraph) -> Result<(), MetricError> {
    if h.n_agents() != h2.n_agents() {
        return Err(MetricError::InvalidArgument(format!(
            "mismatched population sizes {} and {}",
            h.n_agents(),
            h2.n_agents()
        )));
    }
    if !h.is_complete() || !h2.is_complete() {
        return Err(MetricError::InvalidArgument(
            "hierarchy distance requires complete tournaments".into(),
        ));
    }
    Ok(())
}

/// Dominance hierarchy distance: the fraction of pairwise relations whose
/// polarity differs between the two tournaments.
pub fn dhd(h: &DominanceDigraph, h2: &DominanceDigraph) -> Result<f64, MetricError> {
    require_comparable(h, h2)?;
    let n = h.n_agents();
    let shared = h.edges().intersection(h2.edges()).count();
    Ok(1.0 - 2.0 * shared as f64 / (n * (n - 1)) as f64)
}

/// DHD restricted to relations whose endpoints both lie in `indices`.
pub fn rdhd(
    h: &DominanceDigraph,
    h2: &DominanceDigraph,
    indices: &[usize],
) -> Result<f64, MetricError> {
    require_comparable(h, h2)?;
    let set: BTreeSet<usize> = indices.iter().copied().collect();
    if set.len() < 2 {
        return Err(MetricError::InvalidArgument(format!(
            "restriction needs at least 2 distinct indices, got {}",
            set.len()
        )));
    }
    if set.iter().any(|&i| i >= h.n_agents()) {
        return Err(MetricError::InvalidArgument(
            "restriction index out of range".into(),
        ));
    }
    let k = set.len();
    let shared = h
        .edges()
        .intersection(h2.edges())
        .filter(|&&(d, s)| set.contains(&d) && set.contains(&s))
        .count();
    Ok(1.0 - 2.0 * shared as f64 / (k * (k - 1)) as f64)
}

/// Transmission fidelity: the complement of RDHD over the naive index set.
pub fn dhtf(
    h: &DominanceDigraph,
    h2: &DominanceDigraph,
    naive_indices: &[usize],
) -> Result<f64, MetricError> {
    Ok(1.0 - rdhd(h, h2, naive_indices)?)
}

/// Number of distinct edge sets among the given complete hierarchies.
pub fn count_distinct(hierarchies: &[DominanceDigraph]) -> Result<usize, MetricError> {
    if hierarchies.is_empty() {
        return Err(MetricError::InvalidArgument(
            "distinct census over an empty hierarchy list".into(),
        ));
    }
    let n = hierarchies[0].n_agents();
    let mut seen: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    for h in hierarchies {
        if h.n_agents() != n || !h.is_complete() {
            return Err(MetricError::InvalidArgument(
                "census requires complete hierarchies of equal size".into(),
            ));
        }
        seen.insert(h.edges().iter().copied().collect());
    }
    Ok(seen.len())
}

/// Renders a complete hierarchy in condensed notation: singleton blocks as
/// bare indices, cycles as brace-enclosed sets, blocks joined by a double
/// arrow (`=>` in plain mode).
pub fn render_condensed(h: &DominanceDigraph, plain: bool) -> Result<String, MetricError> {
    let ranks = condense(h)?;
    let sep = if plain { " => " } else { " \u{21D2} " };
    let parts: Vec<String> = ranks
        .blocks
        .iter()
        .map(|block| {
            if block.len() == 1 {
                block[0].to_string()
            } else {
                let inner: Vec<String> = block.iter().map(|a| a.to_string()).collect();
                format!("{{{}}}", inner.join(", "))
            }
        })
        .collect();
    Ok(parts.join(sep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log_with(n: usize, rounds: &[(usize, usize, Action, Action)]) -> InteractionLog {
        let mut log = InteractionLog::new(n);
        for &(i, j, ai, aj) in rounds {
            log.record_round(i, j, ai, aj);
        }
        log
    }

    const H: Action = Action::Hawk;
    const D: Action = Action::Dove;

    #[test]
    fn aggressiveness_basic_ratios() {
        let log = log_with(
            3,
            &[(0, 1, H, D), (0, 1, H, D), (0, 2, H, D), (0, 2, D, H)],
        );
        assert_eq!(aggressiveness(&log, 0, &[1, 2]).unwrap(), 0.75);
        assert_eq!(overall_aggressiveness(&log, 0).unwrap(), 0.75);
        assert_eq!(aggressiveness(&log, 0, &[1]).unwrap(), 1.0);
        assert!(matches!(
            aggressiveness(&log, 1, &[2]),
            Err(MetricError::UndefinedMetric(_))
        ));
    }

    #[test]
    fn aggressiveness_union_is_weighted_mean() {
        let log = log_with(
            4,
            &[
                (0, 1, H, D),
                (0, 1, D, H),
                (0, 2, H, D),
                (0, 2, H, D),
                (0, 2, H, D),
                (0, 3, D, H),
            ],
        );
        let g1 = aggressiveness(&log, 0, &[1]).unwrap();
        let g2 = aggressiveness(&log, 0, &[2]).unwrap();
        let g3 = aggressiveness(&log, 0, &[3]).unwrap();
        let weighted = (2.0 * g1 + 3.0 * g2 + 1.0 * g3) / 6.0;
        let union = aggressiveness(&log, 0, &[1, 2, 3]).unwrap();
        assert!((union - weighted).abs() < 1e-15);
    }

    #[test]
    fn rapport_is_symmetric_absolute_gap() {
        // 0 hawks 9/10 vs 1, 1 hawks 1/10 vs 0.
        let mut log = InteractionLog::new(2);
        for k in 0..10 {
            log.record_round(0, 1, if k < 9 { H } else { D }, if k < 1 { H } else { D });
        }
        assert!((rapport(&log, 0, 1).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(rapport(&log, 0, 1).unwrap(), rapport(&log, 1, 0).unwrap());
        let same = log_with(2, &[(0, 1, H, H), (0, 1, D, D)]);
        assert_eq!(rapport(&same, 0, 1).unwrap(), 0.0);
        let empty = InteractionLog::new(2);
        assert!(rapport(&empty, 0, 1).is_err());
    }

    #[test]
    fn dominance_relation_thresholds() {
        // 19/20 vs 1/20: gap 0.9 > 0.55.
        let mut log = InteractionLog::new(2);
        for k in 0..20 {
            log.record_round(0, 1, if k < 19 { H } else { D }, if k < 1 { H } else { D });
        }
        assert_eq!(
            dominance_relation(&log, 0, 1, 0.55).unwrap(),
            DominanceRelation::FirstDominates
        );
        assert_eq!(
            dominance_relation(&log, 1, 0, 0.55).unwrap(),
            DominanceRelation::SecondDominates
        );

        // 12/20 vs 8/20: gap 0.2, no relation.
        let mut log2 = InteractionLog::new(2);
        for k in 0..20 {
            log2.record_round(0, 1, if k < 12 { H } else { D }, if k < 8 { H } else { D });
        }
        assert_eq!(
            dominance_relation(&log2, 0, 1, 0.55).unwrap(),
            DominanceRelation::NoRelation
        );
    }

    #[test]
    fn dominance_gap_exactly_eta_is_no_relation() {
        // Gap 10/20 = 0.5 exactly at eta = 0.5: strict inequality fails.
        let mut log = InteractionLog::new(2);
        for k in 0..20 {
            log.record_round(0, 1, if k < 15 { H } else { D }, if k < 5 { H } else { D });
        }
        assert_eq!(
            dominance_relation(&log, 0, 1, 0.5).unwrap(),
            DominanceRelation::NoRelation
        );
        assert_eq!(
            dominance_relation(&log, 0, 1, 0.499).unwrap(),
            DominanceRelation::FirstDominates
        );
    }

    /// Log in which agent order is a total order: lower index always hawks
    /// higher index, which always doves back.
    fn total_order_log(n: usize) -> InteractionLog {
        let mut log = InteractionLog::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                for _ in 0..4 {
                    log.record_round(i, j, H, D);
                }
            }
        }
        log
    }

    #[test]
    fn build_hierarchy_complete_and_polarity() {
        let log = total_order_log(6);
        let h = build_hierarchy(&log, 0.55).unwrap();
        assert!(h.is_complete());
        assert_eq!(h.edges().len(), 15);
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert!(h.has_edge(i, j));
                assert_eq!(
                    dominance_relation(&log, i, j, 0.55).unwrap(),
                    DominanceRelation::FirstDominates
                );
            }
        }
    }

    #[test]
    fn build_hierarchy_one_unresolved_pair() {
        let mut log = total_order_log(6);
        // Blur pair (0, 1) to an even split.
        for _ in 0..4 {
            log.record_round(0, 1, D, H);
        }
        let h = build_hierarchy(&log, 0.55).unwrap();
        assert!(!h.is_complete());
        assert_eq!(h.edges().len(), 14);
    }

    #[test]
    fn build_hierarchy_unmet_pair_names_it() {
        let mut log = total_order_log(4);
        log = {
            // Rebuild without pair (1, 3).
            let mut fresh = InteractionLog::new(4);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if (i, j) == (1, 3) {
                        continue;
                    }
                    for _ in 0..4 {
                        fresh.record_round(i, j, H, D);
                    }
                }
            }
            let _ = log;
            fresh
        };
        match build_hierarchy(&log, 0.55) {
            Err(MetricError::UndefinedMetric(msg)) => assert!(msg.contains("(1, 3)")),
            other => panic!("expected undefined-metric error, got {other:?}"),
        }
    }

    fn tournament_from_bits(n: usize, bits: u32) -> DominanceDigraph {
        let mut edges = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if bits >> k & 1 == 1 {
                    edges.push((i, j));
                } else {
                    edges.push((j, i));
                }
                k += 1;
            }
        }
        DominanceDigraph::from_edges(n, edges).unwrap()
    }

    #[test]
    fn three_cycle_is_intransitive_and_total_order_is_not() {
        let cycle = DominanceDigraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(!is_transitive(&cycle).unwrap());
        let order = tournament_from_bits(4, 0b111111);
        assert!(is_transitive(&order).unwrap());
    }

    #[test]
    fn incomplete_digraph_rejected_by_analysis() {
        let partial = DominanceDigraph::from_edges(3, [(0, 1)]).unwrap();
        assert!(is_transitive(&partial).is_err());
        assert!(condense(&partial).is_err());
    }

    /// Brute-force triad check, independent of the score-sequence shortcut.
    fn has_three_cycle(h: &DominanceDigraph) -> bool {
        let n = h.n_agents();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if a != b
                        && b != c
                        && a != c
                        && h.has_edge(a, b)
                        && h.has_edge(b, c)
                        && h.has_edge(c, a)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn transitive_tournaments_on_five_nodes_number_120() {
        // All 2^10 labeled tournaments on 5 nodes; 5! are transitive.
        let mut transitive = 0;
        for bits in 0..(1u32 << 10) {
            let h = tournament_from_bits(5, bits);
            let fast = is_transitive(&h).unwrap();
            assert_eq!(fast, !has_three_cycle(&h));
            if fast {
                transitive += 1;
            }
        }
        assert_eq!(transitive, 120);
    }

    #[test]
    fn condense_total_order_gives_singletons() {
        let h = tournament_from_bits(6, 0b111_1111_1111_1111);
        let ranks = condense(&h).unwrap();
        assert_eq!(ranks.blocks.len(), 6);
        for (r, block) in ranks.blocks.iter().enumerate() {
            assert_eq!(block, &vec![r]);
            assert!(ranks.is_rank_linear(r));
        }
    }

    /// The worked sample population: 4 on top, then the cycle {1, 3, 5},
    /// then 0, then 2.
    fn sample_cycle_hierarchy() -> DominanceDigraph {
        let mut edges = vec![(1, 3), (3, 5), (5, 1)];
        for &x in &[1, 3, 5, 0, 2] {
            edges.push((4, x));
        }
        for &x in &[1, 3, 5] {
            edges.push((x, 0));
            edges.push((x, 2));
        }
        edges.push((0, 2));
        DominanceDigraph::from_edges(6, edges).unwrap()
    }

    #[test]
    fn condense_sample_cycle_population() {
        let h = sample_cycle_hierarchy();
        assert!(!is_transitive(&h).unwrap());
        let ranks = condense(&h).unwrap();
        assert_eq!(
            ranks.blocks,
            vec![vec![4], vec![1, 3, 5], vec![0], vec![2]]
        );
        for r in [0, 4, 5] {
            assert!(ranks.is_rank_linear(r), "rank {r} should be linear");
        }
        for r in [1, 2, 3] {
            assert!(!ranks.is_rank_linear(r), "rank {r} should be non-linear");
        }
        assert_eq!(ranks.rank_of[4], (0, 0));
        assert_eq!(ranks.rank_of[1], (1, 3));
        assert_eq!(ranks.rank_of[0], (4, 4));
        assert_eq!(ranks.rank_of[2], (5, 5));
        assert_eq!(render_condensed(&h, true).unwrap(), "4 => {1, 3, 5} => 0 => 2");
    }

    #[test]
    fn rank_linearity_mixture() {
        let order = tournament_from_bits(6, 0b111_1111_1111_1111);
        let cyc = sample_cycle_hierarchy();
        let all_linear = vec![order.clone(), order.clone()];
        for r in 0..6 {
            assert_eq!(rank_linearity(&all_linear, r).unwrap(), 1.0);
        }
        let single = vec![cyc.clone()];
        for r in [0, 4, 5] {
            assert_eq!(rank_linearity(&single, r).unwrap(), 1.0);
        }
        for r in [1, 2, 3] {
            assert_eq!(rank_linearity(&single, r).unwrap(), 0.0);
        }
        let mixed = vec![order, cyc];
        for r in [0, 4, 5] {
            assert_eq!(rank_linearity(&mixed, r).unwrap(), 1.0);
        }
        for r in [1, 2, 3] {
            assert_eq!(rank_linearity(&mixed, r).unwrap(), 0.5);
        }
        assert!(rank_linearity(&[], 0).is_err());
    }

    fn reverse(h: &DominanceDigraph) -> DominanceDigraph {
        DominanceDigraph::from_edges(h.n_agents(), h.edges().iter().map(|&(d, s)| (s, d)))
            .unwrap()
    }

    #[test]
    fn dhd_identity_reversal_and_partial() {
        let h = tournament_from_bits(6, 0b101_0101_0101_0101);
        assert_eq!(dhd(&h, &h).unwrap(), 0.0);
        assert_eq!(dhd(&h, &reverse(&h)).unwrap(), 1.0);

        let a = DominanceDigraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let b = DominanceDigraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!((dhd(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(dhd(&a, &b).unwrap(), dhd(&b, &a).unwrap());
    }

    #[test]
    fn rdhd_reduces_to_dhd_on_full_index_set() {
        let a = tournament_from_bits(6, 0b110_0110_1010_0101);
        let b = tournament_from_bits(6, 0b011_1010_0110_1100);
        let all: Vec<usize> = (0..6).collect();
        assert_eq!(rdhd(&a, &b, &all).unwrap(), dhd(&a, &b).unwrap());
        assert_eq!(rdhd(&a, &a, &[0, 3, 5]).unwrap(), 0.0);
        assert!(rdhd(&a, &b, &[2]).is_err());
    }

    #[test]
    fn rdhd_half_matching_on_four_indices() {
        // Restricted to {0,1,2,3}: flip 3 of the 6 pair polarities.
        let a = tournament_from_bits(6, 0b111_1111_1111_1111);
        let mut edges: Vec<(usize, usize)> = a.edges().iter().copied().collect();
        for pair in [(0, 1), (0, 2), (0, 3)] {
            edges.retain(|&e| e != pair);
            edges.push((pair.1, pair.0));
        }
        let b = DominanceDigraph::from_edges(6, edges).unwrap();
        assert_eq!(rdhd(&a, &b, &[0, 1, 2, 3]).unwrap(), 0.5);
    }

    #[test]
    fn dhtf_complements_rdhd() {
        let a = tournament_from_bits(6, 0b010_1100_1110_0011);
        let b = tournament_from_bits(6, 0b100_0111_0101_1010);
        let naive = [1, 2, 4, 5];
        let r = rdhd(&a, &b, &naive).unwrap();
        let f = dhtf(&a, &b, &naive).unwrap();
        assert_eq!(f, 1.0 - r);
        assert_eq!(dhtf(&a, &a, &naive).unwrap(), 1.0);
    }

    #[test]
    fn dhtf_five_of_six_pairs() {
        let a = tournament_from_bits(6, 0b111_1111_1111_1111);
        let mut edges: Vec<(usize, usize)> = a.edges().iter().copied().collect();
        edges.retain(|&e| e != (0, 1));
        edges.push((1, 0));
        let b = DominanceDigraph::from_edges(6, edges).unwrap();
        let f = dhtf(&a, &b, &[0, 1, 2, 3]).unwrap();
        assert!((f - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn dhtf_random_tournaments_expect_half() {
        // Monte-Carlo over independent uniform tournaments.
        let mut r = ChaCha8Rng::seed_from_u64(42);
        let samples = 4000;
        let mut total = 0.0;
        for _ in 0..samples {
            let a = tournament_from_bits(6, r.gen_range(0..1u32 << 15));
            let b = tournament_from_bits(6, r.gen_range(0..1u32 << 15));
            total += dhtf(&a, &b, &[0, 1, 2, 3]).unwrap();
        }
        let mean = total / samples as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean DHTF {mean}");
    }

    #[test]
    fn count_distinct_census() {
        let a = tournament_from_bits(6, 7);
        let b = tournament_from_bits(6, 8);
        let c = tournament_from_bits(6, 9);
        assert_eq!(count_distinct(&[a.clone(), a.clone(), a.clone()]).unwrap(), 1);
        assert_eq!(count_distinct(&[a, b, c]).unwrap(), 3);
        assert!(count_distinct(&[]).is_err());
    }

    proptest! {
        #[test]
        fn dhd_bounds_and_symmetry(x in 0u32..(1 << 15), y in 0u32..(1 << 15)) {
            let a = tournament_from_bits(6, x);
            let b = tournament_from_bits(6, y);
            let d = dhd(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, dhd(&b, &a).unwrap());
            prop_assert_eq!(dhd(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn condensation_blocks_partition_and_dominate(x in 0u32..(1 << 15)) {
            let h = tournament_from_bits(6, x);
            let ranks = condense(&h).unwrap();
            let mut seen: Vec<usize> = ranks.blocks.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..6).collect::<Vec<_>>());
        }
    }
}
