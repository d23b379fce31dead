//! Command implementations and on-disk formats: TOML run configuration,
//! CSV result tables, JSON policy snapshots and run manifests.
//!
//! Commands: `emerge`, `ablate`, `transmit`, `analyze`. Exit codes: 0 on
//! success, 1 for usage/configuration errors, 2 for runtime failures.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{
    run_ablation, run_emergence, run_transmission, AblationConfig, EmergenceConfig,
    ExperimentError, PopulationOutcome, SourcePopulation, TransmissionConfig,
};
use crate::game::RewardConstants;
use crate::learner::{restore, snapshot, PpoHyperparams};
use crate::metrics::{
    count_distinct, is_transitive, rank_linearity, render_condensed, DominanceDigraph,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Configuration files
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmergenceSection {
    n_populations: usize,
    n_agents: usize,
    max_generations: usize,
    eta: f64,
    convergence_window: usize,
    master_seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HyperSection {
    learning_rate: f64,
    clip_epsilon: f64,
    discount_gamma: f64,
    episodes_per_generation: usize,
    update_epochs: usize,
    entropy_coefficient: f64,
    value_learning_rate: f64,
}

impl Default for HyperSection {
    fn default() -> Self {
        let h = PpoHyperparams::default();
        HyperSection {
            learning_rate: h.learning_rate,
            clip_epsilon: h.clip_epsilon,
            discount_gamma: h.discount_gamma,
            episodes_per_generation: h.episodes_per_generation,
            update_epochs: h.update_epochs,
            entropy_coefficient: h.entropy_coefficient,
            value_learning_rate: h.value_learning_rate,
        }
    }
}

impl HyperSection {
    fn to_hyper(&self) -> PpoHyperparams {
        PpoHyperparams {
            learning_rate: self.learning_rate,
            clip_epsilon: self.clip_epsilon,
            discount_gamma: self.discount_gamma,
            episodes_per_generation: self.episodes_per_generation,
            update_epochs: self.update_epochs,
            entropy_coefficient: self.entropy_coefficient,
            value_learning_rate: self.value_learning_rate,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RewardsSection {
    t_reward: f64,
    r_reward: f64,
    s_reward: f64,
    p_reward: f64,
}

impl Default for RewardsSection {
    fn default() -> Self {
        let c = RewardConstants::default();
        RewardsSection {
            t_reward: c.t_reward,
            r_reward: c.r_reward,
            s_reward: c.s_reward,
            p_reward: c.p_reward,
        }
    }
}

impl RewardsSection {
    fn to_rewards(&self) -> RewardConstants {
        RewardConstants {
            t_reward: self.t_reward,
            r_reward: self.r_reward,
            s_reward: self.s_reward,
            p_reward: self.p_reward,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmergeFile {
    emergence: EmergenceSection,
    #[serde(default)]
    hyper: HyperSection,
    #[serde(default)]
    rewards: RewardsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AblationSection {
    opa_grid: Vec<f64>,
    populations_per_point: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AblateFile {
    ablation: AblationSection,
    emergence: EmergenceSection,
    #[serde(default)]
    hyper: HyperSection,
    #[serde(default)]
    rewards: RewardsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransmissionSection {
    n_source_populations: usize,
    repeats_per_population: usize,
    k_values: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransmitFile {
    transmission: TransmissionSection,
    emergence: EmergenceSection,
    #[serde(default)]
    hyper: HyperSection,
    #[serde(default)]
    naive_hyper: HyperSection,
    #[serde(default)]
    rewards: RewardsSection,
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn emergence_config(
    section: &EmergenceSection,
    hyper: &HyperSection,
    rewards: &RewardsSection,
    seed_override: Option<u64>,
) -> EmergenceConfig {
    EmergenceConfig {
        n_populations: section.n_populations,
        n_agents: section.n_agents,
        max_generations: section.max_generations,
        hyper: hyper.to_hyper(),
        eta: section.eta,
        convergence_window: section.convergence_window,
        master_seed: seed_override.unwrap_or(section.master_seed),
        rewards: rewards.to_rewards(),
    }
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    /// Fully resolved configuration, serialized as TOML.
    pub config: String,
    pub master_seed: u64,
    pub version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub outputs: Vec<String>,
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value).expect("serializable"))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct ManifestWriter {
    path: PathBuf,
    manifest: RunManifest,
}

impl ManifestWriter {
    fn start(
        out: &Path,
        command: &str,
        config_toml: String,
        master_seed: u64,
    ) -> Result<Self, CliError> {
        let started_at = Utc::now().to_rfc3339();
        let manifest = RunManifest {
            run_id: format!("{command}-{}", Utc::now().format("%Y%m%dT%H%M%S%.3fZ")),
            command: command.to_string(),
            config: config_toml,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: None,
            outputs: Vec::new(),
        };
        let path = out.join("manifest.json");
        write_json_atomic(&path, &manifest)?;
        Ok(ManifestWriter { path, manifest })
    }

    fn finish(mut self, outputs: Vec<String>) -> Result<(), CliError> {
        self.manifest.outputs = outputs;
        self.manifest.finished_at = Some(Utc::now().to_rfc3339());
        write_json_atomic(&self.path, &self.manifest)
    }
}

// ---------------------------------------------------------------------------
// Table helpers
// ---------------------------------------------------------------------------

/// Formats an f64 with full round-trip precision (Rust's shortest-exact
/// float formatting).
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Canonical serialization of a hierarchy's edge set: `d>s` tokens sorted
/// lexicographically, joined by single spaces.
pub fn format_edges(h: &DominanceDigraph) -> String {
    let mut tokens: Vec<String> = h.edges().iter().map(|(d, s)| format!("{d}>{s}")).collect();
    tokens.sort();
    tokens.join(" ")
}

/// Parses the output of [`format_edges`].
pub fn parse_edges(n_agents: usize, text: &str) -> Result<DominanceDigraph, CliError> {
    let mut edges = Vec::new();
    for token in text.split_whitespace() {
        let (d, s) = token
            .split_once('>')
            .ok_or_else(|| CliError::Runtime(format!("malformed edge token {token:?}")))?;
        let d: usize = d
            .parse()
            .map_err(|_| CliError::Runtime(format!("malformed edge token {token:?}")))?;
        let s: usize = s
            .parse()
            .map_err(|_| CliError::Runtime(format!("malformed edge token {token:?}")))?;
        edges.push((d, s));
    }
    DominanceDigraph::from_edges(n_agents, edges).map_err(|e| CliError::Runtime(e.to_string()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::Writer::from_path(path)?)
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

fn snapshot_file_name(population: usize, agent: usize) -> String {
    format!("pop{population:04}_agent{agent:02}.json")
}

// ---------------------------------------------------------------------------
// emerge
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RunOpts {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

fn write_emergence_tables(
    out: &Path,
    populations: &[PopulationOutcome],
) -> Result<Vec<String>, CliError> {
    let mut outputs = Vec::new();

    let metrics_path = out.join("metrics.csv");
    let mut w = csv_writer(&metrics_path)?;
    w.write_record(["population", "generation", "agent", "aggressiveness"])?;
    for (p, pop) in populations.iter().enumerate() {
        for m in &pop.history {
            for (agent, &g) in m.aggressiveness.iter().enumerate() {
                w.write_record([
                    p.to_string(),
                    m.generation.to_string(),
                    agent.to_string(),
                    fmt_f64(g),
                ])?;
            }
        }
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("metrics.csv".to_string());

    let rapport_path = out.join("rapport.csv");
    let mut w = csv_writer(&rapport_path)?;
    w.write_record(["population", "generation", "min_rapport"])?;
    for (p, pop) in populations.iter().enumerate() {
        for m in &pop.history {
            let min = m.min_rapport.map(fmt_f64).unwrap_or_default();
            w.write_record([p.to_string(), m.generation.to_string(), min])?;
        }
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("rapport.csv".to_string());

    let hier_path = out.join("hierarchies.csv");
    let mut w = csv_writer(&hier_path)?;
    w.write_record([
        "population",
        "converged",
        "generations",
        "complete",
        "transitive",
        "edges",
    ])?;
    for (p, pop) in populations.iter().enumerate() {
        let last = pop.final_metrics();
        let complete = last.hierarchy.is_complete();
        let transitive = if complete {
            is_transitive(&last.hierarchy)
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .to_string()
        } else {
            String::new()
        };
        w.write_record([
            p.to_string(),
            pop.converged.to_string(),
            pop.generations.to_string(),
            complete.to_string(),
            transitive,
            format_edges(&last.hierarchy),
        ])?;
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("hierarchies.csv".to_string());

    let snap_dir = out.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    for (p, pop) in populations.iter().enumerate() {
        for (a, state) in pop.final_states.iter().enumerate() {
            let name = snapshot_file_name(p, a);
            fs::write(snap_dir.join(&name), snapshot(state))?;
            outputs.push(format!("snapshots/{name}"));
        }
    }
    Ok(outputs)
}

pub fn cmd_emerge(opts: &RunOpts) -> Result<(), CliError> {
    let file: EmergeFile = read_config(&opts.config)?;
    let cfg = emergence_config(&file.emergence, &file.hyper, &file.rewards, opts.seed);
    cfg.validate().map_err(CliError::from)?;
    fs::create_dir_all(&opts.out)?;
    let manifest = ManifestWriter::start(
        &opts.out,
        "emerge",
        toml::to_string_pretty(&cfg).expect("serializable"),
        cfg.master_seed,
    )?;

    let result = run_emergence(&cfg)?;
    let outputs = write_emergence_tables(&opts.out, &result.populations)?;
    manifest.finish(outputs)
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

pub fn cmd_ablate(opts: &RunOpts) -> Result<(), CliError> {
    let file: AblateFile = read_config(&opts.config)?;
    let base = emergence_config(&file.emergence, &file.hyper, &file.rewards, opts.seed);
    let cfg = AblationConfig {
        opa_grid: file.ablation.opa_grid,
        populations_per_point: file.ablation.populations_per_point,
        base,
    };
    cfg.validate().map_err(CliError::from)?;
    fs::create_dir_all(&opts.out)?;
    let manifest = ManifestWriter::start(
        &opts.out,
        "ablate",
        toml::to_string_pretty(&cfg).expect("serializable"),
        cfg.base.master_seed,
    )?;

    let result = run_ablation(&cfg)?;
    let mut outputs = Vec::new();

    let traj_path = opts.out.join("trajectories.csv");
    let mut w = csv_writer(&traj_path)?;
    w.write_record(["opa", "generation", "mean_rapport"])?;
    for point in &result.points {
        for (g, &r) in point.mean_rapport_per_generation.iter().enumerate() {
            w.write_record([fmt_f64(point.opa), g.to_string(), fmt_f64(r)])?;
        }
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("trajectories.csv".to_string());

    let final_path = opts.out.join("final_rapport.csv");
    let mut w = csv_writer(&final_path)?;
    w.write_record(["opa", "final_mean_rapport"])?;
    for point in &result.points {
        w.write_record([fmt_f64(point.opa), fmt_f64(point.final_mean_rapport)])?;
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("final_rapport.csv".to_string());

    manifest.finish(outputs)
}

// ---------------------------------------------------------------------------
// transmit
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct StoredPopulation {
    converged: bool,
    complete: bool,
    edges: String,
}

fn read_hierarchies_csv(path: &Path) -> Result<Vec<StoredPopulation>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        rows.push(StoredPopulation {
            converged: get(1) == "true",
            complete: get(3) == "true",
            edges: get(5),
        });
    }
    Ok(rows)
}

/// Loads converged source populations (hierarchy + per-agent snapshots) from
/// a prior `emerge` output directory.
fn load_sources(
    snapshots_dir: &Path,
    n_agents: usize,
    wanted: usize,
) -> Result<Vec<SourcePopulation>, CliError> {
    let rows = read_hierarchies_csv(&snapshots_dir.join("hierarchies.csv"))?;
    let mut sources = Vec::new();
    for (p, row) in rows.iter().enumerate() {
        if !(row.converged && row.complete) {
            continue;
        }
        let hierarchy = parse_edges(n_agents, &row.edges)?;
        let mut states = Vec::with_capacity(n_agents);
        for a in 0..n_agents {
            let path = snapshots_dir.join("snapshots").join(snapshot_file_name(p, a));
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
            states.push(restore(&text).map_err(|e| CliError::Runtime(e.to_string()))?);
        }
        sources.push(SourcePopulation { hierarchy, states });
        if sources.len() == wanted {
            break;
        }
    }
    if sources.len() < wanted {
        return Err(CliError::Runtime(format!(
            "snapshots dir holds {} converged populations, need {wanted}",
            sources.len()
        )));
    }
    Ok(sources)
}

pub fn cmd_transmit(opts: &RunOpts, snapshots_dir: &Path) -> Result<(), CliError> {
    let file: TransmitFile = read_config(&opts.config)?;
    let base = emergence_config(&file.emergence, &file.hyper, &file.rewards, opts.seed);
    let cfg = TransmissionConfig {
        n_source_populations: file.transmission.n_source_populations,
        repeats_per_population: file.transmission.repeats_per_population,
        k_values: file.transmission.k_values,
        naive_hyper: file.naive_hyper.to_hyper(),
        base,
    };
    cfg.validate().map_err(CliError::from)?;
    let sources = load_sources(snapshots_dir, cfg.base.n_agents, cfg.n_source_populations)?;
    fs::create_dir_all(&opts.out)?;
    let manifest = ManifestWriter::start(
        &opts.out,
        "transmit",
        toml::to_string_pretty(&cfg).expect("serializable"),
        cfg.base.master_seed,
    )?;

    let result = run_transmission(&cfg, &sources)?;
    let mut outputs = Vec::new();

    let samples_path = opts.out.join("dhtf_samples.csv");
    let mut w = csv_writer(&samples_path)?;
    w.write_record(["source_population", "repeat", "k", "dhtf", "converged"])?;
    for s in &result.samples {
        w.write_record([
            s.source.to_string(),
            s.repeat.to_string(),
            s.k.to_string(),
            s.dhtf.map(fmt_f64).unwrap_or_default(),
            s.converged.to_string(),
        ])?;
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("dhtf_samples.csv".to_string());

    // Per-K summary over converged samples; unconverged runs are counted
    // separately and excluded from the quartiles.
    let mut by_k: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for s in &result.samples {
        let entry = by_k.entry(s.k).or_default();
        match s.dhtf {
            Some(f) => entry.0.push(f),
            None => entry.1 += 1,
        }
    }
    let summary_path = opts.out.join("dhtf_summary.csv");
    let mut w = csv_writer(&summary_path)?;
    w.write_record(["k", "n_samples", "n_unconverged", "median", "q1", "q3"])?;
    for (k, (mut values, unconverged)) in by_k {
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite fidelities"));
        let (median, q1, q3) = if values.is_empty() {
            (String::new(), String::new(), String::new())
        } else {
            (
                fmt_f64(quantile(&values, 0.5)),
                fmt_f64(quantile(&values, 0.25)),
                fmt_f64(quantile(&values, 0.75)),
            )
        };
        w.write_record([
            k.to_string(),
            values.len().to_string(),
            unconverged.to_string(),
            median,
            q1,
            q3,
        ])?;
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("dhtf_summary.csv".to_string());

    manifest.finish(outputs)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzedRun {
    n_agents: usize,
    rows: Vec<StoredPopulation>,
    /// Final-generation aggressiveness per population, indexed by agent.
    final_aggressiveness: Vec<Vec<f64>>,
}

fn read_results(results: &Path) -> Result<AnalyzedRun, CliError> {
    let rows = read_hierarchies_csv(&results.join("hierarchies.csv"))?;

    let metrics_path = results.join("metrics.csv");
    let mut reader = csv::Reader::from_path(&metrics_path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", metrics_path.display())))?;
    // (population, agent) -> (last generation seen, aggressiveness)
    let mut latest: BTreeMap<(usize, usize), (usize, f64)> = BTreeMap::new();
    let mut n_agents = 0usize;
    for record in reader.records() {
        let record = record?;
        let parse_usize = |i: usize| -> Result<usize, CliError> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Runtime(format!("malformed metrics row {record:?}")))
        };
        let population = parse_usize(0)?;
        let generation = parse_usize(1)?;
        let agent = parse_usize(2)?;
        let g: f64 = record
            .get(3)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Runtime(format!("malformed metrics row {record:?}")))?;
        n_agents = n_agents.max(agent + 1);
        let entry = latest.entry((population, agent)).or_insert((generation, g));
        if generation >= entry.0 {
            *entry = (generation, g);
        }
    }
    if n_agents == 0 {
        return Err(CliError::Runtime("metrics.csv holds no data rows".into()));
    }

    let mut final_aggressiveness = vec![vec![f64::NAN; n_agents]; rows.len()];
    for ((population, agent), (_, g)) in latest {
        if population < rows.len() && agent < n_agents {
            final_aggressiveness[population][agent] = g;
        }
    }
    Ok(AnalyzedRun {
        n_agents,
        rows,
        final_aggressiveness,
    })
}

pub fn cmd_analyze(results: &Path, out: &Path) -> Result<(), CliError> {
    let run = read_results(results)?;
    fs::create_dir_all(out)?;
    let manifest = ManifestWriter::start(
        out,
        "analyze",
        format!("results_dir = {:?}\n", results.display().to_string()),
        0,
    )?;

    let mut complete: Vec<(usize, DominanceDigraph)> = Vec::new();
    for (p, row) in run.rows.iter().enumerate() {
        if row.complete {
            complete.push((p, parse_edges(run.n_agents, &row.edges)?));
        }
    }

    let mut outputs = Vec::new();

    // Distinct-hierarchy census.
    let complete_graphs: Vec<DominanceDigraph> =
        complete.iter().map(|(_, h)| h.clone()).collect();
    let (distinct, intransitive) = if complete_graphs.is_empty() {
        (0, 0)
    } else {
        let distinct =
            count_distinct(&complete_graphs).map_err(|e| CliError::Runtime(e.to_string()))?;
        let mut intransitive = 0usize;
        let mut seen = std::collections::BTreeSet::new();
        for h in &complete_graphs {
            if seen.insert(format_edges(h))
                && !is_transitive(h).map_err(|e| CliError::Runtime(e.to_string()))?
            {
                intransitive += 1;
            }
        }
        (distinct, intransitive)
    };
    let census_path = out.join("census.csv");
    let mut w = csv_writer(&census_path)?;
    w.write_record([
        "n_populations",
        "n_converged",
        "n_complete",
        "n_distinct",
        "n_intransitive",
    ])?;
    w.write_record([
        run.rows.len().to_string(),
        run.rows.iter().filter(|r| r.converged).count().to_string(),
        complete.len().to_string(),
        distinct.to_string(),
        intransitive.to_string(),
    ])?;
    w.flush().map_err(CliError::from)?;
    outputs.push("census.csv".to_string());

    // Mean aggressiveness per rank over linear-hierarchy populations.
    let mut rank_sums = vec![0.0; run.n_agents];
    let mut linear_count = 0usize;
    for (p, h) in &complete {
        if !run.rows[*p].converged
            || !is_transitive(h).map_err(|e| CliError::Runtime(e.to_string()))?
        {
            continue;
        }
        let ranks =
            crate::metrics::condense(h).map_err(|e| CliError::Runtime(e.to_string()))?;
        for (rank, block) in ranks.blocks.iter().enumerate() {
            rank_sums[rank] += run.final_aggressiveness[*p][block[0]];
        }
        linear_count += 1;
    }
    let rank_path = out.join("rank_aggressiveness.csv");
    let mut w = csv_writer(&rank_path)?;
    w.write_record(["rank", "mean_aggressiveness"])?;
    if linear_count > 0 {
        for (rank, sum) in rank_sums.iter().enumerate() {
            w.write_record([rank.to_string(), fmt_f64(sum / linear_count as f64)])?;
        }
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("rank_aggressiveness.csv".to_string());

    // Rank-linearity profile over complete hierarchies.
    let linearity_path = out.join("rank_linearity.csv");
    let mut w = csv_writer(&linearity_path)?;
    w.write_record(["rank", "linearity"])?;
    if !complete_graphs.is_empty() {
        for rank in 0..run.n_agents {
            let v = rank_linearity(&complete_graphs, rank)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            w.write_record([rank.to_string(), fmt_f64(v)])?;
        }
    }
    w.flush().map_err(CliError::from)?;
    outputs.push("rank_linearity.csv".to_string());

    // Condensed-notation listing.
    let mut listing = String::new();
    for (p, row) in run.rows.iter().enumerate() {
        let line = if row.complete {
            let h = parse_edges(run.n_agents, &row.edges)?;
            render_condensed(&h, true).map_err(|e| CliError::Runtime(e.to_string()))?
        } else {
            "(incomplete)".to_string()
        };
        listing.push_str(&format!("population {p}: {line}\n"));
    }
    fs::write(out.join("hierarchies.txt"), listing)?;
    outputs.push("hierarchies.txt".to_string());

    manifest.finish(outputs)
}
