//! Config-driven experiments writing CSV and JSON artifacts.
//!
//! A config is a single JSON document. Every `(policy, seed)` cell is computed
//! independently (in parallel when a thread pool is available) and rows are
//! written in config order of policies, then seeds, then rounds.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fedsim::{run_federated, Heterogeneity, LrSchedule, SyntheticTaskSpec, TrainingConfig};
use crate::markov::{self, Regime};
use crate::metrics;
use crate::policies::{run_selection, ExactM, PolicyKind, PolicySpec};
use crate::population::{zipf_dataset_sizes, ClientPopulation, SelectionTrace};
use crate::rng::{label, RngSeed};

/// Bumped whenever a CSV header or JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const SIGMA_HEADER: &str = "round,policy,seed,sigma_running,sigma_exact";
pub const SIGMA_SUMMARY_HEADER: &str = "policy,seed,sigma,stderr,sigma_exact";
pub const INTERVALS_HEADER: &str = "policy,gap,count,censored_count";
pub const STABILITY_HEADER: &str = "policy,T_window,metric";
pub const TRAIN_HEADER: &str = "round,policy,seed,loss_gap,dist2,selected_count";
pub const TRAIN_SUMMARY_HEADER: &str = "policy,seed,rounds_to_target,final_gap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sigma,
    Intervals,
    Stability,
    Train,
    MarkovAnalyze,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SizeModel {
    Homogeneous {
        #[serde(default = "default_size")]
        d: u64,
    },
    Zipf {
        a: f64,
        #[serde(default = "default_size")]
        d_min: u64,
    },
}

fn default_size() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub n: usize,
    pub size_model: SizeModel,
}

/// A policy as written in a config; the chain is derived from `n`, `m` and
/// the shared maximum age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDescriptor {
    pub kind: PolicyKind,
    pub m: usize,
    #[serde(default)]
    pub exact_m: ExactM,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    pub m_prime: usize,
}

/// Synthetic task parameters; the client count comes from the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub dim: usize,
    pub heterogeneity: Heterogeneity,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default = "half")]
    pub mu: f64,
    #[serde(default = "two")]
    pub l_smooth: f64,
    /// Seed of the task draw, shared by every training seed.
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}

/// Training knobs; rounds and seeds come from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub local_steps: usize,
    #[serde(default = "one_usize")]
    pub batch_size: usize,
    pub lr_schedule: LrSchedule,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "target")]
    pub target_gap: f64,
}

fn one_usize() -> usize {
    1
}
fn target() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub population: PopulationConfig,
    pub policies: Vec<PolicyDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovConfig>,
    #[serde(default = "one_usize")]
    pub rounds: usize,
    /// Selection-only rounds before measurement; per-policy default if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSection>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One violated requirement, located by its path in the config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config")?;
        for issue in &self.issues {
            write!(f, "\n  {}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                path: path.into(),
                message: message.into(),
            }],
        }
    }
}

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl ExperimentConfig {
    /// Parses a JSON document, reporting the line and column of syntax errors.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| {
            ConfigError::single(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn m_prime(&self) -> usize {
        self.markov.as_ref().map_or(0, |m| m.m_prime)
    }

    /// Checks every semantic requirement and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut issues = Issues::default();
        let n = self.population.n;
        if n == 0 {
            issues.push("population.n", "must be at least 1");
        }
        match self.population.size_model {
            SizeModel::Homogeneous { d } if d == 0 => {
                issues.push("population.size_model.d", "must be at least 1")
            }
            SizeModel::Zipf { a, d_min } => {
                if !(a > 1.0) {
                    issues.push("population.size_model.a", "shape must exceed 1");
                }
                if d_min == 0 {
                    issues.push("population.size_model.d_min", "must be at least 1");
                }
            }
            _ => {}
        }
        if self.policies.is_empty() {
            issues.push("policies", "at least one policy is required");
        }
        if self.seeds.is_empty() {
            issues.push("seeds", "at least one seed is required");
        }
        if self.rounds == 0 {
            issues.push("rounds", "must be at least 1");
        }
        let any_markov = self.policies.iter().any(|p| p.kind.is_markov());
        if any_markov && self.m_prime() == 0 {
            issues.push("markov.m_prime", "Markov policies need a maximum age of at least 1");
        }
        for (i, p) in self.policies.iter().enumerate() {
            let path = format!("policies[{i}].m");
            if p.m == 0 {
                issues.push(path, "must be at least 1");
            } else if n > 0 && p.m > n {
                issues.push(path, format!("m exceeds n ({} > {n})", p.m));
            } else if p.kind.is_markov() && self.m_prime() > 0 {
                if let Err(e) = PolicySpec::build(p.kind, n, p.m, self.m_prime()) {
                    issues.push(format!("policies[{i}]"), e.to_string());
                }
            }
        }
        match self.experiment {
            ExperimentKind::Stability => {
                if self.windows.is_empty() {
                    issues.push("windows", "stability needs at least one window");
                }
                for (i, &w) in self.windows.iter().enumerate() {
                    if w == 0 || w > self.rounds {
                        issues.push(format!("windows[{i}]"), format!("must lie in 1..={}", self.rounds));
                    }
                }
            }
            ExperimentKind::Train => self.validate_training(&mut issues),
            ExperimentKind::MarkovAnalyze if !any_markov => {
                issues.push("policies", "markov-analyze needs at least one Markov policy")
            }
            ExperimentKind::Intervals if self.rounds < 2 => {
                issues.push("rounds", "intervals need at least 2 rounds")
            }
            ExperimentKind::Sigma if self.rounds < 2 => issues.push("rounds", "sigma needs at least 2 rounds"),
            _ => {}
        }
        if issues.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues: issues.0 })
        }
    }

    fn validate_training(&self, issues: &mut Issues) {
        match &self.task {
            None => issues.push("task", "train needs a task section"),
            Some(task) => {
                if let Err(e) = self.task_spec(task).validate() {
                    issues.push("task", e.to_string());
                }
            }
        }
        match &self.training {
            None => issues.push("training", "train needs a training section"),
            Some(t) => {
                if let Err(e) = self.training_config(t, 0).validate() {
                    issues.push("training", e.to_string());
                }
                if !(t.target_gap > 0.0) {
                    issues.push("training.target_gap", "must be positive");
                }
            }
        }
    }

    fn task_spec(&self, task: &TaskConfig) -> SyntheticTaskSpec {
        SyntheticTaskSpec {
            n: self.population.n,
            dim: task.dim,
            heterogeneity: task.heterogeneity,
            spread: task.spread,
            mu: task.mu,
            l_smooth: task.l_smooth,
        }
    }

    fn training_config(&self, t: &TrainingSection, seed: u64) -> TrainingConfig {
        TrainingConfig {
            local_steps: t.local_steps,
            batch_size: t.batch_size,
            rounds: self.rounds,
            lr_schedule: t.lr_schedule,
            noise_sigma: t.noise_sigma,
            seed,
            target_gap: t.target_gap,
            burn_in: self.burn_in,
            record_models: false,
        }
    }

    /// Resolved policies in config order.
    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>> {
        self.policies
            .iter()
            .map(|p| {
                PolicySpec::build(p.kind, self.population.n, p.m, self.m_prime()).map(|s| s.with_exact_m(p.exact_m))
            })
            .collect()
    }

    /// The population for one seed; Zipf sizes are redrawn per seed.
    pub fn population_for(&self, seed: u64) -> Result<ClientPopulation> {
        let n = self.population.n;
        match self.population.size_model {
            SizeModel::Homogeneous { d } => ClientPopulation::homogeneous(n, d),
            SizeModel::Zipf { a, d_min } => {
                let sizes = zipf_dataset_sizes(n, a, d_min, RngSeed::new(seed).derive(label::SIZES, 0))?;
                ClientPopulation::from_sizes(sizes)
            }
        }
    }
}

/// Reads, parses and validates a config file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::single(path.display().to_string(), format!("cannot read: {e}")))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed_override: Option<u64>,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

/// Analysis of one Markov chain, as written to `markov.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub policy: PolicyKind,
    pub n: usize,
    pub m: usize,
    pub m_prime: usize,
    pub chain: Vec<f64>,
    pub pi: Vec<f64>,
    /// `P(X = k)` for `k = 1..=m'+1`.
    pub peak_age_head: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    /// Only set for the variance-minimizing chain.
    pub regime: Option<Regime>,
    pub sigma_exact: f64,
}

/// Builds the optimal (or calibrated monotone) chain for `m/n` and analyzes it.
pub fn markov_report(n: usize, m: usize, m_prime: usize, monotone: bool) -> Result<MarkovReport> {
    let (policy, chain, regime) = if monotone {
        (PolicyKind::MarkovMonotone, markov::calibrate_monotone_chain(n, m, m_prime)?, None)
    } else {
        let opt = markov::optimal_markov_chain(n, m, m_prime)?;
        (PolicyKind::MarkovOptimal, opt.chain, Some(opt.regime))
    };
    let pi = markov::stationary_distribution(&chain)?.pi;
    let law = markov::peak_age_distribution(&chain)?;
    Ok(MarkovReport {
        policy,
        n,
        m,
        m_prime,
        sigma_exact: metrics::sigma_markov_exact(n, &chain)?,
        chain: chain.probs().to_vec(),
        pi,
        peak_age_head: law.head,
        mean: law.mean,
        variance: law.variance,
        regime,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    created_unix_seconds: u64,
    config: &'a ExperimentConfig,
    files: &'a [String],
}

/// Runs the configured experiment and writes its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed_override {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;

    let work = || -> Result<Vec<String>> {
        match cfg.experiment {
            ExperimentKind::Sigma => run_sigma(&cfg),
            ExperimentKind::Intervals => run_intervals(&cfg),
            ExperimentKind::Stability => run_stability(&cfg),
            ExperimentKind::Train => run_train(&cfg),
            ExperimentKind::MarkovAnalyze => run_markov(&cfg),
        }
    };
    let mut files = match opts.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    files.push("manifest.json".into());

    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        created_unix_seconds: created,
        config: &cfg,
        files: &files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(cfg.output_dir.join("manifest.json"), text + "\n")?;
    log::info!("wrote {} files to {}", files.len(), cfg.output_dir.display());
    Ok(RunSummary {
        output_dir: cfg.output_dir,
        files,
    })
}

fn cells(cfg: &ExperimentConfig) -> Result<Vec<(usize, PolicySpec, u64)>> {
    let specs = cfg.policy_specs()?;
    Ok(specs
        .into_iter()
        .enumerate()
        .flat_map(|(i, spec)| cfg.seeds.iter().map(move |&s| (i, spec.clone(), s)))
        .collect())
}

fn selection_trace(cfg: &ExperimentConfig, policy: &PolicySpec, seed: u64) -> Result<SelectionTrace> {
    let pop = cfg.population_for(seed)?;
    let burn_in = cfg.burn_in.unwrap_or_else(|| policy.default_burn_in());
    run_selection(&pop, policy, cfg.rounds, burn_in, RngSeed::new(seed))
}

fn exact_sigma(pop: &ClientPopulation, policy: &PolicySpec) -> Option<f64> {
    match policy.kind {
        PolicyKind::RandomWeighted => {
            let sizes = pop.sizes();
            if sizes.iter().all(|&d| d == sizes[0]) {
                Some(metrics::sigma_random_weighted_homogeneous(pop.len(), policy.m))
            } else {
                metrics::sigma_random_weighted_exact(sizes, policy.m).ok()
            }
        }
        PolicyKind::Probabilistic => metrics::sigma_probabilistic_exact(&pop.size_probabilities(), policy.m).ok(),
        PolicyKind::MarkovOptimal | PolicyKind::MarkovMonotone if policy.exact_m == ExactM::Off => {
            policy.chain.as_ref().and_then(|c| metrics::sigma_markov_exact(pop.len(), c).ok())
        }
        _ => None,
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(cfg: &ExperimentConfig, name: &str, header: &str) -> Result<BufWriter<fs::File>> {
    let mut w = BufWriter::new(fs::File::create(cfg.output_dir.join(name))?);
    writeln!(w, "{header}")?;
    Ok(w)
}

fn run_sigma(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let results = cells(cfg)?
        .into_par_iter()
        .map(|(_, policy, seed)| {
            let trace = selection_trace(cfg, &policy, seed)?;
            let exact = exact_sigma(&cfg.population_for(seed)?, &policy);
            let est = metrics::sigma_monte_carlo(&trace)?;
            Ok((policy.tag(), seed, metrics::sigma_running(&trace), est, exact))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = create(cfg, "sigma.csv", SIGMA_HEADER)?;
    let mut summary = create(cfg, "sigma_summary.csv", SIGMA_SUMMARY_HEADER)?;
    for (tag, seed, running, est, exact) in &results {
        let exact = opt_field(*exact);
        for (t, s) in running.iter().enumerate() {
            writeln!(rows, "{t},{tag},{seed},{s},{exact}")?;
        }
        writeln!(summary, "{tag},{seed},{},{},{exact}", est.sigma, est.stderr)?;
    }
    rows.flush()?;
    summary.flush()?;
    Ok(vec!["sigma.csv".into(), "sigma_summary.csv".into()])
}

fn run_intervals(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let results = cells(cfg)?
        .into_par_iter()
        .map(|(i, policy, seed)| {
            let trace = selection_trace(cfg, &policy, seed)?;
            Ok((i, metrics::inter_selection_histogram(&trace)))
        })
        .collect::<Result<Vec<_>>>()?;

    let specs = cfg.policy_specs()?;
    let mut w = create(cfg, "intervals.csv", INTERVALS_HEADER)?;
    for (i, spec) in specs.iter().enumerate() {
        let mut pooled = metrics::GapHistogram::default();
        for (_, h) in results.iter().filter(|(j, _)| *j == i) {
            for (gap, count) in &h.counts {
                *pooled.counts.entry(*gap).or_insert(0) += count;
            }
            pooled.censored += h.censored;
        }
        for (gap, count) in &pooled.counts {
            writeln!(w, "{},{gap},{count},{}", spec.tag(), pooled.censored)?;
        }
    }
    w.flush()?;
    Ok(vec!["intervals.csv".into()])
}

fn run_stability(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let results = cells(cfg)?
        .into_par_iter()
        .map(|(i, policy, seed)| {
            let trace = selection_trace(cfg, &policy, seed)?;
            let values = cfg
                .windows
                .iter()
                .map(|&w| metrics::windowed_selection_stability(&trace, w))
                .collect::<Result<Vec<_>>>()?;
            Ok((i, values))
        })
        .collect::<Result<Vec<_>>>()?;

    let specs = cfg.policy_specs()?;
    let mut w = create(cfg, "stability.csv", STABILITY_HEADER)?;
    for (i, spec) in specs.iter().enumerate() {
        for (k, window) in cfg.windows.iter().enumerate() {
            let values: Vec<f64> = results.iter().filter(|(j, _)| *j == i).map(|(_, v)| v[k]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            writeln!(w, "{},{window},{mean}", spec.tag())?;
        }
    }
    w.flush()?;
    Ok(vec!["stability.csv".into()])
}

fn run_train(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let task_cfg = cfg.task.as_ref().expect("validated");
    let training = cfg.training.as_ref().expect("validated");
    let base = cfg.task_spec(task_cfg).build(RngSeed::new(task_cfg.seed))?;
    let task = match cfg.population.size_model {
        SizeModel::Homogeneous { .. } => base,
        SizeModel::Zipf { .. } => base.with_sizes(cfg.population_for(task_cfg.seed)?.sizes().to_vec())?,
    };
    let results = cells(cfg)?
        .into_par_iter()
        .map(|(_, policy, seed)| {
            let trace = run_federated(&task, &policy, &cfg.training_config(training, seed))?;
            Ok((policy.tag(), seed, trace))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = create(cfg, "train.csv", TRAIN_HEADER)?;
    let mut summary = create(cfg, "train_summary.csv", TRAIN_SUMMARY_HEADER)?;
    for (tag, seed, trace) in &results {
        for r in &trace.rounds {
            writeln!(
                rows,
                "{},{tag},{seed},{},{},{}",
                r.round, r.loss_gap, r.dist2, r.selected_count
            )?;
        }
        let reached = trace.rounds_to_target.map(|r| r.to_string()).unwrap_or_default();
        writeln!(summary, "{tag},{seed},{reached},{}", trace.final_gap())?;
    }
    rows.flush()?;
    summary.flush()?;
    Ok(vec!["train.csv".into(), "train_summary.csv".into()])
}

fn run_markov(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let reports = cfg
        .policies
        .iter()
        .filter(|p| p.kind.is_markov())
        .map(|p| {
            markov_report(
                cfg.population.n,
                p.m,
                cfg.m_prime(),
                p.kind == PolicyKind::MarkovMonotone,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let text = serde_json::to_string_pretty(&reports)?;
    fs::write(cfg.output_dir.join("markov.json"), text + "\n")?;
    Ok(vec!["markov.json".into()])
}
