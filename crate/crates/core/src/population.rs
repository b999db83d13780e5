//! Client population state and per-round selection records.

use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngSeed;

/// Largest dataset size produced by [`zipf_dataset_sizes`].
pub const ZIPF_SUPPORT_MAX: u64 = 1_000_000;

/// How client importances `q_i` are derived from dataset sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Importance {
    /// `q_i = d_i / sum_j d_j`.
    #[default]
    DataProportional,
    /// `q_i = 1 / n`.
    Uniform,
}

/// Dataset sizes, current ages and importances of `n` clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientPopulation {
    sizes: Vec<u64>,
    ages: Vec<usize>,
    importance: Vec<f64>,
}

impl ClientPopulation {
    /// Population with the given dataset sizes, all ages zero and
    /// data-proportional importance.
    pub fn from_sizes(sizes: Vec<u64>) -> Result<Self> {
        Self::with_importance(sizes, Importance::DataProportional)
    }

    pub fn with_importance(sizes: Vec<u64>, importance: Importance) -> Result<Self> {
        if sizes.is_empty() {
            return Err(invalid("population needs at least one client"));
        }
        if sizes.iter().any(|&d| d == 0) {
            return Err(invalid("dataset sizes must be positive"));
        }
        let n = sizes.len();
        let q = match importance {
            Importance::DataProportional => {
                let total: f64 = sizes.iter().map(|&d| d as f64).sum();
                sizes.iter().map(|&d| d as f64 / total).collect()
            }
            Importance::Uniform => vec![1.0 / n as f64; n],
        };
        Ok(Self {
            ages: vec![0; n],
            sizes,
            importance: q,
        })
    }

    /// `n` clients holding `d` samples each.
    pub fn homogeneous(n: usize, d: u64) -> Result<Self> {
        Self::from_sizes(vec![d; n])
    }

    /// Replaces the current ages.
    pub fn with_ages(mut self, ages: Vec<usize>) -> Result<Self> {
        if ages.len() != self.len() {
            return Err(invalid(format!(
                "expected {} ages, got {}",
                self.len(),
                ages.len()
            )));
        }
        self.ages = ages;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn ages(&self) -> &[usize] {
        &self.ages
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    /// Data-proportional selection probabilities, independent of the
    /// configured importance.
    pub fn size_probabilities(&self) -> Vec<f64> {
        let total: f64 = self.sizes.iter().map(|&d| d as f64).sum();
        self.sizes.iter().map(|&d| d as f64 / total).collect()
    }

    /// Returns the population after `outcome`: selected clients reset to age
    /// zero, the rest age by one, saturating at `m_prime`.
    pub fn step_ages(&self, outcome: &RoundOutcome, m_prime: usize) -> Result<Self> {
        let mut next = self.clone();
        next.advance_ages(outcome, m_prime)?;
        Ok(next)
    }

    /// In-place form of [`step_ages`](Self::step_ages).
    pub fn advance_ages(&mut self, outcome: &RoundOutcome, m_prime: usize) -> Result<()> {
        let n = self.len();
        if let Some(&bad) = outcome.selected.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidOutcome(format!(
                "client index {bad} out of range for {n} clients"
            )));
        }
        for age in &mut self.ages {
            *age = (*age + 1).min(m_prime);
        }
        for &i in &outcome.selected {
            self.ages[i] = 0;
        }
        Ok(())
    }
}

/// The clients chosen in one round and their aggregation weights.
///
/// `selected` is sorted ascending and `weights[k]` belongs to `selected[k]`;
/// unselected clients implicitly have weight zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub selected: Vec<usize>,
    pub weights: Vec<f64>,
    /// Set when the policy selected nobody and one client was forced in.
    #[serde(default)]
    pub forced: bool,
}

impl RoundOutcome {
    pub fn new(round: usize, selected: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let outcome = Self {
            round,
            selected,
            weights,
            forced: false,
        };
        outcome.validate()?;
        Ok(outcome)
    }

    /// Uniform weights `1/|S|` over `selected`.
    pub fn uniform(round: usize, mut selected: Vec<usize>) -> Result<Self> {
        selected.sort_unstable();
        let w = 1.0 / selected.len().max(1) as f64;
        let weights = vec![w; selected.len()];
        Self::new(round, selected, weights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.selected.is_empty() {
            return Err(Error::InvalidOutcome("empty selection".into()));
        }
        if self.selected.len() != self.weights.len() {
            return Err(Error::InvalidOutcome(
                "selected and weights differ in length".into(),
            ));
        }
        if self.selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOutcome(
                "selected clients must be strictly ascending".into(),
            ));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidOutcome("negative or NaN weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidOutcome(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Weight of `client` in this round (zero when unselected).
    pub fn weight_of(&self, client: usize) -> f64 {
        self.selected
            .binary_search(&client)
            .map(|k| self.weights[k])
            .unwrap_or(0.0)
    }

    /// Iterates `(client, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.selected.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Consecutive round outcomes produced by one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub policy_tag: String,
    pub n: usize,
    pub outcomes: Vec<RoundOutcome>,
}

impl SelectionTrace {
    pub fn new(policy_tag: impl Into<String>, n: usize, outcomes: Vec<RoundOutcome>) -> Result<Self> {
        if outcomes.iter().enumerate().any(|(t, o)| o.round != t) {
            return Err(Error::InvalidOutcome(
                "trace rounds must be consecutive from zero".into(),
            ));
        }
        if outcomes.iter().flat_map(|o| &o.selected).any(|&i| i >= n) {
            return Err(Error::InvalidOutcome("client index out of range".into()));
        }
        Ok(Self {
            policy_tag: policy_tag.into(),
            n,
            outcomes,
        })
    }

    /// Number of rounds `T`.
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Fraction of rounds in which each client was selected.
    pub fn selection_rates(&self) -> Vec<f64> {
        let mut counts = vec![0u64; self.n];
        for o in &self.outcomes {
            for &i in &o.selected {
                counts[i] += 1;
            }
        }
        let t = self.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / t).collect()
    }

    /// Per-round selection rate, averaged over clients.
    pub fn mean_selected(&self) -> f64 {
        let total: usize = self.outcomes.iter().map(|o| o.selected.len()).sum();
        total as f64 / self.len().max(1) as f64
    }

    pub fn forced_rounds(&self) -> usize {
        self.outcomes.iter().filter(|o| o.forced).count()
    }
}

/// Draws `n` dataset sizes from a Zipf law with exponent `a` on
/// `[1, ZIPF_SUPPORT_MAX]`, each raised to at least `d_min`.
pub fn zipf_dataset_sizes(n: usize, a: f64, d_min: u64, seed: RngSeed) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(a > 1.0) {
        return Err(invalid(format!("zipf shape must exceed 1, got {a}")));
    }
    if d_min == 0 {
        return Err(invalid("d_min must be at least 1"));
    }
    let law = Zipf::new(ZIPF_SUPPORT_MAX as f64, a).map_err(|e| invalid(e.to_string()))?;
    let mut rng = seed.rng();
    Ok((0..n)
        .map(|_| (law.sample(&mut rng) as u64).max(d_min))
        .collect())
}
