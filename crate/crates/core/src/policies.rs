//! Client-selection policies.
//!
//! * random weighted: `m` clients uniformly without replacement, weighted by
//!   dataset size;
//! * probabilistic: `m` draws with replacement proportional to dataset size,
//!   weight `l/m` for a client drawn `l` times;
//! * Markov: every client flips its own coin with the probability attached to
//!   its current age, selected clients share the weight uniformly.
//!
//! Markov policies come in an optimal (closed-form minimum variance) and a
//! monotone (linear ramp) flavour; both are calibrated to a steady-state
//! selection rate of `m/n`.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::markov::{self, MarkovChainSpec};
use crate::population::{ClientPopulation, RoundOutcome, SelectionTrace};
use crate::rng::{label, RngSeed};

/// Tolerance on the steady-state selection rate of a Markov policy.
pub const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    RandomWeighted,
    #[serde(alias = "probabilistic_by_size")]
    Probabilistic,
    MarkovOptimal,
    MarkovMonotone,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::RandomWeighted,
        PolicyKind::Probabilistic,
        PolicyKind::MarkovOptimal,
        PolicyKind::MarkovMonotone,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PolicyKind::RandomWeighted => "random_weighted",
            PolicyKind::Probabilistic => "probabilistic",
            PolicyKind::MarkovOptimal => "markov_optimal",
            PolicyKind::MarkovMonotone => "markov_monotone",
        }
    }

    pub fn is_markov(self) -> bool {
        matches!(self, PolicyKind::MarkovOptimal | PolicyKind::MarkovMonotone)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Post-processing of a Markov selection to force `|S| = m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactM {
    /// Keep the random selection size.
    #[default]
    Off,
    /// Drop uniformly random selected clients down to `m`.
    Trim,
    /// Add the oldest unselected clients up to `m`, ties broken at random.
    Pad,
}

/// A fully resolved policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<MarkovChainSpec>,
    #[serde(default)]
    pub exact_m: ExactM,
}

impl PolicySpec {
    pub fn random_weighted(m: usize) -> Self {
        Self {
            kind: PolicyKind::RandomWeighted,
            m,
            chain: None,
            exact_m: ExactM::Off,
        }
    }

    pub fn probabilistic(m: usize) -> Self {
        Self {
            kind: PolicyKind::Probabilistic,
            m,
            chain: None,
            exact_m: ExactM::Off,
        }
    }

    /// Markov policy with the variance-minimizing chain for `m/n`.
    pub fn markov_optimal(n: usize, m: usize, m_prime: usize) -> Result<Self> {
        let opt = markov::optimal_markov_chain(n, m, m_prime)?;
        Ok(Self {
            kind: PolicyKind::MarkovOptimal,
            m,
            chain: Some(opt.chain),
            exact_m: ExactM::Off,
        })
    }

    /// Markov policy with a strictly increasing chain calibrated to `m/n`.
    pub fn markov_monotone(n: usize, m: usize, m_prime: usize) -> Result<Self> {
        Ok(Self {
            kind: PolicyKind::MarkovMonotone,
            m,
            chain: Some(markov::calibrate_monotone_chain(n, m, m_prime)?),
            exact_m: ExactM::Off,
        })
    }

    /// Builds any of the four policies for a population of `n` clients.
    pub fn build(kind: PolicyKind, n: usize, m: usize, m_prime: usize) -> Result<Self> {
        match kind {
            PolicyKind::RandomWeighted => Ok(Self::random_weighted(m)),
            PolicyKind::Probabilistic => Ok(Self::probabilistic(m)),
            PolicyKind::MarkovOptimal => Self::markov_optimal(n, m, m_prime),
            PolicyKind::MarkovMonotone => Self::markov_monotone(n, m, m_prime),
        }
    }

    pub fn with_exact_m(mut self, exact_m: ExactM) -> Self {
        self.exact_m = exact_m;
        self
    }

    pub fn tag(&self) -> &'static str {
        self.kind.tag()
    }

    /// Maximum age tracked for this policy (zero for the memoryless ones).
    pub fn m_prime(&self) -> usize {
        self.chain.as_ref().map_or(0, MarkovChainSpec::m_prime)
    }

    /// Saturation point for tracked ages: the chain's maximum age for Markov
    /// policies, unbounded otherwise.
    pub fn age_cap(&self) -> usize {
        self.chain.as_ref().map_or(usize::MAX, MarkovChainSpec::m_prime)
    }

    /// Default number of discarded rounds before steady-state measurements.
    pub fn default_burn_in(&self) -> usize {
        if self.kind.is_markov() {
            10 * (self.m_prime() + 1)
        } else {
            0
        }
    }

    /// Checks the policy against a population of `n` clients.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m > n {
            return Err(invalid(format!("m = {} must lie in 1..={n}", self.m)));
        }
        match (&self.chain, self.kind.is_markov()) {
            (Some(chain), true) => {
                let pi0 = markov::stationary_distribution(chain)?.pi[0];
                let target = self.m as f64 / n as f64;
                if (pi0 - target).abs() > RATE_TOLERANCE {
                    return Err(invalid(format!(
                        "chain selection rate {pi0} differs from m/n = {target}"
                    )));
                }
                Ok(())
            }
            (None, true) => Err(invalid("Markov policy without a chain")),
            (Some(_), false) => Err(invalid("memoryless policy carries a chain")),
            (None, false) => Ok(()),
        }
    }

    /// Selects the clients for one round.
    pub fn select<R: Rng + ?Sized>(
        &self,
        pop: &ClientPopulation,
        round: usize,
        rng: &mut R,
    ) -> Result<RoundOutcome> {
        let mut outcome = match self.kind {
            PolicyKind::RandomWeighted => select_random_weighted(pop, self.m, rng)?,
            PolicyKind::Probabilistic => select_probabilistic(pop, self.m, rng)?,
            PolicyKind::MarkovOptimal | PolicyKind::MarkovMonotone => {
                let chain = self.chain.as_ref().ok_or_else(|| invalid("Markov policy without a chain"))?;
                let raw = select_markov(pop, chain, rng)?;
                enforce_exact_m(raw, pop, self.m, self.exact_m, rng)?
            }
        };
        outcome.round = round;
        Ok(outcome)
    }
}

/// Uniform `m`-subset weighted by dataset size.
pub fn select_random_weighted<R: Rng + ?Sized>(
    pop: &ClientPopulation,
    m: usize,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let n = pop.len();
    if m == 0 || m > n {
        return Err(invalid(format!("cannot select {m} of {n} clients")));
    }
    let mut selected = index::sample(rng, n, m).into_vec();
    selected.sort_unstable();
    let sizes = pop.sizes();
    let total: f64 = selected.iter().map(|&i| sizes[i] as f64).sum();
    let weights = selected.iter().map(|&i| sizes[i] as f64 / total).collect();
    Ok(RoundOutcome {
        round: 0,
        selected,
        weights,
        forced: false,
    })
}

/// `m` size-proportional draws with replacement; weight `l/m`.
pub fn select_probabilistic<R: Rng + ?Sized>(
    pop: &ClientPopulation,
    m: usize,
    rng: &mut R,
) -> Result<RoundOutcome> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let law = WeightedIndex::new(pop.sizes()).map_err(|e| invalid(e.to_string()))?;
    let mut draws = vec![0usize; pop.len()];
    for _ in 0..m {
        draws[law.sample(rng)] += 1;
    }
    let (selected, weights) = draws
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0)
        .map(|(i, &l)| (i, l as f64 / m as f64))
        .unzip();
    Ok(RoundOutcome {
        round: 0,
        selected,
        weights,
        forced: false,
    })
}

/// Independent per-client selection with probability `p_{A_i}`, uniform
/// weights, and one uniformly random forced client if nobody is selected.
pub fn select_markov<R: Rng + ?Sized>(
    pop: &ClientPopulation,
    chain: &MarkovChainSpec,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let mut selected = Vec::new();
    for (i, &age) in pop.ages().iter().enumerate() {
        let p = chain.prob_at(age).ok_or_else(|| {
            Error::InvalidState(format!(
                "client {i} has age {age} beyond the maximum {}",
                chain.m_prime()
            ))
        })?;
        if rng.random::<f64>() < p {
            selected.push(i);
        }
    }
    let forced = selected.is_empty();
    if forced {
        selected.push(rng.random_range(0..pop.len()));
    }
    let mut outcome = RoundOutcome::uniform(0, selected)?;
    outcome.forced = forced;
    Ok(outcome)
}

/// Probability that no client selects itself given the current ages.
pub fn forced_selection_probability(pop: &ClientPopulation, chain: &MarkovChainSpec) -> f64 {
    pop.ages()
        .iter()
        .map(|&a| 1.0 - chain.prob_at(a).unwrap_or(1.0))
        .product()
}

fn enforce_exact_m<R: Rng + ?Sized>(
    outcome: RoundOutcome,
    pop: &ClientPopulation,
    m: usize,
    mode: ExactM,
    rng: &mut R,
) -> Result<RoundOutcome> {
    let forced = outcome.forced;
    let mut selected = outcome.selected;
    match mode {
        ExactM::Off => {}
        ExactM::Trim if selected.len() > m => {
            let keep = index::sample(rng, selected.len(), m);
            selected = keep.into_iter().map(|k| selected[k]).collect();
        }
        ExactM::Pad if selected.len() < m => {
            let mut chosen = vec![false; pop.len()];
            for &i in &selected {
                chosen[i] = true;
            }
            // random keys break ties between equal ages
            let mut rest: Vec<(usize, u64, usize)> = (0..pop.len())
                .filter(|&i| !chosen[i])
                .map(|i| (pop.ages()[i], rng.random::<u64>(), i))
                .collect();
            rest.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            selected.extend(rest.iter().take(m - selected.len()).map(|r| r.2));
        }
        ExactM::Trim | ExactM::Pad => {}
    }
    let mut out = RoundOutcome::uniform(outcome.round, selected)?;
    out.forced = forced;
    Ok(out)
}

/// Runs `burn_in + rounds` selection rounds from `pop`'s current ages and
/// returns the last `rounds` outcomes.
///
/// Round `r` (counting burn-in) draws from its own derived stream of `seed`.
pub fn run_selection(
    pop: &ClientPopulation,
    policy: &PolicySpec,
    rounds: usize,
    burn_in: usize,
    seed: RngSeed,
) -> Result<SelectionTrace> {
    Ok(run_selection_with_state(pop, policy, rounds, burn_in, seed)?.0)
}

/// Like [`run_selection`], also returning the population after the last
/// round.
pub fn run_selection_with_state(
    pop: &ClientPopulation,
    policy: &PolicySpec,
    rounds: usize,
    burn_in: usize,
    seed: RngSeed,
) -> Result<(SelectionTrace, ClientPopulation)> {
    if rounds == 0 {
        return Err(invalid("need at least one round"));
    }
    policy.validate(pop.len())?;
    let m_prime = policy.age_cap();
    let mut state = pop.clone();
    if state.ages().iter().any(|&a| a > m_prime) {
        let capped = state.ages().iter().map(|&a| a.min(m_prime)).collect();
        state = state.with_ages(capped)?;
    }
    let mut outcomes = Vec::with_capacity(rounds);
    for r in 0..burn_in + rounds {
        let mut rng = seed.derive(label::SELECT, r as u64).rng();
        let mut outcome = policy.select(&state, r.saturating_sub(burn_in), &mut rng)?;
        state.advance_ages(&outcome, m_prime)?;
        if r >= burn_in {
            outcome.round = r - burn_in;
            outcomes.push(outcome);
        }
    }
    let trace = SelectionTrace::new(policy.tag(), pop.len(), outcomes)?;
    Ok((trace, state))
}

/// Draws every client's age independently from the chain's stationary law.
pub fn stationary_ages(
    pop: &ClientPopulation,
    chain: &MarkovChainSpec,
    seed: RngSeed,
) -> Result<ClientPopulation> {
    let pi = markov::stationary_distribution(chain)?.pi;
    let law = WeightedIndex::new(&pi).map_err(|e| invalid(e.to_string()))?;
    let mut rng = seed.derive(label::INIT, 0).rng();
    let ages = (0..pop.len()).map(|_| law.sample(&mut rng)).collect();
    pop.clone().with_ages(ages)
}

/// Starting population for steady-state runs: Markov policies draw ages from
/// the stationary law, the others keep `pop` unchanged.
pub fn steady_state_start(pop: &ClientPopulation, policy: &PolicySpec, seed: RngSeed) -> Result<ClientPopulation> {
    match &policy.chain {
        Some(chain) => stationary_ages(pop, chain, seed),
        None => Ok(pop.clone()),
    }
}
