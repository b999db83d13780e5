//! Exact analysis of the per-client age chain.
//!
//! A client at age `a` is selected with probability `p_a`; selection sends it
//! back to age 0, otherwise it moves to `a + 1`, saturating at the maximum age
//! `m'`. The gap between consecutive selections (the peak age `X`) then has a
//! law made of a finite head on `1..=m'+1` followed by a geometric tail with
//! rate `p_{m'}`, so every moment here is computed in closed form.

pub mod oracle;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngSeed;

/// Selection probability per age state, `p_0..=p_{m'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MarkovChainSpec {
    p: Vec<f64>,
}

impl MarkovChainSpec {
    /// Validates that every entry lies in `[0, 1]`.
    ///
    /// A zero `p_{m'}` is accepted here; the analysis functions reject it when
    /// the maximum-age state is actually reachable.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("chain needs at least one age state"));
        }
        if let Some((a, &pa)) = p.iter().enumerate().find(|(_, &x)| !(0.0..=1.0).contains(&x)) {
            return Err(invalid(format!("p_{a} = {pa} is not a probability")));
        }
        Ok(Self { p })
    }

    /// Chain with the same selection probability at every age.
    pub fn flat(m_prime: usize, prob: f64) -> Result<Self> {
        Self::new(vec![prob; m_prime + 1])
    }

    pub fn m_prime(&self) -> usize {
        self.p.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Selection probability for a client of the given age.
    pub fn prob_at(&self, age: usize) -> Option<f64> {
        self.p.get(age).copied()
    }

    /// `s_k = prod_{j<k} (1 - p_j)` for `k = 0..=m'`: the probability of
    /// reaching age `k` without being selected.
    fn survival(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.p.len());
        let mut acc = 1.0;
        for &pj in &self.p {
            s.push(acc);
            acc *= 1.0 - pj;
        }
        s
    }

    /// True when the saturating state is reachable and never left.
    fn absorbing(&self, survival: &[f64]) -> bool {
        let last = self.m_prime();
        self.p[last] == 0.0 && survival[last] > 0.0
    }
}

impl TryFrom<Vec<f64>> for MarkovChainSpec {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<MarkovChainSpec> for Vec<f64> {
    fn from(chain: MarkovChainSpec) -> Self {
        chain.p
    }
}

/// Long-run occupancy of each age state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

impl StationaryDistribution {
    /// Probability of being at age 0, i.e. the per-round selection rate.
    pub fn selection_rate(&self) -> f64 {
        self.pi[0]
    }

    /// `sum_a pi_a p_a`; equals `pi_0` for a stationary chain.
    pub fn average_selection_probability(&self, chain: &MarkovChainSpec) -> f64 {
        self.pi.iter().zip(chain.probs()).map(|(pi, p)| pi * p).sum()
    }
}

/// Computes the stationary distribution from the closed-form renewal
/// expressions.
pub fn stationary_distribution(chain: &MarkovChainSpec) -> Result<StationaryDistribution> {
    let s = chain.survival();
    if chain.absorbing(&s) {
        return Err(Error::NoStationaryDistribution);
    }
    let last = chain.m_prime();
    let tail = if s[last] == 0.0 { 0.0 } else { s[last] / chain.p[last] };
    let denom: f64 = s[..last].iter().sum::<f64>() + tail;
    let mut pi: Vec<f64> = s[..last].iter().map(|sk| sk / denom).collect();
    pi.push(tail / denom);
    Ok(StationaryDistribution { pi })
}

/// Law of the gap `X` between consecutive selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAgeDistribution {
    /// `P(X = k)` for `k = 1..=m'+1` (index `k - 1`).
    pub head: Vec<f64>,
    /// Geometric continuation rate `p_{m'}` used for `k > m' + 1`.
    pub tail_rate: f64,
    /// `P(X > m')`, the probability of reaching the saturating state.
    pub tail_reach: f64,
    pub mean: f64,
    pub variance: f64,
}

impl PeakAgeDistribution {
    fn m_prime(&self) -> usize {
        self.head.len() - 1
    }

    /// `P(X = k)` for any `k >= 1`.
    pub fn pmf(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if k <= self.head.len() {
            return self.head[k - 1];
        }
        let extra = (k - 1 - self.m_prime()) as i32;
        self.tail_reach * (1.0 - self.tail_rate).powi(extra) * self.tail_rate
    }

    /// `P(X <= k)`.
    pub fn cdf(&self, k: usize) -> f64 {
        if k <= self.head.len() {
            return self.head[..k].iter().sum();
        }
        let beyond = (k - self.head.len()) as i32;
        // mass at m'+1 is already in the head; the tail past k is geometric
        let head_total: f64 = self.head.iter().sum();
        let remaining_after_head = self.tail_reach * (1.0 - self.tail_rate);
        head_total + remaining_after_head * (1.0 - (1.0 - self.tail_rate).powi(beyond))
    }

    /// Head mass plus the closed-form tail mass.
    pub fn total_mass(&self) -> f64 {
        self.head.iter().sum::<f64>() + self.tail_reach * (1.0 - self.tail_rate)
    }

    /// Support of the law when it is finite, `None` when the tail is live.
    pub fn finite_support(&self) -> Option<Vec<usize>> {
        if self.tail_reach > 0.0 && self.tail_rate < 1.0 {
            return None;
        }
        Some(
            self.head
                .iter()
                .enumerate()
                .filter(|(_, &h)| h > 0.0)
                .map(|(k, _)| k + 1)
                .collect(),
        )
    }
}

/// Builds the peak-age law with exact mean and variance.
pub fn peak_age_distribution(chain: &MarkovChainSpec) -> Result<PeakAgeDistribution> {
    let s = chain.survival();
    if chain.absorbing(&s) {
        return Err(Error::InfiniteMean);
    }
    let m_prime = chain.m_prime();
    let head: Vec<f64> = (0..=m_prime).map(|a| chain.p[a] * s[a]).collect();
    let reach = s[m_prime];
    let rate = chain.p[m_prime];

    // X = k w.p. head[k-1] for k <= m', otherwise X = m' + G with G ~ Geom(rate).
    let mut mean: f64 = (1..=m_prime).map(|k| k as f64 * head[k - 1]).sum();
    let tail_mean = if reach > 0.0 { m_prime as f64 + 1.0 / rate } else { 0.0 };
    mean += reach * tail_mean;

    let mut variance: f64 = (1..=m_prime)
        .map(|k| (k as f64 - mean).powi(2) * head[k - 1])
        .sum();
    if reach > 0.0 {
        let geom_var = (1.0 - rate) / (rate * rate);
        variance += reach * (geom_var + (tail_mean - mean).powi(2));
    }

    Ok(PeakAgeDistribution {
        head,
        tail_rate: rate,
        tail_reach: reach,
        mean,
        variance,
    })
}

/// `(E[X], Var[X])` of the peak age.
pub fn peak_age_moments(chain: &MarkovChainSpec) -> Result<(f64, f64)> {
    let law = peak_age_distribution(chain)?;
    Ok((law.mean, law.variance))
}

/// Which branch of the optimal-chain closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `m' <= floor(n/m) - 1`: only the saturating state selects.
    SmallMaxAge,
    /// `m' >= floor(n/m)`: the chain is (nearly) deterministic.
    LargeMaxAge,
}

/// The variance-minimizing chain for a target selection rate `m/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalMarkovResult {
    pub chain: MarkovChainSpec,
    pub min_variance: f64,
    pub regime: Regime,
    /// Fractional part of `n/m`; only meaningful for [`Regime::LargeMaxAge`].
    pub c: f64,
}

fn check_rate(n: usize, m: usize, m_prime: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if m_prime < 1 {
        return Err(invalid("maximum age m' must be at least 1"));
    }
    Ok(())
}

/// Small-`m'` branch: `p = [0, .., 0, 1/(n/m - m')]`.
pub(crate) fn small_max_age_chain(n: usize, m: usize, m_prime: usize) -> (Vec<f64>, f64) {
    // n/m - m' and n/m - m' - 1 as exact integer numerators over m
    let gap = n as f64 - (m_prime * m) as f64;
    let mut p = vec![0.0; m_prime + 1];
    p[m_prime] = m as f64 / gap;
    let variance = (gap / m as f64) * ((gap - m as f64) / m as f64);
    (p, variance)
}

/// Large-`m'` branch with `i = floor(n/m)`: `p_{i-1} = i + 1 - n/m`, `p_a = 1`
/// for `a >= i`, zero below.
pub(crate) fn large_max_age_chain(n: usize, m: usize, m_prime: usize) -> (Vec<f64>, f64, f64) {
    let i = n / m;
    let c = (n % m) as f64 / m as f64;
    let mut p = vec![0.0; m_prime + 1];
    p[i - 1] = 1.0 - c;
    for pa in &mut p[i.min(m_prime + 1)..] {
        *pa = 1.0;
    }
    (p, c * (1.0 - c), c)
}

/// Closed-form variance-minimizing selection probabilities subject to a
/// steady-state selection rate of `m/n`.
pub fn optimal_markov_chain(n: usize, m: usize, m_prime: usize) -> Result<OptimalMarkovResult> {
    check_rate(n, m, m_prime)?;
    let result = if m_prime + 1 <= n / m {
        let (p, min_variance) = small_max_age_chain(n, m, m_prime);
        OptimalMarkovResult {
            chain: MarkovChainSpec::new(p)?,
            min_variance,
            regime: Regime::SmallMaxAge,
            c: n as f64 / m as f64 - (n / m) as f64,
        }
    } else {
        let (p, min_variance, c) = large_max_age_chain(n, m, m_prime);
        OptimalMarkovResult {
            chain: MarkovChainSpec::new(p)?,
            min_variance,
            regime: Regime::LargeMaxAge,
            c,
        }
    };
    if result.min_variance < 0.0 {
        log::warn!(
            "closed-form minimum variance is negative ({}) for n={n}, m={m}, m'={m_prime}",
            result.min_variance
        );
    }
    Ok(result)
}

/// Tolerance on `pi_0` for the monotone calibration.
pub const CALIBRATION_TOLERANCE: f64 = 1e-9;
const CALIBRATION_MAX_ITER: usize = 200;

fn ramp(m_prime: usize, beta: f64) -> Vec<f64> {
    (0..=m_prime)
        .map(|a| beta * (a + 1) as f64 / (m_prime + 1) as f64)
        .collect()
}

fn ramp_rate(m_prime: usize, beta: f64) -> f64 {
    // the ramp never has p_{m'} = 0 for beta > 0
    let chain = MarkovChainSpec { p: ramp(m_prime, beta) };
    stationary_distribution(&chain).map_or(0.0, |s| s.pi[0])
}

/// Strictly increasing chain `p_a = beta (a+1)/(m'+1)` with `beta` tuned by
/// bisection so that `pi_0 = m/n`.
pub fn calibrate_monotone_chain(n: usize, m: usize, m_prime: usize) -> Result<MarkovChainSpec> {
    check_rate(n, m, m_prime)?;
    if m == n {
        return Err(invalid("monotone calibration needs m < n"));
    }
    let target = m as f64 / n as f64;
    let max_rate = ramp_rate(m_prime, 1.0);
    if target > max_rate {
        return Err(Error::InfeasibleCalibration {
            target,
            min: 0.0,
            max: max_rate,
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut beta = hi;
    for _ in 0..CALIBRATION_MAX_ITER {
        beta = 0.5 * (lo + hi);
        let rate = ramp_rate(m_prime, beta);
        if (rate - target).abs() < 1e-14 {
            break;
        }
        if rate < target {
            lo = beta;
        } else {
            hi = beta;
        }
    }
    let chain = MarkovChainSpec::new(ramp(m_prime, beta))?;
    let achieved = stationary_distribution(&chain)?.pi[0];
    if (achieved - target).abs() > CALIBRATION_TOLERANCE {
        return Err(Error::InfeasibleCalibration {
            target,
            min: 0.0,
            max: max_rate,
        });
    }
    Ok(chain)
}

/// Empirical statistics of a simulated single-client age process.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSimulation {
    pub renewals: usize,
    pub steps: usize,
    pub mean: f64,
    /// Sample variance of the observed gaps.
    pub variance: f64,
    /// Fraction of steps spent in each age state.
    pub occupancy: Vec<f64>,
}

/// Runs one client's age chain, starting just after a selection, until
/// `renewals` selections have occurred.
pub fn simulate_chain(chain: &MarkovChainSpec, renewals: usize, seed: RngSeed) -> Result<ChainSimulation> {
    if renewals == 0 {
        return Err(invalid("need at least one renewal"));
    }
    let s = chain.survival();
    if chain.absorbing(&s) {
        return Err(Error::InfiniteMean);
    }
    let mut rng = seed.rng();
    let m_prime = chain.m_prime();
    let mut visits = vec![0u64; m_prime + 1];
    let (mut age, mut gap, mut steps) = (0usize, 0u64, 0usize);
    let (mut count, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    while count < renewals {
        visits[age] += 1;
        steps += 1;
        gap += 1;
        if rng.random::<f64>() < chain.p[age] {
            count += 1;
            let x = gap as f64;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
            gap = 0;
            age = 0;
        } else {
            age = (age + 1).min(m_prime);
        }
    }
    let variance = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
    Ok(ChainSimulation {
        renewals,
        steps,
        mean,
        variance,
        occupancy: visits.iter().map(|&v| v as f64 / steps as f64).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(p: &[f64]) -> MarkovChainSpec {
        MarkovChainSpec::new(p.to_vec()).unwrap()
    }

    /// Power iteration on the explicit transition matrix, independent of the
    /// closed form.
    fn power_iterate(chain: &MarkovChainSpec) -> Vec<f64> {
        let k = chain.probs().len();
        let mut v = vec![1.0 / k as f64; k];
        for _ in 0..100_000 {
            let mut next = vec![0.0; k];
            for a in 0..k {
                let p = chain.probs()[a];
                next[0] += v[a] * p;
                next[(a + 1).min(k - 1)] += v[a] * (1.0 - p);
            }
            let diff: f64 = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).sum();
            v = next;
            if diff < 1e-15 {
                break;
            }
        }
        v
    }

    #[test]
    fn stationary_matches_power_iteration() {
        let c = chain(&[0.0, 0.0, 0.0, 0.5]);
        let pi = stationary_distribution(&c).unwrap().pi;
        for (a, b) in pi.iter().zip([0.2, 0.2, 0.2, 0.4]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let oracle = power_iterate(&c);
        for (a, b) in pi.iter().zip(&oracle) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_state_chain() {
        for x in [0.1, 0.5, 1.0] {
            let pi = stationary_distribution(&chain(&[x])).unwrap().pi;
            assert_eq!(pi, vec![1.0]);
        }
    }

    #[test]
    fn always_selected_at_age_zero() {
        // later states are unreachable, so their probabilities do not matter
        for tail in [0.0, 0.3] {
            let pi = stationary_distribution(&chain(&[1.0, tail, tail])).unwrap().pi;
            assert_eq!(pi, vec![1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn absorbing_max_age_rejected() {
        let c = chain(&[0.2, 0.0]);
        assert!(matches!(stationary_distribution(&c), Err(Error::NoStationaryDistribution)));
        assert!(matches!(peak_age_distribution(&c), Err(Error::InfiniteMean)));
    }

    #[test]
    fn shifted_geometric_peak_age() {
        let law = peak_age_distribution(&chain(&[0.0, 0.0, 0.0, 0.5])).unwrap();
        assert_abs_diff_eq!(law.pmf(4), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.pmf(5), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(law.mean, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.variance, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.total_mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.cdf(6), 0.875, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_renewal() {
        let law = peak_age_distribution(&chain(&[1.0])).unwrap();
        assert_eq!(law.pmf(1), 1.0);
        assert_eq!(law.mean, 1.0);
        assert_eq!(law.variance, 0.0);
    }

    #[test]
    fn flat_chain_is_geometric() {
        let (mean, var) = peak_age_moments(&MarkovChainSpec::flat(10, 0.15).unwrap()).unwrap();
        assert_abs_diff_eq!(mean, 100.0 / 15.0, epsilon = 1e-9);
        // n(n-m)/m^2 with n = 100, m = 15
        assert_abs_diff_eq!(var, 100.0 * 85.0 / 225.0, epsilon = 1e-9);
    }

    #[test]
    fn optimal_chain_large_max_age() {
        let opt = optimal_markov_chain(100, 15, 10).unwrap();
        assert_eq!(opt.regime, Regime::LargeMaxAge);
        let expect = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / 3.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        for (a, b) in opt.chain.probs().iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(opt.min_variance, 2.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(opt.c, 2.0 / 3.0, epsilon = 1e-12);
        let law = peak_age_distribution(&opt.chain).unwrap();
        assert_eq!(law.finite_support(), Some(vec![6, 7]));
        assert_abs_diff_eq!(law.pmf(6), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.pmf(7), 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.mean, 20.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(law.variance, 2.0 / 9.0, epsilon = 1e-12);
        let pi0 = stationary_distribution(&opt.chain).unwrap().pi[0];
        assert_abs_diff_eq!(pi0, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn optimal_chain_small_max_age() {
        let opt = optimal_markov_chain(100, 15, 5).unwrap();
        assert_eq!(opt.regime, Regime::SmallMaxAge);
        assert_abs_diff_eq!(opt.chain.probs()[5], 0.6, epsilon = 1e-15);
        assert!(opt.chain.probs()[..5].iter().all(|&p| p == 0.0));
        assert_abs_diff_eq!(opt.min_variance, 10.0 / 9.0, epsilon = 1e-12);
        let (mean, var) = peak_age_moments(&opt.chain).unwrap();
        assert_abs_diff_eq!(mean, 20.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 10.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn full_participation_is_deterministic() {
        let opt = optimal_markov_chain(10, 10, 1).unwrap();
        assert_eq!(opt.chain.probs(), &[1.0, 1.0]);
        assert_eq!(opt.min_variance, 0.0);
    }

    #[test]
    fn optimal_rejects_bad_parameters() {
        assert!(optimal_markov_chain(10, 11, 2).is_err());
        assert!(optimal_markov_chain(10, 3, 0).is_err());
        assert!(optimal_markov_chain(10, 0, 2).is_err());
    }

    #[test]
    fn branches_agree_at_the_boundary() {
        // n/m integral and m' = n/m - 1: both formulas give the same chain.
        for (n, m) in [(12, 4), (10, 5), (100, 20)] {
            let m_prime = n / m - 1;
            if m_prime < 1 {
                continue;
            }
            let (p_small, v_small) = small_max_age_chain(n, m, m_prime);
            let (p_large, v_large, _) = large_max_age_chain(n, m, m_prime);
            assert_eq!(p_small, p_large);
            assert_eq!(v_small, 0.0);
            assert_eq!(v_large, 0.0);
        }
    }

    #[test]
    fn monotone_calibration_two_states() {
        // p = [b/2, b]; E[X] = 1 + (1 - b/2)/b = 2  =>  b = 2/3
        let c = calibrate_monotone_chain(2, 1, 1).unwrap();
        assert_abs_diff_eq!(c.probs()[0], 1.0 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(c.probs()[1], 2.0 / 3.0, epsilon = 1e-8);
        let pi0 = stationary_distribution(&c).unwrap().pi[0];
        assert_abs_diff_eq!(pi0, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn monotone_calibration_section_v() {
        let c = calibrate_monotone_chain(100, 15, 10).unwrap();
        assert!(c.probs().windows(2).all(|w| w[0] < w[1]));
        assert!(c.probs().iter().all(|&p| p > 0.0 && p <= 1.0));
        let pi0 = stationary_distribution(&c).unwrap().pi[0];
        assert_abs_diff_eq!(pi0, 0.15, epsilon = 1e-9);
    }

    #[test]
    fn monotone_calibration_infeasible() {
        // the steepest ramp with m' = 1 is [0.5, 1], whose rate is 2/3
        match calibrate_monotone_chain(10, 9, 1) {
            Err(Error::InfeasibleCalibration { max, .. }) => {
                assert_abs_diff_eq!(max, 2.0 / 3.0, epsilon = 1e-12)
            }
            other => panic!("expected infeasible calibration, got {other:?}"),
        }
    }

    #[test]
    fn simulation_of_deterministic_chain() {
        let sim = simulate_chain(&chain(&[1.0]), 1000, RngSeed::new(1)).unwrap();
        assert_eq!(sim.mean, 1.0);
        assert_eq!(sim.variance, 0.0);
        assert_eq!(sim.occupancy, vec![1.0]);
    }

    #[test]
    fn simulation_occupancy_matches_stationary() {
        let c = chain(&[0.0, 0.0, 0.0, 0.5]);
        let sim = simulate_chain(&c, 1_000_000, RngSeed::new(3)).unwrap();
        for (a, b) in sim.occupancy.iter().zip([0.2, 0.2, 0.2, 0.4]) {
            assert_abs_diff_eq!(*a, b, epsilon = 0.002);
        }
        assert_abs_diff_eq!(sim.mean, 5.0, epsilon = 0.01);
        assert_abs_diff_eq!(sim.variance, 2.0, epsilon = 0.02);
    }

    #[test]
    fn chain_rejects_non_probabilities() {
        assert!(MarkovChainSpec::new(vec![]).is_err());
        assert!(MarkovChainSpec::new(vec![0.5, 1.5]).is_err());
        assert!(MarkovChainSpec::new(vec![f64::NAN]).is_err());
    }
}
