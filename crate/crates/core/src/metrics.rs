//! Load-balance analytics over selection traces: aggregation-weight
//! variance, inter-selection gaps, windowed stability, selection skew and the
//! federated-averaging error bound.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, Error, Result};
use crate::fedsim::FLTask;
use crate::markov::{self, MarkovChainSpec, PeakAgeDistribution};
use crate::population::{RoundOutcome, SelectionTrace};

/// Largest population for [`sigma_random_weighted_exact`].
pub const EXACT_ENUMERATION_MAX: usize = 20;

/// Number of batches behind [`SigmaEstimate::stderr`].
pub const SIGMA_BATCHES: usize = 20;

/// Rounds whose skew denominator falls below this are skipped.
pub const SKEW_DENOMINATOR_MIN: f64 = 1e-12;

/// Monte-Carlo estimate of the aggregation-weight variance sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    /// Sample variance of each client's weight, counting unselected rounds as 0.
    pub per_client_var: Vec<f64>,
    /// Second moment of each client's weight.
    pub per_client_gamma: Vec<f64>,
    pub sigma: f64,
    /// Batch-means standard error; NaN when the trace is too short to batch.
    pub stderr: f64,
    pub rounds_used: usize,
}

/// Sums and squared sums of one client's weights over a range of rounds.
fn weight_sums(outcomes: &[RoundOutcome], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s1 = vec![0.0; n];
    let mut s2 = vec![0.0; n];
    for o in outcomes {
        for (i, w) in o.iter() {
            s1[i] += w;
            s2[i] += w * w;
        }
    }
    (s1, s2)
}

fn sample_var(s1: f64, s2: f64, t: usize) -> f64 {
    let t = t as f64;
    ((s2 - s1 * s1 / t) / (t - 1.0)).max(0.0)
}

fn sigma_of(outcomes: &[RoundOutcome], n: usize) -> f64 {
    let (s1, s2) = weight_sums(outcomes, n);
    s1.iter()
        .zip(&s2)
        .map(|(a, b)| sample_var(*a, *b, outcomes.len()))
        .sum()
}

/// Per-client sample variance of the weights, summed over clients.
pub fn sigma_monte_carlo(trace: &SelectionTrace) -> Result<SigmaEstimate> {
    let t = trace.len();
    if t < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 rounds, got {t}")));
    }
    let n = trace.n;
    let (s1, s2) = weight_sums(&trace.outcomes, n);
    let per_client_var: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| sample_var(*a, *b, t)).collect();
    let per_client_gamma: Vec<f64> = s2.iter().map(|b| b / t as f64).collect();
    let sigma = per_client_var.iter().sum();

    let batch = t / SIGMA_BATCHES;
    let stderr = if batch >= 2 {
        let values: Vec<f64> = trace
            .outcomes
            .chunks_exact(batch)
            .take(SIGMA_BATCHES)
            .map(|c| sigma_of(c, n))
            .collect();
        let b = values.len() as f64;
        let mean = values.iter().sum::<f64>() / b;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    } else {
        f64::NAN
    };

    Ok(SigmaEstimate {
        per_client_var,
        per_client_gamma,
        sigma,
        stderr,
        rounds_used: t,
    })
}

/// Running sum of per-client weight variances after each round.
///
/// Entry `t` uses rounds `0..=t`; the first entry is 0.
pub fn sigma_running(trace: &SelectionTrace) -> Vec<f64> {
    let mut s1 = vec![0.0; trace.n];
    let mut total_sq = 0.0; // sum_i s2_i
    let mut total_s1_sq = 0.0; // sum_i s1_i^2
    let mut out = Vec::with_capacity(trace.len());
    for (t, o) in trace.outcomes.iter().enumerate() {
        for (i, w) in o.iter() {
            total_s1_sq += 2.0 * s1[i] * w + w * w;
            s1[i] += w;
            total_sq += w * w;
        }
        let k = (t + 1) as f64;
        out.push(if t == 0 {
            0.0
        } else {
            ((total_sq - total_s1_sq / k) / (k - 1.0)).max(0.0)
        });
    }
    out
}

/// Exact weight-variance sum for size-weighted sampling without replacement,
/// by enumerating every `m`-subset.
pub fn sigma_random_weighted_exact(d: &[u64], m: usize) -> Result<f64> {
    let n = d.len();
    if n > EXACT_ENUMERATION_MAX {
        return Err(Error::UseMonteCarlo { n });
    }
    if n == 0 || m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if d.contains(&0) {
        return Err(invalid("dataset sizes must be positive"));
    }
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut subsets = 0u64;
    for subset in (0..n).combinations(m) {
        let total: f64 = subset.iter().map(|&i| d[i] as f64).sum();
        for &i in &subset {
            let w = d[i] as f64 / total;
            mean[i] += w;
            second[i] += w * w;
        }
        subsets += 1;
    }
    let c = subsets as f64;
    Ok(mean
        .iter()
        .zip(&second)
        .map(|(a, b)| (b / c - (a / c).powi(2)).max(0.0))
        .sum())
}

/// `(1/m - 1/n)`, the homogeneous-size value of
/// [`sigma_random_weighted_exact`].
pub fn sigma_random_weighted_homogeneous(n: usize, m: usize) -> f64 {
    1.0 / m as f64 - 1.0 / n as f64
}

/// `sum_i q_i (1 - q_i) / m` for `m` draws with replacement.
pub fn sigma_probabilistic_exact(q: &[f64], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    if q.is_empty() || q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(invalid("probabilities must lie in [0, 1]"));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("probabilities sum to {total}, not 1")));
    }
    Ok(q.iter().map(|x| x * (1.0 - x)).sum::<f64>() / m as f64)
}

/// `E[1/|S|] - 1/n` with `|S| ~ Binomial(n, p_avg)`, the empty-set mass
/// counted at `|S| = 1`.
pub fn sigma_markov_exact(n: usize, chain: &MarkovChainSpec) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let pi = markov::stationary_distribution(chain)?;
    let p = pi.average_selection_probability(chain);
    Ok(expected_inverse_count(n, p) - 1.0 / n as f64)
}

/// `E[1 / max(S, 1)]` for `S ~ Binomial(n, p)`.
pub(crate) fn expected_inverse_count(n: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 1.0 / n as f64;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut total = (n as f64 * lq).exp();
    for s in 1..=n {
        let log_mass = ln_binomial(n as u64, s as u64) + s as f64 * lp + (n - s) as f64 * lq;
        total += log_mass.exp() / s as f64;
    }
    total
}

/// Pooled histogram of gaps between consecutive selections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub counts: BTreeMap<usize, u64>,
    /// Clients whose last selection was not followed by another one.
    pub censored: u64,
    /// Clients never selected in the trace.
    pub never_selected: u64,
}

impl GapHistogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn frequency(&self, gap: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.counts.get(&gap).copied().unwrap_or(0) as f64 / total as f64
    }

    pub fn mean(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return f64::NAN;
        }
        self.counts.iter().map(|(g, c)| *g as f64 * *c as f64).sum::<f64>() / total as f64
    }

    /// Largest absolute difference between the empirical and the model CDF.
    pub fn ks_distance(&self, law: &PeakAgeDistribution) -> f64 {
        let total = self.total() as f64;
        let Some(&top) = self.counts.keys().next_back() else {
            return 1.0;
        };
        let mut acc = 0.0;
        let mut worst: f64 = 0.0;
        for g in 0..=top {
            acc += self.counts.get(&g).copied().unwrap_or(0) as f64;
            worst = worst.max((acc / total - law.cdf(g)).abs());
        }
        worst.max((1.0 - law.cdf(top)).abs())
    }
}

/// Gaps between consecutive selections of each client, pooled over clients.
pub fn inter_selection_histogram(trace: &SelectionTrace) -> GapHistogram {
    let mut last: Vec<Option<usize>> = vec![None; trace.n];
    let mut hist = GapHistogram::default();
    for o in &trace.outcomes {
        for &i in &o.selected {
            if let Some(prev) = last[i] {
                *hist.counts.entry(o.round - prev).or_insert(0) += 1;
            }
            last[i] = Some(o.round);
        }
    }
    for l in last {
        match l {
            Some(_) => hist.censored += 1,
            None => hist.never_selected += 1,
        }
    }
    hist
}

/// Standard deviation of per-window selection counts divided by the window
/// length.
pub fn windowed_selection_stability(trace: &SelectionTrace, window: usize) -> Result<f64> {
    if window == 0 {
        return Err(invalid("window must be at least 1"));
    }
    let windows = trace.len() / window;
    if windows == 0 {
        return Err(Error::InsufficientData(format!(
            "window {window} exceeds trace length {}",
            trace.len()
        )));
    }
    let n = trace.n;
    let mut counts = vec![0u64; n * windows];
    for o in &trace.outcomes[..windows * window] {
        let w = o.round / window;
        for &i in &o.selected {
            counts[w * n + i] += 1;
        }
    }
    let total = counts.len() as f64;
    if counts.len() < 2 {
        return Ok(0.0);
    }
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / total;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (total - 1.0);
    Ok(var.sqrt() / window as f64)
}

/// Per-round selection skew and its extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewEstimate {
    /// Skew at the current model; `None` for skipped rounds.
    pub rho_t: Vec<Option<f64>>,
    /// Skew at the global optimum; `None` for skipped rounds.
    pub rho_star_t: Vec<Option<f64>>,
    pub rho_under: f64,
    pub rho_over: f64,
    /// Rounds whose current-model denominator vanished.
    pub skipped: Vec<usize>,
}

fn skew_at(
    task: &FLTask,
    outcome: &RoundOutcome,
    theta: &[f64],
    local_optima: &[Vec<f64>],
    baseline: f64,
) -> (f64, f64) {
    let denominator = task.global_loss(theta) - baseline;
    let numerator: f64 = outcome
        .iter()
        .map(|(k, w)| w * (task.local_loss(k, theta) - task.local_loss(k, &local_optima[k])))
        .sum();
    (numerator, denominator)
}

/// Selection skew of each round at the round's global model and at the
/// optimum.
///
/// When the optimum's denominator vanishes in every round (identical client
/// objectives) the upper extreme falls back to the lower one.
pub fn estimate_selection_skew(
    task: &FLTask,
    outcomes: &[RoundOutcome],
    global_models: &[Vec<f64>],
    theta_star: &[f64],
    local_optima: &[Vec<f64>],
) -> Result<SkewEstimate> {
    if outcomes.len() != global_models.len() {
        return Err(invalid(format!(
            "{} outcomes but {} models",
            outcomes.len(),
            global_models.len()
        )));
    }
    if local_optima.len() != task.n() {
        return Err(invalid("one local optimum per client required"));
    }
    let baseline: f64 = (0..task.n())
        .map(|k| task.importance()[k] * task.local_loss(k, &local_optima[k]))
        .sum();

    let mut est = SkewEstimate {
        rho_t: Vec::with_capacity(outcomes.len()),
        rho_star_t: Vec::with_capacity(outcomes.len()),
        rho_under: f64::INFINITY,
        rho_over: f64::NEG_INFINITY,
        skipped: Vec::new(),
    };
    let mut first_failure = None;
    for (t, (outcome, theta)) in outcomes.iter().zip(global_models).enumerate() {
        let (num, den) = skew_at(task, outcome, theta, local_optima, baseline);
        if den < SKEW_DENOMINATOR_MIN {
            log::debug!("round {t}: skew denominator {den:e}, skipped");
            est.skipped.push(t);
            est.rho_t.push(None);
            first_failure.get_or_insert((t, den));
        } else {
            let rho = num / den;
            est.rho_under = est.rho_under.min(rho);
            est.rho_t.push(Some(rho));
        }
        let (num, den) = skew_at(task, outcome, theta_star, local_optima, baseline);
        if den < SKEW_DENOMINATOR_MIN {
            est.rho_star_t.push(None);
        } else {
            let rho = num / den;
            est.rho_over = est.rho_over.max(rho);
            est.rho_star_t.push(Some(rho));
        }
    }
    if !est.rho_under.is_finite() {
        let (round, denominator) = first_failure.unwrap_or((0, 0.0));
        return Err(Error::SkewUndefined { round, denominator });
    }
    if !est.rho_over.is_finite() {
        log::debug!("skew at the optimum undefined in every round; using the lower extreme");
        est.rho_over = est.rho_under;
    }
    Ok(est)
}

/// Which drift constant the bound uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftConstant {
    /// `16 G^2 K m^2 (K + 1) (Sigma + 1)`.
    #[default]
    KTimesKPlusOne,
    /// `16 G^2 K^3 m^2 (Sigma + 1)`.
    KCubed,
}

/// Constants entering the federated-averaging error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub l_smooth: f64,
    pub mu: f64,
    pub local_steps: usize,
    pub m: usize,
    pub g2: f64,
    pub sigma2: f64,
    pub gamma_gap: f64,
    pub rho_under: f64,
    pub rho_over: f64,
    pub sigma: f64,
    pub theta0_dist2: f64,
    #[serde(default)]
    pub drift: DriftConstant,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.local_steps < 2 {
            return Err(invalid("the bound needs at least 2 local steps"));
        }
        let positive = [
            ("l_smooth", self.l_smooth),
            ("mu", self.mu),
            ("g2", self.g2),
            ("sigma2", self.sigma2),
            ("rho_under", self.rho_under),
            ("theta0_dist2", self.theta0_dist2),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(invalid(format!("{name} must be positive, got {v}")));
        }
        if self.m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if !(self.gamma_gap >= 0.0) || !(self.sigma >= 0.0) {
            return Err(invalid("gamma_gap and sigma must be non-negative"));
        }
        if !(self.rho_over >= self.rho_under) {
            return Err(invalid("rho_over must be at least rho_under"));
        }
        Ok(())
    }

    /// `4 K (K + 1) L / mu`.
    pub fn gamma_shift(&self) -> f64 {
        let k = self.local_steps as f64;
        4.0 * k * (k + 1.0) * self.l_smooth / self.mu
    }
}

/// Upper bound on `E[F(theta^T)] - F*` after `rounds` rounds.
pub fn convergence_bound(inputs: &BoundInputs, rounds: usize) -> Result<f64> {
    inputs.validate()?;
    if rounds == 0 {
        return Err(invalid("rounds must be at least 1"));
    }
    let BoundInputs {
        l_smooth: l,
        mu,
        g2,
        sigma2,
        gamma_gap,
        rho_under,
        rho_over,
        sigma,
        theta0_dist2,
        drift,
        ..
    } = *inputs;
    let k = inputs.local_steps as f64;
    let m = inputs.m as f64;
    let gamma = inputs.gamma_shift();
    let drift_factor = match drift {
        DriftConstant::KTimesKPlusOne => k * (k + 1.0),
        DriftConstant::KCubed => k * k * k,
    };
    let noise = 16.0 * g2 * drift_factor * m * m * (sigma + 1.0) + m * k * sigma2;
    let bracket = gamma * theta0_dist2
        + noise / (rho_under * (k - 1.0) * mu * mu)
        + 6.0 * l * gamma_gap / ((k - 1.0) * mu * mu);
    let transient = l / 2.0 * bracket / (rounds as f64 + gamma);
    let bias = k * l / ((k - 1.0) * mu) * gamma_gap * (rho_over / rho_under - 1.0);
    Ok(transient + bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::{run_selection, PolicySpec};
    use crate::population::ClientPopulation;
    use crate::rng::RngSeed;
    use approx::assert_abs_diff_eq;

    fn trace_of(n: usize, outcomes: Vec<RoundOutcome>) -> SelectionTrace {
        SelectionTrace::new("t", n, outcomes).unwrap()
    }

    #[test]
    fn fixed_single_client_has_zero_sigma() {
        let outcomes = (0..10).map(|t| RoundOutcome::uniform(t, vec![3]).unwrap()).collect();
        let est = sigma_monte_carlo(&trace_of(5, outcomes)).unwrap();
        assert_eq!(est.sigma, 0.0);
        assert_eq!(est.rounds_used, 10);
    }

    #[test]
    fn short_trace_rejected() {
        let outcomes = vec![RoundOutcome::uniform(0, vec![0]).unwrap()];
        assert!(matches!(
            sigma_monte_carlo(&trace_of(2, outcomes)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn alternating_clients_by_hand() {
        // client 0 weight alternates 1, 0; sample var over 4 rounds = 1/3
        let outcomes = (0..4)
            .map(|t| RoundOutcome::uniform(t, vec![t % 2]).unwrap())
            .collect();
        let trace = trace_of(2, outcomes);
        let est = sigma_monte_carlo(&trace).unwrap();
        assert_abs_diff_eq!(est.per_client_var[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.sigma, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(est.per_client_gamma[0], 0.5, epsilon = 1e-15);
        let running = sigma_running(&trace);
        assert_abs_diff_eq!(*running.last().unwrap(), est.sigma, epsilon = 1e-12);
        assert_abs_diff_eq!(running[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_weighted_homogeneous_enumeration() {
        let v = sigma_random_weighted_exact(&[5; 10], 3).unwrap();
        assert_abs_diff_eq!(v, 1.0 / 3.0 - 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_random_weighted_exact(&[1, 2, 3], 3).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn random_weighted_three_clients_by_hand() {
        // subsets {0,1}: 1/3, 2/3; {0,2}: 1/4, 3/4; {1,2}: 2/5, 3/5
        let w = [
            [1.0 / 3.0, 2.0 / 3.0, 0.0],
            [1.0 / 4.0, 0.0, 3.0 / 4.0],
            [0.0, 2.0 / 5.0, 3.0 / 5.0],
        ];
        let mut expected = 0.0;
        for i in 0..3 {
            let mean: f64 = w.iter().map(|r| r[i]).sum::<f64>() / 3.0;
            let sq: f64 = w.iter().map(|r| r[i] * r[i]).sum::<f64>() / 3.0;
            expected += sq - mean * mean;
        }
        let v = sigma_random_weighted_exact(&[1, 2, 3], 2).unwrap();
        assert_abs_diff_eq!(v, expected, epsilon = 1e-15);
    }

    #[test]
    fn random_weighted_too_large() {
        assert!(matches!(
            sigma_random_weighted_exact(&[1; 21], 3),
            Err(Error::UseMonteCarlo { n: 21 })
        ));
    }

    #[test]
    fn probabilistic_values() {
        let q = vec![0.01; 100];
        assert_abs_diff_eq!(sigma_probabilistic_exact(&q, 15).unwrap(), 0.066, epsilon = 1e-12);
        let mut point = vec![0.0; 5];
        point[0] = 1.0;
        assert_eq!(sigma_probabilistic_exact(&point, 3).unwrap(), 0.0);
        assert_abs_diff_eq!(sigma_probabilistic_exact(&[0.5, 0.5], 2).unwrap(), 0.25, epsilon = 1e-15);
        assert!(sigma_probabilistic_exact(&[0.5, 0.6], 2).is_err());
    }

    #[test]
    fn probabilistic_two_draws_enumerated() {
        // four equally likely sequences: (0,0), (0,1), (1,0), (1,1)
        let w0 = [1.0, 0.5, 0.5, 0.0];
        let mean = w0.iter().sum::<f64>() / 4.0;
        let var = w0.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(sigma_probabilistic_exact(&[0.5, 0.5], 2).unwrap(), 2.0 * var, epsilon = 1e-15);
    }

    #[test]
    fn markov_sigma_values() {
        let opt = markov::optimal_markov_chain(100, 15, 10).unwrap().chain;
        // binomial sum evaluated independently in double precision
        let v = sigma_markov_exact(100, &opt).unwrap();
        assert_abs_diff_eq!(v, 0.061_028_634_613_472_75, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma_markov_exact(1, &opt).unwrap(), 0.0, epsilon = 1e-15);
        let always = MarkovChainSpec::new(vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(sigma_markov_exact(7, &always).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_count_matches_direct_sum() {
        // n = 3, p = 0.4 by hand: q^3 + 3pq^2 + 3p^2q/2 + p^3/3
        let (p, q) = (0.4f64, 0.6f64);
        let direct = q.powi(3) + 3.0 * p * q * q + 1.5 * p * p * q + p.powi(3) / 3.0;
        assert_abs_diff_eq!(expected_inverse_count(3, p), direct, epsilon = 1e-14);
    }

    #[test]
    fn histogram_by_hand() {
        let rounds = [vec![0], vec![1], vec![0], vec![0, 1]];
        let outcomes = rounds
            .iter()
            .enumerate()
            .map(|(t, s)| RoundOutcome::uniform(t, s.clone()).unwrap())
            .collect();
        let h = inter_selection_histogram(&trace_of(3, outcomes));
        assert_eq!(h.counts.get(&2), Some(&2));
        assert_eq!(h.counts.get(&1), Some(&1));
        assert_eq!(h.censored, 2);
        assert_eq!(h.never_selected, 1);
    }

    #[test]
    fn single_round_histogram_is_empty() {
        let outcomes = vec![RoundOutcome::uniform(0, vec![0, 1]).unwrap()];
        let h = inter_selection_histogram(&trace_of(2, outcomes));
        assert_eq!(h.total(), 0);
        assert_eq!(h.censored, 2);
    }

    #[test]
    fn periodic_trace_has_zero_window_variance() {
        // n/m = 2: optimal chain alternates deterministically
        let pop = ClientPopulation::homogeneous(10, 1).unwrap();
        let policy = PolicySpec::markov_optimal(10, 5, 3).unwrap();
        let trace = run_selection(&pop, &policy, 200, 40, RngSeed::new(1)).unwrap();
        let v = windowed_selection_stability(&trace, 4).unwrap();
        assert!(v < 1e-12, "{v}");
    }

    #[test]
    fn whole_trace_window() {
        let outcomes = (0..6)
            .map(|t| RoundOutcome::uniform(t, vec![0]).unwrap())
            .collect();
        let trace = trace_of(2, outcomes);
        // counts (6, 0): sample var 18, sqrt / 6
        let v = windowed_selection_stability(&trace, 6).unwrap();
        assert_abs_diff_eq!(v, 18f64.sqrt() / 6.0, epsilon = 1e-15);
        assert!(windowed_selection_stability(&trace, 7).is_err());
    }

    fn bound_inputs() -> BoundInputs {
        BoundInputs {
            l_smooth: 2.0,
            mu: 0.5,
            local_steps: 5,
            m: 15,
            g2: 10.0,
            sigma2: 0.5,
            gamma_gap: 0.3,
            rho_under: 0.8,
            rho_over: 1.2,
            sigma: 0.06,
            theta0_dist2: 4.0,
            drift: DriftConstant::default(),
        }
    }

    #[test]
    fn bound_by_hand() {
        let b = bound_inputs();
        let gamma = 4.0 * 5.0 * 6.0 * 2.0 / 0.5;
        let bracket = gamma * 4.0
            + (16.0 * 10.0 * 5.0 * 225.0 * 6.0 * 1.06 + 15.0 * 5.0 * 0.5) / (0.8 * 4.0 * 0.25)
            + 6.0 * 2.0 * 0.3 / (4.0 * 0.25);
        let expected = bracket / (100.0 + gamma) + 5.0 * 2.0 / (4.0 * 0.5) * 0.3 * (1.2 / 0.8 - 1.0);
        assert_abs_diff_eq!(convergence_bound(&b, 100).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn bound_without_gap_has_no_bias() {
        let mut b = bound_inputs();
        b.gamma_gap = 0.0;
        b.rho_over = b.rho_under;
        let a = convergence_bound(&b, 100).unwrap();
        let c = convergence_bound(&b, 1000).unwrap();
        let gamma = b.gamma_shift();
        assert_abs_diff_eq!(a * (100.0 + gamma), c * (1000.0 + gamma), epsilon = 1e-6);
    }

    #[test]
    fn bound_needs_two_local_steps() {
        let mut b = bound_inputs();
        b.local_steps = 1;
        assert!(convergence_bound(&b, 10).is_err());
    }

    #[test]
    fn drift_variants_differ() {
        let mut b = bound_inputs();
        let main = convergence_bound(&b, 10).unwrap();
        b.drift = DriftConstant::KCubed;
        assert!(convergence_bound(&b, 10).unwrap() > main);
    }
}
