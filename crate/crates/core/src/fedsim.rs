//! Federated averaging over synthetic quadratic objectives.
//!
//! Each client owns `F_i(theta) = 1/2 (theta - c_i)^T H_i (theta - c_i)` with a
//! diagonal positive-definite `H_i`, so the global optimum, the local optima and
//! every constant appearing in the convergence analysis are known exactly.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::policies::PolicySpec;
use crate::population::{ClientPopulation, Importance, RoundOutcome};
use crate::rng::{label, RngSeed};

/// How client optima are spread around the common center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heterogeneity {
    /// Centers drawn from one isotropic Gaussian around the common center.
    Iid,
    /// Center offsets follow Dirichlet(`alpha`) mixture weights over the
    /// coordinates; smaller `alpha` means more dissimilar clients.
    Dirichlet { alpha: f64 },
}

/// Parameters of a synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub n: usize,
    pub dim: usize,
    pub heterogeneity: Heterogeneity,
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// Lower end of the curvature range.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Upper end of the curvature range.
    #[serde(default = "default_l")]
    pub l_smooth: f64,
}

fn default_spread() -> f64 {
    1.0
}
fn default_mu() -> f64 {
    0.5
}
fn default_l() -> f64 {
    2.0
}

impl SyntheticTaskSpec {
    pub fn new(n: usize, dim: usize, heterogeneity: Heterogeneity, spread: f64) -> Self {
        Self {
            n,
            dim,
            heterogeneity,
            spread,
            mu: default_mu(),
            l_smooth: default_l(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(invalid("task needs n >= 1 and dim >= 1"));
        }
        if let Heterogeneity::Dirichlet { alpha } = self.heterogeneity {
            if !(alpha > 0.0) {
                return Err(invalid(format!("dirichlet alpha must be positive, got {alpha}")));
            }
        }
        if !(self.spread >= 0.0) {
            return Err(invalid("spread must be non-negative"));
        }
        if !(self.mu > 0.0 && self.mu <= self.l_smooth) {
            return Err(invalid("need 0 < mu <= l_smooth"));
        }
        Ok(())
    }

    /// Draws the task.
    pub fn build(&self, seed: RngSeed) -> Result<FLTask> {
        self.validate()?;
        let mut rng = seed.derive(label::TASK, 0).rng();
        let base: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let curvature = if self.mu < self.l_smooth {
            Some(Uniform::new_inclusive(self.mu, self.l_smooth).map_err(|e| invalid(e.to_string()))?)
        } else {
            None
        };
        let curvatures: Vec<Vec<f64>> = (0..self.n)
            .map(|_| {
                (0..self.dim)
                    .map(|_| curvature.map_or(self.mu, |u| u.sample(&mut rng)))
                    .collect()
            })
            .collect();
        let centers = match self.heterogeneity {
            Heterogeneity::Iid => (0..self.n)
                .map(|_| {
                    base.iter()
                        .map(|b| b + self.spread * rng.sample::<f64, _>(StandardNormal))
                        .collect()
                })
                .collect(),
            Heterogeneity::Dirichlet { alpha } => {
                let gamma = Gamma::new(alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
                let k = self.dim as f64;
                (0..self.n)
                    .map(|_| {
                        let raw: Vec<f64> = (0..self.dim).map(|_| gamma.sample(&mut rng)).collect();
                        let total: f64 = raw.iter().sum();
                        base.iter()
                            .zip(&raw)
                            .map(|(b, g)| {
                                let w = if total > 0.0 { g / total } else { 1.0 / k };
                                b + self.spread * (k * w - 1.0)
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        FLTask::new(centers, curvatures, vec![1; self.n], Importance::DataProportional)
    }
}

/// Builds a synthetic task with the default curvature range `[0.5, 2]`.
pub fn make_synthetic_task(
    n: usize,
    dim: usize,
    heterogeneity: Heterogeneity,
    spread: f64,
    seed: RngSeed,
) -> Result<FLTask> {
    SyntheticTaskSpec::new(n, dim, heterogeneity, spread).build(seed)
}

/// A federated objective `F = sum_i q_i F_i` with exact constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FLTask {
    centers: Vec<Vec<f64>>,
    curvatures: Vec<Vec<f64>>,
    sizes: Vec<u64>,
    importance: Vec<f64>,
    /// Largest curvature over all clients and coordinates.
    pub l_smooth: f64,
    /// Smallest curvature over all clients and coordinates.
    pub mu: f64,
    /// Bound on the squared exact-gradient norm inside the trust region.
    pub g2: f64,
    pub theta_star: Vec<f64>,
    /// `F(theta*) - sum_k q_k F_k(theta_k*)`, which is `F(theta*)` here.
    pub gamma_gap: f64,
    /// Trust-region radius `10 |theta*| + 10`.
    pub radius: f64,
}

impl FLTask {
    pub fn new(
        centers: Vec<Vec<f64>>,
        curvatures: Vec<Vec<f64>>,
        sizes: Vec<u64>,
        importance: Importance,
    ) -> Result<Self> {
        let n = centers.len();
        if n == 0 || curvatures.len() != n || sizes.len() != n {
            return Err(invalid("centers, curvatures and sizes must have the same non-zero length"));
        }
        let dim = centers[0].len();
        if dim == 0
            || centers.iter().any(|c| c.len() != dim)
            || curvatures.iter().any(|h| h.len() != dim)
        {
            return Err(invalid("inconsistent model dimension"));
        }
        if curvatures.iter().flatten().any(|&h| !(h > 0.0)) {
            return Err(invalid("curvatures must be positive"));
        }
        let pop = ClientPopulation::with_importance(sizes.clone(), importance)?;
        let q = pop.importance().to_vec();

        // weighted-harmonic combination per coordinate
        let theta_star: Vec<f64> = (0..dim)
            .map(|j| {
                let (num, den) = (0..n).fold((0.0, 0.0), |(num, den), i| {
                    let w = q[i] * curvatures[i][j];
                    (num + w * centers[i][j], den + w)
                });
                num / den
            })
            .collect();

        let flat = curvatures.iter().flatten();
        let l_smooth = flat.clone().copied().fold(f64::MIN, f64::max);
        let mu = flat.copied().fold(f64::MAX, f64::min);
        let radius = 10.0 * norm(&theta_star) + 10.0;
        let g2 = (0..n)
            .map(|i| {
                let li = curvatures[i].iter().copied().fold(f64::MIN, f64::max);
                (li * (radius + norm(&centers[i]))).powi(2)
            })
            .fold(0.0, f64::max);

        let mut task = Self {
            centers,
            curvatures,
            sizes,
            importance: q,
            l_smooth,
            mu,
            g2,
            theta_star,
            gamma_gap: 0.0,
            radius,
        };
        task.gamma_gap = task.global_loss(&task.theta_star);
        Ok(task)
    }

    /// Same objectives with new dataset sizes and data-proportional importance.
    pub fn with_sizes(&self, sizes: Vec<u64>) -> Result<Self> {
        Self::new(self.centers.clone(), self.curvatures.clone(), sizes, Importance::DataProportional)
    }

    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    /// Per-client optima `theta_k* = c_k`.
    pub fn local_optima(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn curvatures(&self) -> &[Vec<f64>] {
        &self.curvatures
    }

    pub fn local_loss(&self, client: usize, theta: &[f64]) -> f64 {
        0.5 * theta
            .iter()
            .zip(&self.centers[client])
            .zip(&self.curvatures[client])
            .map(|((x, c), h)| h * (x - c) * (x - c))
            .sum::<f64>()
    }

    pub fn global_loss(&self, theta: &[f64]) -> f64 {
        (0..self.n())
            .map(|i| self.importance[i] * self.local_loss(i, theta))
            .sum()
    }

    /// `F(theta) - F(theta*)`.
    pub fn loss_gap(&self, theta: &[f64]) -> f64 {
        self.global_loss(theta) - self.gamma_gap
    }

    /// Exact gradient of `F_client` written into `out`.
    pub fn local_gradient(&self, client: usize, theta: &[f64], out: &mut [f64]) {
        for (((g, x), c), h) in out
            .iter_mut()
            .zip(theta)
            .zip(&self.centers[client])
            .zip(&self.curvatures[client])
        {
            *g = h * (x - c);
        }
    }

    /// Global gradient `sum_i q_i grad F_i`.
    pub fn global_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.dim()];
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.n() {
            self.local_gradient(i, theta, &mut g);
            for (t, gi) in total.iter_mut().zip(&g) {
                *t += self.importance[i] * gi;
            }
        }
        total
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Learning-rate schedule indexed by round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    /// `eta_t = eta0 * rate^t`.
    Decay { eta0: f64, rate: f64 },
    /// `eta_t = 1 / (mu (t + shift))`.
    Inverse { mu: f64, shift: f64 },
}

impl LrSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LrSchedule::Decay { eta0, rate } => eta0 * rate.powi(t as i32),
            LrSchedule::Inverse { mu, shift } => 1.0 / (mu * (t as f64 + shift)),
        }
    }

    /// The inverse schedule with shift `4K(K+1)L/mu` used by the convergence
    /// bound.
    pub fn for_bound(task: &FLTask, local_steps: usize) -> Self {
        let k = local_steps as f64;
        LrSchedule::Inverse {
            mu: task.mu,
            shift: 4.0 * k * (k + 1.0) * task.l_smooth / task.mu,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LrSchedule::Decay { eta0, rate } => eta0 > 0.0 && rate > 0.0,
            LrSchedule::Inverse { mu, shift } => mu > 0.0 && shift > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("learning rate must stay positive"))
        }
    }
}

/// Federated training knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    /// Local SGD steps per round (`K`).
    pub local_steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub rounds: usize,
    pub lr_schedule: LrSchedule,
    /// Per-coordinate gradient-noise standard deviation at batch size one.
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Loss gap used for `rounds_to_target`.
    #[serde(default = "default_target")]
    pub target_gap: f64,
    /// Selection-only warm-up rounds before training; defaults to the
    /// policy's burn-in.
    #[serde(default)]
    pub burn_in: Option<usize>,
    /// Keep every pre-round global model in the trace.
    #[serde(default)]
    pub record_models: bool,
}

fn default_batch() -> usize {
    1
}
fn default_target() -> f64 {
    1e-3
}

impl TrainingConfig {
    pub fn new(local_steps: usize, rounds: usize, lr_schedule: LrSchedule) -> Self {
        Self {
            local_steps,
            batch_size: 1,
            rounds,
            lr_schedule,
            noise_sigma: 0.0,
            seed: 0,
            target_gap: default_target(),
            burn_in: None,
            record_models: false,
        }
    }

    /// Standard deviation of the injected noise per coordinate.
    pub fn noise_std(&self) -> f64 {
        self.noise_sigma / (self.batch_size as f64).sqrt()
    }

    /// `sigma^2 = dim * noise_std^2`, the exact stochastic-gradient variance.
    pub fn gradient_variance(&self, dim: usize) -> f64 {
        dim as f64 * self.noise_std().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.local_steps == 0 {
            return Err(invalid("local_steps must be at least 1"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(invalid("noise_sigma must be non-negative"));
        }
        self.lr_schedule.validate()
    }
}

/// `K` noisy gradient steps from `theta_global`; returns
/// `theta - eta_t * (sum of the K stochastic gradients)`.
pub fn local_update<R: Rng + ?Sized>(
    theta_global: &[f64],
    task: &FLTask,
    client: usize,
    cfg: &TrainingConfig,
    t: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if client >= task.n() {
        return Err(invalid(format!("client {client} out of range")));
    }
    let eta = cfg.lr_schedule.at(t);
    let noise_std = cfg.noise_std();
    let normal = Normal::new(0.0, noise_std).map_err(|e| invalid(e.to_string()))?;
    let dim = task.dim();
    let mut y = theta_global.to_vec();
    let mut g = vec![0.0; dim];
    let mut grad_sum = vec![0.0; dim];
    for _ in 0..cfg.local_steps {
        task.local_gradient(client, &y, &mut g);
        for j in 0..dim {
            let gj = if noise_std > 0.0 { g[j] + normal.sample(rng) } else { g[j] };
            grad_sum[j] += gj;
            y[j] -= eta * gj;
        }
    }
    Ok(theta_global
        .iter()
        .zip(&grad_sum)
        .map(|(x, s)| x - eta * s)
        .collect())
}

/// Weighted sum of the selected clients' models, reduced in ascending client
/// order.
pub fn aggregate(locals: &[(usize, Vec<f64>)], outcome: &RoundOutcome) -> Result<Vec<f64>> {
    let dim = locals
        .first()
        .map(|(_, v)| v.len())
        .ok_or_else(|| Error::InvalidOutcome("no local models".into()))?;
    let mut theta = vec![0.0; dim];
    for (client, w) in outcome.iter() {
        let (_, model) = locals
            .iter()
            .find(|(i, _)| *i == client)
            .ok_or_else(|| Error::InvalidOutcome(format!("missing local model for client {client}")))?;
        for (t, x) in theta.iter_mut().zip(model) {
            *t += w * x;
        }
    }
    Ok(theta)
}

/// Metrics after one round of training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// `F(theta^{t+1}) - F*`.
    pub loss_gap: f64,
    /// `|theta^{t+1} - theta*|^2`.
    pub dist2: f64,
    pub selected_count: usize,
}

/// Output of [`run_federated`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub initial_gap: f64,
    pub rounds: Vec<RoundRecord>,
    pub outcomes: Vec<RoundOutcome>,
    /// Pre-round global models `theta^0..theta^{T-1}`; empty unless
    /// `record_models` is set.
    pub models: Vec<Vec<f64>>,
    pub final_theta: Vec<f64>,
    /// Number of rounds after which the loss gap first fell to the target.
    pub rounds_to_target: Option<usize>,
}

impl TrainingTrace {
    pub fn final_gap(&self) -> f64 {
        self.rounds.last().map_or(self.initial_gap, |r| r.loss_gap)
    }
}

/// Runs federated averaging from `theta^0 = 0`.
pub fn run_federated(task: &FLTask, policy: &PolicySpec, cfg: &TrainingConfig) -> Result<TrainingTrace> {
    cfg.validate()?;
    policy.validate(task.n())?;
    let seed = RngSeed::new(cfg.seed);
    let cap = policy.age_cap();
    let mut pop = ClientPopulation::from_sizes(task.sizes().to_vec())?;

    let burn_in = cfg.burn_in.unwrap_or_else(|| policy.default_burn_in());
    for r in 0..burn_in {
        let mut rng = seed.derive(label::SELECT, r as u64).rng();
        let outcome = policy.select(&pop, 0, &mut rng)?;
        pop.advance_ages(&outcome, cap)?;
    }

    let mut theta = vec![0.0; task.dim()];
    let initial_gap = task.loss_gap(&theta);
    let mut trace = TrainingTrace {
        initial_gap,
        rounds: Vec::with_capacity(cfg.rounds),
        outcomes: Vec::with_capacity(cfg.rounds),
        models: Vec::new(),
        final_theta: Vec::new(),
        rounds_to_target: None,
    };
    for t in 0..cfg.rounds {
        let mut rng = seed.derive(label::SELECT, (burn_in + t) as u64).rng();
        let outcome = policy.select(&pop, t, &mut rng)?;
        let round_seed = seed.derive(label::LOCAL, t as u64);
        let locals = outcome
            .selected
            .iter()
            .map(|&i| {
                let mut rng = round_seed.derive(label::LOCAL, i as u64).rng();
                local_update(&theta, task, i, cfg, t, &mut rng).map(|v| (i, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let next = aggregate(&locals, &outcome)?;
        let size = norm(&next);
        if size > task.radius {
            return Err(Error::TrustRegion {
                round: t,
                norm: size,
                radius: task.radius,
            });
        }
        if cfg.record_models {
            trace.models.push(std::mem::replace(&mut theta, next));
        } else {
            theta = next;
        }
        pop.advance_ages(&outcome, cap)?;

        let gap = task.loss_gap(&theta);
        if trace.rounds_to_target.is_none() && gap <= cfg.target_gap {
            trace.rounds_to_target = Some(t + 1);
        }
        trace.rounds.push(RoundRecord {
            round: t,
            loss_gap: gap,
            dist2: dist2(&theta, &task.theta_star),
            selected_count: outcome.selected.len(),
        });
        trace.outcomes.push(outcome);
    }
    trace.final_theta = theta;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_task() -> FLTask {
        make_synthetic_task(6, 3, Heterogeneity::Dirichlet { alpha: 0.5 }, 1.0, RngSeed::new(1)).unwrap()
    }

    #[test]
    fn homogeneous_objectives_have_zero_gap() {
        let task = make_synthetic_task(5, 4, Heterogeneity::Iid, 0.0, RngSeed::new(2)).unwrap();
        assert_abs_diff_eq!(task.gamma_gap, 0.0, epsilon = 1e-15);
        for c in task.local_optima() {
            for (a, b) in c.iter().zip(&task.theta_star) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn theta_star_zeroes_the_gradient() {
        let task = small_task();
        let g = task.global_gradient(&task.theta_star);
        assert!(norm(&g) <= 1e-10);
    }

    #[test]
    fn theta_star_is_a_minimum() {
        let task = small_task();
        let f_star = task.global_loss(&task.theta_star);
        let mut rng = RngSeed::new(3).rng();
        for _ in 0..100 {
            let probe: Vec<f64> = (0..task.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert!(task.global_loss(&probe) >= f_star);
        }
    }

    #[test]
    fn smaller_alpha_means_larger_gap() {
        let spec = |alpha| SyntheticTaskSpec::new(50, 10, Heterogeneity::Dirichlet { alpha }, 1.0);
        let skewed = spec(0.3).build(RngSeed::new(4)).unwrap();
        let mild = spec(10.0).build(RngSeed::new(4)).unwrap();
        assert!(skewed.gamma_gap > mild.gamma_gap, "{} vs {}", skewed.gamma_gap, mild.gamma_gap);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(make_synthetic_task(5, 2, Heterogeneity::Dirichlet { alpha: 0.0 }, 1.0, RngSeed::new(0)).is_err());
    }

    #[test]
    fn noiseless_single_step_is_exact_gradient_step() {
        let task = small_task();
        let cfg = TrainingConfig::new(1, 1, LrSchedule::Decay { eta0: 0.1, rate: 1.0 });
        let theta = vec![0.3, -0.2, 1.0];
        let mut rng = RngSeed::new(5).rng();
        let out = local_update(&theta, &task, 2, &cfg, 0, &mut rng).unwrap();
        let mut g = vec![0.0; 3];
        task.local_gradient(2, &theta, &mut g);
        for j in 0..3 {
            assert_abs_diff_eq!(out[j], theta[j] - 0.1 * g[j], epsilon = 1e-15);
        }
    }

    #[test]
    fn local_optimum_is_fixed_point() {
        let task = small_task();
        let cfg = TrainingConfig::new(5, 1, LrSchedule::Decay { eta0: 0.1, rate: 1.0 });
        let c = task.local_optima()[1].clone();
        let mut rng = RngSeed::new(6).rng();
        let out = local_update(&c, &task, 1, &cfg, 0, &mut rng).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn aggregate_midpoint() {
        let outcome = RoundOutcome::new(0, vec![0, 1], vec![0.5, 0.5]).unwrap();
        let theta = aggregate(&[(0, vec![0.0]), (1, vec![2.0])], &outcome).unwrap();
        assert_eq!(theta, vec![1.0]);
    }

    #[test]
    fn aggregate_missing_model() {
        let outcome = RoundOutcome::new(0, vec![0, 1], vec![0.5, 0.5]).unwrap();
        assert!(aggregate(&[(0, vec![0.0])], &outcome).is_err());
    }

    #[test]
    fn one_round_trace() {
        let task = small_task();
        let cfg = TrainingConfig::new(2, 1, LrSchedule::Decay { eta0: 0.1, rate: 0.998 });
        let trace = run_federated(&task, &PolicySpec::random_weighted(2), &cfg).unwrap();
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.outcomes.len(), 1);
    }

    #[test]
    fn full_participation_gradient_descent_contracts() {
        let task = make_synthetic_task(8, 5, Heterogeneity::Iid, 1.0, RngSeed::new(7)).unwrap();
        let mut cfg = TrainingConfig::new(1, 200, LrSchedule::Decay { eta0: 0.9 / task.l_smooth, rate: 1.0 });
        cfg.record_models = true;
        let trace = run_federated(&task, &PolicySpec::random_weighted(8), &cfg).unwrap();
        let mut prev = task.loss_gap(&trace.models[0]);
        for r in &trace.rounds {
            assert!(r.loss_gap <= prev + 1e-15, "{} > {prev}", r.loss_gap);
            prev = r.loss_gap;
        }
        assert!(prev < 1e-12);
    }
}
