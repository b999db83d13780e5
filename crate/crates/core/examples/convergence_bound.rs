//! Evaluates the convergence bound and shows how it moves with the
//! weight-variance sum.

use aoi_select::fedsim::{Heterogeneity, LrSchedule, SyntheticTaskSpec};
use aoi_select::markov::optimal_markov_chain;
use aoi_select::metrics::{
    convergence_bound, sigma_markov_exact, sigma_random_weighted_homogeneous, BoundInputs, DriftConstant,
};
use aoi_select::RngSeed;

fn main() -> aoi_select::Result<()> {
    let task = SyntheticTaskSpec::new(100, 20, Heterogeneity::Dirichlet { alpha: 0.3 }, 0.5).build(RngSeed::new(0))?;
    let k = 5;
    let sigma2 = 20.0 * 0.25;
    let base = BoundInputs {
        l_smooth: task.l_smooth,
        mu: task.mu,
        local_steps: k,
        m: 15,
        g2: task.g2 + sigma2,
        sigma2,
        gamma_gap: task.gamma_gap,
        rho_under: 0.6,
        rho_over: 1.6,
        sigma: 0.0,
        theta0_dist2: task.theta_star.iter().map(|v| v * v).sum(),
        drift: DriftConstant::default(),
    };
    if let LrSchedule::Inverse { shift, .. } = LrSchedule::for_bound(&task, k) {
        println!("step-size shift gamma = {shift:.1}");
    }
    let chain = optimal_markov_chain(100, 15, 10)?.chain;
    for (name, sigma) in [
        ("random_weighted", sigma_random_weighted_homogeneous(100, 15)),
        ("markov_optimal", sigma_markov_exact(100, &chain)?),
    ] {
        let inputs = BoundInputs { sigma, ..base.clone() };
        let values: Vec<String> = [100, 1_000, 10_000]
            .iter()
            .map(|&t| convergence_bound(&inputs, t).map(|b| format!("T={t}: {b:.3e}")))
            .collect::<aoi_select::Result<_>>()?;
        println!("{name:<16} Sigma {sigma:.4}  {}", values.join("  "));
    }
    Ok(())
}
