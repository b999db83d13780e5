//! Empirical selection skew along a training run.

use aoi_select::fedsim::{run_federated, Heterogeneity, LrSchedule, SyntheticTaskSpec, TrainingConfig};
use aoi_select::metrics::estimate_selection_skew;
use aoi_select::policies::PolicySpec;
use aoi_select::RngSeed;

fn main() -> aoi_select::Result<()> {
    let task = SyntheticTaskSpec::new(40, 5, Heterogeneity::Dirichlet { alpha: 0.5 }, 1.0).build(RngSeed::new(4))?;
    let policy = PolicySpec::markov_optimal(40, 8, 10)?;
    let mut cfg = TrainingConfig::new(3, 300, LrSchedule::Decay { eta0: 0.05, rate: 0.995 });
    cfg.record_models = true;
    let trace = run_federated(&task, &policy, &cfg)?;
    let skew = estimate_selection_skew(&task, &trace.outcomes, &trace.models, &task.theta_star, task.local_optima())?;
    println!("rho_under {:.4} rho_over {:.4} ({} rounds skipped)", skew.rho_under, skew.rho_over, skew.skipped.len());
    for t in (0..300).step_by(50) {
        println!("  round {t:>3}: rho {:?} rho* {:?}", skew.rho_t[t], skew.rho_star_t[t]);
    }
    Ok(())
}
