//! Federated training on a heterogeneous quadratic task under two policies.

use aoi_select::fedsim::{run_federated, Heterogeneity, LrSchedule, SyntheticTaskSpec, TrainingConfig};
use aoi_select::policies::PolicySpec;
use aoi_select::RngSeed;

fn main() -> aoi_select::Result<()> {
    let task = SyntheticTaskSpec::new(100, 20, Heterogeneity::Dirichlet { alpha: 0.3 }, 0.5).build(RngSeed::new(0))?;
    println!("local-global gap {:.3}, G^2 bound {:.1}", task.gamma_gap, task.g2);
    let policies = [PolicySpec::random_weighted(15), PolicySpec::markov_optimal(100, 15, 10)?];
    for policy in &policies {
        let mut cfg = TrainingConfig::new(5, 3000, LrSchedule::Decay { eta0: 0.1, rate: 0.997 });
        cfg.noise_sigma = 0.5;
        let mut reached = Vec::new();
        for seed in 0..5 {
            cfg.seed = seed;
            let trace = run_federated(&task, policy, &cfg)?;
            reached.push(trace.rounds_to_target);
            if seed == 0 {
                for r in trace.rounds.iter().step_by(500) {
                    println!("  {} round {:>4} gap {:.3e}", policy.kind, r.round, r.loss_gap);
                }
            }
        }
        println!("{}: rounds to gap 1e-3 per seed {reached:?}", policy.kind);
    }
    Ok(())
}
