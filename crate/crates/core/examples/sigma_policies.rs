//! Weight-variance sum of each selection policy, exact and simulated, on a
//! homogeneous and a Zipf-sized population.

use aoi_select::metrics::{
    sigma_markov_exact, sigma_monte_carlo, sigma_probabilistic_exact, sigma_random_weighted_exact,
};
use aoi_select::policies::{run_selection, steady_state_start, PolicyKind, PolicySpec};
use aoi_select::population::zipf_dataset_sizes;
use aoi_select::{ClientPopulation, RngSeed};

fn report(label: &str, pop: &ClientPopulation, m: usize) -> aoi_select::Result<()> {
    println!("{label}");
    let n = pop.len();
    for kind in PolicyKind::ALL {
        let policy = PolicySpec::build(kind, n, m, 10)?;
        let exact = match (&policy.chain, kind) {
            (Some(chain), _) => Some(sigma_markov_exact(n, chain)?),
            (None, PolicyKind::Probabilistic) => Some(sigma_probabilistic_exact(&pop.size_probabilities(), m)?),
            // exact enumeration is only feasible for small populations
            _ => sigma_random_weighted_exact(pop.sizes(), m).ok(),
        };
        // when n/m is an integer the optimal chain is deterministic, so clients
        // that all start at age 0 stay in lockstep. Stationary ages spread them
        // over random phases, which then stay fixed for the whole run.
        let start = steady_state_start(pop, &policy, RngSeed::new(2))?;
        let trace = run_selection(&start, &policy, 20_000, 0, RngSeed::new(3))?;
        let est = sigma_monte_carlo(&trace)?;
        let exact = exact.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!("  {kind:<16} simulated {:.4} +- {:.4}  exact {exact}", est.sigma, est.stderr);
    }
    Ok(())
}

fn main() -> aoi_select::Result<()> {
    report("homogeneous n=100 m=15", &ClientPopulation::homogeneous(100, 1)?, 15)?;
    let sizes = zipf_dataset_sizes(100, 2.0, 1, RngSeed::new(0))?;
    report("zipf(2) sizes, n=100 m=15", &ClientPopulation::from_sizes(sizes)?, 15)?;
    let sizes = zipf_dataset_sizes(12, 2.0, 1, RngSeed::new(0))?;
    report("zipf(2) sizes, n=12 m=3", &ClientPopulation::from_sizes(sizes)?, 3)
}
