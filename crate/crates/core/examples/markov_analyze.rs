//! Variance-minimizing and monotone age chains for a selection rate m/n.
//!
//! cargo run --example markov_analyze -- 100 15 10

use aoi_select::markov::{
    calibrate_monotone_chain, optimal_markov_chain, peak_age_distribution, simulate_chain, stationary_distribution,
    MarkovChainSpec,
};
use aoi_select::RngSeed;

fn describe(name: &str, chain: &MarkovChainSpec) -> aoi_select::Result<()> {
    let pi = stationary_distribution(chain)?;
    let law = peak_age_distribution(chain)?;
    let sim = simulate_chain(chain, 200_000, RngSeed::new(1))?;
    println!("{name}");
    println!("  p      {:.4?}", chain.probs());
    println!("  pi_0   {:.6}", pi.pi[0]);
    println!("  peak age mean {:.4} variance {:.4} (simulated {:.4})", law.mean, law.variance, sim.variance);
    if let Some(support) = law.finite_support() {
        println!("  support {support:?}");
    }
    Ok(())
}

fn main() -> aoi_select::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (n, m, m_prime) = match args[..] {
        [n, m, mp] => (n, m, mp),
        _ => (100, 15, 10),
    };
    let opt = optimal_markov_chain(n, m, m_prime)?;
    println!("n={n} m={m} m'={m_prime}: {:?} regime, minimum variance {:.6}", opt.regime, opt.min_variance);
    describe("optimal", &opt.chain)?;
    match calibrate_monotone_chain(n, m, m_prime) {
        Ok(chain) => describe("monotone", &chain)?,
        Err(e) => println!("monotone: {e}"),
    }
    Ok(())
}
