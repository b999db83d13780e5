//! Distribution of gaps between consecutive selections of a client.

use aoi_select::metrics::inter_selection_histogram;
use aoi_select::policies::{run_selection, PolicyKind, PolicySpec};
use aoi_select::{ClientPopulation, RngSeed};

fn main() -> aoi_select::Result<()> {
    let pop = ClientPopulation::homogeneous(100, 1)?;
    for kind in [PolicyKind::RandomWeighted, PolicyKind::MarkovOptimal, PolicyKind::MarkovMonotone] {
        let policy = PolicySpec::build(kind, 100, 15, 10)?;
        let trace = run_selection(&pop, &policy, 10_000, policy.default_burn_in(), RngSeed::new(7))?;
        let hist = inter_selection_histogram(&trace);
        println!("{kind}: mean gap {:.3}, censored {}", hist.mean(), hist.censored);
        for (gap, count) in hist.counts.iter().take(12) {
            println!("  {gap:>3} {:.4} ({count})", hist.frequency(*gap));
        }
    }
    Ok(())
}
