//! Windowed selection stability: how evenly each policy spreads selections
//! over short horizons.

use aoi_select::metrics::windowed_selection_stability;
use aoi_select::policies::{run_selection, PolicyKind, PolicySpec};
use aoi_select::{ClientPopulation, RngSeed};

fn main() -> aoi_select::Result<()> {
    let pop = ClientPopulation::homogeneous(100, 1)?;
    let windows = [10, 20, 50, 100];
    println!("{:<16}{}", "policy", windows.map(|w| format!("{w:>10}")).concat());
    for kind in PolicyKind::ALL {
        let policy = PolicySpec::build(kind, 100, 15, 10)?;
        let trace = run_selection(&pop, &policy, 2_000, policy.default_burn_in(), RngSeed::new(1))?;
        let mut line = format!("{kind:<16}");
        for w in windows {
            line += &format!("{:>10.5}", windowed_selection_stability(&trace, w)?);
        }
        println!("{line}");
    }
    Ok(())
}

