//! Age-of-information client selection for federated learning.
//!
//! The crate covers four selection policies (size-weighted sampling without
//! replacement, size-proportional sampling with replacement, and two Markov
//! policies driven by each client's age), the analysis of the age chain
//! (stationary law, peak-age law, the variance-minimizing chain), load-balance
//! metrics over selection traces, and a federated-averaging simulator over
//! quadratic objectives whose optima and constants are known exactly.
//!
//! ```
//! use aoi_select::markov::optimal_markov_chain;
//!
//! let opt = optimal_markov_chain(100, 15, 10).unwrap();
//! assert!((opt.min_variance - 2.0 / 9.0).abs() < 1e-12);
//! ```
//!
//! Every random draw comes from a [`RngSeed`], so identical inputs give
//! identical outputs regardless of thread count.

pub mod error;
pub mod experiment;
pub mod fedsim;
pub mod markov;
pub mod metrics;
pub mod policies;
pub mod population;
pub mod rng;

pub use error::{Error, Result};
pub use markov::MarkovChainSpec;
pub use policies::{PolicyKind, PolicySpec};
pub use population::{ClientPopulation, RoundOutcome, SelectionTrace};
pub use rng::RngSeed;
