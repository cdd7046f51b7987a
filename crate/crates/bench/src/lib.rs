//! Shared inputs for the benchmarks.

use tvreg::tvar::TvarModel;
use tvreg::DesignSeries;

/// One draw of the Monte Carlo design with unit innovation variance.
pub fn mc_series(t: usize, seed: u64) -> DesignSeries {
    TvarModel::monte_carlo(1.0).and_then(|m| m.simulate(t, seed)).expect("valid design")
}
