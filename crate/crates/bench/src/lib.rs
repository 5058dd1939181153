//! Benchmarks for the pricing engine live in `benches/`.
//!
//! The parameter set shared by the benchmarks is exposed here so that bench
//! targets and ad hoc profiling agree on inputs.

use infoprice_core::{MarketParams, OuParams};

/// Option-surface parameter family used throughout the benchmarks.
pub fn surface_params() -> MarketParams {
    let ou = OuParams::new(0.15, 0.5, 0.15, 0.6).expect("valid OU parameters");
    MarketParams::new(ou, 0.25, 0.05).expect("valid market parameters")
}
