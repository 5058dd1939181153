//! Information-based pricing of a storable commodity.
//!
//! The convenience dividend follows an Ornstein–Uhlenbeck process and the
//! market observes a noisy signal of the discounted future dividend flow.
//! Spot, futures and option prices follow in closed form; [`oracle`] checks
//! every closed form against independent Monte Carlo estimates.

pub mod derivatives;
pub mod dynamics;
pub mod error;
pub mod market;
pub mod num;
pub mod oracle;
pub mod ou;
pub mod pricing;
pub mod stats;

pub use derivatives::{
    call_on_futures, call_on_spot, call_surface, conditional_futures_law, conditional_futures_price, futures_price, futures_terminal_law, gaussian_call, gaussian_put,
    price_option, spot_terminal_law, underlying_law, FuturesQuote, GaussianLaw, OptionSpec, SurfacePoint, SurfaceSpec,
    Underlying,
};
pub use dynamics::{innovations_path, martingale_path, sde_compare, volatility_sigma, SdeComparison};
pub use error::{ModelError, Result};
pub use market::{
    simulate_joint, tail_integrals, weight_z_general, DiscountBundle, MarketParams, PathBundle, RateCurve,
    TailIntegrals,
};
pub use oracle::{
    implied_initials, ou_fit, projection_check, regression_price_check, run_suite, CalibrationResult, CheckResult,
    ImpliedInitials, SuiteSettings, VerificationReport,
};
pub use ou::{BridgeState, OuParams, Schedule, TimeGrid};
pub use pricing::{spot_path, spot_price, spot_price_general, spot_price_inhom, SpotQuote};

/// Formats a number for text output using the shortest representation that
/// parses back to the same `f64`, so no precision is lost.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        // keep the sign of negative zero out of output files
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
