//! Closed-form spot price from the current dividend level and information value.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::market::{tail_integrals, weight_from_noise, MarketParams, PathBundle, RateCurve};
use crate::ou::{OuParams, Schedule};

/// Spot price split into the annuity valuation of the current dividend and the
/// contribution of the information process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpotQuote {
    pub t: f64,
    pub price: f64,
    pub annuity_term: f64,
    pub info_term: f64,
}

impl SpotQuote {
    fn new(t: f64, annuity_term: f64, info_term: f64) -> Self {
        SpotQuote {
            t,
            price: annuity_term + info_term,
            annuity_term,
            info_term,
        }
    }

    /// Gaussian dividends allow negative prices; they are reported, never clamped.
    pub fn is_negative(&self) -> bool {
        self.price < 0.0
    }
}

fn check_time(t: f64, xi: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(ModelError::TimeOrder(format!("t = {t} must be finite and >= 0")));
    }
    if t == 0.0 && xi != 0.0 {
        return Err(ModelError::param("xi", "the information process starts at 0"));
    }
    Ok(())
}

/// Spot price under a constant short rate.
///
/// At `t = 0` the information term vanishes and the quote is the
/// unconditional annuity value `(κθ + rx)/(r(r+κ))`.
pub fn spot_price(mp: &MarketParams, t: f64, x: f64, xi: f64) -> Result<SpotQuote> {
    check_time(t, xi)?;
    let z = mp.weight(t);
    let k = mp.ou.kappa;
    let annuity = (1.0 - z) * (k * mp.ou.theta + mp.r * x) / (mp.r * (mp.r + k));
    let info = if xi == 0.0 {
        0.0
    } else {
        (mp.r * t).exp() * mp.info_loading(t) * xi
    };
    Ok(SpotQuote::new(t, annuity, info))
}

/// Spot price under a piecewise-constant deterministic short rate.
pub fn spot_price_general(ou: &OuParams, sigma: f64, curve: &RateCurve, t: f64, x: f64, xi: f64) -> Result<SpotQuote> {
    check_time(t, xi)?;
    let tail = tail_integrals(&Schedule::constant(ou), curve, t)?;
    let z = weight_from_noise(sigma, t, tail.noise_integral);
    let q = tail.h;
    let annuity = (1.0 - z) * (ou.theta * tail.p + q * (x - ou.theta)) / tail.big_p;
    let loading = sigma * tail.noise_integral / (1.0 + sigma * sigma * t * tail.noise_integral);
    let info = if xi == 0.0 { 0.0 } else { loading * xi / tail.big_p };
    Ok(SpotQuote::new(t, annuity, info))
}

/// Integrating factor, `δ_t` and weight for time-dependent κ, θ, ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleBundle {
    pub t: f64,
    pub f: f64,
    pub delta: f64,
    pub z: f64,
}

pub fn schedule_bundle(schedule: &Schedule, curve: &RateCurve, sigma: f64, t: f64) -> Result<ScheduleBundle> {
    schedule.validate()?;
    let tail = tail_integrals(schedule, curve, t)?;
    let f = schedule.integrated_kappa(t);
    Ok(ScheduleBundle {
        t,
        f,
        delta: (-f).exp() * tail.h,
        z: weight_from_noise(sigma, t, tail.noise_integral),
    })
}

/// Spot price with piecewise-constant κ, θ, ψ and short rate.
pub fn spot_price_inhom(
    schedule: &Schedule,
    curve: &RateCurve,
    sigma: f64,
    t: f64,
    x: f64,
    xi: f64,
) -> Result<SpotQuote> {
    check_time(t, xi)?;
    schedule.validate()?;
    let tail = tail_integrals(schedule, curve, t)?;
    if !(tail.h > 0.0 && tail.h.is_finite()) {
        return Err(ModelError::Degenerate("divergent delta integral".into()));
    }
    let z = weight_from_noise(sigma, t, tail.noise_integral);
    let annuity = (1.0 - z) * (tail.drift_integral + tail.h * x) / tail.big_p;
    let loading = sigma * tail.noise_integral / (1.0 + sigma * sigma * t * tail.noise_integral);
    let info = if xi == 0.0 { 0.0 } else { loading * xi / tail.big_p };
    Ok(SpotQuote::new(t, annuity, info))
}

/// Spot quotes along a simulated bundle.
pub fn spot_path(bundle: &PathBundle, mp: &MarketParams) -> Vec<SpotQuote> {
    bundle
        .times()
        .iter()
        .enumerate()
        .map(|(j, &t)| spot_price(mp, t, bundle.x[j], bundle.xi[j]).expect("bundle times are valid"))
        .collect()
}

pub const SPOT_CSV_HEADER: &str = "t,S,annuity_term,info_term";

pub fn write_spot_csv<W: Write>(quotes: &[SpotQuote], mut w: W) -> io::Result<()> {
    writeln!(w, "{SPOT_CSV_HEADER}")?;
    for q in quotes {
        writeln!(
            w,
            "{},{},{},{}",
            crate::fmt_num(q.t),
            crate::fmt_num(q.price),
            crate::fmt_num(q.annuity_term),
            crate::fmt_num(q.info_term)
        )?;
    }
    Ok(())
}
