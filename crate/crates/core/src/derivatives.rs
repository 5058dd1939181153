//! European options on the spot and on futures, priced with the Gaussian
//! (Bachelier-type) call formula, plus futures prices and their laws.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::market::{omega_variance, MarketParams};
use crate::num::{exp_decay_integral, normal_cdf, normal_pdf};

/// Mean and variance of a normally distributed price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(ModelError::param("variance", "must be finite and >= 0"));
        }
        Ok(GaussianLaw { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

fn check_df(df: f64) -> Result<()> {
    if !(df > 0.0 && df <= 1.0) {
        return Err(ModelError::param("df", "discount factor must lie in (0, 1]"));
    }
    Ok(())
}

/// `df · E[(Z − K)⁺]` for `Z ~ N(mean, variance)`.
pub fn gaussian_call(law: &GaussianLaw, strike: f64, df: f64) -> Result<f64> {
    let law = GaussianLaw::new(law.mean, law.variance)?;
    check_df(df)?;
    let m = law.mean - strike;
    if law.variance == 0.0 {
        return Ok(df * m.max(0.0));
    }
    let sd = law.std_dev();
    let d = m / sd;
    Ok(df * (sd * normal_pdf(d) + m * normal_cdf(d)))
}

/// `df · E[(K − Z)⁺]`, the mirrored formula.
pub fn gaussian_put(law: &GaussianLaw, strike: f64, df: f64) -> Result<f64> {
    let law = GaussianLaw::new(law.mean, law.variance)?;
    check_df(df)?;
    let m = strike - law.mean;
    if law.variance == 0.0 {
        return Ok(df * m.max(0.0));
    }
    let sd = law.std_dev();
    let d = m / sd;
    Ok(df * (sd * normal_pdf(d) + m * normal_cdf(d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Underlying {
    Spot,
    Futures { futures_maturity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub strike: f64,
    pub maturity: f64,
    pub underlying: Underlying,
}

impl OptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.maturity > 0.0 && self.maturity.is_finite()) {
            return Err(ModelError::param("maturity", "must be > 0"));
        }
        if !self.strike.is_finite() {
            return Err(ModelError::param("strike", "must be finite"));
        }
        if let Underlying::Futures { futures_maturity } = self.underlying {
            if !(self.maturity <= futures_maturity) {
                return Err(ModelError::TimeOrder(format!(
                    "option maturity {} exceeds futures maturity {futures_maturity}",
                    self.maturity
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuturesQuote {
    pub t: f64,
    pub maturity: f64,
    pub price: f64,
}

/// Law of the spot price `S_T` seen from time 0.
pub fn spot_terminal_law(mp: &MarketParams, maturity: f64) -> Result<GaussianLaw> {
    if !(maturity > 0.0) {
        return Err(ModelError::param("T", "maturity must be > 0"));
    }
    let MarketParams { ou, r, .. } = *mp;
    let rk = r + ou.kappa;
    let mean = (ou.kappa * ou.theta + r * ou.mean(maturity)) / (r * rk);
    let z = mp.weight(maturity);
    // z²e^{2rT}/(σ²T) = z·V_T·e^{2rT}
    let info_noise = z * mp.conditional_variance(maturity) * (2.0 * r * maturity).exp();
    let variance = ou.variance(maturity) / (rk * rk) + z * z * ou.psi * ou.psi / (2.0 * r * rk * rk) + info_noise;
    GaussianLaw::new(mean, variance)
}

/// Call on the spot price.
pub fn call_on_spot(mp: &MarketParams, strike: f64, maturity: f64) -> Result<f64> {
    let law = spot_terminal_law(mp, maturity)?;
    gaussian_call(&law, strike, (-mp.r * maturity).exp())
}

/// Coefficient of `ω_t` in `F_t^T`: `e^{rT}z_T[z_t T + (1−z_t)t]/(σtT)`.
fn futures_omega_loading(mp: &MarketParams, t: f64, maturity: f64) -> f64 {
    let z_t = mp.weight(t);
    (mp.r * maturity).exp() * mp.info_loading(maturity) * (mp.weight_rate(t) * maturity + (1.0 - z_t))
}

fn check_futures_times(t: f64, maturity: f64) -> Result<()> {
    if !(t >= 0.0 && t <= maturity && maturity.is_finite()) {
        return Err(ModelError::TimeOrder(format!("need 0 <= t <= T, got t = {t}, T = {maturity}")));
    }
    Ok(())
}

/// Futures price `F_t^T` given `X_t = x` and `ω_t = omega`.
pub fn futures_price(mp: &MarketParams, t: f64, maturity: f64, x: f64, omega: f64) -> Result<FuturesQuote> {
    check_futures_times(t, maturity)?;
    let MarketParams { ou, r, .. } = *mp;
    let rk = r + ou.kappa;
    let det = (rk * ou.theta + r * (x - ou.theta) * (-ou.kappa * (maturity - t)).exp()) / (r * rk);
    let price = det + futures_omega_loading(mp, t, maturity) * omega;
    Ok(FuturesQuote { t, maturity, price })
}

/// Law of `F_t^T` seen from time 0; `t = 0` gives the degenerate law at `F_0^T`.
pub fn futures_terminal_law(mp: &MarketParams, t: f64, maturity: f64) -> Result<GaussianLaw> {
    check_futures_times(t, maturity)?;
    if !(maturity > 0.0) {
        return Err(ModelError::param("T", "futures maturity must be > 0"));
    }
    let ou = mp.ou;
    let rk = mp.r + ou.kappa;
    let mean = spot_terminal_law(mp, maturity)?.mean;
    let decay = (-ou.kappa * (maturity - t)).exp();
    let loading = futures_omega_loading(mp, t, maturity);
    let variance = decay * decay * ou.variance(t) / (rk * rk) + loading * loading * omega_variance(mp, t);
    GaussianLaw::new(mean, variance)
}

/// Exact `E[S_T | F_t]` coefficient of `ω_t`.
///
/// Unlike [`futures_omega_loading`], this keeps the correlation of `ω_t` with the
/// dividend noise on `[t, T]`, both through `X_T` and through `∫_T^∞ e^{-ru}dβ_u`.
fn conditional_omega_loading(mp: &MarketParams, t: f64, maturity: f64) -> f64 {
    let MarketParams { ou, sigma, r } = *mp;
    if t == 0.0 {
        return 0.0;
    }
    let rk = r + ou.kappa;
    let z_t = mp.weight(t);
    let a_t = sigma * ou.psi * t / rk;
    let a_mat = sigma * ou.psi * maturity / rk;
    // ∫_t^T e^{(κ-r)u} du, scaled by e^{-κT}
    let d = maturity - t;
    let cross = if ou.kappa >= r {
        (-r * maturity).exp() * exp_decay_integral(ou.kappa - r, d)
    } else {
        (-r * t - ou.kappa * d).exp() * exp_decay_integral(r - ou.kappa, d)
    };
    let per_omega = (1.0 - z_t) / t;
    let dividend = ou.psi * a_t * cross * per_omega / rk;
    let tail = a_mat * a_t * (-2.0 * r * maturity).exp() / (2.0 * r) * per_omega;
    dividend + (r * maturity).exp() * mp.info_loading(maturity) * (tail + 1.0 - z_t)
}

/// `E[S_T | F_t]` computed exactly from `X_t = x` and `ω_t = omega`.
///
/// [`futures_price`] follows the published closed form, whose `ω_t` loading
/// omits the dependence of `ω_t` on dividend noise between `t` and `T`. The two
/// agree at `t = 0` and `t = T`; in between only this one is a martingale.
pub fn conditional_futures_price(mp: &MarketParams, t: f64, maturity: f64, x: f64, omega: f64) -> Result<FuturesQuote> {
    check_futures_times(t, maturity)?;
    let MarketParams { ou, r, .. } = *mp;
    let rk = r + ou.kappa;
    let det = (rk * ou.theta + r * (x - ou.theta) * (-ou.kappa * (maturity - t)).exp()) / (r * rk);
    let price = det + conditional_omega_loading(mp, t, maturity) * omega;
    Ok(FuturesQuote { t, maturity, price })
}

/// Law of [`conditional_futures_price`] seen from time 0.
pub fn conditional_futures_law(mp: &MarketParams, t: f64, maturity: f64) -> Result<GaussianLaw> {
    check_futures_times(t, maturity)?;
    if !(maturity > 0.0) {
        return Err(ModelError::param("T", "futures maturity must be > 0"));
    }
    let ou = mp.ou;
    let rk = mp.r + ou.kappa;
    let mean = spot_terminal_law(mp, maturity)?.mean;
    let decay = (-ou.kappa * (maturity - t)).exp();
    let loading = conditional_omega_loading(mp, t, maturity);
    let variance = decay * decay * ou.variance(t) / (rk * rk) + loading * loading * omega_variance(mp, t);
    GaussianLaw::new(mean, variance)
}

/// Call expiring at `t_option` on the futures contract maturing at `futures_maturity`.
pub fn call_on_futures(mp: &MarketParams, strike: f64, t_option: f64, futures_maturity: f64) -> Result<f64> {
    if !(t_option > 0.0) {
        return Err(ModelError::param("maturity", "option maturity must be > 0"));
    }
    if t_option > futures_maturity {
        return Err(ModelError::TimeOrder(format!(
            "option maturity {t_option} exceeds futures maturity {futures_maturity}"
        )));
    }
    let law = futures_terminal_law(mp, t_option, futures_maturity)?;
    gaussian_call(&law, strike, (-mp.r * t_option).exp())
}

/// Law of the option's underlying at expiry.
pub fn underlying_law(mp: &MarketParams, spec: &OptionSpec) -> Result<GaussianLaw> {
    spec.validate()?;
    match spec.underlying {
        Underlying::Spot => spot_terminal_law(mp, spec.maturity),
        Underlying::Futures { futures_maturity } => futures_terminal_law(mp, spec.maturity, futures_maturity),
    }
}

pub fn price_option(mp: &MarketParams, spec: &OptionSpec) -> Result<f64> {
    let law = underlying_law(mp, spec)?;
    gaussian_call(&law, spec.strike, (-mp.r * spec.maturity).exp())
}

/// One cell of the call price surface over (θ, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub s0: f64,
    pub theta: f64,
    pub maturity: f64,
    pub call_price: f64,
}

/// Ranges for [`call_surface`]: θ on `[theta_min, theta_max]` (inclusive, `theta_steps + 1`
/// values) and T on `(0, t_max]` (`t_steps` values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSpec {
    pub strike: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_steps: usize,
    pub t_max: f64,
    pub t_steps: usize,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            strike: 10.0,
            theta_min: 0.3,
            theta_max: 0.8,
            theta_steps: 10,
            t_max: 3.0,
            t_steps: 30,
        }
    }
}

/// Call prices over a (θ, T) grid; `S0` is the time-zero spot implied by each θ.
pub fn call_surface(mp: &MarketParams, spec: &SurfaceSpec) -> Result<Vec<SurfacePoint>> {
    if spec.theta_steps == 0 || spec.t_steps == 0 || !(spec.theta_max >= spec.theta_min) || !(spec.t_max > 0.0) {
        return Err(ModelError::param("surface", "need theta_max >= theta_min, t_max > 0, steps >= 1"));
    }
    let mut out = Vec::with_capacity((spec.theta_steps + 1) * spec.t_steps);
    for i in 0..=spec.theta_steps {
        let theta = spec.theta_min + (spec.theta_max - spec.theta_min) * i as f64 / spec.theta_steps as f64;
        let mut cell = *mp;
        cell.ou.theta = theta;
        cell.validate()?;
        let s0 = cell.initial_value();
        for k in 1..=spec.t_steps {
            let maturity = spec.t_max * k as f64 / spec.t_steps as f64;
            out.push(SurfacePoint {
                s0,
                theta,
                maturity,
                call_price: call_on_spot(&cell, spec.strike, maturity)?,
            });
        }
    }
    Ok(out)
}

pub const SURFACE_CSV_HEADER: &str = "S0,theta,T,call_price";

pub fn write_surface_csv<W: Write>(points: &[SurfacePoint], mut w: W) -> io::Result<()> {
    writeln!(w, "{SURFACE_CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{}",
            crate::fmt_num(p.s0),
            crate::fmt_num(p.theta),
            crate::fmt_num(p.maturity),
            crate::fmt_num(p.call_price)
        )?;
    }
    Ok(())
}
