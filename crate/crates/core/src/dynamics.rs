//! Price dynamics `dS = (rS − X)dt + Σ dW`, the innovations Brownian motion `W`
//! and the pricing martingale `M`, all reconstructed pathwise from a [`PathBundle`].

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::market::{discounted_dividend_integral, MarketParams, PathBundle};
use crate::pricing::spot_path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynState {
    pub t: f64,
    pub s: f64,
    pub w: f64,
    pub m: f64,
    pub sigma: f64,
}

/// `sqrt(4r²(r+κ)²e^{2rt} + σ²ψ²)`.
fn root_term(mp: &MarketParams, t: f64) -> f64 {
    let a = 2.0 * mp.r * (mp.r + mp.ou.kappa) * (mp.r * t).exp();
    let sp = mp.sigma * mp.ou.psi;
    (a * a + sp * sp).sqrt()
}

/// Absolute price volatility `Σ_t = σe^{rt}V_t/D_t`.
///
/// Evaluated as `e^{rt}ψ·sqrt(4r²(r+κ)²e^{2rt} + σ²ψ²)/(2r(r+κ)²e^{2rt} + σ²ψ²t)`,
/// which is finite at `t = 0` and tends to `ψ/(r+κ)` as `σ → 0`.
pub fn volatility_sigma(mp: &MarketParams, t: f64) -> f64 {
    (mp.r * t).exp() * mp.ou.psi * root_term(mp, t) / mp.info_denominator(t)
}

/// Martingale representation integrand `Γ_t = σV_t/D_t = e^{-rt}Σ_t`.
pub fn gamma(mp: &MarketParams, t: f64) -> f64 {
    (-mp.r * t).exp() * volatility_sigma(mp, t)
}

/// `M_t = E[∫₀^∞ P_u X_u du | F_t]` along the bundle.
pub fn martingale_path(bundle: &PathBundle, mp: &MarketParams) -> Vec<f64> {
    let rk = mp.r + mp.ou.kappa;
    let m0 = mp.initial_value();
    bundle
        .times()
        .iter()
        .enumerate()
        .map(|(j, &t)| mp.ou.psi / rk * bundle.discounted_beta[j] + mp.info_loading(t) * bundle.omega[j] + m0)
        .collect()
}

/// Largest pathwise gap between `M_t` and `P_t S_t + ∫₀ᵗ P_u X_u du`.
pub fn martingale_identity_residual(bundle: &PathBundle, mp: &MarketParams) -> f64 {
    let m = martingale_path(bundle, mp);
    let s = spot_path(bundle, mp);
    bundle
        .times()
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let past = discounted_dividend_integral(mp, t, bundle.x[j], bundle.discounted_beta[j]);
            (m[j] - ((-mp.r * t).exp() * s[j].price + past)).abs()
        })
        .fold(0.0, f64::max)
}

/// Increments of `W` over each grid step, left-point in time.
///
/// The `dt` integrand is rewritten as `σψG_t/(r+κ) − (z_t/t)ω_t − 2r(1−z_t)ω_t`,
/// identical to `((1−2rt)(1−z_t)ω_t − B_t)/t` but finite at `t = 0`. The `dβ`
/// increment is recovered from the discounted one as `e^{rt}Δ∫e^{-ru}dβ_u`.
fn innovation_increments(bundle: &PathBundle, mp: &MarketParams) -> Vec<f64> {
    let MarketParams { ou, sigma, r } = *mp;
    let rk = r + ou.kappa;
    let pts = bundle.times();
    (0..pts.len() - 1)
        .map(|j| {
            let t = pts[j];
            let dt = pts[j + 1] - t;
            let root = root_term(mp, t);
            let beta_coef = 2.0 * r * rk * (r * t).exp() / root;
            let damping = sigma * ou.psi / root;
            let z = mp.weight(t);
            let om = bundle.omega[j];
            let drift = sigma * ou.psi * bundle.g[j] / rk - mp.weight_rate(t) * om - 2.0 * r * (1.0 - z) * om;
            let d_beta = (r * t).exp() * (bundle.discounted_beta[j + 1] - bundle.discounted_beta[j]);
            let d_b = bundle.b[j + 1] - bundle.b[j];
            beta_coef * d_beta + damping * (drift * dt + d_b)
        })
        .collect()
}

/// Innovations Brownian motion along the bundle, `W_0 = 0`.
pub fn innovations_path(bundle: &PathBundle, mp: &MarketParams) -> Result<Vec<f64>> {
    if mp.sigma * mp.ou.psi == 0.0 {
        return Err(ModelError::Degenerate(
            "innovations process is undefined when sigma * psi = 0".into(),
        ));
    }
    Ok(cumulate(&innovation_increments(bundle, mp)))
}

fn cumulate(incr: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(incr.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for d in incr {
        acc += d;
        out.push(acc);
    }
    out
}

/// Closed-form and SDE-integrated prices side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeComparison {
    pub t: Vec<f64>,
    pub s_closed: Vec<f64>,
    pub s_sde: Vec<f64>,
    pub w: Vec<f64>,
    pub m: Vec<f64>,
}

impl SdeComparison {
    pub fn max_abs_residual(&self) -> f64 {
        self.s_closed
            .iter()
            .zip(&self.s_sde)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn terminal_relative_error(&self) -> f64 {
        let a = *self.s_closed.last().unwrap();
        let b = *self.s_sde.last().unwrap();
        (a - b).abs() / a.abs()
    }

    pub const CSV_HEADER: &'static str = "t,S_closed,S_sde,W,M";

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for j in 0..self.t.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::fmt_num(self.t[j]),
                crate::fmt_num(self.s_closed[j]),
                crate::fmt_num(self.s_sde[j]),
                crate::fmt_num(self.w[j]),
                crate::fmt_num(self.m[j])
            )?;
        }
        Ok(())
    }
}

/// Euler integration of the price SDE from the first grid point `>= t_start`,
/// started at the closed-form price and driven by the innovations increments.
pub fn sde_compare(bundle: &PathBundle, mp: &MarketParams, t_start: f64) -> Result<SdeComparison> {
    let i0 = bundle
        .grid
        .index_at_or_after(t_start)
        .filter(|&i| i + 1 < bundle.len())
        .ok_or_else(|| ModelError::InvalidGrid(format!("no integration interval after t = {t_start}")))?;
    let pts = bundle.times();
    let closed: Vec<f64> = spot_path(bundle, mp).iter().map(|q| q.price).collect();
    let dw = innovation_increments(bundle, mp);
    let w_full = cumulate(&dw);
    let m_full = martingale_path(bundle, mp);

    let mut s_sde = Vec::with_capacity(pts.len() - i0);
    let mut s = closed[i0];
    s_sde.push(s);
    for j in i0..pts.len() - 1 {
        let t = pts[j];
        let dt = pts[j + 1] - t;
        s += (mp.r * s - bundle.x[j]) * dt + volatility_sigma(mp, t) * dw[j];
        s_sde.push(s);
    }
    Ok(SdeComparison {
        t: pts[i0..].to_vec(),
        s_closed: closed[i0..].to_vec(),
        s_sde,
        w: w_full[i0..].to_vec(),
        m: m_full[i0..].to_vec(),
    })
}

/// Largest gap between the SDE-integrated and closed-form price on `[t_start, t_max]`.
pub fn sde_residual(bundle: &PathBundle, mp: &MarketParams, t_start: f64) -> Result<f64> {
    Ok(sde_compare(bundle, mp, t_start)?.max_abs_residual())
}

/// Price, innovations, martingale and volatility along the bundle.
pub fn dyn_states(bundle: &PathBundle, mp: &MarketParams) -> Result<Vec<DynState>> {
    let w = innovations_path(bundle, mp)?;
    let m = martingale_path(bundle, mp);
    let s = spot_path(bundle, mp);
    Ok(bundle
        .times()
        .iter()
        .enumerate()
        .map(|(j, &t)| DynState {
            t,
            s: s[j].price,
            w: w[j],
            m: m[j],
            sigma: volatility_sigma(mp, t),
        })
        .collect())
}
