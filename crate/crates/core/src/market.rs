//! Discounting, the information weight `z_t`, and exact joint simulation of the
//! dividend rate with the market information process.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::num::exp_decay_integral;
use crate::ou::{OuParams, Schedule, TimeGrid};

/// Dividend process plus information flow rate `sigma` and constant short rate `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub ou: OuParams,
    pub sigma: f64,
    pub r: f64,
}

impl MarketParams {
    pub fn new(ou: OuParams, sigma: f64, r: f64) -> Result<Self> {
        let mp = MarketParams { ou, sigma, r };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        self.ou.validate()?;
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(ModelError::param("r", "must be finite and > 0"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ModelError::param("sigma", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// `2r(r+κ)²e^{2rt} + σ²ψ²t`, the common denominator of `z_t` and `V_t`.
    pub(crate) fn info_denominator(&self, t: f64) -> f64 {
        let rk = self.r + self.ou.kappa;
        2.0 * self.r * rk * rk * (2.0 * self.r * t).exp() + self.signal_strength() * t
    }

    /// `σ²ψ²`.
    pub(crate) fn signal_strength(&self) -> f64 {
        let sp = self.sigma * self.ou.psi;
        sp * sp
    }

    /// Information weight `z_t`.
    pub fn weight(&self, t: f64) -> f64 {
        let num = self.signal_strength() * t;
        if num == 0.0 {
            return 0.0;
        }
        num / self.info_denominator(t)
    }

    /// `z_t / t`, finite at `t = 0`.
    pub fn weight_rate(&self, t: f64) -> f64 {
        self.signal_strength() / self.info_denominator(t)
    }

    /// Conditional variance `V_t = z_t/(σ²t)` of the discounted future dividend aggregate.
    pub fn conditional_variance(&self, t: f64) -> f64 {
        self.ou.psi * self.ou.psi / self.info_denominator(t)
    }

    /// `z_t/(σt) = σV_t`, the loading on the information value.
    pub fn info_loading(&self, t: f64) -> f64 {
        self.sigma * self.conditional_variance(t)
    }

    /// Damping coefficient `σψ / sqrt(4r²(r+κ)²e^{2rt} + σ²ψ²)`.
    pub fn damping(&self, t: f64) -> f64 {
        let sp = self.sigma * self.ou.psi;
        if sp == 0.0 {
            return 0.0;
        }
        let rk = self.r + self.ou.kappa;
        let a = 2.0 * self.r * rk * (self.r * t).exp();
        sp / (a * a + sp * sp).sqrt()
    }

    /// `(rX₀ + κθ)/(r(r+κ))`, the time-zero price.
    pub fn initial_value(&self) -> f64 {
        let k = self.ou.kappa;
        (self.r * self.ou.x0 + k * self.ou.theta) / (self.r * (self.r + k))
    }

    /// `e^{-rt}(κθ + rx)/(r(r+κ))`: conditional expectation of `∫_t^∞ e^{-ru}X_u du`
    /// given `X_t = x`, ignoring future dividend noise.
    pub(crate) fn discounted_annuity(&self, t: f64, x: f64) -> f64 {
        let k = self.ou.kappa;
        (-self.r * t).exp() * (k * self.ou.theta + self.r * x) / (self.r * (self.r + k))
    }

    pub fn discount_bundle(&self, t: f64) -> DiscountBundle {
        let r = self.r;
        let big_p = (-r * t).exp();
        DiscountBundle {
            t,
            big_p,
            p: big_p / r,
            q: big_p / (r + self.ou.kappa),
            z: self.weight(t),
            v: self.conditional_variance(t),
            d: self.damping(t),
        }
    }
}

/// Deterministic quantities at one time point under a constant short rate.
///
/// `d` is zero when `σψ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscountBundle {
    pub t: f64,
    /// Discount factor `P_t`.
    pub big_p: f64,
    /// `∫_t^∞ P_u du`.
    pub p: f64,
    /// `∫_t^∞ P_u e^{-κ(u-t)} du`.
    pub q: f64,
    pub z: f64,
    pub v: f64,
    pub d: f64,
}

/// Piecewise-constant short rate. Rate `i` holds on `[b_{i-1}, b_i)`; the last
/// rate extends to infinity and must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCurve {
    pub breakpoints: Vec<f64>,
    pub rates: Vec<f64>,
}

impl RateCurve {
    pub fn new(breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let c = RateCurve { breakpoints, rates };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(r: f64) -> Result<Self> {
        RateCurve::new(vec![], vec![r])
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.len() != self.breakpoints.len() + 1 {
            return Err(ModelError::InvalidRateCurve(format!(
                "{} breakpoints need {} rates",
                self.breakpoints.len(),
                self.breakpoints.len() + 1
            )));
        }
        if let Some(&first) = self.breakpoints.first() {
            if !(first > 0.0) {
                return Err(ModelError::InvalidRateCurve("first breakpoint must be > 0".into()));
            }
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) || self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidRateCurve(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if self.rates.iter().any(|r| !r.is_finite()) {
            return Err(ModelError::InvalidRateCurve("rates must be finite".into()));
        }
        if !(*self.rates.last().unwrap() > 0.0) {
            return Err(ModelError::InvalidRateCurve(
                "the rate on the unbounded last segment must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.rates[self.breakpoints.partition_point(|&b| b <= t)]
    }

    /// `∫₀ᵗ r_s ds`.
    pub fn integrated_rate(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        for (i, &rate) in self.rates.iter().enumerate() {
            let end = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            if t <= start {
                break;
            }
            acc += rate * (end.min(t) - start);
            start = end;
        }
        acc
    }

    pub fn discount(&self, t: f64) -> f64 {
        (-self.integrated_rate(t)).exp()
    }
}

/// Tail integrals over `[t, ∞)` for a piecewise-constant rate curve and OU schedule.
///
/// `h_s = ∫_s^∞ P_u e^{-(f_u - f_s)} du` reduces to `q_s` when κ is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailIntegrals {
    pub t: f64,
    pub big_p: f64,
    /// `∫_t^∞ P_u du`.
    pub p: f64,
    /// `h_t`.
    pub h: f64,
    /// `∫_t^∞ κ_s θ_s h_s ds`.
    pub drift_integral: f64,
    /// `∫_t^∞ ψ_s² h_s² ds`, the variance of the unpredictable part of `∫_t^∞ P_u X_u du`.
    pub noise_integral: f64,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    len: f64,
    r: f64,
    kappa: f64,
    theta: f64,
    psi: f64,
}

/// Segment-exact evaluation of [`TailIntegrals`] at time `t >= 0`.
pub fn tail_integrals(schedule: &Schedule, curve: &RateCurve, t: f64) -> Result<TailIntegrals> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ModelError::TimeOrder(format!("t = {t} must be finite and >= 0")));
    }
    let mut cuts: Vec<f64> = schedule
        .breakpoints
        .iter()
        .chain(&curve.breakpoints)
        .copied()
        .filter(|&b| b > t)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut start = t;
    for &end in cuts.iter().chain(std::iter::once(&f64::INFINITY)) {
        let s = schedule.at(start);
        pieces.push(Piece {
            len: end - start,
            r: curve.rate_at(start),
            kappa: s.kappa,
            theta: s.theta,
            psi: s.psi,
        });
        start = end;
    }
    let last = pieces.last().unwrap();
    if !(last.r > 0.0) {
        return Err(ModelError::InvalidRateCurve("divergent discount integral on the tail".into()));
    }

    // discount factors at piece starts
    let mut starts_p = Vec::with_capacity(pieces.len());
    let mut pf = curve.discount(t);
    for pc in &pieces {
        starts_p.push(pf);
        if pc.len.is_finite() {
            pf *= (-pc.r * pc.len).exp();
        }
    }

    let mut p = 0.0;
    let mut h_next = 0.0;
    let mut drift = 0.0;
    let mut noise = 0.0;
    for (pc, &pa) in pieces.iter().zip(&starts_p).rev() {
        let rk = pc.r + pc.kappa;
        let (h_start, int_h, int_h2, int_p) = if pc.len.is_infinite() {
            let c1 = pa / rk;
            (c1, c1 / pc.r, c1 * c1 / (2.0 * pc.r), pa / pc.r)
        } else {
            let d = pc.len;
            let pb = pa * (-pc.r * d).exp();
            let c1 = pa / rk;
            let dev = h_next - pb / rk;
            let h_start = pa * exp_decay_integral(rk, d) + (-pc.kappa * d).exp() * h_next;
            let int_h = c1 * exp_decay_integral(pc.r, d) + dev * exp_decay_integral(pc.kappa, d);
            let cross = if pc.kappa >= pc.r {
                (-pc.r * d).exp() * exp_decay_integral(pc.kappa - pc.r, d)
            } else {
                (-pc.kappa * d).exp() * exp_decay_integral(pc.r - pc.kappa, d)
            };
            let int_h2 = c1 * c1 * exp_decay_integral(2.0 * pc.r, d)
                + 2.0 * c1 * dev * cross
                + dev * dev * exp_decay_integral(2.0 * pc.kappa, d);
            (h_start, int_h, int_h2, pa * exp_decay_integral(pc.r, d))
        };
        p += int_p;
        drift += pc.kappa * pc.theta * int_h;
        noise += pc.psi * pc.psi * int_h2;
        h_next = h_start;
    }

    Ok(TailIntegrals {
        t,
        big_p: starts_p[0],
        p,
        h: h_next,
        drift_integral: drift,
        noise_integral: noise,
    })
}

/// `z_t` for a deterministic piecewise-constant short rate.
pub fn weight_z_general(ou: &OuParams, sigma: f64, curve: &RateCurve, t: f64) -> Result<f64> {
    let tail = tail_integrals(&Schedule::constant(ou), curve, t)?;
    Ok(weight_from_noise(sigma, t, tail.noise_integral))
}

pub(crate) fn weight_from_noise(sigma: f64, t: f64, noise_integral: f64) -> f64 {
    let a = sigma * sigma * t * noise_integral;
    if a == 0.0 {
        0.0
    } else {
        a / (1.0 + a)
    }
}

/// Jointly simulated discrete paths on a common grid.
///
/// `g[j] = ∫_{t_j}^∞ e^{-ru} dβ_u` and `discounted_beta[j] = ∫₀^{t_j} e^{-ru} dβ_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub g: Vec<f64>,
    pub xi: Vec<f64>,
    pub omega: Vec<f64>,
    pub discounted_beta: Vec<f64>,
}

impl PathBundle {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        self.grid.points()
    }

    pub const CSV_HEADER: &'static str = "t,X,B,G,xi,omega";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for j in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                crate::fmt_num(self.grid.points()[j]),
                crate::fmt_num(self.x[j]),
                crate::fmt_num(self.b[j]),
                crate::fmt_num(self.g[j]),
                crate::fmt_num(self.xi[j]),
                crate::fmt_num(self.omega[j]),
            )?;
        }
        Ok(())
    }
}

/// Exact joint sample of `(X, B, ξ, ω)` on `grid`, seeded as path 0 of `seed`.
pub fn simulate_joint(mp: &MarketParams, grid: &TimeGrid, seed: u64) -> Result<PathBundle> {
    simulate_joint_with(mp, grid, &mut crate::num::path_rng(seed, 0))
}

/// As [`simulate_joint`] but drawing from a caller-supplied generator.
pub fn simulate_joint_with<R: Rng + ?Sized>(mp: &MarketParams, grid: &TimeGrid, rng: &mut R) -> Result<PathBundle> {
    mp.validate()?;
    if grid.len() < 2 {
        return Err(ModelError::InvalidGrid("joint simulation needs t_max > 0".into()));
    }
    let MarketParams { ou, sigma, r } = *mp;
    let OuParams { kappa, theta, psi, x0 } = ou;
    let pts = grid.points();
    let n = pts.len();
    let t_max = grid.t_max();

    let tail: f64 = rng.sample(StandardNormal);
    let tail = tail * ((-2.0 * r * t_max).exp() / (2.0 * r)).sqrt();

    let mut x = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut db = Vec::with_capacity(n);
    let mut incr = Vec::with_capacity(n - 1);
    x.push(x0);
    b.push(0.0);
    db.push(0.0);
    for j in 0..n - 1 {
        let (t0, t1) = (pts[j], pts[j + 1]);
        let dt = t1 - t0;
        // Y = ∫ e^{-κ(t1-u)} dβ_u and J = ∫ e^{-r(u-t0)} dβ_u over [t0, t1]
        let var_y = exp_decay_integral(2.0 * kappa, dt);
        let var_j = exp_decay_integral(2.0 * r, dt);
        let cov = if kappa >= r {
            (-r * dt).exp() * exp_decay_integral(kappa - r, dt)
        } else {
            (-kappa * dt).exp() * exp_decay_integral(r - kappa, dt)
        };
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let z3: f64 = rng.sample(StandardNormal);
        let sd_y = var_y.sqrt();
        let y = sd_y * z1;
        let load = cov / sd_y;
        let j_scaled = load * z1 + (var_j - load * load).max(0.0).sqrt() * z2;
        let j_incr = (-r * t0).exp() * j_scaled;

        let xn = theta + (x[j] - theta) * (-kappa * dt).exp() + psi * y;
        x.push(xn);
        b.push(b[j] + dt.sqrt() * z3);
        db.push(db[j] + j_incr);
        incr.push(j_incr);
    }

    let mut g = vec![0.0; n];
    g[n - 1] = tail;
    for j in (0..n - 1).rev() {
        g[j] = g[j + 1] + incr[j];
    }

    let rk = r + kappa;
    let mut xi = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n);
    for j in 0..n {
        let t = pts[j];
        let om = sigma * psi * t / rk * g[j] + b[j];
        let xv = sigma * t * (mp.discounted_annuity(t, x[j]) + psi / rk * g[j]) + b[j];
        omega.push(om);
        xi.push(xv);
    }

    Ok(PathBundle {
        grid: grid.clone(),
        x,
        b,
        g,
        xi,
        omega,
        discounted_beta: db,
    })
}

/// `∫₀ᵗ e^{-ru} X_u du` in closed form from `X_t` and `∫₀ᵗ e^{-ru} dβ_u`.
pub fn discounted_dividend_integral(mp: &MarketParams, t: f64, x_t: f64, discounted_beta: f64) -> f64 {
    let rk = mp.r + mp.ou.kappa;
    mp.initial_value() + mp.ou.psi / rk * discounted_beta - mp.discounted_annuity(t, x_t)
}

/// Largest pathwise residual of the identity linking `ξ_t` and `ω_t`.
pub fn xi_omega_consistency(bundle: &PathBundle, mp: &MarketParams) -> f64 {
    let rk = mp.r + mp.ou.kappa;
    let mut worst: f64 = 0.0;
    for j in 0..bundle.len() {
        let t = bundle.times()[j];
        let past = discounted_dividend_integral(mp, t, bundle.x[j], bundle.discounted_beta[j]);
        let bracket = mp.initial_value() + mp.ou.psi / rk * bundle.discounted_beta[j] - past;
        let resid = bundle.xi[j] - bundle.omega[j] - mp.sigma * t * bracket;
        worst = worst.max(resid.abs());
    }
    worst
}

/// `Var[ω_t] = t/(1 − z_t)`, written without the division.
pub fn omega_variance(mp: &MarketParams, t: f64) -> f64 {
    let rk = mp.r + mp.ou.kappa;
    mp.signal_strength() * t * t * (-2.0 * mp.r * t).exp() / (2.0 * mp.r * rk * rk) + t
}

/// `Var[∫_t^∞ e^{-ru} dβ_u]`.
pub fn tail_variance(r: f64, t: f64) -> f64 {
    (-2.0 * r * t).exp() / (2.0 * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> MarketParams {
        MarketParams::new(OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap(), 0.25, 0.05).unwrap()
    }

    #[test]
    fn weight_matches_high_precision_values() {
        let mp = fig3();
        assert!((mp.weight(0.25) - 0.078_952_723_118_218_290_3).abs() < 1e-15);
        assert!((mp.weight(1.0) - 0.241_336_194_829_947_595_9).abs() < 1e-15);
        assert!((mp.weight(2.0) - 0.365_349_367_926_072_829_6).abs() < 1e-15);
    }

    #[test]
    fn weight_degenerate_cases() {
        let mut mp = fig3();
        assert_eq!(mp.weight(0.0), 0.0);
        mp.sigma = 0.0;
        assert_eq!(mp.weight(1.0), 0.0);
        assert_eq!(mp.damping(1.0), 0.0);
        assert_eq!(mp.info_loading(1.0), 0.0);
        assert!(mp.conditional_variance(1.0) > 0.0);
    }

    #[test]
    fn weight_increases_with_signal() {
        let base = fig3();
        let mut louder = base;
        louder.sigma *= 1.5;
        let mut noisier = base;
        noisier.ou.psi *= 1.5;
        for t in [0.1, 1.0, 5.0] {
            assert!(louder.weight(t) > base.weight(t));
            assert!(noisier.weight(t) > base.weight(t));
            assert!(base.weight(t) < 1.0);
        }
    }

    #[test]
    fn loading_is_weight_over_sigma_t() {
        let mp = fig3();
        for t in [0.3, 1.0, 4.0] {
            let direct = mp.weight(t) / (mp.sigma * t);
            assert!((mp.info_loading(t) - direct).abs() < 1e-14 * direct);
            let v = mp.weight(t) / (mp.sigma * mp.sigma * t);
            assert!((mp.conditional_variance(t) - v).abs() < 1e-14 * v);
        }
    }

    #[test]
    fn damping_lies_in_unit_interval() {
        let mp = fig3();
        for t in [0.0, 0.5, 10.0, 100.0] {
            let d = mp.damping(t);
            assert!(d > 0.0 && d <= 1.0);
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let ou = OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap();
        assert!(MarketParams::new(ou, 0.25, 0.0).is_err());
        assert!(MarketParams::new(ou, -0.1, 0.05).is_err());
        assert!(MarketParams::new(ou, f64::NAN, 0.05).is_err());
        assert!(RateCurve::new(vec![1.0], vec![0.05]).is_err());
        assert!(RateCurve::new(vec![1.0], vec![0.05, 0.0]).is_err());
        assert!(RateCurve::new(vec![0.0], vec![0.05, 0.05]).is_err());
        assert!(RateCurve::new(vec![2.0, 1.0], vec![0.05, 0.05, 0.05]).is_err());
        assert!(RateCurve::new(vec![1.0], vec![-0.02, 0.05]).is_ok());
    }

    #[test]
    fn rate_curve_integration() {
        let c = RateCurve::new(vec![1.0, 3.0], vec![0.02, 0.04, 0.06]).unwrap();
        assert_eq!(c.rate_at(0.5), 0.02);
        assert_eq!(c.rate_at(1.0), 0.04);
        assert_eq!(c.rate_at(10.0), 0.06);
        let want = 0.02 + 0.04 * 2.0 + 0.06 * 1.5;
        assert!((c.integrated_rate(4.5) - want).abs() < 1e-15);
        assert_eq!(c.integrated_rate(0.0), 0.0);
    }

    #[test]
    fn constant_curve_tail_integrals_match_closed_forms() {
        let mp = fig3();
        let curve = RateCurve::constant(mp.r).unwrap();
        let sched = Schedule::constant(&mp.ou);
        for t in [0.0, 0.7, 3.0] {
            let tail = tail_integrals(&sched, &curve, t).unwrap();
            let b = mp.discount_bundle(t);
            assert!((tail.big_p - b.big_p).abs() < 1e-15);
            assert!((tail.p - b.p).abs() < 1e-12 * b.p);
            assert!((tail.h - b.q).abs() < 1e-12 * b.q);
            assert!((tail.drift_integral - mp.ou.theta * (b.p - b.q)).abs() < 1e-12);
            let z = weight_z_general(&mp.ou, mp.sigma, &curve, t).unwrap();
            assert!((z - b.z).abs() < 1e-12);
        }
    }

    #[test]
    fn breakpoints_with_equal_rates_change_nothing() {
        let mp = fig3();
        let flat = RateCurve::constant(0.05).unwrap();
        let split = RateCurve::new(vec![0.5, 2.0], vec![0.05, 0.05, 0.05]).unwrap();
        for t in [0.0, 1.0, 2.5] {
            let a = weight_z_general(&mp.ou, mp.sigma, &flat, t).unwrap();
            let b = weight_z_general(&mp.ou, mp.sigma, &split, t).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn joint_simulation_identities_hold() {
        let mp = fig3();
        let grid = TimeGrid::uniform(2.0, 400).unwrap();
        let bundle = simulate_joint(&mp, &grid, 11).unwrap();
        assert!(xi_omega_consistency(&bundle, &mp) < 1e-9);
        assert_eq!(bundle.x[0], mp.ou.x0);
        assert_eq!(bundle.xi[0], 0.0);
        assert_eq!(bundle.omega[0], 0.0);
    }

    #[test]
    fn xi_omega_check_detects_tampering() {
        let mp = fig3();
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let mut bundle = simulate_joint(&mp, &grid, 3).unwrap();
        bundle.xi[25] += 1e-3;
        assert!(xi_omega_consistency(&bundle, &mp) > 5e-4);
    }

    #[test]
    fn simulation_is_reproducible() {
        let mp = fig3();
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let a = simulate_joint(&mp, &grid, 42).unwrap();
        let b = simulate_joint(&mp, &grid, 42).unwrap();
        let c = simulate_joint(&mp, &grid, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn noiseless_simulation_is_deterministic() {
        let mut mp = fig3();
        mp.ou.psi = 0.0;
        mp.sigma = 0.0;
        let grid = TimeGrid::uniform(3.0, 30).unwrap();
        let bundle = simulate_joint(&mp, &grid, 1).unwrap();
        for (j, &t) in grid.points().iter().enumerate() {
            assert!((bundle.x[j] - mp.ou.mean(t)).abs() < 1e-14);
            assert_eq!(bundle.xi[j], bundle.b[j]);
        }
    }

    #[test]
    fn rejects_single_point_grid() {
        let grid = TimeGrid::new(vec![0.0]).unwrap();
        assert!(matches!(simulate_joint(&fig3(), &grid, 1), Err(ModelError::InvalidGrid(_))));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let bundle = simulate_joint(&fig3(), &grid, 5).unwrap();
        let mut buf = Vec::new();
        bundle.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], PathBundle::CSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1].split(',').count(), 6);
    }
}
