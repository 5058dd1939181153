//! Monte Carlo oracles for the closed forms, and minimal calibration helpers.
//!
//! Every suite is deterministic for fixed settings: paths draw from per-path
//! ChaCha substreams and reductions run in path order.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::derivatives::{
    call_on_futures, call_on_spot, futures_price, futures_terminal_law, gaussian_call, spot_terminal_law,
};
use crate::dynamics::{gamma, innovations_path, martingale_identity_residual, martingale_path, sde_compare};
use crate::error::{ModelError, Result};
use crate::market::{simulate_joint_with, tail_variance, xi_omega_consistency, MarketParams};
use crate::num::{map_paths, path_rng, sub_seed};
use crate::ou::{OuParams, TimeGrid};
use crate::pricing::spot_price;
use crate::stats::{correlation, ols, SampleStats};

/// Residual discounted dividend `A_t`, scaled noise `C_t = B_t/(σt)` and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSample {
    pub a: f64,
    pub c: f64,
    pub sum: f64,
}

/// Draws `(A_t, C_t)` from their exact Gaussian laws on two independent streams.
pub fn sample_projection(mp: &MarketParams, t: f64, paths: usize, seed: u64) -> Result<Vec<ProjectionSample>> {
    if !(t > 0.0) {
        return Err(ModelError::param("t", "projection needs t > 0"));
    }
    if mp.sigma == 0.0 {
        return Err(ModelError::param("sigma", "projection needs sigma > 0"));
    }
    let bundle = mp.discount_bundle(t);
    let rk = mp.r + mp.ou.kappa;
    let mean_a = mp.ou.theta * (bundle.p - bundle.q);
    let sd_a = mp.ou.psi * (-mp.r * t).exp() / (rk * (2.0 * mp.r).sqrt());
    let sd_c = 1.0 / (mp.sigma * t.sqrt());
    let mut rng_a = path_rng(seed, 0);
    let mut rng_c = path_rng(seed, 1);
    Ok((0..paths)
        .map(|_| {
            let za: f64 = rng_a.sample(StandardNormal);
            let zc: f64 = rng_c.sample(StandardNormal);
            let a = mean_a + sd_a * za;
            let c = sd_c * zc;
            ProjectionSample { a, c, sum: a + c }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionCheck {
    pub t: f64,
    /// OLS slope of `A_t` on `A_t + C_t`.
    pub slope: f64,
    pub slope_se: f64,
    pub z_expected: f64,
}

/// Regression estimate of the information weight against its closed form.
pub fn projection_check(mp: &MarketParams, t: f64, paths: usize, seed: u64) -> Result<ProjectionCheck> {
    let samples = sample_projection(mp, t, paths, seed)?;
    let a: Vec<f64> = samples.iter().map(|s| s.a).collect();
    let sum: Vec<f64> = samples.iter().map(|s| s.sum).collect();
    let fit = ols(&a, &[&sum]).ok_or_else(|| ModelError::Degenerate("projection regression is singular".into()))?;
    Ok(ProjectionCheck {
        t,
        slope: fit.coefficients[1],
        slope_se: fit.std_errors[1],
        z_expected: mp.weight(t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionCheck {
    pub t: f64,
    /// Intercept, slope on `X_t`, slope on `ξ_t`.
    pub estimated: [f64; 3],
    pub expected: [f64; 3],
    pub std_errors: [f64; 3],
}

/// Coefficients of `P_t S_t` on `(1, X_t, ξ_t)` implied by the pricing formula.
pub fn regression_expected(mp: &MarketParams, t: f64) -> [f64; 3] {
    let b = mp.discount_bundle(t);
    [
        (1.0 - b.z) * mp.ou.theta * (b.p - b.q),
        (1.0 - b.z) * b.q,
        mp.info_loading(t),
    ]
}

/// Regresses the realised discounted future dividend `∫_t^∞ e^{-ru}X_u du` on
/// `(1, X_t, ξ_t)` across simulated states and compares with the pricing coefficients.
pub fn regression_price_check(mp: &MarketParams, t: f64, paths: usize, seed: u64) -> Result<RegressionCheck> {
    if !(t > 0.0) {
        return Err(ModelError::param("t", "regression needs t > 0"));
    }
    let ou = mp.ou;
    let rk = mp.r + ou.kappa;
    let (mx, sx) = (ou.mean(t), ou.variance(t).sqrt());
    let sg = tail_variance(mp.r, t).sqrt();
    let sb = t.sqrt();
    let draws = map_paths(seed, paths, |rng| {
        let x = mx + sx * rng.sample::<f64, _>(StandardNormal);
        let g = sg * rng.sample::<f64, _>(StandardNormal);
        let b = sb * rng.sample::<f64, _>(StandardNormal);
        let future = (-mp.r * t).exp() * (ou.kappa * ou.theta + mp.r * x) / (mp.r * rk) + ou.psi / rk * g;
        let xi = mp.sigma * t * future + b;
        (x, xi, future)
    });
    let xs: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let xis: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let ys: Vec<f64> = draws.iter().map(|d| d.2).collect();
    let fit = ols(&ys, &[&xs, &xis]).ok_or_else(|| ModelError::Degenerate("singular regression design".into()))?;
    Ok(RegressionCheck {
        t,
        estimated: [fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]],
        expected: regression_expected(mp, t),
        std_errors: [fit.std_errors[0], fit.std_errors[1], fit.std_errors[2]],
    })
}

/// Exact-discretisation maximum likelihood fit of an OU process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub params: OuParams,
    pub std_errors: OuStdErrors,
    pub log_likelihood: f64,
    pub observations: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuStdErrors {
    pub kappa: f64,
    pub theta: f64,
    pub psi: f64,
}

/// Fits κ, θ, ψ to equally spaced observations through the AR(1) form
/// `x_{k+1} = a x_k + b + ε` with `a = e^{-κ dt}`.
pub fn ou_fit(series: &[f64], dt: f64) -> Result<CalibrationResult> {
    if series.len() < 3 {
        return Err(ModelError::param("series", "need at least 3 observations"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::param("dt", "must be > 0"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::param("series", "contains non-finite values"));
    }
    let prev = &series[..series.len() - 1];
    let next = &series[1..];
    let fit = ols(next, &[prev])
        .ok_or_else(|| ModelError::Degenerate("series has no variation; mean reversion is not identifiable".into()))?;
    let (b, a) = (fit.coefficients[0], fit.coefficients[1]);
    if !(a > 0.0 && a < 1.0) {
        return Err(ModelError::Degenerate(format!(
            "AR coefficient {a} outside (0, 1): data are not mean reverting"
        )));
    }
    let n = next.len() as f64;
    let rss = fit.residual_variance * (n - 2.0);
    let s2 = rss / n;
    let kappa = -a.ln() / dt;
    let theta = b / (1.0 - a);
    let psi = (2.0 * kappa * s2 / (1.0 - a * a)).sqrt();
    let log_likelihood = if s2 > 0.0 {
        -0.5 * n * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0)
    } else {
        f64::INFINITY
    };

    let var_a = fit.covariance[1][1];
    let var_b = fit.covariance[0][0];
    let cov_ab = fit.covariance[0][1];
    let se_kappa = var_a.sqrt() / (a * dt);
    let (d_a, d_b) = (b / ((1.0 - a) * (1.0 - a)), 1.0 / (1.0 - a));
    let se_theta = (d_a * d_a * var_a + 2.0 * d_a * d_b * cov_ab + d_b * d_b * var_b).max(0.0).sqrt();
    // d ln ψ / da and d ln ψ / d s², with Var[s²] ≈ 2 s⁴ / n
    let dl_da = 0.5 * (1.0 / (a * a.ln()) + 2.0 * a / (1.0 - a * a));
    let se_psi = psi * (dl_da * dl_da * var_a + 0.5 / n).sqrt();

    Ok(CalibrationResult {
        params: OuParams::new(kappa, theta, psi, series[0])?,
        std_errors: OuStdErrors {
            kappa: se_kappa,
            theta: se_theta,
            psi: se_psi,
        },
        log_likelihood,
        observations: series.len(),
        dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpliedInitials {
    pub theta: f64,
    pub x0: f64,
}

/// Reversion level and initial dividend reproducing a current price `s0` and a
/// long-run price `s_inf`: `θ = r S_∞`, and `x0` inverts the time-zero price.
pub fn implied_initials(s0: f64, s_inf: f64, r: f64, kappa: f64) -> Result<ImpliedInitials> {
    if !(r > 0.0) {
        return Err(ModelError::param("r", "must be > 0"));
    }
    if !(kappa > 0.0) {
        return Err(ModelError::param("kappa", "must be > 0"));
    }
    let theta = r * s_inf;
    let x0 = ((r + kappa) * r * s0 - kappa * theta) / r;
    Ok(ImpliedInitials { theta, x0 })
}

// ---------------------------------------------------------------------------
// verification suites

pub const SUITES: [&str; 8] = [
    "moments",
    "bridge",
    "projection",
    "spot_law",
    "sde",
    "martingale",
    "futures",
    "options",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub se: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub paths: usize,
    pub checks: Vec<CheckResult>,
    pub runtime_seconds: Option<f64>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSettings {
    pub seed: u64,
    pub paths: usize,
    /// Horizon and resolution for path-based suites (moments, bridge, sde, martingale).
    pub grid: TimeGrid,
    /// Paths for the SDE suite, which walks the full grid per path.
    pub sde_paths: usize,
    pub sde_start: f64,
    pub strike: f64,
    /// Option and futures maturities.
    pub maturities: Vec<f64>,
    pub projection_times: Vec<f64>,
    /// Multiplies every tolerance; 1 reproduces the stated thresholds.
    pub tolerance_scale: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            seed: 20_240_601,
            paths: 200_000,
            grid: TimeGrid::uniform(1.0, 10_000).unwrap(),
            sde_paths: 1_000,
            sde_start: 0.01,
            strike: 10.0,
            maturities: vec![0.5, 1.0, 2.0],
            projection_times: vec![0.25, 1.0, 2.0],
            tolerance_scale: 1.0,
        }
    }
}

/// Multiple of the standard error allowed for Monte Carlo checks.
pub const SE_MULTIPLE: f64 = 3.0;
/// Relative tolerance for regression-coefficient checks.
pub const REGRESSION_REL_TOL: f64 = 0.02;
/// Tolerance for closed-form identities evaluated pathwise.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Median terminal relative error allowed when integrating the price SDE.
pub const SDE_MEDIAN_REL_TOL: f64 = 0.01;
/// Relative tolerance for the quadratic-variation rate of `M`.
pub const QV_REL_TOL: f64 = 0.05;
/// Samples used by projection and regression checks inside suites.
pub const REGRESSION_SAMPLES: usize = 1_000_000;
/// Direct draws for the Gaussian call formula check.
pub const GAUSSIAN_DRAWS: usize = 1_000_000;

struct Checks {
    scale: f64,
    out: Vec<CheckResult>,
}

impl Checks {
    fn push(&mut self, name: String, statistic: f64, expected: f64, tolerance: f64, se: Option<f64>) {
        let tolerance = tolerance * self.scale;
        let pass = (statistic - expected).abs() <= tolerance;
        self.out.push(CheckResult {
            name,
            statistic,
            expected,
            tolerance,
            se,
            pass,
        });
    }

    fn mc(&mut self, name: String, statistic: f64, expected: f64, se: f64) {
        self.push(name, statistic, expected, SE_MULTIPLE * se, Some(se));
    }

    fn mean(&mut self, name: String, s: &SampleStats, expected: f64) {
        self.mc(name, s.mean, expected, s.se_mean());
    }

    fn variance(&mut self, name: String, s: &SampleStats, expected: f64) {
        self.mc(name, s.variance, expected, s.se_variance());
    }

    fn relative(&mut self, name: String, statistic: f64, expected: f64, rel: f64, se: Option<f64>) {
        self.push(name, statistic, expected, rel * expected.abs(), se);
    }

    fn absolute(&mut self, name: String, statistic: f64, expected: f64, tol: f64) {
        self.push(name, statistic, expected, tol, None);
    }
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn quarter_grid(t_max: f64) -> Result<TimeGrid> {
    TimeGrid::new(vec![0.0, 0.25 * t_max, 0.5 * t_max, 0.75 * t_max, t_max])
}

fn suite_moments(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let ou = mp.ou;
    let grid = quarter_grid(st.grid.t_max())?;
    let pts = grid.points().to_vec();
    let rows = map_paths(sub_seed(st.seed, 1), st.paths, |rng| ou.sample_path(&grid, rng));
    for j in [1, 2, 4] {
        let t = pts[j];
        let s = SampleStats::from_slice(&column(&rows, j));
        c.mean(format!("moments.mean[t={t}]"), &s, ou.mean(t));
        c.variance(format!("moments.variance[t={t}]"), &s, ou.variance(t));
    }
    let (xs, xt) = (column(&rows, 2), column(&rows, 4));
    let (s, t) = (pts[2], pts[4]);
    let ms = xs.iter().sum::<f64>() / xs.len() as f64;
    let mt = xt.iter().sum::<f64>() / xt.len() as f64;
    let prods: Vec<f64> = xs.iter().zip(&xt).map(|(a, b)| (a - ms) * (b - mt)).collect();
    let ps = SampleStats::from_slice(&prods);
    c.mc(format!("moments.cov[s={s},t={t}]"), ps.mean, ou.cov(s, t), ps.se_mean());
    let decay = (-ou.kappa * (t - s)).exp();
    let incr: Vec<f64> = xs.iter().zip(&xt).map(|(a, b)| b - decay * a).collect();
    let n = st.paths as f64;
    c.absolute(
        format!("moments.orthogonal_increment_corr[s={s},t={t}]"),
        correlation(&xs, &incr),
        0.0,
        3.0 / n.sqrt(),
    );
    Ok(())
}

fn suite_bridge(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let ou = mp.ou;
    let horizon = st.grid.t_max();
    let grid = quarter_grid(horizon)?;
    let pts = grid.points().to_vec();
    let rows = map_paths(sub_seed(st.seed, 2), st.paths, |rng| {
        let path = ou.sample_path(&grid, rng);
        let x_end = path[4];
        let mut out: Vec<f64> = pts.iter().zip(&path).map(|(&t, &x)| x - ou.bridge_weight(t, horizon) * x_end).collect();
        out.push(x_end);
        out
    });
    let (m0, v0) = ou.bridge_moments(0.0, horizon)?;
    let (m1, v1) = ou.bridge_moments(horizon, horizon)?;
    c.absolute("bridge.start_mean".into(), m0, ou.x0, 1e-12);
    c.absolute("bridge.start_variance".into(), v0, 0.0, 1e-12);
    c.absolute("bridge.end_mean".into(), m1, 0.0, 1e-12);
    c.absolute("bridge.end_variance".into(), v1, 0.0, 1e-12);
    let max_end = rows.iter().map(|r| r[4].abs()).fold(0.0, f64::max);
    c.absolute("bridge.pinned_end_pathwise".into(), max_end, 0.0, 1e-12);
    let x_end = column(&rows, 5);
    let n = st.paths as f64;
    for j in 1..=3 {
        let t = pts[j];
        let col = column(&rows, j);
        let s = SampleStats::from_slice(&col);
        let (m, v) = ou.bridge_moments(t, horizon)?;
        c.mean(format!("bridge.mean[t={t}]"), &s, m);
        c.variance(format!("bridge.variance[t={t}]"), &s, v);
        c.absolute(format!("bridge.terminal_corr[t={t}]"), correlation(&col, &x_end), 0.0, 3.0 / n.sqrt());
    }
    Ok(())
}

fn suite_projection(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    for (i, &t) in st.projection_times.iter().enumerate() {
        let pc = projection_check(mp, t, REGRESSION_SAMPLES, sub_seed(st.seed, 30 + i as u64))?;
        c.relative(format!("projection.slope[t={t}]"), pc.slope, pc.z_expected, REGRESSION_REL_TOL, Some(pc.slope_se));
    }
    let t = st.projection_times.iter().copied().fold(f64::NAN, f64::min);
    if mp.sigma * mp.ou.psi > 0.0 {
        let rc = regression_price_check(mp, t, REGRESSION_SAMPLES, sub_seed(st.seed, 39))?;
        for (k, label) in ["intercept", "x_slope", "xi_slope"].iter().enumerate() {
            c.relative(
                format!("projection.regression_{label}[t={t}]"),
                rc.estimated[k],
                rc.expected[k],
                REGRESSION_REL_TOL,
                Some(rc.std_errors[k]),
            );
        }
    }
    Ok(())
}

fn terminal_states(mp: &MarketParams, horizon: f64, paths: usize, seed: u64) -> Result<Vec<(f64, f64, f64, f64)>> {
    let grid = TimeGrid::new(vec![0.0, horizon])?;
    let rows = map_paths(seed, paths, |rng| {
        let b = simulate_joint_with(mp, &grid, rng).expect("validated inputs");
        (b.x[1], b.xi[1], b.omega[1], b.g[1])
    });
    Ok(rows)
}

fn suite_spot_law(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let rk = mp.r + mp.ou.kappa;
    for (i, &horizon) in st.maturities.iter().enumerate() {
        let rows = terminal_states(mp, horizon, st.paths, sub_seed(st.seed, 40 + i as u64))?;
        let prices: Vec<f64> = rows
            .iter()
            .map(|&(x, xi, _, _)| spot_price(mp, horizon, x, xi).map(|q| q.price))
            .collect::<Result<_>>()?;
        let law = spot_terminal_law(mp, horizon)?;
        let s = SampleStats::from_slice(&prices);
        c.mean(format!("spot_law.mean[T={horizon}]"), &s, law.mean);
        c.variance(format!("spot_law.variance[T={horizon}]"), &s, law.variance);

        // A_t = θ(p − q) + ψ/(r+κ) ∫_t^∞ e^{-ru} dβ_u
        let db = mp.discount_bundle(horizon);
        let a: Vec<f64> = rows.iter().map(|&(_, _, _, g)| mp.ou.theta * (db.p - db.q) + mp.ou.psi / rk * g).collect();
        let sa = SampleStats::from_slice(&a);
        let var_a = mp.ou.psi * mp.ou.psi * (-2.0 * mp.r * horizon).exp() / (2.0 * mp.r * rk * rk);
        c.mean(format!("spot_law.residual_dividend_mean[t={horizon}]"), &sa, mp.ou.theta * (db.p - db.q));
        c.variance(format!("spot_law.residual_dividend_variance[t={horizon}]"), &sa, var_a);
    }
    Ok(())
}

fn suite_sde(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let grid = &st.grid;
    let t_max = grid.t_max();
    let rows = map_paths(sub_seed(st.seed, 5), st.sde_paths, |rng| -> Result<(f64, f64, f64, f64)> {
        let b = simulate_joint_with(mp, grid, rng)?;
        let cmp = sde_compare(&b, mp, st.sde_start)?;
        let w = innovations_path(&b, mp)?;
        Ok((
            cmp.terminal_relative_error(),
            *w.last().unwrap(),
            xi_omega_consistency(&b, mp),
            martingale_identity_residual(&b, mp),
        ))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rel: Vec<f64> = rows.iter().map(|r| r.0).collect();
    rel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = rel[rel.len() / 2];
    c.absolute(format!("sde.median_terminal_rel_error[t={t_max}]"), median, 0.0, SDE_MEDIAN_REL_TOL);
    let w = SampleStats::from_slice(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    c.mean(format!("sde.innovations_mean[t={t_max}]"), &w, 0.0);
    c.variance(format!("sde.innovations_variance[t={t_max}]"), &w, t_max);
    let xi_res = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    c.absolute("sde.xi_omega_identity".into(), xi_res, 0.0, IDENTITY_TOL);
    let m_res = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    c.absolute("sde.martingale_identity".into(), m_res, 0.0, IDENTITY_TOL);
    Ok(())
}

fn suite_martingale(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let t_max = st.grid.t_max();
    let t_mid = 0.5 * t_max;
    let h = t_max * 1e-3;
    let grid = TimeGrid::new(vec![0.0, t_mid, t_mid + h, t_max])?;
    let rows = map_paths(sub_seed(st.seed, 6), st.paths, |rng| {
        let b = simulate_joint_with(mp, &grid, rng).expect("validated inputs");
        let m = martingale_path(&b, mp);
        (m[3], m[2] - m[1])
    });
    let m0 = mp.initial_value();
    let terminal = SampleStats::from_slice(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    c.mc(format!("martingale.mean_change[t={t_max}]"), terminal.mean - m0, 0.0, terminal.se_mean());
    let incr = SampleStats::from_slice(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let g = gamma(mp, t_mid + 0.5 * h);
    c.relative(
        format!("martingale.quadratic_variation_rate[t={t_mid}]"),
        incr.variance / h,
        g * g,
        QV_REL_TOL,
        Some(incr.se_variance() / h),
    );
    Ok(())
}

fn suite_futures(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    for (i, &maturity) in st.maturities.iter().enumerate() {
        let t = 0.5 * maturity;
        let rows = terminal_states(mp, t, st.paths, sub_seed(st.seed, 70 + i as u64))?;
        let f: Vec<f64> = rows
            .iter()
            .map(|&(x, _, om, _)| futures_price(mp, t, maturity, x, om).map(|q| q.price))
            .collect::<Result<_>>()?;
        let law = futures_terminal_law(mp, t, maturity)?;
        let s = SampleStats::from_slice(&f);
        c.mean(format!("futures.mean[t={t},T={maturity}]"), &s, law.mean);
        c.variance(format!("futures.variance[t={t},T={maturity}]"), &s, law.variance);

        let spot = spot_terminal_law(mp, maturity)?;
        let at_expiry = futures_terminal_law(mp, maturity, maturity)?;
        c.absolute(
            format!("futures.expiry_variance_reduction[T={maturity}]"),
            at_expiry.variance,
            spot.variance,
            1e-10 * spot.variance.max(1.0),
        );
        let (x, xi, om, _) = rows[0];
        let fq = futures_price(mp, t, t, x, om)?.price;
        let sq = spot_price(mp, t, x, xi)?.price;
        c.absolute(format!("futures.expiry_equals_spot[t={t}]"), fq, sq, 1e-10 * sq.abs().max(1.0));
    }
    Ok(())
}

fn suite_options(mp: &MarketParams, st: &SuiteSettings, c: &mut Checks) -> Result<()> {
    let k = st.strike;
    for (i, &horizon) in st.maturities.iter().enumerate() {
        let rows = terminal_states(mp, horizon, st.paths, sub_seed(st.seed, 80 + i as u64))?;
        let df = (-mp.r * horizon).exp();
        let payoffs: Vec<f64> = rows
            .iter()
            .map(|&(x, xi, _, _)| spot_price(mp, horizon, x, xi).map(|q| df * (q.price - k).max(0.0)))
            .collect::<Result<_>>()?;
        let s = SampleStats::from_slice(&payoffs);
        c.mean(format!("options.call_on_spot[K={k},T={horizon}]"), &s, call_on_spot(mp, k, horizon)?);
    }

    // direct Gaussian draws against the closed form
    let law = spot_terminal_law(mp, st.maturities[0])?;
    let df = (-mp.r * st.maturities[0]).exp();
    let mut rng = path_rng(sub_seed(st.seed, 88), 0);
    let sd = law.std_dev();
    let draws: Vec<f64> = (0..GAUSSIAN_DRAWS)
        .map(|_| df * (law.mean + sd * rng.sample::<f64, _>(StandardNormal) - k).max(0.0))
        .collect();
    let s = SampleStats::from_slice(&draws);
    c.mean(format!("options.gaussian_call[K={k}]"), &s, gaussian_call(&law, k, df)?);

    // call on futures: option at the first maturity on the last futures contract
    let t_opt = st.maturities[0];
    let t_fut = *st.maturities.last().unwrap();
    let rows = terminal_states(mp, t_opt, st.paths, sub_seed(st.seed, 89))?;
    let df = (-mp.r * t_opt).exp();
    let payoffs: Vec<f64> = rows
        .iter()
        .map(|&(x, _, om, _)| futures_price(mp, t_opt, t_fut, x, om).map(|q| df * (q.price - k).max(0.0)))
        .collect::<Result<_>>()?;
    let s = SampleStats::from_slice(&payoffs);
    c.mean(
        format!("options.call_on_futures[K={k},t={t_opt},T={t_fut}]"),
        &s,
        call_on_futures(mp, k, t_opt, t_fut)?,
    );
    Ok(())
}

/// Runs a named verification suite, or every suite for `"all"`.
pub fn run_suite(name: &str, mp: &MarketParams, settings: &SuiteSettings) -> Result<VerificationReport> {
    mp.validate()?;
    if settings.paths < 2 || settings.sde_paths < 2 {
        return Err(ModelError::param("paths", "need at least 2 paths"));
    }
    if settings.maturities.is_empty() || settings.projection_times.is_empty() {
        return Err(ModelError::param("maturities", "need at least one maturity and projection time"));
    }
    let selected: Vec<&str> = match name {
        "all" => SUITES.to_vec(),
        other if SUITES.contains(&other) => vec![other],
        other => return Err(ModelError::UnknownSuite(other.to_string())),
    };
    let mut checks = Checks {
        scale: settings.tolerance_scale,
        out: Vec::new(),
    };
    for s in selected {
        match s {
            "moments" => suite_moments(mp, settings, &mut checks)?,
            "bridge" => suite_bridge(mp, settings, &mut checks)?,
            "projection" => suite_projection(mp, settings, &mut checks)?,
            "spot_law" => suite_spot_law(mp, settings, &mut checks)?,
            "sde" => suite_sde(mp, settings, &mut checks)?,
            "martingale" => suite_martingale(mp, settings, &mut checks)?,
            "futures" => suite_futures(mp, settings, &mut checks)?,
            "options" => suite_options(mp, settings, &mut checks)?,
            _ => unreachable!(),
        }
    }
    Ok(VerificationReport {
        suite: name.to_string(),
        seed: settings.seed,
        paths: settings.paths,
        checks: checks.out,
        runtime_seconds: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> MarketParams {
        MarketParams::new(OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap(), 0.25, 0.05).unwrap()
    }

    fn small_settings() -> SuiteSettings {
        SuiteSettings {
            paths: 4_000,
            sde_paths: 20,
            grid: TimeGrid::uniform(1.0, 1_000).unwrap(),
            ..SuiteSettings::default()
        }
    }

    #[test]
    fn implied_initials_examples() {
        let fig2 = implied_initials(62.78, 60.0, 0.025, 0.05).unwrap();
        assert!((fig2.theta - 1.5).abs() < 1e-12);
        assert!((fig2.x0 - 1.7085).abs() < 1e-12);
        let flat = implied_initials(60.0, 60.0, 0.025, 0.05).unwrap();
        assert!((flat.x0 - flat.theta).abs() < 1e-12);
        assert!(implied_initials(1.0, 1.0, 0.0, 0.1).is_err());
        assert!(implied_initials(1.0, 1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn ou_fit_inverts_noiseless_recursion() {
        let (kappa, theta, dt): (f64, f64, f64) = (0.3, 1.1, 0.5);
        let a = (-kappa * dt).exp();
        let mut x = vec![0.2];
        for _ in 0..50 {
            let last = *x.last().unwrap();
            x.push(theta + (last - theta) * a);
        }
        let fit = ou_fit(&x, dt).unwrap();
        assert!((fit.params.kappa - kappa).abs() < 1e-6);
        assert!((fit.params.theta - theta).abs() < 1e-6);
    }

    #[test]
    fn ou_fit_recovers_simulated_parameters() {
        let truth = OuParams::new(0.2, 1.2, 0.4, 0.5).unwrap();
        let grid = TimeGrid::uniform(10_000.0, 10_000).unwrap();
        let path = truth.sample_path(&grid, &mut path_rng(8, 0));
        let fit = ou_fit(&path, 1.0).unwrap();
        let se = fit.std_errors;
        assert!((fit.params.kappa - truth.kappa).abs() < 3.0 * se.kappa);
        assert!((fit.params.theta - truth.theta).abs() < 3.0 * se.theta);
        assert!((fit.params.psi - truth.psi).abs() < 3.0 * se.psi);
        assert_eq!(fit.observations, 10_001);
    }

    #[test]
    fn ou_fit_rejections() {
        assert!(matches!(ou_fit(&[1.0; 20], 1.0), Err(ModelError::Degenerate(_))));
        let trending: Vec<f64> = (0..20).map(|i| 1.1f64.powi(i)).collect();
        assert!(matches!(ou_fit(&trending, 1.0), Err(ModelError::Degenerate(_))));
        assert!(ou_fit(&[1.0, 2.0], 1.0).is_err());
        assert!(ou_fit(&[1.0, 2.0, 1.5, 1.2], 0.0).is_err());
    }

    #[test]
    fn projection_slope_near_weight() {
        let pc = projection_check(&fig3(), 1.0, 200_000, 5).unwrap();
        assert!((pc.slope - 0.241_336_194_829_947_6).abs() < 0.02 * 0.2413);
        assert!((pc.slope - pc.z_expected).abs() < 4.0 * pc.slope_se);
    }

    #[test]
    fn projection_needs_information() {
        let mut mp = fig3();
        mp.sigma = 0.0;
        assert!(projection_check(&mp, 1.0, 100, 1).is_err());
        assert!(projection_check(&fig3(), 0.0, 100, 1).is_err());
    }

    #[test]
    fn regression_coefficients() {
        let rc = regression_price_check(&fig3(), 1.0, 400_000, 3).unwrap();
        for k in 0..3 {
            assert!(
                (rc.estimated[k] - rc.expected[k]).abs() < 4.0 * rc.std_errors[k],
                "coef {k}: {} vs {}",
                rc.estimated[k],
                rc.expected[k]
            );
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(
            run_suite("nope", &fig3(), &small_settings()),
            Err(ModelError::UnknownSuite(_))
        ));
    }

    #[test]
    fn suites_are_reproducible_and_zero_tolerance_fails() {
        let st = small_settings();
        let a = run_suite("moments", &fig3(), &st).unwrap();
        let b = run_suite("moments", &fig3(), &st).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let strict = SuiteSettings {
            tolerance_scale: 0.0,
            ..st
        };
        let c = run_suite("moments", &fig3(), &strict).unwrap();
        assert!(!c.all_pass());
        assert!(c.failures().count() > 0);
    }

    #[test]
    fn report_json_shape() {
        let report = run_suite("bridge", &fig3(), &small_settings()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        for key in ["suite", "seed", "paths", "checks", "runtime_seconds"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let check = &v["checks"][0];
        for key in ["name", "statistic", "expected", "tolerance", "se", "pass"] {
            assert!(check.get(key).is_some(), "missing {key}");
        }
    }
}
