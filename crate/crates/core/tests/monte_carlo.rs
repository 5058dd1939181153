//! Sampling checks of simulated laws against independently computed moments.

use infoprice_core::market::{omega_variance, simulate_joint_with};
use infoprice_core::num::map_paths;
use infoprice_core::oracle::projection_check;
use infoprice_core::stats::{ols, SampleStats};
use infoprice_core::{
    conditional_futures_price, futures_price, ou_fit, spot_price, MarketParams, OuParams,
    Schedule, TimeGrid,
};

const Z: f64 = 4.0;

fn market() -> MarketParams {
    MarketParams::new(OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap(), 0.25, 0.05).unwrap()
}

fn within(label: &str, got: f64, want: f64, se: f64) {
    assert!((got - want).abs() <= Z * se, "{label}: {got} vs {want}, se {se}");
}

#[test]
fn joint_paths_have_ou_and_omega_moments() {
    let mp = market();
    let grid = TimeGrid::new(vec![0.0, 0.5, 1.0, 3.0]).unwrap();
    let bundles = map_paths(11, 100_000, |rng| simulate_joint_with(&mp, &grid, rng).unwrap());
    let ou = mp.ou;
    let (k, th, psi) = (ou.kappa, ou.theta, ou.psi);
    for (j, &t) in grid.points().iter().enumerate().skip(1) {
        let xs: Vec<f64> = bundles.iter().map(|b| b.x[j]).collect();
        let om: Vec<f64> = bundles.iter().map(|b| b.omega[j]).collect();
        let sx = SampleStats::from_slice(&xs);
        let so = SampleStats::from_slice(&om);
        let mean = th + (ou.x0 - th) * (-k * t).exp();
        let var = psi * psi * (1.0 - (-2.0 * k * t).exp()) / (2.0 * k);
        within(&format!("E X[{t}]"), sx.mean, mean, sx.se_mean());
        within(&format!("Var X[{t}]"), sx.variance, var, sx.se_variance());
        within(&format!("E w[{t}]"), so.mean, 0.0, so.se_mean());
        // ω_t = a G_t + B_t with Var G_t = e^{-2rt}/(2r)
        let a = mp.sigma * psi * t / (mp.r + k);
        let want = a * a * (-2.0 * mp.r * t).exp() / (2.0 * mp.r) + t;
        assert!((omega_variance(&mp, t) - want).abs() < 1e-12 * want);
        within(&format!("Var w[{t}]"), so.variance, want, so.se_variance());
    }
}

#[test]
fn schedule_paths_match_integrating_factor_moments() {
    let schedule = Schedule::new(vec![0.8, 1.6], vec![0.4, 1.5, 0.2], vec![1.0, -0.5, 2.0], vec![0.3, 0.1, 0.5]).unwrap();
    let x0 = 0.25;
    let grid = TimeGrid::new(vec![0.0, 0.5, 1.2, 2.4]).unwrap();
    let paths = map_paths(5, 100_000, |rng| schedule.sample_path(x0, &grid, rng));

    // E X_t = e^{-f_t}(x0 + ∫ κθ e^{f_s} ds), Var X_t = e^{-2f_t} ∫ ψ² e^{2f_s} ds,
    // by midpoint rule on cells aligned with the breakpoints
    let moments = |t: f64| {
        let h = 1e-5;
        let n = (t / h).round() as usize;
        let (mut f, mut m, mut v) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let seg = schedule.at(s);
            let fm = f + seg.kappa * h / 2.0;
            m += seg.kappa * seg.theta * fm.exp() * h;
            v += seg.psi * seg.psi * (2.0 * fm).exp() * h;
            f += seg.kappa * h;
        }
        ((-f).exp() * (x0 + m), (-2.0 * f).exp() * v)
    };
    for (j, &t) in grid.points().iter().enumerate().skip(1) {
        let xs: Vec<f64> = paths.iter().map(|p| p[j]).collect();
        let st = SampleStats::from_slice(&xs);
        let (mean, var) = moments(t);
        let (m_exact, v_exact) = schedule.transition_moments(x0, 0.0, t);
        assert!((m_exact - mean).abs() < 1e-8 && (v_exact - var).abs() < 1e-8, "t={t}");
        within(&format!("mean[{t}]"), st.mean, mean, st.se_mean());
        within(&format!("var[{t}]"), st.variance, var, st.se_variance());
    }
}

#[test]
fn projection_error_shrinks_with_sample_size() {
    let mp = market();
    let t = 1.0;
    let mut prev: Option<f64> = None;
    for (i, n) in [50_000usize, 100_000, 200_000, 400_000].into_iter().enumerate() {
        let c = projection_check(&mp, t, n, 100 + i as u64).unwrap();
        within(&format!("slope[n={n}]"), c.slope, c.z_expected, c.slope_se);
        if let Some(p) = prev {
            let ratio = c.slope_se / p;
            assert!((ratio - 0.5f64.sqrt()).abs() < 0.03, "se ratio {ratio} at n={n}");
        }
        prev = Some(c.slope_se);
    }
}

#[test]
fn ou_fit_recovers_parameters_on_long_series() {
    let truth = OuParams::new(0.8, 1.2, 0.4, 1.2).unwrap();
    let dt = 0.1;
    let mut prev_se = f64::INFINITY;
    for (i, n) in [2_000usize, 20_000, 200_000].into_iter().enumerate() {
        let grid = TimeGrid::uniform(dt * n as f64, n).unwrap();
        let series = map_paths(40 + i as u64, 1, |rng| truth.sample_path(&grid, rng)).remove(0);
        let fit = ou_fit(&series, dt).unwrap();
        within(&format!("kappa[n={n}]"), fit.params.kappa, truth.kappa, fit.std_errors.kappa);
        within(&format!("theta[n={n}]"), fit.params.theta, truth.theta, fit.std_errors.theta);
        within(&format!("psi[n={n}]"), fit.params.psi, truth.psi, fit.std_errors.psi);
        assert!(fit.std_errors.kappa < prev_se / 2.5, "kappa se did not shrink at n={n}");
        prev_se = fit.std_errors.kappa;
    }
}

/// Regresses S_T on (1, X_t, ω_t) and returns the fit.
fn futures_regression(mp: &MarketParams, t: f64, maturity: f64, paths: usize) -> infoprice_core::stats::OlsFit {
    let grid = TimeGrid::new(vec![0.0, t, maturity]).unwrap();
    let rows = map_paths(77, paths, |rng| {
        let b = simulate_joint_with(mp, &grid, rng).unwrap();
        let s = spot_price(mp, maturity, b.x[2], b.xi[2]).unwrap().price;
        (b.x[1], b.omega[1], s)
    });
    let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let w: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.2).collect();
    ols(&s, &[&x, &w]).unwrap()
}

fn coefficients<F: Fn(f64, f64) -> f64>(price: F) -> [f64; 3] {
    let c = price(0.0, 0.0);
    [c, price(1.0, 0.0) - c, price(0.0, 1.0) - c]
}

#[test]
fn conditional_futures_is_regression_of_terminal_spot() {
    let mp = market();
    for (t, maturity) in [(0.5, 1.0), (1.0, 2.0)] {
        let fit = futures_regression(&mp, t, maturity, 200_000);
        let want = coefficients(|x, w| conditional_futures_price(&mp, t, maturity, x, w).unwrap().price);
        for i in 0..3 {
            within(&format!("coef{i}[{t},{maturity}]"), fit.coefficients[i], want[i], fit.std_errors[i]);
        }
    }
}

#[test]
fn published_futures_loading_understates_information() {
    // the closed-form futures price drops the dependence of ω_t on later dividend
    // noise; its ω_t coefficient sits well below the regression estimate
    let mp = market();
    let (t, maturity) = (0.5, 2.0);
    let fit = futures_regression(&mp, t, maturity, 200_000);
    let closed = coefficients(|x, w| futures_price(&mp, t, maturity, x, w).unwrap().price);
    within("x coefficient", fit.coefficients[1], closed[1], fit.std_errors[1]);
    assert!(fit.coefficients[2] - closed[2] > 10.0 * fit.std_errors[2], "{:?} vs {:?}", fit.coefficients, closed);
}
