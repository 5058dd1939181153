//! Term-structure prices against brute-force numerical integration.
//!
//! The oracle integrates the defining ODE and tail integrals numerically on a
//! fine grid, truncating the infinite horizon at `HORIZON`.

use infoprice_core::{
    pricing::schedule_bundle, spot_price, spot_price_general, spot_price_inhom, tail_integrals, MarketParams,
    OuParams, RateCurve, Schedule,
};

const HORIZON: f64 = 400.0;

/// Direct evaluation of the piecewise-constant ingredients.
struct Direct {
    rate_breaks: Vec<f64>,
    rates: Vec<f64>,
    sched_breaks: Vec<f64>,
    kappa: Vec<f64>,
    theta: Vec<f64>,
    psi: Vec<f64>,
}

impl Direct {
    fn pick(breaks: &[f64], vals: &[f64], t: f64) -> f64 {
        vals[breaks.iter().filter(|&&b| b <= t).count()]
    }

    fn cuts(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.rate_breaks.iter().chain(&self.sched_breaks).copied().collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c
    }

    /// `∫_a^b` of a step function, summed piece by piece.
    fn step_integral(breaks: &[f64], vals: &[f64], a: f64, b: f64) -> f64 {
        let mut edges = vec![a];
        edges.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
        edges.push(b);
        edges.windows(2).map(|w| Self::pick(breaks, vals, w[0]) * (w[1] - w[0])).sum()
    }

    fn rate_integral(&self, a: f64, b: f64) -> f64 {
        Self::step_integral(&self.rate_breaks, &self.rates, a, b)
    }

    fn kappa_integral(&self, a: f64, b: f64) -> f64 {
        Self::step_integral(&self.sched_breaks, &self.kappa, a, b)
    }

    fn discount(&self, t: f64) -> f64 {
        (-self.rate_integral(0.0, t)).exp()
    }

    /// `(p, h, drift, noise)` at `t`: `h` solves `h' = κh − P` backward from the
    /// truncation horizon with RK4, and the outer integrals use Simpson's rule
    /// on the same nodes.
    fn tails(&self, t: f64) -> (f64, f64, f64, f64) {
        let mut edges = vec![t];
        edges.extend(self.cuts().into_iter().filter(|&c| c > t));
        edges.push(HORIZON);
        let disc = |s: f64| (-self.rate_integral(0.0, s)).exp();
        let (mut p, mut h, mut drift, mut noise) = (0.0, 0.0, 0.0, 0.0);
        for w in edges.windows(2).rev() {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let k = Self::pick(&self.sched_breaks, &self.kappa, mid);
            let th = Self::pick(&self.sched_breaks, &self.theta, mid);
            let ps = Self::pick(&self.sched_breaks, &self.psi, mid);
            let n = 2 * (((b - a) / 0.004).ceil() as usize).max(1);
            let step = (b - a) / n as f64;
            let rhs = |s: f64, h: f64| k * h - disc(s);
            // nodes from b down to a
            let mut hs = vec![h];
            let mut s = b;
            for _ in 0..n {
                let d = -step;
                let k1 = rhs(s, h);
                let k2 = rhs(s + 0.5 * d, h + 0.5 * d * k1);
                let k3 = rhs(s + 0.5 * d, h + 0.5 * d * k2);
                let k4 = rhs(s + d, h + d * k3);
                h += d / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                s += d;
                hs.push(h);
            }
            let simpson = |f: &dyn Fn(usize) -> f64| {
                let mut acc = f(0) + f(n);
                for i in 1..n {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
                }
                acc * step / 3.0
            };
            p += simpson(&|i| disc(b - i as f64 * step));
            drift += k * th * simpson(&|i| hs[i]);
            noise += ps * ps * simpson(&|i| hs[i] * hs[i]);
        }
        (p, h, drift, noise)
    }

    /// Price from the Gaussian projection of the future dividend aggregate.
    fn price(&self, sigma: f64, t: f64, x: f64, xi: f64) -> f64 {
        let (_, h, drift, n) = self.tails(t);
        let m = drift + h * x;
        let denom = 1.0 + sigma * sigma * t * n;
        let z = sigma * sigma * t * n / denom;
        ((1.0 - z) * m + sigma * n / denom * xi) / self.discount(t)
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn two_segment_rate_curve_matches_quadrature() {
    let ou = OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap();
    let curve = RateCurve::new(vec![1.5], vec![0.02, 0.06]).unwrap();
    let direct = Direct {
        rate_breaks: vec![1.5],
        rates: vec![0.02, 0.06],
        sched_breaks: vec![],
        kappa: vec![0.15],
        theta: vec![0.5],
        psi: vec![0.15],
    };
    let sched = Schedule::constant(&ou);
    for t in [0.0, 0.5, 1.5, 2.0] {
        let tail = tail_integrals(&sched, &curve, t).unwrap();
        let (p, h, _, noise) = direct.tails(t);
        assert!(rel_close(tail.big_p, direct.discount(t), 1e-12));
        assert!(rel_close(tail.p, p, 1e-8), "p at {t}");
        assert!(rel_close(tail.h, h, 1e-8), "h at {t}");
        assert!(rel_close(tail.noise_integral, noise, 1e-8), "noise at {t}");
    }
    for (t, x, xi) in [(0.5, 0.45, 0.2), (1.5, 0.7, -0.1), (2.0, 0.55, 0.4)] {
        let got = spot_price_general(&ou, 0.25, &curve, t, x, xi).unwrap().price;
        let want = direct.price(0.25, t, x, xi);
        assert!(rel_close(got, want, 1e-7), "t={t}: {got} vs {want}");
    }
}

#[test]
fn inhomogeneous_schedule_matches_quadrature() {
    let sched = Schedule::new(vec![1.0, 2.5], vec![0.1, 0.3, 0.2], vec![0.4, 0.7, 0.5], vec![0.1, 0.2, 0.15]).unwrap();
    let curve = RateCurve::new(vec![2.0], vec![0.03, 0.05]).unwrap();
    let direct = Direct {
        rate_breaks: vec![2.0],
        rates: vec![0.03, 0.05],
        sched_breaks: vec![1.0, 2.5],
        kappa: vec![0.1, 0.3, 0.2],
        theta: vec![0.4, 0.7, 0.5],
        psi: vec![0.1, 0.2, 0.15],
    };
    for t in [0.0, 0.8, 2.2] {
        let tail = tail_integrals(&sched, &curve, t).unwrap();
        let (_, h, drift, noise) = direct.tails(t);
        assert!(rel_close(tail.h, h, 1e-8), "h at {t}");
        assert!(rel_close(tail.drift_integral, drift, 1e-8), "drift at {t}");
        assert!(rel_close(tail.noise_integral, noise, 1e-8), "noise at {t}");
    }
    for (t, x, xi) in [(0.8, 0.5, 0.1), (2.2, 0.6, -0.3)] {
        let got = spot_price_inhom(&sched, &curve, 0.3, t, x, xi).unwrap().price;
        let want = direct.price(0.3, t, x, xi);
        assert!(rel_close(got, want, 1e-7), "t={t}: {got} vs {want}");
    }
    let b = schedule_bundle(&sched, &curve, 0.3, 0.8).unwrap();
    assert!((b.f - direct.kappa_integral(0.0, 0.8)).abs() < 1e-15);
    assert!((b.f - 0.08).abs() < 1e-15);
}

#[test]
fn constant_inputs_reduce_exactly() {
    let mp = MarketParams::new(OuParams::new(0.15, 0.5, 0.15, 0.6).unwrap(), 0.25, 0.05).unwrap();
    let curve = RateCurve::constant(0.05).unwrap();
    let sched = Schedule::constant(&mp.ou);
    for (t, x, xi) in [(0.0, 0.6, 0.0), (0.25, 0.5, 0.05), (1.0, 0.3, 0.7), (5.0, 0.9, -1.0)] {
        let base = spot_price(&mp, t, x, xi).unwrap().price;
        let general = spot_price_general(&mp.ou, mp.sigma, &curve, t, x, xi).unwrap().price;
        let inhom = spot_price_inhom(&sched, &curve, mp.sigma, t, x, xi).unwrap().price;
        assert!((base - general).abs() <= 1e-12, "{base} vs {general}");
        assert!((base - inhom).abs() <= 1e-10, "{base} vs {inhom}");
    }
}
