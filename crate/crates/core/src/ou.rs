//! Ornstein–Uhlenbeck dividend process: exact moments, transitions, bridges
//! and the piecewise-constant time-inhomogeneous variant.
//!
//! All samplers use exact Gaussian transitions, so sampled marginals carry no
//! discretization bias whatever the grid spacing.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::num::{one_minus_exp_neg, sinh_product_ratio, sinh_ratio};

/// Constants of `dX = κ(θ − X)dt + ψ dβ`, `X(0) = x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub kappa: f64,
    pub theta: f64,
    pub psi: f64,
    pub x0: f64,
}

impl OuParams {
    pub fn new(kappa: f64, theta: f64, psi: f64, x0: f64) -> Result<Self> {
        let p = OuParams {
            kappa,
            theta,
            psi,
            x0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(ModelError::param("kappa", "must be finite and > 0"));
        }
        if !(self.psi.is_finite() && self.psi >= 0.0) {
            return Err(ModelError::param("psi", "must be finite and >= 0"));
        }
        if !self.theta.is_finite() {
            return Err(ModelError::param("theta", "must be finite"));
        }
        if !self.x0.is_finite() {
            return Err(ModelError::param("x0", "must be finite"));
        }
        Ok(())
    }

    /// Stationary variance `ψ²/(2κ)`.
    pub fn stationary_variance(&self) -> f64 {
        self.psi * self.psi / (2.0 * self.kappa)
    }

    /// `E[X_t]`.
    pub fn mean(&self, t: f64) -> f64 {
        self.theta + (self.x0 - self.theta) * (-self.kappa * t).exp()
    }

    /// `Cov[X_s, X_t]`; arguments may be given in either order.
    pub fn cov(&self, s: f64, t: f64) -> f64 {
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        self.stationary_variance() * (-self.kappa * (t - s)).exp() * one_minus_exp_neg(2.0 * self.kappa * s)
    }

    /// `Var[X_t]`.
    pub fn variance(&self, t: f64) -> f64 {
        self.stationary_variance() * one_minus_exp_neg(2.0 * self.kappa * t)
    }

    /// Conditional mean and standard deviation of `X_{t+dt}` given `X_t = x`.
    pub fn transition_moments(&self, x: f64, dt: f64) -> (f64, f64) {
        let decay = (-self.kappa * dt).exp();
        let sd = (self.stationary_variance() * one_minus_exp_neg(2.0 * self.kappa * dt)).sqrt();
        (self.theta + (x - self.theta) * decay, sd)
    }

    /// Exact transition `X_{t+dt}` given `X_t = x` driven by the standard normal `draw`.
    pub fn transition_sample(&self, x: f64, dt: f64, draw: f64) -> f64 {
        let (m, sd) = self.transition_moments(x, dt);
        m + sd * draw
    }

    /// Exact path on `grid`, chaining transitions from `x0`.
    pub fn sample_path<R: Rng + ?Sized>(&self, grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
        let pts = grid.points();
        let mut out = Vec::with_capacity(pts.len());
        let mut x = self.x0;
        out.push(x);
        for w in pts.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            x = self.transition_sample(x, w[1] - w[0], z);
            out.push(x);
        }
        out
    }

    /// The weight `sinh(κt)/sinh(κT)` attached to `X_T` in the bridge decomposition.
    pub fn bridge_weight(&self, t: f64, horizon: f64) -> f64 {
        sinh_ratio(self.kappa * t, self.kappa * horizon)
    }

    /// Mean and variance of the bridge `b_tT = X_t − sinh(κt)/sinh(κT) X_T`.
    pub fn bridge_moments(&self, t: f64, horizon: f64) -> Result<(f64, f64)> {
        if !(horizon > 0.0) {
            return Err(ModelError::param("T", "bridge horizon must be > 0"));
        }
        if !(0.0..=horizon).contains(&t) {
            return Err(ModelError::TimeOrder(format!(
                "bridge time {t} outside [0, {horizon}]"
            )));
        }
        let k = self.kappa;
        let w_start = sinh_ratio(k * (horizon - t), k * horizon);
        let w_end = sinh_ratio(k * t, k * horizon);
        let mean = w_start * self.x0 + (1.0 - w_end - w_start) * self.theta;
        let var = self.psi * self.psi / k * sinh_product_ratio(k * t, k * (horizon - t));
        Ok((mean, var))
    }

    /// Samples a bridge path by simulating `X` on `grid` and pinning its last value.
    pub fn bridge_sample<R: Rng + ?Sized>(&self, grid: &TimeGrid, rng: &mut R) -> Vec<BridgeState> {
        let horizon = grid.t_max();
        let path = self.sample_path(grid, rng);
        let x_end = *path.last().unwrap();
        grid.points()
            .iter()
            .zip(&path)
            .map(|(&t, &x)| {
                let value = if t == horizon {
                    0.0
                } else if t == 0.0 {
                    x
                } else {
                    x - self.bridge_weight(t, horizon) * x_end
                };
                BridgeState { t, horizon, value }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeState {
    pub t: f64,
    pub horizon: f64,
    pub value: f64,
}

/// Strictly increasing simulation times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(ModelError::InvalidGrid("grid is empty".into()));
        }
        if points[0] != 0.0 {
            return Err(ModelError::InvalidGrid("grid must start at 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::InvalidGrid("grid contains non-finite times".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(TimeGrid { points })
    }

    /// `steps + 1` equally spaced points on `[0, t_end]`.
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(t_end > 0.0) {
            return Err(ModelError::InvalidGrid("uniform grid needs t_end > 0 and steps >= 1".into()));
        }
        let points = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        TimeGrid::new(points)
    }

    /// Parses `start:end:step`. A positive start is preceded by the origin.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(ModelError::InvalidGrid(format!("expected start:end:step, got `{spec}`")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| ModelError::InvalidGrid(format!("cannot parse `{s}` in `{spec}`")))
        };
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(start >= 0.0 && end > start && step > 0.0) {
            return Err(ModelError::InvalidGrid(format!(
                "need 0 <= start < end and step > 0 in `{spec}`"
            )));
        }
        let steps = ((end - start) / step).round().max(1.0) as usize;
        let mut points = Vec::with_capacity(steps + 2);
        if start > 0.0 {
            points.push(0.0);
        }
        points.extend((0..=steps).map(|i| start + (end - start) * i as f64 / steps as f64));
        TimeGrid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the first point `>= t`.
    pub fn index_at_or_after(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|&p| p >= t)
    }
}

/// Piecewise-constant κ, θ, ψ. Interval `i` is `[b_{i-1}, b_i)` with `b_{-1} = 0`;
/// the last value holds on `[b_last, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub breakpoints: Vec<f64>,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
}

/// One constant piece of a [`Schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSegment {
    pub start: f64,
    pub end: f64,
    pub kappa: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Schedule {
    pub fn new(breakpoints: Vec<f64>, kappa: Vec<f64>, theta: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        let s = Schedule {
            breakpoints,
            kappa,
            theta,
            psi,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(p: &OuParams) -> Self {
        Schedule {
            breakpoints: vec![],
            kappa: vec![p.kappa],
            theta: vec![p.theta],
            psi: vec![p.psi],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.breakpoints.len() + 1;
        if self.kappa.len() != n || self.theta.len() != n || self.psi.len() != n {
            return Err(ModelError::InvalidSchedule(format!(
                "{} breakpoints need {n} values each for kappa, theta and psi",
                self.breakpoints.len()
            )));
        }
        if let Some(&first) = self.breakpoints.first() {
            if !(first > 0.0) {
                return Err(ModelError::InvalidSchedule("first breakpoint must be > 0".into()));
            }
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) || self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::InvalidSchedule("breakpoints must be finite and strictly increasing".into()));
        }
        if self.kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(ModelError::InvalidSchedule("kappa values must be > 0".into()));
        }
        if self.psi.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ModelError::InvalidSchedule("psi values must be >= 0".into()));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::InvalidSchedule("theta values must be finite".into()));
        }
        Ok(())
    }

    fn piece(&self, i: usize) -> ScheduleSegment {
        ScheduleSegment {
            start: if i == 0 { 0.0 } else { self.breakpoints[i - 1] },
            end: self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY),
            kappa: self.kappa[i],
            theta: self.theta[i],
            psi: self.psi[i],
        }
    }

    /// Constant pieces covering `[from, to]`, clipped to that interval.
    pub fn segments(&self, from: f64, to: f64) -> Vec<ScheduleSegment> {
        (0..self.kappa.len())
            .map(|i| self.piece(i))
            .filter(|p| p.end > from && p.start < to)
            .map(|p| ScheduleSegment {
                start: p.start.max(from),
                end: p.end.min(to),
                ..p
            })
            .collect()
    }

    /// Values in force at time `t`.
    pub fn at(&self, t: f64) -> ScheduleSegment {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        self.piece(i)
    }

    /// Integrating factor `f_t = ∫₀ᵗ κ_s ds`.
    pub fn integrated_kappa(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.segments(0.0, t)
            .iter()
            .map(|s| s.kappa * (s.end - s.start))
            .sum()
    }

    /// Conditional mean and variance of `X_t` given `X_s = x`, `s <= t`.
    pub fn transition_moments(&self, x: f64, s: f64, t: f64) -> (f64, f64) {
        let mut mean = x;
        let mut var = 0.0;
        for seg in self.segments(s, t) {
            let dt = seg.end - seg.start;
            let decay = (-seg.kappa * dt).exp();
            mean = decay * mean + seg.theta * one_minus_exp_neg(seg.kappa * dt);
            var = decay * decay * var
                + seg.psi * seg.psi * one_minus_exp_neg(2.0 * seg.kappa * dt) / (2.0 * seg.kappa);
        }
        (mean, var)
    }

    /// Exact path of the time-inhomogeneous OU process, one normal draw per grid step.
    pub fn sample_path<R: Rng + ?Sized>(&self, x0: f64, grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
        let pts = grid.points();
        let mut out = Vec::with_capacity(pts.len());
        let mut x = x0;
        out.push(x);
        for w in pts.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            let (m, v) = self.transition_moments(x, w[0], w[1]);
            x = m + v.sqrt() * z;
            out.push(x);
        }
        out
    }
}
