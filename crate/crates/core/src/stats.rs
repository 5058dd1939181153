//! Sample statistics used by the Monte Carlo oracles.

/// Running moments of a sample, accumulated in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Fourth central moment (biased).
    pub m4: f64,
    /// Third central moment (biased).
    pub m3: f64,
}

impl SampleStats {
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in xs {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        SampleStats {
            n,
            mean,
            variance: if n > 1 { m2 / (nf - 1.0) } else { 0.0 },
            m3: m3 / nf,
            m4: m4 / nf,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the mean.
    pub fn se_mean(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the variance estimate, `sqrt((m4 − s⁴)/n)`.
    pub fn se_variance(&self) -> f64 {
        let s2 = self.variance;
        ((self.m4 - s2 * s2).max(0.0) / self.n as f64).sqrt()
    }

    pub fn skewness(&self) -> f64 {
        let biased = self.variance * (self.n as f64 - 1.0) / self.n as f64;
        self.m3 / biased.powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        let biased = self.variance * (self.n as f64 - 1.0) / self.n as f64;
        self.m4 / (biased * biased) - 3.0
    }
}

/// Sample covariance (unbiased).
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0)
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let c = covariance(xs, ys);
    let vx = covariance(xs, xs);
    let vy = covariance(ys, ys);
    c / (vx * vy).sqrt()
}

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one slope per regressor.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Covariance matrix of the coefficients, same ordering.
    pub covariance: Vec<Vec<f64>>,
    pub residual_variance: f64,
    pub n: usize,
}

/// Regresses `y` on an intercept and the columns of `regressors`.
///
/// Returns `None` when the design matrix is singular.
pub fn ols(y: &[f64], regressors: &[&[f64]]) -> Option<OlsFit> {
    let n = y.len();
    let k = regressors.len() + 1;
    if n <= k || regressors.iter().any(|c| c.len() != n) {
        return None;
    }
    // center columns for conditioning, then recover the intercept
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let means: Vec<f64> = regressors.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let m = k - 1;
    let mut xtx = vec![vec![0.0; m]; m];
    let mut xty = vec![0.0; m];
    for i in 0..n {
        for a in 0..m {
            let xa = regressors[a][i] - means[a];
            xty[a] += xa * (y[i] - y_mean);
            for b in 0..=a {
                xtx[a][b] += xa * (regressors[b][i] - means[b]);
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            xtx[b][a] = xtx[a][b];
        }
    }
    let inv = invert(&xtx)?;
    let slopes: Vec<f64> = (0..m).map(|a| (0..m).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let intercept = y_mean - slopes.iter().zip(&means).map(|(s, mu)| s * mu).sum::<f64>();

    let mut rss = 0.0;
    for i in 0..n {
        let fitted = intercept + (0..m).map(|a| slopes[a] * regressors[a][i]).sum::<f64>();
        let e = y[i] - fitted;
        rss += e * e;
    }
    let s2 = rss / (nf - k as f64);
    let mut std_errors = Vec::with_capacity(k);
    let mut var_int = 1.0 / nf;
    for a in 0..m {
        for b in 0..m {
            var_int += means[a] * inv[a][b] * means[b];
        }
    }
    std_errors.push((s2 * var_int).sqrt());
    for a in 0..m {
        std_errors.push((s2 * inv[a][a]).sqrt());
    }
    let mut covariance = vec![vec![0.0; k]; k];
    covariance[0][0] = s2 * var_int;
    for a in 0..m {
        let c: f64 = -s2 * (0..m).map(|b| inv[a][b] * means[b]).sum::<f64>();
        covariance[0][a + 1] = c;
        covariance[a + 1][0] = c;
        for b in 0..m {
            covariance[a + 1][b + 1] = s2 * inv[a][b];
        }
    }
    let mut coefficients = vec![intercept];
    coefficients.extend(slopes);
    Some(OlsFit {
        coefficients,
        std_errors,
        covariance,
        residual_variance: s2,
        n,
    })
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap())?;
        if aug[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        aug.swap(col, piv);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[row][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_plane() {
        let x1: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let x2: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 1.5 - 2.0 * a + 0.25 * b).collect();
        let fit = ols(&y, &[&x1, &x2]).unwrap();
        assert!((fit.coefficients[0] - 1.5).abs() < 1e-10);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!((fit.coefficients[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn ols_detects_collinearity() {
        let x1: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x2: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let y = x1.clone();
        assert!(ols(&y, &[&x1, &x2]).is_none());
        let flat = vec![3.0; 20];
        assert!(ols(&y, &[&flat]).is_none());
    }

    #[test]
    fn moments_of_small_sample() {
        let s = SampleStats::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.skewness().abs() < 1e-15);
    }
}
