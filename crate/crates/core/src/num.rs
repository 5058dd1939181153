//! Small numerical kernels shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// `1 - e^{-x}` without cancellation for small `x`.
#[inline]
pub fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `(1 - e^{-x d}) / x`, continuous through `x = 0` where it equals `d`.
#[inline]
pub fn exp_decay_integral(x: f64, d: f64) -> f64 {
    let xd = x * d;
    if xd.abs() < 1e-8 {
        d * (1.0 - 0.5 * xd)
    } else {
        one_minus_exp_neg(xd) / x
    }
}

/// `sinh(a) / sinh(b)` for `0 <= a <= b`, `b > 0`, stable for tiny and huge arguments.
#[inline]
pub fn sinh_ratio(a: f64, b: f64) -> f64 {
    debug_assert!(b > 0.0 && a >= 0.0 && a <= b);
    (a - b).exp() * (-2.0 * a).exp_m1() / (-2.0 * b).exp_m1()
}

/// `sinh(a) sinh(c) / sinh(a + c)` for `a, c >= 0`, `a + c > 0`.
#[inline]
pub fn sinh_product_ratio(a: f64, c: f64) -> f64 {
    0.5 * one_minus_exp_neg(2.0 * a) * one_minus_exp_neg(2.0 * c) / one_minus_exp_neg(2.0 * (a + c))
}

/// Standard normal distribution function, accurate in both tails.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Generator for path `index` of a run seeded with `seed`.
///
/// Every path owns an independent ChaCha stream, so results do not depend on
/// how paths are split across worker threads.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` once per path in parallel, each with its own substream of `seed`.
/// Output order follows the path index.
pub fn map_paths<T, F>(seed: u64, paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
{
    (0..paths as u64)
        .into_par_iter()
        .map(|i| f(&mut path_rng(seed, i)))
        .collect()
}

/// Derives an independent seed for a labelled sub-experiment.
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
