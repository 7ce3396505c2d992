//! Sampling the maximum of `t` i.i.d. draws through the inverse CDF.
//!
//! If `X_1..X_t` are i.i.d. with CDF `F`, then `P(max <= x) = F(x)^t`, so
//! `F^{-1}(U^{1/t})` with `U ~ Uniform(0, 1)` is an exact draw of the
//! maximum. Real-valued `t` extends this continuously.

use rand::distr::Open01;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// `inverse_cdf(u^{1/t})` for a given uniform `u`.
pub fn max_transform_quantile<F: Fn(f64) -> f64>(inverse_cdf: F, t: f64, u: f64) -> f64 {
    inverse_cdf(u.powf(1.0 / t))
}

/// Draws the maximum of `t` samples from the distribution with the given
/// inverse CDF. `t` must be at least 1.
pub fn max_transform_sample<F, R>(inverse_cdf: F, t: f64, rng: &mut R) -> f64
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    debug_assert!(t >= 1.0, "max transform needs t >= 1, got {t}");
    let u: f64 = rng.sample(Open01);
    max_transform_quantile(inverse_cdf, t, u)
}

/// Standard normal quantile function.
pub fn standard_normal_quantile(p: f64) -> f64 {
    thread_local! {
        static STD: Normal = Normal::standard();
    }
    STD.with(|n| n.inverse_cdf(p))
}

/// Maximum of `t` draws from `N(mean, sd^2)`.
pub fn gaussian_max_sample<R: Rng + ?Sized>(mean: f64, sd: f64, t: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    max_transform_sample(|p| mean + sd * standard_normal_quantile(p), t, rng)
}
