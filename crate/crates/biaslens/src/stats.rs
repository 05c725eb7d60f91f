//! Two-tailed significance tests for gender-count imbalances under a
//! fair-coin Bernoulli null.
//!
//! Two variants are always computed side by side: an exact binomial test
//! (double the larger-count tail, clamped at 1) and a normal z-test. The
//! normal tail is evaluated through the scaled complementary error function,
//! not through `1 - cdf`, so far-tail p-values on the order of `1e-28` keep
//! full relative precision.

use serde::Serialize;
use thiserror::Error;

/// Largest `n` for which the exact binomial tail is summed directly.
/// Above this the exact field falls back to the normal approximation and
/// the result is flagged.
pub const EXACT_LIMIT: u64 = 10_000;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    /// Both counts are zero; no test is defined.
    #[error("undefined input: total count is zero")]
    EmptySample,
}

/// A female/male observation pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountPair {
    pub female: u64,
    pub male: u64,
}

impl CountPair {
    pub fn new(female: u64, male: u64) -> Self {
        Self { female, male }
    }

    /// Total number of observations.
    pub fn n(&self) -> u64 {
        self.female + self.male
    }
}

/// Outcome of both test variants on one count pair.
///
/// `z` is signed: positive means male excess. `p_exact` is the exact
/// binomial p-value unless `exact_fallback` is set, in which case `n`
/// exceeded [`EXACT_LIMIT`] and the normal value was substituted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignificanceResult {
    pub n: u64,
    pub z: f64,
    pub p_exact: f64,
    pub p_normal: f64,
    pub continuity_used: bool,
    pub exact_fallback: bool,
}

/// z = (k_male - n/2) / sqrt(n/4).
///
/// With `continuity`, 0.5 is subtracted from |k_male - n/2| (floored at 0)
/// before dividing; the sign is preserved.
pub fn z_score(pair: CountPair, continuity: bool) -> Result<f64, StatsError> {
    let n = pair.n();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let half = n as f64 / 2.0;
    let dev = pair.male as f64 - half;
    let dev = if continuity {
        dev.signum() * (dev.abs() - 0.5).max(0.0)
    } else {
        dev
    };
    Ok(dev / (n as f64 / 4.0).sqrt())
}

/// Upper tail of the standard normal, P(Z > z).
///
/// Evaluated as `0.5 * erfc(z / sqrt(2))` with an erfc that never subtracts
/// from 1 in the tail: a Maclaurin series below `z/sqrt(2) = 2` and a Lentz
/// continued fraction for the scaled function above. Relative error stays
/// below 1e-13 wherever the result is representable; beyond `z ~ 38.6` the
/// true value drops under the smallest subnormal and 0 is returned.
pub fn normal_sf(z: f64) -> f64 {
    if z < 0.0 {
        return 1.0 - normal_sf(-z);
    }
    let x = z / SQRT_2;
    if x < 2.0 {
        0.5 * (1.0 - erf_series(x))
    } else {
        // 0.5 * erfcx(x) * exp(-x^2), with the exponential applied last
        let v = 0.5 * erfcx_cf(x);
        v * (-x * x).exp()
    }
}

/// ln P(Z > z), finite for the whole far tail (no underflow up to huge z).
pub fn ln_normal_sf(z: f64) -> f64 {
    if z < 2.0 * SQRT_2 {
        normal_sf(z).ln()
    } else {
        let x = z / SQRT_2;
        (0.5 * erfcx_cf(x)).ln() - x * x
    }
}

/// Two-tailed normal test: p = min(1, 2 * sf(|z|)).
pub fn two_tailed_normal(pair: CountPair, continuity: bool) -> Result<f64, StatsError> {
    let z = z_score(pair, continuity)?;
    Ok((2.0 * normal_sf(z.abs())).min(1.0))
}

/// Two-tailed exact binomial test under Binomial(n, 0.5):
/// p = min(1, 2 * P(X >= max(k_f, k_m))).
///
/// The tail is summed in log space from the largest term downward, so the
/// result is stable for any split up to [`EXACT_LIMIT`] trials. Above the
/// limit the normal test is returned instead (callers that need the flag
/// should go through [`significance`]).
pub fn two_tailed_exact(pair: CountPair) -> Result<f64, StatsError> {
    let n = pair.n();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    if n > EXACT_LIMIT {
        return two_tailed_normal(pair, false);
    }
    let m = pair.female.max(pair.male);
    Ok((2.0 * binom_upper_tail_half(n, m)).min(1.0))
}

/// Both variants plus the z-score, with fallback flagged.
pub fn significance(pair: CountPair, continuity: bool) -> Result<SignificanceResult, StatsError> {
    let z = z_score(pair, continuity)?;
    let p_normal = two_tailed_normal(pair, continuity)?;
    let exact_fallback = pair.n() > EXACT_LIMIT;
    let p_exact = if exact_fallback {
        two_tailed_normal(pair, false)?
    } else {
        two_tailed_exact(pair)?
    };
    Ok(SignificanceResult {
        n: pair.n(),
        z,
        p_exact,
        p_normal,
        continuity_used: continuity,
        exact_fallback,
    })
}

/// P(X >= m) for X ~ Binomial(n, 1/2), requiring m >= n/2.
///
/// The leading term ln C(n, m) - n ln 2 is accumulated as a log; successive
/// terms decay by the ratio (n-k)/(k+1) <= 1, so the relative sum is bounded
/// and carries no cancellation.
fn binom_upper_tail_half(n: u64, m: u64) -> f64 {
    debug_assert!(2 * m >= n && m <= n);
    // odd n with m = (n+1)/2: the tail is exactly one half by symmetry
    if 2 * m == n + 1 {
        return 0.5;
    }
    let ln_lead = ln_choose(n, m) - n as f64 * std::f64::consts::LN_2;
    let mut rel = 1.0f64;
    let mut cur = 1.0f64;
    for k in m..n {
        cur *= (n - k) as f64 / (k + 1) as f64;
        rel += cur;
        if cur < rel * 1e-18 {
            break;
        }
    }
    (ln_lead + rel.ln()).exp()
}

/// ln C(n, k) by direct summation of ln((n-j+i)/i) over the shorter side.
fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut acc = 0.0f64;
    for i in 1..=k {
        acc += ((n - k + i) as f64).ln() - (i as f64).ln();
    }
    acc
}

/// Maclaurin series for erf, adequate on [0, 2).
///
/// erf(x) = 2/sqrt(pi) * sum (-1)^k x^(2k+1) / (k! (2k+1)).
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -x2 / k as f64;
        let contrib = term / (2 * k + 1) as f64;
        sum += contrib;
        if contrib.abs() < sum.abs() * 1e-18 || k > 120 {
            break;
        }
    }
    2.0 * FRAC_1_SQRT_PI * sum
}

/// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x) for
/// x >= 2, via the Laplace continued fraction evaluated with modified Lentz:
///
/// sqrt(pi) e^(x^2) erfc(x) = 1/(x+ (1/2)/(x+ (2/2)/(x+ (3/2)/(x+ ...))))
fn erfcx_cf(x: f64) -> f64 {
    debug_assert!(x >= 2.0);
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0f64;
    for i in 1..400u32 {
        let a = i as f64 / 2.0;
        d = x + a * d;
        if d == 0.0 {
            d = TINY;
        }
        c = x + a / c;
        if c == 0.0 {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}
