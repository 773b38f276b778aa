//! The Lobachevsky function `Λ(x) = -∫₀ˣ ln|2 sin t| dt` and its derivatives.
//!
//! `Λ` is odd and π-periodic, so every argument is reduced to `[0, π/2]`
//! where it is evaluated by the series
//!
//! ```text
//! Λ(x) = x - x ln(2x) + Σ_{n≥1} ζ(2n) x^{2n+1} / (n (2n+1) π^{2n})
//! ```
//!
//! The logarithmic singularity at the origin is carried by the closed-form
//! part; the remaining power series converges at least as fast as `4^{-n}`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Angles closer than this to a multiple of π are treated as singular.
pub const SINGULAR_EPS: f64 = 1e-12;

/// `ζ(2n) / (n (2n+1) π^{2n})` for `n = 1, 2, …`.
const SERIES: [f64; 30] = [
    5.555_555_555_555_555_25e-2,
    1.111_111_111_111_111_11e-3,
    5.039_052_658_100_277_10e-5,
    2.939_447_383_891_828_51e-6,
    1.943_436_286_870_630_30e-7,
    1.387_438_641_542_562_28e-8,
    1.044_092_754_851_132_34e-9,
    8.167_135_584_551_352_09e-11,
    6.581_241_671_581_576_85e-12,
    5.429_797_905_855_281_32e-13,
    4.566_488_655_929_372_52e-14,
    3.901_951_136_637_480_41e-15,
    3.379_062_307_725_591_84e-16,
    2.959_903_366_170_899_68e-17,
    2.618_489_680_557_351_40e-18,
    2.336_523_489_126_143_62e-19,
    2.100_812_837_917_714_98e-20,
    1.901_648_975_781_257_55e-21,
    1.731_755_715_440_370_11e-22,
    1.585_591_247_569_346_08e-23,
    1.458_873_369_000_764_17e-24,
    1.348_249_931_392_623_80e-25,
    1.251_065_828_912_595_33e-26,
    1.165_195_473_796_748_07e-27,
    1.088_920_516_594_683_78e-28,
    1.020_839_350_022_452_57e-29,
    9.597_992_823_337_683_23e-31,
    9.048_451_066_886_512_65e-32,
    8.551_796_823_342_126_35e-33,
    8.101_334_206_760_558_26e-34,
];

/// Reduce `x` modulo π into `(-π/2, π/2]`.
fn reduce(x: f64) -> f64 {
    let r = x - PI * (x / PI).round();
    if r <= -FRAC_PI_2 {
        r + PI
    } else if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// Series evaluation on the fundamental domain `[0, π/2]`.
fn lob_fundamental(x: f64) -> f64 {
    debug_assert!((0.0..=FRAC_PI_2 + 1e-15).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    let mut power = x2;
    let mut sum = 0.0;
    for &c in SERIES.iter() {
        let term = c * power;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        power *= x2;
    }
    x * (1.0 - (2.0 * x).ln() + sum)
}

/// Lobachevsky function `Λ(x)`.
pub fn lob(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(x));
    }
    let r = reduce(x);
    Ok(if r < 0.0 {
        -lob_fundamental(-r)
    } else {
        lob_fundamental(r)
    })
}

fn check_regular(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(x));
    }
    if reduce(x).abs() < SINGULAR_EPS {
        return Err(Error::Singularity(x));
    }
    Ok(())
}

/// `Λ'(x) = -ln|2 sin x|`.
pub fn lob_deriv(x: f64) -> Result<f64> {
    check_regular(x)?;
    Ok(-(2.0 * x.sin().abs()).ln())
}

/// `Λ''(x) = -cot x`.
pub fn lob_second(x: f64) -> Result<f64> {
    check_regular(x)?;
    Ok(-x.cos() / x.sin())
}
