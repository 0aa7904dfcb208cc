//! Closed-form exponential bounds and the Gaussian special functions used as
//! their missing factors.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Switch point between the `erfc` product and the continued fraction.
const MILLS_SPLIT: f64 = 6.0;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    }
}

/// `1 - Phi(x)`, accurate in the far right tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// `Theta(x) = (1 - Phi(x)) e^{x^2/2}`, Mill's ratio divided by `sqrt(2 pi)`.
pub fn mills_ratio(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Mill's ratio is evaluated on x >= 0, got {x}"
        )));
    }
    Ok(theta(x))
}

/// Unchecked [`mills_ratio`] for callers that already validated `x >= 0`.
pub fn theta(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x < MILLS_SPLIT {
        normal_sf(x) * (0.5 * x * x).exp()
    } else {
        mills_continued_fraction(x) / SQRT_2PI
    }
}

/// `(1 - Phi(x)) / phi(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))` by the
/// modified Lentz algorithm.
fn mills_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    1.0 / f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundName {
    Bennett,
    Hoeffding,
    Bernstein,
}

/// A classical tail bound. `valid` records whether the parameter
/// preconditions held; `value` is then a probability bound in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub name: BoundName,
    pub valid: bool,
}

fn checked(x: f64, sigma: f64) -> bool {
    x >= 0.0 && sigma > 0.0 && x.is_finite() && sigma.is_finite()
}

/// `B(x, sigma) = ((x + sigma)/sigma)^{-sigma x - sigma^2} e^{x sigma}`.
pub fn bennett_bound(x: f64, sigma: f64) -> BoundValue {
    let valid = checked(x, sigma);
    let log = if valid {
        -(sigma * x + sigma * sigma) * (x / sigma).ln_1p() + x * sigma
    } else {
        f64::NAN
    };
    BoundValue {
        value: log.exp().min(1.0),
        name: BoundName::Bennett,
        valid,
    }
}

/// `log H_n(x, sigma)`; `-inf` past the support edge `x > n / sigma`.
pub fn log_hoeffding(x: f64, sigma: f64, n: f64) -> f64 {
    if x > n / sigma {
        return f64::NEG_INFINITY;
    }
    let s2 = sigma * sigma;
    // x sigma may round past n right at the boundary; the second factor is 1 there.
    let y = (x * sigma).min(n);
    let first = -(y + s2) * (x / sigma).ln_1p();
    let second = if y < n { -(n - y) * (-y / n).ln_1p() } else { 0.0 };
    n / (n + s2) * (first + second)
}

/// Hoeffding's bound `H_n(x, sigma)` on `P(S_n >= x sigma)` for summands
/// bounded above by 1.
pub fn hoeffding_bound(x: f64, sigma: f64, n: u64) -> BoundValue {
    let valid = checked(x, sigma) && n >= 1;
    let value = if valid {
        log_hoeffding(x, sigma, n as f64).exp().min(1.0)
    } else {
        f64::NAN
    };
    BoundValue {
        value,
        name: BoundName::Hoeffding,
        valid,
    }
}

/// `x / sqrt(1 + x / (3 sigma))`.
pub fn x_check(x: f64, sigma: f64) -> f64 {
    x / (1.0 + x / (3.0 * sigma)).sqrt()
}

/// Bernstein's bound `exp(-x_check^2 / 2)`.
pub fn bernstein_bound(x: f64, sigma: f64) -> BoundValue {
    let valid = checked(x, sigma);
    let xc = x_check(x, sigma);
    BoundValue {
        value: if valid { (-0.5 * xc * xc).exp() } else { f64::NAN },
        name: BoundName::Bernstein,
        valid,
    }
}

/// `1 / (sqrt(2 pi) (1 + x))` and `1 / (sqrt(pi) (1 + x))`, the bracket
/// around [`mills_ratio`].
pub fn mills_sandwich(x: f64) -> (f64, f64) {
    (1.0 / (SQRT_2PI * (1.0 + x)), 1.0 / (PI.sqrt() * (1.0 + x)))
}
