//! Cumulant `Psi_n`, its derivative, the saddlepoint and the finite-n
//! Fenchel-Legendre rate.

use serde::Serialize;

use crate::dist::{Atom, SumModel};
use crate::error::{Error, Result};

/// Tilt beyond which `lambda * max|a|` is treated by log-sum-exp instead of the
/// series-stable form.
const SMALL_TILT: f64 = 0.5;

/// Root tolerance on `Psi_n'(lambda) - x sigma`, relative to `max(1, x sigma)`.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Largest exponent `lambda * a_max` the bracket search will try.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TiltMoments {
    /// `log E e^{lambda xi}`
    pub log_mgf: f64,
    /// `E_lambda xi`
    pub mean: f64,
    /// `Var_lambda xi`
    pub var: f64,
}

/// `e^u - 1 - u`, nonnegative and free of cancellation near zero.
fn expm1_minus_id(u: f64) -> f64 {
    if u.abs() < 0.5 {
        let mut term = 1.0;
        for k in (3..=24).rev() {
            term = 1.0 + u / k as f64 * term;
        }
        0.5 * u * u * term
    } else {
        u.exp_m1() - u
    }
}

/// Log-mgf, tilted mean and tilted variance of one finite law.
pub(crate) fn tilt_moments(atoms: &[Atom], lambda: f64) -> TiltMoments {
    let span = atoms.iter().map(|a| a.value.abs()).fold(0.0, f64::max);
    if lambda * span <= SMALL_TILT {
        // E e^{lambda xi} - 1 = sum p (e^{u} - 1 - u) + lambda E xi, all terms >= 0
        // up to the (tiny) mean.
        let mu: f64 = atoms.iter().map(|a| a.prob * a.value).sum();
        let excess: f64 = atoms
            .iter()
            .map(|a| a.prob * expm1_minus_id(lambda * a.value))
            .sum::<f64>()
            + lambda * mu;
        let z = 1.0 + excess;
        let tilted_first: f64 = mu
            + atoms
                .iter()
                .map(|a| a.prob * a.value * (lambda * a.value).exp_m1())
                .sum::<f64>();
        let mean = tilted_first / z;
        let var = atoms
            .iter()
            .map(|a| {
                let d = a.value - mean;
                a.prob * (lambda * a.value).exp() * d * d
            })
            .sum::<f64>()
            / z;
        TiltMoments {
            log_mgf: excess.ln_1p(),
            mean,
            var,
        }
    } else {
        let top = atoms
            .iter()
            .map(|a| a.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = atoms
            .iter()
            .map(|a| a.prob * (lambda * (a.value - top)).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        let mean = atoms
            .iter()
            .zip(&weights)
            .map(|(a, w)| w * a.value)
            .sum::<f64>()
            / z;
        let var = atoms
            .iter()
            .zip(&weights)
            .map(|(a, w)| {
                let d = a.value - mean;
                w * d * d
            })
            .sum::<f64>()
            / z;
        TiltMoments {
            log_mgf: lambda * top + z.ln(),
            mean,
            var,
        }
    }
}

/// `(Psi_n(lambda), Psi_n'(lambda), Psi_n''(lambda))` in one pass.
pub(crate) fn model_moments(model: &SumModel, lambda: f64) -> (f64, f64, f64) {
    let mut psi = 0.0;
    let mut bn = 0.0;
    let mut var = 0.0;
    for c in model.components() {
        let m = c.multiplicity as f64;
        let t = tilt_moments(c.dist.atoms(), lambda);
        psi += m * t.log_mgf;
        bn += m * t.mean;
        var += m * t.var;
    }
    (psi, bn, var)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )))
    }
}

/// `Psi_n(lambda) = sum_i log E e^{lambda xi_i}`.
pub fn cumulant(model: &SumModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(model_moments(model, lambda).0)
}

/// `B_n(lambda) = Psi_n'(lambda) = sum_i E_lambda xi_i`.
pub fn cumulant_deriv(model: &SumModel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(model_moments(model, lambda).1)
}

/// The minimiser `lambda_bar` of `lambda -> Psi_n(lambda) - lambda x sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saddlepoint {
    pub lambda_bar: f64,
    /// `Psi_n(lambda_bar)`
    pub psi: f64,
    /// `log inf_{lambda >= 0} E e^{lambda (S_n - x sigma)}`
    pub inf_log: f64,
    /// Tilted variance `sigma_bar^2(lambda_bar)`.
    pub var_bar: f64,
    /// Width of the final root bracket.
    pub bracket_width: f64,
}

/// Solves `Psi_n'(lambda_bar) = x sigma` by bracket doubling followed by
/// Newton steps safeguarded with bisection.
pub fn solve_lambda_bar(model: &SumModel, x: f64) -> Result<Saddlepoint> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "x must be finite and >= 0, got {x}"
        )));
    }
    let target = x * model.sigma();
    solve_for_target(model, target)
}

pub(crate) fn solve_for_target(model: &SumModel, target: f64) -> Result<Saddlepoint> {
    let support = model.support_upper();
    if target >= support - ROOT_TOLERANCE * support.max(1.0) {
        return Err(Error::NoSaddlepoint { target, support });
    }
    if target <= 0.0 {
        let (_, _, var) = model_moments(model, 0.0);
        return Ok(Saddlepoint {
            lambda_bar: 0.0,
            psi: 0.0,
            inf_log: 0.0,
            var_bar: var,
            bracket_width: 0.0,
        });
    }

    let cap = MAX_EXPONENT / model.a_max();
    let tol = ROOT_TOLERANCE * target.max(1.0);
    let mut lo = 0.0;
    let mut hi = 1.0f64.min(cap);
    loop {
        let (_, bn, _) = model_moments(model, hi);
        if bn >= target {
            break;
        }
        if hi >= cap {
            return Err(Error::NoSaddlepoint { target, support });
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }

    let mut lambda = (target / model.sigma2()).clamp(lo, hi);
    if lambda <= lo || lambda >= hi {
        lambda = 0.5 * (lo + hi);
    }
    for _ in 0..300 {
        let (_, bn, var) = model_moments(model, lambda);
        let f = bn - target;
        if f.abs() <= tol {
            break;
        }
        if f < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let newton = lambda - f / var;
        lambda = if var > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }

    let (psi, _, var_bar) = model_moments(model, lambda);
    Ok(Saddlepoint {
        lambda_bar: lambda,
        psi,
        inf_log: (psi - lambda * target).min(0.0),
        var_bar,
        bracket_width: hi - lo,
    })
}

/// `log inf_{lambda >= 0} E e^{lambda (S_n - x sigma)}`.
pub fn log_inf_mgf(model: &SumModel, x: f64) -> Result<f64> {
    Ok(solve_lambda_bar(model, x)?.inf_log)
}

/// `inf_{lambda >= 0} E e^{lambda (S_n - x sigma)}`, the optimised
/// exponential Markov bound.
pub fn inf_mgf(model: &SumModel, x: f64) -> Result<f64> {
    Ok(log_inf_mgf(model, x)?.exp())
}

/// One point of the finite-n rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub y: f64,
    /// `Lambda_n^*(y)`
    pub rate: f64,
    pub lambda_bar: f64,
}

/// `Lambda_n^*(y) = sup_{lambda >= 0} { lambda y - Psi_n(lambda) / n }`.
pub fn fenchel_legendre(model: &SumModel, y: f64) -> Result<f64> {
    Ok(rate_point(model, y)?.rate)
}

pub fn rate_point(model: &SumModel, y: f64) -> Result<RatePoint> {
    if y.is_nan() {
        return Err(Error::InvalidParameter("y is NaN".into()));
    }
    let n = model.n() as f64;
    if y <= 0.0 {
        return Ok(RatePoint {
            y,
            rate: 0.0,
            lambda_bar: 0.0,
        });
    }
    let sp = solve_for_target(model, n * y)?;
    Ok(RatePoint {
        y,
        rate: -sp.inf_log / n,
        lambda_bar: sp.lambda_bar,
    })
}
