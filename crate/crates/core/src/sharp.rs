//! Sharp two-sided bounds of the form `(Theta(x) + theta eps) inf_mgf`,
//! `|theta| <= 1`, and the normal-shaped upper bounds derived from them.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::classical::{hoeffding_bound, normal_sf, theta, x_check};
use crate::dist::{b_ratio, SumModel};
use crate::error::{Error, Result};
use crate::rate::solve_lambda_bar;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Berry-Esseen constants `C_{2+delta}` for `delta = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesseenConstants {
    /// Valid for all independent summands.
    pub c3_universal: f64,
    /// Identically distributed summands.
    pub c3_iid: f64,
    /// Binomial sums with `p <= 1/2`.
    pub c3_binomial: f64,
    /// Known lower bound for the optimal constant.
    pub c3_lower: f64,
    /// Caller-supplied constant; required when `delta < 1`.
    pub c_2plusdelta: Option<f64>,
}

impl Default for BesseenConstants {
    fn default() -> Self {
        BesseenConstants {
            c3_universal: 0.56,
            c3_iid: 0.4784,
            c3_binomial: 0.4215,
            c3_lower: 0.4097,
            c_2plusdelta: None,
        }
    }
}

impl BesseenConstants {
    /// The constant to use at `delta`: the override if present, otherwise the
    /// universal `C_3` when `delta = 1`.
    pub fn constant(&self, delta: f64) -> Result<f64> {
        check_delta(delta)?;
        match self.c_2plusdelta {
            Some(c) if c > 0.0 && c.is_finite() => Ok(c),
            Some(c) => Err(Error::InvalidParameter(format!(
                "Berry-Esseen constant must be positive, got {c}"
            ))),
            None if delta == 1.0 => Ok(self.c3_universal),
            None => Err(Error::InvalidParameter(format!(
                "no Berry-Esseen constant is known for delta = {delta}; supply one"
            ))),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )))
    }
}

fn check_x(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "x must be finite and >= 0, got {x}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn require_upper_le_one(model: &SumModel) -> Result<()> {
    if model.a_max() <= 1.0 {
        Ok(())
    } else {
        Err(Error::HypothesisViolation(format!(
            "needs xi_i <= 1, but max ess sup is {}",
            model.a_max()
        )))
    }
}

/// `B` for the moment-ratio bounds: `B_ratio` of the model unless the caller
/// raises it.
fn ratio_constant(model: &SumModel, b: Option<f64>) -> Result<f64> {
    let own = b_ratio(model);
    match b {
        None => Ok(own),
        Some(b) if b >= own * (1.0 - 1e-12) && b.is_finite() => Ok(b),
        Some(b) => Err(Error::InvalidParameter(format!(
            "B = {b} is below the model's moment ratio {own}"
        ))),
    }
}

/// `inf_{lambda >= 0} E e^{lambda (S_n - x sigma)}`, continued past the
/// saddlepoint range: the point mass at the top of the support at the
/// boundary and 0 beyond.
pub(crate) fn inf_mgf_extended(model: &SumModel, x: f64) -> Result<f64> {
    match solve_lambda_bar(model, x) {
        Ok(sp) => Ok(sp.inf_log.exp()),
        Err(Error::NoSaddlepoint { target, support }) => {
            if target > support * (1.0 + 1e-12) + 1e-300 {
                Ok(0.0)
            } else {
                let log_top: f64 = model
                    .components()
                    .iter()
                    .map(|c| {
                        let top = c
                            .dist
                            .atoms()
                            .iter()
                            .filter(|a| a.value == c.dist.upper())
                            .map(|a| a.prob)
                            .sum::<f64>();
                        c.multiplicity as f64 * top.ln()
                    })
                    .sum();
                Ok(log_top.exp())
            }
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    Theorem21,
    Theorem31,
    Corollary22,
    Theorem23,
}

impl IntervalKind {
    pub fn label(self) -> &'static str {
        match self {
            IntervalKind::Theorem21 => "theorem21",
            IntervalKind::Theorem31 => "theorem31",
            IntervalKind::Corollary22 => "corollary22",
            IntervalKind::Theorem23 => "theorem23",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsUsed {
    pub c: Option<f64>,
    pub b: f64,
    pub delta: Option<f64>,
}

/// `P(S_n > x sigma) = (Theta + theta eps) inf_mgf`, `|theta| <= 1`, read as
/// an interval. When `valid` is false `x` lies outside the admissible range
/// and only the always-valid `min(1, H_n)` upper bound is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpInterval {
    pub kind: IntervalKind,
    pub x: f64,
    pub lower: f64,
    pub center: f64,
    pub upper: f64,
    /// The relative half-width `eps`.
    pub epsilon_term: Option<f64>,
    pub t_param: Option<f64>,
    pub inf_mgf: f64,
    pub constants_used: ConstantsUsed,
    pub valid: bool,
    /// Largest admissible `x` (inclusive or exclusive per the bound).
    pub range_limit: f64,
}

impl SharpInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Interval `[(mid - eps)^+, mid + eps] * inf_mgf`, with the upper end also
/// capped by `min(1, mid + eps) H_n` when `hoeffding` is given.
#[allow(clippy::too_many_arguments)]
fn build(
    kind: IntervalKind,
    x: f64,
    mid: f64,
    eps: f64,
    t: f64,
    inf_mgf: f64,
    hoeffding: Option<f64>,
    constants_used: ConstantsUsed,
    range_limit: f64,
) -> SharpInterval {
    let center = mid * inf_mgf;
    let mut upper = ((mid + eps) * inf_mgf).min(1.0);
    if let Some(h) = hoeffding {
        upper = upper.min((mid + eps).min(1.0) * h);
    }
    SharpInterval {
        kind,
        x,
        lower: ((mid - eps) * inf_mgf).max(0.0),
        center,
        upper: upper.max(center),
        epsilon_term: Some(eps),
        t_param: Some(t),
        inf_mgf,
        constants_used,
        valid: true,
        range_limit,
    }
}

fn out_of_range(
    kind: IntervalKind,
    model: &SumModel,
    x: f64,
    constants_used: ConstantsUsed,
    range_limit: f64,
) -> Result<SharpInterval> {
    let inf_mgf = inf_mgf_extended(model, x)?;
    let h = hoeffding_bound(x, model.sigma(), model.n()).value;
    Ok(SharpInterval {
        kind,
        x,
        lower: 0.0,
        center: theta(x) * inf_mgf,
        upper: h.min(1.0),
        epsilon_term: None,
        t_param: None,
        inf_mgf,
        constants_used,
        valid: false,
        range_limit,
    })
}

/// `t = 2 x B / sigma / (1 + sqrt(1 - 4 x B / sigma))`, the bound on
/// `B lambda_bar` used by the support-bounded expansions.
pub fn t_param_21(x: f64, sigma: f64, b: f64) -> Result<f64> {
    check_x(x)?;
    check_positive("sigma", sigma)?;
    check_positive("B", b)?;
    let r = x * b / sigma;
    if r >= 0.25 {
        return Err(Error::OutOfRange(format!(
            "x B / sigma = {r} must be below 0.25"
        )));
    }
    Ok(2.0 * r / (1.0 + (1.0 - 4.0 * r).sqrt()))
}

/// `eps_x = e^t / (1 - 2t) (1.58/sqrt(pi) B/sigma
///   + 2^{3+delta} C / (1 - 2t)^{delta/2} sum E|xi_i|^{2+delta} / sigma^{2+delta})`.
pub fn epsilon_x(model: &SumModel, x: f64, b: f64, delta: f64, c: f64) -> Result<f64> {
    check_delta(delta)?;
    check_positive("C", c)?;
    let sigma = model.sigma();
    let t = t_param_21(x, sigma, b)?;
    Ok(epsilon_at(model, t, b, delta, c))
}

fn epsilon_at(model: &SumModel, t: f64, b: f64, delta: f64, c: f64) -> f64 {
    let sigma = model.sigma();
    let lyapunov = model.abs_moment_sum(2.0 + delta) / sigma.powf(2.0 + delta);
    let one_minus = 1.0 - 2.0 * t;
    t.exp() / one_minus
        * (1.58 / PI.sqrt() * b / sigma
            + 2f64.powf(3.0 + delta) * c / one_minus.powf(0.5 * delta) * lyapunov)
}

/// A `B` that meets both readings of the hypotheses: condition (A) through
/// the moment ratio (and the `(2+delta)`-moment cap when `delta < 1`) and
/// `xi_i <= B`, which the derivation of the expansion also uses.
pub fn default_theorem21_b(model: &SumModel, delta: f64) -> Result<f64> {
    let profile = crate::dist::moment_profile(model, delta)?;
    Ok(profile.b_ratio.max(profile.b_abs).max(model.a_max()))
}

/// The expansion with `Theta(x)` and `eps_x`, for `xi_i <= 1` under
/// condition (A) with constants `(b, delta)`, which the caller attests.
pub fn theorem21_interval(
    model: &SumModel,
    x: f64,
    b: f64,
    delta: f64,
    c: f64,
) -> Result<SharpInterval> {
    check_x(x)?;
    check_positive("B", b)?;
    check_delta(delta)?;
    check_positive("C", c)?;
    require_upper_le_one(model)?;
    let sigma = model.sigma();
    let used = ConstantsUsed {
        c: Some(c),
        b,
        delta: Some(delta),
    };
    let limit = 0.25 * sigma / b;
    if x >= limit {
        return out_of_range(IntervalKind::Theorem21, model, x, used, limit);
    }
    let t = t_param_21(x, sigma, b)?;
    let eps = epsilon_at(model, t, b, delta, c);
    let inf = inf_mgf_extended(model, x)?;
    let h = hoeffding_bound(x, sigma, model.n()).value;
    Ok(build(
        IntervalKind::Theorem21,
        x,
        theta(x),
        eps,
        t,
        inf,
        Some(h),
        used,
        limit,
    ))
}

/// The saddlepoint form with `Theta(lambda_bar sigma_bar(lambda_bar))` and
/// `eps = 2^{3+delta} C e^{B lambda_bar} sum E|xi_i|^{2+delta} / sigma_bar^{2+delta}`,
/// taking `B = max_i ess sup xi_i`.
pub fn theorem31_interval(model: &SumModel, x: f64, delta: f64, c: f64) -> Result<SharpInterval> {
    check_x(x)?;
    check_delta(delta)?;
    check_positive("C", c)?;
    let sp = solve_lambda_bar(model, x)?;
    let b = model.a_max();
    let sigma_bar = sp.var_bar.sqrt();
    let eps = 2f64.powf(3.0 + delta) * c * (b * sp.lambda_bar).exp() * model.abs_moment_sum(2.0 + delta)
        / sigma_bar.powf(2.0 + delta);
    Ok(build(
        IntervalKind::Theorem31,
        x,
        theta(sp.lambda_bar * sigma_bar),
        eps,
        sp.lambda_bar,
        sp.inf_log.exp(),
        None,
        ConstantsUsed {
            c: Some(c),
            b,
            delta: Some(delta),
        },
        model.support_upper() / model.sigma(),
    ))
}

/// `Theta(x) +- 16 B / sigma` for `xi_i <= 1` and `E|xi_i|^3 <= B E xi_i^2`,
/// on `0 <= x <= 0.1 sigma / B`.
pub fn corollary22_interval(model: &SumModel, x: f64, b: Option<f64>) -> Result<SharpInterval> {
    check_x(x)?;
    require_upper_le_one(model)?;
    let b = ratio_constant(model, b)?;
    let sigma = model.sigma();
    let used = ConstantsUsed {
        c: Some(0.56),
        b,
        delta: Some(1.0),
    };
    let limit = 0.1 * sigma / b;
    if x > limit {
        return out_of_range(IntervalKind::Corollary22, model, x, used, limit);
    }
    let t = t_param_21(x, sigma, b)?;
    let inf = inf_mgf_extended(model, x)?;
    let h = hoeffding_bound(x, sigma, model.n()).value;
    Ok(build(
        IntervalKind::Corollary22,
        x,
        theta(x),
        16.0 * b / sigma,
        t,
        inf,
        Some(h),
        used,
        limit,
    ))
}

/// `(1 - Phi(x_check)) (1 + 16 sqrt(2 pi) (1 + x_check) B / sigma)`.
pub fn corollary23_upper(model: &SumModel, x: f64, b: Option<f64>) -> Result<f64> {
    check_x(x)?;
    require_upper_le_one(model)?;
    let b = ratio_constant(model, b)?;
    let sigma = model.sigma();
    if x > 0.1 * sigma / b {
        return Err(Error::OutOfRange(format!(
            "x = {x} exceeds 0.1 sigma / B = {}",
            0.1 * sigma / b
        )));
    }
    let xc = x_check(x, sigma);
    Ok(normal_sf(xc) * (1.0 + 16.0 * SQRT_2PI * (1.0 + xc) * b / sigma))
}

/// `c_x = e^{t + t^2} / (1 - t) (sqrt 2 + 16 sqrt(2 pi) C_3 e^{t^2/2} / sqrt(1 - t))`.
pub fn theorem22_cx(t: f64, c3: f64) -> f64 {
    (t + t * t).exp() / (1.0 - t)
        * (2f64.sqrt() + 16.0 * SQRT_2PI * c3 * (0.5 * t * t).exp() / (1.0 - t).sqrt())
}

/// `(1 - Phi(x)) (1 + sqrt(2 pi) c_x (1 + x) B / sigma)` for summands with
/// `xi_i <= sigma_i`.
///
/// The statement of this bound omits the factor `sqrt(2 pi)` in front of
/// `c_x` that its derivation produces; the larger, derived form is used.
pub fn theorem22_upper(model: &SumModel, x: f64, c3: f64, b: Option<f64>) -> Result<f64> {
    check_x(x)?;
    check_positive("C3", c3)?;
    if !model.sub_gaussian_support() {
        return Err(Error::HypothesisViolation(
            "needs xi_i <= sigma_i for every summand".into(),
        ));
    }
    let b = ratio_constant(model, b)?;
    let sigma = model.sigma();
    let t = t_param_21(x, sigma, b)?;
    Ok(normal_sf(x) * (1.0 + SQRT_2PI * theorem22_cx(t, c3) * (1.0 + x) * b / sigma))
}

/// `t = (x / sigma) exp(e x^2 / (2 sigma^2))`.
pub fn t_param_23(x_over_sigma: f64) -> f64 {
    let r = x_over_sigma;
    r * (0.5 * E * r * r).exp()
}

/// `c_x = 2.24 e^{t^2/2} / sqrt(1 - t) + e^{t + t^2} / (sqrt(pi) (1 - t))`,
/// infinite once `t >= 1`.
pub fn theorem23_cx(x_over_sigma: f64) -> f64 {
    let t = t_param_23(x_over_sigma);
    if t >= 1.0 {
        return f64::INFINITY;
    }
    2.24 * (0.5 * t * t).exp() / (1.0 - t).sqrt() + (t + t * t).exp() / (PI.sqrt() * (1.0 - t))
}

/// Admissible range of the two-sided bound, in units of `sigma`.
pub const THEOREM23_RANGE: f64 = 0.606;

/// `Theta(x) +- c_x / sigma` for `|xi_i| <= 1` on `0 <= x <= 0.606 sigma`.
pub fn theorem23_interval(model: &SumModel, x: f64) -> Result<SharpInterval> {
    check_x(x)?;
    if model.a_max() > 1.0 || model.lower_abs_max() > 1.0 {
        return Err(Error::HypothesisViolation(
            "needs |xi_i| <= 1 for every summand".into(),
        ));
    }
    let sigma = model.sigma();
    let used = ConstantsUsed {
        c: None,
        b: 1.0,
        delta: None,
    };
    let limit = THEOREM23_RANGE * sigma;
    if x > limit {
        return out_of_range(IntervalKind::Theorem23, model, x, used, limit);
    }
    let r = x / sigma;
    let inf = inf_mgf_extended(model, x)?;
    let h = hoeffding_bound(x, sigma, model.n()).value;
    Ok(build(
        IntervalKind::Theorem23,
        x,
        theta(x),
        theorem23_cx(r) / sigma,
        t_param_23(r),
        inf,
        Some(h),
        used,
        limit,
    ))
}
