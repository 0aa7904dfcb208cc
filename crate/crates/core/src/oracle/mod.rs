//! Ground truth for the bounds: exact lattice tails, plain and tilted Monte
//! Carlo, and the log-concave hull behind the Bentkus bound.

pub mod hull;
pub mod lattice;
mod mc;

use serde::Serialize;

pub use hull::log_concave_hull;
pub use lattice::LatticeDistribution;
pub use mc::CHUNK;

use crate::dist::SumModel;
use crate::error::{Error, Result};
use crate::rate::solve_for_target;
use crate::tilted::tilt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Mc,
    TiltedMc,
}

/// A tail probability with its provenance. `stderr` is 0 for exact values
/// and for Monte Carlo runs whose hit frequency is 0 or 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub p: f64,
    pub stderr: f64,
    pub method: Method,
    pub threshold: f64,
    pub strict: bool,
    pub n_samples: u64,
    pub seed: Option<u64>,
    /// Number of draws that landed in the tail.
    pub hits: Option<u64>,
    /// Tilt used by the importance sampler.
    pub lambda_bar: Option<f64>,
    /// `|sum of masses - 1|` of the exact convolution.
    pub mass_drift: Option<f64>,
}

impl TailEstimate {
    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.p
    }
}

/// `P(S_n > threshold)` when `strict`, else `P(S_n >= threshold)`, by exact
/// convolution on the lattice of the atom values.
pub fn exact_tail(model: &SumModel, threshold: f64, strict: bool) -> Result<TailEstimate> {
    if threshold.is_nan() {
        return Err(Error::InvalidParameter("threshold is NaN".into()));
    }
    let lattice = LatticeDistribution::from_blocks(&model.blocks())?;
    Ok(exact_from(&lattice, threshold, strict))
}

/// [`exact_tail`] against a convolution the caller already holds.
pub fn exact_from(lattice: &LatticeDistribution, threshold: f64, strict: bool) -> TailEstimate {
    TailEstimate {
        p: lattice.tail(threshold, strict),
        stderr: 0.0,
        method: Method::Exact,
        threshold,
        strict,
        n_samples: 0,
        seed: None,
        hits: None,
        lambda_bar: None,
        mass_drift: Some(lattice.mass_drift()),
    }
}

/// Empirical frequency over `n_samples` independent draws of `S_n`.
pub fn mc_tail(
    model: &SumModel,
    threshold: f64,
    strict: bool,
    n_samples: u64,
    seed: u64,
) -> Result<TailEstimate> {
    let t = mc::plain(model, threshold, strict, n_samples, seed)?;
    let n = n_samples as f64;
    let p = t.hits as f64 / n;
    Ok(TailEstimate {
        p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        method: Method::Mc,
        threshold,
        strict,
        n_samples,
        seed: Some(seed),
        hits: Some(t.hits),
        lambda_bar: None,
        mass_drift: None,
    })
}

/// Importance sampling under the conjugate measure at the saddlepoint of
/// `threshold`: each draw is weighted by `e^{-lambda_bar S_n + Psi_n(lambda_bar)}`.
pub fn tilted_mc_tail(
    model: &SumModel,
    threshold: f64,
    strict: bool,
    n_samples: u64,
    seed: u64,
) -> Result<TailEstimate> {
    if threshold.is_nan() {
        return Err(Error::InvalidParameter("threshold is NaN".into()));
    }
    let sp = solve_for_target(model, threshold)?;
    let state = tilt(model, sp.lambda_bar)?;
    let t = mc::tilted(
        state.blocks(),
        sp.lambda_bar,
        state.psi,
        threshold,
        strict,
        n_samples,
        seed,
    )?;
    let n = n_samples as f64;
    let p = t.sum / n;
    let var = if n_samples > 1 {
        ((t.sum_sq - n * p * p) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(TailEstimate {
        p,
        stderr: (var / n).sqrt(),
        method: Method::TiltedMc,
        threshold,
        strict,
        n_samples,
        seed: Some(seed),
        hits: Some(t.hits),
        lambda_bar: Some(sp.lambda_bar),
        mass_drift: None,
    })
}

/// Grid used to quantise the eta variance `sigma^2 / n`.
pub const ETA_QUANTUM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BentkusBound {
    /// `(e^2 / 2) P°(sum eta_i >= x sigma)`, which may exceed 1.
    pub raw: f64,
    /// `min(1, raw)`.
    pub value: f64,
    /// The hull value `P°` itself.
    pub hull_tail: f64,
    /// `sigma^2 / n` rounded to the nearest multiple of [`ETA_QUANTUM`].
    pub eta_variance: f64,
}

/// The Bentkus bound on `P(S_n >= x sigma)` for summands bounded by 1.
///
/// `P°` is the log-concave hull of the eta-sum tail over its lattice, read
/// off between lattice points by log-linear interpolation.
pub fn bentkus_bound(model: &SumModel, x: f64) -> Result<BentkusBound> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "x must be finite and >= 0, got {x}"
        )));
    }
    if model.a_max() > 1.0 {
        return Err(Error::HypothesisViolation(format!(
            "Bentkus bound needs xi_i <= 1, max is {}",
            model.a_max()
        )));
    }
    let v = model.sigma2() / model.n() as f64;
    let v = ((v / ETA_QUANTUM).round() * ETA_QUANTUM).max(ETA_QUANTUM);
    let eta = SumModel::eta(v, model.n())?;
    let lattice = LatticeDistribution::from_blocks(&eta.blocks())?;
    let hull = log_concave_hull(lattice.upper_tails());

    let y = x * model.sigma();
    let j = lattice.first_index_above(y, false);
    let hull_tail = if j == 0 {
        hull[0]
    } else if j == lattice.len() {
        0.0
    } else {
        let (y0, y1) = (lattice.point(j - 1), lattice.point(j));
        let (h0, h1) = (hull[j - 1], hull[j]);
        if h1 == 0.0 {
            0.0
        } else {
            let s = (y - y0) / (y1 - y0);
            (h0.ln() + s * (h1.ln() - h0.ln())).exp().max(h1)
        }
    };
    let raw = 0.5 * std::f64::consts::E.powi(2) * hull_tail;
    Ok(BentkusBound {
        raw,
        value: raw.min(1.0),
        hull_tail,
        eta_variance: v,
    })
}
