//! The conjugate (Esscher) measure `dP_lambda = Z_n(lambda) dP` and a
//! machine check of the moment and cumulant inequalities the sharp bounds
//! are built from.

use serde::Serialize;

use crate::classical::normal_cdf;
use crate::dist::{
    check_condition_a, default_condition_a_grid, moment_profile, ratio_criterion_holds, Atom,
    SumModel,
};
use crate::error::{Error, Result};
use crate::oracle::lattice::LatticeDistribution;
use crate::rate::tilt_moments;

/// One block of the model seen under `P_lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedComponent {
    /// Atoms reweighted by `e^{lambda a} / E e^{lambda xi}`.
    pub atoms: Vec<Atom>,
    pub multiplicity: u64,
    /// `b_i(lambda) = E_lambda xi_i`
    pub mean: f64,
    /// `Var_lambda xi_i`
    pub var: f64,
    /// `log E e^{lambda xi_i}` under the untilted law
    pub log_mgf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedState {
    pub lambda: f64,
    pub components: Vec<TiltedComponent>,
    /// `Psi_n(lambda)`
    pub psi: f64,
    /// `B_n(lambda) = sum_i b_i(lambda)`
    pub bn: f64,
    /// `sigma_bar^2(lambda) = sum_i Var_lambda xi_i`
    pub var_bar: f64,
}

fn tilt_atoms(atoms: &[Atom], lambda: f64, multiplicity: u64) -> TiltedComponent {
    let m = tilt_moments(atoms, lambda);
    let tilted = atoms
        .iter()
        .map(|a| Atom::new(a.value, a.prob * (lambda * a.value - m.log_mgf).exp()))
        .collect();
    TiltedComponent {
        atoms: tilted,
        multiplicity,
        mean: m.mean,
        var: m.var,
        log_mgf: m.log_mgf,
    }
}

fn assemble(lambda: f64, components: Vec<TiltedComponent>) -> TiltedState {
    let mut psi = 0.0;
    let mut bn = 0.0;
    let mut var_bar = 0.0;
    for c in &components {
        let k = c.multiplicity as f64;
        psi += k * c.log_mgf;
        bn += k * c.mean;
        var_bar += k * c.var;
    }
    TiltedState {
        lambda,
        components,
        psi,
        bn,
        var_bar,
    }
}

/// Tilts every component by `e^{lambda xi}`.
pub fn tilt(model: &SumModel, lambda: f64) -> Result<TiltedState> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let components = model
        .components()
        .iter()
        .map(|c| {
            let mut t = tilt_atoms(c.dist.atoms(), lambda, c.multiplicity);
            if lambda == 0.0 {
                // the law is centred, so this is its variance; it also makes
                // var_bar(0) agree with sigma^2 to the last bit
                t.var = c.dist.second_moment();
            }
            t
        })
        .collect();
    Ok(assemble(lambda, components))
}

impl TiltedState {
    /// Tilts the already tilted law by a further `extra`; the result agrees
    /// with `tilt(model, lambda + extra)` apart from `psi`, which is the
    /// cumulant of the tilted law.
    pub fn retilt(&self, extra: f64) -> TiltedState {
        let components = self
            .components
            .iter()
            .map(|c| tilt_atoms(&c.atoms, extra, c.multiplicity))
            .collect();
        assemble(self.lambda + extra, components)
    }

    pub fn sigma_bar(&self) -> f64 {
        self.var_bar.sqrt()
    }

    pub fn blocks(&self) -> Vec<(&[Atom], u64)> {
        self.components
            .iter()
            .map(|c| (c.atoms.as_slice(), c.multiplicity))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LemmaStatus {
    Holds,
    Violated,
    Skipped,
}

/// Outcome of one inequality over the whole grid. Margins are
/// `(rhs - lhs) / scale`, where the scale is `sigma^2` for sum-level
/// inequalities and `sigma_i^2` for per-summand ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub status: LemmaStatus,
    pub holds: bool,
    pub worst_margin: Option<f64>,
    pub worst_lambda: Option<f64>,
    /// Why the check was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub b: f64,
    pub delta: f64,
    pub lemmas: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn violations(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.lemmas
            .iter()
            .filter(|l| l.status == LemmaStatus::Violated)
    }

    pub fn all_hold(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn get(&self, name: &str) -> Option<&LemmaCheck> {
        self.lemmas.iter().find(|l| l.name == name)
    }
}

/// Relative slack allowed for rounding in `lhs <= rhs`.
const LEMMA_TOLERANCE: f64 = 1e-12;

struct Tracker {
    name: &'static str,
    worst: f64,
    worst_lambda: f64,
    violated: bool,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Tracker {
            name,
            worst: f64::INFINITY,
            worst_lambda: 0.0,
            violated: false,
        }
    }

    /// Records `lhs <= rhs` at `lambda`.
    fn le(&mut self, lambda: f64, lhs: f64, rhs: f64, scale: f64) {
        let slack = rhs - lhs;
        let margin = slack / scale;
        if margin < self.worst {
            self.worst = margin;
            self.worst_lambda = lambda;
        }
        let tol = LEMMA_TOLERANCE * lhs.abs().max(rhs.abs()).max(scale);
        if slack.is_nan() || slack < -tol {
            self.violated = true;
        }
    }

    fn finish(self) -> LemmaCheck {
        let status = if self.violated {
            LemmaStatus::Violated
        } else {
            LemmaStatus::Holds
        };
        LemmaCheck {
            name: self.name,
            status,
            holds: !self.violated,
            worst_margin: Some(self.worst),
            worst_lambda: Some(self.worst_lambda),
            reason: None,
        }
    }
}

fn skipped(name: &'static str, reason: &str) -> LemmaCheck {
    LemmaCheck {
        name,
        status: LemmaStatus::Skipped,
        holds: true,
        worst_margin: None,
        worst_lambda: None,
        reason: Some(reason.to_string()),
    }
}

/// `Be(lambda, t) = t/(1+t) e^lambda + 1/(1+t) e^{-lambda t}`.
fn bennett_mgf(lambda: f64, t: f64) -> f64 {
    (t * lambda.exp() + (-lambda * t).exp()) / (1.0 + t)
}

/// Evaluates each inequality of the tilted-moment toolkit at every grid
/// point. Checks whose hypotheses the model does not meet are reported as
/// skipped; `b` serves both as the upper support constant and as the
/// curvature constant.
pub fn verify_lemma_suite(
    model: &SumModel,
    b: f64,
    delta: f64,
    lambda_grid: &[f64],
) -> Result<LemmaReport> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("B must be positive, got {b}")));
    }
    let profile = moment_profile(model, delta)?;
    if let Some(bad) = lambda_grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "lambda grid values must be finite and >= 0, got {bad}"
        )));
    }

    let upper_le_one = model.a_max() <= 1.0;
    let two_sided = upper_le_one && model.lower_abs_max() <= 1.0;
    let upper_le_b = model.a_max() <= b;
    let moment_le_b = profile.b_abs <= b * (1.0 + LEMMA_TOLERANCE);
    let ratio = ratio_criterion_holds(model, b);
    let condition_a = ratio || {
        let mut grid = default_condition_a_grid(b);
        grid.extend_from_slice(lambda_grid);
        check_condition_a(model, b, &grid)?.holds
    };
    let sub_gaussian = model.sub_gaussian_support();

    let sigma2 = model.sigma2();
    let n = model.n() as f64;
    let v = sigma2 / n;

    let mut l31 = Tracker::new("lemma_3_1");
    let mut l32 = Tracker::new("lemma_3_2");
    let mut l33u = Tracker::new("lemma_3_3_upper");
    let mut l33l = Tracker::new("lemma_3_3_lower");
    let mut l34 = Tracker::new("lemma_3_4");
    let mut l35u = Tracker::new("lemma_3_5_upper");
    let mut l35l = Tracker::new("lemma_3_5_lower");
    let mut l51 = Tracker::new("lemma_5_1");
    let mut l52 = Tracker::new("lemma_5_2");
    let mut l62 = Tracker::new("lemma_6_2");

    for &lambda in lambda_grid {
        let state = tilt(model, lambda)?;
        for (c, tc) in model.components().iter().zip(&state.components) {
            let s2 = c.dist.second_moment();
            let mgf = tc.log_mgf.exp();
            l31.le(lambda, mgf, bennett_mgf(lambda, s2), s2);
            l32.le(lambda, mgf, (0.5 * b * b * lambda * lambda).exp(), s2);
        }
        let bl = b * lambda;
        l33u.le(lambda, state.bn, bl.exp_m1() / b * sigma2, sigma2);
        l33l.le(
            lambda,
            (1.0 - 0.5 * bl) * lambda * sigma2 * (-0.5 * bl * bl).exp(),
            state.bn,
            sigma2,
        );
        let f = ((-lambda * v).exp() + v * lambda.exp()) / (1.0 + v);
        l34.le(lambda, state.psi, n * f.ln(), sigma2);
        l35u.le(lambda, state.var_bar, bl.exp() * sigma2, sigma2);
        l35l.le(lambda, (1.0 - 2.0 * bl).max(0.0) * sigma2, state.var_bar, sigma2);
        l51.le(lambda, state.psi, 0.5 * lambda * lambda * sigma2, sigma2);
        l52.le(
            lambda,
            (1.0 - bl).max(0.0) * (-bl * bl).exp() * sigma2,
            state.var_bar,
            sigma2,
        );
        l62.le(
            lambda,
            -(-lambda).exp_m1() * (-0.5 * lambda * lambda).exp() * sigma2,
            state.bn,
            sigma2,
        );
    }

    let gate = |t: Tracker, ok: bool, reason: &str| {
        if ok {
            t.finish()
        } else {
            skipped(t.name, reason)
        }
    };
    let lemmas = vec![
        gate(l31, upper_le_one, "needs xi_i <= 1"),
        gate(
            l32,
            upper_le_b && moment_le_b,
            "needs xi_i <= B and E|xi_i|^(2+delta) <= B^(2+delta)",
        ),
        gate(l33u, upper_le_b, "needs xi_i <= B"),
        gate(
            l33l,
            upper_le_b && moment_le_b && condition_a,
            "needs xi_i <= B and condition (A)",
        ),
        gate(l34, upper_le_one, "needs xi_i <= 1"),
        gate(l35u, upper_le_b, "needs xi_i <= B"),
        gate(
            l35l,
            upper_le_b && moment_le_b && condition_a,
            "needs xi_i <= B and condition (A)",
        ),
        gate(l51, sub_gaussian, "needs xi_i <= sigma_i"),
        gate(
            l52,
            upper_le_b && ratio,
            "needs xi_i <= B and E|xi_i|^3 <= B E xi_i^2",
        ),
        gate(l62, two_sided, "needs |xi_i| <= 1"),
    ];
    Ok(LemmaReport { b, delta, lemmas })
}

/// Exact Kolmogorov distance of the standardised tilted sum from the normal
/// law, next to the available Berry-Esseen bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerryEsseenReport {
    pub lambda: f64,
    pub sigma_bar: f64,
    pub sup_distance: f64,
    /// `2^{2+delta} C e^{B lambda} sum E|xi_i|^{2+delta} / sigma_bar^{2+delta}`
    /// with `B = max_i ess sup xi_i`.
    pub moment_bound: f64,
    /// `1.12 / sigma_bar`, present when `|xi_i| <= 1`.
    pub bounded_bound: Option<f64>,
    /// The smaller of the two.
    pub bound: f64,
    pub holds: bool,
}

pub fn berry_esseen_tilted(
    model: &SumModel,
    lambda: f64,
    delta: f64,
    c: f64,
) -> Result<BerryEsseenReport> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Berry-Esseen constant must be positive, got {c}"
        )));
    }
    let profile = moment_profile(model, delta)?;
    let state = tilt(model, lambda)?;
    let lattice = LatticeDistribution::from_blocks(&state.blocks())?;
    let sigma_bar = state.sigma_bar();
    let sup_distance = lattice.kolmogorov_to_normal(state.bn, sigma_bar, normal_cdf);

    let b = model.a_max();
    let moment_bound = 2f64.powf(2.0 + delta) * c * (b * lambda).exp() * profile.abs_moment_sum
        / sigma_bar.powf(2.0 + delta);
    let bounded_bound =
        (model.a_max() <= 1.0 && model.lower_abs_max() <= 1.0).then(|| 1.12 / sigma_bar);
    let bound = bounded_bound.map_or(moment_bound, |v| v.min(moment_bound));
    Ok(BerryEsseenReport {
        lambda,
        sigma_bar,
        sup_distance,
        moment_bound,
        bounded_bound,
        bound,
        holds: sup_distance <= bound,
    })
}
