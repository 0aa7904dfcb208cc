//! Finite-support, mean-zero summands and the sums built from them.
//!
//! A [`SumModel`] stores independent blocks of identically distributed
//! summands, so an i.i.d. sum of ten thousand terms costs one component.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::tilt_moments;

/// Absolute tolerance on `sum(prob) == 1` and on `E xi == 0`.
pub const MODEL_TOLERANCE: f64 = 1e-12;

/// One support point of a finite law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

impl Atom {
    pub const fn new(value: f64, prob: f64) -> Self {
        Atom { value, prob }
    }
}

/// A non-degenerate, mean-zero law on finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<Atom>,
    lower: f64,
    upper: f64,
}

impl DiscreteDistribution {
    /// Validates the atom list. Inputs that are not centred are rejected
    /// rather than shifted, since shifting would change the variance.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        Self::validated(atoms, "atoms")
    }

    fn validated(atoms: Vec<Atom>, field: &str) -> Result<Self> {
        if atoms.len() < 2 {
            return Err(Error::model(field, "need at least 2 atoms"));
        }
        for (k, a) in atoms.iter().enumerate() {
            if !a.value.is_finite() {
                return Err(Error::model(format!("{field}[{k}]"), "value is not finite"));
            }
            if !(a.prob.is_finite() && a.prob > 0.0) {
                return Err(Error::model(
                    format!("{field}[{k}]"),
                    format!("probability {} is not strictly positive", a.prob),
                ));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > MODEL_TOLERANCE {
            return Err(Error::model(
                field,
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let mean: f64 = atoms.iter().map(|a| a.value * a.prob).sum();
        if mean.abs() > MODEL_TOLERANCE {
            return Err(Error::model(field, format!("mean is {mean}, not 0")));
        }
        let lower = atoms.iter().map(|a| a.value).fold(f64::INFINITY, f64::min);
        let upper = atoms
            .iter()
            .map(|a| a.value)
            .fold(f64::NEG_INFINITY, f64::max);
        if lower == upper {
            return Err(Error::model(field, "degenerate: all atoms share one value"));
        }
        Ok(DiscreteDistribution {
            atoms,
            lower,
            upper,
        })
    }

    /// The fair +-1 coin.
    pub fn rademacher() -> Self {
        DiscreteDistribution {
            atoms: vec![Atom::new(1.0, 0.5), Atom::new(-1.0, 0.5)],
            lower: -1.0,
            upper: 1.0,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Essential infimum.
    pub fn lower(&self) -> f64 {
        self.lower
    }

    /// Essential supremum.
    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.prob).sum()
    }

    /// `E xi^2`, which is the variance up to the mean tolerance.
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.value * a.value * a.prob).sum()
    }

    /// `E |xi|^p`.
    pub fn abs_moment(&self, p: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.value.abs().powf(p) * a.prob)
            .sum()
    }

    /// `E e^{lambda xi}`.
    pub fn mgf(&self, lambda: f64) -> f64 {
        tilt_moments(&self.atoms, lambda).log_mgf.exp()
    }
}

/// `E |xi|^p` for a validated law.
pub fn abs_moment(dist: &DiscreteDistribution, p: f64) -> f64 {
    dist.abs_moment(p)
}

/// The two-point law `P(1) = v/(1+v)`, `P(-v) = 1/(1+v)`: mean zero, variance
/// `v`, and the extremal law for which the optimised exponential Markov bound
/// coincides with Hoeffding's bound.
pub fn hoeffding_eta(v: f64) -> Result<DiscreteDistribution> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta variance must be positive and finite, got {v}"
        )));
    }
    let p_up = v / (1.0 + v);
    let p_down = 1.0 / (1.0 + v);
    DiscreteDistribution::new(vec![Atom::new(1.0, p_up), Atom::new(-v, p_down)])
}

/// A block of `multiplicity` i.i.d. copies of `dist`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub dist: DiscreteDistribution,
    pub multiplicity: u64,
}

/// `S_n` as a sum of independent blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumModel {
    components: Vec<Component>,
    n: u64,
    sigma2: f64,
    a_max: f64,
}

impl SumModel {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::model("components", "need at least one component"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.multiplicity == 0 {
                return Err(Error::model(
                    format!("components[{i}].multiplicity"),
                    "must be a positive integer",
                ));
            }
        }
        let n = components.iter().map(|c| c.multiplicity).sum();
        let sigma2 = components
            .iter()
            .map(|c| c.multiplicity as f64 * c.dist.second_moment())
            .sum();
        let a_max = components
            .iter()
            .map(|c| c.dist.upper())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(SumModel {
            components,
            n,
            sigma2,
            a_max,
        })
    }

    pub fn iid(dist: DiscreteDistribution, n: u64) -> Result<Self> {
        Self::new(vec![Component {
            dist,
            multiplicity: n,
        }])
    }

    /// Sum of `n` independent Rademacher signs.
    pub fn rademacher(n: u64) -> Result<Self> {
        Self::iid(DiscreteDistribution::rademacher(), n)
    }

    /// Sum of `n` i.i.d. copies of [`hoeffding_eta`]`(v)`.
    pub fn eta(v: f64, n: u64) -> Result<Self> {
        Self::iid(hoeffding_eta(v)?, n)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of summands.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `sigma^2 = sum_i E xi_i^2`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `max_i ess sup xi_i`.
    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// `max_i |ess inf xi_i|`.
    pub fn lower_abs_max(&self) -> f64 {
        self.components
            .iter()
            .map(|c| -c.dist.lower())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sum_i ess sup xi_i`, the supremum of `S_n`.
    pub fn support_upper(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.multiplicity as f64 * c.dist.upper())
            .sum()
    }

    /// `sum_i ess inf xi_i`.
    pub fn support_lower(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.multiplicity as f64 * c.dist.lower())
            .sum()
    }

    /// `sum_i E |xi_i|^p`.
    pub fn abs_moment_sum(&self, p: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.multiplicity as f64 * c.dist.abs_moment(p))
            .sum()
    }

    /// Each block as `(atoms, multiplicity)`.
    pub fn blocks(&self) -> Vec<(&[Atom], u64)> {
        self.components
            .iter()
            .map(|c| (c.dist.atoms(), c.multiplicity))
            .collect()
    }

    /// True when every summand satisfies `ess sup xi_i <= sigma_i`.
    pub fn sub_gaussian_support(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.dist.upper() <= c.dist.second_moment().sqrt())
    }

    /// Parses the JSON model format
    /// `{"components": [{"atoms": [[value, prob], ...], "multiplicity": k}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            components: self
                .components
                .iter()
                .map(|c| ComponentFile {
                    atoms: c.dist.atoms().iter().map(|a| [a.value, a.prob]).collect(),
                    multiplicity: c.multiplicity,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialises")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    components: Vec<ComponentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    atoms: Vec<[f64; 2]>,
    multiplicity: u64,
}

impl ModelFile {
    fn into_model(self) -> Result<SumModel> {
        let mut components = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.into_iter().enumerate() {
            let atoms = c.atoms.iter().map(|&[v, p]| Atom::new(v, p)).collect();
            let dist = DiscreteDistribution::validated(atoms, &format!("components[{i}].atoms"))?;
            components.push(Component {
                dist,
                multiplicity: c.multiplicity,
            });
        }
        SumModel::new(components)
    }
}

/// Moment constants entering the Berry-Esseen terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentProfile {
    pub delta: f64,
    /// Smallest `B` with `E|xi_i|^{2+delta} <= B^{2+delta}` for all `i`.
    pub b_abs: f64,
    /// Smallest `B` with `E|xi_i|^3 <= B E xi_i^2` for all `i`.
    pub b_ratio: f64,
    /// `sum_i E|xi_i|^{2+delta}`.
    pub abs_moment_sum: f64,
}

pub fn moment_profile(model: &SumModel, delta: f64) -> Result<MomentProfile> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let p = 2.0 + delta;
    let b_abs = model
        .components()
        .iter()
        .map(|c| c.dist.abs_moment(p).powf(1.0 / p))
        .fold(0.0, f64::max);
    Ok(MomentProfile {
        delta,
        b_abs,
        b_ratio: b_ratio(model),
        abs_moment_sum: model.abs_moment_sum(p),
    })
}

/// `max_i E|xi_i|^3 / E xi_i^2`.
pub fn b_ratio(model: &SumModel) -> f64 {
    model
        .components()
        .iter()
        .map(|c| c.dist.abs_moment(3.0) / c.dist.second_moment())
        .fold(0.0, f64::max)
}

/// Outcome of a grid check of the lower-curvature condition
/// `sum_i E xi_i^2 e^{lambda xi_i} >= (1 - B lambda) sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub holds: bool,
    /// Minimum over the grid of left side minus right side.
    pub worst_margin: f64,
    pub worst_lambda: f64,
}

pub fn check_condition_a(model: &SumModel, b: f64, lambda_grid: &[f64]) -> Result<ConditionAReport> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("B must be positive, got {b}")));
    }
    if let Some(bad) = lambda_grid.iter().find(|l| l.is_nan() || **l < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda grid values must be >= 0, got {bad}"
        )));
    }
    let sigma2 = model.sigma2();
    let mut worst = (f64::INFINITY, 0.0);
    for &lambda in lambda_grid {
        let curvature: f64 = model
            .components()
            .iter()
            .map(|c| {
                c.multiplicity as f64
                    * c.dist
                        .atoms()
                        .iter()
                        .map(|a| a.value * a.value * a.prob * (lambda * a.value).exp())
                        .sum::<f64>()
            })
            .sum();
        let margin = curvature - (1.0 - b * lambda) * sigma2;
        if margin < worst.0 {
            worst = (margin, lambda);
        }
    }
    Ok(ConditionAReport {
        holds: worst.0 >= -1e-12 * sigma2,
        worst_margin: worst.0,
        worst_lambda: worst.1,
    })
}

/// `0` followed by 200 log-spaced points in `[1e-6, 10/B]`.
pub fn default_condition_a_grid(b: f64) -> Vec<f64> {
    let lo = 1e-6f64.ln();
    let hi = (10.0 / b).ln();
    let mut grid = vec![0.0];
    grid.extend((0..200).map(|k| (lo + (hi - lo) * k as f64 / 199.0).exp()));
    grid
}

/// The sufficient criterion `E|xi_i|^3 <= B E xi_i^2` for every summand,
/// which implies condition (A) with `delta = 1`.
pub fn ratio_criterion_holds(model: &SumModel, b: f64) -> bool {
    model
        .components()
        .iter()
        .all(|c| c.dist.abs_moment(3.0) <= b * c.dist.second_moment() * (1.0 + 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_eta() -> DiscreteDistribution {
        DiscreteDistribution::new(vec![Atom::new(1.0, 0.2), Atom::new(-0.25, 0.8)]).unwrap()
    }

    #[test]
    fn rademacher_moments() {
        let r = DiscreteDistribution::rademacher();
        assert_eq!(abs_moment(&r, 3.0), 1.0);
        assert_eq!(abs_moment(&r, 2.0), 1.0);
    }

    #[test]
    fn second_moment_of_small_eta() {
        assert!((abs_moment(&small_eta(), 2.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eta_examples() {
        let r = hoeffding_eta(1.0).unwrap();
        assert_eq!(r.atoms(), DiscreteDistribution::rademacher().atoms());
        let e = hoeffding_eta(0.25).unwrap();
        assert!((e.atoms()[0].prob - 0.2).abs() < 1e-15);
        assert!((e.atoms()[1].prob - 0.8).abs() < 1e-15);
        assert_eq!(e.atoms()[1].value, -0.25);
        assert!(matches!(hoeffding_eta(0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(hoeffding_eta(-1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_bad_laws() {
        let off_centre = DiscreteDistribution::new(vec![Atom::new(1.0, 0.5), Atom::new(-0.5, 0.5)]);
        assert!(matches!(off_centre, Err(Error::InvalidModel { .. })));
        let single = DiscreteDistribution::new(vec![Atom::new(0.0, 1.0)]);
        assert!(single.is_err());
        let zero_prob = DiscreteDistribution::new(vec![
            Atom::new(1.0, 0.5),
            Atom::new(-1.0, 0.5),
            Atom::new(3.0, 0.0),
        ]);
        assert!(zero_prob.is_err());
        let not_normalised = DiscreteDistribution::new(vec![Atom::new(1.0, 0.5), Atom::new(-1.0, 0.4)]);
        assert!(not_normalised.is_err());
        let degenerate = DiscreteDistribution::new(vec![Atom::new(0.0, 0.5), Atom::new(0.0, 0.5)]);
        assert!(degenerate.is_err());
    }

    #[test]
    fn condition_a_rademacher() {
        for n in [1, 7, 100] {
            let m = SumModel::rademacher(n).unwrap();
            let r = check_condition_a(&m, 1.0, &[0.0, 0.5, 1.0, 2.0]).unwrap();
            assert!(r.holds);
        }
    }

    #[test]
    fn condition_a_margin_vanishes_at_zero() {
        let m = SumModel::iid(small_eta(), 13).unwrap();
        let r = check_condition_a(&m, 0.3, &[0.0]).unwrap();
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn condition_a_with_ratio_constant() {
        let m = SumModel::iid(small_eta(), 50).unwrap();
        let b = b_ratio(&m);
        let grid: Vec<f64> = (0..100).map(|k| 5.0 * k as f64 / 99.0).collect();
        assert!(check_condition_a(&m, b, &grid).unwrap().holds);
        assert!(check_condition_a(&m, b, &default_condition_a_grid(b)).unwrap().holds);
    }

    #[test]
    fn moment_profile_examples() {
        let m = SumModel::rademacher(9).unwrap();
        let p = moment_profile(&m, 1.0).unwrap();
        assert_eq!(p.b_abs, 1.0);
        assert_eq!(p.b_ratio, 1.0);
        assert_eq!(p.abs_moment_sum, 9.0);

        let m = SumModel::iid(small_eta(), 4).unwrap();
        let p = moment_profile(&m, 1.0).unwrap();
        // E|xi|^3 = 0.2 + 0.8/64 = 0.2125
        assert!((p.b_ratio - 0.85).abs() < 1e-14);

        let p = moment_profile(&m, 0.5).unwrap();
        let expected = small_eta().abs_moment(2.5).powf(1.0 / 2.5);
        assert_eq!(p.b_abs, expected);
        assert!(moment_profile(&m, 0.0).is_err());
    }

    #[test]
    fn json_round_trip_and_diagnostics() {
        let text = r#"{"components": [{"atoms": [[1, 0.2], [-0.25, 0.8]], "multiplicity": 3},
                                      {"atoms": [[1, 0.5], [-1, 0.5]], "multiplicity": 2}]}"#;
        let m = SumModel::from_json(text).unwrap();
        assert_eq!(m.n(), 5);
        assert!((m.sigma2() - (3.0 * 0.25 + 2.0)).abs() < 1e-14);
        assert_eq!(m.a_max(), 1.0);
        assert_eq!(SumModel::from_json(&m.to_json()).unwrap(), m);

        let bad = r#"{"components": [{"atoms": [[1, 0.5], [-1, 0.5]], "multiplicity": 1},
                                     {"atoms": [[1, 0.5], [-0.5, 0.5]], "multiplicity": 1}]}"#;
        match SumModel::from_json(bad) {
            Err(Error::InvalidModel { field, reason }) => {
                assert_eq!(field, "components[1].atoms");
                assert!(reason.contains("mean"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(SumModel::from_json("{\"components\": ["), Err(Error::Parse(_))));
        let zero_mult = r#"{"components": [{"atoms": [[1, 0.5], [-1, 0.5]], "multiplicity": 0}]}"#;
        assert!(SumModel::from_json(zero_mult).is_err());
    }
}
