//! Grid sweeps behind the command-line tool: bound tables, the Rademacher
//! ratio `R(x, n)`, rate-function tables and the full verification report.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{bennett_bound, bernstein_bound, hoeffding_bound, theta};
use crate::dist::{check_condition_a, default_condition_a_grid, ConditionAReport, SumModel};
use crate::error::{Error, Result};
use crate::oracle::{exact_from, LatticeDistribution};
use crate::rate::{inf_mgf, rate_point, solve_lambda_bar};
use crate::sharp::{
    corollary22_interval, corollary23_upper, default_theorem21_b, theorem21_interval,
    theorem22_upper, theorem23_cx, theorem23_interval, theorem31_interval, BesseenConstants,
    SharpInterval,
};
use crate::tilted::{berry_esseen_tilted, verify_lemma_suite, BerryEsseenReport, LemmaReport};

/// Version tag written into every CSV header and JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Parses `a:b:steps` into `steps` evenly spaced points from `a` to `b`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Parse(format!("grid must look like a:b:steps, got {text:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps)
        .map(|k| a + (b - a) * k as f64 / (steps - 1) as f64)
        .collect())
}

/// Checks a sweep grid is ascending and non-negative.
pub fn check_x_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("grid values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("grid must be sorted ascending".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSel {
    Classical,
    Theorem21,
    Theorem31,
    Corollary22,
    Corollary23,
    Theorem22,
    Theorem23,
    Exact,
}

impl BoundSel {
    pub const ALL: [BoundSel; 8] = [
        BoundSel::Classical,
        BoundSel::Theorem21,
        BoundSel::Theorem31,
        BoundSel::Corollary22,
        BoundSel::Corollary23,
        BoundSel::Theorem22,
        BoundSel::Theorem23,
        BoundSel::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundSel::Classical => "classical",
            BoundSel::Theorem21 => "theorem21",
            BoundSel::Theorem31 => "theorem31",
            BoundSel::Corollary22 => "corollary22",
            BoundSel::Corollary23 => "corollary23",
            BoundSel::Theorem22 => "theorem22",
            BoundSel::Theorem23 => "theorem23",
            BoundSel::Exact => "exact",
        }
    }
}

impl FromStr for BoundSel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundSel::ALL
            .into_iter()
            .find(|b| b.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = BoundSel::ALL.iter().map(|b| b.name()).collect();
                Error::Parse(format!("unknown bound {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Settings shared by the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub bounds: Vec<BoundSel>,
    pub constants: BesseenConstants,
    pub delta: f64,
    /// Compare against `P(S_n > x sigma)` when true, `P(S_n >= x sigma)` otherwise.
    pub strict: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            bounds: BoundSel::ALL.to_vec(),
            constants: BesseenConstants::default(),
            delta: 1.0,
            strict: true,
        }
    }
}

/// A bound value, or the reason it is absent at this `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell<T> {
    Value(T),
    Missing { error: String },
}

impl<T> Cell<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Cell::Value(v),
            Err(e) => Cell::Missing {
                error: e.to_string(),
            },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Missing { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub x: f64,
    pub strict: bool,
    pub hoeffding: Option<f64>,
    pub bennett: Option<f64>,
    pub bernstein: Option<f64>,
    pub inf_mgf: Option<Cell<f64>>,
    pub mills: Option<f64>,
    pub theorem21: Option<Cell<SharpInterval>>,
    pub theorem31: Option<Cell<SharpInterval>>,
    pub corollary22: Option<Cell<SharpInterval>>,
    pub corollary23: Option<Cell<f64>>,
    pub theorem22: Option<Cell<f64>>,
    pub theorem23: Option<Cell<SharpInterval>>,
    pub exact: Option<f64>,
}

/// One row per `x`, in grid order.
pub fn bounds_table(model: &SumModel, xs: &[f64], config: &SweepConfig) -> Result<Vec<BoundRow>> {
    check_x_grid(xs)?;
    let has = |b: BoundSel| config.bounds.contains(&b);
    let c = config.constants.constant(config.delta);
    let b21 = default_theorem21_b(model, config.delta)?;
    let lattice = if has(BoundSel::Exact) {
        LatticeDistribution::from_blocks(&model.blocks()).ok()
    } else {
        None
    };
    let sigma = model.sigma();
    let n = model.n();
    let rows = xs
        .par_iter()
        .map(|&x| {
            let classical = has(BoundSel::Classical);
            BoundRow {
                x,
                strict: config.strict,
                hoeffding: classical.then(|| hoeffding_bound(x, sigma, n).value),
                bennett: classical.then(|| bennett_bound(x, sigma).value),
                bernstein: classical.then(|| bernstein_bound(x, sigma).value),
                inf_mgf: classical.then(|| Cell::from(inf_mgf(model, x))),
                mills: classical.then(|| theta(x)),
                theorem21: has(BoundSel::Theorem21).then(|| {
                    Cell::from(c.clone().and_then(|c| {
                        theorem21_interval(model, x, b21, config.delta, c)
                    }))
                }),
                theorem31: has(BoundSel::Theorem31).then(|| {
                    Cell::from(
                        c.clone()
                            .and_then(|c| theorem31_interval(model, x, config.delta, c)),
                    )
                }),
                corollary22: has(BoundSel::Corollary22)
                    .then(|| Cell::from(corollary22_interval(model, x, None))),
                corollary23: has(BoundSel::Corollary23)
                    .then(|| Cell::from(corollary23_upper(model, x, None))),
                theorem22: has(BoundSel::Theorem22).then(|| {
                    Cell::from(theorem22_upper(model, x, config.constants.c3_universal, None))
                }),
                theorem23: has(BoundSel::Theorem23).then(|| Cell::from(theorem23_interval(model, x))),
                exact: lattice
                    .as_ref()
                    .map(|l| exact_from(l, x * sigma, config.strict).p),
            }
        })
        .collect();
    Ok(rows)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// CSV with a versioned header comment. Absent values are empty fields.
pub fn bounds_csv(rows: &[BoundRow], bounds: &[BoundSel]) -> String {
    let has = |b: BoundSel| bounds.contains(&b);
    let mut cols = vec!["x", "strict"];
    if has(BoundSel::Classical) {
        cols.extend(["hoeffding", "bennett", "bernstein", "inf_mgf", "mills"]);
    }
    let interval_cols = |name: &'static str| {
        [
            format!("{name}_lower"),
            format!("{name}_center"),
            format!("{name}_upper"),
            format!("{name}_valid"),
        ]
    };
    let mut owned: Vec<String> = cols.iter().map(|s| s.to_string()).collect();
    for (sel, name) in [
        (BoundSel::Theorem21, "theorem21"),
        (BoundSel::Theorem31, "theorem31"),
        (BoundSel::Corollary22, "corollary22"),
    ] {
        if has(sel) {
            owned.extend(interval_cols(name));
        }
    }
    if has(BoundSel::Corollary23) {
        owned.push("corollary23_upper".into());
    }
    if has(BoundSel::Theorem22) {
        owned.push("theorem22_upper".into());
    }
    if has(BoundSel::Theorem23) {
        owned.extend(interval_cols("theorem23"));
    }
    if has(BoundSel::Exact) {
        owned.push("exact_tail".into());
    }

    let mut out = format!("# sharp-tails bounds schema {SCHEMA_VERSION}\n");
    out.push_str(&owned.join(","));
    out.push('\n');
    let interval = |c: &Option<Cell<SharpInterval>>| -> Vec<String> {
        match c.as_ref().and_then(|c| c.value()) {
            Some(i) => vec![
                fmt_f64(i.lower),
                fmt_f64(i.center),
                fmt_f64(i.upper),
                i.valid.to_string(),
            ],
            None => vec![String::new(); 4],
        }
    };
    let scalar = |c: &Option<Cell<f64>>| opt(c.as_ref().and_then(|c| c.value().copied()));
    for r in rows {
        let mut f = vec![fmt_f64(r.x), r.strict.to_string()];
        if has(BoundSel::Classical) {
            f.extend([
                opt(r.hoeffding),
                opt(r.bennett),
                opt(r.bernstein),
                scalar(&r.inf_mgf),
                opt(r.mills),
            ]);
        }
        if has(BoundSel::Theorem21) {
            f.extend(interval(&r.theorem21));
        }
        if has(BoundSel::Theorem31) {
            f.extend(interval(&r.theorem31));
        }
        if has(BoundSel::Corollary22) {
            f.extend(interval(&r.corollary22));
        }
        if has(BoundSel::Corollary23) {
            f.push(scalar(&r.corollary23));
        }
        if has(BoundSel::Theorem22) {
            f.push(scalar(&r.theorem22));
        }
        if has(BoundSel::Theorem23) {
            f.extend(interval(&r.theorem23));
        }
        if has(BoundSel::Exact) {
            f.push(opt(r.exact));
        }
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}

/// One point of `R(x, n) = P(S'_n >= x sqrt n) / (Theta(x) H_n(x, sqrt n))`
/// for Rademacher sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure1Row {
    pub n: u64,
    pub x: f64,
    /// Non-strict tail `P(S'_n >= x sqrt n)`.
    pub exact_tail: f64,
    /// `Theta(x) H_n(x, sqrt n)`.
    pub theta_h: f64,
    pub ratio: f64,
}

/// Tails below this are dropped from the ratio plot.
pub const FIGURE1_MIN_TAIL: f64 = 1e-12;

/// `points` evenly spaced `x` in `[0, x_max]` for every `n`, keeping rows
/// whose exact tail is at least [`FIGURE1_MIN_TAIL`].
pub fn figure1(n_list: &[u64], x_max: f64, points: usize) -> Result<Vec<Figure1Row>> {
    if !(x_max >= 0.0 && x_max.is_finite()) || points == 0 {
        return Err(Error::InvalidParameter(
            "need x_max >= 0 and at least one point".into(),
        ));
    }
    let xs: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|k| x_max * k as f64 / (points - 1) as f64)
            .collect()
    };
    let per_n: Vec<Result<Vec<Figure1Row>>> = n_list
        .par_iter()
        .map(|&n| {
            let model = SumModel::rademacher(n)?;
            let lattice = LatticeDistribution::from_blocks(&model.blocks())?;
            let sigma = (n as f64).sqrt();
            Ok(xs
                .iter()
                .filter_map(|&x| {
                    let exact = lattice.tail(x * sigma, false);
                    let theta_h = theta(x) * hoeffding_bound(x, sigma, n).value;
                    (exact >= FIGURE1_MIN_TAIL && theta_h > 0.0).then_some(Figure1Row {
                        n,
                        x,
                        exact_tail: exact,
                        theta_h,
                        ratio: exact / theta_h,
                    })
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_n {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn figure1_csv(rows: &[Figure1Row]) -> String {
    let mut out = format!("# sharp-tails figure1 schema {SCHEMA_VERSION}\n");
    out.push_str("n,x,exact_tail,theta_h,ratio,strict\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},false",
            r.n,
            fmt_f64(r.x),
            fmt_f64(r.exact_tail),
            fmt_f64(r.theta_h),
            fmt_f64(r.ratio)
        );
    }
    out
}

/// `max |R - 1|` over the rows for `n`.
pub fn figure1_max_deviation(rows: &[Figure1Row], n: u64) -> f64 {
    rows.iter()
        .filter(|r| r.n == n)
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0, f64::max)
}

/// The band `c_x / (sigma Theta(x))` that `R(x, n) - 1` must respect.
pub fn figure1_band(n: u64, x: f64) -> f64 {
    let sigma = (n as f64).sqrt();
    theorem23_cx(x / sigma) / (sigma * theta(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub y: f64,
    pub rate: Option<f64>,
    pub lambda_bar: Option<f64>,
    /// `exp(-n Lambda_n^*(y))`
    pub inf_mgf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn rate_table(model: &SumModel, ys: &[f64]) -> Vec<RateRow> {
    let n = model.n() as f64;
    ys.iter()
        .map(|&y| match rate_point(model, y) {
            Ok(p) => RateRow {
                y,
                rate: Some(p.rate),
                lambda_bar: Some(p.lambda_bar),
                inf_mgf: Some((-n * p.rate).exp()),
                error: None,
            },
            Err(e) => RateRow {
                y,
                rate: None,
                lambda_bar: None,
                inf_mgf: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn rate_csv(rows: &[RateRow]) -> String {
    let mut out = format!("# sharp-tails rate schema {SCHEMA_VERSION}\n");
    out.push_str("y,rate,lambda_bar,inf_mgf,error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.y),
            opt(r.rate),
            opt(r.lambda_bar),
            opt(r.inf_mgf),
            r.error.as_deref().map(|e| format!("\"{}\"", e.replace('"', "'"))).unwrap_or_default()
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// Oracle containment of one bound over the `x` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub checked: usize,
    pub violations: usize,
    /// First `x` where the exact tail escaped the bound.
    pub first_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerryEsseenCheck {
    pub x: f64,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BerryEsseenReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub n: u64,
    pub sigma2: f64,
    pub b: f64,
    pub delta: f64,
    pub condition_a: ConditionAReport,
    pub lemmas: LemmaReport,
    pub berry_esseen: Vec<BerryEsseenCheck>,
    pub containment: Vec<ContainmentCheck>,
    pub passed: bool,
}

/// Runs the lemma suite, condition (A), Berry-Esseen under the tilt at the
/// saddlepoints of `x = 0, 1, 2`, and exact-tail containment of every bound
/// on `x_grid`.
pub fn verify_model(
    model: &SumModel,
    b: f64,
    delta: f64,
    lambda_grid: &[f64],
    x_grid: &[f64],
    constants: &BesseenConstants,
) -> Result<VerifyReport> {
    check_x_grid(x_grid)?;
    let c = constants.constant(delta)?;
    let lemmas = verify_lemma_suite(model, b, delta, lambda_grid)?;
    let mut grid = default_condition_a_grid(b);
    grid.extend_from_slice(lambda_grid);
    let condition_a = check_condition_a(model, b, &grid)?;

    let lattice = LatticeDistribution::from_blocks(&model.blocks());
    let berry_esseen: Vec<BerryEsseenCheck> = [0.0, 1.0, 2.0]
        .iter()
        .map(|&x| match solve_lambda_bar(model, x)
            .and_then(|sp| berry_esseen_tilted(model, sp.lambda_bar, delta, c))
        {
            Ok(r) => BerryEsseenCheck {
                x,
                status: if r.holds { CheckStatus::Pass } else { CheckStatus::Fail },
                report: Some(r),
                reason: None,
            },
            Err(e) => BerryEsseenCheck {
                x,
                status: CheckStatus::Skipped,
                report: None,
                reason: Some(e.to_string()),
            },
        })
        .collect();

    let sigma = model.sigma();
    let b21 = default_theorem21_b(model, delta)?;
    type Upper<'a> = Box<dyn Fn(f64) -> Result<(f64, f64, bool)> + 'a>;
    let interval = |r: Result<SharpInterval>| r.map(|i| (i.lower, i.upper, i.valid));
    let upper_only = |r: Result<f64>| r.map(|u| (0.0, u, true));
    let checks: Vec<(&'static str, Upper)> = vec![
        ("theorem21", Box::new(|x| interval(theorem21_interval(model, x, b21, delta, c)))),
        ("theorem31", Box::new(|x| interval(theorem31_interval(model, x, delta, c)))),
        ("corollary22", Box::new(|x| interval(corollary22_interval(model, x, None)))),
        ("corollary23", Box::new(|x| upper_only(corollary23_upper(model, x, None)))),
        (
            "theorem22",
            Box::new(|x| upper_only(theorem22_upper(model, x, constants.c3_universal, None))),
        ),
        ("theorem23", Box::new(|x| interval(theorem23_interval(model, x)))),
    ];
    let containment = checks
        .into_iter()
        .map(|(name, f)| {
            let lattice = match &lattice {
                Ok(l) => l,
                Err(e) => {
                    return ContainmentCheck {
                        name,
                        status: CheckStatus::Skipped,
                        checked: 0,
                        violations: 0,
                        first_violation: None,
                        reason: Some(format!("no exact oracle: {e}")),
                    }
                }
            };
            let mut checked = 0;
            let mut violations = 0;
            let mut first = None;
            for &x in x_grid {
                match f(x) {
                    Ok((lo, hi, true)) => {
                        let p = lattice.tail(x * sigma, true);
                        checked += 1;
                        if !(lo <= p && p <= hi) {
                            violations += 1;
                            first.get_or_insert(x);
                        }
                    }
                    Ok(_) => {}
                    Err(Error::HypothesisViolation(why)) => {
                        return ContainmentCheck {
                            name,
                            status: CheckStatus::Skipped,
                            checked: 0,
                            violations: 0,
                            first_violation: None,
                            reason: Some(format!("hypothesis: {why}")),
                        }
                    }
                    Err(_) => {}
                }
            }
            ContainmentCheck {
                name,
                status: if violations > 0 {
                    CheckStatus::Fail
                } else if checked == 0 {
                    CheckStatus::Skipped
                } else {
                    CheckStatus::Pass
                },
                checked,
                violations,
                first_violation: first,
                reason: (checked == 0).then(|| "no admissible x on the grid".to_string()),
            }
        })
        .collect::<Vec<_>>();

    let passed = lemmas.all_hold()
        && berry_esseen.iter().all(|b| b.status != CheckStatus::Fail)
        && containment.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        n: model.n(),
        sigma2: model.sigma2(),
        b,
        delta,
        condition_a,
        lemmas,
        berry_esseen,
        containment,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:1:3").is_err());
        assert!(check_x_grid(&[0.0, 2.0, 1.0]).is_err());
        assert!(check_x_grid(&[-1.0]).is_err());
    }

    #[test]
    fn bound_names_round_trip() {
        for b in BoundSel::ALL {
            assert_eq!(b.name().parse::<BoundSel>().unwrap(), b);
        }
        assert!("nope".parse::<BoundSel>().is_err());
    }

    #[test]
    fn zero_row_for_rademacher() {
        let m = SumModel::rademacher(100).unwrap();
        let rows = bounds_table(&m, &[0.0], &SweepConfig::default()).unwrap();
        let r = &rows[0];
        assert_eq!(r.hoeffding, Some(1.0));
        assert_eq!(r.bennett, Some(1.0));
        assert_eq!(r.bernstein, Some(1.0));
        assert_eq!(r.inf_mgf.as_ref().unwrap().value(), Some(&1.0));
        assert_eq!(r.mills, Some(0.5));
        for i in [&r.theorem21, &r.theorem31, &r.corollary22, &r.theorem23] {
            assert_eq!(i.as_ref().unwrap().value().unwrap().center, 0.5);
        }
    }

    #[test]
    fn eta_inf_mgf_column_equals_hoeffding() {
        let m = SumModel::eta(0.25, 40).unwrap();
        let xs = parse_grid("0:6:25").unwrap();
        for r in bounds_table(&m, &xs, &SweepConfig::default()).unwrap() {
            let h = r.hoeffding.unwrap();
            let i = *r.inf_mgf.unwrap().value().unwrap();
            assert!((i - h).abs() <= 1e-10 * h);
            assert!(h <= r.bennett.unwrap() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn csv_is_deterministic_with_17_digits() {
        let m = SumModel::rademacher(50).unwrap();
        let xs = parse_grid("0:2:5").unwrap();
        let cfg = SweepConfig::default();
        let a = bounds_csv(&bounds_table(&m, &xs, &cfg).unwrap(), &cfg.bounds);
        let b = bounds_csv(&bounds_table(&m, &xs, &cfg).unwrap(), &cfg.bounds);
        assert_eq!(a, b);
        assert!(a.starts_with("# sharp-tails bounds schema 1\nx,strict,hoeffding"));
        assert!(a.contains("5.0000000000000000e-1"));
        let width = a.lines().nth(1).unwrap().split(',').count();
        assert!(a.lines().skip(2).all(|l| l.split(',').count() == width));
    }

    #[test]
    fn figure1_zero_row_is_not_forced_to_one() {
        let rows = figure1(&[100], 1.0, 2).unwrap();
        let r0 = rows[0];
        assert_eq!(r0.x, 0.0);
        // P(S_100 >= 0) = 1/2 + P(S_100 = 0)/2
        assert!((r0.exact_tail - 0.539_794_618_693_589_9).abs() < 1e-12);
        assert!((r0.ratio - 2.0 * r0.exact_tail).abs() < 1e-15);
    }

    #[test]
    fn rate_rows_flag_unreachable_points() {
        let m = SumModel::rademacher(10).unwrap();
        let rows = rate_table(&m, &[0.0, 0.5, 1.0]);
        assert_eq!(rows[0].rate, Some(0.0));
        assert!(rows[1].rate.unwrap() > 0.0);
        assert!(rows[2].error.is_some());
        assert!(rate_csv(&rows).lines().count() == 5);
    }

    #[test]
    fn verify_rademacher_passes() {
        let m = SumModel::rademacher(100).unwrap();
        let grid: Vec<f64> = (0..50).map(|k| k as f64 * 0.02).collect();
        let xs = parse_grid("0:3:31").unwrap();
        let r = verify_model(&m, 1.0, 1.0, &grid, &xs, &BesseenConstants::default()).unwrap();
        assert!(r.passed, "{r:#?}");
        assert!(r.containment.iter().all(|c| c.status == CheckStatus::Pass));
    }
}
