#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sharp_tails::dist::b_ratio;
use sharp_tails::oracle::{exact_from, LatticeDistribution};
use sharp_tails::sharp::{
    corollary22_interval, corollary23_upper, default_theorem21_b, theorem21_interval,
    theorem31_interval,
};
use sharp_tails::{Atom, Component, DiscreteDistribution, SumModel};

/// A mean-zero law on the grid `k / denom`, built from integer values and
/// weights plus one balancing atom of the opposite sign.
pub fn lattice_law(values: &[i32], weights: &[u32], balance: i32, denom: f64) -> DiscreteDistribution {
    let mut pts: Vec<(i32, f64)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        if v == 0 || w == 0 {
            continue;
        }
        match pts.iter_mut().find(|(u, _)| *u == v) {
            Some(p) => p.1 += w as f64,
            None => pts.push((v, w as f64)),
        }
    }
    if pts.is_empty() {
        pts.push((1, 1.0));
    }
    let drift: f64 = pts.iter().map(|(v, w)| *v as f64 * w).sum();
    if drift != 0.0 {
        // balancing value on the other side of zero
        let c = if drift > 0.0 { -balance.abs().max(1) } else { balance.abs().max(1) };
        let w = drift.abs() / c.abs() as f64;
        match pts.iter_mut().find(|(u, _)| *u == c) {
            Some(p) => p.1 += w,
            None => pts.push((c, w)),
        }
    }
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let atoms = pts
        .iter()
        .map(|&(v, w)| Atom::new(v as f64 / denom, w / total))
        .collect();
    DiscreteDistribution::new(atoms).expect("balanced law")
}

/// Random lattice model: 1 to 3 blocks of laws with 2 to 6 atoms on the
/// grid `k / 10` or coarser, total `n` in `n_range`.
pub fn random_model(rng: &mut impl Rng, n_range: (u64, u64)) -> SumModel {
    let denom = [1.0, 2.0, 4.0, 5.0, 10.0][rng.random_range(0..5)];
    random_model_on(rng, n_range, denom)
}

/// As [`random_model`] with every `|xi_i| <= 1`.
pub fn random_unit_model(rng: &mut impl Rng, n_range: (u64, u64)) -> SumModel {
    random_model_on(rng, n_range, 10.0)
}

fn random_model_on(rng: &mut impl Rng, n_range: (u64, u64), denom: f64) -> SumModel {
    let blocks = rng.random_range(1..=3usize);
    let n = rng.random_range(n_range.0..=n_range.1);
    let mut left = n;
    let mut components = Vec::new();
    for b in 0..blocks {
        let m = if b + 1 == blocks {
            left
        } else {
            rng.random_range(1..=left - (blocks - b - 1) as u64)
        };
        left -= m;
        let dist = loop {
            let k = rng.random_range(1..=5usize);
            let values: Vec<i32> = (0..k).map(|_| rng.random_range(-10..=10)).collect();
            let weights: Vec<u32> = (0..k).map(|_| rng.random_range(1..=20)).collect();
            let d = lattice_law(&values, &weights, rng.random_range(1..=10), denom);
            if (2..=6).contains(&d.atoms().len()) {
                break d;
            }
        };
        components.push(Component {
            dist,
            multiplicity: m,
        });
    }
    SumModel::new(components).expect("valid model")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `points` evenly spaced values in `[a, b]`.
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| a + (b - a) * k as f64 / (points - 1) as f64)
        .collect()
}

/// Exact strict tails of `m` against every sharp bound over its admissible
/// range, appending a line per violation. Returns the number of checks.
pub fn containment(m: &SumModel, label: &str, failures: &mut Vec<String>) -> usize {
    let lattice = LatticeDistribution::from_blocks(&m.blocks()).unwrap();
    let sigma = m.sigma();
    let b21 = default_theorem21_b(m, 1.0).unwrap();
    let br = b_ratio(m);
    let top = m.support_upper() / sigma;
    let mut checks = 0;
    let mut check = |name: &str, x: f64, lo: f64, hi: f64| {
        let p = exact_from(&lattice, x * sigma, true).p;
        // subnormal tails carry no relative accuracy on either side
        if p > 0.0 && p < f64::MIN_POSITIVE {
            return;
        }
        checks += 1;
        if !(lo <= p && p <= hi) {
            failures.push(format!("{label} {name} x={x}: {p:e} not in [{lo:e}, {hi:e}]"));
        }
    };
    let bounded = m.a_max() <= 1.0;
    for k in 0..60 {
        let f = k as f64 / 60.0;
        if bounded {
            let i = theorem21_interval(m, f * 0.25 * sigma / b21, b21, 1.0, 0.56).unwrap();
            assert!(i.valid);
            check("theorem21", i.x, i.lower, i.upper);
            let x22 = f * 0.1 * sigma / br;
            let i = corollary22_interval(m, x22, None).unwrap();
            check("corollary22", x22, i.lower, i.upper);
            check("corollary23", x22, 0.0, corollary23_upper(m, x22, None).unwrap());
        }
        let x31 = f * top;
        let i = theorem31_interval(m, x31, 1.0, 0.56).unwrap();
        check("theorem31", x31, i.lower, i.upper);
    }
    checks
}
