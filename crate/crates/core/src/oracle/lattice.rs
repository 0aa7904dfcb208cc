//! Exact distribution of a sum of finite lattice laws by direct convolution.
//!
//! Every atom value is read as a rational `K / Q` with a common denominator
//! `Q`. Shifting each block to its smallest atom and dividing by the gcd of
//! all offsets leaves a dense integer grid, so the sum lives on
//! `(base + step * j) / Q` for `j = 0..len`.

use crate::dist::Atom;
use crate::error::{Error, Result};

/// Largest denominator accepted for a single value and for the common grid.
pub const MAX_DENOMINATOR: u64 = 1_000_000;

/// Largest number of grid points the convolution may occupy.
pub const MAX_LATTICE_POINTS: u64 = 100_000_000;

/// Neumaier's compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Best rational approximation `p / q` of `v` with `q <= MAX_DENOMINATOR`
/// that is within `1e-12 max(1, |v|)`, from the continued fraction of `v`.
pub(crate) fn rational(v: f64) -> Option<(i64, u64)> {
    if !v.is_finite() || v.abs() > 1e12 {
        return None;
    }
    let tol = 1e-12 * v.abs().max(1.0);
    let (mut h0, mut h1) = (0.0f64, 1.0f64);
    let (mut k0, mut k1) = (1.0f64, 0.0f64);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        if k > MAX_DENOMINATOR as f64 {
            return None;
        }
        if (v - h / k).abs() <= tol {
            return Some((h as i64, k as u64));
        }
        let frac = x - a;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
        (h0, h1) = (h1, h);
        (k0, k1) = (k1, k);
    }
    None
}

/// Integer coordinates of every atom on the common grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub denominator: u64,
    pub step: i64,
    pub base: i64,
    /// Per block, the grid offset of each atom from the block minimum.
    pub offsets: Vec<Vec<usize>>,
    /// Number of grid points spanned by the full sum minus one.
    pub span: u64,
}

impl Layout {
    pub(crate) fn new(blocks: &[(&[Atom], u64)]) -> Result<Layout> {
        let mut fractions = Vec::with_capacity(blocks.len());
        let mut q = 1u64;
        for (b, (atoms, _)) in blocks.iter().enumerate() {
            let mut row = Vec::with_capacity(atoms.len());
            for (k, a) in atoms.iter().enumerate() {
                let f = rational(a.value).ok_or_else(|| {
                    Error::Unsupported(format!(
                        "atom {k} of block {b} ({}) is not a rational with denominator <= {MAX_DENOMINATOR}",
                        a.value
                    ))
                })?;
                q = q / gcd(q, f.1) * f.1;
                if q > MAX_DENOMINATOR {
                    return Err(Error::Unsupported(format!(
                        "common lattice denominator exceeds {MAX_DENOMINATOR}"
                    )));
                }
                row.push(f);
            }
            fractions.push(row);
        }

        let mut step = 0u64;
        let mut base = 0i64;
        let mut ints = Vec::with_capacity(blocks.len());
        for (row, (_, m)) in fractions.iter().zip(blocks) {
            let k: Vec<i64> = row.iter().map(|&(p, d)| p * (q / d) as i64).collect();
            let lo = *k.iter().min().expect("non-empty block");
            for &kk in &k {
                step = gcd(step, (kk - lo) as u64);
            }
            base += lo * *m as i64;
            ints.push((k, lo));
        }
        if step == 0 {
            // every block is a point mass
            step = 1;
        }

        let mut span = 0u64;
        let mut offsets = Vec::with_capacity(blocks.len());
        for ((k, lo), (_, m)) in ints.iter().zip(blocks) {
            let off: Vec<usize> = k.iter().map(|kk| ((kk - lo) as u64 / step) as usize).collect();
            let width = *off.iter().max().expect("non-empty block") as u64;
            span = width
                .checked_mul(*m)
                .and_then(|w| w.checked_add(span))
                .ok_or_else(|| Error::Unsupported("lattice size overflows".into()))?;
            offsets.push(off);
        }
        Ok(Layout {
            denominator: q,
            step: step as i64,
            base,
            offsets,
            span,
        })
    }

    /// Integer numerator of grid point `j`.
    pub(crate) fn numerator(&self, j: i64) -> i64 {
        self.base + self.step * j
    }

    /// Sign-exact test of `numerator / Q > t` (or `>=` when not strict):
    /// the fused multiply-add rounds `K - t Q` once, which preserves its sign.
    pub(crate) fn exceeds(&self, numerator: i64, threshold: f64, strict: bool) -> bool {
        let d = (-threshold).mul_add(self.denominator as f64, numerator as f64);
        if strict {
            d > 0.0
        } else {
            d >= 0.0
        }
    }
}

/// The exact law of a lattice sum. Masses are never renormalised; the
/// deviation of their total from 1 is kept in `mass_drift`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDistribution {
    layout: Layout,
    masses: Vec<f64>,
    /// `upper[j] = sum_{k >= j} masses[k]`, with `upper[len] = 0`.
    upper: Vec<f64>,
    mass_drift: f64,
}

impl LatticeDistribution {
    /// Convolves `multiplicity` copies of each block's law, in block order.
    pub fn from_blocks(blocks: &[(&[Atom], u64)]) -> Result<Self> {
        let layout = Layout::new(blocks)?;
        if layout.span + 1 > MAX_LATTICE_POINTS {
            return Err(Error::Unsupported(format!(
                "lattice needs {} points, more than {MAX_LATTICE_POINTS}",
                layout.span + 1
            )));
        }
        let size = layout.span as usize + 1;
        let mut cur = vec![0.0; size];
        let mut next = vec![0.0; size];
        cur[0] = 1.0;
        let mut len = 1usize;
        for ((atoms, m), off) in blocks.iter().zip(&layout.offsets) {
            let width = *off.iter().max().expect("non-empty block");
            for _ in 0..*m {
                let new_len = len + width;
                for (k, slot) in next[..new_len].iter_mut().enumerate() {
                    let mut acc = Compensated::default();
                    for (a, &o) in atoms.iter().zip(off) {
                        if k >= o && k - o < len {
                            acc.add(a.prob * cur[k - o]);
                        }
                    }
                    *slot = acc.value();
                }
                std::mem::swap(&mut cur, &mut next);
                len = new_len;
            }
        }
        debug_assert_eq!(len, size);

        let mut upper = vec![0.0; size + 1];
        let mut acc = Compensated::default();
        for j in (0..size).rev() {
            acc.add(cur[j]);
            upper[j] = acc.value();
        }
        let mass_drift = (upper[0] - 1.0).abs();
        Ok(LatticeDistribution {
            layout,
            masses: cur,
            upper,
            mass_drift,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Value of the sum at grid point `j`.
    pub fn point(&self, j: usize) -> f64 {
        self.layout.numerator(j as i64) as f64 / self.layout.denominator as f64
    }

    /// Grid pitch `step / Q`.
    pub fn pitch(&self) -> f64 {
        self.layout.step as f64 / self.layout.denominator as f64
    }

    /// Common denominator `Q` of the atom values.
    pub fn denominator(&self) -> u64 {
        self.layout.denominator
    }

    /// `|sum of masses - 1|`.
    pub fn mass_drift(&self) -> f64 {
        self.mass_drift
    }

    /// Smallest `j` with `point(j) > threshold` (or `>=`), or `len()`.
    pub fn first_index_above(&self, threshold: f64, strict: bool) -> usize {
        if threshold == f64::NEG_INFINITY {
            return 0;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self
                .layout
                .exceeds(self.layout.numerator(mid as i64), threshold, strict)
            {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    /// `P(S > threshold)` when `strict`, else `P(S >= threshold)`.
    pub fn tail(&self, threshold: f64, strict: bool) -> f64 {
        match self.first_index_above(threshold, strict) {
            // the whole support: exactly 1 whatever the mass drift
            0 => 1.0,
            j => self.upper[j].min(1.0),
        }
    }

    /// Upper tails at every grid point: `P(S >= point(j))`.
    pub fn upper_tails(&self) -> &[f64] {
        &self.upper[..self.len()]
    }

    /// `sup_y |P((S - mean)/sd <= y) - cdf(y)|`, comparing both one-sided
    /// limits of the step function at every jump.
    pub fn kolmogorov_to_normal(&self, mean: f64, sd: f64, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut below = Compensated::default();
        let mut worst = 0.0f64;
        for j in 0..self.len() {
            let phi = cdf((self.point(j) - mean) / sd);
            let left = below.value();
            below.add(self.masses[j]);
            let right = below.value();
            worst = worst.max((left - phi).abs()).max((right - phi).abs());
        }
        worst
    }
}
