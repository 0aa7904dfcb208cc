//! Plain and exponentially tilted Monte Carlo for `P(S_n > t)`.
//!
//! Samples are split into chunks of [`CHUNK`] draws. Chunk `c` uses
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, so the estimate depends
//! only on `(seed, n_samples)` and not on the thread count; chunk results are
//! merged in chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::lattice::{Compensated, Layout};
use crate::dist::{Atom, SumModel};
use crate::error::{Error, Result};

pub const CHUNK: u64 = 4096;

/// Draws one `S_n` as a multinomial count per block.
struct Sampler<'a> {
    blocks: Vec<(&'a [Atom], u64)>,
    layout: Option<Layout>,
}

/// A drawn sum, on the lattice when one exists.
#[derive(Clone, Copy)]
enum Draw {
    Lattice(i64),
    Float(f64),
}

impl<'a> Sampler<'a> {
    fn new(blocks: Vec<(&'a [Atom], u64)>) -> Self {
        let layout = Layout::new(&blocks).ok();
        Sampler { blocks, layout }
    }

    fn draw(&self, rng: &mut impl Rng) -> Draw {
        let mut index = 0i64;
        let mut value = 0.0;
        for (b, (atoms, m)) in self.blocks.iter().enumerate() {
            let mut left = *m;
            let mut mass_left = 1.0;
            for (k, a) in atoms.iter().enumerate() {
                if left == 0 {
                    break;
                }
                let count = if k + 1 == atoms.len() {
                    left
                } else {
                    let p = (a.prob / mass_left).clamp(0.0, 1.0);
                    mass_left -= a.prob;
                    Binomial::new(left, p).expect("p in [0, 1]").sample(rng)
                };
                left -= count;
                match &self.layout {
                    Some(l) => index += count as i64 * l.offsets[b][k] as i64,
                    None => value += count as f64 * a.value,
                }
            }
        }
        match &self.layout {
            Some(l) => Draw::Lattice(l.numerator(index)),
            None => Draw::Float(value),
        }
    }

    fn hit(&self, d: Draw, threshold: f64, strict: bool) -> bool {
        match (d, &self.layout) {
            (Draw::Lattice(k), Some(l)) => l.exceeds(k, threshold, strict),
            (Draw::Float(s), _) => {
                if strict {
                    s > threshold
                } else {
                    s >= threshold
                }
            }
            _ => unreachable!("draw kind follows the layout"),
        }
    }

    fn value(&self, d: Draw) -> f64 {
        match (d, &self.layout) {
            (Draw::Lattice(k), Some(l)) => k as f64 / l.denominator as f64,
            (Draw::Float(s), _) => s,
            _ => unreachable!("draw kind follows the layout"),
        }
    }
}

/// Per-chunk sums of the (weighted) indicator.
#[derive(Default, Clone, Copy)]
pub(crate) struct Tally {
    pub hits: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

/// Runs `n_samples` draws and returns the merged tally. `weight` maps a
/// drawn sum to its likelihood ratio.
fn run(
    sampler: &Sampler<'_>,
    threshold: f64,
    strict: bool,
    n_samples: u64,
    seed: u64,
    weight: impl Fn(f64) -> f64 + Sync,
) -> Tally {
    let chunks = n_samples.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(n_samples - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..count {
                let d = sampler.draw(&mut rng);
                if sampler.hit(d, threshold, strict) {
                    let w = weight(sampler.value(d));
                    t.hits += 1;
                    t.sum += w;
                    t.sum_sq += w * w;
                }
            }
            t
        })
        .collect();
    let mut sum = Compensated::default();
    let mut sum_sq = Compensated::default();
    let mut hits = 0;
    for t in &tallies {
        hits += t.hits;
        sum.add(t.sum);
        sum_sq.add(t.sum_sq);
    }
    Tally {
        hits,
        sum: sum.value(),
        sum_sq: sum_sq.value(),
    }
}

pub(crate) fn plain(
    model: &SumModel,
    threshold: f64,
    strict: bool,
    n_samples: u64,
    seed: u64,
) -> Result<Tally> {
    check(threshold, n_samples)?;
    let sampler = Sampler::new(model.blocks());
    Ok(run(&sampler, threshold, strict, n_samples, seed, |_| 1.0))
}

/// Samples under `P_lambda` and weights each hit by `e^{-lambda S + psi}`.
pub(crate) fn tilted(
    blocks: Vec<(&[Atom], u64)>,
    lambda: f64,
    psi: f64,
    threshold: f64,
    strict: bool,
    n_samples: u64,
    seed: u64,
) -> Result<Tally> {
    check(threshold, n_samples)?;
    let sampler = Sampler::new(blocks);
    Ok(run(&sampler, threshold, strict, n_samples, seed, |s| {
        (psi - lambda * s).exp()
    }))
}

fn check(threshold: f64, n_samples: u64) -> Result<()> {
    if threshold.is_nan() {
        return Err(Error::InvalidParameter("threshold is NaN".into()));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok(())
}
