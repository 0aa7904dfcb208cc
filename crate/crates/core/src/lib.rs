//! Two-sided tail bounds for sums of independent bounded random variables,
//! sharp up to a factor `1 + o(1)` in the moderate and large deviation range,
//! together with the exact and Monte Carlo oracles used to check them.
//!
//! The main entry points are [`sharp::theorem21_interval`] and
//! [`sharp::theorem31_interval`], which bracket `P(S_n > x sigma)` as
//! `(Theta(x) + theta eps) inf_mgf(x)` with `|theta| <= 1`.

pub mod classical;
pub mod dist;
pub mod error;
pub mod oracle;
pub mod rate;
pub mod sharp;
pub mod sweep;
pub mod tilted;

pub use dist::{Atom, Component, DiscreteDistribution, SumModel};
pub use error::{Error, Result};
