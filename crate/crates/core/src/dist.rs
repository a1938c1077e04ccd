//! Parity distributions, their fermionized versions, and the
//! generator/evaluator reductions between them.
//!
//! Layout of a fermionized string: `x` occupies positions `0..n`, the label
//! `y` sits at position `n` and the parity register `z` at `n + 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitString, BitsError};
use crate::simulate::{DistributionTable, SimError};

/// Largest secret length for the `n + 1`-bit parity tables.
pub const MAX_PARITY_N: usize = 20;
/// Largest secret length for the `n + 2`-bit fermionized tables.
pub const MAX_FERMIONIZED_N: usize = 18;
/// Largest width for `par_k`.
pub const MAX_EVEN_K: usize = 20;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("secret must have at least one bit")]
    EmptySecret,
    #[error("noise rate {0} outside [0, 1]")]
    NoiseOutOfRange(f64),
    #[error("{what} with n = {n} exceeds the limit of {max}")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("expected a {expected}-bit string, got {got} bits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("k must be at least 1")]
    EmptyBlock,
    #[error(transparent)]
    Bits(#[from] BitsError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The hidden vector `s` of a parity `chi_s`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "BitString", into = "BitString")]
pub struct Secret(BitString);

impl Secret {
    pub fn new(s: BitString) -> Result<Self, DistError> {
        if s.is_empty() {
            return Err(DistError::EmptySecret);
        }
        Ok(Self(s))
    }

    pub fn bits(&self) -> BitString {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn weight(&self) -> usize {
        self.0.weight() as usize
    }

    /// All `2^n` secrets in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Secret> {
        assert!(n >= 1);
        BitString::all(n).map(Secret)
    }

    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Result<Self, DistError> {
        if n == 0 {
            return Err(DistError::EmptySecret);
        }
        let v = if n == 64 { rng.random::<u64>() } else { rng.random_range(0..(1u64 << n)) };
        Self::new(BitString::new(n, v)?)
    }
}

impl TryFrom<BitString> for Secret {
    type Error = DistError;

    fn try_from(s: BitString) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<Secret> for BitString {
    fn from(s: Secret) -> Self {
        s.0
    }
}

impl FromStr for Secret {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s.parse()?)
    }
}

impl fmt::Display for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Secret({})", self.0)
    }
}

/// Classification noise rate, `0 <= eta <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct NoiseRate(f64);

impl NoiseRate {
    pub const ZERO: NoiseRate = NoiseRate(0.0);

    pub fn new(eta: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(DistError::NoiseOutOfRange(eta));
        }
        Ok(Self(eta))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

fn check_len(expected: usize, x: &BitString) -> Result<(), DistError> {
    if x.len() != expected {
        return Err(DistError::LengthMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// `chi_s(x) = x . s mod 2`.
pub fn chi(s: &Secret, x: BitString) -> Result<u8, DistError> {
    check_len(s.n(), &x)?;
    Ok(s.0.dot(&x))
}

/// `xi_s(x) = (chi_s(x), chi_s(x) + |x|)`.
pub fn xi(s: &Secret, x: BitString) -> Result<(u8, u8), DistError> {
    let y = chi(s, x)?;
    Ok((y, y ^ x.parity()))
}

fn guard(what: &'static str, n: usize, max: usize) -> Result<(), DistError> {
    if n > max {
        return Err(DistError::TooLarge { what, n, max });
    }
    Ok(())
}

/// Splits an `(n+1)`-bit string into `(x, y)`.
pub fn split_xy(v: BitString) -> (BitString, u8) {
    v.pop()
}

/// Splits an `(n+2)`-bit string into `(x, y, z)`.
pub fn split_xyz(v: BitString) -> (BitString, u8, u8) {
    let (xy, z) = v.pop();
    let (x, y) = xy.pop();
    (x, y, z)
}

/// `D_s^eta` with the noise folded in; `eta = 0` gives `D_s`.
fn parity_table(s: &Secret, eta: f64) -> Result<DistributionTable, DistError> {
    guard("parity distribution", s.n(), MAX_PARITY_N)?;
    let base = (-(s.n() as f64)).exp2();
    Ok(DistributionTable::from_fn(s.n() + 1, |v| {
        let (x, y) = split_xy(v);
        if s.0.dot(&x) == y {
            (1.0 - eta) * base
        } else {
            eta * base
        }
    })?)
}

/// `D_s(x, y) = 2^{-n}` when `chi_s(x) = y`, else 0.
pub fn parity_dist(s: &Secret) -> Result<DistributionTable, DistError> {
    parity_table(s, 0.0)
}

/// Label flipped with probability `eta`.
pub fn noisy_parity_dist(s: &Secret, eta: NoiseRate) -> Result<DistributionTable, DistError> {
    parity_table(s, eta.0)
}

fn fermionized_table(s: &Secret, eta: f64) -> Result<DistributionTable, DistError> {
    guard("fermionized parity distribution", s.n(), MAX_FERMIONIZED_N)?;
    let base = (-(s.n() as f64)).exp2();
    Ok(DistributionTable::from_fn(s.n() + 2, |v| {
        let (x, y, z) = split_xyz(v);
        let (yy, zz) = (s.0.dot(&x), s.0.dot(&x) ^ x.parity());
        if (y, z) == (yy, zz) {
            (1.0 - eta) * base
        } else if (y, z) == (yy ^ 1, zz ^ 1) {
            eta * base
        } else {
            0.0
        }
    })?)
}

/// `M_s(x, y, z) = 2^{-n}` when `xi_s(x) = (y, z)`, else 0.
pub fn fermionized_parity_dist(s: &Secret) -> Result<DistributionTable, DistError> {
    fermionized_table(s, 0.0)
}

/// `M_s^eta`: `(y, z)` flipped jointly with probability `eta`.
pub fn fermionized_noisy_parity_dist(s: &Secret, eta: NoiseRate) -> Result<DistributionTable, DistError> {
    fermionized_table(s, eta.0)
}

/// `par_k`: uniform over even-weight `k`-bit strings.
pub fn even_parity_dist(k: usize) -> Result<DistributionTable, DistError> {
    if k == 0 {
        return Err(DistError::EmptyBlock);
    }
    guard("even parity distribution", k, MAX_EVEN_K)?;
    let p = (1.0 - k as f64).exp2();
    Ok(DistributionTable::from_fn(k, |x| if x.parity() == 0 { p } else { 0.0 })?)
}

type EvalFn = dyn Fn(BitString) -> f64 + Send + Sync;

/// A probability mass function on fixed-length strings.
#[derive(Clone)]
pub struct Evaluator {
    bits: usize,
    f: Arc<EvalFn>,
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator").field("bits", &self.bits).finish_non_exhaustive()
    }
}

impl Evaluator {
    pub fn new(bits: usize, f: impl Fn(BitString) -> f64 + Send + Sync + 'static) -> Self {
        Self { bits, f: Arc::new(f) }
    }

    /// Exact evaluator backed by a table.
    pub fn from_table(d: &DistributionTable) -> Self {
        let d = d.clone();
        Self::new(d.n(), move |x| d.prob(x))
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn eval(&self, x: BitString) -> Result<f64, DistError> {
        check_len(self.bits, &x)?;
        Ok((self.f)(x))
    }

    /// All values in index order (no normalization check).
    pub fn values(&self) -> Vec<f64> {
        BitString::all(self.bits).map(|x| (self.f)(x)).collect()
    }

    /// The evaluated function as a table; fails unless it is a distribution.
    pub fn to_table(&self) -> Result<DistributionTable, DistError> {
        Ok(DistributionTable::new(self.bits, self.values())?)
    }
}

/// `(x, y) -> e(x, y, |x| + y)`: an `M_s` evaluator becomes a `D_s` evaluator.
pub fn eval_reduction_d_from_m(e: &Evaluator) -> Evaluator {
    let inner = e.clone();
    Evaluator::new(e.bits.saturating_sub(1), move |xy| {
        let z = xy.parity();
        (inner.f)(xy.push(z).expect("length below 64"))
    })
}

/// `(x, y, z) -> e(x, y)` if `|x| + y = z`, else 0.
pub fn eval_reduction_m_from_d(e: &Evaluator) -> Evaluator {
    let inner = e.clone();
    Evaluator::new(e.bits + 1, move |xyz| {
        let (xy, z) = xyz.pop();
        if xy.parity() == z {
            (inner.f)(xy)
        } else {
            0.0
        }
    })
}

/// A sampling procedure producing strings of constant length.
pub trait Generator {
    fn bits(&self) -> usize;
    fn generate(&mut self) -> BitString;
}

impl Generator for crate::simulate::Sampler {
    fn bits(&self) -> usize {
        self.n()
    }

    fn generate(&mut self) -> BitString {
        self.draw()
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn bits(&self) -> usize {
        (**self).bits()
    }

    fn generate(&mut self) -> BitString {
        (**self).generate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionDirection {
    /// Drop the trailing `z` bit.
    MToD,
    /// Append `|x| + y`.
    DToM,
}

#[derive(Debug, Clone)]
pub struct ReducedGenerator<G> {
    inner: G,
    direction: ReductionDirection,
}

impl<G: Generator> ReducedGenerator<G> {
    pub fn into_inner(self) -> G {
        self.inner
    }
}

impl<G: Generator> Generator for ReducedGenerator<G> {
    fn bits(&self) -> usize {
        match self.direction {
            ReductionDirection::MToD => self.inner.bits() - 1,
            ReductionDirection::DToM => self.inner.bits() + 1,
        }
    }

    fn generate(&mut self) -> BitString {
        let v = self.inner.generate();
        match self.direction {
            ReductionDirection::MToD => v.pop().0,
            ReductionDirection::DToM => v.push(v.parity()).expect("length below 64"),
        }
    }
}

impl<G: Generator> Iterator for ReducedGenerator<G> {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        Some(self.generate())
    }
}

/// Wraps a generator for one of `M_s`, `D_s` (or their noisy versions) as a
/// generator for the other.
pub fn gen_reduction_pair<G: Generator>(g: G, direction: ReductionDirection) -> ReducedGenerator<G> {
    ReducedGenerator { inner: g, direction }
}
