//! Sample and statistical-query oracles, and the simulation of queries to a
//! fermionized parity distribution by queries to the plain one.

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bits::BitString;
use crate::dist::Secret;
use crate::rng::derive_seed;
use crate::simulate::{DistributionTable, Sampler};

/// Failure probability targeted by the empirical oracle.
pub const EMPIRICAL_CONFIDENCE_DELTA: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("query value {value} at {x} is outside [-1, 1]")]
    RangeViolation { x: BitString, value: f64 },
    #[error("query on {query} bits sent to an oracle over {oracle} bits")]
    ArityMismatch { query: usize, oracle: usize },
    #[error("{shots} shots only guarantee tolerance {bound:.3e} > tau = {tau:.3e}")]
    ToleranceRisk { shots: usize, bound: f64, tau: f64 },
    #[error("tolerance {0} outside (0, 1)")]
    BadTolerance(f64),
}

type QueryFn = dyn Fn(BitString) -> f64 + Send + Sync;

/// A bounded function `phi: {0,1}^bits -> [-1, 1]`.
#[derive(Clone)]
pub struct StatQuery {
    bits: usize,
    f: Arc<QueryFn>,
}

impl fmt::Debug for StatQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StatQuery").field("bits", &self.bits).finish_non_exhaustive()
    }
}

impl StatQuery {
    pub fn new(bits: usize, f: impl Fn(BitString) -> f64 + Send + Sync + 'static) -> Self {
        Self { bits, f: Arc::new(f) }
    }

    /// Query backed by an explicit value table in index order.
    pub fn from_values(bits: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1 << bits);
        Self::new(bits, move |x| values[x.index() as usize])
    }

    pub fn constant(bits: usize, c: f64) -> Self {
        Self::new(bits, move |_| c)
    }

    /// `(-1)^{a.x + b y}` on `(x, y)` with `|x| = a.len()`; trailing bits are ignored.
    pub fn parity_correlator(a: BitString, b: u8, bits: usize) -> Self {
        assert!(bits > a.len(), "query must cover x and y");
        let n = a.len();
        Self::new(bits, move |v| {
            let xy = v.prefix(n + 1);
            let (x, y) = xy.pop();
            if (a.dot(&x) ^ (b & y)) == 0 {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// `[v = target]`.
    pub fn indicator(target: BitString) -> Self {
        Self::new(target.len(), move |v| if v == target { 1.0 } else { 0.0 })
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// `phi(x)` with the range check.
    pub fn eval(&self, x: BitString) -> Result<f64, OracleError> {
        let value = (self.f)(x);
        if !(-1.0..=1.0).contains(&value) {
            return Err(OracleError::RangeViolation { x, value });
        }
        Ok(value)
    }

    /// `E_P[phi]` as an exact dense sum (range-checked on the support of `P`).
    pub fn expectation(&self, p: &DistributionTable) -> Result<f64, OracleError> {
        if p.n() != self.bits {
            return Err(OracleError::ArityMismatch { query: self.bits, oracle: p.n() });
        }
        let mut acc = 0.0;
        for (x, m) in p.iter() {
            if m != 0.0 {
                acc += m * self.eval(x)?;
            }
        }
        Ok(acc)
    }
}

/// How a statistical-query oracle chooses its answer within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    /// The true expectation.
    Exact,
    /// Mean over `shots` fresh samples per query.
    Empirical { shots: usize, seed: u64 },
    /// True expectation shifted by exactly `+-tau`, sign derived from the
    /// seed and the query's values on the support.
    Adversarial { seed: u64 },
}

/// `ceil(2 ln(2/delta) / tau^2)` with `delta = 1e-6`: Hoeffding for a
/// `[-1, 1]`-valued mean.
pub fn default_shots(tau: f64) -> usize {
    (2.0 * (2.0 / EMPIRICAL_CONFIDENCE_DELTA).ln() / (tau * tau)).ceil() as usize
}

/// Deviation that `shots` samples guarantee with probability `1 - 1e-6`.
pub fn hoeffding_bound(shots: usize) -> f64 {
    (2.0 * (2.0 / EMPIRICAL_CONFIDENCE_DELTA).ln() / shots as f64).sqrt()
}

/// Uniform access to something that answers statistical queries.
pub trait StatAccess {
    /// Bit length of the strings queries are defined on.
    fn arity(&self) -> usize;
    fn tolerance(&self) -> f64;
    fn query(&mut self, q: &StatQuery) -> Result<f64, OracleError>;
    /// Queries consumed at the underlying oracle.
    fn queries_used(&self) -> u64;
}

/// `Stat_tau(P)`.
#[derive(Debug, Clone)]
pub struct StatOracle {
    target: DistributionTable,
    tau: f64,
    mode: OracleMode,
    query_count: u64,
    sampler: Option<Sampler>,
}

impl StatOracle {
    pub fn new(target: DistributionTable, tau: f64, mode: OracleMode) -> Result<Self, OracleError> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(OracleError::BadTolerance(tau));
        }
        let sampler = match mode {
            OracleMode::Empirical { seed, .. } => Some(Sampler::new(&target, seed)),
            _ => None,
        };
        Ok(Self { target, tau, mode, query_count: 0, sampler })
    }

    /// Empirical oracle with [`default_shots`] for `tau`.
    pub fn empirical(target: DistributionTable, tau: f64, seed: u64) -> Result<Self, OracleError> {
        Self::new(target, tau, OracleMode::Empirical { shots: default_shots(tau), seed })
    }

    pub fn target(&self) -> &DistributionTable {
        &self.target
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    fn adversarial_sign(seed: u64, q: &StatQuery, p: &DistributionTable) -> Result<f64, OracleError> {
        let mut h = Sha256::new();
        h.update(derive_seed(seed, "adversarial").to_le_bytes());
        for (x, m) in p.iter() {
            if m != 0.0 {
                h.update(x.index().to_le_bytes());
                h.update(q.eval(x)?.to_bits().to_le_bytes());
            }
        }
        Ok(if h.finalize()[0] & 1 == 0 { 1.0 } else { -1.0 })
    }
}

/// One query to `o`; counts against its budget.
pub fn stat_query(o: &mut StatOracle, q: &StatQuery) -> Result<f64, OracleError> {
    if q.bits != o.target.n() {
        return Err(OracleError::ArityMismatch { query: q.bits, oracle: o.target.n() });
    }
    let v = match o.mode {
        OracleMode::Exact => q.expectation(&o.target)?,
        OracleMode::Empirical { shots, .. } => {
            let bound = hoeffding_bound(shots);
            if shots == 0 || bound > o.tau {
                return Err(OracleError::ToleranceRisk { shots, bound, tau: o.tau });
            }
            let sampler = o.sampler.as_mut().expect("empirical oracle owns a sampler");
            let mut acc = 0.0;
            for _ in 0..shots {
                acc += q.eval(sampler.draw())?;
            }
            acc / shots as f64
        }
        OracleMode::Adversarial { seed } => {
            let mean = q.expectation(&o.target)?;
            mean + o.tau * StatOracle::adversarial_sign(seed, q, &o.target)?
        }
    };
    o.query_count += 1;
    Ok(v)
}

impl StatAccess for StatOracle {
    fn arity(&self) -> usize {
        self.target.n()
    }

    fn tolerance(&self) -> f64 {
        self.tau
    }

    fn query(&mut self, q: &StatQuery) -> Result<f64, OracleError> {
        stat_query(self, q)
    }

    fn queries_used(&self) -> u64 {
        self.query_count
    }
}

/// Splits a query on `(x, y, z)` into its parts supported on
/// `|x| + y = z = 0` and `|x| + y = z = 1`, both as queries on `(x, y)`.
/// The remainder lives where `z != |x| + y`, which no fermionized parity
/// distribution charges.
pub fn decompose_query(phi: &StatQuery) -> (StatQuery, StatQuery) {
    assert!(phi.bits >= 2, "query must include y and z");
    let bits = phi.bits - 1;
    let part = |z: u8| {
        let f = Arc::clone(&phi.f);
        StatQuery::new(bits, move |xy: BitString| {
            if xy.parity() == z {
                f(xy.push(z).expect("length below 64"))
            } else {
                0.0
            }
        })
    };
    (part(0), part(1))
}

/// Answers a query on `M_s` from two queries to an oracle on `D_s`.
/// With sub-oracle tolerance `tau / 2` the answer is within `tau`.
pub fn simulate_m_query<A: StatAccess + ?Sized>(phi: &StatQuery, o_d: &mut A) -> Result<f64, OracleError> {
    if phi.bits != o_d.arity() + 1 {
        return Err(OracleError::ArityMismatch { query: phi.bits, oracle: o_d.arity() + 1 });
    }
    let (even, odd) = decompose_query(phi);
    Ok(o_d.query(&even)? + o_d.query(&odd)?)
}

/// Statistical-query access to `M_s` simulated through an oracle on `D_s`.
#[derive(Debug)]
pub struct FermionizedAccess<'a, A: StatAccess + ?Sized> {
    inner: &'a mut A,
}

impl<'a, A: StatAccess + ?Sized> FermionizedAccess<'a, A> {
    pub fn new(inner: &'a mut A) -> Self {
        Self { inner }
    }
}

impl<A: StatAccess + ?Sized> StatAccess for FermionizedAccess<'_, A> {
    fn arity(&self) -> usize {
        self.inner.arity() + 1
    }

    fn tolerance(&self) -> f64 {
        2.0 * self.inner.tolerance()
    }

    fn query(&mut self, q: &StatQuery) -> Result<f64, OracleError> {
        simulate_m_query(q, self.inner)
    }

    fn queries_used(&self) -> u64 {
        self.inner.queries_used()
    }
}

/// `Sample(P)`.
#[derive(Debug, Clone)]
pub struct SampleOracle {
    sampler: Sampler,
    seed: u64,
    sample_count: u64,
}

impl SampleOracle {
    pub fn new(target: &DistributionTable, seed: u64) -> Self {
        Self { sampler: Sampler::new(target, seed), seed, sample_count: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn sample(&mut self) -> BitString {
        self.sample_count += 1;
        self.sampler.draw()
    }

    pub fn samples(&mut self, k: usize) -> Vec<BitString> {
        (0..k).map(|_| self.sample()).collect()
    }
}

impl crate::dist::Generator for SampleOracle {
    fn bits(&self) -> usize {
        self.sampler.n()
    }

    fn generate(&mut self) -> BitString {
        self.sample()
    }
}

/// `E_{D_s}[phi]` for every secret `s` of length `n`, in lexicographic order,
/// for a query on `(x, y)`.
pub fn parity_expectations(phi: &StatQuery, n: usize) -> Result<Vec<f64>, OracleError> {
    if phi.bits != n + 1 {
        return Err(OracleError::ArityMismatch { query: phi.bits, oracle: n + 1 });
    }
    let values: Vec<f64> = BitString::all(n + 1).map(|v| phi.eval(v)).collect::<Result<_, _>>()?;
    let w = (-(n as f64)).exp2();
    Ok(Secret::all(n)
        .map(|s| {
            BitString::all(n)
                .map(|x| values[((x.index() << 1) | u64::from(s.bits().dot(&x))) as usize])
                .sum::<f64>()
                * w
        })
        .collect())
}

/// `#{s : |E_{D_s}[phi] - E_U[phi]| >= tau}` with `U` uniform on `(x, y)`.
pub fn distinguishable_secrets(phi: &StatQuery, n: usize, tau: f64) -> Result<usize, OracleError> {
    let uniform = DistributionTable::uniform(n + 1).expect("n within range");
    let base = phi.expectation(&uniform)?;
    Ok(parity_expectations(phi, n)?.into_iter().filter(|e| (e - base).abs() >= tau).count())
}
