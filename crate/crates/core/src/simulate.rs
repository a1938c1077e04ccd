//! Dense statevector simulation and exact Born distributions.
//!
//! Amplitudes are indexed by the packed bitstring with wire 0 as the most
//! significant bit. This is the brute-force ground truth every other module
//! is checked against.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::bits::BitString;
use crate::format::fmt_f64;
use crate::gates::{validate_circuit, GateError, Mat4, MatchgateCircuit};
use crate::rng::{seeded_rng, LabRng};

/// Largest wire count the dense simulator accepts.
pub const MAX_SIM_WIRES: usize = 24;

/// Normalization tolerance for states and distribution tables.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{what} on {n} bits exceeds the desk-scale limit of {max}")]
    TooLarge { what: &'static str, n: usize, max: usize },
    #[error("dimension mismatch: {0} vs {1} bits")]
    DimensionMismatch(usize, usize),
    #[error("table length {len} is not 2^{n}")]
    BadLength { n: usize, len: usize },
    #[error("mass sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("negative or non-finite mass {value} at index {index}")]
    InvalidMass { index: usize, value: f64 },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(#[from] GateError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {msg}")]
    CsvRow { row: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Result<Self, SimError> {
        check_size("state vector", n)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Wraps amplitudes after checking the length and unit norm.
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        check_size("state vector", n)?;
        if amplitudes.len() != 1 << n {
            return Err(SimError::BadLength { n, len: amplitudes.len() });
        }
        let s = Self { n, amplitudes };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, x: BitString) -> Complex64 {
        self.amplitudes[x.index() as usize]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    /// Applies a 4x4 gate to wires `(lower, lower + 1)`.
    pub fn apply_gate(&mut self, u: &Mat4, lower: usize) {
        debug_assert!(lower + 1 < self.n);
        let hi = 1usize << (self.n - 1 - lower);
        let lo = 1usize << (self.n - 2 - lower);
        let dim = self.amplitudes.len();
        for base in 0..dim {
            if base & (hi | lo) != 0 {
                continue;
            }
            let idx = [base, base | lo, base | hi, base | hi | lo];
            let v = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
            }
        }
    }

    /// Applies every layer in order; gates inside a layer in ascending wire order.
    pub fn apply(&mut self, c: &MatchgateCircuit) {
        for layer in &c.layers {
            let mut order: Vec<_> = layer.iter().collect();
            order.sort_by_key(|g| g.lower());
            for g in order {
                self.apply_gate(&g.matrix(), g.lower());
            }
        }
    }

    pub fn born(&self) -> DistributionTable {
        DistributionTable {
            n: self.n,
            mass: self.amplitudes.iter().map(Complex64::norm_sqr).collect(),
        }
    }
}

fn check_size(what: &'static str, n: usize) -> Result<(), SimError> {
    if n > MAX_SIM_WIRES {
        return Err(SimError::TooLarge { what, n, max: MAX_SIM_WIRES });
    }
    Ok(())
}

/// `U|0^n>` for a validated circuit.
pub fn apply_circuit(c: &MatchgateCircuit) -> Result<StateVector, SimError> {
    check_size("circuit", c.n)?;
    validate_circuit(c)?;
    let mut psi = StateVector::zero_state(c.n)?;
    psi.apply(c);
    Ok(psi)
}

/// `P(x) = |<x|U|0^n>|^2`.
pub fn born_distribution(c: &MatchgateCircuit) -> Result<DistributionTable, SimError> {
    Ok(apply_circuit(c)?.born())
}

/// Exact probability mass function over `n`-bit strings.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    n: usize,
    mass: Vec<f64>,
}

impl DistributionTable {
    pub fn new(n: usize, mass: Vec<f64>) -> Result<Self, SimError> {
        check_size("distribution", n)?;
        if mass.len() != 1 << n {
            return Err(SimError::BadLength { n, len: mass.len() });
        }
        if let Some((index, &value)) = mass.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
            return Err(SimError::InvalidMass { index, value });
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(total));
        }
        Ok(Self { n, mass })
    }

    /// Builds a table from a mass function, checking the invariants.
    pub fn from_fn(n: usize, f: impl Fn(BitString) -> f64) -> Result<Self, SimError> {
        check_size("distribution", n)?;
        Self::new(n, BitString::all(n).map(f).collect())
    }

    pub fn point_mass(x: BitString) -> Result<Self, SimError> {
        let n = x.len();
        Self::from_fn(n, |y| if y == x { 1.0 } else { 0.0 })
    }

    pub fn uniform(n: usize) -> Result<Self, SimError> {
        let p = (-(n as f64)).exp2();
        Self::from_fn(n, |_| p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, x: BitString) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        self.mass[x.index() as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BitString, f64)> + '_ {
        let n = self.n;
        self.mass
            .iter()
            .enumerate()
            .map(move |(i, &p)| (BitString::from_index(n, i as u64), p))
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `E_P[f]` as a dense sum.
    pub fn expectation(&self, f: impl Fn(BitString) -> f64) -> f64 {
        self.iter().filter(|(_, p)| *p != 0.0).map(|(x, p)| p * f(x)).sum()
    }

    /// Distribution of `x` with output positions relabelled: the bit at
    /// position `i` of the source moves to position `perm[i]`.
    pub fn permute_bits(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut mass = vec![0.0; self.mass.len()];
        for (x, p) in self.iter() {
            mass[permute_string(x, perm).index() as usize] += p;
        }
        Self { n: self.n, mass }
    }

    /// Marginal on the leading `k` positions.
    pub fn marginal_prefix(&self, k: usize) -> Self {
        assert!(k <= self.n);
        let mut mass = vec![0.0; 1 << k];
        let shift = self.n - k;
        for (i, &p) in self.mass.iter().enumerate() {
            mass[i >> shift] += p;
        }
        Self { n: k, mass }
    }

    /// `(1 - w) * self + w * other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self, SimError> {
        if self.n != other.n {
            return Err(SimError::DimensionMismatch(self.n, other.n));
        }
        Self::new(
            self.n,
            self.mass.iter().zip(&other.mass).map(|(a, b)| (1.0 - w) * a + w * b).collect(),
        )
    }

    pub fn odd_parity_mass(&self) -> f64 {
        self.iter().filter(|(x, _)| x.parity() == 1).map(|(_, p)| p).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["bitstring", "probability"])?;
        for (x, p) in self.iter() {
            wr.write_record([x.to_string(), fmt_f64(p)])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, SimError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut entries: Vec<(BitString, f64)> = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |msg: String| SimError::CsvRow { row, msg };
            let x: BitString = rec.get(0).unwrap_or("").parse().map_err(|e| bad(format!("{e}")))?;
            let p: f64 = rec.get(1).unwrap_or("").parse().map_err(|e| bad(format!("{e}")))?;
            entries.push((x, p));
        }
        let n = entries.first().map_or(0, |(x, _)| x.len());
        check_size("distribution", n)?;
        let mut mass = vec![0.0; 1 << n];
        for (row, (x, p)) in entries.into_iter().enumerate() {
            if x.len() != n {
                return Err(SimError::CsvRow { row, msg: format!("expected {n} bits, got {}", x.len()) });
            }
            mass[x.index() as usize] = p;
        }
        Self::new(n, mass)
    }
}

/// Moves the bit at position `i` of `x` to position `perm[i]`.
pub fn permute_string(x: BitString, perm: &[usize]) -> BitString {
    let mut out = BitString::zeros(x.len());
    for (i, &dst) in perm.iter().enumerate() {
        if x.get(i) == 1 {
            out = out.with_bit(dst, 1);
        }
    }
    out
}

/// `1/2 * sum_x |p(x) - q(x)|`.
pub fn tvd(p: &DistributionTable, q: &DistributionTable) -> Result<f64, SimError> {
    if p.n != q.n {
        return Err(SimError::DimensionMismatch(p.n, q.n));
    }
    Ok(0.5 * p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Inverse-CDF sampler over a dense table. Owns its RNG.
#[derive(Debug, Clone)]
pub struct Sampler {
    n: usize,
    cdf: Vec<f64>,
    rng: LabRng,
}

impl Sampler {
    pub fn new(d: &DistributionTable, seed: u64) -> Self {
        let mut acc = 0.0;
        let cdf = d
            .mass
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { n: d.n, cdf, rng: seeded_rng(seed) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn draw(&mut self) -> BitString {
        let total = *self.cdf.last().expect("non-empty table");
        let u = self.rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        BitString::from_index(self.n, idx as u64)
    }
}

impl Iterator for Sampler {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        Some(self.draw())
    }
}

/// `shots` i.i.d. samples, deterministic in `rng_seed`.
pub fn sample(d: &DistributionTable, rng_seed: u64, shots: usize) -> Vec<BitString> {
    Sampler::new(d, rng_seed).take(shots).collect()
}

/// Empirical distribution of a sample list.
pub fn empirical(n: usize, samples: &[BitString]) -> Result<DistributionTable, SimError> {
    check_size("distribution", n)?;
    let mut mass = vec![0.0; 1 << n];
    for x in samples {
        if x.len() != n {
            return Err(SimError::DimensionMismatch(n, x.len()));
        }
        mass[x.index() as usize] += 1.0;
    }
    let total = samples.len() as f64;
    mass.iter_mut().for_each(|m| *m /= total);
    DistributionTable::new(n, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{Gate2Q, GateKind};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn empty_circuit_is_zero_state() {
        let psi = apply_circuit(&MatchgateCircuit::new(2)).unwrap();
        assert_eq!(psi.amplitude(bs("00")), Complex64::new(1.0, 0.0));
        assert_eq!(psi.norm_sqr(), 1.0);
        let d = born_distribution(&MatchgateCircuit::new(3)).unwrap();
        assert_eq!(d, DistributionTable::point_mass(BitString::zeros(3)).unwrap());
    }

    #[test]
    fn single_ux_half_flip() {
        let c = MatchgateCircuit::with_layers(2, vec![vec![Gate2Q::ux(PI / 2.0, 0)]]);
        let d = born_distribution(&c).unwrap();
        assert!((d.prob(bs("00")) - 0.5).abs() < 1e-15);
        assert!((d.prob(bs("11")) - 0.5).abs() < 1e-15);
        assert_eq!(d.prob(bs("01")), 0.0);
    }

    #[test]
    fn fswap_on_symmetric_odd_state() {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let mut psi = StateVector::from_amplitudes(2, vec![z, h, h, z]).unwrap();
        psi.apply_gate(&crate::gates::fswap_gate(), 0);
        assert_eq!(psi.amplitudes(), &[z, h, h, z]);

        // asymmetric input: the two odd entries are exchanged
        let a = Complex64::new(0.6, 0.0);
        let b = Complex64::new(0.0, 0.8);
        let mut psi = StateVector::from_amplitudes(2, vec![z, a, b, z]).unwrap();
        psi.apply_gate(&crate::gates::fswap_gate(), 0);
        assert_eq!(psi.amplitudes(), &[z, b, a, z]);
    }

    #[test]
    fn gate_acts_on_requested_wires() {
        // X(x)X on wires (1,2) of three: |000> -> i|011> at t = pi
        let c = MatchgateCircuit::with_layers(3, vec![vec![Gate2Q::ux(PI, 1)]]);
        let psi = apply_circuit(&c).unwrap();
        assert!((psi.amplitude(bs("011")) - Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn too_large_and_invalid() {
        assert!(matches!(
            apply_circuit(&MatchgateCircuit::new(25)),
            Err(SimError::TooLarge { n: 25, .. })
        ));
        let bad = MatchgateCircuit::with_layers(3, vec![vec![Gate2Q::new(GateKind::FSwap, 0, 2)]]);
        assert!(matches!(apply_circuit(&bad), Err(SimError::InvalidCircuit(_))));
    }

    #[test]
    fn tvd_examples() {
        let p = DistributionTable::point_mass(bs("00")).unwrap();
        let q = DistributionTable::point_mass(bs("11")).unwrap();
        assert_eq!(tvd(&p, &p).unwrap(), 0.0);
        assert_eq!(tvd(&p, &q).unwrap(), 1.0);
        let r = DistributionTable::uniform(3).unwrap();
        assert!(matches!(tvd(&p, &r), Err(SimError::DimensionMismatch(2, 3))));
    }

    #[test]
    fn table_invariants_enforced() {
        assert!(matches!(DistributionTable::new(1, vec![0.5, 0.4]), Err(SimError::NotNormalized(_))));
        assert!(matches!(
            DistributionTable::new(1, vec![1.5, -0.5]),
            Err(SimError::InvalidMass { index: 1, .. })
        ));
        assert!(matches!(DistributionTable::new(2, vec![1.0]), Err(SimError::BadLength { .. })));
    }

    #[test]
    fn sampling_examples() {
        let point = DistributionTable::point_mass(bs("010")).unwrap();
        assert!(sample(&point, 5, 1000).iter().all(|x| *x == bs("010")));

        let half = DistributionTable::new(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let xs = sample(&half, 11, 100_000);
        let f00 = xs.iter().filter(|x| **x == bs("00")).count() as f64 / 1e5;
        assert!((f00 - 0.5).abs() < 0.01, "{f00}");
        assert!(xs.iter().all(|x| *x == bs("00") || *x == bs("11")));
        assert_eq!(xs[..100], sample(&half, 11, 100)[..]);
    }

    #[test]
    fn permute_and_marginal() {
        let d = DistributionTable::point_mass(bs("110")).unwrap();
        // position 0 -> 2, 1 -> 0, 2 -> 1
        let p = d.permute_bits(&[2, 0, 1]);
        assert_eq!(p.prob(bs("101")), 1.0);
        assert_eq!(d.marginal_prefix(2).prob(bs("11")), 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let d = DistributionTable::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("bitstring,probability\n00,1.0000000000000001e-1\n"));
        assert_eq!(DistributionTable::read_csv(&buf[..]).unwrap(), d);
    }
}
