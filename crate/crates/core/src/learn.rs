//! Learners for the parity family and the extraction steps that turn a
//! learned distribution back into a parity.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bits::BitString;
use crate::dist::{
    gen_reduction_pair, split_xy, split_xyz, DistError, Evaluator, Generator, NoiseRate, ReductionDirection, Secret,
};
use crate::embed::{embed_noisy_parity, EmbedError};
use crate::format::ser_opt_f64;
use crate::oracle::{OracleError, SampleOracle, StatAccess, StatQuery};
use crate::rng::derived_rng;
use crate::simulate::{DistributionTable, SimError};

/// Largest secret length for the brute-force learners.
pub const MAX_BRUTE_FORCE_N: usize = 16;
/// Largest secret length for distribution-level secret identification.
pub const MAX_IDENTIFY_N: usize = 12;
/// Samples drawn by the Monte-Carlo PAC error estimate.
pub const PAC_MC_SAMPLES: usize = 200_000;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("samples are inconsistent with every noiseless parity")]
    Inconsistent,
    #[error("no candidate passed the acceptance threshold")]
    NotFound,
    #[error("no secret within 1/4 of the distribution (closest at {min_tvd})")]
    PromiseViolated { min_tvd: f64 },
    #[error("n = {n} exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("parameter {name} = {value} out of range")]
    BadParameter { name: &'static str, value: f64 },
    #[error("distribution on {0} bits is too short to carry (x, y, z)")]
    BadShape(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Accuracy and confidence of a PAC learner, both strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacParams {
    epsilon: f64,
    delta: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, LearnError> {
        for (name, value) in [("epsilon", epsilon), ("delta", delta)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(LearnError::BadParameter { name, value });
            }
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub recovered: Option<Secret>,
    pub queries_used: Option<u64>,
    pub samples_used: Option<u64>,
    pub wallclock: Duration,
    pub success: bool,
}

impl LearnReport {
    /// Serializable summary. Wallclock time is left out so that reports are
    /// reproducible byte for byte.
    pub fn record(&self, experiment: &str, n: usize, eta: f64, tau: Option<f64>, seed: u64) -> ReportRecord {
        ReportRecord {
            experiment: experiment.to_string(),
            n,
            eta,
            tau,
            recovered: self.recovered.map(|s| s.to_string()),
            queries_used: self.queries_used,
            samples_used: self.samples_used,
            success: self.success,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub experiment: String,
    pub n: usize,
    #[serde(serialize_with = "crate::format::ser_f64")]
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f64")]
    pub tau: Option<f64>,
    pub recovered: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries_used: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_used: Option<u64>,
    pub success: bool,
    pub seed: u64,
}

/// Incremental row reduction of `x . s = y` over GF(2).
#[derive(Debug, Clone)]
pub struct Gf2System {
    n: usize,
    /// Row with leading bit `k` (bit `k` of the packed value), plus its label.
    rows: Vec<Option<(u64, u8)>>,
    rank: usize,
}

impl Gf2System {
    pub fn new(n: usize) -> Self {
        assert!(n <= 63);
        Self { n, rows: vec![None; n], rank: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Adds one equation. Returns whether the rank grew.
    pub fn insert(&mut self, x: BitString, y: u8) -> Result<bool, LearnError> {
        debug_assert_eq!(x.len(), self.n);
        let (mut row, mut label) = (x.index(), y & 1);
        for k in (0..self.n).rev() {
            if row >> k & 1 == 0 {
                continue;
            }
            match self.rows[k] {
                Some((r, l)) => {
                    row ^= r;
                    label ^= l;
                }
                None => {
                    self.rows[k] = Some((row, label));
                    self.rank += 1;
                    return Ok(true);
                }
            }
        }
        if label != 0 {
            return Err(LearnError::Inconsistent);
        }
        Ok(false)
    }

    /// The unique solution once the system has full rank.
    pub fn solve(&self) -> Option<BitString> {
        if self.rank < self.n {
            return None;
        }
        let mut s = 0u64;
        for k in 0..self.n {
            let (row, label) = self.rows[k].expect("full rank");
            let rest = (row & !(1 << k) & s).count_ones() as u8 & 1;
            s |= u64::from(label ^ rest) << k;
        }
        Some(BitString::new(self.n, s).expect("fits in n bits"))
    }
}

/// Solves `x . s = y` by Gaussian elimination. `Ok(None)` when the samples
/// do not pin down `s`.
pub fn gauss_learner(n: usize, samples: &[(BitString, u8)]) -> Result<Option<Secret>, LearnError> {
    if n > 63 {
        return Err(LearnError::TooLarge { n, max: 63 });
    }
    let mut sys = Gf2System::new(n);
    for &(x, y) in samples {
        if x.len() != n {
            return Err(DistError::LengthMismatch { expected: n, got: x.len() }.into());
        }
        sys.insert(x, y)?;
    }
    Ok(sys.solve().map(Secret::new).transpose()?)
}

/// Maximum-agreement parity over all `2^n` candidates; ties go to the
/// lexicographically first.
pub fn lpn_ml_learner(n: usize, samples: &[(BitString, u8)], eta: NoiseRate) -> Result<Secret, LearnError> {
    if n == 0 || n > MAX_BRUTE_FORCE_N {
        return Err(LearnError::TooLarge { n, max: MAX_BRUTE_FORCE_N });
    }
    if eta.value() > 0.5 {
        return Err(LearnError::BadParameter { name: "eta", value: eta.value() });
    }
    if let Some((x, _)) = samples.iter().find(|(x, _)| x.len() != n) {
        return Err(DistError::LengthMismatch { expected: n, got: x.len() }.into());
    }
    let mut best = (0u64, 0usize);
    for t in 0..(1u64 << n) {
        let agree = samples
            .iter()
            .filter(|(x, y)| ((x.index() & t).count_ones() as u8 & 1) == *y)
            .count();
        if agree > best.1 || t == 0 {
            best = (t, agree);
        }
    }
    Ok(Secret::new(BitString::new(n, best.0).expect("fits"))?)
}

/// `(-1)^{t.x + y}` on the `(x, y)` prefix of a string of length `arity`.
pub fn parity_query(t: BitString, arity: usize) -> StatQuery {
    StatQuery::parity_correlator(t, 1, arity)
}

/// Tries every candidate `t` in lexicographic order with the correlator
/// `(-1)^{t.x + y}`, whose mean is 1 for `t = s` and 0 otherwise; the first
/// answer above 1/2 wins. Works on any oracle whose strings start with
/// `(x, y)`, including the simulated fermionized access.
pub fn sq_parity_learner<A: StatAccess + ?Sized>(o: &mut A, n: usize, tau: f64) -> Result<LearnReport, LearnError> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(LearnError::BadParameter { name: "tau", value: tau });
    }
    if o.tolerance() > tau + 1e-15 {
        return Err(LearnError::BadParameter { name: "oracle tolerance", value: o.tolerance() });
    }
    if n == 0 || n >= 63 || o.arity() <= n {
        return Err(LearnError::BadShape(o.arity()));
    }
    let start = Instant::now();
    let before = o.queries_used();
    let mut recovered = None;
    for t in BitString::all(n) {
        if o.query(&parity_query(t, o.arity()))? > 0.5 {
            recovered = Some(Secret::new(t)?);
            break;
        }
    }
    let report = LearnReport {
        recovered,
        queries_used: Some(o.queries_used() - before),
        samples_used: None,
        wallclock: start.elapsed(),
        success: recovered.is_some(),
    };
    if recovered.is_none() {
        return Err(LearnError::NotFound);
    }
    Ok(report)
}

/// `tvd(M, M_t)` for every candidate `t`, using that `M_t` puts `2^{-n}` on
/// each `(x, chi_t(x), chi_t(x) + |x|)` and nothing elsewhere.
pub fn fermionized_distances(m: &DistributionTable) -> Result<Vec<f64>, LearnError> {
    if m.n() < 3 {
        return Err(LearnError::BadShape(m.n()));
    }
    let n = m.n() - 2;
    if n > MAX_IDENTIFY_N {
        return Err(LearnError::TooLarge { n, max: MAX_IDENTIFY_N });
    }
    let w = (-(n as f64)).exp2();
    let total = m.total();
    let out = BitString::all(n)
        .map(|t| {
            let (on_mass, on_dev) = BitString::all(n).fold((0.0, 0.0), |(a, b), x| {
                let y = t.dot(&x);
                let idx = (x.index() << 2) | (u64::from(y) << 1) | u64::from(y ^ x.parity());
                let p = m.mass()[idx as usize];
                (a + p, b + (p - w).abs())
            });
            0.5 * ((total - on_mass).max(0.0) + on_dev)
        })
        .collect();
    Ok(out)
}

/// The secret whose `M_s` is closest to `m`, provided it is within 1/4.
pub fn identify_secret_from_distribution(m: &DistributionTable) -> Result<(Secret, f64), LearnError> {
    let dists = fermionized_distances(m)?;
    let n = m.n() - 2;
    let (best, &min_tvd) = dists
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("at least one candidate");
    if min_tvd >= 0.25 {
        return Err(LearnError::PromiseViolated { min_tvd });
    }
    Ok((Secret::new(BitString::new(n, best as u64).expect("fits"))?, min_tvd))
}

type HypothesisFn = dyn Fn(BitString) -> u8 + Send + Sync;

/// A boolean hypothesis on `n`-bit inputs.
#[derive(Clone)]
pub struct Hypothesis {
    n: usize,
    f: Arc<HypothesisFn>,
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypothesis").field("n", &self.n).finish_non_exhaustive()
    }
}

impl Hypothesis {
    pub fn new(n: usize, f: impl Fn(BitString) -> u8 + Send + Sync + 'static) -> Self {
        Self { n, f: Arc::new(f) }
    }

    pub fn parity(s: Secret) -> Self {
        Self::new(s.n(), move |x| s.bits().dot(&x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn predict(&self, x: BitString) -> u8 {
        (self.f)(x) & 1
    }
}

/// Reads the label off an evaluator for `M ~ M_s^eta`: predicts 0 when
/// `e(x, 0, |x|) >= e(x, 1, |x| + 1)`, else 1.
pub fn evaluator_to_pac(e: &Evaluator) -> Result<Hypothesis, LearnError> {
    if e.bits() < 3 {
        return Err(LearnError::BadShape(e.bits()));
    }
    let n = e.bits() - 2;
    let e = e.clone();
    Ok(Hypothesis::new(n, move |x| {
        let p = x.parity();
        let at = |y: u8| {
            let v = x.push(y).and_then(|v| v.push(y ^ p)).expect("length below 64");
            e.eval(v).expect("length matches")
        };
        u8::from(at(0) < at(1))
    }))
}

/// Disagreement rate of a hypothesis with `chi_s` under the uniform input
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacErrorEstimate {
    pub error: f64,
    /// 95% Wilson interval; `None` when `error` is exact.
    pub interval: Option<(f64, f64)>,
}

impl PacErrorEstimate {
    pub fn is_exact(&self) -> bool {
        self.interval.is_none()
    }
}

/// Exact enumeration for `n <= 16`, otherwise a seeded Monte-Carlo estimate
/// over [`PAC_MC_SAMPLES`] inputs.
pub fn pac_error(h: &Hypothesis, s: &Secret) -> Result<PacErrorEstimate, LearnError> {
    if h.n != s.n() {
        return Err(DistError::LengthMismatch { expected: s.n(), got: h.n }.into());
    }
    let n = s.n();
    let wrong = |x: BitString| h.predict(x) != s.bits().dot(&x);
    if n <= MAX_BRUTE_FORCE_N {
        let errors = BitString::all(n).filter(|&x| wrong(x)).count();
        return Ok(PacErrorEstimate { error: errors as f64 / (1u64 << n) as f64, interval: None });
    }
    let mut rng = derived_rng(s.bits().index(), "pac-error");
    let trials = PAC_MC_SAMPLES;
    let errors = (0..trials)
        .filter(|_| {
            let v = if n == 64 { rng.random::<u64>() } else { rng.random_range(0..(1u64 << n)) };
            wrong(BitString::new(n, v).expect("fits"))
        })
        .count();
    let p = errors as f64 / trials as f64;
    Ok(PacErrorEstimate { error: p, interval: Some(wilson_interval(errors, trials, 1.959_963_984_540_054)) })
}

/// Wilson score interval for `k` successes out of `trials`.
pub fn wilson_interval(k: usize, trials: usize, z: f64) -> (f64, f64) {
    let nf = trials as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * nf)) / (1.0 + z2 / nf);
    let half = z / (1.0 + z2 / nf) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Sample-based pipeline: the embedded noisy circuit is sampled, the `z`
/// register is dropped to obtain noisy parity examples, and the secret is
/// learned. With `eta = 0` elimination stops as soon as the rank is full.
pub fn lpn_pipeline(s: &Secret, eta: NoiseRate, samples: usize, seed: u64) -> Result<LearnReport, LearnError> {
    let n = s.n();
    let start = Instant::now();
    let embedded = embed_noisy_parity(s, eta, true)?;
    let born = embedded.output_distribution()?;
    let oracle = SampleOracle::new(&born, seed);
    let mut reduced = gen_reduction_pair(oracle, ReductionDirection::MToD);
    debug_assert_eq!(reduced.bits(), n + 1);

    let (recovered, used) = if eta.value() == 0.0 {
        let mut sys = Gf2System::new(n);
        let mut used = 0u64;
        let mut consistent = true;
        while sys.rank() < n && (used as usize) < samples {
            let (x, y) = split_xy(reduced.generate());
            used += 1;
            if sys.insert(x, y).is_err() {
                consistent = false;
                break;
            }
        }
        let rec = if consistent { sys.solve().map(Secret::new).transpose()? } else { None };
        (rec, used)
    } else {
        let examples: Vec<_> = (0..samples).map(|_| split_xy(reduced.generate())).collect();
        (Some(lpn_ml_learner(n, &examples, eta)?), samples as u64)
    };
    Ok(LearnReport {
        recovered,
        queries_used: None,
        samples_used: Some(used),
        wallclock: start.elapsed(),
        success: recovered == Some(*s),
    })
}

/// Evaluator for `M_s^eta` built from a recovered secret.
pub fn evaluator_from_secret(s: &Secret, eta: NoiseRate) -> Evaluator {
    let s = *s;
    let w = (-(s.n() as f64)).exp2();
    Evaluator::new(s.n() + 2, move |v| {
        let (x, y, z) = split_xyz(v);
        let yy = s.bits().dot(&x);
        let zz = yy ^ x.parity();
        if (y, z) == (yy, zz) {
            (1.0 - eta.value()) * w
        } else if (y, z) == (yy ^ 1, zz ^ 1) {
            eta.value() * w
        } else {
            0.0
        }
    })
}

/// One learner's line in a [`SeparationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationRow {
    pub learner: String,
    pub access: String,
    pub trials: usize,
    pub successes: usize,
    /// Mean samples (or queries) consumed per trial.
    #[serde(serialize_with = "crate::format::ser_f64")]
    pub mean_cost: f64,
    pub max_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub n: usize,
    pub sample_budget: usize,
    #[serde(serialize_with = "crate::format::ser_f64")]
    pub tau: f64,
    pub seed: u64,
    pub rows: Vec<SeparationRow>,
}

/// Noiseless parities from samples (elimination, at most `sample_budget`
/// examples) against the same task from statistical queries (exhaustive
/// correlator search under an adversarial oracle), over `trials` random
/// secrets each.
pub fn separation_demo(
    n: usize,
    sample_budget: usize,
    trials: usize,
    tau: f64,
    seed: u64,
) -> Result<SeparationReport, LearnError> {
    use crate::dist::parity_dist;
    use crate::oracle::{OracleMode, StatOracle};
    use crate::rng::derive_seed;
    use crate::simulate::Sampler;

    if n == 0 || n > MAX_BRUTE_FORCE_N {
        return Err(LearnError::TooLarge { n, max: MAX_BRUTE_FORCE_N });
    }
    let mut gauss = SeparationRow {
        learner: "gauss".into(),
        access: "samples".into(),
        trials,
        successes: 0,
        mean_cost: 0.0,
        max_cost: 0,
    };
    let mut sq = SeparationRow { learner: "sq-correlator".into(), access: "statistical queries".into(), ..gauss.clone() };
    for k in 0..trials {
        let mut rng = derived_rng(seed, &format!("separation/secret/{k}"));
        let s = Secret::random(n, &mut rng)?;
        let d = parity_dist(&s)?;

        let mut sampler = Sampler::new(&d, derive_seed(seed, &format!("separation/samples/{k}")));
        let mut sys = Gf2System::new(n);
        let mut used = 0u64;
        while sys.rank() < n && (used as usize) < sample_budget {
            let (x, y) = split_xy(sampler.draw());
            sys.insert(x, y)?;
            used += 1;
        }
        if sys.solve() == Some(s.bits()) {
            gauss.successes += 1;
        }
        gauss.mean_cost += used as f64;
        gauss.max_cost = gauss.max_cost.max(used);

        let mode = OracleMode::Adversarial { seed: derive_seed(seed, &format!("separation/oracle/{k}")) };
        let mut o = StatOracle::new(d, tau, mode)?;
        let r = sq_parity_learner(&mut o, n, tau)?;
        if r.recovered == Some(s) {
            sq.successes += 1;
        }
        let q = r.queries_used.unwrap_or(0);
        sq.mean_cost += q as f64;
        sq.max_cost = sq.max_cost.max(q);
    }
    if trials > 0 {
        gauss.mean_cost /= trials as f64;
        sq.mean_cost /= trials as f64;
    }
    Ok(SeparationReport { n, sample_budget, tau, seed, rows: vec![gauss, sq] })
}
