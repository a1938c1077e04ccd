use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mglab::dist::{
    even_parity_dist, fermionized_noisy_parity_dist, fermionized_parity_dist, noisy_parity_dist, parity_dist,
};
use mglab::embed::destination_from_transpositions;
use mglab::format::F64;
use mglab::learn::{lpn_pipeline, separation_demo, sq_parity_learner, LearnError, LearnReport, ReportRecord};
use mglab::oracle::{default_shots, FermionizedAccess, OracleMode, StatAccess, StatOracle, StatQuery};
use mglab::rng::{derive_seed, derived_rng};
use mglab::{embed_noisy_parity, BitString, tvd, MatchgateCircuit, NoiseRate, Secret};
use rayon::prelude::*;
use serde::Serialize;

use crate::{
    DistArgs, DistKind, EmbedArgs, LpnArgs, ModeArg, QueryArgs, QueryFamily, QueryTarget, SeedArg, SeparationArgs, SqArgs,
    VerifyArgs,
};

const MAX_CLI_N: usize = 14;

pub enum CliError {
    Usage(String),
    Domain(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Domain(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Domain(e) => write!(f, "{e:#}"),
        }
    }
}

impl<E: std::error::Error + Send + Sync + 'static> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Domain(e.into())
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_secret(text: &str) -> Result<Secret, CliError> {
    if text.is_empty() {
        return Err(usage("--secret must be a non-empty 0/1 string"));
    }
    text.parse::<Secret>().map_err(|e| usage(format!("invalid --secret {text:?}: {e}")))
}

fn parse_eta(eta: f64, max: f64) -> Result<NoiseRate, CliError> {
    if !(0.0..=max).contains(&eta) {
        return Err(usage(format!("--eta must lie in [0, {max}], got {eta}")));
    }
    Ok(NoiseRate::new(eta)?)
}

fn require_seed(s: &SeedArg) -> Result<u64, CliError> {
    s.seed.ok_or_else(|| usage("a master seed is required (--seed or MGLAB_SEED)"))
}

fn check_n(n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_CLI_N {
        return Err(usage(format!("--n must lie in 1..={MAX_CLI_N}, got {n}")));
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    emit(&serde_json::to_string_pretty(value)?, out)
}

#[derive(Serialize)]
struct EmbedSummary {
    secret: String,
    eta: F64,
    local: bool,
    wires: usize,
    depth: usize,
    gate_count: usize,
    circuit: Option<PathBuf>,
    plan: Option<PathBuf>,
}

pub fn embed(a: EmbedArgs) -> CmdResult {
    let s = parse_secret(&a.secret)?;
    let eta = parse_eta(a.eta, 1.0)?;
    let local = a.locality.is_local();
    let e = embed_noisy_parity(&s, eta, local)?;

    let plan_path = a.plan.clone().or_else(|| {
        a.out.as_ref().map(|o| {
            let mut p = o.clone().into_os_string();
            p.push(".plan.json");
            PathBuf::from(p)
        })
    });
    if let Some(p) = &plan_path {
        fs::write(p, format!("{}\n", e.plan.to_json()?))?;
    }
    let summary = EmbedSummary {
        secret: s.to_string(),
        eta: F64(eta.value()),
        local,
        wires: e.circuit.n,
        depth: e.circuit.depth(),
        gate_count: e.circuit.gate_count(),
        circuit: a.out.clone(),
        plan: plan_path,
    };
    match &a.out {
        Some(p) => {
            e.circuit.write_json(p)?;
            emit_json(&summary, None)?;
        }
        None => {
            emit(&e.circuit.to_json()?, None)?;
            eprintln!("{}", serde_json::to_string(&summary)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyConfig {
    circuit: PathBuf,
    plan: Option<PathBuf>,
    secret: String,
    eta: F64,
    tol: F64,
}

#[derive(Serialize)]
struct VerifyReport {
    config: VerifyConfig,
    relabelled: bool,
    tvd: F64,
    pass: bool,
}

/// Output relabelling recorded in a plan file, if the plan is non-local.
fn plan_destination(path: &Path, wires: usize) -> Result<Option<Vec<usize>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read plan {}: {e}", path.display())))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("malformed plan {}: {e}", path.display())))?;
    if v.get("local").and_then(|l| l.as_bool()).unwrap_or(true) {
        return Ok(None);
    }
    let ts: Vec<[usize; 2]> = serde_json::from_value(v.get("transpositions").cloned().unwrap_or_default())
        .map_err(|e| usage(format!("malformed plan transpositions: {e}")))?;
    if ts.iter().flatten().any(|&w| w >= wires) {
        return Err(usage("plan transpositions exceed the circuit width"));
    }
    Ok(Some(destination_from_transpositions(wires, &ts)))
}

pub fn verify(a: VerifyArgs) -> CmdResult {
    let s = parse_secret(&a.secret)?;
    let eta = parse_eta(a.eta, 1.0)?;
    if !(a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let text = fs::read_to_string(&a.circuit)
        .map_err(|e| usage(format!("cannot read circuit {}: {e}", a.circuit.display())))?;
    let circuit = MatchgateCircuit::from_json(&text)?;
    if circuit.n != s.n() + 2 {
        return Err(usage(format!("circuit has {} wires, secret needs {}", circuit.n, s.n() + 2)));
    }
    let destination = match &a.plan {
        Some(p) => plan_destination(p, circuit.n)?,
        None => None,
    };
    let born = mglab::born_distribution(&circuit)?;
    let born = match &destination {
        Some(d) => born.permute_bits(d),
        None => born,
    };
    let target = fermionized_noisy_parity_dist(&s, eta)?;
    let d = tvd(&born, &target)?;
    let pass = d < a.tol;
    let report = VerifyReport {
        config: VerifyConfig {
            circuit: a.circuit.clone(),
            plan: a.plan.clone(),
            secret: s.to_string(),
            eta: F64(eta.value()),
            tol: F64(a.tol),
        },
        relabelled: destination.is_some(),
        tvd: F64(d),
        pass,
    };
    emit_json(&report, a.out.as_deref())?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct SqConfig {
    n: usize,
    secret: String,
    tau: F64,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct SqReport {
    config: SqConfig,
    report: ReportRecord,
}

pub fn sq(a: SqArgs) -> CmdResult {
    check_n(a.n)?;
    if !(a.tau > 0.0 && a.tau < 0.5) {
        return Err(usage(format!("--tau must lie in (0, 0.5), got {}", a.tau)));
    }
    let seed = require_seed(&a.seed)?;
    let s = match &a.secret {
        Some(t) => parse_secret(t)?,
        None => Secret::random(a.n, &mut derived_rng(seed, &format!("sq/secret/{}", a.n)))?,
    };
    if s.n() != a.n {
        return Err(usage(format!("--secret has length {}, expected {}", s.n(), a.n)));
    }
    let inner_tau = a.tau / 2.0;
    let (mode, name, shots) = oracle_mode(a.mode, a.shots, inner_tau, Some(seed), &format!("sq/oracle/{}/{s}", a.n))?;
    let mut oracle = StatOracle::new(parity_dist(&s)?, inner_tau, mode)?;
    let outcome = {
        let mut access = FermionizedAccess::new(&mut oracle);
        sq_parity_learner(&mut access, a.n, a.tau)
    };
    let mut r = match outcome {
        Ok(r) => r,
        Err(LearnError::NotFound) => LearnReport {
            recovered: None,
            queries_used: Some(oracle.query_count()),
            samples_used: None,
            wallclock: Default::default(),
            success: false,
        },
        Err(e) => return Err(e.into()),
    };
    r.success = r.recovered == Some(s);
    let record = r.record("sq", a.n, 0.0, Some(a.tau), seed);
    let report = SqReport {
        config: SqConfig { n: a.n, secret: s.to_string(), tau: F64(a.tau), mode: name, shots, seed },
        report: record,
    };
    emit_json(&report, a.out.as_deref())?;
    Ok(if r.success { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Concrete oracle mode plus its report name and shot count. Stochastic
/// modes draw their seed from `master` under `label`.
fn oracle_mode(
    mode: ModeArg,
    shots: Option<usize>,
    tol: f64,
    master: Option<u64>,
    label: &str,
) -> Result<(OracleMode, &'static str, Option<usize>), CliError> {
    let seed = || master.map(|m| derive_seed(m, label)).ok_or_else(|| usage("a master seed is required for this mode (--seed or MGLAB_SEED)"));
    Ok(match mode {
        ModeArg::Exact => (OracleMode::Exact, "exact", None),
        ModeArg::Adversarial => (OracleMode::Adversarial { seed: seed()? }, "adversarial", None),
        ModeArg::Empirical => {
            let needed = default_shots(tol);
            let shots = shots.unwrap_or(needed);
            if shots < needed {
                return Err(usage(format!("--shots {shots} is too few for tolerance {tol}; need at least {needed}")));
            }
            (OracleMode::Empirical { shots, seed: seed()? }, "empirical", Some(shots))
        }
    })
}

#[derive(Serialize)]
struct QueryConfig {
    secret: String,
    family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<String>,
    target: &'static str,
    tau: F64,
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct QueryReport {
    config: QueryConfig,
    expectation: F64,
    answer: F64,
    deviation: F64,
    within_tolerance: bool,
    queries_used: u64,
}

pub fn query(a: QueryArgs) -> CmdResult {
    let s = parse_secret(&a.secret)?;
    if s.n() > MAX_CLI_N {
        return Err(usage(format!("--secret longer than {MAX_CLI_N} bits")));
    }
    if !(a.tau > 0.0 && a.tau < 1.0) {
        return Err(usage(format!("--tau must lie in (0, 1), got {}", a.tau)));
    }
    let n = s.n();
    let (width, target_name) = match a.target {
        QueryTarget::D => (n + 1, "d"),
        QueryTarget::M => (n + 2, "m"),
    };
    let parse_bits = |flag: &str, text: Option<&String>, len: usize| -> Result<BitString, CliError> {
        let text = text.ok_or_else(|| usage(format!("--{flag} is required for this family")))?;
        let v: BitString = text.parse().map_err(|e| usage(format!("invalid --{flag} {text:?}: {e}")))?;
        if v.len() != len {
            return Err(usage(format!("--{flag} must have {len} bits, got {}", v.len())));
        }
        Ok(v)
    };
    let (q, family, mask, point) = match a.family {
        QueryFamily::Correlator => {
            if a.b > 1 {
                return Err(usage("--b must be 0 or 1"));
            }
            let mask = parse_bits("a", a.a.as_ref(), n)?;
            (StatQuery::parity_correlator(mask, a.b, width), "correlator", Some(mask.to_string()), None)
        }
        QueryFamily::Indicator => {
            let p = parse_bits("point", a.point.as_ref(), width)?;
            (StatQuery::indicator(p), "indicator", None, Some(p.to_string()))
        }
    };
    // the oracle always sits on D; M is reached through two D queries at half tolerance
    let inner_tau = match a.target {
        QueryTarget::D => a.tau,
        QueryTarget::M => a.tau / 2.0,
    };
    let label = format!("query/{target_name}/{family}/{s}");
    let (mode, mode_name, shots) = oracle_mode(a.mode, a.shots, inner_tau, a.seed.seed, &label)?;
    let mut oracle = StatOracle::new(parity_dist(&s)?, inner_tau, mode)?;
    let (expectation, answer) = match a.target {
        QueryTarget::D => (q.expectation(&parity_dist(&s)?)?, oracle.query(&q)?),
        QueryTarget::M => {
            let exact = q.expectation(&fermionized_parity_dist(&s)?)?;
            (exact, FermionizedAccess::new(&mut oracle).query(&q)?)
        }
    };
    let deviation = (answer - expectation).abs();
    let within = deviation <= a.tau + 1e-12;
    let report = QueryReport {
        config: QueryConfig {
            secret: s.to_string(),
            family,
            a: mask,
            b: (a.family == QueryFamily::Correlator).then_some(a.b),
            point,
            target: target_name,
            tau: F64(a.tau),
            mode: mode_name,
            shots,
            seed: (a.mode != ModeArg::Exact).then_some(a.seed.seed).flatten(),
        },
        expectation: F64(expectation),
        answer: F64(answer),
        deviation: F64(deviation),
        within_tolerance: within,
        queries_used: oracle.query_count(),
    };
    emit_json(&report, a.out.as_deref())?;
    Ok(if within { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct LpnConfig {
    n: usize,
    secret: Option<String>,
    eta: F64,
    samples: usize,
    trials: usize,
    seed: u64,
}

#[derive(Serialize)]
struct LpnReport {
    config: LpnConfig,
    successes: usize,
    trials: Vec<ReportRecord>,
}

pub fn lpn(a: LpnArgs) -> CmdResult {
    check_n(a.n)?;
    let eta = parse_eta(a.eta, 0.5)?;
    let seed = require_seed(&a.seed)?;
    if a.samples == 0 || a.trials == 0 || a.jobs == 0 {
        return Err(usage("--samples, --trials and --jobs must be positive"));
    }
    let fixed = match &a.secret {
        Some(t) => {
            let s = parse_secret(t)?;
            if s.n() != a.n {
                return Err(usage(format!("--secret has length {}, expected {}", s.n(), a.n)));
            }
            Some(s)
        }
        None => None,
    };
    let run = |k: usize| -> Result<ReportRecord, LearnError> {
        let s = match fixed {
            Some(s) => s,
            None => Secret::random(a.n, &mut derived_rng(seed, &format!("lpn/secret/{}/{k}", a.n)))?,
        };
        let sub = derive_seed(seed, &format!("lpn/samples/{}/{}/{}/{k}", a.n, eta.value(), a.samples));
        let mut rec = lpn_pipeline(&s, eta, a.samples, sub)?.record("lpn", a.n, eta.value(), None, sub);
        rec.experiment = format!("lpn/{s}");
        Ok(rec)
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let records: Vec<ReportRecord> =
        pool.install(|| (0..a.trials).into_par_iter().map(run).collect::<Result<Vec<_>, _>>())?;
    let successes = records.iter().filter(|r| r.success).count();
    let report = LpnReport {
        config: LpnConfig {
            n: a.n,
            secret: fixed.map(|s| s.to_string()),
            eta: F64(eta.value()),
            samples: a.samples,
            trials: a.trials,
            seed,
        },
        successes,
        trials: records,
    };
    emit_json(&report, a.out.as_deref())?;
    Ok(if successes == a.trials { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn separation(a: SeparationArgs) -> CmdResult {
    check_n(a.n)?;
    if !(a.tau > 0.0 && a.tau < 0.5) {
        return Err(usage(format!("--tau must lie in (0, 0.5), got {}", a.tau)));
    }
    let seed = require_seed(&a.seed)?;
    let report = separation_demo(a.n, a.samples, a.trials, a.tau, seed)?;
    emit_json(&report, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

pub fn dist(a: DistArgs) -> CmdResult {
    let secret = || -> Result<Secret, CliError> {
        let t = a.secret.as_deref().ok_or_else(|| usage("--secret is required for this kind"))?;
        parse_secret(t)
    };
    let table = match a.kind {
        DistKind::Parity => parity_dist(&secret()?)?,
        DistKind::NoisyParity => noisy_parity_dist(&secret()?, parse_eta(a.eta, 1.0)?)?,
        DistKind::Fermionized => fermionized_parity_dist(&secret()?)?,
        DistKind::FermionizedNoisy => fermionized_noisy_parity_dist(&secret()?, parse_eta(a.eta, 1.0)?)?,
        DistKind::Even => {
            let k = a.k.ok_or_else(|| usage("--k is required for --kind even"))?;
            even_parity_dist(k).map_err(|e| usage(e.to_string()))?
        }
    };
    match &a.out {
        Some(p) => table.write_csv(fs::File::create(p)?)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}
