//! The elimination pipeline: from all (q, n) down to explicit lists of
//! candidates that need direct verification, with an audit trail.
//!
//! For each ω = j below the primorial tail, a worst-case sieve threshold
//! is compared with a lower bound on q (plain primorial, then the hybrid
//! bound, then the divisor tree for n = 5). The j that survive define
//! windows `q ≡ 1 (mod M), q < cap`. Every prime power inside some window
//! is factored once; a q with ω(q^n − 1) = j inside window j gets a record
//! decided by the exact criteria, anything else is counted against the
//! bound that excludes it.

mod config;
mod cubic;
mod emit;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{
    basic_criterion, best_cg, best_modified_sieve, best_prime_sieve, best_sieve_threshold,
    cg_cubic_criterion, first_j_config, modified_sieve_criterion, prime_sieve_criterion,
    primorial_min_j, robin_reduction, sieve_threshold, split_from_primes, CriteriaError,
    CriterionOutcome, RobinReduction,
};
use crate::hybrid::{divisor_tree, hybrid_lower_bound, plain_bound, HybridConfig, ThresholdFn};
use crate::ntheory::{factor_pow_minus_one, sieve_primes, Factorization, NtError};

pub use config::{ConfigError, SurveyConfig};
pub use cubic::{survey_cubic, CubicFinal, CubicHighJ, CubicSummary, CubicWindow, EvenCase};
pub use emit::{emit_report, report_hash, report_json, ReportFormat};

/// Pipeline stage that decided a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Robin,
    Primorial,
    Basic,
    PrimeSieve,
    Hybrid,
    DivisorTree,
    ModifiedSieve,
    NeedsVerification,
    Verified,
    Exception,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Robin => "robin",
            Stage::Primorial => "primorial",
            Stage::Basic => "basic",
            Stage::PrimeSieve => "prime_sieve",
            Stage::Hybrid => "hybrid",
            Stage::DivisorTree => "divisor_tree",
            Stage::ModifiedSieve => "modified_sieve",
            Stage::NeedsVerification => "needs_verification",
            Stage::Verified => "verified",
            Stage::Exception => "exception",
        }
    }

    /// Stages that remove a candidate.
    pub fn eliminates(&self) -> bool {
        !matches!(
            self,
            Stage::NeedsVerification | Stage::Verified | Stage::Exception
        )
    }
}

/// Why a record sits at its stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// A criterion evaluated on the exact factorization.
    Criterion(CriterionOutcome),
    /// A sieve criterion on the exact factorization, in replayable form:
    /// the split is `split_from_primes(primes of q^n − 1, s, t)`.
    Sieve {
        criterion: String,
        s: usize,
        t: usize,
        omega: usize,
        /// lhs / rhs of the unsquared inequality.
        margin: f64,
    },
    /// A fact established by enumeration.
    Enumeration {
        fact: String,
        modulus: u64,
        index: u64,
        omega: Option<usize>,
    },
    /// The candidate violates a lower bound that every q with this ω obeys.
    Bound {
        fact: String,
        omega: usize,
        lower_bound: String,
    },
    /// A forced prime of the divisor tree at this ω does not divide q − 1.
    DivisorTree {
        omega: usize,
        missing_prime: u64,
        forced: Vec<u64>,
    },
    /// No criterion applied.
    Unresolved { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub q: u64,
    pub n: u32,
    pub omega_exact: Option<usize>,
    pub stage: Stage,
    pub evidence: Evidence,
}

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error(transparent)]
    Arith(#[from] NtError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SurveyError>;

/// Candidates q ≡ 1 (mod modulus) with q < cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub modulus: u64,
    pub cap: u64,
}

impl Window {
    fn admits(&self, q: u64) -> bool {
        q < self.cap && (q - 1) % self.modulus == 0
    }
}

/// What is known about every q with ω(q^n − 1) = j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaPlan {
    pub j: usize,
    /// ⌈(p_1⋯p_j + 1)^{1/n}⌉.
    #[serde(with = "crate::serde_big")]
    pub plain_bound: BigUint,
    /// Residue-class bound, when it was needed.
    #[serde(with = "crate::serde_big::option")]
    pub hybrid_bound: Option<BigUint>,
    /// Prime-sieve threshold of the first j primes.
    #[serde(with = "crate::serde_big::option")]
    pub threshold: Option<BigUint>,
    pub s: Option<usize>,
    /// Stage that removes every q with this ω, if any.
    pub eliminated_by: Option<Stage>,
    /// Divisor tree (n = 5, odd q).
    pub forced: Vec<u64>,
    pub tree_s: Option<usize>,
    pub odd: Option<Window>,
    pub even: Option<Window>,
}

impl OmegaPlan {
    fn window(&self, q: u64) -> Option<&Window> {
        if q % 2 == 0 {
            self.even.as_ref()
        } else {
            self.odd.as_ref()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub problem: String,
    pub n: u32,
    /// Canonical configuration text; parsing it replays the run.
    pub config: String,
    pub robin: Option<RobinReduction>,
    /// Every j at or above this is removed by the primorial criterion.
    pub primorial_from: Option<usize>,
    pub omega_plans: Vec<OmegaPlan>,
    /// Prime powers below this were screened.
    pub q_limit: u64,
    pub prime_powers: u64,
    pub factored: u64,
    /// Stage of every screened prime power; sums to `prime_powers`.
    pub stage_counts: BTreeMap<String, u64>,
    /// Prime powers inside their own window, sorted by q.
    pub records: Vec<CandidateRecord>,
    pub pre_mps_survivors: Vec<u64>,
    pub survivors: Vec<u64>,
    pub cubic: Option<CubicSummary>,
}

impl SurveyReport {
    pub fn record(&self, q: u64) -> Option<&CandidateRecord> {
        self.records
            .binary_search_by_key(&q, |r| r.q)
            .ok()
            .map(|i| &self.records[i])
    }
}

/// s minimizing the prime-sieve threshold of an ascending configuration,
/// estimated in floating point over every s ≤ ω.
fn guided_s(n: u32, primes: &[u64]) -> Option<usize> {
    let j = primes.len();
    let mut best: Option<(f64, usize)> = None;
    let mut recip = 0.0;
    for s in 0..=j {
        if s > 0 {
            recip += 1.0 / primes[j - s] as f64;
        }
        let delta = 1.0 - recip;
        if delta <= 0.0 {
            break;
        }
        let big_delta = (s as f64 - 1.0) / delta + 2.0;
        let log_r = (4.0 * big_delta).ln() + (j - s) as f64 * std::f64::consts::LN_2;
        let log_t = 2.0 * log_r / (n as f64 - 4.0);
        if best.is_none_or(|(b, _)| log_t < b) {
            best = Some((log_t, s));
        }
    }
    best.map(|(_, s)| s)
}

/// Worst-case threshold for ω = j: a configured s if present, otherwise
/// the best exact s ≤ s_max, improved by the floating-point choice over
/// all s when j > s_max.
fn plan_threshold(n: u32, j: usize, cfg: &SurveyConfig) -> Result<Option<(BigUint, usize)>> {
    let ps = first_j_config(j);
    if let Some(&s) = cfg.per_j_s.get(&(n, j)) {
        if s > j {
            return Err(SurveyError::Domain(format!("n{n}.j{j}.s = {s} exceeds j")));
        }
        return Ok(sieve_threshold(n, &ps, s).ok().map(|t| (t, s)));
    }
    let mut best = best_sieve_threshold(n, &ps, cfg.s_max);
    if j > cfg.s_max {
        let small: Vec<u64> = ps.iter().map(|p| p.to_u64().unwrap()).collect();
        if let Some(s) = guided_s(n, &small) {
            if let Ok(t) = sieve_threshold(n, &ps, s) {
                if best.as_ref().is_none_or(|(b, _)| t < *b) {
                    best = Some((t, s));
                }
            }
        }
    }
    Ok(best)
}

fn tree_threshold(n: u32, j: usize, cfg: &SurveyConfig) -> Box<ThresholdFn<'static>> {
    match cfg.per_j_s.get(&(n, j)) {
        Some(&s) => Box::new(move |ps: &[BigUint]| sieve_threshold(n, ps, s).ok().map(|t| (t, s))),
        None => {
            let s_max = cfg.s_max;
            Box::new(move |ps: &[BigUint]| best_sieve_threshold(n, ps, s_max))
        }
    }
}

fn cap_u64(t: &BigUint) -> Result<u64> {
    // enumeration beyond this is out of reach anyway
    const LIMIT: u64 = 1 << 40;
    match t.to_u64() {
        Some(v) if v <= LIMIT => Ok(v),
        _ => Err(SurveyError::Domain(format!(
            "candidate window up to {t} is too large to enumerate"
        ))),
    }
}

fn omega_plan(n: u32, j: usize, cfg: &SurveyConfig) -> Result<OmegaPlan> {
    let (plain, _) = plain_bound(n, j);
    let thr = plan_threshold(n, j, cfg)?;
    let mut plan = OmegaPlan {
        j,
        plain_bound: plain.clone(),
        hybrid_bound: None,
        threshold: thr.as_ref().map(|(t, _)| t.clone()),
        s: thr.as_ref().map(|(_, s)| *s),
        eliminated_by: None,
        forced: Vec::new(),
        tree_s: None,
        odd: None,
        even: None,
    };
    let Some((t, s)) = thr else {
        return Err(SurveyError::Domain(format!(
            "no sieve split with positive delta for n = {n}, j = {j}"
        )));
    };
    if plain >= t {
        plan.eliminated_by = Some(if s == 0 {
            Stage::Basic
        } else {
            Stage::PrimeSieve
        });
        return Ok(plan);
    }
    let all = Window {
        modulus: 1,
        cap: cap_u64(&t)?,
    };
    let Some(hcfg) = HybridConfig::for_degree(n) else {
        plan.odd = Some(all);
        plan.even = Some(all);
        return Ok(plan);
    };
    let hb = hybrid_lower_bound(&hcfg, j).bound;
    let hybrid_wins = hb >= t;
    plan.hybrid_bound = Some(hb);
    if hybrid_wins {
        plan.eliminated_by = Some(Stage::Hybrid);
        return Ok(plan);
    }
    // the tree assumes q odd; even q keep the unforced window
    plan.even = Some(all);
    let tree = divisor_tree(&hcfg, j, tree_threshold(n, j, cfg).as_ref());
    plan.forced = tree.forced.clone();
    plan.tree_s = tree.s;
    if tree.eliminated {
        return Ok(plan);
    }
    let cap = match &tree.q_cap {
        Some(c) => cap_u64(c)?,
        None => {
            return Err(SurveyError::Domain(format!(
                "divisor tree at j = {j} has no sieve threshold"
            )))
        }
    };
    plan.odd = Some(Window {
        modulus: tree.modulus,
        cap,
    });
    Ok(plan)
}

/// All prime powers q < limit, ascending.
fn prime_powers_below(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for p in sieve_primes(limit - 1) {
        let mut q = p;
        loop {
            out.push(q);
            match q.checked_mul(p) {
                Some(v) if v < limit => q = v,
                _ => break,
            }
        }
    }
    out.sort_unstable();
    out
}

fn margin(o: &CriterionOutcome) -> f64 {
    o.lhs_approx / o.rhs_approx
}

fn sieve_evidence(o: &CriterionOutcome, s: usize, t: usize, omega: usize) -> Evidence {
    Evidence::Sieve {
        criterion: o.criterion.clone(),
        s,
        t,
        omega,
        margin: margin(o),
    }
}

/// Run the exact criteria on one factored candidate.
fn decide(q: u64, n: u32, f: &Factorization, cfg: &SurveyConfig) -> Result<CandidateRecord> {
    let qb = BigUint::from(q);
    let w = f.omega();
    let primes = f.primes();
    let rec = |stage, evidence| CandidateRecord {
        q,
        n,
        omega_exact: Some(w),
        stage,
        evidence,
    };
    let basic = basic_criterion(&qb, n, w)?;
    if basic.holds {
        return Ok(rec(Stage::Basic, sieve_evidence(&basic, 0, 0, w)));
    }
    let s_max = cfg.exact_s_max.unwrap_or(usize::MAX);
    if let Some((split, o)) = best_prime_sieve(&qb, n, &primes, s_max)? {
        return Ok(rec(Stage::PrimeSieve, sieve_evidence(&o, split.s(), 0, w)));
    }
    if cfg.modified_sieve {
        if let Some((split, o)) = best_modified_sieve(&qb, n, &primes)? {
            return Ok(rec(
                Stage::ModifiedSieve,
                sieve_evidence(&o, split.s(), split.t(), w),
            ));
        }
    }
    let reason = if cfg.modified_sieve {
        "basic criterion, prime sieve and modified sieve all fail"
    } else {
        "basic criterion and prime sieve fail"
    };
    Ok(rec(
        Stage::NeedsVerification,
        Evidence::Unresolved {
            reason: reason.into(),
        },
    ))
}

enum Screened {
    /// Removed by a bound; the flag says whether q^n − 1 was factored.
    Counted(Stage, bool),
    Record(CandidateRecord),
}

/// Shared engine for Problem P2 at one degree.
pub fn survey_p2(n: u32, cfg: &SurveyConfig) -> Result<SurveyReport> {
    if n < 5 {
        return Err(SurveyError::Domain(format!(
            "the sieve pipeline covers n >= 5, got {n}"
        )));
    }
    let mut report = SurveyReport {
        problem: "p2".into(),
        n,
        config: cfg.to_text(),
        robin: None,
        primorial_from: None,
        omega_plans: Vec::new(),
        q_limit: 0,
        prime_powers: 0,
        factored: 0,
        stage_counts: BTreeMap::new(),
        records: Vec::new(),
        pre_mps_survivors: Vec::new(),
        survivors: Vec::new(),
        cubic: None,
    };
    if n >= 25 {
        let r = robin_reduction(25);
        if !r.passes {
            return Err(SurveyError::Domain(
                "the Robin-type reduction does not cover n >= 25".into(),
            ));
        }
        report.robin = Some(r);
        return Ok(report);
    }
    let j0 = primorial_min_j(n)?.min_j;
    report.primorial_from = Some(j0);
    let plans: Vec<OmegaPlan> = (1..j0)
        .into_par_iter()
        .map(|j| omega_plan(n, j, cfg))
        .collect::<Result<_>>()?;
    let limit = plans
        .iter()
        .flat_map(|p| [p.odd, p.even])
        .flatten()
        .map(|w| w.cap)
        .max()
        .unwrap_or(0);
    report.q_limit = limit;
    let candidates = prime_powers_below(limit);
    report.prime_powers = candidates.len() as u64;

    let needs_factoring = |q: u64| {
        plans
            .iter()
            .any(|p| p.window(q).is_some_and(|w| w.admits(q)))
    };
    let screened: Vec<Screened> = candidates
        .par_iter()
        .map(|&q| -> Result<Screened> {
            if !needs_factoring(q) {
                let below_some_cap = plans.iter().any(|p| p.window(q).is_some_and(|w| q < w.cap));
                let stage = if below_some_cap {
                    Stage::DivisorTree
                } else {
                    Stage::PrimeSieve
                };
                return Ok(Screened::Counted(stage, false));
            }
            let f = match factor_pow_minus_one(&BigUint::from(q), n) {
                Ok(f) => f,
                Err(e @ NtError::Timeout { .. }) => {
                    return Ok(Screened::Record(CandidateRecord {
                        q,
                        n,
                        omega_exact: None,
                        stage: Stage::NeedsVerification,
                        evidence: Evidence::Unresolved {
                            reason: e.to_string(),
                        },
                    }))
                }
                Err(e) => return Err(e.into()),
            };
            let w = f.omega();
            if w >= j0 {
                return Ok(Screened::Counted(Stage::Primorial, true));
            }
            let plan = &plans[w - 1];
            if let Some(stage) = plan.eliminated_by {
                return Ok(Screened::Counted(stage, true));
            }
            match plan.window(q) {
                None => Ok(Screened::Counted(Stage::DivisorTree, true)),
                Some(win) if q >= win.cap => Ok(Screened::Counted(Stage::PrimeSieve, true)),
                Some(win) if !win.admits(q) => Ok(Screened::Counted(Stage::DivisorTree, true)),
                Some(_) => Ok(Screened::Record(decide(q, n, &f, cfg)?)),
            }
        })
        .collect::<Result<_>>()?;

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for s in screened {
        let stage = match s {
            Screened::Counted(stage, factored) => {
                report.factored += factored as u64;
                stage
            }
            Screened::Record(r) => {
                report.factored += r.omega_exact.is_some() as u64;
                let st = r.stage;
                report.records.push(r);
                st
            }
        };
        *counts.entry(stage.as_str().into()).or_default() += 1;
    }
    report.stage_counts = counts;
    report.pre_mps_survivors = report
        .records
        .iter()
        .filter(|r| matches!(r.stage, Stage::ModifiedSieve | Stage::NeedsVerification))
        .map(|r| r.q)
        .collect();
    report.survivors = report
        .records
        .iter()
        .filter(|r| r.stage == Stage::NeedsVerification)
        .map(|r| r.q)
        .collect();
    report.omega_plans = plans;
    Ok(report)
}

/// Problem P2 for 6 ≤ n ≤ 24; n ≥ 25 is settled by the Robin-type
/// reduction alone.
pub fn eliminate_for_n(n: u32, cfg: &SurveyConfig) -> Result<SurveyReport> {
    if n < 6 {
        return Err(SurveyError::Domain(format!(
            "eliminate_for_n covers n >= 6, got {n}; use survey_n5"
        )));
    }
    survey_p2(n, cfg)
}

pub fn survey_n5(cfg: &SurveyConfig) -> Result<SurveyReport> {
    survey_p2(5, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub sampled: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

fn audit_record(r: &CandidateRecord, cfg: &SurveyConfig) -> std::result::Result<(), String> {
    let Some(w) = r.omega_exact else {
        return match r.stage {
            Stage::NeedsVerification => Ok(()),
            _ => Err(format!("q = {}: eliminated without a factorization", r.q)),
        };
    };
    let q = BigUint::from(r.q);
    let f = factor_pow_minus_one(&q, r.n).map_err(|e| format!("q = {}: {e}", r.q))?;
    if f.omega() != w {
        return Err(format!("q = {}: omega {} recorded as {w}", r.q, f.omega()));
    }
    let primes = f.primes();
    let holds = |criterion: &str, s: usize, t: usize| -> std::result::Result<bool, String> {
        let err = |e: CriteriaError| format!("q = {}: {e}", r.q);
        Ok(match criterion {
            "basic" => basic_criterion(&q, r.n, w).map_err(err)?.holds,
            "prime_sieve" => {
                let split = split_from_primes(&primes, s, 0).map_err(err)?;
                prime_sieve_criterion(&q, r.n, &split).map_err(err)?.holds
            }
            "modified_sieve" => {
                let split = split_from_primes(&primes, s, t).map_err(err)?;
                modified_sieve_criterion(&q, r.n, &split)
                    .map_err(err)?
                    .holds
            }
            "cohen_gupta" => {
                let split = split_from_primes(&primes, s, 0).map_err(err)?;
                cg_cubic_criterion(&q, &split).map_err(err)?.holds
            }
            other => return Err(format!("q = {}: unknown criterion {other}", r.q)),
        })
    };
    match (&r.stage, &r.evidence) {
        (
            stage,
            Evidence::Sieve {
                criterion, s, t, ..
            },
        ) if stage.eliminates() => {
            if holds(criterion, *s, *t)? {
                Ok(())
            } else {
                Err(format!("q = {}: recorded {criterion} does not hold", r.q))
            }
        }
        (Stage::NeedsVerification, _) if r.n == 3 => {
            match best_cg(&q, &primes).map_err(|e| e.to_string())? {
                Some(_) => Err(format!("q = {}: a criterion holds for a survivor", r.q)),
                None => Ok(()),
            }
        }
        (Stage::NeedsVerification, _) => {
            let s_max = cfg.exact_s_max.unwrap_or(usize::MAX);
            let err = |e: CriteriaError| e.to_string();
            let ps = best_prime_sieve(&q, r.n, &primes, s_max).map_err(err)?;
            let mps = if cfg.modified_sieve {
                best_modified_sieve(&q, r.n, &primes).map_err(err)?
            } else {
                None
            };
            if holds("basic", 0, 0)? || ps.is_some() || mps.is_some() {
                Err(format!("q = {}: a criterion holds for a survivor", r.q))
            } else {
                Ok(())
            }
        }
        _ => Err(format!("q = {}: no replayable evidence", r.q)),
    }
}

/// Re-derive the verdict of `samples` random records from scratch.
pub fn spot_audit(report: &SurveyReport, samples: usize, seed: u64) -> Result<AuditReport> {
    let cfg = SurveyConfig::parse(&report.config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = samples.min(report.records.len());
    let mut idx: Vec<usize> = sample(&mut rng, report.records.len(), k).into_vec();
    idx.sort_unstable();
    let results: Vec<std::result::Result<(), String>> = idx
        .par_iter()
        .map(|&i| audit_record(&report.records[i], &cfg))
        .collect();
    let failures: Vec<String> = results.into_iter().filter_map(|r| r.err()).collect();
    Ok(AuditReport {
        sampled: k,
        passed: k - failures.len(),
        failures,
    })
}
