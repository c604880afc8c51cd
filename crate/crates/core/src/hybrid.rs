//! Residue-class hybrid lower bounds on q, the forced-divisor tree and
//! arithmetic-progression enumeration.
//!
//! For n = 5 every prime p ≢ 1 (mod 10) dividing q^5 − 1 divides q − 1; for
//! n = 3 the same holds for p ≢ 1 (mod 3). Writing a_m for the product of
//! the m smallest such "class A" primes and b for the product of the j − m
//! smallest remaining "class B" primes, ω(q^n − 1) = j forces
//! q ≥ max(a_m + 1, (a_m·b + 1)^{1/n}) for some m.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{best_cg_threshold, best_sieve_threshold, big_to_f64};
use crate::ntheory::{
    factor_pow_minus_one, first_primes, iroot_ceil, ln_big, prime_power_decompose, NtError,
};
use crate::survey::{CandidateRecord, Evidence, Stage};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub extension_degree: u32,
    pub splitting_modulus: u64,
    /// Residues (mod `splitting_modulus`) of the primes forced to divide
    /// q − 1 whenever they divide q^n − 1. Empty disables the class
    /// structure and reduces the bound to the plain primorial one.
    pub class_a_residues: BTreeSet<u64>,
    /// Primes asserted to divide q^n − 1.
    pub forced_divisors: BTreeSet<u64>,
    /// Primes asserted not to divide q^n − 1.
    pub excluded: BTreeSet<u64>,
    /// n = 3 only: 3 | q^3 − 1 implies 9 | q^3 − 1.
    pub cube_refinement: bool,
}

impl HybridConfig {
    pub fn quintic() -> Self {
        HybridConfig {
            extension_degree: 5,
            splitting_modulus: 10,
            class_a_residues: (0..10).filter(|&r| r != 1).collect(),
            forced_divisors: BTreeSet::new(),
            excluded: BTreeSet::new(),
            cube_refinement: false,
        }
    }

    pub fn cubic() -> Self {
        HybridConfig {
            extension_degree: 3,
            splitting_modulus: 3,
            class_a_residues: [0, 2].into_iter().collect(),
            forced_divisors: BTreeSet::new(),
            excluded: BTreeSet::new(),
            cube_refinement: true,
        }
    }

    /// Class structure switched off: every prime is in class B.
    pub fn plain(n: u32) -> Self {
        HybridConfig {
            extension_degree: n,
            splitting_modulus: 2,
            class_a_residues: BTreeSet::new(),
            forced_divisors: BTreeSet::new(),
            excluded: BTreeSet::new(),
            cube_refinement: false,
        }
    }

    pub fn for_degree(n: u32) -> Option<Self> {
        match n {
            5 => Some(Self::quintic()),
            3 => Some(Self::cubic()),
            _ => None,
        }
    }

    pub fn with_forced(mut self, forced: impl IntoIterator<Item = u64>) -> Self {
        self.forced_divisors.extend(forced);
        self
    }

    pub fn with_excluded(mut self, excluded: impl IntoIterator<Item = u64>) -> Self {
        self.excluded.extend(excluded);
        self
    }

    pub fn in_class_a(&self, p: u64) -> bool {
        self.class_a_residues
            .contains(&(p % self.splitting_modulus))
    }

    /// The two streams, forced primes first, excluded primes removed,
    /// each long enough for `j` picks.
    pub fn streams(&self, j: usize) -> (Vec<u64>, Vec<u64>) {
        let mut pool = 64 * (j + 8);
        loop {
            let primes = first_primes(pool);
            let pick = |a: bool| -> Vec<u64> {
                let mut forced: Vec<u64> = self
                    .forced_divisors
                    .iter()
                    .copied()
                    .filter(|&p| self.in_class_a(p) == a)
                    .collect();
                forced.sort();
                forced.extend(primes.iter().copied().filter(|p| {
                    self.in_class_a(*p) == a
                        && !self.excluded.contains(p)
                        && !self.forced_divisors.contains(p)
                }));
                forced
            };
            let (a, b) = (pick(true), pick(false));
            let a_ok = a.len() >= j || self.class_a_residues.is_empty();
            if a_ok && b.len() >= j {
                return (a, b);
            }
            pool *= 2;
        }
    }

    fn forced_counts(&self) -> (usize, usize) {
        let fa = self
            .forced_divisors
            .iter()
            .filter(|&&p| self.in_class_a(p))
            .count();
        (fa, self.forced_divisors.len() - fa)
    }

    /// Admissible m: all forced class-A primes among the m, all forced
    /// class-B primes among the j − m.
    pub fn m_range(&self, j: usize) -> std::ops::RangeInclusive<usize> {
        let (fa, fb) = self.forced_counts();
        let hi = if self.class_a_residues.is_empty() {
            0
        } else {
            j.saturating_sub(fb)
        };
        fa..=hi
    }
}

/// Lower bound for one value of m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MBound {
    pub m: usize,
    /// Smallest integer q compatible with both inequalities.
    #[serde(with = "crate::serde_big")]
    pub lower: BigUint,
    /// max(a+1, (ab+1)^{1/n}) as a real, for display.
    pub lower_approx: f64,
    /// The primes assumed to divide q^n − 1 in this case, ascending.
    pub config: Vec<u64>,
}

fn product(ps: &[u64]) -> BigUint {
    ps.iter().map(|&p| BigUint::from(p)).product()
}

pub fn m_bound(cfg: &HybridConfig, j: usize, m: usize) -> MBound {
    let (a_s, b_s) = cfg.streams(j);
    let n = cfg.extension_degree;
    let a_primes = &a_s[..m];
    let b_primes = &b_s[..j - m];
    let a = product(a_primes);
    let mut ab = &a * product(b_primes);
    if cfg.cube_refinement && a_primes.contains(&3) {
        ab *= 3u32;
    }
    let first = &a + 1u32;
    let second = iroot_ceil(&(&ab + 1u32), n);
    let lower = if first > second {
        first.clone()
    } else {
        second
    };
    let approx_first = big_to_f64(&first);
    let approx_second = (ln_big(&(&ab + 1u32)) / n as f64).exp();
    let mut config: Vec<u64> = a_primes.iter().chain(b_primes).copied().collect();
    config.sort();
    MBound {
        m,
        lower,
        lower_approx: approx_first.max(approx_second),
        config,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridBound {
    pub j: usize,
    #[serde(with = "crate::serde_big")]
    pub bound: BigUint,
    pub bound_approx: f64,
    pub worst_m: usize,
    pub per_m: Vec<MBound>,
}

/// min over admissible m of max{a_m + 1, (a_m b_{j−m} + 1)^{1/n}}; ties go
/// to the smallest m.
pub fn hybrid_lower_bound(cfg: &HybridConfig, j: usize) -> HybridBound {
    assert!(j >= 1, "hybrid bound needs j >= 1");
    let per_m: Vec<MBound> = cfg.m_range(j).map(|m| m_bound(cfg, j, m)).collect();
    let best = per_m
        .iter()
        .min_by(|x, y| {
            x.lower
                .cmp(&y.lower)
                .then(x.lower_approx.total_cmp(&y.lower_approx))
                .then(x.m.cmp(&y.m))
        })
        .expect("nonempty m range");
    HybridBound {
        j,
        bound: best.lower.clone(),
        bound_approx: best.lower_approx,
        worst_m: best.m,
        per_m: per_m.clone(),
    }
}

/// Plain primorial bound ⌈(p_1⋯p_j + 1)^{1/n}⌉ and its real value.
pub fn plain_bound(n: u32, j: usize) -> (BigUint, f64) {
    let hb = hybrid_lower_bound(&HybridConfig::plain(n), j);
    (hb.bound, hb.bound_approx)
}

/// Worst-case threshold for a prime configuration: the criterion holds for
/// every q at or above the first component; the second is the split used.
pub type ThresholdFn<'a> = dyn Fn(&[BigUint]) -> Option<(BigUint, usize)> + Sync + 'a;

/// Prime-sieve threshold for degree n with s searched over 0..=min(ω, s_max).
pub fn sieve_threshold_fn(
    n: u32,
    s_max: usize,
) -> impl Fn(&[BigUint]) -> Option<(BigUint, usize)> + Sync {
    move |ps: &[BigUint]| best_sieve_threshold(n, ps, s_max)
}

/// Cohen–Gupta threshold with C_q = 3 (odd q).
pub fn cg_threshold_fn() -> impl Fn(&[BigUint]) -> Option<(BigUint, usize)> + Sync {
    |ps: &[BigUint]| best_cg_threshold(ps, 3)
}

/// One value of m with its bound and the worst-case threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCase {
    pub m: usize,
    #[serde(with = "crate::serde_big")]
    pub lower: BigUint,
    pub lower_approx: f64,
    /// None when no split gives a positive δ.
    #[serde(with = "crate::serde_big::option")]
    pub threshold: Option<BigUint>,
    pub s: Option<usize>,
    /// The bound does not reach the threshold: candidates may exist.
    pub live: bool,
}

impl MCase {
    /// lower / threshold, the margin of elimination (≥ 1 means eliminated).
    pub fn margin(&self) -> f64 {
        match &self.threshold {
            Some(t) => self.lower_approx / big_to_f64(t),
            None => 0.0,
        }
    }
}

pub fn per_m_analysis(cfg: &HybridConfig, j: usize, thr: &ThresholdFn) -> Vec<MCase> {
    let ms: Vec<usize> = cfg.m_range(j).collect();
    ms.par_iter()
        .map(|&m| {
            let mb = m_bound(cfg, j, m);
            let cfg_big: Vec<BigUint> = mb.config.iter().map(|&p| BigUint::from(p)).collect();
            let t = thr(&cfg_big);
            let live = match &t {
                Some((t, _)) => mb.lower < *t,
                None => true,
            };
            MCase {
                m,
                lower: mb.lower,
                lower_approx: mb.lower_approx,
                threshold: t.as_ref().map(|(t, _)| t.clone()),
                s: t.map(|(_, s)| s),
                live,
            }
        })
        .collect()
}

/// Largest threshold over the live m, i.e. every candidate with
/// ω(q^n − 1) = j lies below it. None when every m is eliminated.
pub fn live_cap(cases: &[MCase]) -> Option<Option<BigUint>> {
    let live: Vec<&MCase> = cases.iter().filter(|c| c.live).collect();
    if live.is_empty() {
        return None;
    }
    if live.iter().any(|c| c.threshold.is_none()) {
        return Some(None);
    }
    live.iter()
        .filter_map(|c| c.threshold.clone())
        .max()
        .map(Some)
}

/// The j smallest primes compatible with `cfg`: every forced prime plus the
/// smallest non-excluded others, ascending. This is the configuration with
/// the largest sieve threshold among those with ω(q^n − 1) = j.
pub fn worst_config(cfg: &HybridConfig, j: usize) -> Vec<u64> {
    let mut out: Vec<u64> = cfg.forced_divisors.iter().copied().take(j).collect();
    let need = j - out.len();
    let mut pool = 2 * (j + cfg.excluded.len() + 8);
    loop {
        let rest: Vec<u64> = first_primes(pool)
            .into_iter()
            .filter(|p| !cfg.forced_divisors.contains(p) && !cfg.excluded.contains(p))
            .take(need)
            .collect();
        if rest.len() == need {
            out.extend(rest);
            out.sort();
            return out;
        }
        pool *= 2;
    }
}

fn threshold_of(cfg: &HybridConfig, j: usize, thr: &ThresholdFn) -> Option<(BigUint, usize)> {
    let ps: Vec<BigUint> = worst_config(cfg, j)
        .into_iter()
        .map(BigUint::from)
        .collect();
    thr(&ps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedStep {
    pub p: u64,
    pub forced: bool,
    /// Hybrid bound when p ∤ q^n − 1.
    #[serde(with = "crate::serde_big")]
    pub bound_without_p: BigUint,
    pub bound_without_p_approx: f64,
    pub worst_m: usize,
    /// Sieve threshold of the worst configuration avoiding p; None if no
    /// split has positive δ.
    #[serde(with = "crate::serde_big::option")]
    pub sieve_threshold: Option<BigUint>,
    pub s: Option<usize>,
    /// The m whose own worst-case configuration comes closest to surviving
    /// (smallest bound/threshold ratio), with that threshold. Informational:
    /// the verdict uses the configuration-free threshold above.
    pub tightest_m: Option<usize>,
    #[serde(with = "crate::serde_big::option")]
    pub tightest_threshold: Option<BigUint>,
}

/// Decide whether p must divide q^n − 1 given `cfg`'s forced divisors: it
/// must if, assuming it does not, the hybrid bound already reaches the sieve
/// threshold of the worst configuration avoiding p.
pub fn forced_divisor_step(cfg: &HybridConfig, j: usize, p: u64, thr: &ThresholdFn) -> ForcedStep {
    let without = cfg.clone().with_excluded([p]);
    let hb = hybrid_lower_bound(&without, j);
    let t = threshold_of(&without, j, thr);
    let forced = matches!(&t, Some((t, _)) if hb.bound >= *t);
    let cases = per_m_analysis(&without, j, thr);
    let tight = cases
        .iter()
        .min_by(|a, b| a.margin().total_cmp(&b.margin()).then(a.m.cmp(&b.m)));
    ForcedStep {
        p,
        forced,
        bound_without_p: hb.bound,
        bound_without_p_approx: hb.bound_approx,
        worst_m: hb.worst_m,
        sieve_threshold: t.as_ref().map(|(t, _)| t.clone()),
        s: t.map(|(_, s)| s),
        tightest_m: tight.map(|c| c.m),
        tightest_threshold: tight.and_then(|c| c.threshold.clone()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorTree {
    pub j: usize,
    pub forced: Vec<u64>,
    pub modulus: u64,
    pub steps: Vec<ForcedStep>,
    /// Hybrid bound with every forced prime in place.
    #[serde(with = "crate::serde_big")]
    pub bound: BigUint,
    /// Every odd candidate with ω(q^n − 1) = j lies below this.
    #[serde(with = "crate::serde_big::option")]
    pub q_cap: Option<BigUint>,
    pub s: Option<usize>,
    /// The bound reaches the cap: no candidate with this ω.
    pub eliminated: bool,
}

/// Iterate the forced-divisor step over class-A primes in increasing order,
/// starting from 2 (q odd), stopping at the first prime that is not forced.
/// Only class-A primes are tried since only they are guaranteed to divide
/// q − 1, which is what the progression q ≡ 1 (mod M) needs.
pub fn divisor_tree(cfg: &HybridConfig, j: usize, thr: &ThresholdFn) -> DivisorTree {
    let mut cur = cfg.clone().with_forced([2]);
    let mut steps = Vec::new();
    let candidates: Vec<u64> = first_primes(64)
        .into_iter()
        .filter(|&p| p > 2 && cfg.in_class_a(p) && !cfg.excluded.contains(&p))
        .collect();
    let eliminated = |c: &HybridConfig| {
        let t = threshold_of(c, j, thr);
        matches!(&t, Some((t, _)) if hybrid_lower_bound(c, j).bound >= *t)
    };
    for p in candidates {
        // an eliminated j needs no further forcing
        if cur.forced_divisors.len() >= j || eliminated(&cur) {
            break;
        }
        if cur.forced_divisors.contains(&p) {
            continue;
        }
        let step = forced_divisor_step(&cur, j, p, thr);
        let forced = step.forced;
        steps.push(step);
        if !forced {
            break;
        }
        cur = cur.with_forced([p]);
    }
    let forced: Vec<u64> = cur.forced_divisors.iter().copied().collect();
    let modulus = forced
        .iter()
        .try_fold(1u64, |acc, &p| acc.checked_mul(p))
        .expect("forced modulus fits in 64 bits");
    let bound = hybrid_lower_bound(&cur, j).bound;
    let t = threshold_of(&cur, j, thr);
    let eliminated = matches!(&t, Some((t, _)) if bound >= *t);
    DivisorTree {
        j,
        forced,
        modulus,
        steps,
        bound,
        q_cap: t.as_ref().map(|(t, _)| t.clone()),
        s: t.map(|(_, s)| s),
        eliminated,
    }
}

/// Number of progression terms M·k + 1 ≤ q_max with k ≥ 1.
pub fn progression_len(modulus: u64, q_max: u64) -> u64 {
    if q_max <= modulus {
        0
    } else {
        (q_max - 1) / modulus
    }
}

/// All prime powers q = modulus·k + 1 ≤ q_max, annotated with
/// ω(q^n − 1), optionally filtered to one ω value. Order is by q.
pub fn enumerate_progression(
    modulus: u64,
    q_max: u64,
    n: u32,
    omega_filter: Option<usize>,
) -> Vec<CandidateRecord> {
    assert!(modulus >= 1);
    let kmax = progression_len(modulus, q_max);
    let records: Vec<Option<CandidateRecord>> = (1..=kmax)
        .into_par_iter()
        .map(|k| {
            let q = modulus * k + 1;
            prime_power_decompose(q)?;
            let evidence_base = |omega: Option<usize>, err: Option<String>| Evidence::Enumeration {
                fact: match &err {
                    Some(e) => format!("factorization failed: {e}"),
                    None => format!("q = {modulus}*{k} + 1 is a prime power"),
                },
                modulus,
                index: k,
                omega,
            };
            match factor_pow_minus_one(&BigUint::from(q), n) {
                Ok(f) => {
                    let w = f.omega();
                    if omega_filter.is_some_and(|o| o != w) {
                        return None;
                    }
                    Some(CandidateRecord {
                        q,
                        n,
                        omega_exact: Some(w),
                        stage: Stage::DivisorTree,
                        evidence: evidence_base(Some(w), None),
                    })
                }
                Err(e @ NtError::Timeout { .. }) => Some(CandidateRecord {
                    q,
                    n,
                    omega_exact: None,
                    stage: Stage::NeedsVerification,
                    evidence: evidence_base(None, Some(e.to_string())),
                }),
                Err(e) => panic!("unexpected factorization error for {q}: {e}"),
            }
        })
        .collect();
    records.into_iter().flatten().collect()
}
