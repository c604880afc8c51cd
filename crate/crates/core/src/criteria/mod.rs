//! Exact evaluators for the existence criteria.
//!
//! Every verdict is decided in exact arithmetic: radicals are cleared by
//! raising both sides to an integer power, and all sieve parameters are
//! rationals. The `*_approx` fields of an outcome are for display only.

mod robin;
mod split;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ntheory::{first_primes, iroot_floor, ln_big, primorial, ratio_to_f64, NtError};

pub use robin::{robin_reduction, RobinReduction};
pub use split::{make_sieve_split, split_from_primes, SieveSplit};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CriteriaError {
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("sieve parameter delta is not positive")]
    DeltaNonpositive,
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("theta(k)*delta does not exceed epsilon")]
    Infeasible,
    #[error(transparent)]
    Arith(#[from] NtError),
}

/// One criterion's verdict with every intermediate quantity.
///
/// `lhs` and `rhs` are the exact integers or rationals that were compared
/// (after clearing radicals as described in `comparison`); `holds` is
/// `lhs > rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: String,
    pub comparison: String,
    pub lhs: String,
    pub rhs: String,
    pub lhs_approx: f64,
    pub rhs_approx: f64,
    pub holds: bool,
    pub params: BTreeMap<String, Value>,
}

pub(crate) fn big_to_f64(x: &BigUint) -> f64 {
    if x.is_zero() {
        0.0
    } else {
        ln_big(x).exp()
    }
}

fn rat(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn pow2(e: usize) -> BigRational {
    BigRational::from_integer(BigInt::one() << e)
}

/// Smallest integer q with q^e > x, for x ≥ 0 rational.
pub fn min_q_exceeding(x: &BigRational, e: u32) -> BigUint {
    let fl = x.floor().to_integer();
    if fl.is_negative() {
        return BigUint::zero();
    }
    iroot_floor(&fl.to_biguint().unwrap(), e) + 1u32
}

fn check_n(n: u32) -> Result<(), CriteriaError> {
    if n < 5 {
        return Err(CriteriaError::DomainError(format!(
            "criterion needs n >= 5, got {n}"
        )));
    }
    Ok(())
}

fn q_root_approx(q: &BigUint, n: u32) -> f64 {
    (ln_big(q) * (n as f64 - 4.0) / 2.0).exp()
}

/// q^{n/2−2} > 2^{ω+2}, compared as q^{n−4} > 2^{2(ω+2)}.
pub fn basic_criterion(
    q: &BigUint,
    n: u32,
    omega: usize,
) -> Result<CriterionOutcome, CriteriaError> {
    check_n(n)?;
    let lhs = q.pow(n - 4);
    let rhs = BigUint::one() << (2 * (omega + 2));
    let mut params = BTreeMap::new();
    params.insert("q".into(), json!(q.to_string()));
    params.insert("n".into(), json!(n));
    params.insert("omega".into(), json!(omega));
    Ok(CriterionOutcome {
        criterion: "basic".into(),
        comparison: "q^(n-4) > 2^(2*(omega+2))".into(),
        holds: lhs > rhs,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_approx: q_root_approx(q, n),
        rhs_approx: 2f64.powi(omega as i32 + 2),
        params,
    })
}

/// Δ = (s−1)/δ + 2.
pub fn big_delta(split: &SieveSplit) -> Result<BigRational, CriteriaError> {
    if !split.delta.is_positive() {
        return Err(CriteriaError::DeltaNonpositive);
    }
    let s = BigRational::from_integer((split.s() as i64 - 1).into());
    Ok(s / &split.delta + BigRational::from_integer(2.into()))
}

/// The unsquared right-hand side 4Δ·2^{ω(k)} of the prime sieve.
pub fn prime_sieve_rhs(split: &SieveSplit) -> Result<BigRational, CriteriaError> {
    if split.t() != 0 {
        return Err(CriteriaError::InvalidSplit(
            "prime sieve takes no large primes".into(),
        ));
    }
    Ok(big_delta(split)? * BigRational::from_integer(4.into()) * pow2(split.omega_k()))
}

/// q^{n/2−2} > 4Δ·2^{ω(k)}, compared after squaring.
pub fn prime_sieve_criterion(
    q: &BigUint,
    n: u32,
    split: &SieveSplit,
) -> Result<CriterionOutcome, CriteriaError> {
    check_n(n)?;
    let r = prime_sieve_rhs(split)?;
    let r2 = &r * &r;
    let lhs = rat(&q.pow(n - 4));
    let mut params = BTreeMap::new();
    params.insert("q".into(), json!(q.to_string()));
    params.insert("n".into(), json!(n));
    params.insert("s".into(), json!(split.s()));
    params.insert("omega_k".into(), json!(split.omega_k()));
    params.insert("delta".into(), json!(split.delta.to_string()));
    params.insert("Delta".into(), json!(big_delta(split)?.to_string()));
    params.insert(
        "q_threshold".into(),
        json!(min_q_exceeding(&r2, n - 4).to_string()),
    );
    Ok(CriterionOutcome {
        criterion: "prime_sieve".into(),
        comparison: "q^(n-4) > (4*Delta*2^omega_k)^2".into(),
        holds: lhs > r2,
        lhs: lhs.to_string(),
        rhs: r2.to_string(),
        lhs_approx: q_root_approx(q, n),
        rhs_approx: ratio_to_f64(&r),
        params,
    })
}

/// The unsquared right-hand side of the modified prime sieve,
/// 4{θ(k)(s−1+2δ)2^{ω(k)} + (t−ε)} / (θ(k)δ − ε).
pub fn modified_sieve_rhs(split: &SieveSplit) -> Result<BigRational, CriteriaError> {
    let den = &split.theta_k * &split.delta - &split.epsilon;
    if !den.is_positive() {
        return Err(CriteriaError::Infeasible);
    }
    let s1 = BigRational::from_integer((split.s() as i64 - 1).into());
    let two = BigRational::from_integer(2.into());
    let t = BigRational::from_integer((split.t() as i64).into());
    let num =
        &split.theta_k * (s1 + two * &split.delta) * pow2(split.omega_k()) + (t - &split.epsilon);
    Ok(BigRational::from_integer(4.into()) * num / den)
}

pub fn modified_sieve_criterion(
    q: &BigUint,
    n: u32,
    split: &SieveSplit,
) -> Result<CriterionOutcome, CriteriaError> {
    check_n(n)?;
    let r = modified_sieve_rhs(split)?;
    let r2 = &r * &r;
    let lhs = rat(&q.pow(n - 4));
    let mut params = BTreeMap::new();
    params.insert("q".into(), json!(q.to_string()));
    params.insert("n".into(), json!(n));
    params.insert("s".into(), json!(split.s()));
    params.insert("t".into(), json!(split.t()));
    params.insert("omega_k".into(), json!(split.omega_k()));
    params.insert("delta".into(), json!(split.delta.to_string()));
    params.insert("epsilon".into(), json!(split.epsilon.to_string()));
    params.insert("theta_k".into(), json!(split.theta_k.to_string()));
    params.insert(
        "q_threshold".into(),
        json!(min_q_exceeding(&r2, n - 4).to_string()),
    );
    Ok(CriterionOutcome {
        criterion: "modified_sieve".into(),
        comparison:
            "q^(n-4) > (4*(theta_k*(s-1+2*delta)*2^omega_k+(t-epsilon))/(theta_k*delta-epsilon))^2"
                .into(),
        holds: lhs > r2,
        lhs: lhs.to_string(),
        rhs: r2.to_string(),
        lhs_approx: q_root_approx(q, n),
        rhs_approx: ratio_to_f64(&r),
        params,
    })
}

/// (p_1⋯p_j + 1)^{1/2−2/n} > 2^{2+j}, compared after raising to the 2n-th
/// power.
pub fn primorial_criterion(n: u32, j: usize) -> Result<CriterionOutcome, CriteriaError> {
    check_n(n)?;
    if j == 0 {
        return Err(CriteriaError::DomainError(
            "primorial criterion needs j >= 1".into(),
        ));
    }
    let base = primorial(j)? + 1u32;
    let lhs = base.pow(n - 4);
    let rhs = BigUint::one() << (2 * n as usize * (j + 2));
    let mut params = BTreeMap::new();
    params.insert("n".into(), json!(n));
    params.insert("j".into(), json!(j));
    Ok(CriterionOutcome {
        criterion: "primorial".into(),
        comparison: "(P_j+1)^(n-4) > 2^(2n(j+2))".into(),
        holds: lhs > rhs,
        lhs: lhs.to_string(),
        rhs: rhs.to_string(),
        lhs_approx: (ln_big(&base) * (0.5 - 2.0 / n as f64)).exp(),
        rhs_approx: 2f64.powi(j as i32 + 2),
        params,
    })
}

/// Where the primorial criterion starts holding for good.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimorialTail {
    pub n: u32,
    /// Smallest j0 with the criterion true for every j ≥ j0.
    pub min_j: usize,
    /// Index from which the induction step p_{j+1}^{n−4} ≥ 2^{2n} together
    /// with P_j^{n−4} > 2^{2n(j+2)} certifies every larger j.
    pub certified_from: usize,
}

pub fn primorial_min_j(n: u32) -> Result<PrimorialTail, CriteriaError> {
    check_n(n)?;
    let e = n - 4;
    let step = BigUint::one() << (2 * n as usize);
    let primes = first_primes(crate::ntheory::PRIMORIAL_MAX_J + 1);
    let mut pj = BigUint::one();
    let mut holds = Vec::new();
    for j in 1..=crate::ntheory::PRIMORIAL_MAX_J {
        pj *= primes[j - 1];
        let rhs = BigUint::one() << (2 * n as usize * (j + 2));
        holds.push((&pj + 1u32).pow(e) > rhs);
        let strong = pj.pow(e) > rhs;
        let next = BigUint::from(primes[j]).pow(e);
        if strong && next >= step {
            let mut j0 = j;
            while j0 > 1 && holds[j0 - 2] {
                j0 -= 1;
            }
            return Ok(PrimorialTail {
                n,
                min_j: j0,
                certified_from: j,
            });
        }
    }
    Err(CriteriaError::DomainError(format!(
        "no primorial tail certificate for n = {n} below j = {}",
        crate::ntheory::PRIMORIAL_MAX_J
    )))
}

/// C_q = 2 for even q and 3 for odd q.
pub fn cubic_constant(q: &BigUint) -> u32 {
    if q.is_even() {
        2
    } else {
        3
    }
}

/// The unsquared right-hand side C·2^{2ω(k)}·(2 + (2s−1)/δ) with
/// δ = 1 − 2Σ1/p_i.
pub fn cg_rhs(split: &SieveSplit, c_q: u32) -> Result<BigRational, CriteriaError> {
    if split.t() != 0 {
        return Err(CriteriaError::InvalidSplit(
            "cubic criterion takes no large primes".into(),
        ));
    }
    if split.s() == 0 {
        return Err(CriteriaError::InvalidSplit(
            "cubic criterion needs s >= 1".into(),
        ));
    }
    let d = split.cubic_delta();
    if !d.is_positive() {
        return Err(CriteriaError::DeltaNonpositive);
    }
    let inner = BigRational::from_integer(2.into())
        + BigRational::from_integer((2 * split.s() as i64 - 1).into()) / d;
    Ok(BigRational::from_integer(c_q.into()) * pow2(2 * split.omega_k()) * inner)
}

/// q^{1/2} > C_q·2^{2ω(k)}·(2 + (2s−1)/δ), compared as q > rhs².
pub fn cg_cubic_criterion(
    q: &BigUint,
    split: &SieveSplit,
) -> Result<CriterionOutcome, CriteriaError> {
    let c = cubic_constant(q);
    let r = cg_rhs(split, c)?;
    let r2 = &r * &r;
    let lhs = rat(q);
    let mut params = BTreeMap::new();
    params.insert("q".into(), json!(q.to_string()));
    params.insert("C_q".into(), json!(c));
    params.insert("s".into(), json!(split.s()));
    params.insert("omega_k".into(), json!(split.omega_k()));
    params.insert("delta".into(), json!(split.cubic_delta().to_string()));
    params.insert(
        "q_threshold".into(),
        json!(min_q_exceeding(&r2, 1).to_string()),
    );
    Ok(CriterionOutcome {
        criterion: "cohen_gupta".into(),
        comparison: "q > (C_q*2^(2*omega_k)*(2+(2s-1)/delta))^2".into(),
        holds: lhs > r2,
        lhs: lhs.to_string(),
        rhs: r2.to_string(),
        lhs_approx: big_to_f64(q).sqrt(),
        rhs_approx: ratio_to_f64(&r),
        params,
    })
}

fn to_big(primes: &[u64]) -> Vec<BigUint> {
    primes.iter().map(|&p| BigUint::from(p)).collect()
}

/// The first j primes as a worst-case configuration.
pub fn first_j_config(j: usize) -> Vec<BigUint> {
    to_big(&first_primes(j))
}

/// First passing prime-sieve split over s = 0..=min(ω, s_max), top-s
/// convention. Splits with δ ≤ 0 are skipped.
pub fn best_prime_sieve(
    q: &BigUint,
    n: u32,
    primes: &[BigUint],
    s_max: usize,
) -> Result<Option<(SieveSplit, CriterionOutcome)>, CriteriaError> {
    for s in 0..=primes.len().min(s_max) {
        let split = split_from_primes(primes, s, 0)?;
        match prime_sieve_criterion(q, n, &split) {
            Ok(o) if o.holds => return Ok(Some((split, o))),
            Ok(_) | Err(CriteriaError::DeltaNonpositive) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// First passing modified-sieve split, searching t outer and s inner.
pub fn best_modified_sieve(
    q: &BigUint,
    n: u32,
    primes: &[BigUint],
) -> Result<Option<(SieveSplit, CriterionOutcome)>, CriteriaError> {
    let w = primes.len();
    for t in 0..=w {
        for s in 0..=w - t {
            let split = split_from_primes(primes, s, t)?;
            match modified_sieve_criterion(q, n, &split) {
                Ok(o) if o.holds => return Ok(Some((split, o))),
                Ok(_) | Err(CriteriaError::Infeasible) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(None)
}

/// First passing Cohen–Gupta split over s = 1..=ω.
pub fn best_cg(
    q: &BigUint,
    primes: &[BigUint],
) -> Result<Option<(SieveSplit, CriterionOutcome)>, CriteriaError> {
    for s in 1..=primes.len() {
        let split = split_from_primes(primes, s, 0)?;
        match cg_cubic_criterion(q, &split) {
            Ok(o) if o.holds => return Ok(Some((split, o))),
            Ok(_) | Err(CriteriaError::DeltaNonpositive) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Worst-case threshold for a fixed prime configuration: the prime sieve
/// with the top-s split holds for every q ≥ the returned value.
pub fn sieve_threshold(n: u32, primes: &[BigUint], s: usize) -> Result<BigUint, CriteriaError> {
    check_n(n)?;
    let split = split_from_primes(primes, s, 0)?;
    let r = prime_sieve_rhs(&split)?;
    Ok(min_q_exceeding(&(&r * &r), n - 4))
}

/// Minimum of [`sieve_threshold`] over s = 0..=min(ω, s_max); ties go to
/// the smaller s.
pub fn best_sieve_threshold(n: u32, primes: &[BigUint], s_max: usize) -> Option<(BigUint, usize)> {
    let mut best: Option<(BigUint, usize)> = None;
    for s in 0..=primes.len().min(s_max) {
        if let Ok(t) = sieve_threshold(n, primes, s) {
            if best.as_ref().is_none_or(|(b, _)| t < *b) {
                best = Some((t, s));
            }
        }
    }
    best
}

pub fn cg_threshold(primes: &[BigUint], s: usize, c_q: u32) -> Result<BigUint, CriteriaError> {
    let split = split_from_primes(primes, s, 0)?;
    let r = cg_rhs(&split, c_q)?;
    Ok(min_q_exceeding(&(&r * &r), 1))
}

pub fn best_cg_threshold(primes: &[BigUint], c_q: u32) -> Option<(BigUint, usize)> {
    let mut best: Option<(BigUint, usize)> = None;
    for s in 1..=primes.len() {
        if let Ok(t) = cg_threshold(primes, s, c_q) {
            if best.as_ref().is_none_or(|(b, _)| t < *b) {
                best = Some((t, s));
            }
        }
    }
    best
}
