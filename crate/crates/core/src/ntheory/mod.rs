//! Exact integer kernel: primality, factorization, multiplicative
//! functions, primorials and residue-class prime streams.

mod factor;
pub mod montgomery;
mod primes;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use factor::{
    cyclotomic_value, distinct_primes_u128, factor_pow_minus_one, factor_u128, factorize,
    factorize_u64, factorize_with, perfect_power, FactorOptions,
};
pub use primes::{
    first_primes, is_prime, is_prime_u128, is_prime_u64, nth_prime, primes_in_class, sieve_primes,
    small_primes, ResidueClassStream,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NtError {
    #[error("integer outside the supported range [1, 2^256)")]
    Overflow,
    #[error("factorization budget exhausted on cofactor {cofactor}")]
    Timeout { cofactor: String },
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("invalid factorization: {0}")]
    Invalid(String),
}

/// Prime factorization of a positive integer, primes strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    value: BigUint,
    factors: Vec<(BigUint, u32)>,
}

impl Factorization {
    pub(crate) fn from_map(value: BigUint, map: BTreeMap<BigUint, u32>) -> Self {
        let f = Factorization {
            value,
            factors: map.into_iter().filter(|(_, e)| *e > 0).collect(),
        };
        debug_assert!(f.validate().is_ok());
        f
    }

    /// Build from explicit parts, checking every invariant.
    pub fn from_parts(value: BigUint, factors: Vec<(BigUint, u32)>) -> Result<Self, NtError> {
        let f = Factorization { value, factors };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), NtError> {
        let mut prod = BigUint::one();
        let mut last: Option<&BigUint> = None;
        for (p, e) in &self.factors {
            if *e == 0 {
                return Err(NtError::Invalid("zero exponent".into()));
            }
            if last.is_some_and(|l| l >= p) {
                return Err(NtError::Invalid("primes not strictly increasing".into()));
            }
            if !is_prime(p) {
                return Err(NtError::Invalid(format!("{p} is not prime")));
            }
            prod *= p.pow(*e);
            last = Some(p);
        }
        if prod != self.value {
            return Err(NtError::Invalid("product does not match value".into()));
        }
        Ok(())
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn factors(&self) -> &[(BigUint, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> Vec<BigUint> {
        self.factors.iter().map(|(p, _)| p.clone()).collect()
    }

    /// The distinct primes as `u64`, if they all fit.
    pub fn primes_u64(&self) -> Option<Vec<u64>> {
        self.factors.iter().map(|(p, _)| p.to_u64()).collect()
    }

    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn radical(&self) -> BigUint {
        self.factors.iter().map(|(p, _)| p.clone()).product()
    }

    pub fn euler_phi(&self) -> BigUint {
        self.factors
            .iter()
            .map(|(p, e)| p.pow(e - 1) * (p - 1u32))
            .product()
    }

    pub fn moebius(&self) -> i8 {
        if self.factors.iter().any(|(_, e)| *e > 1) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// φ(n)/n as an exact rational, reduced.
    pub fn theta(&self) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (p, _) in &self.factors {
            num *= BigInt::from(p.clone()) - 1;
            den *= BigInt::from(p.clone());
        }
        BigRational::new(num, den)
    }

    /// Multiply two factorizations.
    pub fn merge(&self, other: &Factorization) -> Factorization {
        let mut map: BTreeMap<BigUint, u32> = self.factors.iter().cloned().collect();
        for (p, e) in &other.factors {
            *map.entry(p.clone()).or_insert(0) += e;
        }
        Factorization::from_map(&self.value * &other.value, map)
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| {
                if *e == 1 {
                    p.to_string()
                } else {
                    format!("{p}^{e}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" * "))
    }
}

#[derive(Serialize, Deserialize)]
struct FactorizationRepr {
    value: String,
    factors: Vec<(String, u32)>,
}

impl Serialize for Factorization {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FactorizationRepr {
            value: self.value.to_string(),
            factors: self
                .factors
                .iter()
                .map(|(p, e)| (p.to_string(), *e))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Factorization {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = FactorizationRepr::deserialize(d)?;
        let value: BigUint = r.value.parse().map_err(D::Error::custom)?;
        let factors = r
            .factors
            .into_iter()
            .map(|(p, e)| p.parse::<BigUint>().map(|p| (p, e)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Factorization::from_parts(value, factors).map_err(D::Error::custom)
    }
}

/// q = p^alpha with p prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrimePower {
    pub p: u64,
    pub alpha: u32,
    pub q: u64,
}

pub fn prime_power_decompose(q: u64) -> Option<PrimePower> {
    if q < 2 {
        return None;
    }
    if is_prime_u64(q) {
        return Some(PrimePower { p: q, alpha: 1, q });
    }
    let bits = 64 - q.leading_zeros();
    for alpha in (2..=bits).rev() {
        let r = q.nth_root(alpha);
        if r >= 2 && r.checked_pow(alpha) == Some(q) && is_prime_u64(r) {
            return Some(PrimePower { p: r, alpha, q });
        }
    }
    None
}

pub fn is_prime_power(q: u64) -> bool {
    prime_power_decompose(q).is_some()
}

fn as_big(n: impl Into<BigUint>) -> Result<Factorization, NtError> {
    let n = n.into();
    if n.is_one() {
        return Ok(Factorization {
            value: n,
            factors: Vec::new(),
        });
    }
    factorize(&n)
}

pub fn omega(n: impl Into<BigUint>) -> Result<usize, NtError> {
    Ok(as_big(n)?.omega())
}

pub fn radical(n: impl Into<BigUint>) -> Result<BigUint, NtError> {
    Ok(as_big(n)?.radical())
}

pub fn euler_phi(n: impl Into<BigUint>) -> Result<BigUint, NtError> {
    Ok(as_big(n)?.euler_phi())
}

pub fn moebius(n: impl Into<BigUint>) -> Result<i8, NtError> {
    Ok(as_big(n)?.moebius())
}

pub fn theta(n: impl Into<BigUint>) -> Result<BigRational, NtError> {
    Ok(as_big(n)?.theta())
}

pub(crate) fn moebius_u64(n: u64) -> i8 {
    let mut m = n;
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

/// Natural logarithm of an arbitrary-precision integer, good to ~1 ulp.
pub fn ln_big(n: &BigUint) -> f64 {
    if let Some(v) = n.to_f64().filter(|v| v.is_finite()) {
        return v.ln();
    }
    let shift = n.bits() - 64;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// 1.385·ln n / ln ln n, rounded upward so the bound is never understated.
pub fn robin_bound(n: &BigUint) -> Result<f64, NtError> {
    if *n < BigUint::from(16u32) {
        return Err(NtError::DomainError(format!(
            "robin_bound requires n >= 16, got {n}"
        )));
    }
    let l = ln_big(n);
    let v = 1.385 * l / l.ln();
    let mut up = v;
    for _ in 0..16 {
        up = up.next_up();
    }
    Ok(up)
}

/// Largest j accepted by [`primorial`]; far beyond anything the criteria need.
pub const PRIMORIAL_MAX_J: usize = 10_000;

/// Product of the first j primes.
pub fn primorial(j: usize) -> Result<BigUint, NtError> {
    if j > PRIMORIAL_MAX_J {
        return Err(NtError::Overflow);
    }
    Ok(first_primes(j).into_iter().map(BigUint::from).product())
}

/// ⌊x^{1/k}⌋.
pub fn iroot_floor(x: &BigUint, k: u32) -> BigUint {
    x.nth_root(k)
}

/// ⌈x^{1/k}⌉.
pub fn iroot_ceil(x: &BigUint, k: u32) -> BigUint {
    let r = x.nth_root(k);
    if r.pow(k) == *x {
        r
    } else {
        r + 1u32
    }
}

/// Convert a nonnegative rational to f64 for presentation.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    let n = r.numer();
    let d = r.denom();
    if n.is_zero() {
        return 0.0;
    }
    let sign = if (n < &BigInt::zero()) != (d < &BigInt::zero()) {
        -1.0
    } else {
        1.0
    };
    let nm = n.magnitude();
    let dm = d.magnitude();
    sign * (ln_big(nm) - ln_big(dm)).exp()
}
