use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::CriteriaError;
use crate::ntheory::Factorization;

/// Partition of rad(q^n − 1) into k · (sieving primes) · (large primes).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SieveSplit {
    pub k_primes: Vec<BigUint>,
    pub sieving_primes: Vec<BigUint>,
    pub large_primes: Vec<BigUint>,
    pub k_radical: BigUint,
    pub delta: BigRational,
    pub epsilon: BigRational,
    pub theta_k: BigRational,
}

pub(crate) fn recip_sum(ps: &[BigUint]) -> BigRational {
    let mut acc = BigRational::zero();
    for p in ps {
        acc += BigRational::new(BigInt::one(), BigInt::from(p.clone()));
    }
    acc
}

pub(crate) fn theta_of(ps: &[BigUint]) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for p in ps {
        num *= BigInt::from(p.clone()) - 1;
        den *= BigInt::from(p.clone());
    }
    BigRational::new(num, den)
}

impl SieveSplit {
    /// Arbitrary split; the three lists must be disjoint.
    pub fn custom(
        mut k_primes: Vec<BigUint>,
        mut sieving_primes: Vec<BigUint>,
        mut large_primes: Vec<BigUint>,
    ) -> Result<Self, CriteriaError> {
        k_primes.sort();
        sieving_primes.sort();
        large_primes.sort();
        let mut all: Vec<&BigUint> = k_primes
            .iter()
            .chain(&sieving_primes)
            .chain(&large_primes)
            .collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(CriteriaError::InvalidSplit(
                "prime lists are not disjoint".into(),
            ));
        }
        let delta = BigRational::one() - recip_sum(&sieving_primes);
        let epsilon = recip_sum(&large_primes);
        let theta_k = theta_of(&k_primes);
        let k_radical = k_primes.iter().product();
        Ok(SieveSplit {
            k_primes,
            sieving_primes,
            large_primes,
            k_radical,
            delta,
            epsilon,
            theta_k,
        })
    }

    pub fn s(&self) -> usize {
        self.sieving_primes.len()
    }

    pub fn t(&self) -> usize {
        self.large_primes.len()
    }

    pub fn omega_k(&self) -> usize {
        self.k_primes.len()
    }

    pub fn omega(&self) -> usize {
        self.k_primes.len() + self.sieving_primes.len() + self.large_primes.len()
    }

    /// 1 − 2Σ1/p_i, the δ of the cubic criterion.
    pub fn cubic_delta(&self) -> BigRational {
        BigRational::one() - recip_sum(&self.sieving_primes) * BigRational::from_integer(2.into())
    }
}

/// Top-s convention on an ascending list of distinct primes: the t largest
/// are large primes, the next s largest sieve, the rest stay in k.
pub fn split_from_primes(
    primes: &[BigUint],
    s: usize,
    t: usize,
) -> Result<SieveSplit, CriteriaError> {
    let w = primes.len();
    if s + t > w {
        return Err(CriteriaError::InvalidSplit(format!(
            "s + t = {} exceeds omega = {w}",
            s + t
        )));
    }
    debug_assert!(primes.windows(2).all(|p| p[0] < p[1]));
    let k = primes[..w - s - t].to_vec();
    let sv = primes[w - s - t..w - t].to_vec();
    let l = primes[w - t..].to_vec();
    SieveSplit::custom(k, sv, l)
}

pub fn make_sieve_split(
    fact: &Factorization,
    s: usize,
    t: usize,
) -> Result<SieveSplit, CriteriaError> {
    split_from_primes(&fact.primes(), s, t)
}

pub(crate) fn ser_list<S: Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    let strs: Vec<String> = v.iter().map(|p| p.to_string()).collect();
    strs.serialize(s)
}

#[derive(Serialize)]
struct SplitRepr<'a> {
    #[serde(serialize_with = "ser_list")]
    k_primes: &'a [BigUint],
    #[serde(serialize_with = "ser_list")]
    sieving_primes: &'a [BigUint],
    #[serde(serialize_with = "ser_list")]
    large_primes: &'a [BigUint],
    k_radical: String,
    omega_k: usize,
    s: usize,
    t: usize,
    delta: String,
    epsilon: String,
    theta_k: String,
}

impl Serialize for SieveSplit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        SplitRepr {
            k_primes: &self.k_primes,
            sieving_primes: &self.sieving_primes,
            large_primes: &self.large_primes,
            k_radical: self.k_radical.to_string(),
            omega_k: self.omega_k(),
            s: self.s(),
            t: self.t(),
            delta: self.delta.to_string(),
            epsilon: self.epsilon.to_string(),
            theta_k: self.theta_k.to_string(),
        }
        .serialize(s)
    }
}
