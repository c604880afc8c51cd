//! Primality testing, prime tables and residue-class prime streams.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::montgomery::{BigRing, ModRing, Mont128, Mont64};

/// Bases that make Miller–Rabin deterministic below 3.3·10^24.
const DET_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Extra bases used above 3.3·10^24. Each independent strong-probable-prime
/// round lets a composite through with probability at most 1/4, so the 64
/// extra rounds bound the failure probability by 2^-128 even before the
/// fixed bases are counted.
const EXTRA_ROUNDS: usize = 64;

/// Threshold (exclusive) under which [`DET_BASES`] alone are a proof.
fn det_limit() -> &'static BigUint {
    static L: OnceLock<BigUint> = OnceLock::new();
    L.get_or_init(|| "3317044064679887385961981".parse().unwrap())
}

/// Sieve of Eratosthenes: all primes `<= limit`.
pub fn sieve_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut comp = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !comp[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                comp[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes below 2^16, shared by trial division.
pub fn small_primes() -> &'static [u64] {
    static P: OnceLock<Vec<u64>> = OnceLock::new();
    P.get_or_init(|| sieve_primes(1 << 16))
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let sp = small_primes();
    if count <= sp.len() {
        return sp[..count].to_vec();
    }
    let mut out = sp.to_vec();
    let mut c = *out.last().unwrap() + 2;
    while out.len() < count {
        if is_prime_u64(c) {
            out.push(c);
        }
        c += 2;
    }
    out
}

/// The j-th prime (1-based).
pub fn nth_prime(j: usize) -> u64 {
    first_primes(j)[j - 1]
}

fn strong_probable_prime<R: ModRing>(ring: &R, base: u64) -> bool {
    let nm1 = ring.modulus_minus_one();
    let s = R::int_trailing_zeros(&nm1);
    let d = R::int_shr(&nm1, s);
    let a = ring.from_u64(base);
    if a == ring.zero() {
        return true;
    }
    let one = ring.one();
    let minus_one = ring.sub(ring.zero(), one);
    let mut x = ring.pow_int(a, &d);
    if x == one || x == minus_one {
        return true;
    }
    for _ in 1..s {
        x = ring.mul(x, x);
        if x == minus_one {
            return true;
        }
        if x == one {
            return false;
        }
    }
    false
}

fn small_case(n: u64) -> Option<bool> {
    if n < 2 {
        return Some(false);
    }
    for &p in &DET_BASES {
        if n == p {
            return Some(true);
        }
        if n % p == 0 {
            return Some(false);
        }
    }
    if n < 41 * 41 {
        return Some(true);
    }
    None
}

/// Deterministic primality for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if let Some(b) = small_case(n) {
        return b;
    }
    let ring = Mont64::new(n);
    DET_BASES.iter().all(|&b| strong_probable_prime(&ring, b))
}

/// Primality for 128-bit integers: deterministic below 3.3·10^24,
/// strong-probable-prime with failure probability below 2^-128 above.
pub fn is_prime_u128(n: u128) -> bool {
    if n <= u64::MAX as u128 {
        return is_prime_u64(n as u64);
    }
    if n % 2 == 0 {
        return false;
    }
    for &p in &small_primes()[1..64] {
        if n % p as u128 == 0 {
            return false;
        }
    }
    let ring = Mont128::new(n);
    if !DET_BASES.iter().all(|&b| strong_probable_prime(&ring, b)) {
        return false;
    }
    if BigUint::from(n) < *det_limit() {
        return true;
    }
    extra_bases(&BigUint::from(n)).all(|b| strong_probable_prime(&ring, b))
}

/// Deterministically derived pseudo-random bases in `[2, n-2]` (capped at
/// 2^63), so that results are reproducible run to run.
fn extra_bases(n: &BigUint) -> impl Iterator<Item = u64> {
    let bound = n
        .to_u64()
        .map(|v| v.saturating_sub(3))
        .unwrap_or(1 << 63)
        .min(1 << 63);
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15 ^ (n.bits() as u64);
    for d in n.iter_u64_digits().take(4) {
        state ^= d.rotate_left(17);
    }
    (0..EXTRA_ROUNDS).map(move |_| {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        2 + z % bound
    })
}

fn strong_probable_prime_big(ring: &BigRing, base: u64) -> bool {
    let n = ring.modulus();
    let nm1 = n - 1u32;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let a = BigUint::from(base) % n;
    if a.is_zero() {
        return true;
    }
    let mut x = ring.pow(&a, &d);
    if x.is_one() || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = ring.mul(&x, &x);
        if x == nm1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

/// Primality for arbitrary-precision integers. Deterministic below
/// 3.3·10^24; above that a composite survives with probability < 2^-128.
pub fn is_prime(n: &BigUint) -> bool {
    if let Some(v) = n.to_u128() {
        return is_prime_u128(v);
    }
    for &p in &small_primes()[..256] {
        if (n % p).is_zero() {
            return false;
        }
    }
    let ring = BigRing::new(n.clone());
    DET_BASES
        .iter()
        .chain(extra_bases(n).collect::<Vec<_>>().iter())
        .all(|&b| strong_probable_prime_big(&ring, b))
}

/// The increasing sequence of primes whose residue mod `modulus` lies in a
/// fixed set.
#[derive(Clone, Debug)]
pub struct ResidueClassStream {
    modulus: u64,
    residues: BTreeSet<u64>,
    next: u64,
}

impl ResidueClassStream {
    pub fn new(modulus: u64, residues: impl IntoIterator<Item = u64>) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        let residues: BTreeSet<u64> = residues.into_iter().map(|r| r % modulus).collect();
        assert!(!residues.is_empty(), "residue set must be nonempty");
        ResidueClassStream {
            modulus,
            residues,
            next: 2,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn admits(&self, p: u64) -> bool {
        self.residues.contains(&(p % self.modulus))
    }
}

impl Iterator for ResidueClassStream {
    type Item = u64;
    fn next(&mut self) -> Option<u64> {
        loop {
            let c = self.next;
            self.next += if c == 2 { 1 } else { 2 };
            if self.admits(c) && is_prime_u64(c) {
                return Some(c);
            }
        }
    }
}

/// First `count` primes in the given residue classes.
pub fn primes_in_class(modulus: u64, residues: &[u64], count: usize) -> Vec<u64> {
    ResidueClassStream::new(modulus, residues.iter().copied())
        .take(count)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primality() {
        assert!(!is_prime_u64(0));
        assert!(!is_prime_u64(1));
        assert!(is_prime_u64(2));
        assert!(is_prime_u64(62791));
        assert!(is_prime_u64((1 << 61) - 1));
        // strong pseudoprimes to the bases 2,3,5,7 and to 2..23 respectively
        assert!(!is_prime_u64(3_215_031_751));
        assert!(!is_prime_u64(3_825_123_056_546_413_051));
    }

    #[test]
    fn big_primality() {
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_prime(&m127));
        let m521 = (BigUint::one() << 521u32) - 1u32;
        assert!(is_prime(&m521));
        let c = (BigUint::one() << 200u32) + 1u32;
        assert!(!is_prime(&c));
    }

    #[test]
    fn classes() {
        assert_eq!(primes_in_class(10, &[1], 3), vec![11, 31, 41]);
        assert_eq!(primes_in_class(3, &[1], 3), vec![7, 13, 19]);
        let comp: Vec<u64> = (0..10).filter(|&r| r != 1).collect();
        assert_eq!(primes_in_class(10, &comp, 4), vec![2, 3, 5, 7]);
    }
}
