//! Integer factorization: trial division, then Pollard–Brent rho on the
//! cofactors with strong-probable-prime certification of every factor.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::montgomery::{BigRing, ModRing, Mont128, Mont64};
use super::primes::{is_prime, is_prime_u128, small_primes};
use super::{Factorization, NtError};

/// Trial division covers primes below this bound before rho takes over.
const TRIAL_BOUND: u64 = 1 << 12;

#[derive(Clone, Copy, Debug)]
pub struct FactorOptions {
    /// Maximum number of rho iterations spent on a single cofactor before
    /// giving up with [`NtError::Timeout`].
    pub rho_budget: u64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            rho_budget: 1 << 28,
        }
    }
}

fn upper_limit() -> BigUint {
    BigUint::one() << 256u32
}

pub fn factorize(n: &BigUint) -> Result<Factorization, NtError> {
    factorize_with(n, FactorOptions::default())
}

pub fn factorize_with(n: &BigUint, opts: FactorOptions) -> Result<Factorization, NtError> {
    if n.is_zero() || *n >= upper_limit() {
        return Err(NtError::Overflow);
    }
    let mut map = BTreeMap::new();
    factor_into(n.clone(), &mut map, opts)?;
    Ok(Factorization::from_map(n.clone(), map))
}

pub fn factorize_u64(n: u64) -> Result<Factorization, NtError> {
    factorize(&BigUint::from(n))
}

/// Factor `n` and accumulate prime exponents into `map`.
pub(crate) fn factor_into(
    n: BigUint,
    map: &mut BTreeMap<BigUint, u32>,
    opts: FactorOptions,
) -> Result<(), NtError> {
    let mut rest = n;
    for &p in small_primes() {
        if p >= TRIAL_BOUND {
            break;
        }
        if (&rest % p).is_zero() {
            let mut e = 0;
            while (&rest % p).is_zero() {
                rest /= p;
                e += 1;
            }
            *map.entry(BigUint::from(p)).or_insert(0) += e;
        }
        if BigUint::from(p * p) > rest {
            break;
        }
    }
    let mut stack = vec![(rest, 1u32)];
    while let Some((m, mult)) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if m < BigUint::from(TRIAL_BOUND * TRIAL_BOUND) || is_prime(&m) {
            // anything below TRIAL_BOUND^2 left after trial division is prime
            *map.entry(m).or_insert(0) += mult;
            continue;
        }
        if let Some((r, k)) = perfect_power(&m) {
            stack.push((r, mult * k));
            continue;
        }
        let d = find_factor(&m, opts)?;
        let other = &m / &d;
        stack.push((d, mult));
        stack.push((other, mult));
    }
    Ok(())
}

/// Largest k ≥ 2 with m = r^k, if any.
pub fn perfect_power(m: &BigUint) -> Option<(BigUint, u32)> {
    let bits = m.bits() as u32;
    let mut best = None;
    for k in 2..=bits.max(2) {
        let r = m.nth_root(k);
        if r < BigUint::from(2u32) {
            break;
        }
        if r.pow(k) == *m {
            best = Some((r, k));
        }
    }
    best
}

fn find_factor(m: &BigUint, opts: FactorOptions) -> Result<BigUint, NtError> {
    if m.is_even() {
        return Ok(BigUint::from(2u32));
    }
    let mut budget = opts.rho_budget;
    for c in 1u64.. {
        let found = if let Some(v) = m.to_u64() {
            brent(&Mont64::new(v), c, &mut budget).map(BigUint::from)
        } else if let Some(v) = m.to_u128() {
            brent(&Mont128::new(v), c, &mut budget).map(BigUint::from)
        } else {
            brent_big(&BigRing::new(m.clone()), c, &mut budget)
        };
        match found {
            Some(d) => return Ok(d),
            None if budget == 0 => {
                return Err(NtError::Timeout {
                    cofactor: m.to_string(),
                })
            }
            None => continue,
        }
    }
    unreachable!()
}

const BATCH: u64 = 128;

/// One Brent cycle-finding run with polynomial x² + c. Returns a nontrivial
/// factor, or `None` if this `c` failed or the budget ran out.
fn brent<R: ModRing>(ring: &R, c: u64, budget: &mut u64) -> Option<R::Int> {
    let n = ring.modulus();
    let c = ring.from_u64(c);
    let f = |x: R::El| ring.add(ring.mul(x, x), c);
    let mut y = ring.from_u64(2);
    let mut x;
    let mut ys;
    let mut q = ring.one();
    let mut r: u64 = 1;
    let mut g;
    loop {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        loop {
            ys = y;
            let steps = BATCH.min(r - k);
            for _ in 0..steps {
                y = f(y);
                q = ring.mul(q, ring.sub(x, y));
            }
            *budget = budget.saturating_sub(steps);
            g = ring.gcd_with_modulus(q);
            k += steps;
            if k >= r || !R::is_one_int(&g) {
                break;
            }
        }
        if !R::is_one_int(&g) {
            break;
        }
        if *budget == 0 {
            return None;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = ring.gcd_with_modulus(ring.sub(x, ys));
            if !R::is_one_int(&g) {
                break;
            }
        }
    }
    if g == n {
        None
    } else {
        Some(g)
    }
}

fn brent_big(ring: &BigRing, c: u64, budget: &mut u64) -> Option<BigUint> {
    let n = ring.modulus().clone();
    let c = BigUint::from(c);
    let f = |x: &BigUint| ring.add(&ring.mul(x, x), &c);
    let mut y = BigUint::from(2u32);
    let mut x;
    let mut ys;
    let mut q = BigUint::one();
    let mut r: u64 = 1;
    let mut g;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        loop {
            ys = y.clone();
            let steps = BATCH.min(r - k);
            for _ in 0..steps {
                y = f(&y);
                q = ring.mul(&q, &ring.sub(&x, &y));
            }
            *budget = budget.saturating_sub(steps);
            g = q.gcd(&n);
            k += steps;
            if k >= r || !g.is_one() {
                break;
            }
        }
        if !g.is_one() {
            break;
        }
        if *budget == 0 {
            return None;
        }
        r *= 2;
    }
    if g == n {
        loop {
            ys = f(&ys);
            g = ring.sub(&x, &ys).gcd(&n);
            if !g.is_one() {
                break;
            }
        }
    }
    if g == n {
        None
    } else {
        Some(g)
    }
}

/// Fast path for the survey engines: factor a 128-bit value into
/// `(prime, exponent)` pairs, primes increasing.
pub fn factor_u128(n: u128) -> Result<Vec<(u128, u32)>, NtError> {
    let mut out: BTreeMap<u128, u32> = BTreeMap::new();
    let mut rest = n;
    for &p in small_primes() {
        if p >= TRIAL_BOUND {
            break;
        }
        let p = p as u128;
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.insert(p, e);
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if m < (TRIAL_BOUND * TRIAL_BOUND) as u128 || is_prime_u128(m) {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        if let Some((r, k)) = perfect_power(&BigUint::from(m)) {
            let r = r.to_u128().unwrap();
            for _ in 0..k {
                stack.push(r);
            }
            continue;
        }
        let d = find_factor(&BigUint::from(m), FactorOptions::default())?;
        let d = d.to_u128().unwrap();
        stack.push(d);
        stack.push(m / d);
    }
    Ok(out.into_iter().collect())
}

/// Distinct prime divisors of a 128-bit value.
pub fn distinct_primes_u128(n: u128) -> Result<Vec<u128>, NtError> {
    Ok(factor_u128(n)?.into_iter().map(|(p, _)| p).collect())
}

/// Φ_d(x) evaluated at an integer, via Φ_d = Π_{e|d} (x^e − 1)^{μ(d/e)}.
pub fn cyclotomic_value(d: u32, x: &BigUint) -> BigUint {
    assert!(d >= 1);
    if *x <= BigUint::one() {
        // only x = 0 or 1 reach here; the product formula divides by zero at x = 1
        let xi = x.to_u64().unwrap();
        return BigUint::from(cyclotomic_small(d, xi));
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for e in 1..=d {
        if d % e != 0 {
            continue;
        }
        let t = x.pow(e) - 1u32;
        match super::moebius_u64((d / e) as u64) {
            1 => num *= t,
            -1 => den *= t,
            _ => {}
        }
    }
    num / den
}

fn cyclotomic_small(d: u32, x: u64) -> u64 {
    match x {
        0 => {
            if d == 1 {
                0 // Φ_1(0) = −1 is not representable; callers never ask
            } else {
                1
            }
        }
        _ => {
            // Φ_d(1) = p if d is a power of the prime p, 0 for d = 1, else 1
            if d == 1 {
                return 0;
            }
            let f = factor_u128(d as u128).unwrap();
            if f.len() == 1 {
                f[0].0 as u64
            } else {
                1
            }
        }
    }
}

/// Exact factorization of q^n − 1 through its cyclotomic pieces.
pub fn factor_pow_minus_one(q: &BigUint, n: u32) -> Result<Factorization, NtError> {
    assert!(n >= 1);
    let value = q.pow(n) - 1u32;
    if value.is_zero() || value >= upper_limit() {
        return Err(NtError::Overflow);
    }
    let mut map = BTreeMap::new();
    for d in 1..=n {
        if n % d == 0 {
            let phi = cyclotomic_value(d, q);
            factor_into(phi, &mut map, FactorOptions::default())?;
        }
    }
    Ok(Factorization::from_map(value, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_products() {
        let q = BigUint::from(7u32);
        let mut prod = BigUint::one();
        for d in [1, 2, 3, 4, 6, 12] {
            prod *= cyclotomic_value(d, &q);
        }
        assert_eq!(prod, q.pow(12) - 1u32);
        assert_eq!(
            cyclotomic_value(5, &BigUint::from(2u32)),
            BigUint::from(31u32)
        );
    }

    #[test]
    fn u128_factoring() {
        let n: u128 = 1_000_000_007u128 * 998_244_353u128 * 3;
        assert_eq!(
            factor_u128(n).unwrap(),
            vec![(3, 1), (998_244_353, 1), (1_000_000_007, 1)]
        );
        let sq: u128 = 4_294_967_291u128 * 4_294_967_291u128;
        assert_eq!(factor_u128(sq).unwrap(), vec![(4_294_967_291, 2)]);
    }

    #[test]
    fn perfect_powers() {
        assert_eq!(
            perfect_power(&BigUint::from(4096u32)),
            Some((BigUint::from(2u32), 12))
        );
        assert_eq!(perfect_power(&BigUint::from(12u32)), None);
    }
}
