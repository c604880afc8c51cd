//! Modular rings used by Miller–Rabin and Pollard–Brent.
//!
//! Three backends share one trait: Montgomery over `u64`, Montgomery over
//! `u128` (with a hand-rolled 256-bit product), and a plain `BigUint`
//! fallback for moduli wider than 128 bits.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

pub trait ModRing {
    type El: Copy + Eq;
    type Int: Clone + Eq;

    fn modulus(&self) -> Self::Int;
    fn zero(&self) -> Self::El;
    fn one(&self) -> Self::El;
    fn from_u64(&self, x: u64) -> Self::El;
    fn add(&self, a: Self::El, b: Self::El) -> Self::El;
    fn sub(&self, a: Self::El, b: Self::El) -> Self::El;
    fn mul(&self, a: Self::El, b: Self::El) -> Self::El;
    /// gcd of the (possibly Montgomery-scaled) representative with the
    /// modulus. Scaling by R is harmless since R is coprime to an odd modulus.
    fn gcd_with_modulus(&self, a: Self::El) -> Self::Int;
    fn is_one_int(x: &Self::Int) -> bool;
    fn pow_int(&self, a: Self::El, e: &Self::Int) -> Self::El;
    fn modulus_minus_one(&self) -> Self::Int;
    fn int_trailing_zeros(x: &Self::Int) -> u32;
    fn int_shr(x: &Self::Int, k: u32) -> Self::Int;
}

#[derive(Clone, Debug)]
pub struct Mont64 {
    n: u64,
    ninv: u64,
    r2: u64,
}

impl Mont64 {
    pub fn new(n: u64) -> Self {
        assert!(
            n % 2 == 1 && n > 1,
            "Montgomery modulus must be odd and > 1"
        );
        let mut inv = n;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        let r = ((1u128 << 64) % n as u128) as u64;
        let r2 = ((r as u128 * r as u128) % n as u128) as u64;
        Mont64 { n, ninv: inv, r2 }
    }

    #[inline]
    fn reduce(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.ninv);
        let mn = m as u128 * self.n as u128;
        let th = (t >> 64) as u64;
        let mh = (mn >> 64) as u64;
        if th >= mh {
            th - mh
        } else {
            th.wrapping_add(self.n).wrapping_sub(mh)
        }
    }

    #[inline]
    pub fn to_mont(&self, x: u64) -> u64 {
        self.reduce((x % self.n) as u128 * self.r2 as u128)
    }

    #[inline]
    pub fn from_mont(&self, x: u64) -> u64 {
        self.reduce(x as u128)
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }
}

impl ModRing for Mont64 {
    type El = u64;
    type Int = u64;

    fn modulus(&self) -> u64 {
        self.n
    }
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        self.to_mont(1)
    }
    fn from_u64(&self, x: u64) -> u64 {
        self.to_mont(x)
    }
    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let (s, c) = a.overflowing_add(b);
        if c || s >= self.n {
            s.wrapping_sub(self.n)
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_add(self.n).wrapping_sub(b)
        }
    }
    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }
    fn gcd_with_modulus(&self, a: u64) -> u64 {
        a.gcd(&self.n)
    }
    fn is_one_int(x: &u64) -> bool {
        *x == 1
    }
    fn pow_int(&self, a: u64, e: &u64) -> u64 {
        self.pow(a, *e)
    }
    fn modulus_minus_one(&self) -> u64 {
        self.n - 1
    }
    fn int_trailing_zeros(x: &u64) -> u32 {
        x.trailing_zeros()
    }
    fn int_shr(x: &u64, k: u32) -> u64 {
        x >> k
    }
}

#[inline]
pub fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a0, a1) = (a as u64 as u128, a >> 64);
    let (b0, b1) = (b as u64 as u128, b >> 64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 as u64 as u128) + (p10 as u64 as u128);
    let lo = (p00 as u64 as u128) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

#[derive(Clone, Debug)]
pub struct Mont128 {
    n: u128,
    ninv: u128,
    r2: u128,
}

impl Mont128 {
    pub fn new(n: u128) -> Self {
        assert!(
            n % 2 == 1 && n > 1,
            "Montgomery modulus must be odd and > 1"
        );
        let mut inv = n;
        for _ in 0..7 {
            inv = inv.wrapping_mul(2u128.wrapping_sub(n.wrapping_mul(inv)));
        }
        let nb = BigUint::from(n);
        let r2 = (BigUint::one() << 256u32) % &nb;
        let r2 = u128::try_from(r2).expect("reduced value fits");
        Mont128 { n, ninv: inv, r2 }
    }

    #[inline]
    fn reduce(&self, th: u128, tl: u128) -> u128 {
        let m = tl.wrapping_mul(self.ninv);
        let (mh, _) = mul_wide(m, self.n);
        if th >= mh {
            th - mh
        } else {
            th.wrapping_add(self.n).wrapping_sub(mh)
        }
    }

    #[inline]
    pub fn to_mont(&self, x: u128) -> u128 {
        let (h, l) = mul_wide(x % self.n, self.r2);
        self.reduce(h, l)
    }

    #[inline]
    pub fn from_mont(&self, x: u128) -> u128 {
        self.reduce(0, x)
    }

    pub fn pow(&self, mut a: u128, mut e: u128) -> u128 {
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }
}

impl ModRing for Mont128 {
    type El = u128;
    type Int = u128;

    fn modulus(&self) -> u128 {
        self.n
    }
    fn zero(&self) -> u128 {
        0
    }
    fn one(&self) -> u128 {
        self.to_mont(1)
    }
    fn from_u64(&self, x: u64) -> u128 {
        self.to_mont(x as u128)
    }
    #[inline]
    fn add(&self, a: u128, b: u128) -> u128 {
        let (s, c) = a.overflowing_add(b);
        if c || s >= self.n {
            s.wrapping_sub(self.n)
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: u128, b: u128) -> u128 {
        if a >= b {
            a - b
        } else {
            a.wrapping_add(self.n).wrapping_sub(b)
        }
    }
    #[inline]
    fn mul(&self, a: u128, b: u128) -> u128 {
        let (h, l) = mul_wide(a, b);
        self.reduce(h, l)
    }
    fn gcd_with_modulus(&self, a: u128) -> u128 {
        a.gcd(&self.n)
    }
    fn is_one_int(x: &u128) -> bool {
        *x == 1
    }
    fn pow_int(&self, a: u128, e: &u128) -> u128 {
        self.pow(a, *e)
    }
    fn modulus_minus_one(&self) -> u128 {
        self.n - 1
    }
    fn int_trailing_zeros(x: &u128) -> u32 {
        x.trailing_zeros()
    }
    fn int_shr(x: &u128, k: u32) -> u128 {
        x >> k
    }
}

/// Plain residue arithmetic for moduli beyond 128 bits.
#[derive(Clone, Debug)]
pub struct BigRing {
    n: BigUint,
}

impl BigRing {
    pub fn new(n: BigUint) -> Self {
        BigRing { n }
    }
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }
    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.n
    }
    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.n {
            s - &self.n
        } else {
            s
        }
    }
    pub fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            a + &self.n - b
        }
    }
    pub fn pow(&self, a: &BigUint, e: &BigUint) -> BigUint {
        a.modpow(e, &self.n)
    }
    pub fn is_zero(a: &BigUint) -> bool {
        a.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mont64_matches_naive() {
        let n = 0xffff_ffff_ffff_ffc5u64;
        let m = Mont64::new(n);
        let (a, b) = (0x1234_5678_9abc_def1u64, 0xfedc_ba98_7654_3210u64);
        let naive = ((a as u128 * b as u128) % n as u128) as u64;
        let got = m.from_mont(m.mul(m.to_mont(a), m.to_mont(b)));
        assert_eq!(got, naive);
    }

    #[test]
    fn mont128_matches_bigint() {
        let n: u128 = (1u128 << 127) - 1;
        let m = Mont128::new(n);
        let (a, b) = (0x1234_5678_9abc_def1_0fed_cba9_8765_4321u128, n - 12345);
        let expect = (BigUint::from(a) * BigUint::from(b)) % BigUint::from(n);
        let got = m.from_mont(m.mul(m.to_mont(a), m.to_mont(b)));
        assert_eq!(BigUint::from(got), expect);
    }

    #[test]
    fn wide_product() {
        let (h, l) = mul_wide(u128::MAX, u128::MAX);
        assert_eq!(h, u128::MAX - 1);
        assert_eq!(l, 1);
    }
}
