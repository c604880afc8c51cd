//! F_q[x]/(P) for a monic P of degree n. When P is irreducible this is
//! F_{q^n}; the irreducibility tests below run in the same ring.

use std::sync::Arc;

use num_bigint::BigUint;
use rand::Rng;
use smallvec::SmallVec;

use super::ground::GroundField;
use super::poly::{self, Poly};
use crate::ntheory::factorize_u64;

/// An element: exactly n coefficients, low degree first.
pub type Elem = Poly;

#[derive(Clone, Debug)]
pub struct ExtField {
    k: Arc<GroundField>,
    n: usize,
    modulus: Poly,
    /// frob[i] = x^{iq} mod P, so (Σ c_i x^i)^q = Σ c_i frob[i].
    frob: Vec<Elem>,
    /// trace_form[i] = Σ over the roots of P of root^i.
    trace_form: Vec<u32>,
}

impl ExtField {
    /// The quotient ring by a monic polynomial of degree ≥ 1. Panics on a
    /// non-monic or constant modulus.
    pub fn new(k: Arc<GroundField>, modulus: Poly) -> Self {
        let mut modulus = modulus;
        poly::trim(&mut modulus);
        let n = modulus
            .len()
            .checked_sub(1)
            .filter(|&n| n >= 1)
            .expect("degree ≥ 1");
        assert_eq!(modulus[n], 1, "modulus must be monic");
        let trace_form = newton_power_sums(&k, &modulus);
        let mut f = ExtField {
            k,
            n,
            modulus,
            frob: Vec::new(),
            trace_form,
        };
        let xq = f.pow_u128(&f.x(), f.k.q() as u128);
        let mut frob = Vec::with_capacity(n);
        let mut cur = f.one();
        for _ in 0..n {
            frob.push(cur.clone());
            cur = f.mul(&cur, &xq);
        }
        f.frob = frob;
        f
    }

    /// The field F_q[x]/(P) if P is irreducible.
    pub fn new_irreducible(k: &GroundField, modulus: Poly) -> Option<Self> {
        let f = Self::new(Arc::new(k.clone()), modulus);
        f.modulus_is_irreducible().then_some(f)
    }

    pub fn ground(&self) -> &GroundField {
        &self.k
    }

    pub fn ground_arc(&self) -> &Arc<GroundField> {
        &self.k
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// q^n.
    pub fn order(&self) -> BigUint {
        BigUint::from(self.k.q()).pow(self.n as u32)
    }

    pub fn zero(&self) -> Elem {
        SmallVec::from_elem(0, self.n)
    }

    pub fn one(&self) -> Elem {
        self.constant(1)
    }

    pub fn constant(&self, c: u32) -> Elem {
        let mut e = self.zero();
        e[0] = c;
        e
    }

    /// The class of x (reduced when n = 1).
    pub fn x(&self) -> Elem {
        if self.n == 1 {
            self.constant(self.k.neg(self.modulus[0]))
        } else {
            let mut e = self.zero();
            e[1] = 1;
            e
        }
    }

    /// Reduce an arbitrary coefficient vector.
    pub fn from_coeffs(&self, c: &[u32]) -> Elem {
        let mut r = if c.len() > self.n {
            poly::rem(&self.k, c, &self.modulus)
        } else {
            c.into()
        };
        r.resize(self.n, 0);
        r
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self, a: &Elem) -> bool {
        a[0] == 1 && a[1..].iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(&x, &y)| self.k.add(x, y)).collect()
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter().zip(b).map(|(&x, &y)| self.k.sub(x, y)).collect()
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        a.iter().map(|&x| self.k.neg(x)).collect()
    }

    pub fn scale(&self, a: &Elem, c: u32) -> Elem {
        a.iter().map(|&x| self.k.mul(x, c)).collect()
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let n = self.n;
        let k = &*self.k;
        let mut t: SmallVec<[u32; 32]> = SmallVec::from_elem(0, 2 * n - 1);
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    t[i + j] = k.add(t[i + j], k.mul(x, y));
                }
            }
        }
        for i in (n..2 * n - 1).rev() {
            let c = t[i];
            if c == 0 {
                continue;
            }
            for j in 0..n {
                let m = self.modulus[j];
                if m != 0 {
                    t[i - n + j] = k.sub(t[i - n + j], k.mul(c, m));
                }
            }
        }
        t.truncate(n);
        t.into_iter().collect()
    }

    pub fn square(&self, a: &Elem) -> Elem {
        self.mul(a, a)
    }

    pub fn pow_u128(&self, a: &Elem, mut e: u128) -> Elem {
        let mut base = a.clone();
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.square(&base);
            }
        }
        r
    }

    pub fn pow(&self, a: &Elem, e: &BigUint) -> Elem {
        let mut r = self.one();
        for i in (0..e.bits()).rev() {
            r = self.square(&r);
            if e.bit(i) {
                r = self.mul(&r, a);
            }
        }
        r
    }

    /// Inverse via the extended Euclidean algorithm; None for non-units.
    pub fn inv(&self, a: &Elem) -> Option<Elem> {
        let k = &*self.k;
        let mut r0: Poly = self.modulus.clone();
        let mut r1: Poly = a.clone();
        poly::trim(&mut r1);
        if r1.is_empty() {
            return None;
        }
        let mut s0 = Poly::new();
        let mut s1: Poly = smallvec::smallvec![1];
        while !r1.is_empty() {
            let (quo, r) = poly::divrem(k, &r0, &r1);
            let s = poly::sub(k, &s0, &poly::mul(k, &quo, &s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if r0.len() != 1 {
            return None;
        }
        let c = k.inv(r0[0])?;
        Some(self.from_coeffs(&poly::scale(k, &s0, c)))
    }

    /// ξ ↦ ξ^q.
    pub fn frobenius(&self, a: &Elem) -> Elem {
        let mut out = self.zero();
        for (c, col) in a.iter().zip(&self.frob) {
            if *c == 0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(col) {
                *o = self.k.add(*o, self.k.mul(*c, v));
            }
        }
        out
    }

    /// Σ_{i<n} ξ^{q^i}; the result lies in F_q.
    pub fn trace_frobenius(&self, a: &Elem) -> u32 {
        let mut acc = a.clone();
        let mut cur = a.clone();
        for _ in 1..self.n {
            cur = self.frobenius(&cur);
            acc = self.add(&acc, &cur);
        }
        debug_assert!(acc[1..].iter().all(|&c| c == 0), "trace left F_q");
        acc[0]
    }

    /// The trace as the linear form Σ c_i T(x^i), with T(x^i) the power
    /// sums of the roots of P from Newton's identities.
    pub fn trace(&self, a: &Elem) -> u32 {
        a.iter()
            .zip(&self.trace_form)
            .fold(0, |acc, (&c, &t)| self.k.add(acc, self.k.mul(c, t)))
    }

    pub fn trace_form(&self) -> &[u32] {
        &self.trace_form
    }

    /// x^{q^i} mod P for i = 0..=n.
    fn frobenius_orbit_of_x(&self) -> Vec<Elem> {
        let mut out = Vec::with_capacity(self.n + 1);
        let mut cur = self.x();
        out.push(cur.clone());
        for _ in 0..self.n {
            cur = self.frobenius(&cur);
            out.push(cur.clone());
        }
        out
    }

    fn coprime_with_modulus(&self, a: &Elem) -> bool {
        poly::gcd(&self.k, &self.modulus, a).len() == 1
    }

    /// Rabin: P of degree n is irreducible iff x^{q^n} ≡ x and
    /// gcd(x^{q^{n/ℓ}} − x, P) = 1 for every prime ℓ | n.
    pub fn modulus_is_irreducible_rabin(&self) -> bool {
        let n = self.n;
        if n == 1 {
            return true;
        }
        let orbit = self.frobenius_orbit_of_x();
        let x = self.x();
        if orbit[n] != x {
            return false;
        }
        let ell = factorize_u64(n as u64).unwrap().primes_u64().unwrap();
        ell.iter()
            .all(|&l| self.coprime_with_modulus(&self.sub(&orbit[n / l as usize], &x)))
    }

    /// Ben-Or: irreducible iff gcd(x^{q^i} − x, P) = 1 for i ≤ n/2.
    pub fn modulus_is_irreducible(&self) -> bool {
        let n = self.n;
        if n == 1 {
            return true;
        }
        if self.modulus[0] == 0 {
            return false;
        }
        let x = self.x();
        let mut cur = x.clone();
        for _ in 1..=n / 2 {
            cur = self.frobenius(&cur);
            if !self.coprime_with_modulus(&self.sub(&cur, &x)) {
                return false;
            }
        }
        true
    }

    pub fn random<R: Rng>(&self, rng: &mut R) -> Elem {
        (0..self.n).map(|_| rng.gen_range(0..self.k.q())).collect()
    }

    /// Σ c_i q^i, a bijection onto 0..q^n.
    pub fn index(&self, a: &Elem) -> u64 {
        let q = self.k.q() as u64;
        a.iter().rev().fold(0, |acc, &c| acc * q + c as u64)
    }

    pub fn from_index(&self, mut v: u64) -> Elem {
        let q = self.k.q() as u64;
        (0..self.n)
            .map(|_| {
                let c = (v % q) as u32;
                v /= q;
                c
            })
            .collect()
    }
}

/// Power sums p_0..p_{n−1} of the roots of a monic P via Newton's
/// identities: p_k = −(k a_{n−k} + Σ_{i=1}^{k−1} a_{n−i} p_{k−i}).
fn newton_power_sums(k: &GroundField, p: &[u32]) -> Vec<u32> {
    let n = p.len() - 1;
    let mut s = Vec::with_capacity(n);
    s.push(k.from_int(n as i64));
    for kk in 1..n {
        let mut acc = k.mul(k.from_int(kk as i64), p[n - kk]);
        for i in 1..kk {
            acc = k.add(acc, k.mul(p[n - i], s[kk - i]));
        }
        s.push(k.neg(acc));
    }
    s
}

/// Deterministic irreducibility test over F_q (Ben-Or).
pub fn is_irreducible(k: &GroundField, p: &[u32]) -> bool {
    let mut m: Poly = p.into();
    poly::trim(&mut m);
    match poly::degree(&m) {
        None | Some(0) => false,
        Some(_) => {
            let m = poly::monic(k, &m);
            ExtField::new(Arc::new(k.clone()), m).modulus_is_irreducible()
        }
    }
}

/// Deterministic irreducibility test over F_q (Rabin).
pub fn is_irreducible_rabin(k: &GroundField, p: &[u32]) -> bool {
    let mut m: Poly = p.into();
    poly::trim(&mut m);
    match poly::degree(&m) {
        None | Some(0) => false,
        Some(_) => {
            let m = poly::monic(k, &m);
            ExtField::new(Arc::new(k.clone()), m).modulus_is_irreducible_rabin()
        }
    }
}
