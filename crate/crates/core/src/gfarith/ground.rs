//! The ground field F_q, q = p^m.
//!
//! Elements are integers in 0..q. For m = 1 that is the residue itself; for
//! m > 1 it is Σ d_i p^i where d_0 + d_1 y + … is the coefficient vector in
//! F_p[y]/(h), and multiplication goes through log/exp tables.

use rand::Rng;

use super::ext::ExtField;
use super::poly::Poly;
use super::GfError;
use crate::ntheory::{factorize_u64, is_prime_u64};

/// Ground fields with m > 1 are table-driven and limited to this size.
pub const GROUND_TABLE_LIMIT: u32 = 1 << 24;
const ADD_TABLE_LIMIT: u32 = 1 << 10;

#[derive(Clone, Debug)]
pub struct GroundField {
    p: u32,
    m: u32,
    q: u32,
    /// Defining polynomial of F_q over F_p, monic, low degree first.
    /// `[0, 1]` for prime fields.
    modulus: Vec<u32>,
    generator: u32,
    /// m > 1: exp[i] = g^i for i < q − 1, log[exp[i]] = i.
    exp: Vec<u32>,
    log: Vec<u32>,
    add_tab: Vec<u16>,
    neg_tab: Vec<u32>,
}

impl GroundField {
    pub fn prime(p: u32) -> Result<Self, GfError> {
        if !is_prime_u64(p as u64) {
            return Err(GfError::Invalid(format!("{p} is not prime")));
        }
        let generator = prime_primitive_root(p);
        Ok(GroundField {
            p,
            m: 1,
            q: p,
            modulus: vec![0, 1],
            generator,
            exp: Vec::new(),
            log: Vec::new(),
            add_tab: Vec::new(),
            neg_tab: Vec::new(),
        })
    }

    /// F_{p^m} with a defining polynomial found by seeded random search.
    /// The polynomial is primitive, so the class of y generates F_q^*.
    pub fn new<R: Rng>(p: u32, m: u32, rng: &mut R) -> Result<Self, GfError> {
        if m == 0 {
            return Err(GfError::Invalid("ground degree must be positive".into()));
        }
        let base = Self::prime(p)?;
        if m == 1 {
            return Ok(base);
        }
        let q = (p as u64)
            .checked_pow(m)
            .filter(|&q| q <= GROUND_TABLE_LIMIT as u64);
        let Some(q) = q else {
            return Err(GfError::ResourceLimit(format!(
                "ground field {p}^{m} too large"
            )));
        };
        let order = factorize_u64(q - 1).map_err(|e| GfError::Invalid(e.to_string()))?;
        let ell: Vec<u64> = order.primes_u64().expect("small order");
        loop {
            let mut h: Poly = (0..m).map(|_| rng.gen_range(0..p)).collect();
            if h[0] == 0 {
                continue;
            }
            h.push(1);
            let Some(ext) = ExtField::new_irreducible(&base, h.clone()) else {
                continue;
            };
            let y = ext.x();
            let primitive = ell
                .iter()
                .all(|l| !ext.is_one(&ext.pow_u128(&y, ((q - 1) / l) as u128)));
            if primitive {
                return Ok(Self::from_primitive_modulus(p, m, h.to_vec()));
            }
        }
    }

    /// F_{p^m} = F_p[y]/(h) for a primitive polynomial h (unchecked).
    fn from_primitive_modulus(p: u32, m: u32, h: Vec<u32>) -> Self {
        let q = p.pow(m);
        let mut exp = Vec::with_capacity(q as usize - 1);
        let mut log = vec![u32::MAX; q as usize];
        let mut digits = vec![0u32; m as usize];
        digits[0] = 1;
        for i in 0..q - 1 {
            let idx = encode(&digits, p);
            exp.push(idx);
            log[idx as usize] = i;
            // multiply by y modulo the monic h
            let top = digits[m as usize - 1];
            for k in (1..m as usize).rev() {
                digits[k] = digits[k - 1];
            }
            digits[0] = 0;
            if top != 0 {
                for (k, d) in digits.iter_mut().enumerate() {
                    let sub = (top as u64 * h[k] as u64 % p as u64) as u32;
                    *d = (*d + p - sub) % p;
                }
            }
        }
        debug_assert_eq!(encode(&digits, p), 1, "h is not primitive");
        let neg_tab = (0..q)
            .map(|a| digit_map(a, p, m, |d, _| (p - d) % p, 0))
            .collect();
        let add_tab = if q <= ADD_TABLE_LIMIT {
            let mut t = Vec::with_capacity((q * q) as usize);
            for a in 0..q {
                for b in 0..q {
                    t.push(digit_map(a, p, m, |d, e| (d + e) % p, b) as u16);
                }
            }
            t
        } else {
            Vec::new()
        };
        GroundField {
            p,
            m,
            q,
            modulus: h,
            generator: p,
            exp,
            log,
            add_tab,
            neg_tab,
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.m == 1
    }

    /// A fixed generator of F_q^*.
    pub fn generator(&self) -> u32 {
        self.generator
    }

    /// The image of an integer under Z → F_p ⊂ F_q.
    pub fn from_int(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.m == 1 {
            let s = a as u64 + b as u64;
            (if s >= self.p as u64 {
                s - self.p as u64
            } else {
                s
            }) as u32
        } else if self.p == 2 {
            a ^ b
        } else if !self.add_tab.is_empty() {
            self.add_tab[(a * self.q + b) as usize] as u32
        } else {
            digit_map(a, self.p, self.m, |d, e| (d + e) % self.p, b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.m == 1 {
            if a == 0 {
                0
            } else {
                self.p - a
            }
        } else {
            self.neg_tab[a as usize]
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if self.m == 1 {
            (a as u64 * b as u64 % self.p as u64) as u32
        } else if a == 0 || b == 0 {
            0
        } else {
            let n = self.q - 1;
            let s = self.log[a as usize] + self.log[b as usize];
            self.exp[(if s >= n { s - n } else { s }) as usize]
        }
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        if self.m == 1 {
            Some(self.pow(a, self.p as u64 - 2))
        } else {
            let n = self.q - 1;
            let l = self.log[a as usize];
            Some(self.exp[((n - l) % n) as usize])
        }
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        r
    }

    /// g^i for the fixed generator.
    pub fn gen_pow(&self, i: u64) -> u32 {
        if self.m == 1 {
            self.pow(self.generator, i)
        } else {
            self.exp[(i % (self.q as u64 - 1)) as usize]
        }
    }

    /// Coefficients over F_p (low degree first) of an element.
    pub fn digits(&self, a: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.m as usize);
        let mut v = a;
        for _ in 0..self.m {
            out.push(v % self.p);
            v /= self.p;
        }
        out
    }
}

fn encode(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

fn digit_map(a: u32, p: u32, m: u32, f: impl Fn(u32, u32) -> u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut scale = 1;
    for _ in 0..m {
        out += f(a % p, b % p) * scale;
        a /= p;
        b /= p;
        scale *= p;
    }
    out
}

fn prime_primitive_root(p: u32) -> u32 {
    if p == 2 {
        return 1;
    }
    let ell = factorize_u64(p as u64 - 1)
        .expect("u32 factorization")
        .primes_u64()
        .expect("small primes");
    let pm = p as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % pm;
            }
            b = b * b % pm;
            e >>= 1;
        }
        r
    };
    (2..p)
        .find(|&g| ell.iter().all(|l| powmod(g as u64, (pm - 1) / l) != 1))
        .expect("primitive root exists")
}
