//! Zech-logarithm representation of small fields: nonzero elements are
//! stored as exponents of a generator g, with z(i) defined by
//! g^{z(i)} = 1 + g^i.

use num_traits::ToPrimitive;

use super::ext::{Elem, ExtField};

/// Sentinel log of zero.
pub const ZERO: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct ZechTable {
    order: u32,
    q: u32,
    generator: Elem,
    /// log → element index.
    exp: Vec<u32>,
    /// element index → log, ZERO for 0.
    log: Vec<u32>,
    zech: Vec<u32>,
    log_minus_one: u32,
}

impl ZechTable {
    /// Walk the powers of `g`, which must be primitive in `f`.
    pub fn build(f: &ExtField, g: &Elem) -> Self {
        let size = (f.order() - 1u32).to_usize().expect("small field");
        let order = size as u32;
        let q = f.ground().q();
        let mut exp = Vec::with_capacity(size);
        let mut log = vec![ZERO; size + 1];
        let x_is_gen = *g == f.x() && f.degree() > 1;
        let mut cur = f.one();
        for i in 0..order {
            let idx = f.index(&cur) as u32;
            assert_eq!(log[idx as usize], ZERO, "generator is not primitive");
            exp.push(idx);
            log[idx as usize] = i;
            cur = if x_is_gen {
                times_x(f, &cur)
            } else {
                f.mul(&cur, g)
            };
        }
        let k = f.ground();
        let zech = exp
            .iter()
            .map(|&idx| {
                let c0 = idx % q;
                let shifted = idx - c0 + k.add(c0, 1);
                log[shifted as usize]
            })
            .collect();
        let log_minus_one = log[f.index(&f.neg(&f.one())) as usize];
        ZechTable {
            order,
            q,
            generator: g.clone(),
            exp,
            log,
            zech,
            log_minus_one,
        }
    }

    /// q^n − 1.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn generator(&self) -> &Elem {
        &self.generator
    }

    /// z(i), or ZERO when 1 + g^i = 0.
    pub fn zech(&self, i: u32) -> u32 {
        self.zech[i as usize]
    }

    pub fn log_of_index(&self, idx: u64) -> u32 {
        self.log[idx as usize]
    }

    pub fn index_of_log(&self, l: u32) -> u64 {
        if l == ZERO {
            0
        } else {
            self.exp[l as usize] as u64
        }
    }

    pub fn log(&self, f: &ExtField, a: &Elem) -> u32 {
        self.log[f.index(a) as usize]
    }

    pub fn elem(&self, f: &ExtField, l: u32) -> Elem {
        f.from_index(self.index_of_log(l))
    }

    /// The ground-field size the indices are encoded with.
    pub fn q(&self) -> u32 {
        self.q
    }

    fn reduce(&self, v: u64) -> u32 {
        (v % self.order as u64) as u32
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == ZERO || b == ZERO {
            ZERO
        } else {
            self.reduce(a as u64 + b as u64)
        }
    }

    /// g^a + g^b = g^a (1 + g^{b−a}).
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if a == ZERO {
            return b;
        }
        if b == ZERO {
            return a;
        }
        let d = self.reduce(b as u64 + self.order as u64 - a as u64);
        let z = self.zech[d as usize];
        if z == ZERO {
            ZERO
        } else {
            self.reduce(a as u64 + z as u64)
        }
    }

    pub fn neg(&self, a: u32) -> u32 {
        self.mul(a, self.log_minus_one)
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        (a != ZERO).then(|| self.reduce(self.order as u64 - a as u64))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if a == ZERO {
            return if e == 0 { 0 } else { ZERO };
        }
        ((a as u128 * e as u128) % self.order as u128) as u32
    }
}

fn times_x(f: &ExtField, a: &Elem) -> Elem {
    let n = f.degree();
    let k = f.ground();
    let top = a[n - 1];
    let mut out = f.zero();
    out[1..n].copy_from_slice(&a[..n - 1]);
    if top != 0 {
        for (o, &m) in out.iter_mut().zip(f.modulus()) {
            *o = k.sub(*o, k.mul(top, m));
        }
    }
    out
}
