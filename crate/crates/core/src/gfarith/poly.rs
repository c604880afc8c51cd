//! Dense univariate polynomials over a ground field, low degree first.

use smallvec::SmallVec;

use super::ground::GroundField;

pub type Poly = SmallVec<[u32; 16]>;

/// Drop leading zero coefficients.
pub fn trim(a: &mut Poly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

/// Degree, or None for the zero polynomial.
pub fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn add(k: &GroundField, a: &[u32], b: &[u32]) -> Poly {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out: Poly = long.into();
    for (o, &s) in out.iter_mut().zip(short) {
        *o = k.add(*o, s);
    }
    trim(&mut out);
    out
}

pub fn sub(k: &GroundField, a: &[u32], b: &[u32]) -> Poly {
    let mut out: Poly = a.into();
    if out.len() < b.len() {
        out.resize(b.len(), 0);
    }
    for (o, &s) in out.iter_mut().zip(b) {
        *o = k.sub(*o, s);
    }
    trim(&mut out);
    out
}

pub fn scale(k: &GroundField, a: &[u32], c: u32) -> Poly {
    let mut out: Poly = a.iter().map(|&x| k.mul(x, c)).collect();
    trim(&mut out);
    out
}

pub fn mul(k: &GroundField, a: &[u32], b: &[u32]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Poly::new();
    }
    let mut out: Poly = SmallVec::from_elem(0, a.len() + b.len() - 1);
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = k.add(out[i + j], k.mul(x, y));
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(k: &GroundField, a: &[u32], b: &[u32]) -> (Poly, Poly) {
    let db = degree(b).expect("division by the zero polynomial");
    let lead_inv = k.inv(b[db]).expect("nonzero leading coefficient");
    let mut r: Poly = a.into();
    trim(&mut r);
    let Some(da) = degree(&r) else {
        return (Poly::new(), Poly::new());
    };
    if da < db {
        return (Poly::new(), r);
    }
    let mut quo: Poly = SmallVec::from_elem(0, da - db + 1);
    for i in (db..=da).rev() {
        let c = r[i];
        if c == 0 {
            continue;
        }
        let f = k.mul(c, lead_inv);
        quo[i - db] = f;
        for j in 0..=db {
            r[i - db + j] = k.sub(r[i - db + j], k.mul(f, b[j]));
        }
    }
    r.truncate(db);
    trim(&mut r);
    trim(&mut quo);
    (quo, r)
}

pub fn rem(k: &GroundField, a: &[u32], b: &[u32]) -> Poly {
    divrem(k, a, b).1
}

/// Scale to a monic polynomial (zero stays zero).
pub fn monic(k: &GroundField, a: &[u32]) -> Poly {
    match degree(a) {
        None => Poly::new(),
        Some(d) => scale(k, &a[..=d], k.inv(a[d]).unwrap()),
    }
}

/// Monic greatest common divisor.
pub fn gcd(k: &GroundField, a: &[u32], b: &[u32]) -> Poly {
    let mut x: Poly = a.into();
    let mut y: Poly = b.into();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(k, &x, &y);
        x = y;
        y = r;
    }
    monic(k, &x)
}

/// Evaluate at a ground-field point.
pub fn eval(k: &GroundField, a: &[u32], x: u32) -> u32 {
    a.iter().rev().fold(0, |acc, &c| k.add(k.mul(acc, x), c))
}
