//! Finite-field engine: the ground field F_q (q = p^m), its degree-n
//! extension, trace, irreducibility, and e-free/primitivity tests.

mod ext;
mod ground;
pub mod poly;
mod zech;

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use ext::{is_irreducible, is_irreducible_rabin, Elem, ExtField};
pub use ground::{GroundField, GROUND_TABLE_LIMIT};
pub use poly::Poly;
pub use zech::{ZechTable, ZERO as ZECH_ZERO};

use crate::ntheory::{factor_pow_minus_one, Factorization, NtError};

/// Fields with q^n at most this large get a Zech table.
pub const ZECH_LIMIT: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid field parameters: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arith(#[from] NtError),
}

/// Whether to attach a Zech table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZechMode {
    /// When q^n ≤ [`ZECH_LIMIT`].
    Auto,
    Off,
    /// ResourceLimit if the field is too large.
    Required,
}

/// q^n − 1 with its prime divisors and the cofactors (q^n − 1)/ℓ.
#[derive(Clone, Debug)]
pub struct GroupOrder {
    factorization: Factorization,
    cofactors: Vec<BigUint>,
    /// The same cofactors when they fit, for the fast path.
    cofactors_u128: Option<Vec<u128>>,
}

impl GroupOrder {
    pub fn new(factorization: Factorization) -> Self {
        let v = factorization.value().clone();
        let cofactors: Vec<BigUint> = factorization.primes().iter().map(|l| &v / l).collect();
        let cofactors_u128 = cofactors.iter().map(|c| c.to_u128()).collect();
        GroupOrder {
            factorization,
            cofactors,
            cofactors_u128,
        }
    }

    pub fn of(q: u64, n: u32) -> Result<Self, GfError> {
        Ok(Self::new(factor_pow_minus_one(&BigUint::from(q), n)?))
    }

    pub fn value(&self) -> &BigUint {
        self.factorization.value()
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    fn raise(&self, f: &ExtField, xi: &Elem, i: usize) -> Elem {
        match &self.cofactors_u128 {
            Some(c) => f.pow_u128(xi, c[i]),
            None => f.pow(xi, &self.cofactors[i]),
        }
    }

    /// ξ^{(q^n−1)/ℓ} ≠ 1 for every prime ℓ | q^n − 1 in `ell`. Primes of
    /// `ell` that do not divide q^n − 1 are a precondition violation.
    pub fn is_free_for(&self, f: &ExtField, xi: &Elem, ell: &[BigUint]) -> bool {
        if f.is_zero(xi) {
            return false;
        }
        let primes = self.factorization.primes();
        ell.iter().all(|l| {
            let i = primes
                .iter()
                .position(|p| p == l)
                .expect("e must divide q^n - 1");
            !f.is_one(&self.raise(f, xi, i))
        })
    }

    pub fn is_primitive(&self, f: &ExtField, xi: &Elem) -> bool {
        if f.is_zero(xi) {
            return false;
        }
        (0..self.cofactors.len()).all(|i| !f.is_one(&self.raise(f, xi, i)))
    }
}

/// F_{q^n} over F_q with everything the searches need.
#[derive(Clone, Debug)]
pub struct FieldCtx {
    ext: ExtField,
    order: GroupOrder,
    zech: Option<ZechTable>,
    seed: u64,
}

pub fn build_context(p: u32, m: u32, n: u32, seed: u64) -> Result<FieldCtx, GfError> {
    build_context_with(p, m, n, seed, ZechMode::Auto)
}

/// Both defining polynomials are found by seeded random search. The
/// extension polynomial is primitive: the class of x generates.
pub fn build_context_with(
    p: u32,
    m: u32,
    n: u32,
    seed: u64,
    mode: ZechMode,
) -> Result<FieldCtx, GfError> {
    if n == 0 {
        return Err(GfError::Invalid("extension degree must be positive".into()));
    }
    let q = (p as u64)
        .checked_pow(m)
        .filter(|&q| q <= u32::MAX as u64)
        .ok_or_else(|| GfError::ResourceLimit(format!("ground field {p}^{m} too large")))?;
    let size = BigUint::from(q).pow(n);
    let small = size <= BigUint::from(ZECH_LIMIT);
    if mode == ZechMode::Required && !small {
        return Err(GfError::ResourceLimit(format!(
            "{q}^{n} exceeds the Zech table limit"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = Arc::new(GroundField::new(p, m, &mut rng)?);
    let order = GroupOrder::of(q, n)?;
    let ext = loop {
        let mut c: Poly = (0..n).map(|_| rng.gen_range(0..q as u32)).collect();
        c.push(1);
        if c[0] == 0 && n > 1 {
            continue;
        }
        let f = ExtField::new(k.clone(), c);
        if f.modulus_is_irreducible() && order.is_primitive(&f, &f.x()) {
            break f;
        }
    };
    let zech = (small && mode != ZechMode::Off).then(|| ZechTable::build(&ext, &ext.x()));
    Ok(FieldCtx {
        ext,
        order,
        zech,
        seed,
    })
}

impl FieldCtx {
    /// Context over an explicit extension polynomial (must be irreducible).
    pub fn from_modulus(
        k: Arc<GroundField>,
        modulus: Poly,
        with_zech: bool,
    ) -> Result<Self, GfError> {
        let f = ExtField::new(k, modulus);
        if !f.modulus_is_irreducible() {
            return Err(GfError::Invalid("extension polynomial is reducible".into()));
        }
        let q = f.ground().q() as u64;
        let order = GroupOrder::of(q, f.degree() as u32)?;
        let zech = if with_zech {
            let g = find_generator(&f, &order);
            Some(ZechTable::build(&f, &g))
        } else {
            None
        };
        Ok(FieldCtx {
            ext: f,
            order,
            zech,
            seed: 0,
        })
    }

    pub fn ext(&self) -> &ExtField {
        &self.ext
    }

    pub fn ground(&self) -> &GroundField {
        self.ext.ground()
    }

    pub fn ground_arc(&self) -> &Arc<GroundField> {
        self.ext.ground_arc()
    }

    pub fn p(&self) -> u32 {
        self.ground().p()
    }

    pub fn q(&self) -> u32 {
        self.ground().q()
    }

    pub fn n(&self) -> usize {
        self.ext.degree()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// q^n − 1 and its factorization.
    pub fn group_order(&self) -> &GroupOrder {
        &self.order
    }

    pub fn zech(&self) -> Option<&ZechTable> {
        self.zech.as_ref()
    }

    /// The stored generator: the Zech generator if present, else x.
    pub fn generator(&self) -> Elem {
        match &self.zech {
            Some(z) => z.generator().clone(),
            None => self.ext.x(),
        }
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, GfError> {
        self.ext.inv(a).ok_or(GfError::DivisionByZero)
    }

    pub fn trace(&self, a: &Elem) -> u32 {
        self.ext.trace(a)
    }

    /// ξ is e-free iff ξ^{(q^n−1)/ℓ} ≠ 1 for each prime ℓ | e.
    pub fn is_e_free(&self, xi: &Elem, e: &BigUint) -> bool {
        if e.is_one() {
            return !self.ext.is_zero(xi);
        }
        assert!(
            (self.order.value() % e) == BigUint::from(0u32),
            "e must divide q^n - 1"
        );
        let ell: Vec<BigUint> = self
            .order
            .factorization()
            .primes()
            .into_iter()
            .filter(|l| (e % l) == BigUint::from(0u32))
            .collect();
        self.order.is_free_for(&self.ext, xi, &ell)
    }

    pub fn is_primitive(&self, gamma: &Elem) -> bool {
        self.order.is_primitive(&self.ext, gamma)
    }

    /// Every element, in index order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        let total = self.ext.order().to_u64().expect("enumerable field");
        (0..total).map(move |i| self.ext.from_index(i))
    }
}

/// Smallest-index primitive element.
pub fn find_generator(f: &ExtField, order: &GroupOrder) -> Elem {
    let total = f.order().to_u64().unwrap_or(u64::MAX);
    (1..total)
        .map(|i| f.from_index(i))
        .find(|e| order.is_primitive(f, e))
        .expect("a finite field has a primitive element")
}
