//! Direct search for ξ with prescribed traces of ξ and ξ⁻¹ and ξ + ξ⁻¹
//! primitive, by drawing random polynomials whose roots have the right
//! traces.
//!
//! A monic P of degree n with x^{n−1} coefficient −a, x coefficient −c₀b
//! and constant term c₀ has roots summing to a and reciprocal roots
//! summing to b. When P is irreducible, ξ = x mod P is such a root and
//! ξ⁻¹ can be read off P itself.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gfarith::{
    is_irreducible, is_irreducible_rabin, Elem, ExtField, FieldCtx, GfError, GroundField,
    GroupOrder, Poly, ZECH_ZERO,
};
use crate::ntheory::{factor_pow_minus_one, ratio_to_f64, NtError};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("degree {0} is below 3")]
    Degree(usize),
    #[error("polynomial does not have the trace shape: {0}")]
    ShapeMismatch(String),
    #[error("witness rejected: {0}")]
    BadWitness(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Arith(#[from] NtError),
}

/// How the constant term c₀ is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum C0Mode {
    #[default]
    RandomNonzero,
    /// c₀ = −1, so every root has norm (−1)^{n+1}.
    MinusOne,
}

/// x^n − a x^{n−1} + Σ_{k=2}^{n−2} c_k x^k − c₀ b x + c₀, low degree first.
/// `c` holds c₂, …, c_{n−2}.
pub fn trace_polynomial(
    k: &GroundField,
    n: usize,
    a: u32,
    b: u32,
    c0: u32,
    c: &[u32],
) -> Result<Poly, VerifyError> {
    if n < 3 {
        return Err(VerifyError::Degree(n));
    }
    if c0 == 0 {
        return Err(VerifyError::ShapeMismatch("c0 must be nonzero".into()));
    }
    if c.len() != n - 3 {
        return Err(VerifyError::ShapeMismatch(format!(
            "expected {} free coefficients, got {}",
            n - 3,
            c.len()
        )));
    }
    let mut p: Poly = std::iter::repeat(0).take(n + 1).collect();
    p[n] = 1;
    p[n - 1] = k.neg(a);
    p[0] = c0;
    p[1] = k.neg(k.mul(c0, b));
    for (i, &ck) in c.iter().enumerate() {
        p[i + 2] = ck;
    }
    Ok(p)
}

/// Algorithm step: draw c₀ per `mode` and c₂, …, c_{n−2} uniformly.
pub fn random_trace_polynomial<R: Rng>(
    k: &GroundField,
    n: usize,
    a: u32,
    b: u32,
    rng: &mut R,
    mode: C0Mode,
) -> Result<Poly, VerifyError> {
    if n < 3 {
        return Err(VerifyError::Degree(n));
    }
    let q = k.q();
    let c0 = match mode {
        C0Mode::RandomNonzero => rng.gen_range(1..q),
        C0Mode::MinusOne => k.neg(1),
    };
    let c: Vec<u32> = (0..n - 3).map(|_| rng.gen_range(0..q)).collect();
    trace_polynomial(k, n, a, b, c0, &c)
}

/// Recover (c₀, [c₂, …, c_{n−2}]) from P, checking the shape for (a, b).
pub fn trace_shape(
    k: &GroundField,
    p: &[u32],
    a: u32,
    b: u32,
) -> Result<(u32, Vec<u32>), VerifyError> {
    let n = p
        .len()
        .checked_sub(1)
        .ok_or_else(|| VerifyError::ShapeMismatch("empty".into()))?;
    if n < 3 {
        return Err(VerifyError::Degree(n));
    }
    if p[n] != 1 {
        return Err(VerifyError::ShapeMismatch("not monic".into()));
    }
    let c0 = p[0];
    if c0 == 0 {
        return Err(VerifyError::ShapeMismatch("zero constant term".into()));
    }
    if p[n - 1] != k.neg(a) {
        return Err(VerifyError::ShapeMismatch(format!(
            "x^{} coefficient is not -a",
            n - 1
        )));
    }
    if p[1] != k.neg(k.mul(c0, b)) {
        return Err(VerifyError::ShapeMismatch(
            "x coefficient is not -c0*b".into(),
        ));
    }
    Ok((c0, p[2..n - 1].to_vec()))
}

/// γ = b − c₀⁻¹((c₂ − c₀)x + Σ_{k=2}^{n−3} c_{k+1} x^k − a x^{n−2} + x^{n−1})
/// as an element of F_q[x]/(P), where c₂ = 0 when n = 3.
pub fn gamma_closed_form(k: &GroundField, p: &[u32], a: u32, b: u32) -> Result<Elem, VerifyError> {
    let (c0, c) = trace_shape(k, p, a, b)?;
    let n = p.len() - 1;
    let coeff = |i: usize| if i >= 2 && i <= n - 2 { c[i - 2] } else { 0 };
    let mut inner: Elem = std::iter::repeat(0).take(n).collect();
    inner[1] = k.sub(coeff(2), c0);
    for i in 2..=n.saturating_sub(3) {
        inner[i] = k.add(inner[i], coeff(i + 1));
    }
    inner[n - 2] = k.sub(inner[n - 2], a);
    inner[n - 1] = k.add(inner[n - 1], 1);
    let s = k.neg(k.inv(c0).expect("c0 is nonzero"));
    let mut g: Elem = inner.iter().map(|&v| k.mul(s, v)).collect();
    g[0] = k.add(g[0], b);
    Ok(g)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyWitness {
    pub a: u32,
    pub b: u32,
    /// c₀, c₂, …, c_{n−2}.
    pub poly_coeffs: Vec<u32>,
    /// The full polynomial, low degree first.
    pub poly: Vec<u32>,
    /// Random polynomials drawn for this pair.
    pub trials: u64,
    /// Found by the exhaustive scan after the trial cap.
    pub exhaustive: bool,
    /// In F_q[x]/(poly); always the class of x.
    pub xi: Vec<u32>,
    pub gamma: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PairStatus {
    Witnessed(VerifyWitness),
    /// Every nonzero ξ was checked and none qualifies.
    ProvenImpossible {
        scanned: u64,
        trials: u64,
    },
}

impl PairStatus {
    pub fn witness(&self) -> Option<&VerifyWitness> {
        match self {
            PairStatus::Witnessed(w) => Some(w),
            PairStatus::ProvenImpossible { .. } => None,
        }
    }

    pub fn trials(&self) -> u64 {
        match self {
            PairStatus::Witnessed(w) => w.trials,
            PairStatus::ProvenImpossible { trials, .. } => *trials,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    /// Positions of a and b in the list 0, g, g², …, g^{q−1}.
    pub i: u32,
    pub j: u32,
    pub a: u32,
    pub b: u32,
    #[serde(flatten)]
    pub status: PairStatus,
}

fn witness_from_poly(
    k: &GroundField,
    p: &[u32],
    a: u32,
    b: u32,
    trials: u64,
    exhaustive: bool,
) -> Result<VerifyWitness, VerifyError> {
    let (c0, c) = trace_shape(k, p, a, b)?;
    let gamma = gamma_closed_form(k, p, a, b)?;
    let mut xi = vec![0; p.len() - 1];
    xi[1] = 1;
    let mut poly_coeffs = vec![c0];
    poly_coeffs.extend(c);
    Ok(VerifyWitness {
        a,
        b,
        poly_coeffs,
        poly: p.to_vec(),
        trials,
        exhaustive,
        xi,
        gamma: gamma.to_vec(),
    })
}

/// Recheck a witness from scratch: Rabin irreducibility, both traces by
/// Frobenius sums, the inverse by extended gcd, and primitivity of γ.
pub fn validate_witness(
    k: &Arc<GroundField>,
    order: &GroupOrder,
    w: &VerifyWitness,
) -> Result<(), VerifyError> {
    let bad = |m: &str| Err(VerifyError::BadWitness(m.to_string()));
    let n = w.poly.len().saturating_sub(1);
    if n < 3 || w.xi.len() != n || w.gamma.len() != n {
        return bad("inconsistent degrees");
    }
    let (c0, c) = trace_shape(k, &w.poly, w.a, w.b)?;
    if w.poly_coeffs.first() != Some(&c0) || w.poly_coeffs[1..] != c[..] {
        return bad("coefficient list does not match the polynomial");
    }
    if !is_irreducible_rabin(k, &w.poly) {
        return bad("polynomial is reducible");
    }
    let f = ExtField::new(k.clone(), w.poly.iter().copied().collect());
    let xi = f.from_coeffs(&w.xi);
    let Some(inv) = f.inv(&xi) else {
        return bad("xi is zero");
    };
    if f.trace_frobenius(&xi) != w.a {
        return bad("trace of xi");
    }
    if f.trace_frobenius(&inv) != w.b {
        return bad("trace of xi^-1");
    }
    let gamma = f.add(&xi, &inv);
    if gamma[..] != w.gamma[..] {
        return bad("gamma is not xi + xi^-1");
    }
    if !order.is_primitive(&f, &gamma) {
        return bad("gamma is not primitive");
    }
    Ok(())
}

/// The witness for (b, a) given by ξ⁻¹, whose minimal polynomial is the
/// reversal of P scaled by c₀⁻¹.
pub fn swap_witness(k: &GroundField, w: &VerifyWitness) -> Result<VerifyWitness, VerifyError> {
    let c0 = *w
        .poly
        .first()
        .ok_or_else(|| VerifyError::ShapeMismatch("empty".into()))?;
    let s = k
        .inv(c0)
        .ok_or_else(|| VerifyError::ShapeMismatch("zero constant term".into()))?;
    let rev: Vec<u32> = w.poly.iter().rev().map(|&v| k.mul(s, v)).collect();
    witness_from_poly(k, &rev, w.b, w.a, w.trials, w.exhaustive)
}

/// q^{n−2}, saturating.
pub fn default_trial_cap(q: u32, n: usize) -> u64 {
    (q as u64)
        .checked_pow(n.saturating_sub(2) as u32)
        .unwrap_or(u64::MAX)
}

/// n(q^n − 1)/φ(q^n − 1).
pub fn expected_trials_exact(q: u64, n: u32) -> Result<BigRational, VerifyError> {
    let f = factor_pow_minus_one(&BigUint::from(q), n)?;
    let num = f.value() * BigUint::from(n);
    Ok(BigRational::new(num.into(), f.euler_phi().into()))
}

pub fn expected_trials(q: u64, n: u32) -> Result<f64, VerifyError> {
    Ok(ratio_to_f64(&expected_trials_exact(q, n)?))
}

/// Random trials up to `trial_cap`, then a scan of the whole field.
pub fn verify_pair<R: Rng>(
    ctx: &FieldCtx,
    a: u32,
    b: u32,
    rng: &mut R,
    trial_cap: u64,
    mode: C0Mode,
) -> Result<PairStatus, VerifyError> {
    let k = ctx.ground_arc();
    let n = ctx.n();
    if n < 3 {
        return Err(VerifyError::Degree(n));
    }
    let order = ctx.group_order();
    let mut trials = 0u64;
    while trials < trial_cap.max(1) {
        trials += 1;
        let p = random_trace_polynomial(k, n, a, b, rng, mode)?;
        if !is_irreducible(k, &p) {
            continue;
        }
        let f = ExtField::new(k.clone(), p.clone());
        let gamma = f.from_coeffs(&gamma_closed_form(k, &p, a, b)?);
        if order.is_primitive(&f, &gamma) {
            let w = witness_from_poly(k, &p, a, b, trials, false)?;
            validate_witness(k, order, &w)?;
            return Ok(PairStatus::Witnessed(w));
        }
    }
    match exhaustive_search(ctx, a, b) {
        Ok(xi) => {
            let p = minimal_polynomial(ctx.ext(), &xi);
            let w = witness_from_poly(k, &p, a, b, trials, true)?;
            validate_witness(k, order, &w)?;
            Ok(PairStatus::Witnessed(w))
        }
        Err(scanned) => Ok(PairStatus::ProvenImpossible { scanned, trials }),
    }
}

/// The first qualifying ξ in the context field, or the number of nonzero
/// elements scanned.
fn exhaustive_search(ctx: &FieldCtx, a: u32, b: u32) -> Result<Elem, u64> {
    let f = ctx.ext();
    let total = f.order().to_u64().expect("enumerable field") - 1;
    if let Some(z) = ctx.zech() {
        let big_n = z.order() as u64;
        for t in 0..z.order() {
            let xi = z.elem(f, t);
            if f.trace(&xi) != a {
                continue;
            }
            let ti = z.inv(t).expect("nonzero");
            if f.trace(&z.elem(f, ti)) != b {
                continue;
            }
            let g = z.add(t, ti);
            if g != ZECH_ZERO && (g as u64).gcd(&big_n) == 1 {
                return Ok(xi);
            }
        }
        return Err(total);
    }
    for idx in 1..=total {
        let xi = f.from_index(idx);
        if f.trace(&xi) != a {
            continue;
        }
        let inv = f.inv(&xi).expect("nonzero");
        if f.trace(&inv) == b && ctx.is_primitive(&f.add(&xi, &inv)) {
            return Ok(xi);
        }
    }
    Err(total)
}

/// Π (X − ξ^{q^i}) over the conjugates; its coefficients lie in F_q. The
/// degree is n only when ξ generates the extension, which holds whenever
/// ξ + ξ⁻¹ is primitive.
fn minimal_polynomial(f: &ExtField, xi: &Elem) -> Poly {
    let n = f.degree();
    let mut acc: Vec<Elem> = vec![f.one()];
    let mut conj = xi.clone();
    for _ in 0..n {
        let mut next = vec![f.zero(); acc.len() + 1];
        for (i, c) in acc.iter().enumerate() {
            next[i + 1] = f.add(&next[i + 1], c);
            next[i] = f.sub(&next[i], &f.mul(c, &conj));
        }
        acc = next;
        conj = f.frobenius(&conj);
    }
    acc.iter()
        .map(|c| {
            debug_assert!(c[1..].iter().all(|&v| v == 0));
            c[0]
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Defaults to q^{n−2}.
    pub trial_cap: Option<u64>,
    pub c0_mode: C0Mode,
    /// For q ≡ 1 (mod 4), skip (a, b) when (−a, −b) is handled.
    pub negation_reduction: bool,
    /// Explicit (a, b) pairs instead of the full triangle.
    pub pairs: Option<Vec<(u32, u32)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub q: u32,
    pub n: usize,
    pub p: u32,
    /// Defining polynomial of F_q over F_p; ground elements are encoded
    /// as integers through it, little-endian in p.
    pub ground_modulus: Vec<u32>,
    pub ground_generator: u32,
    pub seed: u64,
    pub c0_mode: C0Mode,
    pub trial_cap: u64,
    pub negation_reduction: bool,
    pub expected_trials: f64,
    pub pairs: Vec<PairOutcome>,
    /// Pairs covered by the negation of another pair.
    pub skipped: u64,
    pub total_trials: u64,
    pub trial_histogram: BTreeMap<u64, u64>,
    pub exceptions: Vec<(u32, u32)>,
    pub success: bool,
}

/// Per-pair generator: the seed picks the key, (i, j) the stream.
pub fn pair_rng(seed: u64, i: u32, j: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 32) | j as u64);
    rng
}

/// Run every pair (α_i, α_j), j ≤ i, with α_0 = 0 and α_i = g^i.
pub fn verify_membership(
    ctx: &FieldCtx,
    seed: u64,
    opts: &VerifyOptions,
) -> Result<VerifyReport, VerifyError> {
    let k = ctx.ground();
    let q = k.q();
    let n = ctx.n();
    if n < 3 {
        return Err(VerifyError::Degree(n));
    }
    let alpha: Vec<u32> = std::iter::once(0)
        .chain((1..q).map(|i| k.gen_pow(i as u64)))
        .collect();
    let mut position = vec![0u32; q as usize];
    for (i, &v) in alpha.iter().enumerate() {
        position[v as usize] = i as u32;
    }
    let negate = opts.negation_reduction && q % 4 == 1;
    let mut skipped = 0;
    let work: Vec<(u32, u32)> = match &opts.pairs {
        Some(list) => {
            for &(a, b) in list {
                if a >= q || b >= q {
                    return Err(
                        GfError::Invalid(format!("({a}, {b}) is not a pair of F_{q}")).into(),
                    );
                }
            }
            list.iter()
                .map(|&(a, b)| (position[a as usize], position[b as usize]))
                .collect()
        }
        None => {
            let mut v = Vec::new();
            for i in 0..q {
                for j in 0..=i {
                    if negate {
                        let ni = position[k.neg(alpha[i as usize]) as usize];
                        let nj = position[k.neg(alpha[j as usize]) as usize];
                        if (ni.max(nj), ni.min(nj)) < (i, j) {
                            skipped += 1;
                            continue;
                        }
                    }
                    v.push((i, j));
                }
            }
            v
        }
    };
    let cap = opts.trial_cap.unwrap_or_else(|| default_trial_cap(q, n));
    let pairs = work
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (alpha[i as usize], alpha[j as usize]);
            let mut rng = pair_rng(seed, i, j);
            verify_pair(ctx, a, b, &mut rng, cap, opts.c0_mode).map(|status| PairOutcome {
                i,
                j,
                a,
                b,
                status,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut trial_histogram = BTreeMap::new();
    let mut total_trials = 0;
    let mut exceptions = Vec::new();
    for o in &pairs {
        let t = o.status.trials();
        total_trials += t;
        *trial_histogram.entry(t).or_insert(0) += 1;
        if o.status.witness().is_none() {
            exceptions.push((o.a, o.b));
        }
    }
    Ok(VerifyReport {
        q,
        n,
        p: k.p(),
        ground_modulus: k.modulus().to_vec(),
        ground_generator: k.generator(),
        seed,
        c0_mode: opts.c0_mode,
        trial_cap: cap,
        negation_reduction: negate,
        expected_trials: expected_trials(q as u64, n as u32)?,
        pairs,
        skipped,
        total_trials,
        trial_histogram,
        success: exceptions.is_empty(),
        exceptions,
    })
}
