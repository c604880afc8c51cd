//! Brute-force oracles for the character-sum layer on small fields:
//! additive and multiplicative characters, the mixed sums
//! Σ λ̂(f(x)) ψ(g(x)), the e-free and trace-pair indicators, and exact
//! counts N_e(a, b) with the inequalities they are supposed to satisfy.

use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::gfarith::{Elem, ExtField, FieldCtx, GfError, ZechTable, ZECH_ZERO};
use crate::ntheory::{euler_phi, factorize_u64, moebius};

/// Largest field the oracles will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// ψ(g^t) = exp(2πi·j·t/d) for the stored generator g; gcd(j, d) = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Psi {
    pub order: u64,
    pub j: u64,
}

impl Psi {
    pub fn trivial() -> Self {
        Psi { order: 1, j: 0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }
}

/// λ on F_q, its lift λ̂ = λ∘T, and the characters ψ_d, over a field with a
/// Zech table.
pub struct CharacterSystem<'a> {
    ctx: &'a FieldCtx,
    zech: &'a ZechTable,
    order: u64,
    /// Tr_{F_q/F_p} of each ground element.
    abs_trace: Vec<u32>,
    /// T(ξ) for each element index.
    trace: Vec<u32>,
    /// λ on each ground element.
    lambda_tab: Vec<Complex64>,
    /// (T(x), T(x^{-1}), log(x + x^{-1})) for x = g^t, indexed by t.
    family: Vec<(u32, u32, u32)>,
}

impl<'a> CharacterSystem<'a> {
    pub fn new(ctx: &'a FieldCtx) -> Result<Self, GfError> {
        let size = ctx.ext().order().to_u64().unwrap_or(u64::MAX);
        if size > EXHAUSTIVE_LIMIT {
            return Err(GfError::ResourceLimit(format!(
                "field of size {size} is too large to enumerate"
            )));
        }
        let zech = ctx
            .zech()
            .ok_or_else(|| GfError::ResourceLimit("no Zech table".into()))?;
        let k = ctx.ground();
        let abs_trace: Vec<u32> = (0..k.q())
            .map(|c| {
                let mut acc = 0;
                let mut cur = c;
                for _ in 0..k.m() {
                    acc = k.add(acc, cur);
                    cur = k.pow(cur, k.p() as u64);
                }
                acc
            })
            .collect();
        let f = ctx.ext();
        let trace: Vec<u32> = (0..size).map(|i| f.trace(&f.from_index(i))).collect();
        let p = k.p() as f64;
        let lambda_tab = abs_trace
            .iter()
            .map(|&t| Complex64::from_polar(1.0, TAU * t as f64 / p))
            .collect();
        let order = size - 1;
        let family = (0..order as u32)
            .map(|t| {
                let inv = ((order - t as u64) % order) as u32;
                (
                    trace[zech.index_of_log(t) as usize],
                    trace[zech.index_of_log(inv) as usize],
                    zech.add(t, inv),
                )
            })
            .collect();
        Ok(CharacterSystem {
            ctx,
            zech,
            order,
            abs_trace,
            trace,
            lambda_tab,
            family,
        })
    }

    pub fn ctx(&self) -> &FieldCtx {
        self.ctx
    }

    pub fn ext(&self) -> &ExtField {
        self.ctx.ext()
    }

    /// q^n − 1.
    pub fn group_order(&self) -> u64 {
        self.order
    }

    /// λ(c) = exp(2πi Tr(c)/p).
    pub fn lambda(&self, c: u32) -> Complex64 {
        self.lambda_tab[c as usize]
    }

    /// Tr_{F_q/F_p}(c).
    pub fn absolute_trace(&self, c: u32) -> u32 {
        self.abs_trace[c as usize]
    }

    pub fn lambda_hat(&self, xi: &Elem) -> Complex64 {
        self.lambda(self.trace_of(xi))
    }

    pub fn trace_of(&self, xi: &Elem) -> u32 {
        self.trace[self.ext().index(xi) as usize]
    }

    pub fn log(&self, xi: &Elem) -> u32 {
        self.zech.log(self.ext(), xi)
    }

    /// Characters of exact order d; empty unless d | q^n − 1.
    pub fn characters_of_order(&self, d: u64) -> Vec<Psi> {
        if d == 0 || self.order % d != 0 {
            return Vec::new();
        }
        if d == 1 {
            return vec![Psi::trivial()];
        }
        (1..d)
            .filter(|j| j.gcd(&d) == 1)
            .map(|j| Psi { order: d, j })
            .collect()
    }

    /// ψ at an element given by its log; the trivial character is 1
    /// everywhere (including 0), the others vanish at 0.
    pub fn psi_log(&self, psi: Psi, log: u32) -> Complex64 {
        if psi.is_trivial() {
            return Complex64::new(1.0, 0.0);
        }
        if log == ZECH_ZERO {
            return Complex64::new(0.0, 0.0);
        }
        let r = (psi.j as u128 * log as u128 % psi.order as u128) as f64;
        Complex64::from_polar(1.0, TAU * r / psi.order as f64)
    }

    pub fn psi(&self, psi: Psi, xi: &Elem) -> Complex64 {
        self.psi_log(psi, self.log(xi))
    }
}

/// A rational function num(x)/den(x) with coefficients in F_{q^n}.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn {
    pub num: Vec<Elem>,
    pub den: Vec<Elem>,
}

impl RationalFn {
    pub fn zero(f: &ExtField) -> Self {
        RationalFn {
            num: Vec::new(),
            den: vec![f.one()],
        }
    }

    /// f_{u,v}(x) = u x + v x^{-1} = (v + u x²)/x, with u, v ∈ F_q.
    pub fn f_uv(f: &ExtField, u: u32, v: u32) -> Self {
        RationalFn {
            num: vec![f.constant(v), f.zero(), f.constant(u)],
            den: vec![f.zero(), f.one()],
        }
    }

    /// g(x) = x + x^{-1} = (1 + x²)/x.
    pub fn g(f: &ExtField) -> Self {
        Self::f_uv(f, 1, 1)
    }

    fn horner(f: &ExtField, c: &[Elem], x: &Elem) -> Elem {
        c.iter()
            .rev()
            .fold(f.zero(), |acc, ci| f.add(&f.mul(&acc, x), ci))
    }

    /// None at a pole.
    pub fn eval(&self, f: &ExtField, x: &Elem) -> Option<Elem> {
        let d = Self::horner(f, &self.den, x);
        let inv = f.inv(&d)?;
        Some(f.mul(&Self::horner(f, &self.num, x), &inv))
    }
}

/// Pole and zero bookkeeping of the mixed-sum estimate for (f_{u,v}, g):
/// l counts the distinct zeros and finite poles of g, l1 the poles of f
/// including ∞, l0 their total multiplicity, l2 the finite poles of f that
/// are zeros or poles of g.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleCounts {
    pub l: u32,
    pub l0: u32,
    pub l1: u32,
    pub l2: u32,
}

impl PoleCounts {
    pub fn for_family(u_nonzero: bool, v_nonzero: bool, p: u32) -> Self {
        // x² + 1 has a double root in characteristic 2
        let l = if p == 2 { 2 } else { 3 };
        let l1 = u_nonzero as u32 + v_nonzero as u32;
        PoleCounts {
            l,
            l0: l1,
            l1,
            l2: v_nonzero as u32,
        }
    }

    /// l0 + l + l1 − l2 − 2.
    pub fn constant(&self) -> u32 {
        self.l0 + self.l + self.l1 - self.l2 - 2
    }
}

/// Which character-sum estimate to apply to
/// S(u, v, ψ) = Σ_{x≠0} λ̂(f_{u,v}(x)) ψ(g(x)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumBound {
    /// (l0 + l + l1 − l2 − 2)√Q from the pole counts; only defined when
    /// both characters are nontrivial.
    PoleCount,
    /// 4√Q when uv ≠ 0 and ψ is nontrivial, 2√Q otherwise.
    CaseConstants,
    /// (deg L)√Q with deg L computed from the conductor of the pair, or
    /// the exact value when ψ is trivial and uv = 0.
    Conductor,
}

/// Upper bound for |S(u, v, ψ)| over a field of size Q in characteristic
/// p. None when the estimate does not apply, always including the main
/// term u = v = 0 with ψ trivial.
pub fn family_sum_bound(
    kind: SumBound,
    u_nonzero: bool,
    v_nonzero: bool,
    psi_trivial: bool,
    p: u32,
    size: f64,
) -> Option<f64> {
    let root = size.sqrt();
    if psi_trivial && !u_nonzero && !v_nonzero {
        return None;
    }
    match kind {
        SumBound::PoleCount => (!psi_trivial && (u_nonzero || v_nonzero))
            .then(|| PoleCounts::for_family(u_nonzero, v_nonzero, p).constant() as f64 * root),
        SumBound::CaseConstants => Some(
            if !psi_trivial && u_nonzero && v_nonzero {
                4.0
            } else {
                2.0
            } * root,
        ),
        SumBound::Conductor => Some(if psi_trivial {
            if u_nonzero && v_nonzero {
                // Kloosterman
                2.0 * root
            } else {
                // a complete additive sum less its term at 0
                1.0
            }
        } else {
            conductor_degree(u_nonzero, v_nonzero, p) as f64 * root
        }),
    }
}

/// Degree of the L-function of λ̂(f_{u,v}) ψ(g) on the projective line for
/// nontrivial ψ: each pole of f of order m contributes m + 1, each other
/// point where ψ∘g ramifies contributes 1, less 2. g = (x² + 1)/x ramifies
/// at 0, ∞ and the roots of x² + 1 (one double root when p = 2, where ψ
/// has odd order).
pub fn conductor_degree(u_nonzero: bool, v_nonzero: bool, p: u32) -> u32 {
    let zeros_of_g = if p == 2 { 1 } else { 2 };
    // poles of f: ∞ when u ≠ 0, 0 when v ≠ 0, each simple
    let f_poles = u_nonzero as u32 + v_nonzero as u32;
    zeros_of_g + 2 * f_poles + (2 - f_poles) - 2
}

/// multiplier · Σ over non-poles x of λ̂(f(x)) ψ(g(x)), by enumeration.
pub fn weil_sum(
    sys: &CharacterSystem,
    f: &RationalFn,
    g: &RationalFn,
    psi: Psi,
    multiplier: i64,
) -> Complex64 {
    let ext = sys.ext();
    let size = sys.group_order() + 1;
    let total: Complex64 = (0..size)
        .into_par_iter()
        .map(|i| {
            let x = ext.from_index(i);
            match (f.eval(ext, &x), g.eval(ext, &x)) {
                (Some(fx), Some(gx)) => sys.lambda_hat(&fx) * sys.psi(psi, &gx),
                _ => Complex64::new(0.0, 0.0),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    total * multiplier as f64
}

/// The sums against every multiplicative character at once: entry j is
/// Σ λ̂(f(x)) χ_j(g(x)) with χ_j(g^t) = exp(2πi j t/N), N = q^n − 1, i.e.
/// an unnormalized inverse DFT of the log-indexed additive weights.
pub fn weil_sums_dft(sys: &CharacterSystem, f: &RationalFn, g: &RationalFn) -> Vec<Complex64> {
    let ext = sys.ext();
    let n = sys.group_order() as usize;
    let mut a = vec![Complex64::new(0.0, 0.0); n];
    let mut at_zero = Complex64::new(0.0, 0.0);
    for i in 0..=n as u64 {
        let x = ext.from_index(i);
        if let (Some(fx), Some(gx)) = (f.eval(ext, &x), g.eval(ext, &x)) {
            let w = sys.lambda_hat(&fx);
            match sys.log(&gx) {
                ZECH_ZERO => at_zero += w,
                t => a[t as usize] += w,
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut a);
    a[0] += at_zero;
    a
}

/// [`weil_sums_dft`] for f = f_{u,v} and g = x + x^{-1}, using
/// T(ux + vx^{-1}) = uT(x) + vT(x^{-1}) and the precomputed logs.
pub fn family_sums(sys: &CharacterSystem, u: u32, v: u32, fft: &dyn Fft<f64>) -> Vec<Complex64> {
    let mut out = Vec::new();
    let mut scratch = Vec::new();
    family_sums_into(sys, u, v, fft, &mut out, &mut scratch);
    out
}

/// [`family_sums`] into caller-owned buffers.
pub fn family_sums_into(
    sys: &CharacterSystem,
    u: u32,
    v: u32,
    fft: &dyn Fft<f64>,
    out: &mut Vec<Complex64>,
    scratch: &mut Vec<Complex64>,
) {
    let k = sys.ctx().ground();
    let n = sys.group_order() as usize;
    assert_eq!(fft.len(), n, "transform length must be q^n - 1");
    out.clear();
    out.resize(n, Complex64::new(0.0, 0.0));
    scratch.resize(fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
    let mut at_zero = Complex64::new(0.0, 0.0);
    for &(tx, ty, lg) in &sys.family {
        let w = sys.lambda_tab[k.add(k.mul(u, tx), k.mul(v, ty)) as usize];
        match lg {
            ZECH_ZERO => at_zero += w,
            t => out[t as usize] += w,
        }
    }
    fft.process_with_scratch(out, scratch);
    out[0] += at_zero;
}

/// A transform plan of the right length for [`family_sums`].
pub fn plan_family_sums(sys: &CharacterSystem) -> std::sync::Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(sys.group_order() as usize)
}

/// Index into [`weil_sums_dft`] output for a character.
pub fn dft_index(sys: &CharacterSystem, psi: Psi) -> usize {
    (psi.j * (sys.group_order() / psi.order)) as usize
}

fn squarefree_divisors(primes: &[u64]) -> Vec<u64> {
    let mut out = vec![1u64];
    for &p in primes {
        let more: Vec<u64> = out.iter().map(|d| d * p).collect();
        out.extend(more);
    }
    out.sort();
    out
}

fn primes_of(e: u64) -> Vec<u64> {
    if e == 1 {
        Vec::new()
    } else {
        factorize_u64(e).unwrap().primes_u64().unwrap()
    }
}

/// θ(e) Σ_{d|e} μ(d)/φ(d) Σ_{ψ of order d} ψ(ξ), which is 1 when ξ is
/// e-free and 0 otherwise.
pub fn indicator_efree(sys: &CharacterSystem, xi: &Elem, e: u64) -> Complex64 {
    assert!(sys.group_order() % e == 0, "e must divide q^n - 1");
    let theta = {
        let ps = primes_of(e);
        ps.iter().fold(1.0, |acc, &p| acc * (1.0 - 1.0 / p as f64))
    };
    let log = sys.log(xi);
    let mut acc = Complex64::new(0.0, 0.0);
    for d in squarefree_divisors(&primes_of(e)) {
        let mu = moebius(d).unwrap() as f64;
        let phi = euler_phi(d).unwrap().to_f64().unwrap();
        let s: Complex64 = sys
            .characters_of_order(d)
            .iter()
            .map(|&psi| sys.psi_log(psi, log))
            .sum();
        acc += s * (mu / phi);
    }
    acc * theta
}

/// q^{-2} Σ_{u,v} λ(−ua − vb) λ̂(uξ + vξ^{-1}), which is 1 when
/// T(ξ) = a and T(ξ^{-1}) = b and 0 otherwise.
pub fn indicator_trace_pair(sys: &CharacterSystem, xi: &Elem, a: u32, b: u32) -> Complex64 {
    let ext = sys.ext();
    let k = ext.ground();
    let inv = ext.inv(xi).expect("ξ must be nonzero");
    let q = k.q();
    let mut acc = Complex64::new(0.0, 0.0);
    for u in 0..q {
        for v in 0..q {
            let arg = ext.add(&ext.scale(xi, u), &ext.scale(&inv, v));
            let shift = k.neg(k.add(k.mul(u, a), k.mul(v, b)));
            acc += sys.lambda(shift) * sys.lambda_hat(&arg);
        }
    }
    acc / (q as f64 * q as f64)
}

/// N_e(a, b): ξ ≠ 0 with T(ξ) = a, T(ξ^{-1}) = b and ξ + ξ^{-1} e-free,
/// by direct enumeration with polynomial arithmetic.
pub fn count_ne(ctx: &FieldCtx, a: u32, b: u32, e: &BigUint) -> u64 {
    let ext = ctx.ext();
    let size = ext.order().to_u64().expect("enumerable field");
    (1..size)
        .into_par_iter()
        .filter(|&i| {
            let xi = ext.from_index(i);
            if ext.trace(&xi) != a {
                return false;
            }
            let inv = ext.inv(&xi).unwrap();
            if ext.trace(&inv) != b {
                return false;
            }
            let gamma = ext.add(&xi, &inv);
            !ext.is_zero(&gamma) && ctx.is_e_free(&gamma, e)
        })
        .count() as u64
}

/// Exact N_e(a, b) for every pair and every squarefree e | q^n − 1,
/// computed in one pass over the field with Zech logarithms.
#[derive(Clone, Debug)]
pub struct NeTable {
    pub q: u32,
    pub n: u32,
    /// The distinct primes of q^n − 1; subsets are bit masks.
    pub primes: Vec<u64>,
    /// Sorted pairs with at least one ξ.
    pairs: Vec<(u32, u32)>,
    /// Row i, entry S (stride 2^ω): N_e for pairs[i] and e the product of
    /// the primes in S.
    data: Vec<u64>,
}

impl NeTable {
    pub fn build(sys: &CharacterSystem) -> Self {
        let order = sys.group_order();
        let primes = primes_of(order.max(1));
        let w = primes.len();
        let width = 1usize << w;
        // (pair, free-mask) for each ξ; masks past the full one mark γ = 0
        let mut keyed: Vec<((u32, u32), usize)> = sys
            .family
            .iter()
            .map(|&(ta, tb, gamma)| {
                let mask = if gamma == ZECH_ZERO {
                    width
                } else {
                    primes
                        .iter()
                        .enumerate()
                        .filter(|(_, &l)| gamma as u64 % l != 0)
                        .fold(0usize, |m, (i, _)| m | (1 << i))
                };
                ((ta, tb), mask)
            })
            .collect();
        keyed.sort_unstable();
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut data: Vec<u64> = Vec::new();
        for (pair, mask) in keyed {
            if pairs.last() != Some(&pair) {
                pairs.push(pair);
                data.resize(data.len() + width, 0);
            }
            if mask < width {
                let base = data.len() - width;
                data[base + mask] += 1;
            }
        }
        // N_S counts the ξ whose free-mask contains S: superset sums
        for row in data.chunks_mut(width) {
            for i in 0..w {
                for s in 0..width {
                    if s & (1 << i) == 0 {
                        row[s] += row[s | (1 << i)];
                    }
                }
            }
        }
        NeTable {
            q: sys.ctx().q(),
            n: sys.ctx().n() as u32,
            primes,
            pairs,
            data,
        }
    }

    fn width(&self) -> usize {
        1 << self.primes.len()
    }

    /// Pairs with at least one ξ, and their rows.
    pub fn rows(&self) -> impl Iterator<Item = ((u32, u32), &[u64])> {
        self.pairs
            .iter()
            .copied()
            .zip(self.data.chunks(self.width()))
    }

    pub fn full_mask(&self) -> usize {
        (1 << self.primes.len()) - 1
    }

    /// N_e(a, b) for a squarefree e given by its prime mask.
    pub fn get(&self, a: u32, b: u32, mask: usize) -> u64 {
        match self.pairs.binary_search(&(a, b)) {
            Ok(i) => self.data[i * self.width() + mask],
            Err(_) => 0,
        }
    }

    /// Pairs (a, b) with no ξ at all.
    pub fn empty_pairs(&self) -> u64 {
        (self.q as u64).pow(2) - self.pairs.len() as u64
    }

    pub fn mask_value(&self, mask: usize) -> u64 {
        self.primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &p)| p)
            .product()
    }

    fn theta(&self, mask: usize) -> f64 {
        self.primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .fold(1.0, |acc, (_, &p)| acc * (1.0 - 1.0 / p as f64))
    }

    /// The distinct rows over all q² pairs, empty pairs included, with
    /// their multiplicities.
    pub fn distinct_rows(&self) -> Vec<(Vec<u64>, u64)> {
        let mut rows: Vec<&[u64]> = self.data.chunks(self.width()).collect();
        let zero = vec![0; self.width()];
        rows.sort_unstable();
        let mut out: Vec<(Vec<u64>, u64)> = Vec::new();
        for r in rows {
            match out.last_mut() {
                Some((last, m)) if last.as_slice() == r => *m += 1,
                _ => out.push((r.to_vec(), 1)),
            }
        }
        if self.empty_pairs() > 0 {
            match out.iter_mut().find(|(r, _)| *r == zero) {
                Some((_, m)) => *m += self.empty_pairs(),
                None => out.push((zero, self.empty_pairs())),
            }
        }
        out
    }
}

/// Pass/fail tally of one inequality over all its instances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckTally {
    pub checked: u64,
    pub failures: u64,
    /// Smallest lhs − rhs seen (negative on failure).
    pub worst_slack: f64,
}

impl CheckTally {
    fn new() -> Self {
        CheckTally {
            checked: 0,
            failures: 0,
            worst_slack: f64::INFINITY,
        }
    }

    /// `mult` identical instances of lhs ≥ rhs.
    fn record(&mut self, lhs: f64, rhs: f64, mult: u64) {
        self.checked += mult;
        let slack = lhs - rhs;
        // the right-hand sides are real-valued; allow for rounding only
        if slack < -1e-9 * rhs.abs().max(1.0) {
            self.failures += mult;
        }
        self.worst_slack = self.worst_slack.min(slack);
    }

    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

/// θ(e) Q^{1/2}(Q^{1/2}/q² − 2^{ω(e)+2}), Q = q^n.
pub fn ne_lower_bound(q: u32, n: u32, theta_e: f64, omega_e: usize) -> f64 {
    let root = (q as f64).powf(n as f64 / 2.0);
    theta_e * root * (root / (q as f64 * q as f64) - 2f64.powi(omega_e as i32 + 2))
}

/// θ(k) Q^{1/2}{δ Q^{1/2}/q² − 4(s − 1 + 2δ)}.
pub fn nkp_lower_bound(q: u32, n: u32, theta_k: f64, s: usize, delta: f64) -> f64 {
    let root = (q as f64).powf(n as f64 / 2.0);
    theta_k * root * (delta * root / (q as f64 * q as f64) - 4.0 * (s as f64 - 1.0 + 2.0 * delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub q: u32,
    pub n: u32,
    pub omega: usize,
    /// N_e ≥ θ(e) Q^{1/2}(Q^{1/2}/q² − 2^{ω(e)+2}) for every squarefree e.
    pub ne_bound: CheckTally,
    /// N ≥ Σ N_{k p_i} − (s − 1) N_k for every split.
    pub sieve_inequality: CheckTally,
    /// N_1 ≤ q^{n−2}.
    pub n1_bound: CheckTally,
    /// N_{kP} ≥ θ(k) Q^{1/2}{δ Q^{1/2}/q² − 4(s − 1 + 2δ)} for every
    /// disjoint k, P with δ > 0.
    pub nkp_bound: CheckTally,
}

impl BoundReport {
    pub fn ok(&self) -> bool {
        self.ne_bound.ok()
            && self.sieve_inequality.ok()
            && self.n1_bound.ok()
            && self.nkp_bound.ok()
    }
}

/// Run every count-level inequality on one field.
pub fn check_bounds(table: &NeTable) -> BoundReport {
    let w = table.primes.len();
    let full = table.full_mask();
    let (q, n) = (table.q, table.n);
    let theta: Vec<f64> = (0..=full).map(|m| table.theta(m)).collect();

    // the right-hand sides depend only on the masks
    let ne_rhs: Vec<f64> = (0..=full)
        .map(|m| ne_lower_bound(q, n, theta[m], m.count_ones() as usize))
        .collect();
    let mut nkp_rhs: Vec<(usize, f64)> = Vec::new();
    for k in 0..=full {
        let comp = full & !k;
        // every P ⊆ complement of k
        let mut p = comp;
        loop {
            let delta = 1.0
                - table
                    .primes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| p & (1 << i) != 0)
                    .map(|(_, &l)| 1.0 / l as f64)
                    .sum::<f64>();
            if delta > 0.0 {
                let s = p.count_ones() as usize;
                nkp_rhs.push((k | p, nkp_lower_bound(q, n, theta[k], s, delta)));
            }
            if p == 0 {
                break;
            }
            p = (p - 1) & comp;
        }
    }

    let mut ne = CheckTally::new();
    let mut sieve = CheckTally::new();
    let mut n1 = CheckTally::new();
    let mut nkp = CheckTally::new();
    let n1_cap = (q as f64).powi(n as i32 - 2);

    for (row, mult) in table.distinct_rows() {
        for m in 0..=full {
            ne.record(row[m] as f64, ne_rhs[m], mult);
        }
        n1.record(n1_cap, row[0] as f64, mult);
        let big_n = row[full] as i128;
        for k in 0..=full {
            let sieving = (0..w).filter(|i| k & (1 << i) == 0);
            let s = (w - k.count_ones() as usize) as i128;
            let rhs: i128 =
                sieving.map(|i| row[k | (1 << i)] as i128).sum::<i128>() - (s - 1) * row[k] as i128;
            sieve.record(big_n as f64, rhs as f64, mult);
        }
        for &(m, bound) in &nkp_rhs {
            nkp.record(row[m] as f64, bound, mult);
        }
    }
    BoundReport {
        q,
        n,
        omega: w,
        ne_bound: ne,
        sieve_inequality: sieve,
        n1_bound: n1,
        nkp_bound: nkp,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumTally {
    pub bound: SumBound,
    /// (u, v, ψ) triples the bound applies to.
    pub checked: u64,
    pub failures: u64,
    /// max |S| / bound.
    pub worst_ratio: f64,
    /// The first violation, as (u, v, order of ψ).
    pub first_failure: Option<(u32, u32, u64)>,
}

impl SumTally {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }

    fn note_failure(&mut self, u: u32, v: u32, d: u64) {
        let f = (u, v, d);
        self.first_failure = Some(self.first_failure.map_or(f, |g| g.min(f)));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub q: u32,
    pub n: u32,
    pub tallies: Vec<SumTally>,
}

impl SumReport {
    pub fn tally(&self, kind: SumBound) -> &SumTally {
        self.tallies.iter().find(|t| t.bound == kind).unwrap()
    }
}

/// |S(u, v, ψ)| against each estimate for every u, v ∈ F_q and every
/// multiplicative character.
pub fn check_character_sum_bounds(sys: &CharacterSystem) -> SumReport {
    const KINDS: [SumBound; 3] = [
        SumBound::PoleCount,
        SumBound::CaseConstants,
        SumBound::Conductor,
    ];
    let ext = sys.ext();
    let q = ext.ground().q();
    let p = ext.ground().p();
    let order = sys.group_order();
    let size = (order + 1) as f64;
    let fft = plan_family_sums(sys);
    let empty = || {
        KINDS
            .iter()
            .map(|&kind| SumTally {
                bound: kind,
                checked: 0,
                failures: 0,
                worst_ratio: 0.0,
                first_failure: None,
            })
            .collect::<Vec<_>>()
    };
    let merge = |mut acc: Vec<SumTally>, row: Vec<SumTally>| {
        for (a, t) in acc.iter_mut().zip(row) {
            a.checked += t.checked;
            a.failures += t.failures;
            a.worst_ratio = a.worst_ratio.max(t.worst_ratio);
            a.first_failure = match (a.first_failure, t.first_failure) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            };
        }
        acc
    };
    let k = ext.ground();
    // S(u, v, ψ) = S(v, u, ψ) by x ↦ x^{-1}, and S(−u, −v, ψ) is the
    // conjugate of S(u, v, ψ̄); both preserve the order of ψ and the bound,
    // so the norms of one representative serve the whole orbit
    let orbit = |u: u32, v: u32| [(u, v), (v, u), (k.neg(u), k.neg(v)), (k.neg(v), k.neg(u))];
    let tallies = (0..q)
        .into_par_iter()
        .flat_map_iter(|u| (0..q).map(move |v| (u, v)))
        .filter(|&(u, v)| orbit(u, v).iter().all(|&w| (u, v) <= w))
        .fold(
            || (empty(), Vec::new(), Vec::new()),
            |(mut acc, mut sums, mut scratch), (u, v)| {
                let mut members = orbit(u, v).to_vec();
                members.sort();
                members.dedup();
                family_sums_into(sys, u, v, &*fft, &mut sums, &mut scratch);
                let norms: Vec<f64> = sums.iter().map(|s| s.norm_sqr()).collect();
                let max_other = norms[1..].iter().cloned().fold(0.0, f64::max);
                for &(mu, mv) in &members {
                    for (t, &kind) in acc.iter_mut().zip(&KINDS) {
                        if let Some(b) = family_sum_bound(kind, mu != 0, mv != 0, true, p, size) {
                            t.checked += 1;
                            t.worst_ratio = t.worst_ratio.max(norms[0].sqrt() / b);
                            if norms[0].sqrt() > b * (1.0 + 1e-9) {
                                t.failures += 1;
                                t.note_failure(mu, mv, 1);
                            }
                        }
                        let Some(b) = family_sum_bound(kind, mu != 0, mv != 0, false, p, size)
                        else {
                            continue;
                        };
                        t.checked += order - 1;
                        t.worst_ratio = t.worst_ratio.max(max_other.sqrt() / b);
                        let cut = (b * (1.0 + 1e-9)).powi(2);
                        if max_other <= cut {
                            continue;
                        }
                        for (j, &n2) in norms.iter().enumerate().skip(1) {
                            if n2 > cut {
                                t.failures += 1;
                                t.note_failure(mu, mv, order / order.gcd(&(j as u64)));
                            }
                        }
                    }
                }
                (acc, sums, scratch)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(empty, merge);
    SumReport {
        q,
        n: sys.ctx().n() as u32,
        tallies,
    }
}
