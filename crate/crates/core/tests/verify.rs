use std::collections::BTreeSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trace_sieve::gfarith::*;
use trace_sieve::verify::*;

fn ctx(p: u32, m: u32, n: u32) -> FieldCtx {
    build_context(p, m, n, 5).unwrap()
}

/// Qualifying ξ counted by brute force with plain field arithmetic.
fn brute_count(c: &FieldCtx, a: u32, b: u32) -> usize {
    let f = c.ext();
    c.elements()
        .skip(1)
        .filter(|xi| {
            let inv = f.inv(xi).unwrap();
            f.trace_frobenius(xi) == a
                && f.trace_frobenius(&inv) == b
                && c.is_primitive(&f.add(xi, &inv))
        })
        .count()
}

/// N(ξ) = ξ^{(q^n−1)/(q−1)}, as a ground element.
fn norm(f: &ExtField, xi: &Elem) -> u32 {
    let q = BigUint::from(f.ground().q());
    let e = (q.pow(f.degree() as u32) - 1u32) / (q - 1u32);
    let v = f.pow(xi, &e);
    assert!(v[1..].iter().all(|&c| c == 0));
    v[0]
}

#[test]
fn polynomial_shape_over_f7() {
    let k = GroundField::prime(7).unwrap();
    let m1 = k.neg(1);
    assert_eq!(
        &trace_polynomial(&k, 5, 0, 0, m1, &[0, 0]).unwrap()[..],
        &[6, 0, 0, 0, 0, 1]
    );
    // b = 1 gives x^5 + x − 1.
    assert_eq!(
        &trace_polynomial(&k, 5, 0, 1, m1, &[0, 0]).unwrap()[..],
        &[6, 1, 0, 0, 0, 1]
    );
    // x^5 − 3x^4 + 4x^3 + 5x^2 − 2·6x + 2
    assert_eq!(
        &trace_polynomial(&k, 5, 3, 6, 2, &[5, 4]).unwrap()[..],
        &[2, 2, 5, 4, 4, 1]
    );
    assert_eq!(
        &trace_polynomial(&k, 3, 1, 1, 1, &[]).unwrap()[..],
        &[1, 6, 6, 1]
    );
    assert!(matches!(
        trace_polynomial(&k, 2, 0, 0, 1, &[]),
        Err(VerifyError::Degree(2))
    ));
    assert!(trace_polynomial(&k, 5, 0, 0, 0, &[0, 0]).is_err());
    assert!(trace_polynomial(&k, 5, 0, 0, 1, &[0]).is_err());
}

#[test]
fn random_polynomials_keep_the_pattern() {
    let k = GroundField::new(3, 2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 3..9 {
        for _ in 0..50 {
            let a = rng.gen_range(0..9);
            let b = rng.gen_range(0..9);
            for mode in [C0Mode::RandomNonzero, C0Mode::MinusOne] {
                let p = random_trace_polynomial(&k, n, a, b, &mut rng, mode).unwrap();
                assert_eq!(p.len(), n + 1);
                assert_eq!(p[n], 1);
                assert_eq!(p[n - 1], k.neg(a));
                assert_ne!(p[0], 0);
                assert_eq!(p[1], k.neg(k.mul(p[0], b)));
                if mode == C0Mode::MinusOne {
                    assert_eq!(p[0], k.neg(1));
                }
                let (c0, c) = trace_shape(&k, &p, a, b).unwrap();
                assert_eq!(c0, p[0]);
                assert_eq!(c.len(), n - 3);
            }
        }
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let k = GroundField::prime(5).unwrap();
    let p = trace_polynomial(&k, 5, 1, 2, 3, &[4, 0]).unwrap();
    assert!(gamma_closed_form(&k, &p, 1, 2).is_ok());
    for (a, b) in [(2, 2), (1, 3)] {
        assert!(matches!(
            gamma_closed_form(&k, &p, a, b),
            Err(VerifyError::ShapeMismatch(_))
        ));
    }
    let mut q = p.clone();
    q[0] = 0;
    assert!(matches!(
        gamma_closed_form(&k, &q, 1, 2),
        Err(VerifyError::ShapeMismatch(_))
    ));
    let mut r = p.clone();
    r[5] = 2;
    assert!(matches!(
        gamma_closed_form(&k, &r, 1, 2),
        Err(VerifyError::ShapeMismatch(_))
    ));
}

/// Closed form against ξ + ξ⁻¹ by extended gcd, with the traces and norm
/// of the roots.
fn check_roots(k: &std::sync::Arc<GroundField>, p: &Poly, a: u32, b: u32) {
    let f = ExtField::new(k.clone(), p.clone());
    let xi = f.x();
    let inv = f.inv(&xi).unwrap();
    let direct = f.add(&xi, &inv);
    let closed = gamma_closed_form(k, p, a, b).unwrap();
    assert_eq!(direct, closed, "P = {p:?}");
    assert_eq!(f.trace_frobenius(&xi), a);
    assert_eq!(f.trace_frobenius(&inv), b);
    assert_eq!(f.trace_frobenius(&closed), k.add(a, b));
    let n = p.len() - 1;
    let expect = if n % 2 == 0 { p[0] } else { k.neg(p[0]) };
    assert_eq!(norm(&f, &xi), expect);
}

#[test]
fn closed_form_matches_field_arithmetic_over_f7_5() {
    let k = std::sync::Arc::new(GroundField::prime(7).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 10_000 {
        let a = rng.gen_range(0..7);
        let b = rng.gen_range(0..7);
        let p = random_trace_polynomial(&k, 5, a, b, &mut rng, C0Mode::RandomNonzero).unwrap();
        if is_irreducible(&k, &p) {
            check_roots(&k, &p, a, b);
            checked += 1;
        }
    }
}

#[test]
fn closed_form_exhaustive_over_f2_5() {
    let k = std::sync::Arc::new(GroundField::prime(2).unwrap());
    let mut irreducible = 0;
    for a in 0..2 {
        for b in 0..2 {
            for c2 in 0..2 {
                for c3 in 0..2 {
                    let p = trace_polynomial(&k, 5, a, b, 1, &[c2, c3]).unwrap();
                    if is_irreducible(&k, &p) {
                        check_roots(&k, &p, a, b);
                        irreducible += 1;
                    }
                }
            }
        }
    }
    // The six irreducible quintics over F_2.
    assert_eq!(irreducible, 6);
}

#[test]
fn small_degrees_are_handled() {
    let k = std::sync::Arc::new(GroundField::prime(5).unwrap());
    for n in [3usize, 4] {
        let mut seen = 0;
        for a in 0..5 {
            for b in 0..5 {
                for c0 in 1..5 {
                    let free: Vec<Vec<u32>> = if n == 3 {
                        vec![vec![]]
                    } else {
                        (0..5).map(|c| vec![c]).collect()
                    };
                    for c in free {
                        let p = trace_polynomial(&k, n, a, b, c0, &c).unwrap();
                        if is_irreducible(&k, &p) {
                            check_roots(&k, &p, a, b);
                            seen += 1;
                        }
                    }
                }
            }
        }
        assert!(seen > 0);
    }
}

#[test]
fn minus_one_gives_norm_one_for_quintics() {
    let k = std::sync::Arc::new(GroundField::prime(11).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = 0;
    while seen < 200 {
        let p = random_trace_polynomial(&k, 5, 3, 7, &mut rng, C0Mode::MinusOne).unwrap();
        if is_irreducible(&k, &p) {
            let f = ExtField::new(k.clone(), p.clone());
            assert_eq!(norm(&f, &f.x()), 1);
            seen += 1;
        }
    }
}

#[test]
fn the_exceptional_pairs_of_f64() {
    let c = ctx(2, 1, 6);
    for (a, b) in [(0, 0), (1, 1)] {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = verify_pair(
            &c,
            a,
            b,
            &mut rng,
            default_trial_cap(2, 6),
            C0Mode::RandomNonzero,
        )
        .unwrap();
        assert_eq!(
            out,
            PairStatus::ProvenImpossible {
                scanned: 63,
                trials: 16
            }
        );
        assert_eq!(brute_count(&c, a, b), 0);
    }
    let report = verify_membership(&c, 1, &VerifyOptions::default()).unwrap();
    assert!(!report.success);
    let ex: BTreeSet<_> = report.exceptions.iter().copied().collect();
    assert_eq!(ex, BTreeSet::from([(0, 0), (1, 1)]));
    assert_eq!(report.pairs.len(), 3);
    assert_eq!(report.trial_cap, 16);
}

#[test]
fn every_pair_over_f32_has_a_witness() {
    let c = ctx(2, 1, 5);
    for a in 0..2 {
        for b in 0..2 {
            assert!(brute_count(&c, a, b) > 0);
        }
    }
    let report = verify_membership(&c, 7, &VerifyOptions::default()).unwrap();
    assert!(report.success);
    assert_eq!(report.pairs.len(), 3);
    for o in &report.pairs {
        let w = o.status.witness().unwrap();
        validate_witness(c.ground_arc(), c.group_order(), w).unwrap();
    }
}

#[test]
fn membership_for_small_fields() {
    for (p, m, n) in [(3, 1, 6), (7, 1, 7), (2, 2, 5), (5, 1, 5)] {
        let c = ctx(p, m, n);
        let q = c.q();
        let report = verify_membership(&c, 2, &VerifyOptions::default()).unwrap();
        assert!(report.success, "({q}, {n})");
        assert_eq!(report.pairs.len() as u32, q * (q + 1) / 2);
        for o in &report.pairs {
            assert!(o.j <= o.i);
            let w = o.status.witness().unwrap();
            assert_eq!((w.a, w.b), (o.a, o.b));
            validate_witness(c.ground_arc(), c.group_order(), w).unwrap();
            let s = swap_witness(c.ground(), w).unwrap();
            assert_eq!((s.a, s.b), (w.b, w.a));
            validate_witness(c.ground_arc(), c.group_order(), &s).unwrap();
        }
        let total: u64 = report.trial_histogram.iter().map(|(t, m)| t * m).sum();
        assert_eq!(total, report.total_trials);
    }
}

#[test]
fn pair_order_follows_the_generator() {
    let c = ctx(3, 2, 5);
    let k = c.ground();
    let report = verify_membership(&c, 0, &VerifyOptions::default()).unwrap();
    let alpha = |i: u32| if i == 0 { 0 } else { k.gen_pow(i as u64) };
    let mut expect = Vec::new();
    for i in 0..9 {
        for j in 0..=i {
            expect.push((i, j));
        }
    }
    let got: Vec<_> = report.pairs.iter().map(|o| (o.i, o.j)).collect();
    assert_eq!(got, expect);
    for o in &report.pairs {
        assert_eq!((o.a, o.b), (alpha(o.i), alpha(o.j)));
    }
    assert_eq!(report.ground_generator, k.generator());
}

#[test]
fn exhaustive_fallback_produces_valid_witnesses() {
    for (p, n, zech) in [
        (3, 5, ZechMode::Auto),
        (3, 5, ZechMode::Off),
        (2, 7, ZechMode::Off),
    ] {
        let c = build_context_with(p, 1, n, 5, zech).unwrap();
        let mut exhaustive = 0;
        for a in 0..p {
            for b in 0..p {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                match verify_pair(&c, a, b, &mut rng, 1, C0Mode::RandomNonzero).unwrap() {
                    PairStatus::Witnessed(w) => {
                        validate_witness(c.ground_arc(), c.group_order(), &w).unwrap();
                        exhaustive += w.exhaustive as u32;
                        if !w.exhaustive {
                            assert_eq!(w.trials, 1);
                        }
                    }
                    other => panic!("({a}, {b}) {other:?}"),
                }
            }
        }
        assert!(exhaustive > 0);
    }
}

#[test]
fn tampered_witnesses_are_rejected() {
    let c = ctx(5, 1, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = match verify_pair(&c, 2, 3, &mut rng, 1000, C0Mode::RandomNonzero).unwrap() {
        PairStatus::Witnessed(w) => w,
        other => panic!("{other:?}"),
    };
    let (k, ord) = (c.ground_arc(), c.group_order());
    validate_witness(k, ord, &w).unwrap();
    let mut g = w.clone();
    g.gamma[0] = (g.gamma[0] + 1) % 5;
    assert!(validate_witness(k, ord, &g).is_err());
    let mut t = w.clone();
    t.b = 4;
    assert!(validate_witness(k, ord, &t).is_err());
    let mut x = w.clone();
    x.xi = vec![0, 0, 1, 0, 0];
    assert!(validate_witness(k, ord, &x).is_err());
    let mut r = w.clone();
    // (x − 1)·(x^4 + …) keeps no trace shape in general; x^5 − 2x^4 + … with
    // a root at 1 is reducible.
    r.poly = trace_polynomial(k, 5, 2, 3, 1, &[0, 0]).unwrap().to_vec();
    r.poly_coeffs = vec![1, 0, 0];
    assert!(validate_witness(k, ord, &r).is_err());
}

#[test]
fn expected_trial_counts() {
    let v = expected_trials(121, 6).unwrap();
    assert_eq!(format!("{v:.2}"), "31.39");
    let exact = expected_trials_exact(2, 5).unwrap();
    assert_eq!(exact, num_rational::BigRational::new(31.into(), 6.into()));
    assert!((expected_trials(2, 5).unwrap() - 5.1667).abs() < 1e-4);
    for (q, n) in [(2u64, 6u32), (3, 7), (64, 5), (211, 6), (4096, 5)] {
        assert!(expected_trials(q, n).unwrap() >= n as f64);
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let c = ctx(5, 1, 6);
    let opts = VerifyOptions::default();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| serde_json::to_string(&verify_membership(&c, 42, &opts).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
    assert_ne!(one, pool_free(&c, 43));
}

fn pool_free(c: &FieldCtx, seed: u64) -> String {
    serde_json::to_string(&verify_membership(c, seed, &VerifyOptions::default()).unwrap()).unwrap()
}

#[test]
fn negation_reduction_skips_paired_pairs() {
    let c = ctx(5, 1, 5);
    let opts = VerifyOptions {
        negation_reduction: true,
        ..Default::default()
    };
    let report = verify_membership(&c, 3, &opts).unwrap();
    assert!(report.success);
    assert!(report.negation_reduction);
    // Of the 15 pairs only {0,0} is fixed by negation; the rest pair up
    // except {a,−a}, which map to themselves.
    let k = c.ground();
    let covered: BTreeSet<(u32, u32)> = report
        .pairs
        .iter()
        .flat_map(|o| {
            let (a, b) = (o.a, o.b);
            [(a, b), (b, a), (k.neg(a), k.neg(b)), (k.neg(b), k.neg(a))]
        })
        .collect();
    assert_eq!(covered.len(), 25);
    assert_eq!(report.pairs.len() as u64 + report.skipped, 15);
    for o in &report.pairs {
        let w = o.status.witness().unwrap();
        let f = ExtField::new(c.ground_arc().clone(), w.poly.iter().copied().collect());
        // −ξ is a root of (−1)^n P(−x), a witness for (−a, −b).
        let neg_xi = f.neg(&f.x());
        let inv = f.inv(&neg_xi).unwrap();
        assert_eq!(f.trace_frobenius(&neg_xi), k.neg(o.a));
        assert_eq!(f.trace_frobenius(&inv), k.neg(o.b));
        assert!(c.group_order().is_primitive(&f, &f.add(&neg_xi, &inv)));
    }
    // Not applied when q ≡ 3 (mod 4).
    let c7 = ctx(7, 1, 5);
    let r7 = verify_membership(&c7, 3, &opts).unwrap();
    assert!(!r7.negation_reduction);
    assert_eq!(r7.skipped, 0);
}

#[test]
fn explicit_pairs() {
    let c = ctx(3, 1, 5);
    let opts = VerifyOptions {
        pairs: Some(vec![(2, 1), (1, 2)]),
        ..Default::default()
    };
    let report = verify_membership(&c, 3, &opts).unwrap();
    assert_eq!(report.pairs.len(), 2);
    assert_eq!((report.pairs[0].a, report.pairs[0].b), (2, 1));
    assert_eq!((report.pairs[1].a, report.pairs[1].b), (1, 2));
    let bad = VerifyOptions {
        pairs: Some(vec![(3, 0)]),
        ..Default::default()
    };
    assert!(verify_membership(&c, 3, &bad).is_err());
}

/// Each qualifying ξ has a minimal polynomial of the drawn shape, and each
/// such polynomial has n qualifying roots, so a trial succeeds with
/// probability count / (n (q − 1) q^{n−3}).
#[test]
fn trial_counts_follow_the_geometric_model() {
    for (p, m, n) in [(7u32, 1u32, 5u32), (2, 2, 6), (3, 2, 5)] {
        let c = ctx(p, m, n);
        let q = c.q();
        let (a, b) = (1, c.ground().generator());
        let shapes = n as f64 * (q - 1) as f64 * (q as f64).powi(n as i32 - 3);
        let success = brute_count(&c, a, b) as f64 / shapes;
        let mu = 1.0 / success;
        let runs = 400u64;
        let total: u64 = (0..runs)
            .map(|r| {
                let mut rng = pair_rng(r, 1, 1);
                verify_pair(&c, a, b, &mut rng, u64::MAX, C0Mode::RandomNonzero)
                    .unwrap()
                    .trials()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let sigma = ((1.0 - success) / runs as f64).sqrt() / success;
        assert!(
            (mean - mu).abs() < 3.0 * sigma,
            "({q}, {n}) mean {mean} vs {mu} ± {sigma}"
        );
        // Pooled over all pairs, the heuristic is off only by the factor
        // q/(q − 1): drawing c₀ ≠ 0 discards reducible polynomials with a
        // zero root. Single pairs can be further off.
        let f = c.ext();
        let all = c
            .elements()
            .skip(1)
            .filter(|xi| c.is_primitive(&f.add(xi, &f.inv(xi).unwrap())))
            .count() as f64;
        let pooled = (q as f64).powi(2) * shapes / all;
        let rough = expected_trials(q as u64, n).unwrap() * (q - 1) as f64 / q as f64;
        assert!(
            (rough / pooled - 1.0).abs() < 0.05,
            "({q}, {n}) {rough} vs {pooled}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_over_f9(n in 3usize..9, a in 0u32..9, b in 0u32..9, seed in any::<u64>()) {
        let k = std::sync::Arc::new(GroundField::new(3, 2, &mut ChaCha8Rng::seed_from_u64(6)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 * n {
            let p = random_trace_polynomial(&k, n, a, b, &mut rng, C0Mode::RandomNonzero).unwrap();
            if is_irreducible(&k, &p) {
                check_roots(&k, &p, a, b);
            }
        }
    }
}
