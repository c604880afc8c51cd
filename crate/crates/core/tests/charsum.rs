use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use trace_sieve::charsum::*;
use trace_sieve::gfarith::*;
use trace_sieve::ntheory::{euler_phi, is_prime_power, prime_power_decompose};

fn ctx(p: u32, m: u32, n: u32) -> FieldCtx {
    build_context(p, m, n, 11).unwrap()
}

fn near(a: Complex64, b: f64) -> bool {
    (a - Complex64::new(b, 0.0)).norm() < 1e-6
}

/// Every psi of every order dividing q^n − 1.
fn all_characters(sys: &CharacterSystem) -> Vec<Psi> {
    let n = sys.group_order();
    (1..=n)
        .filter(|d| n % d == 0)
        .flat_map(|d| sys.characters_of_order(d))
        .collect()
}

#[test]
fn trivial_sum_counts_the_field() {
    for (p, m, n) in [(2, 1, 6), (3, 1, 4), (5, 2, 2)] {
        let c = ctx(p, m, n);
        let sys = CharacterSystem::new(&c).unwrap();
        let zero = RationalFn::zero(c.ext());
        let s = weil_sum(&sys, &zero, &zero, Psi::trivial(), 1);
        assert!(near(s, (sys.group_order() + 1) as f64));
        let s3 = weil_sum(&sys, &zero, &zero, Psi::trivial(), 3);
        assert!(near(s3, 3.0 * (sys.group_order() + 1) as f64));
    }
}

#[test]
fn oracle_refuses_large_fields() {
    let c = ctx(2, 1, 21);
    assert!(c.zech().is_some());
    assert!(matches!(
        CharacterSystem::new(&c),
        Err(GfError::ResourceLimit(_))
    ));
    let c = build_context_with(3, 1, 4, 1, ZechMode::Off).unwrap();
    assert!(matches!(
        CharacterSystem::new(&c),
        Err(GfError::ResourceLimit(_))
    ));
}

#[test]
fn additive_character_is_a_homomorphism() {
    for (p, m) in [(2, 3), (3, 2), (7, 1), (5, 2)] {
        let c = ctx(p, m, 2);
        let sys = CharacterSystem::new(&c).unwrap();
        let k = c.ground();
        for x in 0..k.q() {
            for y in 0..k.q() {
                let lhs = sys.lambda(k.add(x, y));
                assert!((lhs - sys.lambda(x) * sys.lambda(y)).norm() < 1e-9);
            }
        }
        // nontrivial, and λ̂ sums to zero over the extension
        assert!((0..k.q()).any(|x| !near(sys.lambda(x), 1.0)));
        let total: Complex64 = c.elements().map(|x| sys.lambda_hat(&x)).sum();
        assert!(total.norm() < 1e-6);
    }
}

#[test]
fn multiplicative_characters_have_exact_order() {
    let c = ctx(3, 1, 4);
    let sys = CharacterSystem::new(&c).unwrap();
    let g = c.generator();
    for d in [1u64, 2, 4, 5, 8, 10, 16, 20, 40, 80] {
        let chars = sys.characters_of_order(d);
        assert_eq!(chars.len() as u64, euler_phi(d).unwrap().to_u64().unwrap());
        for psi in chars {
            let z = sys.psi(psi, &g);
            assert!((z.powu(d as u32) - 1.0).norm() < 1e-9);
            for e in 1..d {
                assert!((z.powu(e as u32) - 1.0).norm() > 1e-6);
            }
        }
    }
    assert!(sys.characters_of_order(3).is_empty());
    // ψ is multiplicative
    let psi = sys.characters_of_order(16)[3];
    let els: Vec<Elem> = c.elements().skip(1).step_by(7).collect();
    for a in &els {
        for b in &els {
            let lhs = sys.psi(psi, &c.ext().mul(a, b));
            assert!((lhs - sys.psi(psi, a) * sys.psi(psi, b)).norm() < 1e-9);
        }
    }
}

#[test]
fn transform_routes_agree_with_brute_force() {
    for (p, m, n) in [(3, 1, 3), (2, 1, 5), (2, 2, 2), (5, 1, 2)] {
        let c = ctx(p, m, n);
        let sys = CharacterSystem::new(&c).unwrap();
        let f = c.ext();
        let g = RationalFn::g(f);
        let fft = plan_family_sums(&sys);
        let chars = all_characters(&sys);
        for u in 0..c.q() {
            for v in 0..c.q() {
                let fuv = RationalFn::f_uv(f, u, v);
                let dft = weil_sums_dft(&sys, &fuv, &g);
                let fam = family_sums(&sys, u, v, &*fft);
                for &psi in &chars {
                    let bf = weil_sum(&sys, &fuv, &g, psi, 1);
                    let i = dft_index(&sys, psi);
                    assert!(
                        (bf - dft[i]).norm() < 1e-6,
                        "({p},{m},{n}) u={u} v={v} {psi:?}"
                    );
                    assert!((bf - fam[i]).norm() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn family_sums_are_symmetric() {
    let c = ctx(5, 1, 3);
    let sys = CharacterSystem::new(&c).unwrap();
    let k = c.ground();
    let fft = plan_family_sums(&sys);
    let n = sys.group_order() as usize;
    for u in 0..5 {
        for v in 0..5 {
            let s = family_sums(&sys, u, v, &*fft);
            let swapped = family_sums(&sys, v, u, &*fft);
            let negated = family_sums(&sys, k.neg(u), k.neg(v), &*fft);
            for j in 0..n {
                assert!((s[j] - swapped[j]).norm() < 1e-6);
                assert!((s[j].conj() - negated[(n - j) % n]).norm() < 1e-6);
            }
        }
    }
}

#[test]
fn family_pole_counts() {
    let c = PoleCounts::for_family(true, true, 3);
    assert_eq!((c.l, c.l0, c.l1, c.l2), (3, 2, 2, 1));
    assert_eq!(c.constant(), 4);
    assert_eq!(PoleCounts::for_family(true, false, 7).constant(), 3);
    assert_eq!(PoleCounts::for_family(false, true, 7).constant(), 2);
    assert_eq!(PoleCounts::for_family(true, true, 2).constant(), 3);
    assert_eq!(conductor_degree(true, true, 3), 4);
    assert_eq!(conductor_degree(true, false, 3), 3);
    assert_eq!(conductor_degree(false, true, 3), 3);
    assert_eq!(conductor_degree(false, false, 3), 2);
    assert_eq!(conductor_degree(true, true, 2), 3);
    assert_eq!(conductor_degree(false, true, 2), 2);
    assert_eq!(conductor_degree(false, false, 2), 1);
}

#[test]
fn pole_count_bound_holds_over_f9() {
    for (p, m, n) in [(3, 1, 2), (3, 2, 1)] {
        let sys_ctx = ctx(p, m, n);
        let sys = CharacterSystem::new(&sys_ctx).unwrap();
        let r = check_character_sum_bounds(&sys);
        assert!(r.tally(SumBound::PoleCount).ok(), "{r:?}");
        assert!(r.tally(SumBound::CaseConstants).ok(), "{r:?}");
        assert!(r.tally(SumBound::Conductor).ok(), "{r:?}");
        // (q − 1)² pairs with uv ≠ 0 and 2(q − 1) with one of them zero,
        // each against every nontrivial ψ
        let q = sys_ctx.q() as u64;
        let psis = sys.group_order() - 1;
        assert_eq!(r.tally(SumBound::PoleCount).checked, (q * q - 1) * psis);
        assert_eq!(
            r.tally(SumBound::Conductor).checked,
            (q * q - 1) * (psis + 1) + psis
        );
    }
}

#[test]
fn kloosterman_sums_obey_weil() {
    let c = ctx(3, 1, 5);
    let sys = CharacterSystem::new(&c).unwrap();
    let f = c.ext();
    let g = RationalFn::g(f);
    let root = ((sys.group_order() + 1) as f64).sqrt();
    for u in 1..3 {
        for v in 1..3 {
            let s = weil_sum(&sys, &RationalFn::f_uv(f, u, v), &g, Psi::trivial(), 1);
            assert!(s.norm() <= 2.0 * root);
        }
    }
}

#[test]
fn conductor_bound_holds_on_small_fields() {
    for q in 2u64..=64 {
        let Some(pp) = prime_power_decompose(q) else {
            continue;
        };
        for n in 1..=8 {
            if q.pow(n) > 256 {
                break;
            }
            let c = ctx(pp.p as u32, pp.alpha, n);
            let sys = CharacterSystem::new(&c).unwrap();
            let r = check_character_sum_bounds(&sys);
            assert!(r.tally(SumBound::Conductor).ok(), "q={q} n={n}: {r:?}");
            assert!(r.tally(SumBound::Conductor).worst_ratio <= 1.0 + 1e-9);
        }
    }
}

#[test]
fn pole_count_estimate_breaks_its_own_symmetry() {
    // S(0, v) = S(v, 0), yet the counts give 2 for one and 3 for the other;
    // over F_{3^4} the sum reaches 3√Q for a quadratic ψ
    let c = ctx(3, 1, 4);
    let sys = CharacterSystem::new(&c).unwrap();
    let fft = plan_family_sums(&sys);
    let quad = sys.characters_of_order(2)[0];
    let root = 9.0;
    let worst = (1..3)
        .map(|v| family_sums(&sys, 0, v, &*fft)[dft_index(&sys, quad)].norm())
        .fold(0.0, f64::max);
    assert!(worst > 2.0 * root);
    assert!(worst <= 3.0 * root + 1e-6);
    let r = check_character_sum_bounds(&sys);
    let pc = r.tally(SumBound::PoleCount);
    assert!(!pc.ok());
    assert_eq!(pc.first_failure.unwrap().0, 0);
}

#[test]
fn efree_indicator_examples() {
    let c = ctx(2, 1, 6);
    let sys = CharacterSystem::new(&c).unwrap();
    let mut total = Complex64::new(0.0, 0.0);
    for xi in c.elements().skip(1) {
        assert!(near(indicator_efree(&sys, &xi, 1), 1.0));
        total += indicator_efree(&sys, &xi, 63);
    }
    assert!(near(total, 36.0));
}

#[test]
fn efree_indicator_agrees_with_the_power_test() {
    let c = ctx(3, 1, 4);
    let sys = CharacterSystem::new(&c).unwrap();
    let divisors: Vec<u64> = (1..=80).filter(|d| 80 % d == 0).collect();
    for xi in c.elements().skip(1) {
        for &e in &divisors {
            let v = indicator_efree(&sys, &xi, e);
            let expect = c.is_e_free(&xi, &BigUint::from(e));
            assert!(near(v, if expect { 1.0 } else { 0.0 }), "e={e}");
        }
    }
}

#[test]
fn trace_pair_indicator() {
    let c = ctx(2, 1, 6);
    let sys = CharacterSystem::new(&c).unwrap();
    let f = c.ext();
    let xi = c
        .elements()
        .skip(1)
        .find(|x| f.trace(x) == 0 && f.trace(&f.inv(x).unwrap()) == 0)
        .unwrap();
    assert!(near(indicator_trace_pair(&sys, &xi, 0, 0), 1.0));

    for (p, m, n) in [(3, 1, 3), (2, 2, 3)] {
        let c = ctx(p, m, n);
        let sys = CharacterSystem::new(&c).unwrap();
        let f = c.ext();
        let q = c.q();
        let mut by_pair = vec![Complex64::new(0.0, 0.0); (q * q) as usize];
        let mut direct = vec![0u64; (q * q) as usize];
        for xi in c.elements().skip(1) {
            let (ta, tb) = (f.trace(&xi), f.trace(&f.inv(&xi).unwrap()));
            direct[(ta * q + tb) as usize] += 1;
            let mut unity = Complex64::new(0.0, 0.0);
            for a in 0..q {
                for b in 0..q {
                    let v = indicator_trace_pair(&sys, &xi, a, b);
                    assert!(near(v, 0.0) || near(v, 1.0));
                    unity += v;
                    by_pair[(a * q + b) as usize] += v;
                }
            }
            assert!(near(unity, 1.0));
        }
        for (s, d) in by_pair.iter().zip(&direct) {
            assert!(near(*s, *d as f64));
        }
    }
}

#[test]
fn ne_counts_for_the_exception() {
    let c = ctx(2, 1, 6);
    let e = BigUint::from(63u32);
    assert_eq!(count_ne(&c, 0, 0, &e), 0);
    assert_eq!(count_ne(&c, 1, 1, &e), 0);
    assert!(count_ne(&c, 0, 1, &e) >= 1);
    assert!(count_ne(&c, 1, 0, &e) >= 1);
}

#[test]
fn ne_table_matches_direct_counts() {
    for (p, m, n) in [(2, 1, 6), (3, 1, 4), (2, 2, 3), (5, 1, 3)] {
        let c = ctx(p, m, n);
        let sys = CharacterSystem::new(&c).unwrap();
        let t = NeTable::build(&sys);
        let q = c.q();
        for mask in 0..=t.full_mask() {
            let e = BigUint::from(t.mask_value(mask));
            for a in 0..q {
                for b in 0..q {
                    assert_eq!(
                        t.get(a, b, mask),
                        count_ne(&c, a, b, &e),
                        "({p},{m},{n}) e={e} a={a} b={b}"
                    );
                }
            }
        }
        // every nonzero ξ with ξ + ξ^{-1} ≠ 0 lands in exactly one pair
        let total: u64 = t.rows().map(|(_, r)| r[0]).sum();
        let skip = if p == 2 { 1 } else { 2 };
        assert_eq!(total, sys.group_order() - skip);
        let rows = t.distinct_rows();
        assert_eq!(rows.iter().map(|(_, m)| m).sum::<u64>(), (q * q) as u64);
    }
}

#[test]
fn ne_via_characters_matches_table() {
    // N_e from the two indicators multiplied out, on a tiny field
    let c = ctx(3, 1, 3);
    let sys = CharacterSystem::new(&c).unwrap();
    let f = c.ext();
    let t = NeTable::build(&sys);
    for mask in 0..=t.full_mask() {
        let e = t.mask_value(mask);
        for (a, b) in [(0, 0), (1, 2), (2, 2)] {
            let mut acc = Complex64::new(0.0, 0.0);
            for xi in c.elements().skip(1) {
                let gamma = f.add(&xi, &f.inv(&xi).unwrap());
                if f.is_zero(&gamma) {
                    continue;
                }
                acc += indicator_efree(&sys, &gamma, e) * indicator_trace_pair(&sys, &xi, a, b);
            }
            assert!(near(acc, t.get(a, b, mask) as f64));
        }
    }
}

#[test]
fn count_inequalities_on_small_fields() {
    for q in 2u64..=1024 {
        if !is_prime_power(q) {
            continue;
        }
        let pp = prime_power_decompose(q).unwrap();
        for n in 1..=10 {
            if q.pow(n) > 1024 {
                break;
            }
            let c = ctx(pp.p as u32, pp.alpha, n);
            let sys = CharacterSystem::new(&c).unwrap();
            let r = check_bounds(&NeTable::build(&sys));
            assert!(r.ne_bound.ok(), "{r:?}");
            assert!(r.sieve_inequality.ok(), "{r:?}");
            assert!(r.nkp_bound.ok(), "{r:?}");
            assert_eq!(r.ne_bound.checked, (q * q) << r.omega);
        }
    }
}

#[test]
fn n1_tally_matches_direct_counts() {
    let one = BigUint::from(1u32);
    for (p, m, n) in [(3, 1, 4), (2, 1, 4), (4, 1, 3)] {
        let (p, m) = if p == 4 { (2, 2) } else { (p, m) };
        let c = ctx(p, m, n);
        let sys = CharacterSystem::new(&c).unwrap();
        let r = check_bounds(&NeTable::build(&sys));
        let q = c.q();
        let cap = (q as u64).pow(n - 2);
        let over = (0..q)
            .flat_map(|a| (0..q).map(move |b| (a, b)))
            .filter(|&(a, b)| count_ne(&c, a, b, &one) > cap)
            .count() as u64;
        assert_eq!(r.n1_bound.failures, over, "({p},{m},{n})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicators_are_zero_or_one(idx in 1u64..625, e_pick in 0usize..10, a in 0u32..5, b in 0u32..5) {
        thread_local! {
            static CTX: FieldCtx = build_context(5, 1, 4, 3).unwrap();
        }
        CTX.with(|c| {
            let sys = CharacterSystem::new(c).unwrap();
            let xi = c.ext().from_index(idx);
            let divisors: Vec<u64> = (1..=624).filter(|d| 624 % d == 0).collect();
            let e = divisors[e_pick % divisors.len()];
            let v = indicator_efree(&sys, &xi, e);
            prop_assert!(near(v, 0.0) || near(v, 1.0));
            let w = indicator_trace_pair(&sys, &xi, a, b);
            prop_assert!(near(w, 0.0) || near(w, 1.0));
            Ok(())
        })?;
    }
}
