use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use trace_sieve::criteria::{modified_sieve_criterion, split_from_primes};
use trace_sieve::ntheory::factor_pow_minus_one;
use trace_sieve::survey::*;

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn is_prime_power(q: u64) -> bool {
    (2..=q).find(|d| q % d == 0).is_some_and(|p| {
        let mut r = q;
        while r % p == 0 {
            r /= p;
        }
        r == 1
    })
}

fn trial_primes(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn default_report(n: u32) -> SurveyReport {
    eliminate_for_n(n, &SurveyConfig::default()).unwrap()
}

#[test]
fn config_text_round_trips() {
    let text = "# a comment\nsieve.s_max = 12\n\nn5.j18.s = 15  # trailing\nmodified_sieve = false\nsieve.exact_s_max = 7\naudit.seed = 99\n";
    let cfg = SurveyConfig::parse(text).unwrap();
    assert_eq!(cfg.s_max, 12);
    assert_eq!(cfg.per_j_s.get(&(5, 18)), Some(&15));
    assert!(!cfg.modified_sieve);
    assert_eq!(cfg.exact_s_max, Some(7));
    assert_eq!(SurveyConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert_eq!(
        SurveyConfig::parse(&SurveyConfig::default().to_text()).unwrap(),
        SurveyConfig::default()
    );
}

#[test]
fn config_errors() {
    assert!(matches!(
        SurveyConfig::parse("sieve.smax = 3"),
        Err(ConfigError::UnknownKey(_))
    ));
    assert!(matches!(
        SurveyConfig::parse("sieve.s_max = x"),
        Err(ConfigError::BadValue { .. })
    ));
    assert!(matches!(
        SurveyConfig::parse("just words"),
        Err(ConfigError::Syntax { line: 1, .. })
    ));
}

#[test]
fn table_rows_for_n_7_to_12() {
    let rows: [(u32, &[u64]); 6] = [
        (7, &[2, 3, 4, 5, 7, 11]),
        (8, &[2, 3, 4, 5, 7, 8]),
        (9, &[2, 3, 4]),
        (10, &[2]),
        (11, &[2]),
        (12, &[2]),
    ];
    for (n, row) in rows {
        let r = default_report(n);
        assert_eq!(r.pre_mps_survivors, row, "n = {n}");
    }
}

#[test]
fn modified_sieve_removes_eight_seven() {
    let r = default_report(8);
    assert_eq!(r.survivors, [2, 3, 4, 5, 8]);
    let rec = r.record(7).unwrap();
    assert_eq!(rec.stage, Stage::ModifiedSieve);
    assert!(matches!(rec.evidence, Evidence::Sieve { t: 1, .. }));
    // the split s = 1, t = 1 works as well
    let f = factor_pow_minus_one(&BigUint::from(7u32), 8).unwrap();
    let split = split_from_primes(&f.primes(), 1, 1).unwrap();
    assert!(
        modified_sieve_criterion(&BigUint::from(7u32), 8, &split)
            .unwrap()
            .holds
    );
}

#[test]
fn s6_and_its_reduction() {
    let s6: Vec<u64> = vec![
        2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29, 31, 32, 37, 41, 43, 47, 49, 53,
        59, 61, 64, 67, 71, 73, 79, 81, 83, 89, 101, 103, 107, 109, 113, 121, 131, 137, 139, 149,
        169, 179, 181, 191, 211,
    ];
    assert_eq!(s6.len(), 49);
    let r = default_report(6);
    assert_eq!(r.pre_mps_survivors, s6);
    let removed: Vec<u64> = s6
        .iter()
        .copied()
        .filter(|q| !r.survivors.contains(q))
        .collect();
    assert_eq!(removed, [113, 169, 191]);
    assert_eq!(r.survivors.len(), 46);
}

#[test]
fn large_degrees_leave_nothing() {
    for n in 13..=24 {
        let r = default_report(n);
        assert!(r.survivors.is_empty(), "n = {n}: {:?}", r.survivors);
        assert!(r.pre_mps_survivors.is_empty(), "n = {n}");
    }
    // (2, 16): ω(2^16 − 1) = 4 and the whole of ω = 4 is covered by the sieve
    let r = default_report(16);
    assert!(r.records.is_empty());
    assert_eq!(r.stage_counts.get("prime_sieve"), Some(&1));
    assert_eq!(r.omega_plans[3].eliminated_by, Some(Stage::PrimeSieve));
    for n in [25, 40, 1000] {
        let r = default_report(n);
        assert!(r.robin.as_ref().unwrap().passes);
        assert!(r.records.is_empty() && r.survivors.is_empty());
    }
}

#[test]
fn degrees_below_six_are_rejected() {
    assert!(eliminate_for_n(5, &SurveyConfig::default()).is_err());
    assert!(survey_p2(4, &SurveyConfig::default()).is_err());
}

#[test]
fn report_bookkeeping() {
    for n in 6..=9 {
        let r = default_report(n);
        let total: u64 = r.stage_counts.values().sum();
        assert_eq!(total, r.prime_powers, "n = {n}");
        let expected = (2..r.q_limit).filter(|&q| is_prime_power(q)).count() as u64;
        assert_eq!(r.prime_powers, expected);
        assert!(r.records.windows(2).all(|w| w[0].q < w[1].q));
        assert!(r.survivors.windows(2).all(|w| w[0] < w[1]));
        for q in &r.survivors {
            assert!(r.pre_mps_survivors.contains(q));
        }
        for rec in &r.records {
            let counted = r.stage_counts.get(rec.stage.as_str()).copied().unwrap_or(0);
            assert!(counted >= 1);
        }
    }
}

#[test]
fn every_record_survives_audit() {
    for n in [6, 7, 8] {
        let r = default_report(n);
        let audit = spot_audit(&r, 10_000, 3).unwrap();
        assert_eq!(audit.sampled, r.records.len());
        assert!(audit.failures.is_empty(), "{:?}", audit.failures);
    }
}

#[test]
fn tampered_records_fail_audit() {
    let mut r = default_report(6);
    let i = r.records.iter().position(|x| x.q == 113).unwrap();
    r.records[i].evidence = Evidence::Sieve {
        criterion: "prime_sieve".into(),
        s: 1,
        t: 0,
        omega: r.records[i].omega_exact.unwrap(),
        margin: 2.0,
    };
    r.records[i].stage = Stage::PrimeSieve;
    let audit = spot_audit(&r, 10_000, 3).unwrap();
    assert_eq!(audit.failures.len(), 1);
}

#[test]
fn weaker_configuration_never_loses_survivors() {
    let weak = SurveyConfig::parse("sieve.s_max = 2\nsieve.exact_s_max = 2").unwrap();
    let no_mps = SurveyConfig::parse("modified_sieve = false").unwrap();
    for n in [6, 7, 8] {
        let strong = default_report(n);
        for cfg in [&weak, &no_mps] {
            let w = eliminate_for_n(n, cfg).unwrap();
            let ws: BTreeSet<u64> = w.survivors.iter().copied().collect();
            assert!(
                strong.survivors.iter().all(|q| ws.contains(q)),
                "n = {n}: {:?} vs {:?}",
                strong.survivors,
                w.survivors
            );
        }
    }
}

#[test]
fn per_omega_override_is_logged() {
    let cfg = SurveyConfig::parse("n6.j10.s = 3").unwrap();
    let r = eliminate_for_n(6, &cfg).unwrap();
    let plan = r.omega_plans.iter().find(|p| p.j == 10).unwrap();
    assert_eq!(plan.s, Some(3));
    assert!(r.config.contains("n6.j10.s = 3"));
    let bad = SurveyConfig::parse("n6.j10.s = 11").unwrap();
    assert!(eliminate_for_n(6, &bad).is_err());
}

#[test]
fn json_round_trip_and_replay() {
    let r = default_report(7);
    let json = report_json(&r).unwrap();
    let back: SurveyReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    let cfg = SurveyConfig::parse(&r.config).unwrap();
    let replay = eliminate_for_n(7, &cfg).unwrap();
    assert_eq!(report_hash(&replay).unwrap(), report_hash(&r).unwrap());
    assert_eq!(report_hash(&r).unwrap().len(), 64);
}

#[test]
fn csv_has_one_row_per_survivor() {
    for n in [6, 12, 20] {
        let r = default_report(n);
        let mut buf = Vec::new();
        emit_report(&r, "csv".parse().unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), r.survivors.len() + 1);
        assert!(text.starts_with("q,n,omega,stage,note"));
    }
    let mut buf = Vec::new();
    emit_report(&default_report(9), ReportFormat::Json, &mut buf).unwrap();
    assert!(serde_json::from_slice::<SurveyReport>(&buf).is_ok());
    assert!("xml".parse::<ReportFormat>().is_err());
}

/// C·4^{ω(k)}·(2 + (2s−1)/δ) with δ = 1 − 2Σ1/p over the sieving primes,
/// minimized over every subset of sieving primes.
fn best_cg_rhs(primes: &[u64], c: f64) -> Option<f64> {
    let w = primes.len();
    let mut best: Option<f64> = None;
    for mask in 1u32..(1 << w) {
        let sieve: Vec<u64> = (0..w)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| primes[i])
            .collect();
        let delta = 1.0 - 2.0 * sieve.iter().map(|&p| 1.0 / p as f64).sum::<f64>();
        if delta <= 0.0 {
            continue;
        }
        let s = sieve.len() as f64;
        let k = (w - sieve.len()) as i32;
        let rhs = c * 4f64.powi(k) * (2.0 + (2.0 * s - 1.0) / delta);
        best = Some(best.map_or(rhs, |b: f64| b.min(rhs)));
    }
    best
}

#[test]
fn cubic_even_exponents() {
    let r = survey_cubic(&SurveyConfig::default()).unwrap();
    let c = r.cubic.as_ref().unwrap();
    let stated: BTreeSet<u32> = [1, 2, 3, 4, 6, 8, 10, 12, 20].into();
    let ours: BTreeSet<u32> = c.even_survivor_exponents.iter().copied().collect();
    assert!(stated.is_subset(&ours));
    let extra: Vec<u32> = ours.difference(&stated).copied().collect();
    assert_eq!(extra, [5, 7, 16]);
    // the extra exponents fail for every split, not just top-s ones
    for alpha in extra {
        let q = 1u64 << alpha;
        let mut ps = trial_primes(q - 1);
        ps.extend(trial_primes(q * q + q + 1));
        ps.sort();
        ps.dedup();
        let rhs = best_cg_rhs(&ps, 2.0).unwrap();
        assert!((q as f64).sqrt() < 0.99 * rhs, "alpha = {alpha}");
    }
    assert_eq!(
        r.survivors,
        ours.iter().map(|&a| 1u64 << a).collect::<Vec<_>>()
    );
    assert_eq!(c.even.len(), 44);
}

#[test]
fn cubic_eliminations_replay() {
    let r = survey_cubic(&SurveyConfig::default()).unwrap();
    for rec in r.records.iter().filter(|x| x.stage == Stage::PrimeSieve) {
        let Evidence::Sieve { s, .. } = rec.evidence else {
            panic!("missing evidence for {}", rec.q)
        };
        let f = factor_pow_minus_one(&BigUint::from(rec.q), 3).unwrap();
        let ps: Vec<f64> = f.primes().iter().map(|p| p.to_f64().unwrap()).collect();
        let sieve = &ps[ps.len() - s..];
        let delta = 1.0 - 2.0 * sieve.iter().map(|p| 1.0 / p).sum::<f64>();
        let k = (ps.len() - s) as i32;
        let rhs = 2.0 * 4f64.powi(k) * (2.0 + (2.0 * s as f64 - 1.0) / delta);
        assert!((rec.q as f64).sqrt() > rhs, "q = {}", rec.q);
    }
    let audit = spot_audit(&r, 100, 5).unwrap();
    assert_eq!(audit.sampled, r.records.len());
    assert!(audit.failures.is_empty(), "{:?}", audit.failures);
}

#[test]
fn cubic_window_and_final_checks() {
    let r = survey_cubic(&SurveyConfig::default()).unwrap();
    let c = r.cubic.unwrap();
    let w = &c.window;
    assert_eq!(w.j, 24);
    assert!(
        (w.lower_approx / 2.87e11 - 1.0).abs() < 0.05,
        "{}",
        w.lower_approx
    );
    assert!(
        (w.upper_approx / 1.77e13 - 1.0).abs() < 0.05,
        "{}",
        w.upper_approx
    );
    assert_eq!(w.live_m, [7, 8, 9, 10]);
    assert!(w.hybrid_lower > w.lower);
    // first 23 primes, odd q: every top-s split needs q above 8e12
    let first: Vec<u64> = (2..100).filter(|&p| is_prime(p)).take(23).collect();
    let best = (1..=23)
        .filter_map(|s| {
            let delta = 1.0 - 2.0 * first[23 - s..].iter().map(|&p| 1.0 / p as f64).sum::<f64>();
            (delta > 0.0)
                .then(|| 3.0 * 4f64.powi(23 - s as i32) * (2.0 + (2.0 * s as f64 - 1.0) / delta))
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best * best > 1.05e13);
    let j23 = c.final_checks.iter().find(|f| f.j == 23).unwrap();
    assert!(!j23.first_j_holds);
    assert!(j23.per_m_holds);
    assert!(c
        .final_checks
        .iter()
        .filter(|f| f.j < 23)
        .all(|f| f.first_j_holds));
    assert!(c.per_m_all_hold);
    assert!(!c.first_j_all_hold);
    assert_eq!(c.high_j.iter().map(|h| h.j).collect::<Vec<_>>(), [25, 26]);
}

#[test]
fn n5_checkpoints() {
    let r = survey_n5(&SurveyConfig::default()).unwrap();
    let evens: Vec<u64> = r.survivors.iter().copied().filter(|q| q % 2 == 0).collect();
    assert_eq!(evens, [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 4096]);
    assert!(r.survivors.contains(&27691));
    assert!(!r.survivors.contains(&652831));
    let rec = r.record(652831).unwrap();
    assert_eq!(rec.omega_exact, Some(14));
    assert_eq!(rec.stage, Stage::PrimeSieve);
    assert_eq!(r.survivors.last(), Some(&62791));
    for q in (2..=1181).filter(|&q| is_prime_power(q)) {
        assert!(r.survivors.contains(&q), "q = {q}");
    }
    let plan20 = r.omega_plans.iter().find(|p| p.j == 20).unwrap();
    assert_eq!(plan20.forced, [2, 3, 5, 7, 13]);
    assert_eq!(plan20.odd.unwrap().modulus, 2730);
    for j in 21..=23 {
        let plan = &r.omega_plans[j - 1];
        assert_eq!(plan.eliminated_by, Some(Stage::Hybrid), "j = {j}");
    }
    assert!(r.omega_plans[23..]
        .iter()
        .all(|p| p.eliminated_by.is_some()));
    let total: u64 = r.stage_counts.values().sum();
    assert_eq!(total, r.prime_powers);
    let audit = spot_audit(&r, 100, 1).unwrap();
    assert_eq!(audit.sampled, 100);
    assert!(audit.failures.is_empty(), "{:?}", audit.failures);
    println!(
        "n = 5: {} before the modified sieve (max {:?}), {} after",
        r.pre_mps_survivors.len(),
        r.pre_mps_survivors.last(),
        r.survivors.len()
    );
}
