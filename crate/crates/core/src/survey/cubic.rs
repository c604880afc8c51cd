//! The cubic problem: primitive ξ with prescribed trace T(ξ) over F_{q^3},
//! decided by the Cohen–Gupta criterion.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CandidateRecord, Evidence, Result, Stage, SurveyConfig, SurveyError, SurveyReport};
use crate::criteria::{best_cg, best_cg_threshold, big_to_f64, first_j_config};
use crate::hybrid::{
    cg_threshold_fn, hybrid_lower_bound, m_bound, per_m_analysis, plain_bound, HybridConfig, MCase,
};
use crate::ntheory::factor_pow_minus_one;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenCase {
    pub alpha: u32,
    pub q: u64,
    pub omega: usize,
    /// Split of the first passing Cohen–Gupta evaluation.
    pub s: Option<usize>,
    pub survives: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicHighJ {
    pub j: usize,
    #[serde(with = "crate::serde_big")]
    pub hybrid_bound: BigUint,
    pub worst_m: usize,
    #[serde(with = "crate::serde_big::option")]
    pub threshold: Option<BigUint>,
    pub s: Option<usize>,
    /// m whose bound stays below the threshold of their own configuration.
    pub live_m: Vec<usize>,
    /// Either the hybrid bound reaches the first-j threshold or no m is live.
    pub eliminated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicWindow {
    pub j: usize,
    /// ⌈(p_1⋯p_j + 1)^{1/3}⌉.
    #[serde(with = "crate::serde_big")]
    pub lower: BigUint,
    pub lower_approx: f64,
    #[serde(with = "crate::serde_big")]
    pub hybrid_lower: BigUint,
    pub hybrid_lower_approx: f64,
    #[serde(with = "crate::serde_big")]
    pub upper: BigUint,
    pub upper_approx: f64,
    pub s: usize,
    /// m whose own bound lies below the upper end.
    pub feasible_m: Vec<usize>,
    /// m whose bound stays below the threshold of their own configuration.
    pub live_m: Vec<usize>,
    pub per_m: Vec<MCase>,
}

/// Whether every q ≥ `final_q` with ω(q³ − 1) = j passes, odd q (C_q = 3).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicFinal {
    pub j: usize,
    /// The first j primes.
    #[serde(with = "crate::serde_big::option")]
    pub first_j_threshold: Option<BigUint>,
    pub first_j_s: Option<usize>,
    pub first_j_holds: bool,
    /// Largest threshold over the residue-class configurations (m class-A
    /// primes and j − m others) that some q ≥ final_q can have.
    #[serde(with = "crate::serde_big::option")]
    pub per_m_threshold: Option<BigUint>,
    pub per_m_worst: Option<usize>,
    pub per_m_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicSummary {
    pub even: Vec<EvenCase>,
    pub even_survivor_exponents: Vec<u32>,
    pub high_j: Vec<CubicHighJ>,
    pub window: CubicWindow,
    pub final_q: u64,
    pub final_checks: Vec<CubicFinal>,
    pub first_j_all_hold: bool,
    pub per_m_all_hold: bool,
}

const ODD_C: u32 = 3;

fn even_case(alpha: u32) -> Result<(EvenCase, CandidateRecord)> {
    let q = 1u64 << alpha;
    let qb = BigUint::from(q);
    let f = factor_pow_minus_one(&qb, 3)?;
    let w = f.omega();
    let best = best_cg(&qb, &f.primes())?;
    let (stage, evidence) = match &best {
        Some((split, o)) => (
            Stage::PrimeSieve,
            Evidence::Sieve {
                criterion: o.criterion.clone(),
                s: split.s(),
                t: 0,
                omega: w,
                margin: o.lhs_approx / o.rhs_approx,
            },
        ),
        None => (
            Stage::NeedsVerification,
            Evidence::Unresolved {
                reason: "Cohen-Gupta criterion fails for every s".into(),
            },
        ),
    };
    let case = EvenCase {
        alpha,
        q,
        omega: w,
        s: best.as_ref().map(|(sp, _)| sp.s()),
        survives: best.is_none(),
    };
    let rec = CandidateRecord {
        q,
        n: 3,
        omega_exact: Some(w),
        stage,
        evidence,
    };
    Ok((case, rec))
}

/// {2} alone has no Cohen–Gupta split; it is also impossible, since
/// 2 | q³ − 1 means q odd and then q² + q + 1 > 1 is odd.
fn impossible(config: &[u64]) -> bool {
    config == [2]
}

fn final_check(j: usize, final_q: &BigUint) -> CubicFinal {
    let first = best_cg_threshold(&first_j_config(j), ODD_C);
    let first_j_holds = match &first {
        Some((t, _)) => t <= final_q,
        None => j == 1,
    };
    let cfg = HybridConfig::cubic();
    let mut per_m_holds = true;
    let mut worst: Option<(BigUint, usize)> = None;
    for m in cfg.m_range(j) {
        let mb = m_bound(&cfg, j, m);
        if impossible(&mb.config) {
            continue;
        }
        let ps: Vec<BigUint> = mb.config.iter().map(|&p| BigUint::from(p)).collect();
        let reach = if mb.lower > *final_q {
            &mb.lower
        } else {
            final_q
        };
        match best_cg_threshold(&ps, ODD_C) {
            Some((t, _)) => {
                if t > *reach {
                    per_m_holds = false;
                }
                if mb.lower <= *final_q && worst.as_ref().is_none_or(|(w, _)| t > *w) {
                    worst = Some((t, m));
                }
            }
            None => per_m_holds = false,
        }
    }
    CubicFinal {
        j,
        first_j_threshold: first.as_ref().map(|(t, _)| t.clone()),
        first_j_s: first.map(|(_, s)| s),
        first_j_holds,
        per_m_threshold: worst.as_ref().map(|(t, _)| t.clone()),
        per_m_worst: worst.map(|(_, m)| m),
        per_m_holds,
    }
}

pub fn survey_cubic(cfg: &SurveyConfig) -> Result<SurveyReport> {
    if cfg.cubic_alpha_max == 0 || cfg.cubic_alpha_max > 63 {
        return Err(SurveyError::Domain(format!(
            "cubic.alpha_max = {} outside 1..=63",
            cfg.cubic_alpha_max
        )));
    }
    if cfg.cubic_window_j < 2 || cfg.cubic_j_max < cfg.cubic_window_j {
        return Err(SurveyError::Domain(
            "need 2 <= cubic.window_j <= cubic.j_max".into(),
        ));
    }
    let evens: Vec<(EvenCase, CandidateRecord)> = (1..=cfg.cubic_alpha_max)
        .into_par_iter()
        .map(even_case)
        .collect::<Result<_>>()?;
    let (even, records): (Vec<EvenCase>, Vec<CandidateRecord>) = evens.into_iter().unzip();
    let even_survivor_exponents: Vec<u32> = even
        .iter()
        .filter(|c| c.survives)
        .map(|c| c.alpha)
        .collect();

    let hcfg = HybridConfig::cubic();
    let high_j: Vec<CubicHighJ> = (cfg.cubic_window_j + 1..=cfg.cubic_j_max)
        .into_par_iter()
        .map(|j| {
            let hb = hybrid_lower_bound(&hcfg, j);
            let t = best_cg_threshold(&first_j_config(j), ODD_C);
            let live_m: Vec<usize> = per_m_analysis(&hcfg, j, &cg_threshold_fn())
                .iter()
                .filter(|c| c.live)
                .map(|c| c.m)
                .collect();
            let eliminated = live_m.is_empty() || matches!(&t, Some((t, _)) if hb.bound >= *t);
            CubicHighJ {
                j,
                hybrid_bound: hb.bound,
                worst_m: hb.worst_m,
                threshold: t.as_ref().map(|(t, _)| t.clone()),
                s: t.map(|(_, s)| s),
                live_m,
                eliminated,
            }
        })
        .collect();

    let wj = cfg.cubic_window_j;
    let hb = hybrid_lower_bound(&hcfg, wj);
    let (upper, s) = best_cg_threshold(&first_j_config(wj), ODD_C).ok_or_else(|| {
        SurveyError::Domain(format!("no Cohen-Gupta split for the first {wj} primes"))
    })?;
    let feasible_m = hb
        .per_m
        .iter()
        .filter(|mb| mb.lower < upper)
        .map(|mb| mb.m)
        .collect();
    let per_m = per_m_analysis(&hcfg, wj, &cg_threshold_fn());
    let live_m = per_m.iter().filter(|c| c.live).map(|c| c.m).collect();
    let (plain, plain_approx) = plain_bound(3, wj);
    let window = CubicWindow {
        j: wj,
        lower: plain,
        lower_approx: plain_approx,
        hybrid_lower_approx: hb.bound_approx,
        hybrid_lower: hb.bound,
        upper_approx: big_to_f64(&upper),
        upper,
        s,
        feasible_m,
        live_m,
        per_m,
    };

    let final_q = BigUint::from(cfg.cubic_final_q);
    let final_checks: Vec<CubicFinal> = (1..wj)
        .into_par_iter()
        .map(|j| final_check(j, &final_q))
        .collect();

    let mut stage_counts: BTreeMap<String, u64> = BTreeMap::new();
    for r in &records {
        *stage_counts.entry(r.stage.as_str().into()).or_default() += 1;
    }
    let survivors: Vec<u64> = records
        .iter()
        .filter(|r| r.stage == Stage::NeedsVerification)
        .map(|r| r.q)
        .collect();
    let summary = CubicSummary {
        even_survivor_exponents,
        even,
        high_j,
        window,
        final_q: cfg.cubic_final_q,
        first_j_all_hold: final_checks.iter().all(|c| c.first_j_holds),
        per_m_all_hold: final_checks.iter().all(|c| c.per_m_holds),
        final_checks,
    };
    Ok(SurveyReport {
        problem: "cubic".into(),
        n: 3,
        config: cfg.to_text(),
        robin: None,
        primorial_from: None,
        omega_plans: Vec::new(),
        q_limit: (1u64 << cfg.cubic_alpha_max) + 1,
        prime_powers: records.len() as u64,
        factored: records.len() as u64,
        stage_counts,
        pre_mps_survivors: survivors.clone(),
        survivors,
        records,
        cubic: Some(summary),
    })
}
