//! `trace-sieve`: command-line front end.
//!
//! Exit status: 0 when the run completed and the answer is positive (or the
//! report is complete), 2 when it completed with a mathematical negative,
//! 1 on usage or resource errors. `--out -` writes JSON to stdout; without
//! `--out` a short text summary is printed instead.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use trace_sieve::charsum::{check_bounds, check_character_sum_bounds, CharacterSystem, NeTable};
use trace_sieve::criteria::{
    basic_criterion, best_cg, best_modified_sieve, best_prime_sieve, cg_cubic_criterion,
    modified_sieve_criterion, prime_sieve_criterion, split_from_primes, CriterionOutcome,
};
use trace_sieve::gfarith::build_context;
use trace_sieve::hybrid::{
    cg_threshold_fn, divisor_tree, enumerate_progression, hybrid_lower_bound, per_m_analysis,
    plain_bound, sieve_threshold_fn, HybridConfig,
};
use trace_sieve::ntheory::{factor_pow_minus_one, factorize, prime_power_decompose, Factorization};
use trace_sieve::survey::{
    emit_report, spot_audit, survey_cubic, survey_p2, ReportFormat, SurveyConfig,
};
use trace_sieve::verify::{verify_membership, C0Mode, VerifyOptions};

/// Seed used when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 1;

/// Largest field the character-sum check in `oracle` runs on.
const SUM_CHECK_LIMIT: u64 = 1 << 10;

#[derive(Parser, Debug)]
#[command(
    name = "trace-sieve",
    version,
    about = "Primitive elements with prescribed traces"
)]
struct Cli {
    /// Worker threads.
    #[arg(long, global = true, env = "TRACE_SIEVE_THREADS",
          value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Write JSON to this path; `-` for stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Factor N, or q^n − 1 with --q and --n.
    Factor {
        value: Option<String>,
        #[arg(long, requires = "n", conflicts_with = "value")]
        q: Option<String>,
        #[arg(long, requires = "q")]
        n: Option<u32>,
        #[command(flatten)]
        out: Output,
    },
    /// Basic criterion q^{n/2−2} > 2^{ω+2}.
    Bound {
        #[arg(long)]
        q: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        omega: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Sieve criteria on the exact factorization of q^n − 1.
    Sieve {
        #[arg(long)]
        q: String,
        #[arg(long)]
        n: u32,
        /// Sieving primes; without it every split is searched.
        #[arg(long)]
        s: Option<usize>,
        /// Large primes (modified sieve when positive).
        #[arg(long, default_value_t = 0, requires = "s")]
        t: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Cohen–Gupta criterion for the cubic problem on q^3 − 1.
    Cubic {
        #[arg(long)]
        q: String,
        #[arg(long)]
        s: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Residue-class lower bound on q for ω(q^n − 1) = j.
    Hybrid {
        #[arg(long, value_parser = ["3", "5"])]
        n: String,
        #[arg(long)]
        j: usize,
        /// Primes assumed to divide q^n − 1.
        #[arg(long, value_delimiter = ',')]
        forced: Vec<u64>,
        /// Also run the forced-divisor tree (n = 5).
        #[arg(long)]
        tree: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Prime powers q ≡ 1 (mod modulus), q ≤ max, with ω(q^n − 1).
    Enumerate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        modulus: u64,
        #[arg(long)]
        max: u64,
        #[arg(long, default_value_t = 5)]
        n: u32,
        #[arg(long)]
        omega: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Exact N_e counts by exhausting F_{q^n}, with the bound checks.
    Oracle {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u32,
        /// List N_e for every pair.
        #[arg(long)]
        all_pairs: bool,
        /// Defaults to q^n − 1.
        #[arg(long)]
        e: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Find a witness for every pair (a, b), or prove it has none.
    Verify {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        trial_cap: Option<u64>,
        /// `all` or `A,B`; may be repeated.
        #[arg(long, default_value = "all")]
        pairs: Vec<PairsArg>,
        #[arg(long, value_enum, default_value_t = C0Arg::Random)]
        c0: C0Arg,
        /// Skip (−a, −b) once (a, b) is done, when q ≡ 1 (mod 4).
        #[arg(long)]
        negation: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Candidate elimination pipeline.
    Survey {
        #[arg(long, value_enum)]
        problem: Problem,
        #[arg(long, required_if_eq("problem", "p2"))]
        n: Option<u32>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=value`, applied after the config file.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum C0Arg {
    Random,
    MinusOne,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Problem {
    P2,
    Cubic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
enum PairsArg {
    All,
    One(u32, u32),
}

impl FromStr for PairsArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            return Ok(PairsArg::All);
        }
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `all` or `A,B`, got {s}"))?;
        let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x}: {e}"));
        Ok(PairsArg::One(parse(a)?, parse(b)?))
    }
}

/// How a completed run ended.
enum Verdict {
    Positive,
    Negative,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Positive
        } else {
            Verdict::Negative
        }
    }
}

fn parse_big(s: &str) -> Result<BigUint> {
    let clean = s.replace('_', "");
    BigUint::from_str(&clean).map_err(|_| anyhow!("not a nonnegative integer: {s}"))
}

fn parse_q(s: &str) -> Result<BigUint> {
    let q = parse_big(s)?;
    if q < BigUint::from(2u32) {
        bail!("q must be at least 2, got {q}");
    }
    Ok(q)
}

/// Writes JSON when `--out` is given, otherwise the text summary.
fn emit<T: Serialize>(out: &Output, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    match &out.out {
        Some(path) => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            write_to(path, s.as_bytes())
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text().as_bytes())?;
            Ok(())
        }
    }
}

fn write_to(path: &PathBuf, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        let mut stdout = io::stdout().lock();
        stdout.write_all(bytes)?;
        stdout.flush()?;
    } else {
        let mut f = BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        f.write_all(bytes)?;
        f.flush()?;
    }
    Ok(())
}

fn factor_text(f: &Factorization) -> String {
    if f.factors().is_empty() {
        return "1".into();
    }
    f.factors()
        .iter()
        .map(|(p, e)| {
            if *e == 1 {
                p.to_string()
            } else {
                format!("{p}^{e}")
            }
        })
        .collect::<Vec<_>>()
        .join(" * ")
}

fn factor_json(f: &Factorization) -> Value {
    json!({
        "value": f.value().to_string(),
        "factors": f.factors().iter().map(|(p, e)| json!([p.to_string(), e])).collect::<Vec<_>>(),
        "omega": f.omega(),
        "radical": f.radical().to_string(),
        "euler_phi": f.euler_phi().to_string(),
        "moebius": f.moebius(),
    })
}

fn outcome_line(o: &CriterionOutcome) -> String {
    format!(
        "{}: {} ({:.6e} vs {:.6e}) holds={}\n",
        o.criterion, o.comparison, o.lhs_approx, o.rhs_approx, o.holds
    )
}

fn cmd_factor(
    value: Option<String>,
    q: Option<String>,
    n: Option<u32>,
    out: &Output,
) -> Result<Verdict> {
    let f = match (value, q, n) {
        (Some(v), None, None) => {
            let v = parse_big(&v)?;
            if v.is_zero() {
                bail!("cannot factor 0");
            }
            factorize(&v)?
        }
        (None, Some(q), Some(n)) => {
            if n == 0 {
                bail!("n must be positive");
            }
            factor_pow_minus_one(&parse_q(&q)?, n)?
        }
        _ => bail!("give a value, or --q and --n"),
    };
    emit(out, &factor_json(&f), || format!("{}\n", factor_text(&f)))?;
    Ok(Verdict::Positive)
}

fn cmd_bound(q: &str, n: u32, omega: usize, out: &Output) -> Result<Verdict> {
    let o = basic_criterion(&parse_q(q)?, n, omega)?;
    emit(out, &o, || outcome_line(&o))?;
    Ok(Verdict::from_bool(o.holds))
}

fn cmd_sieve(q: &str, n: u32, s: Option<usize>, t: usize, out: &Output) -> Result<Verdict> {
    let q = parse_q(q)?;
    let f = factor_pow_minus_one(&q, n)?;
    let primes = f.primes();
    let outcome = match s {
        Some(s) => {
            let split = split_from_primes(&primes, s, t)?;
            Some(if t == 0 {
                prime_sieve_criterion(&q, n, &split)?
            } else {
                modified_sieve_criterion(&q, n, &split)?
            })
        }
        None => {
            let basic = basic_criterion(&q, n, f.omega())?;
            if basic.holds {
                Some(basic)
            } else if let Some((_, o)) = best_prime_sieve(&q, n, &primes, usize::MAX)? {
                Some(o)
            } else {
                best_modified_sieve(&q, n, &primes)?.map(|(_, o)| o)
            }
        }
    };
    let holds = outcome.as_ref().is_some_and(|o| o.holds);
    let report = json!({
        "q": q.to_string(),
        "n": n,
        "factorization": factor_json(&f),
        "outcome": outcome,
        "holds": holds,
    });
    emit(out, &report, || match &outcome {
        Some(o) => outcome_line(o),
        None => "no criterion holds for any split\n".into(),
    })?;
    Ok(Verdict::from_bool(holds))
}

fn cmd_cubic(q: &str, s: Option<usize>, out: &Output) -> Result<Verdict> {
    let q = parse_q(q)?;
    let f = factor_pow_minus_one(&q, 3)?;
    let primes = f.primes();
    let outcome = match s {
        Some(s) => Some(cg_cubic_criterion(&q, &split_from_primes(&primes, s, 0)?)?),
        None => best_cg(&q, &primes)?.map(|(_, o)| o),
    };
    let holds = outcome.as_ref().is_some_and(|o| o.holds);
    let report = json!({
        "q": q.to_string(),
        "factorization": factor_json(&f),
        "outcome": outcome,
        "holds": holds,
    });
    emit(out, &report, || match &outcome {
        Some(o) => outcome_line(o),
        None => "Cohen-Gupta criterion fails for every s\n".into(),
    })?;
    Ok(Verdict::from_bool(holds))
}

fn cmd_hybrid(n: u32, j: usize, forced: Vec<u64>, tree: bool, out: &Output) -> Result<Verdict> {
    if j == 0 {
        bail!("j must be positive");
    }
    let cfg = HybridConfig::for_degree(n)
        .ok_or_else(|| anyhow!("hybrid bounds exist for n = 3 and n = 5"))?
        .with_forced(forced);
    if *cfg.m_range(j).start() > *cfg.m_range(j).end() {
        bail!("too many forced primes for j = {j}");
    }
    let hb = hybrid_lower_bound(&cfg, j);
    let (plain, plain_approx) = plain_bound(n, j);
    let per_m = if n == 5 {
        per_m_analysis(&cfg, j, &sieve_threshold_fn(5, 20))
    } else {
        per_m_analysis(&cfg, j, &cg_threshold_fn())
    };
    let tree = if tree {
        if n != 5 {
            bail!("the divisor tree is for n = 5");
        }
        Some(divisor_tree(&cfg, j, &sieve_threshold_fn(5, 20)))
    } else {
        None
    };
    let report = json!({
        "n": n,
        "j": j,
        "config": cfg,
        "hybrid": hb,
        "plain_bound": plain.to_string(),
        "plain_bound_approx": plain_approx,
        "per_m": per_m,
        "tree": tree,
    });
    emit(out, &report, || {
        let mut s = format!(
            "hybrid bound {} (~{:.4e}) at m = {}; plain bound {} (~{:.4e})\n",
            hb.bound, hb.bound_approx, hb.worst_m, plain, plain_approx
        );
        if let Some(t) = &tree {
            s.push_str(&format!(
                "forced {:?}, modulus {}, eliminated {}\n",
                t.forced, t.modulus, t.eliminated
            ));
        }
        s
    })?;
    Ok(Verdict::Positive)
}

fn cmd_enumerate(
    modulus: u64,
    max: u64,
    n: u32,
    omega: Option<usize>,
    out: &Output,
) -> Result<Verdict> {
    if n == 0 {
        bail!("n must be positive");
    }
    let records = enumerate_progression(modulus, max, n, omega);
    emit(out, &records, || {
        records
            .iter()
            .map(|r| match r.omega_exact {
                Some(w) => format!("{} {w}\n", r.q),
                None => format!("{} ?\n", r.q),
            })
            .collect()
    })?;
    Ok(Verdict::Positive)
}

fn cmd_oracle(
    q: u64,
    n: u32,
    all_pairs: bool,
    e: Option<String>,
    seed: u64,
    out: &Output,
) -> Result<Verdict> {
    let pp = prime_power_decompose(q).ok_or_else(|| anyhow!("{q} is not a prime power"))?;
    if n == 0 {
        bail!("n must be positive");
    }
    let ctx = build_context(pp.p as u32, pp.alpha, n, seed)?;
    let sys = CharacterSystem::new(&ctx)?;
    let table = NeTable::build(&sys);
    let order = BigUint::from(q).pow(n) - 1u32;
    let e = match e {
        Some(s) => parse_big(&s)?,
        None => order.clone(),
    };
    if e.is_zero() || !order.is_multiple_of(&e) {
        bail!("e = {e} does not divide {q}^{n} - 1");
    }
    let mask = table
        .primes
        .iter()
        .enumerate()
        .filter(|(_, &p)| e.is_multiple_of(&BigUint::from(p)))
        .fold(0usize, |m, (i, _)| m | (1 << i));
    let mut counts = Vec::new();
    let mut zero_pairs = Vec::new();
    let mut min_count = u64::MAX;
    for a in 0..q as u32 {
        for b in 0..q as u32 {
            let c = table.get(a, b, mask);
            min_count = min_count.min(c);
            if c == 0 {
                zero_pairs.push((a, b));
            }
            if all_pairs {
                counts.push(json!({"a": a, "b": b, "n_e": c}));
            }
        }
    }
    let bounds = check_bounds(&table);
    let sums = (order <= BigUint::from(SUM_CHECK_LIMIT)).then(|| check_character_sum_bounds(&sys));
    let report = json!({
        "q": q,
        "n": n,
        "seed": seed,
        "e": e.to_string(),
        "e_primes": table.primes.iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect::<Vec<_>>(),
        "min_n_e": min_count,
        "zero_pairs": zero_pairs,
        "counts": all_pairs.then_some(counts),
        "bounds": bounds,
        "bounds_ok": bounds.ok(),
        "character_sums": sums,
    });
    emit(out, &report, || {
        format!(
            "N_e over {} pairs: min {min_count}, zero at {zero_pairs:?}\nbound checks ok: {}\n",
            q * q,
            bounds.ok()
        )
    })?;
    Ok(Verdict::from_bool(zero_pairs.is_empty()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    q: u64,
    n: u32,
    seed: u64,
    trial_cap: Option<u64>,
    pairs: Vec<PairsArg>,
    c0: C0Arg,
    negation: bool,
    out: &Output,
) -> Result<Verdict> {
    let pp = prime_power_decompose(q).ok_or_else(|| anyhow!("{q} is not a prime power"))?;
    if q > u32::MAX as u64 {
        bail!("q = {q} is too large");
    }
    if trial_cap == Some(0) {
        bail!("--trial-cap must be positive");
    }
    let explicit: Vec<(u32, u32)> = pairs
        .iter()
        .filter_map(|p| match p {
            PairsArg::All => None,
            PairsArg::One(a, b) => Some((*a, *b)),
        })
        .collect();
    if !explicit.is_empty() && pairs.iter().any(|p| matches!(p, PairsArg::All)) && pairs.len() > 1 {
        bail!("--pairs all cannot be combined with explicit pairs");
    }
    let ctx = build_context(pp.p as u32, pp.alpha, n, seed)?;
    let opts = VerifyOptions {
        trial_cap,
        c0_mode: match c0 {
            C0Arg::Random => C0Mode::RandomNonzero,
            C0Arg::MinusOne => C0Mode::MinusOne,
        },
        negation_reduction: negation,
        pairs: (!explicit.is_empty()).then_some(explicit),
    };
    let report = verify_membership(&ctx, seed, &opts)?;
    emit(out, &report, || {
        format!(
            "q = {q}, n = {n}: {} pairs, {} trials (expected {:.2} per pair), exceptions {:?}\n",
            report.pairs.len(),
            report.total_trials,
            report.expected_trials,
            report.exceptions
        )
    })?;
    Ok(Verdict::from_bool(report.success))
}

fn cmd_survey(
    problem: Problem,
    n: Option<u32>,
    config: Option<PathBuf>,
    set: Vec<String>,
    format: Format,
    out: &Output,
) -> Result<Verdict> {
    let mut cfg = match &config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            SurveyConfig::parse(&text)?
        }
        None => SurveyConfig::default(),
    };
    for kv in &set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got {kv}"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let report = match problem {
        Problem::P2 => survey_p2(n.expect("required by clap"), &cfg)?,
        Problem::Cubic => {
            if n.is_some_and(|n| n != 3) {
                bail!("the cubic problem has n = 3");
            }
            survey_cubic(&cfg)?
        }
    };
    let audit = spot_audit(&report, cfg.audit_samples, cfg.audit_seed)?;
    eprintln!(
        "audit: {}/{} sampled records replayed",
        audit.passed, audit.sampled
    );
    if !audit.failures.is_empty() {
        bail!("spot audit failed for {:?}", audit.failures);
    }
    let format = match format {
        Format::Json => ReportFormat::Json,
        Format::Csv => ReportFormat::Csv,
    };
    match &out.out {
        Some(path) => {
            let mut buf = Vec::new();
            emit_report(&report, format, &mut buf)?;
            write_to(path, &buf)?;
        }
        None => {
            let mut s = format!(
                "{} n = {}: {} prime powers below {}, {} factored\n",
                report.problem, report.n, report.prime_powers, report.q_limit, report.factored
            );
            for (stage, c) in &report.stage_counts {
                s.push_str(&format!("  {stage}: {c}\n"));
            }
            s.push_str(&format!(
                "survivors ({}): {:?}\n",
                report.survivors.len(),
                report.survivors
            ));
            io::stdout().lock().write_all(s.as_bytes())?;
        }
    }
    Ok(Verdict::Positive)
}

fn run(cli: Cli) -> Result<Verdict> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .context("cannot build the thread pool")?;
    }
    match cli.cmd {
        Cmd::Factor { value, q, n, out } => cmd_factor(value, q, n, &out),
        Cmd::Bound { q, n, omega, out } => cmd_bound(&q, n, omega, &out),
        Cmd::Sieve { q, n, s, t, out } => cmd_sieve(&q, n, s, t, &out),
        Cmd::Cubic { q, s, out } => cmd_cubic(&q, s, &out),
        Cmd::Hybrid {
            n,
            j,
            forced,
            tree,
            out,
        } => cmd_hybrid(n.parse()?, j, forced, tree, &out),
        Cmd::Enumerate {
            modulus,
            max,
            n,
            omega,
            out,
        } => cmd_enumerate(modulus, max, n, omega, &out),
        Cmd::Oracle {
            q,
            n,
            all_pairs,
            e,
            seed,
            out,
        } => cmd_oracle(q, n, all_pairs, e, seed, &out),
        Cmd::Verify {
            q,
            n,
            seed,
            trial_cap,
            pairs,
            c0,
            negation,
            out,
        } => cmd_verify(q, n, seed, trial_cap, pairs, c0, negation, &out),
        Cmd::Survey {
            problem,
            n,
            config,
            set,
            format,
            out,
        } => cmd_survey(problem, n, config, set, format, &out),
    }
}

/// Parse `argv`, run, and map the outcome to an exit status.
fn dispatch<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let start = Instant::now();
    let status = match run(cli) {
        Ok(Verdict::Positive) => 0,
        Ok(Verdict::Negative) => 2,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    status
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}
