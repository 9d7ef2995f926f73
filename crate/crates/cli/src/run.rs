use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use zetablocks::coefficients::build_beta_table;
use zetablocks::dirichlet::{build_character, default_params_chi, lfun_theorem2, CharacterTable, ChiCutoff};
use zetablocks::schedule::default_params;
use zetablocks::verify::{run_suites, Suite, VerifyOptions, DEFAULT_MODULI};
use zetablocks::zeta::{zeta_direct, zeta_euler_maclaurin, zeta_hybrid, zeta_theorem1};
use zetablocks::{ComplexPoint, Context, EvalParams, Real, TailMode};

use crate::args::{
    BenchArgs, BlockArgs, Common, Format, LfunArgs, PointArgs, Strategy, TableArgs, VerifyArgs,
    ZetaArgs, ZetaMode,
};
use crate::at_precision;
use crate::error::CliError;
use crate::report::{
    write_bench_csv, write_table_csv, BenchRow, CharacterDoc, EvalDoc, PointDoc, TableRow, ValueDoc,
};

/// Euler–Maclaurin order of the `table` oracle.
const ORACLE_L1: usize = 30;
/// Largest tail-plus-roundoff error the `table` oracle may carry.
const ORACLE_TOLERANCE: f64 = 1e-30;

fn context<T: Real>(c: &Common) -> Context<T> {
    Context::new().with_threads(c.threads as usize)
}

fn point<T: Real>(sigma: &str, t: &str) -> Result<ComplexPoint<T>, CliError> {
    let parse = |name: &str, v: &str| {
        T::parse_decimal(v).ok_or_else(|| CliError::Usage(format!("cannot parse --{name} {v:?}")))
    };
    Ok(ComplexPoint::new(parse("sigma", sigma)?, parse("t", t)?)?)
}

fn echo(p: &PointArgs) -> PointDoc {
    PointDoc { sigma: p.sigma.clone(), t: p.t.clone() }
}

fn with_overrides(mut p: EvalParams, b: &BlockArgs) -> EvalParams {
    p.u0 = b.u0.unwrap_or(p.u0);
    p.v0 = b.v0.unwrap_or(p.v0);
    p.cutoff = b.cutoff.unwrap_or(p.cutoff);
    p
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {x}")))
    }
}

fn emit_eval(doc: &EvalDoc, format: Option<Format>, out: &mut dyn Write) -> Result<(), CliError> {
    match format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(doc)?)?,
        Format::Csv => doc.write_csv(out)?,
    }
    Ok(())
}

fn emit_json<S: Serialize>(rows: &S, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string_pretty(rows)?)?;
    Ok(())
}

pub fn zeta<T: Real>(a: &ZetaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ctx = context::<T>(&a.common);
    let s = point::<T>(&a.point.sigma, &a.point.t)?;
    let tail = match a.mode {
        ZetaMode::Theorem1 => TailMode::Theorem1 { target: positive("eps", a.eps)? },
        _ => TailMode::EulerMaclaurin,
    };
    let p = with_overrides(default_params(&s, a.block.m, tail), &a.block);
    let start = Instant::now();
    let (res, l1, mode) = match a.mode {
        ZetaMode::Hybrid => (zeta_hybrid(&s, &p, a.l1, &ctx)?, Some(a.l1), "hybrid"),
        ZetaMode::Theorem1 => (zeta_theorem1(&s, &p, &ctx)?, None, "theorem1"),
        ZetaMode::EmOnly => (zeta_euler_maclaurin(&s, p.cutoff, a.l1, &ctx)?, Some(a.l1), "em-only"),
        ZetaMode::Direct => (zeta_direct(&s, p.cutoff, &ctx)?, None, "direct"),
    };
    let doc = EvalDoc::new(echo(&a.point), mode, &res, p.cutoff, l1, ms_since(start));
    emit_eval(&doc, a.common.format, out)
}

pub fn lfun<T: Real>(a: &LfunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ctx = context::<T>(&a.common);
    let s = point::<T>(&a.point.sigma, &a.point.t)?;
    let chi = build_character(a.p, a.a, a.index)?;
    let cutoff = match a.eps {
        Some(eps) => ChiCutoff::Target(positive("eps", eps)?),
        None => ChiCutoff::Multiple(10),
    };
    let p = with_overrides(default_params_chi(&s, &chi, a.block.m, cutoff), &a.block);
    let character = CharacterDoc { p: a.p, a: a.a, index: a.index, postnikov_l: chi.postnikov_l() };
    let table = CharacterTable::new(chi, &ctx);
    let start = Instant::now();
    let res = lfun_theorem2(&s, &table, &p, &ctx)?;
    let mut doc = EvalDoc::new(echo(&a.point), "theorem2", &res, p.cutoff, None, ms_since(start));
    doc.character = Some(character);
    emit_eval(&doc, a.common.format, out)
}

/// `ζ(s)` by plain Euler–Maclaurin summation with `N = 100⌈𝔮⌉`, or `2⌈𝔮⌉`
/// once that exceeds `10^6`, rendered as decimal strings.
pub fn oracle<U: Real>(t: &str, threads: usize) -> Result<(String, String), CliError> {
    let ctx = Context::<U>::new().with_threads(threads);
    let s = point::<U>("0.5", t)?;
    let q = s.conductor_q().ceil() as u64;
    let n = if 100 * q <= 1_000_000 { 100 * q } else { 2 * q };
    let r = zeta_euler_maclaurin(&s, n, ORACLE_L1, &ctx).map_err(|e| CliError::Oracle(e.to_string()))?;
    let err = r.tail_bound + r.roundoff_estimate;
    if !(err <= ORACLE_TOLERANCE) {
        return Err(CliError::Oracle(format!(
            "error bound {err:e} at t = {t} exceeds {ORACLE_TOLERANCE:e}"
        )));
    }
    Ok((r.value.re.to_decimal_string(), r.value.im.to_decimal_string()))
}

pub fn table<T: Real>(a: &TableArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ctx = context::<T>(&a.common);
    let threads = a.common.threads as usize;
    let mut rows = Vec::new();
    let mut failure = None;
    for t in &a.t_list {
        let s = point::<T>("0.5", t)?;
        let reference = at_precision!(a.oracle_bits, oracle(t, threads));
        let reference = match reference {
            Ok((re, im)) => {
                let parse = |x: &str| T::parse_decimal(x).ok_or_else(|| CliError::Oracle(format!("bad value {x}")));
                Some((parse(&re)?, parse(&im)?))
            }
            Err(e) => {
                failure.get_or_insert(e);
                None
            }
        };
        for &m in &a.m_list {
            let p = default_params(&s, m, TailMode::EulerMaclaurin);
            let start = Instant::now();
            let res = zeta_hybrid(&s, &p, a.l1, &ctx)?;
            let runtime_ms = ms_since(start);
            let abs_error = reference.as_ref().map(|(re, im)| {
                let (dr, di) = (res.value.re.clone() - re.clone(), res.value.im.clone() - im.clone());
                dr.hypot(&di).to_f64()
            });
            rows.push(TableRow {
                t: t.clone(),
                m,
                abs_error,
                certified_bound: abs_error.map(|_| res.certified_bound()),
                runtime_ms,
            });
        }
    }
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_table_csv(&rows, &mut *out)?,
        Format::Json => emit_json(&rows, out)?,
    }
    failure.map_or(Ok(()), Err)
}

pub fn bench<T: Real>(a: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ctx = context::<T>(&a.common);
    let mut rows = Vec::new();
    for t in &a.t_list {
        let s = point::<T>("0.5", t)?;
        let p = default_params(&s, a.m, TailMode::EulerMaclaurin);
        for &strategy in &a.strategies {
            let start = Instant::now();
            // Counts are main-sum terms; the L1 correction terms are left out.
            let (res, terms) = match strategy {
                Strategy::Direct => {
                    let r = zeta_direct(&s, p.cutoff, &ctx)?;
                    let n = r.terms_evaluated;
                    (r, n)
                }
                Strategy::EmOnly => {
                    let r = zeta_euler_maclaurin(&s, p.cutoff, a.l1, &ctx)?;
                    let n = r.terms_evaluated - a.l1 as u64;
                    (r, n)
                }
                Strategy::Block => {
                    let r = zeta_hybrid(&s, &p, a.l1, &ctx)?;
                    let n = r.terms_evaluated - a.l1 as u64;
                    (r, n)
                }
            };
            rows.push(BenchRow {
                t: t.clone(),
                strategy: strategy.name().to_string(),
                terms_evaluated: terms,
                runtime_ms: ms_since(start),
                value: ValueDoc { re: res.value.re.to_decimal_string(), im: res.value.im.to_decimal_string() },
                certified_bound: res.certified_bound() + res.block_rounding,
            });
        }
    }
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => write_bench_csv(&rows, out),
        Format::Json => emit_json(&rows, out),
    }
}

fn parse_tuple<const N: usize, X: FromStr>(flag: &str, v: &str) -> Result<[X; N], CliError> {
    let bad = || CliError::Usage(format!("--{flag} expects {N} comma-separated integers, got {v:?}"));
    let parts: Vec<X> = v.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| bad())
}

#[derive(Serialize)]
struct SuiteDoc {
    suite: String,
    cases: usize,
    passed: bool,
    failure: Option<String>,
}

pub fn verify<T: Real>(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ctx = context::<T>(&a.common);
    let suites = if a.suite.is_empty() {
        Suite::ALL.to_vec()
    } else {
        a.suite
            .iter()
            .map(|s| s.parse::<Suite>().map_err(|e| CliError::Usage(e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let moduli = if a.pa.is_empty() {
        DEFAULT_MODULI.to_vec()
    } else {
        a.pa.iter()
            .map(|v| parse_tuple::<2, u64>("pa", v).map(|[p, e]| (p, e as u32)))
            .collect::<Result<_, _>>()?
    };
    let mut table = build_beta_table(20);
    if let Some(spec) = &a.inject_beta_fault {
        let [j, l, eta] = parse_tuple::<3, usize>("inject-beta-fault", spec)?;
        table.perturb(j, l, eta)?;
    }
    let opts = VerifyOptions { suites, moduli, regime_cases: a.regime_cases, seed: a.seed };
    let reports = run_suites(&opts, &table, &ctx);
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            for r in &reports {
                writeln!(out, "{r}")?;
            }
        }
        Format::Json => {
            let docs: Vec<SuiteDoc> = reports
                .iter()
                .map(|r| SuiteDoc {
                    suite: r.suite.to_string(),
                    cases: r.cases,
                    passed: r.passed(),
                    failure: r.failure.clone(),
                })
                .collect();
            emit_json(&docs, out)?;
        }
    }
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(CliError::Verify(format!("{}: {}", r.suite, r.failure.as_deref().unwrap_or("")))),
        None => Ok(()),
    }
}
