use std::io::Write;

use serde::Serialize;
use zetablocks::{EvalResult, Real};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct PointDoc {
    pub sigma: String,
    pub t: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueDoc {
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedDoc {
    pub truncation_bound: f64,
    pub tail_bound: f64,
    /// Bound on the geometric-sum evaluations inside the blocks.
    pub block_evaluation_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateDoc {
    pub roundoff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsDoc {
    pub u0: Option<u64>,
    pub v0: Option<u64>,
    #[serde(rename = "M")]
    pub cutoff: u64,
    pub m: Option<usize>,
    #[serde(rename = "R")]
    pub r: i64,
    pub block_count: u64,
    pub precision_bits: u32,
    #[serde(rename = "L1", skip_serializing_if = "Option::is_none")]
    pub l1: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacterDoc {
    pub p: u64,
    pub a: u32,
    pub index: u64,
    #[serde(rename = "postnikov_L")]
    pub postnikov_l: u64,
}

/// Output of `zeta` and `lfun`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalDoc {
    pub s: PointDoc,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub character: Option<CharacterDoc>,
    pub method: String,
    pub mode: String,
    pub value: ValueDoc,
    pub certified: CertifiedDoc,
    pub estimate: EstimateDoc,
    pub params: ParamsDoc,
    pub timing_ms: f64,
}

impl EvalDoc {
    pub fn new<T: Real>(
        s: PointDoc,
        mode: &str,
        res: &EvalResult<T>,
        cutoff: u64,
        l1: Option<usize>,
        timing_ms: f64,
    ) -> Self {
        EvalDoc {
            s,
            character: None,
            method: res.method.to_string(),
            mode: mode.to_string(),
            value: ValueDoc { re: res.value.re.to_decimal_string(), im: res.value.im.to_decimal_string() },
            certified: CertifiedDoc {
                truncation_bound: res.truncation_bound,
                tail_bound: res.tail_bound,
                block_evaluation_bound: res.block_rounding,
            },
            estimate: EstimateDoc { roundoff: res.roundoff_estimate },
            params: ParamsDoc {
                u0: res.params.map(|p| p.u0),
                v0: res.params.map(|p| p.v0),
                cutoff,
                m: res.params.map(|p| p.m),
                r: res.r,
                block_count: res.block_count,
                precision_bits: res.precision_bits,
                l1,
            },
            timing_ms,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sigma", "t"];
        let mut row = vec![self.s.sigma.clone(), self.s.t.clone()];
        if let Some(c) = &self.character {
            header.extend(["p", "a", "index", "postnikov_L"]);
            row.extend([c.p.to_string(), c.a.to_string(), c.index.to_string(), c.postnikov_l.to_string()]);
        }
        header.extend([
            "method",
            "re",
            "im",
            "truncation_bound",
            "tail_bound",
            "block_evaluation_bound",
            "roundoff",
            "u0",
            "v0",
            "M",
            "m",
            "R",
            "block_count",
            "precision_bits",
            "timing_ms",
        ]);
        let p = &self.params;
        row.extend([
            self.method.clone(),
            self.value.re.clone(),
            self.value.im.clone(),
            format!("{:e}", self.certified.truncation_bound),
            format!("{:e}", self.certified.tail_bound),
            format!("{:e}", self.certified.block_evaluation_bound),
            format!("{:e}", self.estimate.roundoff),
            opt(p.u0),
            opt(p.v0),
            p.cutoff.to_string(),
            opt(p.m.map(|m| m as u64)),
            p.r.to_string(),
            p.block_count.to_string(),
            p.precision_bits.to_string(),
            format!("{:.3}", self.timing_ms),
        ]);
        w.write_record(&header)?;
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }
}

/// One `table` row; `None` fields print as `ERROR`.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub t: String,
    pub m: usize,
    pub abs_error: Option<f64>,
    pub certified_bound: Option<f64>,
    pub runtime_ms: f64,
}

pub const TABLE_HEADER: [&str; 5] = ["t", "m", "abs_error", "certified_bound", "runtime_ms"];

pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<(), CliError> {
    let cell = |x: Option<f64>| x.map_or_else(|| "ERROR".to_string(), |v| format!("{v:e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.clone(),
            r.m.to_string(),
            cell(r.abs_error),
            cell(r.certified_bound),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One `bench` row. Only the first four fields go to CSV.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub t: String,
    pub strategy: String,
    pub terms_evaluated: u64,
    pub runtime_ms: f64,
    pub value: ValueDoc,
    pub certified_bound: f64,
}

pub const BENCH_HEADER: [&str; 4] = ["t", "strategy", "terms_evaluated", "runtime_ms"];

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.clone(),
            r.strategy.clone(),
            r.terms_evaluated.to_string(),
            format!("{:.3}", r.runtime_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}
