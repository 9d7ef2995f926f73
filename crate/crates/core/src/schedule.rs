//! Block subdivision of the main sum and the parameter hypotheses.

use std::fmt;

use crate::context::ComplexPoint;
use crate::error::{Error, Result};
use crate::real::Real;

/// Largest cutoff `M` accepted anywhere (exact in `f64`).
pub const MAX_CUTOFF: u64 = 1 << 53;

/// Evaluation parameters `(u0, v0, M, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalParams {
    pub u0: u64,
    pub v0: u64,
    /// Cutoff `M` of the main sum.
    pub cutoff: u64,
    /// Taylor order `m`.
    pub m: usize,
}

impl EvalParams {
    pub fn new(u0: u64, v0: u64, cutoff: u64, m: usize) -> Self {
        EvalParams { u0, v0, cutoff, m }
    }
}

/// Block starts `v_0..v_{R+1}` and lengths `K_0..K_R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    pub u0: u64,
    pub v: Vec<u64>,
    pub k: Vec<u64>,
}

impl BlockSchedule {
    /// `R`, with `-1` for the empty schedule.
    pub fn r(&self) -> i64 {
        self.k.len() as i64 - 1
    }

    pub fn block_count(&self) -> usize {
        self.k.len()
    }

    /// `(v_r, K_r)` pairs.
    pub fn blocks(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.v.iter().copied().zip(self.k.iter().copied())
    }
}

fn check_order(u0: u64, v0: u64, cutoff: u64) -> Result<()> {
    if u0 < 1 || u0 > v0 || v0 > cutoff {
        return Err(Error::Parameter(format!(
            "need 1 <= u0 <= v0 <= M, got u0={u0}, v0={v0}, M={cutoff}"
        )));
    }
    if cutoff > MAX_CUTOFF {
        return Err(Error::Parameter(format!("M={cutoff} exceeds 2^53")));
    }
    Ok(())
}

/// Streaming form of [`build_schedule`] for very long schedules.
#[derive(Debug, Clone)]
pub struct BlockIter {
    u0: u64,
    v: u64,
    cutoff: u64,
}

impl Iterator for BlockIter {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        if self.v >= self.cutoff {
            return None;
        }
        let k = self.v.div_ceil(self.u0).min(self.cutoff - self.v);
        let v = self.v;
        self.v += k;
        Some((v, k))
    }
}

pub fn block_iter(u0: u64, v0: u64, cutoff: u64) -> Result<BlockIter> {
    check_order(u0, v0, cutoff)?;
    Ok(BlockIter { u0, v: v0, cutoff })
}

/// Number of blocks `R + 1` without materialising the schedule.
pub fn block_count(u0: u64, v0: u64, cutoff: u64) -> Result<u64> {
    Ok(block_iter(u0, v0, cutoff)?.count() as u64)
}

/// `K_r = ⌈v_r/u0⌉`, `v_{r+1} = v_r + K_r`, with the last block clipped at `M`.
pub fn build_schedule(u0: u64, v0: u64, cutoff: u64) -> Result<BlockSchedule> {
    let mut v = Vec::new();
    let mut k = Vec::new();
    for (vr, kr) in block_iter(u0, v0, cutoff)? {
        v.push(vr);
        k.push(kr);
    }
    v.push(cutoff);
    Ok(BlockSchedule { u0, v, k })
}

/// The first hypothesis that a parameter set violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    U0BelowSqrtConductor,
    U0BelowTwelve,
    U0BelowTwoSigma,
    V0BelowU0,
    CutoffBelowV0,
    /// Twisted blocks need `v0 ≥ 2 p^b σ` so inner arguments keep `Re ≥ -1/2`.
    V0BelowTwistedStrip,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Violation::U0BelowSqrtConductor => "u0 < 2√𝔮(s)",
            Violation::U0BelowTwelve => "u0 < 12",
            Violation::U0BelowTwoSigma => "u0 < 2σ",
            Violation::V0BelowU0 => "v0 < u0",
            Violation::CutoffBelowV0 => "M < v0",
            Violation::V0BelowTwistedStrip => "v0 < 2·p^b·σ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    pub fn into_result(self) -> Result<()> {
        match self.violation {
            None => Ok(()),
            Some(v) => Err(Error::Validation(v.to_string())),
        }
    }
}

/// Checks `v0 ≥ u0 ≥ 2 max{6, √𝔮(s), σ}` and `M ≥ v0`.
pub fn validate_params<T: Real>(s: &ComplexPoint<T>, p: &EvalParams) -> ValidationReport {
    let u0 = p.u0 as f64;
    let violation = if u0 * u0 < 4.0 * s.conductor_q() {
        Some(Violation::U0BelowSqrtConductor)
    } else if p.u0 < 12 {
        Some(Violation::U0BelowTwelve)
    } else if T::from_u64(p.u0) < T::from_u64(2) * s.sigma() {
        Some(Violation::U0BelowTwoSigma)
    } else if p.v0 < p.u0 {
        Some(Violation::V0BelowU0)
    } else if p.cutoff < p.v0 {
        Some(Violation::CutoffBelowV0)
    } else {
        None
    };
    ValidationReport { violation }
}

/// How the tail beyond `M` is handled, which fixes the default cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailMode {
    /// Explicit remainder bound; `M` chosen so it drops below `target`.
    Theorem1 { target: f64 },
    /// Euler–Maclaurin corrections; `M = 10⌈𝔮(s)⌉`.
    EulerMaclaurin,
}

/// `⌈(A/(σ ε))^{1/σ}⌉` evaluated in log-space and capped at `2^53`.
pub(crate) fn cutoff_for_tail(numer: f64, sigma: f64, target: f64) -> u64 {
    let ln_m = ((numer / (sigma * target)).ln()) / sigma;
    if ln_m >= (MAX_CUTOFF as f64).ln() {
        MAX_CUTOFF
    } else {
        ln_m.exp().ceil().max(1.0) as u64
    }
}

/// `u0 = 6⌈√𝔮⌉`, `v0 = 10(m+1)u0`, `M` per `mode`.
pub fn default_params<T: Real>(s: &ComplexPoint<T>, m: usize, mode: TailMode) -> EvalParams {
    let q = s.conductor_q();
    let u0 = 6 * q.sqrt().ceil() as u64;
    let v0 = 10 * (m as u64 + 1) * u0;
    let cutoff = match mode {
        TailMode::EulerMaclaurin => 10 * q.ceil() as u64,
        TailMode::Theorem1 { target } => cutoff_for_tail(q, s.sigma_f64(), target),
    };
    EvalParams { u0, v0, cutoff: cutoff.max(v0), m }
}
