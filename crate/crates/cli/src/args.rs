use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "zetablocks", version, about = "Certified evaluation of ζ(s) and prime-power L(s, χ)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate ζ(s).
    Zeta(ZetaArgs),
    /// Evaluate L(s, χ) for a character mod p^a.
    Lfun(LfunArgs),
    /// Error and certified bound on a grid of (t, m) at σ = 1/2.
    Table(TableArgs),
    /// Term counts and timings of the direct, em-only and block strategies.
    Bench(BenchArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZetaMode {
    /// Blocks with Euler–Maclaurin corrections at M.
    Hybrid,
    /// Blocks with the explicit tail bound.
    Theorem1,
    /// Plain Euler–Maclaurin summation with N = M.
    EmOnly,
    /// Plain partial sum up to M.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Direct,
    EmOnly,
    Block,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Direct => "direct",
            Strategy::EmOnly => "em-only",
            Strategy::Block => "block",
        }
    }
}

/// Precision and threading, shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Mantissa bits; rounded up to 53, 64, 128, 192, 256, 384, 512, 768 or 1024.
    #[arg(long, env = "PRECISION_BITS", default_value_t = 128,
          value_parser = clap::value_parser!(u32).range(1..=1024))]
    pub bits: u32,
    /// Worker threads for block evaluation; output does not depend on it.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    /// Output format; json for zeta and lfun, csv for table and bench by default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Real part of s, as a decimal string.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: String,
    /// Imaginary part of s, as a decimal string.
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
}

#[derive(Debug, Clone, Args)]
pub struct BlockArgs {
    #[arg(long)]
    pub u0: Option<u64>,
    #[arg(long)]
    pub v0: Option<u64>,
    /// Cutoff of the main sum.
    #[arg(long = "M")]
    pub cutoff: Option<u64>,
    /// Taylor order.
    #[arg(long, default_value_t = 6)]
    pub m: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ZetaArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub block: BlockArgs,
    /// Euler–Maclaurin correction terms at M.
    #[arg(long = "L1", default_value_t = 6)]
    pub l1: usize,
    #[arg(long, value_enum, default_value_t = ZetaMode::Hybrid)]
    pub mode: ZetaMode,
    /// Tail target that fixes the default M in theorem1 mode.
    #[arg(long, default_value_t = 1e-10)]
    pub eps: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct LfunArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub a: u32,
    /// Character index in 0..φ(p^a); 0 is principal.
    #[arg(long)]
    pub index: u64,
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub block: BlockArgs,
    /// Choose the default M from this tail target instead of 10⌈𝔮(s,χ)⌉.
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_value = "1e3,1e4")]
    pub t_list: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6")]
    pub m_list: Vec<usize>,
    /// Euler–Maclaurin correction terms of the block evaluation.
    #[arg(long = "L1", default_value_t = 6)]
    pub l1: usize,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..=1024))]
    pub oracle_bits: u32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1e3")]
    pub t_list: Vec<String>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "direct,em-only,block")]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 6)]
    pub m: usize,
    #[arg(long = "L1", default_value_t = 6)]
    pub l1: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Suites to run: postnikov, gkr, beta, regime.
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Prime power as `p,a`; repeat for several moduli.
    #[arg(long)]
    pub pa: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub regime_cases: usize,
    #[arg(long, default_value_t = 20)]
    pub seed: u64,
    /// Add one to β_{j,l,η}, given as `j,l,η`, before running.
    #[arg(long, hide = true)]
    pub inject_beta_fault: Option<String>,
    #[command(flatten)]
    pub common: Common,
}
