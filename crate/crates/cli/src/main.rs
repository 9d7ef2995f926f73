// `!(x <= y)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod error;
mod report;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

/// Calls `f::<T>(args..)` with the narrowest supported scalar of at least `bits` bits.
#[macro_export]
macro_rules! at_precision {
    ($bits:expr, $f:ident ( $($arg:expr),* )) => {{
        use zetablocks::Mpf;
        match $bits {
            0..=53 => $f::<f64>($($arg),*),
            54..=64 => $f::<Mpf<64>>($($arg),*),
            65..=128 => $f::<Mpf<128>>($($arg),*),
            129..=192 => $f::<Mpf<192>>($($arg),*),
            193..=256 => $f::<Mpf<256>>($($arg),*),
            257..=384 => $f::<Mpf<384>>($($arg),*),
            385..=512 => $f::<Mpf<512>>($($arg),*),
            513..=768 => $f::<Mpf<768>>($($arg),*),
            _ => $f::<Mpf<1024>>($($arg),*),
        }
    }};
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    use run::{bench, lfun, table, verify, zeta};
    match cmd {
        Command::Zeta(a) => at_precision!(a.common.bits, zeta(a, out)),
        Command::Lfun(a) => at_precision!(a.common.bits, lfun(a, out)),
        Command::Table(a) => at_precision!(a.common.bits, table(a, out)),
        Command::Bench(a) => at_precision!(a.common.bits, bench(a, out)),
        Command::Verify(a) => at_precision!(a.common.bits, verify(a, out)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = dispatch(&cli.command, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
