//! Monte Carlo BER simulation, decoder verification and the complexity bench.

mod bench;
mod sim;
mod verify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bcjr::BcjrError;
use crate::channel::ChannelError;
use crate::convcode::{CodeError, CodeSpec};
use crate::dual::DualError;

pub use bench::{
    bench_complexity, bench_family_code, linear_fit, BenchOptions, BenchReport, BenchRow, LinearFit,
};
pub use sim::{
    gnuplot_script, run_point, run_simulation, write_csv, BerRecord, FrameRunner, SimConfig,
    CSV_HEADER,
};
pub use verify::{
    noisy_frame, verify_dual, verify_theorems, CodeReport, VerifyOptions, VerifyReport,
};

/// The five built-in GF(4) codes.
pub const BUILTIN_CODES: [&str; 5] = [
    "gf4:(1+x)",
    "gf4:(1+3x+2x^2)",
    "gf4:(1+x+2x^2)",
    "gf4:(1+x)/(1+2x)",
    "gf4:(1+3x+2x^2)/(1+x+2x^2)",
];

pub fn builtin_codes() -> Vec<CodeSpec> {
    BUILTIN_CODES
        .iter()
        .map(|s| s.parse().expect("built-in code"))
        .collect()
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Bcjr(#[from] BcjrError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    Bcjr,
    DualCombined,
    DualFft,
    DualFbProduct,
    DualForwardOnly,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] = [
        DecoderKind::Bcjr,
        DecoderKind::DualCombined,
        DecoderKind::DualFft,
        DecoderKind::DualFbProduct,
        DecoderKind::DualForwardOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Bcjr => "bcjr",
            DecoderKind::DualCombined => "dual-combined",
            DecoderKind::DualFft => "dual-fft",
            DecoderKind::DualFbProduct => "dual-fb-product",
            DecoderKind::DualForwardOnly => "dual-forward-only",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecoderKind::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown decoder {s:?}")))
    }
}
