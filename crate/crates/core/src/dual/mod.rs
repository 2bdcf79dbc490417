//! Dual-encoder SISO decoders: forward, backward, register-combined and the
//! output-product baseline.

mod decode;
mod spec;

use thiserror::Error;

use crate::convcode::CodeError;
use crate::gfpoly::PolyError;
use crate::pmf::PmfError;

pub use decode::{DualDecoder, DualScratch, RegisterBank};
pub use spec::{DualEncoder, DualSpec, ReverseDualEncoder};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DualError {
    #[error(
        "numerator degree {num_degree} exceeds denominator degree {den_degree}; dual is not causal"
    )]
    ImproperDual {
        num_degree: usize,
        den_degree: usize,
    },
    #[error("dual encoder has no feedback, so it cannot run backwards")]
    NoFeedback,
    #[error(transparent)]
    Pmf(#[from] PmfError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Code(#[from] CodeError),
}
