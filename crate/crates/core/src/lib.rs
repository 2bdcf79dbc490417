//! Rate-1 convolutional codes over GF(q) and their dual-encoder MAP decoders.

pub mod bcjr;
pub mod channel;
pub mod convcode;
pub mod dual;
pub mod galois;
pub mod gfpoly;
pub mod harness;
pub mod pmf;

pub use convcode::{encode_frame, CodeSpec, Frame, Trellis};
pub use dual::{DualDecoder, DualSpec};
pub use galois::{Elem, Field};
pub use gfpoly::Poly;
pub use pmf::{GroupAlgebra, Pmf, TransformMode};
