//! Rate-1 convolutional codes g(x) = a(x)/f(x) over GF(q): encoder, trellis
//! and frame termination.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dual::{DualEncoder, DualSpec};
use crate::galois::{Elem, Field, FieldError};
use crate::gfpoly::{Poly, PolyError};

/// Largest trellis the reference decoder will build.
pub const MAX_TRELLIS_STATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("numerator and denominator live in different fields")]
    FieldMismatch,
    #[error("{0} has a zero constant term")]
    NoConstantTerm(&'static str),
    #[error("symbol {0} is outside the field")]
    SymbolOutOfRange(u8),
    #[error("trellis would have {0} states (limit {MAX_TRELLIS_STATES})")]
    TooManyStates(u128),
    #[error("cannot parse code descriptor {0:?}")]
    Parse(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// The code C with generator g(x) = a(x)/f(x).
#[derive(Clone, PartialEq, Eq)]
pub struct CodeSpec {
    field: Field,
    a: Poly,
    f: Poly,
    memory: usize,
}

impl fmt::Debug for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodeSpec({self})")
    }
}

impl fmt::Display for CodeSpec {
    /// `gf4:(1+x)` for feed-forward codes, `gf4:(a)/(f)` otherwise.
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.f == Poly::one(&self.field) {
            write!(fm, "{}:({})", self.field, self.a)
        } else {
            write!(fm, "{}:({})/({})", self.field, self.a, self.f)
        }
    }
}

impl CodeSpec {
    pub fn new(a: Poly, f: Poly) -> Result<CodeSpec, CodeError> {
        if a.field() != f.field() {
            return Err(CodeError::FieldMismatch);
        }
        if a.coeff(0).is_zero() {
            return Err(CodeError::NoConstantTerm("numerator"));
        }
        if f.coeff(0).is_zero() {
            return Err(CodeError::NoConstantTerm("denominator"));
        }
        let memory = a.degree().unwrap().max(f.degree().unwrap());
        Ok(CodeSpec {
            field: a.field().clone(),
            a,
            f,
            memory,
        })
    }

    /// Feed-forward code g(x) = a(x).
    pub fn feedforward(a: Poly) -> Result<CodeSpec, CodeError> {
        let one = Poly::one(a.field());
        CodeSpec::new(a, one)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn numerator(&self) -> &Poly {
        &self.a
    }

    pub fn denominator(&self) -> &Poly {
        &self.f
    }

    /// Number of encoder registers n = max(deg a, deg f).
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn constraint_length(&self) -> usize {
        self.memory + 1
    }

    /// Number of trellis states q^n, or `None` when it overflows.
    pub fn num_states(&self) -> Option<usize> {
        self.field.q().checked_pow(self.memory as u32)
    }

    /// The same generator written as (a m)/(f m); its realization has more registers.
    pub fn expanded(&self, m: &Poly) -> Result<CodeSpec, CodeError> {
        CodeSpec::new(self.a.mul(m)?, self.f.mul(m)?)
    }

    fn check_symbols(&self, syms: &[Elem]) -> Result<(), CodeError> {
        match syms.iter().find(|s| !self.field.contains(**s)) {
            Some(s) => Err(CodeError::SymbolOutOfRange(s.0)),
            None => Ok(()),
        }
    }

    pub fn encoder(&self) -> Encoder<'_> {
        Encoder {
            code: self,
            regs: vec![Elem::ZERO; self.memory],
        }
    }

    /// Encodes from the zero state.
    pub fn encode(&self, info: &[Elem]) -> Result<Vec<Elem>, CodeError> {
        self.encode_from(info, &EncoderState::zero(self.memory))
            .map(|(c, _)| c)
    }

    /// Encodes from `initial`, returning the code symbols and the final state.
    pub fn encode_from(
        &self,
        info: &[Elem],
        initial: &EncoderState,
    ) -> Result<(Vec<Elem>, EncoderState), CodeError> {
        self.check_symbols(info)?;
        assert_eq!(
            initial.regs.len(),
            self.memory,
            "state length must equal memory"
        );
        let mut enc = Encoder {
            code: self,
            regs: initial.regs.clone(),
        };
        let out = info.iter().map(|&b| enc.step(b)).collect();
        Ok((out, enc.state()))
    }
}

impl FromStr for CodeSpec {
    type Err = CodeError;

    /// Parses `<field>:(<a>)/(<f>)` or `<field>:(<a>)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CodeError::Parse(s.to_string());
        let s = s.trim();
        let split = s.find(":(").ok_or_else(bad)?;
        let field: Field = s[..split].parse()?;
        let rest = &s[split + 1..];
        let (a_str, f_str) = match rest.split_once(")/(") {
            Some((a, f)) => (
                a.strip_prefix('(').ok_or_else(bad)?,
                f.strip_suffix(')').ok_or_else(bad)?,
            ),
            None => (
                rest.strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(bad)?,
                "1",
            ),
        };
        let a = Poly::parse(&field, a_str)?;
        let f = Poly::parse(&field, f_str)?;
        CodeSpec::new(a, f)
    }
}

/// Register contents S_1..S_n of the encoder (S_1 most recent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderState {
    pub regs: Vec<Elem>,
}

impl EncoderState {
    pub fn zero(memory: usize) -> EncoderState {
        EncoderState {
            regs: vec![Elem::ZERO; memory],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.regs.iter().all(|r| r.is_zero())
    }

    /// Base-q label with S_1 as the least significant digit.
    pub fn label(&self, q: usize) -> usize {
        self.regs.iter().rev().fold(0, |acc, r| acc * q + r.index())
    }

    pub fn from_label(mut label: usize, q: usize, memory: usize) -> EncoderState {
        let regs = (0..memory)
            .map(|_| {
                let d = label % q;
                label /= q;
                Elem(d as u8)
            })
            .collect();
        EncoderState { regs }
    }
}

/// Controller-canonical realization of a(x)/f(x).
pub struct Encoder<'a> {
    code: &'a CodeSpec,
    regs: Vec<Elem>,
}

impl Encoder<'_> {
    pub fn step(&mut self, b: Elem) -> Elem {
        let code = self.code;
        let fld = &code.field;
        let mut fb = b;
        for (i, &s) in self.regs.iter().enumerate() {
            fb = fld.sub(fb, fld.mul(code.f.coeff(i + 1), s));
        }
        let v = fld.div(fb, code.f.coeff(0)).unwrap();
        let mut c = fld.mul(code.a.coeff(0), v);
        for (i, &s) in self.regs.iter().enumerate() {
            c = fld.add(c, fld.mul(code.a.coeff(i + 1), s));
        }
        if !self.regs.is_empty() {
            self.regs.rotate_right(1);
            self.regs[0] = v;
        }
        c
    }

    pub fn state(&self) -> EncoderState {
        EncoderState {
            regs: self.regs.clone(),
        }
    }
}

/// Complete transition table of a rate-1 code.
#[derive(Debug, Clone)]
pub struct Trellis {
    q: usize,
    memory: usize,
    num_states: usize,
    next: Vec<u32>,
    output: Vec<u8>,
    /// For each state, its q incoming edges as (previous state, input).
    prev: Vec<Vec<(u32, u8)>>,
}

impl Trellis {
    pub fn new(code: &CodeSpec) -> Result<Trellis, CodeError> {
        let q = code.field().q();
        let num_states = match code.num_states() {
            Some(s) if s <= MAX_TRELLIS_STATES => s,
            _ => {
                let states = (q as u128)
                    .checked_pow(code.memory() as u32)
                    .unwrap_or(u128::MAX);
                return Err(CodeError::TooManyStates(states));
            }
        };
        let mut next = vec![0u32; num_states * q];
        let mut output = vec![0u8; num_states * q];
        let mut prev = vec![Vec::with_capacity(q); num_states];
        for s in 0..num_states {
            for b in 0..q {
                let mut enc = Encoder {
                    code,
                    regs: EncoderState::from_label(s, q, code.memory()).regs,
                };
                let c = enc.step(Elem(b as u8));
                let ns = enc.state().label(q);
                next[s * q + b] = ns as u32;
                output[s * q + b] = c.0;
                prev[ns].push((s as u32, b as u8));
            }
        }
        Ok(Trellis {
            q,
            memory: code.memory(),
            num_states,
            next,
            output,
            prev,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_transitions(&self) -> usize {
        self.num_states * self.q
    }

    #[inline]
    pub fn next(&self, state: usize, input: usize) -> usize {
        self.next[state * self.q + input] as usize
    }

    #[inline]
    pub fn output(&self, state: usize, input: usize) -> usize {
        self.output[state * self.q + input] as usize
    }

    /// Incoming edges of `state` as (previous state, input symbol).
    pub fn incoming(&self, state: usize) -> &[(u32, u8)] {
        &self.prev[state]
    }

    /// Output sequence of the path driven by `info` from the zero state.
    pub fn walk(&self, info: &[Elem]) -> Vec<Elem> {
        let mut s = 0;
        info.iter()
            .map(|b| {
                let c = self.output(s, b.index());
                s = self.next(s, b.index());
                Elem(c as u8)
            })
            .collect()
    }
}

/// Code-domain tail that drives the dual encoder C-bar from `dual_state` to zero.
///
/// With the delay line w_k = c_k + phi w_{k-N}, zeroing w_{L+1..L+N} forces
/// c_{L+j} = -phi w_{L+j-N}, i.e. the negated, scaled register contents.
pub fn termination_tail(dual: &DualSpec, dual_state: &[Elem]) -> Vec<Elem> {
    let f = dual.field();
    let n = dual.memory();
    assert_eq!(dual_state.len(), n);
    let phi = dual.feedback();
    // dual_state[j-1] = w_{L-j+1}; w_{L+j-N} sits in register N-j+1.
    (1..=n)
        .map(|j| f.neg(f.mul(phi, dual_state[n - j])))
        .collect()
}

/// A tail-terminated frame: L information symbols followed by N tail symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// b_1..b_L
    pub info: Vec<Elem>,
    /// b_{L+1}..b_{L+N}, the information-domain image of the tail.
    pub tail_info: Vec<Elem>,
    /// c_1..c_{L+N}
    pub code: Vec<Elem>,
    /// Final states of C and C-bar after the tail; both zero for a valid frame.
    pub final_code_state: EncoderState,
    pub final_dual_state: Vec<Elem>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    /// All information-domain symbols including the tail.
    pub fn full_info(&self) -> Vec<Elem> {
        let mut v = self.info.clone();
        v.extend_from_slice(&self.tail_info);
        v
    }
}

/// Encodes `info` with C from the zero state and appends the termination tail.
pub fn encode_frame(dual: &DualSpec, info: &[Elem]) -> Result<Frame, CodeError> {
    let code = dual.code();
    let (mut cw, c_state) = code.encode_from(info, &EncoderState::zero(code.memory()))?;
    let mut dual_enc = DualEncoder::new(dual);
    for &c in &cw {
        dual_enc.step(c);
    }
    let tail = termination_tail(dual, dual_enc.state());
    let tail_info: Vec<Elem> = tail.iter().map(|&c| dual_enc.step(c)).collect();
    let (tail_code, final_code_state) = code.encode_from(&tail_info, &c_state)?;
    debug_assert_eq!(tail_code, tail, "C does not reproduce the C-bar tail");
    debug_assert!(final_code_state.is_zero(), "tail does not terminate C");
    debug_assert!(
        dual_enc.state().iter().all(|w| w.is_zero()),
        "tail does not terminate C-bar"
    );
    cw.extend_from_slice(&tail);
    Ok(Frame {
        info: info.to_vec(),
        tail_info,
        code: cw,
        final_code_state,
        final_dual_state: dual_enc.state().to_vec(),
    })
}
