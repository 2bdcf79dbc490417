use std::fmt;

use crate::convcode::{CodeError, CodeSpec};
use crate::galois::{Elem, Field};
use crate::gfpoly::{min_complementary, Complementary, Poly};

use super::DualError;

/// The dual encoder C-bar with generator 1/g(x) = f(x)z(x) / a(x)z(x).
///
/// Both polynomials are divided by a_0 so that the denominator reads
/// `1 - feedback x^N`. C-bar keeps N registers w_{k-1}..w_{k-N} with
/// w_k = c_k + feedback w_{k-N} and emits b_k = sum_i taps[i] w_{k-i}.
#[derive(Clone)]
pub struct DualSpec {
    code: CodeSpec,
    comp: Complementary,
    memory: usize,
    taps: Vec<Elem>,
    feedback: Elem,
}

impl fmt::Debug for DualSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let taps: Vec<u8> = self.taps.iter().map(|t| t.0).collect();
        f.debug_struct("DualSpec")
            .field("code", &self.code.to_string())
            .field("z", &self.comp.z.to_string())
            .field("N", &self.memory)
            .field("taps", &taps)
            .field("feedback", &self.feedback.0)
            .finish()
    }
}

impl DualSpec {
    pub fn from_code(code: &CodeSpec) -> Result<DualSpec, DualError> {
        let field = code.field();
        let a = code.numerator();
        let f = code.denominator();
        let comp = min_complementary(a)?;
        let a0_inv = field.inv(a.coeff(0)).unwrap();
        let fz = f.mul(&comp.z)?.scale(a0_inv);
        let deg_fz = fz.degree().unwrap();
        let memory = if comp.total == 0 {
            deg_fz
        } else if deg_fz > comp.total {
            return Err(DualError::ImproperDual {
                num_degree: f.degree().unwrap(),
                den_degree: a.degree().unwrap(),
            });
        } else {
            comp.total
        };
        let taps = (0..=memory).map(|i| fz.coeff(i)).collect();
        Ok(DualSpec {
            code: code.clone(),
            feedback: comp.feedback,
            comp,
            memory,
            taps,
        })
    }

    /// Replaces the tap table; for negative-control fixtures.
    pub fn with_taps(&self, taps: Vec<Elem>) -> DualSpec {
        assert_eq!(taps.len(), self.memory + 1);
        DualSpec {
            taps,
            ..self.clone()
        }
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn field(&self) -> &Field {
        self.code.field()
    }

    /// Number of registers N = n + l.
    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Degree l of the complementary polynomial.
    pub fn complementary_degree(&self) -> usize {
        self.comp.l
    }

    pub fn complementary(&self) -> &Poly {
        &self.comp.z
    }

    /// h_0..h_N, coefficients of f(x)z(x)/a_0.
    pub fn taps(&self) -> &[Elem] {
        &self.taps
    }

    pub fn feedback(&self) -> Elem {
        self.feedback
    }

    /// Weight of register N in the output once w_k is eliminated: h_N + h_0 * feedback.
    pub fn last_register_tap(&self) -> Elem {
        let f = self.field();
        if self.memory == 0 {
            return Elem::ZERO;
        }
        f.add(self.taps[self.memory], f.mul(self.taps[0], self.feedback))
    }

    /// Numerator f z / a_0 as a polynomial.
    pub fn numerator(&self) -> Poly {
        Poly::new(self.field(), self.taps.clone()).unwrap()
    }

    /// Denominator 1 - feedback x^N.
    pub fn denominator(&self) -> Poly {
        let f = self.field();
        if self.comp.total == 0 {
            return Poly::one(f);
        }
        Poly::one(f)
            .sub(&Poly::monomial(f, self.feedback, self.memory))
            .unwrap()
    }

    /// The code written as (a z)/(f z); its trellis has one state per C-bar state
    /// and its zero-state termination matches the tail of [`encode_frame`](crate::convcode::encode_frame).
    pub fn decoding_code(&self) -> Result<CodeSpec, CodeError> {
        self.code.expanded(&self.comp.z)
    }
}

/// Symbol-level C-bar. Registers hold w_{k-1}..w_{k-N} (register 1 most recent).
#[derive(Debug, Clone)]
pub struct DualEncoder<'a> {
    spec: &'a DualSpec,
    regs: Vec<Elem>,
}

impl<'a> DualEncoder<'a> {
    pub fn new(spec: &'a DualSpec) -> Self {
        DualEncoder {
            spec,
            regs: vec![Elem::ZERO; spec.memory],
        }
    }

    /// Consumes c_k, returns b_k.
    pub fn step(&mut self, c: Elem) -> Elem {
        let s = self.spec;
        let f = s.field();
        let n = s.memory;
        let mut b = f.mul(s.taps[0], c);
        if n == 0 {
            return b;
        }
        for i in 1..n {
            b = f.add(b, f.mul(s.taps[i], self.regs[i - 1]));
        }
        b = f.add(b, f.mul(s.last_register_tap(), self.regs[n - 1]));
        let w = f.add(c, f.mul(s.feedback, self.regs[n - 1]));
        self.regs.rotate_right(1);
        self.regs[0] = w;
        b
    }

    pub fn state(&self) -> &[Elem] {
        &self.regs
    }
}

/// C-bar with reverse-memory labeling fed the time-reversed code sequence.
///
/// Register r holds w_{k-N+r}, so after consuming c_T..c_{k+1} the contents
/// read in reverse order equal the forward C-bar state at time k.
#[derive(Debug, Clone)]
pub struct ReverseDualEncoder<'a> {
    spec: &'a DualSpec,
    regs: Vec<Elem>,
    feedback_inv: Elem,
}

impl<'a> ReverseDualEncoder<'a> {
    /// Fails when the dual has no feedback; then w_{k-N} is not recoverable from the future.
    pub fn new(spec: &'a DualSpec) -> Result<Self, DualError> {
        let feedback_inv = spec
            .field()
            .inv(spec.feedback)
            .ok_or(DualError::NoFeedback)?;
        Ok(ReverseDualEncoder {
            spec,
            regs: vec![Elem::ZERO; spec.memory],
            feedback_inv,
        })
    }

    /// Consumes c_k (in reverse time order).
    pub fn step(&mut self, c: Elem) {
        let f = self.spec.field();
        let n = self.spec.memory;
        let oldest = f.mul(self.feedback_inv, f.sub(self.regs[n - 1], c));
        self.regs.rotate_right(1);
        self.regs[0] = oldest;
    }

    /// Registers in reverse order, i.e. in forward labeling.
    pub fn forward_view(&self) -> Vec<Elem> {
        self.regs.iter().rev().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dual(s: &str) -> DualSpec {
        DualSpec::from_code(&s.parse().unwrap()).unwrap()
    }

    fn labels(v: &[Elem]) -> Vec<u8> {
        v.iter().map(|e| e.0).collect()
    }

    #[test]
    fn taps_of_one_plus_x() {
        let d = dual("gf4:(1+x)");
        assert_eq!(d.memory(), 2);
        assert_eq!(labels(d.taps()), vec![1, 1, 0]);
        assert_eq!(d.feedback(), Elem(1));
        assert_eq!(d.last_register_tap(), Elem(1));
    }

    #[test]
    fn taps_of_rational_code() {
        let d = dual("gf4:(1+x)/(1+2x)");
        assert_eq!(d.memory(), 2);
        assert_eq!(labels(d.taps()), vec![1, 3, 2]);
        assert_eq!(d.denominator().to_string(), "1+x^2");
    }

    #[test]
    fn identity_code_dual() {
        let d = dual("gf4:(1+2x)/(1+2x)");
        // q(x) = 1: numerator and denominator coincide
        assert_eq!(d.numerator(), d.denominator());
    }

    #[test]
    fn cross_multiplication() {
        for s in [
            "gf4:(1+x)",
            "gf4:(1+3x+2x^2)",
            "gf4:(1+x+2x^2)",
            "gf4:(1+x)/(1+2x)",
            "gf4:(1+3x+2x^2)/(1+x+2x^2)",
            "gf5:(2+x+3x^2)/(1+4x)",
            "gf4:(1)/(1+x+3x^2)",
        ] {
            let d = dual(s);
            let a = d.code().numerator();
            let f = d.code().denominator();
            let lhs = a.mul(&d.numerator()).unwrap();
            let rhs = f.mul(&d.denominator()).unwrap();
            assert_eq!(lhs, rhs, "{s}");
        }
    }

    #[test]
    fn dual_encoder_inverts_code() {
        for s in [
            "gf4:(1+x)",
            "gf4:(1+x+2x^2)",
            "gf4:(1+3x+2x^2)/(1+x+2x^2)",
            "gf5:(2+x+3x^2)/(1+4x)",
            "gf4:(3)/(1+x+3x^2)",
        ] {
            let d = dual(s);
            let b: Vec<Elem> = (0..40)
                .map(|k| Elem(((k * 7 + 3) % d.field().q()) as u8))
                .collect();
            let c = d.code().encode(&b).unwrap();
            let mut de = DualEncoder::new(&d);
            let back: Vec<Elem> = c.iter().map(|&x| de.step(x)).collect();
            assert_eq!(back, b, "{s}");
        }
    }

    #[test]
    fn feedforward_recursive_code_has_no_feedback() {
        let d = dual("gf4:(1)/(1+x+3x^2)");
        assert_eq!(d.memory(), 2);
        assert_eq!(d.feedback(), Elem::ZERO);
        assert!(matches!(
            ReverseDualEncoder::new(&d),
            Err(DualError::NoFeedback)
        ));
    }

    #[test]
    fn improper_dual_rejected() {
        let code = "gf4:(1+x)/(1+x+x^2)".parse().unwrap();
        assert!(matches!(
            DualSpec::from_code(&code),
            Err(DualError::ImproperDual { .. })
        ));
    }
}
