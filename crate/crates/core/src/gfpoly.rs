//! Univariate polynomials over GF(q) and the minimum complementary polynomial.

use std::fmt;

use thiserror::Error;

use crate::galois::{Elem, Field};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials live in different fields")]
    FieldMismatch,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("polynomial has a zero constant term")]
    NoConstantTerm,
    #[error("no N <= {0} with x^N congruent to a nonzero constant")]
    SearchExhausted(u64),
    #[error("coefficient {0} is not an element of the field")]
    BadCoefficient(u32),
    #[error("cannot parse polynomial {0:?}")]
    Parse(String),
}

/// Polynomial with ascending coefficients and no trailing zeros.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    field: Field,
    coeffs: Vec<Elem>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}]({self})", self.field)
    }
}

impl fmt::Display for Poly {
    /// Human form such as `1+3x+2x^2`; the zero polynomial prints as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c.0) {
                (0, v) => write!(f, "{v}")?,
                (1, 1) => write!(f, "x")?,
                (1, v) => write!(f, "{v}x")?,
                (_, 1) => write!(f, "x^{i}")?,
                (_, v) => write!(f, "{v}x^{i}")?,
            }
        }
        Ok(())
    }
}

impl Poly {
    pub fn new(field: &Field, coeffs: Vec<Elem>) -> Result<Poly, PolyError> {
        if let Some(bad) = coeffs.iter().find(|c| !field.contains(**c)) {
            return Err(PolyError::BadCoefficient(bad.0 as u32));
        }
        let mut p = Poly {
            field: field.clone(),
            coeffs,
        };
        p.trim();
        Ok(p)
    }

    /// Builds from raw labels; panics on labels outside the field.
    pub fn from_labels(field: &Field, labels: &[u8]) -> Poly {
        Poly::new(field, labels.iter().map(|&c| Elem(c)).collect()).expect("label outside field")
    }

    pub fn zero(field: &Field) -> Poly {
        Poly {
            field: field.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: &Field) -> Poly {
        Poly::constant(field, Elem::ONE)
    }

    pub fn constant(field: &Field, c: Elem) -> Poly {
        Poly::monomial(field, c, 0)
    }

    /// c * x^deg
    pub fn monomial(field: &Field, c: Elem, deg: usize) -> Poly {
        let mut coeffs = vec![Elem::ZERO; deg + 1];
        coeffs[deg] = c;
        let mut p = Poly {
            field: field.clone(),
            coeffs,
        };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of x^i (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> Elem {
        self.coeffs.get(i).copied().unwrap_or(Elem::ZERO)
    }

    pub fn leading(&self) -> Elem {
        self.coeffs.last().copied().unwrap_or(Elem::ZERO)
    }

    fn check_field(&self, other: &Poly) -> Result<(), PolyError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(PolyError::FieldMismatch)
        }
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_field(other)?;
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| f.add(self.coeff(i), other.coeff(i)))
            .collect();
        let mut p = Poly {
            field: f.clone(),
            coeffs,
        };
        p.trim();
        Ok(p)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.add(&other.scale(self.field.neg(Elem::ONE)))
    }

    pub fn scale(&self, c: Elem) -> Poly {
        let f = &self.field;
        let mut p = Poly {
            field: f.clone(),
            coeffs: self.coeffs.iter().map(|&x| f.mul(x, c)).collect(),
        };
        p.trim();
        p
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly, PolyError> {
        self.check_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero(&self.field));
        }
        let f = &self.field;
        let mut coeffs = vec![Elem::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = f.add(coeffs[i + j], f.mul(a, b));
            }
        }
        let mut p = Poly {
            field: f.clone(),
            coeffs,
        };
        p.trim();
        Ok(p)
    }

    /// Long division: returns `(quotient, remainder)` with `self = q*v + r`, `deg r < deg v`.
    pub fn divmod(&self, v: &Poly) -> Result<(Poly, Poly), PolyError> {
        self.check_field(v)?;
        let dv = v.degree().ok_or(PolyError::DivisionByZero)?;
        let f = &self.field;
        let lead_inv = f.inv(v.leading()).expect("nonzero leading coefficient");
        let mut rem = self.coeffs.clone();
        let qlen = rem.len().saturating_sub(dv);
        let mut quot = vec![Elem::ZERO; qlen];
        for top in (dv..rem.len()).rev() {
            let c = f.mul(rem[top], lead_inv);
            if c.is_zero() {
                continue;
            }
            quot[top - dv] = c;
            for (i, &vc) in v.coeffs.iter().enumerate() {
                let k = top - dv + i;
                rem[k] = f.sub(rem[k], f.mul(c, vc));
            }
        }
        rem.truncate(dv);
        let mut q = Poly {
            field: f.clone(),
            coeffs: quot,
        };
        let mut r = Poly {
            field: f.clone(),
            coeffs: rem,
        };
        q.trim();
        r.trim();
        Ok((q, r))
    }

    /// Parses `1+3x+2x^2` or the ascending list `1,3,2`.
    pub fn parse(field: &Field, s: &str) -> Result<Poly, PolyError> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || PolyError::Parse(s.clone());
        if s.is_empty() {
            return Err(bad());
        }
        let mut coeffs: Vec<Elem> = Vec::new();
        let mut put = |deg: usize, c: u32| -> Result<(), PolyError> {
            if c as usize >= field.q() {
                return Err(PolyError::BadCoefficient(c));
            }
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, Elem::ZERO);
            }
            coeffs[deg] = field.add(coeffs[deg], Elem(c as u8));
            Ok(())
        };
        if !s.contains('x') && s.contains(',') || s.chars().all(|c| c.is_ascii_digit()) {
            for (i, tok) in s.split(',').enumerate() {
                put(i, tok.parse().map_err(|_| bad())?)?;
            }
        } else {
            for term in s.split('+') {
                if term.is_empty() {
                    return Err(bad());
                }
                match term.split_once('x') {
                    None => put(0, term.parse().map_err(|_| bad())?)?,
                    Some((c, rest)) => {
                        let c = if c.is_empty() {
                            1
                        } else {
                            c.trim_end_matches('*').parse().map_err(|_| bad())?
                        };
                        let deg = if rest.is_empty() {
                            1
                        } else {
                            rest.strip_prefix('^')
                                .ok_or_else(bad)?
                                .parse()
                                .map_err(|_| bad())?
                        };
                        put(deg, c)?;
                    }
                }
            }
        }
        Poly::new(field, coeffs)
    }

    /// Comma-separated ascending coefficient labels.
    pub fn to_list(&self) -> String {
        let v: Vec<String> = self.coeffs.iter().map(|c| c.0.to_string()).collect();
        if v.is_empty() {
            "0".into()
        } else {
            v.join(",")
        }
    }
}

/// Result of [`min_complementary`].
///
/// `z` has constant term 1 and `a(x) z(x) = a_0 (1 - feedback x^N)`, i.e. the
/// product is a pure delay with a single feedback tap. `residue` is the
/// constant `r = x^N mod a(x)`, so `a` divides `x^N - r` and `feedback = 1/r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complementary {
    pub z: Poly,
    /// Degree of `z`.
    pub l: usize,
    /// Total degree N = deg(a) + l.
    pub total: usize,
    pub feedback: Elem,
    pub residue: Elem,
}

/// Smallest N > deg(a) such that x^N is congruent to a nonzero constant modulo `a`.
///
/// A constant `a` needs no feedback: the result is z = 1, N = 0, feedback 0.
pub fn min_complementary(a: &Poly) -> Result<Complementary, PolyError> {
    let field = a.field();
    let a0 = a.coeff(0);
    if a0.is_zero() {
        return Err(PolyError::NoConstantTerm);
    }
    let n = a.degree().unwrap();
    if n == 0 {
        return Ok(Complementary {
            z: Poly::one(field),
            l: 0,
            total: 0,
            feedback: Elem::ZERO,
            residue: Elem::ZERO,
        });
    }
    // x is a unit mod a, so x^d is a constant for some d <= q^n - 1 and the
    // first multiple of d above n is at most n + d.
    let bound = ((field.q() as u64).saturating_pow(n as u32) - 1).saturating_add(n as u64);
    let lead_inv = field.inv(a.leading()).unwrap();
    // x^k mod a, kept as n coefficients; start at x^n mod a.
    let mut r = vec![Elem::ZERO; n];
    for (i, slot) in r.iter_mut().enumerate() {
        *slot = field.neg(field.mul(a.coeff(i), lead_inv));
    }
    let mut k = n as u64;
    loop {
        // multiply by x and reduce
        let top = r[n - 1];
        for i in (1..n).rev() {
            r[i] = r[i - 1];
        }
        r[0] = Elem::ZERO;
        if !top.is_zero() {
            let c = field.mul(top, lead_inv);
            for (i, slot) in r.iter_mut().enumerate() {
                *slot = field.sub(*slot, field.mul(c, a.coeff(i)));
            }
        }
        k += 1;
        if r[1..].iter().all(|c| c.is_zero()) && !r[0].is_zero() {
            break;
        }
        if k >= bound {
            return Err(PolyError::SearchExhausted(bound));
        }
    }
    let total = k as usize;
    let residue = r[0];
    // (x^N - r) / a, then scale to constant term 1.
    let binom = Poly::monomial(field, Elem::ONE, total).sub(&Poly::constant(field, residue))?;
    let (zq, rem) = binom.divmod(a)?;
    debug_assert!(rem.is_zero());
    let z = zq.scale(field.inv(zq.coeff(0)).unwrap());
    Ok(Complementary {
        l: total - n,
        total,
        feedback: field.inv(residue).unwrap(),
        residue,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf4() -> Field {
        Field::with_size(4).unwrap()
    }

    fn p(f: &Field, s: &str) -> Poly {
        Poly::parse(f, s).unwrap()
    }

    #[test]
    fn parse_and_print() {
        let f = gf4();
        assert_eq!(p(&f, "1+3x+2x^2").coeffs(), &[Elem(1), Elem(3), Elem(2)]);
        assert_eq!(p(&f, "1,3,2"), p(&f, "1+3x+2x^2"));
        assert_eq!(p(&f, "1+3x+2x^2").to_string(), "1+3x+2x^2");
        assert_eq!(p(&f, "x^3+1").to_string(), "1+x^3");
        assert_eq!(p(&f, "0,0,0").to_string(), "0");
        assert_eq!(p(&f, "2").to_list(), "2");
        assert!(matches!(
            Poly::parse(&f, "1+4x"),
            Err(PolyError::BadCoefficient(4))
        ));
        assert!(Poly::parse(&f, "1++x").is_err());
        assert!(Poly::parse(&f, "").is_err());
    }

    #[test]
    fn multiplication_examples() {
        let f = gf4();
        assert_eq!(p(&f, "1+x").mul(&p(&f, "1+x")).unwrap(), p(&f, "1+x^2"));
        assert_eq!(
            p(&f, "1+2x").mul(&p(&f, "1+x")).unwrap(),
            p(&f, "1+3x+2x^2")
        );
        let u = p(&f, "3+x+2x^3");
        assert_eq!(u.mul(&Poly::one(&f)).unwrap(), u);
    }

    #[test]
    fn field_mismatch() {
        let f4 = gf4();
        let f5 = Field::with_size(5).unwrap();
        assert_eq!(
            p(&f4, "1+x").mul(&p(&f5, "1+x")),
            Err(PolyError::FieldMismatch)
        );
        assert_eq!(
            p(&f4, "1+x").divmod(&p(&f5, "1+x")).unwrap_err(),
            PolyError::FieldMismatch
        );
    }

    #[test]
    fn division_examples() {
        let f = gf4();
        let (q, r) = p(&f, "1+x^2").divmod(&p(&f, "1+x")).unwrap();
        assert_eq!((q, r), (p(&f, "1+x"), Poly::zero(&f)));
        let u = p(&f, "2+3x^4");
        assert_eq!(
            u.divmod(&Poly::one(&f)).unwrap(),
            (u.clone(), Poly::zero(&f))
        );
        let (q, r) = p(&f, "x").divmod(&p(&f, "1+x")).unwrap();
        assert_eq!((q, r), (Poly::one(&f), Poly::one(&f)));
        assert_eq!(
            u.divmod(&Poly::zero(&f)).unwrap_err(),
            PolyError::DivisionByZero
        );
    }

    #[test]
    fn complementary_of_one_plus_x() {
        let f = gf4();
        let c = min_complementary(&p(&f, "1+x")).unwrap();
        assert_eq!(c.z, p(&f, "1+x"));
        assert_eq!(
            (c.l, c.total, c.feedback, c.residue),
            (1, 2, Elem(1), Elem(1))
        );
    }

    #[test]
    fn complementary_of_constant() {
        let f = gf4();
        let c = min_complementary(&Poly::one(&f)).unwrap();
        assert_eq!(c.z, Poly::one(&f));
        assert_eq!((c.l, c.total), (0, 0));
    }

    #[test]
    fn complementary_needs_constant_term() {
        let f = gf4();
        assert_eq!(
            min_complementary(&p(&f, "x+x^2")).unwrap_err(),
            PolyError::NoConstantTerm
        );
    }

    #[test]
    fn complementary_of_irreducible_quadratic() {
        // 1+x+2x^2 has roots of order 15 in GF(16); x^5 is the first power
        // landing in GF(4)^*. Exhaustive oracle: smallest N in (2, 15] with
        // x^N - c divisible for some nonzero c.
        let f = gf4();
        let a = p(&f, "1+x+2x^2");
        let mut oracle = None;
        'outer: for n in 3..=15usize {
            for c in f.nonzero_elements() {
                let b = Poly::monomial(&f, Elem::ONE, n)
                    .sub(&Poly::constant(&f, c))
                    .unwrap();
                if b.divmod(&a).unwrap().1.is_zero() {
                    oracle = Some((n, c));
                    break 'outer;
                }
            }
        }
        let c = min_complementary(&a).unwrap();
        assert_eq!(Some((c.total, c.residue)), oracle);
        assert_eq!((c.total, c.l, c.residue), (5, 3, Elem(3)));
        let az = a.mul(&c.z).unwrap();
        let expect = Poly::constant(&f, Elem::ONE)
            .sub(&Poly::monomial(&f, c.feedback, 5))
            .unwrap();
        assert_eq!(az, expect);
    }
}
