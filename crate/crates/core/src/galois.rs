//! Table-driven arithmetic in GF(p^m) for q = p^m <= 256.
//!
//! Elements are dense labels in `[0, q)`. The label of an element is the
//! base-p expansion of its polynomial coefficients (coefficient of x^i is
//! digit i), so for p = 2 the label is the bit pattern and addition is XOR.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported field size.
pub const MAX_FIELD_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("polynomial {0:?} is reducible over GF({1})")]
    ReduciblePolynomial(Vec<u8>, u32),
    #[error("field size {0} is outside the supported range 2..=256")]
    UnsupportedSize(u64),
    #[error("invalid defining polynomial: {0}")]
    BadPolynomial(String),
    #[error("multiplication by zero is not a permutation")]
    ZeroScalar,
    #[error("cannot parse field descriptor {0:?}")]
    Parse(String),
}

/// A field element, identified by its label in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Elem(pub u8);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Selects the defining polynomial of an extension field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modulus {
    /// Built-in Conway polynomial for p = 2, smallest primitive polynomial otherwise.
    Default,
    /// Explicit monic polynomial, ascending coefficients c0..cm over GF(p).
    Custom(Vec<u8>),
}

struct Tables {
    p: u32,
    m: u32,
    q: usize,
    modulus: Vec<u8>,
    is_default: bool,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// GF(p^m) with precomputed addition, multiplication, negation and inverse tables.
///
/// Cloning is cheap; the tables are shared and never mutated.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t)
            || (self.t.p == other.t.p && self.t.m == other.t.m && self.t.modulus == other.t.modulus)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({self})")
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t.is_default {
            write!(f, "gf{}", self.t.q)
        } else {
            let cs: Vec<String> = self.t.modulus.iter().map(|c| c.to_string()).collect();
            write!(f, "gf{}^{}:{}", self.t.p, self.t.m, cs.join(","))
        }
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// Conway polynomials for GF(2^m), ascending coefficients.
fn conway_binary(m: u32) -> Option<Vec<u8>> {
    let c: &[u8] = match m {
        1 => &[0, 1],
        2 => &[1, 1, 1],
        3 => &[1, 1, 0, 1],
        4 => &[1, 1, 0, 0, 1],
        5 => &[1, 0, 1, 0, 0, 1],
        6 => &[1, 1, 0, 1, 1, 0, 1],
        7 => &[1, 1, 0, 0, 0, 0, 0, 1],
        8 => &[1, 0, 1, 1, 1, 0, 0, 0, 1],
        _ => return None,
    };
    Some(c.to_vec())
}

/// Remainder of `num` modulo the monic `den`, both ascending over GF(p).
fn prime_poly_rem(num: &[u8], den: &[u8], p: u32) -> Vec<u8> {
    let mut r: Vec<u32> = num.iter().map(|&c| c as u32).collect();
    let dd = den.len() - 1;
    while r.len() > dd {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dd;
        if lead != 0 {
            for (i, &d) in den.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p * p - lead * d as u32 % p) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r.into_iter().map(|c| c as u8).collect()
}

/// Trial division by every monic polynomial of degree 1..=m/2.
fn is_irreducible(poly: &[u8], p: u32) -> bool {
    let m = poly.len() - 1;
    if m <= 1 {
        return m == 1;
    }
    for d in 1..=m / 2 {
        let count = (p as usize).pow(d as u32);
        for low in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut x = low;
            for _ in 0..d {
                cand.push((x % p as usize) as u8);
                x /= p as usize;
            }
            cand.push(1);
            if prime_poly_rem(poly, &cand, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn digits_of(mut label: usize, p: usize, m: usize) -> Vec<u32> {
    let mut d = vec![0u32; m];
    for slot in d.iter_mut() {
        *slot = (label % p) as u32;
        label /= p;
    }
    d
}

fn label_of(digits: &[u32], p: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d as usize)
}

impl Field {
    /// Builds GF(p^m). `Modulus::Default` picks the built-in polynomial.
    pub fn new(p: u32, m: u32, modulus: Modulus) -> Result<Field, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if m == 0 {
            return Err(FieldError::UnsupportedSize(1));
        }
        let q = (p as u64).checked_pow(m).unwrap_or(u64::MAX);
        if q > MAX_FIELD_SIZE as u64 {
            return Err(FieldError::UnsupportedSize(q));
        }
        let q = q as usize;
        let (poly, is_default) = match modulus {
            Modulus::Default => (Self::default_modulus(p, m), true),
            Modulus::Custom(c) => {
                if m == 1 && c.is_empty() {
                    (vec![0, 1], true)
                } else {
                    if c.len() != m as usize + 1 {
                        return Err(FieldError::BadPolynomial(format!(
                            "expected {} coefficients, got {}",
                            m + 1,
                            c.len()
                        )));
                    }
                    if c.iter().any(|&x| x as u32 >= p) {
                        return Err(FieldError::BadPolynomial(format!(
                            "coefficients must be below {p}"
                        )));
                    }
                    if c[m as usize] != 1 {
                        return Err(FieldError::BadPolynomial("polynomial must be monic".into()));
                    }
                    if !is_irreducible(&c, p) {
                        return Err(FieldError::ReduciblePolynomial(c, p));
                    }
                    let is_default = m == 1 || c == Self::default_modulus(p, m);
                    (c, is_default)
                }
            }
        };
        Ok(Field {
            t: Arc::new(Self::build_tables(p, m, q, poly, is_default)),
        })
    }

    /// GF(q) with the default modulus; q must be a prime power.
    pub fn with_size(q: u64) -> Result<Field, FieldError> {
        if !(2..=MAX_FIELD_SIZE as u64).contains(&q) {
            return Err(FieldError::UnsupportedSize(q));
        }
        let q32 = q as u32;
        let p = (2..=q32).find(|d| q32 % d == 0).unwrap();
        let mut m = 0;
        let mut r = q32;
        while r % p == 0 {
            r /= p;
            m += 1;
        }
        if r != 1 {
            return Err(FieldError::UnsupportedSize(q));
        }
        Field::new(p, m, Modulus::Default)
    }

    fn default_modulus(p: u32, m: u32) -> Vec<u8> {
        if m == 1 {
            return vec![0, 1];
        }
        if p == 2 {
            if let Some(c) = conway_binary(m) {
                return c;
            }
        }
        // Smallest primitive polynomial, ordered by the label of its lower coefficients.
        let q = (p as usize).pow(m);
        for low in 0..q {
            let mut cand: Vec<u8> = digits_of(low, p as usize, m as usize)
                .into_iter()
                .map(|d| d as u8)
                .collect();
            cand.push(1);
            if cand[0] == 0 || !is_irreducible(&cand, p) {
                continue;
            }
            let t = Self::build_tables(p, m, q, cand.clone(), true);
            // x has label p; primitive iff its order is q - 1.
            let x = p as usize;
            let mut acc = x;
            let mut order = 1;
            while acc != 1 {
                acc = t.mul[acc * q + x] as usize;
                order += 1;
            }
            if order == q - 1 {
                return cand;
            }
        }
        unreachable!("every finite field has a primitive polynomial")
    }

    fn build_tables(p: u32, m: u32, q: usize, modulus: Vec<u8>, is_default: bool) -> Tables {
        let pu = p as usize;
        let mu = m as usize;
        let digits: Vec<Vec<u32>> = (0..q).map(|e| digits_of(e, pu, mu)).collect();
        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                let s: Vec<u32> = digits[a]
                    .iter()
                    .zip(&digits[b])
                    .map(|(x, y)| (x + y) % p)
                    .collect();
                add[a * q + b] = label_of(&s, pu) as u8;

                let mut prod = vec![0u32; 2 * mu - 1];
                for (i, x) in digits[a].iter().enumerate() {
                    for (j, y) in digits[b].iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                // Reduce by the monic modulus from the top down.
                for top in (mu..prod.len()).rev() {
                    let lead = prod[top];
                    if lead != 0 {
                        for (i, &c) in modulus.iter().enumerate().take(mu) {
                            let k = top - mu + i;
                            prod[k] = (prod[k] + p * p - lead * c as u32 % p) % p;
                        }
                        prod[top] = 0;
                    }
                }
                mul[a * q + b] = label_of(&prod[..mu], pu) as u8;
            }
        }
        let neg = (0..q)
            .map(|a| (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u8)
            .collect();
        let inv = (0..q)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as u8
                }
            })
            .collect();
        Tables {
            p,
            m,
            q,
            modulus,
            is_default,
            add,
            mul,
            neg,
            inv,
        }
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.t.p
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.t.m
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.t.q
    }

    /// Defining polynomial, ascending coefficients.
    pub fn modulus(&self) -> &[u8] {
        &self.t.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.t.q).map(|e| Elem(e as u8))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = Elem> {
        (1..self.t.q).map(|e| Elem(e as u8))
    }

    /// Checks that `e` is a label of this field.
    pub fn contains(&self, e: Elem) -> bool {
        e.index() < self.t.q
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.t.add[a.index() * self.t.q + b.index()])
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.t.neg[a.index()])
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.t.mul[a.index() * self.t.q + b.index()])
    }

    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Option<Elem> {
        if a.is_zero() {
            None
        } else {
            Some(Elem(self.t.inv[a.index()]))
        }
    }

    pub fn div(&self, a: Elem, b: Elem) -> Option<Elem> {
        self.inv(b).map(|bi| self.mul(a, bi))
    }

    /// Base-p digit `i` of an element label (coefficient of x^i).
    #[inline]
    pub fn digit(&self, e: Elem, i: u32) -> u32 {
        (e.index() / (self.t.p as usize).pow(i) % self.t.p as usize) as u32
    }

    /// The bijection j -> j*h on labels.
    pub fn mul_permutation(&self, h: Elem) -> Result<Vec<u8>, FieldError> {
        if h.is_zero() {
            return Err(FieldError::ZeroScalar);
        }
        Ok(self.elements().map(|j| self.mul(j, h).0).collect())
    }
}

impl FromStr for Field {
    type Err = FieldError;

    /// Parses `gf<q>` or `gf<p>^<m>:<c0,c1,...,cm>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::Parse(s.to_string());
        let body = s
            .trim()
            .strip_prefix("gf")
            .or_else(|| s.trim().strip_prefix("GF"))
            .ok_or_else(bad)?;
        match body.split_once(':') {
            None => {
                if let Some((p, m)) = body.split_once('^') {
                    let p: u32 = p.parse().map_err(|_| bad())?;
                    let m: u32 = m.parse().map_err(|_| bad())?;
                    Field::new(p, m, Modulus::Default)
                } else {
                    Field::with_size(body.parse().map_err(|_| bad())?)
                }
            }
            Some((head, coeffs)) => {
                let (p, m) = head.split_once('^').ok_or_else(bad)?;
                let p: u32 = p.parse().map_err(|_| bad())?;
                let m: u32 = m.parse().map_err(|_| bad())?;
                let c = coeffs
                    .split(',')
                    .map(|c| c.trim().parse::<u8>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?;
                Field::new(p, m, Modulus::Custom(c))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf4() -> Field {
        Field::new(2, 2, Modulus::Default).unwrap()
    }

    // Independent GF(4) multiplication: polynomials over GF(2) mod x^2+x+1.
    fn gf4_mul_oracle(a: u8, b: u8) -> u8 {
        let mut prod = 0u8;
        for i in 0..2 {
            if b >> i & 1 == 1 {
                prod ^= a << i;
            }
        }
        if prod & 0b100 != 0 {
            prod ^= 0b111;
        }
        prod
    }

    #[test]
    fn gf4_default_modulus() {
        let f = gf4();
        assert_eq!(f.modulus(), &[1, 1, 1]);
        assert_eq!(f.q(), 4);
        assert_eq!(f.to_string(), "gf4");
    }

    #[test]
    fn gf4_add_is_digitwise_mod2() {
        let f = gf4();
        assert_eq!(f.add(Elem(2), Elem(3)), Elem(1));
        for a in f.elements() {
            assert_eq!(f.add(a, Elem::ZERO), a);
            for b in f.elements() {
                let oracle = (0..2)
                    .map(|i| ((f.digit(a, i) + f.digit(b, i)) % 2) << i)
                    .sum::<u32>();
                assert_eq!(f.add(a, b).0 as u32, oracle);
            }
        }
    }

    #[test]
    fn gf4_mul_matches_oracle() {
        let f = gf4();
        assert_eq!(f.mul(Elem(2), Elem(2)), Elem(3));
        assert_eq!(f.mul(Elem(2), Elem(3)), Elem(1));
        for a in 0..4u8 {
            for b in 0..4u8 {
                assert_eq!(f.mul(Elem(a), Elem(b)).0, gf4_mul_oracle(a, b));
            }
        }
    }

    #[test]
    fn gf5_is_mod_arithmetic() {
        let f = Field::new(5, 1, Modulus::Default).unwrap();
        assert_eq!(f.add(Elem(3), Elem(4)), Elem(2));
        for a in 0..5u8 {
            for b in 0..5u8 {
                assert_eq!(f.add(Elem(a), Elem(b)).0, (a + b) % 5);
                assert_eq!(f.mul(Elem(a), Elem(b)).0, (a * b) % 5);
            }
        }
        assert_eq!(f.to_string(), "gf5");
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            Field::new(4, 1, Modulus::Default).unwrap_err(),
            FieldError::NotPrime(4)
        );
        assert!(matches!(
            Field::new(2, 2, Modulus::Custom(vec![0, 1, 1])),
            Err(FieldError::ReduciblePolynomial(..))
        ));
        assert!(matches!(
            Field::new(2, 9, Modulus::Default),
            Err(FieldError::UnsupportedSize(512))
        ));
        assert!(matches!(
            Field::new(17, 2, Modulus::Default),
            Err(FieldError::UnsupportedSize(289))
        ));
        assert!(matches!(
            Field::with_size(6),
            Err(FieldError::UnsupportedSize(6))
        ));
        assert!(matches!(
            Field::new(2, 2, Modulus::Custom(vec![1, 1])),
            Err(FieldError::BadPolynomial(_))
        ));
    }

    #[test]
    fn mul_permutations() {
        let f = gf4();
        assert_eq!(f.mul_permutation(Elem(2)).unwrap(), vec![0, 2, 3, 1]);
        assert_eq!(f.mul_permutation(Elem(1)).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(f.mul_permutation(Elem(3)).unwrap(), vec![0, 3, 1, 2]);
        assert_eq!(f.mul_permutation(Elem(0)), Err(FieldError::ZeroScalar));
    }

    #[test]
    fn descriptors_round_trip() {
        for s in [
            "gf4",
            "gf2",
            "gf5",
            "gf16",
            "gf9",
            "gf256",
            "gf2^3:1,0,1,1",
            "gf3^2:2,2,1",
        ] {
            let f: Field = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
            assert_eq!(f.to_string().parse::<Field>().unwrap(), f);
        }
        assert_eq!("gf2^2:1,1,1".parse::<Field>().unwrap().to_string(), "gf4");
        assert!("gf".parse::<Field>().is_err());
        assert!("gf4x".parse::<Field>().is_err());
        assert!("gf2^2:0,1,1".parse::<Field>().is_err());
    }

    #[test]
    fn default_moduli_are_primitive_for_every_size() {
        for q in 2..=256u64 {
            let Ok(f) = Field::with_size(q) else { continue };
            if f.m() == 1 {
                continue;
            }
            let x = Elem(f.p() as u8);
            let mut acc = x;
            let mut order = 1;
            while acc != Elem::ONE {
                acc = f.mul(acc, x);
                order += 1;
            }
            assert_eq!(order, f.q() - 1, "{f}");
        }
    }
}
