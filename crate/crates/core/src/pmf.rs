//! Probability mass functions over GF(q) and their group algebra.
//!
//! Convolution is over the additive group of the field, i.e. (Z_p)^m. The
//! transform that diagonalizes it is the tensor product of m size-p DFTs,
//! which is the Walsh-Hadamard transform when p = 2.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::galois::{Elem, Field, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PmfError {
    #[error("pmf has no mass left to normalize")]
    AllZeroMass,
    #[error("pmf length {got} does not match field size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("negative or non-finite mass")]
    InvalidMass,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A length-q vector of nonnegative masses; `mass[j]` is P(X = j).
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    pub fn uniform(q: usize) -> Pmf {
        Pmf {
            mass: vec![1.0 / q as f64; q],
        }
    }

    pub fn delta(q: usize, at: Elem) -> Pmf {
        let mut mass = vec![0.0; q];
        mass[at.index()] = 1.0;
        Pmf { mass }
    }

    /// Wraps raw masses without normalizing.
    pub fn from_mass(mass: Vec<f64>) -> Result<Pmf, PmfError> {
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(PmfError::InvalidMass);
        }
        Ok(Pmf { mass })
    }

    /// Wraps masses already known to be valid.
    pub(crate) fn from_raw(mass: Vec<f64>) -> Pmf {
        debug_assert!(mass.iter().all(|m| m.is_finite() && *m >= 0.0));
        Pmf { mass }
    }

    /// Wraps and normalizes.
    pub fn normalized(mass: Vec<f64>) -> Result<Pmf, PmfError> {
        let mut p = Pmf::from_mass(mass)?;
        p.normalize()?;
        Ok(p)
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn normalize(&mut self) -> Result<(), PmfError> {
        let s = self.total();
        if !(s > 0.0) || !s.is_finite() {
            return Err(PmfError::AllZeroMass);
        }
        let inv = 1.0 / s;
        self.mass.iter_mut().for_each(|m| *m *= inv);
        Ok(())
    }

    /// Most likely element; ties go to the smallest label.
    pub fn argmax(&self) -> Elem {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = i;
            }
        }
        Elem(best as u8)
    }

    /// Element-wise product, unnormalized.
    pub fn hadamard(&self, other: &Pmf) -> Pmf {
        Pmf {
            mass: self
                .mass
                .iter()
                .zip(&other.mass)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn total_variation(&self, other: &Pmf) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Transform-domain coefficients of a pmf.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// Walsh-Hadamard coefficients (p = 2).
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Spectrum {
    pub fn len(&self) -> usize {
        match self {
            Spectrum::Real(v) => v.len(),
            Spectrum::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficient i as a complex number.
    pub fn coeff(&self, i: usize) -> Complex64 {
        match self {
            Spectrum::Real(v) => Complex64::new(v[i], 0.0),
            Spectrum::Complex(v) => v[i],
        }
    }

    pub fn hadamard_assign(&mut self, other: &Spectrum) {
        match (self, other) {
            (Spectrum::Real(a), Spectrum::Real(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x *= y)
            }
            (Spectrum::Complex(a), Spectrum::Complex(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x *= y)
            }
            _ => panic!("spectra of different kinds"),
        }
    }
}

/// How the decoders evaluate group convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformMode {
    /// Double-sum convolution, O(q^2).
    #[default]
    Direct,
    /// Group transform, element-wise product, inverse transform.
    Fast,
}

/// Convolution, permutation and transform machinery for one field.
#[derive(Debug, Clone)]
pub struct GroupAlgebra {
    field: Field,
    /// perms[h][j] = j*h; row 0 unused.
    perms: Vec<Vec<u8>>,
    add: Vec<u8>,
    /// Size-p DFT matrix for odd p, row-major.
    dft: Vec<Complex64>,
}

impl GroupAlgebra {
    pub fn new(field: &Field) -> GroupAlgebra {
        let q = field.q();
        let mut perms = vec![Vec::new(); q];
        for h in field.nonzero_elements() {
            perms[h.index()] = field.mul_permutation(h).unwrap();
        }
        let add = (0..q * q)
            .map(|i| field.add(Elem((i / q) as u8), Elem((i % q) as u8)).0)
            .collect();
        let p = field.p() as usize;
        let dft = if p == 2 {
            Vec::new()
        } else {
            (0..p * p)
                .map(|i| {
                    Complex64::from_polar(
                        1.0,
                        -2.0 * PI * ((i / p) * (i % p) % p) as f64 / p as f64,
                    )
                })
                .collect()
        };
        GroupAlgebra {
            field: field.clone(),
            perms,
            add,
            dft,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> usize {
        self.field.q()
    }

    fn check(&self, p: &Pmf) -> Result<(), PmfError> {
        if p.len() != self.q() {
            Err(PmfError::LengthMismatch {
                got: p.len(),
                want: self.q(),
            })
        } else {
            Ok(())
        }
    }

    /// (P * Q)(w) = sum_c P(c) Q(w - c).
    pub fn convolve(&self, p: &Pmf, r: &Pmf) -> Result<Pmf, PmfError> {
        self.check(p)?;
        self.check(r)?;
        Ok(self.convolve_unchecked(p, r))
    }

    pub(crate) fn convolve_unchecked(&self, p: &Pmf, r: &Pmf) -> Pmf {
        let q = self.q();
        let mut out = vec![0.0; q];
        for (x, &px) in p.mass.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            let row = &self.add[x * q..(x + 1) * q];
            for (y, &ry) in r.mass.iter().enumerate() {
                out[row[y] as usize] += px * ry;
            }
        }
        Pmf { mass: out }
    }

    /// Pmf of h*X. Multiplying by zero is rejected.
    pub fn permute(&self, p: &Pmf, h: Elem) -> Result<Pmf, PmfError> {
        self.check(p)?;
        if h.is_zero() {
            return Err(FieldError::ZeroScalar.into());
        }
        Ok(self.permute_unchecked(p, h))
    }

    pub(crate) fn permute_unchecked(&self, p: &Pmf, h: Elem) -> Pmf {
        if h == Elem::ONE {
            return p.clone();
        }
        let perm = &self.perms[h.index()];
        let mut out = vec![0.0; self.q()];
        for (j, &m) in p.mass.iter().enumerate() {
            out[perm[j] as usize] = m;
        }
        Pmf { mass: out }
    }

    pub fn transform(&self, p: &Pmf) -> Spectrum {
        let q = self.q();
        let pr = self.field.p() as usize;
        if pr == 2 {
            let mut v = p.mass.clone();
            fwht(&mut v);
            Spectrum::Real(v)
        } else {
            let mut v: Vec<Complex64> = p.mass.iter().map(|&m| Complex64::new(m, 0.0)).collect();
            self.tensor_dft(&mut v, false);
            debug_assert_eq!(v.len(), q);
            Spectrum::Complex(v)
        }
    }

    /// Inverse transform; tiny negative round-off is clipped to zero.
    pub fn inverse_transform(&self, s: &Spectrum) -> Pmf {
        let q = self.q() as f64;
        let mass = match s {
            Spectrum::Real(v) => {
                let mut v = v.clone();
                fwht(&mut v);
                v.into_iter().map(|x| (x / q).max(0.0)).collect()
            }
            Spectrum::Complex(v) => {
                let mut v = v.clone();
                self.tensor_dft(&mut v, true);
                v.into_iter().map(|x| (x.re / q).max(0.0)).collect()
            }
        };
        Pmf { mass }
    }

    fn tensor_dft(&self, v: &mut [Complex64], inverse: bool) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.field.p() as usize];
        self.tensor_dft_with(v, inverse, &mut buf);
    }

    fn tensor_dft_with(&self, v: &mut [Complex64], inverse: bool, buf: &mut [Complex64]) {
        let p = self.field.p() as usize;
        let q = v.len();
        let mut stride = 1;
        while stride < q {
            for base in 0..q {
                if (base / stride) % p != 0 {
                    continue;
                }
                for (k, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..p {
                        let w = self.dft[k * p + j];
                        acc += v[base + j * stride] * if inverse { w.conj() } else { w };
                    }
                    *slot = acc;
                }
                for (k, &val) in buf.iter().enumerate() {
                    v[base + k * stride] = val;
                }
            }
            stride *= p;
        }
    }

    /// Convolution of all inputs, normalized; an empty input gives the point mass at 0.
    pub fn convolve_all<'a, I>(&self, pmfs: I, mode: TransformMode) -> Result<Pmf, PmfError>
    where
        I: IntoIterator<Item = &'a Pmf>,
    {
        let mut conv = Convolver::new(self, mode);
        for p in pmfs {
            self.check(p)?;
            conv.push(p.mass(), Elem::ONE);
        }
        let mut out = vec![0.0; self.q()];
        conv.finish(&mut out)?;
        Ok(Pmf { mass: out })
    }
}

/// Accumulates the convolution of scaled variables h_1 X_1 + h_2 X_2 + ...
/// without allocating per term. Reusable after [`finish`](Convolver::finish).
#[derive(Debug, Clone)]
pub struct Convolver<'a> {
    alg: &'a GroupAlgebra,
    mode: TransformMode,
    terms: usize,
    /// Running result (direct) or the first term kept untransformed (fast).
    acc: Vec<f64>,
    tmp: Vec<f64>,
    spec: Vec<f64>,
    spec_c: Vec<Complex64>,
    tmp_c: Vec<Complex64>,
    dft_buf: Vec<Complex64>,
}

impl<'a> Convolver<'a> {
    pub fn new(alg: &'a GroupAlgebra, mode: TransformMode) -> Convolver<'a> {
        let q = alg.q();
        let zero = Complex64::new(0.0, 0.0);
        let odd = alg.field.p() != 2;
        Convolver {
            alg,
            mode,
            terms: 0,
            acc: vec![0.0; q],
            tmp: vec![0.0; q],
            spec: vec![0.0; q],
            spec_c: if odd { vec![zero; q] } else { Vec::new() },
            tmp_c: if odd { vec![zero; q] } else { Vec::new() },
            dft_buf: vec![zero; alg.field.p() as usize],
        }
    }

    pub fn mode(&self) -> TransformMode {
        self.mode
    }

    /// Writes the masses of h*X into `out`; h = 0 gives the point mass at 0.
    fn scatter(&self, p: &[f64], h: Elem, out: &mut [f64]) {
        if h == Elem::ONE {
            out.copy_from_slice(p);
        } else if h.is_zero() {
            out.iter_mut().for_each(|x| *x = 0.0);
            out[0] = 1.0;
        } else {
            let perm = &self.alg.perms[h.index()];
            for (j, &m) in p.iter().enumerate() {
                out[perm[j] as usize] = m;
            }
        }
    }

    /// Transforms `acc` (the first term) or `tmp` (a scattered later term) and
    /// starts or multiplies into the spectral product.
    fn absorb_spectrum(&mut self, from_acc: bool) {
        let init = from_acc;
        if self.alg.field.p() == 2 {
            if from_acc {
                self.tmp.copy_from_slice(&self.acc);
            }
            fwht(&mut self.tmp);
            if init {
                self.spec.copy_from_slice(&self.tmp);
            } else {
                self.spec
                    .iter_mut()
                    .zip(&self.tmp)
                    .for_each(|(a, b)| *a *= b);
            }
        } else {
            let src = if from_acc { &self.acc } else { &self.tmp };
            for (c, &m) in self.tmp_c.iter_mut().zip(src) {
                *c = Complex64::new(m, 0.0);
            }
            self.alg
                .tensor_dft_with(&mut self.tmp_c, false, &mut self.dft_buf);
            if init {
                self.spec_c.copy_from_slice(&self.tmp_c);
            } else {
                self.spec_c
                    .iter_mut()
                    .zip(&self.tmp_c)
                    .for_each(|(a, b)| *a *= b);
            }
        }
    }

    /// Adds the term h*X where `p` is the pmf of X. h = 0 contributes nothing.
    pub fn push(&mut self, p: &[f64], h: Elem) {
        if h.is_zero() {
            return;
        }
        self.terms += 1;
        if self.terms == 1 {
            let mut acc = std::mem::take(&mut self.acc);
            self.scatter(p, h, &mut acc);
            self.acc = acc;
            return;
        }
        match self.mode {
            TransformMode::Direct => {
                let q = self.alg.q();
                let perm: Option<&[u8]> =
                    (h != Elem::ONE).then(|| self.alg.perms[h.index()].as_slice());
                self.tmp.iter_mut().for_each(|x| *x = 0.0);
                for (x, &ax) in self.acc.iter().enumerate() {
                    if ax == 0.0 {
                        continue;
                    }
                    let row = &self.alg.add[x * q..(x + 1) * q];
                    match perm {
                        None => {
                            for (y, &py) in p.iter().enumerate() {
                                self.tmp[row[y] as usize] += ax * py;
                            }
                        }
                        Some(perm) => {
                            for (y, &py) in p.iter().enumerate() {
                                self.tmp[row[perm[y] as usize] as usize] += ax * py;
                            }
                        }
                    }
                }
                std::mem::swap(&mut self.acc, &mut self.tmp);
            }
            TransformMode::Fast => {
                if self.terms == 2 {
                    self.absorb_spectrum(true);
                }
                let mut tmp = std::mem::take(&mut self.tmp);
                self.scatter(p, h, &mut tmp);
                self.tmp = tmp;
                self.absorb_spectrum(false);
            }
        }
    }

    /// Writes the normalized result into `out` and resets the accumulator.
    pub fn finish(&mut self, out: &mut [f64]) -> Result<(), PmfError> {
        let q = self.alg.q();
        let terms = std::mem::replace(&mut self.terms, 0);
        if terms == 0 {
            out.iter_mut().for_each(|x| *x = 0.0);
            out[0] = 1.0;
            return Ok(());
        }
        if terms == 1 || self.mode == TransformMode::Direct {
            out.copy_from_slice(&self.acc);
        } else if self.alg.field.p() == 2 {
            out.copy_from_slice(&self.spec);
            fwht(out);
            let inv = 1.0 / q as f64;
            out.iter_mut().for_each(|x| *x = (*x * inv).max(0.0));
        } else {
            self.alg
                .tensor_dft_with(&mut self.spec_c, true, &mut self.dft_buf);
            let inv = 1.0 / q as f64;
            for (o, c) in out.iter_mut().zip(&self.spec_c) {
                *o = (c.re * inv).max(0.0);
            }
        }
        let s: f64 = out.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(PmfError::AllZeroMass);
        }
        let inv = 1.0 / s;
        out.iter_mut().for_each(|x| *x *= inv);
        Ok(())
    }
}

/// In-place unnormalized Walsh-Hadamard transform; length must be a power of two.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (v[j], v[j + h]);
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(q: u64) -> GroupAlgebra {
        GroupAlgebra::new(&Field::with_size(q).unwrap())
    }

    fn pmf(v: &[f64]) -> Pmf {
        Pmf::from_mass(v.to_vec()).unwrap()
    }

    #[test]
    fn convolution_examples() {
        let g = alg(4);
        let d = g
            .convolve(&Pmf::delta(4, Elem(2)), &Pmf::delta(4, Elem(3)))
            .unwrap();
        assert_eq!(d, Pmf::delta(4, Elem(1)));
        let r = pmf(&[0.1, 0.2, 0.3, 0.4]);
        let u = g.convolve(&Pmf::uniform(4), &r).unwrap();
        assert!(u.max_abs_diff(&Pmf::uniform(4)) < 1e-15);
        // (.5,.5,0,0) * (.5,0,.5,0): double-sum oracle gives mass .25 at 0^0,0^2,1^0,1^2
        let c = g
            .convolve(&pmf(&[0.5, 0.5, 0.0, 0.0]), &pmf(&[0.5, 0.0, 0.5, 0.0]))
            .unwrap();
        assert!(c.max_abs_diff(&Pmf::uniform(4)) < 1e-15);
    }

    #[test]
    fn permutation_examples() {
        let g = alg(4);
        let p = pmf(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(g.permute(&p, Elem(2)).unwrap(), pmf(&[0.1, 0.4, 0.2, 0.3]));
        assert_eq!(g.permute(&p, Elem(1)).unwrap(), p);
        let back = g
            .permute(&g.permute(&p, Elem(3)).unwrap(), Elem(2))
            .unwrap();
        assert_eq!(back, p);
        assert!(matches!(
            g.permute(&p, Elem(0)),
            Err(PmfError::Field(FieldError::ZeroScalar))
        ));
    }

    #[test]
    fn transform_examples() {
        let g = alg(4);
        let s = g.transform(&Pmf::uniform(4));
        for i in 0..4 {
            let want = if i == 0 { 1.0 } else { 0.0 };
            assert!((s.coeff(i).re - want).abs() < 1e-15);
        }
        let s = g.transform(&Pmf::delta(4, Elem(0)));
        assert_eq!(s, Spectrum::Real(vec![1.0; 4]));
    }

    #[test]
    fn normalize_cases() {
        let mut p = pmf(&[2.0, 1.0, 1.0, 0.0]);
        p.normalize().unwrap();
        assert_eq!(p, pmf(&[0.5, 0.25, 0.25, 0.0]));
        let before = p.clone();
        p.normalize().unwrap();
        assert_eq!(p, before);
        assert_eq!(
            pmf(&[0.0; 4]).clone().normalize(),
            Err(PmfError::AllZeroMass)
        );
        assert_eq!(Pmf::from_mass(vec![0.5, -0.1]), Err(PmfError::InvalidMass));
    }

    #[test]
    fn length_checked() {
        let g = alg(4);
        assert_eq!(
            g.convolve(&Pmf::uniform(3), &Pmf::uniform(4)),
            Err(PmfError::LengthMismatch { got: 3, want: 4 })
        );
    }

    #[test]
    fn convolve_all_modes_agree() {
        for q in [4, 5, 8, 9, 16, 25] {
            let g = alg(q);
            let ps: Vec<Pmf> = (0..4)
                .map(|k| {
                    Pmf::normalized((0..q).map(|i| ((i * 7 + k * 3) % 11 + 1) as f64).collect())
                        .unwrap()
                })
                .collect();
            let a = g.convolve_all(&ps, TransformMode::Direct).unwrap();
            let b = g.convolve_all(&ps, TransformMode::Fast).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12, "q={q}");
        }
        let g = alg(4);
        assert_eq!(
            g.convolve_all([], TransformMode::Fast).unwrap(),
            Pmf::delta(4, Elem(0))
        );
    }
}
