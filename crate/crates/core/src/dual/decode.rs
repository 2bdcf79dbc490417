use crate::galois::Elem;
use crate::pmf::{Convolver, GroupAlgebra, Pmf, PmfError, TransformMode};

use super::{DualError, DualSpec};

/// Register pmfs at every time step: `get(k, j)` is the message on w_{k-j+1}
/// after step k, for k in 0..=T and j in 1..=N. Stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterBank {
    memory: usize,
    q: usize,
    steps: usize,
    mass: Vec<f64>,
}

impl RegisterBank {
    fn new(memory: usize, steps: usize, q: usize) -> RegisterBank {
        let mut b = RegisterBank {
            memory,
            q,
            steps: 0,
            mass: Vec::new(),
        };
        b.reset(memory, steps, q);
        b
    }

    /// Every register at every step back to a point mass at zero.
    fn reset(&mut self, memory: usize, steps: usize, q: usize) {
        (self.memory, self.q, self.steps) = (memory, q, steps + 1);
        self.mass.clear();
        self.mass.resize(memory * (steps + 1) * q, 0.0);
        self.mass.chunks_mut(q).for_each(|c| c[0] = 1.0);
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Number of stored time steps, T + 1.
    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    /// Masses of register j (1-based) after step k.
    pub fn get(&self, k: usize, j: usize) -> &[f64] {
        assert!(j >= 1 && j <= self.memory);
        let at = (k * self.memory + j - 1) * self.q;
        &self.mass[at..at + self.q]
    }

    pub fn pmf(&self, k: usize, j: usize) -> Pmf {
        Pmf::from_raw(self.get(k, j).to_vec())
    }

    /// All N registers after step k, register 1 first.
    fn step_mut(&mut self, k: usize) -> &mut [f64] {
        let w = self.memory * self.q;
        &mut self.mass[k * w..(k + 1) * w]
    }
}

/// Reusable buffers for [`DualDecoder::combine_into`].
#[derive(Debug, Clone)]
pub struct DualScratch {
    fwd: RegisterBank,
    bwd: RegisterBank,
    reg: Vec<f64>,
}

impl Default for DualScratch {
    fn default() -> Self {
        DualScratch {
            fwd: RegisterBank::new(0, 0, 1),
            bwd: RegisterBank::new(0, 0, 1),
            reg: Vec::new(),
        }
    }
}

/// Decoders built from the dual encoder of one code. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct DualDecoder {
    spec: DualSpec,
    alg: GroupAlgebra,
    mode: TransformMode,
    neg_one: Elem,
    feedback_inv: Option<Elem>,
}

/// Registers as N consecutive length-q blocks, register 1 first.
fn zero_registers(n: usize, q: usize) -> Vec<f64> {
    let mut r = vec![0.0; n * q];
    r.chunks_mut(q).for_each(|c| c[0] = 1.0);
    r
}

fn normalize(v: &mut [f64]) -> Result<(), PmfError> {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(PmfError::AllZeroMass);
    }
    let inv = 1.0 / s;
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(())
}

impl DualDecoder {
    pub fn new(spec: &DualSpec) -> DualDecoder {
        let f = spec.field();
        DualDecoder {
            alg: GroupAlgebra::new(f),
            mode: TransformMode::Direct,
            neg_one: f.neg(Elem::ONE),
            feedback_inv: f.inv(spec.feedback()),
            spec: spec.clone(),
        }
    }

    pub fn spec(&self) -> &DualSpec {
        &self.spec
    }

    pub fn transform_mode(&self) -> TransformMode {
        self.mode
    }

    pub fn set_transform_mode(&mut self, mode: TransformMode) {
        self.mode = mode;
    }

    pub fn with_transform_mode(mut self, mode: TransformMode) -> DualDecoder {
        self.mode = mode;
        self
    }

    fn check(&self, code_pmfs: &[Pmf]) -> Result<(), DualError> {
        let q = self.alg.q();
        for p in code_pmfs {
            if p.len() != q {
                return Err(PmfError::LengthMismatch {
                    got: p.len(),
                    want: q,
                }
                .into());
            }
        }
        Ok(())
    }

    /// Pushes sum_{i=1}^{N-1} h_i S_i for registers laid out as in [`zero_registers`].
    fn push_middle(&self, conv: &mut Convolver<'_>, regs: &[f64]) {
        let q = self.alg.q();
        let taps = self.spec.taps();
        for i in 1..self.spec.memory() {
            conv.push(&regs[(i - 1) * q..i * q], taps[i]);
        }
    }

    fn finish(conv: &mut Convolver<'_>, q: usize) -> Result<Pmf, DualError> {
        let mut o = vec![0.0; q];
        conv.finish(&mut o)?;
        Ok(Pmf::from_raw(o))
    }

    /// Forward pass; fills `bank` if given and returns outputs if `outputs`.
    fn forward_pass(
        &self,
        code_pmfs: &[Pmf],
        mut bank: Option<&mut RegisterBank>,
        outputs: bool,
    ) -> Result<Vec<Pmf>, DualError> {
        self.check(code_pmfs)?;
        let n = self.spec.memory();
        let q = self.alg.q();
        let h0 = self.spec.taps()[0];
        let e = self.spec.last_register_tap();
        let phi = self.spec.feedback();

        let mut conv = Convolver::new(&self.alg, self.mode);
        let mut regs = zero_registers(n, q);
        let mut w = vec![0.0; q];
        let mut out = Vec::with_capacity(if outputs { code_pmfs.len() } else { 0 });
        for (k, gamma) in code_pmfs.iter().enumerate() {
            if outputs {
                self.push_middle(&mut conv, &regs);
                conv.push(gamma.mass(), h0);
                if n > 0 {
                    conv.push(&regs[(n - 1) * q..], e);
                }
                out.push(Self::finish(&mut conv, q)?);
            }
            if n > 0 {
                conv.push(gamma.mass(), Elem::ONE);
                conv.push(&regs[(n - 1) * q..], phi);
                conv.finish(&mut w)?;
                regs.copy_within(0..(n - 1) * q, q);
                regs[..q].copy_from_slice(&w);
                if let Some(b) = bank.as_deref_mut() {
                    b.step_mut(k + 1).copy_from_slice(&regs);
                }
            }
        }
        Ok(out)
    }

    /// Backward pass in natural time and register order.
    fn backward_pass(
        &self,
        code_pmfs: &[Pmf],
        mut bank: Option<&mut RegisterBank>,
        outputs: bool,
    ) -> Result<Vec<Pmf>, DualError> {
        self.check(code_pmfs)?;
        let n = self.spec.memory();
        let q = self.alg.q();
        let f = self.spec.field();
        let taps = self.spec.taps();
        let h0 = taps[0];
        let hn = taps[n];
        let t = code_pmfs.len();

        let mut conv = Convolver::new(&self.alg, self.mode);
        // regs holds B[k]; each step turns it into B[k-1]
        let mut regs = zero_registers(n, q);
        let mut next_w = vec![0.0; q];
        let mut diff = vec![0.0; q];
        let mut out = vec![Pmf::uniform(q); if outputs { t } else { 0 }];
        for k in (1..=t).rev() {
            let gamma = code_pmfs[k - 1].mass();
            if n == 0 {
                if outputs {
                    conv.push(gamma, h0);
                    out[k - 1] = Self::finish(&mut conv, q)?;
                }
                continue;
            }
            next_w.copy_from_slice(&regs[..q]);
            regs.copy_within(q.., 0);
            let oldest = &mut regs[(n - 1) * q..];
            match self.feedback_inv {
                // w_{k-N} = (w_k - c_k) / feedback
                Some(phi_inv) => {
                    conv.push(&next_w, Elem::ONE);
                    conv.push(gamma, self.neg_one);
                    conv.finish(&mut diff)?;
                    let perm = f.mul_permutation(phi_inv).expect("nonzero");
                    for (j, &m) in diff.iter().enumerate() {
                        oldest[perm[j] as usize] = m;
                    }
                }
                None => oldest.iter_mut().for_each(|x| *x = 1.0 / q as f64),
            }
            if outputs {
                self.push_middle(&mut conv, &regs);
                match self.feedback_inv {
                    // h_0 c_k + e w_{k-N} = -(h_N/feedback) c_k + (h_0 + h_N/feedback) w_k
                    Some(phi_inv) => {
                        let r = f.mul(hn, phi_inv);
                        conv.push(gamma, f.neg(r));
                        conv.push(&next_w, f.add(h0, r));
                    }
                    // w_k = c_k, and w_{k-N} carries no information from the future
                    None => {
                        for ((d, &g), &b) in diff.iter_mut().zip(gamma).zip(&next_w) {
                            *d = g * b;
                        }
                        normalize(&mut diff)?;
                        conv.push(&diff, h0);
                        if !hn.is_zero() {
                            diff.iter_mut().for_each(|x| *x = 1.0 / q as f64);
                            conv.push(&diff, hn);
                        }
                    }
                }
                out[k - 1] = Self::finish(&mut conv, q)?;
            }
            if let Some(b) = bank.as_deref_mut() {
                b.step_mut(k - 1).copy_from_slice(&regs);
            }
        }
        Ok(out)
    }

    /// Forward pass. Output k-1 is the pmf of b_k given c_1..c_k.
    pub fn forward_decode(
        &self,
        code_pmfs: &[Pmf],
        keep_history: bool,
    ) -> Result<(Vec<Pmf>, Option<RegisterBank>), DualError> {
        let mut bank = keep_history
            .then(|| RegisterBank::new(self.spec.memory(), code_pmfs.len(), self.alg.q()));
        let out = self.forward_pass(code_pmfs, bank.as_mut(), true)?;
        Ok((out, bank))
    }

    /// Backward pass in natural time and register order. Output k-1 is the pmf
    /// of b_k given c_k..c_T and the zero final state.
    pub fn backward_decode(
        &self,
        code_pmfs: &[Pmf],
        keep_history: bool,
    ) -> Result<(Vec<Pmf>, Option<RegisterBank>), DualError> {
        let mut bank = keep_history
            .then(|| RegisterBank::new(self.spec.memory(), code_pmfs.len(), self.alg.q()));
        let out = self.backward_pass(code_pmfs, bank.as_mut(), true)?;
        Ok((out, bank))
    }

    fn banks_into(&self, code_pmfs: &[Pmf], scratch: &mut DualScratch) -> Result<(), DualError> {
        let (n, t, q) = (self.spec.memory(), code_pmfs.len(), self.alg.q());
        scratch.fwd.reset(n, t, q);
        scratch.bwd.reset(n, t, q);
        self.forward_pass(code_pmfs, Some(&mut scratch.fwd), false)?;
        self.backward_pass(code_pmfs, Some(&mut scratch.bwd), false)?;
        Ok(())
    }

    /// Bidirectional decoding from register pmfs combined across both passes.
    pub fn combine_decode(&self, code_pmfs: &[Pmf]) -> Result<Vec<Pmf>, DualError> {
        let mut flat = Vec::new();
        self.combine_into(code_pmfs, &mut DualScratch::default(), &mut flat)?;
        Ok(flat
            .chunks(self.alg.q())
            .map(|m| Pmf::from_raw(m.to_vec()))
            .collect())
    }

    /// [`combine_decode`](Self::combine_decode) writing T x q posteriors row-major
    /// into `out`, reusing the buffers in `scratch`.
    pub fn combine_into(
        &self,
        code_pmfs: &[Pmf],
        scratch: &mut DualScratch,
        out: &mut Vec<f64>,
    ) -> Result<(), DualError> {
        self.check(code_pmfs)?;
        let n = self.spec.memory();
        let q = self.alg.q();
        let h0 = self.spec.taps()[0];
        let mut conv = Convolver::new(&self.alg, self.mode);
        out.clear();
        out.resize(code_pmfs.len() * q, 0.0);
        if n == 0 {
            for (g, o) in code_pmfs.iter().zip(out.chunks_mut(q)) {
                conv.push(g.mass(), h0);
                conv.finish(o)?;
            }
            return Ok(());
        }
        self.banks_into(code_pmfs, scratch)?;
        let (fwd, bwd) = (&scratch.fwd, &scratch.bwd);
        let taps = self.spec.taps();
        let reg = &mut scratch.reg;
        reg.resize(q, 0.0);
        for (k, o) in (1..=code_pmfs.len()).zip(out.chunks_mut(q)) {
            for i in 1..n {
                if taps[i].is_zero() {
                    continue;
                }
                for ((r, a), b) in reg.iter_mut().zip(fwd.get(k - 1, i)).zip(bwd.get(k - 1, i)) {
                    *r = a * b;
                }
                normalize(reg)?;
                conv.push(reg, taps[i]);
            }
            self.combined_pair(
                code_pmfs[k - 1].mass(),
                fwd.get(k - 1, n),
                bwd.get(k, 1),
                reg,
            )?;
            conv.push(reg, Elem::ONE);
            conv.finish(o)?;
        }
        Ok(())
    }

    /// As [`combine_decode`](Self::combine_decode), also returning the combined register bank.
    pub fn combine_with_banks(
        &self,
        code_pmfs: &[Pmf],
    ) -> Result<(Vec<Pmf>, RegisterBank), DualError> {
        let out = self.combine_decode(code_pmfs)?;
        let (n, t, q) = (self.spec.memory(), code_pmfs.len(), self.alg.q());
        let mut comb = RegisterBank::new(n, t, q);
        if n > 0 {
            let mut scratch = DualScratch::default();
            self.banks_into(code_pmfs, &mut scratch)?;
            let (fwd, bwd) = (&scratch.fwd, &scratch.bwd);
            for ((c, a), b) in comb
                .mass
                .chunks_mut(q)
                .zip(fwd.mass.chunks(q))
                .zip(bwd.mass.chunks(q))
            {
                for ((x, y), z) in c.iter_mut().zip(a).zip(b) {
                    *x = y * z;
                }
                normalize(c)?;
            }
        }
        Ok((out, comb))
    }

    /// Joint term h_0 c_k + e w_{k-N}: c_k and w_{k-N} meet the future only through
    /// w_k = c_k + feedback w_{k-N}, so it is summed directly.
    fn combined_pair(
        &self,
        gamma: &[f64],
        oldest: &[f64],
        next_w: &[f64],
        out: &mut [f64],
    ) -> Result<(), DualError> {
        let f = self.spec.field();
        let h0 = self.spec.taps()[0];
        let e = self.spec.last_register_tap();
        let phi = self.spec.feedback();
        out.iter_mut().for_each(|x| *x = 0.0);
        for u in f.elements() {
            let au = oldest[u.index()];
            if au == 0.0 {
                continue;
            }
            let fu = f.mul(phi, u);
            let eu = f.mul(e, u);
            for c in f.elements() {
                let m = au * gamma[c.index()] * next_w[f.add(c, fu).index()];
                out[f.add(f.mul(h0, c), eu).index()] += m;
            }
        }
        Ok(normalize(out)?)
    }

    /// Element-wise product of the forward and backward outputs.
    pub fn fb_output_product(&self, code_pmfs: &[Pmf]) -> Result<Vec<Pmf>, DualError> {
        let fwd = self.forward_pass(code_pmfs, None, true)?;
        let bwd = self.backward_pass(code_pmfs, None, true)?;
        fwd.iter()
            .zip(&bwd)
            .map(|(a, b)| {
                let mut p = a.hadamard(b);
                p.normalize()?;
                Ok(p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcode::{encode_frame, CodeSpec};

    fn decoder(s: &str) -> DualDecoder {
        let code: CodeSpec = s.parse().unwrap();
        DualDecoder::new(&DualSpec::from_code(&code).unwrap())
    }

    fn deltas(q: usize, syms: &[Elem]) -> Vec<Pmf> {
        syms.iter().map(|&s| Pmf::delta(q, s)).collect()
    }

    #[test]
    fn noiseless_frame_decodes_to_info() {
        let d = decoder("gf4:(1+x)");
        let info = [Elem(1), Elem(2), Elem(3)];
        let frame = encode_frame(d.spec(), &info).unwrap();
        let pmfs = deltas(4, &frame.code);
        let (fwd, _) = d.forward_decode(&pmfs, false).unwrap();
        let (bwd, _) = d.backward_decode(&pmfs, false).unwrap();
        let comb = d.combine_decode(&pmfs).unwrap();
        let prod = d.fb_output_product(&pmfs).unwrap();
        let full = frame.full_info();
        for out in [fwd, bwd, comb, prod] {
            assert_eq!(out.len(), full.len());
            for (p, &b) in out.iter().zip(&full) {
                assert!(p.max_abs_diff(&Pmf::delta(4, b)) < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_in_uniform_out() {
        let d = decoder("gf4:(1+3x+2x^2)/(1+x+2x^2)");
        let pmfs = vec![Pmf::uniform(4); 10];
        for p in d.forward_decode(&pmfs, false).unwrap().0 {
            assert!(p.max_abs_diff(&Pmf::uniform(4)) < 1e-12);
        }
        for p in d.combine_decode(&pmfs).unwrap() {
            assert!(p.max_abs_diff(&Pmf::uniform(4)) < 1e-12);
        }
    }

    #[test]
    fn banks_start_and_end_at_zero() {
        let d = decoder("gf4:(1+x+2x^2)");
        let info: Vec<Elem> = (0..12).map(|k| Elem((k * 5 % 4) as u8)).collect();
        let frame = encode_frame(d.spec(), &info).unwrap();
        let pmfs = deltas(4, &frame.code);
        let (_, bank) = d.combine_with_banks(&pmfs).unwrap();
        let t = pmfs.len();
        for j in 1..=d.spec().memory() {
            assert_eq!(bank.pmf(0, j), Pmf::delta(4, Elem::ZERO));
            assert!(bank.pmf(t, j).total_variation(&Pmf::delta(4, Elem::ZERO)) < 1e-9);
        }
    }

    #[test]
    fn rejects_wrong_pmf_length() {
        let d = decoder("gf4:(1+x)");
        let err = d.forward_decode(&[Pmf::uniform(3)], false).unwrap_err();
        assert_eq!(
            err,
            DualError::Pmf(PmfError::LengthMismatch { got: 3, want: 4 })
        );
    }
}
