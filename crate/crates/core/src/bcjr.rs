//! Reference BCJR symbol-APP decoder in the probability domain.
//!
//! Metrics are normalized per step. The frame is assumed to start in the zero
//! state and, for [`posteriors`], to end there as well.

use thiserror::Error;

use crate::convcode::{CodeError, Trellis};
use crate::dual::DualSpec;
use crate::galois::Elem;
use crate::pmf::{Pmf, PmfError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BcjrError {
    #[error("pmf length {got} does not match field size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("no path consistent with the input ends in the zero state")]
    NotTerminated,
    #[error("forward metrics vanished at step {0}")]
    Underflow(usize),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Trellis whose zero-state termination matches frames built by
/// [`encode_frame`](crate::convcode::encode_frame).
pub fn reference_trellis(dual: &DualSpec) -> Result<Trellis, BcjrError> {
    Ok(Trellis::new(&dual.decoding_code()?)?)
}

/// Normalized forward and backward state metrics, each (T+1) x S row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisMetrics {
    pub num_states: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl TrellisMetrics {
    pub fn alpha_at(&self, k: usize) -> &[f64] {
        &self.alpha[k * self.num_states..(k + 1) * self.num_states]
    }

    pub fn beta_at(&self, k: usize) -> &[f64] {
        &self.beta[k * self.num_states..(k + 1) * self.num_states]
    }
}

fn check(trellis: &Trellis, pmfs: &[Pmf]) -> Result<(), BcjrError> {
    let q = trellis.q();
    match pmfs.iter().find(|p| p.len() != q) {
        Some(p) => Err(BcjrError::LengthMismatch {
            got: p.len(),
            want: q,
        }),
        None => Ok(()),
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return false;
    }
    let inv = 1.0 / s;
    v.iter_mut().for_each(|x| *x *= inv);
    true
}

/// alpha_k(u) = sum_{u'} alpha_{k-1}(u') gamma_k(u', u), alpha_0 = delta at zero.
pub fn forward(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<f64>, BcjrError> {
    check(trellis, pmfs)?;
    let s = trellis.num_states();
    let q = trellis.q();
    let mut alpha = vec![0.0; (pmfs.len() + 1) * s];
    alpha[0] = 1.0;
    for (k, p) in pmfs.iter().enumerate() {
        let (prev, cur) = alpha.split_at_mut((k + 1) * s);
        let prev = &prev[k * s..];
        let cur = &mut cur[..s];
        let g = p.mass();
        for (u, &a) in prev.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for b in 0..q {
                cur[trellis.next(u, b)] += a * g[trellis.output(u, b)];
            }
        }
        if !normalize(cur) {
            return Err(BcjrError::Underflow(k + 1));
        }
    }
    Ok(alpha)
}

/// beta_{k-1}(u') = sum_u gamma_k(u', u) beta_k(u), beta_T = delta at zero.
pub fn backward(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<f64>, BcjrError> {
    check(trellis, pmfs)?;
    let s = trellis.num_states();
    let q = trellis.q();
    let t = pmfs.len();
    let mut beta = vec![0.0; (t + 1) * s];
    beta[t * s] = 1.0;
    for k in (1..=t).rev() {
        let (head, tail) = beta.split_at_mut(k * s);
        let next = &tail[..s];
        let cur = &mut head[(k - 1) * s..];
        let g = pmfs[k - 1].mass();
        for (u, slot) in cur.iter_mut().enumerate() {
            let mut acc = 0.0;
            for b in 0..q {
                acc += g[trellis.output(u, b)] * next[trellis.next(u, b)];
            }
            *slot = acc;
        }
        if !normalize(cur) {
            return Err(BcjrError::NotTerminated);
        }
    }
    Ok(beta)
}

pub fn metrics(trellis: &Trellis, pmfs: &[Pmf]) -> Result<TrellisMetrics, BcjrError> {
    Ok(TrellisMetrics {
        num_states: trellis.num_states(),
        alpha: forward(trellis, pmfs)?,
        beta: backward(trellis, pmfs)?,
    })
}

/// Sums alpha(u') gamma(u',u) beta(u) over edges grouped by input symbol.
fn marginals(
    trellis: &Trellis,
    pmfs: &[Pmf],
    alpha: Option<&[f64]>,
    beta: Option<&[f64]>,
) -> Result<Vec<Pmf>, BcjrError> {
    let s = trellis.num_states();
    let q = trellis.q();
    let mut out = Vec::with_capacity(pmfs.len());
    for (k, p) in pmfs.iter().enumerate() {
        let g = p.mass();
        let mut acc = vec![0.0; q];
        for u in 0..s {
            let a = alpha.map_or(1.0, |al| al[k * s + u]);
            if a == 0.0 {
                continue;
            }
            for (b, slot) in acc.iter_mut().enumerate() {
                let bt = beta.map_or(1.0, |be| be[(k + 1) * s + trellis.next(u, b)]);
                *slot += a * g[trellis.output(u, b)] * bt;
            }
        }
        out.push(Pmf::normalized(acc).map_err(|e| match e {
            PmfError::AllZeroMass => BcjrError::NotTerminated,
            _ => BcjrError::Underflow(k + 1),
        })?);
    }
    Ok(out)
}

/// Full posteriors P(b_k | all observations, zero start and end).
pub fn posteriors(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<Pmf>, BcjrError> {
    let m = metrics(trellis, pmfs)?;
    marginals(trellis, pmfs, Some(&m.alpha), Some(&m.beta))
}

/// Forward-only APP: alpha_{k-1} gamma_k, no beta.
pub fn forward_app(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<Pmf>, BcjrError> {
    let alpha = forward(trellis, pmfs)?;
    marginals(trellis, pmfs, Some(&alpha), None)
}

/// Backward-only APP: gamma_k beta_k with a flat state prior at k-1.
pub fn backward_app(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<Pmf>, BcjrError> {
    let beta = backward(trellis, pmfs)?;
    marginals(trellis, pmfs, None, Some(&beta))
}

/// BCJR over a state-pair kernel that visits all S^2 (u', u) pairs per step,
/// the cost model of a general trellis without adjacency lists. Tables and
/// metric buffers are kept between frames.
#[derive(Debug, Clone)]
pub struct DenseKernel {
    s: usize,
    q: usize,
    /// Input and output symbol of u' -> u; both are q when there is no transition,
    /// which indexes a zero metric and a discarded accumulator slot.
    edge_in: Vec<u8>,
    edge_out: Vec<u8>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
    acc: Vec<f64>,
}

impl DenseKernel {
    pub fn new(trellis: &Trellis) -> DenseKernel {
        let s = trellis.num_states();
        let q = trellis.q();
        let mut edge_in = vec![q as u8; s * s];
        let mut edge_out = vec![q as u8; s * s];
        for u in 0..s {
            for b in 0..q {
                let i = u * s + trellis.next(u, b);
                edge_in[i] = b as u8;
                edge_out[i] = trellis.output(u, b) as u8;
            }
        }
        DenseKernel {
            s,
            q,
            edge_in,
            edge_out,
            alpha: Vec::new(),
            beta: Vec::new(),
            gamma: vec![0.0; q + 1],
            acc: vec![0.0; q + 1],
        }
    }

    /// Writes T x q posteriors into `out`, row-major.
    pub fn posteriors_into(&mut self, pmfs: &[Pmf], out: &mut Vec<f64>) -> Result<(), BcjrError> {
        let (s, q) = (self.s, self.q);
        if let Some(p) = pmfs.iter().find(|p| p.len() != q) {
            return Err(BcjrError::LengthMismatch {
                got: p.len(),
                want: q,
            });
        }
        let t = pmfs.len();
        let (edge_in, edge_out) = (&self.edge_in, &self.edge_out);
        let g = &mut self.gamma;
        let alpha = &mut self.alpha;
        alpha.clear();
        alpha.resize((t + 1) * s, 0.0);
        alpha[0] = 1.0;
        for k in 0..t {
            g[..q].copy_from_slice(pmfs[k].mass());
            let (prev, cur) = alpha.split_at_mut((k + 1) * s);
            let (prev, cur) = (&prev[k * s..], &mut cur[..s]);
            for (up, &a) in prev.iter().enumerate() {
                let row = &edge_out[up * s..(up + 1) * s];
                for (slot, &o) in cur.iter_mut().zip(row) {
                    *slot += a * g[o as usize];
                }
            }
            if !normalize(cur) {
                return Err(BcjrError::Underflow(k + 1));
            }
        }
        let beta = &mut self.beta;
        beta.clear();
        beta.resize((t + 1) * s, 0.0);
        beta[t * s] = 1.0;
        for k in (1..=t).rev() {
            g[..q].copy_from_slice(pmfs[k - 1].mass());
            let (head, tail) = beta.split_at_mut(k * s);
            let (cur, next) = (&mut head[(k - 1) * s..], &tail[..s]);
            for (up, slot) in cur.iter_mut().enumerate() {
                let row = &edge_out[up * s..(up + 1) * s];
                *slot = next.iter().zip(row).map(|(&b, &o)| g[o as usize] * b).sum();
            }
            if !normalize(cur) {
                return Err(BcjrError::NotTerminated);
            }
        }
        out.clear();
        out.resize(t * q, 0.0);
        let acc = &mut self.acc;
        for (k, m) in out.chunks_mut(q).enumerate() {
            g[..q].copy_from_slice(pmfs[k].mass());
            acc.iter_mut().for_each(|x| *x = 0.0);
            let next = &beta[(k + 1) * s..(k + 2) * s];
            for (up, &a) in alpha[k * s..(k + 1) * s].iter().enumerate() {
                let r = up * s..(up + 1) * s;
                for ((&b, &o), &i) in next.iter().zip(&edge_out[r.clone()]).zip(&edge_in[r]) {
                    acc[i as usize] += a * g[o as usize] * b;
                }
            }
            m.copy_from_slice(&acc[..q]);
            if !normalize(m) {
                return Err(BcjrError::NotTerminated);
            }
        }
        Ok(())
    }
}

/// [`posteriors`] computed with a [`DenseKernel`].
pub fn posteriors_dense(trellis: &Trellis, pmfs: &[Pmf]) -> Result<Vec<Pmf>, BcjrError> {
    let mut kernel = DenseKernel::new(trellis);
    let mut flat = Vec::new();
    kernel.posteriors_into(pmfs, &mut flat)?;
    Ok(flat
        .chunks(trellis.q())
        .map(|m| Pmf::from_mass(m.to_vec()).expect("nonnegative"))
        .collect())
}

/// Relative gap below which two posterior masses count as tied.
pub const DECISION_TIE_TOL: f64 = 1e-9;

/// Hard decisions: per-position argmax, with masses within
/// [`DECISION_TIE_TOL`] of the maximum treated as tied and resolved to the
/// smallest label. Posteriors that agree to rounding then give the same decision
/// whichever decoder computed them.
pub fn hard_decisions(pmfs: &[Pmf]) -> Vec<Elem> {
    pmfs.iter()
        .map(|p| {
            let m = p.mass();
            let top = m.iter().copied().fold(0.0, f64::max);
            let at = m
                .iter()
                .position(|&x| x >= top * (1.0 - DECISION_TIE_TOL))
                .unwrap_or(0);
            Elem(at as u8)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convcode::CodeSpec;

    fn trellis(s: &str) -> Trellis {
        Trellis::new(&s.parse::<CodeSpec>().unwrap()).unwrap()
    }

    fn pmf(v: &[f64]) -> Pmf {
        Pmf::from_mass(v.to_vec()).unwrap()
    }

    #[test]
    fn single_step_alpha() {
        let t = trellis("gf4:(1+x)");
        let alpha = forward(&t, &[pmf(&[0.4, 0.3, 0.2, 0.1])]).unwrap();
        // from the zero state, input b gives output b and next state b
        for (x, y) in alpha[4..].iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn noiseless_alpha_tracks_path() {
        let t = trellis("gf4:(1+3x+2x^2)/(1+x+2x^2)");
        let info: Vec<Elem> = [1, 0, 3, 2, 2, 1].iter().map(|&x| Elem(x)).collect();
        let code = t.walk(&info);
        let pmfs: Vec<Pmf> = code.iter().map(|&c| Pmf::delta(4, c)).collect();
        let alpha = forward(&t, &pmfs).unwrap();
        let mut s = 0;
        for (k, b) in info.iter().enumerate() {
            s = t.next(s, b.index());
            let row = &alpha[(k + 1) * 16..(k + 2) * 16];
            assert_eq!(row[s], 1.0);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn uniform_inputs() {
        let t = trellis("gf4:(1+x+2x^2)");
        let pmfs = vec![Pmf::uniform(4); 5];
        let alpha = forward(&t, &pmfs).unwrap();
        for x in &alpha[2 * 16..3 * 16] {
            assert!((x - 1.0 / 16.0).abs() < 1e-15);
        }
        // a feed-forward code holds the last two inputs in its state, so termination pins them to 0
        let post = posteriors(&t, &pmfs).unwrap();
        for p in &post[..3] {
            assert!(p.max_abs_diff(&Pmf::uniform(4)) < 1e-15);
        }
        for p in &post[3..] {
            assert!(p.max_abs_diff(&Pmf::delta(4, Elem(0))) < 1e-15);
        }
    }

    #[test]
    fn dense_matches_sparse() {
        let t = trellis("gf4:(1+x)/(1+2x)");
        let pmfs: Vec<Pmf> = (0..9)
            .map(|k| {
                Pmf::normalized((0..4).map(|i| ((k * 3 + i * 5) % 7 + 1) as f64).collect()).unwrap()
            })
            .collect();
        let a = posteriors(&t, &pmfs).unwrap();
        let b = posteriors_dense(&t, &pmfs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.max_abs_diff(y) < 1e-14);
        }
    }

    #[test]
    fn impossible_termination() {
        let t = trellis("gf4:(1+x)");
        // c_1 = 1 forces state 1, and a final delta at 0 with c_2 = 0 needs b_2 = 0 -> state 0 output 1
        let pmfs = vec![Pmf::delta(4, Elem(1)), Pmf::delta(4, Elem(0))];
        assert_eq!(posteriors(&t, &pmfs), Err(BcjrError::NotTerminated));
        assert_eq!(
            forward(&t, &[Pmf::uniform(2)]),
            Err(BcjrError::LengthMismatch { got: 2, want: 4 })
        );
    }
}
