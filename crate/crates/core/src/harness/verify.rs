use std::fmt;

use rand::Rng;

use crate::bcjr;
use crate::channel::{
    add_noise, demap, frame_rng, modulate, pam_demap, pam_modulate, ChannelConfig,
};
use crate::convcode::{encode_frame, EncoderState, Frame};
use crate::dual::{DualDecoder, DualEncoder, DualError, DualSpec, ReverseDualEncoder};
use crate::galois::Elem;
use crate::pmf::{Pmf, TransformMode};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub frames: usize,
    pub frame_len: usize,
    /// Eb/N0 of the test frames; infinity gives noiseless frames.
    pub ebn0_db: f64,
    pub seed: u64,
    /// Bound on decoder vs reference deviations.
    pub tolerance: f64,
    /// Bound on direct vs fast transform deviations.
    pub fft_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            frames: 100,
            frame_len: 32,
            ebn0_db: 2.0,
            seed: 1,
            tolerance: 1e-9,
            fft_tolerance: 1e-10,
        }
    }
}

/// Results of all suites for one code. Deviations are maxima over frames,
/// positions and symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeReport {
    pub code: String,
    pub frames: usize,
    pub forward_dev: f64,
    pub backward_dev: f64,
    pub combined_dev: f64,
    pub fft_dev: f64,
    /// Positions where combined and reference hard decisions differ.
    pub decision_mismatches: usize,
    /// Frames whose tail left C or C-bar outside the zero state.
    pub tail_failures: usize,
    /// Frames where forward and reverse-labeled encoder states disagree at some k.
    pub state_disagreements: usize,
    /// Frames where noiseless forward and backward register banks disagree.
    pub bank_disagreements: usize,
    /// False when the dual has no feedback and the reverse encoder does not exist.
    pub reverse_checked: bool,
}

impl CodeReport {
    pub fn passed(&self, opts: &VerifyOptions) -> bool {
        self.forward_dev < opts.tolerance
            && self.backward_dev < opts.tolerance
            && self.combined_dev < opts.tolerance
            && self.fft_dev < opts.fft_tolerance
            && self.decision_mismatches == 0
            && self.tail_failures == 0
            && self.state_disagreements == 0
            && self.bank_disagreements == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub options: VerifyOptions,
    pub codes: Vec<CodeReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.codes.iter().all(|c| c.passed(&self.options))
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.options;
        writeln!(
            f,
            "frames={} L={} ebn0={} dB seed={} tol={:e} fft_tol={:e}",
            o.frames, o.frame_len, o.ebn0_db, o.seed, o.tolerance, o.fft_tolerance
        )?;
        writeln!(
            f,
            "{:<30} {:>10} {:>10} {:>10} {:>10} {:>6} {:>5} {:>6} {:>5}  result",
            "code", "forward", "backward", "combined", "fft", "hard", "tail", "states", "banks"
        )?;
        for c in &self.codes {
            let states = if c.reverse_checked {
                c.state_disagreements.to_string()
            } else {
                "n/a".into()
            };
            let banks = if c.reverse_checked {
                c.bank_disagreements.to_string()
            } else {
                "n/a".into()
            };
            writeln!(
                f,
                "{:<30} {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e} {:>6} {:>5} {:>6} {:>5}  {}",
                c.code,
                c.forward_dev,
                c.backward_dev,
                c.combined_dev,
                c.fft_dev,
                c.decision_mismatches,
                c.tail_failures,
                states,
                banks,
                if c.passed(o) { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn max_dev(a: &[Pmf], b: &[Pmf]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

/// Random frame of `len` information symbols and its channel pmfs; BPSK when
/// q = 2^m, PAM otherwise.
pub fn noisy_frame(
    d: &DualSpec,
    len: usize,
    ebn0_db: f64,
    seed: u64,
    index: u64,
) -> Result<(Frame, Vec<Pmf>), HarnessError> {
    let q = d.field().q();
    let mut rng = frame_rng(seed, index);
    let info: Vec<Elem> = (0..len)
        .map(|_| Elem(rng.random_range(0..q) as u8))
        .collect();
    let frame = encode_frame(d, &info)?;
    let rate = len as f64 / frame.len() as f64;
    let pmfs = if q.is_power_of_two() {
        let ch = ChannelConfig::bpsk(q, ebn0_db, len, d.memory())?;
        let mut y = modulate(q, &frame.code)?;
        add_noise(&mut y, ch.sigma, &mut rng);
        demap(q, &y, ch.sigma)?
    } else {
        let sigma = (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt();
        let mut y = pam_modulate(q, &frame.code);
        add_noise(&mut y, sigma, &mut rng);
        pam_demap(q, &y, sigma)?
    };
    Ok((frame, pmfs))
}

/// Replays the frame through C and C-bar from zero; true if both end at zero.
fn tail_terminates(d: &DualSpec, frame: &Frame) -> bool {
    let code = d.code();
    let Ok((cw, state)) = code.encode_from(&frame.full_info(), &EncoderState::zero(code.memory()))
    else {
        return false;
    };
    let mut enc = DualEncoder::new(d);
    for &c in &frame.code {
        enc.step(c);
    }
    cw == frame.code && state.is_zero() && enc.state().iter().all(|w| w.is_zero())
}

/// Forward C-bar states against the reverse-labeled encoder run on the reversed sequence.
fn states_agree(d: &DualSpec, code: &[Elem]) -> Result<bool, DualError> {
    let mut rev = ReverseDualEncoder::new(d)?;
    let t = code.len();
    let mut backward = vec![Vec::new(); t + 1];
    backward[t] = rev.forward_view();
    for k in (1..=t).rev() {
        rev.step(code[k - 1]);
        backward[k - 1] = rev.forward_view();
    }
    let mut fwd = DualEncoder::new(d);
    if fwd.state() != backward[0].as_slice() {
        return Ok(false);
    }
    for (k, &c) in code.iter().enumerate() {
        fwd.step(c);
        if fwd.state() != backward[k + 1].as_slice() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Noiseless forward and backward banks are point masses at the same labels.
fn banks_agree(dec: &DualDecoder, code: &[Elem]) -> Result<bool, DualError> {
    let q = dec.spec().field().q();
    let pmfs: Vec<Pmf> = code.iter().map(|&c| Pmf::delta(q, c)).collect();
    let (_, f) = dec.forward_decode(&pmfs, true)?;
    let (_, b) = dec.backward_decode(&pmfs, true)?;
    let (f, b) = (f.unwrap(), b.unwrap());
    for k in 0..f.len() {
        for j in 1..=f.memory() {
            let (x, y) = (f.pmf(k, j), b.pmf(k, j));
            if x.max_abs_diff(&y) > 1e-9 || x.mass()[x.argmax().index()] < 1.0 - 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Runs every suite with frames built from `reference` and decoders built from `under_test`.
pub fn verify_dual(
    reference: &DualSpec,
    under_test: &DualSpec,
    opts: &VerifyOptions,
) -> Result<CodeReport, HarnessError> {
    let trellis = bcjr::reference_trellis(reference)?;
    let direct = DualDecoder::new(under_test);
    let fast = DualDecoder::new(under_test).with_transform_mode(TransformMode::Fast);
    let reverse_checked = !reference.feedback().is_zero();
    let mut r = CodeReport {
        code: reference.code().to_string(),
        frames: opts.frames,
        forward_dev: 0.0,
        backward_dev: 0.0,
        combined_dev: 0.0,
        fft_dev: 0.0,
        decision_mismatches: 0,
        tail_failures: 0,
        state_disagreements: 0,
        bank_disagreements: 0,
        reverse_checked,
    };
    for i in 0..opts.frames {
        let (frame, pmfs) =
            noisy_frame(reference, opts.frame_len, opts.ebn0_db, opts.seed, i as u64)?;

        let fwd = direct.forward_decode(&pmfs, false)?.0;
        let bwd = direct.backward_decode(&pmfs, false)?.0;
        let comb = direct.combine_decode(&pmfs)?;
        let post = bcjr::posteriors(&trellis, &pmfs)?;
        r.forward_dev = r
            .forward_dev
            .max(max_dev(&fwd, &bcjr::forward_app(&trellis, &pmfs)?));
        r.backward_dev = r
            .backward_dev
            .max(max_dev(&bwd, &bcjr::backward_app(&trellis, &pmfs)?));
        r.combined_dev = r.combined_dev.max(max_dev(&comb, &post));
        r.decision_mismatches += bcjr::hard_decisions(&comb)
            .iter()
            .zip(bcjr::hard_decisions(&post))
            .filter(|(a, b)| **a != *b)
            .count();

        let ffwd = fast.forward_decode(&pmfs, false)?.0;
        let fbwd = fast.backward_decode(&pmfs, false)?.0;
        let fcomb = fast.combine_decode(&pmfs)?;
        r.fft_dev = r
            .fft_dev
            .max(max_dev(&ffwd, &fwd))
            .max(max_dev(&fbwd, &bwd))
            .max(max_dev(&fcomb, &comb));

        if !tail_terminates(reference, &frame) {
            r.tail_failures += 1;
        }
        if reverse_checked {
            if !states_agree(reference, &frame.code)? {
                r.state_disagreements += 1;
            }
            if !banks_agree(&direct, &frame.code)? {
                r.bank_disagreements += 1;
            }
        }
    }
    Ok(r)
}

/// [`verify_dual`] for each spec against itself.
pub fn verify_theorems(
    specs: &[DualSpec],
    opts: &VerifyOptions,
) -> Result<VerifyReport, HarnessError> {
    let codes = specs
        .iter()
        .map(|s| verify_dual(s, s, opts))
        .collect::<Result<_, _>>()?;
    Ok(VerifyReport {
        options: opts.clone(),
        codes,
    })
}
