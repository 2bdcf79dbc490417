//! BPSK over AWGN and the soft demapper that produces code-symbol pmfs.
//!
//! A symbol's label is sent as log2(q) bits, most significant first, with
//! bit 0 mapped to +1 and bit 1 to -1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::galois::Elem;
use crate::pmf::{Pmf, PmfError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("BPSK needs q to be a power of two, got {0}")]
    NonBinaryExtension(usize),
    #[error("received {got} samples, not a multiple of {per_symbol}")]
    SampleCount { got: usize, per_symbol: usize },
    #[error(transparent)]
    Pmf(#[from] PmfError),
}

/// Noise setup for one Eb/N0 point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub ebn0_db: f64,
    pub sigma: f64,
    pub bits_per_symbol: u32,
    /// Information symbols per transmitted symbol, L / (L + N).
    pub rate: f64,
}

impl ChannelConfig {
    /// Unit energy per transmitted bit; the tail overhead lowers the effective rate.
    pub fn bpsk(
        q: usize,
        ebn0_db: f64,
        info_len: usize,
        tail_len: usize,
    ) -> Result<ChannelConfig, ChannelError> {
        let bits_per_symbol = bits_per_symbol(q)?;
        let rate = info_len as f64 / (info_len + tail_len) as f64;
        let sigma = (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt();
        Ok(ChannelConfig {
            ebn0_db,
            sigma,
            bits_per_symbol,
            rate,
        })
    }

    /// Noiseless channel; demapping gives point masses.
    pub fn noiseless(q: usize) -> Result<ChannelConfig, ChannelError> {
        Ok(ChannelConfig {
            ebn0_db: f64::INFINITY,
            sigma: 0.0,
            bits_per_symbol: bits_per_symbol(q)?,
            rate: 1.0,
        })
    }

    /// Energy per transmitted bit over N0, after the tail overhead.
    pub fn effective_ebn0_db(&self) -> f64 {
        self.ebn0_db + 10.0 * self.rate.log10()
    }
}

fn bits_per_symbol(q: usize) -> Result<u32, ChannelError> {
    if q.is_power_of_two() && q >= 2 {
        Ok(q.trailing_zeros())
    } else {
        Err(ChannelError::NonBinaryExtension(q))
    }
}

/// Channel output for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub samples: Vec<f64>,
    pub config: ChannelConfig,
    pub seed: u64,
    pub frame: u64,
}

pub fn modulate(q: usize, syms: &[Elem]) -> Result<Vec<f64>, ChannelError> {
    let m = bits_per_symbol(q)?;
    let mut out = Vec::with_capacity(syms.len() * m as usize);
    for s in syms {
        for i in (0..m).rev() {
            out.push(if (s.0 >> i) & 1 == 0 { 1.0 } else { -1.0 });
        }
    }
    Ok(out)
}

/// Independent random stream for frame `frame` under master seed `seed`.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

pub fn add_noise<R: Rng + ?Sized>(samples: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    for x in samples {
        let n: f64 = rng.sample(StandardNormal);
        *x += sigma * n;
    }
}

/// Symbol pmfs from BPSK samples with a flat symbol prior.
pub fn demap(q: usize, samples: &[f64], sigma: f64) -> Result<Vec<Pmf>, ChannelError> {
    let m = bits_per_symbol(q)? as usize;
    if samples.len() % m != 0 {
        return Err(ChannelError::SampleCount {
            got: samples.len(),
            per_symbol: m,
        });
    }
    samples
        .chunks(m)
        .map(|y| {
            let mut metric = vec![0.0; q];
            for (label, slot) in metric.iter_mut().enumerate() {
                let mut d = 0.0;
                for (i, &yi) in y.iter().enumerate() {
                    let s = if (label >> (m - 1 - i)) & 1 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    d += (yi - s) * (yi - s);
                }
                *slot = d;
            }
            metric_to_pmf(metric, sigma)
        })
        .collect()
}

/// Converts squared distances to a pmf; sigma = 0 gives the nearest point.
fn metric_to_pmf(dist: Vec<f64>, sigma: f64) -> Result<Pmf, ChannelError> {
    let q = dist.len();
    let best = dist.iter().copied().fold(f64::INFINITY, f64::min);
    if sigma == 0.0 {
        let at = dist.iter().position(|&d| d == best).unwrap();
        return Ok(Pmf::delta(q, Elem(at as u8)));
    }
    let scale = 1.0 / (2.0 * sigma * sigma);
    let mass = dist.iter().map(|d| (-(d - best) * scale).exp()).collect();
    Ok(Pmf::normalized(mass)?)
}

pub fn demap_frame(q: usize, frame: &ReceivedFrame) -> Result<Vec<Pmf>, ChannelError> {
    demap(q, &frame.samples, frame.config.sigma)
}

/// q-ary PAM with levels 2j - (q-1), for fields whose size is not a power of two.
pub fn pam_modulate(q: usize, syms: &[Elem]) -> Vec<f64> {
    syms.iter()
        .map(|s| 2.0 * s.0 as f64 - (q - 1) as f64)
        .collect()
}

pub fn pam_demap(q: usize, samples: &[f64], sigma: f64) -> Result<Vec<Pmf>, ChannelError> {
    samples
        .iter()
        .map(|&y| {
            let dist = (0..q)
                .map(|j| {
                    let d = y - (2.0 * j as f64 - (q - 1) as f64);
                    d * d
                })
                .collect();
            metric_to_pmf(dist, sigma)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_labels() {
        assert_eq!(modulate(4, &[Elem(0)]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(modulate(4, &[Elem(3)]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(modulate(4, &[Elem(2)]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(
            modulate(5, &[Elem(2)]),
            Err(ChannelError::NonBinaryExtension(5))
        );
    }

    #[test]
    fn demap_examples() {
        let p = demap(4, &[0.0, 0.0], 1.0).unwrap();
        assert!(p[0].max_abs_diff(&Pmf::uniform(4)) < 1e-15);

        // y = (+1,+1), sigma = 1: squared distances 0, 4, 4, 8 -> exp(-d/2)
        let p = demap(4, &[1.0, 1.0], 1.0).unwrap();
        let w = [1.0, (-2f64).exp(), (-2f64).exp(), (-4f64).exp()];
        let s: f64 = w.iter().sum();
        for i in 0..4 {
            assert!((p[0].mass()[i] - w[i] / s).abs() < 1e-15);
        }

        let p = demap(4, &[-1.0, -1.0], 1e-3).unwrap();
        assert!(p[0].max_abs_diff(&Pmf::delta(4, Elem(3))) < 1e-12);
        let p = demap(4, &[-0.2, 0.3], 0.0).unwrap();
        assert_eq!(p[0], Pmf::delta(4, Elem(2)));
        assert!(demap(4, &[1.0], 1.0).is_err());
    }

    #[test]
    fn high_snr_does_not_underflow() {
        let p = demap(16, &[-1.0, 1.0, 1.0, -1.0], 1e-4).unwrap();
        assert_eq!(p[0].argmax(), Elem(0b1001));
        assert!((p[0].total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_from_ebn0() {
        let c = ChannelConfig::bpsk(4, 0.0, 1, 0).unwrap();
        assert!((c.sigma - 0.5f64.sqrt()).abs() < 1e-15);
        let c = ChannelConfig::bpsk(4, 3.0, 256, 2).unwrap();
        let want = (1.0 / (2.0 * 256.0 / 258.0 * 10f64.powf(0.3))).sqrt();
        assert!((c.sigma - want).abs() < 1e-15);
        assert!(c.effective_ebn0_db() < 3.0);
    }

    #[test]
    fn noise_is_reproducible() {
        let mut a = vec![0.0; 64];
        let mut b = vec![0.0; 64];
        add_noise(&mut a, 0.7, &mut frame_rng(7, 3));
        add_noise(&mut b, 0.7, &mut frame_rng(7, 3));
        assert_eq!(a, b);
        let mut c = vec![0.0; 64];
        add_noise(&mut c, 0.7, &mut frame_rng(7, 4));
        assert_ne!(a, c);
        let mut d = vec![1.5; 8];
        add_noise(&mut d, 0.0, &mut frame_rng(1, 1));
        assert_eq!(d, vec![1.5; 8]);
    }

    #[test]
    fn pam_round_trip() {
        let syms = [Elem(0), Elem(4), Elem(2)];
        let p = pam_demap(5, &pam_modulate(5, &syms), 0.0).unwrap();
        assert_eq!(p.iter().map(Pmf::argmax).collect::<Vec<_>>(), syms);
    }
}
