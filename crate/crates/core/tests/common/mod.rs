#![allow(dead_code)]

use gfdual::channel::{add_noise, demap, frame_rng, modulate, ChannelConfig};
use gfdual::convcode::{encode_frame, CodeSpec, Frame};
use gfdual::dual::DualSpec;
use gfdual::galois::Elem;
use gfdual::pmf::Pmf;
use rand::Rng;

pub const BUILTIN_CODES: [&str; 5] = [
    "gf4:(1+x)",
    "gf4:(1+3x+2x^2)",
    "gf4:(1+x+2x^2)",
    "gf4:(1+x)/(1+2x)",
    "gf4:(1+3x+2x^2)/(1+x+2x^2)",
];

pub fn dual(s: &str) -> DualSpec {
    let code: CodeSpec = s.parse().unwrap();
    DualSpec::from_code(&code).unwrap()
}

/// Random info, encoded and sent over BPSK/AWGN at `ebn0_db`.
pub fn noisy_frame(
    d: &DualSpec,
    len: usize,
    ebn0_db: f64,
    seed: u64,
    index: u64,
) -> (Frame, Vec<Pmf>) {
    let q = d.field().q();
    let mut rng = frame_rng(seed, index);
    let info: Vec<Elem> = (0..len)
        .map(|_| Elem(rng.random_range(0..q) as u8))
        .collect();
    let frame = encode_frame(d, &info).unwrap();
    let cfg = ChannelConfig::bpsk(q, ebn0_db, len, d.memory()).unwrap();
    let mut y = modulate(q, &frame.code).unwrap();
    add_noise(&mut y, cfg.sigma, &mut rng);
    let pmfs = demap(q, &y, cfg.sigma).unwrap();
    (frame, pmfs)
}

/// Random strictly positive pmfs, for fields without a BPSK mapping.
pub fn random_pmfs(q: usize, count: usize, seed: u64) -> Vec<Pmf> {
    let mut rng = frame_rng(seed, 0);
    (0..count)
        .map(|_| {
            Pmf::normalized(
                (0..q)
                    .map(|_| rng.random_range(0.01..1.0f64).powi(3))
                    .collect(),
            )
            .unwrap()
        })
        .collect()
}

/// Exact posteriors of every information-domain symbol (tail included) by
/// enumerating all q^L information sequences.
pub fn brute_force_posteriors(d: &DualSpec, code_pmfs: &[Pmf], info_len: usize) -> Vec<Pmf> {
    let q = d.field().q();
    let total = info_len + d.memory();
    assert_eq!(code_pmfs.len(), total);
    let mut acc = vec![vec![0.0; q]; total];
    let count = q.pow(info_len as u32);
    let mut info = vec![Elem(0); info_len];
    for idx in 0..count {
        let mut r = idx;
        for s in info.iter_mut() {
            *s = Elem((r % q) as u8);
            r /= q;
        }
        let frame = encode_frame(d, &info).unwrap();
        let w: f64 = frame
            .code
            .iter()
            .zip(code_pmfs)
            .map(|(c, p)| p.mass()[c.index()])
            .product();
        for (k, b) in frame.full_info().iter().enumerate() {
            acc[k][b.index()] += w;
        }
    }
    acc.into_iter()
        .map(|m| Pmf::normalized(m).unwrap())
        .collect()
}

pub fn max_diff(a: &[Pmf], b: &[Pmf]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

/// Largest entrywise |a - b| / max(|b|, floor).
pub fn max_rel_diff(a: &[Pmf], b: &[Pmf], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            x.mass()
                .iter()
                .zip(y.mass())
                .map(|(u, v)| (u - v).abs() / v.abs().max(floor))
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}
