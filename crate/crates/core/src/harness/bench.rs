use std::fmt::Write as _;
use std::time::Instant;

use crate::bcjr;
use crate::convcode::{CodeSpec, Trellis};
use crate::dual::{DualDecoder, DualScratch, DualSpec};
use crate::galois::{Elem, Field};
use crate::gfpoly::Poly;
use crate::pmf::{Pmf, TransformMode};

use super::{noisy_frame, HarnessError};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub field: Field,
    /// Code memories n for which BCJR is timed.
    pub bcjr_memories: Vec<usize>,
    /// Code memories n for which the dual decoders are timed.
    pub dual_memories: Vec<usize>,
    pub frames: usize,
    pub frame_len: usize,
    /// Each timing is the minimum over this many samples.
    pub repeats: usize,
    /// Minimum length of one sample in seconds.
    pub min_time: f64,
    /// Independent timing rounds, each with freshly allocated frames.
    pub rounds: usize,
    pub seed: u64,
    /// Field for the direct-vs-fast comparison, with its code memory.
    pub fft_field: Option<(Field, usize)>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            field: Field::with_size(4).unwrap(),
            bcjr_memories: vec![1, 2, 3],
            dual_memories: vec![1, 2, 3, 4, 5, 6],
            frames: 20,
            frame_len: 512,
            repeats: 10,
            min_time: 0.005,
            rounds: 12,
            seed: 1,
            fft_field: Some((Field::with_size(16).unwrap(), 3)),
        }
    }
}

/// Per-frame decode times in seconds for one code of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub dual_memory: usize,
    pub states: usize,
    pub bcjr_sparse_s: Option<f64>,
    pub bcjr_dense_s: Option<f64>,
    pub dual_direct_s: Option<f64>,
    pub dual_fft_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through (x, y).
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub q: usize,
    pub rows: Vec<BenchRow>,
    /// Direct and fast per-frame times on the comparison field, and its size.
    pub fft_comparison: Option<(usize, f64, f64)>,
}

impl BenchReport {
    fn series(&self, pick: impl Fn(&BenchRow) -> Option<f64>) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| pick(r).map(|t| (r.dual_memory as f64, t)))
            .unzip()
    }

    /// Fit of dual decode time against dual memory N.
    pub fn dual_fit(&self, mode: TransformMode) -> Option<LinearFit> {
        let (x, y) = match mode {
            TransformMode::Direct => self.series(|r| r.dual_direct_s),
            TransformMode::Fast => self.series(|r| r.dual_fft_s),
        };
        (x.len() >= 2).then(|| linear_fit(&x, &y))
    }

    /// Time ratios between consecutive code memories.
    pub fn bcjr_ratios(&self, dense: bool) -> Vec<f64> {
        let t: Vec<f64> = self
            .rows
            .iter()
            .filter_map(|r| {
                if dense {
                    r.bcjr_dense_s
                } else {
                    r.bcjr_sparse_s
                }
            })
            .collect();
        t.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "n,dual_memory,states,bcjr_sparse_s,bcjr_dense_s,dual_direct_s,dual_fft_s\n",
        );
        let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.n,
                r.dual_memory,
                r.states,
                f(r.bcjr_sparse_s),
                f(r.bcjr_dense_s),
                f(r.dual_direct_s),
                f(r.dual_fft_s)
            );
        }
        s
    }
}

/// (1 + x^n) / (1 + x + ... + x^n): code memory n, dual memory 2n.
pub fn bench_family_code(field: &Field, n: usize) -> CodeSpec {
    let a = Poly::one(field)
        .add(&Poly::monomial(field, Elem::ONE, n))
        .unwrap();
    let f = Poly::new(field, vec![Elem::ONE; n + 1]).unwrap();
    CodeSpec::new(a, f).expect("family code")
}

/// Which measurement a timed task feeds.
#[derive(Clone, Copy)]
enum Slot {
    Sparse(usize),
    Dense(usize),
    Direct(usize),
    Fast(usize),
    FftDirect,
    FftFast,
}

/// A workload timed over all frames of one code.
struct Task<'a> {
    slot: Slot,
    run: Box<dyn FnMut() + 'a>,
    iters: usize,
    best: f64,
}

/// Samples every task round-robin, `repeats` rounds, each sample lasting at
/// least `min_time`; keeps the fastest sample per task. Interleaving makes a
/// slow stretch of wall time hit all tasks alike instead of one row.
fn time_tasks(tasks: &mut [Task<'_>], repeats: usize, min_time: f64) {
    for t in tasks.iter_mut() {
        let start = Instant::now();
        (t.run)();
        let first = start.elapsed().as_secs_f64();
        t.iters = ((min_time / first.max(1e-9)).ceil() as usize).max(1);
        t.best = first;
    }
    for _ in 0..repeats.max(1) {
        for t in tasks.iter_mut() {
            let start = Instant::now();
            for _ in 0..t.iters {
                (t.run)();
            }
            t.best = t.best.min(start.elapsed().as_secs_f64() / t.iters as f64);
        }
    }
}

fn frames_for(d: &DualSpec, opts: &BenchOptions) -> Result<Vec<Vec<Pmf>>, HarnessError> {
    (0..opts.frames)
        .map(|i| noisy_frame(d, opts.frame_len, 2.0, opts.seed, i as u64).map(|(_, p)| p))
        .collect()
}

fn dual_task<'a>(
    slot: Slot,
    d: &DualSpec,
    frames: &'a [Vec<Pmf>],
    mode: TransformMode,
) -> Task<'a> {
    let dec = DualDecoder::new(d).with_transform_mode(mode);
    let mut scratch = DualScratch::default();
    let mut buf = Vec::new();
    Task {
        slot,
        run: Box::new(move || {
            for p in frames {
                dec.combine_into(p, &mut scratch, &mut buf).unwrap();
                std::hint::black_box(&buf);
            }
        }),
        iters: 1,
        best: f64::INFINITY,
    }
}

type RoundTimes = (Vec<BenchRow>, Option<usize>, Vec<(usize, usize, f64)>);

/// One timing round over freshly built frames; per-frame times tagged (kind, row).
fn timed_round(opts: &BenchOptions) -> Result<RoundTimes, HarnessError> {
    let q = opts.field.q();
    let mut memories: Vec<usize> = opts
        .bcjr_memories
        .iter()
        .chain(&opts.dual_memories)
        .copied()
        .collect();
    memories.sort_unstable();
    memories.dedup();
    let mut rows = Vec::new();
    let mut codes = Vec::new();
    for &n in &memories {
        let code = bench_family_code(&opts.field, n);
        let d = DualSpec::from_code(&code)?;
        let frames = frames_for(&d, opts)?;
        let trellis = if opts.bcjr_memories.contains(&n) {
            Some(Trellis::new(&code)?)
        } else {
            None
        };
        rows.push(BenchRow {
            n,
            dual_memory: d.memory(),
            states: q.pow(n as u32),
            bcjr_sparse_s: None,
            bcjr_dense_s: None,
            dual_direct_s: None,
            dual_fft_s: None,
        });
        codes.push((n, d, frames, trellis));
    }
    let fft = match &opts.fft_field {
        Some((field, n)) => {
            let d = DualSpec::from_code(&bench_family_code(field, *n))?;
            let frames = frames_for(&d, opts)?;
            Some((field.q(), d, frames))
        }
        None => None,
    };

    let mut tasks = Vec::new();
    for (row, (n, d, frames, trellis)) in codes.iter().enumerate() {
        if let Some(t) = trellis {
            tasks.push(Task {
                slot: Slot::Sparse(row),
                run: Box::new(move || {
                    for p in frames {
                        std::hint::black_box(bcjr::posteriors(t, p).unwrap());
                    }
                }),
                iters: 1,
                best: f64::INFINITY,
            });
            let mut kernel = bcjr::DenseKernel::new(t);
            let mut buf = Vec::new();
            tasks.push(Task {
                slot: Slot::Dense(row),
                run: Box::new(move || {
                    for p in frames {
                        kernel.posteriors_into(p, &mut buf).unwrap();
                        std::hint::black_box(&buf);
                    }
                }),
                iters: 1,
                best: f64::INFINITY,
            });
        }
        if opts.dual_memories.contains(n) {
            tasks.push(dual_task(
                Slot::Direct(row),
                d,
                frames,
                TransformMode::Direct,
            ));
            tasks.push(dual_task(Slot::Fast(row), d, frames, TransformMode::Fast));
        }
    }
    if let Some((_, d, frames)) = &fft {
        tasks.push(dual_task(Slot::FftDirect, d, frames, TransformMode::Direct));
        tasks.push(dual_task(Slot::FftFast, d, frames, TransformMode::Fast));
    }
    time_tasks(&mut tasks, opts.repeats, opts.min_time);

    let per = opts.frames as f64;
    let times = tasks
        .iter()
        .map(|t| {
            let (kind, r) = match t.slot {
                Slot::Sparse(r) => (0, r),
                Slot::Dense(r) => (1, r),
                Slot::Direct(r) => (2, r),
                Slot::Fast(r) => (3, r),
                Slot::FftDirect => (4, 0),
                Slot::FftFast => (5, 0),
            };
            (kind, r, t.best / per)
        })
        .collect();
    Ok((rows, fft.as_ref().map(|f| f.0), times))
}

/// Times BCJR (on the minimal trellis) and the combined dual decoder over the code family.
pub fn bench_complexity(opts: &BenchOptions) -> Result<BenchReport, HarnessError> {
    let q = opts.field.q();
    let mut report = BenchReport {
        q,
        rows: Vec::new(),
        fft_comparison: None,
    };
    if opts.frames == 0 {
        return Ok(report);
    }
    let mut best: Vec<(usize, usize, f64)> = Vec::new();
    let mut fft_q = None;
    // Fresh frames and decoders each round: a task's memory layout stays fixed
    // within a round and can bias it, so the minimum is also taken across rounds.
    for _ in 0..opts.rounds.max(1) {
        let (rows, q_fft, times) = timed_round(opts)?;
        report.rows = rows;
        fft_q = q_fft;
        if best.is_empty() {
            best = times;
        } else {
            for (b, t) in best.iter_mut().zip(times) {
                b.2 = b.2.min(t.2);
            }
        }
    }
    let mut fft_times = (0.0, 0.0);
    for &(kind, r, v) in &best {
        match kind {
            0 => report.rows[r].bcjr_sparse_s = Some(v),
            1 => report.rows[r].bcjr_dense_s = Some(v),
            2 => report.rows[r].dual_direct_s = Some(v),
            3 => report.rows[r].dual_fft_s = Some(v),
            4 => fft_times.0 = v,
            _ => fft_times.1 = v,
        }
    }
    if let Some(fq) = fft_q {
        report.fft_comparison = Some((fq, fft_times.0, fft_times.1));
    }
    Ok(report)
}
