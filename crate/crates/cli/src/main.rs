//! `gfdual`: encode, decode, simulate, verify and benchmark GF(q) rate-1 codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gfdual::bcjr;
use gfdual::convcode::{encode_frame, CodeSpec};
use gfdual::dual::{DualDecoder, DualSpec};
use gfdual::galois::{Elem, Field};
use gfdual::harness::{
    self, bench_complexity, builtin_codes, gnuplot_script, run_point, verify_theorems, write_csv,
    BenchOptions, DecoderKind, FrameRunner, HarnessError, SimConfig, VerifyOptions,
};
use gfdual::pmf::{Pmf, TransformMode};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gfdual",
    version,
    about = "Rate-1 convolutional codes over GF(q) and their dual-encoder MAP decoders"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the built-in codes and their dual encoders
    Codes,
    /// Encode information symbols and append the termination tail
    Encode(EncodeArgs),
    /// Decode code-symbol pmfs read from JSON
    Decode(DecodeArgs),
    /// Monte Carlo BER simulation
    Simulate(SimArgs),
    /// Check the dual decoders against the BCJR reference
    Verify(VerifyArgs),
    /// Time BCJR and the dual decoders against code memory
    Bench(BenchArgs),
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    code: String,
    /// Comma-separated symbol labels
    #[arg(long)]
    info: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Direct,
    Fast,
}

impl From<Mode> for TransformMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Direct => TransformMode::Direct,
            Mode::Fast => TransformMode::Fast,
        }
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    code: String,
    /// JSON file: an array of pmfs, or an object with a "pmfs" array
    #[arg(long)]
    pmfs_in: PathBuf,
    #[arg(long, default_value = "dual-combined")]
    decoder: String,
    #[arg(long, value_enum, default_value = "direct")]
    transform: Mode,
    /// Write JSON here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// JSON configuration; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    code: Option<String>,
    #[arg(long)]
    decoder: Option<String>,
    /// start:stop:step, a comma-separated list, or one value (dB)
    #[arg(long)]
    ebn0: Option<String>,
    /// Frame cap per point; 0 removes the cap
    #[arg(long)]
    frames: Option<u64>,
    /// Bit-error target per point; 0 removes the target
    #[arg(long)]
    errors: Option<u64>,
    #[arg(long)]
    frame_len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    transform: Option<Mode>,
    #[arg(long)]
    batch: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// CSV output; a gnuplot script is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verify all built-in codes
    #[arg(long)]
    all: bool,
    /// Code to verify; repeatable
    #[arg(long)]
    code: Vec<String>,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 32)]
    frame_len: usize,
    #[arg(long, default_value_t = 2.0)]
    ebn0: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "gf4")]
    field: String,
    #[arg(long, default_value = "1,2,3")]
    bcjr_memories: String,
    #[arg(long, default_value = "1,2,3,4,5,6")]
    dual_memories: String,
    #[arg(long, default_value_t = 20)]
    frames: usize,
    #[arg(long, default_value_t = 512)]
    frame_len: usize,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Timing rounds, each over freshly allocated frames
    #[arg(long, default_value_t = 12)]
    rounds: usize,
    /// Minimum seconds per timing sample
    #[arg(long, default_value_t = 0.005)]
    min_time: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Field for the direct-vs-fast comparison; "none" to skip
    #[arg(long, default_value = "gf16")]
    fft_field: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure(u8, String);

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::Dual(_) | HarnessError::Bcjr(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Failure(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USAGE, msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.cmd {
        Cmd::Codes => codes(),
        Cmd::Encode(a) => encode(a),
        Cmd::Decode(a) => decode(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Bench(a) => bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn parse_code(s: &str) -> Result<(CodeSpec, DualSpec), Failure> {
    let code: CodeSpec = s.parse().map_err(|e| usage(format!("{s:?}: {e}")))?;
    let dual = DualSpec::from_code(&code).map_err(|e| usage(format!("{s:?}: {e}")))?;
    Ok((code, dual))
}

fn labels(v: &[Elem]) -> String {
    v.iter()
        .map(|e| e.0.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn codes() -> Result<(), Failure> {
    println!(
        "{:<30} {:>2} {:>2} {:>2} {:>10} {:>8} {}",
        "code", "n", "l", "N", "taps", "feedback", "z(x)"
    );
    for code in builtin_codes() {
        let d = DualSpec::from_code(&code).map_err(|e| usage(e.to_string()))?;
        println!(
            "{:<30} {:>2} {:>2} {:>2} {:>10} {:>8} {}",
            code.to_string(),
            code.memory(),
            d.complementary_degree(),
            d.memory(),
            labels(d.taps()),
            d.feedback().0,
            d.complementary()
        );
    }
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<(), Failure> {
    let (code, dual) = parse_code(&a.code)?;
    let q = code.field().q();
    let info = a
        .info
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim().parse::<usize>() {
            Ok(v) if v < q => Ok(Elem(v as u8)),
            _ => Err(usage(format!("bad symbol {s:?} for {}", code.field()))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let frame = encode_frame(&dual, &info).map_err(|e| usage(e.to_string()))?;
    println!("code: {}", labels(&frame.code));
    println!("tail_info: {}", labels(&frame.tail_info));
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PmfInput {
    Bare(Vec<Vec<f64>>),
    Wrapped { pmfs: Vec<Vec<f64>> },
}

#[derive(Serialize)]
struct DecodeOutput {
    code: String,
    decoder: String,
    posteriors: Vec<Vec<f64>>,
    decisions: Vec<u8>,
}

fn decode(a: DecodeArgs) -> Result<(), Failure> {
    let (code, dual) = parse_code(&a.code)?;
    let kind: DecoderKind = a.decoder.parse()?;
    let text = fs::read_to_string(&a.pmfs_in)
        .map_err(|e| usage(format!("{}: {e}", a.pmfs_in.display())))?;
    let raw = match serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", a.pmfs_in.display())))?
    {
        PmfInput::Bare(v) | PmfInput::Wrapped { pmfs: v } => v,
    };
    let pmfs = raw
        .into_iter()
        .map(|m| Pmf::normalized(m).map_err(|e| usage(format!("input pmf: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mode = if kind == DecoderKind::DualFft {
        TransformMode::Fast
    } else {
        a.transform.into()
    };
    let dec = DualDecoder::new(&dual).with_transform_mode(mode);
    let numeric = |e: String| Failure(EXIT_NUMERIC, e);
    let post = match kind {
        DecoderKind::Bcjr => {
            let t = bcjr::reference_trellis(&dual).map_err(|e| usage(e.to_string()))?;
            bcjr::posteriors(&t, &pmfs).map_err(|e| numeric(e.to_string()))?
        }
        DecoderKind::DualCombined | DecoderKind::DualFft => dec
            .combine_decode(&pmfs)
            .map_err(|e| numeric(e.to_string()))?,
        DecoderKind::DualFbProduct => dec
            .fb_output_product(&pmfs)
            .map_err(|e| numeric(e.to_string()))?,
        DecoderKind::DualForwardOnly => {
            dec.forward_decode(&pmfs, false)
                .map_err(|e| numeric(e.to_string()))?
                .0
        }
    };
    let out = DecodeOutput {
        code: code.to_string(),
        decoder: kind.to_string(),
        decisions: bcjr::hard_decisions(&post).iter().map(|e| e.0).collect(),
        posteriors: post.iter().map(|p| p.mass().to_vec()).collect(),
    };
    let json = serde_json::to_string_pretty(&out).expect("serializable");
    match a.out {
        Some(p) => {
            fs::write(&p, json + "\n").map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => println!("{json}"),
    }
    Ok(())
}

/// "0:6:1" (inclusive), "0,2.5,5" or "3".
fn parse_ebn0(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("bad Eb/N0 list {s:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(num).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn simulate(a: SimArgs) -> Result<(), Failure> {
    let mut cfg: Option<SimConfig> = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    if cfg.is_none() {
        let (Some(code), Some(seed)) = (&a.code, a.seed) else {
            return Err(usage("simulate needs --code and --seed, or --config"));
        };
        let decoder = a.decoder.as_deref().unwrap_or("dual-combined").parse()?;
        let ebn0 = parse_ebn0(a.ebn0.as_deref().unwrap_or("0:6:1"))?;
        cfg = Some(SimConfig::new(code, decoder, ebn0, seed));
    }
    let mut cfg = cfg.unwrap();
    if let Some(c) = a.code {
        cfg.code = c;
    }
    if let Some(d) = a.decoder {
        cfg.decoder = d.parse()?;
    }
    if let Some(e) = a.ebn0 {
        cfg.ebn0_db = parse_ebn0(&e)?;
    }
    if let Some(f) = a.frames {
        cfg.max_frames = (f > 0).then_some(f);
    }
    if let Some(e) = a.errors {
        cfg.min_bit_errors = (e > 0).then_some(e);
    }
    if let Some(l) = a.frame_len {
        cfg.frame_len = l;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(m) = a.transform {
        cfg.transform_mode = m.into();
    }
    if let Some(b) = a.batch {
        cfg.batch_size = b;
    }
    if let Some(t) = a.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }

    let runner = FrameRunner::new(&cfg)?;
    let mut records = Vec::new();
    println!("{}", harness::CSV_HEADER.join(","));
    for &e in &cfg.ebn0_db {
        let r = run_point(&runner, e)?;
        println!(
            "{},{},{},{},{},{},{},{:e},{:e},{:.3},{}",
            r.code,
            r.decoder,
            r.ebn0_db,
            r.frames,
            r.info_bits,
            r.bit_errors,
            r.symbol_errors,
            r.ber,
            r.ser,
            r.seconds,
            r.seed
        );
        if r.failed_frames > 0 {
            eprintln!(
                "warning: {} frames failed numerically at {} dB",
                r.failed_frames, e
            );
        }
        records.push(r);
    }
    if let Some(out) = &a.out {
        let all = write_csv(out, &records)?;
        let gp = out.with_extension("gp");
        let title = format!("BER over AWGN, L = {}", cfg.frame_len);
        fs::write(&gp, gnuplot_script(&all, &title))
            .map_err(|e| usage(format!("{}: {e}", gp.display())))?;
        eprintln!("wrote {} and {}", out.display(), gp.display());
    }
    if records.iter().any(|r| r.failed_frames > 0) {
        return Err(Failure(
            EXIT_NUMERIC,
            "some frames failed numerically".into(),
        ));
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let mut specs = Vec::new();
    if a.all {
        for c in builtin_codes() {
            specs.push(DualSpec::from_code(&c).map_err(|e| usage(e.to_string()))?);
        }
    }
    for c in &a.code {
        specs.push(parse_code(c)?.1);
    }
    if specs.is_empty() {
        return Err(usage("verify needs --all or --code"));
    }
    let opts = VerifyOptions {
        frames: a.frames,
        frame_len: a.frame_len,
        ebn0_db: a.ebn0,
        seed: a.seed,
        ..VerifyOptions::default()
    };
    let report = verify_theorems(&specs, &opts)?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure(EXIT_VERIFY, "verification failed".into()))
    }
}

fn parse_list(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| usage(format!("bad list {s:?}")))
        })
        .collect()
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let field: Field = a
        .field
        .parse()
        .map_err(|e| usage(format!("{}: {e}", a.field)))?;
    let fft_field = if a.fft_field == "none" {
        None
    } else {
        Some((
            a.fft_field
                .parse::<Field>()
                .map_err(|e| usage(format!("{}: {e}", a.fft_field)))?,
            3,
        ))
    };
    let opts = BenchOptions {
        field,
        bcjr_memories: parse_list(&a.bcjr_memories)?,
        dual_memories: parse_list(&a.dual_memories)?,
        frames: a.frames,
        frame_len: a.frame_len,
        repeats: a.repeats,
        min_time: a.min_time,
        rounds: a.rounds,
        seed: a.seed,
        fft_field,
    };
    let report = bench_complexity(&opts)?;
    let csv = report.to_csv();
    print!("{csv}");
    if let Some(p) = &a.out {
        write_file(p, &csv)?;
    }
    if report.rows.is_empty() {
        return Ok(());
    }
    let q = report.q as f64;
    let mut ok = true;
    if let Some(fit) = report.dual_fit(TransformMode::Direct) {
        let pass = fit.r2 > 0.99;
        ok &= pass;
        eprintln!(
            "dual direct time vs N: slope {:.3e} s, R^2 {:.4} ({})",
            fit.slope,
            fit.r2,
            verdict(pass)
        );
    }
    if let Some(fit) = report.dual_fit(TransformMode::Fast) {
        eprintln!(
            "dual fast time vs N: slope {:.3e} s, R^2 {:.4}",
            fit.slope, fit.r2
        );
    }
    let sparse = report.bcjr_ratios(false);
    let dense = report.bcjr_ratios(true);
    let pass = sparse.iter().all(|&r| r > q / 2.0);
    ok &= pass;
    eprintln!(
        "bcjr growth per register, adjacency kernel: {} ({})",
        ratios(&sparse),
        verdict(pass)
    );
    eprintln!(
        "bcjr growth per register, state-pair kernel: {}",
        ratios(&dense)
    );
    if let Some((fq, direct, fast)) = report.fft_comparison {
        eprintln!("GF({fq}) dual decode: direct {direct:.3e} s, fast {fast:.3e} s per frame");
    }
    if ok {
        Ok(())
    } else {
        Err(Failure(EXIT_VERIFY, "complexity checks failed".into()))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn ratios(v: &[f64]) -> String {
    v.iter()
        .map(|r| format!("x{r:.1}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_file(p: &Path, s: &str) -> Result<(), Failure> {
    fs::write(p, s).map_err(|e| usage(format!("{}: {e}", p.display())))
}
