use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bcjr;
use crate::channel::{add_noise, demap, frame_rng, modulate, ChannelConfig};
use crate::convcode::{encode_frame, CodeSpec, Frame, Trellis};
use crate::dual::{DualDecoder, DualSpec};
use crate::galois::Elem;
use crate::pmf::{Pmf, TransformMode};

use super::{DecoderKind, HarnessError};

pub const CSV_HEADER: [&str; 11] = [
    "code",
    "decoder",
    "ebn0_db",
    "frames",
    "info_bits",
    "bit_errors",
    "symbol_errors",
    "ber",
    "ser",
    "seconds",
    "seed",
];

fn default_frame_len() -> usize {
    256
}

fn default_max_frames() -> Option<u64> {
    Some(20_000)
}

fn default_min_bit_errors() -> Option<u64> {
    Some(200)
}

fn default_batch_size() -> u64 {
    64
}

/// One simulation campaign: a code, a decoder and a list of Eb/N0 points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub code: String,
    pub decoder: DecoderKind,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    pub ebn0_db: Vec<f64>,
    /// Stop after this many frames; `None` for no limit.
    #[serde(default = "default_max_frames")]
    pub max_frames: Option<u64>,
    /// Stop once this many bit errors are counted; `None` for no limit.
    #[serde(default = "default_min_bit_errors")]
    pub min_bit_errors: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub transform_mode: TransformMode,
    /// Frames decoded between stop checks. Results depend on it, worker count does not.
    #[serde(default = "default_batch_size")]
    pub batch_size: u64,
}

impl SimConfig {
    pub fn new(code: &str, decoder: DecoderKind, ebn0_db: Vec<f64>, seed: u64) -> SimConfig {
        SimConfig {
            code: code.to_string(),
            decoder,
            frame_len: default_frame_len(),
            ebn0_db,
            max_frames: default_max_frames(),
            min_bit_errors: default_min_bit_errors(),
            seed,
            transform_mode: TransformMode::Direct,
            batch_size: default_batch_size(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.frame_len == 0 {
            return Err(HarnessError::Config("frame_len must be at least 1".into()));
        }
        if self.max_frames.is_none() && self.min_bit_errors.is_none() {
            return Err(HarnessError::Config(
                "need max_frames or min_bit_errors".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(HarnessError::Config("batch_size must be at least 1".into()));
        }
        if self.ebn0_db.iter().any(|x| x.is_nan()) {
            return Err(HarnessError::Config("Eb/N0 value is NaN".into()));
        }
        Ok(())
    }
}

/// One row of the BER table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub code: String,
    pub decoder: String,
    pub ebn0_db: f64,
    pub frames: u64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub ber: f64,
    pub ser: f64,
    pub seconds: f64,
    pub seed: u64,
    /// Frames whose decoder failed numerically; excluded from the counts.
    #[serde(skip)]
    pub failed_frames: u64,
    /// Eb/N0 after charging the tail symbols to the information bits.
    #[serde(skip)]
    pub effective_ebn0_db: f64,
}

/// Per-configuration decoder state shared by all frames.
pub struct FrameRunner {
    cfg: SimConfig,
    code: CodeSpec,
    dual: DualSpec,
    decoder: DualDecoder,
    trellis: Option<Trellis>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    frames: u64,
    bit_errors: u64,
    symbol_errors: u64,
    failed: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            frames: self.frames + o.frames,
            bit_errors: self.bit_errors + o.bit_errors,
            symbol_errors: self.symbol_errors + o.symbol_errors,
            failed: self.failed + o.failed,
        }
    }
}

/// Seed for one Eb/N0 point, so every decoder sees the same noise at that point.
fn point_seed(seed: u64, ebn0_db: f64) -> u64 {
    let mut z = seed ^ ebn0_db.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl FrameRunner {
    pub fn new(cfg: &SimConfig) -> Result<FrameRunner, HarnessError> {
        cfg.validate()?;
        let code: CodeSpec = cfg.code.parse()?;
        if !code.field().q().is_power_of_two() {
            return Err(HarnessError::Config(format!(
                "BPSK simulation needs q = 2^m, got {}",
                code.field()
            )));
        }
        let dual = DualSpec::from_code(&code)?;
        let mode = match cfg.decoder {
            DecoderKind::DualFft => TransformMode::Fast,
            _ => cfg.transform_mode,
        };
        let decoder = DualDecoder::new(&dual).with_transform_mode(mode);
        let trellis = match cfg.decoder {
            DecoderKind::Bcjr => Some(bcjr::reference_trellis(&dual)?),
            _ => None,
        };
        Ok(FrameRunner {
            cfg: cfg.clone(),
            code,
            dual,
            decoder,
            trellis,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn dual(&self) -> &DualSpec {
        &self.dual
    }

    /// Information-symbol pmfs for every position of the frame, tail included.
    pub fn decode(&self, pmfs: &[Pmf]) -> Result<Vec<Pmf>, HarnessError> {
        Ok(match self.cfg.decoder {
            DecoderKind::Bcjr => bcjr::posteriors(self.trellis.as_ref().unwrap(), pmfs)?,
            DecoderKind::DualCombined | DecoderKind::DualFft => {
                self.decoder.combine_decode(pmfs)?
            }
            DecoderKind::DualFbProduct => self.decoder.fb_output_product(pmfs)?,
            DecoderKind::DualForwardOnly => self.decoder.forward_decode(pmfs, false)?.0,
        })
    }

    /// Transmits and decodes frame `index` at `ebn0_db`; returns the frame and
    /// hard decisions on its L information symbols.
    pub fn run_frame(&self, ebn0_db: f64, index: u64) -> Result<(Frame, Vec<Elem>), HarnessError> {
        let q = self.code.field().q();
        let len = self.cfg.frame_len;
        let mut rng = frame_rng(point_seed(self.cfg.seed, ebn0_db), index);
        let info: Vec<Elem> = (0..len)
            .map(|_| Elem(rng.random_range(0..q) as u8))
            .collect();
        let frame = encode_frame(&self.dual, &info)?;
        let ch = ChannelConfig::bpsk(q, ebn0_db, len, self.dual.memory())?;
        let mut y = modulate(q, &frame.code)?;
        add_noise(&mut y, ch.sigma, &mut rng);
        let pmfs = demap(q, &y, ch.sigma)?;
        let post = self.decode(&pmfs)?;
        Ok((frame, bcjr::hard_decisions(&post[..len])))
    }

    fn tally_frame(&self, ebn0_db: f64, index: u64) -> Tally {
        match self.run_frame(ebn0_db, index) {
            Ok((frame, dec)) => {
                let mut t = Tally {
                    frames: 1,
                    ..Tally::default()
                };
                for (a, b) in frame.info.iter().zip(&dec) {
                    let diff = a.0 ^ b.0;
                    t.bit_errors += diff.count_ones() as u64;
                    t.symbol_errors += (diff != 0) as u64;
                }
                t
            }
            Err(_) => Tally {
                frames: 1,
                failed: 1,
                ..Tally::default()
            },
        }
    }
}

/// Simulates one Eb/N0 point until a stop criterion is met.
pub fn run_point(runner: &FrameRunner, ebn0_db: f64) -> Result<BerRecord, HarnessError> {
    let cfg = runner.config();
    let start = Instant::now();
    let mut total = Tally::default();
    let mut next = 0u64;
    loop {
        let done_frames = cfg.max_frames.is_some_and(|m| next >= m);
        let done_errors = cfg.min_bit_errors.is_some_and(|e| total.bit_errors >= e);
        if done_frames || done_errors {
            break;
        }
        let end = match cfg.max_frames {
            Some(m) => (next + cfg.batch_size).min(m),
            None => next + cfg.batch_size,
        };
        let batch = (next..end)
            .into_par_iter()
            .map(|i| runner.tally_frame(ebn0_db, i))
            .reduce(Tally::default, Tally::merge);
        total = total.merge(batch);
        next = end;
    }
    let q = runner.code.field().q();
    let bits_per_symbol = q.trailing_zeros() as u64;
    let good = total.frames - total.failed;
    let info_symbols = good * cfg.frame_len as u64;
    let info_bits = info_symbols * bits_per_symbol;
    let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let ch = ChannelConfig::bpsk(q, ebn0_db, cfg.frame_len, runner.dual.memory())?;
    Ok(BerRecord {
        code: runner.code.to_string(),
        decoder: cfg.decoder.to_string(),
        ebn0_db,
        frames: total.frames,
        info_bits,
        bit_errors: total.bit_errors,
        symbol_errors: total.symbol_errors,
        ber: ratio(total.bit_errors, info_bits),
        ser: ratio(total.symbol_errors, info_symbols),
        seconds: start.elapsed().as_secs_f64(),
        seed: cfg.seed,
        failed_frames: total.failed,
        effective_ebn0_db: ch.effective_ebn0_db(),
    })
}

/// All points of a configuration, in the order given.
pub fn run_simulation(cfg: &SimConfig) -> Result<Vec<BerRecord>, HarnessError> {
    let runner = FrameRunner::new(cfg)?;
    cfg.ebn0_db.iter().map(|&e| run_point(&runner, e)).collect()
}

fn sort_key(r: &BerRecord) -> (String, String, u64) {
    // total order on f64 that matches numeric order for finite values
    let bits = r.ebn0_db.to_bits();
    let key = if r.ebn0_db.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    };
    (r.code.clone(), r.decoder.clone(), key)
}

/// Writes `records` to `path`, merging with rows already in the file. A new row
/// replaces an old one with the same (code, decoder, Eb/N0). Rows end up sorted.
pub fn write_csv(path: &Path, records: &[BerRecord]) -> Result<Vec<BerRecord>, HarnessError> {
    let mut rows: BTreeMap<(String, String, u64), BerRecord> = BTreeMap::new();
    if path.exists() {
        let mut rd = csv::Reader::from_path(path)?;
        for r in rd.deserialize() {
            let r: BerRecord = r?;
            rows.insert(sort_key(&r), r);
        }
    }
    for r in records {
        rows.insert(sort_key(r), r.clone());
    }
    let mut wr = csv::Writer::from_path(path)?;
    for r in rows.values() {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(rows.into_values().collect())
}

/// A gnuplot script with the data inlined, one curve per (code, decoder).
pub fn gnuplot_script(records: &[BerRecord], title: &str) -> String {
    let mut series: BTreeMap<(String, String), Vec<&BerRecord>> = BTreeMap::new();
    for r in records {
        series
            .entry((r.code.clone(), r.decoder.clone()))
            .or_default()
            .push(r);
    }
    let mut s = String::new();
    let _ = writeln!(s, "# BER curves; stop rule and seeds are in the CSV rows.");
    let _ = writeln!(s, "set title {title:?}");
    let _ = writeln!(s, "set xlabel \"Eb/N0 (dB)\"\nset ylabel \"BER\"\nset logscale y\nset grid\nset key bottom left");
    let mut plots = Vec::new();
    for (i, ((code, dec), rows)) in series.iter().enumerate() {
        let _ = writeln!(s, "$d{i} << EOD");
        for r in rows.iter().filter(|r| r.ber > 0.0) {
            let _ = writeln!(s, "{} {:e}", r.ebn0_db, r.ber);
        }
        let _ = writeln!(s, "EOD");
        plots.push(format!(
            "$d{i} using 1:2 with linespoints title {:?}",
            format!("{code} {dec}")
        ));
    }
    if !plots.is_empty() {
        let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    }
    s
}
