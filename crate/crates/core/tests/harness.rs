mod common;

use std::path::PathBuf;

use common::*;
use gfdual::galois::Elem;
use gfdual::harness::{
    run_point, run_simulation, verify_dual, write_csv, DecoderKind, FrameRunner, SimConfig,
    VerifyOptions, CSV_HEADER,
};

fn config(code: &str, decoder: DecoderKind, ebn0: Vec<f64>) -> SimConfig {
    let mut c = SimConfig::new(code, decoder, ebn0, 7);
    c.frame_len = 64;
    c.max_frames = Some(96);
    c.min_bit_errors = Some(40);
    c.batch_size = 16;
    c
}

fn temp_path(name: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("gfdual-{}-{name}", std::process::id()));
    let _ = std::fs::remove_file(&p);
    p
}

#[test]
fn noiseless_channel_has_no_errors() {
    for kind in DecoderKind::ALL {
        let runner = FrameRunner::new(&config("gf4:(1+x)/(1+2x)", kind, vec![])).unwrap();
        let r = run_point(&runner, f64::INFINITY).unwrap();
        assert_eq!(
            (r.bit_errors, r.symbol_errors, r.failed_frames),
            (0, 0, 0),
            "{kind}"
        );
        assert_eq!(r.frames, 96);
        assert_eq!(r.info_bits, 96 * 64 * 2);
    }
}

#[test]
fn same_result_for_any_worker_count() {
    let cfg = config("gf4:(1+x+2x^2)", DecoderKind::DualCombined, vec![1.0, 2.0]);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_simulation(&cfg).unwrap())
    };
    let (a, b) = (run(1), run(4));
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(
            (x.frames, x.bit_errors, x.symbol_errors),
            (y.frames, y.bit_errors, y.symbol_errors)
        );
        assert_eq!(x.ber.to_bits(), y.ber.to_bits());
    }
}

#[test]
fn combined_and_bcjr_decide_identically() {
    for code in BUILTIN_CODES {
        let a = FrameRunner::new(&config(code, DecoderKind::DualCombined, vec![])).unwrap();
        let b = FrameRunner::new(&config(code, DecoderKind::Bcjr, vec![])).unwrap();
        for i in 0..20 {
            let (fa, da) = a.run_frame(1.0, i).unwrap();
            let (fb, db) = b.run_frame(1.0, i).unwrap();
            assert_eq!(fa, fb);
            assert_eq!(da, db, "{code} frame {i}");
        }
    }
}

#[test]
fn fft_decoder_decides_like_direct() {
    let a = FrameRunner::new(&config(
        "gf4:(1+3x+2x^2)",
        DecoderKind::DualCombined,
        vec![],
    ))
    .unwrap();
    let b = FrameRunner::new(&config("gf4:(1+3x+2x^2)", DecoderKind::DualFft, vec![])).unwrap();
    for i in 0..20 {
        assert_eq!(
            a.run_frame(0.5, i).unwrap().1,
            b.run_frame(0.5, i).unwrap().1
        );
    }
}

#[test]
fn ber_counts_info_symbols_only() {
    let r = &run_simulation(&config(
        "gf4:(1+x)",
        DecoderKind::DualForwardOnly,
        vec![0.0],
    ))
    .unwrap()[0];
    assert_eq!(r.info_bits, r.frames * 64 * 2);
    assert_eq!(r.ber, r.bit_errors as f64 / r.info_bits as f64);
    assert_eq!(r.ser, r.symbol_errors as f64 / (r.frames * 64) as f64);
    assert!(r.bit_errors >= 40 || r.frames == 96);
}

#[test]
fn csv_columns_and_merge() {
    let path = temp_path("ber.csv");
    let first = run_simulation(&config("gf4:(1+x)", DecoderKind::Bcjr, vec![2.0, 0.0])).unwrap();
    write_csv(&path, &first).unwrap();
    let second = run_simulation(&config("gf4:(1+x)", DecoderKind::Bcjr, vec![1.0, 2.0])).unwrap();
    let merged = write_csv(&path, &second).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "code,decoder,ebn0_db,frames,info_bits,bit_errors,symbol_errors,ber,ser,seconds,seed"
    );
    assert_eq!(CSV_HEADER.join(","), text.lines().next().unwrap());
    let ebn0: Vec<f64> = merged.iter().map(|r| r.ebn0_db).collect();
    assert_eq!(ebn0, vec![0.0, 1.0, 2.0]);
    assert_eq!(lines.count(), 3);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn rejects_bad_configs() {
    let mut c = config("gf4:(1+x)", DecoderKind::Bcjr, vec![0.0]);
    c.max_frames = None;
    c.min_bit_errors = None;
    assert!(FrameRunner::new(&c).is_err());
    let mut c = config("gf4:(1+x)", DecoderKind::Bcjr, vec![0.0]);
    c.frame_len = 0;
    assert!(FrameRunner::new(&c).is_err());
    assert!("dual-sideways".parse::<DecoderKind>().is_err());
}

#[test]
fn corrupted_taps_fail_verification() {
    let opts = VerifyOptions {
        frames: 5,
        ..VerifyOptions::default()
    };
    for code in BUILTIN_CODES {
        let d = dual(code);
        assert!(verify_dual(&d, &d, &opts).unwrap().passed(&opts));
        let mut taps = d.taps().to_vec();
        let f = d.field();
        taps[1] = f.add(taps[1], Elem::ONE);
        let bad = d.with_taps(taps);
        let r = verify_dual(&d, &bad, &opts).unwrap();
        assert!(!r.passed(&opts), "{code}: corrupted taps went unnoticed");
        assert!(r.combined_dev > 1e-3);
    }
}
