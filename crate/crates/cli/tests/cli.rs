use std::path::PathBuf;
use std::process::{Command, Output};

fn gfdual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gfdual"))
        .args(args)
        .output()
        .unwrap()
}

fn temp_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gfdual-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn codes_lists_the_builtins() {
    let o = gfdual(&["codes"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
    assert!(stdout(&o).contains("gf4:(1+3x+2x^2)/(1+x+2x^2)"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["frobnicate"][..],
        &["simulate", "--code", "gf4:(1+x)"],
        &[
            "simulate",
            "--code",
            "gf4:(1+x)",
            "--seed",
            "1",
            "--decoder",
            "viterbi",
        ],
        &["encode", "--code", "gf4:(1+x", "--info", "1"],
        &["encode", "--code", "gf4:(1+x)", "--info", "4"],
        &["verify"],
    ] {
        let o = gfdual(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn simulate_writes_seven_points() {
    let dir = temp_dir("sim");
    let out = dir.join("ber.csv");
    let args = [
        "simulate",
        "--code",
        "gf4:(1+x)",
        "--decoder",
        "dual-combined",
        "--ebn0",
        "0:6:1",
        "--frames",
        "40",
        "--frame-len",
        "64",
        "--seed",
        "7",
        "--out",
    ];
    let o = gfdual(&[&args[..], &[out.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "code,decoder,ebn0_db,frames,info_bits,bit_errors,symbol_errors,ber,ser,seconds,seed"
    );
    assert_eq!(lines.count(), 7);
    let gp = std::fs::read_to_string(dir.join("ber.gp")).unwrap();
    assert!(gp.contains("set logscale y"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_output_ignores_thread_count() {
    let dir = temp_dir("threads");
    let run = |threads: &str, name: &str| {
        let out = dir.join(name);
        let o = gfdual(&[
            "simulate",
            "--code",
            "gf4:(1+x+2x^2)",
            "--ebn0",
            "1,2",
            "--frames",
            "64",
            "--frame-len",
            "32",
            "--seed",
            "3",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        // the seconds column is wall time
        std::fs::read_to_string(out)
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(9);
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run("1", "a.csv"), run("3", "b.csv"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn config_file_rejects_unknown_keys() {
    let dir = temp_dir("cfg");
    let good = dir.join("good.json");
    std::fs::write(
        &good,
        r#"{"code":"gf4:(1+x)","decoder":"bcjr","ebn0_db":[3.0],"seed":1,"max_frames":10}"#,
    )
    .unwrap();
    let o = gfdual(&[
        "simulate",
        "--config",
        good.to_str().unwrap(),
        "--frame-len",
        "16",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("gf4:(1+x),bcjr,3,10,320,"));
    let bad = dir.join("bad.json");
    std::fs::write(
        &bad,
        r#"{"code":"gf4:(1+x)","decoder":"bcjr","ebn0_db":[3.0],"seed":1,"colour":"red"}"#,
    )
    .unwrap();
    let o = gfdual(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn decode_round_trip() {
    let dir = temp_dir("decode");
    let enc = gfdual(&[
        "encode",
        "--code",
        "gf4:(1+x)/(1+2x)",
        "--info",
        "1,2,3,0,2",
    ]);
    assert!(enc.status.success());
    let text = stdout(&enc);
    let code: Vec<usize> = text.lines().next().unwrap()["code: ".len()..]
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    let pmfs: Vec<Vec<f64>> = code
        .iter()
        .map(|&c| (0..4).map(|i| if i == c { 0.7 } else { 0.1 }).collect())
        .collect();
    let input = dir.join("frame.json");
    std::fs::write(&input, format!("{{\"pmfs\": {pmfs:?}}}")).unwrap();
    for decoder in ["bcjr", "dual-combined", "dual-fft"] {
        let o = gfdual(&[
            "decode",
            "--code",
            "gf4:(1+x)/(1+2x)",
            "--pmfs-in",
            input.to_str().unwrap(),
            "--decoder",
            decoder,
        ]);
        assert!(o.status.success(), "{decoder}");
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let d: Vec<u64> = v["decisions"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_u64().unwrap())
            .collect();
        assert_eq!(&d[..5], &[1, 2, 3, 0, 2], "{decoder}");
        assert_eq!(v["posteriors"].as_array().unwrap().len(), code.len());
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_single_code_passes() {
    let o = gfdual(&["verify", "--code", "gf4:(1+x+2x^2)", "--frames", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pass"));
}

#[test]
fn bench_with_no_frames_is_empty() {
    let o = gfdual(&["bench", "--frames", "0"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
