use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oscflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_disk(path: &Path, size: usize, r: f64) {
    let c = size as f64 / 2.0;
    let px: Vec<u8> = (0..size * size)
        .map(|i| {
            let (x, y) = ((i % size) as f64 + 0.5 - c, (i / size) as f64 + 0.5 - c);
            if x * x + y * y <= r * r {
                0
            } else {
                255
            }
        })
        .collect();
    let mut bytes = format!("P5\n{size} {size}\n255\n").into_bytes();
    bytes.extend(px);
    fs::write(path, bytes).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evolve_writes_frames_diagnostics_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("disk.pgm");
    let out = dir.path().join("run");
    write_disk(&input, 64, 16.0);
    let r = oscflow(&[
        "evolve",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--energy",
        "osc",
        "--rho",
        "4",
        "--h",
        "4",
        "--steps",
        "20",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for k in 0..=20 {
        assert!(out.join(format!("frame_{k:05}.pgm")).exists(), "frame {k}");
    }
    let diag = fs::read_to_string(out.join("diag.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(
        lines.next(),
        Some("step,time,energy,area,radius,sup_change")
    );
    let radii: Vec<f64> = lines
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(radii.len(), 20);
    assert!(radii.windows(2).all(|w| w[1] <= w[0]), "{radii:?}");
    assert!(radii[19] < radii[0]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    for key in ["rho=4", "h=4", "steps=20", "n_levels=64", "frames=21"] {
        assert!(manifest.lines().any(|l| l == key), "missing {key}");
    }
}

#[test]
fn zero_steps_echo_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("disk.pgm");
    let out = dir.path().join("run");
    write_disk(&input, 24, 6.0);
    let r = oscflow(&[
        "evolve",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--steps",
        "0",
    ]);
    assert_eq!(code(&r), 0);
    assert_eq!(
        fs::read(out.join("frame_00000.pgm")).unwrap(),
        fs::read(&input).unwrap()
    );
    assert_eq!(
        fs::read_to_string(out.join("diag.csv")).unwrap(),
        "step,time,energy,area,radius,sup_change\n"
    );
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("disk.pgm");
    write_disk(&input, 32, 9.0);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = oscflow(&[
            "evolve",
            "--input",
            s(&input),
            "--output",
            s(&out),
            "--h",
            "3",
            "--steps",
            "3",
            "--mode",
            "set",
        ]);
        assert_eq!(code(&r), 0);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["frame_00003.pgm", "diag.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn ill_formed_images_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P7 nonsense").unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        code(&oscflow(&[
            "evolve",
            "--input",
            s(&bad),
            "--output",
            s(&out)
        ])),
        2
    );
    let missing = dir.path().join("missing.pgm");
    assert_eq!(
        code(&oscflow(&[
            "evolve",
            "--input",
            s(&missing),
            "--output",
            s(&out)
        ])),
        2
    );
}

#[test]
fn parameter_violations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("disk.pgm");
    write_disk(&input, 16, 4.0);
    let out = dir.path().join("run");
    assert_eq!(
        code(&oscflow(&[
            "evolve",
            "--input",
            s(&input),
            "--output",
            s(&out),
            "--h",
            "-1"
        ])),
        3
    );
    assert_eq!(
        code(&oscflow(&[
            "evolve",
            "--input",
            s(&input),
            "--output",
            s(&out),
            "--rho",
            "0.5"
        ])),
        3
    );
    assert_eq!(
        code(&oscflow(&[
            "evolve",
            "--input",
            s(&input),
            "--output",
            s(&out),
            "--bogus",
            "1"
        ])),
        3
    );
    assert_eq!(code(&oscflow(&["check", "--suite", "nope"])), 3);
    assert!(!out.exists(), "no output before parameters are validated");
}

#[test]
fn blank_compare_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pgm");
    let mut bytes = b"P5\n8 8\n255\n".to_vec();
    bytes.extend([255u8; 64]);
    fs::write(&blank, bytes).unwrap();
    assert_eq!(
        code(&oscflow(&[
            "compare",
            "--input",
            s(&blank),
            "--output",
            s(&dir.path().join("c"))
        ])),
        4
    );
}

#[test]
fn compare_writes_side_by_side_frames_and_survival() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let r = oscflow(&[
        "compare",
        "--output",
        s(&out),
        "--size",
        "48",
        "--period",
        "6",
        "--pattern-radius",
        "14",
        "--h",
        "1",
        "--rho",
        "4",
        "--max-steps",
        "20",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(stdout(&r).contains("survival ratio"));
    assert!(fs::read(out.join("frame_00000.pgm"))
        .unwrap()
        .starts_with(b"P5\n96 48\n255\n"));
    let csv = fs::read_to_string(out.join("survival.csv")).unwrap();
    assert!(csv.starts_with("component,size,tv_extinction_step,osc_extinction_step\n"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn ball_reports_deviation_and_honours_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let args = [
        "ball",
        "--output",
        s(&out),
        "--size",
        "48",
        "--r0",
        "12",
        "--h",
        "4",
        "--steps",
        "4",
    ];
    let r = oscflow(&args);
    assert_eq!(code(&r), 0, "{}", stdout(&r));
    assert!(stdout(&r).contains("max deviation"));
    let csv = fs::read_to_string(out.join("ball.csv")).unwrap();
    assert!(csv.starts_with("step,time,r_discrete_minus,r_discrete_plus,r_ode\n"));
    let strict = oscflow(&[&args[..], &["--tolerance", "1e-9"]].concat());
    assert_eq!(code(&strict), 1);
}

#[test]
fn sub_cell_ball_is_extinct_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let r = oscflow(&[
        "ball",
        "--output",
        s(&dir.path().join("b")),
        "--size",
        "32",
        "--r0",
        "0.4",
    ]);
    assert_eq!(code(&r), 0);
    assert!(stdout(&r).contains("note:"));
}

#[test]
fn check_prints_tap_and_fails_fast_on_a_zero_quantum() {
    let r = oscflow(&["check", "--suite", "energy"]);
    assert_eq!(code(&r), 0);
    let out = stdout(&r);
    assert!(out.starts_with("TAP version 13\n"));
    assert!(out.lines().filter(|l| l.starts_with("ok ")).count() >= 1);
    assert!(out.lines().all(|l| !l.starts_with("not ok")));

    let r = oscflow(&["check", "--quantum", "0"]);
    assert_eq!(code(&r), 1);
    assert!(stdout(&r).contains("Bail out!"));
}

#[test]
fn thread_count_must_be_positive() {
    let r = Command::new(env!("CARGO_BIN_EXE_oscflow"))
        .args(["check", "--suite", "energy"])
        .env("OSCFLOW_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&r), 3);
}

#[test]
fn a_single_blob_survives_equally_under_both_flows() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("blob.pgm");
    write_disk(&input, 64, 12.0);
    let out = dir.path().join("c");
    let r = oscflow(&[
        "compare",
        "--input",
        s(&input),
        "--output",
        s(&out),
        "--h",
        "4",
        "--rho",
        "6",
        "--mode",
        "function",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let line = stdout(&r)
        .lines()
        .find(|l| l.starts_with("survival ratio"))
        .unwrap()
        .to_string();
    let ratio: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(line.contains(" = ") && (ratio - 1.0).abs() <= 0.3, "{line}");
}
