use std::path::Path;
use std::process::{Command, Output};

fn stego(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stego"))
        .current_dir(dir)
        .env_remove("STEGO_SEED")
        .args(args)
        .output()
        .expect("spawn stego")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stego(dir, args);
    assert!(
        out.status.success(),
        "stego {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn records_and_secrets(dir: &Path) {
    ok(dir, &["synth-records", "--count", "40", "--seed", "2", "--out", "r.csv"]);
    ok(
        dir,
        &[
            "fit-schema", "--csv", "r.csv", "--categorical", "vendor,region,currency", "--numeric", "amount:8",
            "--out", "s.txt",
        ],
    );
    ok(
        dir,
        &[
            "encode-data", "--csv", "r.csv", "--schema", "s.txt", "--out-dir", "sec", "--height", "16", "--width",
            "16", "--records-per-image", "3",
        ],
    );
}

#[test]
fn decoding_untouched_secrets_reproduces_canonical_records() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    records_and_secrets(dir);
    ok(
        dir,
        &["decode-data", "--schema", "s.txt", "--manifest", "sec/manifest.csv", "--images-dir", "sec", "--out", "d.csv"],
    );
    let decoded = std::fs::read_to_string(dir.join("d.csv")).unwrap();
    let lines: Vec<&str> = decoded.lines().collect();
    assert_eq!(lines[0], "vendor,region,currency,amount");
    assert_eq!(lines.len(), 41);
    let original = std::fs::read_to_string(dir.join("r.csv")).unwrap();
    let first: Vec<&str> = original.lines().nth(1).unwrap().split(',').collect();
    assert!(lines[1].starts_with(&format!("{},", first[0])));
}

#[test]
fn identity_backend_reports_degenerate_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    records_and_secrets(dir);
    ok(dir, &["synth-covers", "--count", "4", "--height", "16", "--width", "16", "--out-dir", "cov"]);
    let csv = ok(
        dir,
        &[
            "evaluate", "--backend", "identity", "--set", "height=16", "--set", "width=16", "--set", "secrets_dir=sec",
            "--set", "cover_dir=cov", "--set", "eval_pairs=5",
        ],
    );
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",inf,1,1"), "{row}");
}

#[test]
fn lsb_commands_round_trip_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth-covers", "--count", "1", "--height", "16", "--width", "16", "--out-dir", "cov"]);
    std::fs::write(dir.join("p.bin"), b"ledger row 17: 4213.50 EUR").unwrap();
    for bits in ["1", "2"] {
        ok(dir, &["lsb", "embed", "--cover", "cov/cover_00000.png", "--payload", "p.bin", "--out", "c.png", "--bits", bits]);
        ok(dir, &["lsb", "extract", "--container", "c.png", "--bytes", "26", "--out", "back.bin", "--bits", bits]);
        assert_eq!(std::fs::read(dir.join("back.bin")).unwrap(), std::fs::read(dir.join("p.bin")).unwrap());
    }
}

#[test]
fn usage_errors_exit_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cases: [&[&str]; 4] = [
        &["no-such-command"],
        &["train", "--set", "no_such_key=1"],
        &["embed", "--checkpoint", "missing.ckpt", "--secrets-dir", ".", "--cover-dir", ".", "--out-dir", "o"],
        &["decode-data", "--schema", "missing.txt", "--manifest", "m.csv", "--images-dir", ".", "--out", "x.csv"],
    ];
    for args in cases {
        let out = stego(dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn synthetic_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth-records", "--count", "25", "--seed", "9", "--out", "a.csv"]);
    ok(dir, &["synth-records", "--count", "25", "--seed", "9", "--out", "b.csv"]);
    assert_eq!(std::fs::read(dir.join("a.csv")).unwrap(), std::fs::read(dir.join("b.csv")).unwrap());
}
