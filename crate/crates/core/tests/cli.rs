use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn htp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_htp"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/sts_sample.tsv")
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn binary_vector_pipes_into_decode() {
    for token in ["harmonic", "naïve", "日本語", "🦀rust"] {
        let encoded = run(htp().args(["encode", "--token", token]));
        assert_eq!(&encoded.stdout[..8], b"HTPVEC01");

        let mut child = htp()
            .args(["decode", "--vector-file", "-"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(&encoded.stdout).unwrap();
        let decoded = child.wait_with_output().unwrap();
        assert!(decoded.status.success());
        assert_eq!(String::from_utf8(decoded.stdout).unwrap().trim_end(), token);
    }
}

#[test]
fn fingerprint_goes_to_stderr() {
    let out = run(htp().args(["sim", "a cat", "a dog"]));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr.lines().find(|l| l.starts_with("config fingerprint: ")).unwrap();
    assert_eq!(line.len(), "config fingerprint: ".len() + 16);
}

fn eval_report(extra: &[&str], dir: &Path, tag: &str) -> (serde_json::Value, String) {
    let scores = dir.join(format!("{tag}.scores"));
    let out = run(htp()
        .args(["eval", "--json", "--input"])
        .arg(fixture())
        .args(extra)
        .arg("--scores")
        .arg(&scores));
    let mut report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = report.as_object_mut().unwrap();
    assert!(obj.remove("latency_ms").is_some());
    obj.remove("threads");
    (report, std::fs::read_to_string(scores).unwrap())
}

#[test]
fn repeated_evals_agree_except_latency() {
    let dir = tempfile::tempdir().unwrap();
    let a = eval_report(&["--threads", "1"], dir.path(), "a");
    let b = eval_report(&["--threads", "1"], dir.path(), "b");
    let c = eval_report(&["--threads", "3"], dir.path(), "c");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.0["n_pairs"], 40);
    assert_eq!(a.1.lines().count(), 40);
}

#[test]
fn explicit_columns_and_simple_layout() {
    let dir = tempfile::tempdir().unwrap();
    let default = eval_report(&[], dir.path(), "default");
    let explicit = eval_report(&["--columns", "5,6,4"], dir.path(), "explicit");
    assert_eq!(default, explicit);

    // same pairs rewritten as sentence1, sentence2, score
    let text = std::fs::read_to_string(fixture()).unwrap();
    let simple: String = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            format!("{}\t{}\t{}\n", f[5], f[6], f[4])
        })
        .collect();
    let path = dir.path().join("simple.tsv");
    std::fs::write(&path, simple).unwrap();
    let out = run(htp().args(["eval", "--json", "--simple", "--input"]).arg(&path));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rho"], default.0["rho"]);
    assert_eq!(report["r"], default.0["r"]);
}

#[test]
fn bad_columns_are_usage_errors() {
    let out = htp()
        .args(["eval", "--columns", "1,2"])
        .arg("--input")
        .arg(fixture())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_is_a_data_error() {
    let out = htp()
        .args(["eval", "--input", "/no/such/file.tsv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
