use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const D4_P: &str = "1/2,1/4,1/4,0";
const D4_PPRIME: &str = "2/5,2/5,1/10,1/10";

fn cec(args: &[&str], stdin: Option<&str>) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    {
        let mut pipe = child.stdin.take().unwrap();
        if let Some(text) = stdin {
            pipe.write_all(text.as_bytes()).unwrap();
        }
    }
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn entropy_of_a_fair_coin() {
    let out = cec(&["entropy"], Some(r#"{"weights":["1/2","1/2"]}"#));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["shannon"], 1.0);
    assert_eq!(v["rank"], 2);
    assert_eq!(v["h0"], 1.0);
}

#[test]
fn n_epsilon_prints_a_bare_integer() {
    let out = cec(&["n-epsilon", "--d", "2", "--delta", "1/10", "--eps", "1/100"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "7164");
}

#[test]
fn permutation_equivalent_pair_is_a_negative_verdict() {
    let out = cec(&["cec-check", "--p", "1/3,2/3", "--pprime", "2/3,1/3"], None);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["reasons"]
        .as_array()
        .unwrap()
        .contains(&Value::from("permutation-equivalent")));
}

#[test]
fn malformed_json_is_a_usage_error_with_location() {
    let out = cec(&["cec-check"], Some("{\n \"p\": [\"1/2\",\n"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn invalid_distributions_and_flags_are_usage_errors() {
    let out = cec(&["cec-check"], Some(r#"{"p":["1/2","1/3"],"pprime":["1/2","1/2"]}"#));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(cec(&["no-such-command"], None).status.code(), Some(2));
    let out = cec(&["sn-member", "--p", "1/2,1/2", "--n", "1"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resource_caps_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "max_outcomes = 10\nencoding = \"top-k\"\n").unwrap();
    let out = cec(
        &[
            "sn-member",
            "--config",
            cfg.to_str().unwrap(),
            "--p",
            D4_P,
            "--pprime",
            D4_PPRIME,
            "--n",
            "3",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(3));

    std::fs::write(&cfg, "n_max = 1\n").unwrap();
    let out = cec(
        &["find-min-n", "--config", cfg.to_str().unwrap(), "--p", D4_P, "--pprime", D4_PPRIME],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["result"], "exhausted");
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "max_pivots = 0\n").unwrap();
    let out = cec(&["entropy", "--config", cfg.to_str().unwrap(), "--p", "1"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sn_member_and_distance_on_the_fixture_pair() {
    let member = |n: &str| cec(&["sn-member", "--p", D4_P, "--pprime", D4_PPRIME, "--n", n], None);
    assert_eq!(member("1").status.code(), Some(1));
    let out = member("2");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outcome"]["status"], "feasible");

    let out = cec(&["sn-distance", "--p", D4_P, "--pprime", D4_PPRIME, "--n", "1"], None);
    assert_eq!(json(&out)["distance"], "1/20");
}

#[test]
fn certificates_verify_in_a_separate_process() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = cec(&["cec-run", "--p", D4_P, "--pprime", D4_PPRIME, "--out", out_dir], None);
    assert_eq!(out.status.code(), Some(0));
    let report = read(&dir.path().join("cec-run.json"));
    assert_eq!(report["result"], "certificate");
    assert_eq!(report["n"], 2);

    let cert_path = dir.path().join("certificate.json");
    for path in [&cert_path, &dir.path().join("cec-run.json")] {
        let out = cec(&["verify-certificate", "--input", path.to_str().unwrap()], None);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&out)["valid"], true);
    }

    let mut cert = read(&cert_path);
    let flag = &mut cert["marginal_checks"][0]["equals_target"];
    *flag = Value::Bool(false);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, cert.to_string()).unwrap();
    let out = cec(&["verify-certificate", "--input", tampered.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn catalysts_verify_in_a_separate_process() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = cec(
        &["cec-run", "--p", "2/3,1/3", "--pprime", "1/2,1/2", "--catalyst", "--out", out_dir],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let sol_path = dir.path().join("catalyst.json");
    let out = cec(&["verify-catalyst", "--input", sol_path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verification"]["valid"], true);
    assert_eq!(v["mutual_information"]["within_tolerance"], true);

    let mut sol = read(&sol_path);
    let b = sol["bijection"].as_array_mut().unwrap();
    b.swap(0, 2);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, sol.to_string()).unwrap();
    let out = cec(&["verify-catalyst", "--input", tampered.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verification"]["valid"], false);

    let out = cec(
        &["catalyst-search", "--certificate", dir.path().join("certificate.json").to_str().unwrap(), "--all"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let found: Vec<(u64, bool)> = json(&out)["attempts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["register"].as_u64().unwrap(), a["status"] == "found"))
        .collect();
    assert_eq!(
        found,
        vec![(1, false), (2, true), (3, false), (4, true), (6, true), (12, true)]
    );
}

#[test]
fn typicality_curve_emits_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("curve.csv");
    let out = cec(
        &[
            "lemma2-verify",
            "--p",
            "3/4,1/4",
            "--pprime",
            "1/2,1/2",
            "--delta",
            "1/20",
            "--n",
            "100,200",
            "--emit-csv",
            csv.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out).as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("n,eps,hmax_slack,hmin_slack\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn ball_coverage_runs_are_reproducible() {
    let args = ["lemma3-test", "--trials", "40", "--seed", "7", "--threads", "2"];
    let a = cec(&args, None);
    let b = cec(&args, None);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["trials"], 40);
}

#[test]
fn majorize_and_symmetrize() {
    let out = cec(&["majorize", "--p", "1/2,1/2,0", "--pprime", "1/3,1/3,1/3"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["witness"]["steps"].is_array());
    let out = cec(&["majorize", "--p", "1/3,1/3,1/3", "--pprime", "1/2,1/2"], None);
    assert_eq!(out.status.code(), Some(1));

    let state = r#"{"shape":[2,2],"weights":["1/2","1/4","0","1/4"]}"#;
    let out = cec(&["symmetrize"], Some(state));
    assert_eq!(out.status.code(), Some(0));
    let w: Vec<String> = json(&out)["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap().to_string())
        .collect();
    assert_eq!(w, vec!["1/2", "1/8", "1/8", "1/4"]);
}

#[test]
fn smooth_entropy_single_and_iid() {
    let out = cec(&["smooth-entropy", "--p", "1/2,1/4,1/4", "--eps", "1/4"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["max_support"], 2);
    let out = cec(&["smooth-entropy", "--p", "3/4,1/4", "--eps", "1/10", "--n", "20"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["hmax"].as_f64().unwrap() > json(&out)["hmin"].as_f64().unwrap());
}
