//! End-to-end tests of the binary: fixture round trips, exit codes, JSON
//! determinism, and seed precedence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_abl-lab"));
    // Tests control the seed environment explicitly.
    cmd.env_remove("ABL_LAB_SEED");
    cmd.env_remove("ABL_LAB_INJECT_FAULT");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

#[test]
fn exact_on_spin_fixture_prints_quarter_rows() {
    let out = bin()
        .arg("exact")
        .arg(fixture("spin_zxyz.protocol"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert_eq!(text.matches("0.25").count(), 4, "four quarter rows:\n{text}");
    assert!(text.contains("total: 1.0"), "{text}");
}

#[test]
fn exact_json_has_schema_and_probabilities() {
    let out = bin()
        .arg("--json")
        .arg("exact")
        .arg(fixture("spin_zxyz.protocol"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row["probability"], 0.25);
    }
}

#[test]
fn mc_json_is_deterministic_for_a_seed() {
    let run = || {
        let out = bin()
            .arg("--json")
            .arg("mc")
            .arg(fixture("spin_zxyz.protocol"))
            .args(["--n", "2000", "--seed", "42"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run(), run(), "same seed must reproduce bytes");
}

#[test]
fn mc_serial_and_parallel_agree_byte_for_byte() {
    let run = |serial: bool| {
        let mut cmd = bin();
        cmd.arg("--json")
            .arg("mc")
            .arg(fixture("spin_zxyz.protocol"))
            .args(["--n", "2000", "--seed", "42"]);
        if serial {
            cmd.arg("--serial");
        }
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run(false), run(true));
}

#[test]
fn mc_seed_changes_counts() {
    let counts = |seed: &str| {
        let out = bin()
            .arg("--json")
            .arg("mc")
            .arg(fixture("spin_zxyz.protocol"))
            .args(["--n", "2000", "--seed", seed])
            .output()
            .unwrap();
        let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        doc["rows"].to_string()
    };
    assert_ne!(counts("1"), counts("2"));
}

#[test]
fn seed_precedence_is_flag_env_file_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seeded.protocol");
    std::fs::write(
        &path,
        "schema 1\ndim 2\nobservable pauli_z: builtin\nobservable pauli_x: builtin\n\
         pre: pauli_z = +1\nintermediates: pauli_x\npost: pauli_z = -1\n\
         mc:\n  n_trials 100\n  seed 11\n",
    )
    .unwrap();
    let seed_line = |cmd: &mut Command| {
        let out = cmd.output().unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        (doc["seed"].as_u64().unwrap(), doc["n_total"].as_u64().unwrap())
    };

    let from_file = seed_line(bin().arg("--json").arg("mc").arg(&path));
    assert_eq!(from_file, (11, 100), "mc block supplies both defaults");

    let from_env = seed_line(bin().arg("--json").arg("mc").arg(&path).env("ABL_LAB_SEED", "77"));
    assert_eq!(from_env.0, 77, "environment beats the file");

    let from_flag = seed_line(
        bin()
            .arg("--json")
            .arg("mc")
            .arg(&path)
            .args(["--seed", "5"])
            .env("ABL_LAB_SEED", "77"),
    );
    assert_eq!(from_flag.0, 5, "flag beats the environment");

    let fallback = seed_line(
        bin()
            .arg("--json")
            .arg("mc")
            .arg(fixture("spin_zxyz.protocol"))
            .args(["--n", "100"]),
    );
    assert_eq!(fallback.0, 0, "no flag, env, or file block defaults to 0");
}

#[test]
fn bad_env_seed_is_a_validation_error() {
    let out = bin()
        .arg("mc")
        .arg(fixture("spin_zxyz.protocol"))
        .args(["--n", "10"])
        .env("ABL_LAB_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("ABL_LAB_SEED"));
}

#[test]
fn no_postselect_keeps_every_preselected_trial() {
    let out = bin()
        .arg("--json")
        .arg("mc")
        .arg(fixture("aad_zz.protocol"))
        .args(["--n", "4000", "--seed", "1", "--no-postselect"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["post_selected"], false);
    assert_eq!(doc["n_selected"], doc["n_preselected"]);
    // The designated sequence lands near the forward value 1/2, far from
    // the post-selected certainty 1.
    let rows = doc["rows"].as_array().unwrap();
    let plus = rows
        .iter()
        .find(|r| r["labels"][0] == "+1")
        .expect("+1 row present");
    let ratio = plus["ratio"].as_f64().unwrap();
    assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn missing_file_exits_2() {
    let out = bin().arg("exact").arg("/no/such/file.protocol").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_protocol_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.protocol");
    std::fs::write(&path, "schema 1\ndim 2\nnonsense here\n").unwrap();
    let out = bin().arg("exact").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn impossible_post_selection_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("impossible.protocol");
    std::fs::write(
        &path,
        "schema 1\ndim 2\nobservable pauli_z: builtin\n\
         pre: pauli_z = +1\nintermediates:\npost: pauli_z = -1\n",
    )
    .unwrap();
    let out = bin().arg("exact").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("impossible post-selection"));
}

#[test]
fn mc_reports_undefined_ratios_instead_of_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("impossible.protocol");
    std::fs::write(
        &path,
        "schema 1\ndim 2\nobservable pauli_z: builtin\n\
         pre: pauli_z = +1\nintermediates:\npost: pauli_z = -1\n",
    )
    .unwrap();
    let out = bin()
        .arg("--json")
        .arg("mc")
        .arg(&path)
        .args(["--n", "50", "--seed", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["n_selected"], 0);
    for row in doc["rows"].as_array().unwrap() {
        assert!(row["ratio"].is_null());
        assert!(row["exact"].is_null());
    }
}

#[test]
fn aad_needs_exactly_one_intermediate() {
    let out = bin().arg("aad").arg(fixture("spin_zxyz.protocol")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("exactly one intermediate"));
}

#[test]
fn aad_shows_certainty_for_both_fixtures() {
    for name in ["aad_xx.protocol", "aad_zz.protocol"] {
        let out = bin().arg("--json").arg("aad").arg(fixture(name)).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        assert_eq!(doc["distinct_ensembles"], true);
        let branches = doc["branches"].as_array().unwrap();
        assert_eq!(branches.len(), 3);
        // The repeated-observable branches designate an outcome that is
        // certain under post-selection.
        for branch in &branches[1..] {
            let designated = branch["rows"]
                .as_array()
                .unwrap()
                .iter()
                .find(|r| r["designated"] == true)
                .expect("designated row");
            assert_eq!(designated["selected"], 1.0);
        }
    }
}

#[test]
fn unknown_fallacy_exits_2_and_lists_known_names() {
    let out = bin().arg("fallacy").arg("nosuch").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    for name in ["berkson", "coins", "shutter", "boxes"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn fallacy_json_reports_schema_and_counts() {
    let out = bin()
        .arg("--json")
        .arg("fallacy")
        .arg("berkson")
        .args(["--n", "500", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["scenario"], "berkson");
    assert_eq!(doc["n_trials"], 500);
    assert!(doc["counts"].as_array().unwrap().len() >= 3);
    assert!(doc.get("distinct_ensembles").is_none(), "only boxes sets the flag");
    let boxes = bin()
        .arg("--json")
        .arg("fallacy")
        .arg("boxes")
        .args(["--n", "500", "--seed", "3"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&boxes)).unwrap();
    assert_eq!(doc["distinct_ensembles"], true);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .arg("--json")
        .arg("--out")
        .arg(&path)
        .arg("exact")
        .arg(fixture("spin_zxyz.protocol"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).is_empty(), "report goes to the file only");
    let written = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(doc["schema"], 1);
}

#[test]
fn verify_zero_instances_warns_vacuous() {
    let out = bin().arg("verify").args(["--instances", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("vacuous"), "{text}");
}

#[test]
fn verify_passes_and_reports_every_check() {
    let out = bin()
        .arg("--json")
        .arg("verify")
        .args(["--dims", "2,3", "--max-n", "2", "--instances", "40", "--seed", "6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["all_passed"], true);
    let names: Vec<&str> = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "normalization",
            "reverse_ordering",
            "psi_independence",
            "bayes",
            "marginalization",
            "oracle_equivalence",
            "robertson"
        ]
    );
}

#[test]
fn injected_fault_exits_4_with_replay_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .arg("verify")
        .args(["--instances", "10", "--seed", "0"])
        .env("ABL_LAB_INJECT_FAULT", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout_of(&out).contains("VERIFICATION FAILED"));
    let replay = dir.path().join("injected_fault_failure.replay");
    let text = std::fs::read_to_string(&replay).expect("replay file written");
    assert!(text.starts_with("schema 1"), "replay is a protocol file:\n{text}");
}

#[test]
fn uncertainty_fixture_saturates_the_bound() {
    let out = bin()
        .arg("uncertainty")
        .arg(fixture("sigma_xy_zplus.uncertainty"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("bound satisfied:             yes"), "{text}");
    assert!(text.contains("slack (product - bound):     0.0"), "{text}");
}

#[test]
fn uncertainty_sweep_reports_zero_violations() {
    let out = bin()
        .arg("--json")
        .arg("uncertainty")
        .arg(fixture("sigma_xy_zplus.uncertainty"))
        .args(["--sweep", "--instances", "100", "--seed", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["sweep"]["violations"], 0);
    assert_eq!(doc["sweep"]["instances"], 100);
}
