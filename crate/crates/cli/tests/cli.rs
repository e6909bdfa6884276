use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ldp-drift"))
}

fn repo_config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &str = r#"{
  "model": {"kind": "sine"},
  "a": 2,
  "alpha": {"kind": "constant", "value": 2.0},
  "ladder": [{"n_paths": 60, "n_steps": 30, "grid_len": 5}],
  "random_grid": true,
  "replications": 12,
  "sigma0_replications": 200,
  "reference_draws": 5000,
  "seed": 4
}"#;

fn tiny_config(dir: &Path, extra: Option<(&str, &str)>) -> PathBuf {
    let mut text = TINY.to_string();
    if let Some((k, v)) = extra {
        text = text.replacen('{', &format!("{{\n  \"{k}\": {v},"), 1);
    }
    let p = dir.join("tiny.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "simulate", "privatize", "estimate", "consistency", "clt", "polydrift", "effpriv", "verify-ldp",
        "splinecheck",
    ] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    let clt = String::from_utf8_lossy(&run(&["clt", "--help"]).stdout).to_string();
    for r in ["negligible", "significant", "threshold"] {
        assert!(clt.contains(r));
    }
}

#[test]
fn clt_output_is_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), None);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = run(&["clt", "--regime", "significant", "--config", s(&cfg), "--out", s(&a), "--threads", "1"]);
    let rb = run(&["clt", "--regime", "significant", "--config", s(&cfg), "--out", s(&b), "--threads", "3"]);
    assert_eq!(ra.status.code(), rb.status.code());
    assert!(ra.status.code().unwrap() <= 1);
    for f in ["clt_significant_replications.csv", "clt_significant_summary.csv", "clt_significant.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
    let csv = std::fs::read_to_string(a.join("clt_significant_replications.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn seed_flag_changes_the_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), None);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&["consistency", "--config", s(&cfg), "--out", s(&a)]);
    run(&["consistency", "--config", s(&cfg), "--out", s(&b), "--seed", "5"]);
    let x = std::fs::read(a.join("consistency_replications.csv")).unwrap();
    let y = std::fs::read(b.join("consistency_replications.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn exit_code_follows_hard_gates() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = run(&["verify-ldp", "--config", s(&repo_config("verify_ldp.json")), "--out", s(tmp.path()), "--pairs", "200"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(tmp.path().join("verify_ldp.json").exists());

    let cfg = tiny_config(tmp.path(), Some(("tolerances", r#"{"final_median_max": 0.0}"#)));
    let fail = run(&["consistency", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL"));

    let missing = run(&["consistency", "--out", s(tmp.path())]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = tiny_config(tmp.path(), Some(("replications", "0")));
    assert_eq!(run(&["consistency", "--config", s(&bad)]).status.code(), Some(2));
}

#[test]
fn simulate_privatize_estimate_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), Some(("noise", "\"per_cell\"")));
    let out = tmp.path().join("o");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let panel = out.join("panel.csv");
    assert_eq!(std::fs::read_to_string(&panel).unwrap().lines().count(), 1 + 60 * 31);
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out), "--format", "binary"]).status.success());

    let p = run(&["privatize", "--config", s(&cfg), "--out", s(&out), "--panel", s(&panel)]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), 1 + 5 * 3);
    assert_eq!(std::fs::metadata(out.join("public_panel.f64")).unwrap().len(), 8 * 60 * 30 * 15);
    let header: String = std::fs::read_to_string(out.join("public_header.json")).unwrap();
    assert!(header.contains("\"L_n\": 5"));

    for panel_file in ["panel.csv", "panel.bin"] {
        let e = run(&["estimate", "--config", s(&cfg), "--out", s(&out), "--panel", s(&out.join(panel_file))]);
        assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
        let json = std::fs::read_to_string(out.join("estimate.json")).unwrap();
        for key in ["theta_hat", "r_nN", "regime", "v_n_star", "predicted_sd_negligible", "config_digest"] {
            assert!(json.contains(key), "{key}");
        }
    }
}

#[test]
fn toml_configs_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let toml = tmp.path().join("c.toml");
    std::fs::write(
        &toml,
        "seed = 3\nreplications = 4\nsigma0_replications = 200\n[alpha]\nkind = \"constant\"\nvalue = 1.0\n\
         [[ladder]]\nn_paths = 30\nn_steps = 20\ngrid_len = 4\n",
    )
    .unwrap();
    let o = run(&["consistency", "--config", s(&toml), "--out", s(tmp.path())]);
    assert!(o.status.code().unwrap() <= 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("consistency_summary.csv").exists());
}
