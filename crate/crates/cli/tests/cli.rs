use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn vchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vchain")).args(args).output().expect("vchain runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn temp_config(name: &str, text: &str) -> String {
    let path = std::env::temp_dir().join(format!("vchain-test-{}-{name}", std::process::id()));
    std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
    path.display().to_string()
}

#[test]
fn odd_eisenstein_is_zero() {
    let out = vchain(&["eval-eisenstein", "--k", "3", "--order", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "eval-eisenstein");
    assert_eq!(r["result"]["series"]["coeffs"].as_array().unwrap().len(), 0);
    assert_eq!(r["result"]["series"]["truncation"], 10);
}

#[test]
fn eisenstein_four_has_exact_coefficients() {
    let r = report(&vchain(&["eval-eisenstein", "--k", "4", "--order", "3"]));
    let coeffs = r["result"]["series"]["coeffs"].as_array().unwrap();
    assert_eq!(coeffs[0][1], "1/720");
    assert_eq!(coeffs[1][1], "1/3");
}

#[test]
fn report_has_manifest_and_echo() {
    let r = report(&vchain(&["eval-eisenstein", "--k", "2"]));
    assert_eq!(r["manifest"]["tool"], "vchain");
    assert_eq!(r["manifest"]["deterministic"], true);
    assert!(r["manifest"]["parallel"].is_boolean());
    assert_eq!(r["config"]["eisenstein"]["k"], 2);
    assert_eq!(r["truncation"]["q_order"], 8);
}

#[test]
fn vacuum_chain_conditions_pass() {
    let out = vchain(&["check-complex", "--config", &config("vacuum_chain.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    for res in r["result"]["residuals"].as_array().unwrap() {
        assert_eq!(res["satisfied"], true);
        assert_eq!(res["exact_zero"], true);
    }
}

#[test]
fn genus_one_oracle_matches_reduction_through_order_eight() {
    let path = config("genus1_two_point.toml");
    let oracle = report(&vchain(&["npoint", "--genus", "1", "--oracle", "--config", &path]));
    let reduced = report(&vchain(&["npoint", "--genus", "1", "--reduction", "--config", &path]));
    let a = oracle["result"]["series"]["coeffs"].as_array().unwrap();
    let b = reduced["result"]["series"]["coeffs"].as_array().unwrap();
    assert_eq!(a.len(), 8);
    assert_eq!(b.len(), 8);
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x[0], y[0]);
        let (xr, xi) = (x[1].as_f64().unwrap(), x[2].as_f64().unwrap());
        let (yr, yi) = (y[1].as_f64().unwrap(), y[2].as_f64().unwrap());
        let scale = xr.hypot(xi).max(1.0);
        assert!((xr - yr).hypot(xi - yi) <= 1e-9 * scale, "{x} vs {y}");
    }
}

#[test]
fn reduce_reports_deviation_and_zero_point() {
    let out = vchain(&["reduce", "--config", &config("genus1_two_point.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["result"]["deviation"].as_f64().unwrap() < 1e-9);
    assert!(r["result"]["zero_point"].is_object());
}

#[test]
fn exact_genus_zero_oracle_equals_reduction() {
    let path = config("genus0_exact.toml");
    let a = report(&vchain(&["npoint", "--config", &path]));
    let b = report(&vchain(&["npoint", "--reduction", "--config", &path]));
    assert_eq!(a["result"]["value"], b["result"]["value"]);
    assert_ne!(a["result"]["value"]["re"], "0/1");
}

#[test]
fn boundary_sewing_counts_partitions() {
    let r = report(&vchain(&["sew", "--config", &config("sew_boundary.toml")]));
    let coeffs: Vec<f64> =
        r["result"]["series"]["coeffs"].as_array().unwrap().iter().map(|c| c[1].as_f64().unwrap()).collect();
    assert_eq!(coeffs, vec![1.0, 1.0, 2.0, 3.0]);
}

#[test]
fn cohomology_ranks_are_determinate() {
    let out = vchain(&["cohomology", "--config", &config("cohomology.toml")]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let degrees = r["result"]["degrees"].as_array().unwrap();
    assert_eq!(degrees.len(), 3);
    for d in degrees {
        assert_eq!(d["indeterminate"], false);
        assert!(d["composition_residual"].as_f64().unwrap().is_finite());
    }
    assert_eq!(degrees[0]["is_complex"], true);
    assert_eq!(degrees[0]["rank_prev"]["rank"], 0);
}

#[test]
fn sample_configs_run() {
    for (cmd, file) in [
        ("partition", "genus2_partition.toml"),
        ("connection", "connection.toml"),
        ("eval-weierstrass", "elliptic.toml"),
        ("eval-pm", "elliptic.toml"),
        ("eval-f0", "elliptic.toml"),
    ] {
        let out = vchain(&[cmd, "--config", &config(file)]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn output_is_deterministic() {
    let path = config("genus2_partition.toml");
    let a = vchain(&["partition", "--config", &path]);
    let b = vchain(&["partition", "--config", &path]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn unknown_config_key_is_a_validation_error() {
    let path = temp_config("bad.toml", "[truncation]\nq_ordr = 3\n");
    let out = vchain(&["eval-eisenstein", "--k", "4", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["error"]["kind"], "config");
    assert!(r["error"]["message"].as_str().unwrap().contains("q_ordr"));
}

#[test]
fn library_errors_exit_two() {
    let path = temp_config("pole.toml", "[npoint]\ngenus = 0\ninsertions = [{ state = \"a\", point = 1 }, { state = \"a\", point = 1 }]\n");
    let out = vchain(&["npoint", "--config", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["kind"], "pole");
}

#[test]
fn missing_block_exits_two() {
    let out = vchain(&["partition"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_prints_usage() {
    let out = vchain(&["npoint", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn failed_check_exits_three() {
    let path = temp_config(
        "tight.toml",
        "[truncation]\nq_order = 4\nweight_cutoff = 8\n[tolerance]\nfloat_tol = 1e-12\n\
         [reduce]\ngenus = 1\ninsertions = [{ state = \"a\", point = [0.3, 0.2] }, { state = \"a\", point = [-0.4, 0.1] }]\n",
    );
    let out = vchain(&["reduce", "--config", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(&out)["passed"], false);
}

#[test]
fn schottky_block_overrides_cutoffs() {
    let base = std::fs::read_to_string(config("genus2_partition.toml")).unwrap();
    let path = temp_config("override.toml", &format!("{base}mode_cutoff = 2\nneumann_order = 3\n"));
    let out = vchain(&["partition", "--config", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["schottky"]["mode_cutoff"], 2);
    assert_eq!(r["config"]["schottky"]["neumann_order"], 3);
}
