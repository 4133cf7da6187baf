use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iasim")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.cfg");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "\
# 3-user 2x2, light correlation
K = 3
Nt = 2
Nr = 2
d = 1
alpha = 0.2,0.1
beta = 0.05
gammaO_dB = 0,20
trials = 300
seed = 11
";

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn lists_every_preset() {
    let out = iasim(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for p in ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"] {
        assert!(text.lines().any(|l| l.starts_with(p)), "{p} missing from\n{text}");
    }
}

#[test]
fn same_seed_gives_identical_files_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = iasim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["simulate_streams.csv", "simulate_sum_rate.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let c = dir.path().join("c");
    let o = iasim(&["simulate", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("simulate_streams.csv")).unwrap(), fs::read(c.join("simulate_streams.csv")).unwrap());
}

#[test]
fn simulate_writes_headers_rows_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = iasim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--trials", "200"]);
    assert!(o.status.success());
    let header = fs::read_to_string(out.join("simulate_streams.csv")).unwrap();
    assert!(header.starts_with("gamma_db,beta,model,user,stream,mean_sinr,rate_bps_hz,ser_bpsk,samples\n"));
    // 2 SNR points x 3 users x 1 stream
    let rows = csv_rows(&out.join("simulate_streams.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[8] == "200" && r[2] == "instantaneous"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["trials"], 200);
    assert_eq!(manifest["scenario"]["users"], 3);
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["discard_count"], 0);
    assert!(manifest["build_id"].as_str().unwrap().starts_with("iasim "));
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["simulate_streams.csv", "simulate_sum_rate.csv", "manifest.json"]);
}

#[test]
fn error_averaged_model_is_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = iasim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--sinr-model", "error-averaged"]);
    assert!(o.status.success());
    assert!(csv_rows(&out.join("simulate_streams.csv")).iter().all(|r| r[2] == "error-averaged"));
    let bad = iasim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--sinr-model", "optimistic"]);
    assert!(!bad.status.success());
}

#[test]
fn perfect_csi_sum_rate_tracks_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "K = 3\nNt = 2\nNr = 2\nd = 1\nalpha = 0,0\nbeta = 0\ngammaO_dB = 0,5,10,15,20,25,30,35,40\ntrials = 5000\nseed = 2\n",
    );
    let out = dir.path().join("out");
    let o = iasim(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("simulate_sum_rate.csv"));
    assert_eq!(rows.len(), 9);
    for r in rows {
        let (emp, law): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((emp / law - 1.0).abs() < 0.03, "{} dB: {emp} vs {law}", r[0]);
    }
    for name in ["analytic_streams.csv", "analytic_pdf.csv", "analytic_sum_rate.csv", "analytic_ratio.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["summary"]["sum_rate_rel_error_40.0dB"].as_f64().unwrap().abs() < 0.03);
}

#[test]
fn invalid_config_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "K = 3\nNt = two\n");
    let o = iasim(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn infeasible_network_reports_why() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("K = 3", "K = 4"));
    let o = iasim(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("improper"), "{err}");
    assert!(!dir.path().join("o").exists(), "nothing should be written");
}

#[test]
fn config_or_preset_is_required() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!iasim(&["simulate", "--out", dir.path().to_str().unwrap()]).status.success());
    let cfg = write_config(dir.path(), SMALL);
    let both = iasim(&["simulate", "--config", &cfg, "--preset", "fig4", "--out", dir.path().to_str().unwrap()]);
    assert!(!both.status.success());
    assert!(!iasim(&["compare", "--preset", "fig9", "--out", dir.path().to_str().unwrap()]).status.success());
}

#[test]
fn theoretical_contour_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig6");
    let o = iasim(&["analytic", "--preset", "fig6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ratio = csv_rows(&out.join("fig6_ratio.csv"));
    // 3 SNR points x 96 alphas x 101 betas
    assert_eq!(ratio.len(), 3 * 96 * 101);
    let contour = csv_rows(&out.join("fig6_contour.csv"));
    assert!(contour.iter().any(|r| r[0] == "30.0"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["preset"], "fig6");
    assert_eq!(manifest["summary"]["theoretical_30dB_passes_fixed_point"], 1.0);
}

#[test]
fn monte_carlo_preset_needs_simulation() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!iasim(&["analytic", "--preset", "fig4", "--out", dir.path().to_str().unwrap()]).status.success());
}

#[test]
fn sum_rate_preset_at_reduced_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4");
    let o = iasim(&["compare", "--preset", "fig4", "--trials", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("fig4_sum_rate.csv"));
    // 4 betas x 9 SNR points
    assert_eq!(rows.len(), 36);
    assert!(rows.iter().filter(|r| r[0] == "0.0").all(|r| r[5].is_empty()));
    assert!(rows.iter().filter(|r| r[0] != "0.0").all(|r| !r[5].is_empty()));
}

#[test]
fn kld_preset_embeds_tabulated_alphas() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3");
    let o = iasim(&["compare", "--preset", "fig3", "--trials", "1000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("fig3_kld.csv"));
    let mut mags: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    mags.dedup();
    assert_eq!(mags.len(), 8);
    assert!((mags[0] - 0.1986).abs() < 1e-4);
    assert!((mags.iter().cloned().fold(0.0, f64::max) - 0.8267).abs() < 1e-4);
}
