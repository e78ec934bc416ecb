// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pachange::formats::{read_tree, ReportJson};
use pachange::manifest::RunManifest;

fn pachange(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pachange")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = pachange(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn two_vertex_simulation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--n", "2", "--out", s(&out)]);
    let tree = read_tree(fs::File::open(out.join("tree.bin")).unwrap()).unwrap();
    assert_eq!(tree.parents(), &[0, 1]);
    assert_eq!(fs::read_to_string(out.join("edges.csv")).unwrap(), "child,parent\n2,1\n");
    assert_eq!(fs::read_to_string(out.join("leaves.csv")).unwrap(), "m,leaf_count\n1,0\n2,2\n");
    assert_eq!(fs::read_to_string(out.join("degrees.csv")).unwrap(), "k,count\n1,2\n");
    let m = manifest(&out);
    assert_eq!(m.subcommand, "simulate");
    assert_eq!(m.outputs.len(), 4);
    assert_eq!(m.seeds, vec![(1, 0)]);
}

#[test]
fn ensemble_files_use_distinct_streams() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--n", "3000", "--reps", "20", "--no-tree", "--out", s(&out)]);
    let m = manifest(&out);
    let leaves: Vec<&String> = m.outputs.keys().filter(|k| k.ends_with("leaves.csv")).collect();
    assert_eq!(leaves.len(), 20);
    let digests: std::collections::BTreeSet<&String> = m.outputs.iter().filter(|(k, _)| k.ends_with("leaves.csv")).map(|(_, v)| v).collect();
    assert_eq!(digests.len(), 20);
    assert_eq!(m.seeds.iter().map(|s| s.1).collect::<Vec<_>>(), (0..20).collect::<Vec<_>>());
    assert!(!out.join("rep0000_tree.bin").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let common = ["--alpha", "4", "--beta", "1", "--gamma", "0.3", "--beta", "2", "--gamma", "0.7", "--seed", "17"];
    let mut args = vec!["simulate", "--n", "5000", "--reps", "4", "--threads", "1", "--out", s(&a)];
    args.extend(common);
    ok(&args);
    let mut args = vec!["simulate", "--n", "5000", "--reps", "4", "--threads", "3", "--out", s(&b)];
    args.extend(common);
    ok(&args);
    assert_eq!(manifest(&a).outputs, manifest(&b).outputs);
    // replay from the manifest alone
    ok(&["simulate", "--config", s(&a.join("manifest.json")), "--out", s(&c)]);
    assert_eq!(manifest(&a).outputs, manifest(&c).outputs);

    let (la, lb) = (a.join("limits"), b.join("limits"));
    let mut args = vec!["limits", "--draws", "20000", "--out", s(&la)];
    args.extend(common);
    ok(&args);
    let mut args = vec!["limits", "--draws", "20000", "--threads", "2", "--out", s(&lb)];
    args.extend(common);
    ok(&args);
    assert_eq!(manifest(&la).outputs, manifest(&lb).outputs);
}

#[test]
fn invalid_settings_create_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for args in [
        vec!["simulate", "--alpha", "1", "--beta", "2", "--gamma", "0.7", "--beta", "1", "--gamma", "0.3", "--out", s(&out)],
        vec!["simulate", "--alpha", "-1", "--out", s(&out)],
        vec!["simulate", "--alpha", "1", "--n", "1", "--out", s(&out)],
        vec!["estimate", "--epsilon", "1.5", "--alpha", "1", "--out", s(&out)],
        vec!["estimate", "--trajectory", "/nonexistent.csv", "--out", s(&out)],
        vec!["fclt", "--alpha", "1", "--out", s(&out)],
        vec!["limits", "--alpha", "1", "--beta", "2", "--gamma", "0.05", "--out", s(&out)],
    ] {
        let res = pachange(&args);
        assert!(!res.status.success(), "{args:?}");
        assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
        assert!(!out.exists(), "{args:?}");
    }
}

#[test]
fn flat_limit_curve_without_change() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("flat");
    ok(&["limits", "--alpha", "2", "--beta", "2", "--gamma", "0.5", "--draws", "10000", "--out", s(&out)]);
    let text = fs::read_to_string(out.join("d_limit.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,d_limit"));
    for line in lines {
        let d: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(d.abs() < 1e-12, "{line}");
    }
    let curve = fs::read_to_string(out.join("leaf_curve.csv")).unwrap();
    assert!(curve.starts_with("t,p_inf,sigmaM2,sigma2,mu,g,phi\n"));
    let pmf = fs::read_to_string(out.join("pmf_alpha.csv")).unwrap();
    let first: f64 = pmf.lines().nth(1).unwrap().strip_prefix("1,").unwrap().parse().unwrap();
    assert!((first - 4.0 / 7.0).abs() < 1e-12);
}

#[test]
fn multi_change_point_limits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("multi");
    ok(&["limits", "--alpha", "4", "--beta", "1", "--gamma", "0.3", "--beta", "2", "--gamma", "0.7", "--draws", "10000", "--out", s(&out)]);
    assert!(out.join("pmf_theta.csv").exists());
    assert!(!out.join("leaf_curve.csv").exists());
}

#[test]
fn constant_trajectory_is_not_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let traj = tmp.path().join("flat.csv");
    // N(m) = floor(m / 2): proportions hover at one half
    let mut text = String::from("m,leaf_count\n1,0\n");
    for m in 2..=20_000u64 {
        text.push_str(&format!("{m},{}\n", m / 2));
    }
    fs::write(&traj, text).unwrap();
    let out = tmp.path().join("est");
    ok(&["estimate", "--trajectory", s(&traj), "--out", s(&out)]);
    let report: ReportJson = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(!report.detected);
    assert_eq!(report.gamma_hat, None);
    assert!(fs::read_to_string(out.join("report.json")).unwrap().contains("\"gamma_hat\": null"));
    let curve = fs::read_to_string(out.join("dn_curve.csv")).unwrap();
    assert!(curve.starts_with("t,dn,d_limit\n"));
    assert!(curve.ends_with("1,0,\n"));
}

#[test]
fn estimate_from_simulated_files_and_ensemble() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--n", "20000", "--seed", "5", "--no-tree", "--out", s(&sim)]);
    let est = tmp.path().join("est");
    ok(&["estimate", "--trajectory", s(&sim.join("leaves.csv")), "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--out", s(&est)]);
    let curve = fs::read_to_string(est.join("dn_curve.csv")).unwrap();
    let second = curve.lines().nth(1).unwrap();
    assert_eq!(second.split(',').count(), 3);
    assert!(!second.ends_with(','));

    // in-process ensemble from the same seed sees the same first trajectory
    let ens = tmp.path().join("ens");
    ok(&["estimate", "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--n", "20000", "--seed", "5", "--reps", "3", "--out", s(&ens)]);
    assert_eq!(fs::read_to_string(ens.join("rep0000_dn_curve.csv")).unwrap(), curve);
    let table = fs::read_to_string(ens.join("gamma_hat.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.starts_with("rep,gamma_hat,dn_star,detected\n"));
}

#[test]
fn fclt_and_maxdeg_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fclt");
    ok(&["fclt", "--alpha", "6", "--beta", "1", "--gamma", "0.5", "--n", "2000", "--reps", "20", "--out", s(&out)]);
    let moments = fs::read_to_string(out.join("gn_moments.csv")).unwrap();
    assert!(moments.starts_with("t,mean,std_error,variance,limit_variance\n"));
    assert_eq!(moments.lines().count(), 5);
    let z = fs::read_to_string(out.join("upsilon.csv")).unwrap();
    assert!(z.starts_with("rep,z\n"));
    assert_eq!(z.lines().count(), 21);
    assert!(manifest(&out).summary.contains_key("upsilon_ks"));

    let out = tmp.path().join("maxdeg");
    ok(&["maxdeg", "--alpha", "1", "--sizes", "500", "--sizes", "5000", "--reps", "5", "--top-k", "3", "--out", s(&out)]);
    let table = fs::read_to_string(out.join("maxdeg.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 5 * 3);
    let summary = fs::read_to_string(out.join("maxdeg_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
}

#[test]
fn schedule_file_input() {
    let tmp = tempfile::tempdir().unwrap();
    let sched = tmp.path().join("s.json");
    fs::write(&sched, r#"{"alpha": 2, "segments": [{"gamma": 0.25, "beta": 3}, {"gamma": 0.75, "beta": 4}]}"#).unwrap();
    let out = tmp.path().join("run");
    ok(&["simulate", "--schedule", s(&sched), "--n", "100", "--out", s(&out)]);
    let bad = pachange(&["simulate", "--schedule", s(&sched), "--alpha", "1", "--out", s(&tmp.path().join("x"))]);
    assert!(!bad.status.success());
}
