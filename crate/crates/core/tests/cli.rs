use std::path::Path;
use std::process::{Command, Output};

use actattr::psinfer::{save_grids, Grid, PartGraph};

fn actattr(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actattr")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_then_run_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(&actattr(&["gen-synthetic", "--seed", "5", "--out", "bundle"], dir.path()));
    std::fs::write(dir.path().join("exp.toml"), "mode = \"script\"\nbundle = \"bundle\"\noutput_dir = \"out\"\nweights = \"planted\"\n").unwrap();
    ok(&actattr(&["run", "--config", "exp.toml"], dir.path()));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["composites"]["accuracy"].as_f64().unwrap() > 0.9);
    assert!(dir.path().join("out/composite_scores.csv").exists());
}

#[test]
fn classify_scores_feed_eval() {
    let dir = tempfile::tempdir().unwrap();
    ok(&actattr(&["gen-synthetic", "--seed", "2", "--out", "b"], dir.path()));
    ok(&actattr(&["classify-composites", "--bundle", "b", "--mode", "nn-script", "--out", "c"], dir.path()));
    let out = actattr(&["eval", "--predictions", "c/composite_scores.csv", "--videos", "b/videos.csv"], dir.path());
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("accuracy"));
}

#[test]
fn mine_then_segment() {
    let dir = tempfile::tempdir().unwrap();
    ok(&actattr(&["gen-synthetic", "--out", "b"], dir.path()));
    ok(&actattr(&["mine-scripts", "--scripts", "b/scripts", "--vocab", "b/vocab.tsv", "--lexicon", "b/lexicon.tsv", "--out", "w.csv"], dir.path()));
    let header = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert!(header.starts_with("composite,"));
    ok(&actattr(&["train-attributes", "--bundle", "b", "--out", "m.json"], dir.path()));
    ok(&actattr(&["score", "--bundle", "b", "--models", "m.json", "--out", "s"], dir.path()));
    ok(&actattr(&["segment", "--scores", "s/v00_000.csv", "--interval-size", "30", "--out", "seg.jsonl"], dir.path()));
    assert!(std::fs::read_to_string(dir.path().join("seg.jsonl")).unwrap().lines().count() > 0);
}

#[test]
fn pose_infer_finds_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let graph = PartGraph::upper_body();
    let grids: Vec<Grid> = (0..graph.len())
        .map(|_| {
            let mut g = Grid::from_values(8, 8, vec![1e-3; 64]).unwrap();
            g.set(4, 4, 1.0);
            g
        })
        .collect();
    save_grids(&dir.path().join("g.apg"), &grids).unwrap();
    ok(&actattr(&["pose-infer", "--grids", "g.apg", "--out", "p.csv", "--marginals", "m.apg"], dir.path()));
    assert!(dir.path().join("p.csv").exists());
    assert!(dir.path().join("m.apg").exists());
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "bogus = 1\n").unwrap();
    let out = actattr(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert_eq!(actattr(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(actattr(&["--help"], dir.path()).status.code(), Some(0));
}
