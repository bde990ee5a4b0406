use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn planedet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planedet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_detect_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = planedet(&["synth", "-o", "room.ply", "--seed", "3"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(d.join("room.labels").exists());

    let o = planedet(&["detect", "room.ply", "-o", "out", "--sampling-rate", "0.05", "--k", "10"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("6 planes"));
    for f in ["room.labeled.ply", "room.labeled.labels", "room.report.json"] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }

    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("out/room.report.json")).unwrap()).unwrap();
    assert_eq!(report["detector"], "ops");
    assert_eq!(report["postMergeCount"], 6);
    assert_eq!(report["inputPoints"], 6600);
    assert_eq!(report["params"]["detector"]["ops"]["k"], 10);
    assert!(report["timings"]["total"].as_f64().unwrap() > 0.0);

    let o = planedet(
        &["eval", "--pred", "out/room.labeled.labels", "--truth", "room.labels", "--json"],
        d,
    );
    assert!(o.status.success(), "{o:?}");
    let scores: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(scores["segmentationAccuracy"].as_f64().unwrap() > 0.9);
    assert!(scores["classificationAccuracy"].as_f64().unwrap() > 0.9);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(planedet(&["synth", "-o", "room.ply"], d).status.success());
    std::fs::write(
        d.join("c.toml"),
        "seed = 5\n[detector.ops]\nsampling_rate = 0.05\nk = 10\nmin_inliers = 30\n",
    )
    .unwrap();
    let o = planedet(&["detect", "room.ply", "--config", "c.toml", "--k", "12"], d);
    assert!(o.status.success(), "{o:?}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(d.join("room.report.json")).unwrap()).unwrap();
    let ops = &report["params"]["detector"]["ops"];
    assert_eq!(ops["k"], 12);
    assert_eq!(ops["min_inliers"], 30);
    assert_eq!(report["params"]["seed"], 5);
}

#[test]
fn gt_subcommand_finds_room() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(planedet(&["synth", "-o", "room.ply", "--seed", "1"], d).status.success());
    let o = planedet(&["gt", "room.ply", "-o", "gt.labels", "--ply", "gt.ply"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("6 segments"));
    assert!(d.join("gt.ply").exists());
    let o = planedet(&["eval", "--pred", "gt.labels", "--truth", "room.labels"], d);
    assert!(stdout(&o).contains("segmentation accuracy"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    std::fs::write(d.join("bad.xyz"), "1 2\n").unwrap();
    assert_eq!(planedet(&["detect", "bad.xyz"], d).status.code(), Some(2));
    assert_eq!(planedet(&["detect", "missing.ply"], d).status.code(), Some(2));

    std::fs::write(d.join("empty.xyz"), "").unwrap();
    assert_eq!(planedet(&["detect", "empty.xyz"], d).status.code(), Some(3));

    let noise: String = (0..200)
        .map(|i| {
            let f = i as f64;
            format!("{} {} {}\n", (f * 0.7).sin(), (f * 1.3).cos(), (f * 2.9).sin())
        })
        .collect();
    std::fs::write(d.join("noise.xyz"), noise).unwrap();
    assert_eq!(
        planedet(&["detect", "noise.xyz", "--min-inliers", "150"], d).status.code(),
        Some(3)
    );

    std::fs::write(d.join("bad.toml"), "seed = \"x\"\n").unwrap();
    std::fs::write(d.join("ok.xyz"), "0 0 0\n").unwrap();
    assert_eq!(planedet(&["detect", "ok.xyz", "--config", "bad.toml"], d).status.code(), Some(2));
    assert_eq!(
        planedet(&["detect", "ok.xyz", "--sampling-rate", "3"], d).status.code(),
        Some(1)
    );

    std::fs::create_dir(d.join("nothing")).unwrap();
    assert_eq!(planedet(&["bench", "nothing"], d).status.code(), Some(3));
    assert_eq!(planedet(&["bench", "nowhere"], d).status.code(), Some(1));
}
