use planedet::fspf::FspfParams;
use planedet::io::{detect_cloud, gen_synthetic, run_bench, save_labeled, write_ply, BenchConfig, ColorMode, RunConfig, SceneSpec};
use planedet::ops::OpsParams;
use planedet::truth::{generate_ground_truth, segmentation_accuracy};
use planedet::Error;

fn ops_config() -> RunConfig {
    RunConfig::ops(OpsParams {
        sampling_rate: 0.05,
        k: 10,
        ..OpsParams::default()
    })
}

fn configs() -> Vec<BenchConfig> {
    vec![
        BenchConfig {
            name: "ops".into(),
            config: ops_config(),
        },
        BenchConfig {
            name: "fspf".into(),
            config: RunConfig::fspf(FspfParams::default()),
        },
    ]
}

#[test]
fn means_match_per_cloud_scores() {
    let data = tempfile::tempdir().unwrap();
    let gt = tempfile::tempdir().unwrap();
    for seed in 0..3 {
        let (cloud, truth) = gen_synthetic(&SceneSpec::box_room([5.0, 5.0, 3.0], 800, 300), 0.005, seed).unwrap();
        write_ply(&data.path().join(format!("room{seed}.ply")), &cloud, None).unwrap();
        save_labeled(&cloud, &truth, &gt.path().join(format!("room{seed}.ply")), ColorMode::Segment).unwrap();
    }
    std::fs::write(data.path().join("notes.md"), "ignored").unwrap();
    std::fs::write(data.path().join("broken.xyz"), "1 2\n").unwrap();

    let result = run_bench(data.path(), &configs(), Some(gt.path())).unwrap();
    assert_eq!(result.skipped, 1);
    assert_eq!(result.rows.len(), 2);
    for row in &result.rows {
        assert_eq!(row.clouds, 3);
        assert_eq!(row.per_cloud.len(), 3);
        let n = row.per_cloud.len() as f64;
        let seg: f64 = row.per_cloud.iter().map(|c| c.segmentation_accuracy).sum::<f64>() / n;
        let cls: f64 = row.per_cloud.iter().map(|c| c.classification_accuracy).sum::<f64>() / n;
        let pre: f64 = row.per_cloud.iter().map(|c| c.pre_merge_count as f64).sum::<f64>() / n;
        assert!((row.segmentation_accuracy - seg).abs() < 1e-12);
        assert!((row.classification_accuracy - cls).abs() < 1e-12);
        assert!((row.pre_merge_count - pre).abs() < 1e-12);
        let names: Vec<&str> = row.per_cloud.iter().map(|c| c.cloud.as_str()).collect();
        assert_eq!(names, ["room0", "room1", "room2"]);
    }
    let ops = &result.rows[0];
    assert_eq!(ops.config, "ops");
    assert!(ops.segmentation_accuracy > 0.9);
}

#[test]
fn generated_truth_when_no_sidecar() {
    let data = tempfile::tempdir().unwrap();
    let (cloud, _) = gen_synthetic(&SceneSpec::box_room([5.0, 5.0, 3.0], 1000, 600), 0.005, 7).unwrap();
    write_ply(&data.path().join("one.ply"), &cloud, None).unwrap();
    let result = run_bench(
        data.path(),
        &[BenchConfig {
            name: "ops".into(),
            config: ops_config(),
        }],
        None,
    )
    .unwrap();
    assert_eq!(result.rows.len(), 1);
    assert_eq!(result.rows[0].clouds, 1);
    let config = ops_config();
    let truth = generate_ground_truth(&cloud, &config.resolved().gt);
    let pred = detect_cloud(&cloud, &config).unwrap().labeling;
    let expected = segmentation_accuracy(&pred, &truth).unwrap();
    assert_eq!(result.rows[0].segmentation_accuracy, expected);
    assert!(expected > 0.6);
}

#[test]
fn empty_dataset_is_an_error() {
    let data = tempfile::tempdir().unwrap();
    assert!(matches!(run_bench(data.path(), &configs(), None), Err(Error::Empty(_))));
}
