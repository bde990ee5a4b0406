//! End-to-end runners: detect on one cloud, and benchmark configs over a
//! directory of clouds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cloud::load_cloud;
use super::config::{Detector, RunConfig};
use super::labels::{load_sidecar, save_labeled, ColorMode};
use crate::error::Error;
use crate::fspf::fspf_detect;
use crate::geom::{classify_orientation, OrientationClass, PlaneModel, Point3, PointCloud, UnitVector3};
use crate::kdtree::KdIndex;
use crate::merge::merge_all;
use crate::ops::detect_grouped_with_index;
use crate::truth::{classification_accuracy, generate_ground_truth, segmentation_accuracy, SegmentLabeling};

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StageTimings {
    pub index: f64,
    pub sampling: f64,
    pub normals: f64,
    pub detection: f64,
    pub merging: f64,
    pub total: f64,
}

impl StageTimings {
    fn add(&mut self, o: &StageTimings) {
        self.index += o.index;
        self.sampling += o.sampling;
        self.normals += o.normals;
        self.detection += o.detection;
        self.merging += o.merging;
        self.total += o.total;
    }

    fn scale(&mut self, f: f64) {
        for v in [
            &mut self.index,
            &mut self.sampling,
            &mut self.normals,
            &mut self.detection,
            &mut self.merging,
            &mut self.total,
        ] {
            *v *= f;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlaneSummary {
    pub id: u32,
    pub centroid: Point3,
    pub normal: UnitVector3,
    pub inlier_count: usize,
    pub orientation: OrientationClass,
}

/// Result of one detect run. The serialized field names are the stable
/// report schema; the per-point labeling goes to the sidecar instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectionReport {
    pub detector: String,
    pub input_points: usize,
    pub dropped_non_finite: usize,
    pub pre_merge_count: usize,
    pub post_merge_count: usize,
    pub planes: Vec<PlaneSummary>,
    pub params: RunConfig,
    pub timings: StageTimings,
    #[serde(skip)]
    pub per_point: SegmentLabeling,
}

/// Planes after merging, labeled by the orientation of their refit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub planes: Vec<(PlaneModel, OrientationClass)>,
    pub labeling: SegmentLabeling,
    pub pre_merge_count: usize,
    pub timings: StageTimings,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the configured detector and the merge step on an in-memory cloud.
pub fn detect_cloud(cloud: &PointCloud, config: &RunConfig) -> Result<Detection, Error> {
    let config = config.resolved();
    config.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let kd = KdIndex::build(cloud)?;
    timings.index = ms(t);

    let raw: Vec<PlaneModel> = match &config.detector {
        Detector::Ops(p) => {
            let d = detect_grouped_with_index(cloud, &kd, p)?;
            timings.sampling = d.timings.sampling_ms;
            timings.normals = d.timings.normals_ms;
            timings.detection = d.timings.detection_ms;
            d.planes.into_iter().map(|(plane, _)| plane).collect()
        }
        Detector::Fspf(p) => {
            let t = Instant::now();
            let out = fspf_detect(cloud, &kd, p)?;
            timings.detection = ms(t);
            out.planes
        }
    };
    let pre_merge_count = raw.len();

    let t = Instant::now();
    let merged = merge_all(raw, cloud, &config.merge);
    timings.merging = ms(t);

    let planes: Vec<(PlaneModel, OrientationClass)> = merged
        .into_iter()
        .map(|p| {
            let class = classify_orientation(p.normal, config.up, config.orientation_tolerance);
            (p, class)
        })
        .collect();
    let labeling = SegmentLabeling::from_planes(cloud.len(), &planes)?;
    timings.total = ms(start);
    Ok(Detection {
        planes,
        labeling,
        pre_merge_count,
        timings,
    })
}

impl DetectionReport {
    pub fn new(detection: Detection, config: &RunConfig, input_points: usize, dropped_non_finite: usize) -> Self {
        let resolved = config.resolved();
        DetectionReport {
            detector: resolved.detector.name().to_string(),
            input_points,
            dropped_non_finite,
            pre_merge_count: detection.pre_merge_count,
            post_merge_count: detection.planes.len(),
            planes: detection
                .planes
                .iter()
                .enumerate()
                .map(|(id, (p, class))| PlaneSummary {
                    id: id as u32,
                    centroid: p.centroid,
                    normal: p.normal,
                    inlier_count: p.inliers.len(),
                    orientation: *class,
                })
                .collect(),
            params: resolved,
            timings: detection.timings,
            per_point: detection.labeling,
        }
    }

    /// The report as pretty JSON, with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Paths written by [`run_detect`] for input stem `name`.
pub fn output_paths(output_dir: &Path, input: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let stem = input.file_stem().map_or_else(|| "cloud".into(), |s| s.to_string_lossy().into_owned());
    (
        output_dir.join(format!("{stem}.labeled.ply")),
        output_dir.join(format!("{stem}.labeled.labels")),
        output_dir.join(format!("{stem}.report.json")),
    )
}

/// Loads `input`, detects and merges planes, and writes the colored PLY,
/// its label sidecar, and the JSON report into `output_dir`.
pub fn run_detect(config: &RunConfig, input: &Path, output_dir: &Path, color: ColorMode) -> Result<DetectionReport, Error> {
    let loaded = load_cloud(input)?;
    if loaded.cloud.is_empty() {
        return Err(Error::Empty(format!("{}: no finite points", input.display())));
    }
    let detection = detect_cloud(&loaded.cloud, config)?;
    let report = DetectionReport::new(detection, config, loaded.cloud.len(), loaded.dropped_non_finite);

    std::fs::create_dir_all(output_dir)?;
    let (ply, _, json) = output_paths(output_dir, input);
    save_labeled(&loaded.cloud, &report.per_point, &ply, color)?;
    std::fs::write(json, report.to_json())?;
    Ok(report)
}

/// A named configuration for [`run_bench`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub name: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CloudScore {
    pub cloud: String,
    pub classification_accuracy: f64,
    pub segmentation_accuracy: f64,
    pub pre_merge_count: usize,
    pub post_merge_count: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub config: String,
    pub detector: String,
    pub clouds: usize,
    pub classification_accuracy: f64,
    pub segmentation_accuracy: f64,
    pub pre_merge_count: f64,
    pub post_merge_count: f64,
    pub timings: StageTimings,
    pub per_cloud: Vec<CloudScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub skipped: usize,
}

/// Cloud files in `dir` (`.ply`, `.xyz`, `.txt`), sorted by name.
pub fn list_clouds(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "ply" | "xyz" | "txt"))
        })
        .collect();
    out.sort();
    Ok(out)
}

struct Loaded {
    name: String,
    cloud: PointCloud,
    truth: Option<SegmentLabeling>,
}

/// Scores every config on every cloud in `dataset_dir`.
///
/// Truth comes from `<gt_dir>/<stem>.labels` when that file exists, and is
/// otherwise generated from the cloud with each config's ground-truth
/// parameters. Unreadable clouds are skipped and counted; the run fails only
/// when no cloud could be scored.
pub fn run_bench(dataset_dir: &Path, configs: &[BenchConfig], gt_dir: Option<&Path>) -> Result<BenchResult, Error> {
    let files = list_clouds(dataset_dir)?;
    let loaded: Vec<Option<Loaded>> = files
        .par_iter()
        .map(|path| {
            let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let cloud = match load_cloud(path) {
                Ok(l) if !l.cloud.is_empty() => l.cloud,
                Ok(_) => {
                    log::warn!("{}: no finite points, skipped", path.display());
                    return None;
                }
                Err(e) => {
                    log::warn!("{}: {e}, skipped", path.display());
                    return None;
                }
            };
            let truth = match gt_dir.map(|d| d.join(format!("{name}.labels"))) {
                Some(p) if p.exists() => match load_sidecar(&p) {
                    Ok(t) if t.len() == cloud.len() => Some(t),
                    Ok(_) => {
                        log::warn!("{}: label count does not match cloud, skipped", p.display());
                        return None;
                    }
                    Err(e) => {
                        log::warn!("{}: {e}, skipped", p.display());
                        return None;
                    }
                },
                _ => None,
            };
            Some(Loaded { name, cloud, truth })
        })
        .collect();
    let mut skipped = loaded.iter().filter(|l| l.is_none()).count();
    let clouds: Vec<Loaded> = loaded.into_iter().flatten().collect();

    let mut rows = Vec::with_capacity(configs.len());
    for bc in configs {
        let scores: Vec<Result<CloudScore, (String, Error)>> = clouds
            .par_iter()
            .map(|c| score_cloud(c, &bc.config).map_err(|e| (c.name.clone(), e)))
            .collect();
        let mut per_cloud = Vec::with_capacity(scores.len());
        for s in scores {
            match s {
                Ok(s) => per_cloud.push(s),
                Err((name, e)) => {
                    log::warn!("{name}: {e}, skipped for config {}", bc.name);
                    skipped += 1;
                }
            }
        }
        rows.push(aggregate(bc, per_cloud));
    }
    if rows.iter().all(|r| r.clouds == 0) {
        return Err(Error::Empty(format!("no clouds processed in {}", dataset_dir.display())));
    }
    if skipped > 0 {
        log::warn!("{skipped} cloud run(s) skipped");
    }
    Ok(BenchResult { rows, skipped })
}

fn score_cloud(c: &Loaded, config: &RunConfig) -> Result<CloudScore, Error> {
    let config = config.resolved();
    let generated;
    let truth = match &c.truth {
        Some(t) => t,
        None => {
            generated = generate_ground_truth(&c.cloud, &config.gt);
            &generated
        }
    };
    let d = detect_cloud(&c.cloud, &config)?;
    Ok(CloudScore {
        cloud: c.name.clone(),
        classification_accuracy: classification_accuracy(&d.labeling, truth)?,
        segmentation_accuracy: segmentation_accuracy(&d.labeling, truth)?,
        pre_merge_count: d.pre_merge_count,
        post_merge_count: d.planes.len(),
        timings: d.timings,
    })
}

fn aggregate(bc: &BenchConfig, per_cloud: Vec<CloudScore>) -> BenchRow {
    let n = per_cloud.len();
    let mut row = BenchRow {
        config: bc.name.clone(),
        detector: bc.config.detector.name().to_string(),
        clouds: n,
        classification_accuracy: 0.0,
        segmentation_accuracy: 0.0,
        pre_merge_count: 0.0,
        post_merge_count: 0.0,
        timings: StageTimings::default(),
        per_cloud: Vec::new(),
    };
    if n == 0 {
        return row;
    }
    for s in &per_cloud {
        row.classification_accuracy += s.classification_accuracy;
        row.segmentation_accuracy += s.segmentation_accuracy;
        row.pre_merge_count += s.pre_merge_count as f64;
        row.post_merge_count += s.post_merge_count as f64;
        row.timings.add(&s.timings);
    }
    let f = 1.0 / n as f64;
    row.classification_accuracy *= f;
    row.segmentation_accuracy *= f;
    row.pre_merge_count *= f;
    row.post_merge_count *= f;
    row.timings.scale(f);
    row.per_cloud = per_cloud;
    row
}

/// Aligned plain-text table, one row per config.
pub fn format_table(result: &BenchResult) -> String {
    let header = [
        "config", "detector", "clouds", "class_acc", "seg_acc", "pre_merge", "post_merge", "detect_ms", "merge_ms", "total_ms",
    ];
    let cells: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.config.clone(),
                r.detector.clone(),
                r.clouds.to_string(),
                format!("{:.2}%", 100.0 * r.classification_accuracy),
                format!("{:.2}%", 100.0 * r.segmentation_accuracy),
                format!("{:.2}", r.pre_merge_count),
                format!("{:.2}", r.post_merge_count),
                format!("{:.2}", r.timings.sampling + r.timings.normals + r.timings.detection),
                format!("{:.2}", r.timings.merging),
                format!("{:.2}", r.timings.total),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &header.map(String::from));
    for row in &cells {
        line(&mut out, row);
    }
    out
}
