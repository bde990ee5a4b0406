//! Oriented Point Sampling: one-point RANSAC over a sparse set of points with
//! estimated normals, verified against the whole cloud.
//!
//! A single oriented point fixes a plane hypothesis, so the adaptive
//! iteration bound is `⌈ln(1 − p) / ln(e)⌉` for outlier fraction `e`. Planes
//! are extracted greedily: after each detection its inliers leave the active
//! cloud and the sample pool, and detection repeats until too few samples
//! remain.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{classify_orientation, fit_plane, OrientationClass, PlaneModel, Point3, PointCloud, UnitVector3};
use crate::kdtree::{IndexError, KdIndex};
use crate::normals::{estimate_many, sample_points, OrientedPoint, Sigma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpsError {
    #[error("no hypothesis reached the inlier threshold")]
    NoPlaneFound,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// How detected planes are split into orientation groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupingStrategy {
    /// Partition the oriented samples by orientation, then detect per group.
    #[default]
    GroupFirst,
    /// Detect on all samples, then classify each plane.
    DetectFirst,
}

/// Population used as the denominator of the outlier fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutlierDenominator {
    /// Oriented samples still in the pool.
    #[default]
    Samples,
    /// Every point of the cloud.
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpsParams {
    pub sampling_rate: f64,
    pub k: usize,
    pub sigma: Sigma,
    pub success_probability: f64,
    pub dist_threshold: f64,
    pub min_inliers: usize,
    pub orientation_tolerance: f64,
    pub up: UnitVector3,
    pub grouping: GroupingStrategy,
    pub outlier_denominator: OutlierDenominator,
    /// RANSAC iterations are capped at this multiple of the pool size.
    pub iteration_cap_factor: usize,
    pub rng_seed: u64,
}

impl Default for OpsParams {
    fn default() -> Self {
        OpsParams {
            sampling_rate: 0.03,
            k: 30,
            sigma: Sigma::MeanNeighborDistance,
            success_probability: 0.99,
            dist_threshold: 0.05,
            min_inliers: 20,
            orientation_tolerance: 7.0,
            up: UnitVector3::Z,
            grouping: GroupingStrategy::GroupFirst,
            outlier_denominator: OutlierDenominator::Samples,
            iteration_cap_factor: 10,
            rng_seed: 0,
        }
    }
}

impl OpsParams {
    pub fn validate(&self) -> Result<(), OpsError> {
        let bad = |m: &str| Err(OpsError::InvalidParams(m.to_string()));
        if !(self.sampling_rate > 0.0 && self.sampling_rate <= 1.0) {
            return bad("sampling rate must lie in (0, 1]");
        }
        if self.k < 3 {
            return bad("k must be at least 3");
        }
        if !(self.success_probability > 0.0 && self.success_probability < 1.0) {
            return bad("success probability must lie in (0, 1)");
        }
        if !(self.dist_threshold > 0.0) {
            return bad("distance threshold must be positive");
        }
        if self.min_inliers < 3 {
            return bad("minimum inlier count must be at least 3");
        }
        if !(self.orientation_tolerance > 0.0 && self.orientation_tolerance < 45.0) {
            return bad("orientation tolerance must lie in (0, 45) degrees");
        }
        if let Sigma::Fixed(s) = self.sigma {
            if !(s > 0.0) {
                return bad("sigma must be positive");
            }
        }
        if self.iteration_cap_factor == 0 {
            return bad("iteration cap factor must be positive");
        }
        Ok(())
    }
}

/// Iterations needed so that, with probability `p`, at least one single-point
/// sample is an inlier when a fraction `e` of the pool are outliers.
/// Clamped to `[1, cap]`.
pub fn adaptive_iterations(p: f64, e: f64, cap: usize) -> usize {
    let cap = cap.max(1);
    if e <= 0.0 {
        return 1;
    }
    if e >= 1.0 {
        return cap;
    }
    let n = ((1.0 - p).ln() / e.ln()).ceil();
    if !n.is_finite() || n >= cap as f64 {
        cap
    } else {
        (n as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    /// Plane refit on the winning consensus set.
    pub model: PlaneModel,
    /// Positions in the input pool within the distance threshold of `model`.
    pub sample_inliers: Vec<usize>,
    /// Pool position of the winning hypothesis.
    pub hypothesis: usize,
    pub iterations_run: usize,
}

/// One-point RANSAC over `samples`. `cloud_len` seeds the initial iteration
/// budget and, with [`OutlierDenominator::Cloud`], the outlier fraction.
pub fn one_point_ransac<R: Rng + ?Sized>(
    samples: &[OrientedPoint],
    params: &OpsParams,
    cloud_len: usize,
    rng: &mut R,
) -> Result<RansacResult, OpsError> {
    let pool = samples.len();
    if pool == 0 || pool <= params.min_inliers {
        return Err(OpsError::NoPlaneFound);
    }
    let cap = params.iteration_cap_factor.saturating_mul(pool);
    let denominator = match params.outlier_denominator {
        OutlierDenominator::Samples => pool,
        OutlierDenominator::Cloud => cloud_len.max(pool),
    } as f64;
    let thr = params.dist_threshold;

    let mut budget = cloud_len.clamp(1, cap);
    let mut best: Option<(usize, usize)> = None;
    let mut iter = 0;
    while iter < budget {
        let h = rng.random_range(0..pool);
        let origin = samples[h].position;
        let normal = samples[h].normal;
        let count = samples.iter().filter(|s| normal.dot(s.position - origin).abs() < thr).count();
        if count > params.min_inliers && count > best.map_or(0, |b| b.1) {
            best = Some((h, count));
            let e = 1.0 - count as f64 / denominator;
            budget = adaptive_iterations(params.success_probability, e, cap);
        }
        iter += 1;
    }

    let (h, _) = best.ok_or(OpsError::NoPlaneFound)?;
    let origin = samples[h].position;
    let normal = samples[h].normal;
    let consensus: Vec<usize> = (0..pool)
        .filter(|&i| normal.dot(samples[i].position - origin).abs() < thr)
        .collect();
    let positions = consensus.iter().map(|&i| samples[i].position);
    let model = match fit_plane(positions.clone()) {
        Ok(m) => m,
        Err(_) => {
            let mut sum = Point3::ORIGIN;
            for p in positions {
                sum += p;
            }
            PlaneModel::new(sum / consensus.len() as f64, normal.canonicalized())
        }
    };
    let sample_inliers = consensus
        .into_iter()
        .filter(|&i| model.distance(samples[i].position) < thr)
        .collect();
    Ok(RansacResult {
        model,
        sample_inliers,
        hypothesis: h,
        iterations_run: iter,
    })
}

/// Collects every active cloud point within `threshold` of `model` and refits
/// the plane on them. Points that fall outside the threshold of the refit
/// plane are released again, so every returned inlier is within `threshold`.
pub fn extract_full_inliers(cloud: &PointCloud, model: &PlaneModel, threshold: f64, active: &[bool]) -> PlaneModel {
    let candidates: Vec<usize> = (0..cloud.len())
        .filter(|&i| active[i] && model.distance(cloud.point(i)) < threshold)
        .collect();
    if candidates.is_empty() {
        return PlaneModel::new(model.centroid, model.normal);
    }
    let normal = fit_plane(candidates.iter().map(|&i| cloud.point(i)))
        .map(|m| m.normal)
        .unwrap_or(model.normal);
    settle_inliers(cloud, candidates, normal, threshold)
}

/// Shrinks `indices` until all lie within `threshold` of the plane through
/// their mean with the given normal.
pub(crate) fn settle_inliers(cloud: &PointCloud, mut indices: Vec<usize>, normal: UnitVector3, threshold: f64) -> PlaneModel {
    loop {
        let Some(centroid) = crate::geom::mean_of(cloud, &indices) else {
            return PlaneModel::new(Point3::ORIGIN, normal);
        };
        let before = indices.len();
        indices.retain(|&i| normal.dot(cloud.point(i) - centroid).abs() < threshold);
        if indices.len() == before {
            return PlaneModel {
                centroid,
                normal,
                inliers: indices,
            };
        }
    }
}

/// Greedy multi-plane extraction state shared across orientation groups.
struct Extractor<'a> {
    cloud: &'a PointCloud,
    samples: &'a [OrientedPoint],
    params: &'a OpsParams,
    active: Vec<bool>,
    sample_alive: Vec<bool>,
}

impl Extractor<'_> {
    fn detect_in_pool<R: Rng + ?Sized>(&mut self, pool: &[usize], rng: &mut R) -> Vec<PlaneModel> {
        let mut planes = Vec::new();
        loop {
            let alive: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&s| self.sample_alive[s] && self.active[self.samples[s].index])
                .collect();
            if alive.len() <= self.params.min_inliers {
                break;
            }
            let subset: Vec<OrientedPoint> = alive.iter().map(|&s| self.samples[s]).collect();
            let Ok(result) = one_point_ransac(&subset, self.params, self.cloud.len(), rng) else {
                break;
            };
            let plane = extract_full_inliers(self.cloud, &result.model, self.params.dist_threshold, &self.active);
            for &pos in result.sample_inliers.iter().chain([&result.hypothesis]) {
                self.sample_alive[alive[pos]] = false;
            }
            if plane.inliers.len() >= self.params.min_inliers {
                for &i in &plane.inliers {
                    self.active[i] = false;
                }
                planes.push(plane);
            }
        }
        planes
    }
}

/// Greedy detection on a prepared pool of oriented samples.
pub fn detect_from_samples(
    cloud: &PointCloud,
    samples: &[OrientedPoint],
    params: &OpsParams,
    rng: &mut ChaCha8Rng,
) -> Vec<(PlaneModel, OrientationClass)> {
    let mut ex = Extractor {
        cloud,
        samples,
        params,
        active: vec![true; cloud.len()],
        sample_alive: vec![true; samples.len()],
    };
    let classify = |n: UnitVector3| classify_orientation(n, params.up, params.orientation_tolerance);
    match params.grouping {
        GroupingStrategy::GroupFirst => {
            let mut out = Vec::new();
            for class in [OrientationClass::Horizontal, OrientationClass::Vertical, OrientationClass::Other] {
                let pool: Vec<usize> = (0..samples.len()).filter(|&s| classify(samples[s].normal) == class).collect();
                out.extend(ex.detect_in_pool(&pool, rng).into_iter().map(|p| (p, class)));
            }
            out
        }
        GroupingStrategy::DetectFirst => {
            let pool: Vec<usize> = (0..samples.len()).collect();
            ex.detect_in_pool(&pool, rng)
                .into_iter()
                .map(|p| {
                    let class = classify(p.normal);
                    (p, class)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpsTimings {
    pub index_ms: f64,
    pub sampling_ms: f64,
    pub normals_ms: f64,
    pub detection_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpsDetection {
    pub planes: Vec<(PlaneModel, OrientationClass)>,
    pub sampled: usize,
    pub rejected_normals: usize,
    pub timings: OpsTimings,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Full OPS pipeline on a cloud: index, sample, estimate normals, detect with
/// the configured grouping strategy.
pub fn detect_grouped(cloud: &PointCloud, params: &OpsParams) -> Result<OpsDetection, OpsError> {
    params.validate()?;
    let t = Instant::now();
    let kd = KdIndex::build(cloud)?;
    let index_ms = ms(t);
    detect_grouped_with_index(cloud, &kd, params).map(|mut d| {
        d.timings.index_ms = index_ms;
        d
    })
}

pub fn detect_grouped_with_index(cloud: &PointCloud, kd: &KdIndex, params: &OpsParams) -> Result<OpsDetection, OpsError> {
    params.validate()?;
    if cloud.is_empty() {
        return Err(IndexError::EmptyCloud.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);

    let t = Instant::now();
    let sampled = sample_points(cloud, params.sampling_rate, &mut rng);
    let sampling_ms = ms(t);

    let t = Instant::now();
    let estimates = estimate_many(cloud, kd, &sampled, params.k, params.sigma);
    let mut samples = Vec::with_capacity(sampled.len());
    for (&index, est) in sampled.iter().zip(estimates) {
        if let Ok(e) = est {
            samples.push(OrientedPoint {
                index,
                position: cloud.point(index),
                normal: e.normal,
            });
        }
    }
    let normals_ms = ms(t);

    let t = Instant::now();
    let planes = detect_from_samples(cloud, &samples, params, &mut rng);
    let detection_ms = ms(t);

    Ok(OpsDetection {
        planes,
        sampled: sampled.len(),
        rejected_normals: sampled.len() - samples.len(),
        timings: OpsTimings {
            index_ms: 0.0,
            sampling_ms,
            normals_ms,
            detection_ms,
        },
    })
}

/// Planes in detection order, without orientation labels.
pub fn detect_all_planes(cloud: &PointCloud, params: &OpsParams) -> Result<Vec<PlaneModel>, OpsError> {
    let params = OpsParams {
        grouping: GroupingStrategy::DetectFirst,
        ..params.clone()
    };
    Ok(detect_grouped(cloud, &params)?.planes.into_iter().map(|(p, _)| p).collect())
}
