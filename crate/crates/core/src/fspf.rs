//! Fast sampling plane filtering adapted to unorganized clouds.
//!
//! Each iteration draws a seed point uniformly, two more points from a sphere
//! of radius `r1` around it, and forms a plane from the three. It then draws
//! `N_loc − 3` points (with replacement) from a sphere of radius `r2` and
//! accepts the plane when more than `α_min · N_loc` of them lie within `θ_h`.
//! Accepted planes are refit on their inliers. The loop ends after `K_max`
//! iterations or once `N_max` inlier draws have been accumulated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fit_plane_indices, PlaneModel, Point3, PointCloud, UnitVector3};
use crate::kdtree::KdIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FspfError {
    #[error("sample points are collinear")]
    CollinearSample,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Which points an accepted plane claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InlierClaim {
    /// The distinct local draws that passed the distance test.
    #[default]
    Draws,
    /// Every cloud point inside the `r2` sphere.
    Sphere,
}

/// Total inlier budget, absolute or proportional to the cloud size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InlierBudget {
    Points(usize),
    PerCloudPoint(f64),
}

impl InlierBudget {
    pub fn resolve(self, cloud_len: usize) -> usize {
        match self {
            InlierBudget::Points(n) => n,
            InlierBudget::PerCloudPoint(f) => (f * cloud_len as f64).ceil() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FspfParams {
    pub max_inlier_points: InlierBudget,
    pub max_iterations: usize,
    pub local_samples: usize,
    pub min_inlier_fraction: f64,
    pub dist_threshold: f64,
    pub r1: f64,
    pub r2: f64,
    pub claim: InlierClaim,
    pub rng_seed: u64,
}

impl Default for FspfParams {
    fn default() -> Self {
        FspfParams {
            max_inlier_points: InlierBudget::PerCloudPoint(0.5),
            max_iterations: 20_000,
            local_samples: 80,
            min_inlier_fraction: 0.8,
            dist_threshold: 0.05,
            r1: 0.07,
            r2: 0.14,
            claim: InlierClaim::Draws,
            rng_seed: 0,
        }
    }
}

impl FspfParams {
    pub fn validate(&self) -> Result<(), FspfError> {
        let bad = |m: &str| Err(FspfError::InvalidParams(m.to_string()));
        if self.local_samples < 3 {
            return bad("local sample count must be at least 3");
        }
        if !(self.min_inlier_fraction > 0.0 && self.min_inlier_fraction <= 1.0) {
            return bad("minimum inlier fraction must lie in (0, 1]");
        }
        if !(self.r1 > 0.0 && self.r2 > 0.0) {
            return bad("sphere radii must be positive");
        }
        if !(self.dist_threshold > 0.0) {
            return bad("distance threshold must be positive");
        }
        if let InlierBudget::PerCloudPoint(f) = self.max_inlier_points {
            if !(f >= 0.0 && f.is_finite()) {
                return bad("inlier budget must be nonnegative");
            }
        }
        Ok(())
    }
}

/// Unit normal of the plane through three points, sign-canonicalized.
pub fn three_point_normal(p0: Point3, p1: Point3, p2: Point3) -> Result<UnitVector3, FspfError> {
    let a = p1 - p0;
    let b = p2 - p0;
    let c = a.cross(b);
    let scale = a.norm() * b.norm();
    if !(c.norm() >= 1e-12 * scale) || scale == 0.0 {
        return Err(FspfError::CollinearSample);
    }
    UnitVector3::canonical(c).ok_or(FspfError::CollinearSample)
}

/// Record of one accepted hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Acceptance {
    pub seed: usize,
    pub hypothesis: UnitVector3,
    /// Local draws that passed the distance test, duplicates included.
    pub inlier_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FspfOutput {
    pub planes: Vec<PlaneModel>,
    pub acceptances: Vec<Acceptance>,
    pub iterations: usize,
    pub inlier_total: usize,
}

pub fn fspf_detect(cloud: &PointCloud, kd: &KdIndex, params: &FspfParams) -> Result<FspfOutput, FspfError> {
    params.validate()?;
    let n = cloud.len();
    let mut out = FspfOutput::default();
    if n < 3 {
        return Ok(out);
    }
    let n_max = params.max_inlier_points.resolve(n);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let accept_above = params.min_inlier_fraction * params.local_samples as f64;
    let mut near = Vec::new();
    let mut local = Vec::new();
    let mut hits: Vec<usize> = Vec::with_capacity(params.local_samples);
    // Dedup marker for the distinct inlier set of the current iteration.
    let mut mark = vec![u32::MAX; n];

    while out.inlier_total < n_max && out.iterations < params.max_iterations {
        out.iterations += 1;
        let iteration = out.iterations as u32;
        let i0 = rng.random_range(0..n);
        let p0 = cloud.point(i0);

        kd.radius_search_into(p0, params.r1, &mut near);
        if near.len() < 3 {
            continue;
        }
        let i1 = draw_excluding(&near, &[i0], &mut rng);
        let i2 = draw_excluding(&near, &[i0, i1], &mut rng);
        let Ok(normal) = three_point_normal(p0, cloud.point(i1), cloud.point(i2)) else {
            continue;
        };

        kd.radius_search_into(p0, params.r2, &mut local);
        hits.clear();
        for _ in 3..params.local_samples {
            let j = local[rng.random_range(0..local.len())];
            if normal.dot(cloud.point(j) - p0).abs() < params.dist_threshold {
                hits.push(j);
            }
        }
        if (hits.len() as f64) <= accept_above {
            continue;
        }

        let mut distinct = Vec::with_capacity(hits.len());
        for &j in &hits {
            if mark[j] != iteration {
                mark[j] = iteration;
                distinct.push(j);
            }
        }
        distinct.sort_unstable();
        let claimed = match params.claim {
            InlierClaim::Draws => distinct,
            InlierClaim::Sphere => local.clone(),
        };
        // Two or fewer distinct inliers cannot support a refit.
        let Ok(plane) = fit_plane_indices(cloud, claimed) else {
            continue;
        };
        out.inlier_total += hits.len();
        out.acceptances.push(Acceptance {
            seed: i0,
            hypothesis: normal,
            inlier_draws: hits.len(),
        });
        out.planes.push(plane);
    }
    Ok(out)
}

/// Uniform draw from `pool` rejecting the listed indices. `pool` must contain
/// more distinct values than `exclude`.
fn draw_excluding<R: Rng + ?Sized>(pool: &[usize], exclude: &[usize], rng: &mut R) -> usize {
    loop {
        let v = pool[rng.random_range(0..pool.len())];
        if !exclude.contains(&v) {
            return v;
        }
    }
}
