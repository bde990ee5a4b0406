use serde::{Deserialize, Serialize};

use super::SegmentLabeling;
use crate::eigen::SymMat3;
use crate::geom::{classify_orientation, fit_plane_indices, OrientationClass, Point3, PointCloud, UnitVector3};
use crate::kdtree::KdIndex;
use crate::normals::{estimate_many, NormalEstimate, Sigma};

/// Accepted points between two refits of a growing region's plane.
const REFIT_INTERVAL: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GtParams {
    /// Meters.
    pub dist_threshold: f64,
    /// Degrees.
    pub normal_angle_threshold: f64,
    pub min_plane_size: usize,
    pub k: usize,
    pub up: UnitVector3,
    /// Degrees.
    pub orientation_tolerance: f64,
}

impl Default for GtParams {
    fn default() -> Self {
        GtParams {
            dist_threshold: 0.05,
            normal_angle_threshold: 7.0,
            min_plane_size: 50,
            k: 10,
            up: UnitVector3::Z,
            orientation_tolerance: 7.0,
        }
    }
}

/// Running first and second moments of a region, relative to its seed.
struct Moments {
    origin: Point3,
    count: usize,
    sum: Point3,
    outer: SymMat3,
}

impl Moments {
    fn new(origin: Point3) -> Self {
        Moments {
            origin,
            count: 0,
            sum: Point3::ORIGIN,
            outer: SymMat3::ZERO,
        }
    }

    fn add(&mut self, p: Point3) {
        let d = p - self.origin;
        self.count += 1;
        self.sum += d;
        self.outer.add_outer(d.to_array(), 1.0);
    }

    /// Centroid and least-variance direction, if the scatter determines one.
    fn plane(&self) -> Option<(Point3, UnitVector3)> {
        if self.count < 3 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        let o = &self.outer;
        let cov = SymMat3 {
            xx: o.xx / n - mean.x * mean.x,
            xy: o.xy / n - mean.x * mean.y,
            xz: o.xz / n - mean.x * mean.z,
            yy: o.yy / n - mean.y * mean.y,
            yz: o.yz / n - mean.y * mean.z,
            zz: o.zz / n - mean.z * mean.z,
        };
        let eig = cov.eigen();
        if !eig.min_is_isolated() {
            return None;
        }
        let normal = UnitVector3::canonical(Point3::from(eig.min_vector()))?;
        Some((self.origin + mean, normal))
    }
}

/// Labels dense planar regions found by region growing over the kNN graph.
///
/// Seeds are taken in order of increasing surface variation. A neighbor joins
/// the region when its normal is within the angle threshold of the region
/// normal and it lies closer than the distance threshold to the region plane.
/// Regions smaller than `min_plane_size` stay unsegmented.
pub fn generate_ground_truth(cloud: &PointCloud, params: &GtParams) -> SegmentLabeling {
    let n = cloud.len();
    let mut labels = SegmentLabeling::unsegmented(n);
    if n < params.min_plane_size.max(1) {
        return labels;
    }
    let Ok(kd) = KdIndex::build(cloud) else {
        return labels;
    };
    let all: Vec<usize> = (0..n).collect();
    let normals: Vec<Option<NormalEstimate>> = estimate_many(cloud, &kd, &all, params.k, Sigma::MeanNeighborDistance)
        .into_iter()
        .map(Result::ok)
        .collect();

    let mut seeds: Vec<usize> = (0..n).filter(|&i| normals[i].is_some()).collect();
    seeds.sort_by(|&a, &b| {
        let ca = normals[a].unwrap().curvature;
        let cb = normals[b].unwrap().curvature;
        ca.total_cmp(&cb).then(a.cmp(&b))
    });

    let angle_limit = params.normal_angle_threshold.to_radians();
    let mut taken = vec![false; n];
    let mut next_id = 0u32;
    let mut region = Vec::new();
    let mut frontier = Vec::new();

    for seed in seeds {
        if taken[seed] {
            continue;
        }
        let seed_point = cloud.point(seed);
        let mut normal = normals[seed].unwrap().normal;
        let mut centroid = seed_point;
        let mut moments = Moments::new(seed_point);
        let mut since_refit = 0;

        region.clear();
        frontier.clear();
        taken[seed] = true;
        region.push(seed);
        frontier.push(seed);
        moments.add(seed_point);

        while let Some(q) = frontier.pop() {
            for nb in kd.knn(cloud.point(q), params.k, Some(q)) {
                let j = nb.index;
                if taken[j] {
                    continue;
                }
                let Some(est) = normals[j] else { continue };
                let p = cloud.point(j);
                if est.normal.line_angle(normal) > angle_limit || normal.dot(p - centroid).abs() >= params.dist_threshold {
                    continue;
                }
                taken[j] = true;
                region.push(j);
                frontier.push(j);
                moments.add(p);
                since_refit += 1;
                if since_refit == REFIT_INTERVAL {
                    since_refit = 0;
                    if let Some((c, nrm)) = moments.plane() {
                        centroid = c;
                        normal = nrm;
                    }
                }
            }
        }

        if region.len() < params.min_plane_size {
            continue;
        }
        region.sort_unstable();
        let class = match fit_plane_indices(cloud, region.clone()) {
            Ok(plane) => classify_orientation(plane.normal, params.up, params.orientation_tolerance),
            Err(_) => OrientationClass::Other,
        };
        for &i in &region {
            labels.set(i, next_id, class);
        }
        next_id += 1;
    }
    labels
}
