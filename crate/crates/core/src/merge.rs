//! Pairwise coplanarity merging of detected planes.

use serde::{Deserialize, Serialize};

use crate::geom::{fit_plane, mean_of, point_plane_distance, PlaneModel, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MergeParams {
    /// Degrees.
    pub angle_threshold: f64,
    /// Meters.
    pub offset_threshold: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        MergeParams {
            angle_threshold: 7.0,
            offset_threshold: 0.05,
        }
    }
}

/// Normals within the angle threshold (sign-insensitive) and each centroid
/// within the offset threshold of the other plane.
pub fn coplanar(a: &PlaneModel, b: &PlaneModel, params: &MergeParams) -> bool {
    a.normal.line_angle(b.normal).to_degrees() <= params.angle_threshold
        && point_plane_distance(b.centroid, a) <= params.offset_threshold
        && point_plane_distance(a.centroid, b) <= params.offset_threshold
}

/// Gives every point claimed by several planes to the plane nearest to it
/// (lowest plane index on ties). Planes left without inliers are dropped and
/// planes that lost points are refit.
pub fn deduplicate(planes: Vec<PlaneModel>, cloud: &PointCloud) -> Vec<PlaneModel> {
    let mut owner: Vec<Option<usize>> = vec![None; cloud.len()];
    let mut shared = false;
    for (pi, plane) in planes.iter().enumerate() {
        for &i in &plane.inliers {
            match owner[i] {
                None => owner[i] = Some(pi),
                Some(prev) if prev == pi => {}
                Some(prev) => {
                    shared = true;
                    let p = cloud.point(i);
                    if plane.distance(p) < planes[prev].distance(p) {
                        owner[i] = Some(pi);
                    }
                }
            }
        }
    }
    if !shared && planes.iter().all(|p| is_sorted_unique(&p.inliers)) {
        return planes;
    }
    let mut kept: Vec<Vec<usize>> = vec![Vec::new(); planes.len()];
    for (i, o) in owner.iter().enumerate() {
        if let Some(pi) = *o {
            kept[pi].push(i);
        }
    }
    planes
        .into_iter()
        .zip(kept)
        .filter(|(_, k)| !k.is_empty())
        .map(|(plane, k)| {
            if k == plane.inliers {
                plane
            } else {
                refit(&plane, k, cloud)
            }
        })
        .collect()
}

fn is_sorted_unique(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Plane through `inliers`, falling back to `like`'s normal when the points
/// do not determine one.
fn refit(like: &PlaneModel, inliers: Vec<usize>, cloud: &PointCloud) -> PlaneModel {
    match fit_plane(inliers.iter().map(|&i| cloud.point(i))) {
        Ok(mut m) => {
            m.inliers = inliers;
            m
        }
        Err(_) => PlaneModel {
            centroid: mean_of(cloud, &inliers).unwrap_or(like.centroid),
            normal: like.normal,
            inliers,
        },
    }
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else if b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Merges coplanar planes until no pair passes [`coplanar`].
///
/// Each pass lists all coplanar pairs, orders them by combined inlier count
/// (largest first), and merges greedily so no plane takes part in two merges
/// within a pass. Merged planes are refit on the union of their inliers.
/// Output is sorted by descending inlier count.
pub fn merge_all(planes: Vec<PlaneModel>, cloud: &PointCloud, params: &MergeParams) -> Vec<PlaneModel> {
    let mut planes = deduplicate(planes, cloud);
    loop {
        let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                if coplanar(&planes[i], &planes[j], params) {
                    pairs.push((planes[i].inliers.len() + planes[j].inliers.len(), i, j));
                }
            }
        }
        if pairs.is_empty() {
            break;
        }
        pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut used = vec![false; planes.len()];
        let mut merged_into: Vec<Option<PlaneModel>> = vec![None; planes.len()];
        for &(_, i, j) in &pairs {
            if used[i] || used[j] {
                continue;
            }
            used[i] = true;
            used[j] = true;
            let (big, small) = if planes[i].inliers.len() >= planes[j].inliers.len() { (i, j) } else { (j, i) };
            let inliers = union_sorted(&planes[big].inliers, &planes[small].inliers);
            merged_into[i.min(j)] = Some(refit(&planes[big], inliers, cloud));
        }
        planes = planes
            .into_iter()
            .enumerate()
            .filter_map(|(idx, p)| match merged_into[idx].take() {
                Some(m) => Some(m),
                None if used[idx] => None,
                None => Some(p),
            })
            .collect();
    }
    // Stable: equal sizes keep their relative order.
    planes.sort_by_key(|p| std::cmp::Reverse(p.inliers.len()));
    planes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point3, UnitVector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane(c: [f64; 3], n: [f64; 3]) -> PlaneModel {
        PlaneModel::new(c.into(), UnitVector3::new_normalize(n.into()).unwrap())
    }

    #[test]
    fn coplanar_examples() {
        let p = MergeParams::default();
        let a = plane([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert!(coplanar(&a, &a, &p));
        assert!(coplanar(&a, &plane([1.0, 1.0, 0.0], [0.0, 0.0, 1.0]), &p));
        assert!(coplanar(&a, &plane([1.0, 1.0, 0.0], [0.0, 0.0, -1.0]), &p));
        assert!(!coplanar(&a, &plane([0.0, 0.0, 0.2], [0.0, 0.0, 1.0]), &p));
        assert!(!coplanar(&a, &plane([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]), &p));
    }

    fn wall(n: usize, x0: f64, x1: f64, seed: u64, offset: usize) -> (Vec<Point3>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point3> = (0..n)
            .map(|_| Point3::new(rng.random_range(x0..x1), 0.002 * rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0)))
            .collect();
        (pts, (offset..offset + n).collect())
    }

    #[test]
    fn split_wall_rejoins() {
        let (mut pts, left) = wall(300, 0.0, 1.0, 1, 0);
        let (right_pts, right) = wall(300, 1.0, 2.0, 2, 300);
        pts.extend(right_pts);
        let cloud = PointCloud::new(pts);
        let a = crate::geom::fit_plane_indices(&cloud, left).unwrap();
        let b = crate::geom::fit_plane_indices(&cloud, right).unwrap();
        let out = merge_all(vec![a, b], &cloud, &MergeParams::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].inliers, (0..600).collect::<Vec<_>>());
        assert!(out[0].normal.line_angle(UnitVector3::Y).to_degrees() < 1.0);
    }

    #[test]
    fn orthogonal_planes_stay() {
        let (pts, idx) = wall(200, 0.0, 1.0, 3, 0);
        let mut all = pts;
        let floor: Vec<Point3> = (0..200).map(|i| Point3::new((i % 20) as f64 * 0.05, 0.5 + (i / 20) as f64 * 0.05, -0.5)).collect();
        all.extend(floor);
        let cloud = PointCloud::new(all);
        let a = crate::geom::fit_plane_indices(&cloud, idx).unwrap();
        let b = crate::geom::fit_plane_indices(&cloud, (200..400).collect()).unwrap();
        let out = merge_all(vec![a.clone(), b.clone()], &cloud, &MergeParams::default());
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn copies_collapse() {
        let (pts, idx) = wall(100, 0.0, 1.0, 4, 0);
        let cloud = PointCloud::new(pts);
        let a = crate::geom::fit_plane_indices(&cloud, idx).unwrap();
        let out = merge_all(vec![a.clone(); 5], &cloud, &MergeParams::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].inliers.len(), 100);
    }

    #[test]
    fn overlap_goes_to_nearest() {
        let cloud = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 0.01),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ]);
        let mut a = plane([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        a.inliers = vec![0, 1, 2, 3];
        let mut b = plane([0.0, 0.0, 0.01], [0.0, 0.0, 1.0]);
        b.inliers = vec![0];
        let out = deduplicate(vec![a, b], &cloud);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].inliers, vec![1, 2, 3]);
        assert_eq!(out[1].inliers, vec![0]);
    }
}
