//! Synthetic scenes with exact plane membership.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{classify_orientation, OrientationClass, Point3, PointCloud, UnitVector3};
use crate::truth::SegmentLabeling;

/// A rectangle given by its corners in order around the boundary, sampled
/// with `points` uniform points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectSpec {
    pub corners: [Point3; 4],
    pub points: usize,
}

/// Uniform clutter inside an axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterSpec {
    pub count: usize,
    pub min: Point3,
    pub max: Point3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub planes: Vec<RectSpec>,
    #[serde(default)]
    pub clutter: Option<ClutterSpec>,
    #[serde(default = "default_up")]
    pub up: UnitVector3,
    /// Degrees; used to label the truth orientation of each rectangle.
    #[serde(default = "default_tolerance")]
    pub orientation_tolerance: f64,
}

fn default_up() -> UnitVector3 {
    UnitVector3::Z
}

fn default_tolerance() -> f64 {
    7.0
}

impl SceneSpec {
    pub fn new(planes: Vec<RectSpec>, clutter: Option<ClutterSpec>) -> Self {
        SceneSpec {
            planes,
            clutter,
            up: default_up(),
            orientation_tolerance: default_tolerance(),
        }
    }

    /// Closed box with one corner at the origin, `per_face` points on each of
    /// its six faces (floor, ceiling, then four walls) and `clutter` points
    /// uniform inside it.
    pub fn box_room(size: [f64; 3], per_face: usize, clutter: usize) -> Self {
        let [a, b, c] = size;
        let p = |x, y, z| Point3::new(x, y, z);
        let face = |corners| RectSpec { corners, points: per_face };
        let planes = vec![
            face([p(0., 0., 0.), p(a, 0., 0.), p(a, b, 0.), p(0., b, 0.)]),
            face([p(0., 0., c), p(a, 0., c), p(a, b, c), p(0., b, c)]),
            face([p(0., 0., 0.), p(a, 0., 0.), p(a, 0., c), p(0., 0., c)]),
            face([p(0., b, 0.), p(a, b, 0.), p(a, b, c), p(0., b, c)]),
            face([p(0., 0., 0.), p(0., b, 0.), p(0., b, c), p(0., 0., c)]),
            face([p(a, 0., 0.), p(a, b, 0.), p(a, b, c), p(a, 0., c)]),
        ];
        let clutter = (clutter > 0).then(|| ClutterSpec {
            count: clutter,
            min: Point3::ORIGIN,
            max: p(a, b, c),
        });
        SceneSpec::new(planes, clutter)
    }

    /// Random scene of `planes` rectangles with random orientation mix inside
    /// a 6 m cube. Rectangles are spread apart so they do not intersect.
    pub fn random(planes: usize, points_per_m2: f64, clutter: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rects = Vec::with_capacity(planes);
        for i in 0..planes {
            // Each rectangle gets its own 2 m slot along x to stay disjoint.
            let x0 = 2.0 * i as f64;
            let w = rng.random_range(1.0..1.8);
            let h = rng.random_range(1.0..1.8);
            let y0 = rng.random_range(0.0..1.0);
            let z0 = rng.random_range(0.0..1.0);
            let p = |x, y, z| Point3::new(x, y, z);
            let corners = match rng.random_range(0..3) {
                0 => {
                    let z = z0 + rng.random_range(0.0..1.0);
                    [p(x0, y0, z), p(x0 + w, y0, z), p(x0 + w, y0 + h, z), p(x0, y0 + h, z)]
                }
                1 => {
                    let y = y0 + rng.random_range(0.0..1.0);
                    [p(x0, y, z0), p(x0 + w, y, z0), p(x0 + w, y, z0 + h), p(x0, y, z0 + h)]
                }
                _ => {
                    // Tilted 45 degrees about the x axis.
                    let s = h / 2f64.sqrt();
                    [p(x0, y0, z0), p(x0 + w, y0, z0), p(x0 + w, y0 + s, z0 + s), p(x0, y0 + s, z0 + s)]
                }
            };
            let area = w * h;
            rects.push(RectSpec {
                corners,
                points: (area * points_per_m2).round() as usize,
            });
        }
        let clutter = (clutter > 0).then(|| ClutterSpec {
            count: clutter,
            min: Point3::new(0.0, 0.0, 0.0),
            max: Point3::new(2.0 * planes as f64, 3.0, 3.0),
        });
        SceneSpec::new(rects, clutter)
    }
}

/// Edge vectors `(u, v)` from corner 0, checked to form a non-degenerate
/// rectangle.
fn rect_axes(r: &RectSpec) -> Result<(Point3, Point3), Error> {
    let [c0, c1, c2, c3] = r.corners;
    let u = c1 - c0;
    let v = c3 - c0;
    let scale = u.norm().max(v.norm());
    let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
    if !(scale > 0.0) || r.corners.iter().any(|c| !c.is_finite()) {
        return bad("rectangle corners must be finite and distinct");
    }
    if (c0 + u + v - c2).norm() > 1e-9 * scale {
        return bad("corners do not form a parallelogram");
    }
    if u.dot(v).abs() > 1e-9 * scale * scale {
        return bad("rectangle edges are not perpendicular");
    }
    if u.cross(v).norm() <= 1e-12 * scale * scale {
        return bad("rectangle has zero area");
    }
    Ok((u, v))
}

/// Samples every rectangle uniformly, adds isotropic Gaussian noise with
/// standard deviation `noise_sigma` to plane points, then appends clutter.
/// Truth segment ids are rectangle positions in the spec; clutter is
/// unsegmented.
pub fn gen_synthetic(spec: &SceneSpec, noise_sigma: f64, seed: u64) -> Result<(PointCloud, SegmentLabeling), Error> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidSpec("noise sigma must be finite and nonnegative".into()));
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut ids = Vec::new();
    let mut classes = Vec::new();

    for (id, rect) in spec.planes.iter().enumerate() {
        let (u, v) = rect_axes(rect)?;
        let normal = UnitVector3::new_normalize(u.cross(v)).expect("checked nonzero area");
        let class = classify_orientation(normal, spec.up, spec.orientation_tolerance);
        for _ in 0..rect.points {
            let mut p = rect.corners[0] + u * rng.random::<f64>() + v * rng.random::<f64>();
            if noise_sigma > 0.0 {
                p += Point3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            }
            points.push(p);
            ids.push(Some(id as u32));
            classes.push(class);
        }
    }
    if let Some(c) = &spec.clutter {
        if !(c.min.is_finite() && c.max.is_finite()) || c.max.x < c.min.x || c.max.y < c.min.y || c.max.z < c.min.z {
            return Err(Error::InvalidSpec("clutter box is empty or not finite".into()));
        }
        for _ in 0..c.count {
            let r = Point3::new(rng.random(), rng.random(), rng.random());
            let span = c.max - c.min;
            points.push(c.min + Point3::new(r.x * span.x, r.y * span.y, r.z * span.z));
            ids.push(None);
            classes.push(OrientationClass::Other);
        }
    }
    let labeling = SegmentLabeling::from_parts(ids, classes).expect("constructed consistently");
    Ok((PointCloud::new(points), labeling))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_box_room() {
        let (cloud, truth) = gen_synthetic(&SceneSpec::box_room([1.0; 3], 1000, 0), 0.005, 1).unwrap();
        assert_eq!(cloud.len(), 6000);
        assert_eq!(truth.segments(), (0..6).collect::<Vec<_>>());
        let h = (0..6).filter(|&s| truth.orientation_of(s) == Some(OrientationClass::Horizontal)).count();
        assert_eq!(h, 2);
    }

    #[test]
    fn noise_free_plane_is_exact() {
        let spec = SceneSpec::new(
            vec![RectSpec {
                corners: [
                    Point3::new(0.0, 0.0, 1.5),
                    Point3::new(2.0, 0.0, 1.5),
                    Point3::new(2.0, 1.0, 1.5),
                    Point3::new(0.0, 1.0, 1.5),
                ],
                points: 500,
            }],
            None,
        );
        let (cloud, _) = gen_synthetic(&spec, 0.0, 3).unwrap();
        assert!(cloud.points.iter().all(|p| p.z == 1.5));
    }

    #[test]
    fn clutter_only_all_other() {
        let spec = SceneSpec::new(
            vec![],
            Some(ClutterSpec {
                count: 100,
                min: Point3::ORIGIN,
                max: Point3::new(1.0, 1.0, 1.0),
            }),
        );
        let (cloud, truth) = gen_synthetic(&spec, 0.01, 3).unwrap();
        assert_eq!(cloud.len(), 100);
        assert!(truth.segments().is_empty());
    }

    #[test]
    fn invalid_specs() {
        let mut r = SceneSpec::box_room([1.0; 3], 10, 0);
        r.planes[0].corners[2] = Point3::new(5.0, 5.0, 5.0);
        assert!(matches!(gen_synthetic(&r, 0.0, 0), Err(Error::InvalidSpec(_))));
        assert!(gen_synthetic(&SceneSpec::box_room([1.0; 3], 10, 0), -1.0, 0).is_err());
    }

    #[test]
    fn seeded() {
        let s = SceneSpec::random(5, 400.0, 100, 9);
        assert_eq!(gen_synthetic(&s, 0.005, 2).unwrap(), gen_synthetic(&s, 0.005, 2).unwrap());
    }
}
