//! Points, unit normals, plane models, and the primitive operations shared by
//! every detector.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::SymMat3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

/// A point (or displacement) in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance_squared(self, o: Point3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn distance(self, o: Point3) -> f64 {
        self.distance_squared(o).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn coord(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Point3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// A direction with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "[f64; 3]")]
pub struct UnitVector3(Point3);

impl UnitVector3 {
    pub const X: UnitVector3 = UnitVector3(Point3::new(1.0, 0.0, 0.0));
    pub const Y: UnitVector3 = UnitVector3(Point3::new(0.0, 1.0, 0.0));
    pub const Z: UnitVector3 = UnitVector3(Point3::new(0.0, 0.0, 1.0));

    /// Normalizes `v`; `None` for zero-length or non-finite input.
    pub fn new_normalize(v: Point3) -> Option<Self> {
        let n = v.norm();
        if n > 0.0 && n.is_finite() {
            Some(UnitVector3(v / n))
        } else {
            None
        }
    }

    /// Normalized and sign-canonicalized so the largest-magnitude component
    /// is positive.
    pub fn canonical(v: Point3) -> Option<Self> {
        Self::new_normalize(v).map(UnitVector3::canonicalized)
    }

    pub fn canonicalized(self) -> Self {
        let v = self.0;
        let (ax, ay, az) = (v.x.abs(), v.y.abs(), v.z.abs());
        let dominant = if ax >= ay && ax >= az {
            v.x
        } else if ay >= az {
            v.y
        } else {
            v.z
        };
        if dominant < 0.0 {
            UnitVector3(-v)
        } else {
            self
        }
    }

    #[inline]
    pub fn as_point(self) -> Point3 {
        self.0
    }

    #[inline]
    pub fn dot(self, v: Point3) -> f64 {
        self.0.dot(v)
    }

    /// Unsigned angle between the lines spanned by `self` and `other`, in
    /// radians within `[0, π/2]`.
    pub fn line_angle(self, other: UnitVector3) -> f64 {
        // atan2 form stays accurate for nearly parallel vectors.
        let c = self.0.dot(other.0).abs();
        let s = self.0.cross(other.0).norm();
        s.atan2(c)
    }

    pub fn x(self) -> f64 {
        self.0.x
    }
    pub fn y(self) -> f64 {
        self.0.y
    }
    pub fn z(self) -> f64 {
        self.0.z
    }
}

impl Neg for UnitVector3 {
    type Output = UnitVector3;
    fn neg(self) -> UnitVector3 {
        UnitVector3(-self.0)
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(u: UnitVector3) -> Self {
        u.0.to_array()
    }
}

impl<'de> Deserialize<'de> for UnitVector3 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        UnitVector3::new_normalize(Point3::from(a))
            .ok_or_else(|| serde::de::Error::custom("direction must be finite and nonzero"))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point3 {
        self.points[i]
    }
}

impl From<Vec<Point3>> for PointCloud {
    fn from(points: Vec<Point3>) -> Self {
        PointCloud { points }
    }
}

/// A plane through `centroid` with unit `normal`, plus the indices of the
/// cloud points assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneModel {
    pub centroid: Point3,
    pub normal: UnitVector3,
    pub inliers: Vec<usize>,
}

impl PlaneModel {
    pub fn new(centroid: Point3, normal: UnitVector3) -> Self {
        PlaneModel {
            centroid,
            normal,
            inliers: Vec::new(),
        }
    }

    #[inline]
    pub fn distance(&self, p: Point3) -> f64 {
        point_plane_distance(p, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrientationClass {
    Horizontal,
    Vertical,
    Other,
}

impl OrientationClass {
    pub fn as_char(self) -> char {
        match self {
            OrientationClass::Horizontal => 'H',
            OrientationClass::Vertical => 'V',
            OrientationClass::Other => 'O',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'H' => Some(OrientationClass::Horizontal),
            'V' => Some(OrientationClass::Vertical),
            'O' => Some(OrientationClass::Other),
            _ => None,
        }
    }
}

/// `|(p − centroid) · normal|`.
#[inline]
pub fn point_plane_distance(p: Point3, plane: &PlaneModel) -> f64 {
    plane.normal.dot(p - plane.centroid).abs()
}

/// Least-squares plane through `points`: centroid is the mean, normal is the
/// minimum-eigenvalue eigenvector of the centered scatter.
pub fn fit_plane<I>(points: I) -> Result<PlaneModel, GeomError>
where
    I: IntoIterator<Item = Point3>,
    I::IntoIter: Clone,
{
    let iter = points.into_iter();
    let mut count = 0usize;
    let mut sum = Point3::ORIGIN;
    for p in iter.clone() {
        sum += p;
        count += 1;
    }
    if count < 3 {
        return Err(GeomError::DegenerateInput("fewer than three points"));
    }
    let centroid = sum / count as f64;
    let mut scatter = SymMat3::ZERO;
    for p in iter {
        scatter.add_outer((p - centroid).to_array(), 1.0);
    }
    let eig = scatter.eigen();
    if !eig.min_is_isolated() {
        return Err(GeomError::DegenerateInput("points are collinear or coincident"));
    }
    let normal = UnitVector3::canonical(Point3::from(eig.min_vector()))
        .ok_or(GeomError::DegenerateInput("non-finite scatter"))?;
    Ok(PlaneModel::new(centroid, normal))
}

/// Fits a plane to the cloud points at `indices` and records them as inliers.
pub fn fit_plane_indices(cloud: &PointCloud, indices: Vec<usize>) -> Result<PlaneModel, GeomError> {
    let mut plane = fit_plane(indices.iter().map(|&i| cloud.point(i)))?;
    plane.inliers = indices;
    Ok(plane)
}

/// Mean of the cloud points at `indices`; `None` when empty.
pub fn mean_of(cloud: &PointCloud, indices: &[usize]) -> Option<Point3> {
    if indices.is_empty() {
        return None;
    }
    let mut sum = Point3::ORIGIN;
    for &i in indices {
        sum += cloud.point(i);
    }
    Some(sum / indices.len() as f64)
}

/// Orientation class of a surface normal relative to `up`.
pub fn classify_orientation(normal: UnitVector3, up: UnitVector3, tol_degrees: f64) -> OrientationClass {
    let angle = normal.line_angle(up).to_degrees();
    if angle <= tol_degrees {
        OrientationClass::Horizontal
    } else if (90.0 - angle).abs() <= tol_degrees {
        OrientationClass::Vertical
    } else {
        OrientationClass::Other
    }
}
