//! Plane detection in unorganized point clouds.
//!
//! Two detectors share one geometry layer: [`ops`] runs one-point RANSAC over
//! a sparse sample of points with estimated normals, and [`fspf`] grows plane
//! hypotheses from random three-point draws inside small spheres. [`merge`]
//! joins coplanar fragments, [`truth`] builds region-growing reference
//! labelings and scores detections against them, and [`io`] covers file
//! formats, synthetic scenes, and the end-to-end runners behind the CLI.

pub mod eigen;
pub mod error;
pub mod fspf;
pub mod geom;
pub mod io;
pub mod kdtree;
pub mod merge;
pub mod normals;
pub mod ops;
pub mod truth;

pub use error::Error;
pub use geom::{OrientationClass, PlaneModel, Point3, PointCloud, UnitVector3};
pub use kdtree::KdIndex;
pub use truth::SegmentLabeling;
