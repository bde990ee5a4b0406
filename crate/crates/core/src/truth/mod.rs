//! Per-point segment labelings, region-growing ground truth, and the two
//! accuracy metrics used to score detectors against it.

mod ground_truth;
mod hungarian;
mod metrics;

pub use ground_truth::{generate_ground_truth, GtParams};
pub use hungarian::{hungarian_match, Assignment};
pub use metrics::{classification_accuracy, segmentation_accuracy, Purity};

use thiserror::Error;

use crate::geom::{OrientationClass, PlaneModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error("labelings cover {left} and {right} points")]
    SizeMismatch { left: usize, right: usize },
    #[error("point {index} has no segment but orientation {orientation:?}")]
    UnsegmentedNotOther { index: usize, orientation: OrientationClass },
    #[error("segment {segment} mixes orientations")]
    MixedSegment { segment: u32 },
    #[error("point {index} is claimed by more than one plane")]
    DoubleClaim { index: usize },
}

/// Per-point segment id and orientation class.
///
/// Unsegmented points are always [`OrientationClass::Other`], and all points
/// of one segment share its orientation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentLabeling {
    plane_id: Vec<Option<u32>>,
    orientation: Vec<OrientationClass>,
}

impl SegmentLabeling {
    /// Every point unsegmented.
    pub fn unsegmented(n: usize) -> Self {
        SegmentLabeling {
            plane_id: vec![None; n],
            orientation: vec![OrientationClass::Other; n],
        }
    }

    pub fn from_parts(plane_id: Vec<Option<u32>>, orientation: Vec<OrientationClass>) -> Result<Self, LabelError> {
        if plane_id.len() != orientation.len() {
            return Err(LabelError::SizeMismatch {
                left: plane_id.len(),
                right: orientation.len(),
            });
        }
        let mut seen: std::collections::HashMap<u32, OrientationClass> = std::collections::HashMap::new();
        for (index, (id, &o)) in plane_id.iter().zip(&orientation).enumerate() {
            match id {
                None if o != OrientationClass::Other => {
                    return Err(LabelError::UnsegmentedNotOther { index, orientation: o })
                }
                None => {}
                Some(s) => {
                    if *seen.entry(*s).or_insert(o) != o {
                        return Err(LabelError::MixedSegment { segment: *s });
                    }
                }
            }
        }
        Ok(SegmentLabeling { plane_id, orientation })
    }

    /// Labels each plane's inliers with the plane's position in `planes` and
    /// its class. Inlier sets must be disjoint.
    pub fn from_planes(n: usize, planes: &[(PlaneModel, OrientationClass)]) -> Result<Self, LabelError> {
        let mut out = SegmentLabeling::unsegmented(n);
        for (id, (plane, class)) in planes.iter().enumerate() {
            for &i in &plane.inliers {
                if out.plane_id[i].is_some() {
                    return Err(LabelError::DoubleClaim { index: i });
                }
                out.plane_id[i] = Some(id as u32);
                out.orientation[i] = *class;
            }
        }
        Ok(out)
    }

    pub(crate) fn set(&mut self, i: usize, segment: u32, class: OrientationClass) {
        self.plane_id[i] = Some(segment);
        self.orientation[i] = class;
    }

    pub fn len(&self) -> usize {
        self.plane_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plane_id.is_empty()
    }

    pub fn plane_id(&self, i: usize) -> Option<u32> {
        self.plane_id[i]
    }

    pub fn orientation(&self, i: usize) -> OrientationClass {
        self.orientation[i]
    }

    pub fn plane_ids(&self) -> &[Option<u32>] {
        &self.plane_id
    }

    pub fn orientations(&self) -> &[OrientationClass] {
        &self.orientation
    }

    /// Distinct segment ids in ascending order.
    pub fn segments(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.plane_id.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn orientation_of(&self, segment: u32) -> Option<OrientationClass> {
        self.plane_id
            .iter()
            .position(|&id| id == Some(segment))
            .map(|i| self.orientation[i])
    }
}
