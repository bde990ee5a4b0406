use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cloud::{write_ply, ParseError};
use crate::error::Error;
use crate::geom::{OrientationClass, PointCloud};
use crate::truth::{LabelError, SegmentLabeling};

pub const OTHER_GRAY: [u8; 3] = [128, 128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    /// One color per orientation class.
    #[default]
    Orientation,
    /// One color per segment id.
    Segment,
}

pub fn orientation_color(class: OrientationClass) -> [u8; 3] {
    match class {
        OrientationClass::Horizontal => [52, 120, 246],
        OrientationClass::Vertical => [240, 160, 30],
        OrientationClass::Other => OTHER_GRAY,
    }
}

/// Color for a segment id: hue stepped by the golden ratio conjugate so that
/// consecutive ids land far apart on the color wheel.
pub fn segment_color(id: u32) -> [u8; 3] {
    let h = (0.1 + id as f64 * 0.618_033_988_749_895).fract();
    hsv_to_rgb(h, 0.75, 0.95)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let p = v * (1.0 - s);
    let q = v * (1.0 - f * s);
    let t = v * (1.0 - (1.0 - f) * s);
    let (r, g, b) = match i as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

pub fn label_colors(labeling: &SegmentLabeling, mode: ColorMode) -> Vec<[u8; 3]> {
    (0..labeling.len())
        .map(|i| match (mode, labeling.plane_id(i)) {
            (ColorMode::Orientation, _) => orientation_color(labeling.orientation(i)),
            (ColorMode::Segment, Some(id)) => segment_color(id),
            (ColorMode::Segment, None) => OTHER_GRAY,
        })
        .collect()
}

/// Writes a colored binary PLY at `path` and the label sidecar next to it
/// (same stem, `.labels` extension).
pub fn save_labeled(cloud: &PointCloud, labeling: &SegmentLabeling, path: &Path, mode: ColorMode) -> Result<(), Error> {
    if cloud.len() != labeling.len() {
        return Err(LabelError::SizeMismatch {
            left: cloud.len(),
            right: labeling.len(),
        }
        .into());
    }
    write_ply(path, cloud, Some(&label_colors(labeling, mode)))?;
    write_sidecar(&path.with_extension("labels"), labeling)?;
    Ok(())
}

/// One line per point: `planeId orientationChar`, with `-1` for unsegmented.
pub fn format_sidecar(labeling: &SegmentLabeling) -> String {
    let mut s = String::with_capacity(labeling.len() * 4);
    for i in 0..labeling.len() {
        let id = labeling.plane_id(i).map_or(-1, i64::from);
        let _ = writeln!(s, "{id} {}", labeling.orientation(i).as_char());
    }
    s
}

pub fn write_sidecar(path: &Path, labeling: &SegmentLabeling) -> std::io::Result<()> {
    fs::write(path, format_sidecar(labeling))
}

pub fn parse_sidecar(text: &str) -> Result<SegmentLabeling, Error> {
    let mut ids = Vec::new();
    let mut classes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let bad = |m: &str| ParseError::Line {
            line: i + 1,
            message: m.to_string(),
        };
        let mut f = line.split_whitespace();
        let (Some(id), Some(c), None) = (f.next(), f.next(), f.next()) else {
            return Err(bad("expected `planeId orientation`").into());
        };
        let id: i64 = id.parse().map_err(|_| bad("plane id is not an integer"))?;
        let mut chars = c.chars();
        let class = match (chars.next(), chars.next()) {
            (Some(ch), None) => OrientationClass::from_char(ch),
            _ => None,
        }
        .ok_or_else(|| bad("orientation must be H, V, or O"))?;
        ids.push(match id {
            -1 => None,
            0..=0xFFFF_FFFF => Some(id as u32),
            _ => return Err(bad("plane id out of range").into()),
        });
        classes.push(class);
    }
    Ok(SegmentLabeling::from_parts(ids, classes)?)
}

pub fn load_sidecar(path: &Path) -> Result<SegmentLabeling, Error> {
    let text = fs::read_to_string(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_sidecar(&text)
}
