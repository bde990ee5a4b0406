//! PLY (ascii and binary little-endian) and whitespace XYZ readers, plus a
//! binary PLY writer for labeled output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::{Point3, PointCloud};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("byte {offset}: {message}")]
    Byte { offset: usize, message: String },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
}

fn at_line(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Line {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    PlyBinaryLittleEndian,
    XyzText,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    pub format: CloudFormat,
    /// Points with a NaN or infinite coordinate, dropped on load.
    pub dropped_non_finite: usize,
}

/// Reads a cloud, choosing the parser from the file contents: files starting
/// with `ply` are PLY, anything else is XYZ text.
pub fn load_cloud(path: &Path) -> Result<LoadedCloud, ParseError> {
    let bytes = fs::read(path).map_err(|source| ParseError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let loaded = parse_cloud(&bytes)?;
    if loaded.dropped_non_finite > 0 {
        log::warn!(
            "{}: dropped {} non-finite point(s)",
            path.display(),
            loaded.dropped_non_finite
        );
    }
    Ok(loaded)
}

pub fn parse_cloud(bytes: &[u8]) -> Result<LoadedCloud, ParseError> {
    if bytes.starts_with(b"ply\n") || bytes.starts_with(b"ply\r\n") {
        parse_ply(bytes)
    } else {
        parse_xyz(bytes)
    }
}

fn finish(points: Vec<Point3>, format: CloudFormat) -> LoadedCloud {
    let total = points.len();
    let kept: Vec<Point3> = points.into_iter().filter(|p| p.is_finite()).collect();
    LoadedCloud {
        dropped_non_finite: total - kept.len(),
        cloud: PointCloud::new(kept),
        format,
    }
}

/// One point per line, first three whitespace-separated fields. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_xyz(bytes: &[u8]) -> Result<LoadedCloud, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::Byte {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut xyz = [0.0; 3];
        for v in &mut xyz {
            let tok = fields.next().ok_or_else(|| at_line(i + 1, "expected three coordinates"))?;
            *v = tok
                .parse()
                .map_err(|_| at_line(i + 1, format!("not a number: {tok:?}")))?;
        }
        points.push(Point3::from(xyz));
    }
    Ok(finish(points, CloudFormat::XyzText))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: CloudFormat,
    elements: Vec<Element>,
    body_offset: usize,
    lines: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, ParseError> {
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut pos = 0;
    let mut line_no = 0;
    loop {
        let Some(end) = bytes[pos..].iter().position(|&b| b == b'\n') else {
            return Err(at_line(line_no + 1, "header ended without end_header"));
        };
        line_no += 1;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| at_line(line_no, "header is not text"))?
            .trim_end_matches('\r');
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["ply"] if line_no == 1 => {}
            ["format", "ascii", _] => format = Some(CloudFormat::PlyAscii),
            ["format", "binary_little_endian", _] => format = Some(CloudFormat::PlyBinaryLittleEndian),
            ["format", other, ..] => return Err(ParseError::UnsupportedFormat(format!("PLY {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| at_line(line_no, format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, _name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| at_line(line_no, "property before any element"))?;
                let count = Scalar::parse(count).ok_or_else(|| at_line(line_no, format!("unknown type {count:?}")))?;
                let item = Scalar::parse(item).ok_or_else(|| at_line(line_no, format!("unknown type {item:?}")))?;
                el.properties.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| at_line(line_no, "property before any element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| at_line(line_no, format!("unknown type {ty:?}")))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            ["end_header"] => break,
            _ => return Err(at_line(line_no, format!("unrecognized header line {line:?}"))),
        }
    }
    let format = format.ok_or_else(|| at_line(line_no, "missing format line"))?;
    Ok(Header {
        format,
        elements,
        body_offset: pos,
        lines: line_no,
    })
}

/// Positions of x, y, z among the vertex element's properties.
fn xyz_slots(el: &Element) -> Result<[usize; 3], ParseError> {
    let find = |axis: &str| {
        el.properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
            .ok_or_else(|| ParseError::UnsupportedFormat(format!("vertex element has no {axis} property")))
    };
    Ok([find("x")?, find("y")?, find("z")?])
}

pub fn parse_ply(bytes: &[u8]) -> Result<LoadedCloud, ParseError> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| ParseError::UnsupportedFormat("no vertex element".into()))?;
    let slots = xyz_slots(&header.elements[vertex_pos])?;
    let body = &bytes[header.body_offset..];
    let points = match header.format {
        CloudFormat::PlyAscii => read_ascii_body(body, &header, vertex_pos, slots)?,
        CloudFormat::PlyBinaryLittleEndian => read_binary_body(body, &header, vertex_pos, slots)?,
        CloudFormat::XyzText => unreachable!(),
    };
    Ok(finish(points, header.format))
}

fn read_ascii_body(body: &[u8], header: &Header, vertex_pos: usize, slots: [usize; 3]) -> Result<Vec<Point3>, ParseError> {
    let text = std::str::from_utf8(body).map_err(|e| ParseError::Byte {
        offset: e.valid_up_to(),
        message: "invalid UTF-8 in ascii body".into(),
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (header.lines + i + 1, l));
    let mut points = Vec::new();
    for (ei, el) in header.elements.iter().enumerate() {
        if ei > vertex_pos {
            break;
        }
        for _ in 0..el.count {
            let (line_no, line) = loop {
                match lines.next() {
                    Some((_, l)) if l.trim().is_empty() => continue,
                    Some(x) => break x,
                    None => return Err(at_line(header.lines + 1, format!("file ended inside element {:?}", el.name))),
                }
            };
            let mut tokens = line.split_whitespace();
            let mut next = || -> Result<f64, ParseError> {
                let tok = tokens.next().ok_or_else(|| at_line(line_no, "too few values"))?;
                tok.parse::<f64>()
                    .map_err(|_| at_line(line_no, format!("not a number: {tok:?}")))
            };
            let mut values = Vec::with_capacity(el.properties.len());
            for prop in &el.properties {
                match prop {
                    Property::Scalar { .. } => values.push(next()?),
                    Property::List { .. } => {
                        let n = next()?;
                        for _ in 0..n as usize {
                            next()?;
                        }
                        values.push(f64::NAN);
                    }
                }
            }
            if ei == vertex_pos {
                points.push(Point3::new(values[slots[0]], values[slots[1]], values[slots[2]]));
            }
        }
    }
    Ok(points)
}

fn read_binary_body(body: &[u8], header: &Header, vertex_pos: usize, slots: [usize; 3]) -> Result<Vec<Point3>, ParseError> {
    let base = header.body_offset;
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str| -> Result<&[u8], ParseError> {
        if pos + n > body.len() {
            return Err(ParseError::Byte {
                offset: base + pos,
                message: format!("truncated {what}: need {n} bytes, {} left", body.len() - pos),
            });
        }
        let s = &body[pos..pos + n];
        pos += n;
        Ok(s)
    };
    let mut points = Vec::new();
    for (ei, el) in header.elements.iter().enumerate() {
        if ei > vertex_pos {
            break;
        }
        let mut values = vec![0.0; el.properties.len()];
        for _ in 0..el.count {
            for (pi, prop) in el.properties.iter().enumerate() {
                match *prop {
                    Property::Scalar { ty, .. } => values[pi] = ty.read_le(take(ty.size(), &el.name)?),
                    Property::List { count, item } => {
                        let n = count.read_le(take(count.size(), &el.name)?);
                        if !(n >= 0.0) {
                            return Err(ParseError::Byte {
                                offset: base + pos,
                                message: "negative list length".into(),
                            });
                        }
                        take(n as usize * item.size(), &el.name)?;
                    }
                }
            }
            if ei == vertex_pos {
                points.push(Point3::new(values[slots[0]], values[slots[1]], values[slots[2]]));
            }
        }
    }
    Ok(points)
}

/// Binary little-endian PLY with double coordinates and, when given, one
/// uchar RGB triple per vertex.
pub fn write_ply(path: &Path, cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> std::io::Result<()> {
    if let Some(c) = colors {
        assert_eq!(c.len(), cloud.len(), "one color per point");
    }
    let mut out = Vec::with_capacity(64 + cloud.len() * 27);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n",
        cloud.len()
    )?;
    if colors.is_some() {
        out.extend_from_slice(b"property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.extend_from_slice(b"end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        for v in p.to_array() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(c) = colors {
            out.extend_from_slice(&c[i]);
        }
    }
    fs::write(path, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_two_points() {
        let c = parse_cloud(b"0 0 0\n1 0 0\n").unwrap();
        assert_eq!(c.cloud.len(), 2);
        assert_eq!(c.cloud.point(1), Point3::new(1.0, 0.0, 0.0));
        assert_eq!(c.format, CloudFormat::XyzText);
    }

    #[test]
    fn xyz_bad_token_reports_line() {
        match parse_cloud(b"0 0 0\n1 x 0\n") {
            Err(ParseError::Line { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ascii_ply_with_extras() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 3\nproperty float x\nproperty float y\nproperty uchar red\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    0 0 9 0\n1 0 9 nan\n0 1 9 2.5\n3 0 1 2\n";
        let c = parse_cloud(text.as_bytes()).unwrap();
        assert_eq!(c.cloud.points, vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.0, 1.0, 2.5)]);
        assert_eq!(c.dropped_non_finite, 1);
        assert_eq!(c.format, CloudFormat::PlyAscii);
    }

    #[test]
    fn big_endian_unsupported() {
        let text = b"ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nend_header\n";
        assert!(matches!(parse_cloud(text), Err(ParseError::UnsupportedFormat(_))));
    }

    fn binary_f32(points: &[[f32; 3]]) -> Vec<u8> {
        let mut b = format!(
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
            points.len()
        )
        .into_bytes();
        for p in points {
            for v in p {
                b.extend_from_slice(&v.to_le_bytes());
            }
        }
        b
    }

    #[test]
    fn binary_nan_dropped() {
        let mut pts: Vec<[f32; 3]> = (0..100).map(|i| [i as f32, 0.0, 1.0]).collect();
        pts[40][1] = f32::NAN;
        let c = parse_cloud(&binary_f32(&pts)).unwrap();
        assert_eq!(c.cloud.len(), 99);
        assert_eq!(c.dropped_non_finite, 1);
        assert_eq!(c.cloud.point(40), Point3::new(41.0, 0.0, 1.0));
    }

    #[test]
    fn truncated_binary_offset() {
        let full = binary_f32(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let header_len = full.len() - 24;
        let cut = &full[..full.len() - 2];
        match parse_cloud(cut) {
            Err(ParseError::Byte { offset, .. }) => assert_eq!(offset, header_len + 12 + 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn binary_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = PointCloud::new(vec![
            Point3::new(0.1, -2.5e-9, 1e300),
            Point3::new(f64::MIN_POSITIVE, 3.0, -0.0),
        ]);
        write_ply(&path, &cloud, Some(&[[1, 2, 3], [4, 5, 6]])).unwrap();
        let back = load_cloud(&path).unwrap();
        assert_eq!(back.format, CloudFormat::PlyBinaryLittleEndian);
        for (a, b) in cloud.points.iter().zip(&back.cloud.points) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
