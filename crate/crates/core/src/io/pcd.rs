//! PCD v0.7 reading and writing.
//!
//! Only the `x`, `y` and `z` fields are used; they must be 4-byte floats.
//! Other fields are skipped. Bodies may be `ascii` or little-endian
//! `binary`; `binary_compressed` is rejected.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::geometry::Point3;
use crate::kdtree::PointCloud;

#[derive(Debug, Error)]
pub enum PcdError {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("missing field '{0}' (x, y and z are required)")]
    MissingField(&'static str),
    #[error("field '{0}' must be a single 4-byte float")]
    BadFieldType(String),
    #[error("unsupported DATA mode '{0}'")]
    UnsupportedData(String),
    #[error("body truncated: expected {expected} points, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("line {line}: cannot parse '{token}' as a number")]
    BadNumber { line: usize, token: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMode {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcdHeader {
    pub fields: Vec<String>,
    pub sizes: Vec<usize>,
    pub types: Vec<char>,
    pub counts: Vec<usize>,
    pub width: usize,
    pub height: usize,
    pub data: DataMode,
}

impl PcdHeader {
    pub fn points(&self) -> usize {
        self.width * self.height
    }

    /// Bytes per point in a binary body.
    pub fn stride(&self) -> usize {
        self.sizes.iter().zip(&self.counts).map(|(s, c)| s * c).sum()
    }

    fn field_index(&self, name: &'static str) -> Result<usize, PcdError> {
        let i = self
            .fields
            .iter()
            .position(|f| f == name)
            .ok_or(PcdError::MissingField(name))?;
        if self.sizes[i] != 4 || self.types[i] != 'F' || self.counts[i] != 1 {
            return Err(PcdError::BadFieldType(name.to_string()));
        }
        Ok(i)
    }

    /// Byte offset (binary) and token offset (ascii) of each of x, y, z.
    fn xyz_layout(&self) -> Result<[(usize, usize); 3], PcdError> {
        let mut out = [(0, 0); 3];
        for (slot, name) in ["x", "y", "z"].into_iter().enumerate() {
            let i = self.field_index(name)?;
            let bytes = (0..i).map(|j| self.sizes[j] * self.counts[j]).sum();
            let tokens = self.counts[..i].iter().sum();
            out[slot] = (bytes, tokens);
        }
        Ok(out)
    }
}

/// A parsed cloud plus the number of points dropped for non-finite
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdRead {
    pub header: PcdHeader,
    pub cloud: PointCloud,
    pub dropped: usize,
}

pub fn read_pcd_file(path: impl AsRef<Path>) -> Result<PcdRead, PcdError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut read = read_pcd(&bytes)?;
    read.cloud.id = id;
    Ok(read)
}

pub fn read_pcd(bytes: &[u8]) -> Result<PcdRead, PcdError> {
    let (header, body_start, header_lines) = parse_header(bytes)?;
    let layout = header.xyz_layout()?;
    let n = header.points();
    let body = &bytes[body_start..];
    let raw = match header.data {
        DataMode::Binary => read_binary(&header, &layout, body)?,
        DataMode::Ascii => read_ascii(&header, &layout, body, header_lines)?,
    };
    debug_assert_eq!(raw.len(), n);
    let points: Vec<Point3> = raw.into_iter().filter(Point3::is_finite).collect();
    let dropped = n - points.len();
    Ok(PcdRead { header, cloud: PointCloud::new("", points), dropped })
}

fn parse_header(bytes: &[u8]) -> Result<(PcdHeader, usize, usize), PcdError> {
    let mut fields = None;
    let mut sizes = None;
    let mut types = None;
    let mut counts = None;
    let mut width = None;
    let mut height = None;
    let mut points = None;

    let mut pos = 0;
    let mut line_no = 0;
    loop {
        if pos >= bytes.len() {
            return Err(PcdError::Header("no DATA line".into()));
        }
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| PcdError::Header(format!("line {} is not UTF-8", line_no + 1)))?
            .trim();
        pos = (end + 1).min(bytes.len());
        line_no += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = parts.collect();
        let nums = |what: &str| -> Result<Vec<usize>, PcdError> {
            rest.iter()
                .map(|t| t.parse::<usize>().map_err(|_| PcdError::Header(format!("bad {what} value '{t}'"))))
                .collect()
        };
        let one = |what: &str| -> Result<usize, PcdError> {
            match nums(what)?.as_slice() {
                [v] => Ok(*v),
                _ => Err(PcdError::Header(format!("{what} takes one value"))),
            }
        };
        match key.as_str() {
            "VERSION" | "VIEWPOINT" => {}
            "FIELDS" => fields = Some(rest.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            "SIZE" => sizes = Some(nums("SIZE")?),
            "TYPE" => {
                let t = rest
                    .iter()
                    .map(|t| match *t {
                        "F" | "I" | "U" => Ok(t.chars().next().unwrap()),
                        _ => Err(PcdError::Header(format!("bad TYPE value '{t}'"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                types = Some(t);
            }
            "COUNT" => counts = Some(nums("COUNT")?),
            "WIDTH" => width = Some(one("WIDTH")?),
            "HEIGHT" => height = Some(one("HEIGHT")?),
            "POINTS" => points = Some(one("POINTS")?),
            "DATA" => {
                let data = match rest.first().copied() {
                    Some("ascii") => DataMode::Ascii,
                    Some("binary") => DataMode::Binary,
                    Some(other) => return Err(PcdError::UnsupportedData(other.to_string())),
                    None => return Err(PcdError::Header("DATA needs a mode".into())),
                };
                let fields = fields.ok_or_else(|| PcdError::Header("missing FIELDS".into()))?;
                let sizes = sizes.ok_or_else(|| PcdError::Header("missing SIZE".into()))?;
                let types = types.ok_or_else(|| PcdError::Header("missing TYPE".into()))?;
                let counts = counts.unwrap_or_else(|| vec![1; fields.len()]);
                if sizes.len() != fields.len() || types.len() != fields.len() || counts.len() != fields.len() {
                    return Err(PcdError::Header("FIELDS, SIZE, TYPE and COUNT lengths differ".into()));
                }
                let width = width.ok_or_else(|| PcdError::Header("missing WIDTH".into()))?;
                let height = height.unwrap_or(1);
                if let Some(p) = points {
                    if p != width * height {
                        return Err(PcdError::Header(format!("POINTS {p} != WIDTH·HEIGHT {}", width * height)));
                    }
                }
                let header = PcdHeader { fields, sizes, types, counts, width, height, data };
                return Ok((header, pos, line_no));
            }
            other => return Err(PcdError::Header(format!("unknown key '{other}'"))),
        }
    }
}

fn read_binary(header: &PcdHeader, layout: &[(usize, usize); 3], body: &[u8]) -> Result<Vec<Point3>, PcdError> {
    let n = header.points();
    let stride = header.stride();
    if stride == 0 || body.len() < n * stride {
        let found = body.len().checked_div(stride).unwrap_or(0);
        return Err(PcdError::Truncated { expected: n, found });
    }
    let f = |rec: &[u8], off: usize| f32::from_le_bytes(rec[off..off + 4].try_into().unwrap());
    Ok(body
        .chunks_exact(stride)
        .take(n)
        .map(|rec| Point3::new(f(rec, layout[0].0), f(rec, layout[1].0), f(rec, layout[2].0)))
        .collect())
}

fn read_ascii(
    header: &PcdHeader,
    layout: &[(usize, usize); 3],
    body: &[u8],
    first_line: usize,
) -> Result<Vec<Point3>, PcdError> {
    let n = header.points();
    let text = String::from_utf8_lossy(body);
    let mut out = Vec::with_capacity(n);
    for (i, line) in text.lines().enumerate() {
        if out.len() == n {
            break;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let line_no = first_line + i + 1;
        let mut c = [0f32; 3];
        for (slot, &(_, t)) in layout.iter().enumerate() {
            let token = tokens.get(t).ok_or(PcdError::Truncated { expected: n, found: out.len() })?;
            c[slot] = token
                .parse::<f32>()
                .map_err(|_| PcdError::BadNumber { line: line_no, token: token.to_string() })?;
        }
        out.push(Point3::from(c));
    }
    if out.len() < n {
        return Err(PcdError::Truncated { expected: n, found: out.len() });
    }
    Ok(out)
}

/// Serializes `cloud` as PCD v0.7 with fields `x y z`. ASCII bodies print
/// each coordinate with the shortest decimal that round-trips.
pub fn write_pcd(cloud: &PointCloud, mode: DataMode) -> Vec<u8> {
    let n = cloud.len();
    let mut out = format!(
        "# .PCD v0.7 - Point Cloud Data file format\n\
         VERSION 0.7\n\
         FIELDS x y z\n\
         SIZE 4 4 4\n\
         TYPE F F F\n\
         COUNT 1 1 1\n\
         WIDTH {n}\n\
         HEIGHT 1\n\
         VIEWPOINT 0 0 0 1 0 0 0\n\
         POINTS {n}\n\
         DATA {}\n",
        match mode {
            DataMode::Ascii => "ascii",
            DataMode::Binary => "binary",
        }
    )
    .into_bytes();
    match mode {
        DataMode::Ascii => {
            for p in &cloud.points {
                out.extend_from_slice(format!("{} {} {}\n", p.x, p.y, p.z).as_bytes());
            }
        }
        DataMode::Binary => {
            out.reserve(n * 12);
            for p in &cloud.points {
                out.extend_from_slice(&p.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_pcd_file(cloud: &PointCloud, mode: DataMode, path: impl AsRef<Path>) -> Result<(), PcdError> {
    fs::write(path, write_pcd(cloud, mode))?;
    Ok(())
}
