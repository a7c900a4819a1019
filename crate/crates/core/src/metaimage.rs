//! MetaImage (`.mhd` header + `.raw` payload) reading and writing.
//!
//! Only uncompressed, single-channel 3D images with an identity orientation
//! and a data file next to the header are handled.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask3, Spacing3, Volume3, VoxelGrid};

/// Voxel storage type of a MetaImage payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    Char,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Float,
    Double,
}

impl ElementType {
    pub fn tag(self) -> &'static str {
        match self {
            ElementType::Char => "MET_CHAR",
            ElementType::UChar => "MET_UCHAR",
            ElementType::Short => "MET_SHORT",
            ElementType::UShort => "MET_USHORT",
            ElementType::Int => "MET_INT",
            ElementType::UInt => "MET_UINT",
            ElementType::Float => "MET_FLOAT",
            ElementType::Double => "MET_DOUBLE",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "MET_CHAR" => ElementType::Char,
            "MET_UCHAR" => ElementType::UChar,
            "MET_SHORT" => ElementType::Short,
            "MET_USHORT" => ElementType::UShort,
            "MET_INT" => ElementType::Int,
            "MET_UINT" => ElementType::UInt,
            "MET_FLOAT" => ElementType::Float,
            "MET_DOUBLE" => ElementType::Double,
            _ => return None,
        })
    }

    pub fn size(self) -> usize {
        match self {
            ElementType::Char | ElementType::UChar => 1,
            ElementType::Short | ElementType::UShort => 2,
            ElementType::Int | ElementType::UInt | ElementType::Float => 4,
            ElementType::Double => 8,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, ElementType::Float | ElementType::Double)
    }

    fn range(self) -> (f64, f64) {
        match self {
            ElementType::Char => (i8::MIN as f64, i8::MAX as f64),
            ElementType::UChar => (0.0, u8::MAX as f64),
            ElementType::Short => (i16::MIN as f64, i16::MAX as f64),
            ElementType::UShort => (0.0, u16::MAX as f64),
            ElementType::Int => (i32::MIN as f64, i32::MAX as f64),
            ElementType::UInt => (0.0, u32::MAX as f64),
            ElementType::Float => (f32::MIN as f64, f32::MAX as f64),
            ElementType::Double => (f64::MIN, f64::MAX),
        }
    }
}

impl std::str::FromStr for ElementType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let tag = if upper.starts_with("MET_") {
            upper
        } else {
            format!("MET_{upper}")
        };
        ElementType::from_tag(&tag)
            .ok_or_else(|| Error::Config(format!("unknown MetaImage element type `{s}`")))
    }
}

/// Parsed header fields needed to decode the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaHeader {
    pub geometry: Geometry,
    pub element_type: ElementType,
    pub big_endian: bool,
    pub header_size: i64,
    pub data_file: PathBuf,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn parse_numbers<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| parse_err(path, format!("{key}: cannot parse `{tok}`")))
        })
        .collect()
}

fn parse_bool(path: &Path, key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        other => Err(parse_err(path, format!("{key}: expected True/False, got `{other}`"))),
    }
}

fn triple(path: &Path, key: &str, value: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = parse_numbers(path, key, value)?;
    <[f64; 3]>::try_from(v.as_slice())
        .map_err(|_| parse_err(path, format!("{key}: expected 3 values, got {}", v.len())))
}

/// Parses the text of a `.mhd` header located at `path`.
pub fn parse_header(path: &Path, text: &str) -> Result<MetaHeader> {
    // Keys are matched case-insensitively; later duplicates win.
    let mut fields: HashMap<String, String> = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, format!("line {}: expected `Key = value`", lineno + 1)))?;
        fields.insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }
    let get = |key: &'static str| -> Result<&str> {
        fields
            .get(&key.to_ascii_lowercase())
            .map(String::as_str)
            .ok_or(Error::MissingKey {
                path: path.to_path_buf(),
                key,
            })
    };

    let ndims: usize = get("NDims")?
        .trim()
        .parse()
        .map_err(|_| parse_err(path, "NDims is not an integer"))?;
    if ndims != 3 {
        return Err(Error::UnsupportedRank {
            path: path.to_path_buf(),
            ndims,
        });
    }

    let dims: Vec<usize> = parse_numbers(path, "DimSize", get("DimSize")?)?;
    let dims = <[usize; 3]>::try_from(dims.as_slice())
        .map_err(|_| parse_err(path, "DimSize must have 3 entries"))?;

    let type_tag = get("ElementType")?;
    let element_type = ElementType::from_tag(type_tag.trim()).ok_or_else(|| Error::Unsupported {
        path: path.to_path_buf(),
        what: format!("ElementType {type_tag}"),
    })?;

    let data_file = get("ElementDataFile")?.trim().to_string();

    if let Some(ch) = fields.get("elementnumberofchannels") {
        if ch.trim() != "1" {
            return Err(Error::Unsupported {
                path: path.to_path_buf(),
                what: format!("ElementNumberOfChannels = {ch}"),
            });
        }
    }
    if let Some(c) = fields.get("compresseddata") {
        if parse_bool(path, "CompressedData", c)? {
            return Err(Error::Unsupported {
                path: path.to_path_buf(),
                what: "compressed payload".into(),
            });
        }
    }
    if let Some(b) = fields.get("binarydata") {
        if !parse_bool(path, "BinaryData", b)? {
            return Err(Error::Unsupported {
                path: path.to_path_buf(),
                what: "ASCII payload (BinaryData = False)".into(),
            });
        }
    }
    for key in ["transformmatrix", "rotation", "orientation"] {
        if let Some(m) = fields.get(key) {
            let m: Vec<f64> = parse_numbers(path, key, m)?;
            let identity = m.len() == 9
                && m.iter()
                    .enumerate()
                    .all(|(n, &v)| (v - if n % 4 == 0 { 1.0 } else { 0.0 }).abs() < 1e-6);
            if !identity {
                return Err(Error::UnsupportedOrientation {
                    path: path.to_path_buf(),
                });
            }
        }
    }

    let spacing = match fields.get("elementspacing").or(fields.get("elementsize")) {
        Some(s) => Spacing3::try_from(triple(path, "ElementSpacing", s)?)
            .map_err(|e| parse_err(path, e.to_string()))?,
        None => Spacing3::default(),
    };
    let origin = match fields
        .get("offset")
        .or(fields.get("origin"))
        .or(fields.get("position"))
    {
        Some(o) => triple(path, "Offset", o)?,
        None => [0.0; 3],
    };
    let big_endian = match fields
        .get("binarydatabyteordermsb")
        .or(fields.get("elementbyteordermsb"))
    {
        Some(b) => parse_bool(path, "BinaryDataByteOrderMSB", b)?,
        None => false,
    };
    let header_size = match fields.get("headersize") {
        Some(h) => h
            .trim()
            .parse()
            .map_err(|_| parse_err(path, "HeaderSize is not an integer"))?,
        None => 0,
    };

    if data_file.eq_ignore_ascii_case("LOCAL")
        || data_file.eq_ignore_ascii_case("LIST")
        || data_file.contains('%')
        || data_file.contains(char::is_whitespace)
    {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: format!("ElementDataFile = {data_file}"),
        });
    }
    if data_file.contains(['/', '\\']) {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: format!("ElementDataFile `{data_file}` is not in the header's directory"),
        });
    }
    if data_file.to_ascii_lowercase().ends_with(".zraw") {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            what: "compressed payload (.zraw)".into(),
        });
    }

    let geometry = Geometry::new(dims, spacing, origin).map_err(|e| parse_err(path, e.to_string()))?;
    Ok(MetaHeader {
        geometry,
        element_type,
        big_endian,
        header_size,
        data_file: path
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join(data_file),
    })
}

fn decode(bytes: &[u8], ty: ElementType, big_endian: bool) -> Vec<f32> {
    macro_rules! conv {
        ($t:ty, $n:expr) => {
            bytes
                .chunks_exact($n)
                .map(|c| {
                    let arr: [u8; $n] = c.try_into().unwrap();
                    let v = if big_endian {
                        <$t>::from_be_bytes(arr)
                    } else {
                        <$t>::from_le_bytes(arr)
                    };
                    v as f32
                })
                .collect()
        };
    }
    match ty {
        ElementType::Char => bytes.iter().map(|&b| b as i8 as f32).collect(),
        ElementType::UChar => bytes.iter().map(|&b| b as f32).collect(),
        ElementType::Short => conv!(i16, 2),
        ElementType::UShort => conv!(u16, 2),
        ElementType::Int => conv!(i32, 4),
        ElementType::UInt => conv!(u32, 4),
        ElementType::Float => conv!(f32, 4),
        ElementType::Double => conv!(f64, 8),
    }
}

/// Reads a MetaImage volume from the `.mhd` header at `path`.
pub fn read_metaimage(path: impl AsRef<Path>) -> Result<Volume3> {
    Ok(read_metaimage_with_header(path)?.0)
}

/// Like [`read_metaimage`], also returning the parsed header.
pub fn read_metaimage_with_header(path: impl AsRef<Path>) -> Result<(Volume3, MetaHeader)> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&text);
    let header = parse_header(path, &text)?;
    let raw = fs::read(&header.data_file).map_err(|e| Error::io(&header.data_file, e))?;

    let expected = (header.geometry.len() * header.element_type.size()) as u64;
    let actual = raw.len() as u64;
    let skip = match header.header_size {
        -1 => actual.saturating_sub(expected),
        n if n >= 0 => n as u64,
        n => return Err(parse_err(path, format!("HeaderSize = {n}"))),
    };
    let payload_ok = if header.header_size == 0 {
        actual == expected
    } else {
        actual >= skip + expected
    };
    if !payload_ok {
        return Err(Error::Truncated {
            path: header.data_file.clone(),
            expected: expected + skip,
            actual,
        });
    }
    let payload = &raw[skip as usize..(skip + expected) as usize];
    let voxels = decode(payload, header.element_type, header.big_endian);
    let v = Volume3::new(header.geometry, voxels)
        .map_err(|e| parse_err(&header.data_file, e.to_string()))?;
    Ok((v, header))
}

/// Reads a segmentation; any voxel value `>= 0.5` becomes foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask3> {
    Ok(read_metaimage(path)?.binarize(0.5))
}

/// Name of the raw payload written next to `header_path`.
pub fn raw_path_for(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

fn fmt_triple<T: std::fmt::Display>(v: [T; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn encode<G: VoxelGrid + ?Sized>(grid: &G, ty: ElementType) -> Result<Vec<u8>> {
    let n = grid.geometry().len();
    let mut out = Vec::with_capacity(n * ty.size());
    let (lo, hi) = ty.range();
    for idx in 0..n {
        let v = grid.value(idx);
        let v = if ty.is_integer() { v.round() } else { v };
        if !v.is_finite() || v < lo || v > hi {
            return Err(Error::Representation {
                value: grid.value(idx),
                element_type: ty.tag().to_string(),
            });
        }
        match ty {
            ElementType::Char => out.push(v as i8 as u8),
            ElementType::UChar => out.push(v as u8),
            ElementType::Short => out.extend_from_slice(&(v as i16).to_le_bytes()),
            ElementType::UShort => out.extend_from_slice(&(v as u16).to_le_bytes()),
            ElementType::Int => out.extend_from_slice(&(v as i32).to_le_bytes()),
            ElementType::UInt => out.extend_from_slice(&(v as u32).to_le_bytes()),
            ElementType::Float => out.extend_from_slice(&(v as f32).to_le_bytes()),
            ElementType::Double => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    Ok(out)
}

/// Renders the header text for `geometry`, pointing at `data_file`.
pub fn header_text(geometry: &Geometry, element_type: ElementType, data_file: &str) -> String {
    format!(
        "ObjectType = Image\n\
         NDims = 3\n\
         DimSize = {}\n\
         ElementType = {}\n\
         ElementSpacing = {}\n\
         Offset = {}\n\
         BinaryData = True\n\
         BinaryDataByteOrderMSB = False\n\
         ElementDataFile = {}\n",
        fmt_triple(geometry.dims),
        element_type.tag(),
        fmt_triple(geometry.spacing.as_array()),
        fmt_triple(geometry.origin),
        data_file,
    )
}

/// Writes `grid` as `path` (header) plus a little-endian `.raw` payload
/// alongside it.
pub fn write_metaimage<G: VoxelGrid + ?Sized>(
    grid: &G,
    path: impl AsRef<Path>,
    element_type: ElementType,
) -> Result<()> {
    let path = path.as_ref();
    let payload = encode(grid, element_type)?;
    let raw_path = raw_path_for(path);
    let raw_name = raw_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("unusable output path {}", path.display())))?;
    fs::write(&raw_path, payload).map_err(|e| Error::io(&raw_path, e))?;
    fs::write(path, header_text(grid.geometry(), element_type, raw_name))
        .map_err(|e| Error::io(path, e))
}
