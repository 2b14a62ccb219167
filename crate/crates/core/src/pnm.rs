//! Binary PGM (P5) and PPM (P6) reading and writing.
//!
//! Frames are 8-bit P5, label maps 16-bit P5, and boundary maps 16-bit P5
//! scaled by 65535. 16-bit samples are big-endian as the format requires.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BoundaryMap, IntensityFrame, LabelFrame, Plane};

/// Scale used to store boundary probabilities in 16-bit maps.
pub const BOUNDARY_SCALE: f64 = 65535.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Graymap {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_int(bytes: &[u8], pos: &mut usize) -> std::result::Result<usize, String> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err("malformed header".into());
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|e| format!("malformed header: {e}"))
}

/// Parses the bytes of a P5 or P6 file. Returns samples interleaved for P6.
fn parse_pnm(bytes: &[u8], magic: &[u8; 2]) -> std::result::Result<Graymap, String> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(format!("expected {} magic", String::from_utf8_lossy(magic)));
    }
    let mut pos = 2;
    let width = header_int(bytes, &mut pos)?;
    let height = header_int(bytes, &mut pos)?;
    let maxval = header_int(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("missing raster".into());
    }
    pos += 1;
    let channels = if magic == b"P6" { 3 } else { 1 };
    let count = width * height * channels;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let raster = &bytes[pos..];
    if raster.len() < count * bytes_per {
        return Err(format!(
            "truncated raster: {} bytes, expected {}",
            raster.len(),
            count * bytes_per
        ));
    }
    let samples: Vec<u16> = if bytes_per == 1 {
        raster[..count].iter().map(|&b| b as u16).collect()
    } else {
        raster[..count * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some(s) = samples.iter().find(|&&s| s as usize > maxval) {
        return Err(format!("sample {s} exceeds maxval {maxval}"));
    }
    Ok(Graymap {
        width,
        height,
        maxval: maxval as u16,
        samples,
    })
}

pub fn parse_pgm(bytes: &[u8]) -> std::result::Result<Graymap, String> {
    parse_pnm(bytes, b"P5")
}

pub fn encode_pgm(width: usize, height: usize, maxval: u16, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    if maxval < 256 {
        out.extend(samples.iter().map(|&s| s as u8));
    } else {
        for &s in samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    }
    out
}

pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

pub fn parse_ppm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<[u8; 3]>), String> {
    let map = parse_pnm(bytes, b"P6")?;
    if map.maxval != 255 {
        return Err(format!("unsupported PPM maxval {}", map.maxval));
    }
    let rgb = map
        .samples
        .chunks_exact(3)
        .map(|c| [c[0] as u8, c[1] as u8, c[2] as u8])
        .collect();
    Ok((map.width, map.height, rgb))
}

pub fn read_pgm(path: &Path, frame: Option<usize>) -> Result<Graymap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|m| Error::format(path, frame, m))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_intensity_frame(path: &Path, frame: Option<usize>) -> Result<IntensityFrame> {
    let map = read_pgm(path, frame)?;
    let scale = map.maxval as f64;
    let values = map.samples.iter().map(|&s| s as f64 / scale).collect();
    IntensityFrame::new(map.width, map.height, values).map_err(|e| Error::format(path, frame, e.to_string()))
}

/// Quantizes to 8 bits with round-half-away-from-zero.
pub fn intensity_to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_intensity_frame(path: &Path, frame: &IntensityFrame) -> Result<()> {
    let samples: Vec<u16> = frame.values().iter().map(|&v| intensity_to_u8(v) as u16).collect();
    write_bytes(path, &encode_pgm(frame.width(), frame.height(), 255, &samples))
}

pub fn read_label_frame(path: &Path, frame: Option<usize>) -> Result<LabelFrame> {
    let map = read_pgm(path, frame)?;
    Plane::new(map.width, map.height, map.samples.iter().map(|&s| s as u32).collect())
        .map_err(|e| Error::format(path, frame, e.to_string()))
}

/// Label maps are always written as 16-bit, so ids must fit in `u16`.
pub fn write_label_frame(path: &Path, labels: &LabelFrame) -> Result<()> {
    let mut samples = Vec::with_capacity(labels.len());
    for &l in labels.data() {
        let s = u16::try_from(l).map_err(|_| Error::param(format!("label {l} does not fit a 16-bit label map")))?;
        samples.push(s);
    }
    write_bytes(path, &encode_pgm(labels.width(), labels.height(), 65535, &samples))
}

pub fn read_boundary_map(path: &Path, frame: Option<usize>) -> Result<BoundaryMap> {
    let map = read_pgm(path, frame)?;
    let values = map.samples.iter().map(|&s| s as f64 / BOUNDARY_SCALE).collect();
    BoundaryMap::new(map.width, map.height, values).map_err(|e| Error::format(path, frame, e.to_string()))
}

pub fn write_boundary_map(path: &Path, map: &BoundaryMap) -> Result<()> {
    let samples: Vec<u16> = map
        .values()
        .iter()
        .map(|&p| (p.clamp(0.0, 1.0) * BOUNDARY_SCALE).round() as u16)
        .collect();
    write_bytes(path, &encode_pgm(map.width(), map.height(), 65535, &samples))
}

pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    write_bytes(path, &encode_ppm(width, height, rgb))
}
