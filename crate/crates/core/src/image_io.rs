//! PNG and PFM input/output.
//!
//! PFM files are written little-endian (negative scale) with rows stored
//! bottom-to-top, as the format requires. In memory every plane is row-major
//! top-to-bottom.

use std::fs;
use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::geom::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    /// 1 (`Pf`) or 3 (`PF`).
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn encode_pfm(width: usize, height: usize, channels: usize, data: &[f32]) -> Vec<u8> {
    assert!(channels == 1 || channels == 3, "PFM holds 1 or 3 channels");
    assert_eq!(data.len(), width * height * channels, "PFM data size");
    let tag = if channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    let row = width * channels;
    for y in (0..height).rev() {
        for v in &data[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<PfmImage> {
    // three whitespace-terminated header tokens after the tag line
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::input("truncated PFM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1; // single whitespace byte before the raster
    let channels = match fields[0].as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::input(format!("bad PFM tag {other:?}"))),
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::input(format!("bad PFM dimension {s:?}")))
    };
    let (width, height) = (parse(&fields[1])?, parse(&fields[2])?);
    let scale: f32 = fields[3]
        .parse()
        .map_err(|_| Error::input(format!("bad PFM scale {:?}", fields[3])))?;
    let little = scale < 0.0;
    let count = width * height * channels;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() != count * 4 {
        return Err(Error::input(format!(
            "PFM raster has {} bytes, expected {}",
            raster.len(),
            count * 4
        )));
    }
    let row = width * channels;
    let mut data = vec![0.0f32; count];
    for (k, chunk) in raster.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        };
        let (file_row, col) = (k / row, k % row);
        data[(height - 1 - file_row) * row + col] = v;
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

pub fn write_pfm(path: &Path, width: usize, height: usize, channels: usize, data: &[f32]) -> Result<()> {
    fs::write(path, encode_pfm(width, height, channels, data)).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn load_color(path: &Path) -> Result<Grid<[u8; 3]>> {
    let img = image::open(path)
        .map_err(|e| Error::input(format!("cannot decode {}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Grid::from_vec(w, h, img.pixels().map(|p| p.0).collect()))
}

/// Depth from a single-channel PFM or a (preferably 16-bit) grayscale PNG.
pub fn load_depth(path: &Path) -> Result<Grid<f32>> {
    let is_pfm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"));
    if is_pfm {
        let pfm = read_pfm(path)?;
        if pfm.channels != 1 {
            return Err(Error::input("depth PFM must have one channel"));
        }
        return Ok(Grid::from_vec(pfm.width, pfm.height, pfm.data));
    }
    let img = image::open(path)
        .map_err(|e| Error::input(format!("cannot decode {}: {e}", path.display())))?
        .to_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(Grid::from_vec(w, h, img.pixels().map(|p| p.0[0] as f32).collect()))
}

pub fn save_color(path: &Path, img: &Grid<[u8; 3]>) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_raw(
        img.width as u32,
        img.height as u32,
        img.data.iter().flatten().copied().collect(),
    )
    .expect("buffer size matches dimensions");
    buf.save(path)?;
    Ok(())
}

pub fn save_depth16(path: &Path, depth: &Grid<u16>) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width as u32, depth.height as u32, depth.data.clone())
            .expect("buffer size matches dimensions");
    buf.save(path)?;
    Ok(())
}
