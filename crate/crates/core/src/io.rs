//! On-disk formats.
//!
//! `.vgrid` layout (all little-endian):
//!
//! ```text
//! magic "VGRD" | u32 version=1 | u32 nx | u32 ny | u32 nz | u32 channels
//! f32 data[channels * nx * ny * nz], index ((z*ny + y)*nx + x)*channels + c
//! ```
//!
//! Images are stored as PFM (`Pf` grayscale, `PF` color, negative scale for
//! little-endian, rows bottom-to-top) or written as 8-bit PNG for viewing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Dims, Image, ScalarGrid, VectorGrid};

pub const VGRID_MAGIC: &[u8; 4] = b"VGRD";
pub const VGRID_VERSION: u32 = 1;
pub const VGRID_HEADER_BYTES: usize = 24;

/// A decoded `.vgrid` payload with any channel count.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGrid {
    pub dims: Dims,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl From<ScalarGrid> for RawGrid {
    fn from(g: ScalarGrid) -> Self {
        RawGrid { dims: g.dims, channels: 1, data: g.data }
    }
}

impl From<VectorGrid> for RawGrid {
    fn from(g: VectorGrid) -> Self {
        RawGrid { dims: g.dims, channels: 3, data: g.data }
    }
}

impl RawGrid {
    pub fn into_scalar(self) -> Result<ScalarGrid> {
        if self.channels != 1 {
            return Err(Error::Format(format!("expected 1 channel, found {}", self.channels)));
        }
        ScalarGrid::from_vec(self.dims, self.data)
    }

    pub fn into_vector(self) -> Result<VectorGrid> {
        if self.channels != 3 {
            return Err(Error::Format(format!("expected 3 channels, found {}", self.channels)));
        }
        VectorGrid::from_vec(self.dims, self.data)
    }
}

pub fn encode_vgrid(dims: Dims, channels: usize, data: &[f64]) -> Result<Vec<u8>> {
    let count = checked_count(dims, channels)?;
    if data.len() != count {
        return Err(Error::Shape(format!("vgrid payload needs {count} values, got {}", data.len())));
    }
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::Format(format!("{what}={v} does not fit in u32")))
    };
    let mut buf = Vec::with_capacity(VGRID_HEADER_BYTES + 4 * count);
    buf.extend_from_slice(VGRID_MAGIC);
    buf.extend_from_slice(&VGRID_VERSION.to_le_bytes());
    for (v, what) in [(dims.nx, "nx"), (dims.ny, "ny"), (dims.nz, "nz"), (channels, "channels")] {
        buf.extend_from_slice(&to_u32(v, what)?.to_le_bytes());
    }
    for &v in data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(buf)
}

pub fn decode_vgrid(bytes: &[u8]) -> Result<RawGrid> {
    if bytes.len() < VGRID_HEADER_BYTES {
        return Err(Error::Format("vgrid truncated header".into()));
    }
    if &bytes[0..4] != VGRID_MAGIC {
        return Err(Error::Format(format!("bad vgrid magic {:?}", &bytes[0..4])));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    let version = word(1);
    if version != VGRID_VERSION {
        return Err(Error::Format(format!("unsupported vgrid version {version}")));
    }
    let dims = Dims::new(word(2) as usize, word(3) as usize, word(4) as usize);
    let channels = word(5) as usize;
    let count = checked_count(dims, channels)?;
    let expected = count
        .checked_mul(4)
        .and_then(|b| b.checked_add(VGRID_HEADER_BYTES))
        .ok_or_else(|| Error::Format("vgrid dimension overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "vgrid {dims}x{channels} expects {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data = bytes[VGRID_HEADER_BYTES..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(RawGrid { dims, channels, data })
}

fn checked_count(dims: Dims, channels: usize) -> Result<usize> {
    dims.nx
        .checked_mul(dims.ny)
        .and_then(|v| v.checked_mul(dims.nz))
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::Format(format!("vgrid dimension overflow {dims}x{channels}")))
}

pub fn write_vgrid(path: impl AsRef<Path>, grid: &RawGrid) -> Result<()> {
    let bytes = encode_vgrid(grid.dims, grid.channels, &grid.data)?;
    write_bytes(path.as_ref(), &bytes)
}

pub fn read_vgrid(path: impl AsRef<Path>) -> Result<RawGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_vgrid(&bytes)
}

pub fn write_scalar(path: impl AsRef<Path>, g: &ScalarGrid) -> Result<()> {
    let bytes = encode_vgrid(g.dims, 1, &g.data)?;
    write_bytes(path.as_ref(), &bytes)
}

pub fn write_vector(path: impl AsRef<Path>, g: &VectorGrid) -> Result<()> {
    let bytes = encode_vgrid(g.dims, 3, &g.data)?;
    write_bytes(path.as_ref(), &bytes)
}

pub fn read_scalar(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    read_vgrid(path)?.into_scalar()
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<VectorGrid> {
    read_vgrid(path)?.into_vector()
}

/// Round values through `f32`, matching what a file round-trip yields.
pub fn quantize(data: &mut [f64]) {
    for v in data {
        *v = *v as f32 as f64;
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pfm(img: &Image) -> Vec<u8> {
    let tag = if img.channels == 3 { "PF" } else { "Pf" };
    let mut buf = format!("{tag}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row = img.width * img.channels;
    for y in (0..img.height).rev() {
        for &v in &img.data[y * row..(y + 1) * row] {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    buf
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Image> {
    // Three whitespace-terminated header tokens, then one separator byte.
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("pfm truncated header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    let channels = match tokens[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        t => return Err(Error::Format(format!("bad pfm magic {t:?}"))),
    };
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad pfm size {s:?}")));
    let width = parse(&tokens[1])?;
    let height = parse(&tokens[2])?;
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| Error::Format(format!("bad pfm scale {:?}", tokens[3])))?;
    let little = scale < 0.0;
    let count = width * height * channels;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != 4 * count {
        return Err(Error::Format(format!(
            "pfm {width}x{height}x{channels} expects {} payload bytes, found {}",
            4 * count,
            payload.len()
        )));
    }
    let row = width * channels;
    let mut data = vec![0.0; count];
    for (k, c) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = c.try_into().unwrap();
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let file_row = k / row;
        let y = height - 1 - file_row;
        data[y * row + k % row] = v as f64;
    }
    Image::from_vec(width, height, channels, data)
}

pub fn write_pfm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pfm(img))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

/// 8-bit PNG for visualization; values are clamped to `[0, 1]`.
pub fn write_png(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(if img.channels == 3 { png::ColorType::Rgb } else { png::ColorType::Grayscale });
    enc.set_depth(png::BitDepth::Eight);
    let bytes: Vec<u8> = img.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let mut w = enc.write_header().map_err(|e| Error::Format(format!("png: {e}")))?;
    w.write_image_data(&bytes).map_err(|e| Error::Format(format!("png: {e}")))?;
    w.finish().map_err(|e| Error::Format(format!("png: {e}")))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_bytes(path, &text)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&text).map_err(|e| Error::Invalid {
        field: format!("{} (line {}, column {})", path.display(), e.line(), e.column()),
        reason: e.to_string(),
    })
}

/// Append-only JSON-lines writer.
pub struct JsonLines<W: Write> {
    out: W,
}

impl<W: Write> JsonLines<W> {
    pub fn new(out: W) -> Self {
        JsonLines { out }
    }

    pub fn push<T: serde::Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        self.out.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io("<jsonl>", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vgrid_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = Dims::new(4, 6, 4);
        let g = ScalarGrid::from_fn(dims, |_| rng.random_range(-3.0..3.0));
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.vgrid");
        let b = dir.path().join("b.vgrid");
        write_scalar(&a, &g).unwrap();
        let back = read_scalar(&a).unwrap();
        write_scalar(&b, &back).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let mut q = g.data.clone();
        quantize(&mut q);
        assert_eq!(back.data, q);
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let mut bytes = encode_vgrid(Dims::new(1, 1, 1), 1, &[1.0]).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_vgrid(&bytes), Err(Error::Format(_))));
        let mut bytes = encode_vgrid(Dims::new(1, 1, 1), 1, &[1.0]).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_vgrid(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn vector_file_size() {
        let g = VectorGrid::zeros(Dims::new(8, 8, 8));
        let bytes = encode_vgrid(g.dims, 3, &g.data).unwrap();
        assert_eq!(bytes.len(), 24 + 3 * 512 * 4);
    }

    #[test]
    fn overflowing_header_rejected() {
        let mut bytes = encode_vgrid(Dims::new(1, 1, 1), 1, &[1.0]).unwrap();
        for k in 2..6 {
            bytes[4 * k..4 * k + 4].copy_from_slice(&u32::MAX.to_le_bytes());
        }
        assert!(matches!(decode_vgrid(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn pfm_roundtrip_keeps_orientation() {
        let img = Image::from_vec(3, 2, 1, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let bytes = encode_pfm(&img);
        let back = decode_pfm(&bytes).unwrap();
        assert_eq!(back.get(2, 0, 0), 0.2f32 as f64);
        assert_eq!(back.get(0, 1, 0), 0.3f32 as f64);
        assert_eq!(encode_pfm(&back), bytes);
        let color = Image::from_vec(1, 2, 3, vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.125]).unwrap();
        assert_eq!(encode_pfm(&decode_pfm(&encode_pfm(&color)).unwrap()), encode_pfm(&color));
    }

    #[test]
    fn pfm_rejects_bad_magic() {
        assert!(decode_pfm(b"P6\n1 1\n-1.0\n\0\0\0\0").is_err());
    }
}
