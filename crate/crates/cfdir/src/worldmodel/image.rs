//! Grayscale image type and PGM export.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-channel image, row-major `f32` pixels in `[0, 1]`.
///
/// Serializes to the wire form `{"w":..,"h":..,"px":[..]}` used by the
/// remote-model protocol and the artifact files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImage", into = "RawImage")]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct RawImage {
    w: usize,
    h: usize,
    px: Vec<f32>,
}

impl TryFrom<RawImage> for Image {
    type Error = Error;
    fn try_from(raw: RawImage) -> Result<Image> {
        Image::new(raw.w, raw.h, raw.px)
    }
}

impl From<Image> for RawImage {
    fn from(img: Image) -> RawImage {
        RawImage {
            w: img.width,
            h: img.height,
            px: img.pixels,
        }
    }
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Image> {
        if width == 0 || height == 0 {
            return Err(Error::arg("image dimensions must be >= 1"));
        }
        if pixels.len() != width * height {
            return Err(Error::dim(format!(
                "image buffer: expected {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        for (i, p) in pixels.iter().enumerate() {
            if !(*p >= 0.0 && *p <= 1.0) {
                return Err(Error::arg(format!("pixel {i} out of [0,1]: {p}")));
            }
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, level: f32) -> Result<Image> {
        Image::new(width, height, vec![level; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Binary PGM (P5) bytes with maxval 65535, big-endian samples.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 2 + 32);
        out.extend_from_slice(format!("P5\n{} {}\n65535\n", self.width, self.height).as_bytes());
        for p in &self.pixels {
            let v = (f64::from(*p) * 65535.0).round() as u16;
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Image> {
        let parse = || -> Option<(usize, usize, usize, usize)> {
            // header: magic, width, height, maxval as whitespace-separated
            // tokens, then a single whitespace byte before the raster
            let mut fields = Vec::new();
            let mut pos = 0;
            while fields.len() < 4 && pos < bytes.len() {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if bytes.get(pos) == Some(&b'#') {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                let start = pos;
                while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
            }
            pos += 1; // single whitespace after maxval
            if fields.len() != 4 || fields[0] != "P5" {
                return None;
            }
            let w = fields[1].parse().ok()?;
            let h = fields[2].parse().ok()?;
            let maxval = fields[3].parse().ok()?;
            Some((w, h, maxval, pos))
        };
        let (w, h, maxval, start) =
            parse().ok_or_else(|| Error::Parse("not a P5 PGM header".into()))?;
        if maxval != 65535 {
            return Err(Error::Parse(format!("expected maxval 65535, got {maxval}")));
        }
        let raster = &bytes[start..];
        if raster.len() != w * h * 2 {
            return Err(Error::Parse(format!(
                "PGM raster: expected {} bytes, got {}",
                w * h * 2,
                raster.len()
            )));
        }
        let pixels = raster
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32 / 65535.0)
            .collect();
        Image::new(w, h, pixels)
    }
}
