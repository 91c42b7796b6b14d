//! Image grids, rendered buffers and their on-disk formats.
//!
//! Lit and semantic images are written as 8-bit RGBA PNG (alpha 0 marks
//! pixels outside the camera's field of view). Depth buffers use a raw
//! little-endian float32 format with a 16-byte header:
//!
//! ```text
//! bytes 0..8    magic "OMNIDPT0"
//! bytes 8..12   u32 width
//! bytes 12..16  u32 height
//! then width*height f32 values, row-major; NaN = no data
//! ```

use std::fs;
use std::path::Path;

use ::image::{ImageBuffer, Luma, Rgb, Rgba};

use crate::environment::{palette_color, Label, PixelValue, RenderMode};
use crate::{Error, Result};

pub const DEPTH_MAGIC: &[u8; 8] = b"OMNIDPT0";

/// Output resolution. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` and is
/// sampled at its center `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image grid must be at least 1×1, got {width}×{height}"
            )));
        }
        Ok(ImageGrid { width, height })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Radius of the largest centered disc, `min(width, height) / 2`.
    pub fn disc_radius(&self) -> f64 {
        self.width.min(self.height) as f64 / 2.0
    }

    pub fn pixel_center(&self, index: usize) -> (f64, f64) {
        let (i, j) = (index % self.width, index / self.width);
        (i as f64 + 0.5, j as f64 + 0.5)
    }
}

/// Pixel buffer for one render mode. Depth buffers compare bitwise, so
/// NaN pixels in the same places are equal.
#[derive(Debug, Clone)]
pub enum Buffer {
    /// RGBA; alpha 0 outside the field of view.
    Lit(Vec<[u8; 4]>),
    /// Label per pixel; `None` outside the field of view.
    Semantic(Vec<Option<Label>>),
    /// Metric ray length per pixel; NaN outside the field of view.
    Depth(Vec<f64>),
}

impl PartialEq for Buffer {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Buffer::Lit(a), Buffer::Lit(b)) => a == b,
            (Buffer::Semantic(a), Buffer::Semantic(b)) => a == b,
            (Buffer::Depth(a), Buffer::Depth(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub grid: ImageGrid,
    pub buffer: Buffer,
}

impl Image {
    /// Assemble an image from per-pixel samples (`None` = outside the field of view).
    pub fn from_samples(
        grid: ImageGrid,
        mode: RenderMode,
        values: Vec<Option<PixelValue>>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(
                "sample count does not match grid".into(),
            ));
        }
        let mismatch = || {
            Error::InvalidParameter(format!(
                "oracle returned a sample of the wrong kind for {mode}"
            ))
        };
        let buffer = match mode {
            RenderMode::Lit => Buffer::Lit(
                values
                    .into_iter()
                    .map(|v| match v {
                        Some(PixelValue::Color([r, g, b])) => Ok([r, g, b, 255]),
                        None => Ok([0, 0, 0, 0]),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?,
            ),
            RenderMode::Semantic => Buffer::Semantic(
                values
                    .into_iter()
                    .map(|v| match v {
                        Some(PixelValue::Label(l)) => Ok(Some(l)),
                        None => Ok(None),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?,
            ),
            RenderMode::Depth => Buffer::Depth(
                values
                    .into_iter()
                    .map(|v| match v {
                        Some(PixelValue::Depth(d)) => Ok(d),
                        None => Ok(f64::NAN),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Image { grid, buffer })
    }

    pub fn mode(&self) -> RenderMode {
        match self.buffer {
            Buffer::Lit(_) => RenderMode::Lit,
            Buffer::Semantic(_) => RenderMode::Semantic,
            Buffer::Depth(_) => RenderMode::Depth,
        }
    }

    pub fn labels(&self) -> Option<&[Option<Label>]> {
        match &self.buffer {
            Buffer::Semantic(v) => Some(v),
            _ => None,
        }
    }

    pub fn depths(&self) -> Option<&[f64]> {
        match &self.buffer {
            Buffer::Depth(v) => Some(v),
            _ => None,
        }
    }

    pub fn colors(&self) -> Option<&[[u8; 4]]> {
        match &self.buffer {
            Buffer::Lit(v) => Some(v),
            _ => None,
        }
    }

    /// RGBA view of a lit or semantic image (semantic labels through the palette).
    pub fn to_rgba(&self) -> Option<Vec<[u8; 4]>> {
        match &self.buffer {
            Buffer::Lit(v) => Some(v.clone()),
            Buffer::Semantic(v) => Some(
                v.iter()
                    .map(|l| match l {
                        Some(l) => {
                            let [r, g, b] = palette_color(*l);
                            [r, g, b, 255]
                        }
                        None => [0, 0, 0, 0],
                    })
                    .collect(),
            ),
            Buffer::Depth(_) => None,
        }
    }

    /// Write the natural on-disk form: PNG for lit/semantic, float32 depth otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        match &self.buffer {
            Buffer::Depth(d) => write_depth(path, self.grid, d),
            _ => write_rgba_png(path, self.grid, &self.to_rgba().expect("color image")),
        }
    }
}

pub fn write_rgba_png(path: &Path, grid: ImageGrid, px: &[[u8; 4]]) -> Result<()> {
    let raw: Vec<u8> = px.iter().flatten().copied().collect();
    let img: ImageBuffer<Rgba<u8>, _> =
        ImageBuffer::from_raw(grid.width as u32, grid.height as u32, raw)
            .ok_or_else(|| Error::InvalidParameter("pixel count does not match grid".into()))?;
    img.save(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

pub fn write_rgb_png(path: &Path, grid: ImageGrid, px: &[[u8; 3]]) -> Result<()> {
    let raw: Vec<u8> = px.iter().flatten().copied().collect();
    let img: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(grid.width as u32, grid.height as u32, raw)
            .ok_or_else(|| Error::InvalidParameter("pixel count does not match grid".into()))?;
    img.save(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

pub fn read_rgb_png(path: &Path) -> Result<(ImageGrid, Vec<[u8; 3]>)> {
    let img = ::image::open(path)
        .map_err(|source| Error::Image {
            path: path.into(),
            source,
        })?
        .to_rgb8();
    let grid = ImageGrid::new(img.width() as usize, img.height() as usize)?;
    Ok((grid, img.pixels().map(|p| p.0).collect()))
}

/// Binary mask PNG (0 / 255 grayscale).
pub fn write_mask_png(path: &Path, grid: ImageGrid, mask: &[bool]) -> Result<()> {
    let raw: Vec<u8> = mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img: ImageBuffer<Luma<u8>, _> =
        ImageBuffer::from_raw(grid.width as u32, grid.height as u32, raw)
            .ok_or_else(|| Error::InvalidParameter("mask size does not match grid".into()))?;
    img.save(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })
}

/// Read any image as a binary mask: a pixel is set when its luminance is non-zero.
pub fn read_mask_png(path: &Path) -> Result<(ImageGrid, Vec<bool>)> {
    let img = ::image::open(path)
        .map_err(|source| Error::Image {
            path: path.into(),
            source,
        })?
        .to_luma8();
    let grid = ImageGrid::new(img.width() as usize, img.height() as usize)?;
    Ok((grid, img.pixels().map(|p| p.0[0] > 0).collect()))
}

pub fn encode_depth(grid: ImageGrid, depth: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * depth.len());
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&(grid.width as u32).to_le_bytes());
    out.extend_from_slice(&(grid.height as u32).to_le_bytes());
    for &d in depth {
        out.extend_from_slice(&(d as f32).to_le_bytes());
    }
    out
}

pub fn decode_depth(bytes: &[u8]) -> std::result::Result<(ImageGrid, Vec<f64>), String> {
    if bytes.len() < 16 || &bytes[..8] != DEPTH_MAGIC {
        return Err("missing OMNIDPT0 header".into());
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let grid = ImageGrid::new(w, h).map_err(|e| e.to_string())?;
    let body = &bytes[16..];
    if body.len() != 4 * grid.len() {
        return Err(format!(
            "expected {} bytes of float32 data for {w}×{h}, found {}",
            4 * grid.len(),
            body.len()
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((grid, data))
}

pub fn write_depth(path: &Path, grid: ImageGrid, depth: &[f64]) -> Result<()> {
    fs::write(path, encode_depth(grid, depth)).map_err(|e| Error::io(path, e))
}

pub fn read_depth(path: &Path) -> Result<(ImageGrid, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_depth(&bytes).map_err(|message| Error::Format {
        path: path.into(),
        message,
    })
}

/// 16-bit grayscale preview of a depth buffer. Returns the scale in meters
/// per gray level (`depth ≈ level × scale`); missing depth maps to 0.
pub fn write_depth_preview(path: &Path, grid: ImageGrid, depth: &[f64]) -> Result<f64> {
    let max = depth
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let scale = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let raw: Vec<u16> = depth
        .iter()
        .map(|&d| {
            if d.is_finite() {
                (d / scale).round().clamp(0.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    let img: ImageBuffer<Luma<u16>, _> =
        ImageBuffer::from_raw(grid.width as u32, grid.height as u32, raw)
            .ok_or_else(|| Error::InvalidParameter("depth size does not match grid".into()))?;
    img.save(path).map_err(|source| Error::Image {
        path: path.into(),
        source,
    })?;
    Ok(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn depth_header_layout() {
        let grid = ImageGrid::new(3, 2).unwrap();
        let bytes = encode_depth(grid, &[1.0, 2.0, f64::NAN, 4.0, 5.0, 6.5]);
        assert_eq!(&bytes[..8], b"OMNIDPT0");
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 24);
        assert_eq!(&bytes[16..20], &1.0f32.to_le_bytes());
        let (g, d) = decode_depth(&bytes).unwrap();
        assert_eq!(g, grid);
        assert!(d[2].is_nan());
        assert_eq!(d[5], 6.5);
    }

    #[test]
    fn depth_rejects_bad_input() {
        assert!(decode_depth(b"OMNIDPT1\0\0\0\0\0\0\0\0").is_err());
        let mut bytes = encode_depth(ImageGrid::new(2, 2).unwrap(), &[1.0; 4]);
        bytes.pop();
        assert!(decode_depth(&bytes).is_err());
    }

    #[test]
    fn zero_grid_rejected() {
        assert!(ImageGrid::new(0, 4).is_err());
    }

    proptest! {
        #[test]
        fn depth_round_trips_at_f32_precision(values in prop::collection::vec(0.0f64..100.0, 1..64)) {
            let grid = ImageGrid::new(values.len(), 1).unwrap();
            let (_, back) = decode_depth(&encode_depth(grid, &values)).unwrap();
            for (a, b) in values.iter().zip(&back) {
                prop_assert_eq!(*a as f32 as f64, *b);
            }
        }
    }
}
