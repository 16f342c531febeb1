//! PNG reading and writing for images, masks and scalar maps.

use std::path::Path;

use crate::error::{CoreError, Result};
use crate::raster::{Image, Mask, Raster};
use crate::scalar::Scalar;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CoreError {
    CoreError::Io(format!("{}: {e}", path.display()))
}

/// Reads an 8-bit RGB or grayscale PNG.
pub fn read_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| io_err(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    Image::new(h as usize, w as usize, pixels)
}

pub fn image_from_png_bytes(bytes: &[u8]) -> Result<Image> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| CoreError::Io(e.to_string()))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Image::new(h as usize, w as usize, img.pixels().map(|p| p.0).collect())
}

pub fn image_to_png_bytes(img: &Image) -> Result<Vec<u8>> {
    let flat: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, flat)
        .ok_or_else(|| CoreError::Io("buffer size".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| CoreError::Io(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_image(img: &Image, path: &Path) -> Result<()> {
    let bytes = image_to_png_bytes(img)?;
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn gray_png_bytes(h: usize, w: usize, data: Vec<u8>) -> Result<Vec<u8>> {
    let buf = image::GrayImage::from_raw(w as u32, h as u32, data)
        .ok_or_else(|| CoreError::Io("buffer size".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| CoreError::Io(e.to_string()))?;
    Ok(out.into_inner())
}

/// Mask as an 8-bit grayscale PNG, 255 = foreground.
pub fn mask_to_png_bytes(mask: &Mask) -> Result<Vec<u8>> {
    gray_png_bytes(
        mask.height(),
        mask.width(),
        mask.bits()
            .iter()
            .map(|&b| if b { 255 } else { 0 })
            .collect(),
    )
}

/// Decodes a mask PNG; any non-zero luma is foreground.
pub fn mask_from_png_bytes(bytes: &[u8]) -> Result<Mask> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| CoreError::Io(e.to_string()))?
        .to_luma8();
    let (w, h) = img.dimensions();
    Mask::new(
        h as usize,
        w as usize,
        img.pixels().map(|p| p.0[0] > 0).collect(),
    )
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    mask_from_png_bytes(&bytes).map_err(|e| io_err(path, e))
}

pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    std::fs::write(path, mask_to_png_bytes(mask)?).map_err(|e| io_err(path, e))
}

/// Encodes a map with values in `[0, 1]` as grayscale (`value * 255`, rounded, clamped).
pub fn unit_map_to_png_bytes<T: Scalar>(m: &Raster<T>) -> Result<Vec<u8>> {
    let data = m
        .values()
        .iter()
        .map(|v| (v.as_f64() * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    gray_png_bytes(m.height(), m.width(), data)
}

pub fn write_unit_map<T: Scalar>(m: &Raster<T>, path: &Path) -> Result<()> {
    std::fs::write(path, unit_map_to_png_bytes(m)?).map_err(|e| io_err(path, e))
}
