//! Dense row-major rasters: scalar maps, RGB images and binary masks.

use crate::error::{CoreError, Result};
use crate::geometry::BBox;
use crate::scalar::Scalar;

/// A dense scalar field of `height x width` finite values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(CoreError::EmptyRaster { height, width });
    }
    Ok(())
}

impl<T: Scalar> Raster<T> {
    /// Wraps a row-major buffer, validating its length and finiteness.
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        check_dims(height, width)?;
        if data.len() != height * width {
            return Err(CoreError::BufferSize {
                height,
                width,
                expected: height * width,
                actual: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds a raster by evaluating `f(y, x)` at every pixel.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        check_dims(height, width)?;
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::new(height, width, data)
    }

    /// Internal constructor for kernels whose output is finite by construction.
    pub(crate) fn from_vec_unchecked(height: usize, width: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Value with coordinates clamped into the raster (edge replication).
    #[inline]
    pub fn get_clamped(&self, y: isize, x: isize) -> T {
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let x = x.clamp(0, self.width as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn same_shape<U>(&self, other: &Raster<U>) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Applies `f` to every value. The result must stay finite.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Rotates the raster by 90 degrees clockwise.
    pub fn rotate90(&self) -> Self {
        let (h, w) = (self.height, self.width);
        let mut data = Vec::with_capacity(h * w);
        for y in 0..w {
            for x in 0..h {
                data.push(self.get(h - 1 - x, y));
            }
        }
        Self::from_vec_unchecked(w, h, data)
    }

    pub fn min_max(&self) -> (T, T) {
        self.data
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn cast<U: Scalar>(&self) -> Raster<U> {
        Raster::from_vec_unchecked(
            self.height,
            self.width,
            self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        )
    }
}

/// An 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(height, width)?;
        if pixels.len() != height * width {
            return Err(CoreError::BufferSize {
                height,
                width,
                expected: height * width,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::new(height, width, vec![rgb; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_dims(height, width)?;
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Self::new(height, width, pixels)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// The full-image box `(0, 0, width - 1, height - 1)`.
    pub fn bounds(&self) -> BBox {
        BBox::from_corners_unchecked(0, 0, self.width as i32 - 1, self.height as i32 - 1)
    }

    /// Copies the pixels covered by `b` (inclusive corners). `b` must lie inside the image.
    pub fn crop(&self, b: &BBox) -> Result<Image> {
        if !self.bounds().contains_box(b) {
            return Err(b.invalid("box exceeds image bounds"));
        }
        let (x0, y0) = (b.x_min as usize, b.y_min as usize);
        let (w, h) = (b.width_px(), b.height_px());
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x0 + w]);
        }
        Image::new(h, w, pixels)
    }
}

/// A binary `height x width` mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(CoreError::BufferSize {
                height,
                width,
                expected: height * width,
                actual: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![false; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(height, width)?;
        let mut bits = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(y, x));
            }
        }
        Self::new(height, width, bits)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    fn check_same(&self, other: &Mask) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(CoreError::DimensionMismatch(
                self.height,
                self.width,
                other.height,
                other.width,
            ));
        }
        Ok(())
    }

    /// `(|self & other|, |self | other|)`.
    pub fn overlap_counts(&self, other: &Mask) -> Result<(u64, u64)> {
        self.check_same(other)?;
        let (mut inter, mut union) = (0u64, 0u64);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as u64;
            union += (a || b) as u64;
        }
        Ok((inter, union))
    }

    /// Pixelwise OR in place.
    pub fn union_with(&mut self, other: &Mask) -> Result<()> {
        self.check_same(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Tight bounding box of the foreground, `None` if empty.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut acc: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(y, x) {
                    acc = Some(match acc {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        acc.map(|(x0, y0, x1, y1)| {
            BBox::from_corners_unchecked(x0 as i32, y0 as i32, x1 as i32, y1 as i32)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            Raster::<f64>::new(2, 2, vec![0.0; 3]),
            Err(CoreError::BufferSize { .. })
        ));
        assert!(matches!(
            Raster::<f64>::new(0, 2, vec![]),
            Err(CoreError::EmptyRaster { .. })
        ));
        assert!(matches!(
            Raster::new(1, 2, vec![0.0, f64::NAN]),
            Err(CoreError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let r = Raster::<f64>::from_fn(3, 5, |y, x| (y * 5 + x) as f64).unwrap();
        let back = r.rotate90().rotate90().rotate90().rotate90();
        assert_eq!(r, back);
        assert_eq!(r.rotate90().height(), 5);
        assert_eq!(r.rotate90().get(0, 0), r.get(2, 0));
    }

    #[test]
    fn mask_counts() {
        let a = Mask::from_fn(4, 4, |y, _| y < 2).unwrap();
        let b = Mask::from_fn(4, 4, |_, x| x < 1).unwrap();
        assert_eq!(a.overlap_counts(&b).unwrap(), (2, 10));
        assert_eq!(a.bounding_box(), Some(BBox::new(0, 0, 3, 1).unwrap()));
        assert!(Mask::zeros(2, 2).unwrap().bounding_box().is_none());
    }
}
