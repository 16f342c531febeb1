//! Grayscale and CIELAB conversions of 8-bit sRGB images.

use std::sync::OnceLock;

use crate::raster::{Image, Raster};
use crate::scalar::Scalar;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// D65 reference white in XYZ (Y normalized to 1).
pub const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// Per-channel luminance in `[0, 1]`.
pub fn to_gray<T: Scalar>(img: &Image) -> Raster<T> {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels()
        .iter()
        .map(|&[r, g, b]| T::lit((wr * r as f64 + wg * g as f64 + wb * b as f64) / 255.0))
        .collect();
    Raster::from_vec_unchecked(img.height(), img.width(), data)
}

fn linear_lut() -> &'static [f64; 256] {
    static LUT: OnceLock<[f64; 256]> = OnceLock::new();
    LUT.get_or_init(|| {
        let mut lut = [0.0; 256];
        for (i, v) in lut.iter_mut().enumerate() {
            *v = srgb_to_linear(i as f64 / 255.0);
        }
        lut
    })
}

/// Inverse sRGB transfer function on a `[0, 1]` channel value.
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Cube root of a positive finite value: exponent-bit estimate refined by three
/// Halley steps (cubic convergence, so the result is within an ulp or two).
#[inline]
fn cbrt_halley(t: f64) -> f64 {
    let mut y = f64::from_bits(t.to_bits() / 3 + 0x2a9f_7893_782d_a1ce);
    for _ in 0..3 {
        let y3 = y * y * y;
        y *= (y3 + 2.0 * t) / (2.0 * y3 + t);
    }
    y
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const EPS: f64 = 216.0 / 24389.0; // (6/29)^3
    const KAPPA: f64 = 24389.0 / 27.0;
    if t > EPS {
        cbrt_halley(t)
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Converts one 8-bit sRGB triple to `(L*, a*, b*)` under D65, without white balancing.
pub fn rgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lut = linear_lut();
    let lin = [
        lut[rgb[0] as usize],
        lut[rgb[1] as usize],
        lut[rgb[2] as usize],
    ];
    let mut xyz = [0.0; 3];
    for (out, row) in xyz.iter_mut().zip(SRGB_TO_XYZ.iter()) {
        *out = row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2];
    }
    let fx = lab_f(xyz[0] / D65_WHITE[0]);
    let fy = lab_f(xyz[1] / D65_WHITE[1]);
    let fz = lab_f(xyz[2] / D65_WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// The three CIELAB channels of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage<T> {
    pub l: Raster<T>,
    pub a: Raster<T>,
    pub b: Raster<T>,
}

impl<T> LabImage<T> {
    pub fn channels(&self) -> [&Raster<T>; 3] {
        [&self.l, &self.a, &self.b]
    }
}

pub fn to_cielab<T: Scalar>(img: &Image) -> LabImage<T> {
    let n = img.height() * img.width();
    let (mut l, mut a, mut b) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for &px in img.pixels() {
        let [ll, aa, bb] = rgb_to_lab(px);
        l.push(T::lit(ll));
        a.push(T::lit(aa));
        b.push(T::lit(bb));
    }
    let (h, w) = (img.height(), img.width());
    LabImage {
        l: Raster::from_vec_unchecked(h, w, l),
        a: Raster::from_vec_unchecked(h, w, a),
        b: Raster::from_vec_unchecked(h, w, b),
    }
}

/// CIE76 colour difference.
pub fn delta_e(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
}
