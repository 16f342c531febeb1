//! The four per-pixel cues over the extended crop of a box: colour-contrast
//! saliency `S`, edge density `E`, local entropy `H` and the Gaussian spatial
//! prior `G`, each rescaled to `[0, 1]` by a percentile-clipped min-max.
//!
//! Every size parameter is a fraction of the diagonal of the *original* box and
//! is turned into whole pixels with [`scaled_pixels`].

use serde::{Deserialize, Serialize};

use crate::color::{to_cielab, to_gray};
use crate::entropy::{local_entropy, EntropyParams};
use crate::error::{invalid, CoreError, Result};
use crate::filter::{box_mean, center_surround, gaussian_blur, sobel_magnitude};
use crate::geometry::BBox;
use crate::raster::{Image, Raster};
use crate::scalar::Scalar;
use crate::stats::percentiles_of;

/// Cue-stage hyperparameters. Fractions are relative to the box diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CueParams {
    /// Box-extension factor.
    pub alpha: f64,
    pub r_in: f64,
    pub r_ann: f64,
    /// Side of the box kernel averaging the gradient magnitude.
    pub box_side: f64,
    /// Pre-gradient Gaussian sigma, in pixels.
    pub sigma_pre: f64,
    pub r_h: f64,
    pub entropy_bins: usize,
    pub entropy_clip: (f64, f64),
    /// Prior bandwidth; `inf` turns the prior off (`G = 1`).
    pub sigma_g: f64,
    pub norm_clip: (f64, f64),
    pub delta: f64,
}

impl Default for CueParams {
    fn default() -> Self {
        Self {
            alpha: 0.20,
            r_in: 0.03,
            r_ann: 0.09,
            box_side: 0.05,
            sigma_pre: 1.0,
            r_h: 0.03,
            entropy_bins: 256,
            entropy_clip: (5.0, 95.0),
            sigma_g: 0.25,
            norm_clip: (5.0, 95.0),
            delta: 1e-8,
        }
    }
}

impl CueParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid(
                "alpha",
                format!("must be >= 0, got {}", self.alpha),
            ));
        }
        for (name, v) in [
            ("r_in", self.r_in),
            ("r_ann", self.r_ann),
            ("box_side", self.box_side),
            ("r_h", self.r_h),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.r_ann <= self.r_in {
            return Err(invalid("r_ann", "must exceed r_in"));
        }
        if !(self.sigma_pre > 0.0) {
            return Err(invalid("sigma_pre", "must be positive"));
        }
        if !(self.sigma_g > 0.0) {
            return Err(invalid("sigma_g", "must be positive (or inf to disable)"));
        }
        if !(self.norm_clip.0 < self.norm_clip.1) || !(self.entropy_clip.0 < self.entropy_clip.1) {
            return Err(invalid("norm_clip", "lower percentile must be below upper"));
        }
        if !(self.delta > 0.0) {
            return Err(invalid("delta", "must be positive"));
        }
        Ok(())
    }
}

/// `max(1, round(fraction * diagonal))` pixels.
pub fn scaled_pixels(fraction: f64, diagonal: f64) -> usize {
    ((fraction * diagonal).round() as usize).max(1)
}

/// Scales width and height by `1 + alpha` about the center (rounding outward),
/// then clips to `bounds`.
pub fn extend_box(b: &BBox, alpha: f64, bounds: &BBox) -> Result<BBox> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be >= 0, got {alpha}")));
    }
    if !bounds.contains_box(b) {
        return Err(b.invalid("box exceeds image bounds"));
    }
    let pad_x = alpha * (b.x_max - b.x_min) as f64 / 2.0;
    let pad_y = alpha * (b.y_max - b.y_min) as f64 / 2.0;
    let grown = BBox::from_corners_unchecked(
        (b.x_min as f64 - pad_x).floor() as i32,
        (b.y_min as f64 - pad_y).floor() as i32,
        (b.x_max as f64 + pad_x).ceil() as i32,
        (b.y_max as f64 + pad_y).ceil() as i32,
    );
    // b lies inside bounds, so the clipped box contains b and stays valid.
    Ok(grown.clip_to(bounds).unwrap_or(*b))
}

/// The image restricted to the extended box, with the box it was grown from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedCrop {
    pub source: BBox,
    pub alpha: f64,
    pub extended: BBox,
    pub image: Image,
}

impl ExtendedCrop {
    pub fn new(img: &Image, b: &BBox, alpha: f64) -> Result<Self> {
        if !b.is_valid() {
            return Err(b.invalid("degenerate box"));
        }
        let extended = extend_box(b, alpha, &img.bounds())?;
        Ok(Self {
            source: *b,
            alpha,
            extended,
            image: img.crop(&extended)?,
        })
    }

    /// Image coordinates of the crop origin.
    pub fn offset(&self) -> (i32, i32) {
        (self.extended.x_min, self.extended.y_min)
    }

    pub fn diagonal(&self) -> f64 {
        self.source.diagonal()
    }

    fn dims(&self) -> (usize, usize) {
        (self.image.height(), self.image.width())
    }
}

/// Raw saliency: l2 distance between the CIELAB disk mean and annulus mean.
pub fn cue_saliency<T: Scalar>(crop: &ExtendedCrop, r_in: f64, r_ann: f64) -> Result<Raster<T>> {
    if !(r_in > 0.0 && r_ann > r_in) {
        return Err(invalid("r_ann", "need r_ann > r_in > 0"));
    }
    let d = crop.diagonal();
    let inner = scaled_pixels(r_in, d);
    let outer = scaled_pixels(r_ann, d).max(inner + 1);
    let lab = to_cielab::<f64>(&crop.image);
    let (h, w) = crop.dims();
    // Mean differences are shift invariant; centring on one pixel keeps flat
    // regions exactly zero instead of prefix-sum cancellation noise.
    let channels: Vec<Vec<f64>> = lab
        .channels()
        .iter()
        .map(|c| {
            let r = c.values()[0];
            c.values().iter().map(|v| v - r).collect()
        })
        .collect();
    let cs = center_surround(&channels, h, w, inner, outer);
    let data = (0..h * w)
        .map(|i| {
            let d2: f64 = (0..3)
                .map(|c| (cs.inner[c][i] - cs.ring[c][i]).powi(2))
                .sum();
            T::lit(d2.sqrt())
        })
        .collect();
    Ok(Raster::from_vec_unchecked(h, w, data))
}

/// Sobel magnitude of the Gaussian-smoothed grayscale crop.
pub fn gradient_magnitude<T: Scalar>(crop: &ExtendedCrop, sigma_pre: f64) -> Result<Raster<T>> {
    let gray = to_gray::<T>(&crop.image);
    sobel_magnitude(&gaussian_blur(&gray, sigma_pre)?)
}

/// Raw edge density: box-averaged gradient magnitude.
pub fn cue_edge<T: Scalar>(
    crop: &ExtendedCrop,
    box_side: f64,
    sigma_pre: f64,
) -> Result<Raster<T>> {
    let grad = gradient_magnitude::<T>(crop, sigma_pre)?;
    edge_from_gradient(&grad, box_side, crop.diagonal())
}

fn edge_from_gradient<T: Scalar>(
    grad: &Raster<T>,
    box_side: f64,
    diagonal: f64,
) -> Result<Raster<T>> {
    box_mean(grad, scaled_pixels(box_side, diagonal))
}

/// Raw entropy of the quantized gradient magnitude (256 bins, 5/95 clip by default).
pub fn cue_entropy<T: Scalar>(crop: &ExtendedCrop, r_h: f64, sigma_pre: f64) -> Result<Raster<T>> {
    let grad = gradient_magnitude::<T>(crop, sigma_pre)?;
    entropy_from_gradient(
        &grad,
        &EntropyParams::new(scaled_pixels(r_h, crop.diagonal())),
    )
}

fn entropy_from_gradient<T: Scalar>(grad: &Raster<T>, params: &EntropyParams) -> Result<Raster<T>> {
    local_entropy(grad, params)
}

/// `exp(-|p - c_b|^2 / (2 sigma^2))` with `sigma = sigma_g * diagonal`, centered on the
/// original box. Infinite `sigma_g` yields a map of ones.
pub fn cue_gaussian_prior<T: Scalar>(crop: &ExtendedCrop, sigma_g: f64) -> Result<Raster<T>> {
    if !(sigma_g > 0.0) {
        return Err(invalid(
            "sigma_g",
            format!("must be positive, got {sigma_g}"),
        ));
    }
    let (h, w) = crop.dims();
    if sigma_g.is_infinite() {
        return Raster::filled(h, w, T::one());
    }
    let sigma = sigma_g * crop.diagonal();
    let (cx, cy) = crop.source.center();
    let (ox, oy) = crop.offset();
    let denom = 2.0 * sigma * sigma;
    Raster::from_fn(h, w, |y, x| {
        let dx = (ox + x as i32) as f64 - cx;
        let dy = (oy + y as i32) as f64 - cy;
        T::lit((-(dx * dx + dy * dy) / denom).exp())
    })
}

/// `clip((X - q_lo(X)) / (q_hi(X) - q_lo(X) + delta), 0, 1)`.
pub fn normalize_cue<T: Scalar>(
    raw: &Raster<T>,
    q_lo: f64,
    q_hi: f64,
    delta: f64,
) -> Result<Raster<T>> {
    if q_lo >= q_hi {
        return Err(invalid("q_lo", "must be below q_hi"));
    }
    let p = percentiles_of(raw.values(), &[q_lo, q_hi])?;
    let (lo, hi) = (p[0], p[1]);
    let denom = hi - lo + T::lit(delta);
    raw.map(|v| ((v - lo) / denom).max(T::zero()).min(T::one()))
}

/// Raw (unnormalized) cue maps, kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCues<T> {
    pub s: Raster<T>,
    pub e: Raster<T>,
    pub h: Raster<T>,
    pub g: Raster<T>,
}

/// Normalized cues over the extended crop.
#[derive(Debug, Clone, PartialEq)]
pub struct CueMaps<T> {
    pub source: BBox,
    pub extended: BBox,
    pub s: Raster<T>,
    pub e: Raster<T>,
    pub h: Raster<T>,
    pub g: Raster<T>,
    pub raw: RawCues<T>,
}

impl<T: Scalar> CueMaps<T> {
    pub fn height(&self) -> usize {
        self.s.height()
    }

    pub fn width(&self) -> usize {
        self.s.width()
    }
}

/// Computes and normalizes all four cues for box `b` of `img`.
pub fn compute_cues<T: Scalar>(img: &Image, b: &BBox, params: &CueParams) -> Result<CueMaps<T>> {
    params.validate()?;
    let crop = ExtendedCrop::new(img, b, params.alpha)?;
    let (h, w) = crop.dims();
    if h < 3 || w < 3 {
        return Err(CoreError::TooSmall {
            height: h,
            width: w,
            min: 3,
        });
    }
    let d = crop.diagonal();
    let s = cue_saliency::<T>(&crop, params.r_in, params.r_ann)?;
    let grad = gradient_magnitude::<T>(&crop, params.sigma_pre)?;
    let e = edge_from_gradient(&grad, params.box_side, d)?;
    let entropy = EntropyParams {
        radius: scaled_pixels(params.r_h, d),
        bins: params.entropy_bins,
        clip_lo: params.entropy_clip.0,
        clip_hi: params.entropy_clip.1,
    };
    let hm = entropy_from_gradient(&grad, &entropy)?;
    let g = cue_gaussian_prior::<T>(&crop, params.sigma_g)?;

    let (lo, hi, delta) = (params.norm_clip.0, params.norm_clip.1, params.delta);
    let g_norm = if params.sigma_g.is_infinite() {
        g.clone()
    } else {
        normalize_cue(&g, lo, hi, delta)?
    };
    Ok(CueMaps {
        source: *b,
        extended: crop.extended,
        s: normalize_cue(&s, lo, hi, delta)?,
        e: normalize_cue(&e, lo, hi, delta)?,
        h: normalize_cue(&hm, lo, hi, delta)?,
        g: g_norm,
        raw: RawCues { s, e, h: hm, g },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scene_disk() -> Image {
        Image::from_fn(64, 64, |y, x| {
            let d2 = (x as i32 - 32).pow(2) + (y as i32 - 32).pow(2);
            if d2 <= 100 {
                [220, 40, 40]
            } else {
                [40, 90, 200]
            }
        })
        .unwrap()
    }

    #[test]
    fn extend_examples() {
        let bounds = BBox::new(0, 0, 199, 199).unwrap();
        let b = BBox::new(40, 40, 60, 60).unwrap();
        assert_eq!(extend_box(&b, 0.0, &bounds).unwrap(), b);
        assert_eq!(
            extend_box(&b, 0.2, &bounds).unwrap(),
            BBox::new(38, 38, 62, 62).unwrap()
        );
        let edge = BBox::new(0, 0, 50, 199).unwrap();
        let e = extend_box(&edge, 0.2, &bounds).unwrap();
        assert_eq!((e.x_min, e.y_min, e.y_max), (0, 0, 199));
        assert!(e.contains_box(&edge) && bounds.contains_box(&e));
        assert!(extend_box(&b, -0.1, &bounds).is_err());
    }

    #[test]
    fn gaussian_prior_values() {
        let img = Image::filled(101, 101, [0, 0, 0]).unwrap();
        let b = BBox::new(30, 30, 70, 70).unwrap();
        let crop = ExtendedCrop::new(&img, &b, 0.2).unwrap();
        let g = cue_gaussian_prior::<f64>(&crop, 0.25).unwrap();
        let (ox, oy) = crop.offset();
        let at = |x: i32, y: i32| g.get((y - oy) as usize, (x - ox) as usize);
        assert_eq!(at(50, 50), 1.0);
        let sigma = 0.25 * b.diagonal();
        // Points at distance sigma along the axis do not fall on pixels in general; check the formula.
        let p = (50 + 10, 50);
        assert_abs_diff_eq!(
            at(p.0, p.1),
            (-(100.0) / (2.0 * sigma * sigma)).exp(),
            epsilon = 1e-12
        );
        assert_eq!(at(60, 50), at(40, 50));
        assert_eq!(at(50, 60), at(60, 50));
        assert_eq!(at(56, 58), at(58, 56));
    }

    #[test]
    fn gaussian_prior_at_one_sigma() {
        // Diagonal 40 * sqrt(2) and sigma_g chosen so that sigma = 10 px exactly.
        let img = Image::filled(101, 101, [0, 0, 0]).unwrap();
        let b = BBox::new(30, 30, 70, 70).unwrap();
        let crop = ExtendedCrop::new(&img, &b, 0.0).unwrap();
        let g = cue_gaussian_prior::<f64>(&crop, 10.0 / b.diagonal()).unwrap();
        // row 20, column 30 of the crop is pixel (60, 50), 10 px right of the center
        assert_abs_diff_eq!(g.get(20, 30), (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!((-0.5f64).exp(), 0.6065, epsilon = 1e-4);
    }

    #[test]
    fn normalize_examples() {
        let c = Raster::filled(4, 4, 3.0).unwrap();
        assert!(normalize_cue(&c, 5.0, 95.0, 1e-8)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let ramp = Raster::from_fn(1, 101, |_, x| x as f64).unwrap();
        let n = normalize_cue(&ramp, 5.0, 95.0, 1e-8).unwrap();
        assert_abs_diff_eq!(n.get(0, 50), 45.0 / (90.0 + 1e-8), epsilon = 1e-12);
        assert_abs_diff_eq!(n.get(0, 50), 0.5, epsilon = 1e-6);
        assert_eq!(n.get(0, 0), 0.0);
        assert_eq!(n.get(0, 100), 1.0);
    }

    #[test]
    fn constant_image_zeroes_visual_cues() {
        let img = Image::filled(48, 48, [120, 130, 140]).unwrap();
        let b = BBox::new(10, 10, 37, 37).unwrap();
        let cues = compute_cues::<f64>(&img, &b, &CueParams::default()).unwrap();
        for m in [&cues.s, &cues.e, &cues.h] {
            assert!(m.values().iter().all(|&v| v == 0.0));
        }
        let bright = Image::filled(48, 48, [250, 10, 10]).unwrap();
        let other = compute_cues::<f64>(&bright, &b, &CueParams::default()).unwrap();
        assert_eq!(cues.g, other.g);
        assert_eq!(cues.raw.g, other.raw.g);
    }

    #[test]
    fn saliency_is_colour_symmetric() {
        let img = scene_disk();
        let b = BBox::new(12, 12, 52, 52).unwrap();
        let crop = ExtendedCrop::new(&img, &b, 0.2).unwrap();
        let s = cue_saliency::<f64>(&crop, 0.03, 0.09).unwrap();
        // Far from the disk the centre and surround agree.
        assert!(s.get(0, 0) < 1e-9);
        // Swapping the two colours leaves S unchanged.
        let swapped = Image::from_fn(64, 64, |y, x| {
            if img.get(y, x) == [220, 40, 40] {
                [40, 90, 200]
            } else {
                [220, 40, 40]
            }
        })
        .unwrap();
        let crop2 = ExtendedCrop::new(&swapped, &b, 0.2).unwrap();
        let s2 = cue_saliency::<f64>(&crop2, 0.03, 0.09).unwrap();
        for (a, c) in s.values().iter().zip(s2.values()) {
            assert_abs_diff_eq!(*a, *c, epsilon = 1e-9);
        }
    }

    #[test]
    fn edge_is_linear_in_intensity() {
        let make = |v: u8| {
            Image::from_fn(32, 32, |_, x| if x >= 16 { [v, v, v] } else { [0, 0, 0] }).unwrap()
        };
        let b = BBox::new(4, 4, 27, 27).unwrap();
        let e1 =
            cue_edge::<f64>(&ExtendedCrop::new(&make(60), &b, 0.2).unwrap(), 0.05, 1.0).unwrap();
        let e2 =
            cue_edge::<f64>(&ExtendedCrop::new(&make(120), &b, 0.2).unwrap(), 0.05, 1.0).unwrap();
        for (a, c) in e1.values().iter().zip(e2.values()) {
            assert_abs_diff_eq!(2.0 * a, *c, epsilon = 1e-9);
        }
        // maximal in a band around the edge column
        let crop = ExtendedCrop::new(&make(60), &b, 0.2).unwrap();
        let (ox, _) = crop.offset();
        let max = e1.min_max().1;
        let edge_col = (16 - ox) as usize;
        assert!((0..e1.height())
            .all(|y| e1.get(y, edge_col) >= 0.5 * max || e1.get(y, edge_col - 1) >= 0.5 * max));
        assert_eq!(e1.get(0, 0), 0.0);
    }

    #[test]
    fn entropy_base_cancels_in_normalization() {
        let img = Image::from_fn(40, 40, |y, x| {
            let v = ((x * 37 + y * 91) % 255) as u8;
            if x < 20 {
                [v, v, v]
            } else {
                [90, 90, 90]
            }
        })
        .unwrap();
        let b = BBox::new(5, 5, 34, 34).unwrap();
        let crop = ExtendedCrop::new(&img, &b, 0.2).unwrap();
        let h_ln = cue_entropy::<f64>(&crop, 0.03, 1.0).unwrap();
        let h_log2 = h_ln.map(|v| v / std::f64::consts::LN_2).unwrap();
        let a = normalize_cue(&h_ln, 5.0, 95.0, 1e-8).unwrap();
        let c = normalize_cue(&h_log2, 5.0, 95.0, 1e-8).unwrap();
        for (x, y) in a.values().iter().zip(c.values()) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-6);
        }
    }
}
