//! Linear filters over scalar maps: Gaussian blur, Sobel gradient magnitude,
//! box mean via an integral image, and disk/annulus means.
//!
//! Convolutions (Gaussian, Sobel, box) replicate edge pixels. Disk and annulus
//! means instead average over the in-bounds part of the neighbourhood only.

use crate::error::{invalid, CoreError, Result};
use crate::raster::Raster;
use crate::scalar::Scalar;

/// Normalized 1-D Gaussian taps for `sigma`, truncated at `ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil().max(1.0) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

fn convolve_rows(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                let xx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += t * row[xx];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; h * w];
    for (k, t) in taps.iter().enumerate() {
        for y in 0..h {
            let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let (dst, srow) = (&mut out[y * w..(y + 1) * w], &src[yy * w..(yy + 1) * w]);
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += t * s;
            }
        }
    }
    out
}

fn to_f64<T: Scalar>(m: &Raster<T>) -> Vec<f64> {
    m.values().iter().map(|v| v.as_f64()).collect()
}

fn from_f64<T: Scalar>(h: usize, w: usize, data: Vec<f64>) -> Raster<T> {
    Raster::from_vec_unchecked(h, w, data.into_iter().map(T::lit).collect())
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur<T: Scalar>(m: &Raster<T>, sigma: f64) -> Result<Raster<T>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    let taps = gaussian_kernel(sigma);
    let (h, w) = (m.height(), m.width());
    let rows = convolve_rows(&to_f64(m), h, w, &taps);
    Ok(from_f64(h, w, convolve_cols(&rows, h, w, &taps)))
}

/// `sqrt(Gx^2 + Gy^2)` with the 3x3 Sobel kernels and edge replication.
pub fn sobel_magnitude<T: Scalar>(m: &Raster<T>) -> Result<Raster<T>> {
    let (h, w) = (m.height(), m.width());
    if h < 3 || w < 3 {
        return Err(CoreError::TooSmall {
            height: h,
            width: w,
            min: 3,
        });
    }
    let v = to_f64(m);
    let at = |y: isize, x: isize| {
        let y = y.clamp(0, h as isize - 1) as usize;
        let x = x.clamp(0, w as isize - 1) as usize;
        v[y * w + x]
    };
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            let gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
            out.push(gx.hypot(gy));
        }
    }
    Ok(from_f64(h as usize, w as usize, out))
}

/// Summed-area table with one leading zero row and column.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    height: usize,
    width: usize,
    sums: Vec<f64>,
}

impl IntegralImage {
    pub fn new(values: &[f64], height: usize, width: usize) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; (height + 1) * stride];
        for y in 0..height {
            let mut run = 0.0;
            for x in 0..width {
                run += values[y * width + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + run;
            }
        }
        Self {
            height,
            width,
            sums,
        }
    }

    /// Sum over rows `y0..=y1` and columns `x0..=x1`.
    #[inline]
    pub fn rect_sum(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> f64 {
        debug_assert!(y1 < self.height && x1 < self.width);
        let s = self.width + 1;
        self.sums[(y1 + 1) * s + x1 + 1] - self.sums[y0 * s + x1 + 1] - self.sums[(y1 + 1) * s + x0]
            + self.sums[y0 * s + x0]
    }
}

/// Side actually used by [`box_mean`]: even sides round up to the next odd value.
pub fn effective_box_side(side: usize) -> usize {
    if side % 2 == 0 {
        side + 1
    } else {
        side
    }
}

/// Mean over a centered `side x side` window per pixel, edge-replicated,
/// evaluated in O(1) per pixel from an integral image of the padded map.
pub fn box_mean<T: Scalar>(m: &Raster<T>, side: usize) -> Result<Raster<T>> {
    if side == 0 {
        return Err(invalid("side", "must be >= 1"));
    }
    let side = effective_box_side(side);
    let r = side / 2;
    let (h, w) = (m.height(), m.width());
    let (ph, pw) = (h + 2 * r, w + 2 * r);
    let mut padded = Vec::with_capacity(ph * pw);
    for py in 0..ph {
        for px in 0..pw {
            padded.push(
                m.get_clamped(py as isize - r as isize, px as isize - r as isize)
                    .as_f64(),
            );
        }
    }
    let ii = IntegralImage::new(&padded, ph, pw);
    let area = (side * side) as f64;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            out.push(ii.rect_sum(y, x, y + 2 * r, x + 2 * r) / area);
        }
    }
    Ok(from_f64(h, w, out))
}

/// Integer half-width of the discretized disk of radius `radius` at row offset `dy`.
#[inline]
pub(crate) fn disk_half_width(radius: usize, dy: usize) -> usize {
    let r2 = radius * radius - dy * dy;
    let mut s = (r2 as f64).sqrt() as usize;
    while s * s > r2 {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= r2 {
        s += 1;
    }
    s
}

/// Per-pixel sums over the in-bounds part of `{q : |q - p| <= radius}` for several
/// channels at once, plus the shared in-bounds counts.
pub(crate) struct DiskSums {
    pub sums: Vec<Vec<f64>>,
    pub counts: Vec<u32>,
}

pub(crate) fn disk_sums(channels: &[Vec<f64>], h: usize, w: usize, radius: usize) -> DiskSums {
    // Row prefix sums per channel: prefix[c][y * (w + 1) + x] = sum of row y before column x.
    let stride = w + 1;
    let prefix: Vec<Vec<f64>> = channels
        .iter()
        .map(|ch| {
            let mut p = vec![0.0; h * stride];
            for y in 0..h {
                let mut run = 0.0;
                for x in 0..w {
                    run += ch[y * w + x];
                    p[y * stride + x + 1] = run;
                }
            }
            p
        })
        .collect();
    let half: Vec<usize> = (0..=radius).map(|dy| disk_half_width(radius, dy)).collect();
    let mut sums = vec![vec![0.0; h * w]; channels.len()];
    // In-bounds pixel counts: the same segment sums over a row of ones.
    let ones: Vec<f64> = (0..=w).map(|x| x as f64).collect();
    let mut count_row = vec![0.0; w];
    let mut counts = vec![0u32; h * w];
    for y in 0..h {
        // Rows whose window is not clipped vertically share one count row.
        if y > radius && y + radius < h {
            counts.copy_within((y - 1) * w..y * w, y * w);
            continue;
        }
        count_row.iter_mut().for_each(|c| *c = 0.0);
        for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
            accumulate_segments(&ones, &mut count_row, half[y.abs_diff(yy)]);
        }
        for (c, &v) in counts[y * w..(y + 1) * w].iter_mut().zip(&count_row) {
            *c = v as u32;
        }
    }
    // Rows y - d and y + d share a half-width, so they are added in one pass.
    for (p, sum) in prefix.iter().zip(sums.iter_mut()) {
        for (y, srow) in sum.chunks_exact_mut(w).enumerate() {
            let row = |yy: usize| &p[yy * stride..(yy + 1) * stride];
            accumulate_segments(row(y), srow, half[0]);
            for (d, &hw) in half.iter().enumerate().skip(1) {
                match (y.checked_sub(d), (y + d < h).then_some(y + d)) {
                    (Some(up), Some(down)) => accumulate_pair(row(up), row(down), srow, hw),
                    (Some(yy), None) | (None, Some(yy)) => accumulate_segments(row(yy), srow, hw),
                    (None, None) => break,
                }
            }
        }
    }
    DiskSums { sums, counts }
}

/// Adds `sum of row[x - hw ..= x + hw]`, clipped to the row, to `out[x]`.
///
/// Split into ranges by which ends are clipped so each loop is a plain slice
/// operation (`prefix[0]` is zero, so a left-clipped sum is a single lookup).
fn accumulate_segments(prefix: &[f64], out: &mut [f64], hw: usize) {
    let w = out.len();
    let hw = hw.min(w);
    let total = prefix[w];
    let a = hw.min(w); // x < a: clipped on the left
    let b = w.saturating_sub(hw); // x >= b: clipped on the right
    let n0 = a.min(b);
    out[..n0]
        .iter_mut()
        .zip(&prefix[hw + 1..hw + 1 + n0])
        .for_each(|(o, p)| *o += p);
    if a <= b {
        out[a..b]
            .iter_mut()
            .zip(&prefix[a + hw + 1..b + hw + 1])
            .zip(&prefix[a - hw..b - hw])
            .for_each(|((o, hi), lo)| *o += hi - lo);
    } else {
        out[b..a].iter_mut().for_each(|o| *o += total);
    }
    let s = a.max(b);
    out[s..]
        .iter_mut()
        .zip(&prefix[s - hw..w - hw])
        .for_each(|(o, lo)| *o += total - lo);
}

/// `accumulate_segments` for two prefix rows at once.
fn accumulate_pair(p: &[f64], q: &[f64], out: &mut [f64], hw: usize) {
    let w = out.len();
    let hw = hw.min(w);
    let total = p[w] + q[w];
    let a = hw.min(w);
    let b = w.saturating_sub(hw);
    let n0 = a.min(b);
    out[..n0]
        .iter_mut()
        .zip(p[hw + 1..hw + 1 + n0].iter().zip(&q[hw + 1..hw + 1 + n0]))
        .for_each(|(o, (x, y))| *o += x + y);
    if a <= b {
        let (hi, lo) = (a + hw + 1..b + hw + 1, a - hw..b - hw);
        out[a..b]
            .iter_mut()
            .zip(p[hi.clone()].iter().zip(&q[hi]))
            .zip(p[lo.clone()].iter().zip(&q[lo]))
            .for_each(|((o, (ph, qh)), (pl, ql))| *o += (ph + qh) - (pl + ql));
    } else {
        out[b..a].iter_mut().for_each(|o| *o += total);
    }
    let s = a.max(b);
    out[s..]
        .iter_mut()
        .zip(p[s - hw..w - hw].iter().zip(&q[s - hw..w - hw]))
        .for_each(|(o, (x, y))| *o += total - (x + y));
}

/// Mean over the discretized disk of `radius` around each pixel, averaging only
/// the pixels that fall inside the map.
pub fn disk_mean<T: Scalar>(m: &Raster<T>, radius: usize) -> Result<Raster<T>> {
    if radius == 0 {
        return Err(invalid("radius", "must be >= 1"));
    }
    let (h, w) = (m.height(), m.width());
    let ds = disk_sums(&[to_f64(m)], h, w, radius);
    let out = ds.sums[0]
        .iter()
        .zip(&ds.counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    Ok(from_f64(h, w, out))
}

/// Annulus means and the number of pixels where the annulus had no in-bounds
/// pixels and the inner-disk mean was substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusMean<T> {
    pub values: Raster<T>,
    pub fallback_pixels: usize,
}

/// Inner-disk and annulus means for several channels sharing one geometry.
pub(crate) struct CenterSurround {
    pub inner: Vec<Vec<f64>>,
    pub ring: Vec<Vec<f64>>,
    pub fallback_pixels: usize,
}

pub(crate) fn center_surround(
    channels: &[Vec<f64>],
    h: usize,
    w: usize,
    r_in: usize,
    r_out: usize,
) -> CenterSurround {
    let inner = disk_sums(channels, h, w, r_in);
    let outer = disk_sums(channels, h, w, r_out);
    let mut fallback_pixels = 0;
    let ring_counts: Vec<u32> = inner
        .counts
        .iter()
        .zip(&outer.counts)
        .map(|(&i, &o)| {
            fallback_pixels += (o == i) as usize;
            o - i
        })
        .collect();
    let inner_means: Vec<Vec<f64>> = inner
        .sums
        .iter()
        .map(|s| {
            s.iter()
                .zip(&inner.counts)
                .map(|(s, &c)| s / c as f64)
                .collect()
        })
        .collect();
    let ring = outer
        .sums
        .iter()
        .zip(&inner.sums)
        .zip(&inner_means)
        .map(|((os, is), im)| {
            (0..h * w)
                .map(|i| {
                    if ring_counts[i] == 0 {
                        im[i]
                    } else {
                        (os[i] - is[i]) / ring_counts[i] as f64
                    }
                })
                .collect()
        })
        .collect();
    CenterSurround {
        inner: inner_means,
        ring,
        fallback_pixels,
    }
}

/// Mean over `r_in < |q - p| <= r_out` (in-bounds pixels only). Where that set is
/// empty the inner-disk mean is used instead and counted in `fallback_pixels`.
pub fn annulus_mean<T: Scalar>(m: &Raster<T>, r_in: usize, r_out: usize) -> Result<AnnulusMean<T>> {
    if r_in == 0 {
        return Err(invalid("r_in", "must be >= 1"));
    }
    if r_out <= r_in {
        return Err(invalid(
            "r_out",
            format!("must exceed r_in ({r_in}), got {r_out}"),
        ));
    }
    let (h, w) = (m.height(), m.width());
    let cs = center_surround(&[to_f64(m)], h, w, r_in, r_out);
    Ok(AnnulusMean {
        values: from_f64(h, w, cs.ring.into_iter().next().unwrap_or_default()),
        fallback_pixels: cs.fallback_pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(h: usize, w: usize, seed: u64) -> Raster<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(h, w, |_, _| rng.random::<f64>()).unwrap()
    }

    fn naive_box(m: &Raster<f64>, side: usize) -> Raster<f64> {
        let r = side as isize / 2;
        Raster::from_fn(m.height(), m.width(), |y, x| {
            let mut s = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    s += m.get_clamped(y as isize + dy, x as isize + dx);
                }
            }
            s / (side * side) as f64
        })
        .unwrap()
    }

    fn naive_ring(m: &Raster<f64>, r_in: Option<usize>, r_out: usize) -> Raster<f64> {
        let (h, w) = (m.height() as isize, m.width() as isize);
        Raster::from_fn(m.height(), m.width(), |y, x| {
            let (mut s, mut n) = (0.0, 0usize);
            for yy in 0..h {
                for xx in 0..w {
                    let d2 = (yy - y as isize).pow(2) + (xx - x as isize).pow(2);
                    let inside_outer = d2 <= (r_out * r_out) as isize;
                    let outside_inner = r_in.map_or(true, |r| d2 > (r * r) as isize);
                    if inside_outer && outside_inner {
                        s += m.get(yy as usize, xx as usize);
                        n += 1;
                    }
                }
            }
            s / n as f64
        })
        .unwrap()
    }

    fn assert_maps_close(a: &Raster<f64>, b: &Raster<f64>, tol: f64) {
        assert!(a.same_shape(b));
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_abs_diff_eq!(*x, *y, epsilon = tol);
        }
    }

    #[test]
    fn gaussian_constant_and_mass() {
        let c = Raster::filled(9, 7, 0.25).unwrap();
        assert_maps_close(&gaussian_blur(&c, 1.3).unwrap(), &c, 1e-12);

        let impulse =
            Raster::from_fn(41, 41, |y, x| if y == 20 && x == 20 { 1.0 } else { 0.0 }).unwrap();
        let total: f64 = gaussian_blur(&impulse, 2.0).unwrap().values().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
        assert!(gaussian_blur(&c, 0.0).is_err());
    }

    #[test]
    fn gaussian_step_midpoint() {
        // Dense-kernel oracle: direct 1-D convolution of the step with unnormalized-then-normalized taps.
        let step = Raster::from_fn(1, 32, |_, x| if x >= 16 { 1.0 } else { 0.0 }).unwrap();
        let blurred = gaussian_blur(&step, 1.0).unwrap();
        let mid = (blurred.get(0, 15) + blurred.get(0, 16)) / 2.0;
        assert_abs_diff_eq!(mid, 0.5, epsilon = 1e-3);
        let weights: Vec<f64> = (-4..=4)
            .map(|i: i32| (-(i * i) as f64 / 2.0).exp())
            .collect();
        let norm: f64 = weights.iter().sum();
        let oracle_16: f64 = weights
            .iter()
            .enumerate()
            .filter(|(k, _)| 16 + *k as i32 - 4 >= 16)
            .map(|(_, w)| w / norm)
            .sum();
        assert_abs_diff_eq!(blurred.get(0, 16), oracle_16, epsilon = 1e-12);
    }

    #[test]
    fn sobel_step_and_constant() {
        let c = Raster::filled(5, 5, 3.0).unwrap();
        assert!(sobel_magnitude(&c)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let step = Raster::from_fn(6, 8, |_, x| if x >= 4 { 1.0 } else { 0.0 }).unwrap();
        let g = sobel_magnitude(&step).unwrap();
        for y in 0..6 {
            assert_eq!(g.get(y, 3), 4.0);
            assert_eq!(g.get(y, 4), 4.0);
            assert_eq!(g.get(y, 1), 0.0);
        }
        assert!(matches!(
            sobel_magnitude(&Raster::filled(2, 5, 0.0).unwrap()),
            Err(CoreError::TooSmall { .. })
        ));
    }

    #[test]
    fn sobel_commutes_with_rotation() {
        let m = random_map(7, 11, 3);
        let a = sobel_magnitude(&m.rotate90()).unwrap();
        let b = sobel_magnitude(&m).unwrap().rotate90();
        assert_maps_close(&a, &b, 1e-12);
    }

    #[test]
    fn box_mean_matches_naive() {
        let m = random_map(16, 16, 7);
        assert_maps_close(&box_mean(&m, 5).unwrap(), &naive_box(&m, 5), 1e-6);
        assert_maps_close(&box_mean(&m, 1).unwrap(), &m, 1e-12);
        // even side behaves as the next odd side
        assert_maps_close(&box_mean(&m, 4).unwrap(), &naive_box(&m, 5), 1e-6);
        let c = Raster::filled(6, 9, -2.5).unwrap();
        assert_maps_close(&box_mean(&c, 7).unwrap(), &c, 1e-9);
    }

    #[test]
    fn disk_and_annulus_match_enumeration() {
        let m = random_map(20, 20, 11);
        assert_maps_close(&disk_mean(&m, 3).unwrap(), &naive_ring(&m, None, 3), 1e-6);
        let ann = annulus_mean(&m, 2, 5).unwrap();
        assert_eq!(ann.fallback_pixels, 0);
        assert_maps_close(&ann.values, &naive_ring(&m, Some(2), 5), 1e-6);
    }

    #[test]
    fn disk_covering_map_is_global_mean() {
        let m = random_map(6, 9, 5);
        let mean = m.values().iter().sum::<f64>() / m.len() as f64;
        for v in disk_mean(&m, 50).unwrap().values() {
            assert_abs_diff_eq!(*v, mean, epsilon = 1e-9);
        }
    }

    #[test]
    fn annulus_falls_back_when_empty() {
        let m = random_map(2, 2, 1);
        let ann = annulus_mean(&m, 3, 4).unwrap();
        assert_eq!(ann.fallback_pixels, 4);
        assert_maps_close(&ann.values, &disk_mean(&m, 3).unwrap(), 1e-12);
        assert!(annulus_mean(&m, 3, 3).is_err());
    }

    #[test]
    fn half_width_is_exact() {
        assert_eq!(disk_half_width(5, 3), 4);
        assert_eq!(disk_half_width(5, 5), 0);
        assert_eq!(disk_half_width(5, 0), 5);
        assert_eq!(disk_half_width(7, 4), 5); // 49 - 16 = 33
    }
}
