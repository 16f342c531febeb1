//! Local Shannon entropy of a quantized map over disk neighbourhoods.
//!
//! The map is clipped to a percentile range, rescaled into `bins` integer
//! levels, and a per-row sliding histogram is updated at the disk perimeter as
//! the window moves, so each step costs O(radius) instead of O(radius^2).

use crate::error::{invalid, Result};
use crate::filter::disk_half_width;
use crate::raster::Raster;
use crate::scalar::Scalar;
use crate::stats::percentiles_of;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyParams {
    pub radius: usize,
    pub bins: usize,
    /// Lower quantization clip, as a percentile of the whole map.
    pub clip_lo: f64,
    /// Upper quantization clip, as a percentile of the whole map.
    pub clip_hi: f64,
}

impl EntropyParams {
    pub fn new(radius: usize) -> Self {
        Self {
            radius,
            bins: 256,
            clip_lo: 5.0,
            clip_hi: 95.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(invalid("radius", "must be >= 1"));
        }
        if !(2..=u16::MAX as usize + 1).contains(&self.bins) {
            return Err(invalid(
                "bins",
                format!("must lie in [2, 65536], got {}", self.bins),
            ));
        }
        if self.clip_lo >= self.clip_hi {
            return Err(invalid("clip_lo", "must be below clip_hi"));
        }
        Ok(())
    }
}

/// Clips `m` to its `(clip_lo, clip_hi)` percentiles and rescales linearly onto
/// `0..bins`. A degenerate clip range quantizes everything to bin 0.
pub fn quantize<T: Scalar>(
    m: &Raster<T>,
    bins: usize,
    clip_lo: f64,
    clip_hi: f64,
) -> Result<Vec<u16>> {
    let p = percentiles_of(m.values(), &[clip_lo, clip_hi])?;
    let (lo, hi) = (p[0].as_f64(), p[1].as_f64());
    let span = hi - lo;
    let top = (bins - 1) as f64;
    Ok(m.values()
        .iter()
        .map(|v| {
            if span <= 0.0 {
                0
            } else {
                let t = (v.as_f64().clamp(lo, hi) - lo) / span;
                (t * top).round() as u16
            }
        })
        .collect())
}

/// Per-pixel `-sum q_v ln q_v` over the in-bounds disk of `params.radius`.
pub fn local_entropy<T: Scalar>(m: &Raster<T>, params: &EntropyParams) -> Result<Raster<T>> {
    params.validate()?;
    let levels = quantize(m, params.bins, params.clip_lo, params.clip_hi)?;
    let (h, w) = (m.height(), m.width());
    let out = sliding_entropy(&levels, h, w, params.radius, params.bins);
    Ok(Raster::from_vec_unchecked(
        h,
        w,
        out.into_iter().map(T::lit).collect(),
    ))
}

fn sliding_entropy(levels: &[u16], h: usize, w: usize, radius: usize, bins: usize) -> Vec<f64> {
    let half: Vec<usize> = (0..=radius).map(|dy| disk_half_width(radius, dy)).collect();
    let max_count = (2 * radius + 1).pow(2);
    // inc[c] = (c + 1) ln (c + 1) - c ln c, the change in sum c ln c when a bin grows past c.
    let xlogx = |c: usize| {
        if c == 0 {
            0.0
        } else {
            c as f64 * (c as f64).ln()
        }
    };
    let inc: Vec<f64> = (0..=max_count).map(|c| xlogx(c + 1) - xlogx(c)).collect();
    let ln: Vec<f64> = (0..=max_count)
        .map(|c| if c == 0 { 0.0 } else { (c as f64).ln() })
        .collect();

    let mut out = vec![0.0; h * w];
    let mut hist = vec![0u32; bins];
    // x range where no row segment touches either border.
    let interior = radius + 1..w.saturating_sub(radius).max(radius + 1);
    for y in 0..h {
        let rows: Vec<(&[u16], usize)> = (y.saturating_sub(radius)..=(y + radius).min(h - 1))
            .map(|yy| (&levels[yy * w..(yy + 1) * w], half[y.abs_diff(yy)]))
            .collect();
        hist.iter_mut().for_each(|c| *c = 0);
        let (mut n, mut distinct) = (0usize, 0usize);
        // Independent accumulators for additions and removals shorten the
        // floating-point dependency chain.
        let (mut s_add, mut s_rem) = (0.0, 0.0);
        for &(row, hw) in &rows {
            for &v in &row[..=hw.min(w - 1)] {
                let c = &mut hist[v as usize];
                distinct += (*c == 0) as usize;
                s_add += inc[*c as usize];
                *c += 1;
                n += 1;
            }
        }
        let out_row = &mut out[y * w..(y + 1) * w];
        for x in 0..w {
            if x > 0 {
                if interior.contains(&x) {
                    for &(row, hw) in &rows {
                        let (old, new) = (row[x - 1 - hw] as usize, row[x + hw] as usize);
                        if old != new {
                            hist[old] -= 1;
                            s_rem += inc[hist[old] as usize];
                            distinct -= (hist[old] == 0) as usize;
                            distinct += (hist[new] == 0) as usize;
                            s_add += inc[hist[new] as usize];
                            hist[new] += 1;
                        }
                    }
                } else {
                    for &(row, hw) in &rows {
                        if x > hw {
                            let c = &mut hist[row[x - 1 - hw] as usize];
                            *c -= 1;
                            s_rem += inc[*c as usize];
                            distinct -= (*c == 0) as usize;
                            n -= 1;
                        }
                        if x + hw < w {
                            let c = &mut hist[row[x + hw] as usize];
                            distinct += (*c == 0) as usize;
                            s_add += inc[*c as usize];
                            *c += 1;
                            n += 1;
                        }
                    }
                }
            }
            // A single occupied bin has exactly zero entropy.
            out_row[x] = if distinct <= 1 {
                0.0
            } else {
                (ln[n] - (s_add - s_rem) / n as f64).max(0.0)
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(levels: &[u16], h: usize, w: usize, radius: usize, bins: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(h * w);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut hist = vec![0usize; bins];
                let mut n = 0;
                for yy in 0..h as i64 {
                    for xx in 0..w as i64 {
                        if (yy - y).pow(2) + (xx - x).pow(2) <= (radius * radius) as i64 {
                            hist[levels[(yy * w as i64 + xx) as usize] as usize] += 1;
                            n += 1;
                        }
                    }
                }
                let e: f64 = hist
                    .iter()
                    .filter(|&&c| c > 0)
                    .map(|&c| {
                        let q = c as f64 / n as f64;
                        -q * q.ln()
                    })
                    .sum();
                out.push(e);
            }
        }
        out
    }

    #[test]
    fn constant_map_has_zero_entropy() {
        let m = Raster::filled(8, 8, 0.3).unwrap();
        let e = local_entropy(&m, &EntropyParams::new(2)).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_histogram_reaches_ln_bins() {
        // Four distinct levels; a radius-2 disk covers the whole 2x2 map from every pixel.
        let m = Raster::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let params = EntropyParams {
            radius: 2,
            bins: 4,
            clip_lo: 0.0,
            clip_hi: 100.0,
        };
        let e = local_entropy(&m, &params).unwrap();
        for v in e.values() {
            assert_abs_diff_eq!(*v, 4f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_naive_histograms() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = Raster::from_fn(24, 24, |_, _| rng.random::<f64>()).unwrap();
        let params = EntropyParams::new(3);
        let fast = local_entropy(&m, &params).unwrap();
        let levels = quantize(&m, 256, 5.0, 95.0).unwrap();
        let slow = naive(&levels, 24, 24, 3, 256);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
        }
        let cap = 256f64.ln();
        assert!(fast.values().iter().all(|&v| (0.0..=cap).contains(&v)));
    }

    #[test]
    fn quantization_clips_to_range() {
        let ramp = Raster::from_fn(1, 101, |_, x| x as f64).unwrap();
        let q = quantize(&ramp, 256, 5.0, 95.0).unwrap();
        assert_eq!(q[0], 0);
        assert_eq!(q[5], 0);
        assert_eq!(q[95], 255);
        assert_eq!(q[100], 255);
        assert_eq!(q[50], 128); // (45 / 90) * 255 = 127.5 rounds up
    }
}
