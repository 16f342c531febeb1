//! Order statistics.

use crate::error::{invalid, Result};
use crate::raster::Raster;
use crate::scalar::{total_cmp, Scalar};

/// Linear-interpolation percentile at rank `q / 100 * (n - 1)` of the sorted values.
pub fn percentile<T: Scalar>(m: &Raster<T>, q: f64) -> Result<T> {
    Ok(percentiles_of(m.values(), &[q])?[0])
}

/// Several percentiles of a non-empty slice, each in O(n) expected time.
pub fn percentiles_of<T: Scalar>(values: &[T], qs: &[f64]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(invalid("values", "percentile of an empty set"));
    }
    if let Some(q) = qs.iter().find(|q| !(0.0..=100.0).contains(*q)) {
        return Err(invalid("q", format!("must lie in [0, 100], got {q}")));
    }
    let mut scratch = values.to_vec();
    let last = scratch.len() - 1;
    Ok(qs
        .iter()
        .map(|&q| {
            let rank = q / 100.0 * last as f64;
            let lo = rank.floor() as usize;
            let frac = rank - lo as f64;
            let (_, &mut v_lo, upper) = scratch.select_nth_unstable_by(lo, total_cmp);
            if lo == last || frac == 0.0 {
                return v_lo;
            }
            let v_hi = upper.iter().copied().fold(T::infinity(), T::min);
            v_lo + (v_hi - v_lo) * T::lit(frac)
        })
        .collect())
}
