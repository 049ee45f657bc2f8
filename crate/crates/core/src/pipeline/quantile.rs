use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::normal::{norm_cdf, norm_ppf};
use crate::real::Real;

/// CDF values are clipped into `[CDF_CLIP, 1 - CDF_CLIP]` before the normal
/// quantile is taken, keeping outputs finite for the most extreme ranks.
pub const CDF_CLIP: f64 = 1e-7;

/// Monotone map from one data dimension onto standard-normal quantiles.
///
/// The table pairs sorted distinct training values with their mid-rank
/// empirical CDF: a value appearing `c` times with `r` strictly smaller
/// samples gets `p = (r + c/2) / n` (the averaged rank of its tied group).
/// Transforming interpolates linearly between knots and clamps beyond them,
/// then applies the normal quantile function; inversion applies the normal
/// CDF and interpolates the table the other way. Between the extreme training
/// values the map is strictly increasing, so transform/inverse round-trips
/// are exact up to interpolation arithmetic.
///
/// When a dimension has more distinct values than the knot budget, knots are
/// taken at evenly spaced ranks of the distinct-value list, always keeping
/// both extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap<T> {
    values: Vec<T>,
    cdf: Vec<T>,
}

impl<T: Real> QuantileMap<T> {
    /// Fits the map to a dimension's training values.
    ///
    /// `max_knots` bounds the table size; callers pass `min(1000, n_rows)`.
    pub fn fit(samples: &[T], max_knots: usize) -> Result<Self, PipelineError> {
        if samples.is_empty() {
            return Err(PipelineError::EmptyDataset);
        }
        let max_knots = max_knots.max(1);
        let mut sorted: Vec<T> = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN training values"));
        let n = T::from_usize(sorted.len()).expect("row count fits the scalar");

        // Distinct values with mid-rank CDF.
        let mut distinct: Vec<(T, T)> = Vec::new();
        let mut start = 0usize;
        while start < sorted.len() {
            let value = sorted[start];
            let mut end = start + 1;
            while end < sorted.len() && sorted[end] == value {
                end += 1;
            }
            let rank = T::from_usize(start).expect("rank fits the scalar");
            let count = T::from_usize(end - start).expect("count fits the scalar");
            distinct.push((value, (rank + count / T::c(2.0)) / n));
            start = end;
        }

        let (values, cdf) = if distinct.len() <= max_knots {
            distinct.into_iter().unzip()
        } else {
            // Evenly spaced ranks over the distinct list; the stride is >= 1
            // so indices stay strictly increasing, and both ends are kept.
            let last = distinct.len() - 1;
            let mut values = Vec::with_capacity(max_knots);
            let mut cdf = Vec::with_capacity(max_knots);
            for j in 0..max_knots {
                let idx = if max_knots == 1 {
                    0
                } else {
                    ((j as f64) * (last as f64) / ((max_knots - 1) as f64)).round() as usize
                };
                let (v, p) = distinct[idx];
                values.push(v);
                cdf.push(p);
            }
            (values, cdf)
        };
        Ok(Self { values, cdf })
    }

    pub fn knot_count(&self) -> usize {
        self.values.len()
    }

    pub fn knots(&self) -> (&[T], &[T]) {
        (&self.values, &self.cdf)
    }

    /// Empirical CDF of `x` by interpolation, clamped at the table ends.
    pub fn cdf_of(&self, x: T) -> T {
        interpolate(&self.values, &self.cdf, x)
    }

    /// Maps a raw value onto its normal quantile.
    pub fn transform(&self, x: T) -> T {
        let p = self.cdf_of(x);
        let lo = T::c(CDF_CLIP);
        let hi = T::one() - T::c(CDF_CLIP);
        norm_ppf(p.max(lo).min(hi))
    }

    /// Maps a normal quantile back onto the data scale.
    pub fn inverse(&self, z: T) -> T {
        let p = norm_cdf(z);
        interpolate(&self.cdf, &self.values, p)
    }

    /// Monotonicity and shape checks used when loading untrusted documents.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.values.is_empty() || self.values.len() != self.cdf.len() {
            return Err(PipelineError::InvalidDocument(
                "quantile table is empty or ragged".into(),
            ));
        }
        for w in self.values.windows(2) {
            if !(w[0] < w[1]) {
                return Err(PipelineError::InvalidDocument(
                    "quantile knot values are not strictly increasing".into(),
                ));
            }
        }
        for w in self.cdf.windows(2) {
            if !(w[0] < w[1]) {
                return Err(PipelineError::InvalidDocument(
                    "quantile knot CDF values are not strictly increasing".into(),
                ));
            }
        }
        for &p in &self.cdf {
            if !(p > T::zero() && p < T::one()) {
                return Err(PipelineError::InvalidDocument(
                    "quantile knot CDF values must lie in (0, 1)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear interpolation of `x` through knots `(xs[i], ys[i])`,
/// clamped to the end values outside the knot range.
fn interpolate<T: Real>(xs: &[T], ys: &[T], x: T) -> T {
    debug_assert_eq!(xs.len(), ys.len());
    debug_assert!(!xs.is_empty());
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    // partition_point: first knot with value > x; x is strictly inside the
    // range here so 1 <= hi <= last.
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    if xs[hi] == xs[lo] {
        return ys[lo];
    }
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}
