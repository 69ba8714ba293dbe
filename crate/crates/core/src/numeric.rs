//! Summation helpers.
//!
//! Every mean in the crate goes through [`pairwise_sum`], so results do not
//! depend on how a reduction is scheduled and rounding error grows like
//! `O(log n)` instead of `O(n)`.

const BLOCK: usize = 64;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f` mapped over `values`, without materialising the map
/// for small inputs.
pub fn pairwise_sum_by<T>(values: &[T], f: &impl Fn(&T) -> f64) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().map(f).sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

/// Arithmetic mean. Returns NaN for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Mean of `f` over `values`.
pub fn mean_by<T>(values: &[T], f: impl Fn(&T) -> f64) -> f64 {
    pairwise_sum_by(values, &f) / values.len() as f64
}

/// Unbiased sample variance (divisor `n - 1`).
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    pairwise_sum_by(values, &|v| (v - m) * (v - m)) / (values.len() as f64 - 1.0)
}

/// Median of a slice (average of the two middle order statistics for even
/// length). NaN-free input is assumed.
pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
