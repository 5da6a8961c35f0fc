//! Order-statistic kernels: the median and the Qn scale estimator.
//!
//! Qn is `d * q` where `q` is the `k`-th smallest of the pairwise absolute
//! differences `{|z_i - z_j| : i < j}`, with `h = floor(len / 2) + 1` and
//! `k = h (h - 1) / 2`. The default path selects `q` in `O(n log n)` without
//! materialising the `n (n - 1) / 2` differences; the naive path enumerates
//! them and is kept as an oracle mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{total_order, Scalar};

/// Gaussian-consistency constant `1 / (sqrt(2) * Phi^{-1}(5/8))`.
pub const QN_GAUSSIAN_CONSTANT: f64 = 2.21914;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnConfig<T> {
    pub d_constant: T,
    /// Force the `O(n^2)` pairwise enumeration.
    pub use_naive: bool,
}

impl<T: Scalar> Default for QnConfig<T> {
    fn default() -> Self {
        Self {
            d_constant: T::lit(QN_GAUSSIAN_CONSTANT),
            use_naive: false,
        }
    }
}

impl<T: Scalar> QnConfig<T> {
    pub fn naive() -> Self {
        Self {
            use_naive: true,
            ..Self::default()
        }
    }

    pub fn with_constant(d_constant: T) -> Result<Self> {
        if !(d_constant > T::zero()) || !d_constant.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "Qn constant must be positive, got {d_constant}"
            )));
        }
        Ok(Self {
            d_constant,
            use_naive: false,
        })
    }
}

fn check_finite<T: Scalar>(z: &[T]) -> Result<()> {
    match z.iter().position(|v| !v.is_finite()) {
        Some(pos) => Err(Error::NonFinite(pos)),
        None => Ok(()),
    }
}

/// Median: middle order statistic for odd lengths, mean of the two central
/// ones for even lengths.
pub fn median<T: Scalar>(z: &[T]) -> Result<T> {
    if z.is_empty() {
        return Err(Error::Empty);
    }
    check_finite(z)?;
    let mut buf = z.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median of a non-empty, NaN-free buffer; reorders the buffer.
pub(crate) fn median_in_place<T: Scalar>(buf: &mut [T]) -> T {
    let len = buf.len();
    let mid = len / 2;
    let (lower, upper, _) = buf.select_nth_unstable_by(mid, total_order);
    let upper = *upper;
    if len % 2 == 1 {
        upper
    } else {
        let lower_max = lower
            .iter()
            .copied()
            .fold(T::neg_infinity(), |acc, v| if v > acc { v } else { acc });
        (lower_max + upper) / T::lit(2.0)
    }
}

/// Rank (1-based) of the pairwise difference selected by Qn.
pub fn qn_rank(len: usize) -> usize {
    let h = len / 2 + 1;
    h * (h - 1) / 2
}

/// The Qn scale estimate of `z`.
pub fn qn<T: Scalar>(z: &[T], cfg: &QnConfig<T>) -> Result<T> {
    if z.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: z.len(),
        });
    }
    check_finite(z)?;
    let q = if cfg.use_naive {
        pairwise_kth_naive(z, qn_rank(z.len()))
    } else {
        pairwise_kth_fast(z, qn_rank(z.len()))
    };
    Ok(cfg.d_constant * q)
}

/// k-th smallest (1-based) of `{|z_i - z_j| : i < j}` by full enumeration.
pub(crate) fn pairwise_kth_naive<T: Scalar>(z: &[T], k: usize) -> T {
    let mut diffs = Vec::with_capacity(z.len() * (z.len() - 1) / 2);
    for (i, &a) in z.iter().enumerate() {
        for &b in &z[i + 1..] {
            diffs.push((a - b).abs());
        }
    }
    let (_, kth, _) = diffs.select_nth_unstable_by(k - 1, total_order);
    *kth
}

/// Weighted high median: the smallest `a[i]` such that the total weight of
/// elements `<= a[i]` is strictly more than half the total weight.
fn weighted_high_median<T: Scalar>(a: &mut Vec<T>, w: &mut Vec<i64>) -> T {
    let total: i64 = w.iter().sum();
    let mut rest: i64 = 0;
    let mut scratch = Vec::with_capacity(a.len());
    loop {
        scratch.clear();
        scratch.extend_from_slice(a);
        let mid = scratch.len() / 2;
        let (_, trial, _) = scratch.select_nth_unstable_by(mid, total_order);
        let trial = *trial;

        let (mut left, mut middle) = (0i64, 0i64);
        for (&v, &wt) in a.iter().zip(w.iter()) {
            if v < trial {
                left += wt;
            } else if v == trial {
                middle += wt;
            }
        }

        let keep: fn(T, T) -> bool = if 2 * (rest + left) > total {
            |v, t| v < t
        } else if 2 * (rest + left + middle) <= total {
            rest += left + middle;
            |v, t| v > t
        } else {
            return trial;
        };

        let mut next = 0;
        for i in 0..a.len() {
            if keep(a[i], trial) {
                a[next] = a[i];
                w[next] = w[i];
                next += 1;
            }
        }
        a.truncate(next);
        w.truncate(next);
    }
}

/// k-th smallest (1-based) pairwise absolute difference in `O(n log n)`.
///
/// Works on the sorted sample `y` and the implicit matrix of differences
/// `y[i] - y[n - 1 - c]`, whose rows are sorted. Each row keeps a candidate
/// column window `[left[i], right[i]]` (1-based column counts from the
/// right) that is narrowed around a weighted median of the row midpoints
/// until the remaining candidates can be selected directly. Counting starts
/// at `n (n + 1) / 2` because the non-positive part of the matrix, diagonal
/// included, precedes every pairwise difference.
pub(crate) fn pairwise_kth_fast<T: Scalar>(z: &[T], k: usize) -> T {
    let n = z.len();
    let mut y = z.to_vec();
    y.sort_unstable_by(total_order);

    let ni = n as i64;
    let mut left: Vec<i64> = (0..ni).map(|i| ni - i + 1).collect();
    let mut right: Vec<i64> = vec![ni; n];
    let mut p_cnt = vec![0i64; n];
    let mut q_cnt = vec![0i64; n];
    let mut work = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);

    let mut n_left = ni * (ni + 1) / 2;
    let mut n_right = ni * ni;
    let k_new = k as i64 + n_left;

    // Value of matrix cell (row i, column c) with c in 1..=n.
    let cell = |y: &[T], i: usize, c: i64| y[i] - y[n - c as usize];

    while n_right - n_left > ni {
        work.clear();
        weight.clear();
        for i in 1..n {
            if left[i] <= right[i] {
                let wt = right[i] - left[i] + 1;
                let col = left[i] + wt / 2;
                work.push(cell(&y, i, col));
                weight.push(wt);
            }
        }
        let trial = weighted_high_median(&mut work, &mut weight);

        // P[i]: number of cells in row i strictly below `trial`.
        let mut j: i64 = 0;
        for i in (0..n).rev() {
            while j < ni && cell(&y, i, j + 1) < trial {
                j += 1;
            }
            p_cnt[i] = j;
        }
        // Q[i] - 1: number of cells in row i at most `trial`.
        let mut j: i64 = ni + 1;
        for i in 0..n {
            while j >= 2 && cell(&y, i, j - 1) > trial {
                j -= 1;
            }
            q_cnt[i] = j;
        }

        let sum_p: i64 = p_cnt.iter().sum();
        let sum_q: i64 = q_cnt.iter().map(|q| q - 1).sum();
        if k_new <= sum_p {
            right.copy_from_slice(&p_cnt);
            n_right = sum_p;
        } else if k_new > sum_q {
            left.copy_from_slice(&q_cnt);
            n_left = sum_q;
        } else {
            return trial;
        }
    }

    let mut rest = Vec::with_capacity((n_right - n_left).max(0) as usize);
    for i in 1..n {
        let mut c = left[i];
        while c <= right[i] {
            rest.push(cell(&y, i, c));
            c += 1;
        }
    }
    let idx = (k_new - n_left - 1) as usize;
    let (_, kth, _) = rest.select_nth_unstable_by(idx, total_order);
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_examples() {
        assert_eq!(median(&[1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median(&[5.0f32]).unwrap(), 5.0);
        assert_eq!(median::<f64>(&[]), Err(Error::Empty));
        assert_eq!(median(&[1.0, f64::INFINITY]), Err(Error::NonFinite(1)));
    }

    #[test]
    fn qn_examples() {
        let cfg = QnConfig::<f64>::default();
        // pairwise diffs (1,2,3,4,6,7), h = 3, k = 3
        let v = qn(&[1.0, 2.0, 4.0, 8.0], &cfg).unwrap();
        assert!((v - 6.65742).abs() < 1e-12);
        assert_eq!(qn(&[3.0; 9], &cfg).unwrap(), 0.0);
        let d = QnConfig::with_constant(1.5).unwrap();
        assert_eq!(qn(&[0.0, 1.0], &d).unwrap(), 1.5);
        assert_eq!(
            qn(&[1.0], &cfg),
            Err(Error::TooShort { needed: 2, got: 1 })
        );
        assert!(QnConfig::with_constant(0.0).is_err());
    }

    #[test]
    fn rank_matches_definition() {
        assert_eq!(qn_rank(2), 1);
        assert_eq!(qn_rank(4), 3);
        assert_eq!(qn_rank(5), 3);
        assert_eq!(qn_rank(10), 15);
    }

    #[test]
    fn fast_selection_handles_heavy_ties() {
        let z: Vec<f64> = (0..57).map(|i| ((i * 7) % 4) as f64).collect();
        for k in 1..=(57 * 56 / 2) {
            assert_eq!(pairwise_kth_fast(&z, k), pairwise_kth_naive(&z, k), "k={k}");
        }
    }

    #[test]
    fn fast_selection_all_ranks_small() {
        let z = [0.3, -1.2, 4.4, 4.4, 0.0, 2.5, -0.7, 9.1];
        for k in 1..=28 {
            assert_eq!(pairwise_kth_fast(&z, k), pairwise_kth_naive(&z, k));
        }
    }

    proptest! {
        #[test]
        fn qn_location_invariant_scale_equivariant(
            z in prop::collection::vec(-100i32..100, 2..60),
            shift in -50i32..50,
            scale in -8i32..8,
        ) {
            // Integer-valued data keeps shifted and scaled differences exact.
            let cfg = QnConfig::<f64>::default();
            let z: Vec<f64> = z.into_iter().map(f64::from).collect();
            let base = qn(&z, &cfg).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + f64::from(shift)).collect();
            prop_assert_eq!(qn(&shifted, &cfg).unwrap(), base);
            let a = f64::from(scale);
            let scaled: Vec<f64> = z.iter().map(|v| v * a).collect();
            prop_assert!((qn(&scaled, &cfg).unwrap() - a.abs() * base).abs() <= 1e-9 * (1.0 + base));
        }

        #[test]
        fn median_permutation_invariant_and_bounded(
            z in prop::collection::vec(-1e6f64..1e6, 1..80),
            rot in 0usize..80,
        ) {
            let m = median(&z).unwrap();
            let mut r = z.clone();
            let len = r.len();
            r.rotate_left(rot % len);
            r.reverse();
            prop_assert_eq!(median(&r).unwrap(), m);
            let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= m && m <= hi);
        }
    }
}
