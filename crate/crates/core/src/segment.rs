//! Exact least-squares segmentation by dynamic programming.
//!
//! For every `m = 0..=m_max` the optimal `m`-change segmentation of `w`
//! with all segments at least `min_seg_len` long is found in
//! `O(m_max n^2)` time. Single-segment costs come from prefix sums of the
//! centred series, so no `n x n` cost matrix is stored.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decorrelate::DecorrelatedSeries;
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Rows shorter than this are filled sequentially.
const PARALLEL_ROW_THRESHOLD: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegConstraints {
    pub m_max: usize,
    /// Minimum segment length, at least 1.
    pub min_seg_len: usize,
}

impl SegConstraints {
    pub fn new(m_max: usize, min_seg_len: usize) -> Self {
        Self { m_max, min_seg_len }
    }

    pub fn check(&self, n_eff: usize) -> Result<()> {
        if self.min_seg_len == 0 {
            return Err(Error::Infeasible("minimum segment length must be >= 1".into()));
        }
        let needed = (self.m_max + 1)
            .checked_mul(self.min_seg_len)
            .ok_or_else(|| Error::Infeasible("constraint product overflows".into()))?;
        if needed > n_eff {
            return Err(Error::Infeasible(format!(
                "{} segments of length >= {} do not fit in {n_eff} observations",
                self.m_max + 1,
                self.min_seg_len
            )));
        }
        Ok(())
    }

    /// Largest `m_max` that fits `n_eff` observations, capped at `m_max`.
    pub fn clamped(self, n_eff: usize) -> Self {
        let fit = (n_eff / self.min_seg_len.max(1)).saturating_sub(1);
        Self {
            m_max: self.m_max.min(fit),
            ..self
        }
    }
}

/// Single-segment least-squares costs via prefix sums of `w` and `w^2`.
#[derive(Debug, Clone)]
pub struct CostMatrix<T> {
    sum: Vec<T>,
    sum_sq: Vec<T>,
    center: T,
}

impl<T: Scalar> CostMatrix<T> {
    pub fn new(w: &[T]) -> Self {
        let center = if w.is_empty() {
            T::zero()
        } else {
            let mut acc = CompensatedSum::new();
            w.iter().for_each(|v| acc.add(*v));
            acc.value() / T::from_count(w.len())
        };
        let mut sum = Vec::with_capacity(w.len() + 1);
        let mut sum_sq = Vec::with_capacity(w.len() + 1);
        let (mut s1, mut s2) = (CompensatedSum::new(), CompensatedSum::new());
        sum.push(T::zero());
        sum_sq.push(T::zero());
        for v in w {
            let c = *v - center;
            s1.add(c);
            s2.add(c * c);
            sum.push(s1.value());
            sum_sq.push(s2.value());
        }
        Self { sum, sum_sq, center }
    }

    pub fn len(&self) -> usize {
        self.sum.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cost of the half-open index range `start..end`, `start < end`.
    #[inline]
    pub(crate) fn range_cost(&self, start: usize, end: usize) -> T {
        if end - start == 1 {
            return T::zero();
        }
        let len = T::from_count(end - start);
        let s = self.sum[end] - self.sum[start];
        let s2 = self.sum_sq[end] - self.sum_sq[start];
        let c = s2 - s * s / len;
        if c > T::zero() {
            c
        } else {
            T::zero()
        }
    }

    #[inline]
    pub(crate) fn range_mean(&self, start: usize, end: usize) -> T {
        (self.sum[end] - self.sum[start]) / T::from_count(end - start) + self.center
    }

    /// Cost of the 1-based inclusive segment `i..=j`.
    pub fn cost(&self, i: usize, j: usize) -> Result<T> {
        if i == 0 || i > j || j > self.len() {
            return Err(Error::OutOfRange {
                i,
                j,
                len: self.len(),
            });
        }
        Ok(self.range_cost(i - 1, j))
    }

    /// Mean of the 1-based inclusive segment `i..=j`.
    pub fn mean(&self, i: usize, j: usize) -> Result<T> {
        if i == 0 || i > j || j > self.len() {
            return Err(Error::OutOfRange {
                i,
                j,
                len: self.len(),
            });
        }
        Ok(self.range_mean(i - 1, j))
    }
}

/// `sum (w - mean)^2` over the 1-based inclusive segment `i..=j` of `w`.
pub fn segment_cost<T: Scalar>(w: &[T], i: usize, j: usize) -> Result<T> {
    CostMatrix::new(w).cost(i, j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationFit<T> {
    pub m: usize,
    /// Last index of every segment but the final one, post-sample
    /// coordinates.
    pub t: Vec<usize>,
    /// Segment means of `w`.
    pub delta: Vec<T>,
    pub ss: T,
    pub offset: usize,
    pub n_eff: usize,
}

impl<T: Scalar> SegmentationFit<T> {
    /// Change-points counted in the residual series.
    pub fn t_residual(&self) -> Vec<usize> {
        self.t.iter().map(|t| t - self.offset).collect()
    }

    /// Segment lengths `n_k = t_{k+1} - t_k` with `t_0 = 0`, `t_{m+1} = n_eff`.
    pub fn segment_lengths(&self) -> Vec<usize> {
        let mut prev = 0;
        let mut out = Vec::with_capacity(self.m + 1);
        for t in self.t_residual().into_iter().chain([self.n_eff]) {
            out.push(t - prev);
            prev = t;
        }
        out
    }
}

/// Builds the fit for residual-coordinate change-points `t_res`.
pub fn fit_from_changepoints<T: Scalar>(
    costs: &CostMatrix<T>,
    t_res: &[usize],
    offset: usize,
) -> SegmentationFit<T> {
    let n = costs.len();
    let mut prev = 0;
    let mut delta = Vec::with_capacity(t_res.len() + 1);
    let mut ss = T::zero();
    for &end in t_res.iter().chain([&n]) {
        delta.push(costs.range_mean(prev, end));
        ss = ss + costs.range_cost(prev, end);
        prev = end;
    }
    SegmentationFit {
        m: t_res.len(),
        t: t_res.iter().map(|t| t + offset).collect(),
        delta,
        ss,
        offset,
        n_eff: n,
    }
}

/// Optimal segmentations for `m = 0..=m_max`. Ties are resolved towards
/// the leftmost last change-point, recursively.
pub fn dp_segment<T: Scalar>(
    w: &DecorrelatedSeries<T>,
    c: &SegConstraints,
) -> Result<Vec<SegmentationFit<T>>> {
    dp_segment_with_offset(&w.w, c, w.offset)
}

/// `dp_segment` on a plain slice (offset 0).
pub fn dp_segment_values<T: Scalar>(w: &[T], c: &SegConstraints) -> Result<Vec<SegmentationFit<T>>> {
    dp_segment_with_offset(w, c, 0)
}

fn dp_segment_with_offset<T: Scalar>(
    w: &[T],
    c: &SegConstraints,
    offset: usize,
) -> Result<Vec<SegmentationFit<T>>> {
    let n = w.len();
    c.check(n)?;
    let costs = CostMatrix::new(w);
    let delta_n = c.min_seg_len;
    let inf = T::infinity();
    // Candidates within rounding of the incumbent count as ties, so the
    // leftmost rule is not at the mercy of summation order.
    let tie = T::epsilon() * T::lit(64.0) * costs.range_cost(0, n);

    // best[j]: optimal cost of the prefix 0..j with the current number of
    // changes; argmin[m][j]: start of the last segment in that optimum.
    let mut best: Vec<T> = (0..=n)
        .map(|j| if j >= delta_n { costs.range_cost(0, j) } else { inf })
        .collect();
    let mut finals = vec![best[n]];
    let mut argmin: Vec<Vec<usize>> = Vec::with_capacity(c.m_max);

    for m in 1..=c.m_max {
        let lo = (m + 1) * delta_n;
        let prev = &best;
        let cell = |j: usize| -> (T, usize) {
            let mut v = inf;
            let mut at = 0;
            for i in m * delta_n..=j - delta_n {
                let cand = prev[i] + costs.range_cost(i, j);
                if cand < v - tie {
                    v = cand;
                    at = i;
                }
            }
            (v, at)
        };
        let row: Vec<(T, usize)> = if n - lo >= PARALLEL_ROW_THRESHOLD {
            (lo..=n).into_par_iter().map(cell).collect()
        } else {
            (lo..=n).map(cell).collect()
        };
        let mut next = vec![inf; n + 1];
        let mut arg = vec![0; n + 1];
        for (j, (v, at)) in (lo..=n).zip(row) {
            next[j] = v;
            arg[j] = at;
        }
        finals.push(next[n]);
        argmin.push(arg);
        best = next;
    }

    let mut fits = Vec::with_capacity(c.m_max + 1);
    for (m, &ss) in finals.iter().enumerate() {
        let mut t_res = vec![0; m];
        let mut end = n;
        for k in (1..=m).rev() {
            end = argmin[k - 1][end];
            t_res[k - 1] = end;
        }
        let mut fit = fit_from_changepoints(&costs, &t_res, offset);
        // Keep the DP value: it is the exact optimum the recursion compared.
        fit.ss = ss;
        fits.push(fit);
    }
    Ok(fits)
}
