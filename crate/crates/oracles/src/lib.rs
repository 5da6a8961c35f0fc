//! Slow, definitional reference implementations used as test oracles.
//!
//! Nothing here shares code with the library under test: segment costs are
//! two-pass sums, segmentations are enumerated, log-gamma values are exact
//! log-sums, and scale estimates sort every pairwise difference.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    Infeasible,
    TooLarge(u128),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Infeasible => write!(f, "no segmentation satisfies the constraints"),
            OracleError::TooLarge(c) => write!(f, "{c} candidate segmentations exceed the budget"),
        }
    }
}

impl std::error::Error for OracleError {}

/// Enumeration budget of [`brute_segment`].
pub const MAX_CANDIDATES: u128 = 1_000_000;

/// Least-squares cost of a segment by explicit mean.
pub fn direct_cost(seg: &[f64]) -> f64 {
    let mean = seg.iter().sum::<f64>() / seg.len() as f64;
    seg.iter().map(|v| (v - mean) * (v - mean)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteFit {
    /// Last index (1-based) of each segment but the final one.
    pub t: Vec<usize>,
    pub ss: f64,
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exhaustive minimum of the segmentation cost over every `m`-change
/// segmentation of `w` whose segments have at least `min_len` points.
/// Among fits within `tie_tol` of the optimum the one whose last
/// change-point is smallest wins, then the one before it, and so on.
pub fn brute_segment(w: &[f64], m: usize, min_len: usize, tie_tol: f64) -> Result<BruteFit, OracleError> {
    let n = w.len();
    if min_len == 0 || (m + 1) * min_len > n {
        return Err(OracleError::Infeasible);
    }
    let candidates = binomial(n.saturating_sub(1) as u128, m as u128);
    if candidates > MAX_CANDIDATES {
        return Err(OracleError::TooLarge(candidates));
    }

    let mut all: Vec<BruteFit> = Vec::new();
    let mut t = Vec::with_capacity(m);
    enumerate(w, m, min_len, 0, &mut t, &mut all);
    let best = all.iter().map(|f| f.ss).fold(f64::INFINITY, f64::min);
    all.into_iter()
        .filter(|f| f.ss <= best + tie_tol)
        .min_by(|a, b| a.t.iter().rev().cmp(b.t.iter().rev()))
        .ok_or(OracleError::Infeasible)
}

fn enumerate(
    w: &[f64],
    m: usize,
    min_len: usize,
    start: usize,
    t: &mut Vec<usize>,
    out: &mut Vec<BruteFit>,
) {
    let n = w.len();
    if t.len() == m {
        if n - start < min_len {
            return;
        }
        let mut bounds = vec![0];
        bounds.extend(t.iter().copied());
        bounds.push(n);
        let ss = bounds.windows(2).map(|b| direct_cost(&w[b[0]..b[1]])).sum();
        out.push(BruteFit { t: t.clone(), ss });
        return;
    }
    for end in start + min_len..n {
        t.push(end);
        enumerate(w, m, min_len, end, t, out);
        t.pop();
    }
}

/// `k`-th smallest pairwise absolute difference (1-based `k`) by sorting
/// all of them.
pub fn kth_pairwise(z: &[f64], k: usize) -> f64 {
    let mut d = Vec::with_capacity(z.len() * z.len().saturating_sub(1) / 2);
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            d.push((z[i] - z[j]).abs());
        }
    }
    d.sort_by(f64::total_cmp);
    d[k - 1]
}

/// Qn scale: `d` times the `h(h-1)/2`-th smallest pairwise distance,
/// `h = floor(n/2) + 1`.
pub fn naive_qn(z: &[f64], d: f64) -> f64 {
    let h = z.len() / 2 + 1;
    d * kth_pairwise(z, h * (h - 1) / 2)
}

/// Lag-1 and lag-2 autocorrelations of the differences of an AR(1)
/// process with coefficient `phi`: an ARMA(1,1) with MA coefficient -1.
pub fn diffar1_rho(phi: f64) -> (f64, f64) {
    let r1 = -(1.0 - phi) / 2.0;
    (r1, phi * r1)
}

/// Exact `ln Gamma(x)` for positive integers and half-integers, as a sum
/// of logarithms (`Gamma(1/2) = sqrt(pi)`).
pub fn ln_gamma_exact(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!(
        (2.0 * x - twice).abs() < 1e-12 && twice >= 1.0,
        "ln_gamma_exact needs a positive (half-)integer, got {x}"
    );
    let twice = twice as u64;
    let (mut acc, mut comp) = (0.0f64, 0.0f64);
    let mut add = |v: f64| {
        // Kahan summation keeps large sums exact to a few ulps.
        let y = v - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    };
    if twice.is_multiple_of(2) {
        for k in 2..twice / 2 {
            add((k as f64).ln());
        }
    } else {
        add(0.5 * std::f64::consts::PI.ln());
        for k in 1..=twice / 2 {
            add((k as f64 - 0.5).ln());
        }
    }
    acc
}

/// Modified BIC from its ingredients, with exact log-gamma.
pub fn mbic_oracle(ss: f64, segment_lengths: &[usize], n: usize) -> f64 {
    let m = segment_lengths.len() - 1;
    let half = (n as f64 - m as f64 + 1.0) / 2.0;
    -half * ss.ln() + ln_gamma_exact(half)
        - 0.5 * segment_lengths.iter().map(|&l| (l as f64).ln()).sum::<f64>()
        - m as f64 * (n as f64).ln()
}

/// Segmentation criterion written on the observations: the squared
/// one-step prediction errors `y_i - sum_r phi_r y_{i-r} - delta_k`,
/// summed over post-sample points `first..` (0-based into `y`), with the
/// `k`-th level used between consecutive change-points `t` (counted from
/// `first`).
pub fn ss_on_observations(y: &[f64], first: usize, phi: &[f64], delta: &[f64], t: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in first..y.len() {
        let pos = i - first + 1;
        let k = t.iter().filter(|&&tk| pos > tk).count();
        let mut pred = delta[k];
        for (r, c) in phi.iter().enumerate() {
            pred += c * y[i - r - 1];
        }
        total += (y[i] - pred) * (y[i] - pred);
    }
    total
}
