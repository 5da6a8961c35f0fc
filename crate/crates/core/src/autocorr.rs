//! Robust estimation of the noise autocorrelation and AR coefficients when
//! the mean has jumps.
//!
//! Jumps in the mean look like isolated outliers once the series is
//! differenced, so everything here is built on medians and Qn rather than
//! on moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Lu, Square};
use crate::robust_scale::{median_in_place, qn, QnConfig};
use crate::scalar::Scalar;
use crate::series::RealSeries;
use crate::sim::rng_for;

/// `Phi^{-1}(3/4)`, the upper quartile of the standard normal.
pub const NORMAL_Q3: f64 = 0.674_489_750_196_081_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMethod {
    /// Ratio of squared medians of lag-2 and lag-1 absolute differences.
    MedianDiff,
    MaGenton,
    /// Median-difference estimate inverted for Cauchy innovations.
    CauchyMedianDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate<T> {
    pub value: T,
    pub method: RhoMethod,
    pub n_used: usize,
}

fn median_abs_lag<T: Scalar>(v: &[T], lag: usize) -> T {
    let mut buf: Vec<T> = v.windows(lag + 1).map(|w| (w[lag] - w[0]).abs()).collect();
    median_in_place(&mut buf)
}

/// Median-difference estimate of the lag-1 autocorrelation, over every
/// value of `y` including pre-sample ones.
pub fn rho_tilde<T: Scalar>(y: &RealSeries<T>) -> Result<RhoEstimate<T>> {
    let v = y.values();
    if v.len() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: v.len(),
        });
    }
    let lag1 = median_abs_lag(v, 1);
    if lag1 == T::zero() {
        return Err(Error::DegenerateSeries("median of lag-1 differences is zero"));
    }
    let lag2 = median_abs_lag(v, 2);
    let ratio = lag2 / lag1;
    Ok(RhoEstimate {
        value: ratio * ratio - T::one(),
        method: RhoMethod::MedianDiff,
        n_used: v.len(),
    })
}

/// Maps a median-difference estimate to the Cauchy-innovation scale.
pub fn cauchy_transform<T: Scalar>(rho_tilde: T) -> Result<T> {
    let one = T::one();
    if rho_tilde >= T::zero() {
        Ok((one + rho_tilde).sqrt() - one)
    } else if rho_tilde >= -one {
        Ok(-(one - (one + rho_tilde).sqrt()).sqrt())
    } else {
        Err(Error::DomainError(rho_tilde.as_f64()))
    }
}

pub fn rho_cauchy<T: Scalar>(y: &RealSeries<T>) -> Result<RhoEstimate<T>> {
    let base = rho_tilde(y)?;
    Ok(RhoEstimate {
        value: cauchy_transform(base.value)?,
        method: RhoMethod::CauchyMedianDiff,
        n_used: base.n_used,
    })
}

/// Ma–Genton autocorrelation of `x` at lag `h` from Qn of the lagged sums
/// and differences.
pub fn rho_ma_genton<T: Scalar>(x: &[T], h: usize, cfg: &QnConfig<T>) -> Result<RhoEstimate<T>> {
    if h == 0 {
        return Ok(RhoEstimate {
            value: T::one(),
            method: RhoMethod::MaGenton,
            n_used: x.len(),
        });
    }
    if x.len() < h + 2 {
        return Err(Error::TooShort {
            needed: h + 2,
            got: x.len(),
        });
    }
    let plus: Vec<T> = x.iter().zip(&x[h..]).map(|(a, b)| *b + *a).collect();
    let minus: Vec<T> = x.iter().zip(&x[h..]).map(|(a, b)| *b - *a).collect();
    let qp = qn(&plus, cfg)?;
    let qm = qn(&minus, cfg)?;
    let (qp2, qm2) = (qp * qp, qm * qm);
    let denom = qp2 + qm2;
    if denom == T::zero() {
        return Err(Error::DegenerateSeries("Qn of lagged sums and differences are both zero"));
    }
    Ok(RhoEstimate {
        value: (qp2 - qm2) / denom,
        method: RhoMethod::MaGenton,
        n_used: x.len(),
    })
}

/// Robust autocorrelations at lags `1..=max_lag` of the differenced series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrVector<T> {
    /// `rho[h - 1]` is the lag-`h` autocorrelation.
    pub rho: Vec<T>,
}

impl<T: Scalar> AutocorrVector<T> {
    pub fn new(rho: Vec<T>) -> Self {
        Self { rho }
    }

    pub fn max_lag(&self) -> usize {
        self.rho.len()
    }

    /// Autocorrelation at any integer lag, using `rho(0) = 1` and symmetry.
    pub fn at(&self, lag: isize) -> T {
        match lag.unsigned_abs() {
            0 => T::one(),
            h => self.rho[h - 1],
        }
    }
}

pub fn difference<T: Scalar>(v: &[T]) -> Vec<T> {
    v.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Differences `y` and applies the Ma–Genton estimator at each lag.
pub fn autocorr_vector<T: Scalar>(
    y: &RealSeries<T>,
    max_lag: usize,
    cfg: &QnConfig<T>,
) -> Result<AutocorrVector<T>> {
    let v = y.values();
    if v.len() < max_lag + 3 {
        return Err(Error::TooShort {
            needed: max_lag + 3,
            got: v.len(),
        });
    }
    let x = difference(v);
    let rho = (1..=max_lag)
        .map(|h| rho_ma_genton(&x, h, cfg).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(AutocorrVector { rho })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate<T> {
    pub p: usize,
    pub phi: Vec<T>,
    pub regularizer_lambda: T,
    /// 1-norm condition number of the matrix actually solved.
    pub condition_estimate: T,
}

/// `R_p = (rho(j - i - 1))_{1 <= i, j <= p}` and the right-hand side
/// `(rho(2), ..., rho(p + 1))`.
fn yule_walker_system<T: Scalar>(rho: &AutocorrVector<T>, p: usize) -> (Square<T>, Vec<T>) {
    let mut r = Square::zeros(p);
    for i in 0..p {
        for j in 0..p {
            r.set(i, j, rho.at(j as isize - i as isize - 1));
        }
    }
    let rhs = (2..=p + 1).map(|h| rho.at(h as isize)).collect();
    (r, rhs)
}

/// Generalised (one MA term) Yule–Walker estimate of the AR coefficients
/// from the autocorrelations of the differenced series. With `lambda > 0`
/// the ridge form `(R'R + lambda I)^{-1} R' rho` is solved instead.
pub fn phi_hat<T: Scalar>(rho: &AutocorrVector<T>, p: usize, lambda: T) -> Result<PhiEstimate<T>> {
    if rho.max_lag() < p + 1 && p > 0 {
        return Err(Error::TooShort {
            needed: p + 1,
            got: rho.max_lag(),
        });
    }
    if lambda < T::zero() || !lambda.is_finite() {
        return Err(Error::InvalidSpec(format!("regulariser must be >= 0, got {lambda}")));
    }
    if p == 0 {
        return Ok(PhiEstimate {
            p,
            phi: Vec::new(),
            regularizer_lambda: lambda,
            condition_estimate: T::one(),
        });
    }
    let (r, rhs) = yule_walker_system(rho, p);
    let (a, b) = if lambda == T::zero() {
        (r, rhs)
    } else {
        let mut a = r.transpose_mul_self();
        for i in 0..p {
            a.set(i, i, a.get(i, i) + lambda);
        }
        let b = r.transpose_mul_vec(&rhs);
        (a, b)
    };
    let lu = Lu::factor(&a)?;
    Ok(PhiEstimate {
        p,
        phi: lu.solve(&b),
        regularizer_lambda: lambda,
        condition_estimate: lu.condition(&a),
    })
}

/// `phi_hat` with `lambda = 0`, retried with `lambda = 1 / n` when the
/// unregularised system is singular.
pub fn phi_hat_auto<T: Scalar>(rho: &AutocorrVector<T>, p: usize, n: usize) -> Result<PhiEstimate<T>> {
    match phi_hat(rho, p, T::zero()) {
        Err(Error::SingularMatrix(_)) => phi_hat(rho, p, T::one() / T::from_count(n.max(1))),
        other => other,
    }
}

/// Jacobian `M` (p x (p+1)) linking autocorrelation errors to coefficient
/// errors: `M_ij = phi_{i-j+1} 1{i>=j} + phi_{i+j+1} 1{i+j<=p-1} - 1{j=i+1}`.
pub fn jacobian<T: Scalar>(phi: &[T]) -> Vec<Vec<T>> {
    let p = phi.len();
    let coef = |k: usize| if (1..=p).contains(&k) { phi[k - 1] } else { T::zero() };
    (1..=p)
        .map(|i| {
            (1..=p + 1)
                .map(|j| {
                    let mut v = T::zero();
                    if i >= j {
                        v = v + coef(i - j + 1);
                    }
                    if i + j < p {
                        v = v + coef(i + j + 1);
                    }
                    if j == i + 1 {
                        v = v - T::one();
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Influence kernel of the median-difference estimator for a Gaussian
/// AR(1) with parameters `(rho_star, sigma_star)`.
pub fn psi<T: Scalar>(x0: T, x1: T, x2: T, rho_star: T, sigma_star: T) -> T {
    let q = T::lit(NORMAL_Q3);
    let two = T::lit(2.0);
    let density = (-(q * q) / two).exp() / T::lit(std::f64::consts::TAU).sqrt();
    let coef = -(T::one() + rho_star) / (q * density);
    let var2 = two * sigma_star * sigma_star;
    let ind = |b: bool| if b { T::one() } else { T::zero() };
    let lag2 = ind((x2 - x0).abs() <= var2.sqrt() * q);
    let lag1 = ind((x1 - x0).abs() <= (var2 / (T::one() + rho_star)).sqrt() * q);
    coef * (lag2 - lag1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDiagnostics<T> {
    pub sigma_tilde_sq: T,
    /// Batch-means standard error of `sigma_tilde_sq`.
    pub std_error: T,
    pub truncation_lag: usize,
    pub mc_reps: usize,
    pub z_stat: Option<T>,
}

/// Batches used for the standard error in `sigma_tilde_sq_mc`.
const MC_BATCHES: usize = 20;

/// Monte-Carlo estimate of the asymptotic variance of `sqrt(n) (rho_tilde -
/// rho_star)`: the long-run variance of `Psi(eta_i, eta_{i+1}, eta_{i+2})`
/// truncated at lag `truncation_lag`, from one stationary Gaussian AR(1)
/// path of length `reps + truncation_lag + 2`.
pub fn sigma_tilde_sq_mc<T: Scalar>(
    rho_star: T,
    sigma_star: T,
    truncation_lag: usize,
    reps: usize,
    seed: u64,
) -> Result<VarianceDiagnostics<T>> {
    if reps < 2 * MC_BATCHES {
        return Err(Error::InvalidSpec(format!(
            "need at least {} Monte-Carlo draws, got {reps}",
            2 * MC_BATCHES
        )));
    }
    if !(rho_star.abs() < T::one()) || !(sigma_star > T::zero()) {
        return Err(Error::NonStationary(rho_star.abs().as_f64()));
    }
    let k_max = truncation_lag;
    let len = reps + k_max + 2;
    let mut rng = rng_for(seed, 0);
    let mut eta = Vec::with_capacity(len);
    let sd0 = sigma_star / (T::one() - rho_star * rho_star).sqrt();
    eta.push(sd0 * T::sample_standard_normal(&mut rng));
    for i in 1..len {
        let e = sigma_star * T::sample_standard_normal(&mut rng);
        eta.push(rho_star * eta[i - 1] + e);
    }
    let psis: Vec<T> = eta
        .windows(3)
        .map(|w| psi(w[0], w[1], w[2], rho_star, sigma_star))
        .collect();

    let long_run = |range: std::ops::Range<usize>| -> T {
        let count = T::from_count(range.len());
        let mean = psis[range.clone()].iter().copied().sum::<T>() / count;
        let mut total = T::zero();
        for k in 0..=k_max {
            let acc: T = range
                .clone()
                .map(|i| (psis[i] - mean) * (psis[i + k] - mean))
                .sum();
            let gamma = acc / count;
            total = total + if k == 0 { gamma } else { T::lit(2.0) * gamma };
        }
        total
    };

    let estimate = long_run(0..reps);
    let batch = reps / MC_BATCHES;
    let batches: Vec<T> = (0..MC_BATCHES)
        .map(|b| long_run(b * batch..(b + 1) * batch))
        .collect();
    let bcount = T::from_count(MC_BATCHES);
    let bmean = batches.iter().copied().sum::<T>() / bcount;
    let bvar = batches
        .iter()
        .map(|v| (*v - bmean) * (*v - bmean))
        .sum::<T>()
        / T::from_count(MC_BATCHES - 1);
    // Batches are `MC_BATCHES` times shorter than the full run.
    let std_error = (bvar / bcount).sqrt();

    if !(estimate > T::zero()) {
        return Err(Error::DegenerateSeries("Monte-Carlo variance is not positive"));
    }
    Ok(VarianceDiagnostics {
        sigma_tilde_sq: estimate,
        std_error,
        truncation_lag: k_max,
        mc_reps: reps,
        z_stat: None,
    })
}

/// Statistic `sqrt(n) rho_tilde / sigma_tilde` for the hypothesis of no
/// autocorrelation; `diag` must be computed at `rho_star = 0`.
pub fn test_rho_zero<T: Scalar>(y: &RealSeries<T>, diag: &VarianceDiagnostics<T>) -> Result<T> {
    let est = rho_tilde(y)?;
    let n = T::from_count(y.len() - 1);
    Ok(n.sqrt() * est.value / diag.sigma_tilde_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, ArParams, MeanSegment, SeriesSpec};

    fn series(v: &[f64]) -> RealSeries<f64> {
        RealSeries::from_values(v.to_vec()).unwrap()
    }

    fn ar_noise(phi: Vec<f64>, n: usize, seed: u64) -> RealSeries<f64> {
        let spec = SeriesSpec {
            n,
            presample: phi.len(),
            mean_profile: vec![MeanSegment { len: n, level: 0.0 }],
            ar: ArParams::gaussian(phi, 1.0),
            seed,
            stream: 0,
            burn_in: 1000,
        };
        simulate(&spec).unwrap()
    }

    #[test]
    fn rho_tilde_examples() {
        let r = rho_tilde(&series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.method, RhoMethod::MedianDiff);
        assert_eq!(
            rho_tilde(&series(&[2.0; 10])),
            Err(Error::DegenerateSeries("median of lag-1 differences is zero"))
        );
        let iid = ar_noise(vec![], 100_000, 1);
        assert!(rho_tilde(&iid).unwrap().value.abs() < 0.02);
    }

    #[test]
    fn cauchy_transform_examples() {
        assert_eq!(cauchy_transform(0.0).unwrap(), 0.0);
        assert_eq!(cauchy_transform(3.0).unwrap(), 1.0);
        assert!((cauchy_transform(-0.75).unwrap() + 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(cauchy_transform(-1.5), Err(Error::DomainError(-1.5)));
        // inverts rho (2 + rho) and rho^2 (rho^2 - 2)
        for rho in [0.1, 0.5, 0.9] {
            let fwd: f64 = rho * (2.0 + rho);
            assert!((cauchy_transform(fwd).unwrap() - rho).abs() < 1e-12);
            let neg: f64 = -rho;
            let fwd = neg * neg * (neg * neg - 2.0);
            assert!((cauchy_transform(fwd).unwrap() - neg).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_cauchy_recovers_cauchy_ar1() {
        use crate::sim::InnovationFamily;
        let spec = SeriesSpec {
            n: 50_000,
            presample: 1,
            mean_profile: vec![MeanSegment { len: 50_000, level: 0.0 }],
            ar: ArParams {
                phi: vec![0.5],
                sigma: 1.0,
                family: InnovationFamily::Cauchy {
                    location: 0.0,
                    scale: 1.0,
                },
            },
            seed: 4,
            stream: 0,
            burn_in: 0,
        };
        let y = simulate(&spec).unwrap();
        let r = rho_cauchy(&y).unwrap();
        assert!((r.value - 0.5f64).abs() < 0.05, "{}", r.value);
    }

    #[test]
    fn ma_genton_examples() {
        let cfg = QnConfig::default();
        assert_eq!(rho_ma_genton(&[1.0, 2.0, 3.0, 4.0], 1, &cfg).unwrap().value, 1.0);
        // Growing alternation: lagged sums are +-1 (Qn = 0, ties dominate),
        // lagged differences are spread out.
        let alt: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { f64::from(i + 1) } else { -f64::from(i + 1) })
            .collect();
        assert_eq!(rho_ma_genton(&alt, 1, &cfg).unwrap().value, -1.0);
        // A strict +-1 alternation ties both halves, so Qn vanishes twice.
        let flat: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for x in [&flat[..], &[1.0; 8]] {
            assert!(matches!(
                rho_ma_genton(x, 1, &cfg),
                Err(Error::DegenerateSeries(_))
            ));
        }
        assert!(matches!(
            rho_ma_genton(&[1.0, 2.0, 3.0], 2, &cfg),
            Err(Error::TooShort { .. })
        ));
        let iid = ar_noise(vec![], 100_000, 2);
        assert!(rho_ma_genton(iid.values(), 1, &cfg).unwrap().value.abs() < 0.02);
    }

    #[test]
    fn autocorr_vector_examples() {
        let cfg = QnConfig::default();
        let ramp = series(&(0..20).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(
            autocorr_vector(&ramp, 2, &cfg),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(autocorr_vector(&ramp, 0, &cfg).unwrap().rho.is_empty());
        let y = ar_noise(vec![0.5], 100_000, 3);
        let acv = autocorr_vector(&y, 2, &cfg).unwrap();
        assert!((acv.rho[0] + 0.25).abs() < 0.02, "{:?}", acv.rho);
        assert!((acv.rho[1] + 0.125).abs() < 0.02, "{:?}", acv.rho);
    }

    #[test]
    fn phi_hat_examples() {
        let acv = AutocorrVector::new(vec![-0.25, -0.125]);
        let est = phi_hat(&acv, 1, 0.0).unwrap();
        assert!((est.phi[0] - 0.5f64).abs() < 1e-15);
        let singular = AutocorrVector::new(vec![0.0, 0.1]);
        assert!(matches!(
            phi_hat(&singular, 1, 0.0),
            Err(Error::SingularMatrix(_))
        ));
        let retried = phi_hat_auto(&singular, 1, 100).unwrap();
        assert_eq!(retried.regularizer_lambda, 0.01);
        assert!(phi_hat(&acv, 2, 0.0).is_err());
        assert!(phi_hat(&acv, 0, 0.0).unwrap().phi.is_empty());
        assert!(phi_hat(&acv, 1, -1.0).is_err());
    }

    #[test]
    fn phi_hat_regularisation_vanishes() {
        let acv = AutocorrVector::new(vec![-0.4, -0.05, 0.03]);
        let plain = phi_hat(&acv, 2, 0.0).unwrap();
        let ridge = phi_hat(&acv, 2, 1e-10).unwrap();
        for (a, b) in plain.phi.iter().zip(&ridge.phi) {
            assert!((*a - *b as f64).abs() < 1e-6);
        }
        assert!(plain.condition_estimate >= 1.0);
    }

    #[test]
    fn jacobian_shape_and_entries() {
        let m = jacobian(&[0.5]);
        assert_eq!(m, vec![vec![0.5, -1.0]]);
        let m = jacobian(&[0.2, 0.3]);
        // i=1: j=1 -> phi1 + phi3(0) = 0.2 ; j=2 -> -1 ; j=3 -> 0
        // i=2: j=1 -> phi2 = 0.3 ; j=2 -> phi1 = 0.2 ; j=3 -> -1
        assert_eq!(m, vec![vec![0.2, -1.0, 0.0], vec![0.3, 0.2, -1.0]]);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(0.0, 0.0, 0.0, 0.0, 1.0), 0.0);
        let up = psi(0.0, 0.0, 2.0, 0.0, 1.0);
        let down = psi(0.0, 2.0, 0.0, 0.0, 1.0);
        assert!((up - 4.6657f64).abs() < 1e-3, "{up}");
        assert!((down + 4.6657f64).abs() < 1e-3, "{down}");
    }

    #[test]
    fn normal_quartile_constant() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let q = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.75);
        assert!((q - NORMAL_Q3).abs() < 1e-12);
    }

    #[test]
    fn sigma_tilde_without_cross_terms_is_psi_variance() {
        let d = sigma_tilde_sq_mc(0.3, 1.0, 0, 20_000, 5).unwrap();
        let mut rng = rng_for(5, 0);
        let len = 20_000 + 2;
        let mut eta = vec![1.0 / (1.0f64 - 0.09).sqrt() * f64::sample_standard_normal(&mut rng)];
        for i in 1..len {
            let e = f64::sample_standard_normal(&mut rng);
            eta.push(0.3 * eta[i - 1] + e);
        }
        let psis: Vec<f64> = eta.windows(3).map(|w| psi(w[0], w[1], w[2], 0.3, 1.0)).collect();
        let mean = psis.iter().sum::<f64>() / psis.len() as f64;
        let var = psis.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / psis.len() as f64;
        assert!((d.sigma_tilde_sq - var).abs() < 1e-9 * var);
    }

    #[test]
    fn test_statistic_zero_when_estimate_zero() {
        let diag = VarianceDiagnostics {
            sigma_tilde_sq: 2.0,
            std_error: 0.1,
            truncation_lag: 10,
            mc_reps: 10_000,
            z_stat: None,
        };
        // lag-1 |diffs| all 1; lag-2 |diffs| four 2s and four 0s
        let y = series(&[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0]);
        assert_eq!(rho_tilde(&y).unwrap().value, 0.0);
        assert_eq!(test_rho_zero(&y, &diag).unwrap(), 0.0);
        let ramp = series(&[0.0, 1.0, 2.0, 3.0]);
        let z = test_rho_zero(&ramp, &diag).unwrap();
        assert!((z - 3f64.sqrt() * 3.0 / 2f64.sqrt()).abs() < 1e-12);
    }
}
