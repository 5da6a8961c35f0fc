//! End-to-end estimation: coefficients, decorrelation, segmentation,
//! selection and post-processing.

use serde::{Deserialize, Serialize};

use crate::autocorr::{autocorr_vector, phi_hat, phi_hat_auto, rho_cauchy, rho_tilde, PhiEstimate, RhoEstimate};
use crate::decorrelate::{decorrelate, DecorrelatedSeries};
use crate::error::{Error, Result};
use crate::postprocess::postprocess;
use crate::robust_scale::QnConfig;
use crate::scalar::Scalar;
use crate::segment::{dp_segment, fit_from_changepoints, CostMatrix, SegConstraints, SegmentationFit};
use crate::select::{beta_select, joint_mp_fit, mbic, CriterionPath, SelectionConfig, SelectionMode};
use crate::series::RealSeries;

/// Where the decorrelation coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Estimator<T> {
    /// No decorrelation (plain least squares).
    None,
    /// Known coefficients.
    Fixed { phi: Vec<T> },
    /// AR(1) median-difference estimate.
    MedianDiff,
    /// AR(1) median-difference estimate for Cauchy innovations.
    Cauchy,
    /// AR(p) estimate from robust autocorrelations of the differences.
    MaGenton { p: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaPolicy<T> {
    /// Unregularised, retried with `1 / n` if singular.
    Auto,
    Fixed { lambda: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig<T> {
    pub estimator: Estimator<T>,
    pub selection: SelectionConfig,
    pub postprocess: bool,
    pub qn: QnConfig<T>,
    pub lambda: LambdaPolicy<T>,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            estimator: Estimator::MedianDiff,
            selection: SelectionConfig::default(),
            postprocess: true,
            qn: QnConfig::default(),
            lambda: LambdaPolicy::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult<T> {
    pub phi: Vec<T>,
    pub rho_estimate: Option<RhoEstimate<T>>,
    pub phi_estimate: Option<PhiEstimate<T>>,
    /// Order used for decorrelation and post-processing.
    pub p: usize,
    /// Number of changes selected before post-processing.
    pub m_hat_raw: usize,
    pub m_hat: usize,
    /// Post-sample coordinates, before post-processing.
    pub changepoints_raw: Vec<usize>,
    pub changepoints: Vec<usize>,
    /// Segment means of the residual series.
    pub delta: Vec<T>,
    /// Segment means on the scale of the observations, `delta / (1 - sum phi)`.
    pub levels: Option<Vec<T>>,
    pub ss: T,
    pub n_eff: usize,
    pub offset: usize,
    pub criterion: CriterionPath<T>,
    pub warnings: Vec<String>,
}

struct Estimated<T> {
    phi: Vec<T>,
    rho: Option<RhoEstimate<T>>,
    phi_estimate: Option<PhiEstimate<T>>,
}

fn estimate<T: Scalar>(y: &RealSeries<T>, cfg: &PipelineConfig<T>) -> Result<Estimated<T>> {
    let scalar = |r: RhoEstimate<T>| Estimated {
        phi: vec![r.value],
        rho: Some(r),
        phi_estimate: None,
    };
    Ok(match &cfg.estimator {
        Estimator::None => Estimated {
            phi: Vec::new(),
            rho: None,
            phi_estimate: None,
        },
        Estimator::Fixed { phi } => Estimated {
            phi: phi.clone(),
            rho: None,
            phi_estimate: None,
        },
        Estimator::MedianDiff => scalar(rho_tilde(y)?),
        Estimator::Cauchy => scalar(rho_cauchy(y)?),
        Estimator::MaGenton { p } => {
            let rho = autocorr_vector(y, p + 1, &cfg.qn)?;
            let est = match cfg.lambda {
                LambdaPolicy::Auto => phi_hat_auto(&rho, *p, y.n())?,
                LambdaPolicy::Fixed { lambda } => phi_hat(&rho, *p, lambda)?,
            };
            Estimated {
                phi: est.phi.clone(),
                rho: None,
                phi_estimate: Some(est),
            }
        }
    })
}

/// Runs the whole estimation on `y`.
pub fn run_pipeline<T: Scalar>(y: &RealSeries<T>, cfg: &PipelineConfig<T>) -> Result<PipelineResult<T>> {
    cfg.selection.validate()?;
    let mut warnings = Vec::new();
    let (est, decorrelated, fits, criterion) = if cfg.selection.mode == SelectionMode::JointMp {
        let joint = joint_mp_fit(y, &cfg.selection, &cfg.qn)?;
        for row in &joint.path.table {
            if let Some(reason) = &row.excluded {
                warnings.push(format!("order {} excluded: {reason}", row.p));
            }
        }
        let est = Estimated {
            phi: joint.phi.phi.clone(),
            rho: None,
            phi_estimate: Some(joint.phi),
        };
        (est, joint.decorrelated, joint.fits, joint.path)
    } else {
        let est = estimate(y, cfg)?;
        let decorrelated = decorrelate(y, &est.phi)?;
        let constraints = SegConstraints::new(cfg.selection.m_max, cfg.selection.min_seg_len);
        let fits = dp_segment(&decorrelated, &constraints)?;
        let criterion = match cfg.selection.mode {
            SelectionMode::BetaPenalty => {
                beta_select(&fits, decorrelated.n_eff(), cfg.selection.beta_exponent)?
            }
            _ => mbic(&fits, decorrelated.n_eff())?,
        };
        (est, decorrelated, fits, criterion)
    };
    if let Some(pe) = &est.phi_estimate {
        if pe.regularizer_lambda > T::zero() {
            warnings.push(format!("ridge regularisation applied (lambda = {})", pe.regularizer_lambda));
        }
    }
    if criterion.degenerate {
        warnings.push(format!("perfect fit at m = {}: selection forced", criterion.m_hat));
    }
    if criterion.m_hat == cfg.selection.m_max && cfg.selection.m_max > 0 {
        warnings.push("selected number of changes equals m_max".into());
    }
    finish(y, cfg, est, &decorrelated, &fits, criterion, warnings)
}

fn finish<T: Scalar>(
    y: &RealSeries<T>,
    cfg: &PipelineConfig<T>,
    est: Estimated<T>,
    decorrelated: &DecorrelatedSeries<T>,
    fits: &[SegmentationFit<T>],
    criterion: CriterionPath<T>,
    mut warnings: Vec<String>,
) -> Result<PipelineResult<T>> {
    let selected = &fits[criterion.m_hat];
    let p = est.phi.len();
    let changepoints = if cfg.postprocess {
        postprocess(&selected.t, p, y.n())?
    } else {
        selected.t.clone()
    };
    let fit = if changepoints.len() == selected.t.len() {
        selected.clone()
    } else {
        let costs = CostMatrix::new(&decorrelated.w);
        let t_res: Vec<usize> = changepoints.iter().map(|t| t - decorrelated.offset).collect();
        fit_from_changepoints(&costs, &t_res, decorrelated.offset)
    };
    let denom = est.phi.iter().fold(T::one(), |acc, v| acc - *v);
    let levels = if denom.abs() > T::lit(1e-8) {
        Some(fit.delta.iter().map(|d| *d / denom).collect())
    } else {
        warnings.push("coefficients sum to one: levels are not identifiable".into());
        None
    };
    Ok(PipelineResult {
        phi: est.phi,
        rho_estimate: est.rho,
        phi_estimate: est.phi_estimate,
        p,
        m_hat_raw: criterion.m_hat,
        m_hat: changepoints.len(),
        changepoints_raw: selected.t.clone(),
        changepoints,
        delta: fit.delta,
        levels,
        ss: fit.ss,
        n_eff: decorrelated.n_eff(),
        offset: decorrelated.offset,
        criterion,
        warnings,
    })
}

/// Fails early with a clear error when `y` cannot carry any change.
pub fn check_series<T: Scalar>(y: &RealSeries<T>) -> Result<()> {
    let v = &y.values()[y.presample_len()..];
    if v.iter().all(|x| *x == v[0]) {
        return Err(Error::DegenerateSeries("series is constant"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> RealSeries<f64> {
        let v: Vec<f64> = (0..100).map(|i| if i < 50 { 0.0 } else { 5.0 }).collect();
        RealSeries::from_values(v).unwrap()
    }

    #[test]
    fn step_series_without_decorrelation() {
        let cfg = PipelineConfig {
            estimator: Estimator::None,
            ..Default::default()
        };
        let r = run_pipeline(&step(), &cfg).unwrap();
        assert_eq!(r.changepoints, vec![50]);
        assert_eq!(r.levels, Some(vec![0.0, 5.0]));
        assert!(r.criterion.degenerate);
    }

    #[test]
    fn fixed_coefficients_recover_levels() {
        // Noise-free AR(1) mean: decorrelation leaves a one-step spike that
        // post-processing removes.
        let v: Vec<f64> = (0..200).map(|i| if i <= 100 { 0.0 } else { 2.0 }).collect();
        let y = RealSeries::new(v, 1).unwrap();
        let cfg = PipelineConfig {
            estimator: Estimator::Fixed { phi: vec![0.5] },
            ..Default::default()
        };
        let r = run_pipeline(&y, &cfg).unwrap();
        assert_eq!(r.changepoints_raw, vec![100, 101]);
        assert_eq!(r.changepoints, vec![100]);
        let levels = r.levels.unwrap();
        assert!(levels[0].abs() < 1e-12);
        // The merged spike lifts the last residual mean from 1 to 100 / 99.
        assert!((levels[1] - 2.0).abs() < 0.05);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let y = RealSeries::from_values(vec![3.0; 20]).unwrap();
        assert!(matches!(check_series(&y), Err(Error::DegenerateSeries(_))));
        assert!(check_series(&step()).is_ok());
    }
}
