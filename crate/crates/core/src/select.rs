//! Choosing the number of change-points (and optionally the AR order) from
//! the path of optimal segmentations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::autocorr::{autocorr_vector, phi_hat_auto, AutocorrVector, PhiEstimate};
use crate::decorrelate::{decorrelate, DecorrelatedSeries};
use crate::error::{Error, Result};
use crate::robust_scale::QnConfig;
use crate::scalar::Scalar;
use crate::segment::{dp_segment, SegConstraints, SegmentationFit};
use crate::series::RealSeries;

/// Residual sums of squares at or below this are treated as perfect fits.
pub const DEGENERATE_SS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    Mbic,
    BetaPenalty,
    JointMp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub mode: SelectionMode,
    /// Penalty exponent: the per-change penalty is `n^-beta`.
    pub beta_exponent: f64,
    pub m_max: usize,
    /// Largest candidate order in joint mode.
    pub p_max: usize,
    pub min_seg_len: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            mode: SelectionMode::Mbic,
            beta_exponent: 0.25,
            m_max: 75,
            p_max: 3,
            min_seg_len: 1,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_exponent > 0.0 && self.beta_exponent < 0.5) {
            return Err(Error::InvalidSpec(format!(
                "beta exponent must lie in (0, 0.5), got {}",
                self.beta_exponent
            )));
        }
        if self.min_seg_len == 0 {
            return Err(Error::InvalidSpec("minimum segment length must be >= 1".into()));
        }
        Ok(())
    }
}

/// Criterion values of one candidate order in joint selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow<T> {
    pub p: usize,
    pub n_eff: usize,
    /// Penalised criterion per `m`; empty when the order was excluded.
    pub values: Vec<T>,
    pub excluded: Option<String>,
}

/// Criterion values along the segmentation path and the selected model.
///
/// Perfect fits are scored `+inf` (serialised as `null`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionPath<T> {
    pub mode: SelectionMode,
    /// Criterion per `m` (for the selected order in joint mode).
    pub values: Vec<T>,
    pub m_hat: usize,
    pub p_hat: Option<usize>,
    /// Set when the selection was forced by a zero-residual fit.
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default = "Vec::new")]
    pub table: Vec<OrderRow<T>>,
}

/// Index of the largest value, the first one on ties.
fn first_argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn is_degenerate<T: Scalar>(ss: T) -> bool {
    ss <= T::lit(DEGENERATE_SS)
}

/// Modified BIC of one fit, `+inf` for a perfect fit.
pub fn mbic_value<T: Scalar>(fit: &SegmentationFit<T>, n_eff: usize) -> T {
    if is_degenerate(fit.ss) {
        return T::infinity();
    }
    let n = n_eff as f64;
    let m = fit.m as f64;
    let half = (n - m + 1.0) / 2.0;
    let lengths: f64 = fit.segment_lengths().iter().map(|&l| (l as f64).ln()).sum();
    T::lit(-half * fit.ss.as_f64().ln() + ln_gamma(half) - 0.5 * lengths - m * n.ln())
}

fn check_path<T>(fits: &[SegmentationFit<T>]) -> Result<()> {
    if fits.is_empty() {
        return Err(Error::Empty);
    }
    if fits.iter().enumerate().any(|(i, f)| f.m != i) {
        return Err(Error::InvalidSpec("fits must cover m = 0, 1, 2, ... in order".into()));
    }
    Ok(())
}

/// Modified BIC over the path, maximised. The change-points of every fit
/// (hence the segment lengths) are the tie-broken ones the DP returned.
pub fn mbic<T: Scalar>(fits: &[SegmentationFit<T>], n_eff: usize) -> Result<CriterionPath<T>> {
    check_path(fits)?;
    let values: Vec<T> = fits.iter().map(|f| mbic_value(f, n_eff)).collect();
    let degenerate_at = fits.iter().position(|f| is_degenerate(f.ss));
    Ok(CriterionPath {
        mode: SelectionMode::Mbic,
        m_hat: degenerate_at.unwrap_or_else(|| first_argmax(&values)),
        degenerate: degenerate_at.is_some(),
        p_hat: None,
        values,
        table: Vec::new(),
    })
}

/// `SS_m / n + n^-beta m`, minimised.
pub fn beta_select<T: Scalar>(
    fits: &[SegmentationFit<T>],
    n_eff: usize,
    beta: f64,
) -> Result<CriterionPath<T>> {
    check_path(fits)?;
    let n = T::from_count(n_eff);
    let penalty = n.powf(T::lit(-beta));
    let values: Vec<T> = fits
        .iter()
        .map(|f| f.ss / n + penalty * T::from_count(f.m))
        .collect();
    let negated: Vec<T> = values.iter().map(|v| -*v).collect();
    Ok(CriterionPath {
        mode: SelectionMode::BetaPenalty,
        m_hat: first_argmax(&negated),
        degenerate: false,
        p_hat: None,
        values,
        table: Vec::new(),
    })
}

/// Everything joint selection computed for the chosen order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSelection<T> {
    pub path: CriterionPath<T>,
    pub phi: PhiEstimate<T>,
    pub decorrelated: DecorrelatedSeries<T>,
    pub fits: Vec<SegmentationFit<T>>,
}

struct OrderBranch<T> {
    phi: PhiEstimate<T>,
    decorrelated: DecorrelatedSeries<T>,
    fits: Vec<SegmentationFit<T>>,
    values: Vec<T>,
}

fn order_branch<T: Scalar>(
    y: &RealSeries<T>,
    rho: &AutocorrVector<T>,
    p: usize,
    cfg: &SelectionConfig,
) -> Result<OrderBranch<T>> {
    let phi = phi_hat_auto(rho, p, y.n())?;
    let decorrelated = decorrelate(y, &phi.phi)?;
    let n_eff = decorrelated.n_eff();
    let fits = dp_segment(&decorrelated, &SegConstraints::new(cfg.m_max, cfg.min_seg_len))?;
    let order_penalty = T::lit(p as f64 / 2.0 * (n_eff as f64).ln());
    let values = fits.iter().map(|f| mbic_value(f, n_eff) - order_penalty).collect();
    Ok(OrderBranch {
        phi,
        decorrelated,
        fits,
        values,
    })
}

/// Joint choice of `(m, p)` maximising `C_m - (p / 2) log n_eff` over
/// `p = 0..=p_max`. Coefficients for every order come from one robust
/// autocorrelation vector; orders whose estimate fails are excluded.
pub fn joint_mp_fit<T: Scalar>(
    y: &RealSeries<T>,
    cfg: &SelectionConfig,
    qn: &QnConfig<T>,
) -> Result<JointSelection<T>> {
    cfg.validate()?;
    let rho = if cfg.p_max == 0 {
        AutocorrVector::new(Vec::new())
    } else {
        autocorr_vector(y, cfg.p_max + 1, qn)?
    };
    let branches: Vec<Result<OrderBranch<T>>> = (0..=cfg.p_max)
        .into_par_iter()
        .map(|p| order_branch(y, &rho, p, cfg))
        .collect();

    let mut table = Vec::with_capacity(branches.len());
    let mut best: Option<(usize, usize)> = None;
    let mut best_value = T::neg_infinity();
    let mut first_error = None;
    for (p, b) in branches.iter().enumerate() {
        match b {
            Ok(b) => table.push(OrderRow {
                p,
                n_eff: b.decorrelated.n_eff(),
                values: b.values.clone(),
                excluded: None,
            }),
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
                table.push(OrderRow {
                    p,
                    n_eff: 0,
                    values: Vec::new(),
                    excluded: Some(e.to_string()),
                });
            }
        }
    }
    // Scan m outermost so that ties go to the smaller m, then smaller p.
    for m in 0..=cfg.m_max {
        for row in &table {
            if let Some(v) = row.values.get(m) {
                if best.is_none() || *v > best_value {
                    best = Some((m, row.p));
                    best_value = *v;
                }
            }
        }
    }
    let Some((m_hat, p_hat)) = best else {
        return Err(first_error.unwrap_or(Error::Empty));
    };
    let chosen = branches
        .into_iter()
        .nth(p_hat)
        .expect("selected order exists")
        .expect("selected order succeeded");
    let degenerate = is_degenerate(chosen.fits[m_hat].ss);
    Ok(JointSelection {
        path: CriterionPath {
            mode: SelectionMode::JointMp,
            values: chosen.values,
            m_hat,
            p_hat: Some(p_hat),
            degenerate,
            table,
        },
        phi: chosen.phi,
        decorrelated: chosen.decorrelated,
        fits: chosen.fits,
    })
}

/// Criterion path of [`joint_mp_fit`] with the default Qn configuration.
pub fn joint_mp_select<T: Scalar>(y: &RealSeries<T>, cfg: &SelectionConfig) -> Result<CriterionPath<T>> {
    joint_mp_fit(y, cfg, &QnConfig::default()).map(|j| j.path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::dp_segment_values;

    fn path(ss: &[f64], n_eff: usize) -> Vec<SegmentationFit<f64>> {
        ss.iter()
            .enumerate()
            .map(|(m, &ss)| SegmentationFit {
                m,
                t: (1..=m).collect(),
                delta: vec![0.0; m + 1],
                ss,
                offset: 0,
                n_eff,
            })
            .collect()
    }

    #[test]
    fn beta_example() {
        let p = beta_select(&path(&[100.0, 10.0, 9.9, 9.8], 100), 100, 0.25).unwrap();
        let expected = [1.0, 0.416_227_766, 0.731_455_532, 1.046_683_298];
        for (v, e) in p.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-8, "{v} vs {e}");
        }
        assert_eq!(p.m_hat, 1);
        let flat = beta_select(&path(&[5.0, 5.0], 10), 10, 0.25).unwrap();
        assert_eq!(flat.m_hat, 0);
    }

    #[test]
    fn beta_penalty_is_monotone_on_a_fixed_path() {
        let fits = path(&[100.0, 10.0, 4.0, 3.9, 3.8], 100);
        let mut prev = usize::MAX;
        for beta in [0.05, 0.15, 0.25, 0.35, 0.45, 0.499] {
            let m = beta_select(&fits, 100, beta).unwrap().m_hat;
            assert!(m <= prev);
            prev = m;
        }
    }

    #[test]
    fn perfect_double_jump_is_selected() {
        let w = [0.0, 0.0, 5.0, 5.0, 0.0, 0.0];
        let fits = dp_segment_values(&w, &SegConstraints::new(3, 1)).unwrap();
        let p = mbic(&fits, 6).unwrap();
        assert_eq!(p.m_hat, 2);
        assert!(p.degenerate);
        assert!(p.values[2] > p.values[0]);
    }

    #[test]
    fn ties_go_to_smaller_m() {
        assert_eq!(first_argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(first_argmax(&[f64::INFINITY, f64::INFINITY]), 0);
    }

    #[test]
    fn invalid_beta_rejected() {
        for beta in [0.0, 0.5, -1.0, f64::NAN] {
            let cfg = SelectionConfig {
                beta_exponent: beta,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
    }
}
