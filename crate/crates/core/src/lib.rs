//! Multiple change-point detection in the mean of a series with
//! autoregressive noise.
//!
//! The noise correlation is estimated robustly (jumps in the mean act as
//! outliers in the differenced series), the series is decorrelated with the
//! estimate, and the decorrelated series is segmented exactly by dynamic
//! programming. The number of changes is chosen with a modified BIC or a
//! penalised least-squares criterion, optionally jointly with the AR order,
//! and the one-step artefacts of decorrelation are removed afterwards.
//!
//! ```
//! use arseg::{design_ar1, run_pipeline, simulate, PipelineConfig};
//!
//! let spec = design_ar1(400, 0.3, 0.1, 7).unwrap();
//! let y = simulate(&spec).unwrap();
//! let mut cfg = PipelineConfig::default();
//! cfg.selection.m_max = 12;
//! let fit = run_pipeline(&y, &cfg).unwrap();
//! assert_eq!(fit.changepoints.len(), fit.m_hat);
//! println!("changes at {:?}, levels {:?}", fit.changepoints, fit.levels);
//! ```
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod autocorr;
pub mod decorrelate;
pub mod error;
pub mod evaluate;
mod linalg;
pub mod pipeline;
pub mod postprocess;
pub mod robust_scale;
pub mod scalar;
pub mod segment;
pub mod select;
pub mod series;
pub mod sim;

pub use autocorr::{
    autocorr_vector, cauchy_transform, difference, jacobian, phi_hat, phi_hat_auto, psi, rho_cauchy,
    rho_ma_genton, rho_tilde, sigma_tilde_sq_mc, test_rho_zero, RhoMethod, NORMAL_Q3,
};
pub use decorrelate::decorrelate;
pub use error::{Error, Result};
pub use evaluate::{hausdorff_parts, phi_rmse, run_bench, HausdorffParts, Method};
pub use linalg::PIVOT_TOLERANCE;
pub use pipeline::{check_series, run_pipeline};
pub use postprocess::{postprocess, pp_ar1, pp_arp};
pub use robust_scale::{median, qn, qn_rank, QN_GAUSSIAN_CONSTANT};
pub use scalar::Scalar;
pub use segment::{dp_segment, dp_segment_values, segment_cost, SegConstraints};
pub use select::{
    beta_select, joint_mp_fit, joint_mp_select, mbic, mbic_value, SelectionConfig, SelectionMode,
    DEGENERATE_SS,
};
pub use sim::{design_ar1, design_arp, design_breaks, rng_for, simulate};

/// Version tag written into every serialised report.
pub const SCHEMA: &str = "arseg/1";

pub type RealSeries = series::RealSeries<f64>;
pub type DecorrelatedSeries = decorrelate::DecorrelatedSeries<f64>;
pub type QnConfig = robust_scale::QnConfig<f64>;
pub type RhoEstimate = autocorr::RhoEstimate<f64>;
pub type AutocorrVector = autocorr::AutocorrVector<f64>;
pub type PhiEstimate = autocorr::PhiEstimate<f64>;
pub type VarianceDiagnostics = autocorr::VarianceDiagnostics<f64>;
pub type ArParams = sim::ArParams<f64>;
pub type InnovationFamily = sim::InnovationFamily<f64>;
pub type MeanSegment = sim::MeanSegment<f64>;
pub type SeriesSpec = sim::SeriesSpec<f64>;
pub type CostMatrix = segment::CostMatrix<f64>;
pub type SegmentationFit = segment::SegmentationFit<f64>;
pub type CriterionPath = select::CriterionPath<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type PipelineResult = pipeline::PipelineResult<f64>;
pub type Estimator = pipeline::Estimator<f64>;
pub type LambdaPolicy = pipeline::LambdaPolicy<f64>;
pub type Design = evaluate::Design<f64>;
pub type BenchConfig = evaluate::BenchConfig<f64>;
pub use evaluate::{EvalReport, MethodReport, ReplicateOutcome};
