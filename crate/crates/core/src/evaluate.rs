//! Accuracy metrics and the seeded Monte-Carlo replication harness.

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{run_pipeline, Estimator, PipelineConfig, PipelineResult};
use crate::robust_scale::QnConfig;
use crate::scalar::{CompensatedSum, Scalar};
use crate::select::SelectionConfig;
use crate::sim::{design_ar1, design_arp, simulate, SeriesSpec};

/// Directed Hausdorff components between true and estimated change
/// fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HausdorffParts {
    /// Largest distance from an estimated point to the truth.
    pub d1: f64,
    /// Largest distance from a true point to the estimate.
    pub d2: f64,
    pub hausdorff: f64,
}

fn directed(from: &[f64], to: &[f64]) -> f64 {
    from.iter()
        .map(|a| to.iter().map(|b| (a - b).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff parts for change fractions in `[0, 1]`. An empty estimate has
/// `d1 = 0` and `d2` measured to the end points `{0, 1}`.
pub fn hausdorff_parts(truth: &[f64], est: &[f64]) -> HausdorffParts {
    let d1 = directed(est, truth);
    let d2 = if est.is_empty() {
        directed(truth, &[0.0, 1.0])
    } else {
        directed(truth, est)
    };
    HausdorffParts {
        d1,
        d2,
        hausdorff: d1.max(d2),
    }
}

/// Per-coefficient root mean squared error over replicates.
pub fn phi_rmse<T: Scalar>(estimates: &[Vec<T>], truth: &[T]) -> Result<Vec<T>> {
    if estimates.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(bad) = estimates.iter().find(|e| e.len() != truth.len()) {
        return Err(Error::InvalidSpec(format!(
            "estimate has {} coefficients, truth has {}",
            bad.len(),
            truth.len()
        )));
    }
    Ok((0..truth.len())
        .map(|k| {
            let mut acc = CompensatedSum::new();
            for e in estimates {
                let d = e[k] - truth[k];
                acc.add(d * d);
            }
            (acc.value() / T::from_count(estimates.len())).sqrt()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Design<T> {
    /// AR(1) noise, one pre-sample value.
    Ar1 { rho: T, sigma: T },
    /// AR(p) noise, twenty pre-sample values.
    Arp { phi: Vec<T>, sigma: T },
}

impl<T: Scalar> Design<T> {
    pub fn phi(&self) -> Vec<T> {
        match self {
            Design::Ar1 { rho, .. } => vec![*rho],
            Design::Arp { phi, .. } => phi.clone(),
        }
    }

    pub fn spec(&self, n: usize, seed: u64) -> Result<SeriesSpec<T>> {
        match self {
            Design::Ar1 { rho, sigma } => design_ar1(n, *rho, *sigma, seed),
            Design::Arp { phi, sigma } => design_arp(n, phi.clone(), *sigma, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// No decorrelation.
    Ls,
    /// Robust coefficient estimate.
    Robust,
    /// Robust estimate, post-processed.
    RobustP,
    /// True coefficients.
    Oracle,
    /// True coefficients, post-processed.
    OracleP,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Ls,
        Method::Robust,
        Method::RobustP,
        Method::Oracle,
        Method::OracleP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Robust => "robust",
            Method::RobustP => "robust-p",
            Method::Oracle => "oracle",
            Method::OracleP => "oracle-p",
        }
    }

    pub fn post_processed(self) -> bool {
        matches!(self, Method::RobustP | Method::OracleP)
    }

    fn source(self) -> Source {
        match self {
            Method::Ls => Source::None,
            Method::Robust | Method::RobustP => Source::Robust,
            Method::Oracle | Method::OracleP => Source::Oracle,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method '{s}'")))
    }
}

/// Decorrelation sources; a method and its post-processed variant share one
/// pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Source {
    None,
    Robust,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig<T> {
    pub design: Design<T>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub m_max: usize,
    pub min_seg_len: usize,
    pub qn: QnConfig<T>,
}

impl<T: Scalar> BenchConfig<T> {
    pub fn new(design: Design<T>, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            design,
            n,
            reps,
            seed,
            methods: Method::ALL.to_vec(),
            m_max: 15,
            min_seg_len: 1,
            qn: QnConfig::default(),
        }
    }

    fn pipeline(&self, source: Source) -> PipelineConfig<T> {
        let p = self.design.phi().len();
        let estimator = match (source, &self.design) {
            (Source::None, _) => Estimator::None,
            (Source::Oracle, d) => Estimator::Fixed { phi: d.phi() },
            (Source::Robust, Design::Ar1 { .. }) => Estimator::MedianDiff,
            (Source::Robust, Design::Arp { .. }) => Estimator::MaGenton { p },
        };
        PipelineConfig {
            estimator,
            selection: SelectionConfig {
                m_max: self.m_max,
                min_seg_len: self.min_seg_len,
                ..SelectionConfig::default()
            },
            postprocess: true,
            qn: self.qn,
            ..PipelineConfig::default()
        }
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub m_hat: usize,
    pub changepoints: Vec<usize>,
    pub phi_hat: Vec<f64>,
    pub d1: f64,
    pub d2: f64,
    pub hausdorff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    /// One entry per replicate, `None` where the pipeline failed.
    pub replicates: Vec<Option<ReplicateOutcome>>,
    pub failures: usize,
    pub failure_reasons: BTreeMap<String, usize>,
    pub selection_histogram: BTreeMap<usize, usize>,
    pub changepoint_frequencies: BTreeMap<usize, usize>,
    pub mean_d1: Option<f64>,
    pub mean_d2: Option<f64>,
    pub mean_hausdorff: Option<f64>,
    /// Empty for methods that do not estimate coefficients.
    pub phi_rmse: Vec<f64>,
}

impl MethodReport {
    pub fn successes(&self) -> impl Iterator<Item = &ReplicateOutcome> {
        self.replicates.iter().flatten()
    }

    /// Fraction of all replicates that selected exactly `m` changes.
    pub fn frequency_of(&self, m: usize) -> f64 {
        self.selection_histogram.get(&m).copied().unwrap_or(0) as f64 / self.replicates.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: String,
    pub design: Design<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub m_max: usize,
    pub min_seg_len: usize,
    pub true_changepoints: Vec<usize>,
    pub methods: BTreeMap<Method, MethodReport>,
    /// Wall-clock statistics; never serialised so that reports are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub runtime: Option<Duration>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut acc = CompensatedSum::new();
    let mut count = 0usize;
    for v in values {
        acc.add(v);
        count += 1;
    }
    (count > 0).then(|| acc.value() / count as f64)
}

fn outcome<T: Scalar>(
    result: &PipelineResult<T>,
    post_processed: bool,
    truth: &[f64],
    n: usize,
) -> ReplicateOutcome {
    let changepoints = if post_processed {
        result.changepoints.clone()
    } else {
        result.changepoints_raw.clone()
    };
    let est: Vec<f64> = changepoints.iter().map(|&t| t as f64 / n as f64).collect();
    let h = hausdorff_parts(truth, &est);
    ReplicateOutcome {
        m_hat: changepoints.len(),
        changepoints,
        phi_hat: result.phi.iter().map(|v| v.as_f64()).collect(),
        d1: h.d1,
        d2: h.d2,
        hausdorff: h.hausdorff,
    }
}

type ReplicateResults = BTreeMap<Method, std::result::Result<ReplicateOutcome, String>>;

fn run_replicate<T: Scalar>(cfg: &BenchConfig<T>, spec: &SeriesSpec<T>, truth: &[f64]) -> ReplicateResults {
    let mut sources: Vec<Source> = cfg.methods.iter().map(|m| m.source()).collect();
    sources.sort();
    sources.dedup();
    let y = simulate(spec);
    let runs: BTreeMap<Source, std::result::Result<PipelineResult<T>, String>> = sources
        .into_iter()
        .map(|s| {
            let r = y
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|y| run_pipeline(y, &cfg.pipeline(s)).map_err(|e| e.to_string()));
            (s, r)
        })
        .collect();
    cfg.methods
        .iter()
        .map(|&m| {
            let r = match &runs[&m.source()] {
                Ok(res) => Ok(outcome(res, m.post_processed(), truth, cfg.n)),
                Err(e) => Err(e.clone()),
            };
            (m, r)
        })
        .collect()
}

/// Runs every method on `reps` simulated series. Replicate `r` draws from
/// stream `r` of `seed`, so the report does not depend on thread count.
/// Pipeline failures are counted per method and never abort the batch.
pub fn run_bench<T: Scalar>(cfg: &BenchConfig<T>) -> Result<EvalReport> {
    if cfg.reps == 0 {
        return Err(Error::InvalidSpec("reps must be >= 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidSpec("no methods requested".into()));
    }
    let started = std::time::Instant::now();
    let base = cfg.design.spec(cfg.n, cfg.seed)?;
    let true_changepoints = base.change_points();
    let truth: Vec<f64> = true_changepoints
        .iter()
        .map(|&t| t as f64 / cfg.n as f64)
        .collect();

    let per_rep: Vec<ReplicateResults> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_replicate(cfg, &base.clone().with_stream(r as u64), &truth))
        .collect();

    let true_phi = cfg.design.phi();
    let mut methods = BTreeMap::new();
    for &m in &cfg.methods {
        let mut report = MethodReport {
            replicates: Vec::with_capacity(cfg.reps),
            failures: 0,
            failure_reasons: BTreeMap::new(),
            selection_histogram: BTreeMap::new(),
            changepoint_frequencies: BTreeMap::new(),
            mean_d1: None,
            mean_d2: None,
            mean_hausdorff: None,
            phi_rmse: Vec::new(),
        };
        for rep in &per_rep {
            match &rep[&m] {
                Ok(o) => {
                    *report.selection_histogram.entry(o.m_hat).or_default() += 1;
                    for &t in &o.changepoints {
                        *report.changepoint_frequencies.entry(t).or_default() += 1;
                    }
                    report.replicates.push(Some(o.clone()));
                }
                Err(e) => {
                    report.failures += 1;
                    *report.failure_reasons.entry(e.clone()).or_default() += 1;
                    report.replicates.push(None);
                }
            }
        }
        report.mean_d1 = mean(report.successes().map(|o| o.d1));
        report.mean_d2 = mean(report.successes().map(|o| o.d2));
        report.mean_hausdorff = mean(report.successes().map(|o| o.hausdorff));
        if m.source() == Source::Robust {
            let est: Vec<Vec<f64>> = report.successes().map(|o| o.phi_hat.clone()).collect();
            let truth: Vec<f64> = true_phi.iter().map(|v| v.as_f64()).collect();
            if !est.is_empty() {
                report.phi_rmse = phi_rmse(&est, &truth)?;
            }
        }
        methods.insert(m, report);
    }

    Ok(EvalReport {
        schema: crate::SCHEMA.to_string(),
        design: match &cfg.design {
            Design::Ar1 { rho, sigma } => Design::Ar1 {
                rho: rho.as_f64(),
                sigma: sigma.as_f64(),
            },
            Design::Arp { phi, sigma } => Design::Arp {
                phi: phi.iter().map(|v| v.as_f64()).collect(),
                sigma: sigma.as_f64(),
            },
        },
        n: cfg.n,
        reps: cfg.reps,
        seed: cfg.seed,
        m_max: cfg.m_max,
        min_seg_len: cfg.min_seg_len,
        true_changepoints,
        methods,
        runtime: Some(started.elapsed()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hausdorff_examples() {
        let h = hausdorff_parts(&[0.25, 0.5], &[0.25, 0.5]);
        assert_eq!((h.d1, h.d2, h.hausdorff), (0.0, 0.0, 0.0));
        let h = hausdorff_parts(&[0.25, 0.5], &[0.25, 0.5, 0.9]);
        assert!((h.d1 - 0.4).abs() < 1e-12 && h.d2 == 0.0 && (h.hausdorff - 0.4).abs() < 1e-12);
        let h = hausdorff_parts(&[0.25, 0.5], &[0.25]);
        assert_eq!((h.d1, h.d2), (0.0, 0.25));
        let h = hausdorff_parts(&[0.3, 0.9], &[]);
        assert_eq!(h.d1, 0.0);
        assert!((h.d2 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(phi_rmse(&[vec![0.5], vec![0.5]], &[0.5]).unwrap(), vec![0.0]);
        let r = phi_rmse(&[vec![0.4], vec![0.6]], &[0.5]).unwrap();
        assert!((r[0] - 0.1f64).abs() < 1e-12);
        assert!(matches!(phi_rmse::<f64>(&[], &[0.5]), Err(Error::Empty)));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn noiseless_replicate_is_exact() {
        let mut cfg = BenchConfig::new(Design::Ar1 { rho: 0.3, sigma: 1e-9 }, 1600, 1, 3);
        cfg.methods = vec![Method::RobustP];
        let report = run_bench(&cfg).unwrap();
        let r = &report.methods[&Method::RobustP];
        assert_eq!(r.failures, 0);
        let o = r.replicates[0].as_ref().unwrap();
        assert_eq!(o.m_hat, 6);
        assert_eq!(o.hausdorff, 0.0);
        assert_eq!(report.true_changepoints, o.changepoints);
    }
}
