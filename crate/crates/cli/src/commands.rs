use std::path::Path;

use anyhow::{bail, Context, Result};
use arseg::autocorr::{autocorr_vector, phi_hat, phi_hat_auto, rho_cauchy, rho_ma_genton, rho_tilde};
use arseg::evaluate::{run_bench, BenchConfig, Design, Method};
use arseg::pipeline::{check_series, run_pipeline, Estimator, LambdaPolicy, PipelineConfig};
use arseg::robust_scale::QnConfig;
use arseg::select::{SelectionConfig, SelectionMode};
use arseg::series::RealSeries;
use arseg::sim::{design_ar1, design_arp, simulate as simulate_series, InnovationFamily, SeriesSpec};
use arseg::{hausdorff_parts, postprocess as pp, sigma_tilde_sq_mc, test_rho_zero, SCHEMA};
use clap::error::ErrorKind;
use clap::{CommandFactory, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::io::{emit, read_json, read_values, write_csv_rows, write_json, write_values};
use crate::{
    BenchArgs, Cli, DesignArgs, DesignKind, EvaluateArgs, Family, InputArgs, PhiArgs, PostprocessArgs,
    RhoArgs, RhoKind, SegMethod, SegmentArgs, Selection, SimulateArgs,
};

/// Contents of `truth.json`.
#[derive(Serialize, Deserialize)]
pub struct Truth {
    pub schema: String,
    pub presample: usize,
    pub n: usize,
    pub changepoints: Vec<usize>,
    pub fractions: Vec<f64>,
    pub spec: SeriesSpec<f64>,
}

/// Reports a usage error the way clap does (exit code 2).
fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn coefficients(rho: Option<f64>, phi: &Option<crate::RealList>) -> Option<Vec<f64>> {
    match (rho, phi) {
        (Some(_), Some(_)) => usage("give either --rho or --phi, not both"),
        (Some(r), None) => Some(vec![r]),
        (None, Some(p)) => Some(p.0.clone()),
        (None, None) => None,
    }
}

fn design(args: &DesignArgs) -> Design<f64> {
    match args.design {
        DesignKind::Ar1 => {
            if args.phi.is_some() {
                usage("--design ar1 takes --rho");
            }
            Design::Ar1 {
                rho: args.rho.unwrap_or_else(|| usage("--design ar1 requires --rho")),
                sigma: args.sigma,
            }
        }
        DesignKind::Arp => Design::Arp {
            phi: coefficients(args.rho, &args.phi).unwrap_or_else(|| usage("--design arp requires --phi")),
            sigma: args.sigma,
        },
    }
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let d = design(&args.design);
    let mut spec = match &d {
        Design::Ar1 { rho, sigma } => design_ar1(args.design.n, *rho, *sigma, args.design.seed)?,
        Design::Arp { phi, sigma } => design_arp(args.design.n, phi.clone(), *sigma, args.design.seed)?,
    }
    .with_stream(args.stream);
    if args.family == Family::Cauchy {
        spec.ar.family = InnovationFamily::Cauchy {
            location: 0.0,
            scale: 1.0,
        };
    }
    let y = simulate_series(&spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    write_values(&args.out_dir.join("series.csv"), y.values())?;
    let truth = Truth {
        schema: SCHEMA.into(),
        presample: spec.presample,
        n: spec.n,
        changepoints: spec.change_points(),
        fractions: spec.change_fractions(),
        spec,
    };
    write_json(&args.out_dir.join("truth.json"), &truth)
}

fn load_series(input: &InputArgs, default_presample: usize) -> Result<RealSeries<f64>> {
    let values = read_values(&input.input)?;
    let presample = match (&input.truth, input.presample) {
        (Some(path), _) => read_json::<Truth>(path)?.presample,
        (None, Some(p)) => p,
        (None, None) => default_presample,
    };
    Ok(RealSeries::new(values, presample)?)
}

fn qn_config(constant: Option<f64>) -> Result<QnConfig<f64>> {
    Ok(match constant {
        Some(c) => QnConfig::with_constant(c)?,
        None => QnConfig::default(),
    })
}

pub fn rho(args: RhoArgs) -> Result<()> {
    let y = load_series(&args.input, 1)?;
    let estimate = match args.method {
        RhoKind::MedianDiff => rho_tilde(&y)?,
        RhoKind::Cauchy => rho_cauchy(&y)?,
        RhoKind::MaGenton => rho_ma_genton(y.values(), 1, &QnConfig::default())?,
    };
    let diagnostics = match args.diagnostic_rho {
        Some(rho_star) => {
            let mut d = sigma_tilde_sq_mc(
                rho_star,
                args.diagnostic_sigma,
                args.truncation_lag,
                args.mc_reps,
                args.seed,
            )?;
            d.z_stat = Some(test_rho_zero(&y, &d)?);
            Some(d)
        }
        None => None,
    };
    emit(
        None,
        &json!({ "schema": SCHEMA, "estimate": estimate, "diagnostics": diagnostics }),
    )
}

pub fn phi(args: PhiArgs) -> Result<()> {
    let y = load_series(&args.input, args.p)?;
    let qn = qn_config(args.qn_constant)?;
    let acv = autocorr_vector(&y, args.p + 1, &qn)?;
    let estimate = match args.lambda {
        Some(l) => phi_hat(&acv, args.p, l)?,
        None => phi_hat_auto(&acv, args.p, y.n())?,
    };
    emit(
        None,
        &json!({ "schema": SCHEMA, "autocorrelations": acv.rho, "estimate": estimate }),
    )
}

fn pipeline_config(args: &SegmentArgs) -> Result<(PipelineConfig<f64>, usize)> {
    let oracle = coefficients(args.rho, &args.phi);
    let robust = || match args.p {
        0 => Estimator::None,
        1 if args.cauchy => Estimator::Cauchy,
        1 => Estimator::MedianDiff,
        p => Estimator::MaGenton { p },
    };
    let known = || oracle.clone().unwrap_or_else(|| usage("oracle methods require --rho or --phi"));
    let (estimator, postprocess) = match args.method {
        SegMethod::Ls => (Estimator::None, false),
        SegMethod::Robust => (robust(), false),
        SegMethod::RobustP => (robust(), true),
        SegMethod::Oracle => (Estimator::Fixed { phi: known() }, false),
        SegMethod::OracleP => (Estimator::Fixed { phi: known() }, true),
        SegMethod::Joint => (Estimator::None, true),
    };
    let default_presample = match &estimator {
        Estimator::None => 0,
        Estimator::Fixed { phi } => phi.len(),
        Estimator::MedianDiff | Estimator::Cauchy => 1,
        Estimator::MaGenton { p } => *p,
    };
    let mode = match (args.method, args.selection) {
        (SegMethod::Joint, Selection::Beta) => usage("--method joint uses the modified BIC"),
        (SegMethod::Joint, _) => SelectionMode::JointMp,
        (_, Selection::Mbic) => SelectionMode::Mbic,
        (_, Selection::Beta) => SelectionMode::BetaPenalty,
    };
    let cfg = PipelineConfig {
        estimator,
        selection: SelectionConfig {
            mode,
            beta_exponent: args.beta,
            m_max: args.m_max,
            p_max: args.p_max,
            min_seg_len: args.min_seg_len,
        },
        postprocess,
        qn: qn_config(args.qn_constant)?,
        lambda: match args.lambda {
            Some(lambda) => LambdaPolicy::Fixed { lambda },
            None => LambdaPolicy::Auto,
        },
    };
    Ok((cfg, default_presample))
}

pub fn segment(args: SegmentArgs, path_only: bool) -> Result<()> {
    let (cfg, default_presample) = pipeline_config(&args)?;
    let y = load_series(&args.input, default_presample)?;
    check_series(&y)?;
    let r = run_pipeline(&y, &cfg)?;
    let method = args.method.to_possible_value().map(|v| v.get_name().to_owned());
    let report = if path_only {
        json!({
            "schema": SCHEMA,
            "method": method,
            "phi_hat": r.phi,
            "m_hat": r.criterion.m_hat,
            "p_hat": r.criterion.p_hat.unwrap_or(r.p),
            "criterion": r.criterion,
            "warnings": r.warnings,
        })
    } else {
        json!({
            "schema": SCHEMA,
            "method": method,
            "n": y.n(),
            "presample": y.presample_len(),
            "p": r.p,
            "phi_hat": r.phi,
            "rho_estimate": r.rho_estimate,
            "phi_estimate": r.phi_estimate,
            "m_hat": r.m_hat,
            "m_hat_raw": r.m_hat_raw,
            "changepoints": r.changepoints,
            "changepoints_raw": r.changepoints_raw,
            "levels": r.levels,
            "delta": r.delta,
            "ss": r.ss,
            "n_eff": r.n_eff,
            "offset": r.offset,
            "criterion": r.criterion,
            "warnings": r.warnings,
        })
    };
    emit(args.output.as_deref(), &report)
}

pub fn postprocess(args: PostprocessArgs) -> Result<()> {
    let kept = pp(&args.changepoints.0, args.p, args.n)?;
    emit(
        None,
        &json!({ "schema": SCHEMA, "p": args.p, "n": args.n, "changepoints": kept }),
    )
}

#[derive(Deserialize)]
struct EstimateFile {
    changepoints: Vec<usize>,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let (truth, n) = match (&args.truth, &args.true_changepoints) {
        (Some(path), _) => {
            let t: Truth = read_json(path)?;
            (t.changepoints, args.n.unwrap_or(t.n))
        }
        (None, Some(t)) => (t.0.clone(), args.n.expect("clap enforces --n")),
        (None, None) => unreachable!("clap enforces a truth source"),
    };
    let est = match (&args.estimate, &args.changepoints) {
        (Some(path), _) => read_json::<EstimateFile>(path)?.changepoints,
        (None, Some(c)) => c.0.clone(),
        (None, None) => unreachable!("clap enforces an estimate source"),
    };
    if n == 0 {
        bail!("n must be positive");
    }
    let frac = |v: &[usize]| -> Vec<f64> { v.iter().map(|&t| t as f64 / n as f64).collect() };
    let h = hausdorff_parts(&frac(&truth), &frac(&est));
    emit(
        None,
        &json!({ "schema": SCHEMA, "n": n, "d1": h.d1, "d2": h.d2, "hausdorff": h.hausdorff }),
    )
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let methods = args
        .methods
        .split(',')
        .map(|s| s.trim().parse::<Method>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .unwrap_or_else(|e| usage(e));
    let mut cfg = BenchConfig::new(design(&args.design), args.design.n, args.reps, args.design.seed);
    cfg.methods = methods;
    cfg.m_max = args.m_max;
    cfg.min_seg_len = args.min_seg_len;
    let report = run_bench(&cfg)?;

    let dir: &Path = &args.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_json(&dir.join("report.json"), &report)?;
    for (method, r) in &report.methods {
        let name = method.name();
        write_csv_rows(
            &dir.join(format!("histogram_{name}.csv")),
            ["m_hat", "count"],
            r.selection_histogram.iter().map(|(m, c)| (m.to_string(), *c)),
        )?;
        write_csv_rows(
            &dir.join(format!("frequencies_{name}.csv")),
            ["index", "count"],
            r.changepoint_frequencies.iter().map(|(t, c)| (t.to_string(), *c)),
        )?;
        let mode = r.selection_histogram.iter().max_by_key(|(m, c)| (**c, std::cmp::Reverse(**m)));
        println!(
            "{name:>9}: mode m_hat = {:?}, failures = {}, mean hausdorff = {:?}",
            mode.map(|(m, _)| *m),
            r.failures,
            r.mean_hausdorff
        );
    }
    if let Some(t) = report.runtime {
        eprintln!("elapsed: {:.2}s", t.as_secs_f64());
    }
    Ok(())
}
