use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;

use hermrand_core::lab::{run_experiment, ExperimentConfig};
use hermrand_core::report::{config_hash, FitReport, ARTIFACT_VERSION};
use hermrand_core::selftest::{all_passed, run_selftest, Fault};
use hermrand_core::spectral::{
    beta_exponent, enumerate_window, heat_kernel_diag_closed, heat_kernel_diag_series,
    single_level_window, spectral_function, spectral_increment_norm, weyl_count, SpectralWindow,
};
use hermrand_core::{grid::QuadratureGrid, CoreError};

use crate::manifest::{ManifestEntry, RunManifest};

const EXIT_OK: i32 = 0;
const EXIT_CHECK_FAILURE: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_INSUFFICIENT: i32 = 3;

fn exit_code_for(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::InsufficientSamples(_)) => EXIT_INSUFFICIENT,
        Some(
            CoreError::InvalidConfig(_)
            | CoreError::InvalidLaw(_)
            | CoreError::InvalidWindow(_)
            | CoreError::DomainError(_)
            | CoreError::LengthMismatch { .. },
        ) => EXIT_USAGE,
        _ => EXIT_CHECK_FAILURE,
    }
}

#[derive(Args)]
pub struct SpectralArgs {
    /// Dimension d ≥ 1.
    #[arg(long)]
    dim: usize,

    /// Single-eigenvalue window of this level (h = 1/k).
    #[arg(long, conflicts_with_all = ["h", "a", "b"])]
    level: Option<usize>,

    /// Window parameters for I = [a/h, b/h).
    #[arg(long, requires_all = ["a", "b"])]
    h: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,

    /// Radial resolution of the e_x profile.
    #[arg(long, default_value_t = 200)]
    grid_res: usize,

    /// Weighted increment norm: exponent p (with --theta).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,

    /// Also write Mehler-identity residuals at this time parameter.
    #[arg(long)]
    mehler: bool,
    #[arg(long, default_value_t = 0.5)]
    t: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn build_window(args: &SpectralArgs) -> anyhow::Result<Option<SpectralWindow>> {
    if let Some(k) = args.level {
        return Ok(Some(single_level_window(args.dim, k)?));
    }
    match (args.h, args.a, args.b) {
        (Some(h), Some(a), Some(b)) => Ok(Some(enumerate_window(args.dim, h, a, b)?)),
        (None, None, None) => Ok(None),
        _ => Err(anyhow!(CoreError::InvalidConfig(
            "--h requires --a and --b".into()
        ))),
    }
}

pub fn run_spectral(args: &SpectralArgs, out: &Path) -> i32 {
    match spectral_inner(args, out) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn spectral_inner(args: &SpectralArgs, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out)?;
    let hash = config_hash(&serde_json::json!({
        "dim": args.dim, "level": args.level, "h": args.h, "a": args.a, "b": args.b,
        "grid_res": args.grid_res, "p": args.p, "theta": args.theta,
        "mehler": args.mehler, "t": args.t,
    }));
    let mut files = Vec::new();
    let window = build_window(args)?;

    if let Some(w) = &window {
        if w.is_empty() {
            return Err(anyhow!(CoreError::EmptyWindow));
        }
        // e_x along radii, 8 directions, with the rotation-invariance spread.
        let path = out.join("spectral_profile.csv");
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record([
            "radius",
            "e_mean",
            "e_min",
            "e_max",
            "rel_spread",
            "seed",
            "config_hash",
            "version",
        ])?;
        let lambda = w.b_h / w.h;
        let r_cut = 1.5 * lambda.sqrt();
        for i in 0..args.grid_res {
            let r = r_cut * i as f64 / (args.grid_res - 1).max(1) as f64;
            let mut vals = Vec::with_capacity(8);
            for dir in 0..8 {
                let phi = std::f64::consts::PI / 4.0 * dir as f64;
                let mut x = vec![0.0; w.dimension];
                x[0] = r * phi.cos();
                if w.dimension > 1 {
                    x[1] = r * phi.sin();
                }
                vals.push(spectral_function(w, &x)?);
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(0.0f64, f64::max);
            let spread = if mean > 0.0 { (max - min) / mean } else { 0.0 };
            writer.write_record([
                format!("{r}"),
                format!("{mean}"),
                format!("{min}"),
                format!("{max}"),
                format!("{spread}"),
                format!("{}", args.seed),
                hash.clone(),
                ARTIFACT_VERSION.to_string(),
            ])?;
        }
        writer.flush()?;
        files.push(path);

        // Exact Weyl counts up to the window's top energy (at least λ=50).
        let path = out.join("weyl.csv");
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record([
            "lambda",
            "count",
            "ratio_to_leading",
            "seed",
            "config_hash",
            "version",
        ])?;
        let d = w.dimension;
        let leading = |lam: f64| {
            let dfact: f64 = (1..=d).map(|i| i as f64).product();
            lam.powi(d as i32) / (2.0f64.powi(d as i32) * dfact)
        };
        let top = (w.b_h / w.h).max(50.0);
        let mut lam = d as f64;
        while lam <= top {
            let c = weyl_count(d, lam);
            writer.write_record([
                format!("{lam}"),
                format!("{c}"),
                format!("{}", c as f64 / leading(lam)),
                format!("{}", args.seed),
                hash.clone(),
                ARTIFACT_VERSION.to_string(),
            ])?;
            lam += 2.0;
        }
        writer.flush()?;
        files.push(path);

        // Weighted increment norm on request.  The ⟨x⟩-weight makes the
        // integrand non-polynomial, so leave generous headroom in the order.
        if let Some(p) = args.p {
            let order = ((p * w.max_degree() as f64).ceil() as usize + 72)
                .min(hermrand_core::quadrature::MAX_ORDER);
            let grid = QuadratureGrid::tensor_gauss_hermite(w.dimension, order, p)?;
            let norm = spectral_increment_norm(w, p, args.theta, &grid)?;
            if norm.is_coarse() {
                eprintln!(
                    "warning: grid too coarse, truncation estimate {:.2e}",
                    norm.truncation_rel
                );
            }
            let path = out.join("increment.csv");
            let mut writer = csv::Writer::from_path(&path)?;
            writer.write_record([
                "p",
                "theta",
                "value",
                "n_h",
                "h",
                "normalized",
                "truncation_rel",
                "seed",
                "config_hash",
                "version",
            ])?;
            let beta = beta_exponent(w.dimension, 2.0 * p, args.theta);
            let normalized = norm.value / (w.n_total() as f64 * w.h.powf(beta));
            writer.write_record([
                format!("{p}"),
                format!("{}", args.theta),
                format!("{}", norm.value),
                format!("{}", w.n_total()),
                format!("{}", w.h),
                format!("{normalized}"),
                format!("{}", norm.truncation_rel),
                format!("{}", args.seed),
                hash.clone(),
                ARTIFACT_VERSION.to_string(),
            ])?;
            writer.flush()?;
            files.push(path);
        }
    }

    if args.mehler {
        if !(args.t > 0.0) {
            return Err(anyhow!(CoreError::NonPositiveTime(args.t)));
        }
        let path = out.join("mehler.csv");
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record([
            "dim",
            "t",
            "radius",
            "closed",
            "series",
            "rel_residual",
            "seed",
            "config_hash",
            "version",
        ])?;
        let lambda_max = (14.0 * std::f64::consts::LN_10 / args.t).max(60.0);
        let mut worst = 0.0f64;
        for i in 0..5 {
            let r = i as f64;
            let x = vec![r / (args.dim as f64).sqrt(); args.dim];
            let closed = heat_kernel_diag_closed(args.dim, args.t, &x)?;
            let series = heat_kernel_diag_series(args.dim, args.t, &x, lambda_max)?;
            let resid = (series / closed - 1.0).abs();
            worst = worst.max(resid);
            writer.write_record([
                format!("{}", args.dim),
                format!("{}", args.t),
                format!("{r}"),
                format!("{closed}"),
                format!("{series}"),
                format!("{resid}"),
                format!("{}", args.seed),
                hash.clone(),
                ARTIFACT_VERSION.to_string(),
            ])?;
        }
        writer.flush()?;
        println!("mehler worst relative residual: {worst:.3e}");
        files.push(path);
    }

    if files.is_empty() {
        return Err(anyhow!(CoreError::InvalidConfig(
            "nothing to do: pass --level, --h/--a/--b, or --mehler".into()
        )));
    }
    Ok(files)
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// One of: tail, median, linfty, lr, basis, besov, concentration.
    pub kind: String,

    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,

    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run_experiment_cmd(args: &ExperimentArgs, out: &Path) -> i32 {
    match experiment_inner(args, out) {
        Ok(report) => {
            println!(
                "{}: {} points, seed {}, hash {}…",
                report.experiment,
                report.points.len(),
                report.seed,
                &report.config_hash[..12]
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn parse_config(kind: &str, path: &Path, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let known = ["tail", "median", "linfty", "lr", "basis", "besov", "concentration"];
    if !known.contains(&kind) {
        return Err(anyhow!(CoreError::InvalidConfig(format!(
            "unknown experiment kind `{kind}`"
        ))));
    }
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(|e| anyhow!(CoreError::InvalidConfig(format!("{e:#}"))))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| anyhow!(CoreError::InvalidConfig(format!("config is not JSON: {e}"))))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| anyhow!(CoreError::InvalidConfig("config must be a JSON object".into())))?;
    match obj.get("experiment").and_then(|v| v.as_str()) {
        Some(tag) if tag != kind => {
            return Err(anyhow!(CoreError::InvalidConfig(format!(
                "config tagged `{tag}` but subcommand is `{kind}`"
            ))));
        }
        Some(_) => {}
        None => {
            obj.insert("experiment".into(), serde_json::Value::String(kind.into()));
        }
    }
    let cfg: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| anyhow!(CoreError::InvalidConfig(format!("config schema: {e}"))))?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn experiment_inner(args: &ExperimentArgs, out: &Path) -> anyhow::Result<FitReport> {
    let cfg = parse_config(&args.kind, &args.config, args.seed)?;
    std::fs::create_dir_all(out)?;
    let report = run_experiment(&cfg).map_err(anyhow::Error::from)?;

    let mut extra_outputs = Vec::new();
    if let ExperimentConfig::Basis(basis_cfg) = &cfg {
        // Coefficient matrices regenerate deterministically per (k, seed);
        // export them for reproducibility audits when asked.
        if basis_cfg.export_matrices {
            for &k in &basis_cfg.k_grid {
                for &seed in &basis_cfg.seeds {
                    let eb = hermrand_core::basis::random_eigenbasis(
                        basis_cfg.dimension,
                        k,
                        seed,
                    )?;
                    let name = format!("basis_k{k}_seed{seed}.json");
                    std::fs::write(out.join(&name), serde_json::to_string(&eb.export_json())?)?;
                    extra_outputs.push(name);
                }
            }
        }
    }

    let json_path = out.join(format!("{}_report.json", args.kind));
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;

    let csv_path = out.join(format!("{}_points.csv", args.kind));
    let mut writer = csv::Writer::from_path(&csv_path)?;
    writer.write_record([
        "abscissa",
        "statistic",
        "ci_lo",
        "ci_hi",
        "n_samples",
        "seed",
        "config_hash",
        "version",
    ])?;
    for p in &report.points {
        writer.write_record([
            format!("{}", p.abscissa),
            format!("{}", p.statistic),
            format!("{}", p.ci_lo),
            format!("{}", p.ci_hi),
            format!("{}", p.n_samples),
            format!("{}", report.seed),
            report.config_hash.clone(),
            report.version.clone(),
        ])?;
    }
    writer.flush()?;

    let mut outputs = vec![
        json_path.file_name().unwrap().to_string_lossy().into_owned(),
        csv_path.file_name().unwrap().to_string_lossy().into_owned(),
    ];
    outputs.extend(extra_outputs);
    let mut manifest = RunManifest::load_or_new(out);
    manifest.record(ManifestEntry {
        experiment: report.experiment.clone(),
        config_hash: report.config_hash.clone(),
        seed: report.seed,
        outputs,
        runtime_ms: report.runtime_ms,
    });
    manifest.save(out)?;
    Ok(report)
}

#[derive(Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fault injection for testing the failure path.
    #[arg(long, hide = true)]
    corrupt_quadrature: bool,
}

pub fn run_selftest_cmd(args: &SelftestArgs) -> i32 {
    let fault = args.corrupt_quadrature.then_some(Fault::CorruptQuadrature);
    let results = run_selftest(args.seed, fault);
    for r in &results {
        let status = if r.passed { "ok  " } else { "FAIL" };
        println!("{status} {:<32} {}", r.name, r.detail);
    }
    if all_passed(&results) {
        println!("selftest: all {} checks passed", results.len());
        EXIT_OK
    } else {
        let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        eprintln!("selftest: failing checks: {}", failed.join(", "));
        EXIT_CHECK_FAILURE
    }
}
