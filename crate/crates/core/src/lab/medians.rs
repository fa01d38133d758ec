//! Median and scaling-law experiments for norm functionals on the sphere.

use serde::{Deserialize, Serialize};

use super::{
    draw_sphere_batch, evaluate_functional, median_with_ci, normalized_median_exponent,
    scaling_fit, Functional, ProfileSpec, SampleMachine, ScalingModel, WindowCtx, WindowSpec,
};
use crate::error::{CoreError, Result};
use crate::eval::{batch_sup, SupOptions};
use crate::measures::RandomLaw;
use crate::report::{config_hash, FitReport, StatPoint};
use crate::spectral::single_level_window;
use crate::stats;

/// One functional, one window: median/mean statistics with bootstrap CIs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MedianConfig {
    #[serde(flatten)]
    pub window: WindowSpec,
    #[serde(flatten)]
    pub functional: Functional,
    pub law: RandomLaw,
    #[serde(default)]
    pub profile: ProfileSpec,
    pub samples: u64,
    pub seed: u64,
}

pub fn norm_statistics_experiment(cfg: &MedianConfig) -> Result<FitReport> {
    let start = std::time::Instant::now();
    if cfg.samples == 0 {
        return Err(CoreError::InvalidConfig("samples must be positive".into()));
    }
    let ctx = WindowCtx::new(cfg.window.build()?)?;
    let machine = SampleMachine::new(&cfg.law, &cfg.profile, ctx.n())?;
    let coeffs = draw_sphere_batch(&machine.profile, &machine.sampler, cfg.seed, cfg.samples)?;
    let values = evaluate_functional(&ctx, &cfg.functional, &coeffs)?;

    let (median, lo, hi) = median_with_ci(&values, cfg.seed, 0);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    let mean_se = (var / values.len() as f64).sqrt();
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);

    let mut report = FitReport::new("median", cfg.seed, config_hash(cfg));
    report.points.push(StatPoint {
        abscissa: 0.0,
        statistic: median,
        ci_lo: lo,
        ci_hi: hi,
        n_samples: cfg.samples,
    });
    report.constants.insert("median".into(), median);
    report.constants.insert("mean".into(), mean);
    report.constants.insert("mean_se".into(), mean_se);
    report.constants.insert("iqr".into(), iqr);
    report
        .constants
        .insert("mean_median_rel_gap".into(), (mean - median).abs() / median.abs().max(1e-300));
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Median of `‖u‖_{L^{r, θ(r/2-1)}}` across an r-grid at one level, with the
/// normalized statistic `median · h^{-(d-θ)/4·(1-2/r)}` fitted in log-log
/// against r.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LrConfig {
    pub d: usize,
    pub k: usize,
    pub r_grid: Vec<f64>,
    pub theta: f64,
    pub law: RandomLaw,
    #[serde(default)]
    pub profile: ProfileSpec,
    pub samples: u64,
    pub seed: u64,
}

pub fn lr_median_scaling_experiment(cfg: &LrConfig) -> Result<FitReport> {
    let start = std::time::Instant::now();
    if cfg.r_grid.iter().any(|&r| r < 2.0) {
        return Err(CoreError::InvalidConfig(
            "r-grid must lie in [2, ∞) for the median scaling law".into(),
        ));
    }
    let window = single_level_window(cfg.d, cfg.k)?;
    let h = window.h;
    let ctx = WindowCtx::new(window)?;
    let machine = SampleMachine::new(&cfg.law, &cfg.profile, ctx.n())?;
    // One shared sample set, evaluated at every r (paired across r).
    let coeffs = draw_sphere_batch(&machine.profile, &machine.sampler, cfg.seed, cfg.samples)?;

    let mut report = FitReport::new("lr_median_scaling", cfg.seed, config_hash(cfg));
    report.model = Some("median * h^{-(d-θ)/4 (1-2/r)} ~ C r^slope".into());
    let log_n = (ctx.n() as f64).ln();
    let r_max = cfg.r_grid.iter().cloned().fold(2.0f64, f64::max);
    report.constants.insert("log_n".into(), log_n);
    if r_max > log_n {
        report.notes.push(format!(
            "r-grid reaches {r_max}, beyond log N = {log_n:.2}: the √r median law \
             is established only for r ≲ log N; larger r values are exploratory"
        ));
    }
    let mut fit_points = Vec::new();
    for (idx, &r) in cfg.r_grid.iter().enumerate() {
        let functional = Functional::WeightedLr { r, theta: cfg.theta };
        let values = evaluate_functional(&ctx, &functional, &coeffs)?;
        let (median, lo, hi) = median_with_ci(&values, cfg.seed, idx as u64);
        let scale = h.powf(-normalized_median_exponent(cfg.d, r, cfg.theta));
        let y = median * scale;
        report.points.push(StatPoint {
            abscissa: r,
            statistic: y,
            ci_lo: lo * scale,
            ci_hi: hi * scale,
            n_samples: cfg.samples,
        });
        report.constants.insert(format!("median_r{r}"), median);
        report
            .constants
            .insert(format!("normalized_r{r}"), y);
        // Band diagnostic: the two-sided estimate says y/√r sits in [C0, C1].
        report
            .constants
            .insert(format!("c_over_sqrt_r_r{r}"), y / r.sqrt());
        fit_points.push((r, y));
    }
    if fit_points.len() >= 4 {
        let fit = scaling_fit(&fit_points, ScalingModel::SqrtR)?;
        report
            .constants
            .insert("slope".into(), fit.constant("slope").unwrap());
        report.r_squared = fit.r_squared;
    }
    let cs: Vec<f64> = cfg
        .r_grid
        .iter()
        .map(|r| report.constant(&format!("c_over_sqrt_r_r{r}")).unwrap())
        .collect();
    let cmax = cs.iter().copied().fold(0.0f64, f64::max);
    let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
    report.constants.insert("band_upper".into(), cmax);
    report.constants.insert("band_lower".into(), cmin);
    report.constants.insert("band_ratio".into(), cmax / cmin);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Weighted sup-norm medians across a k-grid of single-level windows:
/// per-k median of `‖u‖_{L^{∞,θ/2}} · h^{-(d-θ)/4}` with a `C √log(1/h)`
/// fit, plus the band `[C₀, C₁]·√log(1/h)` covering the bulk of samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinftyConfig {
    pub d: usize,
    pub k_grid: Vec<usize>,
    pub theta: f64,
    pub law: RandomLaw,
    #[serde(default)]
    pub profile: ProfileSpec,
    pub samples: u64,
    pub seed: u64,
    #[serde(default = "default_ppw")]
    pub points_per_wavelength: f64,
}

fn default_ppw() -> f64 {
    5.0
}

pub fn linfty_scaling_experiment(cfg: &LinftyConfig) -> Result<FitReport> {
    let start = std::time::Instant::now();
    if cfg.d < 2 {
        return Err(CoreError::InvalidConfig(
            "the sup-norm law needs d ≥ 2".into(),
        ));
    }
    if cfg.k_grid.iter().any(|&k| k < 2) {
        return Err(CoreError::InvalidConfig("k-grid must start at k ≥ 2".into()));
    }
    let mut report = FitReport::new("linfty_scaling", cfg.seed, config_hash(cfg));
    report.model = Some("median ~ C sqrt(log 1/h)".into());
    let opts = SupOptions {
        points_per_wavelength: cfg.points_per_wavelength,
        polish_rounds: 3,
    };
    let mut fit_points = Vec::new();
    let mut per_k_normalized: Vec<(usize, Vec<f64>)> = Vec::new();
    for (idx, &k) in cfg.k_grid.iter().enumerate() {
        let window = single_level_window(cfg.d, k)?;
        let h = window.h;
        let ctx = WindowCtx::new(window)?;
        let machine = SampleMachine::new(&cfg.law, &cfg.profile, ctx.n())?;
        let sub_seed = crate::rng::stream_seed(cfg.seed, 1000 + idx as u64);
        let coeffs = draw_sphere_batch(&machine.profile, &machine.sampler, sub_seed, cfg.samples)?;
        let sups = batch_sup(ctx.basis.as_ref().unwrap(), &coeffs, &ctx.window, cfg.theta, &opts)?;
        let scale = h.powf(-(cfg.d as f64 - cfg.theta) / 4.0);
        let values: Vec<f64> = sups.into_iter().map(|s| s.value * scale).collect();
        let (median, lo, hi) = median_with_ci(&values, cfg.seed, idx as u64);
        report.points.push(StatPoint {
            abscissa: k as f64,
            statistic: median,
            ci_lo: lo,
            ci_hi: hi,
            n_samples: cfg.samples,
        });
        fit_points.push((h, median));
        per_k_normalized.push((k, values));
    }
    if fit_points.len() >= 4 {
        let fit = scaling_fit(&fit_points, ScalingModel::SqrtLog)?;
        report
            .constants
            .insert("C".into(), fit.constant("C").unwrap());
        report.r_squared = fit.r_squared;
    }
    // Band: per-k extreme quantiles scaled by √log(1/h), widened across k.
    let mut c0 = f64::INFINITY;
    let mut c1 = 0.0f64;
    for (k, values) in &per_k_normalized {
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let root_log = (*k as f64).ln().sqrt();
        c0 = c0.min(stats::quantile_sorted(&sorted, 0.002) / root_log);
        c1 = c1.max(stats::quantile_sorted(&sorted, 0.998) / root_log);
    }
    let mut min_coverage = 1.0f64;
    for (k, values) in &per_k_normalized {
        let root_log = (*k as f64).ln().sqrt();
        let inside = values
            .iter()
            .filter(|&&v| v >= c0 * root_log && v <= c1 * root_log)
            .count();
        min_coverage = min_coverage.min(inside as f64 / values.len() as f64);
    }
    report.constants.insert("band_c0".into(), c0);
    report.constants.insert("band_c1".into(), c1);
    report.constants.insert("band_ratio".into(), c1 / c0);
    report.constants.insert("band_min_coverage".into(), min_coverage);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
