//! Tail experiment for the linear form `u ↦ u(x₀)` on the sphere measure.
//!
//! The empirical CCDF of `|u(x₀)|` is recorded on a `t`-grid expressed as
//! fractions of the deterministic cap `√e_L` (Cauchy–Schwarz gives
//! `|u(x₀)| ≤ √e_L` for every unit `u`).  In the Gaussian-isotropic case
//! the exact law is known, `P(|u(x₀)| ≥ t) = (1 - t²/e_L)^{N-1}`, and the
//! report carries the KS distance against it; for every law a weighted
//! exponential fit `-log p ≈ slope · (N/e_L) t²` is performed on the bins
//! with enough exceedances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ProfileSpec, SampleMachine, WindowSpec};
use crate::error::{CoreError, Result};
use crate::measures::{normalize_to_sphere, sample_coefficients, uniform_marginal_ccdf, RandomLaw};
use crate::report::{config_hash, FitReport, StatPoint};
use crate::rng::stream_seed;
use crate::spectral::{eigenfunctions_at, spectral_function};
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailConfig {
    #[serde(flatten)]
    pub window: WindowSpec,
    /// Evaluation point x₀.
    pub x0: Vec<f64>,
    pub law: RandomLaw,
    #[serde(default)]
    pub profile: ProfileSpec,
    /// Number of Monte-Carlo samples (≥ 1000).
    pub samples: u64,
    /// Threshold grid as fractions of e_L: t_i = √(f_i · e_L).
    pub t_fractions: Vec<f64>,
    pub seed: u64,
}

pub fn tail_experiment(cfg: &TailConfig) -> Result<FitReport> {
    let start = std::time::Instant::now();
    if cfg.samples < 1000 {
        return Err(CoreError::InvalidConfig(
            "tail experiments need ≥ 1000 samples".into(),
        ));
    }
    if cfg.t_fractions.is_empty() || cfg.t_fractions.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
        return Err(CoreError::InvalidConfig(
            "t_fractions must lie in [0, 1] (fractions of e_L)".into(),
        ));
    }
    let window = cfg.window.build()?;
    let n = window.n_total() as usize;
    let machine = SampleMachine::new(&cfg.law, &cfg.profile, n)?;
    let e_l = spectral_function(&window, &cfg.x0)?;
    if e_l <= 0.0 {
        return Err(CoreError::InvalidConfig(
            "e_L vanishes at x₀; pick a generic evaluation point".into(),
        ));
    }
    let phi = eigenfunctions_at(&window, &cfg.x0)?;

    // |u(x₀)| per sample, drawn and evaluated in one pass.
    let values: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let coeffs =
                sample_coefficients(&machine.profile, &machine.sampler, stream_seed(cfg.seed, i));
            let unit = normalize_to_sphere(&coeffs)?;
            Ok(unit
                .iter()
                .zip(&phi)
                .map(|(c, &p)| c * p)
                .sum::<num_complex::Complex64>()
                .norm())
        })
        .collect::<Result<Vec<f64>>>()?;

    let m = values.len() as f64;
    let sqrt_el = e_l.sqrt();
    let mut report = FitReport::new("tail", cfg.seed, config_hash(cfg));
    report.model = Some("exp(-slope (N/e_L) t^2)".into());
    report.constants.insert("e_L".into(), e_l);
    report.constants.insert("n_dim".into(), n as f64);

    // Deterministic cap: no sample may exceed √e_L.
    let vmax = values.iter().copied().fold(0.0f64, f64::max);
    report.constants.insert("max_over_cap".into(), vmax / sqrt_el);

    let mut xs = Vec::new();
    let mut probs = Vec::new();
    let mut counts = Vec::new();
    for &frac in &cfg.t_fractions {
        let t = (frac * e_l).sqrt();
        let exceed = values.iter().filter(|&&v| v >= t).count() as u64;
        let p = exceed as f64 / m;
        let se = stats::binomial_se(p.max(1e-12).min(1.0 - 1e-12), cfg.samples);
        report.points.push(StatPoint {
            abscissa: t,
            statistic: p,
            ci_lo: (p - se).max(0.0),
            ci_hi: (p + se).min(1.0),
            n_samples: cfg.samples,
        });
        xs.push(n as f64 / e_l * t * t);
        probs.push(p);
        counts.push(exceed);
    }

    // Largest requested threshold must still be measurable.
    if let Some(&last) = counts.last() {
        if last < 20 {
            return Err(CoreError::InsufficientSamples(format!(
                "only {last} exceedances at the largest t; raise samples or lower t_fractions"
            )));
        }
    }
    let (slope, r2, used) = super::tail_slope_fit(&xs, &probs, &counts, 20)?;
    report.constants.insert("slope".into(), slope);
    report.constants.insert("fit_bins".into(), used as f64);
    report.r_squared = Some(r2);

    // Lower-bound range: general laws only up to t = ε₀ √(e_L/N), Gaussians
    // up to ε₀ √e_L (with ε₀ = 1/2); the fit on that range estimates the
    // two-sided constant.
    let eps0 = 0.5;
    let t_lower_max = if matches!(cfg.law, RandomLaw::ComplexGaussian) {
        eps0 * sqrt_el
    } else {
        eps0 * (e_l / n as f64).sqrt()
    };
    report
        .constants
        .insert("lower_range_t_max".into(), t_lower_max);
    let mut lx = Vec::new();
    let mut lp = Vec::new();
    let mut lc = Vec::new();
    for ((&frac, &p), &c) in cfg.t_fractions.iter().zip(&probs).zip(&counts) {
        let t = (frac * e_l).sqrt();
        if t <= t_lower_max {
            lx.push(n as f64 / e_l * t * t);
            lp.push(p);
            lc.push(c);
        }
    }
    if let Ok((slope_lo, r2_lo, bins)) = super::tail_slope_fit(&lx, &lp, &lc, 20) {
        report.constants.insert("slope_lower_range".into(), slope_lo);
        report.constants.insert("lower_range_bins".into(), bins as f64);
        report
            .constants
            .insert("lower_range_r_squared".into(), r2_lo);
    }

    // Exact-oracle comparison in the Gaussian-isotropic case.
    let isotropic = matches!(cfg.profile, ProfileSpec::Isotropic);
    if isotropic && matches!(cfg.law, RandomLaw::ComplexGaussian) {
        let mut normalized: Vec<f64> = values.iter().map(|v| v / sqrt_el).collect();
        let ks = stats::ks_statistic(&mut normalized, |t| {
            1.0 - uniform_marginal_ccdf(n, t.clamp(0.0, 1.0 - 1e-15)).unwrap()
        });
        report.constants.insert("ks".into(), ks);
        report
            .constants
            .insert("ks_band_95".into(), 1.36 / m.sqrt() * 1.2);
        // Pointwise deviation from the exact CCDF in binomial SEs.
        let mut worst = 0.0f64;
        for (point, &frac) in report.points.iter().zip(&cfg.t_fractions) {
            let exact = (1.0 - frac).powi(n as i32 - 1);
            let se = stats::binomial_se(exact.clamp(1e-12, 1.0 - 1e-12), cfg.samples);
            worst = worst.max((point.statistic - exact).abs() / se);
        }
        report.constants.insert("max_abs_dev_se".into(), worst);
    }

    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
