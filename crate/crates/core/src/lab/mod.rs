//! Seeded Monte-Carlo experiments on the sphere measures: tail laws,
//! norm medians, scaling fits and concentration diagnostics.
//!
//! Every experiment consumes a serializable config, draws its samples from
//! per-index RNG streams, and emits a [`FitReport`].  Reductions are
//! index-ordered, so reports are numerically identical for any worker
//! count.

mod besov;
mod concentration;
mod medians;
mod tail;

pub use besov::{besov_sobolev_gain_experiment, BesovConfig};
pub use concentration::{
    lipschitz_concentration_experiment, mean_median_gap_experiment, norm_concentration_experiment,
    paley_zygmund_khinchin_check, ConcentrationConfig,
};
pub use medians::{
    linfty_scaling_experiment, lr_median_scaling_experiment, norm_statistics_experiment,
    LinftyConfig, LrConfig, MedianConfig,
};
pub use tail::{tail_experiment, TailConfig};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{supnorm_profile, SupnormProfileConfig};
use crate::error::{CoreError, Result};
use crate::eval::{batch_lr, batch_point_eval, batch_sup, BasisD2, SupOptions};
use crate::grid::QuadratureGrid;
use crate::measures::{
    normalize_to_sphere, sample_coefficients, CoefficientProfile, LawSampler, RandomLaw,
};
use crate::report::{FitReport, StatPoint};
use crate::rng::{stream_rng, stream_seed};
use crate::spectral::{
    beta_exponent, eigenfunctions_at, enumerate_window, single_level_window, SpectralWindow,
};
use crate::stats;

/// Window described in a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum WindowSpec {
    /// The single-eigenvalue window of level k (`h = 1/k`).
    SingleLevel { d: usize, k: usize },
    /// A general interval `[a/h, b/h)`.
    Interval {
        d: usize,
        h: f64,
        a: f64,
        b: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

fn default_delta() -> f64 {
    1.0
}

impl WindowSpec {
    pub fn build(&self) -> Result<SpectralWindow> {
        match self {
            WindowSpec::SingleLevel { d, k } => single_level_window(*d, *k),
            WindowSpec::Interval { d, h, a, b, delta } => {
                Ok(enumerate_window(*d, *h, *a, *b)?.with_delta(*delta))
            }
        }
    }
}

/// Coefficient profile described in a config file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProfileSpec {
    #[default]
    Isotropic,
    Explicit {
        gamma: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self, n: usize) -> Result<CoefficientProfile> {
        match self {
            ProfileSpec::Isotropic => Ok(CoefficientProfile::isotropic(n)),
            ProfileSpec::Explicit { gamma } => {
                if gamma.len() != n {
                    return Err(CoreError::LengthMismatch {
                        got: gamma.len(),
                        expected: n,
                    });
                }
                CoefficientProfile::new(
                    gamma.iter().map(|&g| Complex64::new(g, 0.0)).collect(),
                )
            }
        }
    }
}

/// The functional measured on each sphere sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case")]
pub enum Functional {
    /// `u ↦ |u(x₀)|`.
    PointEvaluation { x: Vec<f64> },
    /// `u ↦ ‖u‖_{L^{r, θ(r/2-1)}}` (the two-sided median family).
    WeightedLr { r: f64, theta: f64 },
    /// `u ↦ ‖u‖_{L^{r,s}}`.
    Lebesgue { r: f64, s: f64 },
    /// `u ↦ ‖u‖_{L^{∞, θ/2}}` (weighted sup).
    SupNorm { theta: f64 },
    /// `u ↦ ‖u‖_{W^{s,r}}` (spectral multiplier then L^r).
    Sobolev { s: f64, r: f64 },
}

/// Window plus the cached evaluation structures the functionals need.
pub(crate) struct WindowCtx {
    pub window: SpectralWindow,
    pub basis: Option<BasisD2>,
    pub eigenvalues: Vec<f64>,
}

impl WindowCtx {
    pub fn new(window: SpectralWindow) -> Result<Self> {
        if window.is_empty() {
            return Err(CoreError::EmptyWindow);
        }
        let basis = if window.dimension == 2 {
            Some(BasisD2::from_window(&window)?)
        } else {
            None
        };
        let eigenvalues = window.eigenvalues_per_index();
        Ok(Self {
            window,
            basis,
            eigenvalues,
        })
    }

    pub fn n(&self) -> usize {
        self.window.n_total() as usize
    }

    fn basis(&self) -> Result<&BasisD2> {
        self.basis.as_ref().ok_or_else(|| {
            CoreError::InvalidConfig("norm functionals require d = 2 windows".into())
        })
    }
}

pub(crate) fn default_sup_options() -> SupOptions {
    SupOptions::default()
}

/// Evaluate a functional on a batch of unit-sphere coefficient vectors.
pub(crate) fn evaluate_functional(
    ctx: &WindowCtx,
    functional: &Functional,
    coeffs: &[Vec<Complex64>],
) -> Result<Vec<f64>> {
    match functional {
        Functional::PointEvaluation { x } => {
            let phi = eigenfunctions_at(&ctx.window, x)?;
            Ok(batch_point_eval(&phi, coeffs)
                .into_iter()
                .map(|v| v.norm())
                .collect())
        }
        Functional::WeightedLr { r, theta } => {
            let s = theta * (r / 2.0 - 1.0);
            lr_batch(ctx, coeffs, *r, s)
        }
        Functional::Lebesgue { r, s } => lr_batch(ctx, coeffs, *r, *s),
        Functional::SupNorm { theta } => {
            let est = batch_sup(
                ctx.basis()?,
                coeffs,
                &ctx.window,
                *theta,
                &default_sup_options(),
            )?;
            Ok(est.into_iter().map(|e| e.value).collect())
        }
        Functional::Sobolev { s, r } => {
            let multiplied: Vec<Vec<Complex64>> = coeffs
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&ctx.eigenvalues)
                        .map(|(v, &lam)| v * lam.powf(s / 2.0))
                        .collect()
                })
                .collect();
            lr_batch(ctx, &multiplied, *r, 0.0)
        }
    }
}

fn lr_batch(ctx: &WindowCtx, coeffs: &[Vec<Complex64>], r: f64, s: f64) -> Result<Vec<f64>> {
    if !(r >= 1.0) {
        return Err(CoreError::DomainError(format!("r = {r} must be ≥ 1")));
    }
    let basis = ctx.basis()?;
    let grid = lr_grid(&ctx.window, r)?;
    batch_lr(basis, coeffs, &grid, r, s)
}

/// Grid choice per exponent: exact tensor Gauss–Hermite for even integer r,
/// oscillation-resolving uniform grid otherwise.
pub(crate) fn lr_grid(w: &SpectralWindow, r: f64) -> Result<QuadratureGrid> {
    let is_even_integer = r.fract() == 0.0 && (r as u64) % 2 == 0;
    if is_even_integer {
        QuadratureGrid::for_window_lr(w, r)
    } else {
        QuadratureGrid::for_window_sup(w, 6.0)
    }
}

/// Draw `m` unit-sphere coefficient vectors with per-index streams.
pub(crate) fn draw_sphere_batch(
    profile: &CoefficientProfile,
    sampler: &LawSampler,
    master_seed: u64,
    m: u64,
) -> Result<Vec<Vec<Complex64>>> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let coeffs = sample_coefficients(profile, sampler, stream_seed(master_seed, i));
            normalize_to_sphere(&coeffs)
        })
        .collect()
}

/// Median with a 200-resample bootstrap CI; RNG keyed by `(seed, tag)`.
pub(crate) fn median_with_ci(values: &[f64], seed: u64, tag: u64) -> (f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = stats::median_sorted(&sorted);
    let mut rng = stream_rng(seed ^ 0x626f_6f74, tag);
    let (lo, hi) = stats::bootstrap_median_ci(values, 200, &mut rng);
    (med, lo, hi)
}

/// Fit model for [`scaling_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `y = C √(log(1/h))` against abscissa h.
    SqrtLog,
    /// `log y = a + b log x`.
    PowerLaw,
    /// `log y = a + b log r`, expecting b ≈ 1/2.
    SqrtR,
}

/// Least-squares fit of a named scaling model to `(abscissa, statistic)`
/// points.  Regression harness shared by the scaling experiments.
pub fn scaling_fit(points: &[(f64, f64)], model: ScalingModel) -> Result<FitReport> {
    if points.len() < 4 {
        return Err(CoreError::InsufficientSamples(format!(
            "scaling fits need ≥ 4 points, got {}",
            points.len()
        )));
    }
    let mut report = FitReport::new("scaling_fit", 0, String::new());
    report.model = Some(format!("{model:?}"));
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let transformed: Vec<(f64, f64)> = match model {
        ScalingModel::SqrtLog => xs
            .iter()
            .zip(&ys)
            .map(|(&h, &y)| ((1.0 / h).ln().max(0.0).sqrt(), y))
            .collect(),
        ScalingModel::PowerLaw | ScalingModel::SqrtR => xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| (x.ln(), y.ln()))
            .collect(),
    };
    let (tx, ty): (Vec<f64>, Vec<f64>) = transformed.into_iter().unzip();
    let spread = tx.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - tx.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(CoreError::DegenerateAbscissa(
            "transformed abscissas are constant or non-finite".into(),
        ));
    }
    match model {
        ScalingModel::SqrtLog => {
            let w = vec![1.0; tx.len()];
            let (c, r2) = stats::weighted_fit_through_origin(&tx, &ty, &w);
            report.constants.insert("C".into(), c);
            report.r_squared = Some(r2);
        }
        ScalingModel::PowerLaw | ScalingModel::SqrtR => {
            let (a, b, r2) = stats::linear_fit(&tx, &ty);
            report.constants.insert("log_prefactor".into(), a);
            report.constants.insert("slope".into(), b);
            if model == ScalingModel::SqrtR {
                report.constants.insert("expected_slope".into(), 0.5);
            }
            report.r_squared = Some(r2);
        }
    }
    for (&x, &y) in xs.iter().zip(&ys) {
        report.points.push(StatPoint {
            abscissa: x,
            statistic: y,
            ci_lo: y,
            ci_hi: y,
            n_samples: 0,
        });
    }
    Ok(report)
}

/// Weighted through-origin exponential-tail fit: `-log p ≈ slope · x` over
/// bins with at least `min_exceed` exceedances, weighted by exceedance
/// count.  Returns `(slope, r², points_used)`.
pub(crate) fn tail_slope_fit(
    xs: &[f64],
    probs: &[f64],
    counts: &[u64],
    min_exceed: u64,
) -> Result<(f64, f64, usize)> {
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    let mut fw = Vec::new();
    for ((&x, &p), &c) in xs.iter().zip(probs).zip(counts) {
        if c >= min_exceed && p < 1.0 && p > 0.0 && x > 0.0 {
            fx.push(x);
            fy.push(-p.ln());
            fw.push(c as f64);
        }
    }
    if fx.len() < 2 {
        return Err(CoreError::InsufficientSamples(format!(
            "{} usable tail bins (need ≥ 2 with ≥ {min_exceed} exceedances)",
            fx.len()
        )));
    }
    let (slope, r2) = stats::weighted_fit_through_origin(&fx, &fy, &fw);
    Ok((slope, r2, fx.len()))
}

/// Top-level experiment config: one tagged variant per CLI subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Tail(TailConfig),
    Median(MedianConfig),
    Linfty(LinftyConfig),
    Lr(LrConfig),
    Basis(SupnormProfileConfig),
    Besov(BesovConfig),
    Concentration(ConcentrationConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Tail(_) => "tail",
            ExperimentConfig::Median(_) => "median",
            ExperimentConfig::Linfty(_) => "linfty",
            ExperimentConfig::Lr(_) => "lr",
            ExperimentConfig::Basis(_) => "basis",
            ExperimentConfig::Besov(_) => "besov",
            ExperimentConfig::Concentration(_) => "concentration",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::Tail(c) => c.seed,
            ExperimentConfig::Median(c) => c.seed,
            ExperimentConfig::Linfty(c) => c.seed,
            ExperimentConfig::Lr(c) => c.seed,
            ExperimentConfig::Basis(c) => c.seeds.first().copied().unwrap_or(0),
            ExperimentConfig::Besov(c) => c.seed,
            ExperimentConfig::Concentration(c) => c.seed(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ExperimentConfig::Tail(c) => c.seed = seed,
            ExperimentConfig::Median(c) => c.seed = seed,
            ExperimentConfig::Linfty(c) => c.seed = seed,
            ExperimentConfig::Lr(c) => c.seed = seed,
            ExperimentConfig::Basis(c) => c.seeds = vec![seed],
            ExperimentConfig::Besov(c) => c.seed = seed,
            ExperimentConfig::Concentration(c) => c.set_seed(seed),
        }
        self
    }
}

/// Run any experiment from its config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<FitReport> {
    match cfg {
        ExperimentConfig::Tail(c) => tail_experiment(c),
        ExperimentConfig::Median(c) => norm_statistics_experiment(c),
        ExperimentConfig::Linfty(c) => linfty_scaling_experiment(c),
        ExperimentConfig::Lr(c) => lr_median_scaling_experiment(c),
        ExperimentConfig::Basis(c) => supnorm_profile(c),
        ExperimentConfig::Besov(c) => besov_sobolev_gain_experiment(c),
        ExperimentConfig::Concentration(c) => c.run(),
    }
}

/// Shared pieces used by the per-experiment modules.
pub(crate) struct SampleMachine {
    pub profile: CoefficientProfile,
    pub sampler: LawSampler,
}

impl SampleMachine {
    pub fn new(law: &RandomLaw, profile_spec: &ProfileSpec, n: usize) -> Result<Self> {
        Ok(Self {
            profile: profile_spec.build(n)?,
            sampler: LawSampler::new(law)?,
        })
    }
}

pub(crate) fn normalized_median_exponent(d: usize, r: f64, theta: f64) -> f64 {
    beta_exponent(d, r, theta) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_fit_recovers_sqrt_log() {
        let pts: Vec<(f64, f64)> = [16.0, 32.0, 64.0, 128.0]
            .iter()
            .map(|&k| (1.0 / k, 2.0 * (k as f64).ln().sqrt()))
            .collect();
        let rep = scaling_fit(&pts, ScalingModel::SqrtLog).unwrap();
        assert!((rep.constant("C").unwrap() - 2.0).abs() < 1e-12);
        assert!((rep.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_recovers_sqrt_r() {
        let pts: Vec<(f64, f64)> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .map(|&r| (r, 3.0 * (r as f64).sqrt()))
            .collect();
        let rep = scaling_fit(&pts, ScalingModel::SqrtR).unwrap();
        assert!((rep.constant("slope").unwrap() - 0.5).abs() < 1e-12);
        assert!((rep.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_fit_power_law_with_jitter() {
        // 5% multiplicative jitter from a fixed stream: slope within ±0.05.
        use rand::Rng;
        let mut rng = stream_rng(7, 0);
        let pts: Vec<(f64, f64)> = (1..=8)
            .map(|i| {
                let x = 2.0f64.powi(i);
                let jitter = 1.0 + 0.05 * (2.0 * rng.gen::<f64>() - 1.0);
                (x, 1.7 * x.powf(-0.75) * jitter)
            })
            .collect();
        let rep = scaling_fit(&pts, ScalingModel::PowerLaw).unwrap();
        assert!(
            (rep.constant("slope").unwrap() + 0.75).abs() < 0.05,
            "slope {}",
            rep.constant("slope").unwrap()
        );
    }

    #[test]
    fn scaling_fit_guards() {
        let short = vec![(1.0, 1.0); 3];
        assert!(matches!(
            scaling_fit(&short, ScalingModel::PowerLaw),
            Err(CoreError::InsufficientSamples(_))
        ));
        let degenerate = vec![(2.0, 1.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)];
        assert!(matches!(
            scaling_fit(&degenerate, ScalingModel::PowerLaw),
            Err(CoreError::DegenerateAbscissa(_))
        ));
    }

    #[test]
    fn window_and_profile_specs_build() {
        let w = WindowSpec::SingleLevel { d: 2, k: 5 }.build().unwrap();
        assert_eq!(w.n_total(), 6);
        let w = WindowSpec::Interval {
            d: 2,
            h: 0.5,
            a: 4.0,
            b: 6.0,
            delta: 0.5,
        }
        .build()
        .unwrap();
        assert_eq!(w.delta, 0.5);
        assert!(ProfileSpec::Explicit { gamma: vec![1.0; 3] }.build(4).is_err());
    }
}
