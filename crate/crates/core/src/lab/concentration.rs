//! Concentration diagnostics: Lipschitz-functional tails around the median,
//! norm concentration in the window dimension, the mean/median gap of the
//! Euclidean norm, and the Paley–Zygmund / Khinchin sanity checks.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    draw_sphere_batch, evaluate_functional, median_with_ci, Functional, ProfileSpec,
    SampleMachine, WindowCtx, WindowSpec,
};
use crate::error::{CoreError, Result};
use crate::measures::{sample_coefficients, CoefficientProfile, LawSampler, RandomLaw};
use crate::report::{config_hash, FitReport, StatPoint};
use crate::rng::{stream_rng, stream_seed};
use crate::spectral::spectral_function;
use crate::stats;
use rand::Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcentrationConfig {
    /// Tails of `|F - median|` against the sub-Gaussian bound
    /// `exp(-κ N r² / ‖F‖²_Lip)`.
    Lipschitz {
        #[serde(flatten)]
        window: WindowSpec,
        #[serde(flatten)]
        functional: Functional,
        law: RandomLaw,
        #[serde(default)]
        profile: ProfileSpec,
        samples: u64,
        /// Deviation grid; derived from the sample spread when omitted.
        #[serde(default)]
        deviations: Option<Vec<f64>>,
        seed: u64,
    },
    /// `P(|‖v_γ‖² - 1| > ε)` across window dimensions (isotropic profile).
    NormConcentration {
        n_grid: Vec<usize>,
        law: RandomLaw,
        epsilon: f64,
        samples: u64,
        seed: u64,
    },
    /// Median vs mean of the Euclidean norm under ν_γ across dimensions.
    MeanMedianGap {
        n_grid: Vec<usize>,
        law: RandomLaw,
        samples: u64,
        seed: u64,
    },
    /// Paley–Zygmund and Khinchin inequalities on random linear combinations.
    PaleyZygmund {
        n: usize,
        law: RandomLaw,
        trials: usize,
        samples: u64,
        #[serde(default = "default_moments")]
        k_moments: Vec<f64>,
        seed: u64,
    },
}

fn default_moments() -> Vec<f64> {
    vec![2.0, 4.0, 8.0]
}

impl ConcentrationConfig {
    pub fn seed(&self) -> u64 {
        match self {
            ConcentrationConfig::Lipschitz { seed, .. }
            | ConcentrationConfig::NormConcentration { seed, .. }
            | ConcentrationConfig::MeanMedianGap { seed, .. }
            | ConcentrationConfig::PaleyZygmund { seed, .. } => *seed,
        }
    }

    pub fn set_seed(&mut self, new: u64) {
        match self {
            ConcentrationConfig::Lipschitz { seed, .. }
            | ConcentrationConfig::NormConcentration { seed, .. }
            | ConcentrationConfig::MeanMedianGap { seed, .. }
            | ConcentrationConfig::PaleyZygmund { seed, .. } => *seed = new,
        }
    }

    pub fn run(&self) -> Result<FitReport> {
        match self {
            ConcentrationConfig::Lipschitz { .. } => lipschitz_concentration_experiment(self),
            ConcentrationConfig::NormConcentration { .. } => norm_concentration_experiment(self),
            ConcentrationConfig::MeanMedianGap { .. } => mean_median_gap_experiment(self),
            ConcentrationConfig::PaleyZygmund { .. } => paley_zygmund_khinchin_check(self),
        }
    }
}

/// Deterministic Lipschitz bound of a functional on the sphere, from the
/// deterministic Sobolev cap `(N h^{(d-θ)/2})^{1/2-1/p}` scale.
fn lipschitz_bound(ctx: &WindowCtx, functional: &Functional) -> Result<f64> {
    let w = &ctx.window;
    let n = w.n_total() as f64;
    let d = w.dimension as f64;
    let h = w.h;
    Ok(match functional {
        Functional::PointEvaluation { x } => spectral_function(w, x)?.sqrt(),
        Functional::WeightedLr { r, theta } => (n * h.powf((d - theta) / 2.0)).powf(0.5 - 1.0 / r),
        Functional::Lebesgue { r, s } => {
            // Treat s as θ(r/2-1) when positive; unweighted otherwise.
            let theta = if *r > 2.0 { s / (r / 2.0 - 1.0) } else { 0.0 };
            (n * h.powf((d - theta) / 2.0)).powf(0.5 - 1.0 / r)
        }
        Functional::SupNorm { theta } => (n * h.powf((d - theta) / 2.0)).sqrt(),
        Functional::Sobolev { s, r } => {
            h.powf(-s / 2.0) * (n * h.powf(d / 2.0)).powf(0.5 - 1.0 / r)
        }
    })
}

pub fn lipschitz_concentration_experiment(cfg: &ConcentrationConfig) -> Result<FitReport> {
    let ConcentrationConfig::Lipschitz {
        window,
        functional,
        law,
        profile,
        samples,
        deviations,
        seed,
    } = cfg
    else {
        return Err(CoreError::InvalidConfig("expected lipschitz config".into()));
    };
    let start = std::time::Instant::now();
    if *samples < 1000 {
        return Err(CoreError::InvalidConfig(
            "tail experiments need ≥ 1000 samples".into(),
        ));
    }
    let ctx = WindowCtx::new(window.build()?)?;
    let machine = SampleMachine::new(law, profile, ctx.n())?;
    let coeffs = draw_sphere_batch(&machine.profile, &machine.sampler, *seed, *samples)?;
    let values = evaluate_functional(&ctx, functional, &coeffs)?;
    let (median, _, _) = median_with_ci(&values, *seed, 0);

    let devs: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
    let dev_max = devs.iter().copied().fold(0.0f64, f64::max);
    let lip = lipschitz_bound(&ctx, functional)?;
    let n = ctx.n() as f64;

    let mut report = FitReport::new("lipschitz_concentration", *seed, config_hash(cfg));
    report.model = Some("P(|F-M|>r) ~ exp(-κ N r²/Lip²)".into());
    report.constants.insert("median".into(), median);
    report.constants.insert("lipschitz_bound".into(), lip);

    // Constant functionals put all mass at the median: report zero tails.
    if dev_max <= 1e-12 * median.abs().max(1.0) {
        report.constants.insert("all_mass_at_median".into(), 1.0);
        report.points.push(StatPoint {
            abscissa: 0.0,
            statistic: 0.0,
            ci_lo: 0.0,
            ci_hi: 0.0,
            n_samples: *samples,
        });
        report.runtime_ms = start.elapsed().as_millis() as u64;
        return Ok(report);
    }

    let grid: Vec<f64> = match deviations {
        Some(g) => g.clone(),
        None => (1..=8).map(|i| dev_max * i as f64 / 10.0).collect(),
    };
    let m = values.len() as f64;
    let mut xs = Vec::new();
    let mut probs = Vec::new();
    let mut counts = Vec::new();
    for &r in &grid {
        let exceed = devs.iter().filter(|&&d| d > r).count() as u64;
        let p = exceed as f64 / m;
        report.points.push(StatPoint {
            abscissa: r,
            statistic: p,
            ci_lo: (p - stats::binomial_se(p.clamp(1e-12, 1.0), *samples)).max(0.0),
            ci_hi: (p + stats::binomial_se(p.clamp(1e-12, 1.0), *samples)).min(1.0),
            n_samples: *samples,
        });
        xs.push(n * r * r / (lip * lip));
        probs.push(p);
        counts.push(exceed);
    }
    let (kappa, r2, used) = super::tail_slope_fit(&xs, &probs, &counts, 20)?;
    report.constants.insert("kappa".into(), kappa);
    report.constants.insert("fit_bins".into(), used as f64);
    report.r_squared = Some(r2);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn norm_concentration_experiment(cfg: &ConcentrationConfig) -> Result<FitReport> {
    let ConcentrationConfig::NormConcentration {
        n_grid,
        law,
        epsilon,
        samples,
        seed,
    } = cfg
    else {
        return Err(CoreError::InvalidConfig(
            "expected norm_concentration config".into(),
        ));
    };
    let start = std::time::Instant::now();
    if n_grid.is_empty() || !(*epsilon > 0.0) {
        return Err(CoreError::InvalidConfig(
            "need a nonempty N-grid and ε > 0".into(),
        ));
    }
    let sampler = LawSampler::new(law)?;
    let mut report = FitReport::new("norm_concentration", *seed, config_hash(cfg));
    report.model = Some("-log P(|‖v‖²-1|>ε) ~ c N".into());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut probs = Vec::new();
    for (idx, &n) in n_grid.iter().enumerate() {
        let profile = CoefficientProfile::isotropic(n);
        let sub_seed = stream_seed(*seed, idx as u64);
        let exceed: u64 = (0..*samples)
            .into_par_iter()
            .map(|i| {
                let c = sample_coefficients(&profile, &sampler, stream_seed(sub_seed, i));
                let norm_sq: f64 = c.iter().map(|v| v.norm_sqr()).sum();
                u64::from((norm_sq - 1.0).abs() > *epsilon)
            })
            .sum();
        let p = exceed as f64 / *samples as f64;
        probs.push(p);
        report.points.push(StatPoint {
            abscissa: n as f64,
            statistic: p,
            ci_lo: (p - stats::binomial_se(p.clamp(1e-12, 1.0), *samples)).max(0.0),
            ci_hi: (p + stats::binomial_se(p.clamp(1e-12, 1.0), *samples)).min(1.0),
            n_samples: *samples,
        });
        if p > 0.0 {
            xs.push(n as f64);
            ys.push(-p.ln());
            ws.push(exceed.max(1) as f64);
        }
    }
    let monotone = probs.windows(2).all(|w| w[1] < w[0]);
    report
        .constants
        .insert("monotone_decreasing".into(), monotone as u8 as f64);
    if xs.len() >= 2 {
        let (c, r2) = stats::weighted_fit_through_origin(&xs, &ys, &ws);
        report.constants.insert("rate_c".into(), c);
        report.r_squared = Some(r2);
        let min_ratio = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| y / (c * x))
            .fold(f64::INFINITY, f64::min);
        report.constants.insert("min_ratio_to_fit".into(), min_ratio);
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn mean_median_gap_experiment(cfg: &ConcentrationConfig) -> Result<FitReport> {
    let ConcentrationConfig::MeanMedianGap {
        n_grid,
        law,
        samples,
        seed,
    } = cfg
    else {
        return Err(CoreError::InvalidConfig(
            "expected mean_median_gap config".into(),
        ));
    };
    let start = std::time::Instant::now();
    if law.is_complex() {
        return Err(CoreError::InvalidConfig(
            "the Euclidean-norm gap experiment uses a real profile/law".into(),
        ));
    }
    let sampler = LawSampler::new(law)?;
    let mut report = FitReport::new("mean_median_gap", *seed, config_hash(cfg));
    for (idx, &n) in n_grid.iter().enumerate() {
        let sub_seed = stream_seed(*seed, idx as u64);
        // |x|₀ under ν_γ with isotropic γ: (Σ X_j²)^{1/2}.
        let values: Vec<f64> = (0..*samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(sub_seed, i);
                let mut acc = 0.0;
                for _ in 0..n {
                    let x = sampler.draw(&mut rng);
                    acc += x.norm_sqr();
                }
                acc.sqrt()
            })
            .collect();
        let (median, lo, hi) = median_with_ci(&values, *seed, idx as u64);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        report.points.push(StatPoint {
            abscissa: n as f64,
            statistic: median,
            ci_lo: lo,
            ci_hi: hi,
            n_samples: *samples,
        });
        report.constants.insert(format!("mean_n{n}"), mean);
        report
            .constants
            .insert(format!("gap_n{n}"), (mean - median).abs());
        report
            .constants
            .insert(format!("median_over_sqrt_n{n}"), median / (n as f64).sqrt());
    }
    let ratios: Vec<f64> = n_grid
        .iter()
        .map(|n| report.constant(&format!("median_over_sqrt_n{n}")).unwrap())
        .collect();
    report.constants.insert(
        "ratio_band_lower".into(),
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
    );
    report.constants.insert(
        "ratio_band_upper".into(),
        ratios.iter().copied().fold(0.0f64, f64::max),
    );
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn paley_zygmund_khinchin_check(cfg: &ConcentrationConfig) -> Result<FitReport> {
    let ConcentrationConfig::PaleyZygmund {
        n,
        law,
        trials,
        samples,
        k_moments,
        seed,
    } = cfg
    else {
        return Err(CoreError::InvalidConfig("expected paley_zygmund config".into()));
    };
    let start = std::time::Instant::now();
    if *n == 0 || *trials == 0 || *samples == 0 {
        return Err(CoreError::InvalidConfig(
            "need positive n, trials and samples".into(),
        ));
    }
    let sampler = LawSampler::new(law)?;
    let mut report = FitReport::new("paley_zygmund_khinchin", *seed, config_hash(cfg));
    let lambda = 0.5;
    let mut pz_margin_min = f64::INFINITY;
    let mut khinchin_c: f64 = 0.0;
    let mut all_hold = true;
    for trial in 0..*trials {
        // Random unit coefficient vector for the linear form.
        let mut rng = stream_rng(*seed ^ 0x747269616c, trial as u64);
        let mut a: Vec<f64> = (0..*n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.iter_mut().for_each(|v| *v /= norm);

        let sub_seed = stream_seed(*seed, trial as u64);
        let ys: Vec<Complex64> = (0..*samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(sub_seed, i);
                let mut acc = Complex64::new(0.0, 0.0);
                for &aj in &a {
                    acc += aj * sampler.draw(&mut rng);
                }
                acc
            })
            .collect();
        let z: Vec<f64> = ys.iter().map(|y| y.norm_sqr()).collect();
        let z1 = z.iter().sum::<f64>() / z.len() as f64;
        let z2 = (z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64).sqrt();
        let lhs = z.iter().filter(|&&v| v > lambda * z1).count() as f64 / z.len() as f64;
        let rhs = ((1.0 - lambda) * z1 / z2).powi(2);
        all_hold &= lhs >= rhs;
        pz_margin_min = pz_margin_min.min(lhs - rhs);
        for &k in k_moments {
            let mk = (ys.iter().map(|y| y.norm().powf(k)).sum::<f64>() / ys.len() as f64)
                .powf(1.0 / k);
            khinchin_c = khinchin_c.max(mk / k.sqrt());
        }
    }
    report
        .constants
        .insert("pz_all_hold".into(), all_hold as u8 as f64);
    report.constants.insert("pz_margin_min".into(), pz_margin_min);
    report.constants.insert("khinchin_c".into(), khinchin_c);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
