//! Sobolev-over-Besov gain of the global randomized series: the empirical
//! probability of `‖u‖_{W^{s,r}} ≥ K ‖u‖_{B⁰_{2,1}}` should decay like
//! `exp(-c K²)` with `s = d(1/2 - 1/r)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::eval::{batch_lr, BasisD2};
use crate::measures::{LawSampler, RandomLaw};
use crate::report::{config_hash, FitReport, StatPoint};
use crate::rng::{stream_rng, stream_seed};
use crate::spectral::enumerate_window;
use crate::stats;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BesovConfig {
    pub d: usize,
    /// Dyadic blocks n = 1..=n_blocks, eigenvalues in [2^n, 2^{n+1}).
    pub n_blocks: u32,
    /// Block mass decay: |γ|_{Λ_n} = block_decay^n (summable for < 1).
    pub block_decay: f64,
    pub r: f64,
    pub law: RandomLaw,
    pub samples: u64,
    /// Threshold grid for K; derived from ratio quantiles when omitted.
    #[serde(default)]
    pub k_grid: Option<Vec<f64>>,
    pub seed: u64,
}

pub fn besov_sobolev_gain_experiment(cfg: &BesovConfig) -> Result<FitReport> {
    let start = std::time::Instant::now();
    if cfg.d != 2 {
        return Err(CoreError::InvalidConfig(
            "the Besov gain experiment is implemented for d = 2".into(),
        ));
    }
    if cfg.n_blocks == 0 || !(cfg.block_decay > 0.0) || cfg.samples < 100 {
        return Err(CoreError::InvalidConfig(
            "need ≥ 1 block, positive decay and ≥ 100 samples".into(),
        ));
    }
    if !(cfg.r >= 2.0) {
        return Err(CoreError::InvalidConfig("r must be ≥ 2".into()));
    }
    let d = cfg.d;
    let s = d as f64 * (0.5 - 1.0 / cfg.r);

    // Union of all blocks: eigenvalues in [2, 2^{n_blocks+1}).
    let window = enumerate_window(d, 1.0, 2.0, 2.0f64.powi(cfg.n_blocks as i32 + 1))?;
    let basis = BasisD2::from_window(&window)?;
    let eigenvalues = window.eigenvalues_per_index();
    // Block id and per-coefficient profile weight γ_j = decay^n / √m_n.
    let block_of: Vec<u32> = eigenvalues
        .iter()
        .map(|&lam| lam.log2().floor() as u32)
        .collect();
    let mut block_sizes = vec![0u64; cfg.n_blocks as usize + 2];
    for &b in &block_of {
        block_sizes[b as usize] += 1;
    }
    let gamma: Vec<f64> = block_of
        .iter()
        .map(|&b| cfg.block_decay.powi(b as i32) / (block_sizes[b as usize] as f64).sqrt())
        .collect();
    let sampler = LawSampler::new(&cfg.law)?;

    // Draw the unnormalized series v_γ; the ratio is scale-free.
    let coeffs: Vec<Vec<Complex64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(stream_seed(cfg.seed, i), 0);
            gamma
                .iter()
                .map(|&g| g * sampler.draw(&mut rng))
                .collect::<Vec<Complex64>>()
        })
        .collect();

    // ‖u‖_{B⁰_{2,1}} = Σ_n ‖u_n‖_{L²} directly from the coefficients.
    let besov: Vec<f64> = coeffs
        .iter()
        .map(|c| {
            let mut per_block = vec![0.0f64; cfg.n_blocks as usize + 2];
            for (ci, &b) in c.iter().zip(&block_of) {
                per_block[b as usize] += ci.norm_sqr();
            }
            per_block.iter().map(|v| v.sqrt()).sum()
        })
        .collect();

    // ‖u‖_{W^{s,r}} via the spectral multiplier and the exact/uniform grid.
    let multiplied: Vec<Vec<Complex64>> = coeffs
        .iter()
        .map(|c| {
            c.iter()
                .zip(&eigenvalues)
                .map(|(v, &lam)| v * lam.powf(s / 2.0))
                .collect()
        })
        .collect();
    let grid = super::lr_grid(&window, cfg.r)?;
    let sobolev = batch_lr(&basis, &multiplied, &grid, cfg.r, 0.0)?;

    let ratios: Vec<f64> = sobolev.iter().zip(&besov).map(|(w, b)| w / b).collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k_grid: Vec<f64> = match &cfg.k_grid {
        Some(g) => g.clone(),
        None => (1..=8)
            .map(|i| stats::quantile_sorted(&sorted, 0.40 + 0.07 * i as f64))
            .collect(),
    };

    let mut report = FitReport::new("besov_sobolev_gain", cfg.seed, config_hash(cfg));
    report.model = Some("P(W ≥ K B) ~ exp(-c K²)".into());
    report.constants.insert("sobolev_order_s".into(), s);
    let m = ratios.len() as f64;
    let mut xs = Vec::new();
    let mut probs = Vec::new();
    let mut counts = Vec::new();
    for &k in &k_grid {
        let exceed = ratios.iter().filter(|&&v| v >= k).count() as u64;
        let p = exceed as f64 / m;
        report.points.push(StatPoint {
            abscissa: k,
            statistic: p,
            ci_lo: (p - stats::binomial_se(p.clamp(1e-12, 1.0), cfg.samples)).max(0.0),
            ci_hi: (p + stats::binomial_se(p.clamp(1e-12, 1.0), cfg.samples)).min(1.0),
            n_samples: cfg.samples,
        });
        xs.push(k * k);
        probs.push(p);
        counts.push(exceed);
    }
    // -log p against K²; affine fit (the law has a K-independent prefactor).
    let mut fx = Vec::new();
    let mut fy = Vec::new();
    for ((&x, &p), &c) in xs.iter().zip(&probs).zip(&counts) {
        if c >= 20 && p < 1.0 {
            fx.push(x);
            fy.push(-p.ln());
        }
    }
    if fx.len() < 2 {
        return Err(CoreError::InsufficientSamples(
            "too few usable K bins".into(),
        ));
    }
    let (a, b, r2) = stats::linear_fit(&fx, &fy);
    report.constants.insert("intercept".into(), a);
    report.constants.insert("rate_c0".into(), b);
    report.r_squared = Some(r2);
    let nondecreasing = fy.windows(2).all(|w| w[1] >= w[0]);
    report
        .constants
        .insert("neg_log_p_nondecreasing".into(), nondecreasing as u8 as f64);
    // Convexity of -log p in K²: nondecreasing difference quotients, with a
    // small statistical tolerance.
    let mut convex = true;
    if fx.len() >= 3 {
        let mut prev_q = f64::NEG_INFINITY;
        for i in 1..fx.len() {
            let q = (fy[i] - fy[i - 1]) / (fx[i] - fx[i - 1]);
            convex &= q >= prev_q - 0.1 * q.abs().max(0.1);
            prev_q = q;
        }
    }
    report
        .constants
        .insert("convex_in_k2".into(), convex as u8 as f64);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
