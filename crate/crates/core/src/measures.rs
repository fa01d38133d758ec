//! Coefficient profiles, random laws and measures on the sphere of a
//! spectral subspace.
//!
//! A profile `γ` over the window plus an i.i.d. law for the `X_j` defines
//! the random vector `v_γ = Σ γ_j X_j φ_j`; normalizing to the unit sphere
//! pushes its law forward to the sphere measure.  Every shipped law is
//! centred with unit variance per (real) component.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::stream_rng;
use crate::spectral::SpectralWindow;

/// Squeezing constants of a profile: `K₀ = N max|γ|²/|γ|²_Λ`,
/// `K₁ = N min|γ|²/|γ|²_Λ`, so `K₁ ≤ 1 ≤ K₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub k0: f64,
    pub k1: f64,
}

impl SqueezingReport {
    /// A zero entry makes the lower squeezing constant vanish.
    pub fn lower_condition_violated(&self) -> bool {
        self.k1 == 0.0
    }
}

/// The tightest squeezing constants of `gamma` against a window of dimension
/// `n_total`.
pub fn validate_profile(gamma: &[Complex64], window: &SpectralWindow) -> Result<SqueezingReport> {
    let n = window.n_total() as usize;
    if gamma.len() != n {
        return Err(CoreError::LengthMismatch {
            got: gamma.len(),
            expected: n,
        });
    }
    let norm_sq: f64 = gamma.iter().map(|g| g.norm_sqr()).sum();
    if norm_sq == 0.0 {
        return Err(CoreError::AllZeroProfile);
    }
    let mut max_sq = 0.0f64;
    let mut min_sq = f64::INFINITY;
    for g in gamma {
        let m = g.norm_sqr();
        max_sq = max_sq.max(m);
        min_sq = min_sq.min(m);
    }
    let nf = n as f64;
    Ok(SqueezingReport {
        k0: nf * max_sq / norm_sq,
        k1: nf * min_sq / norm_sq,
    })
}

/// A coefficient profile over a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientProfile {
    pub gamma: Vec<Complex64>,
    pub norm_sq: f64,
}

impl CoefficientProfile {
    pub fn new(gamma: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = gamma.iter().map(|g| g.norm_sqr()).sum();
        if norm_sq == 0.0 {
            return Err(CoreError::AllZeroProfile);
        }
        Ok(Self { gamma, norm_sq })
    }

    /// `γ_j = N^{-1/2}` for all j: the uniform-measure profile.
    pub fn isotropic(n: usize) -> Self {
        let v = (n as f64).sqrt().recip();
        Self {
            gamma: vec![Complex64::new(v, 0.0); n],
            norm_sq: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// Piecewise-linear density on a bounded support, recentred and rescaled at
/// construction to mean 0 and variance 1 (exact moments of the interpolant,
/// and sampling by exact inversion of its quadratic per-segment CDF).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    /// Standardized support nodes.
    pub xs: Vec<f64>,
    /// Normalized density values at the nodes.
    pub pdf: Vec<f64>,
    /// CDF at the nodes; cdf[0] = 0, cdf[last] = 1.
    pub cdf: Vec<f64>,
}

impl DensityTable {
    pub fn from_density(xs: &[f64], pdf: &[f64]) -> Result<Self> {
        if xs.len() != pdf.len() || xs.len() < 2 {
            return Err(CoreError::InvalidLaw(
                "density table needs ≥ 2 matching nodes".into(),
            ));
        }
        if pdf.iter().any(|&p| p < 0.0) || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CoreError::InvalidLaw(
                "density must be nonnegative on increasing nodes".into(),
            ));
        }
        // Exact moments of the piecewise-linear interpolant.
        let mut mass = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (x, p) in xs.windows(2).zip(pdf.windows(2)) {
            let dx = x[1] - x[0];
            mass += 0.5 * (p[0] + p[1]) * dx;
            m1 += dx * (p[0] * (2.0 * x[0] + x[1]) + p[1] * (x[0] + 2.0 * x[1])) / 6.0;
            m2 += dx
                * (p[0] * (3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] + x[1] * x[1])
                    + p[1] * (x[0] * x[0] + 2.0 * x[0] * x[1] + 3.0 * x[1] * x[1]))
                / 12.0;
        }
        if mass <= 0.0 {
            return Err(CoreError::InvalidLaw("density has zero mass".into()));
        }
        let mean = m1 / mass;
        let var = m2 / mass - mean * mean;
        if var <= 0.0 {
            return Err(CoreError::InvalidLaw("density has zero variance".into()));
        }
        let sd = var.sqrt();
        let std_xs: Vec<f64> = xs.iter().map(|&x| (x - mean) / sd).collect();
        // Normalized density on the standardized axis: q = p·sd/mass.
        let q: Vec<f64> = pdf.iter().map(|&p| p * sd / mass).collect();
        let mut cdf = Vec::with_capacity(xs.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for (y, p) in std_xs.windows(2).zip(q.windows(2)) {
            acc += 0.5 * (p[0] + p[1]) * (y[1] - y[0]);
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        for c in cdf.iter_mut() {
            *c /= total;
        }
        Ok(Self {
            xs: std_xs,
            pdf: q,
            cdf,
        })
    }

    fn sample(&self, u: f64) -> f64 {
        let i = match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) => i.max(1),
            Err(i) => i.min(self.cdf.len() - 1).max(1),
        };
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let (y0, y1) = (self.xs[i - 1], self.xs[i]);
        let (q0, q1) = (self.pdf[i - 1], self.pdf[i]);
        if c1 <= c0 {
            return y0;
        }
        // Invert the quadratic segment CDF
        // w(τ) = (y1-y0)(q0 τ + (q1-q0) τ²/2), τ ∈ [0,1].
        let w = (u - c0) / (c1 - c0) * (c1 - c0);
        let dy = y1 - y0;
        let a = (q1 - q0) / 2.0;
        let b = q0;
        let rhs = w / dy;
        let tau = if a.abs() < 1e-14 * b.abs().max(1e-300) {
            rhs / b
        } else {
            let disc = (b * b + 4.0 * a * rhs).max(0.0);
            (-b + disc.sqrt()) / (2.0 * a)
        };
        y0 + tau.clamp(0.0, 1.0) * dy
    }
}

/// Tabulated quantile function of the symmetric density `c_α e^{-|x|^α}`,
/// rescaled to unit variance.  Resolution 2^16; an approximation by
/// construction (no closed form exists for general α).
#[derive(Debug, Clone)]
struct AlphaExpTable {
    /// Quantiles of |X| at u = i/(RES-1).
    quantiles: Vec<f64>,
}

const ALPHA_TABLE_RES: usize = 1 << 16;

impl AlphaExpTable {
    fn build(alpha: f64) -> Self {
        // Simpson integration of e^{-y^α} on [0, y_max]; y_max chosen so the
        // tail is below f64 noise.
        let y_max = (745.0f64).powf(1.0 / alpha).min(1e6);
        let n = 200_001; // odd for Simpson
        let dy = y_max / (n - 1) as f64;
        let f = |y: f64| (-(y.powf(alpha))).exp();
        // Cumulative integral at each node via composite Simpson on pairs.
        let mut cum = vec![0.0; n];
        let mut second = 0.0;
        let mut var_acc = 0.0;
        for i in (2..n).step_by(2) {
            let y0 = (i - 2) as f64 * dy;
            let y1 = (i - 1) as f64 * dy;
            let y2 = i as f64 * dy;
            let seg = dy / 3.0 * (f(y0) + 4.0 * f(y1) + f(y2));
            cum[i] = cum[i - 2] + seg;
            cum[i - 1] = cum[i - 2] + 0.5 * seg; // midpoint fill, plenty for a table
            second += seg;
            var_acc += dy / 3.0 * (y0 * y0 * f(y0) + 4.0 * y1 * y1 * f(y1) + y2 * y2 * f(y2));
        }
        let mass = second;
        let variance = var_acc / mass;
        let sd = variance.sqrt();
        // Invert the CDF of |X| on a uniform u-grid.
        let mut quantiles = Vec::with_capacity(ALPHA_TABLE_RES);
        let mut j = 0usize;
        for i in 0..ALPHA_TABLE_RES {
            let u = i as f64 / (ALPHA_TABLE_RES - 1) as f64 * mass;
            while j + 1 < n && cum[j + 1] < u {
                j += 1;
            }
            let (c0, c1) = (cum[j], cum[(j + 1).min(n - 1)]);
            let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
            let y = (j as f64 + frac) * dy;
            quantiles.push(y / sd);
        }
        Self { quantiles }
    }

    fn sample(&self, u: f64) -> f64 {
        let pos = u * (ALPHA_TABLE_RES - 1) as f64;
        let i = (pos.floor() as usize).min(ALPHA_TABLE_RES - 2);
        let t = pos - i as f64;
        self.quantiles[i] * (1.0 - t) + self.quantiles[i + 1] * t
    }
}

/// Serializable description of a component law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RandomLaw {
    /// Standard complex Gaussian N_ℂ(0,1): independent real and imaginary
    /// parts N(0, 1/2), so E|X|² = 1.
    ComplexGaussian,
    /// Real standard Gaussian.
    Gaussian,
    /// ±1 with probability 1/2.
    Rademacher,
    /// Density ∝ e^{-|x|^α}, α ≥ 2, rescaled to unit variance.
    AlphaExponential { alpha: f64 },
    /// Custom bounded-support density (Talagrand regime).
    BoundedSupport { table: DensityTable },
    /// Uniform on [-√3, √3] (bounded, unit variance).
    BoundedUniform,
}

impl RandomLaw {
    pub fn validate(&self) -> Result<()> {
        if let RandomLaw::AlphaExponential { alpha } = self {
            if !(*alpha >= 2.0) {
                return Err(CoreError::InvalidLaw(format!(
                    "alpha-exponential law needs α ≥ 2, got {alpha}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, RandomLaw::ComplexGaussian)
    }

    pub fn name(&self) -> &'static str {
        match self {
            RandomLaw::ComplexGaussian => "complex-gaussian",
            RandomLaw::Gaussian => "gaussian",
            RandomLaw::Rademacher => "rademacher",
            RandomLaw::AlphaExponential { .. } => "alpha-exponential",
            RandomLaw::BoundedSupport { .. } => "bounded-support",
            RandomLaw::BoundedUniform => "bounded-uniform",
        }
    }
}

/// A law plus any tables it needs; build once per experiment.
pub struct LawSampler {
    law: RandomLaw,
    alpha_table: Option<AlphaExpTable>,
}

impl LawSampler {
    pub fn new(law: &RandomLaw) -> Result<Self> {
        law.validate()?;
        let alpha_table = match law {
            RandomLaw::AlphaExponential { alpha } => Some(AlphaExpTable::build(*alpha)),
            _ => None,
        };
        Ok(Self {
            law: law.clone(),
            alpha_table,
        })
    }

    /// Draw one component X_n.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        match &self.law {
            RandomLaw::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            RandomLaw::Gaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
            RandomLaw::Rademacher => {
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(s, 0.0)
            }
            RandomLaw::AlphaExponential { .. } => {
                let table = self.alpha_table.as_ref().unwrap();
                let mag = table.sample(rng.gen::<f64>());
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(s * mag, 0.0)
            }
            RandomLaw::BoundedSupport { table } => Complex64::new(table.sample(rng.gen()), 0.0),
            RandomLaw::BoundedUniform => {
                let half = 3.0f64.sqrt();
                Complex64::new(rng.gen_range(-half..half), 0.0)
            }
        }
    }
}

/// The coefficient vector `(γ_j X_j)_j` of `v_γ` for stream `seed`.
///
/// Deterministic in `(profile, law, seed)`: components are drawn in index
/// order from a single counter-based stream.
pub fn sample_coefficients(
    profile: &CoefficientProfile,
    sampler: &LawSampler,
    seed: u64,
) -> Vec<Complex64> {
    let mut rng = stream_rng(seed, 0);
    profile
        .gamma
        .iter()
        .map(|g| g * sampler.draw(&mut rng))
        .collect()
}

/// A unit-norm random element of the sphere, with its provenance
/// (law, profile, stream seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereSample {
    pub coefficients: Vec<Complex64>,
    pub law: String,
    pub gamma: Vec<Complex64>,
    pub seed: u64,
}

impl SphereSample {
    pub fn norm_sq(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Project a coefficient vector to the unit sphere.
pub fn normalize_to_sphere(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CoreError::ZeroVector);
    }
    Ok(coeffs.iter().map(|c| c / norm).collect())
}

/// One sphere sample for stream `seed`.
pub fn sphere_sample(
    profile: &CoefficientProfile,
    sampler: &LawSampler,
    law: &RandomLaw,
    seed: u64,
) -> Result<SphereSample> {
    let coeffs = sample_coefficients(profile, sampler, seed);
    Ok(SphereSample {
        coefficients: normalize_to_sphere(&coeffs)?,
        law: law.name().to_string(),
        gamma: profile.gamma.clone(),
        seed,
    })
}

/// Exact CCDF of the modulus of one complex coordinate under the uniform
/// measure on the complex N-sphere: `Φ(t) = (1-t²)^{N-1}` for `t ∈ [0,1)`.
pub fn uniform_marginal_ccdf(n: usize, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(CoreError::DomainError("N must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(CoreError::DomainError(format!(
            "t = {t} outside [0, 1)"
        )));
    }
    Ok((1.0 - t * t).powi(n as i32 - 1))
}

/// Finite-J Kakutani diagnostics between product measures with scale
/// sequences `γ` and `β` for the density `c_α e^{-|x|^α}`:
/// the partial affinity product `∏_{j≤J} π_j` with
/// `π_j = (½(γ_j/β_j)^{α/2} + ½(β_j/γ_j)^{α/2})^{-1/α}`, and the divergence
/// partial sum `Σ_{j≤J} (|γ_j/β_j|^{α/2} - 1)²`.
///
/// Reports finite-J values only; divergence of the infinite product is never
/// decided here.
pub fn kakutani_affinity(
    gamma: &[f64],
    beta: &[f64],
    alpha: f64,
    j_max: usize,
) -> Result<(f64, f64)> {
    if j_max > gamma.len().min(beta.len()) {
        return Err(CoreError::LengthMismatch {
            got: j_max,
            expected: gamma.len().min(beta.len()),
        });
    }
    if !(alpha >= 2.0) {
        return Err(CoreError::InvalidLaw(format!(
            "Kakutani affinity defined here for α ≥ 2, got {alpha}"
        )));
    }
    let mut product = 1.0;
    let mut divergence = 0.0;
    for j in 0..j_max {
        if !(gamma[j] > 0.0) || !(beta[j] > 0.0) {
            return Err(CoreError::NonPositiveEntry);
        }
        let ratio = gamma[j] / beta[j];
        let r_half = ratio.powf(alpha / 2.0);
        product *= (0.5 * r_half + 0.5 / r_half).powf(-1.0 / alpha);
        divergence += (r_half - 1.0).powi(2);
    }
    Ok((product, divergence))
}
