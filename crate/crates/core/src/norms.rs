//! Weighted Lebesgue norms `L^{r,s}`, harmonic Sobolev norms `W^{s,r}`,
//! dyadic Besov decompositions and interpolation-inequality checks.
//!
//! The conventions are
//!
//! ```text
//! ‖u‖_{r,s}    = (∫ |u|^r ⟨x⟩^s dx)^{1/r},    ‖u‖_{∞,s} = sup ⟨x⟩^s |u(x)|
//! ‖u‖_{W^{s,r}} = ‖H^{s/2} u‖_{L^r}           (spectral multiplier λ^{s/2})
//! ```
//!
//! with `⟨x⟩ = (1 + |x|²)^{1/2}`.  These routines are the reference
//! implementations, evaluated term by term over a [`QuadratureGrid`]; the
//! experiment kernels in [`crate::eval`] produce identical values by a
//! batched route and are tested against these.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::{GridMode, QuadratureGrid};
use crate::hermite;
use crate::spectral::{MultiIndex, SpectralWindow, WindowFunction};

/// Norm descriptor: exponent `r ∈ [1, ∞]`, weight/smoothness parameter `s`,
/// and, when the norm came from the `θ`-parameterized family
/// `L^{r, θ(r/2-1)}`, the `θ` it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub r: f64,
    pub s: f64,
    pub theta: Option<f64>,
}

impl NormSpec {
    pub fn lebesgue(r: f64, s: f64) -> Result<Self> {
        if !(r >= 1.0) {
            return Err(CoreError::DomainError(format!("r = {r} must be ≥ 1")));
        }
        Ok(Self { r, s, theta: None })
    }

    /// The weighted family of the two-sided median estimates:
    /// `L^{r, θ(r/2-1)}`.
    pub fn weighted_family(r: f64, theta: f64) -> Result<Self> {
        let mut spec = Self::lebesgue(r, theta * (r / 2.0 - 1.0))?;
        spec.theta = Some(theta);
        Ok(spec)
    }

    pub fn sup(s: f64) -> Self {
        Self {
            r: f64::INFINITY,
            s,
            theta: None,
        }
    }

    pub fn is_sup(&self) -> bool {
        self.r.is_infinite()
    }
}

/// A finite Hermite expansion `u = Σ c_j φ_j` over arbitrary multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteSeries {
    pub dimension: usize,
    pub terms: Vec<(MultiIndex, Complex64)>,
}

impl HermiteSeries {
    pub fn new(dimension: usize, terms: Vec<(MultiIndex, Complex64)>) -> Result<Self> {
        if terms.iter().any(|(j, _)| j.dimension() != dimension) {
            return Err(CoreError::InvalidWindow(
                "multi-index dimension mismatch in series".into(),
            ));
        }
        Ok(Self { dimension, terms })
    }

    pub fn from_window(w: &SpectralWindow, coeffs: &[Complex64]) -> Result<Self> {
        let f = WindowFunction::new(w, coeffs)?;
        Ok(Self {
            dimension: w.dimension,
            terms: f
                .window
                .multi_indices()
                .zip(coeffs.iter().copied())
                .collect(),
        })
    }

    pub fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(j, _)| j.0.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient ℓ² norm; equals `‖u‖_{L²}` by orthonormality.
    pub fn coeff_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Apply the spectral multiplier `λ_j^{s/2}`.
    pub fn sobolev_multiplier(&self, s: f64) -> Self {
        Self {
            dimension: self.dimension,
            terms: self
                .terms
                .iter()
                .map(|(j, c)| (j.clone(), c * j.eigenvalue().powf(s / 2.0)))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let tables = self.axis_tables(x)?;
        Ok(self.eval_with_tables(&tables))
    }

    fn axis_tables(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.dimension {
            return Err(CoreError::LengthMismatch {
                got: x.len(),
                expected: self.dimension,
            });
        }
        let kmax = self.max_degree();
        if kmax > hermite::MAX_DEGREE {
            return Err(CoreError::DegreeOverflow {
                degree: kmax,
                limit: hermite::MAX_DEGREE,
            });
        }
        Ok(x.iter()
            .map(|&xi| {
                let mut t = vec![0.0; kmax + 1];
                hermite::eval_all_into(xi, &mut t);
                t
            })
            .collect())
    }

    fn eval_with_tables(&self, tables: &[Vec<f64>]) -> Complex64 {
        self.terms
            .iter()
            .map(|(j, c)| {
                let phi: f64 = j.0.iter().zip(tables).map(|(&n, t)| t[n]).product();
                c * phi
            })
            .sum()
    }
}

/// `‖u‖_{r,s}` over the grid (the grid sup for `r = ∞`).
pub fn weighted_norm(u: &HermiteSeries, spec: &NormSpec, grid: &QuadratureGrid) -> Result<f64> {
    if grid.dimension != u.dimension {
        return Err(CoreError::LengthMismatch {
            got: grid.dimension,
            expected: u.dimension,
        });
    }
    if grid.mode == GridMode::TensorGaussHermite {
        let need = if spec.is_sup() { 1.0 } else { spec.r };
        let deg = (need.max(1.0) * u.max_degree() as f64).ceil() as usize;
        if deg > grid.design_degree {
            return Err(CoreError::GridEnvelope);
        }
    }
    if spec.is_sup() {
        let mut best = 0.0f64;
        for (x, _) in grid.points() {
            let w = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(spec.s / 2.0);
            let v = u.eval(&x)?.norm() * w;
            best = best.max(v);
        }
        Ok(best)
    } else {
        let mut acc = 0.0f64;
        for (x, wt) in grid.points() {
            let w = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(spec.s / 2.0);
            acc += wt * w * u.eval(&x)?.norm().powf(spec.r);
        }
        Ok(acc.powf(1.0 / spec.r))
    }
}

/// `‖u‖_{W^{s,r}} = ‖H^{s/2} u‖_{L^r}`: multiplier then unweighted norm.
pub fn sobolev_norm(u: &HermiteSeries, s: f64, r: f64, grid: &QuadratureGrid) -> Result<f64> {
    if s < 0.0 {
        return Err(CoreError::DomainError(format!(
            "Sobolev order s = {s} must be ≥ 0"
        )));
    }
    let multiplied = u.sobolev_multiplier(s);
    weighted_norm(&multiplied, &NormSpec::lebesgue(r, 0.0)?, grid)
}

/// Partition a series by dyadic eigenvalue blocks `λ ∈ [2^n, 2^{n+1})`.
///
/// Blocks are returned in increasing `n`; concatenating their terms (in
/// block order) reproduces the input terms up to reordering between blocks,
/// with the original order kept inside each block.
pub fn dyadic_blocks(u: &HermiteSeries) -> Vec<(u32, HermiteSeries)> {
    let mut blocks: Vec<(u32, HermiteSeries)> = Vec::new();
    for (j, c) in &u.terms {
        let n = j.eigenvalue().log2().floor() as u32;
        match blocks.binary_search_by_key(&n, |(b, _)| *b) {
            Ok(pos) => blocks[pos].1.terms.push((j.clone(), *c)),
            Err(pos) => blocks.insert(
                pos,
                (
                    n,
                    HermiteSeries {
                        dimension: u.dimension,
                        terms: vec![(j.clone(), *c)],
                    },
                ),
            ),
        }
    }
    blocks
}

/// Besov norm `‖{2^{ns/2} ‖u_n‖_{L^p}}‖_{ℓ^q}` of a dyadic block list.
pub fn besov_norm(
    blocks: &[(u32, HermiteSeries)],
    s: f64,
    p: f64,
    q: f64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let spec = NormSpec::lebesgue(p, 0.0)?;
    let mut scaled = Vec::with_capacity(blocks.len());
    for (n, block) in blocks {
        let lp = weighted_norm(block, &spec, grid)?;
        scaled.push(2.0f64.powf(*n as f64 * s / 2.0) * lp);
    }
    if q.is_infinite() {
        Ok(scaled.into_iter().fold(0.0, f64::max))
    } else {
        if !(q >= 1.0) {
            return Err(CoreError::DomainError(format!("q = {q} must be ≥ 1")));
        }
        Ok(scaled
            .into_iter()
            .map(|v| v.powf(q))
            .sum::<f64>()
            .powf(1.0 / q))
    }
}

/// Both sides of an interpolation inequality, and whether it held.
#[derive(Debug, Clone, Copy)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// rhs/lhs; ≥ 1 when satisfied.
    pub slack: f64,
}

/// Check `‖u‖_{L^{p,s}} ≤ ‖u‖_{L^{p0,s0}}^{1-κ} ‖u‖_{L^{p1,s1}}^κ` with
/// `1/p = κ/p₁ + (1-κ)/p₀` and the matched weight
/// `s = (p₁-p)/(p₁-p₀) s₀ + (p₀-p)/(p₀-p₁) s₁`; for `p₀ = ∞` the first
/// factor is `(sup ⟨x⟩^{s₀}|u|)^{1-p₁/p}` and `s = (p-p₁)s₀ + s₁`.
pub fn interpolation_check(
    u: &HermiteSeries,
    p0: f64,
    p1: f64,
    p: f64,
    s0: f64,
    s1: f64,
    grid: &QuadratureGrid,
) -> Result<InterpolationReport> {
    if !(1.0 <= p1 && p1 <= p && p <= p0) {
        return Err(CoreError::IncompatibleExponents(format!(
            "need 1 ≤ p₁ ≤ p ≤ p₀, got p₁={p1}, p={p}, p₀={p0}"
        )));
    }
    let (lhs, rhs) = if p0.is_infinite() {
        let s = (p - p1) * s0 + s1;
        let lhs = weighted_norm(u, &NormSpec::lebesgue(p, s)?, grid)?;
        let sup = weighted_norm(u, &NormSpec::sup(s0), grid)?;
        let lp1 = weighted_norm(u, &NormSpec::lebesgue(p1, s1)?, grid)?;
        (lhs, sup.powf(1.0 - p1 / p) * lp1.powf(p1 / p))
    } else if p0 == p1 {
        // Degenerate: all three norms coincide.
        let lhs = weighted_norm(u, &NormSpec::lebesgue(p, s1)?, grid)?;
        (lhs, lhs)
    } else {
        let kappa = p1 * (p0 - p) / (p * (p0 - p1));
        let s = (p1 - p) / (p1 - p0) * s0 + (p0 - p) / (p0 - p1) * s1;
        let lhs = weighted_norm(u, &NormSpec::lebesgue(p, s)?, grid)?;
        let n0 = weighted_norm(u, &NormSpec::lebesgue(p0, s0)?, grid)?;
        let n1 = weighted_norm(u, &NormSpec::lebesgue(p1, s1)?, grid)?;
        (lhs, n0.powf(1.0 - kappa) * n1.powf(kappa))
    };
    Ok(InterpolationReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + 1e-8),
        slack: rhs / lhs,
    })
}
