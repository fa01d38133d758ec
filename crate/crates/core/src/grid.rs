//! Tensor evaluation/integration grids on ℝ^d.
//!
//! Two modes:
//!
//! * **Tensor Gauss–Hermite** — nodes `x = t/√ρ` of a Gauss–Hermite rule
//!   with weight-factored weights, integrating `f ~ poly · e^{-ρ|x|²}`
//!   exactly.  With `ρ = r/2` this integrates `|u|^r` of a window function
//!   exactly for even integer `r`.
//! * **Uniform-truncated** — an equispaced grid on `[-R, R]^d`, used for
//!   sup-norms and non-integer exponents.
//!
//! Cutoff policy: `R ≥ 1.5 √(b_h/h)` so the grid covers the classically
//! allowed region `|x|² ≤ λ` of the attached window with margin, beyond
//! which the spectral function decays super-polynomially.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::quadrature;
use crate::spectral::SpectralWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    TensorGaussHermite,
    UniformTruncated,
}

/// Per-axis nodes with weights for direct integration `∫ f dx ≈ Σ w f(x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridAxis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub dimension: usize,
    pub axes: Vec<GridAxis>,
    pub mode: GridMode,
    /// Gaussian decay rate the tensor-GH mode is tuned to (`e^{-ρ|x|²}`).
    pub decay_rate: f64,
    /// Largest 1-D degree integrable exactly (after weight factoring).
    pub design_degree: usize,
    r_cut: f64,
}

impl QuadratureGrid {
    /// Tensor Gauss–Hermite grid of the given per-axis order, tuned to
    /// integrands decaying like `e^{-rho |x|²}`.
    pub fn tensor_gauss_hermite(d: usize, order: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(CoreError::DomainError(format!(
                "decay rate ρ = {rho} must be positive"
            )));
        }
        let rule = quadrature::gauss_hermite_rule(order)?;
        let scale = rho.sqrt().recip();
        let nodes: Vec<f64> = rule.nodes.iter().map(|&t| scale * t).collect();
        let weights: Vec<f64> = rule
            .physical_weights
            .iter()
            .map(|&w| scale * w)
            .collect();
        let r_cut = nodes.last().copied().unwrap_or(0.0);
        let axis = GridAxis { nodes, weights };
        Ok(Self {
            dimension: d,
            axes: vec![axis; d],
            mode: GridMode::TensorGaussHermite,
            decay_rate: rho,
            design_degree: 2 * order - 1,
            r_cut,
        })
    }

    /// Uniform grid on `[-r_cut, r_cut]^d` with at most `spacing` between
    /// nodes (trapezoid-style unit weights).  The node count is odd so the
    /// origin is always on the grid.
    pub fn uniform(d: usize, r_cut: f64, spacing: f64) -> Result<Self> {
        if !(r_cut > 0.0 && spacing > 0.0) {
            return Err(CoreError::DomainError(
                "uniform grid needs positive cutoff and spacing".into(),
            ));
        }
        let half = (r_cut / spacing).ceil() as usize;
        let n = 2 * half + 1;
        let step = r_cut / half as f64;
        let nodes: Vec<f64> = (0..n).map(|i| -r_cut + step * i as f64).collect();
        let mut weights = vec![step; n];
        weights[0] = step / 2.0;
        weights[n - 1] = step / 2.0;
        let axis = GridAxis { nodes, weights };
        Ok(Self {
            dimension: d,
            axes: vec![axis; d],
            mode: GridMode::UniformTruncated,
            decay_rate: 0.0,
            design_degree: usize::MAX,
            r_cut,
        })
    }

    /// Grid adapted to integrating `|u|^r` (u in the window) exactly for
    /// even integer `r`: decay `ρ = r/2`, order covering degree `r·k_max`.
    pub fn for_window_lr(w: &SpectralWindow, r: f64) -> Result<Self> {
        let k_max = w.max_degree() as f64;
        let rho = (r / 2.0).max(1.0);
        let order = (((r.max(2.0) * k_max) / 2.0).ceil() as usize + 8)
            .min(quadrature::MAX_ORDER)
            .max(16);
        Self::tensor_gauss_hermite(w.dimension, order, rho)
    }

    /// Uniform grid covering the classically allowed region of the window,
    /// with `points_per_wavelength` nodes per central oscillation `2π/√λ`.
    pub fn for_window_sup(w: &SpectralWindow, points_per_wavelength: f64) -> Result<Self> {
        let lambda = (w.b_h / w.h).max(w.dimension as f64);
        let r_cut = 1.5 * lambda.sqrt();
        let spacing = 2.0 * std::f64::consts::PI / (points_per_wavelength * lambda.sqrt());
        Self::uniform(w.dimension, r_cut, spacing)
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    /// Check that the grid can integrate products of eigenfunctions up to
    /// the window degree (tensor-GH mode only).
    pub fn check_envelope(&self, w: &SpectralWindow, r: f64) -> Result<()> {
        if self.mode == GridMode::TensorGaussHermite {
            let need = (r.max(1.0) * w.max_degree() as f64).ceil() as usize;
            if need > self.design_degree {
                return Err(CoreError::GridEnvelope);
            }
        }
        Ok(())
    }

    /// Iterate all tensor points with their product weights.
    ///
    /// Row-major over axes; intended for test-scale consumption — hot loops
    /// use the structured per-axis data directly.
    pub fn points(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.nodes.len()).collect();
        let total: usize = sizes.iter().product();
        (0..total).map(move |mut flat| {
            let mut x = vec![0.0; self.dimension];
            let mut wt = 1.0;
            for (ax, axis) in self.axes.iter().enumerate().rev() {
                let n = axis.nodes.len();
                let i = flat % n;
                flat /= n;
                x[ax] = axis.nodes[i];
                wt *= axis.weights[i];
            }
            (x, wt)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gh_grid_integrates_gaussian_exactly() {
        // ∫ e^{-|x|²} dx over ℝ² = π.
        let g = QuadratureGrid::tensor_gauss_hermite(2, 12, 1.0).unwrap();
        let v: f64 = g
            .points()
            .map(|(x, w)| w * (-(x[0] * x[0] + x[1] * x[1])).exp())
            .sum();
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-13);
    }

    #[test]
    fn scaled_grid_matches_decay() {
        // ∫ e^{-3x²} dx = √(π/3) with ρ = 3.
        let g = QuadratureGrid::tensor_gauss_hermite(1, 10, 3.0).unwrap();
        let v: f64 = g.points().map(|(x, w)| w * (-3.0 * x[0] * x[0]).exp()).sum();
        assert_relative_eq!(v, (std::f64::consts::PI / 3.0).sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn uniform_grid_contains_origin_and_covers_cutoff() {
        let g = QuadratureGrid::uniform(2, 5.0, 0.3).unwrap();
        assert!(g.axes[0].nodes.iter().any(|&x| x == 0.0));
        assert_eq!(*g.axes[0].nodes.first().unwrap(), -5.0);
        assert_eq!(*g.axes[0].nodes.last().unwrap(), 5.0);
        // Trapezoid weights integrate a constant to (2R)^d.
        let v: f64 = g.points().map(|(_, w)| w).sum();
        assert_relative_eq!(v, 100.0, max_relative = 1e-12);
    }

    #[test]
    fn sup_grid_respects_cutoff_policy() {
        let w = crate::spectral::single_level_window(2, 10).unwrap();
        let g = QuadratureGrid::for_window_sup(&w, 5.0).unwrap();
        let lambda = w.b_h / w.h;
        assert!(g.r_cut() >= 1.5 * lambda.sqrt() - 1e-12);
    }

    #[test]
    fn envelope_check() {
        let w = crate::spectral::single_level_window(2, 30).unwrap();
        let g = QuadratureGrid::tensor_gauss_hermite(2, 16, 1.0).unwrap();
        assert!(matches!(
            g.check_envelope(&w, 2.0),
            Err(CoreError::GridEnvelope)
        ));
        let g = QuadratureGrid::for_window_lr(&w, 2.0).unwrap();
        assert!(g.check_envelope(&w, 2.0).is_ok());
    }
}
