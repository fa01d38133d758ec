//! Gauss–Hermite quadrature rules.
//!
//! Nodes are the zeros of the degree-`order` Hermite polynomial, obtained
//! Golub–Welsch style as eigenvalues of the symmetric tridiagonal Jacobi
//! matrix (off-diagonal `√(k/2)`) and then Newton-polished with the stable
//! Hermite-function recurrence.  Weights come from the classical identity
//!
//! ```text
//! w_i e^{x_i²} = 1 / Σ_{m < order} h_m(x_i)²
//! ```
//!
//! whose right-hand side involves only O(1) quantities, so the
//! weight-factored ("physical") weights never overflow or underflow even at
//! order 2048, where the raw weights `w_i` themselves leave the f64 range at
//! the extreme nodes.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::hermite;

/// Largest supported rule order.
pub const MAX_ORDER: usize = 2048;

/// Weight convention carried by a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    /// `Σ w_i f(x_i) ≈ ∫ f(x) e^{-x²} dx` (classical Gauss–Hermite).
    GaussHermite,
    /// `Σ w_i f(x_i) ≈ ∫ f(x) dx` on a truncated uniform grid.
    UniformUnit,
}

/// A 1-D quadrature rule: strictly increasing nodes with positive weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule1D {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule1D {
    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Hermite rule of the given order for the weight `e^{-x²}`.
///
/// Exact for polynomials of degree `≤ 2·order - 1`; `Σ w_i = √π`.
pub fn gauss_hermite_rule(order: usize) -> Result<Arc<GaussHermiteRule>> {
    if order == 0 || order > MAX_ORDER {
        return Err(CoreError::OrderOverflow {
            order,
            limit: MAX_ORDER,
        });
    }
    if let Some(rule) = memo_get(order) {
        return Ok(rule);
    }
    let rule = Arc::new(compute_rule(order));
    memo_put(order, rule.clone());
    Ok(rule)
}

/// A Gauss–Hermite rule together with its stable weight-factored weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussHermiteRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    /// Classical weights for `∫ f e^{-x²}`; underflow to subnormals at the
    /// extreme nodes once the order exceeds a few hundred.
    pub weights: Vec<f64>,
    /// `w_i e^{x_i²}`, computed without cancellation; `Σ W_i f(x_i)`
    /// integrates `f ~ poly · e^{-x²}` exactly.
    pub physical_weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn as_rule(&self) -> QuadratureRule1D {
        QuadratureRule1D {
            order: self.order,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            kind: RuleKind::GaussHermite,
        }
    }
}

fn compute_rule(order: usize) -> GaussHermiteRule {
    if let Some(rule) = disk_cache_read(order) {
        return rule;
    }
    // Jacobi matrix: zero diagonal, off-diagonal sqrt(k/2).
    let mut diag = vec![0.0; order];
    let mut off = vec![0.0; order];
    for k in 1..order {
        off[k - 1] = (k as f64 / 2.0).sqrt();
    }
    tridiagonal_eigenvalues(&mut diag, &mut off);
    diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut nodes = diag;

    // Newton polish on h_order, using h' = √(2n) h_{n-1} - x h_n.
    let mut buf = vec![0.0; order + 1];
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            hermite::eval_all_into(*x, &mut buf);
            let f = buf[order];
            let df = (2.0 * order as f64).sqrt() * buf[order - 1] - *x * buf[order];
            if df == 0.0 {
                break;
            }
            let dx = f / df;
            *x -= dx;
            if dx.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    }
    // Symmetrize: zeros of H_n come in ± pairs (middle node of odd rules is 0).
    let n = nodes.len();
    for i in 0..n / 2 {
        let s = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[n - 1 - i] = s;
        nodes[i] = -s;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let mut physical = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let mut hbuf = vec![0.0; order];
    for (i, &x) in nodes.iter().enumerate() {
        hermite::eval_all_into(x, &mut hbuf);
        let s: f64 = hbuf.iter().map(|v| v * v).sum();
        physical[i] = 1.0 / s;
        weights[i] = physical[i] * (-x * x).exp();
    }
    let rule = GaussHermiteRule {
        order,
        nodes,
        weights,
        physical_weights: physical,
    };
    disk_cache_write(&rule);
    rule
}

/// Eigenvalues of a symmetric tridiagonal matrix by the implicit QL method
/// with Wilkinson shifts (eigenvalues only, O(n²)).
///
/// `diag` holds the diagonal and is overwritten with the eigenvalues in no
/// particular order; `off[0..n-1]` holds the off-diagonal and is destroyed.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) {
    let n = diag.len();
    if n <= 1 {
        return;
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible off-diagonal element.
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                f = 0.0;
                let _ = f;
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

// -- process-wide rule memo and optional on-disk cache ----------------------

fn memo() -> &'static Mutex<HashMap<usize, Arc<GaussHermiteRule>>> {
    static MEMO: OnceLock<Mutex<HashMap<usize, Arc<GaussHermiteRule>>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn memo_get(order: usize) -> Option<Arc<GaussHermiteRule>> {
    memo().lock().unwrap().get(&order).cloned()
}

fn memo_put(order: usize, rule: Arc<GaussHermiteRule>) {
    memo().lock().unwrap().insert(order, rule);
}

static CACHE_DIR: OnceLock<Option<PathBuf>> = OnceLock::new();

/// Set the on-disk cache directory for computed rules (the CLI wires this to
/// `HERMRAND_CACHE`).  Takes effect for the whole process; first call wins.
pub fn set_cache_dir(dir: Option<PathBuf>) {
    let _ = CACHE_DIR.set(dir);
}

fn cache_path(order: usize) -> Option<PathBuf> {
    CACHE_DIR
        .get()
        .and_then(|d| d.as_ref())
        .map(|d| d.join(format!("gauss_hermite_{order}.json")))
}

fn disk_cache_read(order: usize) -> Option<GaussHermiteRule> {
    let path = cache_path(order)?;
    let text = std::fs::read_to_string(path).ok()?;
    let rule: GaussHermiteRule = serde_json::from_str(&text).ok()?;
    (rule.order == order && rule.nodes.len() == order).then_some(rule)
}

fn disk_cache_write(rule: &GaussHermiteRule) {
    if let Some(path) = cache_path(rule.order) {
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        if let Ok(text) = serde_json::to_string(rule) {
            let _ = std::fs::write(path, text);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn one_point_rule() {
        let r = gauss_hermite_rule(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_relative_eq!(r.weights[0], SQRT_PI, max_relative = 1e-14);
    }

    #[test]
    fn two_point_rule_closed_form() {
        let r = gauss_hermite_rule(2).unwrap();
        assert_relative_eq!(r.nodes[0], -0.707_106_781_186_547_5, max_relative = 1e-13);
        assert_relative_eq!(r.nodes[1], 0.707_106_781_186_547_5, max_relative = 1e-13);
        assert_relative_eq!(r.weights[0], SQRT_PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(r.weights[1], SQRT_PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn three_point_rule_nodes() {
        let r = gauss_hermite_rule(3).unwrap();
        assert_relative_eq!(r.nodes[2], 1.224_744_871_391_589, max_relative = 1e-13);
        assert_eq!(r.nodes[1], 0.0);
    }

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for order in [1usize, 2, 5, 17, 40, 101, 256] {
            let r = gauss_hermite_rule(order).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!(
                (s / SQRT_PI - 1.0).abs() < 1e-13,
                "order {order}: Σw = {s}"
            );
        }
    }

    #[test]
    fn second_moment_order_40() {
        let r = gauss_hermite_rule(40).unwrap();
        let v = r.as_rule().integrate(|x| x * x);
        assert!((v / (SQRT_PI / 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polynomial_exactness() {
        // Degree 2n-1 exactness: moments of e^{-x²} are (k-1)!!·√π/2^{k/2}.
        let r = gauss_hermite_rule(6).unwrap();
        let rule = r.as_rule();
        let m10 = rule.integrate(|x| x.powi(10));
        let exact = 945.0 / 32.0 * SQRT_PI; // ∫x^10 e^{-x²} = (9!!/2^5)√π
        assert_relative_eq!(m10, exact, max_relative = 1e-12);
        let m11 = rule.integrate(|x| x.powi(11));
        assert!(m11.abs() < 1e-12);
    }

    #[test]
    fn nodes_increase_and_weights_positive() {
        for order in [2usize, 33, 128, 301] {
            let r = gauss_hermite_rule(order).unwrap();
            for i in 1..order {
                assert!(r.nodes[i] > r.nodes[i - 1]);
            }
            assert!(r.weights.iter().all(|&w| w > 0.0), "order {order}");
            assert!(r.physical_weights.iter().all(|&w| w > 0.0 && w.is_finite()));
        }
    }

    #[test]
    fn high_order_physical_weights_stay_finite() {
        let r = gauss_hermite_rule(1024).unwrap();
        assert!(r.physical_weights.iter().all(|&w| w > 0.0 && w.is_finite()));
        // Trace check against a polynomial with factored weight:
        // ∫ h_5(x)² dx = Σ W_i h_5(x_i)² = 1.
        let v: f64 = r
            .nodes
            .iter()
            .zip(&r.physical_weights)
            .map(|(&x, &w)| {
                let h = hermite::eval(5, x).unwrap();
                w * h * h
            })
            .sum();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn order_limit() {
        assert!(matches!(
            gauss_hermite_rule(MAX_ORDER + 1),
            Err(CoreError::OrderOverflow { .. })
        ));
        assert!(matches!(
            gauss_hermite_rule(0),
            Err(CoreError::OrderOverflow { .. })
        ));
    }

    #[test]
    fn orthonormality_gram() {
        // Gram matrix of h_0..h_100 with the factored weight, order 128.
        let r = gauss_hermite_rule(128).unwrap();
        let nmax = 100;
        let mut table = vec![vec![0.0; r.order]; nmax + 1];
        let mut buf = vec![0.0; nmax + 1];
        for (i, &x) in r.nodes.iter().enumerate() {
            hermite::eval_all_into(x, &mut buf);
            for (n, row) in table.iter_mut().enumerate() {
                row[i] = buf[n];
            }
        }
        let mut worst: f64 = 0.0;
        for m in 0..=nmax {
            for n in m..=nmax {
                let mut g = 0.0;
                for i in 0..r.order {
                    g += r.physical_weights[i] * table[m][i] * table[n][i];
                }
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        assert!(worst < 1e-10, "worst Gram deviation {worst}");
    }
}
