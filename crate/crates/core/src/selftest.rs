//! Fast invariant suite behind the `selftest` CLI command: orthonormality,
//! the Mehler identity, the trace identity, the sphere-marginal CDF and
//! Haar unitarity, each in well under a minute combined.

use num_complex::Complex64;

use crate::basis::haar_unitary;
use crate::grid::QuadratureGrid;
use crate::hermite;
use crate::measures::{sphere_sample, uniform_marginal_ccdf, CoefficientProfile, LawSampler, RandomLaw};
use crate::quadrature::gauss_hermite_rule;
use crate::spectral::{
    heat_kernel_diag_closed, heat_kernel_diag_series, single_level_window,
    spectral_increment_norm,
};
use crate::stats;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Faults injectable by tests and the hidden CLI flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturb the quadrature table feeding the Gram check.
    CorruptQuadrature,
}

pub fn run_selftest(seed: u64, fault: Option<Fault>) -> Vec<CheckResult> {
    let mut out = Vec::new();

    // Gauss–Hermite sanity: Σw = √π and an even moment.
    out.push({
        let rule = gauss_hermite_rule(40).unwrap();
        let sum: f64 = rule.weights.iter().sum();
        let moment: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x * x)
            .sum();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let ok = (sum / sqrt_pi - 1.0).abs() < 1e-13 && (moment / (sqrt_pi / 2.0) - 1.0).abs() < 1e-12;
        CheckResult {
            name: "gauss-hermite-rule",
            passed: ok,
            detail: format!("Σw/√π - 1 = {:.2e}", sum / sqrt_pi - 1.0),
        }
    });

    // Hermite Gram orthonormality (n ≤ 40), with optional fault injection.
    out.push({
        let rule = gauss_hermite_rule(64).unwrap();
        let mut physical = rule.physical_weights.clone();
        if fault == Some(Fault::CorruptQuadrature) {
            physical[10] *= 1.0 + 1e-3;
        }
        let nmax = 40;
        let mut table = vec![0.0; (nmax + 1) * rule.order];
        let mut buf = vec![0.0; nmax + 1];
        for (i, &x) in rule.nodes.iter().enumerate() {
            hermite::eval_all_into(x, &mut buf);
            for n in 0..=nmax {
                table[n * rule.order + i] = buf[n];
            }
        }
        let mut worst = 0.0f64;
        for m in 0..=nmax {
            for n in m..=nmax {
                let mut g = 0.0;
                for i in 0..rule.order {
                    g += physical[i] * table[m * rule.order + i] * table[n * rule.order + i];
                }
                let target = if m == n { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        CheckResult {
            name: "hermite-gram-orthonormality",
            passed: worst < 1e-10,
            detail: format!("worst Gram deviation {worst:.2e}"),
        }
    });

    // Parity of Hermite functions.
    out.push({
        let mut worst = 0.0f64;
        for &n in &[1usize, 4, 9, 33] {
            for &x in &[0.37, 1.9, 3.3] {
                let a = hermite::eval(n, x).unwrap();
                let b = hermite::eval(n, -x).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                worst = worst.max((a - sign * b).abs() / a.abs().max(1.0));
            }
        }
        CheckResult {
            name: "hermite-parity",
            passed: worst < 1e-14,
            detail: format!("worst parity defect {worst:.2e}"),
        }
    });

    // Mehler identity, d ∈ {1, 2}.
    out.push({
        let mut worst = 0.0f64;
        for d in 1..=2usize {
            for &t in &[0.2, 0.7] {
                let x = vec![0.9; d];
                let lambda_max = (14.0 * std::f64::consts::LN_10 / t).max(40.0);
                let closed = heat_kernel_diag_closed(d, t, &x).unwrap();
                let series = heat_kernel_diag_series(d, t, &x, lambda_max).unwrap();
                worst = worst.max((series / closed - 1.0).abs());
            }
        }
        CheckResult {
            name: "mehler-identity",
            passed: worst < 1e-8,
            detail: format!("worst relative residual {worst:.2e}"),
        }
    });

    // Trace identity ∫ e_x dx = N_h.
    out.push({
        let mut worst = 0.0f64;
        for &k in &[0usize, 5, 12] {
            let w = single_level_window(2, k).unwrap();
            let grid = QuadratureGrid::tensor_gauss_hermite(2, k + 24, 1.0).unwrap();
            let v = spectral_increment_norm(&w, 1.0, 0.0, &grid).unwrap();
            worst = worst.max((v.value / w.n_total() as f64 - 1.0).abs());
        }
        CheckResult {
            name: "trace-identity",
            passed: worst < 1e-8,
            detail: format!("worst relative error {worst:.2e}"),
        }
    });

    // Sphere-marginal CDF against the exact law (quick Monte Carlo).
    out.push({
        let n = 8;
        let m = 20_000u64;
        let profile = CoefficientProfile::isotropic(n);
        let law = RandomLaw::ComplexGaussian;
        let sampler = LawSampler::new(&law).unwrap();
        let mut values: Vec<f64> = (0..m)
            .map(|i| {
                sphere_sample(&profile, &sampler, &law, crate::rng::stream_seed(seed, i))
                    .unwrap()
                    .coefficients[0]
                    .norm()
            })
            .collect();
        let ks = stats::ks_statistic(&mut values, |t| {
            1.0 - uniform_marginal_ccdf(n, t.clamp(0.0, 1.0 - 1e-15)).unwrap()
        });
        let band = 1.36 / (m as f64).sqrt() * 1.2;
        CheckResult {
            name: "sphere-marginal-cdf",
            passed: ks < band,
            detail: format!("KS {ks:.4} vs band {band:.4}"),
        }
    });

    // Haar unitarity.
    out.push({
        let u = haar_unitary(16, seed).unwrap();
        let defect = u.unitarity_defect();
        CheckResult {
            name: "haar-unitarity",
            passed: defect < 1e-12,
            detail: format!("‖U*U - I‖_max = {defect:.2e}"),
        }
    });

    // Normalization projects to the sphere.
    out.push({
        let v = vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)];
        let u = crate::measures::normalize_to_sphere(&v).unwrap();
        let norm: f64 = u.iter().map(|c| c.norm_sqr()).sum();
        CheckResult {
            name: "sphere-normalization",
            passed: (norm - 1.0).abs() < 1e-12,
            detail: format!("|‖u‖² - 1| = {:.2e}", (norm - 1.0).abs()),
        }
    });

    out
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_selftest_passes() {
        let results = run_selftest(7, None);
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn fault_injection_names_the_gram_check() {
        let results = run_selftest(7, Some(Fault::CorruptQuadrature));
        let gram = results
            .iter()
            .find(|r| r.name == "hermite-gram-orthonormality")
            .unwrap();
        assert!(!gram.passed);
        // Other checks unaffected.
        assert!(results
            .iter()
            .filter(|r| r.name != "hermite-gram-orthonormality")
            .all(|r| r.passed));
    }

    #[test]
    fn deterministic_pass_log() {
        let a = run_selftest(3, None);
        let b = run_selftest(3, None);
        let log_a: Vec<String> = a.iter().map(|r| format!("{} {}", r.name, r.detail)).collect();
        let log_b: Vec<String> = b.iter().map(|r| format!("{} {}", r.name, r.detail)).collect();
        assert_eq!(log_a, log_b);
    }
}
