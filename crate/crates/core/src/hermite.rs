//! Stable evaluation of 1-D Hermite functions.
//!
//! `h_n` is the L²(ℝ)-normalized eigenfunction of `-d²/dx² + x²` with
//! eigenvalue `2n + 1`.  Values are produced by the Gaussian-weighted
//! three-term recurrence
//!
//! ```text
//! h_0(x)     = π^{-1/4} e^{-x²/2}
//! h_{n+1}(x) = √(2/(n+1)) x h_n(x) - √(n/(n+1)) h_{n-1}(x)
//! ```
//!
//! which carries the factor `e^{-x²/2}` inside the iterates, so no overflow
//! occurs for any degree: far beyond the turning region `|x| ≫ √(2n+1)` the
//! values underflow harmlessly to zero, consistent with the super-polynomial
//! decay of the spectral function there.

use crate::error::{CoreError, Result};

/// Largest degree accepted by the checked entry points.  Bounds the k-range
/// of the desk experiments; raise it if a sweep ever needs more.
pub const MAX_DEGREE: usize = 4096;

const INV_PI_QUARTER: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
const LN_INV_PI_QUARTER: f64 = -0.286_182_471_462_350_04; // ln(π^{-1/4})

fn check_input(n: usize, x: f64) -> Result<()> {
    if n > MAX_DEGREE {
        return Err(CoreError::DegreeOverflow {
            degree: n,
            limit: MAX_DEGREE,
        });
    }
    if !x.is_finite() {
        return Err(CoreError::NonFiniteInput("hermite evaluation point"));
    }
    Ok(())
}

/// Value of the normalized Hermite function `h_n(x)`.
pub fn eval(n: usize, x: f64) -> Result<f64> {
    check_input(n, x)?;
    let mut out = vec![0.0; n + 1];
    eval_all_into(x, &mut out);
    Ok(out[n])
}

/// All values `h_0(x), …, h_{n_max}(x)` from a single upward pass.
///
/// Entry `k` is bit-identical to `eval(k, x)`.
pub fn eval_all(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_input(n_max, x)?;
    let mut out = vec![0.0; n_max + 1];
    eval_all_into(x, &mut out);
    Ok(out)
}

/// Recurrence pass writing `h_0(x), …, h_{len-1}(x)` into `out`.
///
/// Unchecked hot path for grid evaluation; callers guarantee a finite `x`.
pub fn eval_all_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let log0 = -x * x / 2.0 + LN_INV_PI_QUARTER;
    if log0 > -700.0 {
        out[0] = INV_PI_QUARTER * (-x * x / 2.0).exp();
        if out.len() == 1 {
            return;
        }
        out[1] = (2.0f64).sqrt() * x * out[0];
        for m in 1..out.len() - 1 {
            out[m + 1] = (2.0 / (m as f64 + 1.0)).sqrt() * x * out[m]
                - (m as f64 / (m as f64 + 1.0)).sqrt() * out[m - 1];
        }
    } else {
        eval_all_scaled(x, log0, out);
    }
}

/// Upward recurrence carried as `h_m = cur · e^{logscale}` so the pass can
/// start far beyond the f64 underflow point (the Gaussian prefactor can be
/// as small as e^{-x²/2} while h_m near the turning region is O(1)).
fn eval_all_scaled(x: f64, log0: f64, out: &mut [f64]) {
    const RENORM: f64 = 1e250;
    let emit = |v: f64, logscale: f64| -> f64 {
        if logscale > -650.0 {
            v * logscale.exp()
        } else if v == 0.0 {
            0.0
        } else {
            let l = logscale + v.abs().ln();
            if l < -745.0 {
                0.0
            } else {
                l.exp().copysign(v)
            }
        }
    };
    let mut logscale = log0;
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    out[0] = emit(cur, logscale);
    for m in 0..out.len() - 1 {
        let next = if m == 0 {
            (2.0f64).sqrt() * x * cur
        } else {
            (2.0 / (m as f64 + 1.0)).sqrt() * x * cur
                - (m as f64 / (m as f64 + 1.0)).sqrt() * prev
        };
        prev = cur;
        cur = next;
        if cur.abs() > RENORM {
            prev /= RENORM;
            cur /= RENORM;
            logscale += RENORM.ln();
        }
        out[m + 1] = emit(cur, logscale);
    }
}

/// Derivative `h_n'(x) = √(2n) h_{n-1}(x) - x h_n(x)`.
///
/// Used by the quadrature module to Newton-polish Hermite zeros.
pub fn eval_derivative(n: usize, x: f64) -> Result<f64> {
    check_input(n, x)?;
    if n == 0 {
        return Ok(-x * eval(0, x)?);
    }
    let vals = eval_all(n, x)?;
    Ok((2.0 * n as f64).sqrt() * vals[n - 1] - x * vals[n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_at_origin() {
        assert_relative_eq!(eval(0, 0.0).unwrap(), 0.751_125_544_464_942_5, max_relative = 1e-15);
    }

    #[test]
    fn odd_degree_vanishes_at_origin() {
        assert_eq!(eval(1, 0.0).unwrap(), 0.0);
        assert_eq!(eval(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_exact_recurrence_oracle() {
        // h_30(3) via the exact integer recurrence H_{n+1} = 6 H_n - 2n H_{n-1}
        // (H_n(3) is an integer), normalized in extended precision.
        let expected = 0.195_658_439_132_238_8;
        let got = eval(30, 3.0).unwrap();
        assert!(
            (got / expected - 1.0).abs() < 1e-12,
            "h_30(3) = {got}, oracle = {expected}"
        );
        // Additional frozen high-precision recurrence values.
        assert!((eval(12, 1.7).unwrap() / -0.170_923_313_575_218_44 - 1.0).abs() < 1e-12);
        assert!((eval(50, 1.0).unwrap() / 0.206_987_578_424_000_69 - 1.0).abs() < 1e-12);
        assert!((eval(100, 8.0).unwrap() / 0.225_298_728_387_552 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn eval_all_closed_forms() {
        // h_2(0) = -h_0(0)/√2, h_1(0) = 0.
        let v = eval_all(2, 0.0).unwrap();
        assert_relative_eq!(v[0], 0.751_125_544_464_942_5, max_relative = 1e-15);
        assert_eq!(v[1], 0.0);
        assert_relative_eq!(v[2], -0.531_125_966_013_598_5, max_relative = 1e-14);

        let single = eval_all(0, 5.0).unwrap();
        assert_eq!(single.len(), 1);
        assert_relative_eq!(single[0], 2.799_184_392_909_596_7e-6, max_relative = 1e-13);
    }

    #[test]
    fn eval_all_consistent_with_eval() {
        let v = eval_all(50, 1.0).unwrap();
        for (k, &val) in v.iter().enumerate() {
            assert_eq!(val, eval(k, 1.0).unwrap(), "degree {k}");
        }
    }

    #[test]
    fn degree_limit_and_nonfinite_inputs_error() {
        assert!(matches!(
            eval(MAX_DEGREE + 1, 0.0),
            Err(CoreError::DegreeOverflow { .. })
        ));
        assert!(matches!(eval(3, f64::NAN), Err(CoreError::NonFiniteInput(_))));
        assert!(matches!(
            eval_all(3, f64::INFINITY),
            Err(CoreError::NonFiniteInput(_))
        ));
    }

    #[test]
    fn no_overflow_deep_in_the_envelope() {
        // Large degree, large |x|: values stay finite, decaying to zero
        // beyond the turning region.
        let v = eval(4096, 120.0).unwrap();
        assert!(v.is_finite());
        assert!(v.abs() < 1e-100);
        let w = eval(4096, 10.0).unwrap();
        assert!(w.is_finite());
    }

    #[test]
    fn parity() {
        for &n in &[0usize, 1, 2, 5, 17, 64] {
            for &x in &[0.3, 1.7, 4.2, 9.9] {
                let plus = eval(n, x).unwrap();
                let minus = eval(n, -x).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!(
                    (plus - sign * minus).abs() <= 1e-14 * plus.abs().max(1.0),
                    "parity violated at n={n}, x={x}"
                );
            }
        }
    }

    #[test]
    fn eigen_relation_by_finite_differences() {
        // (-h'' + x² h)(x) = (2n+1) h(x), central differences with step 1e-4.
        let step = 1e-4;
        let pts = [-2.3, -1.1, -0.4, 0.2, 0.9, 1.6, 2.8, 3.5];
        for &n in &[0usize, 1, 3, 10, 25, 50] {
            for &x in &pts {
                let f = |y: f64| eval(n, y).unwrap();
                let h2 = (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step);
                let lhs = -h2 + x * x * f(x);
                let rhs = (2.0 * n as f64 + 1.0) * f(x);
                let scale = rhs.abs().max(1e-3);
                assert!(
                    (lhs - rhs).abs() / scale < 1e-6,
                    "eigen-relation failed at n={n}, x={x}: lhs={lhs}, rhs={rhs}"
                );
            }
        }
    }
}
