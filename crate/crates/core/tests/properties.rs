//! Property tests for the structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use hermrand_core::measures::{normalize_to_sphere, uniform_marginal_ccdf, validate_profile};
use hermrand_core::norms::{dyadic_blocks, HermiteSeries};
use hermrand_core::spectral::{
    enumerate_window, level_multiplicity, spectral_function, MultiIndex,
};
use hermrand_core::{hermite, stats};

proptest! {
    #[test]
    fn hermite_parity(n in 0usize..80, x in 0.01f64..9.0) {
        let plus = hermite::eval(n, x).unwrap();
        let minus = hermite::eval(n, -x).unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((plus - sign * minus).abs() <= 1e-14 * plus.abs().max(1.0));
    }

    #[test]
    fn hermite_values_finite_in_envelope(n in 0usize..400, x in -40.0f64..40.0) {
        let v = hermite::eval(n, x).unwrap();
        prop_assert!(v.is_finite());
    }

    #[test]
    fn composition_counts_match_multiplicity(d in 1usize..=4, k in 0usize..=9) {
        let lam = (2 * k + d) as f64;
        let w = enumerate_window(d, 1.0, lam, lam + 1.0).unwrap();
        let idx: Vec<MultiIndex> = w.multi_indices().collect();
        prop_assert_eq!(idx.len() as u64, level_multiplicity(d, k));
        for j in &idx {
            prop_assert_eq!(j.level(), k);
            prop_assert_eq!(j.dimension(), d);
        }
        let set: std::collections::HashSet<Vec<usize>> =
            idx.iter().map(|j| j.0.clone()).collect();
        prop_assert_eq!(set.len(), idx.len());
    }

    #[test]
    fn normalization_is_idempotent_projection(
        v in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..30)
    ) {
        let coeffs: Vec<Complex64> = v.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        prop_assume!(norm_sq > 1e-12);
        let unit = normalize_to_sphere(&coeffs).unwrap();
        let n: f64 = unit.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-12);
        let again = normalize_to_sphere(&unit).unwrap();
        for (a, b) in unit.iter().zip(&again) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn squeezing_constants_bracket_one(
        v in prop::collection::vec(0.05f64..5.0, 2..40)
    ) {
        let gamma: Vec<Complex64> = v.iter().map(|&g| Complex64::new(g, 0.0)).collect();
        let n = gamma.len();
        let lam = (2 * (n - 1) + 2) as f64;
        // A d=2 window with N = n: level k = n-1 has multiplicity n.
        let w = enumerate_window(2, 1.0, lam, lam + 1.0).unwrap();
        prop_assert_eq!(w.n_total() as usize, n);
        let rep = validate_profile(&gamma, &w).unwrap();
        prop_assert!(rep.k1 <= 1.0 + 1e-12);
        prop_assert!(rep.k0 >= 1.0 - 1e-12);
        prop_assert!(rep.k1 > 0.0);
    }

    #[test]
    fn marginal_ccdf_monotone(n in 1usize..200, a in 0.0f64..0.98, b in 0.0f64..0.98) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let pa = uniform_marginal_ccdf(n, lo).unwrap();
        let pb = uniform_marginal_ccdf(n, hi).unwrap();
        prop_assert!(pa >= pb);
        prop_assert!(pb > 0.0 && pa <= 1.0);
    }

    #[test]
    fn dyadic_blocks_partition_by_eigenvalue(
        raw in prop::collection::vec((0usize..40, 0usize..40, -3.0f64..3.0), 1..50)
    ) {
        let terms: Vec<(MultiIndex, Complex64)> = raw
            .iter()
            .map(|&(a, b, c)| (MultiIndex(vec![a, b]), Complex64::new(c, 0.0)))
            .collect();
        let series = HermiteSeries::new(2, terms.clone()).unwrap();
        let blocks = dyadic_blocks(&series);
        let total: usize = blocks.iter().map(|(_, s)| s.terms.len()).sum();
        prop_assert_eq!(total, terms.len());
        for (n, block) in &blocks {
            let lo = 2.0f64.powi(*n as i32);
            for (j, _) in &block.terms {
                let lam = j.eigenvalue();
                prop_assert!(lam >= lo && lam < 2.0 * lo);
            }
        }
        // Block indices strictly increasing.
        prop_assert!(blocks.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn quantiles_are_monotone_and_bounded(
        mut v in prop::collection::vec(-100.0f64..100.0, 1..60),
        q1 in 0.0f64..1.0,
        q2 in 0.0f64..1.0,
    ) {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = stats::quantile_sorted(&v, lo);
        let b = stats::quantile_sorted(&v, hi);
        prop_assert!(a <= b + 1e-12);
        prop_assert!(*v.first().unwrap() <= a && b <= *v.last().unwrap());
    }
}

#[test]
fn soft_sobolev_bound_random_samples() {
    // |u(x)| ≤ sqrt(e_x) for 100 random unit vectors at every probe point.
    use hermrand_core::measures::{sphere_sample, CoefficientProfile, LawSampler, RandomLaw};
    use hermrand_core::spectral::{single_level_window, WindowFunction};
    let w = single_level_window(2, 7).unwrap();
    let profile = CoefficientProfile::isotropic(w.n_total() as usize);
    let law = RandomLaw::ComplexGaussian;
    let sampler = LawSampler::new(&law).unwrap();
    let probes: Vec<[f64; 2]> = (0..25)
        .map(|i| {
            let a = i as f64 * 0.37 - 4.0;
            let b = (i as f64 * 0.91).sin() * 3.0;
            [a, b]
        })
        .collect();
    for seed in 0..100 {
        let s = sphere_sample(&profile, &sampler, &law, seed).unwrap();
        let f = WindowFunction::new(&w, &s.coefficients).unwrap();
        for x in &probes {
            let bound = spectral_function(&w, x).unwrap().sqrt();
            let val = f.eval(x).unwrap().norm();
            assert!(val <= bound + 1e-10, "|u({x:?})| = {val} > sqrt(e_x) = {bound}");
        }
    }
}

#[test]
fn spectral_function_decay_beyond_turning_region() {
    // Over the sweep λ ∈ {20, …, 200}: the envelope decays beyond the
    // turning region with a rate that grows with λ (super-polynomial
    // decay); by the top of the sweep the relative value at |x|² = 1.2λ is
    // below 1e-6.  (At λ = 20 the asymptotic bound has not kicked in yet:
    // the ratio there is ~3e-2, decreasing steadily with λ.)
    use hermrand_core::spectral::single_level_window;
    let mut ratios = Vec::new();
    let mut rates = Vec::new();
    for &k in &[9usize, 24, 49, 99] {
        let w = single_level_window(2, k).unwrap();
        let lambda = (2 * k + 2) as f64;
        let peak = (0..60)
            .map(|i| {
                let r = lambda.sqrt() * i as f64 / 59.0;
                spectral_function(&w, &[r, 0.0]).unwrap()
            })
            .fold(0.0f64, f64::max);
        let outside = spectral_function(&w, &[(1.2f64 * lambda).sqrt(), 0.0]).unwrap();
        ratios.push(outside / peak);
        // log e_x along |x|² = (1+s)λ: fit decay rate in s.
        let s_grid = [0.1f64, 0.15, 0.2, 0.25, 0.3];
        let ys: Vec<f64> = s_grid
            .iter()
            .map(|&s| {
                spectral_function(&w, &[((1.0 + s) * lambda).sqrt(), 0.0])
                    .unwrap()
                    .max(1e-300)
                    .ln()
            })
            .collect();
        let (_, slope) = linear_fit(&s_grid, &ys);
        rates.push(slope);
        assert!(slope < 0.0, "k={k}: envelope not decaying, slope {slope}");
    }
    assert!(
        ratios.windows(2).all(|w| w[1] < w[0]),
        "relative outside mass not decreasing: {ratios:?}"
    );
    assert!(
        *ratios.last().unwrap() < 1e-6,
        "at λ=200 the outside ratio is {:.3e}",
        ratios.last().unwrap()
    );
    // Decay rate (in s at |x|² = (1+s)λ) strengthens with λ.
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "rates: {rates:?}");

    fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
        (my - sxy / sxx * mx, sxy / sxx)
    }
}

#[test]
fn weighted_spectral_bound_uniform_over_sweep() {
    // sup_x ⟨x⟩^θ e_x / (N_h h^{(d-θ)/2}) stays bounded over a k-sweep for
    // θ ∈ {0, d/2, d}.
    use hermrand_core::spectral::single_level_window;
    let d = 2usize;
    for &theta in &[0.0, 1.0, 2.0] {
        let mut ratios = Vec::new();
        for &k in &[8usize, 16, 32, 64, 128] {
            let w = single_level_window(d, k).unwrap();
            let lambda = (2 * k + d) as f64;
            let mut sup = 0.0f64;
            for i in 0..240 {
                let r = 1.3 * lambda.sqrt() * i as f64 / 239.0;
                let e = spectral_function(&w, &[r, 0.0]).unwrap();
                sup = sup.max((1.0 + r * r).powf(theta / 2.0) * e);
            }
            ratios.push(sup / (w.n_total() as f64 * w.h.powf((d as f64 - theta) / 2.0)));
        }
        let max = ratios.iter().copied().fold(0.0f64, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            max / min < 5.0,
            "θ={theta}: weighted bound ratio drifts: {ratios:?}"
        );
    }
}

#[test]
fn deterministic_sobolev_caps_uniform_over_sweep() {
    // ‖u‖_{L^{∞,θ/2}} / (N h^{(d-θ)/2})^{1/2} and the L^{p,θ(p/2-1)}
    // analogues with exponent 1/2 - 1/p stay bounded over random samples
    // and a k-sweep (deterministic Sobolev bounds).
    use hermrand_core::eval::{batch_lr, batch_sup, BasisD2, SupOptions};
    use hermrand_core::grid::QuadratureGrid;
    use hermrand_core::measures::{sphere_sample, CoefficientProfile, LawSampler, RandomLaw};
    use hermrand_core::spectral::single_level_window;

    let d = 2usize;
    let theta = 1.0;
    let law = RandomLaw::ComplexGaussian;
    let sampler = LawSampler::new(&law).unwrap();
    let mut sup_worst = 0.0f64;
    let mut lp_worst = [0.0f64; 2];
    for &k in &[8usize, 16, 32] {
        let w = single_level_window(d, k).unwrap();
        let n = w.n_total() as f64;
        let profile = CoefficientProfile::isotropic(n as usize);
        let coeffs: Vec<_> = (0..1000u64)
            .map(|i| sphere_sample(&profile, &sampler, &law, i).unwrap().coefficients)
            .collect();
        let basis = BasisD2::from_window(&w).unwrap();
        let cap = (n * w.h.powf((d as f64 - theta) / 2.0)).sqrt();
        let sups = batch_sup(&basis, &coeffs, &w, theta, &SupOptions::default()).unwrap();
        for s in &sups {
            sup_worst = sup_worst.max(s.value / cap);
        }
        for (pi, &p) in [4.0f64, 8.0].iter().enumerate() {
            let grid = QuadratureGrid::for_window_lr(&w, p).unwrap();
            let s_exp = theta * (p / 2.0 - 1.0);
            let vals = batch_lr(&basis, &coeffs, &grid, p, s_exp).unwrap();
            let cap_p = (n * w.h.powf((d as f64 - theta) / 2.0)).powf(0.5 - 1.0 / p);
            for v in vals {
                lp_worst[pi] = lp_worst[pi].max(v / cap_p);
            }
        }
    }
    // The fitted constants are O(1); generous absolute caps.
    assert!(sup_worst < 5.0, "sup-norm ratio {sup_worst}");
    assert!(lp_worst[0] < 5.0 && lp_worst[1] < 5.0, "L^p ratios {lp_worst:?}");
}

#[test]
fn besov_sobolev_single_block_bracketing() {
    // For u in one dyadic block, besov_norm(s, 2, 2) equals the Sobolev
    // norm up to the block's eigenvalue bracketing [2^{-s/2}, 2^{s/2}].
    use hermrand_core::grid::QuadratureGrid;
    use hermrand_core::measures::{sphere_sample, CoefficientProfile, LawSampler, RandomLaw};
    use hermrand_core::norms::{besov_norm, dyadic_blocks, sobolev_norm};
    use hermrand_core::spectral::single_level_window;

    let law = RandomLaw::ComplexGaussian;
    let sampler = LawSampler::new(&law).unwrap();
    for &k in &[3usize, 7, 13] {
        let w = single_level_window(2, k).unwrap();
        let profile = CoefficientProfile::isotropic(w.n_total() as usize);
        let sample = sphere_sample(&profile, &sampler, &law, k as u64).unwrap();
        let u = HermiteSeries::from_window(&w, &sample.coefficients).unwrap();
        let grid = QuadratureGrid::for_window_lr(&w, 2.0).unwrap();
        let s = 1.4;
        let blocks = dyadic_blocks(&u);
        assert_eq!(blocks.len(), 1);
        // Besov with sharp blocks: 2^{ns/2} ‖u‖_{L²}; Sobolev: λ^{s/2} ‖u‖_{L²}
        // with λ ∈ [2^n, 2^{n+1}).
        let b = besov_norm(&blocks, s, 2.0, 2.0, &grid).unwrap();
        let h = sobolev_norm(&u, s, 2.0, &grid).unwrap();
        let lo = 2.0f64.powf(-s / 2.0);
        let hi = 2.0f64.powf(s / 2.0);
        let ratio = b / h;
        assert!(
            ratio >= lo - 1e-9 && ratio <= hi + 1e-9,
            "k={k}: ratio {ratio} outside [{lo}, {hi}]"
        );
    }
}

#[test]
fn rademacher_sphere_support_has_2n_points() {
    // For real γ the Rademacher sphere measure is supported on exactly 2^N
    // points (up to hashing of the sampled sign patterns).
    use hermrand_core::measures::{sample_coefficients, CoefficientProfile, LawSampler, RandomLaw};
    use std::collections::HashSet;
    let n = 8;
    let profile = CoefficientProfile::isotropic(n);
    let sampler = LawSampler::new(&RandomLaw::Rademacher).unwrap();
    let mut seen: HashSet<Vec<i8>> = HashSet::new();
    for seed in 0..20_000u64 {
        let c = sample_coefficients(&profile, &sampler, seed);
        let signs: Vec<i8> = c.iter().map(|v| if v.re > 0.0 { 1 } else { -1 }).collect();
        seen.insert(signs);
    }
    assert_eq!(seen.len(), 1 << n, "support size {}", seen.len());
}

#[test]
fn subgaussian_moment_bound_per_law() {
    // Empirical log E e^{sX} / s² bounded over s ∈ [-3, 3]; Rademacher
    // attains C = 1/2 (cosh s ≤ e^{s²/2}); linear combinations with unit
    // coefficient vectors satisfy the same bound (stability).
    use hermrand_core::measures::{LawSampler, RandomLaw};
    use rand::Rng;
    let laws = [
        RandomLaw::Gaussian,
        RandomLaw::Rademacher,
        RandomLaw::AlphaExponential { alpha: 3.0 },
        RandomLaw::BoundedUniform,
    ];
    let m = 200_000;
    let s_grid: Vec<f64> = (-6..=6)
        .filter(|&i| i != 0)
        .map(|i| i as f64 * 0.5)
        .collect();
    for law in laws {
        let sampler = LawSampler::new(&law).unwrap();
        let mut rng = hermrand_core::rng::stream_rng(404, 0);
        let xs: Vec<f64> = (0..m).map(|_| sampler.draw(&mut rng).re).collect();
        let mut c_hat = 0.0f64;
        for &s in &s_grid {
            let mean_exp = xs.iter().map(|&x| (s * x).exp()).sum::<f64>() / m as f64;
            c_hat = c_hat.max(mean_exp.ln() / (s * s));
        }
        assert!(c_hat < 1.0, "{}: fitted sub-Gaussian C = {c_hat}", law.name());
        if matches!(law, RandomLaw::Rademacher) {
            assert!(
                (c_hat - 0.5).abs() < 0.05,
                "rademacher C should be ~1/2, got {c_hat}"
            );
        }
        // Stability under unit linear combinations (same C within 10%).
        let dim = 16;
        let mut a: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        a.iter_mut().for_each(|v| *v /= norm);
        let m2 = 100_000;
        let ys: Vec<f64> = (0..m2)
            .map(|_| a.iter().map(|&ai| ai * sampler.draw(&mut rng).re).sum())
            .collect();
        let mut c_comb = 0.0f64;
        for &s in &s_grid {
            let mean_exp = ys.iter().map(|&y| (s * y).exp()).sum::<f64>() / m2 as f64;
            c_comb = c_comb.max(mean_exp.ln() / (s * s));
        }
        assert!(
            c_comb <= c_hat * 1.1 + 0.02,
            "{}: combination C {c_comb} exceeds component C {c_hat}",
            law.name()
        );
    }
}
