//! Independent checks of the closed forms: Bessel-series and quadrature
//! oracles for the noncentral CDF, Monte Carlo for everything sampled.

use soak_core::channel::sample_eavesdropper;
use soak_core::stats::marcum_q1;
use soak_core::*;

/// Modified Bessel function I0 by its power series.
fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Noncentral chi-square density with two degrees of freedom.
fn ncx2_pdf(x: f64, lambda2: f64) -> f64 {
    0.5 * (-(x + lambda2) / 2.0).exp() * bessel_i0((lambda2 * x).sqrt())
}

/// Composite Simpson rule for the CDF.
fn ncx2_cdf_quadrature(eta: f64, lambda2: f64) -> f64 {
    let n = 20_000;
    let h = eta / n as f64;
    let mut s = ncx2_pdf(0.0, lambda2) + ncx2_pdf(eta, lambda2);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * ncx2_pdf(i as f64 * h, lambda2);
    }
    s * h / 3.0
}

#[test]
fn marcum_diagonal_identity() {
    // Q1(a, a) = (1 + exp(-a^2) I0(a^2)) / 2.
    for a in [0.1, 0.5, 1.0, 2.0f64.sqrt(), 2.0, 3.0] {
        let want = 0.5 * (1.0 + (-a * a).exp() * bessel_i0(a * a));
        let got = marcum_q1(a, a).unwrap();
        assert!((got - want).abs() < 1e-12, "a={a}: {got} vs {want}");
    }
    // The (eta, lambda2) = (2, 2) point.
    let cdf = noncentral_chi2_cdf_dof2(2.0, 2.0).unwrap();
    let want = 1.0 - 0.5 * (1.0 + (-2.0f64).exp() * bessel_i0(2.0));
    assert!((cdf - want).abs() < 1e-12);
    assert!((cdf - 0.3457).abs() < 5e-5, "{cdf}");
}

#[test]
fn series_matches_quadrature() {
    for &lambda2 in &[0.0, 0.05, 0.4, 1.0, 2.0, 6.0, 15.0] {
        for &eta in &[0.1, 0.8, 2.0, 5.0, 12.0, 30.0] {
            let q = ncx2_cdf_quadrature(eta, lambda2);
            let s = noncentral_chi2_cdf_dof2(eta, lambda2).unwrap();
            assert!((q - s).abs() < 1e-9, "eta={eta} lambda2={lambda2}: {s} vs {q}");
        }
    }
}

#[test]
fn approximation_accurate_for_small_noncentrality() {
    let mut worst = 0.0f64;
    for i in 0..=40 {
        let lambda2 = 0.4 * i as f64 / 40.0;
        for j in 0..=200 {
            let eta = 20.0 * j as f64 / 200.0;
            let a = approx_noncentral_chi2_cdf_dof2(eta, lambda2).unwrap();
            let e = noncentral_chi2_cdf_dof2(eta, lambda2).unwrap();
            worst = worst.max((a - e).abs());
        }
    }
    assert!(worst <= 0.02, "worst gap {worst}");
}

#[test]
fn approximation_error_direction_at_reference_point() {
    // Tail (outage) probabilities at eta = 2, lambda2 = 2: approx 0.6065, exact 0.6543.
    let approx_tail = 1.0 - approx_noncentral_chi2_cdf_dof2(2.0, 2.0).unwrap();
    let exact_tail = 1.0 - noncentral_chi2_cdf_dof2(2.0, 2.0).unwrap();
    assert!((approx_tail - (-0.5f64).exp()).abs() < 1e-12);
    assert!((exact_tail - 0.6543).abs() < 5e-5);
    assert!(approx_tail < exact_tail);
}

#[test]
fn cdf_matches_empirical_component_construction() {
    // 2 (X1^2 + X2^2) / eps2 with X ~ N(Re/Im g_hat, eps2 / 2).
    let g_hat = Complex64::new(0.3, -0.2);
    let eps2 = 0.25;
    let lambda2 = 2.0 * g_hat.norm_sqr() / eps2;
    let mut rng = RngStream::new(2024, 5);
    let n = 1_000_000;
    let etas = [0.5, 1.5, 3.0, 6.0];
    let mut hits = [0usize; 4];
    for _ in 0..n {
        let g = sample_complex_gaussian(g_hat, eps2, &mut rng).unwrap();
        let chi = 2.0 * g.norm_sqr() / eps2;
        for (h, &eta) in hits.iter_mut().zip(&etas) {
            *h += (chi < eta) as usize;
        }
    }
    for (h, &eta) in hits.iter().zip(&etas) {
        let p = noncentral_chi2_cdf_dof2(eta, lambda2).unwrap();
        let emp = *h as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((emp - p).abs() <= 3.0 * se, "eta={eta}: {emp} vs {p} (se {se})");
    }
}

#[test]
fn complex_gaussian_moments() {
    let mut rng = RngStream::new(77, 0);
    let n = 1_000_000;
    let zero = Complex64::new(0.0, 0.0);
    let mut mean = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        mean += sample_complex_gaussian(zero, 1.0, &mut rng).unwrap();
    }
    assert!((mean / n as f64).norm() < 0.005);

    let mut second = 0.0;
    for _ in 0..n {
        second += sample_complex_gaussian(zero, 0.3, &mut rng).unwrap().norm_sqr();
    }
    assert!((second / n as f64 - 0.3).abs() < 0.002);
}

#[test]
fn instance_moments() {
    let ensemble = FadingEnsemble::uniform(1, 0.6, 0.3, 0.3).unwrap();
    let mut rng = RngStream::new(5, 9);
    let n = 1_000_000;
    let (mut h2, mut g2) = (0.0, 0.0);
    for _ in 0..n {
        let inst = sample_instance(&ensemble, &mut rng);
        h2 += inst.h()[0].norm_sqr();
        g2 += inst.g_hat()[0].norm_sqr();
    }
    assert!((h2 / n as f64 - 0.6).abs() < 0.005);
    assert!((g2 / n as f64 - 0.3).abs() < 0.003);
}

#[test]
fn eavesdropper_error_moment_and_exponential_tail() {
    let inst = ChannelInstance::from_magnitudes(&[0.3], &[0.1], &[0.3]).unwrap();
    let mut rng = RngStream::new(6, 1);
    let n = 1_000_000;
    let mut err2 = 0.0;
    for _ in 0..n {
        let g = sample_eavesdropper(&inst, &mut rng);
        err2 += (g.g()[0] - inst.g_hat()[0]).norm_sqr();
    }
    assert!((err2 / n as f64 - 0.3).abs() < 0.003);

    // |h| = 0.5, g_hat = 0, eps2 = 0.25: Pr(|g| > |h|) = exp(-0.25 / 0.25).
    let inst = ChannelInstance::from_magnitudes(&[0.5], &[0.0], &[0.25]).unwrap();
    let mut hits = 0usize;
    for _ in 0..n {
        hits += (sample_eavesdropper(&inst, &mut rng).g()[0].norm() > 0.5) as usize;
    }
    let emp = hits as f64 / n as f64;
    assert!((emp - (-1.0f64).exp()).abs() < 0.005, "{emp}");
}

#[test]
fn eavesdropper_errors_uncorrelated_across_channels() {
    let inst = ChannelInstance::from_magnitudes(&[0.5; 3], &[0.2, 0.0, 0.7], &[0.3, 0.3, 0.09]).unwrap();
    let mut rng = RngStream::new(8, 3);
    let n = 200_000;
    let mut xs = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let g = sample_eavesdropper(&inst, &mut rng);
        for i in 0..3 {
            xs[i].push((g.g()[i] - inst.g_hat()[i]).norm_sqr());
        }
    }
    let corr = |a: &[f64], b: &[f64]| {
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    };
    // Standard error of a sample correlation near zero is about 1/sqrt(n).
    let se = 1.0 / (n as f64).sqrt();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let r = corr(&xs[i], &xs[j]);
        assert!(r.abs() <= 3.0 * se, "corr({i},{j}) = {r}");
    }
}

#[test]
fn exact_complete_outage_matches_empirical_frequency() {
    let inst = ChannelInstance::new(
        vec![Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.3)],
        vec![Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.2)],
        vec![0.2, 0.15],
    )
    .unwrap();
    let p = complete_outage_instantaneous_exact(&inst).unwrap();
    let mut rng = RngStream::new(10, 10);
    let n = 1_000_000;
    let mut hits = 0usize;
    for _ in 0..n {
        let g = sample_eavesdropper(&inst, &mut rng);
        hits += inst.h().iter().zip(g.g()).all(|(h, g)| h.norm() < g.norm()) as usize;
    }
    let emp = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((emp - p).abs() <= 3.0 * se, "{emp} vs {p}");
}

#[test]
fn markov_bound_holds_empirically() {
    let inst = ChannelInstance::from_squared_magnitudes(&[0.9, 0.4, 0.2], &[0.1, 0.3, 0.05], &[0.3, 0.09, 0.3]).unwrap();
    let alloc = PowerAllocation::new(vec![0.05, 0.03, 0.02], 0.1).unwrap();
    let target = TargetRate::from_threshold(0.02).unwrap();
    let bound = markov_outage_bound(&inst, &alloc, &target).unwrap();
    let inner = 100_000;
    let mut rng = RngStream::new(12, 12);
    let p = conditional_outage(&inst, &alloc, &target, inner, &mut rng, EventMode::BoundEvent).unwrap();
    let se = (p * (1.0 - p) / inner as f64).sqrt();
    assert!(p <= bound + 3.0 * se, "{p} vs bound {bound}");
}
