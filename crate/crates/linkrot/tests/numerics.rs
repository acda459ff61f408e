//! Numerical accuracy checks for the gamma machinery, judged against
//! independent oracles: adaptive quadrature over the density, closed
//! forms for digamma, and a third-party sampler for fit recovery.

// Frozen reference constants keep their full decimal expansions.
#![allow(clippy::excessive_precision)]

mod common;

use common::{
    adaptive_simpson, digamma_half, digamma_integer, gamma_draws, pdf_mass_above,
    pdf_mass_below,
};
use linkrot::{digamma, fit_gamma, gamma_cdf, tail_probability, GammaModel, TailSide};
use rand::{Rng, SeedableRng};

// Frozen reference: cdf(75.6; k=2.52, θ=30) to 20 digits.
const CDF_AT_MEAN: f64 = 0.583_786_555_052_630_740_07;

fn model(shape: f64, scale: f64) -> GammaModel {
    GammaModel::from_params(shape, scale).unwrap()
}

#[test]
fn quadrature_oracle_agrees_with_frozen_reference() {
    let mass = pdf_mass_below(&model(2.52, 30.0), 75.6);
    assert!(
        (mass - CDF_AT_MEAN).abs() < 1e-9,
        "oracle off: {mass} vs {CDF_AT_MEAN}"
    );
}

#[test]
fn density_normalizes_to_one_by_quadrature() {
    for &shape in &[0.5, 1.0, 2.52, 10.0] {
        for &scale in &[1.0, 30.0] {
            let m = model(shape, scale);
            let sd = (shape).sqrt() * scale;
            let hi = m.mean() + 40.0 * sd;
            let mass = pdf_mass_below(&m, hi);
            assert!(
                (mass - 1.0).abs() < 1e-6,
                "k={shape} θ={scale}: mass {mass}"
            );
        }
    }
}

#[test]
fn cdf_matches_quadrature_at_assorted_points() {
    for &(shape, scale, x) in &[
        (0.5, 1.0, 0.3),
        (0.5, 30.0, 2.0),
        (1.0, 30.0, 30.0),
        (2.52, 30.0, 10.0),
        (2.52, 30.0, 75.6),
        (2.52, 30.0, 200.0),
        (10.0, 30.0, 300.0),
    ] {
        let by_quadrature = pdf_mass_below(&model(shape, scale), x);
        let by_library = gamma_cdf(x, shape, scale).unwrap();
        assert!(
            (by_quadrature - by_library).abs() < 1e-9,
            "k={shape} θ={scale} x={x}: {by_library} vs quadrature {by_quadrature}"
        );
    }
}

#[test]
fn cdf_pdf_finite_difference_consistency() {
    // d/dx cdf == pdf, central difference at 50 sampler-drawn points
    // (drawn from the body, where both sides are well away from zero).
    let m = model(2.52, 30.0);
    let points = gamma_draws(2.52, 30.0, 50, 11);
    for &x in &points {
        let h = 1e-4 * x.max(1.0);
        let slope = (m.cdf(x + h).unwrap() - m.cdf(x - h).unwrap()) / (2.0 * h);
        let pdf = m.pdf(x).unwrap();
        let rel = (slope - pdf).abs() / pdf.max(1e-300);
        assert!(rel < 1e-6, "x={x}: slope {slope} vs pdf {pdf} (rel {rel})");
    }
}

#[test]
fn digamma_closed_forms() {
    assert!((digamma(1.0).unwrap() - digamma_integer(1)).abs() < 1e-12);
    assert!((digamma(2.0).unwrap() - digamma_integer(2)).abs() < 1e-12);
    assert!((digamma(10.0).unwrap() - digamma_integer(10)).abs() < 1e-12);
    assert!((digamma(37.0).unwrap() - digamma_integer(37)).abs() < 1e-12);
    assert!((digamma(0.5).unwrap() - digamma_half()).abs() < 1e-12);
}

#[test]
fn digamma_recurrence_holds() {
    // ψ(x+1) − ψ(x) = 1/x
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let x: f64 = rng.random_range(0.05..30.0);
        let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
        assert!(
            (lhs - 1.0 / x).abs() < 1e-10,
            "x={x}: ψ(x+1)−ψ(x) = {lhs}, want {}",
            1.0 / x
        );
    }
}

#[test]
fn fit_is_scale_equivariant() {
    let base = gamma_draws(2.52, 30.0, 2_000, 5);
    let fitted = fit_gamma(&base).unwrap();
    for &factor in &[0.1, 7.5, 1000.0] {
        let scaled: Vec<f64> = base.iter().map(|x| x * factor).collect();
        let refit = fit_gamma(&scaled).unwrap();
        let shape_rel = (refit.shape - fitted.shape).abs() / fitted.shape;
        let scale_rel = (refit.scale - factor * fitted.scale).abs() / (factor * fitted.scale);
        assert!(shape_rel < 1e-8, "shape drifted by {shape_rel} at ×{factor}");
        assert!(scale_rel < 1e-8, "scale off by {scale_rel} at ×{factor}");
    }
}

#[test]
fn fit_mean_identity() {
    // The likelihood equations force k̂θ̂ to equal the sample mean.
    let draws = gamma_draws(2.52, 30.0, 1_000, 9);
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let fitted = fit_gamma(&draws).unwrap();
    assert!((fitted.shape * fitted.scale - mean).abs() / mean < 1e-10);
}

#[test]
fn tail_probability_matches_quadrature() {
    let m = model(2.52, 30.0);
    for &x in &[10.0, 75.6, 200.0, 500.0] {
        let tail = tail_probability(x, &m).unwrap();
        let oracle = match tail.side {
            TailSide::LowTail => pdf_mass_below(&m, x),
            TailSide::HighTail => pdf_mass_above(&m, x),
        };
        assert!(
            (tail.prob - oracle).abs() < 1e-6,
            "x={x}: {} vs oracle {oracle}",
            tail.prob
        );
    }
}

#[test]
fn cdf_is_smooth_across_the_evaluation_seam() {
    // The regularized incomplete gamma switches algorithms at
    // x/θ = k + 1; the value must not jump there.
    for &(shape, scale) in &[(0.5, 1.0), (2.52, 30.0), (10.0, 2.0)] {
        let seam = (shape + 1.0) * scale;
        let below = gamma_cdf(seam - 1e-9 * scale, shape, scale).unwrap();
        let above = gamma_cdf(seam + 1e-9 * scale, shape, scale).unwrap();
        assert!(below <= above, "k={shape}: cdf decreased across seam");
        assert!(
            above - below < 1e-9,
            "k={shape}: jump of {} at the seam",
            above - below
        );
    }
}

#[test]
fn quadrature_oracle_integrates_known_functions() {
    // Sanity on the oracle itself before trusting it elsewhere.
    let linear = adaptive_simpson(&|x| x, 0.0, 2.0, 1e-12);
    assert!((linear - 2.0).abs() < 1e-12);
    let cosine = adaptive_simpson(&f64::cos, 0.0, std::f64::consts::FRAC_PI_2, 1e-12);
    assert!((cosine - 1.0).abs() < 1e-10);
}
