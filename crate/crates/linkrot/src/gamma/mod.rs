//! Gamma-distribution model of per-homepage reference counts:
//! density and CDF, maximum-likelihood fitting, Kolmogorov-Smirnov
//! goodness-of-fit, and two-sided tail-probability anomaly detection.
//!
//! A fitted model turns "this homepage references 500 external
//! resources" from an eyeball judgment into a tail probability, and
//! both tails matter: inflated counts suggest injected content,
//! deflated ones a gutted or parked page.

mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::HomepageProfile;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GammaError {
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("sample variance is zero")]
    DegenerateSample,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("samples must be strictly positive")]
    NonPositiveSample,
}

fn check_params(shape: f64, scale: f64) -> Result<(), GammaError> {
    if !(shape.is_finite() && shape > 0.0) {
        return Err(GammaError::Domain("shape must be positive"));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(GammaError::Domain("scale must be positive"));
    }
    Ok(())
}

fn check_x(x: f64) -> Result<(), GammaError> {
    if x.is_nan() || x < 0.0 {
        return Err(GammaError::Domain("x must be non-negative"));
    }
    Ok(())
}

/// Density f(x) = x^(k−1) e^(−x/θ) / (Γ(k) θ^k).
///
/// At the origin: 0 for k > 1, 1/θ for k = 1, +∞ for k < 1.
pub fn gamma_pdf(x: f64, shape: f64, scale: f64) -> Result<f64, GammaError> {
    check_params(shape, scale)?;
    check_x(x)?;
    if x == 0.0 {
        return Ok(if shape > 1.0 {
            0.0
        } else if shape == 1.0 {
            1.0 / scale
        } else {
            f64::INFINITY
        });
    }
    let log_density = (shape - 1.0) * x.ln() - x / scale
        - special::ln_gamma(shape)
        - shape * scale.ln();
    Ok(log_density.exp())
}

/// P(X ≤ x): the regularized lower incomplete gamma at x/θ.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> Result<f64, GammaError> {
    check_params(shape, scale)?;
    check_x(x)?;
    Ok(special::reg_lower_gamma(shape, x / scale))
}

/// ψ(x), the logarithmic derivative of Γ.
pub fn digamma(x: f64) -> Result<f64, GammaError> {
    if !(x.is_finite() && x > 0.0) {
        return Err(GammaError::Domain("digamma needs x > 0"));
    }
    Ok(special::digamma(x))
}

/// A gamma model of reference counts. Diagnostics (`n`,
/// `log_likelihood`, `ks_statistic`) are populated by [`fit_gamma`];
/// a hand-set model from [`GammaModel::from_params`] carries zeros
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaModel {
    pub shape: f64,
    pub scale: f64,
    pub n: usize,
    pub log_likelihood: f64,
    pub ks_statistic: f64,
}

impl GammaModel {
    pub fn from_params(shape: f64, scale: f64) -> Result<Self, GammaError> {
        check_params(shape, scale)?;
        Ok(Self {
            shape,
            scale,
            n: 0,
            log_likelihood: 0.0,
            ks_statistic: 0.0,
        })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn pdf(&self, x: f64) -> Result<f64, GammaError> {
        gamma_pdf(x, self.shape, self.scale)
    }

    pub fn cdf(&self, x: f64) -> Result<f64, GammaError> {
        gamma_cdf(x, self.shape, self.scale)
    }

    /// CDF as a total function: 0 below the support. Used where a
    /// sample value is not under our control (KS over arbitrary data).
    fn cdf_total(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            special::reg_lower_gamma(self.shape, x / self.scale)
        }
    }
}

/// Maximum-likelihood fit.
///
/// θ̂ = mean/k̂, and k̂ solves ln k̂ − ψ(k̂) = ln(mean) − mean(ln x).
/// The left side is strictly decreasing in k, so the root is unique;
/// Newton iterations start from the method-of-moments value
/// k₀ = mean²/variance and fall back to bisection whenever a step
/// leaves the current bracket. Convergence is |Δk| < 1e−10, capped at
/// 100 iterations.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaModel, GammaError> {
    let n = samples.len();
    if n < 2 {
        return Err(GammaError::TooFewSamples(n));
    }
    if samples.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(GammaError::NonPositiveSample);
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    if variance == 0.0 {
        return Err(GammaError::DegenerateSample);
    }
    let sum_ln = samples.iter().map(|x| x.ln()).sum::<f64>();
    // s > 0 by Jensen's inequality unless the sample is (numerically)
    // constant.
    let s = mean.ln() - sum_ln / nf;
    if !(s.is_finite() && s > 0.0) {
        return Err(GammaError::DegenerateSample);
    }

    let mut k = mean * mean / variance;
    if !k.is_finite() || k <= 0.0 {
        k = 1.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..100 {
        let g = k.ln() - special::digamma(k) - s;
        if g >= 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let slope = 1.0 / k - special::trigamma(k);
        let newton = k - g / slope;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            k * 2.0
        };
        let step = (next - k).abs();
        k = next;
        if step < 1e-10 {
            break;
        }
    }

    let shape = k;
    let scale = mean / shape;
    let log_likelihood = (shape - 1.0) * sum_ln - nf * mean / scale
        - nf * (special::ln_gamma(shape) + shape * scale.ln());
    let mut model = GammaModel {
        shape,
        scale,
        n,
        log_likelihood,
        ks_statistic: 0.0,
    };
    model.ks_statistic = ks_statistic(samples, &model);
    Ok(model)
}

/// Kolmogorov-Smirnov statistic: sup distance between the empirical
/// CDF and the model CDF. 0 for an empty sample.
pub fn ks_statistic(samples: &[f64], model: &GammaModel) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = model.cdf_total(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    LowTail,
    HighTail,
}

impl std::fmt::Display for TailSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TailSide::LowTail => "low",
            TailSide::HighTail => "high",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProbability {
    pub prob: f64,
    pub side: TailSide,
}

/// Two-sided tail probability: min(P(X ≤ x), P(X ≥ x)) and the side
/// achieving it. Exactly at the median both sides give 0.5; ties
/// report LowTail.
pub fn tail_probability(x: f64, model: &GammaModel) -> Result<TailProbability, GammaError> {
    check_params(model.shape, model.scale)?;
    check_x(x)?;
    let low = model.cdf(x)?;
    let high = 1.0 - low;
    Ok(if low <= high {
        TailProbability {
            prob: low,
            side: TailSide::LowTail,
        }
    } else {
        TailProbability {
            prob: high,
            side: TailSide::HighTail,
        }
    })
}

/// One homepage judged against the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyVerdict {
    pub domain: String,
    pub observed: u64,
    pub tail_prob: f64,
    pub side: TailSide,
    pub flagged: bool,
}

/// Judge every profile's external-reference count against the model.
///
/// Output is sorted ascending by tail probability (most anomalous
/// first), domains breaking ties. A zero count has tail probability 0
/// and is always flagged: the gamma has no mass at the origin, and an
/// asset-free homepage in a population like this is itself a finding.
pub fn detect_anomalies(
    profiles: &[HomepageProfile],
    model: &GammaModel,
    alpha: f64,
) -> Vec<AnomalyVerdict> {
    debug_assert!(alpha > 0.0 && alpha < 0.5);
    let mut out: Vec<AnomalyVerdict> = profiles
        .iter()
        .map(|p| {
            let tail = tail_probability(p.external_count as f64, model)
                .expect("count is non-negative and model params are positive");
            AnomalyVerdict {
                domain: p.domain.clone(),
                observed: p.external_count,
                tail_prob: tail.prob,
                side: tail.side,
                flagged: tail.prob < alpha,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.tail_prob
            .total_cmp(&b.tail_prob)
            .then_with(|| a.domain.cmp(&b.domain))
    });
    out
}

/// On-disk model format: the fitted parameters plus the detection
/// defaults they were produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub shape: f64,
    pub scale: f64,
    pub n: usize,
    pub log_likelihood: f64,
    pub ks_statistic: f64,
    pub alpha_default: f64,
    pub truncation_floor: Option<f64>,
}

impl ModelFile {
    pub fn new(model: &GammaModel, alpha_default: f64, truncation_floor: Option<f64>) -> Self {
        Self {
            shape: model.shape,
            scale: model.scale,
            n: model.n,
            log_likelihood: model.log_likelihood,
            ks_statistic: model.ks_statistic,
            alpha_default,
            truncation_floor,
        }
    }

    pub fn model(&self) -> GammaModel {
        GammaModel {
            shape: self.shape,
            scale: self.scale,
            n: self.n,
            log_likelihood: self.log_likelihood,
            ks_statistic: self.ks_statistic,
        }
    }
}
