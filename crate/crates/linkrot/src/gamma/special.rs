//! Special functions backing the gamma model: log-gamma, digamma,
//! trigamma, and the regularized lower incomplete gamma function.
//!
//! The implementations are the classical ones: Lanczos for ln Γ,
//! recurrence-shifted asymptotic series for ψ and ψ′, and the
//! series / continued-fraction pair for P(a, x) split at x = a + 1.
//! All functions here assume a positive argument; the public wrappers
//! in the parent module own domain checking.

// Coefficients and reference values are written with their full
// published digits even where f64 rounds them.
#![allow(clippy::excessive_precision)]

/// Lanczos g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// ln Γ(x) for x > 0.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its sweet spot.
    if x < 0.5 {
        return ln_gamma(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    LN_SQRT_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ψ(x) for x > 0: recurrence below 8, then the Bernoulli asymptotic
/// series. Absolute error stays under 1e-12 across [1e-3, 1e6].
pub(crate) fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut result = 0.0;
    let mut x = x;
    while x < 8.0 {
        result -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln x − 1/(2x) − 1/(12x²) + 1/(120x⁴) − 1/(252x⁶) + 1/(240x⁸) − 1/(132x¹⁰)
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    result + x.ln() - 0.5 * inv - series
}

/// ψ′(x) for x > 0, same shift-then-series scheme.
pub(crate) fn trigamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut result = 0.0;
    let mut x = x;
    while x < 8.0 {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + 1/(6x³) − 1/(30x⁵) + 1/(42x⁷) − 1/(30x⁹)
    let series =
        inv * (1.0 + inv * (0.5 + inv * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))));
    result + series
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 500;

/// Regularized lower incomplete gamma P(a, x) for a > 0, x ≥ 0.
pub(crate) fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_continued_fraction(a, x)
    }
}

/// P(a, x) by power series; converges fast for x < a + 1.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    (sum * log_prefix.exp()).clamp(0.0, 1.0)
}

/// Q(a, x) by modified Lentz continued fraction; converges fast for
/// x ≥ a + 1.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = f64::MIN_POSITIVE / EPS;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    (h * log_prefix.exp()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integer_factorials() {
        // Γ(n) = (n−1)!
        let mut factorial = 1.0_f64;
        for n in 1..=15 {
            assert!(
                (ln_gamma(n as f64) - factorial.ln()).abs() < 1e-12,
                "n={n}"
            );
            factorial *= n as f64;
        }
    }

    #[test]
    fn ln_gamma_half() {
        // Γ(1/2) = √π
        let want = std::f64::consts::PI.sqrt().ln();
        assert!((ln_gamma(0.5) - want).abs() < 1e-13);
    }

    #[test]
    fn incomplete_gamma_exponential_closed_form() {
        // a = 1 reduces to 1 − e^(−x).
        for x in [0.1f64, 0.5, 1.0, 2.0, 10.0, 40.0] {
            let want = 1.0 - (-x).exp();
            assert!((reg_lower_gamma(1.0, x) - want).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn incomplete_gamma_bounds_and_monotonicity() {
        for a in [0.5, 1.0, 2.52, 10.0, 50.0] {
            let mut prev = 0.0;
            for i in 0..200 {
                let x = i as f64 * a / 10.0;
                let p = reg_lower_gamma(a, x);
                assert!((0.0..=1.0).contains(&p));
                assert!(p >= prev - 1e-15, "a={a} x={x}");
                prev = p;
            }
            assert!(reg_lower_gamma(a, a * 60.0) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn trigamma_matches_digamma_derivative() {
        for x in [0.3f64, 1.0, 2.52, 7.7, 40.0, 1000.0] {
            let h = (1e-6 * x).max(1e-7);
            let numeric = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            let rel = (trigamma(x) - numeric).abs() / trigamma(x);
            assert!(rel < 1e-6, "x={x}");
        }
    }
}
