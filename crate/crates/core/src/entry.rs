//! Scalar entries of the wave propagator and of its source response.
//!
//! All functions take a symbol value `λ` and a time `t`. For `λ < 0` the
//! trigonometric forms continue to their hyperbolic counterparts. Near
//! `λ t² = 0` power series are used so the removable singularities at `λ = 0`
//! evaluate without cancellation.

const SERIES_CUTOFF: f64 = 0.5;
const SERIES_TERMS: usize = 20;

/// `Σ_k (-x)^k / (2k + offset)!`, for `|x| < SERIES_CUTOFF`.
fn series(x: f64, offset: usize) -> f64 {
    let mut term = 1.0 / factorial(offset);
    let mut sum = term;
    for k in 1..SERIES_TERMS {
        let a = (2 * k + offset - 1) as f64;
        let b = (2 * k + offset) as f64;
        term *= -x / (a * b);
        sum += term;
    }
    sum
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn small(lambda: f64, t: f64) -> bool {
    (lambda * t * t).abs() < SERIES_CUTOFF
}

/// `cos(√λ t)`.
pub fn cos_sqrt(lambda: f64, t: f64) -> f64 {
    if lambda >= 0.0 {
        (lambda.sqrt() * t).cos()
    } else {
        ((-lambda).sqrt() * t).cosh()
    }
}

/// `λ^{-1/2} sin(√λ t)`, equal to `t` at `λ = 0`.
pub fn sinc_sqrt(lambda: f64, t: f64) -> f64 {
    if small(lambda, t) {
        return t * series(lambda * t * t, 1);
    }
    if lambda > 0.0 {
        let s = lambda.sqrt();
        (s * t).sin() / s
    } else {
        let s = (-lambda).sqrt();
        (s * t).sinh() / s
    }
}

/// `-λ^{1/2} sin(√λ t)`.
pub fn neg_sqrt_sin(lambda: f64, t: f64) -> f64 {
    -lambda * sinc_sqrt(lambda, t)
}

/// `λ^{-1} (1 - cos(√λ t))`, equal to `t²/2` at `λ = 0`.
pub fn one_minus_cos_over(lambda: f64, t: f64) -> f64 {
    if small(lambda, t) {
        return t * t * series(lambda * t * t, 2);
    }
    (1.0 - cos_sqrt(lambda, t)) / lambda
}

/// `(cos(√λ t) - 1) / λ`: slope of `cos(√λ t)` between the nodes `0` and `λ`.
pub fn cos_slope(lambda: f64, t: f64) -> f64 {
    -one_minus_cos_over(lambda, t)
}

/// `(λ^{-1/2} sin(√λ t) - t) / λ`.
pub fn sinc_slope(lambda: f64, t: f64) -> f64 {
    if small(lambda, t) {
        return -t.powi(3) * series(lambda * t * t, 3);
    }
    (sinc_sqrt(lambda, t) - t) / lambda
}

/// `(λ^{-1}(1 - cos(√λ t)) - t²/2) / λ`.
pub fn one_minus_cos_slope(lambda: f64, t: f64) -> f64 {
    if small(lambda, t) {
        return -t.powi(4) * series(lambda * t * t, 4);
    }
    (one_minus_cos_over(lambda, t) - 0.5 * t * t) / lambda
}

/// Values `f_ij(λ)` of the propagator entries
/// `[[cos, λ^{-1/2} sin], [-λ^{1/2} sin, cos]]` at `√λ t`.
pub fn propagator_entries(lambda: f64, t: f64) -> [[f64; 2]; 2] {
    let c = cos_sqrt(lambda, t);
    let s = sinc_sqrt(lambda, t);
    [[c, s], [-lambda * s, c]]
}

/// Slopes `(f_ij(λ) - f_ij(0)) / λ` of the propagator entries.
pub fn propagator_slopes(lambda: f64, t: f64) -> [[f64; 2]; 2] {
    let m11 = cos_slope(lambda, t);
    [[m11, sinc_slope(lambda, t)], [-sinc_sqrt(lambda, t), m11]]
}
