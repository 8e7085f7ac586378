//! Closed-form solutions used as benchmarks.

use crate::operator::gamma;

/// Constant `K` with `(-Δ)^s [K (1 − |x|²)^s_+] = 1` on the unit ball of R^N.
pub fn torsion_constant(dim: usize, s: f64) -> f64 {
    let n = 0.5 * dim as f64;
    gamma(n) / (4f64.powf(s) * gamma(1.0 + s) * gamma(n + s))
}

/// Solution of `(-Δ)^s u = 1` on the ball `B(center, radius)` with zero exterior data.
pub fn torsion_solution(x: &[f64], center: &[f64], radius: f64, s: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
    let t = 1.0 - r2 / (radius * radius);
    if t <= 0.0 {
        return 0.0;
    }
    torsion_constant(x.len(), s) * radius.powf(2.0 * s) * t.powf(s)
}

/// Fourier symbol `|k|^{2s}` of the fractional Laplacian.
pub fn symbol(k: f64, s: f64) -> f64 {
    k.abs().powf(2.0 * s)
}
