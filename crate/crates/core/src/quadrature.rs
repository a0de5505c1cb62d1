//! Gauss rules for the Gegenbauer weight `(1 - t^2)^{λ - 1/2}` on `[-1, 1]` and
//! logarithmic scale grids for integrals `∫ f(a) da / a`.
//!
//! Nodes come from the eigenvalues of the Jacobi matrix (Golub–Welsch), are
//! polished by Newton steps on the orthonormal recurrence, and the weights are
//! taken from the Christoffel function at the polished nodes.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sphere::gamma_half;

/// Nodes and weights of a Gauss rule for `(1 - t^2)^{λ - 1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lambda: f64,
    /// Highest polynomial degree integrated exactly.
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Weighted sum of precomputed samples at the rule nodes.
    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.len(), "one sample per node");
        samples.iter().zip(&self.weights).map(|(s, w)| s * w).sum()
    }

    /// `∫_a^b f(x) dx` with a Legendre rule (`λ = 1/2`) mapped onto `[a, b]`.
    pub fn integrate_interval<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|x| f(mid + half * x))
    }
}

/// Total mass `∫ (1 - t^2)^{μ - 1/2} dt = √π Γ(μ + 1/2) / Γ(μ + 1)` for half-integer `μ >= 0`.
pub fn weight_mass(mu: f64) -> f64 {
    let k = (2.0 * mu).round() as u32;
    PI.sqrt() * gamma_half(k + 1) / gamma_half(k + 2)
}

fn is_half_integer(x: f64) -> bool {
    let twice = 2.0 * x;
    (twice - twice.round()).abs() < 1e-12
}

/// Gauss–Gegenbauer rule with `count` nodes for weight `(1 - t^2)^{λ - 1/2}`.
pub fn gauss_gegenbauer(lambda: f64, count: usize) -> Result<QuadratureRule> {
    if !(lambda >= 0.5) || !is_half_integer(lambda) {
        return Err(Error::Domain(format!(
            "Gauss–Gegenbauer rules need a half-integer λ >= 1/2, got {lambda}"
        )));
    }
    gauss_symmetric(lambda, count)
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(count: usize) -> Result<QuadratureRule> {
    gauss_symmetric(0.5, count)
}

// Squared off-diagonal entry b_k^2 of the orthonormal recurrence for weight (1 - t^2)^{μ - 1/2}.
fn recurrence_sq(mu: f64, k: usize) -> f64 {
    let k = k as f64;
    k * (k + 2.0 * mu - 1.0) / (4.0 * (k + mu) * (k + mu - 1.0))
}

/// Rule for `(1 - t^2)^{μ - 1/2}`, half-integer `μ >= 0` (`μ = 0` is Chebyshev).
pub(crate) fn gauss_symmetric(mu: f64, count: usize) -> Result<QuadratureRule> {
    if count == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    if mu < 0.0 || !is_half_integer(mu) {
        return Err(Error::Domain(format!(
            "weight parameter μ = {mu} must be a half-integer >= 0"
        )));
    }
    if mu == 0.0 {
        let nodes: Vec<f64> = (0..count)
            .map(|j| -((2 * j + 1) as f64 * PI / (2 * count) as f64).cos())
            .collect();
        return Ok(QuadratureRule {
            weights: vec![PI / count as f64; count],
            nodes,
            lambda: mu,
            degree: 2 * count - 1,
        });
    }

    let b: Vec<f64> = (1..count).map(|k| recurrence_sq(mu, k).sqrt()).collect();
    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for (i, &bi) in b.iter().enumerate() {
        jacobi[(i, i + 1)] = bi;
        jacobi[(i + 1, i)] = bi;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("Jacobi matrix eigen-solve failed".into()));
    }
    nodes.sort_by(|a, b| a.total_cmp(b));

    let mass = weight_mass(mu);
    let b_full: Vec<f64> = (1..=count).map(|k| recurrence_sq(mu, k).sqrt()).collect();
    let mut weights = Vec::with_capacity(count);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_eval(&b_full, mass, count, *x);
            if dp != 0.0 {
                let step = p / dp;
                *x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
        }
        let (_, _, christoffel) = orthonormal_eval(&b_full, mass, count, *x);
        weights.push(1.0 / christoffel);
    }

    // Enforce the exact symmetry of the weight.
    for j in 0..count / 2 {
        let k = count - 1 - j;
        let x = 0.5 * (nodes[k] - nodes[j]);
        let w = 0.5 * (weights[k] + weights[j]);
        nodes[j] = -x;
        nodes[k] = x;
        weights[j] = w;
        weights[k] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }

    Ok(QuadratureRule {
        nodes,
        weights,
        lambda: mu,
        degree: 2 * count - 1,
    })
}

// Returns (p_N(x), p_N'(x), Σ_{k<N} p_k(x)^2) for the orthonormal family.
fn orthonormal_eval(b: &[f64], mass: f64, n: usize, x: f64) -> (f64, f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0 / mass.sqrt();
    let mut dp_prev = 0.0;
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let b_prev = if k == 0 { 0.0 } else { b[k - 1] };
        let p_next = (x * p - b_prev * p_prev) / b[k];
        let dp_next = (p + x * dp - b_prev * dp_prev) / b[k];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp, sum_sq)
}

/// Log-uniform scale nodes with trapezoid weights in `u = log a`, so that
/// `Σ w_i f(a_i) ≈ ∫_{a_min}^{a_max} f(a) da / a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ScaleGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| w * f(a))
            .sum()
    }
}

pub fn log_scale_grid(a_min: f64, a_max: f64, count: usize) -> Result<ScaleGrid> {
    if !(a_min > 0.0) || !(a_max > a_min) || !a_max.is_finite() {
        return Err(Error::Domain(format!(
            "scale grid needs 0 < a_min < a_max, got [{a_min}, {a_max}]"
        )));
    }
    if count < 2 {
        return Err(Error::Domain("scale grid needs at least two points".into()));
    }
    let span = (a_max / a_min).ln();
    let h = span / (count - 1) as f64;
    let points = (0..count)
        .map(|i| {
            if i == count - 1 {
                a_max
            } else {
                a_min * (h * i as f64).exp()
            }
        })
        .collect();
    let mut weights = vec![h; count];
    weights[0] = 0.5 * h;
    weights[count - 1] = 0.5 * h;
    Ok(ScaleGrid {
        a_min,
        a_max,
        points,
        weights,
    })
}

/// Composite Gauss–Legendre integral of `f` over consecutive panels `[x_i, x_{i+1}]`.
pub fn composite_integrate<F: FnMut(f64) -> f64>(
    rule: &QuadratureRule,
    breakpoints: &[f64],
    mut f: F,
) -> f64 {
    breakpoints
        .windows(2)
        .map(|w| rule.integrate_interval(w[0], w[1], &mut f))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::gegenbauer;

    #[test]
    fn single_node_legendre() {
        let rule = gauss_gegenbauer(0.5, 1).unwrap();
        assert_eq!(rule.nodes, vec![0.0]);
        assert!((rule.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_moments() {
        let rule = gauss_gegenbauer(0.5, 40).unwrap();
        assert!((rule.integrate(|t| t * t) - 2.0 / 3.0).abs() < 1e-14);
        let rule = gauss_gegenbauer(1.0, 20).unwrap();
        assert!((rule.integrate(|_| 1.0) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn weight_sums_and_exactness() {
        for &lambda in &[0.5, 1.0, 1.5, 2.0, 2.5] {
            for &count in &[1, 2, 5, 16, 61, 200] {
                let rule = gauss_gegenbauer(lambda, count).unwrap();
                let mass = weight_mass(lambda);
                let s: f64 = rule.weights.iter().sum();
                assert!((s - mass).abs() < 1e-12, "λ={lambda} N={count}");
                assert!(rule.weights.iter().all(|&w| w > 0.0));
                assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
                // C_p integrates to 0 for 1 <= p <= 2N - 1
                for p in 1..=(2 * count - 1).min(30) {
                    let v = rule.integrate(|t| gegenbauer(lambda, p, t).unwrap());
                    assert!(v.abs() < 1e-12, "λ={lambda} N={count} p={p}: {v}");
                }
            }
        }
    }

    #[test]
    fn chebyshev_mass() {
        let rule = gauss_symmetric(0.0, 7).unwrap();
        assert!((rule.weights.iter().sum::<f64>() - PI).abs() < 1e-14);
        assert!((rule.integrate(|t| t * t) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn nodes_interlace() {
        let a = gauss_gegenbauer(1.5, 9).unwrap();
        let b = gauss_gegenbauer(1.5, 10).unwrap();
        for i in 0..9 {
            assert!(b.nodes[i] < a.nodes[i] && a.nodes[i] < b.nodes[i + 1]);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gauss_gegenbauer(0.25, 4).is_err());
        assert!(gauss_gegenbauer(0.0, 4).is_err());
        assert!(gauss_gegenbauer(1.0, 0).is_err());
        assert!(log_scale_grid(1.0, 0.5, 10).is_err());
        assert!(log_scale_grid(0.1, 1.0, 1).is_err());
    }

    #[test]
    fn scale_grid_constant_and_gamma_integrals() {
        let g = log_scale_grid(1e-3, 30.0, 200).unwrap();
        assert!((g.integrate(|_| 1.0) - (30.0f64 / 1e-3).ln()).abs() < 1e-12);
        assert!(g.points.windows(2).all(|w| w[0] < w[1]));
        // ∫ e^{-a} da over the truncated range, not the full Γ(1)
        let exact = (-1e-3f64).exp() - (-30.0f64).exp();
        assert!((g.integrate(|a| a * (-a).exp()) - exact).abs() < 1e-6);
        let g = log_scale_grid(1e-4, 50.0, 400).unwrap();
        let psi1_sq = |a: f64| 4.0 * a * a * (-2.0 * a).exp();
        assert!((g.integrate(psi1_sq) - 1.0).abs() < 1e-6);
    }
}
