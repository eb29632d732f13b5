//! Gauss-Hermite quadrature for averages over a Gaussian-distributed offset.
//!
//! Nodes and weights come from the Golub-Welsch eigenproblem of the Hermite
//! Jacobi matrix. The `GaussianQuadrature` form is rescaled so that
//! `sum_i w_i f(d_i)` approximates `E[f(d)]` with `d ~ N(0, sigma^2)` and the
//! weights summing to one.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::eigh;

/// Physicists' Gauss-Hermite rule: nodes and weights for integrals of the form
/// `int exp(-x^2) f(x) dx`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("gauss_hermite requires n >= 1".into()));
    }
    if n == 1 {
        return Ok((vec![0.0], vec![std::f64::consts::PI.sqrt()]));
    }
    let mut jm = Array2::<Complex64>::zeros((n, n));
    for k in 1..n {
        let beta = (k as f64 / 2.0).sqrt();
        jm[[k - 1, k]] = Complex64::new(beta, 0.0);
        jm[[k, k - 1]] = Complex64::new(beta, 0.0);
    }
    let (nodes, vecs) = eigh(&jm)?;
    let mu0 = std::f64::consts::PI.sqrt();
    let weights: Vec<f64> = (0..n).map(|i| mu0 * vecs[[0, i]].norm_sqr()).collect();
    Ok((nodes.to_vec(), weights))
}

/// Quadrature rule for expectation values under a centered normal distribution.
#[derive(Debug, Clone)]
pub struct GaussianQuadrature {
    /// Offsets at which to evaluate the integrand.
    pub nodes: Vec<f64>,
    /// Probability weights, summing to one.
    pub weights: Vec<f64>,
}

impl GaussianQuadrature {
    /// Rule with `n` points for a normal distribution of standard deviation
    /// `sigma`. `sigma = 0` degenerates to a single node at zero.
    pub fn for_sigma(sigma: f64, n: usize) -> Result<Self> {
        if sigma < 0.0 {
            return Err(Error::Domain("sigma must be non-negative".into()));
        }
        if sigma == 0.0 {
            return Ok(Self { nodes: vec![0.0], weights: vec![1.0] });
        }
        let (x, w) = gauss_hermite(n)?;
        let norm: f64 = w.iter().sum();
        let scale = std::f64::consts::SQRT_2 * sigma;
        Ok(Self {
            nodes: x.iter().map(|xi| scale * xi).collect(),
            weights: w.iter().map(|wi| wi / norm).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted average of a scalar function.
    pub fn average<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dense trapezoid evaluation of a Gaussian expectation, used as an
    /// independent reference for the quadrature rule.
    fn trapezoid_average<F: Fn(f64) -> f64>(sigma: f64, f: F) -> f64 {
        let half_span = 8.0 * sigma;
        let n = 200_001;
        let dx = 2.0 * half_span / (n - 1) as f64;
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut acc = 0.0;
        for i in 0..n {
            let x = -half_span + i as f64 * dx;
            let weight = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc += weight * norm * (-x * x / (2.0 * sigma * sigma)).exp() * f(x);
        }
        acc * dx
    }

    #[test]
    fn weights_sum_and_symmetry() {
        for n in [1usize, 3, 5, 7, 9, 11] {
            let q = GaussianQuadrature::for_sigma(55e-6, n).unwrap();
            let total: f64 = q.weights.iter().sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            for i in 0..n {
                assert_relative_eq!(q.nodes[i], -q.nodes[n - 1 - i], epsilon = 1e-18);
                assert_relative_eq!(
                    q.weights[i],
                    q.weights[n - 1 - i],
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn gaussian_moments_are_exact() {
        let sigma = 3.7e-4;
        let q = GaussianQuadrature::for_sigma(sigma, 7).unwrap();
        assert_relative_eq!(q.average(|x| x), 0.0, epsilon = 1e-16);
        assert_relative_eq!(q.average(|x| x * x), sigma * sigma, max_relative = 1e-10);
        assert_relative_eq!(
            q.average(|x| x.powi(4)),
            3.0 * sigma.powi(4),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            q.average(|x| x.powi(6)),
            15.0 * sigma.powi(6),
            max_relative = 1e-9
        );
    }

    #[test]
    fn matches_dense_trapezoid_reference() {
        let sigma = 55e-6;
        let q = GaussianQuadrature::for_sigma(sigma, 7).unwrap();
        // Dephasing-like integrand: phase accumulated linearly in the offset.
        let rate = 6.0e3; // rad per unit offset, sigma * rate ~ 0.33
        let gh = q.average(|x| (rate * x).cos());
        let reference = trapezoid_average(sigma, |x| (rate * x).cos());
        assert_relative_eq!(gh, reference, max_relative = 1e-9);
        // Smooth non-polynomial integrand.
        let gh2 = q.average(|x| 1.0 / (1.0 + (x / sigma).powi(2) / 4.0));
        let ref2 = trapezoid_average(sigma, |x| 1.0 / (1.0 + (x / sigma).powi(2) / 4.0));
        assert_relative_eq!(gh2, ref2, max_relative = 2e-3);
    }

    #[test]
    fn known_three_point_rule() {
        // x = {-sqrt(3/2), 0, +sqrt(3/2)}, w = {sqrt(pi)/6, 2 sqrt(pi)/3, sqrt(pi)/6}.
        let (x, w) = gauss_hermite(3).unwrap();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        assert_relative_eq!(x[0], -(1.5f64).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(x[2], (1.5f64).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(w[0], pi_sqrt / 6.0, max_relative = 1e-12);
        assert_relative_eq!(w[1], 2.0 * pi_sqrt / 3.0, max_relative = 1e-12);
        assert_relative_eq!(w[2], pi_sqrt / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_sigma_degenerates() {
        let q = GaussianQuadrature::for_sigma(0.0, 7).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.nodes[0], 0.0);
        assert_eq!(q.weights[0], 1.0);
    }
}
