//! Product quadrature over Euler angles with measure `sin α dα dβ dγ` on
//! `[0, π] × [0, 2π) × [0, 4π)`.
//!
//! Gauss–Legendre in `cos α`, trapezoid in `β`, and either the exact factor
//! `4π` for `γ`-free integrands or a trapezoid in `γ`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::ops::{Add, Mul};

use gauss_quad::GaussLegendre;

pub const GAMMA_PERIOD: f64 = 4.0 * PI;

#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    /// `(α, β, weight)` with the `α` and `β` weights folded in.
    nodes: Vec<(f64, f64, f64)>,
    gamma_points: usize,
}

impl AngularQuadrature {
    pub fn new(alpha_points: usize, beta_points: usize, gamma_points: usize) -> Self {
        let alpha_points = NonZeroUsize::new(alpha_points).expect("at least one alpha node");
        assert!(beta_points > 0 && gamma_points > 0, "at least one node per angle");
        let rule = GaussLegendre::new(alpha_points);
        let wb = 2.0 * PI / beta_points as f64;
        let mut nodes = Vec::with_capacity(alpha_points.get() * beta_points);
        for &(x, wx) in rule.as_node_weight_pairs() {
            let alpha = x.acos();
            for j in 0..beta_points {
                nodes.push((alpha, j as f64 * wb, wx * wb));
            }
        }
        Self { nodes, gamma_points }
    }

    /// 32 × 32 nodes in `(α, β)` and 16 in `γ`.
    pub fn standard() -> Self {
        Self::new(32, 32, 16)
    }

    /// `∫ f dΩ` for an integrand that does not depend on `γ`.
    pub fn integrate_gamma_free<T, F>(&self, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64, f64) -> T,
    {
        let sum = self
            .nodes
            .iter()
            .fold(T::default(), |acc, &(a, b, w)| acc + f(a, b) * w);
        sum * GAMMA_PERIOD
    }

    /// `∫ f dΩ` for a general integrand.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64, f64, f64) -> T,
    {
        let wg = GAMMA_PERIOD / self.gamma_points as f64;
        let mut sum = T::default();
        for &(a, b, w) in &self.nodes {
            for k in 0..self.gamma_points {
                sum = sum + f(a, b, k as f64 * wg) * (w * wg);
            }
        }
        sum
    }
}
