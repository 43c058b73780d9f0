//! Analytic wavefunctions: real stationary states and time-dependent
//! two-vector states, all with closed-form derivatives.

mod catalog;
mod fd;
mod real;
mod two_vector;

pub use catalog::{parse_real_state, parse_two_vector_state, StateSpec};
pub use fd::{fd_check, fd_check_state, fd_check_two_vector};
pub use real::{oscillator_pair_ground, product, BoxState, HoEigenstate, ProductState, UnitState};
pub use two_vector::{
    compose, matrix_schroedinger_residual, rotating_ground, ComposedState, HoSuperposition, RotatingEigenstate,
    TwoVectorJet, UnitTwoVector,
};

use std::sync::Arc;

use crate::geometry::{DiagonalMetric, ScalarField};

/// A real eigenfunction of `E ψ = −(ħ²/2)∇²ψ + V ψ` in its mass-weighted metric.
pub trait RealStationaryState: ScalarField {
    fn energy(&self) -> f64;
    fn potential(&self, x: &[f64]) -> f64;
    fn hbar(&self) -> f64;
    /// Mass attached to each Cartesian coordinate.
    fn masses(&self) -> Vec<f64>;
    /// Box bounding quadrature and sampling, one interval per coordinate.
    fn domain(&self) -> Vec<(f64, f64)>;
    /// `max |ψ|` over the domain.
    fn psi_scale(&self) -> f64;
    fn label(&self) -> String;
}

/// A complex wavefunction `ψ₁ + iψ₂` carried as two real fields. Each
/// coordinate is treated as a one-dimensional particle with its own mass.
pub trait TwoVectorState: Send + Sync {
    fn dim(&self) -> usize;
    fn hbar(&self) -> f64;
    fn masses(&self) -> Vec<f64>;
    fn potential(&self, x: &[f64]) -> f64;
    fn jet(&self, x: &[f64], t: f64) -> TwoVectorJet;
    fn domain(&self) -> Vec<(f64, f64)>;
    fn label(&self) -> String;

    fn density(&self, x: &[f64], t: f64) -> f64 {
        let j = self.jet(x, t);
        j.psi[0] * j.psi[0] + j.psi[1] * j.psi[1]
    }

    /// Probability current `(ħ/m_i)(ψ₁∇_iψ₂ − ψ₂∇_iψ₁)`.
    fn current(&self, x: &[f64], t: f64) -> Vec<f64> {
        let j = self.jet(x, t);
        let hbar = self.hbar();
        self.masses()
            .iter()
            .enumerate()
            .map(|(i, m)| hbar / m * (j.psi[0] * j.gradient[1][i] - j.psi[1] * j.gradient[0][i]))
            .collect()
    }
}

pub type SharedReal = Arc<dyn RealStationaryState>;
pub type SharedTwoVector = Arc<dyn TwoVectorState>;

/// The mass-weighted Cartesian chart in which a state is an eigenfunction.
pub fn native_chart(state: &dyn RealStationaryState) -> DiagonalMetric {
    DiagonalMetric::new(state.masses()).expect("state masses are validated at construction")
}
