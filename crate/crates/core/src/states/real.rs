use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{RealStationaryState, SharedReal};
use crate::error::{Error, Result};
use crate::geometry::{Jet, ScalarField};

const MAX_LEVEL: u32 = 10;

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Hermite-function eigenstate of `V = ½ m ω² x²`.
#[derive(Debug, Clone)]
pub struct HoEigenstate {
    level: u32,
    omega: f64,
    mass: f64,
    hbar: f64,
    norm: f64,
    inv_length: f64,
    scale: f64,
}

impl HoEigenstate {
    pub fn new(level: u32, omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::UnsupportedLevel(level));
        }
        check_positive("omega", omega)?;
        check_positive("mass", mass)?;
        check_positive("hbar", hbar)?;
        let inv_length = (mass * omega / hbar).sqrt();
        let factorial: f64 = (1..=level).map(f64::from).product();
        let norm = (mass * omega / (PI * hbar)).powf(0.25) / (2f64.powi(level as i32) * factorial).sqrt();
        let mut state = Self {
            level,
            omega,
            mass,
            hbar,
            norm,
            inv_length,
            scale: 0.0,
        };
        let (lo, hi) = state.interval();
        state.scale = (0..=4000)
            .map(|i| state.value(lo + (hi - lo) * i as f64 / 4000.0).abs())
            .fold(0.0, f64::max);
        Ok(state)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn interval(&self) -> (f64, f64) {
        let half = 6f64.max((2.0 * self.level as f64 + 1.0).sqrt() + 4.0) / self.inv_length;
        (-half, half)
    }

    /// `H_k(ξ)` and `H_{k−1}(ξ)` (physicists' convention).
    fn hermite(&self, xi: f64) -> (f64, f64) {
        let (mut prev, mut cur) = (0.0, 1.0);
        for n in 0..self.level {
            let next = 2.0 * xi * cur - 2.0 * n as f64 * prev;
            prev = cur;
            cur = next;
        }
        (cur, prev)
    }

    pub fn value(&self, x: f64) -> f64 {
        let xi = self.inv_length * x;
        self.norm * (-0.5 * xi * xi).exp() * self.hermite(xi).0
    }

    /// `(ψ, ψ′, ψ″)` at `x`.
    pub fn derivatives(&self, x: f64) -> (f64, f64, f64) {
        let s = self.inv_length;
        let xi = s * x;
        let gauss = self.norm * (-0.5 * xi * xi).exp();
        let (hk, hkm1) = self.hermite(xi);
        let psi = gauss * hk;
        let d1 = gauss * s * (2.0 * self.level as f64 * hkm1 - xi * hk);
        let d2 = s * s * (xi * xi - (2.0 * self.level as f64 + 1.0)) * psi;
        (psi, d1, d2)
    }

    pub fn level_energy(&self) -> f64 {
        (self.level as f64 + 0.5) * self.hbar * self.omega
    }
}

impl ScalarField for HoEigenstate {
    fn dim(&self) -> usize {
        1
    }
    fn jet(&self, x: &[f64]) -> Jet {
        let (v, d1, d2) = self.derivatives(x[0]);
        Jet {
            value: v,
            gradient: DVector::from_element(1, d1),
            hessian: DMatrix::from_element(1, 1, d2),
        }
    }
}

impl RealStationaryState for HoEigenstate {
    fn energy(&self) -> f64 {
        self.level_energy()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        0.5 * self.mass * self.omega * self.omega * x[0] * x[0]
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn masses(&self) -> Vec<f64> {
        vec![self.mass]
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        vec![self.interval()]
    }
    fn psi_scale(&self) -> f64 {
        self.scale
    }
    fn label(&self) -> String {
        format!("ho:k={},omega={},mass={}", self.level, self.omega, self.mass)
    }
}

/// Sine eigenstate of a unit-mass particle in `[0, L]` with hard walls.
#[derive(Debug, Clone)]
pub struct BoxState {
    level: u32,
    width: f64,
    hbar: f64,
}

impl BoxState {
    pub fn new(level: u32, width: f64, hbar: f64) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("box level must be >= 1".into()));
        }
        check_positive("width", width)?;
        check_positive("hbar", hbar)?;
        Ok(Self { level, width, hbar })
    }

    fn wavenumber(&self) -> f64 {
        self.level as f64 * PI / self.width
    }
}

impl ScalarField for BoxState {
    fn dim(&self) -> usize {
        1
    }
    /// Zero outside the walls.
    fn jet(&self, x: &[f64]) -> Jet {
        if !(x[0] >= 0.0 && x[0] <= self.width) {
            return Jet::constant(1, 0.0);
        }
        let k = self.wavenumber();
        let a = (2.0 / self.width).sqrt();
        let (s, c) = (k * x[0]).sin_cos();
        Jet {
            value: a * s,
            gradient: DVector::from_element(1, a * k * c),
            hessian: DMatrix::from_element(1, 1, -a * k * k * s),
        }
    }
}

impl RealStationaryState for BoxState {
    fn energy(&self) -> f64 {
        let k = self.wavenumber();
        0.5 * self.hbar * self.hbar * k * k
    }
    fn potential(&self, x: &[f64]) -> f64 {
        if x[0] >= 0.0 && x[0] <= self.width {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn masses(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, self.width)]
    }
    fn psi_scale(&self) -> f64 {
        (2.0 / self.width).sqrt()
    }
    fn label(&self) -> String {
        format!("box:k={},width={}", self.level, self.width)
    }
}

/// The constant `ψ = 1` on a zero-dimensional space.
#[derive(Debug, Clone)]
pub struct UnitState {
    hbar: f64,
}

impl UnitState {
    pub fn new(hbar: f64) -> Self {
        Self { hbar }
    }
}

impl ScalarField for UnitState {
    fn dim(&self) -> usize {
        0
    }
    fn jet(&self, _x: &[f64]) -> Jet {
        Jet::constant(0, 1.0)
    }
}

impl RealStationaryState for UnitState {
    fn energy(&self) -> f64 {
        0.0
    }
    fn potential(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn masses(&self) -> Vec<f64> {
        Vec::new()
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
    fn psi_scale(&self) -> f64 {
        1.0
    }
    fn label(&self) -> String {
        "unit".into()
    }
}

/// `ψ(q) = ψ_A(q_A) ψ_B(q_B)` for an additive Hamiltonian.
#[derive(Clone)]
pub struct ProductState {
    a: SharedReal,
    b: SharedReal,
}

impl ProductState {
    pub fn factors(&self) -> (&SharedReal, &SharedReal) {
        (&self.a, &self.b)
    }
}

pub fn product(a: SharedReal, b: SharedReal) -> Result<ProductState> {
    if (a.hbar() - b.hbar()).abs() > 1e-15 * a.hbar().abs() {
        return Err(Error::InvalidParameter(format!(
            "product factors disagree on hbar ({} vs {})",
            a.hbar(),
            b.hbar()
        )));
    }
    Ok(ProductState { a, b })
}

impl ScalarField for ProductState {
    fn dim(&self) -> usize {
        self.a.dim() + self.b.dim()
    }
    fn jet(&self, x: &[f64]) -> Jet {
        let na = self.a.dim();
        let n = self.dim();
        let ja = self.a.jet(&x[..na]);
        let jb = self.b.jet(&x[na..]);
        let mut gradient = DVector::zeros(n);
        gradient.rows_mut(0, na).copy_from(&(&ja.gradient * jb.value));
        gradient.rows_mut(na, n - na).copy_from(&(&jb.gradient * ja.value));
        let mut hessian = DMatrix::zeros(n, n);
        hessian
            .view_mut((0, 0), (na, na))
            .copy_from(&(&ja.hessian * jb.value));
        hessian
            .view_mut((na, na), (n - na, n - na))
            .copy_from(&(&jb.hessian * ja.value));
        let cross = &ja.gradient * jb.gradient.transpose();
        hessian.view_mut((0, na), (na, n - na)).copy_from(&cross);
        hessian
            .view_mut((na, 0), (n - na, na))
            .copy_from(&cross.transpose());
        Jet {
            value: ja.value * jb.value,
            gradient,
            hessian,
        }
    }
}

impl RealStationaryState for ProductState {
    fn energy(&self) -> f64 {
        self.a.energy() + self.b.energy()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        let na = self.a.dim();
        self.a.potential(&x[..na]) + self.b.potential(&x[na..])
    }
    fn hbar(&self) -> f64 {
        self.a.hbar()
    }
    fn masses(&self) -> Vec<f64> {
        let mut m = self.a.masses();
        m.extend(self.b.masses());
        m
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        let mut d = self.a.domain();
        d.extend(self.b.domain());
        d
    }
    fn psi_scale(&self) -> f64 {
        self.a.psi_scale() * self.b.psi_scale()
    }
    fn label(&self) -> String {
        format!("product({},{})", self.a.label(), self.b.label())
    }
}

/// The two-oscillator ground state `A e^{−ω(q₁² + q₄²)/2ħ}` used throughout.
pub fn oscillator_pair_ground(omega: f64, hbar: f64) -> Result<ProductState> {
    let g = Arc::new(HoEigenstate::new(0, omega, 1.0, hbar)?);
    product(g.clone(), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{schroedinger_residual, Cartesian};
    use crate::states::native_chart;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ground_state_values() {
        let g = HoEigenstate::new(0, 1.0, 1.0, 1.0).unwrap();
        let (v, d1, d2) = g.derivatives(0.0);
        let a = PI.powf(-0.25);
        assert_abs_diff_eq!(v, a, epsilon = 1e-15);
        assert_abs_diff_eq!(d1, 0.0);
        assert_abs_diff_eq!(d2, -a, epsilon = 1e-15);
        assert_abs_diff_eq!(g.energy(), 0.5);
        assert_abs_diff_eq!(g.psi_scale(), a, epsilon = 1e-15);
    }

    #[test]
    fn odd_level_vanishes_at_origin() {
        let s = HoEigenstate::new(1, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(s.value(0.0), 0.0);
    }

    #[test]
    fn levels_above_ten_rejected() {
        assert_eq!(
            HoEigenstate::new(11, 1.0, 1.0, 1.0).unwrap_err(),
            Error::UnsupportedLevel(11)
        );
        assert!(HoEigenstate::new(0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let states: Vec<_> = (0..=10)
            .map(|k| HoEigenstate::new(k, 1.3, 0.7, 0.9).unwrap())
            .collect();
        let (lo, hi) = states[10].interval();
        let n = 20000;
        let h = (hi - lo) / n as f64;
        for a in [0usize, 3, 10] {
            for b in [0usize, 3, 10] {
                let s: f64 = (0..n)
                    .map(|i| {
                        let x = lo + (i as f64 + 0.5) * h;
                        states[a].value(x) * states[b].value(x)
                    })
                    .sum::<f64>()
                    * h;
                assert_abs_diff_eq!(s, if a == b { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn eigenstates_satisfy_schroedinger() {
        for k in 0..=10 {
            let s = HoEigenstate::new(k, 1.7, 2.5, 0.8).unwrap();
            let chart = native_chart(&s);
            let (lo, hi) = s.interval();
            for i in 0..=50 {
                let x = lo + (hi - lo) * i as f64 / 50.0;
                let r = schroedinger_residual(&s, &chart, &[x]).unwrap();
                assert!(r.abs() <= 1e-9 * s.psi_scale(), "k={k} x={x} r={r}");
            }
        }
    }

    #[test]
    fn energy_shift_gives_linear_residual() {
        struct Shifted(HoEigenstate, f64);
        impl ScalarField for Shifted {
            fn dim(&self) -> usize {
                1
            }
            fn jet(&self, x: &[f64]) -> Jet {
                self.0.jet(x)
            }
        }
        impl RealStationaryState for Shifted {
            fn energy(&self) -> f64 {
                self.0.energy() + self.1
            }
            fn potential(&self, x: &[f64]) -> f64 {
                self.0.potential(x)
            }
            fn hbar(&self) -> f64 {
                1.0
            }
            fn masses(&self) -> Vec<f64> {
                vec![1.0]
            }
            fn domain(&self) -> Vec<(f64, f64)> {
                self.0.domain()
            }
            fn psi_scale(&self) -> f64 {
                self.0.psi_scale()
            }
            fn label(&self) -> String {
                "shifted".into()
            }
        }
        let s = Shifted(HoEigenstate::new(0, 1.0, 1.0, 1.0).unwrap(), 0.25);
        let x = 0.7;
        let r = schroedinger_residual(&s, &Cartesian::new(1), &[x]).unwrap();
        assert_abs_diff_eq!(r, 0.25 * s.0.value(x), epsilon = 1e-14);
    }

    #[test]
    fn box_state_values() {
        let b = BoxState::new(1, PI, 1.0).unwrap();
        assert_abs_diff_eq!(b.jet(&[PI / 2.0]).value, (2.0 / PI).sqrt(), epsilon = 1e-15);
        let b2 = BoxState::new(2, 3.0, 1.0).unwrap();
        assert!(b2.jet(&[1.5]).value.abs() < 1e-15);
        for k in 1..4 {
            let s = BoxState::new(k, 2.5, 0.6).unwrap();
            for i in 1..20 {
                let x = 2.5 * i as f64 / 20.0;
                let r = schroedinger_residual(&s, &native_chart(&s), &[x]).unwrap();
                assert!(r.abs() <= 1e-9 * s.psi_scale());
            }
        }
        assert!(BoxState::new(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn product_of_ground_states_is_pair_state() {
        let p = oscillator_pair_ground(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.energy(), 1.0);
        let q = [0.3, -0.8];
        let expect = PI.powf(-0.5) * (-(q[0] * q[0] + q[1] * q[1]) / 2.0f64).exp();
        assert_abs_diff_eq!(p.jet(&q).value, expect, epsilon = 1e-15);
        let r = schroedinger_residual(&p, &native_chart(&p), &q).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn product_with_unit_factor_is_identity() {
        let g: SharedReal = Arc::new(HoEigenstate::new(2, 1.0, 1.0, 1.0).unwrap());
        let p = product(g.clone(), Arc::new(UnitState::new(1.0))).unwrap();
        for x in [-1.0, 0.2, 2.2] {
            assert_eq!(p.jet(&[x]), g.jet(&[x]));
        }
        assert_eq!(p.energy(), g.energy());
    }

    #[test]
    fn product_gradient_follows_product_rule() {
        let a = Arc::new(HoEigenstate::new(1, 1.0, 1.0, 1.0).unwrap());
        let b = Arc::new(HoEigenstate::new(2, 0.5, 1.0, 1.0).unwrap());
        let p = product(a.clone(), b.clone()).unwrap();
        let g = p.jet(&[1.0, 2.0]).gradient;
        let (a0, a1, _) = a.derivatives(1.0);
        let (b0, b1, _) = b.derivatives(2.0);
        assert_abs_diff_eq!(g[0], a1 * b0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], a0 * b1, epsilon = 1e-15);
        let h = 1e-6;
        let fd = (p.jet(&[1.0 + h, 2.0]).value - p.jet(&[1.0 - h, 2.0]).value) / (2.0 * h);
        assert_abs_diff_eq!(fd, g[0], epsilon = 1e-9);
    }

    #[test]
    fn mismatched_hbar_rejected() {
        let a = Arc::new(HoEigenstate::new(0, 1.0, 1.0, 1.0).unwrap());
        let b = Arc::new(HoEigenstate::new(0, 1.0, 1.0, 2.0).unwrap());
        assert!(product(a, b).is_err());
    }
}
