use std::sync::Arc;

use num_complex::Complex64;

use super::real::HoEigenstate;
use super::{SharedReal, SharedTwoVector, TwoVectorState};
use crate::error::{Error, Result};

/// Values and derivatives of `(ψ₁, ψ₂)` at one `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoVectorJet {
    pub psi: [f64; 2],
    /// `∂ψ_a/∂x_i`.
    pub gradient: [Vec<f64>; 2],
    /// `∂²ψ_a/∂x_i²`.
    pub second: [Vec<f64>; 2],
    /// `∂ψ_a/∂t`.
    pub time: [f64; 2],
}

impl TwoVectorJet {
    fn zero(n: usize) -> Self {
        Self {
            psi: [0.0; 2],
            gradient: [vec![0.0; n], vec![0.0; n]],
            second: [vec![0.0; n], vec![0.0; n]],
            time: [0.0; 2],
        }
    }

    fn complex(&self) -> ComplexJet {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let n = self.gradient[0].len();
        ComplexJet {
            psi: c(self.psi[0], self.psi[1]),
            gradient: (0..n).map(|i| c(self.gradient[0][i], self.gradient[1][i])).collect(),
            second: (0..n).map(|i| c(self.second[0][i], self.second[1][i])).collect(),
            time: c(self.time[0], self.time[1]),
        }
    }
}

struct ComplexJet {
    psi: Complex64,
    gradient: Vec<Complex64>,
    second: Vec<Complex64>,
    time: Complex64,
}

impl ComplexJet {
    fn into_real(self) -> TwoVectorJet {
        TwoVectorJet {
            psi: [self.psi.re, self.psi.im],
            gradient: [
                self.gradient.iter().map(|z| z.re).collect(),
                self.gradient.iter().map(|z| z.im).collect(),
            ],
            second: [
                self.second.iter().map(|z| z.re).collect(),
                self.second.iter().map(|z| z.im).collect(),
            ],
            time: [self.time.re, self.time.im],
        }
    }
}

/// Residual of `iħ ∂ψ_a/∂t = −H σ₂ ψ`, i.e. `(ħψ₁_t − Hψ₂, ħψ₂_t + Hψ₁)`.
pub fn matrix_schroedinger_residual(state: &dyn TwoVectorState, x: &[f64], t: f64) -> [f64; 2] {
    let j = state.jet(x, t);
    let hbar = state.hbar();
    let v = state.potential(x);
    let masses = state.masses();
    let h = |a: usize| {
        let kinetic: f64 = masses
            .iter()
            .enumerate()
            .map(|(i, m)| -hbar * hbar / (2.0 * m) * j.second[a][i])
            .sum();
        kinetic + v * j.psi[a]
    };
    [hbar * j.time[0] - h(1), hbar * j.time[1] + h(0)]
}

/// `ψ(x, t) = Σ_k w_k e^{−iE_k t/ħ} φ_k(x)` over distinct oscillator levels.
#[derive(Debug, Clone)]
pub struct HoSuperposition {
    terms: Vec<(HoEigenstate, f64)>,
    hbar: f64,
}

impl HoSuperposition {
    /// Weights are normalized so that `Σ w² = 1`.
    pub fn new(levels: &[(u32, f64)], omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidParameter(
                "a superposition needs at least two levels".into(),
            ));
        }
        for (i, (a, _)) in levels.iter().enumerate() {
            if levels[..i].iter().any(|(b, _)| a == b) {
                return Err(Error::InvalidParameter(format!("level {a} repeated")));
            }
        }
        let norm = levels.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("weights must not all vanish".into()));
        }
        let terms = levels
            .iter()
            .map(|&(k, w)| Ok((HoEigenstate::new(k, omega, mass, hbar)?, w / norm)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms, hbar })
    }

    /// Equal-weight superposition of levels `j` and `k`.
    pub fn pair(j: u32, k: u32, omega: f64, mass: f64, hbar: f64) -> Result<Self> {
        Self::new(&[(j, 1.0), (k, 1.0)], omega, mass, hbar)
    }
}

impl TwoVectorState for HoSuperposition {
    fn dim(&self) -> usize {
        1
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn masses(&self) -> Vec<f64> {
        vec![self.terms[0].0.mass()]
    }
    fn potential(&self, x: &[f64]) -> f64 {
        use super::RealStationaryState;
        self.terms[0].0.potential(x)
    }
    fn jet(&self, x: &[f64], t: f64) -> TwoVectorJet {
        let mut out = TwoVectorJet::zero(1);
        for (phi, w) in &self.terms {
            let e = phi.level_energy();
            let (s, c) = (e * t / self.hbar).sin_cos();
            let (v, d1, d2) = phi.derivatives(x[0]);
            out.psi[0] += w * c * v;
            out.psi[1] -= w * s * v;
            out.gradient[0][0] += w * c * d1;
            out.gradient[1][0] -= w * s * d1;
            out.second[0][0] += w * c * d2;
            out.second[1][0] -= w * s * d2;
            out.time[0] -= w * e / self.hbar * s * v;
            out.time[1] -= w * e / self.hbar * c * v;
        }
        out
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        use super::RealStationaryState;
        let bounds = self
            .terms
            .iter()
            .map(|(p, _)| p.domain()[0])
            .fold((0.0f64, 0.0f64), |acc, d| (acc.0.min(d.0), acc.1.max(d.1)));
        vec![bounds]
    }
    fn label(&self) -> String {
        let levels: Vec<String> = self.terms.iter().map(|(p, _)| p.level().to_string()).collect();
        let weights: Vec<String> = self.terms.iter().map(|(_, w)| w.to_string()).collect();
        let p = &self.terms[0].0;
        format!(
            "hosup:levels={},weights={},omega={},mass={}",
            levels.join("|"),
            weights.join("|"),
            p.omega(),
            p.mass()
        )
    }
}

/// `Ψ = ψ(x) e^{−iEt/ħ}` for a real stationary state.
#[derive(Clone)]
pub struct RotatingEigenstate {
    state: SharedReal,
}

impl RotatingEigenstate {
    pub fn new(state: SharedReal) -> Self {
        Self { state }
    }
}

impl TwoVectorState for RotatingEigenstate {
    fn dim(&self) -> usize {
        self.state.dim()
    }
    fn hbar(&self) -> f64 {
        self.state.hbar()
    }
    fn masses(&self) -> Vec<f64> {
        self.state.masses()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        self.state.potential(x)
    }
    fn jet(&self, x: &[f64], t: f64) -> TwoVectorJet {
        let j = self.state.jet(x);
        let rate = self.state.energy() / self.state.hbar();
        let (s, c) = (rate * t).sin_cos();
        let n = self.dim();
        TwoVectorJet {
            psi: [j.value * c, -j.value * s],
            gradient: [
                j.gradient.iter().map(|g| g * c).collect(),
                j.gradient.iter().map(|g| -g * s).collect(),
            ],
            second: [
                (0..n).map(|i| j.hessian[(i, i)] * c).collect(),
                (0..n).map(|i| -j.hessian[(i, i)] * s).collect(),
            ],
            time: [-rate * j.value * s, -rate * j.value * c],
        }
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        self.state.domain()
    }
    fn label(&self) -> String {
        format!("rotating({})", self.state.label())
    }
}

/// The constant state `(ψ₁, ψ₂) = (1, 0)` on a zero-dimensional space.
#[derive(Debug, Clone)]
pub struct UnitTwoVector {
    hbar: f64,
}

impl UnitTwoVector {
    pub fn new(hbar: f64) -> Self {
        Self { hbar }
    }
}

impl TwoVectorState for UnitTwoVector {
    fn dim(&self) -> usize {
        0
    }
    fn hbar(&self) -> f64 {
        self.hbar
    }
    fn masses(&self) -> Vec<f64> {
        Vec::new()
    }
    fn potential(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn jet(&self, _x: &[f64], _t: f64) -> TwoVectorJet {
        let mut j = TwoVectorJet::zero(0);
        j.psi[0] = 1.0;
        j
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
    fn label(&self) -> String {
        "unit".into()
    }
}

/// Product of two systems: `φ₁ = ψ₁φ₁′ − ψ₂φ₂′`, `φ₂ = ψ₁φ₂′ + ψ₂φ₁′`.
#[derive(Clone)]
pub struct ComposedState {
    a: SharedTwoVector,
    b: SharedTwoVector,
}

impl ComposedState {
    pub fn factors(&self) -> (&SharedTwoVector, &SharedTwoVector) {
        (&self.a, &self.b)
    }
}

pub fn compose(a: SharedTwoVector, b: SharedTwoVector) -> Result<ComposedState> {
    if (a.hbar() - b.hbar()).abs() > 1e-15 * a.hbar().abs() {
        return Err(Error::InvalidParameter("composed factors disagree on hbar".into()));
    }
    Ok(ComposedState { a, b })
}

impl TwoVectorState for ComposedState {
    fn dim(&self) -> usize {
        self.a.dim() + self.b.dim()
    }
    fn hbar(&self) -> f64 {
        self.a.hbar()
    }
    fn masses(&self) -> Vec<f64> {
        let mut m = self.a.masses();
        m.extend(self.b.masses());
        m
    }
    fn potential(&self, x: &[f64]) -> f64 {
        let na = self.a.dim();
        self.a.potential(&x[..na]) + self.b.potential(&x[na..])
    }
    fn jet(&self, x: &[f64], t: f64) -> TwoVectorJet {
        let na = self.a.dim();
        let ja = self.a.jet(&x[..na], t).complex();
        let jb = self.b.jet(&x[na..], t).complex();
        let gradient = ja
            .gradient
            .iter()
            .map(|g| g * jb.psi)
            .chain(jb.gradient.iter().map(|g| g * ja.psi))
            .collect();
        let second = ja
            .second
            .iter()
            .map(|g| g * jb.psi)
            .chain(jb.second.iter().map(|g| g * ja.psi))
            .collect();
        ComplexJet {
            psi: ja.psi * jb.psi,
            gradient,
            second,
            time: ja.time * jb.psi + ja.psi * jb.time,
        }
        .into_real()
    }
    fn domain(&self) -> Vec<(f64, f64)> {
        let mut d = self.a.domain();
        d.extend(self.b.domain());
        d
    }
    fn label(&self) -> String {
        format!("compose({},{})", self.a.label(), self.b.label())
    }
}

/// Rotating ground state of a single oscillator; a frequent test fixture.
pub fn rotating_ground(omega: f64, mass: f64, hbar: f64) -> Result<RotatingEigenstate> {
    Ok(RotatingEigenstate::new(Arc::new(HoEigenstate::new(0, omega, mass, hbar)?)))
}
