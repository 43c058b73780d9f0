//! Two-vector states carried on Euler angles.
//!
//! A two-vector state `(ψ₁, ψ₂)` is represented by the complex field
//! `ξ(x, α) = ψ₁u₁(α) + ψ₂u₂(α)` on configuration space times the group
//! manifold. The flow of `|ξ|²` moves the configuration point with `v_i` and
//! the angles along the Killing field of `M₂` with rate `ω₂`.
//!
//! On the span of `u₁, u₂` the operator `M_k` acts on coefficients as
//! `(ħ/2)σ_k`. The explicit first-order forms used where a derivative of a
//! general angular function is needed are
//!
//! ```text
//! M₁ =  iħ(cos β ∂_α − sin β cot α ∂_β + sin β csc α ∂_γ)
//! M₂ = −iħ(sin β ∂_α + cos β cot α ∂_β − cos β csc α ∂_γ)
//! M₃ =  iħ ∂_β
//! ```

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{AngularQuadrature, GAMMA_PERIOD};
use crate::states::TwoVectorState;

/// `(2√2 π)⁻¹`, the amplitude of both basis functions.
pub const BASIS_NORM: f64 = 0.5 / (std::f64::consts::SQRT_2 * PI);
/// `|ξ|²` below this counts as a node of `ξ`.
pub const XI_THRESHOLD: f64 = 1e-14;
/// Step for central differences in the angles.
pub const ANGLE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngularPoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AngularPoint {
    /// Requires `α ∈ [0, π]`; `β` and `γ` are wrapped into their periods.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&alpha) || !beta.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "angles ({alpha}, {beta}, {gamma}) out of range"
            )));
        }
        Ok(Self::wrapped(alpha, beta, gamma))
    }

    fn wrapped(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta: beta.rem_euclid(TAU),
            gamma: gamma.rem_euclid(GAMMA_PERIOD),
        }
    }

    fn raw(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Direction along which `M₂` differentiates: `(sin β, cos β cot α, −cos β csc α)`.
    pub fn kinematic_row(&self) -> [f64; 3] {
        let (sb, cb) = self.beta.sin_cos();
        let (sa, ca) = self.alpha.sin_cos();
        [sb, cb * ca / sa, -cb / sa]
    }
}

/// `[u₁(α), u₂(α)]`.
pub fn basis(a: &AngularPoint) -> [Complex64; 2] {
    let (s, c) = (a.alpha / 2.0).sin_cos();
    let u1 = Complex64::from_polar(BASIS_NORM * c, -(a.gamma + a.beta) / 2.0);
    let u2 = Complex64::from_polar(BASIS_NORM * s, (a.beta - a.gamma) / 2.0) * Complex64::new(0.0, -1.0);
    [u1, u2]
}

fn combine(c: [Complex64; 2], a: &AngularPoint) -> Complex64 {
    let [u1, u2] = basis(a);
    c[0] * u1 + c[1] * u2
}

pub fn xi(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Complex64 {
    let psi = state.jet(x, t).psi;
    combine([psi[0].into(), psi[1].into()], a)
}

/// `|p₁u₁ + p₂u₂|²` for real `p`, in closed form.
pub fn real_pair_norm_sqr(p: [f64; 2], a: &AngularPoint) -> f64 {
    let (s, c) = (a.alpha / 2.0).sin_cos();
    BASIS_NORM
        * BASIS_NORM
        * (p[0] * p[0] * c * c + p[1] * p[1] * s * s + p[0] * p[1] * a.alpha.sin() * a.beta.sin())
}

/// Coefficient action `(ħ/2)σ_k` of `M_k` on `(c₁, c₂)`.
pub fn m_apply(k: usize, c: [Complex64; 2], hbar: f64) -> [Complex64; 2] {
    let h = 0.5 * hbar;
    let i = Complex64::i();
    match k {
        1 => [c[1] * h, c[0] * h],
        2 => [-i * c[1] * h, i * c[0] * h],
        3 => [c[0] * h, -c[1] * h],
        _ => panic!("M_k is defined for k = 1, 2, 3, got {k}"),
    }
}

/// Explicit differential form of `M_k` applied to `f` at `a` by central differences.
pub fn m_differential(k: usize, f: &dyn Fn(&AngularPoint) -> Complex64, a: &AngularPoint, hbar: f64) -> Complex64 {
    let h = ANGLE_STEP;
    let d = |da: f64, db: f64, dg: f64| {
        let plus = f(&AngularPoint::raw(a.alpha + da * h, a.beta + db * h, a.gamma + dg * h));
        let minus = f(&AngularPoint::raw(a.alpha - da * h, a.beta - db * h, a.gamma - dg * h));
        (plus - minus) / (2.0 * h)
    };
    let (sb, cb) = a.beta.sin_cos();
    let (sa, ca) = a.alpha.sin_cos();
    let i = Complex64::i();
    match k {
        1 => i * hbar * (d(1.0, 0.0, 0.0) * cb - d(0.0, 1.0, 0.0) * (sb * ca / sa) + d(0.0, 0.0, 1.0) * (sb / sa)),
        2 => {
            let [ra, rb, rg] = a.kinematic_row();
            -i * hbar * (d(1.0, 0.0, 0.0) * ra + d(0.0, 1.0, 0.0) * rb + d(0.0, 0.0, 1.0) * rg)
        }
        3 => i * hbar * d(0.0, 1.0, 0.0),
        _ => panic!("M_k is defined for k = 1, 2, 3, got {k}"),
    }
}

/// `iħ∂ξ/∂t + (2/ħ)H M₂ξ`, which vanishes for solutions of the two-vector
/// Schrödinger equation.
pub fn angular_schroedinger_residual(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Complex64 {
    let j = state.jet(x, t);
    let hbar = state.hbar();
    let v = state.potential(x);
    let masses = state.masses();
    let h_psi: Vec<Complex64> = (0..2)
        .map(|c| {
            let kinetic: f64 = masses
                .iter()
                .enumerate()
                .map(|(i, m)| -hbar * hbar / (2.0 * m) * j.second[c][i])
                .sum();
            (kinetic + v * j.psi[c]).into()
        })
        .collect();
    let i = Complex64::i();
    let dt = combine([j.time[0].into(), j.time[1].into()], a) * (i * hbar);
    let m2 = m_apply(2, [h_psi[0], h_psi[1]], hbar);
    dt + combine(m2, a) * (2.0 / hbar)
}

fn checked_density(p: [f64; 2], a: &AngularPoint) -> Result<f64> {
    let rho = real_pair_norm_sqr(p, a);
    if !(rho > XI_THRESHOLD) {
        return Err(Error::XiNode { value: rho });
    }
    Ok(rho)
}

/// `m_i v_i |ξ|²` in the reduced real form; regular at nodes of `ξ`.
fn flux(p: [f64; 2], g: [f64; 2], a: &AngularPoint, hbar: f64) -> f64 {
    let (s, c) = (a.alpha / 2.0).sin_cos();
    let bracket = (p[0] * g[0] - p[1] * g[1]) * a.alpha.sin() * a.beta.sin() + 2.0 * p[1] * g[0] * s * s
        - 2.0 * p[0] * g[1] * c * c;
    -0.5 * hbar * BASIS_NORM * BASIS_NORM * bracket
}

/// Per-coordinate velocities `v_i` from the reduced closed form.
pub fn velocity_field(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Result<Vec<f64>> {
    let j = state.jet(x, t);
    let rho = checked_density(j.psi, a)?;
    let hbar = state.hbar();
    Ok(state
        .masses()
        .iter()
        .enumerate()
        .map(|(i, m)| flux(j.psi, [j.gradient[0][i], j.gradient[1][i]], a, hbar) / (m * rho))
        .collect())
}

/// `i(ξ*M₂∇_iξ + ξM₂∇_iξ*)`, evaluated through the coefficient action and
/// `M f* = −(M f)*`. Equals `m_i v_i |ξ|²`.
pub fn raw_velocity_numerator(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Vec<f64> {
    let j = state.jet(x, t);
    let hbar = state.hbar();
    let z = combine([j.psi[0].into(), j.psi[1].into()], a);
    let i = Complex64::i();
    (0..state.dim())
        .map(|k| {
            let m2 = combine(m_apply(2, [j.gradient[0][k].into(), j.gradient[1][k].into()], hbar), a);
            (i * (z.conj() * m2 - z * m2.conj())).re
        })
        .collect()
}

/// `ω₂ = −(2/ħ)[Σ_i (ħ²/2m_i)|∂_iξ|²/|ξ|² + V]`.
pub fn omega2(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Result<f64> {
    let j = state.jet(x, t);
    let rho = checked_density(j.psi, a)?;
    Ok(omega2_from(state, x, &j, rho, a))
}

fn omega2_from(state: &dyn TwoVectorState, x: &[f64], j: &crate::states::TwoVectorJet, rho: f64, a: &AngularPoint) -> f64 {
    let hbar = state.hbar();
    let kinetic: f64 = state
        .masses()
        .iter()
        .enumerate()
        .map(|(i, m)| hbar * hbar / (2.0 * m) * real_pair_norm_sqr([j.gradient[0][i], j.gradient[1][i]], a) / rho)
        .sum();
    -2.0 / hbar * (kinetic + state.potential(x))
}

/// Terms of the local conservation law for `|ξ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityResidual {
    pub residual: f64,
    /// Sum of the magnitudes of the time, configuration and angular terms.
    pub scale: f64,
}

impl ContinuityResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual.abs() / self.scale
        } else {
            self.residual.abs()
        }
    }
}

/// `∂_t|ξ|² + Σ_i ∂_i(|ξ|²v_i) + (M₂/(−iħ))(|ξ|²ω₂)` with the first two terms
/// in closed form and the angular term by central differences.
pub fn continuity_residual(state: &dyn TwoVectorState, x: &[f64], a: &AngularPoint, t: f64) -> Result<ContinuityResidual> {
    let j = state.jet(x, t);
    checked_density(j.psi, a)?;
    let hbar = state.hbar();
    let (s, c) = (a.alpha / 2.0).sin_cos();
    let cross = a.alpha.sin() * a.beta.sin();
    let n2 = BASIS_NORM * BASIS_NORM;
    let (p, pt) = (j.psi, j.time);
    let time = n2 * (2.0 * p[0] * pt[0] * c * c + 2.0 * p[1] * pt[1] * s * s + (pt[0] * p[1] + p[0] * pt[1]) * cross);

    let mut space = 0.0;
    for (i, m) in state.masses().iter().enumerate() {
        let (g1, g2) = (j.gradient[0][i], j.gradient[1][i]);
        let (h1, h2) = (j.second[0][i], j.second[1][i]);
        let bracket = (g1 * g1 + p[0] * h1 - g2 * g2 - p[1] * h2) * cross
            + 2.0 * (g2 * g1 + p[1] * h1) * s * s
            - 2.0 * (g1 * g2 + p[0] * h2) * c * c;
        space += -0.5 * hbar * n2 * bracket / m;
    }

    let weighted = |b: &AngularPoint| -> Complex64 {
        let rho = real_pair_norm_sqr(p, b);
        (rho * omega2_from(state, x, &j, rho, b)).into()
    };
    let angular = (m_differential(2, &weighted, a, hbar) / Complex64::new(0.0, -hbar)).re;
    Ok(ContinuityResidual {
        residual: time + space + angular,
        scale: time.abs() + space.abs() + angular.abs(),
    })
}

/// `∫|ξ|² dΩ`.
pub fn angular_average_density(state: &dyn TwoVectorState, x: &[f64], t: f64) -> f64 {
    angular_average_density_with(&AngularQuadrature::standard(), state, x, t)
}

pub fn angular_average_density_with(q: &AngularQuadrature, state: &dyn TwoVectorState, x: &[f64], t: f64) -> f64 {
    let p = state.jet(x, t).psi;
    q.integrate_gamma_free(|alpha, beta| real_pair_norm_sqr(p, &AngularPoint::raw(alpha, beta, 0.0)))
}

/// `∫ v_i|ξ|² dΩ` per coordinate.
pub fn angular_current(state: &dyn TwoVectorState, x: &[f64], t: f64) -> Vec<f64> {
    angular_current_with(&AngularQuadrature::standard(), state, x, t)
}

pub fn angular_current_with(q: &AngularQuadrature, state: &dyn TwoVectorState, x: &[f64], t: f64) -> Vec<f64> {
    let j = state.jet(x, t);
    let hbar = state.hbar();
    state
        .masses()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let g = [j.gradient[0][i], j.gradient[1][i]];
            q.integrate_gamma_free(|alpha, beta| flux(j.psi, g, &AngularPoint::raw(alpha, beta, 0.0), hbar)) / m
        })
        .collect()
}

/// `∫ v_i|ξ|² dΩ / ∫|ξ|² dΩ`.
pub fn angular_average_velocity(state: &dyn TwoVectorState, x: &[f64], t: f64) -> Vec<f64> {
    let q = AngularQuadrature::standard();
    let rho = angular_average_density_with(&q, state, x, t);
    angular_current_with(&q, state, x, t).into_iter().map(|j| j / rho).collect()
}

/// Coefficients `(∫ξ*M₃η dΩ′, ∫ξ*M₁η dΩ′)` of the composed state, with
/// `M₁, M₃` applied in their explicit differential form.
pub fn composition_integrals(
    a: &dyn TwoVectorState,
    b: &dyn TwoVectorState,
    x1: &[f64],
    x2: &[f64],
    t: f64,
) -> [Complex64; 2] {
    let q = AngularQuadrature::standard();
    let pa = a.jet(x1, t).psi;
    let pb = b.jet(x2, t).psi;
    let hbar = b.hbar();
    let eta = |p: &AngularPoint| combine([pb[0].into(), pb[1].into()], p);
    [3usize, 1].map(|k| {
        q.integrate(|alpha, beta, gamma| {
            let p = AngularPoint::raw(alpha, beta, gamma);
            combine([pa[0].into(), pa[1].into()], &p).conj() * m_differential(k, &eta, &p, hbar)
        })
    })
}

/// Ratio of the integral composition to the coefficient rule at one point.
/// Fails if the two components disagree on the ratio by more than `tolerance`.
pub fn composition_constant(
    a: &dyn TwoVectorState,
    b: &dyn TwoVectorState,
    x1: &[f64],
    x2: &[f64],
    t: f64,
    tolerance: f64,
) -> Result<f64> {
    let ia = composition_integrals(a, b, x1, x2, t);
    let pa = a.jet(x1, t).psi;
    let pb = b.jet(x2, t).psi;
    let rule = [pa[0] * pb[0] - pa[1] * pb[1], pa[0] * pb[1] + pa[1] * pb[0]];
    let ratios: Vec<f64> = (0..2)
        .filter(|&k| rule[k].abs() > 1e-8)
        .map(|k| ia[k].re / rule[k])
        .collect();
    let imaginary = ia[0].im.abs().max(ia[1].im.abs());
    match ratios.as_slice() {
        [] => Err(Error::InvalidParameter("both composed coefficients vanish".into())),
        [r] => Ok(*r),
        [r1, r2] if (r1 - r2).abs() <= tolerance * r1.abs() && imaginary <= tolerance * r1.abs() => Ok(*r1),
        [r1, r2] => Err(Error::InvalidParameter(format!("component ratios disagree: {r1} vs {r2}"))),
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathTermination {
    Completed,
    XiNode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InternalPath {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub angles: Vec<AngularPoint>,
    pub weight: f64,
    pub termination: PathTermination,
}

impl InternalPath {
    pub fn last_x(&self) -> &[f64] {
        self.x.last().map_or(&[], |v| v.as_slice())
    }

    /// CSV with header `t,x1..xn,alpha,beta,gamma`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let n = self.x.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend(["alpha", "beta", "gamma"].map(String::from));
        w.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.x[k].iter().map(f64::to_string));
            let a = &self.angles[k];
            row.extend([a.alpha, a.beta, a.gamma].map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Unit spinor `(z₁, z₂)` with `u₁ = N z₁` and `u₂ = −iN z₂`. The Euler
/// angles are singular at the poles; the spinor is not, and the angular flow
/// along `M₂` is linear in it: `ż = (iω₂/2)σ₁z`.
#[derive(Debug, Clone, Copy)]
struct Spinor([Complex64; 2]);

impl Spinor {
    fn from_angles(a: &AngularPoint) -> Self {
        let (s, c) = (a.alpha / 2.0).sin_cos();
        Self([
            Complex64::from_polar(c, -(a.gamma + a.beta) / 2.0),
            Complex64::from_polar(s, (a.beta - a.gamma) / 2.0),
        ])
    }

    fn to_angles(self) -> AngularPoint {
        let [z1, z2] = self.0;
        let alpha = 2.0 * z2.norm().atan2(z1.norm());
        let beta = if z1.norm() > 0.0 && z2.norm() > 0.0 {
            (z2.arg() - z1.arg()).rem_euclid(TAU)
        } else {
            0.0
        };
        let phase = if z1.norm() > 0.0 { -2.0 * z1.arg() } else { -2.0 * z2.arg() + 2.0 * beta };
        AngularPoint::raw(alpha, beta, (phase - beta).rem_euclid(GAMMA_PERIOD))
    }

    fn from_slice(y: &[f64]) -> Self {
        Self([Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])])
    }

    fn normalized(self) -> Self {
        let n = (self.0[0].norm_sqr() + self.0[1].norm_sqr()).sqrt();
        Self([self.0[0] / n, self.0[1] / n])
    }

    /// `|p₁u₁ + p₂u₂|²` for real `p`.
    fn pair_norm_sqr(&self, p: [f64; 2]) -> f64 {
        let [z1, z2] = self.0;
        BASIS_NORM * BASIS_NORM * (z1 * p[0] - Complex64::i() * z2 * p[1]).norm_sqr()
    }

    /// `m_i v_i |ξ|²` from the value `p` and gradient component `g`.
    fn flux(&self, p: [f64; 2], g: [f64; 2], hbar: f64) -> f64 {
        let [z1, z2] = self.0;
        let i = Complex64::i();
        let xi = (z1 * p[0] - i * z2 * p[1]) * BASIS_NORM;
        // M₂ on the gradient coefficients, recombined in the basis
        let m2 = (z2 * g[0] - i * z1 * g[1]) * (0.5 * hbar * BASIS_NORM);
        (i * (xi.conj() * m2 - xi * m2.conj())).re
    }
}

fn rates(state: &dyn TwoVectorState, y: &[f64], t: f64) -> Result<Vec<f64>> {
    let n = state.dim();
    let x = &y[..n];
    let z = Spinor::from_slice(&y[n..]);
    let j = state.jet(x, t);
    let rho = z.pair_norm_sqr(j.psi);
    if !(rho > XI_THRESHOLD) {
        return Err(Error::XiNode { value: rho });
    }
    let hbar = state.hbar();
    let masses = state.masses();
    let mut out = Vec::with_capacity(n + 4);
    let mut kinetic = 0.0;
    for (i, m) in masses.iter().enumerate() {
        let g = [j.gradient[0][i], j.gradient[1][i]];
        out.push(z.flux(j.psi, g, hbar) / (m * rho));
        kinetic += hbar * hbar / (2.0 * m) * z.pair_norm_sqr(g) / rho;
    }
    let w = -2.0 / hbar * (kinetic + state.potential(x));
    let [z1, z2] = z.0;
    let dz1 = Complex64::i() * z2 * (0.5 * w);
    let dz2 = Complex64::i() * z1 * (0.5 * w);
    out.extend([dz1.re, dz1.im, dz2.re, dz2.im]);
    Ok(out)
}

/// RK4 from `t = 0` to `t_max`.
pub fn evolve(state: &dyn TwoVectorState, x0: &[f64], a0: &AngularPoint, dt: f64, t_max: f64) -> Result<InternalPath> {
    evolve_between(state, x0, a0, 0.0, t_max, dt)
}

/// RK4 from `t0` to `t1` (either direction) in equal steps no longer than `dt`.
pub fn evolve_between(
    state: &dyn TwoVectorState,
    x0: &[f64],
    a0: &AngularPoint,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<InternalPath> {
    let n = state.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(dt > 0.0 && dt.is_finite() && t0.is_finite() && t1.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a positive finite step, got {dt}")));
    }
    let steps = ((t1 - t0).abs() / dt - 1e-9).ceil().max(0.0) as u64;
    let h = if steps == 0 { 0.0 } else { (t1 - t0) / steps as f64 };
    let mut path = InternalPath {
        times: vec![t0],
        x: vec![x0.to_vec()],
        angles: vec![*a0],
        weight: 1.0,
        termination: PathTermination::Completed,
    };
    let z0 = Spinor::from_angles(a0).0;
    let mut y: Vec<f64> = x0.iter().copied().chain([z0[0].re, z0[0].im, z0[1].re, z0[1].im]).collect();
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        let stages = (|| -> Result<Vec<f64>> {
            let k1 = rates(state, &y, t)?;
            let k2 = rates(state, &add(&y, &k1, h / 2.0), t + h / 2.0)?;
            let k3 = rates(state, &add(&y, &k2, h / 2.0), t + h / 2.0)?;
            let k4 = rates(state, &add(&y, &k3, h), t + h)?;
            Ok((0..y.len())
                .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        })();
        let Ok(next) = stages else {
            path.termination = PathTermination::XiNode;
            return Ok(path);
        };
        y = next;
        let z = Spinor::from_slice(&y[n..]).normalized();
        y[n..].copy_from_slice(&[z.0[0].re, z.0[0].im, z.0[1].re, z.0[1].im]);
        path.times.push(t0 + (step + 1) as f64 * h);
        path.x.push(y[..n].to_vec());
        path.angles.push(z.to_angles());
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub angles: AngularPoint,
    pub weight: f64,
}

/// Draws `count` points from `|ξ(x, α, t0)|²` over the state's box and the
/// full angle ranges. Deterministic for a given `seed`.
pub fn sample_initial(state: &dyn TwoVectorState, t0: f64, count: usize, seed: u64) -> Result<Vec<Sample>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let domain = state.domain();
    let bound = 1.1 * density_bound(state, &domain, t0);
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter("density vanishes on the sampling box".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = domain.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let rho = state.density(&x, t0);
        if rng.random::<f64>() * bound >= rho {
            continue;
        }
        let p = state.jet(&x, t0).psi;
        // |ξ|² ≤ N²ρ, so the conditional angular draw is a second rejection
        let angles = loop {
            let alpha = rng.random_range(-1.0f64..1.0).acos();
            let beta = rng.random_range(0.0..TAU);
            let gamma = rng.random_range(0.0..GAMMA_PERIOD);
            let a = AngularPoint::raw(alpha, beta, gamma);
            if rng.random::<f64>() * BASIS_NORM * BASIS_NORM * rho < real_pair_norm_sqr(p, &a) {
                break a;
            }
        };
        out.push(Sample { x, angles, weight: 1.0 });
    }
    Ok(out)
}

fn density_bound(state: &dyn TwoVectorState, domain: &[(f64, f64)], t: f64) -> f64 {
    let n = domain.len();
    let per_axis = match n {
        0 => 1,
        1 => 4001,
        2 => 161,
        3 => 41,
        _ => 11,
    };
    let total = (per_axis as u64).pow(n as u32);
    let mut best = 0.0f64;
    let mut x = vec![0.0; n];
    for idx in 0..total {
        let mut rest = idx;
        for (d, &(lo, hi)) in domain.iter().enumerate() {
            let k = rest % per_axis as u64;
            rest /= per_axis as u64;
            x[d] = lo + (hi - lo) * k as f64 / (per_axis - 1).max(1) as f64;
        }
        best = best.max(state.density(&x, t));
    }
    best
}
