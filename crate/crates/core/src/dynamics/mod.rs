//! Velocity laws built from a real stationary state and their admissible
//! domains.
//!
//! Every law decomposes the velocity into modes: a unit direction `d_a`
//! (metric-normalized) and a radicand `R_a`, with `q̇ = Σ_a s_a ħ √R_a d_a`.
//! A point is admissible when every `R_a ≥ 0`.

mod integrate;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigenframe::{align_frame, principal_directions, PrincipalFrame};
use crate::error::{Error, Result};
use crate::geometry::{covariant_hessian, jet_in_chart, Chart};
use crate::states::{native_chart, RealStationaryState};

pub use integrate::{integrate, Termination, Trajectory, NEAR_TURN_STEPS};

/// Relative threshold on `|ψ|` below which a point counts as a node.
pub const NODE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// Principal directions of the covariant Hessian of `ψ`.
    Einstein,
    /// Principal directions of the covariant Hessian of `log ψ`.
    Grommer,
    /// One mode per coordinate, no eigenproblem.
    Flat,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::Einstein => "einstein",
            Law::Grommer => "grommer",
            Law::Flat => "flat",
        }
    }
}

impl std::str::FromStr for Law {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "einstein" => Ok(Law::Einstein),
            "grommer" => Ok(Law::Grommer),
            "flat" => Ok(Law::Flat),
            other => Err(Error::InvalidParameter(format!("unknown law `{other}`"))),
        }
    }
}

/// Branch of the square root for every mode; entries are exactly ±1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignAssignment(Vec<i8>);

impl SignAssignment {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|s| s.abs() != 1) {
            return Err(Error::InvalidParameter(format!("sign {bad} is not ±1")));
        }
        Ok(Self(signs))
    }

    pub fn positive(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, a: usize) -> f64 {
        f64::from(self.0[a])
    }

    pub fn set(&mut self, a: usize, positive: bool) {
        self.0[a] = if positive { 1 } else { -1 };
    }

    pub fn flip(&mut self, a: usize) {
        self.0[a] = -self.0[a];
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

impl TryFrom<Vec<i8>> for SignAssignment {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SignAssignment> for Vec<i8> {
    fn from(s: SignAssignment) -> Self {
        s.0
    }
}

/// Mode decomposition of a law at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    /// `R_a`; the speed of mode `a` is `ħ√R_a` where `R_a ≥ 0`.
    pub radicands: Vec<f64>,
    /// Column `a` is the unit direction `d_a`.
    pub directions: DMatrix<f64>,
    /// Principal frame, absent for the flat law.
    pub frame: Option<PrincipalFrame>,
    pub psi: f64,
    pub hbar: f64,
}

impl ModeSet {
    pub fn dim(&self) -> usize {
        self.radicands.len()
    }

    /// `ħ²R_a`, the squared speed of mode `a`.
    pub fn speed_squared(&self, a: usize) -> f64 {
        self.hbar * self.hbar * self.radicands[a]
    }

    pub fn inadmissible_modes(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&a| self.radicands[a] < 0.0).collect()
    }

    /// `Σ_a s_a ħ√R_a d_a`, or `Inadmissible` if some radicand is negative.
    pub fn velocity(&self, signs: &SignAssignment) -> Result<DVector<f64>> {
        if signs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: signs.len(),
            });
        }
        let bad = self.inadmissible_modes();
        if !bad.is_empty() {
            return Err(Error::Inadmissible {
                radicands: bad.iter().map(|&a| self.radicands[a]).collect(),
                modes: bad,
            });
        }
        let speeds = DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|a| signs.get(a) * self.hbar * self.radicands[a].sqrt()),
        );
        Ok(&self.directions * speeds)
    }
}

fn node_check(state: &dyn RealStationaryState, psi: f64) -> Result<()> {
    if psi.abs() <= NODE_THRESHOLD * state.psi_scale() {
        return Err(Error::NodeOfPsi { value: psi });
    }
    Ok(())
}

/// Mode decomposition of `law` at `q`. With a `reference` frame the
/// principal frame is aligned to it, which fixes the mode order.
pub fn modes(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    reference: Option<&PrincipalFrame>,
) -> Result<ModeSet> {
    if chart.dim() != state.dim() || q.len() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: q.len(),
        });
    }
    let jet = jet_in_chart(state, chart, q)?;
    let g = chart.metric(q);
    let hbar = state.hbar();
    let n = q.len();
    match law {
        Law::Flat => {
            node_check(state, jet.value)?;
            let mut directions = DMatrix::zeros(n, n);
            let mut radicands = Vec::with_capacity(n);
            for mu in 0..n {
                let off = (0..n).any(|nu| nu != mu && g[(mu, nu)] != 0.0);
                if off || !(g[(mu, mu)] > 0.0) {
                    return Err(Error::InvalidParameter(
                        "the flat law needs a diagonal metric".into(),
                    ));
                }
                directions[(mu, mu)] = 1.0 / g[(mu, mu)].sqrt();
                radicands.push(-jet.hessian[(mu, mu)] / (g[(mu, mu)] * jet.value));
            }
            Ok(ModeSet {
                radicands,
                directions,
                frame: None,
                psi: jet.value,
                hbar,
            })
        }
        Law::Einstein => {
            node_check(state, jet.value)?;
            let t = covariant_hessian(&jet, chart, q)?;
            let frame = aligned(principal_directions(&t, &g, q)?, reference)?;
            let radicands = frame.eigenvalues.iter().map(|l| -l / jet.value).collect();
            Ok(ModeSet {
                radicands,
                directions: frame.eigenvectors.clone(),
                frame: Some(frame),
                psi: jet.value,
                hbar,
            })
        }
        Law::Grommer => {
            let log = jet.ln()?;
            let t = covariant_hessian(&log, chart, q)?;
            let frame = aligned(principal_directions(&t, &g, q)?, reference)?;
            let radicands = (0..n)
                .map(|a| {
                    let along = frame.vector(a).dot(&log.gradient);
                    -(frame.eigenvalues[a] + along * along)
                })
                .collect();
            Ok(ModeSet {
                radicands,
                directions: frame.eigenvectors.clone(),
                frame: Some(frame),
                psi: jet.value,
                hbar,
            })
        }
    }
}

fn aligned(frame: PrincipalFrame, reference: Option<&PrincipalFrame>) -> Result<PrincipalFrame> {
    match reference {
        Some(r) => align_frame(r, &frame),
        None => Ok(frame),
    }
}

/// Velocity of `law` at `q` for the given branch signs.
pub fn velocity(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
) -> Result<DVector<f64>> {
    modes(law, state, chart, q, None)?.velocity(signs)
}

pub fn einstein_velocity(
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
) -> Result<DVector<f64>> {
    velocity(Law::Einstein, state, chart, q, signs)
}

pub fn grommer_velocity(
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
) -> Result<DVector<f64>> {
    velocity(Law::Grommer, state, chart, q, signs)
}

/// Flat law in the state's own coordinates, weighted by its masses.
pub fn flat_velocity(state: &dyn RealStationaryState, q: &[f64], signs: &SignAssignment) -> Result<DVector<f64>> {
    velocity(Law::Flat, state, &native_chart(state), q, signs)
}

/// Per-mode admissibility at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub modes: Vec<bool>,
    pub radicands: Vec<f64>,
    /// Set when the law could not be evaluated at all.
    pub error: Option<String>,
}

/// Never fails; evaluation errors make the point inadmissible.
pub fn admissible(law: Law, state: &dyn RealStationaryState, chart: &dyn Chart, q: &[f64]) -> AdmissibilityReport {
    match modes(law, state, chart, q, None) {
        Ok(m) => {
            let ok: Vec<bool> = m.radicands.iter().map(|r| *r >= 0.0).collect();
            AdmissibilityReport {
                admissible: ok.iter().all(|b| *b),
                modes: ok,
                radicands: m.radicands,
                error: None,
            }
        }
        Err(e) => AdmissibilityReport {
            admissible: false,
            modes: Vec::new(),
            radicands: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}
