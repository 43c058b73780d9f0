//! Fixed-step RK4 integration of a velocity law with classical reflection at
//! turning points.
//!
//! Away from turning points the first-order law `q̇ = Σ s_a ħ√R_a d_a` is
//! integrated directly. A mode approaching `R_a = 0` switches to its signed
//! speed `w_a` as an extra state variable with `ẇ_a = ½ d_a·∇(ħ²R_a)`, which
//! is regular through the turning point. The zero of `w_a` is located by
//! bisection, the sign `s_a` flips there, and the mode returns to the
//! first-order form once it has moved clear of the boundary.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use super::{modes, Law, ModeSet, SignAssignment};
use crate::eigenframe::PrincipalFrame;
use crate::error::{Error, Result};
use crate::geometry::{Chart, FD_STEP};
use crate::states::RealStationaryState;

/// A mode is treated as near its turning point while its speed is below the
/// change this many steps of its own acceleration would produce.
pub const NEAR_TURN_STEPS: f64 = 100.0;
const BISECTION_ITERATIONS: usize = 60;
/// Negative `ħ²R_a`, relative to the largest squared speed seen, that counts
/// as having left the admissible domain.
const OUTSIDE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    LeftAdmissibleDomain,
    DegenerateSpectrum,
    AmbiguousMatch,
    NodeOfPsi,
    NonPositivePsi,
    SingularMetric,
    InvalidState,
}

impl Termination {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::Inadmissible { .. } => Termination::LeftAdmissibleDomain,
            Error::DegenerateSpectrum { .. } => Termination::DegenerateSpectrum,
            Error::AmbiguousMatch { .. } => Termination::AmbiguousMatch,
            Error::NodeOfPsi { .. } => Termination::NodeOfPsi,
            Error::NonPositivePsi { .. } => Termination::NonPositivePsi,
            Error::SingularMetric { .. } => Termination::SingularMetric,
            _ => Termination::InvalidState,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::LeftAdmissibleDomain => "left_admissible_domain",
            Termination::DegenerateSpectrum => "degenerate_spectrum",
            Termination::AmbiguousMatch => "ambiguous_match",
            Termination::NodeOfPsi => "node_of_psi",
            Termination::NonPositivePsi => "non_positive_psi",
            Termination::SingularMetric => "singular_metric",
            Termination::InvalidState => "invalid_state",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub law: Law,
    pub times: Vec<f64>,
    pub points: Vec<DVector<f64>>,
    pub velocities: Vec<DVector<f64>>,
    pub signs: Vec<SignAssignment>,
    /// Times at which some mode reversed.
    pub turning_times: Vec<f64>,
    pub termination: Termination,
    pub detail: Option<String>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    law: &'a str,
    termination: &'a str,
    detail: Option<&'a str>,
    samples: usize,
    t_end: Option<f64>,
    turning_times: &'a [f64],
}

impl Trajectory {
    fn new(law: Law) -> Self {
        Self {
            law,
            times: Vec::new(),
            points: Vec::new(),
            velocities: Vec::new(),
            signs: Vec::new(),
            turning_times: Vec::new(),
            termination: Termination::Completed,
            detail: None,
        }
    }

    fn stop(mut self, termination: Termination, detail: String) -> Self {
        self.termination = termination;
        self.detail = Some(detail);
        self
    }

    fn stop_on(self, e: &Error) -> Self {
        self.stop(Termination::from_error(e), e.to_string())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// CSV with header `t,q1..qn,v1..vn,s1..sn`.
    pub fn write_csv<W: Write>(&self, out: W, n: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for prefix in ["q", "v", "s"] {
            header.extend((1..=n).map(|i| format!("{prefix}{i}")));
        }
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.times[k].to_string()];
            row.extend(self.points[k].iter().map(f64::to_string));
            row.extend(self.velocities[k].iter().map(f64::to_string));
            row.extend(self.signs[k].as_slice().iter().map(i8::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Termination summary written next to the CSV.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::to_value(Sidecar {
            law: self.law.name(),
            termination: self.termination.name(),
            detail: self.detail.as_deref(),
            samples: self.len(),
            t_end: self.times.last().copied(),
            turning_times: &self.turning_times,
        })
        .expect("sidecar is plain data")
    }
}

struct Stepper<'a> {
    law: Law,
    state: &'a dyn RealStationaryState,
    chart: &'a dyn Chart,
}

/// Modes and per-mode accelerations at an accepted point.
struct Point {
    modes: ModeSet,
    acceleration: Vec<f64>,
}

struct Stage {
    qdot: DVector<f64>,
    wdot: Vec<f64>,
    negative: Vec<usize>,
}

struct StepResult {
    q: DVector<f64>,
    w: Vec<Option<f64>>,
    negative: Vec<usize>,
}

impl Stepper<'_> {
    fn modes(&self, q: &DVector<f64>, reference: Option<&PrincipalFrame>) -> Result<ModeSet> {
        modes(self.law, self.state, self.chart, q.as_slice(), reference)
    }

    /// `½ d_a·∇(ħ²R_a)` by central differences along `d_a`.
    fn acceleration(&self, q: &DVector<f64>, m: &ModeSet, a: usize) -> Result<f64> {
        let d = m.directions.column(a).into_owned() * FD_STEP;
        let ahead = self.modes(&(q + &d), m.frame.as_ref())?.speed_squared(a);
        let behind = self.modes(&(q - &d), m.frame.as_ref())?.speed_squared(a);
        Ok((ahead - behind) / (4.0 * FD_STEP))
    }

    fn point(&self, q: &DVector<f64>, reference: Option<&PrincipalFrame>) -> Result<Point> {
        let modes = self.modes(q, reference)?;
        let acceleration = (0..modes.dim())
            .map(|a| self.acceleration(q, &modes, a))
            .collect::<Result<_>>()?;
        Ok(Point { modes, acceleration })
    }

    fn mode_speed(m: &ModeSet, signs: &SignAssignment, w: &[Option<f64>], a: usize) -> f64 {
        w[a].unwrap_or_else(|| signs.get(a) * m.speed_squared(a).max(0.0).sqrt())
    }

    fn velocity(m: &ModeSet, signs: &SignAssignment, w: &[Option<f64>]) -> DVector<f64> {
        let speeds = DVector::from_iterator(m.dim(), (0..m.dim()).map(|a| Self::mode_speed(m, signs, w, a)));
        &m.directions * speeds
    }

    fn stage(
        &self,
        q: &DVector<f64>,
        w: &[Option<f64>],
        signs: &SignAssignment,
        reference: Option<&PrincipalFrame>,
    ) -> Result<Stage> {
        let m = self.modes(q, reference)?;
        let negative = (0..m.dim()).filter(|&a| w[a].is_none() && m.radicands[a] < 0.0).collect();
        let wdot = (0..m.dim())
            .map(|a| match w[a] {
                Some(_) => self.acceleration(q, &m, a),
                None => Ok(0.0),
            })
            .collect::<Result<_>>()?;
        Ok(Stage {
            qdot: Self::velocity(&m, signs, w),
            wdot,
            negative,
        })
    }

    fn rk4(
        &self,
        q: &DVector<f64>,
        w: &[Option<f64>],
        tau: f64,
        signs: &SignAssignment,
        reference: Option<&PrincipalFrame>,
    ) -> Result<StepResult> {
        let shift = |base: &[Option<f64>], k: &[f64], h: f64| -> Vec<Option<f64>> {
            base.iter().zip(k).map(|(b, d)| b.map(|v| v + h * d)).collect()
        };
        let mut negative: Vec<usize> = Vec::new();
        let k1 = self.stage(q, w, signs, reference)?;
        let k2 = self.stage(&(q + &k1.qdot * (tau / 2.0)), &shift(w, &k1.wdot, tau / 2.0), signs, reference)?;
        let k3 = self.stage(&(q + &k2.qdot * (tau / 2.0)), &shift(w, &k2.wdot, tau / 2.0), signs, reference)?;
        let k4 = self.stage(&(q + &k3.qdot * tau), &shift(w, &k3.wdot, tau), signs, reference)?;
        for k in [&k1, &k2, &k3, &k4] {
            negative.extend(&k.negative);
        }
        let q1 = q + (&k1.qdot + &k2.qdot * 2.0 + &k3.qdot * 2.0 + &k4.qdot) * (tau / 6.0);
        let w1: Vec<Option<f64>> = (0..w.len())
            .map(|a| w[a].map(|v| v + tau / 6.0 * (k1.wdot[a] + 2.0 * k2.wdot[a] + 2.0 * k3.wdot[a] + k4.wdot[a])))
            .collect();
        let end = self.modes(&q1, reference)?;
        negative.extend((0..end.dim()).filter(|&a| w1[a].is_none() && end.radicands[a] < 0.0));
        negative.sort_unstable();
        negative.dedup();
        Ok(StepResult { q: q1, w: w1, negative })
    }
}

/// Integrates `law` from `q0` with fixed step `dt` up to `t_max`.
///
/// Failures of the law end the trajectory with a recorded reason; only
/// invalid arguments are returned as errors.
pub fn integrate(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q0: &[f64],
    signs0: &SignAssignment,
    dt: f64,
    t_max: f64,
) -> Result<Trajectory> {
    let n = state.dim();
    if q0.len() != n || chart.dim() != n || signs0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q0.len().max(signs0.len()),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_max ≥ 0, got {dt}, {t_max}")));
    }
    let stepper = Stepper { law, state, chart };
    let mut traj = Trajectory::new(law);
    let mut q = DVector::from_column_slice(q0);
    let mut signs = signs0.clone();

    let mut here = match stepper.point(&q, None) {
        Ok(p) => p,
        Err(e) => return Ok(traj.stop_on(&e)),
    };
    let outside = here.modes.inadmissible_modes();
    if !outside.is_empty() {
        let detail = format!("initial point inadmissible in modes {outside:?}");
        return Ok(traj.stop(Termination::LeftAdmissibleDomain, detail));
    }
    let mut w: Vec<Option<f64>> = (0..n)
        .map(|a| (here.modes.speed_squared(a) == 0.0).then_some(0.0))
        .collect();
    let mut k_ref = (0..n).map(|a| here.modes.speed_squared(a)).fold(f64::MIN_POSITIVE, f64::max);

    let record = |traj: &mut Trajectory, t: f64, q: &DVector<f64>, p: &Point, signs: &SignAssignment, w: &[Option<f64>]| {
        traj.times.push(t);
        traj.points.push(q.clone());
        traj.velocities.push(Stepper::velocity(&p.modes, signs, w));
        traj.signs.push(signs.clone());
    };
    record(&mut traj, 0.0, &q, &here, &signs, &w);

    let mut t = 0.0;
    let mut k: u64 = 0;
    while t < t_max {
        let target = ((k + 1) as f64 * dt).min(t_max);
        let tau = target - t;
        let reference = here.modes.frame.clone();
        let reference = reference.as_ref();

        for a in 0..n {
            if w[a].is_none() {
                let acc = here.acceleration[a];
                let speed = here.modes.speed_squared(a).max(0.0).sqrt();
                if signs.get(a) * acc < 0.0 && speed < NEAR_TURN_STEPS * dt * acc.abs() {
                    w[a] = Some(signs.get(a) * speed);
                }
            }
        }
        let step = loop {
            match stepper.rk4(&q, &w, tau, &signs, reference) {
                Ok(r) if r.negative.is_empty() => break r,
                Ok(r) => {
                    for a in r.negative {
                        w[a] = Some(signs.get(a) * here.modes.speed_squared(a).max(0.0).sqrt());
                    }
                }
                Err(e) => return Ok(traj.stop_on(&e)),
            }
        };

        let crossing: Vec<usize> = (0..n)
            .filter(|&a| match (w[a], step.w[a]) {
                (Some(w0), Some(w1)) => w0 != 0.0 && w0 * w1 <= 0.0,
                _ => false,
            })
            .collect();
        let (next_q, mut next_w, advanced, turned) = if crossing.is_empty() {
            (step.q, step.w, tau, Vec::new())
        } else {
            let mut roots = Vec::with_capacity(crossing.len());
            for &a in &crossing {
                let w0 = w[a].unwrap_or(0.0);
                let (mut lo, mut hi) = (0.0, tau);
                for _ in 0..BISECTION_ITERATIONS {
                    let mid = 0.5 * (lo + hi);
                    match stepper.rk4(&q, &w, mid, &signs, reference) {
                        Ok(r) if r.w[a].unwrap_or(0.0) * w0 > 0.0 => lo = mid,
                        Ok(_) => hi = mid,
                        Err(e) => return Ok(traj.stop_on(&e)),
                    }
                }
                roots.push((a, hi));
            }
            let first = roots.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let turned: Vec<usize> = roots.iter().filter(|r| r.1 <= first + 1e-12).map(|r| r.0).collect();
            match stepper.rk4(&q, &w, first, &signs, reference) {
                Ok(r) => (r.q, r.w, first, turned),
                Err(e) => return Ok(traj.stop_on(&e)),
            }
        };
        for &a in &turned {
            next_w[a] = Some(0.0);
            signs.flip(a);
        }

        let next = match stepper.point(&next_q, reference) {
            Ok(p) => p,
            Err(e) => return Ok(traj.stop_on(&e)),
        };
        for a in 0..n {
            let k_a = next.modes.speed_squared(a);
            if k_a < -OUTSIDE_TOLERANCE * k_ref {
                let detail = format!("mode {a} radicand {} after t = {}", next.modes.radicands[a], t + advanced);
                return Ok(traj.stop(Termination::LeftAdmissibleDomain, detail));
            }
            k_ref = k_ref.max(k_a);
        }
        for a in 0..n {
            if let Some(v) = next_w[a] {
                if v != 0.0 {
                    signs.set(a, v > 0.0);
                }
                let acc = next.acceleration[a];
                if v * acc > 0.0 && v.abs() > NEAR_TURN_STEPS * dt * acc.abs() {
                    next_w[a] = None;
                }
            }
        }

        q = next_q;
        w = next_w;
        here = next;
        if turned.is_empty() || advanced >= tau {
            t = target;
            k += 1;
        } else {
            t += advanced;
        }
        if !turned.is_empty() {
            traj.turning_times.push(t);
        }
        record(&mut traj, t, &q, &here, &signs, &w);
    }
    Ok(traj)
}
