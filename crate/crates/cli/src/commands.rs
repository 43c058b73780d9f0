//! Subcommand bodies. Each writes its files into the output directory and
//! returns whether the run ended normally.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qtraj_core::diagnostics::{
    chi_square, coupling_matrix, covariance_check, dbb_baseline, divergence, domain_coverage, rotor_ensemble,
    law_ensemble, ChiSquare, EnsembleOutcome, Report, Verdict,
};
use qtraj_core::dynamics::{integrate, Termination};
use qtraj_core::rotor::{angular_average_velocity, continuity_residual, evolve, AngularPoint, PathTermination};
use serde::Serialize;
use serde_json::json;

use crate::scenario::{build_chart, DiagnosticName, Model, Resolved};

/// Ensemble z-score within which the target density is accepted.
pub const CONSISTENT_SIGMAS: f64 = 3.0;
/// Relative divergence below which a flow counts as conserved.
pub const CONSERVED_BELOW: f64 = 1e-6;
pub const COVARIANT_BELOW: f64 = 1e-6;
pub const CONTINUITY_BELOW: f64 = 1e-5;
pub const MEAN_FLOW_BELOW: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// The run stopped early or a diagnostic failed; the reason is in the outputs.
    Terminated(String),
}

pub struct RunContext {
    pub out: PathBuf,
    pub quiet: bool,
}

impl RunContext {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn prepare(&self, r: &Resolved) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        write_json(&self.path("scenario.json"), &r.scenario)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    ))
}

pub fn run(r: &Resolved, ctx: &RunContext) -> Result<Outcome> {
    ctx.prepare(r)?;
    let s = &r.scenario;
    match &r.model {
        Model::Real { state, chart } => {
            let law = s.law.trajectory_law().expect("real states run trajectory laws");
            let traj = integrate(law, state.as_ref(), chart.as_ref(), &s.initial.q0, &r.signs(), s.integrator.dt, s.integrator.t_max)?;
            traj.write_csv(create(&ctx.path("trajectory.csv"))?, r.dim())?;
            write_json(&ctx.path("trajectory.json"), &traj.sidecar())?;
            ctx.say(format!(
                "{}: {} samples, {}",
                law.name(),
                traj.len(),
                traj.termination.name()
            ));
            Ok(match traj.termination {
                Termination::Completed => Outcome::Completed,
                t => Outcome::Terminated(traj.detail.clone().unwrap_or_else(|| t.name().to_string())),
            })
        }
        Model::TwoVector { state } => {
            let a0 = r.angles().expect("validated");
            let path = evolve(state.as_ref(), &s.initial.q0, &a0, s.integrator.dt, s.integrator.t_max)?;
            path.write_csv(create(&ctx.path("path.csv"))?)?;
            let termination = serde_json::to_value(path.termination)?;
            write_json(
                &ctx.path("path.json"),
                &json!({
                    "law": "rotor",
                    "termination": termination,
                    "samples": path.times.len(),
                    "t_end": path.times.last(),
                }),
            )?;
            ctx.say(format!("rotor: {} samples, {}", path.times.len(), termination.as_str().unwrap_or("")));
            Ok(match path.termination {
                PathTermination::Completed => Outcome::Completed,
                _ => Outcome::Terminated(termination.as_str().unwrap_or("terminated").to_string()),
            })
        }
    }
}

struct EnsembleRun {
    outcome: EnsembleOutcome,
    chi: ChiSquare,
}

fn ensemble_core(r: &Resolved) -> Result<EnsembleRun> {
    let s = &r.scenario;
    let (dt, t_end, count, seed) = (s.integrator.dt, s.integrator.t_max, s.probe.samples, s.seed);
    let (outcome, chi) = match &r.model {
        Model::Real { state, chart } => {
            let law = s.law.trajectory_law().expect("real states run trajectory laws");
            let outcome = law_ensemble(law, state, chart.as_ref(), t_end, dt, count, seed)?;
            let domain = state.domain()[0];
            let density = |x: f64| {
                let v = state.jet(&[x]).value;
                v * v
            };
            let chi = chi_square(&outcome.marginal(0), &density, domain, s.probe.bins)?;
            (outcome, chi)
        }
        Model::TwoVector { state } => {
            let outcome = rotor_ensemble(state.as_ref(), t_end, dt, count, seed)?;
            let domain = state.domain()[0];
            let density = |x: f64| state.density(&[x], t_end);
            let chi = chi_square(&outcome.marginal(0), &density, domain, s.probe.bins)?;
            (outcome, chi)
        }
    };
    Ok(EnsembleRun { outcome, chi })
}

fn ensemble_summary(e: &EnsembleRun) -> serde_json::Value {
    json!({
        "requested": e.outcome.requested,
        "completed": e.outcome.completed(),
        "terminated": e.outcome.terminated,
        "chi_square": e.chi,
        "consistent": e.chi.within(CONSISTENT_SIGMAS),
    })
}

pub fn ensemble(r: &Resolved, ctx: &RunContext) -> Result<Outcome> {
    ctx.prepare(r)?;
    let e = ensemble_core(r)?;
    let mut w = csv::Writer::from_writer(create(&ctx.path("ensemble.csv"))?);
    w.write_record((1..=r.dim()).map(|i| format!("x{i}")))?;
    for p in &e.outcome.positions {
        w.write_record(p.iter().map(f64::to_string))?;
    }
    w.flush()?;
    write_json(&ctx.path("ensemble.json"), &ensemble_summary(&e))?;
    ctx.say(format!(
        "{}: {} of {} members completed, chi-square z = {:.3}",
        r.scenario.law.name(),
        e.outcome.completed(),
        e.outcome.requested,
        e.chi.z
    ));
    Ok(Outcome::Completed)
}

fn worst(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    verdicts.into_iter().fold(Verdict::Uncoupled, |acc, v| match (acc, v) {
        (Verdict::Coupled, _) | (_, Verdict::Coupled) => Verdict::Coupled,
        (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
        _ => Verdict::Uncoupled,
    })
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// One diagnostic: fills `report` or returns the failure message.
fn diagnose_one(r: &Resolved, which: DiagnosticName, report: &mut Report) -> std::result::Result<(), String> {
    let s = &r.scenario;
    let signs = r.signs();
    let points = r.points();
    let err = |e: qtraj_core::Error| e.to_string();
    match (&r.model, which) {
        (Model::Real { state, chart }, DiagnosticName::Coupling) => {
            let law = s.law.trajectory_law().expect("real law");
            let reports = points
                .iter()
                .map(|p| coupling_matrix(law, state.as_ref(), chart.as_ref(), p, &signs, None))
                .collect::<qtraj_core::Result<Vec<_>>>()
                .map_err(err)?;
            report.verdict("coupling", worst(reports.iter().map(|c| c.verdict)).name());
            report.statistic("coupling", &reports);
        }
        (Model::Real { state, chart }, DiagnosticName::Divergence) => {
            let law = s.law.trajectory_law().expect("real law");
            let mut rows = Vec::new();
            let mut conserved = true;
            for p in &points {
                let d = divergence(law, state.as_ref(), chart.as_ref(), p, &signs).map_err(err)?;
                let psi = qtraj_core::geometry::jet_in_chart(state.as_ref(), chart.as_ref(), p).map_err(err)?.value;
                conserved &= d.abs() <= CONSERVED_BELOW * psi * psi;
                rows.push(json!({"point": p, "divergence": d, "density": psi * psi}));
            }
            report.verdict("divergence", if conserved { "conserved" } else { "not_conserved" });
            report.statistic("divergence", rows);
        }
        (Model::Real { state, chart }, DiagnosticName::Coverage) => {
            let law = s.law.trajectory_law().expect("real law");
            let grid = r.grid().expect("real states have a box");
            let flow = domain_coverage(law, state.as_ref(), chart.as_ref(), &grid).map_err(err)?;
            report.grid = serde_json::to_value(&flow.grid).expect("plain data");
            report.fraction("admissible", flow.admissible_fraction);
            report.fraction("probability_weight", flow.weight_fraction);
            report.statistic("coverage", json!({"refined_cells": flow.refined_cells, "mask": flow.mask}));
        }
        (Model::Real { state, chart }, DiagnosticName::Covariance) => {
            let law = s.law.trajectory_law().expect("real law");
            let other = build_chart(s.probe.compare_chart, state)?;
            let gaps = points
                .iter()
                .map(|p| covariance_check(law, state.as_ref(), chart.as_ref(), other.as_ref(), p, &signs))
                .collect::<qtraj_core::Result<Vec<_>>>()
                .map_err(err)?;
            let ok = max_abs(&gaps) < COVARIANT_BELOW;
            report.verdict("covariance", if ok { "covariant" } else { "not_covariant" });
            report.statistic("covariance", json!({"charts": [chart.name(), other.name()], "discrepancy": gaps}));
        }
        (Model::TwoVector { state }, DiagnosticName::Dbb) => {
            let mut rows = Vec::new();
            let mut gap: f64 = 0.0;
            for p in &points {
                let v = dbb_baseline(state.as_ref(), p, s.probe.time).map_err(err)?;
                let mean = angular_average_velocity(state.as_ref(), p, s.probe.time);
                gap = gap.max(v.iter().zip(&mean).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())));
                rows.push(json!({"point": p, "velocity": v, "angular_average": mean}));
            }
            let ok = gap < MEAN_FLOW_BELOW;
            report.verdict("dbb", if ok { "mean_flow_matches" } else { "mean_flow_differs" });
            report.statistic("dbb", json!({"time": s.probe.time, "points": rows, "max_gap": gap}));
        }
        (Model::TwoVector { state }, DiagnosticName::Continuity) => {
            let mut values = Vec::new();
            for (p, a) in points.iter().zip(&s.probe.angles) {
                let a = AngularPoint::new(a[0], a[1], a[2]).map_err(err)?;
                values.push(continuity_residual(state.as_ref(), p, &a, s.probe.time).map_err(err)?.relative());
            }
            let ok = max_abs(&values) < CONTINUITY_BELOW;
            report.verdict("continuity", if ok { "satisfied" } else { "violated" });
            report.statistic("continuity", json!({"time": s.probe.time, "relative_residual": values}));
        }
        (_, DiagnosticName::Ensemble) => {
            let e = ensemble_core(r).map_err(|e| e.to_string())?;
            let consistent = e.chi.within(CONSISTENT_SIGMAS);
            report.verdict("ensemble", if consistent { "consistent" } else { "inconsistent" });
            report.fraction("ensemble_completed", e.outcome.completed() as f64 / e.outcome.requested as f64);
            report.statistic("ensemble", ensemble_summary(&e));
        }
        (_, d) => return Err(format!("{d:?} does not apply to this law").to_lowercase()),
    }
    Ok(())
}

pub fn diagnose(r: &Resolved, ctx: &RunContext) -> Result<Outcome> {
    ctx.prepare(r)?;
    let label = match &r.model {
        Model::Real { state, .. } => state.label(),
        Model::TwoVector { state } => state.label(),
    };
    let mut report = Report::new(r.scenario.law.name(), label);
    let mut failures = Vec::new();
    let mut seen = Vec::new();
    for &which in &r.scenario.diagnostics {
        if seen.contains(&which) {
            continue;
        }
        seen.push(which);
        let key = serde_json::to_value(which)?.as_str().unwrap_or_default().to_string();
        if let Err(msg) = diagnose_one(r, which, &mut report) {
            report.verdict(key.clone(), "error");
            report.statistic(key.clone(), json!({"error": msg}));
            failures.push(format!("{key}: {msg}"));
        }
    }
    write_json(&ctx.path("report.json"), &report)?;
    for (k, v) in &report.verdicts {
        ctx.say(format!("{k}: {v}"));
    }
    for (k, v) in &report.fractions {
        ctx.say(format!("{k}: {v:.6}"));
    }
    Ok(if failures.is_empty() {
        Outcome::Completed
    } else {
        Outcome::Terminated(failures.join("; "))
    })
}

/// Resolved scenario with every default filled in.
pub fn validate(r: &Resolved, quiet: bool) -> Result<Outcome> {
    if !quiet {
        println!("{}", serde_json::to_string_pretty(&r.scenario)?);
    }
    Ok(Outcome::Completed)
}
