//! Seeded trajectory ensembles and their comparison with a target density.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{integrate, Law, SignAssignment, Termination};
use crate::error::{Error, Result};
use crate::geometry::Chart;
use crate::rotor::{evolve, sample_initial, PathTermination};
use crate::states::{RotatingEigenstate, SharedReal, TwoVectorState};

/// Nodes used to tabulate the target distribution function.
const CDF_NODES: usize = 20_001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleOutcome {
    /// Final positions of members that completed, in sample order.
    pub positions: Vec<Vec<f64>>,
    pub requested: usize,
    /// Members that stopped early, by reason.
    pub terminated: BTreeMap<String, usize>,
}

impl EnsembleOutcome {
    pub fn completed(&self) -> usize {
        self.positions.len()
    }

    pub fn terminated_count(&self) -> usize {
        self.terminated.values().sum()
    }

    pub fn marginal(&self, axis: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[axis]).collect()
    }

    fn collect(requested: usize, results: Vec<std::result::Result<Vec<f64>, &'static str>>) -> Self {
        let mut positions = Vec::with_capacity(results.len());
        let mut terminated = BTreeMap::new();
        for r in results {
            match r {
                Ok(x) => positions.push(x),
                Err(reason) => *terminated.entry(reason.to_string()).or_insert(0) += 1,
            }
        }
        Self {
            positions,
            requested,
            terminated,
        }
    }
}

/// Evolves `count` members of the angular model, drawn from `|ξ|²` at `t = 0`,
/// up to `t_end`.
pub fn rotor_ensemble(state: &dyn TwoVectorState, t_end: f64, dt: f64, count: usize, seed: u64) -> Result<EnsembleOutcome> {
    let samples = sample_initial(state, 0.0, count, seed)?;
    let results = samples
        .par_iter()
        .map(|s| {
            let path = evolve(state, &s.x, &s.angles, dt, t_end).map_err(|_| "invalid_state")?;
            match path.termination {
                PathTermination::Completed => Ok(path.last_x().to_vec()),
                PathTermination::XiNode => Err("xi_node"),
            }
        })
        .collect();
    Ok(EnsembleOutcome::collect(count, results))
}

/// Evolves `count` members of a trajectory law, drawn from `|ψ|²` with
/// independent random signs, up to `t_end`. Members whose start is
/// inadmissible or that stop early are counted, not kept.
pub fn law_ensemble(
    law: Law,
    state: &SharedReal,
    chart: &dyn Chart,
    t_end: f64,
    dt: f64,
    count: usize,
    seed: u64,
) -> Result<EnsembleOutcome> {
    let n = state.dim();
    let rotating = RotatingEigenstate::new(state.clone());
    let samples = sample_initial(&rotating, 0.0, count, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let signs: Vec<SignAssignment> = (0..count)
        .map(|_| {
            let v = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            SignAssignment::new(v).expect("signs are ±1")
        })
        .collect();
    let state: &dyn crate::states::RealStationaryState = state.as_ref();
    let results = samples
        .par_iter()
        .zip(signs.par_iter())
        .map(|(s, sg)| {
            let traj = integrate(law, state, chart, &s.x, sg, dt, t_end).map_err(|_| "invalid_state")?;
            match (traj.termination, traj.points.last()) {
                (Termination::Completed, Some(p)) => Ok(p.iter().copied().collect()),
                (t, _) => Err(t.name()),
            }
        })
        .collect();
    Ok(EnsembleOutcome::collect(count, results))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquare {
    /// Bin edges; the outer edges are the domain bounds.
    pub edges: Vec<f64>,
    pub observed: Vec<usize>,
    pub expected: Vec<f64>,
    pub statistic: f64,
    pub dof: usize,
    /// `(χ² − dof)/√(2 dof)`, or 0 without degrees of freedom.
    pub z: f64,
}

impl ChiSquare {
    pub fn within(&self, sigmas: f64) -> bool {
        self.z.abs() <= sigmas
    }
}

/// Pearson chi-square of `samples` against an unnormalized `density` on
/// `domain`, using `bins` bins of equal target probability.
pub fn chi_square(samples: &[f64], density: &dyn Fn(f64) -> f64, domain: (f64, f64), bins: usize) -> Result<ChiSquare> {
    let (lo, hi) = domain;
    if bins == 0 || !(hi > lo) {
        return Err(Error::InvalidParameter("need at least one bin on a non-empty domain".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples to histogram".into()));
    }
    let h = (hi - lo) / (CDF_NODES - 1) as f64;
    let grid: Vec<f64> = (0..CDF_NODES).map(|i| lo + i as f64 * h).collect();
    let values: Vec<f64> = grid.iter().map(|&x| density(x).max(0.0)).collect();
    let mut cdf = vec![0.0; CDF_NODES];
    for i in 1..CDF_NODES {
        cdf[i] = cdf[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
    }
    let total = cdf[CDF_NODES - 1];
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("target density vanishes on the domain".into()));
    }
    let mut edges = vec![lo];
    for k in 1..bins {
        let target = total * k as f64 / bins as f64;
        let i = cdf.partition_point(|&c| c < target).clamp(1, CDF_NODES - 1);
        let span = cdf[i] - cdf[i - 1];
        let frac = if span > 0.0 { (target - cdf[i - 1]) / span } else { 0.0 };
        edges.push(grid[i - 1] + frac * h);
    }
    edges.push(hi);

    let mut observed = vec![0usize; bins];
    for &x in samples {
        let b = edges[1..bins].partition_point(|&e| e <= x);
        observed[b] += 1;
    }
    let expected = vec![samples.len() as f64 / bins as f64; bins];
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = bins - 1;
    let z = if dof == 0 {
        0.0
    } else {
        (statistic - dof as f64) / (2.0 * dof as f64).sqrt()
    };
    Ok(ChiSquare {
        edges,
        observed,
        expected,
        statistic,
        dof,
        z,
    })
}
