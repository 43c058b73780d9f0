//! Numerical verdicts on the trajectory laws: particle coupling, flow
//! divergence, admissible-domain geometry, chart covariance and the mean-flow
//! baseline. Ensemble statistics live in [`ensemble`].

pub mod ensemble;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{admissible, modes, Law, SignAssignment};
use crate::eigenframe::PrincipalFrame;
use crate::error::{Error, Result};
use crate::geometry::{jet_in_chart, Chart, FD_STEP};
use crate::states::{RealStationaryState, TwoVectorState};

pub use ensemble::{chi_square, rotor_ensemble, law_ensemble, ChiSquare, EnsembleOutcome};

/// Cross-block Jacobian norms below this are uncoupled.
pub const UNCOUPLED_BELOW: f64 = 1e-6;
/// Cross-block Jacobian norms above this are coupled.
pub const COUPLED_ABOVE: f64 = 1e-3;
/// Density below which the mean-flow velocity is undefined.
pub const RHO_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Coupled,
    Uncoupled,
    Indeterminate,
}

impl Verdict {
    pub fn from_norm(norm: f64) -> Self {
        if norm < UNCOUPLED_BELOW {
            Verdict::Uncoupled
        } else if norm > COUPLED_ABOVE {
            Verdict::Coupled
        } else {
            Verdict::Indeterminate
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Coupled => "coupled",
            Verdict::Uncoupled => "uncoupled",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCoupling {
    pub from: usize,
    pub to: usize,
    pub norm: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReport {
    pub law: Law,
    pub blocks: Vec<Vec<usize>>,
    /// Full Jacobian `∂q̇^μ/∂q^ν`, row `μ`.
    pub jacobian: Vec<Vec<f64>>,
    /// `norms[i][j]` is the Frobenius norm of the block `∂q̇_i/∂q_j`.
    pub norms: Vec<Vec<f64>>,
    /// Off-diagonal block pairs only.
    pub pairs: Vec<PairCoupling>,
    pub verdict: Verdict,
}

/// Velocity with the frame aligned to `reference` so mode identities and
/// signs carry over between nearby points.
fn aligned_velocity(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
    reference: Option<&PrincipalFrame>,
) -> Result<DVector<f64>> {
    modes(law, state, chart, q, reference)?.velocity(signs)
}

/// Central-difference Jacobian of the velocity map with step `h`.
pub fn velocity_jacobian(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
    h: f64,
) -> Result<DMatrix<f64>> {
    let base = modes(law, state, chart, q, None)?;
    base.velocity(signs)?;
    let reference = base.frame.as_ref();
    let n = q.len();
    let mut jac = DMatrix::zeros(n, n);
    for nu in 0..n {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[nu] += h;
        minus[nu] -= h;
        let vp = aligned_velocity(law, state, chart, &plus, signs, reference)?;
        let vm = aligned_velocity(law, state, chart, &minus, signs, reference)?;
        jac.set_column(nu, &((vp - vm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Per-block coupling verdicts. `blocks` defaults to one block per coordinate.
pub fn coupling_matrix(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
    blocks: Option<Vec<Vec<usize>>>,
) -> Result<CouplingReport> {
    coupling_matrix_with_step(law, state, chart, q, signs, blocks, FD_STEP)
}

pub fn coupling_matrix_with_step(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
    blocks: Option<Vec<Vec<usize>>>,
    h: f64,
) -> Result<CouplingReport> {
    let n = q.len();
    let blocks = blocks.unwrap_or_else(|| (0..n).map(|i| vec![i]).collect());
    let mut seen = vec![false; n];
    for &i in blocks.iter().flatten() {
        if i >= n || seen[i] {
            return Err(Error::InvalidParameter(format!("block index {i} is out of range or repeated")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter("blocks must cover every coordinate".into()));
    }
    let jac = velocity_jacobian(law, state, chart, q, signs, h)?;
    let jac_ref = &jac;
    let nb = blocks.len();
    let mut norms = vec![vec![0.0; nb]; nb];
    let mut pairs = Vec::new();
    for (i, bi) in blocks.iter().enumerate() {
        for (j, bj) in blocks.iter().enumerate() {
            let sq: f64 = bi.iter().flat_map(|&mu| bj.iter().map(move |&nu| jac_ref[(mu, nu)].powi(2))).sum();
            norms[i][j] = sq.sqrt();
            if i != j {
                pairs.push(PairCoupling {
                    from: i,
                    to: j,
                    norm: norms[i][j],
                    verdict: Verdict::from_norm(norms[i][j]),
                });
            }
        }
    }
    let verdict = if pairs.iter().any(|p| p.verdict == Verdict::Coupled) {
        Verdict::Coupled
    } else if pairs.iter().any(|p| p.verdict == Verdict::Indeterminate) {
        Verdict::Indeterminate
    } else {
        Verdict::Uncoupled
    };
    Ok(CouplingReport {
        law,
        blocks,
        jacobian: (0..n).map(|r| jac.row(r).iter().copied().collect()).collect(),
        norms,
        pairs,
        verdict,
    })
}

/// Density and velocity at a point.
pub type FlowField<'a> = dyn Fn(&[f64]) -> Result<(f64, DVector<f64>)> + 'a;

/// `(1/√g) Σ_μ ∂_μ(√g ρ u^μ)` by central differences.
pub fn flux_divergence(
    chart: &dyn Chart,
    q: &[f64],
    field: &FlowField,
    h: f64,
) -> Result<f64> {
    let vol = |p: &[f64]| chart.metric(p).determinant().sqrt();
    let mut total = 0.0;
    for mu in 0..q.len() {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[mu] += h;
        minus[mu] -= h;
        let (rp, up) = field(&plus)?;
        let (rm, um) = field(&minus)?;
        total += (vol(&plus) * rp * up[mu] - vol(&minus) * rm * um[mu]) / (2.0 * h);
    }
    Ok(total / vol(q))
}

/// Divergence of `|ψ|² q̇` on a fixed sign branch.
pub fn divergence(
    law: Law,
    state: &dyn RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
    signs: &SignAssignment,
) -> Result<f64> {
    let base = modes(law, state, chart, q, None)?;
    base.velocity(signs)?;
    for mu in 0..q.len() {
        for s in [-2.0, 2.0] {
            let mut p = q.to_vec();
            p[mu] += s * FD_STEP;
            if !admissible(law, state, chart, &p).admissible {
                return Err(Error::BoundaryTooClose);
            }
        }
    }
    let reference = base.frame.as_ref();
    let field = |p: &[f64]| -> Result<(f64, DVector<f64>)> {
        let psi = jet_in_chart(state, chart, p)?.value;
        let v = aligned_velocity(law, state, chart, p, signs, reference).map_err(|e| match e {
            Error::Inadmissible { .. } => Error::BoundaryTooClose,
            other => other,
        })?;
        Ok((psi * psi, v))
    };
    flux_divergence(chart, q, &field, FD_STEP)
}

/// Rectangular grid of cells over a box in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cells per axis.
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn cube(lower: f64, upper: f64, points: usize, dim: usize) -> Self {
        Self {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
            points: vec![points; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.lower.len().min(self.upper.len()),
            });
        }
        for d in 0..n {
            if !(self.upper[d] > self.lower[d]) || self.points[d] == 0 {
                return Err(Error::InvalidParameter(format!("grid axis {d} is empty")));
            }
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        self.points.iter().product()
    }

    fn width(&self, d: usize) -> f64 {
        (self.upper[d] - self.lower[d]) / self.points[d] as f64
    }

    fn index(&self, mut k: usize, sizes: &[usize]) -> Vec<usize> {
        sizes
            .iter()
            .map(|&s| {
                let i = k % s;
                k /= s;
                i
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub grid: GridSpec,
    /// Admissible share of the box volume.
    pub admissible_fraction: f64,
    /// `∫_admissible |ψ|² / ∫_box |ψ|²`.
    pub weight_fraction: f64,
    /// Cells straddling the admissibility boundary that were subdivided.
    pub refined_cells: usize,
    /// Admissibility at cell centres, one string per row of the first axis
    /// (`#` admissible, `.` not); omitted above two dimensions.
    pub mask: Option<Vec<String>>,
}

fn subdivisions(dim: usize) -> usize {
    match dim {
        0..=2 => 16,
        3 => 4,
        _ => 2,
    }
}

/// Admissible volume and probability fractions over `grid`. Cells whose
/// corners and centre disagree on admissibility are resolved by a finer
/// midpoint grid.
pub fn domain_coverage(law: Law, state: &dyn RealStationaryState, chart: &dyn Chart, grid: &GridSpec) -> Result<FlowReport> {
    grid.validate()?;
    let n = grid.dim();
    if n != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: n,
        });
    }
    let widths: Vec<f64> = (0..n).map(|d| grid.width(d)).collect();
    let corner_sizes: Vec<usize> = grid.points.iter().map(|p| p + 1).collect();
    let corner_count: usize = corner_sizes.iter().product();
    let corners: Vec<bool> = (0..corner_count)
        .map(|k| {
            let idx = grid.index(k, &corner_sizes);
            let p: Vec<f64> = (0..n).map(|d| grid.lower[d] + idx[d] as f64 * widths[d]).collect();
            admissible(law, state, chart, &p).admissible
        })
        .collect();
    let sample = |p: &[f64]| -> (bool, f64, f64) {
        let ok = admissible(law, state, chart, p).admissible;
        let psi = jet_in_chart(state, chart, p).map(|j| j.value).unwrap_or(0.0);
        let vol = chart.metric(p).determinant().max(0.0).sqrt();
        (ok, psi * psi * vol, vol)
    };
    let sub = subdivisions(n);
    let sub_sizes = vec![sub; n];
    let sub_count = sub.pow(n as u32);
    let cell_vol: f64 = widths.iter().product();

    let (mut adm_vol, mut tot_vol, mut adm_w, mut tot_w) = (0.0, 0.0, 0.0, 0.0);
    let mut refined = 0;
    let mut centres = Vec::with_capacity(grid.cells());
    for k in 0..grid.cells() {
        let idx = grid.index(k, &grid.points);
        let centre: Vec<f64> = (0..n).map(|d| grid.lower[d] + (idx[d] as f64 + 0.5) * widths[d]).collect();
        let (ok, w, vol) = sample(&centre);
        centres.push(ok);
        let uniform = (0..1usize << n).all(|bits| {
            let ci: usize = (0..n)
                .rev()
                .fold(0, |acc, d| acc * corner_sizes[d] + idx[d] + ((bits >> d) & 1));
            corners[ci] == ok
        });
        if uniform {
            tot_vol += vol * cell_vol;
            tot_w += w * cell_vol;
            if ok {
                adm_vol += vol * cell_vol;
                adm_w += w * cell_vol;
            }
            continue;
        }
        refined += 1;
        let sub_vol = cell_vol / sub_count as f64;
        for s in 0..sub_count {
            let si = grid.index(s, &sub_sizes);
            let p: Vec<f64> = (0..n)
                .map(|d| grid.lower[d] + (idx[d] as f64 + (si[d] as f64 + 0.5) / sub as f64) * widths[d])
                .collect();
            let (ok, w, vol) = sample(&p);
            tot_vol += vol * sub_vol;
            tot_w += w * sub_vol;
            if ok {
                adm_vol += vol * sub_vol;
                adm_w += w * sub_vol;
            }
        }
    }
    let mask = (n <= 2).then(|| {
        let rows = if n == 2 { grid.points[1] } else { 1 };
        let cols = grid.points.first().copied().unwrap_or(1);
        (0..rows)
            .rev()
            .map(|r| (0..cols).map(|c| if centres[r * cols + c] { '#' } else { '.' }).collect())
            .collect()
    });
    let frac = |a: f64, b: f64| if b > 0.0 { (a / b).clamp(0.0, 1.0) } else { 0.0 };
    Ok(FlowReport {
        grid: grid.clone(),
        admissible_fraction: frac(adm_vol, tot_vol),
        weight_fraction: frac(adm_w, tot_w),
        refined_cells: refined,
        mask,
    })
}

/// Mean-flow velocity `j_i/ρ`.
pub fn dbb_baseline(state: &dyn TwoVectorState, x: &[f64], t: f64) -> Result<Vec<f64>> {
    let rho = state.density(x, t);
    if !(rho > RHO_THRESHOLD) {
        return Err(Error::NodeOfRho { value: rho });
    }
    Ok(state.current(x, t).into_iter().map(|j| j / rho).collect())
}

/// `‖(∂q_B/∂q_A) q̇_A − q̇_B‖` at the same physical point, with the frame in
/// chart B aligned to the mapped frame of chart A.
pub fn covariance_check(
    law: Law,
    state: &dyn RealStationaryState,
    chart_a: &dyn Chart,
    chart_b: &dyn Chart,
    q_a: &[f64],
    signs: &SignAssignment,
) -> Result<f64> {
    let x = chart_a.to_reference(q_a);
    let q_b = chart_b.from_reference(&x);
    let ja = chart_a.jacobian(q_a);
    let jb = chart_b.jacobian(&q_b);
    let map = jb
        .try_inverse()
        .ok_or(Error::SingularMetric { condition: f64::INFINITY })?
        * ja;
    let ma = modes(law, state, chart_a, q_a, None)?;
    let reference = ma.frame.as_ref().map(|f| PrincipalFrame {
        eigenvalues: f.eigenvalues.clone(),
        eigenvectors: &map * &f.eigenvectors,
        q: q_b.clone(),
        metric: chart_b.metric(&q_b),
    });
    let mb = modes(law, state, chart_b, &q_b, reference.as_ref())?;
    let va = ma.velocity(signs)?;
    let vb = mb.velocity(signs)?;
    Ok((map * va - vb).norm())
}

/// Serialized diagnostic summary with a fixed top-level schema.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub law: String,
    pub state: String,
    pub grid: serde_json::Value,
    pub verdicts: BTreeMap<String, String>,
    pub fractions: BTreeMap<String, f64>,
    pub statistics: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn new(law: impl Into<String>, state: impl Into<String>) -> Self {
        Self {
            law: law.into(),
            state: state.into(),
            grid: serde_json::Value::Null,
            ..Default::default()
        }
    }

    pub fn verdict(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.verdicts.insert(key.into(), value.into());
        self
    }

    pub fn fraction(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.fractions.insert(key.into(), value);
        self
    }

    pub fn statistic(&mut self, key: impl Into<String>, value: impl Serialize) -> &mut Self {
        self.statistics
            .insert(key.into(), serde_json::to_value(value).expect("statistics are plain data"));
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cartesian, NoChristoffel, Polar};
    use crate::states::{oscillator_pair_ground, BoxState, HoEigenstate, HoSuperposition, RotatingEigenstate};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn plus(n: usize) -> SignAssignment {
        SignAssignment::positive(n)
    }

    #[test]
    fn coupling_verdicts_on_the_oscillator_pair() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let c = Cartesian::new(2);
        let q = [0.5, 0.3];
        let e = coupling_matrix(Law::Einstein, &s, &c, &q, &plus(2), None).unwrap();
        assert_eq!(e.verdict, Verdict::Coupled);
        assert!(e.pairs.iter().all(|p| p.norm > 1e-2));
        for law in [Law::Grommer, Law::Flat] {
            let r = coupling_matrix(law, &s, &c, &q, &plus(2), None).unwrap();
            assert_eq!(r.verdict, Verdict::Uncoupled, "{law:?}");
        }
    }

    #[test]
    fn coupling_verdicts_are_stable() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let c = Cartesian::new(2);
        let q = [-0.4, 0.6];
        for law in [Law::Einstein, Law::Grommer, Law::Flat] {
            let base = coupling_matrix(law, &s, &c, &q, &plus(2), None).unwrap().verdict;
            let half = coupling_matrix_with_step(law, &s, &c, &q, &plus(2), None, 5e-6).unwrap().verdict;
            let neg = coupling_matrix(law, &s, &c, &q, &plus(2).negated(), None).unwrap().verdict;
            assert_eq!(base, half);
            assert_eq!(base, neg);
        }
    }

    #[test]
    fn coupling_rejects_bad_blocks() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let c = Cartesian::new(2);
        assert!(coupling_matrix(Law::Flat, &s, &c, &[0.1, 0.1], &plus(2), Some(vec![vec![0]])).is_err());
        assert!(coupling_matrix(Law::Flat, &s, &c, &[0.1, 0.1], &plus(2), Some(vec![vec![0, 1]])).is_ok());
    }

    #[test]
    fn flat_oscillator_divergence_matches_derivative() {
        let s = HoEigenstate::new(0, 1.0, 1.0, 1.0).unwrap();
        let c = Cartesian::new(1);
        for q in [0.5, -0.3, 0.1, 0.8] {
            let d = divergence(Law::Flat, &s, &c, &[q], &plus(1)).unwrap();
            let rho = s.jet(&[q]).value.powi(2);
            let r = (1.0 - q * q).sqrt();
            // d/dq [ρ√(1−q²)] with ρ′ = −2qρ
            let expected = rho * (-q / r - 2.0 * q * r);
            assert_abs_diff_eq!(d, expected, epsilon = 1e-6);
        }
        let at_half = divergence(Law::Flat, &s, &c, &[0.5], &plus(1)).unwrap() / s.jet(&[0.5]).value.powi(2);
        assert_abs_diff_eq!(at_half, -1.443, epsilon = 1e-3);
        assert!(matches!(
            divergence(Law::Flat, &s, &c, &[1.0 - 1e-5], &plus(1)),
            Err(Error::BoundaryTooClose)
        ));
    }

    use crate::geometry::ScalarField;

    #[test]
    fn uniform_flow_has_no_divergence() {
        let field = |_: &[f64]| -> Result<(f64, DVector<f64>)> { Ok((0.7, DVector::from_vec(vec![1.3, -0.4]))) };
        let d = flux_divergence(&Cartesian::new(2), &[0.2, 0.9], &field, FD_STEP).unwrap();
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn grommer_flow_is_not_conserved() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let d = divergence(Law::Grommer, &s, &Cartesian::new(2), &[0.4, -0.2], &plus(2)).unwrap();
        let rho = s.jet(&[0.4, -0.2]).value.powi(2);
        let term = |q: f64| rho * (-q / (1.0 - q * q).sqrt() - 2.0 * q * (1.0 - q * q).sqrt());
        assert_abs_diff_eq!(d, term(0.4) + term(-0.2), epsilon = 1e-6);
        assert!(d.abs() > 0.1 * rho);
    }

    #[test]
    fn coverage_fractions() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let c = Cartesian::new(2);
        let grid = GridSpec::cube(-4.0, 4.0, 100, 2);
        let e = domain_coverage(Law::Einstein, &s, &c, &grid).unwrap();
        assert_abs_diff_eq!(e.weight_fraction, 1.0 - (-1.0f64).exp(), epsilon = 1e-3);
        assert_abs_diff_eq!(e.admissible_fraction, std::f64::consts::PI / 64.0, epsilon = 1e-3);
        let g = domain_coverage(Law::Grommer, &s, &c, &grid).unwrap();
        let erf1 = 0.842_700_792_949_714_9_f64;
        assert_abs_diff_eq!(g.weight_fraction, erf1 * erf1, epsilon = 1e-3);
        assert_abs_diff_eq!(g.admissible_fraction, 4.0 / 64.0, epsilon = 1e-3);
        let mask = e.mask.unwrap();
        assert_eq!(mask.len(), 100);
        assert_eq!(mask[50].chars().nth(50), Some('#'));
        assert_eq!(mask[0].chars().next(), Some('.'));

        let b = BoxState::new(1, 2.0, 1.0).unwrap();
        let r = domain_coverage(Law::Flat, &b, &Cartesian::new(1), &GridSpec::cube(0.0, 2.0, 50, 1)).unwrap();
        assert_eq!(r.weight_fraction, 1.0);
    }

    #[test]
    fn dbb_baseline_values() {
        let r = RotatingEigenstate::new(Arc::new(HoEigenstate::new(2, 1.0, 1.0, 1.0).unwrap()));
        assert!(dbb_baseline(&r, &[0.3], 1.0).unwrap()[0].abs() < 1e-14);
        let s = HoSuperposition::pair(0, 1, 1.0, 1.0, 1.0).unwrap();
        let t = std::f64::consts::FRAC_PI_2;
        let x = [0.0];
        let j = crate::states::TwoVectorState::jet(&s, &x, t);
        let psi = Complex64::new(j.psi[0], j.psi[1]);
        let dpsi = Complex64::new(j.gradient[0][0], j.gradient[1][0]);
        assert_abs_diff_eq!(dbb_baseline(&s, &x, t).unwrap()[0], (dpsi / psi).im, epsilon = 1e-14);
        let v = crate::rotor::angular_average_velocity(&s, &[0.4], 0.9)[0];
        assert_abs_diff_eq!(dbb_baseline(&s, &[0.4], 0.9).unwrap()[0], v, epsilon = 1e-6);
        let far = HoSuperposition::pair(0, 1, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(dbb_baseline(&far, &[40.0], 0.0), Err(Error::NodeOfRho { .. })));
    }

    #[test]
    fn covariance_between_charts() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let cart = Cartesian::new(2);
        let x = [0.5, 0.3];
        let d = covariance_check(Law::Einstein, &s, &cart, &Polar, &x, &plus(2)).unwrap();
        assert!(d < 1e-6, "{d}");
        assert_eq!(covariance_check(Law::Flat, &s, &cart, &cart, &x, &plus(2)).unwrap(), 0.0);
        // a radial state has a vanishing angular Hessian without the
        // connection terms, so the control uses an anisotropic one
        let excited = crate::states::product(
            Arc::new(HoEigenstate::new(1, 1.0, 1.0, 1.0).unwrap()),
            Arc::new(HoEigenstate::new(0, 1.0, 1.0, 1.0).unwrap()),
        )
        .unwrap();
        let d = covariance_check(Law::Einstein, &excited, &cart, &Polar, &x, &plus(2)).unwrap();
        assert!(d < 1e-6, "{d}");
        let broken = NoChristoffel(Polar);
        let d = covariance_check(Law::Einstein, &excited, &cart, &broken, &x, &plus(2)).unwrap();
        assert!(d > 1e-2, "{d}");
    }

    #[test]
    fn report_schema() {
        let mut r = Report::new("einstein", "ho");
        r.verdict("coupling", "coupled").fraction("weight", 0.5).statistic("n", 3);
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["fractions", "grid", "law", "state", "statistics", "verdicts"]);
    }
}
