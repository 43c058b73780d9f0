//! Coordinate charts on configuration space, Christoffel symbols, covariant
//! Hessians and the Laplace–Beltrami operator.
//!
//! Wavefunctions are defined on a reference Cartesian chart. A chart with a
//! transition map pulls their derivatives back into its own coordinates; a
//! chart without one is read as the reference coordinates themselves (for
//! example a constant mass-weighted metric).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{check_metric, spd_inverse, symmetrize};

/// Step for central differences of metrics and scalar fields.
pub const FD_STEP: f64 = 1e-5;

/// Value, gradient and partial Hessian of a scalar field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Jet {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            value,
            gradient: DVector::zeros(n),
            hessian: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    /// Jet of `log f`; requires `f > 0`.
    pub fn ln(&self) -> Result<Jet> {
        if !(self.value > 0.0) {
            return Err(Error::NonPositivePsi { value: self.value });
        }
        let g = &self.gradient / self.value;
        let mut hessian = &self.hessian / self.value - &g * g.transpose();
        symmetrize(&mut hessian);
        Ok(Jet {
            value: self.value.ln(),
            gradient: g,
            hessian,
        })
    }
}

/// A scalar field with closed-form first and second derivatives.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn jet(&self, x: &[f64]) -> Jet;
}

/// A field of symmetric rank-2 covariant tensors.
pub trait SymmetricTensorField {
    fn dim(&self) -> usize;
    fn evaluate(&self, q: &[f64]) -> Result<DMatrix<f64>>;
}

/// A coordinate system on configuration space.
pub trait Chart: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    /// Metric components `g_{μν}(q)`.
    fn metric(&self, q: &[f64]) -> DMatrix<f64>;

    /// Closed-form `∂g_{μν}/∂q^σ`, indexed `[σ][(μ, ν)]`, when available.
    fn metric_derivatives(&self, _q: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        None
    }

    /// Whether this chart carries a transition map to the reference chart.
    fn has_transition(&self) -> bool {
        false
    }

    fn to_reference(&self, q: &[f64]) -> Vec<f64> {
        q.to_vec()
    }

    fn from_reference(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    /// `∂x^k/∂q^a` with `k` the row (reference) and `a` the column (chart).
    fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(q.len(), q.len())
    }

    /// `∂²x^k/∂q^a∂q^b`, indexed `[k][(a, b)]`.
    fn map_hessians(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(q.len(), q.len()); q.len()]
    }
}

/// Identity metric in `n` dimensions.
#[derive(Debug, Clone)]
pub struct Cartesian {
    n: usize,
}

impl Cartesian {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Chart for Cartesian {
    fn dim(&self) -> usize {
        self.n
    }
    fn name(&self) -> &str {
        "cartesian"
    }
    fn metric(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }
    fn metric_derivatives(&self, _q: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        Some(vec![DMatrix::zeros(self.n, self.n); self.n])
    }
}

/// Constant diagonal metric, e.g. `diag(m_1, ..., m_n)` for particles of
/// unequal mass in Cartesian coordinates.
#[derive(Debug, Clone)]
pub struct DiagonalMetric {
    weights: Vec<f64>,
}

impl DiagonalMetric {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "metric weights must be positive, got {weights:?}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Chart for DiagonalMetric {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn name(&self) -> &str {
        "diagonal"
    }
    fn metric(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.weights))
    }
    fn metric_derivatives(&self, _q: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dim();
        Some(vec![DMatrix::zeros(n, n); n])
    }
}

/// Plane polar coordinates `(r, θ)` over a two-dimensional Cartesian plane.
#[derive(Debug, Clone, Default)]
pub struct Polar;

impl Chart for Polar {
    fn dim(&self) -> usize {
        2
    }
    fn name(&self) -> &str {
        "polar"
    }
    fn metric(&self, q: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, q[0] * q[0]])
    }
    fn metric_derivatives(&self, q: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let d_r = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * q[0]]);
        Some(vec![d_r, DMatrix::zeros(2, 2)])
    }
    fn has_transition(&self) -> bool {
        true
    }
    fn to_reference(&self, q: &[f64]) -> Vec<f64> {
        vec![q[0] * q[1].cos(), q[0] * q[1].sin()]
    }
    fn from_reference(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0].hypot(x[1]), x[1].atan2(x[0])]
    }
    fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let (s, c) = q[1].sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -q[0] * s, s, q[0] * c])
    }
    fn map_hessians(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        let r = q[0];
        let (s, c) = q[1].sin_cos();
        vec![
            DMatrix::from_row_slice(2, 2, &[0.0, -s, -s, -r * c]),
            DMatrix::from_row_slice(2, 2, &[0.0, c, c, -r * s]),
        ]
    }
}

/// Wraps a chart and reports a vanishing connection.
///
/// Only meaningful as a negative control: covariant quantities computed
/// through it lose their Christoffel terms.
#[derive(Debug, Clone)]
pub struct NoChristoffel<C>(pub C);

impl<C: Chart> Chart for NoChristoffel<C> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn name(&self) -> &str {
        "no-christoffel"
    }
    fn metric(&self, q: &[f64]) -> DMatrix<f64> {
        self.0.metric(q)
    }
    fn metric_derivatives(&self, q: &[f64]) -> Option<Vec<DMatrix<f64>>> {
        let n = self.dim();
        let _ = q;
        Some(vec![DMatrix::zeros(n, n); n])
    }
    fn has_transition(&self) -> bool {
        self.0.has_transition()
    }
    fn to_reference(&self, q: &[f64]) -> Vec<f64> {
        self.0.to_reference(q)
    }
    fn from_reference(&self, x: &[f64]) -> Vec<f64> {
        self.0.from_reference(x)
    }
    fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        self.0.jacobian(q)
    }
    fn map_hessians(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        self.0.map_hessians(q)
    }
}

/// `∂g/∂q^σ`: closed form when the chart has it, central differences otherwise.
pub fn metric_derivatives(chart: &dyn Chart, q: &[f64]) -> Vec<DMatrix<f64>> {
    if let Some(d) = chart.metric_derivatives(q) {
        return d;
    }
    metric_derivatives_fd(chart, q, FD_STEP)
}

pub fn metric_derivatives_fd(chart: &dyn Chart, q: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    (0..q.len())
        .map(|s| {
            let mut plus = q.to_vec();
            let mut minus = q.to_vec();
            plus[s] += h;
            minus[s] -= h;
            (chart.metric(&plus) - chart.metric(&minus)) / (2.0 * h)
        })
        .collect()
}

/// Christoffel symbols of the second kind, indexed `[σ][(μ, ν)]`.
pub fn christoffel(chart: &dyn Chart, q: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = chart.dim();
    if q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.len(),
        });
    }
    let g = chart.metric(q);
    check_metric(&g)?;
    let g_inv = spd_inverse(&g)?;
    let dg = metric_derivatives(chart, q);
    let mut gamma = vec![DMatrix::zeros(n, n); n];
    for (s, gs) in gamma.iter_mut().enumerate() {
        for mu in 0..n {
            for nu in mu..n {
                let mut acc = 0.0;
                for r in 0..n {
                    acc += g_inv[(s, r)] * (dg[mu][(r, nu)] + dg[nu][(r, mu)] - dg[r][(mu, nu)]);
                }
                gs[(mu, nu)] = 0.5 * acc;
                gs[(nu, mu)] = 0.5 * acc;
            }
        }
    }
    Ok(gamma)
}

/// Pulls a reference-chart jet back to chart coordinates at `q`.
pub fn pull_back(jet: &Jet, chart: &dyn Chart, q: &[f64]) -> Jet {
    if !chart.has_transition() {
        return jet.clone();
    }
    let j = chart.jacobian(q);
    let gradient = j.transpose() * &jet.gradient;
    let mut hessian = j.transpose() * &jet.hessian * &j;
    for (k, hk) in chart.map_hessians(q).iter().enumerate() {
        hessian += hk * jet.gradient[k];
    }
    symmetrize(&mut hessian);
    Jet {
        value: jet.value,
        gradient,
        hessian,
    }
}

/// Evaluates a reference-chart field in chart coordinates.
pub fn jet_in_chart(field: &dyn ScalarField, chart: &dyn Chart, q: &[f64]) -> Result<Jet> {
    if chart.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: chart.dim(),
        });
    }
    let x = chart.to_reference(q);
    Ok(pull_back(&field.jet(&x), chart, q))
}

/// `f_{;μν} = ∂_μ∂_ν f − Γ^σ_{μν} ∂_σ f`, symmetrized.
pub fn covariant_hessian(jet: &Jet, chart: &dyn Chart, q: &[f64]) -> Result<DMatrix<f64>> {
    let gamma = christoffel(chart, q)?;
    let mut h = jet.hessian.clone();
    for (s, gs) in gamma.iter().enumerate() {
        h -= gs * jet.gradient[s];
    }
    symmetrize(&mut h);
    Ok(h)
}

/// Laplace–Beltrami operator `g^{μν} f_{;μν}`.
pub fn laplacian(jet: &Jet, chart: &dyn Chart, q: &[f64]) -> Result<f64> {
    let h = covariant_hessian(jet, chart, q)?;
    let g_inv = spd_inverse(&chart.metric(q))?;
    Ok(g_inv.component_mul(&h).sum())
}

/// `E ψ + (ħ²/2) ∇²ψ − V ψ`; vanishes for an eigenstate in its own metric.
pub fn schroedinger_residual(
    state: &dyn crate::states::RealStationaryState,
    chart: &dyn Chart,
    q: &[f64],
) -> Result<f64> {
    let jet = jet_in_chart(state, chart, q)?;
    let lap = laplacian(&jet, chart, q)?;
    let hbar = state.hbar();
    let v = state.potential(&chart.to_reference(q));
    Ok(state.energy() * jet.value + 0.5 * hbar * hbar * lap - v * jet.value)
}

/// Contracts two vectors with the metric.
pub fn inner(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.transpose() * g * b)[(0, 0)]
}

/// Covariant Hessian of a fixed scalar field as a tensor field on a chart.
pub struct CovariantHessianField<'a> {
    pub field: &'a dyn ScalarField,
    pub chart: &'a dyn Chart,
}

impl SymmetricTensorField for CovariantHessianField<'_> {
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn evaluate(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let jet = jet_in_chart(self.field, self.chart, q)?;
        covariant_hessian(&jet, self.chart, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// `f = a x² + b y²` on the reference plane.
    pub(crate) struct Quadratic(pub f64, pub f64);

    impl ScalarField for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn jet(&self, x: &[f64]) -> Jet {
            Jet {
                value: self.0 * x[0] * x[0] + self.1 * x[1] * x[1],
                gradient: DVector::from_vec(vec![2.0 * self.0 * x[0], 2.0 * self.1 * x[1]]),
                hessian: DMatrix::from_row_slice(2, 2, &[2.0 * self.0, 0.0, 0.0, 2.0 * self.1]),
            }
        }
    }

    #[test]
    fn flat_charts_have_no_connection() {
        for g in christoffel(&Cartesian::new(3), &[0.3, -1.0, 2.0]).unwrap() {
            assert_eq!(g.norm(), 0.0);
        }
        let mass = DiagonalMetric::new(vec![1.0, 7.0]).unwrap();
        for g in christoffel(&mass, &[0.3, -1.0]).unwrap() {
            assert_eq!(g.norm(), 0.0);
        }
    }

    #[test]
    fn polar_christoffel_at_r_two() {
        let gamma = christoffel(&Polar, &[2.0, 0.4]).unwrap();
        assert_abs_diff_eq!(gamma[0][(1, 1)], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma[1][(0, 1)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma[1][(1, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma[0][(0, 0)], 0.0);
        assert_abs_diff_eq!(gamma[0][(0, 1)], 0.0);
        assert_abs_diff_eq!(gamma[1][(0, 0)], 0.0);
        assert_abs_diff_eq!(gamma[1][(1, 1)], 0.0);

        // same symbols from a differenced metric
        struct FdPolar;
        impl Chart for FdPolar {
            fn dim(&self) -> usize {
                2
            }
            fn name(&self) -> &str {
                "fd-polar"
            }
            fn metric(&self, q: &[f64]) -> DMatrix<f64> {
                Polar.metric(q)
            }
        }
        let fd = christoffel(&FdPolar, &[2.0, 0.4]).unwrap();
        for (a, b) in gamma.iter().zip(&fd) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn closed_form_metric_derivatives_match_differences() {
        for q in [[0.5, 0.1], [2.0, -2.5], [7.0, 3.0]] {
            let cf = Polar.metric_derivatives(&q).unwrap();
            let fd = metric_derivatives_fd(&Polar, &q, FD_STEP);
            for (a, b) in cf.iter().zip(&fd) {
                assert!((a - b).norm() <= 1e-6 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn polar_round_trip_and_metric() {
        for x in [[0.5, 0.3], [-1.2, 0.7], [0.1, -3.0]] {
            let q = Polar.from_reference(&x);
            let back = Polar.to_reference(&q);
            assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
            let j = Polar.jacobian(&q);
            assert!((j.transpose() * &j - Polar.metric(&q)).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_polar_origin() {
        assert!(matches!(
            christoffel(&Polar, &[0.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn laplacian_of_r_squared_is_chart_invariant() {
        let f = Quadratic(1.0, 1.0);
        let cart = Cartesian::new(2);
        for i in 0..10 {
            for k in 0..10 {
                let x = [-1.9 + 0.4 * i as f64, -1.7 + 0.4 * k as f64];
                let lc = laplacian(&f.jet(&x), &cart, &x).unwrap();
                assert_abs_diff_eq!(lc, 4.0, epsilon = 1e-14);
                let q = Polar.from_reference(&x);
                let jet = jet_in_chart(&f, &Polar, &q).unwrap();
                let lp = laplacian(&jet, &Polar, &q).unwrap();
                assert_abs_diff_eq!(lp, 4.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn covariant_hessian_transforms_as_tensor() {
        let f = Quadratic(0.7, -1.3);
        let cart = Cartesian::new(2);
        for x in [[0.5, 0.3], [-1.0, 2.0], [0.2, -0.9]] {
            let hc = covariant_hessian(&f.jet(&x), &cart, &x).unwrap();
            assert_eq!(hc, f.jet(&x).hessian);
            let q = Polar.from_reference(&x);
            let hp = covariant_hessian(&jet_in_chart(&f, &Polar, &q).unwrap(), &Polar, &q).unwrap();
            let j = Polar.jacobian(&q);
            assert!((j.transpose() * hc * &j - &hp).norm() < 1e-8);
            assert!((&hp - hp.transpose()).norm() == 0.0);
        }
    }

    #[test]
    fn dropping_the_connection_breaks_covariance() {
        let f = Quadratic(1.0, 1.0);
        let q = Polar.from_reference(&[0.5, 0.3]);
        let jet = jet_in_chart(&f, &Polar, &q).unwrap();
        let bad = laplacian(&jet, &NoChristoffel(Polar), &q).unwrap();
        assert!((bad - 4.0).abs() > 1e-2);
    }
}
