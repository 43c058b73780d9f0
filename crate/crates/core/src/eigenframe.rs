//! Principal directions of a symmetric tensor relative to a metric.
//!
//! Solves `(T − λg)A = 0` with `AᵀgA = 1`. Coordinate blocks on which both
//! `T` and `g` decouple are solved independently; equal eigenvalues in
//! different blocks are allowed because each block still fixes its own
//! eigenvectors. Within a block the spectrum must be simple.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{back_substitute_transpose, check_metric, cholesky, forward_substitute, jacobi_eigen, symmetrize};

/// Relative gap below which two eigenvalues of one block count as equal.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// Off-diagonal entries below this fraction of the matrix norm decouple blocks.
pub const DECOUPLING_TOLERANCE: f64 = 1e-13;
/// Smallest accepted overlap between matched eigenvectors of consecutive frames.
pub const MIN_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalFrame {
    pub eigenvalues: Vec<f64>,
    /// Column `a` holds the contravariant components of `A_(a)`.
    pub eigenvectors: DMatrix<f64>,
    pub q: Vec<f64>,
    pub metric: DMatrix<f64>,
}

impl PrincipalFrame {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, a: usize) -> DVector<f64> {
        self.eigenvectors.column(a).into_owned()
    }

    /// Largest `|⟨A_a, A_b⟩_g − δ_ab|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.metric * &self.eigenvectors;
        let n = self.dim();
        (gram - DMatrix::identity(n, n)).amax()
    }

    /// Largest `‖(T − λ_a g)A_a‖` over the modes.
    pub fn residual(&self, t: &DMatrix<f64>) -> f64 {
        (0..self.dim())
            .map(|a| {
                let v = self.vector(a);
                (t * &v - self.eigenvalues[a] * (&self.metric * &v)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Groups of coordinates coupled through off-diagonal entries of `t` or `g`.
fn coupled_blocks(t: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = t.nrows();
    let t_cut = DECOUPLING_TOLERANCE * t.norm();
    let g_cut = DECOUPLING_TOLERANCE * g.norm();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let coupled = t[(i, j)].abs().max(t[(j, i)].abs()) > t_cut
                || g[(i, j)].abs().max(g[(j, i)].abs()) > g_cut;
            if coupled {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

fn submatrix(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Index of the first component whose magnitude is (within rounding) the largest.
fn dominant_component(v: &DVector<f64>) -> usize {
    let max = v.amax();
    v.iter().position(|c| c.abs() >= max * (1.0 - 1e-12)).unwrap_or(0)
}

/// Solves the generalized eigenproblem at `q`. Eigenvalues come out ascending;
/// ties across decoupled blocks keep coordinate order.
pub fn principal_directions(t: &DMatrix<f64>, g: &DMatrix<f64>, q: &[f64]) -> Result<PrincipalFrame> {
    let n = g.nrows();
    if t.nrows() != n || t.ncols() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: t.nrows(),
        });
    }
    check_metric(g)?;
    let mut t = t.clone();
    symmetrize(&mut t);

    let mut pairs: Vec<(f64, usize, DVector<f64>)> = Vec::with_capacity(n);
    let mut block_spectra: Vec<Vec<f64>> = Vec::new();
    for block in coupled_blocks(&t, g) {
        let tb = submatrix(&t, &block);
        let gb = submatrix(g, &block);
        let l = cholesky(&gb)?;
        // C = L⁻¹ T L⁻ᵀ
        let y = forward_substitute(&l, &tb);
        let mut c = forward_substitute(&l, &y.transpose());
        symmetrize(&mut c);
        let eig = jacobi_eigen(&c);
        let vectors = back_substitute_transpose(&l, &eig.vectors);
        let mut spectrum = Vec::with_capacity(block.len());
        for k in 0..block.len() {
            let mut full = DVector::zeros(n);
            for (i, &row) in block.iter().enumerate() {
                full[row] = vectors[(i, k)];
            }
            spectrum.push(eig.values[k]);
            pairs.push((eig.values[k], block[0], full));
        }
        block_spectra.push(spectrum);
    }

    let (lo, hi) = pairs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let magnitude = pairs.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    let tolerance = DEGENERACY_TOLERANCE * (hi - lo).max(magnitude);
    for spectrum in &mut block_spectra {
        spectrum.sort_by(f64::total_cmp);
        if let Some(gap) = spectrum.windows(2).map(|w| w[1] - w[0]).reduce(f64::min) {
            if gap <= tolerance {
                return Err(Error::DegenerateSpectrum { gap, tolerance });
            }
        }
    }

    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut eigenvectors = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (a, (value, _, mut v)) in pairs.into_iter().enumerate() {
        if n > 0 && v[dominant_component(&v)] < 0.0 {
            v = -v;
        }
        eigenvectors.set_column(a, &v);
        eigenvalues.push(value);
    }
    Ok(PrincipalFrame {
        eigenvalues,
        eigenvectors,
        q: q.to_vec(),
        metric: g.clone(),
    })
}

/// Reorders and re-signs `current` to follow `previous` branch by branch.
/// The result keeps the predecessor's ordering, which need not be ascending.
pub fn align_frame(previous: &PrincipalFrame, current: &PrincipalFrame) -> Result<PrincipalFrame> {
    let n = current.dim();
    if previous.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: previous.dim(),
            got: n,
        });
    }
    let overlap = previous.eigenvectors.transpose() * &current.metric * &current.eigenvectors;
    let mut row_free = vec![true; n];
    let mut col_free = vec![true; n];
    let mut matched = vec![0usize; n];
    for _ in 0..n {
        let mut best = (0, 0, -1.0);
        for a in (0..n).filter(|&a| row_free[a]) {
            for b in (0..n).filter(|&b| col_free[b]) {
                let o = overlap[(a, b)].abs();
                if o > best.2 {
                    best = (a, b, o);
                }
            }
        }
        let (a, b, o) = best;
        if o < MIN_OVERLAP {
            return Err(Error::AmbiguousMatch { overlap: o });
        }
        row_free[a] = false;
        col_free[b] = false;
        matched[a] = b;
    }
    let mut eigenvectors = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (a, &b) in matched.iter().enumerate() {
        let sign = if overlap[(a, b)] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(a, &(current.vector(b) * sign));
        eigenvalues.push(current.eigenvalues[b]);
    }
    Ok(PrincipalFrame {
        eigenvalues,
        eigenvectors,
        q: current.q.clone(),
        metric: current.metric.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{covariant_hessian, jet_in_chart, Cartesian, Chart, Polar};
    use crate::states::{oscillator_pair_ground, product, BoxState, HoEigenstate, RealStationaryState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn frame_of(state: &dyn RealStationaryState, chart: &dyn Chart, q: &[f64]) -> Result<(PrincipalFrame, f64)> {
        let jet = jet_in_chart(state, chart, q)?;
        let t = covariant_hessian(&jet, chart, q)?;
        Ok((principal_directions(&t, &chart.metric(q), q)?, jet.value))
    }

    fn log_frame(state: &dyn RealStationaryState, chart: &dyn Chart, q: &[f64]) -> PrincipalFrame {
        let jet = jet_in_chart(state, chart, q).unwrap().ln().unwrap();
        let t = covariant_hessian(&jet, chart, q).unwrap();
        principal_directions(&t, &chart.metric(q), q).unwrap()
    }

    #[test]
    fn diagonal_case() {
        let f = principal_directions(
            &DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 2.0])),
            &DMatrix::identity(2, 2),
            &[0.0, 0.0],
        )
        .unwrap();
        assert_eq!(f.eigenvalues, vec![2.0, 5.0]);
        assert_eq!(f.vector(0), DVector::from_vec(vec![0.0, 1.0]));
        assert_eq!(f.vector(1), DVector::from_vec(vec![1.0, 0.0]));
    }

    #[test]
    fn oscillator_pair_frame_at_one_one() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let (f, psi) = frame_of(&s, &Cartesian::new(2), &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(f.eigenvalues[0], -psi, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eigenvalues[1], psi, epsilon = 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        // tangential branch for the lower eigenvalue, radial for the upper
        assert_abs_diff_eq!(f.vector(0), DVector::from_vec(vec![r, -r]), epsilon = 1e-12);
        assert_abs_diff_eq!(f.vector(1), DVector::from_vec(vec![r, r]), epsilon = 1e-12);
    }

    #[test]
    fn oscillator_pair_branches_are_tangential_and_radial() {
        let (omega, hbar) = (1.3, 0.8);
        let s = oscillator_pair_ground(omega, hbar).unwrap();
        let chart = Cartesian::new(2);
        for (q1, q4) in [(0.3, 0.1), (-0.7, 0.4), (1.1, -1.5), (0.01, 2.0), (-0.5, -0.5), (0.2, 0.0)] {
            let (f, psi) = frame_of(&s, &chart, &[q1, q4]).unwrap();
            let radial = DVector::from_vec(vec![q1, q4]).normalize();
            assert_abs_diff_eq!(f.vector(0).dot(&radial), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(f.vector(1).dot(&radial).abs(), 1.0, epsilon = 1e-10);
            let r2 = q1 * q1 + q4 * q4;
            assert_abs_diff_eq!(f.eigenvalues[0], -omega * psi / hbar, epsilon = 1e-10);
            assert_abs_diff_eq!(
                f.eigenvalues[1],
                psi / (hbar * hbar) * (omega * omega * r2 - hbar * omega),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn product_state_log_frame_is_axis_aligned() {
        let a = Arc::new(HoEigenstate::new(1, 1.0, 1.0, 1.0).unwrap());
        let b = Arc::new(BoxState::new(1, 3.0, 1.0).unwrap());
        let s = product(a, b).unwrap();
        let (x, y) = (0.7, 1.1);
        let f = log_frame(&s, &Cartesian::new(2), &[x, y]);
        // log(x e^{−x²/2}) and log sin(πy/3)
        let k1 = -1.0 / (x * x) - 1.0;
        let k2 = -(std::f64::consts::PI / 3.0).powi(2) / (std::f64::consts::PI * y / 3.0).sin().powi(2);
        let mut expected = [(k1, 0), (k2, 1)];
        expected.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, (k, axis)) in expected.iter().enumerate() {
            assert_abs_diff_eq!(f.eigenvalues[a], *k, epsilon = 1e-9);
            assert_abs_diff_eq!(f.vector(a)[*axis], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn equal_eigenvalues_in_separate_blocks_are_accepted() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let f = log_frame(&s, &Cartesian::new(2), &[0.4, -0.9]);
        assert_abs_diff_eq!(f.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eigenvalues[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eigenvectors.abs(), DMatrix::identity(2, 2), epsilon = 1e-15);
        let f = log_frame(&s, &Polar, &[0.8, 1.0]);
        assert_abs_diff_eq!(f.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.eigenvalues[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_coupled_block_is_rejected() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!(matches!(
            principal_directions(&t, &g, &[0.0, 0.0]),
            Err(Error::DegenerateSpectrum { .. })
        ));
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 1e-10, 1e-10, 1.0]);
        assert!(matches!(
            principal_directions(&t, &DMatrix::identity(2, 2), &[0.0, 0.0]),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            principal_directions(&DMatrix::identity(2, 2), &g, &[0.0, 0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }

    #[test]
    fn eigenvalues_agree_across_charts() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        for (r, th) in [(0.8, 0.3), (1.3, 2.0), (0.4, -2.5)] {
            let p = [r, th];
            let x = Polar.to_reference(&p);
            let (fp, _) = frame_of(&s, &Polar, &p).unwrap();
            let (fc, _) = frame_of(&s, &Cartesian::new(2), &x).unwrap();
            let j = Polar.jacobian(&p);
            for a in 0..2 {
                assert_abs_diff_eq!(fp.eigenvalues[a], fc.eigenvalues[a], epsilon = 1e-8);
                let mapped = &j * fp.vector(a);
                assert_abs_diff_eq!(mapped.dot(&fc.vector(a)).abs(), 1.0, epsilon = 1e-8);
            }
        }
    }

    fn rotated(f: &PrincipalFrame, r: &DMatrix<f64>) -> PrincipalFrame {
        PrincipalFrame {
            eigenvectors: r * &f.eigenvectors,
            ..f.clone()
        }
    }

    #[test]
    fn alignment_identity_and_sign_flip() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let (f, _) = frame_of(&s, &Cartesian::new(2), &[1.0, 1.0]).unwrap();
        assert_eq!(align_frame(&f, &f).unwrap(), f);
        let mut flipped = f.clone();
        flipped.eigenvectors.set_column(0, &(-f.vector(0)));
        assert_eq!(align_frame(&f, &flipped).unwrap(), f);
        let mut swapped = f.clone();
        swapped.eigenvectors.swap_columns(0, 1);
        swapped.eigenvalues.swap(0, 1);
        assert_eq!(align_frame(&f, &swapped).unwrap(), f);
    }

    #[test]
    fn alignment_follows_branches_between_nearby_points() {
        let s = oscillator_pair_ground(1.0, 1.0).unwrap();
        let chart = Cartesian::new(2);
        let (f0, _) = frame_of(&s, &chart, &[1.0, 1.0]).unwrap();
        let (f1, psi1) = frame_of(&s, &chart, &[1.01, 1.0]).unwrap();
        let aligned = align_frame(&f0, &f1).unwrap();
        assert_abs_diff_eq!(aligned.eigenvalues[0], -psi1, epsilon = 1e-12);
        let r2 = 1.01f64 * 1.01 + 1.0;
        assert_abs_diff_eq!(aligned.eigenvalues[1], psi1 * (r2 - 1.0), epsilon = 1e-12);
        for a in 0..2 {
            assert!(aligned.vector(a).dot(&f0.vector(a)) > 0.99);
        }
    }

    #[test]
    fn alignment_rejects_large_rotations() {
        let start = PrincipalFrame {
            eigenvalues: vec![1.0, 2.0, 3.0],
            eigenvectors: DMatrix::identity(3, 3),
            q: vec![0.0; 3],
            metric: DMatrix::identity(3, 3),
        };
        // an orthogonal matrix whose greedy matching leaves an overlap near 0.34
        let raw = DMatrix::from_row_slice(
            3,
            3,
            &[-0.65824, 0.67130, -0.34071, -0.34297, -0.67030, -0.65808, -0.67014, -0.31632, 0.67145],
        );
        let r = raw.qr().q();
        match align_frame(&start, &rotated(&start, &r)) {
            Err(Error::AmbiguousMatch { overlap }) => assert!(overlap < 0.5),
            other => panic!("{other:?}"),
        }
    }

    fn symmetric(n: usize, entries: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
        symmetrize(&mut m);
        m
    }

    fn spd(n: usize, entries: &[f64]) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |i, j| entries[i * n + j]);
        m.transpose() * &m + DMatrix::identity(n, n) * 0.5
    }

    proptest! {
        #[test]
        fn frame_invariants_hold(
            n in 1usize..=6,
            t in prop::collection::vec(-5.0f64..5.0, 36),
            g in prop::collection::vec(-1.5f64..1.5, 36),
        ) {
            let t = symmetric(n, &t);
            let g = spd(n, &g);
            let f = principal_directions(&t, &g, &vec![0.0; n]).unwrap();
            prop_assert!(f.orthonormality_error() < 1e-10);
            prop_assert!(f.residual(&t) <= 1e-9 * t.norm());
            prop_assert!(f.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            for a in 0..n {
                let v = f.vector(a);
                prop_assert!(v[dominant_component(&v)] > 0.0);
            }
        }

        #[test]
        fn two_dimensional_spectrum_matches_characteristic_roots(
            t in prop::collection::vec(-5.0f64..5.0, 4),
            g in prop::collection::vec(-1.5f64..1.5, 4),
        ) {
            let t = symmetric(2, &t);
            let g = spd(2, &g);
            // det(T − λg) = aλ² + bλ + c
            let a = g.determinant();
            let b = -(t[(0, 0)] * g[(1, 1)] + t[(1, 1)] * g[(0, 0)] - 2.0 * t[(0, 1)] * g[(0, 1)]);
            let c = t.determinant();
            let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
            let roots = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)];
            let f = principal_directions(&t, &g, &[0.0, 0.0]).unwrap();
            for k in 0..2 {
                prop_assert!((f.eigenvalues[k] - roots[k]).abs() <= 1e-9 * (1.0 + roots[k].abs()));
            }
        }

        #[test]
        fn alignment_undoes_permutation_and_signs(
            n in 2usize..=5,
            t in prop::collection::vec(-5.0f64..5.0, 25),
            g in prop::collection::vec(-1.5f64..1.5, 25),
            flips in prop::collection::vec(any::<bool>(), 5),
            shift in 0usize..5,
        ) {
            let f = principal_directions(&symmetric(n, &t), &spd(n, &g), &vec![0.0; n]).unwrap();
            let mut scrambled = f.clone();
            for a in 0..n {
                let b = (a + shift) % n;
                let sign = if flips[a] { -1.0 } else { 1.0 };
                scrambled.eigenvectors.set_column(b, &(f.vector(a) * sign));
                scrambled.eigenvalues[b] = f.eigenvalues[a];
            }
            let aligned = align_frame(&f, &scrambled).unwrap();
            prop_assert_eq!(aligned, f);
        }
    }
}
