use super::{RealStationaryState, TwoVectorState};
use crate::geometry::ScalarField;

const STEP: f64 = 1e-5;

fn relative(errors: &[f64], reference: &[f64]) -> f64 {
    let worst = errors.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let scale = reference.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    if worst == 0.0 {
        0.0
    } else {
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Worst relative deviation between the closed-form gradient and Hessian of a
/// field and central differences of its value and gradient.
pub fn fd_check(field: &dyn ScalarField, q: &[f64]) -> f64 {
    let n = field.dim();
    let jet = field.jet(q);
    let mut grad_err = Vec::with_capacity(n);
    let mut hess_err = Vec::with_capacity(n * n);
    for mu in 0..n {
        let mut plus = q.to_vec();
        let mut minus = q.to_vec();
        plus[mu] += STEP;
        minus[mu] -= STEP;
        let (jp, jm) = (field.jet(&plus), field.jet(&minus));
        grad_err.push((jp.value - jm.value) / (2.0 * STEP) - jet.gradient[mu]);
        for nu in 0..n {
            hess_err.push((jp.gradient[nu] - jm.gradient[nu]) / (2.0 * STEP) - jet.hessian[(nu, mu)]);
        }
    }
    let grad: Vec<f64> = jet.gradient.iter().copied().collect();
    let hess: Vec<f64> = jet.hessian.iter().copied().collect();
    relative(&grad_err, &grad).max(relative(&hess_err, &hess))
}

/// Same check for a two-vector state, including the time derivatives.
pub fn fd_check_two_vector(state: &dyn TwoVectorState, x: &[f64], t: f64) -> f64 {
    let n = state.dim();
    let jet = state.jet(x, t);
    let mut worst = 0.0f64;
    for a in 0..2 {
        let mut grad_err = Vec::new();
        let mut second_err = Vec::new();
        for i in 0..n {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += STEP;
            minus[i] -= STEP;
            let (jp, jm) = (state.jet(&plus, t), state.jet(&minus, t));
            grad_err.push((jp.psi[a] - jm.psi[a]) / (2.0 * STEP) - jet.gradient[a][i]);
            second_err.push((jp.gradient[a][i] - jm.gradient[a][i]) / (2.0 * STEP) - jet.second[a][i]);
        }
        let time_err = (state.jet(x, t + STEP).psi[a] - state.jet(x, t - STEP).psi[a]) / (2.0 * STEP)
            - jet.time[a];
        worst = worst
            .max(relative(&grad_err, &jet.gradient[a]))
            .max(relative(&second_err, &jet.second[a]))
            .max(relative(&[time_err], &[jet.time[a]]));
    }
    worst
}

/// Convenience wrapper so real states can be checked through the trait object.
pub fn fd_check_state(state: &dyn RealStationaryState, q: &[f64]) -> f64 {
    fd_check(state, q)
}
