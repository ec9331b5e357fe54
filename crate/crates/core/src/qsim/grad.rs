use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use super::{run_circuit, simulate, CircuitSpec, Expectations, Source, Statevector};
use crate::error::Result;
use crate::par;

/// `d<Z_q>/d theta_j` by the two-point shift rule, one row per qubit.
pub fn grad_param_shift(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<Array2<f64>> {
    spec.check_inputs(features, params)?;
    let n = spec.n_qubits();
    let cols = par::try_map_range(spec.n_param_slots(), |j| {
        let mut shifted = params.to_vec();
        shifted[j] = params[j] + FRAC_PI_2;
        let plus = run_circuit(spec, features, &shifted)?.values;
        shifted[j] = params[j] - FRAC_PI_2;
        let minus = run_circuit(spec, features, &shifted)?.values;
        Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / 2.0).collect::<Vec<f64>>())
    })?;
    Ok(Array2::from_shape_fn((n, spec.n_param_slots()), |(q, j)| cols[j][q]))
}

/// Jacobians of every `<Z_q>` with respect to parameters and features.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointGradients {
    pub expectations: Vec<f64>,
    /// `n_qubits x n_param_slots`
    pub params: Array2<f64>,
    /// `n_qubits x n_feature_slots`; a feature used by several gates gets
    /// the sum of their contributions.
    pub features: Array2<f64>,
}

/// Parameter Jacobian by reverse-mode (adjoint) differentiation.
pub fn grad_adjoint(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<Array2<f64>> {
    Ok(adjoint_jacobians(spec, features, params)?.params)
}

pub fn adjoint_jacobians(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<AdjointGradients> {
    let state = simulate(spec, features, params)?;
    let expectations = state.expectations_z();
    let n = spec.n_qubits();
    let lambdas: Vec<Statevector> = (0..n)
        .map(|q| {
            let mut w = vec![0.0; n];
            w[q] = 1.0;
            let mut l = state.clone();
            l.apply_weighted_z(&w);
            l
        })
        .collect();
    let (p, f) = reverse_sweep(spec, features, params, state, lambdas, true);
    Ok(AdjointGradients {
        expectations,
        params: Array2::from_shape_fn((n, spec.n_param_slots()), |(q, j)| p[q][j]),
        features: Array2::from_shape_fn((n, spec.n_feature_slots()), |(q, j)| f[q][j]),
    })
}

/// Forward pass plus the vector-Jacobian product
/// `sum_q weights[q] * d<Z_q>/d theta`, in one reverse sweep.
pub fn vjp_params(
    spec: &CircuitSpec,
    features: &[f64],
    params: &[f64],
    weights: &[f64],
) -> Result<(Expectations, Vec<f64>)> {
    let state = simulate(spec, features, params)?;
    let values = state.expectations_z();
    let grad = vjp_from_state(spec, features, params, state, weights);
    Ok((Expectations { values }, grad))
}

/// Reverse half of [`vjp_params`] for a caller that already holds the final
/// state of `simulate(spec, features, params)`.
pub(crate) fn vjp_from_state(
    spec: &CircuitSpec,
    features: &[f64],
    params: &[f64],
    state: Statevector,
    weights: &[f64],
) -> Vec<f64> {
    let mut lambda = state.clone();
    lambda.apply_weighted_z(weights);
    let (mut p, _) = reverse_sweep(spec, features, params, state, vec![lambda], false);
    p.pop().unwrap()
}

/// Walk the gates backwards carrying `phi` (the state after gate k) and one
/// adjoint vector per observable. For a rotation `exp(-i a P / 2)` the
/// derivative of `<psi|O|psi>` is `Im <lambda| P |phi>`. Feature derivatives
/// stay zero unless `want_features`.
fn reverse_sweep(
    spec: &CircuitSpec,
    features: &[f64],
    params: &[f64],
    mut phi: Statevector,
    mut lambdas: Vec<Statevector>,
    want_features: bool,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut dparams = vec![vec![0.0; spec.n_param_slots()]; lambdas.len()];
    let mut dfeatures = vec![vec![0.0; spec.n_feature_slots()]; lambdas.len()];
    for g in spec.gates().iter().rev() {
        let angle = g.angle(features, params);
        let wanted = match g.source() {
            Source::Trainable(_) => true,
            Source::Encoding(_) => want_features,
            Source::Fixed => false,
        };
        if let (Some(pauli), true) = (g.kind().generator(), wanted) {
            for (l, lambda) in lambdas.iter().enumerate() {
                let d = lambda.pauli_matrix_element(pauli, g.target(), &phi).im;
                match g.source() {
                    Source::Trainable(s) => dparams[l][s] += d,
                    Source::Encoding(s) => dfeatures[l][s] += d,
                    Source::Fixed => {}
                }
            }
        }
        phi.apply_inverse_unchecked(g.kind(), g.qubits(), angle);
        for lambda in &mut lambdas {
            lambda.apply_inverse_unchecked(g.kind(), g.qubits(), angle);
        }
    }
    (dparams, dfeatures)
}

/// Central finite differences of every `<Z_q>` in the parameters.
pub fn finite_diff_params(spec: &CircuitSpec, features: &[f64], params: &[f64], h: f64) -> Result<Array2<f64>> {
    let cols = par::try_map_range(params.len(), |j| {
        let mut p = params.to_vec();
        p[j] = params[j] + h;
        let plus = run_circuit(spec, features, &p)?.values;
        p[j] = params[j] - h;
        let minus = run_circuit(spec, features, &p)?.values;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>())
    })?;
    Ok(Array2::from_shape_fn((spec.n_qubits(), params.len()), |(q, j)| cols[j][q]))
}

/// Central finite differences of every `<Z_q>` in the features.
pub fn finite_diff_features(spec: &CircuitSpec, features: &[f64], params: &[f64], h: f64) -> Result<Array2<f64>> {
    let cols = par::try_map_range(features.len(), |j| {
        let mut x = features.to_vec();
        x[j] = features[j] + h;
        let plus = run_circuit(spec, &x, params)?.values;
        x[j] = features[j] - h;
        let minus = run_circuit(spec, &x, params)?.values;
        Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>())
    })?;
    Ok(Array2::from_shape_fn((spec.n_qubits(), features.len()), |(q, j)| cols[j][q]))
}
