use serde::{Deserialize, Serialize};

use super::{CircuitSpec, Statevector};
use crate::error::Result;

/// Per-qubit `<Z>` readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    pub values: Vec<f64>,
}

/// Run the circuit from `|0...0>`. Encoding gates take their angle straight
/// from `features`, trainable gates from `params`.
pub fn simulate(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<Statevector> {
    spec.check_inputs(features, params)?;
    let mut state = Statevector::new(spec.n_qubits())?;
    for g in spec.gates() {
        state.apply_unchecked(g.kind(), g.qubits(), g.angle(features, params));
    }
    Ok(state)
}

pub fn run_circuit(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<Expectations> {
    Ok(Expectations {
        values: simulate(spec, features, params)?.expectations_z(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{GateKind, GateOp};
    use std::f64::consts::PI;

    fn single_ry() -> CircuitSpec {
        CircuitSpec::new(1, vec![GateOp::encoding(GateKind::Ry, 0, 0).unwrap()]).unwrap()
    }

    #[test]
    fn ry_encoding_gives_cosine() {
        let spec = single_ry();
        assert_eq!(run_circuit(&spec, &[0.0], &[]).unwrap().values, vec![1.0]);
        let e = run_circuit(&spec, &[PI / 3.0], &[]).unwrap().values[0];
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bell_state_readout() {
        let spec = CircuitSpec::new(
            2,
            vec![
                GateOp::fixed(GateKind::H, &[0]).unwrap(),
                GateOp::fixed(GateKind::Cnot, &[0, 1]).unwrap(),
            ],
        )
        .unwrap();
        let e = run_circuit(&spec, &[], &[]).unwrap().values;
        assert!(e.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(run_circuit(&single_ry(), &[], &[]).is_err());
        assert!(run_circuit(&single_ry(), &[0.1], &[0.2]).is_err());
    }
}
