use rand::Rng;

use super::{CircuitSpec, GateKind, GateOp};
use crate::error::{Error, Result};
use crate::rng;

const TRAINABLE_KINDS: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];

/// Seeded sub-encoder template.
///
/// Features are loaded as RY angles, round-robin over the qubits, in
/// `ceil(features / qubits)` re-uploading layers. Each encoding layer is
/// followed by a block of trainable rotations (the parameters are split as
/// evenly as possible across blocks, earlier blocks taking the remainder).
/// Within a block rotations sweep the qubits in order with a random axis,
/// and every completed or final partial sweep is closed by a ring of CNOTs
/// `i -> (i + 1) mod n`.
pub fn generate_circuit(
    n_qubits: usize,
    n_feature_slots: usize,
    n_param_slots: usize,
    seed: u64,
) -> Result<CircuitSpec> {
    if n_feature_slots == 0 || n_param_slots == 0 {
        return Err(Error::invalid("a generated circuit needs at least one feature and one parameter"));
    }
    if n_qubits == 0 {
        return Err(Error::invalid("a generated circuit needs at least one qubit"));
    }
    let mut rng = rng::seeded(seed);
    let layers = n_feature_slots.div_ceil(n_qubits);
    let base = n_param_slots / layers;
    let extra = n_param_slots % layers;

    let mut gates = Vec::new();
    let mut slot = 0;
    for layer in 0..layers {
        let first = layer * n_qubits;
        for f in first..(first + n_qubits).min(n_feature_slots) {
            gates.push(GateOp::encoding(GateKind::Ry, f - first, f)?);
        }
        let block = base + usize::from(layer < extra);
        for r in 0..block {
            let kind = TRAINABLE_KINDS[rng.gen_range(0..TRAINABLE_KINDS.len())];
            gates.push(GateOp::trainable(kind, r % n_qubits, slot)?);
            slot += 1;
            let sweep_done = r % n_qubits == n_qubits - 1 || r + 1 == block;
            if sweep_done && n_qubits > 1 {
                for q in 0..n_qubits {
                    gates.push(GateOp::fixed(GateKind::Cnot, &[q, (q + 1) % n_qubits])?);
                }
            }
        }
    }
    CircuitSpec::new(n_qubits, gates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Source;
    use proptest::prelude::*;

    #[test]
    fn deterministic_for_a_seed() {
        let a = serde_json::to_vec(&generate_circuit(4, 8, 20, 5).unwrap()).unwrap();
        let b = serde_json::to_vec(&generate_circuit(4, 8, 20, 5).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&generate_circuit(4, 8, 20, 6).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn four_qubits_four_features_sixteen_params() {
        for seed in 0..20 {
            let spec = generate_circuit(4, 4, 16, seed).unwrap();
            assert_eq!(spec.count_encoding(), 4);
            assert_eq!(spec.count_trainable(), 16);
            assert_eq!((spec.n_feature_slots(), spec.n_param_slots()), (4, 16));
        }
    }

    #[test]
    fn eight_features_on_four_qubits_uses_two_layers() {
        let spec = generate_circuit(4, 8, 20, 1).unwrap();
        let enc: Vec<usize> = spec
            .gates()
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g.source(), Source::Encoding(_)))
            .map(|(i, _)| i)
            .collect();
        assert_eq!(enc.len(), 8);
        // the two encoding layers are separated by trainable gates
        let first_layer_end = enc[3];
        let second_layer_start = enc[4];
        assert!(second_layer_start > first_layer_end + 1);
        assert!(spec.gates()[first_layer_end + 1..second_layer_start]
            .iter()
            .any(|g| matches!(g.source(), Source::Trainable(_))));
        // second layer reuses qubits 0..4
        let qubits: Vec<usize> = enc[4..].iter().map(|&i| spec.gates()[i].target()).collect();
        assert_eq!(qubits, vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_qubit_has_no_cnots() {
        let spec = generate_circuit(1, 3, 5, 0).unwrap();
        assert!(spec.gates().iter().all(|g| g.kind() != GateKind::Cnot));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn slot_invariants_hold(seed: u64, q in 1usize..=10, f in 1usize..40, p in 1usize..70) {
            let spec = generate_circuit(q, f, p, seed).unwrap();
            prop_assert_eq!(spec.n_feature_slots(), f);
            prop_assert_eq!(spec.n_param_slots(), p);
            prop_assert_eq!(spec.count_encoding(), f);
            prop_assert_eq!(spec.count_trainable(), p);
        }
    }
}
