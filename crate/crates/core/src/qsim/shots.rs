use rand::distributions::{Distribution, WeightedIndex};

use super::{simulate, CircuitSpec, Expectations};
use crate::error::{Error, Result};
use crate::rng;

/// Sample `shots` basis states from the output distribution and return the
/// empirical `<Z_q>` per qubit.
pub fn measure_shots(
    spec: &CircuitSpec,
    features: &[f64],
    params: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Expectations> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let probs = simulate(spec, features, params)?.probabilities();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    let n = spec.n_qubits();
    let mut ones = vec![0u64; n];
    for (basis, &c) in counts.iter().enumerate() {
        for (q, o) in ones.iter_mut().enumerate() {
            if basis >> q & 1 == 1 {
                *o += c;
            }
        }
    }
    Ok(Expectations {
        values: ones
            .into_iter()
            .map(|o| (shots as f64 - 2.0 * o as f64) / shots as f64)
            .collect(),
    })
}
