use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::mlp::{head_backward, head_forward, init_head, mlp_param_count};
use super::Network;
use crate::error::{Error, Result};
use crate::qsim::{generate_circuit, simulate, vjp_from_state, CircuitSpec};
use crate::rng::{derive_seed, seeded};

/// `K * params_per_qc` circuit parameters plus the head fed `K * n_qubits`
/// expectations.
pub fn hybrid_param_count(n_qubits: usize, n_sub_encoders: usize, params_per_qc: usize) -> usize {
    n_sub_encoders * params_per_qc + mlp_param_count(n_sub_encoders * n_qubits)
}

/// Architecture of a patch-style hybrid model. The circuit template is
/// generated from `circuit_seed` and shared by all sub-encoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub n_qubits: usize,
    pub n_sub_encoders: usize,
    pub features_per_qc: usize,
    pub params_per_qc: usize,
    #[serde(default)]
    pub circuit_seed: u64,
    /// Rotation angle per unit of (normalized) feature value.
    #[serde(default = "default_encoding_scale")]
    pub encoding_scale: f64,
}

pub const DEFAULT_ENCODING_SCALE: f64 = 0.25;

fn default_encoding_scale() -> f64 {
    DEFAULT_ENCODING_SCALE
}

fn one() -> f64 {
    1.0
}

/// 8 qubits, four sub-encoders of 16 features and 40 rotations each.
impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            n_qubits: 8,
            n_sub_encoders: 4,
            features_per_qc: 16,
            params_per_qc: 40,
            circuit_seed: 0,
            encoding_scale: DEFAULT_ENCODING_SCALE,
        }
    }
}

impl HybridConfig {
    pub fn param_count(&self) -> usize {
        hybrid_param_count(self.n_qubits, self.n_sub_encoders, self.params_per_qc)
    }

    pub fn input_dim(&self) -> usize {
        self.n_sub_encoders * self.features_per_qc
    }
}

/// K copies of one circuit, each with its own parameters and its own
/// contiguous feature slice, feeding an MLP head.
///
/// Flat parameter layout: sub-encoder 0, ..., sub-encoder K-1, head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    circuit: CircuitSpec,
    n_sub_encoders: usize,
    #[serde(default = "one")]
    encoding_scale: f64,
    params: Vec<f64>,
}

/// Gradient split by owner.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGradient {
    pub sub_params: Vec<Vec<f64>>,
    pub head: Vec<f64>,
}

impl HybridModel {
    /// Generates the circuit template and draws parameters from `seed`:
    /// circuit angles uniform in `[-pi, pi)`, head weights fan-in scaled.
    pub fn new(cfg: &HybridConfig, seed: u64) -> Result<Self> {
        if cfg.n_sub_encoders == 0 {
            return Err(Error::invalid("a hybrid model needs at least one sub-encoder"));
        }
        let circuit = generate_circuit(cfg.n_qubits, cfg.features_per_qc, cfg.params_per_qc, cfg.circuit_seed)?;
        let mut model = Self::with_params(circuit, cfg.n_sub_encoders, vec![0.0; cfg.param_count()])?
            .with_encoding_scale(cfg.encoding_scale)?;
        let n_circuit = model.n_circuit_params();
        let mut rng = seeded(derive_seed(seed, 0));
        for p in &mut model.params[..n_circuit] {
            *p = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        }
        let mut rng = seeded(derive_seed(seed, 1));
        let head_dim = model.head_dim();
        init_head(head_dim, &mut model.params[n_circuit..], &mut rng);
        Ok(model)
    }

    pub fn with_params(circuit: CircuitSpec, n_sub_encoders: usize, params: Vec<f64>) -> Result<Self> {
        if n_sub_encoders == 0 {
            return Err(Error::invalid("a hybrid model needs at least one sub-encoder"));
        }
        let expected = n_sub_encoders * circuit.n_param_slots() + mlp_param_count(n_sub_encoders * circuit.n_qubits());
        if params.len() != expected {
            return Err(Error::Dimension {
                context: "hybrid parameters",
                expected,
                got: params.len(),
            });
        }
        Ok(Self {
            circuit,
            n_sub_encoders,
            encoding_scale: 1.0,
            params,
        })
    }

    pub fn with_encoding_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("encoding_scale must be positive, got {scale}")));
        }
        self.encoding_scale = scale;
        Ok(self)
    }

    pub fn encoding_scale(&self) -> f64 {
        self.encoding_scale
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }

    pub fn n_sub_encoders(&self) -> usize {
        self.n_sub_encoders
    }

    pub fn head_dim(&self) -> usize {
        self.n_sub_encoders * self.circuit.n_qubits()
    }

    fn n_circuit_params(&self) -> usize {
        self.n_sub_encoders * self.circuit.n_param_slots()
    }

    /// Input indices read by sub-encoder `k`.
    pub fn feature_slice(&self, k: usize) -> Range<usize> {
        let f = self.circuit.n_feature_slots();
        k * f..(k + 1) * f
    }

    pub fn sub_params(&self, k: usize) -> &[f64] {
        let p = self.circuit.n_param_slots();
        &self.params[k * p..(k + 1) * p]
    }

    pub fn head_params(&self) -> &[f64] {
        &self.params[self.n_circuit_params()..]
    }

    /// Rotation angles fed to sub-encoder `k`.
    fn angles(&self, x: &[f64], k: usize) -> Vec<f64> {
        x[self.feature_slice(k)].iter().map(|v| v * self.encoding_scale).collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        let need = self.n_sub_encoders * self.circuit.n_feature_slots();
        if x.len() < need {
            return Err(Error::invalid(format!(
                "hybrid input has {} features, the sub-encoder slices need {need}",
                x.len()
            )));
        }
        Ok(())
    }

    /// Concatenated `<Z>` readouts of all sub-encoders: the head input.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut out = Vec::with_capacity(self.head_dim());
        for k in 0..self.n_sub_encoders {
            let state = simulate(&self.circuit, &self.angles(x, k), self.sub_params(k))?;
            out.extend(state.expectations_z());
        }
        Ok(out)
    }

    /// Output and gradient of `upstream * output`, split by owner.
    pub fn gradient(&self, x: &[f64], upstream: f64) -> Result<(f64, HybridGradient)> {
        self.check_input(x)?;
        let mut states = Vec::with_capacity(self.n_sub_encoders);
        let mut h = Vec::with_capacity(self.head_dim());
        for k in 0..self.n_sub_encoders {
            let state = simulate(&self.circuit, &self.angles(x, k), self.sub_params(k))?;
            h.extend(state.expectations_z());
            states.push(state);
        }
        let head = self.head_params();
        let trace = head_forward(self.head_dim(), head, &h);
        let mut head_grad = vec![0.0; head.len()];
        let dh = head_backward(self.head_dim(), head, &trace, upstream, &mut head_grad);
        let n = self.circuit.n_qubits();
        let sub_params = states
            .into_iter()
            .enumerate()
            .map(|(k, state)| {
                let w = &dh[k * n..(k + 1) * n];
                if w.iter().all(|&v| v == 0.0) {
                    return vec![0.0; self.circuit.n_param_slots()];
                }
                vjp_from_state(&self.circuit, &self.angles(x, k), self.sub_params(k), state, w)
            })
            .collect();
        Ok((
            trace.output(),
            HybridGradient {
                sub_params,
                head: head_grad,
            },
        ))
    }
}

impl Network for HybridModel {
    fn input_dim(&self) -> usize {
        self.n_sub_encoders * self.circuit.n_feature_slots()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> Result<f64> {
        let h = self.encode(x)?;
        Ok(head_forward(self.head_dim(), self.head_params(), &h).output())
    }

    fn backward(&self, x: &[f64], upstream: f64) -> Result<(f64, Vec<f64>)> {
        let (out, g) = self.gradient(x, upstream)?;
        let mut flat = Vec::with_capacity(self.params.len());
        for s in g.sub_params {
            flat.extend(s);
        }
        flat.extend(g.head);
        Ok((out, flat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Mlp;

    fn cfg(n_qubits: usize, k: usize, f: usize, p: usize) -> HybridConfig {
        HybridConfig {
            n_qubits,
            n_sub_encoders: k,
            features_per_qc: f,
            params_per_qc: p,
            circuit_seed: 3,
            encoding_scale: 0.7,
        }
    }

    #[test]
    fn param_counts() {
        assert_eq!(hybrid_param_count(4, 4, 12), 225);
        assert_eq!(hybrid_param_count(8, 4, 20), 753);
        assert_eq!(hybrid_param_count(10, 4, 64), 1297);
        assert_eq!(hybrid_param_count(4, 4, 40), 337);
        assert_eq!(hybrid_param_count(4, 2, 20), 89);
        let m = HybridModel::new(&cfg(4, 4, 4, 12), 1).unwrap();
        assert_eq!(m.params().len(), 225);
    }

    #[test]
    fn head_sees_k_times_qubits_values_in_range() {
        let m = HybridModel::new(&cfg(4, 4, 4, 12), 2).unwrap();
        let x: Vec<f64> = (0..16).map(|i| 0.2 * i as f64).collect();
        let h = m.encode(&x).unwrap();
        assert_eq!(h.len(), 16);
        assert!(h.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn zero_angles_give_all_ones_head_input() {
        let m = HybridModel::new(&cfg(4, 4, 4, 12), 2).unwrap();
        let mut params = m.params().to_vec();
        params[..48].iter_mut().for_each(|p| *p = 0.0);
        let m = HybridModel::with_params(m.circuit().clone(), 4, params).unwrap();
        let h = m.encode(&[0.0; 16]).unwrap();
        for v in &h {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let head = Mlp::from_params(16, m.head_params().to_vec()).unwrap();
        assert_eq!(m.forward(&[0.0; 16]).unwrap(), head.forward(&[1.0; 16]).unwrap());
    }

    #[test]
    fn short_input_is_rejected() {
        let m = HybridModel::new(&cfg(4, 2, 4, 8), 0).unwrap();
        assert!(m.forward(&[0.0; 7]).is_err());
        assert!(m.forward(&[0.0; 9]).is_ok());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let m = HybridModel::new(&cfg(4, 2, 6, 10), 4).unwrap();
        let x: Vec<f64> = (0..12).map(|i| (i as f64).cos()).collect();
        let (_, g) = m.backward(&x, 0.0).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = HybridModel::new(&cfg(4, 2, 6, 10), 11).unwrap();
        let x: Vec<f64> = (0..12).map(|i| (0.7 * i as f64).sin()).collect();
        let (_, g) = m.backward(&x, 1.0).unwrap();
        let h = 1e-4;
        for j in 0..g.len() {
            let mut a = m.clone();
            a.params_mut()[j] += h;
            let mut b = m.clone();
            b.params_mut()[j] -= h;
            let fd = (a.forward(&x).unwrap() - b.forward(&x).unwrap()) / (2.0 * h);
            let scale = fd.abs().max(g[j].abs()).max(1e-3);
            assert!((fd - g[j]).abs() / scale < 1e-5, "param {j}: fd {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn head_gradient_equals_plain_mlp_backprop() {
        let m = HybridModel::new(&cfg(4, 2, 4, 8), 6).unwrap();
        let x: Vec<f64> = (0..8).map(|i| 0.3 * i as f64).collect();
        let (_, g) = m.gradient(&x, 0.7).unwrap();
        let head = Mlp::from_params(8, m.head_params().to_vec()).unwrap();
        let (_, mg) = head.backward(&m.encode(&x).unwrap(), 0.7).unwrap();
        assert_eq!(g.head, mg);
    }

    #[test]
    fn slices_are_independent() {
        let m = HybridModel::new(&cfg(4, 3, 4, 8), 8).unwrap();
        let x: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let base = m.encode(&x).unwrap();
        for k in 0..3 {
            let mut y = x.clone();
            for i in m.feature_slice(k) {
                y[i] += 0.5;
            }
            let moved = m.encode(&y).unwrap();
            for j in 0..3 {
                let same = base[j * 4..(j + 1) * 4] == moved[j * 4..(j + 1) * 4];
                assert_eq!(same, j != k, "slice {k} block {j}");
            }
        }
    }

    #[test]
    fn forward_is_bitwise_repeatable() {
        let m = HybridModel::new(&cfg(8, 4, 16, 40), 1).unwrap();
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.11).sin()).collect();
        assert_eq!(m.forward(&x).unwrap().to_bits(), m.forward(&x).unwrap().to_bits());
    }
}
