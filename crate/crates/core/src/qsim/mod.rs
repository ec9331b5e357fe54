//! Statevector simulation of parameterised circuits.
//!
//! Amplitudes live in a flat array indexed by basis-state integer, qubit `q`
//! being bit `q` of the index. Rotations use the half-angle convention
//! `R_P(theta) = exp(-i theta P / 2)`, so the parameter-shift rule with
//! shifts of `pi/2` is exact.

mod circuit;
mod generate;
mod grad;
mod run;
mod shots;
mod state;

pub use circuit::{CircuitSpec, GateKind, GateOp, Pauli, Source, CIRCUIT_FORMAT};
pub use generate::generate_circuit;
pub use grad::{
    adjoint_jacobians, finite_diff_features, finite_diff_params, grad_adjoint, grad_param_shift,
    vjp_params, AdjointGradients,
};
pub(crate) use grad::vjp_from_state;
pub use run::{run_circuit, simulate, Expectations};
pub use shots::measure_shots;
pub use state::{Statevector, MAX_QUBITS};

pub type C64 = num_complex::Complex64;
