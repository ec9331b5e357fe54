use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CIRCUIT_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "RY")]
    Ry,
    #[serde(rename = "RZ")]
    Rz,
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "CZ")]
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl GateKind {
    pub const ALL: [GateKind; 9] = [
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cnot,
        GateKind::Cz,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        self.generator().is_some()
    }

    /// Pauli generator of a rotation.
    pub fn generator(self) -> Option<Pauli> {
        match self {
            GateKind::Rx => Some(Pauli::X),
            GateKind::Ry => Some(Pauli::Y),
            GateKind::Rz => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Where a rotation takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Fixed,
    Encoding(usize),
    Trainable(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GateRepr", try_from = "GateRepr")]
pub struct GateOp {
    kind: GateKind,
    qubits: Vec<usize>,
    source: Source,
}

impl GateOp {
    pub fn new(kind: GateKind, qubits: Vec<usize>, source: Source) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::invalid(format!(
                "{kind:?} acts on {} qubit(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::invalid("control and target must differ"));
        }
        match (kind.is_rotation(), source) {
            (true, Source::Fixed) => Err(Error::invalid(format!(
                "{kind:?} needs an encoding or trainable source"
            ))),
            (false, Source::Encoding(_) | Source::Trainable(_)) => Err(Error::invalid(format!(
                "{kind:?} cannot take an encoded or trainable angle"
            ))),
            _ => Ok(Self {
                kind,
                qubits,
                source,
            }),
        }
    }

    pub fn fixed(kind: GateKind, qubits: &[usize]) -> Result<Self> {
        Self::new(kind, qubits.to_vec(), Source::Fixed)
    }

    pub fn encoding(kind: GateKind, qubit: usize, slot: usize) -> Result<Self> {
        Self::new(kind, vec![qubit], Source::Encoding(slot))
    }

    pub fn trainable(kind: GateKind, qubit: usize, slot: usize) -> Result<Self> {
        Self::new(kind, vec![qubit], Source::Trainable(slot))
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn target(&self) -> usize {
        *self.qubits.last().unwrap()
    }

    pub(crate) fn angle(&self, features: &[f64], params: &[f64]) -> f64 {
        match self.source {
            Source::Fixed => 0.0,
            Source::Encoding(s) => features[s],
            Source::Trainable(s) => params[s],
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SourceTag {
    Fixed,
    Encoding,
    Trainable,
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: GateKind,
    qubits: Vec<usize>,
    source: SourceTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<usize>,
}

impl From<GateOp> for GateRepr {
    fn from(g: GateOp) -> Self {
        let (source, slot) = match g.source {
            Source::Fixed => (SourceTag::Fixed, None),
            Source::Encoding(s) => (SourceTag::Encoding, Some(s)),
            Source::Trainable(s) => (SourceTag::Trainable, Some(s)),
        };
        GateRepr {
            kind: g.kind,
            qubits: g.qubits,
            source,
            slot,
        }
    }
}

impl TryFrom<GateRepr> for GateOp {
    type Error = Error;

    fn try_from(r: GateRepr) -> Result<Self> {
        let source = match (r.source, r.slot) {
            (SourceTag::Fixed, None) => Source::Fixed,
            (SourceTag::Encoding, Some(s)) => Source::Encoding(s),
            (SourceTag::Trainable, Some(s)) => Source::Trainable(s),
            (SourceTag::Fixed, Some(_)) => return Err(Error::invalid("fixed gate with a slot")),
            _ => return Err(Error::invalid("encoding/trainable gate without a slot")),
        };
        GateOp::new(r.kind, r.qubits, source)
    }
}

/// Ordered gate list over a fixed register. Encoding slots index the input
/// feature vector (each used at least once); trainable slots index the
/// parameter vector (each used exactly once).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "CircuitFile", try_from = "CircuitFile")]
pub struct CircuitSpec {
    n_qubits: usize,
    gates: Vec<GateOp>,
    n_feature_slots: usize,
    n_param_slots: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize, gates: Vec<GateOp>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > super::MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count must be in 1..={}, got {n_qubits}",
                super::MAX_QUBITS
            )));
        }
        let mut feature_uses = BTreeMap::new();
        let mut param_uses = BTreeMap::new();
        for (k, g) in gates.iter().enumerate() {
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::invalid(format!(
                    "gate {k} touches qubit {q} of a {n_qubits}-qubit circuit"
                )));
            }
            match g.source {
                Source::Encoding(s) => *feature_uses.entry(s).or_insert(0usize) += 1,
                Source::Trainable(s) => *param_uses.entry(s).or_insert(0usize) += 1,
                Source::Fixed => {}
            }
        }
        let n_feature_slots = feature_uses.len();
        if feature_uses.keys().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::invalid("feature slots must be exactly 0..n_feature_slots"));
        }
        let n_param_slots = param_uses.len();
        if param_uses.keys().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::invalid("parameter slots must be exactly 0..n_param_slots"));
        }
        if let Some((s, _)) = param_uses.iter().find(|(_, &c)| c != 1) {
            return Err(Error::invalid(format!("parameter slot {s} is used more than once")));
        }
        Ok(Self {
            n_qubits,
            gates,
            n_feature_slots,
            n_param_slots,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn n_feature_slots(&self) -> usize {
        self.n_feature_slots
    }

    pub fn n_param_slots(&self) -> usize {
        self.n_param_slots
    }

    pub fn count_encoding(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.source, Source::Encoding(_)))
            .count()
    }

    pub fn count_trainable(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.source, Source::Trainable(_)))
            .count()
    }

    pub(crate) fn check_inputs(&self, features: &[f64], params: &[f64]) -> Result<()> {
        if features.len() != self.n_feature_slots {
            return Err(Error::Dimension {
                context: "circuit features",
                expected: self.n_feature_slots,
                got: features.len(),
            });
        }
        if params.len() != self.n_param_slots {
            return Err(Error::Dimension {
                context: "circuit parameters",
                expected: self.n_param_slots,
                got: params.len(),
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    format: u32,
    n_qubits: usize,
    #[serde(default)]
    n_feature_slots: Option<usize>,
    #[serde(default)]
    n_param_slots: Option<usize>,
    gates: Vec<GateOp>,
}

impl From<CircuitSpec> for CircuitFile {
    fn from(c: CircuitSpec) -> Self {
        CircuitFile {
            format: CIRCUIT_FORMAT,
            n_qubits: c.n_qubits,
            n_feature_slots: Some(c.n_feature_slots),
            n_param_slots: Some(c.n_param_slots),
            gates: c.gates,
        }
    }
}

impl TryFrom<CircuitFile> for CircuitSpec {
    type Error = Error;

    fn try_from(f: CircuitFile) -> Result<Self> {
        if f.format != CIRCUIT_FORMAT {
            return Err(Error::FormatVersion {
                found: f.format,
                expected: CIRCUIT_FORMAT,
            });
        }
        let spec = CircuitSpec::new(f.n_qubits, f.gates)?;
        let declared = (f.n_feature_slots, f.n_param_slots);
        if declared.0.is_some_and(|n| n != spec.n_feature_slots)
            || declared.1.is_some_and(|n| n != spec.n_param_slots)
        {
            return Err(Error::invalid("declared slot counts disagree with the gate list"));
        }
        Ok(spec)
    }
}
