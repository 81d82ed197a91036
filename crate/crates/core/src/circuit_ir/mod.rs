//! Circuits of two-qubit gates on adjacent pairs of a linear chain.

mod qasm;

pub use qasm::{from_qasm, to_qasm, QasmError};

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{apply_two_qubit, Unitary, Unitary4};
use crate::propagators::{
    lower_angles, xyz_propagator, Angles3, GateSequence, NativeGate, RClassForm,
};
use crate::spin_model::{step_angles, CouplingParams, ModelError, TrotterPlan};

/// Largest register the dense oracle will build.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("pair index {pair} is out of range for {num_qubits} qubits")]
    PairOutOfRange { pair: usize, num_qubits: usize },
    #[error("CX between qubits {control} and {target} is not on an adjacent pair")]
    NonAdjacent { control: usize, target: usize },
    #[error("circuits act on {left} and {right} qubits")]
    QubitMismatch { left: usize, right: usize },
}

/// What a [`PairGate`] does on its two qubits.
#[derive(Debug, Clone, PartialEq)]
pub enum GateParams {
    /// The XYZ propagator with the given rotation angles.
    Xyz(Angles3),
    /// An R-class gate with its basis change.
    R(RClassForm),
    /// An explicit native-gate sequence on local qubits 0 and 1.
    Native(GateSequence),
}

impl GateParams {
    pub fn unitary(&self) -> Unitary4 {
        match self {
            GateParams::Xyz(a) => xyz_propagator(*a),
            GateParams::R(f) => f.unitary(),
            GateParams::Native(seq) => seq.unitary(),
        }
    }

    /// The rotation triple of a propagator gate; `None` for native sequences.
    pub fn angles(&self) -> Option<Angles3> {
        match self {
            GateParams::Xyz(a) => Some(*a),
            GateParams::R(f) => Some(f.angles()),
            GateParams::Native(_) => None,
        }
    }

    /// Native-gate circuit on local qubits 0 and 1.
    pub fn lower(&self) -> GateSequence {
        match self {
            GateParams::Native(seq) => seq.clone(),
            other => lower_angles(other.angles().expect("propagator gate")),
        }
    }
}

/// A gate on qubits `(pair, pair + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGate {
    pub pair: usize,
    pub params: GateParams,
}

impl PairGate {
    pub fn new(pair: usize, params: GateParams) -> Self {
        Self { pair, params }
    }

    pub fn xyz(pair: usize, a: Angles3) -> Self {
        Self::new(pair, GateParams::Xyz(a))
    }

    /// Wrap one native gate on global qubits. Single-qubit gates sit on the
    /// pair starting at their qubit (the last pair for the last qubit).
    pub fn from_native(g: NativeGate, num_qubits: usize) -> Result<Self, CircuitError> {
        let pair = match g.qubits() {
            (c, Some(t)) if c.abs_diff(t) == 1 => c.min(t),
            (c, Some(t)) => {
                return Err(CircuitError::NonAdjacent {
                    control: c,
                    target: t,
                })
            }
            (q, None) => q.min(num_qubits.saturating_sub(2)),
        };
        check_pair(pair, num_qubits)?;
        Ok(Self::new(
            pair,
            GateParams::Native(GateSequence::new(vec![g.relative_to(pair)])),
        ))
    }

    pub fn unitary(&self) -> Unitary4 {
        self.params.unitary()
    }

    /// Native gates on global qubit indices.
    pub fn lower(&self) -> Vec<NativeGate> {
        self.params
            .lower()
            .gates
            .iter()
            .map(|g| g.shifted(self.pair))
            .collect()
    }

    fn overlaps(&self, other: &PairGate) -> bool {
        self.pair.abs_diff(other.pair) <= 1
    }
}

/// An ordered circuit stored as columns of non-overlapping gates.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    columns: Vec<Vec<PairGate>>,
}

impl Circuit {
    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            columns: Vec::new(),
        }
    }

    /// Build from gates in time order, packing them into left-aligned columns.
    pub fn from_gates(num_qubits: usize, gates: Vec<PairGate>) -> Result<Self, CircuitError> {
        let mut c = Self::empty(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Build from explicit columns. Each column must hold disjoint gates.
    pub fn from_columns(
        num_qubits: usize,
        columns: Vec<Vec<PairGate>>,
    ) -> Result<Self, CircuitError> {
        for col in &columns {
            for (k, g) in col.iter().enumerate() {
                check_pair(g.pair, num_qubits)?;
                assert!(
                    col[..k].iter().all(|h| !h.overlaps(g)),
                    "gates in one column must not share a qubit"
                );
            }
        }
        let columns = columns.into_iter().filter(|c| !c.is_empty()).collect();
        Ok(Self {
            num_qubits,
            columns,
        })
    }

    /// Append a gate, placing it in the earliest column after every gate it
    /// shares a qubit with.
    pub fn push(&mut self, gate: PairGate) -> Result<(), CircuitError> {
        check_pair(gate.pair, self.num_qubits)?;
        let slot = self
            .columns
            .iter()
            .rposition(|col| col.iter().any(|g| g.overlaps(&gate)))
            .map_or(0, |k| k + 1);
        if slot == self.columns.len() {
            self.columns.push(vec![gate]);
        } else {
            self.columns[slot].push(gate);
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn columns(&self) -> &[Vec<PairGate>] {
        &self.columns
    }

    pub fn gates(&self) -> impl Iterator<Item = &PairGate> {
        self.columns.iter().flatten()
    }

    pub fn into_gates(self) -> Vec<PairGate> {
        self.columns.into_iter().flatten().collect()
    }

    pub fn gate_count(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn depth(&self) -> usize {
        self.columns.len()
    }

    /// Whether every column holds pairs of one parity and consecutive columns
    /// alternate parity. Two-qubit registers have a single bond and always
    /// qualify.
    pub fn is_alternating(&self) -> bool {
        if self.num_qubits <= 2 {
            return true;
        }
        let mut prev = None;
        for col in &self.columns {
            let parity = match column_parity(col) {
                Some(p) => p,
                None => return false,
            };
            if prev == Some(parity) {
                return false;
            }
            prev = Some(parity);
        }
        true
    }

    /// Native-gate count (CX, single-qubit) after lowering every gate.
    pub fn native_counts(&self) -> (usize, usize) {
        self.gates().fold((0, 0), |(cx, sq), g| {
            let seq = g.params.lower();
            (cx + seq.cx_count(), sq + seq.single_qubit_count())
        })
    }

    /// Every gate lowered to native gates on global qubits, in time order.
    pub fn lower(&self) -> Vec<NativeGate> {
        self.gates().flat_map(PairGate::lower).collect()
    }

    /// Concatenate `other` after `self`.
    pub fn then(&self, other: &Circuit) -> Result<Circuit, CircuitError> {
        if self.num_qubits != other.num_qubits {
            return Err(CircuitError::QubitMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        let mut out = self.clone();
        for g in other.gates() {
            out.push(g.clone())?;
        }
        Ok(out)
    }
}

/// Parity shared by every pair index in the column, if any.
pub fn column_parity(col: &[PairGate]) -> Option<usize> {
    let p = col.first()?.pair % 2;
    col.iter().all(|g| g.pair % 2 == p).then_some(p)
}

fn check_pair(pair: usize, num_qubits: usize) -> Result<(), CircuitError> {
    if num_qubits < 2 || pair > num_qubits - 2 {
        return Err(CircuitError::PairOutOfRange { pair, num_qubits });
    }
    Ok(())
}

/// Columns of one Trotter step: every even bond, then every odd bond.
pub fn trotter_step_columns(num_qubits: usize, a: Angles3) -> Vec<Vec<PairGate>> {
    [0, 1]
        .into_iter()
        .map(|parity| {
            (parity..num_qubits.saturating_sub(1))
                .step_by(2)
                .map(|i| PairGate::xyz(i, a))
                .collect::<Vec<_>>()
        })
        .filter(|col| !col.is_empty())
        .collect()
}

/// First-order Trotter circuit: `num_steps` repetitions of the even-bond
/// column followed by the odd-bond column.
pub fn build_trotter_circuit(
    num_qubits: usize,
    j: &CouplingParams,
    plan: &TrotterPlan,
) -> Result<Circuit, CircuitError> {
    if num_qubits < 2 {
        return Err(ModelError::TooFewSpins {
            got: num_qubits,
            min: 2,
        }
        .into());
    }
    let step = trotter_step_columns(num_qubits, step_angles(j, plan.dt));
    let columns = (0..plan.num_steps)
        .flat_map(|_| step.iter().cloned())
        .collect();
    Circuit::from_columns(num_qubits, columns)
}

/// Repack the gates into greedy left-aligned columns.
pub fn columnize(c: &Circuit) -> Circuit {
    Circuit::from_gates(c.num_qubits, c.gates().cloned().collect())
        .expect("gates already validated")
}

/// Dense `2^N x 2^N` unitary of the circuit.
pub fn unitary_of(c: &Circuit) -> Result<Unitary, CircuitError> {
    let n = c.num_qubits;
    if n > MAX_DENSE_QUBITS {
        return Err(ModelError::TooManySpins {
            got: n,
            max: MAX_DENSE_QUBITS,
        }
        .into());
    }
    let dim = 1usize << n;
    let gates: Vec<(usize, Unitary4)> = c.gates().map(|g| (g.pair, g.unitary())).collect();
    let mut u = Unitary::identity(dim, dim);
    // Column-major storage: each chunk is one column, evolved independently.
    u.as_mut_slice().par_chunks_mut(dim).for_each(|col| {
        for (pair, g) in &gates {
            apply_two_qubit(col, n, *pair, g);
        }
    });
    Ok(u)
}
