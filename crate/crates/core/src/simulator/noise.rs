//! Monte Carlo depolarizing noise on the native-gate form of a circuit.
//!
//! After every native gate, with probability `p1` (single-qubit gates) or
//! `p2` (CX), a uniformly chosen non-identity Pauli hits the touched qubits.
//! Shot `k` draws from `ChaCha8Rng::seed_from_u64(seed + k)`, so results do
//! not depend on how shots are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::StateVector;
use crate::circuit_ir::Circuit;
use crate::linalg::{
    apply_one_qubit, apply_two_qubit, pairwise_sum, pauli_x, pauli_y, pauli_z, Unitary2, Unitary4,
};
use crate::propagators::{GateSequence, NativeGate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("{field}: probability must lie in [0, 1] (got {value})")]
    Probability { field: &'static str, value: f64 },
    #[error("shots: must be at least 1")]
    NoShots,
    #[error("checkpoint {0} is beyond the circuit's gate count")]
    Checkpoint(usize),
    #[error("state has {state} qubits but the circuit acts on {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub shots: usize,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, shots: usize, seed: u64) -> Result<Self, NoiseError> {
        for (field, value) in [("noise.p1", p1), ("noise.p2", p2)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(NoiseError::Probability { field, value });
            }
        }
        if shots == 0 {
            return Err(NoiseError::NoShots);
        }
        Ok(Self {
            p1,
            p2,
            shots,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(shots)`.
    pub stderr: f64,
}

enum Step {
    One {
        qubit: usize,
        m: Unitary2,
    },
    Cx {
        pair: usize,
        m: Box<Unitary4>,
        qubits: [usize; 2],
    },
}

/// A pair gate both as one 4x4 block and as its native steps.
struct Prepared {
    pair: usize,
    whole: Unitary4,
    steps: Vec<Step>,
}

fn prepare(c: &Circuit) -> Vec<Prepared> {
    c.gates()
        .map(|g| {
            let steps = g
                .lower()
                .into_iter()
                .map(|ng| match ng {
                    NativeGate::Cx { control, target } => {
                        let pair = control.min(target);
                        let local = GateSequence::new(vec![ng.relative_to(pair)]);
                        Step::Cx {
                            pair,
                            m: Box::new(local.unitary()),
                            qubits: [control, target],
                        }
                    }
                    other => Step::One {
                        qubit: other.qubits().0,
                        m: other.single_qubit_matrix().expect("single-qubit gate"),
                    },
                })
                .collect();
            Prepared {
                pair: g.pair,
                whole: g.unitary(),
                steps,
            }
        })
        .collect()
}

fn pauli(k: usize) -> Option<Unitary2> {
    match k {
        1 => Some(pauli_x()),
        2 => Some(pauli_y()),
        3 => Some(pauli_z()),
        _ => None,
    }
}

/// Run one trajectory and record the observable after each checkpoint.
fn shot(
    gates: &[Prepared],
    n: usize,
    init: &StateVector,
    noise: &NoiseModel,
    checkpoints: &[usize],
    rng: &mut ChaCha8Rng,
    observable: &(impl Fn(&StateVector) -> f64 + Sync),
) -> Vec<f64> {
    let mut s = init.clone();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    let mut errors: Vec<Option<usize>> = Vec::new();
    for (k, g) in gates.iter().enumerate() {
        while next < checkpoints.len() && checkpoints[next] == k {
            out.push(observable(&s));
            next += 1;
        }
        // One uniform per native gate decides whether a Pauli follows it.
        errors.clear();
        errors.extend(g.steps.iter().map(|st| {
            let (p, choices) = match st {
                Step::One { .. } => (noise.p1, 3),
                Step::Cx { .. } => (noise.p2, 15),
            };
            (rng.gen::<f64>() < p).then(|| 1 + rng.gen_range(0..choices))
        }));
        let amps = s.amplitudes_mut();
        if errors.iter().all(Option::is_none) {
            apply_two_qubit(amps, n, g.pair, &g.whole);
            continue;
        }
        for (st, err) in g.steps.iter().zip(&errors) {
            match st {
                Step::One { qubit, m } => {
                    apply_one_qubit(amps, n, *qubit, m);
                    if let Some(p) = err.and_then(pauli) {
                        apply_one_qubit(amps, n, *qubit, &p);
                    }
                }
                Step::Cx { pair, m, qubits } => {
                    apply_two_qubit(amps, n, *pair, m);
                    if let Some(code) = err {
                        for (q, k) in qubits.iter().zip([code / 4, code % 4]) {
                            if let Some(p) = pauli(k) {
                                apply_one_qubit(amps, n, *q, &p);
                            }
                        }
                    }
                }
            }
        }
    }
    while next < checkpoints.len() {
        out.push(observable(&s));
        next += 1;
    }
    out
}

/// Observable estimates after the first `checkpoints[i]` pair gates.
/// Checkpoints must be non-decreasing.
pub fn run_noisy_checkpoints(
    c: &Circuit,
    noise: &NoiseModel,
    init: &StateVector,
    checkpoints: &[usize],
    observable: impl Fn(&StateVector) -> f64 + Sync,
) -> Result<Vec<NoisyEstimate>, NoiseError> {
    if init.num_qubits() != c.num_qubits() {
        return Err(NoiseError::DimensionMismatch {
            state: init.num_qubits(),
            circuit: c.num_qubits(),
        });
    }
    let noise = NoiseModel::new(noise.p1, noise.p2, noise.shots, noise.seed)?;
    if let Some(&bad) = checkpoints.iter().find(|&&k| k > c.gate_count()) {
        return Err(NoiseError::Checkpoint(bad));
    }
    assert!(
        checkpoints.windows(2).all(|w| w[0] <= w[1]),
        "checkpoints must be sorted"
    );
    let gates = prepare(c);
    let n = c.num_qubits();
    let samples: Vec<Vec<f64>> = (0..noise.shots as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed.wrapping_add(k));
            shot(&gates, n, init, &noise, checkpoints, &mut rng, &observable)
        })
        .collect();
    let shots = noise.shots as f64;
    Ok((0..checkpoints.len())
        .map(|i| {
            let values: Vec<f64> = samples.iter().map(|v| v[i]).collect();
            // Offset by the first sample so identical samples average exactly.
            let base = values[0];
            let offsets: Vec<f64> = values.iter().map(|v| v - base).collect();
            let mean = base + pairwise_sum(&offsets) / shots;
            let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
            let var = if noise.shots > 1 {
                pairwise_sum(&dev) / (shots - 1.0)
            } else {
                0.0
            };
            NoisyEstimate {
                mean,
                stderr: (var / shots).sqrt(),
            }
        })
        .collect())
}

/// Observable estimate after the whole circuit.
pub fn run_noisy(
    c: &Circuit,
    noise: &NoiseModel,
    init: &StateVector,
    observable: impl Fn(&StateVector) -> f64 + Sync,
) -> Result<NoisyEstimate, NoiseError> {
    Ok(run_noisy_checkpoints(c, noise, init, &[c.gate_count()], observable)?[0])
}
