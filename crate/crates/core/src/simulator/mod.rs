//! Dense reference dynamics: Hamiltonian, exact propagator, statevector
//! execution and the staggered magnetization.

mod noise;

pub use noise::{run_noisy, run_noisy_checkpoints, NoiseError, NoiseModel, NoisyEstimate};

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit_ir::{trotter_step_columns, Circuit, CircuitError, MAX_DENSE_QUBITS};
use crate::compressor::{CompressError, CompressedBlock};
use crate::linalg::{apply_two_qubit, pairwise_sum, Unitary, C64, ONE, ZERO};
use crate::spin_model::{classify, step_angles, CouplingParams, ModelError, TrotterPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error("state has {state} qubits but the circuit acts on {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
    #[error("eigendecomposition did not converge for a block of size {0}")]
    Eigen(usize),
    #[error("init: {0}")]
    InvalidInit(String),
}

fn check_size(n: usize) -> Result<(), ModelError> {
    if n < 2 {
        return Err(ModelError::TooFewSpins { got: n, min: 2 });
    }
    if n > MAX_DENSE_QUBITS {
        return Err(ModelError::TooManySpins {
            got: n,
            max: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

/// Amplitudes of an `n`-qubit pure state, qubit 0 the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Self { num_qubits, amps }
    }

    /// Basis state from a bit string, qubit 0 first (`"010"` is `|010⟩`).
    pub fn from_bits(bits: &str) -> Result<Self, SimError> {
        if bits.is_empty() || bits.len() > MAX_DENSE_QUBITS {
            return Err(SimError::InvalidInit(format!(
                "bit string must hold 1..={MAX_DENSE_QUBITS} bits"
            )));
        }
        let mut index = 0usize;
        for ch in bits.chars() {
            let b = match ch {
                '0' => 0,
                '1' => 1,
                other => return Err(SimError::InvalidInit(format!("invalid bit '{other}'"))),
            };
            index = (index << 1) | b;
        }
        Ok(Self::basis(bits.len(), index))
    }

    pub fn from_amplitudes(num_qubits: usize, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), 1 << num_qubits, "amplitude count");
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `|↑↓↑↓…⟩` with `↑ = |0⟩` on even sites.
pub fn neel_state(n: usize) -> StateVector {
    let index = (0..n)
        .filter(|q| q % 2 == 1)
        .fold(0usize, |acc, q| acc | 1 << (n - 1 - q));
    StateVector::basis(n, index)
}

/// `(1/N) Σ_i (−1)^i ⟨σz_i⟩`.
pub fn staggered_magnetization(s: &StateVector) -> f64 {
    let n = s.num_qubits;
    let weights: Vec<f64> = (0..s.amps.len())
        .map(|b| {
            let stag: i64 = (0..n)
                .map(|i| {
                    let z = if b >> (n - 1 - i) & 1 == 0 { 1 } else { -1 };
                    if i % 2 == 0 {
                        z
                    } else {
                        -z
                    }
                })
                .sum();
            s.amps[b].norm_sqr() * stag as f64
        })
        .collect();
    pairwise_sum(&weights) / n as f64
}

/// Apply every gate of a circuit in time order.
pub fn apply_circuit(s: &StateVector, c: &Circuit) -> Result<StateVector, SimError> {
    let mut out = s.clone();
    apply_circuit_in_place(&mut out, c)?;
    Ok(out)
}

fn apply_circuit_in_place(s: &mut StateVector, c: &Circuit) -> Result<(), SimError> {
    if s.num_qubits != c.num_qubits() {
        return Err(SimError::DimensionMismatch {
            state: s.num_qubits,
            circuit: c.num_qubits(),
        });
    }
    for g in c.gates() {
        apply_two_qubit(&mut s.amps, s.num_qubits, g.pair, &g.unitary());
    }
    Ok(())
}

/// `H = −Σ_α J_α Σ_i σα_i σα_{i+1}` on an open chain. All three Pauli
/// products are real, so the matrix is real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    num_qubits: usize,
    matrix: DMatrix<f64>,
}

impl DenseHamiltonian {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn real_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_complex(&self) -> Unitary {
        self.matrix.map(C64::from)
    }

    /// Eigendecomposition, block by block over the connected components of
    /// the basis-state graph (parity sectors, magnetization sectors, …).
    pub fn spectrum(&self) -> Result<Spectrum, SimError> {
        self.spectrum_where(|_| true)
    }

    /// Only the blocks that `s` has weight on. Enough to evolve `s` exactly.
    pub fn spectrum_for(&self, s: &StateVector) -> Result<Spectrum, SimError> {
        self.spectrum_where(|indices| indices.iter().any(|&k| s.amps[k] != ZERO))
    }

    fn spectrum_where(&self, keep: impl Fn(&[usize]) -> bool) -> Result<Spectrum, SimError> {
        let dim = self.matrix.nrows();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for c in 0..dim {
            for r in c + 1..dim {
                if self.matrix[(r, c)] != 0.0 {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for k in 0..dim {
            let root = find(&mut parent, k);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(k);
        }
        groups.retain(|g| keep(g));
        let blocks = groups
            .into_par_iter()
            .map(|indices| {
                let m = DMatrix::from_fn(indices.len(), indices.len(), |r, c| {
                    self.matrix[(indices[r], indices[c])]
                });
                let size = indices.len();
                let eig =
                    SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(SimError::Eigen(size))?;
                Ok(SpectralBlock {
                    indices,
                    eigenvalues: eig.eigenvalues.as_slice().to_vec(),
                    vectors: eig.eigenvectors,
                })
            })
            .collect::<Result<_, SimError>>()?;
        Ok(Spectrum {
            num_qubits: self.num_qubits,
            blocks,
        })
    }
}

pub fn build_hamiltonian(n: usize, j: &CouplingParams) -> Result<DenseHamiltonian, SimError> {
    check_size(n)?;
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        for i in 0..n - 1 {
            let (hi, lo) = (n - 1 - i, n - 2 - i);
            let same = (b >> hi & 1) == (b >> lo & 1);
            let zz = if same { 1.0 } else { -1.0 };
            h[(b, b)] -= j.jz * zz;
            // XX|ab⟩ = |āb̄⟩, YY|ab⟩ = −(−1)^{a+b}|āb̄⟩.
            let flipped = b ^ (1 << hi) ^ (1 << lo);
            h[(flipped, b)] += -j.jx + j.jy * zz;
        }
    }
    Ok(DenseHamiltonian {
        num_qubits: n,
        matrix: h,
    })
}

#[derive(Debug, Clone, PartialEq)]
struct SpectralBlock {
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// `H = Σ_k λ_k v_k v_kᵀ` split into invariant blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    num_qubits: usize,
    blocks: Vec<SpectralBlock>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .blocks
            .iter()
            .flat_map(|b| b.eigenvalues.clone())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> Unitary {
        let dim = 1usize << self.num_qubits;
        let mut u = Unitary::zeros(dim, dim);
        for b in &self.blocks {
            let v = &b.vectors;
            let phases: Vec<C64> = b
                .eigenvalues
                .iter()
                .map(|l| C64::from_polar(1.0, -l * t))
                .collect();
            for (r, &gr) in b.indices.iter().enumerate() {
                for (c, &gc) in b.indices.iter().enumerate() {
                    let mut acc = ZERO;
                    for (k, ph) in phases.iter().enumerate() {
                        acc += ph * (v[(r, k)] * v[(c, k)]);
                    }
                    u[(gr, gc)] = acc;
                }
            }
        }
        u
    }

    /// `exp(−iHt)|ψ⟩` without forming the propagator.
    pub fn evolve(&self, s: &StateVector, t: f64) -> StateVector {
        let mut out = vec![ZERO; s.amps.len()];
        for b in &self.blocks {
            let v = &b.vectors;
            let m = b.indices.len();
            let coeffs: Vec<C64> = (0..m)
                .map(|k| {
                    let overlap: C64 = b
                        .indices
                        .iter()
                        .enumerate()
                        .map(|(r, &g)| s.amps[g] * v[(r, k)])
                        .sum();
                    overlap * C64::from_polar(1.0, -b.eigenvalues[k] * t)
                })
                .collect();
            for (r, &g) in b.indices.iter().enumerate() {
                out[g] = (0..m).map(|k| coeffs[k] * v[(r, k)]).sum();
            }
        }
        StateVector {
            num_qubits: self.num_qubits,
            amps: out,
        }
    }
}

pub fn exact_propagator(h: &DenseHamiltonian, t: f64) -> Result<Unitary, SimError> {
    Ok(h.spectrum()?.propagator(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicsMode {
    Exact,
    Trotter,
    Compressed,
}

impl DynamicsMode {
    pub const ALL: [DynamicsMode; 3] = [
        DynamicsMode::Exact,
        DynamicsMode::Trotter,
        DynamicsMode::Compressed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DynamicsMode::Exact => "exact",
            DynamicsMode::Trotter => "trotter",
            DynamicsMode::Compressed => "compressed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRow {
    pub step: usize,
    pub time: f64,
    pub m_s: f64,
    /// Standard error of a Monte Carlo estimate.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservableSeries {
    pub rows: Vec<ObservableRow>,
}

impl ObservableSeries {
    /// CSV with header `step,time,m_s` (plus `stderr` when present) and
    /// 17 significant digits per float.
    pub fn to_csv(&self) -> String {
        let noisy = self.rows.iter().any(|r| r.stderr.is_some());
        let mut out = String::from(if noisy {
            "step,time,m_s,stderr\n"
        } else {
            "step,time,m_s\n"
        });
        for r in &self.rows {
            write!(out, "{},{:.16e},{:.16e}", r.step, r.time, r.m_s).unwrap();
            if noisy {
                write!(out, ",{:.16e}", r.stderr.unwrap_or(0.0)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.m_s).collect()
    }
}

fn row(plan: &TrotterPlan, step: usize, s: &StateVector) -> ObservableRow {
    ObservableRow {
        step,
        time: plan.time_at(step),
        m_s: staggered_magnetization(s),
        stderr: None,
    }
}

/// `m_s` after each of `num_steps` steps, with the initial state as step 0.
pub fn run_dynamics(
    n: usize,
    j: &CouplingParams,
    plan: &TrotterPlan,
    mode: DynamicsMode,
    init: &StateVector,
) -> Result<ObservableSeries, SimError> {
    check_size(n)?;
    if init.num_qubits != n {
        return Err(SimError::DimensionMismatch {
            state: init.num_qubits,
            circuit: n,
        });
    }
    let mut rows = vec![row(plan, 0, init)];
    match mode {
        DynamicsMode::Exact => {
            let spectrum = build_hamiltonian(n, j)?.spectrum_for(init)?;
            for k in 1..=plan.num_steps {
                rows.push(row(plan, k, &spectrum.evolve(init, plan.time_at(k))));
            }
        }
        DynamicsMode::Trotter => {
            let step = trotter_step(n, j, plan)?;
            let mut s = init.clone();
            for k in 1..=plan.num_steps {
                apply_circuit_in_place(&mut s, &step)?;
                rows.push(row(plan, k, &s));
            }
        }
        DynamicsMode::Compressed => {
            for (k, block) in compressed_blocks(n, j, plan)?.into_iter().enumerate() {
                let s = apply_circuit(init, &block.to_circuit())?;
                rows.push(row(plan, k + 1, &s));
            }
        }
    }
    Ok(ObservableSeries { rows })
}

/// One Trotter step as a circuit.
pub fn trotter_step(n: usize, j: &CouplingParams, plan: &TrotterPlan) -> Result<Circuit, SimError> {
    Ok(Circuit::from_columns(
        n,
        trotter_step_columns(n, step_angles(j, plan.dt)),
    )?)
}

/// The compressed block after each step, absorbing one step at a time.
pub fn compressed_blocks(
    n: usize,
    j: &CouplingParams,
    plan: &TrotterPlan,
) -> Result<Vec<CompressedBlock>, SimError> {
    let step = trotter_step(n, j, plan)?;
    let class = classify(j, 0.0);
    let mut block = CompressedBlock::new(n, class)?;
    let mut out = Vec::with_capacity(plan.num_steps);
    for _ in 0..plan.num_steps {
        block = crate::compressor::absorb_layer(&block, step.columns())?;
        out.push(block.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit_ir::{build_trotter_circuit, unitary_of, PairGate};
    use crate::linalg::{phase_aligned_distance, unitarity_defect};
    use crate::propagators::{pauli_pair_exponential, Axis};

    fn j(x: f64, y: f64, z: f64) -> CouplingParams {
        CouplingParams::new(x, y, z).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let h = build_hamiltonian(2, &j(0.0, 0.0, 1.0)).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, -1.0]));
        assert_eq!(h.real_matrix(), &want);
        let zero = build_hamiltonian(2, &j(0.0, 0.0, 0.0)).unwrap();
        assert!(zero.real_matrix().iter().all(|v| *v == 0.0));
        let h = build_hamiltonian(3, &j(-0.8, -0.2, 0.0)).unwrap();
        let m = h.real_matrix();
        assert_eq!(m, &m.transpose());
        assert_eq!(m.trace(), 0.0);
        assert!(build_hamiltonian(13, &j(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn hamiltonian_matches_pauli_kronecker_oracle() {
        use crate::linalg::{kron2, pauli_x, pauli_y, pauli_z};
        let jj = j(0.3, -0.7, 1.1);
        let h = build_hamiltonian(2, &jj).unwrap().to_complex();
        let oracle = -(kron2(&pauli_x(), &pauli_x()) * C64::from(jj.jx)
            + kron2(&pauli_y(), &pauli_y()) * C64::from(jj.jy)
            + kron2(&pauli_z(), &pauli_z()) * C64::from(jj.jz));
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(h[(r, c)], oracle[(r, c)]);
            }
        }
    }

    #[test]
    fn restricted_spectrum_evolves_like_the_full_one() {
        let h = build_hamiltonian(5, &j(-0.8, -0.2, 0.0)).unwrap();
        let init = neel_state(5);
        let (full, part) = (h.spectrum().unwrap(), h.spectrum_for(&init).unwrap());
        assert!(part.eigenvalues().len() < full.eigenvalues().len());
        let (a, b) = (full.evolve(&init, 1.3), part.evolve(&init, 1.3));
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn propagator_examples() {
        let h = build_hamiltonian(3, &j(0.4, 0.1, -0.6)).unwrap();
        let id = exact_propagator(&h, 0.0).unwrap();
        assert!((id - Unitary::identity(8, 8)).norm() < 1e-13);
        let zero = build_hamiltonian(3, &j(0.0, 0.0, 0.0)).unwrap();
        assert!((exact_propagator(&zero, 2.0).unwrap() - Unitary::identity(8, 8)).norm() < 1e-15);

        let t = 0.7;
        let u = exact_propagator(&build_hamiltonian(2, &j(1.0, 0.0, 0.0)).unwrap(), t).unwrap();
        let want = pauli_pair_exponential(Axis::X, t);
        for r in 0..4 {
            for c in 0..4 {
                assert!((u[(r, c)] - want[(r, c)]).norm() < 1e-13);
            }
        }
        let u = exact_propagator(&h, 1.3).unwrap();
        assert!(unitarity_defect(&u) < 1e-11);
    }

    #[test]
    fn two_spin_propagator_is_one_gate() {
        let jj = j(0.4, 0.1, -0.6);
        let t = 0.9;
        let u = exact_propagator(&build_hamiltonian(2, &jj).unwrap(), t).unwrap();
        let g = Circuit::from_gates(2, vec![PairGate::xyz(0, step_angles(&jj, t))]).unwrap();
        assert!((u - unitary_of(&g).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn neel_and_magnetization() {
        assert_eq!(neel_state(2), StateVector::basis(2, 0b01));
        assert_eq!(neel_state(3), StateVector::basis(3, 0b010));
        for n in 1..=8 {
            assert_eq!(staggered_magnetization(&neel_state(n)), 1.0);
        }
        let anti = StateVector::from_bits("101").unwrap();
        assert_eq!(staggered_magnetization(&anti), -1.0);
        let dim = 16;
        let uniform = StateVector::from_amplitudes(4, vec![C64::from(0.25); dim]);
        assert_eq!(staggered_magnetization(&uniform), 0.0);
        assert!(StateVector::from_bits("01x").is_err());
    }

    #[test]
    fn apply_circuit_matches_dense_oracle() {
        let jj = j(-0.8, -0.2, 0.3);
        let c = build_trotter_circuit(5, &jj, &TrotterPlan::with_steps(0.1, 3).unwrap()).unwrap();
        let s = neel_state(5);
        let got = apply_circuit(&s, &c).unwrap();
        let u = unitary_of(&c).unwrap();
        let want = u * nalgebra::DVector::from_column_slice(s.amplitudes());
        for k in 0..32 {
            assert!((got.amplitudes()[k] - want[k]).norm() < 1e-10);
        }
        assert!((got.norm() - 1.0).abs() < 1e-12);
        assert_eq!(apply_circuit(&s, &Circuit::empty(5)).unwrap(), s);
        assert!(apply_circuit(&neel_state(4), &c).is_err());
    }

    #[test]
    fn cx_only_permutes_basis_states() {
        use crate::circuit_ir::GateParams;
        use crate::propagators::{GateSequence, NativeGate};
        let cx = GateParams::Native(GateSequence::new(vec![NativeGate::Cx {
            control: 0,
            target: 1,
        }]));
        let c = Circuit::from_gates(3, vec![PairGate::new(0, cx.clone()), PairGate::new(1, cx)])
            .unwrap();
        let out = apply_circuit(&StateVector::from_bits("100").unwrap(), &c).unwrap();
        assert_eq!(out, StateVector::from_bits("111").unwrap());
    }

    #[test]
    fn step_zero_row_and_mode_agreement() {
        let jj = j(-0.8, -0.2, 0.0);
        let plan = TrotterPlan::new(0.5, 0.025).unwrap();
        let init = neel_state(3);
        let mut all = Vec::new();
        for mode in DynamicsMode::ALL {
            let s = run_dynamics(3, &jj, &plan, mode, &init).unwrap();
            assert_eq!(s.rows.len(), plan.num_steps + 1);
            assert_eq!(
                (s.rows[0].step, s.rows[0].time, s.rows[0].m_s),
                (0, 0.0, 1.0)
            );
            all.push(s.values());
        }
        for (a, b) in all[1].iter().zip(&all[2]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_mode_is_step_independent() {
        let jj = j(0.5, -0.3, 0.8);
        let init = neel_state(4);
        let coarse = run_dynamics(
            4,
            &jj,
            &TrotterPlan::new(1.0, 0.1).unwrap(),
            DynamicsMode::Exact,
            &init,
        )
        .unwrap();
        let fine = run_dynamics(
            4,
            &jj,
            &TrotterPlan::new(1.0, 0.05).unwrap(),
            DynamicsMode::Exact,
            &init,
        )
        .unwrap();
        for (k, r) in coarse.rows.iter().enumerate() {
            assert!((r.m_s - fine.rows[2 * k].m_s).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_format() {
        let s = ObservableSeries {
            rows: vec![ObservableRow {
                step: 0,
                time: 0.0,
                m_s: 1.0,
                stderr: None,
            }],
        };
        assert_eq!(
            s.to_csv(),
            "step,time,m_s\n0,0.0000000000000000e0,1.0000000000000000e0\n"
        );
    }

    #[test]
    fn compressed_blocks_have_fixed_size() {
        let jj = j(-0.8, -0.2, 0.0);
        let plan = TrotterPlan::new(0.5, 0.025).unwrap();
        for b in compressed_blocks(3, &jj, &plan).unwrap() {
            assert_eq!(b.gate_count(), 3);
        }
        let c = build_trotter_circuit(3, &jj, &plan).unwrap();
        let last = compressed_blocks(3, &jj, &plan).unwrap().pop().unwrap();
        let d = phase_aligned_distance(
            &unitary_of(&c).unwrap(),
            &unitary_of(&last.to_circuit()).unwrap(),
        );
        assert!(d < 1e-8);
    }
}
