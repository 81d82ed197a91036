//! End-to-end: Trotter circuit, QASM, compression, simulation.

use proptest::prelude::*;

use ybc::circuit_ir::{build_trotter_circuit, from_qasm, to_qasm, unitary_of};
use ybc::compressor::compress;
use ybc::linalg::phase_aligned_distance;
use ybc::simulator::{
    apply_circuit, neel_state, run_dynamics, staggered_magnetization, DynamicsMode,
};
use ybc::spin_model::{CouplingParams, TrotterPlan};

#[test]
fn compressed_qasm_survives_round_trip() {
    let j = CouplingParams::new(-0.8, -0.2, 0.0).unwrap();
    let plan = TrotterPlan::with_steps(0.025, 40).unwrap();
    let deep = build_trotter_circuit(4, &j, &plan).unwrap();
    let parsed = from_qasm(&to_qasm(&deep)).unwrap();
    let block = compress(&parsed).unwrap();
    let shallow = from_qasm(&to_qasm(&block.to_circuit())).unwrap();
    assert_eq!(shallow.gate_count(), 6);
    let d = phase_aligned_distance(&unitary_of(&deep).unwrap(), &unitary_of(&shallow).unwrap());
    assert!(d < 1e-9, "{d}");
}

#[test]
fn compressed_state_matches_trotter_state() {
    let j = CouplingParams::new(0.5, 0.0, -0.9).unwrap();
    let plan = TrotterPlan::with_steps(0.05, 30).unwrap();
    let deep = build_trotter_circuit(5, &j, &plan).unwrap();
    let shallow = compress(&deep).unwrap().to_circuit();
    let init = neel_state(5);
    let a = staggered_magnetization(&apply_circuit(&init, &deep).unwrap());
    let b = staggered_magnetization(&apply_circuit(&init, &shallow).unwrap());
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn modes_share_the_time_grid() {
    let j = CouplingParams::new(-0.8, -0.2, 0.0).unwrap();
    let plan = TrotterPlan::new(0.5, 0.05).unwrap();
    let init = neel_state(3);
    let series: Vec<_> = DynamicsMode::ALL
        .iter()
        .map(|&m| run_dynamics(3, &j, &plan, m, &init).unwrap())
        .collect();
    for s in &series {
        assert_eq!(s.rows.len(), 11);
        assert_eq!(s.rows[0].m_s, 1.0);
    }
    for (a, b) in series[0].rows.iter().zip(&series[1].rows) {
        assert_eq!(a.time, b.time);
    }
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -1.5..1.5f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compression_preserves_unitary(
        n in 2usize..=6,
        jx in coupling(),
        jy in coupling(),
        jz in coupling(),
        dt in 0.01..0.2f64,
        steps in 1usize..=12,
    ) {
        let j = CouplingParams::new(jx, jy, jz).unwrap();
        prop_assume!([jx, jy, jz].contains(&0.0));
        let plan = TrotterPlan::with_steps(dt, steps).unwrap();
        let deep = build_trotter_circuit(n, &j, &plan).unwrap();
        let block = compress(&deep).unwrap();
        let shallow = block.to_circuit();
        prop_assert_eq!(shallow.gate_count(), n * (n - 1) / 2);
        prop_assert!(block.stats.residual < 1e-6);
        let d = phase_aligned_distance(&unitary_of(&deep).unwrap(), &unitary_of(&shallow).unwrap());
        prop_assert!(d < 1e-7, "distance {}", d);
    }
}
