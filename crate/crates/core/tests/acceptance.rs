//! Acceptance checks. Every criterion prints one `[PASS]`/`[FAIL]` line with
//! the measured numbers; the process exits nonzero if any of them fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ybc::circuit_ir::{
    build_trotter_circuit, from_qasm, to_qasm, unitary_of, Circuit, GateParams, PairGate,
};
use ybc::compressor::{compress, merge};
use ybc::linalg::{phase_aligned_distance, phase_aligned_distance4};
use ybc::propagators::{
    decompose_xyz, pauli_pair_exponential, r_matrix, xyz_propagator, Angles3, Axis, Conjugation,
    GateSequence, NativeGate, RClassForm, RGateParams,
};
use ybc::simulator::{
    compressed_blocks, neel_state, run_dynamics, run_noisy, run_noisy_checkpoints,
    staggered_magnetization, DynamicsMode,
};
use ybc::spin_model::{CouplingParams, HamiltonianClass, TrotterPlan};
use ybc::ybe::{solve, SolveMethod, YbeForm, YbeTriple};

fn report(id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] criterion {id} {name}: {detail} ({:.2} s)",
        elapsed.as_secs_f64()
    );
}

fn angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-PI..PI)
}

fn gate(rng: &mut ChaCha8Rng) -> RGateParams {
    RGateParams::new(angle(rng), angle(rng))
}

fn criterion_1_propagator_identities() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_product, mut worst_circuit) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let a = Angles3::new(angle(&mut rng), angle(&mut rng), angle(&mut rng));
        let product = pauli_pair_exponential(Axis::X, a.theta_x)
            * pauli_pair_exponential(Axis::Y, a.theta_y)
            * pauli_pair_exponential(Axis::Z, a.theta_z);
        let u = xyz_propagator(a);
        worst_product = worst_product.max((u - product).norm());
        worst_circuit = worst_circuit.max(phase_aligned_distance4(&decompose_xyz(a).unitary(), &u));
    }
    let elapsed = start.elapsed();
    let pass = worst_product < 1e-12 && worst_circuit < 1e-10 && elapsed.as_secs_f64() < 5.0;
    report(
        1,
        "propagator identities",
        pass,
        format!("product {worst_product:.2e} < 1e-12, circuit {worst_circuit:.2e} < 1e-10"),
        elapsed,
    );
    pass
}

fn criterion_2_yang_baxter_solver() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut solved, mut analytic, mut worst, mut worst_round_trip) = (0, 0, 0.0f64, 0.0f64);
    let mut tested = 0;
    while tested < 1000 {
        let t = YbeTriple::left(gate(&mut rng), gate(&mut rng), gate(&mut rng));
        let [(g1, d1), _, (g3, d3)] = t.gates.map(|g| (g.gamma, g.delta));
        let input_den = [
            (d1 + d3).cos(),
            (d1 + d3).sin(),
            (g1 + g3).cos(),
            (g1 + g3).sin(),
        ];
        if input_den.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        tested += 1;
        let Ok(s) = solve(&t) else { continue };
        solved += 1;
        analytic += usize::from(s.method == SolveMethod::Analytic);
        worst = worst.max(s.residual);
        if let Ok(back) = solve(&s.triple) {
            assert_eq!(back.triple.form, YbeForm::Left);
            worst_round_trip = worst_round_trip.max((back.triple.unitary() - t.unitary()).norm());
        } else {
            worst_round_trip = f64::INFINITY;
        }
    }

    let (mut singular_ok, mut singular_worst) = (0, 0.0f64);
    for k in 0..100 {
        let mut g = [gate(&mut rng), gate(&mut rng), gate(&mut rng)];
        // Cycle through the four vanishing input denominators.
        match k % 4 {
            0 => g[2].delta = PI - g[0].delta,
            1 => g[2].delta = -g[0].delta,
            2 => g[2].gamma = PI / 2.0 - g[0].gamma,
            _ => g[2].gamma = -g[0].gamma,
        }
        let t = YbeTriple {
            gates: g,
            form: YbeForm::Left,
        };
        if let Ok(s) = solve(&t) {
            if s.method == SolveMethod::NumericFallback && s.residual < 1e-9 {
                singular_ok += 1;
            }
            singular_worst = singular_worst.max(s.residual);
        } else {
            singular_worst = f64::INFINITY;
        }
    }
    let elapsed = start.elapsed();
    let pass = solved == 1000
        && worst < 1e-9
        && worst_round_trip < 1e-8
        && singular_ok == 100
        && elapsed.as_secs_f64() < 30.0;
    report(
        2,
        "Yang-Baxter solver",
        pass,
        format!(
            "{solved}/1000 solved ({analytic} analytic), residual {worst:.2e} < 1e-9, \
             round trip {worst_round_trip:.2e} < 1e-8, singular {singular_ok}/100 via fallback \
             (worst {singular_worst:.2e})"
        ),
        elapsed,
    );
    pass
}

fn criterion_3_merge_identity() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut exact, mut worst) = (true, 0.0f64);
    for _ in 0..1000 {
        let (a, b) = (gate(&mut rng), gate(&mut rng));
        let wrap = |p| {
            PairGate::new(
                0,
                GateParams::R(RClassForm {
                    params: p,
                    conjugation: Conjugation::None,
                }),
            )
        };
        let m = merge(&wrap(a), &wrap(b)).unwrap();
        let GateParams::R(f) = m.params else {
            unreachable!()
        };
        exact &= f.params.gamma == a.gamma + b.gamma && f.params.delta == a.delta + b.delta;
        worst = worst.max((r_matrix(a) * r_matrix(b) - m.unitary()).norm());
    }
    let elapsed = start.elapsed();
    let pass = exact && worst < 1e-12;
    report(
        3,
        "merge identity",
        pass,
        format!("componentwise sums exact: {exact}, matrix {worst:.2e} < 1e-12"),
        elapsed,
    );
    pass
}

fn class_couplings(class: HamiltonianClass) -> CouplingParams {
    let (x, y, z) = (0.7, -0.45, 0.9);
    let c = match class {
        HamiltonianClass::X => (x, 0.0, 0.0),
        HamiltonianClass::Y => (0.0, y, 0.0),
        HamiltonianClass::Z => (0.0, 0.0, z),
        HamiltonianClass::XY => (x, y, 0.0),
        HamiltonianClass::XZ => (x, 0.0, z),
        HamiltonianClass::YZ => (0.0, y, z),
        HamiltonianClass::Xyz => (x, y, z),
    };
    CouplingParams::new(c.0, c.1, c.2).unwrap()
}

fn criterion_4_compression_correctness_and_size() -> bool {
    let start = Instant::now();
    let (mut cases, mut failures, mut worst) = (0, Vec::new(), 0.0f64);
    for n in 2..=8usize {
        let bound = n * (n - 1) / 2;
        for class in HamiltonianClass::SUPPORTED {
            let j = class_couplings(class);
            let mut counts = Vec::new();
            for steps in [1, n, 10 * n] {
                cases += 1;
                let plan = TrotterPlan::with_steps(0.1, steps).unwrap();
                let c = build_trotter_circuit(n, &j, &plan).unwrap();
                let block = match compress(&c) {
                    Ok(b) => b,
                    Err(e) => {
                        failures.push(format!("N={n} {class} steps={steps}: {e}"));
                        continue;
                    }
                };
                let out = block.to_circuit();
                let d =
                    phase_aligned_distance(&unitary_of(&c).unwrap(), &unitary_of(&out).unwrap());
                worst = worst.max(d);
                if d >= 1e-7 || out.gate_count() > bound {
                    failures.push(format!(
                        "N={n} {class} steps={steps}: distance {d:.2e}, gates {}",
                        out.gate_count()
                    ));
                }
                counts.push(out.gate_count());
            }
            if counts.len() == 3 && counts[1] != counts[2] {
                failures.push(format!(
                    "N={n} {class}: {} gates at N steps, {} at 10N",
                    counts[1], counts[2]
                ));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed.as_secs_f64() < 300.0;
    report(
        4,
        "compression correctness and size",
        pass,
        format!("{cases} cases, worst distance {worst:.2e} < 1e-7, failures {failures:?}"),
        elapsed,
    );
    pass
}

fn xy_couplings() -> CouplingParams {
    CouplingParams::new(-0.8, -0.2, 0.0).unwrap()
}

fn criterion_5_trotter_order() -> bool {
    let start = Instant::now();
    let j = xy_couplings();
    let init = neel_state(3);
    let dts = [0.1, 0.05, 0.025, 0.0125];
    let errors: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let plan = TrotterPlan::new(2.5, dt).unwrap();
            let exact = run_dynamics(3, &j, &plan, DynamicsMode::Exact, &init).unwrap();
            let trotter = run_dynamics(3, &j, &plan, DynamicsMode::Trotter, &init).unwrap();
            exact
                .values()
                .iter()
                .zip(trotter.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .collect();
    let slope = log_log_slope(&dts, &errors);
    let elapsed = start.elapsed();
    let pass = (0.8..=1.2).contains(&slope);
    report(
        5,
        "Trotter order",
        pass,
        format!(
            "max |m_s error| [{}], log-log slope {slope:.3} in [0.8, 1.2]",
            errors
                .iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
        elapsed,
    );
    pass
}

fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn criterion_6_noiseless_reproduction() -> bool {
    let start = Instant::now();
    let j = xy_couplings();
    let plan = TrotterPlan::new(2.5, 0.025).unwrap();
    let init = neel_state(3);
    let trotter = run_dynamics(3, &j, &plan, DynamicsMode::Trotter, &init).unwrap();
    let compressed = run_dynamics(3, &j, &plan, DynamicsMode::Compressed, &init).unwrap();
    let m0 = compressed.rows[0].m_s;
    let worst = trotter
        .values()
        .iter()
        .zip(compressed.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let gate_counts: Vec<usize> = compressed_blocks(3, &j, &plan)
        .unwrap()
        .iter()
        .map(|b| b.gate_count())
        .collect();
    let three_everywhere = gate_counts.len() == 100 && gate_counts.iter().all(|&g| g == 3);
    let elapsed = start.elapsed();
    let pass = m0 == 1.0 && trotter.rows.len() == 101 && worst < 1e-7 && three_everywhere;
    report(
        6,
        "noiseless reproduction",
        pass,
        format!(
            "m_s(0) = {m0}, {} rows, max |compressed - trotter| {worst:.2e} < 1e-7, \
             two-qubit gates per step all 3: {three_everywhere}",
            trotter.rows.len()
        ),
        elapsed,
    );
    pass
}

fn criterion_7_noise_contrast() -> bool {
    let start = Instant::now();
    let j = xy_couplings();
    let plan = TrotterPlan::new(2.5, 0.025).unwrap();
    let init = neel_state(3);
    let deep = build_trotter_circuit(3, &j, &plan).unwrap();
    let shallow = compressed_blocks(3, &j, &plan)
        .unwrap()
        .pop()
        .unwrap()
        .to_circuit();
    let ideal = staggered_magnetization(&ybc::simulator::apply_circuit(&init, &deep).unwrap());

    let noise = ybc::simulator::NoiseModel::new(0.0, 1e-2, 8192, 7).unwrap();
    let noisy_deep = run_noisy(&deep, &noise, &init, staggered_magnetization).unwrap();
    let noisy_shallow = run_noisy(&shallow, &noise, &init, staggered_magnetization).unwrap();
    let err_deep = (noisy_deep.mean - ideal).abs();
    let err_shallow = (noisy_shallow.mean - ideal).abs();

    let full = ybc::simulator::NoiseModel { p2: 1.0, ..noise };
    let mixed = run_noisy_checkpoints(
        &deep,
        &full,
        &init,
        &[deep.gate_count()],
        staggered_magnetization,
    )
    .unwrap()[0];
    let within = mixed.mean.abs() <= 3.0 * mixed.stderr;
    let elapsed = start.elapsed();
    let pass = err_shallow < err_deep && within;
    report(
        7,
        "noise contrast",
        pass,
        format!(
            "ideal m_s {ideal:.4}, |error| compressed {err_shallow:.4} < uncompressed {err_deep:.4}; \
             p2=1 m_s {:.4} ± {:.4} within 3 stderr of 0: {within}",
            mixed.mean, mixed.stderr
        ),
        elapsed,
    );
    pass
}

fn random_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let n = rng.gen_range(2..=6usize);
    let count = rng.gen_range(0..=20);
    let mut gates = Vec::with_capacity(count);
    for _ in 0..count {
        let pair = rng.gen_range(0..n - 1);
        let a = angle(rng);
        let b = angle(rng);
        let params = match rng.gen_range(0..6) {
            0 => GateParams::Xyz(Angles3::new(a, b, angle(rng))),
            1 => GateParams::Xyz(Angles3::new(a, 0.0, b)),
            2 => GateParams::Xyz(Angles3::new(0.0, a, 0.0)),
            3 => GateParams::R(RClassForm {
                params: RGateParams::new(a, b),
                conjugation: [Conjugation::None, Conjugation::U1, Conjugation::U2]
                    [rng.gen_range(0..3)],
            }),
            4 => GateParams::Native(GateSequence::new(vec![
                NativeGate::H {
                    qubit: rng.gen_range(0..2),
                },
                NativeGate::Cx {
                    control: 1,
                    target: 0,
                },
                NativeGate::Rz { qubit: 1, angle: a },
            ])),
            _ => GateParams::Native(GateSequence::new(vec![
                NativeGate::S { qubit: 0 },
                NativeGate::Rx { qubit: 1, angle: b },
            ])),
        };
        gates.push(PairGate::new(pair, params));
    }
    Circuit::from_gates(n, gates).unwrap()
}

fn criterion_8_qasm_round_trip() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c = random_circuit(&mut rng);
        let back = from_qasm(&to_qasm(&c)).unwrap();
        let d = phase_aligned_distance(&unitary_of(&c).unwrap(), &unitary_of(&back).unwrap());
        worst = worst.max(d);
    }
    let elapsed = start.elapsed();
    let pass = worst < 1e-10;
    report(
        8,
        "QASM round trip",
        pass,
        format!("100 circuits, worst {worst:.2e} < 1e-10"),
        elapsed,
    );
    pass
}

fn main() -> std::process::ExitCode {
    let results = [
        criterion_1_propagator_identities(),
        criterion_2_yang_baxter_solver(),
        criterion_3_merge_identity(),
        criterion_4_compression_correctness_and_size(),
        criterion_5_trotter_order(),
        criterion_6_noiseless_reproduction(),
        criterion_7_noise_contrast(),
        criterion_8_qasm_round_trip(),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}
