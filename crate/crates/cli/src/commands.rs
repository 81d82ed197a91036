use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ybc::circuit_ir::{build_trotter_circuit, from_qasm, to_qasm, unitary_of, Circuit};
use ybc::compressor::compress as compress_circuit;
use ybc::linalg::phase_aligned_distance;
use ybc::simulator::{
    compressed_blocks, run_dynamics, run_noisy, run_noisy_checkpoints, staggered_magnetization,
    trotter_step, DynamicsMode, NoiseModel, ObservableRow, ObservableSeries,
};

use crate::config::{suffixed, JobArgs, JobConfig, ModeArg};
use crate::CliError;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_stdout(contents: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(contents.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn read_qasm(path: &Path) -> Result<Circuit, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    from_qasm(&text).map_err(|source| CliError::Qasm {
        path: path.to_path_buf(),
        source,
    })
}

/// Noisy `m_s` at every step of the uncompressed circuit.
fn noisy_trotter(job: &JobConfig, noise: &NoiseModel) -> Result<ObservableSeries, CliError> {
    let per_step = trotter_step(job.spins, &job.couplings, &job.plan)?.gate_count();
    let deep = build_trotter_circuit(job.spins, &job.couplings, &job.plan)?;
    let checkpoints: Vec<usize> = (0..=job.plan.num_steps).map(|k| k * per_step).collect();
    let est = run_noisy_checkpoints(
        &deep,
        noise,
        &job.init,
        &checkpoints,
        staggered_magnetization,
    )?;
    Ok(series_from(
        job,
        est.into_iter().map(|e| (e.mean, e.stderr)),
    ))
}

/// Noisy `m_s` at every step, running each step's compressed block afresh.
fn noisy_compressed(job: &JobConfig, noise: &NoiseModel) -> Result<ObservableSeries, CliError> {
    let mut circuits = vec![Circuit::empty(job.spins)];
    circuits.extend(
        compressed_blocks(job.spins, &job.couplings, &job.plan)?
            .iter()
            .map(|b| b.to_circuit()),
    );
    let est = circuits
        .iter()
        .map(|c| run_noisy(c, noise, &job.init, staggered_magnetization))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(series_from(
        job,
        est.into_iter().map(|e| (e.mean, e.stderr)),
    ))
}

fn series_from(job: &JobConfig, values: impl Iterator<Item = (f64, f64)>) -> ObservableSeries {
    let rows = values
        .enumerate()
        .map(|(step, (m_s, stderr))| ObservableRow {
            step,
            time: job.plan.time_at(step),
            m_s,
            stderr: Some(stderr),
        })
        .collect();
    ObservableSeries { rows }
}

/// The circuit a mode runs for the whole horizon, if it has one.
fn final_circuit(job: &JobConfig, mode: DynamicsMode) -> Result<Option<Circuit>, CliError> {
    Ok(match mode {
        DynamicsMode::Exact => None,
        DynamicsMode::Trotter => Some(build_trotter_circuit(job.spins, &job.couplings, &job.plan)?),
        DynamicsMode::Compressed => {
            let deep = build_trotter_circuit(job.spins, &job.couplings, &job.plan)?;
            Some(compress_circuit(&deep)?.to_circuit())
        }
    })
}

pub fn evolve(
    args: &JobArgs,
    mode: Option<ModeArg>,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let job = JobConfig::resolve(args, mode, out)?;
    let modes = job.mode.unwrap_or(ModeArg::All).modes();
    if modes.contains(&DynamicsMode::Compressed) && !job.class.is_compressible() {
        return Err(ybc::compressor::CompressError::UnsupportedClass(job.class).into());
    }
    let several = modes.len() > 1;
    if job.out.is_none() && (several || job.noise.is_some()) {
        return Err(CliError::Config(
            "out: required when several modes or a noise block are requested".into(),
        ));
    }

    for &mode in &modes {
        let series = run_dynamics(job.spins, &job.couplings, &job.plan, mode, &job.init)?;
        let path = job.out.as_ref().map(|p| {
            if several {
                suffixed(p, mode.name())
            } else {
                p.clone()
            }
        });
        match &path {
            Some(p) => write_file(p, &series.to_csv())?,
            None => write_stdout(&series.to_csv())?,
        }
        if let (Some(noise), Some(p)) = (&job.noise, &path) {
            let noisy = match mode {
                DynamicsMode::Exact => None,
                DynamicsMode::Trotter => Some(noisy_trotter(&job, noise)?),
                DynamicsMode::Compressed => Some(noisy_compressed(&job, noise)?),
            };
            if let Some(s) = noisy {
                write_file(&suffixed(p, "noisy"), &s.to_csv())?;
            }
        }
    }

    if let Some(qasm_out) = &job.qasm_out {
        let circuit_modes: Vec<DynamicsMode> = modes
            .iter()
            .copied()
            .filter(|&m| m != DynamicsMode::Exact)
            .collect();
        if circuit_modes.is_empty() {
            return Err(CliError::Config(
                "qasm_out: exact mode produces no circuit".into(),
            ));
        }
        for &mode in &circuit_modes {
            let c = final_circuit(&job, mode)?.expect("circuit mode");
            let path = if circuit_modes.len() > 1 {
                suffixed(qasm_out, mode.name())
            } else {
                qasm_out.clone()
            };
            write_file(&path, &to_qasm(&c))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn compress(input: Option<&Path>, args: &JobArgs) -> Result<ExitCode, CliError> {
    let (circuit, qasm_out) = match input {
        Some(path) => (read_qasm(path)?, args.qasm_out.clone()),
        None => {
            let job = JobConfig::resolve(args, None, None)?;
            (
                build_trotter_circuit(job.spins, &job.couplings, &job.plan)?,
                job.qasm_out,
            )
        }
    };
    let block = compress_circuit(&circuit)?;
    let out = block.to_circuit();
    let stats = serde_json::json!({
        "class": block.class().to_string(),
        "gates_before": circuit.gate_count(),
        "gates_after": out.gate_count(),
        "layers": block.stats.layers_absorbed,
        "merges": block.stats.merges,
        "ybe_moves": block.stats.ybe_moves,
        "residual": block.stats.residual,
    });
    let qasm = to_qasm(&out);
    match qasm_out {
        Some(p) => write_file(&p, &qasm)?,
        None => write_stdout(&qasm)?,
    }
    write_stdout(&format!("{stats}\n"))?;
    Ok(ExitCode::SUCCESS)
}

pub fn verify(a: &Path, b: &Path, tol: f64) -> Result<ExitCode, CliError> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(CliError::Config(format!(
            "tol: must be a non-negative number (got {tol})"
        )));
    }
    let (ca, cb) = (read_qasm(a)?, read_qasm(b)?);
    if ca.num_qubits() != cb.num_qubits() {
        return Err(CliError::Config(format!(
            "{}: acts on {} qubits but {} acts on {}",
            a.display(),
            ca.num_qubits(),
            b.display(),
            cb.num_qubits()
        )));
    }
    let d = phase_aligned_distance(&unitary_of(&ca)?, &unitary_of(&cb)?);
    let pass = d <= tol;
    write_stdout(&format!(
        "distance {d:e}\ntolerance {tol:e}\n{}\n",
        if pass { "PASS" } else { "FAIL" }
    ))?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn emit(args: &JobArgs, mode: Option<ModeArg>) -> Result<ExitCode, CliError> {
    let job = JobConfig::resolve(args, mode, None)?;
    let mode = match job.mode.unwrap_or(ModeArg::Trotter) {
        ModeArg::Trotter => DynamicsMode::Trotter,
        ModeArg::Compressed => DynamicsMode::Compressed,
        other => {
            return Err(CliError::Config(format!(
                "mode: emit writes a circuit, so use trotter or compressed (got {other:?})"
            )))
        }
    };
    let qasm = to_qasm(&final_circuit(&job, mode)?.expect("circuit mode"));
    match &job.qasm_out {
        Some(p) => write_file(p, &qasm)?,
        None => write_stdout(&qasm)?,
    }
    Ok(ExitCode::SUCCESS)
}
