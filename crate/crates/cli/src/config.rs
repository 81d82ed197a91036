//! Job configuration: a JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use ybc::simulator::{neel_state, DynamicsMode, NoiseModel, StateVector};
use ybc::spin_model::{classify, CouplingParams, HamiltonianClass, TrotterPlan, DEFAULT_ZERO_TOL};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
}

/// The JSON document as written on disk. Every field is optional here;
/// requiredness is checked after flags are merged in.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(rename = "J")]
    pub j: Option<Couplings>,
    pub model: Option<String>,
    pub spins: Option<usize>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    pub init: Option<String>,
    pub mode: Option<String>,
    pub noise: Option<NoiseSection>,
    pub out: Option<PathBuf>,
    pub qasm_out: Option<PathBuf>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Exact,
    Trotter,
    Compressed,
    All,
}

impl ModeArg {
    pub fn modes(self) -> Vec<DynamicsMode> {
        match self {
            ModeArg::Exact => vec![DynamicsMode::Exact],
            ModeArg::Trotter => vec![DynamicsMode::Trotter],
            ModeArg::Compressed => vec![DynamicsMode::Compressed],
            ModeArg::All => DynamicsMode::ALL.to_vec(),
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        <Self as clap::ValueEnum>::from_str(s, true).map_err(|_| {
            CliError::Config(format!(
                "mode: expected exact, trotter, compressed or all (got {s:?})"
            ))
        })
    }
}

/// Flags shared by every command that builds a job. Each one overrides the
/// matching config field.
#[derive(Debug, Default, Args)]
pub struct JobArgs {
    /// JSON job file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Hamiltonian class (X, Y, Z, XY, XZ, YZ, XYZ).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub jx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub jy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub jz: Option<f64>,
    #[arg(long)]
    pub spins: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_final: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// `neel` or `basis:<bits>`.
    #[arg(long)]
    pub init: Option<String>,
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub qasm_out: Option<PathBuf>,
}

/// A validated job.
#[derive(Debug)]
pub struct JobConfig {
    pub couplings: CouplingParams,
    pub class: HamiltonianClass,
    pub spins: usize,
    pub plan: TrotterPlan,
    pub init: StateVector,
    pub mode: Option<ModeArg>,
    pub noise: Option<NoiseModel>,
    pub out: Option<PathBuf>,
    pub qasm_out: Option<PathBuf>,
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!(
        "{field}: missing (set it in the config or pass --{})",
        field.replace('_', "-")
    ))
}

fn parse_init(text: &str, spins: usize) -> Result<StateVector, CliError> {
    if text == "neel" {
        return Ok(neel_state(spins));
    }
    let bits = text.strip_prefix("basis:").ok_or_else(|| {
        CliError::Config(format!(
            "init: expected \"neel\" or \"basis:<bits>\" (got {text:?})"
        ))
    })?;
    if bits.len() != spins {
        return Err(CliError::Config(format!(
            "init: bitstring has {} bits but spins is {spins}",
            bits.len()
        )));
    }
    StateVector::from_bits(bits).map_err(|e| CliError::Config(e.to_string()))
}

/// Couplings from an explicit triple, a class name, or both.
fn resolve_couplings(
    j: Option<(f64, f64, f64)>,
    model: Option<&str>,
) -> Result<(CouplingParams, HamiltonianClass), CliError> {
    let model = model
        .map(|m| {
            m.parse::<HamiltonianClass>()
                .map_err(|e| CliError::Config(format!("model: {e}")))
        })
        .transpose()?;
    let j = match (j, model) {
        (Some((x, y, z)), _) => CouplingParams::new(x, y, z)?,
        // A bare class name means unit couplings on its axes.
        (None, Some(class)) => {
            let name = class.to_string();
            let unit = |axis: char| if name.contains(axis) { 1.0 } else { 0.0 };
            CouplingParams::new(unit('X'), unit('Y'), unit('Z'))?
        }
        (None, None) => return Err(missing("J")),
    };
    let class = classify(&j, DEFAULT_ZERO_TOL);
    if let Some(m) = model {
        if m != class {
            return Err(CliError::Config(format!(
                "model: {m} does not match the couplings, which form the {class} class"
            )));
        }
    }
    Ok((j.snap_zeros(DEFAULT_ZERO_TOL), class))
}

impl JobConfig {
    pub fn resolve(
        args: &JobArgs,
        mode: Option<ModeArg>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let raw = match &args.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };

        let j = match (&raw.j, args.jx, args.jy, args.jz) {
            (None, None, None, None) => None,
            (file, x, y, z) => {
                let file = file.as_ref();
                Some((
                    x.unwrap_or(file.map_or(0.0, |c| c.x)),
                    y.unwrap_or(file.map_or(0.0, |c| c.y)),
                    z.unwrap_or(file.map_or(0.0, |c| c.z)),
                ))
            }
        };
        let model = args.model.as_deref().or(raw.model.as_deref());
        let (couplings, class) = resolve_couplings(j, model)?;

        let spins = args.spins.or(raw.spins).ok_or_else(|| missing("spins"))?;
        let t_final = args
            .t_final
            .or(raw.t_final)
            .ok_or_else(|| missing("t_final"))?;
        let dt = args.dt.or(raw.dt).ok_or_else(|| missing("dt"))?;
        let plan = TrotterPlan::new(t_final, dt)?;
        if spins < 2 {
            return Err(CliError::Config(format!(
                "spins: need at least 2 spins (got {spins})"
            )));
        }
        let init = parse_init(
            args.init
                .as_deref()
                .or(raw.init.as_deref())
                .unwrap_or("neel"),
            spins,
        )?;

        let mode = match mode {
            Some(m) => Some(m),
            None => raw.mode.as_deref().map(ModeArg::parse).transpose()?,
        };
        let noise = raw
            .noise
            .map(|n| {
                let seed = args.seed.unwrap_or(n.seed);
                NoiseModel::new(n.p1, n.p2, n.shots, seed)
            })
            .transpose()
            .map_err(|e| CliError::Config(e.to_string()))?;

        Ok(Self {
            couplings,
            class,
            spins,
            plan,
            init,
            mode,
            noise,
            out: out.or(raw.out),
            qasm_out: args.qasm_out.clone().or(raw.qasm_out),
        })
    }
}

/// `dir/stem.ext` becomes `dir/stem_suffix.ext`.
pub fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> JobArgs {
        JobArgs {
            spins: Some(3),
            t_final: Some(2.5),
            dt: Some(0.025),
            ..Default::default()
        }
    }

    #[test]
    fn documented_example_parses() {
        let raw: RawConfig = serde_json::from_str(
            r#"{"J":{"x":-0.8,"y":-0.2,"z":0.0},"spins":3,"t_final":2.5,"dt":0.025,
                "init":"neel","noise":{"p1":0.0,"p2":0.01,"shots":8192,"seed":7}}"#,
        )
        .unwrap();
        assert_eq!(raw.spins, Some(3));
        assert_eq!(raw.noise.unwrap().shots, 8192);
    }

    #[test]
    fn unknown_field_is_named() {
        let err = serde_json::from_str::<RawConfig>(r#"{"dtt":0.1}"#).unwrap_err();
        assert!(err.to_string().contains("dtt"));
    }

    #[test]
    fn flags_fill_in_and_override() {
        let a = JobArgs {
            jx: Some(-0.8),
            jy: Some(-0.2),
            ..args()
        };
        let job = JobConfig::resolve(&a, None, None).unwrap();
        assert_eq!(job.class, HamiltonianClass::XY);
        assert_eq!(job.plan.num_steps, 100);
    }

    #[test]
    fn model_alone_gives_unit_couplings() {
        let a = JobArgs {
            model: Some("YZ".into()),
            ..args()
        };
        let job = JobConfig::resolve(&a, None, None).unwrap();
        assert_eq!(
            (job.couplings.jx, job.couplings.jy, job.couplings.jz),
            (0.0, 1.0, 1.0)
        );
    }

    #[test]
    fn model_mismatch_is_rejected() {
        let a = JobArgs {
            model: Some("XZ".into()),
            jx: Some(1.0),
            jy: Some(1.0),
            ..args()
        };
        let err = JobConfig::resolve(&a, None, None).unwrap_err();
        assert!(err.to_string().starts_with("model:"), "{err}");
    }

    #[test]
    fn missing_fields_are_named() {
        let a = JobArgs {
            jx: Some(1.0),
            spins: None,
            ..args()
        };
        assert!(JobConfig::resolve(&a, None, None)
            .unwrap_err()
            .to_string()
            .starts_with("spins:"));
        let a = JobArgs {
            dt: None,
            jx: Some(1.0),
            ..args()
        };
        assert!(JobConfig::resolve(&a, None, None)
            .unwrap_err()
            .to_string()
            .starts_with("dt:"));
    }

    #[test]
    fn init_guards() {
        assert!(parse_init("basis:010", 3).is_ok());
        assert!(parse_init("basis:01", 3)
            .unwrap_err()
            .to_string()
            .starts_with("init:"));
        assert!(parse_init("ferro", 3)
            .unwrap_err()
            .to_string()
            .starts_with("init:"));
    }

    #[test]
    fn suffix_keeps_extension() {
        assert_eq!(
            suffixed(Path::new("out/m.csv"), "exact"),
            PathBuf::from("out/m_exact.csv")
        );
        assert_eq!(suffixed(Path::new("m"), "noisy"), PathBuf::from("m_noisy"));
    }
}
