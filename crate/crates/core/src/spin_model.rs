//! Physical problem description: couplings, Hamiltonian families and the
//! Trotter time grid.
//!
//! ħ = 1 everywhere. Spins are indexed `0..n` on an open chain whose bonds are
//! the nearest-neighbor pairs `(i, i + 1)`.

use std::fmt;

use thiserror::Error;

use crate::propagators::Angles3;

/// Couplings at or below this magnitude count as absent.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{field}: must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("dt: must be positive (got {0})")]
    NonPositiveStep(f64),
    #[error("t_final: must be non-negative (got {0})")]
    NegativeTime(f64),
    #[error("dt: step {dt} exceeds t_final {t_final}")]
    StepExceedsHorizon { dt: f64, t_final: f64 },
    #[error("spins: need at least {min} spins (got {got})")]
    TooFewSpins { got: usize, min: usize },
    #[error("spins: {got} exceeds the dense-simulation limit of {max}")]
    TooManySpins { got: usize, max: usize },
}

/// Exchange couplings `(Jx, Jy, Jz)` of the nearest-neighbor Heisenberg chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl CouplingParams {
    pub fn new(jx: f64, jy: f64, jz: f64) -> Result<Self, ModelError> {
        for (field, value) in [("J.x", jx), ("J.y", jy), ("J.z", jz)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { field, value });
            }
        }
        Ok(Self { jx, jy, jz })
    }

    /// Copy with every coupling of magnitude `<= zero_tol` set to exactly zero.
    pub fn snap_zeros(self, zero_tol: f64) -> Self {
        let snap = |v: f64| if v.abs() <= zero_tol { 0.0 } else { v };
        Self {
            jx: snap(self.jx),
            jy: snap(self.jy),
            jz: snap(self.jz),
        }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self {
            jx: c * self.jx,
            jy: c * self.jy,
            jz: c * self.jz,
        }
    }
}

/// Which of the Pauli interaction terms are present.
///
/// The six classes other than [`HamiltonianClass::Xyz`] are the ones the
/// Yang-Baxter compressor supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HamiltonianClass {
    X,
    Y,
    Z,
    XY,
    XZ,
    YZ,
    Xyz,
}

impl HamiltonianClass {
    /// Class from three "present" flags. All-absent maps to `X` (identity
    /// dynamics with γ = 0).
    pub fn from_presence(x: bool, y: bool, z: bool) -> Self {
        match (x, y, z) {
            (true, true, true) => Self::Xyz,
            (true, true, false) => Self::XY,
            (true, false, true) => Self::XZ,
            (false, true, true) => Self::YZ,
            (false, true, false) => Self::Y,
            (false, false, true) => Self::Z,
            (true, false, false) | (false, false, false) => Self::X,
        }
    }

    /// Class of a rotation triple, treating only exact zeros as absent.
    pub fn of_angles(a: &Angles3) -> Self {
        Self::from_presence(a.theta_x != 0.0, a.theta_y != 0.0, a.theta_z != 0.0)
    }

    pub fn is_compressible(self) -> bool {
        self != Self::Xyz
    }

    pub const SUPPORTED: [HamiltonianClass; 6] =
        [Self::X, Self::Y, Self::Z, Self::XY, Self::XZ, Self::YZ];
}

impl fmt::Display for HamiltonianClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::X => "X",
            Self::Y => "Y",
            Self::Z => "Z",
            Self::XY => "XY",
            Self::XZ => "XZ",
            Self::YZ => "YZ",
            Self::Xyz => "XYZ",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for HamiltonianClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "X" => Ok(Self::X),
            "Y" => Ok(Self::Y),
            "Z" => Ok(Self::Z),
            "XY" => Ok(Self::XY),
            "XZ" => Ok(Self::XZ),
            "YZ" => Ok(Self::YZ),
            "XYZ" => Ok(Self::Xyz),
            other => Err(format!("unknown Hamiltonian class '{other}'")),
        }
    }
}

/// Classify couplings, treating `|Jα| <= zero_tol` as zero.
pub fn classify(j: &CouplingParams, zero_tol: f64) -> HamiltonianClass {
    debug_assert!(zero_tol >= 0.0);
    HamiltonianClass::from_presence(
        j.jx.abs() > zero_tol,
        j.jy.abs() > zero_tol,
        j.jz.abs() > zero_tol,
    )
}

/// Per-step rotation angles `θα = Jα·dt`.
pub fn step_angles(j: &CouplingParams, dt: f64) -> Angles3 {
    Angles3::new(j.jx * dt, j.jy * dt, j.jz * dt)
}

/// Uniform time grid `t_k = k·dt`, `k = 0..=num_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrotterPlan {
    pub t_final: f64,
    pub dt: f64,
    pub num_steps: usize,
}

impl TrotterPlan {
    pub fn new(t_final: f64, dt: f64) -> Result<Self, ModelError> {
        if !t_final.is_finite() {
            return Err(ModelError::NonFinite {
                field: "t_final",
                value: t_final,
            });
        }
        if !dt.is_finite() {
            return Err(ModelError::NonFinite {
                field: "dt",
                value: dt,
            });
        }
        if dt <= 0.0 {
            return Err(ModelError::NonPositiveStep(dt));
        }
        if t_final < 0.0 {
            return Err(ModelError::NegativeTime(t_final));
        }
        if dt > t_final {
            return Err(ModelError::StepExceedsHorizon { dt, t_final });
        }
        let num_steps = (t_final / dt).round() as usize;
        Ok(Self {
            t_final,
            dt,
            num_steps: num_steps.max(1),
        })
    }

    /// A plan with an explicit step count; `t_final = num_steps·dt`.
    pub fn with_steps(dt: f64, num_steps: usize) -> Result<Self, ModelError> {
        if !dt.is_finite() {
            return Err(ModelError::NonFinite {
                field: "dt",
                value: dt,
            });
        }
        if dt <= 0.0 {
            return Err(ModelError::NonPositiveStep(dt));
        }
        Ok(Self {
            t_final: dt * num_steps as f64,
            dt,
            num_steps: num_steps.max(1),
        })
    }

    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}
