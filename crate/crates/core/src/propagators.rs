//! Two-spin time-evolution operators and their native-gate circuits.
//!
//! Matrix conventions: basis `|00⟩,|01⟩,|10⟩,|11⟩` with qubit 0 as the left
//! tensor factor, `RX(θ) = exp(−iθX/2)`, `RZ(θ) = exp(−iθZ/2)`,
//! `S = diag(1, i)`. Circuit/matrix equality is up to a global phase.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

use crate::linalg::{self, cis, kron2, Unitary2, Unitary4, C64, I, ONE, ZERO};
use crate::spin_model::HamiltonianClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagatorError {
    #[error("the {0} class has no two-parameter R-gate circuit")]
    UnsupportedClass(HamiltonianClass),
    #[error("parameters (γ={gamma}, δ={delta}) do not belong to the {class} class")]
    ParamsOutsideClass {
        class: HamiltonianClass,
        gamma: f64,
        delta: f64,
    },
}

/// Rotation angles `θα = Jα·t` of the two-spin XYZ propagator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Angles3 {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
}

impl Angles3 {
    pub const fn new(theta_x: f64, theta_y: f64, theta_z: f64) -> Self {
        Self {
            theta_x,
            theta_y,
            theta_z,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta_x.is_finite() && self.theta_y.is_finite() && self.theta_z.is_finite()
    }

    pub fn canonical(&self) -> Self {
        Self::new(
            linalg::canonical_angle(self.theta_x),
            linalg::canonical_angle(self.theta_y),
            linalg::canonical_angle(self.theta_z),
        )
    }
}

impl std::ops::Add for Angles3 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.theta_x + rhs.theta_x,
            self.theta_y + rhs.theta_y,
            self.theta_z + rhs.theta_z,
        )
    }
}

/// Parameters of the R-gate class: `gamma` is the XX-type rotation, `delta`
/// the ZZ-type phase, `R(γ,δ) = exp(iγ XX)·exp(iδ ZZ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RGateParams {
    pub gamma: f64,
    pub delta: f64,
}

impl RGateParams {
    pub const IDENTITY: Self = Self {
        gamma: 0.0,
        delta: 0.0,
    };

    pub const fn new(gamma: f64, delta: f64) -> Self {
        Self { gamma, delta }
    }

    pub fn canonical(&self) -> Self {
        Self::new(
            linalg::canonical_angle(self.gamma),
            linalg::canonical_angle(self.delta),
        )
    }

    pub fn is_identity(&self) -> bool {
        self.gamma == 0.0 && self.delta == 0.0
    }
}

impl std::ops::Add for RGateParams {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.gamma + rhs.gamma, self.delta + rhs.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-qubit basis change wrapped around an R gate, `U·R·U†`.
///
/// `U1 = RZ(π/2)⊗RZ(π/2)` turns XX into YY, `U2 = RX(π/2)⊗RX(π/2)` turns ZZ
/// into YY.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Conjugation {
    #[default]
    None,
    U1,
    U2,
}

impl Conjugation {
    pub fn matrix(self) -> Unitary4 {
        match self {
            Conjugation::None => Unitary4::identity(),
            Conjugation::U1 => kron2(&rz(FRAC_PI_2), &rz(FRAC_PI_2)),
            Conjugation::U2 => kron2(&rx(FRAC_PI_2), &rx(FRAC_PI_2)),
        }
    }
}

/// `exp(iθ σα⊗σα)`.
pub fn pauli_pair_exponential(axis: Axis, theta: f64) -> Unitary4 {
    let (c, s) = (C64::from(theta.cos()), I * theta.sin());
    let mut m = Unitary4::zeros();
    match axis {
        Axis::X => {
            for k in 0..4 {
                m[(k, k)] = c;
                m[(k, 3 - k)] = s;
            }
        }
        Axis::Y => {
            for k in 0..4 {
                m[(k, k)] = c;
            }
            m[(0, 3)] = -s;
            m[(3, 0)] = -s;
            m[(1, 2)] = s;
            m[(2, 1)] = s;
        }
        Axis::Z => {
            m[(0, 0)] = cis(theta);
            m[(1, 1)] = cis(-theta);
            m[(2, 2)] = cis(-theta);
            m[(3, 3)] = cis(theta);
        }
    }
    m
}

/// Closed form of `exp(iθx XX)·exp(iθy YY)·exp(iθz ZZ)`: the outer block
/// `{|00⟩,|11⟩}` rotates by `θx − θy` with phase `e^{iθz}`, the inner block
/// `{|01⟩,|10⟩}` by `θx + θy` with phase `e^{−iθz}`.
pub fn xyz_propagator(a: Angles3) -> Unitary4 {
    let outer = a.theta_x - a.theta_y;
    let inner = a.theta_x + a.theta_y;
    let po = cis(a.theta_z);
    let pi = cis(-a.theta_z);
    let mut m = Unitary4::zeros();
    m[(0, 0)] = po * outer.cos();
    m[(3, 3)] = po * outer.cos();
    m[(0, 3)] = po * I * outer.sin();
    m[(3, 0)] = po * I * outer.sin();
    m[(1, 1)] = pi * inner.cos();
    m[(2, 2)] = pi * inner.cos();
    m[(1, 2)] = pi * I * inner.sin();
    m[(2, 1)] = pi * I * inner.sin();
    m
}

/// `R(γ,δ)`; identical to `xyz_propagator(γ, 0, δ)`.
pub fn r_matrix(p: RGateParams) -> Unitary4 {
    xyz_propagator(Angles3::new(p.gamma, 0.0, p.delta))
}

/// An R gate together with the class-wide basis change it is conjugated by.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RClassForm {
    pub params: RGateParams,
    pub conjugation: Conjugation,
}

impl RClassForm {
    /// `U·R(γ,δ)·U†`.
    pub fn unitary(&self) -> Unitary4 {
        let u = self.conjugation.matrix();
        u * r_matrix(self.params) * u.adjoint()
    }

    /// The XYZ rotation triple this gate is equal to.
    pub fn angles(&self) -> Angles3 {
        let RGateParams { gamma, delta } = self.params;
        match self.conjugation {
            Conjugation::None => Angles3::new(gamma, 0.0, delta),
            Conjugation::U1 => Angles3::new(0.0, gamma, delta),
            Conjugation::U2 => Angles3::new(gamma, delta, 0.0),
        }
    }
}

/// Map a rotation triple onto the R-gate class, if it lies in one of the six
/// supported families. Only exact zeros count as absent.
///
/// * `θy = 0`: `(γ, δ) = (θx, θz)`, no conjugation (X, Z, XZ);
/// * `θx = 0`: `(γ, δ) = (θy, θz)` under `U1` (Y, YZ);
/// * `θz = 0`: `(γ, δ) = (θx, θy)` under `U2` (XY).
pub fn from_angles3(a: Angles3) -> Option<RClassForm> {
    let (params, conjugation) = if a.theta_y == 0.0 {
        (RGateParams::new(a.theta_x, a.theta_z), Conjugation::None)
    } else if a.theta_x == 0.0 {
        (RGateParams::new(a.theta_y, a.theta_z), Conjugation::U1)
    } else if a.theta_z == 0.0 {
        (RGateParams::new(a.theta_x, a.theta_y), Conjugation::U2)
    } else {
        return None;
    };
    Some(RClassForm {
        params,
        conjugation,
    })
}

pub fn rx(theta: f64) -> Unitary2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Unitary2::new(C64::from(c), -I * s, -I * s, C64::from(c))
}

pub fn rz(theta: f64) -> Unitary2 {
    Unitary2::new(cis(-theta / 2.0), ZERO, ZERO, cis(theta / 2.0))
}

pub fn hadamard() -> Unitary2 {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    Unitary2::new(h, h, h, -h)
}

pub fn phase_s() -> Unitary2 {
    Unitary2::new(ONE, ZERO, ZERO, I)
}

/// A gate from the native basis `{RX, RZ, H, S, CX}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NativeGate {
    Rx { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    S { qubit: usize },
    Cx { control: usize, target: usize },
}

impl NativeGate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            NativeGate::Rx { qubit, .. }
            | NativeGate::Rz { qubit, .. }
            | NativeGate::H { qubit }
            | NativeGate::S { qubit } => (qubit, None),
            NativeGate::Cx { control, target } => (control, Some(target)),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, NativeGate::Cx { .. })
    }

    /// Shift every qubit index up by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        self.map_qubits(|q| q + offset)
    }

    /// Shift every qubit index down by `offset`.
    pub fn relative_to(&self, offset: usize) -> Self {
        self.map_qubits(|q| q - offset)
    }

    fn map_qubits(&self, f: impl Fn(usize) -> usize) -> Self {
        match *self {
            NativeGate::Rx { qubit, angle } => NativeGate::Rx {
                qubit: f(qubit),
                angle,
            },
            NativeGate::Rz { qubit, angle } => NativeGate::Rz {
                qubit: f(qubit),
                angle,
            },
            NativeGate::H { qubit } => NativeGate::H { qubit: f(qubit) },
            NativeGate::S { qubit } => NativeGate::S { qubit: f(qubit) },
            NativeGate::Cx { control, target } => NativeGate::Cx {
                control: f(control),
                target: f(target),
            },
        }
    }

    /// The 2x2 matrix of a single-qubit gate.
    pub fn single_qubit_matrix(&self) -> Option<Unitary2> {
        match *self {
            NativeGate::Rx { angle, .. } => Some(rx(angle)),
            NativeGate::Rz { angle, .. } => Some(rz(angle)),
            NativeGate::H { .. } => Some(hadamard()),
            NativeGate::S { .. } => Some(phase_s()),
            NativeGate::Cx { .. } => None,
        }
    }

    /// Matrix on the local two-qubit register `{0, 1}`.
    fn local_matrix(&self) -> Unitary4 {
        let id = Unitary2::identity();
        match *self {
            NativeGate::Cx {
                control: 0,
                target: 1,
            } => cx_matrix(false),
            NativeGate::Cx {
                control: 1,
                target: 0,
            } => cx_matrix(true),
            NativeGate::Cx { control, target } => {
                panic!("CX({control},{target}) is not on the local pair")
            }
            g => {
                let (q, _) = g.qubits();
                let m = g.single_qubit_matrix().expect("single-qubit gate");
                match q {
                    0 => kron2(&m, &id),
                    1 => kron2(&id, &m),
                    _ => panic!("qubit {q} is not on the local pair"),
                }
            }
        }
    }
}

fn cx_matrix(reversed: bool) -> Unitary4 {
    let mut m = Unitary4::zeros();
    let perm: [usize; 4] = if reversed { [0, 3, 2, 1] } else { [0, 1, 3, 2] };
    for (col, &row) in perm.iter().enumerate() {
        m[(row, col)] = ONE;
    }
    m
}

/// Ordered native gates on a two-qubit register (local qubits 0 and 1).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GateSequence {
    pub gates: Vec<NativeGate>,
}

impl GateSequence {
    pub fn new(gates: Vec<NativeGate>) -> Self {
        Self { gates }
    }

    pub fn unitary(&self) -> Unitary4 {
        self.gates
            .iter()
            .fold(Unitary4::identity(), |acc, g| g.local_matrix() * acc)
    }

    pub fn cx_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn single_qubit_count(&self) -> usize {
        self.gates.len() - self.cx_count()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

const CX01: NativeGate = NativeGate::Cx {
    control: 0,
    target: 1,
};

/// Three-CX circuit for the general XYZ propagator.
///
/// Sequence: CX; RX(−2θx)⊗RZ(−2θz); H⊗1; CX; S⊗RZ(2θy); H⊗1; CX;
/// RX(−π/2)⊗RX(π/2). Equal to [`xyz_propagator`] up to a global phase.
pub fn decompose_xyz(a: Angles3) -> GateSequence {
    use NativeGate::*;
    GateSequence::new(vec![
        CX01,
        Rx {
            qubit: 0,
            angle: -2.0 * a.theta_x,
        },
        Rz {
            qubit: 1,
            angle: -2.0 * a.theta_z,
        },
        H { qubit: 0 },
        CX01,
        S { qubit: 0 },
        Rz {
            qubit: 1,
            angle: 2.0 * a.theta_y,
        },
        H { qubit: 0 },
        CX01,
        Rx {
            qubit: 0,
            angle: -FRAC_PI_2,
        },
        Rx {
            qubit: 1,
            angle: FRAC_PI_2,
        },
    ])
}

/// Two-CX circuit for one of the six R-gate families.
///
/// The core is `CX; RX(−2γ)⊗RZ(−2δ); CX` (absent rotations omitted); Y and
/// YZ wrap it in `RZ(±π/2)` on both qubits, XY in `RX(±π/2)`.
pub fn special_case_sequence(
    class: HamiltonianClass,
    p: RGateParams,
) -> Result<GateSequence, PropagatorError> {
    use NativeGate::*;
    let outside = || PropagatorError::ParamsOutsideClass {
        class,
        gamma: p.gamma,
        delta: p.delta,
    };
    let (use_gamma, use_delta, dressing) = match class {
        HamiltonianClass::X => (true, false, None),
        HamiltonianClass::Z => (false, true, None),
        HamiltonianClass::XZ => (true, true, None),
        HamiltonianClass::Y => (true, false, Some(Axis::Z)),
        HamiltonianClass::YZ => (true, true, Some(Axis::Z)),
        HamiltonianClass::XY => (true, true, Some(Axis::X)),
        HamiltonianClass::Xyz => return Err(PropagatorError::UnsupportedClass(class)),
    };
    if (!use_gamma && p.gamma != 0.0) || (!use_delta && p.delta != 0.0) {
        return Err(outside());
    }
    let dress = |angle: f64| -> [NativeGate; 2] {
        match dressing {
            Some(Axis::Z) => [Rz { qubit: 0, angle }, Rz { qubit: 1, angle }],
            _ => [Rx { qubit: 0, angle }, Rx { qubit: 1, angle }],
        }
    };
    let mut gates = Vec::with_capacity(8);
    if dressing.is_some() {
        gates.extend(dress(FRAC_PI_2));
    }
    gates.push(CX01);
    if use_gamma {
        gates.push(Rx {
            qubit: 0,
            angle: -2.0 * p.gamma,
        });
    }
    if use_delta {
        gates.push(Rz {
            qubit: 1,
            angle: -2.0 * p.delta,
        });
    }
    gates.push(CX01);
    if dressing.is_some() {
        gates.extend(dress(-FRAC_PI_2));
    }
    Ok(GateSequence::new(gates))
}

/// Cheapest native circuit for a rotation triple: empty for the identity,
/// the two-CX family circuit when the triple lies in a supported class, the
/// three-CX circuit otherwise.
pub fn lower_angles(a: Angles3) -> GateSequence {
    let class = HamiltonianClass::of_angles(&a);
    if a == Angles3::default() {
        return GateSequence::default();
    }
    match (class, from_angles3(a)) {
        (HamiltonianClass::Xyz, _) | (_, None) => decompose_xyz(a),
        (class, Some(form)) => {
            // Family circuits carry their own U1/U2 dressing, so the bare
            // (γ, δ) of the class is what they take.
            let params = match class {
                HamiltonianClass::Y => RGateParams::new(a.theta_y, 0.0),
                HamiltonianClass::YZ => RGateParams::new(a.theta_y, a.theta_z),
                HamiltonianClass::XY => RGateParams::new(a.theta_x, a.theta_y),
                _ => form.params,
            };
            special_case_sequence(class, params).expect("class checked above")
        }
    }
}
