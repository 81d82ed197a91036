//! Yang-Baxter moves for R gates on three adjacent qubits.
//!
//! A LEFT triple `(g1, g2, g3)` denotes `(R1⊗1)(1⊗R2)(R3⊗1)` and a RIGHT
//! triple `(g4, g5, g6)` denotes `(1⊗R4)(R5⊗1)(1⊗R6)`, both as matrix
//! products (the right-most factor acts first). [`solve`] turns one form into
//! the other with the same 8x8 unitary, exactly (no global phase).
//!
//! The trigonometric relations below use `s_p = sin p`, `c_p = cos p` of the
//! angles of `R(γ,δ) = exp(iγ XX)·exp(iδ ZZ)` as they are.

use nalgebra::{Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{embed_left, embed_right, kron2, pauli_x, pauli_z, Unitary4, Unitary8, I};
use crate::propagators::{r_matrix, RGateParams};

/// Denominator magnitude below which the closed-form path is not trusted.
pub const EDGE_TOL: f64 = 1e-6;
/// Largest accepted residual for a solution.
pub const SOLVE_TOL: f64 = 1e-9;
/// Seed of the generator that draws the fallback's starting points.
pub const FALLBACK_SEED: u64 = 0x5942_4531;
/// Number of fallback starting points (the origin plus seeded draws).
pub const FALLBACK_STARTS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YbeError {
    #[error("no Yang-Baxter solution found (best residual {best_residual:e})")]
    Unsolved { best_residual: f64 },
    #[error("Yang-Baxter input has a non-finite angle")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum YbeForm {
    /// `(R⊗1)(1⊗R)(R⊗1)`.
    Left,
    /// `(1⊗R)(R⊗1)(1⊗R)`.
    Right,
}

impl YbeForm {
    pub fn opposite(self) -> Self {
        match self {
            YbeForm::Left => YbeForm::Right,
            YbeForm::Right => YbeForm::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YbeTriple {
    pub gates: [RGateParams; 3],
    pub form: YbeForm,
}

impl YbeTriple {
    pub fn left(g1: RGateParams, g2: RGateParams, g3: RGateParams) -> Self {
        Self {
            gates: [g1, g2, g3],
            form: YbeForm::Left,
        }
    }

    pub fn right(g4: RGateParams, g5: RGateParams, g6: RGateParams) -> Self {
        Self {
            gates: [g4, g5, g6],
            form: YbeForm::Right,
        }
    }

    pub fn unitary(&self) -> Unitary8 {
        let [a, b, c] = self.gates.map(r_matrix);
        match self.form {
            YbeForm::Left => embed_left(&a) * embed_right(&b) * embed_left(&c),
            YbeForm::Right => embed_right(&a) * embed_left(&b) * embed_right(&c),
        }
    }

    fn is_finite(&self) -> bool {
        self.gates
            .iter()
            .all(|g| g.gamma.is_finite() && g.delta.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Exact solution of a degenerate case (commuting or identity gates).
    ClosedForm,
    /// Tangent relations with branch selection.
    Analytic,
    /// Levenberg-Marquardt on the matrix identity.
    NumericFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YbeSolution {
    pub triple: YbeTriple,
    /// `max(‖LHS − RHS‖_F, max relation violation)`.
    pub residual: f64,
    pub method: SolveMethod,
}

/// Violations of the sixteen parameter relations and the matrix identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationReport {
    pub relations: [f64; 16],
    pub matrix_residual: f64,
}

impl RelationReport {
    pub fn max_relation(&self) -> f64 {
        self.relations.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn residual(&self) -> f64 {
        self.max_relation().max(self.matrix_residual)
    }
}

/// Evaluate the sixteen relations between a LEFT triple `(g1, g2, g3)` and a
/// RIGHT triple `(g4, g5, g6)`, and the 8x8 residual `‖LEFT − RIGHT‖_F`.
pub fn verify_relations(left: [RGateParams; 3], right: [RGateParams; 3]) -> RelationReport {
    let lu = YbeTriple {
        gates: left,
        form: YbeForm::Left,
    }
    .unitary();
    let ru = YbeTriple {
        gates: right,
        form: YbeForm::Right,
    }
    .unitary();
    RelationReport {
        relations: relations(left, right),
        matrix_residual: (lu - ru).norm(),
    }
}

fn relations(left: [RGateParams; 3], right: [RGateParams; 3]) -> [f64; 16] {
    let [(g1, d1), (g2, d2), (g3, d3)] = left.map(|g| (g.gamma, g.delta));
    let [(g4, d4), (g5, d5), (g6, d6)] = right.map(|g| (g.gamma, g.delta));
    let (s, c) = (f64::sin, f64::cos);
    [
        s(g2) * c(g1 - g3) * c(d1 - d3) * s(d2) - c(g5) * s(g4 + g6) * s(d4 + d6) * c(d5),
        c(g2) * c(g1 - g3) * c(d1 + d3) * s(d2) - c(g5) * c(g4 + g6) * s(d4 + d6) * c(d5),
        -s(g2) * c(g1 + g3) * s(d1 - d3) * c(d2) - c(g5) * s(g4 - g6) * c(d4 + d6) * s(d5),
        c(g2) * c(g1 + g3) * s(d1 + d3) * c(d2) - c(g5) * c(g4 - g6) * c(d4 + d6) * s(d5),
        s(g2) * c(g1 + g3) * c(d1 - d3) * c(d2) - c(g5) * s(g4 + g6) * c(d4 + d6) * c(d5),
        c(g2) * c(g1 + g3) * c(d1 + d3) * c(d2) - c(g5) * c(g4 + g6) * c(d4 + d6) * c(d5),
        -s(g2) * c(g1 - g3) * s(d1 - d3) * s(d2) - c(g5) * s(g4 - g6) * s(d4 + d6) * s(d5),
        c(g2) * c(g1 - g3) * s(d1 + d3) * s(d2) - c(g5) * c(g4 - g6) * s(d4 + d6) * s(d5),
        s(g2) * s(g1 + g3) * c(d1 - d3) * c(d2) - s(g5) * s(g4 + g6) * c(d4 - d6) * c(d5),
        c(g2) * s(g1 + g3) * c(d1 + d3) * c(d2) - s(g5) * c(g4 + g6) * c(d4 - d6) * c(d5),
        s(g2) * s(g1 - g3) * s(d1 - d3) * s(d2) - s(g5) * s(g4 - g6) * s(d4 - d6) * s(d5),
        -c(g2) * s(g1 - g3) * s(d1 + d3) * s(d2) - s(g5) * c(g4 - g6) * s(d4 - d6) * s(d5),
        -s(g2) * s(g1 - g3) * c(d1 - d3) * s(d2) - s(g5) * s(g4 + g6) * s(d4 - d6) * c(d5),
        -c(g2) * s(g1 - g3) * c(d1 + d3) * s(d2) - s(g5) * c(g4 + g6) * s(d4 - d6) * c(d5),
        -s(g2) * s(g1 + g3) * s(d1 - d3) * c(d2) - s(g5) * s(g4 - g6) * c(d4 - d6) * s(d5),
        c(g2) * s(g1 + g3) * s(d1 + d3) * c(d2) - s(g5) * c(g4 - g6) * c(d4 - d6) * s(d5),
    ]
}

/// Rewrite a triple into the opposite form with the same unitary.
///
/// RIGHT inputs are handled by mirroring: reversing the qubit order maps
/// LEFT(a, b, c) to RIGHT(a, b, c), and R is symmetric under that swap, so
/// if LEFT(a, b, c) = RIGHT(A, B, C) then RIGHT(a, b, c) = LEFT(A, B, C).
pub fn solve(input: &YbeTriple) -> Result<YbeSolution, YbeError> {
    if !input.is_finite() {
        return Err(YbeError::NonFinite);
    }
    let (gates, method) = solve_left(input.gates)?;
    let (left, right) = match input.form {
        YbeForm::Left => (input.gates, gates),
        YbeForm::Right => (gates, input.gates),
    };
    let residual = verify_relations(left, right).residual();
    if residual >= SOLVE_TOL {
        return Err(YbeError::Unsolved {
            best_residual: residual,
        });
    }
    Ok(YbeSolution {
        triple: YbeTriple {
            gates,
            form: input.form.opposite(),
        },
        residual,
        method,
    })
}

/// Solve LEFT(g) = RIGHT(x) for x.
fn solve_left(g: [RGateParams; 3]) -> Result<([RGateParams; 3], SolveMethod), YbeError> {
    if let Some(x) = closed_form(g) {
        return Ok((x, SolveMethod::ClosedForm));
    }
    let analytic = analytic(g);
    if let Some((x, res, edge)) = analytic {
        if !edge && res < SOLVE_TOL {
            return Ok((canonical(x), SolveMethod::Analytic));
        }
    }
    let target = YbeTriple {
        gates: g,
        form: YbeForm::Left,
    }
    .unitary();
    let mut starts = fallback_starts();
    // A near-miss from the closed-form path is a good extra start.
    if let Some((x, _, _)) = analytic {
        starts.push(flatten(x));
    }
    let (x, f) = multistart(&target, &starts);
    if f.sqrt() < SOLVE_TOL {
        Ok((canonical(x), SolveMethod::NumericFallback))
    } else {
        Err(YbeError::Unsolved {
            best_residual: f.sqrt(),
        })
    }
}

/// Minimize `‖LEFT(g) − RIGHT(x)‖_F²` from the fixed starting points only,
/// for any input form.
pub fn numeric_fallback(input: &YbeTriple) -> Result<YbeSolution, YbeError> {
    if !input.is_finite() {
        return Err(YbeError::NonFinite);
    }
    let target = YbeTriple {
        gates: input.gates,
        form: YbeForm::Left,
    }
    .unitary();
    let (x, f) = multistart(&target, &fallback_starts());
    if f.sqrt() >= SOLVE_TOL {
        return Err(YbeError::Unsolved {
            best_residual: f.sqrt(),
        });
    }
    let gates = canonical(x);
    let (left, right) = match input.form {
        YbeForm::Left => (input.gates, gates),
        YbeForm::Right => (gates, input.gates),
    };
    Ok(YbeSolution {
        triple: YbeTriple {
            gates,
            form: input.form.opposite(),
        },
        residual: verify_relations(left, right).residual(),
        method: SolveMethod::NumericFallback,
    })
}

fn canonical(x: [RGateParams; 3]) -> [RGateParams; 3] {
    x.map(|g| g.canonical())
}

/// Exact answers when the gates commute or some are the identity.
fn closed_form(g: [RGateParams; 3]) -> Option<[RGateParams; 3]> {
    let [g1, g2, g3] = g;
    let id = RGateParams::IDENTITY;
    if g2.is_identity() {
        return Some([id, g1 + g3, id]);
    }
    if g1.is_identity() && g3.is_identity() {
        return Some([g2, id, id]);
    }
    // XX on (0,1) commutes with XX on (1,2); likewise ZZ.
    if g.iter().all(|p| p.delta == 0.0) || g.iter().all(|p| p.gamma == 0.0) {
        return Some([g2, g1 + g3, id]);
    }
    None
}

/// Closed-form solution from the tangent relations. Returns the best branch,
/// its residual, and whether any denominator fell below [`EDGE_TOL`].
fn analytic(g: [RGateParams; 3]) -> Option<([RGateParams; 3], f64, bool)> {
    let [(g1, d1), (g2, d2), (g3, d3)] = g.map(|p| (p.gamma, p.delta));
    let denominators = [
        (d1 + d3).cos(),
        (d1 + d3).sin(),
        (g1 + g3).cos(),
        (g1 + g3).sin(),
    ];
    let mut edge = denominators.iter().any(|d| d.abs() < EDGE_TOL);

    // tan(γ4 ± γ6) and tan(δ4 ± δ6) through atan2; each fixes its angle up to π.
    let sg = (g2.sin() * (d1 - d3).cos()).atan2(g2.cos() * (d1 + d3).cos());
    let dg = (-g2.sin() * (d1 - d3).sin()).atan2(g2.cos() * (d1 + d3).sin());
    let sd = (d2.sin() * (g1 - g3).cos()).atan2(d2.cos() * (g1 + g3).cos());
    let dd = (-d2.sin() * (g1 - g3).sin()).atan2(d2.cos() * (g1 + g3).sin());
    if ![sg, dg, sd, dd].iter().all(|v| v.is_finite()) {
        return None;
    }

    let target = YbeTriple {
        gates: g,
        form: YbeForm::Left,
    }
    .unitary();
    let pi = std::f64::consts::PI;
    let mut best: Option<([RGateParams; 3], f64, bool)> = None;
    for mask in 0..16u32 {
        let shift = |bit: u32| if mask & (1 << bit) != 0 { pi } else { 0.0 };
        let (s1, e1, s2, e2) = (sg + shift(0), dg + shift(1), sd + shift(2), dd + shift(3));
        let (g4, g6) = ((s1 + e1) / 2.0, (s1 - e1) / 2.0);
        let (d4, d6) = ((s2 + e2) / 2.0, (s2 - e2) / 2.0);
        let (cd, cg) = ((d4 - d6).cos(), (g4 - g6).cos());
        let branch_edge = cd.abs() < EDGE_TOL || cg.abs() < EDGE_TOL;
        let g5 = ((g1 + g3).tan() * (d4 + d6).cos() / cd).atan();
        let d5 = ((d1 + d3).tan() * (g4 + g6).cos() / cg).atan();
        for m5 in 0..4u32 {
            let g5b = g5 + if m5 & 1 != 0 { pi } else { 0.0 };
            let d5b = d5 + if m5 & 2 != 0 { pi } else { 0.0 };
            let x = [
                RGateParams::new(g4, d4),
                RGateParams::new(g5b, d5b),
                RGateParams::new(g6, d6),
            ];
            let ru = YbeTriple {
                gates: x,
                form: YbeForm::Right,
            }
            .unitary();
            let res = (target - ru).norm().max(max_abs(&relations(g, x)));
            if !res.is_finite() {
                continue;
            }
            if best.as_ref().is_none_or(|b| res < b.1) {
                best = Some((x, res, branch_edge));
            }
        }
    }
    if let Some(b) = best.as_mut() {
        edge |= b.2;
        b.2 = edge;
    }
    best
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, r| m.max(r.abs()))
}

fn flatten(x: [RGateParams; 3]) -> [f64; 6] {
    [
        x[0].gamma, x[0].delta, x[1].gamma, x[1].delta, x[2].gamma, x[2].delta,
    ]
}

fn unflatten(p: &[f64; 6]) -> [RGateParams; 3] {
    [
        RGateParams::new(p[0], p[1]),
        RGateParams::new(p[2], p[3]),
        RGateParams::new(p[4], p[5]),
    ]
}

/// The origin followed by draws uniform on `(−π, π)` from a fixed seed.
fn fallback_starts() -> Vec<[f64; 6]> {
    let pi = std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(FALLBACK_SEED);
    let mut starts = vec![[0.0; 6]];
    for _ in 1..FALLBACK_STARTS {
        starts.push(std::array::from_fn(|_| rng.gen_range(-pi..pi)));
    }
    starts
}

/// First start that reaches `f < SOLVE_TOL²`, else the best one seen.
fn multistart(target: &Unitary8, starts: &[[f64; 6]]) -> ([RGateParams; 3], f64) {
    let mut best = ([0.0; 6], f64::INFINITY);
    for s in starts {
        let (x, f) = levenberg_marquardt(target, *s);
        if f < best.1 {
            best = (x, f);
        }
        if f < SOLVE_TOL * SOLVE_TOL {
            break;
        }
    }
    (unflatten(&best.0), best.1)
}

/// RIGHT-form unitary and its six parameter derivatives.
fn right_with_jacobian(p: &[f64; 6]) -> (Unitary8, [Unitary8; 6]) {
    let xx: Unitary4 = kron2(&pauli_x(), &pauli_x()) * I;
    let zz: Unitary4 = kron2(&pauli_z(), &pauli_z()) * I;
    let r = unflatten(p).map(r_matrix);
    let embed = [embed_right, embed_left, embed_right];
    let m: [Unitary8; 3] = std::array::from_fn(|k| embed[k](&r[k]));
    // d/dγ R = R·(iXX), d/dδ R = R·(iZZ); XX and ZZ commute with R.
    let dm: [Unitary8; 6] = std::array::from_fn(|j| {
        let k = j / 2;
        let gen = if j % 2 == 0 { &xx } else { &zz };
        embed[k](&(r[k] * gen))
    });
    let u = m[0] * m[1] * m[2];
    let jac = std::array::from_fn(|j| match j / 2 {
        0 => dm[j] * m[1] * m[2],
        1 => m[0] * dm[j] * m[2],
        _ => m[0] * m[1] * dm[j],
    });
    (u, jac)
}

fn levenberg_marquardt(target: &Unitary8, start: [f64; 6]) -> ([f64; 6], f64) {
    let objective = |p: &[f64; 6]| (right_with_jacobian(p).0 - target).norm_squared();
    let mut x = start;
    let mut f = objective(&x);
    let mut lambda = 1e-3;
    for _ in 0..500 {
        if f < 1e-30 {
            break;
        }
        let (u, jac) = right_with_jacobian(&x);
        let r = u - target;
        let mut h = Matrix6::<f64>::zeros();
        let mut grad = Vector6::<f64>::zeros();
        for a in 0..6 {
            grad[a] = jac[a].zip_fold(&r, 0.0, |acc, da, rr| acc + (da.conj() * rr).re);
            for b in a..6 {
                let v = jac[a].zip_fold(&jac[b], 0.0, |acc, da, db| acc + (da.conj() * db).re);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let damped = h + Matrix6::identity() * lambda;
            let Some(step) = damped.cholesky().map(|c| c.solve(&(-grad))) else {
                lambda *= 10.0;
                continue;
            };
            let trial: [f64; 6] = std::array::from_fn(|k| x[k] + step[k]);
            let ft = objective(&trial);
            if ft < f {
                let small = step.norm() < 1e-16 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>());
                x = trial;
                f = ft;
                lambda = (lambda / 3.0).max(1e-12);
                improved = !small;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (x, f)
}
