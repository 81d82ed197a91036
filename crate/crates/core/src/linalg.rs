//! Small dense linear-algebra helpers shared by the propagator, circuit and
//! simulator modules.
//!
//! Basis convention throughout the crate: qubit 0 is the left-most tensor
//! factor, so on an `n`-qubit register qubit `q` is bit `n - 1 - q` of the
//! basis index.

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;

pub type C64 = Complex64;

/// A 4x4 two-qubit operator.
pub type Unitary4 = Matrix4<C64>;

/// A 2x2 single-qubit operator.
pub type Unitary2 = Matrix2<C64>;

/// An 8x8 operator on three adjacent qubits (the YBE workspace).
pub type Unitary8 = SMatrix<C64, 8, 8>;

/// A dense `2^n x 2^n` operator.
pub type Unitary = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::new(phi.cos(), phi.sin())
}

pub fn pauli_x() -> Unitary2 {
    Matrix2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Unitary2 {
    Matrix2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Unitary2 {
    Matrix2::new(ONE, ZERO, ZERO, -ONE)
}

/// Kronecker product of two single-qubit operators, `a` acting on the left qubit.
pub fn kron2(a: &Unitary2, b: &Unitary2) -> Unitary4 {
    Unitary4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `u ⊗ 1` on three qubits.
pub fn embed_left(u: &Unitary4) -> Unitary8 {
    Unitary8::from_fn(|r, c| {
        if r % 2 == c % 2 {
            u[(r / 2, c / 2)]
        } else {
            ZERO
        }
    })
}

/// `1 ⊗ u` on three qubits.
pub fn embed_right(u: &Unitary4) -> Unitary8 {
    Unitary8::from_fn(|r, c| {
        if r / 4 == c / 4 {
            u[(r % 4, c % 4)]
        } else {
            ZERO
        }
    })
}

/// Frobenius distance between two operators after removing the best global
/// phase: `min_{|φ|=1} ‖a − φ b‖_F`, with `φ = tr(b†a)/|tr(b†a)|`.
///
/// Both slices must hold the same matrix layout.
pub fn phase_aligned_distance_slices(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "operator size mismatch");
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| y.conj() * x).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn phase_aligned_distance4(a: &Unitary4, b: &Unitary4) -> f64 {
    phase_aligned_distance_slices(a.as_slice(), b.as_slice())
}

pub fn phase_aligned_distance(a: &Unitary, b: &Unitary) -> f64 {
    assert_eq!(a.shape(), b.shape(), "operator shape mismatch");
    phase_aligned_distance_slices(a.as_slice(), b.as_slice())
}

/// `‖u u† − 1‖_F`.
pub fn unitarity_defect4(u: &Unitary4) -> f64 {
    (u * u.adjoint() - Unitary4::identity()).norm()
}

pub fn unitarity_defect(u: &Unitary) -> f64 {
    let n = u.nrows();
    (u * u.adjoint() - Unitary::identity(n, n)).norm()
}

/// Reduce an angle to `(−π, π]`.
pub fn canonical_angle(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = theta.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Apply `u` to qubits `(pair, pair + 1)` of an `n`-qubit amplitude vector.
pub fn apply_two_qubit(amps: &mut [C64], n: usize, pair: usize, u: &Unitary4) {
    debug_assert!(pair + 1 < n && amps.len() == 1 << n);
    let hi = 1usize << (n - 1 - pair);
    let lo = hi >> 1;
    for base in 0..amps.len() {
        if base & (hi | lo) != 0 {
            continue;
        }
        let idx = [base, base | lo, base | hi, base | hi | lo];
        let v = idx.map(|k| amps[k]);
        for (r, &k) in idx.iter().enumerate() {
            amps[k] = u[(r, 0)] * v[0] + u[(r, 1)] * v[1] + u[(r, 2)] * v[2] + u[(r, 3)] * v[3];
        }
    }
}

/// Apply `u` to qubit `q` of an `n`-qubit amplitude vector.
pub fn apply_one_qubit(amps: &mut [C64], n: usize, q: usize, u: &Unitary2) {
    debug_assert!(q < n && amps.len() == 1 << n);
    let bit = 1usize << (n - 1 - q);
    for base in 0..amps.len() {
        if base & bit != 0 {
            continue;
        }
        let (a, b) = (amps[base], amps[base | bit]);
        amps[base] = u[(0, 0)] * a + u[(0, 1)] * b;
        amps[base | bit] = u[(1, 0)] * a + u[(1, 1)] * b;
    }
}

/// Pairwise (cascade) summation; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (lo, hi) = values.split_at(values.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phase_distance_ignores_global_phase() {
        let u = kron2(&pauli_x(), &pauli_z());
        let v = u * cis(0.7);
        assert!(phase_aligned_distance4(&u, &v) < 1e-14);
        assert!(phase_aligned_distance4(&u, &Unitary4::identity()) > 1.0);
    }

    #[test]
    fn embeddings_commute_when_disjoint() {
        let a = kron2(&pauli_x(), &pauli_y());
        let l = embed_left(&a);
        let r = embed_right(&kron2(&pauli_z(), &pauli_z()));
        assert!((l * l.adjoint() - Unitary8::identity()).norm() < 1e-14);
        // X Y on (0,1) and Z Z on (1,2) anticommute on qubit 1 (Y vs Z).
        assert!((l * r + r * l).norm() < 1e-14);
        assert_eq!(l[(0, 6)], a[(0, 3)]);
        assert_eq!(r[(0, 0)], ONE);
    }

    #[test]
    fn canonical_angle_range() {
        assert_eq!(canonical_angle(PI), PI);
        assert!((canonical_angle(-PI) - PI).abs() < 1e-15);
        assert!((canonical_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert_eq!(canonical_angle(0.25), 0.25);
    }

    #[test]
    fn kernels_match_kronecker_embedding() {
        // |ψ⟩ on 3 qubits; compare the pair kernel against (1 ⊗ u) and (u ⊗ 1).
        let u = kron2(&pauli_x(), &pauli_y()) * cis(0.3);
        let psi: Vec<C64> = (0..8).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
        for (pair, dense) in [(0, embed_left(&u)), (1, embed_right(&u))] {
            let mut got = psi.clone();
            apply_two_qubit(&mut got, 3, pair, &u);
            let want = dense * nalgebra::SVector::<C64, 8>::from_column_slice(&psi);
            for k in 0..8 {
                assert!((got[k] - want[k]).norm() < 1e-13);
            }
        }
        let mut one = psi.clone();
        apply_one_qubit(&mut one, 3, 2, &pauli_x());
        assert_eq!(one[0], psi[1]);
        assert_eq!(one[6], psi[7]);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}
