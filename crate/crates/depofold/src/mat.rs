//! Small dense complex-matrix helpers shared by the gate set, the simulator
//! and the test oracles.
//!
//! Everything here works on `2x2` and `4x4` matrices stored as fixed-size
//! arrays, plus a handful of utilities (Kronecker product, phase-free
//! distance) for whole-register unitaries stored as flat row-major slices.

use num_complex::Complex64;

/// Shorthand for the complex scalar used throughout the crate.
pub type C64 = Complex64;

/// A `2x2` complex matrix in row-major order.
pub type Mat2 = [[C64; 2]; 2];

/// A `4x4` complex matrix in row-major order.
pub type Mat4 = [[C64; 4]; 4];

/// Real constant as a complex number.
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Fully complex constant.
pub fn ci(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `a * b` for `2x2` matrices.
pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            out[r][col] = a[r][0] * b[0][col] + a[r][1] * b[1][col];
        }
    }
    out
}

/// `a * b` for `4x4` matrices.
pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            for k in 0..4 {
                out[r][col] += a[r][k] * b[k][col];
            }
        }
    }
    out
}

/// Conjugate transpose of a `2x2` matrix.
pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for col in 0..2 {
            out[r][col] = a[col][r].conj();
        }
    }
    out
}

/// Conjugate transpose of a `4x4` matrix.
pub fn mat4_dagger(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            out[r][col] = a[col][r].conj();
        }
    }
    out
}

/// Kronecker product `a (x) b` of two one-qubit matrices.
///
/// Index convention: the first factor acts on the *higher* bit of the
/// two-bit index, i.e. `(a (x) b)[2i+j, 2k+l] = a[i,k] * b[j,l]`.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + j][2 * k + l] = a[i][k] * b[j][l];
                }
            }
        }
    }
    out
}

/// `true` when `m` is unitary within `tol` in the max-norm of `m m' - 1`.
pub fn is_unitary2(m: &Mat2, tol: f64) -> bool {
    let p = mat2_mul(m, &mat2_dagger(m));
    let mut worst: f64 = 0.0;
    for (r, row) in p.iter().enumerate() {
        for (col, val) in row.iter().enumerate() {
            let expect = if r == col { ONE } else { ZERO };
            worst = worst.max((*val - expect).norm());
        }
    }
    worst < tol
}

/// Frobenius distance between two equal-length flat matrices after removing
/// the optimal global phase, `min_phi || a - exp(i phi) b ||_F`.
///
/// Returns `f64::INFINITY` when the matrices have different lengths.
pub fn phase_free_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    // The optimal phase aligns b with a along their overlap tr(a b').
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
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

/// Phase-free distance specialised to `2x2` matrices.
pub fn phase_free_distance2(a: &Mat2, b: &Mat2) -> f64 {
    let fa: Vec<C64> = a.iter().flatten().copied().collect();
    let fb: Vec<C64> = b.iter().flatten().copied().collect();
    phase_free_distance(&fa, &fb)
}

/// Phase-free distance specialised to `4x4` matrices.
pub fn phase_free_distance4(a: &Mat4, b: &Mat4) -> f64 {
    let fa: Vec<C64> = a.iter().flatten().copied().collect();
    let fb: Vec<C64> = b.iter().flatten().copied().collect();
    phase_free_distance(&fa, &fb)
}

/// The four one-qubit Pauli matrices indexed I, X, Y, Z.
pub fn pauli_mat(idx: usize) -> Mat2 {
    match idx {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, ci(0.0, -1.0)], [ci(0.0, 1.0), ZERO]],
        3 => [[ONE, ZERO], [ZERO, c(-1.0)]],
        _ => panic!("pauli index out of range: {idx}"),
    }
}
