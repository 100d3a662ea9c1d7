//! Small dense complex matrices used throughout the compiler.
//!
//! Two-qubit matrices are written in the textbook (big-endian) order of the
//! ordered pair they act on: for a gate on `(first, second)` the basis index is
//! `2 * bit(first) + bit(second)`, so `kron(a, b)` applies `a` to `first`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::X => Mat2::new(ZERO, ONE, ONE, ZERO),
            Pauli::Y => Mat2::new(ZERO, -I, I, ZERO),
            Pauli::Z => Mat2::new(ONE, ZERO, ZERO, -ONE),
        }
    }
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

pub fn id2() -> Mat2 {
    Mat2::identity()
}

pub fn id4() -> Mat4 {
    Mat4::identity()
}

/// `exp(i * theta * P)` for a Hermitian involution `P` (`P^2 = I`).
pub fn exp_involution2(theta: f64, p: &Mat2) -> Mat2 {
    id2() * C64::new(theta.cos(), 0.0) + p * C64::new(0.0, theta.sin())
}

pub fn exp_involution4(theta: f64, p: &Mat4) -> Mat4 {
    id4() * C64::new(theta.cos(), 0.0) + p * C64::new(0.0, theta.sin())
}

/// `exp(i (a XX + b YY + c ZZ))`.
pub fn canonical_gate(a: f64, b: f64, c: f64) -> Mat4 {
    let xx = kron(&Pauli::X.matrix(), &Pauli::X.matrix());
    let yy = kron(&Pauli::Y.matrix(), &Pauli::Y.matrix());
    let zz = kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
    exp_involution4(a, &xx) * exp_involution4(b, &yy) * exp_involution4(c, &zz)
}

pub fn swap_matrix() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// CNOT with the first qubit of the pair as control.
pub fn cx_matrix() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

pub fn cz_matrix() -> Mat4 {
    Mat4::from_diagonal(&nalgebra::Vector4::new(ONE, ONE, ONE, -ONE))
}

/// Rotation `exp(-i angle/2 P)`.
pub fn rotation(axis: Pauli, angle: f64) -> Mat2 {
    exp_involution2(-angle / 2.0, &axis.matrix())
}

pub fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::new(C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0))
}

pub fn max_abs_diff<const N: usize>(
    a: &nalgebra::SMatrix<C64, N, N>,
    b: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Max entry deviation of `u` from the identity after `u^dagger u`.
pub fn unitarity_error<const N: usize>(u: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let p = u.adjoint() * u;
    max_abs_diff(&p, &nalgebra::SMatrix::<C64, N, N>::identity())
}

/// Max entry deviation between `a` and `b` after removing the relative global
/// phase, anchored at the largest-magnitude entry of `b`.
pub fn phase_aligned_diff<const N: usize>(
    a: &nalgebra::SMatrix<C64, N, N>,
    b: &nalgebra::SMatrix<C64, N, N>,
) -> f64 {
    let (k, _) = b
        .iter()
        .enumerate()
        .fold((0, -1.0), |acc, (k, z)| if z.norm() > acc.1 { (k, z.norm()) } else { acc });
    let ratio = a[k] / b[k];
    let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { ONE };
    a.iter().zip(b.iter()).map(|(x, y)| (x - phase * y).norm()).fold(0.0, f64::max)
}

/// ZYZ Euler angles `(phi, theta, lambda, alpha)` with
/// `u = e^{i alpha} Rz(phi) Ry(theta) Rz(lambda)`.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64, f64) {
    let det = u.determinant();
    let alpha = det.arg() / 2.0;
    let v = u * C64::from_polar(1.0, -alpha);
    let a = v[(0, 0)];
    let b = v[(1, 0)];
    let theta = 2.0 * b.norm().atan2(a.norm());
    let sum = -2.0 * a.arg();
    let diff = 2.0 * b.arg();
    let (phi, lambda) = if b.norm() < 1e-14 {
        (sum, 0.0)
    } else if a.norm() < 1e-14 {
        (diff, 0.0)
    } else {
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    (phi, theta, lambda, alpha)
}

/// Factor a 4x4 product matrix as `a ⊗ b`; `b` is normalized to unit determinant.
/// Returns the factors and the residual `||k - a ⊗ b||_max`.
pub fn tensor_factor(k: &Mat4) -> (Mat2, Mat2, f64) {
    // pick the 2x2 block with the largest norm: block (i, j) = a[i,j] * b
    let mut best = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let norm: f64 = (0..2)
                .flat_map(|r| (0..2).map(move |c| (r, c)))
                .map(|(r, c)| k[(2 * i + r, 2 * j + c)].norm_sqr())
                .sum();
            if norm > best.2 {
                best = (i, j, norm);
            }
        }
    }
    let (bi, bj, _) = best;
    let mut b = Mat2::from_fn(|r, c| k[(2 * bi + r, 2 * bj + c)]);
    let det = b.determinant();
    b /= det.sqrt();
    let bd = b.adjoint();
    let a = Mat2::from_fn(|i, j| {
        let block = Mat2::from_fn(|r, c| k[(2 * i + r, 2 * j + c)]);
        (bd * block).trace() / 2.0
    });
    let residual = max_abs_diff(&kron(&a, &b), k);
    (a, b, residual)
}
