//! KAK decomposition and Weyl-chamber coordinates of two-qubit unitaries.
//!
//! Every `U` in U(4) factors as `e^{i phase} (A0 ⊗ A1) Can(c1, c2, c3) (B0 ⊗ B1)`
//! with `Can(c) = exp(i (c1 XX + c2 YY + c3 ZZ))`. After canonicalization the
//! coordinates satisfy `pi/4 >= c1 >= c2 >= |c3|`, and `c3 >= 0` when `c1 = pi/4`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    canonical_gate, kron, max_abs_diff, phase_aligned_diff, rotation, tensor_factor, unitarity_error, Mat2, Mat4,
    Pauli, C64, I, ONE, ZERO,
};

/// Tolerance for accepting a matrix as unitary.
pub const UNITARY_TOL: f64 = 1e-10;
/// Coordinates closer than this to a chamber face count as lying on it.
pub const CHAMBER_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylCoords {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl WeylCoords {
    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }
}

/// `U = e^{i phase} (a.0 ⊗ a.1) Can(coords) (b.0 ⊗ b.1)`.
#[derive(Clone, Debug)]
pub struct Kak {
    pub phase: f64,
    pub a: (Mat2, Mat2),
    pub b: (Mat2, Mat2),
    pub coords: WeylCoords,
}

impl Kak {
    pub fn reconstruct(&self) -> Mat4 {
        let c = self.coords;
        kron(&self.a.0, &self.a.1) * canonical_gate(c.c1, c.c2, c.c3) * kron(&self.b.0, &self.b.1)
            * C64::from_polar(1.0, self.phase)
    }
}

/// Columns map the computational basis to the magic basis, in which local
/// unitaries become real orthogonal and `Can` becomes diagonal.
fn magic() -> Mat4 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let r = C64::new(s, 0.0);
    let j = C64::new(0.0, s);
    Mat4::new(r, ZERO, ZERO, j, ZERO, j, r, ZERO, ZERO, j, -r, ZERO, r, ZERO, ZERO, -j)
}

fn pauli_pair(p: Pauli) -> Mat4 {
    kron(&p.matrix(), &p.matrix())
}

/// Signs of XX, YY, ZZ on the magic basis vectors.
fn magic_signs() -> [[f64; 4]; 3] {
    let m = magic();
    let mut out = [[0.0; 4]; 3];
    for (j, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
        let d = m.adjoint() * pauli_pair(p) * m;
        for k in 0..4 {
            out[j][k] = d[(k, k)].re;
        }
    }
    out
}

/// Real orthogonal `P` with `P^T m2 P` diagonal, for complex symmetric unitary `m2`.
fn diagonalize_symmetric_unitary(m2: &Mat4) -> Result<Matrix4<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_6b);
    for attempt in 0..64 {
        let r: f64 = if attempt == 0 { 0.618_033_988_749_895 } else { rng.random_range(-2.0..2.0) };
        let a = Matrix4::<f64>::from_fn(|i, j| m2[(i, j)].re + r * m2[(i, j)].im);
        let a = (a + a.transpose()) * 0.5;
        let p = SymmetricEigen::new(a).eigenvectors;
        let pc = p.map(|x| C64::new(x, 0.0));
        let d = pc.transpose() * m2 * pc;
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-9 {
            return Ok(p);
        }
    }
    Err(Error::Internal("magic-basis diagonalization did not converge".into()))
}

/// Raw decomposition: coordinates are not yet folded into the chamber.
fn kak_raw(u: &Mat4) -> Result<Kak> {
    let err = unitarity_error(u);
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    let det = u.determinant();
    let phase = det.arg() / 4.0;
    let us = u * C64::from_polar(1.0, -phase);
    let m = magic();
    let up = m.adjoint() * us * m;
    let m2 = up.transpose() * up;
    let mut p = diagonalize_symmetric_unitary(&m2)?;
    if p.determinant() < 0.0 {
        for i in 0..4 {
            p[(i, 0)] = -p[(i, 0)];
        }
    }
    let pc = p.map(|x| C64::new(x, 0.0));
    let diag = pc.transpose() * m2 * pc;
    let mut d = [0.0; 4];
    for k in 0..4 {
        d[k] = diag[(k, k)].arg() / 2.0;
    }
    d[3] = -(d[0] + d[1] + d[2]);
    let inv = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| C64::from_polar(1.0, -d[k])));
    let k1 = m * (up * pc * inv) * m.adjoint();
    let k2 = m * pc.transpose() * m.adjoint();
    let (a0, a1, ra) = tensor_factor(&k1);
    let (b0, b1, rb) = tensor_factor(&k2);
    if ra > 1e-9 || rb > 1e-9 {
        return Err(Error::Internal(format!("KAK local factors not separable ({ra:.2e}, {rb:.2e})")));
    }
    let s = magic_signs();
    let c: Vec<f64> = (0..3).map(|j| (0..4).map(|k| s[j][k] * d[k]).sum::<f64>() / 4.0).collect();
    Ok(Kak { phase, a: (a0, a1), b: (b0, b1), coords: WeylCoords { c1: c[0], c2: c[1], c3: c[2] } })
}

/// Decomposition state `e^{i phase} L Can(c) R` under chamber moves.
struct Fold {
    phase: f64,
    l: Mat4,
    r: Mat4,
    c: [f64; 3],
}

impl Fold {
    /// `c_k -= n pi/2`, using `exp(i pi/2 PP) = i PP`.
    fn shift(&mut self, k: usize, n: i64) {
        if n == 0 {
            return;
        }
        let pp = pauli_pair([Pauli::X, Pauli::Y, Pauli::Z][k]);
        if n.rem_euclid(2) == 1 {
            self.r = pp * self.r;
        }
        self.c[k] -= n as f64 * FRAC_PI_2;
        self.phase += n as f64 * FRAC_PI_2;
    }

    /// Negate the two coordinates other than `keep` by conjugating with `P ⊗ I`.
    fn flip(&mut self, keep: usize) {
        let f = kron(&[Pauli::X, Pauli::Y, Pauli::Z][keep].matrix(), &Mat2::identity());
        self.l *= f;
        self.r = f * self.r;
        for k in 0..3 {
            if k != keep {
                self.c[k] = -self.c[k];
            }
        }
    }

    /// Exchange coordinates `i` and `j` with a local `v ⊗ v` satisfying
    /// `V Can(c) V^dag = Can(c with i, j exchanged)`.
    fn exchange(&mut self, i: usize, j: usize) {
        let v = match (i.min(j), i.max(j)) {
            (0, 1) => Mat2::new(ONE, ZERO, ZERO, I),
            (1, 2) => rotation(Pauli::X, FRAC_PI_2),
            (0, 2) => rotation(Pauli::Y, FRAC_PI_2),
            _ => unreachable!("coordinate index out of range"),
        };
        let vv = kron(&v, &v);
        self.l *= vv.adjoint();
        self.r = vv * self.r;
        self.c.swap(i, j);
    }
}

/// Full decomposition with coordinates in the canonical chamber.
pub fn kak(u: &Mat4) -> Result<Kak> {
    let raw = kak_raw(u)?;
    let c = raw.coords;
    let mut f = Fold {
        phase: raw.phase,
        l: kron(&raw.a.0, &raw.a.1),
        r: kron(&raw.b.0, &raw.b.1),
        c: [c.c1, c.c2, c.c3],
    };
    for k in 0..3 {
        let n = ((f.c[k] - FRAC_PI_4) / FRAC_PI_2).ceil() as i64;
        f.shift(k, n);
    }
    for (i, j) in [(0, 1), (1, 2), (0, 1)] {
        if f.c[i].abs() < f.c[j].abs() {
            f.exchange(i, j);
        }
    }
    match (f.c[0] < 0.0, f.c[1] < 0.0) {
        (true, true) => f.flip(2),
        (true, false) => f.flip(1),
        (false, true) => f.flip(0),
        (false, false) => {}
    }
    if f.c[2] < 0.0 && (f.c[0] - FRAC_PI_4).abs() < CHAMBER_TOL {
        f.shift(0, 1);
        f.flip(1);
    }
    let (a0, a1, _) = tensor_factor(&f.l);
    let (b0, b1, _) = tensor_factor(&f.r);
    let out = Kak { phase: f.phase, a: (a0, a1), b: (b0, b1), coords: WeylCoords { c1: f.c[0], c2: f.c[1], c3: f.c[2] } };
    let res = max_abs_diff(&out.reconstruct(), u);
    if res > 1e-9 {
        let aligned = phase_aligned_diff(&out.reconstruct(), u);
        return Err(Error::SynthesisResidual(res.min(aligned)));
    }
    Ok(out)
}

pub fn weyl_coordinates(u: &Mat4) -> Result<WeylCoords> {
    kak(u).map(|k| k.coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{exp_involution4, id4, swap_matrix};

    fn close(c: WeylCoords, want: [f64; 3]) -> bool {
        c.as_array().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9)
    }

    #[test]
    fn magic_basis_diagonalizes_pauli_pairs() {
        let s = magic_signs();
        for row in s {
            assert!(row.iter().all(|x| (x.abs() - 1.0).abs() < 1e-12));
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn known_coordinates() {
        assert!(close(weyl_coordinates(&id4()).unwrap(), [0.0, 0.0, 0.0]));
        assert!(close(weyl_coordinates(&swap_matrix()).unwrap(), [FRAC_PI_4, FRAC_PI_4, FRAC_PI_4]));
        let zz = exp_involution4(0.3, &pauli_pair(Pauli::Z));
        assert!(close(weyl_coordinates(&zz).unwrap(), [0.3, 0.0, 0.0]));
        let cx = crate::linalg::cx_matrix();
        assert!(close(weyl_coordinates(&cx).unwrap(), [FRAC_PI_4, 0.0, 0.0]));
    }

    #[test]
    fn rejects_non_unitary() {
        let m = id4() * C64::new(1.1, 0.0);
        assert!(matches!(kak(&m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn chamber_folding_round_trips() {
        let cases = [[1.3, -0.2, 0.7], [-0.9, 2.1, -0.4], [FRAC_PI_4, 0.1, -0.05], [0.0, 0.0, -0.3]];
        for c in cases {
            let l = kron(&rotation(Pauli::Y, 0.3), &rotation(Pauli::X, -1.2));
            let r = kron(&rotation(Pauli::Z, 2.2), &rotation(Pauli::Y, 0.5));
            let u = l * canonical_gate(c[0], c[1], c[2]) * r;
            let k = kak(&u).unwrap();
            let w = k.coords;
            assert!(FRAC_PI_4 + 1e-12 >= w.c1 && w.c1 + 1e-12 >= w.c2 && w.c2 + 1e-12 >= w.c3.abs(), "{w:?}");
            assert!(max_abs_diff(&k.reconstruct(), &u) < 1e-9);
        }
    }
}
