//! Exact two-qubit synthesis over CX or CZ plus single-qubit rotations.
//!
//! Local qubit 0 is the first tensor factor of the 4x4 matrix.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::ir::{BasisGate, Circuit, Gate, TwoQubitBlock};
use crate::linalg::{
    canonical_gate, exp_involution2, hadamard, id4, kron, phase_aligned_diff, rotation, zyz_angles, Mat2, Mat4,
    Pauli,
};

use super::weyl::{kak, WeylCoords, CHAMBER_TOL};

/// Blocks whose coordinates all fall below this synthesize to no two-qubit gate.
pub const ZERO_TOL: f64 = 1e-12;
/// Maximum phase-aligned deviation accepted from a synthesized sequence.
pub const SYNTH_TOL: f64 = 1e-9;

/// Minimal CNOT count of the class with these chamber coordinates.
pub fn cnot_count(c: &WeylCoords) -> usize {
    if c.c1.abs() < ZERO_TOL && c.c2.abs() < ZERO_TOL && c.c3.abs() < ZERO_TOL {
        0
    } else if (c.c1 - FRAC_PI_4).abs() < CHAMBER_TOL && c.c2.abs() < CHAMBER_TOL && c.c3.abs() < CHAMBER_TOL {
        1
    } else if c.c3.abs() < CHAMBER_TOL {
        2
    } else {
        3
    }
}

/// True when only the first coordinate is nonzero (a ZZ-type interaction).
pub fn is_zz_class(c: &WeylCoords) -> bool {
    c.c2.abs() < CHAMBER_TOL && c.c3.abs() < CHAMBER_TOL
}

#[derive(Clone, Debug)]
enum Item {
    One(usize, Mat2),
    Cx(usize, usize),
}

/// Item sequence for `Can(c)`, exact up to a global phase.
fn canonical_core(c: &WeylCoords, count: usize) -> Vec<Item> {
    use Item::*;
    let (a, b, cc) = (c.c1, c.c2, c.c3);
    match count {
        0 => Vec::new(),
        1 => vec![
            One(0, hadamard()),
            Cx(0, 1),
            One(0, exp_involution2(FRAC_PI_4, &Pauli::Z.matrix())),
            One(1, exp_involution2(FRAC_PI_4, &Pauli::X.matrix())),
            One(0, hadamard()),
        ],
        2 => vec![
            One(0, rotation(Pauli::X, FRAC_PI_2)),
            One(1, rotation(Pauli::X, FRAC_PI_2)),
            Cx(0, 1),
            One(0, exp_involution2(a, &Pauli::X.matrix())),
            One(1, exp_involution2(b, &Pauli::Z.matrix())),
            Cx(0, 1),
            One(0, rotation(Pauli::X, -FRAC_PI_2)),
            One(1, rotation(Pauli::X, -FRAC_PI_2)),
        ],
        _ => vec![
            One(1, rotation(Pauli::Z, -FRAC_PI_2)),
            Cx(1, 0),
            One(0, rotation(Pauli::Z, FRAC_PI_2 - 2.0 * cc)),
            One(1, rotation(Pauli::Y, 2.0 * a - FRAC_PI_2)),
            Cx(0, 1),
            One(1, rotation(Pauli::Y, FRAC_PI_2 - 2.0 * b)),
            Cx(1, 0),
            One(0, rotation(Pauli::Z, FRAC_PI_2)),
        ],
    }
}

fn wrap(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Emit a 2x2 unitary as `Rz(lambda) Ry(theta) Rz(phi)` in application order,
/// dropping rotations that are the identity to machine precision.
pub fn emit_single(u: &Mat2, qubit: usize, out: &mut Vec<Gate>) {
    let (phi, theta, lambda, _) = zyz_angles(u);
    for (axis, angle) in [(Pauli::Z, lambda), (Pauli::Y, theta), (Pauli::Z, phi)] {
        let angle = wrap(angle);
        if angle.abs() > 1e-14 {
            out.push(Gate::Rot { axis, angle, qubit });
        }
    }
}

/// Fuse adjacent single-qubit items and lower CX to the requested basis.
fn lower(items: Vec<Item>, basis: BasisGate) -> Result<Vec<Gate>> {
    let mut pending: [Option<Mat2>; 2] = [None, None];
    let mut out = Vec::new();
    let push_one = |pending: &mut [Option<Mat2>; 2], q: usize, u: Mat2| {
        pending[q] = Some(match pending[q] {
            Some(p) => u * p,
            None => u,
        });
    };
    let flush = |pending: &mut [Option<Mat2>; 2], q: usize, out: &mut Vec<Gate>| {
        if let Some(u) = pending[q].take() {
            emit_single(&u, q, out);
        }
    };
    for item in items {
        match item {
            Item::One(q, u) => push_one(&mut pending, q, u),
            Item::Cx(c, t) => match basis {
                BasisGate::CX => {
                    flush(&mut pending, c, &mut out);
                    flush(&mut pending, t, &mut out);
                    out.push(Gate::Basis { kind: BasisGate::CX, qubits: (c, t) });
                }
                BasisGate::CZ => {
                    push_one(&mut pending, t, hadamard());
                    flush(&mut pending, c, &mut out);
                    flush(&mut pending, t, &mut out);
                    out.push(Gate::Basis { kind: BasisGate::CZ, qubits: (c, t) });
                    push_one(&mut pending, t, hadamard());
                }
                other => return Err(Error::UnknownGateSet(other.name().to_string())),
            },
        }
    }
    flush(&mut pending, 0, &mut out);
    flush(&mut pending, 1, &mut out);
    Ok(out)
}

/// Unitary of a two-qubit gate list on local qubits 0 and 1.
pub fn sequence_matrix(gates: &[Gate]) -> Mat4 {
    let mut u = id4();
    for g in gates {
        let step = match g {
            Gate::Rot { axis, angle, qubit } => {
                let r = rotation(*axis, *angle);
                if *qubit == 0 {
                    kron(&r, &Mat2::identity())
                } else {
                    kron(&Mat2::identity(), &r)
                }
            }
            Gate::Basis { kind, qubits } => {
                let m = kind.matrix().expect("simulatable basis gate");
                if *qubits == (0, 1) {
                    m
                } else {
                    let s = crate::linalg::swap_matrix();
                    s * m * s
                }
            }
            other => panic!("unexpected gate in local sequence: {other:?}"),
        };
        u = step * u;
    }
    u
}

#[derive(Clone, Debug)]
pub struct TwoQubitSynthesis {
    pub gates: Vec<Gate>,
    pub two_qubit_gates: usize,
    pub coords: WeylCoords,
    pub residual: f64,
}

/// Exact synthesis of `u` with the Weyl-minimal number of CX (or CZ) gates.
pub fn synth_two_qubit(u: &Mat4, basis: BasisGate) -> Result<TwoQubitSynthesis> {
    let k = kak(u)?;
    let count = cnot_count(&k.coords);
    let mut items = vec![Item::One(0, k.b.0), Item::One(1, k.b.1)];
    items.extend(canonical_core(&k.coords, count));
    items.push(Item::One(0, k.a.0));
    items.push(Item::One(1, k.a.1));
    let gates = lower(items, basis)?;
    let residual = phase_aligned_diff(&sequence_matrix(&gates), u);
    if residual > SYNTH_TOL {
        return Err(Error::SynthesisResidual(residual));
    }
    Ok(TwoQubitSynthesis { gates, two_qubit_gates: count, coords: k.coords, residual })
}

/// SWAP as three alternating CX (or CZ with Hadamards), no KAK needed.
pub fn synth_swap(basis: BasisGate) -> Result<Vec<Gate>> {
    lower(vec![Item::Cx(0, 1), Item::Cx(1, 0), Item::Cx(0, 1)], basis)
}

/// CNOT-basis circuit on two qubits for a block.
pub fn synth_cnot(block: &TwoQubitBlock) -> Result<Circuit> {
    let s = synth_two_qubit(&block.matrix, BasisGate::CX)?;
    let mut c = Circuit::new(2);
    for g in s.gates {
        c.push(g)?;
    }
    Ok(c)
}

/// The canonical gate for coordinates, exposed for tests and diagnostics.
pub fn canonical_matrix(c: &WeylCoords) -> Mat4 {
    canonical_gate(c.c1, c.c2, c.c3)
}
