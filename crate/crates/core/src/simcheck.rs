//! Dense-unitary oracle for compiled circuits.
//!
//! Qubit `k` of a register is bit `k` of the basis index (little-endian).
//! A compiled circuit is checked column by column: logical basis state `x` is
//! loaded through the initial map, pushed through every hardware gate, and
//! compared with `U_ref |x>` read back through the final map. Physical qubits
//! that never hold a logical qubit must stay in `|0>`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ir::{unify_terms, Circuit, Gate, Hamiltonian};
use crate::linalg::{rotation, Mat2, Mat4, C64, ZERO};
use crate::synth::{Expanded, OpKind};

pub const DEFAULT_CAP: usize = 12;
pub const EQUIV_TOL: f64 = 1e-9;
/// Extra qubits beyond the cap tolerated in the physical working register.
const REGISTER_SLACK: usize = 8;

/// A logical operator in the reference product.
#[derive(Clone, Debug)]
pub enum RefOp {
    Two { pair: (usize, usize), matrix: Mat4 },
    One { qubit: usize, matrix: Mat2 },
}

fn apply1(state: &mut [C64], q: usize, u: &Mat2) {
    let bit = 1usize << q;
    for i in 0..state.len() {
        if i & bit == 0 {
            let j = i | bit;
            let (a, b) = (state[i], state[j]);
            state[i] = u[(0, 0)] * a + u[(0, 1)] * b;
            state[j] = u[(1, 0)] * a + u[(1, 1)] * b;
        }
    }
}

/// `u` in big-endian order over `(first, second)`.
fn apply2(state: &mut [C64], first: usize, second: usize, u: &Mat4) {
    let (b0, b1) = (1usize << first, 1usize << second);
    for i in 0..state.len() {
        if i & (b0 | b1) == 0 {
            let idx = [i, i | b1, i | b0, i | b0 | b1];
            let v = idx.map(|k| state[k]);
            for (r, &k) in idx.iter().enumerate() {
                state[k] = (0..4).map(|c| u[(r, c)] * v[c]).sum();
            }
        }
    }
}

enum Local {
    One(usize, Mat2),
    Two(usize, usize, Mat4),
}

fn lower_gate(g: &Gate) -> Result<Local> {
    Ok(match g {
        Gate::Rot { axis, angle, qubit } => Local::One(*qubit, rotation(*axis, *angle)),
        Gate::Single(s) => Local::One(s.qubit, s.matrix),
        Gate::Basis { kind, qubits } => {
            let m = kind
                .matrix()
                .ok_or_else(|| Error::Invalid(format!("{} has no simulation matrix", kind.name())))?;
            Local::Two(qubits.0, qubits.1, m)
        }
        Gate::Swap(a, b) => Local::Two(*a, *b, crate::linalg::swap_matrix()),
        Gate::Block(b) => Local::Two(b.pair.0, b.pair.1, b.matrix),
        Gate::Unitary { qubits, matrix } => Local::Two(qubits.0, qubits.1, *matrix),
    })
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::AboveCap { qubits: n, cap });
    }
    Ok(())
}

/// Dense unitary of `c` on its `c.n` qubits.
pub fn circuit_unitary(c: &Circuit, cap: usize) -> Result<DMatrix<C64>> {
    check_cap(c.n, cap)?;
    let ops: Vec<Local> = c.gates.iter().map(lower_gate).collect::<Result<_>>()?;
    let dim = 1usize << c.n;
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    let mut state = vec![ZERO; dim];
    for x in 0..dim {
        state.iter_mut().for_each(|s| *s = ZERO);
        state[x] = C64::new(1.0, 0.0);
        run(&mut state, &ops);
        for y in 0..dim {
            u[(y, x)] = state[y];
        }
    }
    Ok(u)
}

fn run(state: &mut [C64], ops: &[Local]) {
    for op in ops {
        match op {
            Local::One(q, m) => apply1(state, *q, m),
            Local::Two(a, b, m) => apply2(state, *a, *b, m),
        }
    }
}

/// Product of `ops` in order (first applied first) on `n` logical qubits.
pub fn reference_unitary(n: usize, ops: &[RefOp], cap: usize) -> Result<DMatrix<C64>> {
    let mut c = Circuit::new(n);
    for op in ops {
        match op {
            RefOp::Two { pair, matrix } => c.push(Gate::Unitary { qubits: *pair, matrix: *matrix })?,
            RefOp::One { qubit, matrix } => c.push(Gate::Single(crate::ir::SingleQubitOp {
                id: 0,
                qubit: *qubit,
                generator: None,
                matrix: *matrix,
            }))?,
        }
    }
    circuit_unitary(&c, cap)
}

#[derive(Clone, Debug, Serialize)]
pub struct Deviation {
    pub max_dev: f64,
    /// Same measure with the phase anchored at the second-largest entry.
    pub max_dev_alt_anchor: f64,
}

/// Compare a physical circuit with `U_ref` under the given maps.
pub fn compare_to_reference(
    circuit: &Circuit,
    n: usize,
    initial: &[usize],
    final_: &[usize],
    u_ref: &DMatrix<C64>,
    cap: usize,
) -> Result<Deviation> {
    check_cap(n, cap)?;
    if initial.len() != n || final_.len() != n {
        return Err(Error::Invalid(format!("maps must cover {n} logical qubits")));
    }
    let mut wires: Vec<usize> = initial.iter().chain(final_).copied().collect();
    for g in &circuit.gates {
        wires.extend(g.qubits());
    }
    wires.sort_unstable();
    wires.dedup();
    if wires.len() > cap + REGISTER_SLACK {
        return Err(Error::AboveCap { qubits: wires.len(), cap: cap + REGISTER_SLACK });
    }
    let pos: HashMap<usize, usize> = wires.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    let remap = |q: usize| pos[&q];
    let ops: Vec<Local> = circuit
        .gates
        .iter()
        .map(|g| {
            lower_gate(g).map(|l| match l {
                Local::One(q, m) => Local::One(remap(q), m),
                Local::Two(a, b, m) => Local::Two(remap(a), remap(b), m),
            })
        })
        .collect::<Result<_>>()?;

    let dim = 1usize << n;
    let place = |map: &[usize], x: usize| -> usize {
        (0..n).filter(|&l| x >> l & 1 == 1).map(|l| 1usize << remap(map[l])).sum()
    };
    let out_index: Vec<usize> = (0..dim).map(|y| place(final_, y)).collect();
    let mut in_image = vec![false; 1usize << wires.len()];
    for &k in &out_index {
        in_image[k] = true;
    }

    let mut proj = DMatrix::<C64>::zeros(dim, dim);
    let mut leak: f64 = 0.0;
    let mut state = vec![ZERO; 1usize << wires.len()];
    for x in 0..dim {
        state.iter_mut().for_each(|s| *s = ZERO);
        state[place(initial, x)] = C64::new(1.0, 0.0);
        run(&mut state, &ops);
        for y in 0..dim {
            proj[(y, x)] = state[out_index[y]];
        }
        for (k, s) in state.iter().enumerate() {
            if !in_image[k] {
                leak = leak.max(s.norm());
            }
        }
    }

    let mut order: Vec<usize> = (0..dim * dim).collect();
    order.sort_by(|&a, &b| u_ref[b].norm().total_cmp(&u_ref[a].norm()));
    let dev_at = |anchor: usize| -> f64 {
        let ratio = proj[anchor] / u_ref[anchor];
        let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { C64::new(1.0, 0.0) };
        proj.iter().zip(u_ref.iter()).map(|(a, b)| (a - phase * b).norm()).fold(leak, f64::max)
    };
    let max_dev = dev_at(order[0]);
    let max_dev_alt_anchor = if dim * dim > 1 { dev_at(order[1]) } else { max_dev };
    Ok(Deviation { max_dev, max_dev_alt_anchor })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EmittedRef {
    Block { id: usize, pair: (usize, usize) },
    Single { id: usize, qubit: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub ok: bool,
    pub max_dev: f64,
    pub max_dev_alt_anchor: f64,
    pub emitted_order: Vec<EmittedRef>,
    pub missing: Vec<String>,
    pub duplicated: Vec<String>,
    pub corrupted: Vec<String>,
    pub identity_permutation: bool,
}

/// One compiled segment checked against the operators of `ham`; each of its
/// operators must be emitted exactly `ham.steps` times.
pub struct Segment<'a> {
    pub expanded: &'a Expanded,
    pub ham: &'a Hamiltonian,
}

/// Verify consecutive segments (layers) as one circuit. The reference is the
/// product of each segment's original operators in emitted order.
pub fn verify_segments(segments: &[Segment<'_>], corrupted: Vec<String>, cap: usize) -> Result<EquivalenceReport> {
    let first = segments.first().ok_or_else(|| Error::Invalid("nothing to verify".into()))?;
    let n = first.ham.n;
    check_cap(n, cap)?;
    let mut circuit = Circuit::new(first.expanded.circuit.n);
    let initial = first.expanded.circuit.initial_map.clone().unwrap_or_else(|| (0..n).collect());
    let mut current_final = initial.clone();
    let mut reference = Vec::new();
    let mut emitted_order = Vec::new();
    let mut missing = Vec::new();
    let mut duplicated = Vec::new();

    for (s, seg) in segments.iter().enumerate() {
        if seg.ham.n != n {
            return Err(Error::Invalid("segments disagree on qubit count".into()));
        }
        let ex = seg.expanded;
        let seg_initial = ex.circuit.initial_map.clone().unwrap_or_else(|| (0..n).collect());
        if seg_initial != current_final {
            return Err(Error::Invalid(format!("segment {s} does not start where the previous one ended")));
        }
        current_final = ex.circuit.final_map.clone().unwrap_or_else(|| seg_initial.clone());
        circuit.gates.extend(ex.circuit.gates.iter().cloned());

        let (blocks, singles) = unify_terms(seg.ham)?;
        let mut block_seen = vec![0usize; blocks.len()];
        let mut single_seen = vec![0usize; singles.len()];
        for op in &ex.ops {
            match &op.kind {
                OpKind::Block { id, pair } | OpKind::Dressed { id, pair } => match blocks.get(*id) {
                    Some(b) if b.pair == *pair => {
                        block_seen[*id] += 1;
                        reference.push(RefOp::Two { pair: b.pair, matrix: b.matrix });
                        emitted_order.push(EmittedRef::Block { id: *id, pair: *pair });
                    }
                    _ => duplicated.push(format!("unknown block {id} on pair {pair:?}")),
                },
                OpKind::Single { id, qubit } => match singles.get(*id) {
                    Some(o) if o.qubit == *qubit => {
                        single_seen[*id] += 1;
                        reference.push(RefOp::One { qubit: o.qubit, matrix: o.matrix });
                        emitted_order.push(EmittedRef::Single { id: *id, qubit: *qubit });
                    }
                    _ => duplicated.push(format!("unknown single-qubit op {id} on qubit {qubit}")),
                },
                OpKind::Swap => {}
            }
        }
        let want = seg.ham.steps;
        for (b, &k) in blocks.iter().zip(&block_seen) {
            if k < want {
                missing.push(format!("layer {s}: block {} on pair {:?} emitted {k} of {want} times", b.id, b.pair));
            } else if k > want {
                duplicated.push(format!("layer {s}: block {} on pair {:?} emitted {k} times", b.id, b.pair));
            }
        }
        for (o, &k) in singles.iter().zip(&single_seen) {
            if k < want {
                missing.push(format!("layer {s}: single {} on qubit {} emitted {k} of {want} times", o.id, o.qubit));
            } else if k > want {
                duplicated.push(format!("layer {s}: single {} on qubit {} emitted {k} times", o.id, o.qubit));
            }
        }
    }

    let u_ref = reference_unitary(n, &reference, cap)?;
    let dev = compare_to_reference(&circuit, n, &initial, &current_final, &u_ref, cap)?;
    let ok = dev.max_dev < EQUIV_TOL && missing.is_empty() && duplicated.is_empty() && corrupted.is_empty();
    Ok(EquivalenceReport {
        ok,
        max_dev: dev.max_dev,
        max_dev_alt_anchor: dev.max_dev_alt_anchor,
        emitted_order,
        missing,
        duplicated,
        corrupted,
        identity_permutation: initial == current_final,
    })
}

/// Single-segment check of a compiled Hamiltonian circuit.
pub fn verify_permutation_equivalence(expanded: &Expanded, h: &Hamiltonian, cap: usize) -> Result<EquivalenceReport> {
    verify_segments(&[Segment { expanded, ham: h }], Vec::new(), cap)
}

/// Multi-layer check: per-layer operators in emitted order, and for an even
/// number of layers the composed qubit permutation must be the identity.
pub fn verify_multilayer(layers: &[Expanded], hams: &[Hamiltonian], cap: usize) -> Result<EquivalenceReport> {
    if layers.len() != hams.len() {
        return Err(Error::Invalid("one Hamiltonian per layer required".into()));
    }
    let segments: Vec<Segment<'_>> =
        layers.iter().zip(hams).map(|(expanded, ham)| Segment { expanded, ham }).collect();
    let mut report = verify_segments(&segments, Vec::new(), cap)?;
    if layers.len() % 2 == 0 && !report.identity_permutation {
        report.ok = false;
        report.corrupted.push("even layer count does not restore the initial map".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::BasisGate;
    use crate::linalg::{cx_matrix, max_abs_diff, Pauli};

    #[test]
    fn empty_circuit_is_identity() {
        let u = circuit_unitary(&Circuit::new(3), DEFAULT_CAP).unwrap();
        assert_eq!(u, DMatrix::identity(8, 8));
    }

    #[test]
    fn cx_embeds_little_endian() {
        let mut c = Circuit::new(2);
        c.push(Gate::Basis { kind: BasisGate::CX, qubits: (0, 1) }).unwrap();
        let u = circuit_unitary(&c, DEFAULT_CAP).unwrap();
        // control is qubit 0 (bit 0): |x1 x0> with x0 = 1 flips x1
        let mut want = DMatrix::<C64>::zeros(4, 4);
        for (from, to) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            want[(to, from)] = C64::new(1.0, 0.0);
        }
        assert_eq!(u, want);
        // the 4x4 big-endian matrix on (1, 0) reads as the textbook CNOT
        let mut c2 = Circuit::new(2);
        c2.push(Gate::Unitary { qubits: (1, 0), matrix: cx_matrix() }).unwrap();
        let v = circuit_unitary(&c2, DEFAULT_CAP).unwrap();
        let text = Mat4::from_fn(|r, c| v[(r, c)]);
        assert!(max_abs_diff(&text, &cx_matrix()) < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(circuit_unitary(&Circuit::new(13), 12), Err(Error::AboveCap { qubits: 13, cap: 12 })));
    }

    #[test]
    fn rotation_and_single_agree() {
        let mut a = Circuit::new(1);
        a.push(Gate::Rot { axis: Pauli::X, angle: 0.4, qubit: 0 }).unwrap();
        let mut b = Circuit::new(1);
        b.push(Gate::Single(crate::ir::SingleQubitOp::pauli_exp(0, 0, Pauli::X, -0.2))).unwrap();
        assert!((circuit_unitary(&a, 2).unwrap() - circuit_unitary(&b, 2).unwrap()).norm() < 1e-15);
    }
}
