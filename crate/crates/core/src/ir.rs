//! Hamiltonians, unified operator blocks, gates and circuits.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, Mat2, Mat4, Pauli};

/// A weighted one- or two-qubit Pauli operator `coeff * P`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PauliTerm {
    pub paulis: String,
    pub qubits: Vec<usize>,
    pub coeff: f64,
}

impl PauliTerm {
    pub fn new(paulis: &str, qubits: &[usize], coeff: f64) -> Self {
        PauliTerm { paulis: paulis.to_string(), qubits: qubits.to_vec(), coeff }
    }

    pub fn two(paulis: &str, u: usize, v: usize, coeff: f64) -> Self {
        Self::new(paulis, &[u, v], coeff)
    }

    pub fn one(pauli: &str, q: usize, coeff: f64) -> Self {
        Self::new(pauli, &[q], coeff)
    }

    fn parsed(&self) -> Result<Vec<Pauli>> {
        let ps: Option<Vec<Pauli>> = self.paulis.chars().map(Pauli::from_char).collect();
        match ps {
            Some(ps) if !ps.is_empty() && ps.len() <= 2 => Ok(ps),
            _ => Err(Error::BadPauli(self.paulis.clone())),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let ps = self.parsed()?;
        if ps.len() != self.qubits.len() {
            return Err(Error::Invalid(format!(
                "Pauli string {:?} has {} letters but {} qubits",
                self.paulis,
                ps.len(),
                self.qubits.len()
            )));
        }
        for &q in &self.qubits {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::DuplicateQubit(self.qubits[0]));
        }
        if !self.coeff.is_finite() {
            return Err(Error::Invalid(format!("non-finite coefficient {}", self.coeff)));
        }
        Ok(())
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// The unordered pair, as `(min, max)`.
    pub fn pair(&self) -> Option<(usize, usize)> {
        match self.qubits.as_slice() {
            &[a, b] => Some((a.min(b), a.max(b))),
            _ => None,
        }
    }

    /// Pauli operator on `(min, max)` orientation.
    fn oriented_matrix(&self) -> Result<Mat4> {
        let ps = self.parsed()?;
        if ps.len() != 2 {
            return Err(Error::Invalid(format!("{:?} is not a two-qubit term", self.paulis)));
        }
        let (a, b) = if self.qubits[0] < self.qubits[1] { (ps[0], ps[1]) } else { (ps[1], ps[0]) };
        Ok(kron(&a.matrix(), &b.matrix()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hamiltonian {
    pub n: usize,
    pub time: f64,
    pub steps: usize,
    pub terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    /// Unordered interacting pairs in order of first appearance.
    pub fn interaction_graph(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut edges = Vec::new();
        for p in self.terms.iter().filter_map(PauliTerm::pair) {
            if seen.insert(p, ()).is_none() {
                edges.push(p);
            }
        }
        edges
    }

    pub fn from_json(text: &str) -> Result<Hamiltonian> {
        let h: Hamiltonian = serde_json::from_str(text)?;
        build_hamiltonian(h.n, h.terms, h.time, h.steps)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hamiltonian serializes")
    }
}

pub fn build_hamiltonian(
    n: usize,
    terms: Vec<PauliTerm>,
    time: f64,
    steps: usize,
) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::Invalid(format!("need at least 2 qubits, got {n}")));
    }
    if steps < 1 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    if !time.is_finite() {
        return Err(Error::Invalid(format!("non-finite time {time}")));
    }
    for t in &terms {
        t.validate(n)?;
    }
    Ok(Hamiltonian { n, time, steps, terms })
}

/// All two-qubit terms acting on one qubit pair, merged into a single unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitBlock {
    pub id: usize,
    pub pair: (usize, usize),
    pub terms: Vec<PauliTerm>,
    pub angle_scale: f64,
    pub dressed: bool,
    #[serde(skip, default = "linalg::id4")]
    pub matrix: Mat4,
}

impl TwoQubitBlock {
    pub fn new(id: usize, terms: Vec<PauliTerm>, t: f64) -> Result<Self> {
        let matrix = block_matrix(&terms, t)?;
        let pair = terms.first().and_then(PauliTerm::pair).ok_or(Error::MixedPairs)?;
        Ok(TwoQubitBlock { id, pair, terms, angle_scale: t, dressed: false, matrix })
    }

    /// The block followed by an exchange of its two qubits.
    pub fn dressed_with_swap(&self) -> TwoQubitBlock {
        TwoQubitBlock { dressed: true, matrix: linalg::swap_matrix() * self.matrix, ..self.clone() }
    }
}

/// `exp(i t coeff P)` on one qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitOp {
    pub id: usize,
    pub qubit: usize,
    /// Generator `(P, theta)` with the op equal to `exp(i theta P)`, when known.
    pub generator: Option<(Pauli, f64)>,
    #[serde(skip, default = "linalg::id2")]
    pub matrix: Mat2,
}

impl SingleQubitOp {
    pub fn pauli_exp(id: usize, qubit: usize, pauli: Pauli, theta: f64) -> Self {
        let matrix = linalg::exp_involution2(theta, &pauli.matrix());
        SingleQubitOp { id, qubit, generator: Some((pauli, theta)), matrix }
    }
}

/// Ordered product of `exp(i t coeff P_k)`, the first term applied first.
pub fn block_matrix(terms: &[PauliTerm], t: f64) -> Result<Mat4> {
    let Some(pair) = terms.first().and_then(PauliTerm::pair) else {
        return Ok(linalg::id4());
    };
    let mut u = linalg::id4();
    for term in terms {
        if term.pair() != Some(pair) {
            return Err(Error::MixedPairs);
        }
        let p = term.oriented_matrix()?;
        u = linalg::exp_involution4(t * term.coeff, &p) * u;
    }
    Ok(u)
}

/// Merge same-pair terms into blocks (ids in order of first appearance) and
/// split off single-qubit terms.
pub fn unify_terms(h: &Hamiltonian) -> Result<(Vec<TwoQubitBlock>, Vec<SingleQubitOp>)> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut grouped: Vec<Vec<PauliTerm>> = Vec::new();
    let mut singles = Vec::new();
    for term in &h.terms {
        match term.pair() {
            Some(p) => {
                let k = *index.entry(p).or_insert_with(|| {
                    grouped.push(Vec::new());
                    grouped.len() - 1
                });
                grouped[k].push(term.clone());
            }
            None => {
                let pauli = term.parsed()?[0];
                singles.push(SingleQubitOp::pauli_exp(
                    singles.len(),
                    term.qubits[0],
                    pauli,
                    h.time * term.coeff,
                ));
            }
        }
    }
    let blocks = grouped
        .into_iter()
        .enumerate()
        .map(|(id, terms)| TwoQubitBlock::new(id, terms, h.time))
        .collect::<Result<Vec<_>>>()?;
    Ok((blocks, singles))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisGate {
    CX,
    CZ,
    SYC,
    ISWAP,
}

impl BasisGate {
    pub fn name(self) -> &'static str {
        match self {
            BasisGate::CX => "CX",
            BasisGate::CZ => "CZ",
            BasisGate::SYC => "SYC",
            BasisGate::ISWAP => "ISWAP",
        }
    }

    /// Exact matrix for the gates the simulator understands.
    pub fn matrix(self) -> Option<Mat4> {
        match self {
            BasisGate::CX => Some(linalg::cx_matrix()),
            BasisGate::CZ => Some(linalg::cz_matrix()),
            BasisGate::ISWAP => {
                let mut m = linalg::swap_matrix() * linalg::I;
                m[(0, 0)] = linalg::ONE;
                m[(3, 3)] = linalg::ONE;
                Some(m)
            }
            BasisGate::SYC => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// A block acting on `block.pair`.
    Block(Box<TwoQubitBlock>),
    Swap(usize, usize),
    Single(SingleQubitOp),
    Basis { kind: BasisGate, qubits: (usize, usize) },
    Rot { axis: Pauli, angle: f64, qubit: usize },
    /// Arbitrary two-qubit unitary on an ordered pair.
    Unitary { qubits: (usize, usize), matrix: Mat4 },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Block(b) => vec![b.pair.0, b.pair.1],
            Gate::Swap(a, b) => vec![*a, *b],
            Gate::Single(s) => vec![s.qubit],
            Gate::Basis { qubits, .. } | Gate::Unitary { qubits, .. } => vec![qubits.0, qubits.1],
            Gate::Rot { qubit, .. } => vec![*qubit],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().len() == 2
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
    pub initial_map: Option<Vec<usize>>,
    pub final_map: Option<Vec<usize>>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, ..Default::default() }
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let qs = gate.qubits();
        for &q in &qs {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { index: q, n: self.n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::DuplicateQubit(qs[0]));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }
}
