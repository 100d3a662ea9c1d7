//! Lowering scheduled circuits to hardware gates and counting them.

pub mod cnot;
pub mod weyl;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{BasisGate, Circuit, Gate};
use crate::scheduler::{ScheduledCircuit, ScheduledOp};

pub use cnot::{cnot_count, is_zz_class, synth_cnot, synth_swap, synth_two_qubit, TwoQubitSynthesis};
pub use weyl::{kak, weyl_coordinates, Kak, WeylCoords};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateSetName {
    Cnot,
    Cz,
    Syc,
    Iswap,
}

impl FromStr for GateSetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Ok(GateSetName::Cnot),
            "cz" => Ok(GateSetName::Cz),
            "syc" | "sycamore" => Ok(GateSetName::Syc),
            "iswap" => Ok(GateSetName::Iswap),
            _ => Err(Error::UnknownGateSet(s.to_string())),
        }
    }
}

/// Target two-qubit gate set. CNOT and CZ are synthesized exactly; SYC and
/// iSWAP are counted with a per-class cost model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSet {
    pub name: GateSetName,
    #[serde(default = "default_generic")]
    pub generic_cost: usize,
    #[serde(default = "default_zz")]
    pub zz_cost: usize,
}

fn default_generic() -> usize {
    3
}

fn default_zz() -> usize {
    2
}

impl GateSet {
    pub fn new(name: GateSetName) -> Self {
        GateSet { name, generic_cost: default_generic(), zz_cost: default_zz() }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(Self::new(s.parse()?))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gs: GateSet = serde_json::from_str(text)?;
        if gs.zz_cost > gs.generic_cost {
            return Err(Error::Invalid("zz_cost may not exceed generic_cost".into()));
        }
        Ok(gs)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.name, GateSetName::Cnot | GateSetName::Cz)
    }

    /// Basis gate written to circuit files. Model gate sets emit CX.
    pub fn emit_basis(&self) -> BasisGate {
        match self.name {
            GateSetName::Cz => BasisGate::CZ,
            _ => BasisGate::CX,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            GateSetName::Cnot => "CNOT",
            GateSetName::Cz => "CZ",
            GateSetName::Syc => "SYC",
            GateSetName::Iswap => "ISWAP",
        }
    }

    /// Two-qubit gates charged for a block with these coordinates.
    pub fn model_cost(&self, c: &WeylCoords) -> usize {
        match cnot_count(c) {
            0 => 0,
            _ if is_zz_class(c) => self.zz_cost,
            _ => self.generic_cost,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub two_qubit_count: usize,
    pub two_qubit_depth: usize,
    pub total_depth: usize,
    pub swaps: usize,
    pub swaps_dressed: usize,
    pub depth_blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OpKind {
    Block { id: usize, pair: (usize, usize) },
    Dressed { id: usize, pair: (usize, usize) },
    Swap,
    Single { id: usize, qubit: usize },
}

/// One scheduled operation and the contiguous run of hardware gates it became.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmittedOp {
    pub kind: OpKind,
    pub phys: Vec<usize>,
    pub gates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expanded {
    pub circuit: Circuit,
    pub ops: Vec<EmittedOp>,
}

fn relabel(gates: Vec<Gate>, phys: (usize, usize)) -> Vec<Gate> {
    let p = |q: usize| if q == 0 { phys.0 } else { phys.1 };
    gates
        .into_iter()
        .map(|g| match g {
            Gate::Rot { axis, angle, qubit } => Gate::Rot { axis, angle, qubit: p(qubit) },
            Gate::Basis { kind, qubits } => Gate::Basis { kind, qubits: (p(qubits.0), p(qubits.1)) },
            other => other,
        })
        .collect()
}

/// Lower every cycle to basis gates on physical qubits.
pub fn expand(sc: &ScheduledCircuit, gs: &GateSet) -> Result<Expanded> {
    let basis = gs.emit_basis();
    let mut circuit = Circuit::new(sc.m);
    circuit.initial_map = Some(sc.initial_map.as_slice().to_vec());
    circuit.final_map = Some(sc.final_map.as_slice().to_vec());
    let mut ops = Vec::new();
    for cycle in &sc.cycles {
        for g in &cycle.gates {
            let (kind, local) = match &g.op {
                ScheduledOp::Swap { .. } => (OpKind::Swap, synth_swap(basis)?),
                ScheduledOp::Block(b) => {
                    (OpKind::Block { id: b.id, pair: b.pair }, synth_two_qubit(&b.matrix, basis)?.gates)
                }
                ScheduledOp::Dressed { block, .. } => (
                    OpKind::Dressed { id: block.id, pair: block.pair },
                    synth_two_qubit(&block.matrix, basis)?.gates,
                ),
            };
            let gates = relabel(local, g.phys);
            ops.push(EmittedOp { kind, phys: vec![g.phys.0, g.phys.1], gates: gates.len() });
            for gate in gates {
                circuit.push(gate)?;
            }
        }
        for s in &cycle.singles {
            let mut gates = Vec::new();
            cnot::emit_single(&s.op.matrix, s.phys, &mut gates);
            ops.push(EmittedOp {
                kind: OpKind::Single { id: s.op.id, qubit: s.op.qubit },
                phys: vec![s.phys],
                gates: gates.len(),
            });
            for gate in gates {
                circuit.push(gate)?;
            }
        }
    }
    Ok(Expanded { circuit, ops })
}

#[derive(Clone, Copy)]
enum Slot {
    One(usize),
    Two(usize, usize),
}

/// `(two_qubit_depth, total_depth)`. Two-qubit depth levelizes two-qubit gates
/// alone; total depth levelizes everything with consecutive single-qubit
/// gates on a qubit sharing one layer.
fn levelize(m: usize, slots: impl IntoIterator<Item = Slot>) -> (usize, usize) {
    let mut two = vec![0usize; m];
    let mut tot = vec![0usize; m];
    let mut single_open = vec![false; m];
    for s in slots {
        match s {
            Slot::One(q) => {
                if !single_open[q] {
                    tot[q] += 1;
                    single_open[q] = true;
                }
            }
            Slot::Two(a, b) => {
                let l2 = two[a].max(two[b]) + 1;
                two[a] = l2;
                two[b] = l2;
                let lt = tot[a].max(tot[b]) + 1;
                tot[a] = lt;
                tot[b] = lt;
                single_open[a] = false;
                single_open[b] = false;
            }
        }
    }
    (two.into_iter().max().unwrap_or(0), tot.into_iter().max().unwrap_or(0))
}

fn circuit_slots(c: &Circuit) -> Vec<Slot> {
    c.gates
        .iter()
        .map(|g| {
            let q = g.qubits();
            if q.len() == 2 {
                Slot::Two(q[0], q[1])
            } else {
                Slot::One(q[0])
            }
        })
        .collect()
}

/// Hardware gate counts and depths of a scheduled circuit.
pub fn count_hw(sc: &ScheduledCircuit, gs: &GateSet) -> Result<Metrics> {
    let (two_qubit_count, (two_qubit_depth, total_depth)) = if gs.is_exact() {
        let ex = expand(sc, gs)?;
        (ex.circuit.two_qubit_count(), levelize(sc.m, circuit_slots(&ex.circuit)))
    } else {
        let mut slots = Vec::new();
        let mut count = 0;
        for cycle in &sc.cycles {
            for g in &cycle.gates {
                let cost = match &g.op {
                    ScheduledOp::Swap { .. } => gs.generic_cost,
                    ScheduledOp::Block(b) | ScheduledOp::Dressed { block: b, .. } => {
                        gs.model_cost(&weyl_coordinates(&b.matrix)?)
                    }
                };
                count += cost;
                let (a, b) = g.phys;
                slots.push(Slot::One(a));
                slots.push(Slot::One(b));
                for _ in 0..cost {
                    slots.extend([Slot::Two(a, b), Slot::One(a), Slot::One(b)]);
                }
            }
            slots.extend(cycle.singles.iter().map(|s| Slot::One(s.phys)));
        }
        (count, levelize(sc.m, slots))
    };
    Ok(Metrics {
        two_qubit_count,
        two_qubit_depth,
        total_depth,
        swaps: sc.swaps(),
        swaps_dressed: sc.swaps_dressed(),
        depth_blocks: sc.depth_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{PauliTerm, TwoQubitBlock};
    use crate::scheduler::{color_schedule, SinglesPolicy};

    #[test]
    fn empty_circuit_has_zero_metrics() {
        let sc = color_schedule(&[], &[], 3, SinglesPolicy::Interleaved).unwrap();
        for name in ["cnot", "cz", "syc", "iswap"] {
            assert_eq!(count_hw(&sc, &GateSet::from_name(name).unwrap()).unwrap(), Metrics::default());
        }
    }

    #[test]
    fn gate_set_parsing() {
        assert!(matches!(GateSet::from_name("toffoli"), Err(Error::UnknownGateSet(_))));
        let gs = GateSet::from_json(r#"{"name": "SYC", "generic_cost": 3, "zz_cost": 2}"#).unwrap();
        assert_eq!(gs.name, GateSetName::Syc);
        assert!(GateSet::from_json(r#"{"name": "SYC", "generic_cost": 1, "zz_cost": 2}"#).is_err());
        assert!(GateSet::from_json(r#"{"name": "SYC", "extra": 1}"#).is_err());
    }

    #[test]
    fn model_counts_heisenberg_and_zz() {
        let heis = TwoQubitBlock::new(
            0,
            vec![PauliTerm::two("XX", 0, 1, 0.3), PauliTerm::two("YY", 0, 1, 0.2), PauliTerm::two("ZZ", 0, 1, 0.1)],
            1.0,
        )
        .unwrap();
        let zz = TwoQubitBlock::new(1, vec![PauliTerm::two("ZZ", 1, 2, 0.4)], 1.0).unwrap();
        let sc = color_schedule(&[heis, zz], &[], 3, SinglesPolicy::Interleaved).unwrap();
        let syc = count_hw(&sc, &GateSet::from_name("syc").unwrap()).unwrap();
        assert_eq!(syc.two_qubit_count, 5);
        let cx = count_hw(&sc, &GateSet::from_name("cnot").unwrap()).unwrap();
        let cz = count_hw(&sc, &GateSet::from_name("cz").unwrap()).unwrap();
        assert_eq!(cx.two_qubit_count, 5);
        assert_eq!(cz.two_qubit_count, cx.two_qubit_count);
        assert_eq!(cx.two_qubit_depth, 5);
    }

    #[test]
    fn levelize_fuses_single_runs() {
        let slots = [Slot::One(0), Slot::One(0), Slot::Two(0, 1), Slot::One(1), Slot::One(1)];
        assert_eq!(levelize(2, slots), (1, 3));
    }
}
