//! Line-oriented circuit files.
//!
//! ```text
//! n 6
//! logical 6
//! gateset CNOT
//! initial_map 0 1 2 3 4 5
//! final_map 1 0 2 3 4 5
//! # op block 0 pair=0,1 phys=0,1 gates=5
//! RZ 1.5707963267948966 0
//! CX 0 1
//! ```
//!
//! `n` counts physical qubits. Each `# op` line announces the logical
//! operation the following gates implement and how many there are; the
//! parser uses it to rebuild the emitted order and to detect edited files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ir::{BasisGate, Circuit, Gate};
use crate::linalg::Pauli;
use crate::synth::{EmittedOp, Expanded, OpKind};

fn pair_str(p: (usize, usize)) -> String {
    format!("{},{}", p.0, p.1)
}

fn phys_str(phys: &[usize]) -> String {
    phys.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn gate_line(g: &Gate) -> Result<String> {
    Ok(match g {
        Gate::Basis { kind, qubits } => format!("{} {} {}", kind.name(), qubits.0, qubits.1),
        Gate::Rot { axis, angle, qubit } => format!("R{axis:?} {angle} {qubit}"),
        Gate::Swap(a, b) => format!("SWAP {a} {b}"),
        other => return Err(Error::Invalid(format!("gate {other:?} has no text form"))),
    })
}

fn map_line(key: &str, map: &[usize]) -> String {
    let mut s = key.to_string();
    for q in map {
        let _ = write!(s, " {q}");
    }
    s
}

/// Render an expanded circuit. `logical` is the number of logical qubits.
pub fn write_circuit(ex: &Expanded, logical: usize, gateset: &str) -> Result<String> {
    let c = &ex.circuit;
    let mut out = format!("n {}\nlogical {logical}\ngateset {gateset}\n", c.n);
    let identity: Vec<usize> = (0..logical).collect();
    out += &map_line("initial_map", c.initial_map.as_deref().unwrap_or(&identity));
    out.push('\n');
    out += &map_line("final_map", c.final_map.as_deref().unwrap_or(&identity));
    out.push('\n');
    let mut gates = c.gates.iter();
    for op in &ex.ops {
        let head = match &op.kind {
            OpKind::Block { id, pair } => format!("block {id} pair={}", pair_str(*pair)),
            OpKind::Dressed { id, pair } => format!("dressed {id} pair={}", pair_str(*pair)),
            OpKind::Swap => "swap".to_string(),
            OpKind::Single { id, qubit } => format!("single {id} qubit={qubit}"),
        };
        let _ = writeln!(out, "# op {head} phys={} gates={}", phys_str(&op.phys), op.gates);
        for _ in 0..op.gates {
            let g = gates.next().ok_or_else(|| Error::Internal("op list longer than circuit".into()))?;
            out += &gate_line(g)?;
            out.push('\n');
        }
    }
    for g in gates {
        out += &gate_line(g)?;
        out.push('\n');
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ParsedCircuit {
    pub expanded: Expanded,
    pub logical: usize,
    pub gateset: String,
    /// Ops whose gate count disagrees with their annotation; they are left
    /// out of `expanded.ops`.
    pub corrupted: Vec<String>,
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Invalid(format!("line {line}: cannot parse {s:?}")))
}

fn parse_pair(s: &str, line: usize) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Invalid(format!("line {line}: bad pair {s:?}")))?;
    Ok((parse_num(a, line)?, parse_num(b, line)?))
}

fn parse_gate(tokens: &[&str], line: usize) -> Result<Gate> {
    let q = |i: usize| -> Result<usize> {
        tokens.get(i).ok_or_else(|| Error::Invalid(format!("line {line}: missing operand"))).and_then(|s| parse_num(s, line))
    };
    let kind = match tokens[0] {
        "CX" => Some(BasisGate::CX),
        "CZ" => Some(BasisGate::CZ),
        "SYC" => Some(BasisGate::SYC),
        "ISWAP" => Some(BasisGate::ISWAP),
        _ => None,
    };
    if let Some(kind) = kind {
        return Ok(Gate::Basis { kind, qubits: (q(1)?, q(2)?) });
    }
    let axis = match tokens[0] {
        "RX" => Pauli::X,
        "RY" => Pauli::Y,
        "RZ" => Pauli::Z,
        "SWAP" => return Ok(Gate::Swap(q(1)?, q(2)?)),
        other => return Err(Error::Invalid(format!("line {line}: unknown gate {other:?}"))),
    };
    let angle: f64 = parse_num(tokens.get(1).copied().unwrap_or(""), line)?;
    Ok(Gate::Rot { axis, angle, qubit: q(2)? })
}

struct Pending {
    op: EmittedOp,
    label: String,
    seen: usize,
}

fn parse_op(rest: &[&str], line: usize) -> Result<Pending> {
    let mut fields = std::collections::HashMap::new();
    for t in rest.iter().skip(1) {
        if let Some((k, v)) = t.split_once('=') {
            fields.insert(k, v);
        }
    }
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| Error::Invalid(format!("line {line}: op lacks {k}")));
    let id = || -> Result<usize> { parse_num(rest.get(1).copied().unwrap_or(""), line) };
    let kind = match rest.first().copied() {
        Some("block") => OpKind::Block { id: id()?, pair: parse_pair(field("pair")?, line)? },
        Some("dressed") => OpKind::Dressed { id: id()?, pair: parse_pair(field("pair")?, line)? },
        Some("swap") => OpKind::Swap,
        Some("single") => OpKind::Single { id: id()?, qubit: parse_num(field("qubit")?, line)? },
        other => return Err(Error::Invalid(format!("line {line}: unknown op {other:?}"))),
    };
    let phys = field("phys")?.split(',').map(|s| parse_num(s, line)).collect::<Result<Vec<usize>>>()?;
    let gates = parse_num(field("gates")?, line)?;
    let label = rest.join(" ");
    Ok(Pending { op: EmittedOp { kind, phys, gates }, label, seen: 0 })
}

/// Parse a circuit file written by [`write_circuit`].
pub fn parse_circuit(text: &str) -> Result<ParsedCircuit> {
    let mut n = None;
    let mut logical = None;
    let mut gateset = String::new();
    let mut initial = None;
    let mut final_ = None;
    let mut gates = Vec::new();
    let mut ops = Vec::new();
    let mut corrupted = Vec::new();
    let mut current: Option<Pending> = None;

    let mut close = |p: Option<Pending>, ops: &mut Vec<EmittedOp>| {
        if let Some(p) = p {
            if p.seen == p.op.gates {
                ops.push(p.op);
            } else {
                corrupted.push(format!("{}: announced {} gates, found {}", p.label, p.op.gates, p.seen));
            }
        }
    };

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(comment) = s.strip_prefix('#') {
            let tokens: Vec<&str> = comment.split_whitespace().collect();
            if tokens.first() == Some(&"op") {
                close(current.take(), &mut ops);
                current = Some(parse_op(&tokens[1..], line)?);
            }
            continue;
        }
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let nums = |t: &[&str]| t.iter().map(|x| parse_num(x, line)).collect::<Result<Vec<usize>>>();
        match tokens[0] {
            "n" => n = Some(parse_num::<usize>(tokens.get(1).copied().unwrap_or(""), line)?),
            "logical" => logical = Some(parse_num::<usize>(tokens.get(1).copied().unwrap_or(""), line)?),
            "gateset" => gateset = tokens.get(1).copied().unwrap_or("").to_string(),
            "initial_map" => initial = Some(nums(&tokens[1..])?),
            "final_map" => final_ = Some(nums(&tokens[1..])?),
            _ => {
                gates.push(parse_gate(&tokens, line)?);
                if let Some(p) = current.as_mut() {
                    p.seen += 1;
                }
            }
        }
    }
    close(current.take(), &mut ops);

    let n = n.ok_or_else(|| Error::Invalid("circuit file lacks an `n` line".into()))?;
    let mut circuit = Circuit::new(n);
    for g in gates {
        circuit.push(g)?;
    }
    let logical = logical.unwrap_or(n);
    for map in [&initial, &final_].into_iter().flatten() {
        if map.len() != logical {
            return Err(Error::Invalid(format!("map has {} entries for {logical} logical qubits", map.len())));
        }
    }
    circuit.initial_map = initial;
    circuit.final_map = final_;
    Ok(ParsedCircuit { expanded: Expanded { circuit, ops }, logical, gateset, corrupted })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Expanded {
        let mut c = Circuit::new(3);
        c.initial_map = Some(vec![0, 1]);
        c.final_map = Some(vec![1, 0]);
        c.push(Gate::Rot { axis: Pauli::Z, angle: -0.125, qubit: 2 }).unwrap();
        c.push(Gate::Basis { kind: BasisGate::CX, qubits: (0, 1) }).unwrap();
        c.push(Gate::Basis { kind: BasisGate::CX, qubits: (1, 0) }).unwrap();
        c.push(Gate::Basis { kind: BasisGate::CX, qubits: (0, 1) }).unwrap();
        let ops = vec![
            EmittedOp { kind: OpKind::Single { id: 0, qubit: 1 }, phys: vec![2], gates: 1 },
            EmittedOp { kind: OpKind::Swap, phys: vec![0, 1], gates: 3 },
        ];
        Expanded { circuit: c, ops }
    }

    #[test]
    fn round_trip() {
        let ex = sample();
        let text = write_circuit(&ex, 2, "CNOT").unwrap();
        assert!(text.contains("RZ -0.125 2\n# op swap phys=0,1 gates=3\nCX 0 1\n"));
        let p = parse_circuit(&text).unwrap();
        assert_eq!(p.expanded, ex);
        assert_eq!(p.gateset, "CNOT");
        assert!(p.corrupted.is_empty());
    }

    #[test]
    fn deleted_gate_is_flagged() {
        let text = write_circuit(&sample(), 2, "CNOT").unwrap();
        let edited: String = text.lines().filter(|l| *l != "CX 1 0").map(|l| format!("{l}\n")).collect();
        let p = parse_circuit(&edited).unwrap();
        assert_eq!(p.corrupted.len(), 1);
        assert_eq!(p.expanded.ops.len(), 1);
    }

    #[test]
    fn rejects_unknown_gate() {
        assert!(parse_circuit("n 2\nTOFFOLI 0 1\n").is_err());
        assert!(parse_circuit("CX 0 1\n").is_err());
    }
}
