//! Benchmark families, the order-preserving baseline router, layer expansion
//! and overhead reporting.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::{build_hamiltonian, Hamiltonian, PauliTerm, SingleQubitOp, TwoQubitBlock};
use crate::placement::QubitMap;
use crate::router::{GateSet, RoutedProgram, Transition};
use crate::scheduler::{place_singles, Cycle, ScheduledCircuit, ScheduledGate, ScheduledOp, SinglesPolicy};
use crate::seed::{sub_seed, PASS_BENCH};
use crate::synth::Metrics;
use crate::topology::{DeviceTopology, UNREACHABLE};

/// Attempts of the pairing model before a 3-regular draw is declared infeasible.
pub const MAX_PAIRING_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "nnn-ising")]
    NnnIsing,
    #[serde(rename = "nnn-xy")]
    NnnXy,
    #[serde(rename = "nnn-heisenberg")]
    NnnHeisenberg,
    #[serde(rename = "qaoa-reg3")]
    QaoaReg3,
    #[serde(rename = "heisenberg-1d")]
    Heisenberg1d,
    #[serde(rename = "heisenberg-2d")]
    Heisenberg2d,
    #[serde(rename = "heisenberg-3d")]
    Heisenberg3d,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::NnnIsing,
        Family::NnnXy,
        Family::NnnHeisenberg,
        Family::QaoaReg3,
        Family::Heisenberg1d,
        Family::Heisenberg2d,
        Family::Heisenberg3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::NnnIsing => "nnn-ising",
            Family::NnnXy => "nnn-xy",
            Family::NnnHeisenberg => "nnn-heisenberg",
            Family::QaoaReg3 => "qaoa-reg3",
            Family::Heisenberg1d => "heisenberg-1d",
            Family::Heisenberg2d => "heisenberg-2d",
            Family::Heisenberg3d => "heisenberg-3d",
        }
    }

    pub fn is_nnn(self) -> bool {
        matches!(self, Family::NnnIsing | Family::NnnXy | Family::NnnHeisenberg)
    }

    /// Whether `n` is a valid size for this family.
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Family::QaoaReg3 => n >= 4 && n % 2 == 0,
            f if f.is_nnn() => n >= 3,
            _ => n >= 2,
        }
    }

    /// Single-qubit ops go after the two-qubit part for QAOA (cost then drive).
    pub fn singles_policy(self) -> SinglesPolicy {
        match self {
            Family::QaoaReg3 => SinglesPolicy::Trailing,
            _ => SinglesPolicy::Interleaved,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Invalid(format!("unknown benchmark family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    /// QAOA depth p, or Trotter steps r.
    pub layers: usize,
    /// Explicit `(gamma, beta)` per QAOA layer; sampled from `(0, pi)` when absent.
    pub params: Option<Vec<(f64, f64)>>,
    /// Include the transverse X field of the Ising model.
    pub x_field: bool,
}

impl BenchmarkSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        BenchmarkSpec { family, n, seed, layers: 1, params: None, x_field: true }
    }

    pub fn instance_id(&self) -> String {
        format!("{}-n{}-s{}-l{}", self.family, self.n, self.seed, self.layers)
    }

    /// One Hamiltonian per layer for QAOA; a single Hamiltonian with
    /// `steps = layers` otherwise.
    pub fn generate(&self) -> Result<Vec<Hamiltonian>> {
        if self.layers == 0 {
            return Err(Error::Invalid("layers must be at least 1".into()));
        }
        match self.family {
            Family::QaoaReg3 => gen_qaoa_reg3(self.n, self.seed, self.layers, self.params.as_deref()),
            f if f.is_nnn() => Ok(vec![with_steps(gen_nnn(f, self.n, self.seed, self.x_field)?, self.layers)]),
            f => Ok(vec![with_steps(gen_lattice(f, self.n, self.seed)?, self.layers)]),
        }
    }
}

fn with_steps(mut h: Hamiltonian, steps: usize) -> Hamiltonian {
    h.steps = steps;
    h
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, PASS_BENCH))
}

/// Uniform on the open interval `(0, pi)`.
fn open_pi<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random::<f64>() * PI;
        if x > 0.0 {
            return x;
        }
    }
}

fn pair_terms<R: Rng>(family: Family, u: usize, v: usize, rng: &mut R, out: &mut Vec<PauliTerm>) {
    let kinds: &[&str] = match family {
        Family::NnnIsing => &["ZZ"],
        Family::NnnXy => &["XX", "YY"],
        _ => &["XX", "YY", "ZZ"],
    };
    for p in kinds {
        out.push(PauliTerm::two(p, u, v, open_pi(rng)));
    }
}

/// NN plus NNN chain: edges `(i, i+1)` and `(i, i+2)`, `2n - 3` in total.
pub fn gen_nnn(family: Family, n: usize, seed: u64, x_field: bool) -> Result<Hamiltonian> {
    if !family.is_nnn() {
        return Err(Error::Invalid(format!("{family} is not an NNN family")));
    }
    if n < 3 {
        return Err(Error::Invalid(format!("NNN chains need n >= 3, got {n}")));
    }
    let mut rng = rng_for(seed);
    let mut terms = Vec::new();
    for i in 0..n - 1 {
        pair_terms(family, i, i + 1, &mut rng, &mut terms);
        if i + 2 < n {
            pair_terms(family, i, i + 2, &mut rng, &mut terms);
        }
    }
    if family == Family::NnnIsing && x_field {
        for q in 0..n {
            terms.push(PauliTerm::one("X", q, open_pi(&mut rng)));
        }
    }
    build_hamiltonian(n, terms, 1.0, 1)
}

/// Most balanced `k`-factor shape of `n`, sorted ascending.
pub fn lattice_shape(n: usize, dims: usize) -> Vec<usize> {
    fn search(n: usize, dims: usize, min: usize, acc: &mut Vec<usize>, best: &mut Option<Vec<usize>>) {
        if dims == 1 {
            if n >= min {
                acc.push(n);
                let spread = acc[acc.len() - 1] - acc[0];
                if best.as_ref().is_none_or(|b| spread < b[b.len() - 1] - b[0]) {
                    *best = Some(acc.clone());
                }
                acc.pop();
            }
            return;
        }
        for f in min..=n {
            if f.pow(dims as u32) > n {
                break;
            }
            if n % f == 0 {
                acc.push(f);
                search(n / f, dims - 1, f, acc, best);
                acc.pop();
            }
        }
    }
    let mut best = None;
    search(n, dims, 1, &mut Vec::new(), &mut best);
    best.unwrap_or_else(|| vec![n])
}

fn lattice_edges(shape: &[usize]) -> Vec<(usize, usize)> {
    let total: usize = shape.iter().product();
    let mut stride = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        stride[d] = stride[d + 1] * shape[d + 1];
    }
    let mut edges = Vec::new();
    for q in 0..total {
        for d in 0..shape.len() {
            if (q / stride[d]) % shape[d] + 1 < shape[d] {
                edges.push((q, q + stride[d]));
            }
        }
    }
    edges
}

/// Open-boundary Heisenberg lattice with random `(0, pi)` couplings.
pub fn gen_lattice(family: Family, n: usize, seed: u64) -> Result<Hamiltonian> {
    let dims = match family {
        Family::Heisenberg1d => 1,
        Family::Heisenberg2d => 2,
        Family::Heisenberg3d => 3,
        f => return Err(Error::Invalid(format!("{f} is not a lattice family"))),
    };
    if n < 2 {
        return Err(Error::Invalid(format!("lattices need n >= 2, got {n}")));
    }
    let mut rng = rng_for(seed);
    let mut terms = Vec::new();
    for (u, v) in lattice_edges(&lattice_shape(n, dims)) {
        pair_terms(family, u, v, &mut rng, &mut terms);
    }
    build_hamiltonian(n, terms, 1.0, 1)
}

/// Uniform simple 3-regular graph by the pairing model with rejection.
/// Edges are `(min, max)` and sorted.
pub fn random_3_regular(n: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::Invalid(format!("no 3-regular graph on {n} vertices")));
    }
    let mut rng = rng_for(seed);
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    'attempt: for _ in 0..MAX_PAIRING_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = points.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                continue 'attempt;
            }
        }
        if edges.iter().any(|&(a, b)| a == b) {
            continue;
        }
        return Ok(edges);
    }
    Err(Error::Invalid(format!("no simple 3-regular graph on {n} vertices after {MAX_PAIRING_ATTEMPTS} draws")))
}

/// QAOA on a random 3-regular graph: layer `p` has `gamma_p ZZ` per edge
/// and `beta_p X` per qubit. All layers share one graph.
pub fn gen_qaoa_reg3(n: usize, seed: u64, layers: usize, params: Option<&[(f64, f64)]>) -> Result<Vec<Hamiltonian>> {
    let edges = random_3_regular(n, seed)?;
    let params: Vec<(f64, f64)> = match params {
        Some(p) if p.len() == layers => p.to_vec(),
        Some(p) => return Err(Error::Invalid(format!("{} parameter pairs for {layers} layers", p.len()))),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, PASS_BENCH + 1));
            (0..layers).map(|_| (open_pi(&mut rng), open_pi(&mut rng))).collect()
        }
    };
    params
        .into_iter()
        .map(|(gamma, beta)| {
            let mut terms: Vec<PauliTerm> = edges.iter().map(|&(u, v)| PauliTerm::two("ZZ", u, v, gamma)).collect();
            terms.extend((0..n).map(|q| PauliTerm::one("X", q, beta)));
            build_hamiltonian(n, terms, 1.0, 1)
        })
        .collect()
}

/// Order-preserving router: blocks strictly in input order; a distant pair is
/// closed by moving one endpoint along a shortest path, one SWAP at a time.
/// Each step shortens the pair by exactly one, so the lower physical endpoint
/// moves, to its lowest-index neighbour on a shortest path.
pub fn baseline_route(blocks: &[TwoQubitBlock], phi0: &QubitMap, topo: &DeviceTopology) -> Result<RoutedProgram> {
    if phi0.m() != topo.m {
        return Err(Error::Invalid(format!("map covers {} physical qubits, device has {}", phi0.m(), topo.m)));
    }
    let mut map = phi0.clone();
    let mut maps = vec![map.clone()];
    let mut gate_sets = vec![GateSet { blocks: Vec::new(), transition: None }];
    for b in blocks {
        if b.pair.1 >= map.n() {
            return Err(Error::QubitOutOfRange { index: b.pair.1, n: map.n() });
        }
        loop {
            let (x, y) = map.phys_pair(b.pair);
            let d = topo.distance(x, y);
            if d == UNREACHABLE {
                return Err(Error::Unreachable(b.pair.0, b.pair.1));
            }
            if d <= 1 {
                break;
            }
            let (mover, other) = if x < y { (x, y) } else { (y, x) };
            let next = *topo
                .neighbors(mover)
                .iter()
                .filter(|&&w| topo.distance(w, other) + 1 == d)
                .min()
                .ok_or_else(|| Error::Internal("no shortest-path step".into()))?;
            let swap = (mover.min(next), mover.max(next));
            gate_sets.last_mut().unwrap().transition = Some(Transition { swap, dressable: false, dressed: None });
            map.swap_physical(swap.0, swap.1);
            maps.push(map.clone());
            gate_sets.push(GateSet { blocks: Vec::new(), transition: None });
        }
        gate_sets.last_mut().unwrap().blocks.push(b.clone());
    }
    let swaps_inserted = maps.len() - 1;
    Ok(RoutedProgram { maps, gate_sets, swaps_inserted, swaps_dressed: 0, trace: Vec::new() })
}

/// Two-qubit skeleton of `layers` layers: odd layers repeat layer 1, even
/// layers run it backwards from its final map. Single-qubit ops are dropped.
pub fn expand_layers(layer1: &ScheduledCircuit, layers: usize) -> Result<Vec<ScheduledCircuit>> {
    let forward = layer1.without_singles()?;
    let backward = forward.reversed()?;
    Ok((0..layers).map(|k| if k % 2 == 0 { forward.clone() } else { backward.clone() }).collect())
}

/// Replace every block by the block with the same id from `blocks`, keeping
/// dressing, and recompute maps.
pub fn rebind(sc: &ScheduledCircuit, blocks: &[TwoQubitBlock]) -> Result<ScheduledCircuit> {
    let lookup = |b: &TwoQubitBlock| -> Result<TwoQubitBlock> {
        match blocks.get(b.id) {
            Some(nb) if nb.pair == b.pair => Ok(nb.clone()),
            _ => Err(Error::Invalid(format!("layer has no block {} on pair {:?}", b.id, b.pair))),
        }
    };
    let cycles = sc
        .cycles
        .iter()
        .map(|c| {
            let gates = c
                .gates
                .iter()
                .map(|g| {
                    let op = match &g.op {
                        ScheduledOp::Block(b) => ScheduledOp::Block(Box::new(lookup(b)?)),
                        ScheduledOp::Dressed { transition, block } => ScheduledOp::Dressed {
                            transition: *transition,
                            block: Box::new(lookup(block)?.dressed_with_swap()),
                        },
                        s @ ScheduledOp::Swap { .. } => s.clone(),
                    };
                    Ok(ScheduledGate { op, phys: g.phys })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Cycle { gates, singles: c.singles.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    ScheduledCircuit::replay(sc.n, sc.initial_map.clone(), cycles)
}

/// Full layers: the skeleton of [`expand_layers`] with each layer's own
/// operators (`layer_ops[k]`) bound in and its single-qubit ops placed.
pub fn expand_layers_with(
    layer1: &ScheduledCircuit,
    layer_ops: &[(Vec<TwoQubitBlock>, Vec<SingleQubitOp>)],
    policy: SinglesPolicy,
) -> Result<Vec<ScheduledCircuit>> {
    expand_layers(layer1, layer_ops.len())?
        .iter()
        .zip(layer_ops)
        .map(|(skel, (blocks, singles))| {
            let mut sc = rebind(skel, blocks)?;
            place_singles(&mut sc, singles, policy)?;
            Ok(sc)
        })
        .collect()
}

/// Concatenate layers into one circuit; each must start where the previous ended.
pub fn concat_layers(layers: &[ScheduledCircuit]) -> Result<ScheduledCircuit> {
    let first = layers.first().ok_or_else(|| Error::Invalid("no layers".into()))?;
    for w in layers.windows(2) {
        if w[1].initial_map != w[0].final_map {
            return Err(Error::Internal("layer does not start at the previous final map".into()));
        }
    }
    let cycles = layers.iter().flat_map(|l| l.cycles.iter().cloned()).collect();
    ScheduledCircuit::replay(first.n, first.initial_map.clone(), cycles)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub instance: String,
    pub metrics: Metrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub abs: i64,
    /// `compiled / nomap`; 1 when both are zero.
    pub ratio: f64,
}

impl Delta {
    fn of(compiled: usize, nomap: usize) -> Self {
        let ratio = match (compiled, nomap) {
            (0, 0) => 1.0,
            (c, n) => c as f64 / n as f64,
        };
        Delta { abs: compiled as i64 - nomap as i64, ratio }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub two_qubit_count: Delta,
    pub two_qubit_depth: Delta,
    pub total_depth: Delta,
}

/// Overhead of a compiled instance relative to its all-to-all compilation.
pub fn overhead(compiled: &InstanceMetrics, nomap: &InstanceMetrics) -> Result<OverheadReport> {
    if compiled.instance != nomap.instance {
        return Err(Error::Invalid(format!("instances differ: {} vs {}", compiled.instance, nomap.instance)));
    }
    let (c, m) = (&compiled.metrics, &nomap.metrics);
    Ok(OverheadReport {
        two_qubit_count: Delta::of(c.two_qubit_count, m.two_qubit_count),
        two_qubit_depth: Delta::of(c.two_qubit_depth, m.two_qubit_depth),
        total_depth: Delta::of(c.total_depth, m.total_depth),
    })
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::unify_terms;
    use crate::topology::make_line;

    #[test]
    fn nnn_edge_counts() {
        for n in [3, 6, 50] {
            for f in [Family::NnnIsing, Family::NnnXy, Family::NnnHeisenberg] {
                assert_eq!(gen_nnn(f, n, 1, true).unwrap().interaction_graph().len(), 2 * n - 3);
            }
        }
        assert!(gen_nnn(Family::NnnXy, 2, 0, true).is_err());
    }

    #[test]
    fn ising_field_flag() {
        let count = |h: &Hamiltonian| h.terms.iter().filter(|t| !t.is_two_qubit()).count();
        assert_eq!(count(&gen_nnn(Family::NnnIsing, 4, 0, true).unwrap()), 4);
        assert_eq!(count(&gen_nnn(Family::NnnIsing, 4, 0, false).unwrap()), 0);
    }

    #[test]
    fn lattice_shapes() {
        assert_eq!(lattice_shape(30, 2), vec![5, 6]);
        assert_eq!(lattice_shape(30, 3), vec![2, 3, 5]);
        assert_eq!(lattice_shape(7, 2), vec![1, 7]);
        // 5x6 grid: 5*5 + 4*6 edges
        assert_eq!(gen_lattice(Family::Heisenberg2d, 30, 0).unwrap().interaction_graph().len(), 49);
    }

    #[test]
    fn regular_graphs() {
        assert_eq!(random_3_regular(4, 0).unwrap(), vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(random_3_regular(5, 0).is_err());
        assert!(random_3_regular(2, 0).is_err());
    }

    #[test]
    fn baseline_moves_lower_endpoint() {
        let topo = make_line(4).unwrap();
        let b = TwoQubitBlock::new(0, vec![PauliTerm::two("ZZ", 0, 3, 0.3)], 1.0).unwrap();
        let rp = baseline_route(&[b.clone()], &QubitMap::identity(4, 4), &topo).unwrap();
        assert_eq!(rp.swaps_inserted, 2);
        let swaps: Vec<_> = rp.transitions().map(|t| t.swap).collect();
        assert_eq!(swaps, vec![(0, 1), (1, 2)]);
        rp.validate(&topo, &[b]).unwrap();
    }

    #[test]
    fn overhead_checks_instance() {
        let a = InstanceMetrics { instance: "x".into(), metrics: Metrics::default() };
        let b = InstanceMetrics { instance: "y".into(), metrics: Metrics::default() };
        assert!(overhead(&a, &b).is_err());
        let r = overhead(&a, &a).unwrap();
        assert_eq!(r.two_qubit_count, Delta { abs: 0, ratio: 1.0 });
    }

    #[test]
    fn qaoa_layers_share_graph() {
        let hs = gen_qaoa_reg3(8, 3, 3, None).unwrap();
        assert_eq!(hs.len(), 3);
        let pairs = |h: &Hamiltonian| unify_terms(h).unwrap().0.iter().map(|b| b.pair).collect::<Vec<_>>();
        assert_eq!(pairs(&hs[0]), pairs(&hs[2]));
        assert_eq!(pairs(&hs[0]).len(), 12);
    }
}
