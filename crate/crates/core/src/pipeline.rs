//! End-to-end compilation: unify, place, route, dress, schedule, synthesize.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::benchgen::{concat_layers, expand_layers_with};
use crate::error::{Error, Result};
use crate::ir::{unify_terms, Hamiltonian, SingleQubitOp, TwoQubitBlock};
use crate::placement::{flow_matrix, tabu_place, QubitMap, TabuParams};
use crate::router::{route, RoutedProgram};
use crate::scheduler::{color_schedule, generic_schedule, hybrid_alap, ScheduledCircuit, SinglesPolicy};
use crate::seed::{sub_seed, PASS_PLACEMENT, PASS_ROUTING};
use crate::synth::{count_hw, expand, Expanded, GateSet, GateSetName, Metrics};
use crate::topology::DeviceTopology;
use crate::unifier::dress_swaps;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Greedy colouring, then the reverse-time sweep.
    #[default]
    Hybrid,
    /// ASAP in routed order.
    Generic,
    /// Colouring only; valid when no SWAP is needed.
    Coloring,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hybrid" => Ok(ScheduleKind::Hybrid),
            "generic" => Ok(ScheduleKind::Generic),
            "coloring" | "colouring" => Ok(ScheduleKind::Coloring),
            _ => Err(Error::Invalid(format!("unknown schedule {s:?}"))),
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Hybrid => "hybrid",
            ScheduleKind::Generic => "generic",
            ScheduleKind::Coloring => "coloring",
        })
    }
}

/// Placement overrides; `None` keeps the size-dependent default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementOptions {
    pub iters: Option<usize>,
    pub tenure: Option<usize>,
    pub restarts: Option<usize>,
    pub time_budget_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub seed: u64,
    pub schedule: ScheduleKind,
    pub gateset: GateSet,
    pub placement: PlacementOptions,
    pub singles: SinglesPolicy,
    /// Merge SWAPs with co-located blocks.
    pub dress: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            seed: 0,
            schedule: ScheduleKind::Hybrid,
            gateset: GateSet::new(GateSetName::Cnot),
            placement: PlacementOptions::default(),
            singles: SinglesPolicy::Interleaved,
            dress: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PassTimings {
    pub unify_ms: f64,
    pub placement_ms: f64,
    pub routing_ms: f64,
    pub scheduling_ms: f64,
    pub synthesis_ms: f64,
}

#[derive(Clone, Debug)]
pub struct Compiled {
    /// Blocks and singles of the first layer.
    pub blocks: Vec<TwoQubitBlock>,
    pub singles: Vec<SingleQubitOp>,
    pub placement: QubitMap,
    pub placement_cost: u64,
    pub routed: RoutedProgram,
    /// One scheduled circuit per layer (QAOA layer or Trotter step).
    pub layers: Vec<ScheduledCircuit>,
    /// All layers back to back.
    pub whole: ScheduledCircuit,
    pub metrics: Metrics,
    pub nomap: Metrics,
    pub timings: PassTimings,
}

impl Compiled {
    /// Hardware circuit of every layer, for verification.
    pub fn expand_layers(&self, gs: &GateSet) -> Result<Vec<Expanded>> {
        self.layers.iter().map(|l| expand(l, gs)).collect()
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Per-layer operators. A Hamiltonian with `steps = r` yields `r` identical layers.
fn layer_ops(hams: &[Hamiltonian]) -> Result<Vec<(Vec<TwoQubitBlock>, Vec<SingleQubitOp>)>> {
    let mut out = Vec::new();
    for h in hams {
        let ops = unify_terms(h)?;
        for _ in 0..h.steps {
            out.push(ops.clone());
        }
    }
    Ok(out)
}

/// Compile one or more layers sharing an interaction graph. Routing and
/// scheduling run once on the first layer; later layers alternate between
/// the forward and reversed two-qubit order.
pub fn compile_layers(hams: &[Hamiltonian], topo: &DeviceTopology, opts: &CompileOptions) -> Result<Compiled> {
    let first = hams.first().ok_or_else(|| Error::Invalid("no Hamiltonian given".into()))?;
    let n = first.n;
    if n > topo.m {
        return Err(Error::DeviceTooSmall { device: topo.m, circuit: n });
    }

    let t = Instant::now();
    let ops = layer_ops(hams)?;
    let (blocks, singles) = ops[0].clone();
    for (b, s) in &ops[1..] {
        let same = b.len() == blocks.len() && b.iter().zip(&blocks).all(|(x, y)| x.pair == y.pair);
        if !same || s.len() != singles.len() {
            return Err(Error::Invalid("layers must share one interaction graph".into()));
        }
    }
    let unify_ms = ms(t);

    let t = Instant::now();
    let f = flow_matrix(&blocks, n);
    let mut params = TabuParams::defaults_for(n, sub_seed(opts.seed, PASS_PLACEMENT));
    let p = &opts.placement;
    params.max_iters = p.iters.unwrap_or(params.max_iters);
    params.tenure = p.tenure.unwrap_or(params.tenure);
    params.restarts = p.restarts.unwrap_or(params.restarts);
    params.time_budget_ms = p.time_budget_ms;
    let (placement, placement_cost) = tabu_place(&f, topo, &params)?;
    let placement_ms = ms(t);

    let t = Instant::now();
    let mut routed = route(&blocks, &placement, topo, sub_seed(opts.seed, PASS_ROUTING))?;
    if opts.dress {
        routed = dress_swaps(&routed);
    }
    routed.validate(topo, &blocks)?;
    let routing_ms = ms(t);

    let t = Instant::now();
    let layer1 = match opts.schedule {
        ScheduleKind::Hybrid => hybrid_alap(&routed, topo)?,
        ScheduleKind::Generic => generic_schedule(&routed, topo)?,
        ScheduleKind::Coloring => {
            if routed.swaps_inserted > 0 {
                return Err(Error::Invalid("coloring schedule needs a SWAP-free placement".into()));
            }
            let mut sc = color_schedule(&blocks, &[], n, opts.singles)?;
            sc = ScheduledCircuit::replay(n, placement.clone(), sc.cycles)?;
            sc
        }
    };
    layer1.check_complete(&routed)?;
    let layers = expand_layers_with(&layer1, &ops, opts.singles)?;
    let whole = concat_layers(&layers)?;
    whole.validate(topo)?;
    let scheduling_ms = ms(t);

    let t = Instant::now();
    let metrics = count_hw(&whole, &opts.gateset)?;
    let nomap1 = color_schedule(&blocks, &[], n, opts.singles)?;
    let nomap = count_hw(&concat_layers(&expand_layers_with(&nomap1, &ops, opts.singles)?)?, &opts.gateset)?;
    let synthesis_ms = ms(t);

    Ok(Compiled {
        blocks,
        singles,
        placement,
        placement_cost,
        routed,
        layers,
        whole,
        metrics,
        nomap,
        timings: PassTimings { unify_ms, placement_ms, routing_ms, scheduling_ms, synthesis_ms },
    })
}

/// Compile a Hamiltonian, repeating the step `h.steps` times.
pub fn compile(h: &Hamiltonian, topo: &DeviceTopology, opts: &CompileOptions) -> Result<Compiled> {
    compile_layers(std::slice::from_ref(h), topo, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{gen_nnn, Family};
    use crate::simcheck::{verify_permutation_equivalence, DEFAULT_CAP};
    use crate::topology::make_grid;

    #[test]
    fn nnn_on_grid_verifies() {
        let h = gen_nnn(Family::NnnHeisenberg, 6, 4, true).unwrap();
        let topo = make_grid(2, 3).unwrap();
        let c = compile(&h, &topo, &CompileOptions::default()).unwrap();
        assert_eq!(c.layers.len(), 1);
        let ex = expand(&c.whole, &GateSet::new(GateSetName::Cnot)).unwrap();
        let rep = verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap();
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn steps_repeat_and_verify() {
        let mut h = gen_nnn(Family::NnnIsing, 5, 2, true).unwrap();
        h.steps = 3;
        let topo = make_grid(2, 3).unwrap();
        let c = compile(&h, &topo, &CompileOptions::default()).unwrap();
        assert_eq!(c.layers.len(), 3);
        assert_eq!(c.whole.swaps(), 3 * c.layers[0].swaps());
        let ex = expand(&c.whole, &GateSet::new(GateSetName::Cz)).unwrap();
        let rep = verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap();
        assert!(rep.ok, "{rep:?}");
    }
}
