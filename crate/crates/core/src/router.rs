//! Permutation-aware SWAP insertion.
//!
//! Blocks are free to execute under any map in which their qubits are
//! adjacent, so the router never waits on gate order: it repeatedly takes the
//! closest unrouted block, inserts one SWAP, and absorbs every block that
//! became nearest-neighbour.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ir::TwoQubitBlock;
use crate::placement::QubitMap;
use crate::topology::{DeviceTopology, UNREACHABLE};

/// The SWAP that moves from one map to the next.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transition {
    /// Physical pair, `(min, max)`.
    pub swap: (usize, usize),
    /// A routed block sat on this pair when the SWAP was chosen.
    pub dressable: bool,
    /// Set by the unifier: the block merged into this SWAP.
    pub dressed: Option<Box<TwoQubitBlock>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateSet {
    /// Blocks nearest-neighbour under this set's map.
    pub blocks: Vec<TwoQubitBlock>,
    /// `None` only for the last set.
    pub transition: Option<Transition>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Criteria {
    pub remaining_cost: u64,
    pub start_level: u32,
    pub dressable: bool,
}

impl Criteria {
    /// Lexicographic key; smaller is better.
    pub fn key(&self) -> (u64, u32, bool) {
        (self.remaining_cost, self.start_level, !self.dressable)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub swap: (usize, usize),
    pub criteria: Criteria,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub block: usize,
    pub pair: (usize, usize),
    pub distance: u32,
    pub map_before: Vec<usize>,
    pub candidates: Vec<Candidate>,
    pub chosen: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoutedProgram {
    pub maps: Vec<QubitMap>,
    pub gate_sets: Vec<GateSet>,
    pub swaps_inserted: usize,
    pub swaps_dressed: usize,
    #[serde(skip)]
    pub trace: Vec<TraceStep>,
}

impl RoutedProgram {
    pub fn initial_map(&self) -> &QubitMap {
        &self.maps[0]
    }

    pub fn final_map(&self) -> &QubitMap {
        self.maps.last().expect("at least one map")
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.gate_sets.iter().filter_map(|g| g.transition.as_ref())
    }

    /// Number of two-qubit gates: blocks plus SWAPs (dressed or not).
    pub fn two_qubit_gates(&self) -> usize {
        self.gate_sets.iter().map(|g| g.blocks.len() + usize::from(g.transition.is_some())).sum()
    }

    /// Forward replay: every block is adjacent under its set's map, every
    /// SWAP is a device edge, maps follow the SWAPs, and each of `blocks`
    /// appears exactly once (in a set or inside a dressed SWAP).
    pub fn validate(&self, topo: &DeviceTopology, blocks: &[TwoQubitBlock]) -> Result<()> {
        let bad = |msg: String| Err(Error::Internal(format!("routed program: {msg}")));
        if self.maps.len() != self.gate_sets.len() || self.maps.is_empty() {
            return bad("map and gate-set counts differ".into());
        }
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let k = self.maps.len() - 1;
        for (i, (map, set)) in self.maps.iter().zip(&self.gate_sets).enumerate() {
            for b in &set.blocks {
                let (a, c) = map.phys_pair(b.pair);
                if !topo.is_edge(a, c) {
                    return bad(format!("block {} not adjacent under map {i}", b.id));
                }
                *seen.entry(b.id).or_default() += 1;
            }
            match (&set.transition, i == k) {
                (Some(_), true) => return bad("last gate set has a transition".into()),
                (None, false) => return bad(format!("gate set {i} lacks a transition")),
                (Some(t), false) => {
                    if !topo.is_edge(t.swap.0, t.swap.1) {
                        return bad(format!("SWAP {:?} is not a device edge", t.swap));
                    }
                    if let Some(d) = &t.dressed {
                        let (a, c) = map.phys_pair(d.pair);
                        if (a.min(c), a.max(c)) != t.swap {
                            return bad(format!("dressed block {} not on its SWAP", d.id));
                        }
                        *seen.entry(d.id).or_default() += 1;
                    }
                    if self.maps[i + 1] != map.swapped(t.swap.0, t.swap.1) {
                        return bad(format!("map {} does not follow its SWAP", i + 1));
                    }
                }
                (None, true) => {}
            }
        }
        let mut expected: HashMap<usize, usize> = HashMap::new();
        for b in blocks {
            *expected.entry(b.id).or_default() += 1;
        }
        if seen != expected {
            return bad("block multiset differs from the input".into());
        }
        let dressed = self.transitions().filter(|t| t.dressed.is_some()).count();
        if dressed != self.swaps_dressed || self.transitions().count() != self.swaps_inserted {
            return bad("SWAP counters out of date".into());
        }
        Ok(())
    }
}

/// Device edges incident to either endpoint of the block, as sorted `(min, max)` pairs.
pub fn candidate_swaps(block: &TwoQubitBlock, map: &QubitMap, topo: &DeviceTopology) -> Vec<(usize, usize)> {
    let (a, b) = map.phys_pair(block.pair);
    let mut out: Vec<(usize, usize)> = [a, b]
        .iter()
        .flat_map(|&p| topo.neighbors(p).iter().map(move |&q| (p.min(q), p.max(q))))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Index of the best candidate; exact ties go to a seeded uniform choice.
pub fn select_swap<R: Rng>(candidates: &[Candidate], rng: &mut R) -> usize {
    assert!(!candidates.is_empty(), "select_swap needs candidates");
    let best = candidates.iter().map(|c| c.criteria.key()).min().unwrap();
    let tied: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].criteria.key() == best).collect();
    if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.random_range(0..tied.len())]
    }
}

fn commit_level(levels: &mut [u32], a: usize, b: usize) {
    let l = levels[a].max(levels[b]) + 1;
    levels[a] = l;
    levels[b] = l;
}

struct Router<'a> {
    blocks: &'a [TwoQubitBlock],
    topo: &'a DeviceTopology,
    map: QubitMap,
    unrouted: Vec<usize>,
    levels: Vec<u32>,
    /// Routed block indices per logical pair, in input order.
    routed_on: HashMap<(usize, usize), Vec<usize>>,
    reserved: HashSet<usize>,
}

impl Router<'_> {
    fn dist(&self, b: usize) -> u32 {
        let (x, y) = self.map.phys_pair(self.blocks[b].pair);
        self.topo.distance(x, y)
    }

    fn absorb(&mut self) -> Vec<TwoQubitBlock> {
        let mut taken = Vec::new();
        let mut rest = Vec::with_capacity(self.unrouted.len());
        for &b in &self.unrouted {
            let (x, y) = self.map.phys_pair(self.blocks[b].pair);
            if self.topo.is_edge(x, y) {
                taken.push(b);
            } else {
                rest.push(b);
            }
        }
        self.unrouted = rest;
        for &b in &taken {
            let (x, y) = self.map.phys_pair(self.blocks[b].pair);
            commit_level(&mut self.levels, x, y);
            self.routed_on.entry(self.blocks[b].pair).or_default().push(b);
        }
        taken.into_iter().map(|b| self.blocks[b].clone()).collect()
    }

    fn dress_target(&self, swap: (usize, usize)) -> Option<usize> {
        let (x, y) = (self.map.logical(swap.0)?, self.map.logical(swap.1)?);
        self.routed_on
            .get(&(x.min(y), x.max(y)))?
            .iter()
            .copied()
            .find(|b| !self.reserved.contains(b))
    }

    fn evaluate(&self, swap: (usize, usize)) -> Criteria {
        let (p, q) = swap;
        let moved = |x: usize| if x == p { q } else if x == q { p } else { x };
        let remaining_cost = self
            .unrouted
            .iter()
            .map(|&b| {
                let (x, y) = self.map.phys_pair(self.blocks[b].pair);
                u64::from(self.topo.distance(moved(x), moved(y)))
            })
            .sum();
        Criteria {
            remaining_cost,
            start_level: self.levels[p].max(self.levels[q]),
            dressable: self.dress_target(swap).is_some(),
        }
    }
}

/// Route `blocks` from the initial map. Candidate SWAPs are restricted to those
/// that shorten the selected block, which bounds the loop.
pub fn route(blocks: &[TwoQubitBlock], phi0: &QubitMap, topo: &DeviceTopology, seed: u64) -> Result<RoutedProgram> {
    if phi0.m() != topo.m {
        return Err(Error::Invalid(format!("map covers {} physical qubits, device has {}", phi0.m(), topo.m)));
    }
    for b in blocks {
        if b.pair.0 >= phi0.n() || b.pair.1 >= phi0.n() {
            return Err(Error::QubitOutOfRange { index: b.pair.1, n: phi0.n() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Router {
        blocks,
        topo,
        map: phi0.clone(),
        unrouted: (0..blocks.len()).collect(),
        levels: vec![0; topo.m],
        routed_on: HashMap::new(),
        reserved: HashSet::new(),
    };
    let first = r.absorb();
    let mut maps = vec![phi0.clone()];
    let mut gate_sets = vec![GateSet { blocks: first, transition: None }];
    let mut trace = Vec::new();
    let bound = topo.m * topo.diameter().max(1) as usize * blocks.len().max(1);

    while !r.unrouted.is_empty() {
        if trace.len() >= bound {
            return Err(Error::Internal(format!("routing exceeded {bound} iterations")));
        }
        let (b, d) = r
            .unrouted
            .iter()
            .map(|&b| (b, r.dist(b)))
            .min_by_key(|&(b, d)| (d, b))
            .expect("nonempty");
        let pair = blocks[b].pair;
        if d == UNREACHABLE {
            return Err(Error::Unreachable(pair.0, pair.1));
        }
        let (x, y) = r.map.phys_pair(pair);
        let candidates: Vec<Candidate> = candidate_swaps(&blocks[b], &r.map, topo)
            .into_iter()
            .filter(|&(p, q)| {
                let moved = |z: usize| if z == p { q } else if z == q { p } else { z };
                topo.distance(moved(x), moved(y)) < d
            })
            .map(|swap| Candidate { swap, criteria: r.evaluate(swap) })
            .collect();
        let chosen = candidates[select_swap(&candidates, &mut rng)].clone();
        trace.push(TraceStep {
            block: blocks[b].id,
            pair,
            distance: d,
            map_before: r.map.as_slice().to_vec(),
            candidates,
            chosen: chosen.swap,
        });

        let (p, q) = chosen.swap;
        if let Some(t) = r.dress_target(chosen.swap) {
            r.reserved.insert(t);
        }
        commit_level(&mut r.levels, p, q);
        gate_sets.last_mut().unwrap().transition =
            Some(Transition { swap: chosen.swap, dressable: chosen.criteria.dressable, dressed: None });
        r.map.swap_physical(p, q);
        maps.push(r.map.clone());
        let absorbed = r.absorb();
        gate_sets.push(GateSet { blocks: absorbed, transition: None });
    }

    let swaps_inserted = maps.len() - 1;
    Ok(RoutedProgram { maps, gate_sets, swaps_inserted, swaps_dressed: 0, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::PauliTerm;
    use crate::topology::make_grid;

    fn zz(id: usize, u: usize, v: usize) -> TwoQubitBlock {
        TwoQubitBlock::new(id, vec![PauliTerm::two("ZZ", u, v, 0.2)], 1.0).unwrap()
    }

    #[test]
    fn nearest_neighbour_input_needs_no_swaps() {
        let topo = make_grid(2, 3).unwrap();
        let blocks = vec![zz(0, 0, 1), zz(1, 1, 2), zz(2, 0, 3)];
        let rp = route(&blocks, &QubitMap::identity(6, 6), &topo, 0).unwrap();
        assert_eq!(rp.swaps_inserted, 0);
        assert_eq!(rp.maps.len(), 1);
        rp.validate(&topo, &blocks).unwrap();
    }

    #[test]
    fn candidate_counts_follow_degrees() {
        let topo = make_grid(2, 3).unwrap();
        let map = QubitMap::identity(6, 6);
        // corner 0 (degree 2) and corner 5 (degree 2), disjoint neighbourhoods
        assert_eq!(candidate_swaps(&zz(0, 0, 5), &map, &topo).len(), 4);
        let g3 = make_grid(3, 3).unwrap();
        let map9 = QubitMap::identity(9, 9);
        // centre 4 (degree 4) and corner 0 (degree 2), no shared edge
        assert_eq!(candidate_swaps(&zz(0, 4, 0), &map9, &g3).len(), 6);
        // 1 and 3 share no edge but both touch 0 and 4
        assert_eq!(candidate_swaps(&zz(0, 1, 3), &map9, &g3).len(), 6);
    }

    #[test]
    fn single_candidate_is_returned() {
        let c = Candidate { swap: (0, 1), criteria: Criteria { remaining_cost: 3, start_level: 0, dressable: false } };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(select_swap(&[c], &mut rng), 0);
    }

    #[test]
    fn criteria_apply_in_priority_order() {
        let mk = |cost, level, dressable| Candidate {
            swap: (0, 1),
            criteria: Criteria { remaining_cost: cost, start_level: level, dressable },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_swap(&[mk(5, 0, true), mk(4, 9, false)], &mut rng), 1);
        assert_eq!(select_swap(&[mk(4, 2, true), mk(4, 1, false)], &mut rng), 1);
        assert_eq!(select_swap(&[mk(4, 1, false), mk(4, 1, true)], &mut rng), 1);
    }

    #[test]
    fn routes_a_far_pair() {
        let topo = make_grid(1, 5).unwrap();
        let blocks = vec![zz(0, 0, 4), zz(1, 1, 2)];
        let rp = route(&blocks, &QubitMap::identity(5, 5), &topo, 3).unwrap();
        assert_eq!(rp.swaps_inserted, 3);
        rp.validate(&topo, &blocks).unwrap();
        let again = route(&blocks, &QubitMap::identity(5, 5), &topo, 3).unwrap();
        assert_eq!(rp, again);
    }
}
