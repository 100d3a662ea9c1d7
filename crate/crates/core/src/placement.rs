//! Initial placement as a quadratic assignment problem, solved with Tabu search.
//!
//! The objective is `sum_{i,j} f[i][j] * d[phi(i)][phi(j)]` over ordered pairs,
//! i.e. twice the sum over unordered interacting pairs.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::TwoQubitBlock;
use crate::topology::DeviceTopology;

/// Injective map from logical to physical qubits, with its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QubitMap {
    phi: Vec<usize>,
    inv: Vec<Option<usize>>,
}

impl QubitMap {
    pub fn new(phi: Vec<usize>, m: usize) -> Result<Self> {
        let mut inv = vec![None; m];
        for (l, &p) in phi.iter().enumerate() {
            if p >= m {
                return Err(Error::QubitOutOfRange { index: p, n: m });
            }
            if inv[p].replace(l).is_some() {
                return Err(Error::Invalid(format!("physical qubit {p} assigned twice")));
            }
        }
        Ok(QubitMap { phi, inv })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self::new((0..n).collect(), m).expect("identity map fits")
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn m(&self) -> usize {
        self.inv.len()
    }

    pub fn phys(&self, logical: usize) -> usize {
        self.phi[logical]
    }

    pub fn logical(&self, physical: usize) -> Option<usize> {
        self.inv[physical]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.phi
    }

    /// Exchange whatever sits on physical qubits `a` and `b`.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.inv[a], self.inv[b]);
        self.inv[a] = lb;
        self.inv[b] = la;
        if let Some(l) = la {
            self.phi[l] = b;
        }
        if let Some(l) = lb {
            self.phi[l] = a;
        }
    }

    pub fn swapped(&self, a: usize, b: usize) -> QubitMap {
        let mut m = self.clone();
        m.swap_physical(a, b);
        m
    }

    /// Physical location of a logical pair.
    pub fn phys_pair(&self, pair: (usize, usize)) -> (usize, usize) {
        (self.phi[pair.0], self.phi[pair.1])
    }
}

impl Serialize for QubitMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.phi.serialize(s)
    }
}

/// Symmetric interaction counts between logical qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowMatrix {
    pub f: Vec<Vec<u32>>,
}

impl FlowMatrix {
    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// `(neighbour, weight)` lists of nonzero entries per row.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, u32)>> {
        self.f
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &w)| w > 0).map(|(j, &w)| (j, w)).collect())
            .collect()
    }

    /// `2 * sum_{i<j} f[i][j]`: the cost when every interacting pair is adjacent.
    pub fn lower_bound(&self) -> u64 {
        self.f.iter().flatten().map(|&w| u64::from(w)).sum()
    }
}

pub fn flow_matrix(blocks: &[TwoQubitBlock], n: usize) -> FlowMatrix {
    let mut f = vec![vec![0u32; n]; n];
    for b in blocks {
        let (u, v) = b.pair;
        f[u][v] += 1;
        f[v][u] += 1;
    }
    FlowMatrix { f }
}

pub fn qap_cost(map: &QubitMap, f: &FlowMatrix, dist: &[Vec<u32>]) -> u64 {
    let n = f.n();
    let mut cost = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = f.f[i][j];
            if w > 0 {
                cost += 2 * u64::from(w) * u64::from(dist[map.phys(i)][map.phys(j)]);
            }
        }
    }
    cost
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuParams {
    pub max_iters: usize,
    pub tenure: usize,
    pub seed: u64,
    pub restarts: usize,
    pub time_budget_ms: Option<u64>,
}

impl TabuParams {
    pub fn defaults_for(n: usize, seed: u64) -> Self {
        TabuParams {
            max_iters: 100 * n.max(1),
            tenure: n.max(1),
            seed,
            restarts: 5,
            time_budget_ms: None,
        }
    }
}

struct Search<'a> {
    rows: Vec<Vec<(usize, u32)>>,
    dist: &'a [Vec<u32>],
    phi: Vec<usize>,
    occ: Vec<Option<usize>>,
}

impl Search<'_> {
    fn d(&self, a: usize, b: usize) -> i64 {
        i64::from(self.dist[a][b])
    }

    /// Change in cost when logical `i` and `j` exchange positions.
    fn swap_delta(&self, i: usize, j: usize) -> i64 {
        let (pi, pj) = (self.phi[i], self.phi[j]);
        let mut delta = 0;
        for &(k, w) in &self.rows[i] {
            if k != j {
                let pk = self.phi[k];
                delta += i64::from(w) * (self.d(pj, pk) - self.d(pi, pk));
            }
        }
        for &(k, w) in &self.rows[j] {
            if k != i {
                let pk = self.phi[k];
                delta += i64::from(w) * (self.d(pi, pk) - self.d(pj, pk));
            }
        }
        2 * delta
    }

    /// Change in cost when logical `i` moves to the free physical qubit `p`.
    fn move_delta(&self, i: usize, p: usize) -> i64 {
        let pi = self.phi[i];
        let delta: i64 = self.rows[i]
            .iter()
            .map(|&(k, w)| {
                let pk = self.phi[k];
                i64::from(w) * (self.d(p, pk) - self.d(pi, pk))
            })
            .sum();
        2 * delta
    }

    fn cost(&self) -> u64 {
        let mut c = 0u64;
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, w) in row {
                c += u64::from(w) * u64::from(self.dist[self.phi[i]][self.phi[k]]);
            }
        }
        c
    }
}

/// Greedy seed: grow the placement along the interaction graph, putting each
/// logical qubit next to its already-placed partners.
fn greedy_seed(
    f: &FlowMatrix,
    topo: &DeviceTopology,
    root: Option<usize>,
    anchor: Option<usize>,
) -> Vec<usize> {
    let n = f.n();
    let rows = f.sparse_rows();
    let weight = |l: usize| -> u32 { rows[l].iter().map(|&(_, w)| w).sum() };
    let mut order = Vec::with_capacity(n);
    let mut queued = vec![false; n];
    let mut next_root = root;
    while order.len() < n {
        let r = next_root.take().filter(|&r| !queued[r]).unwrap_or_else(|| {
            (0..n).filter(|&l| !queued[l]).max_by_key(|&l| (weight(l), std::cmp::Reverse(l))).unwrap()
        });
        queued[r] = true;
        let mut head = order.len();
        order.push(r);
        while head < order.len() {
            let l = order[head];
            head += 1;
            let mut nb: Vec<(usize, u32)> = rows[l].iter().copied().filter(|&(k, _)| !queued[k]).collect();
            nb.sort_by_key(|&(k, w)| (std::cmp::Reverse(w), k));
            for (k, _) in nb {
                queued[k] = true;
                order.push(k);
            }
        }
    }

    let m = topo.m;
    let mut phi = vec![usize::MAX; n];
    let mut free = vec![true; m];
    let best_anchor = anchor.unwrap_or_else(|| {
        (0..m).max_by_key(|&p| (topo.degree(p), std::cmp::Reverse(p))).unwrap()
    });
    for (idx, &l) in order.iter().enumerate() {
        let p = if idx == 0 {
            best_anchor
        } else {
            let placed: Vec<(usize, u32)> =
                rows[l].iter().copied().filter(|&(k, _)| phi[k] != usize::MAX).collect();
            (0..m)
                .filter(|&p| free[p])
                .min_by_key(|&p| {
                    let pull: u64 = placed
                        .iter()
                        .map(|&(k, w)| u64::from(w) * u64::from(topo.distance(p, phi[k])))
                        .sum();
                    // with no placed partners, stay close to the occupied region
                    let spread: u64 = if placed.is_empty() {
                        (0..n)
                            .filter(|&k| phi[k] != usize::MAX)
                            .map(|k| u64::from(topo.distance(p, phi[k])))
                            .min()
                            .unwrap_or(0)
                    } else {
                        0
                    };
                    (pull, spread, std::cmp::Reverse(topo.degree(p)), p)
                })
                .unwrap()
        };
        phi[l] = p;
        free[p] = false;
    }
    phi
}

fn run_tabu(
    f: &FlowMatrix,
    topo: &DeviceTopology,
    params: &TabuParams,
    start: Vec<usize>,
    started: Instant,
) -> (Vec<usize>, u64) {
    let n = f.n();
    let m = topo.m;
    let mut occ = vec![None; m];
    for (l, &p) in start.iter().enumerate() {
        occ[p] = Some(l);
    }
    let mut s = Search { rows: f.sparse_rows(), dist: &topo.dist, phi: start, occ };
    let mut cost = s.cost();
    let mut best = (s.phi.clone(), cost);
    let floor = f.lower_bound();
    let mut tabu_until = vec![vec![0usize; m]; n];

    for it in 1..=params.max_iters {
        if best.1 <= floor {
            break;
        }
        if let Some(budget) = params.time_budget_ms {
            if started.elapsed().as_millis() as u64 >= budget {
                break;
            }
        }
        // (delta, i, p): first strictly-better candidate in (i, p) order wins ties
        let mut chosen: Option<(i64, usize, usize)> = None;
        for i in 0..n {
            let pi = s.phi[i];
            for p in 0..m {
                if p == pi {
                    continue;
                }
                let (delta, is_tabu) = match s.occ[p] {
                    Some(j) if j < i => continue,
                    Some(j) => (s.swap_delta(i, j), tabu_until[i][p] > it && tabu_until[j][pi] > it),
                    None => (s.move_delta(i, p), tabu_until[i][p] > it),
                };
                let aspirated = (cost as i64 + delta) < best.1 as i64;
                if is_tabu && !aspirated {
                    continue;
                }
                if chosen.is_none_or(|(d, _, _)| delta < d) {
                    chosen = Some((delta, i, p));
                }
            }
        }
        let Some((delta, i, p)) = chosen else { break };
        let pi = s.phi[i];
        match s.occ[p] {
            Some(j) => {
                s.phi[i] = p;
                s.phi[j] = pi;
                s.occ[p] = Some(i);
                s.occ[pi] = Some(j);
                tabu_until[i][pi] = it + params.tenure;
                tabu_until[j][p] = it + params.tenure;
            }
            None => {
                s.phi[i] = p;
                s.occ[p] = Some(i);
                s.occ[pi] = None;
                tabu_until[i][pi] = it + params.tenure;
            }
        }
        cost = (cost as i64 + delta) as u64;
        debug_assert_eq!(cost, s.cost(), "incremental delta diverged from full cost");
        if cost < best.1 {
            best = (s.phi.clone(), cost);
        }
    }
    best
}

/// Best placement found over `params.restarts` Tabu runs. The first run starts
/// from the greedy seed; later runs start from seeds rooted at random qubits.
pub fn tabu_place(f: &FlowMatrix, topo: &DeviceTopology, params: &TabuParams) -> Result<(QubitMap, u64)> {
    let n = f.n();
    if topo.m < n {
        return Err(Error::DeviceTooSmall { device: topo.m, circuit: n });
    }
    if params.max_iters == 0 || params.tenure == 0 {
        return Err(Error::Invalid("tabu max_iters and tenure must be at least 1".into()));
    }
    let started = Instant::now();
    let mut best: Option<(Vec<usize>, u64)> = None;
    for r in 0..params.restarts.max(1) {
        let start = if r == 0 {
            greedy_seed(f, topo, None, None)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(r as u64);
            let root = rng.random_range(0..n.max(1));
            let mut anchors: Vec<usize> = (0..topo.m).collect();
            anchors.shuffle(&mut rng);
            greedy_seed(f, topo, Some(root), Some(anchors[0]))
        };
        let found = run_tabu(f, topo, params, start, started);
        if best.as_ref().is_none_or(|b| found.1 < b.1) {
            best = Some(found);
        }
    }
    let (phi, cost) = best.expect("at least one restart");
    let map = QubitMap::new(phi, topo.m)?;
    debug_assert_eq!(cost, qap_cost(&map, f, &topo.dist));
    Ok((map, cost))
}
