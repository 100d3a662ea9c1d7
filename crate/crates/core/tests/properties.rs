use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use permuc::benchgen::{gen_lattice, gen_nnn, random_3_regular, BenchmarkSpec, Family};
use permuc::ir::{block_matrix, build_hamiltonian, unify_terms, Circuit, Gate, Hamiltonian, PauliTerm};
use permuc::linalg::{swap_matrix, Pauli};
use permuc::pipeline::{compile, CompileOptions};
use permuc::placement::{flow_matrix, qap_cost, tabu_place, QubitMap, TabuParams};
use permuc::router::route;
use permuc::scheduler::{generic_schedule, hybrid_alap};
use permuc::simcheck::{
    circuit_unitary, compare_to_reference, reference_unitary, verify_permutation_equivalence, RefOp, DEFAULT_CAP,
    EQUIV_TOL,
};
use permuc::synth::{cnot_count, count_hw, expand, weyl_coordinates, GateSet, GateSetName};
use permuc::topology::{make_grid, make_line, preset, DeviceTopology};
use permuc::unifier::dress_swaps;

fn pauli(c: char) -> Matrix2<C64> {
    let (o, i, z) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    match c {
        'X' => Matrix2::new(z, o, o, z),
        'Y' => Matrix2::new(z, -i, i, z),
        _ => Matrix2::new(o, z, z, -o),
    }
}

fn kron2(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Scaling and squaring over a truncated Taylor series.
fn expm(a: &Matrix4<C64>) -> Matrix4<C64> {
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let s = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let scaled = a / C64::new(2f64.powi(s), 0.0);
    let mut term = Matrix4::<C64>::identity();
    let mut sum = term;
    for k in 1..30 {
        term = term * scaled / C64::new(k as f64, 0.0);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

fn max_diff(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn bfs_oracle(m: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..m)
        .map(|s| {
            let mut d = vec![u32::MAX; m];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if d[v] == u32::MAX {
                        d[v] = d[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// A random spanning tree plus extra edges, so always connected.
fn connected_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=60).prop_flat_map(|m| {
        let parents = (1..m).map(|v| 0..v).collect::<Vec<_>>();
        let extra = prop::collection::vec((0..m, 0..m), 0..m);
        (Just(m), parents, extra).prop_map(|(m, parents, extra)| {
            let mut set = BTreeSet::new();
            for (k, p) in parents.into_iter().enumerate() {
                set.insert((p, k + 1));
            }
            for (a, b) in extra {
                if a != b {
                    set.insert((a.min(b), a.max(b)));
                }
            }
            (m, set.into_iter().collect())
        })
    })
}

const TWO: [&str; 9] = ["XX", "YY", "ZZ", "XY", "YX", "XZ", "ZX", "YZ", "ZY"];
const ONE: [&str; 3] = ["X", "Y", "Z"];

/// Random 2-local Hamiltonian on `n` qubits with at least one two-qubit term.
fn hamiltonian(max_n: usize) -> impl Strategy<Value = Hamiltonian> {
    (3usize..=max_n).prop_flat_map(|n| {
        let two = prop::collection::vec((0..TWO.len(), 0..n, 1..n, 0.05f64..3.0), 1..12);
        let one = prop::collection::vec((0..ONE.len(), 0..n, 0.05f64..3.0), 0..5);
        (Just(n), two, one, 0.1f64..1.5).prop_map(|(n, two, one, time)| {
            let mut terms: Vec<PauliTerm> = two
                .into_iter()
                .map(|(k, u, shift, c)| PauliTerm::two(TWO[k], u, (u + shift) % n, c))
                .collect();
            terms.extend(one.into_iter().map(|(k, q, c)| PauliTerm::one(ONE[k], q, c)));
            build_hamiltonian(n, terms, time, 1).unwrap()
        })
    })
}

fn small_device(n: usize) -> DeviceTopology {
    if n <= 6 { make_grid(2, 3).unwrap() } else { make_grid(2, 4).unwrap() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn commuting_block_equals_exponential_of_sum(
        a in -3.0f64..3.0, b in -3.0f64..3.0, g in -3.0f64..3.0, t in -2.0f64..2.0,
    ) {
        let terms = vec![PauliTerm::two("XX", 0, 1, a), PauliTerm::two("YY", 0, 1, b), PauliTerm::two("ZZ", 0, 1, g)];
        let u = block_matrix(&terms, t).unwrap();
        let gen = kron2(&pauli('X'), &pauli('X')) * C64::new(a, 0.0)
            + kron2(&pauli('Y'), &pauli('Y')) * C64::new(b, 0.0)
            + kron2(&pauli('Z'), &pauli('Z')) * C64::new(g, 0.0);
        let want = expm(&(gen * C64::new(0.0, t)));
        prop_assert!(max_diff(&u, &want) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn distances_match_bfs((m, edges) in connected_graph()) {
        let topo = DeviceTopology::new("random", m, &edges).unwrap();
        let oracle = bfs_oracle(m, &edges);
        for a in 0..m {
            for b in 0..m {
                prop_assert_eq!(topo.distance(a, b), oracle[a][b]);
            }
        }
    }

    #[test]
    fn unify_is_a_partition(h in hamiltonian(7)) {
        let (blocks, singles) = unify_terms(&h).unwrap();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for b in &blocks {
            for t in &b.terms {
                prop_assert_eq!(t.pair(), Some(b.pair));
                *seen.entry(format!("{t:?}")).or_default() += 1;
            }
        }
        let mut want: HashMap<String, usize> = HashMap::new();
        for t in h.terms.iter().filter(|t| t.is_two_qubit()) {
            *want.entry(format!("{t:?}")).or_default() += 1;
        }
        prop_assert_eq!(seen, want);
        prop_assert_eq!(blocks.len(), h.interaction_graph().len());
        prop_assert_eq!(singles.len(), h.terms.iter().filter(|t| !t.is_two_qubit()).count());
    }

    #[test]
    fn dressing_is_swap_times_block(h in hamiltonian(5)) {
        let (blocks, _) = unify_terms(&h).unwrap();
        for b in &blocks {
            let d = b.dressed_with_swap();
            prop_assert!(max_diff(&d.matrix, &(swap_matrix() * b.matrix)) < 1e-12);
            prop_assert!(cnot_count(&weyl_coordinates(&d.matrix).unwrap()) <= 3);
        }
    }

    #[test]
    fn routing_replays_and_is_deterministic(h in hamiltonian(8), seed in any::<u64>()) {
        let topo = small_device(h.n);
        let (blocks, _) = unify_terms(&h).unwrap();
        let f = flow_matrix(&blocks, h.n);
        let params = TabuParams::defaults_for(h.n, seed);
        let (phi0, cost) = tabu_place(&f, &topo, &params).unwrap();
        prop_assert_eq!(tabu_place(&f, &topo, &params).unwrap(), (phi0.clone(), cost));
        prop_assert_eq!(qap_cost(&phi0, &f, &topo.dist), cost);

        let rp = route(&blocks, &phi0, &topo, seed).unwrap();
        prop_assert_eq!(&route(&blocks, &phi0, &topo, seed).unwrap(), &rp);
        rp.validate(&topo, &blocks).unwrap();
        prop_assert_eq!(rp.gate_sets.len(), rp.maps.len());
        prop_assert!(rp.gate_sets.last().unwrap().transition.is_none());

        let dressed = dress_swaps(&rp);
        dressed.validate(&topo, &blocks).unwrap();
        prop_assert!(dressed.swaps_dressed <= dressed.swaps_inserted);
        prop_assert_eq!(dressed.swaps_inserted, rp.swaps_inserted);
        prop_assert_eq!(dressed.two_qubit_gates(), rp.two_qubit_gates() - dressed.swaps_dressed);
    }

    #[test]
    fn schedules_replay_and_hybrid_is_no_deeper(h in hamiltonian(8), seed in any::<u64>()) {
        let topo = small_device(h.n);
        let (blocks, _) = unify_terms(&h).unwrap();
        let phi0 = tabu_place(&flow_matrix(&blocks, h.n), &topo, &TabuParams::defaults_for(h.n, seed)).unwrap().0;
        let rp = dress_swaps(&route(&blocks, &phi0, &topo, seed).unwrap());
        let generic = generic_schedule(&rp, &topo).unwrap();
        let hybrid = hybrid_alap(&rp, &topo).unwrap();
        for sc in [&generic, &hybrid] {
            sc.validate(&topo).unwrap();
            sc.check_complete(&rp).unwrap();
            prop_assert_eq!(sc.final_map.clone(), rp.final_map().clone());
        }
        prop_assert!(hybrid.depth_blocks <= generic.depth_blocks);
    }

    #[test]
    fn compiled_circuits_are_equivalent(h in hamiltonian(6), seed in 0u64..1000) {
        let topo = small_device(h.n);
        let opts = CompileOptions { seed, ..CompileOptions::default() };
        let c = compile(&h, &topo, &opts).unwrap();
        prop_assert_eq!(c.whole.depth_blocks, c.whole.without_singles().unwrap().depth_blocks);
        let ex = expand(&c.whole, &GateSet::new(GateSetName::Cnot)).unwrap();
        let rep = verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap();
        prop_assert!(rep.ok, "{:?}", rep);
        prop_assert!(rep.max_dev_alt_anchor < EQUIV_TOL);
        let cz = count_hw(&c.whole, &GateSet::new(GateSetName::Cz)).unwrap();
        prop_assert_eq!(cz.two_qubit_count, c.metrics.two_qubit_count);
    }

    #[test]
    fn basis_states_embed_little_endian(n in 1usize..=6, q in 0usize..6, r in 0usize..6) {
        prop_assume!(q < n && r < n && q != r);
        let mut c = Circuit::new(n);
        c.push(Gate::Rot { axis: Pauli::X, angle: std::f64::consts::PI, qubit: q }).unwrap();
        let u = circuit_unitary(&c, DEFAULT_CAP).unwrap();
        prop_assert!(u[(1 << q, 0)].norm() > 1.0 - 1e-12);

        // SWAP relabels bits: |x> goes to |x with bits q and r exchanged>.
        let mut s = Circuit::new(n);
        s.push(Gate::Swap(q, r)).unwrap();
        let u = circuit_unitary(&s, DEFAULT_CAP).unwrap();
        for x in 0..1usize << n {
            let (bq, br) = (x >> q & 1, x >> r & 1);
            let y = x & !(1 << q) & !(1 << r) | bq << r | br << q;
            prop_assert!((u[(y, x)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }
}

#[test]
fn presets_are_symmetric_without_self_loops() {
    for name in ["sycamore54", "montreal27", "aspen16", "grid:5x6", "line:9", "all2all:7"] {
        let t = preset(name).unwrap();
        for (a, b) in &t.edges {
            assert_ne!(a, b, "{name}");
            assert!(t.is_edge(*a, *b) && t.is_edge(*b, *a), "{name}");
            assert!(t.neighbors(*b).contains(a), "{name}");
        }
        for a in 0..t.m {
            assert_eq!(t.distance(a, a), 0);
            for b in 0..t.m {
                assert_eq!(t.distance(a, b), t.distance(b, a));
                assert_eq!(t.distance(a, b) == 1, t.is_edge(a, b));
            }
        }
    }
}

fn brute_force_optimum(f: &permuc::placement::FlowMatrix, topo: &DeviceTopology) -> u64 {
    fn rec(
        k: usize,
        phi: &mut Vec<usize>,
        used: &mut [bool],
        f: &permuc::placement::FlowMatrix,
        topo: &DeviceTopology,
        best: &mut u64,
    ) {
        if k == f.n() {
            let map = QubitMap::new(phi.clone(), topo.m).unwrap();
            *best = (*best).min(qap_cost(&map, f, &topo.dist));
            return;
        }
        for p in 0..topo.m {
            if !used[p] {
                used[p] = true;
                phi.push(p);
                rec(k + 1, phi, used, f, topo, best);
                phi.pop();
                used[p] = false;
            }
        }
    }
    let mut best = u64::MAX;
    rec(0, &mut Vec::new(), &mut vec![false; topo.m], f, topo, &mut best);
    best
}

#[test]
fn tabu_matches_exhaustive_search() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    let mut misses = Vec::new();
    for trial in 0..50u64 {
        let n = rng.random_range(3..=7);
        let topo = if trial % 2 == 0 { small_device(n) } else { make_line(n + 1).unwrap() };
        let mut terms = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.45) {
                    terms.push(PauliTerm::two("ZZ", u, v, 1.0));
                }
            }
        }
        terms.push(PauliTerm::two("XX", 0, n - 1, 1.0));
        let h = build_hamiltonian(n, terms, 1.0, 1).unwrap();
        let (blocks, _) = unify_terms(&h).unwrap();
        let f = flow_matrix(&blocks, n);
        let (_, cost) = tabu_place(&f, &topo, &TabuParams::defaults_for(n, trial)).unwrap();
        let opt = brute_force_optimum(&f, &topo);
        assert!(cost >= opt);
        if cost == opt {
            hits += 1;
        } else {
            misses.push((trial, n, cost, opt));
        }
    }
    eprintln!("tabu optimal on {hits}/50; misses {misses:?}");
    assert!(hits >= 45, "tabu optimal on only {hits}/50: {misses:?}");

    // NNN Heisenberg on a 2x3 grid: 720 permutations.
    let h = gen_nnn(Family::NnnHeisenberg, 6, 0, false).unwrap();
    let topo = make_grid(2, 3).unwrap();
    let f = flow_matrix(&unify_terms(&h).unwrap().0, 6);
    let (_, cost) = tabu_place(&f, &topo, &TabuParams::defaults_for(6, 0)).unwrap();
    assert_eq!(cost, brute_force_optimum(&f, &topo));
}

#[test]
fn generated_block_counts_match_edges() {
    for family in Family::ALL {
        for n in [4usize, 6, 8, 12, 16, 30] {
            if !family.accepts(n) {
                continue;
            }
            for h in BenchmarkSpec::new(family, n, 3).generate().unwrap() {
                let (blocks, _) = unify_terms(&h).unwrap();
                assert_eq!(blocks.len(), h.interaction_graph().len(), "{family} n={n}");
            }
        }
    }
    let h = gen_lattice(Family::Heisenberg1d, 9, 0).unwrap();
    assert_eq!(unify_terms(&h).unwrap().0.len(), 8);
}

#[test]
fn nnn_edge_count_is_2n_minus_3() {
    for family in [Family::NnnIsing, Family::NnnXy, Family::NnnHeisenberg] {
        for n in 3..=40 {
            let h = gen_nnn(family, n, n as u64, true).unwrap();
            assert_eq!(h.interaction_graph().len(), 2 * n - 3, "{family} n={n}");
        }
    }
}

#[test]
fn regular_graphs_are_simple_cubic_and_seeded() {
    for n in (4..=22).step_by(2) {
        for seed in 0..100 {
            let edges = random_3_regular(n, seed).unwrap();
            assert_eq!(edges, random_3_regular(n, seed).unwrap());
            let set: BTreeSet<_> = edges.iter().copied().collect();
            assert_eq!(set.len(), edges.len(), "multi-edge n={n} seed={seed}");
            let mut deg = vec![0; n];
            for (a, b) in edges {
                assert!(a < b);
                deg[a] += 1;
                deg[b] += 1;
            }
            assert!(deg.iter().all(|&d| d == 3), "n={n} seed={seed}");
        }
    }
}

#[test]
fn anticommuting_reorder_is_detected() {
    let h = build_hamiltonian(
        4,
        vec![PauliTerm::two("XX", 1, 2, 0.7), PauliTerm::two("YY", 2, 3, 0.4)],
        1.0,
        1,
    )
    .unwrap();
    let c = compile(&h, &make_line(4).unwrap(), &CompileOptions::default()).unwrap();
    let ex = expand(&c.whole, &GateSet::new(GateSetName::Cnot)).unwrap();
    assert!(verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap().ok);

    let (blocks, _) = unify_terms(&h).unwrap();
    let emitted: Vec<usize> = c.whole.gates().filter_map(|g| g.block()).map(|b| b.id).collect();
    let swapped: Vec<RefOp> = emitted
        .iter()
        .rev()
        .map(|&id| RefOp::Two { pair: blocks[id].pair, matrix: blocks[id].matrix })
        .collect();
    let wrong: DMatrix<C64> = reference_unitary(4, &swapped, DEFAULT_CAP).unwrap();
    let circ = &ex.circuit;
    let dev = compare_to_reference(
        circ,
        4,
        circ.initial_map.as_deref().unwrap(),
        circ.final_map.as_deref().unwrap(),
        &wrong,
        DEFAULT_CAP,
    )
    .unwrap();
    assert!(dev.max_dev > 1e-3, "reordered reference still matched: {}", dev.max_dev);
}
