use std::f64::consts::FRAC_PI_4;

use permuc::benchgen::{baseline_route, gen_nnn, gen_qaoa_reg3, BenchmarkSpec, Family};
use permuc::ir::{unify_terms, PauliTerm, TwoQubitBlock};
use permuc::linalg::swap_matrix;
use permuc::pipeline::{compile, compile_layers, CompileOptions};
use permuc::placement::{flow_matrix, tabu_place, TabuParams};
use permuc::router::route;
use permuc::scheduler::{generic_schedule, hybrid_alap, SinglesPolicy};
use permuc::seed::{sub_seed, PASS_PLACEMENT, PASS_ROUTING};
use permuc::simcheck::{verify_multilayer, verify_permutation_equivalence, DEFAULT_CAP};
use permuc::synth::{count_hw, expand, synth_cnot, weyl_coordinates, GateSet, GateSetName};
use permuc::topology::{make_complete, make_grid, make_line};
use permuc::unifier::dress_swaps;

fn cnot() -> GateSet {
    GateSet::new(GateSetName::Cnot)
}

#[test]
fn swap_sits_at_the_chamber_corner() {
    let c = weyl_coordinates(&swap_matrix()).unwrap();
    for x in c.as_array() {
        assert!((x - FRAC_PI_4).abs() < 1e-9, "{c:?}");
    }
}

#[test]
fn nnn_chain_all_to_all_costs_27_cnots() {
    let h = gen_nnn(Family::NnnHeisenberg, 6, 1, false).unwrap();
    let (blocks, _) = unify_terms(&h).unwrap();
    let per_block: usize = blocks.iter().map(|b| synth_cnot(b).unwrap().two_qubit_count()).sum();
    assert_eq!(blocks.len(), 9);
    assert_eq!(per_block, 27);
    let c = compile(&h, &make_complete(6).unwrap(), &CompileOptions::default()).unwrap();
    assert_eq!(c.metrics.two_qubit_count, 27);
    assert_eq!(c.metrics.swaps, 0);
}

#[test]
fn dressed_zz_costs_three_cnots() {
    let b = TwoQubitBlock::new(0, vec![PauliTerm::two("ZZ", 0, 1, 0.3)], 1.0).unwrap();
    assert_eq!(synth_cnot(&b).unwrap().two_qubit_count(), 2);
    assert_eq!(synth_cnot(&b.dressed_with_swap()).unwrap().two_qubit_count(), 3);
}

#[test]
fn nnn_ising_routes_with_no_more_swaps_than_baseline() {
    let topo = make_grid(2, 5).unwrap();
    for seed in 0..10 {
        let h = gen_nnn(Family::NnnIsing, 10, seed, true).unwrap();
        let (blocks, _) = unify_terms(&h).unwrap();
        let params = TabuParams::defaults_for(10, sub_seed(seed, PASS_PLACEMENT));
        let (phi0, _) = tabu_place(&flow_matrix(&blocks, 10), &topo, &params).unwrap();
        let ours = route(&blocks, &phi0, &topo, sub_seed(seed, PASS_ROUTING)).unwrap();
        let base = baseline_route(&blocks, &phi0, &topo).unwrap();
        base.validate(&topo, &blocks).unwrap();
        assert!(ours.swaps_inserted <= base.swaps_inserted, "seed {seed}: {} > {}", ours.swaps_inserted, base.swaps_inserted);
    }
}

#[test]
fn nnn_xy_hybrid_is_no_deeper_than_generic() {
    let topo = make_line(10).unwrap();
    for seed in 0..10 {
        let h = gen_nnn(Family::NnnXy, 10, seed, true).unwrap();
        let (blocks, _) = unify_terms(&h).unwrap();
        let params = TabuParams::defaults_for(10, sub_seed(seed, PASS_PLACEMENT));
        let (phi0, _) = tabu_place(&flow_matrix(&blocks, 10), &topo, &params).unwrap();
        let rp = dress_swaps(&route(&blocks, &phi0, &topo, sub_seed(seed, PASS_ROUTING)).unwrap());
        let hybrid = hybrid_alap(&rp, &topo).unwrap();
        let generic = generic_schedule(&rp, &topo).unwrap();
        assert!(hybrid.depth_blocks <= generic.depth_blocks, "seed {seed}");
    }
}

#[test]
fn two_layer_qaoa_on_a_line_returns_home() {
    let hams = gen_qaoa_reg3(4, 5, 2, None).unwrap();
    let topo = make_line(4).unwrap();
    let opts = CompileOptions { singles: SinglesPolicy::Trailing, ..CompileOptions::default() };
    let c = compile_layers(&hams, &topo, &opts).unwrap();
    assert_eq!(c.layers.len(), 2);
    assert!(c.routed.swaps_inserted > 0, "K4 on a line needs SWAPs");
    assert_eq!(c.whole.final_map, c.whole.initial_map);
    let layers = c.expand_layers(&cnot()).unwrap();
    let rep = verify_multilayer(&layers, &hams, DEFAULT_CAP).unwrap();
    assert!(rep.ok && rep.identity_permutation, "{rep:?}");
}

#[test]
fn three_layer_qaoa_triples_swaps() {
    let spec = BenchmarkSpec { layers: 3, ..BenchmarkSpec::new(Family::QaoaReg3, 8, 2) };
    let hams = spec.generate().unwrap();
    let opts = CompileOptions { singles: SinglesPolicy::Trailing, ..CompileOptions::default() };
    let c = compile_layers(&hams, &make_grid(2, 4).unwrap(), &opts).unwrap();
    assert_eq!(c.metrics.swaps, 3 * c.layers[0].swaps());
    assert_eq!(c.whole.final_map, c.layers[0].final_map);
    let rep = verify_multilayer(&c.expand_layers(&cnot()).unwrap(), &hams, DEFAULT_CAP).unwrap();
    assert!(rep.ok, "{rep:?}");
}

#[test]
fn cz_and_cnot_counts_agree_on_benchmarks() {
    let topo = make_grid(3, 4).unwrap();
    for family in Family::ALL {
        let Some(n) = [12, 10, 8].into_iter().find(|&n| family.accepts(n)) else { continue };
        let hams = BenchmarkSpec::new(family, n, 4).generate().unwrap();
        let opts = CompileOptions { singles: family.singles_policy(), ..CompileOptions::default() };
        let c = compile_layers(&hams, &topo, &opts).unwrap();
        let cz = count_hw(&c.whole, &GateSet::new(GateSetName::Cz)).unwrap();
        assert_eq!(cz.two_qubit_count, c.metrics.two_qubit_count, "{family}");
    }
}

#[test]
fn nnn_benchmarks_verify_across_seeds() {
    let topo = make_grid(2, 4).unwrap();
    for family in [Family::NnnIsing, Family::NnnXy, Family::NnnHeisenberg] {
        for n in [5, 7] {
            for seed in 0..10 {
                let h = gen_nnn(family, n, seed, true).unwrap();
                let c = compile(&h, &topo, &CompileOptions { seed, ..CompileOptions::default() }).unwrap();
                let ex = expand(&c.whole, &cnot()).unwrap();
                let rep = verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap();
                assert!(rep.ok, "{family} n={n} seed={seed}: {rep:?}");
            }
        }
    }
}

#[test]
fn ten_qubit_spot_check() {
    let h = gen_nnn(Family::NnnHeisenberg, 10, 3, true).unwrap();
    let c = compile(&h, &make_grid(2, 5).unwrap(), &CompileOptions::default()).unwrap();
    let ex = expand(&c.whole, &cnot()).unwrap();
    let rep = verify_permutation_equivalence(&ex, &h, DEFAULT_CAP).unwrap();
    assert!(rep.ok, "{rep:?}");
}
