//! Merging SWAPs with co-located circuit blocks.

use crate::router::RoutedProgram;

/// For each transition in order, fold in the earliest unconsumed routed block
/// acting on the SWAP's logical pair. The dressed matrix is `SWAP * U`.
pub fn dress_swaps(rp: &RoutedProgram) -> RoutedProgram {
    let mut out = rp.clone();
    for i in 0..out.gate_sets.len() {
        let Some(t) = out.gate_sets[i].transition.as_ref() else { continue };
        if t.dressed.is_some() {
            continue;
        }
        let map = &out.maps[i];
        let (Some(x), Some(y)) = (map.logical(t.swap.0), map.logical(t.swap.1)) else { continue };
        let pair = (x.min(y), x.max(y));
        let found = out.gate_sets[..=i]
            .iter()
            .enumerate()
            .flat_map(|(s, g)| g.blocks.iter().enumerate().map(move |(k, b)| (b.id, s, k, b.pair)))
            .filter(|&(_, _, _, p)| p == pair)
            .min_by_key(|&(id, s, k, _)| (id, s, k));
        if let Some((_, s, k, _)) = found {
            let block = out.gate_sets[s].blocks.remove(k);
            out.gate_sets[i].transition.as_mut().unwrap().dressed = Some(Box::new(block.dressed_with_swap()));
            out.swaps_dressed += 1;
        }
    }
    out
}
