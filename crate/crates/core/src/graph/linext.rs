use super::{Dag, NodeSet};
use crate::error::{Error, Result};

/// Default node cap for linear-extension counting (the table has `2^d` entries).
pub const LINEXT_MAX_NODES: usize = 24;

/// Number of node orders consistent with `g`, computed exactly.
///
/// `u128` holds `32!` without overflow, so counts are exact for every graph
/// the crate can represent.
pub fn count_linear_extensions(g: &Dag) -> Result<u128> {
    count_linear_extensions_capped(g, LINEXT_MAX_NODES)
}

pub fn count_linear_extensions_capped(g: &Dag, max_nodes: usize) -> Result<u128> {
    let d = g.d();
    if d > max_nodes {
        return Err(Error::resource(format!(
            "linear-extension counting needs 2^{d} entries; cap is d <= {max_nodes}"
        )));
    }
    let parents = g.parent_sets();
    // ways[S]: orders of S in which every node's parents precede it. Only
    // predecessor-closed S get a nonzero value.
    let mut ways = vec![0u128; 1usize << d];
    ways[0] = 1;
    for s in 1..(1usize << d) {
        let set = NodeSet::from_bits(s as u32);
        let mut total = 0u128;
        for v in set {
            let rest = set.without(v);
            if parents[v].is_subset_of(rest) {
                total += ways[rest.bits() as usize];
            }
        }
        ways[s] = total;
    }
    Ok(ways[(1usize << d) - 1])
}
