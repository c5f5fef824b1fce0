use std::cmp::Ordering;

use super::dp::check_dp_size;
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::priors::ModularPrior;
use crate::scoring::FamilyScoreTable;

fn tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Higher value first, then fewer edges, then the smaller key.
fn better(a: (f64, u32), b: (f64, u32)) -> bool {
    if !tied(a.0, b.0) {
        return a.0 > b.0;
    }
    a.1 < b.1
}

/// Highest-scoring DAG under `Σ_i [log ρ_i(G_i) + score_i(G_i)]`.
///
/// Ties go to the graph with fewest edges, then to the lexicographically
/// smallest vector of parent bitmasks.
pub fn map_dag(t: &FamilyScoreTable, prior: &ModularPrior) -> Result<(Dag, f64)> {
    let d = t.d();
    check_dp_size(d)?;
    if d == 0 {
        return Ok((Dag::empty(0), 0.0));
    }
    let width = 1usize << (d - 1);

    // best family of node i within each squeezed candidate set
    let mut fam_val: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut fam_arg: Vec<Vec<u32>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut val: Vec<f64> = (0..width)
            .map(|idx| {
                let s = t.node_scores(i)[idx];
                if s == f64::NEG_INFINITY {
                    s
                } else {
                    s + prior.log_rho(i, NodeSet::unsqueeze(idx, i), d)
                }
            })
            .collect();
        let mut arg: Vec<u32> = (0..width as u32).collect();
        for b in 0..d - 1 {
            let step = 1usize << b;
            for idx in 0..width {
                if idx & step == 0 {
                    continue;
                }
                let (o, c) = (idx ^ step, idx);
                let cand = (val[o], arg[o].count_ones());
                let cur = (val[c], arg[c].count_ones());
                let take = better(cand, cur)
                    || (!better(cur, cand) && cand.1 == cur.1 && arg[o] < arg[c]);
                if take {
                    val[c] = val[o];
                    arg[c] = arg[o];
                }
            }
        }
        fam_val.push(val);
        fam_arg.push(arg);
    }

    let n = 1usize << d;
    let mut net_val = vec![f64::NEG_INFINITY; n];
    let mut net_edges = vec![0u32; n];
    let mut net_sink = vec![u8::MAX; n];
    net_val[0] = 0.0;

    let family = |i: usize, rest: NodeSet| -> (f64, NodeSet) {
        let idx = rest.squeeze(i);
        (
            fam_val[i][idx],
            NodeSet::unsqueeze(fam_arg[i][idx] as usize, i),
        )
    };
    let reconstruct = |mut s: NodeSet, sink: &[u8], first: usize| -> Vec<NodeSet> {
        let mut parents = vec![NodeSet::EMPTY; d];
        let mut i = first;
        loop {
            let rest = s.without(i);
            parents[i] = family(i, rest).1;
            s = rest;
            if s.is_empty() {
                return parents;
            }
            i = sink[s.bits() as usize] as usize;
        }
    };

    for s in 1..n {
        let set = NodeSet::from_bits(s as u32);
        let mut best: Option<(f64, u32, usize)> = None;
        for i in set {
            let rest = set.without(i);
            let (fv, fp) = family(i, rest);
            let v = net_val[rest.bits() as usize] + fv;
            if v == f64::NEG_INFINITY {
                continue;
            }
            let e = net_edges[rest.bits() as usize] + fp.len() as u32;
            best = match best {
                None => Some((v, e, i)),
                Some((bv, be, bi)) => {
                    if better((v, e), (bv, be)) {
                        Some((v, e, i))
                    } else if better((bv, be), (v, e)) {
                        Some((bv, be, bi))
                    } else {
                        let a = reconstruct(set, &net_sink, i);
                        let b = reconstruct(set, &net_sink, bi);
                        let cmp = a.iter().map(|p| p.bits()).cmp(b.iter().map(|p| p.bits()));
                        if cmp == Ordering::Less {
                            Some((v, e, i))
                        } else {
                            Some((bv, be, bi))
                        }
                    }
                }
            };
        }
        if let Some((v, e, i)) = best {
            net_val[s] = v;
            net_edges[s] = e;
            net_sink[s] = i as u8;
        }
    }
    let full = n - 1;
    if net_val[full] == f64::NEG_INFINITY {
        return Err(Error::Undefined("every graph has zero prior mass".into()));
    }
    let parents = reconstruct(NodeSet::full(d), &net_sink, net_sink[full] as usize);
    let g = Dag::from_parents(parents)?;
    let value = (0..d)
        .map(|i| t.score_or_neg_inf(i, g.parents(i)) + prior.log_rho(i, g.parents(i), d))
        .sum();
    Ok((g, value))
}
