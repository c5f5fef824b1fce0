use super::{parents_acyclic, AncestorMatrix, Dag, NodeSet};
use crate::error::{Error, Result};

/// Largest `d` for which [`enumerate_dags`] is offered.
pub const ENUMERATION_MAX_NODES: usize = 6;

/// Streams every labeled DAG on `d` nodes exactly once.
///
/// Up to four nodes the graphs come from filtering all parent-set
/// assignments. Beyond that each DAG on `d - 1` nodes is extended by a new
/// node `d - 1` with every disjoint (parents, children) pair that keeps the
/// graph acyclic; restriction to the first `d - 1` nodes makes that
/// decomposition unique.
pub fn enumerate_dags(d: usize) -> Result<DagIter> {
    if d > ENUMERATION_MAX_NODES {
        return Err(Error::resource(format!(
            "DAG enumeration is limited to d <= {ENUMERATION_MAX_NODES} (requested {d})"
        )));
    }
    if d <= 4 {
        return Ok(DagIter::Listed(by_parent_assignment(d).into_iter()));
    }
    let base: Vec<Dag> = enumerate_dags(d - 1)?.collect();
    Ok(DagIter::Extended(Extension::new(base)))
}

fn by_parent_assignment(d: usize) -> Vec<Dag> {
    // parent sets of node i range over subsets of V \ {i}: 2^(d-1) choices each
    let per_node = 1usize << d.saturating_sub(1);
    let total = per_node.pow(d as u32);
    let mut out = Vec::new();
    let mut parents = vec![NodeSet::EMPTY; d];
    for code in 0..total {
        let mut c = code;
        for (i, p) in parents.iter_mut().enumerate() {
            *p = NodeSet::unsqueeze(c % per_node, i);
            c /= per_node;
        }
        if parents_acyclic(&parents) {
            out.push(Dag::from_parents_unchecked(parents.clone()));
        }
    }
    out
}

pub enum DagIter {
    Listed(std::vec::IntoIter<Dag>),
    Extended(Extension),
}

impl Iterator for DagIter {
    type Item = Dag;

    fn next(&mut self) -> Option<Dag> {
        match self {
            DagIter::Listed(it) => it.next(),
            DagIter::Extended(ext) => ext.next(),
        }
    }
}

pub struct Extension {
    base: Vec<Dag>,
    k: usize,
    idx: usize,
    // ternary code over the k old nodes: 0 unrelated, 1 parent, 2 child
    code: usize,
    codes: usize,
    reach: Vec<NodeSet>,
}

impl Extension {
    fn new(base: Vec<Dag>) -> Self {
        let k = base.first().map_or(0, Dag::d);
        let reach = base.first().map(closure_with_self).unwrap_or_default();
        Extension {
            base,
            k,
            idx: 0,
            code: 0,
            codes: 3usize.pow(k as u32),
            reach,
        }
    }
}

fn closure_with_self(g: &Dag) -> Vec<NodeSet> {
    let anc = AncestorMatrix::from_dag(g);
    (0..g.d()).map(|i| anc.descendants(i).with(i)).collect()
}

impl Iterator for Extension {
    type Item = Dag;

    fn next(&mut self) -> Option<Dag> {
        loop {
            if self.idx >= self.base.len() {
                return None;
            }
            if self.code >= self.codes {
                self.idx += 1;
                self.code = 0;
                if let Some(g) = self.base.get(self.idx) {
                    self.reach = closure_with_self(g);
                }
                continue;
            }
            let mut c = self.code;
            self.code += 1;
            let mut new_parents = NodeSet::EMPTY;
            let mut new_children = NodeSet::EMPTY;
            for i in 0..self.k {
                match c % 3 {
                    1 => new_parents.insert(i),
                    2 => new_children.insert(i),
                    _ => {}
                }
                c /= 3;
            }
            // a cycle through the new node needs a child that reaches a parent
            let downstream = new_children
                .iter()
                .fold(NodeSet::EMPTY, |acc, ch| acc.union(self.reach[ch]));
            if !downstream.is_disjoint(new_parents) {
                continue;
            }
            let g = &self.base[self.idx];
            let mut parents = Vec::with_capacity(self.k + 1);
            for i in 0..self.k {
                let mut p = g.parents(i);
                if new_children.contains(i) {
                    p.insert(self.k);
                }
                parents.push(p);
            }
            parents.push(new_parents);
            return Some(Dag::from_parents_unchecked(parents));
        }
    }
}
