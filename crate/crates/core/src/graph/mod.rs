//! DAG representation and the combinatorics around it: acyclicity, single-edge
//! neighborhoods, reachability, enumeration of all labeled DAGs and counting
//! of consistent node orders.

mod ancestors;
mod enumerate;
mod linext;
mod nodeset;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub use ancestors::AncestorMatrix;
pub use enumerate::{enumerate_dags, DagIter, ENUMERATION_MAX_NODES};
pub use linext::{count_linear_extensions, count_linear_extensions_capped, LINEXT_MAX_NODES};
pub use nodeset::{Members, NodeSet, Subsets, MAX_NODES};

/// A single-edge modification of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edit {
    /// Insert `from -> to`.
    Add { from: usize, to: usize },
    /// Remove the existing edge `from -> to`.
    Delete { from: usize, to: usize },
    /// Turn the existing edge `from -> to` into `to -> from`.
    Reverse { from: usize, to: usize },
}

impl Edit {
    /// Nodes whose parent sets change when the edit is applied.
    pub fn touched_families(self) -> (usize, Option<usize>) {
        match self {
            Edit::Add { to, .. } | Edit::Delete { to, .. } => (to, None),
            Edit::Reverse { from, to } => (to, Some(from)),
        }
    }
}

/// A directed acyclic graph over at most [`MAX_NODES`] nodes, stored as one
/// parent set per node.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dag {
    parents: Vec<NodeSet>,
}

impl Dag {
    pub fn empty(d: usize) -> Self {
        assert!(d <= MAX_NODES, "at most {MAX_NODES} nodes are supported");
        Dag {
            parents: vec![NodeSet::EMPTY; d],
        }
    }

    /// Builds a graph from parent sets, checking range, self-loops and acyclicity.
    pub fn from_parents(parents: Vec<NodeSet>) -> Result<Self> {
        let d = parents.len();
        if d > MAX_NODES {
            return Err(Error::input(format!(
                "{d} nodes requested, at most {MAX_NODES} supported"
            )));
        }
        let full = NodeSet::full(d);
        for (i, p) in parents.iter().enumerate() {
            if !p.is_subset_of(full) {
                return Err(Error::input(format!(
                    "parents of node {i} reference nodes outside 0..{d}"
                )));
            }
            if p.contains(i) {
                return Err(Error::input(format!("node {i} is its own parent")));
            }
        }
        if !parents_acyclic(&parents) {
            return Err(Error::Cycle("parent sets contain a directed cycle".into()));
        }
        Ok(Dag { parents })
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if d > MAX_NODES {
            return Err(Error::input(format!(
                "{d} nodes requested, at most {MAX_NODES} supported"
            )));
        }
        let mut parents = vec![NodeSet::EMPTY; d];
        for &(u, v) in edges {
            if u >= d || v >= d {
                return Err(Error::input(format!("edge {u}->{v} out of range for d={d}")));
            }
            parents[v].insert(u);
        }
        Dag::from_parents(parents)
    }

    pub(crate) fn from_parents_unchecked(parents: Vec<NodeSet>) -> Self {
        debug_assert!(parents_acyclic(&parents));
        Dag { parents }
    }

    /// A random DAG: edges sampled along a random order with probability
    /// `edge_prob`, each node keeping at most `max_indegree` parents.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        edge_prob: f64,
        max_indegree: usize,
        rng: &mut R,
    ) -> Self {
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(rng);
        let mut parents = vec![NodeSet::EMPTY; d];
        for b in 0..d {
            let mut cands: Vec<usize> = (0..b)
                .filter(|_| rng.random::<f64>() < edge_prob)
                .map(|a| order[a])
                .collect();
            if cands.len() > max_indegree {
                cands.shuffle(rng);
                cands.truncate(max_indegree);
            }
            parents[order[b]] = cands.into_iter().collect();
        }
        Dag { parents }
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.parents.len()
    }

    #[inline]
    pub fn parents(&self, i: usize) -> NodeSet {
        self.parents[i]
    }

    pub fn parent_sets(&self) -> &[NodeSet] {
        &self.parents
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(from)
    }

    pub fn children(&self, i: usize) -> NodeSet {
        (0..self.d()).filter(|&c| self.parents[c].contains(i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|p| p.len()).sum()
    }

    /// Edges as `(from, to)` pairs, ordered by child then parent.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, p)| p.iter().map(move |u| (u, v)))
            .collect()
    }

    /// Some topological order (parents before children).
    pub fn topological_order(&self) -> Vec<usize> {
        let d = self.d();
        let mut placed = NodeSet::EMPTY;
        let mut order = Vec::with_capacity(d);
        while order.len() < d {
            let before = order.len();
            for i in 0..d {
                if !placed.contains(i) && self.parents[i].is_subset_of(placed) {
                    order.push(i);
                }
            }
            for &i in &order[before..] {
                placed.insert(i);
            }
            assert!(order.len() > before, "graph invariant violated: cycle");
        }
        order
    }

    /// Nodes reachable from `i` by a directed path of length at least one.
    pub fn descendants(&self, i: usize) -> NodeSet {
        let children: Vec<NodeSet> = (0..self.d()).map(|u| self.children(u)).collect();
        let mut seen = NodeSet::EMPTY;
        let mut frontier = children[i];
        while !frontier.is_empty() {
            seen = seen.union(frontier);
            let mut next = NodeSet::EMPTY;
            for u in frontier {
                next = next.union(children[u]);
            }
            frontier = next.difference(seen);
        }
        seen
    }

    /// Whether a directed path `i ⇝ j` exists.
    pub fn has_path(&self, i: usize, j: usize) -> Result<bool> {
        let d = self.d();
        if i >= d || j >= d {
            return Err(Error::input(format!("node out of range for d={d}")));
        }
        if i == j {
            return Err(Error::input("path query needs two distinct nodes"));
        }
        Ok(self.descendants(i).contains(j))
    }

    /// Applies an edit without any validation. Callers guarantee legality.
    pub(crate) fn apply_unchecked(&mut self, edit: Edit) {
        match edit {
            Edit::Add { from, to } => self.parents[to].insert(from),
            Edit::Delete { from, to } => self.parents[to].remove(from),
            Edit::Reverse { from, to } => {
                self.parents[to].remove(from);
                self.parents[from].insert(to);
            }
        }
    }

    pub(crate) fn set_parents_unchecked(&mut self, i: usize, p: NodeSet) {
        self.parents[i] = p;
    }

    /// All single-edge additions, deletions and reversals that keep the graph
    /// acyclic, in a fixed order.
    pub fn legal_edits(&self, anc: &AncestorMatrix) -> Vec<Edit> {
        let mut out = Vec::new();
        self.for_each_legal_edit(anc, |e| out.push(e));
        out
    }

    /// Size of the single-edge neighborhood.
    pub fn count_legal_edits(&self, anc: &AncestorMatrix) -> usize {
        let mut n = 0;
        self.for_each_legal_edit(anc, |_| n += 1);
        n
    }

    fn for_each_legal_edit(&self, anc: &AncestorMatrix, mut f: impl FnMut(Edit)) {
        let d = self.d();
        for u in 0..d {
            for v in 0..d {
                if u == v {
                    continue;
                }
                if self.has_edge(u, v) {
                    f(Edit::Delete { from: u, to: v });
                    // u -> v can be flipped unless another path u ⇝ v survives.
                    let other = self.parents[v].without(u);
                    if anc.descendants(u).is_disjoint(other) {
                        f(Edit::Reverse { from: u, to: v });
                    }
                } else if !self.has_edge(v, u) && !anc.reaches(v, u) {
                    f(Edit::Add { from: u, to: v });
                }
            }
        }
    }

    /// Every acyclic graph one edge addition, deletion or reversal away.
    pub fn neighborhood(&self) -> Vec<Dag> {
        let anc = AncestorMatrix::from_dag(self);
        self.legal_edits(&anc)
            .into_iter()
            .map(|e| {
                let mut g = self.clone();
                g.apply_unchecked(e);
                g
            })
            .collect()
    }

    /// Text encoding `d;p0,p1,...` with each parent set as a decimal bitmask.
    pub fn encode(&self) -> String {
        let masks: Vec<String> = self.parents.iter().map(|p| p.bits().to_string()).collect();
        format!("{};{}", self.d(), masks.join(","))
    }

    pub fn skeleton_has(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v) || self.has_edge(v, u)
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(")?;
        let edges = self.edges();
        for (k, (u, v)) in edges.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{u}->{v}")?;
        }
        write!(f, "; d={})", self.d())
    }
}

impl FromStr for Dag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Dag> {
        let s = s.trim();
        let (d_part, rest) = s
            .split_once(';')
            .ok_or_else(|| Error::input(format!("graph encoding {s:?} lacks ';'")))?;
        let d: usize = d_part
            .parse()
            .map_err(|_| Error::input(format!("bad node count in {s:?}")))?;
        let parents: Vec<NodeSet> = if d == 0 {
            Vec::new()
        } else {
            rest.split(',')
                .map(|m| {
                    m.trim()
                        .parse::<u32>()
                        .map(NodeSet::from_bits)
                        .map_err(|_| Error::input(format!("bad parent mask {m:?} in {s:?}")))
                })
                .collect::<Result<_>>()?
        };
        if parents.len() != d {
            return Err(Error::input(format!(
                "graph encoding {s:?} lists {} parent sets for d={d}",
                parents.len()
            )));
        }
        Dag::from_parents(parents)
    }
}

/// Cycle check on an explicit edge list.
pub fn is_acyclic(edges: &[(usize, usize)], d: usize) -> Result<bool> {
    if d > MAX_NODES {
        return Err(Error::input(format!("d={d} exceeds {MAX_NODES}")));
    }
    let mut parents = vec![NodeSet::EMPTY; d];
    for &(u, v) in edges {
        if u >= d || v >= d {
            return Err(Error::input(format!("edge {u}->{v} out of range for d={d}")));
        }
        if u == v {
            return Ok(false);
        }
        parents[v].insert(u);
    }
    Ok(parents_acyclic(&parents))
}

/// Repeatedly strips nodes whose remaining parents are all stripped.
pub(crate) fn parents_acyclic(parents: &[NodeSet]) -> bool {
    let mut remaining = NodeSet::full(parents.len());
    loop {
        if remaining.is_empty() {
            return true;
        }
        let mut progressed = false;
        for i in remaining {
            if parents[i].is_disjoint(remaining) {
                remaining.remove(i);
                progressed = true;
            }
        }
        if !progressed {
            return false;
        }
    }
}

/// A total order of the nodes; `perm[k]` is the node in position `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Order {
    perm: Vec<usize>,
    pos: Vec<usize>,
}

impl Order {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut pos = vec![usize::MAX; d];
        for (k, &v) in perm.iter().enumerate() {
            if v >= d || pos[v] != usize::MAX {
                return Err(Error::input(format!("{perm:?} is not a permutation")));
            }
            pos[v] = k;
        }
        Ok(Order { perm, pos })
    }

    pub fn identity(d: usize) -> Self {
        Order {
            perm: (0..d).collect(),
            pos: (0..d).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        Order::new(perm).expect("shuffle yields a permutation")
    }

    pub fn d(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn position(&self, node: usize) -> usize {
        self.pos[node]
    }

    /// Nodes placed before `node`.
    pub fn predecessors(&self, node: usize) -> NodeSet {
        self.perm[..self.pos[node]].iter().copied().collect()
    }

    /// Swaps the nodes at positions `a` and `b`.
    pub fn swap_positions(&mut self, a: usize, b: usize) {
        self.perm.swap(a, b);
        self.pos[self.perm[a]] = a;
        self.pos[self.perm[b]] = b;
    }

    /// Every parent precedes its child.
    pub fn is_consistent(&self, g: &Dag) -> bool {
        (0..g.d()).all(|v| g.parents(v).iter().all(|u| self.pos[u] < self.pos[v]))
    }
}
