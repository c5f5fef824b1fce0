use super::{Dag, Edit, NodeSet};
use crate::error::{Error, Result};

/// Transitive closure of a DAG's edge relation: `reaches(i, j)` iff `i ⇝ j`.
///
/// Additions are propagated in place; deletions and reversals recompute the
/// closure from the edited graph. Either way the matrix always equals the
/// closure of the graph it was last applied to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AncestorMatrix {
    desc: Vec<NodeSet>,
}

impl AncestorMatrix {
    pub fn from_dag(g: &Dag) -> Self {
        let d = g.d();
        let mut children = vec![NodeSet::EMPTY; d];
        for v in 0..d {
            for u in g.parents(v) {
                children[u].insert(v);
            }
        }
        let mut desc = vec![NodeSet::EMPTY; d];
        for &u in g.topological_order().iter().rev() {
            let mut s = NodeSet::EMPTY;
            for c in children[u] {
                s = s.union(desc[c]).with(c);
            }
            desc[u] = s;
        }
        AncestorMatrix { desc }
    }

    pub fn d(&self) -> usize {
        self.desc.len()
    }

    #[inline]
    pub fn reaches(&self, i: usize, j: usize) -> bool {
        self.desc[i].contains(j)
    }

    #[inline]
    pub fn descendants(&self, i: usize) -> NodeSet {
        self.desc[i]
    }

    pub fn ancestors(&self, j: usize) -> NodeSet {
        (0..self.d()).filter(|&i| self.desc[i].contains(j)).collect()
    }

    /// Whether inserting `from -> to` would close a cycle.
    #[inline]
    pub fn would_create_cycle(&self, from: usize, to: usize) -> bool {
        from == to || self.desc[to].contains(from)
    }

    /// Applies `edit` to `g` and updates the closure. On error neither the
    /// graph nor the matrix is modified.
    pub fn apply(&mut self, g: &mut Dag, edit: Edit) -> Result<()> {
        debug_assert_eq!(g.d(), self.d());
        let d = g.d();
        let check = |a: usize, b: usize| -> Result<()> {
            if a >= d || b >= d || a == b {
                Err(Error::input(format!("edit {edit:?} out of range for d={d}")))
            } else {
                Ok(())
            }
        };
        match edit {
            Edit::Add { from, to } => {
                check(from, to)?;
                if g.has_edge(from, to) {
                    return Err(Error::input(format!("edge {from}->{to} already present")));
                }
                if self.would_create_cycle(from, to) {
                    return Err(Error::Cycle(format!("{to} already reaches {from}")));
                }
                g.apply_unchecked(edit);
                let gained = self.desc[to].with(to);
                for a in 0..d {
                    if a == from || self.desc[a].contains(from) {
                        self.desc[a] = self.desc[a].union(gained);
                    }
                }
            }
            Edit::Delete { from, to } => {
                check(from, to)?;
                if !g.has_edge(from, to) {
                    return Err(Error::input(format!("edge {from}->{to} not present")));
                }
                g.apply_unchecked(edit);
                *self = AncestorMatrix::from_dag(g);
            }
            Edit::Reverse { from, to } => {
                check(from, to)?;
                if !g.has_edge(from, to) {
                    return Err(Error::input(format!("edge {from}->{to} not present")));
                }
                let other = g.parents(to).without(from);
                if !self.desc[from].is_disjoint(other) {
                    return Err(Error::Cycle(format!(
                        "another path {from} ⇝ {to} exists, reversal would close a cycle"
                    )));
                }
                g.apply_unchecked(edit);
                *self = AncestorMatrix::from_dag(g);
            }
        }
        Ok(())
    }
}
