use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::{dp_build, dp_edge_marginals};
use crate::graph::{parents_acyclic, Dag, NodeSet};
use crate::numeric::SquareMatrix;
use crate::priors::ModularPrior;
use crate::scoring::FamilyScoreTable;

/// Independence proposal built from edge marginals.
///
/// Each unordered pair is drawn independently: `i -> j` with probability
/// `p_ij`, `j -> i` with `p_ji`, no edge otherwise. Marginals are truncated
/// into `[C, 1 - C]`, and a pair whose sum exceeds `1 - C` is rescaled to
/// `1 - C` keeping its orientation ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalProposal {
    p: SquareMatrix,
    c: f64,
}

impl GlobalProposal {
    pub fn new(marginals: &SquareMatrix, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 0.5) {
            return Err(Error::input(format!("truncation constant {c} outside (0, 0.5)")));
        }
        let d = marginals.dim();
        let mut p = SquareMatrix::zeros(d);
        for i in 0..d {
            for j in i + 1..d {
                let (a, b) = (marginals.get(i, j), marginals.get(j, i));
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::input(format!("non-finite marginal at pair ({i}, {j})")));
                }
                let mut a = a.clamp(c, 1.0 - c);
                let mut b = b.clamp(c, 1.0 - c);
                if a + b > 1.0 - c {
                    let s = (1.0 - c) / (a + b);
                    a = (a * s).max(c);
                    b = (b * s).max(c);
                }
                p.set(i, j, a);
                p.set(j, i, b);
            }
        }
        Ok(GlobalProposal { p, c })
    }

    /// Proposal from the exact DP marginals of `t` under `prior`.
    pub fn from_exact(t: &FamilyScoreTable, prior: &ModularPrior, c: f64) -> Result<Self> {
        let tables = dp_build(t, prior)?;
        Self::new(&dp_edge_marginals(&tables), c)
    }

    pub fn d(&self) -> usize {
        self.p.dim()
    }

    pub fn truncation(&self) -> f64 {
        self.c
    }

    /// Truncated `p_ij`.
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p.get(i, j)
    }

    /// Orientation probability `q_ij = p_ij / (p_ij + p_ji)`.
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.p(i, j) / (self.p(i, j) + self.p(j, i))
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.p
    }

    /// Unnormalized log proposal mass of `g`, ignoring acyclicity.
    pub fn log_q(&self, g: &Dag) -> f64 {
        let d = self.d();
        let mut lq = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                lq += if g.has_edge(i, j) {
                    self.p(i, j).ln()
                } else if g.has_edge(j, i) {
                    self.p(j, i).ln()
                } else {
                    (1.0 - self.p(i, j) - self.p(j, i)).ln()
                };
            }
        }
        lq
    }

    /// Draws one graph from the product distribution (possibly cyclic).
    pub fn draw_parents<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<NodeSet> {
        let d = self.d();
        let mut parents = vec![NodeSet::EMPTY; d];
        for i in 0..d {
            for j in i + 1..d {
                let u: f64 = rng.random();
                let pij = self.p(i, j);
                if u < pij {
                    parents[j].insert(i);
                } else if u < pij + self.p(j, i) {
                    parents[i].insert(j);
                }
            }
        }
        parents
    }

    /// Draws until acyclic, at most `max_retries + 1` times. Returns the
    /// graph and the number of draws used, or `None` when all were cyclic.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_retries: usize) -> (Option<Dag>, usize) {
        for attempt in 1..=max_retries + 1 {
            let parents = self.draw_parents(rng);
            if parents_acyclic(&parents) {
                return (Some(Dag::from_parents_unchecked(parents)), attempt);
            }
        }
        (None, max_retries + 1)
    }
}
