use crate::error::{Error, Result};
use crate::graph::{enumerate_dags, Dag};
use crate::numeric::{log_sum_exp, SquareMatrix};
use crate::priors::GlobalPrior;
use crate::scoring::FamilyScoreTable;

/// Largest `d` for full posterior enumeration.
pub const BRUTE_MAX_NODES: usize = 5;

/// Normalized posterior over every DAG on `d` nodes.
#[derive(Clone, Debug)]
pub struct BrutePosterior {
    pub graphs: Vec<Dag>,
    /// `ln p(G | D)`, aligned with `graphs`.
    pub log_post: Vec<f64>,
    /// `ln Σ_G p(D | G) p(G)` with the prior unnormalized.
    pub log_joint_total: f64,
    /// `ln Σ_G p(G)` over graphs admissible under the score table.
    pub log_prior_total: f64,
}

pub fn brute_force_posterior(t: &FamilyScoreTable, prior: &GlobalPrior) -> Result<BrutePosterior> {
    let d = t.d();
    if d > BRUTE_MAX_NODES {
        return Err(Error::resource(format!(
            "posterior enumeration needs d <= {BRUTE_MAX_NODES} (got {d})"
        )));
    }
    let graphs: Vec<Dag> = enumerate_dags(d)?.collect();
    let mut joint = Vec::with_capacity(graphs.len());
    let mut priors = Vec::with_capacity(graphs.len());
    for g in &graphs {
        let ll = t.log_marglik_or_neg_inf(g);
        if ll == f64::NEG_INFINITY {
            joint.push(ll);
        } else {
            let lp = prior.log_prior(g)?;
            priors.push(lp);
            joint.push(ll + lp);
        }
    }
    let total = log_sum_exp(&joint);
    if total == f64::NEG_INFINITY {
        return Err(Error::Undefined("posterior has no mass".into()));
    }
    Ok(BrutePosterior {
        log_post: joint.iter().map(|&l| l - total).collect(),
        graphs,
        log_joint_total: total,
        log_prior_total: log_sum_exp(&priors),
    })
}

impl BrutePosterior {
    pub fn d(&self) -> usize {
        self.graphs.first().map_or(0, Dag::d)
    }

    /// `ln p(D)` under the normalized prior.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_joint_total - self.log_prior_total
    }

    pub fn probs(&self) -> impl Iterator<Item = (&Dag, f64)> {
        self.graphs.iter().zip(self.log_post.iter().map(|l| l.exp()))
    }

    /// Posterior probability of an arbitrary graph feature.
    pub fn expectation(&self, feature: impl Fn(&Dag) -> bool) -> f64 {
        self.probs().filter(|(g, _)| feature(g)).map(|(_, p)| p).sum()
    }

    /// `E[f(G)]` for a real-valued function.
    pub fn expect(&self, f: impl Fn(&Dag) -> f64) -> f64 {
        self.probs().map(|(g, p)| p * f(g)).sum()
    }

    pub fn edge_marginals(&self) -> SquareMatrix {
        let d = self.d();
        let mut m = SquareMatrix::zeros(d);
        for (g, p) in self.probs() {
            for (u, v) in g.edges() {
                m.add(u, v, p);
            }
        }
        m
    }

    pub fn undirected_marginals(&self) -> SquareMatrix {
        self.edge_marginals().symmetrized_sum()
    }

    /// `P(u ⇝ v)` for every ordered pair.
    pub fn path_marginals(&self) -> SquareMatrix {
        let d = self.d();
        let mut m = SquareMatrix::zeros(d);
        for (g, p) in self.probs() {
            for u in 0..d {
                for v in g.descendants(u) {
                    m.add(u, v, p);
                }
            }
        }
        m
    }

    /// Highest-posterior graph; earliest in enumeration order on ties.
    pub fn mode(&self) -> (&Dag, f64) {
        let mut best = 0;
        for (k, &l) in self.log_post.iter().enumerate() {
            if l > self.log_post[best] {
                best = k;
            }
        }
        (&self.graphs[best], self.log_post[best].exp())
    }
}
