use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::numeric::{log_add, log_sum_exp, SquareMatrix};
use crate::priors::{ModularKind, ModularPrior};
use crate::scoring::FamilyScoreTable;

/// Largest `d` accepted by the subset dynamic programs.
pub const DP_MAX_NODES: usize = 22;

pub(crate) fn check_dp_size(d: usize) -> Result<()> {
    if d > DP_MAX_NODES {
        return Err(Error::resource(format!(
            "subset DP needs 2^{d} entries per table; cap is d <= {DP_MAX_NODES}"
        )));
    }
    Ok(())
}

/// Per-node local weights indexed by squeezed parent set:
/// `raw[i][G] = log ρ_i(G) + score_i(G)` and `cum[i][S] = log Σ_{G ⊆ S} exp raw[i][G]`.
#[derive(Clone, Debug)]
pub struct LocalSums {
    d: usize,
    raw: Vec<Vec<f64>>,
    cum: Vec<Vec<f64>>,
}

impl LocalSums {
    pub fn new(t: &FamilyScoreTable, prior: &ModularPrior) -> Result<Self> {
        Self::build(t.d(), |i, idx| {
            let s = t.node_scores(i)[idx];
            if s == f64::NEG_INFINITY {
                s
            } else {
                prior.log_rho(i, NodeSet::unsqueeze(idx, i), t.d()) + s
            }
        })
    }

    /// Weights with every admissible family score replaced by 1.
    pub fn prior_only(d: usize, max_indegree: usize, prior: &ModularPrior) -> Result<Self> {
        Self::build(d, |i, idx| {
            let p = NodeSet::unsqueeze(idx, i);
            if p.len() > max_indegree {
                f64::NEG_INFINITY
            } else {
                prior.log_rho(i, p, d)
            }
        })
    }

    fn build(d: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_dp_size(d)?;
        let width = 1usize << d.saturating_sub(1);
        let raw: Vec<Vec<f64>> = (0..d).map(|i| (0..width).map(|idx| f(i, idx)).collect()).collect();
        let cum = raw
            .iter()
            .map(|r| {
                let mut a = r.clone();
                zeta_log(&mut a, d.saturating_sub(1));
                a
            })
            .collect();
        Ok(LocalSums { d, raw, cum })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn raw(&self, i: usize) -> &[f64] {
        &self.raw[i]
    }

    pub fn cum(&self, i: usize) -> &[f64] {
        &self.cum[i]
    }

    /// `A_i(S)` for an unsqueezed `S` with `i ∉ S`.
    #[inline]
    pub fn a(&self, i: usize, s: NodeSet) -> f64 {
        self.cum[i][s.squeeze(i)]
    }
}

/// In-place subset-sum transform over `bits` bits, in the log domain.
pub(crate) fn zeta_log(a: &mut [f64], bits: usize) {
    for b in 0..bits {
        let step = 1usize << b;
        for idx in 0..a.len() {
            if idx & step != 0 {
                a[idx] = log_add(a[idx], a[idx ^ step]);
            }
        }
    }
}

fn forward(local: &LocalSums) -> Vec<f64> {
    let d = local.d;
    let mut g = vec![f64::NEG_INFINITY; 1usize << d];
    g[0] = 0.0;
    let mut terms = Vec::with_capacity(d);
    for s in 1..g.len() {
        let set = NodeSet::from_bits(s as u32);
        terms.clear();
        for i in set {
            let rest = set.without(i);
            terms.push(g[rest.bits() as usize] + local.a(i, rest));
        }
        g[s] = log_sum_exp(&terms);
    }
    g
}

fn backward(local: &LocalSums) -> Vec<f64> {
    let d = local.d;
    let full = NodeSet::full(d);
    let mut h = vec![f64::NEG_INFINITY; 1usize << d];
    h[full.bits() as usize] = 0.0;
    let mut terms = Vec::with_capacity(d);
    for s in (0..h.len().saturating_sub(1)).rev() {
        let set = NodeSet::from_bits(s as u32);
        terms.clear();
        for i in full.difference(set) {
            terms.push(local.a(i, set) + h[set.with(i).bits() as usize]);
        }
        h[s] = log_sum_exp(&terms);
    }
    h
}

/// Forward and backward sums of the order DP, plus normalizers.
#[derive(Clone, Debug)]
pub struct DpTables {
    pub local: LocalSums,
    /// `g[S]`: log mass of orders of `S` with each node's parents before it.
    pub g: Vec<f64>,
    /// `h[S]`: log mass of completions of `S` to the full node set.
    pub h: Vec<f64>,
    /// `log Z`: the same forward sum with all family scores set to 1.
    pub log_prior_mass: f64,
}

impl DpTables {
    pub fn d(&self) -> usize {
        self.local.d
    }

    /// `log g(V)`: prior-weighted data mass summed over orders and graphs.
    pub fn log_total(&self) -> f64 {
        self.g[self.g.len() - 1]
    }

    /// `log p(D) = log g(V) - log Z`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_total() - self.log_prior_mass
    }
}

/// Runs the forward and backward passes for `t` under `prior`.
pub fn dp_build(t: &FamilyScoreTable, prior: &ModularPrior) -> Result<DpTables> {
    let local = LocalSums::new(t, prior)?;
    let g = forward(&local);
    let h = backward(&local);
    let log_prior_mass = prior_log_mass(t.d(), t.max_indegree(), prior)?;
    if g[g.len() - 1] == f64::NEG_INFINITY {
        return Err(Error::Undefined("every graph has zero prior mass".into()));
    }
    Ok(DpTables {
        local,
        g,
        h,
        log_prior_mass,
    })
}

type MassKey = (usize, usize, &'static str, Option<usize>);

fn mass_cache() -> &'static Mutex<HashMap<MassKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<MassKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `log Z`: total prior mass over (order, graph) pairs for `d` nodes.
pub fn prior_log_mass(d: usize, max_indegree: usize, prior: &ModularPrior) -> Result<f64> {
    let key = match prior.kind {
        ModularKind::Custom(_) => None,
        _ => Some((d, max_indegree, prior.name(), prior.max_indegree)),
    };
    if let Some(k) = key {
        if let Some(&z) = mass_cache().lock().expect("mass cache poisoned").get(&k) {
            return Ok(z);
        }
    }
    let local = LocalSums::prior_only(d, max_indegree, prior)?;
    let z = forward(&local)[(1usize << d) - 1];
    if let Some(k) = key {
        mass_cache().lock().expect("mass cache poisoned").insert(k, z);
    }
    Ok(z)
}

/// Posterior probability of every directed edge `u -> v`.
///
/// Each contribution `g(S) A_v^{(u)}(S) h(S ∪ v) / g(V)` is a probability
/// bounded by 1, so after forming it from log-domain quantities the sum is
/// accumulated directly.
pub fn dp_edge_marginals(tables: &DpTables) -> SquareMatrix {
    let d = tables.d();
    let total = tables.log_total();
    let mut p = SquareMatrix::zeros(d);
    let mut acc = vec![0.0f64; d];
    for v in 0..d {
        acc.iter_mut().for_each(|x| *x = 0.0);
        let cum = tables.local.cum(v);
        for (idx, &a_s) in cum.iter().enumerate() {
            let s = NodeSet::unsqueeze(idx, v);
            let base = tables.g[s.bits() as usize] + tables.h[s.with(v).bits() as usize];
            if base == f64::NEG_INFINITY || a_s == f64::NEG_INFINITY {
                continue;
            }
            let scale = (base + a_s - total).exp();
            if scale == 0.0 {
                continue;
            }
            for u in s {
                let without = cum[s.without(u).squeeze(v)];
                // A(S) - A(S \ u) = A(S) (1 - exp(A(S \ u) - A(S)))
                acc[u] += scale * -(without - a_s).exp_m1();
            }
        }
        for (u, &x) in acc.iter().enumerate() {
            if u != v {
                p.set(u, v, x.clamp(0.0, 1.0));
            }
        }
    }
    p
}
