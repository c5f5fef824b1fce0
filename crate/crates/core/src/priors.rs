//! Structure priors.
//!
//! A modular prior assigns each family a weight `ρ_i(G_i)`. Summed over the
//! orders a graph is consistent with, it induces
//! `p(G) ∝ Π_i ρ_i(G_i) · #linext(G)`. Ellis weights `1/#linext(G)` undo
//! that factor.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{count_linear_extensions, enumerate_dags, Dag, NodeSet, Order};
use crate::numeric::{fmt_f64, log_sum_exp};

#[derive(Clone, Debug, PartialEq)]
pub enum ModularKind {
    /// `ρ_i(G_i) = 1`.
    Flat,
    /// `ρ_i(G_i) = 1 / C(d-1, |G_i|)`.
    Koivisto,
    /// Per-node log weights keyed by parent bitmask; missing entries are `-inf`.
    Custom(Arc<Vec<HashMap<u32, f64>>>),
}

/// Modular prior with an optional in-degree cap (families above it get weight 0).
#[derive(Clone, Debug, PartialEq)]
pub struct ModularPrior {
    pub kind: ModularKind,
    pub max_indegree: Option<usize>,
}

impl ModularPrior {
    pub fn flat() -> Self {
        ModularPrior {
            kind: ModularKind::Flat,
            max_indegree: None,
        }
    }

    pub fn koivisto() -> Self {
        ModularPrior {
            kind: ModularKind::Koivisto,
            max_indegree: None,
        }
    }

    pub fn with_max_indegree(mut self, k: usize) -> Self {
        self.max_indegree = Some(k);
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModularKind::Flat => "flat",
            ModularKind::Koivisto => "koivisto",
            ModularKind::Custom(_) => "custom",
        }
    }

    /// Parses `[[ [mask, log_weight], ... ], ...]` with one list per node.
    pub fn custom_from_json<R: Read>(r: R, d: usize) -> Result<Self> {
        let raw: Vec<Vec<(u32, f64)>> = serde_json::from_reader(r)?;
        if raw.len() != d {
            return Err(Error::input(format!(
                "custom prior lists {} nodes, expected {d}",
                raw.len()
            )));
        }
        let full = NodeSet::full(d).bits();
        let mut tables = Vec::with_capacity(d);
        for (i, entries) in raw.into_iter().enumerate() {
            let mut m = HashMap::new();
            for (mask, w) in entries {
                if mask & !full != 0 || mask & (1 << i) != 0 {
                    return Err(Error::input(format!(
                        "custom prior: mask {mask} is not a valid parent set of node {i}"
                    )));
                }
                if w.is_nan() || w == f64::INFINITY {
                    return Err(Error::input(format!("custom prior: weight {w} is not allowed")));
                }
                m.insert(mask, w);
            }
            tables.push(m);
        }
        Ok(ModularPrior {
            kind: ModularKind::Custom(Arc::new(tables)),
            max_indegree: None,
        })
    }

    /// `log ρ_i(G_i)` for a node in a `d`-node graph.
    pub fn log_rho(&self, i: usize, parents: NodeSet, d: usize) -> f64 {
        debug_assert!(!parents.contains(i));
        let k = parents.len();
        if self.max_indegree.is_some_and(|cap| k > cap) {
            return f64::NEG_INFINITY;
        }
        match &self.kind {
            ModularKind::Flat => 0.0,
            ModularKind::Koivisto => -(binomial(d.saturating_sub(1), k) as f64).ln(),
            ModularKind::Custom(t) => t
                .get(i)
                .and_then(|m| m.get(&parents.bits()))
                .copied()
                .unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// `Σ_i log ρ_i(G_i)`.
    pub fn log_modular(&self, g: &Dag) -> f64 {
        let d = g.d();
        (0..d).map(|i| self.log_rho(i, g.parents(i), d)).sum()
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u64 = 1;
    for j in 0..k {
        c = c * (n - j) as u64 / (j + 1) as u64;
    }
    c
}

/// Unnormalized log mass of `g` under the graph prior induced by summing the
/// modular prior over orders.
pub fn induced_graph_log_prior(p: &ModularPrior, g: &Dag) -> Result<f64> {
    let ext = count_linear_extensions(g)?;
    Ok(p.log_modular(g) + (ext as f64).ln())
}

/// Prior over DAGs used as an MCMC target.
#[derive(Clone)]
pub enum GlobalPrior {
    /// `p(G) ∝ 1`.
    UniformDag,
    /// `p(G) ∝ Π_i ρ_i(G_i)`, with no order factor.
    Modular(ModularPrior),
    /// `p(G) ∝ Π_i ρ_i(G_i) · #linext(G)`.
    ModularInduced(ModularPrior),
    /// Arbitrary unnormalized log mass.
    Custom(Arc<dyn Fn(&Dag) -> f64 + Send + Sync>),
}

impl fmt::Debug for GlobalPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalPrior::UniformDag => write!(f, "UniformDag"),
            GlobalPrior::Modular(p) => write!(f, "Modular({})", p.name()),
            GlobalPrior::ModularInduced(p) => write!(f, "ModularInduced({})", p.name()),
            GlobalPrior::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl GlobalPrior {
    pub fn log_prior(&self, g: &Dag) -> Result<f64> {
        Ok(match self {
            GlobalPrior::UniformDag => 0.0,
            GlobalPrior::Modular(p) => p.log_modular(g),
            GlobalPrior::ModularInduced(p) => induced_graph_log_prior(p, g)?,
            GlobalPrior::Custom(f) => f(g),
        })
    }

    /// Whether the prior factorizes over families, so a local edit changes
    /// the log prior only through the touched families.
    pub fn modular_part(&self) -> Option<Option<&ModularPrior>> {
        match self {
            GlobalPrior::UniformDag => Some(None),
            GlobalPrior::Modular(p) => Some(Some(p)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            GlobalPrior::UniformDag => "uniform".into(),
            GlobalPrior::Modular(p) => format!("modular-{}", p.name()),
            GlobalPrior::ModularInduced(p) => format!("induced-{}", p.name()),
            GlobalPrior::Custom(_) => "custom".into(),
        }
    }
}

/// Exact Ellis weight `1 / #linext(G)`, kept as its denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactWeight {
    pub denominator: u128,
}

impl ExactWeight {
    pub fn value(self) -> f64 {
        1.0 / self.denominator as f64
    }

    pub fn ln(self) -> f64 {
        -(self.denominator as f64).ln()
    }
}

pub fn ellis_weight_exact(g: &Dag) -> Result<ExactWeight> {
    Ok(ExactWeight {
        denominator: count_linear_extensions(g)?,
    })
}

/// `1 / #{sampled orders consistent with g}`.
pub fn ellis_weight_sampled(g: &Dag, orders: &[Order]) -> Result<f64> {
    let hits = orders.iter().filter(|o| o.is_consistent(g)).count();
    if hits == 0 {
        return Err(Error::Undefined(format!(
            "no sampled order is consistent with {g}"
        )));
    }
    Ok(1.0 / hits as f64)
}

pub const PRIOR_REPORT_MAX_NODES: usize = 5;

/// Normalized priors over every DAG on `d` nodes.
#[derive(Clone, Debug)]
pub struct PriorReport {
    pub graphs: Vec<Dag>,
    /// `(name, probabilities aligned with graphs)`.
    pub columns: Vec<(String, Vec<f64>)>,
}

impl PriorReport {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    /// `KL(p ‖ uniform)` for each column.
    pub fn kl_to_uniform(&self) -> Vec<(String, f64)> {
        let n = self.graphs.len() as f64;
        self.columns
            .iter()
            .map(|(name, p)| {
                let kl = p
                    .iter()
                    .filter(|&&x| x > 0.0)
                    .map(|&x| x * (x * n).ln())
                    .sum::<f64>()
                    .max(0.0);
                (name.clone(), kl)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["graph".to_string()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        out.write_record(&header).map_err(csv_err)?;
        for (k, g) in self.graphs.iter().enumerate() {
            let mut row = vec![g.encode()];
            row.extend(self.columns.iter().map(|(_, p)| fmt_f64(p[k])));
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::input(e.to_string()))?;
        Ok(())
    }

    pub fn kl_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("d".into(), self.graphs.first().map_or(0, Dag::d).into());
        m.insert("num_graphs".into(), self.graphs.len().into());
        let kl: serde_json::Map<String, serde_json::Value> = self
            .kl_to_uniform()
            .into_iter()
            .map(|(k, v)| (k, v.into()))
            .collect();
        m.insert("kl_to_uniform".into(), kl.into());
        m.into()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(e.to_string())
}

fn normalize(logs: Vec<f64>) -> Vec<f64> {
    let z = log_sum_exp(&logs);
    logs.into_iter().map(|l| (l - z).exp()).collect()
}

/// Priors over all DAGs on `d ≤ 5` nodes: uniform, the flat and Koivisto
/// induced priors, and both reweighted by exact Ellis weights.
pub fn prior_report(d: usize) -> Result<PriorReport> {
    if d > PRIOR_REPORT_MAX_NODES {
        return Err(Error::resource(format!(
            "prior report enumerates all DAGs; d <= {PRIOR_REPORT_MAX_NODES} required"
        )));
    }
    let graphs: Vec<Dag> = enumerate_dags(d)?.collect();
    let flat = ModularPrior::flat();
    let koi = ModularPrior::koivisto();
    let mut cols: [Vec<f64>; 5] = Default::default();
    for g in &graphs {
        let ln_ext = (count_linear_extensions(g)? as f64).ln();
        let (lf, lk) = (flat.log_modular(g), koi.log_modular(g));
        cols[0].push(0.0);
        cols[1].push(lf + ln_ext);
        cols[2].push(lk + ln_ext);
        cols[3].push(lk);
        cols[4].push(lf);
    }
    let names = ["uniform", "modular_flat", "koivisto", "koivisto_ellis", "flat_ellis"];
    Ok(PriorReport {
        graphs,
        columns: names
            .iter()
            .zip(cols)
            .map(|(n, c)| (n.to_string(), normalize(c)))
            .collect(),
    })
}
