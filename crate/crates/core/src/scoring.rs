//! Sufficient statistics and BDeu family marginal likelihoods.
//!
//! A node with `q` states and parent configuration count `r` gets the
//! symmetric Dirichlet prior `Dir(α, ..., α)` with `α = 1/(q r)` on every
//! row of its table. Records flagged as intervened at node `i` carry no
//! information about `i`'s mechanism and are left out of `i`'s counts.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::numeric::ln_gamma;

/// Default memory budget for a dense score table, in bytes.
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 30;

/// In-degree cap used when none is given: all parents up to 14 nodes, five beyond.
pub fn default_max_indegree(d: usize) -> usize {
    if d <= 14 {
        d.saturating_sub(1)
    } else {
        5
    }
}

/// Counts `N_jk` for one family, kept only for observed parent configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyTable {
    pub child_arity: usize,
    /// Total number of parent configurations `r` (observed or not).
    pub configs: usize,
    /// `(config, counts over child states)`, sorted by config.
    pub rows: Vec<(usize, Vec<u32>)>,
}

impl ContingencyTable {
    pub fn get(&self, config: usize, k: usize) -> u32 {
        self.row(config).map_or(0, |r| r[k])
    }

    pub fn row(&self, config: usize) -> Option<&[u32]> {
        self.rows
            .binary_search_by_key(&config, |(c, _)| *c)
            .ok()
            .map(|idx| self.rows[idx].1.as_slice())
    }

    pub fn total(&self) -> u64 {
        self.rows
            .iter()
            .flat_map(|(_, r)| r.iter())
            .map(|&c| c as u64)
            .sum()
    }

    /// BDeu log marginal likelihood of the counts.
    pub fn bdeu(&self) -> f64 {
        let q = self.child_arity as f64;
        let alpha = 1.0 / (q * self.configs as f64);
        let row_alpha = q * alpha;
        let lg_row_alpha = ln_gamma(row_alpha);
        let lg_alpha = ln_gamma(alpha);
        let mut total = 0.0;
        for (_, row) in &self.rows {
            let n_j: u64 = row.iter().map(|&c| c as u64).sum();
            if n_j == 0 {
                continue;
            }
            total += lg_row_alpha - ln_gamma(row_alpha + n_j as f64);
            for &c in row {
                if c > 0 {
                    total += ln_gamma(alpha + c as f64) - lg_alpha;
                }
            }
        }
        total
    }
}

/// Caches per-record parent-configuration codes keyed by parent set.
///
/// The code column of a set is derived from the column of the set minus its
/// largest member, so sets sharing a prefix share work.
pub struct CountCache<'a> {
    ds: &'a Dataset,
    codes: HashMap<NodeSet, (usize, Vec<usize>)>,
}

impl<'a> CountCache<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        CountCache {
            ds,
            codes: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn evict(&mut self, parents: NodeSet) {
        self.codes.remove(&parents);
    }

    fn ensure(&mut self, parents: NodeSet) -> Result<()> {
        if self.codes.contains_key(&parents) {
            return Ok(());
        }
        let n = self.ds.n();
        let entry = match parents.max_element() {
            None => (1usize, vec![0usize; n]),
            Some(top) => {
                let prefix = parents.without(top);
                self.ensure(prefix)?;
                let (stride, prefix_codes) = &self.codes[&prefix];
                let configs = stride.checked_mul(self.ds.arity(top)).ok_or_else(|| {
                    Error::resource(format!("parent set {parents:?} has too many configurations"))
                })?;
                let codes = prefix_codes
                    .iter()
                    .enumerate()
                    .map(|(r, &c)| c + self.ds.value(r, top) * stride)
                    .collect();
                (configs, codes)
            }
        };
        self.codes.insert(parents, entry);
        Ok(())
    }

    /// Contingency counts of node `i` against `parents`.
    pub fn counts(&mut self, i: usize, parents: NodeSet) -> Result<ContingencyTable> {
        if parents.contains(i) {
            return Err(Error::input(format!("node {i} listed among its own parents")));
        }
        if i >= self.ds.d() || !parents.is_subset_of(NodeSet::full(self.ds.d())) {
            return Err(Error::input("family references an unknown variable"));
        }
        self.ensure(parents)?;
        let (configs, codes) = &self.codes[&parents];
        Ok(tally(self.ds, i, *configs, codes))
    }
}

const DENSE_COUNT_LIMIT: usize = 1 << 22;

fn tally(ds: &Dataset, i: usize, configs: usize, codes: &[usize]) -> ContingencyTable {
    let q = ds.arity(i);
    let observed = |r: usize| !ds.is_intervened(r, i);
    let rows = if configs.saturating_mul(q) <= DENSE_COUNT_LIMIT.max(4 * ds.n()) {
        let mut dense = vec![0u32; configs * q];
        for (r, &c) in codes.iter().enumerate() {
            if observed(r) {
                dense[c * q + ds.value(r, i)] += 1;
            }
        }
        dense
            .chunks(q)
            .enumerate()
            .filter(|(_, row)| row.iter().any(|&c| c > 0))
            .map(|(j, row)| (j, row.to_vec()))
            .collect()
    } else {
        let mut sparse: HashMap<usize, Vec<u32>> = HashMap::new();
        for (r, &c) in codes.iter().enumerate() {
            if observed(r) {
                sparse.entry(c).or_insert_with(|| vec![0; q])[ds.value(r, i)] += 1;
            }
        }
        let mut rows: Vec<_> = sparse.into_iter().collect();
        rows.sort_unstable_by_key(|(c, _)| *c);
        rows
    };
    ContingencyTable {
        child_arity: q,
        configs,
        rows,
    }
}

/// Counts of node `i` against `parents`, intervened records excluded.
pub fn family_counts(ds: &Dataset, i: usize, parents: NodeSet) -> Result<ContingencyTable> {
    CountCache::new(ds).counts(i, parents)
}

/// BDeu log marginal likelihood `ln p(X_i | X_parents)`.
pub fn family_log_marglik(ds: &Dataset, i: usize, parents: NodeSet) -> Result<f64> {
    Ok(family_counts(ds, i, parents)?.bdeu())
}

/// Log family scores for every node and every parent set up to the in-degree
/// cap. Stored densely per node, indexed by the parent set with the node's
/// own bit squeezed out; inadmissible sets hold `-inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyScoreTable {
    d: usize,
    max_indegree: usize,
    scores: Vec<Vec<f64>>,
}

fn check_table_size(d: usize, budget: usize) -> Result<()> {
    let per_node = 1usize
        .checked_shl(d.saturating_sub(1) as u32)
        .unwrap_or(usize::MAX);
    let bytes = per_node.saturating_mul(d).saturating_mul(8);
    if bytes > budget {
        return Err(Error::resource(format!(
            "score table for d={d} needs {bytes} bytes, budget is {budget}"
        )));
    }
    Ok(())
}

impl FamilyScoreTable {
    /// Fills a table from an arbitrary scoring function. Every returned value
    /// must be finite and non-positive.
    pub fn from_fn(
        d: usize,
        max_indegree: usize,
        mut f: impl FnMut(usize, NodeSet) -> f64,
    ) -> Result<Self> {
        check_table_size(d, DEFAULT_TABLE_BUDGET)?;
        if d > 0 && max_indegree > d - 1 {
            return Err(Error::input(format!(
                "max in-degree {max_indegree} exceeds d-1 = {}",
                d - 1
            )));
        }
        let width = 1usize << d.saturating_sub(1);
        let mut scores = vec![vec![f64::NEG_INFINITY; width]; d];
        for (i, row) in scores.iter_mut().enumerate() {
            for (idx, slot) in row.iter_mut().enumerate() {
                let parents = NodeSet::unsqueeze(idx, i);
                if parents.len() <= max_indegree {
                    let v = f(i, parents);
                    if !(v.is_finite() && v <= 0.0) {
                        return Err(Error::input(format!(
                            "score of node {i} with parents {parents:?} is {v}; must be finite and <= 0"
                        )));
                    }
                    *slot = v;
                }
            }
        }
        Ok(FamilyScoreTable {
            d,
            max_indegree,
            scores,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_indegree(&self) -> usize {
        self.max_indegree
    }

    #[inline]
    pub fn is_admissible(&self, i: usize, parents: NodeSet) -> bool {
        !parents.contains(i) && parents.len() <= self.max_indegree
    }

    /// Stored score, or `None` when the family lies outside the table.
    #[inline]
    pub fn score(&self, i: usize, parents: NodeSet) -> Option<f64> {
        if !self.is_admissible(i, parents) || !parents.is_subset_of(NodeSet::full(self.d)) {
            return None;
        }
        Some(self.scores[i][parents.squeeze(i)])
    }

    /// Score with `-inf` for inadmissible families, for hot loops.
    #[inline]
    pub fn score_or_neg_inf(&self, i: usize, parents: NodeSet) -> f64 {
        self.score(i, parents).unwrap_or(f64::NEG_INFINITY)
    }

    /// Dense row of node `i`, indexed by squeezed parent set.
    pub fn node_scores(&self, i: usize) -> &[f64] {
        &self.scores[i]
    }

    pub fn num_families(&self) -> usize {
        self.scores
            .iter()
            .map(|r| r.iter().filter(|v| v.is_finite()).count())
            .sum()
    }

    /// Admissible `(parents, score)` pairs of node `i` in ascending bitmask order.
    pub fn families(&self, i: usize) -> Vec<(NodeSet, f64)> {
        let mut out: Vec<(NodeSet, f64)> = self.scores[i]
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(idx, &v)| (NodeSet::unsqueeze(idx, i), v))
            .collect();
        out.sort_by_key(|(p, _)| p.bits());
        out
    }

    /// `ln p(D | G)`: the sum of the graph's family scores.
    pub fn graph_log_marglik(&self, g: &Dag) -> Result<f64> {
        if g.d() != self.d {
            return Err(Error::input(format!(
                "graph has {} nodes, score table {}",
                g.d(),
                self.d
            )));
        }
        (0..self.d)
            .map(|i| {
                self.score(i, g.parents(i)).ok_or_else(|| {
                    Error::input(format!(
                        "family of node {i} has {} parents, table cap is {}",
                        g.parents(i).len(),
                        self.max_indegree
                    ))
                })
            })
            .sum()
    }

    /// Sum of family scores with `-inf` for families outside the table.
    pub fn log_marglik_or_neg_inf(&self, g: &Dag) -> f64 {
        (0..self.d)
            .map(|i| self.score_or_neg_inf(i, g.parents(i)))
            .sum()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let file = ScoreTableFile {
            d: self.d,
            max_indegree: self.max_indegree,
            scores: (0..self.d)
                .map(|i| {
                    self.families(i)
                        .into_iter()
                        .map(|(p, v)| (p.bits(), v))
                        .collect()
                })
                .collect(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: ScoreTableFile = serde_json::from_reader(r)?;
        let d = file.d;
        if file.scores.len() != d {
            return Err(Error::input(format!(
                "score file lists {} nodes for d={d}",
                file.scores.len()
            )));
        }
        let lookup: Vec<HashMap<u32, f64>> = file
            .scores
            .iter()
            .map(|entries| entries.iter().copied().collect())
            .collect();
        let mut missing = None;
        let table = FamilyScoreTable::from_fn(d, file.max_indegree, |i, p| {
            lookup[i].get(&p.bits()).copied().unwrap_or_else(|| {
                missing.get_or_insert((i, p));
                0.0
            })
        })?;
        if let Some((i, p)) = missing {
            return Err(Error::input(format!(
                "score file lacks node {i} with parents {p:?}"
            )));
        }
        Ok(table)
    }
}

#[derive(Serialize, Deserialize)]
struct ScoreTableFile {
    d: usize,
    max_indegree: usize,
    scores: Vec<Vec<(u32, f64)>>,
}

pub fn build_score_table(ds: &Dataset, max_indegree: usize) -> Result<FamilyScoreTable> {
    build_score_table_with_budget(ds, max_indegree, DEFAULT_TABLE_BUDGET)
}

/// Scores every admissible family of `ds`.
///
/// Parent sets are visited depth-first in increasing-member order so each
/// set's configuration codes extend its parent's cached column, and a column
/// is dropped once its subtree is done.
pub fn build_score_table_with_budget(
    ds: &Dataset,
    max_indegree: usize,
    budget_bytes: usize,
) -> Result<FamilyScoreTable> {
    let d = ds.d();
    if d > crate::graph::MAX_NODES {
        return Err(Error::input(format!("d={d} exceeds {}", crate::graph::MAX_NODES)));
    }
    if d > 0 && max_indegree > d - 1 {
        return Err(Error::input(format!(
            "max in-degree {max_indegree} exceeds d-1 = {}",
            d - 1
        )));
    }
    check_table_size(d, budget_bytes)?;
    let width = 1usize << d.saturating_sub(1);
    let mut scores = vec![vec![f64::NEG_INFINITY; width]; d];
    let mut cache = CountCache::new(ds);

    fn visit(
        set: NodeSet,
        next: usize,
        max_indegree: usize,
        cache: &mut CountCache<'_>,
        scores: &mut [Vec<f64>],
    ) -> Result<()> {
        let d = scores.len();
        for (i, row) in scores.iter_mut().enumerate() {
            if !set.contains(i) {
                row[set.squeeze(i)] = cache.counts(i, set)?.bdeu();
            }
        }
        if set.len() < max_indegree {
            for k in next..d {
                visit(set.with(k), k + 1, max_indegree, cache, scores)?;
            }
        }
        cache.evict(set);
        Ok(())
    }

    if d > 0 {
        visit(NodeSet::EMPTY, 0, max_indegree, &mut cache, &mut scores)?;
    }
    Ok(FamilyScoreTable {
        d,
        max_indegree,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ancestral_sample, random_network, NetworkSpec};
    use crate::graph::enumerate_dags;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binary(rows: &[Vec<usize>]) -> Dataset {
        let d = rows.first().map_or(1, Vec::len);
        Dataset::new(vec![2; d], rows, None).unwrap()
    }

    #[test]
    fn counts_and_exclusion() {
        let ds = binary(&[vec![0], vec![1]]);
        let t = family_counts(&ds, 0, NodeSet::EMPTY).unwrap();
        assert_eq!((t.get(0, 0), t.get(0, 1)), (1, 1));
        let ds = Dataset::new(vec![2], &[vec![0], vec![1]], Some(&[vec![true], vec![false]]))
            .unwrap();
        let t = family_counts(&ds, 0, NodeSet::EMPTY).unwrap();
        assert_eq!((t.get(0, 0), t.get(0, 1)), (0, 1));
    }

    #[test]
    fn counts_match_naive_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = random_network(&NetworkSpec::new(6), 8).unwrap();
        let mask: Vec<Vec<bool>> = (0..300)
            .map(|_| (0..6).map(|_| rng.random::<f64>() < 0.1).collect())
            .collect();
        let raw = ancestral_sample(&net, 300, &[], 9).unwrap();
        let rows: Vec<Vec<usize>> = (0..300).map(|r| raw.record(r)).collect();
        let ds = Dataset::new(raw.arities().to_vec(), &rows, Some(&mask)).unwrap();
        for _ in 0..50 {
            let i = rng.random_range(0..6);
            let parents: NodeSet = (0..6).filter(|&p| p != i && rng.random::<bool>()).collect();
            let t = family_counts(&ds, i, parents).unwrap();
            let ps: Vec<usize> = parents.iter().collect();
            let mut naive: HashMap<(Vec<usize>, usize), u32> = HashMap::new();
            for r in 0..ds.n() {
                if !mask[r][i] {
                    let key: Vec<usize> = ps.iter().map(|&p| rows[r][p]).collect();
                    *naive.entry((key, rows[r][i])).or_default() += 1;
                }
            }
            let mut total = 0;
            for ((cfg, k), c) in &naive {
                // mixed radix, lowest parent least significant
                let mut j = 0;
                let mut stride = 1;
                for (pos, &p) in ps.iter().enumerate() {
                    j += cfg[pos] * stride;
                    stride *= ds.arity(p);
                }
                assert_eq!(t.get(j, *k), *c);
                total += c;
            }
            assert_eq!(t.total(), total as u64);
        }
    }

    /// Sequential predictive product: each record's probability given the
    /// earlier ones under the Dirichlet posterior (Pólya urn).
    fn polya_oracle(ds: &Dataset, i: usize, parents: NodeSet) -> f64 {
        let q = ds.arity(i);
        let r: usize = parents.iter().map(|p| ds.arity(p)).product();
        let alpha = 1.0 / (q * r) as f64;
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        let mut seen_row: HashMap<usize, f64> = HashMap::new();
        let mut lp = 0.0;
        for rec in 0..ds.n() {
            if ds.is_intervened(rec, i) {
                continue;
            }
            let j = crate::data::parent_config(ds.row(rec), parents, ds.arities());
            let k = ds.value(rec, i);
            let njk = seen.entry((j, k)).or_default();
            let nj = seen_row.entry(j).or_default();
            lp += ((alpha + *njk) / (q as f64 * alpha + *nj)).ln();
            *njk += 1.0;
            *nj += 1.0;
        }
        lp
    }

    #[test]
    fn single_binary_node_two_records() {
        let ds = binary(&[vec![0], vec![1]]);
        let v = family_log_marglik(&ds, 0, NodeSet::EMPTY).unwrap();
        assert!((v - (1.0f64 / 8.0).ln()).abs() < 1e-12);
        let empty = binary(&[]);
        assert_eq!(family_log_marglik(&empty, 0, NodeSet::EMPTY).unwrap(), 0.0);
    }

    #[test]
    fn bdeu_matches_sequential_predictive() {
        for seed in 0..10 {
            let net = random_network(&NetworkSpec::new(5), seed).unwrap();
            let ds = ancestral_sample(&net, 40, &[], seed + 100).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let i = rng.random_range(0..5);
                let parents: NodeSet =
                    (0..5).filter(|&p| p != i && rng.random::<f64>() < 0.4).collect();
                let got = family_log_marglik(&ds, i, parents).unwrap();
                let want = polya_oracle(&ds, i, parents);
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
        }
    }

    /// Adaptive Simpson integration on [a, b].
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, depth)
    }

    /// `∫_0^1 θ^(a-1) (1-θ)^(b-1) dθ` numerically. Each half is mapped with
    /// `θ = u^(1/a)` (resp. `1-θ = u^(1/b)`) to remove the endpoint singularity.
    fn beta_integral(a: f64, b: f64) -> f64 {
        let left = |u: f64| (1.0 - u.powf(1.0 / a)).powf(b - 1.0) / a;
        let right = |u: f64| (1.0 - u.powf(1.0 / b)).powf(a - 1.0) / b;
        simpson(&left, 0.0, 0.5f64.powf(a), 1e-13, 40)
            + simpson(&right, 0.0, 0.5f64.powf(b), 1e-13, 40)
    }

    #[test]
    fn bdeu_matches_quadrature_for_binary_children() {
        for seed in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(2..=4);
            let n = rng.random_range(0..=6);
            let arities: Vec<usize> =
                (0..d).map(|i| if i == 0 { 2 } else { rng.random_range(2..=3) }).collect();
            let rows: Vec<Vec<usize>> = (0..n)
                .map(|_| arities.iter().map(|&a| rng.random_range(0..a)).collect())
                .collect();
            let ds = Dataset::new(arities.clone(), &rows, None).unwrap();
            for pmask in 0..(1u32 << (d - 1)) {
                let parents = NodeSet::from_bits(pmask << 1);
                let counts = family_counts(&ds, 0, parents).unwrap();
                let r = counts.configs as f64;
                let alpha = 1.0 / (2.0 * r);
                // prod_j  B(α+N_j1, α+N_j0) / B(α, α)
                let mut log_ml = 0.0;
                for (_, row) in &counts.rows {
                    let num = beta_integral(alpha + row[1] as f64, alpha + row[0] as f64);
                    let den = beta_integral(alpha, alpha);
                    log_ml += (num / den).ln();
                }
                let got = family_log_marglik(&ds, 0, parents).unwrap();
                assert!((got - log_ml).abs() < 1e-6, "{got} vs {log_ml}");
            }
        }
    }

    #[test]
    fn table_is_complete_and_matches_direct_scores() {
        let ds = binary(&[vec![0, 1, 0], vec![1, 1, 1], vec![0, 0, 1]]);
        let t = build_score_table(&ds, 2).unwrap();
        assert_eq!(t.num_families(), 12);
        for i in 0..3 {
            for (p, v) in t.families(i) {
                assert_eq!(v, family_log_marglik(&ds, i, p).unwrap());
                assert!(v <= 0.0 && v.is_finite());
            }
        }
        let t1 = build_score_table(&ds, 1).unwrap();
        assert_eq!(t1.num_families(), 9);
        assert!(t1.score(0, NodeSet::from_bits(0b110)).is_none());
    }

    #[test]
    fn table_invariant_to_record_order() {
        let net = random_network(&NetworkSpec::new(5), 2).unwrap();
        let ds = ancestral_sample(&net, 200, &[], 3).unwrap();
        let mut idx: Vec<usize> = (0..200).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        let a = build_score_table(&ds, 4).unwrap();
        let b = build_score_table(&ds.select(&idx), 4).unwrap();
        for i in 0..5 {
            for ((p, x), (q, y)) in a.families(i).into_iter().zip(b.families(i)) {
                assert_eq!(p, q);
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn graph_score_is_sum_of_families() {
        let net = random_network(&NetworkSpec::new(4), 6).unwrap();
        let ds = ancestral_sample(&net, 100, &[], 6).unwrap();
        let t = build_score_table(&ds, 3).unwrap();
        let empty: f64 = (0..4).map(|i| t.score(i, NodeSet::EMPTY).unwrap()).sum();
        assert_eq!(t.graph_log_marglik(&Dag::empty(4)).unwrap(), empty);
        let g = &net.dag;
        let direct: f64 = (0..4)
            .map(|i| family_log_marglik(&ds, i, g.parents(i)).unwrap())
            .sum();
        assert!((t.graph_log_marglik(g).unwrap() - direct).abs() < 1e-9);
        let capped = build_score_table(&ds, 0).unwrap();
        let chain = Dag::from_edges(4, &[(0, 1)]).unwrap();
        assert!(capped.graph_log_marglik(&chain).is_err());
    }

    #[test]
    fn two_node_orientations_score_equal() {
        let net = random_network(&NetworkSpec::new(2), 12).unwrap();
        let ds = ancestral_sample(&net, 500, &[], 1).unwrap();
        let t = build_score_table(&ds, 1).unwrap();
        let a = t.graph_log_marglik(&Dag::from_edges(2, &[(0, 1)]).unwrap()).unwrap();
        let b = t.graph_log_marglik(&Dag::from_edges(2, &[(1, 0)]).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    /// Markov equivalence via skeleton plus v-structures.
    fn equivalence_key(g: &Dag) -> (Vec<(usize, usize)>, Vec<(usize, usize, usize)>) {
        let d = g.d();
        let mut skel = Vec::new();
        for u in 0..d {
            for v in u + 1..d {
                if g.skeleton_has(u, v) {
                    skel.push((u, v));
                }
            }
        }
        let mut vs = Vec::new();
        for c in 0..d {
            let ps: Vec<usize> = g.parents(c).iter().collect();
            for (x, &a) in ps.iter().enumerate() {
                for &b in &ps[x + 1..] {
                    if !g.skeleton_has(a, b) {
                        vs.push((a, c, b));
                    }
                }
            }
        }
        (skel, vs)
    }

    #[test]
    fn bdeu_is_score_equivalent() {
        for (d, seed) in [(3usize, 1u64), (4, 2), (4, 3)] {
            let net = random_network(&NetworkSpec::new(d), seed).unwrap();
            let ds = ancestral_sample(&net, 150, &[], seed).unwrap();
            let t = build_score_table(&ds, d - 1).unwrap();
            let mut classes: HashMap<_, f64> = HashMap::new();
            for g in enumerate_dags(d).unwrap() {
                let s = t.graph_log_marglik(&g).unwrap();
                let key = equivalence_key(&g);
                let first = *classes.entry(key).or_insert(s);
                assert!((first - s).abs() < 1e-9, "{g:?}: {first} vs {s}");
            }
        }
    }

    #[test]
    fn fully_intervened_node_scores_zero() {
        let rows: Vec<Vec<usize>> = (0..20).map(|r| vec![r % 2, (r / 2) % 2, r % 3 % 2]).collect();
        let mask: Vec<Vec<bool>> = (0..20).map(|_| vec![false, true, false]).collect();
        let ds = Dataset::new(vec![2, 2, 2], &rows, Some(&mask)).unwrap();
        let t = build_score_table(&ds, 2).unwrap();
        for (_, v) in t.families(1) {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let net = random_network(&NetworkSpec::new(4), 1).unwrap();
        let ds = ancestral_sample(&net, 77, &[], 2).unwrap();
        let t = build_score_table(&ds, 2).unwrap();
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let back = FamilyScoreTable::read_json(buf.as_slice()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let ds = binary(&[vec![0; 12]]);
        assert!(matches!(
            build_score_table_with_budget(&ds, 3, 1024),
            Err(Error::Resource(_))
        ));
    }
}
