//! Feature posteriors, predictive log-likelihoods and evaluation metrics.

use std::collections::HashMap;
use std::str::FromStr;

use crate::data::{Cpt, CptSet, Dataset};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::numeric::{log_sum_exp, SquareMatrix};
use crate::samplers::{Sample, SampleSet};
use crate::scoring::family_counts;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    DirectedEdge,
    UndirectedEdge,
    DirectedPath,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::DirectedEdge => "edge",
            FeatureKind::UndirectedEdge => "undirected",
            FeatureKind::DirectedPath => "path",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "edge" | "directed-edge" => FeatureKind::DirectedEdge,
            "undirected" | "undirected-edge" => FeatureKind::UndirectedEdge,
            "path" | "directed-path" => FeatureKind::DirectedPath,
            _ => return Err(Error::input(format!("unknown feature kind {s:?}"))),
        })
    }
}

/// 0/1 indicator matrix of a feature on one graph; diagonal 0.
pub fn feature_indicators(g: &Dag, kind: FeatureKind) -> SquareMatrix {
    let d = g.d();
    let mut m = SquareMatrix::zeros(d);
    for u in 0..d {
        let hits = match kind {
            FeatureKind::DirectedEdge => g.children(u),
            FeatureKind::UndirectedEdge => g.children(u).union(g.parents(u)),
            FeatureKind::DirectedPath => g.descendants(u),
        };
        for v in hits {
            m.set(u, v, 1.0);
        }
    }
    m
}

/// Distinct graphs in order of first appearance with their summed weights,
/// and the total weight summed in sample order.
fn group_weights(samples: &[Sample]) -> (Vec<(&Dag, f64)>, f64) {
    let mut index: HashMap<&Dag, usize> = HashMap::new();
    let mut grouped: Vec<(&Dag, f64)> = Vec::new();
    let mut total = 0.0;
    for s in samples {
        let k = *index.entry(&s.dag).or_insert_with(|| {
            grouped.push((&s.dag, 0.0));
            grouped.len() - 1
        });
        grouped[k].1 += s.weight;
        total += s.weight;
    }
    (grouped, total)
}

/// Weighted fraction of samples in which each feature holds.
pub fn feature_posterior(samples: &[Sample], kind: FeatureKind) -> Result<SquareMatrix> {
    let first = samples
        .first()
        .ok_or_else(|| Error::input("no samples to average"))?;
    let d = first.dag.d();
    if samples.iter().any(|s| s.dag.d() != d) {
        return Err(Error::input("samples disagree on the number of nodes"));
    }
    let (grouped, total) = group_weights(samples);
    if !(total > 0.0) {
        return Err(Error::Undefined("sample weights sum to zero".into()));
    }
    let mut m = SquareMatrix::zeros(d);
    for (g, w) in grouped {
        let f = feature_indicators(g, kind);
        for u in 0..d {
            for v in 0..d {
                if f.get(u, v) > 0.0 {
                    m.add(u, v, w / total);
                }
            }
        }
    }
    Ok(m.map(|x| x.clamp(0.0, 1.0)))
}

/// Posterior-mean parameters `(N_ijk + α) / (N_ij + q α)` with the BDeu `α`.
pub fn posterior_mean_cpt(train: &Dataset, g: &Dag) -> Result<CptSet> {
    if g.d() != train.d() {
        return Err(Error::input(format!(
            "graph has {} nodes, data has {}",
            g.d(),
            train.d()
        )));
    }
    let tables = (0..g.d())
        .map(|i| {
            let counts = family_counts(train, i, g.parents(i))?;
            let q = counts.child_arity;
            let alpha = 1.0 / (q as f64 * counts.configs as f64);
            let mut probs = vec![1.0 / q as f64; counts.configs * q];
            for (j, row) in &counts.rows {
                let nj: u64 = row.iter().map(|&c| c as u64).sum();
                let denom = nj as f64 + q as f64 * alpha;
                for (k, &c) in row.iter().enumerate() {
                    probs[j * q + k] = (c as f64 + alpha) / denom;
                }
            }
            Ok(Cpt {
                arity: q,
                parents: g.parents(i),
                probs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CptSet {
        dag: g.clone(),
        arities: train.arities().to_vec(),
        tables,
    })
}

fn check_test(train: &Dataset, test: &Dataset) -> Result<()> {
    if test.n() == 0 {
        return Err(Error::input("test set is empty"));
    }
    if test.arities() != train.arities() {
        return Err(Error::input("test arities differ from training arities"));
    }
    Ok(())
}

/// Per-record log predictive and its mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictive {
    pub per_record: Vec<f64>,
    pub mean: f64,
}

impl Predictive {
    fn from_records(per_record: Vec<f64>) -> Self {
        let mean = per_record.iter().sum::<f64>() / per_record.len() as f64;
        Predictive { per_record, mean }
    }
}

fn plugin_logprobs(cpt: &CptSet, test: &Dataset) -> Vec<f64> {
    (0..test.n()).map(|r| cpt.log_prob(test.row(r))).collect()
}

/// `ln p(x | g, D)` per test record with posterior-mean parameters.
pub fn predictive_loglik_plugin(g: &Dag, train: &Dataset, test: &Dataset) -> Result<Predictive> {
    check_test(train, test)?;
    let cpt = posterior_mean_cpt(train, g)?;
    Ok(Predictive::from_records(plugin_logprobs(&cpt, test)))
}

/// Weighted model average `Σ_s w_s p(x | G^s, D) / Σ_s w_s` per test record.
pub fn predictive_loglik_samples(
    samples: &[Sample],
    train: &Dataset,
    test: &Dataset,
) -> Result<Predictive> {
    check_test(train, test)?;
    if samples.is_empty() {
        return Err(Error::input("no samples to average"));
    }
    let (grouped, total) = group_weights(samples);
    if !(total > 0.0) {
        return Err(Error::Undefined("sample weights sum to zero".into()));
    }
    let graphs: Vec<(&Dag, f64)> = grouped.into_iter().filter(|(_, w)| *w > 0.0).collect();
    let mut terms: Vec<Vec<f64>> = vec![Vec::with_capacity(graphs.len()); test.n()];
    for (g, w) in graphs {
        let lp = plugin_logprobs(&posterior_mean_cpt(train, g)?, test);
        for (r, l) in lp.into_iter().enumerate() {
            terms[r].push(w.ln() + l);
        }
    }
    let lt = total.ln();
    Ok(Predictive::from_records(
        terms.iter().map(|t| log_sum_exp(t) - lt).collect(),
    ))
}

/// `ℓ(t)` of the running model average at each of `points` evenly spaced
/// sample prefixes: `(step, seconds, mean log predictive)`.
pub fn predictive_curve(
    set: &SampleSet,
    train: &Dataset,
    test: &Dataset,
    points: usize,
) -> Result<Vec<(usize, f64, f64)>> {
    check_test(train, test)?;
    let n = set.samples.len();
    if n == 0 {
        return Err(Error::input("no samples to average"));
    }
    let marks = prefix_marks(n, points);
    let mut cache: HashMap<&Dag, Vec<f64>> = HashMap::new();
    let mut acc = vec![f64::NEG_INFINITY; test.n()];
    let mut wsum = 0.0f64;
    let mut out = Vec::with_capacity(marks.len());
    let mut next = 0;
    for (k, s) in set.samples.iter().enumerate() {
        if !cache.contains_key(&s.dag) {
            let lp = plugin_logprobs(&posterior_mean_cpt(train, &s.dag)?, test);
            cache.insert(&s.dag, lp);
        }
        if s.weight > 0.0 {
            let lw = s.weight.ln();
            for (a, l) in acc.iter_mut().zip(&cache[&s.dag]) {
                *a = crate::numeric::log_add(*a, lw + l);
            }
            wsum += s.weight;
        }
        if next < marks.len() && k + 1 == marks[next] {
            next += 1;
            if wsum > 0.0 {
                let lt = wsum.ln();
                let mean = acc.iter().map(|a| a - lt).sum::<f64>() / test.n() as f64;
                out.push((s.step, set.seconds_at(s.step), mean));
            }
        }
    }
    Ok(out)
}

fn prefix_marks(n: usize, points: usize) -> Vec<usize> {
    let points = points.clamp(1, n);
    let mut marks: Vec<usize> = (1..=points).map(|k| (k * n).div_ceil(points)).collect();
    marks.dedup();
    marks
}

/// Sum of absolute differences over off-diagonal entries.
pub fn sad(est: &SquareMatrix, exact: &SquareMatrix) -> Result<f64> {
    if est.dim() != exact.dim() {
        return Err(Error::input(format!(
            "matrix sizes differ: {} vs {}",
            est.dim(),
            exact.dim()
        )));
    }
    let d = est.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += (est.get(i, j) - exact.get(i, j)).abs();
            }
        }
    }
    Ok(s)
}

/// SAD of the running weighted edge-marginal estimate at `points` sample
/// prefixes: `(step, seconds, sad)`.
pub fn sad_curve(
    set: &SampleSet,
    exact: &SquareMatrix,
    points: usize,
) -> Result<Vec<(usize, f64, f64)>> {
    let d = exact.dim();
    if set.d != d {
        return Err(Error::input("sample set and exact matrix sizes differ"));
    }
    let n = set.samples.len();
    if n == 0 {
        return Err(Error::input("no samples"));
    }
    let marks = prefix_marks(n, points);
    let mut counts = SquareMatrix::zeros(d);
    let mut wsum = 0.0;
    let mut out = Vec::with_capacity(marks.len());
    let mut next = 0;
    for (k, s) in set.samples.iter().enumerate() {
        for (u, v) in s.dag.edges() {
            counts.add(u, v, s.weight);
        }
        wsum += s.weight;
        if next < marks.len() && k + 1 == marks[next] {
            next += 1;
            if wsum > 0.0 {
                let est = counts.map(|x| x / wsum);
                out.push((s.step, set.seconds_at(s.step), sad(&est, exact)?));
            }
        }
    }
    Ok(out)
}

/// Ground-truth labels of every scored pair: ordered pairs for directed
/// kinds, `i < j` for undirected edges.
fn labelled_pairs(scores: &SquareMatrix, truth: &Dag, kind: FeatureKind) -> Vec<(f64, bool)> {
    let d = truth.d();
    let f = feature_indicators(truth, kind);
    let mut out = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            match kind {
                FeatureKind::UndirectedEdge => {
                    if i < j {
                        out.push((scores.get(i, j) + scores.get(j, i), f.get(i, j) > 0.0));
                    }
                }
                _ => out.push((scores.get(i, j), f.get(i, j) > 0.0)),
            }
        }
    }
    out
}

/// Area under the ROC curve of `scores` against the features of `truth`.
///
/// Computed from ranks, with tied scores counting one half, which equals
/// trapezoidal integration of the full threshold sweep. For undirected
/// edges the score of a pair is `s_ij + s_ji`.
pub fn auc(scores: &SquareMatrix, truth: &Dag, kind: FeatureKind) -> Result<f64> {
    if scores.dim() != truth.d() {
        return Err(Error::input("score matrix and graph sizes differ"));
    }
    let mut pairs = labelled_pairs(scores, truth, kind);
    if pairs.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::input("scores contain NaN"));
    }
    let pos = pairs.iter().filter(|p| p.1).count();
    let neg = pairs.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined(
            "AUC needs both positive and negative pairs".into(),
        ));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average ranks (1-based) over tie groups
    let mut rank_sum_pos = 0.0;
    let mut k = 0;
    while k < pairs.len() {
        let mut e = k;
        while e + 1 < pairs.len() && pairs[e + 1].0 == pairs[k].0 {
            e += 1;
        }
        let avg = (k + e) as f64 / 2.0 + 1.0;
        rank_sum_pos += avg * pairs[k..=e].iter().filter(|p| p.1).count() as f64;
        k = e + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// ROC points `(false positive rate, true positive rate)` over all distinct
/// thresholds, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &SquareMatrix, truth: &Dag, kind: FeatureKind) -> Result<Vec<(f64, f64)>> {
    let mut pairs = labelled_pairs(scores, truth, kind);
    let pos = pairs.iter().filter(|p| p.1).count() as f64;
    let neg = pairs.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(Error::Undefined(
            "ROC needs both positive and negative pairs".into(),
        ));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < pairs.len() {
        let thr = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == thr {
            if pairs[k].1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        pts.push((fp / neg, tp / pos));
    }
    Ok(pts)
}
