//! Discrete datasets, CSV ingestion, synthetic networks and cross-validation
//! splits.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};

/// Integer-coded records over `d` categorical variables, with an optional
/// per-cell intervention mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    arities: Vec<usize>,
    n: usize,
    values: Vec<u16>,
    interventions: Option<Vec<bool>>,
    names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from rows, validating every code against its arity.
    pub fn new(
        arities: Vec<usize>,
        rows: &[Vec<usize>],
        interventions: Option<&[Vec<bool>]>,
    ) -> Result<Self> {
        let d = arities.len();
        if let Some(i) = arities.iter().position(|&a| a < 2 || a > u16::MAX as usize) {
            return Err(Error::input(format!(
                "arity of variable {i} is {}, must lie in 2..=65535",
                arities[i]
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::input(format!(
                    "record {r} has {} values, expected {d}",
                    row.len()
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                if v >= arities[i] {
                    return Err(Error::input(format!(
                        "record {r}, variable {i}: value {v} outside arity {}",
                        arities[i]
                    )));
                }
                values.push(v as u16);
            }
        }
        let interventions = match interventions {
            None => None,
            Some(mask) => {
                if mask.len() != rows.len() || mask.iter().any(|m| m.len() != d) {
                    return Err(Error::input(
                        "intervention mask shape differs from the records",
                    ));
                }
                Some(mask.iter().flatten().copied().collect())
            }
        };
        Ok(Dataset {
            arities,
            n: rows.len(),
            values,
            interventions,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::input("one name per variable required"));
        }
        self.names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.arities.len()
    }

    #[inline]
    pub fn arity(&self, i: usize) -> usize {
        self.arities[i]
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    #[inline]
    pub fn value(&self, r: usize, i: usize) -> usize {
        self.values[r * self.d() + i] as usize
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u16] {
        let d = self.d();
        &self.values[r * d..(r + 1) * d]
    }

    pub fn record(&self, r: usize) -> Vec<usize> {
        self.row(r).iter().map(|&v| v as usize).collect()
    }

    #[inline]
    pub fn is_intervened(&self, r: usize, i: usize) -> bool {
        self.interventions
            .as_ref()
            .is_some_and(|m| m[r * self.arities.len() + i])
    }

    pub fn has_interventions(&self) -> bool {
        self.interventions.is_some()
    }

    pub fn intervention_row(&self, r: usize) -> Option<&[bool]> {
        let d = self.d();
        self.interventions.as_ref().map(|m| &m[r * d..(r + 1) * d])
    }

    /// The records at `indices`, in that order, masks carried along.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let d = self.d();
        let mut values = Vec::with_capacity(indices.len() * d);
        let mut mask = self.interventions.as_ref().map(|_| Vec::with_capacity(indices.len() * d));
        for &r in indices {
            values.extend_from_slice(self.row(r));
            if let (Some(out), Some(src)) = (mask.as_mut(), self.intervention_row(r)) {
                out.extend_from_slice(src);
            }
        }
        Dataset {
            arities: self.arities.clone(),
            n: indices.len(),
            values,
            interventions: mask,
            names: self.names.clone(),
        }
    }

    /// A copy with one extra, non-intervened record appended.
    pub fn with_record(&self, record: &[usize]) -> Result<Dataset> {
        self.check_record(record)?;
        let mut out = self.clone();
        out.values.extend(record.iter().map(|&v| v as u16));
        if let Some(m) = out.interventions.as_mut() {
            m.extend(std::iter::repeat_n(false, self.d()));
        }
        out.n += 1;
        Ok(out)
    }

    /// Checks length and per-variable range of an external record.
    pub fn check_record(&self, record: &[usize]) -> Result<()> {
        if record.len() != self.d() {
            return Err(Error::input(format!(
                "record has {} values, dataset has {} variables",
                record.len(),
                self.d()
            )));
        }
        for (i, &v) in record.iter().enumerate() {
            if v >= self.arities[i] {
                return Err(Error::input(format!(
                    "variable {i}: value {v} outside arity {}",
                    self.arities[i]
                )));
            }
        }
        Ok(())
    }

    /// Writes the records as CSV, with a header when names are known.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<String> = match &self.names {
            Some(n) => n.clone(),
            None => (0..self.d()).map(|i| format!("X{i}")).collect(),
        };
        wr.write_record(&header).map_err(csv_io)?;
        for r in 0..self.n {
            wr.write_record(self.row(r).iter().map(|v| v.to_string()))
                .map_err(csv_io)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))
    }

    /// Writes the intervention mask as a 0/1 CSV with the data's header.
    pub fn write_intervention_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<String> = match &self.names {
            Some(n) => n.clone(),
            None => (0..self.d()).map(|i| format!("X{i}")).collect(),
        };
        wr.write_record(&header).map_err(csv_io)?;
        for r in 0..self.n {
            let cells: Vec<&str> = (0..self.d())
                .map(|i| if self.is_intervened(r, i) { "1" } else { "0" })
                .collect();
            wr.write_record(&cells).map_err(csv_io)?;
        }
        wr.flush().map_err(|e| Error::io("<csv>", e))
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::io("<csv>", std::io::Error::other(e.to_string()))
}

/// Mixed-radix index of the parent configuration in record `row`. The
/// lowest-numbered parent is the least significant digit.
#[inline]
pub fn parent_config(row: &[u16], parents: NodeSet, arities: &[usize]) -> usize {
    let mut idx = 0usize;
    let mut stride = 1usize;
    for p in parents {
        idx += row[p] as usize * stride;
        stride *= arities[p];
    }
    idx
}

/// Number of joint configurations of `parents`.
pub fn config_count(parents: NodeSet, arities: &[usize]) -> usize {
    parents.iter().map(|p| arities[p]).product()
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    pub has_header: bool,
    pub intervention_path: Option<PathBuf>,
    /// Declared arities; every value must fit. Inferred from the data when absent.
    pub arities: Option<Vec<usize>>,
}

/// Reads a data CSV (and optionally a matching 0/1 intervention CSV).
///
/// Inferred arities are `max(2, max code + 1)` per column.
pub fn load_csv(path: &Path, options: &CsvOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (names, rows) = read_int_matrix(BufReader::new(file), options.has_header, path)?;
    let d = match (&names, rows.first()) {
        (Some(n), _) => n.len(),
        (None, Some(r)) => r.len(),
        (None, None) => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: 0,
                column: 0,
                message: "no header and no records: cannot determine the variable count".into(),
            })
        }
    };
    let arities = match &options.arities {
        Some(a) => {
            if a.len() != d {
                return Err(Error::input(format!(
                    "{} arities declared for {d} columns",
                    a.len()
                )));
            }
            for (r, row) in rows.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    if v >= a[c] {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            row: r + 1,
                            column: c + 1,
                            message: format!("value {v} exceeds declared arity {}", a[c]),
                        });
                    }
                }
            }
            a.clone()
        }
        None => (0..d)
            .map(|c| rows.iter().map(|r| r[c] + 1).max().unwrap_or(0).max(2))
            .collect(),
    };
    let mask = match &options.intervention_path {
        None => None,
        Some(ipath) => {
            let file = File::open(ipath).map_err(|e| Error::io(ipath, e))?;
            let (_, cells) = read_int_matrix(BufReader::new(file), options.has_header, ipath)?;
            if cells.len() != rows.len() {
                return Err(Error::Parse {
                    path: ipath.clone(),
                    row: cells.len().min(rows.len()) + 1,
                    column: 0,
                    message: format!(
                        "{} intervention rows for {} data rows",
                        cells.len(),
                        rows.len()
                    ),
                });
            }
            let mut mask = Vec::with_capacity(cells.len());
            for (r, row) in cells.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Parse {
                        path: ipath.clone(),
                        row: r + 1,
                        column: row.len().min(d) + 1,
                        message: format!("{} columns, data has {d}", row.len()),
                    });
                }
                let mut m = Vec::with_capacity(d);
                for (c, &v) in row.iter().enumerate() {
                    match v {
                        0 => m.push(false),
                        1 => m.push(true),
                        _ => {
                            return Err(Error::Parse {
                                path: ipath.clone(),
                                row: r + 1,
                                column: c + 1,
                                message: format!("intervention cell must be 0 or 1, got {v}"),
                            })
                        }
                    }
                }
                mask.push(m);
            }
            Some(mask)
        }
    };
    let ds = Dataset::new(arities, &rows, mask.as_deref())?;
    match names {
        Some(n) => ds.with_names(n),
        None => Ok(ds),
    }
}

/// Parses a CSV of non-negative integers. Row and column numbers in errors are
/// 1-based and count data rows only.
pub fn read_int_matrix<R: Read>(
    reader: R,
    has_header: bool,
    path: &Path,
) -> Result<(Option<Vec<String>>, Vec<Vec<usize>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names = if has_header {
        let h = rdr.headers().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            column: 0,
            message: e.to_string(),
        })?;
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let mut width = names.as_ref().map(Vec::len);
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: r + 1,
            column: 0,
            message: e.to_string(),
        })?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                column: rec.len().min(w) + 1,
                message: format!("ragged row: {} cells, expected {w}", rec.len()),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<usize>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row: r + 1,
                    column: c + 1,
                    message: format!("{cell:?} is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

/// Conditional probability table of one node. `probs[config * arity + k]`
/// is `P(X = k | parents in configuration config)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub arity: usize,
    pub parents: NodeSet,
    pub probs: Vec<f64>,
}

impl Cpt {
    pub fn row(&self, config: usize) -> &[f64] {
        &self.probs[config * self.arity..(config + 1) * self.arity]
    }
}

/// A DAG with one conditional probability table per node.
#[derive(Clone, Debug, PartialEq)]
pub struct CptSet {
    pub dag: Dag,
    pub arities: Vec<usize>,
    pub tables: Vec<Cpt>,
}

impl CptSet {
    pub fn d(&self) -> usize {
        self.dag.d()
    }

    /// `ln p(record)` under the network.
    pub fn log_prob(&self, record: &[u16]) -> f64 {
        self.tables
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let j = parent_config(record, t.parents, &self.arities);
                t.row(j)[record[i] as usize].ln()
            })
            .sum()
    }

    /// Network where each non-root node equals the sum of its parents modulo
    /// its arity with probability `1 - noise`, spreading `noise` evenly over
    /// the other states. Roots are uniform.
    pub fn noisy_parity(dag: &Dag, arities: &[usize], noise: f64) -> Result<Self> {
        let d = dag.d();
        if arities.len() != d || arities.iter().any(|&a| a < 2) {
            return Err(Error::input("need one arity >= 2 per node"));
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::input(format!("noise {noise} outside [0, 1]")));
        }
        let tables = (0..d)
            .map(|i| {
                let q = arities[i];
                let parents = dag.parents(i);
                let configs = config_count(parents, arities);
                let mut probs = Vec::with_capacity(configs * q);
                for j in 0..configs {
                    if parents.is_empty() {
                        probs.extend(std::iter::repeat_n(1.0 / q as f64, q));
                        continue;
                    }
                    let mut rest = j;
                    let mut sum = 0;
                    for p in parents {
                        sum += rest % arities[p];
                        rest /= arities[p];
                    }
                    let hit = sum % q;
                    probs.extend((0..q).map(|k| {
                        if k == hit {
                            1.0 - noise
                        } else {
                            noise / (q - 1) as f64
                        }
                    }));
                }
                Cpt {
                    arity: q,
                    parents,
                    probs,
                }
            })
            .collect();
        Ok(CptSet {
            dag: dag.clone(),
            arities: arities.to_vec(),
            tables,
        })
    }

    /// Exact entropy `-Σ_x p(x) ln p(x)` by summing over every joint state.
    /// Exponential in `d`; meant for small test networks.
    pub fn entropy(&self) -> f64 {
        let d = self.d();
        let mut state = vec![0u16; d];
        let mut h = 0.0;
        loop {
            let lp = self.log_prob(&state);
            if lp > f64::NEG_INFINITY {
                h -= lp.exp() * lp;
            }
            let mut i = 0;
            loop {
                if i == d {
                    return h;
                }
                state[i] += 1;
                if (state[i] as usize) < self.arities[i] {
                    break;
                }
                state[i] = 0;
                i += 1;
            }
        }
    }
}

/// Parameters for [`random_network`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub d: usize,
    pub arity_min: usize,
    pub arity_max: usize,
    /// Symmetric Dirichlet concentration of each CPT row.
    pub dirichlet_strength: f64,
    pub expected_indegree: f64,
    pub max_indegree: Option<usize>,
}

impl NetworkSpec {
    pub fn new(d: usize) -> Self {
        NetworkSpec {
            d,
            arity_min: 2,
            arity_max: 4,
            dirichlet_strength: 0.5,
            expected_indegree: 1.5,
            max_indegree: None,
        }
    }
}

/// A random discrete network: DAG, arities and Dirichlet-drawn CPT rows.
pub fn random_network(spec: &NetworkSpec, seed: u64) -> Result<CptSet> {
    let d = spec.d;
    if spec.arity_min < 2 || spec.arity_max < spec.arity_min {
        return Err(Error::input(format!(
            "arity range [{}, {}] invalid; need 2 <= lo <= hi",
            spec.arity_min, spec.arity_max
        )));
    }
    if !(spec.dirichlet_strength > 0.0 && spec.dirichlet_strength.is_finite()) {
        return Err(Error::input("Dirichlet strength must be positive"));
    }
    if !(spec.expected_indegree >= 0.0) {
        return Err(Error::input("expected in-degree must be non-negative"));
    }
    if d > crate::graph::MAX_NODES {
        return Err(Error::input(format!("d={d} exceeds {}", crate::graph::MAX_NODES)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = spec
        .max_indegree
        .unwrap_or_else(|| crate::scoring::default_max_indegree(d));
    // mean in-degree of an i<j Bernoulli(p) graph is p (d-1) / 2
    let edge_prob = if d > 1 {
        (2.0 * spec.expected_indegree / (d as f64 - 1.0)).min(1.0)
    } else {
        0.0
    };
    let dag = Dag::random(d, edge_prob, cap, &mut rng);
    let arities: Vec<usize> = (0..d)
        .map(|_| rng.random_range(spec.arity_min..=spec.arity_max))
        .collect();
    let gamma = Gamma::new(spec.dirichlet_strength, 1.0)
        .map_err(|e| Error::input(format!("Dirichlet strength: {e}")))?;
    let tables = (0..d)
        .map(|i| {
            let parents = dag.parents(i);
            let configs = config_count(parents, &arities);
            let mut probs = Vec::with_capacity(configs * arities[i]);
            for _ in 0..configs {
                let mut row: Vec<f64> = (0..arities[i]).map(|_| gamma.sample(&mut rng)).collect();
                let sum: f64 = row.iter().sum();
                if sum > 0.0 && sum.is_finite() {
                    row.iter_mut().for_each(|x| *x /= sum);
                } else {
                    // every gamma draw underflowed: fall back to a one-hot row
                    let k = rng.random_range(0..arities[i]);
                    row.iter_mut().enumerate().for_each(|(j, x)| *x = (j == k) as u8 as f64);
                }
                probs.extend(row);
            }
            Cpt {
                arity: arities[i],
                parents,
                probs,
            }
        })
        .collect();
    Ok(CptSet {
        dag,
        arities,
        tables,
    })
}

/// Forces `node` to `state` for the records in `records`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intervention {
    pub node: usize,
    pub state: usize,
    pub records: Range<usize>,
}

/// Forward sampling in topological order. Intervened cells are set to the
/// forced state and flagged; their descendants condition on the forced value.
pub fn ancestral_sample(
    net: &CptSet,
    n: usize,
    interventions: &[Intervention],
    seed: u64,
) -> Result<Dataset> {
    let d = net.d();
    for iv in interventions {
        if iv.node >= d {
            return Err(Error::input(format!("intervention on unknown node {}", iv.node)));
        }
        if iv.state >= net.arities[iv.node] {
            return Err(Error::input(format!(
                "forced state {} outside arity {} of node {}",
                iv.state, net.arities[iv.node], iv.node
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = net.dag.topological_order();
    let mut values = vec![0u16; n * d];
    let mut mask = (!interventions.is_empty()).then(|| vec![false; n * d]);
    let mut forced: Vec<Option<usize>> = vec![None; d];
    for r in 0..n {
        forced.iter_mut().for_each(|f| *f = None);
        for iv in interventions {
            if iv.records.contains(&r) {
                forced[iv.node] = Some(iv.state);
            }
        }
        let row = &mut values[r * d..(r + 1) * d];
        for &i in &order {
            if let Some(s) = forced[i] {
                row[i] = s as u16;
                if let Some(m) = mask.as_mut() {
                    m[r * d + i] = true;
                }
                continue;
            }
            let t = &net.tables[i];
            let probs = t.row(parent_config(row, t.parents, &net.arities));
            row[i] = sample_categorical(probs, &mut rng) as u16;
        }
    }
    Ok(Dataset {
        arities: net.arities.clone(),
        n,
        values,
        interventions: mask,
        names: None,
    })
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative sum: take the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Splits `ds` into `k` (train, test) pairs whose test folds partition the
/// records into near-equal parts.
pub fn split_folds(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    if k < 2 {
        return Err(Error::input("at least two folds required"));
    }
    if ds.n() < k {
        return Err(Error::input(format!("{} records cannot fill {k} folds", ds.n())));
    }
    let mut perm: Vec<usize> = (0..ds.n()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ds.n();
    Ok((0..k)
        .map(|f| {
            let mut test: Vec<usize> = perm[f * n / k..(f + 1) * n / k].to_vec();
            test.sort_unstable();
            let mut in_test = vec![false; n];
            test.iter().for_each(|&r| in_test[r] = true);
            let train: Vec<usize> = (0..n).filter(|&r| !in_test[r]).collect();
            (ds.select(&train), ds.select(&test))
        })
        .collect())
}

/// JSON sidecar written next to generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dag: String,
    pub arities: Vec<usize>,
    pub seed: u64,
}

impl GroundTruth {
    pub fn dag(&self) -> Result<Dag> {
        self.dag.parse()
    }
}
