use crate::data::Dataset;
use crate::error::Result;
use crate::graph::{Dag, NodeSet};
use crate::scoring::family_counts;

/// Plug-in mutual information (nats) between two columns.
pub fn mutual_information(ds: &Dataset, i: usize, j: usize) -> f64 {
    let (qi, qj) = (ds.arity(i), ds.arity(j));
    let mut joint = vec![0u64; qi * qj];
    for r in 0..ds.n() {
        joint[ds.value(r, i) * qj + ds.value(r, j)] += 1;
    }
    let n = ds.n() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut pi = vec![0u64; qi];
    let mut pj = vec![0u64; qj];
    for a in 0..qi {
        for b in 0..qj {
            pi[a] += joint[a * qj + b];
            pj[b] += joint[a * qj + b];
        }
    }
    let mut mi = 0.0;
    for a in 0..qi {
        for b in 0..qj {
            let c = joint[a * qj + b];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (pi[a] as f64 * pj[b] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Maximum-weight spanning forest under pairwise mutual information, each
/// component rooted at its lowest index and directed away from the root.
///
/// Only pairs with positive information are joined; ties are broken by the
/// smaller `(i, j)` pair.
pub fn chow_liu(ds: &Dataset) -> Result<Dag> {
    let d = ds.d();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            pairs.push((mutual_information(ds, i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut comp: Vec<usize> = (0..d).collect();
    fn find(comp: &mut [usize], mut x: usize) -> usize {
        while comp[x] != x {
            comp[x] = comp[comp[x]];
            x = comp[x];
        }
        x
    }
    let mut adj = vec![NodeSet::EMPTY; d];
    for (mi, i, j) in pairs {
        if mi <= 0.0 {
            break;
        }
        let (a, b) = (find(&mut comp, i), find(&mut comp, j));
        if a != b {
            comp[a.max(b)] = a.min(b);
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut parents = vec![NodeSet::EMPTY; d];
    let mut seen = NodeSet::EMPTY;
    for root in 0..d {
        if seen.contains(root) {
            continue;
        }
        seen.insert(root);
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for v in adj[u].difference(seen) {
                seen.insert(v);
                parents[v] = NodeSet::singleton(u);
                stack.push(v);
            }
        }
    }
    Dag::from_parents(parents)
}

/// Maximized log-likelihood `Σ_i Σ_jk N_ijk ln(N_ijk / N_ij)` of `g`.
pub fn ml_loglik(ds: &Dataset, g: &Dag) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..g.d() {
        let t = family_counts(ds, i, g.parents(i))?;
        for (_, row) in &t.rows {
            let nj: u64 = row.iter().map(|&c| c as u64).sum();
            for &c in row {
                if c > 0 {
                    total += c as f64 * (c as f64 / nj as f64).ln();
                }
            }
        }
    }
    Ok(total)
}
