//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use bnstruct::data::{ancestral_sample, random_network, split_folds, Dataset, NetworkSpec};
use bnstruct::exact::{
    brute_force_posterior, chow_liu, dp_build, dp_edge_marginals, dp_predictive_logprob, map_dag,
    ml_loglik,
};
use bnstruct::graph::{count_linear_extensions, enumerate_dags};
use bnstruct::inference::{
    auc, feature_posterior, predictive_loglik_plugin, predictive_loglik_samples, sad, FeatureKind,
};
use bnstruct::numeric::{log_sum_exp, SquareMatrix};
use bnstruct::priors::{prior_report, GlobalPrior, ModularPrior};
use bnstruct::samplers::{run_chains, GlobalProposal, Kernel, Sample, SamplerConfig};
use bnstruct::scoring::{build_score_table, family_log_marglik, FamilyScoreTable};
use bnstruct::{AncestorMatrix, Dag, Edit, NodeSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn synthetic(d: usize, n: usize, seed: u64) -> (Dag, Dataset) {
    let net = random_network(&NetworkSpec::new(d), seed).expect("network");
    let ds = ancestral_sample(&net, n, &[], seed + 1).expect("data");
    (net.dag, ds)
}

fn max_abs(a: &SquareMatrix, b: &SquareMatrix) -> f64 {
    a.max_abs_diff(b)
}

// 1
fn dag_counts() -> Outcome {
    let want: [u64; 5] = [3, 25, 543, 29_281, 3_781_503];
    let clock = Instant::now();
    let mut got = Vec::new();
    for d in 2..=6 {
        got.push(enumerate_dags(d).map_err(|e| e.to_string())?.count() as u64);
    }
    let secs = clock.elapsed().as_secs_f64();
    check(got == want, format!("counts {got:?}"))?;
    check(secs < 120.0, format!("{secs:.1}s"))?;
    Ok(format!("counts {got:?} in {secs:.1}s"))
}

// 2
fn dp_exactness() -> Outcome {
    let (_, ds) = synthetic(5, 500, 202);
    let t = build_score_table(&ds, 4).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut worst_ll: f64 = 0.0;
    for rho in [ModularPrior::flat(), ModularPrior::koivisto()] {
        let tables = dp_build(&t, &rho).map_err(|e| e.to_string())?;
        let post = brute_force_posterior(&t, &GlobalPrior::ModularInduced(rho.clone()))
            .map_err(|e| e.to_string())?;
        worst = worst.max(max_abs(&dp_edge_marginals(&tables), &post.edge_marginals()));
        worst_ll = worst_ll
            .max((tables.log_marginal_likelihood() - post.log_marginal_likelihood()).abs());
    }
    check(worst <= 1e-9, format!("marginal error {worst:e}"))?;
    check(worst_ll <= 1e-9, format!("log p(D) error {worst_ll:e}"))?;
    Ok(format!("max marginal error {worst:.1e}, log p(D) error {worst_ll:.1e} (flat, koivisto)"))
}

/// Topological sorts of `g`, counted by placing one source at a time.
fn linear_extensions_by_placement(g: &Dag) -> u128 {
    fn rec(g: &Dag, placed: NodeSet, count: &mut u128) {
        let d = g.d();
        if placed.len() == d {
            *count += 1;
            return;
        }
        for v in 0..d {
            if !placed.contains(v) && g.parents(v).is_subset_of(placed) {
                rec(g, placed.with(v), count);
            }
        }
    }
    let mut count = 0;
    rec(g, NodeSet::EMPTY, &mut count);
    count
}

/// Plain factorial enumeration: checks every permutation against every edge.
fn linear_extensions_factorial(g: &Dag) -> u128 {
    let d = g.d();
    let mut perm: Vec<usize> = (0..d).collect();
    let edges = g.edges();
    let mut count = 0u128;
    // Heap's algorithm
    let mut c = vec![0usize; d];
    let consistent = |p: &[usize]| {
        let mut pos = vec![0; d];
        for (k, &v) in p.iter().enumerate() {
            pos[v] = k;
        }
        edges.iter().all(|&(u, v)| pos[u] < pos[v])
    };
    count += consistent(&perm) as u128;
    let mut i = 0;
    while i < d {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            count += consistent(&perm) as u128;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    count
}

// 3
fn linear_extensions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for k in 0..200 {
        let d = rng.random_range(1..=6);
        let p = rng.random_range(0.0..0.8);
        let g = Dag::random(d, p, d.saturating_sub(1), &mut rng);
        let dp = count_linear_extensions(&g).map_err(|e| e.to_string())?;
        let brute = linear_extensions_factorial(&g);
        check(dp == brute, format!("graph {k} {g}: {dp} vs {brute}"))?;
        check(
            linear_extensions_by_placement(&g) == brute,
            format!("oracles disagree on {g}"),
        )?;
    }
    Ok("200 random DAGs, d <= 6, exact equality".into())
}

fn empirical(samples: &[Sample]) -> HashMap<Dag, f64> {
    let mut m: HashMap<Dag, f64> = HashMap::new();
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    for s in samples {
        *m.entry(s.dag.clone()).or_default() += s.weight / total;
    }
    m
}

// 4
fn stationarity() -> Outcome {
    let (_, ds) = synthetic(3, 40, 404);
    let t = build_score_table(&ds, 2).map_err(|e| e.to_string())?;
    let post = brute_force_posterior(&t, &GlobalPrior::UniformDag).map_err(|e| e.to_string())?;
    let gp = GlobalProposal::from_exact(&t, &ModularPrior::flat(), 1e-4).map_err(|e| e.to_string())?;
    let seed = 4040;
    let mut report = Vec::new();
    for kernel in [Kernel::Local, Kernel::Global, Kernel::Hybrid, Kernel::Gibbs] {
        let cfg = SamplerConfig {
            steps: 1_000_000,
            burn_in: 1000,
            thin: 5,
            beta: 0.1,
            seed,
            ..Default::default()
        };
        let clock = Instant::now();
        let set = run_chains(&cfg, kernel, &t, Some(&gp), 1, 1).map_err(|e| e.to_string())?;
        let secs = clock.elapsed().as_secs_f64();
        let emp = empirical(&set[0].samples);
        let tv: f64 = post
            .probs()
            .map(|(g, p)| (emp.get(g).copied().unwrap_or(0.0) - p).abs())
            .sum::<f64>()
            / 2.0;
        check(tv <= 0.02, format!("{} TV {tv:.4}", kernel.name()))?;
        check(secs < 300.0, format!("{} took {secs:.0}s", kernel.name()))?;
        report.push(format!("{} {tv:.4}", kernel.name()));
    }
    Ok(format!("TV at 1e6 steps, seed {seed}: {}", report.join(", ")))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// 5
fn convergence_ordering() -> Outcome {
    let (_, ds) = synthetic(5, 1000, 505);
    let t = build_score_table(&ds, 4).map_err(|e| e.to_string())?;
    let exact = brute_force_posterior(&t, &GlobalPrior::UniformDag)
        .map_err(|e| e.to_string())?
        .edge_marginals();
    let gp = GlobalProposal::from_exact(&t, &ModularPrior::flat(), 1e-4).map_err(|e| e.to_string())?;
    let budget = 100_000;
    let mut medians = Vec::new();
    for kernel in [Kernel::Local, Kernel::Global, Kernel::Hybrid] {
        let cfg = SamplerConfig {
            steps: budget,
            thin: 10,
            beta: 0.1,
            seed: 5050,
            ..Default::default()
        };
        let sets = run_chains(&cfg, kernel, &t, Some(&gp), 10, threads()).map_err(|e| e.to_string())?;
        let sads = sets
            .iter()
            .map(|s| sad(&feature_posterior(&s.samples, FeatureKind::DirectedEdge)?, &exact))
            .collect::<bnstruct::Result<Vec<f64>>>()
            .map_err(|e| e.to_string())?;
        medians.push((kernel.name(), median(sads)));
    }
    let (local, global, hybrid) = (medians[0].1, medians[1].1, medians[2].1);
    let text = format!(
        "median SAD over 10 seeds at {budget} steps: local {local:.4}, global {global:.4}, hybrid {hybrid:.4}"
    );
    check(global < 0.05 && hybrid < 0.05, text.clone())?;
    check(local > global && local > hybrid, text.clone())?;
    Ok(text)
}

// 6
fn prior_bias() -> Outcome {
    let r3 = prior_report(3).map_err(|e| e.to_string())?;
    let col = r3.column("modular_flat").ok_or("missing column")?;
    // 0-indexed: fork 0 <- 1 -> 2 and chain 0 -> 1 -> 2
    let fork = Dag::from_edges(3, &[(1, 0), (1, 2)]).map_err(|e| e.to_string())?;
    let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).map_err(|e| e.to_string())?;
    let mass = |g: &Dag| {
        let k = r3.graphs.iter().position(|h| h == g).expect("graph listed");
        col[k]
    };
    let ratio = mass(&fork) / mass(&chain);
    check((ratio - 2.0).abs() < 1e-12, format!("fork/chain ratio {ratio}"))?;

    let r5 = prior_report(5).map_err(|e| e.to_string())?;
    let kl: HashMap<String, f64> = r5.kl_to_uniform().into_iter().collect();
    let (flat, koi) = (kl["modular_flat"], kl["koivisto"]);
    check(flat < koi, format!("KL flat {flat} vs koivisto {koi}"))?;
    let u = 1.0 / r5.graphs.len() as f64;
    let dev = r5
        .column("flat_ellis")
        .ok_or("missing column")?
        .iter()
        .map(|p| (p - u).abs())
        .fold(0.0, f64::max);
    check(dev <= 1e-12, format!("flat+Ellis deviation {dev:e}"))?;
    Ok(format!(
        "fork/chain = {ratio}, KL(flat) {flat:.4} < KL(koivisto) {koi:.4}, flat+Ellis max deviation {dev:.1e}"
    ))
}

// 7
fn structure_recovery() -> Outcome {
    let (truth, ds) = synthetic(10, 10_000, 707);
    let t = build_score_table(&ds, 9).map_err(|e| e.to_string())?;
    let rho = ModularPrior::flat();
    let tables = dp_build(&t, &rho).map_err(|e| e.to_string())?;
    let m = dp_edge_marginals(&tables);
    let auc_dp = auc(&m, &truth, FeatureKind::UndirectedEdge).map_err(|e| e.to_string())?;
    let gp = GlobalProposal::new(&m, 1e-4).map_err(|e| e.to_string())?;
    let cfg = SamplerConfig {
        steps: 100_000,
        beta: 0.1,
        seed: 7070,
        ..Default::default()
    };
    let set = run_chains(&cfg, Kernel::Hybrid, &t, Some(&gp), 1, 1).map_err(|e| e.to_string())?;
    let f = feature_posterior(&set[0].samples, FeatureKind::UndirectedEdge).map_err(|e| e.to_string())?;
    let auc_mc = auc(&f, &truth, FeatureKind::UndirectedEdge).map_err(|e| e.to_string())?;
    let text = format!(
        "undirected AUC: DP {auc_dp:.4}, hybrid (1e5 samples) {auc_mc:.4}; truth has {} edges",
        truth.edge_count()
    );
    check(auc_dp >= 0.95 && auc_mc >= 0.95, text.clone())?;
    Ok(text)
}

// 8
fn map_and_chow_liu() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for k in 0..20 {
        let d = rng.random_range(2..=5);
        let cap = rng.random_range(1..d);
        let t = FamilyScoreTable::from_fn(d, cap, |_, _| -rng.random_range(0.0..5.0))
            .map_err(|e| e.to_string())?;
        let rho = if k % 2 == 0 {
            ModularPrior::flat()
        } else {
            ModularPrior::koivisto()
        };
        let (g, score) = map_dag(&t, &rho).map_err(|e| e.to_string())?;
        let mut best: Option<(Dag, f64)> = None;
        for h in enumerate_dags(d).map_err(|e| e.to_string())? {
            let s = t.log_marglik_or_neg_inf(&h) + rho.log_modular(&h);
            if best.as_ref().is_none_or(|b| s > b.1) {
                best = Some((h, s));
            }
        }
        let (bg, bs) = best.expect("at least one DAG");
        check(g == bg, format!("table {k}: {g} vs {bg}"))?;
        check((score - bs).abs() < 1e-9, format!("table {k}: score {score} vs {bs}"))?;
    }
    for k in 0..10 {
        let d = 2 + k % 4;
        let (_, ds) = synthetic(d, 300, 8080 + k as u64);
        let tree = chow_liu(&ds).map_err(|e| e.to_string())?;
        check(
            (0..d).all(|i| tree.parents(i).len() <= 1),
            format!("dataset {k}: not a forest"),
        )?;
        let got = ml_loglik(&ds, &tree).map_err(|e| e.to_string())?;
        let mut best = f64::NEG_INFINITY;
        for h in enumerate_dags(d).map_err(|e| e.to_string())? {
            if (0..d).all(|i| h.parents(i).len() <= 1) {
                best = best.max(ml_loglik(&ds, &h).map_err(|e| e.to_string())?);
            }
        }
        check(
            (got - best).abs() <= 1e-9 * best.abs().max(1.0),
            format!("dataset {k}: {got} vs best tree {best}"),
        )?;
    }
    Ok("20 random tables MAP == enumeration argmax; 10 datasets Chow-Liu == best tree".into())
}

// 9
fn predictive_cross_check() -> Outcome {
    let (_, train) = synthetic(4, 120, 909);
    let (_, test) = synthetic(4, 6, 909);
    let rho = ModularPrior::koivisto();
    let t = build_score_table(&train, 3).map_err(|e| e.to_string())?;
    let post = brute_force_posterior(&t, &GlobalPrior::ModularInduced(rho.clone()))
        .map_err(|e| e.to_string())?;
    let samples: Vec<Sample> = post
        .probs()
        .map(|(g, p)| Sample {
            step: 0,
            dag: g.clone(),
            weight: p,
            log_target: 0.0,
        })
        .collect();
    let avg = predictive_loglik_samples(&samples, &train, &test).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for r in 0..test.n() {
        let x = test.record(r);
        let with = train.with_record(&x).map_err(|e| e.to_string())?;
        // enumeration BMA: p(x | D) = sum_G p(G | D) p(D, x | G) / p(D | G)
        let mut fam: HashMap<(usize, NodeSet), f64> = HashMap::new();
        let mut terms = Vec::new();
        for (g, lp) in post.graphs.iter().zip(&post.log_post) {
            let mut ratio = 0.0;
            for i in 0..4 {
                let key = (i, g.parents(i));
                ratio += *fam.entry(key).or_insert_with(|| {
                    family_log_marglik(&with, i, key.1).unwrap()
                        - family_log_marglik(&train, i, key.1).unwrap()
                });
            }
            terms.push(lp + ratio);
        }
        let bma = log_sum_exp(&terms);
        let dp = dp_predictive_logprob(&train, &x, &rho, 3).map_err(|e| e.to_string())?;
        worst = worst.max((dp - bma).abs()).max((avg.per_record[r] - bma).abs());
    }
    check(worst <= 1e-9, format!("max per-record difference {worst:e}"))?;
    Ok(format!("DP, enumeration BMA and weighted samples agree to {worst:.1e}"))
}

fn paired_one_sided_p(diffs: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (sd / n.sqrt());
    1.0 - StudentsT::new(0.0, 1.0, n - 1.0).unwrap().cdf(t)
}

// 10
fn predictive_trend() -> Outcome {
    let rho = ModularPrior::flat();
    let tasks: Vec<(u64, usize)> = (0..10u64).flat_map(|s| (0..5).map(move |f| (s, f))).collect();
    let run = |&(s, f): &(u64, usize)| -> bnstruct::Result<(f64, f64, f64)> {
        let (_, ds) = synthetic(8, 800, 1000 + 10 * s);
        let folds = split_folds(&ds, 5, s)?;
        let (train, test) = &folds[f];
        let t = build_score_table(train, 7)?;
        let gp = GlobalProposal::from_exact(&t, &rho, 1e-4)?;
        let cfg = SamplerConfig {
            steps: 20_000,
            burn_in: 2_000,
            thin: 10,
            beta: 0.1,
            seed: 100 * s + f as u64,
            ..Default::default()
        };
        let set = run_chains(&cfg, Kernel::Hybrid, &t, Some(&gp), 1, 1)?;
        let bma = predictive_loglik_samples(&set[0].samples, train, test)?.mean;
        let map = predictive_loglik_plugin(&map_dag(&t, &rho)?.0, train, test)?.mean;
        let fact = predictive_loglik_plugin(&Dag::empty(8), train, test)?.mean;
        Ok((bma, map, fact))
    };
    let results: Vec<(f64, f64, f64)> = std::thread::scope(|scope| {
        let chunk = tasks.len().div_ceil(threads());
        let handles: Vec<_> = tasks
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(run).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker"))
            .collect::<bnstruct::Result<Vec<_>>>()
    })
    .map_err(|e| e.to_string())?;
    let n = results.len() as f64;
    let mean = |k: usize| {
        results
            .iter()
            .map(|r| [r.0, r.1, r.2][k])
            .sum::<f64>()
            / n
    };
    let (bma, map, fact) = (mean(0), mean(1), mean(2));
    let p1 = paired_one_sided_p(&results.iter().map(|r| r.0 - r.1).collect::<Vec<_>>());
    let p2 = paired_one_sided_p(&results.iter().map(|r| r.1 - r.2).collect::<Vec<_>>());
    let text = format!(
        "mean test loglik over 50 folds: BMA {bma:.5}, MAP {map:.5}, factored {fact:.5}; one-sided paired p: BMA>MAP {p1:.3}, MAP>factored {p2:.2e}"
    );
    check(bma >= map && map >= fact, text.clone())?;
    check(p1 < 0.05 && p2 < 0.05, text.clone())?;
    Ok(text)
}

fn markov_class(g: &Dag) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>) {
    let d = g.d();
    let mut skel = BTreeSet::new();
    let mut v = BTreeSet::new();
    for (a, b) in g.edges() {
        skel.insert((a.min(b), a.max(b)));
    }
    for c in 0..d {
        let ps: Vec<usize> = g.parents(c).iter().collect();
        for (x, &a) in ps.iter().enumerate() {
            for &b in &ps[x + 1..] {
                if !g.skeleton_has(a, b) {
                    v.insert((a, b, c));
                }
            }
        }
    }
    (skel, v)
}

// 11
fn property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    // acyclicity and ancestor-closure equivalence along random edit walks
    for _ in 0..200 {
        let d = rng.random_range(2..=8);
        let mut g = Dag::random(d, 0.3, d - 1, &mut rng);
        let mut anc = AncestorMatrix::from_dag(&g);
        for _ in 0..30 {
            let edits = g.legal_edits(&anc);
            if edits.is_empty() {
                break;
            }
            let e: Edit = edits[rng.random_range(0..edits.len())];
            anc.apply(&mut g, e).map_err(|e| e.to_string())?;
            check(g.topological_order().len() == d, format!("cycle after {e:?} in {g}"))?;
            let fresh = AncestorMatrix::from_dag(&g);
            for i in 0..d {
                check(anc.descendants(i) == fresh.descendants(i), "ancestor matrix drifted")?;
                check(anc.descendants(i) == g.descendants(i), "closure mismatch")?;
            }
        }
    }
    // Hastings terms: the local proposal is reversible and uniform over the
    // neighbourhood; the global proposal's DAG mass plus its cyclic mass is 1
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let g = Dag::random(d, 0.3, d - 1, &mut rng);
        let nbd = g.neighborhood();
        check(
            nbd.len() == g.count_legal_edits(&AncestorMatrix::from_dag(&g)),
            "neighbourhood size",
        )?;
        for h in &nbd {
            check(h.neighborhood().contains(&g), format!("{h} cannot return to {g}"))?;
        }
    }
    for _ in 0..50 {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 0.0 } else { rng.random_range(0.0..0.6) }).collect())
            .collect();
        let gp = GlobalProposal::new(&SquareMatrix::from_rows(&rows).unwrap(), 1e-3)
            .map_err(|e| e.to_string())?;
        let dag_mass: f64 = enumerate_dags(3)
            .map_err(|e| e.to_string())?
            .map(|g| gp.log_q(&g).exp())
            .sum();
        let cyc = gp.p(0, 1) * gp.p(1, 2) * gp.p(2, 0) + gp.p(1, 0) * gp.p(2, 1) * gp.p(0, 2);
        check((dag_mass + cyc - 1.0).abs() < 1e-12, "global proposal mass")?;
    }
    // BDeu score equivalence at d <= 4
    for (d, seed) in [(2, 1u64), (3, 2), (4, 3)] {
        let (_, ds) = synthetic(d, 200, 1100 + seed);
        let t = build_score_table(&ds, d - 1).map_err(|e| e.to_string())?;
        let mut classes: HashMap<_, Vec<f64>> = HashMap::new();
        for g in enumerate_dags(d).map_err(|e| e.to_string())? {
            classes
                .entry(markov_class(&g))
                .or_default()
                .push(t.graph_log_marglik(&g).map_err(|e| e.to_string())?);
        }
        for v in classes.values() {
            let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |a, &x| (a.0.min(x), a.1.max(x)));
            check(hi - lo < 1e-9 * hi.abs().max(1.0), format!("d={d}: class spread {}", hi - lo))?;
        }
    }
    // AUC invariance under increasing transforms
    for _ in 0..100 {
        let d = rng.random_range(3..=7);
        let g = Dag::random(d, 0.3, d - 1, &mut rng);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.random_range(0..6) as f64 / 5.0).collect())
            .collect();
        let s = SquareMatrix::from_rows(&rows).unwrap();
        for k in [FeatureKind::DirectedEdge, FeatureKind::DirectedPath] {
            if let Ok(a) = auc(&s, &g, k) {
                let b = auc(&s.map(|x| (2.0 * x).exp() - 3.0), &g, k).unwrap();
                check((a - b).abs() < 1e-12, "AUC not invariant")?;
            }
        }
    }
    // truncation bounds
    for _ in 0..200 {
        let d = rng.random_range(2..=6);
        let c = rng.random_range(1e-6..0.2);
        let rows: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.random_range(0.0..=1.0)).collect())
            .collect();
        let gp = GlobalProposal::new(&SquareMatrix::from_rows(&rows).unwrap(), c)
            .map_err(|e| e.to_string())?;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    let p = gp.p(i, j);
                    check(p >= c && p <= 1.0 - c, format!("p = {p}, C = {c}"))?;
                    check(p + gp.p(j, i) <= 1.0 + 1e-12, "pair sum")?;
                }
            }
        }
    }
    Ok("acyclicity, ancestor closure, Hastings terms, score equivalence, AUC invariance, truncation".into())
}

// 12
fn performance() -> Outcome {
    let (_, ds) = synthetic(10, 2000, 1212);
    let t = build_score_table(&ds, 9).map_err(|e| e.to_string())?;
    // a prior no earlier criterion used at d = 10, so no cached normalizer
    let rho = ModularPrior::koivisto();
    let clock = Instant::now();
    let tables = dp_build(&t, &rho).map_err(|e| e.to_string())?;
    let m = dp_edge_marginals(&tables);
    let secs = clock.elapsed().as_secs_f64();
    check(m.dim() == 10, "matrix size")?;
    check(secs <= 10.0, format!("{secs:.2}s"))?;
    Ok(format!("dp_build + dp_edge_marginals at d=10 in {secs:.3}s"))
}

fn main() {
    // cargo test passes harness flags; only a name filter is honoured
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (12, "performance envelope", performance),
        (1, "DAG enumeration counts", dag_counts),
        (2, "DP exactness", dp_exactness),
        (3, "linear extensions", linear_extensions),
        (4, "stationarity", stationarity),
        (5, "convergence ordering", convergence_ordering),
        (6, "prior bias", prior_bias),
        (7, "structure recovery", structure_recovery),
        (8, "MAP and Chow-Liu", map_and_chow_liu),
        (9, "predictive cross-check", predictive_cross_check),
        (10, "predictive trend", predictive_trend),
        (11, "property suite", property_suite),
    ];
    let mut lines = Vec::new();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if filter.as_ref().is_some_and(|s| !name.contains(s.as_str())) {
            continue;
        }
        let clock = Instant::now();
        let outcome = f();
        let took = Duration::from_secs_f64(clock.elapsed().as_secs_f64());
        let line = match &outcome {
            Ok(msg) => format!("criterion {n:>2} PASS  {name}: {msg} [{took:.1?}]"),
            Err(msg) => {
                failed += 1;
                format!("criterion {n:>2} FAIL  {name}: {msg} [{took:.1?}]")
            }
        };
        println!("{line}");
        lines.push((n, line));
    }
    lines.sort_by_key(|l| l.0);
    println!("\nacceptance summary");
    for (_, l) in &lines {
        println!("{l}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
