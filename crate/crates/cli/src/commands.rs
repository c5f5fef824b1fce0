use std::collections::BTreeMap;

use bnstruct::data::{ancestral_sample, random_network, GroundTruth, Intervention, NetworkSpec};
use bnstruct::exact::{
    brute_force_posterior, chow_liu, dp_build, dp_edge_marginals, map_dag, DpPredictor,
};
use bnstruct::inference::{
    auc, feature_posterior, predictive_curve, predictive_loglik_plugin, predictive_loglik_samples,
    roc_curve, sad_curve, FeatureKind,
};
use bnstruct::numeric::{fmt_f64, SquareMatrix};
use bnstruct::priors::{prior_report, GlobalPrior};
use bnstruct::samplers::{derive_seed, run_chains, GlobalProposal, Kernel, Sample, SampleSet};
use bnstruct::scoring::build_score_table;
use bnstruct::Dag;
use serde_json::{json, Value};

use crate::args::*;
use crate::common::*;
use crate::error::CliError;
use crate::output::{csv_table, Outputs};

pub fn gen(a: &GenArgs, out: &mut Outputs) -> Result<()> {
    if a.nodes == 0 {
        return Err(CliError::usage("--nodes must be at least 1"));
    }
    let interventions = a
        .intervene
        .iter()
        .map(|s| parse_intervention(s))
        .collect::<Result<Vec<_>>>()?;
    let spec = NetworkSpec {
        d: a.nodes,
        arity_min: a.arity_min,
        arity_max: a.arity_max,
        dirichlet_strength: a.dirichlet,
        expected_indegree: a.indegree,
        max_indegree: a.max_indegree,
    };
    let seed = a.output.seed;
    let net = random_network(&spec, seed)?;
    let ds = ancestral_sample(&net, a.records, &interventions, derive_seed(seed, 1))?;
    let mut data = Vec::new();
    ds.write_csv(&mut data)?;
    out.add("data.csv", data);
    let mut ivs = Vec::new();
    ds.write_intervention_csv(&mut ivs)?;
    out.add("interventions.csv", ivs);
    out.json(
        "truth.json",
        &GroundTruth {
            dag: net.dag.encode(),
            arities: net.arities.clone(),
            seed,
        },
    )?;
    out.json(
        "network.json",
        &json!({
            "dag": net.dag.encode(),
            "arities": net.arities,
            "entropy": net.entropy(),
            "cpts": net.tables,
        }),
    )
}

/// `NODE:STATE:FIRST-LAST`.
fn parse_intervention(s: &str) -> Result<Intervention> {
    let bad = || CliError::usage(format!("bad --intervene {s:?}; expected NODE:STATE:FIRST-LAST"));
    let parts: Vec<&str> = s.split(':').collect();
    let [node, state, range] = parts.as_slice() else {
        return Err(bad());
    };
    let (first, last) = range.split_once('-').ok_or_else(bad)?;
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    Ok(Intervention {
        node: num(node)?,
        state: num(state)?,
        records: num(first)?..num(last)?,
    })
}

pub fn score(a: &ScoreArgs, out: &mut Outputs) -> Result<()> {
    if a.source.scores.is_some() {
        return Err(CliError::usage("score builds a table from --data"));
    }
    let (t, _) = load_table(&a.source)?;
    let mut buf = Vec::new();
    t.write_json(&mut buf)?;
    out.add("scores.json", buf);
    Ok(())
}

pub fn exact(a: &ExactArgs, out: &mut Outputs) -> Result<()> {
    let (t, ds) = load_table(&a.source)?;
    let d = t.d();
    let rho = modular_prior(&a.prior, d)?;
    let summary = if a.brute_force {
        let prior = global_prior(a.target, &rho);
        let post = brute_force_posterior(&t, &prior)?;
        out.matrix("edge_marginals", &post.edge_marginals())?;
        out.matrix("undirected_marginals", &post.undirected_marginals())?;
        out.matrix("path_marginals", &post.path_marginals())?;
        let (mode, p) = post.mode();
        let mode_score = t.graph_log_marglik(mode)? + prior.log_prior(mode)?;
        out.add("map.txt", format!("{}\n", mode.encode()));
        json!({
            "method": "brute-force",
            "d": d,
            "max_indegree": t.max_indegree(),
            "prior": prior.name(),
            "log_marginal_likelihood": post.log_marginal_likelihood(),
            "log_z": post.log_prior_total,
            "log_joint_total": post.log_joint_total,
            "map": mode.encode(),
            "map_posterior": p,
            "map_log_score": mode_score,
        })
    } else {
        let tables = dp_build(&t, &rho)?;
        out.matrix("edge_marginals", &dp_edge_marginals(&tables))?;
        let (map, map_score) = map_dag(&t, &rho)?;
        out.add("map.txt", format!("{}\n", map.encode()));
        json!({
            "method": "dp",
            "d": d,
            "max_indegree": t.max_indegree(),
            "prior": GlobalPrior::ModularInduced(rho.clone()).name(),
            "log_marginal_likelihood": tables.log_marginal_likelihood(),
            "log_z": tables.log_prior_mass,
            "log_joint_total": tables.log_total(),
            "map": map.encode(),
            "map_log_score": map_score,
        })
    };
    if let Some(ds) = ds {
        out.add("chow_liu.txt", format!("{}\n", chow_liu(&ds)?.encode()));
    }
    out.json("summary.json", &summary)
}

fn proposal_for(
    kernels: &[Kernel],
    t: &bnstruct::scoring::FamilyScoreTable,
    cfg: &bnstruct::samplers::SamplerConfig,
) -> Result<Option<GlobalProposal>> {
    if kernels.iter().any(|k| k.needs_proposal()) {
        cfg.validate(t.d())?;
        Ok(Some(GlobalProposal::from_exact(t, &cfg.proposal_prior, cfg.trunc_c)?))
    } else {
        Ok(None)
    }
}

fn sample_csv(set: &SampleSet) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    set.write_samples(&mut buf)?;
    Ok(buf)
}

fn diagnostics(label: &str, sets: &[SampleSet]) -> Value {
    json!({
        "kernel": label,
        "chains": sets.iter().map(SampleSet::diagnostics_json).collect::<Vec<_>>(),
    })
}

pub fn sample(a: &SampleArgs, out: &mut Outputs) -> Result<()> {
    let (t, _) = load_table(&a.source)?;
    let d = t.d();
    let rho = modular_prior(&a.prior, d)?;
    let (kernel, label) = kernel_label(a.kernel, a.chain.beta);
    let mut cfg = sampler_config(
        &a.chain,
        a.output.seed,
        kernel,
        global_prior(a.chain.target, &rho),
        &rho,
    )?;
    if let Some(s) = &a.initial {
        cfg.initial = Some(parse_dag(s, Some(d))?);
    }
    cfg.validate(d)?;
    let gp = proposal_for(&[kernel], &t, &cfg)?;
    let sets = run_chains(&cfg, kernel, &t, gp.as_ref(), a.chain.chains, threads(a.chain.threads))?;
    for s in &sets {
        out.add(format!("{label}_chain{}.csv", s.chain), sample_csv(s)?);
    }
    out.json("diagnostics.json", &diagnostics(label, &sets))?;
    out.json(
        "timing.json",
        &sets.iter().map(SampleSet::timing_json).collect::<Vec<_>>(),
    )
}

fn kinds(requested: &[FeatureArg]) -> Vec<FeatureKind> {
    let all = [FeatureArg::Edge, FeatureArg::Undirected, FeatureArg::Path];
    let req = if requested.is_empty() { &all[..] } else { requested };
    let mut out: Vec<FeatureKind> = Vec::new();
    for k in req {
        let k = match k {
            FeatureArg::Edge => FeatureKind::DirectedEdge,
            FeatureArg::Undirected => FeatureKind::UndirectedEdge,
            FeatureArg::Path => FeatureKind::DirectedPath,
        };
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

pub fn features(a: &FeaturesArgs, out: &mut Outputs) -> Result<()> {
    let mut pooled: Vec<Sample> = Vec::new();
    for p in &a.samples {
        pooled.extend(read_sample_file(p)?);
    }
    for k in kinds(&a.kind) {
        out.matrix(&format!("features_{}", k.name()), &feature_posterior(&pooled, k)?)?;
    }
    Ok(())
}

pub fn convergence(a: &ConvergenceArgs, out: &mut Outputs) -> Result<()> {
    let (t, _) = load_table(&a.source)?;
    let d = t.d();
    let rho = modular_prior(&a.prior, d)?;
    let target = global_prior(a.chain.target, &rho);
    let runs: Vec<(Kernel, &str)> = a
        .kernels
        .iter()
        .map(|&k| kernel_label(k, a.chain.beta))
        .collect();
    for (i, (_, l)) in runs.iter().enumerate() {
        if runs[..i].iter().any(|(_, m)| m == l) {
            return Err(CliError::usage(format!("kernel {l} requested twice")));
        }
    }
    let configs = runs
        .iter()
        .map(|&(k, _)| sampler_config(&a.chain, a.output.seed, k, target.clone(), &rho))
        .collect::<Result<Vec<_>>>()?;
    for c in &configs {
        c.validate(d)?;
    }
    let (reference, exact) = match a.chain.target {
        Target::Induced => ("dp", dp_edge_marginals(&dp_build(&t, &rho)?)),
        _ => ("brute-force", brute_force_posterior(&t, &target)?.edge_marginals()),
    };
    out.matrix("exact_marginals", &exact)?;
    let kernels: Vec<Kernel> = runs.iter().map(|r| r.0).collect();
    let gp = proposal_for(&kernels, &t, &configs[0])?;
    let workers = threads(a.chain.threads);
    let mut summary = BTreeMap::new();
    let mut timing = BTreeMap::new();
    for ((kernel, label), cfg) in runs.iter().zip(&configs) {
        let sets = run_chains(cfg, *kernel, &t, gp.as_ref(), a.chain.chains, workers)?;
        let mut finals = Vec::with_capacity(sets.len());
        for s in &sets {
            let curve = sad_curve(s, &exact, a.points)?;
            finals.push(curve.last().map_or(f64::NAN, |c| c.2));
            let text = if a.wall_clock {
                csv_table(
                    &["step", "seconds", "sad"],
                    curve.iter().map(|c| vec![c.0.to_string(), fmt_f64(c.1), fmt_f64(c.2)]),
                )
            } else {
                csv_table(
                    &["step", "sad"],
                    curve.iter().map(|c| vec![c.0.to_string(), fmt_f64(c.2)]),
                )
            };
            out.add(format!("sad_{label}_chain{}.csv", s.chain), text);
        }
        summary.insert(label.to_string(), json!({ "final_sad": Summary::of(finals) }));
        timing.insert(
            label.to_string(),
            sets.iter().map(SampleSet::timing_json).collect::<Vec<_>>(),
        );
    }
    out.json(
        "summary.json",
        &json!({ "reference": reference, "kernels": summary }),
    )?;
    out.json("timing.json", &timing)
}

pub fn structure_eval(a: &StructureEvalArgs, out: &mut Outputs) -> Result<()> {
    let truth: Dag = match (&a.truth, &a.truth_graph) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Lib(bnstruct::Error::Io {
                    path: p.clone(),
                    source: e,
                })
            })?;
            let gt: GroundTruth = serde_json::from_str(&text).map_err(bnstruct::Error::from)?;
            gt.dag()?
        }
        (None, Some(s)) => parse_dag(s, None)?,
        (None, None) => return Err(CliError::usage("one of --truth or --truth-graph is required")),
    };
    let d = truth.d();
    let kinds = kinds(&a.kind);
    // (source name, score matrix per kind; None where the source has no such feature)
    let mut sources: Vec<(String, Vec<Option<SquareMatrix>>)> = Vec::new();
    for p in &a.samples {
        let s = read_sample_file(p)?;
        let mats = kinds
            .iter()
            .map(|&k| feature_posterior(&s, k).map(Some))
            .collect::<bnstruct::Result<Vec<_>>>()?;
        sources.push((p.display().to_string(), mats));
    }
    let edge_only = |m: &SquareMatrix| {
        kinds
            .iter()
            .map(|&k| (k != FeatureKind::DirectedPath).then(|| m.clone()))
            .collect::<Vec<_>>()
    };
    for p in &a.marginals {
        let m = read_matrix(p)?;
        sources.push((p.display().to_string(), edge_only(&m)));
    }
    if let Some(ds) = load_dataset(&a.data)? {
        let cap = resolve_cap(ds.d(), a.max_indegree);
        let t = build_score_table(&ds, cap)?;
        let rho = modular_prior(&a.prior, ds.d())?;
        let m = dp_edge_marginals(&dp_build(&t, &rho)?);
        sources.push(("dp".to_string(), edge_only(&m)));
    }
    if sources.is_empty() {
        return Err(CliError::usage(
            "nothing to evaluate; pass --samples, --marginals or --data",
        ));
    }
    let mut runs = Vec::new();
    let mut per_kind: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (idx, (name, mats)) in sources.iter().enumerate() {
        let mut aucs = BTreeMap::new();
        for (&k, m) in kinds.iter().zip(mats) {
            let Some(m) = m else {
                aucs.insert(k.name(), Value::Null);
                continue;
            };
            if m.dim() != d {
                return Err(CliError::Lib(bnstruct::Error::Input(format!(
                    "{name}: {} nodes, truth has {d}",
                    m.dim()
                ))));
            }
            let v = auc(m, &truth, k)?;
            per_kind.entry(k.name()).or_default().push(v);
            aucs.insert(k.name(), json!(v));
            let roc = roc_curve(m, &truth, k)?;
            out.add(
                format!("roc_{idx}_{}.csv", k.name()),
                csv_table(
                    &["fpr", "tpr"],
                    roc.iter().map(|p| vec![fmt_f64(p.0), fmt_f64(p.1)]),
                ),
            );
        }
        runs.push(json!({ "index": idx, "source": name, "auc": aucs }));
    }
    let mean: BTreeMap<&str, Summary> = per_kind
        .into_iter()
        .map(|(k, v)| (k, Summary::of(v)))
        .collect();
    out.json("auc.json", &json!({ "runs": runs, "summary": mean }))
}

struct FoldResult {
    /// (method label, mean test log-likelihood)
    scores: Vec<(String, f64)>,
    /// (label, curve of (step, mean log-likelihood))
    curves: Vec<(String, Vec<(usize, f64)>)>,
}

pub fn predict(a: &PredictArgs, out: &mut Outputs) -> Result<()> {
    let ds = load_dataset(&a.data)?.ok_or_else(|| CliError::usage("--data is required"))?;
    let d = ds.d();
    let cap = resolve_cap(d, a.max_indegree);
    let rho = modular_prior(&a.prior, d)?;
    let target = global_prior(a.chain.target, &rho);
    let mut methods: Vec<(Method, String, Option<Kernel>)> = Vec::new();
    for &m in &a.methods {
        let (label, kernel) = match m {
            Method::Factored => ("factored".to_string(), None),
            Method::ChowLiu => ("chow-liu".to_string(), None),
            Method::Map => ("map".to_string(), None),
            Method::Dp => ("dp".to_string(), None),
            Method::Local | Method::Global | Method::Hybrid | Method::Gibbs | Method::Order => {
                let k = match m {
                    Method::Local => KernelArg::Local,
                    Method::Global => KernelArg::Global,
                    Method::Hybrid => KernelArg::Hybrid,
                    Method::Gibbs => KernelArg::Gibbs,
                    _ => KernelArg::Order,
                };
                let (kernel, label) = kernel_label(k, a.chain.beta);
                (format!("bma-{label}"), Some(kernel))
            }
        };
        if methods.iter().any(|x| x.1 == label) {
            return Err(CliError::usage(format!("method {label} requested twice")));
        }
        methods.push((m, label, kernel));
    }
    for (_, _, k) in &methods {
        if let Some(k) = k {
            sampler_config(&a.chain, 0, *k, target.clone(), &rho)?.validate(d)?;
        }
    }
    let folds = bnstruct::data::split_folds(&ds, a.folds, derive_seed(a.output.seed, 0))?;
    let results = par_map(&folds, threads(a.chain.threads), |f, (train, test)| {
        run_fold(a, f, train, test, cap, &rho, &target, &methods)
    })
    .into_iter()
    .collect::<Result<Vec<FoldResult>>>()?;
    let mut summary = BTreeMap::new();
    for (k, (_, label, _)) in methods.iter().enumerate() {
        let vals: Vec<f64> = results.iter().map(|r| r.scores[k].1).collect();
        summary.insert(label.clone(), Summary::of(vals));
    }
    for (f, r) in results.iter().enumerate() {
        for (label, curve) in &r.curves {
            out.add(
                format!("curve_{label}_fold{f}.csv"),
                csv_table(
                    &["step", "loglik"],
                    curve.iter().map(|c| vec![c.0.to_string(), fmt_f64(c.1)]),
                ),
            );
        }
    }
    out.json(
        "predict.json",
        &json!({ "folds": a.folds, "records": ds.n(), "methods": summary }),
    )
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    a: &PredictArgs,
    f: usize,
    train: &bnstruct::data::Dataset,
    test: &bnstruct::data::Dataset,
    cap: usize,
    rho: &bnstruct::priors::ModularPrior,
    target: &GlobalPrior,
    methods: &[(Method, String, Option<Kernel>)],
) -> Result<FoldResult> {
    let d = train.d();
    let needs_table = methods
        .iter()
        .any(|m| m.2.is_some() || m.0 == Method::Map);
    let table = if needs_table {
        Some(build_score_table(train, cap)?)
    } else {
        None
    };
    let mut scores = Vec::new();
    let mut curves = Vec::new();
    for (m, label, kernel) in methods {
        let ell = match (m, kernel) {
            (_, Some(k)) => {
                let t = table.as_ref().expect("built above");
                let seed = derive_seed(a.output.seed, 1 + f as u64);
                let cfg = sampler_config(&a.chain, seed, *k, target.clone(), rho)?;
                let gp = proposal_for(&[*k], t, &cfg)?;
                let sets = run_chains(&cfg, *k, t, gp.as_ref(), a.chain.chains, 1)?;
                let curve = predictive_curve(&sets[0], train, test, a.points)?;
                curves.push((label.clone(), curve.iter().map(|c| (c.0, c.2)).collect()));
                let pooled: Vec<Sample> = sets.into_iter().flat_map(|s| s.samples).collect();
                predictive_loglik_samples(&pooled, train, test)?.mean
            }
            (Method::Factored, _) => predictive_loglik_plugin(&Dag::empty(d), train, test)?.mean,
            (Method::ChowLiu, _) => predictive_loglik_plugin(&chow_liu(train)?, train, test)?.mean,
            (Method::Map, _) => {
                let t = table.as_ref().expect("built above");
                predictive_loglik_plugin(&map_dag(t, rho)?.0, train, test)?.mean
            }
            (Method::Dp, _) => {
                let p = DpPredictor::new(train, rho.clone(), cap)?;
                let mut sum = 0.0;
                for r in 0..test.n() {
                    sum += p.logprob(&test.record(r))?;
                }
                sum / test.n() as f64
            }
            _ => unreachable!("sampler methods carry a kernel"),
        };
        scores.push((label.clone(), ell));
    }
    Ok(FoldResult { scores, curves })
}

pub fn priors(a: &PriorsArgs, out: &mut Outputs) -> Result<()> {
    let report = prior_report(a.nodes)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    out.add("priors.csv", buf);
    out.json("kl.json", &report.kl_json())
}
