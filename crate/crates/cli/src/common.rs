use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use bnstruct::data::{load_csv, CsvOptions, Dataset};
use bnstruct::numeric::SquareMatrix;
use bnstruct::priors::{GlobalPrior, ModularPrior};
use bnstruct::samplers::{read_samples, Kernel, OrderWeighting, Sample, SamplerConfig};
use bnstruct::scoring::{build_score_table_with_budget, default_max_indegree, FamilyScoreTable};
use bnstruct::Dag;
use serde::Serialize;

use crate::args::{ChainArgs, DataArgs, KernelArg, PriorArgs, Rho, SourceArgs, Target, Weighting};
use crate::error::CliError;

pub type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        CliError::Lib(bnstruct::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

pub fn load_dataset(a: &DataArgs) -> Result<Option<Dataset>> {
    let Some(path) = &a.data else {
        return Ok(None);
    };
    let opts = CsvOptions {
        has_header: a.header || first_line_is_header(path)?,
        intervention_path: a.interventions.clone(),
        arities: a.arities.clone(),
    };
    Ok(Some(load_csv(path, &opts)?))
}

/// A first line with no integer cell is taken as a header.
fn first_line_is_header(path: &Path) -> Result<bool> {
    use std::io::BufRead;
    let mut line = String::new();
    BufReader::new(open(path)?).read_line(&mut line).map_err(|e| {
        CliError::Lib(bnstruct::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let line = line.trim();
    Ok(!line.is_empty() && line.split(',').all(|c| c.trim().parse::<u64>().is_err()))
}

pub fn resolve_cap(d: usize, requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| default_max_indegree(d))
}

/// Score table from `--scores` or built from `--data`; the dataset is
/// returned when one was loaded.
pub fn load_table(a: &SourceArgs) -> Result<(FamilyScoreTable, Option<Dataset>)> {
    if let Some(path) = &a.scores {
        let t = FamilyScoreTable::read_json(BufReader::new(open(path)?))?;
        if let Some(k) = a.max_indegree {
            if k != t.max_indegree() {
                return Err(CliError::usage(format!(
                    "--max-indegree {k} differs from the score table's {}",
                    t.max_indegree()
                )));
            }
        }
        return Ok((t, None));
    }
    let ds = load_dataset(&a.data)?
        .ok_or_else(|| CliError::usage("one of --data or --scores is required"))?;
    let cap = resolve_cap(ds.d(), a.max_indegree);
    let t = build_score_table_with_budget(&ds, cap, a.budget_mib.saturating_mul(1 << 20))?;
    Ok((t, Some(ds)))
}

pub fn modular_prior(a: &PriorArgs, d: usize) -> Result<ModularPrior> {
    if let Some(path) = &a.prior_file {
        return Ok(ModularPrior::custom_from_json(BufReader::new(open(path)?), d)?);
    }
    Ok(rho(a.prior))
}

pub fn rho(r: Rho) -> ModularPrior {
    match r {
        Rho::Flat => ModularPrior::flat(),
        Rho::Koivisto => ModularPrior::koivisto(),
    }
}

pub fn global_prior(target: Target, rho: &ModularPrior) -> GlobalPrior {
    match target {
        Target::Uniform => GlobalPrior::UniformDag,
        Target::Modular => GlobalPrior::Modular(rho.clone()),
        Target::Induced => GlobalPrior::ModularInduced(rho.clone()),
    }
}

/// Kernel to run and the label its outputs carry. The hybrid kernel with
/// `beta` 1 or 0 is exactly the local or global kernel and is named so.
pub fn kernel_label(k: KernelArg, beta: f64) -> (Kernel, &'static str) {
    match k {
        KernelArg::Local => (Kernel::Local, "local"),
        KernelArg::Global => (Kernel::Global, "global"),
        KernelArg::Hybrid if beta == 1.0 => (Kernel::Local, "local"),
        KernelArg::Hybrid if beta == 0.0 => (Kernel::Global, "global"),
        KernelArg::Hybrid => (Kernel::Hybrid, "hybrid"),
        KernelArg::Gibbs => (Kernel::Gibbs, "gibbs"),
        KernelArg::Order => (Kernel::Order, "order"),
    }
}

pub fn sampler_config(
    a: &ChainArgs,
    seed: u64,
    kernel: Kernel,
    target: GlobalPrior,
    rho_target: &ModularPrior,
) -> Result<SamplerConfig> {
    if a.chains == 0 {
        return Err(CliError::usage("--chains must be at least 1"));
    }
    // the order sampler's modular prior is the target's family weights
    let proposal_prior = if kernel == Kernel::Order {
        rho_target.clone()
    } else {
        rho(a.proposal_prior)
    };
    Ok(SamplerConfig {
        beta: a.beta,
        trunc_c: a.trunc_c,
        steps: a.steps,
        burn_in: a.burn_in,
        thin: a.thin,
        seed,
        target_prior: target,
        proposal_prior,
        max_global_retries: a.max_retries,
        order_weighting: match a.order_weighting {
            Weighting::Sampled => OrderWeighting::Sampled,
            Weighting::Exact => OrderWeighting::Exact,
            Weighting::None => OrderWeighting::None,
        },
        dags_per_order: a.dags_per_order,
        initial: None,
        random_start: a.random_start,
        checkpoint_every: a.checkpoint_every,
    })
}

pub fn threads(requested: Option<usize>) -> usize {
    requested
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

pub fn parse_dag(s: &str, d: Option<usize>) -> Result<Dag> {
    let g: Dag = s.trim().parse()?;
    if let Some(d) = d {
        if g.d() != d {
            return Err(CliError::usage(format!("graph has {} nodes, expected {d}", g.d())));
        }
    }
    Ok(g)
}

pub fn read_sample_file(path: &Path) -> Result<Vec<Sample>> {
    Ok(read_samples(BufReader::new(open(path)?))?)
}

/// Reads a matrix written as CSV or, for `.json` files, nested arrays.
pub fn read_matrix(path: &Path) -> Result<SquareMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Lib(bnstruct::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    if path.extension().is_some_and(|e| e == "json") {
        let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(bnstruct::Error::from)?;
        Ok(SquareMatrix::from_rows(&rows)?)
    } else {
        Ok(SquareMatrix::from_csv(&text)?)
    }
}

/// Maps `f` over `items` on up to `threads` scoped threads, keeping order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().enumerate().map(|(k, x)| f(k, x)).collect();
    }
    let size = items.len().div_ceil(threads);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (c, (chunk, out)) in items.chunks(size).zip(slots.chunks_mut(size)).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (off, (x, slot)) in chunk.iter().zip(out.iter_mut()).enumerate() {
                    *slot = Some(f(c * size + off, x));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every slot is filled")).collect()
}

#[derive(Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
        };
        Summary {
            n,
            mean,
            std,
            median,
            values,
        }
    }
}
