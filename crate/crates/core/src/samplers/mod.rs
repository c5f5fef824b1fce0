//! MCMC over DAG structures: local, global and hybrid Metropolis–Hastings,
//! Gibbs on the adjacency matrix, and an order sampler.
//!
//! Every chain draws from `ChaCha8Rng::seed_from_u64(seed)` with its stream
//! set to the chain index, so runs are reproducible on any platform and
//! independent of how chains are scheduled across threads.

mod global;
mod kernels;
mod order;

use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use global::GlobalProposal;
pub use kernels::{
    gibbs_step, global_step, hybrid_step, local_step, ChainState, KernelUsed, StepOutcome,
};
pub use order::{order_weights, OrderState, OrderWeighting};

use crate::error::{Error, Result};
use crate::exact::LocalSums;
use crate::graph::{Dag, Order};
use crate::priors::{GlobalPrior, ModularPrior};
use crate::scoring::FamilyScoreTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    Local,
    Global,
    Hybrid,
    Gibbs,
    Order,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Local => "local",
            Kernel::Global => "global",
            Kernel::Hybrid => "hybrid",
            Kernel::Gibbs => "gibbs",
            Kernel::Order => "order",
        }
    }

    pub fn needs_proposal(self) -> bool {
        matches!(self, Kernel::Global | Kernel::Hybrid)
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "local" => Kernel::Local,
            "global" => Kernel::Global,
            "hybrid" => Kernel::Hybrid,
            "gibbs" => Kernel::Gibbs,
            "order" => Kernel::Order,
            _ => return Err(Error::input(format!("unknown kernel {s:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// Probability of the local kernel in the hybrid sampler.
    pub beta: f64,
    /// Truncation constant `C` of the global proposal.
    pub trunc_c: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub target_prior: GlobalPrior,
    /// Modular prior used to build the global proposal and by the order sampler.
    pub proposal_prior: ModularPrior,
    pub max_global_retries: usize,
    pub order_weighting: OrderWeighting,
    /// DAGs drawn per kept order.
    pub dags_per_order: usize,
    /// Starting graph; the empty graph when `None`.
    pub initial: Option<Dag>,
    /// Start each chain from a random graph (or order) drawn from its own
    /// stream when `initial` is unset.
    pub random_start: bool,
    /// Steps between wall-clock checkpoints.
    pub checkpoint_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            beta: 0.1,
            trunc_c: 1e-4,
            steps: 10_000,
            burn_in: 0,
            thin: 1,
            seed: 0,
            target_prior: GlobalPrior::UniformDag,
            proposal_prior: ModularPrior::flat(),
            max_global_retries: 1000,
            order_weighting: OrderWeighting::Sampled,
            dags_per_order: 1,
            initial: None,
            random_start: false,
            checkpoint_every: 1000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::input(format!("beta {} outside [0, 1]", self.beta)));
        }
        if !(self.trunc_c > 0.0 && self.trunc_c < 0.5) {
            return Err(Error::input(format!(
                "truncation constant {} outside (0, 0.5)",
                self.trunc_c
            )));
        }
        if self.thin == 0 {
            return Err(Error::input("thin must be at least 1"));
        }
        if self.dags_per_order == 0 {
            return Err(Error::input("dags_per_order must be at least 1"));
        }
        if let Some(g) = &self.initial {
            if g.d() != d {
                return Err(Error::input(format!(
                    "initial graph has {} nodes, data has {d}",
                    g.d()
                )));
            }
        }
        Ok(())
    }

    /// Whether the state after `step` transitions is recorded.
    pub fn records(&self, step: usize) -> bool {
        step >= self.burn_in && (step - self.burn_in) % self.thin == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub dag: Dag,
    pub weight: f64,
    pub log_target: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct KernelStats {
    pub local_proposed: u64,
    pub local_accepted: u64,
    pub global_proposed: u64,
    pub global_accepted: u64,
    pub global_retries_exhausted: u64,
    pub gibbs_sweeps: u64,
    pub gibbs_changed: u64,
    pub order_proposed: u64,
    pub order_accepted: u64,
}

impl KernelStats {
    fn record(&mut self, out: StepOutcome) {
        let acc = out.accepted as u64;
        match out.kernel {
            KernelUsed::Local => {
                self.local_proposed += 1;
                self.local_accepted += acc;
            }
            KernelUsed::Global => {
                self.global_proposed += 1;
                self.global_accepted += acc;
                self.global_retries_exhausted += out.retries_exhausted as u64;
            }
            KernelUsed::Gibbs => {
                self.gibbs_sweeps += 1;
                self.gibbs_changed += acc;
            }
        }
    }

    fn rate(a: u64, p: u64) -> Option<f64> {
        (p > 0).then(|| a as f64 / p as f64)
    }

    pub fn local_rate(&self) -> Option<f64> {
        Self::rate(self.local_accepted, self.local_proposed)
    }

    pub fn global_rate(&self) -> Option<f64> {
        Self::rate(self.global_accepted, self.global_proposed)
    }

    pub fn order_rate(&self) -> Option<f64> {
        Self::rate(self.order_accepted, self.order_proposed)
    }
}

/// Output of one chain.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub d: usize,
    pub kernel: Kernel,
    pub chain: u64,
    pub samples: Vec<Sample>,
    pub stats: KernelStats,
    /// `(step, seconds since start)` checkpoints.
    pub checkpoints: Vec<(usize, f64)>,
}

impl SampleSet {
    pub fn dags(&self) -> impl Iterator<Item = &Dag> {
        self.samples.iter().map(|s| &s.dag)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.weight).collect()
    }

    /// Seconds elapsed at `step`, interpolated between checkpoints.
    pub fn seconds_at(&self, step: usize) -> f64 {
        let cps = &self.checkpoints;
        match cps.iter().position(|&(s, _)| s >= step) {
            None => cps.last().map_or(0.0, |c| c.1),
            Some(0) => cps[0].1,
            Some(k) => {
                let (s0, t0) = cps[k - 1];
                let (s1, t1) = cps[k];
                t0 + (t1 - t0) * (step - s0) as f64 / (s1 - s0) as f64
            }
        }
    }

    /// Writes `step,weight,log_target,graph` lines under a header.
    pub fn write_samples<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::input(e.to_string());
        writeln!(w, "step,weight,log_target,graph").map_err(io)?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.step, s.weight, s.log_target, s.dag.encode()).map_err(io)?;
        }
        Ok(())
    }

    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kernel": self.kernel.name(),
            "chain": self.chain,
            "num_samples": self.samples.len(),
            "stats": self.stats,
            "acceptance": {
                "local": self.stats.local_rate(),
                "global": self.stats.global_rate(),
                "order": self.stats.order_rate(),
            },
        })
    }

    /// Wall-clock checkpoints, kept apart from the deterministic outputs.
    pub fn timing_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kernel": self.kernel.name(),
            "chain": self.chain,
            "checkpoints": self.checkpoints,
        })
    }
}

/// Reads a sample file written by [`SampleSet::write_samples`].
pub fn read_samples<R: BufRead>(r: R) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::input(e.to_string()))?;
        if k == 0 && line.starts_with("step") || line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::input(format!("sample line {}: {what}", k + 1));
        let mut parts = line.splitn(4, ',');
        let step = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("step"))?;
        let weight: f64 = parts.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("weight"))?;
        let log_target = parts
            .next()
            .and_then(|x| x.parse().ok())
            .ok_or_else(|| bad("log_target"))?;
        let dag: Dag = parts.next().ok_or_else(|| bad("graph"))?.parse()?;
        out.push(Sample {
            step,
            dag,
            weight,
            log_target,
        });
    }
    Ok(out)
}

pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Seed for stream `stream` of a run seeded with `seed`, for splitting one
/// global seed into per-fold or per-task seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    chain_rng(seed, stream).random()
}

/// Runs one chain. `gp` is required for the global and hybrid kernels.
pub fn run_chain(
    cfg: &SamplerConfig,
    kernel: Kernel,
    t: &FamilyScoreTable,
    gp: Option<&GlobalProposal>,
    chain: u64,
) -> Result<SampleSet> {
    let d = t.d();
    cfg.validate(d)?;
    if kernel.needs_proposal() {
        match gp {
            None => {
                return Err(Error::input(format!(
                    "{} kernel needs a global proposal",
                    kernel.name()
                )))
            }
            Some(g) if g.d() != d => {
                return Err(Error::input("global proposal size does not match the data"))
            }
            _ => {}
        }
    }
    let mut rng = chain_rng(cfg.seed, chain);
    if kernel == Kernel::Order {
        return order_chain(cfg, t, chain, &mut rng);
    }
    let start = match &cfg.initial {
        Some(g) => g.clone(),
        None if cfg.random_start => random_start(d, t.max_indegree(), &mut rng),
        None => Dag::empty(d),
    };
    let mut state = ChainState::new(start, t, &cfg.target_prior)?;
    let clock = Instant::now();
    let mut set = SampleSet {
        d,
        kernel,
        chain,
        samples: Vec::new(),
        stats: KernelStats::default(),
        checkpoints: vec![(0, 0.0)],
    };
    let every = cfg.checkpoint_every.max(1);
    let prior = &cfg.target_prior;
    for step in 0..=cfg.steps {
        if step > 0 {
            let out = match kernel {
                Kernel::Local => local_step(&mut state, t, prior, &mut rng)?,
                Kernel::Global => global_step(
                    &mut state,
                    gp.expect("checked above"),
                    t,
                    prior,
                    cfg.max_global_retries,
                    &mut rng,
                )?,
                Kernel::Hybrid => hybrid_step(
                    &mut state,
                    cfg.beta,
                    gp.expect("checked above"),
                    t,
                    prior,
                    cfg.max_global_retries,
                    &mut rng,
                )?,
                Kernel::Gibbs => gibbs_step(&mut state, t, prior, &mut rng)?,
                Kernel::Order => unreachable!(),
            };
            set.stats.record(out);
            if step % every == 0 || step == cfg.steps {
                set.checkpoints.push((step, clock.elapsed().as_secs_f64()));
            }
        }
        if cfg.records(step) {
            set.samples.push(Sample {
                step,
                dag: state.dag.clone(),
                weight: 1.0,
                log_target: state.log_target(),
            });
        }
    }
    Ok(set)
}

/// Metropolis–Hastings over orders with DAGs drawn from each kept order.
/// Sample weights follow `cfg.order_weighting`; `log_target` is the DAG's
/// log score plus its modular log prior.
fn order_chain(
    cfg: &SamplerConfig,
    t: &FamilyScoreTable,
    chain: u64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleSet> {
    let d = t.d();
    let local = LocalSums::new(t, &cfg.proposal_prior)?;
    let start = if cfg.random_start {
        Order::random(d, rng)
    } else {
        Order::identity(d)
    };
    let mut state = OrderState::new(start, &local);
    let clock = Instant::now();
    let mut stats = KernelStats::default();
    let mut checkpoints = vec![(0, 0.0)];
    let mut kept = Vec::new();
    let mut samples = Vec::new();
    let every = cfg.checkpoint_every.max(1);
    for step in 0..=cfg.steps {
        if step > 0 {
            stats.order_proposed += 1;
            stats.order_accepted += state.step(&local, rng) as u64;
            if step % every == 0 || step == cfg.steps {
                checkpoints.push((step, clock.elapsed().as_secs_f64()));
            }
        }
        if cfg.records(step) {
            kept.push(state.order.clone());
            for _ in 0..cfg.dags_per_order {
                let dag = state.draw_dag(&local, rng);
                let log_target =
                    t.log_marglik_or_neg_inf(&dag) + cfg.proposal_prior.log_modular(&dag);
                samples.push(Sample {
                    step,
                    dag,
                    weight: 1.0,
                    log_target,
                });
            }
        }
    }
    let dags: Vec<Dag> = samples.iter().map(|s| s.dag.clone()).collect();
    for (s, w) in samples
        .iter_mut()
        .zip(order_weights(&dags, &kept, cfg.order_weighting)?)
    {
        s.weight = w;
    }
    Ok(SampleSet {
        d,
        kernel: Kernel::Order,
        chain,
        samples,
        stats,
        checkpoints,
    })
}

/// Runs chains `0..n_chains` on up to `threads` worker threads. Results are
/// ordered by chain index and do not depend on `threads`.
pub fn run_chains(
    cfg: &SamplerConfig,
    kernel: Kernel,
    t: &FamilyScoreTable,
    gp: Option<&GlobalProposal>,
    n_chains: usize,
    threads: usize,
) -> Result<Vec<SampleSet>> {
    let threads = threads.clamp(1, n_chains.max(1));
    if threads == 1 {
        return (0..n_chains as u64)
            .map(|c| run_chain(cfg, kernel, t, gp, c))
            .collect();
    }
    let mut slots: Vec<Option<Result<SampleSet>>> = (0..n_chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = slots
            .chunks_mut(n_chains.div_ceil(threads))
            .enumerate()
            .collect();
        let size = n_chains.div_ceil(threads);
        for (k, chunk) in chunks {
            scope.spawn(move || {
                for (off, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(run_chain(cfg, kernel, t, gp, (k * size + off) as u64));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every chain slot is filled"))
        .collect()
}

/// Random starting graph for a chain, for runs that vary initial conditions.
pub fn random_start<R: Rng + ?Sized>(d: usize, max_indegree: usize, rng: &mut R) -> Dag {
    let p = if d > 1 { 1.0 / (d - 1) as f64 } else { 0.0 };
    Dag::random(d, p, max_indegree, rng)
}
