use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "bnstruct",
    version,
    about = "Exact and MCMC structure learning for discrete Bayesian networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a random network and sample data from it
    Gen(GenArgs),
    /// Build and save the family score table
    Score(ScoreArgs),
    /// Exact edge marginals, evidence, MAP graph and Chow-Liu tree
    Exact(ExactArgs),
    /// Run MCMC chains and write sample files
    Sample(SampleArgs),
    /// Feature posteriors from sample files
    Features(FeaturesArgs),
    /// SAD of running edge-marginal estimates against exact marginals
    Convergence(ConvergenceArgs),
    /// ROC/AUC of feature scores against a known graph
    StructureEval(StructureEvalArgs),
    /// Cross-validated test log-likelihood of plug-in and averaged models
    Predict(PredictArgs),
    /// Graph priors over all DAGs on a few nodes
    Priors(PriorsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Score(_) => "score",
            Command::Exact(_) => "exact",
            Command::Sample(_) => "sample",
            Command::Features(_) => "features",
            Command::Convergence(_) => "convergence",
            Command::StructureEval(_) => "structure-eval",
            Command::Predict(_) => "predict",
            Command::Priors(_) => "priors",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Gen(a) => &a.output,
            Command::Score(a) => &a.output,
            Command::Exact(a) => &a.output,
            Command::Sample(a) => &a.output,
            Command::Features(a) => &a.output,
            Command::Convergence(a) => &a.output,
            Command::StructureEval(a) => &a.output,
            Command::Predict(a) => &a.output,
            Command::Priors(a) => &a.output,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Serialize)]
pub struct OutputArgs {
    /// Output directory (created if missing)
    #[arg(short, long, default_value = ".")]
    pub out: PathBuf,
    /// Matrix format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for every random choice of the run
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct DataArgs {
    /// Data CSV of non-negative integer codes
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// 0/1 CSV marking intervened cells, same shape as the data
    #[arg(long, requires = "data")]
    pub interventions: Option<PathBuf>,
    /// The data file starts with a header row (detected when no cell of the first line is an integer)
    #[arg(long)]
    pub header: bool,
    /// Declared arities, comma separated
    #[arg(long, value_delimiter = ',')]
    pub arities: Option<Vec<usize>>,
}

#[derive(Args, Debug, Serialize)]
pub struct SourceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Precomputed score table (JSON) instead of data
    #[arg(long, conflicts_with = "data")]
    pub scores: Option<PathBuf>,
    /// Largest parent set scored [default: d-1 up to 14 nodes, else 5]
    #[arg(long)]
    pub max_indegree: Option<usize>,
    /// Memory budget of the score table in MiB
    #[arg(long, default_value_t = 1024)]
    pub budget_mib: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho {
    Flat,
    Koivisto,
}

#[derive(Args, Debug, Serialize)]
pub struct PriorArgs {
    /// Per-family prior weights
    #[arg(long, value_enum, default_value_t = Rho::Flat)]
    pub prior: Rho,
    /// Custom per-family log weights (JSON); overrides --prior
    #[arg(long)]
    pub prior_file: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Uniform over DAGs
    Uniform,
    /// Product of per-family weights
    Modular,
    /// Per-family weights times the number of consistent orders
    Induced,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Local,
    Global,
    Hybrid,
    Gibbs,
    Order,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Sampled,
    Exact,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureArg {
    Edge,
    Undirected,
    Path,
}

#[derive(Args, Debug, Serialize)]
pub struct ChainArgs {
    /// Probability of a local move in the hybrid kernel
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Truncation constant of the global proposal
    #[arg(long, default_value_t = 1e-4)]
    pub trunc_c: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Worker threads [default: available cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Target graph prior
    #[arg(long, value_enum, default_value_t = Target::Uniform)]
    pub target: Target,
    /// Per-family weights the global proposal is built from
    #[arg(long, value_enum, default_value_t = Rho::Flat)]
    pub proposal_prior: Rho,
    /// Redraws of a cyclic global proposal before the move is rejected
    #[arg(long, default_value_t = 1000)]
    pub max_retries: usize,
    /// Start each chain from a random graph
    #[arg(long)]
    pub random_start: bool,
    /// Weighting of order-sampler graphs
    #[arg(long, value_enum, default_value_t = Weighting::Sampled)]
    pub order_weighting: Weighting,
    #[arg(long, default_value_t = 1)]
    pub dags_per_order: usize,
    /// Steps between wall-clock checkpoints
    #[arg(long, default_value_t = 1000)]
    pub checkpoint_every: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Number of variables
    #[arg(long)]
    pub nodes: usize,
    /// Number of records
    #[arg(long)]
    pub records: usize,
    #[arg(long, default_value_t = 2)]
    pub arity_min: usize,
    #[arg(long, default_value_t = 4)]
    pub arity_max: usize,
    /// Dirichlet concentration of CPT rows; small values give strong dependencies
    #[arg(long, default_value_t = 0.5)]
    pub dirichlet: f64,
    /// Expected in-degree of the random graph
    #[arg(long, default_value_t = 1.5)]
    pub indegree: f64,
    #[arg(long)]
    pub max_indegree: Option<usize>,
    /// Intervention NODE:STATE:FIRST-LAST forcing NODE to STATE on records FIRST..LAST (exclusive)
    #[arg(long)]
    pub intervene: Vec<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub source: SourceArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Dynamic programming over orders (default)
    #[arg(long, conflicts_with = "brute_force")]
    pub dp: bool,
    /// Enumerate every DAG (at most 5 nodes)
    #[arg(long)]
    pub brute_force: bool,
    /// Graph prior for enumeration; the DP always uses the induced prior
    #[arg(long, value_enum, default_value_t = Target::Induced, requires = "brute_force")]
    pub target: Target,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, value_enum, default_value_t = KernelArg::Hybrid)]
    pub kernel: KernelArg,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Starting graph in `d;p0,p1,...` form
    #[arg(long, conflicts_with = "random_start")]
    pub initial: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Sample files; their samples are pooled
    #[arg(long, required = true, num_args = 1..)]
    pub samples: Vec<PathBuf>,
    /// Features to estimate [default: all]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub kind: Vec<FeatureArg>,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Kernels to run; hybrid with --beta 0 or 1 is reported as global or local
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [KernelArg::Local, KernelArg::Global, KernelArg::Hybrid])]
    pub kernels: Vec<KernelArg>,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Points per SAD curve
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Add a seconds column to the curves (not reproducible)
    #[arg(long)]
    pub wall_clock: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct StructureEvalArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Ground truth sidecar written by `gen`
    #[arg(long, conflicts_with = "truth_graph")]
    pub truth: Option<PathBuf>,
    /// Ground truth graph in `d;p0,p1,...` form
    #[arg(long)]
    pub truth_graph: Option<String>,
    /// Sample files, one per run; AUCs are averaged over runs
    #[arg(long, num_args = 1..)]
    pub samples: Vec<PathBuf>,
    /// Score matrices (e.g. exact edge marginals), one per run
    #[arg(long, num_args = 1..)]
    pub marginals: Vec<PathBuf>,
    /// Also score exact DP edge marginals of this data
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub max_indegree: Option<usize>,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Features to evaluate [default: all]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub kind: Vec<FeatureArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Empty graph with posterior-mean parameters
    Factored,
    /// Maximum-likelihood tree
    ChowLiu,
    /// MAP DAG under the modular prior
    Map,
    /// Exact model average over orders
    Dp,
    Local,
    Global,
    Hybrid,
    Gibbs,
    Order,
}

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub max_indegree: Option<usize>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::Factored, Method::ChowLiu, Method::Map, Method::Hybrid])]
    pub methods: Vec<Method>,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Points per log-likelihood curve of each sampler
    #[arg(long, default_value_t = 20)]
    pub points: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct PriorsArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// Number of nodes (at most 5)
    #[arg(long)]
    pub nodes: usize,
}
