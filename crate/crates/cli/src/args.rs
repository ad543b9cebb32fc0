//! Command-line configuration. Every flag is a field of the run record.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "dicert", version, about = "Certify device-independent randomness from Bell-test data", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Write a model behavior (and optionally a sampled trial log).
    Generate(GenerateArgs),
    /// Convert a trial log or behavior file into a validated behavior file.
    Ingest(IngestArgs),
    /// Refine an outer polytope with quantum Bell inequalities.
    Refine(RefineArgs),
    /// Certify smooth min-entropy for one or more numbers of rounds.
    Certify(CertifyArgs),
    /// Re-check a certificate file.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    TiltedChsh,
    MerminGhz,
    Hardy,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub generator: Generator,
    /// Tilt of the CHSH family.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Weight of white noise.
    #[arg(long, default_value_t = 0.0)]
    pub w: f64,
    /// SV bias used to report the MDL value of Hardy behaviors.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also sample this many rounds into `--log`.
    #[arg(long, requires = "log")]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioId {
    Bipartite,
    Tripartite,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// A `round,z,c` CSV trial log or a behavior file (`.json`).
    #[arg(long)]
    pub input: PathBuf,
    /// Scenario of a CSV trial log.
    #[arg(long, value_enum, default_value_t = ScenarioId::Bipartite)]
    pub scenario: ScenarioId,
    /// Project onto NS and mix with uniform noise at this weight.
    #[arg(long)]
    pub regularize: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Nearv,
    Maxgp,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    L1,
    Euclidean,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionArg {
    InverseDistance,
    Uniform,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZPolicyArg {
    Random,
    MaxPguess,
    Averaged,
    Fixed,
}

/// Behavior, polytope and output-map selection shared by refine and certify.
#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    #[arg(long)]
    pub behavior: PathBuf,
    /// `ns`, `ns-chsh` or a polytope file.
    #[arg(long, default_value = "ns")]
    pub polytope: String,
    /// Parties whose outputs form D, e.g. `0,1`; `all` for every party.
    #[arg(long, default_value = "all")]
    pub dmap: String,
    /// Input distribution for conditional behaviors, comma separated; uniform if absent.
    #[arg(long)]
    pub p_z: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct RefineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Vertices separated per NearV iteration.
    #[arg(long, default_value_t = 10)]
    pub nearest: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Level of the moment relaxation.
    #[arg(long, default_value_t = 2)]
    pub level: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::L1)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 1e-9)]
    pub min_weight: f64,
    #[arg(long, value_enum, default_value_t = SelectionArg::InverseDistance)]
    pub selection: SelectionArg,
    #[arg(long, value_enum, default_value_t = ZPolicyArg::Random)]
    pub z_policy: ZPolicyArg,
    /// Input for `--z-policy fixed`.
    #[arg(long, default_value_t = 0)]
    pub z_fixed: usize,
    #[arg(long, default_value_t = dicert::quantum::MEMBERSHIP_TOL)]
    pub membership_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Run record (JSON lines); defaults to `runs.jsonl` next to `--out`.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pe,
    Azuma,
    RaNs,
    Eat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SvConventionArg {
    Box,
    HalfDelta,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Method::Pe)]
    pub method: Method,
    /// Error bound, as a number or `2^-k`.
    #[arg(long, default_value = "2^-64")]
    pub epsilon: String,
    /// Rounds: a comma list such as `1e4,4e4`, or decades `1e4..1e12`.
    #[arg(long, default_value = "1e6")]
    pub n: String,
    /// Rate slack between expected and threshold witness.
    #[arg(long, default_value_t = 0.0)]
    pub delta_t: f64,
    #[arg(long, default_value_t = 41)]
    pub betas: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_max: f64,
    #[arg(long, default_value = "0.5,0.25,0.1")]
    pub kappa_fractions: String,
    /// Moment relaxation level of the Azuma estimator.
    #[arg(long, default_value_t = 2)]
    pub level: usize,
    /// Santha-Vazirani bias of the input source; enables amplification mode.
    #[arg(long)]
    pub sv_delta: Option<String>,
    #[arg(long, value_enum, default_value_t = SvConventionArg::Box)]
    pub sv_convention: SvConventionArg,
    #[arg(long, default_value_t = 200)]
    pub ra_grid: usize,
    /// Directory for certificates and `results.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Run record; defaults to `runs.jsonl` in `--out`.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub certificate: PathBuf,
    /// `ns`, `ns-chsh` or a polytope file; required for `pe` certificates.
    #[arg(long)]
    pub polytope: Option<String>,
}
