//! Argument structures for every subcommand.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecl_core::backend::{BackendConfig, BackendKind};
use ecl_core::dataset::SchemaKind;
use ecl_core::model::{Method, Perturbation, Setting, Variant};
use ecl_core::rewards::RlScheme;

#[derive(Parser)]
#[command(
    name = "ecl",
    version,
    about = "Evaluation harness for history-aware peer trust in LLM multi-agent systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Convert raw corpus records (JSONL) into standardized instances.
    Standardize(StandardizeArgs),
    /// Fill peer reasoning pools by querying rollout backends.
    Rollouts(RolloutsArgs),
    /// Split a standardized corpus into history pool, train, and test sets.
    Split(SplitArgs),
    /// Materialize evaluation episodes from instances plus a history pool.
    BuildEpisodes(BuildEpisodesArgs),
    /// Apply a test-time perturbation to an episodes file.
    Perturb(PerturbArgs),
    /// Render prompts without calling any backend.
    Render(RenderArgs),
    /// Run an experiment over an episodes file.
    Run(RunArgs),
    /// Export reward-annotated training records from a run directory.
    ExportRl(ExportRlArgs),
    /// Merge run reports into one method-per-column table.
    Report(ReportArgs),
    /// Sweep peer-count and history-length grids.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaArg {
    MmluPro,
    Gpqa,
}

impl From<SchemaArg> for SchemaKind {
    fn from(v: SchemaArg) -> Self {
        match v {
            SchemaArg::MmluPro => SchemaKind::MmluPro,
            SchemaArg::Gpqa => SchemaKind::Gpqa,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    Natural,
    Adversarial,
}

impl From<SettingArg> for Setting {
    fn from(v: SettingArg) -> Self {
        match v {
            SettingArg::Natural => Setting::Natural,
            SettingArg::Adversarial => Setting::Adversarial,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    MaOutcome,
    MaReasoning,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::MaOutcome => Variant::MaOutcome,
            VariantArg::MaReasoning => Variant::MaReasoning,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sa,
    Ag,
    OneStage,
    EclI,
    EclE,
}

impl From<MethodArg> for Method {
    fn from(v: MethodArg) -> Self {
        match v {
            MethodArg::Sa => Method::Sa,
            MethodArg::Ag => Method::Ag,
            MethodArg::OneStage => Method::OneStage,
            MethodArg::EclI => Method::EclI,
            MethodArg::EclE => Method::EclE,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbationArg {
    None,
    Flip,
    AllWrong,
}

impl From<PerturbationArg> for Perturbation {
    fn from(v: PerturbationArg) -> Self {
        match v {
            PerturbationArg::None => Perturbation::None,
            PerturbationArg::Flip => Perturbation::Flip,
            PerturbationArg::AllWrong => Perturbation::AllWrong,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Replay,
    Scripted,
    Http,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    EclE,
    EclI,
    OneStage,
}

impl SchemeArg {
    pub fn to_scheme(self, include_prr: bool) -> RlScheme {
        match self {
            SchemeArg::EclE => RlScheme::EclE,
            SchemeArg::EclI => RlScheme::EclI,
            SchemeArg::OneStage => RlScheme::OneStage { include_prr },
        }
    }
}

/// Backend flags shared by `rollouts`, `run`, and `sweep`. Every field is
/// optional so values can fall back to a `--config` file; flags win on
/// conflict.
#[derive(Args, Clone)]
pub struct BackendOpts {
    /// Backend kind.
    #[arg(long)]
    pub backend: Option<BackendArg>,
    /// Chat-completions endpoint base URL (http backend).
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model identifier (http backend).
    #[arg(long)]
    pub model: Option<String>,
    /// Env var holding the bearer token (http backend).
    #[arg(long)]
    pub auth_env: Option<String>,
    /// Answer accuracy of the scripted backend.
    #[arg(long)]
    pub scripted_accuracy: Option<f64>,
    #[arg(long)]
    pub timeout_s: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_concurrent: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    #[arg(long)]
    pub backoff_ms: Option<u64>,
    /// Chat-completions path (default /v1/chat/completions).
    #[arg(long)]
    pub chat_path: Option<String>,
}

impl BackendOpts {
    /// Overlays present flags onto a base config (from `--config` or kind
    /// defaults).
    pub fn overlay(&self, base: Option<BackendConfig>) -> anyhow::Result<BackendConfig> {
        let mut cfg = match (base, self.backend) {
            (Some(base), kind) => {
                let mut cfg = base;
                if let Some(kind) = kind {
                    cfg.kind = match kind {
                        BackendArg::Replay => BackendKind::Replay,
                        BackendArg::Scripted => BackendKind::Scripted,
                        BackendArg::Http => BackendKind::Http,
                    };
                }
                cfg
            }
            (None, Some(BackendArg::Replay)) => BackendConfig::replay(),
            (None, Some(BackendArg::Scripted)) => {
                BackendConfig::scripted(self.scripted_accuracy.unwrap_or(1.0))
            }
            (None, Some(BackendArg::Http)) => BackendConfig::http(
                self.endpoint.as_deref().unwrap_or_default(),
                self.model.as_deref().unwrap_or_default(),
            ),
            (None, None) => anyhow::bail!("--backend (or --config) is required"),
        };
        if let Some(v) = &self.endpoint {
            cfg.endpoint_url = Some(v.clone());
        }
        if let Some(v) = &self.model {
            cfg.model_id = Some(v.clone());
        }
        if let Some(v) = &self.auth_env {
            cfg.auth_env_var = Some(v.clone());
        }
        if let Some(v) = self.scripted_accuracy {
            cfg.scripted_accuracy = v;
        }
        if let Some(v) = self.timeout_s {
            cfg.timeout_s = v;
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = self.max_concurrent {
            cfg.max_concurrent_requests = v;
        }
        if let Some(v) = self.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = self.max_tokens {
            cfg.max_tokens = v;
        }
        if let Some(v) = self.backoff_ms {
            cfg.backoff_ms = v;
        }
        if let Some(v) = &self.chat_path {
            cfg.chat_path = Some(v.clone());
        }
        cfg.validate().map_err(|e| anyhow::anyhow!(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
pub struct StandardizeArgs {
    /// Raw corpus JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub schema: SchemaArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only the first N records.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Args)]
pub struct RolloutsArgs {
    /// Standardized instances JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub setting: SettingArg,
    /// Rationales per option (adversarial) or completions per model (natural).
    #[arg(long, default_value_t = 3)]
    pub counts: usize,
    #[command(flatten)]
    pub backend: BackendOpts,
    /// Natural setting: accuracy of the flag-built strong backend.
    #[arg(long, default_value_t = 1.0)]
    pub strong_accuracy: f64,
    /// Natural setting: accuracy of the flag-built weak backends.
    #[arg(long, default_value_t = 0.0)]
    pub weak_accuracy: f64,
    /// Natural setting: number of weak sources built from flags.
    #[arg(long, default_value_t = 3)]
    pub weak_sources: usize,
    /// Full rollout plan as JSON (strong/weak backend roster); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SplitArgs {
    /// Standardized instances JSONL.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of instances reserved for the history pool.
    #[arg(long)]
    pub history: usize,
    #[arg(long, default_value_t = 0.9)]
    pub train_fraction: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct BuildEpisodesArgs {
    /// Instances to build episodes for (e.g. the test split).
    #[arg(long)]
    pub instances: PathBuf,
    /// History-pool instances with filled reasoning pools.
    #[arg(long)]
    pub history_pool: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub peers: usize,
    #[arg(long, default_value_t = 5)]
    pub history_length: usize,
    #[arg(long)]
    pub setting: SettingArg,
    #[arg(long)]
    pub variant: VariantArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Build at most N episodes.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Args)]
pub struct PerturbArgs {
    #[arg(long)]
    pub mode: PerturbationArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub episodes: PathBuf,
    #[arg(long)]
    pub method: MethodArg,
    /// Pipeline stage to render (two-stage methods only accept 2 with
    /// --stage1-text).
    #[arg(long, default_value_t = 1)]
    pub stage: u8,
    /// Stage-1 output to embed when rendering stage 2.
    #[arg(long)]
    pub stage1_text: Option<String>,
    /// Emit prompts without calling any backend (required).
    #[arg(long)]
    pub dump: bool,
    /// Write one file per prompt here; prints to stdout when absent.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<MethodArg>,
    /// Enable decoupled belief (two-stage methods).
    #[arg(long)]
    pub db: bool,
    /// Also parse a trusted peer (and score recognition) outside ecl-e.
    #[arg(long)]
    pub parse_trusted: bool,
    #[arg(long)]
    pub perturb: Option<PerturbationArg>,
    #[command(flatten)]
    pub backend: BackendOpts,
    /// Concurrent episodes in flight.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Full run config as JSON; explicit flags win on conflict.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report formats to write (md, csv, json).
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("md"), String::from("csv"), String::from("json")])]
    pub formats: Vec<String>,
}

#[derive(Args)]
pub struct ExportRlArgs {
    /// Run directory containing results.jsonl and calls.jsonl.
    #[arg(long)]
    pub run_dir: PathBuf,
    #[arg(long)]
    pub scheme: SchemeArg,
    /// One-stage probe: also export the recognition component and the sum.
    #[arg(long)]
    pub include_prr: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Run directories (each containing report.json).
    #[arg(long, value_delimiter = ',', required = true)]
    pub runs: Vec<PathBuf>,
    /// Baseline run directory; deltas are reported against it.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub history_pool: PathBuf,
    /// Peer counts, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub peers: Vec<usize>,
    /// History lengths, e.g. 2,5,8.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5, 8])]
    pub history_lengths: Vec<usize>,
    #[arg(long)]
    pub setting: SettingArg,
    #[arg(long)]
    pub variant: VariantArg,
    #[arg(long)]
    pub method: MethodArg,
    #[arg(long)]
    pub db: bool,
    #[command(flatten)]
    pub backend: BackendOpts,
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Evaluate at most N instances per cell.
    #[arg(long)]
    pub limit: Option<usize>,
}
