//! Experiment orchestration: bounded-parallel episode execution with
//! streaming result persistence, deterministic aggregation, and report
//! writing.
//!
//! Results are appended to disk as episodes complete, so an interrupted run
//! resumes by id-set difference. Aggregation sorts by episode id and is
//! therefore independent of completion order; reports never contain
//! latencies or timestamps, so runs with deterministic backends are
//! byte-identical regardless of the concurrency level.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::backend::{build_agent, BackendConfig, BackendError, BackendKind};
use crate::dataset::{build_episode, DatasetError, EpisodeSpec};
use crate::jsonl::{self, JsonlError};
use crate::model::{Episode, EpisodeResult, ModelError, Perturbation, QaInstance};
use crate::perturb::{apply_all_wrong, apply_flip, PerturbError};
use crate::prompt::{run_method, CallRecord, MethodSpec, PromptError};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("invalid run config: {0}")]
    ConfigInvalid(String),
    #[error("no results to summarize")]
    EmptyResults,
    #[error(transparent)]
    Io(#[from] JsonlError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One experiment: an episodes file, a method, a test-time perturbation, a
/// backend, and execution knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub episodes_path: PathBuf,
    pub method: MethodSpec,
    pub perturbation: Perturbation,
    pub backend: BackendConfig,
    #[serde(default = "default_concurrency")]
    pub concurrency_limit: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn default_concurrency() -> usize {
    4
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.concurrency_limit == 0 {
            return Err(RunnerError::ConfigInvalid("concurrency_limit must be >= 1".into()));
        }
        self.method
            .validate()
            .map_err(|e| RunnerError::ConfigInvalid(e.to_string()))?;
        self.backend
            .validate()
            .map_err(|e| RunnerError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }
}

/// Aggregate metrics over a result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_scored: usize,
    pub n_errored: usize,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prr_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_given_prr1: Option<ConditionalAccuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_given_prr0: Option<ConditionalAccuracy>,
}

/// Accuracy restricted to a recognition outcome, with its denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalAccuracy {
    pub fraction: f64,
    pub count: usize,
}

impl Summary {
    /// Accuracy change against a paired baseline run.
    pub fn delta_vs(&self, baseline: &Summary) -> f64 {
        self.accuracy - baseline.accuracy
    }
}

/// Computes accuracy, mean recognition reward, and the recognition-
/// conditioned accuracy split. Errored episodes are excluded from every
/// denominator and reported separately.
pub fn summarize(results: &[EpisodeResult]) -> Result<Summary, RunnerError> {
    if results.is_empty() {
        return Err(RunnerError::EmptyResults);
    }
    let scored: Vec<&EpisodeResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let n_scored = scored.len();
    let n_errored = results.len() - n_scored;
    let accuracy = if n_scored > 0 {
        scored.iter().map(|r| r.outcome_reward as f64).sum::<f64>() / n_scored as f64
    } else {
        0.0
    };
    let with_prr: Vec<&&EpisodeResult> = scored.iter().filter(|r| r.prr.is_some()).collect();
    let (prr_mean, acc1, acc0) = if with_prr.is_empty() {
        (None, None, None)
    } else {
        let mean = with_prr.iter().map(|r| r.prr.unwrap_or(0.0)).sum::<f64>()
            / with_prr.len() as f64;
        let conditional = |want: f64| {
            let subset: Vec<&&&EpisodeResult> = with_prr
                .iter()
                .filter(|r| r.prr.unwrap_or(0.0) == want)
                .collect();
            if subset.is_empty() {
                None
            } else {
                Some(ConditionalAccuracy {
                    fraction: subset.iter().map(|r| r.outcome_reward as f64).sum::<f64>()
                        / subset.len() as f64,
                    count: subset.len(),
                })
            }
        };
        (Some(mean), conditional(1.0), conditional(0.0))
    };
    Ok(Summary {
        n_scored,
        n_errored,
        accuracy,
        prr_mean,
        accuracy_given_prr1: acc1,
        accuracy_given_prr0: acc0,
    })
}

/// Config echo embedded in reports. Execution-only knobs (concurrency,
/// absolute paths) are excluded so reports stay byte-identical across
/// scheduling choices and working directories; the manifest keeps the full
/// config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    /// File name of the episodes input.
    pub episodes_file: String,
    pub method: MethodSpec,
    pub perturbation: Perturbation,
    pub backend_kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub seed: u64,
    pub setting: String,
    pub variant: String,
}

/// The aggregated outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub summary: Summary,
    /// Accuracy delta against a paired baseline, when one was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_delta: Option<f64>,
    pub results_path: String,
    pub calls_path: String,
    pub config: ConfigEcho,
}

/// Result-file record: the episode result plus the prompt fingerprints of
/// every call made for it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    #[serde(flatten)]
    pub result: EpisodeResult,
    #[serde(default)]
    pub prompt_sha256: Vec<String>,
}

/// Run manifest persisted alongside the reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub episodes: usize,
    pub resumed: usize,
    pub errored: usize,
}

pub fn version_string() -> String {
    match option_env!("GIT_DESCRIBE") {
        Some(v) => v.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

fn perturb_episode(episode: &Episode, perturbation: Perturbation) -> Result<Episode, RunnerError> {
    Ok(match perturbation {
        Perturbation::None => episode.clone(),
        Perturbation::Flip => apply_flip(episode)?,
        Perturbation::AllWrong => apply_all_wrong(episode)?,
    })
}

struct StreamWriter {
    results: std::fs::File,
    calls: std::fs::File,
}

impl StreamWriter {
    fn open(results_path: &Path, calls_path: &Path) -> Result<Self, RunnerError> {
        let open = |p: &Path| {
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|e| JsonlError::Io { path: p.display().to_string(), source: e })
        };
        Ok(Self { results: open(results_path)?, calls: open(calls_path)? })
    }

    fn append(
        &mut self,
        record: &ResultRecord,
        calls: &[CallRecord],
    ) -> Result<(), RunnerError> {
        let mut line = jsonl::to_line(record)?;
        line.push('\n');
        self.results
            .write_all(line.as_bytes())
            .map_err(|e| JsonlError::Io { path: "results.jsonl".into(), source: e })?;
        self.results
            .flush()
            .map_err(|e| JsonlError::Io { path: "results.jsonl".into(), source: e })?;
        for call in calls {
            let mut line = jsonl::to_line(call)?;
            line.push('\n');
            self.calls
                .write_all(line.as_bytes())
                .map_err(|e| JsonlError::Io { path: "calls.jsonl".into(), source: e })?;
        }
        self.calls
            .flush()
            .map_err(|e| JsonlError::Io { path: "calls.jsonl".into(), source: e })?;
        Ok(())
    }
}

/// Executes every episode of the configured file under the concurrency
/// limit, streaming results to `output_dir/results.jsonl` as they complete,
/// then aggregates a deterministic report.
///
/// Per-episode failures are recorded in their results and never abort the
/// run; an invalid config aborts before any call.
pub async fn run_experiment(cfg: &RunConfig) -> Result<RunReport, RunnerError> {
    cfg.validate()?;
    let episodes: Vec<Episode> = jsonl::read_jsonl(&cfg.episodes_path)?;
    if episodes.is_empty() {
        return Err(RunnerError::ConfigInvalid(format!(
            "no episodes in {}",
            cfg.episodes_path.display()
        )));
    }
    for episode in &episodes {
        episode.validate()?;
    }
    let setting = episodes[0].setting.to_string();
    let variant = episodes[0].variant.to_string();

    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| JsonlError::Io { path: cfg.output_dir.display().to_string(), source: e })?;
    let results_path = cfg.output_dir.join("results.jsonl");
    let calls_path = cfg.output_dir.join("calls.jsonl");

    // Resume: skip episodes that already have a persisted result.
    let mut done: BTreeSet<String> = BTreeSet::new();
    if results_path.exists() {
        let existing: Vec<ResultRecord> = jsonl::read_jsonl(&results_path)?;
        done.extend(existing.into_iter().map(|r| r.result.episode_id));
    }
    let resumed = done.len();
    // Perturb upfront: an unperturbable episodes file is a config mistake
    // and must abort before any backend call.
    let pending: Vec<Episode> = episodes
        .into_iter()
        .filter(|e| !done.contains(e.id()))
        .map(|e| perturb_episode(&e, cfg.perturbation))
        .collect::<Result<_, _>>()?;

    let agent = build_agent(&cfg.backend, cfg.seed)?;
    let method = Arc::new(cfg.method.clone());
    let mut writer = StreamWriter::open(&results_path, &calls_path)?;

    let mut tasks = stream::iter(pending.into_iter().map(|episode| {
        let agent = Arc::clone(&agent);
        let method = Arc::clone(&method);
        async move {
            let (result, calls) = run_method(&method, &episode, agent.as_ref()).await?;
            Ok::<(EpisodeResult, Vec<CallRecord>), RunnerError>((result, calls))
        }
    }))
    .buffer_unordered(cfg.concurrency_limit);

    while let Some(outcome) = tasks.next().await {
        let (result, calls) = outcome?;
        let record = ResultRecord {
            prompt_sha256: calls.iter().map(|c| c.prompt_sha256.clone()).collect(),
            result,
        };
        writer.append(&record, &calls)?;
    }
    drop(tasks);

    let mut records: Vec<ResultRecord> = jsonl::read_jsonl(&results_path)?;
    records.sort_by(|a, b| a.result.episode_id.cmp(&b.result.episode_id));
    let results: Vec<EpisodeResult> = records.iter().map(|r| r.result.clone()).collect();
    let summary = summarize(&results)?;

    let report = RunReport {
        accuracy_delta: None,
        results_path: "results.jsonl".into(),
        calls_path: "calls.jsonl".into(),
        config: ConfigEcho {
            episodes_file: cfg
                .episodes_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            method: cfg.method.clone(),
            perturbation: cfg.perturbation,
            backend_kind: cfg.backend.kind,
            model_id: cfg.backend.model_id.clone(),
            seed: cfg.seed,
            setting,
            variant,
        },
        summary: summary.clone(),
    };

    let manifest = RunManifest {
        version: version_string(),
        config: cfg.clone(),
        episodes: results.len(),
        resumed,
        errored: summary.n_errored,
    };
    jsonl::atomic_write(
        &cfg.output_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)
            .map_err(JsonlError::Encode)?
            .as_bytes(),
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

fn fmt_frac(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_frac).unwrap_or_else(|| "--".into())
}

fn fmt_cond(v: &Option<ConditionalAccuracy>) -> String {
    match v {
        Some(c) => format!("{} ({})", fmt_frac(c.fraction), c.count),
        None => "--".into(),
    }
}

/// Renders the single-run markdown report.
pub fn report_markdown(report: &RunReport) -> String {
    let s = &report.summary;
    let mut out = String::new();
    out.push_str("# Run report\n\n");
    out.push_str(&format!(
        "- episodes: `{}`\n- backend: {:?}{}\n- seed: {}\n\n",
        report.config.episodes_file,
        report.config.backend_kind,
        report
            .config
            .model_id
            .as_deref()
            .map(|m| format!(" ({m})"))
            .unwrap_or_default(),
        report.config.seed,
    ));
    out.push_str(
        "| method | variant | setting | perturbation | n | errors | accuracy | prr | acc (prr=1) | acc (prr=0) | delta |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    out.push_str(&format!(
        "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
        report.config.method.method,
        report.config.variant,
        report.config.setting,
        report.config.perturbation,
        s.n_scored,
        s.n_errored,
        fmt_frac(s.accuracy),
        fmt_opt(s.prr_mean),
        fmt_cond(&s.accuracy_given_prr1),
        fmt_cond(&s.accuracy_given_prr0),
        fmt_opt(report.accuracy_delta),
    ));
    out
}

fn report_csv(report: &RunReport) -> String {
    let s = &report.summary;
    let mut out = String::from(
        "method,variant,setting,perturbation,n,errors,accuracy,prr_mean,acc_prr1,n_prr1,acc_prr0,n_prr0,delta\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.config.method.method,
        report.config.variant,
        report.config.setting,
        report.config.perturbation,
        s.n_scored,
        s.n_errored,
        fmt_frac(s.accuracy),
        fmt_opt(s.prr_mean),
        s.accuracy_given_prr1.as_ref().map(|c| fmt_frac(c.fraction)).unwrap_or_else(|| "--".into()),
        s.accuracy_given_prr1.as_ref().map(|c| c.count.to_string()).unwrap_or_else(|| "0".into()),
        s.accuracy_given_prr0.as_ref().map(|c| fmt_frac(c.fraction)).unwrap_or_else(|| "--".into()),
        s.accuracy_given_prr0.as_ref().map(|c| c.count.to_string()).unwrap_or_else(|| "0".into()),
        fmt_opt(report.accuracy_delta),
    ));
    out
}

/// Writes the report in the requested formats (report.md / report.csv /
/// report.json), atomically. Returns the written paths; an empty format set
/// writes nothing and warns.
pub fn write_report(
    report: &RunReport,
    formats: &[ReportFormat],
    output_dir: &Path,
) -> Result<Vec<PathBuf>, RunnerError> {
    if formats.is_empty() {
        warn!("no report formats requested; nothing written");
        return Ok(Vec::new());
    }
    let mut written = Vec::new();
    for format in formats {
        let (name, bytes) = match format {
            ReportFormat::Markdown => ("report.md", report_markdown(report).into_bytes()),
            ReportFormat::Csv => ("report.csv", report_csv(report).into_bytes()),
            ReportFormat::Json => (
                "report.json",
                serde_json::to_string_pretty(report)
                    .map_err(JsonlError::Encode)?
                    .into_bytes(),
            ),
        };
        let path = output_dir.join(name);
        jsonl::atomic_write(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Merges several run reports into one method-per-column table: SA first,
/// then AG / ECL (I) / ECL (E) within each context variant. Rows are
/// (setting, perturbation) groups.
pub fn combined_report_markdown(reports: &[RunReport]) -> String {
    use crate::model::Method;
    let mut rows: Vec<(String, String)> = reports
        .iter()
        .map(|r| (r.config.setting.clone(), r.config.perturbation.to_string()))
        .collect();
    rows.sort();
    rows.dedup();

    let columns: [(&str, Option<&str>, Method); 7] = [
        ("SA", None, Method::Sa),
        ("AG (outcome)", Some("ma_outcome"), Method::Ag),
        ("ECL (I) (outcome)", Some("ma_outcome"), Method::EclI),
        ("ECL (E) (outcome)", Some("ma_outcome"), Method::EclE),
        ("AG (reasoning)", Some("ma_reasoning"), Method::Ag),
        ("ECL (I) (reasoning)", Some("ma_reasoning"), Method::EclI),
        ("ECL (E) (reasoning)", Some("ma_reasoning"), Method::EclE),
    ];

    let mut out = String::from("# Combined report\n\n");
    out.push_str("| setting | perturbation |");
    for (label, _, _) in &columns {
        out.push_str(&format!(" {label} |"));
    }
    out.push('\n');
    out.push_str("|---|---|");
    for _ in &columns {
        out.push_str("---|");
    }
    out.push('\n');
    for (setting, perturbation) in &rows {
        out.push_str(&format!("| {setting} | {perturbation} |"));
        for (_, variant, method) in &columns {
            let cell = reports
                .iter()
                .find(|r| {
                    r.config.setting == *setting
                        && r.config.perturbation.to_string() == *perturbation
                        && r.config.method.method == *method
                        && variant.is_none_or(|v| r.config.variant == v)
                })
                .map(|r| {
                    let acc = fmt_frac(r.summary.accuracy);
                    match r.accuracy_delta {
                        Some(d) => format!("{acc} ({d:+.4})"),
                        None => acc,
                    }
                })
                .unwrap_or_else(|| "--".into());
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

/// One cell of a peers-by-history sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub num_peers: usize,
    pub history_length: usize,
    pub n: usize,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prr_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
}

/// Sweep driver over peer-count and history-length grids: builds episodes
/// and runs the experiment for every cell under `output_dir/p{P}_t{T}/`.
#[allow(clippy::too_many_arguments)]
pub async fn run_sweep(
    instances: &[QaInstance],
    history_pool: &[QaInstance],
    peers: &[usize],
    history_lengths: &[usize],
    base_spec: &EpisodeSpec,
    run_template: &RunConfig,
) -> Result<SweepReport, RunnerError> {
    let mut cells = Vec::new();
    for &num_peers in peers {
        for &history_length in history_lengths {
            let spec = EpisodeSpec {
                num_peers,
                history_length,
                ..base_spec.clone()
            };
            let episodes: Vec<Episode> = instances
                .iter()
                .map(|inst| build_episode(inst, history_pool, &spec))
                .collect::<Result<_, _>>()?;
            let cell_dir = run_template
                .output_dir
                .join(format!("p{num_peers}_t{history_length}"));
            std::fs::create_dir_all(&cell_dir)
                .map_err(|e| JsonlError::Io { path: cell_dir.display().to_string(), source: e })?;
            let episodes_path = cell_dir.join("episodes.jsonl");
            jsonl::write_jsonl(&episodes_path, &episodes)?;
            let cfg = RunConfig {
                episodes_path,
                output_dir: cell_dir,
                ..run_template.clone()
            };
            let report = run_experiment(&cfg).await?;
            write_report(&report, &[ReportFormat::Json, ReportFormat::Markdown], &cfg.output_dir)?;
            cells.push(SweepCell {
                num_peers,
                history_length,
                n: report.summary.n_scored,
                accuracy: report.summary.accuracy,
                prr_mean: report.summary.prr_mean,
            });
        }
    }
    Ok(SweepReport { cells })
}

/// Markdown grid for a sweep: one row per peer count, one column per history
/// length.
pub fn sweep_markdown(report: &SweepReport) -> String {
    let mut peers: Vec<usize> = report.cells.iter().map(|c| c.num_peers).collect();
    peers.sort_unstable();
    peers.dedup();
    let mut lengths: Vec<usize> = report.cells.iter().map(|c| c.history_length).collect();
    lengths.sort_unstable();
    lengths.dedup();

    let mut out = String::from("# Sweep report (accuracy, prr)\n\n| peers \\ history |");
    for t in &lengths {
        out.push_str(&format!(" T={t} |"));
    }
    out.push_str("\n|---|");
    for _ in &lengths {
        out.push_str("---|");
    }
    out.push('\n');
    for p in &peers {
        out.push_str(&format!("| P={p} |"));
        for t in &lengths {
            let cell = report
                .cells
                .iter()
                .find(|c| c.num_peers == *p && c.history_length == *t)
                .map(|c| {
                    format!(
                        "{}, {}",
                        fmt_frac(c.accuracy),
                        c.prr_mean.map(fmt_frac).unwrap_or_else(|| "--".into())
                    )
                })
                .unwrap_or_else(|| "--".into());
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EpisodeError, LatencyMs, Method, OptionLetter};

    fn result(id: &str, or: u8, prr: Option<f64>, errored: bool) -> EpisodeResult {
        EpisodeResult {
            episode_id: id.to_string(),
            method: Method::EclE,
            db_enabled: false,
            stage1: None,
            stage2_raw: String::new(),
            predicted: (!errored).then(|| OptionLetter::new('A').unwrap()),
            outcome_reward: or,
            prr,
            latency_ms: LatencyMs::default(),
            error: errored.then(|| EpisodeError::Backend { message: "x".into() }),
        }
    }

    #[test]
    fn summarize_conditional_split() {
        let results = vec![
            result("a", 1, Some(1.0), false),
            result("b", 1, Some(1.0), false),
            result("c", 1, Some(1.0), false),
            result("d", 0, Some(0.0), false),
        ];
        let s = summarize(&results).unwrap();
        assert_eq!(s.n_scored, 4);
        assert_eq!(s.accuracy, 0.75);
        assert_eq!(s.prr_mean, Some(0.75));
        let c1 = s.accuracy_given_prr1.unwrap();
        assert_eq!((c1.fraction, c1.count), (1.0, 3));
        let c0 = s.accuracy_given_prr0.unwrap();
        assert_eq!((c0.fraction, c0.count), (0.0, 1));
    }

    #[test]
    fn summarize_without_prr_omits_conditionals() {
        let results = vec![result("a", 1, None, false), result("b", 0, None, false)];
        let s = summarize(&results).unwrap();
        assert_eq!(s.accuracy, 0.5);
        assert!(s.prr_mean.is_none());
        assert!(s.accuracy_given_prr1.is_none());
        assert!(s.accuracy_given_prr0.is_none());
    }

    #[test]
    fn summarize_excludes_errored_from_denominator() {
        let results = vec![
            result("a", 1, Some(1.0), false),
            result("b", 0, None, true),
            result("c", 0, None, true),
        ];
        let s = summarize(&results).unwrap();
        assert_eq!(s.n_scored, 1);
        assert_eq!(s.n_errored, 2);
        assert_eq!(s.accuracy, 1.0);
    }

    #[test]
    fn summarize_empty_is_an_error() {
        assert!(matches!(summarize(&[]), Err(RunnerError::EmptyResults)));
    }

    #[test]
    fn delta_is_plain_subtraction() {
        let a = Summary {
            n_scored: 10,
            n_errored: 0,
            accuracy: 0.6,
            prr_mean: None,
            accuracy_given_prr1: None,
            accuracy_given_prr0: None,
        };
        let b = Summary { accuracy: 0.9, ..a.clone() };
        assert!((a.delta_vs(&b) + 0.3).abs() < 1e-12);
    }
}
