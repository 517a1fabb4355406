//! Subcommand implementations.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use ecl_core::backend::{build_agent, Agent, BackendConfig};
use ecl_core::dataset::{
    build_episode, generate_rollouts, split_dataset, standardize, EpisodeManifest, EpisodeSpec,
    RolloutSource, SplitManifest, SplitSpec,
};
use ecl_core::jsonl;
use ecl_core::model::{Episode, Method, Perturbation, QaInstance};
use ecl_core::perturb::{apply_all_wrong, apply_flip};
use ecl_core::prompt::{render_prompt, CallRecord, MethodSpec, Stage};
use ecl_core::rewards::export_rl_records;
use ecl_core::runner::{
    combined_report_markdown, run_experiment, run_sweep, sweep_markdown, write_report,
    ReportFormat, ResultRecord, RunConfig, RunReport,
};

use crate::args::*;

pub async fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Standardize(args) => cmd_standardize(args),
        Command::Rollouts(args) => cmd_rollouts(args).await,
        Command::Split(args) => cmd_split(args),
        Command::BuildEpisodes(args) => cmd_build_episodes(args),
        Command::Perturb(args) => cmd_perturb(args),
        Command::Render(args) => cmd_render(args),
        Command::Run(args) => cmd_run(args).await,
        Command::ExportRl(args) => cmd_export_rl(args),
        Command::Report(args) => cmd_report(args),
        Command::Sweep(args) => cmd_sweep(args).await,
    }
}

fn cmd_standardize(args: StandardizeArgs) -> Result<()> {
    let raw: Vec<Value> = jsonl::read_jsonl(&args.input)?;
    let take = args.limit.unwrap_or(raw.len());
    let instances: Vec<QaInstance> = raw
        .iter()
        .take(take)
        .enumerate()
        .map(|(i, record)| {
            standardize(record, args.schema.into())
                .with_context(|| format!("record {} of {}", i + 1, args.input.display()))
        })
        .collect::<Result<_>>()?;
    jsonl::write_jsonl(&args.out, &instances)?;
    println!("standardized {} instances -> {}", instances.len(), args.out.display());
    Ok(())
}

#[derive(Deserialize)]
struct SourceSpec {
    label: String,
    backend: BackendConfig,
}

/// JSON escape hatch for `rollouts --config`: an adversarial debater backend
/// or a natural strong/weak roster.
#[derive(Deserialize)]
struct RolloutPlan {
    #[serde(default)]
    backend: Option<BackendConfig>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    strong: Option<SourceSpec>,
    #[serde(default)]
    weak: Vec<SourceSpec>,
}

#[derive(Serialize)]
struct RolloutManifest {
    seed: u64,
    setting: String,
    counts: usize,
    instances: usize,
    sources: Vec<String>,
}

async fn cmd_rollouts(args: RolloutsArgs) -> Result<()> {
    let instances: Vec<QaInstance> = jsonl::read_jsonl(&args.input)?;
    let plan: Option<RolloutPlan> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).context("parsing rollout config")?)
        }
        None => None,
    };

    let setting = args.setting.into();
    let mut filled = Vec::with_capacity(instances.len());
    let mut source_labels = Vec::new();

    match args.setting {
        SettingArg::Adversarial => {
            let base = plan.as_ref().and_then(|p| p.backend.clone());
            let cfg = args.backend.overlay(base)?;
            let label = plan
                .and_then(|p| p.label)
                .unwrap_or_else(|| cfg.source_label());
            let agent = build_agent(&cfg, args.seed).map_err(|e| anyhow::anyhow!(e.to_string()))?;
            source_labels.push(label.clone());
            for (i, instance) in instances.iter().enumerate() {
                let source = RolloutSource::Adversarial { label: label.clone(), agent: agent.as_ref() };
                let inst = generate_rollouts(instance, setting, &source, args.counts)
                    .await
                    .with_context(|| format!("instance {} ({})", i + 1, instance.id))?;
                filled.push(inst);
            }
        }
        SettingArg::Natural => {
            let (strong_label, strong_cfg, weak_specs): (String, BackendConfig, Vec<(String, BackendConfig)>) =
                match plan {
                    Some(plan) if plan.strong.is_some() => {
                        let strong = plan.strong.expect("checked");
                        let weak = plan.weak.into_iter().map(|s| (s.label, s.backend)).collect();
                        (strong.label, strong.backend, weak)
                    }
                    _ => {
                        let mut strong_cfg = args.backend.overlay(None)?;
                        if strong_cfg.kind == ecl_core::backend::BackendKind::Scripted {
                            strong_cfg.scripted_accuracy = args.strong_accuracy;
                        }
                        let weak = (0..args.weak_sources)
                            .map(|i| {
                                (format!("weak-{}", i + 1), BackendConfig::scripted(args.weak_accuracy))
                            })
                            .collect();
                        ("strong".to_string(), strong_cfg, weak)
                    }
                };
            let strong_agent = build_agent(&strong_cfg, args.seed)
                .map_err(|e| anyhow::anyhow!(e.to_string()))?;
            let weak_agents: Vec<(String, Arc<dyn Agent>)> = weak_specs
                .into_iter()
                .enumerate()
                .map(|(i, (label, cfg))| {
                    build_agent(&cfg, args.seed.wrapping_add(i as u64 + 1))
                        .map(|a| (label, a))
                        .map_err(|e| anyhow::anyhow!(e.to_string()))
                })
                .collect::<Result<_>>()?;
            if weak_agents.is_empty() {
                bail!("the natural setting needs at least one weak source");
            }
            source_labels.push(strong_label.clone());
            source_labels.extend(weak_agents.iter().map(|(l, _)| l.clone()));
            for (i, instance) in instances.iter().enumerate() {
                let source = RolloutSource::Natural {
                    strong: (strong_label.clone(), strong_agent.as_ref()),
                    weak: weak_agents.iter().map(|(l, a)| (l.clone(), a.as_ref())).collect(),
                };
                let inst = generate_rollouts(instance, setting, &source, args.counts)
                    .await
                    .with_context(|| format!("instance {} ({})", i + 1, instance.id))?;
                filled.push(inst);
            }
        }
    }

    jsonl::write_jsonl(&args.out, &filled)?;
    let manifest = RolloutManifest {
        seed: args.seed,
        setting: setting.to_string(),
        counts: args.counts,
        instances: filled.len(),
        sources: source_labels,
    };
    jsonl::atomic_write(
        &args.out.with_extension("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    println!("rollouts filled for {} instances -> {}", filled.len(), args.out.display());
    Ok(())
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let instances: Vec<QaInstance> = jsonl::read_jsonl(&args.input)?;
    let spec = SplitSpec {
        history_count: args.history,
        train_fraction: args.train_fraction,
        seed: args.seed,
    };
    let split = split_dataset(&instances, &spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    jsonl::write_jsonl(&args.out_dir.join("history.jsonl"), &split.history_pool)?;
    jsonl::write_jsonl(&args.out_dir.join("train.jsonl"), &split.train)?;
    jsonl::write_jsonl(&args.out_dir.join("test.jsonl"), &split.test)?;
    let manifest = SplitManifest {
        seed: args.seed,
        history_count: args.history,
        train_fraction: args.train_fraction,
        history: split.history_pool.len(),
        train: split.train.len(),
        test: split.test.len(),
    };
    jsonl::atomic_write(
        &args.out_dir.join("split_manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    println!(
        "history={} train={} test={}",
        split.history_pool.len(),
        split.train.len(),
        split.test.len()
    );
    Ok(())
}

fn cmd_build_episodes(args: BuildEpisodesArgs) -> Result<()> {
    let instances: Vec<QaInstance> = jsonl::read_jsonl(&args.instances)?;
    let pool: Vec<QaInstance> = jsonl::read_jsonl(&args.history_pool)?;
    let spec = EpisodeSpec {
        num_peers: args.peers,
        history_length: args.history_length,
        setting: args.setting.into(),
        variant: args.variant.into(),
        seed: args.seed,
        peer_pool: None,
    };
    let take = args.limit.unwrap_or(instances.len());
    let episodes: Vec<Episode> = instances
        .iter()
        .take(take)
        .map(|inst| {
            build_episode(inst, &pool, &spec).with_context(|| format!("instance {}", inst.id))
        })
        .collect::<Result<_>>()?;
    jsonl::write_jsonl(&args.out, &episodes)?;
    let manifest = EpisodeManifest {
        spec,
        instances_in: instances.len(),
        pool_size: pool.len(),
        episodes: episodes.len(),
    };
    jsonl::atomic_write(
        &args.out.with_extension("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    println!("built {} episodes -> {}", episodes.len(), args.out.display());
    Ok(())
}

fn cmd_perturb(args: PerturbArgs) -> Result<()> {
    let episodes: Vec<Episode> = jsonl::read_jsonl(&args.input)?;
    let mode: Perturbation = args.mode.into();
    let out: Vec<Episode> = episodes
        .iter()
        .map(|e| match mode {
            Perturbation::None => Ok(e.clone()),
            Perturbation::Flip => apply_flip(e).map_err(anyhow::Error::from),
            Perturbation::AllWrong => apply_all_wrong(e).map_err(anyhow::Error::from),
        })
        .collect::<Result<_>>()?;
    jsonl::write_jsonl(&args.out, &out)?;
    println!("perturbed {} episodes ({mode}) -> {}", out.len(), args.out.display());
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    if !args.dump {
        bail!("render only supports --dump mode");
    }
    let episodes: Vec<Episode> = jsonl::read_jsonl(&args.episodes)?;
    let take = args.limit.unwrap_or(episodes.len());
    let method: Method = args.method.into();
    let spec = MethodSpec::new(method);
    let stage = match args.stage {
        1 => Stage::One,
        2 => Stage::Two,
        other => bail!("stage must be 1 or 2, got {other}"),
    };
    if stage == Stage::Two && args.stage1_text.is_none() {
        bail!("rendering stage 2 requires --stage1-text");
    }
    let mut count = 0;
    for episode in episodes.iter().take(take) {
        let pair = render_prompt(&spec, stage, episode, args.stage1_text.as_deref(), None)?;
        let dump = pair.to_dump_string();
        match &args.out_dir {
            Some(dir) => {
                let name = format!("{}_{}_s{}.txt", episode.id(), method, args.stage);
                jsonl::atomic_write(&dir.join(name), dump.as_bytes())?;
            }
            None => {
                println!("#### episode {} ({} stage {})", episode.id(), method, args.stage);
                println!("{dump}");
            }
        }
        count += 1;
    }
    if let Some(dir) = &args.out_dir {
        println!("rendered {count} prompts -> {}", dir.display());
    } else {
        println!("rendered {count} prompts");
    }
    Ok(())
}

fn parse_formats(formats: &[String]) -> Result<Vec<ReportFormat>> {
    formats
        .iter()
        .map(|f| match f.as_str() {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => bail!("unknown report format {other:?} (expected md, csv, json)"),
        })
        .collect()
}

async fn cmd_run(args: RunArgs) -> Result<()> {
    let base: Option<RunConfig> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).context("parsing run config")?)
        }
        None => None,
    };
    let backend = args.backend.overlay(base.as_ref().map(|b| b.backend.clone()))?;
    let mut method = match (args.method, &base) {
        (Some(m), _) => MethodSpec::new(m.into()),
        (None, Some(b)) => b.method.clone(),
        (None, None) => bail!("--method (or --config) is required"),
    };
    if args.db {
        method.db_enabled = true;
    }
    if args.parse_trusted {
        method.parse_trusted = true;
    }
    let episodes_path = args
        .episodes
        .or_else(|| base.as_ref().map(|b| b.episodes_path.clone()))
        .context("--episodes (or --config) is required")?;
    let output_dir = args
        .out_dir
        .or_else(|| base.as_ref().map(|b| b.output_dir.clone()))
        .context("--out-dir (or --config) is required")?;
    let cfg = RunConfig {
        episodes_path,
        method,
        perturbation: args
            .perturb
            .map(Into::into)
            .or(base.as_ref().map(|b| b.perturbation))
            .unwrap_or(Perturbation::None),
        backend,
        concurrency_limit: args
            .jobs
            .or(base.as_ref().map(|b| b.concurrency_limit))
            .unwrap_or(4),
        seed: args.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        output_dir,
    };
    let formats = parse_formats(&args.formats)?;
    let report = run_experiment(&cfg).await?;
    write_report(&report, &formats, &cfg.output_dir)?;
    println!(
        "run: method={} perturbation={} n={} errored={} accuracy={:.4} prr={} -> {}",
        report.config.method.method,
        report.config.perturbation,
        report.summary.n_scored,
        report.summary.n_errored,
        report.summary.accuracy,
        report
            .summary
            .prr_mean
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "--".into()),
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_export_rl(args: ExportRlArgs) -> Result<()> {
    let records: Vec<ResultRecord> = jsonl::read_jsonl(&args.run_dir.join("results.jsonl"))?;
    let results: Vec<_> = records.into_iter().map(|r| r.result).collect();
    let calls: Vec<CallRecord> = jsonl::read_jsonl(&args.run_dir.join("calls.jsonl"))?;
    let scheme = args.scheme.to_scheme(args.include_prr);
    let written = export_rl_records(&results, &calls, scheme, &args.out)?;
    println!("exported {written} rl records -> {}", args.out.display());
    Ok(())
}

fn load_report(dir: &Path) -> Result<RunReport> {
    let path = dir.join("report.json");
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let baseline = args.baseline.as_deref().map(load_report).transpose()?;
    let mut reports = Vec::new();
    for dir in &args.runs {
        let mut report = load_report(dir)?;
        if let Some(base) = &baseline {
            report.accuracy_delta = Some(report.summary.delta_vs(&base.summary));
        }
        reports.push(report);
    }
    if let Some(base) = baseline {
        reports.push(base);
    }
    let markdown = combined_report_markdown(&reports);
    jsonl::atomic_write(&args.out, markdown.as_bytes())?;
    println!("combined {} runs -> {}", reports.len(), args.out.display());
    Ok(())
}

async fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let instances: Vec<QaInstance> = jsonl::read_jsonl(&args.instances)?;
    let pool: Vec<QaInstance> = jsonl::read_jsonl(&args.history_pool)?;
    let take = args.limit.unwrap_or(instances.len());
    let instances = &instances[..take.min(instances.len())];

    let mut method = MethodSpec::new(args.method.into());
    method.db_enabled = args.db;
    let backend = args.backend.overlay(None)?;
    let base_spec = EpisodeSpec {
        num_peers: 2,
        history_length: 1,
        setting: args.setting.into(),
        variant: args.variant.into(),
        seed: args.seed,
        peer_pool: None,
    };
    let template = RunConfig {
        episodes_path: args.out_dir.join("episodes.jsonl"),
        method,
        perturbation: Perturbation::None,
        backend,
        concurrency_limit: args.jobs,
        seed: args.seed,
        output_dir: args.out_dir.clone(),
    };
    let report = run_sweep(
        instances,
        &pool,
        &args.peers,
        &args.history_lengths,
        &base_spec,
        &template,
    )
    .await?;
    let markdown = sweep_markdown(&report);
    jsonl::atomic_write(&args.out_dir.join("sweep.md"), markdown.as_bytes())?;
    jsonl::atomic_write(
        &args.out_dir.join("sweep.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    println!(
        "sweep: {} cells over peers {:?} x history {:?} -> {}",
        report.cells.len(),
        args.peers,
        args.history_lengths,
        args.out_dir.display()
    );
    Ok(())
}
