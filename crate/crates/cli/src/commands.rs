//! One function per subcommand; `main` only parses flags and maps errors
//! to exit codes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use traj_uncert::analysis::write_json;
use traj_uncert::ensemble::EnsemblePrediction;
use traj_uncert::metrics::{min_ade, min_fde, MetricName};
use traj_uncert::perturb::{apply, PerturbationSpec};
use traj_uncert::scene::{read_predictions, read_scenes, write_jsonl, write_predictions, write_scenes, Scene};
use traj_uncert::synth::gen_scenes;
use traj_uncert::{ModeSet, RunReport};

use crate::config::{RunConfig, SynthConfig};
use crate::error::{CliError, CliResult};
use crate::experiment::{correlation_table, load_or_generate, run_all, summarize, Suite, Summary};
use crate::pipeline::{
    check_known_scenes, evaluate, group_predictions, model_config, par_map, proposals, synth_predictions,
};

/// `out.csv` and `out.jsonl`, whatever extension `out` came with.
pub fn report_paths(out: &Path) -> (PathBuf, PathBuf) {
    let stem = match out.extension().and_then(|e| e.to_str()) {
        Some("csv" | "jsonl" | "json") => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("csv"), with("jsonl"))
}

pub fn write_report(report: &RunReport, out: &Path, k_values: &[usize]) -> CliResult<()> {
    let (csv, jsonl) = report_paths(out);
    report.write_csv(&csv, k_values).map_err(CliError::from_internal)?;
    report.write_jsonl(&jsonl).map_err(CliError::from_internal)
}

type Inputs = (Vec<Scene>, BTreeMap<String, Vec<ModeSet>>);

fn load_inputs(scenes: &Path, predictions: &Path) -> CliResult<Inputs> {
    let scenes = read_scenes(scenes).map_err(|e| CliError::from_input(e).stage("scenes"))?;
    let preds = read_predictions(predictions).map_err(|e| CliError::from_input(e).stage("predictions"))?;
    let grouped = group_predictions(preds);
    check_known_scenes(&scenes, &grouped)?;
    Ok((scenes, grouped))
}

pub fn cmd_decompose(scenes: &Path, predictions: &Path, out: &Path, config: &RunConfig) -> CliResult<RunReport> {
    let (scenes, grouped) = load_inputs(scenes, predictions)?;
    let report = evaluate(&scenes, &grouped, config)?;
    write_report(&report, out, &config.k_values)?;
    Ok(report)
}

pub fn cmd_perturb(input: &Path, output: &Path, ops: &str, seed: u64) -> CliResult<usize> {
    let spec = PerturbationSpec::parse(ops, seed).map_err(CliError::from_input)?;
    let scenes = read_scenes(input).map_err(|e| CliError::from_input(e).stage("scenes"))?;
    let out = apply(&spec, &scenes);
    write_scenes(&out, output).map_err(CliError::from_internal)?;
    Ok(out.len())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricRecord {
    pub scene_id: String,
    pub model_config: String,
    pub metric: MetricName,
    pub k: usize,
    pub value: f64,
}

/// minADE/minFDE for each scene and k (MBRM for ensembles, Topk for a
/// single model), written as JSONL.
pub fn cmd_metrics(scenes: &Path, predictions: &Path, out: &Path, config: &RunConfig) -> CliResult<Vec<MetricRecord>> {
    let (scenes, grouped) = load_inputs(scenes, predictions)?;
    if let Some(missing) = scenes.iter().find(|s| !grouped.contains_key(&s.scene_id)) {
        return Err(CliError::input(format!(
            "no predictions for scene_id {}",
            missing.scene_id
        )));
    }
    let per_scene = par_map(config.parallelism, &scenes, |s| {
        let id = &s.scene_id;
        let ens = EnsemblePrediction::new(id.clone(), grouped[id].clone())
            .map_err(|e| CliError::input(format!("scene {id}: {e}")))?;
        let cfg = model_config(&ens.members);
        let mut recs = Vec::new();
        for &k in &config.k_values {
            let Some(props) = proposals(&ens, k).map_err(CliError::from_internal)? else {
                continue;
            };
            for (metric, value) in [
                (MetricName::MinAde, min_ade(&props, &s.ground_truth, k)),
                (MetricName::MinFde, min_fde(&props, &s.ground_truth, k)),
            ] {
                recs.push(MetricRecord {
                    scene_id: id.clone(),
                    model_config: cfg.clone(),
                    metric,
                    k,
                    value: value.map_err(|e| CliError::input(format!("scene {id}: {e}")))?.value,
                });
            }
        }
        Ok(recs)
    })?;
    let mut recs: Vec<MetricRecord> = per_scene.into_iter().flatten().collect();
    recs.sort_by(|a, b| (&a.scene_id, a.metric, a.k).cmp(&(&b.scene_id, b.metric, b.k)));
    write_jsonl(out, &recs).map_err(CliError::from_internal)?;
    Ok(recs)
}

pub fn read_report(path: &Path) -> CliResult<RunReport> {
    let r = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => RunReport::read_csv(path),
        _ => RunReport::read_jsonl(path),
    };
    r.map_err(|e| CliError::from_input(e).stage("report"))
}

/// ρ of every uncertainty column (including RIP) against each metric/k.
pub fn cmd_correlate(report: &Path, out: &Path, k_values: &[usize]) -> CliResult<Summary> {
    let report = read_report(report)?;
    let summary = Summary::Corr {
        rows: correlation_table(&report, k_values)?,
    };
    write_json(&summary, out).map_err(CliError::from_internal)?;
    Ok(summary)
}

/// Runs every dataset and model configuration, writes the full report to
/// `<workdir>/report.{csv,jsonl}` and the suite summary to `out`.
pub fn cmd_experiment(
    suite: Suite,
    workdir: &Path,
    out: &Path,
    config: &RunConfig,
    synth: &SynthConfig,
) -> CliResult<Summary> {
    let clean = load_or_generate(workdir, synth, config.seed)?;
    let report = run_all(&clean, synth, config)?;
    write_report(&report, &workdir.join("report"), &config.k_values).map_err(|e| e.stage("write report"))?;
    let summary = summarize(suite, &report, &config.k_values).map_err(|e| e.stage("analyze"))?;
    write_json(&summary, out).map_err(CliError::from_internal)?;
    Ok(summary)
}

pub fn cmd_synth_gen(out: &Path, synth: &SynthConfig, seed: u64) -> CliResult<usize> {
    let scenes = gen_scenes(&synth.template(), synth.n_scenes, seed).map_err(CliError::from_input)?;
    write_scenes(&scenes, out).map_err(CliError::from_internal)?;
    Ok(scenes.len())
}

pub fn cmd_synth_predict(scenes: &Path, out: &Path, synth: &SynthConfig, config: &RunConfig) -> CliResult<usize> {
    let scenes = read_scenes(scenes).map_err(|e| CliError::from_input(e).stage("scenes"))?;
    let preds = synth_predictions(&scenes, &synth.predictors(config.seed), config.parallelism)?;
    write_predictions(&preds, out).map_err(CliError::from_internal)?;
    Ok(preds.len())
}
