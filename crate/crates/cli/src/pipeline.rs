//! Per-scene evaluation fanned out over a bounded worker pool.
//!
//! Every random draw is seeded from `config.seed ⊕ hash(scene_id)`, and rows
//! are sorted before they leave this module, so results never depend on the
//! number of workers or on input order.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use traj_uncert::ensemble::{mbrm, topk, EnsemblePrediction};
use traj_uncert::metrics::{min_ade, min_fde};
use traj_uncert::scene::{ModeSet, Prediction, Scene, Trajectory};
use traj_uncert::seed;
use traj_uncert::synth::{predict, SyntheticPredictor};
use traj_uncert::uncertainty::{decompose, rip_epistemic, EstimatorConfig, SubSeeding};
use traj_uncert::{ReportRow, RunReport};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Runs `f` over `items` on a pool of exactly `parallelism` workers,
/// preserving input order in the output.
pub fn par_map<T, U, F>(parallelism: usize, items: &[T], f: F) -> CliResult<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> CliResult<U> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| CliError::Internal(format!("worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Groups prediction records into per-scene member lists.
pub fn group_predictions(predictions: Vec<Prediction>) -> BTreeMap<String, Vec<ModeSet>> {
    let mut out: BTreeMap<String, Vec<ModeSet>> = BTreeMap::new();
    for p in predictions {
        let (scene_id, set) = p.into_mode_set();
        out.entry(scene_id).or_default().push(set);
    }
    out
}

pub fn model_config(members: &[ModeSet]) -> String {
    let mut ids: Vec<&str> = members.iter().map(|m| m.model_id.as_str()).collect();
    ids.sort_unstable();
    ids.join(";")
}

/// The k proposals scored by the metrics: MBRM over the pooled modes of an
/// ensemble, Topk for a single model. `None` when fewer than k are available.
pub fn proposals(ensemble: &EnsemblePrediction, k: usize) -> traj_uncert::Result<Option<Vec<Trajectory>>> {
    if ensemble.size() == 1 {
        let member = &ensemble.members[0];
        return if k <= member.modes.len() {
            topk(member, k).map(Some)
        } else {
            Ok(None)
        };
    }
    let pool: usize = ensemble.members.iter().map(|m| m.modes.len()).sum();
    if k <= pool {
        mbrm(ensemble, k, None).map(Some)
    } else {
        Ok(None)
    }
}

pub fn estimator(config: &RunConfig, scene_id: &str) -> EstimatorConfig {
    EstimatorConfig {
        n_per_model: config.n_per_model,
        seed: seed::keyed(config.seed, scene_id),
        bandwidth: config.bandwidth,
        reuse_samples: false,
        // member order in the input file must not matter
        sub_seeding: SubSeeding::ModelIdHash,
    }
}

/// One report row: decomposition, RIP, and minADE/minFDE for each k the
/// proposals can cover.
pub fn evaluate_scene(scene: &Scene, members: Vec<ModeSet>, config: &RunConfig) -> CliResult<ReportRow> {
    let id = &scene.scene_id;
    let ensemble =
        EnsemblePrediction::new(id.clone(), members).map_err(|e| CliError::input(format!("scene {id}: {e}")))?;
    if ensemble.horizon() != scene.ground_truth.len() {
        return Err(CliError::input(format!(
            "scene {id}: predictions have {} steps, ground truth has {}",
            ensemble.horizon(),
            scene.ground_truth.len()
        )));
    }
    let internal = |e: traj_uncert::Error| CliError::Internal(format!("scene {id}: {e}"));
    let uncertainty = decompose(&ensemble, &estimator(config, id)).map_err(internal)?;
    let rip = rip_epistemic(&ensemble, &scene.ground_truth, config.bandwidth).map_err(internal)?;
    let mut row = ReportRow {
        scene_id: id.clone(),
        dataset_tag: scene.dataset_tag.clone(),
        model_config: model_config(&ensemble.members),
        min_ade: BTreeMap::new(),
        min_fde: BTreeMap::new(),
        uncertainty,
        rip,
    };
    for &k in &config.k_values {
        if let Some(props) = proposals(&ensemble, k).map_err(internal)? {
            row.min_ade
                .insert(k, min_ade(&props, &scene.ground_truth, k).map_err(internal)?.value);
            row.min_fde
                .insert(k, min_fde(&props, &scene.ground_truth, k).map_err(internal)?.value);
        }
    }
    Ok(row)
}

/// Evaluates every scene; a scene without predictions is an input error
/// naming the first such scene_id.
pub fn evaluate(
    scenes: &[Scene],
    predictions: &BTreeMap<String, Vec<ModeSet>>,
    config: &RunConfig,
) -> CliResult<RunReport> {
    if let Some(missing) = scenes.iter().find(|s| !predictions.contains_key(&s.scene_id)) {
        return Err(CliError::input(format!(
            "no predictions for scene_id {}",
            missing.scene_id
        )));
    }
    let rows = par_map(config.parallelism, scenes, |s| {
        evaluate_scene(s, predictions[&s.scene_id].clone(), config)
    })?;
    let mut report = RunReport::new(rows).map_err(CliError::from_input)?;
    report.sort_by_scene();
    Ok(report)
}

/// Rejects prediction records whose scene_id is not among `scenes`.
pub fn check_known_scenes(scenes: &[Scene], predictions: &BTreeMap<String, Vec<ModeSet>>) -> CliResult<()> {
    let known: HashSet<&str> = scenes.iter().map(|s| s.scene_id.as_str()).collect();
    match predictions.keys().find(|id| !known.contains(id.as_str())) {
        Some(id) => Err(CliError::input(format!("prediction refers to unknown scene_id {id}"))),
        None => Ok(()),
    }
}

/// Synthetic predictions for every scene, in scene order then member order.
pub fn synth_predictions(
    scenes: &[Scene],
    predictors: &[SyntheticPredictor],
    parallelism: usize,
) -> CliResult<Vec<Prediction>> {
    let per_scene = par_map(parallelism, scenes, |s| {
        predictors
            .iter()
            .map(|p| {
                predict(p, s, s.ground_truth.len())
                    .map(|set| Prediction::from_mode_set(s.scene_id.clone(), set))
                    .map_err(CliError::from_internal)
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    Ok(per_scene.into_iter().flatten().collect())
}
