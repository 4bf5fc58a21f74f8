//! The four experiment suites over one clean dataset, its six perturbed
//! variants, a synthetic ensemble and each of its members on their own.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use traj_uncert::analysis::{delta_metrics, ood_separation, quartiles, OodSeparation, QuartileSummary};
use traj_uncert::metrics::MetricName;
use traj_uncert::perturb::{apply, Perturbation, PerturbationSpec, ORIGINAL_TAG};
use traj_uncert::scene::{read_scenes, Scene};
use traj_uncert::synth::gen_scenes;
use traj_uncert::{correlate, Error, RunReport, UncertaintyKind};

use crate::config::{RunConfig, SynthConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{evaluate, group_predictions, synth_predictions};

/// The perturbed variants every suite evaluates against the clean set.
pub const OOD_DATASETS: [&[Perturbation]; 6] = {
    use Perturbation::*;
    [
        &[Blackout],
        &[Blackout, ScrambleEgo, LaneDeletion],
        &[LaneDeletion],
        &[RevertEgo],
        &[ScrambleEgo],
        &[ScrambleEgo, LaneDeletion],
    ]
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Corr,
    Robustness,
    OodCorr,
    OodDetect,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Corr => "corr",
            Suite::Robustness => "robustness",
            Suite::OodCorr => "ood_corr",
            Suite::OodDetect => "ood_detect",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Suite::Corr, Suite::Robustness, Suite::OodCorr, Suite::OodDetect]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?} (expected corr, robustness, ood_corr or ood_detect)"))
    }
}

/// Clean scenes from `<workdir>/scenes.jsonl` if present, else generated.
pub fn load_or_generate(workdir: &Path, synth: &SynthConfig, seed: u64) -> CliResult<Vec<Scene>> {
    let path = workdir.join("scenes.jsonl");
    if path.exists() {
        read_scenes(&path).map_err(|e| CliError::from_input(e).stage("load scenes"))
    } else {
        gen_scenes(&synth.template(), synth.n_scenes, seed)
            .map_err(|e| CliError::from_input(e).stage("generate scenes"))
    }
}

pub fn perturbed_datasets(clean: &[Scene], seed: u64) -> Vec<Vec<Scene>> {
    OOD_DATASETS
        .iter()
        .map(|ops| {
            let spec = PerturbationSpec::new(ops.to_vec(), seed).expect("fixed op lists are valid");
            apply(&spec, clean)
        })
        .collect()
}

/// Rows for every dataset × {ensemble, each member alone}.
pub fn run_all(clean: &[Scene], synth: &SynthConfig, config: &RunConfig) -> CliResult<RunReport> {
    let predictors = synth.predictors(config.seed);
    let mut datasets = vec![clean.to_vec()];
    datasets.extend(perturbed_datasets(clean, config.seed));
    let mut rows = Vec::new();
    for scenes in &datasets {
        let tag = scenes.first().map_or(ORIGINAL_TAG, |s| s.dataset_tag.as_str());
        let preds = synth_predictions(scenes, &predictors, config.parallelism).map_err(|e| e.stage("predict"))?;
        let grouped = group_predictions(preds);
        let stage = format!("decompose {tag}");
        rows.extend(evaluate(scenes, &grouped, config).map_err(|e| e.stage(&stage))?.rows);
        if predictors.len() > 1 {
            for p in &predictors {
                let single: BTreeMap<_, _> = grouped
                    .iter()
                    .map(|(id, sets)| {
                        (
                            id.clone(),
                            sets.iter().filter(|s| s.model_id == p.model_id).cloned().collect(),
                        )
                    })
                    .collect();
                rows.extend(evaluate(scenes, &single, config).map_err(|e| e.stage(&stage))?.rows);
            }
        }
    }
    RunReport::new(rows).map_err(CliError::from_internal)
}

const METRICS: [MetricName; 2] = [MetricName::MinAde, MetricName::MinFde];

fn rho(report: &RunReport, kind: UncertaintyKind, metric: MetricName, k: usize) -> CliResult<Option<f64>> {
    match correlate(report, kind, metric, k) {
        Ok(r) => Ok(Some(r)),
        // e.g. a single model's epistemic column is identically zero
        Err(Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(CliError::from_input(e)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrRow {
    pub dataset_tag: String,
    pub model_config: String,
    pub metric: MetricName,
    pub k: usize,
    #[serde(rename = "ρ_total")]
    pub rho_total: Option<f64>,
    #[serde(rename = "ρ_aleatoric")]
    pub rho_aleatoric: Option<f64>,
    #[serde(rename = "ρ_epistemic")]
    pub rho_epistemic: Option<f64>,
    #[serde(rename = "ρ_rip")]
    pub rho_rip: Option<f64>,
}

/// ρ between each uncertainty column and each metric, per
/// (dataset_tag, model_config, metric, k).
pub fn correlation_table(report: &RunReport, k_values: &[usize]) -> CliResult<Vec<CorrRow>> {
    let mut out = Vec::new();
    for (tag, cfg) in report.groups() {
        let sub = report.filter(Some(&tag), Some(&cfg));
        for metric in METRICS {
            for &k in k_values {
                if sub.rows.iter().any(|r| r.metric(metric, k).is_none()) {
                    continue;
                }
                out.push(CorrRow {
                    dataset_tag: tag.clone(),
                    model_config: cfg.clone(),
                    metric,
                    k,
                    rho_total: rho(&sub, UncertaintyKind::Total, metric, k)?,
                    rho_aleatoric: rho(&sub, UncertaintyKind::Aleatoric, metric, k)?,
                    rho_epistemic: rho(&sub, UncertaintyKind::Epistemic, metric, k)?,
                    rho_rip: rho(&sub, UncertaintyKind::Rip, metric, k)?,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub dataset_tag: String,
    pub model_config: String,
    pub metric: MetricName,
    pub k: usize,
    /// `mean(ood) − mean(clean)`, meters.
    pub delta: f64,
}

/// Δ metrics of every non-clean dataset against the clean rows of the same
/// model_config.
pub fn delta_table(clean: &RunReport, ood: &RunReport, k_values: &[usize]) -> CliResult<Vec<DeltaRow>> {
    let mut out = Vec::new();
    for (tag, cfg) in ood.groups() {
        let base = clean.filter(None, Some(&cfg));
        if base.rows.is_empty() {
            continue;
        }
        let sub = ood.filter(Some(&tag), Some(&cfg));
        for metric in METRICS {
            for &k in k_values {
                if sub.rows.iter().chain(&base.rows).any(|r| r.metric(metric, k).is_none()) {
                    continue;
                }
                out.push(DeltaRow {
                    dataset_tag: tag.clone(),
                    model_config: cfg.clone(),
                    metric,
                    k,
                    delta: delta_metrics(&base, &sub, metric, k).map_err(CliError::from_input)?,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileRow {
    pub dataset_tag: String,
    pub model_config: String,
    pub kind: UncertaintyKind,
    #[serde(flatten)]
    pub summary: QuartileSummary,
    /// Against the clean rows of the same config and kind; absent for the
    /// clean set itself.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub separation: Option<OodSeparation>,
}

pub fn quartile_table(report: &RunReport) -> CliResult<Vec<QuartileRow>> {
    let kinds = [
        UncertaintyKind::Total,
        UncertaintyKind::Aleatoric,
        UncertaintyKind::Epistemic,
    ];
    let mut out = Vec::new();
    for (tag, cfg) in report.groups() {
        for kind in kinds {
            let column = |t: &str| -> Vec<f64> {
                report
                    .filter(Some(t), Some(&cfg))
                    .rows
                    .iter()
                    .map(|r| r.uncertainty(kind))
                    .collect()
            };
            let summary = quartiles(&column(&tag)).map_err(CliError::from_internal)?;
            let clean = column(ORIGINAL_TAG);
            let separation = if tag == ORIGINAL_TAG || clean.is_empty() {
                None
            } else {
                Some(ood_separation(
                    &quartiles(&clean).map_err(CliError::from_internal)?,
                    &summary,
                ))
            };
            out.push(QuartileRow {
                dataset_tag: tag.clone(),
                model_config: cfg.clone(),
                kind,
                summary,
                separation,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "snake_case")]
pub enum Summary {
    Corr { rows: Vec<CorrRow> },
    Robustness { rows: Vec<DeltaRow> },
    OodCorr { rows: Vec<CorrRow> },
    OodDetect { rows: Vec<QuartileRow> },
}

pub fn summarize(suite: Suite, report: &RunReport, k_values: &[usize]) -> CliResult<Summary> {
    let clean = report.filter(Some(ORIGINAL_TAG), None);
    Ok(match suite {
        Suite::Corr => Summary::Corr {
            rows: correlation_table(&clean, k_values)?,
        },
        Suite::Robustness => {
            let ood = RunReport {
                rows: report
                    .rows
                    .iter()
                    .filter(|r| r.dataset_tag != ORIGINAL_TAG)
                    .cloned()
                    .collect(),
            };
            Summary::Robustness {
                rows: delta_table(&clean, &ood, k_values)?,
            }
        }
        Suite::OodCorr => Summary::OodCorr {
            rows: correlation_table(report, k_values)?,
        },
        Suite::OodDetect => Summary::OodDetect {
            rows: quartile_table(report)?,
        },
    })
}
