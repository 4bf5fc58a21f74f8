//! Correlation, quartile and cross-dataset statistics over run reports.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricName;
use crate::scene::{read_jsonl, write_jsonl};
use crate::uncertainty::UncertaintyTriple;

/// One scene's evaluation under one model configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scene_id: String,
    pub dataset_tag: String,
    pub model_config: String,
    /// k → meters.
    pub min_ade: BTreeMap<usize, f64>,
    pub min_fde: BTreeMap<usize, f64>,
    pub uncertainty: UncertaintyTriple,
    /// nats².
    pub rip: f64,
}

impl ReportRow {
    pub fn metric(&self, metric: MetricName, k: usize) -> Option<f64> {
        match metric {
            MetricName::MinAde => self.min_ade.get(&k).copied(),
            MetricName::MinFde => self.min_fde.get(&k).copied(),
        }
    }

    pub fn uncertainty(&self, kind: UncertaintyKind) -> f64 {
        match kind {
            UncertaintyKind::Total => self.uncertainty.total,
            UncertaintyKind::Aleatoric => self.uncertainty.aleatoric,
            UncertaintyKind::Epistemic => self.uncertainty.epistemic,
            UncertaintyKind::Rip => self.rip,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn new(rows: Vec<ReportRow>) -> Result<Self> {
        let r = RunReport { rows };
        r.validate()?;
        Ok(r)
    }

    /// scene_ids are unique per `(dataset_tag, model_config)`.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for row in &self.rows {
            if !seen.insert((&row.dataset_tag, &row.model_config, &row.scene_id)) {
                return Err(Error::invalid(
                    "scene_id",
                    format!(
                        "duplicate {} in ({}, {})",
                        row.scene_id, row.dataset_tag, row.model_config
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn filter(&self, dataset_tag: Option<&str>, model_config: Option<&str>) -> RunReport {
        RunReport {
            rows: self
                .rows
                .iter()
                .filter(|r| dataset_tag.is_none_or(|t| r.dataset_tag == t))
                .filter(|r| model_config.is_none_or(|c| r.model_config == c))
                .cloned()
                .collect(),
        }
    }

    /// Distinct `(dataset_tag, model_config)` pairs in first-seen order.
    pub fn groups(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.dataset_tag.clone(), r.model_config.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    /// Union of the k values present in any row.
    pub fn k_values(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.rows.iter().flat_map(|r| r.min_ade.keys().copied()).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn sort_by_scene(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.dataset_tag, &a.model_config, &a.scene_id).cmp(&(&b.dataset_tag, &b.model_config, &b.scene_id))
        });
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_jsonl(path, &self.rows)
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let rows = read_jsonl(path, |_: &ReportRow| Ok(()))?;
        RunReport::new(rows)
    }

    /// CSV with columns `scene_id, dataset_tag, model_config, min_ade_<k>…,
    /// min_fde_<k>…, total, aleatoric, epistemic, rip`.
    pub fn write_csv(&self, path: &Path, k_values: &[usize]) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut header: Vec<String> = vec!["scene_id".into(), "dataset_tag".into(), "model_config".into()];
        header.extend(k_values.iter().map(|k| format!("min_ade_{k}")));
        header.extend(k_values.iter().map(|k| format!("min_fde_{k}")));
        header.extend(["total", "aleatoric", "epistemic", "rip"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.scene_id.clone(), r.dataset_tag.clone(), r.model_config.clone()];
            rec.extend(k_values.iter().map(|k| num(r.min_ade.get(k).copied())));
            rec.extend(k_values.iter().map(|k| num(r.min_fde.get(k).copied())));
            let u = r.uncertainty;
            rec.extend([u.total, u.aleatoric, u.epistemic, r.rip].map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        let header = rdr
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| {
            col(name).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column {name}"),
            })
        };
        let (c_id, c_tag, c_cfg) = (need("scene_id")?, need("dataset_tag")?, need("model_config")?);
        let (c_t, c_a, c_e, c_r) = (need("total")?, need("aleatoric")?, need("epistemic")?, need("rip")?);
        let ks: Vec<(usize, usize, Option<usize>)> = header
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                h.strip_prefix("min_ade_")
                    .and_then(|k| k.parse().ok())
                    .map(|k: usize| (k, i))
            })
            .map(|(k, i)| (k, i, col(&format!("min_fde_{k}"))))
            .collect();
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            let f = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number {:?} in column {}", &rec[i], &header[i]),
                })
            };
            let mut min_ade = BTreeMap::new();
            let mut min_fde = BTreeMap::new();
            for &(k, ia, ifd) in &ks {
                if !rec[ia].is_empty() {
                    min_ade.insert(k, f(ia)?);
                }
                if let Some(ifd) = ifd.filter(|&i| !rec[i].is_empty()) {
                    min_fde.insert(k, f(ifd)?);
                }
            }
            rows.push(ReportRow {
                scene_id: rec[c_id].to_string(),
                dataset_tag: rec[c_tag].to_string(),
                model_config: rec[c_cfg].to_string(),
                min_ade,
                min_fde,
                uncertainty: UncertaintyTriple {
                    total: f(c_t)?,
                    aleatoric: f(c_a)?,
                    epistemic: f(c_e)?,
                },
                rip: f(c_r)?,
            });
        }
        RunReport::new(rows)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyKind {
    Total,
    Aleatoric,
    Epistemic,
    Rip,
}

impl UncertaintyKind {
    pub const ALL: [UncertaintyKind; 4] = [
        UncertaintyKind::Total,
        UncertaintyKind::Aleatoric,
        UncertaintyKind::Epistemic,
        UncertaintyKind::Rip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UncertaintyKind::Total => "total",
            UncertaintyKind::Aleatoric => "aleatoric",
            UncertaintyKind::Epistemic => "epistemic",
            UncertaintyKind::Rip => "rip",
        }
    }
}

impl fmt::Display for UncertaintyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for UncertaintyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        UncertaintyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown uncertainty kind {s:?}")))
    }
}

/// Sample Pearson correlation, accumulated with Welford-style co-moment
/// updates.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("{} pairs", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite input".into()));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let n = (i + 1) as f64;
        let dx = x - mx;
        let dy = y - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (x - mx);
        syy += dy * (y - my);
        sxy += dx * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// ρ between one uncertainty column and one metric column over every row.
pub fn correlate(report: &RunReport, kind: UncertaintyKind, metric: MetricName, k: usize) -> Result<f64> {
    let (us, ms): (Vec<f64>, Vec<f64>) = report
        .rows
        .iter()
        .map(|r| {
            r.metric(metric, k)
                .map(|m| (r.uncertainty(kind), m))
                .ok_or_else(|| Error::invalid(format!("{metric}_{k}"), format!("missing for scene {}", r.scene_id)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    pearson(&us, &ms)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

/// Linear-interpolation (type 7) quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Box-plot statistics: type-7 quartiles; whiskers at the most extreme
/// observations within 1.5·IQR of the box.
pub fn quartiles(values: &[f64]) -> Result<QuartileSummary> {
    if values.is_empty() {
        return Err(Error::invalid("values", "no values to summarize"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values", "non-finite value"));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&s, 0.25);
    let median = quantile_sorted(&s, 0.5);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let whisker_low = s.iter().copied().find(|&v| v >= lo_fence).unwrap_or(q1).min(q1);
    let whisker_high = s.iter().rev().copied().find(|&v| v <= hi_fence).unwrap_or(q3).max(q3);
    Ok(QuartileSummary {
        q1,
        median,
        q3,
        whisker_low,
        whisker_high,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OodSeparation {
    pub median_exceeds_q3: bool,
    pub median_exceeds_median: bool,
}

/// Compares the OOD median against the clean q3 and median (strictly).
pub fn ood_separation(clean: &QuartileSummary, ood: &QuartileSummary) -> OodSeparation {
    OodSeparation {
        median_exceeds_q3: ood.median > clean.q3,
        median_exceeds_median: ood.median > clean.median,
    }
}

fn single_config(report: &RunReport) -> Result<Option<&str>> {
    let mut cfg: Option<&str> = None;
    for r in &report.rows {
        match cfg {
            None => cfg = Some(&r.model_config),
            Some(c) if c != r.model_config => {
                return Err(Error::ModelConfigMismatch(c.to_string(), r.model_config.clone()));
            }
            _ => {}
        }
    }
    Ok(cfg)
}

fn mean_metric(report: &RunReport, metric: MetricName, k: usize) -> Result<f64> {
    if report.rows.is_empty() {
        return Err(Error::invalid("rows", "report is empty"));
    }
    let mut sum = 0.0;
    for r in &report.rows {
        sum += r
            .metric(metric, k)
            .ok_or_else(|| Error::invalid(format!("{metric}_{k}"), format!("missing for scene {}", r.scene_id)))?;
    }
    Ok(sum / report.rows.len() as f64)
}

/// `mean(metric | ood) − mean(metric | clean)` in meters. Both reports must
/// hold a single, shared model_config.
pub fn delta_metrics(report_clean: &RunReport, report_ood: &RunReport, metric: MetricName, k: usize) -> Result<f64> {
    let a = single_config(report_clean)?;
    let b = single_config(report_ood)?;
    if let (Some(a), Some(b)) = (a, b) {
        if a != b {
            return Err(Error::ModelConfigMismatch(a.to_string(), b.to_string()));
        }
    }
    Ok(mean_metric(report_ood, metric, k)? - mean_metric(report_clean, metric, k)?)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Writes any serializable summary as pretty JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}
