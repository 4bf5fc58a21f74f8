//! minADE_k / minFDE_k displacement metrics.
//!
//! Both take proposals already ordered (highest weight first, see
//! [`ModeSet::ranked_trajectories`](crate::scene::ModeSet::ranked_trajectories))
//! and evaluate only the first `k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Point, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "minADE")]
    MinAde,
    #[serde(rename = "minFDE")]
    MinFde,
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::MinAde => "minADE",
            MetricName::MinFde => "minFDE",
        })
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minade" | "ade" | "min_ade" => Ok(MetricName::MinAde),
            "minfde" | "fde" | "min_fde" => Ok(MetricName::MinFde),
            _ => Err(Error::Config(format!("unknown metric {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    pub k: usize,
    /// Meters.
    pub value: f64,
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mean pointwise L2 distance. Lengths must match.
pub fn ade(a: &Trajectory, b: &Trajectory) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let sum: f64 = a.points().iter().zip(b.points()).map(|(&p, &q)| dist(p, q)).sum();
    sum / a.len() as f64
}

/// Final-point L2 distance.
pub fn fde(a: &Trajectory, b: &Trajectory) -> f64 {
    dist(a.endpoint(), b.endpoint())
}

fn check(proposals: &[Trajectory], gt: &Trajectory, k: usize) -> Result<()> {
    if k == 0 || k > proposals.len() {
        return Err(Error::KOutOfRange {
            k,
            available: proposals.len(),
        });
    }
    if let Some(bad) = proposals.iter().find(|p| p.len() != gt.len()) {
        return Err(Error::LengthMismatch {
            expected: gt.len(),
            found: bad.len(),
        });
    }
    Ok(())
}

fn min_over<F: Fn(&Trajectory, &Trajectory) -> f64>(proposals: &[Trajectory], gt: &Trajectory, k: usize, f: F) -> f64 {
    proposals[..k].iter().map(|p| f(p, gt)).fold(f64::INFINITY, f64::min)
}

pub fn min_ade(proposals: &[Trajectory], ground_truth: &Trajectory, k: usize) -> Result<MetricValue> {
    check(proposals, ground_truth, k)?;
    Ok(MetricValue {
        name: MetricName::MinAde,
        k,
        value: min_over(proposals, ground_truth, k, ade),
    })
}

pub fn min_fde(proposals: &[Trajectory], ground_truth: &Trajectory, k: usize) -> Result<MetricValue> {
    check(proposals, ground_truth, k)?;
    Ok(MetricValue {
        name: MetricName::MinFde,
        k,
        value: min_over(proposals, ground_truth, k, fde),
    })
}

pub fn evaluate(
    name: MetricName,
    proposals: &[Trajectory],
    ground_truth: &Trajectory,
    k: usize,
) -> Result<MetricValue> {
    match name {
        MetricName::MinAde => min_ade(proposals, ground_truth, k),
        MetricName::MinFde => min_fde(proposals, ground_truth, k),
    }
}
