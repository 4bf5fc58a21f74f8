//! Scene and prediction data model, with JSONL readers and writers.
//!
//! Coordinates are meters in the target agent's frame at its last observed
//! state. Scene files hold one [`Scene`] per line; prediction files hold one
//! [`Prediction`] (a [`ModeSet`] tagged with its `scene_id`) per line. Unknown
//! keys are ignored on read.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position in meters.
pub type Point = [f64; 2];

/// Tolerance on `Σ weights = 1` for mode sets and mixtures.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Sequence-length and sampling-interval settings shared by generators and
/// readers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Observed history steps, `T_in`.
    pub history_len: usize,
    /// Predicted steps, `T_out`.
    pub future_len: usize,
    /// Seconds between consecutive steps.
    pub dt: f64,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon {
            history_len: 5,
            future_len: 12,
            dt: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub(crate) points: Vec<Point>,
}

impl Trajectory {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let t = Trajectory { points };
        t.validate("points")?;
        Ok(t)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn endpoint(&self) -> Point {
        *self.points.last().expect("trajectory is nonempty")
    }

    fn validate(&self, field: &str) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid(field, "trajectory must have at least one point"));
        }
        check_finite_points(field, &self.points)
    }
}

/// One observed state. Serialized as `[x, y, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl From<[f64; 3]> for State {
    fn from([x, y, t]: [f64; 3]) -> Self {
        State { x, y, t }
    }
}

impl From<State> for [f64; 3] {
    fn from(s: State) -> Self {
        [s.x, s.y, s.t]
    }
}

impl State {
    pub fn position(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentHistory {
    pub agent_id: String,
    pub is_target: bool,
    pub states: Vec<State>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanePolyline {
    pub lane_id: String,
    pub points: Vec<Point>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub scene_id: String,
    pub dataset_tag: String,
    pub agents: Vec<AgentHistory>,
    pub lanes: Vec<LanePolyline>,
    pub ground_truth: Trajectory,
}

impl Scene {
    /// Checks every structural invariant. Never repairs.
    pub fn validate(&self) -> Result<()> {
        let targets = self.agents.iter().filter(|a| a.is_target).count();
        if targets != 1 {
            return Err(Error::invalid(
                "is_target",
                format!("expected exactly one target agent, found {targets}"),
            ));
        }
        for agent in &self.agents {
            if agent.states.is_empty() {
                return Err(Error::invalid(
                    "states",
                    format!("agent {} has an empty history", agent.agent_id),
                ));
            }
            for s in &agent.states {
                if !(s.x.is_finite() && s.y.is_finite() && s.t.is_finite()) {
                    return Err(Error::invalid(
                        "states",
                        format!("agent {} has a non-finite state", agent.agent_id),
                    ));
                }
            }
            if agent.states.windows(2).any(|w| w[1].t <= w[0].t) {
                return Err(Error::invalid(
                    "timestamps",
                    format!("agent {} timestamps are not strictly increasing", agent.agent_id),
                ));
            }
        }
        let grid: Vec<f64> = self.agents[0].states.iter().map(|s| s.t).collect();
        for agent in &self.agents[1..] {
            let same = agent.states.len() == grid.len() && agent.states.iter().zip(&grid).all(|(s, &t)| s.t == t);
            if !same {
                return Err(Error::invalid(
                    "timestamps",
                    format!("agent {} is not on the common timestamp grid", agent.agent_id),
                ));
            }
        }
        for lane in &self.lanes {
            if lane.points.len() < 2 {
                return Err(Error::invalid(
                    "lanes",
                    format!("lane {} has fewer than 2 points", lane.lane_id),
                ));
            }
            check_finite_points("lanes", &lane.points)?;
        }
        self.ground_truth.validate("ground_truth")
    }

    /// Additionally checks the ground truth against the configured `T_out`.
    pub fn validate_horizon(&self, future_len: usize) -> Result<()> {
        self.validate()?;
        if self.ground_truth.len() != future_len {
            return Err(Error::invalid(
                "ground_truth",
                format!(
                    "length {} does not match the prediction horizon {future_len}",
                    self.ground_truth.len()
                ),
            ));
        }
        Ok(())
    }

    pub fn target(&self) -> &AgentHistory {
        self.agents
            .iter()
            .find(|a| a.is_target)
            .expect("validated scene has a target")
    }

    pub(crate) fn target_mut(&mut self) -> &mut AgentHistory {
        self.agents
            .iter_mut()
            .find(|a| a.is_target)
            .expect("validated scene has a target")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub weight: f64,
    #[serde(rename = "points")]
    pub trajectory: Trajectory,
}

/// One model's multi-modal prediction for one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub model_id: String,
    pub modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(model_id: impl Into<String>, modes: Vec<Mode>) -> Result<Self> {
        let m = ModeSet {
            model_id: model_id.into(),
            modes,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.modes.first() else {
            return Err(Error::invalid("modes", "mode set is empty"));
        };
        let len = first.trajectory.len();
        let mut sum = 0.0;
        for mode in &self.modes {
            if !mode.weight.is_finite() || mode.weight < 0.0 {
                return Err(Error::invalid(
                    "weight",
                    format!("{} is not a probability", mode.weight),
                ));
            }
            sum += mode.weight;
            mode.trajectory.validate("points")?;
            if mode.trajectory.len() != len {
                return Err(Error::invalid(
                    "points",
                    format!("mode lengths differ ({} vs {len})", mode.trajectory.len()),
                ));
            }
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("weight", format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.modes[0].trajectory.len()
    }

    /// Mode indices by descending weight; ties keep the lower index first.
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.modes.len()).collect();
        // stable sort keeps index order on ties
        idx.sort_by(|&a, &b| self.modes[b].weight.total_cmp(&self.modes[a].weight));
        idx
    }

    /// Trajectories by descending weight (see [`ModeSet::ranked_indices`]).
    pub fn ranked_trajectories(&self) -> Vec<Trajectory> {
        self.ranked_indices()
            .into_iter()
            .map(|i| self.modes[i].trajectory.clone())
            .collect()
    }
}

/// A prediction-file record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scene_id: String,
    pub model_id: String,
    pub modes: Vec<Mode>,
}

impl Prediction {
    pub fn from_mode_set(scene_id: impl Into<String>, set: ModeSet) -> Self {
        Prediction {
            scene_id: scene_id.into(),
            model_id: set.model_id,
            modes: set.modes,
        }
    }

    pub fn into_mode_set(self) -> (String, ModeSet) {
        (
            self.scene_id,
            ModeSet {
                model_id: self.model_id,
                modes: self.modes,
            },
        )
    }
}

fn check_finite_points(field: &str, points: &[Point]) -> Result<()> {
    if points.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "non-finite coordinate"))
    }
}

/// Reads a line-delimited JSON file, validating each record. Blank lines are
/// skipped.
pub fn read_jsonl<T, F>(path: &Path, mut validate: F) -> Result<Vec<T>>
where
    T: DeserializeOwned,
    F: FnMut(&T) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        validate(&rec).map_err(|e| e.at_line(line_no))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scenes(path: &Path) -> Result<Vec<Scene>> {
    read_jsonl(path, Scene::validate)
}

/// Like [`read_scenes`], also requiring every ground truth to have `future_len` points.
pub fn read_scenes_with_horizon(path: &Path, future_len: usize) -> Result<Vec<Scene>> {
    read_jsonl(path, |s: &Scene| s.validate_horizon(future_len))
}

pub fn write_scenes(scenes: &[Scene], path: &Path) -> Result<()> {
    write_jsonl(path, scenes)
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    read_jsonl(path, |p: &Prediction| {
        ModeSet {
            model_id: p.model_id.clone(),
            modes: p.modes.clone(),
        }
        .validate()
    })
}

pub fn write_predictions(predictions: &[Prediction], path: &Path) -> Result<()> {
    write_jsonl(path, predictions)
}
