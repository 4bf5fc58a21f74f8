//! Synthetic scenes and predictors for desk-scale runs of the pipeline.
//!
//! Scenes are laid out in a fixed frame: the target drives along +x towards
//! a junction at the origin. Predictors are not learned; they follow the
//! lanes they can see, fall back to constant-velocity extrapolation, and
//! degrade explicitly with [`corruption`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::ORIGINAL_TAG;
use crate::scene::{AgentHistory, Horizon, LanePolyline, Mode, ModeSet, Point, Scene, State, Trajectory};
use crate::seed;

pub const HORIZON: Horizon = Horizon {
    history_len: 5,
    future_len: 12,
    dt: 0.5,
};

/// Turn radius at the junction (m).
pub const TURN_RADIUS: f64 = 10.0;
/// Lateral spacing of distractor lanes (m).
const LANE_SPACING: f64 = 3.5;
/// Length of straight lane segments on each side of the junction (m).
const LANE_REACH: f64 = 80.0;
/// Target speed range (m/s).
const SPEED_RANGE: (f64, f64) = (4.0, 14.0);
/// Speed at which ground-truth drift has standard deviation `noise_sigma`.
const NOMINAL_SPEED: f64 = 10.0;

/// A lane is usable when the target is this close to it (m)...
const LANE_CAPTURE: f64 = 2.5;
/// ...and the lane direction agrees with the target heading (cosine).
const LANE_ALIGNMENT: f64 = 0.5;
/// Relative std of a predictor's speed estimate on clean input.
const SPEED_ERROR: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Straight,
    TJunction,
    Curve,
}

impl SceneKind {
    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Straight => "straight",
            SceneKind::TJunction => "t_junction",
            SceneKind::Curve => "curve",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SceneKind::Straight, SceneKind::TJunction, SceneKind::Curve]
            .into_iter()
            .find(|k| k.name() == s.replace('-', "_"))
            .ok_or_else(|| Error::Config(format!("unknown scene kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneTemplate {
    pub kind: SceneKind,
    pub n_agents: usize,
    pub n_lanes: usize,
    /// Ground-truth endpoint drift std at nominal speed (m).
    pub noise_sigma: f64,
}

impl SceneTemplate {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::invalid("n_agents", "must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

impl Default for SceneTemplate {
    fn default() -> Self {
        SceneTemplate {
            kind: SceneKind::TJunction,
            n_agents: 3,
            n_lanes: 6,
            noise_sigma: 0.5,
        }
    }
}

/// Polyline with cumulative arc length, for following lanes by distance.
struct Path {
    points: Vec<Point>,
    arc: Vec<f64>,
}

impl Path {
    fn new(points: Vec<Point>) -> Self {
        let mut arc = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += dist(points[i - 1], *p);
            }
            arc.push(acc);
        }
        Path { points, arc }
    }

    /// Closest point: (distance, arc length at projection, unit direction).
    fn project(&self, p: Point) -> (f64, f64, Point) {
        let mut best = (f64::INFINITY, 0.0, [1.0, 0.0]);
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let len = dist(a, b);
            if len == 0.0 {
                continue;
            }
            let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            let t = ((p[0] - a[0]) * u[0] + (p[1] - a[1]) * u[1]).clamp(0.0, len);
            let q = [a[0] + t * u[0], a[1] + t * u[1]];
            let d = dist(p, q);
            if d < best.0 {
                best = (d, self.arc[i] + t, u);
            }
        }
        best
    }

    /// Point at arc length `s`; extrapolates linearly past either end.
    fn at(&self, s: f64) -> Point {
        let n = self.points.len();
        let i = match self.arc.iter().position(|&a| a > s) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let len = self.arc[i + 1] - self.arc[i];
        let t = (s - self.arc[i]) / len;
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn straight_segment(from: Point, to: Point, step: f64) -> Vec<Point> {
    let n = (dist(from, to) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])]
        })
        .collect()
}

/// Approach along +x to the origin, quarter turn of `radius` towards
/// `side` (+1 left, −1 right), then straight.
fn turn_path(radius: f64, side: f64) -> Vec<Point> {
    let mut pts = straight_segment([-LANE_REACH, 0.0], [0.0, 0.0], 1.0);
    let steps = 16;
    for i in 1..=steps {
        let phi = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
        pts.push([radius * phi.sin(), side * radius * (1.0 - phi.cos())]);
    }
    let end = [radius, side * radius];
    pts.extend(
        straight_segment(end, [radius, side * (radius + LANE_REACH)], 1.0)
            .into_iter()
            .skip(1),
    );
    pts
}

fn lane_layout(kind: SceneKind, n_lanes: usize) -> Vec<Vec<Point>> {
    let mut lanes = match kind {
        SceneKind::TJunction => vec![turn_path(TURN_RADIUS, 1.0), turn_path(TURN_RADIUS, -1.0)],
        SceneKind::Straight => vec![straight_segment([-LANE_REACH, 0.0], [LANE_REACH, 0.0], 1.0)],
        SceneKind::Curve => vec![turn_path(3.0 * TURN_RADIUS, 1.0)],
    };
    // distractors: parallel lanes, oncoming on the left, same direction on the right
    let mut k = 1;
    while lanes.len() < n_lanes {
        let side = if lanes.len() % 2 == 0 { 1.0 } else { -1.0 };
        let y = side * LANE_SPACING * k as f64;
        lanes.push(if side > 0.0 {
            straight_segment([LANE_REACH, y], [-LANE_REACH, y], 1.0)
        } else {
            straight_segment([-LANE_REACH, y], [LANE_REACH, y], 1.0)
        });
        if side < 0.0 {
            k += 1;
        }
    }
    lanes.truncate(n_lanes);
    lanes
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Generates `n` scenes from `template`. Each scene draws from its own
/// stream keyed by scene_id, so scene `i` does not depend on `n`.
///
/// For `t_junction`, even scene indices turn left and odd ones turn right.
pub fn gen_scenes(template: &SceneTemplate, n: usize, seed: u64) -> Result<Vec<Scene>> {
    template.validate()?;
    let h = HORIZON;
    let lanes = lane_layout(template.kind, template.n_lanes);
    Ok((0..n)
        .map(|i| {
            let scene_id = format!("{}_{:05}", template.kind, i);
            let mut rng = seed::rng(seed::keyed(seed, &scene_id), 0);
            let speed = rng.random_range(SPEED_RANGE.0..SPEED_RANGE.1);
            let x0 = -rng.random_range(1.0..10.0);
            let times: Vec<f64> = (0..h.history_len).map(|j| j as f64 * h.dt).collect();
            let back = |j: usize| (h.history_len - 1 - j) as f64 * speed * h.dt;
            let target = AgentHistory {
                agent_id: "target".into(),
                is_target: true,
                states: times
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| State {
                        x: x0 - back(j),
                        y: 0.0,
                        t,
                    })
                    .collect(),
            };

            let route = match template.kind {
                SceneKind::TJunction => {
                    if i % 2 == 0 {
                        turn_path(TURN_RADIUS, 1.0)
                    } else {
                        turn_path(TURN_RADIUS, -1.0)
                    }
                }
                SceneKind::Straight => lane_layout(SceneKind::Straight, 1).remove(0),
                SceneKind::Curve => lane_layout(SceneKind::Curve, 1).remove(0),
            };
            let route = Path::new(route);
            let (_, s0, _) = route.project([x0, 0.0]);
            let sigma = template.noise_sigma * speed / NOMINAL_SPEED;
            let drift = [sigma * normal(&mut rng), sigma * normal(&mut rng)];
            let future: Vec<Point> = (0..h.future_len)
                .map(|j| {
                    let p = route.at(s0 + speed * h.dt * (j + 1) as f64);
                    let f = (j + 1) as f64 / h.future_len as f64;
                    [p[0] + f * drift[0], p[1] + f * drift[1]]
                })
                .collect();

            let mut agents = vec![target];
            for a in 1..template.n_agents {
                let lane_y = LANE_SPACING * (a.div_ceil(2)) as f64 * if a % 2 == 1 { 1.0 } else { -1.0 };
                let dir = if lane_y > 0.0 { -1.0 } else { 1.0 };
                let v = rng.random_range(SPEED_RANGE.0..SPEED_RANGE.1);
                let start = rng.random_range(-40.0..40.0);
                agents.push(AgentHistory {
                    agent_id: format!("agent_{a}"),
                    is_target: false,
                    states: times
                        .iter()
                        .map(|&t| State {
                            x: start + dir * v * t,
                            y: lane_y,
                            t,
                        })
                        .collect(),
                });
            }

            Scene {
                scene_id,
                dataset_tag: ORIGINAL_TAG.into(),
                agents,
                lanes: lanes
                    .iter()
                    .enumerate()
                    .map(|(l, pts)| LanePolyline {
                        lane_id: format!("lane_{l}"),
                        points: pts.clone(),
                    })
                    .collect(),
                ground_truth: Trajectory { points: future },
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPredictor {
    pub model_id: String,
    /// Endpoint noise scale on clean input (m).
    pub skill_sigma: f64,
    /// In [0, 1]: how strongly corrupted context inflates the noise.
    pub context_sensitivity: f64,
    pub mode_count: usize,
    pub seed: u64,
}

impl SyntheticPredictor {
    pub fn validate(&self) -> Result<()> {
        if !(self.skill_sigma > 0.0 && self.skill_sigma.is_finite()) {
            return Err(Error::invalid("skill_sigma", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.context_sensitivity) {
            return Err(Error::invalid("context_sensitivity", "must lie in [0, 1]"));
        }
        if self.mode_count == 0 {
            return Err(Error::invalid("mode_count", "must be at least 1"));
        }
        Ok(())
    }

    /// `m` members sharing every field except model_id and seed.
    pub fn ensemble(m: usize, skill_sigma: f64, context_sensitivity: f64, mode_count: usize, seed: u64) -> Vec<Self> {
        (0..m)
            .map(|i| SyntheticPredictor {
                model_id: format!("synth_{i}"),
                skill_sigma,
                context_sensitivity,
                mode_count,
                seed: seed::keyed(seed, &format!("synth_{i}")),
            })
            .collect()
    }
}

/// Lanes the target can follow from its current state: near enough and
/// heading the same way. Returns (path, arc length at projection).
fn usable_lanes(scene: &Scene) -> Vec<(Path, f64)> {
    let states = &scene.target().states;
    let Some(heading) = heading(states) else {
        return Vec::new();
    };
    let p = states[states.len() - 1].position();
    scene
        .lanes
        .iter()
        .filter_map(|lane| {
            let path = Path::new(lane.points.clone());
            let (d, s, u) = path.project(p);
            (d <= LANE_CAPTURE && u[0] * heading[0] + u[1] * heading[1] > LANE_ALIGNMENT).then_some((path, s))
        })
        .collect()
}

fn velocity(states: &[State]) -> Point {
    match states {
        [.., a, b] => {
            let dt = b.t - a.t;
            [(b.x - a.x) / dt, (b.y - a.y) / dt]
        }
        _ => [0.0, 0.0],
    }
}

fn heading(states: &[State]) -> Option<Point> {
    let v = velocity(states);
    let n = v[0].hypot(v[1]);
    (n > 1e-9).then(|| [v[0] / n, v[1] / n])
}

/// Context damage in [0, 1]: the fraction of all agent states sitting
/// exactly at (0, 0), plus 1 when the target has no usable lane.
pub fn corruption(scene: &Scene) -> f64 {
    let (zeroed, total) = scene
        .agents
        .iter()
        .flat_map(|a| &a.states)
        .fold((0usize, 0usize), |(z, n), s| {
            (z + usize::from(s.x == 0.0 && s.y == 0.0), n + 1)
        });
    let zeroed_frac = if total == 0 { 0.0 } else { zeroed as f64 / total as f64 };
    let missing_lanes = if usable_lanes(scene).is_empty() { 1.0 } else { 0.0 };
    (zeroed_frac + missing_lanes).min(1.0)
}

/// Predicts `mode_count` continuations of the target over `future_len`
/// steps. Mode `i` follows usable lane `i mod L` (or extrapolates at
/// constant velocity when no lane is usable), then receives endpoint noise
/// `N(0, s²·I)`, ramped linearly along the trajectory, with
/// `s = skill_sigma · (1 + context_sensitivity · corruption)`. On corrupted
/// input every mode is additionally shifted by one draw of
/// `N(0, (s · context_sensitivity · corruption)²·I)`, a member-specific
/// misreading that separates ensemble members without widening any one.
pub fn predict(predictor: &SyntheticPredictor, scene: &Scene, future_len: usize) -> Result<ModeSet> {
    predictor.validate()?;
    let mut rng = seed::rng(seed::keyed(predictor.seed, &scene.scene_id), 0);
    let corruption = corruption(scene);
    let inflation = 1.0 + predictor.context_sensitivity * corruption;
    let s = predictor.skill_sigma * inflation;

    let states = &scene.target().states;
    let p = states[states.len() - 1].position();
    let dt = match states.as_slice() {
        [.., a, b] => b.t - a.t,
        _ => HORIZON.dt,
    };
    let v = velocity(states);
    // speed-estimate error, common to every mode of this prediction
    let speed_factor = 1.0 + SPEED_ERROR * inflation * normal(&mut rng);
    let speed = v[0].hypot(v[1]) * speed_factor;
    let lanes = usable_lanes(scene);

    let centers: Vec<Vec<Point>> = (0..predictor.mode_count)
        .map(|i| {
            (1..=future_len)
                .map(|j| {
                    let travelled = speed * dt * j as f64;
                    match lanes.get(i % lanes.len().max(1)) {
                        Some((path, s0)) => path.at(s0 + travelled),
                        None => [
                            p[0] + v[0] * speed_factor * dt * j as f64,
                            p[1] + v[1] * speed_factor * dt * j as f64,
                        ],
                    }
                })
                .collect()
        })
        .collect();

    // member-wide misreading of corrupted context: zero on clean input, and
    // shared by every mode so it moves the prediction without widening it
    let bias_scale = s * predictor.context_sensitivity * corruption;
    let bias = [bias_scale * normal(&mut rng), bias_scale * normal(&mut rng)];
    let trajectories: Vec<Vec<Point>> = centers
        .into_iter()
        .map(|c| {
            let e = [s * normal(&mut rng) + bias[0], s * normal(&mut rng) + bias[1]];
            c.into_iter()
                .enumerate()
                .map(|(j, q)| {
                    let f = (j + 1) as f64 / future_len as f64;
                    [q[0] + f * e[0], q[1] + f * e[1]]
                })
                .collect()
        })
        .collect();

    let endpoints: Vec<Point> = trajectories.iter().map(|t| t[t.len() - 1]).collect();
    let weights = spread_weights(&endpoints, s);
    ModeSet::new(
        predictor.model_id.clone(),
        trajectories
            .into_iter()
            .zip(weights)
            .map(|(points, weight)| Mode {
                weight,
                trajectory: Trajectory { points },
            })
            .collect(),
    )
}

/// Softmax of −(distance to endpoint centroid)/scale.
fn spread_weights(endpoints: &[Point], scale: f64) -> Vec<f64> {
    let n = endpoints.len() as f64;
    let c = endpoints
        .iter()
        .fold([0.0, 0.0], |acc, e| [acc[0] + e[0] / n, acc[1] + e[1] / n]);
    let logits: Vec<f64> = endpoints.iter().map(|e| -dist(*e, c) / scale).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

/// Mean distance of a mode set's endpoints from their centroid (m).
pub fn endpoint_spread(set: &ModeSet) -> f64 {
    let ends: Vec<Point> = set.modes.iter().map(|m| m.trajectory.endpoint()).collect();
    let n = ends.len() as f64;
    let c = ends
        .iter()
        .fold([0.0, 0.0], |acc, e| [acc[0] + e[0] / n, acc[1] + e[1] / n]);
    ends.iter().map(|e| dist(*e, c)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{blackout, lane_deletion, revert_ego};
    use crate::scene::WEIGHT_SUM_TOL;

    fn template(kind: SceneKind, noise_sigma: f64) -> SceneTemplate {
        SceneTemplate {
            kind,
            n_agents: 3,
            n_lanes: 6,
            noise_sigma,
        }
    }

    fn predictor(seed: u64, cs: f64, modes: usize) -> SyntheticPredictor {
        SyntheticPredictor {
            model_id: format!("p{seed}"),
            skill_sigma: 1.0,
            context_sensitivity: cs,
            mode_count: modes,
            seed,
        }
    }

    #[test]
    fn scenes_are_valid_and_deterministic() {
        for kind in [SceneKind::Straight, SceneKind::TJunction, SceneKind::Curve] {
            let a = gen_scenes(&template(kind, 0.5), 20, 3).unwrap();
            assert_eq!(a.len(), 20);
            for s in &a {
                s.validate().unwrap();
                s.validate_horizon(HORIZON.future_len).unwrap();
                assert_eq!(s.agents.len(), 3);
                assert_eq!(s.lanes.len(), 6);
                assert_eq!(corruption(s), 0.0, "{}", s.scene_id);
            }
            assert_eq!(a, gen_scenes(&template(kind, 0.5), 20, 3).unwrap());
            assert_ne!(a, gen_scenes(&template(kind, 0.5), 20, 4).unwrap());
        }
        assert!(gen_scenes(
            &SceneTemplate {
                n_agents: 0,
                ..SceneTemplate::default()
            },
            1,
            0
        )
        .is_err());
    }

    #[test]
    fn t_junction_splits_evenly() {
        let scenes = gen_scenes(&template(SceneKind::TJunction, 0.5), 100, 11).unwrap();
        let left = scenes.iter().filter(|s| s.ground_truth.endpoint()[1] > 0.0).count();
        assert_eq!(left, 50);
    }

    #[test]
    fn noiseless_straight_is_linear_continuation() {
        for s in gen_scenes(&template(SceneKind::Straight, 0.0), 10, 5).unwrap() {
            let h = &s.target().states;
            let v = velocity(h);
            let last = h[h.len() - 1];
            for (j, p) in s.ground_truth.points().iter().enumerate() {
                let t = (j + 1) as f64 * HORIZON.dt;
                assert!((p[0] - (last.x + v[0] * t)).abs() < 1e-9);
                assert_eq!(p[1], 0.0);
            }
        }
    }

    #[test]
    fn prediction_shape_and_determinism() {
        let scene = &gen_scenes(&template(SceneKind::TJunction, 0.5), 1, 0).unwrap()[0];
        let a = predict(&predictor(1, 1.0, 6), scene, 12).unwrap();
        assert_eq!(a.modes.len(), 6);
        assert_eq!(a.horizon(), 12);
        assert!((a.modes.iter().map(|m| m.weight).sum::<f64>() - 1.0).abs() < WEIGHT_SUM_TOL);
        assert_eq!(a, predict(&predictor(1, 1.0, 6), scene, 12).unwrap());
        let b = predict(&predictor(2, 1.0, 6), scene, 12).unwrap();
        assert_ne!(
            a.modes.iter().map(|m| m.trajectory.endpoint()).collect::<Vec<_>>(),
            b.modes.iter().map(|m| m.trajectory.endpoint()).collect::<Vec<_>>()
        );
        let one = predict(&predictor(1, 1.0, 1), scene, 12).unwrap();
        assert_eq!(one.modes.len(), 1);
        assert_eq!(one.modes[0].weight, 1.0);
    }

    #[test]
    fn modes_cover_both_turns() {
        let scene = &gen_scenes(&template(SceneKind::TJunction, 0.0), 1, 0).unwrap()[0];
        let set = predict(&predictor(9, 1.0, 4), scene, 12).unwrap();
        let left = set.modes.iter().filter(|m| m.trajectory.endpoint()[1] > 5.0).count();
        let right = set.modes.iter().filter(|m| m.trajectory.endpoint()[1] < -5.0).count();
        assert_eq!((left, right), (2, 2));
    }

    #[test]
    fn corruption_measures() {
        let scene = gen_scenes(&template(SceneKind::TJunction, 0.5), 1, 0)
            .unwrap()
            .remove(0);
        // 3 of 5 states zeroed for every agent
        assert!((corruption(&blackout(&scene)) - 0.6).abs() < 1e-12);
        // reversed heading points away from every usable lane
        assert_eq!(corruption(&revert_ego(&scene)), 1.0);
        let bare = Scene {
            lanes: vec![],
            ..scene.clone()
        };
        assert_eq!(corruption(&bare), 1.0);
        assert!(corruption(&lane_deletion(&scene, 1)) <= 1.0);
    }

    #[test]
    fn blackout_widens_single_lane_prediction() {
        // one usable lane: every mode shares a center, so spread scales with s
        for seed in 0..20 {
            let scene = gen_scenes(&template(SceneKind::Straight, 0.5), 1, seed)
                .unwrap()
                .remove(0);
            let p = predictor(seed, 1.0, 6);
            let clean = endpoint_spread(&predict(&p, &scene, 12).unwrap());
            let dark = endpoint_spread(&predict(&p, &blackout(&scene), 12).unwrap());
            assert!(dark > clean, "seed {seed}: {dark} <= {clean}");
        }
    }

    #[test]
    fn spread_grows_with_corruption_on_average() {
        let scene = gen_scenes(&template(SceneKind::TJunction, 0.5), 1, 2)
            .unwrap()
            .remove(0);
        let dark = blackout(&scene);
        let mean_spread = |s: &Scene, cs: f64| {
            (0..100)
                .map(|seed| endpoint_spread(&predict(&predictor(seed, cs, 6), s, 12).unwrap()))
                .sum::<f64>()
                / 100.0
        };
        let clean = mean_spread(&scene, 1.0);
        let (weak, strong) = (mean_spread(&dark, 0.5), mean_spread(&dark, 1.0));
        assert!(clean < weak && weak < strong, "{clean} {weak} {strong}");
    }

    #[test]
    fn predictor_validation() {
        assert!(predict(
            &SyntheticPredictor {
                skill_sigma: 0.0,
                ..predictor(0, 1.0, 2)
            },
            &gen_scenes(&SceneTemplate::default(), 1, 0).unwrap()[0],
            12
        )
        .is_err());
        assert!(SyntheticPredictor {
            mode_count: 0,
            ..predictor(0, 1.0, 2)
        }
        .validate()
        .is_err());
        assert!(SyntheticPredictor {
            context_sensitivity: 1.5,
            ..predictor(0, 1.0, 2)
        }
        .validate()
        .is_err());
    }
}
