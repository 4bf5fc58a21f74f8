//! Out-of-distribution scene manipulations.
//!
//! | op           | effect                                                      |
//! |--------------|-------------------------------------------------------------|
//! | RevertEGO    | target positions in reverse order, timestamps kept          |
//! | ScrambleEGO  | target positions shuffled (Fisher–Yates), timestamps kept   |
//! | Blackout     | earliest ⌈T_in/2⌉ positions of every agent set to (0, 0)    |
//! | LaneDeletion | keep a uniformly random ⌈L/4⌉ of the lanes                  |

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Point, Scene};
use crate::seed;

/// Tag carried by unperturbed scenes.
pub const ORIGINAL_TAG: &str = "Original";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Perturbation {
    #[serde(rename = "RevertEGO")]
    RevertEgo,
    #[serde(rename = "ScrambleEGO")]
    ScrambleEgo,
    Blackout,
    LaneDeletion,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [
        Perturbation::RevertEgo,
        Perturbation::ScrambleEgo,
        Perturbation::Blackout,
        Perturbation::LaneDeletion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Perturbation::RevertEgo => "RevertEGO",
            Perturbation::ScrambleEgo => "ScrambleEGO",
            Perturbation::Blackout => "Blackout",
            Perturbation::LaneDeletion => "LaneDeletion",
        }
    }

    // ChaCha stream per op so ops sharing a scene seed draw independently
    fn stream(self) -> u64 {
        self as u64 + 1
    }

    pub fn apply_to(self, scene: &Scene, seed: u64) -> Scene {
        match self {
            Perturbation::RevertEgo => revert_ego(scene),
            Perturbation::ScrambleEgo => scramble_ego(scene, seed),
            Perturbation::Blackout => blackout(scene),
            Perturbation::LaneDeletion => lane_deletion(scene, seed),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    /// Accepts the display label or its snake_case form, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        Perturbation::ALL
            .into_iter()
            .find(|p| p.label().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown perturbation {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    ops: Vec<Perturbation>,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(ops: Vec<Perturbation>, seed: u64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::Config("perturbation list is empty".into()));
        }
        for (i, op) in ops.iter().enumerate() {
            if ops[..i].contains(op) {
                return Err(Error::Config(format!("duplicate perturbation {op}")));
            }
        }
        Ok(PerturbationSpec { ops, seed })
    }

    /// Parses a comma-separated list such as `revert_ego,blackout`.
    pub fn parse(list: &str, seed: u64) -> Result<Self> {
        let ops = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        Self::new(ops, seed)
    }

    pub fn ops(&self) -> &[Perturbation] {
        &self.ops
    }

    /// Op labels joined with `+`, e.g. `Blackout+ScrambleEGO+LaneDeletion`.
    pub fn tag(&self) -> String {
        self.ops.iter().map(|p| p.label()).collect::<Vec<_>>().join("+")
    }
}

fn retag(scene: &mut Scene, op: Perturbation) {
    scene.dataset_tag = if scene.dataset_tag.is_empty() || scene.dataset_tag == ORIGINAL_TAG {
        op.label().to_string()
    } else {
        format!("{}+{}", scene.dataset_tag, op.label())
    };
}

fn target_positions(scene: &Scene) -> Vec<Point> {
    scene.target().states.iter().map(|s| s.position()).collect()
}

fn set_target_positions(scene: &mut Scene, positions: &[Point]) {
    for (s, p) in scene.target_mut().states.iter_mut().zip(positions) {
        s.x = p[0];
        s.y = p[1];
    }
}

pub fn revert_ego(scene: &Scene) -> Scene {
    let mut out = scene.clone();
    let mut pos = target_positions(scene);
    pos.reverse();
    set_target_positions(&mut out, &pos);
    retag(&mut out, Perturbation::RevertEgo);
    out
}

pub fn scramble_ego(scene: &Scene, seed: u64) -> Scene {
    let mut out = scene.clone();
    let mut pos = target_positions(scene);
    let mut rng = seed::rng(seed, Perturbation::ScrambleEgo.stream());
    pos.shuffle(&mut rng);
    set_target_positions(&mut out, &pos);
    retag(&mut out, Perturbation::ScrambleEgo);
    out
}

pub fn blackout(scene: &Scene) -> Scene {
    let mut out = scene.clone();
    for agent in &mut out.agents {
        let n = agent.states.len().div_ceil(2);
        for s in &mut agent.states[..n] {
            s.x = 0.0;
            s.y = 0.0;
        }
    }
    retag(&mut out, Perturbation::Blackout);
    out
}

pub fn lane_deletion(scene: &Scene, seed: u64) -> Scene {
    let mut out = scene.clone();
    let total = scene.lanes.len();
    let keep = total.div_ceil(4);
    let mut rng = seed::rng(seed, Perturbation::LaneDeletion.stream());
    let mut kept = index::sample(&mut rng, total, keep).into_vec();
    kept.sort_unstable();
    out.lanes = kept.into_iter().map(|i| scene.lanes[i].clone()).collect();
    retag(&mut out, Perturbation::LaneDeletion);
    out
}

/// Applies the listed ops in order to every scene. Each scene's seed is
/// `spec.seed ⊕ hash(scene_id)`, so output does not depend on scene order.
pub fn apply(spec: &PerturbationSpec, scenes: &[Scene]) -> Vec<Scene> {
    let tag = spec.tag();
    scenes
        .iter()
        .map(|scene| {
            let s = seed::keyed(spec.seed, &scene.scene_id);
            let mut out = spec.ops.iter().fold(scene.clone(), |acc, op| op.apply_to(&acc, s));
            out.dataset_tag = tag.clone();
            out
        })
        .collect()
}
