//! The discrete approximate posterior: `M` mode sets for one scene, plus the
//! two ways of extracting `k` output trajectories from predictions.
//!
//! * [`topk`] for a single model: its `k` highest-weight modes.
//! * [`mbrm`] for an ensemble: minimize the expected ADE to all member modes,
//!   weighted by `w_n^m / M`, over subsets of a candidate pool.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ade;
use crate::scene::{ModeSet, Trajectory};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub scene_id: String,
    pub members: Vec<ModeSet>,
}

impl EnsemblePrediction {
    pub fn new(scene_id: impl Into<String>, members: Vec<ModeSet>) -> Result<Self> {
        let e = EnsemblePrediction {
            scene_id: scene_id.into(),
            members,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.members.first() else {
            return Err(Error::invalid("members", "ensemble has no members"));
        };
        let horizon = first.horizon();
        let mut ids = HashSet::new();
        for m in &self.members {
            m.validate()?;
            if m.horizon() != horizon {
                return Err(Error::invalid(
                    "points",
                    format!("member {} has horizon {}, expected {horizon}", m.model_id, m.horizon()),
                ));
            }
            if !ids.insert(m.model_id.as_str()) {
                return Err(Error::invalid("model_id", format!("duplicate member {}", m.model_id)));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn horizon(&self) -> usize {
        self.members[0].horizon()
    }

    /// Every member mode, member-major.
    pub fn all_modes(&self) -> Vec<Trajectory> {
        self.members
            .iter()
            .flat_map(|m| m.modes.iter().map(|mode| mode.trajectory.clone()))
            .collect()
    }
}

/// The `k` highest-weight trajectories, weight-descending, ties by lower index.
pub fn topk(member: &ModeSet, k: usize) -> Result<Vec<Trajectory>> {
    if k == 0 || k > member.modes.len() {
        return Err(Error::KOutOfRange {
            k,
            available: member.modes.len(),
        });
    }
    Ok(member
        .ranked_indices()
        .into_iter()
        .take(k)
        .map(|i| member.modes[i].trajectory.clone())
        .collect())
}

/// ADE from every weighted member mode to every pool candidate.
struct CostTable {
    /// `(member, w_n^m / M)` per target, member-major.
    targets: Vec<(usize, f64)>,
    /// `dist[t * pool + c]`.
    dist: Vec<f64>,
    pool: usize,
    members: usize,
}

impl CostTable {
    fn new(ensemble: &EnsemblePrediction, pool: &[Trajectory]) -> Result<Self> {
        let horizon = ensemble.horizon();
        if let Some(bad) = pool.iter().find(|c| c.len() != horizon) {
            return Err(Error::LengthMismatch {
                expected: horizon,
                found: bad.len(),
            });
        }
        let m = ensemble.size() as f64;
        let mut targets = Vec::new();
        let mut dist = Vec::new();
        for (mi, member) in ensemble.members.iter().enumerate() {
            let total: f64 = member.modes.iter().map(|x| x.weight).sum();
            for mode in &member.modes {
                targets.push((mi, mode.weight / total / m));
                dist.extend(pool.iter().map(|c| ade(&mode.trajectory, c)));
            }
        }
        Ok(CostTable {
            targets,
            dist,
            pool: pool.len(),
            members: ensemble.size(),
        })
    }

    /// `Σ_m Σ_n (w_n^m/M) · best[t]`, summed per member, then across members.
    fn objective(&self, best: &[f64]) -> f64 {
        let mut per_member = vec![0.0; self.members];
        for (t, &(mi, w)) in self.targets.iter().enumerate() {
            per_member[mi] += w * best[t];
        }
        per_member.iter().sum()
    }

    fn objective_of(&self, selected: &[usize]) -> f64 {
        let best: Vec<f64> = (0..self.targets.len())
            .map(|t| {
                selected
                    .iter()
                    .map(|&c| self.dist[t * self.pool + c])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        self.objective(&best)
    }
}

fn check_pool(k: usize, pool: usize) -> Result<()> {
    if k == 0 || k > pool {
        return Err(Error::KOutOfRange { k, available: pool });
    }
    Ok(())
}

/// MBRM output plus the pool indices it came from, in selection order.
#[derive(Clone, Debug, PartialEq)]
pub struct MbrmSelection {
    pub indices: Vec<usize>,
    pub trajectories: Vec<Trajectory>,
    pub objective: f64,
}

/// Greedy forward selection of `k` trajectories from `candidate_pool`
/// (default: every member mode). Each step adds the candidate that lowers the
/// weighted expected min-ADE objective most; ties go to the lower pool index.
/// The greedy set is then refined by single swaps while any swap helps.
pub fn mbrm(ensemble: &EnsemblePrediction, k: usize, candidate_pool: Option<&[Trajectory]>) -> Result<Vec<Trajectory>> {
    mbrm_select(ensemble, k, candidate_pool).map(|s| s.trajectories)
}

pub fn mbrm_select(
    ensemble: &EnsemblePrediction,
    k: usize,
    candidate_pool: Option<&[Trajectory]>,
) -> Result<MbrmSelection> {
    ensemble.validate()?;
    let default_pool;
    let pool = match candidate_pool {
        Some(p) => p,
        None => {
            default_pool = ensemble.all_modes();
            &default_pool
        }
    };
    check_pool(k, pool.len())?;
    let table = CostTable::new(ensemble, pool)?;
    let n_targets = table.targets.len();

    let mut best = vec![f64::INFINITY; n_targets];
    let mut chosen = vec![false; pool.len()];
    let mut indices = Vec::with_capacity(k);
    let mut objective = f64::INFINITY;
    let mut trial = vec![0.0; n_targets];
    for _ in 0..k {
        let mut pick: Option<(usize, f64)> = None;
        for c in (0..pool.len()).filter(|&c| !chosen[c]) {
            for t in 0..n_targets {
                trial[t] = best[t].min(table.dist[t * table.pool + c]);
            }
            let value = table.objective(&trial);
            if pick.is_none_or(|(_, v)| value < v) {
                pick = Some((c, value));
            }
        }
        let (c, value) = pick.expect("pool has an unchosen candidate");
        chosen[c] = true;
        indices.push(c);
        objective = value;
        for (t, b) in best.iter_mut().enumerate() {
            *b = b.min(table.dist[t * table.pool + c]);
        }
    }
    // refine: best single swap of a chosen for an unchosen candidate, until
    // no swap improves; strictly decreasing, so this terminates
    loop {
        let mut swap: Option<(usize, usize, f64)> = None;
        for slot in 0..indices.len() {
            for c in (0..pool.len()).filter(|&c| !chosen[c]) {
                let mut trial_set = indices.clone();
                trial_set[slot] = c;
                let value = table.objective_of(&trial_set);
                if value < swap.map_or(objective, |(_, _, v)| v) - 1e-15 * objective.abs() {
                    swap = Some((slot, c, value));
                }
            }
        }
        let Some((slot, c, value)) = swap else { break };
        chosen[indices[slot]] = false;
        chosen[c] = true;
        indices[slot] = c;
        objective = value;
    }
    Ok(MbrmSelection {
        trajectories: indices.iter().map(|&i| pool[i].clone()).collect(),
        indices,
        objective,
    })
}

/// The MBRM objective of an arbitrary selection.
pub fn mbrm_objective(ensemble: &EnsemblePrediction, selected: &[Trajectory]) -> Result<f64> {
    ensemble.validate()?;
    check_pool(selected.len(), selected.len())?;
    let table = CostTable::new(ensemble, selected)?;
    let all: Vec<usize> = (0..selected.len()).collect();
    Ok(table.objective_of(&all))
}

/// Exact MBRM by enumerating every `k`-subset of the pool, lexicographic
/// order, first minimum wins. Exponential; intended for pools of a dozen or
/// fewer candidates.
pub fn mbrm_exhaustive(
    ensemble: &EnsemblePrediction,
    k: usize,
    candidate_pool: Option<&[Trajectory]>,
) -> Result<MbrmSelection> {
    ensemble.validate()?;
    let default_pool;
    let pool = match candidate_pool {
        Some(p) => p,
        None => {
            default_pool = ensemble.all_modes();
            &default_pool
        }
    };
    check_pool(k, pool.len())?;
    let table = CostTable::new(ensemble, pool)?;

    let mut subset: Vec<usize> = (0..k).collect();
    let mut best = (subset.clone(), table.objective_of(&subset));
    loop {
        // advance to the next lexicographic k-combination
        let n = pool.len();
        let Some(i) = (0..k).rev().find(|&i| subset[i] != i + n - k) else {
            break;
        };
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
        let v = table.objective_of(&subset);
        if v < best.1 {
            best = (subset.clone(), v);
        }
    }
    Ok(MbrmSelection {
        trajectories: best.0.iter().map(|&i| pool[i].clone()).collect(),
        indices: best.0,
        objective: best.1,
    })
}
