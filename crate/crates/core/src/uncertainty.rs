//! Monte-Carlo decomposition of predictive uncertainty into total, aleatoric
//! and epistemic parts, all in nats.
//!
//! With members `p_m = p(y | x, W_m)`, `m = 1..M`, equally weighted:
//!
//! ```text
//! total      Ĥ = −(1/N) Σ_n log( (1/M) Σ_m p_m(y_n) ),  y_n from every member, N′ each
//! aleatoric  (1/M) Σ_m −(1/N_m) Σ_n log p_m(y_n^m),      y_n^m ~ p_m
//! epistemic  total − aleatoric                           (mutual information I(y, W))
//! ```
//!
//! Each `p_m` is the endpoint mixture of member `m`'s modes.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsemblePrediction;
use crate::error::{Error, Result};
use crate::gmm::{gmm_from_modes, log_sum_exp, GaussianMixture2D};
use crate::scene::Trajectory;
use crate::seed;

// ChaCha streams of a member's sub-seed
const ALEATORIC_STREAM: u64 = 0;
const TOTAL_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyTriple {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

impl UncertaintyTriple {
    /// `epistemic = total − aleatoric`.
    pub fn from_parts(total: f64, aleatoric: f64) -> Self {
        UncertaintyTriple {
            total,
            aleatoric,
            epistemic: total - aleatoric,
        }
    }
}

/// How each member's random stream is derived from [`EstimatorConfig::seed`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubSeeding {
    /// `seed ⊕ member index`.
    #[default]
    MemberIndex,
    /// `seed ⊕ hash(model_id)`; members are also processed in a canonical
    /// order, so results are bit-identical under any member permutation.
    ModelIdHash,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// `N′`, samples drawn from each member for the total-entropy term.
    pub n_per_model: usize,
    pub seed: u64,
    /// Isotropic per-mode covariance in m², see [`gmm_from_modes`].
    pub bandwidth: f64,
    /// Score the aleatoric term on the same draws used for the total term
    /// (N′ per member) instead of independent draws of N′·M per member.
    #[serde(default)]
    pub reuse_samples: bool,
    #[serde(default)]
    pub sub_seeding: SubSeeding,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            n_per_model: 1000,
            seed: 0,
            bandwidth: 1.0,
            reuse_samples: false,
            sub_seeding: SubSeeding::MemberIndex,
        }
    }
}

impl EstimatorConfig {
    fn validate(&self) -> Result<()> {
        if self.n_per_model == 0 {
            return Err(Error::Config("n_per_model must be at least 1".into()));
        }
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

fn mean_neg_log_density(g: &GaussianMixture2D, samples: &[[f64; 2]]) -> f64 {
    -samples.iter().map(|&y| g.log_density(y)).sum::<f64>() / samples.len() as f64
}

/// `Ĥ = −(1/n) Σ log g(y_i)` over `n` draws from `g` itself.
pub fn member_entropy(g: &GaussianMixture2D, n: usize, seed: u64) -> f64 {
    let samples = g.sample_stream(n.max(1), seed, ALEATORIC_STREAM);
    mean_neg_log_density(g, &samples)
}

/// Decomposes the uncertainty of an ensemble of mode-set predictions.
pub fn decompose(ensemble: &EnsemblePrediction, config: &EstimatorConfig) -> Result<UncertaintyTriple> {
    config.validate()?;
    ensemble.validate()?;
    let mut members: Vec<(u64, &str, GaussianMixture2D)> = ensemble
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let sub = match config.sub_seeding {
                SubSeeding::MemberIndex => config.seed ^ i as u64,
                SubSeeding::ModelIdHash => seed::keyed(config.seed, &m.model_id),
            };
            gmm_from_modes(m, config.bandwidth).map(|g| (sub, m.model_id.as_str(), g))
        })
        .collect::<Result<_>>()?;
    if config.sub_seeding == SubSeeding::ModelIdHash {
        members.sort_by(|a, b| a.1.cmp(b.1));
    }
    let (seeds, mixtures): (Vec<u64>, Vec<GaussianMixture2D>) = members.into_iter().map(|(s, _, g)| (s, g)).unzip();
    Ok(decompose_seeded(&mixtures, &seeds, config))
}

/// Same estimator for members that already are mixtures, e.g. predictors
/// with a native GMM head. Sub-seeds are `seed ⊕ index`.
pub fn decompose_mixtures(mixtures: &[GaussianMixture2D], config: &EstimatorConfig) -> Result<UncertaintyTriple> {
    config.validate()?;
    if mixtures.is_empty() {
        return Err(Error::invalid("members", "ensemble has no members"));
    }
    let seeds: Vec<u64> = (0..mixtures.len()).map(|i| config.seed ^ i as u64).collect();
    Ok(decompose_seeded(mixtures, &seeds, config))
}

fn decompose_seeded(mixtures: &[GaussianMixture2D], seeds: &[u64], config: &EstimatorConfig) -> UncertaintyTriple {
    let m = mixtures.len();
    let n_prime = config.n_per_model;

    // One member: the predictive distribution is the member itself, so both
    // terms estimate the same entropy and share one estimate.
    if m == 1 {
        let h = if config.reuse_samples {
            let ys = mixtures[0].sample_stream(n_prime, seeds[0], TOTAL_STREAM);
            mean_neg_log_density(&mixtures[0], &ys)
        } else {
            member_entropy(&mixtures[0], n_prime, seeds[0])
        };
        return UncertaintyTriple::from_parts(h, h);
    }

    // N′ draws per member, concatenated: N = N′·M samples of the predictive mixture.
    let pooled: Vec<Vec<[f64; 2]>> = mixtures
        .iter()
        .zip(seeds)
        .map(|(g, &s)| g.sample_stream(n_prime, s, TOTAL_STREAM))
        .collect();

    let per_member: Vec<f64> = if config.reuse_samples {
        mixtures
            .iter()
            .zip(&pooled)
            .map(|(g, ys)| mean_neg_log_density(g, ys))
            .collect()
    } else {
        mixtures
            .iter()
            .zip(seeds)
            .map(|(g, &s)| member_entropy(g, n_prime * m, s))
            .collect()
    };
    let aleatoric = per_member.iter().sum::<f64>() / m as f64;

    let ln_m = (m as f64).ln();
    let mut acc = 0.0;
    for &y in pooled.iter().flatten() {
        acc += log_sum_exp(mixtures.iter().map(|g| g.log_density(y))) - ln_m;
    }
    let total = -acc / (n_prime * m) as f64;

    UncertaintyTriple::from_parts(total, aleatoric)
}

/// Variance across members of the log-density of the realized endpoint,
/// `Var_q(W)[log p(y | x, W)]` (population variance, nats²).
pub fn rip_epistemic(ensemble: &EnsemblePrediction, future: &Trajectory, bandwidth: f64) -> Result<f64> {
    ensemble.validate()?;
    if future.len() != ensemble.horizon() {
        return Err(Error::LengthMismatch {
            expected: ensemble.horizon(),
            found: future.len(),
        });
    }
    let end = future.endpoint();
    let lls: Vec<f64> = ensemble
        .members
        .iter()
        .map(|m| gmm_from_modes(m, bandwidth).map(|g| g.log_density(end)))
        .collect::<Result<_>>()?;
    Ok(population_variance(&lls))
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}

/// Entropy of an equal mixture of `M` members with disjoint support,
/// `H̄ + ln M`; the limit the estimator approaches for far-separated members.
pub fn separated_mixture_entropy(member_entropy: f64, m: usize) -> f64 {
    member_entropy + (m as f64).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::{gaussian_entropy, Cov2};
    use crate::scene::{Mode, ModeSet};
    use std::f64::consts::LN_2;

    fn point_member(id: &str, ends: &[(f64, [f64; 2])]) -> ModeSet {
        ModeSet::new(
            id,
            ends.iter()
                .map(|&(w, e)| Mode {
                    weight: w,
                    trajectory: Trajectory::new(vec![[0.0, 0.0], e]).unwrap(),
                })
                .collect(),
        )
        .unwrap()
    }

    fn unit_h() -> f64 {
        gaussian_entropy(&Cov2::isotropic(1.0)).unwrap()
    }

    #[test]
    fn member_entropy_unit_gaussian() {
        let g = GaussianMixture2D::single([0.0, 0.0], Cov2::isotropic(1.0)).unwrap();
        let h = member_entropy(&g, 100_000, 1);
        assert!((h - 2.8379).abs() < 0.03, "{h}");
        assert_eq!(h, member_entropy(&g, 100_000, 1));
    }

    #[test]
    fn member_entropy_far_separated_pair() {
        let g = GaussianMixture2D::new([
            (0.5, [0.0, 0.0], Cov2::isotropic(1.0)),
            (0.5, [100.0, 0.0], Cov2::isotropic(1.0)),
        ])
        .unwrap();
        let h = member_entropy(&g, 100_000, 2);
        assert!((h - 3.5310).abs() < 0.03, "{h}");
    }

    #[test]
    fn member_entropy_degenerate_weights() {
        let single = GaussianMixture2D::single([0.0, 0.0], Cov2::isotropic(1.0)).unwrap();
        let padded = GaussianMixture2D::new([
            (1.0, [0.0, 0.0], Cov2::isotropic(1.0)),
            (0.0, [30.0, 0.0], Cov2::isotropic(1.0)),
        ])
        .unwrap();
        // same draws: the zero-weight component is never picked and adds nothing to the density
        assert_eq!(member_entropy(&single, 20_000, 9), member_entropy(&padded, 20_000, 9));
    }

    #[test]
    fn single_member_collapses_exactly() {
        let e =
            EnsemblePrediction::new("s", vec![point_member("a", &[(0.6, [10.0, 0.0]), (0.4, [5.0, 5.0])])]).unwrap();
        for reuse in [false, true] {
            let cfg = EstimatorConfig {
                n_per_model: 2000,
                seed: 4,
                reuse_samples: reuse,
                ..Default::default()
            };
            let u = decompose(&e, &cfg).unwrap();
            assert_eq!(u.total, u.aleatoric);
            assert_eq!(u.epistemic, 0.0);
        }
    }

    #[test]
    fn identical_members_have_no_epistemic() {
        let a = point_member("a", &[(0.5, [10.0, 0.0]), (0.5, [8.0, 6.0])]);
        let members = (0..3)
            .map(|i| ModeSet {
                model_id: format!("m{i}"),
                ..a.clone()
            })
            .collect();
        let e = EnsemblePrediction::new("s", members).unwrap();
        let cfg = EstimatorConfig {
            n_per_model: 10_000,
            seed: 17,
            ..Default::default()
        };
        let u = decompose(&e, &cfg).unwrap();
        assert!(u.epistemic.abs() < 0.02, "{u:?}");
    }

    #[test]
    fn far_separated_members() {
        let e = EnsemblePrediction::new(
            "s",
            vec![
                point_member("a", &[(1.0, [0.0, 0.0])]),
                point_member("b", &[(1.0, [100.0, 0.0])]),
            ],
        )
        .unwrap();
        let cfg = EstimatorConfig {
            n_per_model: 100_000,
            seed: 3,
            ..Default::default()
        };
        let u = decompose(&e, &cfg).unwrap();
        assert!((u.total - separated_mixture_entropy(unit_h(), 2)).abs() < 0.03, "{u:?}");
        assert!((u.aleatoric - unit_h()).abs() < 0.03, "{u:?}");
        assert!((u.epistemic - LN_2).abs() < 0.03, "{u:?}");
        assert_eq!(u.epistemic, u.total - u.aleatoric);
    }

    #[test]
    fn permutation_with_hashed_seeds_is_bit_identical() {
        let ms = vec![
            point_member("a", &[(0.5, [10.0, 0.0]), (0.5, [8.0, 6.0])]),
            point_member("b", &[(1.0, [12.0, 1.0])]),
            point_member("c", &[(0.2, [9.0, -3.0]), (0.8, [11.0, 2.0])]),
        ];
        let cfg = EstimatorConfig {
            n_per_model: 3000,
            seed: 99,
            sub_seeding: SubSeeding::ModelIdHash,
            ..Default::default()
        };
        let fwd = decompose(&EnsemblePrediction::new("s", ms.clone()).unwrap(), &cfg).unwrap();
        let mut rev = ms;
        rev.reverse();
        let bwd = decompose(&EnsemblePrediction::new("s", rev).unwrap(), &cfg).unwrap();
        assert_eq!(fwd, bwd);
    }

    #[test]
    fn reuse_samples_agrees_within_noise() {
        let e = EnsemblePrediction::new(
            "s",
            vec![
                point_member("a", &[(1.0, [0.0, 0.0])]),
                point_member("b", &[(1.0, [3.0, 0.0])]),
            ],
        )
        .unwrap();
        let base = EstimatorConfig {
            n_per_model: 50_000,
            seed: 5,
            ..Default::default()
        };
        let a = decompose(&e, &base).unwrap();
        let b = decompose(
            &e,
            &EstimatorConfig {
                reuse_samples: true,
                ..base
            },
        )
        .unwrap();
        assert!((a.total - b.total).abs() < 1e-12, "total uses the same pooled draws");
        assert!((a.aleatoric - b.aleatoric).abs() < 0.03);
    }

    #[test]
    fn rip_fixtures() {
        let a = point_member("a", &[(1.0, [3.0, 0.0])]);
        let b = ModeSet {
            model_id: "b".into(),
            ..a.clone()
        };
        let gt = Trajectory::new(vec![[0.0, 0.0], [3.5, 0.5]]).unwrap();
        let same = EnsemblePrediction::new("s", vec![a.clone(), b]).unwrap();
        assert_eq!(rip_epistemic(&same, &gt, 1.0).unwrap(), 0.0);

        // unit bandwidth: log p = −ln 2π − d²/2, so the variance is that of d²/2
        let e = EnsemblePrediction::new(
            "s",
            vec![
                point_member("a", &[(1.0, [0.0, 0.0])]),
                point_member("b", &[(1.0, [2.0, 0.0])]),
                point_member("c", &[(1.0, [0.0, 3.0])]),
            ],
        )
        .unwrap();
        let origin = Trajectory::new(vec![[0.0, 0.0], [0.0, 0.0]]).unwrap();
        let halves = [0.0, 2.0, 4.5];
        let mean = halves.iter().sum::<f64>() / 3.0;
        let want = halves.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((rip_epistemic(&e, &origin, 1.0).unwrap() - want).abs() < 1e-12);
        assert!(rip_epistemic(&e, &Trajectory::new(vec![[0.0, 0.0]]).unwrap(), 1.0).is_err());
    }

    #[test]
    fn population_variance_of_two() {
        assert_eq!(population_variance(&[-2.0, -4.0]), 1.0);
    }

    #[test]
    fn rejects_bad_config() {
        let e = EnsemblePrediction::new("s", vec![point_member("a", &[(1.0, [0.0, 0.0])])]).unwrap();
        assert!(decompose(
            &e,
            &EstimatorConfig {
                n_per_model: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(decompose(
            &e,
            &EstimatorConfig {
                bandwidth: -1.0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
