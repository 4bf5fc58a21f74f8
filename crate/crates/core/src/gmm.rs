//! Two-dimensional Gaussian mixtures over trajectory endpoints.
//!
//! Mixtures are either built directly from a predictor's weighted modes
//! ([`gmm_from_modes`]) or fit to endpoint samples by EM ([`fit_gmm`]).
//! Densities are always evaluated in log space with a log-sum-exp over
//! components.

use std::f64::consts::LN_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{ModeSet, Point, WEIGHT_SUM_TOL};
use crate::seed;

const LN_2PI: f64 = LN_2 + 1.144_729_885_849_400_2; // ln 2 + ln π

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cov2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Cov2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Cov2 { xx, xy, yy }
    }

    pub fn isotropic(variance: f64) -> Self {
        Cov2::new(variance, 0.0, variance)
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Eigenvalues, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mid = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mid + r, mid - r)
    }

    pub fn is_positive_definite(&self) -> bool {
        [self.xx, self.xy, self.yy].iter().all(|v| v.is_finite()) && self.xx > 0.0 && self.det() > 0.0
    }

    /// Lower Cholesky factor `(l11, l21, l22)`.
    fn cholesky(&self) -> (f64, f64, f64) {
        let l11 = self.xx.sqrt();
        let l21 = self.xy / l11;
        let l22 = (self.yy - l21 * l21).sqrt();
        (l11, l21, l22)
    }

    /// Raises every eigenvalue below `floor` to `floor`, keeping eigenvectors.
    /// This is the likelihood-maximizing covariance under `Σ ⪰ floor·I`.
    pub fn floor_eigenvalues(&self, floor: f64) -> Cov2 {
        let (l1, l2) = self.eigenvalues();
        if l2 >= floor && l2.is_finite() {
            return *self;
        }
        let (n1, n2) = (l1.max(floor), l2.max(floor));
        // unit eigenvector of l1
        let (vx, vy) = if self.xy.abs() > 0.0 {
            let (a, b) = (l1 - self.yy, self.xy);
            let n = a.hypot(b);
            (a / n, b / n)
        } else if self.xx >= self.yy {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        // Σ' = n1 v vᵀ + n2 v⊥ v⊥ᵀ
        Cov2::new(
            n1 * vx * vx + n2 * vy * vy,
            (n1 - n2) * vx * vy,
            n1 * vy * vy + n2 * vx * vx,
        )
    }
}

/// Differential entropy of a bivariate Gaussian, `1 + ln 2π + ½ ln det Σ` nats.
pub fn gaussian_entropy(covariance: &Cov2) -> Result<f64> {
    if !covariance.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(1.0 + LN_2PI + 0.5 * covariance.det().ln())
}

/// Streaming log-sum-exp: one `exp` per term, rescaling when the running
/// maximum moves.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for v in terms {
        if v == f64::NEG_INFINITY {
            continue;
        }
        if v > max {
            sum = sum * (max - v).exp() + 1.0;
            max = v;
        } else {
            sum += (v - max).exp();
        }
    }
    if max == f64::NEG_INFINITY {
        max
    } else {
        max + sum.ln()
    }
}

/// One weighted Gaussian component with cached factorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Point,
    pub cov: Cov2,
    // `log w − ln 2π − ½ ln det Σ`
    log_coef: f64,
    inv: Cov2,
    chol: (f64, f64, f64),
}

impl Component {
    fn new(weight: f64, mean: Point, cov: Cov2) -> Result<Self> {
        if !cov.is_positive_definite() {
            return Err(Error::NotPositiveDefinite);
        }
        if !(mean[0].is_finite() && mean[1].is_finite()) {
            return Err(Error::invalid("mean", "non-finite component mean"));
        }
        let det = cov.det();
        let inv = Cov2::new(cov.yy / det, -cov.xy / det, cov.xx / det);
        let log_weight = weight.ln();
        Ok(Component {
            weight,
            mean,
            cov,
            log_coef: log_weight - LN_2PI - 0.5 * det.ln(),
            inv,
            chol: cov.cholesky(),
        })
    }

    /// `log w + log N(p; μ, Σ)`.
    #[inline]
    fn weighted_log_density(&self, p: Point) -> f64 {
        let dx = p[0] - self.mean[0];
        let dy = p[1] - self.mean[1];
        let maha = self.inv.xx * dx * dx + 2.0 * self.inv.xy * dx * dy + self.inv.yy * dy * dy;
        self.log_coef - 0.5 * maha
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture2D {
    components: Vec<Component>,
}

impl GaussianMixture2D {
    /// Builds a mixture from `(weight, mean, covariance)` triples.
    pub fn new(parts: impl IntoIterator<Item = (f64, Point, Cov2)>) -> Result<Self> {
        let mut components = Vec::new();
        let mut sum = 0.0;
        for (w, mean, cov) in parts {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::invalid("weight", format!("{w} is not a probability")));
            }
            sum += w;
            components.push(Component::new(w, mean, cov)?);
        }
        if components.is_empty() {
            return Err(Error::invalid("components", "mixture has no components"));
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("weight", format!("weights sum to {sum}, not 1")));
        }
        Ok(GaussianMixture2D { components })
    }

    pub fn single(mean: Point, cov: Cov2) -> Result<Self> {
        Self::new([(1.0, mean, cov)])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `log Σ_c w_c N(p; μ_c, Σ_c)` via log-sum-exp. Zero-weight components are
    /// skipped.
    pub fn log_density(&self, p: Point) -> f64 {
        log_sum_exp(self.components.iter().map(|c| c.weighted_log_density(p)))
    }

    /// `n` i.i.d. draws on the given ChaCha stream of `seed`.
    pub fn sample_stream(&self, n: usize, seed: u64, stream: u64) -> Vec<Point> {
        let mut rng = seed::rng(seed, stream);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        let pick = WeightedIndex::new(self.components.iter().map(|c| c.weight)).expect("validated weights sum to one");
        (0..n)
            .map(|_| {
                let c = &self.components[pick.sample(rng)];
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                let (l11, l21, l22) = c.chol;
                [c.mean[0] + l11 * z0, c.mean[1] + l21 * z0 + l22 * z1]
            })
            .collect()
    }
}

pub fn log_density(g: &GaussianMixture2D, point: Point) -> f64 {
    g.log_density(point)
}

/// `n` i.i.d. draws: a categorical pick over weights, then `μ + L z` with `L`
/// the Cholesky factor of the chosen covariance. Deterministic in `seed`.
pub fn sample(g: &GaussianMixture2D, n: usize, seed: u64) -> Vec<Point> {
    g.sample_stream(n, seed, 0)
}

/// One component per mode at the trajectory endpoint, with covariance
/// `bandwidth·I` (m²).
pub fn gmm_from_modes(modes: &ModeSet, bandwidth: f64) -> Result<GaussianMixture2D> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    modes.validate()?;
    GaussianMixture2D::new(
        modes
            .modes
            .iter()
            .map(|m| (m.weight, m.trajectory.endpoint(), Cov2::isotropic(bandwidth))),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_components: usize,
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tol: f64,
    /// Eigenvalue floor for every covariance, m².
    pub cov_floor: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_components: 1,
            max_iters: 200,
            tol: 1e-6,
            cov_floor: 1e-6,
            seed: 0,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.n_components == 0 || self.max_iters == 0 {
            return Err(Error::Config("n_components and max_iters must be positive".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 || self.cov_floor.is_nan() || self.cov_floor <= 0.0 {
            return Err(Error::Config("tol and cov_floor must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an EM run.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub mixture: GaussianMixture2D,
    /// Weighted mean log-likelihood `Σ_i w_i log p(x_i)` of the parameters in
    /// effect at each E-step; the last entry belongs to `mixture`.
    pub log_likelihoods: Vec<f64>,
    /// Indices into `log_likelihoods` of E-steps whose following M-step
    /// re-seeded a collapsed component.
    pub reseeds: Vec<usize>,
    pub converged: bool,
}

/// Fits a mixture by weighted EM. See [`fit_gmm_traced`].
pub fn fit_gmm(points: &[Point], weights: Option<&[f64]>, config: &FitConfig) -> Result<GaussianMixture2D> {
    fit_gmm_traced(points, weights, config).map(|o| o.mixture)
}

const COLLAPSE_MASS: f64 = 1e-12;

/// Weighted EM with k-means++ seeding and eigenvalue-floored covariances.
///
/// When every point carrying weight coincides, the result is a single
/// component at that point with covariance `cov_floor·I`.
pub fn fit_gmm_traced(points: &[Point], weights: Option<&[f64]>, config: &FitConfig) -> Result<FitOutcome> {
    config.validate()?;
    if points.len() < config.n_components {
        return Err(Error::TooFewPoints {
            needed: config.n_components,
            found: points.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("points", "non-finite coordinate"));
    }
    let w = normalized_weights(points.len(), weights)?;
    // zero-weight points do not affect the fit
    let (xs, ws): (Vec<Point>, Vec<f64>) = points
        .iter()
        .zip(&w)
        .filter(|(_, &wi)| wi > 0.0)
        .map(|(&p, &wi)| (p, wi))
        .unzip();

    let floor = config.cov_floor;
    if xs.iter().all(|p| *p == xs[0]) {
        let mixture = GaussianMixture2D::single(xs[0], Cov2::isotropic(floor))?;
        let ll = weighted_ll(&mixture, &xs, &ws);
        return Ok(FitOutcome {
            mixture,
            log_likelihoods: vec![ll],
            reseeds: Vec::new(),
            converged: true,
        });
    }

    let k = config.n_components;
    let global_cov = weighted_cov(&xs, &ws, weighted_mean(&xs, &ws)).floor_eigenvalues(floor);
    let mut params = kmeanspp_init(&xs, &ws, k, config.seed, floor, global_cov);
    let n = xs.len();
    let mut resp = vec![0.0; n * k];
    let mut point_ll = vec![0.0; n];
    let mut trace = Vec::new();
    let mut reseeds = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        let mixture = build(&params)?;
        // E-step
        let mut ll = 0.0;
        for i in 0..n {
            let row = &mut resp[i * k..(i + 1) * k];
            let mut max = f64::NEG_INFINITY;
            for (r, c) in row.iter_mut().zip(mixture.components()) {
                *r = c.weighted_log_density(xs[i]);
                max = max.max(*r);
            }
            let mut s = 0.0;
            for r in row.iter_mut() {
                *r = (*r - max).exp();
                s += *r;
            }
            for r in row.iter_mut() {
                *r /= s;
            }
            point_ll[i] = max + s.ln();
            ll += ws[i] * point_ll[i];
        }
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (ll - prev).abs() <= config.tol * prev.abs().max(f64::MIN_POSITIVE) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);

        // M-step
        let mut collapsed = false;
        for (c, p) in params.iter_mut().enumerate() {
            let mass: f64 = (0..n).map(|i| ws[i] * resp[i * k + c]).sum();
            if mass < COLLAPSE_MASS {
                let worst = (0..n)
                    .min_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]))
                    .expect("nonempty");
                *p = (ws[worst], xs[worst], global_cov);
                collapsed = true;
                continue;
            }
            let mut mean = [0.0, 0.0];
            for i in 0..n {
                let r = ws[i] * resp[i * k + c];
                mean[0] += r * xs[i][0];
                mean[1] += r * xs[i][1];
            }
            mean = [mean[0] / mass, mean[1] / mass];
            let mut s = Cov2::new(0.0, 0.0, 0.0);
            for i in 0..n {
                let r = ws[i] * resp[i * k + c];
                let (dx, dy) = (xs[i][0] - mean[0], xs[i][1] - mean[1]);
                s.xx += r * dx * dx;
                s.xy += r * dx * dy;
                s.yy += r * dy * dy;
            }
            let s = Cov2::new(s.xx / mass, s.xy / mass, s.yy / mass);
            *p = (mass, mean, s.floor_eigenvalues(floor));
        }
        if collapsed {
            reseeds.push(trace.len() - 1);
        }
        let total: f64 = params.iter().map(|p| p.0).sum();
        for p in &mut params {
            p.0 /= total;
        }
    }

    let mixture = build(&params)?;
    if !converged {
        trace.push(weighted_ll(&mixture, &xs, &ws));
    }
    Ok(FitOutcome {
        mixture,
        log_likelihoods: trace,
        reseeds,
        converged,
    })
}

type Params = Vec<(f64, Point, Cov2)>;

fn build(params: &Params) -> Result<GaussianMixture2D> {
    // normalization already done; absorb rounding so the sum check passes
    let total: f64 = params.iter().map(|p| p.0).sum();
    GaussianMixture2D::new(params.iter().map(|&(w, m, c)| (w / total, m, c)))
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("weights", "weights must be nonnegative"));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(Error::invalid("weights", format!("weights sum to {s}, not 1")));
            }
            Ok(w.iter().map(|v| v / s).collect())
        }
    }
}

fn weighted_ll(g: &GaussianMixture2D, xs: &[Point], ws: &[f64]) -> f64 {
    xs.iter().zip(ws).map(|(&p, &w)| w * g.log_density(p)).sum()
}

fn weighted_mean(xs: &[Point], ws: &[f64]) -> Point {
    let s: f64 = ws.iter().sum();
    let mut m = [0.0, 0.0];
    for (p, w) in xs.iter().zip(ws) {
        m[0] += w * p[0];
        m[1] += w * p[1];
    }
    [m[0] / s, m[1] / s]
}

fn weighted_cov(xs: &[Point], ws: &[f64], center: Point) -> Cov2 {
    let s: f64 = ws.iter().sum();
    let mut c = Cov2::new(0.0, 0.0, 0.0);
    for (p, w) in xs.iter().zip(ws) {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        c.xx += w * dx * dx;
        c.xy += w * dx * dy;
        c.yy += w * dy * dy;
    }
    Cov2::new(c.xx / s, c.xy / s, c.yy / s)
}

fn sq_dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// k-means++ centers (probability ∝ w·D²), uniform weights, and each center's
/// covariance from the points nearest to it.
fn kmeanspp_init(xs: &[Point], ws: &[f64], k: usize, seed: u64, floor: f64, fallback: Cov2) -> Params {
    let mut rng = seed::rng(seed, 0);
    let first = WeightedIndex::new(ws).expect("positive weights").sample(&mut rng);
    let mut centers = vec![xs[first]];
    let mut d2: Vec<f64> = xs.iter().map(|&p| sq_dist(p, xs[first])).collect();
    while centers.len() < k {
        let scores: Vec<f64> = ws.iter().zip(&d2).map(|(w, d)| w * d).collect();
        let next = match WeightedIndex::new(&scores) {
            Ok(dist) => dist.sample(&mut rng),
            // every point already coincides with a center
            Err(_) => WeightedIndex::new(ws).expect("positive weights").sample(&mut rng),
        };
        let c = xs[next];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(xs) {
            *d = d.min(sq_dist(p, c));
        }
    }

    let mut groups: Vec<(Vec<Point>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); k];
    for (&p, &w) in xs.iter().zip(ws) {
        let nearest = (0..k)
            .min_by(|&a, &b| sq_dist(p, centers[a]).total_cmp(&sq_dist(p, centers[b])))
            .expect("k > 0");
        groups[nearest].0.push(p);
        groups[nearest].1.push(w);
    }
    centers
        .into_iter()
        .zip(groups)
        .map(|(c, (gx, gw))| {
            let cov = if gx.len() >= 2 {
                weighted_cov(&gx, &gw, c).floor_eigenvalues(floor)
            } else {
                fallback
            };
            (1.0 / k as f64, c, cov)
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ComponentDump {
    weight: f64,
    mean: Point,
    cov: [[f64; 2]; 2],
}

/// Debug dump: one `{weight, mean, cov}` object per component.
pub fn write_mixture_jsonl(g: &GaussianMixture2D, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for c in g.components() {
        let dump = ComponentDump {
            weight: c.weight,
            mean: c.mean,
            cov: [[c.cov.xx, c.cov.xy], [c.cov.xy, c.cov.yy]],
        };
        serde_json::to_writer(&mut w, &dump).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Closed-form density of a single Gaussian, used by tests as an independent
/// route around the cached component path.
#[cfg(test)]
pub(crate) fn naive_density(mean: Point, cov: Cov2, p: Point) -> f64 {
    let det = cov.det();
    let (dx, dy) = (p[0] - mean[0], p[1] - mean[1]);
    let maha = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / det;
    (-0.5 * maha).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}
