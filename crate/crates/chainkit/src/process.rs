//! Gaussian process models and Monte Carlo bound certificates.
//!
//! A model is a centered Gaussian vector `X = scale * (F z)` with `F` a
//! rank-revealing square root of a positive-semidefinite covariance and `z`
//! standard normal. Its canonical increment deviation
//! `dev(s, t) = sqrt(cov[s][s] + cov[t][t] - 2 cov[s][t])` is the natural
//! pseudometric of the process.
//!
//! The Orlicz increment condition ties the process to the ambient metric:
//!
//! ```text
//! E phi(|X(s) - X(t)| / d(s, t)) <= 1   for all s != t.
//! ```
//!
//! For the power function `x^p` the left side is
//! `c_p (scale * dev / d)^p` with `c_p` the absolute `p`-th moment of a
//! standard normal, so the largest admissible scale is available in closed
//! form and arbitrary models can be scaled onto the condition boundary.
//!
//! Certificates compare seeded Monte Carlo estimates of `E sup` quantities
//! (plus three standard errors) against the chaining bounds computed from
//! the majorant profile.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cert::{BoundCertificate, IneqStats, WitnessBuilder};
use crate::majorant::profile;
use crate::metric::{FleetCase, MetricSpace, ProbMeasure, SpaceFamilySpec};
use crate::orlicz::{
    chaining_constant_k, constants_ab, power_constants, GrowthParams, OrliczError, OrliczFn,
    PsiParams,
};
use crate::seeds;
use crate::tol;

use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
    #[error("covariance is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model dimension {model} does not match space size {space}")]
    ModelSpaceMismatch { model: usize, space: usize },
    #[error("increment condition unmet: sup pair value {value} exceeds 1")]
    IncrementConditionUnmet { value: f64 },
    #[error("function is not Young-flagged, as the bound requires")]
    NotYoung,
    #[error("subset of points is empty")]
    EmptySubset,
    #[error("net projection property violated: {0}")]
    NetPropertyViolated(String),
}

/// Model recipes accepted by [`gaussian_from_metric`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// `X(t) = <g, point_t>` for a standard normal vector `g`: the increment
    /// deviation is the Euclidean distance of the embedded points.
    EmbedEuclidean { points: Vec<Vec<f64>> },
    /// Brownian motion sampled at the given nonnegative positions
    /// (defaults to `0..n`): `cov[i][j] = min(pos_i, pos_j)`.
    BrownianPath {
        #[serde(default)]
        positions: Option<Vec<f64>>,
    },
    /// An explicit positive-semidefinite covariance.
    CustomCov { cov: Vec<Vec<f64>> },
}

impl ModelSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelSpec::EmbedEuclidean { .. } => "embed-euclidean",
            ModelSpec::BrownianPath { .. } => "brownian-path",
            ModelSpec::CustomCov { .. } => "custom-cov",
        }
    }
}

/// A centered Gaussian vector with a rank-revealing factor of its
/// covariance and a post-factorization scale multiplier.
#[derive(Debug, Clone)]
pub struct GaussianProcessModel {
    n: usize,
    cov: Vec<f64>,
    /// `n x rank`; `factor * factor^T` reproduces the covariance.
    factor: Vec<Vec<f64>>,
    rank: usize,
    pub scale: f64,
    pub kind: String,
}

impl GaussianProcessModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n + j]
    }

    /// Increment deviation of the unscaled process.
    pub fn dev(&self, s: usize, t: usize) -> f64 {
        (self.cov(s, s) + self.cov(t, t) - 2.0 * self.cov(s, t))
            .max(0.0)
            .sqrt()
    }

    /// The same model with a different scale multiplier.
    pub fn with_scale(&self, scale: f64) -> Self {
        let mut m = self.clone();
        m.scale = scale;
        m
    }
}

/// Rank-revealing Cholesky with diagonal pivoting. Accepts semidefinite
/// (rank-deficient) inputs; rejects genuinely indefinite ones.
fn pivoted_cholesky(cov: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, usize), ProcessError> {
    let n = cov.len();
    let mut residual_diag: Vec<f64> = (0..n).map(|i| cov[i][i]).collect();
    let max_diag = residual_diag.iter().cloned().fold(0.0, f64::max);
    if residual_diag
        .iter()
        .any(|&d| d < -tol::PSD_PIVOT_REL * max_diag.max(1.0))
    {
        return Err(ProcessError::NotPsd("negative diagonal entry".into()));
    }
    let pivot_floor = tol::PSD_PIVOT_REL * max_diag.max(f64::MIN_POSITIVE);
    let neg_floor = -1e-8 * max_diag.max(1.0);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut used = vec![false; n];
    loop {
        let pivot = (0..n).filter(|&i| !used[i]).max_by(|&a, &b| {
            residual_diag[a]
                .partial_cmp(&residual_diag[b])
                .expect("finite")
        });
        let Some(p) = pivot else { break };
        if residual_diag[p] <= pivot_floor {
            break;
        }
        let l_pp = residual_diag[p].sqrt();
        let mut col = vec![0.0; n];
        col[p] = l_pp;
        for i in 0..n {
            if used[i] || i == p {
                continue;
            }
            let prior: f64 = columns.iter().map(|c| c[i] * c[p]).sum();
            col[i] = (cov[i][p] - prior) / l_pp;
        }
        used[p] = true;
        for i in 0..n {
            if !used[i] {
                residual_diag[i] -= col[i] * col[i];
                if residual_diag[i] < neg_floor {
                    return Err(ProcessError::NotPsd(format!(
                        "residual diagonal turned negative at point {i}"
                    )));
                }
            }
        }
        columns.push(col);
    }
    let rank = columns.len();
    // Rows of the factor: point i gets the i-th entry of every column.
    let factor: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    Ok((factor, rank))
}

/// The Gram covariance induced by the metric around a base point:
/// `cov[i][j] = (d(i, r)^2 + d(j, r)^2 - d(i, j)^2) / 2`.
///
/// Positive semidefinite exactly when the metric embeds isometrically in
/// Euclidean space, which holds for every built-in family (paths, grids,
/// random point clouds, and ultrametric trees). The resulting increment
/// deviation reproduces the metric itself.
pub fn metric_gram_cov(space: &MetricSpace, base: usize) -> Vec<Vec<f64>> {
    let n = space.n();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let dir = space.dist(i, base);
                    let djr = space.dist(j, base);
                    let dij = space.dist(i, j);
                    0.5 * (dir * dir + djr * djr - dij * dij)
                })
                .collect()
        })
        .collect()
}

/// Builds a Gaussian model over the points of a space.
pub fn gaussian_from_metric(
    space: &MetricSpace,
    spec: &ModelSpec,
) -> Result<GaussianProcessModel, ProcessError> {
    let n = space.n();
    let rows: Vec<Vec<f64>> = match spec {
        ModelSpec::EmbedEuclidean { points } => {
            if points.len() != n {
                return Err(ProcessError::ModelSpaceMismatch {
                    model: points.len(),
                    space: n,
                });
            }
            let dim = points[0].len();
            if points.iter().any(|p| p.len() != dim) {
                return Err(ProcessError::InvalidModel(
                    "embedded points have mixed dimensions".into(),
                ));
            }
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| points[i].iter().zip(&points[j]).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect()
        }
        ModelSpec::BrownianPath { positions } => {
            let pos: Vec<f64> = match positions {
                Some(p) => p.clone(),
                None => (0..n).map(|i| i as f64).collect(),
            };
            if pos.len() != n {
                return Err(ProcessError::ModelSpaceMismatch {
                    model: pos.len(),
                    space: n,
                });
            }
            if pos.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(ProcessError::InvalidModel(
                    "Brownian positions must be finite and nonnegative".into(),
                ));
            }
            (0..n)
                .map(|i| (0..n).map(|j| pos[i].min(pos[j])).collect())
                .collect()
        }
        ModelSpec::CustomCov { cov } => {
            if cov.len() != n || cov.iter().any(|r| r.len() != n) {
                return Err(ProcessError::ModelSpaceMismatch {
                    model: cov.len(),
                    space: n,
                });
            }
            let scale = cov
                .iter()
                .flatten()
                .fold(0.0f64, |acc, &v| acc.max(v.abs()));
            for (i, row) in cov.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(ProcessError::InvalidModel("non-finite covariance".into()));
                    }
                    if (v - cov[j][i]).abs() > 1e-10 * scale.max(1.0) {
                        return Err(ProcessError::NotPsd(format!(
                            "asymmetric covariance at ({i}, {j})"
                        )));
                    }
                }
            }
            cov.clone()
        }
    };
    let (factor, rank) = pivoted_cholesky(&rows)?;
    let mut cov = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        cov[i * n..(i + 1) * n].copy_from_slice(row);
    }
    Ok(GaussianProcessModel {
        n,
        cov,
        factor,
        rank,
        scale: 1.0,
        kind: spec.tag().to_string(),
    })
}

/// Absolute `p`-th moment of a standard normal:
/// `c_p = 2^(p/2) Gamma((p+1)/2) / sqrt(pi)`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    assert!(p >= 0.0);
    2f64.powf(p / 2.0) * libm::tgamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// Largest scale at which the power-`p` increment condition holds:
/// `min over pairs of d(s, t) / (c_p^(1/p) dev(s, t))`, skipping pairs with
/// vanishing deviation. Infinite when the process is constant.
pub fn max_admissible_scale(model: &GaussianProcessModel, space: &MetricSpace, p: f64) -> f64 {
    assert!(p >= 1.0);
    let root_cp = gaussian_abs_moment(p).powf(1.0 / p);
    let mut best = f64::INFINITY;
    for s in 0..space.n() {
        for t in s + 1..space.n() {
            let dev = model.dev(s, t);
            if dev > 0.0 {
                best = best.min(space.dist(s, t) / (root_cp * dev));
            }
        }
    }
    best
}

/// How an increment condition check should be carried out.
#[derive(Debug, Clone, Copy)]
pub enum IncrementCheckMode {
    /// Closed form; requires a power function.
    AnalyticPower,
    /// Seeded Monte Carlo estimation with the stderr folded into the margin.
    MonteCarlo { trials: usize, seed: u64 },
}

/// Outcome of an increment condition check.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementReport {
    /// Largest pair value of `E phi(|X(s) - X(t)| / d(s, t))`.
    pub value: f64,
    pub stderr: Option<f64>,
    pub worst_pair: Option<(usize, usize)>,
    pub pass: bool,
}

/// Checks the increment condition for the scaled model.
pub fn check_increment_condition(
    model: &GaussianProcessModel,
    space: &MetricSpace,
    phi: &OrliczFn,
    mode: IncrementCheckMode,
) -> Result<IncrementReport, ProcessError> {
    if model.n() != space.n() {
        return Err(ProcessError::ModelSpaceMismatch {
            model: model.n(),
            space: space.n(),
        });
    }
    match mode {
        IncrementCheckMode::AnalyticPower => {
            let p = phi.power_exponent().ok_or_else(|| {
                ProcessError::InvalidModel(format!(
                    "analytic increment check needs a power function, got {}",
                    phi.name()
                ))
            })?;
            let c_p = gaussian_abs_moment(p);
            let mut value = 0.0;
            let mut worst = None;
            for s in 0..space.n() {
                for t in s + 1..space.n() {
                    let dev = model.dev(s, t);
                    if dev == 0.0 {
                        continue;
                    }
                    let v = c_p * (model.scale * dev / space.dist(s, t)).powf(p);
                    if v > value {
                        value = v;
                        worst = Some((s, t));
                    }
                }
            }
            Ok(IncrementReport {
                value,
                stderr: None,
                worst_pair: worst,
                pass: value <= 1.0 + tol::INCREMENT_CONDITION_ABS,
            })
        }
        IncrementCheckMode::MonteCarlo { trials, seed } => {
            let trials = trials.max(2);
            let paths = sample_paths(model, trials, seed);
            let n = space.n();
            let mut value = 0.0;
            let mut stderr = 0.0;
            let mut worst = None;
            for s in 0..n {
                for t in s + 1..n {
                    let d = space.dist(s, t);
                    let mut sum = 0.0;
                    let mut sumsq = 0.0;
                    for path in &paths {
                        let v = phi.eval_nn((path[s] - path[t]).abs() / d);
                        sum += v;
                        sumsq += v * v;
                    }
                    let mean = sum / trials as f64;
                    let var = (sumsq - sum * sum / trials as f64) / (trials as f64 - 1.0);
                    let se = (var.max(0.0) / trials as f64).sqrt();
                    if mean > value {
                        value = mean;
                        stderr = se;
                        worst = Some((s, t));
                    }
                }
            }
            Ok(IncrementReport {
                value,
                stderr: Some(stderr),
                worst_pair: worst,
                pass: value <= 1.0 + tol::MC_SIGMA * stderr + tol::INCREMENT_CONDITION_ABS,
            })
        }
    }
}

fn ensure_increment_condition(
    model: &GaussianProcessModel,
    space: &MetricSpace,
    phi: &OrliczFn,
    seed: u64,
) -> Result<IncrementReport, ProcessError> {
    let mode = if phi.power_exponent().is_some() {
        IncrementCheckMode::AnalyticPower
    } else {
        IncrementCheckMode::MonteCarlo {
            trials: 4000,
            seed: seeds::mix(seed, &[0x1c]),
        }
    };
    let report = check_increment_condition(model, space, phi, mode)?;
    if !report.pass {
        return Err(ProcessError::IncrementConditionUnmet {
            value: report.value,
        });
    }
    Ok(report)
}

/// Draws `trials` independent paths. Each trial derives its own generator
/// from `(seed, trial index)`, so batches are reproducible and independent
/// of the parallel schedule.
pub fn sample_paths(model: &GaussianProcessModel, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeds::derive_rng(seed, &[0x9a75, trial as u64]);
            let z: Vec<f64> = (0..model.rank)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            model
                .factor
                .iter()
                .map(|row| model.scale * row.iter().zip(&z).map(|(f, g)| f * g).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Monte Carlo estimate of `E (max_t X - min_t X)`, with optional `p`-th
/// moment `(E range^p)^(1/p)` via the delta method.
#[derive(Debug, Clone, Serialize)]
pub struct SupEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub p_moment: Option<PMomentEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PMomentEstimate {
    pub p: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Reduces a path batch to range statistics.
pub fn estimate_sup_range(paths: &[Vec<f64>], p: Option<f64>) -> SupEstimate {
    assert!(paths.len() >= 2, "need at least two trials");
    let trials = paths.len();
    let ranges: Vec<f64> = paths
        .iter()
        .map(|path| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &v in path {
                min = min.min(v);
                max = max.max(v);
            }
            max - min
        })
        .collect();
    let (mean, stderr) = mean_stderr(&ranges);
    let p_moment = p.map(|p| {
        let powered: Vec<f64> = ranges.iter().map(|r| r.powf(p)).collect();
        let (m, se) = mean_stderr(&powered);
        if m > 0.0 {
            PMomentEstimate {
                p,
                estimate: m.powf(1.0 / p),
                stderr: se * m.powf(1.0 / p - 1.0) / p,
            }
        } else {
            PMomentEstimate {
                p,
                estimate: 0.0,
                stderr: 0.0,
            }
        }
    });
    SupEstimate {
        mean,
        stderr,
        trials,
        p_moment,
    }
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mc_witness(model: &GaussianProcessModel, est: &SupEstimate, seed: u64) -> WitnessBuilder {
    WitnessBuilder::new()
        .with("model", model.kind.clone())
        .with("scale", model.scale)
        .with("trials", est.trials)
        .with("seed", seed)
        .with("mc_mean", est.mean)
        .with("mc_stderr", est.stderr)
}

/// Certifies the headline supremum bound `E sup |X(s) - X(t)| <= 32 S_p`
/// for a model satisfying the power-`p` increment condition (`p = 2` is the
/// canonical choice).
pub fn verify_young_sup_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    model: &GaussianProcessModel,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCertificate, ProcessError> {
    let phi = if p == 1.0 {
        OrliczFn::identity()
    } else {
        OrliczFn::power(p)?
    };
    let trials = trials.max(2);
    let condition = ensure_increment_condition(model, space, &phi, seed)?;
    let prof = profile(space, measure, &phi);
    let paths = sample_paths(model, trials, seed);
    let est = estimate_sup_range(&paths, None);
    let bound = 32.0 * prof.s_max;
    let ratio = if bound > 0.0 { est.mean / bound } else { 0.0 };
    Ok(BoundCertificate::certify(
        "young_sup_bound",
        est.mean + tol::MC_SIGMA * est.stderr,
        bound,
        mc_witness(model, &est, seed)
            .with("p", p)
            .with("s_max", prof.s_max)
            .with("condition_value", condition.value)
            .with("mean_to_bound_ratio", ratio)
            .build(),
    ))
}

/// Certifies `E sup |X(s) - X(t)| <= 2 a A S + 2 b B S_bar` for a Young
/// function in the `(a, b)` growth class at ratio `R`.
#[allow(clippy::too_many_arguments)]
pub fn verify_sup_range_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    model: &GaussianProcessModel,
    phi: &OrliczFn,
    growth: GrowthParams,
    ratio: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCertificate, ProcessError> {
    if !phi.is_young() {
        return Err(ProcessError::NotYoung);
    }
    let trials = trials.max(2);
    let condition = ensure_increment_condition(model, space, phi, seed)?;
    let (big_a, big_b) = constants_ab(ratio)?;
    if growth.a > 0.0 && !big_a.is_finite() {
        return Err(ProcessError::Orlicz(OrliczError::InvalidR(
            ratio,
            "R = 2 requires a = 0".into(),
        )));
    }
    let prof = profile(space, measure, phi);
    let a_term = if growth.a == 0.0 {
        0.0
    } else {
        2.0 * growth.a * big_a * prof.s_max
    };
    let bound = a_term + 2.0 * growth.b * big_b * prof.s_bar;
    let paths = sample_paths(model, trials, seed);
    let est = estimate_sup_range(&paths, None);
    Ok(BoundCertificate::certify(
        "sup_range_bound",
        est.mean + tol::MC_SIGMA * est.stderr,
        bound,
        mc_witness(model, &est, seed)
            .with("phi", phi.name())
            .with("a", growth.a)
            .with("b", growth.b)
            .with("R", ratio)
            .with("condition_value", condition.value)
            .build(),
    ))
}

/// Certifies `E psi(sup |X(s) - X(t)| / (2K)) <= alpha + beta` with
/// `K = (a A + b B) S`.
#[allow(clippy::too_many_arguments)]
pub fn verify_psi_sup_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    model: &GaussianProcessModel,
    phi: &OrliczFn,
    psi: &PsiParams,
    growth: GrowthParams,
    ratio: f64,
    psi_checked: bool,
    trials: usize,
    seed: u64,
) -> Result<BoundCertificate, ProcessError> {
    let trials = trials.max(2);
    let condition = ensure_increment_condition(model, space, phi, seed)?;
    let prof = profile(space, measure, phi);
    let k = chaining_constant_k(growth.a, growth.b, ratio, prof.s_max)?;
    let paths = sample_paths(model, trials, seed);
    // psi is increasing, so the pair supremum of psi(|dX| / 2K) is
    // psi(range / 2K) path by path.
    let values: Vec<f64> = paths
        .iter()
        .map(|path| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &v in path {
                min = min.min(v);
                max = max.max(v);
            }
            let range = max - min;
            if range == 0.0 {
                0.0
            } else {
                psi.psi.eval_nn(range / (2.0 * k))
            }
        })
        .collect();
    let (mean, stderr) = mean_stderr(&values);
    Ok(BoundCertificate::certify(
        "psi_sup_bound",
        mean + tol::MC_SIGMA * stderr,
        psi.alpha + psi.beta,
        WitnessBuilder::new()
            .with("model", model.kind.clone())
            .with("scale", model.scale)
            .with("trials", trials)
            .with("seed", seed)
            .with("mc_mean", mean)
            .with("mc_stderr", stderr)
            .with("phi", phi.name())
            .with("psi", psi.psi.name())
            .with("alpha", psi.alpha)
            .with("beta", psi.beta)
            .with("K", k)
            .with("psi_verified", psi_checked)
            .with("condition_value", condition.value)
            .build(),
    ))
}

/// Certifies the `p`-norm bound `(E sup^p)^(1/p) <= 2 k_p S_p` at the
/// optimal power parameters.
pub fn verify_pnorm_sup_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    model: &GaussianProcessModel,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundCertificate, ProcessError> {
    let phi = if p == 1.0 {
        OrliczFn::identity()
    } else {
        OrliczFn::power(p)?
    };
    let trials = trials.max(2);
    let condition = ensure_increment_condition(model, space, &phi, seed)?;
    let consts = power_constants(p)?;
    let prof = profile(space, measure, &phi);
    let bound = 2.0 * consts.k_coef * prof.s_max;
    let paths = sample_paths(model, trials, seed);
    let est = estimate_sup_range(&paths, Some(p));
    let pm = est.p_moment.clone().expect("requested p-th moment");
    Ok(BoundCertificate::certify(
        "pnorm_sup_bound",
        pm.estimate + tol::MC_SIGMA * pm.stderr,
        bound,
        mc_witness(model, &est, seed)
            .with("p", p)
            .with("R_p", consts.r)
            .with("k_coef", consts.k_coef)
            .with("p_moment", pm.estimate)
            .with("p_moment_stderr", pm.stderr)
            .with("condition_value", condition.value)
            .build(),
    ))
}

/// The nearest-point projection onto a subset and its pushforward measure.
#[derive(Debug, Clone, Serialize)]
pub struct NetProjection {
    /// The subset, sorted ascending.
    pub subset: Vec<usize>,
    /// For each point of the space, the index into `subset` it maps to.
    pub assignment: Vec<usize>,
    /// Pushforward weights on the subset.
    pub pushforward: Vec<f64>,
    /// Worst excess of `d(f(t), x)` over `2 d(t, x)`, at most zero up to
    /// rounding.
    pub two_approx_excess: f64,
}

/// Projects every point to its nearest subset point (ties to the lowest
/// index), verifying the 2-approximation property
/// `d(f(t), x) <= 2 d(t, x)` for every `t` and every subset point `x`, and
/// the ball-mass comparison `m(B(x, eps)) <= mu_F(B_F(x, 2 eps))` over the
/// relevant radii.
pub fn net_projection(
    space: &MetricSpace,
    measure: &ProbMeasure,
    subset: &[usize],
) -> Result<NetProjection, ProcessError> {
    if subset.is_empty() {
        return Err(ProcessError::EmptySubset);
    }
    let mut subset: Vec<usize> = subset.to_vec();
    subset.sort_unstable();
    subset.dedup();
    if *subset.last().expect("nonempty") >= space.n() {
        return Err(ProcessError::InvalidModel(format!(
            "subset point {} out of range",
            subset.last().expect("nonempty")
        )));
    }
    let assignment: Vec<usize> = (0..space.n())
        .map(|t| {
            let mut best = 0;
            for (fi, &x) in subset.iter().enumerate() {
                if space.dist(t, x) < space.dist(t, subset[best]) {
                    best = fi;
                }
            }
            best
        })
        .collect();
    let mut pushforward = vec![0.0; subset.len()];
    for (t, &fi) in assignment.iter().enumerate() {
        pushforward[fi] += measure.w(t);
    }
    let mut excess = f64::NEG_INFINITY;
    for t in 0..space.n() {
        let ft = subset[assignment[t]];
        for &x in &subset {
            excess = excess.max(space.dist(ft, x) - 2.0 * space.dist(t, x));
        }
    }
    if excess > 1e-9 {
        return Err(ProcessError::NetPropertyViolated(format!(
            "2-approximation excess {excess}"
        )));
    }
    // Mass comparison on the grid of relevant radii.
    for (fi, &x) in subset.iter().enumerate() {
        for eps in space.sorted_distances_from(x) {
            let full: f64 = (0..space.n())
                .filter(|&y| space.dist(x, y) <= eps)
                .map(|y| measure.w(y))
                .sum();
            let projected: f64 = subset
                .iter()
                .enumerate()
                .filter(|&(_, &y)| space.dist(x, y) <= 2.0 * eps)
                .map(|(fj, _)| pushforward[fj])
                .sum();
            if full > projected + 1e-12 {
                return Err(ProcessError::NetPropertyViolated(format!(
                    "mass comparison fails at subset point {fi} radius {eps}"
                )));
            }
        }
    }
    Ok(NetProjection {
        subset,
        assignment,
        pushforward,
        two_approx_excess: excess,
    })
}

/// Certifies the net-transfer bound `E sup over F of |X(s) - X(t)| <= 4K`
/// with `K = (a A + b B) S` computed on the full space. The function need
/// not be Young; the increment condition is required on the subset only.
#[allow(clippy::too_many_arguments)]
pub fn verify_net_transfer_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    model: &GaussianProcessModel,
    phi: &OrliczFn,
    growth: GrowthParams,
    ratio: f64,
    subset: &[usize],
    trials: usize,
    seed: u64,
) -> Result<BoundCertificate, ProcessError> {
    let trials = trials.max(2);
    let net = net_projection(space, measure, subset)?;
    let restricted_space = space.restrict(&net.subset);
    let restricted_model = restrict_model(model, &net.subset);
    let condition = ensure_increment_condition(&restricted_model, &restricted_space, phi, seed)?;
    let prof = profile(space, measure, phi);
    let k = chaining_constant_k(growth.a, growth.b, ratio, prof.s_max)?;
    let paths = sample_paths(&restricted_model, trials, seed);
    let est = estimate_sup_range(&paths, None);
    Ok(BoundCertificate::certify(
        "net_transfer_bound",
        est.mean + tol::MC_SIGMA * est.stderr,
        4.0 * k,
        mc_witness(model, &est, seed)
            .with("phi", phi.name())
            .with("a", growth.a)
            .with("b", growth.b)
            .with("R", ratio)
            .with("K", k)
            .with("subset_size", net.subset.len())
            .with("two_approx_excess", net.two_approx_excess)
            .with("condition_value", condition.value)
            .build(),
    ))
}

fn restrict_model(model: &GaussianProcessModel, points: &[usize]) -> GaussianProcessModel {
    let m = points.len();
    let mut cov = vec![0.0; m * m];
    for (a, &i) in points.iter().enumerate() {
        for (b, &j) in points.iter().enumerate() {
            cov[a * m + b] = model.cov(i, j);
        }
    }
    GaussianProcessModel {
        n: m,
        cov,
        factor: points.iter().map(|&i| model.factor[i].clone()).collect(),
        rank: model.rank,
        scale: model.scale,
        kind: model.kind.clone(),
    }
}

/// Report of the Monte Carlo process suite over a fleet.
#[derive(Debug, Clone, Serialize)]
pub struct ProcessSuiteReport {
    pub cases: usize,
    pub trials: usize,
    pub checks: std::collections::BTreeMap<String, IneqStats>,
    /// Two-point sanity anchor: the sampled mean range must reproduce the
    /// exact Gaussian moment within three standard errors.
    pub anchor: BoundCertificate,
    /// Largest observed `E sup / (32 S)` across the fleet — a tightness
    /// diagnostic, not a criterion.
    pub max_mean_to_bound_ratio: f64,
    pub passed: bool,
}

/// Picks the model family for a fleet case: Brownian on paths, embedded
/// coordinates where available, the metric Gram construction otherwise.
pub fn fleet_model(case: &FleetCase) -> Result<GaussianProcessModel, ProcessError> {
    let spec = match (&case.family, &case.embedding) {
        (SpaceFamilySpec::Path { .. }, Some(embedding)) => ModelSpec::BrownianPath {
            positions: Some(embedding.iter().map(|p| p[0]).collect()),
        },
        (_, Some(embedding)) => ModelSpec::EmbedEuclidean {
            points: embedding.clone(),
        },
        _ => ModelSpec::CustomCov {
            cov: metric_gram_cov(&case.space, 0),
        },
    };
    gaussian_from_metric(&case.space, &spec)
}

/// Runs the Monte Carlo certificates across a fleet: the headline bound at
/// `p = 2`, the range and psi bounds at the case assignment, the `p`-norm
/// bound for power cases, and the net-transfer bound on random half-size
/// subsets with the identity function.
pub fn run_process_suite(
    fleet: &[FleetCase],
    trials: usize,
    seed: u64,
    subset_frac: f64,
) -> ProcessSuiteReport {
    use rayon::prelude::*;

    let per_case: Vec<(std::collections::BTreeMap<String, IneqStats>, f64)> = fleet
        .par_iter()
        .map(|case| {
            let mut stats: std::collections::BTreeMap<String, IneqStats> =
                std::collections::BTreeMap::new();
            let mut ratio_diag = 0.0f64;
            let space = &case.space;
            let measure = &case.measure;
            let model = fleet_model(case).expect("fleet covariances are PSD");
            let phi = OrliczFn::from_spec(&case.phi_spec).expect("fleet specs are valid");
            let p = phi.power_exponent().expect("fleet functions are powers");
            let growth = GrowthParams::new(case.growth_a, case.growth_b);

            let mut absorb = |cert: BoundCertificate| {
                let mut tagged = cert;
                tagged
                    .witness
                    .insert("case".into(), serde_json::json!(case.tag.clone()));
                stats.entry(tagged.name.clone()).or_default().absorb(tagged);
            };

            // Headline bound at p = 2.
            let scale2 = max_admissible_scale(&model, space, 2.0);
            let m2 = model.with_scale(scale2);
            let cert = verify_young_sup_bound(
                space,
                measure,
                &m2,
                2.0,
                trials,
                seeds::mix(seed, &[case.index as u64, 0]),
            )
            .expect("scaled model meets the condition");
            if let Some(r) = cert
                .witness
                .get("mean_to_bound_ratio")
                .and_then(|v| v.as_f64())
            {
                ratio_diag = ratio_diag.max(r);
            }
            absorb(cert);

            // Range and psi bounds at the case assignment.
            let scale_p = max_admissible_scale(&model, space, p);
            let mp = model.with_scale(scale_p);
            absorb(
                verify_sup_range_bound(
                    space,
                    measure,
                    &mp,
                    &phi,
                    growth,
                    case.ratio,
                    trials,
                    seeds::mix(seed, &[case.index as u64, 1]),
                )
                .expect("scaled model meets the condition"),
            );
            let psi = PsiParams {
                psi: phi.clone(),
                alpha: 0.0,
                beta: 1.0,
            };
            absorb(
                verify_psi_sup_bound(
                    space,
                    measure,
                    &mp,
                    &phi,
                    &psi,
                    growth,
                    case.ratio,
                    true,
                    trials,
                    seeds::mix(seed, &[case.index as u64, 2]),
                )
                .expect("scaled model meets the condition"),
            );
            if p > 1.0 {
                absorb(
                    verify_pnorm_sup_bound(
                        space,
                        measure,
                        &mp,
                        p,
                        trials,
                        seeds::mix(seed, &[case.index as u64, 3]),
                    )
                    .expect("scaled model meets the condition"),
                );
            }

            // Net transfer with the identity function on a random subset.
            let subset_len = ((space.n() as f64 * subset_frac).ceil() as usize).clamp(1, space.n());
            let mut rng = seeds::derive_rng(seed, &[case.index as u64, 4]);
            let mut all: Vec<usize> = (0..space.n()).collect();
            for i in (1..all.len()).rev() {
                let j = rng.random_range(0..=i);
                all.swap(i, j);
            }
            let subset = &all[..subset_len];
            let identity = OrliczFn::identity();
            let scale1 = max_admissible_scale(&model, space, 1.0);
            let m1 = model.with_scale(scale1);
            absorb(
                verify_net_transfer_bound(
                    space,
                    measure,
                    &m1,
                    &identity,
                    GrowthParams::new(0.0, 1.0),
                    2.0,
                    subset,
                    trials,
                    seeds::mix(seed, &[case.index as u64, 5]),
                )
                .expect("scaled model meets the condition"),
            );
            (stats, ratio_diag)
        })
        .collect();

    let mut checks: std::collections::BTreeMap<String, IneqStats> =
        std::collections::BTreeMap::new();
    let mut max_ratio = 0.0f64;
    for (case_stats, ratio) in per_case {
        max_ratio = max_ratio.max(ratio);
        for (name, stats) in case_stats {
            checks.entry(name).or_default().merge(stats);
        }
    }
    let anchor = gaussian_moment_anchor(100_000, seeds::mix(seed, &[0xa2c408]));
    let passed = checks.values().all(IneqStats::all_pass) && anchor.pass;
    ProcessSuiteReport {
        cases: fleet.len(),
        trials,
        checks,
        anchor,
        max_mean_to_bound_ratio: max_ratio,
        passed,
    }
}

/// Samples the two-point model `(0, Z)` and certifies that the mean range
/// reproduces `E|Z| = sqrt(2/pi)` within three standard errors.
pub fn gaussian_moment_anchor(trials: usize, seed: u64) -> BoundCertificate {
    let space = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None)
        .expect("two-point space is valid");
    let model = gaussian_from_metric(
        &space,
        &ModelSpec::CustomCov {
            cov: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
        },
    )
    .expect("covariance is PSD");
    let paths = sample_paths(&model, trials, seed);
    let est = estimate_sup_range(&paths, None);
    let target = (2.0 / std::f64::consts::PI).sqrt();
    BoundCertificate::certify(
        "gaussian_moment_anchor",
        (est.mean - target).abs(),
        tol::MC_SIGMA * est.stderr,
        WitnessBuilder::new()
            .with("target", target)
            .with("mc_mean", est.mean)
            .with("mc_stderr", est.stderr)
            .with("trials", trials)
            .with("seed", seed)
            .build(),
    )
}
