//! Ball averaging operators, the operator lemmas, and the chaining measure.
//!
//! At level `k` the averaging operator replaces `f(x)` by the measure
//! average of `f` over the ball `B_k(x) = B(x, r_k(x))`:
//!
//! ```text
//! (S_k f)(x) = (1 / m(B_k(x))) * sum over u in B_k(x) of m(u) f(u).
//! ```
//!
//! As a matrix the operator is row-stochastic. At the base level every ball
//! is the whole space, so each row equals the measure and `S_k0 f` is the
//! constant `mean(f)`. Above `kmax` the radii vanish and the operator is the
//! identity, which realizes the pointwise limit of the averages exactly at
//! finite depth. These two endpoints make the telescoping decomposition
//!
//! ```text
//! f - mean(f) = sum over k of S_m ... S_(k+1) (I - S_k) f,    m > kmax,
//! ```
//!
//! an exact finite identity.
//!
//! The chaining measure `nu` on `T x T` aggregates the level kernels
//! `m(u) r_k(u) R^k * m(v | B_k(u))` over all levels and normalizes by
//! `M = sum over k, u of m(u) r_k(u) R^k`. Aggregation order is fixed
//! (level ascending, then `u`, then `v`) so serialized output is
//! bit-reproducible.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::cert::{BoundCertificate, IneqStats, WitnessBuilder};
use crate::majorant::{profile, radii_table, MajorantProfile, RadiiTable};
use crate::metric::{FleetCase, MetricSpace, ProbMeasure};
use crate::orlicz::OrliczFn;
use crate::seeds;
use crate::tol;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("level {k} lies below the base level {k0}")]
    LevelBelowBase { k: i32, k0: i32 },
    #[error("invalid level pair: need mlevel > k >= k0, got k = {k}, mlevel = {mlevel}")]
    InvalidLevels { k: i32, mlevel: i32 },
    #[error("operator dimension {op} does not match vector length {vec}")]
    DimensionMismatch { op: usize, vec: usize },
    #[error("chaining measure needs at least two points (the normalizer vanishes)")]
    DegenerateSpace,
    #[error("geometric chain sum requires R > 2, got {0}")]
    RatioNotAboveTwo(f64),
}

/// A row-stochastic ball averaging operator at one level.
#[derive(Debug, Clone)]
pub struct AveragingOperator {
    pub level: i32,
    rows: Vec<Vec<f64>>,
}

impl AveragingOperator {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Applies the operator to a function vector.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>, ChainError> {
        if f.len() != self.n() {
            return Err(ChainError::DimensionMismatch {
                op: self.n(),
                vec: f.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().zip(f).map(|(p, v)| p * v).sum())
            .collect())
    }
}

/// Builds the averaging operator at level `k` from the radii table.
/// Levels above `kmax` yield the identity.
pub fn averaging_operator(
    space: &MetricSpace,
    measure: &ProbMeasure,
    radii: &RadiiTable,
    k: i32,
) -> Result<AveragingOperator, ChainError> {
    if k < radii.k0 {
        return Err(ChainError::LevelBelowBase { k, k0: radii.k0 });
    }
    let n = space.n();
    let mut rows = Vec::with_capacity(n);
    for x in 0..n {
        let r = radii.radius(k, x).expect("level validated above");
        let members: Vec<usize> = (0..n).filter(|&u| space.dist(x, u) <= r).collect();
        let mass: f64 = members.iter().map(|&u| measure.w(u)).sum();
        let mut row = vec![0.0; n];
        for &u in &members {
            row[u] = measure.w(u) / mass;
        }
        rows.push(row);
    }
    Ok(AveragingOperator { level: k, rows })
}

/// Applies an ordered operator list right-to-left: the last operator in the
/// slice acts first. An empty list is the identity.
pub fn compose_chain(ops: &[&AveragingOperator], f: &[f64]) -> Result<Vec<f64>, ChainError> {
    let mut v = f.to_vec();
    for op in ops.iter().rev() {
        v = op.apply(&v)?;
    }
    Ok(v)
}

/// Certifies the pairwise radius bound `S_i r_j <= r_i + r_j` entrywise.
pub fn check_pairwise_radius_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    radii: &RadiiTable,
    i: i32,
    j: i32,
) -> Result<BoundCertificate, ChainError> {
    let op = averaging_operator(space, measure, radii, i)?;
    if j < radii.k0 {
        return Err(ChainError::LevelBelowBase { k: j, k0: radii.k0 });
    }
    let r_i = radii.level(i).expect("validated");
    let r_j = radii.level(j).expect("validated");
    let lhs = op.apply(&r_j)?;
    let (x, gap) = worst_entry(&lhs, |x| r_i[x] + r_j[x]);
    Ok(BoundCertificate::certify(
        "pairwise_radius_bound",
        lhs[x],
        r_i[x] + r_j[x],
        WitnessBuilder::new()
            .with("i", i)
            .with("j", j)
            .with("x", x)
            .with("gap", gap)
            .build(),
    ))
}

/// Certifies the chained average bound
/// `S_m ... S_(k+1) r_k <= sum over i in k..=m of 2^(i-k) r_i` entrywise.
pub fn check_chain_radius_bound(
    space: &MetricSpace,
    measure: &ProbMeasure,
    radii: &RadiiTable,
    k: i32,
    mlevel: i32,
) -> Result<BoundCertificate, ChainError> {
    if !(mlevel > k && k >= radii.k0) {
        return Err(ChainError::InvalidLevels { k, mlevel });
    }
    let mut v = radii.level(k).expect("validated");
    for level in k + 1..=mlevel {
        let op = averaging_operator(space, measure, radii, level)?;
        v = op.apply(&v)?;
    }
    let n = space.n();
    let mut rhs = vec![0.0; n];
    for i in k..=mlevel {
        let coef = 2f64.powi(i - k);
        let row = radii.level(i).expect("validated");
        for x in 0..n {
            rhs[x] += coef * row[x];
        }
    }
    let (x, _) = worst_entry(&v, |x| rhs[x]);
    Ok(BoundCertificate::certify(
        "chain_radius_bound",
        v[x],
        rhs[x],
        WitnessBuilder::new()
            .with("k", k)
            .with("mlevel", mlevel)
            .with("x", x)
            .build(),
    ))
}

/// Certifies the geometric regrouping of the chained bound against the plain
/// radius series, valid for `R > 2`:
/// `sum_{k<m} (sum_{i=k..m} 2^(i-k) r_i) R^k <= (R/(R-2)) sum_i r_i R^i`.
pub fn check_geometric_chain_sum(
    radii: &RadiiTable,
    mlevel: i32,
) -> Result<BoundCertificate, ChainError> {
    let ratio = radii.ratio;
    if ratio <= 2.0 {
        return Err(ChainError::RatioNotAboveTwo(ratio));
    }
    let mlevel = mlevel.clamp(radii.k0, radii.kmax);
    let n = radii.n();
    let mut worst: Option<(f64, f64, usize)> = None;
    for x in 0..n {
        let mut lhs = 0.0;
        for k in radii.k0..mlevel {
            let mut inner = 0.0;
            for i in k..=mlevel {
                inner += 2f64.powi(i - k) * radii.radius(i, x).expect("in range");
            }
            lhs += inner * ratio.powi(k);
        }
        let series: f64 = (radii.k0..=radii.kmax)
            .map(|i| radii.radius(i, x).expect("in range") * ratio.powi(i))
            .sum();
        let rhs = ratio / (ratio - 2.0) * series;
        if worst.is_none_or(|w| lhs - rhs > w.0 - w.1) {
            worst = Some((lhs, rhs, x));
        }
    }
    let (lhs, rhs, x) = worst.expect("at least one point");
    Ok(BoundCertificate::certify(
        "geometric_chain_sum",
        lhs,
        rhs,
        WitnessBuilder::new()
            .with("mlevel", mlevel)
            .with("x", x)
            .with("R", ratio)
            .build(),
    ))
}

/// Residual of the exact telescoping identity
/// `f - mean(f) = sum over k < m of S_m ... S_(k+1) (I - S_k) f`.
///
/// Levels above `kmax` are the identity, so any `mlevel > kmax` yields the
/// same exact decomposition; smaller requests are raised to `kmax + 1`.
pub fn check_telescoping(
    space: &MetricSpace,
    measure: &ProbMeasure,
    radii: &RadiiTable,
    f: &[f64],
    mlevel: i32,
) -> Result<f64, ChainError> {
    if f.len() != space.n() {
        return Err(ChainError::DimensionMismatch {
            op: space.n(),
            vec: f.len(),
        });
    }
    let m = mlevel.max(radii.kmax + 1);
    let mean = measure.mean(f);
    let mut sum = vec![0.0; f.len()];
    for k in radii.k0..m {
        let s_k = averaging_operator(space, measure, radii, k)?;
        let mut term: Vec<f64> = f.iter().zip(s_k.apply(f)?).map(|(v, av)| v - av).collect();
        for level in k + 1..=m {
            let op = averaging_operator(space, measure, radii, level)?;
            term = op.apply(&term)?;
        }
        for (acc, t) in sum.iter_mut().zip(&term) {
            *acc += t;
        }
    }
    let residual = f
        .iter()
        .zip(&sum)
        .map(|(v, s)| ((v - mean) - s).abs())
        .fold(0.0, f64::max);
    Ok(residual)
}

/// The chaining measure on point pairs, with per-level decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct ChainingMeasure {
    pub n: usize,
    pub ratio: f64,
    pub k0: i32,
    pub kmax: i32,
    /// The normalizer `M = sum over k, u of m(u) r_k(u) R^k`.
    #[serde(rename = "M")]
    pub normalizer: f64,
    /// Aggregated pair weights, sorted by `(u, v)`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Per-level decomposition for diagnostics, sorted within each level.
    pub levels: BTreeMap<i32, Vec<(usize, usize, f64)>>,
}

impl ChainingMeasure {
    pub fn total_mass(&self) -> f64 {
        self.pairs.iter().map(|&(_, _, w)| w).sum()
    }

    /// Mass carried by diagonal pairs. Integrands of increment form vanish
    /// there under the `0/0 = 0` convention.
    pub fn diagonal_mass(&self) -> f64 {
        self.pairs
            .iter()
            .filter(|&&(u, v, _)| u == v)
            .map(|&(_, _, w)| w)
            .sum()
    }
}

/// Builds the chaining measure for a space, function, and ratio.
pub fn build_chaining_measure(
    space: &MetricSpace,
    measure: &ProbMeasure,
    phi: &OrliczFn,
    ratio: f64,
) -> Result<ChainingMeasure, ChainError> {
    let n = space.n();
    if n < 2 {
        return Err(ChainError::DegenerateSpace);
    }
    let radii = radii_table(space, measure, phi, ratio).expect("level range is finite");
    let mut normalizer = 0.0;
    for k in radii.k0..=radii.kmax {
        let row = radii.level(k).expect("in range");
        let rk = ratio.powi(k);
        for (u, r) in row.iter().enumerate() {
            normalizer += measure.w(u) * r * rk;
        }
    }
    debug_assert!(normalizer > 0.0, "positive diameter forces M > 0");

    let mut aggregated: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut levels = BTreeMap::new();
    for k in radii.k0..=radii.kmax {
        let row = radii.level(k).expect("in range");
        let rk = ratio.powi(k);
        let mut level_pairs = Vec::new();
        for (u, &r) in row.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&v| space.dist(u, v) <= r).collect();
            let ball_mass: f64 = members.iter().map(|&v| measure.w(v)).sum();
            let scale = measure.w(u) * r * rk / (normalizer * ball_mass);
            for &v in &members {
                let w = scale * measure.w(v);
                level_pairs.push((u, v, w));
                *aggregated.entry((u, v)).or_insert(0.0) += w;
            }
        }
        levels.insert(k, level_pairs);
    }
    Ok(ChainingMeasure {
        n,
        ratio,
        k0: radii.k0,
        kmax: radii.kmax,
        normalizer,
        pairs: aggregated
            .into_iter()
            .map(|((u, v), w)| (u, v, w))
            .collect(),
        levels,
    })
}

/// Certifies the normalizer bound `M <= (R / (R - 1)) * S_bar`.
pub fn check_normalizer_bound(
    cm: &ChainingMeasure,
    profile: &MajorantProfile,
    ratio: f64,
) -> BoundCertificate {
    BoundCertificate::certify(
        "normalizer_bound",
        cm.normalizer,
        ratio / (ratio - 1.0) * profile.s_bar,
        WitnessBuilder::new()
            .with("R", ratio)
            .with("s_bar", profile.s_bar)
            .build(),
    )
}

/// Certifies that the chaining measure carries unit total mass.
pub fn check_total_mass(cm: &ChainingMeasure) -> BoundCertificate {
    BoundCertificate::certify_with_tol(
        "nu_total_mass",
        (cm.total_mass() - 1.0).abs(),
        0.0,
        tol::NU_TOTAL_MASS_ABS,
        WitnessBuilder::new().with("total", cm.total_mass()).build(),
    )
}

fn worst_entry(lhs: &[f64], rhs: impl Fn(usize) -> f64) -> (usize, f64) {
    let mut worst = (0, f64::NEG_INFINITY);
    for (x, &v) in lhs.iter().enumerate() {
        let gap = v - rhs(x);
        if gap > worst.1 {
            worst = (x, gap);
        }
    }
    worst
}

/// Per-case, per-check summary row of the lemma suite.
#[derive(Debug, Clone, Serialize)]
pub struct CaseCheckRow {
    pub case: String,
    pub check: String,
    pub instances: usize,
    pub violations: usize,
    pub min_slack: f64,
}

/// Report of the exact lemma suite over a fleet.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSuiteReport {
    pub cases: usize,
    pub checks: BTreeMap<String, IneqStats>,
    /// One row per (space, check, parameter assignment).
    pub rows: Vec<CaseCheckRow>,
    pub passed: bool,
}

/// Runs every operator lemma and measure identity across a fleet.
///
/// Per case: the Lipschitz property of the radii, the radius series bound,
/// the pairwise and chained operator bounds over all level pairs, the
/// geometric regrouping (ratios above two), the telescoping residual on
/// seeded test functions, and the two chaining-measure checks.
pub fn run_lemma_suite(fleet: &[FleetCase], seed: u64) -> LemmaSuiteReport {
    use rayon::prelude::*;

    let per_case: Vec<BTreeMap<String, IneqStats>> = fleet
        .par_iter()
        .map(|case| {
            let mut stats: BTreeMap<String, IneqStats> = BTreeMap::new();
            let mut absorb = |cert: BoundCertificate| {
                let mut tagged = cert;
                tagged
                    .witness
                    .insert("case".into(), serde_json::json!(case.tag.clone()));
                stats.entry(tagged.name.clone()).or_default().absorb(tagged);
            };
            let space = &case.space;
            let measure = &case.measure;
            let phi = OrliczFn::from_spec(&case.phi_spec).expect("fleet specs are valid");
            let ratio = case.ratio;
            let prof = profile(space, measure, &phi);
            let radii = radii_table(space, measure, &phi, ratio).expect("fleet radii converge");

            absorb(crate::majorant::check_radii_lipschitz(space, &radii));
            for cert in crate::majorant::radius_sum_check(&prof, &radii, ratio) {
                absorb(cert);
            }
            for i in radii.k0..=radii.kmax {
                for j in radii.k0..=radii.kmax {
                    absorb(
                        check_pairwise_radius_bound(space, measure, &radii, i, j)
                            .expect("levels in range"),
                    );
                }
            }
            for k in radii.k0..=radii.kmax {
                for mlevel in k + 1..=radii.kmax {
                    absorb(
                        check_chain_radius_bound(space, measure, &radii, k, mlevel)
                            .expect("levels in range"),
                    );
                }
            }
            if ratio > 2.0 {
                absorb(check_geometric_chain_sum(&radii, radii.kmax).expect("ratio above two"));
            }
            // Telescoping on two seeded functions plus one coordinate spike.
            let mut rng = seeds::derive_rng(seed, &[0x7e1e, case.index as u64]);
            let mut test_fns: Vec<Vec<f64>> = (0..2)
                .map(|_| {
                    (0..space.n())
                        .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                        .collect()
                })
                .collect();
            let mut spike = vec![0.0; space.n()];
            spike[0] = 1.0;
            test_fns.push(spike);
            for f in &test_fns {
                let residual = check_telescoping(space, measure, &radii, f, radii.kmax + 1)
                    .expect("dimensions match");
                absorb(BoundCertificate::certify_with_tol(
                    "telescoping_residual",
                    residual,
                    0.0,
                    tol::NU_TOTAL_MASS_ABS,
                    WitnessBuilder::new()
                        .with("f_digest", seeds::digest_f64s(f))
                        .build(),
                ));
            }
            if space.n() >= 2 {
                let cm = build_chaining_measure(space, measure, &phi, ratio)
                    .expect("non-degenerate case");
                absorb(check_total_mass(&cm));
                absorb(check_normalizer_bound(&cm, &prof, ratio));
            }
            stats
        })
        .collect();

    let mut checks: BTreeMap<String, IneqStats> = BTreeMap::new();
    let mut rows = Vec::new();
    for (case, case_stats) in fleet.iter().zip(per_case) {
        for (name, stats) in case_stats {
            rows.push(CaseCheckRow {
                case: case.tag.clone(),
                check: name.clone(),
                instances: stats.instances,
                violations: stats.violations,
                min_slack: stats.min_slack,
            });
            checks.entry(name).or_default().merge(stats);
        }
    }
    let passed = checks.values().all(IneqStats::all_pass);
    LemmaSuiteReport {
        cases: fleet.len(),
        checks,
        rows,
        passed,
    }
}
