//! Finite metric spaces, probability measures, and generated test families.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orlicz::OrliczSpec;
use crate::seeds;
use crate::tol;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("distance matrix must be square, row {row} has length {len} (expected {n})")]
    InvalidShape { row: usize, len: usize, n: usize },
    #[error("distance d({i},{j}) = {value} is not a finite nonnegative number")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("asymmetric distances: d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    AsymmetricDistance {
        i: usize,
        j: usize,
        dij: f64,
        dji: f64,
    },
    #[error("diagonal entry d({i},{i}) = {value} must be zero")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("distinct points {i} and {j} at distance zero; merge duplicates before building")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality fails at ({i},{j},{k}): d({i},{k}) = {dik} > {dij} + {djk}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        dij: f64,
        djk: f64,
    },
    #[error("labels length {len} does not match point count {n}")]
    LabelMismatch { len: usize, n: usize },
    #[error("invalid space family spec: {0}")]
    InvalidSpec(String),
    #[error("measure weights invalid: {0}")]
    InvalidMeasure(String),
}

/// A validated finite metric space: `n` points and a symmetric positive
/// off-diagonal distance matrix satisfying the triangle inequality.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl MetricSpace {
    /// Validates and builds a space from a square distance matrix.
    pub fn from_matrix(
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, MetricError> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::InvalidShape {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(MetricError::LabelMismatch { len: l.len(), n });
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = rows[i][j];
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j, value: v });
                }
                dist[i * n + j] = v;
            }
        }
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal {
                    i,
                    value: dist[i * n + i],
                });
            }
            for j in i + 1..n {
                let dij = dist[i * n + j];
                let dji = dist[j * n + i];
                if dij != dji {
                    return Err(MetricError::AsymmetricDistance { i, j, dij, dji });
                }
                if dij == 0.0 {
                    return Err(MetricError::ZeroOffDiagonal { i, j });
                }
            }
        }
        // Triangle inequality, with a rounding guard: matrices assembled in
        // floating point can overshoot exact equality by a few ulps on
        // collinear triples.
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dij = dist[i * n + j];
                for k in 0..n {
                    let dik = dist[i * n + k];
                    let djk = dist[j * n + k];
                    let bound = dij + djk;
                    if dik > bound + tol::TRIANGLE_GUARD_REL * bound {
                        return Err(MetricError::TriangleViolation {
                            i,
                            j,
                            k,
                            dik,
                            dij,
                            djk,
                        });
                    }
                }
            }
        }
        Ok(Self { n, dist, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Largest pairwise distance; zero for a single point.
    pub fn diameter(&self) -> f64 {
        let mut d = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                d = f64::max(d, self.dist(i, j));
            }
        }
        d
    }

    /// Sorted distinct distances from `x` to all points, starting at 0.
    pub fn sorted_distances_from(&self, x: usize) -> Vec<f64> {
        let mut ds: Vec<f64> = (0..self.n).map(|y| self.dist(x, y)).collect();
        ds.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        ds.dedup();
        ds
    }

    /// The same space with every distance multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0 && lambda.is_finite());
        Self {
            n: self.n,
            dist: self.dist.iter().map(|d| d * lambda).collect(),
            labels: self.labels.clone(),
        }
    }

    /// The subspace on the given points (indices into this space).
    pub fn restrict(&self, points: &[usize]) -> Self {
        let m = points.len();
        let mut dist = vec![0.0; m * m];
        for (a, &i) in points.iter().enumerate() {
            for (b, &j) in points.iter().enumerate() {
                dist[a * m + b] = self.dist(i, j);
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| points.iter().map(|&i| l[i].clone()).collect());
        Self { n: m, dist, labels }
    }
}

/// Full-support probability weights on the points of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMeasure {
    w: Vec<f64>,
}

impl ProbMeasure {
    /// Validates strictly positive weights summing to one within `1e-12`,
    /// then renormalizes exactly.
    pub fn new(w: Vec<f64>) -> Result<Self, MetricError> {
        if w.is_empty() {
            return Err(MetricError::InvalidMeasure("no weights".into()));
        }
        let mut sum = 0.0;
        for (i, &v) in w.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(MetricError::InvalidMeasure(format!(
                    "weight {i} = {v}; full support requires strictly positive finite weights"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > tol::MEASURE_SUM_ABS {
            return Err(MetricError::InvalidMeasure(format!(
                "weights sum to {sum}, outside 1 +/- {}",
                tol::MEASURE_SUM_ABS
            )));
        }
        let w = w.into_iter().map(|v| v / sum).collect();
        Ok(Self { w })
    }

    /// Builds from positive weights of arbitrary scale by normalizing.
    pub fn from_raw(w: Vec<f64>) -> Result<Self, MetricError> {
        let sum: f64 = w.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(MetricError::InvalidMeasure(format!("raw weight sum {sum}")));
        }
        Self::new(w.into_iter().map(|v| v / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self {
            w: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    #[inline]
    pub fn w(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Integral of `f` against the measure.
    pub fn mean(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.w.len());
        self.w.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

/// Total measure of the closed ball around point `x` of radius `eps`.
///
/// Right-continuous and nondecreasing in `eps`; always includes `x` itself.
pub fn ball_mass(space: &MetricSpace, measure: &ProbMeasure, x: usize, eps: f64) -> f64 {
    assert!(eps >= 0.0, "ball radius must be nonnegative");
    let mut mass = 0.0;
    for y in 0..space.n() {
        if space.dist(x, y) <= eps {
            mass += measure.w(y);
        }
    }
    mass
}

/// Recipe for a generated space family. Deterministic given the embedded
/// seed; the accompanying measure defaults to uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceFamilySpec {
    /// `n` points on a line at spacing `step`.
    Path {
        n: usize,
        #[serde(default = "default_step")]
        step: f64,
    },
    /// A `rows x cols` planar grid with Euclidean distances, spacing `step`.
    Grid2d {
        rows: usize,
        cols: usize,
        #[serde(default = "default_step")]
        step: f64,
    },
    /// Leaves of a complete rooted tree. Two leaves whose paths diverge
    /// after `j` shared levels sit at distance `scale * ratio^j`.
    UltrametricTree {
        depth: u32,
        branching: usize,
        #[serde(default = "default_step")]
        scale: f64,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
    /// `n` points drawn uniformly from `[0, scale]^dim`.
    RandomEuclidean {
        n: usize,
        dim: usize,
        #[serde(default = "default_step")]
        scale: f64,
        #[serde(default)]
        seed: u64,
    },
    /// An explicit distance matrix, optionally with its own measure.
    Explicit {
        dist: Vec<Vec<f64>>,
        #[serde(default)]
        measure: Option<Vec<f64>>,
    },
}

fn default_step() -> f64 {
    1.0
}

fn default_ratio() -> f64 {
    0.5
}

impl SpaceFamilySpec {
    /// Short tag used in witnesses and fleet reports.
    pub fn tag(&self) -> String {
        match self {
            Self::Path { n, step } => format!("path(n={n},step={step})"),
            Self::Grid2d { rows, cols, step } => format!("grid2d({rows}x{cols},step={step})"),
            Self::UltrametricTree {
                depth,
                branching,
                scale,
                ratio,
            } => {
                format!("ultrametric(depth={depth},branch={branching},scale={scale},ratio={ratio})")
            }
            Self::RandomEuclidean {
                n,
                dim,
                scale,
                seed,
            } => {
                format!("random-euclidean(n={n},dim={dim},scale={scale},seed={seed})")
            }
            Self::Explicit { dist, .. } => format!("explicit(n={})", dist.len()),
        }
    }
}

/// A generated space together with its measure and, when the family is
/// embedded in Euclidean space, the generating coordinates.
#[derive(Debug, Clone)]
pub struct GeneratedSpace {
    pub space: MetricSpace,
    pub measure: ProbMeasure,
    pub embedding: Option<Vec<Vec<f64>>>,
}

/// Deterministically generates a space and measure from a family spec.
pub fn generate_space(spec: &SpaceFamilySpec) -> Result<(MetricSpace, ProbMeasure), MetricError> {
    let g = generate_space_full(spec)?;
    Ok((g.space, g.measure))
}

/// As [`generate_space`], also returning Euclidean coordinates when the
/// family has them (path, grid, random-euclidean).
pub fn generate_space_full(spec: &SpaceFamilySpec) -> Result<GeneratedSpace, MetricError> {
    match spec {
        SpaceFamilySpec::Path { n, step } => {
            if *n == 0 || !(step.is_finite() && *step > 0.0) {
                return Err(MetricError::InvalidSpec(spec.tag()));
            }
            let rows = (0..*n)
                .map(|i| {
                    (0..*n)
                        .map(|j| (i.abs_diff(j)) as f64 * step)
                        .collect::<Vec<_>>()
                })
                .collect();
            let space = MetricSpace::from_matrix(rows, None)?;
            let embedding = Some((0..*n).map(|i| vec![i as f64 * step]).collect());
            Ok(GeneratedSpace {
                measure: ProbMeasure::uniform(*n),
                space,
                embedding,
            })
        }
        SpaceFamilySpec::Grid2d { rows, cols, step } => {
            if *rows == 0 || *cols == 0 || !(step.is_finite() && *step > 0.0) {
                return Err(MetricError::InvalidSpec(spec.tag()));
            }
            let n = rows * cols;
            let coord = |idx: usize| ((idx / cols) as f64, (idx % cols) as f64);
            let mat = (0..n)
                .map(|i| {
                    let (ri, ci) = coord(i);
                    (0..n)
                        .map(|j| {
                            let (rj, cj) = coord(j);
                            let dr = ri - rj;
                            let dc = ci - cj;
                            // Integer squared norm, square root, then scale:
                            // collinear triples stay exact.
                            (dr * dr + dc * dc).sqrt() * step
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let space = MetricSpace::from_matrix(mat, None)?;
            let embedding = Some(
                (0..n)
                    .map(|i| {
                        let (r, c) = coord(i);
                        vec![r * step, c * step]
                    })
                    .collect(),
            );
            Ok(GeneratedSpace {
                measure: ProbMeasure::uniform(n),
                space,
                embedding,
            })
        }
        SpaceFamilySpec::UltrametricTree {
            depth,
            branching,
            scale,
            ratio,
        } => {
            if *branching == 0
                || !(scale.is_finite() && *scale > 0.0)
                || !(*ratio > 0.0 && *ratio < 1.0)
            {
                return Err(MetricError::InvalidSpec(spec.tag()));
            }
            let n = branching.checked_pow(*depth).ok_or_else(|| {
                MetricError::InvalidSpec(format!("{}: too many leaves", spec.tag()))
            })?;
            if n > 1 << 20 {
                return Err(MetricError::InvalidSpec(format!(
                    "{}: too many leaves ({n})",
                    spec.tag()
                )));
            }
            // Leaf index digits in base `branching`, most significant first,
            // give the root-to-leaf path; the shared prefix length is the
            // divergence level.
            let digits = |mut leaf: usize| -> Vec<usize> {
                let mut d = vec![0; *depth as usize];
                for slot in (0..*depth as usize).rev() {
                    d[slot] = leaf % branching;
                    leaf /= branching;
                }
                d
            };
            let paths: Vec<Vec<usize>> = (0..n).map(digits).collect();
            let mat = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == j {
                                return 0.0;
                            }
                            let shared = paths[i]
                                .iter()
                                .zip(&paths[j])
                                .take_while(|(a, b)| a == b)
                                .count();
                            scale * ratio.powi(shared as i32)
                        })
                        .collect::<Vec<_>>()
                })
                .collect();
            let space = MetricSpace::from_matrix(mat, None)?;
            Ok(GeneratedSpace {
                measure: ProbMeasure::uniform(n),
                space,
                embedding: None,
            })
        }
        SpaceFamilySpec::RandomEuclidean {
            n,
            dim,
            scale,
            seed,
        } => {
            if *n == 0 || *dim == 0 || !(scale.is_finite() && *scale > 0.0) {
                return Err(MetricError::InvalidSpec(spec.tag()));
            }
            let mut rng = seeds::derive_rng(*seed, &[0x5ace]);
            let pts: Vec<Vec<f64>> = (0..*n)
                .map(|_| (0..*dim).map(|_| rng.random::<f64>() * scale).collect())
                .collect();
            let mat = (0..*n)
                .map(|i| {
                    (0..*n)
                        .map(|j| euclidean(&pts[i], &pts[j]))
                        .collect::<Vec<_>>()
                })
                .collect();
            let space = MetricSpace::from_matrix(mat, None)?;
            Ok(GeneratedSpace {
                measure: ProbMeasure::uniform(*n),
                space,
                embedding: Some(pts),
            })
        }
        SpaceFamilySpec::Explicit { dist, measure } => {
            let space = MetricSpace::from_matrix(dist.clone(), None)?;
            let measure = match measure {
                Some(w) => ProbMeasure::new(w.clone())?,
                None => ProbMeasure::uniform(space.n()),
            };
            Ok(GeneratedSpace {
                space,
                measure,
                embedding: None,
            })
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Configuration of the randomized test fleet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FleetSpec {
    #[serde(default = "default_fleet_count")]
    pub count: usize,
    #[serde(default = "default_fleet_max_n")]
    pub max_n: usize,
}

fn default_fleet_count() -> usize {
    200
}

fn default_fleet_max_n() -> usize {
    40
}

impl Default for FleetSpec {
    fn default() -> Self {
        Self {
            count: default_fleet_count(),
            max_n: default_fleet_max_n(),
        }
    }
}

/// One fleet member: a space, its measure, and the function/ratio
/// assignment under which the lemma and inequality suites run it.
#[derive(Debug, Clone)]
pub struct FleetCase {
    pub index: usize,
    pub tag: String,
    pub space: MetricSpace,
    pub measure: ProbMeasure,
    pub embedding: Option<Vec<Vec<f64>>>,
    pub family: SpaceFamilySpec,
    pub phi_spec: OrliczSpec,
    pub growth_a: f64,
    pub growth_b: f64,
    pub ratio: f64,
}

/// Builds the seeded fleet: families cycle path / grid / ultrametric /
/// random-euclidean, sizes up to `max_n`, functions drawn from identity and
/// the powers 1.5, 2, 3, ratios from `{3, 4, 8}` for Young parameters
/// `(1, 1)` plus `(R = 2, a = 0)` cases for the identity.
pub fn build_fleet(spec: &FleetSpec, seed: u64) -> Vec<FleetCase> {
    let max_n = spec.max_n.max(2);
    (0..spec.count)
        .map(|index| {
            let mut rng = seeds::derive_rng(seed, &[0xf1ee7, index as u64]);
            let family = match index % 4 {
                0 => SpaceFamilySpec::Path {
                    n: rng.random_range(2..=max_n),
                    step: rng.random_range(0.5..2.0),
                },
                1 => {
                    let rows = rng.random_range(2..=6usize);
                    let max_cols = (max_n / rows).clamp(2, 8);
                    SpaceFamilySpec::Grid2d {
                        rows,
                        cols: rng.random_range(2..=max_cols),
                        step: rng.random_range(0.5..2.0),
                    }
                }
                2 => {
                    let branching = if max_n >= 3 {
                        rng.random_range(2..=3usize)
                    } else {
                        2
                    };
                    // Deepest complete tree with at most max_n leaves.
                    let mut max_depth = 1u32;
                    while branching.pow(max_depth + 1) <= max_n {
                        max_depth += 1;
                    }
                    SpaceFamilySpec::UltrametricTree {
                        depth: rng.random_range(1..=max_depth),
                        branching,
                        scale: rng.random_range(0.5..2.0),
                        ratio: rng.random_range(0.3..0.7),
                    }
                }
                _ => SpaceFamilySpec::RandomEuclidean {
                    n: rng.random_range(2..=max_n),
                    dim: rng.random_range(1..=3usize),
                    scale: rng.random_range(0.5..2.0),
                    seed: rng.random(),
                },
            };
            let generated = generate_space_full(&family).expect("fleet specs are valid");
            let n = generated.space.n();
            let measure = if rng.random::<bool>() {
                generated.measure.clone()
            } else {
                let raw: Vec<f64> = (0..n).map(|_| 0.25 + rng.random::<f64>()).collect();
                ProbMeasure::from_raw(raw).expect("positive raw weights")
            };
            let phi_spec = match rng.random_range(0..4u8) {
                0 => OrliczSpec::Identity,
                1 => OrliczSpec::Power { p: 1.5 },
                2 => OrliczSpec::Power { p: 2.0 },
                _ => OrliczSpec::Power { p: 3.0 },
            };
            let (growth_a, growth_b, ratio) = if phi_spec == OrliczSpec::Identity {
                let r = [2.0, 3.0, 4.0, 8.0][rng.random_range(0..4usize)];
                (0.0, 1.0, r)
            } else {
                let r = [3.0, 4.0, 8.0][rng.random_range(0..3usize)];
                (1.0, 1.0, r)
            };
            let tag = format!(
                "#{index} {} phi={:?} (a={growth_a},b={growth_b},R={ratio})",
                family.tag(),
                phi_spec
            );
            FleetCase {
                index,
                tag,
                space: generated.space,
                measure,
                embedding: generated.embedding,
                family,
                phi_spec,
                growth_a,
                growth_b,
                ratio,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_point_space_is_valid_and_degenerate() {
        let s = MetricSpace::from_matrix(vec![vec![0.0]], None).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.diameter(), 0.0);
    }

    #[test]
    fn two_point_space_is_valid() {
        let s = MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]], None).unwrap();
        assert_eq!(s.diameter(), 1.0);
    }

    #[test]
    fn triangle_violation_reports_witness() {
        let err = MetricSpace::from_matrix(
            vec![
                vec![0.0, 1.0, 3.0],
                vec![1.0, 0.0, 1.0],
                vec![3.0, 1.0, 0.0],
            ],
            None,
        )
        .unwrap_err();
        match err {
            MetricError::TriangleViolation { i, j, k, .. } => {
                // d(0,2) = 3 > d(0,1) + d(1,2) = 2.
                assert_eq!((i.min(k), j, i.max(k)), (0, 1, 2));
            }
            other => panic!("expected triangle violation, got {other}"),
        }
    }

    #[test]
    fn rejects_malformed_matrices() {
        assert!(matches!(
            MetricSpace::from_matrix(vec![vec![0.0, 1.0]], None),
            Err(MetricError::InvalidShape { .. })
        ));
        assert!(matches!(
            MetricSpace::from_matrix(vec![vec![0.0, -1.0], vec![-1.0, 0.0]], None),
            Err(MetricError::NegativeDistance { .. })
        ));
        assert!(matches!(
            MetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]], None),
            Err(MetricError::AsymmetricDistance { .. })
        ));
        assert!(matches!(
            MetricSpace::from_matrix(vec![vec![0.0, 0.0], vec![0.0, 0.0]], None),
            Err(MetricError::ZeroOffDiagonal { .. })
        ));
        assert!(matches!(
            MetricSpace::from_matrix(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]], None),
            Err(MetricError::NegativeDistance { .. })
        ));
    }

    #[test]
    fn path_diameter() {
        let (s, _) = generate_space(&SpaceFamilySpec::Path { n: 3, step: 1.0 }).unwrap();
        assert_eq!(s.diameter(), 2.0);
    }

    #[test]
    fn ball_mass_examples() {
        let (s, m) = generate_space(&SpaceFamilySpec::Path { n: 2, step: 1.0 }).unwrap();
        assert_eq!(ball_mass(&s, &m, 0, 0.0), 0.5);
        assert_eq!(ball_mass(&s, &m, 0, 1.0), 1.0);

        let (s3, _) = generate_space(&SpaceFamilySpec::Path { n: 3, step: 1.0 }).unwrap();
        let m3 = ProbMeasure::new(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(ball_mass(&s3, &m3, 1, 0.5), 0.5);
    }

    #[test]
    fn measure_validation() {
        assert!(ProbMeasure::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(ProbMeasure::new(vec![1.0, 0.0]).is_err());
        assert!(ProbMeasure::new(vec![1.5, -0.5]).is_err());
        // Within tolerance: renormalized exactly.
        let m = ProbMeasure::new(vec![0.5 + 4e-13, 0.5]).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generate_examples() {
        let (s, m) = generate_space(&SpaceFamilySpec::Path { n: 2, step: 1.0 }).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(m.weights(), &[0.5, 0.5]);

        let (s, _) = generate_space(&SpaceFamilySpec::UltrametricTree {
            depth: 1,
            branching: 2,
            scale: 1.0,
            ratio: 0.5,
        })
        .unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.dist(0, 1), 1.0);

        let spec = SpaceFamilySpec::RandomEuclidean {
            n: 10,
            dim: 2,
            scale: 1.0,
            seed: 7,
        };
        let (s1, m1) = generate_space(&spec).unwrap();
        let (s2, m2) = generate_space(&spec).unwrap();
        assert_eq!(s1.n(), 10);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(s1.dist(i, j), s2.dist(i, j));
            }
        }
        assert_eq!(m1, m2);
    }

    #[test]
    fn ultrametric_satisfies_strong_triangle() {
        let (s, _) = generate_space(&SpaceFamilySpec::UltrametricTree {
            depth: 3,
            branching: 2,
            scale: 2.0,
            ratio: 0.4,
        })
        .unwrap();
        for i in 0..s.n() {
            for j in 0..s.n() {
                for k in 0..s.n() {
                    assert!(s.dist(i, k) <= s.dist(i, j).max(s.dist(j, k)) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn fleet_is_deterministic_and_mixed() {
        let spec = FleetSpec {
            count: 48,
            max_n: 12,
        };
        let a = build_fleet(&spec, 99);
        let b = build_fleet(&spec, 99);
        assert_eq!(a.len(), 48);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.tag, y.tag);
            assert_eq!(x.space.n(), y.space.n());
            assert_eq!(x.measure, y.measure);
        }
        assert!(a.iter().any(|c| c.phi_spec == OrliczSpec::Identity));
        assert!(a.iter().any(|c| c.ratio == 8.0));
        assert!(a
            .iter()
            .any(|c| matches!(c.family, SpaceFamilySpec::Grid2d { .. })));
        // R = 2 only ever rides with a = 0.
        for c in &a {
            if c.ratio == 2.0 {
                assert_eq!(c.growth_a, 0.0);
            }
            assert!(c.space.n() <= 12);
        }
    }

    proptest! {
        #[test]
        fn generated_spaces_self_validate(seed in 0u64..500) {
            // Any fleet space round-trips through full validation.
            let spec = FleetSpec { count: 1, max_n: 14 };
            let fleet = build_fleet(&spec, seed);
            let case = &fleet[0];
            let rows: Vec<Vec<f64>> = (0..case.space.n())
                .map(|i| (0..case.space.n()).map(|j| case.space.dist(i, j)).collect())
                .collect();
            prop_assert!(MetricSpace::from_matrix(rows, None).is_ok());
        }

        #[test]
        fn ball_mass_is_monotone_and_saturates(seed in 0u64..200, eps in 0.0f64..3.0) {
            let spec = SpaceFamilySpec::RandomEuclidean { n: 9, dim: 2, scale: 1.0, seed };
            let (s, m) = generate_space(&spec).unwrap();
            for x in 0..s.n() {
                let small = ball_mass(&s, &m, x, eps);
                let large = ball_mass(&s, &m, x, eps + 0.25);
                prop_assert!(small <= large + 1e-15);
                prop_assert!((ball_mass(&s, &m, x, s.diameter()) - 1.0).abs() < 1e-12);
                // Step structure: the value at eps is the value attained at
                // the largest recorded distance <= eps, and nudging eps to
                // the right within the gap changes nothing (right
                // continuity).
                let ds = s.sorted_distances_from(x);
                let floor = ds.iter().copied().rfind(|d| *d <= eps);
                if let Some(floor) = floor {
                    prop_assert!((ball_mass(&s, &m, x, floor) - small).abs() < 1e-15);
                }
                let gap_next = ds.iter().copied().find(|d| *d > eps);
                let nudge = gap_next.map_or(eps + 1.0, |g| 0.5 * (eps + g));
                prop_assert!((ball_mass(&s, &m, x, nudge) - small).abs() < 1e-15);
            }
        }
    }
}
