//! The majorizing-measure functional and the chaining radii.
//!
//! For a space with measure `m` and function `phi`, the per-point functional
//! is
//!
//! ```text
//! sigma(x) = integral over [0, D(T)] of phi_inv(1 / m(B(x, eps))) d eps.
//! ```
//!
//! On a finite space the ball mass is a right-continuous step function of
//! the radius, so the integral is an exact finite sum over the segments
//! between consecutive distinct distances from `x`; each segment uses the
//! mass attained at its left endpoint.
//!
//! The chaining structure fixes a ratio `R >= 2` and the base level
//! `k0` with `R^k0 <= phi_inv(1) < R^(k0+1)`. Above the base level,
//!
//! ```text
//! r_k(x) = min { eps >= 0 : phi_inv(1 / m(B(x, eps))) <= R^k },
//! ```
//!
//! while `r_k0(x) = D(T)`. The minimum is attained on a finite space; it is
//! the smallest distance at which the ball mass reaches `1 / phi(R^k)`.
//! Radii vanish identically once `phi(R^k)` exceeds the reciprocal of the
//! smallest atom, which bounds the level range `k0..=kmax`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::cert::{BoundCertificate, WitnessBuilder};
use crate::metric::{MetricSpace, ProbMeasure};
use crate::orlicz::OrliczFn;
use crate::tol;

#[derive(Debug, Error)]
pub enum MajorantError {
    #[error("level {k} lies below the base level {k0}")]
    LevelBelowBase { k: i32, k0: i32 },
    #[error("radii did not vanish within {0} levels; phi may be bounded")]
    RadiiNotConverging(usize),
}

/// Per-point jump list: the sorted distinct distances from a point paired
/// with the ball mass attained at each.
pub type JumpList = Vec<(f64, f64)>;

/// The majorant profile of a space: `sigma` per point, its supremum and
/// mean, and the jump lists driving every downstream computation.
#[derive(Debug, Clone, Serialize)]
pub struct MajorantProfile {
    pub sigma: Vec<f64>,
    /// `S = max_x sigma(x)`.
    pub s_max: f64,
    /// `S_bar = sum_x m(x) sigma(x)`.
    pub s_bar: f64,
    pub diameter: f64,
    pub jumps: Vec<JumpList>,
}

fn jump_list(space: &MetricSpace, measure: &ProbMeasure, x: usize) -> JumpList {
    let n = space.n();
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|y| (space.dist(x, y), measure.w(y))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut out: JumpList = Vec::new();
    let mut mass = 0.0;
    for (d, w) in pairs {
        mass += w;
        match out.last_mut() {
            Some(last) if last.0 == d => last.1 = mass,
            _ => out.push((d, mass)),
        }
    }
    out
}

/// Exact value of `sigma(x)` by piecewise-constant integration.
pub fn sigma_at(space: &MetricSpace, measure: &ProbMeasure, phi: &OrliczFn, x: usize) -> f64 {
    sigma_from_jumps(&jump_list(space, measure, x), space.diameter(), phi)
}

fn sigma_from_jumps(jumps: &JumpList, diameter: f64, phi: &OrliczFn) -> f64 {
    let mut total = 0.0;
    for (idx, &(d, mass)) in jumps.iter().enumerate() {
        let end = jumps.get(idx + 1).map_or(diameter, |next| next.0);
        let len = end - d;
        if len > 0.0 {
            total += phi.inv_nn(1.0 / mass) * len;
        }
    }
    total
}

/// Computes `sigma` for every point along with `S` and `S_bar`.
pub fn profile(space: &MetricSpace, measure: &ProbMeasure, phi: &OrliczFn) -> MajorantProfile {
    let n = space.n();
    let diameter = space.diameter();
    let jumps: Vec<JumpList> = (0..n).map(|x| jump_list(space, measure, x)).collect();
    let sigma: Vec<f64> = jumps
        .iter()
        .map(|j| sigma_from_jumps(j, diameter, phi))
        .collect();
    let s_max = sigma.iter().cloned().fold(0.0, f64::max);
    let s_bar = measure.mean(&sigma);
    MajorantProfile {
        sigma,
        s_max,
        s_bar,
        diameter,
        jumps,
    }
}

/// The base level: the integer `k0` with `R^k0 <= phi_inv(1) < R^(k0+1)`.
/// Exact powers of `R` land on their own exponent.
pub fn base_level_k0(phi: &OrliczFn, ratio: f64) -> i32 {
    assert!(ratio >= 2.0, "ratio parameter must be at least 2");
    let v = phi.inv_at_one();
    debug_assert!(
        v > 0.0,
        "phi increasing with phi(0) = 0 forces phi_inv(1) > 0"
    );
    let mut k = (v.ln() / ratio.ln()).floor() as i32;
    // Floating-point logs can land one off near exact powers; fix up with
    // direct comparisons.
    while ratio.powi(k + 1) <= v {
        k += 1;
    }
    while ratio.powi(k) > v {
        k -= 1;
    }
    k
}

/// Per-level, per-point chaining radii over the full level range.
#[derive(Debug, Clone, Serialize)]
pub struct RadiiTable {
    pub k0: i32,
    /// Largest level with a positive radius (equals `k0` when none is).
    pub kmax: i32,
    pub ratio: f64,
    n: usize,
    radii: BTreeMap<i32, Vec<f64>>,
}

impl RadiiTable {
    /// Radius at level `k` for point `x`; zero above `kmax`, an error below
    /// the base level.
    pub fn radius(&self, k: i32, x: usize) -> Result<f64, MajorantError> {
        if k < self.k0 {
            return Err(MajorantError::LevelBelowBase { k, k0: self.k0 });
        }
        Ok(self.radii.get(&k).map_or(0.0, |row| row[x]))
    }

    /// The radii vector at a level (zeros above `kmax`).
    pub fn level(&self, k: i32) -> Result<Vec<f64>, MajorantError> {
        if k < self.k0 {
            return Err(MajorantError::LevelBelowBase { k, k0: self.k0 });
        }
        Ok(self
            .radii
            .get(&k)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n]))
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + '_ {
        self.radii.keys().copied()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rows keyed by level, for serialization.
    pub fn rows(&self) -> &BTreeMap<i32, Vec<f64>> {
        &self.radii
    }
}

fn radius_from_jumps(jumps: &JumpList, threshold: f64) -> f64 {
    for &(d, mass) in jumps {
        if mass >= threshold {
            return d;
        }
    }
    // The full-space mass is 1 >= threshold for every admissible level.
    jumps.last().map_or(0.0, |last| last.0)
}

/// The radius at one level for one point. Level `k0` returns the diameter.
pub fn radius_at(
    space: &MetricSpace,
    measure: &ProbMeasure,
    phi: &OrliczFn,
    ratio: f64,
    k: i32,
    x: usize,
) -> Result<f64, MajorantError> {
    let k0 = base_level_k0(phi, ratio);
    if k < k0 {
        return Err(MajorantError::LevelBelowBase { k, k0 });
    }
    if k == k0 {
        return Ok(space.diameter());
    }
    let threshold = 1.0 / phi.eval_nn(ratio.powi(k));
    Ok(radius_from_jumps(&jump_list(space, measure, x), threshold))
}

/// Builds the radii for all levels `k0..=kmax`.
pub fn radii_table(
    space: &MetricSpace,
    measure: &ProbMeasure,
    phi: &OrliczFn,
    ratio: f64,
) -> Result<RadiiTable, MajorantError> {
    let n = space.n();
    let k0 = base_level_k0(phi, ratio);
    let diameter = space.diameter();
    let jumps: Vec<JumpList> = (0..n).map(|x| jump_list(space, measure, x)).collect();

    let mut radii = BTreeMap::new();
    radii.insert(k0, vec![diameter; n]);
    let mut kmax = k0;
    const LEVEL_CAP: usize = 4096;
    for step in 1..=LEVEL_CAP {
        let k = k0 + step as i32;
        let threshold = 1.0 / phi.eval_nn(ratio.powi(k));
        let row: Vec<f64> = jumps
            .iter()
            .map(|j| radius_from_jumps(j, threshold))
            .collect();
        if row.iter().all(|&r| r == 0.0) {
            break;
        }
        radii.insert(k, row);
        kmax = k;
        if step == LEVEL_CAP {
            return Err(MajorantError::RadiiNotConverging(LEVEL_CAP));
        }
    }
    Ok(RadiiTable {
        k0,
        kmax,
        ratio,
        n,
        radii,
    })
}

/// Certifies, per point, the radius series bound
/// `sum_k r_k(x) R^k <= (R / (R - 1)) sigma(x)`.
pub fn radius_sum_check(
    profile: &MajorantProfile,
    radii: &RadiiTable,
    ratio: f64,
) -> Vec<BoundCertificate> {
    let n = profile.sigma.len();
    (0..n)
        .map(|x| {
            let lhs: f64 = radii
                .levels()
                .map(|k| radii.radius(k, x).expect("level in table") * ratio.powi(k))
                .sum();
            let rhs = ratio / (ratio - 1.0) * profile.sigma[x];
            BoundCertificate::certify(
                "radius_sum",
                lhs,
                rhs,
                WitnessBuilder::new()
                    .with("x", x)
                    .with("R", ratio)
                    .with("sigma", profile.sigma[x])
                    .build(),
            )
        })
        .collect()
}

/// Certifies the 1-Lipschitz property of every radius level:
/// `|r_k(s) - r_k(t)| <= d(s, t)` within `1e-12`.
pub fn check_radii_lipschitz(space: &MetricSpace, radii: &RadiiTable) -> BoundCertificate {
    let n = space.n();
    let mut worst: Option<(f64, f64, i32, usize, usize)> = None;
    for k in radii.levels() {
        let row = radii.level(k).expect("level in table");
        for s in 0..n {
            for t in s + 1..n {
                let lhs = (row[s] - row[t]).abs();
                let rhs = space.dist(s, t);
                let gap = lhs - rhs;
                if worst.is_none_or(|w| gap > w.0 - w.1) {
                    worst = Some((lhs, rhs, k, s, t));
                }
            }
        }
    }
    let (lhs, rhs, k, s, t) = worst.unwrap_or((0.0, 0.0, radii.k0, 0, 0));
    BoundCertificate::certify_with_tol(
        "radii_lipschitz",
        lhs,
        rhs,
        tol::LIPSCHITZ_ABS,
        WitnessBuilder::new()
            .with("level", k)
            .with("s", s)
            .with("t", t)
            .build(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{ball_mass, generate_space, SpaceFamilySpec};
    use proptest::prelude::*;

    fn two_point() -> (MetricSpace, ProbMeasure) {
        generate_space(&SpaceFamilySpec::Path { n: 2, step: 1.0 }).unwrap()
    }

    fn three_path() -> (MetricSpace, ProbMeasure) {
        let (s, _) = generate_space(&SpaceFamilySpec::Path { n: 3, step: 1.0 }).unwrap();
        (s, ProbMeasure::new(vec![0.25, 0.5, 0.25]).unwrap())
    }

    /// Independent oracle: Riemann sum of `phi_inv(1 / m(B(x, eps)))` on a
    /// uniform grid. Quadrature, not the piecewise-exact path under test.
    fn sigma_oracle(
        space: &MetricSpace,
        measure: &ProbMeasure,
        phi: &OrliczFn,
        x: usize,
        steps: usize,
    ) -> f64 {
        let d = space.diameter();
        if d == 0.0 {
            return 0.0;
        }
        let h = d / steps as f64;
        let mut acc = 0.0;
        for i in 0..steps {
            let eps = (i as f64 + 0.5) * h;
            acc += phi.inv_nn(1.0 / ball_mass(space, measure, x, eps)) * h;
        }
        acc
    }

    #[test]
    fn sigma_two_point_identity_and_square() {
        let (s, m) = two_point();
        let id = OrliczFn::identity();
        let p2 = OrliczFn::power(2.0).unwrap();
        for x in 0..2 {
            assert!((sigma_at(&s, &m, &id, x) - 2.0).abs() < 1e-12);
            assert!((sigma_at(&s, &m, &p2, x) - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_three_point_path_frozen_values() {
        let (s, m) = three_path();
        let p2 = OrliczFn::power(2.0).unwrap();
        // Hand evaluation: center has segments [0,1) at mass 1/2 and [1,2)
        // at mass 1; ends have [0,1) at mass 1/4 and [1,2) at mass 3/4.
        let center = 2f64.sqrt() + 1.0;
        let end = 2.0 + (4.0f64 / 3.0).sqrt();
        assert!((sigma_at(&s, &m, &p2, 1) - center).abs() < 1e-12);
        assert!((sigma_at(&s, &m, &p2, 0) - end).abs() < 1e-12);
        assert!((sigma_at(&s, &m, &p2, 2) - end).abs() < 1e-12);

        let prof = profile(&s, &m, &p2);
        assert!((prof.s_max - end).abs() < 1e-12);
        let s_bar = 0.25 * end + 0.5 * center + 0.25 * end;
        assert!((prof.s_bar - s_bar).abs() < 1e-12);
        assert!(prof.s_bar <= prof.s_max);
        // Spot values quoted to 4 decimals.
        assert!((prof.s_max - 3.1547).abs() < 5e-5);
        assert!((prof.s_bar - 2.7845).abs() < 5e-5);
    }

    #[test]
    fn sigma_matches_quadrature_oracle() {
        let (s, m) = three_path();
        for phi in [OrliczFn::identity(), OrliczFn::power(1.5).unwrap()] {
            for x in 0..3 {
                let exact = sigma_at(&s, &m, &phi, x);
                let approx = sigma_oracle(&s, &m, &phi, x, 200_000);
                assert!(
                    (exact - approx).abs() < 1e-3,
                    "{}: sigma({x}) = {exact} vs oracle {approx}",
                    phi.name()
                );
            }
        }
    }

    #[test]
    fn profile_single_point() {
        let (s, m) = generate_space(&SpaceFamilySpec::Path { n: 1, step: 1.0 }).unwrap();
        let prof = profile(&s, &m, &OrliczFn::power(2.0).unwrap());
        assert_eq!(prof.sigma, vec![0.0]);
        assert_eq!(prof.s_max, 0.0);
        assert_eq!(prof.s_bar, 0.0);
    }

    #[test]
    fn sigma_vanishes_exactly_on_degenerate_spaces() {
        let phi = OrliczFn::power(2.0).unwrap();
        let (s1, m1) = generate_space(&SpaceFamilySpec::Path { n: 1, step: 1.0 }).unwrap();
        assert_eq!(sigma_at(&s1, &m1, &phi, 0), 0.0);
        for seed in 0..10 {
            let spec = SpaceFamilySpec::RandomEuclidean {
                n: 6,
                dim: 2,
                scale: 1.0,
                seed,
            };
            let (s, m) = generate_space(&spec).unwrap();
            for x in 0..s.n() {
                assert!(sigma_at(&s, &m, &phi, x) > 0.0);
            }
        }
    }

    #[test]
    fn base_level_examples() {
        let p2 = OrliczFn::power(2.0).unwrap();
        assert_eq!(base_level_k0(&p2, 2.0), 0);
        assert_eq!(base_level_k0(&p2, 4.0), 0);
        assert_eq!(base_level_k0(&OrliczFn::identity(), 3.0), 0);

        // phi_inv(1) = 2: piecewise through (0,0),(4,2) has phi(x) = x/2.
        let pw = OrliczFn::piecewise(vec![[0.0, 0.0], [4.0, 2.0]]).unwrap();
        assert!((pw.inv_at_one() - 2.0).abs() < 1e-12);
        assert_eq!(base_level_k0(&pw, 2.0), 1);

        // phi_inv(1) = 0.3 with R = 2 sits in [2^-2, 2^-1).
        let pw = OrliczFn::piecewise(vec![[0.0, 0.0], [0.3, 1.0]]).unwrap();
        assert_eq!(base_level_k0(&pw, 2.0), -2);

        // Exact power boundary: phi_inv(1) = 4 = 2^2.
        let pw = OrliczFn::piecewise(vec![[0.0, 0.0], [4.0, 1.0]]).unwrap();
        assert_eq!(base_level_k0(&pw, 2.0), 2);
    }

    /// Independent oracle: scan the candidate radii through the inverse-form
    /// definition instead of the threshold comparison.
    fn radius_oracle(
        space: &MetricSpace,
        measure: &ProbMeasure,
        phi: &OrliczFn,
        ratio: f64,
        k: i32,
        x: usize,
    ) -> f64 {
        let cap = ratio.powi(k);
        for d in space.sorted_distances_from(x) {
            if phi.inv_nn(1.0 / ball_mass(space, measure, x, d)) <= cap {
                return d;
            }
        }
        space.diameter()
    }

    #[test]
    fn radius_examples() {
        let p2 = OrliczFn::power(2.0).unwrap();
        let (s, m) = two_point();
        // Base level: the diameter.
        assert_eq!(radius_at(&s, &m, &p2, 2.0, 0, 0).unwrap(), 1.0);
        // Level 1: threshold 1/phi(2) = 1/4 <= 1/2, so the radius is zero.
        assert_eq!(radius_at(&s, &m, &p2, 2.0, 1, 0).unwrap(), 0.0);
        assert!(matches!(
            radius_at(&s, &m, &p2, 2.0, -1, 0),
            Err(MajorantError::LevelBelowBase { .. })
        ));

        // Boundary case: mass 1/4 meets threshold 1/4 exactly (closed
        // inequality) at the path end.
        let (s3, m3) = three_path();
        assert_eq!(radius_at(&s3, &m3, &p2, 2.0, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn radius_matches_definition_oracle() {
        let (s, m) = three_path();
        for phi in [OrliczFn::power(1.5).unwrap(), OrliczFn::power(3.0).unwrap()] {
            let table = radii_table(&s, &m, &phi, 2.0).unwrap();
            for k in table.k0 + 1..=table.kmax {
                for x in 0..3 {
                    let got = radius_at(&s, &m, &phi, 2.0, k, x).unwrap();
                    let want = radius_oracle(&s, &m, &phi, 2.0, k, x);
                    assert_eq!(got, want, "{} k={k} x={x}", phi.name());
                }
            }
        }
    }

    #[test]
    fn radii_table_examples() {
        let p2 = OrliczFn::power(2.0).unwrap();
        let (s, m) = two_point();
        let t = radii_table(&s, &m, &p2, 2.0).unwrap();
        assert_eq!((t.k0, t.kmax), (0, 0));
        assert_eq!(t.level(0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(t.level(1).unwrap(), vec![0.0, 0.0]);

        let (s1, m1) = generate_space(&SpaceFamilySpec::Path { n: 1, step: 1.0 }).unwrap();
        let t1 = radii_table(&s1, &m1, &p2, 2.0).unwrap();
        assert_eq!((t1.k0, t1.kmax), (0, 0));
        assert_eq!(t1.level(0).unwrap(), vec![0.0]);

        let (s3, m3) = three_path();
        let t3 = radii_table(&s3, &m3, &p2, 2.0).unwrap();
        assert_eq!((t3.k0, t3.kmax), (0, 0));
        assert_eq!(t3.level(0).unwrap(), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn radii_nonincreasing_in_level() {
        let (s, m) = three_path();
        let phi = OrliczFn::power(3.0).unwrap();
        let t = radii_table(&s, &m, &phi, 2.0).unwrap();
        for x in 0..3 {
            let mut prev = f64::INFINITY;
            for k in t.k0..=t.kmax + 1 {
                let r = t.radius(k, x).unwrap();
                assert!(r <= prev + 1e-15);
                prev = r;
            }
        }
    }

    #[test]
    fn radius_sum_examples() {
        let p2 = OrliczFn::power(2.0).unwrap();
        let (s, m) = two_point();
        let prof = profile(&s, &m, &p2);
        let table = radii_table(&s, &m, &p2, 2.0).unwrap();
        let certs = radius_sum_check(&prof, &table, 2.0);
        assert!(certs.iter().all(|c| c.pass));
        assert!((certs[0].lhs - 1.0).abs() < 1e-12);
        assert!((certs[0].rhs - 2.0 * 2f64.sqrt()).abs() < 1e-12);

        let (s3, m3) = three_path();
        let prof3 = profile(&s3, &m3, &p2);
        let t3 = radii_table(&s3, &m3, &p2, 2.0).unwrap();
        let certs3 = radius_sum_check(&prof3, &t3, 2.0);
        assert!(certs3.iter().all(|c| c.pass));
        assert!((certs3[1].lhs - 2.0).abs() < 1e-12);
        assert!((certs3[1].rhs - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_certificate_on_small_spaces() {
        let (s, m) = three_path();
        for phi in [OrliczFn::identity(), OrliczFn::power(2.0).unwrap()] {
            let t = radii_table(&s, &m, &phi, 2.0).unwrap();
            assert!(check_radii_lipschitz(&s, &t).pass);
        }
    }

    #[test]
    fn enlarging_an_atom_without_renormalizing_decreases_sigma() {
        // With raw (unnormalized) masses, every ball gets heavier when one
        // atom grows, so the integrand and sigma can only shrink. The
        // renormalized variant genuinely increases sigma at far points, so
        // it is the raw form that is monotone.
        let (s, _) = generate_space(&SpaceFamilySpec::Path { n: 5, step: 1.0 }).unwrap();
        let phi = OrliczFn::power(2.0).unwrap();
        let base = vec![0.2; 5];
        let sigma_raw = |w: &[f64]| -> Vec<f64> {
            (0..5)
                .map(|x| {
                    let ds = s.sorted_distances_from(x);
                    let mut acc = 0.0;
                    for (i, &d) in ds.iter().enumerate() {
                        let mass: f64 = (0..5).filter(|&y| s.dist(x, y) <= d).map(|y| w[y]).sum();
                        let end = ds.get(i + 1).copied().unwrap_or(s.diameter());
                        acc += phi.inv_nn(1.0 / mass) * (end - d);
                    }
                    acc
                })
                .collect()
        };
        let before = sigma_raw(&base);
        for y in 0..5 {
            let mut grown = base.clone();
            grown[y] += 0.35;
            let after = sigma_raw(&grown);
            for x in 0..5 {
                assert!(
                    after[x] <= before[x] + 1e-12,
                    "sigma({x}) rose after enlarging atom {y}"
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sigma_and_radii_scale_homogeneously(
            seed in 0u64..300,
            lambda in 0.1f64..8.0,
        ) {
            let spec = SpaceFamilySpec::RandomEuclidean { n: 7, dim: 2, scale: 1.0, seed };
            let (s, m) = generate_space(&spec).unwrap();
            let phi = OrliczFn::power(2.0).unwrap();
            let scaled = s.scaled(lambda);

            let p1 = profile(&s, &m, &phi);
            let p2 = profile(&scaled, &m, &phi);
            for x in 0..s.n() {
                prop_assert!((p2.sigma[x] - lambda * p1.sigma[x]).abs() <= 1e-12 * p2.sigma[x].abs().max(1.0));
            }
            prop_assert!((p2.s_max - lambda * p1.s_max).abs() <= 1e-12 * p2.s_max.max(1.0));
            prop_assert!((p2.s_bar - lambda * p1.s_bar).abs() <= 1e-12 * p2.s_bar.max(1.0));
            prop_assert!((p2.diameter - lambda * p1.diameter).abs() <= 1e-12 * p2.diameter.max(1.0));

            let t1 = radii_table(&s, &m, &phi, 4.0).unwrap();
            let t2 = radii_table(&scaled, &m, &phi, 4.0).unwrap();
            prop_assert_eq!(t1.k0, t2.k0);
            prop_assert_eq!(t1.kmax, t2.kmax);
            for k in t1.k0..=t1.kmax {
                for x in 0..s.n() {
                    let a = t1.radius(k, x).unwrap() * lambda;
                    let b = t2.radius(k, x).unwrap();
                    prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }

        #[test]
        fn radius_sum_holds_on_random_spaces(seed in 0u64..300) {
            let spec = SpaceFamilySpec::RandomEuclidean { n: 9, dim: 2, scale: 2.0, seed };
            let (s, m) = generate_space(&spec).unwrap();
            for phi in [OrliczFn::identity(), OrliczFn::power(2.0).unwrap()] {
                let prof = profile(&s, &m, &phi);
                let table = radii_table(&s, &m, &phi, 3.0).unwrap();
                for c in radius_sum_check(&prof, &table, 3.0) {
                    prop_assert!(c.pass, "radius sum fails: {:?}", c);
                }
                prop_assert!(check_radii_lipschitz(&s, &table).pass);
            }
        }
    }
}
