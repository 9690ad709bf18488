//! Certificates for the deterministic function inequalities.
//!
//! For a function `f` on the space, the increment energy against the
//! chaining measure is
//!
//! ```text
//! E(f) = sum over pairs (u, v) of nu(u, v) * phi(|f(u) - f(v)| / d(u, v)),
//! ```
//!
//! with the `0/0 = 0` convention on the diagonal. The certified bounds are,
//! writing `mean(f)` for the measure average and `A`, `B` for the chaining
//! constants at ratio `R`:
//!
//! * mean deviation:  `|f(t) - mean(f)| <= a A sigma(t) + b B S_bar E(f)`;
//! * range:           `max f - min f <= 2 a A S + 2 b B S_bar E(f)`;
//! * Young range (a = b = 1, R = 4): `max f - min f <= 32 S (2/3 + E(f)/3)`;
//! * psi deviation:   `psi(|f(t) - mean(f)| / K) <= alpha + beta E(f)` with
//!   `K = (a A + b B) S`, given the psi-condition;
//! * psi range:       the same with `|f(s) - f(t)| / (2K)`;
//! * power range:     `(max f - min f)^p <= (2 K_p)^p E_p(f)` at the optimal
//!   power parameters;
//! * identity range:  `max f - min f <= 8 S_bar E(f)` for the identity
//!   function with `a = 0, b = 1, R = 2`.
//!
//! These are proved facts: on any valid input every certificate must pass,
//! which makes the suite a correctness oracle for the majorant, the radii,
//! and the chaining measure.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cert::{BoundCertificate, IneqStats, WitnessBuilder};
use crate::chaining::{build_chaining_measure, ChainError, ChainingMeasure};
use crate::majorant::{profile, MajorantProfile};
use crate::metric::{FleetCase, MetricSpace, ProbMeasure};
use crate::orlicz::{
    check_psi_condition, constants_ab, default_psi_grids, power_constants, GrowthParams,
    OrliczError, OrliczFn, PsiParams,
};
use crate::seeds;

#[derive(Debug, Error)]
pub enum SobolevError {
    #[error(transparent)]
    Orlicz(#[from] OrliczError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("function is not Young-flagged, as the bound requires")]
    NotYoung,
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("ambient constant K vanished with a non-constant function")]
    DegenerateK,
}

/// A sampled test function with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct FnSample {
    pub values: Vec<f64>,
    pub generator: String,
    pub seed: u64,
}

impl FnSample {
    pub fn digest(&self) -> String {
        seeds::digest_f64s(&self.values)
    }
}

/// Deterministic function generators for the verification suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnGenerator {
    /// Coordinates drawn uniformly from `[-1, 1]`.
    UniformBox,
    /// Independent standard normal coordinates.
    GaussianIid,
    /// `f(t) = min over anchors j of (g_j + d(t, a_j))`: exactly 1-Lipschitz,
    /// probing near-tightness of the identity bounds.
    LipschitzCone,
}

impl FnGenerator {
    pub const ALL: [FnGenerator; 3] = [
        FnGenerator::UniformBox,
        FnGenerator::GaussianIid,
        FnGenerator::LipschitzCone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FnGenerator::UniformBox => "uniform-box",
            FnGenerator::GaussianIid => "gaussian-iid",
            FnGenerator::LipschitzCone => "lipschitz-cone",
        }
    }

    pub fn sample(self, space: &MetricSpace, seed: u64) -> FnSample {
        let n = space.n();
        let mut rng = seeds::derive_rng(seed, &[0xf_a7]);
        let values = match self {
            FnGenerator::UniformBox => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            FnGenerator::GaussianIid => (0..n)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect(),
            FnGenerator::LipschitzCone => {
                let anchors = rng.random_range(1..=3.min(n));
                let d = space.diameter();
                let cones: Vec<(usize, f64)> = (0..anchors)
                    .map(|_| (rng.random_range(0..n), rng.random_range(0.0..d.max(1.0))))
                    .collect();
                (0..n)
                    .map(|t| {
                        cones
                            .iter()
                            .map(|&(a, g)| g + space.dist(t, a))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect()
            }
        };
        FnSample {
            values,
            generator: self.name().to_string(),
            seed,
        }
    }
}

/// Increment energy of `f` against a chaining measure.
pub fn energy(f: &[f64], cm: &ChainingMeasure, space: &MetricSpace, phi: &OrliczFn) -> f64 {
    let mut acc = 0.0;
    for &(u, v, w) in &cm.pairs {
        if u == v {
            continue; // 0/0 = 0 on the diagonal
        }
        acc += w * phi.eval_nn((f[u] - f[v]).abs() / space.dist(u, v));
    }
    acc
}

/// Everything needed to certify the function inequalities on one space with
/// one function/ratio assignment.
pub struct VerifyContext<'a> {
    pub space: &'a MetricSpace,
    pub measure: &'a ProbMeasure,
    pub phi: &'a OrliczFn,
    pub profile: &'a MajorantProfile,
    pub nu: &'a ChainingMeasure,
    pub growth: GrowthParams,
    pub ratio: f64,
    big_a: f64,
    big_b: f64,
}

impl<'a> VerifyContext<'a> {
    pub fn new(
        space: &'a MetricSpace,
        measure: &'a ProbMeasure,
        phi: &'a OrliczFn,
        profile: &'a MajorantProfile,
        nu: &'a ChainingMeasure,
        growth: GrowthParams,
        ratio: f64,
    ) -> Result<Self, SobolevError> {
        let (big_a, big_b) = constants_ab(ratio)?;
        if growth.a > 0.0 && !big_a.is_finite() {
            return Err(SobolevError::Orlicz(OrliczError::InvalidR(
                ratio,
                "R = 2 requires a = 0".into(),
            )));
        }
        Ok(Self {
            space,
            measure,
            phi,
            profile,
            nu,
            growth,
            ratio,
            big_a,
            big_b,
        })
    }

    pub fn energy(&self, f: &[f64]) -> f64 {
        energy(f, self.nu, self.space, self.phi)
    }

    /// `a * A`, honoring the `0 * inf = 0` convention at `(a, R) = (0, 2)`.
    fn a_term(&self) -> f64 {
        if self.growth.a == 0.0 {
            0.0
        } else {
            self.growth.a * self.big_a
        }
    }

    /// `K = (a A + b B) S`.
    pub fn constant_k(&self) -> f64 {
        (self.a_term() + self.growth.b * self.big_b) * self.profile.s_max
    }

    fn base_witness(&self, f: &FnSample) -> WitnessBuilder {
        WitnessBuilder::new()
            .with("phi", self.phi.name())
            .with("a", self.growth.a)
            .with("b", self.growth.b)
            .with("R", self.ratio)
            .with("f_digest", f.digest())
            .with("f_generator", f.generator.clone())
            .with("f_seed", f.seed)
    }

    /// Mean-deviation bound at the point `t`.
    pub fn check_mean_deviation_bound(&self, f: &FnSample, t: usize) -> BoundCertificate {
        let mean = self.measure.mean(&f.values);
        let lhs = (f.values[t] - mean).abs();
        let rhs = self.a_term() * self.profile.sigma[t]
            + self.growth.b * self.big_b * self.profile.s_bar * self.energy(&f.values);
        BoundCertificate::certify(
            "mean_deviation_bound",
            lhs,
            rhs,
            self.base_witness(f).with("t", t).build(),
        )
    }

    /// Mean-deviation bound at its worst point.
    pub fn check_mean_deviation_worst(&self, f: &FnSample) -> BoundCertificate {
        let mean = self.measure.mean(&f.values);
        let e = self.energy(&f.values);
        let bb = self.growth.b * self.big_b * self.profile.s_bar * e;
        let mut worst: Option<(usize, f64)> = None;
        for t in 0..self.space.n() {
            let slack = self.a_term() * self.profile.sigma[t] + bb - (f.values[t] - mean).abs();
            if worst.is_none_or(|w| slack < w.1) {
                worst = Some((t, slack));
            }
        }
        let (t, _) = worst.expect("nonempty space");
        self.check_mean_deviation_bound(f, t)
    }

    /// Range bound: `max f - min f` against `2aAS + 2bB S_bar E(f)`.
    pub fn check_range_bound(&self, f: &FnSample) -> BoundCertificate {
        let (min, max) = min_max(&f.values);
        let rhs = 2.0 * self.a_term() * self.profile.s_max
            + 2.0 * self.growth.b * self.big_b * self.profile.s_bar * self.energy(&f.values);
        BoundCertificate::certify("range_bound", max - min, rhs, self.base_witness(f).build())
    }

    /// The normalized Young-function range bound `32 S (2/3 + E(f)/3)`,
    /// fixed at `a = b = 1, R = 4`. Also asserts the arithmetic consistency
    /// of the regrouped constants.
    pub fn check_young_range_bound(&self, f: &FnSample) -> Result<BoundCertificate, SobolevError> {
        if !self.phi.is_young() {
            return Err(SobolevError::NotYoung);
        }
        if self.ratio != 4.0 || self.growth != GrowthParams::new(1.0, 1.0) {
            return Err(SobolevError::ContextMismatch(format!(
                "normalized Young bound wants a = b = 1, R = 4; got a = {}, b = {}, R = {}",
                self.growth.a, self.growth.b, self.ratio
            )));
        }
        let s = self.profile.s_max;
        // 2 a A S = 32 S * 2/3 and 2 b B S_bar <= 32 S / 3.
        debug_assert!((2.0 * self.big_a * s - 32.0 * s * (2.0 / 3.0)).abs() <= 1e-12 * s.max(1.0));
        debug_assert!(2.0 * self.big_b * self.profile.s_bar <= 32.0 * s / 3.0 + 1e-12 * s.max(1.0));
        let (min, max) = min_max(&f.values);
        let rhs = 32.0 * s * (2.0 / 3.0 + self.energy(&f.values) / 3.0);
        Ok(BoundCertificate::certify(
            "young_range_bound",
            max - min,
            rhs,
            self.base_witness(f).build(),
        ))
    }

    /// Psi-composed deviation bound with `K = (aA + bB) S`.
    ///
    /// The psi-condition must have been grid-checked (or explicitly
    /// waived); the status lands in the witness.
    pub fn check_psi_deviation_bound(
        &self,
        f: &FnSample,
        psi: &PsiParams,
        psi_checked: bool,
    ) -> Result<BoundCertificate, SobolevError> {
        let k = self.constant_k();
        let mean = self.measure.mean(&f.values);
        let dev = f
            .values
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0, f64::max);
        if k == 0.0 && dev > 0.0 {
            return Err(SobolevError::DegenerateK);
        }
        let lhs = if dev == 0.0 {
            0.0
        } else {
            psi.psi.eval_nn(dev / k)
        };
        let rhs = psi.alpha + psi.beta * self.energy(&f.values);
        Ok(BoundCertificate::certify(
            "psi_deviation_bound",
            lhs,
            rhs,
            self.base_witness(f)
                .with("psi", psi.psi.name())
                .with("alpha", psi.alpha)
                .with("beta", psi.beta)
                .with("K", k)
                .with("psi_verified", psi_checked)
                .build(),
        ))
    }

    /// Psi-composed range bound with denominator `2K`.
    pub fn check_psi_range_bound(
        &self,
        f: &FnSample,
        psi: &PsiParams,
        psi_checked: bool,
    ) -> Result<BoundCertificate, SobolevError> {
        let k = self.constant_k();
        let (min, max) = min_max(&f.values);
        let range = max - min;
        if k == 0.0 && range > 0.0 {
            return Err(SobolevError::DegenerateK);
        }
        // psi is increasing, so the worst pair is the full range.
        let lhs = if range == 0.0 {
            0.0
        } else {
            psi.psi.eval_nn(range / (2.0 * k))
        };
        let rhs = psi.alpha + psi.beta * self.energy(&f.values);
        Ok(BoundCertificate::certify(
            "psi_range_bound",
            lhs,
            rhs,
            self.base_witness(f)
                .with("psi", psi.psi.name())
                .with("alpha", psi.alpha)
                .with("beta", psi.beta)
                .with("K", k)
                .with("psi_verified", psi_checked)
                .build(),
        ))
    }
}

/// The `p`-th power range bound at the optimal power parameters:
/// `(max f - min f)^p <= (2 k_p S_p)^p * E_p(f)`, with the profile and the
/// measure both built from `x^p` and the ratio `R_p`.
pub fn check_power_range_bound(
    space: &MetricSpace,
    p: f64,
    profile_p: &MajorantProfile,
    nu_p: &ChainingMeasure,
    f: &FnSample,
) -> Result<BoundCertificate, SobolevError> {
    let consts = power_constants(p)?;
    let phi_p = if p == 1.0 {
        OrliczFn::identity()
    } else {
        OrliczFn::power(p)?
    };
    let (min, max) = min_max(&f.values);
    let k_p = consts.k_coef * profile_p.s_max;
    let lhs = (max - min).powf(p);
    let rhs = (2.0 * k_p).powf(p) * energy(&f.values, nu_p, space, &phi_p);
    Ok(BoundCertificate::certify(
        "power_range_bound",
        lhs,
        rhs,
        WitnessBuilder::new()
            .with("p", p)
            .with("R_p", consts.r)
            .with("k_coef", consts.k_coef)
            .with("f_digest", f.digest())
            .with("f_generator", f.generator.clone())
            .with("f_seed", f.seed)
            .build(),
    ))
}

/// The identity-function range bound `max f - min f <= 8 S_bar E(f)` at
/// `a = 0, b = 1, R = 2`. Delegates to the range bound; the context must be
/// the identity one.
pub fn check_identity_range_bound(
    ctx: &VerifyContext<'_>,
    f: &FnSample,
) -> Result<BoundCertificate, SobolevError> {
    if ctx.phi.power_exponent() != Some(1.0)
        || ctx.growth != GrowthParams::new(0.0, 1.0)
        || ctx.ratio != 2.0
    {
        return Err(SobolevError::ContextMismatch(
            "identity range bound wants the identity function with a = 0, b = 1, R = 2".into(),
        ));
    }
    let mut cert = ctx.check_range_bound(f);
    cert.name = "identity_range_bound".into();
    // 2 b B(2) = 8.
    debug_assert!(
        (cert.rhs - 8.0 * ctx.profile.s_bar * ctx.energy(&f.values)).abs()
            <= 1e-9 * cert.rhs.abs().max(1.0)
    );
    Ok(cert)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

/// Configuration of the randomized function suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FnSuiteConfig {
    pub functions_per_space: usize,
    pub generators: Vec<FnGenerator>,
    pub seed: u64,
}

impl FnSuiteConfig {
    pub fn new(functions_per_space: usize, seed: u64) -> Self {
        Self {
            functions_per_space,
            generators: FnGenerator::ALL.to_vec(),
            seed,
        }
    }
}

/// Aggregated outcome of the function suite.
#[derive(Debug, Clone, Serialize)]
pub struct SobolevSuiteReport {
    pub cases: usize,
    pub functions_per_space: usize,
    pub inequalities: BTreeMap<String, IneqStats>,
    pub passed: bool,
}

/// Optional replacements for the default check parameters: a custom psi for
/// the composed bounds, a fixed exponent for the power-range bound.
#[derive(Debug, Clone, Default)]
pub struct SuiteOverrides {
    pub psi: Option<PsiParams>,
    pub power_p: Option<f64>,
}

/// Per-case machinery shared by every function of the sweep.
struct CaseSetups {
    phi: OrliczFn,
    profile_main: MajorantProfile,
    nu_main: ChainingMeasure,
    nu_young: Option<ChainingMeasure>,
    profile_id: MajorantProfile,
    nu_id: ChainingMeasure,
    p: f64,
    profile_p: MajorantProfile,
    nu_p: ChainingMeasure,
    psi: PsiParams,
    psi_checked: bool,
}

fn case_setups(case: &FleetCase, overrides: &SuiteOverrides) -> CaseSetups {
    let space = &case.space;
    let measure = &case.measure;
    let phi = OrliczFn::from_spec(&case.phi_spec).expect("fleet specs are valid");
    let profile_main = profile(space, measure, &phi);
    let nu_main =
        build_chaining_measure(space, measure, &phi, case.ratio).expect("fleet cases have n >= 2");
    // The normalized Young bound is pinned at R = 4; reuse the main measure
    // when the ratios agree.
    let nu_young = if case.ratio == 4.0 {
        None
    } else {
        Some(build_chaining_measure(space, measure, &phi, 4.0).expect("n >= 2"))
    };
    let identity = OrliczFn::identity();
    let profile_id = profile(space, measure, &identity);
    let nu_id = build_chaining_measure(space, measure, &identity, 2.0).expect("n >= 2");
    // The power-range bound runs at the override exponent, the function's
    // own exponent when it is a power, and 2 otherwise.
    let p = overrides
        .power_p
        .or_else(|| phi.power_exponent())
        .unwrap_or(2.0);
    let consts = power_constants(p).expect("p >= 1");
    let phi_p = if p == 1.0 {
        identity.clone()
    } else {
        OrliczFn::power(p).expect("p >= 1")
    };
    let (profile_p, nu_p) = (
        profile(space, measure, &phi_p),
        build_chaining_measure(space, measure, &phi_p, consts.r).expect("n >= 2"),
    );
    // Default psi = phi with (alpha, beta) = (0, 1); grid-check either way.
    let psi = overrides.psi.clone().unwrap_or_else(|| PsiParams {
        psi: phi.clone(),
        alpha: 0.0,
        beta: 1.0,
    });
    let (xs, ys) = default_psi_grids();
    let psi_checked = check_psi_condition(&phi, &psi, &xs, &ys).pass;
    CaseSetups {
        phi,
        profile_main,
        nu_main,
        nu_young,
        profile_id,
        nu_id,
        p,
        profile_p,
        nu_p,
        psi,
        psi_checked,
    }
}

/// Runs the full battery of function inequalities over a fleet.
pub fn run_function_suite(fleet: &[FleetCase], config: &FnSuiteConfig) -> SobolevSuiteReport {
    run_function_suite_ext(fleet, config, &SuiteOverrides::default())
}

/// As [`run_function_suite`], with optional psi and exponent overrides.
pub fn run_function_suite_ext(
    fleet: &[FleetCase],
    config: &FnSuiteConfig,
    overrides: &SuiteOverrides,
) -> SobolevSuiteReport {
    use rayon::prelude::*;

    let per_case: Vec<BTreeMap<String, IneqStats>> = fleet
        .par_iter()
        .map(|case| {
            let mut stats: BTreeMap<String, IneqStats> = BTreeMap::new();
            if case.space.n() < 2 {
                return stats;
            }
            let setups = case_setups(case, overrides);
            let ctx_main = VerifyContext::new(
                &case.space,
                &case.measure,
                &setups.phi,
                &setups.profile_main,
                &setups.nu_main,
                GrowthParams::new(case.growth_a, case.growth_b),
                case.ratio,
            )
            .expect("fleet parameters are admissible");
            let young_growth = GrowthParams::new(1.0, 1.0);
            let ctx_young = VerifyContext::new(
                &case.space,
                &case.measure,
                &setups.phi,
                &setups.profile_main,
                setups.nu_young.as_ref().unwrap_or(&setups.nu_main),
                young_growth,
                4.0,
            )
            .expect("R = 4 is admissible");
            let identity = OrliczFn::identity();
            let ctx_id = VerifyContext::new(
                &case.space,
                &case.measure,
                &identity,
                &setups.profile_id,
                &setups.nu_id,
                GrowthParams::new(0.0, 1.0),
                2.0,
            )
            .expect("identity parameters are admissible");
            let psi = setups.psi.clone();

            let mut absorb = |cert: BoundCertificate| {
                let mut tagged = cert;
                tagged
                    .witness
                    .insert("case".into(), serde_json::json!(case.tag.clone()));
                stats.entry(tagged.name.clone()).or_default().absorb(tagged);
            };

            let generators: &[FnGenerator] = if config.generators.is_empty() {
                &FnGenerator::ALL
            } else {
                &config.generators
            };
            for fn_idx in 0..config.functions_per_space {
                let generator = generators[fn_idx % generators.len()];
                let fseed = seeds::mix(config.seed, &[case.index as u64, fn_idx as u64]);
                let f = generator.sample(&case.space, fseed);

                absorb(ctx_main.check_mean_deviation_worst(&f));
                absorb(ctx_main.check_range_bound(&f));
                absorb(
                    ctx_young
                        .check_young_range_bound(&f)
                        .expect("fleet functions are Young"),
                );
                absorb(
                    ctx_main
                        .check_psi_deviation_bound(&f, &psi, setups.psi_checked)
                        .expect("K > 0 on fleet spaces"),
                );
                absorb(
                    ctx_main
                        .check_psi_range_bound(&f, &psi, setups.psi_checked)
                        .expect("K > 0 on fleet spaces"),
                );
                absorb(
                    check_power_range_bound(
                        &case.space,
                        setups.p,
                        &setups.profile_p,
                        &setups.nu_p,
                        &f,
                    )
                    .expect("p >= 1"),
                );
                absorb(check_identity_range_bound(&ctx_id, &f).expect("identity context is exact"));
            }
            stats
        })
        .collect();

    let mut inequalities: BTreeMap<String, IneqStats> = BTreeMap::new();
    for case_stats in per_case {
        for (name, stats) in case_stats {
            inequalities.entry(name).or_default().merge(stats);
        }
    }
    let passed = inequalities.values().all(IneqStats::all_pass);
    SobolevSuiteReport {
        cases: fleet.len(),
        functions_per_space: config.functions_per_space,
        inequalities,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_fleet, generate_space, FleetSpec, SpaceFamilySpec};
    use crate::orlicz::default_growth_grids;
    use proptest::prelude::*;
    use std::sync::Arc;

    struct Fixture {
        space: MetricSpace,
        measure: ProbMeasure,
        phi: OrliczFn,
        profile: MajorantProfile,
        nu: ChainingMeasure,
    }

    impl Fixture {
        fn two_point(phi: OrliczFn, ratio: f64) -> Self {
            let (space, measure) =
                generate_space(&SpaceFamilySpec::Path { n: 2, step: 1.0 }).unwrap();
            let profile = profile(&space, &measure, &phi);
            let nu = build_chaining_measure(&space, &measure, &phi, ratio).unwrap();
            Self {
                space,
                measure,
                phi,
                profile,
                nu,
            }
        }

        fn ctx(&self, growth: GrowthParams, ratio: f64) -> VerifyContext<'_> {
            VerifyContext::new(
                &self.space,
                &self.measure,
                &self.phi,
                &self.profile,
                &self.nu,
                growth,
                ratio,
            )
            .unwrap()
        }
    }

    fn sample(values: Vec<f64>) -> FnSample {
        FnSample {
            values,
            generator: "fixed".into(),
            seed: 0,
        }
    }

    #[test]
    fn energy_examples() {
        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 4.0);
        // Constant functions carry no energy.
        assert_eq!(energy(&[3.0, 3.0], &fx.nu, &fx.space, &fx.phi), 0.0);
        // Two off-diagonal pairs of weight 1/4 each, ratio 1, phi(1) = 1.
        let e = energy(&[0.0, 1.0], &fx.nu, &fx.space, &fx.phi);
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn energy_of_lipschitz_function_is_bounded_by_offdiagonal_mass() {
        let (space, measure) = generate_space(&SpaceFamilySpec::Path { n: 5, step: 1.0 }).unwrap();
        let phi = OrliczFn::power(2.0).unwrap();
        let nu = build_chaining_measure(&space, &measure, &phi, 4.0).unwrap();
        let f = FnGenerator::LipschitzCone.sample(&space, 7);
        let e = energy(&f.values, &nu, &space, &phi);
        let off_mass: f64 = nu
            .pairs
            .iter()
            .filter(|&&(u, v, _)| u != v)
            .map(|&(_, _, w)| w)
            .sum();
        assert!(e <= phi.eval_nn(1.0) * off_mass + 1e-12);
    }

    #[test]
    fn mean_deviation_two_point_hand_case() {
        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 4.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 4.0);
        let f = sample(vec![0.0, 1.0]);
        let cert = ctx.check_mean_deviation_bound(&f, 0);
        assert!(cert.pass);
        assert!((cert.lhs - 0.5).abs() < 1e-12);
        // aA sigma + bB S_bar E = sqrt(2) (32/3 + 16/3 * 1/2) = 40 sqrt(2) / 3.
        assert!((cert.rhs - 40.0 * 2f64.sqrt() / 3.0).abs() < 1e-9);
        assert!((cert.rhs - 18.86).abs() < 0.01);

        let constant = sample(vec![2.0, 2.0]);
        let c = ctx.check_mean_deviation_bound(&constant, 1);
        assert!(c.pass);
        assert_eq!(c.lhs, 0.0);
    }

    #[test]
    fn range_bound_identity_hand_case() {
        let fx = Fixture::two_point(OrliczFn::identity(), 2.0);
        let ctx = fx.ctx(GrowthParams::new(0.0, 1.0), 2.0);
        let f = sample(vec![0.0, 1.0]);
        let cert = check_identity_range_bound(&ctx, &f).unwrap();
        assert!(cert.pass);
        assert!((cert.lhs - 1.0).abs() < 1e-15);
        // 2 b B(2) S_bar E = 8 * 2 * 1/2 = 8.
        assert!((cert.rhs - 8.0).abs() < 1e-12);
    }

    #[test]
    fn young_range_two_point_hand_case() {
        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 4.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 4.0);
        let f = sample(vec![0.0, 1.0]);
        let cert = ctx.check_young_range_bound(&f).unwrap();
        assert!(cert.pass);
        // 32 sqrt(2) (2/3 + 1/6) ~= 37.7.
        assert!((cert.rhs - 32.0 * 2f64.sqrt() * (2.0 / 3.0 + 1.0 / 6.0)).abs() < 1e-9);
        assert!((cert.rhs - 37.7).abs() < 0.02);

        let constant = sample(vec![1.0, 1.0]);
        let c = ctx.check_young_range_bound(&constant).unwrap();
        assert!(c.pass);
        assert!((c.rhs - 64.0 / 3.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn young_range_rejects_non_young_and_wrong_ratio() {
        let non_young = OrliczFn::piecewise(vec![[0.0, 0.0], [1.0, 2.0], [2.0, 2.5]]).unwrap();
        let fx = Fixture::two_point(non_young, 4.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 4.0);
        assert!(matches!(
            ctx.check_young_range_bound(&sample(vec![0.0, 1.0])),
            Err(SobolevError::NotYoung)
        ));

        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 3.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 3.0);
        assert!(matches!(
            ctx.check_young_range_bound(&sample(vec![0.0, 1.0])),
            Err(SobolevError::ContextMismatch(_))
        ));
    }

    #[test]
    fn psi_deviation_two_point_hand_case() {
        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 4.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 4.0);
        let psi = PsiParams {
            psi: OrliczFn::power(2.0).unwrap(),
            alpha: 0.0,
            beta: 1.0,
        };
        let f = sample(vec![0.0, 1.0]);
        let cert = ctx.check_psi_deviation_bound(&f, &psi, true).unwrap();
        assert!(cert.pass);
        // K = 16 sqrt(2); lhs = (1/2 / K)^2; rhs = E = 1/2.
        let k = 16.0 * 2f64.sqrt();
        assert!((cert.lhs - (0.5 / k).powi(2)).abs() < 1e-15);
        assert!((cert.lhs - 4.9e-4).abs() < 5e-5);
        assert!((cert.rhs - 0.5).abs() < 1e-12);
        assert_eq!(
            cert.witness.get("psi_verified"),
            Some(&serde_json::json!(true))
        );

        let c = ctx
            .check_psi_deviation_bound(&sample(vec![3.0, 3.0]), &psi, true)
            .unwrap();
        assert!(c.pass);
        assert_eq!(c.lhs, 0.0);
    }

    #[test]
    fn psi_range_uses_twice_k() {
        let fx = Fixture::two_point(OrliczFn::power(2.0).unwrap(), 4.0);
        let ctx = fx.ctx(GrowthParams::new(1.0, 1.0), 4.0);
        let psi = PsiParams {
            psi: OrliczFn::power(2.0).unwrap(),
            alpha: 0.0,
            beta: 1.0,
        };
        let f = sample(vec![0.0, 1.0]);
        let cert = ctx.check_psi_range_bound(&f, &psi, true).unwrap();
        assert!(cert.pass);
        let k = 16.0 * 2f64.sqrt();
        assert!((cert.lhs - (1.0 / (2.0 * k)).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn power_range_two_point_hand_case() {
        let (space, measure) = generate_space(&SpaceFamilySpec::Path { n: 2, step: 1.0 }).unwrap();
        let phi = OrliczFn::power(2.0).unwrap();
        let prof = profile(&space, &measure, &phi);
        let consts = power_constants(2.0).unwrap();
        let nu_p = build_chaining_measure(&space, &measure, &phi, consts.r).unwrap();
        let f = sample(vec![0.0, 1.0]);
        let cert = check_power_range_bound(&space, 2.0, &prof, &nu_p, &f).unwrap();
        assert!(cert.pass);
        assert!((cert.lhs - 1.0).abs() < 1e-15);
        // (2 * 5^(5/4) * sqrt(2))^2 * 1/2 ~= 223.6.
        let want = (2.0 * 5f64.powf(1.25) * 2f64.sqrt()).powi(2) * 0.5;
        assert!((cert.rhs - want).abs() < 1e-9);
        assert!((cert.rhs - 223.6).abs() < 0.1);

        let c =
            check_power_range_bound(&space, 2.0, &prof, &nu_p, &sample(vec![1.0, 1.0])).unwrap();
        assert!(c.pass);
        assert_eq!(c.lhs, 0.0);
    }

    #[test]
    fn suite_is_deterministic_and_clean_on_a_small_fleet() {
        let fleet = build_fleet(&FleetSpec { count: 8, max_n: 9 }, 5);
        let config = FnSuiteConfig::new(20, 5);
        let a = run_function_suite(&fleet, &config);
        let b = run_function_suite(&fleet, &config);
        assert!(a.passed, "violations: {:#?}", a.inequalities);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.inequalities.len(), 7);
        // Zero trials: an empty report.
        let empty = run_function_suite(&fleet, &FnSuiteConfig::new(0, 5));
        assert!(empty.inequalities.is_empty());
        assert!(empty.passed);
    }

    #[test]
    fn growth_grid_check_accepts_fleet_assignments() {
        // Every (phi, a, b) the fleet hands out belongs to its growth class.
        for (phi, a, b) in [
            (OrliczFn::identity(), 0.0, 1.0),
            (OrliczFn::power(1.5).unwrap(), 1.0, 1.0),
            (OrliczFn::power(2.0).unwrap(), 1.0, 1.0),
            (OrliczFn::power(3.0).unwrap(), 1.0, 1.0),
        ] {
            let (xs, ys) = default_growth_grids(&phi);
            let rep =
                crate::orlicz::check_growth_condition(&phi, GrowthParams::new(a, b), &xs, &ys);
            assert!(rep.pass, "{} not in class ({a}, {b})", phi.name());
        }
    }

    #[test]
    fn energy_is_monotone_in_phi() {
        let (space, measure) = generate_space(&SpaceFamilySpec::Path { n: 4, step: 1.0 }).unwrap();
        let phi1 = OrliczFn::identity();
        // phi2 >= phi1 pointwise.
        let phi2 =
            OrliczFn::custom("x-plus-x-squared", Arc::new(|x: f64| x + x * x), None, true).unwrap();
        let nu = build_chaining_measure(&space, &measure, &phi1, 2.0).unwrap();
        for seed in 0..20 {
            let f = FnGenerator::GaussianIid.sample(&space, seed);
            let e1 = energy(&f.values, &nu, &space, &phi1);
            let e2 = energy(&f.values, &nu, &space, &phi2);
            assert!(e1 <= e2 + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn adding_a_constant_changes_no_certificate(
            seed in 0u64..100,
            shift in -25.0f64..25.0,
        ) {
            let (space, measure) = generate_space(&SpaceFamilySpec::RandomEuclidean {
                n: 6, dim: 2, scale: 1.0, seed,
            }).unwrap();
            let phi = OrliczFn::power(2.0).unwrap();
            let prof = profile(&space, &measure, &phi);
            let nu = build_chaining_measure(&space, &measure, &phi, 4.0).unwrap();
            let ctx = VerifyContext::new(
                &space, &measure, &phi, &prof, &nu,
                GrowthParams::new(1.0, 1.0), 4.0,
            ).unwrap();
            let f = FnGenerator::UniformBox.sample(&space, seed);
            let shifted = FnSample {
                values: f.values.iter().map(|v| v + shift).collect(),
                generator: f.generator.clone(),
                seed: f.seed,
            };
            for (a, b) in [
                (ctx.check_range_bound(&f), ctx.check_range_bound(&shifted)),
                (ctx.check_mean_deviation_worst(&f), ctx.check_mean_deviation_worst(&shifted)),
            ] {
                prop_assert_eq!(a.pass, b.pass);
                prop_assert!((a.lhs - b.lhs).abs() <= 1e-9 * a.lhs.abs().max(1.0));
                prop_assert!((a.rhs - b.rhs).abs() <= 1e-9 * a.rhs.abs().max(1.0));
            }
        }

        #[test]
        fn distance_scaling_preserves_certificates(
            seed in 0u64..100,
            lambda in 0.25f64..4.0,
        ) {
            let (space, measure) = generate_space(&SpaceFamilySpec::RandomEuclidean {
                n: 6, dim: 2, scale: 1.0, seed,
            }).unwrap();
            let scaled = space.scaled(lambda);
            let phi = OrliczFn::power(2.0).unwrap();
            let f = FnGenerator::GaussianIid.sample(&space, seed);
            let f_scaled = FnSample {
                values: f.values.iter().map(|v| v * lambda).collect(),
                generator: f.generator.clone(),
                seed: f.seed,
            };

            let prof = profile(&space, &measure, &phi);
            let nu = build_chaining_measure(&space, &measure, &phi, 4.0).unwrap();
            let ctx = VerifyContext::new(
                &space, &measure, &phi, &prof, &nu,
                GrowthParams::new(1.0, 1.0), 4.0,
            ).unwrap();

            let prof_s = profile(&scaled, &measure, &phi);
            let nu_s = build_chaining_measure(&scaled, &measure, &phi, 4.0).unwrap();
            let ctx_s = VerifyContext::new(
                &scaled, &measure, &phi, &prof_s, &nu_s,
                GrowthParams::new(1.0, 1.0), 4.0,
            ).unwrap();

            // Energy is scale-free; both certificate sides scale by lambda.
            let e = ctx.energy(&f.values);
            let e_s = ctx_s.energy(&f_scaled.values);
            prop_assert!((e - e_s).abs() <= 1e-9 * e.abs().max(1.0));
            let a = ctx.check_range_bound(&f);
            let b = ctx_s.check_range_bound(&f_scaled);
            prop_assert_eq!(a.pass, b.pass);
            prop_assert!((b.lhs - lambda * a.lhs).abs() <= 1e-9 * b.lhs.abs().max(1.0));
            prop_assert!((b.rhs - lambda * a.rhs).abs() <= 1e-9 * b.rhs.abs().max(1.0));
        }
    }
}
