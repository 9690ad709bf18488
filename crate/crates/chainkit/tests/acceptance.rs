//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! The randomized criteria run on the canonical fleet — 200 seeded spaces of
//! at most 40 points mixing the four families, the four functions, and the
//! ratio assignments — with every tolerance pinned in `chainkit::tol`.

use std::time::Instant;

use chainkit::cert::IneqStats;
use chainkit::chaining::run_lemma_suite;
use chainkit::cli::{dispatch, CommandConfig, ReportFormat, RunConfig};
use chainkit::metric::{build_fleet, FleetSpec};
use chainkit::orlicz::{constants_ab, power_constants, power_membership_value, OrliczSpec};
use chainkit::process::run_process_suite;
use chainkit::sobolev::{run_function_suite, FnSuiteConfig};
use chainkit::tol;

const FLEET_SEED: u64 = 7;

fn canonical_fleet() -> Vec<chainkit::metric::FleetCase> {
    build_fleet(
        &FleetSpec {
            count: 200,
            max_n: 40,
        },
        FLEET_SEED,
    )
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[{}] {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {detail}");
}

fn rel_close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1.0)
}

fn stats_clean(checks: &std::collections::BTreeMap<String, IneqStats>, names: &[&str]) -> bool {
    names.iter().all(|name| {
        checks
            .get(*name)
            .is_some_and(|s| s.instances > 0 && s.violations == 0)
    })
}

#[test]
fn criterion_1_constants_reproduction() {
    let (a4, b4) = constants_ab(4.0).expect("R = 4 is admissible");
    let sum_ok = rel_close(a4, 32.0 / 3.0, 1e-12)
        && rel_close(b4, 16.0 / 3.0, 1e-12)
        && rel_close(a4 + b4, 16.0, 1e-12);
    // The headline factor is twice the range-bound coefficient at
    // a = b = 1, R = 4.
    let range_coefficient = 2.0 * a4 + 2.0 * b4;
    let headline_ok = rel_close(range_coefficient, 32.0, 1e-12);
    report(
        "criterion 1 (constants reproduction)",
        sum_ok && headline_ok,
        &format!(
            "A = {a4}, B = {b4}, A+B = {}, 2A+2B = {range_coefficient}",
            a4 + b4
        ),
    );
}

#[test]
fn criterion_2_power_function_optimum() {
    let start = Instant::now();
    let mut worst_identity = 0.0f64;
    let mut worst_membership = 0.0f64;
    let mut worst_gap = f64::INFINITY;
    for p in [1.1, 1.5, 2.0, 3.0, 5.0, 10.0] {
        let c = power_constants(p).expect("p >= 1");
        let q = p / (p - 1.0);

        // Closed-form identity: the optimum coefficient equals a A + b B.
        let (big_a, big_b) = constants_ab(c.r).expect("R_p > 2");
        let identity_err = ((c.a * big_a + c.b * big_b) - c.k_coef).abs() / c.k_coef;
        worst_identity = worst_identity.max(identity_err);

        // The optimal pair sits exactly on the membership boundary.
        let membership = power_membership_value(p, c.a, c.b).expect("valid parameters");
        worst_membership = worst_membership.max((membership - 1.0).abs());

        // Grid search over the boundary parametrization finds nothing
        // meaningfully below the closed-form optimum.
        let mut grid_min = f64::INFINITY;
        for ri in 0..360 {
            let r = 2.0 + 18.0 * ((ri as f64 + 1.0) / 360.0).powi(2);
            let (ga, gb) = constants_ab(r).expect("R > 2");
            for ai in 0..240 {
                let a = c.a * 10f64.powf(-3.0 + 6.0 * ai as f64 / 239.0);
                let b = (a * q).powf(-p / q) / p;
                grid_min = grid_min.min(a * ga + b * gb);
            }
        }
        worst_gap = worst_gap.min(grid_min / c.k_coef);
        assert!(
            grid_min >= c.k_coef * (1.0 - tol::MINIMALITY_REL),
            "p = {p}: grid found {grid_min} below closed form {}",
            c.k_coef
        );
    }
    let pass = worst_identity <= 1e-9 && worst_membership <= tol::MEMBERSHIP_EQUALITY_ABS;
    report(
        "criterion 2 (power-function optimum)",
        pass,
        &format!(
            "identity err {worst_identity:.2e}, membership err {worst_membership:.2e}, grid/closed-form ratio >= {worst_gap:.9} in {:.1?}",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_3_exact_lemma_suite() {
    let start = Instant::now();
    let fleet = canonical_fleet();
    assert_eq!(fleet.len(), 200);
    assert!(fleet.iter().all(|c| c.space.n() <= 40));
    // All four families, all four functions, and the ratio assignments
    // (including the identity-only R = 2 cases) must appear.
    use chainkit::metric::SpaceFamilySpec as F;
    assert!(fleet.iter().any(|c| matches!(c.family, F::Path { .. })));
    assert!(fleet.iter().any(|c| matches!(c.family, F::Grid2d { .. })));
    assert!(fleet
        .iter()
        .any(|c| matches!(c.family, F::UltrametricTree { .. })));
    assert!(fleet
        .iter()
        .any(|c| matches!(c.family, F::RandomEuclidean { .. })));
    assert!(fleet.iter().any(|c| c.phi_spec == OrliczSpec::Identity));
    for p in [1.5, 2.0, 3.0] {
        assert!(fleet.iter().any(|c| c.phi_spec == OrliczSpec::Power { p }));
    }
    for r in [3.0, 4.0, 8.0] {
        assert!(fleet.iter().any(|c| c.ratio == r));
    }
    assert!(fleet
        .iter()
        .any(|c| c.ratio == 2.0 && c.growth_a == 0.0 && c.phi_spec == OrliczSpec::Identity));
    assert!(fleet.iter().all(|c| c.ratio > 2.0 || c.growth_a == 0.0));
    let suite = run_lemma_suite(&fleet, FLEET_SEED);
    let names = [
        "radii_lipschitz",
        "radius_sum",
        "pairwise_radius_bound",
        "chain_radius_bound",
        "geometric_chain_sum",
        "telescoping_residual",
        "nu_total_mass",
        "normalizer_bound",
    ];
    let pass = suite.passed && stats_clean(&suite.checks, &names);
    let violations: usize = suite.checks.values().map(|s| s.violations).sum();
    let instances: usize = suite.checks.values().map(|s| s.instances).sum();
    report(
        "criterion 3 (exact lemma suite)",
        pass,
        &format!(
            "{instances} instances over {} spaces, {violations} violations, in {:.1?}",
            suite.cases,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_4_function_inequality_suite() {
    let start = Instant::now();
    let fleet = canonical_fleet();
    let config = FnSuiteConfig::new(1000, FLEET_SEED);
    let suite = run_function_suite(&fleet, &config);
    let names = [
        "mean_deviation_bound",
        "range_bound",
        "young_range_bound",
        "psi_deviation_bound",
        "psi_range_bound",
        "power_range_bound",
        "identity_range_bound",
    ];
    let pass = suite.passed && stats_clean(&suite.inequalities, &names);
    let min_slack = suite
        .inequalities
        .values()
        .map(|s| s.min_slack)
        .fold(f64::INFINITY, f64::min);
    let violations: usize = suite.inequalities.values().map(|s| s.violations).sum();
    report(
        "criterion 4 (function inequality suite)",
        pass,
        &format!(
            "1000 functions x {} spaces x {} inequalities, {violations} violations, min slack {min_slack:.3e}, in {:.1?}",
            suite.cases,
            names.len(),
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_5_process_suite() {
    let start = Instant::now();
    let fleet = canonical_fleet();
    // The p-norm bound must see every exponent in {1.5, 2, 3}.
    for p in [1.5, 2.0, 3.0] {
        assert!(
            fleet.iter().any(|c| c.phi_spec == OrliczSpec::Power { p }),
            "fleet lacks power {p} cases"
        );
    }
    let suite = run_process_suite(&fleet, 10_000, FLEET_SEED, 0.5);
    let names = [
        "young_sup_bound",
        "sup_range_bound",
        "psi_sup_bound",
        "pnorm_sup_bound",
        "net_transfer_bound",
    ];
    let pass = suite.passed && stats_clean(&suite.checks, &names) && suite.anchor.pass;
    let violations: usize = suite.checks.values().map(|s| s.violations).sum();
    report(
        "criterion 5 (process suite)",
        pass,
        &format!(
            "{} certificates over {} spaces at 10^4 paths, {violations} violations, anchor |mean - sqrt(2/pi)| = {:.2e} <= {:.2e}, E sup never above {:.3} of the headline bound, in {:.1?}",
            suite.checks.values().map(|s| s.instances).sum::<usize>(),
            suite.cases,
            suite.anchor.lhs,
            suite.anchor.rhs,
            suite.max_mean_to_bound_ratio,
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_6_determinism() {
    let start = Instant::now();
    // A randomized Monte Carlo command and an exact sweep command, each run
    // at different thread caps: the rendered reports must be byte-equal.
    let space_path = std::env::temp_dir().join("chainkit-acceptance-space.json");
    std::fs::write(
        &space_path,
        r#"{"family": {"kind": "random-euclidean", "n": 12, "dim": 2, "seed": 5}}"#,
    )
    .expect("temp space file");

    let commands = vec![
        (
            "lemmas",
            CommandConfig::Lemmas {
                fleet: Some(r#"{"count": 12, "max_n": 10}"#.into()),
            },
            1,
        ),
        (
            "verify-sobolev",
            CommandConfig::VerifySobolev {
                space: space_path.to_string_lossy().into_owned(),
                measure: None,
                orlicz: "power:2".into(),
                r: 4.0,
                psi: None,
                alpha: None,
                beta: None,
                p: None,
            },
            120,
        ),
        (
            "verify-process",
            CommandConfig::VerifyProcess {
                space: space_path.to_string_lossy().into_owned(),
                measure: None,
                model: "metric-gram".into(),
                orlicz: "power:2".into(),
                r: 4.0,
                p: None,
                subset_frac: 0.5,
            },
            2_000,
        ),
    ];

    let mut all_equal = true;
    for (name, command, trials) in commands {
        let mut renders = Vec::new();
        for threads in [1usize, 4] {
            let config = RunConfig {
                command: serde_json::from_value(serde_json::to_value(&command).unwrap()).unwrap(),
                seed: 99,
                trials,
                threads: Some(threads),
                format: ReportFormat::Json,
                out: None,
            };
            let record = dispatch(&config).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(record.passed, "{name} reported violations");
            renders.push((
                record.render(ReportFormat::Json),
                record.render(ReportFormat::Csv),
                record.render(ReportFormat::Text),
            ));
        }
        let equal = renders[0] == renders[1];
        if !equal {
            eprintln!("{name}: thread-count-dependent report");
        }
        all_equal &= equal;
    }
    report(
        "criterion 6 (determinism)",
        all_equal,
        &format!(
            "lemmas / verify-sobolev / verify-process reports byte-equal at 1 and 4 threads, in {:.1?}",
            start.elapsed()
        ),
    );
}
