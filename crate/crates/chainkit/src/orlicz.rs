//! Orlicz-type functions, growth classes, and the chaining constants.
//!
//! A function `phi: [0, inf) -> [0, inf)` qualifies when it is increasing,
//! continuous, and `phi(0) = 0`. The growth class with parameters `(a, b)`
//! additionally demands
//!
//! ```text
//! x <= a + b * phi(x*y) / phi(y)    for all x >= 0, y >= phi_inv(1),
//! ```
//!
//! and the companion psi-condition replaces the left side by `psi(x)` and
//! lets `y` range over all nonnegative values. Both are universally
//! quantified over the reals, so this module certifies them by grid
//! falsification at a documented resolution rather than by proof.
//!
//! The closed-form constants attached to a ratio parameter `R` are
//!
//! ```text
//! A = R^3 / ((R - 1)(R - 2)),    B = R^2 / (R - 1),
//! ```
//!
//! with `A` finite only for `R > 2`; the degenerate pair `R = 2, a = 0` is
//! the one combination where an infinite `A` is harmless.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error)]
pub enum OrliczError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid ratio parameter R = {0}: {1}")]
    InvalidR(f64, String),
    #[error("invalid function definition: {0}")]
    InvalidFunction(String),
}

/// Serializable descriptor of the built-in function kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OrliczSpec {
    Identity,
    Power { p: f64 },
    Piecewise { knots: Vec<[f64; 2]> },
}

type AnalyticFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct CustomFn {
    name: String,
    eval: AnalyticFn,
    inverse: Option<AnalyticFn>,
}

#[derive(Clone)]
struct Piecewise {
    /// Knots `(x, phi(x))`, starting at the origin, strictly increasing in
    /// both coordinates. Beyond the last knot the final slope extends.
    knots: Vec<[f64; 2]>,
}

impl Piecewise {
    fn last_slope(&self) -> f64 {
        let k = self.knots.len();
        let [x0, y0] = self.knots[k - 2];
        let [x1, y1] = self.knots[k - 1];
        (y1 - y0) / (x1 - x0)
    }

    fn eval(&self, x: f64) -> f64 {
        let last = self.knots[self.knots.len() - 1];
        if x >= last[0] {
            return last[1] + (x - last[0]) * self.last_slope();
        }
        // Segment with knot x-values bracketing x.
        let idx = self.knots.partition_point(|k| k[0] <= x);
        let [x0, y0] = self.knots[idx - 1];
        let [x1, y1] = self.knots[idx];
        y0 + (x - x0) * (y1 - y0) / (x1 - x0)
    }

    fn inverse(&self, y: f64) -> f64 {
        let last = self.knots[self.knots.len() - 1];
        if y >= last[1] {
            return last[0] + (y - last[1]) / self.last_slope();
        }
        let idx = self.knots.partition_point(|k| k[1] <= y);
        let [x0, y0] = self.knots[idx - 1];
        let [x1, y1] = self.knots[idx];
        x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    }
}

#[derive(Clone)]
enum OrliczKind {
    Identity,
    Power(f64),
    Piecewise(Piecewise),
    Custom(CustomFn),
}

/// An increasing continuous function with `phi(0) = 0`, with inverse and a
/// Young flag (increasing and convex).
#[derive(Clone)]
pub struct OrliczFn {
    kind: OrliczKind,
    young: bool,
}

impl fmt::Debug for OrliczFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrliczFn({})", self.name())
    }
}

impl OrliczFn {
    pub fn identity() -> Self {
        Self {
            kind: OrliczKind::Identity,
            young: true,
        }
    }

    /// The power function `x^p`, `p >= 1`. Convex, hence Young.
    pub fn power(p: f64) -> Result<Self, OrliczError> {
        if !p.is_finite() || p < 1.0 {
            return Err(OrliczError::Domain(format!(
                "power exponent must satisfy p >= 1, got {p}"
            )));
        }
        Ok(Self {
            kind: OrliczKind::Power(p),
            young: true,
        })
    }

    /// Piecewise-linear function through the given knots. A missing origin
    /// knot is prepended; slopes must be strictly positive. The Young flag
    /// is set automatically when the slopes are nondecreasing.
    pub fn piecewise(knots: Vec<[f64; 2]>) -> Result<Self, OrliczError> {
        let mut knots = knots;
        if knots.is_empty() {
            return Err(OrliczError::InvalidFunction("no knots given".into()));
        }
        if knots[0] != [0.0, 0.0] {
            if knots[0][0] <= 0.0 || knots[0][1] <= 0.0 {
                return Err(OrliczError::InvalidFunction(
                    "first knot must be the origin or lie strictly in the positive quadrant".into(),
                ));
            }
            knots.insert(0, [0.0, 0.0]);
        }
        if knots.len() < 2 {
            return Err(OrliczError::InvalidFunction(
                "need at least one knot besides the origin".into(),
            ));
        }
        let mut prev_slope = 0.0;
        let mut convex = true;
        for w in knots.windows(2) {
            let [x0, y0] = w[0];
            let [x1, y1] = w[1];
            if !(x1.is_finite() && y1.is_finite()) {
                return Err(OrliczError::InvalidFunction("non-finite knot".into()));
            }
            if x1 <= x0 || y1 <= y0 {
                return Err(OrliczError::InvalidFunction(
                    "knots must be strictly increasing in both coordinates".into(),
                ));
            }
            let slope = (y1 - y0) / (x1 - x0);
            if slope < prev_slope - 1e-12 {
                convex = false;
            }
            prev_slope = slope;
        }
        Ok(Self {
            kind: OrliczKind::Piecewise(Piecewise { knots }),
            young: convex,
        })
    }

    /// A caller-supplied analytic function. Increasing behavior, `phi(0)=0`,
    /// the inverse round trip, and (when claimed) midpoint convexity are
    /// verified on a geometric sampling grid; the claim is rejected on any
    /// grid violation. Without an inverse closure, inversion falls back to
    /// bisection at relative tolerance `1e-12`.
    pub fn custom(
        name: &str,
        eval: AnalyticFn,
        inverse: Option<AnalyticFn>,
        young: bool,
    ) -> Result<Self, OrliczError> {
        if eval(0.0).abs() > 1e-12 {
            return Err(OrliczError::InvalidFunction(format!(
                "{name}: phi(0) = {} != 0",
                eval(0.0)
            )));
        }
        let grid = geometric_grid(1e-6, 1e3, 64);
        let mut prev = 0.0;
        for &x in &grid {
            let v = eval(x);
            if !v.is_finite() || v <= prev {
                return Err(OrliczError::InvalidFunction(format!(
                    "{name}: not strictly increasing near x = {x}"
                )));
            }
            prev = v;
        }
        if young {
            for w in grid.windows(2) {
                let (x, y) = (w[0], w[1]);
                let mid = 0.5 * (x + y);
                let allowed = 0.5 * (eval(x) + eval(y));
                if eval(mid) > allowed * (1.0 + 1e-9) + 1e-12 {
                    return Err(OrliczError::InvalidFunction(format!(
                        "{name}: convexity claim fails at midpoint of ({x}, {y})"
                    )));
                }
            }
        }
        let fun = Self {
            kind: OrliczKind::Custom(CustomFn {
                name: name.to_string(),
                eval,
                inverse,
            }),
            young,
        };
        // Inverse round trip on the working range.
        for &y in &[1e-3, 1e-1, 1.0, 10.0, 1e3] {
            let x = fun.inv_nn(y);
            let back = fun.eval_nn(x);
            if (back - y).abs() > tol::INVERSE_ROUNDTRIP_REL * y.max(1.0) {
                return Err(OrliczError::InvalidFunction(format!(
                    "{name}: inverse round trip off at y = {y}: phi(phi_inv(y)) = {back}"
                )));
            }
        }
        Ok(fun)
    }

    pub fn from_spec(spec: &OrliczSpec) -> Result<Self, OrliczError> {
        match spec {
            OrliczSpec::Identity => Ok(Self::identity()),
            OrliczSpec::Power { p } => Self::power(*p),
            OrliczSpec::Piecewise { knots } => Self::piecewise(knots.clone()),
        }
    }

    pub fn spec(&self) -> Option<OrliczSpec> {
        match &self.kind {
            OrliczKind::Identity => Some(OrliczSpec::Identity),
            OrliczKind::Power(p) => Some(OrliczSpec::Power { p: *p }),
            OrliczKind::Piecewise(pw) => Some(OrliczSpec::Piecewise {
                knots: pw.knots.clone(),
            }),
            OrliczKind::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            OrliczKind::Identity => "identity".into(),
            OrliczKind::Power(p) => format!("power({p})"),
            OrliczKind::Piecewise(pw) => format!("piecewise({} knots)", pw.knots.len()),
            OrliczKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    pub fn is_young(&self) -> bool {
        self.young
    }

    /// The exponent when this is a power function (identity counts as
    /// exponent one), `None` otherwise.
    pub fn power_exponent(&self) -> Option<f64> {
        match &self.kind {
            OrliczKind::Identity => Some(1.0),
            OrliczKind::Power(p) => Some(*p),
            _ => None,
        }
    }

    /// Evaluates `phi(x)` for `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64, OrliczError> {
        if !x.is_finite() || x < 0.0 {
            return Err(OrliczError::Domain(format!(
                "phi is defined on [0, inf), got {x}"
            )));
        }
        Ok(self.eval_nn(x))
    }

    /// Evaluates `phi_inv(y)` for `y >= 0`. Closed form where available,
    /// monotone bisection otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64, OrliczError> {
        if !y.is_finite() || y < 0.0 {
            return Err(OrliczError::Domain(format!(
                "phi_inv is defined on [0, inf), got {y}"
            )));
        }
        Ok(self.inv_nn(y))
    }

    /// `phi_inv(1)` — the boundary of the growth-condition domain and the
    /// anchor of the base chaining level.
    pub fn inv_at_one(&self) -> f64 {
        self.inv_nn(1.0)
    }

    pub(crate) fn eval_nn(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match &self.kind {
            OrliczKind::Identity => x,
            OrliczKind::Power(p) => x.powf(*p),
            OrliczKind::Piecewise(pw) => pw.eval(x),
            OrliczKind::Custom(c) => (c.eval)(x),
        }
    }

    pub(crate) fn inv_nn(&self, y: f64) -> f64 {
        debug_assert!(y >= 0.0);
        match &self.kind {
            OrliczKind::Identity => y,
            OrliczKind::Power(p) => y.powf(1.0 / *p),
            OrliczKind::Piecewise(pw) => pw.inverse(y),
            OrliczKind::Custom(c) => match &c.inverse {
                Some(inv) => inv(y),
                None => bisect_inverse(c.eval.as_ref(), y),
            },
        }
    }
}

/// Monotone bisection solve of `f(x) = y` for increasing `f` with `f(0)=0`.
fn bisect_inverse(f: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while f(hi) < y {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol::BISECTION_REL * hi.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    hi
}

/// Growth-class parameters `(a, b)` claimed for a function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub a: f64,
    pub b: f64,
}

impl GrowthParams {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }
}

/// A companion function `psi` with slack parameters claimed to satisfy the
/// psi-condition against a base function.
#[derive(Debug, Clone)]
pub struct PsiParams {
    pub psi: OrliczFn,
    pub alpha: f64,
    pub beta: f64,
}

/// Outcome of a grid-based condition check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub max_violation: f64,
    pub points: usize,
    pub witness: Option<ConditionWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionWitness {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Geometric grid from `lo` to `hi` (inclusive endpoints), `n >= 2` points.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let ratio = (hi / lo).powf(1.0 / (n as f64 - 1.0));
    let mut out = Vec::with_capacity(n);
    let mut v = lo;
    for _ in 0..n - 1 {
        out.push(v);
        v *= ratio;
    }
    out.push(hi);
    out
}

/// Default grids for the growth condition: `x` covers `[0, 1e3]` and `y`
/// covers `[phi_inv(1), 1e3]`, geometrically with 200 points each.
pub fn default_growth_grids(phi: &OrliczFn) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0];
    xs.extend(geometric_grid(1e-6, 1e3, 199));
    let lower = phi.inv_at_one();
    let hi = 1e3_f64.max(lower * 10.0);
    let mut ys = vec![lower];
    ys.extend(
        geometric_grid(lower.max(1e-6), hi, 199)
            .into_iter()
            .filter(|&y| y > lower),
    );
    (xs, ys)
}

/// Default grids for the psi-condition: both variables range over `[0, 1e3]`
/// geometrically. The `y = 0` endpoint is degenerate (the ratio becomes 0/0),
/// so the grid starts just above zero.
pub fn default_psi_grids() -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0];
    xs.extend(geometric_grid(1e-6, 1e3, 199));
    let ys = geometric_grid(1e-6, 1e3, 200);
    (xs, ys)
}

/// Checks `x <= a + b * phi(x*y) / phi(y)` over the given grids and reports
/// the worst violation. Falsification at grid resolution, not a proof.
pub fn check_growth_condition(
    phi: &OrliczFn,
    params: GrowthParams,
    x_grid: &[f64],
    y_grid: &[f64],
) -> ConditionReport {
    let mut report = ConditionReport {
        pass: true,
        max_violation: f64::NEG_INFINITY,
        points: 0,
        witness: None,
    };
    for &y in y_grid {
        let phi_y = phi.eval_nn(y);
        if phi_y <= 0.0 {
            continue;
        }
        for &x in x_grid {
            let rhs = params.a + params.b * phi.eval_nn(x * y) / phi_y;
            record_violation(&mut report, x, y, x, rhs);
        }
    }
    report.pass = report.max_violation <= tol::GRID_CONDITION_ABS;
    report
}

/// Checks `psi(x) <= alpha + beta * phi(x*y) / phi(y)` over the given grids.
pub fn check_psi_condition(
    phi: &OrliczFn,
    psi_params: &PsiParams,
    x_grid: &[f64],
    y_grid: &[f64],
) -> ConditionReport {
    let mut report = ConditionReport {
        pass: true,
        max_violation: f64::NEG_INFINITY,
        points: 0,
        witness: None,
    };
    for &y in y_grid {
        let phi_y = phi.eval_nn(y);
        if phi_y <= 0.0 {
            continue;
        }
        for &x in x_grid {
            let lhs = psi_params.psi.eval_nn(x);
            let rhs = psi_params.alpha + psi_params.beta * phi.eval_nn(x * y) / phi_y;
            record_violation(&mut report, x, y, lhs, rhs);
        }
    }
    report.pass = report.max_violation <= tol::GRID_CONDITION_ABS;
    report
}

fn record_violation(report: &mut ConditionReport, x: f64, y: f64, lhs: f64, rhs: f64) {
    report.points += 1;
    // Normalized violation: absolute below one, relative above, matching
    // the certificate slack rule. Large grid values hit powf rounding far
    // above an absolute 1e-9.
    let violation = (lhs - rhs) / rhs.abs().max(1.0);
    if violation > report.max_violation {
        report.max_violation = violation;
        report.witness = Some(ConditionWitness { x, y, lhs, rhs });
    }
}

/// The chaining constants `A = R^3/((R-1)(R-2))` and `B = R^2/(R-1)`.
///
/// `A` is infinite at `R = 2`; that value is usable only with `a = 0`.
pub fn constants_ab(r: f64) -> Result<(f64, f64), OrliczError> {
    if !r.is_finite() || r < 2.0 {
        return Err(OrliczError::InvalidR(r, "requires R >= 2".into()));
    }
    let b = r * r / (r - 1.0);
    if r == 2.0 {
        return Ok((f64::INFINITY, b));
    }
    let a = r.powi(3) / ((r - 1.0) * (r - 2.0));
    Ok((a, b))
}

/// The full chaining constant `K = (a*A + b*B) * s`, with the `0 * inf = 0`
/// convention when `a = 0` and `R = 2`.
pub fn chaining_constant_k(a: f64, b: f64, r: f64, s: f64) -> Result<f64, OrliczError> {
    if a < 0.0 || b < 0.0 {
        return Err(OrliczError::Domain(format!(
            "growth parameters must be nonnegative, got a = {a}, b = {b}"
        )));
    }
    let (big_a, big_b) = constants_ab(r)?;
    if a > 0.0 && !big_a.is_finite() {
        return Err(OrliczError::InvalidR(
            r,
            "R = 2 is admissible only with a = 0".into(),
        ));
    }
    let a_term = if a == 0.0 { 0.0 } else { a * big_a };
    Ok((a_term + b * big_b) * s)
}

/// Optimal parameters for the power function `x^p`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerConstants {
    pub p: f64,
    pub r: f64,
    pub a: f64,
    pub b: f64,
    /// The chaining constant per unit of the majorant supremum.
    pub k_coef: f64,
}

/// Closed-form optimum for `x^p`: the ratio `R_p`, growth parameters
/// `(a_p, b_p)` on the membership boundary, and the minimal coefficient.
/// `p = 1` returns the limit values `(R, a, b, k) = (2, 0, 1, 4)`.
pub fn power_constants(p: f64) -> Result<PowerConstants, OrliczError> {
    if !p.is_finite() || p < 1.0 {
        return Err(OrliczError::Domain(format!(
            "power constants require p >= 1, got {p}"
        )));
    }
    if p == 1.0 {
        return Ok(PowerConstants {
            p,
            r: 2.0,
            a: 0.0,
            b: 1.0,
            k_coef: 4.0,
        });
    }
    let q = p / (p - 1.0);
    let g = 3.0 * q - q / p;
    let r = 2.0 + (g.sqrt() + 1.0) / q;
    let a = g.powf(-1.0 / (2.0 * p)) / q;
    let b = g.powf(1.0 / (2.0 * q)) / p;
    let k_coef = 2.0 * ((3.0 * p - 1.0) / p) * g.powf(1.0 / (2.0 * q));
    Ok(PowerConstants { p, r, a, b, k_coef })
}

/// Value of the power-class membership expression `(a*q)^(1/q) * (b*p)^(1/p)`;
/// membership holds when the value is at least one. For `p = 1` the
/// expression degenerates and membership reduces to `b >= 1`, so the value
/// returned is `b` itself.
pub fn power_membership_value(p: f64, a: f64, b: f64) -> Result<f64, OrliczError> {
    if !p.is_finite() || p < 1.0 {
        return Err(OrliczError::Domain(format!(
            "membership criterion requires p >= 1, got {p}"
        )));
    }
    if a < 0.0 || b < 0.0 {
        return Err(OrliczError::Domain(
            "growth parameters must be nonnegative".into(),
        ));
    }
    if p == 1.0 {
        return Ok(b);
    }
    let q = p / (p - 1.0);
    Ok((a * q).powf(1.0 / q) * (b * p).powf(1.0 / p))
}

/// Whether `x^p` lies in the growth class with parameters `(a, b)`.
pub fn power_membership_criterion(p: f64, a: f64, b: f64) -> Result<bool, OrliczError> {
    Ok(power_membership_value(p, a, b)? >= 1.0 - tol::MEMBERSHIP_EQUALITY_ABS)
}
