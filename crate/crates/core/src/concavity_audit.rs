//! Numerical check of the concavity of the rate objectives.
//!
//! The analytic Hessian entries and eigenvalues of `1 + Γ̃` (cooperative SINR
//! with the simplified denominator `a·c·x + b·y`) and the analytic curvature
//! of the direct-link rate are compared with central finite differences.
//!
//! Finite differences are evaluated in exact rational arithmetic, so the only
//! error left is the O(h²) truncation of the stencil. In `f64` the stencil's
//! round-off (≈ ε·|f|/h²) would swamp the 1e-6 slack on the zero eigenvalue.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rate_model::{sinr_cooperative, CoopLinkParams, SinrForm};
use crate::{FdField, Rational, Real};

/// Non-positivity slack on finite-difference eigenvalues.
pub const EIGEN_SLACK: f64 = 1e-6;
/// Relative agreement required between analytic and numeric eigenvalues.
pub const EIGEN_REL_TOL: f64 = 1e-3;
const REL_STEP: f64 = 1e-5;
const MIN_STEP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuditError {
    #[error("eigenvalue denominator vanishes")]
    ZeroDenominator,
    #[error("objective is not finite near ({0}, {1})")]
    NonFinite(f64, f64),
}

/// Evaluation point in the Hessian notation: powers `x`, `y`, gains `a`, `b`
/// and effective self-interference `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditPoint<T> {
    pub x: T,
    pub y: T,
    pub a: T,
    pub b: T,
    pub c: T,
}

impl AuditPoint<f64> {
    pub fn to_rational(&self) -> AuditPoint<Rational> {
        let q = |v: f64| Rational::from_float(v).expect("finite audit coordinate");
        AuditPoint {
            x: q(self.x),
            y: q(self.y),
            a: q(self.a),
            b: q(self.b),
            c: q(self.c),
        }
    }
}

/// `(0, λ)` with `λ = −2ca²b²(x² + y²) / (acx + by)³`, written out as the
/// expanded cubic.
pub fn analytic_coop_eigenvalues<T: Real>(p: &AuditPoint<T>) -> Result<(T, T), AuditError> {
    let AuditPoint { x, y, a, b, c } = *p;
    if !(b * y + a * c * x > T::zero()) {
        return Err(AuditError::ZeroDenominator);
    }
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let numerator = two * c * a * a * b * b * x * x + two * c * a * a * b * b * y * y;
    let denominator = a.powi(3) * c.powi(3) * x.powi(3)
        + three * a * a * b * c * c * x * x * y
        + three * a * b * b * c * x * y * y
        + b.powi(3) * y.powi(3);
    Ok((T::zero(), -numerator / denominator))
}

/// Hessian of `1 + Γ̃` in `(x, y)`, entry by entry.
pub fn analytic_coop_hessian<T: Real>(p: &AuditPoint<T>) -> [[T; 2]; 2] {
    let AuditPoint { x, y, a, b, c } = *p;
    let two = T::lit(2.0);
    let s = b * y + a * c * x;
    let s2 = s * s;
    let s3 = s2 * s;
    let h11 = two * a.powi(3) * b * c * c * x * y / s3 - two * a * a * b * c * y / s2;
    let h22 = two * a * b.powi(3) * x * y / s3 - two * a * b * b * x / s2;
    let h12 = a * b / s - a * b * b * y / s2 - a * a * b * c * x / s2
        + two * a * a * b * b * c * x * y / s3;
    [[h11, h12], [h12, h22]]
}

/// `(0, −b² / (ln 2 · (bx + cz + 1)²))`, the curvature of `log2(1 + bx/(1 + cz))`
/// in the power `x`.
pub fn analytic_noncoop_eigenvalues<T: Real>(b: T, x: T, c: T, z: T) -> (T, T) {
    let d = b * x + c * z + T::one();
    (
        T::zero(),
        -(b * b) / (T::lit(std::f64::consts::LN_2) * d * d),
    )
}

/// `max(1e-5·|v|, 1e-7)`.
fn step<T: FdField>(v: &T) -> T {
    let rel = T::from_f64(REL_STEP).expect("step representable") * v.abs();
    let floor = T::from_f64(MIN_STEP).expect("step representable");
    if rel > floor {
        rel
    } else {
        floor
    }
}

fn finite<T: FdField>(v: T, at: (&T, &T)) -> Result<T, AuditError> {
    if v.to_f64().is_some_and(f64::is_finite) {
        Ok(v)
    } else {
        Err(AuditError::NonFinite(
            at.0.to_f64().unwrap_or(f64::NAN),
            at.1.to_f64().unwrap_or(f64::NAN),
        ))
    }
}

/// Central-difference Hessian of `f` at `at`.
pub fn fd_hessian<T, F>(f: F, at: (&T, &T)) -> Result<[[T; 2]; 2], AuditError>
where
    T: FdField,
    F: Fn(&T, &T) -> T,
{
    let (x, y) = (at.0.clone(), at.1.clone());
    let (hx, hy) = (step(&x), step(&y));
    let eval = |dx: i32, dy: i32| -> Result<T, AuditError> {
        let shift = |v: &T, h: &T, d: i32| match d {
            1 => v.clone() + h.clone(),
            -1 => v.clone() - h.clone(),
            _ => v.clone(),
        };
        finite(f(&shift(&x, &hx, dx), &shift(&y, &hy, dy)), at)
    };
    let two = T::one() + T::one();
    let four = two.clone() + two.clone();
    let center = eval(0, 0)?;
    let hxx =
        (eval(1, 0)? - two.clone() * center.clone() + eval(-1, 0)?) / (hx.clone() * hx.clone());
    let hyy = (eval(0, 1)? - two * center + eval(0, -1)?) / (hy.clone() * hy.clone());
    let hxy = (eval(1, 1)? - eval(1, -1)? - eval(-1, 1)? + eval(-1, -1)?) / (four * hx * hy);
    Ok([[hxx, hxy.clone()], [hxy, hyy]])
}

/// Central second difference of `log2(g)` at `x`. The log of the stencil
/// ratio `g(x+h)·g(x−h)/g(x)²` is taken once, in `f64`, after the ratio has
/// been formed in `T`.
pub fn fd_second_derivative_log2<T, G>(g: G, x: &T) -> Result<f64, AuditError>
where
    T: FdField,
    G: Fn(&T) -> T,
{
    let h = step(x);
    let at = (x, x);
    let plus = finite(g(&(x.clone() + h.clone())), at)?;
    let minus = finite(g(&(x.clone() - h.clone())), at)?;
    let center = finite(g(x), at)?;
    if !(plus > T::zero() && minus > T::zero() && center > T::zero()) {
        return Err(AuditError::NonFinite(
            x.to_f64().unwrap_or(f64::NAN),
            f64::NAN,
        ));
    }
    let excess = plus * minus / (center.clone() * center) - T::one();
    let excess = excess
        .to_f64()
        .ok_or(AuditError::NonFinite(f64::NAN, f64::NAN))?;
    let h2 = (h.clone() * h)
        .to_f64()
        .ok_or(AuditError::NonFinite(f64::NAN, f64::NAN))?;
    Ok(excess.ln_1p() / (h2 * std::f64::consts::LN_2))
}

/// Eigenvalues of a symmetric 2×2 matrix ordered by magnitude. Trace,
/// determinant and discriminant are formed in `T`; the smaller eigenvalue is
/// recovered as `det / λ_large` to avoid cancellation.
pub fn sym2_eigenvalues<T: FdField>(h: &[[T; 2]; 2]) -> [f64; 2] {
    let [[a, b], [_, d]] = h;
    let trace = a.clone() + d.clone();
    let det = a.clone() * d.clone() - b.clone() * b.clone();
    let diff = a.clone() - d.clone();
    let four = T::from_f64(4.0).expect("small integer");
    let disc = diff.clone() * diff + four * b.clone() * b.clone();
    let trace = trace.to_f64().unwrap_or(f64::NAN);
    let det = det.to_f64().unwrap_or(f64::NAN);
    let root = disc.to_f64().unwrap_or(f64::NAN).max(0.0).sqrt();
    let large = if trace >= 0.0 {
        (trace + root) / 2.0
    } else {
        (trace - root) / 2.0
    };
    if large == 0.0 {
        return [0.0, 0.0];
    }
    [det / large, large]
}

/// `1 + x·y·a·b / (a·c·x + b·y)` over any field.
pub fn simplified_objective<T: FdField>(p: &AuditPoint<T>) -> impl Fn(&T, &T) -> T + '_ {
    move |x, y| {
        let ab = p.a.clone() * p.b.clone();
        let den = p.a.clone() * p.c.clone() * x.clone() + p.b.clone() * y.clone();
        T::one() + x.clone() * y.clone() * ab / den
    }
}

/// Sampling of the audit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSpec {
    pub points: usize,
    pub seed: u64,
    /// Coordinates are drawn log-uniformly from `[low, high]`.
    pub low: f64,
    pub high: f64,
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            points: 1000,
            seed: 2016,
            low: 0.1,
            high: 10.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObjectiveAudit {
    pub points_tested: usize,
    /// Largest finite-difference eigenvalue seen.
    pub max_fd_eigenvalue: f64,
    /// Largest analytic nonzero eigenvalue seen.
    pub max_analytic_eigenvalue: f64,
    /// Largest relative gap between analytic and numeric nonzero eigenvalue.
    pub max_relative_error: f64,
    /// Points whose numeric eigenvalue exceeds the slack.
    pub violations: usize,
    /// Points whose analytic and numeric eigenvalues disagree.
    pub mismatches: usize,
}

impl ObjectiveAudit {
    fn record(&mut self, fd_max: f64, analytic: Option<(f64, f64)>) {
        self.points_tested += 1;
        if self.points_tested == 1 {
            self.max_fd_eigenvalue = f64::NEG_INFINITY;
            self.max_analytic_eigenvalue = f64::NEG_INFINITY;
        }
        self.max_fd_eigenvalue = self.max_fd_eigenvalue.max(fd_max);
        if !(fd_max <= EIGEN_SLACK) {
            self.violations += 1;
        }
        if let Some((analytic, numeric)) = analytic {
            self.max_analytic_eigenvalue = self.max_analytic_eigenvalue.max(analytic);
            let rel = (analytic - numeric).abs() / analytic.abs().max(f64::MIN_POSITIVE);
            self.max_relative_error = self.max_relative_error.max(rel);
            if !(rel <= EIGEN_REL_TOL) || analytic > 0.0 {
                self.mismatches += 1;
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.points_tested > 0 && self.violations == 0 && self.mismatches == 0
    }

    /// How far the worst numeric eigenvalue sits above zero.
    pub fn violation_margin(&self) -> f64 {
        self.max_fd_eigenvalue.max(0.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LineAudit {
    pub lines_tested: usize,
    pub not_unimodal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub points_tested: usize,
    pub max_violation: f64,
    pub pass: bool,
    pub eigen_slack: f64,
    pub eigen_rel_tol: f64,
    /// `1 + Γ̃` as a function of `(x, y)`.
    pub cooperative: ObjectiveAudit,
    /// Direct-link rate as a function of its power.
    pub noncooperative: ObjectiveAudit,
    /// Full-form cooperative SINR along `x + y = const`.
    pub cooperative_full_line: LineAudit,
}

fn log_uniform(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    let (l, h) = (low.ln(), high.ln());
    (l + (h - l) * rng.random::<f64>()).exp()
}

/// Audits an arbitrary two-variable objective for concavity over the points
/// of `spec`. Used for the rate objectives and as a negative control.
pub fn audit_objective<F>(spec: &AuditSpec, f: F) -> Result<ObjectiveAudit, AuditError>
where
    F: Fn(&Rational, &Rational) -> Rational,
{
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut audit = ObjectiveAudit::default();
    for _ in 0..spec.points {
        let x = Rational::from_float(log_uniform(&mut rng, spec.low, spec.high)).expect("finite");
        let y = Rational::from_float(log_uniform(&mut rng, spec.low, spec.high)).expect("finite");
        let h = fd_hessian(&f, (&x, &y))?;
        let [small, large] = sym2_eigenvalues(&h);
        audit.record(small.max(large), None);
    }
    Ok(audit)
}

pub fn audit_concavity(spec: &AuditSpec) -> Result<AuditReport, AuditError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha8Rng| log_uniform(rng, spec.low, spec.high);

    let mut cooperative = ObjectiveAudit::default();
    for _ in 0..spec.points {
        let p = AuditPoint {
            x: draw(&mut rng),
            y: draw(&mut rng),
            a: draw(&mut rng),
            b: draw(&mut rng),
            c: draw(&mut rng),
        };
        let (_, analytic) = analytic_coop_eigenvalues(&p)?;
        let q = p.to_rational();
        let h = fd_hessian(simplified_objective(&q), (&q.x, &q.y))?;
        let [small, large] = sym2_eigenvalues(&h);
        cooperative.record(small.max(large), Some((analytic, large)));
    }

    let mut noncooperative = ObjectiveAudit::default();
    for _ in 0..spec.points {
        let (b, x, c, z) = (
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
        );
        let (_, analytic) = analytic_noncoop_eigenvalues(b, x, c, z);
        let q = |v: f64| Rational::from_float(v).expect("finite");
        let (bq, cz) = (q(b), q(c) * q(z));
        let snr_plus_one = |p: &Rational| {
            Rational::one() + bq.clone() * p.clone() / (Rational::one() + cz.clone())
        };
        let curvature = fd_second_derivative_log2(snr_plus_one, &q(x))?;
        // the rate carries a 1/2 pre-log
        let rate_curvature = 0.5 * curvature;
        noncooperative.record(rate_curvature, Some((analytic, curvature)));
    }

    let mut line = LineAudit::default();
    for _ in 0..spec.points {
        let (a, b, gamma, z) = (
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
            draw(&mut rng),
        );
        let budget = draw(&mut rng);
        line.lines_tested += 1;
        if !full_form_unimodal_on_line(a, b, gamma, z, budget, 256) {
            line.not_unimodal += 1;
        }
    }

    let max_violation = cooperative
        .violation_margin()
        .max(noncooperative.violation_margin());
    let pass = cooperative.passed() && noncooperative.passed() && line.not_unimodal == 0;
    Ok(AuditReport {
        points_tested: cooperative.points_tested + noncooperative.points_tested,
        max_violation,
        pass,
        eigen_slack: EIGEN_SLACK,
        eigen_rel_tol: EIGEN_REL_TOL,
        cooperative,
        noncooperative,
        cooperative_full_line: line,
    })
}

/// Whether the full-form cooperative SINR sampled at `samples` points along
/// `x + y = budget` rises then falls, allowing relative noise of 1e-12.
pub fn full_form_unimodal_on_line(
    a: f64,
    b: f64,
    gamma: f64,
    z: f64,
    budget: f64,
    samples: usize,
) -> bool {
    let values: Vec<f64> = (0..samples)
        .map(|t| {
            let x = budget * t as f64 / (samples - 1) as f64;
            let p = CoopLinkParams {
                x,
                y: budget - x,
                z,
                a,
                b,
                gamma,
            };
            sinr_cooperative(&p, SinrForm::Full).unwrap_or(0.0)
        })
        .collect();
    is_unimodal(&values)
}

/// Non-decreasing then non-increasing, up to relative noise of 1e-12.
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for w in values.windows(2) {
        let noise = 1e-12 * w[0].abs().max(w[1].abs());
        if w[1] < w[0] - noise {
            falling = true;
        } else if falling && w[1] > w[0] + noise {
            return false;
        }
    }
    true
}
