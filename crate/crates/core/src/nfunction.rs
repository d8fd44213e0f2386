//! Quadratic N-functions φ_p and their Young–Fenchel conjugates.
//!
//! φ_p(x) = x²/2 for |x| ≤ 1 and |x|^p/p − 1/p + 1/2 otherwise. For p > 1 the
//! conjugate is φ_q with 1/p + 1/q = 1; [`legendre_transform`] computes the
//! conjugate of any evaluable function numerically so the closed form can be
//! cross-checked.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent `p ≥ 1` together with its Hölder conjugate `q` (absent for `p = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PIndex {
    p: f64,
    q: Option<f64>,
}

impl PIndex {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::domain(format!("exponent p must be a finite real >= 1, got {p}")));
        }
        let q = if p > 1.0 { Some(p / (p - 1.0)) } else { None };
        Ok(PIndex { p, q })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> Option<f64> {
        self.q
    }

    /// The conjugate exponent, or `Unsupported` for `p = 1`.
    pub fn require_q(&self) -> Result<f64> {
        self.q.ok_or_else(|| {
            Error::Unsupported("p = 1 has no finite Hölder conjugate; φ_1* is not of φ_q form".into())
        })
    }

    /// φ_p(x) without argument validation. NaN propagates.
    #[inline]
    pub fn phi(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= 1.0 {
            0.5 * x * x
        } else {
            ax.powf(self.p) / self.p - 1.0 / self.p + 0.5
        }
    }

    /// φ_p'(x).
    #[inline]
    pub fn phi_prime(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= 1.0 {
            x
        } else {
            x.signum() * ax.powf(self.p - 1.0)
        }
    }

    /// Inverse of φ_p on [0, ∞) without argument validation.
    #[inline]
    pub fn phi_inv(&self, y: f64) -> f64 {
        if y <= 0.5 {
            (2.0 * y).sqrt()
        } else {
            (self.p * (y - 0.5) + 1.0).powf(1.0 / self.p)
        }
    }
}

impl fmt::Display for PIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.q {
            Some(q) => write!(f, "p={} (q={})", self.p, q),
            None => write!(f, "p={} (q=∞)", self.p),
        }
    }
}

pub fn phi_p_eval(p: &PIndex, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("φ_p argument must be finite, got {x}")));
    }
    Ok(p.phi(x))
}

/// The unique `x ≥ 0` with `φ_p(x) = y`.
pub fn phi_p_inverse(p: &PIndex, y: f64) -> Result<f64> {
    if y.is_nan() || y < 0.0 {
        return Err(Error::domain(format!("φ_p inverse needs y >= 0, got {y}")));
    }
    Ok(p.phi_inv(y))
}

pub fn phi_p_derivative(p: &PIndex, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("φ_p' argument must be finite, got {x}")));
    }
    Ok(p.phi_prime(x))
}

/// Returns the index `q` with `1/p + 1/q = 1`, so that φ_p* = φ_q.
pub fn conjugate_index(p: &PIndex) -> Result<PIndex> {
    PIndex::new(p.require_q()?)
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An evaluable even convex function handed to the conjugate engine and the
/// axiom validator.
#[derive(Clone)]
pub enum NFunctionSpec {
    PhiP(PIndex),
    User {
        f: Evaluator,
        /// Radius below which the function is claimed to be exactly `c·x²`.
        quadratic_radius: f64,
    },
}

impl fmt::Debug for NFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NFunctionSpec::PhiP(p) => f.debug_tuple("PhiP").field(p).finish(),
            NFunctionSpec::User { quadratic_radius, .. } => f
                .debug_struct("User")
                .field("quadratic_radius", quadratic_radius)
                .finish_non_exhaustive(),
        }
    }
}

impl NFunctionSpec {
    pub fn phi_p(p: f64) -> Result<Self> {
        Ok(NFunctionSpec::PhiP(PIndex::new(p)?))
    }

    pub fn user<F>(f: F, quadratic_radius: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        NFunctionSpec::User { f: Arc::new(f), quadratic_radius }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            NFunctionSpec::PhiP(p) => p.phi(x),
            NFunctionSpec::User { f, .. } => f(x),
        }
    }

    pub fn quadratic_radius(&self) -> f64 {
        match self {
            NFunctionSpec::PhiP(_) => 1.0,
            NFunctionSpec::User { quadratic_radius, .. } => *quadratic_radius,
        }
    }

    /// `x ↦ a·f(b·x)` as a user evaluator.
    pub fn scaled(&self, a: f64, b: f64) -> Self {
        let inner = self.clone();
        let radius = self.quadratic_radius() / b.abs();
        NFunctionSpec::user(move |x| a * inner.eval(b * x), radius)
    }

    /// Numeric conjugate `y ↦ f*(y)` wrapped as a user evaluator; non-finite
    /// where the supremum is not bracketed.
    pub fn numeric_conjugate(&self, params: SolverParams) -> Self {
        let inner = self.clone();
        NFunctionSpec::user(
            move |y| match legendre_transform(&inner, y, &params) {
                Ok(r) => r.value,
                Err(_) => f64::INFINITY,
            },
            // Conjugate of c·x² on |x| ≤ r is y²/(4c) on |y| ≤ 2cr; for φ_p that is radius 1.
            self.quadratic_radius(),
        )
    }
}

/// Tolerances and grids shared by the conjugate and norm solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Absolute (relative for |x| > 1) tolerance on the argmax location.
    pub xtol: f64,
    /// Reporting tolerance on returned values.
    pub value_tol: f64,
    pub max_iter: usize,
    /// Maximum bracket doublings before declaring divergence.
    pub max_expansions: usize,
    /// Smallest |λ| on the τ search grid.
    pub lambda_min: f64,
    /// Largest |λ| on the τ search grid.
    pub lambda_max: f64,
    /// Grid points per sign of λ.
    pub lambda_points: usize,
    /// Relative growth of the τ ratio over the last grid decade that is
    /// treated as unbounded.
    pub growth_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            xtol: 1e-8,
            value_tol: 1e-6,
            max_iter: 500,
            max_expansions: 64,
            lambda_min: 1e-4,
            lambda_max: 1e4,
            lambda_points: 200,
            growth_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConjugateMethod {
    Analytic,
    NumericSup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateResult {
    pub value: f64,
    pub argmax: Option<f64>,
    pub method: ConjugateMethod,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximises a unimodal `g` on `[lo, hi]`. Returns `(argmax, max, iterations)`.
pub(crate) fn golden_max<G>(g: G, mut lo: f64, mut hi: f64, params: &SolverParams) -> Result<(f64, f64, usize)>
where
    G: Fn(f64) -> f64,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut gc = g(c);
    let mut gd = g(d);
    let mut iter = 0;
    while (hi - lo) > params.xtol * lo.abs().max(hi.abs()).max(1.0) {
        if iter >= params.max_iter {
            return Err(Error::Numeric(format!(
                "golden-section search did not reach tolerance in {} iterations",
                params.max_iter
            )));
        }
        if gc.is_nan() || gd.is_nan() {
            return Err(Error::Numeric("objective evaluated to NaN".into()));
        }
        iter += 1;
        if gc >= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - INV_PHI * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + INV_PHI * (hi - lo);
            gd = g(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let gm = g(mid);
    // Return the best point actually evaluated.
    let best = [(mid, gm), (c, gc), (d, gd)]
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((mid, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    Ok((best.0, best.1, iter))
}

/// Numeric Young–Fenchel transform `sup_x { x·y − f(x) }`.
///
/// The concave objective is bracketed by doubling from `[0, 1]` in the sign
/// direction of `y` until it stops increasing, then maximised by
/// golden-section search.
pub fn legendre_transform(f: &NFunctionSpec, y: f64, params: &SolverParams) -> Result<ConjugateResult> {
    if !y.is_finite() {
        return Err(Error::domain(format!("conjugate argument must be finite, got {y}")));
    }
    let dir = if y < 0.0 { -1.0 } else { 1.0 };
    let objective = |t: f64| {
        let x = dir * t;
        x * y - f.eval(x)
    };

    let g0 = objective(0.0);
    if g0.is_nan() {
        return Err(Error::Numeric("f(0) is NaN".into()));
    }
    let mut hi = 1.0_f64;
    let mut expansions = 0;
    loop {
        let g_hi = objective(hi);
        let g_half = objective(0.5 * hi);
        if g_hi.is_nan() || g_half.is_nan() {
            return Err(Error::Numeric(format!("objective is NaN near x = {}", dir * hi)));
        }
        if g_hi <= g_half {
            break;
        }
        expansions += 1;
        if expansions > params.max_expansions {
            return Err(Error::Divergence { expansions: params.max_expansions, last_bound: dir * hi });
        }
        hi *= 2.0;
    }

    let (t, value, _) = golden_max(objective, 0.0, hi, params)?;
    let (t, value) = if g0 >= value { (0.0, g0) } else { (t, value) };
    Ok(ConjugateResult { value, argmax: Some(dir * t), method: ConjugateMethod::NumericSup })
}

/// Conjugate using the closed form φ_p* = φ_q when available, otherwise the
/// numeric transform.
pub fn conjugate(f: &NFunctionSpec, y: f64, params: &SolverParams) -> Result<ConjugateResult> {
    match f {
        NFunctionSpec::PhiP(p) if p.q().is_some() => {
            if !y.is_finite() {
                return Err(Error::domain(format!("conjugate argument must be finite, got {y}")));
            }
            let q = conjugate_index(p)?;
            Ok(ConjugateResult {
                value: q.phi(y),
                argmax: Some(q.phi_prime(y)),
                method: ConjugateMethod::Analytic,
            })
        }
        _ => legendre_transform(f, y, params),
    }
}

/// Conjugate of `x ↦ a·f(b·x)` at `y`, via the scaling rule `a·f*(y/(a·b))`.
pub fn conjugate_of_scaled(f: &NFunctionSpec, a: f64, b: f64, y: f64, params: &SolverParams) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("scale a must be positive and finite, got {a}")));
    }
    if b == 0.0 || !b.is_finite() {
        return Err(Error::domain(format!("scale b must be nonzero and finite, got {b}")));
    }
    Ok(a * conjugate(f, y / (a * b), params)?.value)
}

/// The checks reported by [`validate_nfunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    Even,
    ZeroAtOrigin,
    MonotoneIncreasing,
    MidpointConvex,
    SublinearAtZero,
    SuperlinearAtInfinity,
    QuadraticNearZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    pub detail: String,
}

/// Finite-probe evidence that a function is consistent with the quadratic
/// N-function axioms. Limits are not machine-checkable, so a pass means
/// "consistent with" on the probed grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
    /// Mean of f(x)/x² over probes below the quadratic radius.
    pub quadratic_ratio: Option<f64>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn passed(&self, axiom: Axiom) -> bool {
        self.checks.iter().any(|c| c.axiom == axiom && c.passed)
    }
}

/// Geometric probe grid 10⁻⁶ … 10⁶, ten points per decade.
pub fn default_probe_grid() -> Vec<f64> {
    (-60..=60).map(|k| 10f64.powf(k as f64 / 10.0)).collect()
}

fn nearest_in_log(xs: &[f64], target: f64) -> Option<f64> {
    xs.iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.ln() - target.ln()).abs();
            let db = (b.ln() - target.ln()).abs();
            da.total_cmp(&db)
        })
        .filter(|x| (x.ln() - target.ln()).abs() < 0.5)
}

pub fn validate_nfunction(f: &NFunctionSpec, probe_grid: &[f64]) -> ValidationReport {
    let mut pos: Vec<f64> = probe_grid.iter().map(|x| x.abs()).filter(|x| *x > 0.0 && x.is_finite()).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut checks = Vec::with_capacity(7);
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-300;

    // evenness
    let odd = pos.iter().find(|&&x| !rel(f.eval(x), f.eval(-x)));
    checks.push(AxiomCheck {
        axiom: Axiom::Even,
        passed: odd.is_none() && !pos.is_empty(),
        detail: match odd {
            Some(x) => format!("f({x:e}) != f(-{x:e})"),
            None => format!("f(x) = f(-x) on {} probes", pos.len()),
        },
    });

    let f0 = f.eval(0.0);
    checks.push(AxiomCheck {
        axiom: Axiom::ZeroAtOrigin,
        passed: f0 == 0.0,
        detail: format!("f(0) = {f0:e}"),
    });

    let mut with_zero = vec![0.0];
    with_zero.extend_from_slice(&pos);
    let values: Vec<f64> = with_zero.iter().map(|&x| f.eval(x)).collect();
    let drop = values.windows(2).position(|w| !(w[1] > w[0]));
    checks.push(AxiomCheck {
        axiom: Axiom::MonotoneIncreasing,
        passed: drop.is_none(),
        detail: match drop {
            Some(i) => format!("f not increasing between {:e} and {:e}", with_zero[i], with_zero[i + 1]),
            None => "strictly increasing on probed positives".into(),
        },
    });

    let mut sym: Vec<f64> = pos.iter().map(|x| -x).rev().collect();
    sym.push(0.0);
    sym.extend_from_slice(&pos);
    let fs: Vec<f64> = sym.iter().map(|&x| f.eval(x)).collect();
    let mut violation = None;
    'outer: for i in 0..sym.len() {
        for j in (i + 1)..sym.len() {
            let mid = f.eval(0.5 * (sym[i] + sym[j]));
            let chord = 0.5 * (fs[i] + fs[j]);
            if !(mid <= chord + 1e-12 * chord.abs()) {
                violation = Some((sym[i], sym[j]));
                break 'outer;
            }
        }
    }
    checks.push(AxiomCheck {
        axiom: Axiom::MidpointConvex,
        passed: violation.is_none(),
        detail: match violation {
            Some((a, b)) => format!("midpoint test fails for ({a:e}, {b:e})"),
            None => format!("midpoint convex on {} pairs", sym.len() * (sym.len() - 1) / 2),
        },
    });

    let ratio = |x: f64| f.eval(x) / x;
    // f(x)/x must keep shrinking toward 0 and keep growing toward ∞.
    let (small_ok, small_detail) = match pos.first().and_then(|&lo| nearest_in_log(&pos, 10.0 * lo).map(|up| (lo, up))) {
        Some((lo, up)) if up > lo => {
            let (r0, r1) = (ratio(lo), ratio(up));
            (r0 < 0.999 * r1 && r0 >= 0.0, format!("f(x)/x = {r0:e} at {lo:e}, {r1:e} at {up:e}"))
        }
        _ => (false, "probe grid does not span a decade near zero".into()),
    };
    checks.push(AxiomCheck { axiom: Axiom::SublinearAtZero, passed: small_ok, detail: small_detail });

    let (large_ok, large_detail) = match pos.last().and_then(|&hi| nearest_in_log(&pos, hi / 10.0).map(|dn| (hi, dn))) {
        Some((hi, dn)) if dn < hi => {
            let (r0, r1) = (ratio(dn), ratio(hi));
            (r1 > 1.001 * r0, format!("f(x)/x = {r0:e} at {dn:e}, {r1:e} at {hi:e}"))
        }
        _ => (false, "probe grid does not span a decade at infinity".into()),
    };
    checks.push(AxiomCheck { axiom: Axiom::SuperlinearAtInfinity, passed: large_ok, detail: large_detail });

    let radius = f.quadratic_radius();
    let quad: Vec<f64> = pos.iter().filter(|&&x| x <= radius).map(|&x| f.eval(x) / (x * x)).collect();
    let (quad_ok, quad_ratio, quad_detail) = if quad.is_empty() {
        (false, None, format!("no probes below quadratic radius {radius:e}"))
    } else {
        let lo = quad.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = quad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = quad.iter().sum::<f64>() / quad.len() as f64;
        let ok = lo > 0.0 && (hi - lo) <= 1e-9 * hi;
        (ok, if ok { Some(mean) } else { None }, format!("f(x)/x² in [{lo:e}, {hi:e}] below radius {radius:e}"))
    };
    checks.push(AxiomCheck { axiom: Axiom::QuadraticNearZero, passed: quad_ok, detail: quad_detail });

    ValidationReport { checks, quadratic_ratio: quad_ratio }
}
