//! Closed-form tail bounds and summability of the bound series.
//!
//! Every bound has the shape `2·exp(−φ_q(ε / C))` with `C` an upper bound on
//! the τ_φp norm of the variable; the partial-sum and Marcinkiewicz–Zygmund
//! forms substitute `C = c·n^{1−α}` and `C = n^{1/r}·b`. All probabilities are
//! clipped at 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::PIndex;
use crate::special::{ln_upper_gamma, KahanSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// `|S_n| ≥ n·ε`
    MeanScale,
    /// `|S_n| ≥ n^{1/s}·ε`
    MzScale { s: f64 },
    /// `|S_n| ≥ ε`
    Raw,
}

impl Normalization {
    /// The threshold `|S_n|` is compared with.
    pub fn threshold(&self, n: u64, epsilon: f64) -> f64 {
        let nf = n as f64;
        match self {
            Normalization::MeanScale => nf * epsilon,
            Normalization::MzScale { s } => nf.powf(1.0 / s) * epsilon,
            Normalization::Raw => epsilon,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Normalization::MeanScale => "mean".into(),
            Normalization::MzScale { s } => format!("mz(s={s})"),
            Normalization::Raw => "raw".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub epsilon: f64,
    pub n: u64,
    pub normalization: Normalization,
}

impl TailQuery {
    pub fn new(epsilon: f64, n: u64, normalization: Normalization) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::domain(format!("ε must be positive and finite, got {epsilon}")));
        }
        if n == 0 {
            return Err(Error::domain("n must be at least 1"));
        }
        Ok(TailQuery { epsilon, n, normalization })
    }
}

/// A probability bound plus whether the closed form is licensed at this
/// point (below the validity threshold the trivial bound 1 is returned).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub probability: f64,
    pub valid: bool,
}

impl BoundValue {
    fn trivial() -> Self {
        BoundValue { probability: 1.0, valid: false }
    }
}

/// Hypothesis `τ_φp(S_n) ≤ c·n^{1−α}` for all n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SllnBoundParams {
    pub c: f64,
    pub alpha: f64,
    pub p: PIndex,
}

impl SllnBoundParams {
    pub fn new(c: f64, alpha: f64, p: PIndex) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("α must be positive, got {alpha}")));
        }
        p.require_q()?;
        Ok(SllnBoundParams { c, alpha, p })
    }

    /// `(c/ε)^{1/α}`: the closed form applies for n strictly above it.
    pub fn validity_threshold(&self, epsilon: f64) -> f64 {
        (self.c / epsilon).powf(1.0 / self.alpha)
    }

    fn q(&self) -> f64 {
        self.p.q().expect("validated at construction")
    }
}

/// Uniform bound `b ≥ sup τ_φp(ξ_n)` with `r = min(p, 2)` and `0 < s < r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MzParams {
    pub b: f64,
    pub r: f64,
    pub s: f64,
    pub p: PIndex,
}

impl MzParams {
    pub fn new(b: f64, s: f64, p: PIndex) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::domain(format!("b must be positive, got {b}")));
        }
        p.require_q()?;
        let r = p.p().min(2.0);
        if !(s > 0.0 && s < r) {
            return Err(Error::domain(format!("s must satisfy 0 < s < r = {r}, got {s}")));
        }
        Ok(MzParams { b, r, s, p })
    }

    /// `1/s − 1/r > 0`.
    pub fn rate(&self) -> f64 {
        1.0 / self.s - 1.0 / self.r
    }

    pub fn validity_threshold(&self, epsilon: f64) -> f64 {
        (self.b / epsilon).powf(1.0 / self.rate())
    }
}

/// `min(1, 2·exp(−φ_q(ε/C)))` for any ξ with `τ_φp(ξ) ≤ C`.
pub fn tail_bound(p: &PIndex, c_bound: f64, epsilon: f64) -> Result<f64> {
    let q = crate::nfunction::conjugate_index(p)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("ε must be positive and finite, got {epsilon}")));
    }
    if !(c_bound >= 0.0) || !c_bound.is_finite() {
        return Err(Error::domain(format!("C must be nonnegative and finite, got {c_bound}")));
    }
    if c_bound == 0.0 {
        // ξ = 0 almost surely
        return Ok(0.0);
    }
    Ok((2.0 * (-q.phi(epsilon / c_bound)).exp()).min(1.0))
}

/// `P(|S_n| ≥ nε) ≤ 2·e^{1/q−1/2}·exp(−n^{qα}(ε/c)^q/q)` for `n > (c/ε)^{1/α}`.
pub fn partial_sum_tail_bound(params: &SllnBoundParams, query: &TailQuery) -> Result<BoundValue> {
    if query.normalization != Normalization::MeanScale {
        return Err(Error::domain("partial_sum_tail_bound needs a MeanScale query"));
    }
    let TailQuery { epsilon, n, .. } = TailQuery::new(query.epsilon, query.n, query.normalization)?;
    let nf = n as f64;
    if !(nf > params.validity_threshold(epsilon)) {
        return Ok(BoundValue::trivial());
    }
    let q = params.q();
    let exponent = 1.0 / q - 0.5 - nf.powf(q * params.alpha) * (epsilon / params.c).powf(q) / q;
    Ok(BoundValue { probability: (2.0 * exponent.exp()).min(1.0), valid: true })
}

/// `P(|S_n| ≥ n^{1/s}ε) ≤ 2·exp(−φ_q(n^{1/s−1/r}·ε/b))` for `n > (b/ε)^{(1/s−1/r)^{-1}}`.
pub fn mz_tail_bound(params: &MzParams, query: &TailQuery) -> Result<BoundValue> {
    match query.normalization {
        Normalization::MzScale { s } if s == params.s => {}
        Normalization::MzScale { s } => {
            return Err(Error::domain(format!("query s = {s} does not match parameters s = {}", params.s)))
        }
        _ => return Err(Error::domain("mz_tail_bound needs an MzScale query")),
    }
    let TailQuery { epsilon, n, .. } = TailQuery::new(query.epsilon, query.n, query.normalization)?;
    let nf = n as f64;
    if !(nf > params.validity_threshold(epsilon)) {
        return Ok(BoundValue::trivial());
    }
    let q = crate::nfunction::conjugate_index(&params.p)?;
    let x = nf.powf(params.rate()) * epsilon / params.b;
    Ok(BoundValue { probability: (2.0 * (-q.phi(x)).exp()).min(1.0), valid: true })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RemainderMethod {
    IncompleteGamma,
    /// `K·e^{−βN^k}·N/(kβN^k − 1)`, used when the gamma routine fails.
    Majorant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    /// Summability of `Σ P(|S_n| ≥ nε)`; holds whenever `qα > 0`.
    pub finite: bool,
    pub upper_bound: f64,
    /// `⌈(c/ε)^{1/α}⌉`; terms up to here are bounded by 1.
    pub n0: u64,
    /// Last index summed explicitly; the integral remainder starts here.
    pub last_explicit: u64,
    pub explicit_sum: f64,
    pub remainder: f64,
    pub remainder_method: RemainderMethod,
}

const MAX_EXPLICIT_TERMS: u64 = 5_000_000;

/// Upper bound on `Σ_{n≥1} min(1, bound_n)` for the partial-sum bounds.
///
/// Terms up to `n0` count as 1, terms after are summed until negligible, and
/// the rest is dominated by `∫_N^∞ K·exp(−β x^k) dx = K/(k β^{1/k})·Γ(1/k, βN^k)`
/// with `K = 2e^{1/q−1/2}`, `β = (ε/c)^q/q`, `k = qα` (the integrand is
/// decreasing past the threshold).
pub fn series_sum_bound(params: &SllnBoundParams, epsilon: f64) -> Result<SeriesReport> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain(format!("ε must be positive and finite, got {epsilon}")));
    }
    let q = params.q();
    let k = q * params.alpha;
    let beta = (epsilon / params.c).powf(q) / q;
    let ln_k_const = std::f64::consts::LN_2 + 1.0 / q - 0.5;

    let threshold = params.validity_threshold(epsilon);
    let n0_f = threshold.ceil().max(1.0);
    let n0 = if n0_f >= u64::MAX as f64 { u64::MAX } else { n0_f as u64 };

    let term = |n: f64| (ln_k_const - beta * n.powf(k)).exp().min(1.0);

    let mut explicit = KahanSum::new();
    let mut n = n0;
    if n0_f < 1e15 {
        loop {
            let next = n + 1;
            let nf = next as f64;
            let t = term(nf);
            explicit.add(t);
            n = next;
            let negligible = t <= 1e-18 * (n0_f + explicit.value());
            let majorant_ok = k * beta * nf.powf(k) > 2.0;
            if (negligible && majorant_ok) || n - n0 >= MAX_EXPLICIT_TERMS {
                break;
            }
        }
    }
    let big_n = n as f64;

    let u = beta * big_n.powf(k);
    let gamma_remainder = ln_upper_gamma(1.0 / k, u)
        .ok()
        .map(|lg| (ln_k_const - k.ln() - beta.ln() / k + lg).exp())
        .filter(|v| v.is_finite());
    let (remainder, remainder_method) = match gamma_remainder {
        Some(v) => (v, RemainderMethod::IncompleteGamma),
        None if k * u > 1.0 => ((ln_k_const - u).exp() * big_n / (k * u - 1.0), RemainderMethod::Majorant),
        None => {
            return Err(Error::Numeric(format!(
                "series remainder from N = {big_n:e} could not be bounded (kβN^k = {})",
                k * u
            )))
        }
    };

    let explicit_sum = explicit.value();
    // Outward rounding keeps the bound above any reordering of the same sum.
    let upper_bound = (n0_f + explicit_sum + remainder) * (1.0 + 8.0 * f64::EPSILON);
    Ok(SeriesReport {
        finite: k > 0.0 && beta > 0.0,
        upper_bound,
        n0,
        last_explicit: n,
        explicit_sum,
        remainder,
        remainder_method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub c: f64,
    pub alpha: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    /// False when the fitted α ≤ 0: the norm grows at least linearly and the
    /// SLLN hypothesis cannot be confirmed.
    pub hypothesis_satisfied: bool,
}

/// Fitted α at or below this is treated as α ≤ 0.
pub const ALPHA_FLOOR: f64 = 1e-9;

/// Least-squares fit of `ln τ = ln c + (1−α) ln n`.
pub fn slln_condition_fit(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 (n, τ) pairs, got {}", pairs.len())));
    }
    for w in pairs.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::domain(format!("n must be strictly increasing ({} then {})", w[0].0, w[1].0)));
        }
    }
    if let Some(&(n, t)) = pairs.iter().find(|(n, t)| !(*n >= 1.0) || !(*t > 0.0) || !t.is_finite() || !n.is_finite()) {
        return Err(Error::domain(format!("pairs need n >= 1 and τ > 0, got ({n}, {t})")));
    }
    let m = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, t)| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / m).sqrt();
    let alpha = 1.0 - slope;
    Ok(FitResult { c: intercept.exp(), alpha, residual, hypothesis_satisfied: alpha > ALPHA_FLOOR })
}
