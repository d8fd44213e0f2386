//! Cumulant generating functions and the τ_φp norm.
//!
//! τ_φp(ξ) is the smallest `a` with `ψ(λ) ≤ φ_p(a·λ)` for all λ, i.e. the
//! supremum over λ ≠ 0 of `φ_p⁻¹(ψ(λ)) / |λ|`. The supremum is searched on a
//! symmetric geometric λ-grid, refined locally, and compared with the λ → 0
//! limit `√ψ''(0)` (φ_p is x²/2 near the origin).

use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::{golden_max, PIndex, SolverParams};
use crate::special::{integrate, ln_gamma, KahanSum};

/// Exponent guard for the empirical CGF: `λ_max = CAP / max |x_i − x̄|`.
pub const EMPIRICAL_EXPONENT_CAP: f64 = 30.0;

const FRAC_2_SQRT_2PI: f64 = 0.797_884_560_802_865_4; // √(2/π)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CgfModel {
    Gaussian { sigma: f64 },
    Rademacher,
    CenteredUniform { half_width: f64 },
    /// A centered variable with `|ξ| ≤ d`, represented by its Hoeffding
    /// majorant `λ²d²/2`.
    BoundedCentered { bound: f64 },
    /// `|g|^a − E|g|^a` for standard normal `g`; `a = 2/q` makes it
    /// φ_p-subgaussian.
    AbsGaussianPower { exponent: f64, mean: f64 },
    /// Mean-centered samples.
    Empirical { centered: Vec<f64>, mean: f64, window: StabilityWindow },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StabilityWindow {
    /// ψ is trusted on `[-lambda_max, lambda_max]`.
    Bounded { lambda_max: f64 },
    /// All samples equal: ψ ≡ 0 on all of ℝ.
    Degenerate,
}

impl StabilityWindow {
    pub fn contains(&self, lambda: f64) -> bool {
        match self {
            StabilityWindow::Bounded { lambda_max } => lambda.abs() <= *lambda_max,
            StabilityWindow::Degenerate => true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl CgfModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Ok(CgfModel::Gaussian { sigma: positive("sigma", sigma)? })
    }

    pub fn centered_uniform(half_width: f64) -> Result<Self> {
        Ok(CgfModel::CenteredUniform { half_width: positive("half-width", half_width)? })
    }

    pub fn bounded_centered(bound: f64) -> Result<Self> {
        Ok(CgfModel::BoundedCentered { bound: positive("bound", bound)? })
    }

    /// `|g|^a − E|g|^a` with `0 < a < 2`.
    pub fn abs_gaussian_power(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 2.0) {
            return Err(Error::domain(format!("exponent must lie in (0, 2), got {exponent}")));
        }
        Ok(CgfModel::AbsGaussianPower { exponent, mean: abs_gaussian_moment(exponent) })
    }

    /// The catalog variable `|g|^{2/q} − E|g|^{2/q}` that lies in Sub_φp.
    pub fn abs_gaussian_power_for(p: &PIndex) -> Result<Self> {
        Self::abs_gaussian_power(2.0 / p.require_q()?)
    }

    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!("empirical CGF needs at least 2 samples, got {}", samples.len())));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::domain(format!("sample {bad} is not finite")));
        }
        let mean = samples.iter().copied().collect::<KahanSum>().value() / samples.len() as f64;
        let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
        let window = empirical_stability_window(samples)?;
        Ok(CgfModel::Empirical { centered, mean, window })
    }

    /// The model of `c·ξ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let a = c.abs();
        match self {
            CgfModel::Gaussian { sigma } => Self::gaussian(sigma * a),
            CgfModel::CenteredUniform { half_width } => Self::centered_uniform(half_width * a),
            CgfModel::BoundedCentered { bound } => Self::bounded_centered(bound * a),
            CgfModel::Empirical { centered, mean, .. } => {
                let raw: Vec<f64> = centered.iter().map(|x| c * (x + mean)).collect();
                Self::empirical(&raw)
            }
            CgfModel::Rademacher | CgfModel::AbsGaussianPower { .. } => {
                Err(Error::Unsupported("catalog model has no scale parameter".into()))
            }
        }
    }

    /// Second cumulant ψ''(0).
    pub fn variance(&self) -> Result<f64> {
        Ok(match self {
            CgfModel::Gaussian { sigma } => sigma * sigma,
            CgfModel::BoundedCentered { bound } => bound * bound,
            CgfModel::Empirical { centered, .. } => {
                centered.iter().map(|x| x * x).collect::<KahanSum>().value() / centered.len() as f64
            }
            _ => {
                let h = 1e-3;
                (cgf_eval(self, h)? + cgf_eval(self, -h)?) / (h * h)
            }
        })
    }
}

/// `E|g|^a = 2^{a/2} Γ((a+1)/2) / √π` for standard normal `g`.
pub fn abs_gaussian_moment(a: f64) -> f64 {
    (0.5 * a * std::f64::consts::LN_2 + ln_gamma(0.5 * (a + 1.0)) - 0.5 * std::f64::consts::PI.ln()).exp()
}

/// `[-λ_max, λ_max]` with `λ_max = 30 / max |x_i − x̄|`.
pub fn empirical_stability_window(samples: &[f64]) -> Result<StabilityWindow> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("stability window needs at least 2 samples, got {}", samples.len())));
    }
    let mean = samples.iter().copied().collect::<KahanSum>().value() / samples.len() as f64;
    let spread = samples.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if spread == 0.0 {
        Ok(StabilityWindow::Degenerate)
    } else {
        Ok(StabilityWindow::Bounded { lambda_max: EMPIRICAL_EXPONENT_CAP / spread })
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a > 20.0 {
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    } else {
        let s = (0.5 * a).sinh();
        (2.0 * s * s).ln_1p()
    }
}

/// `ln(sinh x / x)` with the x → 0 limit 0.
fn ln_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.5 {
        // sinh(x)/x − 1 = Σ_{k≥1} x^{2k}/(2k+1)!
        let x2 = a * a;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..20 {
            term *= x2 / ((2 * k) as f64 * (2 * k + 1) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum.ln_1p()
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2 - a.ln()
    }
}

/// ψ(λ) of `|g|^a − m` by quadrature in log space around the mode of the
/// integrand.
fn abs_gaussian_power_cgf(a: f64, m: f64, lambda: f64) -> Result<f64> {
    let log_density = FRAC_2_SQRT_2PI.ln();
    let h = |x: f64| lambda * (x.powf(a) - m) - 0.5 * x * x + log_density;
    let mode = if lambda > 0.0 { (lambda * a).powf(1.0 / (2.0 - a)) } else { 0.0 };
    let h_max = h(mode);
    let reach = 12.0 / (2.0 - a).sqrt().max(0.1);
    let upper = mode + reach;
    let integrand = |x: f64| (h(x) - h_max).exp();
    // h(x) − h_max cancels terms of size |h_max|, which sets the integrand's
    // rounding floor; the error target is on ψ, so it scales with |h_max|.
    let floor = 64.0 * f64::EPSILON * (h_max.abs() + (lambda * m).abs() + 1.0);
    let rel_tol = 1e-12_f64.max(floor);
    let mut total = 0.0;
    let mut err = 0.0;
    let pieces: Vec<(f64, f64)> = if mode > 0.0 { vec![(0.0, mode), (mode, upper)] } else { vec![(0.0, upper)] };
    for (lo, hi) in pieces {
        let (v, e) = integrate(integrand, lo, hi, 1e-300, rel_tol)?;
        total += v;
        err += e;
    }
    if !(total > 0.0) || err > 1e-8 * total * h_max.abs().max(1.0) {
        return Err(Error::Numeric(format!("quadrature for ψ({lambda}) failed (value {total:e}, error {err:e})")));
    }
    Ok(h_max + total.ln())
}

/// Evaluates ψ(λ) = ln E exp(λξ).
pub fn cgf_eval(model: &CgfModel, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::domain(format!("λ must be finite, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(match model {
        CgfModel::Gaussian { sigma } => 0.5 * sigma * sigma * lambda * lambda,
        CgfModel::Rademacher => ln_cosh(lambda),
        CgfModel::CenteredUniform { half_width } => ln_sinhc(half_width * lambda),
        CgfModel::BoundedCentered { bound } => 0.5 * bound * bound * lambda * lambda,
        CgfModel::AbsGaussianPower { exponent, mean } => abs_gaussian_power_cgf(*exponent, *mean, lambda)?,
        CgfModel::Empirical { centered, window, .. } => {
            if !window.contains(lambda) {
                let StabilityWindow::Bounded { lambda_max } = window else { unreachable!() };
                return Err(Error::domain(format!(
                    "λ = {lambda} outside the empirical stability window [-{lambda_max}, {lambda_max}]; \
                     sample MGFs are unreliable beyond it"
                )));
            }
            if matches!(window, StabilityWindow::Degenerate) {
                return Ok(0.0);
            }
            let top = centered.iter().map(|x| lambda * x).fold(f64::NEG_INFINITY, f64::max);
            let s = centered.iter().map(|x| (lambda * x - top).exp()).collect::<KahanSum>().value();
            top + (s / centered.len() as f64).ln()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMethod {
    Exact,
    NumericSup,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormDiagnostics {
    pub grid_points: usize,
    pub refine_iterations: usize,
    /// √ψ''(0), the ratio's λ → 0 limit.
    pub small_lambda_limit: Option<f64>,
    /// Sup taken only over the empirical stability window.
    pub window_limited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub tau: f64,
    pub method: NormMethod,
    /// λ where the sup search peaked; `Some(0.0)` for the λ → 0 limit.
    pub sup_location: Option<f64>,
    pub diagnostics: NormDiagnostics,
}

impl NormEstimate {
    pub fn upper_bound(tau: f64) -> Self {
        NormEstimate { tau, method: NormMethod::UpperBound, sup_location: None, diagnostics: NormDiagnostics::default() }
    }

    fn exact(tau: f64) -> Self {
        NormEstimate { tau, method: NormMethod::Exact, sup_location: None, diagnostics: NormDiagnostics::default() }
    }
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![hi];
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n).map(|k| (llo + (lhi - llo) * k as f64 / (n - 1) as f64).exp().min(hi)).collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

/// τ_φp of the modelled variable.
pub fn tau_norm(model: &CgfModel, p: &PIndex, solver: &SolverParams) -> Result<NormEstimate> {
    match model {
        CgfModel::Gaussian { sigma } if p.p() == 2.0 => return Ok(NormEstimate::exact(*sigma)),
        CgfModel::BoundedCentered { bound } if p.p() == 2.0 => return Ok(NormEstimate::upper_bound(*bound)),
        CgfModel::Empirical { window: StabilityWindow::Degenerate, .. } => return Ok(NormEstimate::exact(0.0)),
        _ => {}
    }

    let window_max = match model {
        CgfModel::Empirical { window: StabilityWindow::Bounded { lambda_max }, .. } => Some(*lambda_max),
        _ => None,
    };
    let (lo, hi) = match window_max {
        Some(w) => (solver.lambda_min.min(w * 1e-4), solver.lambda_max.min(w)),
        None => (solver.lambda_min, solver.lambda_max),
    };
    if !(lo > 0.0 && hi > lo) || solver.lambda_points < 3 {
        return Err(Error::domain(format!("invalid λ-grid [{lo:e}, {hi:e}] with {} points", solver.lambda_points)));
    }
    let grid = geometric_grid(lo, hi, solver.lambda_points);

    let ratio = |lambda: f64| -> Result<f64> {
        let psi = cgf_eval(model, lambda)?;
        if psi.is_nan() {
            return Err(Error::Numeric(format!("ψ({lambda}) is NaN")));
        }
        Ok(p.phi_inv(psi.max(0.0)) / lambda.abs())
    };

    let limit = model.variance()?.max(0.0).sqrt();
    let mut best_tau = limit;
    let mut best_loc = 0.0;
    let mut refine_iterations = 0;

    for sign in [1.0, -1.0] {
        let values: Vec<f64> = grid.iter().map(|&l| ratio(sign * l)).collect::<Result<_>>()?;

        if window_max.is_none() {
            let last = values.len() - 1;
            let decade_back = grid.iter().position(|&l| l >= grid[last] / 10.0).unwrap_or(0).min(last - 1);
            let (end, prev) = (values[last], values[decade_back]);
            if !end.is_finite() || end > prev * (1.0 + solver.growth_tol) {
                return Err(Error::NotSubgaussian {
                    p: p.p(),
                    detail: format!(
                        "φ_p⁻¹(ψ(λ))/|λ| grows from {prev:e} to {end:e} over the last decade up to |λ| = {:e}",
                        grid[last]
                    ),
                });
            }
        }

        let (k, &vk) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        let (mut cand_tau, mut cand_loc) = (vk, sign * grid[k]);
        if k > 0 && k + 1 < grid.len() {
            let objective = |t: f64| ratio(sign * t).unwrap_or(f64::NEG_INFINITY);
            let (t, v, it) = golden_max(objective, grid[k - 1], grid[k + 1], solver)?;
            refine_iterations += it;
            if v > cand_tau {
                cand_tau = v;
                cand_loc = sign * t;
            }
        }
        if cand_tau > best_tau {
            best_tau = cand_tau;
            best_loc = cand_loc;
        }
    }

    Ok(NormEstimate {
        tau: best_tau,
        method: NormMethod::NumericSup,
        sup_location: Some(best_loc),
        diagnostics: NormDiagnostics {
            grid_points: 2 * grid.len(),
            refine_iterations,
            small_lambda_limit: Some(limit),
            window_limited: window_max.is_some(),
        },
    })
}

fn check_nonnegative(norms: &[f64]) -> Result<()> {
    match norms.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        Some(bad) => Err(Error::domain(format!("norms must be finite and nonnegative, got {bad}"))),
        None => Ok(()),
    }
}

/// `Σ τ_i`, the triangle-inequality bound on τ(Σ ξ_i).
pub fn triangle_bound(norms: &[f64]) -> Result<f64> {
    check_nonnegative(norms)?;
    Ok(norms.iter().copied().collect::<KahanSum>().value())
}

/// `(Σ τ_i^r)^{1/r}`, valid for independent (or acceptable) summands when
/// `φ(|x|^{1/r})` is convex; `r = min(p, 2)` for φ_p.
pub fn sum_norm_bound(norms: &[f64], r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 2.0) {
        return Err(Error::domain(format!("r must lie in (0, 2], got {r}")));
    }
    check_nonnegative(norms)?;
    let s = norms.iter().map(|t| t.powf(r)).collect::<KahanSum>().value();
    Ok(s.powf(1.0 / r))
}

/// `√(Σ d_i²)`: the τ_φ2 bound on a sum of centered martingale differences
/// with `|ξ_i| ≤ d_i`.
pub fn hoeffding_azuma_norm_bound(d: &[f64]) -> Result<NormEstimate> {
    if let Some(bad) = d.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::domain(format!("bounds d_i must be positive, got {bad}")));
    }
    let s = d.iter().map(|x| x * x).collect::<KahanSum>().value();
    Ok(NormEstimate::upper_bound(s.sqrt()))
}

/// Reads a one-column numeric file: one value per line, `#` comments, an
/// optional non-numeric header line.
pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_samples(std::io::BufReader::new(file))
}

pub fn parse_samples<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut seen_content = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim().trim_end_matches(',').trim();
        if content.is_empty() {
            continue;
        }
        match content.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(Error::Config(format!("line {}: non-finite value {v}", lineno + 1))),
            Err(_) if !seen_content => {}
            Err(_) => return Err(Error::Config(format!("line {}: cannot parse {content:?} as a number", lineno + 1))),
        }
        seen_content = true;
    }
    Ok(out)
}
