//! Special functions and quadrature used by the norm and series solvers.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub use statrs::function::gamma::ln_gamma;

const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// `ln Γ(a, x)`, the log of the (unregularized) upper incomplete gamma
/// function, for `a > 0`, `x ≥ 0`.
///
/// Power series for the lower function when `x < a + 1`, modified Lentz
/// continued fraction otherwise.
pub fn ln_upper_gamma(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("incomplete gamma needs a > 0, x >= 0 (a={a}, x={x})")));
    }
    if x == 0.0 {
        return Ok(ln_gamma(a));
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let log_prefactor = -x + a * x.ln();
    if x < a + 1.0 {
        // γ(a, x) = e^{-x} x^a Σ x^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * f64::EPSILON {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!("incomplete gamma series did not converge (a={a}, x={x})")));
        }
        let ln_g = ln_gamma(a);
        let lower_ratio = (log_prefactor + sum.ln() - ln_g).exp();
        if lower_ratio >= 1.0 {
            return Err(Error::Numeric(format!("incomplete gamma series lost precision (a={a}, x={x})")));
        }
        Ok(ln_g + (-lower_ratio).ln_1p())
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < f64::EPSILON {
                return Ok(log_prefactor + h.ln());
            }
        }
        Err(Error::Numeric(format!("incomplete gamma continued fraction did not converge (a={a}, x={x})")))
    }
}

/// Standard normal quantile.
pub fn normal_quantile(u: f64) -> f64 {
    // Normal::new(0, 1) cannot fail.
    Normal::standard().inverse_cdf(u)
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod quadrature by recursive bisection. Returns the
/// integral and the accumulated error estimate.
///
/// A subinterval is accepted when its error estimate is within its share of
/// `abs_tol` or within `rel_tol` of its own value, so the relative target is
/// against `∫|f|`. Bisection stops at depth 50 regardless; the call fails if
/// the total estimate exceeds ten times the requested tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let (whole, err) = gk15(&f, a, b);
    let mut stack = vec![(a, b, whole, err, 0u32)];
    let mut total = KahanSum::new();
    let mut total_err = 0.0;
    let mut l1 = 0.0;
    let mut evaluations = 0usize;
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let local_tol = (abs_tol * (hi - lo) / (b - a)).max(rel_tol * val.abs());
        if err <= local_tol || depth >= 50 {
            total.add(val);
            total_err += err;
            l1 += val.abs();
            continue;
        }
        evaluations += 1;
        if evaluations > 100_000 {
            return Err(Error::Numeric("quadrature exceeded subdivision budget".into()));
        }
        let mid = 0.5 * (lo + hi);
        let (l, le) = gk15(&f, lo, mid);
        let (r, re) = gk15(&f, mid, hi);
        stack.push((lo, mid, l, le, depth + 1));
        stack.push((mid, hi, r, re, depth + 1));
    }
    let value = total.value();
    if !value.is_finite() {
        return Err(Error::Numeric("quadrature produced a non-finite value".into()));
    }
    if total_err > 10.0 * abs_tol.max(rel_tol * l1) {
        return Err(Error::Numeric(format!("quadrature error estimate {total_err:e} exceeds tolerance on [{a:e}, {b:e}]")));
    }
    Ok((value, total_err))
}
