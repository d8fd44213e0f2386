//! Seeded Monte-Carlo harness for partial sums.
//!
//! A [`SequenceSpec`] describes a random sequence; replications use seeds
//! `seed_base, seed_base + 1, …`, run in parallel and are reduced in seed
//! order, so reports are bit-identical for identical inputs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::{PIndex, SolverParams};
use crate::norm::{abs_gaussian_moment, tau_norm, CgfModel};
use crate::rng::CounterRng;
use crate::special::{normal_quantile, KahanSum};
use crate::tail::{mz_tail_bound, partial_sum_tail_bound, BoundValue, MzParams, Normalization, SllnBoundParams, TailQuery};

/// Volatility rule `w(S_{k−1}, k)` of the bounded martingale generator
/// `ξ_k = d·η_k·w`, with `η_k` iid Rademacher and `|w| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriverRule {
    /// `w = 1 / (1 + |S_{k−1}| / (d·√k))`: steps shrink while the walk is far
    /// from the origin.
    Damped,
    /// `w = 1`: plain scaled Rademacher steps.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian { sigma: f64 },
    Rademacher,
    CenteredUniform { half_width: f64 },
    /// `|g|^a − E|g|^a`.
    AbsGaussianPower { exponent: f64 },
    BoundedMartingaleDifference { d: f64, driver: DriverRule },
    /// `ξ_k = ξ_1` for all k.
    IdenticalCopies { base: Box<Distribution> },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            Distribution::Gaussian { sigma } => pos("sigma", *sigma),
            Distribution::Rademacher => Ok(()),
            Distribution::CenteredUniform { half_width } => pos("half-width", *half_width),
            Distribution::AbsGaussianPower { exponent } => {
                if *exponent > 0.0 && *exponent < 2.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("exponent must lie in (0, 2), got {exponent}")))
                }
            }
            Distribution::BoundedMartingaleDifference { d, .. } => pos("d", *d),
            Distribution::IdenticalCopies { base } => base.validate(),
        }
    }

    /// Largest possible |ξ|, when bounded.
    pub fn sup_abs(&self) -> Option<f64> {
        match self {
            Distribution::Rademacher => Some(1.0),
            Distribution::CenteredUniform { half_width } => Some(*half_width),
            Distribution::BoundedMartingaleDifference { d, .. } => Some(*d),
            Distribution::IdenticalCopies { base } => base.sup_abs(),
            _ => None,
        }
    }

    /// The same distribution with its scale parameter multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Ok(match self {
            Distribution::Gaussian { sigma } => Distribution::Gaussian { sigma: sigma * c },
            Distribution::CenteredUniform { half_width } => Distribution::CenteredUniform { half_width: half_width * c },
            Distribution::BoundedMartingaleDifference { d, driver } => {
                Distribution::BoundedMartingaleDifference { d: d * c, driver: *driver }
            }
            Distribution::IdenticalCopies { base } => Distribution::IdenticalCopies { base: Box::new(base.scaled(c)?) },
            Distribution::Rademacher | Distribution::AbsGaussianPower { .. } => {
                return Err(Error::Config("distribution has no scale parameter".into()))
            }
        })
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            Distribution::Rademacher => write!(f, "rademacher"),
            Distribution::CenteredUniform { half_width } => write!(f, "uniform:h={half_width}"),
            Distribution::AbsGaussianPower { exponent } => write!(f, "absgauss:a={exponent}"),
            Distribution::BoundedMartingaleDifference { d, driver } => {
                let drv = match driver {
                    DriverRule::Damped => "damped",
                    DriverRule::Unit => "unit",
                };
                write!(f, "martingale:d={d},driver={drv}")
            }
            Distribution::IdenticalCopies { base } => write!(f, "copies:{base}"),
        }
    }
}

/// Parses `rademacher`, `gaussian:sigma=2`, `uniform:h=1`, `absgauss:a=1`,
/// `martingale:d=1,driver=damped` and `copies:<inner>`.
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim().to_ascii_lowercase(), r.trim()),
            None => (s.to_ascii_lowercase(), ""),
        };
        if kind == "copies" || kind == "identical_copies" {
            let base: Distribution = if rest.is_empty() { Distribution::Rademacher } else { rest.parse()? };
            return Ok(Distribution::IdenticalCopies { base: Box::new(base) });
        }
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value in distribution parameters, got {part:?}")))?;
            kv.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        let num = |keys: &[&str], default: Option<f64>| -> Result<f64> {
            for k in keys {
                if let Some(v) = kv.get(*k) {
                    return v.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse {k}={v:?} as a number")));
                }
            }
            default.ok_or_else(|| Error::Config(format!("{kind} needs parameter {}", keys[0])))
        };
        let dist = match kind.as_str() {
            "gaussian" | "normal" => Distribution::Gaussian { sigma: num(&["sigma"], Some(1.0))? },
            "rademacher" => Distribution::Rademacher,
            "uniform" | "centered_uniform" => Distribution::CenteredUniform { half_width: num(&["h", "half_width"], Some(1.0))? },
            "absgauss" | "abs_gaussian_power" => Distribution::AbsGaussianPower { exponent: num(&["a", "exponent"], None)? },
            "martingale" | "bounded_martingale_difference" => {
                let driver = match kv.get("driver").map(String::as_str) {
                    None | Some("damped") => DriverRule::Damped,
                    Some("unit") => DriverRule::Unit,
                    Some(other) => return Err(Error::Config(format!("unknown martingale driver {other:?}"))),
                };
                Distribution::BoundedMartingaleDifference { d: num(&["d"], Some(1.0))?, driver }
            }
            other => return Err(Error::Config(format!("unknown distribution kind {other:?}"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub distribution: Distribution,
    pub n_max: u64,
    pub seed: u64,
}

impl SequenceSpec {
    pub fn new(distribution: Distribution, n_max: u64, seed: u64) -> Result<Self> {
        distribution.validate()?;
        if n_max == 0 {
            return Err(Error::Config("n_max must be at least 1".into()));
        }
        Ok(SequenceSpec { distribution, n_max, seed })
    }
}

/// Streaming generator for one replication.
pub struct SequenceStream<'a> {
    dist: &'a Distribution,
    rng: CounterRng,
    k: u64,
    running: f64,
    frozen: Option<f64>,
    abs_mean: f64,
}

impl<'a> SequenceStream<'a> {
    pub fn new(dist: &'a Distribution, seed: u64) -> Self {
        let abs_mean = match dist {
            Distribution::AbsGaussianPower { exponent } => abs_gaussian_moment(*exponent),
            Distribution::IdenticalCopies { base } => match base.as_ref() {
                Distribution::AbsGaussianPower { exponent } => abs_gaussian_moment(*exponent),
                _ => 0.0,
            },
            _ => 0.0,
        };
        SequenceStream { dist, rng: CounterRng::new(seed), k: 0, running: 0.0, frozen: None, abs_mean }
    }

    fn draw(&mut self, dist: &Distribution) -> f64 {
        match dist {
            Distribution::Gaussian { sigma } => sigma * normal_quantile(self.rng.next_open01()),
            Distribution::Rademacher => self.rng.next_sign(),
            Distribution::CenteredUniform { half_width } => half_width * (2.0 * self.rng.next_open01() - 1.0),
            Distribution::AbsGaussianPower { exponent } => {
                normal_quantile(self.rng.next_open01()).abs().powf(*exponent) - self.abs_mean
            }
            Distribution::BoundedMartingaleDifference { d, driver } => {
                let eta = self.rng.next_sign();
                let w = match driver {
                    DriverRule::Damped => 1.0 / (1.0 + self.running.abs() / (d * (self.k as f64).sqrt())),
                    DriverRule::Unit => 1.0,
                };
                d * eta * w
            }
            Distribution::IdenticalCopies { base } => match self.frozen {
                Some(x) => x,
                None => {
                    let x = self.draw(base);
                    self.frozen = Some(x);
                    x
                }
            },
        }
    }
}

impl Iterator for SequenceStream<'_> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        self.k += 1;
        let x = self.draw(self.dist);
        self.running += x;
        Some(x)
    }
}

/// The first `n_max` terms of the sequence; a pure function of the spec.
pub fn generate_sequence(spec: &SequenceSpec) -> Result<Vec<f64>> {
    spec.distribution.validate()?;
    let len = usize::try_from(spec.n_max).map_err(|_| Error::Config("n_max too large to materialize".into()))?;
    Ok(SequenceStream::new(&spec.distribution, spec.seed).take(len).collect())
}

/// `(n, n^{−1/s}·S_n)` for each requested n, with compensated partial sums.
pub fn normalized_path(samples: &[f64], s: f64, n_grid: &[u64]) -> Result<Vec<(u64, f64)>> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    if let Some(&bad) = n_grid.iter().find(|&&n| n == 0 || n as usize > samples.len()) {
        return Err(Error::domain(format!("checkpoint {bad} outside [1, {}]", samples.len())));
    }
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    let mut acc = KahanSum::new();
    prefix.push(0.0);
    for &x in samples {
        acc.add(x);
        prefix.push(acc.value());
    }
    Ok(n_grid.iter().map(|&n| (n, prefix[n as usize] * (n as f64).powf(-1.0 / s))).collect())
}

/// Partial sums at the (sorted) checkpoints for one seed.
fn checkpoint_sums(dist: &Distribution, checkpoints: &[u64], seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut stream = SequenceStream::new(dist, seed);
    let mut acc = KahanSum::new();
    let mut k = 0u64;
    for &n in checkpoints {
        while k < n {
            acc.add(stream.next().expect("stream is infinite"));
            k += 1;
        }
        out.push(acc.value());
    }
    out
}

/// `S_n` at each checkpoint for replications `seed_base + r`, in seed order.
pub fn replicate_sums(dist: &Distribution, checkpoints: &[u64], replications: u64, seed_base: u64) -> Vec<Vec<f64>> {
    (0..replications)
        .into_par_iter()
        .map(|r| checkpoint_sums(dist, checkpoints, seed_base.wrapping_add(r)))
        .collect()
}

fn binomial_se(freq: f64, reps: u64) -> f64 {
    (freq * (1.0 - freq) / reps as f64).sqrt()
}

/// Monte-Carlo estimate of `P(|S_n| ≥ threshold)` and its binomial standard
/// error, over seeds `seed_base, seed_base + 1, …`.
pub fn exceedance_frequency(
    spec: &SequenceSpec,
    normalization: Normalization,
    epsilon: f64,
    n: u64,
    replications: u64,
    seed_base: u64,
) -> Result<(f64, f64)> {
    spec.distribution.validate()?;
    let query = TailQuery::new(epsilon, n, normalization)?;
    if n > spec.n_max {
        return Err(Error::domain(format!("n = {n} exceeds n_max = {}", spec.n_max)));
    }
    if replications == 0 {
        return Err(Error::domain("replications must be at least 1"));
    }
    if let Normalization::MzScale { s } = normalization {
        if !(s > 0.0) {
            return Err(Error::domain(format!("s must be positive, got {s}")));
        }
    }
    let threshold = normalization.threshold(query.n, query.epsilon);
    let sums = replicate_sums(&spec.distribution, &[n], replications, seed_base);
    let hits = sums.iter().filter(|row| row[0].abs() >= threshold).count();
    let freq = hits as f64 / replications as f64;
    Ok((freq, binomial_se(freq, replications)))
}

/// Norm-growth constants used for the theoretical bounds of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundProfile {
    pub p: PIndex,
    /// `τ_φp(S_n) ≤ c·n^{1−α}`.
    pub c: f64,
    pub alpha: f64,
    /// `sup_n τ_φp(ξ_n) ≤ b`.
    pub b: f64,
    /// `r = min(p, 2)`.
    pub r: f64,
}

/// Bound constants for the catalog distributions; `None` for identical
/// copies, whose norm grows linearly and satisfies no SLLN hypothesis.
pub fn bound_profile(dist: &Distribution) -> Result<Option<BoundProfile>> {
    let p2 = PIndex::new(2.0)?;
    let with_r2 = |b: f64| Some(BoundProfile { p: p2, c: b, alpha: 0.5, b, r: 2.0 });
    Ok(match dist {
        Distribution::Gaussian { sigma } => with_r2(*sigma),
        // ln cosh λ ≤ λ²/2
        Distribution::Rademacher => with_r2(1.0),
        // ln(sinh x / x) ≤ x²/6
        Distribution::CenteredUniform { half_width } => with_r2(half_width / 3f64.sqrt()),
        // Hoeffding–Azuma: τ_φ2(S_n) ≤ d·√n
        Distribution::BoundedMartingaleDifference { d, .. } => with_r2(*d),
        Distribution::AbsGaussianPower { exponent } => {
            let p = PIndex::new(1.0 / (1.0 - 0.5 * exponent))?;
            let b = tau_norm(&CgfModel::abs_gaussian_power(*exponent)?, &p, &SolverParams::default())?.tau;
            let r = p.p().min(2.0);
            Some(BoundProfile { p, c: b, alpha: 1.0 - 1.0 / r, b, r })
        }
        Distribution::IdenticalCopies { .. } => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceRow {
    pub epsilon: f64,
    pub normalization: Normalization,
    pub frequency: f64,
    pub std_error: f64,
    /// Theoretical bound, absent when the distribution has no bound profile.
    pub bound: Option<BoundValue>,
    /// Frequency exceeds a valid bound by more than 3 standard errors.
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub n: u64,
    /// Mean over replications of `|S_n|/n`.
    pub mean_abs_mean_scale: f64,
    pub std_error_mean_scale: f64,
    /// Mean over replications of `|n^{−1/s} S_n|`.
    pub mean_abs_mz_scale: f64,
    pub exceedances: Vec<ExceedanceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub seed_base: u64,
    pub replications: u64,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub distribution: Distribution,
    pub s: f64,
    pub n_grid: Vec<u64>,
    pub epsilon_grid: Vec<f64>,
    pub replications: u64,
    pub seeds: SeedManifest,
    pub bound_profile: Option<BoundProfile>,
    pub checkpoints: Vec<CheckpointStats>,
    /// Count of valid-regime bound violations beyond 3 standard errors.
    pub violations: usize,
    /// `mean |S_n|/n` strictly decreasing across checkpoints.
    pub mean_scale_decreasing: bool,
    /// `mean |S_n|/n` at the last checkpoint is not below the first.
    pub non_convergence: bool,
}

/// Geometric checkpoints `10², 10³, …, 10⁶`.
pub fn default_checkpoints() -> Vec<u64> {
    vec![100, 1_000, 10_000, 100_000, 1_000_000]
}

/// Trajectory statistics and exceedance frequencies against the bounds.
pub fn convergence_report(
    spec: &SequenceSpec,
    s: f64,
    n_grid: &[u64],
    epsilon_grid: &[f64],
    replications: u64,
    seed_base: u64,
) -> Result<SimulationReport> {
    spec.distribution.validate()?;
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] == 0 {
        return Err(Error::Config("n_grid must be non-empty, positive and strictly increasing".into()));
    }
    if *n_grid.last().expect("non-empty") > spec.n_max {
        return Err(Error::Config(format!("n_grid exceeds n_max = {}", spec.n_max)));
    }
    if let Some(bad) = epsilon_grid.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::Config(format!("ε values must be positive, got {bad}")));
    }
    if replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain(format!("s must be positive, got {s}")));
    }
    let profile = bound_profile(&spec.distribution)?;
    let slln = profile.map(|bp| SllnBoundParams::new(bp.c, bp.alpha, bp.p)).transpose()?;
    let mz = match profile {
        Some(bp) => {
            if s >= bp.r {
                return Err(Error::domain(format!("s = {s} must be below r = {} for the distribution", bp.r)));
            }
            Some(MzParams::new(bp.b, s, bp.p)?)
        }
        None => None,
    };

    let sums = replicate_sums(&spec.distribution, n_grid, replications, seed_base);
    let reps = replications as f64;
    let normalizations = [Normalization::MeanScale, Normalization::MzScale { s }];

    let mut checkpoints = Vec::with_capacity(n_grid.len());
    let mut violations = 0;
    for (j, &n) in n_grid.iter().enumerate() {
        let nf = n as f64;
        let scaled: Vec<f64> = sums.iter().map(|row| row[j].abs() / nf).collect();
        let mean = scaled.iter().copied().collect::<KahanSum>().value() / reps;
        let var = if replications > 1 {
            scaled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1.0)
        } else {
            0.0
        };
        let mz_scale = nf.powf(-1.0 / s);
        let mean_mz = sums.iter().map(|row| row[j].abs() * mz_scale).collect::<KahanSum>().value() / reps;

        let mut rows = Vec::with_capacity(epsilon_grid.len() * normalizations.len());
        for &eps in epsilon_grid {
            for norm in normalizations {
                let threshold = norm.threshold(n, eps);
                let hits = sums.iter().filter(|row| row[j].abs() >= threshold).count();
                let freq = hits as f64 / reps;
                let se = binomial_se(freq, replications);
                let query = TailQuery::new(eps, n, norm)?;
                let bound = match (norm, &slln, &mz) {
                    (Normalization::MeanScale, Some(params), _) => Some(partial_sum_tail_bound(params, &query)?),
                    (Normalization::MzScale { .. }, _, Some(params)) => Some(mz_tail_bound(params, &query)?),
                    _ => None,
                };
                let violated = bound.is_some_and(|b| b.valid && freq > b.probability + 3.0 * se);
                violations += usize::from(violated);
                rows.push(ExceedanceRow { epsilon: eps, normalization: norm, frequency: freq, std_error: se, bound, violated });
            }
        }
        checkpoints.push(CheckpointStats {
            n,
            mean_abs_mean_scale: mean,
            std_error_mean_scale: (var / reps).sqrt(),
            mean_abs_mz_scale: mean_mz,
            exceedances: rows,
        });
    }

    let means: Vec<f64> = checkpoints.iter().map(|c| c.mean_abs_mean_scale).collect();
    let mean_scale_decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let non_convergence = !(means[means.len() - 1] < means[0]);

    Ok(SimulationReport {
        distribution: spec.distribution.clone(),
        s,
        n_grid: n_grid.to_vec(),
        epsilon_grid: epsilon_grid.to_vec(),
        replications,
        seeds: SeedManifest { seed_base, replications, generator: "chacha8".into() },
        bound_profile: profile,
        checkpoints,
        violations,
        mean_scale_decreasing,
        non_convergence,
    })
}

impl SimulationReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid report JSON: {e}")))
    }

    /// One row per checkpoint × ε × normalization.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "n",
            "epsilon",
            "normalization",
            "frequency",
            "std_error",
            "bound",
            "bound_valid",
            "violated",
            "mean_abs_mean_scale",
            "mean_abs_mz_scale",
            "replications",
        ])
        .map_err(io)?;
        for cp in &self.checkpoints {
            for row in &cp.exceedances {
                let (bound, valid) = match row.bound {
                    Some(b) => (b.probability.to_string(), b.valid.to_string()),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    cp.n.to_string(),
                    row.epsilon.to_string(),
                    row.normalization.label(),
                    row.frequency.to_string(),
                    row.std_error.to_string(),
                    bound,
                    valid,
                    row.violated.to_string(),
                    cp.mean_abs_mean_scale.to_string(),
                    cp.mean_abs_mz_scale.to_string(),
                    self.replications.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
