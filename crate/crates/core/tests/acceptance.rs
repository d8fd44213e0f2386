//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use phisub::simulator::replicate_sums;
use phisub::special::KahanSum;
use phisub::{
    conjugate_index, convergence_report, legendre_transform, mz_tail_bound, partial_sum_tail_bound, series_sum_bound,
    slln_condition_fit, tail_bound, tau_norm, CgfModel, Distribution, DriverRule, MzParams, NFunctionSpec,
    Normalization, PIndex, SequenceSpec, SllnBoundParams, SolverParams, TailQuery,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

const P_SET: [f64; 5] = [1.25, 1.5, 2.0, 3.0, 5.0];

fn pi(p: f64) -> PIndex {
    PIndex::new(p).unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn conjugate_identity() -> Outcome {
    let sp = SolverParams::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in P_SET {
        let p = pi(p);
        let q = conjugate_index(&p).unwrap();
        let spec = NFunctionSpec::PhiP(p);
        for y in linspace(-10.0, 10.0, 101) {
            let v = legendre_transform(&spec, y, &sp).unwrap().value;
            worst = worst.max((v - q.phi(y)).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(5),
        format!("max |numeric − φ_q| = {worst:.2e} over 5×101 points in {:.2}s", elapsed.as_secs_f64()),
    )
}

fn biconjugation() -> Outcome {
    let sp = SolverParams::default();
    let mut worst: f64 = 0.0;
    for p in P_SET {
        let spec = NFunctionSpec::PhiP(pi(p));
        let star = spec.numeric_conjugate(sp);
        for x in linspace(-5.0, 5.0, 101) {
            let v = legendre_transform(&star, x, &sp).unwrap().value;
            worst = worst.max((v - spec.eval(x)).abs());
        }
    }
    outcome(worst < 1e-5, format!("max |φ_p** − φ_p| = {worst:.2e} on [-5, 5]"))
}

/// Dense geometric sup of `φ_2⁻¹(ψ(λ))/λ = √(2ψ(λ))/λ`, independent of the solver.
fn grid_sup(psi: impl Fn(f64) -> f64) -> f64 {
    (0..20_000).map(|k| 10f64.powf(-3.0 + 7.0 * k as f64 / 20_000.0)).map(|l| (2.0 * psi(l)).sqrt() / l).fold(0.0, f64::max)
}

fn exact_norms() -> Outcome {
    let sp = SolverParams::default();
    let p2 = pi(2.0);
    let mut ok = true;
    let mut gauss_err: f64 = 0.0;
    for sigma in [0.1, 1.0, 3.0] {
        let t = tau_norm(&CgfModel::gaussian(sigma).unwrap(), &p2, &sp).unwrap().tau;
        gauss_err = gauss_err.max((t - sigma).abs());
    }
    ok &= gauss_err < 1e-9;
    let ln2 = std::f64::consts::LN_2;
    let rad = tau_norm(&CgfModel::Rademacher, &p2, &sp).unwrap().tau;
    let rad_oracle = grid_sup(|l| if l < 20.0 { (2.0 * (0.5 * l).sinh().powi(2)).ln_1p() } else { l - ln2 + (-2.0 * l).exp().ln_1p() });
    let uni = tau_norm(&CgfModel::centered_uniform(1.0).unwrap(), &p2, &sp).unwrap().tau;
    let uni_oracle = grid_sup(|l| if l < 20.0 { (l.sinh() / l).ln() } else { l - ln2 - l.ln() });
    let target = 1.0 / 3f64.sqrt();
    ok &= (rad - 1.0).abs() <= 1e-3 && (rad_oracle - 1.0).abs() <= 1e-3;
    ok &= (uni - target).abs() <= 1e-3 && (uni_oracle - target).abs() <= 1e-3;
    outcome(
        ok,
        format!(
            "gaussian max err {gauss_err:.1e}; rademacher {rad:.6} (grid {rad_oracle:.6}); uniform {uni:.6} (grid {uni_oracle:.6}, 1/√3 = {target:.6})"
        ),
    )
}

fn specialization_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let ps = [1.5, 2.0, 3.0, 4.0, 6.0];
    let cs = [0.5, 1.0, 2.0, 4.0, 8.0];
    let alphas = [0.25, 0.5, 0.75, 0.9, 1.0];
    for (i, &p) in ps.iter().enumerate() {
        for (j, &c) in cs.iter().enumerate() {
            for (k, &alpha) in alphas.iter().enumerate() {
                if points == 100 {
                    break;
                }
                let pidx = pi(p);
                let params = SllnBoundParams::new(c, alpha, pidx).unwrap();
                let eps = [0.2, 0.5, 1.0, 2.0][(i + j + k) % 4];
                // smallest valid n, then a few decades beyond, kept away from underflow
                let n0 = params.validity_threshold(eps).floor() as u64 + 1;
                let n = n0 * [1, 2, 5, 10][(i * 3 + j + k) % 4];
                let q = TailQuery::new(eps, n, Normalization::MeanScale).unwrap();
                let lhs = partial_sum_tail_bound(&params, &q).unwrap();
                let nf = n as f64;
                let rhs = tail_bound(&pidx, c * nf.powf(1.0 - alpha), nf * eps).unwrap();
                if !lhs.valid || rhs < 1e-290 {
                    continue;
                }
                worst = worst.max(((lhs.probability - rhs) / rhs).abs());
                points += 1;
            }
        }
    }
    outcome(points == 100 && worst <= 1e-12, format!("{points} valid points, max relative difference {worst:.2e}"))
}

fn series_dominance() -> Outcome {
    let start = Instant::now();
    let mut sets = vec![(2.0, 1.0, 0.5, 1.0), (4.0, 4.0, 0.8, 0.5)];
    for p in [1.5, 2.0, 3.0] {
        for (c, alpha, eps) in [(1.0, 0.5, 0.5), (2.0, 0.75, 1.0), (0.5, 0.3, 0.2), (1.0, 1.0, 0.1), (3.0, 0.6, 2.0), (1.0, 0.4, 1.0)] {
            sets.push((p, c, alpha, eps));
        }
    }
    sets.truncate(20);
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    let mut reference = None;
    for &(p, c, alpha, eps) in &sets {
        let params = SllnBoundParams::new(c, alpha, pi(p)).unwrap();
        let report = series_sum_bound(&params, eps).unwrap();
        let brute = (1..=1_000_000u64)
            .map(|n| partial_sum_tail_bound(&params, &TailQuery::new(eps, n, Normalization::MeanScale).unwrap()).unwrap().probability)
            .collect::<KahanSum>()
            .value();
        ok &= report.finite && report.upper_bound >= brute;
        tightest = tightest.min(report.upper_bound / brute);
        if (p, c, alpha, eps) == (2.0, 1.0, 0.5, 1.0) {
            // n = 1 is below the validity threshold and counts as 1.
            let tail = brute - 1.0;
            let closed = 2.0 * (-1.0f64).exp() / (1.0 - (-0.5f64).exp());
            ok &= (tail - closed).abs() < 1e-12 && (tail - 1.8699).abs() < 5e-5;
            reference = Some((tail, report.upper_bound));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30) && sets.len() == 20;
    let (tail, ub) = reference.unwrap_or((f64::NAN, f64::NAN));
    outcome(
        ok,
        format!(
            "20 sets, min bound/brute = {tightest:.6}; reference tail Σ_(n≥2) 2e^(−n/2) = {tail:.6}, bound {ub:.6}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Criterion-6 style check on a distribution with `c = 1, α = 1/2`.
fn bound_dominance(dist: Distribution) -> Outcome {
    let start = Instant::now();
    let params = SllnBoundParams::new(1.0, 0.5, pi(2.0)).unwrap();
    let spec = SequenceSpec::new(dist, 10_000, 0).unwrap();
    let n_grid = [100, 1_000, 10_000];
    let eps_grid = [0.1, 0.3, 0.5];
    let report = convergence_report(&spec, 1.5, &n_grid, &eps_grid, 10_000, 600_000).unwrap();
    let mut checked = 0;
    let mut ok = true;
    let mut margin = f64::INFINITY;
    for cp in &report.checkpoints {
        for row in cp.exceedances.iter().filter(|r| r.normalization == Normalization::MeanScale) {
            let bound = partial_sum_tail_bound(&params, &TailQuery::new(row.epsilon, cp.n, Normalization::MeanScale).unwrap()).unwrap();
            if !bound.valid {
                continue;
            }
            checked += 1;
            let slack = bound.probability + 3.0 * row.std_error - row.frequency;
            margin = margin.min(slack);
            ok &= slack >= 0.0;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok && checked > 0 && elapsed < Duration::from_secs(120),
        format!("{checked} valid (n, ε) points, min slack {margin:.3e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

const CHECKPOINTS: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];
const SEEDS: usize = 100;
const REPS_PER_SEED: usize = 10;

/// `S_n` at the checkpoints for 100 seeds × 10 replications.
fn long_runs(dist: &Distribution, seed_base: u64) -> Vec<Vec<f64>> {
    replicate_sums(dist, &CHECKPOINTS, (SEEDS * REPS_PER_SEED) as u64, seed_base)
}

fn rademacher_runs() -> &'static Vec<Vec<f64>> {
    static RUNS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    RUNS.get_or_init(|| long_runs(&Distribution::Rademacher, 700_000))
}

/// Per seed: mean over its replications of `|S_n|·n^{-1/s}` at each checkpoint.
fn seed_means(runs: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    runs.chunks(REPS_PER_SEED)
        .map(|block| {
            (0..CHECKPOINTS.len())
                .map(|j| {
                    let scale = (CHECKPOINTS[j] as f64).powf(-1.0 / s);
                    block.iter().map(|r| r[j].abs() * scale).sum::<f64>() / block.len() as f64
                })
                .collect()
        })
        .collect()
}

fn slln_convergence(runs: &[Vec<f64>], elapsed: Duration) -> Outcome {
    let means = seed_means(runs, 1.0);
    let monotone = means.iter().filter(|m| m.windows(2).all(|w| w[1] < w[0])).count();
    let last: Vec<f64> = means.iter().map(|m| m[CHECKPOINTS.len() - 1]).collect();
    let worst_last = last.iter().copied().fold(0.0, f64::max);
    outcome(
        monotone >= 95 && worst_last < 0.005,
        format!(
            "{monotone}/100 seeds decreasing over 1e3..1e6; max mean |S_n|/n at 1e6 = {worst_last:.2e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn mz_rate() -> Outcome {
    let s = 1.5;
    let runs = rademacher_runs();
    let means = seed_means(runs, s);
    let worst = means.iter().map(|m| m[CHECKPOINTS.len() - 1]).fold(0.0, f64::max);
    let params = MzParams::new(1.0, s, pi(2.0)).unwrap();
    let reps = runs.len() as f64;
    let mut checked = 0;
    let mut violations = 0;
    for (j, &n) in CHECKPOINTS.iter().enumerate() {
        for eps in [0.1, 0.3, 0.5] {
            let bound = mz_tail_bound(&params, &TailQuery::new(eps, n, Normalization::MzScale { s }).unwrap()).unwrap();
            if !bound.valid {
                continue;
            }
            let threshold = (n as f64).powf(1.0 / s) * eps;
            let freq = runs.iter().filter(|r| r[j].abs() >= threshold).count() as f64 / reps;
            let se = (freq * (1.0 - freq) / reps).sqrt();
            checked += 1;
            violations += usize::from(freq > bound.probability + 3.0 * se);
        }
    }
    outcome(
        worst < 0.3 && violations == 0 && checked > 0,
        format!("max per-seed mean |n^(-1/s) S_n| at 1e6 = {worst:.4}; {violations} violations in {checked} valid (n, ε) points"),
    )
}

fn negative_control() -> Outcome {
    let dist = Distribution::IdenticalCopies { base: Box::new(Distribution::Rademacher) };
    let reps = 200;
    let runs = replicate_sums(&dist, &[1_000, 1_000_000], reps, 800_000);
    let diffs: Vec<f64> = runs.iter().map(|r| r[1].abs() / 1e6 - r[0].abs() / 1e3).collect();
    let mean_diff = diffs.iter().sum::<f64>() / reps as f64;
    let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    let level = runs.iter().map(|r| r[1].abs() / 1e6).sum::<f64>() / reps as f64;
    // τ(S_n) = n·τ(ξ) for identical copies.
    let table: Vec<(f64, f64)> = (0..7).map(|k| 10f64.powi(k)).map(|n| (n, n)).collect();
    let fit = slln_condition_fit(&table).unwrap();
    outcome(
        mean_diff.abs() <= 2.0 * se + 1e-15 && level > 0.5 && !fit.hypothesis_satisfied,
        format!(
            "mean |S_n|/n at 1e6 = {level:.3}, change from 1e3 = {mean_diff:.2e} (se {se:.1e}); fitted α = {:.2e}, hypothesis {}",
            fit.alpha,
            if fit.hypothesis_satisfied { "holds" } else { "fails" }
        ),
    )
}

fn martingale() -> Outcome {
    let dist = Distribution::BoundedMartingaleDifference { d: 1.0, driver: DriverRule::Damped };
    let dominance = bound_dominance(dist.clone());
    let start = Instant::now();
    let runs = long_runs(&dist, 900_000);
    let convergence = slln_convergence(&runs, start.elapsed());
    outcome(
        dominance.passed && convergence.passed,
        format!("dominance: {}; convergence: {}", dominance.detail, convergence.detail),
    )
}

fn main() {
    type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);
    let criteria: Vec<Criterion> = vec![
        ("conjugate identity", Box::new(conjugate_identity)),
        ("biconjugation", Box::new(biconjugation)),
        ("exact norms", Box::new(exact_norms)),
        ("partial-sum bound specializes the single-variable bound", Box::new(specialization_identity)),
        ("series bound dominates brute-force sums", Box::new(series_dominance)),
        ("Monte-Carlo bound dominance (Rademacher)", Box::new(|| bound_dominance(Distribution::Rademacher))),
        (
            "SLLN convergence (Rademacher)",
            Box::new(|| {
                let start = Instant::now();
                let runs = rademacher_runs();
                slln_convergence(runs, start.elapsed())
            }),
        ),
        ("Marcinkiewicz-Zygmund rate (Rademacher, s = 1.5)", Box::new(mz_rate)),
        ("negative control (identical copies)", Box::new(negative_control)),
        ("bounded martingale differences", Box::new(martingale)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += usize::from(!o.passed);
        println!("[{}] criterion {:>2}: {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
