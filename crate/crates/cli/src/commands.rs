use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use phisub::norm::NormEstimate;
use phisub::simulator::{convergence_report, SequenceSpec, SimulationReport};
use phisub::{
    conjugate_index, legendre_transform, mz_tail_bound, partial_sum_tail_bound, read_samples, series_sum_bound,
    slln_condition_fit, tail_bound, tau_norm, CgfModel, Distribution, Error, MzParams, NFunctionSpec, Normalization,
    PIndex, Result, SllnBoundParams, SolverParams, TailQuery,
};

use crate::output::{out_format, write_table, Cell, OutFormat, Table};
use crate::{
    Cli, ConjugateArgs, ExperimentConfig, ModelKind, NormArgs, SimulateArgs, SllnArgs, TailArgs, TailKind, EXIT_OK,
    EXIT_VIOLATION,
};

pub(crate) fn execute<W: Write>(cli: &Cli, stdout: &mut W) -> Result<i32> {
    if let Some(path) = &cli.out {
        out_format(path)?;
    }
    let precision = cli.precision as usize;
    let out = cli.out.as_deref();
    match &cli.command {
        ExperimentConfig::Conjugate(a) => emit(conjugate(a)?, precision, out, stdout),
        ExperimentConfig::Norm(a) => emit(norm(a)?, precision, out, stdout),
        ExperimentConfig::Tailbound(a) => emit(tailbound(a)?, precision, out, stdout),
        ExperimentConfig::SllnCheck(a) => emit(slln_check(a)?, precision, out, stdout),
        ExperimentConfig::Simulate(a) => simulate(a, precision, out, stdout),
    }
}

fn emit<W: Write>(table: Table, precision: usize, out: Option<&Path>, stdout: &mut W) -> Result<i32> {
    write!(stdout, "{}", table.render(precision))?;
    if let Some(path) = out {
        write_table(&table, path)?;
    }
    Ok(EXIT_OK)
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Config(format!("grid needs finite min <= max, got [{lo}, {hi}]")));
    }
    match points {
        0 => Err(Error::Config("grid needs at least one point".into())),
        1 => Ok(vec![lo]),
        n => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
    }
}

fn conjugate(a: &ConjugateArgs) -> Result<Table> {
    let p = PIndex::new(a.p)?;
    let ys = match a.y {
        Some(y) if y.is_finite() => vec![y],
        Some(y) => return Err(Error::Config(format!("y must be finite, got {y}"))),
        None => grid(a.y_min, a.y_max, a.points)?,
    };
    let q = p.q().map(|_| conjugate_index(&p)).transpose()?;
    let spec = NFunctionSpec::PhiP(p);
    let solver = SolverParams::default();
    let mut table = Table::new(&["y", "phi_p", "phi_q", "legendre", "argmax"]);
    for y in ys {
        let analytic = q.map(|q| Cell::Num(q.phi(y))).unwrap_or_else(|| "-".into());
        let (numeric, argmax) = match legendre_transform(&spec, y, &solver) {
            Ok(r) => (Cell::Num(r.value), r.argmax.map(Cell::Num).unwrap_or_else(|| "-".into())),
            // The supremum is +∞ (φ_1 beyond |y| = 1).
            Err(Error::Divergence { .. }) => (Cell::Num(f64::INFINITY), "-".into()),
            Err(e) => return Err(e),
        };
        table.push(vec![y.into(), p.phi(y).into(), analytic, numeric, argmax]);
    }
    Ok(table)
}

fn norm(a: &NormArgs) -> Result<Table> {
    let p = PIndex::new(a.p)?;
    let (label, model) = match a.model {
        ModelKind::Gaussian => (format!("gaussian(sigma={})", a.sigma), CgfModel::gaussian(a.sigma)?),
        ModelKind::Rademacher => ("rademacher".to_string(), CgfModel::Rademacher),
        ModelKind::Uniform => (format!("uniform(h={})", a.h), CgfModel::centered_uniform(a.h)?),
        ModelKind::Bounded => (format!("bounded(d={})", a.d), CgfModel::bounded_centered(a.d)?),
        ModelKind::Absgauss => {
            let m = match a.a {
                Some(exp) => CgfModel::abs_gaussian_power(exp)?,
                None => CgfModel::abs_gaussian_power_for(&p)?,
            };
            let CgfModel::AbsGaussianPower { exponent, .. } = m else { unreachable!() };
            (format!("absgauss(a={exponent})"), m)
        }
        ModelKind::Empirical => {
            let path = a.samples.as_ref().ok_or_else(|| Error::Config("--model empirical needs --samples FILE".into()))?;
            let samples = read_samples(path)?;
            (format!("empirical(n={})", samples.len()), CgfModel::empirical(&samples)?)
        }
    };
    let est: NormEstimate = tau_norm(&model, &p, &SolverParams::default())?;
    let mut table = Table::new(&["model", "p", "tau", "method", "sup_lambda", "window_limited"]);
    table.push(vec![
        label.into(),
        a.p.into(),
        est.tau.into(),
        format!("{:?}", est.method).into(),
        est.sup_location.map(Cell::Num).unwrap_or_else(|| "-".into()),
        est.diagnostics.window_limited.into(),
    ]);
    Ok(table)
}

fn tailbound(a: &TailArgs) -> Result<Table> {
    let p = PIndex::new(a.p)?;
    if a.eps.is_empty() {
        return Err(Error::Config("--eps needs at least one value".into()));
    }
    let mut table = Table::new(&["kind", "n", "epsilon", "bound", "valid"]);
    match a.kind {
        TailKind::Single => {
            p.require_q()?;
            for &eps in &a.eps {
                let b = tail_bound(&p, a.c, eps)?;
                table.push(vec!["single".into(), "-".into(), eps.into(), b.into(), true.into()]);
            }
        }
        TailKind::PartialSum => {
            let params = SllnBoundParams::new(a.c, a.alpha, p)?;
            let queries = queries(a, Normalization::MeanScale)?;
            for q in queries {
                let b = partial_sum_tail_bound(&params, &q)?;
                table.push(vec!["partial-sum".into(), q.n.into(), q.epsilon.into(), b.probability.into(), b.valid.into()]);
            }
        }
        TailKind::Mz => {
            let params = MzParams::new(a.b, a.s, p)?;
            let queries = queries(a, Normalization::MzScale { s: a.s })?;
            for q in queries {
                let b = mz_tail_bound(&params, &q)?;
                table.push(vec!["mz".into(), q.n.into(), q.epsilon.into(), b.probability.into(), b.valid.into()]);
            }
        }
    }
    Ok(table)
}

fn queries(a: &TailArgs, normalization: Normalization) -> Result<Vec<TailQuery>> {
    if a.n.is_empty() {
        return Err(Error::Config("--n needs at least one value".into()));
    }
    let mut out = Vec::with_capacity(a.n.len() * a.eps.len());
    for &n in &a.n {
        for &eps in &a.eps {
            out.push(TailQuery::new(eps, n, normalization)?);
        }
    }
    Ok(out)
}

/// Reads `n, τ` rows separated by commas or whitespace; `#` starts a comment
/// and a non-numeric first row is taken as a header.
fn parse_norm_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed.as_deref() {
            Some([n, t]) => pairs.push((*n, *t)),
            None if pairs.is_empty() => continue,
            _ => return Err(Error::Config(format!("norm table line {}: expected `n, tau`, got {line:?}", i + 1))),
        }
    }
    Ok(pairs)
}

fn parse_pairs(items: &[String]) -> Result<Vec<(f64, f64)>> {
    items
        .iter()
        .map(|item| {
            let (n, t) = item.split_once(':').ok_or_else(|| Error::Config(format!("expected n:tau, got {item:?}")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse {s:?} as a number")));
            Ok((num(n)?, num(t)?))
        })
        .collect()
}

fn slln_check(a: &SllnArgs) -> Result<Table> {
    let p = PIndex::new(a.p)?;
    let pairs = match &a.table {
        Some(path) => parse_norm_table(&fs::read_to_string(path)?)?,
        None if !a.pairs.is_empty() => parse_pairs(&a.pairs)?,
        None => return Err(Error::Config("slln-check needs --table FILE or --pairs".into())),
    };
    if a.eps.is_empty() {
        return Err(Error::Config("--eps needs at least one value".into()));
    }
    let fit = slln_condition_fit(&pairs)?;
    let mut table = Table::new(&["epsilon", "c", "alpha", "residual", "hypothesis", "series_finite", "series_bound", "n0"]);
    for &eps in &a.eps {
        let (finite, bound, n0) = if fit.hypothesis_satisfied {
            let params = SllnBoundParams::new(fit.c, fit.alpha, p)?;
            let r = series_sum_bound(&params, eps)?;
            (r.finite, Cell::Num(r.upper_bound), Cell::Int(r.n0))
        } else {
            (false, Cell::Num(f64::INFINITY), "-".into())
        };
        table.push(vec![
            eps.into(),
            fit.c.into(),
            fit.alpha.into(),
            fit.residual.into(),
            fit.hypothesis_satisfied.into(),
            finite.into(),
            bound,
            n0,
        ]);
    }
    Ok(table)
}

fn simulate<W: Write>(a: &SimulateArgs, precision: usize, out: Option<&Path>, stdout: &mut W) -> Result<i32> {
    let dist: Distribution = a.dist.parse()?;
    let n_max = a.n_grid.iter().copied().max().ok_or_else(|| Error::Config("--n-grid needs at least one value".into()))?;
    let spec = SequenceSpec::new(dist, n_max, a.seed)?;
    let report = convergence_report(&spec, a.s, &a.n_grid, &a.eps, a.reps, a.seed)?;

    let mut table = Table::new(&["n", "epsilon", "normalization", "frequency", "std_error", "bound", "valid", "violated"]);
    for cp in &report.checkpoints {
        for row in &cp.exceedances {
            let (bound, valid) = match row.bound {
                Some(b) => (Cell::Num(b.probability), Cell::Bool(b.valid)),
                None => ("-".into(), "-".into()),
            };
            table.push(vec![
                cp.n.into(),
                row.epsilon.into(),
                row.normalization.label().into(),
                row.frequency.into(),
                row.std_error.into(),
                bound,
                valid,
                row.violated.into(),
            ]);
        }
    }
    write!(stdout, "{}", table.render(precision))?;
    let mut means = Table::new(&["n", "mean_abs_mean_scale", "std_error", "mean_abs_mz_scale"]);
    for cp in &report.checkpoints {
        means.push(vec![cp.n.into(), cp.mean_abs_mean_scale.into(), cp.std_error_mean_scale.into(), cp.mean_abs_mz_scale.into()]);
    }
    writeln!(stdout)?;
    write!(stdout, "{}", means.render(precision))?;
    writeln!(
        stdout,
        "\ndistribution {}  replications {}  seed {}  violations {}  decreasing {}  non_convergence {}",
        report.distribution, report.replications, a.seed, report.violations, report.mean_scale_decreasing, report.non_convergence
    )?;

    if let Some(path) = out {
        let file = BufWriter::new(File::create(path)?);
        match out_format(path)? {
            OutFormat::Csv => report.write_csv(file)?,
            OutFormat::Json => {
                let mut file = file;
                writeln!(file, "{}", report.to_json()?)?;
                file.flush()?;
            }
        }
    }
    Ok(simulation_status(&report))
}

fn simulation_status(report: &SimulationReport) -> i32 {
    if report.violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_table_formats() {
        let t = parse_norm_table("n,tau\n1,1\n4 2\n# note\n16\t4\n").unwrap();
        assert_eq!(t, vec![(1.0, 1.0), (4.0, 2.0), (16.0, 4.0)]);
        assert!(parse_norm_table("1,1\nx,y\n").is_err());
        let p = parse_pairs(&["1:1".into(), "64:8".into()]).unwrap();
        assert_eq!(p, vec![(1.0, 1.0), (64.0, 8.0)]);
        assert!(parse_pairs(&["3".into()]).is_err());
    }

    #[test]
    fn violations_map_to_exit_3() {
        let spec = SequenceSpec::new(Distribution::Rademacher, 100, 1).unwrap();
        let mut report = convergence_report(&spec, 1.5, &[10, 100], &[0.5], 20, 1).unwrap();
        assert_eq!(simulation_status(&report), EXIT_OK);
        report.violations = 2;
        assert_eq!(simulation_status(&report), EXIT_VIOLATION);
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(-1.0, 1.0, 3).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(grid(1.0, -1.0, 3).is_err());
        assert!(grid(0.0, 1.0, 0).is_err());
    }
}
