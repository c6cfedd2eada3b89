use std::io::Write;
use std::path::Path;

use las_core::bounds::norm_const_bounds;
use las_core::experiments::{
    analyze_zscores, fmt_f64, read_column_file, run_simulation, t_to_z, Method, Scenario, ScenarioKind,
};
use las_core::mcmc::run_chain;
use las_core::oracle::theta_marginal_density;
use las_core::prior::{iter_log, kernel_kappa, norm_const_quadrature};
use serde::Serialize;

use crate::error::CliError;
use crate::output::Sink;
use crate::{AnalyzeArgs, DensityArgs, FitArgs, Format, GridVar, NormconstArgs, SimulateArgs, Spacing};

#[derive(Serialize)]
struct Point {
    x: f64,
    value: f64,
}

fn grid(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    if !(lo < hi) {
        return Err(CliError::Usage(format!("need lo < hi, got {lo} and {hi}")));
    }
    let (map, unmap): (fn(f64) -> f64, fn(f64) -> f64) = match spacing {
        Spacing::Linear => (|x| x, |s| s),
        Spacing::Log => {
            if lo <= 0.0 {
                return Err(CliError::Usage("log spacing needs lo > 0".into()));
            }
            (f64::ln, f64::exp)
        }
        Spacing::Logit => {
            if !(lo > 0.0 && hi < 1.0) {
                return Err(CliError::Usage("logit spacing needs 0 < lo < hi < 1".into()));
            }
            (|x| (x / (1.0 - x)).ln(), |s| 1.0 / (1.0 + (-s).exp()))
        }
    };
    let (s_lo, s_hi) = (map(lo), map(hi));
    let step = (s_hi - s_lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { hi } else if i == 0 { lo } else { unmap(s_lo + i as f64 * step) })
        .collect())
}

pub fn density(args: &DensityArgs, out: &Sink) -> Result<(), CliError> {
    let (lo, hi, spacing) = match args.var {
        // The b = 0 spike at kappa = 0 holds mass ~ 1/ln(1/lo), so the grid reaches far down.
        GridVar::Kappa => (1e-40, 1.0 - 1e-12, Spacing::Logit),
        GridVar::Theta => (-10.0, 10.0, Spacing::Linear),
        GridVar::Iterlog => (1.0, 1e6, Spacing::Log),
    };
    let xs = match args.x {
        Some(x) => vec![x],
        None => grid(args.lo.unwrap_or(lo), args.hi.unwrap_or(hi), args.points, args.spacing.unwrap_or(spacing))?,
    };
    let rows: Vec<Point> = match args.var {
        GridVar::Iterlog => xs
            .iter()
            .map(|&x| iter_log(args.prior.levels, x).map(|value| Point { x, value }))
            .collect::<las_core::Result<_>>()
            .map_err(CliError::from_setup)?,
        GridVar::Kappa => {
            let spec = args.prior.spec(None)?;
            let c = norm_const_quadrature(&spec).map_err(CliError::from_run)?;
            xs.iter()
                .map(|&x| kernel_kappa(x, &spec).map(|k| Point { x, value: k / c }))
                .collect::<las_core::Result<_>>()
                .map_err(CliError::from_setup)?
        }
        GridVar::Theta => {
            let spec = args.prior.spec(None)?;
            xs.iter()
                .map(|&x| theta_marginal_density(x, &spec).map(|value| Point { x, value }))
                .collect::<las_core::Result<_>>()
                .map_err(CliError::from_run)?
        }
    };
    match out.format {
        Format::Json => out.json(&rows),
        Format::Csv => out.csv(
            &[],
            &["x".into(), "value".into()],
            &rows.iter().map(|p| vec![fmt_f64(p.x), fmt_f64(p.value)]).collect::<Vec<_>>(),
        ),
    }
}

#[derive(Serialize)]
struct NormconstReport {
    gamma: f64,
    a: f64,
    k: f64,
    n: u64,
    lower: f64,
    upper: f64,
    quadrature: f64,
    contains: bool,
}

pub fn normconst(args: &NormconstArgs, out: &Sink) -> Result<(), CliError> {
    let b = norm_const_bounds(args.gamma, args.a, args.k).map_err(CliError::from_setup)?;
    let q = norm_const_quadrature(&las_core::PriorSpec::las(args.a, args.gamma)).map_err(CliError::from_run)?;
    let r = NormconstReport {
        gamma: args.gamma,
        a: args.a,
        k: b.k,
        n: b.n,
        lower: b.lower,
        upper: b.upper,
        quadrature: q,
        contains: b.contains(q),
    };
    match out.format {
        Format::Json => out.json(&r)?,
        Format::Csv => out.csv(
            &[],
            &["gamma", "a", "k", "n", "lower", "upper", "quadrature", "contains"].map(String::from),
            &[vec![
                fmt_f64(r.gamma),
                fmt_f64(r.a),
                fmt_f64(r.k),
                r.n.to_string(),
                fmt_f64(r.lower),
                fmt_f64(r.upper),
                fmt_f64(r.quadrature),
                r.contains.to_string(),
            ]],
        )?,
    }
    if r.contains {
        Ok(())
    } else {
        Err(CliError::Check(format!("quadrature value {q} lies outside [{}, {}]", r.lower, r.upper)))
    }
}

fn read_input(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    read_column_file(path, column).map_err(CliError::from_setup)
}

#[derive(Serialize)]
struct FitMetadata {
    seed: u64,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    draws: usize,
    variant: &'static str,
    a: f64,
    b: f64,
    gamma: f64,
    levels: u32,
    gamma_adaptive: bool,
    gamma_proposals: usize,
    gamma_accepted: usize,
    gamma_fallbacks: usize,
    tau_mean: f64,
    gamma_mean: f64,
}

#[derive(Serialize)]
struct Coordinate {
    index: usize,
    y: f64,
    mean: f64,
    sd: f64,
    ci_lower: f64,
    ci_upper: f64,
}

#[derive(Serialize)]
struct FitReport {
    metadata: FitMetadata,
    coordinates: Vec<Coordinate>,
}

pub fn fit(args: &FitArgs, out: &Sink) -> Result<(), CliError> {
    let y = read_input(&args.input, &args.column)?;
    let spec = args.prior.spec(Some(y.len()))?;
    let cfg = args.run.config()?;
    let s = run_chain(&y, &spec, &cfg).map_err(CliError::from_run)?;
    let report = FitReport {
        metadata: FitMetadata {
            seed: cfg.master_seed,
            iterations: cfg.iterations,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            draws: s.draws,
            variant: spec.variant.name(),
            a: spec.a,
            b: spec.b,
            gamma: spec.gamma,
            levels: spec.levels,
            gamma_adaptive: spec.gamma_adaptive,
            gamma_proposals: s.gamma_proposals,
            gamma_accepted: s.gamma_accepted,
            gamma_fallbacks: s.gamma_fallbacks,
            tau_mean: s.tau.mean,
            gamma_mean: s.gamma.mean,
        },
        coordinates: (0..y.len())
            .map(|i| Coordinate {
                index: i + 1,
                y: y[i],
                mean: s.mean[i],
                sd: s.sd[i],
                ci_lower: s.ci_lower[i],
                ci_upper: s.ci_upper[i],
            })
            .collect(),
    };
    match out.format {
        Format::Json => out.json(&report),
        Format::Csv => {
            let m = &report.metadata;
            let comments = [
                ("seed", m.seed.to_string()),
                ("iterations", m.iterations.to_string()),
                ("burn_in", m.burn_in.to_string()),
                ("thin", m.thin.to_string()),
                ("draws", m.draws.to_string()),
                ("variant", m.variant.to_string()),
                ("a", fmt_f64(m.a)),
                ("b", fmt_f64(m.b)),
                ("gamma", fmt_f64(m.gamma)),
                ("levels", m.levels.to_string()),
                ("gamma_adaptive", m.gamma_adaptive.to_string()),
                ("gamma_proposals", m.gamma_proposals.to_string()),
                ("gamma_accepted", m.gamma_accepted.to_string()),
                ("gamma_fallbacks", m.gamma_fallbacks.to_string()),
                ("tau_mean", fmt_f64(m.tau_mean)),
                ("gamma_mean", fmt_f64(m.gamma_mean)),
            ];
            let rows: Vec<Vec<String>> = report
                .coordinates
                .iter()
                .map(|c| {
                    vec![
                        c.index.to_string(),
                        fmt_f64(c.y),
                        fmt_f64(c.mean),
                        fmt_f64(c.sd),
                        fmt_f64(c.ci_lower),
                        fmt_f64(c.ci_upper),
                    ]
                })
                .collect();
            out.csv(&comments, &["index", "y", "mean", "sd", "ci_lower", "ci_upper"].map(String::from), &rows)
        }
    }
}

fn methods(names: &[String], n: usize) -> Result<Vec<Method>, CliError> {
    if names.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    names
        .iter()
        .map(|m| Method::parse(m.trim(), n).map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

pub fn simulate(args: &SimulateArgs, out: &Sink) -> Result<(), CliError> {
    let cfg = args.run.config()?;
    let mut grid = Vec::new();
    for kind in &args.scenario {
        let kind: ScenarioKind = kind.trim().parse().map_err(|e: las_core::Error| CliError::Usage(e.to_string()))?;
        for &omega in &args.omega {
            for &c in &args.c {
                let s = Scenario { kind, omega, c, n: args.n };
                s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                grid.push(s);
            }
        }
    }
    let methods = methods(&args.methods, args.n)?;
    if args.reps < 1 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let table = run_simulation(&grid, &methods, &cfg, args.reps).map_err(CliError::from_run)?;
    if let Some(r) = table.rows.iter().find(|r| r.reps == 0) {
        return Err(CliError::Convergence(format!(
            "every replication of {} in scenario {} (omega={}, c={}) failed",
            r.method, r.scenario_kind, r.omega, r.c
        )));
    }
    match out.format {
        Format::Json => {
            let mut w = out.writer()?;
            writeln!(w, "{}", table.to_json().map_err(CliError::from_run)?)?;
            w.flush()?;
            Ok(())
        }
        Format::Csv => {
            let w = out.writer()?;
            table.write_csv(w).map_err(CliError::from_run)
        }
    }
}

#[derive(Serialize)]
struct GeneOut {
    rank: usize,
    index: usize,
    z: f64,
    mean: Vec<f64>,
    ci_lower: Vec<f64>,
    ci_upper: Vec<f64>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    seed: u64,
    methods: Vec<String>,
    genes: Vec<GeneOut>,
}

pub fn analyze(args: &AnalyzeArgs, out: &Sink) -> Result<(), CliError> {
    let z = match (&args.input, &args.t_input) {
        (Some(p), _) => read_input(p, args.column.as_deref().unwrap_or("z"))?,
        (None, Some(p)) => {
            let df = args.df.ok_or_else(|| CliError::Usage("--t-input needs --df".into()))?;
            read_input(p, args.column.as_deref().unwrap_or("t"))?
                .into_iter()
                .map(|t| t_to_z(t, df))
                .collect::<las_core::Result<_>>()
                .map_err(CliError::from_setup)?
        }
        (None, None) => return Err(CliError::Usage("give --input or --t-input".into())),
    };
    let cfg = args.run.config()?;
    let methods = methods(&args.methods, z.len())?;
    let table = analyze_zscores(&z, &methods, &cfg).map_err(CliError::from_run)?;
    let genes: Vec<GeneOut> = table
        .ranked()
        .into_iter()
        .enumerate()
        .map(|(rank, g)| GeneOut {
            rank: rank + 1,
            index: g.index,
            z: g.z,
            mean: g.mean,
            ci_lower: g.ci_lower,
            ci_upper: g.ci_upper,
        })
        .collect();
    match out.format {
        Format::Json => out.json(&AnalyzeReport { seed: cfg.master_seed, methods: table.methods, genes }),
        Format::Csv => {
            let mut header: Vec<String> = ["rank", "index", "z"].map(String::from).to_vec();
            for m in &table.methods {
                header.extend([format!("{m}_mean"), format!("{m}_ci_lower"), format!("{m}_ci_upper")]);
            }
            let rows: Vec<Vec<String>> = genes
                .iter()
                .map(|g| {
                    let mut r = vec![g.rank.to_string(), g.index.to_string(), fmt_f64(g.z)];
                    for k in 0..g.mean.len() {
                        r.extend([fmt_f64(g.mean[k]), fmt_f64(g.ci_lower[k]), fmt_f64(g.ci_upper[k])]);
                    }
                    r
                })
                .collect();
            out.csv(&[("seed", cfg.master_seed.to_string())], &header, &rows)
        }
    }
}
