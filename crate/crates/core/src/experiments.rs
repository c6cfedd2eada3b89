//! Simulation study harness and z-score analysis.

use std::fmt;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::mcmc::{run_chain_with, PosteriorSummary, RunConfig};
use crate::prior::{PriorSpec, TauPrior};
use crate::random::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// Point masses at `c`, `-c/2` and 0.
    I,
    /// Unit-variance normals around `c` and `-c/2`, point mass at 0.
    II,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioKind::I => write!(f, "I"),
            ScenarioKind::II => write!(f, "II"),
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" => Ok(ScenarioKind::I),
            "II" | "ii" | "2" => Ok(ScenarioKind::II),
            _ => Err(invalid(format!("unknown scenario '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub omega: f64,
    pub c: f64,
    pub n: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(invalid(format!("omega must lie in [0, 1], got {}", self.omega)));
        }
        if self.n < 1 {
            return Err(invalid("n must be at least 1"));
        }
        if !self.c.is_finite() {
            return Err(invalid("c must be finite"));
        }
        Ok(())
    }
}

/// Draws `theta` from the scenario's three-component mixture and
/// `y = theta + N(0, 1)` noise.
pub fn gen_scenario(s: &Scenario, rng: &mut RngStream) -> (Vec<f64>, Vec<f64>) {
    let mut theta = Vec::with_capacity(s.n);
    let mut y = Vec::with_capacity(s.n);
    for _ in 0..s.n {
        let v = rng.uniform();
        let centre = if v < s.omega / 2.0 {
            Some(s.c)
        } else if v < s.omega {
            Some(-s.c / 2.0)
        } else {
            None
        };
        let th = match (centre, s.kind) {
            (None, _) => 0.0,
            (Some(m), ScenarioKind::I) => m,
            (Some(m), ScenarioKind::II) => m + rng.standard_normal(),
        };
        theta.push(th);
        y.push(th + rng.standard_normal());
    }
    (theta, y)
}

pub fn sse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            estimate.len(),
            truth.len()
        )));
    }
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum())
}

/// A named prior configuration used as one column of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub spec: PriorSpec,
}

impl Method {
    /// The recommended settings for `n` observations: `a = 1/n`, `b = 0`,
    /// `gamma = 1`, `sqrt(tau)` half-Cauchy with scale `1/n`.
    pub fn las(n: usize) -> Self {
        Method { name: "las".into(), spec: PriorSpec::las(1.0 / n as f64, 1.0).with_tau_prior(default_tau(n)) }
    }

    pub fn adaptive_las(n: usize) -> Self {
        Method { name: "alas".into(), spec: Self::las(n).spec.adaptive() }
    }

    pub fn ilas(n: usize, levels: u32) -> Self {
        Method {
            name: "ilas".into(),
            spec: PriorSpec::ilas(1.0 / n as f64, 1.0, levels).with_tau_prior(default_tau(n)),
        }
    }

    pub fn horseshoe(n: usize) -> Self {
        Method { name: "hs".into(), spec: PriorSpec::horseshoe().with_tau_prior(default_tau(n)) }
    }

    /// Parses `las`, `alas`, `ilas`, `ilas<L>` or `hs`.
    pub fn parse(name: &str, n: usize) -> Result<Self> {
        match name {
            "las" => Ok(Self::las(n)),
            "alas" => Ok(Self::adaptive_las(n)),
            "ilas" => Ok(Self::ilas(n, 3)),
            "hs" => Ok(Self::horseshoe(n)),
            other => match other.strip_prefix("ilas").map(str::parse::<u32>) {
                Some(Ok(levels)) => {
                    let mut m = Self::ilas(n, levels);
                    m.name = other.to_string();
                    Ok(m)
                }
                _ => Err(invalid(format!("unknown method '{name}'"))),
            },
        }
    }
}

pub fn default_tau(n: usize) -> TauPrior {
    TauPrior::HalfCauchyOnRoot { scale: 1.0 / n as f64 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_kind: ScenarioKind,
    pub omega: f64,
    pub c: f64,
    pub method: String,
    pub mean_loss: f64,
    pub se: f64,
    pub reps: usize,
    /// Replications whose chain failed and were left out of the mean.
    pub failures: usize,
    /// Per-replication losses in replication order; `None` marks a failure.
    #[serde(skip)]
    pub losses: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn row(&self, kind: ScenarioKind, omega: f64, c: f64, method: &str) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.scenario_kind == kind && r.omega == omega && r.c == c && r.method == method)
    }

    /// Mean and standard error of the paired per-replication difference
    /// `loss(first) - loss(second)`, over replications where both succeeded.
    pub fn paired_difference(
        &self,
        kind: ScenarioKind,
        omega: f64,
        c: f64,
        first: &str,
        second: &str,
    ) -> Option<(f64, f64)> {
        let a = self.row(kind, omega, c, first)?;
        let b = self.row(kind, omega, c, second)?;
        let d: Vec<f64> = a
            .losses
            .iter()
            .zip(&b.losses)
            .filter_map(|(x, y)| Some((*x)? - (*y)?))
            .collect();
        if d.len() < 2 {
            return None;
        }
        let k = d.len() as f64;
        let mean = d.iter().sum::<f64>() / k;
        let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
        Some((mean, (var / k).sqrt()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario_kind", "omega", "c", "method", "mean_loss", "se", "reps"])?;
        for r in &self.rows {
            out.write_record([
                r.scenario_kind.to_string(),
                fmt_f64(r.omega),
                fmt_f64(r.c),
                r.method.clone(),
                fmt_f64(r.mean_loss),
                fmt_f64(r.se),
                r.reps.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Formats with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// Stream for the data of replication `r` in scenario `s`.
pub fn data_stream(master_seed: u64, r: u64, s: usize) -> RngStream {
    RngStream::new(master_seed, r).substream(s as u64)
}

/// Stream for the chain of method `method` on replication `r` in scenario `s`.
/// Keyed by the method name, so a method's draws do not depend on which
/// other methods run alongside it.
pub fn chain_stream(master_seed: u64, r: u64, s: usize, method: &str) -> RngStream {
    RngStream::new(master_seed, r).substream((1 << 40) | ((s as u64) << 20) | method_tag(method))
}

/// 20-bit FNV-1a hash of a method name.
pub fn method_tag(name: &str) -> u64 {
    let h = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3));
    (h ^ (h >> 20) ^ (h >> 40)) & 0xf_ffff
}

/// Runs every method on every replication of every scenario. Replications
/// run in parallel on the current rayon pool; results are aggregated in
/// replication order, so the table does not depend on scheduling.
pub fn run_simulation(grid: &[Scenario], methods: &[Method], cfg: &RunConfig, reps: usize) -> Result<ResultTable> {
    if reps < 1 {
        return Err(invalid("reps must be at least 1"));
    }
    cfg.validate()?;
    for s in grid {
        s.validate()?;
    }
    for m in methods {
        m.spec.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|s| (0..reps).map(move |r| (s, r))).collect();
    let losses: Vec<Vec<Option<f64>>> = jobs
        .par_iter()
        .map(|&(si, r)| {
            let mut rng = data_stream(cfg.master_seed, r as u64, si);
            let (theta, y) = gen_scenario(&grid[si], &mut rng);
            methods
                .iter()
                .map(|m| {
                    let mut chain_rng = chain_stream(cfg.master_seed, r as u64, si, &m.name);
                    run_chain_with(&y, &m.spec, cfg, &mut chain_rng)
                        .ok()
                        .and_then(|(summary, _)| sse(&summary.mean, &theta).ok())
                })
                .collect()
        })
        .collect();

    let mut table = ResultTable::default();
    for (si, s) in grid.iter().enumerate() {
        for (mi, m) in methods.iter().enumerate() {
            let cell: Vec<Option<f64>> = (0..reps).map(|r| losses[si * reps + r][mi]).collect();
            let ok: Vec<f64> = cell.iter().flatten().copied().collect();
            let k = ok.len() as f64;
            let mean = ok.iter().sum::<f64>() / k;
            let var = if ok.len() > 1 {
                ok.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            table.rows.push(ResultRow {
                scenario_kind: s.kind,
                omega: s.omega,
                c: s.c,
                method: m.name.clone(),
                mean_loss: mean,
                se: (var / k).sqrt(),
                reps: ok.len(),
                failures: cell.len() - ok.len(),
                losses: cell,
            });
        }
    }
    Ok(table)
}

/// Posterior summaries of every coordinate under each method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZscoreTable {
    pub z: Vec<f64>,
    pub methods: Vec<String>,
    pub summaries: Vec<PosteriorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneRow {
    /// One-based position in the input.
    pub index: usize,
    pub z: f64,
    pub mean: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
}

impl ZscoreTable {
    /// Rows ordered by decreasing `|z|`; ties keep input order.
    pub fn ranked(&self) -> Vec<GeneRow> {
        let mut order: Vec<usize> = (0..self.z.len()).collect();
        order.sort_by(|&i, &j| self.z[j].abs().total_cmp(&self.z[i].abs()).then(i.cmp(&j)));
        order
            .into_iter()
            .map(|i| GeneRow {
                index: i + 1,
                z: self.z[i],
                mean: self.summaries.iter().map(|s| s.mean[i]).collect(),
                ci_lower: self.summaries.iter().map(|s| s.ci_lower[i]).collect(),
                ci_upper: self.summaries.iter().map(|s| s.ci_upper[i]).collect(),
            })
            .collect()
    }
}

/// Fits every method to the z-scores, one chain per method on a sub-stream
/// of `cfg.master_seed` keyed by the method name.
pub fn analyze_zscores(z: &[f64], methods: &[Method], cfg: &RunConfig) -> Result<ZscoreTable> {
    if z.is_empty() {
        return Err(Error::InvalidInput("no z-scores".into()));
    }
    if let Some(bad) = z.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("z-score {} is not finite", bad + 1)));
    }
    let summaries = methods
        .par_iter()
        .map(|m| {
            let mut rng = RngStream::new(cfg.master_seed, 0).substream(method_tag(&m.name));
            run_chain_with(z, &m.spec, cfg, &mut rng).map(|(s, _)| s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZscoreTable {
        z: z.to_vec(),
        methods: methods.iter().map(|m| m.name.clone()).collect(),
        summaries,
    })
}

/// `Phi^{-1}(F_df(t))`, evaluated on the smaller tail for accuracy.
pub fn t_to_z(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) {
        return Err(invalid("degrees of freedom must be positive"));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput("t-statistic must be finite".into()));
    }
    let student = StudentsT::new(0.0, 1.0, df).map_err(|e| invalid(e.to_string()))?;
    let normal = Normal::standard();
    let lower = student.cdf(-t.abs());
    let z = normal.inverse_cdf(lower);
    Ok(if t > 0.0 { -z } else { z })
}

/// Reads one numeric column: either plain text with one value per line, or
/// CSV whose header names `column`.
pub fn read_column<R: Read>(reader: R, column: &str) -> Result<Vec<f64>> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty());
    let Some(first) = first else {
        return Err(Error::InvalidInput("empty input".into()));
    };
    let parse = |s: &str, line: usize| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("line {line}: cannot parse '{}'", s.trim())))
    };
    if first.parse::<f64>().is_ok() {
        return text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| parse(l, i + 1))
            .collect();
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::InvalidInput(format!("no column named '{column}'")))?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let field = rec
                .get(idx)
                .ok_or_else(|| Error::InvalidInput(format!("row {} has no '{column}' field", i + 2)))?;
            parse(field, i + 2)
        })
        .collect()
}

pub fn read_column_file(path: &Path, column: &str) -> Result<Vec<f64>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_column(f, column)
}

/// Reads z-scores from a file (see [`read_column`]).
pub fn read_zscores(path: &Path) -> Result<Vec<f64>> {
    read_column_file(path, "z")
}
