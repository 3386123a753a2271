//! Parameter sweeps over the clause-to-variable ratio, degree-6 polynomial
//! fits of the swept curves, and solver benchmarks.
//!
//! Every job draws from its own stream derived from the seed root (see
//! [`crate::rng`]), and results are aggregated in grid order, so output does
//! not depend on the number of worker threads.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{summarize, AnalysisError, GraphSummary, Phase};
use crate::builder::{build, BuildError, BuilderConfig};
use crate::cnf::{generate_random, Formula, GenerateError};
use crate::rng::{derive_seed, purpose};
use crate::solver::{
    compare_totals, solve, Algorithm, ChainParams, ClauseOrder, SolverError, SolverResult, Totals, Verdict,
};

/// Desk-scale instances per grid point.
pub const DESK_INSTANCES: usize = 30;
/// Desk-scale graphs per instance.
pub const DESK_GRAPHS: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("n={n}, alpha={alpha} gives {m} clauses; at least 2 are needed")]
    TooFewClauses { n: u32, alpha: f64, m: usize },
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("csv output: {0}")]
    Csv(String),
}

/// Number of clauses for ratio `alpha` over `n` variables, rounding halves to
/// even.
pub fn clauses_for(alpha: f64, n: u32) -> usize {
    (alpha * f64::from(n)).round_ties_even() as usize
}

fn validate_grid(n_values: &[u32], alphas: &[f64], k: usize) -> Result<(), ExperimentError> {
    if n_values.is_empty() || alphas.is_empty() {
        return Err(ExperimentError::Config("empty n or alpha grid".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(ExperimentError::Config("alpha values must be positive".into()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Config("alpha grid must be strictly ascending".into()));
    }
    for &n in n_values {
        if (n as usize) < k {
            return Err(ExperimentError::Config(format!("n={n} is smaller than k={k}")));
        }
        for &alpha in alphas {
            let m = clauses_for(alpha, n);
            if m < 2 {
                return Err(ExperimentError::TooFewClauses { n, alpha, m });
            }
        }
    }
    Ok(())
}

/// Evenly spaced grid from `start` to `stop` inclusive. The count is rounded
/// so that float error in `(stop - start) / step` cannot drop the endpoint.
pub fn alpha_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Vec::new();
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| start + i as f64 * step).collect()
}

/// Seed of the formula at one grid point of a sweep or benchmark.
pub fn instance_seed(root: u64, n: u32, alpha_index: usize, instance: usize) -> u64 {
    derive_seed(
        root,
        &[purpose::INSTANCE, u64::from(n), alpha_index as u64, instance as u64],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<u32>,
    pub alphas: Vec<f64>,
    pub k: usize,
    pub instances: usize,
    pub graphs: usize,
    /// Per-graph seeds are derived; the seed field is ignored.
    pub builder: BuilderConfig,
    pub seed_root: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.instances == 0 || self.graphs == 0 {
            return Err(ExperimentError::Config(
                "instances and graphs must be at least 1".into(),
            ));
        }
        self.builder.validate()?;
        validate_grid(&self.n_values, &self.alphas, self.k)
    }
}

/// Summary of one built graph, with its coordinates in the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub n: u32,
    pub alpha_index: usize,
    pub instance: usize,
    pub graph: usize,
    pub summary: GraphSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: u32,
    pub alpha: f64,
    pub mean_fraction_winner: f64,
    pub pct_full_bec: f64,
    pub pct_partial_bec: f64,
    pub pct_fgr: f64,
    /// Mean over graphs of the non-winner mean connectivity.
    pub nonwinner_mean: f64,
    /// Mean over graphs of the non-winner connectivity standard deviation.
    pub nonwinner_std: f64,
    pub samples: usize,
}

impl SweepRecord {
    /// Aggregates the samples of one grid point.
    pub fn from_samples(n: u32, alpha: f64, samples: &[GraphSample]) -> SweepRecord {
        let count = samples.len();
        let denom = count.max(1) as f64;
        let pct = |phase: Phase| 100.0 * samples.iter().filter(|s| s.summary.label == phase).count() as f64 / denom;
        let mean = |f: fn(&GraphSummary) -> f64| samples.iter().map(|s| f(&s.summary)).sum::<f64>() / denom;
        SweepRecord {
            n,
            alpha,
            mean_fraction_winner: mean(|s| s.fraction_winner),
            pct_full_bec: pct(Phase::FullBec),
            pct_partial_bec: pct(Phase::PartialBec),
            pct_fgr: pct(Phase::FitGetRich),
            nonwinner_mean: mean(|s| s.nonwinner_mean),
            nonwinner_std: mean(|s| s.nonwinner_std),
            samples: count,
        }
    }
}

/// Builds and summarizes every graph of the sweep, in grid order
/// (n, alpha, instance, graph).
pub fn sweep_samples(cfg: &SweepConfig) -> Result<Vec<GraphSample>, ExperimentError> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for alpha_index in 0..cfg.alphas.len() {
            for instance in 0..cfg.instances {
                jobs.push((n, alpha_index, instance));
            }
        }
    }
    let per_instance: Vec<Vec<GraphSample>> = jobs
        .par_iter()
        .map(|&(n, alpha_index, instance)| {
            let m = clauses_for(cfg.alphas[alpha_index], n);
            let formula = generate_random(instance_seed(cfg.seed_root, n, alpha_index, instance), cfg.k, n, m)?;
            (0..cfg.graphs)
                .map(|graph| {
                    let seed = derive_seed(
                        cfg.seed_root,
                        &[
                            purpose::GRAPH,
                            u64::from(n),
                            alpha_index as u64,
                            instance as u64,
                            graph as u64,
                        ],
                    );
                    let g = build(&formula, &cfg.builder.with_seed(seed))?;
                    Ok(GraphSample {
                        n,
                        alpha_index,
                        instance,
                        graph,
                        summary: summarize(&g)?,
                    })
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>, ExperimentError> {
    let samples = sweep_samples(cfg)?;
    Ok(aggregate(cfg, &samples))
}

/// One record per grid point from samples in grid order.
pub fn aggregate(cfg: &SweepConfig, samples: &[GraphSample]) -> Vec<SweepRecord> {
    let per_point = cfg.instances * cfg.graphs;
    let mut records = Vec::new();
    let mut chunks = samples.chunks(per_point);
    for &n in &cfg.n_values {
        for &alpha in &cfg.alphas {
            let chunk = chunks.next().unwrap_or(&[]);
            records.push(SweepRecord::from_samples(n, alpha, chunk));
        }
    }
    records
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, ExperimentError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| ExperimentError::Csv(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| ExperimentError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ExperimentError::Csv(e.to_string()))
}

pub fn records_to_csv(records: &[SweepRecord]) -> Result<String, ExperimentError> {
    to_csv(records)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    #[error("a degree-6 fit needs 7 distinct abscissae, got {0}")]
    TooFewPoints(usize),
    #[error("design matrix is numerically singular")]
    Singular,
}

/// Degree-6 polynomial `c0 + c1 x + ... + c6 x^6`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coefficients: [f64; 7],
    /// Sum of squared residuals over the fitted points.
    pub residual: f64,
}

impl PolyFit {
    pub fn from_coefficients(coefficients: [f64; 7]) -> PolyFit {
        PolyFit {
            coefficients,
            residual: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        (2..7)
            .rev()
            .fold(0.0, |acc, j| acc * x + (j * (j - 1)) as f64 * self.coefficients[j])
    }

    pub fn residual_of(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| (self.eval(x) - y).powi(2)).sum()
    }
}

/// Least-squares degree-6 fit.
///
/// The abscissae are mapped onto `[-1, 1]` and each column of the design
/// matrix is scaled to unit norm before the normal equations are solved by
/// Cholesky; the solution is then mapped back to powers of `x`.
pub fn polyfit6(points: &[(f64, f64)]) -> Result<PolyFit, FitError> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 7 {
        return Err(FitError::TooFewPoints(xs.len()));
    }
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let rows = points.len();
    let mut design = DMatrix::from_fn(rows, 7, |i, j| ((points[i].0 - center) / half).powi(j as i32));
    let mut scale = [0.0; 7];
    for (j, slot) in scale.iter_mut().enumerate() {
        let norm = design.column(j).norm();
        if norm == 0.0 {
            return Err(FitError::Singular);
        }
        *slot = norm;
        design.column_mut(j).unscale_mut(norm);
    }
    let y = DVector::from_iterator(rows, points.iter().map(|p| p.1));
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * y;
    let solution = gram.cholesky().ok_or(FitError::Singular)?.solve(&rhs);

    // coefficients in u = (x - center) / half
    let u_coeffs: Vec<f64> = (0..7).map(|j| solution[j] / scale[j]).collect();
    // expand sum_j a_j ((x - center)/half)^j into powers of x
    let mut coefficients = [0.0; 7];
    for (j, &a) in u_coeffs.iter().enumerate() {
        let factor = a / half.powi(j as i32);
        for (i, coeff) in coefficients.iter_mut().enumerate().take(j + 1) {
            *coeff += factor * binomial(j, i) * (-center).powi((j - i) as i32);
        }
    }
    let mut fit = PolyFit::from_coefficients(coefficients);
    fit.residual = fit.residual_of(points);
    Ok(fit)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn second_derivative(fit: &PolyFit, x: f64) -> f64 {
    fit.second_derivative(x)
}

/// Location of the largest second derivative on an even scan of `[lo, hi]`.
pub fn argmax_second_derivative(fit: &PolyFit, lo: f64, hi: f64, steps: usize) -> f64 {
    let steps = steps.max(1);
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .fold((lo, f64::NEG_INFINITY), |best, x| {
            let v = fit.second_derivative(x);
            if v > best.1 {
                (x, v)
            } else {
                best
            }
        })
        .0
}

/// Clause-to-variable ratio of the random 3-SAT satisfiability threshold.
pub const ALPHA_SAT_3: f64 = 4.256;

/// Default benchmark grid: 8 evenly spaced ratios from two below to one above
/// the satisfiability threshold. Only known for k = 3.
pub fn default_bench_grid(k: usize) -> Option<Vec<f64>> {
    (k == 3).then(|| (0..8).map(|i| ALPHA_SAT_3 - 2.0 + 3.0 * f64::from(i) / 7.0).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub k: usize,
    pub n_values: Vec<u32>,
    pub alphas: Vec<f64>,
    pub instances: usize,
    pub solvers: Vec<Algorithm>,
    pub p1: f64,
    pub p2: f64,
    pub budget: u64,
    /// Builds the graph behind the clause order; its seed is derived.
    pub builder: BuilderConfig,
    pub seed_root: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.instances == 0 {
            return Err(ExperimentError::Config("instances must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(ExperimentError::Config("no solvers selected".into()));
        }
        self.params().validate()?;
        self.builder.validate()?;
        validate_grid(&self.n_values, &self.alphas, self.k)
    }

    pub fn params(&self) -> ChainParams {
        ChainParams {
            p1: self.p1,
            p2: self.p2,
            budget: self.budget,
        }
    }
}

/// One solver run inside a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub n: u32,
    pub alpha: f64,
    pub instance: usize,
    pub solver: Algorithm,
    pub result: SolverResult,
}

/// Table row: totals of one solver over one (n, alpha) group, or over the
/// whole suite when `n` and `alpha` are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: Option<u32>,
    pub alpha: Option<f64>,
    pub solver: Algorithm,
    pub instances: usize,
    pub solved: usize,
    pub max_sat: f64,
    pub flips: u64,
}

/// Verdict of `solver` against the baseline on one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupVerdict {
    pub n: u32,
    pub alpha: f64,
    pub solver: Algorithm,
    pub baseline: Algorithm,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub groups: Vec<BenchRow>,
    pub overall: Vec<BenchRow>,
    pub verdicts: Vec<GroupVerdict>,
}

impl BenchReport {
    /// Share of groups in which `solver` beats the baseline.
    pub fn win_rate(&self, solver: Algorithm) -> f64 {
        let mine: Vec<&GroupVerdict> = self.verdicts.iter().filter(|v| v.solver == solver).collect();
        if mine.is_empty() {
            return 0.0;
        }
        mine.iter().filter(|v| v.verdict == Verdict::ABetter).count() as f64 / mine.len() as f64
    }

    /// Plain-text table in the Solved / MaxSAT / Flips layout followed by the
    /// per-group verdicts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>8} {:>12} {:>12}\n",
            "Solver", "Solved", "MaxSAT", "Flips"
        ));
        for row in &self.overall {
            out.push_str(&format!(
                "{:<12} {:>8} {:>12.2} {:>12}\n",
                row.solver.to_string(),
                row.solved,
                row.max_sat,
                row.flips
            ));
        }
        for v in &self.verdicts {
            out.push_str(&format!(
                "n={} alpha={} {} vs {}: {}\n",
                v.n, v.alpha, v.solver, v.baseline, v.verdict
            ));
        }
        let solvers: Vec<Algorithm> = self.overall.iter().map(|r| r.solver).collect();
        for solver in solvers.iter().filter(|s| self.verdicts.iter().any(|v| v.solver == **s)) {
            out.push_str(&format!(
                "{} better on {:.1}% of groups\n",
                solver,
                100.0 * self.win_rate(*solver)
            ));
        }
        out
    }

    /// Group rows followed by the overall rows; overall rows leave `n` and
    /// `alpha` empty.
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let rows: Vec<&BenchRow> = self.groups.iter().chain(&self.overall).collect();
        to_csv(&rows)
    }
}

fn row(n: Option<u32>, alpha: Option<f64>, solver: Algorithm, t: &Totals) -> BenchRow {
    BenchRow {
        n,
        alpha,
        solver,
        instances: t.instances,
        solved: t.solved,
        max_sat: t.max_sat(),
        flips: t.flips,
    }
}

/// Runs every selected solver on every instance of the grid. All solvers see
/// the same formula and the same solver seed; LC and NLC share one clause
/// order per instance.
pub fn benchmark(cfg: &BenchConfig) -> Result<BenchReport, ExperimentError> {
    cfg.validate()?;
    let params = cfg.params();
    let needs_order = cfg.solvers.iter().any(|s| s.needs_order());
    let mut jobs = Vec::new();
    for &n in &cfg.n_values {
        for alpha_index in 0..cfg.alphas.len() {
            for instance in 0..cfg.instances {
                jobs.push((n, alpha_index, instance));
            }
        }
    }
    let nested: Vec<Vec<BenchRun>> = jobs
        .par_iter()
        .map(|&(n, alpha_index, instance)| {
            let alpha = cfg.alphas[alpha_index];
            let path = |tag: u64| [tag, u64::from(n), alpha_index as u64, instance as u64];
            let formula = generate_random(
                instance_seed(cfg.seed_root, n, alpha_index, instance),
                cfg.k,
                n,
                clauses_for(alpha, n),
            )?;
            let order = if needs_order {
                Some(instance_order(
                    &formula,
                    cfg,
                    &path(purpose::GRAPH),
                    &path(purpose::ORDER),
                )?)
            } else {
                None
            };
            let seed = derive_seed(cfg.seed_root, &path(purpose::SOLVER));
            cfg.solvers
                .iter()
                .map(|&solver| {
                    Ok(BenchRun {
                        n,
                        alpha,
                        instance,
                        solver,
                        result: solve(&formula, solver, order.as_ref(), &params, seed)?,
                    })
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })
        .collect::<Result<_, _>>()?;
    let runs: Vec<BenchRun> = nested.into_iter().flatten().collect();
    Ok(tabulate(cfg, runs))
}

fn instance_order(
    formula: &Formula,
    cfg: &BenchConfig,
    graph_path: &[u64],
    order_path: &[u64],
) -> Result<ClauseOrder, ExperimentError> {
    let graph = build(formula, &cfg.builder.with_seed(derive_seed(cfg.seed_root, graph_path)))?;
    Ok(ClauseOrder::new(
        formula,
        &graph,
        derive_seed(cfg.seed_root, order_path),
    )?)
}

fn tabulate(cfg: &BenchConfig, runs: Vec<BenchRun>) -> BenchReport {
    let baseline = Algorithm::ChainSat;
    let mut groups = Vec::new();
    let mut verdicts = Vec::new();
    let mut overall: BTreeMap<Algorithm, Totals> = BTreeMap::new();
    for &n in &cfg.n_values {
        for &alpha in &cfg.alphas {
            let mut totals: BTreeMap<Algorithm, Totals> = BTreeMap::new();
            for &solver in &cfg.solvers {
                let t = Totals::of(
                    runs.iter()
                        .filter(|r| r.n == n && r.alpha == alpha && r.solver == solver)
                        .map(|r| &r.result),
                );
                let all = overall.entry(solver).or_default();
                all.instances += t.instances;
                all.solved += t.solved;
                all.satisfied_clauses += t.satisfied_clauses;
                all.flips += t.flips;
                groups.push(row(Some(n), Some(alpha), solver, &t));
                totals.insert(solver, t);
            }
            if let Some(base) = totals.get(&baseline) {
                for &solver in cfg.solvers.iter().filter(|&&s| s != baseline) {
                    verdicts.push(GroupVerdict {
                        n,
                        alpha,
                        solver,
                        baseline,
                        verdict: compare_totals(&totals[&solver], base),
                    });
                }
            }
        }
    }
    let overall = cfg.solvers.iter().map(|&s| row(None, None, s, &overall[&s])).collect();
    BenchReport {
        runs,
        groups,
        overall,
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Mode;
    use crate::rng::seeded;
    use rand::Rng;

    fn small_sweep() -> SweepConfig {
        SweepConfig {
            n_values: vec![20],
            alphas: vec![1.0, 3.0],
            k: 3,
            instances: 2,
            graphs: 2,
            builder: BuilderConfig::default(),
            seed_root: 11,
        }
    }

    #[test]
    fn clause_count_rounding() {
        assert_eq!(clauses_for(4.256, 50), 213);
        assert_eq!(clauses_for(0.25, 2), 0);
        assert_eq!(clauses_for(0.75, 2), 2);
        assert_eq!(clauses_for(2.5, 1), 2);
        assert_eq!(clauses_for(3.5, 1), 4);
    }

    #[test]
    fn grid_keeps_endpoint() {
        let grid = alpha_grid(2.0, 7.0, 0.25);
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[20], 7.0);
        assert_eq!(alpha_grid(0.1, 0.3, 0.1).len(), 3);
    }

    #[test]
    fn single_sample_record_is_that_sample() {
        let cfg = SweepConfig {
            alphas: vec![2.0],
            instances: 1,
            graphs: 1,
            ..small_sweep()
        };
        let samples = sweep_samples(&cfg).unwrap();
        let records = sweep(&cfg).unwrap();
        assert_eq!(samples.len(), 1);
        let s = samples[0].summary;
        let r = &records[0];
        assert_eq!(r.mean_fraction_winner, s.fraction_winner);
        assert_eq!(r.nonwinner_mean, s.nonwinner_mean);
        assert_eq!(r.samples, 1);
        assert_eq!(r.pct_full_bec + r.pct_partial_bec + r.pct_fgr, 100.0);
    }

    #[test]
    fn sweep_is_deterministic_and_recountable() {
        let cfg = small_sweep();
        let a = records_to_csv(&sweep(&cfg).unwrap()).unwrap();
        let b = records_to_csv(&sweep(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(
            "n,alpha,mean_fraction_winner,pct_full_bec,pct_partial_bec,pct_fgr,nonwinner_mean,nonwinner_std,samples\n"
        ));
        let samples = sweep_samples(&cfg).unwrap();
        let records = aggregate(&cfg, &samples);
        for (i, rec) in records.iter().enumerate() {
            let point = &samples[i * 4..(i + 1) * 4];
            let full = point.iter().filter(|s| s.summary.fraction_winner >= 0.9).count();
            assert_eq!(rec.pct_full_bec, 100.0 * full as f64 / 4.0);
            assert_eq!(rec.samples, 4);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut cfg = small_sweep();
        cfg.alphas = vec![3.0, 1.0];
        assert!(matches!(sweep(&cfg), Err(ExperimentError::Config(_))));
        cfg.alphas = vec![0.01];
        assert!(matches!(sweep(&cfg), Err(ExperimentError::TooFewClauses { .. })));
        cfg.alphas = vec![1.0];
        cfg.graphs = 0;
        assert!(sweep(&cfg).is_err());
    }

    fn sample_poly(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (1..=20).map(|i| i as f64 * 0.5).map(|x| (x, f(x))).collect()
    }

    #[test]
    fn fits_exact_sixth_power() {
        let fit = polyfit6(&sample_poly(|x| x.powi(6))).unwrap();
        for (j, c) in fit.coefficients.iter().enumerate() {
            let expected = if j == 6 { 1.0 } else { 0.0 };
            assert!((c - expected).abs() < 1e-6, "c{j} = {c}");
        }
    }

    #[test]
    fn fits_constant() {
        let fit = polyfit6(&sample_poly(|_| 5.0)).unwrap();
        assert!((fit.coefficients[0] - 5.0).abs() < 1e-9);
        for c in &fit.coefficients[1..] {
            assert!(c.abs() < 1e-9);
        }
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn needs_seven_abscissae() {
        let six: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 1.0)).collect();
        assert_eq!(polyfit6(&six), Err(FitError::TooFewPoints(6)));
        let repeated: Vec<(f64, f64)> = (0..20).map(|i| ((i % 6) as f64, i as f64)).collect();
        assert_eq!(polyfit6(&repeated), Err(FitError::TooFewPoints(6)));
    }

    #[test]
    fn second_derivative_examples() {
        let square = polyfit6(&sample_poly(|x| x * x)).unwrap();
        for x in [0.0, 1.5, 7.0] {
            assert!((second_derivative(&square, x) - 2.0).abs() < 1e-6);
        }
        let mut rng = seeded(3);
        for _ in 0..20 {
            let mut c = [0.0; 7];
            for v in &mut c {
                *v = rng.gen_range(-1.0..1.0);
            }
            let fit = PolyFit::from_coefficients(c);
            let x: f64 = rng.gen_range(-2.0..2.0);
            // five-point stencil, truncation error h^4 f/90
            let h = 1e-2;
            let f = |t: f64| fit.eval(t);
            let fd =
                (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
            assert!((fd - fit.second_derivative(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn residual_is_locally_minimal() {
        let mut rng = seeded(8);
        let points: Vec<(f64, f64)> = (0..21)
            .map(|i| {
                let x = 2.0 + 0.25 * i as f64;
                (x, (x - 4.0).tanh() + rng.gen_range(-0.05..0.05))
            })
            .collect();
        let fit = polyfit6(&points).unwrap();
        assert!((fit.residual - fit.residual_of(&points)).abs() < 1e-12);
        for _ in 0..200 {
            let mut c = fit.coefficients;
            let j = rng.gen_range(0..7);
            c[j] += rng.gen_range(-1e-4..1e-4) / 7f64.powi(j as i32);
            let probe = PolyFit::from_coefficients(c);
            assert!(probe.residual_of(&points) >= fit.residual - 1e-12);
        }
    }

    #[test]
    fn argmax_scan_finds_peak() {
        // -(x - 3)^4 expanded; its second derivative -12 (x - 3)^2 peaks at 3
        let mut c = [0.0; 7];
        c[0] = -81.0;
        c[1] = 108.0;
        c[2] = -54.0;
        c[3] = 12.0;
        c[4] = -1.0;
        let fit = PolyFit::from_coefficients(c);
        assert!((argmax_second_derivative(&fit, 0.0, 10.0, 10_000) - 3.0).abs() < 1e-3);
    }

    fn small_bench() -> BenchConfig {
        BenchConfig {
            k: 3,
            n_values: vec![20],
            alphas: vec![3.0, 4.5],
            instances: 3,
            solvers: Algorithm::ALL.to_vec(),
            p1: 0.005,
            p2: 0.005,
            budget: 2000,
            builder: BuilderConfig::default(),
            seed_root: 5,
        }
    }

    #[test]
    fn benchmark_table_shape() {
        let report = benchmark(&small_bench()).unwrap();
        assert_eq!(report.runs.len(), 2 * 3 * 3);
        assert_eq!(report.groups.len(), 2 * 3);
        assert_eq!(report.overall.len(), 3);
        assert_eq!(report.verdicts.len(), 2 * 2);
        let text = report.render();
        assert!(text.starts_with("Solver"));
        assert!(text.contains("chainsat") && text.contains("nlc"));
        let csv = report.to_csv().unwrap();
        assert!(csv.starts_with("n,alpha,solver,instances,solved,max_sat,flips\n"));
        assert_eq!(csv.lines().count(), 1 + 6 + 3);
        assert_eq!(benchmark(&small_bench()).unwrap(), report);
    }

    #[test]
    fn single_run_row_matches_result() {
        let cfg = BenchConfig {
            alphas: vec![3.0],
            instances: 1,
            solvers: vec![Algorithm::ChainSat],
            ..small_bench()
        };
        let report = benchmark(&cfg).unwrap();
        let r = &report.runs[0].result;
        let row = &report.overall[0];
        assert_eq!(row.solved, usize::from(r.solved));
        assert_eq!(row.max_sat, r.satisfied_clauses as f64);
        assert_eq!(row.flips, r.flips);
        assert!(report.verdicts.is_empty());
    }

    #[test]
    fn bench_uses_builder_mode() {
        let mut cfg = small_bench();
        cfg.builder.mode = Mode::S2g;
        cfg.instances = 1;
        assert!(benchmark(&cfg).is_ok());
        cfg.solvers.clear();
        assert!(benchmark(&cfg).is_err());
    }
}
