use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use s2g::analysis::summarize;
use s2g::builder::{build, BuilderConfig, FirstClauseRule};
use s2g::cnf::{generate_random, parse_dimacs, serialize_dimacs, Formula};
use s2g::experiments::{
    alpha_grid, argmax_second_derivative, benchmark, clauses_for, default_bench_grid, polyfit6, records_to_csv, sweep,
    BenchConfig, PolyFit, SweepConfig, DESK_GRAPHS, DESK_INSTANCES,
};
use s2g::graph::{export_dot, particle_spectrum, ClauseGraph, Mode};
use s2g::rng::{derive_seed, purpose};
use s2g::solver::{compare, solve, Algorithm, ChainParams, ClauseOrder, SolverResult, Totals, Verdict};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{read_input, sha256_hex, to_json_text, Outputs, RunManifest};
use crate::{
    BenchArgs, BuildArgs, BuilderArgs, ClassifyArgs, Cli, Command, CompareArgs, GenArgs, SolveArgs, SpectrumArgs,
    SweepArgs,
};

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match cli.command {
        Command::Gen(args) => gen(args),
        Command::Build(args) => build_graph(args),
        Command::Classify(args) => classify(args),
        Command::Spectrum(args) => spectrum(args),
        Command::Solve(args) => solve_formulas(args),
        Command::Compare(args) => compare_results(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Bench(args) => bench(args),
    }
}

fn builder_config(args: &BuilderArgs, seed: u64) -> Result<BuilderConfig, CliError> {
    let cfg = BuilderConfig {
        mode: args.mode,
        temperature: args.temperature,
        theta: args.theta,
        rho: args.rho,
        seed,
        first_clause: args.first_clause,
    };
    cfg.validate().map_err(CliError::usage)?;
    Ok(cfg)
}

fn read_formula(path: &Path, manifest: &mut RunManifest) -> Result<Formula, CliError> {
    let bytes = read_input(path)?;
    manifest.add_input(path, &bytes);
    parse_dimacs(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path, manifest: &mut RunManifest) -> Result<ClauseGraph, CliError> {
    let bytes = read_input(path)?;
    manifest.add_input(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not UTF-8", path.display())))?;
    ClauseGraph::from_json(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Writes `text` to `out` with a manifest, or prints it when `out` is absent.
fn emit(out: Option<&Path>, text: String, manifest: &RunManifest) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut outputs = Outputs::default();
            outputs.add(path, text);
            outputs.add_manifest(path, manifest);
            outputs.commit()
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct GenConfig {
    k: usize,
    n: u32,
    m: usize,
    seed: u64,
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let m = match (args.m, args.alpha) {
        (Some(m), _) => m,
        (None, Some(alpha)) if alpha.is_finite() && alpha >= 0.0 => clauses_for(alpha, args.n),
        _ => return Err(CliError::usage("--alpha must be a nonnegative number")),
    };
    let formula = generate_random(args.seed, args.k, args.n, m).map_err(CliError::usage)?;
    let manifest = RunManifest::new(
        "gen",
        Some(args.seed),
        &GenConfig {
            k: args.k,
            n: args.n,
            m,
            seed: args.seed,
        },
    );
    let mut outputs = Outputs::default();
    outputs.add(&args.out, serialize_dimacs(&formula));
    outputs.add_manifest(&args.out, &manifest);
    outputs.commit()
}

fn build_graph(args: BuildArgs) -> Result<(), CliError> {
    let cfg = builder_config(&args.builder, args.seed)?;
    let mut manifest = RunManifest::new("build", Some(args.seed), &cfg);
    let formula = read_formula(&args.input, &mut manifest)?;
    let graph = build(&formula, &cfg).map_err(CliError::data)?;
    let mut outputs = Outputs::default();
    outputs.add(&args.out, graph.to_json());
    outputs.add_manifest(&args.out, &manifest);
    if let Some(dot) = &args.dot {
        outputs.add(dot, export_dot(&graph));
    }
    outputs.commit()
}

#[derive(Serialize)]
struct NoConfig {}

fn classify(args: ClassifyArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("classify", None, &NoConfig {});
    let graph = read_graph(&args.input, &mut manifest)?;
    let summary = summarize(&graph).map_err(CliError::data)?;
    emit(args.out.as_deref(), to_json_text(&summary), &manifest)
}

fn spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("spectrum", None, &NoConfig {});
    let graph = read_graph(&args.input, &mut manifest)?;
    emit(args.out.as_deref(), to_json_text(&particle_spectrum(&graph)), &manifest)
}

/// Contents of a `solve` result file.
#[derive(Debug, Serialize, Deserialize)]
struct SolveOutput {
    algorithm: Algorithm,
    params: ChainParams,
    seed: u64,
    /// SHA-256 of each input formula → its result.
    results: BTreeMap<String, SolverResult>,
}

#[derive(Serialize)]
struct SolveConfig {
    algorithm: Algorithm,
    params: ChainParams,
    seed: u64,
    order_builder: Option<BuilderConfig>,
    graph: Option<PathBuf>,
}

fn resolve_params(p1: Option<f64>, p2: Option<f64>, k: usize, budget: u64) -> Result<ChainParams, CliError> {
    let p1 = p1.unwrap_or_else(|| ChainParams::default_probability(k));
    let params = ChainParams {
        p1,
        p2: p2.unwrap_or(p1),
        budget,
    };
    params.validate().map_err(CliError::usage)?;
    Ok(params)
}

fn solve_formulas(args: SolveArgs) -> Result<(), CliError> {
    if args.graph.is_some() && args.input.len() != 1 {
        return Err(CliError::usage("--graph needs exactly one --in formula"));
    }
    let order_builder = if args.algo.needs_order() && args.graph.is_none() {
        Some(builder_config(
            &args.builder,
            derive_seed(args.seed, &[purpose::GRAPH]),
        )?)
    } else {
        None
    };
    // The clause length is only known after reading; validate p1/p2 early
    // with the 3-SAT defaults, then resolve per formula.
    resolve_params(args.p1, args.p2, 3, args.budget)?;

    let mut manifest = RunManifest::new("solve", Some(args.seed), &NoConfig {});
    let mut formulas = Vec::new();
    for path in &args.input {
        let bytes = read_input(path)?;
        manifest.add_input(path, &bytes);
        let formula = parse_dimacs(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        formulas.push((sha256_hex(&bytes), formula));
    }
    let k = formulas[0].1.clause_len();
    if formulas.iter().any(|(_, f)| f.clause_len() != k) {
        return Err(CliError::data("input formulas differ in clause length"));
    }
    let params = resolve_params(args.p1, args.p2, k, args.budget)?;
    let graph = match &args.graph {
        Some(path) => Some(read_graph(path, &mut manifest)?),
        None => None,
    };
    let order_seed = derive_seed(args.seed, &[purpose::ORDER]);

    let mut results = BTreeMap::new();
    for (digest, formula) in &formulas {
        let order = if !args.algo.needs_order() {
            None
        } else {
            let g = match (&graph, &order_builder) {
                (Some(g), _) => g.clone(),
                (None, Some(cfg)) => build(formula, cfg).map_err(CliError::data)?,
                (None, None) => unreachable!("order builder resolved above"),
            };
            Some(ClauseOrder::new(formula, &g, order_seed).map_err(CliError::data)?)
        };
        let result = solve(formula, args.algo, order.as_ref(), &params, args.seed).map_err(CliError::data)?;
        results.insert(digest.clone(), result);
    }
    manifest.config = serde_json::to_value(SolveConfig {
        algorithm: args.algo,
        params,
        seed: args.seed,
        order_builder,
        graph: args.graph.clone(),
    })
    .expect("config serializes");
    let out = SolveOutput {
        algorithm: args.algo,
        params,
        seed: args.seed,
        results,
    };
    emit(args.out.as_deref(), to_json_text(&out), &manifest)
}

#[derive(Serialize)]
struct CompareOutput {
    verdict: Verdict,
    a: Side,
    b: Side,
}

#[derive(Serialize)]
struct Side {
    algorithm: Algorithm,
    totals: Totals,
    max_sat: f64,
}

fn read_results(path: &Path, manifest: &mut RunManifest) -> Result<SolveOutput, CliError> {
    let bytes = read_input(path)?;
    manifest.add_input(path, &bytes);
    serde_json::from_slice(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn compare_results(args: CompareArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("compare", None, &NoConfig {});
    let a = read_results(&args.a, &mut manifest)?;
    let b = read_results(&args.b, &mut manifest)?;
    let verdict = compare(&a.results, &b.results).map_err(CliError::data)?;
    let side = |s: &SolveOutput| {
        let totals = Totals::of(s.results.values());
        Side {
            algorithm: s.algorithm,
            max_sat: totals.max_sat(),
            totals,
        }
    };
    let out = CompareOutput {
        verdict,
        a: side(&a),
        b: side(&b),
    };
    emit(args.out.as_deref(), to_json_text(&out), &manifest)
}

/// Sweep configuration file. Every key is optional; flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    seed: Option<u64>,
    k: Option<usize>,
    n: Option<Vec<u32>>,
    instances: Option<usize>,
    graphs: Option<usize>,
    alpha: Option<AlphaSection>,
    builder: Option<BuilderSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphaSection {
    values: Option<Vec<f64>>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuilderSection {
    mode: Option<Mode>,
    theta: Option<f64>,
    rho: Option<u32>,
    temperature: Option<f64>,
    first_clause: Option<FirstClauseRule>,
}

/// Parses `a,b,c` or `start:stop:step`.
fn parse_alphas(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid alpha grid `{text}`"));
    let numbers = |sep: char| -> Result<Vec<f64>, CliError> {
        text.split(sep)
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect()
    };
    if text.contains(':') {
        match numbers(':')?.as_slice() {
            &[start, stop, step] if step > 0.0 && stop >= start => Ok(alpha_grid(start, stop, step)),
            _ => Err(bad()),
        }
    } else {
        numbers(',')
    }
}

fn resolve_sweep(args: &SweepArgs) -> Result<(SweepConfig, Option<PathBuf>), CliError> {
    let file: SweepFile = match &args.config {
        Some(path) => {
            let bytes = read_input(path)?;
            let text = String::from_utf8(bytes).map_err(|_| CliError::usage("config is not UTF-8"))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SweepFile::default(),
    };
    let alpha = file.alpha.unwrap_or_default();
    let alphas = match (&args.alphas, alpha.values) {
        (Some(text), _) => parse_alphas(text)?,
        (None, Some(values)) => values,
        (None, None) => alpha_grid(
            alpha.start.unwrap_or(2.0),
            alpha.stop.unwrap_or(7.0),
            alpha.step.unwrap_or(0.25),
        ),
    };
    let b = file.builder.unwrap_or_default();
    let defaults = BuilderConfig::default();
    let builder = BuilderConfig {
        mode: args.mode.or(b.mode).unwrap_or(defaults.mode),
        theta: args.theta.or(b.theta).unwrap_or(defaults.theta),
        rho: args.rho.or(b.rho).unwrap_or(defaults.rho),
        temperature: args.temperature.or(b.temperature).unwrap_or(defaults.temperature),
        first_clause: args.first_clause.or(b.first_clause).unwrap_or(defaults.first_clause),
        seed: 0,
    };
    let cfg = SweepConfig {
        n_values: args.n.clone().or(file.n).unwrap_or_else(|| vec![50]),
        alphas,
        k: args.k.or(file.k).unwrap_or(3),
        instances: args.instances.or(file.instances).unwrap_or(DESK_INSTANCES),
        graphs: args.graphs.or(file.graphs).unwrap_or(DESK_GRAPHS),
        builder,
        seed_root: args.seed.or(file.seed).unwrap_or(0),
    };
    cfg.validate().map_err(CliError::usage)?;
    Ok((cfg, args.config.clone()))
}

/// Degree-6 fit of the fraction-winner curve of one n.
#[derive(Serialize)]
struct FitReport {
    n: u32,
    fit: PolyFit,
    /// Ratio of the largest second derivative over the swept range.
    argmax_second_derivative: f64,
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let (cfg, config_path) = resolve_sweep(&args)?;
    let mut manifest = RunManifest::new("sweep", Some(cfg.seed_root), &cfg);
    if let Some(path) = &config_path {
        manifest.add_input(path, &read_input(path)?);
    }
    let fits_possible = cfg.alphas.len() >= 7;
    if args.fit.is_some() && !fits_possible {
        return Err(CliError::usage("--fit needs at least 7 alpha values"));
    }
    let records = sweep(&cfg).map_err(CliError::data)?;
    let mut outputs = Outputs::default();
    outputs.add(&args.out, records_to_csv(&records).map_err(CliError::data)?);
    outputs.add_manifest(&args.out, &manifest);
    if let Some(fit_path) = &args.fit {
        let (lo, hi) = (cfg.alphas[0], cfg.alphas[cfg.alphas.len() - 1]);
        let mut fits = Vec::new();
        for &n in &cfg.n_values {
            let points: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.n == n)
                .map(|r| (r.alpha, r.mean_fraction_winner))
                .collect();
            let fit = polyfit6(&points).map_err(CliError::data)?;
            fits.push(FitReport {
                n,
                argmax_second_derivative: argmax_second_derivative(&fit, lo, hi, 10_000),
                fit,
            });
        }
        outputs.add(fit_path, to_json_text(&fits));
    }
    outputs.commit()
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let alphas = match &args.grid {
        Some(text) => parse_alphas(text)?,
        None => default_bench_grid(args.k).ok_or_else(|| CliError::usage("--grid is required when k is not 3"))?,
    };
    let params = resolve_params(args.p1, args.p2, args.k, args.budget)?;
    let cfg = BenchConfig {
        k: args.k,
        n_values: args.n.clone(),
        alphas,
        instances: args.instances,
        solvers: args.solvers.clone(),
        p1: params.p1,
        p2: params.p2,
        budget: params.budget,
        builder: builder_config(&args.builder, 0)?,
        seed_root: args.seed,
    };
    cfg.validate().map_err(CliError::usage)?;
    let manifest = RunManifest::new("bench", Some(cfg.seed_root), &cfg);
    let report = benchmark(&cfg).map_err(CliError::data)?;
    let text = report.render();
    let mut outputs = Outputs::default();
    outputs.add(&args.out, report.to_csv().map_err(CliError::data)?);
    outputs.add_manifest(&args.out, &manifest);
    if let Some(path) = &args.report {
        outputs.add(path, text.clone());
    }
    outputs.commit()?;
    print!("{text}");
    Ok(())
}
