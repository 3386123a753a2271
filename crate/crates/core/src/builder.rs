//! The S2G and S2G-PA constructions.
//!
//! Both start from one clause (Step I), force a link to the clause closest to
//! it (Step II), and then repeatedly add the unadded clause closest to the
//! current fittest clause (Step III). They differ in how the joining clause
//! attaches:
//!
//! * S2G runs one independent Bernoulli trial per existing node with success
//!   probability `Π_j = k_j f_j / Σ k_ν f_ν`, so a node may join isolated.
//! * S2G-PA makes `rho` draws from the cumulative distribution of `Π`; each
//!   draw adds 1 to the target's connectivity and `theta` to the joining
//!   node's. Repeated hits on one target collapse into a single edge.
//!
//! `Π` is computed once per iteration, before any link of that iteration.
//! Local fitness, the fittest clause and every energy are recomputed from
//! scratch after each join.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::Formula;
use crate::graph::{ClauseGraph, Mode};
use crate::metrics::{
    clause_distance, clause_fitness, literal_codes, sorted_distance, FitnessRecord, FrequencyTable, Scope,
};
use crate::rng::{self, StreamRng};

/// Reward of an outgoing link relative to an incoming one.
pub const DEFAULT_THETA: f64 = 0.33;
pub const DEFAULT_RHO: u32 = 1;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstClauseRule {
    /// Uniform over all clauses.
    Random,
    /// The clause with maximal global fitness, ties uniform.
    GlobalFittest,
}

impl std::str::FromStr for FirstClauseRule {
    type Err = String;

    fn from_str(s: &str) -> Result<FirstClauseRule, String> {
        match s {
            "random" => Ok(FirstClauseRule::Random),
            "fittest" | "global_fittest" => Ok(FirstClauseRule::GlobalFittest),
            other => Err(format!(
                "unknown first-clause rule `{other}` (expected random or fittest)"
            )),
        }
    }
}

impl std::fmt::Display for FirstClauseRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FirstClauseRule::Random => "random",
            FirstClauseRule::GlobalFittest => "fittest",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub mode: Mode,
    pub temperature: f64,
    /// Out-link reward, S2G-PA only.
    pub theta: f64,
    /// Draws per joining node, S2G-PA only.
    pub rho: u32,
    pub seed: u64,
    pub first_clause: FirstClauseRule,
}

impl Default for BuilderConfig {
    fn default() -> BuilderConfig {
        BuilderConfig {
            mode: Mode::S2gPa,
            temperature: DEFAULT_TEMPERATURE,
            theta: DEFAULT_THETA,
            rho: DEFAULT_RHO,
            seed: 0,
            first_clause: FirstClauseRule::Random,
        }
    }
}

impl BuilderConfig {
    pub fn with_seed(self, seed: u64) -> BuilderConfig {
        BuilderConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(BuildError::InvalidTemperature(self.temperature));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(BuildError::InvalidTheta(self.theta));
        }
        if self.rho == 0 {
            return Err(BuildError::InvalidRho);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("formula has no clauses")]
    EmptyFormula,
    #[error("graph construction needs at least 2 clauses, formula has {0}")]
    TooFewClauses(usize),
    #[error("theta must lie in (0, 1), got {0}")]
    InvalidTheta(f64),
    #[error("rho must be at least 1")]
    InvalidRho,
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("every clause has already joined the graph")]
    NoUnaddedClause,
    #[error("attachment weights sum to zero")]
    ZeroAttachmentWeight,
}

/// Step I: picks the first clause.
pub fn select_first_clause(
    formula: &Formula,
    config: &BuilderConfig,
    rng: &mut StreamRng,
) -> Result<usize, BuildError> {
    let m = formula.num_clauses();
    if m == 0 {
        return Err(BuildError::EmptyFormula);
    }
    match config.first_clause {
        FirstClauseRule::Random => Ok(rng.gen_range(0..m)),
        FirstClauseRule::GlobalFittest => {
            let table = FrequencyTable::global(formula);
            let fitness: Vec<u64> = formula.clauses().iter().map(|c| clause_fitness(&table, c)).collect();
            let best = *fitness.iter().max().expect("nonempty");
            let ties: Vec<usize> = (0..m).filter(|&i| fitness[i] == best).collect();
            Ok(ties[rng.gen_range(0..ties.len())])
        }
    }
}

/// Returns the unadded clause closest to clause `target`, ties uniform.
pub fn find_closest_clause(
    formula: &Formula,
    added: &[bool],
    target: usize,
    rng: &mut StreamRng,
) -> Result<usize, BuildError> {
    let reference = formula.clause(target);
    closest_by(added, rng, |c| {
        clause_distance(formula.clause(c), reference).expect("uniform clause length")
    })
}

fn closest_by(
    added: &[bool],
    rng: &mut StreamRng,
    mut distance: impl FnMut(usize) -> usize,
) -> Result<usize, BuildError> {
    let mut best = usize::MAX;
    let mut ties = Vec::new();
    for c in (0..added.len()).filter(|&c| !added[c]) {
        let d = distance(c);
        if d < best {
            best = d;
            ties.clear();
        }
        if d == best {
            ties.push(c);
        }
    }
    match ties.len() {
        0 => Err(BuildError::NoUnaddedClause),
        1 => Ok(ties[0]),
        len => Ok(ties[rng.gen_range(0..len)]),
    }
}

/// `Π_j = k_j f_j / Σ_ν k_ν f_ν` over the nodes of `graph`, in insertion order,
/// using each node's current connectivity and raw local fitness.
pub fn attachment_probabilities(graph: &ClauseGraph) -> Result<Vec<f64>, BuildError> {
    let weights: Vec<f64> = graph
        .nodes()
        .iter()
        .map(|n| n.connectivity * n.fitness.raw as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(BuildError::ZeroAttachmentWeight);
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Index `j` with `cum[j-1] < x <= cum[j]` where `cum` are the running sums of
/// `probabilities` and `x ∈ (0, 1]`. Rounding slack above the last running sum
/// maps to the last index with nonzero probability.
pub fn select_cumulative(probabilities: &[f64], x: f64) -> usize {
    let mut running = 0.0;
    for (j, &p) in probabilities.iter().enumerate() {
        running += p;
        if x <= running && p > 0.0 {
            return j;
        }
    }
    probabilities
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("at least one positive probability")
}

/// Snapshot handed to a build observer after every iteration from Step II on.
#[derive(Debug)]
pub struct StepReport<'a> {
    /// Number of nodes in the graph after this iteration.
    pub iteration: usize,
    /// Clause that joined in this iteration.
    pub joined: usize,
    /// Attachment probabilities used in this iteration, over the nodes that
    /// existed before the join. Step II uses `[1.0]`.
    pub probabilities: &'a [f64],
    pub graph: &'a ClauseGraph,
    /// Clause index of the fittest clause after the update.
    pub fittest: usize,
}

/// Mutable construction state shared by both algorithms.
pub struct BuildState<'f> {
    formula: &'f Formula,
    config: BuilderConfig,
    graph: ClauseGraph,
    added: Vec<bool>,
    codes: Vec<Vec<u32>>,
    fittest: usize,
    rng: StreamRng,
}

impl<'f> BuildState<'f> {
    /// Runs Step I.
    pub fn start(formula: &'f Formula, config: BuilderConfig) -> Result<BuildState<'f>, BuildError> {
        config.validate()?;
        let mut rng = rng::seeded(config.seed);
        let first = select_first_clause(formula, &config, &mut rng)?;
        let m = formula.num_clauses();
        let codes = formula
            .clauses()
            .iter()
            .map(|c| {
                let mut codes = literal_codes(c);
                codes.sort_unstable();
                codes
            })
            .collect();
        let mut state = BuildState {
            formula,
            config,
            graph: ClauseGraph::new(config.mode, config.theta, config.temperature, m),
            added: vec![false; m],
            codes,
            fittest: first,
            rng,
        };
        state.added[first] = true;
        state.graph.add_node(first, FitnessRecord::fittest(0));
        state.update_fitness();
        Ok(state)
    }

    pub fn graph(&self) -> &ClauseGraph {
        &self.graph
    }

    pub fn into_graph(self) -> ClauseGraph {
        self.graph
    }

    pub fn fittest(&self) -> usize {
        self.fittest
    }

    pub fn is_complete(&self) -> bool {
        self.graph.nodes().len() == self.formula.num_clauses()
    }

    /// Unadded clause closest to the current fittest clause.
    pub fn find_closest_clause(&mut self) -> Result<usize, BuildError> {
        let target = &self.codes[self.fittest];
        let codes = &self.codes;
        closest_by(&self.added, &mut self.rng, |c| sorted_distance(&codes[c], target))
    }

    /// Recomputes local frequencies over the joined clauses, their local
    /// fitness, the fittest clause and all normalized fitnesses and energies.
    /// The incumbent fittest clause is kept while it stays maximal; otherwise
    /// the lowest clause index among the maximal ones takes over.
    pub fn update_fitness(&mut self) {
        let n = self.formula.num_vars();
        let table = crate::metrics::literal_frequency(
            n,
            self.graph.nodes().iter().map(|node| self.formula.clause(node.clause)),
            Scope::Local,
        );
        let raw: Vec<u64> = self
            .graph
            .nodes()
            .iter()
            .map(|node| clause_fitness(&table, self.formula.clause(node.clause)))
            .collect();
        let max = raw.iter().copied().max().unwrap_or(0);
        let incumbent = self.graph.position_of(self.fittest).map(|p| raw[p]);
        if incumbent != Some(max) {
            self.fittest = self
                .graph
                .nodes()
                .iter()
                .zip(&raw)
                .filter(|(_, &r)| r == max)
                .map(|(node, _)| node.clause)
                .min()
                .expect("at least one node");
        }
        for (pos, &r) in raw.iter().enumerate() {
            self.graph
                .set_fitness(pos, FitnessRecord::new(r, max, self.config.temperature));
        }
    }

    /// Step II: the clause closest to the first one joins with a forced link.
    pub fn connect_first_pair(&mut self) -> Result<usize, BuildError> {
        let second = self.find_closest_clause()?;
        let pos = self.join(second);
        self.graph.link(pos, 0, 1.0);
        self.update_fitness();
        Ok(second)
    }

    /// One Step III iteration. Returns the joined clause and the attachment
    /// probabilities used.
    pub fn grow(&mut self) -> Result<(usize, Vec<f64>), BuildError> {
        let next = self.find_closest_clause()?;
        let probabilities = attachment_probabilities(&self.graph)?;
        let pos = self.join(next);
        match self.config.mode {
            Mode::S2g => {
                for (j, &p) in probabilities.iter().enumerate() {
                    if self.rng.gen::<f64>() < p {
                        self.graph.link(pos, j, p);
                    }
                }
            }
            Mode::S2gPa => {
                for _ in 0..self.config.rho {
                    let x = 1.0 - self.rng.gen::<f64>();
                    let j = select_cumulative(&probabilities, x);
                    self.graph.link(pos, j, probabilities[j]);
                }
            }
        }
        self.update_fitness();
        Ok((next, probabilities))
    }

    fn join(&mut self, clause: usize) -> usize {
        self.added[clause] = true;
        self.graph.add_node(clause, FitnessRecord::fittest(0))
    }
}

/// Builds the graph in the mode named by `config`, calling `observer` after
/// every iteration from Step II on.
pub fn build_observed(
    formula: &Formula,
    config: &BuilderConfig,
    mut observer: impl FnMut(&StepReport<'_>),
) -> Result<ClauseGraph, BuildError> {
    config.validate()?;
    let m = formula.num_clauses();
    if m < 2 {
        return Err(BuildError::TooFewClauses(m));
    }
    let mut state = BuildState::start(formula, *config)?;
    let second = state.connect_first_pair()?;
    observer(&StepReport {
        iteration: 2,
        joined: second,
        probabilities: &[1.0],
        graph: &state.graph,
        fittest: state.fittest,
    });
    while !state.is_complete() {
        let (joined, probabilities) = state.grow()?;
        observer(&StepReport {
            iteration: state.graph.nodes().len(),
            joined,
            probabilities: &probabilities,
            graph: &state.graph,
            fittest: state.fittest,
        });
    }
    Ok(state.into_graph())
}

pub fn build(formula: &Formula, config: &BuilderConfig) -> Result<ClauseGraph, BuildError> {
    build_observed(formula, config, |_| {})
}

pub fn build_s2g(formula: &Formula, config: &BuilderConfig) -> Result<ClauseGraph, BuildError> {
    build(
        formula,
        &BuilderConfig {
            mode: Mode::S2g,
            ..*config
        },
    )
}

pub fn build_s2g_pa(formula: &Formula, config: &BuilderConfig) -> Result<ClauseGraph, BuildError> {
    build(
        formula,
        &BuilderConfig {
            mode: Mode::S2gPa,
            ..*config
        },
    )
}
