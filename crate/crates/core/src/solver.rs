//! ChainSAT and the two energy-ordered variants.
//!
//! All three solvers share one main loop. They differ only in how a clause is
//! picked from an eligible set: uniformly at random (ChainSAT), or the
//! heaviest clause not yet visited according to a [`ClauseOrder`] (LC with one
//! visited set, NLC with separate sets for unsatisfied picks and chain picks).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{evaluate, Assignment, Formula};
use crate::graph::ClauseGraph;
use crate::metrics::{group_levels, ENERGY_TOLERANCE};
use crate::rng::{seeded, StreamRng};

/// Connectivities closer than this share a rank key.
const CONNECTIVITY_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DESK_BUDGET: u64 = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("probability {name}={value} must lie in (0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("clause order covers {found} clauses, formula has {expected}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("graph does not contain clause {0}")]
    MissingClause(usize),
    #[error("graph has {found} clause slots, formula has {expected} clauses")]
    GraphMismatch { expected: usize, found: usize },
    #[error("{0} requires a clause order")]
    MissingOrder(Algorithm),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    ChainSat,
    Lc,
    Nlc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::ChainSat, Algorithm::Lc, Algorithm::Nlc];

    pub fn needs_order(self) -> bool {
        self != Algorithm::ChainSat
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::ChainSat => "chainsat",
            Algorithm::Lc => "lc",
            Algorithm::Nlc => "nlc",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chainsat" => Ok(Algorithm::ChainSat),
            "lc" => Ok(Algorithm::Lc),
            "nlc" => Ok(Algorithm::Nlc),
            other => Err(format!("unknown algorithm `{other}` (expected chainsat, lc or nlc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub p1: f64,
    pub p2: f64,
    /// Maximum number of main-loop cycles.
    pub budget: u64,
}

impl ChainParams {
    /// Tuned `p1 = p2` for clause length `k`; other lengths fall back to the
    /// 3-SAT value.
    pub fn default_probability(k: usize) -> f64 {
        match k {
            4 => 0.0001,
            5 => 0.0002,
            _ => 0.005,
        }
    }

    pub fn for_k(k: usize, budget: u64) -> ChainParams {
        let p = ChainParams::default_probability(k);
        ChainParams { p1: p, p2: p, budget }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, value) in [("p1", self.p1), ("p2", self.p2)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(SolverError::InvalidProbability { name, value });
            }
        }
        if self.budget == 0 {
            return Err(SolverError::ZeroBudget);
        }
        Ok(())
    }
}

/// Clause indices heaviest first: lowest energy, then highest connectivity,
/// remaining ties in seeded random order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseOrder {
    rank: Vec<usize>,
    position: Vec<usize>,
}

impl ClauseOrder {
    /// Order from explicit per-clause energies and connectivities.
    ///
    /// # Panics
    ///
    /// If the two slices differ in length.
    pub fn from_keys(energies: &[f64], connectivities: &[f64], seed: u64) -> ClauseOrder {
        assert_eq!(energies.len(), connectivities.len());
        let energy_level = level_index(energies, ENERGY_TOLERANCE);
        let connectivity_level = level_index(connectivities, CONNECTIVITY_TOLERANCE);
        let mut rank: Vec<usize> = (0..energies.len()).collect();
        rank.shuffle(&mut seeded(seed));
        rank.sort_by(|&a, &b| {
            energy_level[a]
                .cmp(&energy_level[b])
                .then(connectivity_level[b].cmp(&connectivity_level[a]))
        });
        ClauseOrder::from_rank(rank)
    }

    /// Order read off a graph built from `formula`.
    pub fn new(formula: &Formula, graph: &ClauseGraph, seed: u64) -> Result<ClauseOrder, SolverError> {
        let m = formula.num_clauses();
        if graph.num_clauses() != m {
            return Err(SolverError::GraphMismatch {
                expected: m,
                found: graph.num_clauses(),
            });
        }
        let mut energies = Vec::with_capacity(m);
        let mut connectivities = Vec::with_capacity(m);
        for clause in 0..m {
            let pos = graph.position_of(clause).ok_or(SolverError::MissingClause(clause))?;
            let node = graph.node(pos);
            energies.push(node.fitness.energy);
            connectivities.push(node.connectivity);
        }
        Ok(ClauseOrder::from_keys(&energies, &connectivities, seed))
    }

    /// # Panics
    ///
    /// If `rank` is not a permutation of `0..rank.len()`.
    pub fn from_rank(rank: Vec<usize>) -> ClauseOrder {
        let mut position = vec![usize::MAX; rank.len()];
        for (r, &clause) in rank.iter().enumerate() {
            assert!(
                clause < rank.len() && position[clause] == usize::MAX,
                "not a permutation"
            );
            position[clause] = r;
        }
        ClauseOrder { rank, position }
    }

    pub fn rank(&self) -> &[usize] {
        &self.rank
    }

    /// Rank of `clause`; 0 is the heaviest.
    pub fn position(&self, clause: usize) -> usize {
        self.position[clause]
    }

    pub fn len(&self) -> usize {
        self.rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank.is_empty()
    }
}

// Level number of every value after grouping within `tolerance`.
fn level_index(values: &[f64], tolerance: f64) -> Vec<usize> {
    let mut index = vec![0; values.len()];
    for (level, members) in group_levels(values, tolerance).into_iter().enumerate() {
        for i in members {
            index[i] = level;
        }
    }
    index
}

/// Visited-clause bit arrays. LC uses a single array for both selection
/// points; NLC keeps one for unsatisfied picks and one for chain picks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VisitedSets {
    Lc { a: Vec<bool> },
    Nlc { a_unsat: Vec<bool>, a_sat: Vec<bool> },
}

/// Which line of the main loop asks for a clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pick {
    /// Choosing an unsatisfied clause to start from.
    Unsatisfied,
    /// Choosing a clause satisfied only by the current variable.
    Chain,
}

impl VisitedSets {
    pub fn lc(m: usize) -> VisitedSets {
        VisitedSets::Lc { a: vec![false; m] }
    }

    pub fn nlc(m: usize) -> VisitedSets {
        VisitedSets::Nlc {
            a_unsat: vec![false; m],
            a_sat: vec![false; m],
        }
    }

    pub fn bits(&self, pick: Pick) -> &[bool] {
        match (self, pick) {
            (VisitedSets::Lc { a }, _) => a,
            (VisitedSets::Nlc { a_unsat, .. }, Pick::Unsatisfied) => a_unsat,
            (VisitedSets::Nlc { a_sat, .. }, Pick::Chain) => a_sat,
        }
    }

    fn bits_mut(&mut self, pick: Pick) -> &mut Vec<bool> {
        match (self, pick) {
            (VisitedSets::Lc { a }, _) => a,
            (VisitedSets::Nlc { a_unsat, .. }, Pick::Unsatisfied) => a_unsat,
            (VisitedSets::Nlc { a_sat, .. }, Pick::Chain) => a_sat,
        }
    }

    /// Heaviest clause of `eligible` whose bit is clear, setting the bit; if
    /// every bit is set, a uniformly random member of `eligible`.
    ///
    /// # Panics
    ///
    /// If `eligible` is empty.
    pub fn select<R: Rng>(&mut self, pick: Pick, eligible: &[usize], order: &ClauseOrder, rng: &mut R) -> usize {
        assert!(!eligible.is_empty(), "nothing to select from");
        let bits = self.bits_mut(pick);
        let fresh = eligible
            .iter()
            .copied()
            .filter(|&c| !bits[c])
            .min_by_key(|&c| order.position(c));
        match fresh {
            Some(c) => {
                bits[c] = true;
                c
            }
            None => eligible[rng.gen_range(0..eligible.len())],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverResult {
    pub solved: bool,
    pub satisfied_clauses: usize,
    pub flips: u64,
    /// Main-loop cycles executed.
    pub evaluations: u64,
    pub assignment: Vec<bool>,
}

/// One executed variable flip with the unsatisfied count around it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipEvent {
    pub variable: u32,
    pub unsat_before: usize,
    pub unsat_after: usize,
}

// Occurrence of a variable in one clause: how many of its literals there are
// positive and how many negated.
#[derive(Clone, Copy, Debug)]
struct Occurrence {
    clause: usize,
    positive: u32,
    negative: u32,
}

impl Occurrence {
    fn true_literals(&self, value: bool) -> u32 {
        if value {
            self.positive
        } else {
            self.negative
        }
    }
}

// Incremental satisfaction bookkeeping for local search.
struct SearchState<'f> {
    formula: &'f Formula,
    values: Vec<bool>,
    occurrences: Vec<Vec<Occurrence>>,
    true_count: Vec<u32>,
    unsat: Vec<usize>,
    unsat_slot: Vec<usize>,
}

impl<'f> SearchState<'f> {
    fn new(formula: &'f Formula, values: Vec<bool>) -> SearchState<'f> {
        let n = formula.num_vars() as usize;
        let m = formula.num_clauses();
        let mut occurrences: Vec<Vec<Occurrence>> = vec![Vec::new(); n + 1];
        let mut true_count = vec![0; m];
        for (c, clause) in formula.clauses().iter().enumerate() {
            for lit in clause.literals() {
                let var = lit.var() as usize;
                let list = &mut occurrences[var];
                let idx = match list.iter().position(|o| o.clause == c) {
                    Some(i) => i,
                    None => {
                        list.push(Occurrence {
                            clause: c,
                            positive: 0,
                            negative: 0,
                        });
                        list.len() - 1
                    }
                };
                if lit.is_negated() {
                    list[idx].negative += 1;
                } else {
                    list[idx].positive += 1;
                }
                if lit.eval(values[var - 1]) {
                    true_count[c] += 1;
                }
            }
        }
        let mut state = SearchState {
            formula,
            values,
            occurrences,
            true_count,
            unsat: Vec::new(),
            unsat_slot: vec![usize::MAX; m],
        };
        for c in 0..m {
            if state.true_count[c] == 0 {
                state.mark_unsat(c);
            }
        }
        state
    }

    fn value(&self, var: u32) -> bool {
        self.values[var as usize - 1]
    }

    fn mark_unsat(&mut self, c: usize) {
        self.unsat_slot[c] = self.unsat.len();
        self.unsat.push(c);
    }

    fn mark_sat(&mut self, c: usize) {
        let slot = self.unsat_slot[c];
        let last = *self.unsat.last().expect("clause is unsatisfied");
        self.unsat.swap_remove(slot);
        if last != c {
            self.unsat_slot[last] = slot;
        }
        self.unsat_slot[c] = usize::MAX;
    }

    // Change in the unsatisfied count if `var` were flipped.
    fn delta(&self, var: u32) -> i64 {
        let value = self.value(var);
        let mut delta = 0;
        for occ in &self.occurrences[var as usize] {
            let before = self.true_count[occ.clause];
            let after = before - occ.true_literals(value) + occ.true_literals(!value);
            match (before == 0, after == 0) {
                (false, true) => delta += 1,
                (true, false) => delta -= 1,
                _ => {}
            }
        }
        delta
    }

    fn flip(&mut self, var: u32) {
        let value = self.value(var);
        for i in 0..self.occurrences[var as usize].len() {
            let occ = self.occurrences[var as usize][i];
            let before = self.true_count[occ.clause];
            let after = before - occ.true_literals(value) + occ.true_literals(!value);
            self.true_count[occ.clause] = after;
            match (before == 0, after == 0) {
                (false, true) => self.mark_unsat(occ.clause),
                (true, false) => self.mark_sat(occ.clause),
                _ => {}
            }
        }
        self.values[var as usize - 1] = !value;
    }

    // Clauses whose only true literals are on `var`.
    fn satisfied_only_by(&self, var: u32) -> Vec<usize> {
        let value = self.value(var);
        self.occurrences[var as usize]
            .iter()
            .filter(|occ| {
                let own = occ.true_literals(value);
                own > 0 && self.true_count[occ.clause] == own
            })
            .map(|occ| occ.clause)
            .collect()
    }

    // Distinct variables of `clause` other than `var`, in literal order.
    fn other_variables(&self, clause: usize, var: u32) -> Vec<u32> {
        let mut vars: Vec<u32> = Vec::new();
        for lit in self.formula.clause(clause).literals() {
            if lit.var() != var && !vars.contains(&lit.var()) {
                vars.push(lit.var());
            }
        }
        vars
    }

    fn distinct_variables(&self, clause: usize) -> Vec<u32> {
        self.other_variables(clause, 0)
    }
}

enum Selector<'o> {
    Random,
    Ordered(&'o ClauseOrder, VisitedSets),
}

impl Selector<'_> {
    fn select(&mut self, pick: Pick, eligible: &[usize], rng: &mut StreamRng) -> usize {
        match self {
            Selector::Random => eligible[rng.gen_range(0..eligible.len())],
            Selector::Ordered(order, visited) => visited.select(pick, eligible, order, rng),
        }
    }
}

/// Runs `algorithm` on `formula`, reporting every executed flip to `observer`.
pub fn solve_observed(
    formula: &Formula,
    algorithm: Algorithm,
    order: Option<&ClauseOrder>,
    params: &ChainParams,
    seed: u64,
    mut observer: impl FnMut(&FlipEvent),
) -> Result<SolverResult, SolverError> {
    params.validate()?;
    let m = formula.num_clauses();
    let mut selector = match (algorithm, order) {
        (Algorithm::ChainSat, _) => Selector::Random,
        (_, None) => return Err(SolverError::MissingOrder(algorithm)),
        (_, Some(order)) if order.len() != m => {
            return Err(SolverError::OrderMismatch {
                expected: m,
                found: order.len(),
            })
        }
        (Algorithm::Lc, Some(order)) => Selector::Ordered(order, VisitedSets::lc(m)),
        (Algorithm::Nlc, Some(order)) => Selector::Ordered(order, VisitedSets::nlc(m)),
    };

    let mut rng = seeded(seed);
    let initial = Assignment::random(formula.num_vars(), &mut rng);
    let mut state = SearchState::new(formula, initial.values().to_vec());
    let (mut flips, mut evaluations) = (0u64, 0u64);
    let mut chaining = false;
    let mut var = 0u32;

    while !state.unsat.is_empty() && evaluations < params.budget {
        evaluations += 1;
        if !chaining {
            let clause = selector.select(Pick::Unsatisfied, &state.unsat, &mut rng);
            let vars = state.distinct_variables(clause);
            var = vars[rng.gen_range(0..vars.len())];
        }
        let delta = state.delta(var);
        chaining = false;
        let flip = match delta.signum() {
            0 => true,
            -1 => rng.gen_bool(params.p1),
            _ => {
                if rng.gen_bool(1.0 - params.p2) {
                    let candidates = state.satisfied_only_by(var);
                    // A positive delta means some clause breaks, so the list
                    // is nonempty; a clause without another variable ends the
                    // chain.
                    let clause = selector.select(Pick::Chain, &candidates, &mut rng);
                    let others = state.other_variables(clause, var);
                    if !others.is_empty() {
                        var = others[rng.gen_range(0..others.len())];
                        chaining = true;
                    }
                }
                false
            }
        };
        if flip {
            let before = state.unsat.len();
            state.flip(var);
            flips += 1;
            observer(&FlipEvent {
                variable: var,
                unsat_before: before,
                unsat_after: state.unsat.len(),
            });
        }
    }

    Ok(SolverResult {
        solved: state.unsat.is_empty(),
        satisfied_clauses: m - state.unsat.len(),
        flips,
        evaluations,
        assignment: state.values,
    })
}

pub fn solve(
    formula: &Formula,
    algorithm: Algorithm,
    order: Option<&ClauseOrder>,
    params: &ChainParams,
    seed: u64,
) -> Result<SolverResult, SolverError> {
    solve_observed(formula, algorithm, order, params, seed, |_| {})
}

pub fn chainsat(formula: &Formula, params: &ChainParams, seed: u64) -> Result<SolverResult, SolverError> {
    solve(formula, Algorithm::ChainSat, None, params, seed)
}

pub fn lc_chainsat(
    formula: &Formula,
    order: &ClauseOrder,
    params: &ChainParams,
    seed: u64,
) -> Result<SolverResult, SolverError> {
    solve(formula, Algorithm::Lc, Some(order), params, seed)
}

pub fn nlc_chainsat(
    formula: &Formula,
    order: &ClauseOrder,
    params: &ChainParams,
    seed: u64,
) -> Result<SolverResult, SolverError> {
    solve(formula, Algorithm::Nlc, Some(order), params, seed)
}

/// True if `result` is a genuine model of `formula`, checked clause by clause.
pub fn verify(formula: &Formula, result: &SolverResult) -> bool {
    match evaluate(formula, &Assignment::new(result.assignment.clone())) {
        Ok(eval) => eval.is_model() && eval.satisfied == result.satisfied_clauses,
        Err(_) => false,
    }
}

/// Aggregate over a set of instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub instances: usize,
    pub solved: usize,
    pub satisfied_clauses: u64,
    pub flips: u64,
}

impl Totals {
    pub fn of<'a>(results: impl IntoIterator<Item = &'a SolverResult>) -> Totals {
        let mut t = Totals::default();
        for r in results {
            t.instances += 1;
            t.solved += usize::from(r.solved);
            t.satisfied_clauses += r.satisfied_clauses as u64;
            t.flips += r.flips;
        }
        t
    }

    /// Mean satisfied clauses per instance.
    pub fn max_sat(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.satisfied_clauses as f64 / self.instances as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ABetter,
    BBetter,
    Tie,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ABetter => "a_better",
            Verdict::BBetter => "b_better",
            Verdict::Tie => "tie",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("result sets cover different instances")]
pub struct InstanceSetMismatch;

/// Compares two solvers on the same instances: more solved instances wins,
/// then more satisfied clauses on average, then fewer flips.
pub fn compare(
    a: &BTreeMap<String, SolverResult>,
    b: &BTreeMap<String, SolverResult>,
) -> Result<Verdict, InstanceSetMismatch> {
    if !a.keys().eq(b.keys()) {
        return Err(InstanceSetMismatch);
    }
    Ok(compare_totals(&Totals::of(a.values()), &Totals::of(b.values())))
}

/// The comparison rule on precomputed totals over the same instance count.
pub fn compare_totals(a: &Totals, b: &Totals) -> Verdict {
    use std::cmp::Ordering;
    let key = a
        .solved
        .cmp(&b.solved)
        .then(a.satisfied_clauses.cmp(&b.satisfied_clauses))
        .then(b.flips.cmp(&a.flips));
    match key {
        Ordering::Greater => Verdict::ABetter,
        Ordering::Less => Verdict::BBetter,
        Ordering::Equal => Verdict::Tie,
    }
}
