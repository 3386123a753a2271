//! Literal frequencies, clause fitness, the clause distance and the
//! fitness-to-energy mapping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{Clause, Formula, Literal};

/// Two energies closer than this are degeneration states of one level.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("clauses have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("normalized fitness {0} is outside (0, 1]")]
    FitnessOutOfRange(f64),
    #[error("temperature {0} must be positive")]
    NonPositiveTemperature(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Counts over the whole formula.
    Global,
    /// Counts over the clauses added to the graph so far.
    Local,
}

/// Occurrence count of every signed literal over a set of clauses. `x` and
/// `¬x` are distinct keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u32>,
    clauses: usize,
    scope: Scope,
}

impl FrequencyTable {
    pub fn empty(n: u32, scope: Scope) -> FrequencyTable {
        FrequencyTable {
            counts: vec![0; 2 * n as usize],
            clauses: 0,
            scope,
        }
    }

    /// Table over the whole formula.
    pub fn global(formula: &Formula) -> FrequencyTable {
        literal_frequency(formula.num_vars(), formula.clauses(), Scope::Global)
    }

    pub fn add_clause(&mut self, clause: &Clause) {
        for lit in clause.literals() {
            self.counts[lit.code()] += 1;
        }
        self.clauses += 1;
    }

    pub fn count(&self, lit: Literal) -> u32 {
        self.counts.get(lit.code()).copied().unwrap_or(0)
    }

    pub fn scope(&self) -> Scope {
        self.scope
    }

    /// Number of clauses folded into the table.
    pub fn num_clauses(&self) -> usize {
        self.clauses
    }

    /// Sum of all counts; equals `k` times the number of clauses in scope.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Literals with a nonzero count.
    pub fn iter(&self) -> impl Iterator<Item = (Literal, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(code, &c)| (Literal::from_code(code), c))
    }
}

pub fn literal_frequency<'a>(n: u32, clauses: impl IntoIterator<Item = &'a Clause>, scope: Scope) -> FrequencyTable {
    let mut table = FrequencyTable::empty(n, scope);
    for clause in clauses {
        table.add_clause(clause);
    }
    table
}

/// Sum of the table counts over the clause's literal slots.
pub fn clause_fitness(table: &FrequencyTable, clause: &Clause) -> u64 {
    clause.literals().iter().map(|&l| u64::from(table.count(l))).sum()
}

/// Number of literal slots of `a` left unmatched by `b`: `k` minus the size
/// of the multiset intersection. Literal order does not matter and polarity
/// distinguishes literals.
pub fn clause_distance(a: &Clause, b: &Clause) -> Result<usize, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    let mut left = literal_codes(a);
    let mut right = literal_codes(b);
    left.sort_unstable();
    right.sort_unstable();
    Ok(sorted_distance(&left, &right))
}

pub(crate) fn literal_codes(clause: &Clause) -> Vec<u32> {
    clause.literals().iter().map(|l| l.code() as u32).collect()
}

/// Distance between two sorted code lists of equal length.
pub(crate) fn sorted_distance(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() - common
}

/// `-T ln(normalized)`; zero exactly for the fittest clause.
pub fn energy(normalized_fitness: f64, temperature: f64) -> Result<f64, MetricError> {
    if !(normalized_fitness > 0.0 && normalized_fitness <= 1.0) {
        return Err(MetricError::FitnessOutOfRange(normalized_fitness));
    }
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(MetricError::NonPositiveTemperature(temperature));
    }
    if normalized_fitness == 1.0 {
        return Ok(0.0);
    }
    Ok(-temperature * normalized_fitness.ln())
}

/// Fitness of one clause relative to the fittest clause in scope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessRecord {
    pub raw: u64,
    pub normalized: f64,
    pub energy: f64,
}

impl FitnessRecord {
    /// # Panics
    ///
    /// If `raw` is zero or exceeds `max_raw`, or the temperature is not positive.
    pub fn new(raw: u64, max_raw: u64, temperature: f64) -> FitnessRecord {
        let normalized = raw as f64 / max_raw as f64;
        let energy = energy(normalized, temperature).expect("fitness within (0, max]");
        FitnessRecord {
            raw,
            normalized,
            energy,
        }
    }

    /// Record of a clause that is (one of) the fittest.
    pub fn fittest(raw: u64) -> FitnessRecord {
        FitnessRecord {
            raw,
            normalized: 1.0,
            energy: 0.0,
        }
    }
}

/// Groups `values` into levels: sorted ascending, a new level starts whenever
/// the gap to the previous value exceeds `tolerance`. Returns index groups.
pub fn group_levels(values: &[f64], tolerance: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for idx in order {
        let v = values[idx];
        match levels.last_mut() {
            Some(level) if v - last <= tolerance => level.push(idx),
            _ => levels.push(vec![idx]),
        }
        last = v;
    }
    levels
}
