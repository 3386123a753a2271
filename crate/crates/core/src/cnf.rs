//! CNF data model, DIMACS reading and writing, uniform random k-SAT
//! generation and assignment evaluation.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// A signed literal over a 1-based variable index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    var: u32,
    negated: bool,
}

impl Literal {
    /// # Panics
    ///
    /// If `var == 0`.
    pub fn new(var: u32, negated: bool) -> Literal {
        assert!(var >= 1, "variables are 1-based");
        Literal { var, negated }
    }

    pub fn positive(var: u32) -> Literal {
        Literal::new(var, false)
    }

    pub fn negative(var: u32) -> Literal {
        Literal::new(var, true)
    }

    /// Converts a nonzero DIMACS integer.
    pub fn from_dimacs(value: i64) -> Option<Literal> {
        if value == 0 {
            return None;
        }
        let var = u32::try_from(value.unsigned_abs()).ok()?;
        Some(Literal::new(var, value < 0))
    }

    pub fn to_dimacs(self) -> i64 {
        if self.negated {
            -i64::from(self.var)
        } else {
            i64::from(self.var)
        }
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn is_negated(self) -> bool {
        self.negated
    }

    /// Dense index in `0..2n`: `x_v` maps to `2(v-1)`, `¬x_v` to `2(v-1)+1`.
    pub fn code(self) -> usize {
        2 * (self.var as usize - 1) + usize::from(self.negated)
    }

    pub fn from_code(code: usize) -> Literal {
        Literal::new((code / 2 + 1) as u32, code % 2 == 1)
    }

    /// Truth value of this literal under `value` for its variable.
    pub fn eval(self, value: bool) -> bool {
        value != self.negated
    }
}

impl std::ops::Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal::new(self.var, !self.negated)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// A disjunction of literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Clause {
        Clause { literals }
    }

    /// Builds a clause from DIMACS integers; zeros are ignored.
    pub fn from_dimacs(values: &[i64]) -> Clause {
        Clause::new(values.iter().filter_map(|&v| Literal::from_dimacs(v)).collect())
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True when some variable occurs in two slots of the clause.
    pub fn has_repeated_variable(&self) -> bool {
        self.literals
            .iter()
            .enumerate()
            .any(|(i, a)| self.literals[i + 1..].iter().any(|b| a.var == b.var))
    }

    pub fn is_satisfied_by(&self, assignment: &Assignment) -> bool {
        self.literals.iter().any(|l| assignment.literal_value(*l))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lit in &self.literals {
            write!(f, "{lit} ")?;
        }
        write!(f, "0")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause {clause} has {found} literals, expected {expected}")]
    NonUniformClauseLength {
        clause: usize,
        expected: usize,
        found: usize,
    },
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("literal {literal} in clause {clause} is outside 1..={n}")]
    LiteralOutOfRange { clause: usize, literal: i64, n: u32 },
}

/// A uniform k-SAT instance over variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula {
    n: u32,
    k: usize,
    clauses: Vec<Clause>,
    repeated_variables: bool,
}

impl Formula {
    /// Validates the clause list and infers `k`. An empty clause list gets `k = 0`.
    pub fn new(n: u32, clauses: Vec<Clause>) -> Result<Formula, FormulaError> {
        let k = clauses.first().map_or(0, Clause::len);
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(FormulaError::EmptyClause { clause: i });
            }
            if clause.len() != k {
                return Err(FormulaError::NonUniformClauseLength {
                    clause: i,
                    expected: k,
                    found: clause.len(),
                });
            }
            if let Some(lit) = clause.literals().iter().find(|l| l.var() > n) {
                return Err(FormulaError::LiteralOutOfRange {
                    clause: i,
                    literal: lit.to_dimacs(),
                    n,
                });
            }
        }
        let repeated_variables = clauses.iter().any(Clause::has_repeated_variable);
        Ok(Formula {
            n,
            k,
            clauses,
            repeated_variables,
        })
    }

    pub fn num_vars(&self) -> u32 {
        self.n
    }

    pub fn clause_len(&self) -> usize {
        self.k
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index]
    }

    /// Clause-to-variable ratio `m / n`.
    pub fn ratio(&self) -> f64 {
        self.clauses.len() as f64 / f64::from(self.n)
    }

    /// Set when the source contained a clause repeating a variable. Such
    /// formulas are accepted, but the graph algorithms assume `k` distinct
    /// literal slots.
    pub fn has_repeated_variables(&self) -> bool {
        self.repeated_variables
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error("line {line}: malformed problem line `{text}`")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: duplicate problem line")]
    DuplicateHeader { line: usize },
    #[error("no `p cnf` problem line before clause data")]
    MissingHeader,
    #[error("line {line}: invalid token `{token}`")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: literal {literal} is outside 1..={n}")]
    LiteralOutOfRange { line: usize, literal: i64, n: u32 },
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("clause {clause} has {found} literals, expected {expected}")]
    NonUniformClauseLength {
        clause: usize,
        expected: usize,
        found: usize,
    },
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("last clause is not terminated by 0")]
    UnterminatedClause,
}

/// Parses DIMACS CNF text. Comment lines start with `c`; a `%` line ends the
/// clause section (SATLIB convention).
pub fn parse_dimacs(input: &[u8]) -> Result<Formula, ParseError> {
    let text = std::str::from_utf8(input).map_err(|_| ParseError::Encoding)?;
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::DuplicateHeader { line: line_no });
            }
            header = Some(parse_header(line).ok_or_else(|| ParseError::MalformedHeader {
                line: line_no,
                text: line.to_string(),
            })?);
            continue;
        }
        let (n, _) = header.ok_or(ParseError::MissingHeader)?;
        for token in line.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| ParseError::InvalidToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                if current.is_empty() {
                    return Err(ParseError::EmptyClause { clause: clauses.len() });
                }
                clauses.push(Clause::new(std::mem::take(&mut current)));
                continue;
            }
            match Literal::from_dimacs(value) {
                Some(lit) if lit.var() <= n => current.push(lit),
                _ => {
                    return Err(ParseError::LiteralOutOfRange {
                        line: line_no,
                        literal: value,
                        n,
                    })
                }
            }
        }
    }

    let (n, declared) = header.ok_or(ParseError::MissingHeader)?;
    if !current.is_empty() {
        return Err(ParseError::UnterminatedClause);
    }
    if clauses.len() != declared {
        return Err(ParseError::ClauseCountMismatch {
            declared,
            found: clauses.len(),
        });
    }
    Formula::new(n, clauses).map_err(|e| match e {
        FormulaError::NonUniformClauseLength {
            clause,
            expected,
            found,
        } => ParseError::NonUniformClauseLength {
            clause,
            expected,
            found,
        },
        FormulaError::EmptyClause { clause } => ParseError::EmptyClause { clause },
        FormulaError::LiteralOutOfRange { .. } => unreachable!("literals checked while reading"),
    })
}

fn parse_header(line: &str) -> Option<(u32, usize)> {
    let mut fields = line.split_whitespace();
    if fields.next()? != "p" || fields.next()? != "cnf" {
        return None;
    }
    let n = fields.next()?.parse().ok()?;
    let m = fields.next()?.parse().ok()?;
    if fields.next().is_some() {
        return None;
    }
    Some((n, m))
}

/// Canonical DIMACS text: the header followed by one clause per line.
pub fn serialize_dimacs(formula: &Formula) -> Vec<u8> {
    let mut out = format!("p cnf {} {}\n", formula.n, formula.clauses.len());
    for clause in &formula.clauses {
        out.push_str(&clause.to_string());
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("clause length k={k} must be in 1..=n (n={n})")]
    InvalidClauseLength { k: usize, n: u32 },
}

/// Uniform random k-SAT: each clause takes `k` distinct variables without
/// replacement and negates each with probability 1/2. Duplicate clauses are
/// allowed.
pub fn generate_random(seed: u64, k: usize, n: u32, m: usize) -> Result<Formula, GenerateError> {
    if k == 0 || k > n as usize {
        return Err(GenerateError::InvalidClauseLength { k, n });
    }
    let mut rng = rng::seeded(seed);
    let clauses = (0..m)
        .map(|_| {
            let vars = index::sample(&mut rng, n as usize, k);
            Clause::new(
                vars.into_iter()
                    .map(|v| Literal::new(v as u32 + 1, rng.gen_bool(0.5)))
                    .collect(),
            )
        })
        .collect();
    Ok(Formula {
        n,
        k,
        clauses,
        repeated_variables: false,
    })
}

/// Truth values for variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(values: Vec<bool>) -> Assignment {
        Assignment(values)
    }

    pub fn all(n: u32, value: bool) -> Assignment {
        Assignment(vec![value; n as usize])
    }

    pub fn random<R: Rng>(n: u32, rng: &mut R) -> Assignment {
        Assignment((0..n).map(|_| rng.gen_bool(0.5)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value(&self, var: u32) -> bool {
        self.0[var as usize - 1]
    }

    pub fn literal_value(&self, lit: Literal) -> bool {
        lit.eval(self.value(lit.var()))
    }

    pub fn flip(&mut self, var: u32) {
        let slot = &mut self.0[var as usize - 1];
        *slot = !*slot;
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub satisfied: usize,
    /// Indices of unsatisfied clauses, ascending.
    pub unsatisfied: Vec<usize>,
}

impl Evaluation {
    pub fn is_model(&self) -> bool {
        self.unsatisfied.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("assignment has {found} values, formula has {expected} variables")]
pub struct AssignmentLengthMismatch {
    pub expected: usize,
    pub found: usize,
}

pub fn evaluate(formula: &Formula, assignment: &Assignment) -> Result<Evaluation, AssignmentLengthMismatch> {
    if assignment.len() != formula.n as usize {
        return Err(AssignmentLengthMismatch {
            expected: formula.n as usize,
            found: assignment.len(),
        });
    }
    let unsatisfied: Vec<usize> = formula
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_satisfied_by(assignment))
        .map(|(i, _)| i)
        .collect();
    Ok(Evaluation {
        satisfied: formula.clauses.len() - unsatisfied.len(),
        unsatisfied,
    })
}
