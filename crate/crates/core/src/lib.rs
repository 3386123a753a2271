//! SAT-to-graph transformation of k-SAT instances, Bose-Einstein condensation
//! analysis of the resulting clause networks, and ChainSAT variants that order
//! their clause choices by the clause energies found along the way.
//!
//! Module map:
//!
//! * [`cnf`]: formulas, DIMACS I/O, random k-SAT, evaluation
//! * [`metrics`]: literal frequencies, clause fitness, distance, energy
//! * [`graph`]: the clause network and its energy spectrum
//! * [`builder`]: the S2G and S2G-PA constructions
//! * [`analysis`]: winner, fraction winner, phase labels
//! * [`solver`]: ChainSAT, LC-ChainSAT, NLC-ChainSAT
//! * [`experiments`]: sweeps, polynomial fits, solver benchmarks

pub mod analysis;
pub mod builder;
pub mod cnf;
pub mod experiments;
pub mod graph;
pub mod metrics;
pub mod rng;
pub mod solver;
