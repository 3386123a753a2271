//! Winner identification and Bose-Einstein condensation classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ClauseGraph;

/// Lower bound (inclusive) of the fraction winner for a full condensate.
pub const FULL_BEC_THRESHOLD: f64 = 0.90;
/// Lower bound (inclusive) of the fraction winner for a partial condensate.
pub const PARTIAL_BEC_THRESHOLD: f64 = 0.75;

/// Connectivities closer than this count as equal when picking the winner, so
/// that float accumulation order cannot reorder exact ties.
const CONNECTIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph has no edges")]
    NoEdges,
    #[error("statistics need at least two nodes")]
    TooFewNodes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    FullBec,
    PartialBec,
    FitGetRich,
}

impl Phase {
    pub fn from_fraction(fraction_winner: f64) -> Phase {
        if fraction_winner >= FULL_BEC_THRESHOLD {
            Phase::FullBec
        } else if fraction_winner >= PARTIAL_BEC_THRESHOLD {
            Phase::PartialBec
        } else {
            Phase::FitGetRich
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::FullBec => "full_bec",
            Phase::PartialBec => "partial_bec",
            Phase::FitGetRich => "fit_get_rich",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseLabel {
    pub label: Phase,
    pub fraction_winner: f64,
}

/// Insertion position of the node with maximal connectivity; the earliest
/// inserted node wins ties.
pub fn winner(graph: &ClauseGraph) -> Result<usize, AnalysisError> {
    let nodes = graph.nodes();
    if nodes.is_empty() {
        return Err(AnalysisError::EmptyGraph);
    }
    let mut best = 0;
    for (pos, node) in nodes.iter().enumerate().skip(1) {
        if node.connectivity > nodes[best].connectivity + CONNECTIVITY_TOLERANCE {
            best = pos;
        }
    }
    Ok(best)
}

/// Share of simple edges incident to the winner.
pub fn fraction_winner(graph: &ClauseGraph) -> Result<f64, AnalysisError> {
    let w = winner(graph)?;
    if graph.edges().is_empty() {
        return Err(AnalysisError::NoEdges);
    }
    let hub = graph.node(w).clause;
    let incident = graph.edges().iter().filter(|e| e.from == hub || e.to == hub).count();
    Ok(incident as f64 / graph.edges().len() as f64)
}

pub fn classify(graph: &ClauseGraph) -> Result<PhaseLabel, AnalysisError> {
    let fraction_winner = fraction_winner(graph)?;
    Ok(PhaseLabel {
        label: Phase::from_fraction(fraction_winner),
        fraction_winner,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonWinnerStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean and population standard deviation of the connectivity of every node
/// except the winner.
pub fn nonwinner_stats(graph: &ClauseGraph) -> Result<NonWinnerStats, AnalysisError> {
    if graph.nodes().len() < 2 {
        return Err(AnalysisError::TooFewNodes);
    }
    let w = winner(graph)?;
    Ok(population_stats(
        graph
            .nodes()
            .iter()
            .enumerate()
            .filter(|&(pos, _)| pos != w)
            .map(|(_, node)| node.connectivity),
    ))
}

/// Welford's running mean and population standard deviation. Constant input
/// yields exactly zero spread. Empty input yields zeros.
pub fn population_stats(values: impl IntoIterator<Item = f64>) -> NonWinnerStats {
    let (mut count, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in values {
        count += 1.0;
        let delta = x - mean;
        mean += delta / count;
        m2 += delta * (x - mean);
    }
    if count == 0.0 {
        return NonWinnerStats { mean: 0.0, std: 0.0 };
    }
    NonWinnerStats {
        mean,
        std: (m2 / count).max(0.0).sqrt(),
    }
}

/// Everything the `classify` command reports for one graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub fraction_winner: f64,
    pub label: Phase,
    pub nonwinner_mean: f64,
    pub nonwinner_std: f64,
}

pub fn summarize(graph: &ClauseGraph) -> Result<GraphSummary, AnalysisError> {
    let label = classify(graph)?;
    let stats = nonwinner_stats(graph)?;
    Ok(GraphSummary {
        fraction_winner: label.fraction_winner,
        label: label.label,
        nonwinner_mean: stats.mean,
        nonwinner_std: stats.std,
    })
}
