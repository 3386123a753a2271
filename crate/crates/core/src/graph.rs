//! The clause network built by the S2G algorithms and its Bose-gas view.
//!
//! Nodes are clauses, kept in insertion order. Edges are undirected and
//! simple; every link event that hits an existing edge only bumps the edge's
//! multiplicity while the endpoint connectivities still count the event.
//! Each edge remembers which endpoint created it (`from` is the clause that
//! joined the graph, `to` the existing clause it linked to), which gives the
//! directed view the non-integer out-degree bookkeeping needs.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{group_levels, FitnessRecord, ENERGY_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Independent Bernoulli attachment; connectivity is the integer degree.
    #[serde(rename = "s2g")]
    S2g,
    /// Preferential attachment with non-integer out-degree.
    #[serde(rename = "s2gpa")]
    S2gPa,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::S2g => "s2g",
            Mode::S2gPa => "s2gpa",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s.to_ascii_lowercase().as_str() {
            "s2g" => Ok(Mode::S2g),
            "s2gpa" | "s2g-pa" => Ok(Mode::S2gPa),
            other => Err(format!("unknown mode `{other}` (expected s2g or s2gpa)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Index of the clause in the formula.
    pub clause: usize,
    pub fitness: FitnessRecord,
    pub connectivity: f64,
    /// Link events in which this node was the joining endpoint.
    pub out_links: u32,
    /// Link events in which this node was the existing endpoint.
    pub in_links: u32,
    /// Distinct simple edges created by this node.
    pub out_degree: u32,
    /// Distinct simple edges created towards this node.
    pub in_degree: u32,
}

impl Node {
    pub fn degree(&self) -> u32 {
        self.out_degree + self.in_degree
    }

    /// One particle per endpoint of every link event.
    pub fn particles(&self) -> u32 {
        self.out_links + self.in_links
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Clause that created the edge when it joined.
    pub from: usize,
    /// Existing clause it linked to.
    pub to: usize,
    /// Attachment probability at the first link event.
    pub weight: f64,
    /// Number of link events collapsed into this edge.
    pub multiplicity: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClauseGraph {
    mode: Mode,
    theta: f64,
    temperature: f64,
    num_clauses: usize,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    position: Vec<Option<usize>>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl ClauseGraph {
    /// Empty graph over a formula with `num_clauses` clauses.
    pub fn new(mode: Mode, theta: f64, temperature: f64, num_clauses: usize) -> ClauseGraph {
        ClauseGraph {
            mode,
            theta,
            temperature,
            num_clauses,
            nodes: Vec::new(),
            edges: Vec::new(),
            position: vec![None; num_clauses],
            edge_index: HashMap::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Clause count of the source formula.
    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    /// Nodes in insertion order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, position: usize) -> &Node {
        &self.nodes[position]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Insertion position of a clause, if it has joined.
    pub fn position_of(&self, clause: usize) -> Option<usize> {
        self.position.get(clause).copied().flatten()
    }

    pub fn insertion_order(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.clause).collect()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<&Edge> {
        self.edge_index.get(&edge_key(a, b)).map(|&i| &self.edges[i])
    }

    /// Total number of link events, counting multiplicities.
    pub fn link_events(&self) -> u64 {
        self.edges.iter().map(|e| u64::from(e.multiplicity)).sum()
    }

    /// Adds `clause` as a node with zero connectivity and returns its position.
    ///
    /// # Panics
    ///
    /// If the clause is out of range or already present.
    pub fn add_node(&mut self, clause: usize, fitness: FitnessRecord) -> usize {
        assert!(self.position[clause].is_none(), "clause {clause} already in graph");
        let pos = self.nodes.len();
        self.position[clause] = Some(pos);
        self.nodes.push(Node {
            clause,
            fitness,
            connectivity: 0.0,
            out_links: 0,
            in_links: 0,
            out_degree: 0,
            in_degree: 0,
        });
        pos
    }

    pub fn set_fitness(&mut self, position: usize, fitness: FitnessRecord) {
        self.nodes[position].fitness = fitness;
    }

    /// Records one link event from the joining node at `from` to the existing
    /// node at `to` (positions), established with probability `weight`.
    /// Returns true if a new simple edge was created.
    ///
    /// # Panics
    ///
    /// On self-loops.
    pub fn link(&mut self, from: usize, to: usize, weight: f64) -> bool {
        assert_ne!(from, to, "self-loops are not allowed");
        let (cf, ct) = (self.nodes[from].clause, self.nodes[to].clause);
        let created = match self.edge_index.get(&edge_key(cf, ct)) {
            Some(&i) => {
                self.edges[i].multiplicity += 1;
                false
            }
            None => {
                self.edge_index.insert(edge_key(cf, ct), self.edges.len());
                self.edges.push(Edge {
                    from: cf,
                    to: ct,
                    weight,
                    multiplicity: 1,
                });
                self.nodes[from].out_degree += 1;
                self.nodes[to].in_degree += 1;
                true
            }
        };
        self.nodes[from].out_links += 1;
        self.nodes[to].in_links += 1;
        match self.mode {
            Mode::S2g => {
                self.nodes[from].connectivity = f64::from(self.nodes[from].degree());
                self.nodes[to].connectivity = f64::from(self.nodes[to].degree());
            }
            Mode::S2gPa => {
                self.nodes[to].connectivity += 1.0;
                self.nodes[from].connectivity += self.theta;
            }
        }
        created
    }

    /// Stable JSON dump of nodes, edges and energies.
    pub fn to_json(&self) -> String {
        let dump = GraphView {
            mode: self.mode,
            theta: self.theta,
            temperature: self.temperature,
            num_clauses: self.num_clauses,
            nodes: &self.nodes,
            edges: &self.edges,
        };
        let mut out = serde_json::to_string_pretty(&dump).expect("graph serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<ClauseGraph, GraphError> {
        let dump: GraphDump = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        ClauseGraph::try_from(dump)
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Serialize)]
struct GraphView<'a> {
    mode: Mode,
    theta: f64,
    temperature: f64,
    num_clauses: usize,
    nodes: &'a [Node],
    edges: &'a [Edge],
}

#[derive(Deserialize)]
struct GraphDump {
    mode: Mode,
    theta: f64,
    temperature: f64,
    num_clauses: usize,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("invalid graph JSON: {0}")]
    Json(String),
    #[error("node clause {0} is out of range or repeated")]
    BadNode(usize),
    #[error("edge ({0}, {1}) references a missing node or repeats an edge")]
    BadEdge(usize, usize),
}

impl TryFrom<GraphDump> for ClauseGraph {
    type Error = GraphError;

    fn try_from(dump: GraphDump) -> Result<ClauseGraph, GraphError> {
        let mut position = vec![None; dump.num_clauses];
        for (pos, node) in dump.nodes.iter().enumerate() {
            match position.get_mut(node.clause) {
                Some(slot @ None) => *slot = Some(pos),
                _ => return Err(GraphError::BadNode(node.clause)),
            }
        }
        let mut edge_index = HashMap::new();
        for (i, e) in dump.edges.iter().enumerate() {
            let known = |c: usize| position.get(c).copied().flatten().is_some();
            if e.from == e.to
                || !known(e.from)
                || !known(e.to)
                || edge_index.insert(edge_key(e.from, e.to), i).is_some()
            {
                return Err(GraphError::BadEdge(e.from, e.to));
            }
        }
        Ok(ClauseGraph {
            mode: dump.mode,
            theta: dump.theta,
            temperature: dump.temperature,
            num_clauses: dump.num_clauses,
            nodes: dump.nodes,
            edges: dump.edges,
            position,
            edge_index,
        })
    }
}

/// A node seen as a degeneration state of its energy level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerationState {
    pub clause: usize,
    pub particles: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    /// Lowest energy among the level's states.
    pub energy: f64,
    /// States in insertion order.
    pub states: Vec<DegenerationState>,
}

impl EnergyLevel {
    pub fn particles(&self) -> u32 {
        self.states.iter().map(|s| s.particles).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySpectrum {
    /// Levels sorted by ascending energy.
    pub levels: Vec<EnergyLevel>,
}

impl EnergySpectrum {
    pub fn total_particles(&self) -> u64 {
        self.levels.iter().map(|l| u64::from(l.particles())).sum()
    }
}

/// Groups nodes into energy levels and puts one particle per link-event
/// endpoint on each node's state.
pub fn particle_spectrum(graph: &ClauseGraph) -> EnergySpectrum {
    let energies: Vec<f64> = graph.nodes.iter().map(|n| n.fitness.energy).collect();
    let levels = group_levels(&energies, ENERGY_TOLERANCE)
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            EnergyLevel {
                energy: members.iter().map(|&i| energies[i]).fold(f64::INFINITY, f64::min),
                states: members
                    .iter()
                    .map(|&i| DegenerationState {
                        clause: graph.nodes[i].clause,
                        particles: graph.nodes[i].particles(),
                    })
                    .collect(),
            }
        })
        .collect();
    EnergySpectrum { levels }
}

/// Graphviz rendering: nodes labelled with clause index and energy, edges
/// with their weight.
pub fn export_dot(graph: &ClauseGraph) -> String {
    let mut out = String::from("graph clauses {\n");
    for node in &graph.nodes {
        let _ = writeln!(
            out,
            "  c{} [label=\"C{}\\nE={:.4}\"];",
            node.clause, node.clause, node.fitness.energy
        );
    }
    for edge in &graph.edges {
        let _ = writeln!(out, "  c{} -- c{} [label=\"{:.4}\"];", edge.from, edge.to, edge.weight);
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn star(mode: Mode, leaves: usize) -> ClauseGraph {
        let mut g = ClauseGraph::new(mode, 0.33, 1.0, leaves + 1);
        let hub = g.add_node(0, FitnessRecord::fittest(6));
        for leaf in 1..=leaves {
            let pos = g.add_node(leaf, FitnessRecord::new(3, 6, 1.0));
            g.link(pos, hub, 0.5);
        }
        g
    }

    #[test]
    fn single_edge_has_two_particles() {
        let mut g = ClauseGraph::new(Mode::S2g, 0.33, 1.0, 2);
        let a = g.add_node(0, FitnessRecord::fittest(3));
        let b = g.add_node(1, FitnessRecord::fittest(3));
        assert!(g.link(b, a, 1.0));
        let spectrum = particle_spectrum(&g);
        assert_eq!(spectrum.levels.len(), 1);
        let particles: Vec<u32> = spectrum.levels[0].states.iter().map(|s| s.particles).collect();
        assert_eq!(particles, vec![1, 1]);
        assert_eq!(g.node(0).connectivity, 1.0);
        assert_eq!(g.node(1).connectivity, 1.0);
    }

    #[test]
    fn star_hub_holds_all_particles_of_its_links() {
        let g = star(Mode::S2g, 9);
        let spectrum = particle_spectrum(&g);
        assert_eq!(spectrum.levels[0].energy, 0.0);
        assert_eq!(
            spectrum.levels[0].states,
            vec![DegenerationState {
                clause: 0,
                particles: 9
            }]
        );
        assert_eq!(spectrum.levels[1].states.len(), 9);
        assert_eq!(spectrum.total_particles(), 2 * g.link_events());
    }

    #[test]
    fn repeated_links_collapse_into_one_edge() {
        let mut g = ClauseGraph::new(Mode::S2gPa, 0.33, 1.0, 2);
        let a = g.add_node(0, FitnessRecord::fittest(3));
        let b = g.add_node(1, FitnessRecord::fittest(3));
        assert!(g.link(b, a, 0.25));
        assert!(!g.link(b, a, 0.75));
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].multiplicity, 2);
        assert_eq!(g.edges()[0].weight, 0.25);
        assert_eq!(g.node(a).connectivity, 2.0);
        assert!((g.node(b).connectivity - 0.66).abs() < 1e-12);
        assert_eq!(g.node(b).degree(), 1);
        assert_eq!(particle_spectrum(&g).total_particles(), 4);
    }

    #[test]
    #[should_panic(expected = "self-loops")]
    fn self_loops_are_rejected() {
        let mut g = ClauseGraph::new(Mode::S2g, 0.33, 1.0, 1);
        let a = g.add_node(0, FitnessRecord::fittest(3));
        g.link(a, a, 1.0);
    }

    #[test]
    fn json_round_trip() {
        let g = star(Mode::S2gPa, 4);
        let text = g.to_json();
        let back = ClauseGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_rejects_inconsistent_graphs() {
        let g = star(Mode::S2g, 2);
        let text = g.to_json().replace("\"num_clauses\": 3", "\"num_clauses\": 2");
        assert_eq!(ClauseGraph::from_json(&text), Err(GraphError::BadNode(2)));
        assert!(matches!(ClauseGraph::from_json("{"), Err(GraphError::Json(_))));
    }

    #[test]
    fn dot_output() {
        let empty = ClauseGraph::new(Mode::S2g, 0.33, 1.0, 0);
        assert_eq!(export_dot(&empty), "graph clauses {\n}\n");
        let mut g = ClauseGraph::new(Mode::S2g, 0.33, 1.0, 2);
        let a = g.add_node(0, FitnessRecord::fittest(3));
        let b = g.add_node(1, FitnessRecord::fittest(3));
        g.link(b, a, 1.0);
        let dot = export_dot(&g);
        assert_eq!(dot.matches(" -- ").count(), 1);
        assert!(dot.contains("c1 -- c0 [label=\"1.0000\"];"));
    }
}
