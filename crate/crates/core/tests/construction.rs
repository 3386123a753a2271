use std::collections::VecDeque;

use s2g::analysis::{classify, winner, Phase};
use s2g::builder::{build, build_observed, BuilderConfig, FirstClauseRule};
use s2g::cnf::{generate_random, parse_dimacs, Formula};
use s2g::graph::{export_dot, particle_spectrum, ClauseGraph, Mode};
use s2g::metrics::{clause_fitness, FitnessRecord, FrequencyTable};

fn config(mode: Mode, seed: u64) -> BuilderConfig {
    BuilderConfig {
        mode,
        ..BuilderConfig::default()
    }
    .with_seed(seed)
}

fn sample(name: &str) -> Formula {
    let path = format!("{}/tests/data/{name}.cnf", env!("CARGO_MANIFEST_DIR"));
    parse_dimacs(&std::fs::read(path).unwrap()).unwrap()
}

fn components(g: &ClauseGraph) -> usize {
    let m = g.nodes().len();
    let mut adj = vec![Vec::new(); m];
    for e in g.edges() {
        let (a, b) = (g.position_of(e.from).unwrap(), g.position_of(e.to).unwrap());
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; m];
    let mut count = 0;
    for start in 0..m {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    count
}

#[test]
fn probabilities_sum_to_one_every_iteration() {
    for mode in [Mode::S2g, Mode::S2gPa] {
        for seed in 0..10 {
            let f = generate_random(seed, 3, 30, 128).unwrap();
            build_observed(&f, &config(mode, seed), |step| {
                let sum: f64 = step.probabilities.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
                assert_eq!(step.probabilities.len(), step.iteration - 1);
                assert!(step.probabilities.iter().all(|&p| (0.0..=1.0).contains(&p)));
            })
            .unwrap();
        }
    }
}

#[test]
fn pa_bookkeeping_holds_at_every_step() {
    for rho in 1..=3 {
        for seed in 0..8 {
            let f = generate_random(seed, 3, 25, 100).unwrap();
            let cfg = BuilderConfig {
                rho,
                ..config(Mode::S2gPa, seed)
            };
            let g = build_observed(&f, &cfg, |step| {
                for node in step.graph.nodes() {
                    let expected = 0.33 * f64::from(node.out_links) + f64::from(node.in_links);
                    assert!((node.connectivity - expected).abs() < 1e-9);
                }
            })
            .unwrap();
            for node in &g.nodes()[1..] {
                assert!(node.out_degree >= 1 && node.out_degree <= rho);
            }
            assert_eq!(components(&g), 1);
            assert_eq!(g.link_events(), 1 + 98 * u64::from(rho));
        }
    }
}

#[test]
fn s2g_adds_at_most_one_edge_per_existing_node() {
    for seed in 0..10 {
        let f = generate_random(seed, 3, 20, 60).unwrap();
        let mut edges = 0;
        build_observed(&f, &config(Mode::S2g, seed), |step| {
            let added = step.graph.edges().len() - edges;
            assert!(added < step.iteration);
            edges = step.graph.edges().len();
            for node in step.graph.nodes() {
                assert_eq!(node.connectivity, f64::from(node.degree()));
            }
        })
        .unwrap();
    }
}

#[test]
fn final_energies_are_global() {
    let f = generate_random(77, 3, 30, 120).unwrap();
    let table = FrequencyTable::global(&f);
    let fitness: Vec<u64> = f.clauses().iter().map(|c| clause_fitness(&table, c)).collect();
    let max = *fitness.iter().max().unwrap();
    for mode in [Mode::S2g, Mode::S2gPa] {
        let g = build(&f, &config(mode, 3)).unwrap();
        for node in g.nodes() {
            let expected = FitnessRecord::new(fitness[node.clause], max, 1.0);
            assert_eq!(node.fitness.raw, expected.raw);
            assert!((node.fitness.energy - expected.energy).abs() < 1e-12);
        }
        let mut order = g.insertion_order();
        order.sort_unstable();
        assert_eq!(order, (0..120).collect::<Vec<_>>());
    }
}

#[test]
fn spectrum_conserves_particles() {
    for name in ["s2g_bec_10", "s2g_bec_20", "s2g_bec_30"] {
        let f = sample(name);
        for seed in 0..10 {
            let g = build(&f, &config(Mode::S2g, seed)).unwrap();
            let spectrum = particle_spectrum(&g);
            assert_eq!(spectrum.total_particles(), 2 * g.link_events());
            let states = spectrum.levels.iter().map(|l| l.states.len()).sum::<usize>();
            assert_eq!(states, f.num_clauses());
            for w in spectrum.levels.windows(2) {
                assert!(w[0].energy < w[1].energy);
            }
            // in S2G particles are the degree, so the fullest state is the winner
            let most = spectrum
                .levels
                .iter()
                .flat_map(|l| &l.states)
                .map(|s| s.particles)
                .max()
                .unwrap();
            let hub = g.node(winner(&g).unwrap());
            assert_eq!(hub.particles(), most);
        }
    }
}

#[test]
fn fit_get_rich_sample_mostly_fit_get_rich() {
    let f = sample("s2g_fgr_20");
    let fgr = (0..30)
        .filter(|&seed| {
            let g = build(&f, &config(Mode::S2g, seed)).unwrap();
            classify(&g).map(|l| l.label == Phase::FitGetRich).unwrap_or(false)
        })
        .count();
    assert!(fgr > 15, "{fgr} of 30");
}

#[test]
fn pa_samples_have_no_isolated_nodes() {
    for name in ["s2gpa_bec_10", "s2gpa_bec_20", "s2gpa_bec_30"] {
        let f = sample(name);
        for seed in 0..10 {
            let g = build(&f, &config(Mode::S2gPa, seed)).unwrap();
            let spectrum = particle_spectrum(&g);
            assert!(spectrum.levels.iter().flat_map(|l| &l.states).all(|s| s.particles > 0));
        }
    }
}

#[test]
fn json_round_trip_and_determinism() {
    let f = generate_random(4, 3, 20, 70).unwrap();
    for mode in [Mode::S2g, Mode::S2gPa] {
        let cfg = BuilderConfig {
            first_clause: FirstClauseRule::GlobalFittest,
            ..config(mode, 12)
        };
        let g = build(&f, &cfg).unwrap();
        let json = g.to_json();
        assert_eq!(build(&f, &cfg).unwrap().to_json(), json);
        let back = ClauseGraph::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert_eq!(back.nodes(), g.nodes());
    }
}

// Minimal grammar for the exported subset of DOT: a header line, node
// statements, edge statements, a closing brace.
fn check_dot(text: &str, g: &ClauseGraph) {
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.first(), Some(&"graph clauses {"));
    assert_eq!(lines.last(), Some(&"}"));
    let (mut nodes, mut edges) = (Vec::new(), 0);
    for line in &lines[1..lines.len() - 1] {
        let stmt = line.trim().strip_suffix(';').expect("statement ends with ;");
        let (head, attrs) = stmt.split_once(" [label=\"").expect("label attribute");
        let label = attrs.strip_suffix("\"]").expect("closed label");
        assert!(!label.contains('"'));
        let ident = |s: &str| {
            s.strip_prefix('c')
                .and_then(|d| d.parse::<usize>().ok())
                .expect("c<index>")
        };
        match head.split_once(" -- ") {
            Some((a, b)) => {
                let (a, b) = (ident(a), ident(b));
                assert!(nodes.contains(&a) && nodes.contains(&b), "edge before its nodes");
                assert!(label.parse::<f64>().unwrap() > 0.0);
                edges += 1;
            }
            None => {
                let c = ident(head);
                assert!(label.starts_with(&format!("C{c}\\nE=")));
                nodes.push(c);
            }
        }
    }
    assert_eq!(nodes.len(), g.nodes().len());
    assert_eq!(edges, g.edges().len());
}

#[test]
fn dot_export_is_well_formed() {
    for mode in [Mode::S2g, Mode::S2gPa] {
        let f = sample("s2g_bec_20");
        let g = build(&f, &config(mode, 1)).unwrap();
        check_dot(&export_dot(&g), &g);
    }
}
