use super::{validate_b_connectivity, DirectedGraph, GraphSequence};
use crate::error::{Error, Result};

/// Named graph families used by the experiments.
///
/// Custom schedules use 1-based agent labels, matching the config file.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    /// Bidirectional path `1 - 2 - ... - n`.
    Path {
        n: usize,
    },
    /// Ring `1 -> 2 -> ... -> n -> 1`, optionally with reverse edges.
    Cycle {
        n: usize,
        directed: bool,
    },
    /// Bidirectional `rows x cols` lattice, row-major labels.
    Grid {
        n: usize,
        rows: usize,
        cols: usize,
    },
    Complete {
        n: usize,
    },
    /// Bidirectional star centred on agent 1.
    Star {
        n: usize,
    },
    /// Directed ring plus agent 1 broadcasting to every other agent.
    HubRing {
        n: usize,
    },
    /// Period-n schedule; step `s` activates the bidirectional pair
    /// `(s, s+1 mod n)`.
    RoundRobin {
        n: usize,
    },
    Custom {
        n: usize,
        schedule: Vec<Vec<(usize, usize)>>,
        window: usize,
        validate: bool,
    },
}

impl TopologySpec {
    pub fn n(&self) -> usize {
        match *self {
            TopologySpec::Path { n }
            | TopologySpec::Cycle { n, .. }
            | TopologySpec::Grid { n, .. }
            | TopologySpec::Complete { n }
            | TopologySpec::Star { n }
            | TopologySpec::HubRing { n }
            | TopologySpec::RoundRobin { n }
            | TopologySpec::Custom { n, .. } => n,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TopologySpec::Path { n } => format!("path-{n}"),
            TopologySpec::Cycle { n, directed } => {
                format!("{}cycle-{n}", if *directed { "directed-" } else { "" })
            }
            TopologySpec::Grid { rows, cols, .. } => format!("grid-{rows}x{cols}"),
            TopologySpec::Complete { n } => format!("complete-{n}"),
            TopologySpec::Star { n } => format!("star-{n}"),
            TopologySpec::HubRing { n } => format!("hub-ring-{n}"),
            TopologySpec::RoundRobin { n } => format!("round-robin-{n}"),
            TopologySpec::Custom { n, schedule, .. } => {
                format!("custom-{n}-p{}", schedule.len())
            }
        }
    }
}

pub fn generate_graph_sequence(spec: &TopologySpec) -> Result<GraphSequence> {
    let n = spec.n();
    if n == 0 {
        return Err(Error::InvalidGraph(
            "topology needs at least one agent".into(),
        ));
    }
    let fixed = |g: DirectedGraph| Ok(GraphSequence::fixed(g));
    match spec {
        TopologySpec::Path { .. } => {
            fixed(DirectedGraph::undirected(n, (1..n).map(|i| (i - 1, i)))?)
        }
        TopologySpec::Cycle { directed, .. } => {
            let ring = (0..n).map(|i| (i, (i + 1) % n));
            if *directed {
                fixed(DirectedGraph::new(n, ring)?)
            } else {
                fixed(DirectedGraph::undirected(n, ring)?)
            }
        }
        TopologySpec::Grid { rows, cols, .. } => {
            let (rows, cols) = (*rows, *cols);
            if rows * cols != n {
                return Err(Error::InvalidGraph(format!(
                    "grid {rows}x{cols} has {} nodes, topology declares n={n}",
                    rows * cols
                )));
            }
            let mut pairs = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let u = r * cols + c;
                    if c + 1 < cols {
                        pairs.push((u, u + 1));
                    }
                    if r + 1 < rows {
                        pairs.push((u, u + cols));
                    }
                }
            }
            fixed(DirectedGraph::undirected(n, pairs)?)
        }
        TopologySpec::Complete { .. } => fixed(DirectedGraph::new(
            n,
            (0..n).flat_map(|j| (0..n).map(move |i| (j, i))),
        )?),
        TopologySpec::Star { .. } => fixed(DirectedGraph::undirected(n, (1..n).map(|i| (0, i)))?),
        TopologySpec::HubRing { .. } => {
            let ring = (0..n).map(|i| (i, (i + 1) % n));
            let spokes = (2..n).map(|i| (0, i));
            fixed(DirectedGraph::new(n, ring.chain(spokes))?)
        }
        TopologySpec::RoundRobin { .. } => {
            if n == 1 {
                return fixed(DirectedGraph::empty(1)?);
            }
            let schedule = (0..n)
                .map(|s| DirectedGraph::undirected(n, [(s, (s + 1) % n)]))
                .collect::<Result<Vec<_>>>()?;
            GraphSequence::new(schedule, n)
        }
        TopologySpec::Custom {
            schedule,
            window,
            validate,
            ..
        } => {
            let graphs = schedule
                .iter()
                .enumerate()
                .map(|(step, edges)| {
                    let zero_based = edges
                        .iter()
                        .map(|&(j, i)| {
                            if j == 0 || i == 0 || j > n || i > n {
                                Err(Error::InvalidGraph(format!(
                                    "step {step}: edge ({j}, {i}) outside agents 1..={n}"
                                )))
                            } else {
                                Ok((j - 1, i - 1))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    DirectedGraph::new(n, zero_based)
                })
                .collect::<Result<Vec<_>>>()?;
            let seq = GraphSequence::new(graphs, *window)?;
            if *validate && !validate_b_connectivity(&seq, *window) {
                return Err(Error::InvalidGraph(format!(
                    "custom schedule is not {window}-strongly connected"
                )));
            }
            Ok(seq)
        }
    }
}
