//! Exact minimum-weight perfect matching decoder with unit edge weights.
//!
//! X and Z errors are decoded independently: Z-kind events are matched on the
//! Z detector graph to produce X corrections, and vice versa. Each event gets a
//! private boundary twin; twins match each other at zero cost, so any event may
//! drain to the boundary without forcing another to.

pub mod blossom;

use std::collections::VecDeque;

use crate::error::Result;
use crate::lattice::{CheckKind, Lattice, Pauli, PauliFrame, Syndrome};

pub use blossom::{max_weight_matching, min_weight_perfect_matching};

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorEdge {
    pub a: usize,
    /// Equal to the boundary node id for qubits in a single check.
    pub b: usize,
    pub qubit: usize,
}

/// Checks of one kind as nodes, plus a virtual boundary node; one edge per
/// data qubit.
#[derive(Debug, Clone)]
pub struct DetectorGraph {
    kind: CheckKind,
    /// Global check ids of the nodes, ascending.
    nodes: Vec<usize>,
    local: Vec<Option<usize>>,
    edges: Vec<DetectorEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    dist: Vec<Vec<u32>>,
    /// Breadth-first parent `(node, qubit)` per source and target.
    parent: Vec<Vec<(usize, usize)>>,
}

impl DetectorGraph {
    pub fn new(lat: &Lattice, kind: CheckKind) -> Self {
        let nodes: Vec<usize> = lat.checks_of(kind).map(|c| c.id).collect();
        let mut local = vec![None; lat.check_count()];
        for (i, &c) in nodes.iter().enumerate() {
            local[c] = Some(i);
        }
        let boundary = nodes.len();
        let mut edges = Vec::with_capacity(lat.data_count());
        for q in 0..lat.data_count() {
            let owners: Vec<usize> = lat
                .checks_containing(q, kind)
                .iter()
                .map(|&c| local[c].unwrap())
                .collect();
            let (a, b) = match owners.as_slice() {
                [a] => (*a, boundary),
                [a, b] => (*a.min(b), *a.max(b)),
                _ => unreachable!("qubit {q} lies in {} {kind}-checks", owners.len()),
            };
            edges.push(DetectorEdge { a, b, qubit: q });
        }
        let mut adjacency = vec![Vec::new(); boundary + 1];
        for e in &edges {
            adjacency[e.a].push((e.b, e.qubit));
            adjacency[e.b].push((e.a, e.qubit));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let mut dist = Vec::with_capacity(boundary);
        let mut parent = Vec::with_capacity(boundary);
        for src in 0..boundary {
            let mut dd = vec![UNREACHABLE; boundary + 1];
            let mut pp = vec![(usize::MAX, usize::MAX); boundary + 1];
            dd[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                // Paths never pass through the boundary.
                if u == boundary {
                    continue;
                }
                for &(v, q) in &adjacency[u] {
                    if dd[v] == UNREACHABLE {
                        dd[v] = dd[u] + 1;
                        pp[v] = (u, q);
                        queue.push_back(v);
                    }
                }
            }
            dist.push(dd);
            parent.push(pp);
        }
        Self {
            kind,
            nodes,
            local,
            edges,
            adjacency,
            dist,
            parent,
        }
    }

    pub fn kind(&self) -> CheckKind {
        self.kind
    }

    /// Node ids `0..node_count()-1` are checks; the last node is the boundary.
    pub fn node_count(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn boundary(&self) -> usize {
        self.nodes.len()
    }

    pub fn check_id(&self, node: usize) -> usize {
        self.nodes[node]
    }

    pub fn node_of(&self, check_id: usize) -> Option<usize> {
        self.local.get(check_id).copied().flatten()
    }

    pub fn edges(&self) -> &[DetectorEdge] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    /// Shortest-path length between two nodes; `src` must be a check node.
    pub fn distance(&self, src: usize, dst: usize) -> u32 {
        self.dist[src][dst]
    }

    /// Data qubits along the canonical shortest path from `src` to `dst`.
    pub fn path(&self, src: usize, dst: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dist[src][dst] as usize);
        let mut v = dst;
        while v != src {
            let (u, q) = self.parent[src][v];
            assert!(u != usize::MAX, "no path from {src} to {dst}");
            out.push(q);
            v = u;
        }
        out
    }
}

/// Events and boundary twins with their pairwise costs. Node `i < m` is event
/// `i`; node `m + i` is its twin.
#[derive(Debug, Clone)]
pub struct MatchingInstance<'g> {
    graph: &'g DetectorGraph,
    /// Detector-graph node of each event.
    events: Vec<usize>,
    weights: Vec<Vec<Option<i64>>>,
}

impl<'g> MatchingInstance<'g> {
    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn node_count(&self) -> usize {
        2 * self.events.len()
    }

    /// `None` marks a forbidden pair.
    pub fn weight(&self, i: usize, j: usize) -> Option<i64> {
        self.weights[i][j]
    }

    pub fn weights(&self) -> &[Vec<Option<i64>>] {
        &self.weights
    }

    /// Data qubits realising the pair `(i, j)` in a matching: a shortest path
    /// between two events, the boundary path for an event and its twin, and
    /// nothing for two twins.
    pub fn pair_path(&self, i: usize, j: usize) -> Vec<usize> {
        let m = self.events.len();
        let (i, j) = (i.min(j), i.max(j));
        match (i < m, j < m) {
            (true, true) => self.graph.path(self.events[i], self.events[j]),
            (true, false) => {
                debug_assert_eq!(j, m + i);
                self.graph.path(self.events[i], self.graph.boundary())
            }
            _ => Vec::new(),
        }
    }
}

/// Builds the matching instance for `events` (global check ids of the graph's kind).
pub fn distances<'g>(graph: &'g DetectorGraph, events: &[usize]) -> MatchingInstance<'g> {
    let nodes: Vec<usize> = events
        .iter()
        .map(|&c| {
            graph
                .node_of(c)
                .expect("event is not a check of this graph's kind")
        })
        .collect();
    let m = nodes.len();
    let mut weights = vec![vec![None; 2 * m]; 2 * m];
    let finite = |d: u32| (d != UNREACHABLE).then_some(d as i64);
    for i in 0..m {
        for j in i + 1..m {
            let w = finite(graph.distance(nodes[i], nodes[j]));
            weights[i][j] = w;
            weights[j][i] = w;
        }
        let b = finite(graph.distance(nodes[i], graph.boundary()));
        weights[i][m + i] = b;
        weights[m + i][i] = b;
        for j in i + 1..m {
            weights[m + i][m + j] = Some(0);
            weights[m + j][m + i] = Some(0);
        }
    }
    MatchingInstance {
        graph,
        events: nodes,
        weights,
    }
}

/// Minimum-weight perfect matching of an instance, as pairs `(i, j)` with `i < j`.
pub fn mwpm(inst: &MatchingInstance<'_>) -> Result<Vec<(usize, usize)>> {
    let n = inst.node_count();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(w) = inst.weights[i][j] {
                edges.push((i, j, w));
            }
        }
    }
    let mate = min_weight_perfect_matching(n, &edges)?;
    Ok((0..n)
        .filter(|&i| mate[i] > i)
        .map(|i| (i, mate[i]))
        .collect())
}

#[derive(Debug, Clone)]
pub struct MatchingDecoder {
    n: usize,
    /// Z-kind graph (X corrections) and X-kind graph (Z corrections).
    graphs: [DetectorGraph; 2],
}

impl MatchingDecoder {
    pub fn new(lat: &Lattice) -> Self {
        Self {
            n: lat.data_count(),
            graphs: [
                DetectorGraph::new(lat, CheckKind::Z),
                DetectorGraph::new(lat, CheckKind::X),
            ],
        }
    }

    pub fn graph(&self, kind: CheckKind) -> &DetectorGraph {
        match kind {
            CheckKind::Z => &self.graphs[0],
            CheckKind::X => &self.graphs[1],
        }
    }

    pub fn decode(&self, syndrome: &Syndrome) -> PauliFrame {
        let mut out = PauliFrame::identity(self.n);
        for graph in &self.graphs {
            let events: Vec<usize> = syndrome
                .events()
                .filter(|&c| graph.node_of(c).is_some())
                .collect();
            if events.is_empty() {
                continue;
            }
            let pauli = match graph.kind() {
                CheckKind::Z => Pauli::X,
                CheckKind::X => Pauli::Z,
            };
            let inst = distances(graph, &events);
            // Every event can always reach its twin, so a perfect matching exists.
            let pairs = mwpm(&inst).expect("boundary twins guarantee a perfect matching");
            for (i, j) in pairs {
                for q in inst.pair_path(i, j) {
                    out.apply(q, pauli);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LogicalClass;

    #[test]
    fn d3_z_graph_structure() {
        let lat = Lattice::new(3).unwrap();
        let g = DetectorGraph::new(&lat, CheckKind::Z);
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.edges().len(), 9);
        let e4 = g.edges()[4];
        assert_eq!((g.check_id(e4.a), g.check_id(e4.b)), (0, 3));
        assert_eq!(g.edges()[2].b, g.boundary());
    }

    #[test]
    fn boundary_distance_closed_form() {
        for d in [3, 5, 7, 9] {
            let lat = Lattice::new(d).unwrap();
            for kind in [CheckKind::Z, CheckKind::X] {
                let g = DetectorGraph::new(&lat, kind);
                assert_eq!(g.edges().len(), d * d);
                for node in 0..g.boundary() {
                    let (pr, pc) = lat.check(g.check_id(node)).plaquette;
                    let x = if kind == CheckKind::Z { pr } else { pc };
                    let want = (x + 1).min(d as i32 - 1 - x) as u32;
                    assert_eq!(g.distance(node, g.boundary()), want);
                    assert_eq!(g.path(node, g.boundary()).len() as u32, want);
                }
            }
        }
    }

    #[test]
    fn instance_shapes() {
        let lat = Lattice::new(5).unwrap();
        let g = DetectorGraph::new(&lat, CheckKind::Z);
        let inst = distances(&g, &[]);
        assert_eq!(inst.node_count(), 0);
        assert!(mwpm(&inst).unwrap().is_empty());

        // Two diagonal bulk Z checks share one qubit.
        let a = lat.check_at(1, 1).unwrap();
        let b = lat.check_at(2, 2).unwrap();
        let inst = distances(&g, &[a, b]);
        assert_eq!(inst.weight(0, 1), Some(1));
        assert_eq!(inst.weight(0, 2), Some(2));
        assert_eq!(inst.weight(1, 3), Some(2));
        assert_eq!(inst.weight(0, 3), None);
        assert_eq!(inst.weight(2, 3), Some(0));
        assert_eq!(mwpm(&inst).unwrap(), vec![(0, 1), (2, 3)]);

        let inst = distances(&g, &[a]);
        assert_eq!(mwpm(&inst).unwrap(), vec![(0, 1)]);
    }

    #[test]
    fn corrects_all_single_qubit_errors_d3() {
        let lat = Lattice::new(3).unwrap();
        let dec = MatchingDecoder::new(&lat);
        assert!(dec.decode(&lat.zero_syndrome()).is_identity());
        for q in 0..9 {
            for p in Pauli::ALL {
                let err = PauliFrame::single(9, q, p);
                let s = lat.syndrome_of(&err).unwrap();
                let corr = dec.decode(&s);
                assert_eq!(lat.syndrome_of(&corr).unwrap(), s);
                assert_eq!(
                    lat.residual_class(&err.compose(&corr).unwrap()).unwrap(),
                    LogicalClass::I
                );
            }
        }
    }

    #[test]
    fn metric_is_symmetric_and_triangular() {
        let lat = Lattice::new(7).unwrap();
        for kind in [CheckKind::Z, CheckKind::X] {
            let g = DetectorGraph::new(&lat, kind);
            let m = g.boundary();
            for a in 0..m {
                for b in 0..m {
                    assert_eq!(g.distance(a, b), g.distance(b, a));
                    for c in 0..m {
                        assert!(g.distance(a, c) <= g.distance(a, b) + g.distance(b, c));
                    }
                }
            }
        }
    }
}
