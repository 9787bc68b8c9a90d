//! Directed communication graphs, their push-sum weight matrices, and the
//! mixing constants that govern how fast products of those matrices
//! approach rank one.
//!
//! Agents are indexed from 0 internally. An edge `(j, i)` means agent `j`
//! can send to agent `i`. Self-communication is implicit and never stored.

mod constants;
mod topology;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use constants::{lemma_constants, GraphConstants};
pub use topology::{generate_graph_sequence, TopologySpec};

/// Tolerance used for stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph from `(from, to)` pairs. Self-pairs are dropped and
    /// duplicates collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({j}, {i}) out of range for {n} nodes"
                )));
            }
            if j != i {
                set.insert((j, i));
            }
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(j, i) in &set {
            out_adj[j].push(i);
            in_adj[i].push(j);
        }
        for v in in_adj.iter_mut() {
            v.sort_unstable();
        }
        Ok(Self {
            n,
            edges: set,
            out_adj,
            in_adj,
        })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    /// Adds both `(a, b)` and `(b, a)` for every pair.
    pub fn undirected(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let both: Vec<_> = pairs
            .into_iter()
            .flat_map(|(a, b)| [(a, b), (b, a)])
            .collect();
        Self::new(n, both)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Number of non-self out-edges.
    pub fn out_degree(&self, j: usize) -> usize {
        self.out_adj[j].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    /// Senders to `i`, ascending.
    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out_adj[j]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n)
            .map(|v| self.out_degree(v).max(self.in_degree(v)))
            .max()
            .unwrap_or(0)
    }

    /// Every in-degree and out-degree equals one common value.
    pub fn is_regular(&self) -> bool {
        let d = self.out_degree(0);
        (0..self.n).all(|v| self.out_degree(v) == d && self.in_degree(v) == d)
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges
            .iter()
            .all(|&(j, i)| self.edges.contains(&(i, j)))
    }

    pub fn union(&self, other: &DirectedGraph) -> Result<DirectedGraph> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        DirectedGraph::new(self.n, self.edges().chain(other.edges()))
    }

    pub fn is_strongly_connected(&self) -> bool {
        let reach = |adj: &[Vec<usize>]| {
            let mut seen = vec![false; self.n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            count == self.n
        };
        reach(&self.out_adj) && reach(&self.in_adj)
    }
}

pub fn is_strongly_connected(g: &DirectedGraph) -> bool {
    g.is_strongly_connected()
}

/// Nonnegative mixing matrix whose columns sum to one and whose diagonal is
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    // sparse rows for the simulation loop: (column, weight)
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    /// Push-sum weights: every node splits its mass evenly between itself
    /// and its out-neighbours, `[A]_{ij} = 1/(d_j + 1)`.
    pub fn from_graph(g: &DirectedGraph) -> Self {
        let n = g.n();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let w = 1.0 / (g.out_degree(j) as f64 + 1.0);
            m[(j, j)] = w;
            for &i in g.out_neighbors(j) {
                m[(i, j)] = w;
            }
        }
        Self::wrap(m)
    }

    /// Validates an arbitrary matrix against the column-stochastic contract.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidMatrix(
                "entries must be finite and nonnegative".into(),
            ));
        }
        for j in 0..m.ncols() {
            let s: f64 = m.column(j).sum();
            if (s - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidMatrix(format!("column {j} sums to {s}")));
            }
            if m[(j, j)] <= 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "diagonal entry {j} is not positive"
                )));
            }
        }
        Ok(Self::wrap(m))
    }

    /// Lazy Metropolis weights `1/(2 max(d_i, d_j))` on a symmetric graph,
    /// remainder on the diagonal. Doubly stochastic.
    pub fn lazy_metropolis(g: &DirectedGraph) -> Result<Self> {
        if !g.is_symmetric() {
            return Err(Error::InvalidGraph(
                "lazy Metropolis weights need a symmetric graph".into(),
            ));
        }
        let n = g.n();
        let mut m = DMatrix::zeros(n, n);
        for (j, i) in g.edges() {
            let d = g.out_degree(i).max(g.out_degree(j)) as f64;
            m[(i, j)] = 1.0 / (2.0 * d);
        }
        for i in 0..n {
            let off: f64 = m.row(i).sum();
            m[(i, i)] = 1.0 - off;
        }
        Self::from_matrix(m)
    }

    fn wrap(entries: DMatrix<f64>) -> Self {
        let n = entries.nrows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| entries[(i, j)] != 0.0)
                    .map(|j| (j, entries[(i, j)]))
                    .collect()
            })
            .collect();
        Self { entries, rows }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Nonzero `(column, weight)` pairs of row `i`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `out = A v`
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            *o = row.iter().map(|&(j, w)| w * v[j]).sum();
        }
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        (0..self.n()).all(|i| (self.entries.row(i).sum() - 1.0).abs() <= STOCHASTIC_TOL)
    }
}

/// Periodic schedule of graphs with a claimed connectivity window `B`.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    n: usize,
    schedule: Vec<DirectedGraph>,
    matrices: Vec<WeightMatrix>,
    window: usize,
}

impl GraphSequence {
    pub fn new(schedule: Vec<DirectedGraph>, window: usize) -> Result<Self> {
        let first = schedule
            .first()
            .ok_or_else(|| Error::InvalidGraph("schedule is empty".into()))?;
        let n = first.n();
        if let Some(g) = schedule.iter().find(|g| g.n() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: g.n(),
            });
        }
        if window == 0 {
            return Err(Error::InvalidArgument(
                "connectivity window must be >= 1".into(),
            ));
        }
        let matrices = schedule.iter().map(WeightMatrix::from_graph).collect();
        Ok(Self {
            n,
            schedule,
            matrices,
            window,
        })
    }

    pub fn fixed(g: DirectedGraph) -> Self {
        Self::new(vec![g], 1).expect("single graph schedule is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> usize {
        self.schedule.len()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_static(&self) -> bool {
        self.schedule.len() == 1
    }

    pub fn schedule(&self) -> &[DirectedGraph] {
        &self.schedule
    }

    pub fn graph_at(&self, k: usize) -> &DirectedGraph {
        &self.schedule[k % self.schedule.len()]
    }

    pub fn matrix_at(&self, k: usize) -> &WeightMatrix {
        &self.matrices[k % self.matrices.len()]
    }

    /// Every graph of the schedule is regular and the window is one.
    pub fn is_regular(&self) -> bool {
        self.window == 1 && self.schedule.iter().all(DirectedGraph::is_regular)
    }

    pub fn max_degree(&self) -> usize {
        self.schedule
            .iter()
            .map(DirectedGraph::max_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn validate_connectivity(&self) -> bool {
        validate_b_connectivity(self, self.window)
    }

    /// `A_k A_{k-1} ... A_t`
    pub fn matrix_product(&self, k: usize, t: usize) -> Result<DMatrix<f64>> {
        if k < t {
            return Err(Error::InvalidArgument(format!(
                "product needs k >= t, got k={k}, t={t}"
            )));
        }
        let mut prod = self.matrix_at(t).entries().clone();
        for s in t + 1..=k {
            prod = self.matrix_at(s).entries() * prod;
        }
        Ok(prod)
    }

    /// Minimum row sum of `A_{k:0}` over `0 <= k <= horizon`.
    pub fn empirical_delta(&self, horizon: usize) -> f64 {
        let mut v = vec![1.0; self.n];
        let mut next = vec![0.0; self.n];
        let mut best = f64::INFINITY;
        for k in 0..=horizon {
            self.matrix_at(k).apply_into(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
            best = v.iter().copied().fold(best, f64::min);
        }
        best
    }

    /// Mixing constants appropriate for this sequence: the regular-case
    /// constants when every scheduled graph is regular with window one.
    pub fn constants(&self) -> GraphConstants {
        lemma_constants(self.n, self.window, self.is_regular())
            .expect("regular sequences always have window one")
    }
}

/// True iff the union graph over every aligned window `[kB, (k+1)B - 1]` is
/// strongly connected. Windows are checked over one full cycle of
/// `lcm(period, B)` steps.
pub fn validate_b_connectivity(seq: &GraphSequence, b: usize) -> bool {
    if b == 0 {
        return false;
    }
    let p = seq.period();
    let cycle = p / gcd(p, b) * b;
    (0..cycle / b).all(|w| {
        let start = w * b;
        let mut union = seq.graph_at(start).clone();
        for s in start + 1..start + b {
            union = union
                .union(seq.graph_at(s))
                .expect("same n within a sequence");
        }
        union.is_strongly_connected()
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest pairwise gap between entries of the same row:
/// `max_{i,j,j'} |m_ij - m_ij'|`.
pub fn column_spread(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| {
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Column sums of a matrix, used to check stochasticity closure.
pub fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    m.row_sum().transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cycle(n: usize) -> DirectedGraph {
        DirectedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn weight_matrix_single_edge() {
        let g = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let a = WeightMatrix::from_graph(&g);
        assert_eq!(a.get(0, 0), 0.5);
        assert_eq!(a.get(1, 0), 0.5);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 1), 1.0);
    }

    #[test]
    fn weight_matrix_empty_graph_is_identity() {
        let a = WeightMatrix::from_graph(&DirectedGraph::empty(3).unwrap());
        assert_eq!(a.entries(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn weight_matrix_directed_cycle() {
        let a = WeightMatrix::from_graph(&cycle(3));
        for j in 0..3 {
            assert_eq!(a.get(j, j), 0.5);
            assert_eq!(a.get((j + 1) % 3, j), 0.5);
            assert_eq!(a.get((j + 2) % 3, j), 0.0);
        }
        assert!(a.is_doubly_stochastic());
    }

    #[test]
    fn self_loops_are_not_stored() {
        let g = DirectedGraph::new(2, [(0, 0), (0, 1), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.out_degree(0), 1);
    }

    #[test]
    fn out_of_range_edge_rejected() {
        assert!(DirectedGraph::new(2, [(0, 2)]).is_err());
        assert!(DirectedGraph::new(0, []).is_err());
    }

    #[test]
    fn strong_connectivity_examples() {
        assert!(cycle(4).is_strongly_connected());
        let path = DirectedGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(!path.is_strongly_connected());
        let k2 = DirectedGraph::new(2, [(0, 1), (1, 0)]).unwrap();
        assert!(k2.is_strongly_connected());
        assert!(DirectedGraph::empty(1).unwrap().is_strongly_connected());
    }

    #[test]
    fn b_connectivity_examples() {
        assert!(GraphSequence::fixed(cycle(3)).validate_connectivity());

        let fwd = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let back = DirectedGraph::new(2, [(1, 0)]).unwrap();
        let alternating = GraphSequence::new(vec![fwd.clone(), back], 2).unwrap();
        assert!(validate_b_connectivity(&alternating, 2));
        // windows of length one never see both directions
        assert!(!validate_b_connectivity(&alternating, 1));

        let same = GraphSequence::new(vec![fwd.clone(), fwd], 2).unwrap();
        assert!(!validate_b_connectivity(&same, 2));
    }

    #[test]
    fn b_connectivity_misaligned_window() {
        // period 3, B = 2: windows {0,1}, {2,0}, {1,2} must all connect
        let a = DirectedGraph::new(2, [(0, 1)]).unwrap();
        let b = DirectedGraph::new(2, [(1, 0)]).unwrap();
        let seq = GraphSequence::new(vec![a.clone(), b.clone(), b], 2).unwrap();
        // window {1,2} only has 1 -> 0
        assert!(!validate_b_connectivity(&seq, 2));
    }

    #[test]
    fn matrix_product_examples() {
        let seq = GraphSequence::fixed(cycle(3));
        let a = seq.matrix_at(0).entries().clone();
        assert_eq!(seq.matrix_product(4, 4).unwrap(), a);
        assert_eq!(seq.matrix_product(1, 0).unwrap(), &a * &a);
        assert!(seq.matrix_product(0, 1).is_err());

        let id = GraphSequence::fixed(DirectedGraph::empty(3).unwrap());
        assert_eq!(id.matrix_product(7, 2).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn matrix_product_respects_order() {
        let a = DirectedGraph::new(3, [(0, 1)]).unwrap();
        let b = DirectedGraph::new(3, [(1, 2)]).unwrap();
        let seq = GraphSequence::new(vec![a.clone(), b.clone()], 2).unwrap();
        let p = seq.matrix_product(1, 0).unwrap();
        let expected =
            WeightMatrix::from_graph(&b).entries() * WeightMatrix::from_graph(&a).entries();
        assert_eq!(p, expected);
        for s in column_sums(&p).iter() {
            assert_abs_diff_eq!(*s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn empirical_delta_examples() {
        assert_abs_diff_eq!(
            GraphSequence::fixed(cycle(3)).empirical_delta(50),
            1.0,
            epsilon = 1e-12
        );
        let id = GraphSequence::fixed(DirectedGraph::empty(4).unwrap());
        assert_eq!(id.empirical_delta(10), 1.0);

        // n = 2, edge 0 -> 1: A = [[1/2, 0], [1/2, 1]], A^m 1 has first entry 2^-m
        let seq = GraphSequence::fixed(DirectedGraph::new(2, [(0, 1)]).unwrap());
        assert_abs_diff_eq!(seq.empirical_delta(10), 0.5f64.powi(11), epsilon = 1e-15);
    }

    #[test]
    fn column_spread_examples() {
        let rank_one = DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.7, 0.7]);
        assert_eq!(column_spread(&rank_one), 0.0);
        assert_eq!(column_spread(&DMatrix::identity(2, 2)), 1.0);
    }

    #[test]
    fn lazy_metropolis_is_doubly_stochastic() {
        let star = DirectedGraph::undirected(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let w = WeightMatrix::lazy_metropolis(&star).unwrap();
        assert!(w.is_doubly_stochastic());
        assert_abs_diff_eq!(w.get(1, 0), 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.get(0, 0), 0.5, epsilon = 1e-15);
        assert!(WeightMatrix::lazy_metropolis(&cycle(3)).is_err());
    }

    #[test]
    fn from_matrix_rejects_bad_input() {
        let neg = DMatrix::from_row_slice(2, 2, &[1.5, 0.0, -0.5, 1.0]);
        assert!(WeightMatrix::from_matrix(neg).is_err());
        let zero_diag = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 1.0, 0.5]);
        assert!(WeightMatrix::from_matrix(zero_diag).is_err());
        let row_stoch = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.8]);
        assert!(WeightMatrix::from_matrix(row_stoch).is_err());
    }

    #[test]
    fn regular_detection() {
        assert!(cycle(5).is_regular());
        let chord = DirectedGraph::new(
            4,
            [
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 0),
                (0, 2),
                (1, 3),
                (2, 0),
                (3, 2),
            ],
        )
        .unwrap();
        // out-degrees all 2 but in-degrees differ
        assert!((0..4).all(|v| chord.out_degree(v) == 2));
        assert!(!chord.is_regular());
    }
}
