//! Network topologies and the extended incidence-style matrices built from them.
//!
//! Every undirected edge `{i, j}` (stored with `i < j`) contributes two arcs,
//! `(i, j)` followed by `(j, i)`. Edges are kept sorted, so the arc order and
//! therefore every matrix column order is canonical.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of restarts for the regular-graph sampler.
pub const REGULAR_RETRY_CAP: usize = 1000;

/// Relative threshold below which a singular value of `M-` is treated as zero.
pub const NONZERO_SV_THRESHOLD: f64 = 1e-8;

/// Undirected connected graph with a canonical arc list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    arcs: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Validates an edge list and builds the graph.
    ///
    /// Pairs may be given in either orientation; `(1, 0)` and `(0, 1)` name the
    /// same edge and listing both is a [`Error::DuplicateEdge`].
    pub fn from_edges(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::TooFewNodes(node_count));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for index in [a, b] {
                if index >= node_count {
                    return Err(Error::IndexOutOfRange { index, node_count });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); node_count];
        let mut arcs = Vec::with_capacity(2 * edges.len());
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
            arcs.push((i, j));
            arcs.push((j, i));
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let components = count_components(&neighbors);
        if components != 1 {
            return Err(Error::DisconnectedGraph { components });
        }
        Ok(Self {
            node_count,
            edges,
            arcs,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Arc list of length `2E`: each edge `(i, j)` followed by `(j, i)`.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// Edge density `E / (N(N-1)/2)`.
    pub fn density(&self) -> f64 {
        let complete = self.node_count * (self.node_count - 1) / 2;
        self.edges.len() as f64 / complete as f64
    }

    /// Plain graph Laplacian `D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut lap = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            lap[(i, j)] -= 1.0;
            lap[(j, i)] -= 1.0;
            lap[(i, i)] += 1.0;
            lap[(j, j)] += 1.0;
        }
        lap
    }

    /// `½ M+ᵀ x` for a node-stacked `x` with block size `n`: arc `(i, j)` gets `½(x_i + x_j)`.
    pub fn half_mplus_t(&self, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.arcs.len() * n);
        for (m, &(i, j)) in self.arcs.iter().enumerate() {
            for r in 0..n {
                out[m * n + r] = 0.5 * (x[i * n + r] + x[j * n + r]);
            }
        }
        out
    }

    /// `M-ᵀ x`: arc `(i, j)` gets `x_i − x_j`.
    pub fn mminus_t(&self, x: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.arcs.len() * n);
        for (m, &(i, j)) in self.arcs.iter().enumerate() {
            for r in 0..n {
                out[m * n + r] = x[i * n + r] - x[j * n + r];
            }
        }
        out
    }

    /// `M- β` for an arc-stacked `β`: arc `(i, j)` adds `β_m` at `i` and subtracts it at `j`.
    pub fn mminus(&self, beta: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.node_count * n);
        for (m, &(i, j)) in self.arcs.iter().enumerate() {
            for r in 0..n {
                out[i * n + r] += beta[m * n + r];
                out[j * n + r] -= beta[m * n + r];
            }
        }
        out
    }

    /// Renders the edge-list text format: `"N E"` then one `"i j"` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.node_count, self.edges.len()).unwrap();
        for &(i, j) in &self.edges {
            writeln!(out, "{i} {j}").unwrap();
        }
        out
    }

    /// Parses the edge-list text format and validates the result.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let (node_count, edge_count) = parse_pair(header)?;
        let mut edges = Vec::with_capacity(edge_count);
        for line in lines {
            edges.push(parse_pair(line)?);
        }
        if edges.len() != edge_count {
            return Err(Error::Parse(format!(
                "header declares {edge_count} edges, found {}",
                edges.len()
            )));
        }
        Self::from_edges(node_count, &edges)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("expected two integers in {line:?}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("{line:?}: {e}")))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(Error::Parse(format!("trailing tokens in {line:?}")));
    }
    Ok(pair)
}

fn count_components(neighbors: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; neighbors.len()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..neighbors.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    components
}

/// Edge count `round(r * N(N-1)/2)` used by [`gen_random_connected`].
pub fn target_edge_count(nodes: usize, density: f64) -> usize {
    let complete = nodes * nodes.saturating_sub(1) / 2;
    (density * complete as f64).round() as usize
}

/// Random connected graph with `round(r * N(N-1)/2)` edges.
///
/// A uniformly random labelled spanning tree (decoded from a random Prüfer
/// sequence) is completed with distinct non-tree edges drawn uniformly.
pub fn gen_random_connected(nodes: usize, density: f64, seed: u64) -> Result<Graph> {
    if nodes < 2 {
        return Err(Error::TooFewNodes(nodes));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "edge density must lie in (0, 1], got {density}"
        )));
    }
    let target = target_edge_count(nodes, density);
    if target < nodes - 1 {
        return Err(Error::TooFewEdges { target, nodes });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: BTreeSet<(usize, usize)> = random_tree(nodes, &mut rng).into_iter().collect();
    let mut extra: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|i| (i + 1..nodes).map(move |j| (i, j)))
        .filter(|e| !edges.contains(e))
        .collect();
    let needed = target - edges.len();
    let (chosen, _) = extra.partial_shuffle(&mut rng, needed);
    edges.extend(chosen.iter().copied());
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::from_edges(nodes, &edges)
}

fn random_tree(nodes: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if nodes == 2 {
        return vec![(0, 1)];
    }
    let prufer: Vec<usize> = (0..nodes - 2).map(|_| rng.random_range(0..nodes)).collect();
    let mut degree = vec![1usize; nodes];
    for &v in &prufer {
        degree[v] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..nodes).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(nodes - 1);
    for &v in &prufer {
        let leaf = leaves
            .pop_first()
            .expect("Prüfer decoding always has a leaf");
        edges.push((leaf.min(v), leaf.max(v)));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.insert(v);
        }
    }
    let a = leaves.pop_first().unwrap();
    let b = leaves.pop_first().unwrap();
    edges.push((a, b));
    edges
}

/// Connected `d`-regular graph on `N` nodes.
///
/// Uses the pairing (configuration) model with incremental rejection of
/// self-loops and repeated pairs: stubs are shuffled and paired, unsuitable
/// pairs are returned to the pool and re-paired, and the whole attempt
/// restarts if no suitable pair is left or the result is disconnected. Gives
/// up after [`REGULAR_RETRY_CAP`] attempts.
pub fn gen_regular(nodes: usize, degree: usize, seed: u64) -> Result<Graph> {
    let infeasible = |reason| Error::InfeasibleDegree {
        nodes,
        degree,
        reason,
    };
    if degree < 2 {
        return Err(infeasible("degree must be at least 2"));
    }
    if degree >= nodes {
        return Err(infeasible("degree must be below the node count"));
    }
    if !(nodes * degree).is_multiple_of(2) {
        return Err(infeasible("node count times degree must be even"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REGULAR_RETRY_CAP {
        let Some(edges) = try_pairing(nodes, degree, &mut rng) else {
            continue;
        };
        let edges: Vec<_> = edges.into_iter().collect();
        match Graph::from_edges(nodes, &edges) {
            Ok(g) => return Ok(g),
            Err(Error::DisconnectedGraph { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed {
        attempts: REGULAR_RETRY_CAP,
    })
}

fn try_pairing(
    nodes: usize,
    degree: usize,
    rng: &mut impl Rng,
) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..nodes)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && !edges.contains(&(a, b)) {
                edges.insert((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if !has_suitable_pair(&edges, &leftover) {
            return None;
        }
        stubs = leftover
            .iter()
            .flat_map(|(&v, &count)| std::iter::repeat_n(v, count))
            .collect();
    }
    Some(edges)
}

fn has_suitable_pair(edges: &BTreeSet<(usize, usize)>, leftover: &BTreeMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let nodes: Vec<usize> = leftover.keys().copied().collect();
    nodes.iter().enumerate().any(|(idx, &a)| {
        nodes[idx + 1..]
            .iter()
            .any(|&b| !edges.contains(&(a.min(b), a.max(b))))
    })
}

/// Complete `b`-ary tree filled breadth-first: node `k > 0` hangs off `(k - 1) / b`.
pub fn gen_tree(nodes: usize, branch: usize) -> Result<Graph> {
    if branch < 1 {
        return Err(Error::InvalidParameter(
            "branch factor must be at least 1".into(),
        ));
    }
    if nodes < 2 {
        return Err(Error::TooFewNodes(nodes));
    }
    let edges: Vec<_> = (1..nodes).map(|k| ((k - 1) / branch, k)).collect();
    Graph::from_edges(nodes, &edges)
}

/// Extended network matrices for block dimension `n`.
///
/// `M+ = A1ᵀ + A2ᵀ` and `M- = A1ᵀ - A2ᵀ` have one block column per arc; `W`,
/// `L+ = ½M+M+ᵀ` and `L- = ½M-M-ᵀ` are `nN × nN`. The base (`n = 1`) node-arc
/// matrices are kept alongside since every spectrum of an extended matrix is
/// the base spectrum repeated `n` times.
#[derive(Debug, Clone)]
pub struct NetworkMatrices {
    pub n: usize,
    pub base_mplus: DMatrix<f64>,
    pub base_mminus: DMatrix<f64>,
    pub mplus: DMatrix<f64>,
    pub mminus: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub lplus: DMatrix<f64>,
    pub lminus: DMatrix<f64>,
}

impl NetworkMatrices {
    pub fn new(g: &Graph, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "block dimension must be positive".into(),
            ));
        }
        let nodes = g.node_count();
        let arcs = g.arcs();
        let mut base_mplus = DMatrix::zeros(nodes, arcs.len());
        let mut base_mminus = DMatrix::zeros(nodes, arcs.len());
        for (m, &(i, j)) in arcs.iter().enumerate() {
            base_mplus[(i, m)] = 1.0;
            base_mplus[(j, m)] = 1.0;
            base_mminus[(i, m)] = 1.0;
            base_mminus[(j, m)] = -1.0;
        }
        let eye = DMatrix::<f64>::identity(n, n);
        let mplus = base_mplus.kronecker(&eye);
        let mminus = base_mminus.kronecker(&eye);
        let mut w = DMatrix::zeros(nodes * n, nodes * n);
        for i in 0..nodes {
            for r in 0..n {
                w[(i * n + r, i * n + r)] = g.degree(i) as f64;
            }
        }
        let lplus = &mplus * mplus.transpose() * 0.5;
        let lminus = &mminus * mminus.transpose() * 0.5;
        Ok(Self {
            n,
            base_mplus,
            base_mminus,
            mplus,
            mminus,
            w,
            lplus,
            lminus,
        })
    }
}

/// Spectral scalars consumed by the rate and steady-state bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub sigma_max_mplus: f64,
    pub sigma_min_nz_mminus: f64,
    pub lambda_min_w: f64,
    pub sigma_max_w: f64,
    pub fiedler: f64,
    pub edge_count: usize,
    pub node_count: usize,
}

impl SpectralStats {
    /// Computes the statistics from a matrix set.
    ///
    /// Singular values come from an SVD of the base node-arc matrices; the
    /// Fiedler value from a separate eigen-solve of the plain Laplacian `D - A`
    /// (recovered as `½ M- M-ᵀ` of the base matrices).
    pub fn from_matrices(m: &NetworkMatrices) -> Self {
        let sv_plus = m.base_mplus.singular_values();
        let sigma_max_mplus = sv_plus.max();
        let sv_minus = m.base_mminus.singular_values();
        let cutoff = NONZERO_SV_THRESHOLD * sv_minus.max();
        let sigma_min_nz_mminus = sv_minus
            .iter()
            .copied()
            .filter(|&s| s > cutoff)
            .fold(f64::INFINITY, f64::min);

        let diag = m.w.diagonal();
        let lambda_min_w = diag.min();
        let sigma_max_w = diag.max();

        let laplacian = &m.base_mminus * m.base_mminus.transpose() * 0.5;
        let mut eig: Vec<f64> = SymmetricEigen::new(laplacian)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(f64::total_cmp);
        let fiedler = eig[1];

        Self {
            sigma_max_mplus,
            sigma_min_nz_mminus,
            lambda_min_w,
            sigma_max_w,
            fiedler,
            edge_count: m.base_mplus.ncols() / 2,
            node_count: m.base_mplus.nrows(),
        }
    }

    /// Shortcut building the `n = 1` matrices; the statistics do not depend on `n`.
    pub fn of_graph(g: &Graph) -> Self {
        Self::from_matrices(&NetworkMatrices::new(g, 1).expect("n = 1 is valid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn single_edge_arcs() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(g.arcs(), &[(0, 1), (1, 0)]);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn triangle_degrees() {
        let g = k3();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.degrees(), vec![2, 2, 2]);
        assert_eq!(g.arcs(), &[(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            Graph::from_edges(3, &[(0, 1)]),
            Err(Error::DisconnectedGraph { components: 2 })
        );
        assert_eq!(
            Graph::from_edges(2, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert_eq!(Graph::from_edges(2, &[(1, 1)]), Err(Error::SelfLoop(1)));
        assert_eq!(
            Graph::from_edges(2, &[(0, 2)]),
            Err(Error::IndexOutOfRange {
                index: 2,
                node_count: 2
            })
        );
    }

    #[test]
    fn random_graph_edge_count_and_determinism() {
        let g = gen_random_connected(20, 0.5, 7).unwrap();
        assert_eq!(g.edge_count(), 95);
        assert_eq!(g, gen_random_connected(20, 0.5, 7).unwrap());
        assert_ne!(g, gen_random_connected(20, 0.5, 8).unwrap());
        assert_eq!(gen_random_connected(2, 1.0, 0).unwrap().edges(), &[(0, 1)]);
        assert_eq!(
            gen_random_connected(20, 0.05, 1),
            Err(Error::TooFewEdges {
                target: 10,
                nodes: 20
            })
        );
    }

    #[test]
    fn random_tree_is_spanning() {
        for seed in 0..20 {
            let g = gen_random_connected(15, 14.0 / 105.0, seed).unwrap();
            assert_eq!(g.edge_count(), 14);
        }
    }

    #[test]
    fn regular_graphs() {
        let g = gen_regular(4, 2, 3).unwrap();
        assert_eq!(g.degrees(), vec![2; 4]);
        assert_eq!(g.edge_count(), 4);
        let g = gen_regular(100, 30, 11).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 30));
        assert_eq!(g.edge_count(), 1500);
        assert!(matches!(
            gen_regular(5, 3, 0),
            Err(Error::InfeasibleDegree { .. })
        ));
        assert!(matches!(
            gen_regular(5, 5, 0),
            Err(Error::InfeasibleDegree { .. })
        ));
        assert!(matches!(
            gen_regular(6, 1, 0),
            Err(Error::InfeasibleDegree { .. })
        ));
    }

    #[test]
    fn trees() {
        let g = gen_tree(7, 2).unwrap();
        assert_eq!(g.degrees(), vec![2, 3, 3, 1, 1, 1, 1]);
        let g = gen_tree(3, 2).unwrap();
        assert_eq!(g.degrees(), vec![2, 1, 1]);
        assert_eq!(gen_tree(100, 3).unwrap().edge_count(), 99);
    }

    #[test]
    fn single_edge_matrices() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let m = NetworkMatrices::new(&g, 1).unwrap();
        assert_eq!(
            m.mplus,
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])
        );
        assert_eq!(
            m.mminus,
            DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        assert_eq!(m.w, DMatrix::identity(2, 2));
        let s = SpectralStats::from_matrices(&m);
        assert!((s.sigma_max_mplus - 2.0).abs() < 1e-12);
        assert!((s.sigma_min_nz_mminus - 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_spectra() {
        // L+ spectrum {4,1,1} and L- spectrum {0,3,3}; σ² = 2λ.
        let s = SpectralStats::from_matrices(&NetworkMatrices::new(&k3(), 1).unwrap());
        assert!((s.sigma_max_mplus - 8f64.sqrt()).abs() < 1e-12);
        assert!((s.sigma_min_nz_mminus - 6f64.sqrt()).abs() < 1e-12);
        assert_eq!((s.lambda_min_w, s.sigma_max_w), (2.0, 2.0));
        assert!((s.fiedler - 3.0).abs() < 1e-12);
        let m = NetworkMatrices::new(&k3(), 1).unwrap();
        assert_eq!(m.w, DMatrix::from_diagonal_element(3, 3, 2.0));
    }

    #[test]
    fn path_degrees() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let s = SpectralStats::of_graph(&g);
        assert_eq!((s.lambda_min_w, s.sigma_max_w), (1.0, 2.0));
    }

    #[test]
    fn extended_identity_and_laplacian_blocks() {
        let g = gen_random_connected(8, 0.5, 3).unwrap();
        for n in 1..=3 {
            let m = NetworkMatrices::new(&g, n).unwrap();
            let lhs = &m.mplus * m.mplus.transpose() + &m.mminus * m.mminus.transpose();
            assert_eq!(lhs, &m.w * 4.0);
            let p = &m.lplus - &m.lminus;
            for i in 0..8 {
                for j in 0..8 {
                    let block = p.view((i * n, j * n), (n, n));
                    let expected = if g.neighbors(i).contains(&j) {
                        2.0
                    } else {
                        0.0
                    };
                    assert_eq!(block, DMatrix::from_diagonal_element(n, n, expected));
                }
            }
        }
    }

    #[test]
    fn arc_operators_match_dense_matrices() {
        let g = gen_random_connected(7, 0.6, 2).unwrap();
        let n = 2;
        let m = NetworkMatrices::new(&g, n).unwrap();
        let x = DVector::from_fn(7 * n, |k, _| (k as f64 * 0.37).sin());
        let beta = DVector::from_fn(g.arcs().len() * n, |k, _| (k as f64 * 0.11).cos());
        assert!((g.half_mplus_t(&x, n) - m.mplus.transpose() * &x * 0.5).norm() < 1e-14);
        assert!((g.mminus_t(&x, n) - m.mminus.transpose() * &x).norm() < 1e-14);
        assert!((g.mminus(&beta, n) - &m.mminus * &beta).norm() < 1e-13);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_random_connected(12, 0.4, 5).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with(&format!("12 {}\n", g.edge_count())));
        assert_eq!(Graph::parse_edge_list(&text).unwrap(), g);
        assert!(matches!(
            Graph::parse_edge_list("3 2\n0 1\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Graph::parse_edge_list("2 1\n0 x\n"),
            Err(Error::Parse(_))
        ));
    }
}
