//! Weighted interconnection digraphs, Laplacian spectra, and the cutset and
//! path machinery used to state energy majorization.
//!
//! Vertices are `0..n`. An edge `from -> to` with weight `g` means the output
//! of `from` enters the dynamics of `to`, i.e. `g_{to,from} = g > 0`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lti::eigenvalues;

/// Default subset-enumeration cap for [`enumerate_separating_cutsets`].
pub const CUTSET_ENUMERATION_CAP: usize = 12;

/// Relative threshold (against the spectral radius) for zero eigenvalues.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-9;

/// Eigenvector-matrix condition number above which `L` counts as defective.
pub const DIAGONALIZABLE_COND_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    incoming: Vec<Vec<(usize, f64)>>,
    outgoing: Vec<Vec<(usize, f64)>>,
}

impl WeightedDigraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
        }
        let mut incoming = vec![Vec::new(); vertex_count];
        let mut outgoing = vec![Vec::new(); vertex_count];
        let mut seen = HashSet::new();
        for e in &edges {
            for v in [e.from, e.to] {
                if v >= vertex_count {
                    return Err(Error::VertexOutOfRange { vertex: v, count: vertex_count });
                }
            }
            if e.from == e.to {
                return Err(Error::SelfLoop(e.from));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::NonPositiveWeight { from: e.from, to: e.to, weight: e.weight });
            }
            if !seen.insert((e.from, e.to)) {
                return Err(Error::InvalidArgument(format!("duplicate edge {} -> {}", e.from, e.to)));
            }
            incoming[e.to].push((e.from, e.weight));
            outgoing[e.from].push((e.to, e.weight));
        }
        Ok(Self { vertex_count, edges, incoming, outgoing })
    }

    /// Builds a graph from `(from, to, weight)` triples.
    pub fn from_triples(vertex_count: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = triples.iter().map(|&(from, to, weight)| Edge { from, to, weight }).collect();
        Self::new(vertex_count, edges)
    }

    /// Undirected pairs expanded into both directions with the same weight.
    pub fn bidirectional(vertex_count: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .flat_map(|&(u, v, w)| [Edge { from: u, to: v, weight: w }, Edge { from: v, to: u, weight: w }])
            .collect();
        Self::new(vertex_count, edges)
    }

    /// `0 <-> 1 <-> ... <-> n-1` with unit weights.
    pub fn path(vertex_count: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..vertex_count).map(|i| (i - 1, i, 1.0)).collect();
        Self::bidirectional(vertex_count, &pairs)
    }

    /// `0 -> 1 -> ... -> n-1` with unit weights.
    pub fn directed_line(vertex_count: usize) -> Result<Self> {
        let triples: Vec<_> = (1..vertex_count).map(|i| (i - 1, i, 1.0)).collect();
        Self::from_triples(vertex_count, &triples)
    }

    /// `0 -> 1 -> ... -> n-1 -> 0` with unit weights.
    pub fn directed_cycle(vertex_count: usize) -> Result<Self> {
        let triples: Vec<_> = (0..vertex_count).map(|i| (i, (i + 1) % vertex_count, 1.0)).collect();
        Self::from_triples(vertex_count, &triples)
    }

    pub fn complete(vertex_count: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        for u in 0..vertex_count {
            for v in u + 1..vertex_count {
                pairs.push((u, v, 1.0));
            }
        }
        Self::bidirectional(vertex_count, &pairs)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(j, g_ij)` for every edge `j -> i`.
    pub fn incoming(&self, i: usize) -> &[(usize, f64)] {
        &self.incoming[i]
    }

    /// `(i, g_ij)` for every edge `j -> i`.
    pub fn outgoing(&self, j: usize) -> &[(usize, f64)] {
        &self.outgoing[j]
    }

    /// Coupling weight `g_ij` (zero when there is no edge `j -> i`).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.incoming[i].iter().find(|(from, _)| *from == j).map_or(0.0, |(_, w)| *w)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, count: self.vertex_count })
        }
    }

    /// `L = D_in - G`, with `l_ij = -g_ij` and zero row sums.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.vertex_count;
        let mut l = DMatrix::zeros(n, n);
        for e in &self.edges {
            l[(e.to, e.from)] -= e.weight;
            l[(e.to, e.to)] += e.weight;
        }
        l
    }

    pub fn max_weighted_in_degree(&self) -> f64 {
        (0..self.vertex_count).map(|i| weighted_in_degree(self, i)).fold(0.0, f64::max)
    }

    /// Vertices reachable from `start` along directed edges without entering
    /// `blocked`. `start` itself is included unless blocked.
    pub fn reachable_avoiding(&self, start: usize, blocked: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.vertex_count];
        if blocked[start] {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.outgoing[u] {
                if !seen[v] && !blocked[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// True iff the subgraph induced by `region` is strongly connected.
    pub fn is_strongly_connected_on(&self, region: &[usize]) -> bool {
        if region.is_empty() {
            return false;
        }
        let mut inside = vec![false; self.vertex_count];
        for &v in region {
            if v >= self.vertex_count {
                return false;
            }
            inside[v] = true;
        }
        let root = region[0];
        let reach = |forward: bool| {
            let mut seen = vec![false; self.vertex_count];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                let adj = if forward { &self.outgoing[u] } else { &self.incoming[u] };
                for &(v, _) in adj {
                    if inside[v] && !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            seen
        };
        let fwd = reach(true);
        let bwd = reach(false);
        region.iter().all(|&v| fwd[v] && bwd[v])
    }

    pub fn is_strongly_connected(&self) -> bool {
        let all: Vec<usize> = (0..self.vertex_count).collect();
        self.is_strongly_connected_on(&all)
    }
}

/// Incoming neighbors `{j : g_ij > 0}` of vertex `i`.
pub fn in_neighbors(g: &WeightedDigraph, i: usize) -> BTreeSet<usize> {
    g.incoming(i).iter().map(|(j, _)| *j).collect()
}

/// `sum_j g_ij` over incoming neighbors of `i`.
pub fn weighted_in_degree(g: &WeightedDigraph, i: usize) -> f64 {
    g.incoming(i).iter().map(|(_, w)| w).sum()
}

#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    pub matrix: DMatrix<f64>,
    /// Sorted by increasing magnitude.
    pub eigenvalues: Vec<Complex64>,
    pub zero_multiplicity: usize,
    pub diagonalizable: bool,
}

impl LaplacianSpectrum {
    /// Eigenvalues with index `2..N` in magnitude order: every eigenvalue except
    /// one copy of zero.
    pub fn transverse_eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues[1..]
    }

    pub fn nonzero_eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues[self.zero_multiplicity..]
    }
}

pub fn laplacian(g: &WeightedDigraph) -> LaplacianSpectrum {
    let matrix = g.laplacian_matrix();
    let mut eigs = eigenvalues(&matrix);
    eigs.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    let radius = eigs.last().map_or(0.0, |z| z.norm());
    let zero_multiplicity = eigs.iter().filter(|z| z.norm() <= ZERO_EIGENVALUE_RTOL * radius).count();
    for z in eigs.iter_mut().take(zero_multiplicity) {
        *z = Complex64::new(0.0, 0.0);
    }
    let diagonalizable = is_diagonalizable(&matrix, &eigs);
    LaplacianSpectrum { matrix, eigenvalues: eigs, zero_multiplicity, diagonalizable }
}

/// Builds an eigenvector basis cluster by cluster (null spaces of `M - mu I`)
/// and checks its conditioning.
fn is_diagonalizable(m: &DMatrix<f64>, eigs: &[Complex64]) -> bool {
    let n = m.nrows();
    if n <= 1 {
        return true;
    }
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let cluster_tol = 1e-5 * scale;
    let null_tol = 1e-6 * scale;

    let mut used = vec![false; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for i in 0..n {
        if used[i] {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| !used[j] && (eigs[j] - eigs[i]).norm() <= cluster_tol).collect();
        for &j in &members {
            used[j] = true;
        }
        let k = members.len();
        let mu = members.iter().map(|&j| eigs[j]).sum::<Complex64>() / k as f64;
        let shifted = DMatrix::<Complex64>::from_fn(n, n, |r, c| {
            let v = Complex64::new(m[(r, c)], 0.0);
            if r == c {
                v - mu
            } else {
                v
            }
        });
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        if svd.singular_values[order[k - 1]] > null_tol {
            // geometric multiplicity below algebraic multiplicity
            return false;
        }
        for &idx in order.iter().take(k) {
            basis.push(v_t.row(idx).iter().map(|z| z.conj()).collect());
        }
    }
    let v = DMatrix::<Complex64>::from_fn(n, n, |r, c| basis[c][r]);
    let sv = v.singular_values();
    let cond = sv.max() / sv.min();
    cond.is_finite() && cond <= DIAGONALIZABLE_COND_LIMIT
}

/// Source-side, cut, and far-side vertex sets for a separating cutset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutsetPartition {
    pub source: usize,
    pub cut: Vec<usize>,
    pub near: Vec<usize>,
    pub far: Vec<usize>,
}

impl CutsetPartition {
    /// `near ∪ cut`.
    pub fn source_side(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.near.iter().chain(&self.cut).copied().collect();
        v.sort_unstable();
        v
    }

    /// Scans every edge for one running from the near side to the far side.
    pub fn has_crossing_edge(&self, g: &WeightedDigraph) -> bool {
        let mut near = vec![false; g.vertex_count()];
        let mut far = vec![false; g.vertex_count()];
        self.near.iter().for_each(|&v| near[v] = true);
        self.far.iter().for_each(|&v| far[v] = true);
        g.edges().iter().any(|e| near[e.from] && far[e.to])
    }
}

/// Canonical partition for a candidate cut: the near side is everything
/// reachable from `source` without entering the cut, the far side is the rest.
pub fn validate_cutset(g: &WeightedDigraph, source: usize, cut: &[usize]) -> Result<CutsetPartition> {
    g.check_vertex(source)?;
    let n = g.vertex_count();
    let mut in_cut = vec![false; n];
    for &v in cut {
        g.check_vertex(v)?;
        in_cut[v] = true;
    }
    let near_mask = g.reachable_avoiding(source, &in_cut);
    let cut_sorted: Vec<usize> = (0..n).filter(|&v| in_cut[v]).collect();
    let near: Vec<usize> = (0..n).filter(|&v| near_mask[v]).collect();
    let far: Vec<usize> = (0..n).filter(|&v| !in_cut[v] && !near_mask[v]).collect();
    let part = CutsetPartition { source, cut: cut_sorted, near, far };

    if part.far.contains(&source) {
        return Err(Error::NotSeparating(format!("source {source} lands on the far side")));
    }
    if part.has_crossing_edge(g) {
        return Err(Error::NotSeparating("edge from near side to far side".into()));
    }
    Ok(part)
}

/// Every proper vertex subset (the empty set included) whose canonical
/// partition has a nonempty far side.
pub fn enumerate_separating_cutsets(g: &WeightedDigraph, source: usize, cap: usize) -> Result<Vec<CutsetPartition>> {
    let n = g.vertex_count();
    if n > cap {
        return Err(Error::TooLarge { count: n, cap });
    }
    g.check_vertex(source)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let full: u64 = (1u64 << n) - 1;
    for mask in 0..full {
        let cut: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        match validate_cutset(g, source, &cut) {
            Ok(p) if !p.far.is_empty() && seen.insert(p.clone()) => out.push(p),
            _ => {}
        }
    }
    Ok(out)
}

/// Hop distance from `source` along directed edges; `None` if unreachable.
pub fn graph_distance(g: &WeightedDigraph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.vertex_count()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &(v, _) in g.outgoing(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Whether some directed path `source -> ... -> target` has energies that never
/// rise by more than the relative tolerance from one vertex to the next.
pub fn monotone_path_exists(
    g: &WeightedDigraph,
    source: usize,
    target: usize,
    energies: &[f64],
    rel_tol: f64,
) -> Result<bool> {
    g.check_vertex(source)?;
    g.check_vertex(target)?;
    if energies.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch(format!("{} energies for {} vertices", energies.len(), g.vertex_count())));
    }
    if graph_distance(g, source)[target].is_none() {
        return Err(Error::Unreachable { source_vertex: source, target });
    }
    Ok(monotone_reachable(g, source, energies, rel_tol)[target])
}

/// Vertices reachable from `source` over edges `u -> v` with `E_v <= E_u (1 + tol)`.
pub fn monotone_reachable(g: &WeightedDigraph, source: usize, energies: &[f64], rel_tol: f64) -> Vec<bool> {
    let mut seen = vec![false; g.vertex_count()];
    seen[source] = true;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.outgoing(u) {
            if !seen[v] && energies[v] <= energies[u] * (1.0 + rel_tol) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}
