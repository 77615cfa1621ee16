//! Geometric graph builders: MST backbone plus kNN, MkNN, CkNN and RMST
//! densification rules, edge density, and density-parameter grids.
//!
//! Every builder unions its rule edges with the MST so the result is a
//! single connected component. Graphs are undirected, unweighted and
//! simple; edges are stored as (u, v) with u < v in lexicographic order.

use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DistanceMatrix, NeighborIndex};

/// How a graph was produced, with its density parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ConstructionTag {
    Mst,
    Knn { k: usize },
    Mknn { k: usize },
    Cknn { k: usize, delta: f64 },
    Rmst { gamma: f64, k_local: usize },
    Sparsified { sigma: f64 },
    External,
}

impl ConstructionTag {
    pub fn method_name(&self) -> &'static str {
        match self {
            ConstructionTag::Mst => "mst",
            ConstructionTag::Knn { .. } => "knn",
            ConstructionTag::Mknn { .. } => "mknn",
            ConstructionTag::Cknn { .. } => "cknn",
            ConstructionTag::Rmst { .. } => "rmst",
            ConstructionTag::Sparsified { .. } => "sparsified",
            ConstructionTag::External => "external",
        }
    }

    /// The density parameter (k, γ or σ) when one exists.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            ConstructionTag::Mst | ConstructionTag::External => None,
            ConstructionTag::Knn { k }
            | ConstructionTag::Mknn { k }
            | ConstructionTag::Cknn { k, .. } => Some(k as f64),
            ConstructionTag::Rmst { gamma, .. } => Some(gamma),
            ConstructionTag::Sparsified { sigma } => Some(sigma),
        }
    }
}

impl fmt::Display for ConstructionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConstructionTag::Mst => write!(f, "mst"),
            ConstructionTag::Knn { k } => write!(f, "knn(k={k})"),
            ConstructionTag::Mknn { k } => write!(f, "mknn(k={k})"),
            ConstructionTag::Cknn { k, delta } => write!(f, "cknn(k={k}, delta={delta})"),
            ConstructionTag::Rmst { gamma, k_local } => {
                write!(f, "rmst(gamma={gamma}, k={k_local})")
            }
            ConstructionTag::Sparsified { sigma } => write!(f, "sparsified(sigma={sigma})"),
            ConstructionTag::External => write!(f, "external"),
        }
    }
}

/// Simple undirected graph: edge list with u < v, sorted, no duplicates.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    tag: ConstructionTag,
}

impl Graph {
    /// Build from an arbitrary edge list; orients, sorts and dedups, and
    /// rejects self-loops and out-of-range endpoints.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
        tag: ConstructionTag,
    ) -> Result<Self> {
        let mut out = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Format(format!("self-loop at node {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::Format(format!(
                    "edge ({u}, {v}) out of range for n={n}"
                )));
            }
            out.push((u.min(v), u.max(v)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Graph { n, edges: out, tag })
    }

    /// Internal constructor for edge lists already sorted/oriented/deduped.
    fn from_sorted_edges(n: usize, edges: Vec<(u32, u32)>, tag: ConstructionTag) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n));
        Graph { n, edges, tag }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn tag(&self) -> ConstructionTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: ConstructionTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.n as f64
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v as usize);
                }
            }
        }
        count == self.n
    }

    pub fn contains_all(&self, other: &[(u32, u32)]) -> bool {
        other.iter().all(|e| self.edges.binary_search(e).is_ok())
    }
}

/// Kruskal tree with the original distances kept for the RMST path-max
/// computation.
#[derive(Debug, Clone)]
pub struct WeightedMst {
    n: usize,
    edges: Vec<(u32, u32, f64)>,
}

impl WeightedMst {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weighted_edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    /// The unweighted MST graph.
    pub fn graph(&self) -> Graph {
        let mut edges: Vec<(u32, u32)> = self.edges.iter().map(|&(u, v, _)| (u, v)).collect();
        edges.sort_unstable();
        Graph::from_sorted_edges(self.n, edges, ConstructionTag::Mst)
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            std::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            std::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
        true
    }
}

/// Kruskal MST over the full distance matrix. Ties in edge weight are
/// broken by lexicographic (u, v), which makes the backbone deterministic
/// even with duplicate distances.
pub fn minimum_spanning_tree(d: &DistanceMatrix) -> Result<WeightedMst> {
    let n = d.n();
    if n < 2 {
        return Err(Error::Param(format!("need at least 2 nodes, got {n}")));
    }
    let mut all: Vec<(u32, u32)> = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            all.push((u, v));
        }
    }
    all.sort_by(|&(au, av), &(bu, bv)| {
        d.get(au as usize, av as usize)
            .partial_cmp(&d.get(bu as usize, bv as usize))
            .unwrap()
            .then((au, av).cmp(&(bu, bv)))
    });
    let mut uf = UnionFind::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (u, v) in all {
        if uf.union(u, v) {
            edges.push((u, v, d.get(u as usize, v as usize)));
            if edges.len() == n - 1 {
                break;
            }
        }
    }
    Ok(WeightedMst { n, edges })
}

/// Maximum edge weight along the unique tree path between every node pair
/// (zero diagonal). One traversal per root node.
pub fn mst_path_max(mst: &WeightedMst) -> Array2<f64> {
    let n = mst.n;
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for &(u, v, w) in &mst.edges {
        adj[u as usize].push((v, w));
        adj[v as usize].push((u, w));
    }
    let mut out = Array2::zeros((n, n));
    let mut stack = Vec::with_capacity(n);
    for root in 0..n {
        stack.clear();
        stack.push((root as u32, root as u32, 0.0f64));
        while let Some((node, parent, max_w)) = stack.pop() {
            for &(next, w) in &adj[node as usize] {
                if next != parent {
                    let m = max_w.max(w);
                    out[[root, next as usize]] = m;
                    stack.push((next, node, m));
                }
            }
        }
    }
    out
}

fn merge_with_mst(n: usize, mut rule_edges: Vec<(u32, u32)>, mst: &Graph) -> Vec<(u32, u32)> {
    debug_assert_eq!(mst.n(), n);
    rule_edges.extend_from_slice(mst.edges());
    rule_edges.sort_unstable();
    rule_edges.dedup();
    rule_edges
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 1 || k > n - 1 {
        return Err(Error::Param(format!("k={k} outside 1..={}", n - 1)));
    }
    Ok(())
}

/// kNN rule: edge (i,j) when at least one endpoint is within the other's
/// k nearest neighbors, i.e. d(i,j) ≤ d(i,i_k) or d(i,j) ≤ d(j,j_k).
pub fn build_knn(
    d: &DistanceMatrix,
    nbr: &NeighborIndex,
    k: usize,
    mst: &Graph,
) -> Result<Graph> {
    let n = d.n();
    check_k(k, n)?;
    let kd: Vec<f64> = (0..n).map(|i| nbr.kth_distance(i, k)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            if dij <= kd[i] || dij <= kd[j] {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(Graph::from_sorted_edges(
        n,
        merge_with_mst(n, edges, mst),
        ConstructionTag::Knn { k },
    ))
}

/// Mutual kNN rule: both endpoints must be within each other's k nearest
/// neighbors (AND in place of kNN's OR). Pre-union degrees are bounded by k.
pub fn build_mknn(
    d: &DistanceMatrix,
    nbr: &NeighborIndex,
    k: usize,
    mst: &Graph,
) -> Result<Graph> {
    let n = d.n();
    check_k(k, n)?;
    let kd: Vec<f64> = (0..n).map(|i| nbr.kth_distance(i, k)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            if dij <= kd[i] && dij <= kd[j] {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(Graph::from_sorted_edges(
        n,
        merge_with_mst(n, edges, mst),
        ConstructionTag::Mknn { k },
    ))
}

/// Continuous kNN rule: d(i,j) < δ·√(d(i,i_k)·d(j,j_k)), strict.
pub fn build_cknn(
    d: &DistanceMatrix,
    nbr: &NeighborIndex,
    k: usize,
    delta: f64,
    mst: &Graph,
) -> Result<Graph> {
    let n = d.n();
    check_k(k, n)?;
    if !(delta > 0.0) {
        return Err(Error::Param(format!("delta must be > 0, got {delta}")));
    }
    let kd: Vec<f64> = (0..n).map(|i| nbr.kth_distance(i, k)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if d.get(i, j) < delta * (kd[i] * kd[j]).sqrt() {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(Graph::from_sorted_edges(
        n,
        merge_with_mst(n, edges, mst),
        ConstructionTag::Cknn { k, delta },
    ))
}

/// Relaxed MST rule: keep the direct edge when it is comparable to the
/// bottleneck of the MST path, d(i,j) < max-MST-path(i,j) + γ·(d(i,i_k) +
/// d(j,j_k)), strict.
pub fn build_rmst(
    d: &DistanceMatrix,
    nbr: &NeighborIndex,
    gamma: f64,
    k_local: usize,
    mst: &WeightedMst,
) -> Result<Graph> {
    let n = d.n();
    if !(gamma >= 0.0) {
        return Err(Error::Param(format!("gamma must be >= 0, got {gamma}")));
    }
    check_k(k_local, n)?;
    let kd: Vec<f64> = (0..n).map(|i| nbr.kth_distance(i, k_local)).collect();
    let path_max = mst_path_max(mst);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if d.get(i, j) < path_max[[i, j]] + gamma * (kd[i] + kd[j]) {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let mst_graph = mst.graph();
    Ok(Graph::from_sorted_edges(
        n,
        merge_with_mst(n, edges, &mst_graph),
        ConstructionTag::Rmst { gamma, k_local },
    ))
}

/// |E| over the N(N−1)/2 possible edges.
pub fn edge_density(g: &Graph) -> f64 {
    let n = g.n() as f64;
    g.edge_count() as f64 / (n * (n - 1.0) / 2.0)
}

/// Density-parameter grid for a construction method.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityGrid {
    /// Neighbor counts for kNN/MkNN/CkNN, strictly increasing.
    Ks(Vec<usize>),
    /// γ values for RMST, strictly increasing.
    Gammas(Vec<f64>),
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        match self {
            DensityGrid::Ks(v) => v.len(),
            DensityGrid::Gammas(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters as f64 in grid order.
    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            DensityGrid::Ks(v) => v.iter().map(|&k| k as f64).collect(),
            DensityGrid::Gammas(v) => v.clone(),
        }
    }
}

/// Construction methods that take a density parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMethod {
    Knn,
    Mknn,
    Cknn,
    Rmst,
}

impl GraphMethod {
    pub fn name(&self) -> &'static str {
        match self {
            GraphMethod::Knn => "knn",
            GraphMethod::Mknn => "mknn",
            GraphMethod::Cknn => "cknn",
            GraphMethod::Rmst => "rmst",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(GraphMethod::Knn),
            "mknn" => Ok(GraphMethod::Mknn),
            "cknn" => Ok(GraphMethod::Cknn),
            "rmst" => Ok(GraphMethod::Rmst),
            other => Err(Error::Param(format!("unknown graph method '{other}'"))),
        }
    }
}

impl fmt::Display for GraphMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sweep grid from sparse to dense: geometrically spaced integers in
/// [1, ⌈n/2⌉] for the neighbor methods (deduplicated, so the grid can come
/// out shorter than requested), log-spaced γ in [1e-4, 10] for RMST.
pub fn density_grid(method: GraphMethod, n: usize, grid_size: usize) -> Result<DensityGrid> {
    if grid_size < 2 {
        return Err(Error::Param(format!("grid_size must be >= 2, got {grid_size}")));
    }
    match method {
        GraphMethod::Knn | GraphMethod::Mknn | GraphMethod::Cknn => {
            let k_max = n.div_ceil(2).max(2) as f64;
            let mut ks: Vec<usize> = (0..grid_size)
                .map(|i| {
                    let t = i as f64 / (grid_size - 1) as f64;
                    (k_max.ln() * t).exp().round() as usize
                })
                .collect();
            ks.dedup();
            Ok(DensityGrid::Ks(ks))
        }
        GraphMethod::Rmst => {
            let (lo, hi) = (1e-4f64.ln(), 10f64.ln());
            let gammas = (0..grid_size)
                .map(|i| {
                    let t = i as f64 / (grid_size - 1) as f64;
                    (lo + t * (hi - lo)).exp()
                })
                .collect();
            Ok(DensityGrid::Gammas(gammas))
        }
    }
}

/// Per-graph JSON sidecar written next to each edge list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSidecar {
    #[serde(flatten)]
    pub tag: ConstructionTag,
    pub n: usize,
    pub edge_count: usize,
    pub density: f64,
}

impl GraphSidecar {
    pub fn of(g: &Graph) -> Self {
        GraphSidecar {
            tag: g.tag(),
            n: g.n(),
            edge_count: g.edge_count(),
            density: edge_density(g),
        }
    }
}

/// Write `u<TAB>v` lines (u < v, 0-based) plus a `.json` sidecar with the
/// construction metadata.
pub fn save_graph(g: &Graph, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for &(u, v) in g.edges() {
        writeln!(w, "{u}\t{v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar_path = sidecar_path(path);
    let json = serde_json::to_string_pretty(&GraphSidecar::of(g)).expect("sidecar serializes");
    std::fs::write(&sidecar_path, json).map_err(|e| Error::io(&sidecar_path, e))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

/// Read an edge-list TSV. The node count is the sidecar's `n` when present,
/// otherwise `n_hint` or max endpoint + 1.
pub fn load_graph(path: &Path, n_hint: Option<usize>) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    let mut max_node = 0u32;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split('\t');
        let parse = |field: Option<&str>| -> Result<u32> {
            field
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| {
                    Error::Format(format!(
                        "{}: bad edge at line {}",
                        path.display(),
                        lineno + 1
                    ))
                })
        };
        let u = parse(it.next())?;
        let v = parse(it.next())?;
        max_node = max_node.max(u).max(v);
        edges.push((u, v));
    }
    let n = match n_hint {
        Some(n) => n,
        None => match read_sidecar(path) {
            Some(sidecar) => sidecar.n,
            None => max_node as usize + 1,
        },
    };
    Graph::from_edges(n, edges, ConstructionTag::External)
}

fn read_sidecar(path: &Path) -> Option<GraphSidecar> {
    let text = std::fs::read_to_string(sidecar_path(path)).ok()?;
    serde_json::from_str(&text).ok()
}
