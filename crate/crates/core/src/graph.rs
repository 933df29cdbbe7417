//! Topology and metric of a finite metric graph.
//!
//! A [`MetricGraph`] is a finite, connected, loop-free graph whose edges are
//! oriented intervals `(0, length)`: offset `0` sits at the initial vertex
//! `from`, offset `length` at the final vertex `to`. Infinite graphs are
//! represented by finite truncations; the outermost vertices of a truncation
//! are kept as a marked `boundary` set.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
    pub length: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge {edge} is a loop at vertex {vertex}")]
    LoopEdge { edge: EdgeId, vertex: VertexId },
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    NonPositiveLength { edge: EdgeId, length: f64 },
    #[error("graph is disconnected: vertex {vertex} is not reachable from the root")]
    Disconnected { vertex: VertexId },
    #[error("edge {edge} duplicates edge {existing} between the same vertex pair")]
    DuplicateEdge { edge: EdgeId, existing: EdgeId },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
    #[error("vertex id {0} declared more than once")]
    DuplicateVertexId(VertexId),
    #[error("edge id {0} declared more than once")]
    DuplicateEdgeId(EdgeId),
    #[error("offset {offset} outside [0, {length}] on edge {edge}")]
    OffsetOutOfRange { edge: EdgeId, offset: f64, length: f64 },
    #[error("a metric graph needs at least one edge")]
    NoEdges,
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// Inbound/outbound degree of a vertex. `deg_in` counts edges ending at the
/// vertex, `deg_out` edges starting there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeInfo {
    pub deg_in: usize,
    pub deg_out: usize,
    pub deg: usize,
}

/// Outcome of the check `deg_in(v) <= deg_out(v)` for every vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeCondition {
    pub passed: bool,
    pub violations: Vec<VertexId>,
}

/// A location on the graph: a vertex, or an interior point of an edge.
///
/// Build points through [`MetricGraph::point`], which canonicalizes the
/// endpoints of an edge to their vertex form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Vertex(VertexId),
    OnEdge { edge: EdgeId, offset: f64 },
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Vertex(v) => write!(f, "{v}"),
            Point::OnEdge { edge, offset } => write!(f, "{edge}@{offset}"),
        }
    }
}

/// Distance to the root evaluated along an edge, with its arclength slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootDistance {
    pub value: f64,
    /// `+1` when the distance grows with the offset, `-1` when it shrinks.
    /// At a kink this is the slope on the side of smaller offsets.
    pub slope: f64,
    pub at_kink: bool,
}

/// On-disk layout of a graph file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
    pub root: VertexId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<VertexId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct MetricGraph {
    vertices: Vec<VertexId>,
    edges: Vec<Edge>,
    root: VertexId,
    boundary: Vec<VertexId>,
    vertex_index: BTreeMap<VertexId, usize>,
    edge_index: BTreeMap<EdgeId, usize>,
    // per vertex index: incident edge indices, in edge declaration order
    incidence: Vec<Vec<usize>>,
    root_distance: Vec<f64>,
}

impl TryFrom<GraphFile> for MetricGraph {
    type Error = GraphError;

    fn try_from(file: GraphFile) -> Result<Self, Self::Error> {
        MetricGraph::with_boundary(file.vertices, file.edges, file.root, file.boundary)
    }
}

impl From<MetricGraph> for GraphFile {
    fn from(graph: MetricGraph) -> Self {
        GraphFile {
            vertices: graph.vertices,
            edges: graph.edges,
            root: graph.root,
            boundary: graph.boundary,
        }
    }
}

impl MetricGraph {
    /// Validates and builds a graph with an empty truncation boundary.
    pub fn new(
        vertices: Vec<VertexId>,
        edges: Vec<Edge>,
        root: VertexId,
    ) -> Result<Self, GraphError> {
        Self::with_boundary(vertices, edges, root, Vec::new())
    }

    pub fn with_boundary(
        mut vertices: Vec<VertexId>,
        mut edges: Vec<Edge>,
        root: VertexId,
        mut boundary: Vec<VertexId>,
    ) -> Result<Self, GraphError> {
        vertices.sort_unstable();
        let mut vertex_index = BTreeMap::new();
        for (i, &v) in vertices.iter().enumerate() {
            if vertex_index.insert(v, i).is_some() {
                return Err(GraphError::DuplicateVertexId(v));
            }
        }
        if edges.is_empty() {
            return Err(GraphError::NoEdges);
        }
        edges.sort_by_key(|e| e.id);

        let mut edge_index = BTreeMap::new();
        let mut pairs: BTreeMap<(VertexId, VertexId), EdgeId> = BTreeMap::new();
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (k, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id, k).is_some() {
                return Err(GraphError::DuplicateEdgeId(e.id));
            }
            let from = *vertex_index
                .get(&e.from)
                .ok_or(GraphError::UnknownVertex(e.from))?;
            let to = *vertex_index
                .get(&e.to)
                .ok_or(GraphError::UnknownVertex(e.to))?;
            if e.from == e.to {
                return Err(GraphError::LoopEdge {
                    edge: e.id,
                    vertex: e.from,
                });
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(GraphError::NonPositiveLength {
                    edge: e.id,
                    length: e.length,
                });
            }
            let key = (e.from.min(e.to), e.from.max(e.to));
            if let Some(&existing) = pairs.get(&key) {
                return Err(GraphError::DuplicateEdge {
                    edge: e.id,
                    existing,
                });
            }
            pairs.insert(key, e.id);
            incidence[from].push(k);
            incidence[to].push(k);
        }

        if !vertex_index.contains_key(&root) {
            return Err(GraphError::UnknownVertex(root));
        }
        boundary.sort_unstable();
        boundary.dedup();
        if let Some(&b) = boundary.iter().find(|b| !vertex_index.contains_key(b)) {
            return Err(GraphError::UnknownVertex(b));
        }

        let mut graph = MetricGraph {
            vertices,
            edges,
            root,
            boundary,
            vertex_index,
            edge_index,
            incidence,
            root_distance: Vec::new(),
        };
        let dist = graph.vertex_distances_from(&Point::Vertex(root))?;
        if let Some(i) = dist.iter().position(|d| d.is_infinite()) {
            return Err(GraphError::Disconnected {
                vertex: graph.vertices[i],
            });
        }
        graph.root_distance = dist;
        Ok(graph)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Total length, i.e. the measure of the whole graph.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn vertex_index(&self, v: VertexId) -> Result<usize, GraphError> {
        self.vertex_index
            .get(&v)
            .copied()
            .ok_or(GraphError::UnknownVertex(v))
    }

    pub fn edge_index(&self, e: EdgeId) -> Result<usize, GraphError> {
        self.edge_index
            .get(&e)
            .copied()
            .ok_or(GraphError::UnknownEdge(e))
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge, GraphError> {
        Ok(&self.edges[self.edge_index(e)?])
    }

    /// Indices (into [`edges`](Self::edges)) of the edges incident to the
    /// vertex with the given index.
    pub fn incident_edges(&self, vertex_index: usize) -> &[usize] {
        &self.incidence[vertex_index]
    }

    /// Endpoint vertex indices `(from, to)` of the edge with the given index.
    pub fn endpoints(&self, edge_index: usize) -> (usize, usize) {
        let e = &self.edges[edge_index];
        (self.vertex_index[&e.from], self.vertex_index[&e.to])
    }

    pub fn degree(&self, v: VertexId) -> Result<DegreeInfo, GraphError> {
        let i = self.vertex_index(v)?;
        let mut deg_in = 0;
        let mut deg_out = 0;
        for &k in &self.incidence[i] {
            let e = &self.edges[k];
            if e.to == v {
                deg_in += 1;
            }
            if e.from == v {
                deg_out += 1;
            }
        }
        Ok(DegreeInfo {
            deg_in,
            deg_out,
            deg: deg_in + deg_out,
        })
    }

    /// Checks `deg_in(v) <= deg_out(v)` at every vertex, leaves included.
    pub fn check_degree_condition(&self) -> DegreeCondition {
        let violations: Vec<VertexId> = self
            .vertices
            .iter()
            .copied()
            .filter(|&v| {
                let d = self.degree(v).expect("declared vertex");
                d.deg_in > d.deg_out
            })
            .collect();
        DegreeCondition {
            passed: violations.is_empty(),
            violations,
        }
    }

    /// Builds a point on `edge` at arclength `offset` from its initial vertex.
    /// Offsets `0` and `length` map to the endpoint vertices.
    pub fn point(&self, edge: EdgeId, offset: f64) -> Result<Point, GraphError> {
        let e = self.edge(edge)?;
        if !(0.0..=e.length).contains(&offset) {
            return Err(GraphError::OffsetOutOfRange {
                edge,
                offset,
                length: e.length,
            });
        }
        Ok(if offset == 0.0 {
            Point::Vertex(e.from)
        } else if offset == e.length {
            Point::Vertex(e.to)
        } else {
            Point::OnEdge { edge, offset }
        })
    }

    fn check_point(&self, p: &Point) -> Result<(), GraphError> {
        match *p {
            Point::Vertex(v) => self.vertex_index(v).map(|_| ()),
            Point::OnEdge { edge, offset } => self.point(edge, offset).map(|_| ()),
        }
    }

    /// Shortest-path distances from `source` to every vertex, indexed like
    /// [`vertices`](Self::vertices). Label-setting with ties resolved by the
    /// lowest vertex id.
    pub fn vertex_distances_from(&self, source: &Point) -> Result<Vec<f64>, GraphError> {
        self.check_point(source)?;
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        let seed = |i: usize, d: f64, dist: &mut Vec<f64>, heap: &mut BinaryHeap<Label>| {
            if d < dist[i] {
                dist[i] = d;
                heap.push(Label { dist: d, vertex: i });
            }
        };
        match *source {
            Point::Vertex(v) => seed(self.vertex_index[&v], 0.0, &mut dist, &mut heap),
            Point::OnEdge { edge, offset } => {
                let k = self.edge_index[&edge];
                let (a, b) = self.endpoints(k);
                seed(a, offset, &mut dist, &mut heap);
                seed(b, self.edges[k].length - offset, &mut dist, &mut heap);
            }
        }
        let mut settled = vec![false; n];
        while let Some(Label { dist: d, vertex: i }) = heap.pop() {
            if settled[i] {
                continue;
            }
            settled[i] = true;
            for &k in &self.incidence[i] {
                let (a, b) = self.endpoints(k);
                let j = if a == i { b } else { a };
                let nd = d + self.edges[k].length;
                if !settled[j] && nd < dist[j] {
                    dist[j] = nd;
                    heap.push(Label { dist: nd, vertex: j });
                }
            }
        }
        Ok(dist)
    }

    /// Length of a shortest path between two points. Two points on the same
    /// edge also compare against the direct within-edge route.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64, GraphError> {
        self.check_point(y)?;
        let dist = self.vertex_distances_from(x)?;
        let via_vertices = self.distance_from_vertex_table(&dist, y);
        let direct = match (*x, *y) {
            (
                Point::OnEdge { edge: ex, offset: sx },
                Point::OnEdge { edge: ey, offset: sy },
            ) if ex == ey => (sx - sy).abs(),
            _ => f64::INFINITY,
        };
        Ok(via_vertices.min(direct))
    }

    fn distance_from_vertex_table(&self, dist: &[f64], y: &Point) -> f64 {
        match *y {
            Point::Vertex(v) => dist[self.vertex_index[&v]],
            Point::OnEdge { edge, offset } => {
                let k = self.edge_index[&edge];
                let (a, b) = self.endpoints(k);
                (dist[a] + offset).min(dist[b] + self.edges[k].length - offset)
            }
        }
    }

    /// Distance from the root to each vertex, indexed like [`vertices`](Self::vertices).
    pub fn root_distances(&self) -> &[f64] {
        &self.root_distance
    }

    pub fn root_distance(&self, x: &Point) -> Result<f64, GraphError> {
        self.check_point(x)?;
        Ok(self.distance_from_vertex_table(&self.root_distance, x))
    }

    /// Offset on the edge (by index) where the root distance switches from
    /// increasing to decreasing, if that happens strictly inside the edge.
    pub fn kink_offset(&self, edge_index: usize) -> Option<f64> {
        let (a, b) = self.endpoints(edge_index);
        let len = self.edges[edge_index].length;
        let s = 0.5 * (len + self.root_distance[b] - self.root_distance[a]);
        let tol = 1e-12 * len.max(1.0);
        (s > tol && s < len - tol).then_some(s)
    }

    /// Root distance and its arclength slope at `offset` along the edge with
    /// the given index.
    pub fn root_distance_along(&self, edge_index: usize, offset: f64) -> RootDistance {
        let (a, b) = self.endpoints(edge_index);
        let len = self.edges[edge_index].length;
        let up = self.root_distance[a] + offset;
        let down = self.root_distance[b] + len - offset;
        match self.kink_offset(edge_index) {
            Some(s) if offset == s => RootDistance {
                value: up.min(down),
                slope: 1.0,
                at_kink: true,
            },
            Some(s) => RootDistance {
                value: up.min(down),
                slope: if offset < s { 1.0 } else { -1.0 },
                at_kink: false,
            },
            None => {
                // monotone along the whole edge
                let increasing = self.root_distance[a] <= self.root_distance[b];
                RootDistance {
                    value: up.min(down),
                    slope: if increasing { 1.0 } else { -1.0 },
                    at_kink: false,
                }
            }
        }
    }

    /// Membership of `x` in the open ball of radius `radius` around `center`.
    pub fn ball_indicator(&self, center: &Point, radius: f64, x: &Point) -> Result<bool, GraphError> {
        if !(radius > 0.0) {
            return Err(GraphError::BadParams(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(self.distance(center, x)? < radius)
    }

    /// Vertices of degree one other than the root.
    pub fn leaves(&self) -> Vec<VertexId> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|&(i, &v)| v != self.root && self.incidence[i].len() == 1)
            .map(|(_, &v)| v)
            .collect()
    }

    pub fn to_file(&self) -> GraphFile {
        self.clone().into()
    }
}

#[derive(Debug, Clone, Copy)]
struct Label {
    dist: f64,
    vertex: usize,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // max-heap: reverse so the smallest distance, then smallest id, pops first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Named test families. Every family is rooted at its canonical center and
/// oriented away from the root; its leaves form the truncation boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GraphFamily {
    /// `edges` consecutive edges from the root.
    Path { edges: usize, length: f64 },
    /// `arms` edges leaving the center.
    Star { arms: usize, length: f64 },
    /// Complete binary tree with `depth` levels of edges.
    BinaryTree { depth: usize, length: f64 },
    /// Path long enough to contain the ball of the given radius.
    TruncatedRay { radius: f64, length: f64 },
}

pub fn generate(family: &GraphFamily) -> Result<MetricGraph, GraphError> {
    let bad = |msg: String| Err(GraphError::BadParams(msg));
    let length = match family {
        GraphFamily::Path { length, .. }
        | GraphFamily::Star { length, .. }
        | GraphFamily::BinaryTree { length, .. }
        | GraphFamily::TruncatedRay { length, .. } => *length,
    };
    if !(length.is_finite() && length > 0.0) {
        return bad(format!("edge length must be positive, got {length}"));
    }
    let (n_vertices, parents): (usize, Vec<(usize, usize)>) = match *family {
        GraphFamily::Path { edges, .. } => {
            if edges == 0 {
                return bad("path needs at least one edge".into());
            }
            (edges + 1, (0..edges).map(|i| (i, i + 1)).collect())
        }
        GraphFamily::Star { arms, .. } => {
            if arms == 0 {
                return bad("star needs at least one arm".into());
            }
            (arms + 1, (1..=arms).map(|i| (0, i)).collect())
        }
        GraphFamily::BinaryTree { depth, .. } => {
            if depth == 0 {
                return bad("binary tree of depth 0 has no edges".into());
            }
            if depth > 24 {
                return bad(format!("binary tree depth {depth} is too large"));
            }
            let n = (1usize << (depth + 1)) - 1;
            (n, (1..n).map(|c| ((c - 1) / 2, c)).collect())
        }
        GraphFamily::TruncatedRay { radius, .. } => {
            if !(radius.is_finite() && radius > 0.0) {
                return bad(format!("ray radius must be positive, got {radius}"));
            }
            let edges = (radius / length - 1e-9).ceil().max(1.0) as usize;
            (edges + 1, (0..edges).map(|i| (i, i + 1)).collect())
        }
    };
    let vertices = (0..n_vertices).map(VertexId).collect();
    let edges = parents
        .iter()
        .enumerate()
        .map(|(k, &(from, to))| Edge {
            id: EdgeId(k),
            from: VertexId(from),
            to: VertexId(to),
            length,
        })
        .collect();
    let graph = MetricGraph::new(vertices, edges, VertexId(0))?;
    let leaves = graph.leaves();
    MetricGraph::with_boundary(graph.vertices, graph.edges, graph.root, leaves)
}
