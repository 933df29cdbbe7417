//! Per-edge uniform meshes with shared vertex unknowns, linear finite element
//! assembly, and trapezoid quadrature of the edge measure.
//!
//! Global numbering: unknown `i < |V|` is the vertex with index `i` in
//! [`MetricGraph::vertices`]; the `m_e - 2` interior nodes of each edge follow,
//! edge by edge in declaration order.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::{MetricGraph, Point};
use crate::sparse::SparseOperator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("coefficient must be positive, found {value} at unknown {index}")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("coefficient must be non-negative, found {value} at unknown {index}")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("expected {expected} nodal values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite nodal value {value} at unknown {index}")]
    NonFinite { index: usize, value: f64 },
}

#[derive(Debug, Clone)]
pub struct Grid {
    graph: Arc<MetricGraph>,
    nodes_per_edge: Vec<usize>,
    steps: Vec<f64>,
    interior_start: Vec<usize>,
    dim: usize,
    node_distance: Vec<f64>,
    lumped: Vec<f64>,
}

/// One node of one edge: the same vertex unknown appears once per incident edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeNode {
    pub edge: usize,
    /// Local node number, `0..m_e`.
    pub local: usize,
    pub global: usize,
    pub offset: f64,
}

impl Grid {
    /// Uniform mesh on every edge with `m_e = ceil(l_e / target_h) + 1` nodes.
    pub fn build(graph: Arc<MetricGraph>, target_h: f64) -> Result<Self, DiscretizationError> {
        if !(target_h.is_finite() && target_h > 0.0) {
            return Err(DiscretizationError::BadParams(format!(
                "target_h must be positive, got {target_h}"
            )));
        }
        let mut nodes_per_edge = Vec::with_capacity(graph.num_edges());
        let mut steps = Vec::with_capacity(graph.num_edges());
        let mut interior_start = Vec::with_capacity(graph.num_edges());
        let mut next = graph.num_vertices();
        for e in graph.edges() {
            // the relative slack keeps exact ratios such as 3 / 0.1 from rounding up
            let ratio = e.length / target_h;
            let cells = (ratio * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            nodes_per_edge.push(cells + 1);
            steps.push(e.length / cells as f64);
            interior_start.push(next);
            next += cells - 1;
        }
        let mut grid = Grid {
            graph,
            nodes_per_edge,
            steps,
            interior_start,
            dim: next,
            node_distance: Vec::new(),
            lumped: Vec::new(),
        };
        let mut dist = vec![0.0; grid.dim];
        let mut lumped = vec![0.0; grid.dim];
        dist[..grid.graph.num_vertices()].copy_from_slice(grid.graph.root_distances());
        for e in 0..grid.graph.num_edges() {
            let h = grid.steps[e];
            for node in grid.edge_nodes(e) {
                if node.local > 0 && node.local + 1 < grid.nodes_per_edge[e] {
                    dist[node.global] = grid.graph.root_distance_along(e, node.offset).value;
                }
                let cells = if node.local == 0 || node.local + 1 == grid.nodes_per_edge[e] {
                    0.5
                } else {
                    1.0
                };
                lumped[node.global] += cells * h;
            }
        }
        grid.node_distance = dist;
        grid.lumped = lumped;
        Ok(grid)
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    /// Total number of unknowns.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_on_edge(&self, edge: usize) -> usize {
        self.nodes_per_edge[edge]
    }

    pub fn step(&self, edge: usize) -> f64 {
        self.steps[edge]
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().copied().fold(0.0, f64::max)
    }

    /// Global unknown of local node `k` on the edge with index `edge`.
    pub fn node_index(&self, edge: usize, k: usize) -> usize {
        let m = self.nodes_per_edge[edge];
        assert!(k < m, "node {k} outside edge with {m} nodes");
        let (from, to) = self.graph.endpoints(edge);
        if k == 0 {
            from
        } else if k == m - 1 {
            to
        } else {
            self.interior_start[edge] + k - 1
        }
    }

    pub fn edge_nodes(&self, edge: usize) -> impl Iterator<Item = EdgeNode> + '_ {
        let h = self.steps[edge];
        let m = self.nodes_per_edge[edge];
        let len = self.graph.edges()[edge].length;
        (0..m).map(move |k| EdgeNode {
            edge,
            local: k,
            global: self.node_index(edge, k),
            offset: if k == m - 1 { len } else { k as f64 * h },
        })
    }

    /// Every `(edge, node)` pair, edges in declaration order.
    pub fn all_edge_nodes(&self) -> impl Iterator<Item = EdgeNode> + '_ {
        (0..self.graph.num_edges()).flat_map(move |e| self.edge_nodes(e))
    }

    /// Location of a global unknown.
    pub fn node_point(&self, global: usize) -> Point {
        let nv = self.graph.num_vertices();
        if global < nv {
            return Point::Vertex(self.graph.vertices()[global]);
        }
        let e = self.interior_start.partition_point(|&s| s <= global) - 1;
        let k = global - self.interior_start[e] + 1;
        Point::OnEdge {
            edge: self.graph.edges()[e].id,
            offset: k as f64 * self.steps[e],
        }
    }

    pub fn point_of(&self, node: &EdgeNode) -> Point {
        self.node_point(node.global)
    }

    /// Root distance of every unknown.
    pub fn node_distances(&self) -> &[f64] {
        &self.node_distance
    }

    /// Trapezoid weights: half the width of the adjacent cells.
    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped
    }

    pub fn is_vertex_node(&self, global: usize) -> bool {
        global < self.graph.num_vertices()
    }
}

/// Nodal values on a [`Grid`]; continuous at shared vertices by construction.
#[derive(Debug, Clone)]
pub struct GraphFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    time: Option<f64>,
}

impl GraphFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, DiscretizationError> {
        if values.len() != grid.dim() {
            return Err(DiscretizationError::LengthMismatch {
                expected: grid.dim(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(DiscretizationError::NonFinite { index, value });
        }
        Ok(GraphFunction {
            grid,
            values,
            time: None,
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.dim();
        GraphFunction {
            grid,
            values: vec![0.0; n],
            time: None,
        }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.dim();
        GraphFunction {
            grid,
            values: vec![c; n],
            time: None,
        }
    }

    /// Samples a function of the root distance at every node.
    pub fn radial(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self, DiscretizationError> {
        let values = grid.node_distances().iter().map(|&d| f(d)).collect();
        Self::new(grid, values)
    }

    /// Samples `f(global index, point)` at every node.
    pub fn tabulate(
        grid: Arc<Grid>,
        f: impl Fn(usize, &Point) -> f64,
    ) -> Result<Self, DiscretizationError> {
        let values = (0..grid.dim()).map(|i| f(i, &grid.node_point(i))).collect();
        Self::new(grid, values)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, DiscretizationError> {
        let mut out = Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())?;
        out.time = self.time;
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &GraphFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid>) -> Result<(), DiscretizationError> {
        if Arc::ptr_eq(&self.grid, grid) {
            Ok(())
        } else {
            Err(DiscretizationError::GridMismatch)
        }
    }
}

/// Linear finite element stiffness: `1/h · [[1, -1], [-1, 1]]` per cell,
/// accumulated at shared vertices. Kirchhoff's condition is the natural
/// boundary condition of this assembly.
pub fn assemble_stiffness(grid: &Grid) -> SparseOperator {
    let mut triplets = Vec::new();
    for e in 0..grid.graph().num_edges() {
        let inv_h = 1.0 / grid.step(e);
        let m = grid.nodes_on_edge(e);
        for k in 0..m - 1 {
            let a = grid.node_index(e, k);
            let b = grid.node_index(e, k + 1);
            triplets.extend([
                (a, a, inv_h),
                (b, b, inv_h),
                (a, b, -inv_h),
                (b, a, -inv_h),
            ]);
        }
    }
    SparseOperator::from_triplets(grid.dim(), triplets)
}

/// Lumped mass weighted by a strictly positive density.
pub fn assemble_mass(grid: &Arc<Grid>, density: &GraphFunction) -> Result<SparseOperator, DiscretizationError> {
    density.check_grid(grid)?;
    if let Some((index, &value)) = density.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(DiscretizationError::NonPositiveDensity { index, value });
    }
    Ok(weighted_mass(grid, density.values()))
}

/// Lumped mass weighted by a non-negative coefficient (e.g. a potential).
pub fn assemble_potential_mass(
    grid: &Arc<Grid>,
    potential: &GraphFunction,
) -> Result<SparseOperator, DiscretizationError> {
    potential.check_grid(grid)?;
    if let Some((index, &value)) = potential.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(DiscretizationError::NegativeCoefficient { index, value });
    }
    Ok(weighted_mass(grid, potential.values()))
}

fn weighted_mass(grid: &Grid, coef: &[f64]) -> SparseOperator {
    let diag: Vec<f64> = grid
        .lumped_weights()
        .iter()
        .zip(coef)
        .map(|(w, c)| w * c)
        .collect();
    SparseOperator::from_diagonal(&diag)
}

/// Trapezoid rule applied edge by edge to an integrand evaluated per
/// `(edge, node)`, so the integrand may jump across vertices.
pub fn integrate_edgewise(grid: &Grid, mut integrand: impl FnMut(&EdgeNode) -> f64) -> f64 {
    let mut total = 0.0;
    for e in 0..grid.graph().num_edges() {
        let h = grid.step(e);
        let mut prev: Option<f64> = None;
        let mut sum = 0.0;
        for node in grid.edge_nodes(e) {
            let v = integrand(&node);
            if let Some(p) = prev {
                sum += 0.5 * h * (p + v);
            }
            prev = Some(v);
        }
        total += sum;
    }
    total
}

/// `∫ f·w dμ` by the trapezoid rule, edge by edge.
pub fn integrate(f: &GraphFunction, w: Option<&GraphFunction>) -> Result<f64, DiscretizationError> {
    let grid = f.grid();
    if let Some(w) = w {
        w.check_grid(grid)?;
    }
    let fv = f.values();
    Ok(integrate_edgewise(grid, |node| {
        let g = w.map_or(1.0, |w| w.values()[node.global]);
        fv[node.global] * g
    }))
}

/// `∫_{B_R(root)} f dμ` for the piecewise-linear interpolant of `f`, with
/// every cell clipped exactly at the sphere of radius `radius`.
pub fn integrate_ball(f: &GraphFunction, radius: f64) -> f64 {
    let grid = f.grid();
    let graph = grid.graph();
    let dist = graph.root_distances();
    let fv = f.values();
    let mut total = 0.0;
    for e in 0..graph.num_edges() {
        let (a, b) = graph.endpoints(e);
        let len = graph.edges()[e].length;
        // {d < R} on this edge is {s < R - d_a} ∪ {s > len + d_b - R}
        let lo_cut = radius - dist[a];
        let hi_cut = len + dist[b] - radius;
        let h = grid.step(e);
        let m = grid.nodes_on_edge(e);
        for k in 0..m - 1 {
            let s0 = k as f64 * h;
            let s1 = if k + 2 == m { len } else { (k + 1) as f64 * h };
            let g0 = fv[grid.node_index(e, k)];
            let g1 = fv[grid.node_index(e, k + 1)];
            let lin = |s: f64| g0 + (g1 - g0) * (s - s0) / (s1 - s0);
            let seg = |x: f64, y: f64| if y > x { 0.5 * (y - x) * (lin(x) + lin(y)) } else { 0.0 };
            let u1 = lo_cut.clamp(s0, s1);
            let u2 = hi_cut.clamp(s0, s1);
            total += if u1 >= u2 {
                seg(s0, s1)
            } else {
                seg(s0, u1) + seg(u2, s1)
            };
        }
    }
    total
}

/// `(∫ |f|^p · weight dμ)^{1/p}`.
pub fn weighted_lp_norm(
    f: &GraphFunction,
    weight: &GraphFunction,
    p: f64,
) -> Result<f64, DiscretizationError> {
    check_exponent(p)?;
    check_positive_weight(weight)?;
    let powered = f.map(|v| v.abs().powf(p))?;
    Ok(integrate(&powered, Some(weight))?.powf(1.0 / p))
}

/// `Σ_e (∫_e |f|^p · weight dx)^{1/p}`, the sum of per-edge norms. Reported
/// as a diagnostic next to [`weighted_lp_norm`].
pub fn per_edge_lp_sum(
    f: &GraphFunction,
    weight: &GraphFunction,
    p: f64,
) -> Result<f64, DiscretizationError> {
    check_exponent(p)?;
    check_positive_weight(weight)?;
    weight.check_grid(f.grid())?;
    let grid = f.grid();
    let (fv, wv) = (f.values(), weight.values());
    let mut total = 0.0;
    for e in 0..grid.graph().num_edges() {
        let h = grid.step(e);
        let vals: Vec<f64> = grid
            .edge_nodes(e)
            .map(|n| fv[n.global].abs().powf(p) * wv[n.global])
            .collect();
        let integral: f64 = vals.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        total += integral.powf(1.0 / p);
    }
    Ok(total)
}

fn check_exponent(p: f64) -> Result<(), DiscretizationError> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(DiscretizationError::BadParams(format!(
            "exponent p must be >= 1, got {p}"
        )))
    }
}

fn check_positive_weight(weight: &GraphFunction) -> Result<(), DiscretizationError> {
    match weight.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        Some((index, &value)) => Err(DiscretizationError::NonPositiveDensity { index, value }),
        None => Ok(()),
    }
}
