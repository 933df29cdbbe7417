//! Discrete elliptic and parabolic solves on truncated graphs.
//!
//! Both problems use the Kirchhoff stiffness `A` and lumped mass operators
//! from [`crate::discretization`]. Dirichlet vertices are eliminated
//! symmetrically, so every factorized system is symmetric.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{
    assemble_mass, assemble_potential_mass, assemble_stiffness, DiscretizationError, Grid,
    GraphFunction,
};
use crate::graph::{GraphError, VertexId};
use crate::sparse::{LdlFactor, LinalgError, SparseOperator};

/// Largest accepted relative residual of a linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("linear solve residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}")]
    SolverDiverged { residual: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

impl From<LinalgError> for SolverError {
    fn from(e: LinalgError) -> Self {
        SolverError::SingularSystem(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Dirichlet { value: f64 },
    /// Kirchhoff (Neumann at a leaf); the natural condition of the assembly.
    Natural,
}

/// Conditions per vertex; vertices not listed are natural.
pub type BoundaryMap = BTreeMap<VertexId, BoundaryCondition>;

/// Homogeneous Dirichlet on every marked boundary vertex of the grid's graph.
pub fn dirichlet_on_boundary(grid: &Grid) -> BoundaryMap {
    grid.graph()
        .boundary()
        .iter()
        .map(|&v| (v, BoundaryCondition::Dirichlet { value: 0.0 }))
        .collect()
}

/// Split of the unknowns into free ones and Dirichlet ones with their values.
struct Constraints {
    free: Vec<usize>,
    fixed: Vec<(usize, f64)>,
}

impl Constraints {
    fn new(grid: &Grid, boundary: &BoundaryMap) -> Result<Self, SolverError> {
        let graph = grid.graph();
        let mut fixed_value = vec![None; grid.dim()];
        for (&v, bc) in boundary {
            let i = graph.vertex_index(v)?;
            if let BoundaryCondition::Dirichlet { value } = *bc {
                if !value.is_finite() {
                    return Err(SolverError::BadParams(format!(
                        "Dirichlet value at {v} is not finite"
                    )));
                }
                fixed_value[i] = Some(value);
            }
        }
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for (i, f) in fixed_value.into_iter().enumerate() {
            match f {
                Some(val) => fixed.push((i, val)),
                None => free.push(i),
            }
        }
        Ok(Constraints { free, fixed })
    }

    /// Reduced right-hand side `b_f - K_fc u_c`.
    fn reduce_rhs(&self, k: &SparseOperator, b: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; k.dim()];
        for &(i, v) in &self.fixed {
            full[i] = v;
        }
        let kc = k.mul_vec(&full);
        self.free.iter().map(|&i| b[i] - kc[i]).collect()
    }

    fn expand(&self, reduced: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&i, &v) in self.free.iter().zip(reduced) {
            out[i] = v;
        }
        for &(i, v) in &self.fixed {
            out[i] = v;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub grid: Arc<Grid>,
    /// Non-negative potential `V`.
    pub potential: GraphFunction,
    pub rhs: GraphFunction,
    pub boundary: BoundaryMap,
}

/// Solves `(A + M_V) u = M f` with Dirichlet rows substituted.
pub fn solve_elliptic(problem: &EllipticProblem) -> Result<GraphFunction, SolverError> {
    let grid = &problem.grid;
    let n = grid.dim();
    let a = assemble_stiffness(grid);
    let mv = assemble_potential_mass(grid, &problem.potential)?;
    let k = a.add_scaled(&mv, 1.0);
    if !problem.rhs.same_grid(&problem.potential) || !Arc::ptr_eq(problem.rhs.grid(), grid) {
        return Err(DiscretizationError::GridMismatch.into());
    }
    let w = grid.lumped_weights();
    let b: Vec<f64> = problem.rhs.values().iter().zip(w).map(|(f, w)| f * w).collect();
    let cons = Constraints::new(grid, &problem.boundary)?;

    let pure_neumann = cons.fixed.is_empty() && problem.potential.values().iter().all(|&v| v == 0.0);
    let u = if pure_neumann {
        let total: f64 = b.iter().sum();
        let scale: f64 = b.iter().map(|v| v.abs()).sum();
        if total.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(SolverError::SingularSystem(format!(
                "pure Kirchhoff problem without potential needs zero-mean data, mean integral {total:e}"
            )));
        }
        // pin unknown 0, then shift to zero mean
        let keep: Vec<usize> = (1..n).collect();
        let reduced = k.restrict(&keep);
        let x = LdlFactor::new(&reduced)?.solve(&b[1..])?;
        let mut u = vec![0.0];
        u.extend(x);
        let mean = u.iter().zip(w).map(|(u, w)| u * w).sum::<f64>() / w.iter().sum::<f64>();
        u.iter().map(|v| v - mean + 0.0).collect()
    } else {
        let reduced = k.restrict(&cons.free);
        let rhs = cons.reduce_rhs(&k, &b);
        let x = LdlFactor::new(&reduced)?.solve(&rhs)?;
        cons.expand(&x, n)
    };

    let residual = free_residual(&k, &u, &b, &cons.free);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(SolverError::SolverDiverged { residual });
    }
    Ok(GraphFunction::new(grid.clone(), u)?)
}

/// Residual of `K u = b` on the free rows, relative to `| |K| |u| + |b| |`.
fn free_residual(k: &SparseOperator, u: &[f64], b: &[f64], free: &[usize]) -> f64 {
    let (mut r2, mut s2) = (0.0, 0.0);
    for &i in free {
        let (mut ku, mut mag) = (0.0, b[i].abs());
        for (j, a) in k.row(i) {
            ku += a * u[j];
            mag += (a * u[j]).abs();
        }
        r2 += (ku - b[i]) * (ku - b[i]);
        s2 += mag * mag;
    }
    if s2 == 0.0 {
        0.0
    } else {
        (r2 / s2).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub grid: Arc<Grid>,
    /// Strictly positive density `rho`.
    pub density: GraphFunction,
    pub initial: GraphFunction,
    pub t_final: f64,
    /// Requested step; the solver uses `T / ceil(T / dt)`.
    pub dt: f64,
    pub scheme: TimeScheme,
    pub boundary: BoundaryMap,
}

/// Snapshots at `t_n = n·dt`, `n = 0..=N`, with `t_N = T`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    snapshots: Vec<GraphFunction>,
    dt: f64,
}

impl Trajectory {
    /// Wraps externally computed snapshots; times must start at 0 and
    /// increase strictly, and all snapshots must share one grid.
    pub fn from_snapshots(snapshots: Vec<GraphFunction>, dt: f64) -> Result<Self, SolverError> {
        let first = snapshots
            .first()
            .ok_or_else(|| SolverError::BadParams("trajectory needs a snapshot".into()))?;
        let times: Option<Vec<f64>> = snapshots.iter().map(|s| s.time()).collect();
        let times = times.ok_or_else(|| SolverError::BadParams("snapshots need time stamps".into()))?;
        if times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolverError::BadParams("snapshot times must increase from 0".into()));
        }
        if snapshots.iter().any(|s| !s.same_grid(first)) {
            return Err(DiscretizationError::GridMismatch.into());
        }
        Ok(Trajectory { snapshots, dt })
    }

    pub fn snapshots(&self) -> &[GraphFunction] {
        &self.snapshots
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.snapshots.iter().map(|s| s.time().expect("snapshots are stamped"))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().and_then(|s| s.time()).unwrap_or(0.0)
    }

    /// Snapshot index whose time equals `t` up to `1e-9·dt`.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let n = (t / self.dt).round();
        if n < 0.0 || (n * self.dt - t).abs() > 1e-9 * self.dt {
            return None;
        }
        let n = n as usize;
        (n < self.snapshots.len()).then_some(n)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.snapshots[0].grid()
    }
}

/// Number of steps and the adjusted step for a horizon `t_final`.
pub fn time_steps(t_final: f64, dt: f64) -> Result<(usize, f64), SolverError> {
    if !(t_final.is_finite() && t_final > 0.0 && dt.is_finite() && dt > 0.0 && dt <= t_final) {
        return Err(SolverError::BadParams(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_final}"
        )));
    }
    let n = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

/// Time-steps `rho u_t = u''` with Kirchhoff coupling at the vertices.
pub fn solve_heat(problem: &ParabolicProblem) -> Result<Trajectory, SolverError> {
    let grid = &problem.grid;
    let n = grid.dim();
    if !problem.initial.same_grid(&problem.density) || !Arc::ptr_eq(problem.initial.grid(), grid) {
        return Err(DiscretizationError::GridMismatch.into());
    }
    let (steps, dt) = time_steps(problem.t_final, problem.dt)?;
    let a = assemble_stiffness(grid);
    let m = assemble_mass(grid, &problem.density)?;
    let theta = match problem.scheme {
        TimeScheme::ImplicitEuler => 1.0,
        TimeScheme::CrankNicolson => 0.5,
    };
    let lhs = m.add_scaled(&a, theta * dt);
    let explicit = (theta < 1.0).then(|| m.add_scaled(&a, -(1.0 - theta) * dt));
    let cons = Constraints::new(grid, &problem.boundary)?;
    let factor = LdlFactor::new(&lhs.restrict(&cons.free))?;

    let mut u = problem.initial.values().to_vec();
    for &(i, v) in &cons.fixed {
        u[i] = v;
    }
    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(GraphFunction::new(grid.clone(), u.clone())?.with_time(0.0));
    for step in 1..=steps {
        let b = match &explicit {
            Some(r) => r.mul_vec(&u),
            None => m.mul_vec(&u),
        };
        let x = factor.solve(&cons.reduce_rhs(&lhs, &b))?;
        let next = cons.expand(&x, n);
        let residual = free_residual(&lhs, &next, &b, &cons.free);
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(SolverError::SolverDiverged { residual });
        }
        u = next;
        let t = if step == steps { problem.t_final } else { step as f64 * dt };
        snapshots.push(GraphFunction::new(grid.clone(), u.clone())?.with_time(t));
    }
    Ok(Trajectory { snapshots, dt })
}

/// `K(u)(v) = Σ_e du_e/dn(v)`: `+u'` on edges ending at `v`, `-u'` on edges
/// starting at `v`. One-sided slopes use the second-order three-point stencil
/// (two-point on single-cell edges), written on differences so constants
/// give exactly zero.
pub fn kirchhoff_residual(u: &GraphFunction, v: VertexId) -> Result<f64, SolverError> {
    let grid = u.grid();
    let graph = grid.graph();
    let vi = graph.vertex_index(v)?;
    let vals = u.values();
    let mut total = 0.0;
    for &e in graph.incident_edges(vi) {
        let (from, _) = graph.endpoints(e);
        let h = grid.step(e);
        let m = grid.nodes_on_edge(e);
        let at = |k: usize| vals[grid.node_index(e, k)];
        if from == vi {
            let slope = if m == 2 {
                (at(1) - at(0)) / h
            } else {
                (4.0 * (at(1) - at(0)) - (at(2) - at(0))) / (2.0 * h)
            };
            total -= slope;
        } else {
            let slope = if m == 2 {
                (at(1) - at(0)) / h
            } else {
                (4.0 * (at(m - 1) - at(m - 2)) - (at(m - 1) - at(m - 3))) / (2.0 * h)
            };
            total += slope;
        }
    }
    Ok(total)
}

/// `cosh(sqrt(V0) · d(x, x0))`, a solution of `u'' = V0 u` along any ray
/// from the root with zero slope at the root.
pub fn exact_ray_solution(v0: f64, grid: &Arc<Grid>) -> Result<GraphFunction, SolverError> {
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(SolverError::BadParams(format!("V0 must be positive, got {v0}")));
    }
    let c = v0.sqrt();
    Ok(GraphFunction::radial(grid.clone(), |d| (c * d).cosh())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::integrate;
    use crate::graph::{generate, GraphFamily};
    use proptest::prelude::*;

    fn grid(family: GraphFamily, h: f64) -> Arc<Grid> {
        Arc::new(Grid::build(Arc::new(generate(&family).unwrap()), h).unwrap())
    }

    fn cosh_problem(h: f64) -> EllipticProblem {
        let g = grid(GraphFamily::Path { edges: 1, length: 1.0 }, h);
        EllipticProblem {
            potential: GraphFunction::constant(g.clone(), 1.0),
            rhs: GraphFunction::zeros(g.clone()),
            boundary: [(VertexId(0), BoundaryCondition::Dirichlet { value: 1.0 })].into(),
            grid: g,
        }
    }

    fn cosh_error(h: f64) -> f64 {
        let u = solve_elliptic(&cosh_problem(h)).unwrap();
        let exact = |s: f64| (1.0 - s).cosh() / 1f64.cosh();
        u.grid()
            .all_edge_nodes()
            .map(|n| (u.values()[n.global] - exact(n.offset)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn coercive_zero_data_gives_zero() {
        let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 0.25);
        let p = EllipticProblem {
            potential: GraphFunction::constant(g.clone(), 1.0),
            rhs: GraphFunction::zeros(g.clone()),
            boundary: BoundaryMap::new(),
            grid: g,
        };
        let u = solve_elliptic(&p).unwrap();
        assert!(u.values().iter().all(|v| v.to_bits() == 0));
    }

    #[test]
    fn cosh_oracle_single_edge() {
        let p = cosh_problem(1.0 / 64.0);
        let u = solve_elliptic(&p).unwrap();
        let mid = u.grid().node_index(0, 32);
        assert!((u.values()[mid] - 0.730_762_9).abs() < 1e-4);
        assert!((u.values()[1] - 0.648_054_3).abs() < 1e-4);
        let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0].iter().map(|&h| cosh_error(h)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
        }
    }

    #[test]
    fn cosh_oracle_star_symmetry() {
        let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 1.0 / 32.0);
        let p = EllipticProblem {
            potential: GraphFunction::constant(g.clone(), 1.0),
            rhs: GraphFunction::zeros(g.clone()),
            boundary: [(VertexId(0), BoundaryCondition::Dirichlet { value: 1.0 })].into(),
            grid: g.clone(),
        };
        let u = solve_elliptic(&p).unwrap();
        for leaf in 1..=3 {
            assert!((u.values()[leaf] - 1.0 / 1f64.cosh()).abs() < 1e-3);
            assert!((u.values()[leaf] - u.values()[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn manufactured_source() {
        // -u'' + u = f with u = cos(pi s) on [0, 1], natural at both ends
        let g = grid(GraphFamily::Path { edges: 1, length: 1.0 }, 1.0 / 128.0);
        let pi = std::f64::consts::PI;
        let rhs = GraphFunction::radial(g.clone(), |s| (1.0 + pi * pi) * (pi * s).cos()).unwrap();
        let p = EllipticProblem {
            potential: GraphFunction::constant(g.clone(), 1.0),
            rhs,
            boundary: BoundaryMap::new(),
            grid: g.clone(),
        };
        let u = solve_elliptic(&p).unwrap();
        let exact = GraphFunction::radial(g, |s| (pi * s).cos()).unwrap();
        let err = u.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn pure_neumann_needs_zero_mean() {
        let g = grid(GraphFamily::Path { edges: 1, length: 1.0 }, 0.1);
        let mut p = EllipticProblem {
            potential: GraphFunction::zeros(g.clone()),
            rhs: GraphFunction::constant(g.clone(), 1.0),
            boundary: BoundaryMap::new(),
            grid: g.clone(),
        };
        assert!(matches!(solve_elliptic(&p), Err(SolverError::SingularSystem(_))));
        let pi = std::f64::consts::PI;
        p.rhs = GraphFunction::radial(g.clone(), |s| pi * pi * (pi * s).cos()).unwrap();
        let u = solve_elliptic(&p).unwrap();
        assert!(integrate(&u, None).unwrap().abs() < 1e-12);
        assert!((u.values()[0] - 1.0).abs() < 2e-2);
    }

    #[test]
    fn unknown_boundary_vertex() {
        let mut p = cosh_problem(0.5);
        p.boundary.insert(VertexId(7), BoundaryCondition::Natural);
        assert!(matches!(solve_elliptic(&p), Err(SolverError::Graph(_))));
    }

    #[test]
    fn kirchhoff_examples() {
        let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 0.25);
        for value in [2.5, 3.7, -1e-7, 123456.789] {
            let c = GraphFunction::constant(g.clone(), value);
            for v in 0..4 {
                assert_eq!(kirchhoff_residual(&c, VertexId(v)).unwrap(), 0.0);
            }
        }
        let d = GraphFunction::radial(g.clone(), |d| d).unwrap();
        assert!((kirchhoff_residual(&d, VertexId(0)).unwrap() + 3.0).abs() < 1e-12);
        // at a leaf the only edge ends there with slope +1
        assert!((kirchhoff_residual(&d, VertexId(1)).unwrap() - 1.0).abs() < 1e-12);

        let path = grid(GraphFamily::Path { edges: 2, length: 1.0 }, 0.25);
        let s = GraphFunction::radial(path, |d| d).unwrap();
        assert!(kirchhoff_residual(&s, VertexId(1)).unwrap().abs() < 1e-12);
        assert!(kirchhoff_residual(&s, VertexId(9)).is_err());
    }

    #[test]
    fn elliptic_solution_satisfies_kirchhoff() {
        let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 1.0 / 64.0);
        let mut p = EllipticProblem {
            potential: GraphFunction::constant(g.clone(), 1.0),
            rhs: GraphFunction::zeros(g.clone()),
            boundary: (1..=3).map(|v| (VertexId(v), BoundaryCondition::Dirichlet { value: v as f64 })).collect(),
            grid: g,
        };
        let r_fine = kirchhoff_residual(&solve_elliptic(&p).unwrap(), VertexId(0)).unwrap();
        p.grid = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 1.0 / 32.0);
        p.potential = GraphFunction::constant(p.grid.clone(), 1.0);
        p.rhs = GraphFunction::zeros(p.grid.clone());
        let r_coarse = kirchhoff_residual(&solve_elliptic(&p).unwrap(), VertexId(0)).unwrap();
        assert!(r_fine.abs() < 1e-3, "{r_fine}");
        assert!(r_coarse.abs() / r_fine.abs() > 3.0, "{r_coarse} vs {r_fine}");
    }

    #[test]
    fn ray_solution() {
        let g = grid(GraphFamily::TruncatedRay { radius: 2.0, length: 1.0 }, 0.5);
        let u = exact_ray_solution(1.0, &g).unwrap();
        assert_eq!(u.values()[0], 1.0);
        assert!((u.values()[1] - 1.543_080_6).abs() < 1e-7);
        let u4 = exact_ray_solution(4.0, &g).unwrap();
        assert!((u4.values()[1] - 3.762_195_7).abs() < 1e-7);
        assert!(exact_ray_solution(0.0, &g).is_err());
    }

    fn hat_problem(scheme: TimeScheme) -> ParabolicProblem {
        let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 0.125);
        let mut init = vec![0.0; g.dim()];
        init[0] = 1.0;
        ParabolicProblem {
            density: GraphFunction::constant(g.clone(), 1.0),
            initial: GraphFunction::new(g.clone(), init).unwrap(),
            t_final: 1.0,
            dt: 1.0 / 200.0,
            scheme,
            boundary: BoundaryMap::new(),
            grid: g,
        }
    }

    #[test]
    fn heat_conserves_mass_and_bounds() {
        for scheme in [TimeScheme::ImplicitEuler, TimeScheme::CrankNicolson] {
            let p = hat_problem(scheme);
            let traj = solve_heat(&p).unwrap();
            assert_eq!(traj.snapshots().len(), 201);
            assert_eq!(traj.final_time(), 1.0);
            let m0 = integrate(&p.initial, Some(&p.density)).unwrap();
            for s in traj.snapshots() {
                let m = integrate(s, Some(&p.density)).unwrap();
                assert!((m - m0).abs() <= 1e-10 * m0.abs());
                if scheme == TimeScheme::ImplicitEuler {
                    assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
                }
            }
        }
    }

    #[test]
    fn heat_dissipates_energy() {
        let p = hat_problem(TimeScheme::ImplicitEuler);
        let a = assemble_stiffness(&p.grid);
        let traj = solve_heat(&p).unwrap();
        let energies: Vec<f64> = traj.snapshots().iter().map(|s| a.bilinear(s.values(), s.values())).collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn heat_zero_and_constant_data() {
        let mut p = hat_problem(TimeScheme::ImplicitEuler);
        p.initial = GraphFunction::zeros(p.grid.clone());
        p.boundary = dirichlet_on_boundary(&p.grid);
        let traj = solve_heat(&p).unwrap();
        assert!(traj.snapshots().iter().all(|s| s.values().iter().all(|v| v.to_bits() == 0)));

        p.initial = GraphFunction::constant(p.grid.clone(), 1.0);
        p.boundary = BoundaryMap::new();
        let traj = solve_heat(&p).unwrap();
        for s in traj.snapshots() {
            assert!(s.values().iter().all(|&v| (v - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn time_step_adjustment() {
        assert_eq!(time_steps(1.0, 0.3).unwrap(), (4, 0.25));
        assert_eq!(time_steps(1.0, 0.005).unwrap().0, 200);
        assert!(time_steps(1.0, 2.0).is_err());
        assert!(time_steps(0.0, 0.1).is_err());
        let traj = solve_heat(&hat_problem(TimeScheme::ImplicitEuler)).unwrap();
        assert_eq!(traj.index_of_time(0.5), Some(100));
        assert_eq!(traj.index_of_time(0.5025), None);
    }

    #[test]
    fn heat_matches_cosine_mode() {
        // u = exp(-pi^2 t) cos(pi s) on [0, 1] with natural ends
        let pi = std::f64::consts::PI;
        let err = |h: f64, scheme| {
            let g = grid(GraphFamily::Path { edges: 1, length: 1.0 }, h);
            let p = ParabolicProblem {
                density: GraphFunction::constant(g.clone(), 1.0),
                initial: GraphFunction::radial(g.clone(), |s| (pi * s).cos()).unwrap(),
                t_final: 0.1,
                dt: h,
                scheme,
                boundary: BoundaryMap::new(),
                grid: g.clone(),
            };
            let last = solve_heat(&p).unwrap().snapshots().last().unwrap().clone();
            let exact = GraphFunction::radial(g, |s| (-pi * pi * 0.1f64).exp() * (pi * s).cos()).unwrap();
            last.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1.0 / 40.0, TimeScheme::CrankNicolson), err(1.0 / 80.0, TimeScheme::CrankNicolson));
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
        let (i1, i2) = (err(1.0 / 40.0, TimeScheme::ImplicitEuler), err(1.0 / 80.0, TimeScheme::ImplicitEuler));
        assert!((1.7..2.3).contains(&(i1 / i2)), "{i1} {i2}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn implicit_euler_max_principle(
            init in proptest::collection::vec(-1.0f64..1.0, 13),
            rho in 0.5f64..3.0,
        ) {
            let g = grid(GraphFamily::Star { arms: 3, length: 1.0 }, 0.25);
            let p = ParabolicProblem {
                density: GraphFunction::constant(g.clone(), rho),
                initial: GraphFunction::new(g.clone(), init.clone()).unwrap(),
                t_final: 0.5,
                dt: 0.05,
                scheme: TimeScheme::ImplicitEuler,
                boundary: BoundaryMap::new(),
                grid: g,
            };
            let lo = init.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = init.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for s in solve_heat(&p).unwrap().snapshots() {
                for &v in s.values() {
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }
}
