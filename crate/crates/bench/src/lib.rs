//! Standard problem instances shared by the benches.

use std::collections::BTreeMap;
use std::sync::Arc;

use qgl_core::{
    generate, make_density, BoundaryCondition, DensitySpec, EllipticProblem, GraphFamily,
    GraphFunction, Grid, ParabolicProblem, TimeScheme, VertexId,
};

pub fn grid(family: GraphFamily, h: f64) -> Arc<Grid> {
    let graph = generate(&family).expect("fixture family is valid");
    Arc::new(Grid::build(Arc::new(graph), h).expect("fixture mesh width is valid"))
}

/// Complete binary tree of the given depth with edges of length 1/2.
pub fn tree(depth: usize, h: f64) -> Arc<Grid> {
    grid(GraphFamily::BinaryTree { depth, length: 0.5 }, h)
}

fn dirichlet_leaves(grid: &Grid, value: f64) -> BTreeMap<VertexId, BoundaryCondition> {
    grid.graph()
        .boundary()
        .iter()
        .map(|&v| (v, BoundaryCondition::Dirichlet { value }))
        .collect()
}

/// `-u'' + u = 0` with unit data on the leaves.
pub fn elliptic(grid: &Arc<Grid>) -> EllipticProblem {
    EllipticProblem {
        grid: grid.clone(),
        potential: GraphFunction::constant(grid.clone(), 1.0),
        rhs: GraphFunction::zeros(grid.clone()),
        boundary: dirichlet_leaves(grid, 1.0),
    }
}

/// Heat flow of a root hat with zero data on the leaves.
pub fn parabolic(grid: &Arc<Grid>, t_final: f64, dt: f64, scheme: TimeScheme) -> ParabolicProblem {
    let mut u0 = vec![0.0; grid.dim()];
    u0[grid.graph().vertex_index(grid.graph().root()).expect("root exists")] = 1.0;
    ParabolicProblem {
        grid: grid.clone(),
        density: make_density(&DensitySpec::BoundedBelow { rho0: 1.0 }, grid).expect("valid density"),
        initial: GraphFunction::new(grid.clone(), u0).expect("matching length"),
        t_final,
        dt,
        scheme,
        boundary: dirichlet_leaves(grid, 0.0),
    }
}
