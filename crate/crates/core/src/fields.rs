//! Closed-form weights, potentials, densities, cutoffs and test functions of
//! the root distance `d = d(x, x0)`, with exact arclength derivatives.
//!
//! Along an edge `d` is piecewise linear with slope `±1`, so for `g(d)` one has
//! `g' = g_d · slope` and `g'' = g_dd`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{EdgeNode, Grid, GraphFunction};
use crate::graph::{GraphError, MetricGraph, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("time argument required for {0}")]
    MissingTime(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), FieldError> {
    if cond {
        Ok(())
    } else {
        Err(FieldError::BadParams(msg()))
    }
}

fn positive(name: &str, v: f64) -> Result<(), FieldError> {
    require(v.is_finite() && v > 0.0, || format!("{name} must be positive, got {v}"))
}

fn shift(k: f64) -> Result<(), FieldError> {
    require(k.is_finite() && k >= 1.0, || format!("k must be >= 1, got {k}"))
}

fn decay_exponent(theta: f64) -> Result<(), FieldError> {
    require(theta > 0.0 && theta <= 2.0, || {
        format!("theta must lie in (0, 2], got {theta}")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `exp(-beta d)`
    ExpBeta { beta: f64 },
    /// `(d + k)^(-lambda)`
    PolyLambda { lambda: f64, k: f64 },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        match *self {
            WeightSpec::ExpBeta { beta } => positive("beta", beta),
            WeightSpec::PolyLambda { lambda, k } => {
                positive("lambda", lambda)?;
                shift(k)
            }
        }
    }

    pub fn at_distance(&self, d: f64) -> f64 {
        match *self {
            WeightSpec::ExpBeta { beta } => (-beta * d).exp(),
            WeightSpec::PolyLambda { lambda, k } => (d + k).powf(-lambda),
        }
    }
}

/// Lower-bound profile of a potential: constant, or polynomially decaying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    BoundedBelow {
        #[serde(rename = "V0")]
        v0: f64,
    },
    Decaying {
        #[serde(rename = "V0")]
        v0: f64,
        theta: f64,
        k: f64,
    },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        match *self {
            PotentialSpec::BoundedBelow { v0 } => positive("V0", v0),
            PotentialSpec::Decaying { v0, theta, k } => {
                positive("V0", v0)?;
                decay_exponent(theta)?;
                shift(k)
            }
        }
    }

    pub fn v0(&self) -> f64 {
        match *self {
            PotentialSpec::BoundedBelow { v0 } | PotentialSpec::Decaying { v0, .. } => v0,
        }
    }

    pub fn at_distance(&self, d: f64) -> f64 {
        match *self {
            PotentialSpec::BoundedBelow { v0 } => v0,
            PotentialSpec::Decaying { v0, theta, k } => v0 * (d + k).powf(-theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    BoundedBelow { rho0: f64 },
    Decaying { rho0: f64, theta: f64, k: f64 },
}

impl DensitySpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        match *self {
            DensitySpec::BoundedBelow { rho0 } => positive("rho0", rho0),
            DensitySpec::Decaying { rho0, theta, k } => {
                positive("rho0", rho0)?;
                decay_exponent(theta)?;
                shift(k)
            }
        }
    }

    pub fn rho0(&self) -> f64 {
        match *self {
            DensitySpec::BoundedBelow { rho0 } | DensitySpec::Decaying { rho0, .. } => rho0,
        }
    }

    pub fn at_distance(&self, d: f64) -> f64 {
        match *self {
            DensitySpec::BoundedBelow { rho0 } => rho0,
            DensitySpec::Decaying { rho0, theta, k } => rho0 * (d + k).powf(-theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFnSpec {
    /// `xi = -alpha d`
    XiAlpha { alpha: f64 },
    /// `zeta = (d + k)^(-sigma)`
    ZetaSigma { sigma: f64, k: f64 },
    /// `omega = -gamma t - alpha d`
    OmegaGamma { gamma: f64, alpha: f64 },
    /// `kappa = exp(-gamma t) (d + k)^(-sigma)`
    KappaGamma { gamma: f64, sigma: f64, k: f64 },
}

impl TestFnSpec {
    pub fn validate(&self) -> Result<(), FieldError> {
        let nonneg = |name: &str, v: f64| {
            require(v.is_finite() && v >= 0.0, || format!("{name} must be >= 0, got {v}"))
        };
        match *self {
            TestFnSpec::XiAlpha { alpha } => nonneg("alpha", alpha),
            TestFnSpec::ZetaSigma { sigma, k } => {
                positive("sigma", sigma)?;
                shift(k)
            }
            TestFnSpec::OmegaGamma { gamma, alpha } => {
                nonneg("gamma", gamma)?;
                nonneg("alpha", alpha)
            }
            TestFnSpec::KappaGamma { gamma, sigma, k } => {
                nonneg("gamma", gamma)?;
                positive("sigma", sigma)?;
                shift(k)
            }
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, TestFnSpec::OmegaGamma { .. } | TestFnSpec::KappaGamma { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            TestFnSpec::XiAlpha { .. } => "xi_alpha",
            TestFnSpec::ZetaSigma { .. } => "zeta_sigma",
            TestFnSpec::OmegaGamma { .. } => "omega_gamma",
            TestFnSpec::KappaGamma { .. } => "kappa_gamma",
        }
    }

    /// Value and derivatives given the root distance, its slope and time.
    pub fn jet(&self, d: f64, slope: f64, t: f64) -> Jet {
        let zeta = |sigma: f64, k: f64| {
            let base = d + k;
            let v = base.powf(-sigma);
            (
                v,
                -sigma * base.powf(-sigma - 1.0) * slope,
                sigma * (sigma + 1.0) * base.powf(-sigma - 2.0),
            )
        };
        let (value, ds, dss, dt) = match *self {
            TestFnSpec::XiAlpha { alpha } => (-alpha * d, -alpha * slope, 0.0, 0.0),
            TestFnSpec::ZetaSigma { sigma, k } => {
                let (v, ds, dss) = zeta(sigma, k);
                (v, ds, dss, 0.0)
            }
            TestFnSpec::OmegaGamma { gamma, alpha } => {
                (-gamma * t - alpha * d, -alpha * slope, 0.0, -gamma)
            }
            TestFnSpec::KappaGamma { gamma, sigma, k } => {
                let (v, ds, dss) = zeta(sigma, k);
                let e = (-gamma * t).exp();
                (e * v, e * ds, e * dss, -gamma * e * v)
            }
        };
        Jet {
            value,
            ds,
            dss,
            dt,
            one_sided: false,
        }
    }
}

/// Value with arclength derivatives `d/ds`, `d²/ds²` and time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub ds: f64,
    pub dss: f64,
    pub dt: f64,
    /// Evaluated exactly at a kink of the root distance; `ds` is the slope on
    /// the side of smaller offsets.
    pub one_sided: bool,
}

/// Smoothing profile `eta(t)`: 1 on `t <= 1`, 0 on `t >= 2`, quintic smoothstep in between.
pub mod profile {
    /// `sup |eta'|`, attained at `t = 3/2`.
    pub const C1: f64 = 15.0 / 8.0;
    /// `sup |eta''| = 10/sqrt(3)`, attained at `t = 3/2 ± sqrt(3)/6`.
    pub const C2: f64 = 5.773_502_691_896_258;

    fn smoothstep(s: f64) -> (f64, f64, f64) {
        let s2 = s * s;
        (
            s2 * s * (10.0 + s * (-15.0 + 6.0 * s)),
            30.0 * s2 * (1.0 - s) * (1.0 - s),
            60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        )
    }

    /// `(eta, eta', eta'')` at `t`.
    pub fn eval(t: f64) -> (f64, f64, f64) {
        if t <= 1.0 {
            (1.0, 0.0, 0.0)
        } else if t >= 2.0 {
            (0.0, 0.0, 0.0)
        } else {
            let (s, ds, dss) = smoothstep(t - 1.0);
            (1.0 - s, -ds, -dss)
        }
    }
}

/// Cutoff `eta_R(x) = eta(d(x, x0) / R)` with the suprema of the profile derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "C1", default = "default_c1")]
    pub c1: f64,
    #[serde(rename = "C2", default = "default_c2")]
    pub c2: f64,
}

fn default_c1() -> f64 {
    profile::C1
}

fn default_c2() -> f64 {
    profile::C2
}

impl CutoffSpec {
    pub fn new(radius: f64) -> Result<Self, FieldError> {
        let spec = CutoffSpec {
            radius,
            c1: profile::C1,
            c2: profile::C2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        positive("R", self.radius)?;
        require(self.c1 == profile::C1 && self.c2 == profile::C2, || {
            format!(
                "C1, C2 must be the profile suprema {} and {}, got {} and {}",
                profile::C1,
                profile::C2,
                self.c1,
                self.c2
            )
        })
    }

    pub fn jet(&self, d: f64, slope: f64) -> Jet {
        let r = self.radius;
        let (v, dv, ddv) = profile::eval(d / r);
        Jet {
            value: v,
            ds: dv * slope / r,
            dss: ddv / (r * r),
            dt: 0.0,
            one_sided: false,
        }
    }
}

/// Root distance and slope at a point. Vertices use the first incident edge.
fn distance_at(graph: &MetricGraph, x: &Point) -> Result<(f64, f64, bool), FieldError> {
    match *x {
        Point::OnEdge { edge, offset } => {
            graph.point(edge, offset)?;
            let rd = graph.root_distance_along(graph.edge_index(edge)?, offset);
            Ok((rd.value, rd.slope, rd.at_kink))
        }
        Point::Vertex(v) => {
            let vi = graph.vertex_index(v)?;
            let d = graph.root_distances()[vi];
            let e = graph.incident_edges(vi)[0];
            let (a, _) = graph.endpoints(e);
            let offset = if a == vi { 0.0 } else { graph.edges()[e].length };
            Ok((d, graph.root_distance_along(e, offset).slope, false))
        }
    }
}

pub fn eval_weight(spec: &WeightSpec, graph: &MetricGraph, x: &Point) -> Result<f64, FieldError> {
    spec.validate()?;
    Ok(spec.at_distance(graph.root_distance(x)?))
}

/// Test function jet at `x`; `t` is required for the time-dependent kinds.
pub fn eval_test_function(
    spec: &TestFnSpec,
    graph: &MetricGraph,
    x: &Point,
    t: Option<f64>,
) -> Result<Jet, FieldError> {
    spec.validate()?;
    let t = match (spec.is_time_dependent(), t) {
        (true, None) => return Err(FieldError::MissingTime(spec.name())),
        (_, t) => t.unwrap_or(0.0),
    };
    let (d, slope, kink) = distance_at(graph, x)?;
    let mut jet = spec.jet(d, slope, t);
    jet.one_sided = kink;
    Ok(jet)
}

pub fn eval_cutoff(spec: &CutoffSpec, graph: &MetricGraph, x: &Point) -> Result<Jet, FieldError> {
    spec.validate()?;
    let (d, slope, kink) = distance_at(graph, x)?;
    let mut jet = spec.jet(d, slope);
    jet.one_sided = kink;
    Ok(jet)
}

/// Root distance and slope at an edge node, as seen from that edge.
pub fn node_distance(grid: &Grid, node: &EdgeNode) -> (f64, f64, bool) {
    let rd = grid.graph().root_distance_along(node.edge, node.offset);
    (grid.node_distances()[node.global], rd.slope, rd.at_kink)
}

fn radial(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> GraphFunction {
    GraphFunction::radial(grid.clone(), f).expect("closed-form profiles are finite")
}

pub fn make_potential(spec: &PotentialSpec, grid: &Arc<Grid>) -> Result<GraphFunction, FieldError> {
    spec.validate()?;
    Ok(radial(grid, |d| spec.at_distance(d)))
}

pub fn make_density(spec: &DensitySpec, grid: &Arc<Grid>) -> Result<GraphFunction, FieldError> {
    spec.validate()?;
    Ok(radial(grid, |d| spec.at_distance(d)))
}

pub fn make_weight(spec: &WeightSpec, grid: &Arc<Grid>) -> Result<GraphFunction, FieldError> {
    spec.validate()?;
    Ok(radial(grid, |d| spec.at_distance(d)))
}

fn regularization_params(alpha: f64, p: f64) -> Result<(), FieldError> {
    positive("alpha", alpha)?;
    require(p.is_finite() && p >= 1.0, || format!("p must be >= 1, got {p}"))
}

/// `(u² + alpha)^(p/4)`
pub fn regularize_pi(u: f64, alpha: f64, p: f64) -> Result<f64, FieldError> {
    regularization_params(alpha, p)?;
    Ok((u * u + alpha).powf(p / 4.0))
}

/// `(u² + alpha)^(p/2)`
pub fn regularize_phi(u: f64, alpha: f64, p: f64) -> Result<f64, FieldError> {
    regularization_params(alpha, p)?;
    Ok((u * u + alpha).powf(p / 2.0))
}
