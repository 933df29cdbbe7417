//! Numerical certificates for the pointwise test-function inequalities, the
//! integral energy estimates and the growth conditions of the uniqueness
//! classes, plus report serialization.
//!
//! Every check returns a [`CheckReport`] whose `margin` is non-negative when
//! the inequality holds. Inadmissible parameters never raise: the check runs
//! and the report carries `admissible = false`.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{
    assemble_stiffness, integrate_ball, integrate_edgewise, weighted_lp_norm, DiscretizationError,
    EdgeNode, Grid, GraphFunction,
};
use crate::fields::{
    make_density, make_potential, make_weight, node_distance, CutoffSpec, DensitySpec,
    FieldError, PotentialSpec, TestFnSpec, WeightSpec,
};
use crate::graph::{generate, DegreeCondition, GraphError, GraphFamily, MetricGraph, Point};
use crate::solvers::{
    dirichlet_on_boundary, exact_ray_solution, kirchhoff_residual, solve_elliptic, solve_heat,
    BoundaryCondition, EllipticProblem, ParabolicProblem, SolverError, TimeScheme, Trajectory,
};

/// Tolerance of the pointwise lemma checks, which are exact algebra.
pub const LEMMA_TOLERANCE: f64 = 1e-12;
/// Integral checks pass within `ENERGY_TOLERANCE_FACTOR · h · max(|lhs|, |rhs|)`.
pub const ENERGY_TOLERANCE_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerificationError {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("time {tau} is not a snapshot time of the trajectory")]
    TimeNotOnGrid { tau: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

type Result<T> = std::result::Result<T, VerificationError>;

fn bad(msg: impl Into<String>) -> VerificationError {
    VerificationError::BadParams(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub admissible: bool,
    /// `rhs - lhs` for integral checks; worst pointwise slack otherwise.
    pub margin: f64,
    pub tolerance: f64,
    /// Both sides of an integral check, oriented as `lhs <= rhs`.
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub worst_point: Option<Point>,
    pub worst_time: Option<f64>,
    pub samples_checked: usize,
    pub samples_skipped_kink: usize,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(name: &str, margin: f64, tolerance: f64, admissible: bool) -> Self {
        CheckReport {
            name: name.to_string(),
            passed: margin >= -tolerance,
            admissible,
            margin,
            tolerance,
            lhs: None,
            rhs: None,
            worst_point: None,
            worst_time: None,
            samples_checked: 0,
            samples_skipped_kink: 0,
            notes: Vec::new(),
        }
    }

    /// `pass`, `fail`, or `inadmissible` when the hypotheses do not hold.
    pub fn status(&self) -> &'static str {
        match (self.admissible, self.passed) {
            (false, _) => "inadmissible",
            (true, true) => "pass",
            (true, false) => "fail",
        }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

// ---------------------------------------------------------------------------
// pointwise lemma checks

struct Scan {
    margin: f64,
    worst: Option<(Point, Option<f64>)>,
    checked: usize,
    skipped: usize,
}

/// Minimum of `slack` over every `(edge, node)` pair and sample time,
/// skipping nodes closer than half a step to a kink of the root distance.
fn scan(
    grid: &Grid,
    times: &[Option<f64>],
    mut slack: impl FnMut(&EdgeNode, f64, f64, Option<f64>) -> f64,
) -> Scan {
    let graph = grid.graph();
    let mut out = Scan {
        margin: f64::INFINITY,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    for node in grid.all_edge_nodes() {
        let near_kink = graph
            .kink_offset(node.edge)
            .is_some_and(|s| (node.offset - s).abs() < 0.5 * grid.step(node.edge));
        if near_kink {
            out.skipped += times.len();
            continue;
        }
        let (d, slope, _) = node_distance(grid, &node);
        for &t in times {
            out.checked += 1;
            let m = slack(&node, d, slope, t);
            if m < out.margin || out.worst.is_none() {
                out.margin = m;
                out.worst = Some((grid.point_of(&node), t));
            }
        }
    }
    out
}

fn lemma_report(name: &str, scan: Scan, admissible: bool) -> CheckReport {
    let mut r = CheckReport::new(name, scan.margin, LEMMA_TOLERANCE, admissible);
    if let Some((p, t)) = scan.worst {
        r.worst_point = Some(p);
        r.worst_time = t;
    }
    r.samples_checked = scan.checked;
    r.samples_skipped_kink = scan.skipped;
    r
}

fn check_exponent(p: f64, lo: f64) -> Result<()> {
    if p.is_finite() && p >= lo {
        Ok(())
    } else {
        Err(bad(format!("exponent p must be >= {lo}, got {p}")))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be >= 0, got {v}")))
    }
}

fn shift_of_potential(spec: &PotentialSpec) -> f64 {
    match *spec {
        PotentialSpec::Decaying { k, .. } => k,
        PotentialSpec::BoundedBelow { .. } => 1.0,
    }
}

fn shift_of_density(spec: &DensitySpec) -> f64 {
    match *spec {
        DensitySpec::Decaying { k, .. } => k,
        DensitySpec::BoundedBelow { .. } => 1.0,
    }
}

/// `ξ = -α d` against a potential bounded below by `V0`:
/// `(ξ')² - pV <= ℋ` and `ξ'' + (ξ')² - pV <= ℋ` with `ℋ = α² - pV0 < 0`.
///
/// The margin is the worst of `ℋ - lhs` and `-ℋ` over all nodes, so it is
/// non-negative exactly when both inequalities and `ℋ < 0` hold.
pub fn check_lemma_5_1(
    grid: &Arc<Grid>,
    alpha: f64,
    p: f64,
    potential: &PotentialSpec,
) -> Result<CheckReport> {
    potential.validate()?;
    check_exponent(p, 1.0)?;
    nonneg("alpha", alpha)?;
    let v0 = potential.v0();
    let bound = alpha * alpha - p * v0;
    let xi = TestFnSpec::XiAlpha { alpha };
    let admissible = matches!(potential, PotentialSpec::BoundedBelow { .. })
        && alpha > 0.0
        && alpha < (p * v0).sqrt();
    let s = scan(grid, &[None], |_, d, slope, _| {
        let j = xi.jet(d, slope, 0.0);
        let pv = p * potential.at_distance(d);
        let first = j.ds * j.ds - pv;
        let second = j.dss + first;
        (bound - first).min(bound - second).min(-bound)
    });
    Ok(lemma_report("lemma_5_1", s, admissible).note(format!("H = {}", fmt_float(bound))))
}

/// `ζ = (d + k)^-σ` against `V = V0 (d + k)^-θ`:
/// `(ζ'/ζ)² - pV <= -K (d+k)^-2` with `K = pV0 - σ²` and
/// `ζ'' - pVζ <= -H (d+k)^-2 ζ` with `H = pV0 - σ(σ+1)`; both `K, H > 0`.
/// The second inequality is checked after division by `ζ > 0`.
pub fn check_lemma_5_2(
    grid: &Arc<Grid>,
    sigma: f64,
    p: f64,
    potential: &PotentialSpec,
) -> Result<CheckReport> {
    potential.validate()?;
    check_exponent(p, 1.0)?;
    let k = shift_of_potential(potential);
    let zeta = TestFnSpec::ZetaSigma { sigma, k };
    zeta.validate()?;
    let pv0 = p * potential.v0();
    let big_k = pv0 - sigma * sigma;
    let big_h = pv0 - sigma * (sigma + 1.0);
    let admissible = matches!(potential, PotentialSpec::Decaying { .. }) && big_k > 0.0 && big_h > 0.0;
    let s = scan(grid, &[None], |_, d, slope, _| {
        let j = zeta.jet(d, slope, 0.0);
        let w = (d + k).powi(-2);
        let pv = p * potential.at_distance(d);
        let ratio = j.ds / j.value;
        let first = ratio * ratio - pv;
        let second = j.dss / j.value - pv;
        (-big_k * w - first)
            .min(big_k * w)
            .min(-big_h * w - second)
            .min(big_h * w)
    });
    Ok(lemma_report("lemma_5_2", s, admissible).note(format!(
        "K = {}, H = {}",
        fmt_float(big_k),
        fmt_float(big_h)
    )))
}

/// `ω = -γt - αd` against a density bounded below by `ρ0`:
/// `ρ ∂tω + (ω')² <= 0` and `ρ ∂tω + ω'' + (ω')² <= 0`, admissible for `γ >= α²/ρ0`.
pub fn check_lemma_6_1(
    grid: &Arc<Grid>,
    alpha: f64,
    gamma: f64,
    density: &DensitySpec,
) -> Result<CheckReport> {
    density.validate()?;
    let omega = TestFnSpec::OmegaGamma { gamma, alpha };
    omega.validate()?;
    let rho0 = density.rho0();
    let admissible = matches!(density, DensitySpec::BoundedBelow { .. }) && gamma >= alpha * alpha / rho0;
    // both sides are independent of t
    let s = scan(grid, &[Some(0.0)], |_, d, slope, t| {
        let j = omega.jet(d, slope, t.unwrap_or(0.0));
        let first = density.at_distance(d) * j.dt + j.ds * j.ds;
        let second = first + j.dss;
        (-first).min(-second)
    });
    Ok(lemma_report("lemma_6_1", s, admissible))
}

/// `κ = e^{-γt} (d + k)^-σ` against `ρ = ρ0 (d + k)^-θ`:
/// `ρ ∂tκ + (κ')²/κ <= 0` and `ρ ∂tκ + κ'' <= 0` at `t ∈ {0, T/2, T}`,
/// admissible for `γ >= σ(σ+1)/ρ0`. Both are checked after division by `κ > 0`.
pub fn check_lemma_6_2(
    grid: &Arc<Grid>,
    sigma: f64,
    gamma: f64,
    density: &DensitySpec,
    t_final: f64,
) -> Result<CheckReport> {
    density.validate()?;
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(bad(format!("T must be positive, got {t_final}")));
    }
    let k = shift_of_density(density);
    let kappa = TestFnSpec::KappaGamma { gamma, sigma, k };
    kappa.validate()?;
    let rho0 = density.rho0();
    let admissible =
        matches!(density, DensitySpec::Decaying { .. }) && gamma >= sigma * (sigma + 1.0) / rho0;
    let times = [Some(0.0), Some(0.5 * t_final), Some(t_final)];
    let s = scan(grid, &times, |_, d, slope, t| {
        let j = kappa.jet(d, slope, t.unwrap_or(0.0));
        let rho_dt = density.at_distance(d) * j.dt / j.value;
        let first = rho_dt + (j.ds / j.value).powi(2);
        let second = rho_dt + j.dss / j.value;
        (-first).min(-second)
    });
    Ok(lemma_report("lemma_6_2", s, admissible))
}

// ---------------------------------------------------------------------------
// integral energy checks

fn energy_report(name: &str, lhs: f64, rhs: f64, h: f64, admissible: bool) -> CheckReport {
    let tol = ENERGY_TOLERANCE_FACTOR * h * lhs.abs().max(rhs.abs());
    let mut r = CheckReport::new(name, rhs - lhs, tol, admissible);
    r.lhs = Some(lhs);
    r.rhs = Some(rhs);
    r
}

fn abs_pow(values: &[f64], p: f64) -> Vec<f64> {
    values.iter().map(|v| v.abs().powf(p)).collect()
}

/// Test function times squared cutoff weight and derivative pieces at a node.
struct SpaceJets {
    eta: f64,
    eta_ds: f64,
    /// `e^ξ`, `ζ`, `e^ω` or `κ`
    g: f64,
    /// `(ξ')²`, `(ζ'/ζ)²`, `(ω')²`, `(κ'/κ)²`
    log_slope_sq: f64,
}

fn space_jets(testfn: &TestFnSpec, eta: &CutoffSpec, d: f64, slope: f64, t: f64) -> SpaceJets {
    let e = eta.jet(d, slope);
    let j = testfn.jet(d, slope, t);
    let (g, log_ds) = match testfn {
        TestFnSpec::XiAlpha { .. } | TestFnSpec::OmegaGamma { .. } => (j.value.exp(), j.ds),
        TestFnSpec::ZetaSigma { .. } | TestFnSpec::KappaGamma { .. } => (j.value, j.ds / j.value),
    };
    SpaceJets {
        eta: e.value,
        eta_ds: e.ds,
        g,
        log_slope_sq: log_ds * log_ds,
    }
}

/// `∫ |u|^p η² g [pV - (log g)'²] <= 4 ∫ |u|^p (η')² g` for `g = e^ξ` or `g = ζ`.
pub fn check_energy_elliptic(
    u: &GraphFunction,
    p: f64,
    potential: &PotentialSpec,
    eta: &CutoffSpec,
    testfn: &TestFnSpec,
) -> Result<CheckReport> {
    check_exponent(p, 1.0)?;
    potential.validate()?;
    eta.validate()?;
    testfn.validate()?;
    if testfn.is_time_dependent() {
        return Err(bad("elliptic energy check takes xi_alpha or zeta_sigma"));
    }
    let grid = u.grid();
    let up = abs_pow(u.values(), p);
    let jets = |n: &EdgeNode| {
        let (d, slope, _) = node_distance(grid, n);
        (d, space_jets(testfn, eta, d, slope, 0.0))
    };
    let lhs = integrate_edgewise(grid, |n| {
        let (d, s) = jets(n);
        up[n.global] * s.eta * s.eta * s.g * (p * potential.at_distance(d) - s.log_slope_sq)
    });
    let rhs = integrate_edgewise(grid, |n| {
        let (_, s) = jets(n);
        4.0 * up[n.global] * s.eta_ds * s.eta_ds * s.g
    });
    Ok(energy_report("energy_elliptic", lhs, rhs, grid.max_step(), p >= 2.0))
}

/// Test function `η_R · g(·, t)` sampled at every node, with
/// `g = e^ξ, ζ, e^ω` or `κ`.
pub fn cutoff_test_function(
    grid: &Arc<Grid>,
    eta: &CutoffSpec,
    testfn: &TestFnSpec,
    t: f64,
) -> Result<GraphFunction> {
    eta.validate()?;
    testfn.validate()?;
    let values = grid
        .node_distances()
        .iter()
        .map(|&d| space_jets(testfn, eta, d, 1.0, t))
        .map(|s| s.eta * s.g)
        .collect();
    Ok(GraphFunction::new(grid.clone(), values)?)
}

/// `Σ_v |u(v)|^p K(f)(v)` over all vertices.
fn vertex_flux(up: &[f64], f: &GraphFunction) -> Result<f64> {
    let graph = f.grid().graph().clone();
    let mut total = 0.0;
    for (i, &v) in graph.vertices().iter().enumerate() {
        total += up[i] * kirchhoff_residual(f, v)?;
    }
    Ok(total)
}

/// `∫ |u|^p [-Δf + pVf] <= -Σ_v |u(v)|^p K(f)(v)` for `f >= 0` of compact support.
///
/// `∫ |u|^p Δf` is taken from the stiffness action: for the nodal hat `φ_i`,
/// `(A f)_i = K(f)(x_i)·[x_i vertex] - ∫ f'' φ_i`.
pub fn check_energy_elliptic_low_p(
    u: &GraphFunction,
    p: f64,
    potential: &PotentialSpec,
    f: &GraphFunction,
) -> Result<CheckReport> {
    check_exponent(p, 1.0)?;
    potential.validate()?;
    if !u.same_grid(f) {
        return Err(DiscretizationError::GridMismatch.into());
    }
    if let Some(v) = f.values().iter().find(|v| **v < 0.0) {
        return Err(bad(format!("test function must be non-negative, found {v}")));
    }
    let grid = u.grid();
    let up = abs_pow(u.values(), p);
    let af = assemble_stiffness(grid).mul_vec(f.values());
    let w = grid.lumped_weights();
    let v = make_potential(potential, grid)?;
    let flux = vertex_flux(&up, f)?;
    let bulk: f64 = (0..grid.dim())
        .map(|i| up[i] * (af[i] + p * v.values()[i] * f.values()[i] * w[i]))
        .sum();
    let lhs = bulk - flux;
    let rhs = -flux;
    Ok(energy_report("energy_elliptic_low_p", lhs, rhs, grid.max_step(), p >= 1.0))
}

fn snapshot_index(traj: &Trajectory, tau: f64) -> Result<usize> {
    match traj.index_of_time(tau) {
        Some(n) if n > 0 => Ok(n),
        _ => Err(VerificationError::TimeNotOnGrid { tau }),
    }
}

/// Trapezoid rule over snapshot times `0..=n`.
fn time_trapezoid(traj: &Trajectory, n: usize, mut f: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let times: Vec<f64> = traj.times().collect();
    let mut prev = f(0)?;
    let mut total = 0.0;
    for i in 1..=n {
        let cur = f(i)?;
        total += 0.5 * (times[i] - times[i - 1]) * (prev + cur);
        prev = cur;
    }
    Ok(total)
}

/// Right-endpoint rule `Σ_{i=1..n} (t_i - t_{i-1}) f(i)`, the quadrature under
/// which an implicit Euler step is exact.
fn time_right_endpoint(traj: &Trajectory, n: usize, mut f: impl FnMut(usize) -> f64) -> f64 {
    let times: Vec<f64> = traj.times().collect();
    (1..=n).map(|i| (times[i] - times[i - 1]) * f(i)).sum()
}

fn parabolic_admissible(testfn: &TestFnSpec, density: &DensitySpec) -> Result<bool> {
    let rho0 = density.rho0();
    Ok(match *testfn {
        TestFnSpec::OmegaGamma { gamma, alpha } => {
            matches!(density, DensitySpec::BoundedBelow { .. }) && gamma >= alpha * alpha / rho0
        }
        TestFnSpec::KappaGamma { gamma, sigma, .. } => {
            matches!(density, DensitySpec::Decaying { .. }) && gamma >= sigma * (sigma + 1.0) / rho0
        }
        _ => return Err(bad("parabolic energy checks take omega_gamma or kappa_gamma")),
    })
}

/// `∫ρ|u(τ)|^p g(τ) η² <= ∫ρ|u(0)|^p g(0) η² + 4∫∫|u|^p (η')² g
/// + ∫∫|u|^p [ρ ∂t log g + (log g)'²] g η²` with `g = e^ω` or `κ`.
///
/// The first term on the right vanishes for zero initial data. Time
/// integrals follow the implicit Euler structure: spatial terms at the end of
/// each step, `∫ ρ|u|^p ∂t g` as `Σ ρ|u_n|^p (g_{n+1} - g_n)`.
pub fn check_energy_parabolic(
    traj: &Trajectory,
    p: f64,
    density: &DensitySpec,
    eta: &CutoffSpec,
    testfn: &TestFnSpec,
    tau: f64,
) -> Result<CheckReport> {
    check_exponent(p, 1.0)?;
    density.validate()?;
    eta.validate()?;
    testfn.validate()?;
    let admissible = parabolic_admissible(testfn, density)? && p >= 2.0;
    let n = snapshot_index(traj, tau)?;
    let grid = traj.grid().clone();
    let snaps = traj.snapshots();
    let times: Vec<f64> = traj.times().collect();
    // ∫ |u_i|^p · integrand(node, d, jets at t_j)
    let integral = |i: usize, j: usize, f: &dyn Fn(f64, &SpaceJets) -> f64| {
        let up = abs_pow(snaps[i].values(), p);
        integrate_edgewise(&grid, |node| {
            let (d, slope, _) = node_distance(&grid, node);
            let s = space_jets(testfn, eta, d, slope, times[j]);
            up[node.global] * f(d, &s)
        })
    };
    let rho_g = |d: f64, s: &SpaceJets| density.at_distance(d) * s.g * s.eta * s.eta;
    let lhs = integral(n, n, &rho_g);
    let initial = integral(0, 0, &rho_g);
    let cutoff_term = time_right_endpoint(traj, n, |i| {
        integral(i, i, &|_, s| 4.0 * s.eta_ds * s.eta_ds * s.g)
    });
    let slope_term = time_right_endpoint(traj, n, |i| {
        integral(i, i, &|_, s| s.log_slope_sq * s.g * s.eta * s.eta)
    });
    let time_term: f64 = (0..n).map(|i| integral(i, i + 1, &rho_g) - integral(i, i, &rho_g)).sum();
    let bracket = time_term + slope_term;
    let rhs = initial + cutoff_term + bracket;
    let mut r = energy_report("energy_parabolic", lhs, rhs, grid.max_step(), admissible);
    r.worst_time = Some(times[n]);
    Ok(r.note(format!(
        "initial {}, cutoff {}, bracket {}",
        fmt_float(initial),
        fmt_float(cutoff_term),
        fmt_float(bracket)
    )))
}

/// `∫∫|u|^p [ρ ∂t v + Δv] >= ∫ρ|u(τ)|^p v(τ) - ∫ρ|u(0)|^p v(0) + ∫ Σ_v |u|^p K(v)`
/// for `v = η_R · g`, `g = e^ω` or `κ`. Reported as `lhs <= rhs` with the
/// sides swapped.
///
/// `∫|u|^p Δv` comes from the stiffness action as in the elliptic case; time
/// integrals use the implicit Euler rule of [`check_energy_parabolic`], under
/// which the discrete inequality holds exactly for implicit Euler
/// trajectories when `v` vanishes on the Dirichlet vertices.
pub fn check_energy_parabolic_low_p(
    traj: &Trajectory,
    p: f64,
    density: &DensitySpec,
    eta: &CutoffSpec,
    testfn: &TestFnSpec,
    tau: f64,
) -> Result<CheckReport> {
    check_exponent(p, 1.0)?;
    density.validate()?;
    let admissible = parabolic_admissible(testfn, density)?;
    let n = snapshot_index(traj, tau)?;
    let grid = traj.grid().clone();
    let snaps = traj.snapshots();
    let times: Vec<f64> = traj.times().collect();
    let a = assemble_stiffness(&grid);
    let w = grid.lumped_weights();
    let rho = make_density(density, &grid)?;
    let rho_w: Vec<f64> = rho.values().iter().zip(w).map(|(r, w)| r * w).collect();

    let tests: Vec<GraphFunction> = times[..=n]
        .iter()
        .map(|&t| cutoff_test_function(&grid, eta, testfn, t))
        .collect::<Result<_>>()?;
    let powered: Vec<Vec<f64>> = snaps[..=n].iter().map(|s| abs_pow(s.values(), p)).collect();
    let mut fluxes = vec![0.0; n + 1];
    let mut laplace = vec![0.0; n + 1];
    for i in 1..=n {
        let av = a.mul_vec(tests[i].values());
        fluxes[i] = vertex_flux(&powered[i], &tests[i])?;
        laplace[i] = fluxes[i] - powered[i].iter().zip(&av).map(|(u, a)| u * a).sum::<f64>();
    }
    let stored = |i: usize, j: usize| -> f64 {
        (0..grid.dim()).map(|k| rho_w[k] * powered[i][k] * tests[j].values()[k]).sum()
    };
    let time_term: f64 = (0..n).map(|i| stored(i, i + 1) - stored(i, i)).sum();
    let big = time_term + time_right_endpoint(traj, n, |i| laplace[i]);
    let small = stored(n, n) - stored(0, 0) + time_right_endpoint(traj, n, |i| fluxes[i]);
    let mut r = energy_report("energy_parabolic_low_p", small, big, grid.max_step(), admissible);
    r.worst_time = Some(times[n]);
    Ok(r)
}

// ---------------------------------------------------------------------------
// growth profiles

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitKind {
    /// `log I` against `R`
    ExpBeta,
    /// `log I` against `log(R + k)`
    PolyLambda { k: f64 },
}

impl FitKind {
    pub fn for_weight(w: &WeightSpec) -> Self {
        match *w {
            WeightSpec::ExpBeta { .. } => FitKind::ExpBeta,
            WeightSpec::PolyLambda { k, .. } => FitKind::PolyLambda { k },
        }
    }

    fn abscissa(&self, r: f64) -> f64 {
        match *self {
            FitKind::ExpBeta => r,
            FitKind::PolyLambda { k } => (r + k).ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub fit: FitKind,
    pub p: f64,
    pub tau: Option<f64>,
    /// `(R, ∫_{B_R} |u|^p)` or its time integral up to `tau`.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope; `None` when some integral vanishes.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

impl GrowthProfile {
    pub fn is_degenerate(&self) -> bool {
        self.slope.is_none()
    }
}

fn check_radii(grid: &Grid, radii: &[f64]) -> Result<()> {
    if radii.len() < 2 {
        return Err(bad("growth profile needs at least two radii"));
    }
    if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("radii must be positive and strictly increasing"));
    }
    let reach = grid.node_distances().iter().copied().fold(0.0, f64::max);
    let r_max = radii[radii.len() - 1];
    if r_max > reach * (1.0 + 1e-12) {
        return Err(bad(format!(
            "largest radius {r_max} exceeds the truncation reach {reach}"
        )));
    }
    Ok(())
}

fn fit(fit: FitKind, p: f64, tau: Option<f64>, samples: Vec<(f64, f64)>) -> GrowthProfile {
    let degenerate = samples.iter().any(|&(_, i)| !(i > 0.0));
    let (slope, intercept) = if degenerate {
        (None, None)
    } else {
        let pts: Vec<(f64, f64)> = samples.iter().map(|&(r, i)| (fit.abscissa(r), i.ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let b = sxy / sxx;
        (Some(b), Some(my - b * mx))
    };
    GrowthProfile {
        fit,
        p,
        tau,
        samples,
        slope,
        intercept,
    }
}

/// `∫_{B_R} |u|^p dμ` per radius, with a log-linear fit.
pub fn growth_profile(u: &GraphFunction, p: f64, kind: FitKind, radii: &[f64]) -> Result<GrowthProfile> {
    check_exponent(p, 1.0)?;
    check_radii(u.grid(), radii)?;
    let up = u.map(|v| v.abs().powf(p))?;
    let samples = radii.iter().map(|&r| (r, integrate_ball(&up, r))).collect();
    Ok(fit(kind, p, None, samples))
}

/// `∫_0^τ ∫_{B_R} |u|^p dμ dt` per radius, trapezoid in time over snapshots.
pub fn growth_profile_parabolic(
    traj: &Trajectory,
    p: f64,
    kind: FitKind,
    radii: &[f64],
    tau: f64,
) -> Result<GrowthProfile> {
    check_exponent(p, 1.0)?;
    check_radii(traj.grid(), radii)?;
    let n = snapshot_index(traj, tau)?;
    let powered: Vec<GraphFunction> = traj.snapshots()[..=n]
        .iter()
        .map(|s| s.map(|v| v.abs().powf(p)))
        .collect::<std::result::Result<_, _>>()?;
    let samples = radii
        .iter()
        .map(|&r| {
            let i = time_trapezoid(traj, n, |k| Ok(integrate_ball(&powered[k], r)))?;
            Ok((r, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fit(kind, p, Some(tau), samples))
}

// ---------------------------------------------------------------------------
// uniqueness experiment

/// Which upper bound on `β` the exponential elliptic class uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaThreshold {
    /// `β < sqrt(p V0) / 2`, matching `α = 2β` in the `ξ` inequality.
    #[default]
    Lemma,
    /// `β < (sqrt(1 + 4 p V0) - 1) / 4`.
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "equation", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemKind {
    Elliptic {
        potential: PotentialSpec,
    },
    Parabolic {
        density: DensitySpec,
        #[serde(rename = "T")]
        t_final: f64,
        dt: f64,
        #[serde(default)]
        scheme: TimeScheme,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessSpec {
    pub family: GraphFamily,
    pub p: f64,
    pub weight: WeightSpec,
    pub problem: ProblemKind,
    pub h: f64,
    /// Cutoff radius `R`; the truncation must reach `2R`.
    #[serde(rename = "R")]
    pub radius: f64,
    pub epsilon: f64,
    /// Radii for the ray probe growth profile.
    pub probe_radii: Vec<f64>,
    #[serde(default)]
    pub threshold: BetaThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    /// Upper bound on the weight parameter (`β` or `λ`); infinite when any positive value works.
    pub parameter_bound: f64,
    pub parameter: f64,
    pub parameter_ok: bool,
    pub degree_condition_required: bool,
    pub degree_condition: DegreeCondition,
    pub admissible: bool,
}

/// Hypotheses of the uniqueness statement matching the weight and equation.
pub fn admissibility(
    graph: &MetricGraph,
    p: f64,
    weight: &WeightSpec,
    problem: &ProblemKind,
    threshold: BetaThreshold,
) -> Admissibility {
    let (param, bound) = match (*weight, problem) {
        (WeightSpec::ExpBeta { beta }, ProblemKind::Elliptic { potential }) => {
            let pv0 = p * potential.v0();
            let b = match threshold {
                BetaThreshold::Lemma => pv0.sqrt() / 2.0,
                BetaThreshold::Alternative => ((1.0 + 4.0 * pv0).sqrt() - 1.0) / 4.0,
            };
            (beta, b)
        }
        (WeightSpec::PolyLambda { lambda, .. }, ProblemKind::Elliptic { potential }) => {
            let pv0 = p * potential.v0();
            let b = if p >= 2.0 {
                pv0.sqrt()
            } else {
                ((1.0 + 4.0 * pv0).sqrt() - 1.0) / 2.0
            };
            (lambda, b)
        }
        (WeightSpec::ExpBeta { beta }, ProblemKind::Parabolic { .. }) => (beta, f64::INFINITY),
        (WeightSpec::PolyLambda { lambda, .. }, ProblemKind::Parabolic { .. }) => (lambda, f64::INFINITY),
    };
    let kind_ok = match (weight, problem) {
        (WeightSpec::ExpBeta { .. }, ProblemKind::Elliptic { potential }) => {
            matches!(potential, PotentialSpec::BoundedBelow { .. })
        }
        (WeightSpec::PolyLambda { .. }, ProblemKind::Elliptic { potential }) => {
            matches!(potential, PotentialSpec::Decaying { .. })
        }
        (WeightSpec::ExpBeta { .. }, ProblemKind::Parabolic { density, .. }) => {
            matches!(density, DensitySpec::BoundedBelow { .. })
        }
        (WeightSpec::PolyLambda { .. }, ProblemKind::Parabolic { density, .. }) => {
            matches!(density, DensitySpec::Decaying { .. })
        }
    };
    let parameter_ok = kind_ok && param > 0.0 && param < bound && p >= 1.0;
    let degree_condition = graph.check_degree_condition();
    let required = p < 2.0;
    Admissibility {
        parameter_bound: bound,
        parameter: param,
        parameter_ok,
        degree_condition_required: required,
        admissible: parameter_ok && (!required || degree_condition.passed),
        degree_condition,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessOutcome {
    pub admissibility: Admissibility,
    pub checks: Vec<CheckReport>,
    pub probe: GrowthProfile,
}

/// Runs zero data, `ε` data and the ray probe for one parameter bundle.
pub fn uniqueness_experiment(spec: &UniquenessSpec) -> Result<UniquenessOutcome> {
    check_exponent(spec.p, 1.0)?;
    spec.weight.validate()?;
    if !(spec.epsilon.is_finite() && spec.epsilon > 0.0) {
        return Err(bad(format!("epsilon must be positive, got {}", spec.epsilon)));
    }
    if !(spec.radius.is_finite() && spec.radius > 0.0) {
        return Err(bad(format!("R must be positive, got {}", spec.radius)));
    }
    let graph = Arc::new(generate(&spec.family)?);
    let grid = Arc::new(Grid::build(graph.clone(), spec.h)?);
    let reach = grid.node_distances().iter().copied().fold(0.0, f64::max);
    if reach < 2.0 * spec.radius * (1.0 - 1e-12) {
        return Err(bad(format!(
            "truncation reach {reach} does not contain the ball of radius 2R = {}",
            2.0 * spec.radius
        )));
    }
    let adm = admissibility(&graph, spec.p, &spec.weight, &spec.problem, spec.threshold);
    let ok = adm.admissible;
    let p = spec.p;
    let eps = spec.epsilon;
    let weight = make_weight(&spec.weight, &grid)?;
    let ball = integrate_ball(&GraphFunction::constant(grid.clone(), 1.0), 2.0 * spec.radius);
    let norm_in_ball = |u: &GraphFunction| -> Result<f64> {
        let integrand = GraphFunction::new(
            grid.clone(),
            u.values()
                .iter()
                .zip(weight.values())
                .map(|(u, w)| u.abs().powf(p) * w)
                .collect(),
        )?;
        Ok(integrate_ball(&integrand, 2.0 * spec.radius).powf(1.0 / p))
    };

    let dirichlet = dirichlet_on_boundary(&grid);
    let (zero_out, eps_out): (Vec<GraphFunction>, Vec<GraphFunction>) = match spec.problem {
        ProblemKind::Elliptic { potential } => {
            let v = make_potential(&potential, &grid)?;
            let mut problem = EllipticProblem {
                grid: grid.clone(),
                potential: v,
                rhs: GraphFunction::zeros(grid.clone()),
                boundary: dirichlet.clone(),
            };
            let zero = solve_elliptic(&problem)?;
            for bc in problem.boundary.values_mut() {
                *bc = BoundaryCondition::Dirichlet { value: eps };
            }
            (vec![zero], vec![solve_elliptic(&problem)?])
        }
        ProblemKind::Parabolic { density, t_final, dt, scheme } => {
            let rho = make_density(&density, &grid)?;
            let mut problem = ParabolicProblem {
                grid: grid.clone(),
                density: rho,
                initial: GraphFunction::zeros(grid.clone()),
                t_final,
                dt,
                scheme,
                boundary: dirichlet.clone(),
            };
            let zero = solve_heat(&problem)?.snapshots().to_vec();
            let mut hat = vec![0.0; grid.dim()];
            hat[graph.vertex_index(graph.root())?] = eps;
            problem.initial = GraphFunction::new(grid.clone(), hat)?;
            (zero, solve_heat(&problem)?.snapshots().to_vec())
        }
    };

    let mut checks = Vec::new();
    let zero_sup = zero_out.iter().map(|u| u.max_abs()).fold(0.0, f64::max);
    let mut zero = CheckReport::new("zero_data", -zero_sup, 0.0, ok);
    zero.passed = zero_out.iter().all(|u| u.values().iter().all(|v| *v == 0.0));
    zero.samples_checked = zero_out.len() * grid.dim();
    checks.push(zero);

    let sup = eps_out.iter().map(|u| u.max_abs()).fold(0.0, f64::max);
    let mut r = CheckReport::new("epsilon_sup", eps - sup, 1e-12 * eps, ok);
    r.lhs = Some(sup);
    r.rhs = Some(eps);
    r.samples_checked = eps_out.len() * grid.dim();
    checks.push(r);

    let mut worst_norm = 0.0f64;
    for u in &eps_out {
        worst_norm = worst_norm.max(norm_in_ball(u)?);
    }
    let bound = eps * ball.powf(1.0 / p);
    let mut r = CheckReport::new("epsilon_weighted_norm", bound - worst_norm, 1e-12 * bound, ok);
    r.lhs = Some(worst_norm);
    r.rhs = Some(bound);
    r.samples_checked = eps_out.len();
    checks.push(r);

    let probe = ray_probe(spec)?;
    if adm.parameter_bound.is_finite() {
        if let Some(slope) = probe.slope {
            let mut r = CheckReport::new("probe_outside_class", slope - adm.parameter_bound, 0.0, true);
            r.lhs = Some(adm.parameter_bound);
            r.rhs = Some(slope);
            checks.push(r.note("fitted growth of a nonzero solution exceeds the admissible parameter bound"));
        }
    }
    // the weighted norm of the whole truncation is informative, not asserted
    if let Some(last) = eps_out.last() {
        let full = weighted_lp_norm(last, &weight, p)?;
        if let Some(r) = checks.iter_mut().find(|c| c.name == "epsilon_weighted_norm") {
            r.notes.push(format!("full truncation norm {}", fmt_float(full)));
        }
    }
    Ok(UniquenessOutcome {
        admissibility: adm,
        checks,
        probe,
    })
}

/// Growth of the explicit ray solution: `cosh(sqrt(V0) s)` for the elliptic
/// equation, `e^t cosh(sqrt(ρ0) s)` for the heat equation with `ρ ≡ ρ0`.
pub fn ray_probe(spec: &UniquenessSpec) -> Result<GrowthProfile> {
    let r_max = *spec
        .probe_radii
        .last()
        .ok_or_else(|| bad("probe radii must not be empty"))?;
    let graph = Arc::new(generate(&GraphFamily::TruncatedRay {
        radius: r_max,
        length: 1.0,
    })?);
    let grid = Arc::new(Grid::build(graph, spec.h)?);
    let kind = FitKind::for_weight(&spec.weight);
    match spec.problem {
        ProblemKind::Elliptic { potential } => {
            let u = exact_ray_solution(potential.v0(), &grid)?;
            growth_profile(&u, spec.p, kind, &spec.probe_radii)
        }
        ProblemKind::Parabolic { density, t_final, dt, .. } => {
            let (steps, dt) = crate::solvers::time_steps(t_final, dt)?;
            let c = density.rho0().sqrt();
            let snaps: Vec<GraphFunction> = (0..=steps)
                .map(|n| {
                    let t = if n == steps { t_final } else { n as f64 * dt };
                    Ok(GraphFunction::radial(grid.clone(), |d| t.exp() * (c * d).cosh())?.with_time(t))
                })
                .collect::<Result<_>>()?;
            let traj = Trajectory::from_snapshots(snaps, dt)?;
            growth_profile_parabolic(&traj, spec.p, kind, &spec.probe_radii, t_final)
        }
    }
}

// ---------------------------------------------------------------------------
// serialization

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const REPORT_HEADER: &str = "name,status,passed,admissible,margin,lhs,rhs,tolerance,worst_point,worst_time,samples_checked,samples_skipped_kink";

/// One row per check under [`REPORT_HEADER`].
pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let point = r.worst_point.map(|p| p.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&r.name),
            r.status(),
            r.passed,
            r.admissible,
            fmt_float(r.margin),
            opt(r.lhs),
            opt(r.rhs),
            fmt_float(r.tolerance),
            csv_field(&point),
            opt(r.worst_time),
            r.samples_checked,
            r.samples_skipped_kink
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub const GROWTH_HEADER: &str = "profile,fit,p,tau,R,integral,slope";

/// Long format: one row per `(profile, R)`.
pub fn growth_to_csv(profiles: &[(String, GrowthProfile)]) -> String {
    let mut out = String::from(GROWTH_HEADER);
    out.push('\n');
    for (name, g) in profiles {
        let fit = match g.fit {
            FitKind::ExpBeta => "exp_beta".to_string(),
            FitKind::PolyLambda { k } => format!("poly_lambda(k={})", fmt_float(k)),
        };
        for &(r, i) in &g.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(name),
                csv_field(&fit),
                fmt_float(g.p),
                opt(g.tau),
                fmt_float(r),
                fmt_float(i),
                g.slope.map(fmt_float).unwrap_or_else(|| "degenerate".into())
            )
            .expect("writing to a String cannot fail");
        }
    }
    out
}

/// Human-readable digest of a check list.
pub fn summary_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in reports {
        write!(out, "{:<width$}  {:<12}  margin {}", r.name, r.status(), fmt_float(r.margin))
            .expect("writing to a String cannot fail");
        if let (Some(l), Some(rh)) = (r.lhs, r.rhs) {
            write!(out, "  lhs {}  rhs {}", fmt_float(l), fmt_float(rh)).unwrap();
        }
        if let Some(p) = r.worst_point {
            write!(out, "  worst {p}").unwrap();
            if let Some(t) = r.worst_time {
                write!(out, " t={}", fmt_float(t)).unwrap();
            }
        }
        for n in &r.notes {
            write!(out, "  [{n}]").unwrap();
        }
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| r.admissible && !r.passed).count();
    let inadmissible = reports.iter().filter(|r| !r.admissible).count();
    writeln!(
        out,
        "{} checks, {} failed, {} inadmissible",
        reports.len(),
        failed,
        inadmissible
    )
    .unwrap();
    out
}
