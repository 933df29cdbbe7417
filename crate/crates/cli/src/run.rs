use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use qgl_core::verification::{
    check_energy_elliptic, check_energy_elliptic_low_p, check_energy_parabolic,
    check_energy_parabolic_low_p, check_lemma_5_1, check_lemma_5_2, check_lemma_6_1,
    check_lemma_6_2, cutoff_test_function, fmt_float, growth_profile, growth_profile_parabolic,
    reports_to_csv, growth_to_csv, summary_text, uniqueness_experiment, FitKind, UniquenessSpec,
};
use qgl_core::{
    generate, make_density, make_potential, solve_elliptic, solve_heat, CheckReport,
    EllipticProblem, GraphFamily, GraphFunction, GrowthProfile, Grid, MetricGraph,
    ParabolicProblem, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, GraphSource, InitialData, LemmaCase, ProblemConfig};
use crate::CliError;

/// Wall-clock time of one named stage.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub stages: Vec<Stage>,
    /// Emitted files, relative to the output directory.
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl Manifest {
    fn new(command: &str, config: &ExperimentConfig) -> Self {
        Manifest {
            tool: "qgl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            stages: Vec::new(),
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let (out, seconds) = timed(f);
        self.stages.push(Stage { name: name.into(), seconds });
        out
    }

    /// Writes every file plus the manifest itself, listing them all.
    fn write_all(mut self, dir: &Path, files: &[(&str, String)]) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            self.files.push((*name).to_string());
        }
        self.files.push("manifest.json".into());
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(self)
    }
}

/// Rayon pool sized by `QGL_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QGL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("QGL_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config(e.to_string()))
}

/// Generates a family member and, when `out` is given, writes it as JSON.
pub fn gen_graph(family: &GraphFamily, out: Option<&Path>) -> Result<String, CliError> {
    let graph = generate(family)?;
    let text = serde_json::to_string_pretty(&graph).expect("graph serializes") + "\n";
    if let Some(path) = out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, &text).map_err(|e| CliError::io(path, e))?;
    }
    Ok(text)
}

pub fn build_graph(source: &GraphSource) -> Result<MetricGraph, CliError> {
    match source {
        GraphSource::Family(f) => Ok(generate(f)?),
        GraphSource::File { file } => {
            let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", file.display())))
        }
    }
}

fn build_grid(cfg: &ExperimentConfig) -> Result<Arc<Grid>, CliError> {
    let graph = Arc::new(build_graph(&cfg.graph)?);
    Ok(Arc::new(Grid::build(graph, cfg.h)?))
}

enum Solution {
    Elliptic(GraphFunction),
    Parabolic(Trajectory),
}

fn solve_configured(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> Result<Solution, CliError> {
    let boundary_vertices = grid.graph().boundary();
    match &cfg.problem {
        ProblemConfig::Elliptic { potential, source, boundary } => {
            let u = solve_elliptic(&EllipticProblem {
                grid: grid.clone(),
                potential: make_potential(potential, grid)?,
                rhs: GraphFunction::constant(grid.clone(), *source),
                boundary: boundary.to_map(boundary_vertices)?,
            })?;
            Ok(Solution::Elliptic(u))
        }
        ProblemConfig::Parabolic { density, t_final, dt, scheme, initial, boundary } => {
            let u0 = match *initial {
                InitialData::Zero => GraphFunction::zeros(grid.clone()),
                InitialData::Constant { value } => GraphFunction::constant(grid.clone(), value),
                InitialData::RootHat { value } => {
                    let mut v = vec![0.0; grid.dim()];
                    v[grid.graph().vertex_index(grid.graph().root())?] = value;
                    GraphFunction::new(grid.clone(), v)?
                }
            };
            let traj = solve_heat(&ParabolicProblem {
                grid: grid.clone(),
                density: make_density(density, grid)?,
                initial: u0,
                t_final: *t_final,
                dt: *dt,
                scheme: *scheme,
                boundary: boundary.to_map(boundary_vertices)?,
            })?;
            Ok(Solution::Parabolic(traj))
        }
    }
}

const SOLUTION_HEADER: &str = "edge,offset,value";

fn push_rows(out: &mut String, u: &GraphFunction, time: Option<f64>) {
    let grid = u.grid();
    let edges = grid.graph().edges();
    for node in grid.all_edge_nodes() {
        write!(
            out,
            "{},{},{}",
            edges[node.edge].id.0,
            fmt_float(node.offset),
            fmt_float(u.values()[node.global])
        )
        .expect("writing to a String cannot fail");
        if let Some(t) = time {
            write!(out, ",{}", fmt_float(t)).unwrap();
        }
        out.push('\n');
    }
}

/// Nodal values edge by edge; vertex values repeat on each incident edge.
pub fn solution_csv(u: &GraphFunction) -> String {
    let mut out = format!("{SOLUTION_HEADER}\n");
    push_rows(&mut out, u, None);
    out
}

/// Nodal values for every stored time level, in time order.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = format!("{SOLUTION_HEADER},time\n");
    for (u, t) in traj.snapshots().iter().zip(traj.times()) {
        push_rows(&mut out, u, Some(t));
    }
    out
}

pub struct SolveOutput {
    pub csv: String,
    pub manifest: Manifest,
}

pub fn solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SolveOutput, CliError> {
    let mut manifest = Manifest::new("solve", cfg);
    let grid = manifest.timed("grid", || build_grid(cfg))?;
    let solution = manifest.timed("solve", || solve_configured(cfg, &grid))?;
    let csv = match &solution {
        Solution::Elliptic(u) => solution_csv(u),
        Solution::Parabolic(traj) => trajectory_csv(traj),
    };
    let manifest = manifest.write_all(out_dir, &[("solution.csv", csv.clone())])?;
    Ok(SolveOutput { csv, manifest })
}

fn run_lemma(grid: &Arc<Grid>, case: &LemmaCase) -> Result<CheckReport, CliError> {
    Ok(match *case {
        LemmaCase::Lemma51 { alpha, p, potential } => check_lemma_5_1(grid, alpha, p, &potential)?,
        LemmaCase::Lemma52 { sigma, p, potential } => check_lemma_5_2(grid, sigma, p, &potential)?,
        LemmaCase::Lemma61 { alpha, gamma, density } => check_lemma_6_1(grid, alpha, gamma, &density)?,
        LemmaCase::Lemma62 { sigma, gamma, density, t_final } => {
            check_lemma_6_2(grid, sigma, gamma, &density, t_final)?
        }
    })
}

type EnergyResult = Result<(Vec<CheckReport>, Option<GrowthProfile>), CliError>;

/// Energy checks and growth profile of the configured solution.
fn energy_and_growth(cfg: &ExperimentConfig, grid: &Arc<Grid>) -> EnergyResult {
    let testfn = cfg.test_function();
    let fit = FitKind::for_weight(&cfg.weight);
    let radii = &cfg.r_list;
    match (&cfg.problem, solve_configured(cfg, grid)?) {
        (ProblemConfig::Elliptic { potential, .. }, Solution::Elliptic(u)) => {
            let report = if cfg.p >= 2.0 {
                check_energy_elliptic(&u, cfg.p, potential, &cfg.cutoff, &testfn)?
            } else {
                let f = cutoff_test_function(grid, &cfg.cutoff, &testfn, 0.0)?;
                check_energy_elliptic_low_p(&u, cfg.p, potential, &f)?
            };
            let growth = if radii.is_empty() {
                None
            } else {
                Some(growth_profile(&u, cfg.p, fit, radii)?)
            };
            Ok((vec![report], growth))
        }
        (ProblemConfig::Parabolic { density, t_final, .. }, Solution::Parabolic(traj)) => {
            let taus = if cfg.taus.is_empty() { vec![traj.final_time()] } else { cfg.taus.clone() };
            let mut reports = Vec::with_capacity(taus.len());
            for &tau in &taus {
                reports.push(if cfg.p >= 2.0 {
                    check_energy_parabolic(&traj, cfg.p, density, &cfg.cutoff, &testfn, tau)?
                } else {
                    check_energy_parabolic_low_p(&traj, cfg.p, density, &cfg.cutoff, &testfn, tau)?
                });
            }
            let growth = if radii.is_empty() {
                None
            } else {
                Some(growth_profile_parabolic(&traj, cfg.p, fit, radii, *t_final)?)
            };
            Ok((reports, growth))
        }
        _ => unreachable!("solution kind follows the problem kind"),
    }
}

pub struct VerifyOutput {
    pub reports: Vec<CheckReport>,
    pub report_csv: String,
    pub growth_csv: String,
    pub summary: String,
    pub manifest: Manifest,
}

impl VerifyOutput {
    /// Admissible checks that did not pass.
    pub fn failed(&self) -> usize {
        self.reports.iter().filter(|r| r.admissible && !r.passed).count()
    }
}

/// Runs lemmas, energy checks, growth and uniqueness, writes
/// `report.csv`, `growth.csv`, `summary.txt` and `manifest.json`.
///
/// Stages run in parallel on the current rayon pool; results are
/// concatenated in a fixed order, so the CSVs do not depend on scheduling.
pub fn verify(cfg: &ExperimentConfig, out_dir: &Path) -> Result<VerifyOutput, CliError> {
    let mut manifest = Manifest::new("verify", cfg);
    let grid = manifest.timed("grid", || build_grid(cfg))?;

    let uniq_spec = match (&cfg.uniqueness, &cfg.graph) {
        (Some(u), GraphSource::Family(family)) => Some(UniquenessSpec {
            family: family.clone(),
            p: cfg.p,
            weight: cfg.weight,
            problem: cfg.problem.kind(),
            h: cfg.h,
            radius: cfg.cutoff.radius,
            epsilon: u.epsilon,
            probe_radii: u.probe_radii.clone(),
            threshold: u.threshold,
        }),
        (Some(_), GraphSource::File { .. }) => {
            manifest.notes.push("uniqueness skipped: needs a generated graph family".into());
            None
        }
        (None, _) => None,
    };

    let ((lemmas, t_lemmas), ((energy, t_energy), (uniq, t_uniq))) = rayon::join(
        || timed(|| cfg.lemmas.par_iter().map(|c| run_lemma(&grid, c)).collect::<Result<Vec<_>, _>>()),
        || {
            rayon::join(
                || timed(|| energy_and_growth(cfg, &grid)),
                || timed(|| uniq_spec.as_ref().map(uniqueness_experiment).transpose()),
            )
        },
    );
    for (name, seconds) in [("lemmas", t_lemmas), ("energy_growth", t_energy), ("uniqueness", t_uniq)] {
        manifest.stages.push(Stage { name: name.into(), seconds });
    }

    let mut reports = lemmas?;
    let (checks, growth) = energy?;
    reports.extend(checks);
    let mut profiles: Vec<(String, GrowthProfile)> =
        growth.map(|g| ("solution".to_string(), g)).into_iter().collect();
    if let Some(outcome) = uniq? {
        let a = &outcome.admissibility;
        manifest.notes.push(format!(
            "uniqueness: parameter {} bound {} admissible {}",
            fmt_float(a.parameter),
            fmt_float(a.parameter_bound),
            a.admissible
        ));
        reports.extend(outcome.checks);
        profiles.push(("probe".to_string(), outcome.probe));
    }

    let report_csv = reports_to_csv(&reports);
    let growth_csv = growth_to_csv(&profiles);
    let summary = summary_text(&reports);
    let manifest = manifest.write_all(
        out_dir,
        &[
            ("report.csv", report_csv.clone()),
            ("growth.csv", growth_csv.clone()),
            ("summary.txt", summary.clone()),
        ],
    )?;
    Ok(VerifyOutput { reports, report_csv, growth_csv, summary, manifest })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Default output directory when neither flag nor config names one.
pub fn default_out_dir() -> PathBuf {
    PathBuf::from("qgl-out")
}
