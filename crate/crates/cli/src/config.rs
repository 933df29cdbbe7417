//! Experiment configuration: one JSON object per run.
//!
//! Every field has a default, so `{}` selects the default suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qgl_core::verification::{BetaThreshold, ProblemKind};
use qgl_core::{
    BoundaryCondition, CutoffSpec, DensitySpec, GraphFamily, PotentialSpec, TestFnSpec,
    TimeScheme, VertexId, WeightSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub graph: GraphSource,
    /// Target mesh width.
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default = "default_weight")]
    pub weight: WeightSpec,
    #[serde(default = "default_cutoff")]
    pub cutoff: CutoffSpec,
    /// Test function of the energy checks; chosen from the problem when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_function: Option<TestFnSpec>,
    /// Radii of the solution growth profile; empty skips it. Each must lie
    /// within the graph's reach from the root.
    #[serde(rename = "R_list", default = "default_r_list")]
    pub r_list: Vec<f64>,
    /// Times of the parabolic energy checks; empty means the final time.
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default = "default_lemmas")]
    pub lemmas: Vec<LemmaCase>,
    /// Zero-data and probe experiment; needs a generated graph family.
    #[serde(default = "default_uniqueness")]
    pub uniqueness: Option<UniquenessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

fn default_h() -> f64 {
    1.0 / 32.0
}

fn default_p() -> f64 {
    2.0
}

fn default_r_list() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

fn default_weight() -> WeightSpec {
    WeightSpec::ExpBeta { beta: 0.5 }
}

fn default_cutoff() -> CutoffSpec {
    CutoffSpec::new(0.4).expect("positive radius")
}

fn default_lemmas() -> Vec<LemmaCase> {
    vec![
        LemmaCase::Lemma51 { alpha: 1.0, p: 2.0, potential: PotentialSpec::BoundedBelow { v0: 1.0 } },
        LemmaCase::Lemma52 {
            sigma: 0.5,
            p: 2.0,
            potential: PotentialSpec::Decaying { v0: 1.0, theta: 2.0, k: 1.0 },
        },
        LemmaCase::Lemma61 { alpha: 1.0, gamma: 0.5, density: DensitySpec::BoundedBelow { rho0: 2.0 } },
        LemmaCase::Lemma62 {
            sigma: 1.0,
            gamma: 2.0,
            density: DensitySpec::Decaying { rho0: 1.0, theta: 2.0, k: 1.0 },
            t_final: 1.0,
        },
    ]
}

fn default_uniqueness() -> Option<UniquenessConfig> {
    Some(UniquenessConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { file: PathBuf },
    Family(GraphFamily),
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::Family(GraphFamily::Star { arms: 3, length: 1.0 })
    }
}

/// Boundary conditions: `default` on every truncation boundary vertex,
/// `vertices` overriding at any vertex by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default = "natural")]
    pub default: BoundaryCondition,
    /// Keyed by vertex id written as a string, as JSON object keys are.
    #[serde(default)]
    pub vertices: BTreeMap<String, BoundaryCondition>,
}

fn natural() -> BoundaryCondition {
    BoundaryCondition::Natural
}

impl BoundaryConfig {
    pub fn dirichlet(value: f64) -> Self {
        BoundaryConfig { default: BoundaryCondition::Dirichlet { value }, vertices: BTreeMap::new() }
    }

    pub fn to_map(&self, boundary: &[VertexId]) -> Result<BTreeMap<VertexId, BoundaryCondition>, CliError> {
        let mut map: BTreeMap<_, _> = boundary.iter().map(|&v| (v, self.default)).collect();
        for (key, &c) in &self.vertices {
            let id = key
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("boundary vertex id {key:?} is not an integer")))?;
            map.insert(VertexId(id), c);
        }
        Ok(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Constant { value: f64 },
    /// Nodal hat of the given height at the root.
    RootHat { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Elliptic {
        #[serde(default = "default_potential")]
        potential: PotentialSpec,
        /// Constant source term.
        #[serde(default)]
        source: f64,
        #[serde(default = "default_elliptic_boundary")]
        boundary: BoundaryConfig,
    },
    Parabolic {
        #[serde(default = "default_density")]
        density: DensitySpec,
        #[serde(rename = "T", default = "one")]
        t_final: f64,
        #[serde(default = "default_dt")]
        dt: f64,
        #[serde(default)]
        scheme: TimeScheme,
        #[serde(default = "default_initial")]
        initial: InitialData,
        #[serde(default = "default_parabolic_boundary")]
        boundary: BoundaryConfig,
    },
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::Elliptic {
            potential: default_potential(),
            source: 0.0,
            boundary: default_elliptic_boundary(),
        }
    }
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::BoundedBelow { v0: 1.0 }
}

fn default_density() -> DensitySpec {
    DensitySpec::BoundedBelow { rho0: 1.0 }
}

fn default_elliptic_boundary() -> BoundaryConfig {
    BoundaryConfig::dirichlet(1e-3)
}

fn default_parabolic_boundary() -> BoundaryConfig {
    BoundaryConfig::dirichlet(0.0)
}

fn default_initial() -> InitialData {
    InitialData::RootHat { value: 1e-6 }
}

fn one() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    0.01
}

impl ProblemConfig {
    /// Problem description for the uniqueness experiment.
    pub fn kind(&self) -> ProblemKind {
        match *self {
            ProblemConfig::Elliptic { potential, .. } => ProblemKind::Elliptic { potential },
            ProblemConfig::Parabolic { density, t_final, dt, scheme, .. } => {
                ProblemKind::Parabolic { density, t_final, dt, scheme }
            }
        }
    }

    /// Test function used when the config names none.
    pub fn default_test_function(&self) -> TestFnSpec {
        match *self {
            ProblemConfig::Elliptic { potential: PotentialSpec::BoundedBelow { .. }, .. } => {
                TestFnSpec::XiAlpha { alpha: 1.0 }
            }
            ProblemConfig::Elliptic { potential: PotentialSpec::Decaying { k, .. }, .. } => {
                TestFnSpec::ZetaSigma { sigma: 0.5, k }
            }
            ProblemConfig::Parabolic { density: DensitySpec::BoundedBelow { .. }, .. } => {
                TestFnSpec::OmegaGamma { gamma: 1.0, alpha: 1.0 }
            }
            ProblemConfig::Parabolic { density: DensitySpec::Decaying { k, .. }, .. } => {
                TestFnSpec::KappaGamma { gamma: 2.0, sigma: 1.0, k }
            }
        }
    }
}

/// One pointwise inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "snake_case", deny_unknown_fields)]
pub enum LemmaCase {
    #[serde(rename = "lemma_5_1")]
    Lemma51 { alpha: f64, p: f64, potential: PotentialSpec },
    #[serde(rename = "lemma_5_2")]
    Lemma52 { sigma: f64, p: f64, potential: PotentialSpec },
    #[serde(rename = "lemma_6_1")]
    Lemma61 { alpha: f64, gamma: f64, density: DensitySpec },
    #[serde(rename = "lemma_6_2")]
    Lemma62 {
        sigma: f64,
        gamma: f64,
        density: DensitySpec,
        #[serde(rename = "T")]
        t_final: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_probe_radii")]
    pub probe_radii: Vec<f64>,
    #[serde(default)]
    pub threshold: BetaThreshold,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            epsilon: default_epsilon(),
            probe_radii: default_probe_radii(),
            threshold: BetaThreshold::default(),
        }
    }
}

fn default_epsilon() -> f64 {
    1e-6
}

fn default_probe_radii() -> Vec<f64> {
    (2..=8).map(f64::from).collect()
}

impl ExperimentConfig {
    /// Reads and parses a config file. Relative graph paths resolve against
    /// the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let GraphSource::File { file } = &mut cfg.graph {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks that need no graph; the rest happens in the library.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return bad(format!("p must be at least 1, got {}", self.p));
        }
        if self.r_list.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("R_list entries must be positive".into());
        }
        if let ProblemConfig::Parabolic { t_final, dt, .. } = self.problem {
            if !(t_final > 0.0 && dt > 0.0 && t_final.is_finite() && dt.is_finite()) {
                return bad("T and dt must be positive".into());
            }
            if self.taus.iter().any(|&t| !(t > 0.0 && t <= t_final)) {
                return bad("taus must lie in (0, T]".into());
            }
        } else if !self.taus.is_empty() {
            return bad("taus only apply to parabolic problems".into());
        }
        let (ProblemConfig::Elliptic { boundary, .. } | ProblemConfig::Parabolic { boundary, .. }) =
            &self.problem;
        boundary.to_map(&[])?;
        Ok(())
    }

    pub fn test_function(&self) -> TestFnSpec {
        self.test_function.unwrap_or_else(|| self.problem.default_test_function())
    }
}
