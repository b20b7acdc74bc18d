//! Scenario files: a JSON schema describing one reproducible batch run.
//! Unknown keys are rejected so a typo fails loudly before any
//! computation starts.

use dirac_core::l2solve::DiracSide;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryBlock,
    #[serde(default)]
    pub bundle: Option<BundleBlock>,
    #[serde(default)]
    pub weight: Option<WeightBlock>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spectrum: Option<SpectrumBlock>,
    #[serde(default)]
    pub solve: Option<SolveBlock>,
    #[serde(default)]
    pub refine: Option<RefineBlock>,
    #[serde(default)]
    pub cylinder_weight: Option<CylinderWeightBlock>,
    #[serde(default)]
    pub transversality: Option<TransversalityBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    #[serde(default)]
    pub torus: Option<TorusBlock>,
    #[serde(default)]
    pub cylinder: Option<CylinderBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusBlock {
    pub lx: f64,
    pub ly: f64,
    pub n1: usize,
    pub n2: usize,
    #[serde(default)]
    pub conformal: Option<ConformalBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConformalBlock {
    pub amplitude: f64,
    #[serde(default = "default_band")]
    pub band: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderBlock {
    pub t_len: f64,
    pub nt: usize,
    pub nc: usize,
    #[serde(default)]
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleBlock {
    pub kind: BundleKind,
    #[serde(default)]
    pub c1: i64,
    #[serde(default)]
    pub roughness: f64,
    #[serde(default = "default_rank")]
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundleKind {
    Trivial,
    ConstantCurvature,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightBlock {
    pub kind: WeightKind,
    #[serde(default = "default_weight_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_band")]
    pub band: i64,
    /// Which curvature field sources the Poisson weight.
    #[serde(default)]
    pub potential: PotentialKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Zero,
    Poisson,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    #[default]
    Min,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Bounds,
    Solve,
    Bochner,
    CylinderWeight,
    Transversality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    #[serde(default = "default_solve_tol")]
    pub solve_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Bound-report slack as a multiple of the grid spacing; an absolute
    /// override from the command line takes precedence.
    #[serde(default = "default_bound_tol_factor")]
    pub bound_tol_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_tol: default_eig_tol(),
            solve_tol: default_solve_tol(),
            max_iter: default_max_iter(),
            bound_tol_factor: default_bound_tol_factor(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default = "default_spectrum_count")]
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub side: DiracSide,
    pub rhs: RhsKind,
    #[serde(default = "default_band")]
    pub band: i64,
    /// Data file for `from-file` right-hand sides: one `re im` pair per
    /// line, row-major over grid sites.
    #[serde(default)]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhsKind {
    Random,
    ImageOfRandom,
    FromFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineBlock {
    #[serde(default = "default_grids")]
    pub grids: Vec<usize>,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderWeightBlock {
    pub alpha: f64,
    pub n: usize,
    pub eps: f64,
    pub gamma: f64,
    #[serde(default)]
    pub delta: f64,
    /// Compact-region negativity, absolute. Exactly one of `beta` and
    /// `beta_fraction` must be given.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Compact-region negativity as a fraction of the certified cap
    /// `γμ/(2 - 4/n)`.
    #[serde(default)]
    pub beta_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransversalityBlock {
    #[serde(default)]
    pub c1: Option<i64>,
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub genus: Option<i64>,
    /// Audit the sampled bundle instead of the integer summary.
    #[serde(default)]
    pub sampled: bool,
}

fn default_band() -> i64 {
    3
}
fn default_rank() -> usize {
    1
}
fn default_weight_amplitude() -> f64 {
    0.4
}
fn default_eig_tol() -> f64 {
    1e-10
}
fn default_solve_tol() -> f64 {
    1e-11
}
fn default_max_iter() -> usize {
    20_000
}
fn default_bound_tol_factor() -> f64 {
    1.0
}
fn default_spectrum_count() -> usize {
    6
}
fn default_grids() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_modes() -> usize {
    8
}

/// Structural checks beyond what serde enforces; violations are
/// configuration errors, reported before any computation.
pub fn validate(s: &Scenario) -> Result<(), String> {
    match (&s.geometry.torus, &s.geometry.cylinder) {
        (Some(_), Some(_)) => return Err("geometry: give either torus or cylinder, not both".into()),
        (None, None) => return Err("geometry: one of torus or cylinder is required".into()),
        _ => {}
    }
    if s.tasks.is_empty() {
        return Err("tasks: at least one task is required".into());
    }
    let on_torus = s.geometry.torus.is_some();
    for t in &s.tasks {
        match t {
            Task::CylinderWeight => {
                if on_torus {
                    return Err("cylinder-weight task needs a cylinder geometry".into());
                }
                let Some(cw) = &s.cylinder_weight else {
                    return Err("cylinder-weight task needs a cylinder_weight block".into());
                };
                match (cw.beta, cw.beta_fraction) {
                    (Some(_), Some(_)) => {
                        return Err("cylinder_weight: give beta or beta_fraction, not both".into())
                    }
                    (None, None) => {
                        return Err("cylinder_weight: one of beta or beta_fraction is required".into())
                    }
                    _ => {}
                }
            }
            Task::Transversality => {
                let Some(tb) = &s.transversality else {
                    return Err("transversality task needs a transversality block".into());
                };
                if tb.sampled {
                    if !on_torus || s.bundle.is_none() {
                        return Err(
                            "sampled transversality needs a torus geometry and a bundle".into()
                        );
                    }
                } else if tb.c1.is_none() || tb.genus.is_none() {
                    return Err("summary transversality needs c1 and genus".into());
                }
            }
            Task::Solve => {
                if !on_torus || s.bundle.is_none() {
                    return Err("solve task needs a torus geometry and a bundle".into());
                }
                let Some(sb) = &s.solve else {
                    return Err("solve task needs a solve block".into());
                };
                if sb.rhs == RhsKind::FromFile && sb.file.is_none() {
                    return Err("solve: from-file data needs a file path".into());
                }
                if sb.side == DiracSide::Full && s.bundle.as_ref().map(|b| b.rank) != Some(1) {
                    return Err("solve: full side needs a rank-1 bundle".into());
                }
            }
            Task::Spectrum | Task::Bounds | Task::Bochner => {
                if !on_torus || s.bundle.is_none() {
                    return Err(format!("{t:?} task needs a torus geometry and a bundle"));
                }
            }
        }
    }
    Ok(())
}
