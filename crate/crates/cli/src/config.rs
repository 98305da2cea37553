//! Run configuration (TOML).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use koopid_core::analysis::GridAxis;
use koopid_core::dictionary::sample_centers;
use koopid_core::estimators::FitKind;
use koopid_core::rng::{derive_seed, substream};
use koopid_core::simulators::{
    BurgersObservation, BurgersParams, DuffingParams, HopfParams, InputSignalSpec,
};
use koopid_core::{DictionarySpec, LiftingSpec, Matrix, PolyScope, Rank};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub system: Option<SystemConfig>,
    pub input: Option<InputConfig>,
    pub dictionary: Option<DictionaryConfig>,
    pub fit: Option<FitConfig>,
    pub predict: Option<PredictConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Duffing {
        #[serde(default)]
        params: DuffingParams,
        #[serde(default = "unit_x0")]
        x0: [f64; 2],
        t_end: f64,
    },
    Hopf {
        #[serde(default)]
        params: HopfParams,
        #[serde(default = "unit_x0")]
        x0: [f64; 2],
        t_end: f64,
    },
    Burgers {
        params: BurgersConfig,
        #[serde(default)]
        observation: BurgersObservation,
        /// Initial profile on the grid; defaults to the line between the
        /// initial boundary values.
        w0: Option<Vec<f64>>,
        t_end: f64,
    },
    ExternalCsv {
        path: PathBuf,
    },
}

fn unit_x0() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersConfig {
    pub re: f64,
    pub grid_points: usize,
    pub dt_sample: f64,
    /// Defaults to the fewest substeps that are stable for the configured input.
    pub substeps: Option<usize>,
}

impl BurgersConfig {
    pub fn params(&self, max_speed: f64) -> BurgersParams {
        BurgersParams {
            re: self.re,
            grid_points: self.grid_points,
            dt_sample: self.dt_sample,
            substeps: self.substeps.unwrap_or_else(|| {
                BurgersParams::min_substeps(self.re, self.grid_points, self.dt_sample, max_speed)
            }),
        }
    }
}

/// Input signal shared by every channel; each channel draws its own knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default = "neg_one")]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
    #[serde(default = "one")]
    pub hold: f64,
    pub constant: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn neg_one() -> f64 {
    -1.0
}

impl InputConfig {
    /// Signal spec for input channel `k`, seeded from the run seed.
    pub fn channel(&self, seed: u64, k: usize, duration: f64) -> InputSignalSpec {
        match self.constant {
            Some(v) => InputSignalSpec::constant(v, self.hold, duration),
            None => InputSignalSpec::uniform(
                self.lo,
                self.hi,
                self.hold,
                duration,
                derive_seed(seed, &format!("input-{k}")),
            ),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self.constant {
            Some(v) => v.abs(),
            None => self.lo.abs().max(self.hi.abs()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub m: usize,
    #[serde(default)]
    pub q: usize,
    #[serde(default)]
    pub z: usize,
    #[serde(default)]
    pub pre_lift: LiftConfig,
    #[serde(default)]
    pub lift: LiftConfig,
}

/// [`LiftingSpec`] with RBF centers that may be drawn from the run seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LiftConfig {
    #[default]
    None,
    Polynomial {
        min_degree: u32,
        max_degree: u32,
        #[serde(default)]
        scope: PolyScope,
    },
    Rbf {
        centers: CentersConfig,
    },
    Composed {
        centers: CentersConfig,
        poly_min_degree: u32,
        poly_max_degree: u32,
    },
    Monomials {
        exponents: Vec<Vec<u32>>,
        #[serde(default)]
        scope: PolyScope,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CentersConfig {
    Random(RandomCenters),
    Explicit(Matrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCenters {
    pub count: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CentersConfig {
    fn resolve(&self, seed: u64, stream: &str) -> Result<Matrix> {
        Ok(match self {
            CentersConfig::Explicit(m) => m.clone(),
            CentersConfig::Random(r) => {
                sample_centers(&r.lo, &r.hi, r.count, &mut substream(seed, stream))?
            }
        })
    }
}

impl LiftConfig {
    fn resolve(&self, seed: u64, stream: &str) -> Result<LiftingSpec> {
        Ok(match self {
            LiftConfig::None => LiftingSpec::None,
            LiftConfig::Polynomial {
                min_degree,
                max_degree,
                scope,
            } => LiftingSpec::Polynomial {
                min_degree: *min_degree,
                max_degree: *max_degree,
                scope: *scope,
            },
            LiftConfig::Rbf { centers } => LiftingSpec::Rbf {
                centers: centers.resolve(seed, stream)?,
            },
            LiftConfig::Composed {
                centers,
                poly_min_degree,
                poly_max_degree,
            } => LiftingSpec::Composed {
                rbf_centers: centers.resolve(seed, stream)?,
                poly_min_degree: *poly_min_degree,
                poly_max_degree: *poly_max_degree,
            },
            LiftConfig::Monomials { exponents, scope } => LiftingSpec::Monomials {
                exponents: exponents.clone(),
                scope: *scope,
            },
        })
    }
}

impl DictionaryConfig {
    pub fn spec(&self, seed: u64) -> Result<DictionarySpec> {
        let spec = DictionarySpec {
            m: self.m,
            q: self.q,
            z: self.z,
            pre_lift: self.pre_lift.resolve(seed, "pre-lift-centers")?,
            lift: self.lift.resolve(seed, "rbf-centers")?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dmd,
    Edmdc,
    Nonlinear,
    NonlinearControlled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankConfig {
    Count(usize),
    Keyword(FullKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullKeyword {
    Full,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig::Keyword(FullKeyword::Full)
    }
}

impl From<RankConfig> for Rank {
    fn from(r: RankConfig) -> Rank {
        match r {
            RankConfig::Count(n) => Rank::Truncated(n),
            RankConfig::Keyword(FullKeyword::Full) => Rank::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub family: Family,
    #[serde(default)]
    pub rank: RankConfig,
    /// Linear families: regress on `[γ; f(γ)]` instead of `γ`.
    #[serde(default)]
    pub lifted_state: bool,
    /// Project the nonlinear model onto this many POD modes.
    pub pod_rho: Option<usize>,
}

impl FitConfig {
    pub fn kind(&self) -> Result<FitKind> {
        Ok(match (self.family, self.lifted_state) {
            (Family::Dmd, false) => FitKind::Dmd,
            (Family::Dmd, true) => FitKind::DmdLifted,
            (Family::Edmdc, false) => FitKind::Edmdc,
            (Family::Edmdc, true) => FitKind::EdmdcLifted,
            (Family::Nonlinear, false) => FitKind::Nonlinear,
            (Family::NonlinearControlled, false) => FitKind::NonlinearControlled,
            (_, true) => bail!("lifted_state applies to the dmd and edmdc families only"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// Sample index of the seed state; defaults to the delay depth.
    pub start: Option<usize>,
    pub steps: usize,
    /// Spacing between observables for the L2 error; defaults to `1/(m-1)`.
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub basins: Option<BasinsConfig>,
    pub cycle: Option<CycleConfig>,
    pub prc: Option<PrcConfig>,
    pub fixed_point: Option<FixedPointConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisConfig {
    pub fn axis(&self) -> Result<GridAxis> {
        Ok(GridAxis::new(self.lo, self.hi, self.count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinsConfig {
    pub x1: AxisConfig,
    pub x2: AxisConfig,
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub observable: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_settle_tol")]
    pub settle_tol: f64,
}

fn default_horizon() -> usize {
    2000
}

fn default_settle_tol() -> f64 {
    1e-4
}

/// Where an analysis starts: a recorded sample or a constant history.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Seed from `--data` at this sample index.
    pub start: Option<usize>,
    /// Constant observable history, past inputs zero.
    pub observables: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleConfig {
    #[serde(default)]
    pub observable: usize,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default = "default_horizon")]
    pub transient: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_max_steps() -> usize {
    20_000
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            observable: 0,
            threshold: 0.0,
            transient: default_horizon(),
            max_steps: default_max_steps(),
            initial: InitialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrcConfig {
    #[serde(default = "default_phases")]
    pub phases: usize,
    pub magnitude: f64,
    pub duration: f64,
    #[serde(default)]
    pub channel: usize,
}

fn default_phases() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointConfig {
    #[serde(default)]
    pub u: f64,
    #[serde(default = "default_fp_tol")]
    pub tol: f64,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_fp_tol() -> f64 {
    1e-10
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            u: 0.0,
            tol: default_fp_tol(),
            initial: InitialConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_dir(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        if let Some(SystemConfig::ExternalCsv { path }) = &mut cfg.system {
            if path.is_relative() {
                *path = base.join(&*path);
            }
            if !path.is_file() {
                bail!("external series {} does not exist", path.display());
            }
        }
        if cfg.output.directory.is_relative() {
            cfg.output.directory = base.join(&cfg.output.directory);
        }
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("parsing config {}", path.display()))
    }
}
