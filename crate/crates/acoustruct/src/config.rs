//! Run configuration: TOML parsing, validation and conversion into model
//! objects. All numeric fields are nondimensional.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BeamField, GridSpec};
use crate::model::{
    validate_assumptions, validate_force_assumptions, AssumptionLevel, ModelParams,
    NonlinearitySpec,
};
use crate::operators::{build_operators, DiscreteOperators};
use crate::poly::OddPoly;
use crate::Real;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("assumption violation for {role}: {details}")]
    AssumptionViolation { role: String, details: String },
    #[error("missing experiment block [{0}]")]
    MissingBlock(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Equilibria,
    Decay,
    Stabilizability,
    Dimension,
    Sweep,
    Semicontinuity,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Equilibria => "equilibria",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Stabilizability => "stabilizability",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Semicontinuity => "semicontinuity",
        }
    }

    /// Damping-assumption level required before the experiment may run.
    pub fn required_level(&self) -> AssumptionLevel {
        match self {
            ExperimentKind::Simulate | ExperimentKind::Equilibria => AssumptionLevel::Basic,
            ExperimentKind::Stabilizability => AssumptionLevel::Dimension,
            _ => AssumptionLevel::Attractor,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeamLoadConfig {
    Constant {
        value: Real,
    },
    /// Coefficients of `sin(kπx)`, k = 1, 2, …
    Modes {
        coeffs: Vec<Real>,
    },
}

impl Default for BeamLoadConfig {
    fn default() -> Self {
        BeamLoadConfig::Constant { value: 0.0 }
    }
}

impl BeamLoadConfig {
    pub fn to_field(&self, grid: &GridSpec) -> BeamField<Real> {
        match self {
            BeamLoadConfig::Constant { value } => BeamField::constant(grid.beam_len(), *value),
            BeamLoadConfig::Modes { coeffs } => BeamField::from_fn(grid.beam_len(), |k| {
                let x = grid.beam_x::<Real>(k);
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * ((m + 1) as Real * std::f64::consts::PI * x).sin())
                    .sum()
            }),
        }
    }
}

fn default_alpha() -> Real {
    1.0
}
fn default_q() -> Real {
    2.0 * std::f64::consts::PI * std::f64::consts::PI
}
fn default_mu() -> Real {
    1.0
}
fn default_f() -> NonlinearitySpec<Real> {
    NonlinearitySpec::odd_poly(vec![-1.0, 1.0])
}
fn default_g() -> NonlinearitySpec<Real> {
    NonlinearitySpec::odd_poly(vec![1.0, 1.0])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsConfig {
    #[serde(default = "default_alpha")]
    pub alpha: Real,
    #[serde(default = "default_alpha")]
    pub beta: Real,
    #[serde(default)]
    pub gamma: Real,
    #[serde(default = "default_alpha")]
    pub kappa: Real,
    #[serde(default = "default_q")]
    pub q_inplane: Real,
    #[serde(default = "default_mu")]
    pub mu: Real,
    #[serde(default)]
    pub p0: BeamLoadConfig,
    #[serde(default = "default_f")]
    pub f: NonlinearitySpec<Real>,
    #[serde(default = "default_g")]
    pub g: NonlinearitySpec<Real>,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.5,
            kappa: 1.0,
            q_inplane: default_q(),
            mu: 1.0,
            p0: BeamLoadConfig::default(),
            f: default_f(),
            g: default_g(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimeConfig {
    pub dt: Real,
    pub t_end: Real,
    #[serde(default = "default_save_every")]
    pub save_every: usize,
    #[serde(default = "default_tol")]
    pub tol: Real,
    /// Write a full state snapshot every this many save points (simulate).
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

fn default_save_every() -> usize {
    10
}
fn default_tol() -> Real {
    1e-12
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialConfig {
    Zero,
    /// Low-mode profile with separate component amplitudes.
    LowMode {
        z_amp: Real,
        zt_amp: Real,
        v_amp: Real,
        vt_amp: Real,
        theta_amp: Real,
    },
    /// Seeded random state inside the energy sublevel set 𝓦_r.
    RandomWr {
        r: Real,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::LowMode {
            z_amp: 1.0,
            zt_amp: 0.5,
            v_amp: 0.7,
            vt_amp: 0.3,
            theta_amp: 0.2,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayBlock {
    pub n_starts: usize,
    pub r: Real,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizabilityBlock {
    pub n_pairs: usize,
    pub r: Real,
    #[serde(default = "default_delta")]
    pub delta: Real,
}

fn default_delta() -> Real {
    0.25
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionBlock {
    pub n_trajectories: usize,
    pub t_burn: Real,
    pub t_sample: Real,
    pub sample_every: Real,
    pub r: Real,
    #[serde(default = "default_projection_dim")]
    pub projection_dim: usize,
}

fn default_projection_dim() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepBlock {
    pub gammas: Vec<Real>,
    pub kappas: Vec<Real>,
    /// Sub-experiment per parameter pair.
    pub inner: SweepInner,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepInner {
    Decay,
    AttractorBound,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SemicontinuityBlock {
    /// Parameter pairs `(γ, κ)` to sample.
    pub lambdas: Vec<(Real, Real)>,
    pub lambda0: (Real, Real),
    pub n_trajectories: usize,
    pub t_burn: Real,
    pub t_sample: Real,
    pub sample_every: Real,
    pub r: Real,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriaBlock {
    #[serde(default = "default_n_starts")]
    pub n_starts: usize,
}

fn default_n_starts() -> usize {
    8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttractorBlock {
    pub n_trajectories: usize,
    pub t_burn: Real,
    pub t_sample: Real,
    pub sample_every: Real,
    pub r: Real,
}

/// Top-level run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub decay: Option<DecayBlock>,
    #[serde(default)]
    pub stabilizability: Option<StabilizabilityBlock>,
    #[serde(default)]
    pub dimension: Option<DimensionBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub semicontinuity: Option<SemicontinuityBlock>,
    #[serde(default)]
    pub equilibria: Option<EquilibriaBlock>,
    #[serde(default)]
    pub attractor: Option<AttractorBlock>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    /// Validate numeric ranges, the experiment block, and the nonlinearity
    /// assumptions at the level the experiment requires. No experiment may
    /// start before this passes.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.time.dt > 0.0 && self.time.t_end > 0.0 && self.time.tol > 0.0) {
            return Err(ConfigError::Invalid(
                "dt, t_end and tol must be positive".into(),
            ));
        }
        if self.time.save_every == 0 {
            return Err(ConfigError::Invalid("save_every must be at least 1".into()));
        }
        let p = &self.params;
        if !(p.alpha > 0.0 && p.beta > 0.0 && p.mu > 0.0) {
            return Err(ConfigError::Invalid(
                "alpha, beta and mu must be positive".into(),
            ));
        }
        if !((0.0..=1.0).contains(&p.gamma) && (0.0..=1.0).contains(&p.kappa)) {
            return Err(ConfigError::Invalid(
                "gamma and kappa must lie in [0, 1]".into(),
            ));
        }

        // force f: must be an odd polynomial with the dissipativity bound
        let f = p.f.as_odd_poly().ok_or_else(|| {
            ConfigError::Invalid("the force nonlinearity f must be an odd polynomial".into())
        })?;
        let frep = validate_force_assumptions(&f);
        if let Some(fail) = frep.first_failure(AssumptionLevel::Basic) {
            return Err(ConfigError::AssumptionViolation {
                role: "f".into(),
                details: fail.details.clone(),
            });
        }
        // damping g at the level the experiment needs
        let level = self.experiment.required_level();
        let grep = validate_assumptions(&p.g, level);
        if let Some(fail) = grep.first_failure(level) {
            return Err(ConfigError::AssumptionViolation {
                role: "g".into(),
                details: fail.details.clone(),
            });
        }

        // experiment-specific block presence
        match self.experiment {
            ExperimentKind::Decay if self.decay.is_none() => {
                return Err(ConfigError::MissingBlock("decay".into()))
            }
            ExperimentKind::Stabilizability if self.stabilizability.is_none() => {
                return Err(ConfigError::MissingBlock("stabilizability".into()))
            }
            ExperimentKind::Dimension if self.dimension.is_none() => {
                return Err(ConfigError::MissingBlock("dimension".into()))
            }
            ExperimentKind::Sweep => {
                let sw = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| ConfigError::MissingBlock("sweep".into()))?;
                if sw.gammas.is_empty() || sw.kappas.is_empty() {
                    return Err(ConfigError::Invalid(
                        "sweep grid must list at least one gamma and one kappa".into(),
                    ));
                }
                if sw.inner == SweepInner::Decay && self.decay.is_none() {
                    return Err(ConfigError::MissingBlock("decay".into()));
                }
                if sw.inner == SweepInner::AttractorBound && self.attractor.is_none() {
                    return Err(ConfigError::MissingBlock("attractor".into()));
                }
            }
            ExperimentKind::Semicontinuity if self.semicontinuity.is_none() => {
                return Err(ConfigError::MissingBlock("semicontinuity".into()))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.grid.nx, self.grid.ny).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn build_operators(&self) -> Result<DiscreteOperators<Real>, ConfigError> {
        let grid = self.build_grid()?;
        build_operators(grid, self.params.mu, self.params.gamma)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn build_params(&self, grid: &GridSpec) -> Result<ModelParams<Real>, ConfigError> {
        let p = &self.params;
        let f =
            p.f.as_odd_poly()
                .ok_or_else(|| ConfigError::Invalid("f must be an odd polynomial".into()))?;
        ModelParams::new(
            p.alpha,
            p.beta,
            p.gamma,
            p.kappa,
            p.q_inplane,
            p.mu,
            p.p0.to_field(grid),
            f,
            p.g.clone(),
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Variant with `(γ, κ)` replaced, for sweeps.
    pub fn with_gamma_kappa(&self, gamma: Real, kappa: Real) -> RunConfig {
        let mut c = self.clone();
        c.params.gamma = gamma;
        c.params.kappa = kappa;
        c
    }
}

/// Odd-polynomial helper shared by the runner's initial-data builders.
pub fn odd_poly_from(coeffs: &[Real]) -> OddPoly<Real> {
    OddPoly::new(coeffs.to_vec())
}
