//! Experiment configuration read from a TOML file. Every section and key is
//! optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::grid::{BoundaryCondition, Grid};
use crate::noise::{NoiseModel, NoiseSpectrum, DEFAULT_MODE_OFFSET, DEFAULT_MODE_SCALE};
use crate::profile::{default_peak, ModelParams};
use crate::reaction::ReactionParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Profile,
    Spectrum,
    Track,
    Reduce,
    Scaling,
    Immediate,
    Moments,
    Minimality,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Profile => "profile",
            Experiment::Spectrum => "spectrum",
            Experiment::Track => "track",
            Experiment::Reduce => "reduce",
            Experiment::Scaling => "scaling",
            Experiment::Immediate => "immediate",
            Experiment::Moments => "moments",
            Experiment::Minimality => "minimality",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub nu: f64,
    pub gamma: f64,
    pub eps: f64,
    pub a: f64,
    /// Inner and outer edge of the tail modification of `f`.
    pub c1: f64,
    pub c2: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self {
            nu: p.nu,
            gamma: p.gamma,
            eps: p.eps,
            a: p.reaction.a,
            c1: p.reaction.c1,
            c2: p.reaction.c2,
        }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        let p = ModelParams {
            nu: self.nu,
            gamma: self.gamma,
            eps: self.eps,
            reaction: ReactionParams::new(self.a, self.c1, self.c2)?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
    pub bc: BoundaryCondition,
    /// Pulse maximum; `-0.6 L` when absent.
    pub peak: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: crate::dynamics::DYNAMICS_HALF_WIDTH,
            points: crate::dynamics::DYNAMICS_POINTS,
            bc: BoundaryCondition::Dirichlet0,
            peak: None,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_width, self.points, self.bc)
    }

    pub fn peak(&self, grid: &Grid) -> f64 {
        self.peak.unwrap_or_else(|| default_peak(grid))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub spectrum: NoiseSpectrum,
    /// Mode centre relative to the pulse maximum.
    pub centre_offset: f64,
    pub scale: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            spectrum: NoiseSpectrum::default(),
            centre_offset: DEFAULT_MODE_OFFSET,
            scale: DEFAULT_MODE_SCALE,
        }
    }
}

impl NoiseSection {
    pub fn model(&self, grid: &Grid, peak: f64) -> Result<NoiseModel> {
        NoiseModel::hermite(grid, peak + self.centre_offset, self.scale, &self.spectrum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub eigenvalues: usize,
    /// Dispersion samples on `[-k_max, k_max]`.
    pub k_max: f64,
    pub k_samples: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            eigenvalues: 12,
            k_max: 20.0,
            k_samples: 401,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub sigmas: Vec<f64>,
    pub qs: Vec<f64>,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            sigmas: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
            qs: vec![0.0, 0.25],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceSection {
    pub ms: Vec<f64>,
    /// Phase ladder step and save interval.
    pub dt: f64,
    pub save_every: usize,
    /// Start of the window of the sup-distance.
    pub t_min: f64,
    /// Time spacing of the coupling table.
    pub table_spacing: f64,
    pub ou_m: f64,
    pub ou_t_end: f64,
    pub ou_dt: f64,
    pub ou_thin: usize,
}

impl Default for ReduceSection {
    fn default() -> Self {
        Self {
            ms: vec![1e2, 1e3, 1e4],
            dt: 5e-5,
            save_every: 100,
            t_min: 0.5,
            table_spacing: 0.005,
            ou_m: 1e3,
            ou_t_end: 200.0,
            ou_dt: 5e-4,
            ou_thin: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSection {
    /// Modes kept by `Q_N` in the phase-variance run.
    pub modes: usize,
    pub variance_sigma: f64,
    pub variance_q: f64,
    pub decay_t_max: f64,
    pub decay_samples: usize,
    pub decay_dt: f64,
    pub probe_seed: u64,
}

impl Default for MomentsSection {
    fn default() -> Self {
        Self {
            modes: 32,
            variance_sigma: 1e-6,
            variance_q: 0.4,
            decay_t_max: 50.0,
            decay_samples: 50,
            decay_dt: 0.05,
            probe_seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimalitySection {
    pub sigmas: Vec<f64>,
    /// Sampled times per path.
    pub samples: usize,
}

impl Default for MinimalitySection {
    fn default() -> Self {
        Self {
            sigmas: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
            samples: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub out: PathBuf,
    pub replicas: usize,
    pub threads: Option<usize>,
    pub model: ModelSection,
    pub grid: GridSection,
    pub noise: NoiseSection,
    pub sim: SimConfig,
    pub spectrum: SpectrumSection,
    pub scaling: ScalingSection,
    pub reduce: ReduceSection,
    pub moments: MomentsSection,
    pub minimality: MinimalitySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            out: PathBuf::from("out"),
            replicas: 1,
            threads: None,
            model: ModelSection::default(),
            grid: GridSection::default(),
            noise: NoiseSection::default(),
            sim: SimConfig::default(),
            spectrum: SpectrumSection::default(),
            scaling: ScalingSection::default(),
            reduce: ReduceSection::default(),
            moments: MomentsSection::default(),
            minimality: MinimalitySection::default(),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::Config(msg)
}

fn check_sigmas(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(invalid(format!("{name} must be a non-empty list of positive values")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The configuration as TOML; parsing it back gives the same value.
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    /// Range and consistency checks without any computation. Errors are
    /// reported as configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        };
        self.model.params().map_err(as_config)?;
        self.grid.grid().map_err(as_config)?;
        self.noise.spectrum.validate().map_err(as_config)?;
        if !(self.noise.scale > 0.0) {
            return Err(invalid(format!("noise scale must be > 0, got {}", self.noise.scale)));
        }
        self.sim.validate().map_err(as_config)?;
        if self.replicas == 0 {
            return Err(invalid("replicas must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be >= 1".into()));
        }
        if self.spectrum.eigenvalues < 2 || self.spectrum.k_samples < 2 || !(self.spectrum.k_max > 0.0) {
            return Err(invalid("spectrum needs eigenvalues >= 2, k_samples >= 2 and k_max > 0".into()));
        }
        check_sigmas("scaling.sigmas", &self.scaling.sigmas)?;
        if self.scaling.qs.is_empty() || self.scaling.qs.iter().any(|q| !(0.0..0.5).contains(q)) {
            return Err(invalid("scaling.qs must be a non-empty list in [0, 0.5)".into()));
        }
        let r = &self.reduce;
        for &m in &r.ms {
            SimConfig {
                m,
                dt: r.dt,
                save_every: r.save_every,
                ..self.sim
            }
            .validate()
            .map_err(|e| invalid(format!("reduce ladder: {}", as_config(e))))?;
        }
        if r.ms.is_empty() || !(r.table_spacing > 0.0) || !(r.t_min >= 0.0) || r.ou_thin == 0 {
            return Err(invalid(
                "reduce needs ms, table_spacing > 0, t_min >= 0 and ou_thin >= 1".into(),
            ));
        }
        SimConfig {
            m: r.ou_m,
            t_end: r.ou_t_end,
            dt: r.ou_dt,
            ..self.sim
        }
        .validate()
        .map_err(|e| invalid(format!("reduce OU run: {}", as_config(e))))?;
        let m = &self.moments;
        if m.modes == 0 || m.modes > self.noise.spectrum.eigenvalues().len() {
            return Err(invalid(format!("moments.modes must lie in 1..={}", self.noise.spectrum.eigenvalues().len())));
        }
        SimConfig {
            sigma: m.variance_sigma,
            q: m.variance_q,
            ..self.sim
        }
        .validate()
        .map_err(|e| invalid(format!("phase-variance run: {}", as_config(e))))?;
        if !(m.variance_sigma > 0.0) {
            return Err(invalid("moments.variance_sigma must be > 0".into()));
        }
        if !(m.decay_t_max > 0.0 && m.decay_dt > 0.0) || m.decay_samples == 0 {
            return Err(invalid("decay fit needs t_max > 0, dt > 0 and samples >= 1".into()));
        }
        check_sigmas("minimality.sigmas", &self.minimality.sigmas)?;
        if self.minimality.samples == 0 {
            return Err(invalid("minimality.samples must be >= 1".into()));
        }
        Ok(())
    }
}
