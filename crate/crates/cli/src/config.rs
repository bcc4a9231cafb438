// Copyright 2026 The epirelax Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Experiment configuration.

use epirelax::adatom::AdatomMeasure;
use epirelax::convergence::{Tolerances, VerifyOptions};
use epirelax::elastic::{BoundaryCondition, ElasticityTensor};
use epirelax::envelope::{SampleGrid, SurfaceDensity};
use epirelax::io::{self, IoError, MeasureConfig, ProfileConfig, SurfaceDensityConfig};
use epirelax::profile::Profile;
use epirelax::recovery::RecoveryOptions;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// A profile given inline or as a path to a profile file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProfileSource {
    Path(PathBuf),
    Inline(ProfileConfig),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    #[serde(default = "default_s_max")]
    pub s_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Rows of `envelope.csv`, evenly spaced on `[0, s_max]`.
    #[serde(default = "default_plot_points")]
    pub plot_points: usize,
}

fn default_s_max() -> f64 {
    SampleGrid::default().s_max
}

fn default_points() -> usize {
    SampleGrid::default().points
}

fn default_plot_points() -> usize {
    257
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig { s_max: default_s_max(), points: default_points(), plot_points: default_plot_points() }
    }
}

impl EnvelopeConfig {
    pub fn grid(&self) -> SampleGrid {
        SampleGrid { s_max: self.s_max, points: self.points }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticityConfig {
    pub lambda: f64,
    pub mu: f64,
    /// Mismatch strain.
    pub t: f64,
    /// Substrate depth; the domain width when absent.
    pub d: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub bc: BoundaryCondition,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    pub ks: Vec<u32>,
    #[serde(default = "default_cell")]
    pub cell: f64,
    #[serde(default = "default_grid_tries")]
    pub grid_tries: usize,
    #[serde(default = "default_refinements")]
    pub max_refinements: u32,
    #[serde(default = "default_true")]
    pub oscillate: bool,
    #[serde(default = "default_resolution")]
    pub hausdorff_resolution: usize,
    #[serde(default = "default_limsup")]
    pub limsup_rel: f64,
    #[serde(default = "default_liminf")]
    pub liminf_abs: f64,
    #[serde(default = "default_constraint")]
    pub constraint: f64,
    /// Factor applied to the emitted densities before verification. Values
    /// other than 1 break the mass constraint on purpose.
    #[serde(default = "default_scale")]
    pub density_scale: f64,
}

fn default_cell() -> f64 {
    RecoveryOptions::default().cell
}

fn default_grid_tries() -> usize {
    RecoveryOptions::default().grid_tries
}

fn default_refinements() -> u32 {
    RecoveryOptions::default().max_refinements
}

fn default_true() -> bool {
    true
}

fn default_resolution() -> usize {
    VerifyOptions::default().hausdorff_resolution
}

fn default_limsup() -> f64 {
    Tolerances::default().limsup_rel
}

fn default_liminf() -> f64 {
    Tolerances::default().liminf_abs
}

fn default_constraint() -> f64 {
    Tolerances::default().constraint
}

fn default_scale() -> f64 {
    1.0
}

impl RecoveryConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { limsup_rel: self.limsup_rel, liminf_abs: self.liminf_abs, constraint: self.constraint }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: Option<ProfileSource>,
    pub surface: SurfaceDensityConfig,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    pub elasticity: Option<ElasticityConfig>,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub recovery: Option<RecoveryConfig>,
    /// Output directory, used when `--out` is not given.
    pub out: Option<PathBuf>,
}

/// A parsed config with the directory that relative paths refer to.
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base: PathBuf,
    pub text: String,
}

pub fn load(path: &Path) -> Result<Loaded, IoError> {
    let text = io::read_to_string(path)?;
    let config: ExperimentConfig = toml::from_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base, text })
}

impl Loaded {
    pub fn surface(&self) -> Result<SurfaceDensity, IoError> {
        let psi = self.config.surface.resolve(&self.base)?;
        self.config.envelope.grid().validate()?;
        if self.config.envelope.plot_points < 2 {
            return Err(IoError::Invalid("envelope.plot_points must be at least 2".into()));
        }
        Ok(psi)
    }

    pub fn profile(&self) -> Result<Profile, IoError> {
        match &self.config.profile {
            None => Err(IoError::Invalid("missing profile".into())),
            Some(ProfileSource::Inline(p)) => p.build(),
            Some(ProfileSource::Path(p)) => io::parse_profile(&io::read_to_string(&self.base.join(p))?),
        }
    }

    pub fn measure(&self, p: &Profile) -> Result<AdatomMeasure, IoError> {
        self.config.measure.build(&p.decompose())
    }

    pub fn elasticity(&self) -> Result<Option<(ElasticityTensor, ElasticityConfig)>, IoError> {
        let Some(e) = self.config.elasticity else {
            return Ok(None);
        };
        let c = ElasticityTensor::new(e.lambda, e.mu, e.t).map_err(|err| IoError::Invalid(err.to_string()))?;
        if e.nx < 2 || e.ny < 2 {
            return Err(IoError::Invalid(format!("elasticity resolution {} x {} below 2 x 2", e.nx, e.ny)));
        }
        if e.d.is_some_and(|d| !(d > 0.0)) {
            return Err(IoError::Invalid("elasticity.d must be positive".into()));
        }
        Ok(Some((c, e)))
    }

    pub fn recovery(&self) -> Result<&RecoveryConfig, IoError> {
        let r = self.config.recovery.as_ref().ok_or_else(|| IoError::Invalid("missing [recovery] block".into()))?;
        if r.ks.is_empty() {
            return Err(IoError::Invalid("recovery.ks is empty".into()));
        }
        if r.ks.contains(&0) {
            return Err(IoError::Invalid("recovery.ks must be positive".into()));
        }
        if !(r.cell > 0.0 && r.cell.is_finite()) {
            return Err(IoError::Invalid("recovery.cell must be positive".into()));
        }
        if r.hausdorff_resolution < 64 {
            return Err(IoError::Invalid("recovery.hausdorff_resolution must be at least 64".into()));
        }
        if !(r.density_scale >= 0.0 && r.density_scale.is_finite()) {
            return Err(IoError::Invalid("recovery.density_scale must be non-negative".into()));
        }
        Ok(r)
    }
}
