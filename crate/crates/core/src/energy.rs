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

//! Unrelaxed and relaxed energies.
//!
//! `ℱ(h, u, v) = ∫_Ω W(E(v) − E₀) + ∫_Γ ψ(u) dH¹` on regular configurations,
//! and the relaxed
//! `𝒢(h, v, μ) = ∫_Ω W(E(v) − E₀) + ∫_Γ̃ ψ̃(u) + ∫_Γᶜ ψᶜ(u) + θ μˢ(Γ)`.

use crate::adatom::{AdatomMeasure, MeasureError};
use crate::elastic::{self, DisplacementField, ElasticError, ElasticityTensor, FilmMesh};
use crate::envelope::{EnvelopeError, EnvelopeTable, SurfaceDensity};
use crate::geometry;
use crate::numeric::NeumaierSum;
use crate::profile::{ExtendedGraph, Part, PartLengths, Profile, ProfileError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("no surface density given")]
    MissingSurfaceDensity,
    #[error("bulk energy requested without a displacement field")]
    MissingDisplacement,
    #[error("regular configurations need a Lipschitz profile")]
    NotLipschitz,
    #[error("regular configurations carry no atoms and no jump or cut densities")]
    SingularDensity,
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Elastic(#[from] ElasticError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

/// Lipschitz profile with a piecewise-constant density on its graph.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularConfiguration {
    profile: Profile,
    graph: ExtendedGraph,
    density: AdatomMeasure,
    elastic: Option<(FilmMesh, DisplacementField)>,
}

impl RegularConfiguration {
    pub fn new(profile: Profile, density: AdatomMeasure) -> Result<Self, EnergyError> {
        if !profile.is_lipschitz() {
            return Err(EnergyError::NotLipschitz);
        }
        if !density.atoms().is_empty() || density.pieces().iter().any(|p| p.part != Part::Regular) {
            return Err(EnergyError::SingularDensity);
        }
        let graph = profile.decompose();
        density.validate(&graph)?;
        Ok(RegularConfiguration { profile, graph, density, elastic: None })
    }

    /// Attaches a mesh and a displacement for the bulk term.
    pub fn with_displacement(mut self, mesh: FilmMesh, v: DisplacementField) -> Result<Self, EnergyError> {
        if v.0.len() != mesh.nodes.len() {
            return Err(ElasticError::SizeMismatch { got: v.0.len(), expected: mesh.nodes.len() }.into());
        }
        self.elastic = Some((mesh, v));
        Ok(self)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn graph(&self) -> &ExtendedGraph {
        &self.graph
    }

    pub fn density(&self) -> &AdatomMeasure {
        &self.density
    }

    pub fn displacement(&self) -> Option<(&FilmMesh, &DisplacementField)> {
        self.elastic.as_ref().map(|(m, v)| (m, v))
    }

    /// `∫ u dH¹`.
    pub fn mass(&self) -> f64 {
        self.density.total_mass()
    }

    pub fn area(&self) -> f64 {
        self.profile.area_above_zero()
    }
}

/// Energy terms. Surface terms are split by part of the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub surface_regular: f64,
    pub surface_jump: f64,
    pub surface_cut: f64,
    pub singular: f64,
    pub total: f64,
    /// Whether the bulk term was computed (it is zero otherwise).
    pub bulk_evaluated: bool,
}

impl EnergyBreakdown {
    pub fn surface(&self) -> f64 {
        self.surface_regular + self.surface_jump + self.surface_cut + self.singular
    }

    fn finish(mut self) -> Self {
        self.total = self.bulk + self.surface();
        self
    }
}

/// `∫_Γ ψ(u) dH¹` for a regular configuration; uncovered parts of the graph
/// carry `ψ(0)`.
pub fn surface_energy_unrelaxed(cfg: &RegularConfiguration, psi: &SurfaceDensity) -> Result<f64, EnergyError> {
    psi.validate()?;
    let mut s = NeumaierSum::new();
    for p in cfg.density.pieces() {
        s.add(psi.eval(p.value) * p.length);
    }
    let uncovered = (cfg.graph.lengths.regular - cfg.density.covered_length(Part::Regular)).max(0.0);
    s.add(psi.eval(0.0) * uncovered);
    Ok(s.value())
}

/// Relaxed surface terms of `(Γ, μ)`, optionally restricted to the closed
/// window `[x0, x1]`.
pub fn surface_energy_relaxed_in(
    g: &ExtendedGraph,
    mu: &AdatomMeasure,
    env: &EnvelopeTable,
    window: Option<(f64, f64)>,
) -> Result<EnergyBreakdown, EnergyError> {
    let lengths: PartLengths = match window {
        None => g.lengths,
        Some((x0, x1)) => g.lengths_in(x0, x1)?,
    };
    let inside = |x: f64| window.is_none_or(|(x0, x1)| x >= x0 && x <= x1);
    let mut acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    let mut covered = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    let slot = |p: Part| match p {
        Part::Regular => 0,
        Part::Jump => 1,
        Part::Cut => 2,
    };
    for p in mu.pieces() {
        let len = if p.part == Part::Regular {
            match window {
                None => p.length,
                Some((x0, x1)) => {
                    let (p0, p1) = (p.path[0].x, p.path.last().unwrap().x);
                    if p1 <= x0 || p0 >= x1 {
                        0.0
                    } else if p0 >= x0 && p1 <= x1 {
                        p.length
                    } else {
                        geometry::path_length(&geometry::clip_path(&p.path, x0, x1))
                    }
                }
            }
        } else if inside(p.path[0].x) {
            p.length
        } else {
            0.0
        };
        if len == 0.0 {
            continue;
        }
        let dens = if p.part == Part::Cut { env.psi_c(p.value)? } else { env.psi_tilde(p.value)? };
        acc[slot(p.part)].add(dens * len);
        covered[slot(p.part)].add(len);
    }
    for part in [Part::Regular, Part::Jump, Part::Cut] {
        let i = slot(part);
        let rest = (lengths.get(part) - covered[i].value()).max(0.0);
        if rest > 0.0 {
            let d0 = if part == Part::Cut { env.psi_c(0.0)? } else { env.psi_tilde(0.0)? };
            acc[i].add(d0 * rest);
        }
    }
    let atomic = NeumaierSum::from_iter(mu.atoms().iter().filter(|a| inside(a.position.x)).map(|a| a.mass)).value();
    Ok(EnergyBreakdown {
        surface_regular: acc[0].value(),
        surface_jump: acc[1].value(),
        surface_cut: acc[2].value(),
        singular: env.recession_theta() * atomic,
        ..Default::default()
    }
    .finish())
}

/// Relaxed surface terms over the whole graph.
pub fn surface_energy_relaxed(g: &ExtendedGraph, mu: &AdatomMeasure, env: &EnvelopeTable) -> Result<EnergyBreakdown, EnergyError> {
    surface_energy_relaxed_in(g, mu, env, None)
}

fn bulk_term(
    elastic: Option<(&FilmMesh, &DisplacementField)>,
    c: Option<&ElasticityTensor>,
) -> Result<(f64, bool), EnergyError> {
    match c {
        None => Ok((0.0, false)),
        Some(c) => {
            let (m, v) = elastic.ok_or(EnergyError::MissingDisplacement)?;
            Ok((elastic::elastic_energy(m, v, c)?, true))
        }
    }
}

/// `ℱ` of a regular configuration. The bulk term is evaluated when an
/// elasticity tensor is given.
pub fn total_energy_f(
    cfg: &RegularConfiguration,
    psi: Option<&SurfaceDensity>,
    c: Option<&ElasticityTensor>,
) -> Result<EnergyBreakdown, EnergyError> {
    let psi = psi.ok_or(EnergyError::MissingSurfaceDensity)?;
    let surface = surface_energy_unrelaxed(cfg, psi)?;
    let (bulk, evaluated) = bulk_term(cfg.displacement(), c)?;
    Ok(EnergyBreakdown { bulk, surface_regular: surface, bulk_evaluated: evaluated, ..Default::default() }.finish())
}

/// `𝒢` of `(h, v, μ)`. The bulk term needs a mesh of the profile, so it is
/// only available for Lipschitz profiles.
pub fn total_energy_g(
    p: &Profile,
    mu: &AdatomMeasure,
    elastic: Option<(&FilmMesh, &DisplacementField)>,
    env: &EnvelopeTable,
    c: Option<&ElasticityTensor>,
) -> Result<EnergyBreakdown, EnergyError> {
    let g = p.decompose();
    mu.validate(&g)?;
    let mut out = surface_energy_relaxed(&g, mu, env)?;
    if c.is_some() && !p.is_lipschitz() {
        return Err(EnergyError::NotLipschitz);
    }
    let (bulk, evaluated) = bulk_term(elastic, c)?;
    out.bulk = bulk;
    out.bulk_evaluated = evaluated;
    Ok(out.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adatom::{Atom, PieceSpec};
    use crate::envelope::{subadditive_convex_envelope, SampleGrid};
    use crate::geometry::Point;

    fn quad() -> SurfaceDensity {
        SurfaceDensity::Quadratic { alpha: 1.0, beta: 1.0 }
    }

    #[test]
    fn flat_unrelaxed_and_relaxed() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let g = p.decompose();
        let mu = AdatomMeasure::uniform(&g, 2.0, 0.0).unwrap();
        let cfg = RegularConfiguration::new(p.clone(), mu.clone()).unwrap();
        assert_eq!(surface_energy_unrelaxed(&cfg, &quad()).unwrap(), 5.0);
        let env = subadditive_convex_envelope(&quad(), SampleGrid::default()).unwrap();
        let e = total_energy_g(&p, &mu, None, &env, None).unwrap();
        assert_eq!(e.total, 4.0);
        assert!(!e.bulk_evaluated);
    }

    #[test]
    fn missing_psi_is_an_error() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let mu = AdatomMeasure::uniform(&p.decompose(), 1.0, 0.0).unwrap();
        let cfg = RegularConfiguration::new(p, mu).unwrap();
        assert!(matches!(total_energy_f(&cfg, None, None), Err(EnergyError::MissingSurfaceDensity)));
        let c = ElasticityTensor::new(1.0, 1.0, 0.0).unwrap();
        assert!(matches!(total_energy_f(&cfg, Some(&quad()), Some(&c)), Err(EnergyError::MissingDisplacement)));
    }

    #[test]
    fn uncovered_graph_costs_psi_zero() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let mu = AdatomMeasure::new(&p.decompose(), &[PieceSpec::Window { x0: 0.0, x1: 0.5, value: 1.0 }], vec![]).unwrap();
        let cfg = RegularConfiguration::new(p, mu).unwrap();
        assert_eq!(surface_energy_unrelaxed(&cfg, &quad()).unwrap(), 1.5);
    }

    #[test]
    fn atoms_cost_theta_per_unit_mass() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let g = p.decompose();
        let mu = AdatomMeasure::new(&g, &[], vec![Atom { position: Point::new(0.5, 1.0), mass: 0.5 }]).unwrap();
        let env = subadditive_convex_envelope(&quad(), SampleGrid::default()).unwrap();
        let e = surface_energy_relaxed(&g, &mu, &env).unwrap();
        assert_eq!(e.singular, 1.0);
        assert_eq!(e.surface_regular, 1.0);
        let l = surface_energy_relaxed_in(&g, &mu, &env, Some((0.0, 0.5))).unwrap();
        let r = surface_energy_relaxed_in(&g, &mu, &env, Some((0.5, 1.0))).unwrap();
        // the atom sits on the shared window edge and is counted on both sides
        assert_eq!(l.surface_regular + r.surface_regular, e.surface_regular);
    }
}
