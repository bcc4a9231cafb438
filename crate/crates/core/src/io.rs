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

//! Configuration files and CSV output.
//!
//! Profiles, surface densities and measures are read from TOML. Every table
//! rejects unknown keys. CSV output is comma-separated with a header row,
//! preceded by `# ` comment lines supplied by the caller.

use crate::adatom::{self, AdatomMeasure, Atom, Grid, MeasureError, PieceSpec};
use crate::convergence::ConvergenceReport;
use crate::elastic::{DisplacementField, FilmMesh};
use crate::energy::EnergyBreakdown;
use crate::envelope::{EnvelopeError, EnvelopeTable, SurfaceDensity};
use crate::geometry::Point;
use crate::profile::{ExtendedGraph, Node, Part, Profile, ProfileError, ProfileSpec};
use crate::recovery::StageRecord;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("invalid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("CSV error in {path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv { path: PathBuf::new(), msg: e.to_string() }
    }
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Read { path: path.to_path_buf(), msg: e.to_string() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcConfig {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub x: f64,
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

/// Profile file: `domain = [a, b]`, `[[arc]]` tables with `x` and `y`
/// arrays, and `[[node]]` tables with `x`, `left`, `right`, `value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub domain: [f64; 2],
    #[serde(default, rename = "arc")]
    pub arcs: Vec<ArcConfig>,
    #[serde(default, rename = "node")]
    pub nodes: Vec<NodeConfig>,
}

impl ProfileConfig {
    pub fn to_spec(&self) -> Result<ProfileSpec, IoError> {
        let mut spec = ProfileSpec::new(self.domain[0], self.domain[1]);
        for (i, a) in self.arcs.iter().enumerate() {
            if a.x.len() != a.y.len() {
                return Err(IoError::Invalid(format!("arc {i}: x has {} entries, y has {}", a.x.len(), a.y.len())));
            }
            spec.arcs.push(a.x.iter().zip(&a.y).map(|(&x, &y)| Point::new(x, y)).collect());
        }
        spec.nodes = self.nodes.iter().map(|n| Node { x: n.x, left: n.left, right: n.right, value: n.value }).collect();
        Ok(spec)
    }

    pub fn build(&self) -> Result<Profile, IoError> {
        Ok(self.to_spec()?.build()?)
    }

    pub fn from_profile(p: &Profile) -> ProfileConfig {
        let spec = p.to_spec();
        ProfileConfig {
            domain: [spec.domain.0, spec.domain.1],
            arcs: spec
                .arcs
                .iter()
                .map(|a| ArcConfig { x: a.iter().map(|q| q.x).collect(), y: a.iter().map(|q| q.y).collect() })
                .collect(),
            nodes: spec
                .nodes
                .iter()
                .map(|n| NodeConfig { x: n.x, left: n.left, right: n.right, value: n.value })
                .collect(),
        }
    }
}

pub fn parse_profile(text: &str) -> Result<Profile, IoError> {
    toml::from_str::<ProfileConfig>(text)?.build()
}

/// Surface density block. A table is read from a CSV file with columns
/// `s,value`; relative paths are resolved against the config directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurfaceDensityConfig {
    Constant { c: f64 },
    Quadratic { alpha: f64, beta: f64 },
    Table { path: PathBuf, tail_slope: f64 },
}

impl SurfaceDensityConfig {
    pub fn resolve(&self, base: &Path) -> Result<SurfaceDensity, IoError> {
        let psi = match self {
            SurfaceDensityConfig::Constant { c } => SurfaceDensity::Constant { c: *c },
            SurfaceDensityConfig::Quadratic { alpha, beta } => SurfaceDensity::Quadratic { alpha: *alpha, beta: *beta },
            SurfaceDensityConfig::Table { path, tail_slope } => {
                let (s, values) = read_table_csv(&base.join(path))?;
                SurfaceDensity::Table { s, values, tail_slope: *tail_slope }
            }
        };
        psi.validate()?;
        Ok(psi)
    }
}

#[derive(Deserialize)]
struct TableRow {
    s: f64,
    value: f64,
}

/// Reads the `s,value` columns of a surface density table.
pub fn read_table_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let csv_err = |e: csv::Error| IoError::Csv { path: path.to_path_buf(), msg: e.to_string() };
    let file = std::fs::File::open(path).map_err(|e| IoError::Read { path: path.to_path_buf(), msg: e.to_string() })?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let mut s = Vec::new();
    let mut values = Vec::new();
    for row in rdr.deserialize::<TableRow>() {
        let row = row.map_err(csv_err)?;
        s.push(row.s);
        values.push(row.value);
    }
    Ok((s, values))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    /// Part of the graph: `regular`, `jump` or `cut`.
    pub tag: Part,
    /// Left-to-right index among the segments of that part; all of them
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub x: f64,
    pub y: f64,
    pub mass: f64,
}

/// Measure block: `[[density]]` and `[[atom]]` tables. Segments without a
/// density entry carry density 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default, rename = "density")]
    pub densities: Vec<DensityConfig>,
    #[serde(default, rename = "atom")]
    pub atoms: Vec<AtomConfig>,
}

impl MeasureConfig {
    pub fn build(&self, g: &ExtendedGraph) -> Result<AdatomMeasure, IoError> {
        let mut specs = Vec::new();
        for d in &self.densities {
            let indices = match d.index {
                Some(i) => vec![i],
                None => (0..g.indices_of(d.tag).len()).collect(),
            };
            specs.extend(indices.into_iter().map(|index| PieceSpec::Segment { part: d.tag, index, value: d.value }));
        }
        let atoms = self.atoms.iter().map(|a| Atom { position: Point::new(a.x, a.y), mass: a.mass }).collect();
        Ok(AdatomMeasure::new(g, &specs, atoms)?)
    }
}

/// CSV output with leading comment lines.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub fn new(mut w: W, comments: &[String], header: &[&str]) -> Result<Self, IoError> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        inner.write_record(header)?;
        Ok(CsvOut { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), IoError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(self) -> Result<W, IoError> {
        self.inner.into_inner().map_err(|e| IoError::Write(e.into_error()))
    }
}

/// Shortest round-trip form; exponent notation for very small or large
/// magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `s,psi,psi_cvx,psi_tilde,psi_c` at the given abscissae.
pub fn write_envelope_csv<W: Write>(w: W, comments: &[String], env: &EnvelopeTable, s: &[f64]) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["s", "psi", "psi_cvx", "psi_tilde", "psi_c"])?;
    for &x in s {
        out.row([num(x), num(env.psi_at(x)), num(env.psi_cvx(x)), num(env.psi_tilde(x)?), num(env.psi_c(x)?)])?;
    }
    out.finish()
}

/// Cell averages of `mu`: `cell_i,cell_j,part,length,density`.
pub fn write_projection_csv<W: Write>(
    w: W,
    comments: &[String],
    g: &ExtendedGraph,
    mu: &AdatomMeasure,
    grid: &Grid,
) -> Result<W, IoError> {
    let (_, cells, _) = adatom::cell_summary(g, mu, grid)?;
    let mut out = CsvOut::new(w, comments, &["cell_i", "cell_j", "part", "length", "density"])?;
    for c in cells {
        out.row([c.cell.0.to_string(), c.cell.1.to_string(), c.class.name().to_string(), num(c.length), num(c.density)])?;
    }
    out.finish()
}

/// One labelled row per breakdown:
/// `functional,bulk,surface_regular,surface_jump,surface_cut,singular,total`.
/// The bulk column is empty when the bulk term was not evaluated.
pub fn write_energy_csv<W: Write>(w: W, comments: &[String], rows: &[(&str, EnergyBreakdown)]) -> Result<W, IoError> {
    let header = ["functional", "bulk", "surface_regular", "surface_jump", "surface_cut", "singular", "total"];
    let mut out = CsvOut::new(w, comments, &header)?;
    for (name, e) in rows {
        let bulk = if e.bulk_evaluated { num(e.bulk) } else { String::new() };
        out.row([
            name.to_string(),
            bulk,
            num(e.surface_regular),
            num(e.surface_jump),
            num(e.surface_cut),
            num(e.singular),
            num(e.total),
        ])?;
    }
    out.finish()
}

pub fn write_stage_csv<W: Write>(w: W, comments: &[String], stages: &[StageRecord]) -> Result<W, IoError> {
    let header = [
        "k",
        "stage",
        "area",
        "mass",
        "H1_regular",
        "H1_jump",
        "H1_cut",
        "F_surface",
        "F_bulk",
        "G_surface",
        "hausdorff_gap",
        "weakstar_gap",
    ];
    let mut out = CsvOut::new(w, comments, &header)?;
    for s in stages {
        out.row([
            s.k.to_string(),
            s.stage.name().to_string(),
            num(s.area),
            opt(s.mass),
            num(s.lengths.0),
            num(s.lengths.1),
            num(s.lengths.2),
            opt(s.f_surface),
            opt(s.f_bulk),
            opt(s.g_surface),
            opt(s.hausdorff_gap),
            opt(s.weakstar_gap),
        ])?;
    }
    out.finish()
}

/// Per-k rows of the report, followed by a `# summary:` comment line.
pub fn write_convergence_csv<W: Write>(w: W, comments: &[String], report: &ConvergenceReport) -> Result<W, IoError> {
    let header = [
        "k",
        "hausdorff_complement",
        "hausdorff_bound",
        "l1_subgraph",
        "weakstar_gap",
        "F_total",
        "G_limit",
        "mass_error",
        "area_error",
    ];
    let mut out = CsvOut::new(w, comments, &header)?;
    for r in &report.rows {
        out.row([
            r.k.to_string(),
            num(r.hausdorff),
            num(r.hausdorff_bound),
            num(r.l1),
            num(r.weakstar),
            num(r.f_total),
            num(r.g_limit),
            num(r.mass_error),
            num(r.area_error),
        ])?;
    }
    let mut w = out.finish()?;
    writeln!(w, "# summary: {}", report.summary_line())?;
    Ok(w)
}

/// Polyline vertices `x,y`.
pub fn write_profile_csv<W: Write>(w: W, comments: &[String], pts: &[Point]) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["x", "y"])?;
    for q in pts {
        out.row([num(q.x), num(q.y)])?;
    }
    out.finish()
}

/// Density pieces `x0,y0,x1,y1,length,density`.
pub fn write_density_csv<W: Write>(w: W, comments: &[String], mu: &AdatomMeasure) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["x0", "y0", "x1", "y1", "length", "density"])?;
    for p in mu.pieces() {
        let (a, b) = (p.path[0], *p.path.last().unwrap());
        out.row([num(a.x), num(a.y), num(b.x), num(b.y), num(p.length), num(p.value)])?;
    }
    out.finish()
}

pub fn write_mesh_nodes_csv<W: Write>(w: W, comments: &[String], m: &FilmMesh) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["id", "x", "y", "flag"])?;
    for (i, (q, f)) in m.nodes.iter().zip(&m.flags).enumerate() {
        out.row([i.to_string(), num(q.x), num(q.y), f.label()])?;
    }
    out.finish()
}

pub fn write_mesh_triangles_csv<W: Write>(w: W, comments: &[String], m: &FilmMesh) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["id", "a", "b", "c"])?;
    for (i, t) in m.triangles.iter().enumerate() {
        out.row([i.to_string(), t[0].to_string(), t[1].to_string(), t[2].to_string()])?;
    }
    out.finish()
}

pub fn write_displacement_csv<W: Write>(w: W, comments: &[String], v: &DisplacementField) -> Result<W, IoError> {
    let mut out = CsvOut::new(w, comments, &["id", "vx", "vy"])?;
    for (i, d) in v.0.iter().enumerate() {
        out.row([i.to_string(), num(d[0]), num(d[1])])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEEDLE: &str = r#"
domain = [0.0, 1.0]

[[arc]]
x = [0.0, 0.5]
y = [1.0, 1.0]

[[arc]]
x = [0.5, 1.0]
y = [1.0, 1.0]

[[node]]
x = 0.5
left = 1.0
right = 1.0
value = 0.0
"#;

    #[test]
    fn needle_from_toml() {
        let p = parse_profile(NEEDLE).unwrap();
        let l = p.decompose().lengths;
        assert_eq!((l.regular, l.jump, l.cut), (1.0, 0.0, 1.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = NEEDLE.replace("value = 0.0", "value = 0.0\nweight = 2.0");
        assert!(matches!(parse_profile(&text), Err(IoError::Toml(_))));
        let psi: Result<SurfaceDensityConfig, _> = toml::from_str("kind = \"constant\"\nc = 1.0\nd = 2.0");
        assert!(psi.is_err());
    }

    #[test]
    fn mismatched_arc_lengths() {
        let text = "domain = [0.0, 1.0]\n[[arc]]\nx = [0.0, 1.0]\ny = [1.0]\n";
        assert!(matches!(parse_profile(text), Err(IoError::Invalid(_))));
    }

    #[test]
    fn profile_round_trip() {
        let p = parse_profile(NEEDLE).unwrap();
        let text = toml::to_string(&ProfileConfig::from_profile(&p)).unwrap();
        assert_eq!(parse_profile(&text).unwrap(), p);
    }

    #[test]
    fn csv_layout() {
        let pts = [Point::new(0.0, 1.0), Point::new(0.5, 0.25)];
        let buf = write_profile_csv(Vec::new(), &["version 1".into()], &pts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# version 1\nx,y\n0.0,1.0\n0.5,0.25\n");
    }
}
