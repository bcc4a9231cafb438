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

//! Adatom measures on the extended graph, grid-constant projection and
//! weak-* comparison against a bank of test functions.
//!
//! A measure is a finite set of density pieces (constant densities on
//! sub-polylines of one graph segment) plus point atoms. Parts of the graph
//! not covered by any piece carry density zero.

use crate::geometry::{self, Point};
use crate::numeric::{gauss_legendre, NeumaierSum};
use crate::profile::{ExtendedGraph, Part};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

const POS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("non-positive atom mass {0}")]
    NonPositiveMass(f64),
    #[error("atom at ({x}, {y}) is {dist} away from the graph")]
    AtomOffGraph { x: f64, y: f64, dist: f64 },
    #[error("density piece does not lie on the graph: {0}")]
    PieceOffGraph(String),
    #[error("density pieces overlap on segment {0}")]
    OverlappingPieces(usize),
    #[error("no {part} segment with index {index}")]
    UnknownSegment { part: String, index: usize },
    #[error("no admissible grid offset among {0} tries")]
    NoAdmissibleGrid(usize),
    #[error("invalid cell size {0}")]
    InvalidCellSize(f64),
    #[error("empty test-function bank")]
    EmptyBank,
}

/// Constant density on a sub-polyline of one graph segment.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityPiece {
    /// Index of the carrying segment in the extended graph.
    pub segment: usize,
    pub part: Part,
    pub path: Vec<Point>,
    pub value: f64,
    pub length: f64,
}

impl DensityPiece {
    pub fn new(segment: usize, part: Part, path: Vec<Point>, value: f64) -> Self {
        let length = geometry::path_length(&path);
        DensityPiece { segment, part, path, value, length }
    }

    pub fn mass(&self) -> f64 {
        self.value * self.length
    }

    pub(crate) fn span(&self) -> (f64, f64) {
        if self.part == Part::Regular {
            (self.path[0].x, self.path.last().unwrap().x)
        } else {
            (self.path[0].y, self.path.last().unwrap().y)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: Point,
    pub mass: f64,
}

/// How a density piece is specified relative to a graph.
#[derive(Clone, Debug, PartialEq)]
pub enum PieceSpec {
    /// A whole segment, selected by part and left-to-right index.
    Segment { part: Part, index: usize, value: f64 },
    /// The regular part over `[x0, x1]`.
    Window { x0: f64, x1: f64, value: f64 },
    /// A sub-interval `[y0, y1]` of the jump or cut at `x`.
    Vertical { part: Part, x: f64, y0: f64, y1: f64, value: f64 },
}

/// Piecewise-constant densities plus atoms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdatomMeasure {
    pieces: Vec<DensityPiece>,
    atoms: Vec<Atom>,
}

impl AdatomMeasure {
    /// Builds and validates a measure on `g`.
    pub fn new(g: &ExtendedGraph, specs: &[PieceSpec], atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        let scale = (g.domain.1 - g.domain.0).max(1.0);
        let mut pieces = Vec::new();
        for spec in specs {
            match *spec {
                PieceSpec::Segment { part, index, value } => {
                    let si = g.segment_of(part, index).ok_or(MeasureError::UnknownSegment {
                        part: part.name().into(),
                        index,
                    })?;
                    let s = &g.segments[si];
                    pieces.push(DensityPiece { segment: si, part, path: s.path.clone(), value, length: s.length });
                }
                PieceSpec::Window { x0, x1, value } => {
                    let (a, b) = g.domain;
                    if !(x0 >= a - POS_TOL * scale && x1 <= b + POS_TOL * scale && x0 < x1) {
                        return Err(MeasureError::PieceOffGraph(format!("window [{x0}, {x1}]")));
                    }
                    for (si, s) in g.segments.iter().enumerate() {
                        if s.part != Part::Regular {
                            continue;
                        }
                        let (s0, s1) = s.x_range();
                        if s1 <= x0 || s0 >= x1 {
                            continue;
                        }
                        let path = geometry::clip_path(&s.path, x0, x1);
                        if path.len() >= 2 {
                            pieces.push(DensityPiece::new(si, Part::Regular, path, value));
                        }
                    }
                }
                PieceSpec::Vertical { part, x, y0, y1, value } => {
                    let si = g
                        .segments
                        .iter()
                        .position(|s| {
                            s.part == part
                                && (s.path[0].x - x).abs() <= POS_TOL * scale
                                && y0 >= s.path[0].y - POS_TOL * scale
                                && y1 <= s.path[1].y + POS_TOL * scale
                                && y0 < y1
                        })
                        .ok_or_else(|| {
                            MeasureError::PieceOffGraph(format!("{} piece at x = {x}, y in [{y0}, {y1}]", part.name()))
                        })?;
                    let sx = g.segments[si].path[0].x;
                    pieces.push(DensityPiece::new(si, part, vec![Point::new(sx, y0), Point::new(sx, y1)], value));
                }
            }
        }
        let mu = AdatomMeasure { pieces, atoms };
        mu.validate(g)?;
        Ok(mu)
    }

    /// Density `tilde` on every regular and jump segment and `cut` on every
    /// cut segment.
    pub fn uniform(g: &ExtendedGraph, tilde: f64, cut: f64) -> Result<Self, MeasureError> {
        let pieces = g
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| DensityPiece {
                segment: i,
                part: s.part,
                path: s.path.clone(),
                value: if s.part == Part::Cut { cut } else { tilde },
                length: s.length,
            })
            .collect();
        let mu = AdatomMeasure { pieces, atoms: Vec::new() };
        mu.validate(g)?;
        Ok(mu)
    }

    /// Assembles a measure from pieces that the caller has already placed
    /// on a graph. No validation.
    pub fn from_raw(pieces: Vec<DensityPiece>, atoms: Vec<Atom>) -> Self {
        AdatomMeasure { pieces, atoms }
    }

    /// Checks that pieces and atoms lie on `g` and that pieces are disjoint.
    pub fn validate(&self, g: &ExtendedGraph) -> Result<(), MeasureError> {
        let scale = (g.domain.1 - g.domain.0).max(g.segments.iter().map(|s| s.length).fold(1.0, f64::max));
        let tol = POS_TOL * scale;
        for p in &self.pieces {
            if !(p.value >= 0.0) || !p.value.is_finite() {
                return Err(MeasureError::NegativeDensity(p.value));
            }
            let s = g
                .segments
                .get(p.segment)
                .ok_or_else(|| MeasureError::PieceOffGraph(format!("segment {} missing", p.segment)))?;
            if s.part != p.part {
                return Err(MeasureError::PieceOffGraph(format!("part mismatch on segment {}", p.segment)));
            }
            if p.part == Part::Regular {
                let (s0, s1) = s.x_range();
                for q in &p.path {
                    if q.x < s0 - tol || q.x > s1 + tol || (geometry::eval_path(&s.path, q.x) - q.y).abs() > tol {
                        return Err(MeasureError::PieceOffGraph(format!("point ({}, {})", q.x, q.y)));
                    }
                }
            } else {
                let (x, y0, y1) = (s.path[0].x, s.path[0].y, s.path[1].y);
                for q in &p.path {
                    if (q.x - x).abs() > tol || q.y < y0 - tol || q.y > y1 + tol {
                        return Err(MeasureError::PieceOffGraph(format!("point ({}, {})", q.x, q.y)));
                    }
                }
            }
        }
        let mut by_seg: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
        for p in &self.pieces {
            by_seg.entry(p.segment).or_default().push(p.span());
        }
        for (seg, mut spans) in by_seg {
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in spans.windows(2) {
                if w[1].0 < w[0].1 - tol {
                    return Err(MeasureError::OverlappingPieces(seg));
                }
            }
        }
        for a in &self.atoms {
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(MeasureError::NonPositiveMass(a.mass));
            }
            let d = g.distance_to(a.position);
            if d > tol {
                return Err(MeasureError::AtomOffGraph { x: a.position.x, y: a.position.y, dist: d });
            }
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `μ(Γ)`.
    pub fn total_mass(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for p in &self.pieces {
            s.add(p.mass());
        }
        for a in &self.atoms {
            s.add(a.mass);
        }
        s.value()
    }

    /// `H¹` covered by pieces of one part.
    pub fn covered_length(&self, part: Part) -> f64 {
        let mut s = NeumaierSum::new();
        for p in self.pieces.iter().filter(|p| p.part == part) {
            s.add(p.length);
        }
        s.value()
    }

    /// Multiplies every density and atom mass by `f`.
    pub fn scaled(&self, f: f64) -> AdatomMeasure {
        AdatomMeasure {
            pieces: self
                .pieces
                .iter()
                .map(|p| DensityPiece { value: p.value * f, ..p.clone() })
                .collect(),
            atoms: self.atoms.iter().map(|a| Atom { mass: a.mass * f, ..*a }).collect(),
        }
    }
}

/// `μ(Γ)`.
pub fn total_mass(mu: &AdatomMeasure) -> f64 {
    mu.total_mass()
}

/// Square grid of side `cell` with lines at `offset + ℤ·cell`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cell: f64,
    pub offset: Point,
}

impl Grid {
    pub fn new(cell: f64, offset: Point) -> Result<Grid, MeasureError> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(MeasureError::InvalidCellSize(cell));
        }
        Ok(Grid { cell, offset })
    }

    pub fn col(&self, x: f64) -> i64 {
        ((x - self.offset.x) / self.cell).floor() as i64
    }

    pub fn row(&self, y: f64) -> i64 {
        ((y - self.offset.y) / self.cell).floor() as i64
    }

    pub fn cell_of(&self, p: Point) -> (i64, i64) {
        (self.col(p.x), self.row(p.y))
    }

    /// Distance from `v` to the nearest line of one family.
    fn line_dist(v: f64, off: f64, cell: f64) -> f64 {
        let t = (v - off) / cell;
        (t - t.round()).abs() * cell
    }

    pub fn x_line_dist(&self, x: f64) -> f64 {
        Self::line_dist(x, self.offset.x, self.cell)
    }

    pub fn y_line_dist(&self, y: f64) -> f64 {
        Self::line_dist(y, self.offset.y, self.cell)
    }

    /// Lines `offset + j·cell` strictly between `lo` and `hi`.
    fn lines_between(lo: f64, hi: f64, off: f64, cell: f64) -> Vec<f64> {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let j0 = ((lo - off) / cell).floor() as i64;
        let j1 = ((hi - off) / cell).ceil() as i64;
        (j0..=j1).map(|j| off + j as f64 * cell).filter(|&v| v > lo && v < hi).collect()
    }
}

/// Offsets tried by the grid searches: `k·(r/1009, r/1013)`.
fn candidate_offset(r: f64, k: usize) -> Point {
    Point::new(k as f64 * r / 1009.0, k as f64 * r / 1013.0)
}

/// Abscissae and ordinates that must stay off grid lines.
struct Critical {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Heights of horizontal polyline segments.
    flat_ys: Vec<f64>,
    /// Heights of local extrema of the arcs.
    extreme_ys: Vec<f64>,
}

fn critical_values(g: &ExtendedGraph) -> Critical {
    let (a, b) = g.domain;
    let mut c = Critical { xs: Vec::new(), ys: Vec::new(), flat_ys: Vec::new(), extreme_ys: Vec::new() };
    for s in &g.segments {
        if s.is_vertical() {
            c.xs.push(s.path[0].x);
            c.ys.push(s.path[0].y);
            c.ys.push(s.path[1].y);
            continue;
        }
        let n = s.path.len();
        for (i, p) in s.path.iter().enumerate() {
            if (i == 0 || i == n - 1) && p.x > a && p.x < b {
                c.xs.push(p.x);
                c.ys.push(p.y);
            }
        }
        for w in s.path.windows(2) {
            if w[0].y == w[1].y {
                c.flat_ys.push(w[0].y);
            }
        }
        for w in s.path.windows(3) {
            let d0 = w[1].y - w[0].y;
            let d1 = w[2].y - w[1].y;
            if d0 * d1 < 0.0 {
                c.extreme_ys.push(w[1].y);
            }
        }
    }
    c
}

fn is_degenerate(c: &Critical, grid: &Grid, tol: f64) -> bool {
    c.xs.iter().any(|&x| grid.x_line_dist(x) <= tol)
        || c.ys.iter().any(|&y| grid.y_line_dist(y) <= tol)
        || c.flat_ys.iter().any(|&y| grid.y_line_dist(y) <= tol)
}

/// First offset `k·(r/1009, r/1013)`, `k = 0, 1, ..., max_tries`, for which
/// no interior breakpoint or jump/cut endpoint lies on a grid line and no
/// horizontal polyline segment lies along one.
pub fn admissible_grid(g: &ExtendedGraph, r: f64, max_tries: usize) -> Result<Grid, MeasureError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(MeasureError::InvalidCellSize(r));
    }
    let c = critical_values(g);
    let tol = 1e-12 * r.max(1.0);
    for k in 0..=max_tries {
        let grid = Grid { cell: r, offset: candidate_offset(r, k) };
        if !is_degenerate(&c, &grid, tol) {
            return Ok(grid);
        }
    }
    Err(MeasureError::NoAdmissibleGrid(max_tries))
}

/// Admissible offset among `k = 0, ..., tries` that maximizes the smallest
/// distance from critical abscissae to vertical lines and from critical
/// ordinates (jump and cut endpoints, horizontal segments, local extrema)
/// to horizontal lines. Ties go to the smaller `k`.
pub fn clearance_grid(g: &ExtendedGraph, r: f64, tries: usize) -> Result<Grid, MeasureError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(MeasureError::InvalidCellSize(r));
    }
    let c = critical_values(g);
    let tol = 1e-12 * r.max(1.0);
    let mut best: Option<(f64, Grid)> = None;
    for k in 0..=tries {
        let grid = Grid { cell: r, offset: candidate_offset(r, k) };
        if is_degenerate(&c, &grid, tol) {
            continue;
        }
        let mut clr = f64::INFINITY;
        for &x in &c.xs {
            clr = clr.min(grid.x_line_dist(x));
        }
        for &y in c.ys.iter().chain(&c.flat_ys).chain(&c.extreme_ys) {
            clr = clr.min(grid.y_line_dist(y));
        }
        if best.is_none_or(|(b, _)| clr > b) {
            best = Some((clr, grid));
        }
    }
    best.map(|(_, g)| g).ok_or(MeasureError::NoAdmissibleGrid(tries))
}

/// Portion of one graph segment inside one grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub segment: usize,
    pub part: Part,
    pub cell: (i64, i64),
    pub path: Vec<Point>,
    pub length: f64,
}

/// Splits a polyline at its crossings with the grid lines.
pub fn split_path_by_grid(path: &[Point], grid: &Grid) -> Vec<((i64, i64), Vec<Point>)> {
    let mut out: Vec<((i64, i64), Vec<Point>)> = Vec::new();
    for w in path.windows(2) {
        let (p, q) = (w[0], w[1]);
        let mut ts = vec![0.0, 1.0];
        if q.x != p.x {
            for v in Grid::lines_between(p.x, q.x, grid.offset.x, grid.cell) {
                ts.push((v - p.x) / (q.x - p.x));
            }
        }
        if q.y != p.y {
            for v in Grid::lines_between(p.y, q.y, grid.offset.y, grid.cell) {
                ts.push((v - p.y) / (q.y - p.y));
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        for tw in ts.windows(2) {
            let a = if tw[0] == 0.0 { p } else { p.lerp(q, tw[0]) };
            let b = if tw[1] == 1.0 { q } else { p.lerp(q, tw[1]) };
            if a == b {
                continue;
            }
            let cell = grid.cell_of(a.lerp(b, 0.5));
            match out.last_mut() {
                Some((c, pts)) if *c == cell && *pts.last().unwrap() == a => pts.push(b),
                _ => out.push((cell, vec![a, b])),
            }
        }
    }
    out
}

/// All fragments of `g` with respect to `grid`, in segment order.
pub fn fragments(g: &ExtendedGraph, grid: &Grid) -> Vec<Fragment> {
    let mut out = Vec::new();
    for (si, s) in g.segments.iter().enumerate() {
        for (cell, path) in split_path_by_grid(&s.path, grid) {
            let length = geometry::path_length(&path);
            if length > 0.0 {
                out.push(Fragment { segment: si, part: s.part, cell, path, length });
            }
        }
    }
    out
}

/// Pooling class of a fragment: `Γ̃` (regular and jump) or the cut part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Tilde,
    Cut,
}

impl CellClass {
    pub fn of(part: Part) -> CellClass {
        if part == Part::Cut {
            CellClass::Cut
        } else {
            CellClass::Tilde
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellClass::Tilde => "tilde",
            CellClass::Cut => "cut",
        }
    }
}

/// Length, mass and average density of one class in one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellDensity {
    pub cell: (i64, i64),
    pub class: CellClass,
    pub length: f64,
    pub mass: f64,
    pub density: f64,
}

fn span_of_path(part: Part, path: &[Point]) -> (f64, f64) {
    if part == Part::Regular {
        (path[0].x, path.last().unwrap().x)
    } else {
        (path[0].y, path.last().unwrap().y)
    }
}

/// Mass of `mu`'s pieces on one fragment, and the common density value when
/// the fragment is covered exactly by a single piece.
fn piece_mass_on(frag: &Fragment, pieces: &[&DensityPiece]) -> (f64, Option<f64>) {
    let (f0, f1) = span_of_path(frag.part, &frag.path);
    let mut m = NeumaierSum::new();
    let mut exact = None;
    for p in pieces {
        let (p0, p1) = p.span();
        let lo = f0.max(p0);
        let hi = f1.min(p1);
        if hi <= lo {
            continue;
        }
        if lo == f0 && hi == f1 {
            m.add(p.value * frag.length);
            exact = Some(p.value);
        } else if frag.part == Part::Regular {
            let l = geometry::path_length(&geometry::clip_path(&frag.path, lo, hi));
            m.add(p.value * l);
        } else {
            m.add(p.value * (hi - lo));
        }
    }
    (m.value(), exact)
}

/// Per-cell lengths, masses and densities of `mu` on `g`, with the
/// fragments and the cell entry of each fragment.
pub fn cell_summary(
    g: &ExtendedGraph,
    mu: &AdatomMeasure,
    grid: &Grid,
) -> Result<(Vec<Fragment>, Vec<CellDensity>, Vec<usize>), MeasureError> {
    mu.validate(g)?;
    let frags = fragments(g, grid);
    let mut by_seg: BTreeMap<usize, Vec<&DensityPiece>> = BTreeMap::new();
    for p in mu.pieces() {
        by_seg.entry(p.segment).or_default().push(p);
    }
    for v in by_seg.values_mut() {
        v.sort_by(|a, b| a.span().0.total_cmp(&b.span().0));
    }
    let mut index: BTreeMap<((i64, i64), CellClass), usize> = BTreeMap::new();
    let mut cells: Vec<(CellDensity, NeumaierSum, NeumaierSum, Option<f64>, bool)> = Vec::new();
    let mut owner = Vec::with_capacity(frags.len());
    for f in &frags {
        let key = (f.cell, CellClass::of(f.part));
        let ci = *index.entry(key).or_insert_with(|| {
            cells.push((
                CellDensity { cell: f.cell, class: key.1, length: 0.0, mass: 0.0, density: 0.0 },
                NeumaierSum::new(),
                NeumaierSum::new(),
                None,
                true,
            ));
            cells.len() - 1
        });
        owner.push(ci);
        let empty = Vec::new();
        let pieces = by_seg.get(&f.segment).unwrap_or(&empty);
        let (m, exact) = piece_mass_on(f, pieces);
        let c = &mut cells[ci];
        c.1.add(f.length);
        c.2.add(m);
        match (exact, c.3) {
            (Some(v), None) if c.4 => c.3 = Some(v),
            (Some(v), Some(w)) if v == w => {}
            _ => c.4 = false,
        }
    }
    for a in mu.atoms() {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, f) in frags.iter().enumerate() {
            let d = geometry::path_distance(a.position, &f.path);
            if d < best.1 {
                best = (i, d);
            }
        }
        if best.0 == usize::MAX {
            return Err(MeasureError::AtomOffGraph { x: a.position.x, y: a.position.y, dist: f64::INFINITY });
        }
        let c = &mut cells[owner[best.0]];
        c.2.add(a.mass);
        c.4 = false;
    }
    let out = cells
        .into_iter()
        .map(|(mut cd, len, mass, uni, ok)| {
            cd.length = len.value();
            cd.mass = mass.value();
            cd.density = match (ok, uni) {
                (true, Some(v)) => v,
                _ => cd.mass / cd.length,
            };
            cd
        })
        .collect();
    Ok((frags, out, owner))
}

/// Replaces `mu` by its cell averages: on each cell, the mass on `Γ̃` (atoms
/// included) is spread uniformly over `Γ̃ ∩ Q`, and the cut mass over
/// `Γ^c ∩ Q`. The output has no atoms.
pub fn grid_constant_projection(g: &ExtendedGraph, mu: &AdatomMeasure, grid: &Grid) -> Result<AdatomMeasure, MeasureError> {
    let (frags, cells, owner) = cell_summary(g, mu, grid)?;
    let pieces = frags
        .into_iter()
        .zip(owner)
        .map(|(f, ci)| DensityPiece {
            segment: f.segment,
            part: f.part,
            path: f.path,
            value: cells[ci].density,
            length: f.length,
        })
        .collect();
    Ok(AdatomMeasure::from_raw(pieces, Vec::new()))
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub min: Point,
    pub max: Point,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Test function on the plane; monomials and trigonometric functions use
/// coordinates normalized to `[-1, 1]` over the bank's box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Monomial { px: u32, py: u32 },
    Trig { axis: Axis, cosine: bool, freq: u32 },
    Gaussian { center: Point, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionBank {
    pub bbox: Bbox,
    pub functions: Vec<TestFunction>,
}

impl TestFunctionBank {
    /// `{1, x, y, x², xy, y², sin πx, cos πx, sin πy, cos πy}` plus four
    /// Gaussian bumps of width `r/2` at the quarter points of the box.
    pub fn default_for(bbox: Bbox, r: f64) -> Self {
        let mut functions = Vec::new();
        for (px, py) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            functions.push(TestFunction::Monomial { px, py });
        }
        for axis in [Axis::X, Axis::Y] {
            for cosine in [false, true] {
                functions.push(TestFunction::Trig { axis, cosine, freq: 1 });
            }
        }
        let w = bbox.max.x - bbox.min.x;
        let h = bbox.max.y - bbox.min.y;
        for fx in [0.25, 0.75] {
            for fy in [0.25, 0.75] {
                functions.push(TestFunction::Gaussian {
                    center: Point::new(bbox.min.x + fx * w, bbox.min.y + fy * h),
                    sigma: 0.5 * r,
                });
            }
        }
        TestFunctionBank { bbox, functions }
    }

    /// Monomials of total degree `≤ order` and trigonometric functions of
    /// frequency `1..=order` in each coordinate.
    pub fn tensor(bbox: Bbox, order: u32) -> Self {
        let mut functions = Vec::new();
        for d in 0..=order {
            for px in 0..=d {
                functions.push(TestFunction::Monomial { px, py: d - px });
            }
        }
        for freq in 1..=order {
            for axis in [Axis::X, Axis::Y] {
                for cosine in [false, true] {
                    functions.push(TestFunction::Trig { axis, cosine, freq });
                }
            }
        }
        TestFunctionBank { bbox, functions }
    }

    fn normalized(&self, p: Point) -> (f64, f64) {
        let w = (self.bbox.max.x - self.bbox.min.x).max(f64::MIN_POSITIVE);
        let h = (self.bbox.max.y - self.bbox.min.y).max(f64::MIN_POSITIVE);
        (2.0 * (p.x - self.bbox.min.x) / w - 1.0, 2.0 * (p.y - self.bbox.min.y) / h - 1.0)
    }

    /// Values of every bank function at `p`, accumulated with weight `w`.
    fn accumulate(&self, p: Point, w: f64, acc: &mut [NeumaierSum]) {
        let (xh, yh) = self.normalized(p);
        for (f, a) in self.functions.iter().zip(acc.iter_mut()) {
            let v = match *f {
                TestFunction::Monomial { px, py } => xh.powi(px as i32) * yh.powi(py as i32),
                TestFunction::Trig { axis, cosine, freq } => {
                    let t = std::f64::consts::PI * freq as f64 * if axis == Axis::X { xh } else { yh };
                    if cosine {
                        t.cos()
                    } else {
                        t.sin()
                    }
                }
                TestFunction::Gaussian { center, sigma } => {
                    let d2 = (p.x - center.x).powi(2) + (p.y - center.y).powi(2);
                    (-d2 / (2.0 * sigma * sigma)).exp()
                }
            };
            a.add(w * v);
        }
    }

    /// `∫ φ dμ` for every bank function `φ`.
    pub fn integrate(&self, mu: &AdatomMeasure) -> Vec<f64> {
        let mut acc = vec![NeumaierSum::new(); self.functions.len()];
        let (gx, gw) = gauss_legendre(4);
        const PANELS: usize = 8;
        for piece in mu.pieces() {
            if piece.value == 0.0 {
                continue;
            }
            for w in piece.path.windows(2) {
                let len = w[0].dist(w[1]);
                if len == 0.0 {
                    continue;
                }
                for k in 0..PANELS {
                    let t0 = k as f64 / PANELS as f64;
                    let h = 1.0 / PANELS as f64;
                    for (xi, wi) in gx.iter().zip(gw) {
                        let t = t0 + 0.5 * h * (xi + 1.0);
                        let weight = piece.value * len * 0.5 * h * wi;
                        self.accumulate(w[0].lerp(w[1], t), weight, &mut acc);
                    }
                }
            }
        }
        for a in mu.atoms() {
            self.accumulate(a.position, a.mass, &mut acc);
        }
        acc.iter().map(NeumaierSum::value).collect()
    }
}

/// `max_φ |∫ φ dμ₁ − ∫ φ dμ₂|` over the bank.
pub fn weak_star_gap(mu1: &AdatomMeasure, mu2: &AdatomMeasure, bank: &TestFunctionBank) -> Result<f64, MeasureError> {
    if bank.functions.is_empty() {
        return Err(MeasureError::EmptyBank);
    }
    let i1 = bank.integrate(mu1);
    let i2 = bank.integrate(mu2);
    Ok(i1.iter().zip(&i2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Profile, ProfileSpec};

    fn needle() -> Profile {
        ProfileSpec::new(0.0, 1.0)
            .arc(&[(0.0, 1.0), (0.5, 1.0)])
            .arc(&[(0.5, 1.0), (1.0, 1.0)])
            .node(0.5, 1.0, 1.0, 0.0)
            .build()
            .unwrap()
    }

    #[test]
    fn mass_of_uniform_measure() {
        let g = needle().decompose();
        let mu = AdatomMeasure::uniform(&g, 1.0, 2.0).unwrap();
        assert!((mu.total_mass() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn atom_off_graph_rejected() {
        let g = Profile::flat(0.0, 1.0, 1.0).unwrap().decompose();
        let e = AdatomMeasure::new(&g, &[], vec![Atom { position: Point::new(0.5, 2.0), mass: 1.0 }]);
        assert!(matches!(e, Err(MeasureError::AtomOffGraph { .. })));
        let ok = AdatomMeasure::new(&g, &[], vec![Atom { position: Point::new(0.5, 1.0), mass: 0.5 }]).unwrap();
        assert_eq!(ok.total_mass(), 0.5);
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let g = Profile::flat(0.0, 1.0, 1.0).unwrap().decompose();
        let e = AdatomMeasure::new(
            &g,
            &[
                PieceSpec::Window { x0: 0.0, x1: 0.6, value: 1.0 },
                PieceSpec::Window { x0: 0.5, x1: 1.0, value: 1.0 },
            ],
            vec![],
        );
        assert!(matches!(e, Err(MeasureError::OverlappingPieces(_))));
        let n = needle().decompose();
        let v = AdatomMeasure::new(
            &n,
            &[PieceSpec::Vertical { part: Part::Cut, x: 0.5, y0: 0.25, y1: 0.75, value: 2.0 }],
            vec![],
        )
        .unwrap();
        assert!((v.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn admissible_grid_avoids_flat_line() {
        let g = Profile::flat(0.0, 1.0, 1.0).unwrap().decompose();
        let grid = admissible_grid(&g, 0.3, 8).unwrap();
        assert_eq!(grid.offset, Point::new(0.0, 0.0));
        let grid = admissible_grid(&g, 0.5, 8).unwrap();
        assert!(grid.y_line_dist(1.0) > 0.0);
        let n = needle().decompose();
        let grid = admissible_grid(&n, 0.5, 8).unwrap();
        assert!(grid.x_line_dist(0.5) > 0.0);
        assert!(grid.y_line_dist(0.0) > 0.0);
    }

    #[test]
    fn projection_preserves_mass_and_is_idempotent() {
        let g = needle().decompose();
        let mu = AdatomMeasure::new(
            &g,
            &[
                PieceSpec::Window { x0: 0.0, x1: 0.3, value: 3.0 },
                PieceSpec::Window { x0: 0.7, x1: 1.0, value: 0.5 },
                PieceSpec::Vertical { part: Part::Cut, x: 0.5, y0: 0.1, y1: 0.2, value: 4.0 },
            ],
            vec![Atom { position: Point::new(0.5, 0.6), mass: 0.25 }],
        )
        .unwrap();
        let grid = clearance_grid(&g, 0.25, 256).unwrap();
        let p1 = grid_constant_projection(&g, &mu, &grid).unwrap();
        assert!((p1.total_mass() - mu.total_mass()).abs() < 1e-12);
        assert!(p1.atoms().is_empty());
        let p2 = grid_constant_projection(&g, &p1, &grid).unwrap();
        assert_eq!(p1.pieces().len(), p2.pieces().len());
        for (a, b) in p1.pieces().iter().zip(p2.pieces()) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn fragments_tile_the_graph() {
        let g = needle().decompose();
        let grid = Grid::new(0.3, Point::new(0.01, 0.02)).unwrap();
        let f = fragments(&g, &grid);
        let total: f64 = f.iter().map(|f| f.length).sum();
        assert!((total - g.lengths.total()).abs() < 1e-14);
        for fr in &f {
            for w in fr.path.windows(2) {
                assert_eq!(grid.cell_of(w[0].lerp(w[1], 0.5)), fr.cell);
            }
        }
    }

    #[test]
    fn weak_star_gap_zero_for_equal_measures() {
        let g = Profile::flat(0.0, 1.0, 1.0).unwrap().decompose();
        let mu = AdatomMeasure::uniform(&g, 1.0, 0.0).unwrap();
        let bank = TestFunctionBank::default_for(
            Bbox { min: Point::new(0.0, 0.0), max: Point::new(1.0, 2.0) },
            0.25,
        );
        assert_eq!(weak_star_gap(&mu, &mu, &bank).unwrap(), 0.0);
        let i = bank.integrate(&mu);
        // ∫ 1 dμ = 1 and ∫ x̂ dμ = 0 on the centered segment
        assert!((i[0] - 1.0).abs() < 1e-14);
        assert!(i[1].abs() < 1e-14);
        let empty = TestFunctionBank { bbox: bank.bbox, functions: vec![] };
        assert!(matches!(weak_star_gap(&mu, &mu, &empty), Err(MeasureError::EmptyBank)));
    }
}
