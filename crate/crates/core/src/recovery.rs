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

//! Recovery sequences: regular configurations `(h_k, u_k)` with prescribed
//! area and mass whose unrelaxed energy converges to the relaxed energy of
//! a target `(h, μ)`.
//!
//! The pipeline for each index `k` is
//!
//! 1. grid-constant projection of the diffuse part of `μ` on cells of side `r`;
//! 2. finite-cut reduction of `h`;
//! 3. Yosida–Moreau approximation, with a linear notch in a strip around
//!    each cut, followed by an area shift;
//! 4. cell-wise transport of the densities to the approximant,
//!    with each atom put on a short sub-piece of its nearest carrier;
//! 5. density oscillation where `ψ` lies above its convex envelope;
//! 6. wriggling of every piece whose density exceeds `s₀`;
//! 7. area and mass repair.

use crate::adatom::{self, AdatomMeasure, Atom, Bbox, CellClass, DensityPiece, Grid, MeasureError, TestFunctionBank};
use crate::convergence::{self, ConvergenceError};
use crate::energy::{self, EnergyError, RegularConfiguration};
use crate::envelope::{self, EnvelopeError, EnvelopeTable, SampleGrid, SurfaceDensity};
use crate::geometry::{self, push_dedup, Point};
use crate::numeric::{self, NeumaierSum};
use crate::profile::{ExtendedGraph, Node, Part, PartLengths, Profile, ProfileError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("index k must be positive")]
    InvalidIndex,
    #[error("prescribed area {expected} differs from the profile area {actual}")]
    AreaMismatch { expected: f64, actual: f64 },
    #[error("prescribed mass {expected} differs from the measure mass {actual}")]
    MassMismatch { expected: f64, actual: f64 },
    #[error("area correction is negative ({0})")]
    NegativeCorrection(f64),
    #[error("cut strips overlap or leave the domain at k = {0}")]
    StripsOverlap(u32),
    #[error("approximant and target meet different grid cells at k = {k}: {detail}")]
    CellMismatch { k: u32, detail: String },
    #[error("wriggle ratio must be at least 1 (got {0})")]
    InvalidRatio(f64),
    #[error("no bracket for the wriggle frequency on panel {panel} (ratio {ratio})")]
    BracketNotFound { panel: usize, ratio: f64 },
    #[error("constraint repair factor {name} = {value} is outside (0, 1]")]
    ConstraintRepairFailed { name: &'static str, value: f64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
}

/// `max(h − 1/k, 0)` on an arc, with vertices added where the arc crosses
/// the level `1/k`.
fn lower_arc(arc: &[Point], d: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(arc.len());
    for (i, p) in arc.iter().enumerate() {
        if i > 0 {
            let q = arc[i - 1];
            if (q.y - d) * (p.y - d) < 0.0 {
                let t = (d - q.y) / (p.y - q.y);
                out.push(Point::new(q.x + t * (p.x - q.x), 0.0));
            }
        }
        out.push(Point::new(p.x, (p.y - d).max(0.0)));
    }
    out
}

/// Result of the finite-cut reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCuts {
    pub profile: Profile,
    pub eps_k: f64,
}

/// `g_k = min(max(h⁻ − 1/k, 0), h) + ε_k`, with `ε_k ≥ 0` restoring the area.
/// Cuts shallower than `1/k` disappear.
pub fn finite_cut_reduction(p: &Profile, k: u32, area: f64) -> Result<FiniteCuts, RecoveryError> {
    if k == 0 {
        return Err(RecoveryError::InvalidIndex);
    }
    let actual = p.area_above_zero();
    if (actual - area).abs() > 1e-12 * area.abs().max(1.0) {
        return Err(RecoveryError::AreaMismatch { expected: area, actual });
    }
    let d = 1.0 / k as f64;
    let arcs: Vec<Vec<Point>> = p.arcs().iter().map(|a| lower_arc(a, d)).collect();
    let nodes: Vec<Node> = p
        .nodes()
        .iter()
        .map(|n| Node {
            x: n.x,
            left: (n.left - d).max(0.0),
            right: (n.right - d).max(0.0),
            value: (n.lower() - d).max(0.0).min(n.value),
        })
        .collect();
    let (a, b) = p.domain();
    let hat = Profile::from_parts_unchecked(a, b, arcs, nodes);
    let eps_k = (area - hat.area_above_zero()) / (b - a);
    if eps_k < -1e-14 * area.abs().max(1.0) {
        return Err(RecoveryError::NegativeCorrection(eps_k));
    }
    let eps_k = eps_k.max(0.0);
    Ok(FiniteCuts { profile: hat.map_heights(|y| y + eps_k), eps_k })
}

/// Largest `k`-Lipschitz function below the polyline through `v` (abscissae
/// non-decreasing; repeated abscissae encode jumps). Exact.
pub fn yosida_moreau_polyline(v: &[Point], k: f64) -> Vec<Point> {
    let n = v.len();
    let mut f: Vec<f64> = v.iter().map(|p| p.y).collect();
    for i in 1..n {
        f[i] = f[i].min(f[i - 1] + k * (v[i].x - v[i - 1].x));
    }
    for i in (0..n - 1).rev() {
        f[i] = f[i].min(f[i + 1] + k * (v[i + 1].x - v[i].x));
    }
    let mut out: Vec<Point> = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let (x0, x1) = (v[i].x, v[i + 1].x);
        if x1 == x0 {
            continue;
        }
        let dx = x1 - x0;
        // lines c + s (x − x0)
        let mut lines = vec![(f[i], k), (f[i + 1] + k * dx, -k)];
        let s = (v[i + 1].y - v[i].y) / dx;
        if s.abs() <= k {
            lines.push((v[i].y, s));
        }
        let mut ts = vec![0.0, dx];
        // kinks within round-off of an end would leave a spurious steep piece
        let tol = 1e-12 * (1.0 + x0.abs().max(x1.abs()));
        for a in 0..lines.len() {
            for b in a + 1..lines.len() {
                let (ca, sa) = lines[a];
                let (cb, sb) = lines[b];
                if sa != sb {
                    let t = (cb - ca) / (sa - sb);
                    let on_min = lines.iter().all(|(c, s)| ca + sa * t <= c + s * t + 1e-14 * (1.0 + c.abs()));
                    if t > tol && t < dx - tol && on_min {
                        ts.push(t);
                    }
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let m = ts.len();
        for (j, &t) in ts.iter().enumerate() {
            let y = if j == 0 {
                f[i]
            } else if j == m - 1 {
                f[i + 1]
            } else {
                lines.iter().map(|(c, s)| c + s * t).fold(f64::INFINITY, f64::min)
            };
            let x = if j == m - 1 { x1 } else { x0 + t };
            push_dedup(&mut out, Point::new(x, y));
        }
    }
    // drop vertices that are collinear with their neighbours
    let mut clean: Vec<Point> = Vec::with_capacity(out.len());
    for p in out {
        while clean.len() >= 2 {
            let q = clean[clean.len() - 1];
            let o = clean[clean.len() - 2];
            let cross = (q.x - o.x) * (p.y - o.y) - (q.y - o.y) * (p.x - o.x);
            if cross == 0.0 {
                clean.pop();
            } else {
                break;
            }
        }
        clean.push(p);
    }
    clean
}

/// Notch around a cut of the approximant: the approximant is linear on
/// `[c − w, c]` and `[c, c + w]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub c: f64,
    pub half_width: f64,
    pub bottom: f64,
    pub left_top: f64,
    pub right_top: f64,
}

impl Strip {
    fn map_heights<F: Fn(f64) -> f64>(&self, f: F) -> Strip {
        Strip { bottom: f(self.bottom), left_top: f(self.left_top), right_top: f(self.right_top), ..*self }
    }
}

/// Lipschitz approximant and the strips where it replaces cuts.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzApprox {
    pub profile: Profile,
    pub strips: Vec<Strip>,
}

/// Yosida–Moreau transform at slope `k` on each interval between cuts,
/// joined by linear notches reaching down to the cut bottoms over strips
/// of half-width `ε₀/k`. Here `ε₀` is the smallest distance between cuts
/// and from a cut to the domain ends.
pub fn lipschitz_approximation(p: &Profile, k: u32) -> Result<LipschitzApprox, RecoveryError> {
    if k == 0 {
        return Err(RecoveryError::InvalidIndex);
    }
    let kf = k as f64;
    let (a, b) = p.domain();
    let cut_idx: Vec<usize> = (0..p.nodes().len()).filter(|&i| p.nodes()[i].is_cut()).collect();
    // groups of arcs between consecutive cuts
    let mut groups: Vec<Vec<Point>> = vec![Vec::new()];
    for (i, arc) in p.arcs().iter().enumerate() {
        if i > 0 && cut_idx.contains(&(i - 1)) {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().extend_from_slice(arc);
    }
    let sides: Vec<Vec<Point>> = groups.iter().map(|g| yosida_moreau_polyline(g, kf)).collect();
    if cut_idx.is_empty() {
        let profile = Profile::polyline(sides.into_iter().next().unwrap())?;
        return Ok(LipschitzApprox { profile, strips: Vec::new() });
    }
    let cs: Vec<f64> = cut_idx.iter().map(|&i| p.nodes()[i].x).collect();
    let mut eps0 = (cs[0] - a).min(b - cs[cs.len() - 1]);
    for w in cs.windows(2) {
        eps0 = eps0.min(w[1] - w[0]);
    }
    let w = eps0 / kf;
    if 2.0 * w > eps0 && cs.len() > 1 || w > cs[0] - a || w > b - cs[cs.len() - 1] {
        return Err(RecoveryError::StripsOverlap(k));
    }
    let mut pts: Vec<Point> = Vec::new();
    let mut strips = Vec::new();
    for (s, side) in sides.iter().enumerate() {
        let lo = if s == 0 { a } else { cs[s - 1] + w };
        let hi = if s == cs.len() { b } else { cs[s] - w };
        if hi > lo {
            for q in geometry::clip_path(side, lo, hi) {
                push_dedup(&mut pts, q);
            }
        } else {
            push_dedup(&mut pts, Point::new(lo, geometry::eval_path(side, lo)));
        }
        if s < cs.len() {
            let c = cs[s];
            let bottom = p.nodes()[cut_idx[s]].value;
            push_dedup(&mut pts, Point::new(c, bottom));
            strips.push(Strip {
                c,
                half_width: w,
                bottom,
                left_top: geometry::eval_path(side, c - w),
                right_top: geometry::eval_path(&sides[s + 1], c + w),
            });
        }
    }
    Ok(LipschitzApprox { profile: Profile::polyline(pts)?, strips })
}

impl LipschitzApprox {
    /// Adds a constant `ε ≥ 0` (or scales by `M / area` when `ε` would be
    /// negative) so that the area equals `area`. Returns the shift, or the
    /// negative scale factor minus one when scaling was used.
    fn fix_area(&mut self, area: f64) -> f64 {
        let (a, b) = self.profile.domain();
        let cur = self.profile.area_above_zero();
        let eps = (area - cur) / (b - a);
        if eps >= 0.0 {
            self.profile = self.profile.map_heights(|y| y + eps);
            self.strips = self.strips.iter().map(|s| s.map_heights(|y| y + eps)).collect();
            eps
        } else {
            let g = area / cur;
            self.profile = self.profile.map_heights(|y| y * g);
            self.strips = self.strips.iter().map(|s| s.map_heights(|y| y * g)).collect();
            g - 1.0
        }
    }
}

/// Per-panel data of a wriggle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WrigglePanel {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub amplitude: f64,
    pub ramp: f64,
    pub samples: usize,
}

const MAX_WRIGGLE_SAMPLES: usize = 4_000_000;
const SAMPLES_PER_HALF_PERIOD: usize = 32;

struct PanelProblem<'a> {
    base: &'a [Point],
    p: f64,
    q: f64,
    amp: f64,
    ramp: f64,
}

impl PanelProblem<'_> {
    fn eta(&self, x: f64) -> f64 {
        if x <= self.p || x >= self.q {
            0.0
        } else if x < self.p + self.ramp {
            (x - self.p) / self.ramp
        } else if x > self.q - self.ramp {
            (self.q - x) / self.ramp
        } else {
            1.0
        }
    }

    /// Abscissae resolving the oscillation at frequency `t`.
    fn abscissae(&self, t: f64) -> Option<Vec<f64>> {
        let w = self.q - self.p;
        let half = std::f64::consts::PI / t;
        let n = ((w / half).ceil() as usize).max(1).checked_mul(SAMPLES_PER_HALF_PERIOD)?;
        if n > MAX_WRIGGLE_SAMPLES {
            return None;
        }
        let mut xs: Vec<f64> = Vec::with_capacity(n + self.base.len() + 4);
        let step = half / SAMPLES_PER_HALF_PERIOD as f64;
        for i in 0..=n {
            let x = self.p + i as f64 * step;
            if x >= self.q {
                break;
            }
            xs.push(x);
        }
        xs.push(self.q);
        xs.push(self.p + self.ramp);
        xs.push(self.q - self.ramp);
        xs.extend(self.base.iter().map(|b| b.x));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        Some(xs)
    }

    fn y(&self, x: f64, t: f64) -> f64 {
        let base = geometry::eval_path(self.base, x);
        let eta = self.eta(x);
        if eta == 0.0 {
            return base;
        }
        base + (2.0 * self.amp - self.amp * (t * (x - self.p)).sin().abs()) * eta
    }

    fn length(&self, xs: &[f64], t: f64) -> f64 {
        let mut s = NeumaierSum::new();
        let mut prev = Point::new(xs[0], self.y(xs[0], t));
        for &x in &xs[1..] {
            let cur = Point::new(x, self.y(x, t));
            s.add(prev.dist(cur));
            prev = cur;
        }
        s.value()
    }

    fn path(&self, xs: &[f64], t: f64) -> Vec<Point> {
        xs.iter().map(|&x| Point::new(x, self.y(x, t))).collect()
    }
}

/// Wriggles a graph polyline over `panels` equal panels so that its length
/// becomes `r` times the original, keeping the endpoints. On each panel
/// `[p, q]` the new graph is `h + A (2 − |sin(t(x − p))|) η` with `η` a
/// trapezoid of ramp width `min((q − p)/3, √A)`; `t` solves the length
/// equation for the sampled polyline. The amplitude is capped at an eighth
/// of the extra length so that `t = 0` stays below the target.
pub fn wriggle_path(
    base: &[Point],
    r: f64,
    panels: usize,
    amplitude: f64,
) -> Result<(Vec<Point>, Vec<WrigglePanel>), RecoveryError> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(RecoveryError::InvalidRatio(r));
    }
    let (alpha, beta) = (base[0].x, base.last().unwrap().x);
    let panels = panels.max(1);
    let mut out: Vec<Point> = Vec::new();
    let mut info = Vec::with_capacity(panels);
    for j in 0..panels {
        let p = alpha + (beta - alpha) * j as f64 / panels as f64;
        let q = if j + 1 == panels { beta } else { alpha + (beta - alpha) * (j + 1) as f64 / panels as f64 };
        let sub = geometry::clip_path(base, p, q);
        if r == 1.0 || q <= p {
            for pt in sub {
                push_dedup(&mut out, pt);
            }
            info.push(WrigglePanel { p, q, t: 0.0, amplitude: 0.0, ramp: 0.0, samples: 0 });
            continue;
        }
        let target = r * geometry::path_length(&sub);
        let w = q - p;
        let amp = amplitude.min((target - geometry::path_length(&sub)) / 8.0);
        let pb = PanelProblem { base: &sub, p, q, amp, ramp: (w / 3.0).min(amp.sqrt()) };
        let mut found = None;
        let mut lo = 0.0;
        let mut hi = std::f64::consts::PI / w;
        for _ in 0..=60 {
            let xs = match pb.abscissae(hi) {
                Some(xs) => xs,
                None => break,
            };
            let flo = pb.length(&xs, lo) - target;
            let fhi = pb.length(&xs, hi) - target;
            if flo < 0.0 && fhi >= 0.0 {
                found = Some((lo, hi, xs));
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        let (lo, hi, xs) = found.ok_or(RecoveryError::BracketNotFound { panel: j, ratio: r })?;
        let t = numeric::bisect(|t| pb.length(&xs, t) - target, lo, hi, 1e-15);
        for pt in pb.path(&xs, t) {
            push_dedup(&mut out, pt);
        }
        info.push(WrigglePanel { p, q, t, amplitude: amp, ramp: pb.ramp, samples: xs.len() });
    }
    Ok((out, info))
}

/// Wriggled profile with its per-panel data.
#[derive(Clone, Debug, PartialEq)]
pub struct Wriggled {
    pub profile: Profile,
    pub panels: Vec<WrigglePanel>,
}

/// Wriggles a Lipschitz profile on `k` panels with amplitude at most `1/k²`, so that
/// `H¹(graph h_k) = r H¹(graph h)`, `h_k ≥ h` and `sup |h_k − h| ≤ 2/k²`.
pub fn wriggle(p: &Profile, r: f64, k: u32) -> Result<Wriggled, RecoveryError> {
    if k == 0 {
        return Err(RecoveryError::InvalidIndex);
    }
    let base = p.polyline_points()?;
    let kk = (k as f64) * (k as f64);
    let (path, panels) = wriggle_path(&base, r, k as usize, 1.0 / kk)?;
    Ok(Wriggled { profile: Profile::polyline(path)?, panels })
}

/// Role of a piece of the approximant in the transport.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Carrier {
    /// Approximates `Γ̃`.
    Regular,
    /// Left flank of the notch of strip `i`.
    CutLeft(usize),
    /// Right flank of the notch of strip `i`.
    CutRight(usize),
}

/// Splits the approximant into labelled sub-paths, cut along the grid.
fn carriers(approx: &[Point], strips: &[Strip], grid: &Grid) -> Vec<(Carrier, (i64, i64), Vec<Point>)> {
    let (a, b) = (approx[0].x, approx.last().unwrap().x);
    let mut marks: Vec<(f64, Carrier)> = vec![(a, Carrier::Regular)];
    for (i, s) in strips.iter().enumerate() {
        let split = s.left_top.min(s.right_top);
        let l0 = s.c - s.half_width;
        let r1 = s.c + s.half_width;
        if s.left_top > split && s.left_top > s.bottom {
            let x = l0 + (s.left_top - split) / (s.left_top - s.bottom) * s.half_width;
            marks.push((l0, Carrier::Regular));
            marks.push((x, Carrier::CutLeft(i)));
        } else {
            marks.push((l0, Carrier::CutLeft(i)));
        }
        marks.push((s.c, Carrier::CutRight(i)));
        if s.right_top > split && s.right_top > s.bottom {
            let x = s.c + (split - s.bottom) / (s.right_top - s.bottom) * s.half_width;
            marks.push((x, Carrier::Regular));
        }
        marks.push((r1, Carrier::Regular));
    }
    marks.push((b, Carrier::Regular));
    let mut out = Vec::new();
    for w in marks.windows(2) {
        let (x0, lab) = w[0];
        let x1 = w[1].0;
        if x1 <= x0 {
            continue;
        }
        let sub = geometry::clip_path(approx, x0, x1);
        for (cell, path) in adatom::split_path_by_grid(&sub, grid) {
            out.push((lab, cell, path));
        }
    }
    out
}

/// Transported density on the approximant.
#[derive(Clone, Debug, PartialEq)]
pub struct Transport {
    pub measure: AdatomMeasure,
    pub labels: Vec<Carrier>,
    /// Per piece, the ratio by which its carrier is shorter than the part of
    /// the target graph it stands for (at least 1).
    pub stretch: Vec<f64>,
    /// Uniform correction added to the densities (or, when negative
    /// densities would result, `factor − 1` of a multiplicative one).
    pub r_k: f64,
    pub multiplicative: bool,
}

/// Lengths and densities of `mu` along one fragment, in order, with the
/// uncovered stretches as zero-density chunks.
fn fragment_chunks(frag: &adatom::Fragment, pieces: &[&DensityPiece]) -> Vec<(f64, f64)> {
    let vertical = frag.part != Part::Regular;
    let coord = |q: &Point| if vertical { q.y } else { q.x };
    let (f0, f1) = {
        let (a, b) = (coord(&frag.path[0]), coord(frag.path.last().unwrap()));
        (a.min(b), a.max(b))
    };
    let measure = |lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            0.0
        } else if lo == f0 && hi == f1 {
            frag.length
        } else if vertical {
            hi - lo
        } else {
            geometry::path_length(&geometry::clip_path(&frag.path, lo, hi))
        }
    };
    let mut spans: Vec<(f64, f64, f64)> = pieces
        .iter()
        .filter_map(|p| {
            let (a, b) = p.span();
            let (lo, hi) = (f0.max(a.min(b)), f1.min(a.max(b)));
            (hi > lo).then_some((lo, hi, p.value))
        })
        .collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(2 * spans.len() + 1);
    let mut at = f0;
    for (lo, hi, v) in spans {
        if lo > at {
            out.push((measure(at, lo), 0.0));
        }
        out.push((measure(lo.max(at), hi), v));
        at = at.max(hi);
    }
    if f1 > at {
        out.push((measure(at, f1), 0.0));
    }
    if coord(&frag.path[0]) > coord(frag.path.last().unwrap()) {
        out.reverse();
    }
    out.retain(|c| c.0 > 0.0);
    out
}

/// Moves the diffuse part of `mu` on the target graph to the approximant,
/// cell by cell. The chunks of `Γ̃ ∩ Q` with their densities are laid out
/// along the regular carriers in `Q`, each on a share of arclength equal to
/// its share of target length; cut densities are split by
/// [`envelope::cut_split`] between the two flanks of the notch. Chunks whose
/// carrier is missing in a cell fall back to the other carriers of that
/// cell.
pub fn transport_density(
    target: &ExtendedGraph,
    diffuse: &AdatomMeasure,
    approx: &LipschitzApprox,
    grid: &Grid,
    mass: f64,
    env: &EnvelopeTable,
    k: u32,
) -> Result<Transport, RecoveryError> {
    diffuse.validate(target)?;
    let frags = adatom::fragments(target, grid);
    let path = approx.profile.polyline_points()?;
    let carr = carriers(&path, &approx.strips, grid);

    let tcells: std::collections::BTreeSet<(i64, i64)> = frags.iter().map(|f| f.cell).collect();
    let acells: std::collections::BTreeSet<(i64, i64)> =
        carr.iter().filter(|c| geometry::path_length(&c.2) > 0.0).map(|c| c.1).collect();
    if tcells != acells {
        let only_t: Vec<_> = tcells.difference(&acells).take(4).collect();
        let only_a: Vec<_> = acells.difference(&tcells).take(4).collect();
        return Err(RecoveryError::CellMismatch {
            k,
            detail: format!("target only {only_t:?}, approximant only {only_a:?}"),
        });
    }

    let mut by_seg: BTreeMap<usize, Vec<&DensityPiece>> = BTreeMap::new();
    for p in diffuse.pieces() {
        by_seg.entry(p.segment).or_default().push(p);
    }
    // (cell, carrier) -> ordered (target length, density) chunks
    let mut want: BTreeMap<((i64, i64), Carrier), Vec<(f64, f64)>> = BTreeMap::new();
    let mut have: BTreeMap<((i64, i64), Carrier), f64> = BTreeMap::new();
    for (lab, cell, p) in &carr {
        *have.entry((*cell, *lab)).or_default() += geometry::path_length(p);
    }
    let strip_of = |x: f64| approx.strips.iter().position(|s| (s.c - x).abs() <= 1e-12 * (1.0 + x.abs()));
    let empty = Vec::new();
    for f in &frags {
        let chunks = fragment_chunks(f, by_seg.get(&f.segment).unwrap_or(&empty));
        let strip = if CellClass::of(f.part) == CellClass::Cut { strip_of(f.path[0].x) } else { None };
        match strip {
            Some(si) => {
                for (l, u) in chunks {
                    let (da, db) = envelope::cut_split(u, env)?;
                    want.entry((f.cell, Carrier::CutLeft(si))).or_default().push((l, da));
                    want.entry((f.cell, Carrier::CutRight(si))).or_default().push((l, db));
                }
            }
            None => want.entry((f.cell, Carrier::Regular)).or_default().extend(chunks),
        }
    }
    // reroute chunks whose carrier is absent in their cell
    let keys: Vec<_> = want.keys().copied().collect();
    for key in keys {
        if have.get(&key).copied().unwrap_or(0.0) > 0.0 {
            continue;
        }
        let chunks = want.remove(&key).unwrap();
        if chunks.is_empty() {
            continue;
        }
        let cell = key.0;
        let alts: Vec<((i64, i64), Carrier)> = {
            let reg = (cell, Carrier::Regular);
            if key.1 != Carrier::Regular && have.get(&reg).copied().unwrap_or(0.0) > 0.0 {
                vec![reg]
            } else {
                have.iter().filter(|(k2, l)| k2.0 == cell && **l > 0.0).map(|(k2, _)| *k2).collect()
            }
        };
        let total: f64 = alts.iter().map(|k2| have[k2]).sum();
        if alts.is_empty() || total <= 0.0 {
            let m: f64 = chunks.iter().map(|c| c.0 * c.1).sum();
            return Err(RecoveryError::CellMismatch { k, detail: format!("no carrier for mass {m} in cell {cell:?}") });
        }
        for k2 in alts {
            let share = have[&k2] / total;
            want.entry(k2).or_default().extend(chunks.iter().map(|&(l, u)| (l * share, u)));
        }
    }
    // merge neighbouring chunks of equal density
    for chunks in want.values_mut() {
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(chunks.len());
        for &(l, u) in chunks.iter() {
            match merged.last_mut() {
                Some(last) if last.1 == u => last.0 += l,
                _ => merged.push((l, u)),
            }
        }
        *chunks = merged;
    }

    let mut pieces = Vec::with_capacity(carr.len());
    let mut labels = Vec::with_capacity(carr.len());
    let mut stretch = Vec::with_capacity(carr.len());
    // arclength already used on each key's carriers
    let mut used: BTreeMap<((i64, i64), Carrier), f64> = BTreeMap::new();
    for (lab, cell, p) in carr {
        let key = (cell, lab);
        let total = have[&key];
        let len = geometry::path_length(&p);
        let chunks = want.get(&key).map(Vec::as_slice).unwrap_or(&[]);
        let span: f64 = chunks.iter().map(|c| c.0).sum();
        if total <= 0.0 || len <= 0.0 || span <= 0.0 {
            stretch.push(1.0);
            pieces.push(DensityPiece::new(0, Part::Regular, p, 0.0));
            labels.push(lab);
            continue;
        }
        let scale = total / span;
        let s = (span / total).max(1.0);
        let start = *used.get(&key).unwrap_or(&0.0);
        used.insert(key, start + len);
        // chunk boundaries in this sub-path's arclength, with their densities
        let tol = 1e-12 * total;
        let mut cuts = Vec::new();
        let mut vals = Vec::new();
        let mut acc = 0.0;
        for &(l, u) in chunks {
            let (c0, c1) = (acc * scale - start, (acc + l) * scale - start);
            acc += l;
            if c1 <= tol || c0 >= len - tol {
                continue;
            }
            if c0 > tol {
                cuts.push(c0);
            }
            vals.push(u * span / total);
        }
        if vals.is_empty() {
            vals.push(chunks.last().unwrap().1 * span / total);
        }
        let parts = split_by_arclength(&p, &cuts);
        for (sub, &v) in parts.into_iter().zip(vals.iter().chain(std::iter::repeat(vals.last().unwrap()))) {
            stretch.push(s);
            pieces.push(DensityPiece::new(0, Part::Regular, sub, v));
            labels.push(lab);
        }
    }
    let now = NeumaierSum::from_iter(pieces.iter().map(|p| p.mass())).value();
    let total_len = NeumaierSum::from_iter(pieces.iter().map(|p| p.length)).value();
    let mut r_k = (mass - now) / total_len;
    let mut multiplicative = false;
    let min_u = pieces.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    if min_u + r_k >= 0.0 {
        for p in &mut pieces {
            p.value += r_k;
        }
    } else {
        let f = mass / now;
        for p in &mut pieces {
            p.value *= f;
        }
        r_k = f - 1.0;
        multiplicative = true;
    }
    Ok(Transport { measure: AdatomMeasure::from_raw(pieces, Vec::new()), labels, stretch, r_k, multiplicative })
}

/// Splits a polyline at the given cumulative arclengths (increasing, within
/// `(0, length)`).
fn split_by_arclength(path: &[Point], cuts: &[f64]) -> Vec<Vec<Point>> {
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut cur = vec![path[0]];
    let mut acc = 0.0;
    let mut ci = 0;
    for w in path.windows(2) {
        let seg = w[0].dist(w[1]);
        while ci < cuts.len() && cuts[ci] < acc + seg {
            let t = ((cuts[ci] - acc) / seg).clamp(0.0, 1.0);
            let p = w[0].lerp(w[1], t);
            push_dedup(&mut cur, p);
            if cur.len() >= 2 {
                out.push(std::mem::replace(&mut cur, vec![p]));
            } else {
                cur = vec![p];
            }
            ci += 1;
        }
        acc += seg;
        push_dedup(&mut cur, w[1]);
    }
    if cur.len() >= 2 {
        out.push(cur);
    } else if let Some(last) = out.last_mut() {
        push_dedup(last, cur[0]);
    }
    out
}

/// Replaces a density `u` where `ψ(u) > ψ^cvx(u)` by `k` alternating pairs of
/// the chord endpoints `s_lo`, `s_hi` with the same mass.
fn oscillate(pieces: Vec<DensityPiece>, env: &EnvelopeTable, k: u32) -> (Vec<DensityPiece>, usize) {
    let mut out = Vec::with_capacity(pieces.len());
    let mut count = 0;
    for p in pieces {
        let br = if p.length > 0.0 { env.contact_bracket(p.value) } else { None };
        let Some((lo, hi)) = br else {
            out.push(p);
            continue;
        };
        count += 1;
        let lam = (hi - p.value) / (hi - lo);
        let cell = p.length / k as f64;
        let mut cuts = Vec::with_capacity(2 * k as usize);
        for j in 0..k {
            let s = j as f64 * cell;
            if j > 0 {
                cuts.push(s);
            }
            cuts.push(s + lam * cell);
        }
        cuts.retain(|&c| c > 0.0 && c < p.length);
        for (i, sub) in split_by_arclength(&p.path, &cuts).into_iter().enumerate() {
            let v = if i % 2 == 0 { lo } else { hi };
            out.push(DensityPiece::new(p.segment, p.part, sub, v));
        }
    }
    (out, count)
}

/// Arclength span (relative to the domain width) of the sub-piece that
/// carries an atom.
const ATOM_SPAN: f64 = 1e-9;

/// Puts each atom on a short sub-piece of the carrier closest to it. The
/// sub-piece keeps its own mass and takes the atom's; the returned flags
/// mark these sub-pieces.
fn place_atoms(
    mut pieces: Vec<DensityPiece>,
    mut stretch: Vec<f64>,
    atoms: &[Atom],
    span: f64,
) -> (Vec<DensityPiece>, Vec<f64>, Vec<bool>) {
    let mut is_atom = vec![false; pieces.len()];
    for atom in atoms {
        // nearest point over all pieces: (piece, arclength, distance)
        let mut best = (usize::MAX, 0.0, f64::INFINITY);
        for (i, p) in pieces.iter().enumerate() {
            if is_atom[i] {
                continue;
            }
            let mut acc = 0.0;
            for w in p.path.windows(2) {
                let seg = w[0].dist(w[1]);
                let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
                let t = if seg > 0.0 {
                    (((atom.position.x - w[0].x) * dx + (atom.position.y - w[0].y) * dy) / (seg * seg)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let d = atom.position.dist(w[0].lerp(w[1], t));
                if d < best.2 {
                    best = (i, acc + t * seg, d);
                }
                acc += seg;
            }
        }
        let (i, at, _) = best;
        if i == usize::MAX {
            continue;
        }
        let p = pieces[i].clone();
        let half = 0.5 * span.min(p.length);
        let lo = (at - half).clamp(0.0, p.length - 2.0 * half);
        let hi = lo + 2.0 * half;
        let cuts: Vec<f64> = [lo, hi].into_iter().filter(|&c| c > 0.0 && c < p.length).collect();
        let parts = split_by_arclength(&p.path, &cuts);
        let mid = if lo > 0.0 { 1 } else { 0 };
        let mut new_pieces = Vec::with_capacity(parts.len());
        for (j, sub) in parts.into_iter().enumerate() {
            let mut q = DensityPiece::new(p.segment, p.part, sub, p.value);
            if j == mid {
                q.value = (p.value * q.length + atom.mass) / q.length;
            }
            new_pieces.push(q);
        }
        let n = new_pieces.len();
        pieces.splice(i..=i, new_pieces);
        let s = stretch[i];
        stretch.splice(i..=i, std::iter::repeat_n(s, n));
        is_atom.splice(i..=i, (0..n).map(|j| j == mid));
    }
    (pieces, stretch, is_atom)
}

/// Pipeline stage at which a snapshot is recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GridConstant,
    FiniteCuts,
    LipschitzApprox,
    Wriggled,
    Oscillated,
    ConstraintFixed,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GridConstant => "grid-constant",
            Stage::FiniteCuts => "finite-cuts",
            Stage::LipschitzApprox => "lipschitz-approx",
            Stage::Oscillated => "oscillated",
            Stage::Wriggled => "wriggled",
            Stage::ConstraintFixed => "constraint-fixed",
        }
    }
}

/// Snapshot of one stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: u32,
    pub stage: Stage,
    pub area: f64,
    pub mass: Option<f64>,
    pub lengths: (f64, f64, f64),
    /// `∫ ψ(u)` for regular stages.
    pub f_surface: Option<f64>,
    pub f_bulk: Option<f64>,
    /// Relaxed surface energy of the stage.
    pub g_surface: Option<f64>,
    pub hausdorff_gap: Option<f64>,
    pub weakstar_gap: Option<f64>,
}

/// Scalars produced along the way.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bookkeeping {
    pub eps_k: f64,
    pub area_shift: f64,
    pub r_k: f64,
    /// Downward shift of the area repair (0 when scaling was used).
    pub final_shift: f64,
    pub gamma: f64,
    pub t: f64,
    pub oscillated: usize,
    pub wriggled: usize,
    pub wriggle_fallbacks: usize,
}

/// One element of a recovery sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Recovered {
    pub k: u32,
    /// Index actually used after refinement on cell mismatch.
    pub k_effective: u32,
    pub config: RegularConfiguration,
    pub grid: Grid,
    pub stages: Vec<StageRecord>,
    pub book: Bookkeeping,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    /// Cell side `r` of the projection grid.
    pub cell: f64,
    pub grid_tries: usize,
    /// Doublings of `k` tried when the approximant misses target cells.
    pub max_refinements: u32,
    pub oscillate: bool,
    pub parallel: bool,
    /// Raster size for per-stage Hausdorff gaps; `None` skips the gaps.
    pub diagnostics: Option<usize>,
    pub envelope_grid: SampleGrid,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            cell: 0.25,
            grid_tries: 1024,
            max_refinements: 3,
            oscillate: true,
            parallel: true,
            diagnostics: None,
            envelope_grid: SampleGrid::default(),
        }
    }
}

struct Context<'a> {
    target: &'a Profile,
    graph: ExtendedGraph,
    /// Grid-constant projection of the diffuse part, with the atoms of the
    /// target added back.
    projected_atoms: AdatomMeasure,
    /// The diffuse part of the target measure.
    diffuse: AdatomMeasure,
    atom_mass: f64,
    measure: &'a AdatomMeasure,
    mass: f64,
    area: f64,
    env: EnvelopeTable,
    psi: &'a SurfaceDensity,
    grid: Grid,
    opts: &'a RecoveryOptions,
    bbox: Bbox,
    bank: TestFunctionBank,
}

impl Context<'_> {
    fn record(
        &self,
        k: u32,
        stage: Stage,
        p: &Profile,
        mu: Option<(&ExtendedGraph, &AdatomMeasure)>,
        regular: bool,
    ) -> Result<StageRecord, RecoveryError> {
        let l: PartLengths = p.decompose().lengths;
        let mut rec = StageRecord {
            k,
            stage,
            area: p.area_above_zero(),
            mass: None,
            lengths: (l.regular, l.jump, l.cut),
            f_surface: None,
            f_bulk: None,
            g_surface: None,
            hausdorff_gap: None,
            weakstar_gap: None,
        };
        if let Some((g, mu)) = mu {
            rec.mass = Some(mu.total_mass());
            rec.g_surface = Some(energy::surface_energy_relaxed(g, mu, &self.env)?.total);
            if regular {
                let s: f64 = NeumaierSum::from_iter(mu.pieces().iter().map(|q| self.psi.eval(q.value) * q.length)).value();
                let uncovered = (g.lengths.regular - mu.covered_length(Part::Regular)).max(0.0);
                rec.f_surface = Some(s + self.psi.eval(0.0) * uncovered);
            }
            if self.opts.diagnostics.is_some() {
                rec.weakstar_gap = Some(adatom::weak_star_gap(mu, self.measure, &self.bank)?);
            }
        }
        if let Some(n) = self.opts.diagnostics {
            rec.hausdorff_gap = Some(convergence::hausdorff_complement_distance(p, self.target, &self.bbox, n)?.value);
        }
        Ok(rec)
    }

    fn run(&self, k: u32) -> Result<Recovered, RecoveryError> {
        let mut stages = Vec::new();
        let mut book = Bookkeeping::default();
        stages.push(self.record(k, Stage::GridConstant, self.target, Some((&self.graph, &self.projected_atoms)), false)?);

        let fc = finite_cut_reduction(self.target, k, self.area)?;
        book.eps_k = fc.eps_k;
        stages.push(self.record(k, Stage::FiniteCuts, &fc.profile, None, false)?);

        let mut la = lipschitz_approximation(&fc.profile, k)?;
        book.area_shift = la.fix_area(self.area);
        let diffuse_mass = self.mass - self.atom_mass;
        let tr = transport_density(&self.graph, &self.diffuse, &la, &self.grid, diffuse_mass, &self.env, k)?;
        book.r_k = tr.r_k;
        let (a, b) = self.target.domain();
        let (placed, stretch, is_atom) =
            place_atoms(tr.measure.pieces().to_vec(), tr.stretch.clone(), self.measure.atoms(), ATOM_SPAN * (b - a));
        let ag = la.profile.decompose();
        let placed_mu = AdatomMeasure::from_raw(placed.clone(), Vec::new());
        stages.push(self.record(k, Stage::LipschitzApprox, &la.profile, Some((&ag, &placed_mu)), true)?);

        let s0 = self.env.threshold_s0();
        let amp = 1.0 / ((k as f64) * (k as f64));
        let mut pieces: Vec<DensityPiece> = Vec::with_capacity(placed.len());
        for ((piece, &stretch), &atom) in placed.iter().zip(&stretch).zip(&is_atom) {
            let stretch = if atom { 1.0 } else { stretch };
            let u = piece.value / stretch;
            let r = if s0.is_finite() && u > s0 * (1.0 + 1e-9) { stretch * u / s0 } else { stretch };
            if r <= 1.0 + 1e-9 || piece.length == 0.0 {
                pieces.push(piece.clone());
                continue;
            }
            let width = piece.path.last().unwrap().x - piece.path[0].x;
            let n = if atom { 1 } else { ((k as f64 * width / (b - a)).round() as usize).clamp(1, k as usize) };
            match wriggle_path(&piece.path, r, n, amp) {
                Ok((path, _)) => {
                    let w = DensityPiece::new(0, Part::Regular, path, 0.0);
                    let value = piece.mass() / w.length;
                    pieces.push(DensityPiece { value, ..w });
                    book.wriggled += 1;
                }
                Err(RecoveryError::BracketNotFound { .. }) => {
                    pieces.push(piece.clone());
                    book.wriggle_fallbacks += 1;
                }
                Err(e) => return Err(e),
            }
        }
        let mut hbar: Vec<Point> = Vec::new();
        for p in &pieces {
            for q in &p.path {
                push_dedup(&mut hbar, *q);
            }
        }
        let hbar_profile = Profile::polyline(hbar.clone())?;
        if book.wriggled > 0 {
            let g = hbar_profile.decompose();
            let mu = AdatomMeasure::from_raw(pieces.clone(), Vec::new());
            stages.push(self.record(k, Stage::Wriggled, &hbar_profile, Some((&g, &mu)), true)?);
        }

        if self.opts.oscillate {
            let (p2, n) = oscillate(pieces, &self.env, k);
            pieces = p2;
            book.oscillated = n;
            if n > 0 {
                let g = hbar_profile.decompose();
                let mu = AdatomMeasure::from_raw(pieces.clone(), Vec::new());
                stages.push(self.record(k, Stage::Oscillated, &hbar_profile, Some((&g, &mu)), true)?);
            }
        }

        // Area repair: a downward shift keeps every length (and so every
        // density); scaling is the fallback when the shift would cross 0.
        let area_bar = geometry::path_area(&hbar);
        let delta = (area_bar - self.area) / (b - a);
        let min_y = hbar.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
        let (profile, fin) = if min_y - delta >= 0.0 {
            book.final_shift = delta;
            book.gamma = 1.0;
            book.t = 1.0;
            let fin: Vec<DensityPiece> = pieces
                .iter()
                .map(|p| {
                    let path: Vec<Point> = p.path.iter().map(|q| Point::new(q.x, q.y - delta)).collect();
                    DensityPiece { path, ..p.clone() }
                })
                .collect();
            (hbar_profile.map_heights(|y| y - delta), fin)
        } else {
            let gamma = self.area / area_bar;
            if !(gamma > 0.0 && gamma <= 1.0 + 1e-12) {
                return Err(RecoveryError::ConstraintRepairFailed { name: "gamma", value: gamma });
            }
            let gamma = gamma.min(1.0);
            let scaled: Vec<DensityPiece> = pieces
                .iter()
                .map(|p| {
                    let path: Vec<Point> = p.path.iter().map(|q| Point::new(q.x, gamma * q.y)).collect();
                    DensityPiece::new(0, Part::Regular, path, p.value)
                })
                .collect();
            let t = if self.mass > 0.0 {
                NeumaierSum::from_iter(scaled.iter().map(|p| p.mass())).value() / self.mass
            } else {
                1.0
            };
            if !(t > 0.0 && t <= 1.0 + 1e-12) {
                return Err(RecoveryError::ConstraintRepairFailed { name: "t", value: t });
            }
            book.gamma = gamma;
            book.t = t;
            let fin = scaled.into_iter().map(|p| DensityPiece { value: p.value / t, ..p }).collect();
            (hbar_profile.map_heights(|y| gamma * y), fin)
        };
        let mu = AdatomMeasure::from_raw(fin, Vec::new());
        let config = RegularConfiguration::new(profile, mu)?;
        stages.push(self.record(k, Stage::ConstraintFixed, config.profile(), Some((config.graph(), config.density())), true)?);
        Ok(Recovered { k, k_effective: k, config, grid: self.grid, stages, book })
    }

    fn run_refining(&self, k: u32) -> Result<Recovered, RecoveryError> {
        let mut kk = k;
        let mut attempt = 0;
        loop {
            match self.run(kk) {
                Ok(mut r) => {
                    r.k = k;
                    r.k_effective = kk;
                    for s in &mut r.stages {
                        s.k = k;
                    }
                    return Ok(r);
                }
                Err(RecoveryError::CellMismatch { .. } | RecoveryError::StripsOverlap(_))
                    if attempt < self.opts.max_refinements =>
                {
                    attempt += 1;
                    kk *= 2;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Builds the recovery sequence for `(h, μ)` at the indices `ks`, with
/// prescribed mass `m = μ(Γ)` and area `M = ∫ h`.
pub fn build_recovery_sequence(
    p: &Profile,
    mu: &AdatomMeasure,
    m: f64,
    area: f64,
    ks: &[u32],
    psi: &SurfaceDensity,
    opts: &RecoveryOptions,
) -> Result<Vec<Recovered>, RecoveryError> {
    if ks.contains(&0) {
        return Err(RecoveryError::InvalidIndex);
    }
    let graph = p.decompose();
    mu.validate(&graph)?;
    let actual_m = mu.total_mass();
    if (actual_m - m).abs() > 1e-12 * m.abs().max(1.0) {
        return Err(RecoveryError::MassMismatch { expected: m, actual: actual_m });
    }
    let actual_a = p.area_above_zero();
    if (actual_a - area).abs() > 1e-12 * area.abs().max(1.0) {
        return Err(RecoveryError::AreaMismatch { expected: area, actual: actual_a });
    }
    let env = envelope::subadditive_convex_envelope(psi, opts.envelope_grid)?;
    let grid = adatom::clearance_grid(&graph, opts.cell, opts.grid_tries)?;
    let diffuse = AdatomMeasure::from_raw(mu.pieces().to_vec(), Vec::new());
    let projected = adatom::grid_constant_projection(&graph, &diffuse, &grid)?;
    let projected_atoms = AdatomMeasure::from_raw(projected.pieces().to_vec(), mu.atoms().to_vec());
    let atom_mass = NeumaierSum::from_iter(mu.atoms().iter().map(|a| a.mass)).value();
    let bbox = convergence::default_bbox(p, std::iter::empty());
    let ctx = Context {
        target: p,
        graph,
        projected_atoms,
        diffuse,
        atom_mass,
        measure: mu,
        mass: m,
        area,
        env,
        psi,
        grid,
        opts,
        bank: TestFunctionBank::default_for(bbox, opts.cell),
        bbox,
    };
    if opts.parallel {
        ks.par_iter().map(|&k| ctx.run_refining(k)).collect()
    } else {
        ks.iter().map(|&k| ctx.run_refining(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProfileSpec;

    #[test]
    fn ym_is_identity_on_slow_profiles() {
        let v = vec![Point::new(0.0, 1.0), Point::new(0.5, 1.4), Point::new(1.0, 1.0)];
        assert_eq!(yosida_moreau_polyline(&v, 1.0), v);
    }

    #[test]
    fn ym_replaces_a_step_by_a_ramp() {
        let v = vec![Point::new(0.0, 1.0), Point::new(0.5, 1.0), Point::new(0.5, 2.0), Point::new(1.0, 2.0)];
        let f = yosida_moreau_polyline(&v, 4.0);
        assert_eq!(f, vec![Point::new(0.0, 1.0), Point::new(0.5, 1.0), Point::new(0.75, 2.0), Point::new(1.0, 2.0)]);
    }

    #[test]
    fn finite_cuts_remove_shallow_cuts() {
        let p = ProfileSpec::new(0.0, 1.0)
            .arc(&[(0.0, 1.0), (0.5, 1.0)])
            .arc(&[(0.5, 1.0), (1.0, 1.0)])
            .node(0.5, 1.0, 1.0, 0.95)
            .build()
            .unwrap();
        let fc = finite_cut_reduction(&p, 10, 1.0).unwrap();
        assert!(fc.profile.is_lipschitz());
        assert!((fc.eps_k - 0.1).abs() < 1e-15);
        assert!((fc.profile.area_above_zero() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wriggle_hits_length_ratio() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let w = wriggle(&p, 2.0, 8).unwrap();
        let l = geometry::path_length(&w.profile.polyline_points().unwrap());
        assert!((l - 2.0).abs() < 1e-10);
        assert!(w.profile.arcs()[0].iter().all(|q| q.y >= 1.0 && q.y <= 1.0 + 2.0 / 64.0));
    }

    #[test]
    fn arclength_split() {
        let path = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let parts = split_by_arclength(&path, &[0.5, 1.0, 1.5]);
        assert_eq!(parts.len(), 4);
        for (i, p) in parts.iter().enumerate() {
            assert!((geometry::path_length(p) - 0.5).abs() < 1e-15, "{i}");
        }
    }
}
