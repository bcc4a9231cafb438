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

//! Film profiles of bounded variation and their extended graphs.
//!
//! A profile is a piecewise-linear function on `(a, b)` made of arcs
//! (polylines with strictly increasing abscissae) joined at interior
//! breakpoints. Each breakpoint carries a left limit, a right limit and a
//! point value; the stored representative is lower semicontinuous, so the
//! point value never exceeds the smaller one-sided limit.

use crate::geometry::{self, Point};
use crate::numeric::NeumaierSum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for matching abscissae and one-sided limits on input.
const MATCH_TOL: f64 = 1e-12;
/// One-sided limits closer than this are treated as continuous.
pub const CONT_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("empty or non-finite domain: {0}")]
    EmptyDomain(String),
    #[error("breakpoints not strictly increasing: {0}")]
    NonMonotoneBreakpoints(String),
    #[error("negative height {value} at x = {x}")]
    NegativeHeight { x: f64, value: f64 },
    #[error("point value {value} exceeds min(left, right) = {lower} at x = {x}")]
    NotLowerSemicontinuous { x: f64, value: f64, lower: f64 },
    #[error("arc data inconsistent: {0}")]
    ArcMismatch(String),
    #[error("node data inconsistent: {0}")]
    NodeMismatch(String),
    #[error("window [{0}, {1}] is not inside the domain")]
    WindowOutOfDomain(f64, f64),
    #[error("operation requires a Lipschitz profile")]
    NotLipschitz,
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(f64),
}

/// Data at an interior breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

impl Node {
    /// `h^-`, the smaller one-sided limit.
    pub fn lower(&self) -> f64 {
        self.left.min(self.right)
    }

    /// `h^+`, the larger one-sided limit.
    pub fn upper(&self) -> f64 {
        self.left.max(self.right)
    }

    pub fn cut_depth(&self) -> f64 {
        self.lower() - self.value
    }

    pub fn jump_height(&self) -> f64 {
        self.upper() - self.lower()
    }

    pub fn is_cut(&self) -> bool {
        self.cut_depth() > CONT_TOL
    }

    pub fn is_jump(&self) -> bool {
        self.jump_height() > CONT_TOL
    }
}

/// Unvalidated profile description, as read from input.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub domain: (f64, f64),
    pub arcs: Vec<Vec<Point>>,
    /// Interior breakpoint data. An interior breakpoint without an entry gets
    /// the point value `min(left, right)`.
    pub nodes: Vec<Node>,
}

impl ProfileSpec {
    pub fn new(a: f64, b: f64) -> Self {
        ProfileSpec { domain: (a, b), arcs: Vec::new(), nodes: Vec::new() }
    }

    pub fn arc(mut self, pts: &[(f64, f64)]) -> Self {
        self.arcs.push(pts.iter().map(|&(x, y)| Point::new(x, y)).collect());
        self
    }

    pub fn node(mut self, x: f64, left: f64, right: f64, value: f64) -> Self {
        self.nodes.push(Node { x, left, right, value });
        self
    }

    pub fn build(self) -> Result<Profile, ProfileError> {
        build_profile(self)
    }
}

/// A validated BV profile with a lower semicontinuous representative.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    a: f64,
    b: f64,
    arcs: Vec<Vec<Point>>,
    nodes: Vec<Node>,
}

/// Validates a profile description.
pub fn build_profile(spec: ProfileSpec) -> Result<Profile, ProfileError> {
    let (a, b) = spec.domain;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(ProfileError::EmptyDomain(format!("({a}, {b})")));
    }
    if spec.arcs.is_empty() {
        return Err(ProfileError::EmptyDomain("no arcs".into()));
    }
    let scale = (b - a).max(1.0);
    let mut arcs = spec.arcs;
    for (i, arc) in arcs.iter().enumerate() {
        if arc.len() < 2 {
            return Err(ProfileError::ArcMismatch(format!("arc {i} has fewer than two points")));
        }
        for p in arc {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(ProfileError::ArcMismatch(format!("arc {i} has a non-finite point")));
            }
            if p.y < 0.0 {
                return Err(ProfileError::NegativeHeight { x: p.x, value: p.y });
            }
        }
        for w in arc.windows(2) {
            if !(w[1].x > w[0].x) {
                return Err(ProfileError::NonMonotoneBreakpoints(format!(
                    "arc {i}: x = {} followed by x = {}",
                    w[0].x, w[1].x
                )));
            }
        }
    }
    let first = arcs[0][0].x;
    let last = arcs.last().unwrap().last().unwrap().x;
    if (first - a).abs() > MATCH_TOL * scale || (last - b).abs() > MATCH_TOL * scale {
        return Err(ProfileError::ArcMismatch(format!(
            "arcs span [{first}, {last}], domain is [{a}, {b}]"
        )));
    }
    arcs[0][0].x = a;
    let n_arcs = arcs.len();
    arcs[n_arcs - 1].last_mut().unwrap().x = b;
    for i in 0..n_arcs - 1 {
        let e = arcs[i].last().unwrap().x;
        let s = arcs[i + 1][0].x;
        if (e - s).abs() > MATCH_TOL * scale {
            return Err(ProfileError::ArcMismatch(format!(
                "arc {i} ends at {e} but arc {} starts at {s}",
                i + 1
            )));
        }
        if !(s > arcs[i][0].x) || !(arcs[i + 1].last().unwrap().x > e) {
            return Err(ProfileError::NonMonotoneBreakpoints(format!("breakpoint at {e}")));
        }
        arcs[i + 1][0].x = e;
    }

    let mut given = spec.nodes;
    given.sort_by(|p, q| p.x.total_cmp(&q.x));
    let mut used = vec![false; given.len()];
    let mut nodes = Vec::with_capacity(n_arcs - 1);
    for i in 0..n_arcs - 1 {
        let x = arcs[i].last().unwrap().x;
        let left = arcs[i].last().unwrap().y;
        let right = arcs[i + 1][0].y;
        let found = given
            .iter()
            .enumerate()
            .find(|(j, n)| !used[*j] && (n.x - x).abs() <= MATCH_TOL * scale)
            .map(|(j, n)| (j, *n));
        let node = match found {
            Some((j, n)) => {
                used[j] = true;
                let tol = MATCH_TOL * left.abs().max(right.abs()).max(1.0);
                if (n.left - left).abs() > tol || (n.right - right).abs() > tol {
                    return Err(ProfileError::NodeMismatch(format!(
                        "node at {x}: limits ({}, {}) but arcs give ({left}, {right})",
                        n.left, n.right
                    )));
                }
                Node { x, left, right, value: n.value }
            }
            None => Node { x, left, right, value: left.min(right) },
        };
        if !node.value.is_finite() {
            return Err(ProfileError::NodeMismatch(format!("non-finite value at {x}")));
        }
        if node.value < 0.0 {
            return Err(ProfileError::NegativeHeight { x, value: node.value });
        }
        if node.value > node.lower() {
            return Err(ProfileError::NotLowerSemicontinuous {
                x,
                value: node.value,
                lower: node.lower(),
            });
        }
        nodes.push(node);
    }
    if let Some(j) = used.iter().position(|u| !u) {
        return Err(ProfileError::NodeMismatch(format!(
            "node at x = {} does not match an interior breakpoint",
            given[j].x
        )));
    }
    Ok(Profile { a, b, arcs, nodes })
}

impl Profile {
    /// Constant profile `h = height` on `(a, b)`.
    pub fn flat(a: f64, b: f64, height: f64) -> Result<Profile, ProfileError> {
        ProfileSpec::new(a, b).arc(&[(a, height), (b, height)]).build()
    }

    /// Continuous profile through the given vertices.
    pub fn polyline(points: Vec<Point>) -> Result<Profile, ProfileError> {
        let a = points.first().map(|p| p.x).unwrap_or(0.0);
        let b = points.last().map(|p| p.x).unwrap_or(0.0);
        build_profile(ProfileSpec { domain: (a, b), arcs: vec![points], nodes: Vec::new() })
    }

    pub(crate) fn from_parts_unchecked(a: f64, b: f64, arcs: Vec<Vec<Point>>, nodes: Vec<Node>) -> Profile {
        Profile { a, b, arcs, nodes }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn arcs(&self) -> &[Vec<Point>] {
        &self.arcs
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn to_spec(&self) -> ProfileSpec {
        ProfileSpec { domain: (self.a, self.b), arcs: self.arcs.clone(), nodes: self.nodes.clone() }
    }

    /// True when the profile has no jumps and no cuts.
    pub fn is_lipschitz(&self) -> bool {
        self.nodes.iter().all(|n| !n.is_cut() && !n.is_jump())
    }

    /// Vertices of a Lipschitz profile as one polyline.
    pub fn polyline_points(&self) -> Result<Vec<Point>, ProfileError> {
        if !self.is_lipschitz() {
            return Err(ProfileError::NotLipschitz);
        }
        let mut out: Vec<Point> = Vec::with_capacity(self.arcs.iter().map(Vec::len).sum());
        for arc in &self.arcs {
            let skip = usize::from(!out.is_empty());
            out.extend_from_slice(&arc[skip..]);
        }
        Ok(out)
    }

    /// Largest slope of a Lipschitz profile.
    pub fn lipschitz_constant(&self) -> Result<f64, ProfileError> {
        if !self.is_lipschitz() {
            return Err(ProfileError::NotLipschitz);
        }
        Ok(self.arcs.iter().map(|a| geometry::path_max_slope(a)).fold(0.0, f64::max))
    }

    fn arc_index(&self, x: f64) -> Option<usize> {
        // index of the arc whose open interval contains x, or None at a breakpoint
        let i = self.nodes.partition_point(|n| n.x < x);
        if i < self.nodes.len() && self.nodes[i].x == x {
            None
        } else {
            Some(i)
        }
    }

    /// Value of the lower semicontinuous representative at `x`.
    pub fn value(&self, x: f64) -> f64 {
        match self.arc_index(x) {
            Some(i) => geometry::eval_path(&self.arcs[i], x),
            None => self.node_at(x).unwrap().value,
        }
    }

    /// `h^-(x) = min(h(x-), h(x+))`.
    pub fn lower_limit(&self, x: f64) -> f64 {
        match self.arc_index(x) {
            Some(i) => geometry::eval_path(&self.arcs[i], x),
            None => self.node_at(x).unwrap().lower(),
        }
    }

    /// `h(x-)`; at `a` this is the right limit.
    pub fn left_limit(&self, x: f64) -> f64 {
        match self.arc_index(x) {
            Some(i) => geometry::eval_path(&self.arcs[i], x),
            None => self.node_at(x).unwrap().left,
        }
    }

    /// `h(x+)`; at `b` this is the left limit.
    pub fn right_limit(&self, x: f64) -> f64 {
        match self.arc_index(x) {
            Some(i) => geometry::eval_path(&self.arcs[i], x),
            None => self.node_at(x).unwrap().right,
        }
    }

    fn node_at(&self, x: f64) -> Option<&Node> {
        self.nodes.iter().find(|n| n.x == x)
    }

    /// Minimum of the lower semicontinuous representative over `[x0, x1]`.
    pub fn min_on(&self, x0: f64, x1: f64) -> f64 {
        let mut m = self.value(x0.clamp(self.a, self.b)).min(self.value(x1.clamp(self.a, self.b)));
        for arc in &self.arcs {
            for p in arc {
                if p.x > x0 && p.x < x1 {
                    m = m.min(p.y);
                }
            }
        }
        for n in &self.nodes {
            if n.x >= x0 && n.x <= x1 {
                m = m.min(n.value);
            }
        }
        m
    }

    /// Largest height (over limits and point values).
    pub fn max_height(&self) -> f64 {
        self.arcs.iter().flatten().map(|p| p.y).fold(0.0, f64::max)
    }

    /// `∫_a^b h dx`.
    pub fn area_above_zero(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for arc in &self.arcs {
            s.add(geometry::path_area(arc));
        }
        s.value()
    }

    /// Pointwise variation of the lower semicontinuous representative.
    pub fn total_variation(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for arc in &self.arcs {
            for w in arc.windows(2) {
                s.add((w[1].y - w[0].y).abs());
            }
        }
        for n in &self.nodes {
            s.add((n.left - n.value).abs() + (n.right - n.value).abs());
        }
        s.value()
    }

    /// Abscissae and depths of the cuts of depth at least `eps`, sorted.
    pub fn cuts_exceeding(&self, eps: f64) -> Result<Vec<(f64, f64)>, ProfileError> {
        if !(eps > 0.0) {
            return Err(ProfileError::NonPositiveEps(eps));
        }
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.is_cut() && n.cut_depth() >= eps)
            .map(|n| (n.x, n.cut_depth()))
            .collect())
    }

    /// Applies `f` to every height (limits and point values). `f` must be
    /// non-decreasing so that lower semicontinuity is kept.
    pub fn map_heights<F: Fn(f64) -> f64>(&self, f: F) -> Profile {
        let arcs = self
            .arcs
            .iter()
            .map(|a| a.iter().map(|p| Point::new(p.x, f(p.y))).collect())
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node { x: n.x, left: f(n.left), right: f(n.right), value: f(n.value) })
            .collect();
        Profile { a: self.a, b: self.b, arcs, nodes }
    }

    /// Splits the extended graph into regular, jump and cut parts.
    pub fn decompose(&self) -> ExtendedGraph {
        let mut segments = Vec::new();
        for (i, arc) in self.arcs.iter().enumerate() {
            if i > 0 {
                let n = &self.nodes[i - 1];
                if n.is_cut() {
                    segments.push(GraphSegment::vertical(Part::Cut, n.x, n.value, n.lower(), Some(i - 1)));
                }
                if n.is_jump() {
                    segments.push(GraphSegment::vertical(Part::Jump, n.x, n.lower(), n.upper(), Some(i - 1)));
                }
            }
            segments.push(GraphSegment {
                part: Part::Regular,
                length: geometry::path_length(arc),
                path: arc.clone(),
                node: None,
            });
        }
        let mut lengths = PartLengths::default();
        for s in &segments {
            lengths.add(s.part, s.length);
        }
        ExtendedGraph { domain: (self.a, self.b), segments, lengths }
    }
}

/// The three parts of the extended graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Regular,
    Jump,
    Cut,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::Regular => "regular",
            Part::Jump => "jump",
            Part::Cut => "cut",
        }
    }

    /// Regular and jump parts together form `Γ̃`.
    pub fn is_tilde(self) -> bool {
        !matches!(self, Part::Cut)
    }
}

/// `H¹` of each part.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PartLengths {
    pub regular: f64,
    pub jump: f64,
    pub cut: f64,
}

impl PartLengths {
    pub fn add(&mut self, part: Part, len: f64) {
        match part {
            Part::Regular => self.regular += len,
            Part::Jump => self.jump += len,
            Part::Cut => self.cut += len,
        }
    }

    pub fn get(&self, part: Part) -> f64 {
        match part {
            Part::Regular => self.regular,
            Part::Jump => self.jump,
            Part::Cut => self.cut,
        }
    }

    pub fn total(&self) -> f64 {
        self.regular + self.jump + self.cut
    }

    pub fn tilde(&self) -> f64 {
        self.regular + self.jump
    }
}

/// One piece of the extended graph: an arc or a vertical segment.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSegment {
    pub part: Part,
    /// Polyline; vertical segments are stored bottom to top.
    pub path: Vec<Point>,
    /// Index of the breakpoint for vertical segments.
    pub node: Option<usize>,
    pub length: f64,
}

impl GraphSegment {
    fn vertical(part: Part, x: f64, y0: f64, y1: f64, node: Option<usize>) -> Self {
        GraphSegment {
            part,
            path: vec![Point::new(x, y0), Point::new(x, y1)],
            node,
            length: y1 - y0,
        }
    }

    pub fn is_vertical(&self) -> bool {
        self.part != Part::Regular
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.path[0].x, self.path.last().unwrap().x)
    }
}

/// The extended graph `Γ = Γ_reg ∪ Γ_jump ∪ Γ_cut` of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedGraph {
    pub domain: (f64, f64),
    pub segments: Vec<GraphSegment>,
    pub lengths: PartLengths,
}

impl ExtendedGraph {
    /// Indices of the segments of one part, in left-to-right order.
    pub fn indices_of(&self, part: Part) -> Vec<usize> {
        (0..self.segments.len()).filter(|&i| self.segments[i].part == part).collect()
    }

    /// The `index`-th segment of a part.
    pub fn segment_of(&self, part: Part, index: usize) -> Option<usize> {
        self.indices_of(part).get(index).copied()
    }

    /// `H¹` of each part inside the closed window `[x0, x1]`.
    pub fn lengths_in(&self, x0: f64, x1: f64) -> Result<PartLengths, ProfileError> {
        let (a, b) = self.domain;
        if !(x0 >= a && x1 <= b && x0 <= x1) {
            return Err(ProfileError::WindowOutOfDomain(x0, x1));
        }
        let mut out = PartLengths::default();
        for s in &self.segments {
            if s.is_vertical() {
                let x = s.path[0].x;
                if x >= x0 && x <= x1 {
                    out.add(s.part, s.length);
                }
            } else {
                let (s0, s1) = s.x_range();
                if s1 <= x0 || s0 >= x1 {
                    continue;
                }
                if s0 >= x0 && s1 <= x1 {
                    out.add(s.part, s.length);
                } else {
                    out.add(s.part, geometry::path_length(&geometry::clip_path(&s.path, x0, x1)));
                }
            }
        }
        Ok(out)
    }

    /// Distance from a point to the extended graph.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.segments
            .iter()
            .map(|s| geometry::path_distance(p, &s.path))
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest segment to a point.
    pub fn nearest_segment(&self, p: Point) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, s) in self.segments.iter().enumerate() {
            let d = geometry::path_distance(p, &s.path);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

/// `H¹(Γ ∩ {x0 ≤ x ≤ x1})` split by part. Without a window, the whole graph.
pub fn graph_lengths(p: &Profile, window: Option<(f64, f64)>) -> Result<PartLengths, ProfileError> {
    let g = p.decompose();
    match window {
        None => Ok(g.lengths),
        Some((x0, x1)) => g.lengths_in(x0, x1),
    }
}
