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

//! Planar points and graph polylines.
//!
//! A graph polyline is a sequence of points with non-decreasing abscissae.
//! Most helpers here assume strictly increasing abscissae.

use crate::numeric::NeumaierSum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

/// Euclidean length of a polyline.
pub fn path_length(path: &[Point]) -> f64 {
    let mut s = NeumaierSum::new();
    for w in path.windows(2) {
        s.add(w[0].dist(w[1]));
    }
    s.value()
}

/// Linear interpolation of a graph polyline at `x`, clamped to its ends.
pub fn eval_path(path: &[Point], x: f64) -> f64 {
    let n = path.len();
    if x <= path[0].x {
        return path[0].y;
    }
    if x >= path[n - 1].x {
        return path[n - 1].y;
    }
    // first index with path[i].x > x
    let i = path.partition_point(|p| p.x <= x);
    let (p, q) = (path[i - 1], path[i]);
    if q.x == p.x {
        return q.y;
    }
    let t = (x - p.x) / (q.x - p.x);
    p.y + t * (q.y - p.y)
}

/// Restriction of a graph polyline to `[x0, x1]`.
pub fn clip_path(path: &[Point], x0: f64, x1: f64) -> Vec<Point> {
    let n = path.len();
    let lo = x0.max(path[0].x);
    let hi = x1.min(path[n - 1].x);
    if hi < lo {
        return Vec::new();
    }
    let mut out = Vec::new();
    out.push(Point::new(lo, eval_path(path, lo)));
    let start = path.partition_point(|p| p.x <= lo);
    for p in &path[start..] {
        if p.x >= hi {
            break;
        }
        out.push(*p);
    }
    if hi > lo {
        out.push(Point::new(hi, eval_path(path, hi)));
    }
    out
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let l2 = dx * dx + dy * dy;
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / l2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Distance from `p` to a polyline.
pub fn path_distance(p: Point, path: &[Point]) -> f64 {
    if path.len() == 1 {
        return p.dist(path[0]);
    }
    path.windows(2)
        .map(|w| segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Appends `p` unless it coincides with the last point.
pub fn push_dedup(path: &mut Vec<Point>, p: Point) {
    if let Some(last) = path.last() {
        if *last == p {
            return;
        }
    }
    path.push(p);
}

/// Area between a graph polyline and the axis `y = 0` (trapezoid rule,
/// exact for polylines).
pub fn path_area(path: &[Point]) -> f64 {
    let mut s = NeumaierSum::new();
    for w in path.windows(2) {
        s.add(0.5 * (w[1].x - w[0].x) * (w[0].y + w[1].y));
    }
    s.value()
}

/// Largest absolute slope of a graph polyline.
pub fn path_max_slope(path: &[Point]) -> f64 {
    path.windows(2)
        .filter(|w| w[1].x > w[0].x)
        .map(|w| ((w[1].y - w[0].y) / (w[1].x - w[0].x)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<Point> {
        vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 0.0)]
    }

    #[test]
    fn length_and_area() {
        let p = tri();
        assert!((path_length(&p) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((path_area(&p) - 1.0).abs() < 1e-15);
        assert_eq!(path_max_slope(&p), 1.0);
    }

    #[test]
    fn eval_and_clip() {
        let p = tri();
        assert_eq!(eval_path(&p, 0.5), 0.5);
        assert_eq!(eval_path(&p, 1.5), 0.5);
        assert_eq!(eval_path(&p, -1.0), 0.0);
        let c = clip_path(&p, 0.5, 1.5);
        assert_eq!(c.len(), 3);
        assert_eq!(c[1], Point::new(1.0, 1.0));
        assert!((path_length(&c) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let p = tri();
        assert!((path_distance(Point::new(1.0, 0.0), &p) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(segment_distance(Point::new(3.0, 0.0), p[1], p[2]), 1.0);
    }
}
