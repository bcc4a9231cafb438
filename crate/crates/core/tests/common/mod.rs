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

#![allow(dead_code)]

use epirelax::adatom::{AdatomMeasure, Atom, PieceSpec};
use epirelax::envelope::SurfaceDensity;
use epirelax::geometry::Point;
use epirelax::profile::{Part, Profile, ProfileSpec};
use rand::Rng;

pub fn quadratic() -> SurfaceDensity {
    SurfaceDensity::Quadratic { alpha: 1.0, beta: 1.0 }
}

pub struct Target {
    pub name: &'static str,
    pub profile: Profile,
    pub measure: AdatomMeasure,
}

impl Target {
    fn new(name: &'static str, profile: Profile, f: impl FnOnce(&epirelax::profile::ExtendedGraph) -> AdatomMeasure) -> Self {
        let g = profile.decompose();
        let measure = f(&g);
        Target { name, profile, measure }
    }
}

pub fn flat_target() -> Target {
    Target::new("flat-2s0", Profile::flat(0.0, 1.0, 1.0).unwrap(), |g| AdatomMeasure::uniform(g, 2.0, 0.0).unwrap())
}

pub fn step_profile() -> Profile {
    ProfileSpec::new(0.0, 1.0)
        .arc(&[(0.0, 1.0), (0.5, 1.0)])
        .arc(&[(0.5, 2.0), (1.0, 2.0)])
        .node(0.5, 1.0, 2.0, 1.0)
        .build()
        .unwrap()
}

pub fn needle_profile(bottom: f64) -> Profile {
    ProfileSpec::new(0.0, 1.0)
        .arc(&[(0.0, 1.0), (0.5, 1.0)])
        .arc(&[(0.5, 1.0), (1.0, 1.0)])
        .node(0.5, 1.0, 1.0, bottom)
        .build()
        .unwrap()
}

pub fn step_target() -> Target {
    Target::new("jump", step_profile(), |g| AdatomMeasure::uniform(g, 1.5, 0.0).unwrap())
}

pub fn needle_target() -> Target {
    Target::new("cut", needle_profile(0.5), |g| AdatomMeasure::uniform(g, 1.0, 2.0).unwrap())
}

/// Ten targets covering flats, jumps, cuts (shallow and down to the
/// substrate), steep slopes and atoms, with densities on both sides of `s₀`.
pub fn corpus() -> Vec<Target> {
    vec![
        flat_target(),
        step_target(),
        needle_target(),
        Target::new("jump-low", step_profile(), |g| AdatomMeasure::uniform(g, 0.3, 0.0).unwrap()),
        Target::new("cut-low", needle_profile(0.5), |g| AdatomMeasure::uniform(g, 0.2, 0.4).unwrap()),
        Target::new("deep-cut", needle_profile(0.0), |g| AdatomMeasure::uniform(g, 0.5, 0.5).unwrap()),
        Target::new(
            "tent-atom",
            Profile::polyline(vec![Point::new(0.0, 0.5), Point::new(0.3, 1.5), Point::new(1.0, 0.2)]).unwrap(),
            |g| {
                AdatomMeasure::new(
                    g,
                    &[PieceSpec::Window { x0: 0.0, x1: 1.0, value: 0.5 }],
                    vec![Atom { position: Point::new(0.3, 1.5), mass: 0.3 }],
                )
                .unwrap()
            },
        ),
        Target::new(
            "cut-jump-atoms",
            ProfileSpec::new(0.0, 2.0)
                .arc(&[(0.0, 1.0), (0.6, 1.2)])
                .arc(&[(0.6, 1.2), (1.2, 0.8)])
                .arc(&[(1.2, 1.5), (2.0, 1.5)])
                .node(0.6, 1.2, 1.2, 0.4)
                .node(1.2, 0.8, 1.5, 0.8)
                .build()
                .unwrap(),
            |g| {
                AdatomMeasure::new(
                    g,
                    &[
                        PieceSpec::Window { x0: 0.0, x1: 2.0, value: 0.7 },
                        PieceSpec::Segment { part: Part::Cut, index: 0, value: 1.2 },
                        PieceSpec::Segment { part: Part::Jump, index: 0, value: 0.9 },
                    ],
                    vec![Atom { position: Point::new(1.6, 1.5), mass: 0.2 }],
                )
                .unwrap()
            },
        ),
        Target::new(
            "cut-into-jump",
            ProfileSpec::new(0.0, 1.0)
                .arc(&[(0.0, 1.0), (0.45, 1.0)])
                .arc(&[(0.45, 2.0), (1.0, 1.8)])
                .node(0.45, 1.0, 2.0, 0.3)
                .build()
                .unwrap(),
            |g| {
                AdatomMeasure::new(
                    g,
                    &[
                        PieceSpec::Window { x0: 0.0, x1: 1.0, value: 1.2 },
                        PieceSpec::Segment { part: Part::Jump, index: 0, value: 1.2 },
                        PieceSpec::Segment { part: Part::Cut, index: 0, value: 0.6 },
                    ],
                    vec![Atom { position: Point::new(0.45, 0.6), mass: 0.1 }],
                )
                .unwrap()
            },
        ),
        Target::new(
            "steep-ramp",
            Profile::polyline(vec![
                Point::new(0.0, 0.2),
                Point::new(0.5, 0.2),
                Point::new(0.52, 2.2),
                Point::new(1.0, 2.2),
            ])
            .unwrap(),
            |g| {
                AdatomMeasure::new(
                    g,
                    &[
                        PieceSpec::Window { x0: 0.0, x1: 0.5, value: 0.8 },
                        PieceSpec::Window { x0: 0.5, x1: 1.0, value: 1.6 },
                    ],
                    Vec::new(),
                )
                .unwrap()
            },
        ),
    ]
}

/// Random profile on `(0, 1)` with up to three arcs; interior nodes are
/// jumps, cuts or continuous points.
pub fn random_profile<R: Rng>(rng: &mut R) -> Profile {
    let arcs = rng.gen_range(1..=3);
    let mut xs: Vec<f64> = (0..arcs - 1).map(|_| rng.gen_range(0.15..0.85)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    let mut ends = vec![0.0];
    ends.extend(&xs);
    ends.push(1.0);
    let mut spec = ProfileSpec::new(0.0, 1.0);
    let mut arcs_pts: Vec<Vec<(f64, f64)>> = Vec::new();
    for w in ends.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        arcs_pts.push(vec![
            (w[0], rng.gen_range(0.1..1.0)),
            (mid, rng.gen_range(0.1..1.0)),
            (w[1], rng.gen_range(0.1..1.0)),
        ]);
    }
    for a in &arcs_pts {
        spec = spec.arc(a);
    }
    for i in 0..arcs_pts.len() - 1 {
        let l = arcs_pts[i][2].1;
        let r = arcs_pts[i + 1][0].1;
        let v = if rng.gen_bool(0.5) { l.min(r) } else { rng.gen_range(0.0..l.min(r)) };
        spec = spec.node(ends[i + 1], l, r, v);
    }
    spec.build().unwrap()
}
