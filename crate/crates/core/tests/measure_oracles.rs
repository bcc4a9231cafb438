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

mod common;

use common::{corpus, needle_profile, step_profile};
use epirelax::adatom::{
    admissible_grid, grid_constant_projection, total_mass, weak_star_gap, AdatomMeasure, Atom, Bbox, Grid,
    PieceSpec, TestFunctionBank,
};
use epirelax::geometry::Point;
use epirelax::profile::{Part, Profile};
use epirelax::recovery::wriggle;

fn on_line(v: f64, off: f64, r: f64) -> bool {
    let t = (v - off) / r;
    (t - t.round()).abs() * r <= 1e-12
}

/// First `k` whose offset `k·(r/1009, r/1013)` keeps the given abscissae and
/// ordinates off the grid lines.
fn scan(xs: &[f64], ys: &[f64], r: f64) -> usize {
    (0..)
        .find(|&k| {
            let (ox, oy) = (k as f64 * r / 1009.0, k as f64 * r / 1013.0);
            xs.iter().all(|&x| !on_line(x, ox, r)) && ys.iter().all(|&y| !on_line(y, oy, r))
        })
        .unwrap()
}

fn offset_index(g: &Grid) -> usize {
    (g.offset.x * 1009.0 / g.cell).round() as usize
}

#[test]
fn admissible_grid_for_a_flat_film() {
    let g = Profile::flat(0.0, 1.0, 1.0).unwrap().decompose();
    let grid = admissible_grid(&g, 0.3, 100).unwrap();
    assert_eq!(offset_index(&grid), scan(&[], &[1.0], 0.3));
    assert_eq!(offset_index(&grid), 0);
    // 0.6 sits on a line of the unshifted grid
    let g = Profile::flat(0.0, 1.0, 0.6).unwrap().decompose();
    let grid = admissible_grid(&g, 0.3, 100).unwrap();
    assert_eq!(offset_index(&grid), scan(&[], &[0.6], 0.3));
    assert!(offset_index(&grid) > 0);
}

#[test]
fn admissible_grid_for_a_sawtooth() {
    let pts: Vec<Point> = (0..=8).map(|i| Point::new(i as f64 / 8.0, if i % 2 == 0 { 0.2 } else { 0.45 })).collect();
    let g = Profile::polyline(pts).unwrap().decompose();
    assert_eq!(offset_index(&admissible_grid(&g, 0.5, 10).unwrap()), 0);
}

#[test]
fn admissible_grid_avoids_the_needle() {
    let g = needle_profile(0.0).decompose();
    let grid = admissible_grid(&g, 0.25, 100).unwrap();
    assert_eq!(offset_index(&grid), scan(&[0.5], &[0.0, 1.0], 0.25));
    assert!(offset_index(&grid) > 0);
}

#[test]
fn projection_folds_an_atom_into_its_cell() {
    let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
    let g = p.decompose();
    let mu = AdatomMeasure::new(
        &g,
        &[PieceSpec::Segment { part: Part::Regular, index: 0, value: 1.0 }],
        vec![Atom { position: Point::new(0.5, 1.0), mass: 3.0 }],
    )
    .unwrap();
    let grid = admissible_grid(&g, 2.0, 10).unwrap();
    let proj = grid_constant_projection(&g, &mu, &grid).unwrap();
    assert!(proj.atoms().is_empty());
    assert_eq!(proj.pieces().len(), 1);
    assert_eq!(proj.pieces()[0].value, 4.0);
}

#[test]
fn projection_of_an_atom_on_a_cut() {
    let p = needle_profile(0.0);
    let g = p.decompose();
    let mu = AdatomMeasure::new(
        &g,
        &[PieceSpec::Segment { part: Part::Cut, index: 0, value: 1.0 }],
        vec![Atom { position: Point::new(0.5, 0.25), mass: 2.0 }],
    )
    .unwrap();
    let grid = admissible_grid(&g, 0.5, 100).unwrap();
    let proj = grid_constant_projection(&g, &mu, &grid).unwrap();
    let holder = proj
        .pieces()
        .iter()
        .find(|q| q.part == Part::Cut && q.path[0].y <= 0.25 && q.path.last().unwrap().y >= 0.25)
        .unwrap();
    assert!((holder.length - 0.5).abs() < 1e-12);
    assert!((holder.value - (1.0 + 2.0 / holder.length)).abs() < 1e-12);
    for q in proj.pieces().iter().filter(|q| q.part == Part::Cut && !std::ptr::eq(*q, holder)) {
        assert_eq!(q.value, 1.0);
    }
}

#[test]
fn uniform_input_is_unchanged() {
    let p = needle_profile(0.5);
    let g = p.decompose();
    let mu = AdatomMeasure::uniform(&g, 0.7, 1.3).unwrap();
    let grid = admissible_grid(&g, 0.25, 100).unwrap();
    let proj = grid_constant_projection(&g, &mu, &grid).unwrap();
    for q in proj.pieces() {
        assert_eq!(q.value, if q.part == Part::Cut { 1.3 } else { 0.7 });
    }
}

#[test]
fn step_mass() {
    let g = step_profile().decompose();
    let mu = AdatomMeasure::new(
        &g,
        &[
            PieceSpec::Window { x0: 0.0, x1: 1.0, value: 1.0 },
            PieceSpec::Segment { part: Part::Jump, index: 0, value: 3.0 },
        ],
        Vec::new(),
    )
    .unwrap();
    assert_eq!(total_mass(&mu), 4.0);
    let atoms_only = AdatomMeasure::new(&g, &[], vec![Atom { position: Point::new(0.25, 1.0), mass: 2.5 }]).unwrap();
    assert_eq!(total_mass(&atoms_only), 2.5);
}

#[test]
fn projection_conserves_mass_and_is_idempotent() {
    for t in corpus() {
        let g = t.profile.decompose();
        for r in [0.1, 0.25, 0.4] {
            let grid = admissible_grid(&g, r, 1024).unwrap();
            let proj = grid_constant_projection(&g, &t.measure, &grid).unwrap();
            let m = t.measure.total_mass();
            assert!((proj.total_mass() - m).abs() <= 1e-12 * m.max(1.0), "{} r={r}", t.name);
            let cut_in = |mu: &AdatomMeasure| -> f64 {
                mu.pieces().iter().filter(|q| q.part == Part::Cut).map(|q| q.mass()).sum()
            };
            let atoms_on_cut: f64 = t
                .measure
                .atoms()
                .iter()
                .filter(|a| {
                    let (si, _) = g.nearest_segment(a.position);
                    g.segments[si].part == Part::Cut
                })
                .map(|a| a.mass)
                .sum();
            assert!((cut_in(&proj) - cut_in(&t.measure) - atoms_on_cut).abs() < 1e-12, "{} r={r}", t.name);
            let again = grid_constant_projection(&g, &proj, &grid).unwrap();
            let a: Vec<f64> = proj.pieces().iter().map(|q| q.value).collect();
            let b: Vec<f64> = again.pieces().iter().map(|q| q.value).collect();
            assert_eq!(a, b, "{} r={r}", t.name);
        }
    }
}

fn unit_box() -> Bbox {
    Bbox { min: Point::new(0.0, -0.5), max: Point::new(1.0, 1.5) }
}

#[test]
fn weak_star_gap_sees_an_atom() {
    let g = Profile::flat(0.0, 1.0, 0.0).unwrap().decompose();
    let base = AdatomMeasure::uniform(&g, 1.0, 0.0).unwrap();
    let bank = TestFunctionBank::default_for(unit_box(), 0.25);
    assert_eq!(weak_star_gap(&base, &base, &bank).unwrap(), 0.0);
    let m0 = 0.7;
    let with_atom = AdatomMeasure::from_raw(base.pieces().to_vec(), vec![Atom { position: Point::new(0.5, 0.0), mass: m0 }]);
    assert!(weak_star_gap(&base, &with_atom, &bank).unwrap() >= m0 - 1e-12);
    let empty = TestFunctionBank { bbox: unit_box(), functions: Vec::new() };
    assert!(weak_star_gap(&base, &base, &empty).is_err());
}

#[test]
fn weak_star_gap_of_wriggles_decreases() {
    let p = Profile::flat(0.0, 1.0, 0.0).unwrap();
    let g = p.decompose();
    let limit = AdatomMeasure::uniform(&g, 2.0, 0.0).unwrap();
    let bank = TestFunctionBank::default_for(unit_box(), 0.25);
    let gaps: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&k| {
            let w = wriggle(&p, 2.0, k).unwrap().profile;
            let mu = AdatomMeasure::uniform(&w.decompose(), 1.0, 0.0).unwrap();
            weak_star_gap(&mu, &limit, &bank).unwrap()
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn weak_star_gap_is_a_pseudometric() {
    let bank = TestFunctionBank::tensor(unit_box(), 3);
    let measures: Vec<AdatomMeasure> = corpus()
        .into_iter()
        .filter(|t| t.profile.domain() == (0.0, 1.0))
        .map(|t| t.measure)
        .collect();
    for a in &measures {
        for b in &measures {
            let ab = weak_star_gap(a, b, &bank).unwrap();
            assert!((ab - weak_star_gap(b, a, &bank).unwrap()).abs() <= 1e-12);
            for c in &measures {
                let ac = weak_star_gap(a, c, &bank).unwrap();
                let cb = weak_star_gap(c, b, &bank).unwrap();
                assert!(ab <= ac + cb + 1e-12);
            }
        }
    }
}
