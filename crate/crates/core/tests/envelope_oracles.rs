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

use common::quadratic;
use epirelax::envelope::{
    convex_envelope, cut_split, psi_c, recession_theta, subadditive_convex_envelope, EnvelopeError, SampleGrid,
    SurfaceDensity,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> SampleGrid {
    SampleGrid::default()
}

/// `min_{r + t = s} f(r) + f(t)` over `n + 1` split points.
fn split_min(f: &dyn Fn(f64) -> f64, s: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| {
            let r = s * i as f64 / n as f64;
            f(r) + f((s - r).max(0.0))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lower convex hull of sample points by checking every chord.
fn chord_hull(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut out = ys.to_vec();
    for i in 0..n {
        for j in i + 1..n {
            for k in i + 1..j {
                let t = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                out[k] = out[k].min(ys[i] + t * (ys[j] - ys[i]));
            }
        }
    }
    out
}

#[test]
fn quadratic_threshold_and_slope() {
    let env = subadditive_convex_envelope(&quadratic(), grid()).unwrap();
    assert_eq!(env.threshold_s0(), 1.0);
    assert_eq!(recession_theta(&env), 2.0);
    assert_eq!(env.psi_tilde(2.0).unwrap(), 4.0);
    // brute-force minimum of (1 + s²)/s on a fine grid
    let (best_s, _) = (1..=100_000)
        .map(|i| i as f64 * 1e-4)
        .map(|s| (s, (1.0 + s * s) / s))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    assert!((best_s - 1.0).abs() < 1e-4);
}

#[test]
fn quadratic_cut_density_against_split_oracle() {
    let env = subadditive_convex_envelope(&quadratic(), grid()).unwrap();
    let tilde = |s: f64| env.psi_tilde(s).unwrap();
    for (s, want) in [(2.0, 4.0), (6.0, 12.0)] {
        let c = psi_c(&env, s).unwrap();
        assert!((c - want).abs() < 1e-12, "psi_c({s}) = {c}");
        let oracle = split_min(&tilde, s, 10_000);
        assert!((c - oracle).abs() < 1e-9, "psi_c({s}) = {c}, oracle {oracle}");
    }
    assert_eq!(psi_c(&env, 0.0).unwrap(), 2.0 * env.psi_tilde(0.0).unwrap());
    assert!(matches!(psi_c(&env, -1.0), Err(EnvelopeError::NegativeArgument(_))));
}

#[test]
fn constant_density() {
    let env = subadditive_convex_envelope(&SurfaceDensity::Constant { c: 1.0 }, grid()).unwrap();
    assert_eq!(env.threshold_s0(), f64::INFINITY);
    assert_eq!(recession_theta(&env), 0.0);
    for s in [0.0, 0.5, 3.0, 40.0, 500.0] {
        assert_eq!(env.psi_tilde(s).unwrap(), 1.0);
        assert_eq!(psi_c(&env, s).unwrap(), 2.0);
    }
}

#[test]
fn affine_density() {
    let psi = SurfaceDensity::tabulate(|s| 2.0 + s, grid(), 1.0);
    let env = subadditive_convex_envelope(&psi, grid()).unwrap();
    assert_eq!(env.threshold_s0(), f64::INFINITY);
    assert_eq!(recession_theta(&env), 1.0);
    for s in [0.0, 1.0, 10.0, 100.0] {
        assert!((env.psi_tilde(s).unwrap() - (2.0 + s)).abs() < 1e-12);
    }
}

#[test]
fn hull_bridges_a_non_convex_gap() {
    let g = SampleGrid { s_max: 6.0, points: 121 };
    let f = |s: f64| (1.0 + s * s).min(2.0 + (s - 3.0).powi(2));
    let psi = SurfaceDensity::tabulate(f, g, 2.0 * 3.0);
    let hull = convex_envelope(&psi, g).unwrap();
    let xs = g.abscissae();
    let ys: Vec<f64> = xs.iter().map(|&s| f(s)).collect();
    let oracle = chord_hull(&xs, &ys);
    for (i, &s) in xs.iter().enumerate() {
        assert!((hull.eval(s) - oracle[i]).abs() < 1e-12, "s = {s}: {} vs {}", hull.eval(s), oracle[i]);
    }
    assert!(hull.eval(1.5) < f(1.5));
}

#[test]
fn convex_input_is_reproduced() {
    let g = SampleGrid { s_max: 4.0, points: 41 };
    let hull = convex_envelope(&quadratic(), g).unwrap();
    for s in g.abscissae() {
        assert!((hull.eval(s) - (1.0 + s * s)).abs() < 1e-12);
    }
}

#[test]
fn random_pairs_and_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi = SurfaceDensity::tabulate(|s| 1.0 + (s - 2.0).powi(2) * (1.0 + (3.0 * s).sin().abs()), grid(), 9.0);
    let env = subadditive_convex_envelope(&psi, grid()).unwrap();
    let tilde = |s: f64| env.psi_tilde(s).unwrap();
    let c = |s: f64| psi_c(&env, s).unwrap();
    for _ in 0..1000 {
        let (s, t) = (rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0));
        assert!(tilde(s + t) <= tilde(s) + tilde(t) + 1e-9);
        assert!(c(s + t) <= c(s) + c(t) + 1e-9);
        let lam: f64 = rng.gen();
        let m = lam * s + (1.0 - lam) * t;
        assert!(tilde(m) <= lam * tilde(s) + (1.0 - lam) * tilde(t) + 1e-9);
        assert!(c(m) <= lam * c(s) + (1.0 - lam) * c(t) + 1e-9);
        assert!(c(s) >= tilde(s) - 1e-12);
        assert!(tilde(s) <= env.psi_cvx(s) + 1e-12);
        assert!(env.psi_cvx(s) <= psi.eval(s) + 1e-12);
    }
}

#[test]
fn cut_density_recession() {
    let env = subadditive_convex_envelope(&quadratic(), grid()).unwrap();
    let theta = recession_theta(&env);
    let big = 1e3;
    assert!((psi_c(&env, big).unwrap() / big - theta).abs() <= 1e-2 * theta + 1e-6);
}

#[test]
fn cut_splits() {
    let env = subadditive_convex_envelope(&quadratic(), grid()).unwrap();
    assert_eq!(cut_split(0.0, &env).unwrap(), (0.0, 0.0));
    let (a, b) = cut_split(2.0, &env).unwrap();
    assert_eq!((a, b), (1.0, 1.0));
    assert_eq!(env.psi_tilde(a).unwrap() + env.psi_tilde(b).unwrap(), 4.0);
    let flat = subadditive_convex_envelope(&SurfaceDensity::Constant { c: 1.0 }, grid()).unwrap();
    assert_eq!(cut_split(3.0, &flat).unwrap(), (1.5, 1.5));
}

#[test]
fn rejects_non_positive_densities() {
    let bad = SurfaceDensity::Table { s: vec![0.0, 1.0], values: vec![1.0, 0.0], tail_slope: 1.0 };
    assert!(matches!(subadditive_convex_envelope(&bad, grid()), Err(EnvelopeError::NonPositiveInfimum(_))));
    let bad = SurfaceDensity::Constant { c: 0.0 };
    assert!(subadditive_convex_envelope(&bad, grid()).is_err());
}
