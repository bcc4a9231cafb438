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

use epirelax::elastic::{
    assemble, elastic_energy, energy_gradient, equilibrium, mesh_film, BoundaryCondition, DisplacementField,
    ElasticityTensor, FilmMesh, NodeFlags,
};
use epirelax::geometry::Point;
use epirelax::profile::Profile;
use nalgebra::{DMatrix, DVector};

/// Unit square `[0,1] × [y0, y0 + 1]` split into two triangles.
fn square(y0: f64) -> FilmMesh {
    let nodes = vec![Point::new(0.0, y0), Point::new(1.0, y0), Point::new(1.0, y0 + 1.0), Point::new(0.0, y0 + 1.0)];
    FilmMesh {
        flags: vec![NodeFlags::default(); 4],
        nodes,
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        depth: 1.0,
        nx: 1,
        ny: 1,
    }
}

fn field(m: &FilmMesh, f: impl Fn(Point) -> [f64; 2]) -> DisplacementField {
    DisplacementField(m.nodes.iter().map(|&p| f(p)).collect())
}

#[test]
fn mesh_counts() {
    let flat = mesh_film(&Profile::flat(0.0, 1.0, 1.0).unwrap(), 1.0, 2, 2).unwrap();
    assert_eq!((flat.nodes.len(), flat.triangles.len()), (15, 16));
    let bare = mesh_film(&Profile::flat(0.0, 1.0, 0.0).unwrap(), 0.5, 3, 2).unwrap();
    assert_eq!(bare.nodes.len(), 4 * 3);
    assert_eq!(bare.triangles.len(), 2 * 3 * 2);
    assert!((bare.area() - 0.5).abs() < 1e-15);
    assert_eq!(bare.flags.iter().filter(|f| f.surface).count(), 4);
}

#[test]
fn sloped_mesh_area() {
    let p = Profile::polyline(vec![Point::new(0.0, 0.2), Point::new(0.4, 1.0), Point::new(1.0, 0.5)]).unwrap();
    let m = mesh_film(&p, 0.75, 5, 3).unwrap();
    // trapezoids under the graph plus the substrate
    let want = 0.4 * (0.2 + 1.0) / 2.0 + 0.6 * (1.0 + 0.5) / 2.0 + 0.75;
    assert!((m.area() - want).abs() < 1e-13, "{}", m.area());
    assert!(m.nodes.iter().all(|q| q.y >= -0.75 && q.y <= p.value(q.x) + 1e-15));
}

#[test]
fn rejects_bad_inputs() {
    let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
    assert!(mesh_film(&p, 0.0, 2, 2).is_err());
    assert!(mesh_film(&p, 1.0, 0, 2).is_err());
    let step = epirelax::profile::ProfileSpec::new(0.0, 1.0)
        .arc(&[(0.0, 1.0), (0.5, 1.0)])
        .arc(&[(0.5, 2.0), (1.0, 2.0)])
        .node(0.5, 1.0, 2.0, 1.0)
        .build()
        .unwrap();
    assert!(mesh_film(&step, 1.0, 2, 2).is_err());
    let m = mesh_film(&p, 1.0, 2, 2).unwrap();
    let c = ElasticityTensor::new(1.0, 1.0, 0.0).unwrap();
    assert!(elastic_energy(&m, &DisplacementField::zeros(3), &c).is_err());
}

#[test]
fn single_square_energy() {
    // E(v) = e₁ ⊗ e₁ in the substrate: W = μ + λ/2
    let m = square(-1.0);
    let c = ElasticityTensor::new(1.0, 1.0, 0.3).unwrap();
    let e = elastic_energy(&m, &field(&m, |p| [p.x, 0.0]), &c).unwrap();
    assert!((e - 1.5).abs() < 1e-14, "{e}");
    // shear: E₁₂ = ½ gives W = 2μ·¼
    let e = elastic_energy(&m, &field(&m, |p| [p.y, 0.0]), &c).unwrap();
    assert!((e - 0.5).abs() < 1e-14, "{e}");
}

#[test]
fn misfit_is_cancelled_in_the_film() {
    let m = square(0.0);
    let c = ElasticityTensor::new(0.7, 1.3, 0.05).unwrap();
    let e = elastic_energy(&m, &field(&m, |p| [0.05 * p.x, 0.0]), &c).unwrap();
    assert!(e.abs() < 1e-18, "{e}");
    let zero = elastic_energy(&m, &DisplacementField::zeros(4), &c).unwrap();
    assert!((zero - c.w(0.05, 0.0, 0.0)).abs() < 1e-15);
}

#[test]
fn rigid_motions_cost_nothing() {
    let p = Profile::polyline(vec![Point::new(0.0, 0.3), Point::new(0.5, 0.8), Point::new(1.0, 0.4)]).unwrap();
    let m = mesh_film(&p, 0.5, 6, 3).unwrap();
    let c = ElasticityTensor::new(2.0, 0.5, 0.1).unwrap();
    let base = elastic_energy(&m, &DisplacementField::zeros(m.nodes.len()), &c).unwrap();
    let (w, a, b) = (0.01, 0.2, -0.3);
    let e = elastic_energy(&m, &field(&m, |q| [a - w * q.y, b + w * q.x]), &c).unwrap();
    assert!((e - base).abs() < 1e-14, "{e} vs {base}");
}

#[test]
fn quadratic_form_matches_energy() {
    let p = Profile::polyline(vec![Point::new(0.0, 0.5), Point::new(1.0, 0.9)]).unwrap();
    let m = mesh_film(&p, 0.5, 4, 2).unwrap();
    let c = ElasticityTensor::new(1.0, 1.0, 0.2).unwrap();
    let (k, f, c0) = assemble(&m, &c);
    let v = field(&m, |q| [0.1 * q.x * q.y, (3.0 * q.x).sin() * 0.05]);
    let x: Vec<f64> = v.0.iter().flat_map(|u| [u[0], u[1]]).collect();
    let mut kx = vec![0.0; k.n];
    k.mul(&x, &mut kx);
    let quad: f64 = 0.5 * x.iter().zip(&kx).map(|(a, b)| a * b).sum::<f64>()
        - x.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>()
        + c0;
    let e = elastic_energy(&m, &v, &c).unwrap();
    assert!((quad - e).abs() < 1e-13, "{quad} vs {e}");
}

fn dense_solve(m: &FilmMesh, c: &ElasticityTensor, bc: BoundaryCondition) -> Vec<f64> {
    let (k, f, _) = assemble(m, c);
    let free: Vec<usize> = (0..k.n).filter(|&i| !bc.is_fixed(&m.flags[i / 2])).collect();
    let mut dense = DMatrix::<f64>::zeros(k.n, k.n);
    for i in 0..k.n {
        for idx in k.row_ptr[i]..k.row_ptr[i + 1] {
            dense[(i, k.cols[idx])] = k.vals[idx];
        }
    }
    let kf = DMatrix::from_fn(free.len(), free.len(), |a, b| dense[(free[a], free[b])]);
    let ff = DVector::from_fn(free.len(), |a, _| f[free[a]]);
    let sol = kf.cholesky().expect("stiffness is positive definite").solve(&ff);
    let mut x = vec![0.0; k.n];
    for (a, &i) in free.iter().enumerate() {
        x[i] = sol[a];
    }
    x
}

#[test]
fn conjugate_gradients_match_a_dense_solve() {
    let p = Profile::polyline(vec![Point::new(0.0, 0.4), Point::new(0.3, 1.0), Point::new(1.0, 0.6)]).unwrap();
    let m = mesh_film(&p, 0.5, 8, 5).unwrap();
    assert!(m.nodes.len() >= 90);
    let c = ElasticityTensor::new(1.0, 1.0, 0.1).unwrap();
    for bc in [BoundaryCondition::ClampedBottom, BoundaryCondition::ClampedBottomAndSides] {
        let eq = equilibrium(&m, &c, bc).unwrap();
        let x = dense_solve(&m, &c, bc);
        let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (i, u) in eq.displacement.0.iter().enumerate() {
            assert!((u[0] - x[2 * i]).abs() <= 1e-8 * scale);
            assert!((u[1] - x[2 * i + 1]).abs() <= 1e-8 * scale);
        }
        let dense_e = elastic_energy(&m, &DisplacementField(x.chunks(2).map(|c| [c[0], c[1]]).collect()), &c).unwrap();
        assert!((eq.energy - dense_e).abs() <= 1e-10 * dense_e);
        let g = energy_gradient(&m, &c, bc, &eq.displacement);
        assert!(g.iter().all(|v| v.abs() < 1e-8));
        let zero = elastic_energy(&m, &DisplacementField::zeros(m.nodes.len()), &c).unwrap();
        assert!(eq.energy < zero);
    }
}

#[test]
fn energy_is_quadratic_in_the_misfit() {
    let p = Profile::polyline(vec![Point::new(0.0, 0.2), Point::new(0.5, 0.9), Point::new(1.0, 0.2)]).unwrap();
    let m = mesh_film(&p, 0.5, 6, 3).unwrap();
    let e = |t: f64| {
        let c = ElasticityTensor::new(1.0, 1.0, t).unwrap();
        equilibrium(&m, &c, BoundaryCondition::ClampedBottom).unwrap()
    };
    let (a, b) = (e(0.05), e(0.1));
    assert!((b.energy - 4.0 * a.energy).abs() <= 1e-9 * b.energy);
    for (u, v) in a.displacement.0.iter().zip(&b.displacement.0) {
        assert!((2.0 * u[0] - v[0]).abs() < 1e-9 && (2.0 * u[1] - v[1]).abs() < 1e-9);
    }
}
