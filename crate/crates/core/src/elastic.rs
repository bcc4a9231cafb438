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

//! Linear elasticity of the film and substrate with a misfit strain.
//!
//! The domain `{-d < y < h(x)}` is meshed with P1 triangles. The film
//! (`y ≥ 0`) carries the mismatch strain `E₀ = t e₁ ⊗ e₁`, and the energy
//! density is `W(A) = μ |A|² + λ/2 (tr A)²` on symmetric matrices.

use crate::geometry::Point;
use crate::numeric::NeumaierSum;
use crate::profile::Profile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticError {
    #[error("elasticity tensor is not positive definite (lambda = {lambda}, mu = {mu})")]
    NotPositiveDefinite { lambda: f64, mu: f64 },
    #[error("profile must be Lipschitz to be meshed")]
    NotLipschitz,
    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),
    #[error("displacement has {got} nodes, mesh has {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual}")]
    SolverDiverged { iterations: usize, residual: f64 },
}

/// Isotropic elasticity with Lamé constants and a misfit parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor {
    pub lambda: f64,
    pub mu: f64,
    /// Misfit `t`: the film is stress-free at `E₀ = t e₁ ⊗ e₁`.
    pub mismatch: f64,
}

impl ElasticityTensor {
    pub fn new(lambda: f64, mu: f64, mismatch: f64) -> Result<Self, ElasticError> {
        // positive definite on symmetric 2x2 matrices iff mu > 0 and lambda + mu > 0
        if !(mu > 0.0 && lambda + mu > 0.0 && mismatch.is_finite()) {
            return Err(ElasticError::NotPositiveDefinite { lambda, mu });
        }
        Ok(ElasticityTensor { lambda, mu, mismatch })
    }

    /// `W(A)` for a symmetric matrix `[[a11, a12], [a12, a22]]`.
    pub fn w(&self, a11: f64, a12: f64, a22: f64) -> f64 {
        let tr = a11 + a22;
        self.mu * (a11 * a11 + a22 * a22 + 2.0 * a12 * a12) + 0.5 * self.lambda * tr * tr
    }
}

/// `E₀(y)`: the misfit strain in the film, zero in the substrate.
pub fn mismatch_strain(y: f64, c: &ElasticityTensor) -> [[f64; 2]; 2] {
    if y >= 0.0 {
        [[c.mismatch, 0.0], [0.0, 0.0]]
    } else {
        [[0.0; 2]; 2]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeFlags {
    pub bottom: bool,
    pub lateral: bool,
    pub surface: bool,
}

impl NodeFlags {
    pub fn label(&self) -> String {
        let mut v = Vec::new();
        if self.bottom {
            v.push("bottom");
        }
        if self.lateral {
            v.push("lateral");
        }
        if self.surface {
            v.push("surface");
        }
        if v.is_empty() {
            "interior".into()
        } else {
            v.join("+")
        }
    }
}

/// Structured P1 mesh of `{-d < y < h(x)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilmMesh {
    pub nodes: Vec<Point>,
    pub flags: Vec<NodeFlags>,
    pub triangles: Vec<[usize; 3]>,
    pub depth: f64,
    pub nx: usize,
    pub ny: usize,
}

const MIN_AREA: f64 = 1e-14;

fn tri_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y))
}

/// Meshes the film over a Lipschitz profile on top of a substrate of depth
/// `d`: `nx` columns, `ny` substrate layers and `ny` film layers. Columns
/// with `h = 0` collapse their film nodes onto the interface; each quad is
/// split along its shorter diagonal.
pub fn mesh_film(p: &Profile, d: f64, nx: usize, ny: usize) -> Result<FilmMesh, ElasticError> {
    if !p.is_lipschitz() {
        return Err(ElasticError::NotLipschitz);
    }
    if !(d.is_finite() && d > 0.0) || nx == 0 || ny == 0 {
        return Err(ElasticError::InvalidMesh(format!("d = {d}, nx = {nx}, ny = {ny}")));
    }
    let (a, b) = p.domain();
    let levels = 2 * ny + 1;
    let mut nodes = Vec::new();
    let mut flags = Vec::new();
    let mut ids = vec![vec![0usize; levels]; nx + 1];
    for (i, col) in ids.iter_mut().enumerate() {
        let x = if i == nx { b } else { a + (b - a) * i as f64 / nx as f64 };
        let h = p.value(x);
        let lateral = i == 0 || i == nx;
        for (l, id) in col.iter_mut().enumerate() {
            if l > ny && h <= MIN_AREA {
                *id = nodes.len() - 1;
                continue;
            }
            let y = if l <= ny { -d + d * l as f64 / ny as f64 } else { h * (l - ny) as f64 / ny as f64 };
            let y = if l == ny { 0.0 } else { y };
            *id = nodes.len();
            nodes.push(Point::new(x, y));
            let surface = l == levels - 1 || (l == ny && h <= MIN_AREA);
            flags.push(NodeFlags { bottom: l == 0, lateral, surface });
        }
    }
    let mut triangles = Vec::new();
    for i in 0..nx {
        for l in 0..levels - 1 {
            let bl = ids[i][l];
            let br = ids[i + 1][l];
            let tr = ids[i + 1][l + 1];
            let tl = ids[i][l + 1];
            let d1 = nodes[bl].dist(nodes[tr]);
            let d2 = nodes[br].dist(nodes[tl]);
            let split = if (d1 - d2).abs() <= 1e-12 * d1.max(d2) || d1 < d2 {
                [[bl, br, tr], [bl, tr, tl]]
            } else {
                [[bl, br, tl], [br, tr, tl]]
            };
            for t in split {
                if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                    continue;
                }
                if tri_area(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < MIN_AREA {
                    continue;
                }
                triangles.push(t);
            }
        }
    }
    Ok(FilmMesh { nodes, flags, triangles, depth: d, nx, ny })
}

impl FilmMesh {
    pub fn area(&self) -> f64 {
        let mut s = NeumaierSum::new();
        for t in &self.triangles {
            s.add(tri_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]));
        }
        s.value()
    }

    /// Quadrature data of one triangle: area, shape-function gradients
    /// `(b_i, c_i)` and centroid height.
    fn element(&self, t: &[usize; 3]) -> (f64, [f64; 3], [f64; 3], f64) {
        let [p0, p1, p2] = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
        let area = tri_area(p0, p1, p2);
        let inv = 1.0 / (2.0 * area);
        let b = [(p1.y - p2.y) * inv, (p2.y - p0.y) * inv, (p0.y - p1.y) * inv];
        let c = [(p2.x - p1.x) * inv, (p0.x - p2.x) * inv, (p1.x - p0.x) * inv];
        (area, b, c, (p0.y + p1.y + p2.y) / 3.0)
    }
}

/// Nodal displacements.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField(pub Vec<[f64; 2]>);

impl DisplacementField {
    pub fn zeros(n: usize) -> Self {
        DisplacementField(vec![[0.0; 2]; n])
    }

    fn flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|v| [v[0], v[1]]).collect()
    }
}

/// `∫_Ω W(E(v) − E₀) dx` for a P1 displacement.
pub fn elastic_energy(m: &FilmMesh, v: &DisplacementField, c: &ElasticityTensor) -> Result<f64, ElasticError> {
    if v.0.len() != m.nodes.len() {
        return Err(ElasticError::SizeMismatch { got: v.0.len(), expected: m.nodes.len() });
    }
    let mut s = NeumaierSum::new();
    for t in &m.triangles {
        let (area, b, cc, yc) = m.element(t);
        let mut g = [[0.0; 2]; 2];
        for k in 0..3 {
            let u = v.0[t[k]];
            g[0][0] += u[0] * b[k];
            g[0][1] += u[0] * cc[k];
            g[1][0] += u[1] * b[k];
            g[1][1] += u[1] * cc[k];
        }
        let e0 = mismatch_strain(yc, c);
        let a11 = g[0][0] - e0[0][0];
        let a22 = g[1][1] - e0[1][1];
        let a12 = 0.5 * (g[0][1] + g[1][0]) - e0[0][1];
        s.add(area * c.w(a11, a12, a22));
    }
    Ok(s.value())
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    fn from_triplets(n: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }
}

/// Quadratic form of the discrete energy: `E(v) = ½ vᵀKv − fᵀv + c₀`, with
/// DOFs ordered `(v₀ˣ, v₀ʸ, v₁ˣ, ...)`.
pub fn assemble(m: &FilmMesh, c: &ElasticityTensor) -> (CsrMatrix, Vec<f64>, f64) {
    let n = 2 * m.nodes.len();
    let (lam, mu) = (c.lambda, c.mu);
    let dmat = [[2.0 * mu + lam, lam, 0.0], [lam, 2.0 * mu + lam, 0.0], [0.0, 0.0, mu]];
    let mut trip = Vec::with_capacity(36 * m.triangles.len());
    let mut f = vec![0.0; n];
    let mut c0 = NeumaierSum::new();
    for t in &m.triangles {
        let (area, b, cc, yc) = m.element(t);
        let mut bm = [[0.0; 6]; 3];
        for k in 0..3 {
            bm[0][2 * k] = b[k];
            bm[1][2 * k + 1] = cc[k];
            bm[2][2 * k] = cc[k];
            bm[2][2 * k + 1] = b[k];
        }
        let mut db = [[0.0; 6]; 3];
        for i in 0..3 {
            for j in 0..6 {
                db[i][j] = (0..3).map(|k| dmat[i][k] * bm[k][j]).sum();
            }
        }
        let dofs = [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1];
        for i in 0..6 {
            for j in 0..6 {
                let kij: f64 = (0..3).map(|k| bm[k][i] * db[k][j]).sum();
                trip.push((dofs[i], dofs[j], area * kij));
            }
        }
        let e0 = mismatch_strain(yc, c);
        if e0[0][0] != 0.0 {
            let ev = [e0[0][0], 0.0, 0.0];
            let de: [f64; 3] = [dmat[0][0] * ev[0], dmat[1][0] * ev[0], dmat[2][0] * ev[0]];
            for i in 0..6 {
                f[dofs[i]] += area * (0..3).map(|k| bm[k][i] * de[k]).sum::<f64>();
            }
            c0.add(area * 0.5 * (ev[0] * de[0]));
        }
    }
    (CsrMatrix::from_triplets(n, trip), f, c0.value())
}

/// Dirichlet conditions on the substrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    /// `v = 0` on `y = -d`.
    #[default]
    ClampedBottom,
    /// `v = 0` on `y = -d` and on the lateral sides.
    ClampedBottomAndSides,
}

impl BoundaryCondition {
    pub fn is_fixed(&self, f: &NodeFlags) -> bool {
        f.bottom || (matches!(self, BoundaryCondition::ClampedBottomAndSides) && f.lateral)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub displacement: DisplacementField,
    pub energy: f64,
    pub iterations: usize,
    /// Final relative residual on the free DOFs.
    pub residual: f64,
}

/// Minimizes the discrete energy under the boundary condition by
/// Jacobi-preconditioned conjugate gradients.
pub fn equilibrium(m: &FilmMesh, c: &ElasticityTensor, bc: BoundaryCondition) -> Result<Equilibrium, ElasticError> {
    let (k, f, _) = assemble(m, c);
    let n = k.n;
    let free: Vec<bool> = (0..n).map(|i| !bc.is_fixed(&m.flags[i / 2])).collect();
    let diag = k.diagonal();
    let mask = |v: &mut [f64]| {
        for (x, &fr) in v.iter_mut().zip(&free) {
            if !fr {
                *x = 0.0;
            }
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut r = f.clone();
    mask(&mut r);
    let fnorm = dot(&r, &r).sqrt();
    let mut x = vec![0.0; n];
    if fnorm == 0.0 {
        return Ok(Equilibrium {
            energy: elastic_energy(m, &DisplacementField::zeros(m.nodes.len()), c)?,
            displacement: DisplacementField::zeros(m.nodes.len()),
            iterations: 0,
            residual: 0.0,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free[i] && diag[i] > 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    let max_iter = 20 * n;
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        k.mul(&p, &mut kp);
        mask(&mut kp);
        let pkp = dot(&p, &kp);
        if pkp <= 0.0 {
            break;
        }
        let alpha = rz / pkp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / fnorm;
        if rel <= 1e-10 {
            break;
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if rel > 1e-10 {
        return Err(ElasticError::SolverDiverged { iterations: it, residual: rel });
    }
    let disp = DisplacementField(x.chunks(2).map(|c| [c[0], c[1]]).collect());
    Ok(Equilibrium { energy: elastic_energy(m, &disp, c)?, displacement: disp, iterations: it, residual: rel })
}

/// Gradient `Kv − f` of the discrete energy, with fixed DOFs zeroed.
pub fn energy_gradient(m: &FilmMesh, c: &ElasticityTensor, bc: BoundaryCondition, v: &DisplacementField) -> Vec<f64> {
    let (k, f, _) = assemble(m, c);
    let x = v.flat();
    let mut g = vec![0.0; k.n];
    k.mul(&x, &mut g);
    for i in 0..k.n {
        g[i] = if bc.is_fixed(&m.flags[i / 2]) { 0.0 } else { g[i] - f[i] };
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_mesh_counts() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let m = mesh_film(&p, 1.0, 2, 2).unwrap();
        assert_eq!(m.nodes.len(), 15);
        assert_eq!(m.triangles.len(), 16);
        assert!((m.area() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn collapsed_columns_merge_nodes() {
        let p = Profile::polyline(vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)]).unwrap();
        let m = mesh_film(&p, 1.0, 2, 2).unwrap();
        // the first column keeps its substrate nodes and one interface node
        assert_eq!(m.nodes.len(), 3 + 5 + 5);
        assert!((m.area() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_field_energy_is_misfit_energy() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let m = mesh_film(&p, 1.0, 4, 4).unwrap();
        let c = ElasticityTensor::new(1.0, 1.0, 0.1).unwrap();
        let e = elastic_energy(&m, &DisplacementField::zeros(m.nodes.len()), &c).unwrap();
        assert!((e - c.w(0.1, 0.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn no_misfit_gives_zero_equilibrium() {
        let p = Profile::flat(0.0, 1.0, 1.0).unwrap();
        let m = mesh_film(&p, 1.0, 4, 4).unwrap();
        let c = ElasticityTensor::new(1.0, 1.0, 0.0).unwrap();
        let eq = equilibrium(&m, &c, BoundaryCondition::ClampedBottom).unwrap();
        assert_eq!(eq.energy, 0.0);
        assert!(eq.displacement.0.iter().all(|v| *v == [0.0, 0.0]));
    }

    #[test]
    fn rejects_indefinite_tensor() {
        assert!(ElasticityTensor::new(-2.0, 1.0, 0.0).is_err());
        assert!(ElasticityTensor::new(1.0, 0.0, 0.0).is_err());
    }
}
