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

//! Convergence diagnostics for sequences of regular configurations.
//!
//! Profiles are compared through the Hausdorff distance between the
//! complements of their subgraphs (rasterized, with an a-posteriori bound)
//! and the `L¹` distance of the heights; measures through the weak-* gap on
//! a test-function bank; energies through `ℱ_k` against `𝒢` of the limit.

use crate::adatom::{weak_star_gap, AdatomMeasure, Bbox, MeasureError, TestFunctionBank};
use crate::energy::{self, EnergyError, RegularConfiguration};
use crate::envelope::{EnvelopeTable, SurfaceDensity};
use crate::geometry::Point;
use crate::numeric::{lsq_slope, NeumaierSum};
use crate::profile::Profile;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergenceError {
    #[error("profiles live on different domains")]
    DomainMismatch,
    #[error("raster resolution must be at least 2 (got {0})")]
    InvalidResolution(usize),
    #[error("empty sequence")]
    EmptySequence,
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Hausdorff distance estimate with its rasterization error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    pub error_bound: f64,
}

/// One-dimensional squared distance transform with sample spacing `h`
/// (lower envelope of parabolas rooted at the finite samples).
fn dt1d(f: &[f64], h: f64, out: &mut [f64]) {
    let mut v: Vec<usize> = Vec::with_capacity(f.len());
    let mut z: Vec<f64> = Vec::with_capacity(f.len());
    for q in (0..f.len()).filter(|&q| f[q].is_finite()) {
        let xq = q as f64 * h;
        let mut s = f64::NEG_INFINITY;
        while let Some(&p) = v.last() {
            let xp = p as f64 * h;
            s = ((f[q] + xq * xq) - (f[p] + xp * xp)) / (2.0 * (xq - xp));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
                s = f64::NEG_INFINITY;
            } else {
                break;
            }
        }
        v.push(q);
        z.push(s);
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, o) in out.iter_mut().enumerate() {
        let xq = q as f64 * h;
        while j + 1 < v.len() && z[j + 1] < xq {
            j += 1;
        }
        let d = xq - v[j] as f64 * h;
        *o = d * d + f[v[j]];
    }
}

/// Exact Euclidean distance (not squared) to the `true` cells of a
/// row-major `nx × ny` mask with spacings `dx`, `dy`.
fn edt(mask: &[bool], nx: usize, ny: usize, dx: f64, dy: f64) -> Vec<f64> {
    let mut g = vec![0.0; nx * ny];
    let mut col = vec![0.0; ny];
    let mut tmp = vec![0.0; ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = if mask[j * nx + i] { 0.0 } else { f64::INFINITY };
        }
        dt1d(&col, dy, &mut tmp);
        for j in 0..ny {
            g[j * nx + i] = tmp[j];
        }
    }
    let mut row = vec![0.0; nx];
    let mut tmp = vec![0.0; nx];
    for j in 0..ny {
        row.copy_from_slice(&g[j * nx..(j + 1) * nx]);
        dt1d(&row, dx, &mut tmp);
        for i in 0..nx {
            g[j * nx + i] = tmp[i].sqrt();
        }
    }
    g
}

/// Raster of the complement of the subgraph `{a < x < b, y < h(x)}` in
/// `bbox`: cell `(i, j)` is in the complement when its centre lies at or
/// above the minimum of the lower semicontinuous `h` over the column, or
/// outside `(a, b)`.
fn complement_mask(p: &Profile, bbox: &Bbox, n: usize) -> Vec<bool> {
    let (a, b) = p.domain();
    let dx = (bbox.max.x - bbox.min.x) / n as f64;
    let dy = (bbox.max.y - bbox.min.y) / n as f64;
    let mut mask = vec![false; n * n];
    for i in 0..n {
        let x0 = bbox.min.x + i as f64 * dx;
        let x1 = x0 + dx;
        let xc = x0 + 0.5 * dx;
        let level = if xc <= a || xc >= b { f64::NEG_INFINITY } else { p.min_on(x0.max(a), x1.min(b)) };
        for j in 0..n {
            let yc = bbox.min.y + (j as f64 + 0.5) * dy;
            mask[j * n + i] = yc >= level;
        }
    }
    mask
}

/// Hausdorff distance between the complements of the subgraphs of two
/// profiles inside `bbox`, on an `n × n` raster. The lateral lines
/// `x = a` and `x = b` belong to both complements.
pub fn hausdorff_complement_distance(pa: &Profile, pb: &Profile, bbox: &Bbox, n: usize) -> Result<HausdorffEstimate, ConvergenceError> {
    if n < 2 {
        return Err(ConvergenceError::InvalidResolution(n));
    }
    if pa.domain() != pb.domain() {
        return Err(ConvergenceError::DomainMismatch);
    }
    let (a, b) = pa.domain();
    let dx = (bbox.max.x - bbox.min.x) / n as f64;
    let dy = (bbox.max.y - bbox.min.y) / n as f64;
    let ma = complement_mask(pa, bbox, n);
    let mb = complement_mask(pb, bbox, n);
    let da = edt(&ma, n, n, dx, dy);
    let db = edt(&mb, n, n, dx, dy);
    let mut h = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let xc = bbox.min.x + (i as f64 + 0.5) * dx;
            let lateral = (xc - a).abs().min((xc - b).abs());
            let k = j * n + i;
            if ma[k] {
                h = h.max(db[k].min(lateral));
            }
            if mb[k] {
                h = h.max(da[k].min(lateral));
            }
        }
    }
    Ok(HausdorffEstimate { value: h, error_bound: 2.0 * dx.hypot(dy) })
}

/// `∫_a^b |h_a − h_b| dx`, exact for piecewise-linear profiles.
pub fn l1_subgraph_distance(pa: &Profile, pb: &Profile) -> Result<f64, ConvergenceError> {
    if pa.domain() != pb.domain() {
        return Err(ConvergenceError::DomainMismatch);
    }
    let mut xs: Vec<f64> = pa.arcs().iter().chain(pb.arcs()).flatten().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut s = NeumaierSum::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let d0 = pa.right_limit(x0) - pb.right_limit(x0);
        let d1 = pa.left_limit(x1) - pb.left_limit(x1);
        let dx = x1 - x0;
        if d0 * d1 >= 0.0 {
            s.add(0.5 * dx * (d0.abs() + d1.abs()));
        } else {
            s.add(dx * (d0 * d0 + d1 * d1) / (2.0 * (d0.abs() + d1.abs())));
        }
    }
    Ok(s.value())
}

/// Acceptance tolerances for [`verify_sequence`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound on `|ℱ_k − 𝒢| / |𝒢|` at the last index.
    pub limsup_rel: f64,
    /// Allowed undershoot in `ℱ_k ≥ 𝒢 − liminf_abs`.
    pub liminf_abs: f64,
    /// Bound on area and mass errors, relative to `max(1, target)`.
    pub constraint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { limsup_rel: 0.05, liminf_abs: 1e-6, constraint: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub hausdorff_resolution: usize,
    /// Width scale of the Gaussian bumps in the default test bank.
    pub bank_cell: f64,
    /// Raster box; derived from the profiles when absent.
    pub bbox: Option<Bbox>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { hausdorff_resolution: 256, bank_cell: 0.25, bbox: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub hausdorff: f64,
    pub hausdorff_bound: f64,
    pub l1: f64,
    pub weakstar: f64,
    pub f_total: f64,
    pub g_limit: f64,
    pub mass_error: f64,
    pub area_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub limsup: bool,
    pub liminf: bool,
    pub constraints: bool,
    pub topology: bool,
}

impl Verdict {
    pub fn all(&self) -> bool {
        self.limsup && self.liminf && self.constraints && self.topology
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub verdict: Verdict,
    pub energy_slope: Option<f64>,
    pub hausdorff_slope: Option<f64>,
    pub weakstar_slope: Option<f64>,
    pub g_limit: f64,
}

impl ConvergenceReport {
    pub fn summary_line(&self) -> String {
        let f = |b: bool| if b { "pass" } else { "fail" };
        let last = self.rows.last();
        format!(
            "verdict={} limsup={} liminf={} constraints={} topology={} G={} F_last={} rel_err={}",
            f(self.verdict.all()),
            f(self.verdict.limsup),
            f(self.verdict.liminf),
            f(self.verdict.constraints),
            f(self.verdict.topology),
            self.g_limit,
            last.map_or(f64::NAN, |r| r.f_total),
            last.map_or(f64::NAN, |r| relative_gap(r.f_total, r.g_limit)),
        )
    }
}

fn relative_gap(f: f64, g: f64) -> f64 {
    (f - g).abs() / g.abs().max(f64::MIN_POSITIVE)
}

fn log_slope(ks: &[f64], v: &[f64]) -> Option<f64> {
    let ly: Vec<f64> = v.iter().map(|&e| e.max(1e-16).ln()).collect();
    let lx: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    lsq_slope(&lx, &ly)
}

/// Box `[a, b] × [-H/4, 5H/4]` with `H` the largest height among the profiles.
pub fn default_bbox<'a, I: IntoIterator<Item = &'a Profile>>(limit: &Profile, others: I) -> Bbox {
    let mut h = limit.max_height();
    for p in others {
        h = h.max(p.max_height());
    }
    if h <= 0.0 {
        h = 1.0;
    }
    let (a, b) = limit.domain();
    Bbox { min: Point::new(a, -0.25 * h), max: Point::new(b, 1.25 * h) }
}

/// Compares a sequence of regular configurations with a limit `(h, μ)`.
pub fn verify_sequence(
    seq: &[(u32, &RegularConfiguration)],
    limit: &Profile,
    limit_measure: &AdatomMeasure,
    env: &EnvelopeTable,
    psi: &SurfaceDensity,
    tol: &Tolerances,
    opts: &VerifyOptions,
) -> Result<ConvergenceReport, ConvergenceError> {
    if seq.is_empty() {
        return Err(ConvergenceError::EmptySequence);
    }
    let g = energy::total_energy_g(limit, limit_measure, None, env, None)?.total;
    let m = limit_measure.total_mass();
    let area = limit.area_above_zero();
    let bbox = opts.bbox.unwrap_or_else(|| default_bbox(limit, seq.iter().map(|(_, c)| c.profile())));
    let bank = TestFunctionBank::default_for(bbox, opts.bank_cell);
    let mut rows = Vec::with_capacity(seq.len());
    for (k, cfg) in seq {
        let hd = hausdorff_complement_distance(cfg.profile(), limit, &bbox, opts.hausdorff_resolution)?;
        rows.push(ConvergenceRow {
            k: *k,
            hausdorff: hd.value,
            hausdorff_bound: hd.error_bound,
            l1: l1_subgraph_distance(cfg.profile(), limit)?,
            weakstar: weak_star_gap(cfg.density(), limit_measure, &bank)?,
            f_total: energy::total_energy_f(cfg, Some(psi), None)?.total,
            g_limit: g,
            mass_error: (cfg.mass() - m).abs(),
            area_error: (cfg.area() - area).abs(),
        });
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let half = rows.len() - (rows.len() / 2).max(2).min(rows.len());
    let tail = |f: &dyn Fn(&ConvergenceRow) -> f64| -> Option<f64> {
        let v: Vec<f64> = rows[half..].iter().map(f).collect();
        log_slope(&ks[half..], &v)
    };
    let energy_slope = tail(&|r| (r.f_total - r.g_limit).abs());
    let hausdorff_slope = tail(&|r| r.hausdorff);
    let weakstar_slope = tail(&|r| r.weakstar);
    let last = rows.last().unwrap();
    let limsup = relative_gap(last.f_total, g) <= tol.limsup_rel && energy_slope.is_none_or(|s| s <= 0.0);
    let liminf = rows.iter().all(|r| r.f_total >= g - tol.liminf_abs);
    let constraints = rows
        .iter()
        .all(|r| r.mass_error <= tol.constraint * m.max(1.0) && r.area_error <= tol.constraint * area.max(1.0));
    let h_ok = last.hausdorff <= last.hausdorff_bound || hausdorff_slope.is_none_or(|s| s <= 0.0);
    let w_ok = last.weakstar <= 1e-12 || weakstar_slope.is_none_or(|s| s <= 0.0);
    Ok(ConvergenceReport {
        rows,
        verdict: Verdict { limsup, liminf, constraints, topology: h_ok && w_ok },
        energy_slope,
        hausdorff_slope,
        weakstar_slope,
        g_limit: g,
    })
}
