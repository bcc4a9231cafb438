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

//! Surface energy densities and their envelopes.
//!
//! For a density `ψ` with `inf ψ > 0` this module computes the lower convex
//! envelope `ψ^cvx`, the contact threshold `s₀`, the recession slope `θ`,
//! the subadditive convex envelope `ψ̃` (equal to `ψ^cvx` on `[0, s₀]` and to
//! `θ s` beyond) and the cut density `ψ^c(s) = 2 ψ̃(s/2)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("surface density has non-positive infimum ({0})")]
    NonPositiveInfimum(f64),
    #[error("argument {0} is negative")]
    NegativeArgument(f64),
    #[error("invalid surface density table: {0}")]
    InvalidTable(String),
    #[error("invalid sample grid: {0}")]
    InvalidGrid(String),
}

/// Surface energy density `ψ : [0, ∞) → (0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfaceDensity {
    Constant { c: f64 },
    /// `α + β s²`.
    Quadratic { alpha: f64, beta: f64 },
    /// Piecewise-linear through `(s_i, values_i)` with `s_0 = 0`, continued
    /// by a ray of slope `tail_slope` past the last knot.
    Table { s: Vec<f64>, values: Vec<f64>, tail_slope: f64 },
}

impl SurfaceDensity {
    /// Tabulates `f` on `grid`; the tail continues with `tail_slope`.
    pub fn tabulate<F: Fn(f64) -> f64>(f: F, grid: SampleGrid, tail_slope: f64) -> SurfaceDensity {
        let s: Vec<f64> = grid.abscissae();
        let values = s.iter().map(|&s| f(s)).collect();
        SurfaceDensity::Table { s, values, tail_slope }
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        match self {
            SurfaceDensity::Constant { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(EnvelopeError::NonPositiveInfimum(*c));
                }
            }
            SurfaceDensity::Quadratic { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite()) {
                    return Err(EnvelopeError::InvalidTable("non-finite coefficient".into()));
                }
                if *beta < 0.0 {
                    return Err(EnvelopeError::NonPositiveInfimum(f64::NEG_INFINITY));
                }
                if *alpha <= 0.0 {
                    return Err(EnvelopeError::NonPositiveInfimum(*alpha));
                }
            }
            SurfaceDensity::Table { s, values, tail_slope } => {
                if s.len() < 2 || s.len() != values.len() {
                    return Err(EnvelopeError::InvalidTable("need at least two (s, value) rows".into()));
                }
                if s[0] != 0.0 {
                    return Err(EnvelopeError::InvalidTable("first abscissa must be 0".into()));
                }
                if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().any(|v| !v.is_finite()) {
                    return Err(EnvelopeError::InvalidTable("abscissae must increase strictly".into()));
                }
                if values.iter().any(|v| !v.is_finite()) || !tail_slope.is_finite() {
                    return Err(EnvelopeError::InvalidTable("non-finite value".into()));
                }
                if *tail_slope < 0.0 {
                    return Err(EnvelopeError::NonPositiveInfimum(f64::NEG_INFINITY));
                }
                let m = values.iter().copied().fold(f64::INFINITY, f64::min);
                if m <= 0.0 {
                    return Err(EnvelopeError::NonPositiveInfimum(m));
                }
            }
        }
        Ok(())
    }

    /// `ψ(s)` for `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            SurfaceDensity::Constant { c } => *c,
            SurfaceDensity::Quadratic { alpha, beta } => alpha + beta * s * s,
            SurfaceDensity::Table { s: xs, values, tail_slope } => {
                let n = xs.len();
                if s >= xs[n - 1] {
                    return values[n - 1] + tail_slope * (s - xs[n - 1]);
                }
                let i = xs.partition_point(|&x| x <= s).max(1);
                let t = (s - xs[i - 1]) / (xs[i] - xs[i - 1]);
                values[i - 1] + t * (values[i] - values[i - 1])
            }
        }
    }

    /// Right derivative at `s`.
    fn right_slope(&self, s: f64) -> f64 {
        match self {
            SurfaceDensity::Constant { .. } => 0.0,
            SurfaceDensity::Quadratic { beta, .. } => 2.0 * beta * s,
            SurfaceDensity::Table { s: xs, values, tail_slope } => {
                let n = xs.len();
                if s >= xs[n - 1] {
                    return *tail_slope;
                }
                let i = xs.partition_point(|&x| x <= s).max(1);
                (values[i] - values[i - 1]) / (xs[i] - xs[i - 1])
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceDensity::Constant { .. } => "constant",
            SurfaceDensity::Quadratic { .. } => "quadratic",
            SurfaceDensity::Table { .. } => "table",
        }
    }

    fn linear_beyond(&self, s: f64) -> bool {
        match self {
            SurfaceDensity::Constant { .. } => true,
            SurfaceDensity::Quadratic { beta, .. } => *beta == 0.0,
            SurfaceDensity::Table { s: xs, .. } => s >= *xs.last().unwrap(),
        }
    }
}

/// Uniform sampling of `[0, s_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub s_max: f64,
    pub points: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { s_max: 64.0, points: 4097 }
    }
}

impl SampleGrid {
    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if !(self.s_max.is_finite() && self.s_max > 0.0) || self.points < 2 {
            return Err(EnvelopeError::InvalidGrid(format!("s_max = {}, points = {}", self.s_max, self.points)));
        }
        Ok(())
    }

    pub fn abscissae(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n).map(|i| self.s_max * i as f64 / n as f64).collect()
    }
}

/// Convex piecewise-linear function on `[0, ∞)`: knots followed by a ray.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPwl {
    pub s: Vec<f64>,
    pub v: Vec<f64>,
    pub tail_slope: f64,
}

impl ConvexPwl {
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s >= self.s[n - 1] {
            return self.v[n - 1] + self.tail_slope * (s - self.s[n - 1]);
        }
        let i = self.s.partition_point(|&x| x <= s).max(1);
        let t = (s - self.s[i - 1]) / (self.s[i] - self.s[i - 1]);
        self.v[i - 1] + t * (self.v[i] - self.v[i - 1])
    }

    /// Knots `(s_lo, s_hi)` of the linear piece containing `s` in its interior.
    pub fn bracket(&self, s: f64) -> Option<(f64, f64)> {
        let n = self.s.len();
        if s <= self.s[0] || s >= self.s[n - 1] {
            return None;
        }
        let i = self.s.partition_point(|&x| x <= s);
        if self.s[i - 1] == s {
            return None;
        }
        Some((self.s[i - 1], self.s[i]))
    }
}

/// Sample points for the hull: the uniform grid, plus the table knots for
/// tables (so that piecewise-linear input is enveloped exactly).
fn samples(psi: &SurfaceDensity, grid: SampleGrid) -> (Vec<f64>, Vec<f64>, f64) {
    let mut s = grid.abscissae();
    if let SurfaceDensity::Table { s: xs, .. } = psi {
        s.extend_from_slice(xs);
        s.sort_by(f64::total_cmp);
        s.dedup();
    }
    let s_end = *s.last().unwrap();
    let v = s.iter().map(|&x| psi.eval(x)).collect();
    (s, v, psi.right_slope(s_end))
}

fn lower_hull(s: &[f64], v: &[f64], tail: f64) -> ConvexPwl {
    // the ray leaves from the last sample minimizing v - tail * s
    let mut j = 0;
    let mut best = f64::INFINITY;
    for i in 0..s.len() {
        let w = v[i] - tail * s[i];
        if w <= best {
            best = w;
            j = i;
        }
    }
    let mut hs: Vec<f64> = Vec::new();
    let mut hv: Vec<f64> = Vec::new();
    for i in 0..=j {
        while hs.len() >= 2 {
            let n = hs.len();
            let (ox, oy) = (hs[n - 2], hv[n - 2]);
            let (ax, ay) = (hs[n - 1], hv[n - 1]);
            let cross = (ax - ox) * (v[i] - oy) - (ay - oy) * (s[i] - ox);
            if cross <= 0.0 {
                hs.pop();
                hv.pop();
            } else {
                break;
            }
        }
        hs.push(s[i]);
        hv.push(v[i]);
    }
    ConvexPwl { s: hs, v: hv, tail_slope: tail }
}

/// Lower convex envelope of `ψ` computed from samples on `grid`.
pub fn convex_envelope(psi: &SurfaceDensity, grid: SampleGrid) -> Result<ConvexPwl, EnvelopeError> {
    psi.validate()?;
    grid.validate()?;
    let (s, v, tail) = samples(psi, grid);
    Ok(lower_hull(&s, &v, tail))
}

/// How the envelope quantities were obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    /// Closed-form `s₀`, `θ` and envelope values.
    pub closed_form: bool,
    /// `s₀ = ∞` was read off a sampled hull whose tail is not linear, so
    /// the true threshold may lie past the sampled range.
    pub nonlinear_tail: bool,
}

/// `ψ^cvx`, `s₀`, `θ` and the derived `ψ̃`, `ψ^c`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeTable {
    psi: SurfaceDensity,
    hull: ConvexPwl,
    s0: f64,
    theta: f64,
    pub provenance: Provenance,
}

fn threshold_from_hull(hull: &ConvexPwl) -> (f64, f64) {
    let mut best = f64::INFINITY;
    let mut s0 = f64::INFINITY;
    for i in 0..hull.s.len() {
        if hull.s[i] > 0.0 {
            let r = hull.v[i] / hull.s[i];
            if r < best {
                best = r;
                s0 = hull.s[i];
            }
        }
    }
    if hull.tail_slope < best {
        (f64::INFINITY, hull.tail_slope)
    } else {
        (s0, best)
    }
}

impl EnvelopeTable {
    /// Envelope from the sampled hull only, ignoring closed forms.
    pub fn from_grid(psi: &SurfaceDensity, grid: SampleGrid) -> Result<EnvelopeTable, EnvelopeError> {
        let hull = convex_envelope(psi, grid)?;
        let (s0, theta) = threshold_from_hull(&hull);
        let end = *hull.s.last().unwrap();
        let nonlinear_tail = s0.is_infinite() && !psi.linear_beyond(end.max(grid.s_max));
        Ok(EnvelopeTable {
            psi: psi.clone(),
            hull,
            s0,
            theta,
            provenance: Provenance { kind: psi.kind().into(), closed_form: false, nonlinear_tail },
        })
    }

    pub fn psi(&self) -> &SurfaceDensity {
        &self.psi
    }

    pub fn hull(&self) -> &ConvexPwl {
        &self.hull
    }

    /// `s₀`; `f64::INFINITY` when the recession slope is never attained.
    pub fn threshold_s0(&self) -> f64 {
        self.s0
    }

    pub fn recession_theta(&self) -> f64 {
        self.theta
    }

    /// `ψ(s)`.
    pub fn psi_at(&self, s: f64) -> f64 {
        self.psi.eval(s)
    }

    /// `ψ^cvx(s)`.
    pub fn psi_cvx(&self, s: f64) -> f64 {
        if self.provenance.closed_form {
            if let SurfaceDensity::Quadratic { .. } | SurfaceDensity::Constant { .. } = self.psi {
                return self.psi.eval(s);
            }
        }
        self.hull.eval(s)
    }

    /// `ψ̃(s)`.
    pub fn psi_tilde(&self, s: f64) -> Result<f64, EnvelopeError> {
        if !(s >= 0.0) {
            return Err(EnvelopeError::NegativeArgument(s));
        }
        Ok(if s <= self.s0 { self.psi_cvx(s) } else { self.theta * s })
    }

    /// `ψ^c(s) = 2 ψ̃(s/2)`.
    pub fn psi_c(&self, s: f64) -> Result<f64, EnvelopeError> {
        if !(s >= 0.0) {
            return Err(EnvelopeError::NegativeArgument(s));
        }
        Ok(2.0 * self.psi_tilde(0.5 * s)?)
    }

    /// Endpoints of the hull chord through `s` when `ψ(s)` lies strictly
    /// above `ψ^cvx(s)`, for `s < s₀`.
    pub fn contact_bracket(&self, s: f64) -> Option<(f64, f64)> {
        if !(s < self.s0) || self.provenance.closed_form {
            return None;
        }
        let gap = self.psi.eval(s) - self.hull.eval(s);
        if gap <= 1e-12 * self.psi.eval(s).abs().max(1.0) {
            return None;
        }
        self.hull.bracket(s)
    }
}

/// Builds `ψ̃` for `ψ`: closed forms for constant and quadratic densities,
/// the sampled hull otherwise.
pub fn subadditive_convex_envelope(psi: &SurfaceDensity, grid: SampleGrid) -> Result<EnvelopeTable, EnvelopeError> {
    let mut t = EnvelopeTable::from_grid(psi, grid)?;
    match *psi {
        SurfaceDensity::Constant { .. } => {
            t.s0 = f64::INFINITY;
            t.theta = 0.0;
            t.provenance.closed_form = true;
            t.provenance.nonlinear_tail = false;
        }
        SurfaceDensity::Quadratic { alpha, beta } => {
            if beta == 0.0 {
                t.s0 = f64::INFINITY;
                t.theta = 0.0;
            } else {
                t.s0 = (alpha / beta).sqrt();
                t.theta = 2.0 * (alpha * beta).sqrt();
            }
            t.provenance.closed_form = true;
            t.provenance.nonlinear_tail = false;
        }
        SurfaceDensity::Table { .. } => {}
    }
    Ok(t)
}

/// `ψ^c(s)`.
pub fn psi_c(env: &EnvelopeTable, s: f64) -> Result<f64, EnvelopeError> {
    env.psi_c(s)
}

/// `θ = lim ψ̃(s)/s`.
pub fn recession_theta(env: &EnvelopeTable) -> f64 {
    env.recession_theta()
}

/// Split `u = a + b` minimizing `ψ̃(a) + ψ̃(b)`. The midpoint is a minimizer
/// because `ψ̃` is convex; it is the one returned.
pub fn cut_split(u: f64, _env: &EnvelopeTable) -> Result<(f64, f64), EnvelopeError> {
    if !(u >= 0.0) {
        return Err(EnvelopeError::NegativeArgument(u));
    }
    Ok((0.5 * u, 0.5 * u))
}
