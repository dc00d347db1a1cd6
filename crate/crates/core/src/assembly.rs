//! Galerkin discretization of the single layer operator with piecewise
//! constant densities, and evaluation of the layer potential.
//!
//! All panel integrals go through [`pair_integral`] / [`line_integral`],
//! which integrate the homogeneous kernel `|P - Q|^p` (no constant). The
//! Riesz kernel uses `p = 2s - 2`; the Slobodeckij seminorm reuses the same
//! routines with `p = -1 - 2α`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Panel, Point};
use crate::kernel::FracParams;
use crate::quadrature::{graded_breakpoints, GaussRule, QuadratureConfig};
use crate::solve::DensityVector;

/// Recursion depth beyond which near-field bisection stops and the
/// remaining piece is integrated directly.
const MAX_BISECTION_DEPTH: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    Identical,
    /// Share one vertex. `flip_i`/`flip_j` say whether the panel has to be
    /// reversed to start at the shared vertex.
    Adjacent { flip_i: bool, flip_j: bool },
    Disjoint,
}

pub fn classify(pi: &Panel, pj: &Panel) -> PairRelation {
    if pi == pj {
        return PairRelation::Identical;
    }
    for (flip_i, vi) in [(false, pi.a), (true, pi.b)] {
        for (flip_j, vj) in [(false, pj.a), (true, pj.b)] {
            if vi == vj {
                return PairRelation::Adjacent { flip_i, flip_j };
            }
        }
    }
    PairRelation::Disjoint
}

/// `∫_{pi} ∫_{pj} |P - Q|^p dQ dP`.
///
/// Identical panels use the closed form (requires `p > -1`); panels with a
/// shared vertex use tensor Gauss on a geometric grading toward the vertex,
/// with the innermost corner block integrated in polar-like coordinates
/// that absorb the homogeneous singularity exactly (requires `p > -2`);
/// disjoint panels are bisected until well separated.
pub fn pair_integral(pi: &Panel, pj: &Panel, p: f64, quad: &QuadratureConfig) -> Result<f64> {
    let rule = GaussRule::new(quad.gauss_order);
    let value = match classify(pi, pj) {
        PairRelation::Identical => {
            if p <= -1.0 {
                return Err(Error::param("p", format!("self integral diverges for p = {p}")));
            }
            let h = pi.length();
            2.0 * h.powf(p + 2.0) / ((p + 1.0) * (p + 2.0))
        }
        PairRelation::Adjacent { flip_i, flip_j } => {
            if p <= -2.0 {
                return Err(Error::param("p", format!("adjacent integral diverges for p = {p}")));
            }
            let orient = |panel: &Panel, flip: bool| {
                if flip {
                    Panel::new(panel.b, panel.a)
                } else {
                    *panel
                }
            };
            adjacent_integral(&orient(pi, flip_i), &orient(pj, flip_j), p, quad, &rule)
        }
        PairRelation::Disjoint => disjoint_integral(pi, pj, p, quad, &rule, 0),
    };
    if !value.is_finite() {
        return Err(Error::QuadratureBudget {
            context: format!("panel pair integral is {value}"),
        });
    }
    Ok(value)
}

fn tensor_gauss(
    pi: &Panel,
    pj: &Panel,
    (t0, t1): (f64, f64),
    (u0, u1): (f64, f64),
    p: f64,
    rule: &GaussRule,
) -> f64 {
    let (hi, hj) = (pi.length(), pj.length());
    let mut sum = 0.0;
    for (t, wt) in rule.on(t0, t1) {
        let x = pi.at(t);
        let mut inner = 0.0;
        for (u, wu) in rule.on(u0, u1) {
            inner += wu * x.dist(pj.at(u)).powf(p);
        }
        sum += wt * inner;
    }
    sum * hi * hj
}

fn disjoint_integral(
    pi: &Panel,
    pj: &Panel,
    p: f64,
    quad: &QuadratureConfig,
    rule: &GaussRule,
    depth: usize,
) -> f64 {
    let size = pi.length().max(pj.length());
    let dist = pi.distance_to_panel(pj);
    if dist > quad.near_field_ratio * size || depth >= MAX_BISECTION_DEPTH {
        return tensor_gauss(pi, pj, (0.0, 1.0), (0.0, 1.0), p, rule);
    }
    let (i0, i1) = pi.split();
    let (j0, j1) = pj.split();
    [(i0, j0), (i0, j1), (i1, j0), (i1, j1)]
        .iter()
        .map(|(a, b)| disjoint_integral(a, b, p, quad, rule, depth + 1))
        .sum()
}

/// Both panels start at the shared vertex. The longer panel gets extra
/// grading levels so that cells near the vertex are about the same
/// physical size on both sides.
fn adjacent_integral(
    pi: &Panel,
    pj: &Panel,
    p: f64,
    quad: &QuadratureConfig,
    rule: &GaussRule,
) -> f64 {
    let extra = |h: f64, other: f64| (h / other).log2().round().clamp(0.0, 30.0) as usize;
    let (hi, hj) = (pi.length(), pj.length());
    let cuts_i = graded_breakpoints(1.0, quad.graded_levels + extra(hi, hj));
    let cuts_j = graded_breakpoints(1.0, quad.graded_levels + extra(hj, hi));
    let mut sum = 0.0;
    // grading level major, Gauss index minor
    for (k, ti) in cuts_i.windows(2).enumerate() {
        for (l, uj) in cuts_j.windows(2).enumerate() {
            if k == 0 && l == 0 {
                sum += corner_block(pi, pj, cuts_i[1], cuts_j[1], p, rule);
            } else {
                sum += tensor_gauss(pi, pj, (ti[0], ti[1]), (uj[0], uj[1]), p, rule);
            }
        }
    }
    sum
}

/// `∫_0^{di} ∫_0^{dj} |t hi τi - u hj τj|^p hi hj du dt` for unit rays
/// `τi, τj` leaving the shared vertex. With `a = di hi`, `b = dj hj`,
/// homogeneity gives
/// `(a b / (p+2)) ∫_0^1 (|a τi - w b τj|^p + |w a τi - b τj|^p) dw`.
fn corner_block(pi: &Panel, pj: &Panel, di: f64, dj: f64, p: f64, rule: &GaussRule) -> f64 {
    let (hi, hj) = (pi.length(), pj.length());
    let ei = (pi.b - pi.a) * di;
    let ej = (pj.b - pj.a) * dj;
    let angular = |w: f64| (ei - ej * w).norm().powf(p) + (ei * w - ej).norm().powf(p);
    let mut s = 0.0;
    for c in graded_breakpoints(1.0, 3).windows(2) {
        s += rule.integrate(c[0], c[1], angular);
    }
    for c in graded_breakpoints(1.0, 3).windows(2) {
        // grade toward w = 1 as well, where a thin spike would be nearly singular
        s += rule.integrate(1.0 - c[1], 1.0 - c[0], angular);
    }
    0.5 * s * di * dj * hi * hj / (p + 2.0)
}

/// `∫_{panel} |x - Q|^p dQ` for `x` off the panel, bisecting toward `x`
/// while it is closer than `near_field_ratio` panel lengths.
pub fn line_integral(x: Point, panel: &Panel, p: f64, quad: &QuadratureConfig) -> f64 {
    let rule = GaussRule::new(quad.gauss_order);
    line_integral_rec(x, panel, p, quad, &rule, 0)
}

fn line_integral_rec(
    x: Point,
    panel: &Panel,
    p: f64,
    quad: &QuadratureConfig,
    rule: &GaussRule,
    depth: usize,
) -> f64 {
    let h = panel.length();
    if panel.distance_to(x) > quad.near_field_ratio * h || depth >= MAX_BISECTION_DEPTH {
        return h * rule.on(0.0, 1.0).map(|(t, w)| w * x.dist(panel.at(t)).powf(p)).sum::<f64>();
    }
    let (l, r) = panel.split();
    line_integral_rec(x, &l, p, quad, rule, depth + 1) + line_integral_rec(x, &r, p, quad, rule, depth + 1)
}

/// `∫_{panel} |P - Q|^p dQ` for `P = panel.at(t)` with `0 < t < 1`, in closed
/// form (`p > -1`).
pub fn self_line_integral(panel: &Panel, t: f64, p: f64) -> f64 {
    let h = panel.length();
    ((t * h).powf(p + 1.0) + ((1.0 - t) * h).powf(p + 1.0)) / (p + 1.0)
}

/// One entry of the Galerkin matrix: `∫_{pi} ∫_{pj} Γ_{2s}(P - Q) dQ dP`.
pub fn panel_pair_integral(
    params: &FracParams,
    pi: &Panel,
    pj: &Panel,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(params.c2s() * pair_integral(pi, pj, 2.0 * params.s() - 2.0, quad)?)
}

/// Dense symmetric Galerkin matrix of the single layer operator.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinMatrix {
    entries: DMatrix<f64>,
    params: FracParams,
    mesh_hash: String,
    quad: QuadratureConfig,
}

impl GalerkinMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn params(&self) -> &FracParams {
        &self.params
    }

    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }

    /// Largest `|A_ij - A_ji|` relative to `max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)]).abs());
            }
        }
        worst / self.max_abs()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Raw little-endian dump: `b"FLBM"`, `u32` N, two reserved `u32`
    /// words, then N² row-major `f64`.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let n = self.dim() as u32;
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&n.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        out.write_all(&0u32.to_le_bytes())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> MatrixSidecar {
        MatrixSidecar {
            format: "FLBM".into(),
            n: self.dim(),
            s: self.params.s(),
            mesh_hash: self.mesh_hash.clone(),
            quadrature: self.quad,
        }
    }
}

pub const MATRIX_MAGIC: &[u8; 4] = b"FLBM";
pub const MATRIX_HEADER_LEN: usize = 16;

/// JSON metadata written next to a matrix dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub format: String,
    pub n: usize,
    pub s: f64,
    pub mesh_hash: String,
    pub quadrature: QuadratureConfig,
}

/// Reads a matrix dump back as a dense row-major matrix.
pub fn read_matrix_binary(path: &Path) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() < MATRIX_HEADER_LEN || &bytes[..4] != MATRIX_MAGIC {
        return Err(Error::Format("missing FLBM header".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[MATRIX_HEADER_LEN..];
    if body.len() != n * n * 8 {
        return Err(Error::Format(format!(
            "expected {} bytes of matrix data for N = {n}, found {}",
            n * n * 8,
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(n, n, &values))
}

/// Assembles `A_ij = ∫_{panel_i} ∫_{panel_j} Γ_{2s}(P - Q) dQ dP`.
///
/// Entries on and above the diagonal are computed independently (in
/// parallel) and mirrored, so the result does not depend on the schedule.
pub fn assemble(
    mesh: &BoundaryMesh,
    params: &FracParams,
    quad: &QuadratureConfig,
) -> Result<GalerkinMatrix> {
    quad.validate()?;
    let n = mesh.len();
    let panels = mesh.panels();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    panel_pair_integral(params, &panels[i], &panels[j], quad).map_err(|e| {
                        Error::PanelPair {
                            i,
                            j,
                            source: Box::new(e),
                        }
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            entries[(i, i + k)] = v;
            entries[(i + k, i)] = v;
        }
    }
    Ok(GalerkinMatrix {
        entries,
        params: *params,
        mesh_hash: mesh.hash(),
        quad: *quad,
    })
}

fn check_density(density: &DensityVector, mesh: &BoundaryMesh) -> Result<()> {
    if density.len() != mesh.len() {
        return Err(Error::ShapeMismatch {
            expected: mesh.len(),
            got: density.len(),
        });
    }
    Ok(())
}

/// `𝒮_s φ(x) = Σ_j φ_j ∫_{panel_j} Γ_{2s}(x - Q) dQ` for `x` off the boundary.
pub fn eval_potential(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    x: Point,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_density(density, mesh)?;
    if !x.is_finite() {
        return Err(Error::param("x", "must be finite"));
    }
    if mesh.distance_to_boundary(x) == 0.0 {
        return Err(Error::OnBoundary { x1: x.x1, x2: x.x2 });
    }
    let p = 2.0 * params.s() - 2.0;
    let rule = GaussRule::new(quad.gauss_order);
    let sum: f64 = mesh
        .panels()
        .iter()
        .zip(density.coeffs())
        .filter(|(_, &phi)| phi != 0.0)
        .map(|(panel, &phi)| phi * line_integral_rec(x, panel, p, quad, &rule, 0))
        .sum();
    Ok(params.c2s() * sum)
}

/// Boundary trace `(S_s φ)(P)` at `P = panel_i.at(t)`, `0 < t < 1`.
pub fn eval_trace(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    panel: usize,
    t: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_density(density, mesh)?;
    if panel >= mesh.len() {
        return Err(Error::param("panel", format!("index {panel} out of range")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param("t", format!("must lie in (0, 1), got {t}")));
    }
    let p = 2.0 * params.s() - 2.0;
    let rule = GaussRule::new(quad.gauss_order);
    let x = mesh.panels()[panel].at(t);
    let sum: f64 = mesh
        .panels()
        .iter()
        .zip(density.coeffs())
        .enumerate()
        .filter(|(_, (_, &phi))| phi != 0.0)
        .map(|(j, (pj, &phi))| {
            let v = if j == panel {
                self_line_integral(pj, t, p)
            } else {
                line_integral_rec(x, pj, p, quad, &rule, 0)
            };
            phi * v
        })
        .sum();
    Ok(params.c2s() * sum)
}
