//! Dirichlet solver: Galerkin solve of `S_s φ = f`, evaluation of
//! `u = 𝒮_s φ`, and error measures in `L²(∂Ω)` and the Slobodeckij
//! seminorm.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{eval_potential, eval_trace, pair_integral, GalerkinMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};
use crate::kernel::FracParams;
use crate::quadrature::{GaussRule, QuadratureConfig};

/// Gauss order used for panel averages of analytic boundary data.
pub const RHS_GAUSS_ORDER: usize = 8;

/// Relative residual the dense solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Piecewise-constant density, one coefficient per panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    mesh_hash: String,
    s: f64,
    coefficients: Vec<f64>,
}

impl DensityVector {
    pub fn new(coeffs: Vec<f64>, mesh: &BoundaryMesh, params: &FracParams) -> Result<Self> {
        Self::with_hash(coeffs, mesh.len(), mesh.hash(), params)
    }

    fn with_hash(coeffs: Vec<f64>, n: usize, mesh_hash: String, params: &FracParams) -> Result<Self> {
        if coeffs.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("density", "coefficients must be finite"));
        }
        Ok(Self { mesh_hash, s: params.s(), coefficients: coeffs })
    }

    pub fn zeros(mesh: &BoundaryMesh, params: &FracParams) -> Self {
        Self::new(vec![0.0; mesh.len()], mesh, params).expect("zero density is valid")
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn mesh_hash(&self) -> &str {
        &self.mesh_hash
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Same mesh and order, new coefficients.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh_hash: self.mesh_hash.clone(),
            s: self.s,
            coefficients: self.coefficients.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Dirichlet data as per-panel averages `b_i = (1/h_i) ∫_{panel_i} f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    averages: Vec<f64>,
}

impl BoundaryData {
    pub fn from_averages(averages: Vec<f64>, mesh: &BoundaryMesh) -> Result<Self> {
        if averages.len() != mesh.len() {
            return Err(Error::ShapeMismatch { expected: mesh.len(), got: averages.len() });
        }
        if averages.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("boundary data", "averages must be finite"));
        }
        Ok(Self { averages })
    }

    /// Panel averages of an analytic trace by Gauss quadrature.
    pub fn from_fn(mesh: &BoundaryMesh, f: impl Fn(Point) -> f64) -> Result<Self> {
        let rule = GaussRule::new(RHS_GAUSS_ORDER);
        let averages = mesh
            .panels()
            .iter()
            .map(|p| rule.integrate(0.0, 1.0, |t| f(p.at(t))))
            .collect();
        Self::from_averages(averages, mesh)
    }

    pub fn averages(&self) -> &[f64] {
        &self.averages
    }
}

/// `rhs_i = ∫_{panel_i} f = h_i b_i`.
pub fn galerkin_rhs(data: &BoundaryData, mesh: &BoundaryMesh) -> Result<Vec<f64>> {
    if data.averages.len() != mesh.len() {
        return Err(Error::ShapeMismatch { expected: mesh.len(), got: data.averages.len() });
    }
    Ok(mesh
        .panels()
        .iter()
        .zip(&data.averages)
        .map(|(p, b)| p.length() * b)
        .collect())
}

/// Solves `A φ = rhs` by Cholesky. If the factorization fails the matrix is
/// not positive definite, which points at an assembly defect; a fully
/// pivoted LU is then tried and a warning logged.
pub fn solve_dirichlet(a: &GalerkinMatrix, rhs: &[f64]) -> Result<DensityVector> {
    let n = a.dim();
    if rhs.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: rhs.len() });
    }
    let matrix = a.entries();
    let b = DVector::from_column_slice(rhs);
    let solver: Box<dyn Fn(&DVector<f64>) -> Option<DVector<f64>>> =
        match matrix.clone().cholesky() {
            Some(chol) => Box::new(move |r| Some(chol.solve(r))),
            None => {
                log::warn!(
                    "Galerkin matrix (N = {n}, mesh {}) is not positive definite; \
                     falling back to pivoted LU",
                    a.mesh_hash()
                );
                let lu = matrix.clone().full_piv_lu();
                if !lu.is_invertible() {
                    return Err(Error::Singular(format!(
                        "Cholesky and pivoted LU both failed for N = {n}"
                    )));
                }
                Box::new(move |r| lu.solve(r))
            }
        };
    let mut x = solver(&b).ok_or_else(|| Error::Singular("solve failed".into()))?;
    let b_norm = b.norm();
    // one step of iterative refinement if the first solve falls short
    let residual = &b - matrix * &x;
    if residual.norm() > SOLVE_TOLERANCE * b_norm {
        if let Some(dx) = solver(&residual) {
            x += dx;
        }
    }
    let coeffs: Vec<f64> = x.iter().copied().collect();
    DensityVector::with_hash(coeffs, n, a.mesh_hash().to_string(), a.params())
}

fn check_shapes(density: &DensityVector, a: &GalerkinMatrix, rhs: &[f64], mesh: &BoundaryMesh) -> Result<()> {
    for got in [density.len(), a.dim(), rhs.len()] {
        if got != mesh.len() {
            return Err(Error::ShapeMismatch { expected: mesh.len(), got });
        }
    }
    Ok(())
}

/// Discrete `L²(∂Ω)` norm of `S_s φ - f` seen through the Galerkin test
/// functions: with `r = Aφ - rhs`, returns `sqrt(Σ r_i² / h_i)`.
pub fn trace_residual(
    density: &DensityVector,
    a: &GalerkinMatrix,
    rhs: &[f64],
    mesh: &BoundaryMesh,
) -> Result<f64> {
    check_shapes(density, a, rhs, mesh)?;
    let ax = a.mul_vec(density.coeffs());
    Ok(weighted_norm(mesh, ax.iter().zip(rhs).map(|(l, r)| l - r)))
}

/// [`trace_residual`] divided by the same norm of `rhs` (absolute when
/// `rhs` vanishes).
pub fn relative_trace_residual(
    density: &DensityVector,
    a: &GalerkinMatrix,
    rhs: &[f64],
    mesh: &BoundaryMesh,
) -> Result<f64> {
    let r = trace_residual(density, a, rhs, mesh)?;
    let scale = weighted_norm(mesh, rhs.iter().copied());
    Ok(if scale > 0.0 { r / scale } else { r })
}

fn weighted_norm(mesh: &BoundaryMesh, values: impl Iterator<Item = f64>) -> f64 {
    mesh.panels()
        .iter()
        .zip(values)
        .map(|(p, v)| v * v / p.length())
        .sum::<f64>()
        .sqrt()
}

/// Slobodeckij seminorm `(∫∫ |v(P) - v(Q)|² / |P - Q|^{1+2α} dP dQ)^{1/2}`
/// of the piecewise-constant function with the given panel values.
///
/// Panels sharing a vertex with different values make the integral diverge
/// for `α ≥ 1/2`; the result is then `+∞`.
pub fn slobodeckij_seminorm(
    samples: &[f64],
    mesh: &BoundaryMesh,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if samples.len() != mesh.len() {
        return Err(Error::ShapeMismatch { expected: mesh.len(), got: samples.len() });
    }
    quad.validate()?;
    let p = -1.0 - 2.0 * alpha;
    let panels = mesh.panels();
    let n = panels.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = 0.0;
            for j in (i + 1)..n {
                let jump = samples[i] - samples[j];
                if jump == 0.0 {
                    continue;
                }
                if mesh.adjacent(i, j) && alpha >= 0.5 {
                    return Ok(f64::INFINITY);
                }
                row += jump * jump * pair_integral(&panels[i], &panels[j], p, quad)?;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((2.0 * rows.iter().sum::<f64>()).sqrt())
}

/// A value of the layer potential off the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub point: Point,
    pub value: f64,
    pub dist: f64,
}

/// Evaluates `u = 𝒮_s φ` at each point; on-boundary points fail
/// individually.
pub fn evaluate_field(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    points: &[Point],
    quad: &QuadratureConfig,
) -> Vec<Result<FieldSample>> {
    points
        .par_iter()
        .map(|&x| {
            let value = eval_potential(density, mesh, params, x, quad)?;
            Ok(FieldSample { point: x, value, dist: mesh.distance_to_boundary(x) })
        })
        .collect()
}

/// Pointwise mismatch between the computed trace and the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceError {
    /// `‖S_s φ - f‖_{L²(∂Ω)}` by per-panel Gauss quadrature.
    pub l2: f64,
    /// Slobodeckij seminorm at `α = s - 1/2` of `S_s φ - f` sampled at
    /// panel midpoints.
    pub slobodeckij: f64,
}

/// Gauss points per panel for [`trace_error`].
pub const TRACE_ERROR_POINTS: usize = 4;

/// Measures how well `u = 𝒮_s φ` matches `f` on the boundary pointwise,
/// which the Galerkin conditions only enforce in the mean over each panel.
pub fn trace_error(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    f: &(dyn Fn(Point) -> f64 + Sync),
    quad: &QuadratureConfig,
) -> Result<TraceError> {
    let rule = GaussRule::new(TRACE_ERROR_POINTS);
    let per_panel: Vec<(f64, f64)> = (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let panel = mesh.panels()[i];
            let mut sq = 0.0;
            for (t, w) in rule.on(0.0, 1.0) {
                let e = eval_trace(density, mesh, params, i, t, quad)? - f(panel.at(t));
                sq += w * panel.length() * e * e;
            }
            let mid = eval_trace(density, mesh, params, i, 0.5, quad)? - f(panel.midpoint());
            Ok((sq, mid))
        })
        .collect::<Result<_>>()?;
    let l2 = per_panel.iter().map(|(sq, _)| sq).sum::<f64>().sqrt();
    let mids: Vec<f64> = per_panel.iter().map(|(_, m)| *m).collect();
    let slobodeckij = slobodeckij_seminorm(&mids, mesh, params.s() - 0.5, quad)?;
    Ok(TraceError { l2, slobodeckij })
}
