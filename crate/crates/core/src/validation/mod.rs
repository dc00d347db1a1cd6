//! Independent checks of the identities the solver relies on: the circle
//! symbol of the single layer operator, the mean-value property of
//! s-harmonic functions against the exit law of the 2s-stable process from
//! a ball, far-field decay, and positivity of the energy form.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{eval_potential, GalerkinMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};
use crate::kernel::{riesz_constant, FracParams};
use crate::quadrature::{graded_breakpoints, GaussRule, QuadratureConfig};
use crate::solve::DensityVector;

pub mod suite;

/// Eigenvalue of the single layer operator on the circle of radius `R`
/// for the Fourier mode `e^{ikθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleSymbol {
    pub k: i64,
    pub radius: f64,
    pub s: f64,
    pub lambda: f64,
}

/// `λ_k = c(2,2s) R^{2s-1} ∫_0^{2π} (2 sin(θ/2))^{2s-2} cos(kθ) dθ`.
///
/// The integrand is folded onto `[0, π]` and `θ = π t^{1/(2s-1)}` removes
/// the endpoint singularity; `quad_order` is the Gauss order per panel.
pub fn circle_symbol(k: i64, radius: f64, s: f64, quad_order: usize) -> Result<CircleSymbol> {
    let params = FracParams::new(s)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param("R", format!("must be positive, got {radius}")));
    }
    if quad_order < 2 {
        return Err(Error::param("quad_order", "must be at least 2"));
    }
    let q = 1.0 / (2.0 * s - 1.0);
    let kf = k.unsigned_abs() as f64;
    let panels = 8 + (kf * q).ceil() as usize;
    let rule = GaussRule::new(quad_order);
    let integrand = |t: f64| {
        let theta = PI * t.powf(q);
        let sinc = if theta == 0.0 {
            1.0
        } else {
            2.0 * (0.5 * theta).sin() / theta
        };
        sinc.powf(2.0 * s - 2.0) * (kf * theta).cos()
    };
    let integral = 2.0 * PI.powf(2.0 * s - 1.0) * q * rule.integrate_composite(0.0, 1.0, panels, integrand);
    if !integral.is_finite() {
        return Err(Error::QuadratureBudget { context: format!("circle symbol k = {k}") });
    }
    Ok(CircleSymbol {
        k,
        radius,
        s,
        lambda: params.c2s() * radius.powf(2.0 * s - 1.0) * integral,
    })
}

/// Eigenvalue of a circulant Galerkin matrix for mode `k`:
/// `Σ_m A_{0m} cos(2π k m / N)`.
pub fn circulant_eigenvalue(a: &GalerkinMatrix, k: i64) -> f64 {
    let n = a.dim();
    (0..n)
        .map(|m| {
            let phase = 2.0 * PI * ((k * m as i64).rem_euclid(n as i64)) as f64 / n as f64;
            a.entries()[(0, m)] * phase.cos()
        })
        .sum()
}

/// Quadrature for the exit distribution of the isotropic 2s-stable process
/// started at the center of `B_r(z)`.
///
/// The exit density is proportional to `r^{2s} / ((|y-z|² - r²)^s |y-z|²)`.
/// With `w = r²/|y-z|²` it becomes a `Beta(s, 1-s)` law in `w` times the
/// uniform law in angle, which the rule integrates over the whole exterior
/// (no truncation). Nodes are graded toward both ends of the `w` range.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMeanValueRule {
    pub center: Point,
    pub radius: f64,
    pub s: f64,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    /// Sum of the weights before renormalization.
    pub raw_mass: f64,
}

impl BallMeanValueRule {
    pub fn new(center: Point, radius: f64, s: f64, quad: &QuadratureConfig) -> Result<Self> {
        FracParams::new(s)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("r", format!("must be positive, got {radius}")));
        }
        quad.validate()?;
        let rule = GaussRule::new(quad.gauss_order);
        let beta = PI / (PI * s).sin();
        // each substitution leaves the other endpoint's singularity just past
        // the top of its range, so grade toward both ends
        let cells = |len: f64| {
            let mut pts = graded_breakpoints(0.5 * len, quad.graded_levels);
            pts.extend(graded_breakpoints(0.5 * len, 4).iter().rev().skip(1).map(|x| len - x));
            pts
        };

        // (w, weight) pairs for ∫_0^1 w^{s-1} (1-w)^{-s} g(w) dw / B(s, 1-s)
        let mut radial = Vec::new();
        // w = v^{1/s} on [0, 1/2]
        let v_max = 0.5f64.powf(s);
        for c in cells(v_max).windows(2) {
            for (v, wt) in rule.on(c[0], c[1]) {
                let w = v.powf(1.0 / s);
                radial.push((w, wt * (1.0 - w).powf(-s) / s / beta));
            }
        }
        // 1 - w = z^{1/(1-s)} on [1/2, 1]
        let z_max = 0.5f64.powf(1.0 - s);
        for c in cells(z_max).windows(2) {
            for (z, wt) in rule.on(c[0], c[1]) {
                let w = 1.0 - z.powf(1.0 / (1.0 - s));
                radial.push((w, wt * w.powf(s - 1.0) / (1.0 - s) / beta));
            }
        }

        let angles = 16 * quad.gauss_order;
        let mut nodes = Vec::with_capacity(radial.len() * angles);
        let mut weights = Vec::with_capacity(radial.len() * angles);
        for &(w, wt) in &radial {
            let rho = radius / w.sqrt();
            for k in 0..angles {
                let theta = 2.0 * PI * (k as f64 + 0.5) / angles as f64;
                nodes.push(center + Point::polar(rho, theta));
                weights.push(wt / angles as f64);
            }
        }
        let raw_mass: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= raw_mass;
        }
        Ok(Self { center, radius, s, nodes, weights, raw_mass })
    }

    pub fn apply(&self, u: &(dyn Fn(Point) -> Result<f64> + Sync)) -> Result<f64> {
        let values: Vec<f64> = self.nodes.par_iter().map(|&y| u(y)).collect::<Result<_>>()?;
        Ok(values.iter().zip(&self.weights).map(|(v, w)| v * w).sum())
    }
}

/// Average of `u` against the exit law from `B_r(z)` started at `z`. For an
/// s-harmonic `u` on the ball this reproduces `u(z)`.
pub fn ball_mean_value(
    u: &(dyn Fn(Point) -> Result<f64> + Sync),
    z: Point,
    r: f64,
    s: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    BallMeanValueRule::new(z, r, s, quad)?.apply(u)
}

/// Mean-value test of `u = 𝒮_s φ` on `B_r(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicityCheck {
    pub center: Point,
    pub radius: f64,
    pub value: f64,
    pub mean: f64,
}

impl HarmonicityCheck {
    pub fn relative_residual(&self) -> f64 {
        (self.mean - self.value).abs() / self.value.abs().max(1e-12)
    }
}

pub fn harmonicity_check(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    z: Point,
    r: f64,
    quad: &QuadratureConfig,
) -> Result<HarmonicityCheck> {
    let dist = mesh.distance_to_boundary(z);
    if !(dist > r) {
        return Err(Error::param(
            "r",
            format!("ball B_{r}({z}) must stay off the boundary (distance {dist})"),
        ));
    }
    let u = |y: Point| eval_potential(density, mesh, params, y, quad);
    let value = u(z)?;
    let mean = ball_mean_value(&u, z, r, params.s(), quad)?;
    Ok(HarmonicityCheck { center: z, radius: r, value, mean })
}

/// `(|x|, |x|^{2-2s} u(x))` along the ray at `angle` from the origin.
pub fn decay_profile(
    density: &DensityVector,
    mesh: &BoundaryMesh,
    params: &FracParams,
    radii: &[f64],
    angle: f64,
    quad: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>> {
    let min = 2.0 * mesh.diameter();
    radii
        .iter()
        .map(|&r| {
            if !(r > min) {
                return Err(Error::param("radii", format!("{r} is not beyond 2 x diameter = {min}")));
            }
            let u = eval_potential(density, mesh, params, Point::polar(r, angle), quad)?;
            Ok((r, u * r.powf(params.kernel_exponent())))
        })
        .collect()
}

/// The discrete pairing `<φ, S_s φ> = φᵀ A φ`.
pub fn energy_form(density: &DensityVector, a: &GalerkinMatrix) -> Result<f64> {
    if density.len() != a.dim() {
        return Err(Error::ShapeMismatch { expected: a.dim(), got: density.len() });
    }
    let phi = density.coeffs();
    Ok(a.mul_vec(phi).iter().zip(phi).map(|(l, r)| l * r).sum())
}

/// `∫_0^∞ r^{β-1} e^{-π r²} dr` without the Gamma function: power series
/// on `[0, 1]`, composite Gauss on `[1, 8]` (the rest is below 1e-80).
fn gaussian_radial_moment(beta: f64) -> f64 {
    let mut head = 0.0;
    let mut term = 1.0;
    for k in 0..80 {
        head += term / (beta + 2.0 * k as f64);
        term *= -PI / (k as f64 + 1.0);
    }
    let rule = GaussRule::new(20);
    let tail = rule.integrate_composite(1.0, 8.0, 28, |r| r.powf(beta - 1.0) * (-PI * r * r).exp());
    head + tail
}

/// Both sides of `∫ c(2,σ)|x|^{σ-2} ψ = ∫ |ξ|^{-σ} ψ̂` for the self-dual
/// Gaussian `ψ = e^{-π|x|²}`, as radial integrals.
pub fn gaussian_normalization_sides(sigma: f64) -> Result<(f64, f64)> {
    let c = riesz_constant(2, sigma)?;
    let lhs = c * 2.0 * PI * gaussian_radial_moment(sigma);
    let rhs = 2.0 * PI * gaussian_radial_moment(2.0 - sigma);
    Ok((lhs, rhs))
}

/// One line of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRecord {
    pub name: String,
    pub inputs: serde_json::Value,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ValidationRecord {
    /// Passes when `value` is within `tolerance` of `reference`.
    pub fn within(
        name: impl Into<String>,
        inputs: serde_json::Value,
        value: f64,
        reference: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            inputs,
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }

    /// Passes when `value > reference`.
    pub fn above(name: impl Into<String>, inputs: serde_json::Value, value: f64, reference: f64) -> Self {
        Self {
            name: name.into(),
            inputs,
            value,
            reference,
            tolerance: 0.0,
            pass: value > reference,
        }
    }
}
