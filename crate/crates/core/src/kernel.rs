//! The Riesz kernel `Γ_{2s}(x) = c(2, 2s) |x|^{2s-2}` in the plane.
//!
//! The constant `c(n, σ) = π^{σ-n/2} Γ((n-σ)/2) / Γ(σ/2)` normalizes
//! `c(n, σ)|x|^{σ-n}` to have Fourier transform `|ξ|^{-σ}` under
//! `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{graded_breakpoints, smooth_cutoff, GaussRule, QuadratureConfig};

/// Ambient dimension.
pub const DIM: usize = 2;

/// Order `s ∈ (1/2, 1)` with its derived kernel constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracParams {
    s: f64,
    c2s: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.5 && s < 1.0) {
            return Err(Error::param("s", format!("must lie in (1/2, 1), got {s}")));
        }
        let sigma = 2.0 * s;
        if !(sigma > 0.0 && sigma < DIM as f64) {
            return Err(Error::param("s", "need 0 < 2s < n"));
        }
        let c2s = riesz_constant(DIM, sigma)?;
        debug_assert!(c2s > 0.0);
        Ok(Self { s, c2s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        DIM
    }

    pub fn sigma(&self) -> f64 {
        2.0 * self.s
    }

    /// `n - 2s`, the power of `1/|x|` in the kernel.
    pub fn kernel_exponent(&self) -> f64 {
        DIM as f64 - 2.0 * self.s
    }

    /// `c(2, 2s)`.
    pub fn c2s(&self) -> f64 {
        self.c2s
    }

    /// `Γ_{2s}` at distance `r > 0`.
    pub fn gamma_2s(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::param("r", format!("kernel is singular at r = {r}")));
        }
        Ok(self.kernel(r))
    }

    /// Unchecked kernel for hot loops; `r` must be positive.
    #[inline]
    pub(crate) fn kernel(&self, r: f64) -> f64 {
        self.c2s * r.powf(2.0 * self.s - 2.0)
    }
}

impl TryFrom<f64> for FracParams {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<FracParams> for f64 {
    fn from(p: FracParams) -> f64 {
        p.s
    }
}

/// `c(n, σ)` for `0 < σ < n`.
pub fn riesz_constant(n: usize, sigma: f64) -> Result<f64> {
    let nf = n as f64;
    if n == 0 || !(sigma > 0.0 && sigma < nf) {
        return Err(Error::param("sigma", format!("must lie in (0, {n}), got {sigma}")));
    }
    Ok(PI.powf(sigma - nf / 2.0) * gamma((nf - sigma) / 2.0) / gamma(sigma / 2.0))
}

/// Both sides of the composition law `I_{s1} I_{s2} = I_{s1+s2}` at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupCheck {
    /// `c(n,s1) c(n,s2) ∫ |x-y|^{s1-n} |y|^{s2-n} dy`
    pub lhs: f64,
    /// `c(n, s1+s2) |x|^{s1+s2-n}`
    pub rhs: f64,
}

impl SemigroupCheck {
    pub fn relative_residual(&self) -> f64 {
        (self.lhs - self.rhs) / self.rhs
    }
}

const SEMIGROUP_EVAL_CAP: usize = 50_000_000;

/// Relative residual of the Riesz composition law at `x`, with the plane
/// integral computed by quadrature.
pub fn semigroup_residual(
    n: usize,
    s1: f64,
    s2: f64,
    x: Point,
    quad: &QuadratureConfig,
) -> Result<f64> {
    Ok(semigroup_check(n, s1, s2, x, quad)?.relative_residual())
}

/// The plane integral is split with a smooth partition of unity: polar
/// coordinates about `0` and about `x` on cutoff disks of radius `0.45|x|`
/// (graded Gauss in the radius, trapezoid in the angle), polar coordinates
/// about `0` for the smooth remainder, and an algebraic substitution for
/// the tail beyond `1.45|x|`.
pub fn semigroup_check(
    n: usize,
    s1: f64,
    s2: f64,
    x: Point,
    quad: &QuadratureConfig,
) -> Result<SemigroupCheck> {
    if n != DIM {
        return Err(Error::param("n", format!("only n = {DIM} is supported")));
    }
    if !(s1 > 0.0 && s2 > 0.0 && s1 + s2 < n as f64) {
        return Err(Error::param("s1, s2", format!("need s1, s2 > 0 and s1 + s2 < {n}")));
    }
    let d = x.norm();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("x", "must be a finite nonzero point"));
    }
    quad.validate()?;

    let order = quad.gauss_order;
    let levels = quad.graded_levels;
    let angles = 32 * order;
    let mid_panels = 2 * order;
    let evals = angles * order * (2 * (levels + 1 + 4) + mid_panels) + order * 4;
    if evals > SEMIGROUP_EVAL_CAP {
        return Err(Error::QuadratureBudget {
            context: format!("semigroup integral needs {evals} evaluations"),
        });
    }

    let rule = GaussRule::new(order);
    let (a, b) = (s1 - 2.0, s2 - 2.0);
    let inner = 0.1 * d;
    let outer = 0.45 * d;
    let far = d + outer;
    let f = |y: Point| (x - y).norm().powf(a) * y.norm().powf(b);
    let ring = |center: Point, r: f64, g: &dyn Fn(Point) -> f64| {
        let dt = 2.0 * PI / angles as f64;
        (0..angles)
            .map(|k| g(center + Point::polar(r, k as f64 * dt)))
            .sum::<f64>()
            * dt
    };

    // disks about the two singular points: ∫ r^{s-1} χ(r) ring(r) dr, with the
    // singular factor |center - y|^{s-2} r = r^{s-1} kept separate
    let disk = |center: Point, other: Point, s_center: f64, e_other: f64| {
        let g = |y: Point| (y - other).norm().powf(e_other);
        let radial = |r: f64| r.powf(s_center - 1.0) * smooth_cutoff(r, inner, outer) * ring(center, r, &g);
        let cuts = graded_breakpoints(inner, levels);
        // innermost cell: r = h t^{1/s} absorbs the r^{s-1} factor exactly
        let h = cuts[1];
        let mut sum = h.powf(s_center) / s_center
            * rule.integrate(0.0, 1.0, |t| ring(center, h * t.powf(1.0 / s_center), &g));
        for w in cuts[1..].windows(2) {
            sum += rule.integrate(w[0], w[1], radial);
        }
        sum + rule.integrate_composite(inner, outer, 4, radial)
    };
    let near_origin = disk(Point::ORIGIN, x, s2, a);
    let near_x = disk(x, Point::ORIGIN, s1, b);

    let partition = |y: Point| {
        1.0 - smooth_cutoff(y.norm(), inner, outer) - smooth_cutoff((y - x).norm(), inner, outer)
    };
    let middle = rule.integrate_composite(inner, far, mid_panels, |r| {
        r * ring(Point::ORIGIN, r, &|y| partition(y) * f(y))
    });

    // r = far · u^{-1/p} turns the r^{-p-1} tail into a bounded integrand
    let p = 2.0 - s1 - s2;
    let tail_map = |u: f64| {
        let r = far * u.powf(-1.0 / p);
        let jac = far / p * u.powf(-1.0 / p - 1.0);
        r * ring(Point::ORIGIN, r, &f) * jac
    };
    let mut tail = 0.0;
    for w in graded_breakpoints(1.0, 4).windows(2) {
        tail += rule.integrate(w[0], w[1], tail_map);
    }

    let integral = near_origin + near_x + middle + tail;
    if !integral.is_finite() {
        return Err(Error::QuadratureBudget {
            context: "semigroup integral is not finite".into(),
        });
    }
    let nf = n as f64;
    let lhs = riesz_constant(n, s1)? * riesz_constant(n, s2)? * integral;
    let rhs = riesz_constant(n, s1 + s2)? * d.powf(s1 + s2 - nf);
    Ok(SemigroupCheck { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_at_half_dimension_is_one() {
        assert!((riesz_constant(2, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_matches_gamma_ratio() {
        let expected = PI.sqrt() * gamma(0.25) / gamma(0.75);
        assert!((riesz_constant(2, 1.5).unwrap() - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn constant_is_positive_on_grid() {
        for k in 1..200 {
            let sigma = k as f64 * 0.01;
            assert!(riesz_constant(2, sigma).unwrap() > 0.0);
        }
        assert!(riesz_constant(2, 0.0).is_err());
        assert!(riesz_constant(2, 2.0).is_err());
        assert!(riesz_constant(2, -0.3).is_err());
    }

    #[test]
    fn params_range() {
        assert!(FracParams::new(0.5).is_err());
        assert!(FracParams::new(1.0).is_err());
        assert!(FracParams::new(f64::NAN).is_err());
        let p = FracParams::new(0.75).unwrap();
        assert_eq!(p.sigma(), 1.5);
        assert_eq!(p.kernel_exponent(), 0.5);
        assert_eq!(p.n(), 2);
    }

    #[test]
    fn kernel_values() {
        let p = FracParams::new(0.75).unwrap();
        assert_eq!(p.gamma_2s(1.0).unwrap(), p.c2s());
        assert!((p.gamma_2s(4.0).unwrap() - p.c2s() / 2.0).abs() < 1e-15);
        assert!(p.gamma_2s(0.0).is_err());
        assert!(p.gamma_2s(-1.0).is_err());
    }

    #[test]
    fn kernel_homogeneity_and_monotonicity() {
        for s in [0.55, 0.75, 0.95] {
            let p = FracParams::new(s).unwrap();
            let mut last = f64::INFINITY;
            for k in 0..50 {
                let r = 0.01 * 1.3f64.powi(k);
                let g = p.gamma_2s(r).unwrap();
                assert!(g < last);
                last = g;
                let scaled = p.gamma_2s(2.0 * r).unwrap();
                let factor = 2f64.powf(2.0 * s - 2.0);
                assert!((scaled - factor * g).abs() <= 1e-14 * g);
                let slope = (scaled.ln() - g.ln()) / 2f64.ln();
                assert!((slope - (2.0 * s - 2.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn semigroup_rejects_bad_input() {
        let q = QuadratureConfig::default();
        let x = Point::new(1.0, 0.0);
        assert!(semigroup_residual(2, 1.2, 0.9, x, &q).is_err());
        assert!(semigroup_residual(2, 0.0, 0.9, x, &q).is_err());
        assert!(semigroup_residual(3, 0.6, 0.6, x, &q).is_err());
        assert!(semigroup_residual(2, 0.6, 0.6, Point::ORIGIN, &q).is_err());
        let huge = QuadratureConfig { gauss_order: 512, graded_levels: 512, ..q };
        assert!(matches!(
            semigroup_residual(2, 0.6, 0.6, x, &huge),
            Err(Error::QuadratureBudget { .. })
        ));
    }

    #[test]
    fn semigroup_default_budget() {
        let q = QuadratureConfig::default();
        let r = semigroup_residual(2, 0.6, 0.6, Point::new(1.0, 0.0), &q).unwrap();
        assert!(r.abs() <= 1e-3, "residual {r}");
    }

    #[test]
    fn semigroup_homogeneity() {
        let q = QuadratureConfig::default();
        let r1 = semigroup_residual(2, 0.7, 0.5, Point::new(0.6, 0.8), &q).unwrap();
        let r2 = semigroup_residual(2, 0.7, 0.5, Point::new(1.2, 1.6), &q).unwrap();
        assert!((r1 - r2).abs() < 1e-10, "{r1} vs {r2}");
    }
}
