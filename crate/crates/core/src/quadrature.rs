//! Gauss–Legendre rules and the quadrature configuration shared by the
//! boundary-element routines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss–Legendre rule mapped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // symmetric pair on [-1, 1], mapped to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (a + h * t, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule on `panels` equal subintervals of `[a, b]`.
    pub fn integrate_composite(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| self.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &f))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Breakpoints of the geometric grading of `[0, len]` toward zero with
/// ratio 1/2: `0, len·2^-levels, …, len/2, len`.
pub fn graded_breakpoints(len: f64, levels: usize) -> Vec<f64> {
    let mut pts = Vec::with_capacity(levels + 2);
    pts.push(0.0);
    for k in (0..=levels).rev() {
        pts.push(len * 0.5f64.powi(k as i32));
    }
    pts
}

/// Quadrature knobs for the panel integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss points per direction on each (sub)cell.
    pub gauss_order: usize,
    /// Panels closer than this multiple of their size are treated as near.
    pub near_field_ratio: f64,
    /// Levels of geometric grading toward a singular point.
    pub graded_levels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            gauss_order: 8,
            near_field_ratio: 3.0,
            graded_levels: 8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gauss_order < 2 {
            return Err(Error::param("gauss_order", "must be at least 2"));
        }
        if !(self.near_field_ratio > 1.0 && self.near_field_ratio.is_finite()) {
            return Err(Error::param("near_field_ratio", "must be a finite number > 1"));
        }
        if self.graded_levels < 1 {
            return Err(Error::param("graded_levels", "must be at least 1"));
        }
        Ok(())
    }

    /// Twice the order and twice the grading depth.
    pub fn doubled(&self) -> Self {
        Self {
            gauss_order: 2 * self.gauss_order,
            graded_levels: 2 * self.graded_levels,
            ..*self
        }
    }
}

/// C^∞ cutoff equal to 1 on `[0, inner]` and 0 on `[outer, ∞)`.
pub fn smooth_cutoff(r: f64, inner: f64, outer: f64) -> f64 {
    if r <= inner {
        return 1.0;
    }
    if r >= outer {
        return 0.0;
    }
    let t = (outer - r) / (outer - inner);
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_for_polynomials() {
        for n in 1..=20 {
            let rule = GaussRule::new(n);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for deg in 0..2 * n {
                let exact = 1.0 / (deg as f64 + 1.0);
                let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_interior() {
        let rule = GaussRule::new(9);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > 0.0 && rule.nodes[8] < 1.0);
        assert_eq!(rule.nodes[4], 0.5);
    }

    #[test]
    fn grading() {
        assert_eq!(graded_breakpoints(1.0, 3), vec![0.0, 0.125, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn cutoff_is_monotone_and_bounded() {
        let mut last = 1.0;
        for i in 0..=100 {
            let r = i as f64 * 0.02;
            let c = smooth_cutoff(r, 0.5, 1.5);
            assert!((0.0..=1.0).contains(&c) && c <= last);
            last = c;
        }
        assert_eq!(smooth_cutoff(0.4, 0.5, 1.5), 1.0);
        assert_eq!(smooth_cutoff(1.5, 0.5, 1.5), 0.0);
        assert!((smooth_cutoff(1.0, 0.5, 1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        QuadratureConfig::default().validate().unwrap();
        let bad = QuadratureConfig { gauss_order: 1, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig { near_field_ratio: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig { graded_levels: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
