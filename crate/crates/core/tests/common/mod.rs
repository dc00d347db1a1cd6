//! Reference computations that share no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use fraclap::{BoundaryMesh, Panel, Point};

/// Tanh-sinh rule on `[a, b]` with step `2^-level`. Endpoint singularities
/// are fine; `f` receives the point and its distances to `a` and `b`.
pub fn tanh_sinh(a: f64, b: f64, level: u32, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = half * f(mid, half, half) * PI / 2.0;
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let e = u.exp();
        // 1 - tanh(u) computed without cancellation
        let comp = 2.0 / (e * e + 1.0);
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        let d = half * comp;
        // what lies closer to the ends than this is far below double precision
        if d < 1e-150 * half || w * half < 1e-300 {
            break;
        }
        let (x_hi, x_lo) = (b - d, a + d);
        sum += half * w * (f(x_hi, b - a - d, d) + f(x_lo, d, b - a - d));
        k += 1;
    }
    sum * h
}

/// `∫_P ∫_Q |P - Q|^p` by nested tanh-sinh. Panels that coincide or share
/// a vertex are handled in local coordinates about the common point, so
/// distances near the singularity are computed without cancellation.
pub fn pair_integral_oracle(pi: &Panel, pj: &Panel, p: f64) -> f64 {
    const LEVEL: u32 = 6;
    let (hi, hj) = (pi.length(), pj.length());
    if pi == pj {
        // |t - u|^p on [0, h]^2, inner split at u = t; the pieces only
        // depend on the distances from t to either end
        let piece = |len: f64| tanh_sinh(0.0, len, LEVEL, |_, d, _| d.powf(p));
        return tanh_sinh(0.0, hi, LEVEL, |_, to_a, to_b| piece(to_a) + piece(to_b));
    }
    let shared = [(pi.a, pj.a), (pi.a, pj.b), (pi.b, pj.a), (pi.b, pj.b)]
        .into_iter()
        .find(|(x, y)| x == y)
        .map(|(v, _)| v);
    if let Some(v) = shared {
        // P = v + t e1, Q = v + u e2
        let far = |q: &Panel| if q.a == v { q.b } else { q.a };
        let e1 = (far(pi) - v) * (1.0 / hi);
        let e2 = (far(pj) - v) * (1.0 / hj);
        let (c, s) = (e1.dot(e2), e1.cross(e2).abs());
        let dist = |t: f64, u: f64| ((t - u * c).powi(2) + (u * s).powi(2)).sqrt();
        let inner = |t: f64| {
            let split = (t * c).clamp(0.0, hj);
            let mut v = 0.0;
            if split > 0.0 {
                v += tanh_sinh(0.0, split, LEVEL, |u, _, _| dist(t, u).powf(p));
            }
            if split < hj {
                v += tanh_sinh(split, hj, LEVEL, |u, _, _| dist(t, u).powf(p));
            }
            v
        };
        // t is the distance to v, taken from the endpoint offset
        return tanh_sinh(0.0, hi, LEVEL, |_, t, _| inner(t));
    }
    let outer = |t: f64| {
        let x = pi.at(t);
        tanh_sinh(0.0, 1.0, LEVEL, |u, _, _| x.dist(pj.at(u)).powf(p))
    };
    hi * hj * tanh_sinh(0.0, 1.0, LEVEL, |t, _, _| outer(t))
}

/// Brute-force Slobodeckij seminorm of a piecewise-constant function:
/// `(Σ_{i≠j} (v_i - v_j)² ∫_{P_i} ∫_{P_j} |P - Q|^{-1-2α})^{1/2}`.
pub fn slobodeckij_oracle(values: &[f64], mesh: &BoundaryMesh, alpha: f64) -> f64 {
    let panels = mesh.panels();
    let mut sum = 0.0;
    for i in 0..panels.len() {
        for j in 0..panels.len() {
            let dv = values[i] - values[j];
            if i == j || dv == 0.0 {
                continue;
            }
            sum += dv * dv * pair_integral_oracle(&panels[i], &panels[j], -1.0 - 2.0 * alpha);
        }
    }
    sum.sqrt()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Lanczos approximation of `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

pub fn riesz_constant(sigma: f64) -> f64 {
    PI.powf(sigma - 1.0) * gamma((2.0 - sigma) / 2.0) / gamma(sigma / 2.0)
}

/// Eigenvalue of `S_s` on the circle of radius `r` for the mode `cos(kθ)`,
/// from the Fourier coefficients of `|2 sin(θ/2)|^{2s-2}`.
pub fn circle_symbol_closed_form(k: i64, r: f64, s: f64) -> f64 {
    let k = k.unsigned_abs();
    // Γ(s - k) = Γ(s) / Π_{j=1}^{k} (s - j),  Γ(s + k) = Γ(s) Π_{j=0}^{k-1} (s + j)
    let mut ratio = 1.0;
    for j in 0..k {
        ratio *= (s - 1.0 - j as f64) / (s + j as f64);
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    riesz_constant(2.0 * s) * r.powf(2.0 * s - 1.0) * 2.0 * PI * sign * gamma(2.0 * s - 1.0) * ratio
        / (gamma(s) * gamma(s))
}

pub fn point(x1: f64, x2: f64) -> Point {
    Point::new(x1, x2)
}
