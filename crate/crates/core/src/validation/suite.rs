//! The full validation suite behind `fraclap validate`.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    circle_symbol, decay_profile, energy_form, gaussian_normalization_sides, harmonicity_check,
    ValidationRecord,
};
use crate::assembly::{assemble, eval_potential, GalerkinMatrix};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point};
use crate::kernel::{semigroup_residual, FracParams};
use crate::quadrature::QuadratureConfig;
use crate::solve::{
    galerkin_rhs, relative_trace_residual, solve_dirichlet, BoundaryData, DensityVector,
    SOLVE_TOLERANCE,
};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-10;
pub const SEMIGROUP_TOLERANCE: f64 = 1e-3;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const DIAGONALIZATION_TOLERANCE: f64 = 0.05;
pub const HARMONICITY_TOLERANCE: f64 = 1e-2;
pub const DECAY_TOLERANCE: f64 = 0.02;

/// Knobs of the validation suite; the defaults are the full suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Order used for the circle Dirichlet problems.
    pub s: f64,
    pub fleet_panels: Vec<usize>,
    pub fleet_orders: Vec<f64>,
    /// Add the unit square and the L-shape to the fleet.
    pub polygons: bool,
    pub energy_samples: usize,
    pub seed: u64,
    pub diagonal_panels: Vec<usize>,
    pub diagonal_modes: Vec<i64>,
    pub harmonic_panels: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            s: 0.75,
            fleet_panels: vec![16, 32, 64, 128, 256, 512],
            fleet_orders: vec![0.6, 0.75, 0.9],
            polygons: true,
            energy_samples: 100,
            seed: 20_240_917,
            diagonal_panels: vec![64, 128, 256],
            diagonal_modes: vec![0, 1, 2, 4],
            harmonic_panels: 256,
        }
    }
}

pub fn unit_square() -> BoundaryMesh {
    BoundaryMesh::polygon(&[
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])
    .expect("unit square is a valid polygon")
}

pub fn l_shape() -> BoundaryMesh {
    BoundaryMesh::polygon(&[
        Point::new(0.0, 0.0),
        Point::new(2.0, 0.0),
        Point::new(2.0, 1.0),
        Point::new(1.0, 1.0),
        Point::new(1.0, 2.0),
        Point::new(0.0, 2.0),
    ])
    .expect("L-shape is a valid polygon")
}

/// Fleet meshes with a short label each.
pub fn fleet(cfg: &SuiteConfig) -> Result<Vec<(String, BoundaryMesh)>> {
    let mut meshes = Vec::new();
    for &n in &cfg.fleet_panels {
        meshes.push((format!("circle N={n}"), BoundaryMesh::circle(1.0, n)?));
    }
    if cfg.polygons {
        let sq = unit_square();
        let l = l_shape();
        meshes.push(("square N=4".into(), sq.clone()));
        meshes.push(("square N=64".into(), sq.refine().refine().refine().refine()));
        meshes.push(("L-shape N=6".into(), l.clone()));
        meshes.push(("L-shape N=96".into(), l.refine().refine().refine().refine()));
    }
    Ok(meshes)
}

pub fn min_eigenvalue(a: &GalerkinMatrix) -> f64 {
    SymmetricEigen::new(a.entries().clone()).eigenvalues.min()
}

/// Random densities with entries uniform in `[-1, 1]`, never all zero.
pub fn random_densities(
    mesh: &BoundaryMesh,
    params: &FracParams,
    count: usize,
    seed: u64,
) -> Vec<DensityVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let c: Vec<f64> = (0..mesh.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            if c.iter().any(|&x| x != 0.0) {
                break DensityVector::new(c, mesh, params).expect("finite coefficients");
            }
        })
        .collect()
}

fn circle_cosine_problem(
    n: usize,
    k: i64,
    params: &FracParams,
    quad: &QuadratureConfig,
) -> Result<(BoundaryMesh, GalerkinMatrix, DensityVector)> {
    let mesh = BoundaryMesh::circle(1.0, n)?;
    let a = assemble(&mesh, params, quad)?;
    let data = BoundaryData::from_fn(&mesh, |x| (k as f64 * x.angle()).cos())?;
    let phi = solve_dirichlet(&a, &galerkin_rhs(&data, &mesh)?)?;
    Ok((mesh, a, phi))
}

/// Relative `L²(∂Ω)` distance between the P0 density and `cos(kθ)/λ_k`
/// sampled at panel midpoints.
pub fn diagonalization_error(mesh: &BoundaryMesh, phi: &DensityVector, k: i64, lambda: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, c) in mesh.panels().iter().zip(phi.coeffs()) {
        let exact = (k as f64 * p.midpoint().angle()).cos() / lambda;
        num += p.length() * (c - exact).powi(2);
        den += p.length() * exact * exact;
    }
    (num / den).sqrt()
}

pub fn harmonic_points() -> [Point; 5] {
    [
        Point::new(0.0, 0.0),
        Point::new(0.3, 0.1),
        Point::new(-0.5, 0.2),
        Point::new(0.1, -0.6),
        Point::new(0.7, 0.0),
    ]
}

/// Runs every check and returns one record per check.
pub fn run_suite(cfg: &SuiteConfig, quad: &QuadratureConfig) -> Result<Vec<ValidationRecord>> {
    quad.validate()?;
    let params = FracParams::new(cfg.s)?;
    let mut out = Vec::new();

    for sigma in [0.2, 0.5, 1.0, 1.5, 1.8] {
        let (lhs, rhs) = gaussian_normalization_sides(sigma)?;
        out.push(ValidationRecord::within(
            "kernel_normalization",
            json!({ "n": 2, "sigma": sigma }),
            (lhs - rhs) / rhs,
            0.0,
            NORMALIZATION_TOLERANCE,
        ));
    }

    let x = Point::new(1.0, 0.0);
    for (s1, s2) in [(0.6, 0.6), (0.8, 0.4), (0.5, 1.0)] {
        let r = semigroup_residual(2, s1, s2, x, quad)?;
        let r2 = semigroup_residual(2, s1, s2, x, &quad.doubled())?;
        let inputs = json!({ "s1": s1, "s2": s2, "x": [x.x1, x.x2] });
        out.push(ValidationRecord::within("semigroup", inputs.clone(), r.abs(), 0.0, SEMIGROUP_TOLERANCE));
        out.push(ValidationRecord::within(
            "semigroup_refinement",
            inputs,
            r2.abs(),
            0.0,
            0.5 * r.abs(),
        ));
    }

    let meshes = fleet(cfg)?;
    for &s in &cfg.fleet_orders {
        let p = FracParams::new(s)?;
        for (label, mesh) in &meshes {
            let a = assemble(mesh, &p, quad)?;
            let inputs = json!({ "mesh": label, "s": s });
            out.push(ValidationRecord::within(
                "spd_symmetry",
                inputs.clone(),
                a.asymmetry(),
                0.0,
                SYMMETRY_TOLERANCE,
            ));
            out.push(ValidationRecord::above("spd_min_eigenvalue", inputs.clone(), min_eigenvalue(&a), 0.0));
            let min_energy = random_densities(mesh, &p, cfg.energy_samples, cfg.seed)
                .iter()
                .map(|phi| energy_form(phi, &a))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            out.push(ValidationRecord::above(
                "energy_positivity",
                json!({ "mesh": label, "s": s, "samples": cfg.energy_samples }),
                min_energy,
                0.0,
            ));
        }
    }

    for &k in &cfg.diagonal_modes {
        let lambda = circle_symbol(k, 1.0, cfg.s, 16)?.lambda;
        let mut errors = Vec::new();
        for &n in &cfg.diagonal_panels {
            let (mesh, _, phi) = circle_cosine_problem(n, k, &params, quad)?;
            errors.push(diagonalization_error(&mesh, &phi, k, lambda));
        }
        let last = *errors.last().ok_or_else(|| Error::param("diagonal_panels", "is empty"))?;
        out.push(ValidationRecord::within(
            "circle_diagonalization",
            json!({ "k": k, "N": cfg.diagonal_panels.last(), "s": cfg.s }),
            last,
            0.0,
            DIAGONALIZATION_TOLERANCE,
        ));
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        out.push(ValidationRecord {
            name: "circle_diagonalization_monotone".into(),
            inputs: json!({ "k": k, "N": cfg.diagonal_panels, "errors": errors }),
            value: if monotone { 1.0 } else { 0.0 },
            reference: 1.0,
            tolerance: 0.0,
            pass: monotone,
        });
    }

    let mesh = BoundaryMesh::circle(1.0, cfg.harmonic_panels)?;
    let a = assemble(&mesh, &params, quad)?;
    let rhs = galerkin_rhs(&BoundaryData::from_fn(&mesh, |_| 1.0)?, &mesh)?;
    let phi = solve_dirichlet(&a, &rhs)?;
    out.push(ValidationRecord::within(
        "trace_residual",
        json!({ "N": mesh.len(), "s": cfg.s, "f": "1" }),
        relative_trace_residual(&phi, &a, &rhs, &mesh)?,
        0.0,
        SOLVE_TOLERANCE,
    ));

    for z in harmonic_points() {
        let r = 0.5 * mesh.distance_to_boundary(z);
        let check = harmonicity_check(&phi, &mesh, &params, z, r, quad)?;
        out.push(ValidationRecord::within(
            "harmonicity",
            json!({ "z": [z.x1, z.x2], "r": r, "u": check.value, "mean": check.mean }),
            check.relative_residual(),
            0.0,
            HARMONICITY_TOLERANCE,
        ));
    }

    let profile = decay_profile(&phi, &mesh, &params, &[100.0, 200.0], 0.3, quad)?;
    let (c100, c200) = (profile[0].1, profile[1].1);
    out.push(ValidationRecord::within(
        "far_field_decay",
        json!({ "radii": [100.0, 200.0], "compensated": [c100, c200] }),
        (c100 - c200).abs() / c200.abs(),
        0.0,
        DECAY_TOLERANCE,
    ));

    let zero = solve_dirichlet(&a, &vec![0.0; mesh.len()])?;
    out.push(ValidationRecord::within("zero_data_density", json!({ "N": mesh.len() }), zero.norm(), 0.0, 0.0));
    let field_max = harmonic_points()
        .iter()
        .chain(&[Point::new(3.0, 1.0)])
        .map(|&x| eval_potential(&zero, &mesh, &params, x, quad).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(ValidationRecord::within("zero_data_field", json!({ "N": mesh.len() }), field_max, 0.0, 0.0));

    let (bits_equal, solve_equal) = determinism(&mesh, &params, quad, &rhs)?;
    out.push(ValidationRecord {
        name: "determinism".into(),
        inputs: json!({ "N": mesh.len(), "threads": [1, 4], "solve_identical": solve_equal }),
        value: if bits_equal && solve_equal { 1.0 } else { 0.0 },
        reference: 1.0,
        tolerance: 0.0,
        pass: bits_equal && solve_equal,
    });

    Ok(out)
}

/// Assembles and solves under 1- and 4-thread pools and compares bits.
pub fn determinism(
    mesh: &BoundaryMesh,
    params: &FracParams,
    quad: &QuadratureConfig,
    rhs: &[f64],
) -> Result<(bool, bool)> {
    let run = |threads: usize| -> Result<(GalerkinMatrix, DensityVector)> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?;
        pool.install(|| {
            let a = assemble(mesh, params, quad)?;
            let phi = solve_dirichlet(&a, rhs)?;
            Ok((a, phi))
        })
    };
    let (a1, phi1) = run(1)?;
    let (a4, phi4) = run(4)?;
    let same_matrix = a1
        .entries()
        .iter()
        .zip(a4.entries().iter())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    let same_solution = phi1
        .coeffs()
        .iter()
        .zip(phi4.coeffs())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    Ok((same_matrix, same_solution))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = SuiteConfig {
            fleet_panels: vec![16, 32],
            fleet_orders: vec![0.75],
            energy_samples: 10,
            diagonal_panels: vec![32, 64],
            diagonal_modes: vec![0, 2],
            harmonic_panels: 64,
            ..Default::default()
        };
        let records = run_suite(&cfg, &QuadratureConfig::default()).unwrap();
        let failed: Vec<_> = records.iter().filter(|r| !r.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(records.iter().any(|r| r.name == "harmonicity"));
    }

    #[test]
    fn random_densities_are_reproducible() {
        let mesh = BoundaryMesh::circle(1.0, 8).unwrap();
        let p = FracParams::new(0.6).unwrap();
        let a = random_densities(&mesh, &p, 3, 7);
        let b = random_densities(&mesh, &p, 3, 7);
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
