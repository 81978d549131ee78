use serde::{Deserialize, Serialize};

use super::coefficients::Coefficients;
use super::design::CellDesign;
use super::problems::{homogenize, solve_first_order, FirstOrder, MESO, MICRO};
use super::solver::CellSolver;
use crate::error::{HotsError, Result};
use crate::fem::mesh::{build_rect_mesh, Rect};
use crate::tensor::tensor2_max_abs;

/// Gap between the directly homogenized and the reiterated macro coefficients
/// for one micro-to-meso period ratio `1 / ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRow {
    pub ratio: usize,
    pub direct: Coefficients,
    pub reiterated: Coefficients,
    pub gap_k: f64,
    pub gap_c: f64,
    pub gap_beta: f64,
    pub gap_coupling: f64,
    pub gap_capacity: f64,
}

/// Reiterated macro coefficients at one temperature (first-order problems only).
pub fn reiterated_coefficients(design: &CellDesign, theta: f64) -> Result<Coefficients> {
    let mut barred = Vec::with_capacity(design.micro.len());
    for (c, cell) in design.micro.iter().enumerate() {
        let coeff = design.micro_coefficients(c, theta)?;
        let solver = CellSolver::new(&cell.mesh, design.boundary, &coeff)?;
        let fields = solve_first_order(&cell.mesh, &solver, &coeff, &MICRO)?;
        barred.push(homogenize(&cell.mesh, &coeff, &FirstOrder::of(&fields, &MICRO)));
    }
    let mesh = &design.meso.mesh;
    let coeff = design.meso_coefficients(theta, &barred)?;
    let solver = CellSolver::new(mesh, design.boundary, &coeff)?;
    let fields = solve_first_order(mesh, &solver, &coeff, &MESO)?;
    Ok(homogenize(mesh, &coeff, &FirstOrder::of(&fields, &MESO)))
}

/// Macro coefficients from the meso cell with the micro pattern tiled
/// `ratio` times per direction and resolved by `per_period` crossed cells per
/// micro period.
pub fn direct_coefficients(design: &CellDesign, theta: f64, ratio: usize, per_period: usize) -> Result<Coefficients> {
    const MAX_CELLS: usize = 40_000;
    let n = ratio * per_period;
    if n * n > MAX_CELLS {
        return Err(HotsError::Config(format!(
            "resolved meso cell with {n}x{n} cells exceeds the {MAX_CELLS}-cell guard"
        )));
    }
    let mesh = build_rect_mesh(Rect::UNIT, n, n, &[])?;
    let per_material = design.material_coefficients(theta)?;
    let coeff: Vec<Coefficients> = (0..mesh.n_triangles())
        .map(|t| per_material[design.resolved_material(mesh.centroid(t), 1.0, 1.0 / ratio as f64)])
        .collect();
    let solver = CellSolver::new(&mesh, design.boundary, &coeff)?;
    let fields = solve_first_order(&mesh, &solver, &coeff, &MESO)?;
    Ok(homogenize(&mesh, &coeff, &FirstOrder::of(&fields, &MESO)))
}

fn rel(d: f64, s: f64) -> f64 {
    if s > 0.0 {
        d / s
    } else {
        d
    }
}

/// Compare both paths for each ratio in `ratios`.
pub fn verify_coefficient_closeness(
    design: &CellDesign,
    theta: f64,
    ratios: &[usize],
    per_period: usize,
) -> Result<Vec<ClosenessRow>> {
    let reiterated = reiterated_coefficients(design, theta)?;
    ratios
        .iter()
        .map(|&ratio| {
            let direct = direct_coefficients(design, theta, ratio, per_period)?;
            let d = direct.combine(1.0, &reiterated, -1.0);
            Ok(ClosenessRow {
                ratio,
                direct,
                reiterated,
                gap_k: rel(tensor2_max_abs(&d.k), tensor2_max_abs(&reiterated.k)),
                gap_c: rel(d.stiffness.max_abs(), reiterated.stiffness.max_abs()),
                gap_beta: rel(tensor2_max_abs(&d.beta), tensor2_max_abs(&reiterated.beta)),
                gap_coupling: rel(tensor2_max_abs(&d.coupling), tensor2_max_abs(&reiterated.coupling)),
                gap_capacity: rel(d.capacity.abs(), reiterated.capacity.abs()),
            })
        })
        .collect()
}

/// Least-squares slope of `log(gap)` against `log(1 / ratio)`.
pub fn fitted_rate(ratios: &[usize], gaps: &[f64]) -> f64 {
    let xs: Vec<f64> = ratios.iter().map(|&r| (1.0 / r as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
