//! Right-hand sides and averages shared by the micro and meso levels.
//!
//! Both levels pose the same family of problems on their own cell with their
//! own element coefficients; only the symbols differ. Below, "element"
//! coefficients are the raw constituents on `Z` and the micro-homogenized
//! (or pure) ones on `Y`, while "homogenized" means the barred set on `Z`
//! and the hat set on `Y`.

use std::collections::BTreeMap;

use super::coefficients::Coefficients;
use super::ids::{CellProblemId, Symbol};
use super::solver::{cell_average, CellSolver, ElementOps, ThetaStencil};
use crate::error::Result;
use crate::fem::mesh::TriMesh;
use crate::fem::ElementLoad;

/// Nodal cell functions keyed by problem.
pub type FieldSet = BTreeMap<CellProblemId, Vec<f64>>;

/// Everything known about one cell at one temperature sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSample {
    pub coeff: Vec<Coefficients>,
    pub homogenized: Coefficients,
    pub fields: FieldSet,
}

/// Symbols of one level's problem family.
#[derive(Debug, Clone, Copy)]
pub struct LevelSymbols {
    pub heat: Symbol,
    pub thermal: Symbol,
    pub elastic: Symbol,
    pub elastic_pair: Symbol,
    pub heat_pair: Symbol,
    pub capacity: Symbol,
    pub coupling_pair: Symbol,
    pub heat_slope: Symbol,
    pub inertia: Symbol,
    pub elastic_slope: Symbol,
    pub thermal_slope: Symbol,
    pub mixed: Symbol,
}

pub const MICRO: LevelSymbols = LevelSymbols {
    heat: Symbol::R,
    thermal: Symbol::O,
    elastic: Symbol::T,
    elastic_pair: Symbol::T2,
    heat_pair: Symbol::R2,
    capacity: Symbol::AStar,
    coupling_pair: Symbol::EStar,
    heat_slope: Symbol::DStar,
    inertia: Symbol::FStar,
    elastic_slope: Symbol::U,
    thermal_slope: Symbol::QStar,
    mixed: Symbol::V,
};

pub const MESO: LevelSymbols = LevelSymbols {
    heat: Symbol::M0,
    thermal: Symbol::P0,
    elastic: Symbol::N0,
    elastic_pair: Symbol::N0Pair,
    heat_pair: Symbol::M0Pair,
    capacity: Symbol::A0,
    coupling_pair: Symbol::E0,
    heat_slope: Symbol::C0,
    inertia: Symbol::F0,
    elastic_slope: Symbol::Z0,
    thermal_slope: Symbol::Q0,
    mixed: Symbol::H0,
};

fn id(symbol: Symbol, idx: &[usize]) -> CellProblemId {
    CellProblemId::new(symbol, idx)
}

/// First-order functions of one level.
pub struct FirstOrder<'a> {
    pub heat: [&'a [f64]; 2],
    pub thermal: &'a [f64],
    /// `elastic[α][m]`
    pub elastic: [[&'a [f64]; 2]; 2],
}

impl<'a> FirstOrder<'a> {
    pub fn of(fields: &'a FieldSet, sym: &LevelSymbols) -> Self {
        let get = |i: CellProblemId| fields[&i].as_slice();
        FirstOrder {
            heat: [get(id(sym.heat, &[0])), get(id(sym.heat, &[1]))],
            thermal: get(id(sym.thermal, &[])),
            elastic: [
                [get(id(sym.elastic, &[0, 0])), get(id(sym.elastic, &[0, 1]))],
                [get(id(sym.elastic, &[1, 0])), get(id(sym.elastic, &[1, 1]))],
            ],
        }
    }
}

/// Solve the heat, thermal-stress and elastic first-order problems.
pub fn solve_first_order(
    mesh: &TriMesh,
    solver: &CellSolver,
    coeff: &[Coefficients],
    sym: &LevelSymbols,
) -> Result<FieldSet> {
    let nt = mesh.n_triangles();
    let mut fields = FieldSet::new();
    for a in 0..2 {
        let mut load = ElementLoad::zeros(nt, 1);
        for (t, c) in coeff.iter().enumerate() {
            for i in 0..2 {
                load.add_flux(t, 0, i, -c.k[i][a]);
            }
        }
        fields.insert(id(sym.heat, &[a]), solver.solve(mesh, &load)?);
    }
    let mut load = ElementLoad::zeros(nt, 2);
    for (t, c) in coeff.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                load.add_flux(t, i, j, -c.beta[i][j]);
            }
        }
    }
    fields.insert(id(sym.thermal, &[]), solver.solve(mesh, &load)?);
    for a in 0..2 {
        for m in 0..2 {
            let mut load = ElementLoad::zeros(nt, 2);
            for (t, c) in coeff.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        load.add_flux(t, i, j, -c.stiffness.at(i, j, m, a));
                    }
                }
            }
            fields.insert(id(sym.elastic, &[a, m]), solver.solve(mesh, &load)?);
        }
    }
    Ok(fields)
}

/// Cell averages of element coefficients corrected by first-order gradients.
pub fn homogenize(mesh: &TriMesh, coeff: &[Coefficients], first: &FirstOrder) -> Coefficients {
    let ops = ElementOps { mesh };
    let nt = mesh.n_triangles();
    let grad_heat: Vec<[[f64; 2]; 2]> =
        (0..nt).map(|t| [ops.grad(t, first.heat[0]), ops.grad(t, first.heat[1])]).collect();
    let grad_thermal: Vec<[[f64; 2]; 2]> = (0..nt).map(|t| ops.grad_vec(t, first.thermal)).collect();
    // grad_elastic[t][l][k] = ∇ of the elastic function with α = l, m = k
    let grad_elastic: Vec<[[[[f64; 2]; 2]; 2]; 2]> = (0..nt)
        .map(|t| {
            let mut g = [[[[0.0; 2]; 2]; 2]; 2];
            for (l, gl) in g.iter_mut().enumerate() {
                for (k, glk) in gl.iter_mut().enumerate() {
                    *glk = ops.grad_vec(t, first.elastic[l][k]);
                }
            }
            g
        })
        .collect();

    let mut h = Coefficients::ZERO;
    h.capacity = cell_average(mesh, |t| {
        let c = &coeff[t];
        let mut v = c.capacity;
        for i in 0..2 {
            for j in 0..2 {
                v -= c.coupling[i][j] * grad_thermal[t][i][j];
            }
        }
        v
    });
    h.rho = cell_average(mesh, |t| coeff[t].rho);
    for i in 0..2 {
        for j in 0..2 {
            h.k[i][j] = cell_average(mesh, |t| {
                let c = &coeff[t];
                c.k[i][j] + (0..2).map(|k| c.k[i][k] * grad_heat[t][j][k]).sum::<f64>()
            });
            h.beta[i][j] = cell_average(mesh, |t| {
                let c = &coeff[t];
                let mut v = c.beta[i][j];
                for k in 0..2 {
                    for l in 0..2 {
                        v += c.stiffness.at(i, j, k, l) * grad_thermal[t][k][l];
                    }
                }
                v
            });
            h.coupling[i][j] = cell_average(mesh, |t| {
                let c = &coeff[t];
                let mut v = c.coupling[i][j];
                for p in 0..2 {
                    for m in 0..2 {
                        v += c.coupling[p][m] * grad_elastic[t][j][i][p][m];
                    }
                }
                v
            });
            for k in 0..2 {
                for l in 0..2 {
                    h.stiffness.0[i][j][k][l] = cell_average(mesh, |t| {
                        let c = &coeff[t];
                        let mut v = c.stiffness.at(i, j, k, l);
                        for m in 0..2 {
                            for n in 0..2 {
                                v += c.stiffness.at(i, j, m, n) * grad_elastic[t][l][k][m][n];
                            }
                        }
                        v
                    });
                }
            }
        }
    }
    h
}

/// Differences across the θ-stencil of one level.
struct Slopes {
    coeff: Vec<Coefficients>,
    homogenized: Coefficients,
    heat: [Vec<f64>; 2],
    thermal: Vec<f64>,
    elastic: [[Vec<f64>; 2]; 2],
}

impl Slopes {
    fn new(st: &ThetaStencil, lo: &LevelSample, hi: &LevelSample, sym: &LevelSymbols) -> Self {
        let (fl, fh) = (FirstOrder::of(&lo.fields, sym), FirstOrder::of(&hi.fields, sym));
        let d = |a: &Coefficients, b: &Coefficients| b.combine(st.inv, a, -st.inv);
        Slopes {
            coeff: lo.coeff.iter().zip(&hi.coeff).map(|(a, b)| d(a, b)).collect(),
            homogenized: d(&lo.homogenized, &hi.homogenized),
            heat: [st.diff_vec(fl.heat[0], fh.heat[0]), st.diff_vec(fl.heat[1], fh.heat[1])],
            thermal: st.diff_vec(fl.thermal, fh.thermal),
            elastic: [
                [st.diff_vec(fl.elastic[0][0], fh.elastic[0][0]), st.diff_vec(fl.elastic[0][1], fh.elastic[0][1])],
                [st.diff_vec(fl.elastic[1][0], fh.elastic[1][0]), st.diff_vec(fl.elastic[1][1], fh.elastic[1][1])],
            ],
        }
    }
}

/// Second-order problems common to both levels, at sample `s`.
///
/// Macro-gradient terms `∂f/∂x_d` are taken as `(∂f/∂θ) ∂θ0/∂x_d`; each
/// such problem gets a trailing direction index `d` and its solution is
/// later contracted with the macro temperature gradient.
pub fn solve_second_order(
    mesh: &TriMesh,
    solver: &CellSolver,
    grid: &[f64],
    s: usize,
    samples: &[LevelSample],
    sym: &LevelSymbols,
) -> Result<FieldSet> {
    let nt = mesh.n_triangles();
    let ops = ElementOps { mesh };
    let st = ThetaStencil::at(grid, s);
    let cur = &samples[s];
    let (lo, hi) = (&samples[st.lo], &samples[st.hi]);
    let f = FirstOrder::of(&cur.fields, sym);
    let (f_lo, f_hi) = (FirstOrder::of(&lo.fields, sym), FirstOrder::of(&hi.fields, sym));
    let slope = Slopes::new(&st, lo, hi, sym);
    let hom = &cur.homogenized;
    let mut out = FieldSet::new();

    // T^{α1 α2}_{·m} and its meso analogue
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..2 {
                let mut load = ElementLoad::zeros(nt, 2);
                for (t, c) in cur.coeff.iter().enumerate() {
                    let g = ops.grad_vec(t, f.elastic[b][m]);
                    let w = ops.centroid_vec(t, f.elastic[b][m]);
                    for i in 0..2 {
                        let mut src = hom.stiffness.at(i, a, m, b) - c.stiffness.at(i, a, m, b);
                        for k in 0..2 {
                            for j in 0..2 {
                                src -= c.stiffness.at(i, a, k, j) * g[k][j];
                            }
                        }
                        load.add_source(t, i, src);
                        for j in 0..2 {
                            let flux: f64 = (0..2).map(|k| c.stiffness.at(i, j, k, a) * w[k]).sum();
                            load.add_flux(t, i, j, -flux);
                        }
                    }
                }
                out.insert(id(sym.elastic_pair, &[a, b, m]), solver.solve(mesh, &load)?);
            }
        }
    }

    // R_{α1 α2}
    for a in 0..2 {
        for b in 0..2 {
            let mut load = ElementLoad::zeros(nt, 1);
            for (t, c) in cur.coeff.iter().enumerate() {
                let g = ops.grad(t, f.heat[b]);
                let w = ops.centroid(t, f.heat[b]);
                load.add_source(t, 0, hom.k[a][b] - c.k[a][b] - c.k[a][0] * g[0] - c.k[a][1] * g[1]);
                for i in 0..2 {
                    load.add_flux(t, 0, i, -c.k[i][a] * w);
                }
            }
            out.insert(id(sym.heat_pair, &[a, b]), solver.solve(mesh, &load)?);
        }
    }

    // capacity defect
    {
        let mut load = ElementLoad::zeros(nt, 1);
        for (t, c) in cur.coeff.iter().enumerate() {
            let g = ops.grad_vec(t, f.thermal);
            let mut src = c.capacity - hom.capacity;
            for i in 0..2 {
                for j in 0..2 {
                    src -= c.coupling[i][j] * g[i][j];
                }
            }
            load.add_source(t, 0, src);
        }
        out.insert(id(sym.capacity, &[]), solver.solve(mesh, &load)?);
    }

    // coupling defect pairs
    for a in 0..2 {
        for b in 0..2 {
            let mut load = ElementLoad::zeros(nt, 1);
            for (t, c) in cur.coeff.iter().enumerate() {
                let g = ops.grad_vec(t, f.elastic[b][a]);
                let mut src = hom.coupling[a][b] - c.coupling[a][b];
                for i in 0..2 {
                    for j in 0..2 {
                        src -= c.coupling[i][j] * g[i][j];
                    }
                }
                load.add_source(t, 0, src);
            }
            out.insert(id(sym.coupling_pair, &[a, b]), solver.solve(mesh, &load)?);
        }
    }

    // heat problems driven by the macro temperature gradient
    for a in 0..2 {
        for d in 0..2 {
            let mut load = ElementLoad::zeros(nt, 1);
            for (t, c) in cur.coeff.iter().enumerate() {
                let flux_at = |smp: &LevelSample, heat: &[f64]| {
                    let g = ops.grad(t, heat);
                    let k = &smp.coeff[t].k;
                    k[d][0] * g[0] + k[d][1] * g[1]
                };
                let dflux = (flux_at(hi, f_hi.heat[a]) - flux_at(lo, f_lo.heat[a])) * st.inv;
                load.add_source(t, 0, slope.homogenized.k[d][a] - slope.coeff[t].k[d][a] - dflux);
                let w = ops.centroid(t, &slope.heat[a]);
                for i in 0..2 {
                    load.add_flux(t, 0, i, -c.k[i][d] * w);
                }
            }
            out.insert(id(sym.heat_slope, &[a, d]), solver.solve(mesh, &load)?);
        }
    }

    // inertia defect
    for a in 0..2 {
        let mut load = ElementLoad::zeros(nt, 2);
        for (t, c) in cur.coeff.iter().enumerate() {
            load.add_source(t, a, c.rho - hom.rho);
        }
        out.insert(id(sym.inertia, &[a]), solver.solve(mesh, &load)?);
    }

    // elastic problems driven by the macro temperature gradient
    for a in 0..2 {
        for m in 0..2 {
            for d in 0..2 {
                let mut load = ElementLoad::zeros(nt, 2);
                for (t, c) in cur.coeff.iter().enumerate() {
                    let stress_at = |smp: &LevelSample, field: &[f64], i: usize| {
                        let g = ops.grad_vec(t, field);
                        let cc = &smp.coeff[t].stiffness;
                        let mut v = 0.0;
                        for k in 0..2 {
                            for l in 0..2 {
                                v += cc.at(i, d, k, l) * g[k][l];
                            }
                        }
                        v
                    };
                    let w = ops.centroid_vec(t, &slope.elastic[a][m]);
                    for i in 0..2 {
                        let dstress =
                            (stress_at(hi, f_hi.elastic[a][m], i) - stress_at(lo, f_lo.elastic[a][m], i)) * st.inv;
                        load.add_source(
                            t,
                            i,
                            slope.homogenized.stiffness.at(i, d, m, a)
                                - slope.coeff[t].stiffness.at(i, d, m, a)
                                - dstress,
                        );
                        for j in 0..2 {
                            let flux: f64 = (0..2).map(|k| c.stiffness.at(i, j, k, d) * w[k]).sum();
                            load.add_flux(t, i, j, -flux);
                        }
                    }
                }
                out.insert(id(sym.elastic_slope, &[a, m, d]), solver.solve(mesh, &load)?);
            }
        }
    }

    // thermal-stress problems driven by the macro temperature gradient
    for d in 0..2 {
        let mut load = ElementLoad::zeros(nt, 2);
        for (t, c) in cur.coeff.iter().enumerate() {
            let stress_at = |smp: &LevelSample, field: &[f64], i: usize| {
                let g = ops.grad_vec(t, field);
                let cc = &smp.coeff[t].stiffness;
                let mut v = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        v += cc.at(i, d, k, l) * g[k][l];
                    }
                }
                v
            };
            let w = ops.centroid_vec(t, &slope.thermal);
            for i in 0..2 {
                let dstress = (stress_at(hi, f_hi.thermal, i) - stress_at(lo, f_lo.thermal, i)) * st.inv;
                load.add_source(t, i, slope.homogenized.beta[i][d] - slope.coeff[t].beta[i][d] - dstress);
                for j in 0..2 {
                    let flux: f64 = (0..2).map(|k| c.stiffness.at(i, j, k, d) * w[k]).sum();
                    load.add_flux(t, i, j, -flux);
                }
            }
        }
        out.insert(id(sym.thermal_slope, &[d]), solver.solve(mesh, &load)?);
    }

    // mixed heat / thermal-stress problems
    for a in 0..2 {
        let mut load = ElementLoad::zeros(nt, 2);
        for (t, c) in cur.coeff.iter().enumerate() {
            let g = ops.grad_vec(t, f.thermal);
            let w = ops.centroid_vec(t, f.thermal);
            let heat = ops.centroid(t, f.heat[a]);
            for i in 0..2 {
                let mut src = hom.beta[i][a] - c.beta[i][a];
                for k in 0..2 {
                    for j in 0..2 {
                        src -= c.stiffness.at(i, a, k, j) * g[k][j];
                    }
                }
                load.add_source(t, i, src);
                for j in 0..2 {
                    let flux: f64 =
                        (0..2).map(|k| c.stiffness.at(i, j, k, a) * w[k]).sum::<f64>() + c.beta[i][j] * heat;
                    load.add_flux(t, i, j, -flux);
                }
            }
        }
        out.insert(id(sym.mixed, &[a]), solver.solve(mesh, &load)?);
    }

    Ok(out)
}

/// Micro-only problems whose data are pure θ-derivatives of the
/// constituents, plus the problems that vanish because micro data do not
/// depend on the meso coordinate.
pub fn solve_micro_extras(
    mesh: &TriMesh,
    solver: &CellSolver,
    grid: &[f64],
    s: usize,
    samples: &[LevelSample],
) -> Result<FieldSet> {
    let nt = mesh.n_triangles();
    let st = ThetaStencil::at(grid, s);
    let (lo, hi) = (&samples[st.lo], &samples[st.hi]);
    let dcoeff: Vec<Coefficients> =
        lo.coeff.iter().zip(&hi.coeff).map(|(a, b)| b.combine(st.inv, a, -st.inv)).collect();
    let mut out = FieldSet::new();
    for a in 0..2 {
        let mut load = ElementLoad::zeros(nt, 1);
        for (t, dc) in dcoeff.iter().enumerate() {
            for i in 0..2 {
                load.add_flux(t, 0, i, dc.k[i][a]);
            }
        }
        out.insert(id(Symbol::RStar, &[a]), solver.solve(mesh, &load)?);
    }
    for n in 0..2 {
        for m in 0..2 {
            let mut load = ElementLoad::zeros(nt, 2);
            for (t, dc) in dcoeff.iter().enumerate() {
                for i in 0..2 {
                    for j in 0..2 {
                        load.add_flux(t, i, j, dc.stiffness.at(i, j, m, n));
                    }
                }
            }
            out.insert(id(Symbol::TStar, &[n, m]), solver.solve(mesh, &load)?);
        }
    }
    let mut load = ElementLoad::zeros(nt, 2);
    for (t, dc) in dcoeff.iter().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                load.add_flux(t, i, j, dc.beta[i][j]);
            }
        }
    }
    out.insert(id(Symbol::OStar, &[]), solver.solve(mesh, &load)?);

    for sym in [Symbol::L, Symbol::D, Symbol::PStar] {
        for pid in sym.ids() {
            out.insert(pid, vec![0.0; mesh.n_nodes() * sym.ncomp()]);
        }
    }
    Ok(out)
}

/// Meso-only problems built from products of first-order meso functions
/// with the element coefficients and their θ-derivatives.
pub fn solve_meso_extras(
    mesh: &TriMesh,
    solver: &CellSolver,
    grid: &[f64],
    s: usize,
    samples: &[LevelSample],
) -> Result<FieldSet> {
    let nt = mesh.n_triangles();
    let ops = ElementOps { mesh };
    let st = ThetaStencil::at(grid, s);
    let cur = &samples[s];
    let (lo, hi) = (&samples[st.lo], &samples[st.hi]);
    let dcoeff: Vec<Coefficients> =
        lo.coeff.iter().zip(&hi.coeff).map(|(a, b)| b.combine(st.inv, a, -st.inv)).collect();
    let f = FirstOrder::of(&cur.fields, &MESO);
    let mut out = FieldSet::new();

    // B⁰: divergence of M⁰ times the corrected heat flux and its θ-slope
    for a in 0..2 {
        for b in 0..2 {
            let mut load = ElementLoad::zeros(nt, 1);
            for (t, c) in cur.coeff.iter().enumerate() {
                let dc = &dcoeff[t];
                let weight = ops.centroid(t, f.heat[a]);
                let g = ops.grad(t, f.heat[b]);
                for i in 0..2 {
                    let flux = dc.k[i][b]
                        + dc.k[i][0] * g[0]
                        + dc.k[i][1] * g[1]
                        + c.k[i][b]
                        + c.k[i][0] * g[0]
                        + c.k[i][1] * g[1];
                    load.add_flux(t, 0, i, weight * flux);
                }
            }
            out.insert(id(Symbol::B0, &[a, b]), solver.solve(mesh, &load)?);
        }
    }

    // W⁰: same structure for the thermal stress
    for a in 0..2 {
        let mut load = ElementLoad::zeros(nt, 2);
        for (t, c) in cur.coeff.iter().enumerate() {
            let dc = &dcoeff[t];
            let weight = ops.centroid(t, f.heat[a]);
            let g = ops.grad_vec(t, f.thermal);
            for i in 0..2 {
                for j in 0..2 {
                    let mut flux = dc.beta[i][j] + c.beta[i][j];
                    for k in 0..2 {
                        for l in 0..2 {
                            flux += (dc.stiffness.at(i, j, k, l) + c.stiffness.at(i, j, k, l)) * g[k][l];
                        }
                    }
                    load.add_flux(t, i, j, weight * flux);
                }
            }
        }
        out.insert(id(Symbol::W0, &[a]), solver.solve(mesh, &load)?);
    }

    // J⁰: same structure for the elastic stress
    for a in 0..2 {
        for b in 0..2 {
            for m in 0..2 {
                let mut load = ElementLoad::zeros(nt, 2);
                for (t, c) in cur.coeff.iter().enumerate() {
                    let dc = &dcoeff[t];
                    let weight = ops.centroid(t, f.heat[a]);
                    let g = ops.grad_vec(t, f.elastic[b][m]);
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut flux = dc.stiffness.at(i, j, m, b) + c.stiffness.at(i, j, m, b);
                            for k in 0..2 {
                                for l in 0..2 {
                                    flux += (dc.stiffness.at(i, j, k, l) + c.stiffness.at(i, j, k, l)) * g[k][l];
                                }
                            }
                            load.add_flux(t, i, j, weight * flux);
                        }
                    }
                }
                out.insert(id(Symbol::J0, &[a, b, m]), solver.solve(mesh, &load)?);
            }
        }
    }
    Ok(out)
}

/// Tensor symmetry defect of a homogenized set, relative to its size.
pub fn symmetry_defect(h: &Coefficients) -> f64 {
    let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };
    let t2 = |a: &[[f64; 2]; 2]| {
        let s = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        rel((a[0][1] - a[1][0]).abs(), s)
    };
    let c = &h.stiffness;
    let mut cd = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let v = c.at(i, j, k, l);
                    cd = cd
                        .max((v - c.at(j, i, k, l)).abs())
                        .max((v - c.at(i, j, l, k)).abs())
                        .max((v - c.at(k, l, i, j)).abs());
                }
            }
        }
    }
    t2(&h.k).max(t2(&h.beta)).max(t2(&h.coupling)).max(rel(cd, c.max_abs()))
}
