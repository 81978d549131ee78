//! Shared test support: laminate designs and a one-dimensional oracle for
//! every cell problem of a laminate whose layers are stacked along `y1`.
//!
//! The oracle integrates each problem in flux form, `a w' = ∫s + g + c`,
//! on a dense uniform grid with layer interfaces on grid points. All data
//! are piecewise linear per grid cell, so the trapezoidal sums are exact.
//! Temperature derivatives use the same three-point stencil on the θ-grid
//! as the tables.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod manufactured;

use std::collections::BTreeMap;

use hots_core::cell_lab::{
    build_theta_tables, uniform_grid, CellBoundary, CellDesign, CellProblemId, Coefficients, FillSpec, MesoCellSpec,
    MicroCellSpec, Owner, Symbol, ThetaTables,
};
use hots_core::fem::mesh::{RegionSpec, Shape, TriMesh};
use hots_core::{CouplingMode, MaterialModel, Polynomial, Stiffness};

/// Grid cells of the oracle on `[0, 1]`.
pub const DENSE: usize = 1024;

pub fn poly(c: &[f64]) -> Polynomial {
    Polynomial(c.to_vec())
}

/// Two constituents with a strong temperature dependence in every property.
pub fn soft_and_stiff() -> Vec<MaterialModel> {
    vec![
        MaterialModel {
            name: "soft".into(),
            rho: poly(&[2.0, 0.01]),
            c: poly(&[1.0, 0.02]),
            k: poly(&[1.0, 0.03]),
            e: poly(&[10.0, 0.2]),
            nu: 0.3,
            beta: poly(&[1.0, 0.05]),
        },
        MaterialModel {
            name: "stiff".into(),
            rho: poly(&[5.0, -0.02]),
            c: poly(&[2.0, 0.01]),
            k: poly(&[4.0, -0.05]),
            e: poly(&[40.0, -0.5]),
            nu: 0.2,
            beta: poly(&[2.0, 0.03]),
        },
    ]
}

/// Region covering `x1 >= x0` of the unit cell.
pub fn right_of(tag: &str, x0: f64) -> RegionSpec {
    RegionSpec { tag: tag.into(), shape: Shape::Rect { min: [x0, 0.0], max: [1.0, 1.0] } }
}

/// Micro laminate `left | right` split at 1/2, meso laminate
/// `meso_left | micro composite` split at 1/2.
pub fn laminate_design(
    materials: Vec<MaterialModel>,
    coupling: CouplingMode,
    micro: (&str, &str),
    meso_left: &str,
    n: usize,
    boundary: CellBoundary,
) -> CellDesign {
    let micro_spec = MicroCellSpec {
        name: "Z".into(),
        n,
        regions: vec![right_of("right", 0.5)],
        fill: BTreeMap::from([("matrix".to_string(), micro.0.to_string()), ("right".to_string(), micro.1.to_string())]),
    };
    let meso_spec = MesoCellSpec {
        n,
        regions: vec![right_of("right", 0.5)],
        fill: BTreeMap::from([
            ("matrix".to_string(), FillSpec::Material(meso_left.into())),
            ("right".to_string(), FillSpec::Micro("Z".into())),
        ]),
    };
    CellDesign::from_specs(materials, coupling, &[micro_spec], &meso_spec, boundary).unwrap()
}

/// Nodes of a crossed mesh that sit on grid vertices (not cell centers).
pub fn vertex_nodes(mesh: &TriMesh, n: usize) -> Vec<usize> {
    let on_grid = |v: f64| ((v * n as f64) - (v * n as f64).round()).abs() < 1e-9;
    (0..mesh.n_nodes()).filter(|&i| on_grid(mesh.nodes[i][0]) && on_grid(mesh.nodes[i][1])).collect()
}

type Scalar = Vec<f64>;
type Vector = [Vec<f64>; 2];

fn h() -> f64 {
    1.0 / DENSE as f64
}

fn slope(f: &[f64], j: usize) -> f64 {
    (f[j + 1] - f[j]) / h()
}

fn ends(f: &[f64], j: usize) -> [f64; 2] {
    [f[j], f[j + 1]]
}

fn avg(f: impl Fn(usize) -> f64) -> f64 {
    (0..DENSE).map(f).sum::<f64>() * h()
}

/// Solve `(a w')' = s + g'` with `w(0) = w(1) = 0`; `a`, `s` constant and
/// `g` linear on each grid cell (given by its end values).
fn solve(a: impl Fn(usize) -> f64, s: impl Fn(usize) -> f64, g: impl Fn(usize) -> [f64; 2]) -> Scalar {
    let h = h();
    let mut big_s = 0.0;
    let mut incr = Vec::with_capacity(DENSE);
    let mut inv_a = 0.0;
    let mut total = 0.0;
    for j in 0..DENSE {
        let (aj, gj) = (a(j), g(j));
        let left = (big_s + gj[0]) / aj;
        big_s += s(j) * h;
        let right = (big_s + gj[1]) / aj;
        let i = 0.5 * h * (left + right);
        incr.push((i, h / aj));
        total += i;
        inv_a += h / aj;
    }
    let c = -total / inv_a;
    let mut w = vec![0.0; DENSE + 1];
    for (j, (i, ha)) in incr.into_iter().enumerate() {
        w[j + 1] = w[j] + i + c * ha;
    }
    w
}

fn constant(v: f64) -> [f64; 2] {
    [v, v]
}

fn scaled(f: &[f64], j: usize, s: f64) -> [f64; 2] {
    let e = ends(f, j);
    [e[0] * s, e[1] * s]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// θ-stencil matching the tables: central inside, one-sided at the ends.
pub fn stencil(grid: &[f64], s: usize) -> (usize, usize, f64) {
    let lo = s.saturating_sub(1);
    let hi = (s + 1).min(grid.len() - 1);
    (lo, hi, 1.0 / (grid[hi] - grid[lo]))
}

fn diff_c(lo: &Coefficients, hi: &Coefficients, inv: f64) -> Coefficients {
    hi.combine(inv, lo, -inv)
}

fn diff_f(lo: &[f64], hi: &[f64], inv: f64) -> Scalar {
    lo.iter().zip(hi).map(|(a, b)| (b - a) * inv).collect()
}

#[derive(Clone)]
pub struct FirstOrder {
    pub heat: [Scalar; 2],
    pub thermal: Vector,
    /// `elastic[a][m]`
    pub elastic: [[Vector; 2]; 2],
}

/// One cell level laid out on the oracle grid, at every θ-sample.
pub struct Level {
    pub grid: Vec<f64>,
    /// `coeff[sample][cell]`
    pub coeff: Vec<Vec<Coefficients>>,
    pub first: Vec<FirstOrder>,
    pub hom: Vec<Coefficients>,
}

fn vector_solve(c: &[Coefficients], s: impl Fn(usize, usize) -> f64, g: impl Fn(usize, usize) -> [f64; 2]) -> Vector {
    for cc in c {
        assert!(
            cc.stiffness.at(0, 0, 1, 0).abs() < 1e-12 && cc.stiffness.at(1, 0, 0, 0).abs() < 1e-12,
            "oracle needs the y1-normal operator to decouple the components"
        );
    }
    [0, 1].map(|i| solve(|j| c[j].stiffness.at(i, 0, i, 0), |j| s(i, j), |j| g(i, j)))
}

fn scalar_solve(c: &[Coefficients], s: impl Fn(usize) -> f64, g: impl Fn(usize) -> [f64; 2]) -> Scalar {
    solve(|j| c[j].k[0][0], s, g)
}

fn first_order(c: &[Coefficients]) -> FirstOrder {
    let heat = [0, 1].map(|a| scalar_solve(c, |_| 0.0, |j| constant(-c[j].k[0][a])));
    let thermal = vector_solve(c, |_, _| 0.0, |i, j| constant(-c[j].beta[i][0]));
    let elastic =
        [0, 1].map(|a| [0, 1].map(|m| vector_solve(c, |_, _| 0.0, |i, j| constant(-c[j].stiffness.at(i, 0, m, a)))));
    FirstOrder { heat, thermal, elastic }
}

fn homogenize(c: &[Coefficients], f: &FirstOrder) -> Coefficients {
    let mut h = Coefficients::ZERO;
    h.capacity = avg(|j| c[j].capacity - (0..2).map(|i| c[j].coupling[i][0] * slope(&f.thermal[i], j)).sum::<f64>());
    h.rho = avg(|j| c[j].rho);
    for i in 0..2 {
        for jj in 0..2 {
            h.k[i][jj] = avg(|j| c[j].k[i][jj] + c[j].k[i][0] * slope(&f.heat[jj], j));
            h.coupling[i][jj] = avg(|j| {
                c[j].coupling[i][jj] + (0..2).map(|m| c[j].coupling[m][0] * slope(&f.elastic[jj][i][m], j)).sum::<f64>()
            });
            h.beta[i][jj] = avg(|j| {
                c[j].beta[i][jj] + (0..2).map(|k| c[j].stiffness.at(i, jj, k, 0) * slope(&f.thermal[k], j)).sum::<f64>()
            });
            for k in 0..2 {
                for l in 0..2 {
                    h.stiffness.0[i][jj][k][l] = avg(|j| {
                        c[j].stiffness.at(i, jj, k, l)
                            + (0..2)
                                .map(|m| c[j].stiffness.at(i, jj, m, 0) * slope(&f.elastic[l][k][m], j))
                                .sum::<f64>()
                    });
                }
            }
        }
    }
    h
}

impl Level {
    /// Lay out `layers` (`(x_start, coefficients per sample)`, sorted by start).
    pub fn new(grid: &[f64], layers: &[(f64, Vec<Coefficients>)]) -> Level {
        let coeff: Vec<Vec<Coefficients>> = (0..grid.len())
            .map(|s| {
                (0..DENSE)
                    .map(|j| {
                        let y = (j as f64 + 0.5) * h();
                        let layer = layers.iter().rev().find(|(x0, _)| y >= *x0).expect("layers cover [0, 1]");
                        layer.1[s]
                    })
                    .collect()
            })
            .collect();
        let first: Vec<FirstOrder> = coeff.iter().map(|c| first_order(c)).collect();
        let hom = coeff.iter().zip(&first).map(|(c, f)| homogenize(c, f)).collect();
        Level { grid: grid.to_vec(), coeff, first, hom }
    }

    /// Every problem of the family shared by both levels at sample `s`,
    /// keyed by `(role, indices)` with roles named as in [`LevelRoles`].
    pub fn second_order(&self, s: usize) -> BTreeMap<(&'static str, [usize; 3]), Vector> {
        let (lo, hi, inv) = stencil(&self.grid, s);
        let c = &self.coeff[s];
        let f = &self.first[s];
        let hom = &self.hom[s];
        let dc: Vec<Coefficients> = (0..DENSE).map(|j| diff_c(&self.coeff[lo][j], &self.coeff[hi][j], inv)).collect();
        let dhom = diff_c(&self.hom[lo], &self.hom[hi], inv);
        let (flo, fhi) = (&self.first[lo], &self.first[hi]);
        let dheat = [0, 1].map(|a| diff_f(&flo.heat[a], &fhi.heat[a], inv));
        let dthermal = [0, 1].map(|i| diff_f(&flo.thermal[i], &fhi.thermal[i], inv));
        let delastic =
            [0, 1].map(|a| [0, 1].map(|m| [0, 1].map(|i| diff_f(&flo.elastic[a][m][i], &fhi.elastic[a][m][i], inv))));
        // θ-slope of a cell-wise quantity built from coefficients and first-order fields
        let dq = |q: &dyn Fn(&Coefficients, &FirstOrder, usize) -> f64, j: usize| {
            (q(&self.coeff[hi][j], fhi, j) - q(&self.coeff[lo][j], flo, j)) * inv
        };
        let zero = vec![0.0; DENSE + 1];
        let scalar = |w: Scalar| [w, zero.clone()];
        let mut out = BTreeMap::new();

        for a1 in 0..2 {
            for a2 in 0..2 {
                for m in 0..2 {
                    let w = vector_solve(
                        c,
                        |i, j| {
                            hom.stiffness.at(i, a1, m, a2)
                                - c[j].stiffness.at(i, a1, m, a2)
                                - (0..2)
                                    .map(|k| c[j].stiffness.at(i, a1, k, 0) * slope(&f.elastic[a2][m][k], j))
                                    .sum::<f64>()
                        },
                        |i, j| {
                            (0..2).fold([0.0; 2], |acc, k| {
                                add(acc, scaled(&f.elastic[a2][m][k], j, -c[j].stiffness.at(i, 0, k, a1)))
                            })
                        },
                    );
                    out.insert(("elastic_pair", [a1, a2, m]), w);
                }
            }
        }
        for a1 in 0..2 {
            for a2 in 0..2 {
                let w = scalar_solve(
                    c,
                    |j| hom.k[a1][a2] - c[j].k[a1][a2] - c[j].k[a1][0] * slope(&f.heat[a2], j),
                    |j| scaled(&f.heat[a2], j, -c[j].k[0][a1]),
                );
                out.insert(("heat_pair", [a1, a2, 0]), scalar(w));
            }
        }
        let w = scalar_solve(
            c,
            |j| {
                c[j].capacity
                    - hom.capacity
                    - (0..2).map(|i| c[j].coupling[i][0] * slope(&f.thermal[i], j)).sum::<f64>()
            },
            |_| [0.0; 2],
        );
        out.insert(("capacity", [0; 3]), scalar(w));
        for a1 in 0..2 {
            for a2 in 0..2 {
                let w = scalar_solve(
                    c,
                    |j| {
                        hom.coupling[a1][a2]
                            - c[j].coupling[a1][a2]
                            - (0..2).map(|i| c[j].coupling[i][0] * slope(&f.elastic[a2][a1][i], j)).sum::<f64>()
                    },
                    |_| [0.0; 2],
                );
                out.insert(("coupling_pair", [a1, a2, 0]), scalar(w));
            }
        }
        for a in 0..2 {
            for d in 0..2 {
                let w = scalar_solve(
                    c,
                    |j| {
                        dhom.k[d][a]
                            - dc[j].k[d][a]
                            - dq(&|cc: &Coefficients, ff: &FirstOrder, j| cc.k[d][0] * slope(&ff.heat[a], j), j)
                    },
                    |j| scaled(&dheat[a], j, -c[j].k[0][d]),
                );
                out.insert(("heat_slope", [a, d, 0]), scalar(w));
            }
        }
        for a in 0..2 {
            let w = vector_solve(c, |i, j| if i == a { c[j].rho - hom.rho } else { 0.0 }, |_, _| [0.0; 2]);
            out.insert(("inertia", [a, 0, 0]), w);
        }
        for a in 0..2 {
            for m in 0..2 {
                for d in 0..2 {
                    let w = vector_solve(
                        c,
                        |i, j| {
                            dhom.stiffness.at(i, d, m, a)
                                - dc[j].stiffness.at(i, d, m, a)
                                - dq(
                                    &|cc: &Coefficients, ff: &FirstOrder, j| {
                                        (0..2)
                                            .map(|k| cc.stiffness.at(i, d, k, 0) * slope(&ff.elastic[a][m][k], j))
                                            .sum::<f64>()
                                    },
                                    j,
                                )
                        },
                        |i, j| {
                            (0..2).fold([0.0; 2], |acc, k| {
                                add(acc, scaled(&delastic[a][m][k], j, -c[j].stiffness.at(i, 0, k, d)))
                            })
                        },
                    );
                    out.insert(("elastic_slope", [a, m, d]), w);
                }
            }
        }
        for d in 0..2 {
            let w = vector_solve(
                c,
                |i, j| {
                    dhom.beta[i][d]
                        - dc[j].beta[i][d]
                        - dq(
                            &|cc: &Coefficients, ff: &FirstOrder, j| {
                                (0..2).map(|k| cc.stiffness.at(i, d, k, 0) * slope(&ff.thermal[k], j)).sum::<f64>()
                            },
                            j,
                        )
                },
                |i, j| {
                    (0..2).fold([0.0; 2], |acc, k| add(acc, scaled(&dthermal[k], j, -c[j].stiffness.at(i, 0, k, d))))
                },
            );
            out.insert(("thermal_slope", [d, 0, 0]), w);
        }
        for a in 0..2 {
            let w = vector_solve(
                c,
                |i, j| {
                    hom.beta[i][a]
                        - c[j].beta[i][a]
                        - (0..2).map(|k| c[j].stiffness.at(i, a, k, 0) * slope(&f.thermal[k], j)).sum::<f64>()
                },
                |i, j| {
                    let stress = (0..2)
                        .fold([0.0; 2], |acc, k| add(acc, scaled(&f.thermal[k], j, -c[j].stiffness.at(i, 0, k, a))));
                    add(stress, scaled(&f.heat[a], j, -c[j].beta[i][0]))
                },
            );
            out.insert(("mixed", [a, 0, 0]), w);
        }
        out
    }

    /// Problems driven purely by θ-slopes of the micro constituents.
    pub fn micro_extras(&self, s: usize) -> BTreeMap<(&'static str, [usize; 3]), Vector> {
        let (lo, hi, inv) = stencil(&self.grid, s);
        let c = &self.coeff[s];
        let dc: Vec<Coefficients> = (0..DENSE).map(|j| diff_c(&self.coeff[lo][j], &self.coeff[hi][j], inv)).collect();
        let zero = vec![0.0; DENSE + 1];
        let mut out = BTreeMap::new();
        for a in 0..2 {
            let w = scalar_solve(c, |_| 0.0, |j| constant(dc[j].k[0][a]));
            out.insert(("heat_theta", [a, 0, 0]), [w, zero.clone()]);
        }
        for n in 0..2 {
            for m in 0..2 {
                let w = vector_solve(c, |_, _| 0.0, |i, j| constant(dc[j].stiffness.at(i, 0, m, n)));
                out.insert(("elastic_theta", [n, m, 0]), w);
            }
        }
        out.insert(("thermal_theta", [0; 3]), vector_solve(c, |_, _| 0.0, |i, j| constant(dc[j].beta[i][0])));
        out
    }

    /// Products of meso heat functions with corrected fluxes.
    pub fn meso_extras(&self, s: usize) -> BTreeMap<(&'static str, [usize; 3]), Vector> {
        let (lo, hi, inv) = stencil(&self.grid, s);
        let c = &self.coeff[s];
        let f = &self.first[s];
        let dc: Vec<Coefficients> = (0..DENSE).map(|j| diff_c(&self.coeff[lo][j], &self.coeff[hi][j], inv)).collect();
        let zero = vec![0.0; DENSE + 1];
        let mut out = BTreeMap::new();
        let both = |j: usize| dc[j].combine(1.0, &c[j], 1.0);
        for a1 in 0..2 {
            for a2 in 0..2 {
                let w = scalar_solve(
                    c,
                    |_| 0.0,
                    |j| {
                        let q = both(j);
                        scaled(&f.heat[a1], j, q.k[0][a2] + q.k[0][0] * slope(&f.heat[a2], j))
                    },
                );
                out.insert(("heat_product", [a1, a2, 0]), [w, zero.clone()]);
            }
        }
        for a in 0..2 {
            let w = vector_solve(
                c,
                |_, _| 0.0,
                |i, j| {
                    let q = both(j);
                    let flux = q.beta[i][0]
                        + (0..2).map(|k| q.stiffness.at(i, 0, k, 0) * slope(&f.thermal[k], j)).sum::<f64>();
                    scaled(&f.heat[a], j, flux)
                },
            );
            out.insert(("thermal_product", [a, 0, 0]), w);
        }
        for a1 in 0..2 {
            for a2 in 0..2 {
                for m in 0..2 {
                    let w = vector_solve(
                        c,
                        |_, _| 0.0,
                        |i, j| {
                            let q = both(j);
                            let flux = q.stiffness.at(i, 0, m, a2)
                                + (0..2)
                                    .map(|k| q.stiffness.at(i, 0, k, 0) * slope(&f.elastic[a2][m][k], j))
                                    .sum::<f64>();
                            scaled(&f.heat[a1], j, flux)
                        },
                    );
                    out.insert(("elastic_product", [a1, a2, m]), w);
                }
            }
        }
        out
    }

    /// First-order functions at sample `s`, keyed like [`Level::second_order`].
    pub fn first_order_fields(&self, s: usize) -> BTreeMap<(&'static str, [usize; 3]), Vector> {
        let f = &self.first[s];
        let zero = vec![0.0; DENSE + 1];
        let mut out = BTreeMap::new();
        for a in 0..2 {
            out.insert(("heat", [a, 0, 0]), [f.heat[a].clone(), zero.clone()]);
            for m in 0..2 {
                out.insert(("elastic", [a, m, 0]), f.elastic[a][m].clone());
            }
        }
        out.insert(("thermal", [0; 3]), f.thermal.clone());
        out
    }
}

/// Role name of each symbol, or `None` for problems that vanish identically.
pub fn role(symbol: Symbol) -> Option<&'static str> {
    use Symbol::*;
    Some(match symbol {
        R | M0 => "heat",
        O | P0 => "thermal",
        T | N0 => "elastic",
        T2 | N0Pair => "elastic_pair",
        R2 | M0Pair => "heat_pair",
        AStar | A0 => "capacity",
        EStar | E0 => "coupling_pair",
        DStar | C0 => "heat_slope",
        FStar | F0 => "inertia",
        U | Z0 => "elastic_slope",
        QStar | Q0 => "thermal_slope",
        V | H0 => "mixed",
        RStar => "heat_theta",
        TStar => "elastic_theta",
        OStar => "thermal_theta",
        B0 => "heat_product",
        W0 => "thermal_product",
        J0 => "elastic_product",
        L | D | PStar => return None,
    })
}

/// Linear interpolation of a grid function at `y` in `[0, 1]`.
pub fn at(f: &[f64], y: f64) -> f64 {
    let x = (y * DENSE as f64).clamp(0.0, DENSE as f64);
    let j = (x.floor() as usize).min(DENSE - 1);
    let t = x - j as f64;
    f[j] * (1.0 - t) + f[j + 1] * t
}

/// Largest nodal gap between a table field and the oracle, over vertex nodes.
pub fn nodal_gap(mesh: &TriMesh, n: usize, id: CellProblemId, field: &[f64], oracle: Option<&Vector>) -> f64 {
    let nc = id.ncomp();
    let mut gap = 0.0f64;
    for node in vertex_nodes(mesh, n) {
        let y = mesh.nodes[node][0];
        for comp in 0..nc {
            let expect = oracle.map_or(0.0, |w| at(&w[comp], y));
            gap = gap.max((field[node * nc + comp] - expect).abs());
        }
    }
    gap
}

pub fn coefficients_of(material: &MaterialModel, grid: &[f64], coupling: CouplingMode) -> Vec<Coefficients> {
    grid.iter().map(|&t| Coefficients::from(material.evaluate(t, coupling).unwrap())).collect()
}

pub fn isotropic_k(k: f64) -> [[f64; 2]; 2] {
    [[k, 0.0], [0.0, k]]
}

pub fn plane_strain(e: f64, nu: f64) -> Stiffness {
    Stiffness::plane_strain(e, nu)
}

/// Micro cell layered across `y2` inside the right half of a meso cell, so
/// that tiling the micro pattern any whole number of times per meso period
/// keeps every volume fraction exact.
pub fn layered_design(
    materials: Vec<MaterialModel>,
    coupling: CouplingMode,
    names: [&str; 3],
    per_period: usize,
    meso_n: usize,
    boundary: CellBoundary,
) -> CellDesign {
    let micro = MicroCellSpec {
        name: "Z".into(),
        n: per_period,
        regions: vec![RegionSpec { tag: "upper".into(), shape: Shape::Rect { min: [0.0, 0.5], max: [1.0, 1.0] } }],
        fill: BTreeMap::from([
            ("matrix".to_string(), names[1].to_string()),
            ("upper".to_string(), names[2].to_string()),
        ]),
    };
    let meso = MesoCellSpec {
        n: meso_n,
        regions: vec![right_of("right", 0.5)],
        fill: BTreeMap::from([
            ("matrix".to_string(), FillSpec::Material(names[0].into())),
            ("right".to_string(), FillSpec::Micro("Z".into())),
        ]),
    };
    CellDesign::from_specs(materials, coupling, &[micro], &meso, boundary).unwrap()
}

pub fn builtin_materials() -> Vec<MaterialModel> {
    (1..=3).filter_map(MaterialModel::builtin).collect()
}

/// Crossed cells per side of the laminate test cells.
pub const LAMINATE_N: usize = 8;
pub fn laminate_tables() -> ThetaTables {
    let design = laminate_design(
        soft_and_stiff(),
        CouplingMode::Scaled { gamma: 0.5 },
        ("soft", "stiff"),
        "soft",
        LAMINATE_N,
        CellBoundary::LaminateX1,
    );
    let grid = uniform_grid(0.0, 10.0, 5).unwrap();
    build_theta_tables(&design, &grid).unwrap()
}

pub fn oracle_levels(tables: &ThetaTables) -> (Level, Level) {
    let coupling = CouplingMode::Scaled { gamma: 0.5 };
    let mats = soft_and_stiff();
    let soft = coefficients_of(&mats[0], &tables.grid, coupling);
    let stiff = coefficients_of(&mats[1], &tables.grid, coupling);
    let micro = Level::new(&tables.grid, &[(0.0, soft.clone()), (0.5, stiff)]);
    let micro_hom = micro.hom.clone();
    let meso = Level::new(&tables.grid, &[(0.0, soft), (0.5, micro_hom)]);
    (micro, meso)
}

/// Worst nodal gap between table and oracle, relative to the largest oracle
/// value (at least one), over every problem id and θ-sample of `owner`.
pub fn worst_gap(tables: &ThetaTables, owner: Owner, level: &Level) -> (f64, String) {
    let mesh = tables.mesh(owner);
    let mut worst = (0.0, String::new());
    for (s, sample) in tables.samples(owner).iter().enumerate() {
        let mut oracle = level.first_order_fields(s);
        oracle.extend(level.second_order(s));
        match owner {
            Owner::Micro(_) => oracle.extend(level.micro_extras(s)),
            Owner::Meso => oracle.extend(level.meso_extras(s)),
        }
        let scale =
            oracle.values().flat_map(|w| w.iter().flat_map(|c| c.iter())).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (id, field) in &sample.fields {
            let expect = role(id.symbol).map(|r| {
                let mut idx = [0usize; 3];
                for (slot, &v) in idx.iter_mut().zip(&id.idx) {
                    *slot = v as usize;
                }
                oracle.get(&(r, idx)).unwrap_or_else(|| panic!("oracle lacks {id}"))
            });
            let gap = nodal_gap(mesh, LAMINATE_N, *id, field, expect) / scale;
            if gap > worst.0 {
                worst = (gap, format!("{id} at θ = {}", tables.grid[s]));
            }
        }
    }
    worst
}
