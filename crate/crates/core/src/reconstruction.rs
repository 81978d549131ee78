//! Oscillatory fields rebuilt from macro snapshots and cell-function tables.
//!
//! At each point the seven temperature and displacement term groups are
//! formed once; a [`Variant`] only changes how they are weighted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cell_lab::{frac, CellProblemId, Owner, Symbol, ThetaTables, ThetaWeight};
use crate::error::{HotsError, Result};
use crate::fem::mesh::TriMesh;
use crate::fem::recover::{hessian_from_gradient, recover_gradient, split_components};
use crate::macro_solver::FieldSnapshot;

/// Solution family evaluated from the same macro run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Macro field only.
    Homogenized,
    /// Meso correctors up to second order.
    Sots,
    /// First-order meso and micro correctors.
    Lots,
    /// Full three-scale expansion.
    Hots,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Homogenized, Variant::Sots, Variant::Lots, Variant::Hots];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Homogenized => "theta0",
            Variant::Sots => "sots",
            Variant::Lots => "lots",
            Variant::Hots => "hots",
        }
    }

    /// Weights of the seven term groups.
    pub fn weights(self, zeta1: f64, zeta2: f64) -> [f64; 7] {
        match self {
            Variant::Homogenized => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            Variant::Sots => [1.0, zeta1, 0.0, 0.0, zeta1 * zeta1, 0.0, 0.0],
            Variant::Lots => [1.0, zeta1, zeta2, 0.0, 0.0, 0.0, 0.0],
            Variant::Hots => [1.0, zeta1, zeta2, zeta2 * zeta2 / zeta1, zeta1 * zeta1, zeta1 * zeta2, zeta2 * zeta2],
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = HotsError;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| HotsError::Config(format!("unknown variant `{s}` (expected theta0, sots, lots or hots)")))
    }
}

/// Macro field data on the macro mesh at one time level.
#[derive(Debug, Clone)]
pub struct MacroFields {
    pub t: f64,
    pub theta: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[[f64; 2]; 2]>,
    pub u: Vec<[f64; 2]>,
    /// `du[n][m][a] = ∂u_m/∂x_a`
    pub du: Vec<[[f64; 2]; 2]>,
    /// `hu[n][m][a][b] = ∂²u_m/∂x_a∂x_b`
    pub hu: Vec<[[[f64; 2]; 2]; 2]>,
    pub theta_t: Vec<f64>,
    pub u_tt: Vec<[f64; 2]>,
    /// `u_xt[n][a][b] = ∂²u_a/∂x_b∂t`
    pub u_xt: Vec<[[f64; 2]; 2]>,
}

impl MacroFields {
    /// Recover spatial derivatives and take the scheme's backward
    /// differences over `[current, previous, before previous]`.
    pub fn from_window(mesh: &TriMesh, window: [&FieldSnapshot; 3], dt: f64) -> Self {
        let [cur, p1, p2] = window;
        let n = mesh.n_nodes();
        let grad = recover_gradient(mesh, &cur.theta);
        let hess = hessian_from_gradient(mesh, &grad);
        let comps = split_components(&cur.u, 2);
        let mut du = vec![[[0.0; 2]; 2]; n];
        let mut hu = vec![[[[0.0; 2]; 2]; 2]; n];
        for (m, c) in comps.iter().enumerate() {
            let g = recover_gradient(mesh, c);
            let h = hessian_from_gradient(mesh, &g);
            for k in 0..n {
                du[k][m] = g[k];
                hu[k][m] = h[k];
            }
        }
        let rate: Vec<f64> = cur.u.iter().zip(&p1.u).map(|(a, b)| (a - b) / dt).collect();
        let mut u_xt = vec![[[0.0; 2]; 2]; n];
        for (a, c) in split_components(&rate, 2).iter().enumerate() {
            for (k, g) in recover_gradient(mesh, c).into_iter().enumerate() {
                u_xt[k][a] = g;
            }
        }
        // at the first level the backward differences are taken as zero
        let first = cur.step == p1.step;
        let theta_t = cur.theta.iter().zip(&p1.theta).map(|(a, b)| if first { 0.0 } else { (a - b) / dt }).collect();
        let accel: Vec<f64> = (0..2 * n)
            .map(|k| if cur.step < 2 { 0.0 } else { (cur.u[k] - 2.0 * p1.u[k] + p2.u[k]) / (dt * dt) })
            .collect();
        MacroFields {
            t: cur.t,
            theta: cur.theta.clone(),
            grad,
            hess,
            u: (0..n).map(|k| [cur.u[2 * k], cur.u[2 * k + 1]]).collect(),
            du,
            hu,
            theta_t,
            u_tt: (0..n).map(|k| [accel[2 * k], accel[2 * k + 1]]).collect(),
            u_xt,
        }
    }
}

/// Coordinates and interpolated macro data at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub theta: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
    pub u: [f64; 2],
    pub du: [[f64; 2]; 2],
    pub hu: [[[f64; 2]; 2]; 2],
    pub theta_t: f64,
    pub u_tt: [f64; 2],
    pub u_xt: [[f64; 2]; 2],
}

/// Term groups 0 to 6 of both expansions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Terms {
    pub theta: [f64; 7],
    pub u: [[f64; 2]; 7],
}

impl Terms {
    pub fn combine(&self, weights: &[f64; 7]) -> (f64, [f64; 2]) {
        let mut th = 0.0;
        let mut u = [0.0; 2];
        for (k, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                th += w * self.theta[k];
                u[0] += w * self.u[k][0];
                u[1] += w * self.u[k][1];
            }
        }
        (th, u)
    }
}

fn slot_offsets() -> [usize; 34] {
    let mut off = [0usize; 34];
    for (k, s) in Symbol::ALL.iter().enumerate() {
        off[k + 1] = off[k] + (1 << s.arity());
    }
    off
}

fn slot(off: &[usize; 34], id: CellProblemId) -> usize {
    let s = id.symbol as usize;
    let i = id.idx.map(usize::from);
    let local = match id.symbol.arity() {
        0 => 0,
        1 => i[0],
        2 => 2 * i[0] + i[1],
        _ => 4 * i[0] + 2 * i[1] + i[2],
    };
    off[s] + local
}

/// Recovered y-derivatives of every meso field at one sample, by slot.
struct MesoDerivs {
    /// `grad[slot][node * nc + c]`
    grad: Vec<Vec<[f64; 2]>>,
    hess: Vec<Vec<[[f64; 2]; 2]>>,
}

/// Values and derivatives of one meso field at a point.
#[derive(Debug, Clone, Copy, Default)]
struct Jet {
    v: [f64; 2],
    /// `d[c][k] = ∂_{y_k}`
    d: [[f64; 2]; 2],
    dd: [[[f64; 2]; 2]; 2],
    /// θ-slope of the value and of its y-gradient
    t: [f64; 2],
    td: [[f64; 2]; 2],
}

/// Evaluates reconstructed fields for one macro time level.
pub struct Reconstructor<'a> {
    tables: &'a ThetaTables,
    mesh: &'a TriMesh,
    fields: MacroFields,
    pub zeta1: f64,
    pub zeta2: f64,
    pub theta_ref: f64,
    offsets: [usize; 34],
    meso_derivs: Vec<MesoDerivs>,
}

impl<'a> Reconstructor<'a> {
    pub fn new(
        tables: &'a ThetaTables,
        mesh: &'a TriMesh,
        fields: MacroFields,
        zeta1: f64,
        zeta2: f64,
        theta_ref: f64,
    ) -> Result<Self> {
        if !(0.0 < zeta2 && zeta2 < zeta1 && zeta1 < 1.0) {
            return Err(HotsError::Config(format!("need 0 < ζ2 < ζ1 < 1, got ζ1 = {zeta1}, ζ2 = {zeta2}")));
        }
        let offsets = slot_offsets();
        let ymesh = tables.mesh(Owner::Meso);
        let meso_derivs = tables
            .meso
            .iter()
            .map(|smp| {
                let mut grad = vec![Vec::new(); offsets[33]];
                let mut hess = vec![Vec::new(); offsets[33]];
                for (id, f) in &smp.fields {
                    let nc = id.ncomp();
                    let mut g = vec![[0.0; 2]; f.len()];
                    let mut h = vec![[[0.0; 2]; 2]; f.len()];
                    for (c, comp) in split_components(f, nc).iter().enumerate() {
                        let gc = recover_gradient(ymesh, comp);
                        let hc = hessian_from_gradient(ymesh, &gc);
                        for n in 0..ymesh.n_nodes() {
                            g[n * nc + c] = gc[n];
                            h[n * nc + c] = hc[n];
                        }
                    }
                    grad[slot(&offsets, *id)] = g;
                    hess[slot(&offsets, *id)] = h;
                }
                MesoDerivs { grad, hess }
            })
            .collect();
        Ok(Reconstructor { tables, mesh, fields, zeta1, zeta2, theta_ref, offsets, meso_derivs })
    }

    pub fn time(&self) -> f64 {
        self.fields.t
    }

    pub fn frame(&self, x: [f64; 2]) -> Result<LocalFrame> {
        let g = self.mesh.grid.ok_or_else(|| HotsError::Geometry("macro mesh lacks grid metadata".into()))?;
        let tol = 1e-9 * (g.domain.width() + g.domain.height());
        if x[0] < g.domain.min[0] - tol
            || x[0] > g.domain.max[0] + tol
            || x[1] < g.domain.min[1] - tol
            || x[1] > g.domain.max[1] + tol
        {
            return Err(HotsError::Geometry(format!("point {x:?} lies outside the macro domain")));
        }
        let (t, w) = self.mesh.locate(x);
        let nodes = self.mesh.triangles[t];
        let f = &self.fields;
        let mix = |get: &dyn Fn(usize) -> f64| w[0] * get(nodes[0]) + w[1] * get(nodes[1]) + w[2] * get(nodes[2]);
        let mut frame = LocalFrame {
            x,
            y: [frac(x[0] / self.zeta1), frac(x[1] / self.zeta1)],
            z: [frac(x[0] / self.zeta2), frac(x[1] / self.zeta2)],
            theta: mix(&|n| f.theta[n]),
            grad: [0.0; 2],
            hess: [[0.0; 2]; 2],
            u: [0.0; 2],
            du: [[0.0; 2]; 2],
            hu: [[[0.0; 2]; 2]; 2],
            theta_t: mix(&|n| f.theta_t[n]),
            u_tt: [0.0; 2],
            u_xt: [[0.0; 2]; 2],
        };
        for a in 0..2 {
            frame.grad[a] = mix(&|n| f.grad[n][a]);
            frame.u[a] = mix(&|n| f.u[n][a]);
            frame.u_tt[a] = mix(&|n| f.u_tt[n][a]);
            for b in 0..2 {
                frame.hess[a][b] = mix(&|n| f.hess[n][a][b]);
                frame.du[a][b] = mix(&|n| f.du[n][a][b]);
                frame.u_xt[a][b] = mix(&|n| f.u_xt[n][a][b]);
                for c in 0..2 {
                    frame.hu[a][b][c] = mix(&|n| f.hu[n][a][b][c]);
                }
            }
        }
        Ok(frame)
    }

    fn meso_jets(&self, y: [f64; 2], w: ThetaWeight) -> Vec<Jet> {
        let mesh = self.tables.mesh(Owner::Meso);
        let (tri, bary) = mesh.locate(y);
        let nodes = mesh.triangles[tri];
        let grid = &self.tables.grid;
        // θ-slope over the bracketing interval
        let inv = 1.0 / (grid[w.hi] - grid[w.lo]);
        let (lo, hi) = (&self.tables.meso[w.lo], &self.tables.meso[w.hi]);
        let (dlo, dhi) = (&self.meso_derivs[w.lo], &self.meso_derivs[w.hi]);
        let mut jets = vec![Jet::default(); self.offsets[33]];
        for (id, flo) in &lo.fields {
            let Some(fhi) = hi.fields.get(id) else {
                continue;
            };
            let s = slot(&self.offsets, *id);
            let nc = id.ncomp();
            let jet = &mut jets[s];
            for c in 0..nc {
                let at = |f: &[f64]| (0..3).map(|p| bary[p] * f[nodes[p] * nc + c]).sum::<f64>();
                let (a, b) = (at(flo), at(fhi));
                jet.v[c] = w.blend(a, b);
                jet.t[c] = (b - a) * inv;
                for k in 0..2 {
                    let atg = |g: &[[f64; 2]]| (0..3).map(|p| bary[p] * g[nodes[p] * nc + c][k]).sum::<f64>();
                    let (ga, gb) = (atg(&dlo.grad[s]), atg(&dhi.grad[s]));
                    jet.d[c][k] = w.blend(ga, gb);
                    jet.td[c][k] = (gb - ga) * inv;
                    for l in 0..2 {
                        let ath =
                            |h: &[[[f64; 2]; 2]]| (0..3).map(|p| bary[p] * h[nodes[p] * nc + c][k][l]).sum::<f64>();
                        jet.dd[c][k][l] = w.blend(ath(&dlo.hess[s]), ath(&dhi.hess[s]));
                    }
                }
            }
        }
        jets
    }

    fn micro_values(&self, y: [f64; 2], z: [f64; 2], w: ThetaWeight) -> Vec<[f64; 2]> {
        let mut vals = vec![[0.0; 2]; self.offsets[33]];
        let Some(cell) = self.tables.design.micro_cell_at(y) else {
            return vals;
        };
        let owner = Owner::Micro(cell);
        let (tri, bary) = self.tables.mesh(owner).locate(z);
        for id in self.tables.samples(owner)[w.lo].fields.keys() {
            vals[slot(&self.offsets, *id)] = self.tables.point_value(owner, *id, w, tri, bary);
        }
        vals
    }

    /// All term groups at `x`.
    pub fn terms(&self, x: [f64; 2]) -> Result<Terms> {
        let fr = self.frame(x)?;
        let w = self.tables.weight(fr.theta);
        let jets = self.meso_jets(fr.y, w);
        let micro = self.micro_values(fr.y, fr.z, w);
        Ok(expansion_terms(&fr, self.theta_ref, &self.offsets, &jets, &micro))
    }

    /// Temperature and displacement of `variant` at `x`.
    pub fn evaluate(&self, variant: Variant, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
        Ok(self.terms(x)?.combine(&variant.weights(self.zeta1, self.zeta2)))
    }

    pub fn evaluate_temperature(&self, variant: Variant, x: [f64; 2]) -> Result<f64> {
        Ok(self.evaluate(variant, x)?.0)
    }

    pub fn evaluate_displacement(&self, variant: Variant, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.evaluate(variant, x)?.1)
    }

    /// Every variant at every node of `target`, as nodal arrays
    /// `(theta, interleaved u)` in `Variant::ALL` order.
    pub fn sample_nodes(&self, target: &TriMesh) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        use rayon::prelude::*;
        let weights: Vec<[f64; 7]> = Variant::ALL.iter().map(|v| v.weights(self.zeta1, self.zeta2)).collect();
        let per_node: Vec<Terms> = target.nodes.par_iter().map(|&p| self.terms(p)).collect::<Result<_>>()?;
        Ok(weights
            .iter()
            .map(|w| {
                let mut th = Vec::with_capacity(per_node.len());
                let mut u = Vec::with_capacity(2 * per_node.len());
                for t in &per_node {
                    let (a, b) = t.combine(w);
                    th.push(a);
                    u.extend_from_slice(&b);
                }
                (th, u)
            })
            .collect())
    }

    /// `n_points` evenly spaced samples from `start` to `end`.
    pub fn sample_line(
        &self,
        variants: &[Variant],
        start: [f64; 2],
        end: [f64; 2],
        n_points: usize,
    ) -> Result<LineSample> {
        let mut rows = Vec::with_capacity(n_points);
        for k in 0..n_points {
            let s = if n_points > 1 { k as f64 / (n_points - 1) as f64 } else { 0.0 };
            let x = [start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])];
            let terms = self.terms(x)?;
            let values = variants.iter().map(|v| terms.combine(&v.weights(self.zeta1, self.zeta2))).collect();
            rows.push((x, values));
        }
        Ok(LineSample { t: self.time(), variants: variants.to_vec(), rows })
    }
}

/// A sample point and the `(theta, u)` of each variant there.
pub type LineRow = ([f64; 2], Vec<(f64, [f64; 2])>);

/// Reconstructed values along a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSample {
    pub t: f64,
    pub variants: Vec<Variant>,
    pub rows: Vec<LineRow>,
}

impl LineSample {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2");
        for v in &self.variants {
            out.push_str(&format!(",theta_{v},u1_{v},u2_{v}"));
        }
        out.push('\n');
        for (x, vals) in &self.rows {
            out.push_str(&format!("{:.12e},{:.12e}", x[0], x[1]));
            for (th, u) in vals {
                out.push_str(&format!(",{th:.12e},{:.12e},{:.12e}", u[0], u[1]));
            }
            out.push('\n');
        }
        out
    }
}

/// The seven temperature and displacement term groups.
///
/// Correctors without a defining cell problem (`G`, `X`, `J*`) are zero.
fn expansion_terms(fr: &LocalFrame, theta_ref: f64, off: &[usize; 34], meso: &[Jet], micro: &[[f64; 2]]) -> Terms {
    use Symbol::*;
    let g = fr.grad;
    let dth = fr.theta - theta_ref;
    let du = &fr.du;
    let hu = &fr.hu;
    let two = 0..2usize;

    let jet = |s: Symbol, idx: &[usize]| &meso[slot(off, CellProblemId::new(s, idx))];
    let mv = |s: Symbol, idx: &[usize], c: usize| micro[slot(off, CellProblemId::new(s, idx))][c];
    // meso fields whose last index contracts with the macro temperature gradient
    let contracted = |s: Symbol, idx: &[usize]| {
        let mut out = Jet::default();
        for (d, gd) in g.iter().enumerate() {
            let mut full = idx.to_vec();
            full.push(d);
            let j = jet(s, &full);
            for c in 0..2 {
                out.v[c] += gd * j.v[c];
                for k in 0..2 {
                    out.d[c][k] += gd * j.d[c][k];
                    for l in 0..2 {
                        out.dd[c][k][l] += gd * j.dd[c][k][l];
                    }
                }
            }
        }
        out
    };
    let micro_contracted = |s: Symbol, idx: &[usize], c: usize| {
        (0..2)
            .map(|d| {
                let mut full = idx.to_vec();
                full.push(d);
                g[d] * mv(s, &full, c)
            })
            .sum::<f64>()
    };

    // micro functions
    let r = |k: usize| mv(R, &[k], 0);
    let r2 = |i: usize, j: usize| mv(R2, &[i, j], 0);
    let dm = |k: usize| mv(D, &[k], 0);
    let rs = |k: usize| mv(RStar, &[k], 0);
    let ds = |a: usize| micro_contracted(DStar, &[a], 0);
    let es = |a: usize, b: usize| mv(EStar, &[a, b], 0);
    let t1 = |n: usize, m: usize, i: usize| mv(T, &[n, m], i);
    let t2 = |q: usize, n: usize, m: usize, i: usize| mv(T2, &[q, n, m], i);
    let l1 = |n: usize, m: usize, i: usize| mv(L, &[n, m], i);
    let o = |i: usize| mv(O, &[], i);
    let os = |i: usize| mv(OStar, &[], i);
    let ps = |i: usize| mv(PStar, &[], i);
    let ts = |n: usize, m: usize, i: usize| mv(TStar, &[n, m], i);
    let fs = |a: usize, i: usize| mv(FStar, &[a], i);
    let uu = |a: usize, m: usize, i: usize| micro_contracted(U, &[a, m], i);
    let qs = |i: usize| micro_contracted(QStar, &[], i);
    let vv = |a: usize, i: usize| mv(V, &[a], i);

    // meso functions
    let m0: [Jet; 2] = [*jet(M0, &[0]), *jet(M0, &[1])];
    let p0 = *jet(P0, &[]);
    let n0 = |a: usize, m: usize| jet(N0, &[a, m]);
    let a0 = *jet(A0, &[]);
    let m2 = |a: usize, b: usize| jet(M0Pair, &[a, b]);
    let c0: [Jet; 2] = [contracted(C0, &[0]), contracted(C0, &[1])];
    let b0 = |a: usize, b: usize| jet(B0, &[a, b]);
    let e0 = |a: usize, b: usize| jet(E0, &[a, b]);
    let f0 = |a: usize| jet(F0, &[a]);
    let n2 = |a: usize, b: usize, m: usize| jet(N0Pair, &[a, b, m]);
    let z0 = |a: usize, m: usize| contracted(Z0, &[a, m]);
    let q0 = contracted(Q0, &[]);
    let h0 = |a: usize| jet(H0, &[a]);
    let w0 = |a: usize| jet(W0, &[a]);
    let j0 = |a: usize, b: usize, m: usize| jet(J0, &[a, b, m]);

    // sums against micro weights
    let r_dot = |j: &Jet, c: usize| (0..2).map(|k| r(k) * j.d[c][k]).sum::<f64>();
    let d_dot = |j: &Jet, c: usize| (0..2).map(|k| dm(k) * j.d[c][k]).sum::<f64>();
    let r2_dd = |j: &Jet, c: usize| {
        let mut s = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                s += r2(i, k) * j.dd[c][i][k];
            }
        }
        s
    };
    // Σ_{p,n} T^n_{ip} ∂_n f_p
    let t_div = |j: &Jet, i: usize| {
        let mut s = 0.0;
        for n in 0..2 {
            for p in 0..2 {
                s += t1(n, p, i) * j.d[p][n];
            }
        }
        s
    };
    // Σ_{p,q,n} T^{qn}_{ip} ∂²_{qn} f_p
    let t2_dd = |j: &Jet, i: usize| {
        let mut s = 0.0;
        for q in 0..2 {
            for n in 0..2 {
                for p in 0..2 {
                    s += t2(q, n, p, i) * j.dd[p][q][n];
                }
            }
        }
        s
    };
    let l_div = |j: &Jet, i: usize| {
        let mut s = 0.0;
        for n in 0..2 {
            for p in 0..2 {
                s += l1(n, p, i) * j.d[p][n];
            }
        }
        s
    };

    let mut th = [0.0; 7];
    th[0] = fr.theta;

    // first order meso and micro terms
    for a in two.clone() {
        th[1] += m0[a].v[0] * g[a];
        th[2] += (r_dot(&m0[a], 0) + r(a)) * g[a];
        th[3] += (r2_dd(&m0[a], 0) + d_dot(&m0[a], 0) + dm(a)) * g[a];
    }

    // A* includes the coupling-defect part driven by the meso thermal-stress gradient
    let mut a_star = mv(AStar, &[], 0);
    for m in 0..2 {
        for a in 0..2 {
            a_star += es(m, a) * p0.d[m][a];
        }
    }

    th[4] += a0.v[0] * fr.theta_t;
    th[5] += r_dot(&a0, 0) * fr.theta_t;
    th[6] += (r2_dd(&a0, 0) + d_dot(&a0, 0) + a_star) * fr.theta_t;
    for a in 0..2 {
        for b in 0..2 {
            let hab = fr.hess[a][b];
            let gg = g[a] * g[b];
            let xt = fr.u_xt[a][b];
            let mut r2_dm = 0.0;
            for j in 0..2 {
                r2_dm += (r2(a, j) + r2(j, a)) * m0[b].d[0][j];
            }
            th[4] += m2(a, b).v[0] * hab - b0(a, b).v[0] * gg - e0(a, b).v[0] * xt;
            th[5] += -r_dot(e0(a, b), 0) * xt + (r_dot(m2(a, b), 0) + r(a) * m0[b].v[0]) * hab;
            let rs_dm: f64 = (0..2).map(|k| rs(k) * m0[b].d[0][k]).sum();
            th[5] -= (r_dot(b0(a, b), 0) + m0[a].v[0] * rs(b) + m0[a].v[0] * rs_dm) * gg;
            th[6] += (r2_dd(m2(a, b), 0) + d_dot(m2(a, b), 0) + r2(a, b) + r2_dm + dm(a) * m0[b].v[0]) * hab;
            th[6] -= (r2_dd(b0(a, b), 0) + d_dot(b0(a, b), 0)) * gg;
            let mut es_dn = 0.0;
            for p in 0..2 {
                for n in 0..2 {
                    es_dn += es(p, n) * n0(b, a).d[p][n];
                }
            }
            th[6] -= (r2_dd(e0(a, b), 0) + d_dot(e0(a, b), 0) + es(a, b) + es_dn) * xt;
        }
    }
    for a in 0..2 {
        let ma = &m0[a];
        th[4] += c0[a].v[0] * g[a];
        let mut rx = 0.0;
        let mut dx = 0.0;
        let mut r2_yx = 0.0;
        let mut ds_dm = 0.0;
        for k in 0..2 {
            rx += r(k) * ma.t[0] * g[k];
            dx += dm(k) * ma.t[0] * g[k];
            ds_dm += ds(k) * ma.d[0][k];
            for j in 0..2 {
                // ∂²M/∂y_k∂x_j and ∂²M/∂x_k∂y_j
                r2_yx += r2(k, j) * (ma.td[0][k] * g[j] + ma.td[0][j] * g[k]);
            }
        }
        th[5] += (r_dot(&c0[a], 0) + rx) * g[a];
        th[6] += (r2_dd(&c0[a], 0) + d_dot(&c0[a], 0) + r2_yx + dx + ds(a) + ds_dm) * g[a];
    }

    let mut u = [[0.0; 2]; 7];
    u[0] = fr.u;
    for i in 0..2 {
        let mut v = [0.0; 7];
        let pm = |m: usize| p0.v[m];
        let dp = |m: usize, n: usize| p0.d[m][n];
        let ddp = |m: usize, q: usize, n: usize| p0.dd[m][q][n];
        let px = |m: usize, n: usize| p0.t[m] * g[n];

        v[1] -= pm(i) * dth;
        v[2] += o(i) * dth;
        v[3] -= ps(i) * dth;
        for a in 0..2 {
            for m in 0..2 {
                v[2] += t1(a, m, i) * dp(m, a) * dth;
                v[3] -= l1(a, m, i) * dp(m, a) * dth;
                for b in 0..2 {
                    v[3] -= t2(a, b, m, i) * ddp(m, a, b) * dth;
                }
            }
        }
        for a in 0..2 {
            for m in 0..2 {
                let gm = du[m][a];
                let n = n0(a, m);
                v[1] += n.v[i] * gm;
                v[2] += (t_div(n, i) + t1(a, m, i)) * gm;
                v[3] += (t2_dd(n, i) + l_div(n, i) + l1(a, m, i)) * gm;
            }
        }

        // second order meso terms
        for a in 0..2 {
            v[4] += f0(a).v[i] * fr.u_tt[a];
            v[4] -= h0(a).v[i] * g[a];
            v[4] += w0(a).v[i] * g[a] * dth;
            for m in 0..2 {
                v[4] += z0(a, m).v[i] * du[m][a];
                for b in 0..2 {
                    v[4] += n2(a, b, m).v[i] * hu[m][a][b];
                    v[4] -= j0(a, b, m).v[i] * g[a] * du[m][b];
                }
            }
        }
        v[4] -= q0.v[i] * dth;

        // mixed meso-micro terms
        for a in 0..2 {
            let (fa, ha, wa) = (f0(a), h0(a), w0(a));
            v[5] += t_div(fa, i) * fr.u_tt[a];
            let mut th_corr = t_div(ha, i) + o(i) * m0[a].v[0];
            let mut tp = 0.0;
            for m in 0..2 {
                th_corr += t1(a, m, i) * pm(m);
                for n in 0..2 {
                    tp += ts(n, m, i) * dp(m, n);
                }
            }
            v[5] -= th_corr * g[a];
            v[5] += (t_div(wa, i) + m0[a].v[0] * os(i) + m0[a].v[0] * tp) * g[a] * dth;
            for m in 0..2 {
                let zam = z0(a, m);
                let n = n0(a, m);
                let mut tnx = 0.0;
                for n_ in 0..2 {
                    for p in 0..2 {
                        tnx += t1(n_, p, i) * n.t[p] * g[n_];
                    }
                }
                v[5] += (t_div(&zam, i) + tnx) * du[m][a];
                for b in 0..2 {
                    let mut tn = 0.0;
                    for p in 0..2 {
                        tn += t1(a, p, i) * n0(b, m).v[p];
                    }
                    v[5] += (t_div(n2(a, b, m), i) + tn) * hu[m][a][b];
                    let mut tsn = 0.0;
                    for n_ in 0..2 {
                        for p in 0..2 {
                            tsn += ts(n_, p, i) * n0(b, m).d[p][n_];
                        }
                    }
                    v[5] -= (t_div(j0(a, b, m), i) + m0[a].v[0] * ts(b, m, i) + m0[a].v[0] * tsn) * g[a] * du[m][b];
                }
            }
        }
        {
            let mut s = t_div(&q0, i);
            for m in 0..2 {
                for n in 0..2 {
                    s += t1(n, m, i) * px(m, n);
                }
            }
            v[5] -= s * dth;
        }

        // second order micro terms
        for a in 0..2 {
            let (fa, ha, wa) = (f0(a), h0(a), w0(a));
            v[6] += (t2_dd(fa, i) + l_div(fa, i) + fs(a, i)) * fr.u_tt[a];
            let mut heat = vv(a, i) + t2_dd(ha, i) + l_div(ha, i) + ps(i) * m0[a].v[0];
            for m in 0..2 {
                heat += l1(a, m, i) * pm(m);
                for n in 0..2 {
                    heat += (t2(a, n, m, i) + t2(n, a, m, i)) * dp(m, n);
                }
            }
            for n in 0..2 {
                heat += vv(n, i) * m0[a].d[0][n];
            }
            v[6] -= heat * g[a];
            v[6] += (t2_dd(wa, i) + l_div(wa, i)) * g[a] * dth;
            for m in 0..2 {
                let zam = z0(a, m);
                let n = n0(a, m);
                let mut s = uu(a, m, i) + t2_dd(&zam, i) + l_div(&zam, i);
                for q in 0..2 {
                    for n_ in 0..2 {
                        for p in 0..2 {
                            // ∂²N/∂y_q∂x_n and ∂²N/∂x_q∂y_n
                            s += t2(q, n_, p, i) * (n.td[p][q] * g[n_] + n.td[p][n_] * g[q]);
                        }
                    }
                }
                for n_ in 0..2 {
                    for p in 0..2 {
                        s += l1(n_, p, i) * n.t[p] * g[n_];
                        s += uu(n_, p, i) * n.d[p][n_];
                    }
                }
                v[6] += s * du[m][a];
                for b in 0..2 {
                    let mut s = t2(a, b, m, i) + t2_dd(n2(a, b, m), i) + l_div(n2(a, b, m), i);
                    for p in 0..2 {
                        s += l1(a, p, i) * n0(b, m).v[p];
                        for n_ in 0..2 {
                            s += (t2(a, n_, p, i) + t2(n_, a, p, i)) * n0(b, m).d[p][n_];
                        }
                    }
                    v[6] += s * hu[m][a][b];
                    v[6] -= (t2_dd(j0(a, b, m), i) + l_div(j0(a, b, m), i)) * g[a] * du[m][b];
                }
            }
        }
        {
            let mut s = qs(i) + t2_dd(&q0, i) + l_div(&q0, i);
            for m in 0..2 {
                for q in 0..2 {
                    for n in 0..2 {
                        s += t2(q, n, m, i) * (p0.td[m][n] * g[q] + p0.td[m][q] * g[n]);
                    }
                }
                for n in 0..2 {
                    s += uu(n, m, i) * dp(m, n) + l1(n, m, i) * px(m, n);
                }
            }
            v[6] -= s * dth;
        }

        for k in 1..7 {
            u[k][i] = v[k];
        }
    }
    Terms { theta: th, u }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_dense_and_distinct() {
        let off = slot_offsets();
        let mut seen = vec![false; off[33]];
        for s in Symbol::ALL {
            for id in s.ids() {
                let k = slot(&off, id);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("fine".parse::<Variant>().is_err());
    }

    #[test]
    fn sots_weights_drop_micro_groups() {
        let w = Variant::Sots.weights(0.3, 0.1);
        assert_eq!([w[2], w[3], w[5], w[6]], [0.0; 4]);
        let h = Variant::Hots.weights(0.3, 0.1);
        assert!((h[3] - 0.01 / 0.3).abs() < 1e-15);
    }
}
