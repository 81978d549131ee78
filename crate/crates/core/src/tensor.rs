//! Small fixed-size tensors for two-dimensional problems.

use serde::{Deserialize, Serialize};

pub type Tensor2 = [[f64; 2]; 2];

pub const IDENTITY2: Tensor2 = [[1.0, 0.0], [0.0, 1.0]];
pub const ZERO2: Tensor2 = [[0.0; 2]; 2];

pub fn scale2(a: &Tensor2, s: f64) -> Tensor2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn add2(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn sub2(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

/// Fourth-order elasticity tensor `c[i][j][k][l]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stiffness(pub [[[[f64; 2]; 2]; 2]; 2]);

const VOIGT: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

impl Stiffness {
    pub const ZERO: Stiffness = Stiffness([[[[0.0; 2]; 2]; 2]; 2]);

    /// Isotropic tensor from Lamé parameters.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    for (l, v) in cijk.iter_mut().enumerate() {
                        *v = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                    }
                }
            }
        }
        Stiffness(c)
    }

    /// Plane-strain tensor from Young's modulus and Poisson ratio.
    pub fn plane_strain(e: f64, nu: f64) -> Self {
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        Self::isotropic(lambda, mu)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    pub fn to_voigt(&self) -> [[f64; 3]; 3] {
        let mut v = [[0.0; 3]; 3];
        for (a, &(i, j)) in VOIGT.iter().enumerate() {
            for (b, &(k, l)) in VOIGT.iter().enumerate() {
                v[a][b] = self.0[i][j][k][l];
            }
        }
        v
    }

    /// Inverse of [`Stiffness::to_voigt`], filling all minor-symmetric slots.
    pub fn from_voigt(v: &[[f64; 3]; 3]) -> Self {
        let idx = |i: usize, j: usize| if i == j { i } else { 2 };
        let mut c = [[[[0.0; 2]; 2]; 2]; 2];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    for (l, x) in cijk.iter_mut().enumerate() {
                        *x = v[idx(i, j)][idx(k, l)];
                    }
                }
            }
        }
        Stiffness(c)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut c = self.0;
        for ci in c.iter_mut() {
            for cij in ci.iter_mut() {
                for cijk in cij.iter_mut() {
                    for x in cijk.iter_mut() {
                        *x = f(*x);
                    }
                }
            }
        }
        Stiffness(c)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut c = self.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        c[i][j][k][l] = f(self.0[i][j][k][l], other.0[i][j][k][l]);
                    }
                }
            }
        }
        Stiffness(c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().fold(0.0, |m, &x| m.max(x.abs()))
    }
}

pub fn tensor2_max_abs(a: &Tensor2) -> f64 {
    a.iter().flatten().fold(0.0, |m, &x| m.max(x.abs()))
}
