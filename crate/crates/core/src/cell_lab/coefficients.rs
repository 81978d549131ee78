use serde::{Deserialize, Serialize};

use crate::materials::PointCoefficients;
use crate::tensor::{tensor2_max_abs, Stiffness, Tensor2, ZERO2};

/// Coefficient set used both per element and as a homogenized result.
/// `capacity` is the volumetric heat capacity (`ρ c` for a constituent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub capacity: f64,
    pub rho: f64,
    pub k: Tensor2,
    pub stiffness: Stiffness,
    pub beta: Tensor2,
    pub coupling: Tensor2,
}

impl From<PointCoefficients> for Coefficients {
    fn from(p: PointCoefficients) -> Self {
        Coefficients {
            capacity: p.capacity(),
            rho: p.rho,
            k: p.k,
            stiffness: p.stiffness,
            beta: p.beta,
            coupling: p.coupling,
        }
    }
}

impl Coefficients {
    pub const ZERO: Coefficients =
        Coefficients { capacity: 0.0, rho: 0.0, k: ZERO2, stiffness: Stiffness::ZERO, beta: ZERO2, coupling: ZERO2 };

    /// `a * self + b * other`, component-wise.
    pub fn combine(&self, a: f64, other: &Coefficients, b: f64) -> Coefficients {
        let t2 = |x: &Tensor2, y: &Tensor2| {
            let mut r = ZERO2;
            for i in 0..2 {
                for j in 0..2 {
                    r[i][j] = a * x[i][j] + b * y[i][j];
                }
            }
            r
        };
        Coefficients {
            capacity: a * self.capacity + b * other.capacity,
            rho: a * self.rho + b * other.rho,
            k: t2(&self.k, &other.k),
            stiffness: self.stiffness.zip(&other.stiffness, |x, y| a * x + b * y),
            beta: t2(&self.beta, &other.beta),
            coupling: t2(&self.coupling, &other.coupling),
        }
    }

    /// Largest component-wise difference relative to the size of each group.
    pub fn relative_difference(&self, other: &Coefficients) -> f64 {
        let d = self.combine(1.0, other, -1.0);
        let rel = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
        [
            rel(d.capacity.abs(), self.capacity.abs()),
            rel(d.rho.abs(), self.rho.abs()),
            rel(tensor2_max_abs(&d.k), tensor2_max_abs(&self.k)),
            rel(d.stiffness.max_abs(), self.stiffness.max_abs()),
            rel(tensor2_max_abs(&d.beta), tensor2_max_abs(&self.beta)),
            rel(tensor2_max_abs(&d.coupling), tensor2_max_abs(&self.coupling)),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.capacity.is_finite()
            && self.rho.is_finite()
            && self.k.iter().flatten().all(|v| v.is_finite())
            && self.stiffness.0.iter().flatten().flatten().flatten().all(|v| v.is_finite())
            && self.beta.iter().flatten().all(|v| v.is_finite())
            && self.coupling.iter().flatten().all(|v| v.is_finite())
    }

    /// Flattened values in a fixed order, used for table export.
    pub fn to_row(&self) -> Vec<(String, f64)> {
        let mut row = vec![("S".to_string(), self.capacity), ("rho".to_string(), self.rho)];
        for i in 0..2 {
            for j in 0..2 {
                row.push((format!("k{}{}", i + 1, j + 1), self.k[i][j]));
            }
        }
        let v = self.stiffness.to_voigt();
        for (a, va) in v.iter().enumerate() {
            for (b, x) in va.iter().enumerate() {
                row.push((format!("C{}{}", a + 1, b + 1), *x));
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                row.push((format!("beta{}{}", i + 1, j + 1), self.beta[i][j]));
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                row.push((format!("coupling{}{}", i + 1, j + 1), self.coupling[i][j]));
            }
        }
        row
    }
}
