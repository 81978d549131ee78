//! Temperature-dependent constituent properties.

use serde::{Deserialize, Serialize};

use crate::error::{HotsError, Result};
use crate::tensor::{scale2, Stiffness, Tensor2, IDENTITY2, ZERO2};

/// Polynomial in temperature, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn constant(v: f64) -> Self {
        Polynomial(vec![v])
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * theta + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.0.len() <= 1 {
            return Polynomial(vec![0.0]);
        }
        Polynomial(self.0.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect())
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().skip(1).all(|&c| c == 0.0)
    }
}

/// Isotropic constituent with polynomial properties. Poisson's ratio is
/// temperature independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub name: String,
    pub rho: Polynomial,
    pub c: Polynomial,
    pub k: Polynomial,
    pub e: Polynomial,
    pub nu: f64,
    pub beta: Polynomial,
}

/// How the heat-equation coupling tensor is obtained from the thermal modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CouplingMode {
    /// Reference temperature times the thermal modulus.
    ReferenceTemperature { theta_ref: f64 },
    /// A fixed multiple of the thermal modulus.
    Scaled { gamma: f64 },
    /// No coupling.
    Zero,
}

impl CouplingMode {
    pub fn factor(&self) -> f64 {
        match *self {
            CouplingMode::ReferenceTemperature { theta_ref } => theta_ref,
            CouplingMode::Scaled { gamma } => gamma,
            CouplingMode::Zero => 0.0,
        }
    }
}

/// All coefficients of one constituent at one temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCoefficients {
    pub rho: f64,
    pub c: f64,
    pub k: Tensor2,
    pub stiffness: Stiffness,
    pub beta: Tensor2,
    pub coupling: Tensor2,
}

impl PointCoefficients {
    /// Volumetric heat capacity `ρ c`.
    pub fn capacity(&self) -> f64 {
        self.rho * self.c
    }

    pub fn zero() -> Self {
        PointCoefficients { rho: 0.0, c: 0.0, k: ZERO2, stiffness: Stiffness::ZERO, beta: ZERO2, coupling: ZERO2 }
    }
}

impl MaterialModel {
    /// Built-in constituents numbered 1 to 3.
    pub fn builtin(index: usize) -> Option<Self> {
        let p = |v: &[f64]| Polynomial(v.to_vec());
        let m = match index {
            1 => MaterialModel {
                name: "material1".into(),
                rho: p(&[4410.0]),
                c: p(&[808.3, 0.081, 8e-5]),
                k: p(&[1000.0, 0.1, 1e-5]),
                e: p(&[3e7, -300.0, -0.03]),
                nu: 0.30,
                beta: p(&[19.0, -1.9e-3, -1.9e-7]),
            },
            2 => MaterialModel {
                name: "material2".into(),
                rho: p(&[5600.0]),
                c: p(&[615.6, 0.062, 6e-5]),
                k: p(&[1.0, 1e-4, 1e-8]),
                e: p(&[6e6, -60.0, -0.006]),
                nu: 0.20,
                beta: p(&[17.0, -1.7e-3, -1.7e-7]),
            },
            3 => MaterialModel {
                name: "material3".into(),
                rho: p(&[5800.0]),
                c: p(&[590.9, 0.059, 6e-5]),
                k: p(&[200.0, 0.02, 2e-6]),
                e: p(&[2.5e7, -250.0, -0.025]),
                nu: 0.25,
                beta: p(&[18.0, -1.8e-3, -1.8e-7]),
            },
            _ => return None,
        };
        Some(m)
    }

    pub fn builtin_by_name(name: &str) -> Option<Self> {
        name.strip_prefix("material").and_then(|s| s.parse().ok()).and_then(Self::builtin)
    }

    /// Temperature-independent constituent, handy for checks.
    pub fn constant(name: &str, rho: f64, c: f64, k: f64, e: f64, nu: f64, beta: f64) -> Self {
        MaterialModel {
            name: name.into(),
            rho: Polynomial::constant(rho),
            c: Polynomial::constant(c),
            k: Polynomial::constant(k),
            e: Polynomial::constant(e),
            nu,
            beta: Polynomial::constant(beta),
        }
    }

    pub fn is_temperature_independent(&self) -> bool {
        [&self.rho, &self.c, &self.k, &self.e, &self.beta].iter().all(|p| p.is_constant())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(HotsError::Material(format!("{}: Poisson ratio {} outside (-1, 0.5)", self.name, self.nu)));
        }
        for (label, p) in [("rho", &self.rho), ("c", &self.c), ("k", &self.k), ("E", &self.e), ("beta", &self.beta)] {
            if p.0.is_empty() || p.0.iter().any(|c| !c.is_finite()) {
                return Err(HotsError::Material(format!("{}: bad polynomial for {label}", self.name)));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, theta: f64, coupling: CouplingMode) -> Result<PointCoefficients> {
        let rho = self.rho.eval(theta);
        let c = self.c.eval(theta);
        let k = self.k.eval(theta);
        let e = self.e.eval(theta);
        let beta = self.beta.eval(theta);
        for (label, v) in [("rho", rho), ("c", c), ("k", k), ("E", e)] {
            if !(v > 0.0) {
                return Err(HotsError::Material(format!(
                    "{}: {label} = {v} is not positive at θ = {theta}",
                    self.name
                )));
            }
        }
        let beta_t = scale2(&IDENTITY2, beta);
        Ok(PointCoefficients {
            rho,
            c,
            k: scale2(&IDENTITY2, k),
            stiffness: Stiffness::plane_strain(e, self.nu),
            beta: beta_t,
            coupling: scale2(&beta_t, coupling.factor()),
        })
    }

    /// Temperature derivative of every coefficient. Plane-strain stiffness is
    /// linear in Young's modulus, so its derivative scales the unit tensor.
    pub fn dtheta(&self, theta: f64, coupling: CouplingMode) -> PointCoefficients {
        let d = |p: &Polynomial| p.derivative().eval(theta);
        let dbeta = scale2(&IDENTITY2, d(&self.beta));
        PointCoefficients {
            rho: d(&self.rho),
            c: d(&self.c),
            k: scale2(&IDENTITY2, d(&self.k)),
            stiffness: Stiffness::plane_strain(1.0, self.nu).scaled(d(&self.e)),
            beta: dbeta,
            coupling: scale2(&dbeta, coupling.factor()),
        }
    }
}
