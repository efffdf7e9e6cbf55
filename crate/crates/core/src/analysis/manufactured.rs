//! Closed-form states with separable stream functions `ψ = f(x₁)f(x₂)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{FluidParams, Grid, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// `f(t) = t²(1−t)²`
    PolyQuartic,
    /// `f(t) = sin²(πt)`
    Trig,
}

impl std::str::FromStr for ManufacturedCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly-quartic" => Ok(ManufacturedCase::PolyQuartic),
            "trig" => Ok(ManufacturedCase::Trig),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

impl ManufacturedCase {
    pub fn id(&self) -> &'static str {
        match self {
            ManufacturedCase::PolyQuartic => "poly-quartic",
            ManufacturedCase::Trig => "trig",
        }
    }

    /// k-th derivative of the profile, k ≤ 4.
    pub fn profile(&self, t: f64, k: usize) -> f64 {
        match self {
            ManufacturedCase::PolyQuartic => match k {
                0 => (t * (1.0 - t)).powi(2),
                1 => 2.0 * t - 6.0 * t * t + 4.0 * t.powi(3),
                2 => 2.0 - 12.0 * t + 12.0 * t * t,
                3 => -12.0 + 24.0 * t,
                4 => 24.0,
                _ => 0.0,
            },
            ManufacturedCase::Trig => {
                let s = 2.0 * PI * t;
                match k {
                    0 => (PI * t).sin().powi(2),
                    1 => PI * s.sin(),
                    2 => 2.0 * PI * PI * s.cos(),
                    3 => -4.0 * PI.powi(3) * s.sin(),
                    4 => -8.0 * PI.powi(4) * s.cos(),
                    _ => unreachable!("profile derivatives are tabulated up to order 4"),
                }
            }
        }
    }

    fn d(&self, x: f64, y: f64, kx: usize, ky: usize) -> f64 {
        self.profile(x, kx) * self.profile(y, ky)
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.d(x, y, 0, 0)
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        (self.d(x, y, 0, 1), -self.d(x, y, 1, 0))
    }

    /// `ω = curl σ(y) = −Δψ + αΔ²ψ`
    pub fn omega(&self, x: f64, y: f64, alpha: f64) -> f64 {
        let lap = self.d(x, y, 2, 0) + self.d(x, y, 0, 2);
        let bih = self.d(x, y, 4, 0) + 2.0 * self.d(x, y, 2, 2) + self.d(x, y, 0, 4);
        -lap + alpha * bih
    }

    /// `u = −νΔy + curl σ(y) × y` with zero pressure.
    pub fn forcing(&self, x: f64, y: f64, params: FluidParams) -> (f64, f64) {
        let lap_dy = self.d(x, y, 2, 1) + self.d(x, y, 0, 3);
        let lap_dx = self.d(x, y, 3, 0) + self.d(x, y, 1, 2);
        let (y1, y2) = self.velocity(x, y);
        let w = self.omega(x, y, params.alpha);
        (-params.nu * lap_dy - w * y2, params.nu * lap_dx + w * y1)
    }
}

/// Exact stream function and forcing sampled on `grid`.
pub fn manufactured_case(
    id: &str,
    grid: Grid,
    params: FluidParams,
) -> Result<(ScalarField, VectorField)> {
    let case: ManufacturedCase = id.parse()?;
    let psi = ScalarField::from_fn(grid, |x, y| case.psi(x, y));
    let u = VectorField::from_fn(grid, |x, y| case.forcing(x, y, params));
    Ok((psi, u))
}
