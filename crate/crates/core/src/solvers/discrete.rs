//! Assembled stream-function operators.
//!
//! Unknowns are stream-function values at interior nodes (`ψ = 0` on Γ);
//! `∂ψ/∂n = 0` enters through the ghost mirror of the clamped Laplacian.
//! Vector fields are stacked `[c1; c2]` over all nodes.

use crate::grid::{Grid, VectorField};
use crate::linalg::{CsrMatrix, Triplets};

/// Discretization of the transport term `y·∇ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Advection {
    Centered,
    Upwind,
}

impl std::str::FromStr for Advection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "centered" => Ok(Advection::Centered),
            "upwind" => Ok(Advection::Upwind),
            _ => Err(format!("expected 'centered' or 'upwind', got '{s}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StreamOperators {
    grid: Grid,
    /// Clamped Laplacian, interior ψ → all nodes.
    pub lap_clamped: CsrMatrix,
    /// 5-point Laplacian, all nodes → interior rows.
    pub lap5: CsrMatrix,
    /// Clamped biharmonic `lap5 · lap_clamped`.
    pub biharm: CsrMatrix,
    /// Velocity `(∂₂ψ, −∂₁ψ)`, interior ψ → stacked nodal vector, zero on Γ.
    pub velocity: CsrMatrix,
    /// Centered curl of a nodal vector field at interior nodes; loads the state with a control.
    pub curl: CsrMatrix,
    /// Weak curl `h⁻² Vᵀ M`, the exact transpose of `velocity`; loads the adjoint.
    pub weak_curl: CsrMatrix,
    /// Zero extension of interior values.
    pub prolong: CsrMatrix,
    /// Trapezoidal weights, stacked twice for vector fields.
    pub mass: Vec<f64>,
}

impl StreamOperators {
    pub fn new(grid: Grid) -> Self {
        let n = grid.len();
        let ni = grid.interior_len();
        let h = grid.h();
        let h2 = h * h;
        let nx = grid.nx();
        let ny = grid.ny();
        let int = |i: usize, j: usize| grid.interior_index(i, j);

        let mut t = Triplets::new(n, ni);
        for (i, j) in grid.nodes() {
            let row = grid.index(i, j);
            if let Some(m) = int(i, j) {
                t.push(row, m, -4.0 / h2);
                for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if let Some(c) = int(a, b) {
                        t.push(row, c, 1.0 / h2);
                    }
                }
            } else {
                // ghost mirror across each side the node lies on
                let mut nbrs = Vec::new();
                if i == 0 {
                    nbrs.push((1, j));
                }
                if i == nx - 1 {
                    nbrs.push((nx - 2, j));
                }
                if j == 0 {
                    nbrs.push((i, 1));
                }
                if j == ny - 1 {
                    nbrs.push((i, ny - 2));
                }
                for (a, b) in nbrs {
                    if let Some(c) = int(a, b) {
                        t.push(row, c, 2.0 / h2);
                    }
                }
            }
        }
        let lap_clamped = t.build();

        let mut t = Triplets::new(ni, n);
        for (i, j) in grid.interior_nodes() {
            let r = int(i, j).unwrap();
            t.push(r, grid.index(i, j), -4.0 / h2);
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                t.push(r, grid.index(a, b), 1.0 / h2);
            }
        }
        let lap5 = t.build();
        let biharm = lap5.mul(&lap_clamped);

        let mut t = Triplets::new(2 * n, ni);
        for (i, j) in grid.interior_nodes() {
            let k = grid.index(i, j);
            if let Some(c) = int(i, j + 1) {
                t.push(k, c, 0.5 / h);
            }
            if let Some(c) = int(i, j - 1) {
                t.push(k, c, -0.5 / h);
            }
            if let Some(c) = int(i + 1, j) {
                t.push(n + k, c, -0.5 / h);
            }
            if let Some(c) = int(i - 1, j) {
                t.push(n + k, c, 0.5 / h);
            }
        }
        let velocity = t.build();

        let mut t = Triplets::new(ni, 2 * n);
        for (i, j) in grid.interior_nodes() {
            let r = int(i, j).unwrap();
            t.push(r, n + grid.index(i + 1, j), 0.5 / h);
            t.push(r, n + grid.index(i - 1, j), -0.5 / h);
            t.push(r, grid.index(i, j + 1), -0.5 / h);
            t.push(r, grid.index(i, j - 1), 0.5 / h);
        }
        let curl = t.build();

        let w = grid.weights();
        let mut mass = w.clone();
        mass.extend_from_slice(&w);
        let weak_curl = velocity
            .transpose()
            .mul(&CsrMatrix::diagonal(&mass))
            .scale(1.0 / h2);

        let mut t = Triplets::new(n, ni);
        for (i, j) in grid.interior_nodes() {
            t.push(grid.index(i, j), int(i, j).unwrap(), 1.0);
        }
        let prolong = t.build();

        StreamOperators {
            grid,
            lap_clamped,
            lap5,
            biharm,
            velocity,
            curl,
            weak_curl,
            prolong,
            mass,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `ω = −Δψ + αΔ²ψ` at all nodes. On Γ the `αΔ²ψ` part is linearly
    /// extrapolated along the inward normal; corners are unused and carry
    /// only the clamped vorticity.
    pub fn omega_map(&self, alpha: f64) -> CsrMatrix {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let base = self.lap_clamped.scale(-1.0);
        if alpha == 0.0 {
            return base;
        }
        let mut t = Triplets::new(g.len(), g.interior_len());
        let put_row = |t: &mut Triplets, row: usize, from: usize, a: f64| {
            for (c, v) in self.biharm.row(from) {
                t.push(row, c, a * alpha * v);
            }
        };
        for (i, j) in g.nodes() {
            let row = g.index(i, j);
            if let Some(m) = g.interior_index(i, j) {
                put_row(&mut t, row, m, 1.0);
                continue;
            }
            let corner = (i == 0 || i == nx - 1) && (j == 0 || j == ny - 1);
            if corner {
                continue;
            }
            let (a, b) = if i == 0 {
                ((1, j), (2, j))
            } else if i == nx - 1 {
                ((nx - 2, j), (nx - 3, j))
            } else if j == 0 {
                ((i, 1), (i, 2))
            } else {
                ((i, ny - 2), (i, ny - 3))
            };
            put_row(&mut t, row, g.interior_index(a.0, a.1).unwrap(), 2.0);
            put_row(&mut t, row, g.interior_index(b.0, b.1).unwrap(), -1.0);
        }
        base.add(&t.build())
    }

    /// `ω ↦ y·∇ω` at interior rows for a frozen velocity.
    pub fn advection(&self, y: &VectorField, scheme: Advection) -> CsrMatrix {
        let g = self.grid;
        let h = g.h();
        let mut t = Triplets::new(g.interior_len(), g.len());
        for (i, j) in g.interior_nodes() {
            let r = g.interior_index(i, j).unwrap();
            let (a, b) = y.at(i, j);
            for (vel, lo, hi) in [
                (a, g.index(i - 1, j), g.index(i + 1, j)),
                (b, g.index(i, j - 1), g.index(i, j + 1)),
            ] {
                match scheme {
                    Advection::Centered => {
                        t.push(r, hi, 0.5 * vel / h);
                        t.push(r, lo, -0.5 * vel / h);
                    }
                    Advection::Upwind => {
                        let k = g.index(i, j);
                        if vel > 0.0 {
                            t.push(r, k, vel / h);
                            t.push(r, lo, -vel / h);
                        } else {
                            t.push(r, hi, vel / h);
                            t.push(r, k, -vel / h);
                        }
                    }
                }
            }
        }
        t.build()
    }

    /// `δy ↦ δy·∇ω` at interior rows, with the one-sided choices of `y` for upwinding.
    pub fn advection_velocity_jacobian(
        &self,
        omega: &[f64],
        y: &VectorField,
        scheme: Advection,
    ) -> CsrMatrix {
        let g = self.grid;
        let n = g.len();
        let h = g.h();
        let mut t = Triplets::new(g.interior_len(), 2 * n);
        for (i, j) in g.interior_nodes() {
            let r = g.interior_index(i, j).unwrap();
            let k = g.index(i, j);
            let (a, b) = y.at(i, j);
            for (comp, vel, lo, hi) in [
                (0, a, g.index(i - 1, j), g.index(i + 1, j)),
                (1, b, g.index(i, j - 1), g.index(i, j + 1)),
            ] {
                let d = match scheme {
                    Advection::Centered => (omega[hi] - omega[lo]) / (2.0 * h),
                    Advection::Upwind if vel > 0.0 => (omega[k] - omega[lo]) / h,
                    Advection::Upwind => (omega[hi] - omega[k]) / h,
                };
                t.push(r, comp * n + k, d);
            }
        }
        t.build()
    }

    /// `p ↦ (y × p)_z = y₁p₂ − y₂p₁` at interior nodes.
    pub fn cross_with(&self, y: &VectorField) -> CsrMatrix {
        let g = self.grid;
        let n = g.len();
        let mut t = Triplets::new(g.interior_len(), 2 * n);
        for (i, j) in g.interior_nodes() {
            let r = g.interior_index(i, j).unwrap();
            let k = g.index(i, j);
            let (a, b) = y.at(i, j);
            t.push(r, n + k, a);
            t.push(r, k, -b);
        }
        t.build()
    }

    pub fn velocity_field(&self, psi_interior: &[f64]) -> VectorField {
        VectorField::from_stacked(self.grid, &self.velocity.matvec(psi_interior)).unwrap()
    }

    /// `h² M⁻¹ Cᵀ q`, the control-space representative of the functional `w ↦ h² qᵀ C w`.
    pub fn control_sensitivity(&self, q: &[f64]) -> VectorField {
        let ct = self.curl.matvec_t(q);
        let h2 = self.grid.h() * self.grid.h();
        let v: Vec<f64> = ct.iter().zip(&self.mass).map(|(c, m)| h2 * c / m).collect();
        VectorField::from_stacked(self.grid, &v).unwrap()
    }

    /// `(a, b)` in the trapezoidal L² product of stacked vectors.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.mass).map(|((x, y), w)| x * y * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_with, velocity_from_stream, Closure, ScalarField};

    fn clamped_psi(g: Grid) -> ScalarField {
        ScalarField::from_fn(g, |x, y| {
            (x * (1.0 - x) * y * (1.0 - y)).powi(2) * (1.0 + x * y.sin())
        })
        .zero_boundary()
    }

    #[test]
    fn clamped_laplacian_matches_field_operator() {
        let g = Grid::square(17).unwrap();
        let ops = StreamOperators::new(g);
        let psi = clamped_psi(g);
        let got = ops.lap_clamped.matvec(&psi.interior_values());
        let want = laplacian_with(&psi, Closure::Clamped);
        for (a, b) in got.iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn velocity_matches_field_operator_inside() {
        let g = Grid::square(17).unwrap();
        let ops = StreamOperators::new(g);
        let psi = clamped_psi(g);
        let v = ops.velocity_field(&psi.interior_values());
        let w = velocity_from_stream(&psi);
        for (i, j) in g.interior_nodes() {
            let (a, b) = v.at(i, j);
            let (c, d) = w.at(i, j);
            assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
        }
        assert_eq!(v.boundary_max_abs(), 0.0);
    }

    #[test]
    fn weak_curl_is_centered_curl_away_from_boundary() {
        let g = Grid::square(17).unwrap();
        let ops = StreamOperators::new(g);
        let u = VectorField::from_fn(g, |x, y| (x * y, x * x - y));
        let a = ops.weak_curl.matvec(&u.stacked());
        let b = ops.curl.matvec(&u.stacked());
        for (i, j) in g.interior_nodes() {
            if i > 1 && j > 1 && i < g.nx() - 2 && j < g.ny() - 2 {
                let m = g.interior_index(i, j).unwrap();
                assert!((a[m] - b[m]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn biharmonic_symmetric() {
        let g = Grid::square(11).unwrap();
        let ops = StreamOperators::new(g);
        let bt = ops.biharm.transpose();
        let d = ops.biharm.add_scaled(-1.0, &bt);
        assert!(d.max_abs() < 1e-6 * ops.biharm.max_abs());
    }

    #[test]
    fn omega_map_bandwidth() {
        let g = Grid::square(13).unwrap();
        let ops = StreamOperators::new(g);
        let y = VectorField::from_fn(g, |x, y| (y - 0.5, 0.5 - x));
        let k = ops.advection(&y, Advection::Centered).mul(&ops.omega_map(0.1));
        let (kl, ku) = k.bandwidths();
        assert!(kl <= 3 * (g.nx() - 2) && ku <= 3 * (g.nx() - 2));
    }
}
