//! Uniform node lattice on the unit square and the nodal field containers.
//!
//! Nodes are indexed `(i, j)` with `i` along `x₁` and `j` along `x₂`; storage
//! is row-major in `j`, i.e. `k = j * nx + i`.

mod dump;
mod norms;
mod ops;

pub use dump::{read_scalar, read_vector, write_scalar, write_vector, FieldDump};
pub use norms::{inner, inner_vector, norms, norms_vector, NormReport};
pub use ops::{
    advect, advect_centered, cross_z, curl_scalar, curl_vector, divergence, laplacian,
    laplacian_with, partial, cross_scalar, sigma_apply, sigma_apply_vector, trilinear_b,
    velocity_from_stream, Axis, Closure,
};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
}

pub fn make_grid(nx: usize, ny: usize) -> Result<Grid> {
    Grid::new(nx, ny)
}

impl Grid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        let smallest = nx.min(ny);
        if smallest < MIN_NODES {
            return Err(Error::GridTooCoarse {
                min: MIN_NODES,
                got: smallest,
            });
        }
        if nx != ny {
            return Err(Error::NonSquareCells { nx, ny });
        }
        Ok(Grid {
            nx,
            ny,
            h: 1.0 / (nx - 1) as f64,
        })
    }

    /// Square grid with `n` nodes per axis.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// Number of interior nodes, the unknown count of the stream-function systems.
    pub fn interior_len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Index of interior node `(i, j)` in the interior ordering, `None` on Γ.
    #[inline]
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.is_boundary(i, j) {
            None
        } else {
            Some((j - 1) * (self.nx - 2) + (i - 1))
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    /// Trapezoidal quadrature weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wi = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wj = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wi * wj * self.h * self.h
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes().map(|(i, j)| self.weight(i, j)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Viscosity and viscoelastic modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub nu: f64,
    pub alpha: f64,
}

impl FluidParams {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("must be > 0, got {nu}"),
            });
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be >= 0, got {alpha}"),
            });
        }
        Ok(FluidParams { nu, alpha })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.nu, alpha)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(ScalarField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid
            .nodes()
            .map(|(i, j)| {
                let (x1, x2) = grid.coords(i, j);
                f(x1, x2)
            })
            .collect();
        ScalarField { grid, values }
    }

    /// Scatters interior-ordered values onto the lattice, zero on Γ.
    pub fn from_interior(grid: Grid, interior: &[f64]) -> Self {
        let mut s = Self::zeros(grid);
        for (i, j) in grid.interior_nodes() {
            let m = grid.interior_index(i, j).unwrap();
            s.values[grid.index(i, j)] = interior[m];
        }
        s
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.grid
            .interior_nodes()
            .map(|(i, j)| self.at(i, j))
            .collect()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn zero_boundary(mut self) -> Self {
        let g = self.grid;
        for (i, j) in g.nodes() {
            if g.is_boundary(i, j) {
                self.values[g.index(i, j)] = 0.0;
            }
        }
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            c1: vec![0.0; grid.len()],
            c2: vec![0.0; grid.len()],
        }
    }

    pub fn from_components(grid: Grid, c1: Vec<f64>, c2: Vec<f64>) -> Result<Self> {
        grid.check_len(c1.len())?;
        grid.check_len(c2.len())?;
        Ok(VectorField { grid, c1, c2 })
    }

    pub fn from_scalars(a: ScalarField, b: ScalarField) -> Self {
        debug_assert_eq!(a.grid, b.grid);
        VectorField {
            grid: a.grid,
            c1: a.values,
            c2: b.values,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (c1, c2) = grid
            .nodes()
            .map(|(i, j)| {
                let (x1, x2) = grid.coords(i, j);
                f(x1, x2)
            })
            .unzip();
        VectorField { grid, c1, c2 }
    }

    /// Layout `[c1; c2]`, the ordering used by the assembled operators.
    pub fn from_stacked(grid: Grid, stacked: &[f64]) -> Result<Self> {
        let n = grid.len();
        if stacked.len() != 2 * n {
            return Err(Error::ShapeMismatch {
                expected: 2 * n,
                got: stacked.len(),
            });
        }
        Ok(VectorField {
            grid,
            c1: stacked[..n].to_vec(),
            c2: stacked[n..].to_vec(),
        })
    }

    pub fn stacked(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.c1.len());
        out.extend_from_slice(&self.c1);
        out.extend_from_slice(&self.c2);
        out
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn c1(&self) -> &[f64] {
        &self.c1
    }

    pub fn c2(&self) -> &[f64] {
        &self.c2
    }

    pub fn component(&self, k: usize) -> ScalarField {
        let values = if k == 0 { self.c1.clone() } else { self.c2.clone() };
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let k = self.grid.index(i, j);
        (self.c1[k], self.c2[k])
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VectorField {
            grid: self.grid,
            c1: self.c1.iter().map(|&v| f(v)).collect(),
            c2: self.c2.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &VectorField, f: impl Fn(f64, f64) -> f64) -> Self {
        VectorField {
            grid: self.grid,
            c1: self.c1.iter().zip(&other.c1).map(|(&a, &b)| f(a, b)).collect(),
            c2: self.c2.iter().zip(&other.c2).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &VectorField) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn max_abs(&self) -> f64 {
        self.c1
            .iter()
            .chain(&self.c2)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn boundary_max_abs(&self) -> f64 {
        let g = self.grid;
        g.nodes()
            .filter(|&(i, j)| g.is_boundary(i, j))
            .map(|(i, j)| {
                let (a, b) = self.at(i, j);
                a.abs().max(b.abs())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_node_count() {
        let g = make_grid(9, 9).unwrap();
        assert_eq!(g.h(), 0.125);
        let g = make_grid(65, 65).unwrap();
        assert_eq!(g.h(), 1.0 / 64.0);
        assert!((g.h() * 64.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            make_grid(9, 17),
            Err(Error::NonSquareCells { nx: 9, ny: 17 })
        ));
        assert!(matches!(make_grid(5, 5), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn boundary_set_is_lattice_boundary() {
        let g = Grid::square(9).unwrap();
        let count = g.nodes().filter(|&(i, j)| g.is_boundary(i, j)).count();
        assert_eq!(count, 4 * 8);
        assert_eq!(g.interior_nodes().count(), g.interior_len());
    }

    #[test]
    fn weights_integrate_unit_area() {
        let g = Grid::square(17).unwrap();
        let total: f64 = g.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(FluidParams::new(1.0, 0.0).is_ok());
        assert!(FluidParams::new(0.0, 0.1).is_err());
        assert!(FluidParams::new(1.0, -0.1).is_err());
    }

    #[test]
    fn interior_scatter_round_trip() {
        let g = Grid::square(11).unwrap();
        let interior: Vec<f64> = (0..g.interior_len()).map(|k| k as f64).collect();
        let s = ScalarField::from_interior(g, &interior);
        assert_eq!(s.interior_values(), interior);
        assert_eq!(s.at(0, 3), 0.0);
    }
}
