use crate::error::Result;
use crate::grid::{FluidParams, ScalarField, VectorField};
use crate::linalg::{BandedLu, CsrMatrix};

use super::state::{FluidSolver, SolverConfig, StateSolution};

#[derive(Clone, Debug)]
pub struct LinearizedSolution {
    pub z: VectorField,
    pub chi: ScalarField,
    pub zeta: ScalarField,
    pub w: VectorField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdjointMode {
    /// Independent discretization of the curled adjoint equation.
    Pde,
    /// Exact transpose of the linearized matrix.
    DiscreteTranspose,
}

impl std::str::FromStr for AdjointMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pde" => Ok(AdjointMode::Pde),
            "discrete" | "discrete-transpose" => Ok(AdjointMode::DiscreteTranspose),
            _ => Err(format!("expected 'pde' or 'discrete', got '{s}'")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdjointSolution {
    pub p: VectorField,
    pub q: ScalarField,
    /// Control-space gradient `h² M⁻¹ Cᵀ q` of `w ↦ (f, z(w))`.
    pub g: VectorField,
    pub mode: AdjointMode,
    pub f: VectorField,
}

/// A factored linearization about one state, reusable for many right-hand sides.
pub struct Linearization<'a> {
    solver: &'a FluidSolver,
    lu: BandedLu,
}

impl FluidSolver {
    /// `νB + A(y)W + G(ω)V`, the derivative of the discrete state residual.
    pub fn linearized_matrix(&self, state: &StateSolution) -> CsrMatrix {
        let ops = &self.ops;
        let a = ops.advection(&state.y, self.cfg.advection);
        let gmat = ops.advection_velocity_jacobian(state.omega.values(), &state.y, self.cfg.advection);
        self.stokes
            .add(&a.mul(&self.omega_map))
            .add(&gmat.mul(&ops.velocity))
    }

    /// Curled adjoint operator `νΔ²q − p·∇ω − Δ(I − αΔ)(y × p)_z`, `p = curl⊥q`.
    pub fn adjoint_pde_matrix(&self, state: &StateSolution) -> CsrMatrix {
        let ops = &self.ops;
        let gmat = ops.advection_velocity_jacobian(state.omega.values(), &state.y, self.cfg.advection);
        let cross = ops.cross_with(&state.y).mul(&ops.velocity);
        // (y × p)_z vanishes to second order on Γ, so the clamped closure applies
        let sigma = ops.prolong.add_scaled(-self.params.alpha, &ops.lap_clamped);
        let visco = ops.lap5.mul(&sigma).mul(&cross);
        self.stokes
            .add_scaled(-1.0, &gmat.mul(&ops.velocity))
            .add_scaled(-1.0, &visco)
    }

    pub fn linearize(&self, state: &StateSolution) -> Result<Linearization<'_>> {
        self.check_grid(state.grid())?;
        let lu = BandedLu::factor(&self.linearized_matrix(state), self.cfg.pivot_tol)?;
        Ok(Linearization { solver: self, lu })
    }

    pub fn solve_linearized(&self, state: &StateSolution, w: &VectorField) -> Result<LinearizedSolution> {
        self.linearize(state)?.tangent(w)
    }

    pub fn solve_adjoint(
        &self,
        state: &StateSolution,
        f: &VectorField,
        mode: AdjointMode,
    ) -> Result<AdjointSolution> {
        match mode {
            AdjointMode::DiscreteTranspose => self.linearize(state)?.adjoint(f),
            AdjointMode::Pde => {
                self.check_grid(state.grid())?;
                self.check_grid(f.grid())?;
                let lu = BandedLu::factor(&self.adjoint_pde_matrix(state), self.cfg.pivot_tol)?;
                let q = lu.solve(&self.adjoint_load(f));
                Ok(self.adjoint_solution(q, f, mode))
            }
        }
    }

    fn adjoint_solution(&self, q: Vec<f64>, f: &VectorField, mode: AdjointMode) -> AdjointSolution {
        AdjointSolution {
            p: self.ops.velocity_field(&q),
            g: self.ops.control_sensitivity(&q),
            q: ScalarField::from_interior(self.grid(), &q),
            mode,
            f: f.clone(),
        }
    }
}

impl Linearization<'_> {
    pub fn tangent(&self, w: &VectorField) -> Result<LinearizedSolution> {
        let s = self.solver;
        s.check_grid(w.grid())?;
        let chi = self.lu.solve(&s.load(w));
        Ok(LinearizedSolution {
            z: s.ops.velocity_field(&chi),
            zeta: ScalarField::from_values(s.grid(), s.omega_map.matvec(&chi)).unwrap(),
            chi: ScalarField::from_interior(s.grid(), &chi),
            w: w.clone(),
        })
    }

    /// Discrete-transpose adjoint; the load `h⁻²VᵀMf` makes `g` exactly dual to `z`.
    pub fn adjoint(&self, f: &VectorField) -> Result<AdjointSolution> {
        let s = self.solver;
        s.check_grid(f.grid())?;
        let q = self.lu.solve_transpose(&s.adjoint_load(f));
        Ok(s.adjoint_solution(q, f, AdjointMode::DiscreteTranspose))
    }
}

pub fn solve_linearized(
    state: &StateSolution,
    w: &VectorField,
    params: FluidParams,
    cfg: SolverConfig,
) -> Result<LinearizedSolution> {
    FluidSolver::new(state.grid(), params, cfg)?.solve_linearized(state, w)
}

pub fn solve_adjoint_pde(
    state: &StateSolution,
    f: &VectorField,
    params: FluidParams,
    cfg: SolverConfig,
) -> Result<AdjointSolution> {
    FluidSolver::new(state.grid(), params, cfg)?.solve_adjoint(state, f, AdjointMode::Pde)
}

pub fn solve_adjoint_discrete(
    state: &StateSolution,
    f: &VectorField,
    params: FluidParams,
    cfg: SolverConfig,
) -> Result<AdjointSolution> {
    FluidSolver::new(state.grid(), params, cfg)?.solve_adjoint(state, f, AdjointMode::DiscreteTranspose)
}
