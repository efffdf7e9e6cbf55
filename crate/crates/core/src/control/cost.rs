use crate::error::{Error, Result};
use crate::grid::{inner_vector, norms_vector, FluidParams, VectorField};
use crate::solvers::{AdjointMode, AdjointSolution, FluidSolver, SolverConfig, StateSolution};

/// Tracking cost `½‖y − y_d‖² + (λ/2)‖u‖²`.
#[derive(Clone, Debug)]
pub struct CostSpec {
    pub lambda: f64,
    pub y_d: VectorField,
}

impl CostSpec {
    pub fn new(lambda: f64, y_d: VectorField) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be >= 0, got {lambda}"),
            });
        }
        Ok(CostSpec { lambda, y_d })
    }

    pub fn evaluate(&self, u: &VectorField, state: &StateSolution) -> f64 {
        let e = state.y.sub(&self.y_d);
        0.5 * inner_vector(&e, &e) + 0.5 * self.lambda * inner_vector(u, u)
    }
}

/// Pointwise box, the same bounds for every node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibleSet {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl AdmissibleSet {
    pub fn new(lower: [f64; 2], upper: [f64; 2]) -> Result<Self> {
        for k in 0..2 {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] <= upper[k]) {
                return Err(Error::InvalidParameter {
                    name: "bounds",
                    reason: format!(
                        "component {} needs finite lower <= upper, got [{}, {}]",
                        k + 1,
                        lower[k],
                        upper[k]
                    ),
                });
            }
        }
        Ok(AdmissibleSet { lower, upper })
    }

    /// Symmetric box `[−b, b]²`.
    pub fn symmetric(b: f64) -> Result<Self> {
        Self::new([-b, -b], [b, b])
    }

    pub fn contains(&self, u: &VectorField) -> bool {
        let inside = |v: &[f64], k: usize| v.iter().all(|&x| x >= self.lower[k] && x <= self.upper[k]);
        inside(u.c1(), 0) && inside(u.c2(), 1)
    }
}

pub fn project_admissible(u: &VectorField, set: &AdmissibleSet) -> VectorField {
    let clamp = |v: &[f64], k: usize| -> Vec<f64> {
        v.iter().map(|x| x.clamp(set.lower[k], set.upper[k])).collect()
    };
    VectorField::from_components(u.grid(), clamp(u.c1(), 0), clamp(u.c2(), 1)).unwrap()
}

/// `‖u − P(u − s g)‖ / s`
pub fn vi_residual(u: &VectorField, g: &VectorField, set: &AdmissibleSet, s: f64) -> f64 {
    let moved = project_admissible(&u.axpy(-s, g), set);
    norms_vector(&u.sub(&moved)).l2 / s
}

pub fn reduced_cost(u: &VectorField, spec: &CostSpec, params: FluidParams, cfg: SolverConfig) -> Result<f64> {
    let solver = FluidSolver::new(u.grid(), params, cfg)?;
    let state = converged_state(&solver, u, None)?;
    Ok(spec.evaluate(u, &state))
}

pub fn reduced_gradient(
    u: &VectorField,
    spec: &CostSpec,
    params: FluidParams,
    cfg: SolverConfig,
    mode: AdjointMode,
) -> Result<VectorField> {
    let solver = FluidSolver::new(u.grid(), params, cfg)?;
    let state = converged_state(&solver, u, None)?;
    Ok(gradient_at(&solver, u, spec, &state, mode)?.0)
}

pub(crate) fn converged_state(
    solver: &FluidSolver,
    u: &VectorField,
    warm: Option<&StateSolution>,
) -> Result<StateSolution> {
    let s = solver.solve_state(u, warm)?;
    if !s.converged {
        return Err(Error::NotConverged {
            iterations: s.iterations,
            residual: s.residual,
        });
    }
    Ok(s)
}

/// `p + λu` with `p` the adjoint velocity for the load `y − y_d`.
pub(crate) fn gradient_at(
    solver: &FluidSolver,
    u: &VectorField,
    spec: &CostSpec,
    state: &StateSolution,
    mode: AdjointMode,
) -> Result<(VectorField, AdjointSolution)> {
    let f = state.y.sub(&spec.y_d);
    let adj = solver.solve_adjoint(state, &f, mode)?;
    Ok((adj.g.axpy(spec.lambda, u), adj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn field(g: Grid, vals: &[f64]) -> VectorField {
        let n = g.len();
        let c1 = (0..n).map(|k| vals[k % vals.len()]).collect();
        let c2 = (0..n).map(|k| -vals[(k * 7) % vals.len()]).collect();
        VectorField::from_components(g, c1, c2).unwrap()
    }

    #[test]
    fn cost_of_zero_control() {
        let g = Grid::square(17).unwrap();
        let p = FluidParams::new(1.0, 0.1).unwrap();
        let cfg = SolverConfig::default();
        let zero = VectorField::zeros(g);
        let spec = CostSpec::new(1.0, zero.clone()).unwrap();
        assert_eq!(reduced_cost(&zero, &spec, p, cfg).unwrap(), 0.0);
        // ‖(1, 0)‖² = 1 on the unit square, so 0.5 gives ‖y_d‖² = 0.25
        let yd = VectorField::from_fn(g, |_, _| (0.5, 0.0));
        let spec = CostSpec::new(1.0, yd).unwrap();
        assert!((reduced_cost(&zero, &spec, p, cfg).unwrap() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn gradient_at_perfect_tracking_is_lambda_u() {
        let g = Grid::square(17).unwrap();
        let p = FluidParams::new(1.0, 0.05).unwrap();
        let cfg = SolverConfig::default();
        let u = VectorField::from_fn(g, |x, y| (x * y, 1.0 - x));
        let y = crate::solvers::solve_state(&u, p, cfg).unwrap().y;
        for lambda in [0.0, 0.3] {
            let spec = CostSpec::new(lambda, y.clone()).unwrap();
            let gr = reduced_gradient(&u, &spec, p, cfg, AdjointMode::DiscreteTranspose).unwrap();
            assert!(gr.sub(&u.scale(lambda)).max_abs() < 1e-14);
        }
    }

    #[test]
    fn vi_residual_cases() {
        let g = Grid::square(9).unwrap();
        let set = AdmissibleSet::symmetric(1.0).unwrap();
        let u = VectorField::from_fn(g, |x, y| (0.1 * x, -0.2 * y));
        assert_eq!(vi_residual(&u, &VectorField::zeros(g), &set, 1.0), 0.0);
        let gr = VectorField::from_fn(g, |x, _| (0.01, x * 0.02));
        let r = vi_residual(&u, &gr, &set, 1.0);
        assert!((r - norms_vector(&gr).l2).abs() < 1e-15);
        // active upper bound, gradient pushing outward
        let top = VectorField::from_fn(g, |_, _| (1.0, 1.0));
        let out = VectorField::from_fn(g, |_, _| (-3.0, -0.5));
        assert_eq!(vi_residual(&top, &out, &set, 1.0), 0.0);
    }

    #[test]
    fn projection_cases() {
        let g = Grid::square(9).unwrap();
        let set = AdmissibleSet::new([-1.0, 0.0], [2.0, 0.5]).unwrap();
        let inside = VectorField::from_fn(g, |x, y| (x, 0.5 * y));
        assert_eq!(project_admissible(&inside, &set), inside);
        let twice = VectorField::from_fn(g, |_, _| (4.0, 1.0));
        assert_eq!(project_admissible(&twice, &set).max_abs(), 2.0);
        assert!(AdmissibleSet::new([1.0, 0.0], [0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_nonexpansive(
            a in prop::collection::vec(-5.0f64..5.0, 1..40),
            b in prop::collection::vec(-5.0f64..5.0, 1..40),
        ) {
            let g = Grid::square(9).unwrap();
            let set = AdmissibleSet::new([-1.0, -2.0], [1.5, 0.5]).unwrap();
            let (u, v) = (field(g, &a), field(g, &b));
            let (pu, pv) = (project_admissible(&u, &set), project_admissible(&v, &set));
            prop_assert_eq!(&project_admissible(&pu, &set), &pu);
            prop_assert!(set.contains(&pu));
            prop_assert!(norms_vector(&pu.sub(&pv)).l2 <= norms_vector(&u.sub(&v)).l2 + 1e-14);
        }
    }
}
