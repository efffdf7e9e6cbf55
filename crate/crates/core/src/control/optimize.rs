use crate::error::{Error, Result};
use crate::grid::{inner_vector, norms_vector, FluidParams, VectorField};
use crate::solvers::{AdjointMode, AdjointSolution, FluidSolver, SolverConfig, StateSolution};

use super::cost::{converged_state, gradient_at, project_admissible, vi_residual, AdmissibleSet, CostSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptConfig {
    pub max_iters: usize,
    /// Stop when the VI residual at unit step drops below this.
    pub opt_tol: f64,
    pub initial_step: f64,
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub mode: AdjointMode,
    /// When set, every accepted iterate is audited against the smallness condition.
    pub kappa_bar: Option<f64>,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            max_iters: 500,
            opt_tol: 1e-6,
            initial_step: 1.0,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
            mode: AdjointMode::DiscreteTranspose,
            kappa_bar: None,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.opt_tol > 0.0) {
            return bad("opt_tol", format!("must be > 0, got {}", self.opt_tol));
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step", format!("must be > 0, got {}", self.initial_step));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return bad("c1", format!("must lie in (0, 1), got {}", self.c1));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack", format!("must lie in (0, 1), got {}", self.backtrack));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub vi_residual: f64,
    /// Step that produced this iterate; zero for the starting point.
    pub step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailed => "line-search-failed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationTrace {
    pub records: Vec<OptRecord>,
    pub u: VectorField,
    pub state: StateSolution,
    pub adjoint: AdjointSolution,
    pub gradient: VectorField,
    pub termination: Termination,
    /// Accepted iterates that failed the smallness audit (if one was configured).
    pub smallness_violations: usize,
}

impl OptimizationTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn final_vi_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.vi_residual)
    }

    /// `iter,J,grad_norm,vi_residual,step` rows.
    pub fn csv(&self) -> String {
        let mut s = String::from("iter,J,grad_norm,vi_residual,step\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.iter, r.cost, r.grad_norm, r.vi_residual, r.step
            ));
        }
        s
    }
}

/// A reduced objective over controls on one grid.
pub(crate) trait Objective {
    fn solver(&self) -> &FluidSolver;
    fn value(&self, u: &VectorField, warm: Option<&StateSolution>) -> Result<(f64, StateSolution)>;
    fn gradient(
        &self,
        u: &VectorField,
        state: &StateSolution,
    ) -> Result<(VectorField, AdjointSolution)>;
}

pub(crate) struct Tracking<'a> {
    pub solver: &'a FluidSolver,
    pub spec: &'a CostSpec,
    pub mode: AdjointMode,
}

impl Objective for Tracking<'_> {
    fn solver(&self) -> &FluidSolver {
        self.solver
    }

    fn value(&self, u: &VectorField, warm: Option<&StateSolution>) -> Result<(f64, StateSolution)> {
        let s = converged_state(self.solver, u, warm)?;
        Ok((self.spec.evaluate(u, &s), s))
    }

    fn gradient(&self, u: &VectorField, state: &StateSolution) -> Result<(VectorField, AdjointSolution)> {
        gradient_at(self.solver, u, self.spec, state, self.mode)
    }
}

/// Relative size below which a cost difference is treated as round-off;
/// inexact state solves raise it with the Picard tolerance.
fn noise_level(cfg: &SolverConfig) -> f64 {
    f64::max(1e-12, 10.0 * cfg.picard_tol)
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::NotConverged { .. } | Error::SingularSystem { .. })
}

/// Projected gradient with Armijo backtracking and Barzilai–Borwein steps.
pub(crate) fn projected_gradient(
    obj: &dyn Objective,
    u0: &VectorField,
    set: &AdmissibleSet,
    opt: &OptConfig,
) -> Result<OptimizationTrace> {
    opt.validate()?;
    if !set.contains(u0) {
        return Err(Error::InvalidParameter {
            name: "u0",
            reason: "initial control lies outside the admissible set".into(),
        });
    }
    let params = obj.solver().params();
    let audit = |u: &VectorField| {
        opt.kappa_bar
            .is_some_and(|k| !crate::analysis::smallness_verdict(u, params, k).holds)
    };

    let noise = noise_level(&obj.solver().config());
    let mut u = u0.clone();
    let (mut cost, mut state) = obj.value(&u, None)?;
    let (mut g, mut adj) = obj.gradient(&u, &state)?;
    let mut violations = usize::from(audit(&u));
    let mut step = opt.initial_step;
    let mut last_step = 0.0;
    let mut records = Vec::new();

    let termination = loop {
        let vi = vi_residual(&u, &g, set, 1.0);
        records.push(OptRecord {
            iter: records.len(),
            cost,
            grad_norm: norms_vector(&g).l2,
            vi_residual: vi,
            step: last_step,
        });
        if vi <= opt.opt_tol {
            break Termination::Converged;
        }
        if records.len() > opt.max_iters {
            break Termination::MaxIterations;
        }

        let mut accepted = None;
        for _ in 0..=opt.max_backtracks {
            let cand = project_admissible(&u.axpy(-step, &g), set);
            let d = cand.sub(&u);
            let dd = inner_vector(&d, &d);
            let required = -opt.c1 / step * dd;
            match obj.value(&cand, Some(&state)) {
                Ok((c, s)) if c - cost <= required && c < cost => {
                    accepted = Some((cand, d, c, s, None));
                    break;
                }
                Ok((c, s)) if (c - cost).abs() <= noise * cost.abs().max(c.abs()) => {
                    // the cost difference is lost to cancellation; certify the decrease
                    // with the trapezoidal estimate ½(g + g⁺, d) instead
                    let (gn, an) = obj.gradient(&cand, &s)?;
                    let estimate = 0.5 * (inner_vector(&g, &d) + inner_vector(&gn, &d));
                    if estimate <= required {
                        accepted = Some((cand, d, c.min(cost), s, Some((gn, an))));
                        break;
                    }
                }
                Ok(_) => {}
                Err(e) if recoverable(&e) => {}
                Err(e) => return Err(e),
            }
            step *= opt.backtrack;
        }
        let Some((cand, d, c, s, grad)) = accepted else {
            break Termination::LineSearchFailed;
        };

        let (gn, an) = match grad {
            Some(ga) => ga,
            None => obj.gradient(&cand, &s)?,
        };
        let sy = inner_vector(&d, &gn.sub(&g));
        last_step = step;
        if sy > 0.0 {
            step = (inner_vector(&d, &d) / sy).clamp(1e-10, 1e10);
        }
        violations += usize::from(audit(&cand));
        u = cand;
        cost = c;
        state = s;
        g = gn;
        adj = an;
    };

    Ok(OptimizationTrace {
        records,
        u,
        state,
        adjoint: adj,
        gradient: g,
        termination,
        smallness_violations: violations,
    })
}

pub fn optimize(
    u0: &VectorField,
    spec: &CostSpec,
    set: &AdmissibleSet,
    params: FluidParams,
    cfg: SolverConfig,
    opt: &OptConfig,
) -> Result<OptimizationTrace> {
    let solver = FluidSolver::new(u0.grid(), params, cfg)?;
    let obj = Tracking {
        solver: &solver,
        spec,
        mode: opt.mode,
    };
    projected_gradient(&obj, u0, set, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_target_drives_control_to_zero() {
        let g = Grid::square(17).unwrap();
        let p = FluidParams::new(1.0, 0.05).unwrap();
        let u0 = VectorField::from_fn(g, |x, y| (0.5 * x * y, -0.3 * x));
        let spec = CostSpec::new(0.5, VectorField::zeros(g)).unwrap();
        let set = AdmissibleSet::symmetric(1.0).unwrap();
        let tr = optimize(&u0, &spec, &set, p, SolverConfig::default(), &OptConfig::default()).unwrap();
        assert!(tr.converged());
        assert!(tr.u.max_abs() < 1e-5);
        assert!(tr.final_cost() < 1e-10);
        for w in tr.records.windows(2) {
            assert!(w[1].cost <= w[0].cost);
        }
    }

    #[test]
    fn restart_from_optimum_stops_immediately() {
        let g = Grid::square(17).unwrap();
        let p = FluidParams::new(1.0, 0.05).unwrap();
        let yd = VectorField::from_fn(g, |x, y| (x * (1.0 - x) * y, -y * (1.0 - y) * x));
        let spec = CostSpec::new(0.1, yd).unwrap();
        let set = AdmissibleSet::symmetric(0.2).unwrap();
        let cfg = SolverConfig::default();
        let opt = OptConfig::default();
        let tr = optimize(&VectorField::zeros(g), &spec, &set, p, cfg, &opt).unwrap();
        assert!(tr.converged() && tr.final_vi_residual() <= 1e-6);
        let again = optimize(&tr.u, &spec, &set, p, cfg, &opt).unwrap();
        assert!(again.iterations() <= 1);
    }

    #[test]
    fn infeasible_start_rejected() {
        let g = Grid::square(9).unwrap();
        let p = FluidParams::new(1.0, 0.0).unwrap();
        let spec = CostSpec::new(0.1, VectorField::zeros(g)).unwrap();
        let set = AdmissibleSet::symmetric(0.1).unwrap();
        let u0 = VectorField::from_fn(g, |_, _| (1.0, 0.0));
        let r = optimize(&u0, &spec, &set, p, SolverConfig::default(), &OptConfig::default());
        assert!(matches!(r, Err(Error::InvalidParameter { name: "u0", .. })));
    }
}
