use rayon::prelude::*;

use crate::control::{optimize, AdmissibleSet, CostSpec, OptConfig, OptimizationTrace};
use crate::error::{Error, Result};
use crate::grid::{norms_vector, FluidParams, VectorField};
use crate::solvers::SolverConfig;

use super::probes::navier_stokes_adjoint_residual;
use super::report::ProbeReport;

/// An optimal control problem, minus the viscoelastic modulus.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub spec: CostSpec,
    pub set: AdmissibleSet,
    pub u0: VectorField,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug)]
pub struct ContinuationStudy {
    pub report: ProbeReport,
    /// Successful optimizations, in the order of the α list.
    pub entries: Vec<(f64, OptimizationTrace)>,
}

/// Solves the problem for each α (in parallel) and measures the gaps to the α = 0 solution.
pub fn continuation_alpha(
    problem: &ControlProblem,
    alpha_list: &[f64],
    params: FluidParams,
    opt: &OptConfig,
) -> Result<ContinuationStudy> {
    let ordered = alpha_list.windows(2).all(|w| w[0] > w[1]);
    if alpha_list.is_empty() || !ordered || *alpha_list.last().unwrap() != 0.0 {
        return Err(Error::InvalidParameter {
            name: "alpha_list",
            reason: "must be strictly decreasing and end at 0".into(),
        });
    }
    let runs: Vec<Result<OptimizationTrace>> = alpha_list
        .par_iter()
        .map(|&a| {
            let p = params.with_alpha(a)?;
            optimize(&problem.u0, &problem.spec, &problem.set, p, problem.solver, opt)
        })
        .collect();

    let mut rep = ProbeReport::new(
        "continuation",
        &["alpha", "min_J", "gap_J", "gap_u_l2", "gap_y_h1", "gap_p_l2", "iterations", "vi_residual"],
    );
    rep.input("alphas", format!("{alpha_list:?}"));
    let mut entries = Vec::new();
    for (&a, r) in alpha_list.iter().zip(runs) {
        match r {
            Ok(t) => {
                if !t.converged() {
                    rep.notes.push(format!("alpha={a}: optimizer stopped with {}", t.termination.as_str()));
                }
                entries.push((a, t));
            }
            Err(e) => {
                rep.notes.push(format!("alpha={a}: {e}"));
                rep.passed = false;
            }
        }
    }
    let Some((0.0, base)) = entries.last().map(|(a, t)| (*a, t.clone())) else {
        rep.notes.push("no alpha = 0 reference solution".into());
        rep.passed = false;
        return Ok(ContinuationStudy { report: rep, entries });
    };

    let mut gaps: Vec<[f64; 4]> = Vec::new();
    for (a, t) in &entries {
        let g = [
            (t.final_cost() - base.final_cost()).abs(),
            norms_vector(&t.u.sub(&base.u)).l2,
            norms_vector(&t.state.y.sub(&base.state.y)).h1_semi,
            norms_vector(&t.adjoint.p.sub(&base.adjoint.p)).l2,
        ];
        rep.row(vec![
            *a,
            t.final_cost(),
            g[0],
            g[1],
            g[2],
            g[3],
            t.iterations() as f64,
            t.final_vi_residual(),
        ]);
        if *a > 0.0 {
            gaps.push(g);
        }
    }
    rep.measure("min_J_limit", base.final_cost());
    rep.measure(
        "ns_adjoint_residual",
        navier_stokes_adjoint_residual(&base.state.y, &base.adjoint.p, &problem.spec.y_d, params.nu),
    );

    let names = ["J", "u", "y", "p"];
    for (k, name) in names.iter().enumerate() {
        let seq: Vec<f64> = gaps.iter().map(|g| g[k]).collect();
        let monotone = seq.windows(2).all(|w| w[1] <= 1.05 * w[0]);
        let ratio = match (seq.first(), seq.last()) {
            (Some(&f), Some(&l)) if f > 0.0 => l / f,
            _ => 0.0,
        };
        rep.measure(&format!("monotone_{name}"), f64::from(u8::from(monotone)));
        rep.measure(&format!("final_over_first_{name}"), ratio);
        if !monotone || ratio > 0.1 {
            rep.passed = false;
        }
    }
    if entries.len() != alpha_list.len() {
        rep.passed = false;
    }
    Ok(ContinuationStudy { report: rep, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn zero_only_list_has_zero_gaps() {
        let g = Grid::square(13).unwrap();
        let yd = VectorField::from_fn(g, |x, y| (x * (1.0 - x) * y, 0.0));
        let problem = ControlProblem {
            spec: CostSpec::new(1.0, yd).unwrap(),
            set: AdmissibleSet::symmetric(5.0).unwrap(),
            u0: VectorField::zeros(g),
            solver: SolverConfig::default(),
        };
        let p = FluidParams::new(1.0, 0.0).unwrap();
        let st = continuation_alpha(&problem, &[0.0], p, &OptConfig::default()).unwrap();
        for c in ["gap_J", "gap_u_l2", "gap_y_h1", "gap_p_l2"] {
            assert_eq!(st.report.column(c).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn rejects_unordered_list() {
        let g = Grid::square(9).unwrap();
        let problem = ControlProblem {
            spec: CostSpec::new(1.0, VectorField::zeros(g)).unwrap(),
            set: AdmissibleSet::symmetric(1.0).unwrap(),
            u0: VectorField::zeros(g),
            solver: SolverConfig::default(),
        };
        let p = FluidParams::new(1.0, 0.0).unwrap();
        assert!(continuation_alpha(&problem, &[0.1, 0.2, 0.0], p, &OptConfig::default()).is_err());
        assert!(continuation_alpha(&problem, &[0.1], p, &OptConfig::default()).is_err());
    }
}
