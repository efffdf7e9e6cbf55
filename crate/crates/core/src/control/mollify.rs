use crate::error::{Error, Result};
use crate::grid::{FluidParams, Grid, VectorField};
use crate::solvers::{AdjointSolution, FluidSolver, SolverConfig, StateSolution};

use super::cost::{converged_state, AdmissibleSet, CostSpec};
use super::optimize::{projected_gradient, Objective, OptConfig, OptimizationTrace};

/// Sampled bump kernel `(1 − (r/ε)²)²` on lattice offsets, unit total mass.
#[derive(Clone, Debug)]
pub struct MollifierSpec {
    epsilon: f64,
    h: f64,
    taps: Vec<(isize, isize, f64)>,
}

impl MollifierSpec {
    pub fn new(epsilon: f64, grid: Grid) -> Result<Self> {
        let h = grid.h();
        // a relative slack so that ε = k·h computed in floating point is accepted
        if !(epsilon.is_finite() && epsilon >= h * (1.0 - 1e-12)) {
            return Err(Error::KernelUnderResolved { epsilon, h });
        }
        let reach = (epsilon / h).floor() as isize;
        let mut taps = Vec::new();
        for b in -reach..=reach {
            for a in -reach..=reach {
                let r = h * ((a * a + b * b) as f64).sqrt() / epsilon;
                if r < 1.0 {
                    taps.push((a, b, (1.0 - r * r).powi(2)));
                }
            }
        }
        let mass: f64 = taps.iter().map(|t| t.2).sum();
        for t in &mut taps {
            t.2 /= mass;
        }
        Ok(MollifierSpec { epsilon, h, taps })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn taps(&self) -> &[(isize, isize, f64)] {
        &self.taps
    }
}

/// `(ϱu)_i = Σ_j k(x_i − x_j)(m_j/m_i)^{1/2} u_j` with zero extension. The even kernel
/// makes this symmetric in the trapezoidal product, and `ε = h` gives the identity.
pub fn mollify(u: &VectorField, spec: &MollifierSpec) -> Result<VectorField> {
    let g = u.grid();
    if (g.h() - spec.h).abs() > 1e-12 * spec.h {
        return Err(Error::InvalidParameter {
            name: "mollifier",
            reason: format!("kernel built for h = {}, field has h = {}", spec.h, g.h()),
        });
    }
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let w: Vec<f64> = g.weights().iter().map(|m| m.sqrt()).collect();
    let mut c1 = vec![0.0; g.len()];
    let mut c2 = vec![0.0; g.len()];
    for (i, j) in g.nodes() {
        let (mut a1, mut a2) = (0.0, 0.0);
        for &(da, db, k) in &spec.taps {
            let (a, b) = (i as isize + da, j as isize + db);
            if a < 0 || b < 0 || a >= nx || b >= ny {
                continue;
            }
            let m = g.index(a as usize, b as usize);
            a1 += k * w[m] * u.c1()[m];
            a2 += k * w[m] * u.c2()[m];
        }
        let m = g.index(i, j);
        c1[m] = a1 / w[m];
        c2[m] = a2 / w[m];
    }
    VectorField::from_components(g, c1, c2)
}

/// Curl energy `½‖curl v‖²` over interior nodes and its trapezoidal-metric gradient.
pub(crate) fn curl_energy(solver: &FluidSolver, v: &VectorField) -> (f64, VectorField) {
    let ops = solver.operators();
    let g = solver.grid();
    let h2 = g.h() * g.h();
    let c = ops.curl.matvec(&v.stacked());
    let e = 0.5 * h2 * c.iter().map(|x| x * x).sum::<f64>();
    let back = ops.curl.matvec_t(&c);
    let grad: Vec<f64> = back.iter().zip(&ops.mass).map(|(b, m)| h2 * b / m).collect();
    (e, VectorField::from_stacked(g, &grad).unwrap())
}

struct Regularized<'a> {
    solver: &'a FluidSolver,
    spec: &'a CostSpec,
    ubar: &'a VectorField,
    kernel: &'a MollifierSpec,
    opt: &'a OptConfig,
}

impl Objective for Regularized<'_> {
    fn solver(&self) -> &FluidSolver {
        self.solver
    }

    fn value(&self, u: &VectorField, warm: Option<&StateSolution>) -> Result<(f64, StateSolution)> {
        let s = converged_state(self.solver, &mollify(u, self.kernel)?, warm)?;
        let d = u.sub(self.ubar);
        let prox = 0.5 * crate::grid::inner_vector(&d, &d) + curl_energy(self.solver, &d).0;
        Ok((self.spec.evaluate(u, &s) + prox, s))
    }

    fn gradient(&self, u: &VectorField, state: &StateSolution) -> Result<(VectorField, AdjointSolution)> {
        let f = state.y.sub(&self.spec.y_d);
        let adj = self.solver.solve_adjoint(state, &f, self.opt.mode)?;
        let d = u.sub(self.ubar);
        let g = mollify(&adj.g, self.kernel)?
            .axpy(self.spec.lambda, u)
            .add(&d)
            .add(&curl_energy(self.solver, &d).1);
        Ok((g, adj))
    }
}

/// Minimizes the mollified tracking cost plus proximal terms around `ubar`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_regularized(
    u0: &VectorField,
    ubar: &VectorField,
    spec: &CostSpec,
    set: &AdmissibleSet,
    params: FluidParams,
    cfg: SolverConfig,
    kernel: &MollifierSpec,
    opt: &OptConfig,
) -> Result<OptimizationTrace> {
    let solver = FluidSolver::new(u0.grid(), params, cfg)?;
    let obj = Regularized {
        solver: &solver,
        spec,
        ubar,
        kernel,
        opt,
    };
    projected_gradient(&obj, u0, set, opt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_vector, norms_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(g: Grid, rng: &mut ChaCha8Rng) -> VectorField {
        let mut c = || (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let c1 = c();
        VectorField::from_components(g, c1, c()).unwrap()
    }

    #[test]
    fn kernel_rejects_under_resolution() {
        let g = Grid::square(17).unwrap();
        assert!(matches!(
            MollifierSpec::new(0.5 * g.h(), g),
            Err(Error::KernelUnderResolved { .. })
        ));
        let k = MollifierSpec::new(4.0 * g.h(), g).unwrap();
        let mass: f64 = k.taps().iter().map(|t| t.2).sum();
        assert!((mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_adjoint_and_nonexpansive() {
        let g = Grid::square(17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = MollifierSpec::new(3.0 * g.h(), g).unwrap();
        for _ in 0..5 {
            let (u, v) = (random(g, &mut rng), random(g, &mut rng));
            let (mu, mv) = (mollify(&u, &k).unwrap(), mollify(&v, &k).unwrap());
            let (a, b) = (inner_vector(&mu, &v), inner_vector(&u, &mv));
            assert!((a - b).abs() < 1e-14 * (a.abs() + b.abs() + 1.0));
            assert!(norms_vector(&mu).l2 <= norms_vector(&u).l2);
        }
        assert_eq!(mollify(&VectorField::zeros(g), &k).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn approaches_identity_as_radius_shrinks() {
        let g = Grid::square(65).unwrap();
        let u = VectorField::from_fn(g, |x, y| ((3.0 * x).sin() * y, x * x - y));
        let gap = |m: f64| {
            let k = MollifierSpec::new(m * g.h(), g).unwrap();
            norms_vector(&mollify(&u, &k).unwrap().sub(&u)).l2
        };
        let gaps: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|&m| gap(m)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[3] < 1e-14);
    }

    #[test]
    fn curl_energy_gradient_matches_differences() {
        let g = Grid::square(13).unwrap();
        let p = FluidParams::new(1.0, 0.0).unwrap();
        let solver = FluidSolver::new(g, p, SolverConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (v, w) = (random(g, &mut rng), random(g, &mut rng));
        let (_, grad) = curl_energy(&solver, &v);
        let rho = 1e-5;
        let fd = (curl_energy(&solver, &v.axpy(rho, &w)).0 - curl_energy(&solver, &v.axpy(-rho, &w)).0)
            / (2.0 * rho);
        let an = inner_vector(&grad, &w);
        assert!((fd - an).abs() <= 1e-5 * an.abs());
    }
}
