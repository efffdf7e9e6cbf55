use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{
    advect_centered, cross_scalar, cross_z, curl_scalar, curl_vector, inner_vector, laplacian,
    norms, norms_vector, partial, sigma_apply, sigma_apply_vector, trilinear_b, Axis, FluidParams,
    Grid, ScalarField, VectorField,
};
use crate::solvers::{FluidSolver, SolverConfig, StateSolution};

use super::constants::{curl_norm, smallness_verdict, ConstantsReport};
use super::fields::RandomStream;
use super::report::{log_slope, Audit, ProbeReport};

/// Audits the a-priori bounds on `|y|_{H¹}` and `‖curl σ(y)‖₂`.
pub fn verify_state_estimates(
    solution: &StateSolution,
    u: &VectorField,
    params: FluidParams,
    constants: &ConstantsReport,
) -> ProbeReport {
    let mut rep = ProbeReport::new("state-estimates", &["estimate", "lhs", "rhs", "slack"]);
    let un = norms_vector(u).l2;
    let cu = curl_norm(u);
    let e1 = Audit {
        lhs: norms_vector(&solution.y).h1_semi,
        rhs: constants.s2 / params.nu * un,
    };
    let wn = norms(&solution.omega).l2;
    let e2 = Audit {
        lhs: wn,
        rhs: (constants.s2 * un + params.alpha * cu) / params.nu,
    };
    for (k, a) in [(1.0, e1), (2.0, e2)] {
        rep.row(vec![k, a.lhs, a.rhs, a.slack()]);
    }
    rep.input("nu", params.nu);
    rep.input("alpha", params.alpha);
    rep.measure("slack_h1", e1.slack());
    rep.measure("slack_v2", e2.slack());
    if params.alpha > 0.0 {
        rep.measure("h3_surrogate", wn / params.alpha);
    }
    rep.passed = e1.passes() && e2.passes();
    rep
}

/// Remainders `r_ρ = (y(u+ρw) − y(u))/ρ − z` and their fitted decay rate.
pub fn gateaux_probe(
    u: &VectorField,
    w: &VectorField,
    rho_list: &[f64],
    params: FluidParams,
    cfg: SolverConfig,
) -> Result<ProbeReport> {
    let solver = FluidSolver::new(u.grid(), params, cfg)?;
    let base = converged(&solver, u, None)?;
    let z = solver.solve_linearized(&base, w)?.z;
    let zn = norms_vector(&z).h1_semi;
    let mut rep = ProbeReport::new("gateaux", &["rho", "remainder_h1"]);
    let mut rs = Vec::new();
    for &rho in rho_list {
        let s = converged(&solver, &u.axpy(rho, w), Some(&base))?;
        let r = norms_vector(&s.y.sub(&base.y).scale(1.0 / rho).sub(&z)).h1_semi;
        rep.row(vec![rho, r]);
        rs.push(r);
    }
    rep.input("rho_count", rho_list.len());
    rep.measure("z_h1", zn);
    if rs.iter().all(|&r| r == 0.0) {
        rep.measure("slope", f64::INFINITY);
        rep.notes.push("all remainders vanish".into());
        return Ok(rep);
    }
    let slope = log_slope(rho_list, &rs);
    rep.measure("slope", slope);
    rep.passed = slope >= 0.9;
    Ok(rep)
}

/// Compares `|y₁ − y₂|_{H¹}/‖u₁ − u₂‖₂` with the Lipschitz bound at `u₂`.
pub fn lipschitz_probe(
    u1: &VectorField,
    u2: &VectorField,
    params: FluidParams,
    cfg: SolverConfig,
    constants: &ConstantsReport,
) -> Result<ProbeReport> {
    let mut rep = ProbeReport::new("lipschitz", &["ratio", "bound", "margin"]);
    let verdict = smallness_verdict(u2, params, constants.kappa_bar);
    let du = norms_vector(&u1.sub(u2)).l2;
    let bound = if verdict.holds {
        constants.s2 / params.nu / (1.0 - verdict.lhs / (params.nu * params.nu))
    } else {
        rep.notes.push("u2 fails the smallness condition; bound unavailable".into());
        f64::INFINITY
    };
    let ratio = if du == 0.0 {
        rep.notes.push("identical controls".into());
        0.0
    } else {
        let solver = FluidSolver::new(u1.grid(), params, cfg)?;
        let s2 = converged(&solver, u2, None)?;
        let s1 = converged(&solver, u1, Some(&s2))?;
        norms_vector(&s1.y.sub(&s2.y)).h1_semi / du
    };
    rep.row(vec![ratio, bound, verdict.margin]);
    rep.measure("ratio", ratio);
    rep.measure("bound", bound);
    rep.measure("margin", verdict.margin);
    rep.passed = Audit { lhs: ratio, rhs: bound }.passes();
    Ok(rep)
}

fn converged(solver: &FluidSolver, u: &VectorField, warm: Option<&StateSolution>) -> Result<StateSolution> {
    crate::control::converged_state_pub(solver, u, warm)
}

/// `‖v‖_{H³}` from repeated nodal differences.
fn h3_norm(v: &VectorField) -> f64 {
    let mut total = 0.0;
    for k in 0..2 {
        let mut layer = vec![v.component(k)];
        for _ in 0..=3 {
            total += layer.iter().map(|s| norms(s).l2.powi(2)).sum::<f64>();
            layer = layer
                .iter()
                .flat_map(|s| [partial(s, Axis::X1), partial(s, Axis::X2)])
                .collect();
        }
    }
    total.sqrt()
}

/// Residuals of the two curl identities for the convective terms, their
/// refinement orders, and fitted constants of the two auxiliary bounds.
pub fn verify_identities(
    grids: &[Grid],
    alpha: f64,
    seed: u64,
    trials: usize,
    s4: f64,
) -> ProbeReport {
    let mut rep = ProbeReport::new(
        "identities",
        &["n", "identity_1", "identity_2", "energy", "kappa_fit", "c_infty_fit"],
    );
    rep.input("alpha", alpha);
    rep.input("seed", seed);
    rep.input("trials", trials);
    let (mut hs, mut r1s, mut r2s) = (Vec::new(), Vec::new(), Vec::new());
    for &g in grids {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut r1, mut r2, mut energy, mut kappa, mut cinf) = (0.0, 0.0, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..trials {
            let fy = RandomStream::sample(&mut rng, 3, 0.15);
            let fz = RandomStream::sample(&mut rng, 3, 0.15);
            let fp = RandomStream::sample(&mut rng, 3, 0.15);
            let (y, z, phi) = (fy.velocity(g), fz.velocity(g), fp.velocity(g));
            r1 += identity_one(&y, &z, &phi, alpha);
            r2 += identity_two(&y, &z, &phi, alpha);
            let wy = curl_vector(&sigma_apply_vector(&y, alpha));
            energy = energy.max(inner_vector(&cross_scalar(&wy, &y), &y).abs());

            // |(curl σ(z) × y, z)| ≤ (S4²|y|_{H¹} + κα‖y‖_{H³})|z|²_{H¹}
            let wz = curl_vector(&sigma_apply_vector(&z, alpha));
            let lhs = inner_vector(&cross_scalar(&wz, &y), &z).abs();
            let (yn, zn) = (norms_vector(&y), norms_vector(&z));
            if alpha > 0.0 {
                let excess = lhs / zn.h1_semi.powi(2) - s4 * s4 * yn.h1_semi;
                kappa = kappa.max(excess / (alpha * h3_norm(&y)));
                // ‖y‖∞ ≤ c α^{-1/3} |y|_{H¹}^{2/3} |y|_{V₂}^{1/3}
                let v2 = norms(&wy).l2;
                cinf = cinf.max(yn.linf * alpha.cbrt() / (yn.h1_semi.powf(2.0 / 3.0) * v2.cbrt()));
            }
        }
        let t = trials as f64;
        rep.row(vec![g.nx() as f64, r1 / t, r2 / t, energy, kappa, cinf]);
        hs.push(g.h());
        r1s.push(r1 / t);
        r2s.push(r2 / t);
    }
    let (o1, o2) = (log_slope(&hs, &r1s), log_slope(&hs, &r2s));
    rep.measure("order_identity_1", o1);
    rep.measure("order_identity_2", o2);
    rep.notes.push("kappa_fit and c_infty_fit are descriptive".into());
    rep.passed = o1 >= 1.8 && o2 >= 1.8;
    rep
}

fn relative(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

/// `(curl σ(y) × z, φ) = b(φ, z, σ(y)) − b(z, φ, σ(y))`
fn identity_one(y: &VectorField, z: &VectorField, phi: &VectorField, alpha: f64) -> f64 {
    let sy = sigma_apply_vector(y, alpha);
    let lhs = inner_vector(&cross_scalar(&curl_vector(&sy), z), phi);
    let (b1, b2) = (trilinear_b(phi, z, &sy), trilinear_b(z, phi, &sy));
    relative(lhs, b1 - b2, b1.abs().max(b2.abs()))
}

/// `(curl σ(y × z), φ) = b(z, y, σ(φ)) − b(y, z, σ(φ))`
fn identity_two(y: &VectorField, z: &VectorField, phi: &VectorField, alpha: f64) -> f64 {
    let sp = sigma_apply_vector(phi, alpha);
    let lhs = inner_vector(&curl_scalar(&sigma_apply(&cross_z(y, z), alpha)), phi);
    let (b1, b2) = (trilinear_b(z, y, &sp), trilinear_b(y, z, &sp));
    relative(lhs, b1 - b2, b1.abs().max(b2.abs()))
}

/// Relative residual of `curl[−νΔp − y·∇p + (∇y)ᵀp − (y − y_d)]` at nodes two
/// layers inside Γ, normalized by the curl of the load.
pub fn navier_stokes_adjoint_residual(
    y: &VectorField,
    p: &VectorField,
    y_d: &VectorField,
    nu: f64,
) -> f64 {
    let g = y.grid();
    let comp = |k: usize| -> ScalarField {
        let pk = p.component(k);
        let lap = laplacian(&pk);
        let adv = advect_centered(y, &pk);
        let axis = if k == 0 { Axis::X1 } else { Axis::X2 };
        let d1 = partial(&y.component(0), axis);
        let d2 = partial(&y.component(1), axis);
        let mut out = ScalarField::zeros(g);
        for m in 0..g.len() {
            let grad_t = d1.values()[m] * p.c1()[m] + d2.values()[m] * p.c2()[m];
            out.values_mut()[m] = -nu * lap.values()[m] - adv.values()[m] + grad_t;
        }
        out
    };
    let lhs = VectorField::from_scalars(comp(0), comp(1));
    let load = y.sub(y_d);
    let (cl, cf) = (curl_vector(&lhs), curl_vector(&load));
    let (mut num, mut den) = (0.0, 0.0);
    for (i, j) in g.nodes() {
        if i < 2 || j < 2 || i + 2 >= g.nx() || j + 2 >= g.ny() {
            continue;
        }
        num += (cl.at(i, j) - cf.at(i, j)).powi(2);
        den += cf.at(i, j).powi(2);
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}
