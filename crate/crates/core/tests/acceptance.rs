//! End-to-end acceptance checks, one verdict line per criterion.
//!
//! Run with `cargo test --test acceptance`. Verdicts are printed as
//! `PASS`/`FAIL`; the process fails only if a check cannot be carried out.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgfluid::analysis::{
    check_smallness, continuation_alpha, estimate_constants, gateaux_probe,
    manufactured_case, poincare_constant, random_control, verify_identities, verify_state_estimates,
    ControlProblem, ManufacturedCase, RandomStream,
};
use sgfluid::control::{
    mollify, optimize, optimize_regularized, reduced_cost, reduced_gradient, AdmissibleSet, CostSpec,
    MollifierSpec, OptConfig,
};
use sgfluid::grid::{inner_vector, norms, norms_vector, FluidParams, Grid, VectorField};
use sgfluid::solvers::{solve_state, AdjointMode, FluidSolver, SolverConfig};
use sgfluid::Result;

type Check = fn() -> Result<(bool, String)>;

fn main() {
    let checks: [(&str, Check); 10] = [
        ("manufactured solution recovery", manufactured_recovery),
        ("convective identities", operator_identities),
        ("a-priori state estimates", energy_estimates),
        ("Poincare constant", poincare),
        ("Gateaux differentiability", gateaux),
        ("gradient exactness", gradient_exactness),
        ("optimality system", optimality_system),
        ("regularized problem", regularized_problem),
        ("vanishing viscoelasticity", vanishing_viscoelasticity),
        ("smallness and Picard contraction", smallness_coherence),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut broken = 0;
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        match check() {
            Ok((ok, detail)) => {
                failed += usize::from(!ok);
                let verdict = if ok { "PASS" } else { "FAIL" };
                println!("{verdict} {id:>2} {name}: {detail} [{:.1}s]", t.elapsed().as_secs_f64());
            }
            Err(e) => {
                broken += 1;
                println!("FAIL {id:>2} {name}: error: {e}");
            }
        }
    }
    println!("acceptance: {} failed, {broken} could not run", failed + broken);
    if broken > 0 {
        std::process::exit(1);
    }
}

fn params(nu: f64, alpha: f64) -> FluidParams {
    FluidParams::new(nu, alpha).unwrap()
}

fn pairwise_orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

fn manufactured_recovery() -> Result<(bool, String)> {
    let grids = [33, 65, 129];
    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [0.0, 0.05] {
        let p = params(1.0, alpha);
        let mut errs = Vec::new();
        let mut slowest = Duration::ZERO;
        for &n in &grids {
            let g = Grid::square(n)?;
            let (psi, u) = manufactured_case("poly-quartic", g, p)?;
            let t = Instant::now();
            let s = solve_state(&u, p, SolverConfig::default())?;
            slowest = slowest.max(t.elapsed());
            ok &= s.converged;
            errs.push(norms(&s.psi.zip_map(&psi, |a, b| a - b)).l2);
        }
        let h: Vec<f64> = grids.iter().map(|&n| 1.0 / (n - 1) as f64).collect();
        let orders = pairwise_orders(&h, &errs);
        let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
        ok &= min >= 1.0 && slowest.as_secs_f64() <= 30.0;
        detail.push(format!(
            "alpha={alpha}: errors {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}, slowest solve {:.2}s",
            errs[0],
            errs[1],
            errs[2],
            orders[0],
            orders[1],
            slowest.as_secs_f64()
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn operator_identities() -> Result<(bool, String)> {
    let s4 = estimate_constants(Grid::square(33)?, 100, 1)?.s4;
    let grids = [33, 65, 129].map(|n| Grid::square(n).unwrap());
    let rep = verify_identities(&grids, 0.05, 2024, 20, s4);
    let o1 = rep.get("order_identity_1").unwrap_or(f64::NAN);
    let o2 = rep.get("order_identity_2").unwrap_or(f64::NAN);
    Ok((rep.passed, format!("orders {o1:.2} and {o2:.2} over 33/65/129, 20 fields each")))
}

fn energy_estimates() -> Result<(bool, String)> {
    let g = Grid::square(65)?;
    let p = params(1.0, 0.05);
    let constants = estimate_constants(g, 100, 3)?;
    let solver = FluidSolver::new(g, p, SolverConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut violations, mut min_h1, mut min_v2) = (0, f64::INFINITY, f64::INFINITY);
    let mut unconverged = 0;
    for _ in 0..50 {
        let amp = 10f64.powf(rng.gen_range(-1.0..1.5));
        let u = random_control(&mut rng, g, 4, amp);
        let s = solver.solve_state(&u, None)?;
        unconverged += usize::from(!s.converged);
        let r = verify_state_estimates(&s, &u, p, &constants);
        violations += usize::from(!r.passed);
        min_h1 = min_h1.min(r.get("slack_h1").unwrap());
        min_v2 = min_v2.min(r.get("slack_v2").unwrap());
    }
    Ok((
        violations == 0 && unconverged == 0,
        format!(
            "{violations} violations in 50 controls at 65², min slack {min_h1:.3e} (H1) {min_v2:.3e} (V2), S2={:.5}",
            constants.s2
        ),
    ))
}

fn poincare() -> Result<(bool, String)> {
    let s2 = poincare_constant(Grid::square(129)?)?;
    let exact = 1.0 / (2.0 * PI * PI).sqrt();
    let rel = (s2 - exact).abs() / exact;
    Ok((rel <= 0.01, format!("S2={s2:.6} vs {exact:.6}, relative error {rel:.2e}")))
}

fn gateaux() -> Result<(bool, String)> {
    let g = Grid::square(33)?;
    let p = params(1.0, 0.05);
    let constants = estimate_constants(g, 100, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut slopes = Vec::new();
    let mut ok = true;
    while slopes.len() < 5 {
        let amp = rng.gen_range(1.0..20.0);
        let u = random_control(&mut rng, g, 4, amp);
        if !check_smallness(&u, p, &constants).holds {
            continue;
        }
        let w = random_control(&mut rng, g, 4, 10.0);
        let rep = gateaux_probe(&u, &w, &[1e-1, 1e-2, 1e-3], p, SolverConfig::default())?;
        ok &= rep.passed;
        slopes.push(rep.get("slope").unwrap_or(f64::NAN));
    }
    let min = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((ok && min >= 0.9, format!("remainder slopes {slopes:.3?}, min {min:.3}")))
}

fn gradient_exactness() -> Result<(bool, String)> {
    let g = Grid::square(33)?;
    let p = params(1.0, 0.05);
    let cfg = SolverConfig {
        picard_tol: 1e-12,
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let u = random_control(&mut rng, g, 3, 10.0);
    let spec = CostSpec::new(0.01, random_control(&mut rng, g, 2, 0.2))?;
    let gr = reduced_gradient(&u, &spec, p, cfg, AdjointMode::DiscreteTranspose)?;
    let rho = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = random_control(&mut rng, g, 3, 1.0);
        let jp = reduced_cost(&u.axpy(rho, &d), &spec, p, cfg)?;
        let jm = reduced_cost(&u.axpy(-rho, &d), &spec, p, cfg)?;
        let fd = (jp - jm) / (2.0 * rho);
        let an = inner_vector(&gr, &d);
        worst = worst.max((fd - an).abs() / an.abs());
    }

    // PDE-form adjoint against the exact transpose on three grids
    let mut diffs = Vec::new();
    for n in [17, 33, 65] {
        let g = Grid::square(n)?;
        let (_, u) = manufactured_case("trig", g, p)?;
        let solver = FluidSolver::new(g, p, SolverConfig::default())?;
        let s = solver.solve_state(&u.scale(0.5), None)?;
        let f = VectorField::from_fn(g, |x, y| (x * y * (1.0 - x), (PI * x * y).sin()));
        let a = solver.solve_adjoint(&s, &f, AdjointMode::Pde)?.p;
        let b = solver.solve_adjoint(&s, &f, AdjointMode::DiscreteTranspose)?.p;
        diffs.push(norms_vector(&a.sub(&b)).l2);
    }
    let orders = pairwise_orders(&[4.0, 2.0, 1.0], &diffs);
    let ok = worst <= 1e-5 && orders.iter().all(|o| (1.7..=2.5).contains(o));
    Ok((
        ok,
        format!(
            "worst FD relative error {worst:.2e} over 5 directions; pde-vs-discrete orders {:.2}/{:.2}",
            orders[0], orders[1]
        ),
    ))
}

/// Control with a smooth curl supported away from Γ.
fn interior_control(g: Grid, l2: f64, seed: u64) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = RandomStream::sample(&mut rng, 3, 0.15).velocity(g);
    u.scale(l2 / norms_vector(&u).l2)
}

fn optimality_system() -> Result<(bool, String)> {
    let g = Grid::square(33)?;
    let p = params(1.0, 0.05);
    let cfg = SolverConfig::default();
    let y_d = solve_state(&interior_control(g, 10.0, 5), p, cfg)?.y;
    let spec = CostSpec::new(0.0, y_d)?;
    let set = AdmissibleSet::symmetric(1e3)?;
    let u0 = VectorField::zeros(g);
    let g0 = norms_vector(&reduced_gradient(&u0, &spec, p, cfg, AdjointMode::DiscreteTranspose)?).l2;
    let opt = OptConfig {
        opt_tol: (1e-6 * g0).min(1e-6),
        max_iters: 3000,
        ..OptConfig::default()
    };
    let t = optimize(&u0, &spec, &set, p, cfg, &opt)?;
    let ratio = t.final_cost() / t.records[0].cost;
    let vi = t.final_vi_residual();
    Ok((
        t.converged() && vi <= 1e-6 && ratio <= 1e-8,
        format!(
            "{} after {} iterations, vi {vi:.2e}, J/J0 {ratio:.2e}",
            t.termination.as_str(),
            t.iterations()
        ),
    ))
}

fn regularized_problem() -> Result<(bool, String)> {
    let g = Grid::square(33)?;
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (u, v) = (random_control(&mut rng, g, 5, 1.0), random_control(&mut rng, g, 5, 1.0));
    let mut asym: f64 = 0.0;
    for k in [8.0, 4.0, 2.0] {
        let m = MollifierSpec::new(k * g.h(), g)?;
        let (a, b) = (inner_vector(&mollify(&u, &m)?, &v), inner_vector(&u, &mollify(&v, &m)?));
        asym = asym.max((a - b).abs() / a.abs().max(b.abs()));
    }

    let p = params(1.0, 0.05);
    let cfg = SolverConfig::default();
    let case = ManufacturedCase::Trig;
    let y_d = VectorField::from_fn(g, |x, y| case.velocity(x, y)).scale(20.0);
    let spec = CostSpec::new(0.01, y_d)?;
    let set = AdmissibleSet::symmetric(1e3)?;
    let opt = OptConfig { max_iters: 4000, ..OptConfig::default() };
    let reference = optimize(&VectorField::zeros(g), &spec, &set, p, cfg, &opt)?;
    let ubar = reference.u.clone();
    let mut gaps = Vec::new();
    let mut ok = reference.converged();
    for k in [8.0, 4.0, 2.0] {
        let m = MollifierSpec::new(k * g.h(), g)?;
        let t = optimize_regularized(&ubar, &ubar, &spec, &set, p, cfg, &m, &opt)?;
        ok &= t.converged();
        gaps.push(norms_vector(&t.u.sub(&ubar)).l2);
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok((
        ok && monotone && asym <= 1e-14,
        format!(
            "self-adjointness defect {asym:.1e}; L2 gaps to the unregularized minimizer at 8h/4h/2h {:.3e}/{:.3e}/{:.3e}",
            gaps[0], gaps[1], gaps[2]
        ),
    ))
}

fn vanishing_viscoelasticity() -> Result<(bool, String)> {
    let g = Grid::square(65)?;
    let case = ManufacturedCase::Trig;
    let y_d = VectorField::from_fn(g, |x, y| case.velocity(x, y)).scale(1000.0);
    let problem = ControlProblem {
        spec: CostSpec::new(1.0, y_d)?,
        set: AdmissibleSet::symmetric(1e3)?,
        u0: VectorField::zeros(g),
        solver: SolverConfig {
            picard_tol: 1e-11,
            ..SolverConfig::default()
        },
    };
    let t = Instant::now();
    let study = continuation_alpha(&problem, &[0.1, 0.05, 0.025, 0.0125, 0.0], params(1.0, 0.0), &OptConfig::default())?;
    let wall = t.elapsed().as_secs_f64();
    let r = &study.report;
    let m = |k: &str| r.get(k).unwrap_or(f64::NAN);
    let detail = format!(
        "final/first gap J {:.3} u {:.3} y {:.3} p {:.3} (limit 0.1); monotone J/u/y/p {}/{}/{}/{}; {:.0}s",
        m("final_over_first_J"),
        m("final_over_first_u"),
        m("final_over_first_y"),
        m("final_over_first_p"),
        m("monotone_J"),
        m("monotone_u"),
        m("monotone_y"),
        m("monotone_p"),
        wall
    );
    Ok((r.passed && wall <= 900.0, detail))
}

fn smallness_coherence() -> Result<(bool, String)> {
    let g = Grid::square(65)?;
    let p = params(1.0, 0.05);
    let constants = estimate_constants(g, 100, 10)?;
    let solver = FluidSolver::new(g, p, SolverConfig::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let (mut accepted, mut worst, mut bad) = (0, 0.0f64, 0);
    while accepted < 20 {
        let amp = rng.gen_range(1.0..60.0);
        let u = random_control(&mut rng, g, 4, amp);
        if !check_smallness(&u, p, &constants).holds {
            continue;
        }
        accepted += 1;
        let s = solver.solve_state(&u, None)?;
        // increments at the round-off floor carry no contraction information
        let floor = 1e-12 * s.increments_h1.first().copied().unwrap_or(0.0);
        let factors: Vec<f64> = s
            .contraction_factors()
            .into_iter()
            .zip(&s.increments_h1)
            .skip(1)
            .filter(|(_, &prev)| prev > floor)
            .map(|(c, _)| c)
            .collect();
        let m = factors.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(m);
        bad += usize::from(!s.converged || m >= 1.0);
    }
    Ok((bad == 0, format!("20 controls satisfying smallness, worst contraction factor {worst:.3}")))
}
