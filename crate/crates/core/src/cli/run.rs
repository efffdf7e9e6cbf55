use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    check_smallness, continuation_alpha, estimate_constants, gateaux_probe, lipschitz_probe,
    manufactured_case, random_control, verify_identities, verify_state_estimates, ConstantsReport,
    ControlProblem, ProbeReport,
};
use crate::control::{
    optimize, optimize_regularized, AdmissibleSet, CostSpec, MollifierSpec, OptimizationTrace,
};
use crate::error::{Error, Result};
use crate::grid::{norms_vector, read_vector, FieldDump, Grid, VectorField};
use crate::solvers::{FluidSolver, StateSolution};

use super::config::{FieldSource, RunConfig, Subcommand};

/// Outcome of a run that produced its artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    /// An audit reported violations.
    AuditFailed,
    /// A solver or optimizer stopped short of its tolerance.
    NotConverged,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::AuditFailed => 1,
            RunStatus::NotConverged => 3,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Success => "success",
            RunStatus::AuditFailed => "audit-failed",
            RunStatus::NotConverged => "not-converged",
        }
    }
}

/// Exit code for a run that failed with `e`.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::UnknownCase(_)
        | Error::GridTooCoarse { .. }
        | Error::NonSquareCells { .. }
        | Error::ShapeMismatch { .. }
        | Error::KernelUnderResolved { .. } => 2,
        Error::NotConverged { .. } | Error::LineSearch { .. } | Error::SingularSystem { .. } => 3,
        Error::Io { .. } | Error::Format(_) => 4,
    }
}

/// Named text files, relative to an output directory.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<PathBuf>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn add_field(&mut self, name: impl Into<PathBuf>, field: &impl FieldDump) {
        self.add(name, field.to_dump());
    }

    pub fn names(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == Path::new(name))
            .map(|(_, s)| s.as_str())
    }

    fn extend_in(&mut self, dir: &str, other: Artifacts) {
        for (p, s) in other.files {
            self.files.push((Path::new(dir).join(p), s));
        }
    }
}

/// Writes every artifact under `dir`, creating subdirectories as needed.
pub fn write_outputs(artifacts: &Artifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(artifacts.files.len());
    for (name, contents) in &artifacts.files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

/// Default output directory, named after the subcommand and key parameters.
pub fn default_out_dir(cfg: &RunConfig, sub: Subcommand) -> PathBuf {
    PathBuf::from("runs").join(format!(
        "{}-n{}-alpha{}-seed{}",
        sub.name(),
        cfg.grid,
        cfg.params.alpha,
        cfg.seed
    ))
}

/// Runs `sub` and writes its artifacts plus `manifest.txt` into `out`.
///
/// On a solver error the manifest and `error.txt` are still written before
/// the error is returned.
pub fn run(cfg: &RunConfig, sub: Subcommand, out: &Path) -> Result<RunOutcome> {
    cfg.require_for(sub)?;
    let start = Instant::now();
    let result = dispatch(cfg, sub);
    let wall = start.elapsed().as_secs_f64();
    match result {
        Ok((status, mut artifacts)) => {
            artifacts.add("manifest.txt", manifest(cfg, sub, status.as_str(), wall));
            let summary = artifacts.get("summary.txt").unwrap_or_default().to_string();
            let files = write_outputs(&artifacts, out)?;
            Ok(RunOutcome {
                status,
                dir: out.to_path_buf(),
                files,
                summary,
            })
        }
        Err(e) => {
            let mut artifacts = Artifacts::default();
            artifacts.add("error.txt", format!("{e}\n"));
            artifacts.add("manifest.txt", manifest(cfg, sub, "error", wall));
            // the original error matters more than a failure to record it
            let _ = write_outputs(&artifacts, out);
            Err(e)
        }
    }
}

fn manifest(cfg: &RunConfig, sub: Subcommand, status: &str, wall: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# config");
    s.push_str(&cfg.echo());
    let _ = writeln!(s, "# run");
    let _ = writeln!(s, "subcommand = {}", sub.name());
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "status = {status}");
    let _ = writeln!(s, "wall_time_s = {wall:.3}");
    s
}

fn dispatch(cfg: &RunConfig, sub: Subcommand) -> Result<(RunStatus, Artifacts)> {
    let grid = Grid::square(cfg.grid)?;
    let ctx = Context { cfg, grid };
    match sub {
        Subcommand::SolveState => ctx.solve_state(),
        Subcommand::Linearize => ctx.linearize(),
        Subcommand::Adjoint => ctx.adjoint(),
        Subcommand::Optimize => ctx.optimize(),
        Subcommand::OptimizeRegularized => ctx.optimize_regularized(),
        Subcommand::Continuation => ctx.continuation(),
        Subcommand::Verify => ctx.verify(),
        Subcommand::Constants => ctx.constants(),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    grid: Grid,
}

fn converged_status(ok: bool) -> RunStatus {
    if ok {
        RunStatus::Success
    } else {
        RunStatus::NotConverged
    }
}

fn state_files(a: &mut Artifacts, s: &StateSolution) {
    a.add_field("psi.dat", &s.psi);
    a.add_field("y.dat", &s.y);
    a.add_field("omega.dat", &s.omega);
    a.add("diagnostics.csv", s.diagnostics_csv());
}

fn trace_files(a: &mut Artifacts, t: &OptimizationTrace) {
    a.add("trace.csv", t.csv());
    a.add_field("u_final.dat", &t.u);
    a.add_field("y.dat", &t.state.y);
    a.add_field("p.dat", &t.adjoint.p);
}

fn trace_summary(t: &OptimizationTrace) -> String {
    format!(
        "termination={}\niterations={}\nJ={:e}\nvi_residual={:e}\nsmallness_violations={}\n",
        t.termination.as_str(),
        t.iterations(),
        t.final_cost(),
        t.final_vi_residual(),
        t.smallness_violations
    )
}

impl Context<'_> {
    fn field(&self, key: &str, src: Option<&FieldSource>, salt: u64) -> Result<VectorField> {
        let g = self.grid;
        let v = match src {
            None | Some(FieldSource::Zero) => VectorField::zeros(g),
            Some(FieldSource::File(p)) => {
                let v = read_vector(p)?;
                if v.grid() != g {
                    return Err(Error::config(
                        None,
                        format!("key '{key}': '{}' is not on the {}² grid", p.display(), self.cfg.grid),
                    ));
                }
                v
            }
            Some(FieldSource::Manufactured(case)) => manufactured_case(case.id(), g, self.cfg.params)?.1,
            Some(FieldSource::Random(amp)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(salt));
                random_control(&mut rng, g, 4, *amp)
            }
        };
        Ok(v)
    }

    fn target(&self) -> Result<VectorField> {
        let g = self.grid;
        let y_d = match &self.cfg.target {
            Some(FieldSource::Manufactured(case)) => VectorField::from_fn(g, |x, y| case.velocity(x, y)),
            other => self.field("target", other.as_ref(), 6)?,
        };
        Ok(y_d.scale(self.cfg.target_scale))
    }

    fn solver(&self) -> Result<FluidSolver> {
        FluidSolver::new(self.grid, self.cfg.params, self.cfg.solver)
    }

    fn constants(&self) -> Result<(RunStatus, Artifacts)> {
        let c = self.constants_report()?;
        let mut a = Artifacts::default();
        a.add("constants.txt", c.summary());
        a.add("summary.txt", c.summary());
        Ok((RunStatus::Success, a))
    }

    fn constants_report(&self) -> Result<ConstantsReport> {
        let c = estimate_constants(self.grid, self.cfg.trials, self.cfg.seed)?;
        match self.cfg.kappa_bar {
            Some(k) => c.with_kappa_override(k),
            None => Ok(c),
        }
    }

    fn solve_state(&self) -> Result<(RunStatus, Artifacts)> {
        let u = self.field("u", self.cfg.u.as_ref(), 1)?;
        let s = self.solver()?.solve_state(&u, None)?;
        let mut a = Artifacts::default();
        state_files(&mut a, &s);
        let mut summary = format!(
            "converged={}\niterations={}\nresidual={:e}\n",
            s.converged, s.iterations, s.residual
        );
        if let Some(k) = self.cfg.kappa_bar {
            let v = crate::analysis::smallness_verdict(&u, self.cfg.params, k);
            let _ = write!(summary, "smallness_holds={}\nsmallness_margin={:e}\n", v.holds, v.margin);
        }
        a.add("summary.txt", summary);
        Ok((converged_status(s.converged), a))
    }

    fn linearize(&self) -> Result<(RunStatus, Artifacts)> {
        let u = self.field("u", self.cfg.u.as_ref(), 1)?;
        let w = self.field("w", self.cfg.w.as_ref(), 2)?;
        let solver = self.solver()?;
        let s = solver.solve_state(&u, None)?;
        let mut a = Artifacts::default();
        state_files(&mut a, &s);
        if !s.converged {
            a.add("summary.txt", format!("converged=false\nresidual={:e}\n", s.residual));
            return Ok((RunStatus::NotConverged, a));
        }
        let lin = solver.solve_linearized(&s, &w)?;
        a.add_field("z.dat", &lin.z);
        a.add_field("chi.dat", &lin.chi);
        a.add_field("zeta.dat", &lin.zeta);
        let n = norms_vector(&lin.z);
        a.add(
            "summary.txt",
            format!("converged=true\nz_l2={:e}\nz_h1_semi={:e}\n", n.l2, n.h1_semi),
        );
        Ok((RunStatus::Success, a))
    }

    fn adjoint(&self) -> Result<(RunStatus, Artifacts)> {
        let u = self.field("u", self.cfg.u.as_ref(), 1)?;
        let f = self.field("f", self.cfg.f.as_ref(), 3)?;
        let solver = self.solver()?;
        let s = solver.solve_state(&u, None)?;
        let mut a = Artifacts::default();
        state_files(&mut a, &s);
        if !s.converged {
            a.add("summary.txt", format!("converged=false\nresidual={:e}\n", s.residual));
            return Ok((RunStatus::NotConverged, a));
        }
        let adj = solver.solve_adjoint(&s, &f, self.cfg.adjoint_mode)?;
        a.add_field("p.dat", &adj.p);
        a.add_field("q.dat", &adj.q);
        let n = norms_vector(&adj.p);
        a.add("summary.txt", format!("converged=true\np_l2={:e}\n", n.l2));
        Ok((RunStatus::Success, a))
    }

    fn problem(&self) -> Result<ControlProblem> {
        Ok(ControlProblem {
            spec: CostSpec::new(self.cfg.lambda, self.target()?)?,
            set: AdmissibleSet::new(self.cfg.lower, self.cfg.upper)?,
            u0: self.field("u0", self.cfg.u0.as_ref(), 4)?,
            solver: self.cfg.solver,
        })
    }

    fn optimize(&self) -> Result<(RunStatus, Artifacts)> {
        let p = self.problem()?;
        let t = optimize(&p.u0, &p.spec, &p.set, self.cfg.params, p.solver, &self.cfg.opt)?;
        let mut a = Artifacts::default();
        trace_files(&mut a, &t);
        a.add("summary.txt", trace_summary(&t));
        Ok((converged_status(t.converged()), a))
    }

    fn optimize_regularized(&self) -> Result<(RunStatus, Artifacts)> {
        let p = self.problem()?;
        let params = self.cfg.params;
        let mut a = Artifacts::default();
        let mut ok = true;
        let ubar = match &self.cfg.ubar {
            Some(src) => self.field("ubar", Some(src), 5)?,
            None => {
                let t = optimize(&p.u0, &p.spec, &p.set, params, p.solver, &self.cfg.opt)?;
                ok &= t.converged();
                let mut sub = Artifacts::default();
                trace_files(&mut sub, &t);
                a.extend_in("reference", sub);
                t.u
            }
        };
        // the regularized minimizers sit near the reference, so start there by default
        let start = match self.cfg.u0 {
            Some(_) => p.u0.clone(),
            None => ubar.clone(),
        };
        let mut rep = ProbeReport::new(
            "regularized",
            &["epsilon", "objective", "gap_u_l2", "iterations", "vi_residual"],
        );
        for r in &self.cfg.epsilons {
            let eps = r.resolve(self.grid);
            let kernel = MollifierSpec::new(eps, self.grid)?;
            let t = optimize_regularized(
                &start, &ubar, &p.spec, &p.set, params, p.solver, &kernel, &self.cfg.opt,
            )?;
            ok &= t.converged();
            let gap = norms_vector(&t.u.sub(&ubar)).l2;
            rep.row(vec![eps, t.final_cost(), gap, t.iterations() as f64, t.final_vi_residual()]);
            let mut sub = Artifacts::default();
            trace_files(&mut sub, &t);
            a.extend_in(&format!("eps_{}", r.label()), sub);
        }
        let gaps = rep.column("gap_u_l2").unwrap_or_default();
        let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
        rep.measure("monotone", if monotone { 1.0 } else { 0.0 });
        rep.passed = monotone;
        a.add("regularized.csv", rep.csv());
        a.add("summary.txt", rep.summary());
        let status = if !ok {
            RunStatus::NotConverged
        } else if !monotone {
            RunStatus::AuditFailed
        } else {
            RunStatus::Success
        };
        Ok((status, a))
    }

    fn continuation(&self) -> Result<(RunStatus, Artifacts)> {
        let p = self.problem()?;
        let study = continuation_alpha(&p, &self.cfg.alphas, self.cfg.params, &self.cfg.opt)?;
        let mut a = Artifacts::default();
        let mut ok = true;
        for (alpha, t) in &study.entries {
            ok &= t.converged();
            let mut sub = Artifacts::default();
            trace_files(&mut sub, t);
            a.extend_in(&format!("alpha_{alpha}"), sub);
        }
        a.add("continuation.csv", study.report.csv());
        a.add("summary.txt", study.report.summary());
        let status = if !ok {
            RunStatus::NotConverged
        } else if !study.report.passed {
            RunStatus::AuditFailed
        } else {
            RunStatus::Success
        };
        Ok((status, a))
    }

    fn verify(&self) -> Result<(RunStatus, Artifacts)> {
        let (g, params, cfg) = (self.grid, self.cfg.params, self.cfg.solver);
        let constants = self.constants_report()?;
        let solver = self.solver()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut a = Artifacts::default();
        let mut violations = 0usize;

        let mut est = ProbeReport::new(
            "state-estimates",
            &["control", "amplitude", "slack_h1", "slack_v2", "smallness_margin", "passed"],
        );
        for k in 0..self.cfg.controls {
            let amp = 10f64.powf(rng.gen_range(-1.0..1.5));
            let u = random_control(&mut rng, g, 4, amp);
            let s = solver.solve_state(&u, None)?;
            if !s.converged {
                return Err(Error::NotConverged {
                    iterations: s.iterations,
                    residual: s.residual,
                });
            }
            let r = verify_state_estimates(&s, &u, params, &constants);
            let v = check_smallness(&u, params, &constants);
            violations += usize::from(!r.passed);
            est.row(vec![
                k as f64,
                amp,
                r.get("slack_h1").unwrap_or(f64::NAN),
                r.get("slack_v2").unwrap_or(f64::NAN),
                v.margin,
                if r.passed { 1.0 } else { 0.0 },
            ]);
        }
        est.passed = violations == 0;
        a.add("estimates.csv", est.csv());

        // two coarsenings of the run grid, as fine as the run grid allows
        let n = self.cfg.grid;
        let chain: Vec<Grid> = if (n - 1).is_multiple_of(4) {
            [(n - 1) / 4 + 1, (n - 1) / 2 + 1, n]
                .into_iter()
                .filter(|&m| m >= crate::grid::MIN_NODES)
                .map(Grid::square)
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let mut probes = vec![("estimates", est.passed)];
        if chain.len() >= 2 {
            let id = verify_identities(&chain, params.alpha, self.cfg.seed, 20, constants.s4);
            a.add("identities.csv", id.csv());
            probes.push(("identities", id.passed));
            violations += usize::from(!id.passed);
        }

        let amp = 0.5 * params.nu * params.nu / constants.kappa_bar;
        let u = random_control(&mut rng, g, 4, amp.min(10.0));
        let w = random_control(&mut rng, g, 4, 1.0);
        let gat = gateaux_probe(&u, &w, &[1e-1, 1e-2, 1e-3], params, cfg)?;
        a.add("gateaux.csv", gat.csv());
        probes.push(("gateaux", gat.passed));
        violations += usize::from(!gat.passed);

        let u2 = u.axpy(0.1, &w);
        let lip = lipschitz_probe(&u2, &u, params, cfg, &constants)?;
        a.add("lipschitz.csv", lip.csv());
        probes.push(("lipschitz", lip.passed));
        violations += usize::from(!lip.passed);

        let mut summary = constants.summary();
        for (name, passed) in &probes {
            let _ = writeln!(summary, "{name}_passed={passed}");
        }
        let _ = writeln!(summary, "violations={violations}");
        a.add("constants.txt", constants.summary());
        a.add("summary.txt", summary);
        let status = if violations == 0 {
            RunStatus::Success
        } else {
            RunStatus::AuditFailed
        };
        Ok((status, a))
    }
}
