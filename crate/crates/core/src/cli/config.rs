use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::ManufacturedCase;
use crate::control::OptConfig;
use crate::error::{Error, Result};
use crate::grid::{FluidParams, Grid};
use crate::solvers::{AdjointMode, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    SolveState,
    Linearize,
    Adjoint,
    Optimize,
    OptimizeRegularized,
    Continuation,
    Verify,
    Constants,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::SolveState,
        Subcommand::Linearize,
        Subcommand::Adjoint,
        Subcommand::Optimize,
        Subcommand::OptimizeRegularized,
        Subcommand::Continuation,
        Subcommand::Verify,
        Subcommand::Constants,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::SolveState => "solve-state",
            Subcommand::Linearize => "linearize",
            Subcommand::Adjoint => "adjoint",
            Subcommand::Optimize => "optimize",
            Subcommand::OptimizeRegularized => "optimize-regularized",
            Subcommand::Continuation => "continuation",
            Subcommand::Verify => "verify",
            Subcommand::Constants => "constants",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Subcommand::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand '{s}'"))
    }
}

/// Where a nodal vector field comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSource {
    Zero,
    File(PathBuf),
    /// Forcing when used as a control, velocity when used as a target.
    Manufactured(ManufacturedCase),
    /// Seeded smooth field with the given max-norm.
    Random(f64),
}

/// Kernel radius, absolute or in grid spacings (`4h`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Radius {
    Absolute(f64),
    Spacings(f64),
}

impl Radius {
    pub fn resolve(&self, grid: Grid) -> f64 {
        match *self {
            Radius::Absolute(e) => e,
            Radius::Spacings(k) => k * grid.h(),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Radius::Absolute(e) => format!("{e}"),
            Radius::Spacings(k) => format!("{k}h"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub subcommand: Option<Subcommand>,
    pub grid: usize,
    pub params: FluidParams,
    pub lambda: f64,
    pub u: Option<FieldSource>,
    pub w: Option<FieldSource>,
    pub f: Option<FieldSource>,
    pub target: Option<FieldSource>,
    pub target_scale: f64,
    pub u0: Option<FieldSource>,
    pub ubar: Option<FieldSource>,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub solver: SolverConfig,
    pub opt: OptConfig,
    pub adjoint_mode: AdjointMode,
    pub kappa_bar: Option<f64>,
    pub alphas: Vec<f64>,
    pub epsilons: Vec<Radius>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub trials: usize,
    pub controls: usize,
    /// Accepted `key=value` pairs in file order, for the manifest.
    pub entries: Vec<(String, String)>,
}

const KEYS: &[&str] = &[
    "subcommand",
    "grid",
    "nu",
    "alpha",
    "lambda",
    "u",
    "w",
    "f",
    "target",
    "target_scale",
    "u0",
    "ubar",
    "lower",
    "upper",
    "picard_tol",
    "picard_max_iters",
    "relaxation",
    "pivot_tol",
    "advection",
    "opt_tol",
    "max_iters",
    "initial_step",
    "c1",
    "backtrack",
    "adjoint_mode",
    "kappa_bar",
    "alphas",
    "epsilons",
    "seed",
    "out",
    "trials",
    "controls",
];

struct Raw<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
    base: &'a Path,
}

impl<'a> Raw<'a> {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(&(line, v)) => v.parse::<T>().map(Some).map_err(|e| {
                Error::config(Some(line), format!("key '{key}': cannot parse '{v}': {e}"))
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn check(&self, key: &str, ok: bool, constraint: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::config(self.line(key), format!("key '{key}' must satisfy {constraint}")))
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(&(line, v)) = self.map.get(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                s.trim().parse::<T>().map_err(|e| {
                    Error::config(Some(line), format!("key '{key}': cannot parse '{}': {e}", s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        match self.list::<f64>(key)? {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok([v[0], v[0]]),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(_) => Err(Error::config(self.line(key), format!("key '{key}' takes one or two numbers"))),
        }
    }

    fn source(&self, key: &str) -> Result<Option<FieldSource>> {
        let Some(&(line, v)) = self.map.get(key) else {
            return Ok(None);
        };
        let src = if v == "zero" {
            FieldSource::Zero
        } else if let Some(id) = v.strip_prefix("manufactured:") {
            FieldSource::Manufactured(
                id.parse().map_err(|e: Error| Error::config(Some(line), format!("key '{key}': {e}")))?,
            )
        } else if let Some(a) = v.strip_prefix("random:") {
            let amp: f64 = a.parse().map_err(|_| {
                Error::config(Some(line), format!("key '{key}': bad random amplitude '{a}'"))
            })?;
            FieldSource::Random(amp)
        } else {
            let p = self.base.join(v);
            if !p.is_file() {
                return Err(Error::config(
                    Some(line),
                    format!("key '{key}': file '{}' does not exist", p.display()),
                ));
            }
            FieldSource::File(p)
        };
        Ok(Some(src))
    }
}

impl FromStr for Radius {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let r = match s.strip_suffix('h') {
            Some(k) => Radius::Spacings(k.parse().map_err(|_| format!("bad radius '{s}'"))?),
            None => Radius::Absolute(s.parse().map_err(|_| format!("bad radius '{s}'"))?),
        };
        Ok(r)
    }
}

/// Parses `key = value` lines; relative paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

/// As [`parse_config`], resolving relative paths against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let mut map: HashMap<&str, (usize, &str)> = HashMap::new();
    let mut entries = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::config(Some(line), format!("expected key = value, got '{content}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::config(Some(line), format!("unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(Error::config(Some(line), format!("key '{key}' has an empty value")));
        }
        if let Some(&(first, _)) = map.get(key) {
            return Err(Error::config(
                Some(line),
                format!("duplicate key '{key}' on lines {first} and {line}"),
            ));
        }
        map.insert(key, (line, value));
        entries.push((key.to_string(), value.to_string()));
    }
    let raw = Raw { map, base };

    let grid: usize = raw
        .get("grid")?
        .ok_or_else(|| Error::config(None, "missing required key 'grid'"))?;
    raw.check("grid", grid >= crate::grid::MIN_NODES, &format!("grid >= {}", crate::grid::MIN_NODES))?;
    let nu: f64 = raw.or("nu", 1.0)?;
    raw.check("nu", nu > 0.0 && nu.is_finite(), "nu > 0")?;
    let alpha: f64 = raw.or("alpha", 0.0)?;
    raw.check("alpha", alpha >= 0.0 && alpha.is_finite(), "alpha >= 0")?;
    let lambda: f64 = raw.or("lambda", 0.0)?;
    raw.check("lambda", lambda >= 0.0 && lambda.is_finite(), "lambda >= 0")?;
    let target_scale: f64 = raw.or("target_scale", 1.0)?;
    raw.check("target_scale", target_scale.is_finite(), "a finite number")?;

    let lower = raw.pair("lower", [-1e3, -1e3])?;
    let upper = raw.pair("upper", [1e3, 1e3])?;
    for k in 0..2 {
        raw.check("upper", lower[k] <= upper[k], "lower <= upper componentwise")?;
    }

    let d = SolverConfig::default();
    let solver = SolverConfig {
        picard_tol: raw.or("picard_tol", d.picard_tol)?,
        picard_max_iters: raw.or("picard_max_iters", d.picard_max_iters)?,
        relaxation: raw.or("relaxation", d.relaxation)?,
        pivot_tol: raw.or("pivot_tol", d.pivot_tol)?,
        advection: raw.or("advection", d.advection)?,
    };
    raw.check("picard_tol", solver.picard_tol > 0.0, "picard_tol > 0")?;
    raw.check("relaxation", solver.relaxation > 0.0 && solver.relaxation <= 1.0, "0 < relaxation <= 1")?;
    raw.check("pivot_tol", solver.pivot_tol >= 0.0, "pivot_tol >= 0")?;

    let adjoint_mode: AdjointMode = raw.or("adjoint_mode", AdjointMode::DiscreteTranspose)?;
    let kappa_bar: Option<f64> = raw.get("kappa_bar")?;
    if let Some(k) = kappa_bar {
        raw.check("kappa_bar", k > 0.0 && k.is_finite(), "kappa_bar > 0")?;
    }
    let o = OptConfig::default();
    let opt = OptConfig {
        max_iters: raw.or("max_iters", o.max_iters)?,
        opt_tol: raw.or("opt_tol", o.opt_tol)?,
        initial_step: raw.or("initial_step", o.initial_step)?,
        c1: raw.or("c1", o.c1)?,
        backtrack: raw.or("backtrack", o.backtrack)?,
        max_backtracks: o.max_backtracks,
        mode: adjoint_mode,
        kappa_bar,
    };
    raw.check("opt_tol", opt.opt_tol > 0.0, "opt_tol > 0")?;
    raw.check("initial_step", opt.initial_step > 0.0, "initial_step > 0")?;
    raw.check("c1", opt.c1 > 0.0 && opt.c1 < 1.0, "0 < c1 < 1")?;
    raw.check("backtrack", opt.backtrack > 0.0 && opt.backtrack < 1.0, "0 < backtrack < 1")?;

    let alphas: Vec<f64> = raw.list("alphas")?.unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125, 0.0]);
    raw.check(
        "alphas",
        alphas.windows(2).all(|w| w[0] > w[1]) && alphas.iter().all(|a| *a >= 0.0),
        "a strictly decreasing list of non-negative values",
    )?;
    let epsilons: Vec<Radius> = raw.list("epsilons")?.unwrap_or_else(|| {
        vec![Radius::Spacings(8.0), Radius::Spacings(4.0), Radius::Spacings(2.0)]
    });
    let trials: usize = raw.or("trials", 200)?;
    raw.check("trials", trials >= 100, "trials >= 100")?;
    let controls: usize = raw.or("controls", 50)?;

    Ok(RunConfig {
        subcommand: raw.get("subcommand")?,
        grid,
        params: FluidParams { nu, alpha },
        lambda,
        u: raw.source("u")?,
        w: raw.source("w")?,
        f: raw.source("f")?,
        target: raw.source("target")?,
        target_scale,
        u0: raw.source("u0")?,
        ubar: raw.source("ubar")?,
        lower,
        upper,
        solver,
        opt,
        adjoint_mode,
        kappa_bar,
        alphas,
        epsilons,
        seed: raw.or("seed", 0)?,
        out: raw.get::<String>("out")?.map(PathBuf::from),
        trials,
        controls,
        entries,
    })
}

impl RunConfig {
    /// Checks the keys a subcommand needs, reporting the first one missing.
    pub fn require_for(&self, sub: Subcommand) -> Result<()> {
        if let Some(s) = self.subcommand {
            if s != sub {
                return Err(Error::config(
                    None,
                    format!("config declares subcommand '{}' but '{}' was requested", s.name(), sub.name()),
                ));
            }
        }
        let need = |present: bool, key: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::config(None, format!("missing required key '{key}' for {}", sub.name())))
            }
        };
        match sub {
            Subcommand::SolveState => need(self.u.is_some(), "u"),
            Subcommand::Linearize => need(self.u.is_some(), "u").and(need(self.w.is_some(), "w")),
            Subcommand::Adjoint => need(self.u.is_some(), "u").and(need(self.f.is_some(), "f")),
            Subcommand::Optimize | Subcommand::OptimizeRegularized | Subcommand::Continuation => {
                need(self.target.is_some(), "target")
            }
            Subcommand::Verify | Subcommand::Constants => Ok(()),
        }
    }

    /// The accepted entries as `key = value` lines.
    pub fn echo(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_of(text: &str) -> (Option<usize>, String) {
        match parse_config(text) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_state_config() {
        let dir = tempfile::tempdir().unwrap();
        let u = dir.path().join("u.dat");
        std::fs::write(&u, "").unwrap();
        let text = "# state solve\ngrid = 65\nnu = 1\nalpha = 0.05  # modulus\nu = u.dat\n";
        let c = parse_config_in(text, dir.path()).unwrap();
        assert_eq!(c.grid, 65);
        assert_eq!(c.params, FluidParams { nu: 1.0, alpha: 0.05 });
        assert_eq!(c.u, Some(FieldSource::File(u)));
        c.require_for(Subcommand::SolveState).unwrap();
        assert!(c.require_for(Subcommand::Optimize).is_err());
    }

    #[test]
    fn negative_viscosity_named() {
        let (line, msg) = err_of("grid = 17\nnu = -1\n");
        assert_eq!(line, Some(2));
        assert!(msg.contains("nu") && msg.contains("nu > 0"), "{msg}");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let (line, msg) = err_of("grid = 17\nalpha = 0.1\n\nalpha = 0.2\n");
        assert_eq!(line, Some(4));
        assert!(msg.contains("lines 2 and 4"), "{msg}");
    }

    #[test]
    fn unknown_and_malformed_lines() {
        assert_eq!(err_of("grid = 17\nnuu = 1\n").0, Some(2));
        assert_eq!(err_of("grid 17\n").0, Some(1));
        assert_eq!(err_of("grid = 17\nalpha = lots\n").0, Some(2));
        assert!(err_of("nu = 1\n").1.contains("missing required key 'grid'"));
        assert!(err_of("grid = 17\nu = nowhere.dat\n").1.contains("does not exist"));
    }

    #[test]
    fn lists_and_sources() {
        let c = parse_config(
            "grid=33\nalphas=0.1, 0.05, 0\nepsilons=8h,4h,0.05\ntarget=manufactured:trig\nu0=random:2\nlower=-1,-2\n",
        )
        .unwrap();
        assert_eq!(c.alphas, vec![0.1, 0.05, 0.0]);
        assert_eq!(c.epsilons[2], Radius::Absolute(0.05));
        assert_eq!(c.target, Some(FieldSource::Manufactured(ManufacturedCase::Trig)));
        assert_eq!(c.u0, Some(FieldSource::Random(2.0)));
        assert_eq!(c.lower, [-1.0, -2.0]);
        assert_eq!(err_of("grid=33\nalphas=0,0.1\n").0, Some(2));
    }
}
