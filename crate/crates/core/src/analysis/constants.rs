use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{norms_vector, FluidParams, Grid, VectorField};
use crate::linalg::{norm2, BandedLu};
use crate::solvers::StreamOperators;

use super::fields::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KappaSource {
    /// `2·S4²·S2`
    Default,
    Override,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsReport {
    pub s2: f64,
    /// Lower bound: best ratio found, not a certified upper constant.
    pub s4: f64,
    pub kappa_bar: f64,
    pub kappa_source: KappaSource,
    pub notes: Vec<String>,
}

impl ConstantsReport {
    pub fn with_kappa_override(mut self, kappa_bar: f64) -> Result<Self> {
        if !(kappa_bar > 0.0 && kappa_bar.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kappa_bar",
                reason: format!("must be > 0, got {kappa_bar}"),
            });
        }
        let floor = self.s4 * self.s4 * self.s2;
        if kappa_bar < floor {
            self.notes.push(format!(
                "kappa_bar override {kappa_bar:e} lies below S4^2*S2 = {floor:e}"
            ));
        }
        self.kappa_bar = kappa_bar;
        self.kappa_source = KappaSource::Override;
        Ok(self)
    }

    pub fn summary(&self) -> String {
        let src = match self.kappa_source {
            KappaSource::Default => "2*S4^2*S2",
            KappaSource::Override => "override",
        };
        let mut s = format!(
            "S2={:e}\nS4={:e}\nS4_kind=lower-bound\nkappa_bar={:e}\nkappa_bar_source={src}\n",
            self.s2, self.s4, self.kappa_bar
        );
        for n in &self.notes {
            s.push_str(&format!("note={n}\n"));
        }
        s
    }
}

/// `λ₁^{-1/2}` of the 5-point Dirichlet Laplacian by inverse power iteration.
pub fn poincare_constant(grid: Grid) -> Result<f64> {
    let ops = StreamOperators::new(grid);
    let a = ops.lap5.mul(&ops.prolong).scale(-1.0);
    let lu = BandedLu::factor(&a, 1e-14)?;
    let mut x: Vec<f64> = grid
        .interior_nodes()
        .map(|(i, j)| {
            let (p, q) = grid.coords(i, j);
            p * (1.0 - p) * q * (1.0 - q)
        })
        .collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut y = lu.solve(&x);
        let n = norm2(&y);
        y.iter_mut().for_each(|v| *v /= n);
        let ay = a.matvec(&y);
        let next: f64 = y.iter().zip(&ay).map(|(p, q)| p * q).sum();
        x = y;
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    Ok(lambda.sqrt().recip())
}

fn l4_ratio(v: &VectorField) -> f64 {
    let n = norms_vector(v);
    if n.h1_semi > 0.0 {
        n.l4 / n.h1_semi
    } else {
        0.0
    }
}

/// Best `‖v‖₄/|v|_{H¹}` over seeded random fields, refined by a nonlinear power iteration.
pub fn l4_embedding_lower_bound(grid: Grid, trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = StreamOperators::new(grid);
    let dmin = (3.0 * grid.h()).max(0.02);
    let mut best = 0.0;
    let mut best_psi = None;
    for _ in 0..trials {
        let delta = rng.gen_range(dmin..0.3);
        let modes = rng.gen_range(1..=4);
        let f = RandomStream::sample(&mut rng, modes, delta);
        let r = l4_ratio(&f.velocity(grid));
        if r > best {
            best = r;
            best_psi = Some(f.psi(grid).interior_values());
        }
    }

    // stationarity of ‖v‖₄⁴/|v|⁴_{H¹}: B ψ ∝ h⁻² Vᵀ M (|v|² v)
    let Some(mut psi) = best_psi else {
        return Ok(best);
    };
    let lu = BandedLu::factor(&ops.biharm, 1e-14)?;
    let h2 = grid.h() * grid.h();
    for _ in 0..60 {
        let v = ops.velocity.matvec(&psi);
        let n = grid.len();
        let mut cubic = vec![0.0; 2 * n];
        for k in 0..n {
            let m2 = v[k] * v[k] + v[n + k] * v[n + k];
            cubic[k] = ops.mass[k] * m2 * v[k] / h2;
            cubic[n + k] = ops.mass[n + k] * m2 * v[n + k] / h2;
        }
        let mut next = lu.solve(&ops.velocity.matvec_t(&cubic));
        let s = norm2(&next);
        if !(s > 0.0) {
            break;
        }
        next.iter_mut().for_each(|x| *x /= s);
        psi = next;
        best = f64::max(best, l4_ratio(&ops.velocity_field(&psi)));
    }
    Ok(best)
}

pub fn estimate_constants(grid: Grid, trials: usize, seed: u64) -> Result<ConstantsReport> {
    if trials < 100 {
        return Err(Error::InvalidParameter {
            name: "trials",
            reason: format!("need at least 100, got {trials}"),
        });
    }
    let s2 = poincare_constant(grid)?;
    let s4 = l4_embedding_lower_bound(grid, trials, seed)?;
    Ok(ConstantsReport {
        s2,
        s4,
        kappa_bar: 2.0 * s4 * s4 * s2,
        kappa_source: KappaSource::Default,
        notes: vec![format!("S4 from {trials} random fields plus power iteration, seed {seed}")],
    })
}

/// `‖curl u‖₂` from centered differences, quadrature over interior nodes.
pub fn curl_norm(u: &VectorField) -> f64 {
    let g = u.grid();
    let h = g.h();
    let mut acc = 0.0;
    for (i, j) in g.interior_nodes() {
        let c = (u.at(i + 1, j).1 - u.at(i - 1, j).1 - u.at(i, j + 1).0 + u.at(i, j - 1).0) / (2.0 * h);
        acc += c * c;
    }
    (acc * h * h).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessVerdict {
    pub holds: bool,
    /// `ν² − κ̄(‖u‖₂ + α‖curl u‖₂)`
    pub margin: f64,
    pub lhs: f64,
    pub kappa_bar: f64,
}

pub fn smallness_verdict(u: &VectorField, params: FluidParams, kappa_bar: f64) -> SmallnessVerdict {
    let lhs = kappa_bar * (norms_vector(u).l2 + params.alpha * curl_norm(u));
    let margin = params.nu * params.nu - lhs;
    SmallnessVerdict {
        holds: margin > 0.0,
        margin,
        lhs,
        kappa_bar,
    }
}

pub fn check_smallness(u: &VectorField, params: FluidParams, constants: &ConstantsReport) -> SmallnessVerdict {
    smallness_verdict(u, params, constants.kappa_bar)
}
