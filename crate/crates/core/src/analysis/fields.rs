//! Seeded smooth divergence-free fields with compact support.

use std::f64::consts::PI;

use rand::Rng;

use crate::grid::{Grid, ScalarField, VectorField};

/// Stream function `c(x₁)c(x₂) Σ a_kl sin(kπx₁ + φ_k) sin(lπx₂ + θ_l)`,
/// `c(t) = ((t − δ)(1 − δ − t))⁶` on `[δ, 1 − δ]` and zero outside.
#[derive(Clone, Debug)]
pub struct RandomStream {
    delta: f64,
    terms: Vec<(f64, f64, f64, f64, f64)>,
    scale: f64,
}

impl RandomStream {
    pub fn sample(rng: &mut impl Rng, modes: usize, delta: f64) -> Self {
        let mut terms = Vec::with_capacity(modes * modes);
        for k in 1..=modes {
            for l in 1..=modes {
                let decay = 1.0 / ((k * k + l * l) as f64);
                let a = rng.gen_range(-1.0..1.0) * decay;
                let pk = rng.gen_range(0.0..2.0 * PI);
                let pl = rng.gen_range(0.0..2.0 * PI);
                terms.push((k as f64 * PI, l as f64 * PI, pk, pl, a));
            }
        }
        // c peaks at ((1−2δ)/2)¹²; rescale so ψ is O(1)
        let peak = ((0.5 - delta) * (0.5 - delta)).powi(6);
        RandomStream {
            delta,
            terms,
            scale: 1.0 / peak,
        }
    }

    fn cutoff(&self, t: f64) -> (f64, f64) {
        let d = self.delta;
        if t <= d || t >= 1.0 - d {
            return (0.0, 0.0);
        }
        let q = (t - d) * (1.0 - d - t);
        (q.powi(6), 6.0 * q.powi(5) * (1.0 - 2.0 * t))
    }

    /// `(ψ, ∂₁ψ, ∂₂ψ)`
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (cx, dcx) = self.cutoff(x);
        let (cy, dcy) = self.cutoff(y);
        if cx == 0.0 && dcx == 0.0 || cy == 0.0 && dcy == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for &(kx, ky, px, py, a) in &self.terms {
            let (tx, ty) = ((kx * x + px).sin(), (ky * y + py).sin());
            s += a * tx * ty;
            sx += a * kx * (kx * x + px).cos() * ty;
            sy += a * tx * ky * (ky * y + py).cos();
        }
        let c = self.scale;
        (
            c * cx * cy * s,
            c * (dcx * cy * s + cx * cy * sx),
            c * (cx * dcy * s + cx * cy * sy),
        )
    }

    pub fn psi(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| self.eval(x, y).0)
    }

    /// `(∂₂ψ, −∂₁ψ)` sampled exactly.
    pub fn velocity(&self, grid: Grid) -> VectorField {
        VectorField::from_fn(grid, |x, y| {
            let (_, px, py) = self.eval(x, y);
            (py, -px)
        })
    }
}

/// Smooth, not necessarily solenoidal, control `Σ a_kl sin(kπx₁+φ) cos(lπx₂+θ)` per component.
pub fn random_control(rng: &mut impl Rng, grid: Grid, modes: usize, amplitude: f64) -> VectorField {
    let mut comp = || {
        let terms: Vec<(f64, f64, f64, f64, f64)> = (1..=modes)
            .flat_map(|k| (1..=modes).map(move |l| (k, l)))
            .map(|(k, l)| {
                (
                    k as f64 * PI,
                    l as f64 * PI,
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(-1.0..1.0) / ((k * k + l * l) as f64),
                )
            })
            .collect();
        ScalarField::from_fn(grid, move |x, y| {
            terms
                .iter()
                .map(|&(kx, ky, px, py, a)| a * (kx * x + px).sin() * (ky * y + py).cos())
                .sum::<f64>()
        })
    };
    let a = comp();
    let b = comp();
    let v = VectorField::from_scalars(a, b);
    let m = v.max_abs();
    if m > 0.0 {
        v.scale(amplitude / m)
    } else {
        v
    }
}
