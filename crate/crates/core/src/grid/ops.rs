//! Pointwise finite-difference operators on nodal fields.
//!
//! First derivatives are centered at interior nodes and one-sided second
//! order on Γ. Second derivatives use the 5-point stencil; their boundary
//! rows follow a [`Closure`].

use super::{Grid, ScalarField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Boundary row treatment for second-derivative operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    /// Boundary rows are zero.
    Zero,
    /// Ghost values mirror the first interior layer (`∂ψ/∂n = 0`).
    Clamped,
}

#[inline]
fn d1(values: &[f64], g: &Grid, i: usize, j: usize, axis: Axis) -> f64 {
    let h = g.h();
    let (n, pos) = match axis {
        Axis::X1 => (g.nx(), i),
        Axis::X2 => (g.ny(), j),
    };
    let at = |p: usize| match axis {
        Axis::X1 => values[g.index(p, j)],
        Axis::X2 => values[g.index(i, p)],
    };
    if pos == 0 {
        (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
    } else if pos == n - 1 {
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
    } else {
        (at(pos + 1) - at(pos - 1)) / (2.0 * h)
    }
}

pub fn partial(s: &ScalarField, axis: Axis) -> ScalarField {
    let g = s.grid();
    let v = s.values();
    let values = g.nodes().map(|(i, j)| d1(v, &g, i, j, axis)).collect();
    ScalarField::from_values(g, values).unwrap()
}

pub fn laplacian(s: &ScalarField) -> ScalarField {
    laplacian_with(s, Closure::Zero)
}

pub fn laplacian_with(s: &ScalarField, closure: Closure) -> ScalarField {
    let g = s.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let h2 = g.h() * g.h();
    let v = s.values();
    let at = |i: usize, j: usize| v[g.index(i, j)];
    let second = |i: usize, j: usize, axis: Axis| -> f64 {
        let (pos, n) = match axis {
            Axis::X1 => (i, nx),
            Axis::X2 => (j, ny),
        };
        let nb = |p: usize| match axis {
            Axis::X1 => at(p, j),
            Axis::X2 => at(i, p),
        };
        let c = nb(pos);
        if pos == 0 {
            2.0 * (nb(1) - c) / h2
        } else if pos == n - 1 {
            2.0 * (nb(n - 2) - c) / h2
        } else {
            (nb(pos + 1) - 2.0 * c + nb(pos - 1)) / h2
        }
    };
    let values = g
        .nodes()
        .map(|(i, j)| {
            if g.is_boundary(i, j) && closure == Closure::Zero {
                0.0
            } else {
                second(i, j, Axis::X1) + second(i, j, Axis::X2)
            }
        })
        .collect();
    ScalarField::from_values(g, values).unwrap()
}

/// `σ(s) = s − αΔs`.
pub fn sigma_apply(s: &ScalarField, alpha: f64) -> ScalarField {
    if alpha == 0.0 {
        return s.clone();
    }
    let lap = laplacian(s);
    s.zip_map(&lap, |a, l| a - alpha * l)
}

pub fn sigma_apply_vector(v: &VectorField, alpha: f64) -> VectorField {
    VectorField::from_scalars(
        sigma_apply(&v.component(0), alpha),
        sigma_apply(&v.component(1), alpha),
    )
}

/// `y = (∂₂ψ, −∂₁ψ)`.
pub fn velocity_from_stream(psi: &ScalarField) -> VectorField {
    curl_scalar(psi)
}

/// `∂₂s, −∂₁s`: the curl of `s ẑ`.
pub fn curl_scalar(s: &ScalarField) -> VectorField {
    let d2 = partial(s, Axis::X2);
    let d1 = partial(s, Axis::X1).map(|v| -v);
    VectorField::from_scalars(d2, d1)
}

/// `∂v₂/∂x₁ − ∂v₁/∂x₂`.
pub fn curl_vector(v: &VectorField) -> ScalarField {
    let a = partial(&v.component(1), Axis::X1);
    let b = partial(&v.component(0), Axis::X2);
    a.zip_map(&b, |x, y| x - y)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let a = partial(&v.component(0), Axis::X1);
    let b = partial(&v.component(1), Axis::X2);
    a.zip_map(&b, |x, y| x + y)
}

/// Third component of `y × z` for planar fields.
pub fn cross_z(y: &VectorField, z: &VectorField) -> ScalarField {
    let g = y.grid();
    let values = y
        .c1()
        .iter()
        .zip(y.c2())
        .zip(z.c1().iter().zip(z.c2()))
        .map(|((&y1, &y2), (&z1, &z2))| y1 * z2 - y2 * z1)
        .collect();
    ScalarField::from_values(g, values).unwrap()
}

/// `(s ẑ) × v = (−s v₂, s v₁)`.
pub fn cross_scalar(s: &ScalarField, v: &VectorField) -> VectorField {
    let g = v.grid();
    let c1 = s.values().iter().zip(v.c2()).map(|(&a, &b)| -a * b).collect();
    let c2 = s.values().iter().zip(v.c1()).map(|(&a, &b)| a * b).collect();
    VectorField::from_components(g, c1, c2).unwrap()
}

/// Trapezoidal quadrature of `(φ·∇z)·y` with the nodal first derivatives.
pub fn trilinear_b(phi: &VectorField, z: &VectorField, y: &VectorField) -> f64 {
    let g = phi.grid();
    let mut total = 0.0;
    for k in 0..2 {
        let zk = z.component(k);
        let dz1 = partial(&zk, Axis::X1);
        let dz2 = partial(&zk, Axis::X2);
        let yk = if k == 0 { y.c1() } else { y.c2() };
        for (i, j) in g.nodes() {
            let m = g.index(i, j);
            let conv = phi.c1()[m] * dz1.values()[m] + phi.c2()[m] * dz2.values()[m];
            total += g.weight(i, j) * conv * yk[m];
        }
    }
    total
}

/// First-order upwind `y·∇s` at interior nodes; zero on Γ.
pub fn advect(y: &VectorField, s: &ScalarField) -> ScalarField {
    let g = y.grid();
    let h = g.h();
    let sv = s.values();
    let mut out = ScalarField::zeros(g);
    for (i, j) in g.interior_nodes() {
        let k = g.index(i, j);
        let (a, b) = (y.c1()[k], y.c2()[k]);
        let c = sv[k];
        let dx = if a > 0.0 {
            (c - sv[g.index(i - 1, j)]) / h
        } else {
            (sv[g.index(i + 1, j)] - c) / h
        };
        let dy = if b > 0.0 {
            (c - sv[g.index(i, j - 1)]) / h
        } else {
            (sv[g.index(i, j + 1)] - c) / h
        };
        out.values_mut()[k] = a * dx + b * dy;
    }
    out
}

/// Centered `y·∇s` at interior nodes; zero on Γ.
pub fn advect_centered(y: &VectorField, s: &ScalarField) -> ScalarField {
    let g = y.grid();
    let h = g.h();
    let sv = s.values();
    let mut out = ScalarField::zeros(g);
    for (i, j) in g.interior_nodes() {
        let k = g.index(i, j);
        let dx = (sv[g.index(i + 1, j)] - sv[g.index(i - 1, j)]) / (2.0 * h);
        let dy = (sv[g.index(i, j + 1)] - sv[g.index(i, j - 1)]) / (2.0 * h);
        out.values_mut()[k] = y.c1()[k] * dx + y.c2()[k] * dy;
    }
    out
}
