use super::{partial, Axis, ScalarField, VectorField};

/// Trapezoidal quadrature norms of a nodal field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub h1_semi: f64,
    pub l4: f64,
    pub linf: f64,
}

/// `(a, b)` in L², trapezoidal.
pub fn inner(a: &ScalarField, b: &ScalarField) -> f64 {
    let g = a.grid();
    g.nodes()
        .map(|(i, j)| g.weight(i, j) * a.at(i, j) * b.at(i, j))
        .sum()
}

pub fn inner_vector(a: &VectorField, b: &VectorField) -> f64 {
    let g = a.grid();
    g.nodes()
        .map(|(i, j)| {
            let k = g.index(i, j);
            g.weight(i, j) * (a.c1()[k] * b.c1()[k] + a.c2()[k] * b.c2()[k])
        })
        .sum()
}

struct Sums {
    l2: f64,
    h1: f64,
    l4: f64,
    linf: f64,
}

fn accumulate(s: &ScalarField, acc: &mut Sums) {
    let g = s.grid();
    let d1 = partial(s, Axis::X1);
    let d2 = partial(s, Axis::X2);
    for (i, j) in g.nodes() {
        let w = g.weight(i, j);
        let v = s.at(i, j);
        acc.l2 += w * v * v;
        acc.h1 += w * (d1.at(i, j).powi(2) + d2.at(i, j).powi(2));
        acc.linf = acc.linf.max(v.abs());
    }
}

pub fn norms(s: &ScalarField) -> NormReport {
    let mut acc = Sums { l2: 0.0, h1: 0.0, l4: 0.0, linf: 0.0 };
    accumulate(s, &mut acc);
    let g = s.grid();
    acc.l4 = g
        .nodes()
        .map(|(i, j)| g.weight(i, j) * s.at(i, j).powi(4))
        .sum();
    NormReport {
        l2: acc.l2.sqrt(),
        h1_semi: acc.h1.sqrt(),
        l4: acc.l4.sqrt().sqrt(),
        linf: acc.linf,
    }
}

/// Vector norms use the Euclidean pointwise magnitude.
pub fn norms_vector(v: &VectorField) -> NormReport {
    let mut acc = Sums { l2: 0.0, h1: 0.0, l4: 0.0, linf: 0.0 };
    accumulate(&v.component(0), &mut acc);
    accumulate(&v.component(1), &mut acc);
    let g = v.grid();
    let mut linf: f64 = 0.0;
    let mut l4 = 0.0;
    for (i, j) in g.nodes() {
        let (a, b) = v.at(i, j);
        let m2 = a * a + b * b;
        l4 += g.weight(i, j) * m2 * m2;
        linf = linf.max(m2.sqrt());
    }
    NormReport {
        l2: acc.l2.sqrt(),
        h1_semi: acc.h1.sqrt(),
        l4: l4.sqrt().sqrt(),
        linf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn zero_and_unit_fields() {
        let g = Grid::square(17).unwrap();
        assert_eq!(norms(&ScalarField::zeros(g)), NormReport::default());
        assert_eq!(norms_vector(&VectorField::zeros(g)), NormReport::default());
        let one = norms(&ScalarField::from_fn(g, |_, _| 1.0));
        assert!((one.l2 - 1.0).abs() < 1e-14);
        assert!(one.h1_semi < 1e-12);
        assert!((one.l4 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenfunction_l2_norm() {
        let g = Grid::square(65).unwrap();
        let s = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
        let r = norms(&s);
        assert!((r.l2 - 0.5).abs() < 1e-10, "{}", r.l2);
        assert!((r.h1_semi - PI / 2.0_f64.sqrt()).abs() < 1e-2);
    }
}
