use super::CsrMatrix;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a square banded matrix.
///
/// Storage is column-major band form with room for the `kl` extra upper
/// diagonals created by row interchanges, as in LAPACK's `gbtrf`.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factors `a`; a pivot with magnitude `<= pivot_tol * max|a|` is singular.
    pub fn factor(a: &CsrMatrix, pivot_tol: f64) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "banded LU needs a square matrix");
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ld * n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                ab[c * ld + kl + ku + r - c] += v;
            }
        }
        let threshold = pivot_tol * a.max_abs();
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ld,
            ab,
            piv: vec![0; n],
        };
        lu.eliminate(threshold)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    fn eliminate(&mut self, threshold: f64) -> Result<()> {
        let (n, kl, ku, ld) = (self.n, self.kl, self.ku, self.ld);
        let diag = kl + ku;
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            let cend = (j + kl + ku).min(n - 1);
            let col = j * ld;
            let mut p = j;
            let mut best = self.ab[col + diag].abs();
            for i in j + 1..=imax {
                let v = self.ab[col + diag + i - j].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[j] = p;
            if !(best > threshold) {
                return Err(Error::SingularSystem { row: j, pivot: best });
            }
            if p != j {
                for c in j..=cend {
                    let a = self.at(j, c);
                    let b = self.at(p, c);
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[col + diag];
            for i in j + 1..=imax {
                self.ab[col + diag + i - j] /= pivot;
            }
            let m = imax - j;
            if m == 0 {
                continue;
            }
            // rank-one update of the trailing block, one column at a time
            let (head, tail) = self.ab.split_at_mut((j + 1) * ld);
            let lcol = &head[col + diag + 1..col + diag + 1 + m];
            for c in j + 1..=cend {
                let base = (c - j - 1) * ld;
                let rj = base + diag + j - c;
                let t = tail[rj];
                if t == 0.0 {
                    continue;
                }
                let dst = &mut tail[rj + 1..rj + 1 + m];
                for (d, l) in dst.iter_mut().zip(lcol) {
                    *d -= l * t;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku, ld) = (self.n, self.kl, self.ku, self.ld);
        let diag = kl + ku;
        assert_eq!(x.len(), n);
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj != 0.0 {
                let imax = (j + kl).min(n - 1);
                for i in j + 1..=imax {
                    x[i] -= self.ab[j * ld + diag + i - j] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[j * ld + diag];
            let xj = x[j];
            if xj != 0.0 {
                let i0 = j.saturating_sub(kl + ku);
                for i in i0..j {
                    x[i] -= self.ab[j * ld + diag + i - j] * xj;
                }
            }
        }
    }

    /// Solves `Aᵀ x = b` with the same factorization.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku, ld) = (self.n, self.kl, self.ku, self.ld);
        let diag = kl + ku;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for j in 0..n {
            let i0 = j.saturating_sub(kl + ku);
            let mut s = x[j];
            for i in i0..j {
                s -= self.ab[j * ld + diag + i - j] * x[i];
            }
            x[j] = s / self.ab[j * ld + diag];
        }
        for j in (0..n).rev() {
            let imax = (j + kl).min(n - 1);
            let mut s = x[j];
            for i in j + 1..=imax {
                s -= self.ab[j * ld + diag + i - j] * x[i];
            }
            x[j] = s;
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Triplets::new(n, n);
        for r in 0..n {
            let c0 = r.saturating_sub(kl);
            let c1 = (r + ku).min(n - 1);
            for c in c0..=c1 {
                // weak diagonal forces row interchanges
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push(r, c, if c == r { 0.1 * v } else { v });
            }
        }
        t.build()
    }

    #[test]
    fn solves_pivoting_system() {
        let a = random_banded(60, 4, 3, 7);
        let x: Vec<f64> = (0..60).map(|k| (k as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let lu = BandedLu::factor(&a, 1e-14).unwrap();
        let got = lu.solve(&b);
        let err = got.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn transpose_solve() {
        let a = random_banded(50, 2, 5, 11);
        let x: Vec<f64> = (0..50).map(|k| 1.0 + k as f64 * 0.01).collect();
        let b = a.matvec_t(&x);
        let lu = BandedLu::factor(&a, 1e-14).unwrap();
        let got = lu.solve_transpose(&b);
        let err = got.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn singular_detected() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 0, 1.0);
        t.push(2, 2, 1.0);
        let err = BandedLu::factor(&t.build(), 1e-14).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { row: 1, .. }));
    }
}
