//! Dense complex matrices sized for few-qubit systems.
//!
//! Everything downstream (states, channels, entropies) is built on this one
//! row-major type. Dimensions stay small (at most a few hundred), so the
//! arithmetic is deliberately naive. The Hermitian eigendecomposition is a
//! cyclic Jacobi sweep: slower than a Householder reduction but backward
//! stable on the exactly-degenerate block matrices the snapshots produce.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance for entrywise comparisons.
pub const EQ_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice; `data.len()` must equal `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {}x{}={} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Convenience for small literal matrices: entries as `(re, im)` rows.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nr, nc, |r, c| {
            let (re, im) = rows[r][c];
            Complex64::new(re, im)
        })
    }

    pub const fn rows(&self) -> usize {
        self.rows
    }

    pub const fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must match");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product, with `self` as the most significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entrywise equality within an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.max_abs_diff(other) <= tol
    }

    /// Entrywise equality within the default tolerance [`EQ_TOL`].
    pub fn approx_eq_default(&self, other: &Self) -> bool {
        self.approx_eq(other, EQ_TOL)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.dagger(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.dagger().matmul(self).approx_eq(&Self::identity(self.rows), tol)
    }

    /// True if `self = c * other` for some unimodular scalar `c`.
    pub fn eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return false;
        }
        // Phase from the largest entry of `other`.
        let Some((idx, _)) = other
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        else {
            return true;
        };
        if other.data[idx].norm() <= tol {
            return self.data.iter().all(|z| z.norm() <= tol);
        }
        let phase = self.data[idx] / other.data[idx];
        if (phase.norm() - 1.0).abs() > tol {
            return false;
        }
        self.approx_eq(&other.scale(phase), tol)
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order together with the matching
    /// orthonormal eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return (Vec::new(), ComplexMatrix::zeros(0, 0));
        }
        // Symmetrize first so accumulated round-off in the caller cannot leak
        // a non-Hermitian perturbation into the solver.
        let mut a = self.add(&self.dagger()).scale(Complex64::new(0.5, 0.0));
        let mut v = ComplexMatrix::identity(n);
        let scale = a.data.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let target = 1e-14 * scale;

        for _sweep in 0..100 {
            let mut off_max = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off_max = off_max.max(a[(p, q)].norm());
                }
            }
            if off_max <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let g = a[(p, q)];
                    let gn = g.norm();
                    if gn <= target * 1e-2 {
                        continue;
                    }
                    // Unitary 2x2 rotation annihilating a[p][q]:
                    // tan(2θ) = 2|g| / (a_qq − a_pp), phase from g itself.
                    let phase = g / gn;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * gn);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let sp = phase * s; //  s·e^{iφ}
                    let spc = phase.conj() * s; //  s·e^{−iφ}

                    // Columns p and q of A (right-multiply by J).
                    for k in 0..n {
                        let tp = a[(k, p)];
                        let tq = a[(k, q)];
                        a[(k, p)] = tp * c - tq * spc;
                        a[(k, q)] = tp * sp + tq * c;
                    }
                    // Rows p and q of A (left-multiply by J†).
                    for k in 0..n {
                        let tp = a[(p, k)];
                        let tq = a[(q, k)];
                        a[(p, k)] = tp * c - tq * sp;
                        a[(q, k)] = tp * spc + tq * c;
                    }
                    // The rotation zeroes the pivot and keeps the diagonal
                    // real; enforce both exactly.
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                    // Accumulate eigenvectors: V ← V·J.
                    for k in 0..n {
                        let tp = v[(k, p)];
                        let tq = v[(k, q)];
                        v[(k, p)] = tp * c - tq * spc;
                        v[(k, q)] = tp * sp + tq * c;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        (values, vectors)
    }

    /// Eigenvalues only (Hermitian input), ascending.
    pub fn eigvalsh(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matmul_and_dagger() {
        let a = ComplexMatrix::from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 1.0), (0.0, 0.0)]]);
        let b = a.dagger();
        assert_eq!(b[(0, 1)], c(0.0, -1.0));
        assert_eq!(b[(1, 0)], c(1.0, 0.0));
        let prod = a.matmul(&b);
        assert!(prod.is_hermitian(1e-12));
        assert!((prod.trace() - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kron_block_structure() {
        let x = ComplexMatrix::from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let id = ComplexMatrix::identity(2);
        let xi = x.kron(&id);
        assert_eq!(xi.rows(), 4);
        assert_eq!(xi[(0, 2)], c(1.0, 0.0));
        assert_eq!(xi[(1, 3)], c(1.0, 0.0));
        assert_eq!(xi[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn eigh_recovers_spectrum() {
        // diag(0.5, 0.25, 0.25, 0) conjugated by a random-ish unitary built
        // from Givens rotations keeps its spectrum.
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, v) in [0.5, 0.25, 0.25, 0.0].into_iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        let h = ComplexMatrix::from_rows(&[
            &[(0.5f64.sqrt(), 0.0), (0.5f64.sqrt(), 0.0)],
            &[(0.5f64.sqrt(), 0.0), (-(0.5f64.sqrt()), 0.0)],
        ]);
        let u = h.kron(&h);
        let rotated = u.matmul(&m).matmul(&u.dagger());
        let vals = rotated.eigvalsh();
        let expect = [0.0, 0.25, 0.25, 0.5];
        for (got, want) in vals.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Eigenvectors diagonalize.
        let (vals, vecs) = rotated.eigh();
        let recon = vecs
            .matmul(&ComplexMatrix::from_fn(4, 4, |r, cc| {
                if r == cc { c(vals[r], 0.0) } else { c(0.0, 0.0) }
            }))
            .matmul(&vecs.dagger());
        assert!(recon.approx_eq(&rotated, 1e-10));
    }

    #[test]
    fn phase_insensitive_equality() {
        let a = ComplexMatrix::from_rows(&[&[(0.0, 1.0), (0.0, 0.0)], &[(0.0, 0.0), (0.0, 1.0)]]);
        let id = ComplexMatrix::identity(2);
        assert!(a.eq_up_to_phase(&id, 1e-12));
        assert!(!a.eq_up_to_phase(
            &ComplexMatrix::from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]]),
            1e-12
        ));
    }
}
