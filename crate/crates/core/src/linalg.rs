//! Small dense complex linear-algebra helpers.
//!
//! Everything here works on `nalgebra` dynamic matrices of `Complex<f64>`.
//! Dimensions are tiny (M is the BS antenna count), so clarity wins over
//! blocking or BLAS.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cvec(entries: &[C64]) -> CVec {
    CVec::from_column_slice(entries)
}

pub fn zeros(m: usize) -> CMat {
    CMat::zeros(m, m)
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix, or `None`
/// when a pivot is not strictly positive. (nalgebra's complex Cholesky takes
/// complex square roots and so accepts some indefinite matrices.)
pub fn cholesky_pd(a: &CMat) -> Option<CMat> {
    let n = a.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / djj;
        }
    }
    Some(l)
}

/// `v v^H`
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `h^H w`
pub fn inner(h: &CVec, w: &CVec) -> C64 {
    h.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// `|h^H w|^2`
pub fn gain(h: &CVec, w: &CVec) -> f64 {
    inner(h, w).norm_sqr()
}

pub fn norm_sqr(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// `Re tr(A B)`; exact for Hermitian A, B where the trace is real.
pub fn trace_prod(a: &CMat, b: &CMat) -> f64 {
    let m = a.nrows();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

/// `(A + A^H) / 2`
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

pub fn max_hermitian_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column k of the returned matrix pairs with value k.
pub fn eigh_desc(a: &CMat) -> (Vec<f64>, CMat) {
    let m = a.nrows();
    if m == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(m, m);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eig(a: &CMat) -> f64 {
    eigh_desc(a).0.last().copied().unwrap_or(0.0)
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues
/// (round-off) are clamped to zero.
pub fn sqrt_psd(a: &CMat) -> CMat {
    let (vals, vecs) = eigh_desc(a);
    let m = a.nrows();
    let mut d = CMat::zeros(m, m);
    for (k, v) in vals.iter().enumerate() {
        d[(k, k)] = c(v.max(0.0).sqrt(), 0.0);
    }
    &vecs * d * vecs.adjoint()
}

/// Real coordinates of the space of M x M Hermitian matrices.
///
/// Coordinates are ordered: the M diagonal entries, then for every pair
/// `i < j` the real and imaginary parts of entry `(i, j)`. The basis
/// matrices are `e_i e_i^T`, `e_i e_j^T + e_j e_i^T` and
/// `i (e_i e_j^T - e_j e_i^T)`, so a Hermitian `W` maps to its own entries
/// and `tr(A W) = <coeffs(A), coords(W)>` for Hermitian `A`.
#[derive(Debug, Clone)]
pub struct HermitianBasis {
    m: usize,
    pairs: Vec<(usize, usize)>,
}

impl HermitianBasis {
    pub fn new(m: usize) -> Self {
        let mut pairs = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                pairs.push((i, j));
            }
        }
        Self { m, pairs }
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m * self.m
    }

    pub fn coords(&self, w: &CMat) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for i in 0..self.m {
            x.push(w[(i, i)].re);
        }
        for &(i, j) in &self.pairs {
            x.push(w[(i, j)].re);
            x.push(w[(i, j)].im);
        }
        x
    }

    pub fn matrix(&self, x: &[f64]) -> CMat {
        let mut w = CMat::zeros(self.m, self.m);
        for i in 0..self.m {
            w[(i, i)] = c(x[i], 0.0);
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let z = c(x[self.m + 2 * k], x[self.m + 2 * k + 1]);
            w[(i, j)] = z;
            w[(j, i)] = z.conj();
        }
        w
    }

    /// `tr(A E_k)` for every basis matrix `E_k`.
    pub fn coeffs(&self, a: &CMat) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.dim());
        for i in 0..self.m {
            g.push(a[(i, i)].re);
        }
        for &(i, j) in &self.pairs {
            // Average the two triangles so slightly non-Hermitian input is
            // treated as its Hermitian part.
            let z = (a[(i, j)] + a[(j, i)].conj()).scale(0.5);
            g.push(2.0 * z.re);
            g.push(2.0 * z.im);
        }
        g
    }

    pub fn basis_matrix(&self, k: usize) -> CMat {
        let mut x = vec![0.0; self.dim()];
        x[k] = 1.0;
        self.matrix(&x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_herm() -> CMat {
        let v1 = cvec(&[c(1.0, 0.5), c(-0.3, 0.2), c(0.7, -1.1)]);
        let v2 = cvec(&[c(0.2, -0.4), c(1.5, 0.0), c(-0.6, 0.3)]);
        outer(&v1) + outer(&v2).scale(0.3)
    }

    #[test]
    fn basis_round_trip_and_trace_pairing() {
        let b = HermitianBasis::new(3);
        let w = sample_herm();
        let x = b.coords(&w);
        assert_eq!(x.len(), 9);
        assert!(frobenius(&(b.matrix(&x) - &w)) < 1e-15);

        let a = outer(&cvec(&[c(0.1, 0.9), c(2.0, -1.0), c(0.0, 0.4)]));
        let g = b.coeffs(&a);
        let lhs: f64 = g.iter().zip(&x).map(|(p, q)| p * q).sum();
        assert!((lhs - trace_prod(&a, &w)).abs() < 1e-12);
    }

    #[test]
    fn eigh_sorted_descending() {
        let w = sample_herm();
        let (vals, vecs) = eigh_desc(&w);
        assert!(vals.windows(2).all(|p| p[0] >= p[1]));
        let u = vecs.column(0).into_owned();
        let wu = &w * &u;
        let lu = u.scale(vals[0]);
        assert!((wu - lu).norm() < 1e-10);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let w = sample_herm();
        let r = sqrt_psd(&w);
        assert!(frobenius(&(&r * &r - &w)) < 1e-10);
    }

    #[test]
    fn gain_matches_quadratic_form() {
        let h = cvec(&[c(1.0, 2.0), c(-0.5, 0.1)]);
        let w = cvec(&[c(0.3, -0.2), c(1.0, 1.0)]);
        assert!((gain(&h, &w) - trace_prod(&outer(&h), &outer(&w))).abs() < 1e-12);
    }
}
