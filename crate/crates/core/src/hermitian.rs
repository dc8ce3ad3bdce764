//! Dense complex Hermitian eigensolver: Householder reduction to a real
//! symmetric tridiagonal matrix followed by implicit QL iterations.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MAX_QL_ITERATIONS: usize = 60;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(f(r, c));
            }
        }
        CMatrix { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.n + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |r, c| self.get(c, r).conj())
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Largest `|A_rc - conj(A_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.n {
            for c in r..self.n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// `vectors[j]` is the unit eigenvector for `values[j]`.
    pub vectors: Vec<Vec<Complex64>>,
}

/// Full eigendecomposition of a Hermitian matrix (only the lower triangle is trusted
/// to be consistent; the input is symmetrised first).
pub fn hermitian_eigen(matrix: &CMatrix) -> Result<HermitianEigen> {
    let n = matrix.dim();
    if n == 0 {
        return Ok(HermitianEigen { values: Vec::new(), vectors: Vec::new() });
    }
    let mut a = CMatrix::from_fn(n, |r, c| 0.5 * (matrix.get(r, c) + matrix.get(c, r).conj()));
    let q = tridiagonalize(&mut a);

    // Diagonal phases making the sub-diagonal real and non-negative.
    let mut phase = vec![ONE; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for i in 0..n {
        diag[i] = a.get(i, i).re;
        if i + 1 < n {
            let e = a.get(i + 1, i);
            let m = e.norm();
            off[i] = m;
            phase[i + 1] = if m > 0.0 { phase[i] * (e / m) } else { phase[i] };
        }
    }

    // zt[j] holds column j of the tridiagonal eigenvector matrix.
    let mut zt = vec![vec![0.0; n]; n];
    for (j, row) in zt.iter_mut().enumerate() {
        row[j] = 1.0;
    }
    tql2(&mut diag, &mut off, &mut zt)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));

    // Eigenvectors: (Q D) z_j.
    let qd = CMatrix::from_fn(n, |r, c| q.get(r, c) * phase[c]);
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &j in &order {
        values.push(diag[j]);
        let z = &zt[j];
        let v: Vec<Complex64> = (0..n).map(|r| qd.row(r).iter().zip(z).map(|(a, &b)| a * b).sum()).collect();
        vectors.push(v);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Householder reduction `A <- Q^dagger A Q` to tridiagonal form; returns `Q`.
fn tridiagonalize(a: &mut CMatrix) -> CMatrix {
    let n = a.dim();
    let mut q = CMatrix::identity(n);
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let alpha = (lo..n).map(|i| a.get(i, k).norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = a.get(lo, k);
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        for i in lo..n {
            v[i] = a.get(i, k);
        }
        v[lo] += phase * alpha;
        let vnorm = (lo..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for vi in &mut v[lo..n] {
            *vi /= vnorm;
        }

        // p = A v, s = v^dagger p, q = p - s v; A <- A - 2 (v q^dagger + q v^dagger)
        for i in lo..n {
            p[i] = (lo..n).map(|j| a.get(i, j) * v[j]).sum();
        }
        let s: f64 = (lo..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in lo..n {
            p[i] -= s * v[i];
        }
        for i in lo..n {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut a.data[i * n..(i + 1) * n];
            for j in lo..n {
                row[j] -= 2.0 * (vi * p[j].conj() + pi * v[j].conj());
            }
        }
        let head = -phase * alpha;
        a.set(lo, k, head);
        a.set(k, lo, head.conj());
        for i in lo + 1..n {
            a.set(i, k, ZERO);
            a.set(k, i, ZERO);
        }

        // Q <- Q (I - 2 v v^dagger)
        for r in 0..n {
            let row = &mut q.data[r * n..(r + 1) * n];
            let w: Complex64 = (lo..n).map(|j| row[j] * v[j]).sum();
            for j in lo..n {
                row[j] -= 2.0 * w * v[j].conj();
            }
        }
    }
    q
}

/// Implicit QL on a symmetric tridiagonal matrix (`d` diagonal, `e[i]` couples
/// `i` and `i + 1`). Rotations are accumulated into `zt`, whose rows are the columns
/// of the eigenvector matrix.
fn tql2(d: &mut [f64], e: &mut [f64], zt: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    e[n - 1] = 0.0;
    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Numerical(alloc::format!("tridiagonal QL failed to converge at index {l}")));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (head, tail) = zt.split_at_mut(i + 1);
                    let (zi, zi1) = (&mut head[i], &mut tail[0]);
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
