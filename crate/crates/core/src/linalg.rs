//! Dense complex matrices for small Hilbert spaces.
//!
//! Dimensions here are single digits, so everything is a plain row-major
//! `Vec<Complex64>`. Hermitian eigendecomposition uses cyclic complex Jacobi
//! rotations.

use std::ops::Mul;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CVector = Vec<Complex64>;

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Largest entry of `|G - 1|` where `G` is the Gram matrix of `vectors`.
pub fn gram_deviation(vectors: &[CVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((inner(a, b) - target).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "matrix must be square and non-empty".into(),
            ));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Matrix whose columns are `columns`.
    pub fn from_columns(columns: &[CVector]) -> Result<Self> {
        let n = columns.len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument(
                "matrix must be square and non-empty".into(),
            ));
        }
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<CVector> {
        self.data.chunks_exact(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> CVector {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> CVector {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |U†U - 1|`.
    pub fn unitarity_deviation(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.n))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues and eigenvectors (as columns of a unitary) of a Hermitian
    /// matrix, `A = V diag(λ) V†`.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMatrix)> {
        let scale = self.frobenius().max(f64::MIN_POSITIVE);
        if self.hermiticity_deviation() > 1e-10 * scale {
            return Err(Error::InvalidArgument("matrix is not Hermitian".into()));
        }
        let n = self.n;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            if a.off_diagonal_norm() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r == 0.0 {
                        continue;
                    }
                    let phase = apq / r;
                    let theta = 0.5 * (2.0 * r).atan2(a[(q, q)].re - a[(p, p)].re);
                    let (s, c) = theta.sin_cos();
                    let pc = phase.conj();
                    // columns: A <- A J, V <- V J
                    for m in [&mut a, &mut v] {
                        for k in 0..n {
                            let (xp, xq) = (m[(k, p)], m[(k, q)]);
                            m[(k, p)] = xp * c - xq * pc * s;
                            m[(k, q)] = xp * s + xq * pc * c;
                        }
                    }
                    // rows: A <- J† A
                    for k in 0..n {
                        let (xp, xq) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = xp * c - xq * phase * s;
                        a[(q, k)] = xp * s + xq * phase * c;
                    }
                }
            }
        }
        if a.off_diagonal_norm() > 1e-12 * scale {
            return Err(Error::Domain("Jacobi iteration did not converge".into()));
        }
        Ok(((0..n).map(|i| a[(i, i)].re).collect(), v))
    }

    /// `exp(-i H t)` for Hermitian `H`.
    pub fn unitary_from_hamiltonian(h: &CMatrix, t: f64) -> Result<CMatrix> {
        let (values, vectors) = h.hermitian_eigen()?;
        let phases: Vec<Complex64> = values
            .iter()
            .map(|e| Complex64::from_polar(1.0, -e * t))
            .collect();
        let u = &(&vectors * &Self::diagonal(&phases)) * &vectors.adjoint();
        let dev = u.unitarity_deviation();
        if dev > 1e-10 {
            return Err(Error::Domain(format!(
                "exponentiated Hamiltonian is not unitary (deviation {dev:.3e})"
            )));
        }
        Ok(u)
    }

    /// Haar-like random unitary: Gram–Schmidt on a complex Gaussian matrix.
    pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let mut columns: Vec<CVector> = Vec::with_capacity(n);
        while columns.len() < n {
            let mut v: CVector = (0..n)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            for c in &columns {
                let proj = inner(c, &v);
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= proj * y;
                }
            }
            let norm = norm_sqr(&v).sqrt();
            if norm < 1e-8 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            columns.push(v);
        }
        Self::from_columns(&columns).expect("square by construction")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}
