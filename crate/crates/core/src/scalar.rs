//! Scalar abstraction shared by the linear-algebra modules.
//!
//! Everything that touches amplitudes or operators is generic over a real
//! floating type `T: Real` (implemented for `f32` and `f64`); complex entries
//! are `Complex<T>`. Exact checks use integers or [`Exact`] rationals instead.

use std::fmt;

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_rational::Rational64;
use num_traits::{FromPrimitive, ToPrimitive};

/// Exact rational scalar used for measures and exact decision-theoretic checks.
pub type Exact = Rational64;

/// Dense complex matrix over `T`.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over `T`.
pub type CVector<T> = DVector<Complex<T>>;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::Debug + Send + Sync
{
    /// Default tolerance for pure linear algebra (1e-10 in double precision).
    fn linear_tol() -> Self;

    /// Default tolerance for constructed representations (1e-8 in double precision).
    fn representation_tol() -> Self;

    /// Lossy conversion from `f64`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite real")
    }
}

impl Real for f64 {
    fn linear_tol() -> Self {
        1e-10
    }

    fn representation_tol() -> Self {
        1e-8
    }
}

impl Real for f32 {
    fn linear_tol() -> Self {
        1e-4
    }

    fn representation_tol() -> Self {
        1e-3
    }
}

/// Complex number from a real part.
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Modulus of a complex number.
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// `e^{i theta}`.
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Convert an exact rational into `T`.
pub fn from_exact<T: Real>(q: Exact) -> T {
    T::lit(*q.numer() as f64 / *q.denom() as f64)
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Largest entry modulus of `a - b`; `+inf` on shape mismatch.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    if a.shape() != b.shape() {
        return T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    }
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

/// Largest entry modulus of `v - w`; `+inf` on length mismatch.
pub fn max_abs_diff_vec<T: Real>(v: &CVector<T>, w: &CVector<T>) -> T {
    if v.len() != w.len() {
        return T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    }
    v.iter()
        .zip(w.iter())
        .fold(T::zero(), |acc, (x, y)| acc.max(cabs(*x - *y)))
}

/// `max |A - A†|`.
pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    if !m.is_square() {
        return T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    }
    max_abs_diff(m, &m.adjoint())
}

/// `max |U†U - I|`.
pub fn unitarity_defect<T: Real>(m: &CMatrix<T>) -> T {
    if !m.is_square() {
        return T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    }
    let n = m.nrows();
    max_abs_diff(&(m.adjoint() * m), &CMatrix::identity(n, n))
}

/// Rank-one projector `v v†`.
pub fn projector<T: Real>(v: &CVector<T>) -> CMatrix<T> {
    v * v.adjoint()
}

/// Phase-insensitive distance between two vectors: `max |v v† - w w†|`.
pub fn ray_distance<T: Real>(v: &CVector<T>, w: &CVector<T>) -> T {
    max_abs_diff(&projector(v), &projector(w))
}

/// Distance between two operators after removing the best global phase.
///
/// The phase is fixed by `tr(B† A)`; when that trace vanishes the operators
/// are compared as given.
pub fn phase_aligned_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    if a.shape() != b.shape() {
        return T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    }
    let overlap = (b.adjoint() * a).trace();
    let scale = cabs(overlap);
    let phase = if scale > T::default_epsilon() {
        overlap / re(scale)
    } else {
        re(T::one())
    };
    max_abs_diff(a, &(b * phase))
}

/// Spectral decomposition of a hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMatrix<T>) -> Self {
        let eig = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_columns(
            &order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect::<Vec<_>>(),
        );
        HermitianEigen { values, vectors }
    }

    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn apply<F>(&self, f: F) -> CMatrix<T>
    where
        F: Fn(T) -> Complex<T>,
    {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(i s A)` for hermitian `A`, by eigendecomposition.
pub fn expi_hermitian<T: Real>(a: &CMatrix<T>, s: T) -> CMatrix<T> {
    HermitianEigen::new(a).apply(|lam| {
        cis(lam * s)
    })
}

/// Column vector from a slice of amplitudes.
pub fn cvec<T: Real>(xs: &[Complex<T>]) -> CVector<T> {
    CVector::from_column_slice(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[re(2.0), Complex::new(0.0, 1.0), Complex::new(0.0, -1.0), re(2.0)],
        );
        let eig = HermitianEigen::new(&m);
        assert!((eig.values[0] - 1.0_f64).abs() < 1e-12);
        assert!((eig.values[1] - 3.0_f64).abs() < 1e-12);
        assert!(max_abs_diff(&eig.apply(re), &m) < 1e-12);
    }

    #[test]
    fn expi_of_pauli_is_rotation() {
        let t = 0.3_f64;
        let u = expi_hermitian(&pauli_x(), t);
        let expect = CMatrix::from_row_slice(
            2,
            2,
            &[
                re(t.cos()),
                Complex::new(0.0, t.sin()),
                Complex::new(0.0, t.sin()),
                re(t.cos()),
            ],
        );
        assert!(max_abs_diff(&u, &expect) < 1e-12);
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn phase_alignment_removes_global_phase() {
        let a = pauli_x();
        let b = &a * cis(0.7);
        assert!(phase_aligned_distance(&a, &b) < 1e-12);
        assert!(max_abs_diff(&a, &b) > 0.1);
    }

    #[test]
    fn single_precision_works() {
        let m: CMatrix<f32> = CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.5), re(0.5), re(1.0)]);
        let eig = HermitianEigen::new(&m);
        assert!((eig.values[0] - 0.5).abs() < f32::linear_tol());
    }
}
