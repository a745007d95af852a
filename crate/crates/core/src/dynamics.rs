//! Unitary time evolution generated by a hermitian Hamiltonian, operators
//! in the Heisenberg picture, and the translation generator on a periodic
//! lattice.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{cis, hermitian_defect, re, CMatrix, CVector, HermitianEigen, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("hamiltonian is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("hbar must be positive, got {0}")]
    BadHbar(f64),
    #[error("bad lattice: {0}")]
    BadLattice(String),
}

/// A hermitian generator with its spectral decomposition cached.
#[derive(Debug, Clone)]
pub struct Hamiltonian<T: Real> {
    matrix: CMatrix<T>,
    hbar: T,
    eigen: HermitianEigen<T>,
}

impl<T: Real> Hamiltonian<T> {
    /// `ħ = 1`.
    pub fn new(matrix: CMatrix<T>) -> Result<Self, DynamicsError> {
        Self::with_hbar(matrix, T::one())
    }

    pub fn with_hbar(matrix: CMatrix<T>, hbar: T) -> Result<Self, DynamicsError> {
        if !(hbar > T::zero()) {
            return Err(DynamicsError::BadHbar(hbar.as_f64()));
        }
        if !matrix.is_square() {
            return Err(DynamicsError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let defect = hermitian_defect(&matrix);
        if defect > T::linear_tol() * T::lit(1e-2) {
            return Err(DynamicsError::NotHermitian { defect: defect.as_f64() });
        }
        let eigen = HermitianEigen::new(&matrix);
        Ok(Hamiltonian { matrix, hbar, eigen })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn spectrum(&self) -> &[T] {
        &self.eigen.values
    }

    /// `exp(−iHt/ħ)`.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        let s = -t / self.hbar;
        self.eigen.apply(|lam| cis(lam * s))
    }

    fn check(&self, n: usize) -> Result<(), DynamicsError> {
        if n == self.dim() {
            Ok(())
        } else {
            Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                found: n,
            })
        }
    }
}

/// `v_t = exp(−iHt/ħ) v_0`.
pub fn evolve_state<T: Real>(v0: &CVector<T>, h: &Hamiltonian<T>, t: T) -> Result<CVector<T>, DynamicsError> {
    h.check(v0.len())?;
    Ok(h.propagator(t) * v0)
}

/// `T(t) = exp(−iHt/ħ) T exp(iHt/ħ)`.
pub fn heisenberg_operator<T: Real>(op: &CMatrix<T>, h: &Hamiltonian<T>, t: T) -> Result<CMatrix<T>, DynamicsError> {
    if !op.is_square() {
        return Err(DynamicsError::DimensionMismatch {
            expected: op.nrows(),
            found: op.ncols(),
        });
    }
    h.check(op.nrows())?;
    let u = h.propagator(t);
    Ok(&u * op * u.adjoint())
}

/// `|iħ (v(t+dt) − v(t−dt)) / 2dt − H v(t)|`, the centred-difference
/// residual of the Schrödinger equation (`O(dt²)`).
pub fn schrodinger_residual<T: Real>(v0: &CVector<T>, h: &Hamiltonian<T>, t: T, dt: T) -> Result<T, DynamicsError> {
    let ahead = evolve_state(v0, h, t + dt)?;
    let behind = evolve_state(v0, h, t - dt)?;
    let now = evolve_state(v0, h, t)?;
    let i_hbar = Complex::new(T::zero(), h.hbar());
    let lhs = (ahead - behind) * (i_hbar / re(dt + dt));
    Ok((lhs - h.matrix() * now).norm())
}

/// One row of an evolution trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub amplitudes: Vec<(f64, f64)>,
    pub norm: f64,
}

pub fn evolution_trace<T: Real>(v0: &CVector<T>, h: &Hamiltonian<T>, times: &[T]) -> Result<Vec<TracePoint>, DynamicsError> {
    times
        .iter()
        .map(|&t| {
            let v = evolve_state(v0, h, t)?;
            Ok(TracePoint {
                t: t.as_f64(),
                amplitudes: v.iter().map(|z| (z.re.as_f64(), z.im.as_f64())).collect(),
                norm: v.norm().as_f64(),
            })
        })
        .collect()
}

/// Columns `t, re0, im0, re1, im1, …, norm`.
pub fn trace_to_csv(trace: &[TracePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let n = trace.first().map_or(0, |p| p.amplitudes.len());
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        header.push(format!("re{i}"));
        header.push(format!("im{i}"));
    }
    header.push("norm".into());
    w.write_record(&header).expect("in-memory write");
    for p in trace {
        let mut row = vec![p.t.to_string()];
        for (a, b) in &p.amplitudes {
            row.push(a.to_string());
            row.push(b.to_string());
        }
        row.push(p.norm.to_string());
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// `n` equally spaced sites on a circle of circumference `n · spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lattice {
    n: usize,
    spacing: f64,
}

impl Lattice {
    pub fn new(n: usize, spacing: f64) -> Result<Self, DynamicsError> {
        if n < 2 {
            return Err(DynamicsError::BadLattice(format!("{n} sites")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(DynamicsError::BadLattice(format!("spacing {spacing}")));
        }
        Ok(Lattice { n, spacing })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    /// `ξ_j = j · spacing`.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing).collect()
    }

    /// Signed mode number of DFT index `m`; the Nyquist mode maps to 0.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if 2 * m < n {
            m
        } else if 2 * m == n {
            0
        } else {
            m - n
        }
    }

    /// `e^{2πi k ξ / L}` sampled on the sites.
    pub fn fourier_mode<T: Real>(&self, k: i64) -> CVector<T> {
        let l = self.period();
        CVector::from_iterator(
            self.n,
            self.coordinates().into_iter().map(|x| cis(T::lit(2.0 * PI * k as f64 * x / l))),
        )
    }
}

/// Derivative, one-site shift and momentum on a periodic lattice.
#[derive(Debug, Clone)]
pub struct TranslationGenerator<T: Real> {
    /// Spectral differentiation `F† diag(i k_m) F`.
    pub d: CMatrix<T>,
    /// `(shift q)_j = q_{j+1}`.
    pub shift: CMatrix<T>,
    /// `P = (ħ/i) D`.
    pub momentum: CMatrix<T>,
    pub hbar: T,
}

pub fn translation_generator<T: Real>(lattice: &Lattice, hbar: T) -> Result<TranslationGenerator<T>, DynamicsError> {
    let n = lattice.sites();
    if n < 4 {
        return Err(DynamicsError::BadLattice(format!("{n} sites; need at least 4")));
    }
    if !(hbar > T::zero()) {
        return Err(DynamicsError::BadHbar(hbar.as_f64()));
    }
    let scale = T::one() / T::lit(n as f64).sqrt();
    let f = CMatrix::from_fn(n, n, |m, j| {
        cis(T::lit(-2.0 * PI * ((m * j) % n) as f64 / n as f64)) * re(scale)
    });
    let k = CVector::from_iterator(
        n,
        (0..n).map(|m| Complex::new(T::zero(), T::lit(2.0 * PI * lattice.mode(m) as f64 / lattice.period()))),
    );
    let d = f.adjoint() * CMatrix::from_diagonal(&k) * &f;
    let mut shift = CMatrix::zeros(n, n);
    for j in 0..n {
        shift[(j, (j + 1) % n)] = re(T::one());
    }
    let momentum = &d * Complex::new(T::zero(), -hbar);
    Ok(TranslationGenerator { d, shift, momentum, hbar })
}

impl<T: Real> TranslationGenerator<T> {
    /// `exp(bD) = exp(i b P / ħ)`.
    pub fn translation_by(&self, b: T) -> CMatrix<T> {
        let p = (&self.momentum + self.momentum.adjoint()) * re(T::lit(0.5));
        HermitianEigen::new(&p).apply(|lam| cis(lam * b / self.hbar))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{max_abs_diff, max_abs_diff_vec, ray_distance};
    use crate::spin::{pauli, spin_states, Direction};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_hermitian(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let a = CMatrix::from_fn(n, n, |_, _| Complex::new(g(), g()));
        (&a + a.adjoint()) * re(0.5)
    }

    fn random_state(n: usize, seed: u64) -> CVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let v = CVector::from_fn(n, |_, _| Complex::new(g(), g()));
        let norm = v.norm();
        v / re(norm)
    }

    #[test]
    fn stationary_and_trivial_evolution() {
        let h = Hamiltonian::new(CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.5), re(-0.5)]))).unwrap();
        let v0 = CVector::from_vec(vec![re(1.0), re(0.0)]);
        assert_eq!(evolve_state(&v0, &h, 0.0).unwrap(), v0);
        let t = 0.8;
        let v = evolve_state(&v0, &h, t).unwrap();
        assert!((v[0] - cis(-1.5 * t)).norm() < 1e-14);
        assert!(v[1].norm() < 1e-14);
        assert!(ray_distance(&v, &v0) < 1e-14);
    }

    #[test]
    fn precession_about_z() {
        let [sx, sy, sz] = pauli::<f64>();
        let h = Hamiltonian::new(sz).unwrap();
        let [x_down, x_up] = spin_states::<f64>(&Direction::x());
        // exp(−iσ_z t) turns the Bloch vector by 2t about z.
        let quarter = evolve_state(&x_up, &h, PI / 2.0).unwrap();
        assert!(ray_distance(&quarter, &x_down) < 1e-12);
        let half = evolve_state(&x_up, &h, PI).unwrap();
        assert!(ray_distance(&half, &x_up) < 1e-12);
        let slow = Hamiltonian::new(pauli::<f64>()[2].clone() * re(0.5)).unwrap();
        assert!(ray_distance(&evolve_state(&x_up, &slow, PI).unwrap(), &x_down) < 1e-12);

        for t in [0.0, 0.3, 1.9] {
            let rotated = heisenberg_operator(&sx, &h, t).unwrap();
            let expect = &sx * re((2.0 * t).cos()) + &sy * re((2.0 * t).sin());
            assert!(max_abs_diff(&rotated, &expect) < 1e-12);
        }
        // commuting operator is constant
        let still = heisenberg_operator(h.matrix(), &h, 2.3).unwrap();
        assert!(max_abs_diff(&still, h.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(0.0), re(0.0)]);
        assert!(matches!(Hamiltonian::new(m), Err(DynamicsError::NotHermitian { .. })));
        let h = Hamiltonian::new(CMatrix::<f64>::identity(2, 2)).unwrap();
        assert!(matches!(
            evolve_state(&CVector::zeros(3), &h, 1.0),
            Err(DynamicsError::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(
            Hamiltonian::with_hbar(CMatrix::<f64>::identity(2, 2), 0.0),
            Err(DynamicsError::BadHbar(_))
        ));
        assert!(Lattice::new(1, 1.0).is_err());
        assert!(translation_generator::<f64>(&Lattice::new(3, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn schrodinger_difference_residual_is_second_order() {
        let h = Hamiltonian::new(random_hermitian(4, 1)).unwrap();
        let v0 = random_state(4, 2);
        let r1 = schrodinger_residual(&v0, &h, 0.7, 1e-2).unwrap();
        let r2 = schrodinger_residual(&v0, &h, 0.7, 5e-3).unwrap();
        assert!(r1 < 1e-2);
        // halving dt divides the residual by about four
        assert!(r2 < r1 / 3.0);
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let h = Hamiltonian::new(pauli::<f64>()[2].clone()).unwrap();
        let v0 = CVector::from_vec(vec![re(1.0), re(0.0)]);
        let trace = evolution_trace(&v0, &h, &[0.0, 0.5]).unwrap();
        let csv = trace_to_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,re0,im0,re1,im1,norm"));
        assert_eq!(lines.count(), 2);
        assert!(trace.iter().all(|p| (p.norm - 1.0).abs() < 1e-12));
    }

    #[test]
    fn lattice_translation_matches_shift() {
        let lattice = Lattice::new(64, 0.25).unwrap();
        let gen = translation_generator::<f64>(&lattice, 1.0).unwrap();
        assert!(crate::scalar::hermitian_defect(&gen.momentum) < 1e-12);
        let step = gen.translation_by(lattice.spacing());
        for k in [-31, -5, 0, 1, 7, 31] {
            let q = lattice.fourier_mode::<f64>(k);
            assert!(max_abs_diff_vec(&(&step * &q), &(&gen.shift * &q)) < 1e-8, "mode {k}");
        }
        let constant = CVector::from_element(64, re(1.0));
        assert!(max_abs_diff_vec(&(&step * &constant), &constant) < 1e-12);
        assert!(max_abs_diff_vec(&(&gen.shift * &constant), &constant) == 0.0);
        let full = gen.translation_by(lattice.period());
        assert!(max_abs_diff(&full, &CMatrix::identity(64, 64)) < 1e-8);
    }

    proptest! {
        #[test]
        fn unitary_evolution_properties(seed in 0u64..10_000, n in 1usize..9, s in -10.0..10.0f64, t in -10.0..10.0f64) {
            let h = Hamiltonian::new(random_hermitian(n, seed)).unwrap();
            let v0 = random_state(n, seed ^ 0xabc);
            let vt = evolve_state(&v0, &h, t).unwrap();
            prop_assert!((vt.norm() - 1.0).abs() < 1e-10);
            let two_step = evolve_state(&evolve_state(&v0, &h, s).unwrap(), &h, t).unwrap();
            let one_step = evolve_state(&v0, &h, s + t).unwrap();
            prop_assert!(max_abs_diff_vec(&two_step, &one_step) < 1e-9);
        }

        #[test]
        fn eigenvalues_are_tracked(seed in 0u64..10_000, n in 1usize..9, t in -5.0..5.0f64, k in 0usize..8) {
            let h = Hamiltonian::new(random_hermitian(n, seed)).unwrap();
            let op = random_hermitian(n, seed + 1);
            let eig = HermitianEigen::new(&op);
            let k = k % n;
            let v0 = eig.vectors.column(k).into_owned();
            let lam = eig.values[k];
            let vt = evolve_state(&v0, &h, t).unwrap();
            let moved = heisenberg_operator(&op, &h, t).unwrap();
            prop_assert!(max_abs_diff_vec(&(&moved * &vt), &(&vt * re(lam))) < 1e-9);
            let after = HermitianEigen::new(&moved).values;
            for (x, y) in eig.values.iter().zip(&after) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
