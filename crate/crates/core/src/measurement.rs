//! Born-rule calculus on a finite-dimensional space: transition matrices,
//! expectations, density operators, effects, outcome-indexed operator
//! families, predictive distributions and collapse.

use std::io::Read;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum_space::{orthonormality_defect, spectral_sum};
use crate::scalar::{cabs, hermitian_defect, max_abs_diff, projector, CMatrix, CVector, HermitianEigen, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error("states do not form an orthonormal basis (defect {defect:e})")]
    NotABasis { defect: f64 },
    #[error("bad prior: {0}")]
    BadPrior(String),
    #[error("eigenvalue gap {gap:e} below the degeneracy threshold")]
    AmbiguousDecomposition { gap: f64 },
    #[error("bad likelihood: {0}")]
    BadLikelihood(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a density operator: {0}")]
    NotADensity(String),
    #[error("not an effect: {0}")]
    NotAnEffect(String),
    #[error("no outcome {0}")]
    NoSuchOutcome(usize),
    #[error("cannot read likelihood table: {0}")]
    Parse(String),
}

/// Positive semidefinite, hermitian, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real> {
    matrix: CMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self, MeasurementError> {
        let tol = T::linear_tol();
        let bad = |s: String| Err(MeasurementError::NotADensity(s));
        if !m.is_square() {
            return bad("not square".into());
        }
        let defect = hermitian_defect(&m);
        if defect > tol {
            return bad(format!("hermitian defect {defect}"));
        }
        let trace = m.trace();
        if cabs(trace - crate::scalar::re(T::one())) > tol {
            return bad(format!("trace {}", trace.re));
        }
        let min = HermitianEigen::new(&m).values.first().copied().unwrap_or(T::zero());
        if min < -tol {
            return bad(format!("eigenvalue {min}"));
        }
        Ok(DensityOperator { matrix: m })
    }

    /// `v v†` for a unit vector.
    pub fn pure(v: &CVector<T>) -> Result<Self, MeasurementError> {
        Self::new(projector(v))
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `tr σ²`.
    pub fn purity(&self) -> T {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Hermitian with spectrum in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectOperator<T: Real> {
    matrix: CMatrix<T>,
}

impl<T: Real> EffectOperator<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self, MeasurementError> {
        let tol = T::linear_tol();
        if !m.is_square() || hermitian_defect(&m) > tol {
            return Err(MeasurementError::NotAnEffect("not hermitian".into()));
        }
        let eig = HermitianEigen::new(&m);
        let (lo, hi) = (eig.values[0], eig.values[eig.values.len() - 1]);
        if lo < -tol || hi > T::one() + tol {
            return Err(MeasurementError::NotAnEffect(format!("spectrum [{lo}, {hi}]")));
        }
        Ok(EffectOperator { matrix: m })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

/// `p[j][y]`: probability of outcome `y` when the parameter has value index `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct LikelihoodTable {
    outcomes: Vec<String>,
    p: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    outcomes: Option<Vec<String>>,
    p: Vec<Vec<f64>>,
}

impl TryFrom<RawTable> for LikelihoodTable {
    type Error = MeasurementError;

    fn try_from(raw: RawTable) -> Result<Self, MeasurementError> {
        let width = raw.p.first().map_or(0, Vec::len);
        let outcomes = raw.outcomes.unwrap_or_else(|| (0..width).map(|y| y.to_string()).collect());
        LikelihoodTable::new(outcomes, raw.p)
    }
}

impl LikelihoodTable {
    /// Rows must be nonnegative and sum to one within `1e-12`.
    pub fn new(outcomes: Vec<String>, p: Vec<Vec<f64>>) -> Result<Self, MeasurementError> {
        let bad = |s: String| Err(MeasurementError::BadLikelihood(s));
        if p.is_empty() || outcomes.is_empty() {
            return bad("empty table".into());
        }
        for (j, row) in p.iter().enumerate() {
            if row.len() != outcomes.len() {
                return bad(format!("row {j} has {} entries for {} outcomes", row.len(), outcomes.len()));
            }
            if row.iter().any(|&x| !(x >= 0.0)) {
                return bad(format!("row {j} has a negative or missing entry"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return bad(format!("row {j} sums to {total}"));
            }
        }
        Ok(LikelihoodTable { outcomes, p })
    }

    /// `p_j(y) = δ_{jy}`.
    pub fn perfect(n: usize) -> Self {
        let p = (0..n).map(|j| (0..n).map(|y| if j == y { 1.0 } else { 0.0 }).collect()).collect();
        Self::new((0..n).map(|y| y.to_string()).collect(), p).expect("identity table")
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn num_values(&self) -> usize {
        self.p.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn prob(&self, j: usize, y: usize) -> f64 {
        self.p[j][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn from_json(text: &str) -> Result<Self, MeasurementError> {
        serde_json::from_str(text).map_err(|e| MeasurementError::Parse(e.to_string()))
    }

    /// Header row of outcome labels, then one row per value index.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, MeasurementError> {
        let parse = |e: csv::Error| MeasurementError::Parse(e.to_string());
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let outcomes: Vec<String> = rdr.headers().map_err(parse)?.iter().map(str::to_string).collect();
        let mut p = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(parse)?;
            let row = record
                .iter()
                .map(|x| x.parse::<f64>().map_err(|e| MeasurementError::Parse(format!("{x:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            p.push(row);
        }
        Self::new(outcomes, p)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.outcomes).expect("in-memory write");
        for row in &self.p {
            w.write_record(row.iter().map(|x| x.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

fn check_basis<T: Real>(states: &[CVector<T>]) -> Result<usize, MeasurementError> {
    let n = states.first().map_or(0, |v| v.len());
    if states.len() != n || states.iter().any(|v| v.len() != n) {
        return Err(MeasurementError::NotABasis { defect: f64::INFINITY });
    }
    let defect = orthonormality_defect(states);
    if defect > T::linear_tol() {
        return Err(MeasurementError::NotABasis { defect: defect.as_f64() });
    }
    Ok(n)
}

/// `B[j][k] = |⟨v_j^b, v_k^a⟩|²` for two orthonormal bases.
pub fn born_transition_matrix<T: Real>(
    states_a: &[CVector<T>],
    states_b: &[CVector<T>],
) -> Result<DMatrix<T>, MeasurementError> {
    let n = check_basis(states_a)?;
    let m = check_basis(states_b)?;
    if n != m {
        return Err(MeasurementError::DimensionMismatch { expected: n, found: m });
    }
    Ok(DMatrix::from_fn(n, n, |j, k| states_b[j].dotc(&states_a[k]).norm_sqr()))
}

/// `max |row or column sum − 1|`.
pub fn stochasticity_defect<T: Real>(b: &DMatrix<T>) -> T {
    let rows = b.row_iter().map(|r| (r.sum() - T::one()).abs());
    let cols = b.column_iter().map(|c| (c.sum() - T::one()).abs());
    rows.chain(cols).fold(T::zero(), |a, x| a.max(x))
}

/// `v† T v`; the imaginary part is dropped (it vanishes for hermitian `T`).
pub fn expectation<T: Real>(v: &CVector<T>, t: &CMatrix<T>) -> T {
    v.dotc(&(t * v)).re
}

/// `σ = Σ_k π_k v_k v_k†`.
pub fn density_from_prior<T: Real>(states: &[CVector<T>], prior: &[T]) -> Result<DensityOperator<T>, MeasurementError> {
    let tol = T::linear_tol();
    if prior.len() != states.len() {
        return Err(MeasurementError::BadPrior(format!("{} weights for {} states", prior.len(), states.len())));
    }
    if let Some(p) = prior.iter().find(|p| !(**p >= T::zero())) {
        return Err(MeasurementError::BadPrior(format!("negative weight {p}")));
    }
    let total = prior.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > tol {
        return Err(MeasurementError::BadPrior(format!("weights sum to {total}")));
    }
    DensityOperator::new(spectral_sum(prior, states))
}

/// Eigen-decompose `σ` into states and probabilities, largest first.
///
/// Every pair of adjacent eigenvalues must be separated by more than the
/// representation tolerance; otherwise the states are not determined.
pub fn recover_from_density<T: Real>(sigma: &DensityOperator<T>) -> Result<(Vec<CVector<T>>, Vec<T>), MeasurementError> {
    let eig = HermitianEigen::new(sigma.matrix());
    let threshold = T::representation_tol();
    for w in eig.values.windows(2) {
        let gap = w[1] - w[0];
        if gap < threshold {
            return Err(MeasurementError::AmbiguousDecomposition { gap: gap.as_f64() });
        }
    }
    let n = eig.values.len();
    let states = (0..n).rev().map(|i| eig.vectors.column(i).into_owned()).collect();
    let probs = (0..n).rev().map(|i| eig.values[i]).collect();
    Ok((states, probs))
}

fn check_table<T: Real>(states: &[CVector<T>], table: &LikelihoodTable) -> Result<usize, MeasurementError> {
    let n = check_basis(states)?;
    if table.num_values() != n {
        return Err(MeasurementError::BadLikelihood(format!(
            "table has {} rows for {} states",
            table.num_values(),
            n
        )));
    }
    Ok(n)
}

/// `E(y) = Σ_j p_j(y) v_j v_j†`.
pub fn effect_from_likelihood<T: Real>(
    states: &[CVector<T>],
    table: &LikelihoodTable,
    y: usize,
) -> Result<EffectOperator<T>, MeasurementError> {
    check_table(states, table)?;
    if y >= table.num_outcomes() {
        return Err(MeasurementError::NoSuchOutcome(y));
    }
    effect_unchecked(states, table, y)
}

fn effect_unchecked<T: Real>(states: &[CVector<T>], table: &LikelihoodTable, y: usize) -> Result<EffectOperator<T>, MeasurementError> {
    let weights: Vec<T> = (0..states.len()).map(|j| T::lit(table.prob(j, y))).collect();
    EffectOperator::new(spectral_sum(&weights, states))
}

/// One effect per outcome.
pub fn build_povm<T: Real>(states: &[CVector<T>], table: &LikelihoodTable) -> Result<Vec<EffectOperator<T>>, MeasurementError> {
    check_table(states, table)?;
    (0..table.num_outcomes()).map(|y| effect_unchecked(states, table, y)).collect()
}

/// `max |Σ_y M(y) − I|`.
pub fn completeness_defect<T: Real>(povm: &[EffectOperator<T>]) -> T {
    let n = povm.first().map_or(0, |m| m.matrix().nrows());
    let total = povm.iter().fold(CMatrix::zeros(n, n), |acc, m| acc + m.matrix());
    max_abs_diff(&total, &CMatrix::identity(n, n))
}

/// `P(y) = tr(σ M(y))`.
pub fn predictive_distribution<T: Real>(
    sigma: &DensityOperator<T>,
    povm: &[EffectOperator<T>],
) -> Result<Vec<T>, MeasurementError> {
    povm.iter()
        .map(|m| {
            if m.matrix().nrows() != sigma.dim() {
                return Err(MeasurementError::DimensionMismatch {
                    expected: sigma.dim(),
                    found: m.matrix().nrows(),
                });
            }
            Ok((sigma.matrix() * m.matrix()).trace().re)
        })
        .collect()
}

/// Post-measurement state.
#[derive(Debug, Clone, PartialEq)]
pub enum Collapse<T: Real> {
    /// `Σ_j |⟨v, v_j⟩|² v_j v_j†`.
    Mixed(DensityOperator<T>),
    /// The selected basis state and its Born probability.
    Selected { state: CVector<T>, probability: T },
}

/// Measure the basis `states_b` on `v`, optionally conditioning on outcome `j`.
pub fn collapse<T: Real>(
    v: &CVector<T>,
    states_b: &[CVector<T>],
    selected: Option<usize>,
) -> Result<Collapse<T>, MeasurementError> {
    let n = check_basis(states_b)?;
    if v.len() != n {
        return Err(MeasurementError::DimensionMismatch { expected: n, found: v.len() });
    }
    let weights: Vec<T> = states_b.iter().map(|w| w.dotc(v).norm_sqr()).collect();
    match selected {
        None => Ok(Collapse::Mixed(DensityOperator::new(spectral_sum(&weights, states_b))?)),
        Some(j) if j < n => Ok(Collapse::Selected {
            state: states_b[j].clone(),
            probability: weights[j],
        }),
        Some(j) => Err(MeasurementError::NoSuchOutcome(j)),
    }
}

/// Nonselective measurement of a mixed state in the basis `states_b`.
pub fn dephase<T: Real>(sigma: &DensityOperator<T>, states_b: &[CVector<T>]) -> Result<DensityOperator<T>, MeasurementError> {
    let n = check_basis(states_b)?;
    if sigma.dim() != n {
        return Err(MeasurementError::DimensionMismatch { expected: n, found: sigma.dim() });
    }
    let weights: Vec<T> = states_b.iter().map(|w| expectation(w, sigma.matrix())).collect();
    DensityOperator::new(spectral_sum(&weights, states_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_space::haar_unitary;
    use crate::scalar::{ray_distance, re};
    use crate::spin::{spin_operator, spin_states, Direction};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn columns(m: &CMatrix<f64>) -> Vec<CVector<f64>> {
        (0..m.ncols()).map(|k| m.column(k).into_owned()).collect()
    }

    fn random_basis(n: usize, seed: u64) -> Vec<CVector<f64>> {
        columns(&haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed)))
    }

    fn random_table(rng: &mut ChaCha8Rng, values: usize, outcomes: usize) -> LikelihoodTable {
        let p = (0..values)
            .map(|_| {
                let raw: Vec<f64> = (0..outcomes).map(|_| rng.random::<f64>() + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                let mut row: Vec<f64> = raw.iter().map(|x| x / total).collect();
                // absorb rounding so the row sums to one
                let rest: f64 = row[1..].iter().sum();
                row[0] = 1.0 - rest;
                row
            })
            .collect();
        LikelihoodTable::new((0..outcomes).map(|y| y.to_string()).collect(), p).unwrap()
    }

    #[test]
    fn born_matrix_matches_half_angle_oracle() {
        let z = spin_states::<f64>(&Direction::z());
        let x = spin_states::<f64>(&Direction::x());
        let b = born_transition_matrix(&z, &x).unwrap();
        assert!(b.iter().all(|p| (p - 0.5).abs() < 1e-12));

        let same = born_transition_matrix(&z, &z).unwrap();
        assert!((same - DMatrix::identity(2, 2)).amax() < 1e-12);

        for deg in [0.0, 17.0, 60.0, 133.0, 180.0] {
            let a = Direction::planar("a", deg);
            let b = born_transition_matrix(&spin_states::<f64>(&Direction::z()), &spin_states(&a)).unwrap();
            let half = deg.to_radians() / 2.0;
            assert!((b[(1, 1)] - half.cos().powi(2)).abs() < 1e-12);
            assert!((b[(0, 1)] - half.sin().powi(2)).abs() < 1e-12);
            assert!(stochasticity_defect(&b) < 1e-12);
        }
    }

    #[test]
    fn incomplete_family_is_not_a_basis() {
        let z = spin_states::<f64>(&Direction::z());
        assert!(matches!(
            born_transition_matrix(&z[..1], &z),
            Err(MeasurementError::NotABasis { .. })
        ));
        let doubled = vec![z[0].clone(), z[0].clone()];
        assert!(matches!(born_transition_matrix(&doubled, &z), Err(MeasurementError::NotABasis { .. })));
    }

    #[test]
    fn expectations() {
        let [_, zup] = spin_states::<f64>(&Direction::z());
        assert!(expectation(&zup, &spin_operator(&Direction::x().v)).abs() < 1e-12);
        assert!((expectation(&zup, &spin_operator(&Direction::z().v)) - 1.0).abs() < 1e-12);
        let theta = 1.1_f64;
        let a = Direction::planar("a", theta.to_degrees());
        assert!((expectation(&zup, &spin_operator(&a.v)) - theta.cos()).abs() < 1e-12);
    }

    #[test]
    fn densities_from_priors() {
        let z = spin_states::<f64>(&Direction::z());
        let pure = density_from_prior(&z, &[1.0, 0.0]).unwrap();
        assert!(max_abs_diff(pure.matrix(), &projector(&z[0])) < 1e-15);
        let mixed = density_from_prior(&z, &[0.5, 0.5]).unwrap();
        assert!(max_abs_diff(mixed.matrix(), &(CMatrix::identity(2, 2) * re(0.5))) < 1e-12);
        // in the z basis the matrix is diag(0.7, 0.3) with +1 first
        let sigma = density_from_prior(&z, &[0.3, 0.7]).unwrap();
        assert!((sigma.matrix()[(0, 0)].re - 0.7).abs() < 1e-12);
        assert!((sigma.matrix()[(1, 1)].re - 0.3).abs() < 1e-12);
        assert!(sigma.matrix()[(0, 1)].norm() < 1e-12);

        assert!(matches!(density_from_prior(&z, &[0.5, 0.6]), Err(MeasurementError::BadPrior(_))));
        assert!(matches!(density_from_prior(&z, &[1.5, -0.5]), Err(MeasurementError::BadPrior(_))));
    }

    #[test]
    fn recovery_round_trips_and_rejects_degeneracy() {
        let z = spin_states::<f64>(&Direction::z());
        let sigma = density_from_prior(&z, &[0.3, 0.7]).unwrap();
        let (states, probs) = recover_from_density(&sigma).unwrap();
        assert!((probs[0] - 0.7).abs() < 1e-12 && (probs[1] - 0.3).abs() < 1e-12);
        assert!(ray_distance(&states[0], &z[1]) < 1e-12);
        assert!(ray_distance(&states[1], &z[0]) < 1e-12);

        let half = DensityOperator::new(CMatrix::<f64>::identity(2, 2) * re(0.5)).unwrap();
        assert!(matches!(recover_from_density(&half), Err(MeasurementError::AmbiguousDecomposition { .. })));

        let pure = DensityOperator::pure(&z[1]).unwrap();
        let (states, probs) = recover_from_density(&pure).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-12 && probs[1].abs() < 1e-12);
        assert!(ray_distance(&states[0], &z[1]) < 1e-12);
    }

    #[test]
    fn effects_and_povms() {
        let x = spin_states::<f64>(&Direction::x());
        let perfect = LikelihoodTable::perfect(2);
        let e = effect_from_likelihood(&x, &perfect, 1).unwrap();
        assert!(max_abs_diff(e.matrix(), &projector(&x[1])) < 1e-12);

        let flat = LikelihoodTable::new(vec!["a".into(), "b".into()], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let e = effect_from_likelihood(&x, &flat, 0).unwrap();
        assert!(max_abs_diff(e.matrix(), &(CMatrix::identity(2, 2) * re(0.5))) < 1e-12);

        let noisy = LikelihoodTable::new(vec!["0".into(), "1".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let e = effect_from_likelihood(&x, &noisy, 0).unwrap();
        let eig = HermitianEigen::new(e.matrix()).values;
        assert!((eig[0] - 0.2).abs() < 1e-12 && (eig[1] - 0.9).abs() < 1e-12);
        let povm = build_povm(&x, &noisy).unwrap();
        assert!(completeness_defect(&povm) < 1e-12);

        let single = LikelihoodTable::new(vec!["only".into()], vec![vec![1.0], vec![1.0]]).unwrap();
        let povm = build_povm(&x, &single).unwrap();
        assert!(max_abs_diff(povm[0].matrix(), &CMatrix::identity(2, 2)) < 1e-12);

        assert!(matches!(effect_from_likelihood(&x, &noisy, 2), Err(MeasurementError::NoSuchOutcome(2))));
        assert!(matches!(
            LikelihoodTable::new(vec!["0".into()], vec![vec![0.9]]),
            Err(MeasurementError::BadLikelihood(_))
        ));
    }

    #[test]
    fn predictive_examples() {
        let z = spin_states::<f64>(&Direction::z());
        let x = spin_states::<f64>(&Direction::x());
        let zup = DensityOperator::pure(&z[1]).unwrap();
        let p = predictive_distribution(&zup, &build_povm(&z, &LikelihoodTable::perfect(2)).unwrap()).unwrap();
        assert!((p[0] - 0.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);

        let noisy = LikelihoodTable::new(vec!["0".into(), "1".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let p = predictive_distribution(&zup, &build_povm(&x, &noisy).unwrap()).unwrap();
        assert!((p[0] - 0.55).abs() < 1e-12 && (p[1] - 0.45).abs() < 1e-12);

        let big = DensityOperator::new(CMatrix::<f64>::identity(3, 3) * re(1.0 / 3.0)).unwrap();
        assert!(matches!(
            predictive_distribution(&big, &build_povm(&x, &noisy).unwrap()),
            Err(MeasurementError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn collapse_examples() {
        let z = spin_states::<f64>(&Direction::z());
        let x = spin_states::<f64>(&Direction::x());
        match collapse(&z[1], &z, None).unwrap() {
            Collapse::Mixed(s) => assert!(max_abs_diff(s.matrix(), &projector(&z[1])) < 1e-12),
            other => panic!("{other:?}"),
        }
        match collapse(&z[1], &x, None).unwrap() {
            Collapse::Mixed(s) => assert!(max_abs_diff(s.matrix(), &(CMatrix::identity(2, 2) * re(0.5))) < 1e-12),
            other => panic!("{other:?}"),
        }
        match collapse(&z[1], &x, Some(1)).unwrap() {
            Collapse::Selected { state, probability } => {
                assert!(ray_distance(&state, &x[1]) < 1e-12);
                assert!((probability - 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn likelihood_io_round_trip() {
        let t = LikelihoodTable::from_json(r#"{"outcomes": ["lo", "hi"], "p": [[0.9, 0.1], [0.2, 0.8]]}"#).unwrap();
        assert_eq!(t.outcomes(), &["lo", "hi"]);
        let back = LikelihoodTable::from_csv(t.to_csv().as_bytes()).unwrap();
        assert_eq!(back, t);
        assert!(LikelihoodTable::from_json(r#"{"p": [[0.9, 0.2]]}"#).is_err());
        let plain = LikelihoodTable::from_json(r#"{"p": [[1.0, 0.0]]}"#).unwrap();
        assert_eq!(plain.outcomes(), &["0", "1"]);
    }

    proptest! {
        #[test]
        fn povm_completeness_and_normalised_predictions(seed in 0u64..10_000, n in 2usize..6, outcomes in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = random_table(&mut rng, n, outcomes);
            let states = random_basis(n, seed + 1);
            let povm = build_povm(&states, &table).unwrap();
            prop_assert!(completeness_defect(&povm) < 1e-10);
            let sigma = density_from_prior(&states, &vec![1.0 / n as f64; n]).unwrap();
            let p = predictive_distribution(&sigma, &povm).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|&x| x > -1e-12));
        }

        #[test]
        fn born_matrices_are_doubly_stochastic(seed in 0u64..10_000, n in 1usize..7) {
            let b = born_transition_matrix(&random_basis(n, seed), &random_basis(n, seed + 99)).unwrap();
            prop_assert!(stochasticity_defect(&b) < 1e-10);
        }

        #[test]
        fn expectation_is_real_and_bounded(seed in 0u64..10_000) {
            let states = random_basis(4, seed);
            let t = spectral_sum(&[-1.0, 0.5, 2.0, 3.0], &states);
            let v = random_basis(4, seed + 7).remove(0);
            let z = v.dotc(&(&t * &v));
            prop_assert!(z.im.abs() < 1e-12);
            prop_assert!(z.re >= -1.0 - 1e-10 && z.re <= 3.0 + 1e-10);
        }

        #[test]
        fn nonselective_collapse_is_idempotent(seed in 0u64..10_000) {
            let a = random_basis(3, seed);
            let b = random_basis(3, seed + 5);
            let Collapse::Mixed(once) = collapse(&a[0], &b, None).unwrap() else { unreachable!() };
            prop_assert!((once.matrix().trace().re - 1.0).abs() < 1e-10);
            let twice = dephase(&once, &b).unwrap();
            prop_assert!(max_abs_diff(once.matrix(), twice.matrix()) < 1e-10);
        }

        #[test]
        fn perfect_measurement_reproduces_born_column(seed in 0u64..10_000, k in 0usize..3) {
            let a = random_basis(3, seed);
            let b = random_basis(3, seed + 3);
            let born = born_transition_matrix(&a, &b).unwrap();
            let sigma = DensityOperator::pure(&a[k]).unwrap();
            let p = predictive_distribution(&sigma, &build_povm(&b, &LikelihoodTable::perfect(3)).unwrap()).unwrap();
            for j in 0..3 {
                prop_assert!((p[j] - born[(j, k)]).abs() < 1e-12);
            }
        }

        #[test]
        fn recovery_residual(seed in 0u64..10_000) {
            let states = random_basis(3, seed);
            let sigma = density_from_prior(&states, &[0.5, 0.3, 0.2]).unwrap();
            let (s, p) = recover_from_density(&sigma).unwrap();
            prop_assert!(max_abs_diff(&spectral_sum(&p, &s), sigma.matrix()) < 1e-10);
        }
    }
}
