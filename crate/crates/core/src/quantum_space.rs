//! Hilbert-space layer: `L²(Φ, ρ)` and its parametric subspaces, the right
//! regular representation, isotypic projection, the coupled representation
//! assembled from several foci, and the dictionary between answered
//! questions and unit vectors.

use std::collections::{BTreeSet, VecDeque};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::focusing::FocusedParameter;
use crate::group::{FiniteGroup, GroupAction, Measure, Subgroup};
use crate::scalar::{
    cabs, from_exact, hermitian_defect, max_abs, max_abs_diff, max_abs_diff_vec, phase_aligned_distance, projector,
    ray_distance, re, unitarity_defect, CMatrix, CVector, HermitianEigen, Real,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("parameter {label}: level set {level} contains a point of zero measure")]
    DegenerateMeasure { label: String, level: usize },
    #[error("measure is not invariant under the action")]
    NonInvariantMeasure,
    #[error("frame is not unitary (defect {defect:e})")]
    NonUnitaryW { defect: f64 },
    #[error("bad character table: {0}")]
    BadCharacterTable(String),
    #[error("factor subgroups reach only {reached} of {order} elements")]
    NotGenerating { reached: usize, order: usize },
    #[error("inconsistent coupling: {0}")]
    BadCoupling(String),
    #[error("no catalogued state matches")]
    NoMatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("unitary family: {0}")]
    BadFamily(String),
}

/// Which basis the coordinates of a vector refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisTag {
    /// Point basis of `Φ`, inner product weighted by `ρ`.
    Points,
    /// An abstract orthonormal basis.
    Abstract,
}

/// Complex amplitudes with the inner product `Σ ρ(i) conj(f_i) g_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector<T: Real> {
    coords: CVector<T>,
    basis: BasisTag,
    /// `None` means unit weights.
    weights: Option<Vec<T>>,
}

impl<T: Real> AmplitudeVector<T> {
    pub fn orthonormal(coords: CVector<T>) -> Self {
        AmplitudeVector {
            coords,
            basis: BasisTag::Abstract,
            weights: None,
        }
    }

    pub fn on_points(coords: CVector<T>, weights: Vec<T>) -> Result<Self, SpaceError> {
        if coords.len() != weights.len() {
            return Err(SpaceError::DimensionMismatch {
                expected: weights.len(),
                found: coords.len(),
            });
        }
        Ok(AmplitudeVector {
            coords,
            basis: BasisTag::Points,
            weights: Some(weights),
        })
    }

    pub fn coords(&self) -> &CVector<T> {
        &self.coords
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn weights(&self) -> Option<&[T]> {
        self.weights.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`. Panics on dimension
    /// mismatch.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product of vectors of different length");
        self.coords
            .iter()
            .zip(other.coords.iter())
            .enumerate()
            .map(|(i, (f, g))| {
                let w = self.weights.as_ref().map_or(T::one(), |w| w[i]);
                f.conj() * g * re(w)
            })
            .fold(re(T::zero()), |a, b| a + b)
    }

    pub fn norm(&self) -> T {
        self.inner(self).re.max(T::zero()).sqrt()
    }

    /// Coordinates in an orthonormal frame: `√ρ · f`.
    pub fn to_orthonormal(&self) -> CVector<T> {
        match &self.weights {
            None => self.coords.clone(),
            Some(w) => CVector::from_iterator(
                self.dim(),
                self.coords.iter().zip(w).map(|(z, &wi)| z * re(wi.sqrt())),
            ),
        }
    }
}

/// A matrix together with a hermiticity check.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Real> {
    matrix: CMatrix<T>,
}

impl<T: Real> HermitianOperator<T> {
    /// Accepts `m` if `max|m − m†| ≤ tol`; the stored matrix is symmetrised.
    pub fn new(m: CMatrix<T>, tol: T) -> Result<Self, SpaceError> {
        let defect = hermitian_defect(&m);
        if !(defect <= tol) {
            return Err(SpaceError::NotHermitian { defect: defect.as_f64() });
        }
        let matrix = (&m + m.adjoint()) * re(T::lit(0.5));
        Ok(HermitianOperator { matrix })
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigen(&self) -> HermitianEigen<T> {
        HermitianEigen::new(&self.matrix)
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }
}

/// `Σ_k w_k v_k v_k†`.
pub fn spectral_sum<T: Real>(weights: &[T], states: &[CVector<T>]) -> CMatrix<T> {
    assert_eq!(weights.len(), states.len(), "one weight per state");
    let n = states.first().map_or(0, |v| v.len());
    states
        .iter()
        .zip(weights)
        .fold(CMatrix::zeros(n, n), |acc, (v, &w)| acc + projector(v) * re(w))
}

/// `max |⟨v_i, v_j⟩ − δ_ij|`.
pub fn orthonormality_defect<T: Real>(states: &[CVector<T>]) -> T {
    let mut worst = T::zero();
    for (i, v) in states.iter().enumerate() {
        for (j, w) in states.iter().enumerate() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max(cabs(v.dotc(w) - re(target)));
        }
    }
    worst
}

/// The subspace `L^a` of functions factoring through `λ^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricSpace<T: Real> {
    label: String,
    values: Vec<f64>,
    level_sets: Vec<Vec<usize>>,
    map: Vec<usize>,
    weights: Vec<T>,
    basis: Vec<AmplitudeVector<T>>,
}

/// Normalised level-set indicators `f_k = 1_{L_k} / √ρ(L_k)`.
pub fn build_parametric_space<T: Real>(
    param: &FocusedParameter,
    measure: &Measure,
) -> Result<ParametricSpace<T>, SpaceError> {
    if measure.weights().len() != param.points() {
        return Err(SpaceError::DimensionMismatch {
            expected: param.points(),
            found: measure.weights().len(),
        });
    }
    let weights: Vec<T> = measure.weights().iter().map(|&w| from_exact(w)).collect();
    let mut basis = Vec::with_capacity(param.num_values());
    for (level, set) in param.level_sets().iter().enumerate() {
        if set.iter().any(|&p| measure.weights()[p] <= num_traits::Zero::zero()) {
            return Err(SpaceError::DegenerateMeasure {
                label: param.label().to_string(),
                level,
            });
        }
        let amplitude = T::one() / from_exact::<T>(measure.mass(set)).sqrt();
        let mut coords = CVector::zeros(param.points());
        for &p in set {
            coords[p] = re(amplitude);
        }
        basis.push(AmplitudeVector::on_points(coords, weights.clone())?);
    }
    Ok(ParametricSpace {
        label: param.label().to_string(),
        values: param.values().to_vec(),
        level_sets: param.level_sets().to_vec(),
        map: param.map().to_vec(),
        weights,
        basis,
    })
}

impl<T: Real> ParametricSpace<T> {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of values, the dimension of `L^a`.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `|Φ|`, the dimension of `L²(Φ, ρ)`.
    pub fn ambient_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn level_sets(&self) -> &[Vec<usize>] {
        &self.level_sets
    }

    pub fn indicator(&self, k: usize) -> &AmplitudeVector<T> {
        &self.basis[k]
    }

    pub fn indicators(&self) -> &[AmplitudeVector<T>] {
        &self.basis
    }

    /// The indicators in orthonormal point coordinates.
    pub fn orthonormal_basis(&self) -> Vec<CVector<T>> {
        self.basis.iter().map(AmplitudeVector::to_orthonormal).collect()
    }

    /// `S^a`: multiplication by `λ^a(φ)`, in orthonormal point coordinates.
    pub fn multiplication_operator(&self) -> CMatrix<T> {
        let diag = CVector::from_iterator(self.ambient_dim(), self.map.iter().map(|&k| re(T::lit(self.values[k]))));
        CMatrix::from_diagonal(&diag)
    }

    /// `S^a` restricted to `L^a` in the indicator basis: `diag(λ_k)`.
    pub fn restricted_operator(&self) -> CMatrix<T> {
        let diag = CVector::from_iterator(self.dim(), self.values.iter().map(|&v| re(T::lit(v))));
        CMatrix::from_diagonal(&diag)
    }

    /// `f ∈ L^a`: constant on every level set within `tol`.
    pub fn contains(&self, f: &AmplitudeVector<T>, tol: T) -> bool {
        f.dim() == self.ambient_dim()
            && self.level_sets.iter().all(|set| {
                let first = f.coords()[set[0]];
                set.iter().all(|&p| cabs(f.coords()[p] - first) <= tol)
            })
    }
}

/// One matrix per group element.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryFamily<T: Real> {
    group: FiniteGroup,
    matrices: Vec<CMatrix<T>>,
}

impl<T: Real> UnitaryFamily<T> {
    /// Requires one square matrix per element, all of one size.
    pub fn new(group: FiniteGroup, matrices: Vec<CMatrix<T>>) -> Result<Self, SpaceError> {
        if matrices.len() != group.order() {
            return Err(SpaceError::BadFamily(format!(
                "{} matrices for a group of order {}",
                matrices.len(),
                group.order()
            )));
        }
        let n = matrices[0].nrows();
        if let Some(g) = matrices.iter().position(|m| m.shape() != (n, n)) {
            return Err(SpaceError::BadFamily(format!("matrix {g} is not {n}x{n}")));
        }
        Ok(UnitaryFamily { group, matrices })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrix(&self, g: usize) -> &CMatrix<T> {
        &self.matrices[g]
    }

    pub fn matrices(&self) -> &[CMatrix<T>] {
        &self.matrices
    }

    pub fn character(&self, g: usize) -> Complex<T> {
        self.matrices[g].trace()
    }

    pub fn unitarity_defect(&self) -> T {
        self.matrices.iter().fold(T::zero(), |acc, m| acc.max(unitarity_defect(m)))
    }

    /// `max |V(g)V(h) − V(gh)|` over all pairs.
    pub fn homomorphism_defect(&self) -> T {
        self.pairwise_defect(max_abs_diff)
    }

    /// As [`Self::homomorphism_defect`], with each comparison taken modulo a
    /// global phase.
    pub fn projective_defect(&self) -> T {
        self.pairwise_defect(phase_aligned_distance)
    }

    fn pairwise_defect(&self, dist: fn(&CMatrix<T>, &CMatrix<T>) -> T) -> T {
        let mut worst = T::zero();
        for g in self.group.elements() {
            for h in self.group.elements() {
                let prod = &self.matrices[g] * &self.matrices[h];
                worst = worst.max(dist(&prod, &self.matrices[self.group.mul(g, h)]));
            }
        }
        worst
    }

    /// `max_g |(I − P) V(g) P|` for the span of orthonormal `basis`.
    pub fn leakage(&self, basis: &[CVector<T>]) -> T {
        let n = self.dim();
        let p = basis.iter().fold(CMatrix::zeros(n, n), |acc, v| acc + projector(v));
        let complement = CMatrix::identity(n, n) - &p;
        self.matrices
            .iter()
            .fold(T::zero(), |acc, m| acc.max(max_abs(&(&complement * m * &p))))
    }
}

/// `U(g) f (φ) = f(φg)` as permutation matrices in orthonormal coordinates.
pub fn regular_representation<T: Real>(action: &GroupAction, measure: &Measure) -> Result<UnitaryFamily<T>, SpaceError> {
    if measure.weights().len() != action.points() {
        return Err(SpaceError::DimensionMismatch {
            expected: action.points(),
            found: measure.weights().len(),
        });
    }
    if !measure.is_invariant(action) {
        return Err(SpaceError::NonInvariantMeasure);
    }
    let n = action.points();
    let one = re(T::one());
    let matrices = action
        .group()
        .elements()
        .map(|g| {
            let mut m = CMatrix::zeros(n, n);
            for p in 0..n {
                m[(p, action.act(p, g))] = one;
            }
            m
        })
        .collect();
    UnitaryFamily::new(action.group().clone(), matrices)
}

/// Largest deviation `|U(g) f^a_{alignment[j]} − f^b_j|` over `j`.
///
/// Returns `+inf` on dimension mismatch or a malformed alignment.
pub fn transport_check<T: Real>(
    a: &ParametricSpace<T>,
    b: &ParametricSpace<T>,
    family: &UnitaryFamily<T>,
    g: usize,
    alignment: &[usize],
) -> T {
    let inf = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    if a.ambient_dim() != family.dim() || b.ambient_dim() != family.dim() || alignment.len() != b.dim() {
        return inf;
    }
    let fa = a.orthonormal_basis();
    let fb = b.orthonormal_basis();
    let u = family.matrix(g);
    let mut worst = T::zero();
    for (j, &k) in alignment.iter().enumerate() {
        match fa.get(k) {
            Some(f) => worst = worst.max(max_abs_diff_vec(&(u * f), &fb[j])),
            None => return inf,
        }
    }
    worst
}

/// Irreducible characters as class functions.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTable<T: Real> {
    names: Vec<String>,
    /// Class id of each group element.
    class_of: Vec<usize>,
    /// `values[i][c]`: character `i` on class `c`.
    values: Vec<Vec<Complex<T>>>,
}

impl<T: Real> CharacterTable<T> {
    /// Unchecked; see [`Self::validate`].
    pub fn new(names: Vec<String>, class_of: Vec<usize>, values: Vec<Vec<Complex<T>>>) -> Self {
        CharacterTable {
            names,
            class_of,
            values,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn character(&self, i: usize, g: usize) -> Complex<T> {
        self.values[i][self.class_of[g]]
    }

    /// `χ_i(e)`, assuming element 0 is the identity.
    pub fn degree(&self, i: usize, group: &FiniteGroup) -> T {
        self.character(i, group.identity()).re
    }

    /// Class ids constant on conjugacy classes, as many characters as
    /// classes, orthonormal under `(1/|G|) Σ_g χ_i(g) conj(χ_j(g))`, and
    /// positive integer degrees.
    pub fn validate(&self, group: &FiniteGroup, tol: T) -> Result<(), SpaceError> {
        let bad = |s: String| Err(SpaceError::BadCharacterTable(s));
        if self.class_of.len() != group.order() {
            return bad(format!("{} class labels for {} elements", self.class_of.len(), group.order()));
        }
        let classes = group.conjugacy_classes();
        for class in &classes {
            let ids: BTreeSet<usize> = class.iter().map(|&g| self.class_of[g]).collect();
            if ids.len() != 1 {
                return bad(format!("conjugacy class of {} spans several labels", class[0]));
            }
        }
        if self.values.len() != classes.len() || self.names.len() != self.values.len() {
            return bad(format!("{} characters for {} classes", self.values.len(), classes.len()));
        }
        let width = self.class_of.iter().max().map_or(0, |m| m + 1);
        if self.values.iter().any(|row| row.len() < width) {
            return bad("a character row is too short".into());
        }
        let n = T::lit(group.order() as f64);
        for i in 0..self.len() {
            for j in 0..self.len() {
                let ip = group
                    .elements()
                    .map(|g| self.character(i, g) * self.character(j, g).conj())
                    .fold(re(T::zero()), |a, b| a + b)
                    / re(n);
                let target = if i == j { T::one() } else { T::zero() };
                if cabs(ip - re(target)) > tol {
                    return bad(format!("characters {} and {} are not orthonormal", self.names[i], self.names[j]));
                }
            }
            let d = self.character(i, group.identity());
            if d.im.abs() > tol || d.re < T::one() - tol || (d.re - d.re.round()).abs() > tol {
                return bad(format!("character {} has non-integer degree", self.names[i]));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsotypicComponent<T: Real> {
    pub name: String,
    pub degree: usize,
    /// Multiplicity of the irreducible in the representation.
    pub multiplicity: usize,
    /// `degree · multiplicity`, the rank of the projector.
    pub dimension: usize,
    pub projector: CMatrix<T>,
}

/// `P_χ = (χ(e)/|G|) Σ_g conj(χ(g)) U(g)` for every irreducible character.
pub fn isotypic_projectors<T: Real>(
    family: &UnitaryFamily<T>,
    table: &CharacterTable<T>,
) -> Result<Vec<IsotypicComponent<T>>, SpaceError> {
    let group = family.group();
    table.validate(group, T::representation_tol())?;
    let n = family.dim();
    let order = T::lit(group.order() as f64);
    let to_count = |x: T| x.round().to_usize().unwrap_or(0);
    let mut out = Vec::with_capacity(table.len());
    for i in 0..table.len() {
        let degree = table.degree(i, group);
        let mut p = CMatrix::zeros(n, n);
        let mut inner = re(T::zero());
        for g in group.elements() {
            let chi = table.character(i, g).conj();
            p += family.matrix(g) * chi;
            inner += family.character(g) * chi;
        }
        p *= re(degree / order);
        let multiplicity = inner / re(order);
        out.push(IsotypicComponent {
            name: table.names()[i].clone(),
            degree: to_count(degree),
            multiplicity: to_count(multiplicity.re),
            dimension: to_count(p.trace().re),
            projector: p,
        });
    }
    Ok(out)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<T> {
    let mut sample = || T::lit(rng.sample::<f64, _>(StandardNormal));
    let z = CMatrix::from_fn(n, n, |_, _| Complex::new(sample(), sample()));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let m = cabs(d);
        if m > T::zero() {
            let phase = d / re(m);
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// A focus of the coupled construction: its maximal permissible subgroup
/// and a transition element from the reference focus.
#[derive(Debug, Clone, PartialEq)]
pub struct Focus {
    pub label: String,
    pub subgroup: Subgroup,
    /// `g` with `G^this = g G^ref g⁻¹`; the identity for the reference focus.
    pub transition: usize,
}

/// A factor `h ∈ G^focus` in a product decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub element: usize,
    pub focus: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    /// Random factorizations per element.
    pub samples: usize,
    pub seed: u64,
    /// Maximum length of the random prefix in a sampled factorization.
    pub max_prefix: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples: 32,
            seed: 0,
            max_prefix: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRepresentation<T: Real> {
    /// `V(g)` evaluated on the canonical (shortest, breadth-first) word.
    pub family: UnitaryFamily<T>,
    pub words: Vec<Vec<Factor>>,
    /// Largest phase-aligned distance between `V(g)` on a sampled
    /// factorization and on the canonical word.
    pub discrepancy: T,
    /// `max |V(g)V(h) − V(gh)|` modulo phase.
    pub homomorphism_defect: T,
    /// `max_g |(I − P) V(g) P|` for `P` the projector onto `W0 · L`.
    pub leakage: T,
    pub factorizations_checked: usize,
}

impl<T: Real> CoupledRepresentation<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.discrepancy <= tol && self.leakage <= tol
    }
}

/// Assemble `V` on products of elements drawn from the foci's subgroups.
///
/// A factor `h` from the reference focus (index 0) contributes `U(h)`. A
/// factor `h` from focus `b` with transition `g` contributes
/// `V0(g) U(g⁻¹ h g) V0(g)⁻¹`, where `V0(x) = W0 U(x) W0†`. With `W0 = I`
/// this reduces to `U(h)` up to the phase ambiguity of `U`.
///
/// `subspace` is an orthonormal basis of `L` in the coordinates of `base`.
pub fn build_coupled_representation<T: Real>(
    base: &UnitaryFamily<T>,
    foci: &[Focus],
    w0: &CMatrix<T>,
    subspace: &[CVector<T>],
    config: &SamplingConfig,
) -> Result<CoupledRepresentation<T>, SpaceError> {
    let group = base.group();
    let n = base.dim();
    if w0.shape() != (n, n) {
        return Err(SpaceError::DimensionMismatch {
            expected: n,
            found: w0.nrows(),
        });
    }
    let defect = unitarity_defect(w0);
    if defect > T::representation_tol() {
        return Err(SpaceError::NonUnitaryW { defect: defect.as_f64() });
    }
    if let Some(v) = subspace.iter().find(|v| v.len() != n) {
        return Err(SpaceError::DimensionMismatch { expected: n, found: v.len() });
    }
    let reference = foci
        .first()
        .ok_or_else(|| SpaceError::BadCoupling("no foci given".into()))?;
    if reference.transition != group.identity() {
        return Err(SpaceError::BadCoupling("reference focus must use the identity transition".into()));
    }
    for focus in foci {
        let g = focus.transition;
        if let Some(&h) = focus
            .subgroup
            .elements()
            .iter()
            .find(|&&h| !reference.subgroup.contains(group.conjugate(group.inv(g), h)))
        {
            return Err(SpaceError::BadCoupling(format!(
                "element {h} of {} is not conjugate into the reference subgroup",
                focus.label
            )));
        }
    }

    let v0 = |x: usize| w0 * base.matrix(x) * w0.adjoint();
    let conj_frames: Vec<(CMatrix<T>, CMatrix<T>)> = foci
        .iter()
        .map(|f| {
            let m = v0(f.transition);
            let inv = m.adjoint();
            (m, inv)
        })
        .collect();
    let factor_matrix = |f: Factor| -> CMatrix<T> {
        if f.focus == 0 {
            return base.matrix(f.element).clone();
        }
        let g = foci[f.focus].transition;
        let inner = group.conjugate(group.inv(g), f.element);
        let (m, inv) = &conj_frames[f.focus];
        m * base.matrix(inner) * inv
    };
    let evaluate = |word: &[Factor]| {
        word.iter()
            .fold(CMatrix::identity(n, n), |acc: CMatrix<T>, &f| acc * factor_matrix(f))
    };

    let generators: Vec<Factor> = foci
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            f.subgroup
                .elements()
                .iter()
                .filter(|&&h| h != group.identity())
                .map(move |&h| Factor { element: h, focus: i })
        })
        .collect();
    let mut words: Vec<Option<Vec<Factor>>> = vec![None; group.order()];
    words[group.identity()] = Some(Vec::new());
    let mut queue = VecDeque::from([group.identity()]);
    while let Some(x) = queue.pop_front() {
        for &s in &generators {
            let y = group.mul(x, s.element);
            if words[y].is_none() {
                let mut w = words[x].clone().expect("visited");
                w.push(s);
                words[y] = Some(w);
                queue.push_back(y);
            }
        }
    }
    let reached = words.iter().filter(|w| w.is_some()).count();
    if reached < group.order() {
        return Err(SpaceError::NotGenerating {
            reached,
            order: group.order(),
        });
    }
    let words: Vec<Vec<Factor>> = words.into_iter().map(|w| w.expect("reached")).collect();
    let canonical: Vec<CMatrix<T>> = words.iter().map(|w| evaluate(w)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut discrepancy = T::zero();
    let mut checked = 0;
    if !generators.is_empty() {
        for g in group.elements() {
            for _ in 0..config.samples {
                let len = rng.random_range(1..=config.max_prefix.max(1));
                let prefix: Vec<Factor> = (0..len).map(|_| generators[rng.random_range(0..generators.len())]).collect();
                let p = group.product(&prefix.iter().map(|f| f.element).collect::<Vec<_>>());
                let rest = group.mul(group.inv(p), g);
                let mut word = prefix;
                word.extend_from_slice(&words[rest]);
                discrepancy = discrepancy.max(phase_aligned_distance(&evaluate(&word), &canonical[g]));
                checked += 1;
            }
        }
    }

    let family = UnitaryFamily::new(group.clone(), canonical)?;
    let image: Vec<CVector<T>> = subspace.iter().map(|v| w0 * v).collect();
    Ok(CoupledRepresentation {
        homomorphism_defect: family.projective_defect(),
        leakage: family.leakage(&image),
        family,
        words,
        discrepancy,
        factorizations_checked: checked,
    })
}

/// How the frame `W` of a [`QuantumSpace`] is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// `W` is `d × d` and acts on indicator coordinates.
    Coordinates,
    /// `W` is `|Φ| × |Φ|` and acts on orthonormal point coordinates.
    Ambient,
}

/// States `v_k = W f_k` and the operator `T = W S W†`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumSpace<T: Real> {
    pub label: String,
    pub values: Vec<f64>,
    pub states: Vec<CVector<T>>,
    /// `W S W†`; on `H = span(states)` it agrees with `Σ λ_k v_k v_k†`.
    pub operator: CMatrix<T>,
    pub frame: Frame,
    w: CMatrix<T>,
    level_sets: Vec<Vec<usize>>,
}

/// Push a parametric space through a unitary frame `W`.
///
/// A `|Φ| × |Φ|` frame acts on the ambient space; a `d × d` frame acts on
/// indicator coordinates. When the two sizes coincide the ambient reading
/// is used.
pub fn build_quantum_space<T: Real>(space: &ParametricSpace<T>, w: &CMatrix<T>) -> Result<QuantumSpace<T>, SpaceError> {
    let defect = unitarity_defect(w);
    if !(defect <= T::representation_tol()) {
        return Err(SpaceError::NonUnitaryW { defect: defect.as_f64() });
    }
    let (frame, states, s) = if w.nrows() == space.ambient_dim() {
        let states = space.orthonormal_basis().iter().map(|f| w * f).collect();
        (Frame::Ambient, states, space.multiplication_operator())
    } else if w.nrows() == space.dim() {
        let states = (0..space.dim()).map(|k| w.column(k).into_owned()).collect();
        (Frame::Coordinates, states, space.restricted_operator())
    } else {
        return Err(SpaceError::DimensionMismatch {
            expected: space.ambient_dim(),
            found: w.nrows(),
        });
    };
    Ok(QuantumSpace {
        label: space.label().to_string(),
        values: space.values().to_vec(),
        states,
        operator: w * s * w.adjoint(),
        frame,
        w: w.clone(),
        level_sets: space.level_sets().to_vec(),
    })
}

impl<T: Real> QuantumSpace<T> {
    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn frame_matrix(&self) -> &CMatrix<T> {
        &self.w
    }

    /// `max_k |T v_k − λ_k v_k|`.
    pub fn eigen_residual(&self) -> T {
        self.states
            .iter()
            .zip(&self.values)
            .fold(T::zero(), |acc, (v, &lam)| {
                acc.max(max_abs_diff_vec(&(&self.operator * v), &(v * re(T::lit(lam)))))
            })
    }

    /// Points of `Φ` carrying the pullback `W† v`, i.e. the union of the
    /// level sets on which it is supported.
    pub fn pullback_level_set(&self, v: &CVector<T>, tol: T) -> Vec<usize> {
        let u = self.w.adjoint() * v;
        let support = (0..u.len()).filter(|&i| cabs(u[i]) > tol);
        let mut out: Vec<usize> = match self.frame {
            Frame::Ambient => support.collect(),
            Frame::Coordinates => support.flat_map(|k| self.level_sets[k].iter().copied()).collect(),
        };
        out.sort_unstable();
        out
    }

    /// `Σ_k h(λ_k) v_k v_k†`.
    pub fn operator_for(&self, h: impl Fn(f64) -> f64) -> HermitianOperator<T> {
        let mu: Vec<T> = self.values.iter().map(|&l| T::lit(h(l))).collect();
        operator_for_subparameter(&mu, &self.states)
    }

    pub fn catalog_entries(&self, tol: T) -> Vec<CatalogEntry<T>> {
        self.states
            .iter()
            .enumerate()
            .map(|(k, v)| CatalogEntry {
                focus: self.label.clone(),
                index: k,
                value: self.values[k],
                state: v.clone(),
                level_set: Some(self.pullback_level_set(v, tol)),
            })
            .collect()
    }
}

/// `Σ_k μ_k v_k v_k†` for orthonormal states.
pub fn operator_for_subparameter<T: Real>(mu: &[T], states: &[CVector<T>]) -> HermitianOperator<T> {
    HermitianOperator {
        matrix: spectral_sum(mu, states),
    }
}

/// One answered question `(a, k)` and its state.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry<T: Real> {
    pub focus: String,
    pub index: usize,
    pub value: f64,
    pub state: CVector<T>,
    /// Pulled-back level set in `Φ`, when the state comes from one.
    pub level_set: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interpretation {
    /// `(focus, value index, value)` of every matching entry.
    pub matches: Vec<(String, usize, f64)>,
    /// All matches with known level sets share the same level set.
    pub consistent: bool,
}

/// All catalog entries whose projector equals `v v†` within `tol`.
pub fn interpret_state<T: Real>(v: &CVector<T>, catalog: &[CatalogEntry<T>], tol: T) -> Result<Interpretation, SpaceError> {
    let norm = v.norm();
    if norm == T::zero() {
        return Err(SpaceError::NoMatch);
    }
    let unit = v / re(norm);
    let hits: Vec<&CatalogEntry<T>> = catalog
        .iter()
        .filter(|e| e.state.len() == unit.len() && ray_distance(&unit, &e.state) <= tol)
        .collect();
    if hits.is_empty() {
        return Err(SpaceError::NoMatch);
    }
    let sets: BTreeSet<&Vec<usize>> = hits.iter().filter_map(|e| e.level_set.as_ref()).collect();
    Ok(Interpretation {
        matches: hits.iter().map(|e| (e.focus.clone(), e.index, e.value)).collect(),
        consistent: sets.len() <= 1,
    })
}
