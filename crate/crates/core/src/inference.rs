//! Finite statistical models with a group acting on parameters and
//! observations: invariant priors, exact posteriors, equivariant
//! estimators, risk, and the Pitman estimator with a brute-force check of
//! its optimality among equivariant estimators.
//!
//! Probabilities are generic over [`Probability`]: [`Exact`] rationals for
//! exact checks, or `f64`.

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::Num;
use serde::Serialize;
use thiserror::Error;

use crate::group::{GroupAction, Measure};
use crate::scalar::Exact;

/// Scalar for probabilities and losses.
pub trait Probability: Num + Clone + PartialOrd + Debug + Display {
    fn from_exact(q: Exact) -> Self;
    fn to_f64(&self) -> f64;
    /// `|a − b| ≤ tol` (exact equality for rationals).
    fn approx_eq(&self, other: &Self) -> bool;
}

impl Probability for Exact {
    fn from_exact(q: Exact) -> Self {
        q
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
}

impl Probability for f64 {
    fn from_exact(q: Exact) -> Self {
        *q.numer() as f64 / *q.denom() as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn approx_eq(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-12
    }
}

/// Nearest small-denominator rational to `x`.
pub fn exact_from_f64(x: f64) -> Option<Exact> {
    Rational64::approximate_float(x)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("likelihood has {found} rows/columns, expected {expected}")]
    Shape { expected: usize, found: usize },
    #[error("likelihood row {theta} is not a probability distribution")]
    NotNormalized { theta: usize },
    #[error("parameter and observation actions use different groups")]
    GroupMismatch,
    #[error("p(y|θg) ≠ p(yg⁻¹|θ) at θ={theta}, g={g}, y={y}")]
    Incompatible { theta: usize, g: usize, y: usize },
    #[error("observation {0} has zero evidence under the prior")]
    ZeroEvidence(usize),
    #[error("loss is not invariant: L(θg, θ'g) ≠ L(θ, θ') at θ={theta}, θ'={estimate}, g={g}")]
    NonInvariantLoss { theta: usize, estimate: usize, g: usize },
    #[error("group is not transitive on the parameter space")]
    NonTransitive,
    #[error("group action on observations is not free and transitive")]
    NotFreeTransitive,
    #[error("prior has {found} weights for {expected} parameter values")]
    BadPrior { expected: usize, found: usize },
    #[error("estimator is defined on {found} observations, expected {expected}")]
    BadEstimator { expected: usize, found: usize },
}

/// `p(y | θ)` with compatible actions on `Θ` and `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel<P: Probability> {
    likelihood: Vec<Vec<P>>,
    theta_action: GroupAction,
    y_action: GroupAction,
}

impl<P: Probability> FiniteModel<P> {
    /// Validates shape, normalization and compatibility
    /// `p(y|θg) = p(yg⁻¹|θ)`, which by additivity is the event form.
    pub fn new(likelihood: Vec<Vec<P>>, theta_action: GroupAction, y_action: GroupAction) -> Result<Self, InferenceError> {
        let (nt, ny) = (theta_action.points(), y_action.points());
        if theta_action.group() != y_action.group() {
            return Err(InferenceError::GroupMismatch);
        }
        if likelihood.len() != nt {
            return Err(InferenceError::Shape { expected: nt, found: likelihood.len() });
        }
        for (theta, row) in likelihood.iter().enumerate() {
            if row.len() != ny {
                return Err(InferenceError::Shape { expected: ny, found: row.len() });
            }
            let total = row.iter().cloned().fold(P::zero(), |a, b| a + b);
            if row.iter().any(|p| *p < P::zero()) || !total.approx_eq(&P::one()) {
                return Err(InferenceError::NotNormalized { theta });
            }
        }
        let group = theta_action.group();
        for theta in 0..nt {
            for g in group.elements() {
                let moved = theta_action.act(theta, g);
                for y in 0..ny {
                    let back = y_action.act(y, group.inv(g));
                    if !likelihood[moved][y].approx_eq(&likelihood[theta][back]) {
                        return Err(InferenceError::Incompatible { theta, g, y });
                    }
                }
            }
        }
        Ok(FiniteModel {
            likelihood,
            theta_action,
            y_action,
        })
    }

    pub fn thetas(&self) -> usize {
        self.theta_action.points()
    }

    pub fn outcomes(&self) -> usize {
        self.y_action.points()
    }

    pub fn likelihood(&self, y: usize, theta: usize) -> &P {
        &self.likelihood[theta][y]
    }

    pub fn theta_action(&self) -> &GroupAction {
        &self.theta_action
    }

    pub fn y_action(&self) -> &GroupAction {
        &self.y_action
    }
}

/// `Z_n` acting on `Θ = Y = Z_n` by translation, `p(y|θ) = noise[y − θ mod n]`.
pub fn location_model<P: Probability>(noise: Vec<P>) -> Result<FiniteModel<P>, InferenceError> {
    let n = noise.len();
    let action = GroupAction::right_regular(crate::group::FiniteGroup::cyclic(n.max(1)));
    let likelihood = (0..n)
        .map(|theta| (0..n).map(|y| noise[(y + n - theta) % n].clone()).collect())
        .collect();
    FiniteModel::new(likelihood, action.clone(), action)
}

/// `loss[θ][θ']`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossFunction<P: Probability> {
    pub name: String,
    table: Vec<Vec<P>>,
}

impl<P: Probability> LossFunction<P> {
    pub fn new(name: impl Into<String>, table: Vec<Vec<P>>) -> Self {
        LossFunction { name: name.into(), table }
    }

    pub fn zero_one(n: usize) -> Self {
        let table = (0..n)
            .map(|a| (0..n).map(|b| if a == b { P::zero() } else { P::one() }).collect())
            .collect();
        Self::new("zero-one", table)
    }

    /// `min(|a − b|, n − |a − b|)²` on `Z_n`.
    pub fn squared_cyclic(n: usize) -> Self {
        let table = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let d = a.abs_diff(b).min(n - a.abs_diff(b)) as i64;
                        P::from_exact(Exact::from_integer(d * d))
                    })
                    .collect()
            })
            .collect();
        Self::new("squared-cyclic", table)
    }

    /// `(a − b)²` on labels `0..n`; not invariant under cyclic shifts.
    pub fn squared_label(n: usize) -> Self {
        let table = (0..n)
            .map(|a| (0..n).map(|b| P::from_exact(Exact::from_integer((a as i64 - b as i64).pow(2)))).collect())
            .collect();
        Self::new("squared-label", table)
    }

    pub fn loss(&self, theta: usize, estimate: usize) -> &P {
        &self.table[theta][estimate]
    }

    /// `L(θg, θ'g) = L(θ, θ')` for all `θ, θ', g`.
    pub fn check_invariant(&self, action: &GroupAction) -> Result<(), InferenceError> {
        let n = action.points();
        if self.table.len() != n || self.table.iter().any(|r| r.len() != n) {
            return Err(InferenceError::Shape { expected: n, found: self.table.len() });
        }
        for theta in 0..n {
            for estimate in 0..n {
                for g in action.group().elements() {
                    let moved = self.loss(action.act(theta, g), action.act(estimate, g));
                    if !moved.approx_eq(self.loss(theta, estimate)) {
                        return Err(InferenceError::NonInvariantLoss { theta, estimate, g });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A map from observations to parameter indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimator(pub Vec<usize>);

impl Estimator {
    pub fn identity(n: usize) -> Self {
        Estimator((0..n).collect())
    }

    pub fn constant(n: usize, value: usize) -> Self {
        Estimator(vec![value; n])
    }

    pub fn at(&self, y: usize) -> usize {
        self.0[y]
    }
}

/// `θ̂(yg) ≠ θ̂(y)g` at this observation and element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquivarianceWitness {
    pub y: usize,
    pub g: usize,
}

/// Exhaustive check of `θ̂(yg) = θ̂(y)g`.
pub fn is_equivariant<P: Probability>(est: &Estimator, model: &FiniteModel<P>) -> Result<(), EquivarianceWitness> {
    assert_eq!(est.0.len(), model.outcomes(), "estimator must be total on Y");
    for y in 0..model.outcomes() {
        for g in model.y_action.group().elements() {
            if est.at(model.y_action.act(y, g)) != model.theta_action.act(est.at(y), g) {
                return Err(EquivarianceWitness { y, g });
            }
        }
    }
    Ok(())
}

/// Invariant probability measure on `Θ`.
pub fn invariant_prior(action: &GroupAction) -> Measure {
    action.invariant_measure()
}

pub fn prior_weights<P: Probability>(measure: &Measure) -> Vec<P> {
    measure.weights().iter().map(|&w| P::from_exact(w)).collect()
}

/// `π(θ|y) ∝ prior(θ) p(y|θ)`.
pub fn posterior<P: Probability>(model: &FiniteModel<P>, prior: &[P], y: usize) -> Result<Vec<P>, InferenceError> {
    if prior.len() != model.thetas() {
        return Err(InferenceError::BadPrior {
            expected: model.thetas(),
            found: prior.len(),
        });
    }
    let joint: Vec<P> = (0..model.thetas())
        .map(|t| prior[t].clone() * model.likelihood(y, t).clone())
        .collect();
    let evidence = joint.iter().cloned().fold(P::zero(), |a, b| a + b);
    if evidence.is_zero() {
        return Err(InferenceError::ZeroEvidence(y));
    }
    Ok(joint.into_iter().map(|j| j / evidence.clone()).collect())
}

/// Index of the least element, ties to the smallest index.
fn argmin<P: Probability>(xs: &[P]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x < xs[best] {
            best = i;
        }
    }
    best
}

fn posterior_losses<P: Probability>(post: &[P], loss: &LossFunction<P>) -> Vec<P> {
    (0..post.len())
        .map(|est| {
            post.iter()
                .enumerate()
                .map(|(t, p)| p.clone() * loss.loss(t, est).clone())
                .fold(P::zero(), |a, b| a + b)
        })
        .collect()
}

fn check_pitman_preconditions<P: Probability>(model: &FiniteModel<P>, loss: &LossFunction<P>) -> Result<(), InferenceError> {
    if !model.theta_action.is_transitive() {
        return Err(InferenceError::NonTransitive);
    }
    loss.check_invariant(&model.theta_action)
}

/// Bayes action under the invariant prior at one observation; ties go to
/// the smallest index. [`pitman_estimator`] resolves ties equivariantly.
pub fn pitman_estimate<P: Probability>(model: &FiniteModel<P>, loss: &LossFunction<P>, y: usize) -> Result<usize, InferenceError> {
    check_pitman_preconditions(model, loss)?;
    let prior = prior_weights::<P>(&invariant_prior(&model.theta_action));
    let post = posterior(model, &prior, y)?;
    Ok(argmin(&posterior_losses(&post, loss)))
}

/// Posterior-loss minimizer at each observation, made equivariant.
///
/// At the smallest point `y₀` of each observation orbit the minimizer is the
/// smallest index fixed by the stabilizer of `y₀` (the smallest overall if
/// none is), and `θ̂(y₀g) = θ̂(y₀)g` elsewhere. Invariance of loss and
/// model keeps every value a minimizer.
pub fn pitman_estimator<P: Probability>(model: &FiniteModel<P>, loss: &LossFunction<P>) -> Result<Estimator, InferenceError> {
    check_pitman_preconditions(model, loss)?;
    let (ya, ta) = (&model.y_action, &model.theta_action);
    let group = ya.group();
    let mut est = vec![usize::MAX; model.outcomes()];
    for y0 in 0..model.outcomes() {
        if est[y0] != usize::MAX {
            continue;
        }
        let prior = prior_weights::<P>(&invariant_prior(ta));
        let losses = posterior_losses(&posterior(model, &prior, y0)?, loss);
        let least = &losses[argmin(&losses)];
        let minimizers: Vec<usize> = (0..losses.len()).filter(|&t| losses[t].approx_eq(least)).collect();
        let stabilizer: Vec<usize> = group.elements().filter(|&g| ya.act(y0, g) == y0).collect();
        let value = minimizers
            .iter()
            .copied()
            .find(|&t| stabilizer.iter().all(|&g| ta.act(t, g) == t))
            .unwrap_or(minimizers[0]);
        for g in group.elements() {
            let y = ya.act(y0, g);
            if est[y] == usize::MAX {
                est[y] = ta.act(value, g);
            }
        }
    }
    Ok(Estimator(est))
}

/// `Σ_y p(y|θ) L(θ, θ̂(y))`.
pub fn risk<P: Probability>(est: &Estimator, model: &FiniteModel<P>, loss: &LossFunction<P>, theta: usize) -> P {
    (0..model.outcomes())
        .map(|y| model.likelihood(y, theta).clone() * loss.loss(theta, est.at(y)).clone())
        .fold(P::zero(), |a, b| a + b)
}

pub fn risk_profile<P: Probability>(est: &Estimator, model: &FiniteModel<P>, loss: &LossFunction<P>) -> Vec<P> {
    (0..model.thetas()).map(|t| risk(est, model, loss, t)).collect()
}

/// One equivariant candidate, named by its value at the reference point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate<P: Probability> {
    pub reference_value: usize,
    pub estimator: Estimator,
    /// Risk at every parameter value.
    pub risks: Vec<P>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestEquivariant<P: Probability> {
    pub candidates: Vec<Candidate<P>>,
    /// Index into `candidates` of the smallest constant risk.
    pub best: usize,
    pub best_risk: P,
    pub pitman: Estimator,
    pub pitman_risk: P,
    /// The Pitman risk equals the minimum (exactly for rationals).
    pub pitman_is_optimal: bool,
}

/// Enumerate all equivariant estimators through a reference observation.
///
/// With a free transitive action on `Y`, `θ̂` is fixed by `θ̂(y₀)`:
/// `θ̂(y₀g) = θ̂(y₀)g`. Each candidate's risk is constant on `Θ`-orbits;
/// the minimum over candidates is compared with the Pitman risk.
pub fn brute_force_best_equivariant<P: Probability>(
    model: &FiniteModel<P>,
    loss: &LossFunction<P>,
) -> Result<BestEquivariant<P>, InferenceError> {
    let ya = &model.y_action;
    if !(ya.is_transitive() && ya.is_free()) {
        return Err(InferenceError::NotFreeTransitive);
    }
    let pitman = pitman_estimator(model, loss)?;
    let group = ya.group();
    let reference = 0;
    // carrier[y] = the unique g with y₀g = y
    let mut carrier = vec![0; model.outcomes()];
    for g in group.elements() {
        carrier[ya.act(reference, g)] = g;
    }
    let candidates: Vec<Candidate<P>> = (0..model.thetas())
        .map(|theta0| {
            let est = Estimator((0..model.outcomes()).map(|y| model.theta_action.act(theta0, carrier[y])).collect());
            Candidate {
                reference_value: theta0,
                risks: risk_profile(&est, model, loss),
                estimator: est,
            }
        })
        .collect();
    let best = argmin(&candidates.iter().map(|c| c.risks[0].clone()).collect::<Vec<_>>());
    let best_risk = candidates[best].risks[0].clone();
    let pitman_risk = risk(&pitman, model, loss, 0);
    Ok(BestEquivariant {
        pitman_is_optimal: pitman_risk.approx_eq(&best_risk),
        candidates,
        best,
        best_risk,
        pitman,
        pitman_risk,
    })
}

/// Columns `reference_value, theta, risk`.
pub fn risk_table_csv<P: Probability>(candidates: &[Candidate<P>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["reference_value", "theta", "risk"]).expect("in-memory write");
    for c in candidates {
        for (t, r) in c.risks.iter().enumerate() {
            w.write_record([c.reference_value.to_string(), t.to_string(), r.to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
