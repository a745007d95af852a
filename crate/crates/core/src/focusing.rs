//! Focused parameters on a c-variable space, model reduction to orbits, and
//! the coupling between two foci: transition elements, conjugate maximal
//! subgroups and value alignment. Also the accessibility ordering `λ ≪ θ`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{maximal_permissible_subgroup, GroupAction, Partition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FocusError {
    #[error("parameter {label}: point {point} maps to value index {index} out of range")]
    IndexOutOfRange { label: String, point: usize, index: usize },
    #[error("parameter {label}: value index {index} is never attained")]
    NotOnto { label: String, index: usize },
    #[error("parameter {label}: duplicate value {value}")]
    DuplicateValue { label: String, value: f64 },
    #[error("parameter {label} is defined on {found} points, expected {expected}")]
    DomainMismatch { label: String, expected: usize, found: usize },
    #[error("no orbit with id {0}")]
    NoSuchOrbit(usize),
    #[error("model reduction selects no points")]
    EmptyReduction,
    #[error("element {element} is not a transition: λ^b({point}) ≠ λ^a({point}·g)")]
    InvalidTransition { element: usize, point: usize },
}

#[derive(Deserialize)]
struct ParameterFile {
    name: String,
    values: Vec<f64>,
    map: Vec<usize>,
}

/// A parameter `λ^a`: a labelled map from points onto a finite value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParameterFile")]
pub struct FocusedParameter {
    #[serde(rename = "name")]
    label: String,
    values: Vec<f64>,
    map: Vec<usize>,
    #[serde(skip)]
    levels: Vec<Vec<usize>>,
}

impl TryFrom<ParameterFile> for FocusedParameter {
    type Error = FocusError;

    fn try_from(file: ParameterFile) -> Result<Self, FocusError> {
        FocusedParameter::new(file.name, file.values, file.map)
    }
}

impl FocusedParameter {
    /// `map[φ]` is the index into `values` of `λ(φ)`. Every value must be
    /// attained and values must be distinct.
    pub fn new(label: impl Into<String>, values: Vec<f64>, map: Vec<usize>) -> Result<Self, FocusError> {
        let label = label.into();
        let mut levels = vec![Vec::new(); values.len()];
        for (point, &index) in map.iter().enumerate() {
            match levels.get_mut(index) {
                Some(level) => level.push(point),
                None => return Err(FocusError::IndexOutOfRange { label, point, index }),
            }
        }
        if let Some(index) = levels.iter().position(Vec::is_empty) {
            return Err(FocusError::NotOnto { label, index });
        }
        for (i, &v) in values.iter().enumerate() {
            if values[..i].contains(&v) {
                return Err(FocusError::DuplicateValue { label, value: v });
            }
        }
        Ok(FocusedParameter {
            label,
            values,
            map,
            levels,
        })
    }

    /// Parameter from a function of the point; values are the distinct
    /// attained outputs in ascending order.
    pub fn from_fn(label: impl Into<String>, points: usize, f: impl Fn(usize) -> f64) -> Self {
        let raw: Vec<f64> = (0..points).map(f).collect();
        let mut values = raw.clone();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let map = raw
            .iter()
            .map(|x| values.iter().position(|v| v == x).expect("value present"))
            .collect();
        Self::new(label, values, map).expect("from_fn parameter is onto")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Size of the domain.
    pub fn points(&self) -> usize {
        self.map.len()
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    /// Value index of `λ(φ)`.
    pub fn index_of(&self, point: usize) -> usize {
        self.map[point]
    }

    pub fn value_of(&self, point: usize) -> f64 {
        self.values[self.map[point]]
    }

    /// `{φ : λ(φ) = λ_k}` for each `k`, ascending.
    pub fn level_sets(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn level_set(&self, k: usize) -> &[usize] {
        &self.levels[k]
    }

    fn check_domain(&self, points: usize) -> Result<(), FocusError> {
        if self.points() == points {
            Ok(())
        } else {
            Err(FocusError::DomainMismatch {
                label: self.label.clone(),
                expected: points,
                found: self.points(),
            })
        }
    }
}

/// Orbits of the value indices under the action that the maximal
/// permissible subgroup induces on `λ`.
pub fn value_orbits(param: &FocusedParameter, action: &GroupAction) -> Partition {
    let sub = maximal_permissible_subgroup(param, action);
    let n = param.num_values();
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let anchor = param.level_set(start)[0];
        let block: BTreeSet<usize> = sub
            .elements()
            .iter()
            .map(|&g| param.index_of(action.act(anchor, g)))
            .collect();
        for &k in &block {
            seen[k] = true;
        }
        blocks.push(block.into_iter().collect());
    }
    Partition::from_blocks(blocks, n).expect("induced orbits partition the values")
}

/// Result of restricting a parameter to one or more value orbits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedParameter {
    pub parameter: FocusedParameter,
    /// Original point ids kept, ascending; reduced point `i` is `domain[i]`.
    pub domain: Vec<usize>,
    /// Original value indices kept.
    pub kept_values: Vec<usize>,
    /// `κ` when a two-point orbit `{−κ, +κ}` was rescaled to `{−1, +1}`.
    pub scale: Option<f64>,
}

/// Restrict `param` to the value orbit with id `orbit` (see [`value_orbits`]).
pub fn reduce_to_orbit(
    param: &FocusedParameter,
    action: &GroupAction,
    orbit: usize,
) -> Result<ReducedParameter, FocusError> {
    reduce_to_orbits(param, action, &[orbit])
}

/// Restrict `param` to a union of value orbits.
///
/// Points whose value lies outside the selection leave the domain. A
/// selection whose values are exactly `{−κ, +κ}` is rescaled to `{−1, +1}`.
pub fn reduce_to_orbits(
    param: &FocusedParameter,
    action: &GroupAction,
    orbits: &[usize],
) -> Result<ReducedParameter, FocusError> {
    param.check_domain(action.points())?;
    let partition = value_orbits(param, action);
    let mut kept = BTreeSet::new();
    for &id in orbits {
        let block = partition.blocks().get(id).ok_or(FocusError::NoSuchOrbit(id))?;
        kept.extend(block.iter().copied());
    }
    let kept_values: Vec<usize> = kept.into_iter().collect();
    let domain: Vec<usize> = (0..param.points())
        .filter(|&p| kept_values.contains(&param.index_of(p)))
        .collect();
    if domain.is_empty() {
        return Err(FocusError::EmptyReduction);
    }
    let mut values: Vec<f64> = kept_values.iter().map(|&k| param.values()[k]).collect();
    let scale = match values.as_slice() {
        [x, y] if *x == -*y && *x != 0.0 => Some(x.abs()),
        _ => None,
    };
    if let Some(kappa) = scale {
        values.iter_mut().for_each(|v| *v /= kappa);
    }
    let map = domain
        .iter()
        .map(|&p| kept_values.iter().position(|&k| k == param.index_of(p)).expect("kept"))
        .collect();
    let parameter = FocusedParameter::new(param.label(), values, map)?;
    Ok(ReducedParameter {
        parameter,
        domain,
        kept_values,
        scale,
    })
}

/// Least element `g` with `λ^b(φ) = λ^a(φg)` for every point, if any.
pub fn find_transition(a: &FocusedParameter, b: &FocusedParameter, action: &GroupAction) -> Option<usize> {
    if a.points() != action.points() || b.points() != action.points() {
        return None;
    }
    action
        .group()
        .elements()
        .find(|&g| first_transition_failure(a, b, action, g).is_none())
}

fn first_transition_failure(a: &FocusedParameter, b: &FocusedParameter, action: &GroupAction, g: usize) -> Option<usize> {
    (0..action.points()).find(|&p| b.value_of(p) != a.value_of(action.act(p, g)))
}

/// Outcome of checking the coupling between two foci through `g_ab`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CouplingReport {
    pub a: String,
    pub b: String,
    pub transition: Option<usize>,
    /// `G^b = g_ab G^a g_ab⁻¹` as element sets.
    pub subgroups_conjugate: bool,
    /// `alignment[j]` is the index of `λ^a`'s value matching `λ^b`'s value
    /// `j`; present when the values coincide after this arrangement.
    pub value_alignment: Option<Vec<usize>>,
    pub subgroup_a: Vec<usize>,
    pub subgroup_b: Vec<usize>,
}

/// Check the consequences of `λ^b(φ) = λ^a(φ g_ab)`: conjugacy of the
/// maximal permissible subgroups and alignment of the value lists.
pub fn verify_coupling(
    a: &FocusedParameter,
    b: &FocusedParameter,
    action: &GroupAction,
    g_ab: usize,
) -> Result<CouplingReport, FocusError> {
    a.check_domain(action.points())?;
    b.check_domain(action.points())?;
    if let Some(point) = first_transition_failure(a, b, action, g_ab) {
        return Err(FocusError::InvalidTransition { element: g_ab, point });
    }
    let group = action.group();
    let sub_a = maximal_permissible_subgroup(a, action);
    let sub_b = maximal_permissible_subgroup(b, action);
    let subgroups_conjugate = sub_a.conjugated_by(group, g_ab) == sub_b.elements();

    let alignment: Vec<usize> = b
        .level_sets()
        .iter()
        .map(|level| a.index_of(action.act(level[0], g_ab)))
        .collect();
    let bijective = alignment.iter().collect::<BTreeSet<_>>().len() == a.num_values()
        && a.num_values() == b.num_values();
    let values_agree = alignment
        .iter()
        .enumerate()
        .all(|(j, &k)| b.values()[j] == a.values()[k]);
    Ok(CouplingReport {
        a: a.label().to_string(),
        b: b.label().to_string(),
        transition: Some(g_ab),
        subgroups_conjugate,
        value_alignment: (bijective && values_agree).then_some(alignment),
        subgroup_a: sub_a.elements().to_vec(),
        subgroup_b: sub_b.elements().to_vec(),
    })
}

/// `λ ≪ θ`: `λ = h(θ)` for some `h`, i.e. θ's level partition refines λ's.
pub fn is_function_of(lam: &FocusedParameter, theta: &FocusedParameter) -> bool {
    assert_eq!(lam.points(), theta.points(), "parameters on different domains");
    theta.level_sets().iter().all(|level| {
        let k = lam.index_of(level[0]);
        level.iter().all(|&p| lam.index_of(p) == k)
    })
}

/// No accessible `θ` is strictly above `lam` in the `≪` ordering.
pub fn is_maximal_accessible(lam: &FocusedParameter, accessible: &[FocusedParameter]) -> bool {
    accessible
        .iter()
        .all(|theta| !(is_function_of(lam, theta) && !is_function_of(theta, lam)))
}
