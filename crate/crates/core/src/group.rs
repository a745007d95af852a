//! Finite groups given by composition tables, right actions on finite point
//! sets, orbits, invariant measures and permissibility of parameters.
//!
//! Elements and points are dense 0-based indices. Every check in this module
//! is exact: integer index arithmetic and [`Exact`] rationals only.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::focusing::FocusedParameter;
use crate::scalar::Exact;

/// Why a composition table fails to define a group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GroupDefect {
    Empty,
    NotSquare { row: usize, len: usize },
    OutOfRange { row: usize, col: usize, value: usize },
    NotLatinRow { row: usize },
    NotLatinColumn { col: usize },
    NoIdentity,
    NoInverse { element: usize },
    NotAssociative { g: usize, h: usize, k: usize },
}

/// Why a point map fails to be a right action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ActionDefect {
    WrongShape { point: usize, len: usize },
    OutOfRange { point: usize, element: usize, image: usize },
    Identity { point: usize },
    Compatibility { point: usize, g: usize, h: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("not a group: {0:?}")]
    NotAGroup(GroupDefect),
    #[error("not an action: {0:?}")]
    NotAnAction(ActionDefect),
    #[error("generator {0} is not an element of the group")]
    UnknownElement(usize),
}

/// A finite group given by its composition table, `table[g][h] = gh`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validate a composition table.
    ///
    /// Checks, in order: squareness, index range, the Latin-square property,
    /// a two-sided identity, two-sided inverses and associativity over all
    /// triples.
    pub fn from_table(rows: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = rows.len();
        let bad = |d| Err(GroupError::NotAGroup(d));
        if n == 0 {
            return bad(GroupDefect::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return bad(GroupDefect::NotSquare { row, len: r.len() });
            }
            if let Some((col, &value)) = r.iter().enumerate().find(|(_, &v)| v >= n) {
                return bad(GroupDefect::OutOfRange { row, col, value });
            }
        }
        for (row, r) in rows.iter().enumerate() {
            if r.iter().collect::<BTreeSet<_>>().len() != n {
                return bad(GroupDefect::NotLatinRow { row });
            }
        }
        for col in 0..n {
            if rows.iter().map(|r| r[col]).collect::<BTreeSet<_>>().len() != n {
                return bad(GroupDefect::NotLatinColumn { col });
            }
        }
        let table: Vec<usize> = rows.into_iter().flatten().collect();
        let at = |g: usize, h: usize| table[g * n + h];

        let identity = match (0..n).find(|&e| (0..n).all(|g| at(e, g) == g && at(g, e) == g)) {
            Some(e) => e,
            None => return bad(GroupDefect::NoIdentity),
        };
        let mut inverse = Vec::with_capacity(n);
        for g in 0..n {
            match (0..n).find(|&h| at(g, h) == identity && at(h, g) == identity) {
                Some(h) => inverse.push(h),
                None => return bad(GroupDefect::NoInverse { element: g }),
            }
        }
        for g in 0..n {
            for h in 0..n {
                let gh = at(g, h);
                for k in 0..n {
                    if at(gh, k) != at(g, at(h, k)) {
                        return bad(GroupDefect::NotAssociative { g, h, k });
                    }
                }
            }
        }
        Ok(FiniteGroup {
            order: n,
            table,
            identity,
            inverse,
        })
    }

    /// The group with one element.
    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// Cyclic group of order `n`, element `k` standing for `k mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0, "cyclic group needs positive order");
        let rows = (0..n)
            .map(|g| (0..n).map(|h| (g + h) % n).collect())
            .collect();
        Self::from_table(rows).expect("cyclic table is a group")
    }

    /// Close a set of permutations of `0..m` under composition.
    ///
    /// Permutations act on the right: `point · g = perm_g[point]`, so the
    /// product `gh` is "first `g`, then `h`". Elements are numbered in
    /// breadth-first order from the identity, trying generators in the order
    /// given. Returns the group and the permutation of every element.
    pub fn from_permutations(generators: &[Vec<usize>]) -> (Self, Vec<Vec<usize>>) {
        let m = generators.first().map_or(0, Vec::len);
        let identity: Vec<usize> = (0..m).collect();
        let mut perms = vec![identity.clone()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for s in generators {
                let next: Vec<usize> = perms[i].iter().map(|&p| s[p]).collect();
                if !perms.contains(&next) {
                    perms.push(next);
                    queue.push_back(perms.len() - 1);
                }
            }
        }
        let index_of = |p: &Vec<usize>| perms.iter().position(|q| q == p).expect("closed");
        let rows = perms
            .iter()
            .map(|pg| {
                perms
                    .iter()
                    .map(|ph| index_of(&pg.iter().map(|&x| ph[x]).collect()))
                    .collect()
            })
            .collect();
        let group = Self::from_table(rows).expect("permutation closure is a group");
        (group, perms)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    /// Product `gh`.
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g * self.order + h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    /// `g h g⁻¹`.
    pub fn conjugate(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    /// Product of a word of elements, left to right.
    pub fn product(&self, word: &[usize]) -> usize {
        word.iter().fold(self.identity, |acc, &g| self.mul(acc, g))
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// Composition table as rows.
    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(<[usize]>::to_vec).collect()
    }

    /// Conjugacy classes, each sorted, ordered by smallest member.
    pub fn conjugacy_classes(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for g in self.elements() {
            if seen[g] {
                continue;
            }
            let class: BTreeSet<usize> = self.elements().map(|x| self.conjugate(x, g)).collect();
            for &c in &class {
                seen[c] = true;
            }
            classes.push(class.into_iter().collect());
        }
        classes
    }

    /// Subgroup generated by `generators`.
    pub fn generated_subgroup(&self, generators: &[usize]) -> Result<Subgroup, GroupError> {
        if let Some(&g) = generators.iter().find(|&&g| g >= self.order) {
            return Err(GroupError::UnknownElement(g));
        }
        let mut members = BTreeSet::from([self.identity]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &s in generators {
                let y = self.mul(x, s);
                if members.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(Subgroup::from_closed_set(self, members.into_iter().collect()))
    }

    /// The whole group viewed as a subgroup of itself.
    pub fn whole(&self) -> Subgroup {
        Subgroup::from_closed_set(self, self.elements().collect())
    }
}

/// A subgroup: parent element indices plus the relabelled group structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgroup {
    /// Parent indices of the members, ascending. Position `i` is the
    /// subgroup's own element `i`.
    embedding: Vec<usize>,
    group: FiniteGroup,
}

impl Subgroup {
    /// Build from a sorted member list that is closed under multiplication.
    fn from_closed_set(parent: &FiniteGroup, embedding: Vec<usize>) -> Self {
        Self::try_from_elements(parent, embedding).expect("member set is closed")
    }

    /// Build from arbitrary parent indices; `None` if they are not closed
    /// under multiplication (a nonempty finite closed subset is a subgroup).
    pub fn try_from_elements(parent: &FiniteGroup, elements: Vec<usize>) -> Option<Self> {
        let mut embedding = elements;
        embedding.sort_unstable();
        embedding.dedup();
        if embedding.is_empty() || embedding.iter().any(|&g| g >= parent.order()) {
            return None;
        }
        let local = |g: usize| embedding.binary_search(&g).ok();
        let mut rows = Vec::with_capacity(embedding.len());
        for &g in &embedding {
            let mut row = Vec::with_capacity(embedding.len());
            for &h in &embedding {
                row.push(local(parent.mul(g, h))?);
            }
            rows.push(row);
        }
        let group = FiniteGroup::from_table(rows).ok()?;
        Some(Subgroup { embedding, group })
    }

    pub fn order(&self) -> usize {
        self.embedding.len()
    }

    /// Members as parent indices, ascending.
    pub fn elements(&self) -> &[usize] {
        &self.embedding
    }

    pub fn contains(&self, g: usize) -> bool {
        self.embedding.binary_search(&g).is_ok()
    }

    /// The subgroup as an abstract group; its element `i` is `elements()[i]`.
    pub fn as_group(&self) -> &FiniteGroup {
        &self.group
    }

    /// `{ g h g⁻¹ : h in self }` as a sorted parent-index list.
    pub fn conjugated_by(&self, parent: &FiniteGroup, g: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.embedding.iter().map(|&h| parent.conjugate(g, h)).collect();
        set.into_iter().collect()
    }
}

/// A right action `φ ↦ φg` of a finite group on points `0..points`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAction {
    group: FiniteGroup,
    points: usize,
    /// `map[φ * order + g] = φg`.
    map: Vec<usize>,
}

impl GroupAction {
    /// Validate `map[φ][g] = φg` as a right action: `φe = φ` and
    /// `(φg)h = φ(gh)` for every point and pair of elements.
    pub fn new(group: FiniteGroup, map: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = group.order();
        let points = map.len();
        let bad = |d| Err(GroupError::NotAnAction(d));
        for (point, row) in map.iter().enumerate() {
            if row.len() != n {
                return bad(ActionDefect::WrongShape { point, len: row.len() });
            }
            if let Some((element, &image)) = row.iter().enumerate().find(|(_, &x)| x >= points) {
                return bad(ActionDefect::OutOfRange { point, element, image });
            }
        }
        let flat: Vec<usize> = map.into_iter().flatten().collect();
        let act = |p: usize, g: usize| flat[p * n + g];
        for point in 0..points {
            if act(point, group.identity()) != point {
                return bad(ActionDefect::Identity { point });
            }
            for g in 0..n {
                for h in 0..n {
                    if act(act(point, g), h) != act(point, group.mul(g, h)) {
                        return bad(ActionDefect::Compatibility { point, g, h });
                    }
                }
            }
        }
        Ok(GroupAction {
            group,
            points,
            map: flat,
        })
    }

    /// Action induced by per-element permutations, `φg = perms[g][φ]`.
    pub fn from_permutations(group: FiniteGroup, perms: &[Vec<usize>]) -> Result<Self, GroupError> {
        let points = perms.first().map_or(0, Vec::len);
        let map = (0..points)
            .map(|p| perms.iter().map(|perm| perm[p]).collect())
            .collect();
        Self::new(group, map)
    }

    /// Every element fixes every point.
    pub fn trivial_on(group: FiniteGroup, points: usize) -> Self {
        let map = (0..points).map(|p| vec![p; group.order()]).collect();
        Self::new(group, map).expect("trivial action is an action")
    }

    /// A group acting on itself by right multiplication.
    pub fn right_regular(group: FiniteGroup) -> Self {
        let map = group
            .elements()
            .map(|p| group.elements().map(|g| group.mul(p, g)).collect())
            .collect();
        Self::new(group, map).expect("right multiplication is an action")
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `φg`.
    pub fn act(&self, point: usize, g: usize) -> usize {
        self.map[point * self.group.order() + g]
    }

    /// The point permutation induced by `g`.
    pub fn permutation(&self, g: usize) -> Vec<usize> {
        (0..self.points).map(|p| self.act(p, g)).collect()
    }

    /// Action rows `map[φ][g]`, as accepted by [`GroupAction::new`].
    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.map.chunks(self.group.order()).map(<[usize]>::to_vec).collect()
    }

    /// Partition of the points into orbits.
    pub fn orbits(&self) -> Partition {
        let mut block_of = vec![usize::MAX; self.points];
        let mut blocks = Vec::new();
        for start in 0..self.points {
            if block_of[start] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut block: BTreeSet<usize> = self.group.elements().map(|g| self.act(start, g)).collect();
            block.insert(start);
            for &p in &block {
                block_of[p] = id;
            }
            blocks.push(block.into_iter().collect());
        }
        Partition { blocks, block_of }
    }

    pub fn is_transitive(&self) -> bool {
        self.orbits().is_transitive()
    }

    /// No non-identity element fixes any point.
    pub fn is_free(&self) -> bool {
        let e = self.group.identity();
        (0..self.points).all(|p| self.group.elements().all(|g| g == e || self.act(p, g) != p))
    }

    /// Right-invariant probability measure.
    ///
    /// Each orbit receives equal total mass, spread uniformly within it. The
    /// result is the unique invariant probability measure exactly when the
    /// action is transitive; otherwise it is one choice among many and is
    /// flagged non-unique.
    pub fn invariant_measure(&self) -> Measure {
        let orbits = self.orbits();
        let k = orbits.len() as i64;
        let mut weights = vec![Exact::zero(); self.points];
        for block in orbits.blocks() {
            let w = Exact::new(1, k * block.len() as i64);
            for &p in block {
                weights[p] = w;
            }
        }
        Measure {
            weights,
            unique: orbits.is_transitive(),
        }
    }
}

/// Disjoint nonempty blocks covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl Partition {
    /// Normalise and validate a block list over `0..points`.
    pub fn from_blocks(blocks: Vec<Vec<usize>>, points: usize) -> Option<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort_by_key(|b| b.first().copied());
        let mut block_of = vec![usize::MAX; points];
        for (id, block) in blocks.iter().enumerate() {
            for &p in block {
                if p < points {
                    block_of[p] = id;
                }
            }
        }
        let partition = Partition { blocks, block_of };
        partition.is_partition_of(points).then_some(partition)
    }

    /// Blocks ordered by smallest member, each block ascending.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, point: usize) -> usize {
        self.block_of[point]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_transitive(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Blocks are nonempty, pairwise disjoint and cover `0..points`.
    pub fn is_partition_of(&self, points: usize) -> bool {
        let mut seen = vec![false; points];
        for block in &self.blocks {
            if block.is_empty() {
                return false;
            }
            for &p in block {
                if p >= points || seen[p] {
                    return false;
                }
                seen[p] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Finite measure on the points, with exact rational weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Measure {
    weights: Vec<Exact>,
    /// Whether this is the only invariant probability measure.
    pub unique: bool,
}

impl Measure {
    pub fn new(weights: Vec<Exact>, unique: bool) -> Self {
        Measure { weights, unique }
    }

    pub fn weights(&self) -> &[Exact] {
        &self.weights
    }

    pub fn total(&self) -> Exact {
        self.weights.iter().copied().sum()
    }

    pub fn mass(&self, subset: &[usize]) -> Exact {
        subset.iter().map(|&p| self.weights[p]).sum()
    }

    pub fn is_probability(&self) -> bool {
        self.total().is_one() && self.weights.iter().all(|w| *w >= Exact::zero())
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|w| *w > Exact::zero())
    }

    /// `ρ({φg}) = ρ({φ})` for all points and elements; by additivity this
    /// is `ρ(Γg) = ρ(Γ)` for every subset `Γ`.
    pub fn is_invariant(&self, action: &GroupAction) -> bool {
        self.weights.len() == action.points()
            && (0..action.points()).all(|p| {
                action
                    .group()
                    .elements()
                    .all(|g| self.weights[action.act(p, g)] == self.weights[p])
            })
    }
}

/// A permissibility failure: `λ(φ1) = λ(φ2)` but `λ(φ1 g) ≠ λ(φ2 g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PermissibilityWitness {
    pub first: usize,
    pub second: usize,
    pub element: usize,
}

/// Check the level-set partition of one element against the parameter.
fn preserves_levels(param: &FocusedParameter, action: &GroupAction, g: usize) -> Option<PermissibilityWitness> {
    for level in param.level_sets() {
        let anchor = level[0];
        let target = param.index_of(action.act(anchor, g));
        if let Some(&other) = level.iter().find(|&&p| param.index_of(action.act(p, g)) != target) {
            return Some(PermissibilityWitness {
                first: anchor,
                second: other,
                element: g,
            });
        }
    }
    None
}

/// Is `param` permissible under every element of `subgroup`?
///
/// Returns `Ok(())` or the first witness found, scanning elements in
/// ascending parent index.
pub fn is_permissible(
    param: &FocusedParameter,
    action: &GroupAction,
    subgroup: &Subgroup,
) -> Result<(), PermissibilityWitness> {
    assert_eq!(param.points(), action.points(), "parameter and action domains differ");
    match subgroup
        .elements()
        .iter()
        .find_map(|&g| preserves_levels(param, action, g))
    {
        Some(w) => Err(w),
        None => Ok(()),
    }
}

/// The largest subgroup under which `param` is permissible: all elements
/// whose point map carries level sets onto level sets.
pub fn maximal_permissible_subgroup(param: &FocusedParameter, action: &GroupAction) -> Subgroup {
    assert_eq!(param.points(), action.points(), "parameter and action domains differ");
    let members: Vec<usize> = action
        .group()
        .elements()
        .filter(|&g| preserves_levels(param, action, g).is_none())
        .collect();
    Subgroup::try_from_elements(action.group(), members)
        .expect("level-preserving elements form a subgroup")
}
