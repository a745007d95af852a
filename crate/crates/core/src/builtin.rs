//! Built-in finite instances: the rotation group of the cube acting on the
//! eight vertex directions, the reflection `θ ↦ −θ` on `{−1, 0, +1}`, and
//! character tables for the built-in groups.

use num_complex::Complex;

use crate::focusing::FocusedParameter;
use crate::group::{FiniteGroup, GroupAction};
use crate::quantum_space::CharacterTable;
use crate::scalar::{cis, re, Real};

/// Integer 3×3 rotation matrix.
pub type IntRotation = [[i32; 3]; 3];

const IDENTITY: IntRotation = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

/// 90° about z.
pub const ROT_Z90: IntRotation = [[0, -1, 0], [1, 0, 0], [0, 0, 1]];
/// 90° about y.
pub const ROT_Y90: IntRotation = [[0, 0, 1], [0, 1, 0], [-1, 0, 0]];
/// 90° about x.
pub const ROT_X90: IntRotation = [[1, 0, 0], [0, 0, -1], [0, 1, 0]];

pub fn mat_mul(a: &IntRotation, b: &IntRotation) -> IntRotation {
    let mut out = [[0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat_vec(a: &IntRotation, v: &[i32; 3]) -> [i32; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

pub fn transpose(a: &IntRotation) -> IntRotation {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| a[j][i]))
}

/// The order-24 rotation group of the cube acting on its vertices.
///
/// Group elements are rotation matrices with `R_{gh} = R_g R_h`; a vertex
/// direction `φ` is sent to `φg = R_gᵀ φ`, which makes this a right action.
#[derive(Debug, Clone)]
pub struct CubeModel {
    pub action: GroupAction,
    /// Rotation matrix of each element.
    pub rotations: Vec<IntRotation>,
    /// Vertex `i` is `vertices[i]` (unnormalised, entries ±1).
    pub vertices: Vec<[i32; 3]>,
}

impl CubeModel {
    pub fn group(&self) -> &FiniteGroup {
        self.action.group()
    }

    /// Index of the element with rotation matrix `r`.
    pub fn element(&self, r: &IntRotation) -> Option<usize> {
        self.rotations.iter().position(|x| x == r)
    }

    /// `λ(φ) = sign(φ · e_axis)` for axis 0, 1, 2 (x, y, z).
    pub fn sign_parameter(&self, axis: usize) -> FocusedParameter {
        let label = ["x", "y", "z"][axis];
        FocusedParameter::from_fn(label, self.vertices.len(), |p| f64::from(self.vertices[p][axis].signum()))
    }

    /// The identity map on vertices, an 8-valued parameter.
    pub fn vertex_parameter(&self) -> FocusedParameter {
        FocusedParameter::from_fn("vertex", self.vertices.len(), |p| p as f64)
    }

    /// Rotation matrix as floats.
    pub fn rotation_f64(&self, g: usize) -> [[f64; 3]; 3] {
        self.rotations[g].map(|row| row.map(f64::from))
    }
}

/// Close `{Rz(90°), Ry(90°)}` under multiplication (breadth-first from the
/// identity) and let it act on the vertices `(±1, ±1, ±1)`.
pub fn cube_rotation_group() -> CubeModel {
    let generators = [ROT_Z90, ROT_Y90];
    let mut rotations = vec![IDENTITY];
    let mut i = 0;
    while i < rotations.len() {
        for s in &generators {
            let next = mat_mul(&rotations[i], s);
            if !rotations.contains(&next) {
                rotations.push(next);
            }
        }
        i += 1;
    }
    let index = |r: &IntRotation| rotations.iter().position(|x| x == r).expect("closed under products");
    let table = rotations
        .iter()
        .map(|a| rotations.iter().map(|b| index(&mat_mul(a, b))).collect())
        .collect();
    let group = FiniteGroup::from_table(table).expect("rotation table is a group");

    let vertices: Vec<[i32; 3]> = (0..8)
        .map(|i| [(i >> 2) & 1, (i >> 1) & 1, i & 1].map(|b| 2 * b - 1))
        .collect();
    let vertex_index = |v: &[i32; 3]| vertices.iter().position(|w| w == v).expect("vertex");
    let map = vertices
        .iter()
        .map(|v| {
            rotations
                .iter()
                .map(|r| vertex_index(&mat_vec(&transpose(r), v)))
                .collect()
        })
        .collect();
    let action = GroupAction::new(group, map).expect("rotations act on vertices");
    CubeModel {
        action,
        rotations,
        vertices,
    }
}

/// `C2 = {e, r}` acting on `{−1, 0, +1}` (points 0, 1, 2) by `r: x ↦ −x`.
pub fn reflection_on_three_points() -> GroupAction {
    GroupAction::new(FiniteGroup::cyclic(2), vec![vec![0, 2], vec![1, 1], vec![2, 0]])
        .expect("reflection is an action")
}

/// Characters of the cyclic group of order `n`: `χ_k(g) = e^{2πi kg/n}`.
pub fn cyclic_character_table<T: Real>(n: usize) -> CharacterTable<T> {
    let two_pi = T::two_pi();
    let values = (0..n)
        .map(|k| {
            (0..n)
                .map(|g| cis(two_pi * T::lit(((k * g) % n) as f64) / T::lit(n as f64)))
                .collect()
        })
        .collect();
    CharacterTable::new((0..n).map(|k| format!("chi{k}")).collect(), (0..n).collect(), values)
}

/// Integer character table of the cube rotation group (isomorphic to S4).
///
/// Classes are recognised by element order and class size: identity,
/// face half-turns (order 2, size 3), vertex thirds (order 3, size 8),
/// face quarter-turns (order 4, size 6), edge half-turns (order 2, size 6).
pub fn cube_character_table<T: Real>(group: &FiniteGroup) -> CharacterTable<T> {
    const ROWS: [(&str, [i32; 5]); 5] = [
        ("A1", [1, 1, 1, 1, 1]),
        ("A2", [1, 1, 1, -1, -1]),
        ("E", [2, 2, -1, 0, 0]),
        ("T1", [3, -1, 0, 1, -1]),
        ("T2", [3, -1, 0, -1, 1]),
    ];
    let kind = |order: usize, size: usize| match (order, size) {
        (1, 1) => 0,
        (2, 3) => 1,
        (3, 8) => 2,
        (4, 6) => 3,
        (2, 6) => 4,
        other => panic!("not the cube rotation group: class {other:?}"),
    };
    let mut class_of = vec![0; group.order()];
    for class in group.conjugacy_classes() {
        let k = kind(group.element_order(class[0]), class.len());
        for g in class {
            class_of[g] = k;
        }
    }
    let values: Vec<Vec<Complex<T>>> = ROWS
        .iter()
        .map(|(_, row)| row.iter().map(|&x| re(T::lit(f64::from(x)))).collect())
        .collect();
    CharacterTable::new(ROWS.iter().map(|(n, _)| n.to_string()).collect(), class_of, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::maximal_permissible_subgroup;

    #[test]
    fn cube_group_has_order_24_and_acts_transitively() {
        let cube = cube_rotation_group();
        assert_eq!(cube.group().order(), 24);
        assert_eq!(cube.action.points(), 8);
        assert!(cube.action.is_transitive());
        // Rotations are proper: determinant one, orthogonal.
        for r in &cube.rotations {
            assert_eq!(mat_mul(r, &transpose(r)), IDENTITY);
        }
    }

    #[test]
    fn permutation_closure_agrees_with_matrix_closure() {
        let cube = cube_rotation_group();
        let gz = cube.element(&ROT_Z90).unwrap();
        let gy = cube.element(&ROT_Y90).unwrap();
        let (closed, perms) = FiniteGroup::from_permutations(&[cube.action.permutation(gz), cube.action.permutation(gy)]);
        assert_eq!(closed.order(), 24);
        let mut ours: Vec<Vec<usize>> = cube.group().elements().map(|g| cube.action.permutation(g)).collect();
        let mut theirs = perms;
        ours.sort();
        theirs.sort();
        assert_eq!(ours, theirs);
    }

    #[test]
    fn axis_subgroups_have_order_eight() {
        let cube = cube_rotation_group();
        for axis in 0..3 {
            let sub = maximal_permissible_subgroup(&cube.sign_parameter(axis), &cube.action);
            assert_eq!(sub.order(), 8, "axis {axis}");
            // every member maps the axis to ± itself
            for &g in sub.elements() {
                let mut e = [0; 3];
                e[axis] = 1;
                let image = mat_vec(&cube.rotations[g], &e);
                assert_eq!(image[axis].abs(), 1);
            }
        }
    }

    #[test]
    fn cube_characters_by_class() {
        let cube = cube_rotation_group();
        let table: CharacterTable<f64> = cube_character_table(cube.group());
        // T1 is the defining 3-d representation: its character is the trace.
        let t1 = table.names().iter().position(|n| n == "T1").unwrap();
        for g in cube.group().elements() {
            let trace: i32 = (0..3).map(|i| cube.rotations[g][i][i]).sum();
            assert_eq!(table.character(t1, g).re, f64::from(trace));
        }
    }
}
