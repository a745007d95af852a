//! End-to-end scenarios over the built-in models, each producing a
//! [`ScenarioReport`], and the checks run by `verify` on a model file.
//!
//! Every scenario is deterministic given its config and seed.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::builtin::{cube_character_table, cube_rotation_group};
use crate::dynamics::{
    evolution_trace, evolve_state, heisenberg_operator, schrodinger_residual, trace_to_csv, translation_generator,
    Hamiltonian, Lattice,
};
use crate::focusing::{find_transition, reduce_to_orbit, value_orbits, verify_coupling};
use crate::group::{is_permissible, maximal_permissible_subgroup};
use crate::inference::{
    brute_force_best_equivariant, location_model, pitman_estimate, risk_profile, risk_table_csv, LossFunction,
};
use crate::io::Model;
use crate::measurement::{
    born_transition_matrix, build_povm, collapse, completeness_defect, density_from_prior, dephase,
    predictive_distribution, recover_from_density, stochasticity_defect, Collapse, DensityOperator, LikelihoodTable,
    MeasurementError,
};
use crate::quantum_space::{
    build_coupled_representation, build_parametric_space, haar_unitary, interpret_state, isotypic_projectors,
    orthonormality_defect, regular_representation, transport_check, CatalogEntry, Focus, SamplingConfig,
    UnitaryFamily,
};
use crate::report::{Check, ScenarioReport, Table};
use crate::scalar::{max_abs_diff, max_abs_diff_vec, ray_distance, re, CMatrix, CVector, Exact};
use crate::spin::{rotation_between, spin_operator, spin_states, su2_lift, Direction};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}; try `list`")]
    Unknown(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("t't = 0: the projection onto span(t) is undefined")]
    SingularProjection,
    #[error("{0}")]
    Degenerate(String),
}

/// Global knobs shared by all scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Settings {
    pub seed: u64,
    /// Overrides every floating-point tolerance when set.
    pub tol: Option<f64>,
}

impl Settings {
    pub fn seeded(seed: u64) -> Self {
        Settings { seed, tol: None }
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// `(name, description)` of every runnable scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("spin-half", "spin-1/2 states along chosen directions: Born matrices, rotations, catalog uniqueness"),
    ("cube", "rotation group of the cube on its vertices: subgroups, coupling, transport, isotypic split"),
    ("coupled", "coupled representation from three spin foci, with a corrupted negative control"),
    ("measurement", "POVMs, predictive distributions, collapse and density recovery on random tables"),
    ("dynamics", "unitary evolution, Heisenberg picture and lattice translations"),
    ("singlet", "two-particle singlet: anticorrelation, correlations, no-signalling"),
    ("chsh", "pointwise CHSH bound over all sign assignments and its quantum violation"),
    ("latent-epr", "latent-variable analogue: recovering b b' while u is known only modulo span(t)"),
    ("pitman", "Pitman estimator on Z5 against all equivariant estimators, exact arithmetic"),
];

fn parse_config<C: DeserializeOwned + Default>(config: Option<&Value>) -> Result<C, ScenarioError> {
    match config {
        None => Ok(C::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| ScenarioError::BadConfig(e.to_string())),
    }
}

/// Run one scenario by name, with an optional scenario-specific config.
pub fn run_scenario(name: &str, config: Option<&Value>, settings: &Settings) -> Result<ScenarioReport, ScenarioError> {
    match name {
        "spin-half" => {
            let c: SpinHalfConfig = parse_config(config)?;
            run_spin_half(&c.directions, c.random_pairs, settings)
        }
        "cube" => Ok(run_cube_model(settings)),
        "coupled" => run_coupled(&parse_config(config)?, settings),
        "measurement" => run_measurement(&parse_config(config)?, settings),
        "dynamics" => run_dynamics(&parse_config(config)?, settings),
        "singlet" => {
            let c: SingletConfig = parse_config(config)?;
            Ok(run_singlet_epr(&c.a, &c.b, c.random_pairs, settings))
        }
        "chsh" => {
            let c: ChshConfig = parse_config(config)?;
            Ok(run_chsh(&c.a, &c.a_prime, &c.b, &c.b_prime, c.grid, settings))
        }
        "latent-epr" => run_latent_epr(&parse_config(config)?, settings),
        "pitman" => {
            let c: PitmanConfig = parse_config(config)?;
            run_pitman_demo(&c.noise, settings)
        }
        other => Err(ScenarioError::Unknown(other.to_string())),
    }
}

/// Uniform on the sphere.
pub fn random_direction<R: Rng + ?Sized>(label: &str, rng: &mut R) -> Direction {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
            return Direction::new(label, v);
        }
    }
}

/// `(A + A†)/2` with complex Gaussian `A`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix<f64> {
    let a = CMatrix::from_fn(n, n, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&a + a.adjoint()) * re(0.5)
}

pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector<f64> {
    let v = CVector::from_fn(n, |_, _| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    v / re(norm)
}

fn columns(m: &CMatrix<f64>) -> Vec<CVector<f64>> {
    (0..m.ncols()).map(|k| m.column(k).into_owned()).collect()
}

// ---------------------------------------------------------------- spin-half

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinHalfConfig {
    pub directions: Vec<Direction>,
    pub random_pairs: usize,
}

impl Default for SpinHalfConfig {
    fn default() -> Self {
        SpinHalfConfig {
            directions: vec![Direction::z(), Direction::x(), Direction::y(), Direction::planar("a60", 60.0)],
            random_pairs: 100,
        }
    }
}

/// `cos²(θ/2)` on matching outcome indices, `sin²(θ/2)` otherwise.
pub fn born_oracle(a: &Direction, b: &Direction) -> [[f64; 2]; 2] {
    let c = (1.0 + a.dot(b)) / 2.0;
    [[c, 1.0 - c], [1.0 - c, c]]
}

fn born_deviation(a: &Direction, b: &Direction) -> Result<(f64, f64), MeasurementError> {
    let m = born_transition_matrix(&spin_states::<f64>(a), &spin_states::<f64>(b))?;
    let oracle = born_oracle(a, b);
    let mut dev = 0.0f64;
    for j in 0..2 {
        for k in 0..2 {
            dev = dev.max((m[(j, k)] - oracle[j][k]).abs());
        }
    }
    Ok((dev, stochasticity_defect(&m)))
}

/// Spin-1/2 states `v_±^a` along each direction.
pub fn run_spin_half(directions: &[Direction], random_pairs: usize, s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    if directions.len() < 2 {
        return Err(ScenarioError::BadConfig("at least two directions are needed".into()));
    }
    let mut r = ScenarioReport::new("spin-half", s.seed);
    let tol = s.tol(1e-10);
    let norm_defect = directions.iter().map(Direction::norm_defect).fold(0.0, f64::max);
    r.check(Check::residual("direction_norm_defect", norm_defect, s.tol(1e-12)));

    let mut eigen_residual = 0.0f64;
    for d in directions {
        let op = spin_operator::<f64>(&d.v);
        let [down, up] = spin_states::<f64>(d);
        eigen_residual = eigen_residual.max((&op * &up - &up).norm()).max((&op * &down + &down).norm());
    }
    r.check(Check::residual("eigenstate_residual", eigen_residual, tol));

    let mut born = Table::new("born", &["a", "b", "j", "k", "probability", "oracle"]);
    let (mut dev, mut stoch, mut rot, mut transport) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for a in directions {
        for b in directions {
            let (d, st) = born_deviation(a, b).map_err(|e| ScenarioError::Degenerate(e.to_string()))?;
            dev = dev.max(d);
            stoch = stoch.max(st);
            let m = born_transition_matrix(&spin_states::<f64>(a), &spin_states::<f64>(b)).expect("checked above");
            let oracle = born_oracle(a, b);
            for j in 0..2 {
                for k in 0..2 {
                    born.push(vec![
                        a.label.clone(),
                        b.label.clone(),
                        j.to_string(),
                        k.to_string(),
                        format!("{:.15}", m[(j, k)]),
                        format!("{:.15}", oracle[j][k]),
                    ]);
                }
            }
            // an explicit rotation taking a to b, lifted to SU(2)
            let u = su2_lift::<f64>(&rotation_between(&a.v, &b.v));
            let lhs = &u * spin_operator::<f64>(&a.v) * u.adjoint();
            rot = rot.max(max_abs_diff(&lhs, &spin_operator(&b.v)));
            let (sa, sb) = (spin_states::<f64>(a), spin_states::<f64>(b));
            for k in 0..2 {
                transport = transport.max(ray_distance(&(&u * &sa[k]), &sb[k]));
            }
        }
    }
    r.check(Check::residual("born_oracle_deviation", dev, tol));
    r.check(Check::residual("born_stochasticity_defect", stoch, tol));
    r.check(Check::residual("rotation_conjugates_spin_operator", rot, tol));
    r.check(Check::residual("rotation_transports_states", transport, tol));

    let mut rng = s.rng();
    let (mut sweep_dev, mut sweep_stoch) = (0.0f64, 0.0f64);
    for _ in 0..random_pairs {
        let (a, b) = (random_direction("a", &mut rng), random_direction("b", &mut rng));
        let (d, st) = born_deviation(&a, &b).map_err(|e| ScenarioError::Degenerate(e.to_string()))?;
        sweep_dev = sweep_dev.max(d);
        sweep_stoch = sweep_stoch.max(st);
    }
    r.check(Check::count("random_pairs", random_pairs, random_pairs));
    r.check(Check::residual("random_born_oracle_deviation", sweep_dev, tol));
    r.check(Check::residual("random_born_stochasticity_defect", sweep_stoch, tol));

    // catalog uniqueness over mutually non-collinear directions
    let mut distinct: Vec<&Direction> = Vec::new();
    for d in directions {
        if distinct.iter().all(|e| (1.0 - e.dot(d).abs()) > 1e-9) {
            distinct.push(d);
        } else {
            r.note(format!("direction {} is collinear with an earlier one; left out of the catalog", d.label));
        }
    }
    let catalog: Vec<CatalogEntry<f64>> = distinct
        .iter()
        .flat_map(|d| {
            spin_states::<f64>(d).into_iter().enumerate().map(|(k, v)| CatalogEntry {
                focus: d.label.clone(),
                index: k,
                value: [-1.0, 1.0][k],
                state: v,
                level_set: None,
            })
        })
        .collect();
    let ambiguous = catalog
        .iter()
        .filter(|e| {
            !matches!(interpret_state(&e.state, &catalog, 1e-9), Ok(i) if i.matches.len() == 1 && i.matches[0].0 == e.focus && i.matches[0].1 == e.index)
        })
        .count();
    r.check(Check::count("catalog_entries", catalog.len(), 2 * distinct.len()));
    r.check(Check::count("catalog_ambiguous_states", ambiguous, 0));

    // any unit vector is the +1 state along its Bloch direction
    let sigma = crate::spin::pauli::<f64>();
    let mut coverage = 0.0f64;
    for _ in 0..random_pairs {
        let v = random_state(2, &mut rng);
        let bloch = sigma.clone().map(|m| (v.adjoint() * m * &v)[(0, 0)].re);
        let up = spin_states::<f64>(&Direction::new("bloch", bloch))[1].clone();
        coverage = coverage.max(ray_distance(&v, &up));
    }
    r.check(Check::residual("unit_vectors_are_spin_states", coverage, tol));
    r.table(born);
    Ok(r)
}

// --------------------------------------------------------------------- cube

/// The cube model pipeline; every check is exact.
pub fn run_cube_model(s: &Settings) -> ScenarioReport {
    let mut r = ScenarioReport::new("cube", s.seed);
    let cube = cube_rotation_group();
    let group = cube.group();
    let action = &cube.action;
    r.check(Check::count("group_order", group.order(), 24));
    r.check(Check::count("points", action.points(), 8));
    r.check(Check::count("vertex_orbits", action.orbits().len(), 1));
    let rho = action.invariant_measure();
    r.check(Check::holds("invariant_measure_uniform", rho.weights().iter().all(|w| *w == Exact::new(1, 8))));
    r.check(Check::holds("invariant_measure_invariant", rho.is_invariant(action)));
    r.check(Check::holds("invariant_measure_unique", rho.unique));

    let params: Vec<_> = (0..3).map(|a| cube.sign_parameter(a)).collect();
    let mut subgroups = Table::new("subgroups", &["axis", "order", "elements"]);
    let mut gens = Vec::new();
    for p in &params {
        let sub = maximal_permissible_subgroup(p, action);
        r.check(Check::count(format!("G^{}_order", p.label()), sub.order(), 8));
        r.check(Check::holds(format!("G^{}_permissible", p.label()), is_permissible(p, action, &sub).is_ok()));
        let reduced = reduce_to_orbit(p, action, 0);
        let ok = matches!(&reduced, Ok(red) if red.parameter.values() == [-1.0, 1.0] && red.domain.len() == 8);
        r.check(Check::count(format!("{}_value_orbits", p.label()), value_orbits(p, action).len(), 1));
        r.check(Check::holds(format!("{}_reduces_to_pm1", p.label()), ok));
        subgroups.push(vec![
            p.label().to_string(),
            sub.order().to_string(),
            sub.elements().iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
        ]);
        gens.extend_from_slice(sub.elements());
    }
    let generated = group.generated_subgroup(&gens).map(|g| g.order()).unwrap_or(0);
    r.check(Check::count("subgroups_generate_group", generated, 24));

    let u: UnitaryFamily<f64> = regular_representation(action, &rho).expect("uniform measure is invariant");
    r.check(Check::residual("regular_representation_defect", u.homomorphism_defect(), 0.0));
    let spaces: Vec<_> = params
        .iter()
        .map(|p| build_parametric_space::<f64>(p, &rho).expect("uniform measure charges every level"))
        .collect();
    let (mut transitions, mut conjugate, mut aligned, mut transport) = (0, 0, 0, 0.0f64);
    for (i, a) in params.iter().enumerate() {
        for (j, b) in params.iter().enumerate() {
            if i == j {
                continue;
            }
            let Some(g) = find_transition(a, b, action) else { continue };
            transitions += 1;
            let Ok(rep) = verify_coupling(a, b, action, g) else { continue };
            conjugate += usize::from(rep.subgroups_conjugate);
            if let Some(al) = rep.value_alignment {
                aligned += 1;
                transport = transport.max(transport_check(&spaces[i], &spaces[j], &u, g, &al));
            } else {
                transport = f64::INFINITY;
            }
        }
    }
    r.check(Check::count("axis_pairs_with_transition", transitions, 6));
    r.check(Check::count("axis_pairs_conjugate_subgroups", conjugate, 6));
    r.check(Check::count("axis_pairs_aligned_values", aligned, 6));
    r.check(Check::residual("indicator_transport_residual", transport, 0.0));

    let table = cube_character_table::<f64>(group);
    r.check(Check::holds("character_table_valid", table.validate(group, 1e-12).is_ok()));
    let mut iso = Table::new("isotypic", &["irrep", "degree", "multiplicity", "dimension"]);
    let expected = [("A1", 1), ("A2", 1), ("E", 0), ("T1", 3), ("T2", 3)];
    match isotypic_projectors(&u, &table) {
        Ok(comps) => {
            for c in &comps {
                iso.push(vec![
                    c.name.clone(),
                    c.degree.to_string(),
                    c.multiplicity.to_string(),
                    c.dimension.to_string(),
                ]);
                if let Some(&(_, d)) = expected.iter().find(|(n, _)| *n == c.name) {
                    r.check(Check::count(format!("isotypic_dim_{}", c.name), c.dimension, d));
                }
            }
            r.check(Check::count("isotypic_total", comps.iter().map(|c| c.dimension).sum(), 8));
        }
        Err(_) => r.check(Check::holds("isotypic_projectors", false)),
    }
    r.table(subgroups);
    r.table(iso);
    r
}

// ------------------------------------------------------------------ coupled

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupledConfig {
    pub samples: usize,
    pub max_prefix: usize,
    /// Seed of the random frame in the negative control; defaults to the run seed.
    pub corrupt_seed: Option<u64>,
}

impl Default for CoupledConfig {
    fn default() -> Self {
        let d = SamplingConfig::default();
        CoupledConfig {
            samples: d.samples,
            max_prefix: d.max_prefix,
            corrupt_seed: None,
        }
    }
}

/// The three axis foci of the cube with transitions from `z`.
pub fn spin_foci() -> Vec<Focus> {
    let cube = cube_rotation_group();
    let z = cube.sign_parameter(2);
    [2usize, 0, 1]
        .iter()
        .map(|&axis| {
            let p = cube.sign_parameter(axis);
            Focus {
                label: p.label().to_string(),
                subgroup: maximal_permissible_subgroup(&p, &cube.action),
                transition: find_transition(&z, &p, &cube.action).expect("axes are coupled"),
            }
        })
        .collect()
}

/// SU(2) lifts of the cube rotations, a projective representation.
pub fn spin_half_family() -> UnitaryFamily<f64> {
    let cube = cube_rotation_group();
    let ms = cube.group().elements().map(|g| su2_lift(&cube.rotation_f64(g))).collect();
    UnitaryFamily::new(cube.group().clone(), ms).expect("one matrix per element")
}

pub fn run_coupled(c: &CoupledConfig, s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    let mut r = ScenarioReport::new("coupled", s.seed);
    let tol = s.tol(1e-8);
    let u = spin_half_family();
    let foci = spin_foci();
    let sampling = SamplingConfig {
        samples: c.samples,
        seed: s.seed,
        max_prefix: c.max_prefix,
    };
    let basis = columns(&CMatrix::identity(2, 2));
    let bad = |e: crate::quantum_space::SpaceError| ScenarioError::Degenerate(e.to_string());
    r.check(Check::residual("lift_projective_defect", u.projective_defect(), tol));
    let good = build_coupled_representation(&u, &foci, &CMatrix::identity(2, 2), &basis, &sampling).map_err(bad)?;
    r.check(Check::count("factorizations_checked", good.factorizations_checked, 24 * c.samples));
    r.check(Check::residual("discrepancy", good.discrepancy, tol));
    r.check(Check::residual("invariance_leakage", good.leakage, tol));
    r.check(Check::residual("homomorphism_defect_mod_phase", good.homomorphism_defect, tol));

    let mut rng = ChaCha8Rng::seed_from_u64(c.corrupt_seed.unwrap_or(s.seed));
    let w0 = haar_unitary::<f64, _>(2, &mut rng);
    let corrupted = build_coupled_representation(&u, &foci, &w0, &basis, &sampling).map_err(bad)?;
    r.check(Check::new(
        "corrupted_discrepancy",
        corrupted.discrepancy,
        1e-3,
        0.0,
        crate::report::Relation::AtLeast,
    ));
    r.check(Check::holds("corrupted_control_rejected", !corrupted.passes(tol)));
    r.note("negative control: a Haar-random frame W0 in place of the identity");
    Ok(r)
}

// -------------------------------------------------------------- measurement

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub random_tables: usize,
    pub max_dim: usize,
    pub max_outcomes: usize,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            random_tables: 50,
            max_dim: 5,
            max_outcomes: 4,
        }
    }
}

fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn run_measurement(c: &MeasurementConfig, s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    if c.max_dim < 2 || c.max_outcomes < 1 {
        return Err(ScenarioError::BadConfig("max_dim ≥ 2 and max_outcomes ≥ 1 are required".into()));
    }
    let mut r = ScenarioReport::new("measurement", s.seed);
    let tol = s.tol(1e-10);
    let mut rng = s.rng();
    let fail = |e: MeasurementError| ScenarioError::Degenerate(e.to_string());
    let (mut complete, mut predictive, mut invalid_collapse, mut recovery) = (0.0f64, 0.0f64, 0usize, 0.0f64);
    for _ in 0..c.random_tables {
        let n = rng.random_range(2..=c.max_dim);
        let m = rng.random_range(1..=c.max_outcomes);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(m, &mut rng)).collect();
        let table = LikelihoodTable::new((0..m).map(|y| format!("y{y}")).collect(), rows).map_err(fail)?;
        let states = columns(&haar_unitary::<f64, _>(n, &mut rng));
        let povm = build_povm(&states, &table).map_err(fail)?;
        complete = complete.max(completeness_defect(&povm));

        let prior = random_simplex(n, &mut rng);
        let sigma = density_from_prior(&states, &prior).map_err(fail)?;
        let p = predictive_distribution(&sigma, &povm).map_err(fail)?;
        predictive = predictive.max((p.iter().sum::<f64>() - 1.0).abs());

        let other = columns(&haar_unitary::<f64, _>(n, &mut rng));
        let v = random_state(n, &mut rng);
        invalid_collapse += usize::from(!matches!(collapse(&v, &other, None), Ok(Collapse::Mixed(_))));
        invalid_collapse += usize::from(dephase(&sigma, &other).is_err());

        // distinct weights so the decomposition is unique
        let mut sorted = prior.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).all(|w| w[0] - w[1] > 1e-6) {
            let (rs, rp) = recover_from_density(&sigma).map_err(fail)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| prior[j].total_cmp(&prior[i]));
            for (k, &i) in order.iter().enumerate() {
                recovery = recovery.max((rp[k] - prior[i]).abs()).max(ray_distance(&rs[k], &states[i]));
            }
        }
    }
    r.check(Check::count("random_tables", c.random_tables, c.random_tables));
    r.check(Check::residual("povm_completeness_defect", complete, tol));
    r.check(Check::residual("predictive_normalization_defect", predictive, tol));
    r.check(Check::count("invalid_collapsed_states", invalid_collapse, 0));
    r.check(Check::residual("density_recovery_residual", recovery, tol));

    let half = DensityOperator::new(CMatrix::<f64>::identity(2, 2) * re(0.5)).map_err(fail)?;
    r.check(Check::holds(
        "maximally_mixed_is_ambiguous",
        matches!(recover_from_density(&half), Err(MeasurementError::AmbiguousDecomposition { .. })),
    ));
    Ok(r)
}

// ----------------------------------------------------------------- dynamics

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub random_hamiltonians: usize,
    pub max_dim: usize,
    pub lattice_sites: usize,
    pub band_limit: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            random_hamiltonians: 20,
            max_dim: 8,
            lattice_sites: 64,
            band_limit: 8,
        }
    }
}

pub fn run_dynamics(c: &DynamicsConfig, s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    if c.max_dim < 2 {
        return Err(ScenarioError::BadConfig("max_dim ≥ 2 is required".into()));
    }
    let mut r = ScenarioReport::new("dynamics", s.seed);
    let mut rng = s.rng();
    let fail = |e: crate::dynamics::DynamicsError| ScenarioError::Degenerate(e.to_string());
    let (mut norm, mut group, mut tracking, mut spectrum, mut schrodinger) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..c.random_hamiltonians {
        let n = rng.random_range(2..=c.max_dim);
        let h = Hamiltonian::new(random_hermitian(n, &mut rng)).map_err(fail)?;
        let v0 = random_state(n, &mut rng);
        let t = rng.random_range(-10.0..10.0);
        let u = rng.random_range(-10.0..10.0);
        let vt = evolve_state(&v0, &h, t).map_err(fail)?;
        norm = norm.max((vt.norm() - 1.0).abs());
        let two_step = evolve_state(&vt, &h, u).map_err(fail)?;
        group = group.max(max_abs_diff_vec(&two_step, &evolve_state(&v0, &h, t + u).map_err(fail)?));

        let obs = random_hermitian(n, &mut rng);
        let eig = crate::scalar::HermitianEigen::new(&obs);
        let obs_t = heisenberg_operator(&obs, &h, t).map_err(fail)?;
        for k in 0..n {
            let e = eig.vectors.column(k).into_owned();
            let et = evolve_state(&e, &h, t).map_err(fail)?;
            tracking = tracking.max((&obs_t * &et - &et * re(eig.values[k])).norm());
        }
        let eig_t = crate::scalar::HermitianEigen::new(&obs_t);
        for k in 0..n {
            spectrum = spectrum.max((eig_t.values[k] - eig.values[k]).abs());
        }
        let dt = 1e-4;
        schrodinger = schrodinger.max(schrodinger_residual(&v0, &h, t, dt).map_err(fail)?);
    }
    let tol = |d| s.tol(d);
    r.check(Check::count("random_hamiltonians", c.random_hamiltonians, c.random_hamiltonians));
    r.check(Check::residual("norm_defect", norm, tol(1e-10)));
    r.check(Check::residual("group_property_defect", group, tol(1e-9)));
    r.check(Check::residual("eigen_tracking_residual", tracking, tol(1e-9)));
    r.check(Check::residual("heisenberg_spectrum_shift", spectrum, tol(1e-10)));
    r.check(Check::residual("schrodinger_difference_residual", schrodinger, tol(1e-5)));

    // spin precession: H = σ_z / 2 turns x-up into x-down at t = π
    let [_, x_up] = spin_states::<f64>(&Direction::x());
    let [x_down, _] = spin_states::<f64>(&Direction::x());
    let h = Hamiltonian::new(spin_operator::<f64>(&[0.0, 0.0, 0.5])).map_err(fail)?;
    let flipped = evolve_state(&x_up, &h, PI).map_err(fail)?;
    r.check(Check::residual("precession_half_turn", ray_distance(&flipped, &x_down), tol(1e-10)));
    let times: Vec<f64> = (0..=16).map(|k| PI * k as f64 / 8.0).collect();
    let trace = evolution_trace(&x_up, &h, &times).map_err(fail)?;
    let csv = trace_to_csv(&trace);
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = rdr.headers().expect("header").iter().map(str::to_string).collect();
    let mut trace_table = Table {
        name: "precession".into(),
        header,
        rows: Vec::new(),
    };
    for rec in rdr.records() {
        trace_table.push(rec.expect("in-memory csv").iter().map(str::to_string).collect());
    }

    let lattice = Lattice::new(c.lattice_sites, 1.0).map_err(fail)?;
    let gen = translation_generator::<f64>(&lattice, 1.0).map_err(fail)?;
    let n = lattice.sites();
    let kmax = c.band_limit.min(n / 2 - 1) as i64;
    let mut q = CVector::<f64>::zeros(n);
    for k in -kmax..=kmax {
        let coef = Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
        q += lattice.fourier_mode::<f64>(k) * coef;
    }
    let step = gen.translation_by(lattice.spacing());
    r.check(Check::residual("lattice_translation_residual", max_abs_diff_vec(&(&step * &q), &(&gen.shift * &q)), tol(1e-8)));
    let period = gen.translation_by(lattice.period());
    r.check(Check::residual(
        "lattice_full_period_residual",
        max_abs_diff(&period, &CMatrix::identity(n, n)),
        tol(1e-8),
    ));
    let ones = CVector::<f64>::from_element(n, re(1.0));
    r.check(Check::residual("lattice_constant_fixed", max_abs_diff_vec(&(&step * &ones), &ones), tol(1e-8)));
    r.table(trace_table);
    Ok(r)
}

// ------------------------------------------------------------------ singlet

/// `(|+−⟩ − |−+⟩)/√2` in the z basis, first factor most significant.
pub fn singlet_state() -> CVector<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![re(0.0), re(h), re(-h), re(0.0)])
}

fn kron(a: &CVector<f64>, b: &CVector<f64>) -> CVector<f64> {
    CVector::from_fn(a.len() * b.len(), |i, _| a[i / b.len()] * b[i % b.len()])
}

/// `P[s][t]` for outcome indices of `a·σ` on particle 1 and `b·σ` on
/// particle 2 (index 0 ↔ −1, 1 ↔ +1), from the tensor-product state.
pub fn singlet_joint(a: &Direction, b: &Direction) -> [[f64; 2]; 2] {
    let psi = singlet_state();
    let (sa, sb) = (spin_states::<f64>(a), spin_states::<f64>(b));
    let mut p = [[0.0; 2]; 2];
    for (s, va) in sa.iter().enumerate() {
        for (t, vb) in sb.iter().enumerate() {
            p[s][t] = kron(va, vb).dotc(&psi).norm_sqr();
        }
    }
    p
}

/// `E(λ^a μ^b) = Σ st P(s, t)`.
pub fn singlet_correlation(a: &Direction, b: &Direction) -> f64 {
    let p = singlet_joint(a, b);
    p[1][1] + p[0][0] - p[0][1] - p[1][0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingletConfig {
    pub a: Direction,
    pub b: Direction,
    pub random_pairs: usize,
}

impl Default for SingletConfig {
    fn default() -> Self {
        SingletConfig {
            a: Direction::z(),
            b: Direction::planar("b60", 60.0),
            random_pairs: 100,
        }
    }
}

pub fn run_singlet_epr(a: &Direction, b: &Direction, random_pairs: usize, s: &Settings) -> ScenarioReport {
    let mut r = ScenarioReport::new("singlet", s.seed);
    let tol = s.tol(1e-10);
    let same = singlet_joint(a, a);
    r.check(Check::residual("equal_settings_same_sign", same[0][0] + same[1][1], s.tol(1e-12)));
    let p = singlet_joint(a, b);
    let mut joint = Table::new("joint", &["lambda_a", "mu_b", "probability"]);
    for (si, sv) in ["-1", "+1"].iter().enumerate() {
        for (ti, tv) in ["-1", "+1"].iter().enumerate() {
            joint.push(vec![sv.to_string(), tv.to_string(), format!("{:.15}", p[si][ti])]);
        }
    }
    r.check(Check::within("correlation", singlet_correlation(a, b), -a.dot(b), tol));
    // the oracle P(s, t) = (1 − st a·b)/4
    let mut oracle = 0.0f64;
    for (si, sv) in [-1.0, 1.0].iter().enumerate() {
        for (ti, tv) in [-1.0, 1.0].iter().enumerate() {
            oracle = oracle.max((p[si][ti] - (1.0 - sv * tv * a.dot(b)) / 4.0).abs());
        }
    }
    r.check(Check::residual("joint_oracle_deviation", oracle, tol));

    // conditional state of particle 2 after λ^a = k is v^a_{−k}
    let psi = singlet_state();
    let sa = spin_states::<f64>(a);
    let mut conditional = 0.0f64;
    for k in 0..2 {
        // (⟨v_k^a| ⊗ I) ψ
        let partner = CVector::from_fn(2, |t, _| {
            let basis_t = CVector::from_fn(2, |i, _| if i == t { re(1.0) } else { Complex::zero() });
            kron(&sa[k], &basis_t).dotc(&psi)
        });
        let n = partner.norm();
        conditional = conditional.max(ray_distance(&(partner / re(n)), &sa[1 - k]));
    }
    r.check(Check::residual("conditional_partner_state", conditional, tol));

    let mut rng = s.rng();
    let (mut corr, mut signalling, mut anti) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..random_pairs {
        let (a1, a2, b1) = (
            random_direction("a", &mut rng),
            random_direction("a'", &mut rng),
            random_direction("b", &mut rng),
        );
        corr = corr.max((singlet_correlation(&a1, &b1) + a1.dot(&b1)).abs());
        let (p1, p2) = (singlet_joint(&a1, &b1), singlet_joint(&a2, &b1));
        for t in 0..2 {
            signalling = signalling.max((p1[0][t] + p1[1][t] - p2[0][t] - p2[1][t]).abs());
        }
        let same = singlet_joint(&a1, &a1);
        anti = anti.max(same[0][0] + same[1][1]);
    }
    r.check(Check::count("random_pairs", random_pairs, random_pairs));
    r.check(Check::residual("random_correlation_deviation", corr, tol));
    r.check(Check::residual("no_signalling_deviation", signalling, s.tol(1e-12)));
    r.check(Check::residual("random_equal_settings_same_sign", anti, s.tol(1e-12)));
    r.note("joint distribution from the two-particle tensor-product singlet, used as an oracle");
    r.note("the sum of the two c-variables is treated as accessible without a construction");
    r.table(joint);
    r
}

// --------------------------------------------------------------------- chsh

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshConfig {
    pub a: Direction,
    pub a_prime: Direction,
    pub b: Direction,
    pub b_prime: Direction,
    /// Grid steps per angle in the numerical search.
    pub grid: usize,
}

impl Default for ChshConfig {
    fn default() -> Self {
        ChshConfig {
            a: Direction::planar("a", 0.0),
            a_prime: Direction::planar("a'", 90.0),
            b: Direction::planar("b", 135.0),
            b_prime: Direction::planar("b'", 45.0),
            grid: 24,
        }
    }
}

/// `E(ab) − E(ab') − E(a'b) − E(a'b')` from singlet correlations.
pub fn chsh_combination(a: &Direction, a2: &Direction, b: &Direction, b2: &Direction) -> f64 {
    singlet_correlation(a, b) - singlet_correlation(a, b2) - singlet_correlation(a2, b) - singlet_correlation(a2, b2)
}

/// `max (xy − xy' − x'y − x'y' − 2)` over `{±1}⁴` and the number of
/// assignments attaining it.
pub fn pointwise_chsh_margin() -> (i32, usize) {
    let signs = [-1i32, 1];
    let mut worst = i32::MIN;
    let mut hits = 0;
    for x in signs {
        for x2 in signs {
            for y in signs {
                for y2 in signs {
                    let gap = x * y - (x * y2 + x2 * y + x2 * y2 + 2);
                    match gap.cmp(&worst) {
                        std::cmp::Ordering::Greater => {
                            worst = gap;
                            hits = 1;
                        }
                        std::cmp::Ordering::Equal => hits += 1,
                        std::cmp::Ordering::Less => {}
                    }
                }
            }
        }
    }
    (worst, hits)
}

fn planar_chsh(angles: &[f64; 4]) -> f64 {
    let d: Vec<Direction> = angles.iter().map(|&t| Direction::planar("", t.to_degrees())).collect();
    chsh_combination(&d[0], &d[1], &d[2], &d[3])
}

/// Grid search over four planar angles, then a shrinking pattern search.
pub fn maximize_planar_chsh(grid: usize) -> (f64, [f64; 4]) {
    let steps = grid.max(2);
    let h = 2.0 * PI / steps as f64;
    let dirs: Vec<Direction> = (0..steps).map(|i| Direction::planar("", (i as f64 * h).to_degrees())).collect();
    let corr: Vec<Vec<f64>> = dirs.iter().map(|a| dirs.iter().map(|b| singlet_correlation(a, b)).collect()).collect();
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    for i in 0..steps {
        for j in 0..steps {
            for k in 0..steps {
                for l in 0..steps {
                    let v = corr[i][k] - corr[i][l] - corr[j][k] - corr[j][l];
                    if v > best.0 {
                        best = (v, [i, j, k, l].map(|n| n as f64 * h));
                    }
                }
            }
        }
    }
    let mut step = h / 2.0;
    while step > 1e-10 {
        let mut improved = false;
        for d in 0..4 {
            for sign in [-1.0, 1.0] {
                let mut x = best.1;
                x[d] += sign * step;
                let v = planar_chsh(&x);
                if v > best.0 {
                    best = (v, x);
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best
}

pub fn run_chsh(a: &Direction, a2: &Direction, b: &Direction, b2: &Direction, grid: usize, s: &Settings) -> ScenarioReport {
    let mut r = ScenarioReport::new("chsh", s.seed);
    let tol = s.tol(1e-9);
    let (margin, hits) = pointwise_chsh_margin();
    r.check(Check::count("sign_assignments_checked", 16, 16));
    r.check(Check::within("pointwise_max_lhs_minus_rhs", f64::from(margin), 0.0, 0.0));
    r.note(format!("{hits} of 16 sign assignments attain equality in the pointwise bound"));

    let value = chsh_combination(a, a2, b, b2);
    let bound = 2.0 * 2f64.sqrt();
    r.check(Check::within("quantum_combination", value, bound, tol));
    r.check(Check::holds("classical_bound_violated", value > 2.0));

    let degenerate = chsh_combination(a, a, b, b);
    r.check(Check::new(
        "equal_settings_magnitude",
        degenerate.abs(),
        2.0,
        tol,
        crate::report::Relation::AtMost,
    ));
    let (max, angles) = maximize_planar_chsh(grid);
    r.check(Check::at_least("planar_maximum", max, bound - s.tol(1e-6)));
    r.check(Check::new("planar_maximum_not_above_tsirelson", max, bound, tol, crate::report::Relation::AtMost));
    r.note(format!(
        "maximizing angles (deg): {}",
        angles.iter().map(|t| format!("{:.6}", t.to_degrees().rem_euclid(360.0))).collect::<Vec<_>>().join(", ")
    ));
    let mut sweep = Table::new("correlation_sweep", &["angle_deg", "correlation", "minus_cos"]);
    let z = Direction::planar("a", 0.0);
    for k in 0..=24 {
        let deg = 15.0 * k as f64;
        sweep.push(vec![
            format!("{deg}"),
            format!("{:.15}", singlet_correlation(&z, &Direction::planar("b", deg))),
            format!("{:.15}", -deg.to_radians().cos()),
        ]);
    }
    r.table(sweep);
    r
}

// --------------------------------------------------------------- latent EPR

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatentConfig {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub noise: f64,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentConfig {
            t: vec![1.0, 0.0, 0.0, 0.0],
            u: vec![1.0, 1.0, 0.0, 0.0],
            a: vec![1.0, 2.0],
            b: vec![3.0, 4.0],
            noise: 1e-6,
        }
    }
}

/// Residuals of one latent-variable recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRecovery {
    /// `max |M/‖M‖ − bb'/‖bb'‖|` for `M = ((I−P)Z)'(I−P)Z`.
    pub outer_b_residual: f64,
    /// Same for `vv'` from `(I−P)Z((I−P)Z)'`.
    pub outer_v_residual: f64,
    /// `|(I−P)u − (u − (t·u/t't) t)|`.
    pub projection_residual: f64,
    /// `(I−P)Z` is unchanged when `u` moves along `t`.
    pub shift_invariance: f64,
    /// Dimension of what stays unknown about `u`.
    pub unidentified_dim: usize,
}

fn normalized_outer(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.norm();
    m / n
}

fn projector_onto(t: &DVector<f64>) -> Result<DMatrix<f64>, ScenarioError> {
    let tt = t.dot(t);
    if tt == 0.0 {
        return Err(ScenarioError::SingularProjection);
    }
    Ok(t * t.transpose() / tt)
}

/// Recover `bb'` from `Z = ta' + ub' + noise·E` knowing only `t`.
pub fn latent_recovery(
    t: &DVector<f64>,
    u: &DVector<f64>,
    a: &DVector<f64>,
    b: &DVector<f64>,
    noise: &DMatrix<f64>,
) -> Result<LatentRecovery, ScenarioError> {
    let n = t.len();
    let p = projector_onto(t)?;
    let complement = DMatrix::identity(n, n) - &p;
    let z = |u: &DVector<f64>| t * a.transpose() + u * b.transpose() + noise;
    let rz = &complement * z(u);
    let v = u - t * (t.dot(u) / t.dot(t));
    if v.norm() == 0.0 {
        return Err(ScenarioError::Degenerate("u lies in span(t); nothing about b is observable".into()));
    }
    if b.norm() == 0.0 {
        return Err(ScenarioError::Degenerate("b = 0".into()));
    }
    let m = rz.transpose() * &rz;
    let bb = b * b.transpose();
    let vv = &v * v.transpose();
    Ok(LatentRecovery {
        outer_b_residual: (normalized_outer(&m) - normalized_outer(&bb)).amax(),
        outer_v_residual: (normalized_outer(&(&rz * rz.transpose())) - normalized_outer(&vv)).amax(),
        projection_residual: (&complement * u - &v).amax(),
        shift_invariance: (&complement * z(&(u + t * 1.7)) - &rz).amax(),
        unidentified_dim: p.rank(1e-12),
    })
}

pub fn run_latent_epr(c: &LatentConfig, s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    let (n, pdim) = (c.t.len(), c.a.len());
    if n < 2 || pdim < 2 || c.u.len() != n || c.b.len() != pdim {
        return Err(ScenarioError::BadConfig("t, u need length n ≥ 2 and a, b length p ≥ 2".into()));
    }
    let mut r = ScenarioReport::new("latent-epr", s.seed);
    let (t, u, a, b) = (
        DVector::from_vec(c.t.clone()),
        DVector::from_vec(c.u.clone()),
        DVector::from_vec(c.a.clone()),
        DVector::from_vec(c.b.clone()),
    );
    let exact = latent_recovery(&t, &u, &a, &b, &DMatrix::zeros(n, pdim))?;
    let tol = s.tol(1e-12);
    r.check(Check::residual("outer_b_residual", exact.outer_b_residual, tol));
    r.check(Check::residual("outer_v_residual", exact.outer_v_residual, tol));
    r.check(Check::residual("projection_residual", exact.projection_residual, tol));
    r.check(Check::residual("u_shift_along_t_invisible", exact.shift_invariance, tol));
    r.check(Check::count("unidentified_dimension_of_u", exact.unidentified_dim, 1));

    // measuring a instead: Z (I − Q) = u w' with w = (I − Q) b
    let zt = &t * a.transpose() + &u * b.transpose();
    let mirror = latent_recovery(&a, &b, &t, &u, &DMatrix::zeros(pdim, n));
    match mirror {
        Ok(m) => {
            let direct = {
                let q = projector_onto(&a)?;
                let right = &zt * (DMatrix::identity(pdim, pdim) - q);
                let uu = &u * u.transpose();
                (normalized_outer(&(&right * right.transpose())) - normalized_outer(&uu)).amax()
            };
            r.check(Check::residual("mirror_outer_u_residual", direct, tol));
            r.check(Check::residual("mirror_outer_u_via_transpose", m.outer_b_residual, tol));
            r.check(Check::count("mirror_unidentified_dimension_of_b", m.unidentified_dim, 1));
        }
        Err(ScenarioError::Degenerate(msg)) => r.note(format!("mirror analysis skipped: {msg}")),
        Err(e) => return Err(e),
    }

    if c.noise > 0.0 {
        let mut rng = s.rng();
        let e = DMatrix::from_fn(n, pdim, |_, _| c.noise * rng.sample::<f64, _>(StandardNormal));
        let noisy = latent_recovery(&t, &u, &a, &b, &e)?;
        r.check(Check::residual("noisy_outer_b_residual", noisy.outer_b_residual, s.tol(1e-4)));
        r.note(format!("noise scale {}", c.noise));
    }
    Ok(r)
}

// ------------------------------------------------------------------- pitman

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitmanConfig {
    /// Location noise on `Z_n` as rationals such as `"1/5"`.
    pub noise: Vec<String>,
}

impl Default for PitmanConfig {
    fn default() -> Self {
        PitmanConfig {
            noise: ["1/2", "1/5", "1/10", "1/10", "1/10"].map(String::from).to_vec(),
        }
    }
}

pub fn run_pitman_demo(noise: &[String], s: &Settings) -> Result<ScenarioReport, ScenarioError> {
    let noise: Vec<Exact> = noise
        .iter()
        .map(|q| q.trim().parse::<Exact>().map_err(|_| ScenarioError::BadConfig(format!("not a rational: {q:?}"))))
        .collect::<Result<_, _>>()?;
    let n = noise.len();
    let bad = |e: crate::inference::InferenceError| ScenarioError::BadConfig(e.to_string());
    let model = location_model(noise).map_err(bad)?;
    let loss = LossFunction::squared_cyclic(n);
    let best = brute_force_best_equivariant(&model, &loss).map_err(bad)?;
    let mut r = ScenarioReport::new("pitman", s.seed);

    let group = model.y_action().group();
    let mut failures = 0;
    for y in 0..n {
        for g in group.elements() {
            let lhs = best.pitman.at(model.y_action().act(y, g));
            failures += usize::from(lhs != model.theta_action().act(best.pitman.at(y), g));
        }
    }
    r.check(Check::count("equivariance_pairs_checked", n * group.order(), n * n));
    r.check(Check::count("equivariance_failures", failures, 0));
    r.check(Check::count("equivariant_candidates", best.candidates.len(), n));
    let constant = best.candidates.iter().all(|c| c.risks.iter().all(|x| *x == c.risks[0]));
    r.check(Check::holds("candidate_risks_constant", constant));
    let pitman_profile = risk_profile(&best.pitman, &model, &loss);
    r.check(Check::holds("pitman_risk_constant", pitman_profile.iter().all(|x| *x == pitman_profile[0])));
    r.check(Check::within(
        "pitman_risk_vs_best",
        crate::inference::Probability::to_f64(&best.pitman_risk),
        crate::inference::Probability::to_f64(&best.best_risk),
        0.0,
    ));
    r.check(Check::holds("pitman_risk_equals_best_exactly", best.pitman_risk == best.best_risk));
    r.note(format!("pitman risk {} (exact), best candidate {}", best.pitman_risk, best.best_risk));
    for y in 0..n {
        let single = pitman_estimate(&model, &loss, y).map_err(bad)?;
        let pooled = best.pitman.at(y);
        if single != pooled {
            r.note(format!("y = {y}: tie resolved to {pooled} for equivariance (smallest index is {single})"));
        }
    }

    // on Z2 label distance is already cyclic distance
    if n > 2 {
        let naive = LossFunction::<Exact>::squared_label(n);
        r.check(Check::holds(
            "label_quadratic_loss_rejected",
            matches!(pitman_estimate(&model, &naive, 0), Err(crate::inference::InferenceError::NonInvariantLoss { .. })),
        ));
    }

    let mut delta = vec![Exact::zero(); n];
    delta[0] = Exact::from_integer(1);
    let perfect = location_model(delta).map_err(bad)?;
    let perfect_best = brute_force_best_equivariant(&perfect, &loss).map_err(bad)?;
    r.check(Check::holds("perfect_noise_risk_zero", perfect_best.pitman_risk.is_zero()));

    let mut estimator = Table::new("pitman_estimator", &["y", "estimate"]);
    for y in 0..n {
        estimator.push(vec![y.to_string(), best.pitman.at(y).to_string()]);
    }
    let csv = risk_table_csv(&best.candidates);
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let mut risks = Table::new("risk", &["reference_value", "theta", "risk"]);
    for rec in rdr.records() {
        risks.push(rec.expect("in-memory csv").iter().map(str::to_string).collect());
    }
    r.table(estimator);
    r.table(risks);
    Ok(r)
}

// ------------------------------------------------------------------- verify

/// Group, action, measure, parameter and coupling checks on a model file.
pub fn verify_model(model: &Model, s: &Settings) -> ScenarioReport {
    let mut r = ScenarioReport::new("verify", s.seed);
    let action = &model.action;
    let group = model.group();
    let tol = s.tol(1e-12);
    r.check(Check::holds("group_axioms", true));
    r.check(Check::holds("action_laws", true));
    let orbits = action.orbits();
    r.check(Check::holds("orbits_partition_points", orbits.is_partition_of(action.points())));
    r.note(format!("group order {}, {} points, {} orbits", group.order(), action.points(), orbits.len()));
    let rho = action.invariant_measure();
    r.check(Check::holds("invariant_measure_invariant", rho.is_invariant(action)));
    r.check(Check::holds("invariant_measure_probability", rho.is_probability()));
    if !rho.unique {
        r.note("action is not transitive: the invariant probability measure is not unique");
    }
    match regular_representation::<f64>(action, &rho) {
        Ok(u) => {
            r.check(Check::residual("regular_representation_defect", u.homomorphism_defect(), tol));
            let mut spaces = Vec::new();
            let mut subgroups = Table::new("subgroups", &["parameter", "order", "elements"]);
            let mut gens = Vec::new();
            for p in &model.parameters {
                let sub = maximal_permissible_subgroup(p, action);
                subgroups.push(vec![
                    p.label().to_string(),
                    sub.order().to_string(),
                    sub.elements().iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                ]);
                gens.extend_from_slice(sub.elements());
                match build_parametric_space::<f64>(p, &rho) {
                    Ok(space) => {
                        r.check(Check::residual(
                            format!("{}_basis_orthonormality", p.label()),
                            orthonormality_defect(&space.orthonormal_basis()),
                            tol,
                        ));
                        spaces.push(Some(space));
                    }
                    Err(e) => {
                        r.check(Check::holds(format!("{}_space_nondegenerate", p.label()), false));
                        r.note(e.to_string());
                        spaces.push(None);
                    }
                }
            }
            for (i, a) in model.parameters.iter().enumerate() {
                for (j, b) in model.parameters.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let name = format!("{}_{}", a.label(), b.label());
                    let g = find_transition(a, b, action);
                    r.check(Check::holds(format!("transition_{name}"), g.is_some()));
                    let Some(g) = g else { continue };
                    match verify_coupling(a, b, action, g) {
                        Ok(rep) => {
                            r.check(Check::holds(format!("conjugate_subgroups_{name}"), rep.subgroups_conjugate));
                            r.check(Check::holds(format!("aligned_values_{name}"), rep.value_alignment.is_some()));
                            if let (Some(al), Some(sa), Some(sb)) = (&rep.value_alignment, &spaces[i], &spaces[j]) {
                                r.check(Check::residual(format!("transport_{name}"), transport_check(sa, sb, &u, g, al), tol));
                            }
                        }
                        Err(e) => r.note(e.to_string()),
                    }
                }
            }
            if model.parameters.len() > 1 {
                let order = group.generated_subgroup(&gens).map(|g| g.order()).unwrap_or(0);
                r.check(Check::count("subgroups_generate_group", order, group.order()));
            }
            r.table(subgroups);
        }
        Err(e) => {
            r.check(Check::holds("regular_representation", false));
            r.note(e.to_string());
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> Settings {
        Settings::seeded(0)
    }

    #[test]
    fn every_listed_scenario_runs_and_passes() {
        for (name, _) in SCENARIOS {
            let r = run_scenario(name, None, &settings()).unwrap();
            let failed: Vec<_> = r.failures().map(|c| (&c.name, c.measured)).collect();
            assert!(r.pass, "{name}: {failed:?}");
        }
        assert!(matches!(run_scenario("nope", None, &settings()), Err(ScenarioError::Unknown(_))));
    }

    #[test]
    fn born_examples() {
        let zx = born_oracle(&Direction::z(), &Direction::x());
        assert!(zx.iter().flatten().all(|p| (p - 0.5).abs() < 1e-15));
        let r = run_spin_half(&[Direction::z(), Direction::z()], 0, &settings()).unwrap();
        assert!(r.pass);
        assert_eq!(r.notes.len(), 1);
        let m = born_transition_matrix(&spin_states::<f64>(&Direction::z()), &spin_states::<f64>(&Direction::z())).unwrap();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-15 && m[(0, 1)].abs() < 1e-15);
        assert!(run_spin_half(&[Direction::z()], 0, &settings()).is_err());
    }

    #[test]
    fn singlet_examples() {
        let (a, b) = (Direction::z(), Direction::x());
        let p = singlet_joint(&a, &b);
        assert!(p.iter().flatten().all(|x| (x - 0.25).abs() < 1e-15));
        let e = singlet_correlation(&a, &Direction::planar("b", 60.0));
        assert!((e + 0.5).abs() < 1e-12);
    }

    #[test]
    fn chsh_pointwise_and_angle_order() {
        let (margin, hits) = pointwise_chsh_margin();
        assert_eq!(margin, 0);
        assert!(hits > 0);
        let d = |deg| Direction::planar("", deg);
        let s = chsh_combination(&d(0.0), &d(90.0), &d(135.0), &d(45.0));
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // the same four angles in the order a, a', b, b' = 0, 90, 45, 135
        assert!(chsh_combination(&d(0.0), &d(90.0), &d(45.0), &d(135.0)).abs() < 1e-12);
    }

    #[test]
    fn latent_examples() {
        let c = LatentConfig::default();
        let v = |x: &[f64]| DVector::from_vec(x.to_vec());
        let rec = latent_recovery(&v(&c.t), &v(&c.u), &v(&c.a), &v(&c.b), &DMatrix::zeros(4, 2)).unwrap();
        assert!(rec.outer_b_residual < 1e-12);
        assert_eq!(rec.unidentified_dim, 1);
        // u ⟂ t leaves u untouched
        let perp = v(&[0.0, 1.0, -2.0, 0.5]);
        let p = projector_onto(&v(&c.t)).unwrap();
        assert_eq!((DMatrix::identity(4, 4) - p) * &perp, perp);
        assert!(matches!(
            latent_recovery(&v(&[0.0; 4]), &v(&c.u), &v(&c.a), &v(&c.b), &DMatrix::zeros(4, 2)),
            Err(ScenarioError::SingularProjection)
        ));
    }

    #[test]
    fn reports_are_reproducible() {
        for name in ["measurement", "dynamics", "coupled", "singlet"] {
            let a = run_scenario(name, None, &Settings::seeded(42)).unwrap().to_json();
            let b = run_scenario(name, None, &Settings::seeded(42)).unwrap().to_json();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn config_is_strict() {
        let cfg = serde_json::json!({"random_pairs": 3, "bogus": 1});
        assert!(matches!(run_scenario("singlet", Some(&cfg), &settings()), Err(ScenarioError::BadConfig(_))));
        let cfg = serde_json::json!({"noise": ["1/2", "1/2"]});
        assert!(run_scenario("pitman", Some(&cfg), &settings()).unwrap().pass);
    }

    #[test]
    fn verify_cube_model() {
        let cube = cube_rotation_group();
        let model = Model {
            action: cube.action.clone(),
            parameters: (0..3).map(|a| cube.sign_parameter(a)).collect(),
        };
        let r = verify_model(&model, &settings());
        assert!(r.pass, "{:?}", r.failures().collect::<Vec<_>>());
        let single = Model {
            action: cube.action.clone(),
            parameters: vec![cube.sign_parameter(0), cube.vertex_parameter()],
        };
        assert!(!verify_model(&single, &settings()).pass);
    }
}
