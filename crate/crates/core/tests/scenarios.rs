use focusqm::builtin::cube_rotation_group;
use focusqm::io::{inference_model_from_json, Model};
use focusqm::scenarios::{run_scenario, verify_model, Settings, SCENARIOS};

#[test]
fn every_scenario_passes_for_several_seeds() {
    for seed in [0, 1, 7, 42, 2024] {
        for (name, _) in SCENARIOS {
            let r = run_scenario(name, None, &Settings::seeded(seed)).unwrap();
            let failed: Vec<_> = r.failures().map(|c| c.name.clone()).collect();
            assert!(r.pass, "{name} seed {seed}: {failed:?}");
        }
    }
}

#[test]
fn shipped_models_round_trip() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models");
    for name in ["cube.json", "reflection.json"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        let model = Model::from_json(&text).unwrap();
        assert_eq!(Model::from_json(&model.to_json()).unwrap(), model, "{name}");
        assert!(verify_model(&model, &Settings::seeded(0)).pass, "{name}");
    }
    let z5 = inference_model_from_json(&std::fs::read_to_string(dir.join("z5_location.json")).unwrap()).unwrap();
    assert_eq!((z5.thetas(), z5.outcomes()), (5, 5));
}

#[test]
fn shipped_cube_model_matches_builtin() {
    let text = std::fs::read_to_string(std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models/cube.json")).unwrap();
    let model = Model::from_json(&text).unwrap();
    let cube = cube_rotation_group();
    assert_eq!(model.group().order(), 24);
    assert_eq!(model.action.points(), cube.action.points());
    assert_eq!(model.parameters.len(), 3);
}

#[test]
fn identical_settings_give_identical_reports() {
    for (name, _) in SCENARIOS {
        let a = run_scenario(name, None, &Settings::seeded(5)).unwrap().to_json();
        let b = run_scenario(name, None, &Settings::seeded(5)).unwrap().to_json();
        assert_eq!(a, b, "{name}");
    }
}
