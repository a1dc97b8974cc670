use std::f64::consts::FRAC_PI_3;
use std::path::Path;

use heraldiq_core::detect::{herald, DetectionSetup, DetectorModel, HeraldSpec};
use heraldiq_core::discover::{improve, optimize, revalidate, to_scheme, Budget, SearchProblem};
use heraldiq_core::fock::{Correction, Register};
use heraldiq_core::interferometer::{decompose_params, haar_unitary, mesh_circuit};
use heraldiq_core::schemes::{
    bell_5p5m, builtin, builtin_registry, comparison_tables, run, SchemeDefinition, TargetSpec, TargetState,
    ValueSource,
};
use heraldiq_core::sources::{hom_coincidence, SingleEmitter};
use heraldiq_core::{compile, evolve, evolve_labeled, Circuit, Element, ModeOccupation, PureState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn schemes_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemes"))
}

#[test]
fn builtins_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for s in builtin_registry() {
        let path = dir.path().join(format!("{}.json", s.name));
        std::fs::write(&path, s.to_json().unwrap()).unwrap();
        let back = SchemeDefinition::load(&path).unwrap();
        assert_eq!(back, s);
        let (a, b) = (run(&s, None).unwrap(), run(&back, None).unwrap());
        assert_eq!(a.success_prob, b.success_prob);
    }
}

#[test]
fn tables_pick_up_scheme_directory() {
    let rows = comparison_tables(None, Some(schemes_dir())).unwrap();
    let row = rows.iter().find(|r| r.scheme.contains("4P6M") && r.source == ValueSource::Simulated).unwrap();
    assert_eq!(row.exact.as_deref(), Some("2/27"));
    let missing = rows.iter().find(|r| r.scheme.contains("4P8M")).unwrap();
    assert_eq!(missing.source, ValueSource::External);
}

#[test]
fn bundled_discovered_scheme_matches_builtin() {
    let file = SchemeDefinition::load(&schemes_dir().join("bell-4p6m.json")).unwrap();
    assert_eq!(file.provenance, "discovered");
    let r = run(&file, None).unwrap();
    assert!((r.success_prob - 2.0 / 27.0).abs() < 1e-12);
    assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(Some(file), builtin("bell-4p6m"));
}

#[test]
fn discovered_circuit_round_trips_through_scheme_file() {
    let problem = SearchProblem::from_json(include_str!("../../../schemes/problems/noon2.json")).unwrap();
    let out = optimize(&problem).unwrap();
    assert!(out.found);
    let scheme = to_scheme(&problem, &out);
    let back = SchemeDefinition::from_json(&scheme.to_json().unwrap()).unwrap();
    let r = run(&back, None).unwrap();
    assert!((r.fidelity.unwrap() - out.best.fidelity).abs() < 1e-9);
    assert!((r.success_prob - out.best.success_prob).abs() < 1e-9);
}

#[test]
fn phi_alpha_from_two_heralds() {
    let problem = SearchProblem {
        name: "phi-alpha".into(),
        modes: 6,
        input: vec![1, 1, 1, 1, 0, 0],
        herald: HeraldSpec::patterns(vec![4, 5], vec![vec![1, 1]]),
        target: TargetSpec {
            state: TargetState::PhiAlpha { alpha: FRAC_PI_3 },
            register: Some(Register::dual_rail(&[(0, 1), (2, 3)]).unwrap()),
        },
        correction: Correction::LocalPhases,
        weights: Default::default(),
        p_ref: None,
        budget: Budget {
            restarts: 16,
            iterations: 200,
            seed: 3,
        },
        fidelity_threshold: 0.999,
        detectors: Vec::new(),
    };
    let out = optimize(&problem).unwrap();
    assert!(out.found, "fidelity {}", out.best.fidelity);
    assert!(out.best.success_prob > 0.0);
    let check = revalidate(&problem, &out.best.circuit).unwrap();
    assert!((check.fidelity - out.best.fidelity).abs() < 1e-9);
    assert!((check.success_prob - out.best.success_prob).abs() < 1e-9);
}

#[test]
fn improving_the_dft_scheme_keeps_it_valid() {
    let r = improve(&bell_5p5m(), 30).unwrap();
    assert!((r.start.success_prob - 12.0 / 125.0).abs() < 1e-12);
    assert!(r.best.fidelity >= 0.999);
    assert!(r.best.success_prob >= r.start.success_prob - 1e-12);
    assert!(r.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
}

#[test]
fn mesh_parameters_reproduce_scheme_unitaries() {
    for s in builtin_registry() {
        let u = s.unitary().unwrap();
        let back = compile(&mesh_circuit(s.modes, &decompose_params(&u).unwrap()).unwrap()).unwrap();
        let d = (u.matrix() - back.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-9, "{}: {d}", s.name);
    }
}

#[test]
fn emitter_visibility_sets_hom_dip() {
    let em = SingleEmitter::new(1.0, 0.81, 0.0).unwrap();
    let u = compile(&Circuit::with_elements(2, vec![Element::bs50(0, 1)]).unwrap()).unwrap();
    let out = evolve_labeled(&em.labeled_photons(2, &[0, 1]).unwrap(), &u).unwrap();
    let c: f64 = out.components().iter().map(|(w, s)| w * s.amp(&[1, 1]).norm_sqr()).sum();
    assert!((c - hom_coincidence(0.81).unwrap()).abs() < 1e-12);
    assert!((c - 0.095).abs() < 1e-12);
}

#[test]
fn noisy_heralding_never_creates_probability() {
    let s = bell_5p5m();
    let out = evolve(&s.input_state(), &s.unitary().unwrap()).unwrap();
    for det in [
        DetectorModel::threshold().with_efficiency(0.7),
        DetectorModel::fanout(3).with_dark_count(0.02),
        DetectorModel::ideal_pnr().with_efficiency(0.5).with_dark_count(0.1),
    ] {
        let r = herald(&out, &s.herald, &DetectionSetup::uniform(1, det)).unwrap();
        assert!(r.success_prob >= 0.0 && r.success_prob <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evolution_conserves_norm_and_photons(seed in any::<u64>(), m in 2usize..6, counts in prop::collection::vec(0u8..2, 6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(m, &mut rng);
        let occ: Vec<u8> = counts[..m].to_vec();
        let n: usize = occ.iter().map(|&c| c as usize).sum();
        let out = evolve(&PureState::basis(ModeOccupation::new(occ)), &u).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(out.terms().all(|(o, _)| o.total() == n));
    }

    #[test]
    fn herald_loss_never_raises_ideal_success(eta in 0.0f64..1.0) {
        let s = bell_5p5m();
        let mut setup = s.default_setup();
        setup.detectors[0] = DetectorModel::ideal_pnr().with_efficiency(eta);
        let r = run(&s, Some(&setup)).unwrap();
        let e = r.events.unwrap_or_default();
        prop_assert!(e.false_negative >= 0.0 && e.false_positive >= 0.0);
        prop_assert!(r.success_prob <= 1.0);
    }
}
