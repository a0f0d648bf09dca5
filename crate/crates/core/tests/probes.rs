use wavebem::probes::{
    convergence_study, probe_coercivity, probe_continuity, CoercivityParams, ContinuityParams, ProbeError, StudyKind, TimeStudyParams,
};
use wavebem::C64;

#[test]
fn manufactured_study_errors_decrease_on_icosphere() {
    let kind = StudyKind::FrequencyManufactured { levels: vec![1, 2, 3], s: C64::new(1.0, 2.0), source: [0.0, 0.0, 2.0] };
    let r = convergence_study(&kind).unwrap();
    assert!(r.passed, "{}", r.table());
    assert!(r.get("fitted_order_in_h").unwrap().value > 0.5);
}

#[test]
fn studies_need_three_refinements() {
    let kind = StudyKind::FrequencyManufactured { levels: vec![1, 2], s: C64::new(1.0, 2.0), source: [0.0, 0.0, 2.0] };
    match convergence_study(&kind) {
        Err(ProbeError::Parameters(m)) => assert!(m.contains("need >= 3"), "{m}"),
        other => panic!("{other:?}"),
    }
    let time = StudyKind::TimeCq(TimeStudyParams { steps: vec![16, 32], ..Default::default() });
    assert!(matches!(convergence_study(&time), Err(ProbeError::Parameters(_))));
}

#[test]
fn continuity_needs_four_frequencies() {
    let p = ContinuityParams { frequencies: vec![C64::new(1.0, 0.0)], ..Default::default() };
    match probe_continuity(&p) {
        Err(ProbeError::Parameters(m)) => assert!(m.contains(">= 4"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn coercivity_report_is_reproducible() {
    let p = CoercivityParams { levels: vec![2], frequencies: vec![C64::new(1.0, 2.0)], samples: 10, ..Default::default() };
    let a = probe_coercivity(&p).unwrap();
    let b = probe_coercivity(&p).unwrap();
    assert!(a.passed);
    assert_eq!(a.to_json(), b.to_json());
    let other = probe_coercivity(&CoercivityParams { seed: p.seed + 1, ..p }).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}
