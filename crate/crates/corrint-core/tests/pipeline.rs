//! The iteration run end to end on cheap configurations.

use corrint_core::convexint::{iterate, ConvexIntError, IterateParams, RunReport, RunStatus};
use corrint_core::models::{model_circle, model_sphere_band, Side};

#[test]
fn circle_converges_with_loose_tolerance() {
    let m = model_circle();
    let p = IterateParams::new("circle", 0.5, 0.1, 4);
    let r = iterate(&m.layered(), &m.metric, &p).unwrap();
    assert_eq!(r.report.status, RunStatus::Converged);
    let it = r.report.iteration.as_ref().unwrap();
    assert!(it.final_defect_sup <= 0.1);
    assert!(it.final_defect_min_eig >= 0.0);
    assert!(it.c0_distance_to_base <= 0.5);
    let mut prev = it.initial_defect_sup;
    for s in &r.report.stages {
        assert!(s.defect_sup_after < prev);
        prev = s.defect_sup_after;
    }
    let text = serde_json::to_string(&r.report).unwrap();
    let back: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

#[test]
fn sphere_band_stops_at_the_probe_budget() {
    let m = model_sphere_band(0.05, Side::North, 1.0).unwrap();
    let p = IterateParams::new("sphere-band", 0.2, 0.05, 8);
    let f = iterate(&m.layered(), &m.metric, &p).unwrap_err();
    assert!(matches!(f.error, ConvexIntError::LambdaCapExceeded { .. }), "{}", f.error);
    assert_eq!(f.partial.report.status, RunStatus::Failed);
    assert_eq!(f.partial.report.iteration.as_ref().unwrap().boundary_exact, Some(true));
}
