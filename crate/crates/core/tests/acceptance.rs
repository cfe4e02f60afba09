//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities. Tolerances are pinned inside the verify
//! module.

use roughscat::verify;

fn report(criterion: &str, check: &verify::CheckReport) {
    println!(
        "criterion {criterion}: {} — {} [{} ms]",
        if check.passed { "PASS" } else { "FAIL" },
        check.details,
        check.runtime_ms
    );
}

#[test]
fn criterion_1_flat_surface_oracle() {
    let c = verify::check_flat_oracle();
    report("1 (flat-surface oracle)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criterion_2_reciprocity() {
    let c = verify::check_reciprocity();
    report("2 (reciprocity)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criterion_3_boundary_identity() {
    let c = verify::check_boundary_identity();
    report("3 (boundary identity)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criterion_4_farfield_matching() {
    let c = verify::check_farfield_matching();
    report("4 (far-field matching)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criterion_5_stationary_phase_bounds() {
    let c = verify::check_stationary_bounds();
    report("5 (stationary-phase bounds)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criterion_6_indicator_convergence() {
    let c = verify::check_indicator_convergence();
    report("6 (indicator convergence)", &c);
    assert!(c.passed, "{}", c.details);
}

#[test]
fn criteria_7_and_8_reconstruction_and_noise() {
    let art = verify::reconstruction_artifacts().expect("reconstruction artifacts");
    let c7 = verify::check_reconstruction(&art);
    report("7 (desk-scale reconstruction)", &c7);
    let c8 = verify::check_noise_robustness(&art);
    report("8 (noise robustness)", &c8);
    assert!(c7.passed, "{}", c7.details);
    assert!(c8.passed, "{}", c8.details);
}
