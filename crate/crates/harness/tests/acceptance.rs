//! One test per acceptance criterion. Each prints a PASS/FAIL line to stderr
//! (bypassing libtest capture) before asserting.

use std::io::Write;

use polent_harness::verify::{self, Outcome};

fn check(o: Outcome) {
    let _ = writeln!(std::io::stderr(), "{o}");
    assert!(o.passed, "{o}");
}

#[test]
fn criterion_1_squeezed_sum_correlation() {
    check(verify::criterion_1());
}

#[test]
fn criterion_2_asymmetry_inference() {
    check(verify::criterion_2());
}

#[test]
fn criterion_3_witness_products() {
    check(verify::criterion_3());
}

#[test]
fn criterion_4_optimised_floor_and_angle_error() {
    check(verify::criterion_4());
}

#[test]
fn criterion_5_output_excess_noise() {
    check(verify::criterion_5());
}

#[test]
fn criterion_6_fock_oracle() {
    check(verify::criterion_6());
}

#[test]
fn criterion_7_monte_carlo_equivalence() {
    check(verify::criterion_7());
}

#[test]
fn criterion_8a_gain_optimiser_dominates() {
    check(verify::criterion_8a());
}

#[test]
fn criterion_8b_epr_reid_model_value() {
    check(verify::criterion_8b());
}

#[test]
fn criterion_8c_entanglement_of_formation() {
    check(verify::criterion_8c());
}

#[test]
fn criterion_9_map_invariants() {
    check(verify::criterion_9());
}
