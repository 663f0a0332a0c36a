//! One test per acceptance criterion. Each writes a PASS/FAIL line straight
//! to stdout, so the lines show up even when test output is captured.

use std::io::Write;

use quadstab::acceptance::{self, CriterionResult};

fn verdict(r: CriterionResult) {
    let _ = writeln!(std::io::stdout().lock(), "{r}");
    assert!(r.passed, "{r}");
}

#[test]
fn criterion_01_convergence() {
    verdict(acceptance::criterion_1());
}

#[test]
fn criterion_02_closure() {
    verdict(acceptance::criterion_2());
}

#[test]
fn criterion_03_geographic_searchability() {
    verdict(acceptance::criterion_3());
}

#[test]
fn criterion_04_standard_searchability() {
    verdict(acceptance::criterion_4());
}

#[test]
fn criterion_05_hop_bounds() {
    verdict(acceptance::criterion_5());
}

#[test]
fn criterion_06_quad_region_monotonicity() {
    verdict(acceptance::criterion_6());
}

#[test]
fn criterion_07_connectivity() {
    verdict(acceptance::criterion_7());
}

#[test]
fn criterion_08_order_equivalence() {
    verdict(acceptance::criterion_8());
}

#[test]
fn criterion_09_three_dimensions() {
    verdict(acceptance::criterion_9());
}

#[test]
fn criterion_10_determinism() {
    verdict(acceptance::criterion_10());
}
