//! Acceptance criteria, one printed PASS/FAIL line each.
//!
//! Run with `cargo test -p hoppath-core --test acceptance -- --nocapture`.
//! Every criterion runs even when an earlier one fails; the test fails at
//! the end if any did.

use hoppath_core::harness::verify::{self, Outcome};
use hoppath_core::harness::DEFAULT_SEED;

fn criteria() -> Vec<(&'static str, fn() -> Outcome)> {
    vec![
        ("telescoping identity, N <= 6, all bundled experiments", verify::telescoping),
        ("finitary-standard equivalence, narrow window, both models", verify::psi_identity),
        ("propagator consistency, wide window, df <= 4, and CK", verify::propagator_consistency),
        ("path computes its own amplitude, 100 random paths", || verify::path_compilation(DEFAULT_SEED)),
        ("single-word property, same 100 paths", || verify::single_word(DEFAULT_SEED)),
        ("loop resummation, 50 triples, L = 10..60", || verify::loop_resummation_check(DEFAULT_SEED)),
        ("resolvent closed form vs truncation, 50 machines", || verify::resolvent_vs_truncated(DEFAULT_SEED)),
        ("machine-sum decomposition on the 3-point lattice", verify::machine_sum_decomposition),
        ("sigma independence, rho in {0, 0.7, pi/2}", verify::sigma_independence),
        ("universality, 20 random relations", || verify::universality(DEFAULT_SEED)),
    ]
}

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for (title, check) in criteria() {
        let outcome = check();
        println!(
            "{} | {title} | {:.2}s | {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.seconds,
            outcome.detail
        );
        if !outcome.passed {
            failed.push(title);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
