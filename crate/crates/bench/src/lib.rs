//! Inputs shared by the benchmarks.

use hoppath_core::finitary::{HopPath, TimeModel};
use hoppath_core::harness::bundled;
use hoppath_core::xmachine::{compile_with, AdditiveXMachine};
use hoppath_core::SpacetimePoint;

/// The lattice machine generated by a walk that uses all nine hops.
pub fn full_lattice_machine() -> AdditiveXMachine {
    let lattice = bundled::lattice().expect("bundled lattice");
    let [a, b, c] = [lattice.points[0], lattice.points[1], lattice.points[2]];
    let walk: Vec<SpacetimePoint> = vec![a, a, b, b, a, c, c, b, c, a, c];
    let path = HopPath::new(walk, TimeModel::Bidirectional).expect("valid walk");
    compile_with(&path, &lattice.hops).expect("compiles")
}
