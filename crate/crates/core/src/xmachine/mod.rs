//! X-machines: finite state machines whose transitions carry relations on
//! a data type, the additive variant whose labels are complex multipliers,
//! and the compilation of hop paths into additive machines.

pub mod additive;
pub mod format;
pub mod fsm;
pub mod paths;
pub mod relation;

pub use additive::{
    additive_behavior_closed, additive_behavior_closed_capped, additive_behavior_truncated, loop_resummation,
    single_loop_machine, AdditiveXMachine, CoverSemantics, MultiplierLabeling,
};
pub use format::{parse_machine, write_machine};
pub use fsm::{FiniteStateMachine, Transition};
pub use paths::{
    compile_path_to_machine, compile_with, path_amplitude_with, paths_equivalent, paths_equivalent_with,
    point_state_name, sum_over_machines, sum_over_machines_with, HopAmplitudeModel, LatticeHops, MachineClass,
    MachineKey, MachineSum, PhysicalHops,
};
pub use relation::{machine_behavior, universal_relation_machine, word_relation, GeneralLabeling, Relation};
