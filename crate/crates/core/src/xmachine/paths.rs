use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::additive::{additive_behavior_closed, AdditiveXMachine, CoverSemantics, MultiplierLabeling};
use super::fsm::{FiniteStateMachine, Transition};
use crate::action::{PhysicalSystem, SpacetimePoint};
use crate::error::{Error, Result};
use crate::finitary::{hop_amplitude, HopPath, PhaseParam, TimeModel};

/// Source of hop amplitudes for path compilation.
pub trait HopAmplitudeModel {
    fn amplitude(&self, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<Complex64>;
}

/// Amplitudes from the physical hop rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalHops {
    pub system: PhysicalSystem,
    pub phase: PhaseParam,
    pub model: TimeModel,
}

impl HopAmplitudeModel for PhysicalHops {
    fn amplitude(&self, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<Complex64> {
        hop_amplitude(&self.system, &self.phase, q, q_next, self.model)
    }
}

/// Amplitudes looked up in a finite table; missing hops have amplitude 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatticeHops {
    table: BTreeMap<((u64, u64), (u64, u64)), Complex64>,
}

impl LatticeHops {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, q: SpacetimePoint, q_next: SpacetimePoint, amplitude: Complex64) {
        self.table.insert((q.key(), q_next.key()), amplitude);
    }

    /// Every ordered pair of `points` (self-hops included) with amplitude `f(q, q_next)`.
    pub fn complete<F>(points: &[SpacetimePoint], mut f: F) -> Result<Self>
    where
        F: FnMut(&SpacetimePoint, &SpacetimePoint) -> Result<Complex64>,
    {
        let mut hops = Self::new();
        for q in points {
            for q_next in points {
                hops.insert(*q, *q_next, f(q, q_next)?);
            }
        }
        Ok(hops)
    }
}

impl HopAmplitudeModel for LatticeHops {
    fn amplitude(&self, q: &SpacetimePoint, q_next: &SpacetimePoint) -> Result<Complex64> {
        Ok(self.table.get(&(q.key(), q_next.key())).copied().unwrap_or_default())
    }
}

/// State name of a spacetime point; distinct points get distinct names.
pub fn point_state_name(q: &SpacetimePoint) -> String {
    let clean = |v: f64| if v == 0.0 { 0.0 } else { v };
    format!("{:?}@{:?}", clean(q.x), clean(q.t))
}

/// Product of the model's hop amplitudes along the path.
pub fn path_amplitude_with(path: &HopPath, hops: &impl HopAmplitudeModel) -> Result<Complex64> {
    path.hops().try_fold(Complex64::new(1.0, 0.0), |acc, (q, q_next)| Ok(acc * hops.amplitude(&q, &q_next)?))
}

/// `M_q` for a path: one state per distinct point, one transition per
/// distinct hop `q_n → q_{n+1}`, labeled with that hop's amplitude.
///
/// A hop that the path repeats maps to the same transition, so `u.v.w` and
/// `u.v.v.w` compile to the same machine and a revisited point closes a
/// cycle.
pub fn compile_with(path: &HopPath, hops: &impl HopAmplitudeModel) -> Result<AdditiveXMachine> {
    let mut states: Vec<String> = Vec::new();
    let state_of = |q: &SpacetimePoint, states: &mut Vec<String>| {
        let name = point_state_name(q);
        match states.iter().position(|s| *s == name) {
            Some(i) => i,
            None => {
                states.push(name);
                states.len() - 1
            }
        }
    };
    let mut transitions: Vec<Transition> = Vec::new();
    let mut labels = BTreeMap::new();
    let mut alphabet = Vec::new();
    for (q, q_next) in path.hops() {
        let from = state_of(&q, &mut states);
        let to = state_of(&q_next, &mut states);
        if transitions.iter().any(|t| t.from == from && t.to == to) {
            continue;
        }
        let symbol = format!("h{}", alphabet.len());
        labels.insert(symbol.clone(), hops.amplitude(&q, &q_next)?);
        transitions.push(Transition {
            from,
            symbol: alphabet.len(),
            to,
        });
        alphabet.push(symbol);
    }
    let initial = state_of(&path.initial(), &mut states);
    let terminal = state_of(&path.terminal(), &mut states);
    let fsm = FiniteStateMachine::from_parts(states, alphabet, transitions, initial, BTreeSet::from([terminal]))?;
    AdditiveXMachine::new(fsm, MultiplierLabeling::new(labels), CoverSemantics::TransitionCover)
}

pub fn compile_path_to_machine(
    path: &HopPath,
    system: &PhysicalSystem,
    phase: &PhaseParam,
    model: TimeModel,
) -> Result<AdditiveXMachine> {
    compile_with(
        path,
        &PhysicalHops {
            system: *system,
            phase: *phase,
            model,
        },
    )
}

/// Machine identity with symbol names forgotten: the state set as point
/// names, the transitions as (from, to, label bits), initial and finals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MachineKey {
    states: BTreeSet<String>,
    transitions: Vec<(String, String, u64, u64)>,
    initial: String,
    finals: BTreeSet<String>,
}

impl MachineKey {
    pub fn of(m: &AdditiveXMachine) -> Self {
        let fsm = m.fsm();
        let name = |i: usize| fsm.states()[i].clone();
        let mut transitions: Vec<_> = fsm
            .transitions()
            .iter()
            .zip(m.transition_weights())
            .map(|(t, w)| (name(t.from), name(t.to), w.re.to_bits(), w.im.to_bits()))
            .collect();
        transitions.sort();
        Self {
            states: fsm.states().iter().cloned().collect(),
            transitions,
            initial: name(fsm.initial()),
            finals: fsm.finals().iter().map(|&f| name(f)).collect(),
        }
    }
}

pub fn paths_equivalent_with(p1: &HopPath, p2: &HopPath, hops: &impl HopAmplitudeModel) -> Result<bool> {
    Ok(MachineKey::of(&compile_with(p1, hops)?) == MachineKey::of(&compile_with(p2, hops)?))
}

/// Whether the two paths generate the same admissible machine.
pub fn paths_equivalent(
    p1: &HopPath,
    p2: &HopPath,
    system: &PhysicalSystem,
    phase: &PhaseParam,
    model: TimeModel,
) -> Result<bool> {
    paths_equivalent_with(
        p1,
        p2,
        &PhysicalHops {
            system: *system,
            phase: *phase,
            model,
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineClass {
    pub machine: AdditiveXMachine,
    /// Indices of the input paths generating this machine.
    pub members: Vec<usize>,
    /// Closed-form `|M|⁺`.
    pub behavior: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSum {
    pub direct_sum: Complex64,
    pub machine_sum: Complex64,
    pub classes: Vec<MachineClass>,
}

/// Path amplitudes summed directly, and `|M|⁺` summed over the distinct
/// machines the paths generate. Classes appear in order of first member.
pub fn sum_over_machines_with(paths: &[HopPath], hops: &impl HopAmplitudeModel, cover: CoverSemantics) -> Result<MachineSum> {
    if let Some(first) = paths.first() {
        if paths.iter().any(|p| p.initial() != first.initial() || p.terminal() != first.terminal()) {
            return Err(Error::InvalidInput("paths do not share endpoints".into()));
        }
    }
    let mut direct = Vec::with_capacity(paths.len());
    let mut index: BTreeMap<MachineKey, usize> = BTreeMap::new();
    let mut classes: Vec<(AdditiveXMachine, Vec<usize>)> = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        direct.push(path_amplitude_with(path, hops)?);
        let machine = compile_with(path, hops)?.with_cover(cover);
        let key = MachineKey::of(&machine);
        match index.get(&key) {
            Some(&c) => classes[c].1.push(i),
            None => {
                index.insert(key, classes.len());
                classes.push((machine, vec![i]));
            }
        }
    }
    let classes = classes
        .into_iter()
        .map(|(machine, members)| {
            let behavior = additive_behavior_closed(&machine)?;
            Ok(MachineClass {
                machine,
                members,
                behavior,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let behaviors: Vec<Complex64> = classes.iter().map(|c| c.behavior).collect();
    Ok(MachineSum {
        direct_sum: crate::quadrature::pairwise_sum(&direct),
        machine_sum: crate::quadrature::pairwise_sum(&behaviors),
        classes,
    })
}

pub fn sum_over_machines(
    paths: &[HopPath],
    system: &PhysicalSystem,
    phase: &PhaseParam,
    model: TimeModel,
) -> Result<MachineSum> {
    let hops = PhysicalHops {
        system: *system,
        phase: *phase,
        model,
    };
    sum_over_machines_with(paths, &hops, CoverSemantics::TransitionCover)
}
