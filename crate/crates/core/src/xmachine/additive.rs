use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fsm::FiniteStateMachine;
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;

/// Closed forms are refused when the spectral radius bound reaches `1 − margin`.
pub const DIVERGENCE_MARGIN: f64 = 1e-6;
/// Default ceiling on the number of inclusion–exclusion terms.
pub const DEFAULT_SUBSET_CAP: u64 = 1 << 20;

/// Symbol → constant multiplier `c` of `k_c : z ↦ z c`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiplierLabeling {
    pub map: BTreeMap<String, Complex64>,
}

impl MultiplierLabeling {
    pub fn new(map: BTreeMap<String, Complex64>) -> Self {
        Self { map }
    }

    pub fn get(&self, symbol: &str) -> Result<Complex64> {
        self.map.get(symbol).copied().ok_or_else(|| Error::UnknownSymbol(symbol.to_owned()))
    }
}

/// Which accepting runs count toward `|M|⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverSemantics {
    /// Runs that visit every state.
    StateCover,
    /// Runs that use every transition.
    #[default]
    TransitionCover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveXMachine {
    fsm: FiniteStateMachine,
    labeling: MultiplierLabeling,
    cover: CoverSemantics,
}

impl AdditiveXMachine {
    pub fn new(fsm: FiniteStateMachine, labeling: MultiplierLabeling, cover: CoverSemantics) -> Result<Self> {
        for a in fsm.alphabet() {
            let c = labeling.get(a)?;
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput(format!("label of `{a}` is not finite")));
            }
        }
        Ok(Self { fsm, labeling, cover })
    }

    pub fn fsm(&self) -> &FiniteStateMachine {
        &self.fsm
    }

    pub fn labeling(&self) -> &MultiplierLabeling {
        &self.labeling
    }

    pub fn cover(&self) -> CoverSemantics {
        self.cover
    }

    pub fn with_cover(mut self, cover: CoverSemantics) -> Self {
        self.cover = cover;
        self
    }

    /// Multiplier of each transition, in transition order.
    pub fn transition_weights(&self) -> Vec<Complex64> {
        self.fsm
            .transitions()
            .iter()
            .map(|t| self.labeling.map[&self.fsm.alphabet()[t.symbol]])
            .collect()
    }

    /// `H[s, s′] = Σ` labels of the transitions `s → s′` whose index is in
    /// `transitions` and whose endpoints are in `states` (both bitmasks).
    fn adjacency(&self, transitions: u64, states: u64) -> DMatrix<Complex64> {
        let n = self.fsm.states().len();
        let mut h = DMatrix::zeros(n, n);
        for (i, (t, w)) in self.fsm.transitions().iter().zip(self.transition_weights()).enumerate() {
            if transitions >> i & 1 == 1 && states >> t.from & 1 == 1 && states >> t.to & 1 == 1 {
                h[(t.from, t.to)] += w;
            }
        }
        h
    }

    /// Entrywise `Σ |label|` over parallel transitions.
    fn magnitude_matrix(&self) -> DMatrix<f64> {
        let n = self.fsm.states().len();
        let mut m = DMatrix::zeros(n, n);
        for (t, w) in self.fsm.transitions().iter().zip(self.transition_weights()) {
            m[(t.from, t.to)] += w.norm();
        }
        m
    }

    /// An upper estimate of the spectral radius of `|H|`.
    pub fn spectral_radius_bound(&self) -> f64 {
        spectral_radius_bound(&self.magnitude_matrix())
    }

    fn cover_bits(&self) -> usize {
        match self.cover {
            CoverSemantics::TransitionCover => self.fsm.transitions().len(),
            CoverSemantics::StateCover => self.fsm.states().len(),
        }
    }
}

fn full_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// `‖A^k‖_∞^{1/k}` for `k = 2, 4, 8, …` by repeated squaring, stopping
/// when successive estimates agree to 1e-9 or after 200 squarings. Every
/// iterate bounds `ρ(A)` from above and the sequence converges to it.
///
/// No early stop before `k ≥ n`: a nilpotent matrix must reach `A^k = 0`.
pub(crate) fn spectral_radius_bound(a: &DMatrix<f64>) -> f64 {
    let inf_norm = |m: &DMatrix<f64>| m.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
    let min_squarings = (a.nrows().max(1) as f64).log2().ceil() as usize + 1;
    let mut power = a.clone();
    let mut log_scale = 0.0f64;
    let mut k = 1.0f64;
    let mut estimate = inf_norm(a);
    for step in 0..200 {
        let norm = inf_norm(&power);
        if norm == 0.0 {
            return 0.0;
        }
        power /= norm;
        log_scale += norm.ln();
        power = &power * &power;
        log_scale *= 2.0;
        k *= 2.0;
        let next = ((inf_norm(&power).ln() + log_scale) / k).exp();
        if !next.is_finite() {
            return if inf_norm(&power) == 0.0 { 0.0 } else { estimate };
        }
        let done = step + 1 >= min_squarings && (next - estimate).abs() <= 1e-9;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `|M|⁺` restricted to covering runs of length at most `max_len`,
/// reported as the image of `z = 1`.
///
/// Dynamic programming over (state, covered set); sums are taken per
/// accepting run.
pub fn additive_behavior_truncated(m: &AdditiveXMachine, max_len: usize) -> Complex64 {
    let fsm = m.fsm();
    let weights = m.transition_weights();
    let target = full_mask(m.cover_bits());
    let start_mask = match m.cover {
        CoverSemantics::TransitionCover => 0,
        CoverSemantics::StateCover => 1u64 << fsm.initial(),
    };
    let covers = |mask: u64, i: usize, to: usize| match m.cover {
        CoverSemantics::TransitionCover => mask | 1u64 << i,
        CoverSemantics::StateCover => mask | 1u64 << to,
    };
    let live = fsm.co_reachable();
    let mut layer: BTreeMap<(usize, u64), Complex64> = BTreeMap::from([((fsm.initial(), start_mask), Complex64::new(1.0, 0.0))]);
    let mut accepted = Vec::new();
    for len in 0..=max_len {
        for (&(s, mask), &v) in &layer {
            if mask == target && fsm.finals().contains(&s) {
                accepted.push(v);
            }
        }
        if len == max_len {
            break;
        }
        let mut next: BTreeMap<(usize, u64), Complex64> = BTreeMap::new();
        for (&(s, mask), &v) in &layer {
            for (i, t) in fsm.transitions().iter().enumerate() {
                if t.from == s && live.contains(&t.to) {
                    *next.entry((t.to, covers(mask, i, t.to))).or_default() += v * weights[i];
                }
            }
        }
        layer = next;
    }
    pairwise_sum(&accepted)
}

/// Exact `|M|⁺` by inclusion–exclusion over sub-machines, with the default
/// subset cap.
pub fn additive_behavior_closed(m: &AdditiveXMachine) -> Result<Complex64> {
    additive_behavior_closed_capped(m, DEFAULT_SUBSET_CAP)
}

/// `Σ_{E′ ⊆ E} (−1)^{|E∖E′|} W(E′)`, where `W(E′)` is the initial-to-final
/// walk sum `[(I − H_{E′})⁻¹]` of the machine restricted to `E′`
/// (transitions, or states for `StateCover`).
pub fn additive_behavior_closed_capped(m: &AdditiveXMachine, cap: u64) -> Result<Complex64> {
    let bits = m.cover_bits();
    if bits >= 63 || 1u64 << bits > cap {
        return Err(Error::SubsetBlowup { transitions: bits, cap });
    }
    let radius = m.spectral_radius_bound();
    if radius >= 1.0 - DIVERGENCE_MARGIN {
        return Err(Error::DivergentBehavior {
            radius,
            margin: DIVERGENCE_MARGIN,
        });
    }
    let fsm = m.fsm();
    let n = fsm.states().len();
    let all_transitions = full_mask(fsm.transitions().len());
    let all_states = full_mask(n);
    let finals = DVector::from_fn(n, |i, _| {
        if fsm.finals().contains(&i) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let terms = (0..1u64 << bits)
        .into_par_iter()
        .map(|subset| {
            let (transitions, states) = match m.cover {
                CoverSemantics::TransitionCover => (subset, all_states),
                CoverSemantics::StateCover => (all_transitions, subset),
            };
            if states >> fsm.initial() & 1 == 0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let mut finals_in = finals.clone();
            for i in 0..n {
                if states >> i & 1 == 0 {
                    finals_in[i] = Complex64::new(0.0, 0.0);
                }
            }
            let system = DMatrix::identity(n, n) - m.adjacency(transitions, states);
            let walks = system
                .lu()
                .solve(&finals_in)
                .ok_or_else(|| Error::DivergentBehavior {
                    radius,
                    margin: DIVERGENCE_MARGIN,
                })?;
            let removed = bits - subset.count_ones() as usize;
            let sign = if removed % 2 == 0 { 1.0 } else { -1.0 };
            Ok(walks[fsm.initial()] * sign)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms))
}

/// `ψ* = Σ_{j≥1} ψ_u ψ_v^j ψ_w = ψ_u ψ_w ψ_v / (1 − ψ_v)`.
pub fn loop_resummation(psi_u: Complex64, psi_v: Complex64, psi_w: Complex64) -> Result<Complex64> {
    if psi_v.norm() >= 1.0 {
        return Err(Error::DivergentBehavior {
            radius: psi_v.norm(),
            margin: 0.0,
        });
    }
    Ok(psi_u * psi_w * psi_v / (Complex64::new(1.0, 0.0) - psi_v))
}

/// `s0 →u s1`, `s1 →v s1`, `s1 →w s2`: one pass through `u`, at least one
/// turn of the loop, one pass through `w`.
pub fn single_loop_machine(psi_u: Complex64, psi_v: Complex64, psi_w: Complex64) -> AdditiveXMachine {
    let fsm = FiniteStateMachine::new(
        &["s0", "s1", "s2"],
        &["u", "v", "w"],
        &[("s0", "u", "s1"), ("s1", "v", "s1"), ("s1", "w", "s2")],
        "s0",
        &["s2"],
    )
    .expect("fixed machine is well formed");
    let labels = MultiplierLabeling::new(BTreeMap::from([
        ("u".to_owned(), psi_u),
        ("v".to_owned(), psi_v),
        ("w".to_owned(), psi_w),
    ]));
    AdditiveXMachine::new(fsm, labels, CoverSemantics::TransitionCover).expect("labels are total")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(label: Complex64) -> AdditiveXMachine {
        let fsm = FiniteStateMachine::new(&["s0", "s1"], &["a"], &[("s0", "a", "s1")], "s0", &["s1"]).unwrap();
        AdditiveXMachine::new(fsm, MultiplierLabeling::new(BTreeMap::from([("a".to_owned(), label)])), CoverSemantics::default())
            .unwrap()
    }

    /// Every run up to `max_len`, enumerated explicitly.
    fn brute_force(m: &AdditiveXMachine, max_len: usize) -> Complex64 {
        let fsm = m.fsm();
        let w = m.transition_weights();
        let mut total = c(0.0, 0.0);
        let mut stack = vec![(fsm.initial(), Vec::<usize>::new(), c(1.0, 0.0))];
        while let Some((s, run, amp)) = stack.pop() {
            if fsm.finals().contains(&s) {
                let covered = match m.cover() {
                    CoverSemantics::TransitionCover => (0..fsm.transitions().len()).all(|i| run.contains(&i)),
                    CoverSemantics::StateCover => (0..fsm.states().len()).all(|q| {
                        q == fsm.initial() || run.iter().any(|&i| fsm.transitions()[i].to == q)
                    }),
                };
                if covered {
                    total += amp;
                }
            }
            if run.len() < max_len {
                for (i, t) in fsm.transitions().iter().enumerate().filter(|(_, t)| t.from == s) {
                    let mut r = run.clone();
                    r.push(i);
                    stack.push((t.to, r, amp * w[i]));
                }
            }
        }
        total
    }

    #[test]
    fn single_transition() {
        let m = single(c(0.3, -0.4));
        assert_eq!(additive_behavior_truncated(&m, 1), c(0.3, -0.4));
        assert!((additive_behavior_closed(&m).unwrap() - c(0.3, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn no_covering_run_within_bound() {
        let m = single_loop_machine(c(0.5, 0.0), c(0.3, 0.0), c(0.8, 0.0));
        assert_eq!(additive_behavior_truncated(&m, 2), c(0.0, 0.0));
    }

    #[test]
    fn single_loop_example() {
        let m = single_loop_machine(c(0.5, 0.0), c(0.3, 0.0), c(0.8, 0.0));
        let closed = additive_behavior_closed(&m).unwrap();
        assert!((closed - c(0.12 / 0.7, 0.0)).norm() < 1e-14);
        let truncated = additive_behavior_truncated(&m, 60);
        assert!((closed - truncated).norm() < 1e-14);
        let resummed = loop_resummation(c(0.5, 0.0), c(0.3, 0.0), c(0.8, 0.0)).unwrap();
        assert!((additive_behavior_truncated(&m, 50) - resummed).norm() <= 0.3f64.powi(50));
    }

    #[test]
    fn loop_resummation_examples() {
        assert_eq!(loop_resummation(c(0.5, 0.0), c(0.0, 0.0), c(0.8, 0.0)).unwrap(), c(0.0, 0.0));
        let got = loop_resummation(c(1.0, 0.0), c(0.0, 0.5), c(1.0, 0.0)).unwrap();
        assert!((got - c(-0.2, 0.4)).norm() < 1e-15);
        let partial: f64 = (1..=80).map(|j| 0.5 * 0.8 * 0.3f64.powi(j)).sum();
        assert!((loop_resummation(c(0.5, 0.0), c(0.3, 0.0), c(0.8, 0.0)).unwrap().re - partial).abs() < 1e-15);
        assert!(loop_resummation(c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn truncation_matches_explicit_runs() {
        let fsm = FiniteStateMachine::new(
            &["p", "q", "r"],
            &["a", "b", "c", "d"],
            &[("p", "a", "q"), ("q", "b", "p"), ("q", "c", "r"), ("p", "d", "r"), ("r", "a", "q")],
            "p",
            &["r"],
        )
        .unwrap();
        let labels = MultiplierLabeling::new(BTreeMap::from([
            ("a".to_owned(), c(0.4, 0.2)),
            ("b".to_owned(), c(-0.3, 0.5)),
            ("c".to_owned(), c(0.6, 0.0)),
            ("d".to_owned(), c(0.1, -0.7)),
        ]));
        for cover in [CoverSemantics::TransitionCover, CoverSemantics::StateCover] {
            let m = AdditiveXMachine::new(fsm.clone(), labels.clone(), cover).unwrap();
            for len in 0..=9 {
                assert!((additive_behavior_truncated(&m, len) - brute_force(&m, len)).norm() < 1e-14);
            }
            let closed = additive_behavior_closed(&m).unwrap();
            assert!((closed - additive_behavior_truncated(&m, 200)).norm() < 1e-12, "{cover:?}");
        }
    }

    #[test]
    fn divergence_and_blowup() {
        let m = single_loop_machine(c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0));
        assert!(matches!(additive_behavior_closed(&m), Err(Error::DivergentBehavior { .. })));
        let m = single_loop_machine(c(1.0, 0.0), c(0.5, 0.0), c(1.0, 0.0));
        assert!(matches!(additive_behavior_closed_capped(&m, 4), Err(Error::SubsetBlowup { .. })));
    }

    #[test]
    fn spectral_radius_examples() {
        let nilpotent = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spectral_radius_bound(&nilpotent), 0.0);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!((spectral_radius_bound(&swap) - 0.5).abs() < 1e-9);
        let ones = DMatrix::from_element(3, 3, 0.15);
        let r = spectral_radius_bound(&ones);
        assert!((r - 0.45).abs() < 1e-9);
    }
}
