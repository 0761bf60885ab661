use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub symbol: usize,
    pub to: usize,
}

/// A nondeterministic finite state machine with named states and symbols.
///
/// States and symbols keep their declaration order; transitions refer to
/// them by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteStateMachine {
    states: Vec<String>,
    alphabet: Vec<String>,
    transitions: Vec<Transition>,
    initial: usize,
    finals: BTreeSet<usize>,
}

fn index_of(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() || n.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("{what} name `{n}` is empty or contains whitespace")));
        }
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidInput(format!("duplicate {what} `{n}`")));
        }
    }
    Ok(())
}

impl FiniteStateMachine {
    pub fn new<S: AsRef<str>>(
        states: &[S],
        alphabet: &[S],
        transitions: &[(S, S, S)],
        initial: &str,
        finals: &[S],
    ) -> Result<Self> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_owned()).collect();
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_owned()).collect();
        check_unique(&states, "state")?;
        check_unique(&alphabet, "symbol")?;
        let state = |name: &str| index_of(&states, name).ok_or_else(|| Error::UnknownState(name.to_owned()));
        let symbol = |name: &str| index_of(&alphabet, name).ok_or_else(|| Error::UnknownSymbol(name.to_owned()));
        let transitions = transitions
            .iter()
            .map(|(f, a, t)| {
                Ok(Transition {
                    from: state(f.as_ref())?,
                    symbol: symbol(a.as_ref())?,
                    to: state(t.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let initial = state(initial)?;
        let finals = finals.iter().map(|f| state(f.as_ref())).collect::<Result<BTreeSet<_>>>()?;
        Self::from_parts(states, alphabet, transitions, initial, finals)
    }

    pub(crate) fn from_parts(
        states: Vec<String>,
        alphabet: Vec<String>,
        transitions: Vec<Transition>,
        initial: usize,
        finals: BTreeSet<usize>,
    ) -> Result<Self> {
        if finals.is_empty() {
            return Err(Error::InvalidInput("a machine needs at least one final state".into()));
        }
        let n = states.len();
        if initial >= n || finals.iter().any(|&f| f >= n) {
            return Err(Error::UnknownState(format!("index out of range for {n} states")));
        }
        if let Some(t) = transitions.iter().find(|t| t.from >= n || t.to >= n || t.symbol >= alphabet.len()) {
            return Err(Error::InvalidInput(format!("transition {t:?} refers to an undeclared state or symbol")));
        }
        Ok(Self {
            states,
            alphabet,
            transitions,
            initial,
            finals,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        index_of(&self.states, name).ok_or_else(|| Error::UnknownState(name.to_owned()))
    }

    pub fn symbol_index(&self, name: &str) -> Result<usize> {
        index_of(&self.alphabet, name).ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    pub fn symbols_of<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>> {
        word.iter().map(|a| self.symbol_index(a.as_ref())).collect()
    }

    /// Whether some run from the initial state spells `word` and stops in a
    /// final state.
    pub fn recognizes<S: AsRef<str>>(&self, word: &[S]) -> Result<bool> {
        let word = self.symbols_of(word)?;
        let mut current = BTreeSet::from([self.initial]);
        for a in word {
            current = self
                .transitions
                .iter()
                .filter(|t| t.symbol == a && current.contains(&t.from))
                .map(|t| t.to)
                .collect();
            if current.is_empty() {
                return Ok(false);
            }
        }
        Ok(current.iter().any(|s| self.finals.contains(s)))
    }

    /// Distinct accepted words of length at most `max_len`, as symbol indices.
    pub fn accepted_words(&self, max_len: usize) -> BTreeSet<Vec<usize>> {
        // Breadth-first over (word → reachable state set), which is the
        // subset construction applied lazily to each prefix.
        let live = self.co_reachable();
        let mut words = BTreeSet::new();
        let mut layer: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::from([(Vec::new(), BTreeSet::from([self.initial]))]);
        for len in 0..=max_len {
            for (word, reached) in &layer {
                if reached.iter().any(|s| self.finals.contains(s)) {
                    words.insert(word.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next: BTreeMap<Vec<usize>, BTreeSet<usize>> = BTreeMap::new();
            for (word, reached) in &layer {
                for t in self.transitions.iter().filter(|t| reached.contains(&t.from)) {
                    let mut w = word.clone();
                    w.push(t.symbol);
                    next.entry(w).or_default().insert(t.to);
                }
            }
            // Prefixes that can no longer reach a final state are dropped.
            next.retain(|_, reached| reached.iter().any(|s| live.contains(s)));
            layer = next;
        }
        words
    }

    fn reachable_from(&self, start: impl IntoIterator<Item = usize>, forward: bool) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = start.into_iter().collect();
        let mut stack: Vec<usize> = seen.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for t in &self.transitions {
                let (a, b) = if forward { (t.from, t.to) } else { (t.to, t.from) };
                if a == s && seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    /// States from which some final state can be reached.
    pub fn co_reachable(&self) -> BTreeSet<usize> {
        self.reachable_from(self.finals.iter().copied(), false)
    }

    /// States on some run from the initial state to a final state.
    pub fn useful_states(&self) -> BTreeSet<usize> {
        let forward = self.reachable_from([self.initial], true);
        let backward = self.co_reachable();
        forward.intersection(&backward).copied().collect()
    }

    /// True when an accepting run can repeat a state, i.e. the language is
    /// infinite.
    pub fn has_accepting_cycle(&self) -> bool {
        let useful = self.useful_states();
        let edges: Vec<&Transition> = self
            .transitions
            .iter()
            .filter(|t| useful.contains(&t.from) && useful.contains(&t.to))
            .collect();
        // Kahn's algorithm on the trimmed graph.
        let mut indegree: BTreeMap<usize, usize> = useful.iter().map(|&s| (s, 0)).collect();
        for t in &edges {
            *indegree.get_mut(&t.to).unwrap() += 1;
        }
        let mut ready: Vec<usize> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&s, _)| s).collect();
        let mut removed = 0;
        while let Some(s) = ready.pop() {
            removed += 1;
            for t in edges.iter().filter(|t| t.from == s) {
                let d = indegree.get_mut(&t.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(t.to);
                }
            }
        }
        removed < useful.len()
    }

    /// An upper bound on accepted word lengths when the language is finite.
    pub(crate) fn accepting_len_bound(&self) -> Option<usize> {
        if self.has_accepting_cycle() {
            return None;
        }
        Some(self.useful_states().len().saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_machine() -> FiniteStateMachine {
        FiniteStateMachine::new(&["s0", "s1"], &["a", "b"], &[("s0", "a", "s1"), ("s1", "b", "s0")], "s0", &["s0"]).unwrap()
    }

    /// Depth-first search over every run, independent of the subset logic.
    fn brute_force_accepts(m: &FiniteStateMachine, word: &[usize]) -> bool {
        fn go(m: &FiniteStateMachine, s: usize, rest: &[usize]) -> bool {
            match rest.split_first() {
                None => m.finals().contains(&s),
                Some((a, tail)) => m
                    .transitions()
                    .iter()
                    .any(|t| t.from == s && t.symbol == *a && go(m, t.to, tail)),
            }
        }
        go(m, m.initial(), word)
    }

    #[test]
    fn empty_word_and_single_transition() {
        let m = loop_machine();
        assert!(m.recognizes::<&str>(&[]).unwrap());
        let single = FiniteStateMachine::new(&["s0", "s1"], &["a"], &[("s0", "a", "s1")], "s0", &["s1"]).unwrap();
        assert!(single.recognizes(&["a"]).unwrap());
        assert!(!single.recognizes(&["a", "a"]).unwrap());
        assert!(!single.recognizes::<&str>(&[]).unwrap());
    }

    #[test]
    fn loop_machine_language() {
        let m = loop_machine();
        assert!(m.recognizes(&["a", "b"]).unwrap());
        assert!(m.recognizes(&["a", "b", "a", "b"]).unwrap());
        assert!(!m.recognizes(&["b", "a"]).unwrap());
        assert!(matches!(m.recognizes(&["c"]), Err(Error::UnknownSymbol(_))));
        assert!(m.has_accepting_cycle());
    }

    #[test]
    fn recognition_matches_brute_force() {
        let m = FiniteStateMachine::new(
            &["p", "q", "r"],
            &["a", "b"],
            &[("p", "a", "p"), ("p", "a", "q"), ("q", "b", "r"), ("r", "a", "q"), ("q", "b", "p")],
            "p",
            &["r"],
        )
        .unwrap();
        let words = m.accepted_words(6);
        for len in 0..=6u32 {
            for code in 0..2usize.pow(len) {
                let word: Vec<usize> = (0..len).map(|i| (code >> i) & 1).collect();
                let names: Vec<&str> = word.iter().map(|&a| m.alphabet()[a].as_str()).collect();
                let expected = brute_force_accepts(&m, &word);
                assert_eq!(m.recognizes(&names).unwrap(), expected);
                assert_eq!(words.contains(&word), expected);
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            FiniteStateMachine::new(&["s0"], &["a"], &[("s0", "a", "s9")], "s0", &["s0"]),
            Err(Error::UnknownState(_))
        ));
        assert!(matches!(
            FiniteStateMachine::new(&["s0"], &["a"], &[("s0", "b", "s0")], "s0", &["s0"]),
            Err(Error::UnknownSymbol(_))
        ));
        assert!(FiniteStateMachine::new::<&str>(&["s0"], &["a"], &[], "s0", &[]).is_err());
        assert!(FiniteStateMachine::new::<&str>(&["s0", "s0"], &["a"], &[], "s0", &["s0"]).is_err());
    }

    #[test]
    fn dead_branches_do_not_make_the_language_infinite() {
        let m = FiniteStateMachine::new(
            &["s0", "s1", "dead"],
            &["a", "b"],
            &[("s0", "a", "s1"), ("s0", "b", "dead"), ("dead", "b", "dead")],
            "s0",
            &["s1"],
        )
        .unwrap();
        assert!(!m.has_accepting_cycle());
        assert_eq!(m.accepting_len_bound(), Some(1));
        assert_eq!(m.accepted_words(10).len(), 1);
    }
}
