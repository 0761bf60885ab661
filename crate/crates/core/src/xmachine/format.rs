//! Plain-text machine files.
//!
//! ```text
//! # comment
//! state s0
//! state s1
//! initial s0
//! final s1
//! trans s0 a s1 0.5 -0.25
//! ```
//!
//! A symbol used on several transitions must carry the same label each time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_complex::Complex64;

use super::additive::{AdditiveXMachine, CoverSemantics, MultiplierLabeling};
use super::fsm::{FiniteStateMachine, Transition};
use crate::error::{Error, Result};

fn parse_float(token: &str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("`{token}` is not a number"),
    })
}

pub fn parse_machine(text: &str, cover: CoverSemantics) -> Result<AdditiveXMachine> {
    let mut states: Vec<String> = Vec::new();
    let mut initial: Option<(String, usize)> = None;
    let mut finals: Vec<(String, usize)> = Vec::new();
    let mut trans: Vec<(String, String, String, usize)> = Vec::new();
    let mut alphabet: Vec<String> = Vec::new();
    let mut labels: BTreeMap<String, Complex64> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let fields: Vec<&str> = content.split_whitespace().collect();
        let Some((&kind, args)) = fields.split_first() else {
            continue;
        };
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse {
                    line,
                    message: format!("`{kind}` takes {n} fields, found {}", args.len()),
                })
            }
        };
        match kind {
            "state" => {
                arity(1)?;
                if states.iter().any(|s| s == args[0]) {
                    return Err(Error::Parse {
                        line,
                        message: format!("state `{}` declared twice", args[0]),
                    });
                }
                states.push(args[0].to_owned());
            }
            "initial" => {
                arity(1)?;
                if initial.is_some() {
                    return Err(Error::Parse {
                        line,
                        message: "more than one initial state".into(),
                    });
                }
                initial = Some((args[0].to_owned(), line));
            }
            "final" => {
                arity(1)?;
                finals.push((args[0].to_owned(), line));
            }
            "trans" => {
                arity(5)?;
                let label = Complex64::new(parse_float(args[3], line)?, parse_float(args[4], line)?);
                match labels.get(args[1]) {
                    Some(&existing) if existing != label => {
                        return Err(Error::Parse {
                            line,
                            message: format!("symbol `{}` already has label {existing}", args[1]),
                        })
                    }
                    Some(_) => {}
                    None => {
                        alphabet.push(args[1].to_owned());
                        labels.insert(args[1].to_owned(), label);
                    }
                }
                trans.push((args[0].to_owned(), args[1].to_owned(), args[2].to_owned(), line));
            }
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown record `{other}`"),
                })
            }
        }
    }

    let state = |name: &str, line: usize| {
        states.iter().position(|s| s == name).ok_or_else(|| Error::Parse {
            line,
            message: format!("undeclared state `{name}`"),
        })
    };
    let transitions = trans
        .iter()
        .map(|(f, a, t, line)| {
            Ok(Transition {
                from: state(f, *line)?,
                symbol: alphabet.iter().position(|s| s == a).expect("symbol registered while parsing"),
                to: state(t, *line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (init_name, init_line) = initial.ok_or_else(|| Error::Parse {
        line: text.lines().count(),
        message: "no initial state".into(),
    })?;
    let initial = state(&init_name, init_line)?;
    let finals = finals.iter().map(|(f, line)| state(f, *line)).collect::<Result<BTreeSet<_>>>()?;
    let fsm = FiniteStateMachine::from_parts(states, alphabet, transitions, initial, finals)?;
    AdditiveXMachine::new(fsm, MultiplierLabeling::new(labels), cover)
}

/// Inverse of [`parse_machine`]; labels are written with round-trip precision.
pub fn write_machine(m: &AdditiveXMachine) -> String {
    let fsm = m.fsm();
    let mut out = String::new();
    for s in fsm.states() {
        writeln!(out, "state {s}").unwrap();
    }
    writeln!(out, "initial {}", fsm.states()[fsm.initial()]).unwrap();
    for &f in fsm.finals() {
        writeln!(out, "final {}", fsm.states()[f]).unwrap();
    }
    for (t, w) in fsm.transitions().iter().zip(m.transition_weights()) {
        writeln!(
            out,
            "trans {} {} {} {:?} {:?}",
            fsm.states()[t.from],
            fsm.alphabet()[t.symbol],
            fsm.states()[t.to],
            w.re,
            w.im
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xmachine::additive::single_loop_machine;

    #[test]
    fn round_trip() {
        let m = single_loop_machine(Complex64::new(0.5, 0.1), Complex64::new(0.3, -1.0 / 3.0), Complex64::new(0.8, 0.0));
        let text = write_machine(&m);
        assert_eq!(parse_machine(&text, CoverSemantics::TransitionCover).unwrap(), m);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# two states\n\nstate a\nstate b # trailing\ninitial a\nfinal b\ntrans a x b 1 0\n";
        let m = parse_machine(text, CoverSemantics::StateCover).unwrap();
        assert_eq!(m.fsm().transitions().len(), 1);
        assert_eq!(m.cover(), CoverSemantics::StateCover);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = [
            ("state a\ninitial a\nfinal a\ntrans a x b 1 0\n", 4),
            ("state a\ninitial a\nfinal a\ntrans a x a 1 zero\n", 4),
            ("state a\nstart a\n", 2),
            ("state a\ninitial a\nfinal a\ntrans a x a 1 0\ntrans a x a 2 0\n", 5),
        ];
        for (text, expected) in bad {
            match parse_machine(text, CoverSemantics::TransitionCover) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text}"),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
        assert!(parse_machine("state a\ninitial a\n", CoverSemantics::TransitionCover).is_err());
    }
}
