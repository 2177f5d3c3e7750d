//! Networks of automata and their line-oriented text form.
//!
//! ```text
//! # comment
//! process sender 2 0
//! t 0 send 1
//! t 1 ack 0
//!
//! process receiver 2 0
//! t 0 send 1
//! t 1 ack 0
//! ```
//!
//! A `process <name> <states> <initial>` line opens a process and `t <src>
//! <label> <dst>` lines add its transitions. Blank lines and `#` comments are
//! ignored. A label that appears in two or more processes only fires jointly
//! in all of them; a label private to one process fires on its own.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("no processes")]
    NoProcesses,
    #[error("expected `{0}`")]
    Syntax(&'static str),
    #[error("`{0}` is not a non-negative integer")]
    BadNumber(String),
    #[error("`{0}` is not a valid label")]
    BadLabel(String),
    #[error("process must have at least one state")]
    EmptyProcess,
    #[error("duplicate process name `{0}`")]
    DuplicateProcess(String),
    #[error("state {state} does not exist in a process with {states} states")]
    UnknownState { state: u32, states: u32 },
    #[error("transition appears before any process line")]
    OrphanTransition,
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based; 0 for errors that concern the whole input.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: u32,
    pub label: String,
    pub target: u32,
}

/// One finite-state process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub name: String,
    pub states: u32,
    pub initial: u32,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    pub fn new(name: impl Into<String>, states: u32, initial: u32) -> Self {
        Self {
            name: name.into(),
            states,
            initial,
            transitions: Vec::new(),
        }
    }

    pub fn transition(mut self, source: u32, label: impl Into<String>, target: u32) -> Self {
        self.transitions.push(Transition {
            source,
            label: label.into(),
            target,
        });
        self
    }
}

/// Processes composed in parallel with multiway synchronization on shared
/// labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    processes: Vec<Automaton>,
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '!' || c == '?')
}

impl Model {
    /// Validates and wraps a list of processes.
    pub fn new(processes: Vec<Automaton>) -> Result<Self, ParseError> {
        let whole = |kind| ParseError { line: 0, kind };
        if processes.is_empty() {
            return Err(whole(ParseErrorKind::NoProcesses));
        }
        let mut names = BTreeMap::new();
        for p in &processes {
            if names.insert(p.name.as_str(), ()).is_some() {
                return Err(whole(ParseErrorKind::DuplicateProcess(p.name.clone())));
            }
            if p.states == 0 {
                return Err(whole(ParseErrorKind::EmptyProcess));
            }
            let states = p.states;
            let unknown = |state| whole(ParseErrorKind::UnknownState { state, states });
            if p.initial >= states {
                return Err(unknown(p.initial));
            }
            for t in &p.transitions {
                if !is_label(&t.label) {
                    return Err(whole(ParseErrorKind::BadLabel(t.label.clone())));
                }
                for s in [t.source, t.target] {
                    if s >= states {
                        return Err(unknown(s));
                    }
                }
            }
        }
        Ok(Self { processes })
    }

    pub fn processes(&self) -> &[Automaton] {
        &self.processes
    }

    /// Number of composite states, `None` if it overflows 64 bits.
    pub fn state_space(&self) -> Option<u64> {
        self.processes
            .iter()
            .try_fold(1u64, |acc, p| acc.checked_mul(u64::from(p.states)))
    }

    /// Labels in order of first appearance, each with the ascending list of
    /// processes whose alphabet contains it.
    pub fn alphabet(&self) -> Vec<(String, Vec<usize>)> {
        let mut order: Vec<(String, Vec<usize>)> = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (pi, p) in self.processes.iter().enumerate() {
            for t in &p.transitions {
                let at = *index.entry(t.label.as_str()).or_insert_with(|| {
                    order.push((t.label.clone(), Vec::new()));
                    order.len() - 1
                });
                let members = &mut order[at].1;
                if members.last() != Some(&pi) {
                    members.push(pi);
                }
            }
        }
        order
    }

    /// Parses the text format described in the module docs.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut processes: Vec<Automaton> = Vec::new();
        let mut opened_at: Vec<usize> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |kind| ParseError { line, kind };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            match fields[0] {
                "process" => {
                    let [_, name, states, initial] = fields[..] else {
                        return Err(err(ParseErrorKind::Syntax(
                            "process <name> <states> <initial>",
                        )));
                    };
                    let states = number(states).map_err(err)?;
                    let initial = number(initial).map_err(err)?;
                    if processes.iter().any(|p| p.name == name) {
                        return Err(err(ParseErrorKind::DuplicateProcess(name.to_string())));
                    }
                    if states == 0 {
                        return Err(err(ParseErrorKind::EmptyProcess));
                    }
                    if initial >= states {
                        return Err(err(ParseErrorKind::UnknownState {
                            state: initial,
                            states,
                        }));
                    }
                    processes.push(Automaton::new(name, states, initial));
                    opened_at.push(line);
                }
                "t" => {
                    let [_, src, label, dst] = fields[..] else {
                        return Err(err(ParseErrorKind::Syntax("t <src> <label> <dst>")));
                    };
                    let process = processes
                        .last_mut()
                        .ok_or(err(ParseErrorKind::OrphanTransition))?;
                    let source = number(src).map_err(err)?;
                    let target = number(dst).map_err(err)?;
                    if !is_label(label) {
                        return Err(err(ParseErrorKind::BadLabel(label.to_string())));
                    }
                    for state in [source, target] {
                        if state >= process.states {
                            return Err(err(ParseErrorKind::UnknownState {
                                state,
                                states: process.states,
                            }));
                        }
                    }
                    process.transitions.push(Transition {
                        source,
                        label: label.to_string(),
                        target,
                    });
                }
                other => return Err(err(ParseErrorKind::UnknownDirective(other.to_string()))),
            }
        }
        if processes.is_empty() {
            return Err(ParseError {
                line: 0,
                kind: ParseErrorKind::NoProcesses,
            });
        }
        Ok(Self { processes })
    }

    /// Renders the model back into the text format.
    pub fn to_text(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        for (i, p) in self.processes.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "process {} {} {}", p.name, p.states, p.initial);
            for t in &p.transitions {
                let _ = writeln!(out, "t {} {} {}", t.source, t.label, t.target);
            }
        }
        out
    }
}

fn number(s: &str) -> Result<u32, ParseErrorKind> {
    s.parse()
        .map_err(|_| ParseErrorKind::BadNumber(s.to_string()))
}
