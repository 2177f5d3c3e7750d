use alloc::collections::VecDeque;
use alloc::vec::Vec;

use hashbrown::HashSet;

use super::model::Model;
use super::{Trace, TraceError, CODE_BITS};

/// Mixed-radix packing of local states, process 0 least significant.
#[derive(Debug, Clone)]
pub struct Encoder {
    radices: Vec<u32>,
}

impl Encoder {
    pub fn new(model: &Model) -> Result<Self, TraceError> {
        let space = model.state_space().unwrap_or(u64::MAX);
        if space > 1 << CODE_BITS {
            return Err(TraceError::CodeSpace { states: space });
        }
        Ok(Self {
            radices: model.processes().iter().map(|p| p.states).collect(),
        })
    }

    pub fn encode(&self, locals: &[u32]) -> Result<u32, TraceError> {
        if locals.len() != self.radices.len() {
            return Err(TraceError::Arity {
                expected: self.radices.len(),
                got: locals.len(),
            });
        }
        let mut code = 0u32;
        for (process, (&local, &radix)) in locals.iter().zip(&self.radices).enumerate().rev() {
            if local >= radix {
                return Err(TraceError::LocalState {
                    process,
                    state: local,
                    states: radix,
                });
            }
            code = code * radix + local;
        }
        Ok(code)
    }

    /// Inverse of [`Encoder::encode`], writing into `locals`.
    pub fn decode_into(&self, mut code: u32, locals: &mut [u32]) {
        for (slot, &radix) in locals.iter_mut().zip(&self.radices) {
            *slot = code % radix;
            code /= radix;
        }
    }

    /// Code change caused by moving `process` from `from` to `to`.
    #[inline]
    fn delta(&self, weights: &[u32], process: usize, from: u32, to: u32) -> i64 {
        (i64::from(to) - i64::from(from)) * i64::from(weights[process])
    }
}

/// Encodes a vector of local states for `model`.
pub fn encode(model: &Model, locals: &[u32]) -> Result<u32, TraceError> {
    Encoder::new(model)?.encode(locals)
}

/// Per-process successor lists, indexed `[process][state] -> [(label, target)]`.
type Outgoing = Vec<Vec<Vec<(usize, u32)>>>;

struct Network {
    outgoing: Outgoing,
    /// Labels private to one process.
    local: Vec<bool>,
    /// Synchronizing labels with their participants.
    joint: Vec<(usize, Vec<usize>)>,
}

impl Network {
    fn new(model: &Model) -> Self {
        let alphabet = model.alphabet();
        let label_id = |name: &str| {
            alphabet
                .iter()
                .position(|(l, _)| l == name)
                .expect("label comes from the model")
        };
        let outgoing = model
            .processes()
            .iter()
            .map(|p| {
                let mut by_state = alloc::vec![Vec::new(); p.states as usize];
                for t in &p.transitions {
                    by_state[t.source as usize].push((label_id(&t.label), t.target));
                }
                by_state
            })
            .collect();
        let local = alphabet.iter().map(|(_, who)| who.len() == 1).collect();
        let joint = alphabet
            .into_iter()
            .enumerate()
            .filter(|(_, (_, who))| who.len() > 1)
            .map(|(id, (_, who))| (id, who))
            .collect();
        Self {
            outgoing,
            local,
            joint,
        }
    }
}

/// Breadth-first exploration from the initial state vector.
///
/// Every generated successor is appended to the trace before the visited
/// check, so revisits are kept. Successors of a state are generated in a
/// fixed order: private transitions by process index then declaration
/// order, followed by each synchronizing label in order of first appearance,
/// whose joint moves are enumerated with the lowest process varying slowest.
pub fn explore(model: &Model) -> Result<Trace, TraceError> {
    let encoder = Encoder::new(model)?;
    let net = Network::new(model);
    let processes = model.processes().len();
    let mut weights = Vec::with_capacity(processes);
    let mut w = 1u32;
    for p in model.processes() {
        weights.push(w);
        w = w.wrapping_mul(p.states);
    }

    let initial: Vec<u32> = model.processes().iter().map(|p| p.initial).collect();
    let initial = encoder.encode(&initial)?;
    let mut visited: HashSet<u32> = HashSet::new();
    visited.insert(initial);
    let mut open: VecDeque<u32> = VecDeque::from([initial]);
    let mut codes = Vec::new();
    let mut locals = alloc::vec![0u32; processes];
    let mut choice: Vec<usize> = Vec::new();

    let mut emit = |code: u32, codes: &mut Vec<u32>, open: &mut VecDeque<u32>| {
        codes.push(code);
        if visited.insert(code) {
            open.push_back(code);
        }
    };

    while let Some(state) = open.pop_front() {
        encoder.decode_into(state, &mut locals);
        for (p, &local) in locals.iter().enumerate() {
            for &(label, target) in &net.outgoing[p][local as usize] {
                if net.local[label] {
                    let code = i64::from(state) + encoder.delta(&weights, p, local, target);
                    emit(code as u32, &mut codes, &mut open);
                }
            }
        }
        for (label, members) in &net.joint {
            // Enabled moves per participant; skip the label if any is blocked.
            let enabled: Vec<Vec<u32>> = members
                .iter()
                .map(|&p| {
                    net.outgoing[p][locals[p] as usize]
                        .iter()
                        .filter(|(l, _)| l == label)
                        .map(|&(_, t)| t)
                        .collect()
                })
                .collect();
            if enabled.iter().any(Vec::is_empty) {
                continue;
            }
            choice.clear();
            choice.resize(members.len(), 0);
            'product: loop {
                let mut code = i64::from(state);
                for (k, &p) in members.iter().enumerate() {
                    code += encoder.delta(&weights, p, locals[p], enabled[k][choice[k]]);
                }
                emit(code as u32, &mut codes, &mut open);
                // Odometer, last participant fastest.
                let mut k = members.len();
                loop {
                    if k == 0 {
                        break 'product;
                    }
                    k -= 1;
                    choice[k] += 1;
                    if choice[k] < enabled[k].len() {
                        break;
                    }
                    choice[k] = 0;
                }
            }
        }
    }
    let reachable = visited.len();
    Ok(Trace::with_reachable(codes, reachable))
}
