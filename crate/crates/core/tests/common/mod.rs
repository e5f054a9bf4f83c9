#![allow(dead_code)]

use logsym::quantizer::{CellIndex, EdgePolicy, LogLattice, Variant};
use logsym::transition::{ExplicitSystem, TransitionSystem};
use rand::Rng;

pub fn s6_lattice() -> LogLattice {
    LogLattice::uniform(2, 0.2, 0.4, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap()
}

pub fn fine_lattice() -> LogLattice {
    LogLattice::uniform(2, 0.05, 0.2, Variant::DeadzoneScale, 1.0, EdgePolicy::Merge).unwrap()
}

pub fn cell(levels: &[i32]) -> CellIndex {
    CellIndex(levels.to_vec())
}

/// Per-axis interval of a level on the 25-cell lattice, written out by hand
/// from boundaries 0.4, 0.6 and the bound 1.
pub fn s6_interval(level: i32) -> (f64, f64) {
    match level {
        0 => (-0.4, 0.4),
        1 => (0.4, 0.6),
        2 => (0.6, 1.0),
        -1 => (-0.6, -0.4),
        -2 => (-1.0, -0.6),
        _ => panic!("no level {level}"),
    }
}

/// Random transition system and safe mask.
pub fn random_system<R: Rng>(rng: &mut R, max_states: usize, max_inputs: u32) -> (ExplicitSystem, Vec<bool>) {
    let n = rng.gen_range(1..=max_states);
    let m = rng.gen_range(1..=max_inputs);
    let density: f64 = rng.gen_range(0.2..0.9);
    let mut ts = ExplicitSystem::new(n);
    for s in 0..n {
        for u in 0..m {
            if rng.gen_bool(density) {
                let k = rng.gen_range(1..=3.min(n));
                for _ in 0..k {
                    ts.add_transition(s, u, rng.gen_range(0..n));
                }
            }
        }
    }
    let safe = (0..n).map(|_| rng.gen_bool(0.8)).collect();
    (ts, safe)
}

fn has_input_into<T: TransitionSystem>(ts: &T, s: usize, set: &[bool]) -> bool {
    ts.candidate_inputs(s).iter().any(|&u| {
        let succ = ts.successors(s, u);
        !succ.is_empty() && succ.iter().all(|&t| set[t as usize])
    })
}

/// Controlled invariance: every member has an enabled input staying inside.
pub fn is_controlled_invariant<T: TransitionSystem>(ts: &T, set: &[bool]) -> bool {
    (0..ts.num_states()).all(|s| !set[s] || has_input_into(ts, s, set))
}

/// Union of every controlled-invariant subset of `safe`, by enumeration.
pub fn max_invariant_exhaustive<T: TransitionSystem>(ts: &T, safe: &[bool]) -> Vec<bool> {
    let members: Vec<usize> = (0..ts.num_states()).filter(|&s| safe[s]).collect();
    assert!(members.len() <= 16, "enumeration is exponential");
    let mut union = vec![false; ts.num_states()];
    for mask in 0u32..(1 << members.len()) {
        let mut set = vec![false; ts.num_states()];
        for (b, &s) in members.iter().enumerate() {
            set[s] = mask >> b & 1 == 1;
        }
        if is_controlled_invariant(ts, &set) {
            for s in 0..set.len() {
                union[s] |= set[s];
            }
        }
    }
    union
}

/// Removes one offending state at a time until none is left.
pub fn max_invariant_worklist<T: TransitionSystem>(ts: &T, safe: &[bool]) -> Vec<bool> {
    let mut set = safe.to_vec();
    while let Some(bad) = (0..ts.num_states()).find(|&s| set[s] && !has_input_into(ts, s, &set)) {
        set[bad] = false;
    }
    set
}

pub fn max_invariant<T: TransitionSystem>(ts: &T, safe: &[bool]) -> Vec<bool> {
    if safe.iter().filter(|&&b| b).count() <= 14 {
        max_invariant_exhaustive(ts, safe)
    } else {
        max_invariant_worklist(ts, safe)
    }
}
