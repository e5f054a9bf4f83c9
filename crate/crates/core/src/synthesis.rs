//! Safety synthesis by the controllable-predecessor fixed point and refinement
//! of the resulting abstract controller to concrete states.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::abstraction::SymbolicModel;
use crate::error::{Error, Result};
use crate::quantizer::{CellIndex, LogLattice};
use crate::refinement::{relate, AbstractSafeSet};
use crate::transition::TransitionSystem;

fn forces_into<T: TransitionSystem + ?Sized>(ts: &T, state: usize, input: u32, target: &[bool]) -> bool {
    let succ = ts.successors(state, input);
    !succ.is_empty() && succ.iter().all(|&t| target[t as usize])
}

fn has_forcing_input<T: TransitionSystem + ?Sized>(ts: &T, state: usize, target: &[bool]) -> bool {
    ts.candidate_inputs(state)
        .iter()
        .any(|&u| forces_into(ts, state, u, target))
}

/// States with an enabled input whose successors all lie in `target`.
pub fn cpre<T: TransitionSystem + Sync + ?Sized>(ts: &T, target: &[bool]) -> Vec<bool> {
    assert_eq!(target.len(), ts.num_states(), "target mask has the wrong length");
    (0..ts.num_states())
        .into_par_iter()
        .map(|s| has_forcing_input(ts, s, target))
        .collect()
}

/// Result of the safety iteration on a plain transition system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fixpoint {
    pub domain: Vec<bool>,
    /// Inputs keeping each domain state inside the domain; empty elsewhere.
    pub admissible: Vec<Vec<u32>>,
    /// Number of iterations until `W_{i+1} = W_i`.
    pub iterations: usize,
    /// `|W_0|, |W_1|, ..., |W_M|`.
    pub chain: Vec<usize>,
}

/// Iterates `W_0 = safe`, `W_{i+1} = cpre(W_i) ∩ safe` to its fixed point.
///
/// Only states of the current iterate are examined, so a lazily built model
/// computes transitions for those states alone.
pub fn solve_safety<T: TransitionSystem + Sync + ?Sized>(ts: &T, safe: &[bool]) -> Fixpoint {
    assert_eq!(safe.len(), ts.num_states(), "safe mask has the wrong length");
    let mut w = safe.to_vec();
    let mut chain = vec![w.iter().filter(|&&b| b).count()];
    let mut iterations = 0;
    loop {
        let next: Vec<bool> = (0..ts.num_states())
            .into_par_iter()
            .map(|s| w[s] && has_forcing_input(ts, s, &w))
            .collect();
        iterations += 1;
        chain.push(next.iter().filter(|&&b| b).count());
        if next == w {
            break;
        }
        w = next;
    }
    let admissible = (0..ts.num_states())
        .map(|s| {
            if !w[s] {
                return Vec::new();
            }
            ts.candidate_inputs(s)
                .iter()
                .copied()
                .filter(|&u| forces_into(ts, s, u, &w))
                .collect()
        })
        .collect();
    Fixpoint {
        domain: w,
        admissible,
        iterations,
        chain,
    }
}

/// Cell-level `cpre` on a symbolic model.
pub fn cpre_cells(model: &SymbolicModel, target: &[CellIndex]) -> Result<Vec<CellIndex>> {
    let mask = cell_mask(model, target)?;
    Ok(cpre(model, &mask)
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(s, _)| model.cells()[s].clone())
        .collect())
}

fn cell_mask(model: &SymbolicModel, cells: &[CellIndex]) -> Result<Vec<bool>> {
    let mut mask = vec![false; model.num_cells()];
    for c in cells {
        let id = model
            .cell_id(c)
            .ok_or_else(|| Error::Config(format!("cell {c} is not a model state")))?;
        mask[id] = true;
    }
    Ok(mask)
}

/// Abstract safety controller: domain cells and their admissible inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetyController {
    pub admissible: BTreeMap<CellIndex, Vec<u32>>,
    pub safe_cells: Vec<CellIndex>,
    pub iterations: usize,
    pub chain: Vec<usize>,
    /// Input table the indices refer to.
    pub inputs: Vec<Vec<f64>>,
}

impl SafetyController {
    pub fn domain(&self) -> impl Iterator<Item = &CellIndex> {
        self.admissible.keys()
    }

    pub fn domain_size(&self) -> usize {
        self.admissible.len()
    }

    pub fn contains(&self, cell: &CellIndex) -> bool {
        self.admissible.contains_key(cell)
    }
}

pub fn safety_fixpoint(model: &SymbolicModel, safe: &AbstractSafeSet) -> Result<SafetyController> {
    let mask = cell_mask(model, &safe.cells)?;
    let fp = solve_safety(model, &mask);
    let admissible = fp
        .domain
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(s, _)| (model.cells()[s].clone(), fp.admissible[s].clone()))
        .collect();
    let mut safe_cells = safe.cells.clone();
    safe_cells.sort();
    Ok(SafetyController {
        admissible,
        safe_cells,
        iterations: fp.iterations,
        chain: fp.chain,
        inputs: model.inputs().to_vec(),
    })
}

fn levels(c: &CellIndex) -> String {
    c.0.iter().map(i32::to_string).collect::<Vec<_>>().join(" ")
}

fn parse_levels(s: &str, line: usize) -> Result<CellIndex> {
    let v = s
        .split_whitespace()
        .map(|t| t.parse::<i32>().map_err(|_| Error::parse(line, format!("bad level `{t}`"))))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(Error::parse(line, "cell without levels"));
    }
    Ok(CellIndex(v))
}

/// Serializes the controller in the `#controller 1` format.
pub fn save_controller(ctrl: &SafetyController) -> String {
    let mut out = String::from("#controller 1\n");
    let _ = writeln!(out, "#iterations {}", ctrl.iterations);
    let chain: Vec<String> = ctrl.chain.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "#chain {}", chain.join(" "));
    for (i, u) in ctrl.inputs.iter().enumerate() {
        let comps: Vec<String> = u.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "input {i} {}", comps.join(" "));
    }
    for c in &ctrl.safe_cells {
        let _ = writeln!(out, "safe {}", levels(c));
    }
    for (c, us) in &ctrl.admissible {
        let ids: Vec<String> = us.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "cell {} : {}", levels(c), ids.join(" "));
    }
    out
}

pub fn load_controller(text: &str) -> Result<SafetyController> {
    let mut header = false;
    let mut ctrl = SafetyController {
        admissible: BTreeMap::new(),
        safe_cells: Vec::new(),
        iterations: 0,
        chain: Vec::new(),
        inputs: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#controller") {
            if rest.trim() != "1" {
                return Err(Error::parse(ln, format!("unsupported version `{}`", rest.trim())));
            }
            header = true;
        } else if let Some(rest) = line.strip_prefix("#iterations") {
            ctrl.iterations = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(ln, "bad iteration count"))?;
        } else if let Some(rest) = line.strip_prefix("#chain") {
            ctrl.chain = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(ln, "bad chain entry")))
                .collect::<Result<_>>()?;
        } else if line.starts_with('#') {
            continue;
        } else if let Some(rest) = line.strip_prefix("input ") {
            let mut toks = rest.split_whitespace();
            let idx: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(ln, "bad input index"))?;
            if idx != ctrl.inputs.len() {
                return Err(Error::parse(ln, "input indices must be contiguous from 0"));
            }
            let comps = toks
                .map(|t| t.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad number `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            ctrl.inputs.push(comps);
        } else if let Some(rest) = line.strip_prefix("safe ") {
            ctrl.safe_cells.push(parse_levels(rest, ln)?);
        } else if let Some(rest) = line.strip_prefix("cell ") {
            let (cell, ids) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(ln, "expected `cell <levels> : <inputs>`"))?;
            let ids = ids
                .split_whitespace()
                .map(|t| {
                    t.parse::<u32>()
                        .ok()
                        .filter(|&u| (u as usize) < ctrl.inputs.len())
                        .ok_or_else(|| Error::parse(ln, format!("bad input index `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if ids.is_empty() {
                return Err(Error::parse(ln, "domain cell without admissible inputs"));
            }
            ctrl.admissible.insert(parse_levels(cell, ln)?, ids);
        } else {
            return Err(Error::parse(ln, format!("unrecognized line `{line}`")));
        }
    }
    if !header {
        return Err(Error::parse(1, "missing `#controller 1` header"));
    }
    Ok(ctrl)
}

/// Answer of the refined controller at a concrete state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlQuery {
    pub inputs: Vec<u32>,
    /// Set when the state lies outside the lattice bounds.
    pub out_of_bounds: bool,
}

/// The abstract controller composed with the quantizer.
#[derive(Clone, Debug)]
pub struct ConcreteController {
    controller: SafetyController,
    lattice: LogLattice,
}

pub fn refine_controller(ctrl: SafetyController, lattice: LogLattice) -> ConcreteController {
    ConcreteController {
        controller: ctrl,
        lattice,
    }
}

impl ConcreteController {
    pub fn controller(&self) -> &SafetyController {
        &self.controller
    }

    pub fn lattice(&self) -> &LogLattice {
        &self.lattice
    }

    pub fn query(&self, x: &[f64]) -> ControlQuery {
        match relate(x, &self.lattice) {
            Ok(cell) => ControlQuery {
                inputs: self
                    .controller
                    .admissible
                    .get(&cell)
                    .cloned()
                    .unwrap_or_default(),
                out_of_bounds: false,
            },
            Err(_) => ControlQuery {
                inputs: Vec::new(),
                out_of_bounds: true,
            },
        }
    }

    /// Lowest admissible input index at `x`.
    pub fn pick(&self, x: &[f64]) -> Option<u32> {
        self.query(x).inputs.first().copied()
    }

    pub fn input(&self, id: u32) -> &[f64] {
        &self.controller.inputs[id as usize]
    }
}
