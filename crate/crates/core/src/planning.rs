//! Open-loop plans that visit a sequence of goal cells.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::abstraction::SymbolicModel;
use crate::dynamics::SampledSystem;
use crate::error::{Error, Result};
use crate::quantizer::CellIndex;
use crate::transition::TransitionSystem;

/// Apply `input` for `hold` consecutive sampling periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlanStep {
    pub input: u32,
    pub hold: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    /// Total number of sampling periods.
    pub fn periods(&self) -> usize {
        self.steps.iter().map(|s| s.hold).sum()
    }

    fn push(&mut self, input: u32, hold: usize) {
        match self.steps.last_mut() {
            Some(last) if last.input == input => last.hold += hold,
            _ => self.steps.push(PlanStep { input, hold }),
        }
    }

    /// Input index applied in each period.
    pub fn schedule(&self) -> impl Iterator<Item = u32> + '_ {
        self.steps
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.input, s.hold))
    }
}

pub fn save_plan(plan: &Plan) -> String {
    let mut out = String::from("#plan 1\n");
    for s in &plan.steps {
        let _ = writeln!(out, "{} {}", s.input, s.hold);
    }
    out
}

pub fn load_plan(text: &str) -> Result<Plan> {
    let mut header = false;
    let mut plan = Plan::default();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#plan") {
            if rest.trim() != "1" {
                return Err(Error::parse(ln, format!("unsupported version `{}`", rest.trim())));
            }
            header = true;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parsed = match toks.as_slice() {
            [u, h] => u.parse::<u32>().ok().zip(h.parse::<usize>().ok()),
            _ => None,
        };
        let (input, hold) =
            parsed.ok_or_else(|| Error::parse(ln, "expected `<input index> <hold steps>`"))?;
        plan.steps.push(PlanStep { input, hold });
    }
    if !header {
        return Err(Error::parse(1, "missing `#plan 1` header"));
    }
    Ok(plan)
}

/// Which abstract transitions the search may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PlanMode {
    /// Only transitions with a single successor, so the plan is exact on the
    /// abstraction.
    #[default]
    Deterministic,
    /// Any successor of an enabled input; the plan must be checked in closed loop.
    Nondeterministic,
}

/// Shortest `(input, next state)` path from `from` to `to`, ties going to the
/// lowest input and then the lowest successor.
fn bfs<T: TransitionSystem + ?Sized>(
    ts: &T,
    from: usize,
    to: usize,
    mode: PlanMode,
) -> Option<Vec<(u32, usize)>> {
    if from == to {
        return Some(Vec::new());
    }
    let mut parent: Vec<Option<(usize, u32)>> = vec![None; ts.num_states()];
    let mut seen = vec![false; ts.num_states()];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(s) = queue.pop_front() {
        for &u in ts.candidate_inputs(s) {
            let succ = ts.successors(s, u);
            if mode == PlanMode::Deterministic && succ.len() != 1 {
                continue;
            }
            for &t in succ {
                let t = t as usize;
                if seen[t] {
                    continue;
                }
                seen[t] = true;
                parent[t] = Some((s, u));
                if t == to {
                    let mut path = Vec::new();
                    let mut cur = t;
                    while let Some((p, u)) = parent[cur] {
                        path.push((u, cur));
                        cur = p;
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(t);
            }
        }
    }
    None
}

fn state_of(model: &SymbolicModel, cell: &CellIndex) -> Result<usize> {
    model
        .cell_id(cell)
        .ok_or_else(|| Error::OutOfDomain(format!("cell {cell} is not a model state")))
}

/// Concatenates shortest abstract paths through `goals` in order.
pub fn plan_reach(
    model: &SymbolicModel,
    start: &CellIndex,
    goals: &[CellIndex],
    mode: PlanMode,
) -> Result<Plan> {
    let mut cur = state_of(model, start)?;
    let mut plan = Plan::default();
    for goal in goals {
        let g = state_of(model, goal)?;
        let path = bfs(model, cur, g, mode).ok_or_else(|| Error::Unreachable {
            goal: goal.to_string(),
        })?;
        for (u, _) in path {
            plan.push(u, 1);
        }
        cur = g;
    }
    Ok(plan)
}

/// Settings for [`plan_guided`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GuidedOptions {
    /// Longest hold of one input while waiting for the cell to change.
    pub max_hold: usize,
    /// Restrict each move to the inputs enabled at the current cell.
    pub enabled_only: bool,
}

impl Default for GuidedOptions {
    fn default() -> Self {
        GuidedOptions {
            max_hold: 50,
            enabled_only: false,
        }
    }
}

/// Cell reached by a macro-step, the concrete state there and the hold count.
type Arrival = (usize, Vec<f64>, usize);

/// Search node: cell, concrete state and `(parent, input, hold)`.
type Node = (usize, Vec<f64>, Option<(usize, u32, usize)>);

/// Holds `u` from `x` until the cell changes. `None` if the state leaves the
/// bounds, diverges or stays put for `max_hold` periods.
fn macro_step(
    sys: &SampledSystem,
    model: &SymbolicModel,
    x: &[f64],
    from: usize,
    u: &[f64],
    max_hold: usize,
) -> Option<Arrival> {
    let mut y = x.to_vec();
    for h in 1..=max_hold {
        y = sys.successor(&y, u).ok()?;
        let id = model.lattice().locate(&y).ok()?;
        if id != from {
            return Some((id, y, h));
        }
    }
    None
}

/// Simulation-guided planner.
///
/// Each goal is reached by a cheapest-first search over cells in which a move
/// holds one abstract input on the concrete dynamics until the cell changes.
/// The cost is the number of sampling periods, and each cell is expanded from
/// the concrete state of its cheapest arrival. The result is an executable
/// open-loop plan from `x0`.
pub fn plan_guided(
    sys: &SampledSystem,
    model: &SymbolicModel,
    x0: &[f64],
    goals: &[CellIndex],
    opts: GuidedOptions,
) -> Result<Plan> {
    let lattice = model.lattice();
    let mut x = x0.to_vec();
    let mut cur = lattice.locate(&x)?;
    let mut plan = Plan::default();
    for goal in goals {
        let g = state_of(model, goal)?;
        if cur == g {
            continue;
        }
        let mut nodes: Vec<Node> = vec![(cur, x.clone(), None)];
        let mut done = vec![false; model.num_cells()];
        let mut heap = BinaryHeap::from([Reverse((0usize, 0usize))]);
        let mut reached = None;
        while let Some(Reverse((cost, node))) = heap.pop() {
            let cell = nodes[node].0;
            if done[cell] {
                continue;
            }
            done[cell] = true;
            if cell == g {
                reached = Some(node);
                break;
            }
            let inputs: Vec<u32> = if opts.enabled_only {
                model.enabled(cell)
            } else {
                (0..model.inputs().len() as u32).collect()
            };
            let state = nodes[node].1.clone();
            let moves: Vec<(u32, Option<Arrival>)> = inputs
                .par_iter()
                .map(|&u| (u, macro_step(sys, model, &state, cell, model.input(u), opts.max_hold)))
                .collect();
            for (u, m) in moves {
                if let Some((next, y, h)) = m {
                    if !done[next] {
                        nodes.push((next, y, Some((node, u, h))));
                        heap.push(Reverse((cost + h, nodes.len() - 1)));
                    }
                }
            }
        }
        let end = reached.ok_or_else(|| Error::Unreachable {
            goal: goal.to_string(),
        })?;
        let mut segment = Vec::new();
        let mut n = end;
        while let Some((p, u, h)) = nodes[n].2 {
            segment.push((u, h));
            n = p;
        }
        for &(u, h) in segment.iter().rev() {
            plan.push(u, h);
        }
        x = nodes[end].1.clone();
        cur = g;
    }
    Ok(plan)
}
