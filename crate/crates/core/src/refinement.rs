//! The quantizer relation between concrete states and cells, a sampled check of
//! the feedback refinement conditions, and abstract safe sets.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::abstraction::SymbolicModel;
use crate::dynamics::{uniform_in, SampledSystem};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::quantizer::{CellIndex, LogLattice};
use crate::transition::TransitionSystem;

/// The cell related to `x`.
pub fn relate(x: &[f64], lattice: &LogLattice) -> Result<CellIndex> {
    lattice.quantize(x)
}

/// A sampled pair whose successor fell outside the stored successor set.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub cell: CellIndex,
    pub x: Vec<f64>,
    pub input: u32,
    pub u: Vec<f64>,
    /// Cell of the true successor, `None` when it left the lattice bounds.
    pub observed: Option<CellIndex>,
    pub expected: Vec<CellIndex>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefinementReport {
    pub samples_tested: usize,
    pub violations: Vec<Violation>,
    /// `(cell, input)` pairs whose input lies outside the concrete input box.
    pub condition1_failures: Vec<(CellIndex, u32)>,
}

impl RefinementReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.condition1_failures.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "samples tested: {}\ncontainment violations: {}\ninput-box failures: {}\nresult: {}\n",
            self.samples_tested,
            self.violations.len(),
            self.condition1_failures.len(),
            if self.passed() { "pass" } else { "FAIL" }
        )
    }

    /// One witness per line: state, input, observed cell, expected cells.
    pub fn witness_lines(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let observed = v
                .observed
                .as_ref()
                .map_or_else(|| "out".to_string(), ToString::to_string);
            let expected: Vec<String> = v.expected.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "x={} u={} observed={} expected={{{}}}",
                join(&v.x),
                join(&v.u),
                observed,
                expected.join(";")
            );
        }
        out
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn check_compatible(model: &SymbolicModel, sys: &SampledSystem) -> Result<()> {
    let m = model.meta();
    if sys.dim_x() != model.lattice().dim() {
        return Err(Error::Config("model and system state dimensions differ".into()));
    }
    if m.tau != sys.tau() || m.lipschitz != sys.lipschitz() {
        return Err(Error::Config(format!(
            "model built with tau={} L={} but system has tau={} L={}",
            m.tau,
            m.lipschitz,
            sys.tau(),
            sys.lipschitz()
        )));
    }
    if let Some(u) = model.inputs().first() {
        if u.len() != sys.dim_u() {
            return Err(Error::Config("model and system input dimensions differ".into()));
        }
    }
    Ok(())
}

fn sample_in_cell(rng: &mut ChaCha8Rng, lattice: &LogLattice, cell: &CellIndex) -> Vec<f64> {
    let c = lattice.cell_bounds(cell).expect("model cells are valid");
    let hull = c.hull();
    loop {
        let x = uniform_in(rng, &hull);
        if c.contains(&x) {
            return x;
        }
    }
}

/// Draws `sample_count` pairs (a uniform cell among the non-blocking ones, a
/// uniform point in it, a uniform enabled input) and checks that the true
/// successor's cell is among the stored successors.
pub fn check_feedback_refinement(
    model: &SymbolicModel,
    sys: &SampledSystem,
    sample_count: usize,
    seed: u64,
) -> Result<RefinementReport> {
    check_compatible(model, sys)?;
    let lattice = model.lattice();
    let mut report = RefinementReport::default();

    for (s, cell) in model.cells().iter().enumerate() {
        for u in model.enabled(s) {
            if !sys.input_box().contains(model.input(u)) {
                report.condition1_failures.push((cell.clone(), u));
            }
        }
    }

    if sample_count == 0 {
        log::warn!("refinement check with zero samples passes vacuously");
        return Ok(report);
    }
    let live: Vec<(usize, Vec<u32>)> = (0..model.num_cells())
        .map(|s| (s, model.enabled(s)))
        .filter(|(_, e)| !e.is_empty())
        .collect();
    if live.is_empty() {
        log::warn!("every cell is blocking; nothing to sample");
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(usize, Vec<f64>, u32)> = (0..sample_count)
        .map(|_| {
            let (s, enabled) = &live[rng.gen_range(0..live.len())];
            let x = sample_in_cell(&mut rng, lattice, &model.cells()[*s]);
            let u = *enabled.choose(&mut rng).expect("nonempty");
            (*s, x, u)
        })
        .collect();

    let mut violations: Vec<Violation> = draws
        .into_par_iter()
        .filter_map(|(s, x, u)| {
            let succ = model.successors(s, u);
            let observed = sys
                .successor(&x, model.input(u))
                .ok()
                .and_then(|y| lattice.quantize(&y).ok());
            let hit = observed
                .as_ref()
                .and_then(|c| lattice.cell_id(c))
                .is_some_and(|id| succ.binary_search(&(id as u32)).is_ok());
            (!hit).then(|| Violation {
                cell: model.cells()[s].clone(),
                x,
                input: u,
                u: model.input(u).to_vec(),
                observed,
                expected: succ.iter().map(|&t| model.cells()[t as usize].clone()).collect(),
            })
        })
        .collect();
    violations.sort_by(|a, b| {
        (&a.cell, a.input)
            .cmp(&(&b.cell, b.input))
            .then_with(|| crate::abstraction::lex_cmp(&a.x, &b.x))
    });
    report.samples_tested = sample_count;
    report.violations = violations;
    Ok(report)
}

/// Cells lying entirely inside a concrete safe box, with their enabled inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AbstractSafeSet {
    pub cells: Vec<CellIndex>,
    pub inputs: Vec<u32>,
}

pub fn abstract_safe_set(
    safe_box: &HyperBox,
    lattice: &LogLattice,
    model: &SymbolicModel,
) -> AbstractSafeSet {
    let mut out = AbstractSafeSet::default();
    if safe_box.dim() != lattice.dim() {
        log::warn!("safe box dimension does not match the lattice");
        return out;
    }
    for cell in lattice.enumerate_cells() {
        let hull = lattice.cell_bounds(&cell).expect("enumerated cells are valid").hull();
        if safe_box.contains_box(&hull) {
            if let Some(id) = model.cell_id(&cell) {
                out.inputs.extend(model.enabled(id));
            }
            out.cells.push(cell);
        }
    }
    out.inputs.sort_unstable();
    out.inputs.dedup();
    out
}
