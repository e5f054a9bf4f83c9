//! Construction of the finite symbolic model.
//!
//! States are the lattice cells. The inputs offered at a cell are obtained by
//! sampling the input box, integrating from the cell's lattice point and keeping
//! one input per distinct image under a fine successor quantizer `Q_mu`. A
//! transition `(c, u) -> c'` exists when `c'` meets the nominal successor of the
//! lattice point inflated by the growth radius; if the inflated box leaves the
//! lattice bounds the input is disabled at `c`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dynamics::{growth_radius, SampledSystem};
use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::quantizer::{CellIndex, EdgePolicy, LogLattice, LogQuantizerAxis, Variant};
use crate::transition::TransitionSystem;

pub const DEFAULT_INPUT_SAMPLES: usize = 51;

/// Parameters of the input-set approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct InputApproxConfig {
    /// Density parameter of the successor quantizer.
    pub mu: f64,
    /// Level scale of the successor quantizer (defaults to `mu`).
    pub mu_scale: f64,
    /// Grid points per input axis.
    pub input_samples: usize,
}

impl InputApproxConfig {
    pub fn new(mu: f64, input_samples: usize) -> Result<Self> {
        let cfg = InputApproxConfig {
            mu,
            mu_scale: mu,
            input_samples,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mu_scale(mut self, mu_scale: f64) -> Result<Self> {
        self.mu_scale = mu_scale;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::Config(format!("mu must lie in (0, 1), got {}", self.mu)));
        }
        if !(self.mu_scale > 0.0 && self.mu_scale.is_finite()) {
            return Err(Error::Config(format!(
                "mu_scale must be positive, got {}",
                self.mu_scale
            )));
        }
        if self.input_samples == 0 {
            return Err(Error::Config("input_samples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn successor_quantizer(&self) -> Result<LogQuantizerAxis> {
        LogQuantizerAxis::new(self.mu, self.mu_scale, Variant::LevelScale)
    }
}

/// Uniform grid with `per_axis` points on each axis, lexicographic order.
/// A single point per axis sits at the midpoint.
pub fn input_grid(b: &HyperBox, per_axis: usize) -> Vec<Vec<f64>> {
    let axis_points: Vec<Vec<f64>> = (0..b.dim())
        .map(|i| {
            let (lo, hi) = (b.lo()[i], b.hi()[i]);
            if per_axis <= 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..per_axis)
                    .map(|k| {
                        let n = (per_axis - 1) as f64;
                        ((n - k as f64) * lo + k as f64 * hi) / n
                    })
                    .collect()
            }
        })
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for pts in &axis_points {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |&p| {
                    let mut v = prefix.clone();
                    v.push(p);
                    v
                })
            })
            .collect();
    }
    out
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Inputs offered at `cell`: one grid input per distinct `Q_mu` image of the
/// successor of the cell's lattice point, the lexicographically smallest one.
pub fn approximate_inputs(
    cell: &CellIndex,
    sys: &SampledSystem,
    lattice: &LogLattice,
    cfg: &InputApproxConfig,
) -> Result<Vec<Vec<f64>>> {
    let q = lattice.center(cell)?;
    let qmu = cfg.successor_quantizer()?;
    let mut images: BTreeMap<Vec<i32>, Vec<f64>> = BTreeMap::new();
    for u in input_grid(sys.input_box(), cfg.input_samples) {
        let x = match sys.successor(&q, &u) {
            Ok(x) => x,
            Err(Error::Divergence { substep }) => {
                log::warn!("cell {cell}: input {u:?} diverged at substep {substep}, skipped");
                continue;
            }
            Err(e) => return Err(e),
        };
        let image = x
            .iter()
            .map(|&v| qmu.level_of(v))
            .collect::<Result<Vec<_>>>()?;
        // Grid order is lexicographic, so the first input seen is the smallest.
        images.entry(image).or_insert(u);
    }
    let mut inputs: Vec<Vec<f64>> = images.into_values().collect();
    inputs.sort_by(|a, b| lex_cmp(a, b));
    Ok(inputs)
}

/// Outcome of the inflated one-step reach computation.
#[derive(Clone, Debug, PartialEq)]
pub enum Reach {
    /// Cells meeting the inflated box, which lies inside the bounds.
    Inside(Vec<CellIndex>),
    /// The inflated box leaves the lattice bounds.
    Exits,
    Diverged,
}

/// Per-axis inflation radius at a lattice point (each axis uses its own eta).
pub fn inflation_radius(lattice: &LogLattice, q: &[f64], lipschitz: f64, tau: f64) -> Vec<f64> {
    lattice
        .axes()
        .iter()
        .zip(q)
        .map(|(a, &qi)| growth_radius(&[qi], a.eta(), lipschitz, tau)[0])
        .collect()
}

/// Whether the inflation radius of a zero level covers the whole deadzone,
/// i.e. the deadzone half-width is at most `eta / (1 - eta)`.
pub fn deadzone_covered(axis: &LogQuantizerAxis) -> bool {
    axis.deadzone() <= axis.eta() / (1.0 - axis.eta())
}

pub fn inflated_reach(
    cell: &CellIndex,
    u: &[f64],
    sys: &SampledSystem,
    lattice: &LogLattice,
) -> Result<Reach> {
    let q = lattice.center(cell)?;
    let x = match sys.successor(&q, u) {
        Ok(x) => x,
        Err(Error::Divergence { substep }) => {
            log::warn!("cell {cell}: input {u:?} diverged at substep {substep}");
            return Ok(Reach::Diverged);
        }
        Err(e) => return Err(e),
    };
    let r = inflation_radius(lattice, &q, sys.lipschitz(), sys.tau());
    let lo: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - b).collect();
    let hi: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a + b).collect();
    let inflated = HyperBox::new(lo, hi)?;
    if !lattice.bounds().contains_box(&inflated) {
        return Ok(Reach::Exits);
    }
    Ok(Reach::Inside(lattice.cells_meeting(&inflated)?))
}

/// Successor cells of `(cell, u)`; empty when the input must be disabled.
pub fn transition_targets(
    cell: &CellIndex,
    u: &[f64],
    sys: &SampledSystem,
    lattice: &LogLattice,
) -> Result<Vec<CellIndex>> {
    Ok(match inflated_reach(cell, u, sys, lattice)? {
        Reach::Inside(cells) => cells,
        Reach::Exits | Reach::Diverged => Vec::new(),
    })
}

/// Parameters the model was built with.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub tau: f64,
    pub eta: f64,
    pub mu: f64,
    pub lipschitz: f64,
}

/// Finite symbolic model with sparse successor storage.
///
/// Successor sets live in a flat slot array indexed by `(cell, input)`
/// position. In lazy mode a slot is filled on first query.
#[derive(Clone, Debug)]
pub struct SymbolicModel {
    lattice: LogLattice,
    meta: ModelMeta,
    cells: Vec<CellIndex>,
    inputs: Vec<Vec<f64>>,
    candidates: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    slots: Vec<OnceLock<Vec<u32>>>,
    source: Option<SampledSystem>,
}

impl SymbolicModel {
    fn assemble(
        lattice: LogLattice,
        meta: ModelMeta,
        inputs: Vec<Vec<f64>>,
        candidates: Vec<Vec<u32>>,
        source: Option<SampledSystem>,
    ) -> Self {
        let cells = lattice.enumerate_cells();
        let mut offsets = Vec::with_capacity(cells.len() + 1);
        let mut total = 0;
        for c in &candidates {
            offsets.push(total);
            total += c.len();
        }
        offsets.push(total);
        SymbolicModel {
            lattice,
            meta,
            cells,
            inputs,
            candidates,
            offsets,
            slots: (0..total).map(|_| OnceLock::new()).collect(),
            source,
        }
    }

    pub fn lattice(&self) -> &LogLattice {
        &self.lattice
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn cells(&self) -> &[CellIndex] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// The global abstract input table.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input(&self, id: u32) -> &[f64] {
        &self.inputs[id as usize]
    }

    pub fn cell_id(&self, cell: &CellIndex) -> Option<usize> {
        self.lattice.cell_id(cell)
    }

    pub fn is_lazy(&self) -> bool {
        self.source.is_some()
    }

    fn slot(&self, state: usize, input: u32) -> Option<usize> {
        self.candidates[state]
            .binary_search(&input)
            .ok()
            .map(|p| self.offsets[state] + p)
    }

    fn compute(&self, state: usize, input: u32) -> Vec<u32> {
        let sys = self
            .source
            .as_ref()
            .expect("unfilled slots only exist in lazy models");
        let cell = &self.cells[state];
        match transition_targets(cell, self.input(input), sys, &self.lattice) {
            Ok(targets) => targets
                .iter()
                .map(|c| self.lattice.cell_id(c).expect("targets are lattice cells") as u32)
                .collect(),
            Err(e) => {
                log::warn!("cell {cell}, input {input}: {e}");
                Vec::new()
            }
        }
    }

    /// Whether the successor set of `(state, input)` has been computed.
    pub fn is_computed(&self, state: usize, input: u32) -> bool {
        self.slot(state, input)
            .is_some_and(|s| self.slots[s].get().is_some())
    }

    pub fn computed_count(&self) -> usize {
        self.slots.iter().filter(|s| s.get().is_some()).count()
    }

    /// Computes every pending successor set.
    pub fn force_all(&self) {
        if self.source.is_none() {
            return;
        }
        (0..self.num_cells()).into_par_iter().for_each(|s| {
            for &u in &self.candidates[s] {
                self.successors(s, u);
            }
        });
    }

    /// Number of stored `(src, input, dst)` triples.
    pub fn transition_count(&self) -> usize {
        (0..self.num_cells())
            .map(|s| {
                self.candidates[s]
                    .iter()
                    .map(|&u| self.successors(s, u).len())
                    .sum::<usize>()
            })
            .sum()
    }

    /// All transitions as `(src, dst, input)`, ordered by source, input, target.
    pub fn transitions(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for s in 0..self.num_cells() {
            for &u in &self.candidates[s] {
                for &t in self.successors(s, u) {
                    out.push((s as u32, t, u));
                }
            }
        }
        out
    }

    /// Union over inputs of the successors of `state`, with multiplicity.
    pub fn state_successors(&self, state: usize) -> Vec<u32> {
        let mut out: Vec<u32> = self.candidates[state]
            .iter()
            .flat_map(|&u| self.successors(state, u).iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

impl TransitionSystem for SymbolicModel {
    fn num_states(&self) -> usize {
        self.cells.len()
    }

    fn candidate_inputs(&self, state: usize) -> &[u32] {
        &self.candidates[state]
    }

    fn successors(&self, state: usize, input: u32) -> &[u32] {
        match self.slot(state, input) {
            Some(s) => self.slots[s].get_or_init(|| self.compute(state, input)),
            None => &[],
        }
    }
}

/// Builds the symbolic model. With `lazy` set, successor sets are computed on
/// first query and memoized.
pub fn build_abstraction(
    sys: &SampledSystem,
    lattice: &LogLattice,
    cfg: &InputApproxConfig,
    lazy: bool,
) -> Result<SymbolicModel> {
    if sys.dim_x() != lattice.dim() {
        return Err(Error::Config(format!(
            "system has {} states but the lattice has dimension {}",
            sys.dim_x(),
            lattice.dim()
        )));
    }
    let cells = lattice.enumerate_cells();
    if cells.is_empty() {
        return Err(Error::Config("lattice has no cells".into()));
    }
    for (i, a) in lattice.axes().iter().enumerate() {
        if !deadzone_covered(a) {
            log::warn!(
                "axis {i}: deadzone half-width {} exceeds eta/(1-eta) = {}; successors of deadzone cells may be missed",
                a.deadzone(),
                a.eta() / (1.0 - a.eta())
            );
        }
    }
    let per_cell: Vec<Vec<Vec<f64>>> = cells
        .par_iter()
        .map(|c| approximate_inputs(c, sys, lattice, cfg))
        .collect::<Result<_>>()?;

    let mut table: Vec<Vec<f64>> = per_cell.iter().flatten().cloned().collect();
    table.sort_by(|a, b| lex_cmp(a, b));
    table.dedup_by(|a, b| lex_cmp(a, b).is_eq());

    let candidates: Vec<Vec<u32>> = per_cell
        .iter()
        .map(|inputs| {
            let mut ids: Vec<u32> = inputs
                .iter()
                .map(|u| {
                    table
                        .binary_search_by(|p| lex_cmp(p, u))
                        .expect("input is in the table") as u32
                })
                .collect();
            ids.sort_unstable();
            ids
        })
        .collect();

    let meta = ModelMeta {
        tau: sys.tau(),
        eta: lattice.axes()[0].eta(),
        mu: cfg.mu,
        lipschitz: sys.lipschitz(),
    };
    let model = SymbolicModel::assemble(lattice.clone(), meta, table, candidates, Some(sys.clone()));
    if !lazy {
        model.force_all();
        return Ok(model.detached());
    }
    Ok(model)
}

impl SymbolicModel {
    /// Drops the system handle once every slot is filled, keeping only
    /// enabled inputs as candidates.
    fn detached(self) -> SymbolicModel {
        let mut candidates = Vec::with_capacity(self.num_cells());
        let mut sets = Vec::new();
        for s in 0..self.num_cells() {
            let mut cand = Vec::new();
            for &u in &self.candidates[s] {
                let succ = self.successors(s, u);
                if !succ.is_empty() {
                    cand.push(u);
                    sets.push(succ.to_vec());
                }
            }
            candidates.push(cand);
        }
        let model = SymbolicModel::assemble(self.lattice, self.meta, self.inputs, candidates, None);
        for (slot, set) in model.slots.iter().zip(sets) {
            slot.set(set).expect("fresh slot");
        }
        model
    }
}

/// Enabled input ids at `cell`.
pub fn enabled_inputs(model: &SymbolicModel, cell: &CellIndex) -> Result<Vec<u32>> {
    let id = model
        .cell_id(cell)
        .ok_or_else(|| Error::OutOfDomain(format!("cell {cell} is not in the model")))?;
    Ok(model.enabled(id))
}

fn join<T: ToString>(items: &[T], sep: &str) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

/// Serializes the model in the line-oriented abstraction format. Lazy models
/// are fully computed first.
pub fn save_model(model: &SymbolicModel) -> String {
    let lat = model.lattice();
    let axes: Vec<String> = lat
        .axes()
        .iter()
        .map(|a| format!("{}:{}:{}", a.variant().as_str(), a.eta(), a.scale()))
        .collect();
    let m = model.meta();
    let mut out = String::new();
    out.push_str("#version 1\n");
    out.push_str(&format!(
        "#lattice dim={} edge={} axes={} lo={} hi={}\n",
        lat.dim(),
        lat.edge().as_str(),
        axes.join(";"),
        join(lat.bounds().lo(), ","),
        join(lat.bounds().hi(), ",")
    ));
    out.push_str(&format!(
        "#tau {} #eta {} #mu {} #L {}\n",
        m.tau, m.eta, m.mu, m.lipschitz
    ));
    for (i, c) in model.cells().iter().enumerate() {
        let lv: Vec<String> = c.0.iter().map(i32::to_string).collect();
        out.push_str(&format!("state {i} {}\n", lv.join(" ")));
    }
    for (i, u) in model.inputs().iter().enumerate() {
        out.push_str(&format!("input {i} {}\n", join(u, " ")));
    }
    for (s, t, u) in model.transitions() {
        out.push_str(&format!("{s} {t} {u}\n"));
    }
    out
}

/// Transition graph in DOT format: one node per cell labelled with its levels
/// and one edge per stored transition labelled with the input index.
pub fn export_dot(model: &SymbolicModel) -> String {
    let mut out = String::from("digraph abstraction {\n");
    for (i, c) in model.cells().iter().enumerate() {
        out.push_str(&format!("  s{i} [label=\"{c}\"];\n"));
    }
    for (s, t, u) in model.transitions() {
        out.push_str(&format!("  s{s} -> s{t} [label=\"{u}\"];\n"));
    }
    out.push_str("}\n");
    out
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad number `{s}`")))
}

fn parse_list(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',').map(|t| parse_f64(t, line)).collect()
}

fn parse_lattice(rest: &str, line: usize) -> Result<LogLattice> {
    let mut fields = BTreeMap::new();
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got `{tok}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("lattice header lacks `{k}`")))
    };
    let edge: EdgePolicy = get("edge")?.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
    let axes = get("axes")?
        .split(';')
        .map(|a| {
            let parts: Vec<&str> = a.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::parse(line, format!("bad axis spec `{a}`")));
            }
            let variant: Variant = parts[0]
                .parse()
                .map_err(|e: Error| Error::parse(line, e.to_string()))?;
            LogQuantizerAxis::new(parse_f64(parts[1], line)?, parse_f64(parts[2], line)?, variant)
                .map_err(|e| Error::parse(line, e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let bounds = HyperBox::new(parse_list(get("lo")?, line)?, parse_list(get("hi")?, line)?)
        .map_err(|e| Error::parse(line, e.to_string()))?;
    let dim: usize = get("dim")?
        .parse()
        .map_err(|_| Error::parse(line, "bad dim"))?;
    if dim != axes.len() {
        return Err(Error::parse(line, "dim does not match the axis list"));
    }
    LogLattice::new(axes, bounds, edge).map_err(|e| Error::parse(line, e.to_string()))
}

/// Parses the abstraction format written by [`save_model`].
pub fn load_model(text: &str) -> Result<SymbolicModel> {
    let mut version_seen = false;
    let mut lattice: Option<LogLattice> = None;
    let mut meta: Option<ModelMeta> = None;
    let mut states: Vec<(usize, usize, CellIndex)> = Vec::new();
    let mut inputs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut edges: Vec<(usize, u32, u32, u32)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#version") {
            if rest.trim() != "1" {
                return Err(Error::parse(ln, format!("unsupported version `{}`", rest.trim())));
            }
            version_seen = true;
        } else if let Some(rest) = line.strip_prefix("#lattice") {
            lattice = Some(parse_lattice(rest, ln)?);
        } else if line.starts_with("#tau") {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let mut vals = BTreeMap::new();
            for pair in toks.chunks(2) {
                if pair.len() != 2 {
                    return Err(Error::parse(ln, "unbalanced parameter header"));
                }
                vals.insert(pair[0], parse_f64(pair[1], ln)?);
            }
            let get = |k: &str| {
                vals.get(k)
                    .copied()
                    .ok_or_else(|| Error::parse(ln, format!("parameter header lacks `{k}`")))
            };
            meta = Some(ModelMeta {
                tau: get("#tau")?,
                eta: get("#eta")?,
                mu: get("#mu")?,
                lipschitz: get("#L")?,
            });
        } else if line.starts_with('#') {
            continue;
        } else if let Some(rest) = line.strip_prefix("state ") {
            let (idx, levels) = rest
                .trim()
                .split_once(' ')
                .ok_or_else(|| Error::parse(ln, "expected `state <index> <levels>`"))?;
            let idx = idx.parse().map_err(|_| Error::parse(ln, "bad state index"))?;
            let cell = CellIndex(
                levels
                    .split_whitespace()
                    .map(|t| t.parse::<i32>().map_err(|_| Error::parse(ln, format!("bad level `{t}`"))))
                    .collect::<Result<Vec<_>>>()?,
            );
            states.push((ln, idx, cell));
        } else if let Some(rest) = line.strip_prefix("input ") {
            let mut toks = rest.split_whitespace();
            let idx = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(ln, "bad input index"))?;
            let comps = toks.map(|t| parse_f64(t, ln)).collect::<Result<Vec<_>>>()?;
            if comps.is_empty() {
                return Err(Error::parse(ln, "input without components"));
            }
            inputs.push((ln, idx, comps));
        } else {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(ln, format!("unrecognized line `{line}`")));
            }
            let n = |t: &str| {
                t.parse::<u32>()
                    .map_err(|_| Error::parse(ln, format!("bad index `{t}`")))
            };
            edges.push((ln, n(toks[0])?, n(toks[1])?, n(toks[2])?));
        }
    }

    if !version_seen {
        return Err(Error::parse(1, "missing `#version 1` header"));
    }
    let lattice = lattice.ok_or_else(|| Error::parse(1, "missing `#lattice` header"))?;
    let meta = meta.ok_or_else(|| Error::parse(1, "missing parameter header"))?;

    if states.len() != lattice.num_cells() {
        return Err(Error::parse(
            1,
            format!(
                "lattice has {} cells but {} states are listed",
                lattice.num_cells(),
                states.len()
            ),
        ));
    }
    for (ln, idx, cell) in &states {
        if lattice.cell_id(cell) != Some(*idx) {
            return Err(Error::parse(*ln, format!("state {idx} does not match lattice cell {cell}")));
        }
    }
    inputs.sort_by_key(|(_, idx, _)| *idx);
    for (pos, (ln, idx, _)) in inputs.iter().enumerate() {
        if *idx != pos {
            return Err(Error::parse(*ln, "input indices must be contiguous from 0"));
        }
    }
    let table: Vec<Vec<f64>> = inputs.into_iter().map(|(_, _, u)| u).collect();

    let n = lattice.num_cells();
    let mut per_state: Vec<BTreeMap<u32, Vec<u32>>> = vec![BTreeMap::new(); n];
    for (ln, s, t, u) in edges {
        if s as usize >= n || t as usize >= n || u as usize >= table.len() {
            return Err(Error::parse(ln, "transition index out of range"));
        }
        per_state[s as usize].entry(u).or_default().push(t);
    }
    let candidates: Vec<Vec<u32>> = per_state.iter().map(|m| m.keys().copied().collect()).collect();
    let model = SymbolicModel::assemble(lattice, meta, table, candidates, None);
    for (slot, mut set) in model
        .slots
        .iter()
        .zip(per_state.into_iter().flat_map(|m| m.into_values()))
    {
        set.sort_unstable();
        set.dedup();
        slot.set(set).expect("fresh slot");
    }
    Ok(model)
}
