//! Logarithmic quantizers and the cell lattice they induce on a state box.
//!
//! A scalar axis partitions the real line into a closed deadzone `[-b0, b0]`
//! and geometrically growing regions `(b_{k-1}, b_k]` with `b_k = b0 * r^k`,
//! `r = (1 + eta) / (1 - eta)`, mirrored (left-closed) on the negative side.
//! Level `k` quantizes to `b0 * (1 + eta) * r^(k - 1)`, which keeps the
//! relative quantization error within `eta`.
//!
//! All boundaries are produced by [`LogQuantizerAxis::boundary`], so the
//! scalar quantizer, cell boxes and interval overlap queries agree bit for bit
//! on which region owns a boundary point.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::HyperBox;

/// How the scale parameter of an axis is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// `scale` is the first quantized level `d`; the deadzone is `[0, d/(1+eta)]`.
    LevelScale,
    /// `scale` is the deadzone edge `a`; the first level is `a(1+eta)`.
    DeadzoneScale,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::LevelScale => "level",
            Variant::DeadzoneScale => "deadzone",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level" => Ok(Variant::LevelScale),
            "deadzone" => Ok(Variant::DeadzoneScale),
            other => Err(Error::Input(format!(
                "unknown quantizer variant `{other}` (expected `level` or `deadzone`)"
            ))),
        }
    }
}

/// Treatment of the outermost region on each side of a bounded axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum EdgePolicy {
    /// Keep every region that meets the bounds, truncating the last one.
    Clip,
    /// Keep only levels whose quantized value lies inside the bounds (level 1
    /// is always kept); the outermost kept region is stretched to the bound.
    #[default]
    Merge,
}

impl EdgePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgePolicy::Clip => "clip",
            EdgePolicy::Merge => "merge",
        }
    }
}

impl FromStr for EdgePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clip" => Ok(EdgePolicy::Clip),
            "merge" => Ok(EdgePolicy::Merge),
            other => Err(Error::Input(format!(
                "unknown edge policy `{other}` (expected `clip` or `merge`)"
            ))),
        }
    }
}

/// Scalar logarithmic quantizer.
#[derive(Clone, Debug, PartialEq)]
pub struct LogQuantizerAxis {
    eta: f64,
    scale: f64,
    variant: Variant,
    rho: f64,
    ratio: f64,
    ln_ratio: f64,
    deadzone: f64,
}

impl LogQuantizerAxis {
    pub fn new(eta: f64, scale: f64, variant: Variant) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Input(format!("eta must lie in (0, 1), got {eta}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Input(format!(
                "quantizer scale must be positive and finite, got {scale}"
            )));
        }
        let rho = (1.0 - eta) / (1.0 + eta);
        let ratio = (1.0 + eta) / (1.0 - eta);
        let deadzone = match variant {
            Variant::LevelScale => scale / (1.0 + eta),
            Variant::DeadzoneScale => scale,
        };
        Ok(LogQuantizerAxis {
            eta,
            scale,
            variant,
            rho,
            ratio,
            ln_ratio: ratio.ln(),
            deadzone,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Quantization density `(1 - eta) / (1 + eta)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Right edge of the deadzone.
    pub fn deadzone(&self) -> f64 {
        self.deadzone
    }

    /// Upper edge of positive level `k` (`k = 0` is the deadzone edge).
    pub fn boundary(&self, k: u32) -> f64 {
        self.deadzone * self.ratio.powi(k as i32)
    }

    /// Quantized value of a signed level.
    pub fn level_value(&self, level: i32) -> f64 {
        if level == 0 {
            return 0.0;
        }
        let k = level.unsigned_abs();
        let v = self.deadzone * (1.0 + self.eta) * self.ratio.powi(k as i32 - 1);
        if level < 0 {
            -v
        } else {
            v
        }
    }

    /// Unbounded region `(lower, upper)` of a signed level. Positive levels are
    /// left-open/right-closed, negative levels the mirror image, the deadzone
    /// closed on both sides.
    pub fn region(&self, level: i32) -> (f64, f64) {
        let k = level.unsigned_abs();
        if k == 0 {
            return (-self.deadzone, self.deadzone);
        }
        let (a, b) = (self.boundary(k - 1), self.boundary(k));
        if level > 0 {
            (a, b)
        } else {
            (-b, -a)
        }
    }

    /// Level index of a nonnegative magnitude.
    fn magnitude_level(&self, m: f64) -> u32 {
        if m <= self.deadzone {
            return 0;
        }
        let est = ((m / self.deadzone).ln() / self.ln_ratio).ceil();
        let mut k = if est.is_finite() && est >= 1.0 {
            est.min(u32::MAX as f64 / 2.0) as u32
        } else {
            1
        };
        while self.boundary(k) < m {
            k += 1;
        }
        while k > 1 && self.boundary(k - 1) >= m {
            k -= 1;
        }
        k
    }

    /// Signed level whose region contains `z`.
    pub fn level_of(&self, z: f64) -> Result<i32> {
        if !z.is_finite() {
            return Err(Error::Input(format!("cannot quantize non-finite value {z}")));
        }
        let k = self.magnitude_level(z.abs());
        let k = i32::try_from(k)
            .map_err(|_| Error::Input(format!("value {z} is beyond the level range")))?;
        Ok(if z < 0.0 { -k } else { k })
    }

    /// Returns the level of `z` together with its quantized value.
    pub fn quantize(&self, z: f64) -> Result<(i32, f64)> {
        let level = self.level_of(z)?;
        Ok((level, self.level_value(level)))
    }

    /// Levels whose regions meet the closed interval `[a, b]`, ascending.
    pub fn levels_overlapping(&self, a: f64, b: f64) -> Result<Vec<i32>> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Input(format!("interval [{a}, {b}] is not finite")));
        }
        if a > b {
            return Err(Error::Input(format!("empty interval [{a}, {b}]")));
        }
        // Levels are monotone in z, so the regions met are exactly those between
        // the owners of the two endpoints.
        Ok((self.level_of(a)?..=self.level_of(b)?).collect())
    }
}

/// Symbolic state: one signed level per state axis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex(pub Vec<i32>);

impl CellIndex {
    pub fn levels(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for CellIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<i32>()
                    .map_err(|_| Error::Input(format!("bad cell level `{t}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(CellIndex)
    }
}

/// The box of one cell, with per-side closure flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub lo_closed: Vec<bool>,
    pub hi_closed: Vec<bool>,
}

impl Cell {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len()
            && x.iter().enumerate().all(|(i, &v)| {
                let above = if self.lo_closed[i] {
                    v >= self.lo[i]
                } else {
                    v > self.lo[i]
                };
                let below = if self.hi_closed[i] {
                    v <= self.hi[i]
                } else {
                    v < self.hi[i]
                };
                above && below
            })
    }

    /// Closure of the cell.
    pub fn hull(&self) -> HyperBox {
        HyperBox::new(self.lo.clone(), self.hi.clone()).expect("cell sides are ordered")
    }
}

/// Quantization lattice over a bounded state box.
#[derive(Clone, Debug, PartialEq)]
pub struct LogLattice {
    axes: Vec<LogQuantizerAxis>,
    bounds: HyperBox,
    edge: EdgePolicy,
    min_level: Vec<i32>,
    max_level: Vec<i32>,
}

fn side_levels(axis: &LogQuantizerAxis, reach: f64, edge: EdgePolicy) -> i32 {
    if reach <= axis.deadzone() {
        return 0;
    }
    let mut k = axis.magnitude_level(reach) as i32;
    if edge == EdgePolicy::Merge {
        while k > 1 && axis.level_value(k) > reach {
            k -= 1;
        }
    }
    k
}

impl LogLattice {
    pub fn new(axes: Vec<LogQuantizerAxis>, bounds: HyperBox, edge: EdgePolicy) -> Result<Self> {
        if axes.is_empty() || axes.len() != bounds.dim() {
            return Err(Error::Input(format!(
                "lattice needs one axis per bound dimension ({} axes, {} bounds)",
                axes.len(),
                bounds.dim()
            )));
        }
        let mut min_level = Vec::with_capacity(axes.len());
        let mut max_level = Vec::with_capacity(axes.len());
        for (i, axis) in axes.iter().enumerate() {
            let (lo, hi) = (bounds.lo()[i], bounds.hi()[i]);
            if lo >= hi {
                return Err(Error::Input(format!("axis {i}: bounds [{lo}, {hi}] are empty")));
            }
            if lo > -axis.deadzone() || hi < axis.deadzone() {
                return Err(Error::Input(format!(
                    "axis {i}: bounds [{lo}, {hi}] must contain the deadzone [{}, {}]",
                    -axis.deadzone(),
                    axis.deadzone()
                )));
            }
            max_level.push(side_levels(axis, hi, edge));
            min_level.push(-side_levels(axis, -lo, edge));
        }
        Ok(LogLattice {
            axes,
            bounds,
            edge,
            min_level,
            max_level,
        })
    }

    /// Same axis on every dimension, symmetric bounds `[-extent, extent]`.
    pub fn uniform(
        dim: usize,
        eta: f64,
        scale: f64,
        variant: Variant,
        extent: f64,
        edge: EdgePolicy,
    ) -> Result<Self> {
        let axis = LogQuantizerAxis::new(eta, scale, variant)?;
        Self::new(
            vec![axis; dim],
            HyperBox::symmetric(&vec![extent; dim])?,
            edge,
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[LogQuantizerAxis] {
        &self.axes
    }

    pub fn bounds(&self) -> &HyperBox {
        &self.bounds
    }

    pub fn edge(&self) -> EdgePolicy {
        self.edge
    }

    /// Inclusive level range on an axis.
    pub fn level_range(&self, axis: usize) -> (i32, i32) {
        (self.min_level[axis], self.max_level[axis])
    }

    fn axis_count(&self, axis: usize) -> usize {
        (self.max_level[axis] - self.min_level[axis] + 1) as usize
    }

    pub fn num_cells(&self) -> usize {
        (0..self.dim()).map(|i| self.axis_count(i)).product()
    }

    pub fn is_valid(&self, idx: &CellIndex) -> bool {
        idx.dim() == self.dim()
            && idx
                .levels()
                .iter()
                .enumerate()
                .all(|(i, &l)| self.min_level[i] <= l && l <= self.max_level[i])
    }

    /// Position of a cell in lexicographic enumeration order.
    pub fn cell_id(&self, idx: &CellIndex) -> Option<usize> {
        if !self.is_valid(idx) {
            return None;
        }
        let mut id = 0;
        for (i, &l) in idx.levels().iter().enumerate() {
            id = id * self.axis_count(i) + (l - self.min_level[i]) as usize;
        }
        Some(id)
    }

    pub fn cell_at(&self, id: usize) -> Option<CellIndex> {
        if id >= self.num_cells() {
            return None;
        }
        let mut rest = id;
        let mut levels = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            let c = self.axis_count(i);
            levels[i] = self.min_level[i] + (rest % c) as i32;
            rest /= c;
        }
        Some(CellIndex(levels))
    }

    /// Every cell of the lattice in lexicographic order of levels.
    pub fn enumerate_cells(&self) -> Vec<CellIndex> {
        (0..self.num_cells())
            .map(|id| self.cell_at(id).expect("id in range"))
            .collect()
    }

    /// Cell containing `x`.
    pub fn quantize(&self, x: &[f64]) -> Result<CellIndex> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!(
                "state has dimension {}, lattice has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite state {x:?}")));
        }
        if !self.bounds.contains(x) {
            return Err(Error::OutOfDomain(format!("state {x:?} is outside the lattice bounds")));
        }
        let mut levels = Vec::with_capacity(self.dim());
        for (i, axis) in self.axes.iter().enumerate() {
            let l = axis.level_of(x[i])?;
            levels.push(l.clamp(self.min_level[i], self.max_level[i]));
        }
        Ok(CellIndex(levels))
    }

    /// Like [`quantize`](Self::quantize) but returning the cell id.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        let idx = self.quantize(x)?;
        Ok(self.cell_id(&idx).expect("quantized cells are valid"))
    }

    /// Quantized value (lattice point) of a cell.
    pub fn center(&self, idx: &CellIndex) -> Result<Vec<f64>> {
        self.check(idx)?;
        Ok(idx
            .levels()
            .iter()
            .zip(&self.axes)
            .map(|(&l, a)| a.level_value(l))
            .collect())
    }

    fn check(&self, idx: &CellIndex) -> Result<()> {
        if self.is_valid(idx) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("cell {idx} is not part of the lattice")))
        }
    }

    fn axis_interval(&self, axis: usize, level: i32) -> (f64, f64, bool, bool) {
        let (mut lo, mut hi) = self.axes[axis].region(level);
        if level == self.max_level[axis] {
            hi = self.bounds.hi()[axis];
        }
        if level == self.min_level[axis] {
            lo = self.bounds.lo()[axis];
        }
        let lo_closed = level <= 0;
        let hi_closed = level >= 0;
        (lo, hi, lo_closed, hi_closed)
    }

    /// Box of a cell intersected with the lattice bounds.
    pub fn cell_bounds(&self, idx: &CellIndex) -> Result<Cell> {
        self.check(idx)?;
        let n = self.dim();
        let mut cell = Cell {
            lo: Vec::with_capacity(n),
            hi: Vec::with_capacity(n),
            lo_closed: Vec::with_capacity(n),
            hi_closed: Vec::with_capacity(n),
        };
        for (i, &l) in idx.levels().iter().enumerate() {
            let (lo, hi, lc, hc) = self.axis_interval(i, l);
            cell.lo.push(lo);
            cell.hi.push(hi);
            cell.lo_closed.push(lc);
            cell.hi_closed.push(hc);
        }
        Ok(cell)
    }

    /// True when some side of the cell was stretched beyond its natural region
    /// by [`EdgePolicy::Merge`]; such cells exceed the relative error bound.
    pub fn is_stretched(&self, idx: &CellIndex) -> bool {
        idx.levels().iter().enumerate().any(|(i, &l)| {
            let axis = &self.axes[i];
            let k = l.unsigned_abs();
            k > 0
                && ((l == self.max_level[i] && self.bounds.hi()[i] > axis.boundary(k))
                    || (l == self.min_level[i] && -self.bounds.lo()[i] > axis.boundary(k)))
        })
    }

    /// Levels on `axis` whose (clipped) regions meet `[a, b]`.
    pub fn levels_overlapping(&self, axis: usize, a: f64, b: f64) -> Result<Vec<i32>> {
        let (blo, bhi) = (self.bounds.lo()[axis], self.bounds.hi()[axis]);
        if a > bhi || b < blo {
            return Ok(Vec::new());
        }
        let levels = self.axes[axis].levels_overlapping(a.max(blo), b.min(bhi))?;
        let (min, max) = self.level_range(axis);
        let first = levels[0].clamp(min, max);
        let last = levels[levels.len() - 1].clamp(min, max);
        Ok((first..=last).collect())
    }

    /// All cells meeting the closed box `region`, in enumeration order.
    pub fn cells_meeting(&self, region: &HyperBox) -> Result<Vec<CellIndex>> {
        let mut per_axis = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let levels = self.levels_overlapping(i, region.lo()[i], region.hi()[i])?;
            if levels.is_empty() {
                return Ok(Vec::new());
            }
            per_axis.push(levels);
        }
        let mut out = vec![Vec::new()];
        for levels in &per_axis {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<i32>| {
                    levels.iter().map(move |&l| {
                        let mut p = prefix.clone();
                        p.push(l);
                        p
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(CellIndex).collect())
    }
}
