//! Gridded score/label fields, sparse fire sets, evaluation scopes and
//! temporal splits.
//!
//! Layout everywhere is time-major, then row-major within a time slice:
//! flat index = `(t * n_rows + row) * n_cols + col`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CELL_SIZE_KM: f64 = 5.0;

/// Shape of a (time x row x col) forecast grid.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    n_times: u32,
    n_rows: u32,
    n_cols: u32,
    cell_size_km: f64,
}

// cell_size_km is validated finite, so bitwise comparison is an equivalence.
impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n_times == other.n_times
            && self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.cell_size_km.to_bits() == other.cell_size_km.to_bits()
    }
}

impl Eq for GridSpec {}

impl GridSpec {
    pub fn new(n_times: u32, n_rows: u32, n_cols: u32) -> Result<Self> {
        Self::with_cell_size(n_times, n_rows, n_cols, DEFAULT_CELL_SIZE_KM)
    }

    pub fn with_cell_size(n_times: u32, n_rows: u32, n_cols: u32, cell_size_km: f64) -> Result<Self> {
        if n_times == 0 || n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidGrid(format!("dimensions must be positive, got {n_times}x{n_rows}x{n_cols}")));
        }
        if !(cell_size_km.is_finite() && cell_size_km > 0.0) {
            return Err(Error::InvalidGrid(format!("cell size must be positive, got {cell_size_km}")));
        }
        // u32 * u32 * u32 always fits in u128; check the u64 bound and the
        // platform's addressable range.
        let total = n_times as u128 * n_rows as u128 * n_cols as u128;
        if total > u64::MAX as u128 || total > usize::MAX as u128 {
            return Err(Error::InvalidGrid(format!("{total} cells overflow the index type")));
        }
        Ok(Self { n_times, n_rows, n_cols, cell_size_km })
    }

    pub fn n_times(&self) -> u32 {
        self.n_times
    }

    pub fn n_rows(&self) -> u32 {
        self.n_rows
    }

    pub fn n_cols(&self) -> u32 {
        self.n_cols
    }

    pub fn cell_size_km(&self) -> f64 {
        self.cell_size_km
    }

    /// Number of spatial units per time slice.
    pub fn slice_len(&self) -> usize {
        self.n_rows as usize * self.n_cols as usize
    }

    pub fn total_cells(&self) -> usize {
        self.n_times as usize * self.slice_len()
    }

    pub fn same_spatial(&self, other: &GridSpec) -> bool {
        self.n_rows == other.n_rows && self.n_cols == other.n_cols
    }

    /// Same spatial layout with a different number of time steps.
    pub fn retimed(&self, n_times: u32) -> Result<Self> {
        Self::with_cell_size(n_times, self.n_rows, self.n_cols, self.cell_size_km)
    }

    #[inline]
    pub fn flat_index(&self, cell: Cell) -> usize {
        (cell.t as usize * self.n_rows as usize + cell.row as usize) * self.n_cols as usize + cell.col as usize
    }

    #[inline]
    pub fn cell_at(&self, flat: usize) -> Cell {
        let cols = self.n_cols as usize;
        let slice = self.slice_len();
        Cell { t: (flat / slice) as u32, row: ((flat % slice) / cols) as u32, col: (flat % cols) as u32 }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.t < self.n_times && cell.row < self.n_rows && cell.col < self.n_cols
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.n_times, self.n_rows, self.n_cols, other.n_times, other.n_rows, other.n_cols
            )))
        }
    }
}

/// One unit-time pair `(t, row, col)`. Ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub t: u32,
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub const fn new(t: u32, row: u32, col: u32) -> Self {
        Self { t, row, col }
    }
}

impl From<(u32, u32, u32)> for Cell {
    fn from((t, row, col): (u32, u32, u32)) -> Self {
        Self { t, row, col }
    }
}

/// Dense 32-bit score field `s_{i,t}`. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    spec: GridSpec,
    values: Vec<f32>,
}

impl ScoreField {
    pub fn new(spec: GridSpec, values: Vec<f32>) -> Result<Self> {
        if values.len() != spec.total_cells() {
            return Err(Error::LengthMismatch { left: values.len(), right: spec.total_cells() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore { index });
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, cell: Cell) -> f32 {
        self.values[self.spec.flat_index(cell)]
    }

    pub fn slice_times(&self, range: Range<u32>) -> Result<Self> {
        let spec = sub_spec(&self.spec, &range)?;
        let n = self.spec.slice_len();
        let values = self.values[range.start as usize * n..range.end as usize * n].to_vec();
        Ok(Self { spec, values })
    }
}

/// Dense binary label field `y_{i,t}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    spec: GridSpec,
    values: Vec<bool>,
}

impl LabelField {
    pub fn new(spec: GridSpec, values: Vec<bool>) -> Result<Self> {
        if values.len() != spec.total_cells() {
            return Err(Error::LengthMismatch { left: values.len(), right: spec.total_cells() });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { values: vec![false; spec.total_cells()], spec }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.values[self.spec.flat_index(cell)]
    }

    pub fn positives(&self) -> usize {
        self.values.iter().filter(|&&y| y).count()
    }

    pub fn slice_times(&self, range: Range<u32>) -> Result<Self> {
        let spec = sub_spec(&self.spec, &range)?;
        let n = self.spec.slice_len();
        let values = self.values[range.start as usize * n..range.end as usize * n].to_vec();
        Ok(Self { spec, values })
    }
}

fn sub_spec(spec: &GridSpec, range: &Range<u32>) -> Result<GridSpec> {
    if range.start >= range.end || range.end > spec.n_times() {
        return Err(Error::InvalidSplit(format!(
            "time range {}..{} outside 0..{}",
            range.start,
            range.end,
            spec.n_times()
        )));
    }
    spec.retimed(range.end - range.start)
}

/// A wildfire output record: paired scores and labels on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    scores: ScoreField,
    labels: LabelField,
}

impl OutputRecord {
    pub fn new(scores: ScoreField, labels: LabelField) -> Result<Self> {
        scores.spec().ensure_same(labels.spec(), "scores vs labels")?;
        Ok(Self { scores, labels })
    }

    pub fn spec(&self) -> &GridSpec {
        self.scores.spec()
    }

    pub fn scores(&self) -> &ScoreField {
        &self.scores
    }

    pub fn labels(&self) -> &LabelField {
        &self.labels
    }

    pub fn time_slice(&self, range: Range<u32>) -> Result<Self> {
        Ok(Self { scores: self.scores.slice_times(range.clone())?, labels: self.labels.slice_times(range)? })
    }

    pub fn into_parts(self) -> (ScoreField, LabelField) {
        (self.scores, self.labels)
    }
}

/// Sparse, sorted, duplicate-free set of `(t, row, col)` members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FireSet {
    spec: GridSpec,
    members: Vec<Cell>,
}

impl FireSet {
    pub fn empty(spec: GridSpec) -> Self {
        Self { spec, members: Vec::new() }
    }

    pub fn from_cells<I, C>(spec: GridSpec, cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: Into<Cell>,
    {
        let mut members = Vec::new();
        for c in cells {
            let c = c.into();
            if !spec.contains(c) {
                return Err(Error::OutOfBounds((c.t, c.row, c.col)));
            }
            members.push(c);
        }
        members.sort_unstable();
        members.dedup();
        Ok(Self { spec, members })
    }

    /// Builds a set from a dense mask in flat layout; members come out sorted.
    pub fn from_dense(spec: GridSpec, mask: &[bool]) -> Result<Self> {
        if mask.len() != spec.total_cells() {
            return Err(Error::LengthMismatch { left: mask.len(), right: spec.total_cells() });
        }
        let members = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| spec.cell_at(i)).collect();
        Ok(Self { spec, members })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn members(&self) -> &[Cell] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.members.binary_search(&cell).is_ok()
    }

    pub fn is_subset_of(&self, other: &FireSet) -> bool {
        self.members.iter().all(|&c| other.contains(c))
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut mask = vec![false; self.spec.total_cells()];
        for &c in &self.members {
            mask[self.spec.flat_index(c)] = true;
        }
        mask
    }

    pub fn to_label_field(&self) -> LabelField {
        LabelField { spec: self.spec, values: self.to_dense() }
    }

    /// Spatial footprint: which (row, col) units hold a member at any time.
    pub fn footprint(&self) -> Vec<bool> {
        let mut bits = vec![false; self.spec.slice_len()];
        for c in &self.members {
            bits[c.row as usize * self.spec.n_cols() as usize + c.col as usize] = true;
        }
        bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScopeKind {
    Global,
    FireProne(f64),
    SpreadRegion,
}

/// Time-invariant spatial evaluation mask, replicated across every time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScopeMask {
    spec: GridSpec,
    kind: ScopeKind,
    cells: Vec<bool>,
}

impl ScopeMask {
    pub fn global(spec: GridSpec) -> Self {
        Self { cells: vec![true; spec.slice_len()], spec, kind: ScopeKind::Global }
    }

    /// Wraps a spatial bit mask. Global masks must be full and fire-prone
    /// masks must hold exactly `fire_prone_count(f, n)` cells.
    pub fn from_spatial(spec: GridSpec, kind: ScopeKind, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != spec.slice_len() {
            return Err(Error::LengthMismatch { left: cells.len(), right: spec.slice_len() });
        }
        let set = cells.iter().filter(|&&b| b).count();
        match kind {
            ScopeKind::Global if set != cells.len() => {
                return Err(Error::InvalidParameter("global scope must cover every cell".into()))
            }
            ScopeKind::FireProne(f) => {
                let want = fire_prone_count(f, cells.len())?;
                if set != want {
                    return Err(Error::InvalidParameter(format!(
                        "fire-prone({f}) scope must hold {want} cells, found {set}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self { spec, kind, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> ScopeKind {
        self.kind
    }

    pub fn spatial_bits(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        self.cells[row as usize * self.spec.n_cols() as usize + col as usize]
    }

    pub fn spatial_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// In-scope unit-time cells: set spatial bits times the number of steps.
    pub fn cell_count(&self) -> u64 {
        self.spatial_count() as u64 * self.spec.n_times() as u64
    }

    /// The same spatial mask attached to a grid with `n_times` steps.
    pub fn retimed(&self, n_times: u32) -> Result<Self> {
        Ok(Self { spec: self.spec.retimed(n_times)?, kind: self.kind, cells: self.cells.clone() })
    }

    pub fn is_subset_of(&self, other: &ScopeMask) -> bool {
        self.cells.len() == other.cells.len() && self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    /// Expands the mask over every time step in flat layout.
    pub fn dense(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.spec.total_cells());
        for _ in 0..self.spec.n_times() {
            out.extend_from_slice(&self.cells);
        }
        out
    }
}

/// `ceil(fraction * n)`, snapping products that are integral up to float
/// noise (e.g. `0.2 * 67375`) to that integer first.
pub fn fire_prone_count(fraction: f64, n: usize) -> Result<usize> {
    if !(fraction.is_finite() && fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let raw = fraction * n as f64;
    let nearest = raw.round();
    let k = if (raw - nearest).abs() <= 1e-9 * raw.max(1.0) { nearest } else { raw.ceil() };
    Ok((k as usize).min(n))
}

/// Disjoint, ordered train < validation < test time ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSplit {
    pub train: Range<u32>,
    pub validation: Range<u32>,
    pub test: Range<u32>,
}

impl TimeSplit {
    pub fn new(train: Range<u32>, validation: Range<u32>, test: Range<u32>) -> Result<Self> {
        for (name, r) in [("train", &train), ("validation", &validation), ("test", &test)] {
            if r.start >= r.end {
                return Err(Error::InvalidSplit(format!("{name} range {r:?} is empty")));
            }
        }
        if train.end > validation.start || validation.end > test.start {
            return Err(Error::InvalidSplit(format!(
                "ranges must be ordered and disjoint: {train:?} {validation:?} {test:?}"
            )));
        }
        Ok(Self { train, validation, test })
    }

    pub fn check(&self, spec: &GridSpec) -> Result<()> {
        if self.test.end > spec.n_times() {
            return Err(Error::InvalidSplit(format!(
                "test range ends at {} but grid has {} steps",
                self.test.end,
                spec.n_times()
            )));
        }
        Ok(())
    }
}

/// Predicted fire set: in-scope cells with `s >= tau`.
pub fn threshold_scores(record: &OutputRecord, tau: f64, scope: &ScopeMask) -> Result<FireSet> {
    if !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("threshold must be finite, got {tau}")));
    }
    let spec = *record.spec();
    spec.ensure_same(scope.spec(), "record vs scope")?;
    let slice = spec.slice_len();
    let members = record
        .scores()
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, &s)| scope.cells[i % slice] && s as f64 >= tau)
        .map(|(i, _)| spec.cell_at(i))
        .collect();
    Ok(FireSet { spec, members })
}

/// Observed fire set: in-scope cells with `y = 1`.
pub fn observed_set(labels: &LabelField, scope: &ScopeMask) -> Result<FireSet> {
    let spec = *labels.spec();
    spec.ensure_same(scope.spec(), "labels vs scope")?;
    let slice = spec.slice_len();
    let members = labels
        .values()
        .iter()
        .enumerate()
        .filter(|&(i, &y)| y && scope.cells[i % slice])
        .map(|(i, _)| spec.cell_at(i))
        .collect();
    Ok(FireSet { spec, members })
}
