//! The five lightweight heads trained on frozen per-pixel features, their
//! class-weighted BCE training loop, and dual-metric head selection.
//!
//! Parameter layouts (one output channel, `d` input channels, hidden width
//! `h`, `taps` = 1 for per-pixel heads and 9 for the 3x3 adapters):
//!
//! | kind            | layout                                        | count             |
//! |-----------------|-----------------------------------------------|-------------------|
//! | ConstantPrior   | `[b]`                                         | 1                 |
//! | LinearProbe     | `[w (d), b]`                                  | d + 1             |
//! | PixelMlp        | `[W1 (h x d), b1 (h), w2 (h), b2]`            | dh + h + h + 1    |
//! | Shallow/Wide    | `[K (h x d x 3 x 3), b1 (h), w2 (h), b2]`     | 9dh + h + h + 1   |
//!
//! Every head carries its biases; the adapters' 3x3 kernels are zero-padded
//! at the grid border.

mod select;
mod train;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use select::{
    evaluate_heads, regret, select_head, selection_regret, selector_score, Candidate, HeadEval, RegretMode,
    RegretOutcome, Selection, Selector,
};
pub use train::{
    class_weighted_bce, gradient_check, head_loss_gradient, train_head, train_head_traced, Batch, ClassWeights,
    GradientCheck, TrainConfig, DEFAULT_SEEDS,
};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, LabelField, ScoreField};

/// Default hidden width for the pixel MLP and shallow adapter.
pub const DEFAULT_HIDDEN: u32 = 16;
/// The wide adapter's width is this multiple of the shallow width.
pub const WIDE_FACTOR: u32 = 4;

/// Head architectures in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    ConstantPrior,
    LinearProbe,
    PixelMlp { hidden: u32 },
    ShallowAdapter { hidden: u32 },
    WideAdapter { hidden: u32 },
}

impl HeadKind {
    /// The five-member family with shallow width `h` and wide width `4h`.
    pub fn family(h: u32) -> [HeadKind; 5] {
        [
            HeadKind::ConstantPrior,
            HeadKind::LinearProbe,
            HeadKind::PixelMlp { hidden: h },
            HeadKind::ShallowAdapter { hidden: h },
            HeadKind::WideAdapter { hidden: h * WIDE_FACTOR },
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::ConstantPrior => "constant_prior",
            HeadKind::LinearProbe => "linear_probe",
            HeadKind::PixelMlp { .. } => "pixel_mlp",
            HeadKind::ShallowAdapter { .. } => "shallow_adapter",
            HeadKind::WideAdapter { .. } => "wide_adapter",
        }
    }

    pub fn hidden(self) -> Option<u32> {
        match self {
            HeadKind::PixelMlp { hidden } | HeadKind::ShallowAdapter { hidden } | HeadKind::WideAdapter { hidden } => {
                Some(hidden)
            }
            _ => None,
        }
    }

    /// Spatial taps read per output pixel: 9 for the 3x3 adapters, else 1.
    pub fn taps(self) -> usize {
        match self {
            HeadKind::ShallowAdapter { .. } | HeadKind::WideAdapter { .. } => 9,
            _ => 1,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self.hidden() {
            Some(0) => Err(Error::InvalidParameter(format!("{} needs a hidden width of at least 1", self.name()))),
            _ => Ok(()),
        }
    }

    pub fn param_count(self, channels: usize) -> usize {
        match self {
            HeadKind::ConstantPrior => 1,
            HeadKind::LinearProbe => channels + 1,
            _ => {
                let h = self.hidden().unwrap_or(0) as usize;
                h * channels * self.taps() + 2 * h + 1
            }
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hidden() {
            Some(h) => write!(f, "{}(h={h})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Frozen feature tensor laid out `(t, channel, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    spec: GridSpec,
    channels: usize,
    values: Vec<f32>,
}

impl FeatureStack {
    pub fn new(spec: GridSpec, channels: usize, values: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::ShapeError("feature stack needs at least one channel".into()));
        }
        let want = spec.total_cells() * channels;
        if values.len() != want {
            return Err(Error::ShapeError(format!("feature stack holds {} values, expected {want}", values.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore { index });
        }
        Ok(Self { spec, channels, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// The `channels x rows x cols` block of time step `t`.
    pub fn slice(&self, t: u32) -> &[f32] {
        let n = self.channels * self.spec.slice_len();
        &self.values[t as usize * n..(t as usize + 1) * n]
    }

    pub fn get(&self, t: u32, channel: usize, row: u32, col: u32) -> f32 {
        let s = self.spec.slice_len();
        self.slice(t)[channel * s + row as usize * self.spec.n_cols() as usize + col as usize]
    }

    pub fn time_slice(&self, range: Range<u32>) -> Result<Self> {
        if range.start >= range.end || range.end > self.spec.n_times() {
            return Err(Error::InvalidSplit(format!("time range {range:?} outside 0..{}", self.spec.n_times())));
        }
        let n = self.channels * self.spec.slice_len();
        Ok(Self {
            spec: self.spec.retimed(range.end - range.start)?,
            channels: self.channels,
            values: self.values[range.start as usize * n..range.end as usize * n].to_vec(),
        })
    }

    /// Input patch of every pixel, `taps * channels` values each, in flat
    /// cell order. Patch entry `ch * taps + tap` with tap `dr * 3 + dc`.
    pub(crate) fn patches(&self, taps: usize) -> Vec<f64> {
        let (rows, cols) = (self.spec.n_rows() as usize, self.spec.n_cols() as usize);
        let width = taps * self.channels;
        let mut out = Vec::with_capacity(self.spec.total_cells() * width);
        for t in 0..self.spec.n_times() {
            let x = self.slice(t);
            for r in 0..rows {
                for c in 0..cols {
                    gather(x, self.channels, rows, cols, r, c, taps, &mut out);
                }
            }
        }
        out
    }
}

#[allow(clippy::too_many_arguments)]
fn gather(x: &[f32], channels: usize, rows: usize, cols: usize, r: usize, c: usize, taps: usize, out: &mut Vec<f64>) {
    let s = rows * cols;
    for ch in 0..channels {
        let plane = &x[ch * s..(ch + 1) * s];
        if taps == 1 {
            out.push(plane[r * cols + c] as f64);
            continue;
        }
        for dr in 0..3 {
            for dc in 0..3 {
                let (rr, cc) = (r as isize + dr - 1, c as isize + dc - 1);
                let inside = rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols;
                out.push(if inside { plane[rr as usize * cols + cc as usize] as f64 } else { 0.0 });
            }
        }
    }
}

/// Trained (or initial) weights of one head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadParams {
    kind: HeadKind,
    channels: usize,
    weights: Vec<f64>,
}

impl HeadParams {
    pub fn new(kind: HeadKind, channels: usize, weights: Vec<f64>) -> Result<Self> {
        kind.validate()?;
        if kind != HeadKind::ConstantPrior && channels == 0 {
            return Err(Error::ShapeError("heads need at least one input channel".into()));
        }
        let want = kind.param_count(channels);
        if weights.len() != want {
            return Err(Error::ShapeError(format!(
                "{kind} with d={channels} has {want} parameters, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("{kind} has non-finite weights")));
        }
        Ok(Self { kind, channels, weights })
    }

    pub fn zeros(kind: HeadKind, channels: usize) -> Result<Self> {
        Self::new(kind, channels, vec![0.0; kind.param_count(channels)])
    }

    pub fn kind(&self) -> HeadKind {
        self.kind
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    /// Named parameter blocks with their index ranges into `weights`.
    pub fn blocks(&self) -> Vec<(&'static str, Range<usize>)> {
        let d = self.channels;
        match self.kind {
            HeadKind::ConstantPrior => vec![("b", 0..1)],
            HeadKind::LinearProbe => vec![("w", 0..d), ("b", d..d + 1)],
            kind => {
                let h = kind.hidden().unwrap_or(0) as usize;
                let w1 = h * d * kind.taps();
                vec![
                    (if kind.taps() == 9 { "K" } else { "W1" }, 0..w1),
                    ("b1", w1..w1 + h),
                    ("w2", w1 + h..w1 + 2 * h),
                    ("b2", w1 + 2 * h..w1 + 2 * h + 1),
                ]
            }
        }
    }

    fn hidden_width(&self) -> usize {
        self.kind.hidden().unwrap_or(0) as usize
    }

    /// Logit for one input patch. `pre` receives the hidden pre-activations.
    pub(crate) fn logit(&self, patch: &[f64], pre: &mut [f64]) -> f64 {
        let w = &self.weights;
        match self.kind {
            HeadKind::ConstantPrior => w[0],
            HeadKind::LinearProbe => {
                let d = self.channels;
                dot(&w[..d], patch) + w[d]
            }
            _ => {
                let h = self.hidden_width();
                let width = patch.len();
                let (k, rest) = w.split_at(h * width);
                let (b1, rest) = rest.split_at(h);
                let (w2, b2) = rest.split_at(h);
                let mut z = b2[0];
                for j in 0..h {
                    let p = b1[j] + dot(&k[j * width..(j + 1) * width], patch);
                    pre[j] = p;
                    if p > 0.0 {
                        z += w2[j] * p;
                    }
                }
                z
            }
        }
    }

    /// Accumulates `g * dz/dtheta` into `grad` for the patch last passed to
    /// [`HeadParams::logit`] with pre-activations `pre`.
    pub(crate) fn backward(&self, patch: &[f64], pre: &[f64], g: f64, grad: &mut [f64]) {
        match self.kind {
            HeadKind::ConstantPrior => grad[0] += g,
            HeadKind::LinearProbe => {
                let d = self.channels;
                for (gi, &x) in grad[..d].iter_mut().zip(patch) {
                    *gi += g * x;
                }
                grad[d] += g;
            }
            _ => {
                let h = self.hidden_width();
                let width = patch.len();
                let w2 = &self.weights[h * width + h..h * width + 2 * h];
                let (gk, rest) = grad.split_at_mut(h * width);
                let (gb1, rest) = rest.split_at_mut(h);
                let (gw2, gb2) = rest.split_at_mut(h);
                gb2[0] += g;
                for j in 0..h {
                    if pre[j] > 0.0 {
                        gw2[j] += g * pre[j];
                        let gj = g * w2[j];
                        gb1[j] += gj;
                        for (gi, &x) in gk[j * width..(j + 1) * width].iter_mut().zip(patch) {
                            *gi += gj * x;
                        }
                    }
                }
            }
        }
    }

    fn check_features(&self, features: &FeatureStack) -> Result<()> {
        if self.kind != HeadKind::ConstantPrior && features.channels() != self.channels {
            return Err(Error::ShapeError(format!(
                "{} expects {} channels, features have {}",
                self.kind,
                self.channels,
                features.channels()
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pre-sigmoid logits for every cell of `features`, flat cell order.
pub fn head_forward(params: &HeadParams, features: &FeatureStack) -> Result<Vec<f64>> {
    params.check_features(features)?;
    let taps = params.kind.taps();
    let width = taps * features.channels();
    let mut pre = vec![0.0; params.hidden_width()];
    if params.kind == HeadKind::ConstantPrior {
        return Ok(vec![params.weights[0]; features.spec().total_cells()]);
    }
    let patches = features.patches(taps);
    Ok(patches.chunks_exact(width).map(|p| params.logit(p, &mut pre)).collect())
}

/// Head logits as a score field (rounded to 32-bit).
pub fn head_scores(params: &HeadParams, features: &FeatureStack) -> Result<ScoreField> {
    let logits = head_forward(params, features)?;
    ScoreField::new(*features.spec(), logits.into_iter().map(|z| z as f32).collect())
}

/// Checks that features and labels describe the same grid.
pub(crate) fn check_pair(features: &FeatureStack, labels: &LabelField) -> Result<()> {
    features.spec().ensure_same(labels.spec(), "features vs labels")
}
