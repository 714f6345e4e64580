use serde::{Deserialize, Serialize};

use super::{check_pair, FeatureStack, HeadKind, HeadParams, DEFAULT_HIDDEN, WIDE_FACTOR};
use crate::error::{Error, Result};
use crate::grid::LabelField;
use crate::rng::SeededRng;

pub const DEFAULT_SEEDS: [u64; 5] = [1, 7, 42, 99, 123];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    FullBatch,
    /// Seeded reshuffle of all cells every epoch.
    MiniBatch {
        size: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeights {
    /// `w+ = N / (2 N+)`, `w- = N / (2 N-)`.
    Balanced,
    Fixed {
        pos: f64,
        neg: f64,
    },
}

impl ClassWeights {
    pub fn resolve(self, n: usize, n_pos: usize) -> (f64, f64) {
        match self {
            ClassWeights::Balanced => {
                let half = n as f64 / 2.0;
                (half / n_pos.max(1) as f64, half / (n - n_pos).max(1) as f64)
            }
            ClassWeights::Fixed { pos, neg } => (pos, neg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch: Batch,
    pub hidden_h: u32,
    #[serde(rename = "hidden_H")]
    pub hidden_wide: u32,
    pub class_weights: ClassWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seeds: DEFAULT_SEEDS.to_vec(),
            epochs: 200,
            learning_rate: 0.05,
            momentum: 0.9,
            batch: Batch::FullBatch,
            hidden_h: DEFAULT_HIDDEN,
            hidden_wide: DEFAULT_HIDDEN * WIDE_FACTOR,
            class_weights: ClassWeights::Balanced,
        }
    }
}

impl TrainConfig {
    /// Defaults with shallow width `h` and wide width `4h`.
    pub fn with_hidden(h: u32) -> Self {
        Self { hidden_h: h, hidden_wide: h * WIDE_FACTOR, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.hidden_h == 0 || self.hidden_wide <= self.hidden_h {
            return bad("need 1 <= hidden_h < hidden_H");
        }
        if let Batch::MiniBatch { size: 0 } = self.batch {
            return bad("mini-batch size must be positive");
        }
        if let ClassWeights::Fixed { pos, neg } = self.class_weights {
            if !(pos > 0.0 && neg > 0.0 && pos.is_finite() && neg.is_finite()) {
                return bad("class weights must be positive");
            }
        }
        Ok(())
    }

    /// The five heads at this config's widths, in tie-break order.
    pub fn family(&self) -> [HeadKind; 5] {
        [
            HeadKind::ConstantPrior,
            HeadKind::LinearProbe,
            HeadKind::PixelMlp { hidden: self.hidden_h },
            HeadKind::ShallowAdapter { hidden: self.hidden_h },
            HeadKind::WideAdapter { hidden: self.hidden_wide },
        ]
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-element weighted loss and its derivative in `z`.
#[inline]
fn bce_term(z: f64, y: bool, w_pos: f64, w_neg: f64) -> (f64, f64) {
    if y {
        (w_pos * softplus(-z), w_pos * (sigmoid(z) - 1.0))
    } else {
        (w_neg * softplus(z), w_neg * sigmoid(z))
    }
}

/// Mean class-weighted binary cross-entropy of `logits` against `labels`
/// and its gradient with respect to each logit.
pub fn class_weighted_bce(logits: &[f64], labels: &[bool], w_pos: f64, w_neg: f64) -> Result<(f64, Vec<f64>)> {
    if logits.len() != labels.len() {
        return Err(Error::LengthMismatch { left: logits.len(), right: labels.len() });
    }
    if !(w_pos > 0.0 && w_neg > 0.0) {
        return Err(Error::InvalidParameter("class weights must be positive".into()));
    }
    if logits.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let grad = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            let (l, g) = bce_term(z, y, w_pos, w_neg);
            loss += l;
            g / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// Weighted BCE of a head over every cell of `features` and its gradient
/// with respect to the head's parameters.
pub fn head_loss_gradient(
    params: &HeadParams,
    features: &FeatureStack,
    labels: &LabelField,
    w_pos: f64,
    w_neg: f64,
) -> Result<(f64, Vec<f64>)> {
    check_pair(features, labels)?;
    params.check_features(features)?;
    let taps = params.kind().taps();
    let patches = features.patches(taps);
    let idx: Vec<usize> = (0..labels.values().len()).collect();
    Ok(batch_loss_grad(params, &patches, taps * features.channels(), labels.values(), &idx, w_pos, w_neg))
}

fn batch_loss_grad(
    params: &HeadParams,
    patches: &[f64],
    width: usize,
    labels: &[bool],
    idx: &[usize],
    w_pos: f64,
    w_neg: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; params.weights().len()];
    let mut pre = vec![0.0; params.hidden_width()];
    let n = idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let patch = &patches[i * width..(i + 1) * width];
        let z = params.logit(patch, &mut pre);
        let (l, g) = bce_term(z, labels[i], w_pos, w_neg);
        loss += l;
        params.backward(patch, &pre, g / n, &mut grad);
    }
    (loss / n, grad)
}

/// Central-difference step used by [`gradient_check`].
pub const GRADIENT_CHECK_STEP: f64 = 1e-5;
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// Per parameter block, `||analytic - numeric|| / max(||analytic||, ||numeric||)`
    /// in the Euclidean norm (0 when both vanish).
    pub block_errors: Vec<(&'static str, f64)>,
    /// Largest entry of `block_errors`.
    pub max_rel_error: f64,
    /// Smallest hidden pre-activation magnitude over all pixels. Checks are
    /// only meaningful when this exceeds the step times the input scale,
    /// otherwise a perturbation can cross a ReLU kink.
    pub min_abs_preactivation: f64,
}

/// Compares the analytic gradient of the head's weighted BCE with central
/// finite differences on every parameter.
pub fn gradient_check(
    params: &HeadParams,
    features: &FeatureStack,
    labels: &LabelField,
    w_pos: f64,
    w_neg: f64,
) -> Result<GradientCheck> {
    let (_, analytic) = head_loss_gradient(params, features, labels, w_pos, w_neg)?;
    let taps = params.kind().taps();
    let width = taps * features.channels();
    let patches = features.patches(taps);
    let mut pre = vec![0.0; params.hidden_width()];
    let mut min_pre = f64::INFINITY;
    if !pre.is_empty() {
        for p in patches.chunks_exact(width) {
            params.logit(p, &mut pre);
            min_pre = pre.iter().fold(min_pre, |m, v| m.min(v.abs()));
        }
    }
    let idx: Vec<usize> = (0..labels.values().len()).collect();
    let loss_at = |w: &[f64]| -> Result<f64> {
        let p = HeadParams::new(params.kind(), params.channels(), w.to_vec())?;
        Ok(batch_loss_grad(&p, &patches, width, labels.values(), &idx, w_pos, w_neg).0)
    };
    let mut w = params.weights().to_vec();
    let mut block_errors = Vec::new();
    for (name, range) in params.blocks() {
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for i in range {
            let orig = w[i];
            w[i] = orig + GRADIENT_CHECK_STEP;
            let up = loss_at(&w)?;
            w[i] = orig - GRADIENT_CHECK_STEP;
            let down = loss_at(&w)?;
            w[i] = orig;
            let numeric = (up - down) / (2.0 * GRADIENT_CHECK_STEP);
            diff += (analytic[i] - numeric).powi(2);
            na += analytic[i].powi(2);
            nn += numeric.powi(2);
        }
        let den = na.max(nn).sqrt();
        block_errors.push((name, if den == 0.0 { 0.0 } else { diff.sqrt() / den }));
    }
    Ok(GradientCheck {
        max_rel_error: block_errors.iter().fold(0.0, |m, e| m.max(e.1)),
        block_errors,
        min_abs_preactivation: min_pre,
    })
}

fn init_params(kind: HeadKind, channels: usize, seed: u64) -> Result<HeadParams> {
    let stream = match kind {
        HeadKind::ConstantPrior => 1,
        HeadKind::LinearProbe => 2,
        HeadKind::PixelMlp { .. } => 3,
        HeadKind::ShallowAdapter { .. } => 4,
        HeadKind::WideAdapter { .. } => 5,
    };
    let mut rng = SeededRng::new(seed).split(stream);
    let mut params = HeadParams::zeros(kind, channels)?;
    let fan_in = |name: &str| match (kind, name) {
        (HeadKind::ConstantPrior, _) => 1.0,
        (HeadKind::LinearProbe, _) => channels as f64,
        (_, "w2" | "b2") => kind.hidden().unwrap_or(1) as f64,
        _ => (channels * kind.taps()) as f64,
    };
    for (name, range) in params.blocks() {
        let bound = 1.0 / fan_in(name).sqrt();
        for w in &mut params.weights_mut()[range] {
            *w = rng.uniform_in(-bound, bound);
        }
    }
    Ok(params)
}

/// Trains one head from a seeded initialisation with SGD + momentum on the
/// class-weighted BCE for a fixed number of epochs.
pub fn train_head(
    kind: HeadKind,
    features: &FeatureStack,
    labels: &LabelField,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<HeadParams> {
    train_head_traced(kind, features, labels, cfg, seed).map(|(p, _)| p)
}

/// [`train_head`] that also returns the mean training loss of every epoch,
/// measured before that epoch's updates.
pub fn train_head_traced(
    kind: HeadKind,
    features: &FeatureStack,
    labels: &LabelField,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(HeadParams, Vec<f64>)> {
    cfg.validate()?;
    kind.validate()?;
    check_pair(features, labels)?;
    let y = labels.values();
    let n = y.len();
    let n_pos = labels.positives();
    if kind != HeadKind::ConstantPrior && (n_pos == 0 || n_pos == n) {
        return Err(Error::SingleClassData);
    }
    let (w_pos, w_neg) = cfg.class_weights.resolve(n, n_pos);
    let d = features.channels();
    let mut params = init_params(kind, d, seed)?;
    let taps = kind.taps();
    let width = if kind == HeadKind::ConstantPrior { 0 } else { taps * d };
    let patches = if width == 0 { Vec::new() } else { features.patches(taps) };

    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle = SeededRng::new(seed).split(100);
    let mut velocity = vec![0.0; params.weights().len()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let batch = match cfg.batch {
            Batch::FullBatch => n,
            Batch::MiniBatch { size } => {
                for i in (1..n).rev() {
                    order.swap(i, shuffle.below(i as u64 + 1) as usize);
                }
                size.min(n)
            }
        };
        let mut epoch_loss = 0.0;
        for idx in order.chunks(batch) {
            let (loss, grad) = batch_loss_grad(&params, &patches, width, y, idx, w_pos, w_neg);
            epoch_loss += loss * idx.len() as f64;
            for ((w, v), g) in params.weights_mut().iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v + g;
                *w -= cfg.learning_rate * *v;
            }
        }
        history.push(epoch_loss / n as f64);
    }
    Ok((params, history))
}
