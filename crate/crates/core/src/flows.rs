//! Euler gradient flows of point clouds and color palettes.
//!
//! The flow integrates `Ẋ = -n ∇_X D(μ_X, ν)` with explicit Euler steps,
//! where `D` is any of the estimators. Because each support carries mass
//! `1/n`, the factor `n` makes the per-point step equal to the step size
//! times the per-point gradient of the unweighted objective.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::estimators::{estimate, Estimate, EstimatorConfig, Method};
use crate::eval::exact_w2;
use crate::gradients::{grad_is_ebsw, grad_resampled, grad_sw, GradientMode, SupportGradient};
use crate::image::RgbImage;
use crate::measures::EmpiricalMeasure;
use crate::seed::RngSeed;

/// Step size used when none is given; tuned on unit-scale 2D fixtures.
pub const DEFAULT_STEP_SIZE: f64 = 0.01;

/// Step size used for color transfer on palettes normalized to `[0, 1]³`.
pub const DEFAULT_COLOR_STEP_SIZE: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// A new, deterministically derived seed at every step.
    #[default]
    FreshPerStep,
    /// The estimator seed is reused at every step (same directions while
    /// the cloud moves).
    Fixed,
}

impl std::str::FromStr for SeedPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh" | "fresh-per-step" | "fresh_per_step" => Ok(SeedPolicy::FreshPerStep),
            "fixed" => Ok(SeedPolicy::Fixed),
            _ => Err(Error::argument(format!("unknown seed policy {s:?}"))),
        }
    }
}

impl std::fmt::Display for SeedPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SeedPolicy::FreshPerStep => "fresh",
            SeedPolicy::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub steps: usize,
    pub step_size: f64,
    pub estimator: EstimatorConfig,
    /// Only affects IS-EBSW; SIR, IMH and RMH always use the parameter-copy
    /// gradient and SW/Max-SW have no weights.
    pub gradient_mode: GradientMode,
    pub eval_every: usize,
    pub seed_policy: SeedPolicy,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            step_size: DEFAULT_STEP_SIZE,
            estimator: EstimatorConfig::default(),
            gradient_mode: GradientMode::Conventional,
            eval_every: 100,
            seed_policy: SeedPolicy::FreshPerStep,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.steps == 0 {
            return Err(Error::argument("flow needs at least one step"));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::argument("step size must be positive"));
        }
        if self.eval_every == 0 || self.eval_every > self.steps {
            return Err(Error::argument(format!(
                "eval_every must be in 1..={}, got {}",
                self.steps, self.eval_every
            )));
        }
        Ok(())
    }

    fn seed_for_step(&self, step: usize) -> u64 {
        match self.seed_policy {
            SeedPolicy::FreshPerStep => RngSeed(self.estimator.seed).derive(step as u64).0,
            SeedPolicy::Fixed => self.estimator.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub step: usize,
    pub estimator_value: f64,
    pub eval_w2: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,estimator_value,eval_w2\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{},{}", r.step, r.estimator_value, r.eval_w2);
        }
        out
    }

    pub fn first(&self) -> Option<&FlowRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }
}

/// `X ← X − γ · n · ∇_X D`.
pub fn euler_step(x: &EmpiricalMeasure, grad: &SupportGradient, step_size: f64) -> Result<EmpiricalMeasure> {
    if grad.len() != x.len() || grad.dim() != x.dim() {
        return Err(Error::argument("gradient shape does not match the cloud"));
    }
    let scale = step_size * x.len() as f64;
    let points = x
        .points()
        .iter()
        .zip(grad.as_slice())
        .map(|(p, g)| p - scale * g)
        .collect();
    EmpiricalMeasure::new(points, x.dim())
}

fn flow_gradient(
    x: &EmpiricalMeasure,
    target: &EmpiricalMeasure,
    est: &Estimate,
    cfg: &FlowConfig,
) -> Result<SupportGradient> {
    let dirs = est.batch.directions();
    let p = cfg.estimator.p;
    match cfg.estimator.method {
        Method::Sw | Method::MaxSw => grad_sw(x, target, dirs, p),
        Method::IsEbsw => grad_is_ebsw(x, target, dirs, p, &cfg.estimator.energy, cfg.gradient_mode),
        Method::SirEbsw | Method::ImhEbsw | Method::RmhEbsw => grad_resampled(x, target, dirs, p),
    }
}

/// Estimate and its gradient at `x`; a degenerate slicing distribution
/// (the cloud already sits on the target) yields value and gradient 0.
fn evaluate(
    x: &EmpiricalMeasure,
    target: &EmpiricalMeasure,
    cfg: &FlowConfig,
    step: usize,
) -> Result<(f64, SupportGradient)> {
    let est_cfg = cfg.estimator.with_seed(cfg.seed_for_step(step));
    let step_cfg = FlowConfig {
        estimator: est_cfg.clone(),
        ..cfg.clone()
    };
    match estimate(x, target, &est_cfg) {
        Ok(est) => {
            let grad = flow_gradient(x, target, &est, &step_cfg)?;
            Ok((est.value, grad))
        }
        Err(Error::DegenerateWeights) => Ok((0.0, SupportGradient::zeros(x.len(), x.dim()))),
        Err(e) => Err(e),
    }
}

/// Runs `cfg.steps` Euler steps from `source` towards `target`.
///
/// The trace records the estimator value and the exact `W_2` to the target
/// every `eval_every` steps, starting at step 0, and after the last step.
pub fn run_flow(
    source: &EmpiricalMeasure,
    target: &EmpiricalMeasure,
    cfg: &FlowConfig,
) -> Result<(EmpiricalMeasure, FlowTrace)> {
    cfg.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::argument("source and target live in different dimensions"));
    }
    let mut x = source.clone();
    let mut trace = FlowTrace::default();
    for step in 0..cfg.steps {
        let (value, grad) = evaluate(&x, target, cfg, step).map_err(|e| blown_up(e, step))?;
        if step % cfg.eval_every == 0 {
            trace.records.push(FlowRecord {
                step,
                estimator_value: value,
                eval_w2: eval_distance(&x, target, step)?,
            });
        }
        if !grad.is_finite() {
            return Err(Error::Diverged { step });
        }
        x = euler_step(&x, &grad, cfg.step_size).map_err(|_| Error::Diverged { step })?;
    }
    let (value, _) = evaluate(&x, target, cfg, cfg.steps).map_err(|e| blown_up(e, cfg.steps))?;
    if !value.is_finite() {
        return Err(Error::Diverged { step: cfg.steps });
    }
    trace.records.push(FlowRecord {
        step: cfg.steps,
        estimator_value: value,
        eval_w2: eval_distance(&x, target, cfg.steps)?,
    });
    Ok((x, trace))
}

/// Non-finite values past the initial state mean the iterates blew up.
fn blown_up(e: Error, step: usize) -> Error {
    match e {
        Error::Validation(_) if step > 0 => Error::Diverged { step },
        other => other,
    }
}

fn eval_distance(x: &EmpiricalMeasure, target: &EmpiricalMeasure, step: usize) -> Result<f64> {
    exact_w2(x, target).map_err(|e| blown_up(e, step))
}

/// Image pixels as points of `[0, 1]³`.
pub fn palette(image: &RgbImage) -> EmpiricalMeasure {
    let points = image.data().iter().map(|&c| c as f64 / 255.0).collect();
    EmpiricalMeasure::new(points, 3).expect("image palettes are non-empty and finite")
}

/// Maps a palette in `[0, 1]³` back to bytes: scale by 255, round to the
/// nearest integer, clamp to `[0, 255]`.
pub fn round_palette(palette: &EmpiricalMeasure) -> Vec<u8> {
    palette
        .points()
        .iter()
        .map(|&x| (x * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Resamples `target` to exactly `size` supports.
///
/// A larger target is subsampled without replacement; a smaller one is
/// tiled (every support repeated `size / len` times) and the remainder
/// drawn without replacement, so the empirical distribution is preserved
/// as closely as possible.
pub fn match_size(target: &EmpiricalMeasure, size: usize, seed: RngSeed) -> Result<EmpiricalMeasure> {
    let len = target.len();
    if size == len {
        return Ok(target.clone());
    }
    let mut rng = seed.rng();
    let mut indices: Vec<usize> = if size < len {
        sample(&mut rng, len, size).into_vec()
    } else {
        let mut idx: Vec<usize> = (0..len).cycle().take(len * (size / len)).collect();
        idx.extend(sample(&mut rng, len, size % len));
        idx
    };
    indices.shuffle(&mut rng);
    target.select(&indices)
}

/// Color transfer: flows the source palette onto the target palette, then
/// rounds back to 8-bit channels. Output has the source geometry.
pub fn color_transfer(source: &RgbImage, target: &RgbImage, cfg: &FlowConfig) -> Result<(RgbImage, FlowTrace)> {
    let src = palette(source);
    let tgt = match_size(&palette(target), src.len(), RngSeed(cfg.estimator.seed).derive(u64::MAX))?;
    let (moved, trace) = run_flow(&src, &tgt, cfg)?;
    let image = RgbImage::new(source.width(), source.height(), round_palette(&moved))?;
    Ok((image, trace))
}
