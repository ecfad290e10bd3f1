//! Distance estimators: SW, Max-SW and the four EBSW estimators.
//!
//! All estimators share one kernel, [`slice_values`], which maps a set of
//! directions to their projected `W_p^p` values. Values are stored as
//! p-powers and rooted once at the end.
//!
//! Population semantics differ by estimator. For finite `L` the IS estimate
//! is an unbiased estimate (in p-power) of the importance weighted sliced
//! Wasserstein distance, and SIR, IMH and RMH are unbiased for the
//! projected sliced Wasserstein distance; all of them converge to EBSW as
//! `L → ∞`. No separate code path exists for those distances.
//!
//! Every estimator is a pure function of `(mu, nu, cfg)`: randomness comes
//! from a ChaCha stream seeded with `cfg.seed`, directions are drawn
//! sequentially, and the per-direction work runs in parallel with results
//! collected in index order, so the value does not depend on the number of
//! threads.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::energy::{relative_energies, Energy, EnergyFunction};
use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use crate::onedim::{abs_pow, argsort, check_p, sort_values, sorted_pp};
use crate::seed::RngSeed;
use crate::slicing::{
    check_dim, project_into, sample_uniform_sphere, sample_vmf, uniform_direction, Direction,
    VmfParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sw,
    MaxSw,
    IsEbsw,
    SirEbsw,
    ImhEbsw,
    RmhEbsw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Sw,
        Method::MaxSw,
        Method::IsEbsw,
        Method::SirEbsw,
        Method::ImhEbsw,
        Method::RmhEbsw,
    ];

    /// The four estimators of the energy-based distance.
    pub const EBSW: [Method; 4] = [
        Method::IsEbsw,
        Method::SirEbsw,
        Method::ImhEbsw,
        Method::RmhEbsw,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sw => "sw",
            Method::MaxSw => "max-sw",
            Method::IsEbsw => "is-ebsw",
            Method::SirEbsw => "sir-ebsw",
            Method::ImhEbsw => "imh-ebsw",
            Method::RmhEbsw => "rmh-ebsw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s || m.as_str().replace('-', "_") == s)
            .ok_or_else(|| Error::argument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub p: f64,
    /// Number of projections; the chain length for IMH/RMH.
    pub projections: usize,
    pub energy: EnergyFunction,
    pub method: Method,
    pub max_sw_iters: usize,
    pub max_sw_step: f64,
    pub rmh_kappa: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            projections: 100,
            energy: EnergyFunction::Exponential,
            method: Method::IsEbsw,
            max_sw_iters: 100,
            max_sw_step: 0.1,
            rmh_kappa: 10.0,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        if self.projections == 0 {
            return Err(Error::argument("number of projections must be positive"));
        }
        if self.max_sw_iters == 0 {
            return Err(Error::argument("Max-SW iterations must be positive"));
        }
        if !(self.max_sw_step > 0.0) || !self.max_sw_step.is_finite() {
            return Err(Error::argument("Max-SW step size must be positive"));
        }
        if !(self.rmh_kappa > 0.0) || !self.rmh_kappa.is_finite() {
            return Err(Error::argument("RMH concentration must be positive"));
        }
        if let EnergyFunction::ShiftedPolynomial { q, epsilon } = self.energy {
            EnergyFunction::polynomial(q, epsilon)?;
        }
        Ok(())
    }

    pub fn with_method(&self, method: Method) -> Self {
        Self {
            method,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Directions together with their projected `W_p^p` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceBatch {
    directions: Vec<Direction>,
    values: Vec<f64>,
}

impl SliceBatch {
    pub fn new(directions: Vec<Direction>, values: Vec<f64>) -> Result<Self> {
        if directions.len() != values.len() {
            return Err(Error::argument(format!(
                "{} directions but {} values",
                directions.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::argument("slice values must be >= 0"));
        }
        Ok(Self { directions, values })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn select(&self, indices: &[usize]) -> SliceBatch {
        SliceBatch {
            directions: indices.iter().map(|&i| self.directions[i].clone()).collect(),
            values: indices.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// Result of an estimator run: the distance and the slices it averaged.
///
/// For IS the batch holds the proposals and `weights` their normalized
/// importance weights; for SIR, IMH and RMH the batch holds the resampled
/// directions or chain states (with repetitions), averaged uniformly.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub batch: SliceBatch,
    pub weights: Option<Vec<f64>>,
}

fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::argument(format!(
            "measures live in different dimensions ({} vs {})",
            mu.dim(),
            nu.dim()
        )));
    }
    Ok(())
}

/// `W_p^p(θ♯μ, θ♯ν)` for one direction, using caller-provided buffers.
fn slice_value_with(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    theta: &[f64],
    p: f64,
    bufs: &mut (Vec<f64>, Vec<f64>),
) -> f64 {
    project_into(mu, theta, &mut bufs.0);
    project_into(nu, theta, &mut bufs.1);
    sort_values(&mut bufs.0);
    sort_values(&mut bufs.1);
    sorted_pp(&bufs.0, &bufs.1, p)
}

pub(crate) fn slice_value(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, theta: &Direction, p: f64) -> f64 {
    let mut bufs = (Vec::with_capacity(mu.len()), Vec::with_capacity(nu.len()));
    slice_value_with(mu, nu, theta.as_slice(), p, &mut bufs)
}

/// Projected `W_p^p` along every direction in `thetas`.
pub fn slice_values(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    thetas: &[Direction],
    p: f64,
) -> Result<SliceBatch> {
    check_p(p)?;
    check_pair(mu, nu)?;
    for t in thetas {
        check_dim(mu, t)?;
    }
    let values: Vec<f64> = thetas
        .par_iter()
        .map_init(
            || (Vec::with_capacity(mu.len()), Vec::with_capacity(nu.len())),
            |bufs, t| slice_value_with(mu, nu, t.as_slice(), p, bufs),
        )
        .collect();
    Ok(SliceBatch {
        directions: thetas.to_vec(),
        values,
    })
}

/// `((1/L) Σ v_l)^{1/p}`, summed in index order.
pub fn sliced_value(values: &[f64], p: f64) -> f64 {
    let total: f64 = values.iter().sum();
    (total / values.len() as f64).powf(1.0 / p)
}

/// `(Σ_l v_l ŵ_l)^{1/p}` with `ŵ` the normalized energies of `v`.
///
/// Computed as `Σ v_l u_l / Σ u_l` with `u` the energies relative to their
/// maximum, so equal values reproduce [`sliced_value`] bit for bit.
pub fn importance_weighted_value<E: Energy + ?Sized>(f: &E, values: &[f64], p: f64) -> Result<f64> {
    let rel = relative_energies(f, values)?;
    let num: f64 = values.iter().zip(&rel).map(|(v, u)| v * u).sum();
    let den: f64 = rel.iter().sum();
    let mean = num / den;
    debug_assert!(
        mean >= values.iter().sum::<f64>() / values.len() as f64 - 1e-12 * (1.0 + mean.abs()),
        "importance-weighted mean fell below the plain mean"
    );
    Ok(mean.powf(1.0 / p))
}

/// Metropolis–Hastings acceptance probability `min(1, f(v') / f(v))` for a
/// symmetric proposal. A zero current energy always accepts.
pub fn acceptance_probability<E: Energy + ?Sized>(f: &E, v_current: f64, v_proposal: f64) -> f64 {
    let lc = f.ln_eval(v_current);
    if lc == f64::NEG_INFINITY {
        return 1.0;
    }
    let lp = f.ln_eval(v_proposal);
    (lp - lc).exp().min(1.0)
}

/// Proposal kernel of a Metropolis–Hastings chain over directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// Uniform on the sphere, independent of the current state.
    Independent,
    /// von Mises–Fisher centered at the current state.
    RandomWalk { kappa: f64 },
}

/// Runs a Metropolis–Hastings chain targeting the energy-based slicing
/// distribution and returns the kept states (`len` of them, after discarding
/// `burn_in`). The first state is a uniform draw.
#[allow(clippy::too_many_arguments)]
pub fn metropolis_chain<E: Energy + ?Sized, R: Rng + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    f: &E,
    p: f64,
    len: usize,
    burn_in: usize,
    proposal: Proposal,
    rng: &mut R,
) -> Result<SliceBatch> {
    check_p(p)?;
    check_pair(mu, nu)?;
    if len == 0 {
        return Err(Error::argument("chain length must be positive"));
    }
    let dim = mu.dim();
    let mut bufs = (Vec::with_capacity(mu.len()), Vec::with_capacity(nu.len()));
    let mut current = uniform_direction(dim, rng);
    let mut current_v = slice_value_with(mu, nu, current.as_slice(), p, &mut bufs);
    let mut directions = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for step in 0..burn_in + len {
        if step > 0 {
            let candidate = match proposal {
                Proposal::Independent => uniform_direction(dim, rng),
                Proposal::RandomWalk { kappa } => {
                    let params = VmfParams::new(current.clone(), kappa)?;
                    sample_vmf(&params, rng)
                }
            };
            let candidate_v = slice_value_with(mu, nu, candidate.as_slice(), p, &mut bufs);
            let alpha = acceptance_probability(f, current_v, candidate_v);
            let u: f64 = rng.random();
            if alpha >= u {
                current = candidate;
                current_v = candidate_v;
            }
        }
        if step >= burn_in {
            directions.push(current.clone());
            values.push(current_v);
        }
    }
    Ok(SliceBatch { directions, values })
}

/// Draws `count` indices i.i.d. from the categorical given by the
/// normalized energies of `batch` and returns the resampled slices.
pub fn importance_resample<E: Energy + ?Sized, R: Rng + ?Sized>(
    f: &E,
    batch: &SliceBatch,
    count: usize,
    rng: &mut R,
) -> Result<(SliceBatch, Vec<f64>)> {
    let rel = relative_energies(f, batch.values())?;
    let total: f64 = rel.iter().sum();
    let weights: Vec<f64> = rel.iter().map(|r| r / total).collect();
    let dist = WeightedIndex::new(&rel).map_err(|_| Error::DegenerateWeights)?;
    let picks: Vec<usize> = (0..count).map(|_| dist.sample(rng)).collect();
    Ok((batch.select(&picks), weights))
}

fn uniform_batch(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<SliceBatch> {
    let mut rng = RngSeed(cfg.seed).rng();
    let thetas = sample_uniform_sphere(mu.dim(), cfg.projections, &mut rng)?;
    slice_values(mu, nu, &thetas, cfg.p)
}

/// Runs the estimator selected by `cfg.method`.
pub fn estimate(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.validate()?;
    check_pair(mu, nu)?;
    match cfg.method {
        Method::Sw => {
            let batch = uniform_batch(mu, nu, cfg)?;
            Ok(Estimate {
                value: sliced_value(batch.values(), cfg.p),
                batch,
                weights: None,
            })
        }
        Method::MaxSw => {
            let (value, theta) = max_sw_ascent(mu, nu, cfg)?;
            let v = slice_value(mu, nu, &theta, cfg.p);
            Ok(Estimate {
                value,
                batch: SliceBatch {
                    directions: vec![theta],
                    values: vec![v],
                },
                weights: None,
            })
        }
        Method::IsEbsw => {
            let batch = uniform_batch(mu, nu, cfg)?;
            let value = importance_weighted_value(&cfg.energy, batch.values(), cfg.p)?;
            let weights = crate::energy::normalized_weights(&cfg.energy, batch.values())?;
            Ok(Estimate {
                value,
                batch,
                weights: Some(weights),
            })
        }
        Method::SirEbsw => {
            let mut rng = RngSeed(cfg.seed).rng();
            let thetas = sample_uniform_sphere(mu.dim(), cfg.projections, &mut rng)?;
            let proposals = slice_values(mu, nu, &thetas, cfg.p)?;
            let (batch, weights) = importance_resample(&cfg.energy, &proposals, cfg.projections, &mut rng)?;
            Ok(Estimate {
                value: sliced_value(batch.values(), cfg.p),
                batch,
                weights: Some(weights),
            })
        }
        Method::ImhEbsw | Method::RmhEbsw => {
            let proposal = if cfg.method == Method::ImhEbsw {
                Proposal::Independent
            } else {
                Proposal::RandomWalk { kappa: cfg.rmh_kappa }
            };
            let mut rng = RngSeed(cfg.seed).rng();
            let batch = metropolis_chain(mu, nu, &cfg.energy, cfg.p, cfg.projections, 0, proposal, &mut rng)?;
            Ok(Estimate {
                value: sliced_value(batch.values(), cfg.p),
                batch,
                weights: None,
            })
        }
    }
}

/// Distance value of the estimator selected by `cfg.method`.
pub fn distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    Ok(estimate(mu, nu, cfg)?.value)
}

/// Monte Carlo sliced Wasserstein distance with uniform directions.
pub fn sw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    distance(mu, nu, &cfg.with_method(Method::Sw))
}

pub fn is_ebsw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    distance(mu, nu, &cfg.with_method(Method::IsEbsw))
}

pub fn sir_ebsw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    distance(mu, nu, &cfg.with_method(Method::SirEbsw))
}

pub fn imh_ebsw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    distance(mu, nu, &cfg.with_method(Method::ImhEbsw))
}

pub fn rmh_ebsw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<f64> {
    distance(mu, nu, &cfg.with_method(Method::RmhEbsw))
}

/// Max-SW by projected (sub)gradient ascent from a uniform start; returns
/// the best iterate `(W_p(θ*), θ*)` over the `T` steps.
pub fn max_sw(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<(f64, Direction)> {
    cfg.validate()?;
    check_pair(mu, nu)?;
    max_sw_ascent(mu, nu, cfg)
}

fn max_sw_ascent(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, cfg: &EstimatorConfig) -> Result<(f64, Direction)> {
    let mut rng = RngSeed(cfg.seed).rng();
    let mut theta = uniform_direction(mu.dim(), &mut rng);
    let mut best = (slice_value(mu, nu, &theta, cfg.p), theta.clone());
    for _ in 0..cfg.max_sw_iters {
        let grad = max_sw_direction_gradient(mu, nu, theta.as_slice(), cfg.p)?;
        let stepped: Vec<f64> = theta
            .as_slice()
            .iter()
            .zip(&grad)
            .map(|(t, g)| t + cfg.max_sw_step * g)
            .collect();
        match Direction::normalize(stepped) {
            Ok(next) => theta = next,
            // The step landed on the origin; keep the current direction.
            Err(_) => break,
        }
        // Sub-gradient steps can overshoot at matching changes, so keep the
        // best iterate rather than the last one.
        let v = slice_value(mu, nu, &theta, cfg.p);
        if v > best.0 {
            best = (v, theta.clone());
        }
    }
    Ok((best.0.powf(1.0 / cfg.p), best.1))
}

/// Gradient of `θ ↦ W_p(θ♯μ, θ♯ν)` for equal-size measures, with the
/// sorted matching at `θ` held fixed. Zero where the distance is zero.
///
/// `theta` need not be unit norm; the matching is invariant to positive
/// rescaling.
pub fn max_sw_direction_gradient(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    theta: &[f64],
    p: f64,
) -> Result<Vec<f64>> {
    check_p(p)?;
    check_pair(mu, nu)?;
    if theta.len() != mu.dim() {
        return Err(Error::argument("direction dimension mismatch"));
    }
    if mu.len() != nu.len() {
        return Err(Error::argument("Max-SW ascent needs equal support sizes"));
    }
    let n = mu.len();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    project_into(mu, theta, &mut xs);
    project_into(nu, theta, &mut ys);
    let ix = argsort(&xs);
    let iy = argsort(&ys);
    let mut grad = vec![0.0; theta.len()];
    let mut pp = 0.0;
    for (&i, &j) in ix.iter().zip(&iy) {
        let diff = xs[i] - ys[j];
        pp += abs_pow(diff, p);
        let coeff = p * diff.abs().powf(p - 1.0) * sign(diff);
        for ((g, x), y) in grad.iter_mut().zip(mu.point(i)).zip(nu.point(j)) {
            *g += coeff * (x - y);
        }
    }
    pp /= n as f64;
    if pp == 0.0 {
        return Ok(vec![0.0; theta.len()]);
    }
    // d/dθ (pp)^{1/p} = (1/p) pp^{(1-p)/p} · d pp/dθ
    let chain = pp.powf((1.0 - p) / p) / (p * n as f64);
    grad.iter_mut().for_each(|g| *g *= chain);
    Ok(grad)
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
