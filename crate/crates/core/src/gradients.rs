//! Gradients of the estimators with respect to the supports of `μ`.
//!
//! For a fixed direction the 1D optimal coupling is the sorted matching,
//! which is locally constant almost everywhere, so `W_p^p(θ♯μ, θ♯ν)` is
//! differentiable there with
//!
//! ```text
//! ∂/∂x_j = (p/n) |θᵀx_j - θᵀy_m(j)|^{p-1} sign(θᵀx_j - θᵀy_m(j)) θ
//! ```
//!
//! where `m(j)` pairs equal ranks (stable sort, ties by index). Everything
//! else is the chain rule through the estimator's aggregation and p-th root.
//!
//! Gradients with respect to `ν` are obtained by swapping the arguments:
//! every distance here is symmetric in `(μ, ν)` for a fixed set of slices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::energy::{relative_energies, Energy};
use crate::error::{Error, Result};
use crate::estimators::sign;
use crate::measures::EmpiricalMeasure;
use crate::onedim::{abs_pow, argsort, check_p};
use crate::slicing::{check_dim, project_into, Direction};

/// `∂(estimate)/∂(points of μ)`, an `n × d` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGradient {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl SupportGradient {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            values: vec![0.0; n * d],
            n,
            d,
        }
    }

    pub fn from_vec(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::argument("gradient buffer has the wrong length"));
        }
        Ok(Self { values, n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Differentiate through the importance weights as well.
    #[default]
    Conventional,
    /// Treat the slicing weights as constants (they come from a value copy of `μ`).
    ParameterCopy,
}

impl fmt::Display for GradientMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GradientMode::Conventional => "conventional",
            GradientMode::ParameterCopy => "parameter-copy",
        })
    }
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(GradientMode::Conventional),
            "parameter-copy" | "parameter_copy" | "copy" => Ok(GradientMode::ParameterCopy),
            _ => Err(Error::argument(format!("unknown gradient mode {s:?}"))),
        }
    }
}

/// Value and per-point coefficients of one slice: `∂v/∂x_j = coeffs[j] · θ`.
struct SliceGrad {
    value: f64,
    coeffs: Vec<f64>,
}

fn slice_grad(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, theta: &[f64], p: f64) -> SliceGrad {
    let n = mu.len();
    let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
    project_into(mu, theta, &mut xs);
    project_into(nu, theta, &mut ys);
    let ix = argsort(&xs);
    let iy = argsort(&ys);
    let mut coeffs = vec![0.0; n];
    let mut total = 0.0;
    let scale = p / n as f64;
    for (&i, &j) in ix.iter().zip(&iy) {
        let diff = xs[i] - ys[j];
        total += abs_pow(diff, p);
        coeffs[i] = scale * diff.abs().powf(p - 1.0) * sign(diff);
    }
    SliceGrad {
        value: total / n as f64,
        coeffs,
    }
}

fn check_inputs(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, thetas: &[Direction], p: f64) -> Result<()> {
    check_p(p)?;
    if mu.dim() != nu.dim() {
        return Err(Error::argument("measures live in different dimensions"));
    }
    if mu.len() != nu.len() {
        return Err(Error::argument(format!(
            "support gradients need equal sizes, got {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    if thetas.is_empty() {
        return Err(Error::argument("need at least one direction"));
    }
    for t in thetas {
        check_dim(mu, t)?;
    }
    Ok(())
}

fn slice_grads(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, thetas: &[Direction], p: f64) -> Vec<SliceGrad> {
    thetas
        .par_iter()
        .map(|t| slice_grad(mu, nu, t.as_slice(), p))
        .collect()
}

/// `Σ_l a_l ∇v_l`, accumulated in slice order.
fn combine(grads: &[SliceGrad], thetas: &[Direction], weights: &[f64], n: usize, d: usize) -> SupportGradient {
    let mut out = SupportGradient::zeros(n, d);
    for ((g, theta), &a) in grads.iter().zip(thetas).zip(weights) {
        if a == 0.0 {
            continue;
        }
        for (j, c) in g.coeffs.iter().enumerate() {
            let k = a * c;
            if k == 0.0 {
                continue;
            }
            for (o, t) in out.values[j * d..(j + 1) * d].iter_mut().zip(theta.as_slice()) {
                *o += k * t;
            }
        }
    }
    out
}

/// Gradient of `W_p^p(θ♯μ, θ♯ν)` with the sorted matching held fixed.
pub fn grad_slice_pp(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    theta: &Direction,
    p: f64,
) -> Result<SupportGradient> {
    let thetas = std::slice::from_ref(theta);
    check_inputs(mu, nu, thetas, p)?;
    let g = slice_grad(mu, nu, theta.as_slice(), p);
    Ok(combine(&[g], thetas, &[1.0], mu.len(), mu.dim()))
}

/// Gradient of `((1/L) Σ_l v_l)^{1/p}` over the given directions.
pub fn grad_sw(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    thetas: &[Direction],
    p: f64,
) -> Result<SupportGradient> {
    check_inputs(mu, nu, thetas, p)?;
    let grads = slice_grads(mu, nu, thetas, p);
    let l = thetas.len() as f64;
    let mean = grads.iter().map(|g| g.value).sum::<f64>() / l;
    if mean == 0.0 {
        return Ok(SupportGradient::zeros(mu.len(), mu.dim()));
    }
    let outer = mean.powf((1.0 - p) / p) / p;
    let weights = vec![outer / l; thetas.len()];
    Ok(combine(&grads, thetas, &weights, mu.len(), mu.dim()))
}

/// Parameter-copy gradient for SIR, IMH and RMH: the resampled or chain
/// directions are constants and are averaged uniformly, so this is
/// [`grad_sw`] on those directions.
pub fn grad_resampled(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    resampled: &[Direction],
    p: f64,
) -> Result<SupportGradient> {
    grad_sw(mu, nu, resampled, p)
}

/// Gradient of the importance-sampling estimate
/// `(Σ_l v_l f(v_l) / Σ_l f(v_l))^{1/p}` over the proposal directions.
///
/// With `Φ = A/B`, `A = Σ v_l f(v_l)`, `B = Σ f(v_l)`, the conventional mode
/// uses `∂Φ/∂v_l = (f(v_l) + f'(v_l)(v_l - Φ)) / B`; the parameter-copy mode
/// keeps only `f(v_l) / B`.
pub fn grad_is_ebsw<E: Energy + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    thetas: &[Direction],
    p: f64,
    f: &E,
    mode: GradientMode,
) -> Result<SupportGradient> {
    check_inputs(mu, nu, thetas, p)?;
    let grads = slice_grads(mu, nu, thetas, p);
    let values: Vec<f64> = grads.iter().map(|g| g.value).collect();
    let rel = relative_energies(f, &values)?;
    let den: f64 = rel.iter().sum();
    let phi = values.iter().zip(&rel).map(|(v, u)| v * u).sum::<f64>() / den;
    if phi == 0.0 {
        return Ok(SupportGradient::zeros(mu.len(), mu.dim()));
    }
    // Energy derivatives on the same relative scale as `rel`.
    let rel_deriv: Vec<f64> = match mode {
        GradientMode::ParameterCopy => vec![0.0; values.len()],
        GradientMode::Conventional if f.log_space() => values
            .iter()
            .zip(&rel)
            .map(|(&v, &u)| if u == 0.0 { 0.0 } else { u * f.log_derivative(v) })
            .collect(),
        GradientMode::Conventional => {
            let max = values.iter().map(|&v| f.eval(v)).fold(0.0, f64::max);
            values.iter().map(|&v| f.derivative(v) / max).collect()
        }
    };
    let outer = phi.powf((1.0 - p) / p) / p;
    let weights: Vec<f64> = values
        .iter()
        .zip(rel.iter().zip(&rel_deriv))
        .map(|(&v, (&u, &du))| outer * (u + du * (v - phi)) / den)
        .collect();
    Ok(combine(&grads, thetas, &weights, mu.len(), mu.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyFunction;
    use crate::eval::finite_diff_grad;
    use crate::seed::RngSeed;
    use crate::slicing::sample_uniform_sphere;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn cloud(n: usize, d: usize, seed: u64, shift: f64) -> EmpiricalMeasure {
        let mut rng = RngSeed(seed).rng();
        let pts = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal) + shift).collect();
        EmpiricalMeasure::new(pts, d).unwrap()
    }

    /// Independent objective: sorted-matching W_p^p computed from scratch.
    fn frozen_pp(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, theta: &Direction, p: f64) -> f64 {
        let mut xs: Vec<f64> = mu.rows().map(|r| theta.dot(r)).collect();
        let mut ys: Vec<f64> = nu.rows().map(|r| theta.dot(r)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.iter().zip(&ys).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>() / xs.len() as f64
    }

    fn rel_err(a: &SupportGradient, b: &SupportGradient) -> f64 {
        let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.as_slice().iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-12)
    }

    #[test]
    fn single_support_gradient_is_twice_the_projected_gap() {
        let mu = EmpiricalMeasure::new(vec![1.0, 2.0], 2).unwrap();
        let nu = EmpiricalMeasure::new(vec![-0.5, 0.25], 2).unwrap();
        let theta = Direction::normalize(vec![0.6, -0.8]).unwrap();
        let g = grad_slice_pp(&mu, &nu, &theta, 2.0).unwrap();
        let gap = theta.dot(&[1.5, 1.75]);
        for (gi, ti) in g.row(0).iter().zip(theta.as_slice()) {
            assert!((gi - 2.0 * gap * ti).abs() < 1e-14);
        }
    }

    #[test]
    fn identical_measures_have_zero_gradient() {
        let mu = cloud(7, 3, 1, 0.0);
        let thetas = sample_uniform_sphere(3, 10, &mut RngSeed(2).rng()).unwrap();
        assert_eq!(grad_slice_pp(&mu, &mu, &thetas[0], 1.0).unwrap().max_abs(), 0.0);
        assert_eq!(grad_sw(&mu, &mu, &thetas, 2.0).unwrap().max_abs(), 0.0);
        assert_eq!(grad_resampled(&mu, &mu, &thetas, 2.0).unwrap().max_abs(), 0.0);
        for mode in [GradientMode::Conventional, GradientMode::ParameterCopy] {
            let g = grad_is_ebsw(&mu, &mu, &thetas, 2.0, &EnergyFunction::Exponential, mode).unwrap();
            assert_eq!(g.max_abs(), 0.0);
        }
    }

    #[test]
    fn point_mass_sw_gradient_is_direction_aligned() {
        let mu = EmpiricalMeasure::new(vec![2.0, -1.0], 2).unwrap();
        let nu = EmpiricalMeasure::new(vec![0.0, 0.0], 2).unwrap();
        let theta = Direction::axis(2, 0).unwrap();
        let g = grad_sw(&mu, &nu, std::slice::from_ref(&theta), 2.0).unwrap();
        assert_eq!(g.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn slice_gradient_matches_finite_differences() {
        let mu = cloud(5, 3, 3, 0.0);
        let nu = cloud(5, 3, 4, 1.0);
        let theta = sample_uniform_sphere(3, 1, &mut RngSeed(5).rng()).unwrap().remove(0);
        let analytic = grad_slice_pp(&mu, &nu, &theta, 2.0).unwrap();
        let numeric = finite_diff_grad(|m| frozen_pp(m, &nu, &theta, 2.0), &mu, 1e-5).unwrap();
        assert!(rel_err(&analytic, &numeric) < 1e-4);
    }

    #[test]
    fn resampled_gradient_equals_sw_gradient() {
        let mu = cloud(6, 2, 6, 0.0);
        let nu = cloud(6, 2, 7, 0.5);
        let thetas = sample_uniform_sphere(2, 9, &mut RngSeed(8).rng()).unwrap();
        assert_eq!(
            grad_resampled(&mu, &nu, &thetas, 2.0).unwrap(),
            grad_sw(&mu, &nu, &thetas, 2.0).unwrap()
        );
    }

    #[test]
    fn modes_coincide_when_all_slices_are_equal() {
        // Rotationally symmetric configuration in 1D: a single direction pair
        // ±θ gives identical slice values, so weight derivatives cancel.
        let mu = EmpiricalMeasure::new(vec![0.0, 1.0, 3.0], 1).unwrap();
        let nu = EmpiricalMeasure::new(vec![0.5, 2.0, 2.5], 1).unwrap();
        let thetas = vec![Direction::new(vec![1.0]).unwrap(), Direction::new(vec![-1.0]).unwrap()];
        let f = EnergyFunction::Exponential;
        let a = grad_is_ebsw(&mu, &nu, &thetas, 2.0, &f, GradientMode::Conventional).unwrap();
        let b = grad_is_ebsw(&mu, &nu, &thetas, 2.0, &f, GradientMode::ParameterCopy).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn unequal_sizes_are_rejected() {
        let mu = cloud(4, 2, 1, 0.0);
        let nu = cloud(5, 2, 2, 0.0);
        let thetas = sample_uniform_sphere(2, 3, &mut RngSeed(3).rng()).unwrap();
        assert!(grad_sw(&mu, &nu, &thetas, 2.0).is_err());
        assert!(grad_sw(&mu, &mu, &[], 2.0).is_err());
    }

    #[test]
    fn p_equal_one_uses_zero_sign_at_ties() {
        let mu = EmpiricalMeasure::new(vec![0.0, 1.0], 1).unwrap();
        let nu = EmpiricalMeasure::new(vec![0.0, 3.0], 1).unwrap();
        let g = grad_slice_pp(&mu, &nu, &Direction::new(vec![1.0]).unwrap(), 1.0).unwrap();
        assert_eq!(g.as_slice(), &[0.0, -0.5]);
    }

    #[test]
    fn mode_names_parse() {
        assert_eq!("conventional".parse::<GradientMode>().unwrap(), GradientMode::Conventional);
        assert_eq!("parameter-copy".parse::<GradientMode>().unwrap(), GradientMode::ParameterCopy);
        assert!("reinforce".parse::<GradientMode>().is_err());
    }
}
