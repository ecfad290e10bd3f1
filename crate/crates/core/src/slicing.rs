//! Directions on the unit sphere `S^{d-1}` and projections onto them.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;

/// Tolerance on `| ||θ|| - 1 |` accepted by [`Direction::new`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A unit vector `θ ∈ S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Wraps an already-normalized vector.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::argument("direction must have at least one component"));
        }
        let norm = l2_norm(&components);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::argument(format!(
                "direction is not unit norm (norm = {norm})"
            )));
        }
        Ok(Self(components))
    }

    /// Rescales a non-zero vector onto the sphere.
    pub fn normalize(mut v: Vec<f64>) -> Result<Self> {
        let norm = l2_norm(&v);
        if v.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(Error::argument("cannot normalize a zero or non-finite vector"));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(Self(v))
    }

    /// The `i`-th standard basis vector of `R^dim`.
    pub fn axis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::argument(format!("axis {i} out of range for dimension {dim}")));
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        dot(&self.0, x)
    }
}

/// Parameters of the von Mises–Fisher distribution on `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    location: Direction,
    kappa: f64,
}

impl VmfParams {
    pub fn new(location: Direction, kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::argument(format!(
                "vMF concentration must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self { location, kappa })
    }

    pub fn location(&self) -> &Direction {
        &self.location
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// One uniform draw from `S^{d-1}` (Gaussian draw, then normalize).
pub fn uniform_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Direction {
    assert!(dim >= 1, "dimension must be positive");
    let mut v = vec![0.0; dim];
    loop {
        for x in v.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let norm = l2_norm(&v);
        if norm > 0.0 && norm.is_finite() {
            v.iter_mut().for_each(|x| *x /= norm);
            return Direction(v);
        }
    }
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(
    dim: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Direction>> {
    if dim == 0 || count == 0 {
        return Err(Error::argument(format!(
            "need dim >= 1 and count >= 1, got dim = {dim}, count = {count}"
        )));
    }
    Ok((0..count).map(|_| uniform_direction(dim, rng)).collect())
}

/// One draw from `vMF(location, kappa)`.
///
/// Uses Wood's rejection sampler for the component `w = θ·location`, a
/// uniform tangent direction, and a Householder reflection that maps `e₁`
/// to the location. `kappa == 0` is exactly the uniform sampler.
pub fn sample_vmf<R: Rng + ?Sized>(params: &VmfParams, rng: &mut R) -> Direction {
    let mu = params.location.as_slice();
    let dim = mu.len();
    let kappa = params.kappa;
    if kappa == 0.0 {
        return uniform_direction(dim, rng);
    }
    if dim == 1 {
        // S^0 = {-1, +1}; P(+location) = e^κ / (e^κ + e^-κ).
        let p_same = 1.0 / (1.0 + (-2.0 * kappa).exp());
        let sign = if rng.random::<f64>() < p_same { 1.0 } else { -1.0 };
        return Direction(vec![sign * mu[0]]);
    }

    let w = sample_vmf_cosine(dim, kappa, rng);

    // Sample in the frame where the location is e₁.
    let mut sample = vec![0.0; dim];
    sample[0] = w;
    let tangent = uniform_direction(dim - 1, rng);
    let radial = (1.0 - w * w).max(0.0).sqrt();
    for (s, t) in sample[1..].iter_mut().zip(tangent.as_slice()) {
        *s = radial * t;
    }

    householder_from_e1(mu, &mut sample);
    let norm = l2_norm(&sample);
    sample.iter_mut().for_each(|x| *x /= norm);
    Direction(sample)
}

/// Rejection sampler for the cosine to the mean direction (Wood, 1994).
fn sample_vmf_cosine<R: Rng + ?Sized>(dim: usize, kappa: f64, rng: &mut R) -> f64 {
    let m1 = (dim - 1) as f64;
    // b = (-2κ + sqrt(4κ² + m1²)) / m1, in cancellation-free form.
    let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m1 / 2.0, m1 / 2.0).expect("beta parameters are positive");
    loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + m1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            return w.clamp(-1.0, 1.0);
        }
    }
}

/// Applies the reflection `H` with `H e₁ = mu` to `x` in place.
fn householder_from_e1(mu: &[f64], x: &mut [f64]) {
    // u = e₁ - mu; H = I - 2 u uᵀ / (uᵀu).
    let mut u = mu.iter().map(|m| -m).collect::<Vec<_>>();
    u[0] += 1.0;
    let uu = dot(&u, &u);
    if uu < 1e-30 {
        return;
    }
    let scale = 2.0 * dot(&u, x) / uu;
    for (xi, ui) in x.iter_mut().zip(&u) {
        *xi -= scale * ui;
    }
}

/// Projected supports `θᵀx_i`, in support order.
pub fn project(m: &EmpiricalMeasure, theta: &Direction) -> Result<Vec<f64>> {
    check_dim(m, theta)?;
    let mut out = Vec::with_capacity(m.len());
    project_into(m, theta.as_slice(), &mut out);
    Ok(out)
}

pub(crate) fn project_into(m: &EmpiricalMeasure, theta: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(m.rows().map(|row| dot(theta, row)));
}

pub(crate) fn check_dim(m: &EmpiricalMeasure, theta: &Direction) -> Result<()> {
    if theta.dim() != m.dim() {
        return Err(Error::argument(format!(
            "direction has dimension {}, measure has {}",
            theta.dim(),
            m.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::RngSeed;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::Rng;

    fn mean_norm(dirs: &[Direction]) -> f64 {
        let d = dirs[0].dim();
        let mut mean = vec![0.0; d];
        for t in dirs {
            for (m, x) in mean.iter_mut().zip(t.as_slice()) {
                *m += x / dirs.len() as f64;
            }
        }
        l2_norm(&mean)
    }

    #[test]
    fn zero_arguments_are_rejected() {
        let mut rng = RngSeed(0).rng();
        assert!(sample_uniform_sphere(0, 3, &mut rng).is_err());
        assert!(sample_uniform_sphere(3, 0, &mut rng).is_err());
    }

    #[test]
    fn one_dimensional_sphere_is_plus_minus_one() {
        let mut rng = RngSeed(1).rng();
        let dirs = sample_uniform_sphere(1, 200, &mut rng).unwrap();
        assert!(dirs.iter().all(|t| t.as_slice() == [1.0] || t.as_slice() == [-1.0]));
        assert!(dirs.iter().any(|t| t.as_slice() == [1.0]));
        assert!(dirs.iter().any(|t| t.as_slice() == [-1.0]));
    }

    #[test]
    fn uniform_mean_is_near_zero() {
        // Each coordinate has variance 1/3 on S²; the mean over 10⁴ draws has
        // coordinate sd sqrt(1/3 / 10⁴) ≈ 0.0058, so |mean| ≈ 0.01 and a 3σ
        // bound on the norm is well under 0.05.
        let mut rng = RngSeed(2).rng();
        let dirs = sample_uniform_sphere(3, 10_000, &mut rng).unwrap();
        assert!(mean_norm(&dirs) < 0.05);
    }

    #[test]
    fn vmf_with_zero_kappa_is_uniform() {
        let loc = Direction::axis(3, 0).unwrap();
        let params = VmfParams::new(loc, 0.0).unwrap();
        let mut rng = RngSeed(3).rng();
        let dirs: Vec<_> = (0..10_000).map(|_| sample_vmf(&params, &mut rng)).collect();
        assert!(mean_norm(&dirs) < 0.05);
        // Same stream as the uniform sampler.
        let mut a = RngSeed(4).rng();
        let mut b = RngSeed(4).rng();
        assert_eq!(sample_vmf(&params, &mut a), uniform_direction(3, &mut b));
    }

    #[test]
    fn vmf_concentrates_for_large_kappa() {
        // On S², 1 - w ~ Exp(κ) approximately, so the angle is about
        // sqrt(2 E) with E ~ Exp(10⁶): P(angle > 0.01) = exp(-κ·0.01²/2) = e^-50.
        let loc = Direction::axis(3, 0).unwrap();
        let params = VmfParams::new(loc, 1e6).unwrap();
        let mut rng = RngSeed(5).rng();
        let close = (0..1000)
            .filter(|_| sample_vmf(&params, &mut rng).as_slice()[0].clamp(-1.0, 1.0).acos() < 0.01)
            .count();
        assert!(close as f64 / 1000.0 > 0.99, "{close}");
    }

    #[test]
    fn vmf_mean_resultant_matches_langevin() {
        // On S², E[w] = coth κ - 1/κ.
        let kappa: f64 = 2.0;
        let expected = 1.0 / kappa.tanh() - 1.0 / kappa;
        let loc = Direction::normalize(vec![1.0, 2.0, -2.0]).unwrap();
        let params = VmfParams::new(loc.clone(), kappa).unwrap();
        let mut rng = RngSeed(6).rng();
        let n = 20_000;
        let mean_w: f64 = (0..n).map(|_| loc.dot(sample_vmf(&params, &mut rng).as_slice())).sum::<f64>() / n as f64;
        // sd of w is below 0.6, so 4σ over 2·10⁴ draws is < 0.017.
        assert!((mean_w - expected).abs() < 0.017, "{mean_w} vs {expected}");
    }

    #[test]
    fn vmf_rejects_bad_params() {
        let loc = Direction::axis(2, 1).unwrap();
        assert!(VmfParams::new(loc.clone(), -1.0).is_err());
        assert!(VmfParams::new(loc, f64::NAN).is_err());
        assert!(Direction::new(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn vmf_on_zero_sphere_prefers_location() {
        let params = VmfParams::new(Direction::new(vec![-1.0]).unwrap(), 1.0).unwrap();
        let mut rng = RngSeed(7).rng();
        let same = (0..10_000)
            .filter(|_| sample_vmf(&params, &mut rng).as_slice() == [-1.0])
            .count();
        let p = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((same as f64 / 1e4 - p).abs() < 0.015);
    }

    #[test]
    fn projection_is_a_dot_product() {
        let m = EmpiricalMeasure::new(vec![3.0, 4.0], 2).unwrap();
        assert_eq!(project(&m, &Direction::axis(2, 0).unwrap()).unwrap(), vec![3.0]);
        assert_eq!(project(&m, &Direction::axis(2, 1).unwrap()).unwrap(), vec![4.0]);
        assert!(project(&m, &Direction::axis(3, 1).unwrap()).is_err());
    }

    #[test]
    fn projection_of_translated_measure_shifts_by_theta_dot_t() {
        let m = EmpiricalMeasure::new(vec![0.5, -1.0, 2.0, 3.0, -4.0, 0.25], 2).unwrap();
        let t = [1.5, -0.5];
        let theta = Direction::normalize(vec![0.3, 0.7]).unwrap();
        let base = project(&m, &theta).unwrap();
        let shifted = project(&m.translated(&t).unwrap(), &theta).unwrap();
        let shift = theta.dot(&t);
        for (a, b) in base.iter().zip(&shifted) {
            assert!((b - a - shift).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_directions() {
        let a = sample_uniform_sphere(5, 50, &mut RngSeed(11).rng()).unwrap();
        let b = sample_uniform_sphere(5, 50, &mut RngSeed(11).rng()).unwrap();
        assert_eq!(a, b);
    }

    /// Random rotation: orthonormalize a Gaussian matrix by Gram-Schmidt.
    fn random_rotation(d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = RngSeed(seed).rng();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = l2_norm(&v);
            if n > 1e-8 {
                basis.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        basis
    }

    fn apply(r: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        r.iter().map(|row| dot(row, x)).collect()
    }

    proptest! {
        #[test]
        fn sampled_directions_are_unit(d in 1usize..12, seed in any::<u64>()) {
            let mut rng = RngSeed(seed).rng();
            for t in sample_uniform_sphere(d, 8, &mut rng).unwrap() {
                prop_assert!((l2_norm(t.as_slice()) - 1.0).abs() <= 1e-12);
            }
            let loc = uniform_direction(d, &mut rng);
            let params = VmfParams::new(loc, 10.0).unwrap();
            for _ in 0..8 {
                let t = sample_vmf(&params, &mut rng);
                prop_assert!((l2_norm(t.as_slice()) - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn projection_is_rotation_equivariant(d in 2usize..6, n in 1usize..10, seed in any::<u64>()) {
            let mut rng = RngSeed(seed).rng();
            let pts: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
            let m = EmpiricalMeasure::new(pts, d).unwrap();
            let theta = uniform_direction(d, &mut rng);
            let r = random_rotation(d, seed ^ 0x5eed);
            let rotated: Vec<f64> = m.rows().flat_map(|x| apply(&r, x)).collect();
            let rm = EmpiricalMeasure::new(rotated, d).unwrap();
            let rtheta = Direction::normalize(apply(&r, theta.as_slice())).unwrap();
            let a = project(&m, &theta).unwrap();
            let b = project(&rm, &rtheta).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }
    }
}
