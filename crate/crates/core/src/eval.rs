//! Reference computations used to evaluate and test the estimators.

use std::fmt::Write as _;
use std::f64::consts::PI;

use crate::energy::{relative_energies, Energy};
use crate::error::{Error, Result};
use crate::estimators::slice_values;
use crate::gradients::SupportGradient;
use crate::measures::EmpiricalMeasure;
use crate::onedim::{abs_pow, check_p};
use crate::slicing::Direction;

/// Largest support size accepted by [`exact_w2`].
pub const EXACT_W2_MAX_POINTS: usize = 2000;

/// Largest sample size accepted by [`brute_force_1d`].
pub const BRUTE_FORCE_MAX: usize = 8;

/// Exact `W_2` between equal-size uniform measures by optimal assignment.
pub fn exact_w2(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::argument(format!(
            "exact W2 needs equal support sizes, got {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::argument("measures live in different dimensions"));
    }
    if mu.len() > EXACT_W2_MAX_POINTS {
        return Err(Error::argument(format!(
            "exact W2 is limited to {EXACT_W2_MAX_POINTS} supports"
        )));
    }
    let n = mu.len();
    let cost: Vec<f64> = mu
        .rows()
        .flat_map(|x| {
            nu.rows()
                .map(move |y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        })
        .collect();
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Validation("squared distances overflow".into()));
    }
    let assignment = min_cost_assignment(&cost, n);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok((total / n as f64).max(0.0).sqrt())
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on a
/// dense `n × n` row-major cost matrix of finite entries. Returns the column
/// assigned to each row.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be square");
    assert!(cost.iter().all(|c| c.is_finite()), "costs must be finite");
    // 1-based indexing; column 0 is a virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            assignment[row_of[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Minimum over all permutations of `(1/n) Σ |x_i - y_π(i)|^p`.
pub fn brute_force_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if xs.len() != ys.len() {
        return Err(Error::argument("brute force needs equal sizes"));
    }
    if xs.is_empty() || xs.len() > BRUTE_FORCE_MAX {
        return Err(Error::argument(format!(
            "brute force supports 1..={BRUTE_FORCE_MAX} points, got {}",
            xs.len()
        )));
    }
    let n = xs.len();
    let mut best = f64::INFINITY;
    for_each_permutation(n, |perm| {
        let cost: f64 = perm.iter().enumerate().map(|(i, &j)| abs_pow(xs[i] - ys[j], p)).sum();
        best = best.min(cost / n as f64);
    });
    Ok(best)
}

/// Calls `visit` with every permutation of `0..n` (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Central finite differences of `objective` with respect to every
/// coordinate of `mu`. The objective must be deterministic.
pub fn finite_diff_grad<F>(mut objective: F, mu: &EmpiricalMeasure, h: f64) -> Result<SupportGradient>
where
    F: FnMut(&EmpiricalMeasure) -> f64,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::argument(format!("step must be positive, got {h}")));
    }
    let d = mu.dim();
    let base = mu.points().to_vec();
    let mut grad = Vec::with_capacity(base.len());
    for k in 0..base.len() {
        let mut eval_at = |offset: f64| -> Result<f64> {
            let mut pts = base.clone();
            pts[k] += offset;
            let value = objective(&EmpiricalMeasure::new(pts, d)?);
            if !value.is_finite() {
                return Err(Error::Validation(format!("objective returned {value}")));
            }
            Ok(value)
        };
        let plus = eval_at(h)?;
        let minus = eval_at(-h)?;
        grad.push((plus - minus) / (2.0 * h));
    }
    SupportGradient::from_vec(grad, mu.len(), d)
}

/// The energy-based slicing density sampled on `K` equally spaced angles.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub angles: Vec<f64>,
    /// `f(W_p^p(θ♯μ, θ♯ν))` at each angle.
    pub unnormalized: Vec<f64>,
    /// Density w.r.t. arc length; the periodic trapezoid rule integrates it to 1.
    pub normalized: Vec<f64>,
}

impl DensityGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.angles.len() as f64
    }

    /// Periodic trapezoid integral of the normalized density.
    pub fn integral(&self) -> f64 {
        self.normalized.iter().sum::<f64>() * self.spacing()
    }

    /// Probability mass of each grid cell `[a_k - Δ/2, a_k + Δ/2)`.
    pub fn cell_masses(&self) -> Vec<f64> {
        let h = self.spacing();
        self.normalized.iter().map(|d| d * h).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle,unnormalized,normalized\n");
        for ((a, u), d) in self.angles.iter().zip(&self.unnormalized).zip(&self.normalized) {
            let _ = writeln!(out, "{a},{u},{d}");
        }
        out
    }
}

/// Evaluates the slicing density on `k` angles of the unit circle (`d = 2`).
pub fn slicing_density_grid<E: Energy + ?Sized>(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    f: &E,
    p: f64,
    k: usize,
) -> Result<DensityGrid> {
    if mu.dim() != 2 || nu.dim() != 2 {
        return Err(Error::argument("slicing density grids are only defined for d = 2"));
    }
    if k < 8 {
        return Err(Error::argument(format!("need at least 8 grid angles, got {k}")));
    }
    let h = 2.0 * PI / k as f64;
    let angles: Vec<f64> = (0..k).map(|i| i as f64 * h).collect();
    let thetas: Vec<Direction> = angles
        .iter()
        .map(|a| Direction::normalize(vec![a.cos(), a.sin()]))
        .collect::<Result<_>>()?;
    let batch = slice_values(mu, nu, &thetas, p)?;
    let unnormalized: Vec<f64> = batch.values().iter().map(|&v| f.eval(v)).collect();
    let rel = relative_energies(f, batch.values())?;
    let total: f64 = rel.iter().sum::<f64>() * h;
    let normalized = rel.iter().map(|r| r / total).collect();
    Ok(DensityGrid {
        angles,
        unnormalized,
        normalized,
    })
}
