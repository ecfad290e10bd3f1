//! Closed-form Wasserstein distance between one-dimensional empirical measures.
//!
//! For uniform measures with `n` and `m` atoms the optimal coupling is the
//! monotone (quantile) one, so `W_p^p` is the integral over `z ∈ [0, 1]` of
//! `|F⁻¹_x(z) - F⁻¹_y(z)|^p`. For `n == m` this is the mean of
//! `|x_(i) - y_(i)|^p` over sorted atoms.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// `W_p^p` between the uniform measures on `xs` and `ys`.
pub fn wasserstein_1d_pp(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    check_inputs(xs, ys, p)?;
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    sort_values(&mut xs);
    sort_values(&mut ys);
    Ok(sorted_pp(&xs, &ys, p))
}

/// `W_p` between the uniform measures on `xs` and `ys`.
pub fn wasserstein_1d(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    Ok(wasserstein_1d_pp(xs, ys, p)?.powf(1.0 / p))
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::argument(format!("p must be a finite real >= 1, got {p}")));
    }
    Ok(())
}

fn check_inputs(xs: &[f64], ys: &[f64], p: f64) -> Result<()> {
    check_p(p)?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::argument("both samples must be non-empty"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in 1D sample".into()));
    }
    Ok(())
}

pub(crate) fn sort_values(v: &mut [f64]) {
    v.sort_unstable_by(f64::total_cmp);
}

/// Stable argsort: ties keep their original relative order.
pub fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    idx
}

#[inline]
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

/// `W_p^p` for already sorted inputs.
pub(crate) fn sorted_pp(xs: &[f64], ys: &[f64], p: f64) -> f64 {
    if xs.len() == ys.len() {
        let sum: f64 = xs.iter().zip(ys).map(|(x, y)| abs_pow(x - y, p)).sum();
        return sum / xs.len() as f64;
    }

    // Merge-walk over the breakpoints i/n and j/m of both quantile functions.
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut t = 0.0;
    let mut acc = 0.0;
    while i < n && j < m {
        // Compare (i+1)/n against (j+1)/m exactly in integers.
        let lhs = (i + 1) * m;
        let rhs = (j + 1) * n;
        let next = if lhs <= rhs {
            (i + 1) as f64 / n as f64
        } else {
            (j + 1) as f64 / m as f64
        };
        acc += (next - t) * abs_pow(xs[i] - ys[j], p);
        t = next;
        match lhs.cmp(&rhs) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
