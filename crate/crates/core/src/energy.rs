//! Energy functions on projected distances and the induced slice weights.
//!
//! The energy-based slicing distribution has density proportional to
//! `f(W_p^p(θ♯μ, θ♯ν))`. Two increasing energies ship: the exponential
//! `f_e(v) = e^v` and the shifted polynomial `f_q(v) = v^q + ε`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A positive energy applied to projected `W_p^p` values.
///
/// Implementors only need [`Energy::eval`] and [`Energy::derivative`]; energies
/// that overflow easily should override the log-space methods and return
/// `true` from [`Energy::log_space`].
pub trait Energy: Send + Sync {
    fn eval(&self, v: f64) -> f64;

    fn derivative(&self, v: f64) -> f64;

    fn ln_eval(&self, v: f64) -> f64 {
        self.eval(v).ln()
    }

    /// `f'(v) / f(v)`.
    fn log_derivative(&self, v: f64) -> f64 {
        self.derivative(v) / self.eval(v)
    }

    /// Whether weights should be formed from `ln f` (softmax style).
    fn log_space(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EnergyFunction {
    /// `f(v) = e^v`.
    #[default]
    Exponential,
    /// `f(v) = v^q + epsilon`.
    ShiftedPolynomial { q: f64, epsilon: f64 },
}

impl EnergyFunction {
    pub fn polynomial(q: f64, epsilon: f64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::argument(format!("polynomial exponent must be > 0, got {q}")));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::argument(format!("polynomial shift must be >= 0, got {epsilon}")));
        }
        Ok(EnergyFunction::ShiftedPolynomial { q, epsilon })
    }

    /// Checked evaluation: rejects negative inputs.
    pub fn eval_energy(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::argument(format!("energy input must be >= 0, got {v}")));
        }
        Ok(self.eval(v))
    }
}

impl Energy for EnergyFunction {
    fn eval(&self, v: f64) -> f64 {
        match *self {
            EnergyFunction::Exponential => v.exp(),
            EnergyFunction::ShiftedPolynomial { q, epsilon } => v.powf(q) + epsilon,
        }
    }

    fn derivative(&self, v: f64) -> f64 {
        match *self {
            EnergyFunction::Exponential => v.exp(),
            EnergyFunction::ShiftedPolynomial { q, .. } => {
                if q == 1.0 {
                    1.0
                } else {
                    q * v.powf(q - 1.0)
                }
            }
        }
    }

    fn ln_eval(&self, v: f64) -> f64 {
        match self {
            EnergyFunction::Exponential => v,
            _ => self.eval(v).ln(),
        }
    }

    fn log_derivative(&self, v: f64) -> f64 {
        match self {
            EnergyFunction::Exponential => 1.0,
            _ => self.derivative(v) / self.eval(v),
        }
    }

    fn log_space(&self) -> bool {
        matches!(self, EnergyFunction::Exponential)
    }
}

/// Grammar: `e` for the exponential, `q:<q>[:<eps>]` for the polynomial
/// (`eps` defaults to 0).
impl FromStr for EnergyFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" {
            return Ok(EnergyFunction::Exponential);
        }
        let bad = || Error::argument(format!("invalid energy spec {s:?}; expected `e` or `q:<q>[:<eps>]`"));
        let mut parts = s.split(':');
        if parts.next() != Some("q") {
            return Err(bad());
        }
        let q: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let epsilon: f64 = match parts.next() {
            Some(e) => e.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        EnergyFunction::polynomial(q, epsilon)
    }
}

impl fmt::Display for EnergyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyFunction::Exponential => write!(f, "e"),
            EnergyFunction::ShiftedPolynomial { q, epsilon } if *epsilon == 0.0 => write!(f, "q:{q}"),
            EnergyFunction::ShiftedPolynomial { q, epsilon } => write!(f, "q:{q}:{epsilon}"),
        }
    }
}

/// Energies rescaled so the largest is exactly 1.
///
/// Equal inputs therefore give weights of exactly 1, which keeps importance
/// averages bit-identical to plain means when the energy is constant.
pub(crate) fn relative_energies<E: Energy + ?Sized>(f: &E, values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::argument("need at least one slice value"));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::argument(format!("slice values must be >= 0, got {v}")));
    }
    if f.log_space() {
        let logs: Vec<f64> = values.iter().map(|&v| f.ln_eval(v)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateWeights);
        }
        if !max.is_finite() {
            return Err(Error::Validation(format!("log-energy is not finite ({max})")));
        }
        return Ok(logs.iter().map(|l| (l - max).exp()).collect());
    }
    let energies: Vec<f64> = values.iter().map(|&v| f.eval(v)).collect();
    let max = energies.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::DegenerateWeights);
    }
    if !max.is_finite() || energies.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::Validation("energy overflowed or went negative".into()));
    }
    Ok(energies.iter().map(|e| e / max).collect())
}

/// Self-normalized importance weights `f(v_l) / Σ_i f(v_i)`.
pub fn normalized_weights<E: Energy + ?Sized>(f: &E, values: &[f64]) -> Result<Vec<f64>> {
    let rel = relative_energies(f, values)?;
    let total: f64 = rel.iter().sum();
    Ok(rel.iter().map(|r| r / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `c · f` for testing scale invariance.
    struct Scaled<E>(f64, E);

    impl<E: Energy> Energy for Scaled<E> {
        fn eval(&self, v: f64) -> f64 {
            self.0 * self.1.eval(v)
        }
        fn derivative(&self, v: f64) -> f64 {
            self.0 * self.1.derivative(v)
        }
        fn ln_eval(&self, v: f64) -> f64 {
            self.0.ln() + self.1.ln_eval(v)
        }
        fn log_space(&self) -> bool {
            self.1.log_space()
        }
    }

    fn poly(q: f64, eps: f64) -> EnergyFunction {
        EnergyFunction::polynomial(q, eps).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(EnergyFunction::Exponential.eval_energy(0.0).unwrap(), 1.0);
        assert_eq!(poly(2.0, 0.0).eval_energy(2.0).unwrap(), 4.0);
        assert_eq!(poly(1.0, 0.5).eval_energy(0.0).unwrap(), 0.5);
        assert!(EnergyFunction::Exponential.eval_energy(-1.0).is_err());
    }

    #[test]
    fn invalid_polynomials_are_rejected() {
        assert!(EnergyFunction::polynomial(0.0, 0.0).is_err());
        assert!(EnergyFunction::polynomial(-1.0, 0.0).is_err());
        assert!(EnergyFunction::polynomial(1.0, -0.1).is_err());
    }

    #[test]
    fn softmax_example() {
        // Independent check: e^0 / (e^0 + e^ln4) = 1/5.
        let w = normalized_weights(&EnergyFunction::Exponential, &[0.0, 4f64.ln()]).unwrap();
        assert!((w[0] - 0.2).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn equal_values_give_uniform_weights() {
        for f in [EnergyFunction::Exponential, poly(2.0, 0.0), poly(0.5, 1.0)] {
            let w = normalized_weights(&f, &[1.7; 5]).unwrap();
            assert!(w.iter().all(|&x| x == 0.2), "{f}: {w:?}");
        }
    }

    #[test]
    fn linear_energy_is_a_direct_ratio() {
        let w = normalized_weights(&poly(1.0, 0.0), &[1.0, 3.0]).unwrap();
        assert_eq!(w, vec![0.25, 0.75]);
    }

    #[test]
    fn all_zero_polynomial_energy_is_degenerate() {
        let err = normalized_weights(&poly(1.0, 0.0), &[0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateWeights));
        // A positive shift removes the degeneracy.
        assert_eq!(normalized_weights(&poly(1.0, 0.1), &[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn large_values_do_not_overflow() {
        let w = normalized_weights(&EnergyFunction::Exponential, &[800.0, 801.0, 1000.0]).unwrap();
        assert!(w.iter().all(|x| x.is_finite()));
        assert!((w[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grammar_round_trip() {
        assert_eq!("e".parse::<EnergyFunction>().unwrap(), EnergyFunction::Exponential);
        assert_eq!("q:2".parse::<EnergyFunction>().unwrap(), poly(2.0, 0.0));
        assert_eq!("q:1:0.5".parse::<EnergyFunction>().unwrap(), poly(1.0, 0.5));
        for bad in ["", "x", "q", "q:", "q:a", "q:1:2:3", "q:-1", "q:1:-2", "e:1"] {
            assert!(bad.parse::<EnergyFunction>().is_err(), "{bad}");
        }
        for f in [EnergyFunction::Exponential, poly(2.5, 0.0), poly(1.0, 0.25)] {
            assert_eq!(f.to_string().parse::<EnergyFunction>().unwrap(), f);
        }
    }

    #[test]
    fn derivatives() {
        let f = poly(3.0, 1.0);
        assert_eq!(f.derivative(2.0), 12.0);
        assert_eq!(f.log_derivative(2.0), 12.0 / 9.0);
        assert_eq!(EnergyFunction::Exponential.log_derivative(5.0), 1.0);
    }

    fn values() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..5.0, 1..30)
    }

    proptest! {
        #[test]
        fn weights_form_a_distribution(v in values(), q in 0.5f64..3.0, eps in 0.0f64..1.0) {
            prop_assume!(v.iter().any(|x| *x > 0.0));
            for f in [EnergyFunction::Exponential, poly(q, eps)] {
                let w = normalized_weights(&f, &v).unwrap();
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(w.iter().all(|x| *x >= 0.0));
            }
        }

        #[test]
        fn polynomial_scale_invariance_is_exact_for_power_of_two(v in values(), q in 0.5f64..3.0, k in -8i32..8) {
            prop_assume!(v.iter().any(|x| *x > 0.0));
            let f = poly(q, 0.0);
            let c = 2f64.powi(k);
            prop_assert_eq!(normalized_weights(&f, &v).unwrap(), normalized_weights(&Scaled(c, f), &v).unwrap());
        }

        #[test]
        fn scale_invariance(v in values(), c in 0.01f64..100.0) {
            prop_assume!(v.iter().any(|x| *x > 0.0));
            let f = poly(2.0, 0.0);
            let a = normalized_weights(&f, &v).unwrap();
            let b = normalized_weights(&Scaled(c, f), &v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
            let a = normalized_weights(&EnergyFunction::Exponential, &v).unwrap();
            let b = normalized_weights(&Scaled(c, EnergyFunction::Exponential), &v).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-15);
            }
        }

        #[test]
        fn softmax_shift_invariance(v in prop::collection::vec(0.0f64..1.0, 1..30), s in 0.0f64..1.0) {
            let a = normalized_weights(&EnergyFunction::Exponential, &v).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + s).collect();
            let b = normalized_weights(&EnergyFunction::Exponential, &shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-15, "{} vs {}", x, y);
            }
        }

        #[test]
        fn monotone_in_value(v in values(), q in 0.5f64..3.0) {
            prop_assume!(v.iter().any(|x| *x > 0.0));
            for f in [EnergyFunction::Exponential, poly(q, 0.0)] {
                let w = normalized_weights(&f, &v).unwrap();
                for i in 0..v.len() {
                    for j in 0..v.len() {
                        if v[i] > v[j] + 1e-9 {
                            prop_assert!(w[i] > w[j]);
                        } else if v[i] >= v[j] {
                            prop_assert!(w[i] >= w[j]);
                        }
                    }
                }
            }
        }
    }
}
