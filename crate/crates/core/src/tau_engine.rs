//! Heat-hierarchy exponentials, tau functions and the KP field.
//!
//! Every tau function here is a sum of positive terms
//! `c_I exp(theta_I(t))` over index sets `I`. Sums are evaluated after
//! subtracting the largest exponent, so nothing overflows for any finite
//! time, and x-derivatives of `log tau` are cumulants of the phase sum
//! `s_I = sum_{i in I} kappa_i` under the normalized term weights.

use crate::error::{check_order, Error, Result};
use crate::soliton_data::{from_alpha, SolitonData};
use crate::subsets::for_each_subset;

pub const DEFAULT_TIME_CAP: usize = 8;

/// Hierarchy times `(t_1, t_2, ...)`; missing entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVector {
    times: Vec<f64>,
}

impl TimeVector {
    pub fn new(times: &[f64]) -> Result<Self> {
        Self::with_cap(times, DEFAULT_TIME_CAP)
    }

    pub fn with_cap(times: &[f64], cap: usize) -> Result<Self> {
        if times.len() > cap {
            return Err(Error::TooManyTimes { len: times.len(), cap });
        }
        if times.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("times"));
        }
        Ok(TimeVector { times: times.to_vec() })
    }

    pub fn zero() -> Self {
        TimeVector { times: vec![0.0] }
    }

    /// `(t_1, t_2, t_3) = (x, y, t)`.
    pub fn xyt(x: f64, y: f64, t: f64) -> Self {
        TimeVector { times: vec![x, y, t] }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `t_index`, 1-based as in the hierarchy; zero past the stored entries.
    pub fn get(&self, index: usize) -> f64 {
        assert!(index >= 1, "hierarchy times are numbered from 1");
        self.times.get(index - 1).copied().unwrap_or(0.0)
    }

    pub fn negated(&self) -> Self {
        TimeVector {
            times: self.times.iter().map(|x| -x).collect(),
        }
    }

    /// Copy with `t_index` moved by `delta`.
    pub fn shifted(&self, index: usize, delta: f64) -> Self {
        assert!(index >= 1, "hierarchy times are numbered from 1");
        let mut times = self.times.clone();
        if times.len() < index {
            times.resize(index, 0.0);
        }
        times[index - 1] += delta;
        TimeVector { times }
    }

    pub fn sup_norm(&self) -> f64 {
        self.times.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.times.iter().all(|&x| x == 0.0)
    }

    /// `theta(zeta; t) = sum_i zeta^i t_i`.
    pub fn phase(&self, zeta: f64) -> f64 {
        self.times.iter().rev().fold(0.0, |acc, &ti| (acc + ti) * zeta)
    }
}

/// `sign * exp(log_magnitude)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauValue {
    pub log_magnitude: f64,
    pub sign: i8,
}

impl TauValue {
    pub fn value(&self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }
}

/// Phases, exponentials and the moment sequences at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatBasisSample {
    /// `theta_j = theta(kappa_j; t)`; `E_j = exp(theta_j)`.
    pub theta: Vec<f64>,
    mu_scaled: Vec<f64>,
    mu_log_scale: f64,
    mu_hat_scaled: Vec<f64>,
    mu_hat_log_scale: f64,
}

impl HeatBasisSample {
    pub fn order(&self) -> usize {
        self.mu_scaled.len() - 1
    }

    /// `mu_i = sum_j a_j kappa_j^i E_j`.
    pub fn mu(&self, i: usize) -> f64 {
        self.mu_scaled[i] * self.mu_log_scale.exp()
    }

    /// `mu_i * exp(-shift)` with the shift returned alongside; safe when
    /// `mu_i` itself would overflow.
    pub fn mu_scaled(&self, i: usize) -> (f64, f64) {
        (self.mu_scaled[i], self.mu_log_scale)
    }

    /// `mu_hat_i(t) = sum_j ahat_j kappa_j^i E_j(-t)` built from the dual weights.
    pub fn mu_hat(&self, i: usize) -> f64 {
        self.mu_hat_scaled[i] * self.mu_hat_log_scale.exp()
    }
}

fn moment_sequence(kappa: &[f64], weights: &[f64], theta: &[f64], order: usize) -> (Vec<f64>, f64) {
    let shift = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = theta.iter().map(|th| (th - shift).exp()).collect();
    let mu = (0..=order)
        .map(|i| {
            kappa
                .iter()
                .zip(weights)
                .zip(&scaled)
                .map(|((&k, &a), &e)| a * k.powi(i as i32) * e)
                .sum()
        })
        .collect();
    (mu, shift)
}

pub fn heat_basis(data: &SolitonData, t: &TimeVector, order: usize) -> Result<HeatBasisSample> {
    let kappa = data.kappa();
    let theta: Vec<f64> = kappa.iter().map(|&k| t.phase(k)).collect();
    let (mu_scaled, mu_log_scale) = moment_sequence(kappa, data.weights(), &theta, order);

    let dual = from_alpha(kappa, &data.alpha().reciprocal())?;
    let theta_back: Vec<f64> = theta.iter().map(|th| -th).collect();
    let (mu_hat_scaled, mu_hat_log_scale) = moment_sequence(kappa, dual.weights(), &theta_back, order);

    Ok(HeatBasisSample {
        theta,
        mu_scaled,
        mu_log_scale,
        mu_hat_scaled,
        mu_hat_log_scale,
    })
}

/// Terms of `tau_k(t)` with the largest exponent factored out.
#[derive(Debug, Clone)]
pub(crate) struct PhaseSum {
    log_shift: f64,
    /// `c_I exp(theta_I - log_shift)`
    weights: Vec<f64>,
    /// `s_I`
    sums: Vec<f64>,
}

impl PhaseSum {
    pub(crate) fn new(data: &SolitonData, k: usize, t: &TimeVector) -> Self {
        let kappa = data.kappa();
        let n = kappa.len();
        let single: Vec<f64> = (0..n).map(|j| data.weights()[j].ln() + t.phase(kappa[j])).collect();
        let mut pair = vec![0.0; n * n];
        for s in 0..n {
            for r in 0..s {
                pair[s * n + r] = 2.0 * (kappa[s] - kappa[r]).ln();
            }
        }

        let mut logs = Vec::new();
        let mut sums = Vec::new();
        for_each_subset(n, k, |idx| {
            let mut l = 0.0;
            let mut s = 0.0;
            for (p, &i) in idx.iter().enumerate() {
                l += single[i];
                s += kappa[i];
                for &r in &idx[..p] {
                    l += pair[i * n + r];
                }
            }
            logs.push(l);
            sums.push(s);
        });
        let log_shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = logs.iter().map(|l| (l - log_shift).exp()).collect();
        PhaseSum {
            log_shift,
            weights,
            sums,
        }
    }

    pub(crate) fn log_total(&self) -> f64 {
        self.log_shift + self.weights.iter().sum::<f64>().ln()
    }

    pub(crate) fn mean(&self) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().zip(&self.sums).map(|(w, s)| w * s).sum::<f64>() / total
    }

    /// Cumulants 1..=order of `s_I`; cumulant `r` equals `d^r/dx^r log tau`.
    pub(crate) fn cumulants(&self, order: usize) -> Vec<f64> {
        let total: f64 = self.weights.iter().sum();
        let mean = self.mean();
        let central: Vec<f64> = (0..=order)
            .map(|r| {
                self.weights
                    .iter()
                    .zip(&self.sums)
                    .map(|(w, s)| w * (s - mean).powi(r as i32))
                    .sum::<f64>()
                    / total
            })
            .collect();
        let mut cumulants = vec![0.0; order + 1];
        for r in 2..=order {
            let mut c = central[r];
            for m in 2..r - 1 {
                c -= binomial_f64(r - 1, m - 1) * cumulants[m] * central[r - m];
            }
            cumulants[r] = c;
        }
        if order >= 1 {
            cumulants[1] = mean;
        }
        cumulants.remove(0);
        cumulants
    }
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `tau_k(t)`; `tau_0 = 1`.
pub fn tau(data: &SolitonData, k: usize, t: &TimeVector) -> Result<TauValue> {
    check_order(k, 0, data.len())?;
    Ok(TauValue {
        log_magnitude: PhaseSum::new(data, k, t).log_total(),
        sign: 1,
    })
}

/// `d^r/dx^r log tau_k(t)` for `r = 1..=order`.
pub fn log_tau_x_derivatives(data: &SolitonData, k: usize, t: &TimeVector, order: usize) -> Result<Vec<f64>> {
    check_order(k, 0, data.len())?;
    Ok(PhaseSum::new(data, k, t).cumulants(order))
}

/// `u = 2 d^2/dx^2 log tau_k` at a full time vector.
pub fn kp_field_at(data: &SolitonData, k: usize, t: &TimeVector) -> Result<f64> {
    Ok(2.0 * log_tau_x_derivatives(data, k, t, 2)?[1])
}

/// `u` at each `(x, y, t)` triple, all higher times zero.
pub fn kp_field(data: &SolitonData, k: usize, grid: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    check_order(k, 0, data.len())?;
    Ok(grid
        .iter()
        .map(|&(x, y, t3)| 2.0 * PhaseSum::new(data, k, &TimeVector::xyt(x, y, t3)).cumulants(2)[1])
        .collect())
}
