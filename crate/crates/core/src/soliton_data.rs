//! Soliton data (ordered phases with positive weights) and the coordinate
//! systems built on it: projective alpha coordinates, the weighted
//! Vandermonde representative of a Grassmannian point, and its reduced row
//! echelon tail.

use crate::error::{check_order, Error, Result};
use crate::subsets::for_each_subset;

/// Largest number of phases accepted; tau sums enumerate all subsets.
pub const MAX_PHASES: usize = 20;

/// Default relative floor on consecutive phase gaps.
pub const DEFAULT_GAP_FLOOR: f64 = 1e-9;

/// Phases `kappa[0] < ... < kappa[n-1]` and weights normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonData {
    kappa: Vec<f64>,
    weights: Vec<f64>,
}

/// Validates and normalizes soliton data with the default gap floor.
pub fn make_soliton_data(kappa: &[f64], weights: &[f64]) -> Result<SolitonData> {
    SolitonData::new(kappa, weights)
}

impl SolitonData {
    pub fn new(kappa: &[f64], weights: &[f64]) -> Result<Self> {
        Self::with_gap_floor(kappa, weights, DEFAULT_GAP_FLOOR)
    }

    /// As [`SolitonData::new`], rejecting gaps below `floor * (kappa_max - kappa_min)`.
    pub fn with_gap_floor(kappa: &[f64], weights: &[f64], floor: f64) -> Result<Self> {
        let n = kappa.len();
        if n != weights.len() {
            return Err(Error::LengthMismatch {
                phases: n,
                weights: weights.len(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewPhases(n));
        }
        if n > MAX_PHASES {
            return Err(Error::TooManyPhases {
                got: n,
                max: MAX_PHASES,
            });
        }
        if kappa.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("phases"));
        }
        if weights.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        if let Some(index) = kappa.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Ordering { index });
        }
        if let Some(index) = weights.iter().position(|&w| w <= 0.0) {
            return Err(Error::NonPositiveWeight {
                index,
                value: weights[index],
            });
        }
        let abs_floor = floor * (kappa[n - 1] - kappa[0]);
        if let Some(index) = kappa.windows(2).position(|w| w[1] - w[0] < abs_floor) {
            return Err(Error::DegenerateGap {
                index,
                gap: kappa[index + 1] - kappa[index],
                floor: abs_floor,
            });
        }

        let total: f64 = weights.iter().sum();
        // Already-normalized input is kept bit for bit.
        let weights = if (total - 1.0).abs() <= n as f64 * f64::EPSILON {
            weights.to_vec()
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        Ok(SolitonData {
            kappa: kappa.to_vec(),
            weights,
        })
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of phases.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `kappa_max - kappa_min`.
    pub fn spread(&self) -> f64 {
        self.kappa[self.len() - 1] - self.kappa[0]
    }

    /// Distance below which a divisor point counts as sitting on a phase.
    pub fn collision_tolerance(&self) -> f64 {
        1e-9 * self.spread()
    }

    /// `sum_{m != j} ln|kappa_j - kappa_m|`.
    pub(crate) fn log_abs_vandermonde_row(&self, j: usize) -> f64 {
        log_abs_vandermonde_row(&self.kappa, j)
    }

    pub fn alpha(&self) -> AlphaVector {
        alpha_coordinates(self)
    }

    /// Closed-form maximal minor of the weighted Vandermonde representative
    /// on the (increasing) column set `cols`.
    pub fn maximal_minor(&self, cols: &[usize]) -> f64 {
        let mut value: f64 = cols.iter().map(|&c| self.weights[c]).product();
        for (s, &cs) in cols.iter().enumerate() {
            for &cr in &cols[..s] {
                value *= self.kappa[cs] - self.kappa[cr];
            }
        }
        value
    }

    /// Smallest maximal minor of the order-`k` representative.
    pub fn min_maximal_minor(&self, k: usize) -> Result<f64> {
        check_order(k, 1, self.len() - 1)?;
        let mut min = f64::INFINITY;
        for_each_subset(self.len(), k, |cols| min = min.min(self.maximal_minor(cols)));
        Ok(min)
    }
}

pub(crate) fn log_abs_vandermonde_row(kappa: &[f64], j: usize) -> f64 {
    kappa
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &km)| (kappa[j] - km).abs().ln())
        .sum()
}

/// Positive projective coordinates, stored with the first entry equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    values: Vec<f64>,
}

impl AlphaVector {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("alpha coordinates"));
        }
        if let Some(index) = values.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveWeight {
                index,
                value: values[index],
            });
        }
        if values.is_empty() {
            return Err(Error::TooFewPhases(0));
        }
        let first = values[0];
        Ok(AlphaVector {
            values: values.iter().map(|v| v / first).collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Componentwise reciprocal, rescaled.
    pub fn reciprocal(&self) -> AlphaVector {
        AlphaVector {
            values: self.values.iter().map(|v| 1.0 / v).collect(),
        }
    }
}

/// `alpha_j = (-1)^{n-j} a_j prod_{m != j}(kappa_j - kappa_m)`; the sign
/// factor cancels the sign of the product, so only magnitudes are needed.
pub fn alpha_coordinates(data: &SolitonData) -> AlphaVector {
    let logs: Vec<f64> = (0..data.len())
        .map(|j| data.weights[j].ln() + data.log_abs_vandermonde_row(j))
        .collect();
    AlphaVector {
        values: logs.iter().map(|l| (l - logs[0]).exp()).collect(),
    }
}

/// Inverse of [`alpha_coordinates`].
pub fn from_alpha(kappa: &[f64], alpha: &AlphaVector) -> Result<SolitonData> {
    if kappa.len() != alpha.values.len() {
        return Err(Error::LengthMismatch {
            phases: kappa.len(),
            weights: alpha.values.len(),
        });
    }
    if let Some(index) = kappa.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Ordering { index });
    }
    let logs: Vec<f64> = (0..kappa.len())
        .map(|j| alpha.values[j].ln() - log_abs_vandermonde_row(kappa, j))
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    SolitonData::new(kappa, &raw)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepForm {
    /// Row `i`, column `j` holds `a_j kappa_j^i`.
    VandermondeWeighted,
    /// Identity in the first `k` columns.
    Rref,
}

/// A `rows x cols` real matrix representing a point of the Grassmannian.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannRep {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<f64>>,
    pub form: RepForm,
}

/// Weighted Vandermonde representative of order `k`.
pub fn representative_matrix(data: &SolitonData, k: usize) -> Result<GrassmannRep> {
    check_order(k, 1, data.len() - 1)?;
    debug_assert!(data.min_maximal_minor(k)? > 0.0);
    let entries = (0..k)
        .map(|i| {
            data.kappa
                .iter()
                .zip(&data.weights)
                .map(|(&kj, &aj)| aj * kj.powi(i as i32))
                .collect()
        })
        .collect();
    Ok(GrassmannRep {
        rows: k,
        cols: data.len(),
        entries,
        form: RepForm::VandermondeWeighted,
    })
}

/// Unsigned reduced-row-echelon tail: entry `[i][j]` is the RREF entry in row
/// `i`, column `k + j`, multiplied by `(-1)^(k-1-i)` so that all entries are
/// positive.
pub fn rref_coefficients(data: &SolitonData, k: usize) -> Result<Vec<Vec<f64>>> {
    let n = data.len();
    check_order(k, 1, n - 1)?;
    let kappa = &data.kappa;
    let a = &data.weights;
    Ok((0..k)
        .map(|i| {
            (k..n)
                .map(|c| {
                    let ratio: f64 = (0..k)
                        .filter(|&l| l != i)
                        .map(|l| (kappa[c] - kappa[l]) / (kappa[i] - kappa[l]).abs())
                        .product();
                    a[c] / a[i] * ratio
                })
                .collect()
        })
        .collect())
}

/// Reduced row echelon representative built from [`rref_coefficients`].
pub fn rref_matrix(data: &SolitonData, k: usize) -> Result<GrassmannRep> {
    let n = data.len();
    let tail = rref_coefficients(data, k)?;
    let entries = (0..k)
        .map(|i| {
            let sign = if (k - 1 - i).is_multiple_of(2) { 1.0 } else { -1.0 };
            (0..n)
                .map(|c| {
                    if c < k {
                        if c == i {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        sign * tail[i][c - k]
                    }
                })
                .collect()
        })
        .collect();
    Ok(GrassmannRep {
        rows: k,
        cols: n,
        entries,
        form: RepForm::Rref,
    })
}
