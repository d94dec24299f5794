//! Finite non-periodic Toda lattice: the tridiagonal Jacobi matrix built
//! from tau ratios, its minor polynomials, spectral residues and
//! Baker-Akhiezer vectors. The Bruhat (LU) route lives in [`bruhat`],
//! Lax-pair and conservation residuals in [`flows`].

mod bruhat;
mod flows;

pub use bruhat::bruhat_flow;
pub(crate) use flows::phases_extended;
pub use flows::{flow_invariant_residuals, hamiltonians, jacobi_matrix_extended, FlowResiduals, Precision};

use nalgebra::DMatrix;

use crate::darboux_dressing::minus_sheet_polynomial_ratio;
use crate::error::{Error, Result};
use crate::extended::Dd;
use crate::poly::Poly;
use crate::soliton_data::SolitonData;
use crate::tau_engine::{PhaseSum, TimeVector};
use crate::tridiag;

/// Jacobi matrix with diagonal `b_diag`, super-diagonal `a_offdiag` and unit
/// sub-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TodaState {
    pub a_offdiag: Vec<f64>,
    pub b_diag: Vec<f64>,
    pub t: TimeVector,
}

impl TodaState {
    pub fn new(a_offdiag: Vec<f64>, b_diag: Vec<f64>, t: TimeVector) -> Result<Self> {
        if b_diag.len() < 2 {
            return Err(Error::TooFewPhases(b_diag.len()));
        }
        if a_offdiag.len() + 1 != b_diag.len() {
            return Err(Error::LengthMismatch {
                phases: b_diag.len(),
                weights: a_offdiag.len() + 1,
            });
        }
        if a_offdiag.iter().chain(&b_diag).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Jacobi entries"));
        }
        if let Some(index) = a_offdiag.iter().position(|&x| x <= 0.0) {
            return Err(Error::NonPositiveWeight {
                index,
                value: a_offdiag[index],
            });
        }
        Ok(TodaState { a_offdiag, b_diag, t })
    }

    pub fn dim(&self) -> usize {
        self.b_diag.len()
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.b_diag[i]
            } else if j == i + 1 {
                self.a_offdiag[i]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Off-diagonal of the symmetric form `C A C^{-1}`, i.e. `sqrt(a_k)`.
    pub fn symmetric_offdiag(&self) -> Vec<f64> {
        self.a_offdiag.iter().map(|a| a.sqrt()).collect()
    }

    /// `C = diag(1, sqrt(a_1), sqrt(a_1 a_2), ...)`, as a vector.
    pub fn conjugation_factors(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let mut acc = 1.0;
        out.push(acc);
        for a in &self.a_offdiag {
            acc *= a.sqrt();
            out.push(acc);
        }
        out
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        tridiag::eigenvalues(&self.b_diag, &self.symmetric_offdiag())
    }

    /// Eigenvalues of the leading `size x size` block (roots of the leading minor).
    pub fn leading_block_eigenvalues(&self, size: usize) -> Vec<f64> {
        let off = self.symmetric_offdiag();
        tridiag::eigenvalues(&self.b_diag[..size], &off[..size.saturating_sub(1)])
    }

    /// Eigenvalues of the trailing `size x size` block (roots of the trailing minor).
    pub fn trailing_block_eigenvalues(&self, size: usize) -> Vec<f64> {
        let n = self.dim();
        let off = self.symmetric_offdiag();
        if size == 0 {
            return Vec::new();
        }
        tridiag::eigenvalues(&self.b_diag[n - size..], &off[n - size..])
    }

    /// Reflection across the anti-diagonal.
    pub fn reflected(&self) -> TodaState {
        TodaState {
            a_offdiag: self.a_offdiag.iter().rev().copied().collect(),
            b_diag: self.b_diag.iter().rev().copied().collect(),
            t: self.t.clone(),
        }
    }

    /// Trailing minor `Delta_j(zeta)` of `zeta I - A`, by recurrence.
    pub fn trailing_minor(&self, j: usize, zeta: f64) -> f64 {
        let n = self.dim();
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..j {
            // Delta_{m+1} = (zeta - b_{n-m}) Delta_m - a_{n-m} Delta_{m-1}
            let a = if m == 0 { 0.0 } else { self.a_offdiag[n - m - 1] };
            let next = (zeta - self.b_diag[n - m - 1]) * cur - a * prev;
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Leading minor `Delta_hat_j(zeta)` of `zeta I - A`, by recurrence.
    pub fn leading_minor(&self, j: usize, zeta: f64) -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..j {
            // Delta_hat_{m+1} = (zeta - b_{m+1}) Delta_hat_m - a_m Delta_hat_{m-1}
            let a = if m == 0 { 0.0 } else { self.a_offdiag[m - 1] };
            let next = (zeta - self.b_diag[m]) * cur - a * prev;
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Jacobi entries in double-double, for minors evaluated next to their
/// zeros where the binary64 recurrence loses most of its digits.
pub(crate) struct ExtendedJacobi {
    a: Vec<Dd>,
    b: Vec<Dd>,
}

impl ExtendedJacobi {
    pub(crate) fn new(data: &SolitonData, t: &TimeVector) -> Self {
        let (a, b) = jacobi_matrix_extended(data, t);
        ExtendedJacobi { a, b }
    }

    fn minor(&self, j: usize, zeta: f64, trailing: bool) -> f64 {
        self.minor_dd(j, zeta, trailing).to_f64()
    }

    pub(crate) fn leading_minor_dd(&self, j: usize, zeta: f64) -> Dd {
        self.minor_dd(j, zeta, false)
    }

    fn minor_dd(&self, j: usize, zeta: f64, trailing: bool) -> Dd {
        let n = self.b.len();
        let z = Dd::from(zeta);
        let (mut prev, mut cur) = (Dd::ZERO, Dd::ONE);
        for m in 0..j {
            let (a, b) = if trailing {
                (if m == 0 { Dd::ZERO } else { self.a[n - m - 1] }, self.b[n - m - 1])
            } else {
                (if m == 0 { Dd::ZERO } else { self.a[m - 1] }, self.b[m])
            };
            (prev, cur) = (cur, (z - b) * cur - a * prev);
        }
        cur
    }

    pub(crate) fn leading_minor(&self, j: usize, zeta: f64) -> f64 {
        self.minor(j, zeta, false)
    }

    pub(crate) fn trailing_minor(&self, j: usize, zeta: f64) -> f64 {
        self.minor(j, zeta, true)
    }
}

/// `log tau_k(t)` for `k = 0..=n`, together with `d/dx log tau_k`.
pub(crate) fn log_taus_and_slopes(data: &SolitonData, t: &TimeVector) -> (Vec<f64>, Vec<f64>) {
    (0..=data.len())
        .map(|k| {
            let sum = PhaseSum::new(data, k, t);
            (sum.log_total(), sum.mean())
        })
        .unzip()
}

/// Jacobi matrix at time `t` from tau ratios.
pub fn jacobi_matrix(data: &SolitonData, t: &TimeVector) -> TodaState {
    let (log_tau, slope) = log_taus_and_slopes(data, t);
    let n = data.len();
    let a_offdiag = (1..n)
        .map(|k| (log_tau[k - 1] + log_tau[k + 1] - 2.0 * log_tau[k]).exp())
        .collect();
    let b_diag = (1..=n).map(|k| slope[k] - slope[k - 1]).collect();
    TodaState {
        a_offdiag,
        b_diag,
        t: t.clone(),
    }
}

/// Trailing (`delta[j]`) and leading (`delta_hat[j]`) minors of `zeta I - A`,
/// `j = 0..=n`, as monic polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorPolys {
    pub delta: Vec<Poly>,
    pub delta_hat: Vec<Poly>,
    /// Largest residual of the mixed expansion
    /// `Delta_n = Delta_{n-j} Delta_hat_j - a_j Delta_{n-j-1} Delta_hat_{j-1}`
    /// over the probe points, relative to the absolute-value evaluation of
    /// each term.
    pub expansion_residual: f64,
}

/// Midpoints between consecutive phases plus one point to the right.
pub fn probe_points(kappa: &[f64]) -> Vec<f64> {
    let mut probes: Vec<f64> = kappa.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    probes.push(kappa[kappa.len() - 1] + 1.0);
    probes
}

pub fn minor_polynomials(state: &TodaState) -> MinorPolys {
    let n = state.dim();
    let a = &state.a_offdiag;
    let b = &state.b_diag;

    let mut delta = vec![Poly::one(), Poly::linear(b[n - 1])];
    let mut delta_hat = vec![Poly::one(), Poly::linear(b[0])];
    for j in 1..n {
        let next = &(&Poly::linear(b[n - 1 - j]) * &delta[j]) - &delta[j - 1].scale(a[n - 1 - j]);
        delta.push(next);
        let next_hat = &(&Poly::linear(b[j]) * &delta_hat[j]) - &delta_hat[j - 1].scale(a[j - 1]);
        delta_hat.push(next_hat);
    }

    let mut probes = probe_points(&state.eigenvalues());
    probes.push(b.iter().fold(0.0, |m: f64, x| m.max(x.abs())) + 1.0);
    let mut residual: f64 = 0.0;
    for &z in &probes {
        let full = delta[n].eval(z);
        for j in 1..n {
            let first = delta[n - j].eval(z) * delta_hat[j].eval(z);
            let second = a[j - 1] * delta[n - j - 1].eval(z) * delta_hat[j - 1].eval(z);
            // rounding in monomial evaluation scales with sum |c_i| |z|^i
            let scale = delta[n].eval_abs(z)
                + delta[n - j].eval_abs(z) * delta_hat[j].eval_abs(z)
                + a[j - 1].abs() * delta[n - j - 1].eval_abs(z) * delta_hat[j - 1].eval_abs(z);
            if scale > 0.0 {
                residual = residual.max((full - (first - second)).abs() / scale);
            }
        }
    }

    MinorPolys {
        delta,
        delta_hat,
        expansion_residual: residual,
    }
}

/// Residues of the resolvent at each phase: `a` from the trailing minor,
/// `a_hat` from the leading one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResidues {
    pub a: Vec<f64>,
    pub a_hat: Vec<f64>,
}

pub fn spectral_residues(state: &TodaState, kappa: &[f64]) -> Result<SpectralResidues> {
    let n = state.dim();
    if kappa.len() != n {
        return Err(Error::LengthMismatch {
            phases: kappa.len(),
            weights: n,
        });
    }
    let scale = 1.0 + kappa.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let deviation = state
        .eigenvalues()
        .iter()
        .zip(kappa)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()));
    if deviation > 1e-9 * scale {
        return Err(Error::SpectrumMismatch { deviation });
    }
    let residue = |value: f64, l: usize| {
        let denom: f64 = (0..n).filter(|&s| s != l).map(|s| kappa[l] - kappa[s]).product();
        value / denom
    };
    Ok(SpectralResidues {
        a: (0..n)
            .map(|l| residue(state.trailing_minor(n - 1, kappa[l]), l))
            .collect(),
        a_hat: (0..n)
            .map(|l| residue(state.leading_minor(n - 1, kappa[l]), l))
            .collect(),
    })
}

/// Baker-Akhiezer eigenvector pair of the symmetric Jacobi matrix at one
/// spectral value.
#[derive(Debug, Clone, PartialEq)]
pub struct BAVectorPair {
    pub psi: Vec<f64>,
    pub psi_sigma: Vec<f64>,
    pub zeta: f64,
    pub t: TimeVector,
}

/// Component `j` of `psi` is `exp(theta/2) Delta_hat_j(zeta; t) / c_j` and of
/// `psi_sigma` is `exp(-theta/2) D^(j)Phi(zeta; t) / (Phi(zeta; 0) c_j)`, where
/// `c_j = sqrt(a_1 ... a_j)`. Both satisfy the symmetric three-term
/// recurrence, and they agree at every phase.
pub fn ba_vectors(data: &SolitonData, zeta: f64, t: &TimeVector) -> BAVectorPair {
    let state = jacobi_matrix(data, t);
    let state0 = jacobi_matrix(data, &TimeVector::zero());
    let (log_tau, _) = log_taus_and_slopes(data, t);
    let c = state.conjugation_factors();
    let half_phase = 0.5 * t.phase(zeta);
    let n = data.len();

    let psi = (0..n)
        .map(|j| half_phase.exp() * state.leading_minor(j, zeta) / c[j])
        .collect();
    let psi_sigma = (0..n)
        .map(|j| {
            let ratio = minus_sheet_polynomial_ratio(&state, &state0, j, zeta);
            (-half_phase).exp() * (log_tau[j + 1] - log_tau[j]).exp() * ratio / c[j]
        })
        .collect();
    BAVectorPair {
        psi,
        psi_sigma,
        zeta,
        t: t.clone(),
    }
}
