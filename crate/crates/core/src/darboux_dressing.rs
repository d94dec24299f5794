//! Darboux operators `D^(k)` and the dressed KP wavefunction on the two
//! sheets of the rational curve `eta^2 = prod (zeta - kappa_j)^2`.
//!
//! `D^(k)` is the monic order-`k` operator in `x` whose kernel is spanned by
//! `mu_0, ..., mu_{k-1}`. Its symbol is the leading minor `Delta_hat_k`, so
//! on exponentials it acts as `D^(k) E_j = Delta_hat_k(kappa_j) E_j`.

use crate::error::{check_order, Error, Result};
use crate::extended::Dd;
use crate::soliton_data::{from_alpha, SolitonData};
use crate::tau_engine::{PhaseSum, TimeVector};
use crate::toda_core::{
    jacobi_matrix, log_taus_and_slopes, minor_polynomials, phases_extended, ExtendedJacobi, TodaState,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxOperator {
    pub k: usize,
    /// `D^(k) = d^k - w_1 d^{k-1} - ... - w_k`.
    pub w: Vec<f64>,
    pub t: TimeVector,
    /// Largest relative `|D^(k) mu_i|`, `i < k`.
    pub kernel_residual: f64,
}

/// Relative size of `sum_j a_j kappa_j^i symbol_j E_j` for `i < k`, with the
/// exponentials given by their logarithms.
fn kernel_defect(kappa: &[f64], weights: &[f64], symbol: &[f64], log_e: &[f64], k: usize) -> f64 {
    let shift = log_e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..k)
        .map(|i| {
            let terms: Vec<f64> = (0..kappa.len())
                .map(|j| weights[j] * kappa[j].powi(i as i32) * symbol[j] * (log_e[j] - shift).exp())
                .collect();
            let scale: f64 = terms.iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                0.0
            } else {
                terms.iter().sum::<f64>().abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn darboux_operator(data: &SolitonData, k: usize, t: &TimeVector) -> Result<DarbouxOperator> {
    check_order(k, 1, data.len() - 1)?;
    let state = jacobi_matrix(data, t);
    let hat = &minor_polynomials(&state).delta_hat[k];
    let w = (1..=k).map(|m| -hat.coeffs()[k - m]).collect();

    let kappa = data.kappa();
    let fine = ExtendedJacobi::new(data, t);
    let symbol: Vec<f64> = kappa.iter().map(|&z| fine.leading_minor(k, z)).collect();
    let log_e: Vec<f64> = kappa.iter().map(|&z| t.phase(z)).collect();
    let kernel_residual = kernel_defect(kappa, data.weights(), &symbol, &log_e, k);

    Ok(DarbouxOperator {
        k,
        w,
        t: t.clone(),
        kernel_residual,
    })
}

/// Truncated Taylor jet `f^(r)(x) / r!` for `r < len`.
#[derive(Debug, Clone)]
struct Jet(Vec<f64>);

impl Jet {
    fn constant(c: f64, len: usize) -> Jet {
        let mut v = vec![0.0; len];
        v[0] = c;
        Jet(v)
    }

    fn derivative(&self) -> Jet {
        let len = self.0.len();
        let mut v = vec![0.0; len];
        for (r, slot) in v.iter_mut().take(len - 1).enumerate() {
            *slot = (r + 1) as f64 * self.0[r + 1];
        }
        Jet(v)
    }

    fn mul(&self, other: &Jet) -> Jet {
        let len = self.0.len();
        let mut v = vec![0.0; len];
        for i in 0..len {
            for j in 0..len - i {
                v[i + j] += self.0[i] * other.0[j];
            }
        }
        Jet(v)
    }

    fn add(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// `w` coefficients of `D^(k)` obtained by composing the first-order
/// factors `(d - b_k)(d - b_{k-1})...(d - b_1)`. The x-derivatives of the
/// diagonal entries come from cumulants of the tau phase sums, so this route
/// does not touch the minor polynomials.
pub fn ladder_coefficients(data: &SolitonData, k: usize, t: &TimeVector) -> Result<Vec<f64>> {
    check_order(k, 1, data.len() - 1)?;
    let len = k;
    // cumulants of tau_0 vanish identically
    let mut cumulants: Vec<Vec<f64>> = vec![vec![0.0; len]];
    for m in 1..=k {
        cumulants.push(PhaseSum::new(data, m, t).cumulants(len));
    }
    let b_jets: Vec<Jet> = (1..=k)
        .map(|m| {
            let mut factorial = 1.0;
            Jet((0..len)
                .map(|r| {
                    if r > 0 {
                        factorial *= r as f64;
                    }
                    (cumulants[m][r] - cumulants[m - 1][r]) / factorial
                })
                .collect())
        })
        .collect();

    // coefficient jets of D, lowest order first
    let mut op: Vec<Jet> = vec![Jet::constant(1.0, len)];
    for b in &b_jets {
        let mut next: Vec<Jet> = vec![Jet::constant(0.0, len); op.len() + 1];
        for (i, c) in op.iter().enumerate() {
            next[i] = next[i]
                .add(&c.derivative())
                .add(&Jet(c.mul(b).0.iter().map(|x| -x).collect()));
            next[i + 1] = next[i + 1].add(c);
        }
        op = next;
    }
    Ok((1..=k).map(|m| -op[k - m].0[0]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    /// Carries the essential singularity of the wavefunction.
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub sheet: Sheet,
    pub zeta: f64,
    pub at_infinity: bool,
}

impl CurvePoint {
    pub fn finite(sheet: Sheet, zeta: f64) -> Self {
        CurvePoint {
            sheet,
            zeta,
            at_infinity: false,
        }
    }

    pub fn infinity(sheet: Sheet) -> Self {
        CurvePoint {
            sheet,
            zeta: f64::INFINITY,
            at_infinity: true,
        }
    }

    /// Sheet swap with `zeta` fixed.
    pub fn involution(&self) -> Self {
        CurvePoint {
            sheet: match self.sheet {
                Sheet::Plus => Sheet::Minus,
                Sheet::Minus => Sheet::Plus,
            },
            ..*self
        }
    }
}

/// Value `sign * exp(log_magnitude)`; a pole hit while probing has
/// `log_magnitude = +inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveValue {
    pub log_magnitude: f64,
    pub sign: i8,
    pub at: CurvePoint,
    pub t: TimeVector,
    pub k: usize,
}

impl WaveValue {
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_magnitude.exp()
        }
    }

    pub fn is_pole(&self) -> bool {
        self.log_magnitude == f64::INFINITY
    }
}

fn signed_log(x: f64) -> (f64, i8) {
    if x == 0.0 {
        (f64::NEG_INFINITY, 0)
    } else {
        (x.abs().ln(), if x > 0.0 { 1 } else { -1 })
    }
}

/// `Delta_{n-j-1}(zeta; t) / Delta_{n-1}(zeta; 0)`: the polynomial part of the
/// minus-sheet wavefunction after `j` Darboux steps.
pub fn minus_sheet_polynomial_ratio(state: &TodaState, state0: &TodaState, j: usize, zeta: f64) -> f64 {
    let n = state.dim();
    state.trailing_minor(n - j - 1, zeta) / state0.trailing_minor(n - 1, zeta)
}

/// Options for [`wavefunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WaveOptions {
    /// Divide by the value at `t = 0`.
    pub normalized: bool,
    /// Return a tagged infinite value at a pole instead of an error.
    pub probe: bool,
}

/// Dressed wavefunction of order `k`.
///
/// Plus sheet: `Delta_hat_k(zeta; t) exp(theta(zeta; t))`.
/// Minus sheet: `(tau_{k+1} / tau_k)(t) Delta_{n-k-1}(zeta; t) / Delta_{n-1}(zeta; 0)`.
pub fn wavefunction(
    data: &SolitonData,
    k: usize,
    p: CurvePoint,
    t: &TimeVector,
    options: WaveOptions,
) -> Result<WaveValue> {
    let n = data.len();
    check_order(k, 0, n - 1)?;
    let state = jacobi_matrix(data, t);
    let state0 = jacobi_matrix(data, &TimeVector::zero());
    let tol = data.collision_tolerance();
    let make = |log_magnitude: f64, sign: i8| WaveValue {
        log_magnitude,
        sign,
        at: p,
        t: t.clone(),
        k,
    };
    let pole = |zeta: f64| -> Result<WaveValue> {
        if options.probe {
            Ok(make(f64::INFINITY, 1))
        } else {
            Err(Error::Pole { zeta })
        }
    };
    let near = |points: &[f64], zeta: f64| points.iter().find(|&&q| (q - zeta).abs() <= tol).copied();

    match (p.sheet, p.at_infinity) {
        (Sheet::Plus, true) => {
            if options.probe {
                Ok(make(f64::INFINITY, 1))
            } else {
                Err(Error::EssentialSingularity)
            }
        }
        (Sheet::Plus, false) => {
            let zeta = p.zeta;
            let mut value = state.leading_minor(k, zeta);
            if options.normalized {
                if let Some(q) = near(&state0.leading_block_eigenvalues(k), zeta) {
                    return pole(q);
                }
                value /= state0.leading_minor(k, zeta);
            }
            let (l, s) = signed_log(value);
            Ok(make(l + t.phase(zeta), s))
        }
        (Sheet::Minus, at_infinity) => {
            let (log_tau, _) = log_taus_and_slopes(data, t);
            let mut log_ratio = log_tau[k + 1] - log_tau[k];
            if options.normalized {
                let (log_tau0, _) = log_taus_and_slopes(data, &TimeVector::zero());
                log_ratio -= log_tau0[k + 1] - log_tau0[k];
            }
            let poly = if at_infinity {
                if options.normalized || k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let zeta = p.zeta;
                let denominator_roots = if options.normalized {
                    state0.trailing_block_eigenvalues(n - k - 1)
                } else {
                    state0.trailing_block_eigenvalues(n - 1)
                };
                if let Some(q) = near(&denominator_roots, zeta) {
                    return pole(q);
                }
                let numerator = state.trailing_minor(n - k - 1, zeta);
                if options.normalized {
                    numerator / state0.trailing_minor(n - k - 1, zeta)
                } else {
                    numerator / state0.trailing_minor(n - 1, zeta)
                }
            };
            let (l, s) = signed_log(poly);
            Ok(make(l + log_ratio, s))
        }
    }
}

/// Minus-sheet value obtained by applying `D^(k)` term by term to the vacuum
/// `Phi(zeta; t) = sum_j a_j E_j(t) prod_{s != j}(zeta - kappa_s)` and dividing
/// by `Phi(zeta; 0)`. Returned as `(log |value|, sign)`.
pub fn dressed_vacuum_minus(data: &SolitonData, k: usize, zeta: f64, t: &TimeVector) -> Result<(f64, i8)> {
    let n = data.len();
    check_order(k, 0, n - 1)?;
    // the non-constant part of the numerator cancels across the sum, so the
    // terms are formed in double-double
    let fine = ExtendedJacobi::new(data, t);
    let kappa = data.kappa();
    let theta = phases_extended(kappa, t);
    let shift = theta.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
    let z = Dd::from(zeta);
    let others = |j: usize| {
        (0..n)
            .filter(|&s| s != j)
            .fold(Dd::ONE, |acc, s| acc * (z - Dd::from(kappa[s])))
    };
    let numerator = (0..n).fold(Dd::ZERO, |acc, j| {
        let e = (theta[j] - Dd::from(shift)).exp();
        acc + Dd::from(data.weights()[j]) * fine.leading_minor_dd(k, kappa[j]) * e * others(j)
    });
    let denominator = (0..n).fold(Dd::ZERO, |acc, j| acc + Dd::from(data.weights()[j]) * others(j));
    let (l, s) = signed_log((numerator / denominator).to_f64());
    Ok((l + shift, s))
}

/// Largest relative mismatch between the plus- and minus-sheet values of the
/// order-`k` wavefunction at the phases.
pub fn gluing_residual(data: &SolitonData, k: usize, t: &TimeVector) -> Result<f64> {
    let n = data.len();
    check_order(k, 0, n - 1)?;
    // minors at the phases sit next to their zeros, so both sides use
    // double-double entries
    let fine = ExtendedJacobi::new(data, t);
    let fine0 = ExtendedJacobi::new(data, &TimeVector::zero());
    let (log_tau, _) = log_taus_and_slopes(data, t);
    let floor = data.spread().powi(k as i32) * f64::EPSILON;
    let mut worst: f64 = 0.0;
    for &z in data.kappa() {
        // both sides divided by E_j
        let plus = fine.leading_minor(k, z);
        let ratio = fine.trailing_minor(n - k - 1, z) / fine0.trailing_minor(n - 1, z);
        let minus = (log_tau[k + 1] - log_tau[k] - t.phase(z)).exp() * ratio;
        let scale = plus.abs().max(minus.abs()).max(floor);
        worst = worst.max((plus - minus).abs() / scale);
    }
    Ok(worst)
}

/// `D_hat^(k)`, the operator with symbol `Delta_k(zeta; t)`, applied to
/// `mu_hat_i(t) = sum_l ahat_l kappa_l^i E_l(-t)` for `i < k`; relative size of
/// the largest result.
pub fn dual_kernel_residual(data: &SolitonData, k: usize, t: &TimeVector) -> Result<f64> {
    check_order(k, 1, data.len() - 1)?;
    let kappa = data.kappa();
    let dual = from_alpha(kappa, &data.alpha().reciprocal())?;
    let fine = ExtendedJacobi::new(data, t);
    let symbol: Vec<f64> = kappa.iter().map(|&z| fine.trailing_minor(k, z)).collect();
    let log_e: Vec<f64> = kappa.iter().map(|&z| -t.phase(z)).collect();
    Ok(kernel_defect(kappa, dual.weights(), &symbol, &log_e, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> SolitonData {
        SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn operator_coefficients_of_running_example() {
        let d = running();
        let op1 = darboux_operator(&d, 1, &TimeVector::zero()).unwrap();
        assert!((op1.w[0] - 0.75).abs() < 1e-15);
        let op2 = darboux_operator(&d, 2, &TimeVector::zero()).unwrap();
        assert!((op2.w[0] - 21.0 / 11.0).abs() < 1e-14);
        assert!((op2.w[1] + 2.0 / 11.0).abs() < 1e-14);
        assert!(op2.kernel_residual < 1e-14);
        assert!(darboux_operator(&d, 3, &TimeVector::zero()).is_err());
    }

    #[test]
    fn ladder_matches_minor_route() {
        let d = SolitonData::new(&[-1.0, -0.2, 0.5, 1.3], &[0.3, 0.2, 0.4, 0.1]).unwrap();
        let t = TimeVector::new(&[0.3, -0.2, 0.1]).unwrap();
        for k in 1..4 {
            let ladder = ladder_coefficients(&d, k, &t).unwrap();
            let op = darboux_operator(&d, k, &t).unwrap();
            for (x, y) in ladder.iter().zip(&op.w) {
                assert!((x - y).abs() < 1e-12, "k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn vacuum_is_one_at_time_zero() {
        let d = running();
        let t0 = TimeVector::zero();
        for sheet in [Sheet::Plus, Sheet::Minus] {
            for &z in &[-1.3, 0.5, 1.5, 3.0] {
                let v = wavefunction(&d, 0, CurvePoint::finite(sheet, z), &t0, WaveOptions::default()).unwrap();
                assert!((v.value() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_minus_sheet_reproduces_exponentials() {
        let d = running();
        let t = TimeVector::new(&[0.4, -0.7, 0.2]).unwrap();
        for &z in d.kappa() {
            let v = wavefunction(&d, 0, CurvePoint::finite(Sheet::Minus, z), &t, WaveOptions::default()).unwrap();
            assert!((v.value() / t.phase(z).exp() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn poles_and_probes() {
        let d = running();
        let t0 = TimeVector::zero();
        let b1 = (9.0 - 17f64.sqrt()) / 8.0;
        let at_pole = CurvePoint::finite(Sheet::Minus, b1);
        assert!(matches!(
            wavefunction(&d, 1, at_pole, &t0, WaveOptions::default()),
            Err(Error::Pole { .. })
        ));
        let probed = wavefunction(
            &d,
            1,
            at_pole,
            &t0,
            WaveOptions {
                probe: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(probed.is_pole());
        assert!(matches!(
            wavefunction(&d, 1, CurvePoint::infinity(Sheet::Plus), &t0, WaveOptions::default()),
            Err(Error::EssentialSingularity)
        ));
        let at_inf = wavefunction(&d, 1, CurvePoint::infinity(Sheet::Minus), &t0, WaveOptions::default()).unwrap();
        assert_eq!(at_inf.value(), 0.0);
    }

    #[test]
    fn gluing_holds() {
        let d = running();
        assert!(gluing_residual(&d, 0, &TimeVector::new(&[0.8, 0.1]).unwrap()).unwrap() < 1e-14);
        let r = gluing_residual(&d, 1, &TimeVector::new(&[0.3, -0.1]).unwrap()).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn dressing_route_agrees_with_closed_form() {
        let d = running();
        let t = TimeVector::new(&[0.3, -0.1, 0.2]).unwrap();
        for k in 0..3 {
            for &z in &[-0.5, 0.3, 1.4, 2.7] {
                let closed =
                    wavefunction(&d, k, CurvePoint::finite(Sheet::Minus, z), &t, WaveOptions::default()).unwrap();
                let (l, s) = dressed_vacuum_minus(&d, k, z, &t).unwrap();
                assert_eq!(s, closed.sign);
                assert!((l - closed.log_magnitude).abs() < 1e-12, "k={k} z={z}");
            }
        }
    }

    #[test]
    fn top_order_minus_sheet_is_constant() {
        let d = running();
        let t = TimeVector::new(&[0.6, 0.2, -0.3]).unwrap();
        let values: Vec<f64> = [-1.0, 0.2, 0.9, 1.3, 2.2, 5.0]
            .iter()
            .map(|&z| {
                wavefunction(
                    &d,
                    2,
                    CurvePoint::finite(Sheet::Minus, z),
                    &t,
                    WaveOptions {
                        normalized: true,
                        probe: false,
                    },
                )
                .unwrap()
                .value()
            })
            .collect();
        for v in &values {
            assert!((v - values[0]).abs() < 1e-12 * values[0].abs());
        }
    }

    #[test]
    fn dual_kernel_vanishes() {
        let d = running();
        for k in 1..3 {
            let r = dual_kernel_residual(&d, k, &TimeVector::new(&[0.2, 0.5]).unwrap()).unwrap();
            assert!(r < 1e-13, "k={k}: {r}");
        }
    }

    #[test]
    fn involution_flips_sheet() {
        let p = CurvePoint::finite(Sheet::Plus, 0.4);
        assert_eq!(p.involution().sheet, Sheet::Minus);
        assert_eq!(p.involution().zeta, 0.4);
        assert_eq!(p.involution().involution(), p);
    }
}
