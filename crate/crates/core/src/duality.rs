//! Space-time inversion: `t -> -t` carries an order-`k` soliton on `n`
//! phases to an order-`(n-k)` one whose alpha coordinates are the
//! reciprocals of the original ones.

use crate::divisor_lab::{compatible_divisor, Divisor};
use crate::error::{check_order, Error, Result};
use crate::extended::Dd;
use crate::soliton_data::{alpha_coordinates, from_alpha, SolitonData};
use crate::tau_engine::{kp_field_at, tau, TimeVector};
use crate::toda_core::jacobi_matrix;

/// Dual weights `ahat` from `alpha_hat = 1 / alpha`, normalized.
pub fn dual_data(data: &SolitonData) -> SolitonData {
    from_alpha(data.kappa(), &alpha_coordinates(data).reciprocal())
        .expect("reciprocal alpha coordinates of valid data are valid")
}

/// Dual weights from the residues `Delta_hat_{n-1}(kappa_l; 0) / prod_{s != l}(kappa_l - kappa_s)`.
pub fn dual_weights_from_minors(data: &SolitonData) -> Vec<f64> {
    let kappa = data.kappa();
    let n = kappa.len();
    let state = jacobi_matrix(data, &TimeVector::zero());
    let raw: Vec<f64> = (0..n)
        .map(|l| {
            let denom: f64 = (0..n).filter(|&s| s != l).map(|s| kappa[l] - kappa[s]).product();
            state.leading_minor(n - 1, kappa[l]) / denom
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

/// Relative spread `max / min - 1` of a positive sequence.
fn spread_of(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}

/// `a_j ahat_j prod_{m != j}(kappa_j - kappa_m)^2`, which is independent of `j`.
pub fn product_law_values(primal: &SolitonData, dual: &SolitonData) -> Vec<f64> {
    let kappa = primal.kappa();
    (0..kappa.len())
        .map(|j| {
            let v: f64 = (0..kappa.len())
                .filter(|&m| m != j)
                .map(|m| (kappa[j] - kappa[m]).powi(2))
                .product();
            primal.weights()[j] * dual.weights()[j] * v
        })
        .collect()
}

/// The variant `a_j ahat_j prod_{i < l; i, l != j}(kappa_l - kappa_i)^2`. It is
/// not constant in `j` once `n >= 3`; kept as a regression witness.
pub fn printed_product_law_values(primal: &SolitonData, dual: &SolitonData) -> Vec<f64> {
    let kappa = primal.kappa();
    let n = kappa.len();
    (0..n)
        .map(|j| {
            let mut v = 1.0;
            for i in (0..n).filter(|&i| i != j) {
                for l in (i + 1..n).filter(|&l| l != j) {
                    v *= (kappa[l] - kappa[i]).powi(2);
                }
            }
            primal.weights()[j] * dual.weights()[j] * v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPair {
    pub primal: SolitonData,
    pub dual: SolitonData,
    /// Order on the primal side; the dual carries `n - k`.
    pub k: usize,
    /// `log C_k` in `tau_hat_{n-k}(t) = C_k tau_k(-t) prod_j E_j(t)`.
    pub log_scale_constant: f64,
    /// Largest deviation between `ahat` and the minor residues.
    pub residue_mismatch: f64,
    /// Relative spread of [`product_law_values`].
    pub product_law_spread: f64,
}

pub fn dual_pair(data: &SolitonData, k: usize) -> Result<DualPair> {
    check_order(k, 1, data.len() - 1)?;
    let dual = dual_data(data);
    let n = data.len();
    let zero = TimeVector::zero();
    let log_scale_constant = tau(&dual, n - k, &zero)?.log_magnitude - tau(data, k, &zero)?.log_magnitude;
    let residue_mismatch = dual_weights_from_minors(data)
        .iter()
        .zip(dual.weights())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let product_law_spread = spread_of(&product_law_values(data, &dual));
    Ok(DualPair {
        primal: data.clone(),
        dual,
        k,
        log_scale_constant,
        residue_mismatch,
        product_law_spread,
    })
}

/// Relative spread of the printed product law; positive for `n >= 3`.
pub fn printed_product_law_spread(data: &SolitonData) -> f64 {
    spread_of(&printed_product_law_values(data, &dual_data(data)))
}

/// Dual `(n-k)`-divisor at time `t` obtained by swapping sheets on the primal
/// `(k-1)`-divisor at `-t`, checked against the divisor computed directly from
/// the dual data.
pub fn dual_divisor(data: &SolitonData, k: usize, t: &TimeVector) -> Result<Divisor> {
    let n = data.len();
    check_order(k, 1, n - 1)?;
    let primal = compatible_divisor(data, k - 1, &t.negated())?;
    let swapped = Divisor::from_extended_points(
        data.kappa(),
        n - k,
        &primal.extended_deltas(),
        &primal.extended_gammas(),
        t.clone(),
    )?;
    let direct = compatible_divisor(&dual_data(data), n - k, t)?;
    let deviation = swapped.distance(&direct);
    if deviation > 1e-9 * data.spread() {
        return Err(Error::DualityViolation { deviation });
    }
    Ok(swapped)
}

/// The ratio
/// `prod(kappa_j - gamma^(k)) prod(kappa_j - gammahat^(n-k)) / (prod(kappa_j - delta^(k)) prod(kappa_j - deltahat^(n-k)))`
/// at `t = 0` for each phase, which should equal `a_k(0)`. Phases lying on a
/// divisor point give `None`.
pub fn const_ratios(data: &SolitonData, k: usize) -> Result<Vec<Option<f64>>> {
    let n = data.len();
    check_order(k, 1, n - 1)?;
    let zero = TimeVector::zero();
    let primal = compatible_divisor(data, k, &zero)?;
    let dual = compatible_divisor(&dual_data(data), n - k, &zero)?;
    let tol = data.collision_tolerance();
    let (pg, pd) = (primal.extended_gammas(), primal.extended_deltas());
    let (dg, dd) = (dual.extended_gammas(), dual.extended_deltas());
    let prod = |z: Dd, pts: &[Dd]| pts.iter().fold(Dd::ONE, |acc, &p| acc * (z - p));
    Ok(data
        .kappa()
        .iter()
        .map(|&z| {
            let all = pg.iter().chain(&pd).chain(&dg).chain(&dd);
            if all.into_iter().any(|p| (p.hi - z).abs() <= tol) {
                return None;
            }
            let z = Dd::from(z);
            Some((prod(z, &pg) * prod(z, &dg) / (prod(z, &pd) * prod(z, &dd))).to_f64())
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityResiduals {
    /// `max |u_hat_{n-k}(t) - u_k(-t)|` over the grid.
    pub field: f64,
    /// Log-domain tau relation residual with the constant fitted at `t = 0`.
    pub tau_relation: f64,
    /// Largest entrywise Jacobi reflection residual.
    pub toda_reflection: f64,
}

impl DualityResiduals {
    pub fn max(&self) -> f64 {
        self.field.max(self.tau_relation).max(self.toda_reflection)
    }
}

/// Duality checks at order `k`. The tau relation and the Jacobi reflection
/// are evaluated at `t`; the field relation over `grid` of `(x, y, t3)`.
pub fn duality_residuals(
    data: &SolitonData,
    k: usize,
    t: &TimeVector,
    grid: &[(f64, f64, f64)],
) -> Result<DualityResiduals> {
    let pair = dual_pair(data, k)?;
    let n = data.len();
    let dual = &pair.dual;

    let mut field: f64 = 0.0;
    for &(x, y, t3) in grid {
        let at = TimeVector::xyt(x, y, t3);
        let u_hat = kp_field_at(dual, n - k, &at)?;
        let u = kp_field_at(data, k, &at.negated())?;
        field = field.max((u_hat - u).abs());
    }

    let sum_theta: f64 = data.kappa().iter().map(|&z| t.phase(z)).sum();
    let lhs = tau(dual, n - k, t)?.log_magnitude;
    let rhs = pair.log_scale_constant + tau(data, k, &t.negated())?.log_magnitude + sum_theta;
    let tau_relation = (lhs - rhs).abs() / lhs.abs().max(1.0);

    let hat = jacobi_matrix(dual, t);
    let reflected = jacobi_matrix(data, &t.negated()).reflected();
    let toda_reflection = hat
        .a_offdiag
        .iter()
        .zip(&reflected.a_offdiag)
        .chain(hat.b_diag.iter().zip(&reflected.b_diag))
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max);

    Ok(DualityResiduals {
        field,
        tau_relation,
        toda_reflection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> SolitonData {
        SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn running_dual_weights() {
        let d = running();
        let dual = dual_data(&d);
        for (w, e) in dual.weights().iter().zip([1.0 / 11.0, 8.0 / 11.0, 2.0 / 11.0]) {
            assert!((w - e).abs() < 1e-15);
        }
        for (w, e) in dual_weights_from_minors(&d).iter().zip(dual.weights()) {
            assert!((w - e).abs() < 1e-14);
        }
    }

    #[test]
    fn two_phase_dual_swaps_weights() {
        let d = SolitonData::new(&[-0.5, 2.0], &[0.3, 0.7]).unwrap();
        let dual = dual_data(&d);
        assert!((dual.weights()[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn symmetric_data_is_self_dual() {
        let d = SolitonData::new(&[-1.0, 0.0, 1.0], &[1.0, 2.0, 1.0]).unwrap();
        let dual = dual_data(&d);
        for (x, y) in dual.weights().iter().zip(d.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn product_laws() {
        let pair = dual_pair(&running(), 1).unwrap();
        assert!(pair.product_law_spread < 1e-14);
        assert!(pair.residue_mismatch < 1e-14);
        let printed = printed_product_law_values(&pair.primal, &pair.dual);
        // a * ahat = (1/22, 2/11, 1/22); the printed weights are (1, 4, 1)
        assert!((printed[1] / printed[0] - 16.0).abs() < 1e-12);
        assert!(printed_product_law_spread(&running()) > 1.0);
    }

    #[test]
    fn dual_divisor_from_vacuum() {
        let d = dual_divisor(&running(), 1, &TimeVector::zero()).unwrap();
        let r = 17f64.sqrt();
        assert!((d.gammas[0] - (9.0 - r) / 8.0).abs() < 1e-14);
        assert!((d.gammas[1] - (9.0 + r) / 8.0).abs() < 1e-14);
        assert!(d.deltas.is_empty());
        let d2 = dual_divisor(&running(), 2, &TimeVector::new(&[0.3, 0.1]).unwrap()).unwrap();
        assert_eq!(d2.k, 1);
    }

    #[test]
    fn const_ratio_equals_first_offdiagonal() {
        let ratios = const_ratios(&running(), 1).unwrap();
        for r in ratios {
            assert!((r.unwrap() - 11.0 / 16.0).abs() < 1e-13);
        }
        let ratios = const_ratios(&running(), 2).unwrap();
        for r in ratios {
            assert!((r.unwrap() - 32.0 / 121.0).abs() < 1e-13);
        }
    }

    #[test]
    fn collision_phase_is_skipped() {
        let d = SolitonData::new(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        let ratios = const_ratios(&d, 1).unwrap();
        assert!(ratios[1].is_none());
        let a1 = jacobi_matrix(&d, &TimeVector::zero()).a_offdiag[0];
        assert!((ratios[0].unwrap() - a1).abs() < 1e-13);
    }

    #[test]
    fn residuals_vanish() {
        let d = running();
        let grid = [(0.3, -0.2, 0.1), (-1.0, 0.5, 0.0)];
        for k in 1..3 {
            let r = duality_residuals(&d, k, &TimeVector::new(&[0.2, -0.4, 0.3]).unwrap(), &grid).unwrap();
            assert!(r.max() < 1e-12, "k={k}: {r:?}");
        }
    }
}
