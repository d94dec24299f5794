use nalgebra::DMatrix;

use super::TodaState;
use crate::error::{Error, Result};
use crate::tau_engine::TimeVector;

/// `exp(m)` by scaling and squaring with a Taylor series run to machine precision.
fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.lp_norm(1);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = m / 2f64.powi(squarings);

    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for i in 1..60 {
        term = &term * &x / i as f64;
        sum += &term;
        if term.amax() <= f64::EPSILON * sum.amax() * 1e-3 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Crout factorization `psi = L U` with `U` unit upper triangular, no pivoting.
/// Returns `L`, or the 1-based index of the first non-positive pivot.
fn crout(psi: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let n = psi.nrows();
    let mut l = DMatrix::zeros(n, n);
    let mut u = DMatrix::identity(n, n);
    for k in 0..n {
        for i in k..n {
            let s: f64 = (0..k).map(|m| l[(i, m)] * u[(m, k)]).sum();
            l[(i, k)] = psi[(i, k)] - s;
        }
        let pivot = l[(k, k)];
        if !(pivot > 0.0 && pivot.is_finite()) {
            return Err(k + 1);
        }
        for j in k + 1..n {
            let s: f64 = (0..k).map(|m| l[(k, m)] * u[(m, j)]).sum();
            u[(k, j)] = (psi[(k, j)] - s) / pivot;
        }
    }
    Ok(l)
}

/// Solves `L X = rhs` for lower triangular `L`.
fn forward_solve(l: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut x = DMatrix::zeros(n, rhs.ncols());
    for c in 0..rhs.ncols() {
        for i in 0..n {
            let s: f64 = (0..i).map(|m| l[(i, m)] * x[(m, c)]).sum();
            x[(i, c)] = (rhs[(i, c)] - s) / l[(i, i)];
        }
    }
    x
}

/// Evolves a Jacobi matrix along the hierarchy by factoring
/// `exp(sum_j t_j A0^j) = L U` and conjugating, `A(t) = L^{-1} A0 L`.
pub fn bruhat_flow(state0: &TodaState, t: &TimeVector) -> Result<TodaState> {
    let a0 = state0.dense();
    let n = a0.nrows();
    let mut generator = DMatrix::zeros(n, n);
    let mut power = DMatrix::identity(n, n);
    for &tj in t.times() {
        power = &power * &a0;
        generator += &power * tj;
    }
    let psi = expm(&generator);
    let l = crout(&psi).map_err(|index| Error::DegenerateFlow { index })?;
    let evolved = forward_solve(&l, &(&a0 * &l));
    TodaState::new(
        (0..n - 1).map(|i| evolved[(i, i + 1)]).collect(),
        (0..n).map(|i| evolved[(i, i)]).collect(),
        t.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton_data::SolitonData;
    use crate::toda_core::jacobi_matrix;

    #[test]
    fn exponential_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.5, 2.0]));
        let e = expm(&m);
        for i in 0..3 {
            assert!((e[(i, i)] - m[(i, i)].exp()).abs() < 1e-14 * m[(i, i)].exp());
        }
    }

    #[test]
    fn exponential_of_rotation_generator() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.3, 1.3, 0.0]);
        let e = expm(&m);
        assert!((e[(0, 0)] - 1.3f64.cos()).abs() < 1e-15);
        assert!((e[(1, 0)] - 1.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn identity_at_zero_time() {
        let d = SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap();
        let s0 = jacobi_matrix(&d, &TimeVector::zero());
        let s = bruhat_flow(&s0, &TimeVector::zero()).unwrap();
        assert_eq!(s.a_offdiag, s0.a_offdiag);
        assert_eq!(s.b_diag, s0.b_diag);
    }

    #[test]
    fn matches_tau_route() {
        let d = SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap();
        let s0 = jacobi_matrix(&d, &TimeVector::zero());
        let t = TimeVector::new(&[0.3]).unwrap();
        let s = bruhat_flow(&s0, &t).unwrap();
        let reference = jacobi_matrix(&d, &t);
        for (x, y) in s.a_offdiag.iter().zip(&reference.a_offdiag) {
            assert!((x - y).abs() < 1e-13);
        }
        for (x, y) in s.b_diag.iter().zip(&reference.b_diag) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn breakdown_is_reported() {
        // a matrix with a vanishing leading entry has no LU factorization
        let psi = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(crout(&psi).unwrap_err(), 1);
    }
}
