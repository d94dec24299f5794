//! Eigenvalues of real symmetric tridiagonal matrices by Sturm-sequence bisection.
//!
//! Bisection is slower than QL but returns eigenvalues in sorted order with
//! absolute accuracy near machine precision times the matrix norm, which is
//! what the interlacing arguments downstream rely on.

/// Number of eigenvalues strictly below `x`.
fn count_below(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues in ascending order. `off` holds the `diag.len() - 1`
/// off-diagonal entries.
pub fn eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n - 1");
    if n == 1 {
        return vec![diag[0]];
    }

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let norm = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let pad = 4.0 * f64::EPSILON * norm;
    lo -= pad;
    hi += pad;
    let max_off_sq = off.iter().map(|e| e * e).fold(0.0, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_off_sq.max(1.0);

    (0..n)
        .map(|index| {
            let (mut left, mut right) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (left + right);
                if mid <= left || mid >= right {
                    break;
                }
                if right - left <= 2.0 * f64::EPSILON * mid.abs().max(f64::EPSILON * norm) {
                    break;
                }
                if count_below(diag, off, mid, pivmin) > index {
                    right = mid;
                } else {
                    left = mid;
                }
            }
            0.5 * (left + right)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
        let n = diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn matches_dense_solver() {
        let diag = [0.3, -1.2, 2.5, 0.0, 0.7];
        let off = [0.5, 1.1, 0.01, 2.0];
        let ours = eigenvalues(&diag, &off);
        let mut reference: Vec<f64> = dense(&diag, &off).symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[0, 1], [1, 0]] has eigenvalues -1, 1.
        let ev = eigenvalues(&[0.0, 0.0], &[1.0]);
        assert!((ev[0] + 1.0).abs() < 1e-15);
        assert!((ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn repeated_diagonal_without_coupling() {
        let ev = eigenvalues(&[1.0, 1.0, 1.0], &[0.0, 0.0]);
        assert!(ev.iter().all(|x| (x - 1.0).abs() < 1e-15));
    }
}
