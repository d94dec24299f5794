use super::jacobi_matrix;
use crate::error::{Error, Result};
use crate::extended::Dd;
use crate::soliton_data::SolitonData;
use crate::subsets::for_each_subset;
use crate::tau_engine::TimeVector;

/// Arithmetic used when differencing the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// binary64 throughout.
    #[default]
    Standard,
    /// Jacobi entries and the difference quotient in double-double, so the
    /// residual reflects truncation error rather than rounding.
    ExtendedTest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowResiduals {
    /// Frobenius norm of `(A(t + h e_j) - A(t - h e_j)) / 2h - [B_j, A(t)]`.
    pub lax: f64,
    /// Largest scaled drift `|H_m(t) - H_m(0)|`, `m = 1..=n`.
    pub conservation: f64,
}

/// Phases `theta(kappa_j; t)` in double-double.
pub(crate) fn phases_extended(kappa: &[f64], t: &TimeVector) -> Vec<Dd> {
    kappa
        .iter()
        .map(|&k| {
            let z = Dd::from(k);
            let mut power = Dd::ONE;
            let mut acc = Dd::ZERO;
            for &ti in t.times() {
                power *= z;
                acc += power * Dd::from(ti);
            }
            acc
        })
        .collect()
}

/// Jacobi entries `(a, b)` evaluated in double-double arithmetic.
pub fn jacobi_matrix_extended(data: &SolitonData, t: &TimeVector) -> (Vec<Dd>, Vec<Dd>) {
    let kappa = data.kappa();
    let n = kappa.len();
    let theta = phases_extended(kappa, t);

    // (shift, sum of scaled terms, sum of scaled terms times s_I) per order
    let mut sums: Vec<(Dd, Dd, Dd)> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut terms = Vec::new();
        for_each_subset(n, k, |idx| {
            let mut coef = Dd::ONE;
            let mut phase = Dd::ZERO;
            let mut s = Dd::ZERO;
            for (p, &i) in idx.iter().enumerate() {
                coef *= Dd::from(data.weights()[i]);
                phase += theta[i];
                s += Dd::from(kappa[i]);
                for &r in &idx[..p] {
                    coef *= (Dd::from(kappa[i]) - Dd::from(kappa[r])).sqr();
                }
            }
            terms.push((coef, phase, s));
        });
        let shift = terms
            .iter()
            .map(|t| t.1)
            .fold(Dd::from(f64::NEG_INFINITY), |m, p| if p > m { p } else { m });
        let (mut total, mut first) = (Dd::ZERO, Dd::ZERO);
        for (coef, phase, s) in terms {
            let w = coef * (phase - shift).exp();
            total += w;
            first += w * s;
        }
        sums.push((shift, total, first));
    }

    let a = (1..n)
        .map(|k| {
            let (sp, tp, _) = sums[k - 1];
            let (s, tk, _) = sums[k];
            let (sn, tn, _) = sums[k + 1];
            (sp + sn - s - s).exp() * tp * tn / tk.sqr()
        })
        .collect();
    let b = (1..=n)
        .map(|k| sums[k].2 / sums[k].1 - sums[k - 1].2 / sums[k - 1].1)
        .collect();
    (a, b)
}

type DdMatrix = Vec<Vec<Dd>>;

fn dense_dd(a: &[Dd], b: &[Dd]) -> DdMatrix {
    let n = b.len();
    let mut m = vec![vec![Dd::ZERO; n]; n];
    for i in 0..n {
        m[i][i] = b[i];
        if i + 1 < n {
            m[i][i + 1] = a[i];
            m[i + 1][i] = Dd::ONE;
        }
    }
    m
}

fn matmul_dd(x: &DdMatrix, y: &DdMatrix) -> DdMatrix {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|m| x[i][m] * y[m][j]).sum()).collect())
        .collect()
}

fn entries(data: &SolitonData, t: &TimeVector, precision: Precision) -> (Vec<Dd>, Vec<Dd>) {
    match precision {
        Precision::ExtendedTest => jacobi_matrix_extended(data, t),
        Precision::Standard => {
            let s = jacobi_matrix(data, t);
            (
                s.a_offdiag.into_iter().map(Dd::from).collect(),
                s.b_diag.into_iter().map(Dd::from).collect(),
            )
        }
    }
}

/// `H_m = Tr A^{m+1} / (m+1)` for `m = 1..=count`.
pub fn hamiltonians(a_offdiag: &[f64], b_diag: &[f64], count: usize) -> Vec<f64> {
    let m = dense_dd(
        &a_offdiag.iter().map(|&x| Dd::from(x)).collect::<Vec<_>>(),
        &b_diag.iter().map(|&x| Dd::from(x)).collect::<Vec<_>>(),
    );
    let mut power = m.clone();
    (1..=count)
        .map(|j| {
            power = matmul_dd(&power, &m);
            let trace: Dd = (0..m.len()).map(|i| power[i][i]).sum();
            trace.to_f64() / (j + 1) as f64
        })
        .collect()
}

/// Lax-equation and conservation residuals for the `flow_index`-th flow.
pub fn flow_invariant_residuals(
    data: &SolitonData,
    t: &TimeVector,
    flow_index: usize,
    h: f64,
    precision: Precision,
) -> Result<FlowResiduals> {
    let max = crate::tau_engine::DEFAULT_TIME_CAP;
    if flow_index < 1 || flow_index > max {
        return Err(Error::FlowIndexOutOfRange { index: flow_index, max });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    let n = data.len();
    let plus = t.shifted(flow_index, h);
    let minus = t.shifted(flow_index, -h);
    let step = Dd::from(plus.get(flow_index)) - Dd::from(minus.get(flow_index));

    let (ap, bp) = entries(data, &plus, precision);
    let (am, bm) = entries(data, &minus, precision);
    let (a0, b0) = entries(data, t, precision);
    let m = dense_dd(&a0, &b0);

    let mut power = m.clone();
    for _ in 1..flow_index {
        power = matmul_dd(&power, &m);
    }
    // strictly upper part
    for (i, row) in power.iter_mut().enumerate() {
        for x in row.iter_mut().take(i + 1) {
            *x = Dd::ZERO;
        }
    }
    let left = matmul_dd(&power, &m);
    let right = matmul_dd(&m, &power);

    let mp = dense_dd(&ap, &bp);
    let mm = dense_dd(&am, &bm);
    let mut frob = 0.0;
    for i in 0..n {
        for j in 0..n {
            let fd = (mp[i][j] - mm[i][j]) / step;
            let r = (fd - (left[i][j] - right[i][j])).to_f64();
            frob += r * r;
        }
    }

    let now = jacobi_matrix(data, t);
    let start = jacobi_matrix(data, &TimeVector::zero());
    let h_now = hamiltonians(&now.a_offdiag, &now.b_diag, n);
    let h_start = hamiltonians(&start.a_offdiag, &start.b_diag, n);
    let conservation = (0..n)
        .map(|j| {
            let scale = data
                .kappa()
                .iter()
                .map(|k| k.abs().powi(j as i32 + 2))
                .sum::<f64>()
                .max(1.0)
                / (j + 2) as f64;
            (h_now[j] - h_start[j]).abs() / scale
        })
        .fold(0.0, f64::max);

    Ok(FlowResiduals {
        lax: frob.sqrt(),
        conservation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> SolitonData {
        SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn extended_entries_match_binary64() {
        let d = running();
        let t = TimeVector::new(&[0.3, -0.4, 0.1]).unwrap();
        let (a, b) = jacobi_matrix_extended(&d, &t);
        let s = jacobi_matrix(&d, &t);
        for (x, y) in a.iter().zip(&s.a_offdiag) {
            assert!((x.to_f64() - y).abs() < 1e-14);
        }
        for (x, y) in b.iter().zip(&s.b_diag) {
            assert!((x.to_f64() - y).abs() < 1e-14);
        }
    }

    #[test]
    fn extended_entries_exact_fractions() {
        let (a, _) = jacobi_matrix_extended(&running(), &TimeVector::zero());
        let err = a[1] - Dd::from(32.0) / Dd::from(121.0);
        assert!(err.to_f64().abs() < 1e-30);
    }

    #[test]
    fn hamiltonians_are_power_sums() {
        let s = jacobi_matrix(&running(), &TimeVector::zero());
        let h = hamiltonians(&s.a_offdiag, &s.b_diag, 3);
        // (0 + 1 + 2^(m+1)) / (m + 1)
        for (m, hm) in h.iter().enumerate() {
            let p = m as i32 + 2;
            assert!((hm - (1.0 + 2f64.powi(p)) / p as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn lax_residual_and_richardson() {
        let d = running();
        let t = TimeVector::new(&[0.2]).unwrap();
        let r1 = flow_invariant_residuals(&d, &t, 1, 1e-5, Precision::ExtendedTest).unwrap();
        let r2 = flow_invariant_residuals(&d, &t, 1, 5e-6, Precision::ExtendedTest).unwrap();
        assert!(r1.lax < 1e-6);
        let ratio = r1.lax / r2.lax;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
        assert!(r1.conservation < 1e-12);
    }

    #[test]
    fn higher_flow_residual() {
        let d = running();
        let t = TimeVector::new(&[0.1, 0.2, -0.1]).unwrap();
        for j in 1..=3 {
            let r = flow_invariant_residuals(&d, &t, j, 1e-5, Precision::Standard).unwrap();
            assert!(r.lax < 1e-6, "flow {j}: {}", r.lax);
        }
    }

    #[test]
    fn argument_checks() {
        let d = running();
        let t = TimeVector::zero();
        assert!(flow_invariant_residuals(&d, &t, 0, 1e-5, Precision::Standard).is_err());
        assert!(flow_invariant_residuals(&d, &t, 1, 0.0, Precision::Standard).is_err());
    }
}
