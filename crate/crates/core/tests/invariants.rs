mod common;

use common::{close, data_strategy, time_strategy};
use kptoda_core::darboux_dressing::{
    darboux_operator, dressed_vacuum_minus, dual_kernel_residual, gluing_residual, ladder_coefficients, wavefunction,
    CurvePoint, Sheet, WaveOptions,
};
use kptoda_core::divisor_lab::{
    compatible_divisor, default_step, divisor_identity_residuals, invert_divisor, toda_from_divisor_flow,
    vacuum_divisor, Divisor,
};
use kptoda_core::duality::{const_ratios, dual_data, dual_divisor, dual_pair, duality_residuals};
use kptoda_core::soliton_data::{alpha_coordinates, from_alpha};
use kptoda_core::toda_core::{ba_vectors, bruhat_flow, minor_polynomials, spectral_residues};
use kptoda_core::{jacobi_matrix, SolitonData, TimeVector};
use proptest::prelude::*;

/// A `k`-compatible divisor with one point per finite oval, the plus-sheet
/// points placed on the ovals selected by `on_plus`.
fn divisor_strategy() -> impl Strategy<Value = (Vec<f64>, Divisor)> {
    (3usize..=7).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.1f64..1.0, n - 1),
            proptest::collection::vec(0.05f64..0.95, n - 1),
            proptest::sample::subsequence((0..n - 1).collect::<Vec<_>>(), 1..n),
        )
            .prop_map(move |(gaps, fractions, on_plus)| {
                let mut kappa = vec![0.0];
                for g in &gaps {
                    let last = *kappa.last().unwrap();
                    kappa.push(last + g);
                }
                let (mut gammas, mut deltas) = (Vec::new(), Vec::new());
                for r in 0..n - 1 {
                    let p = kappa[r] + fractions[r] * (kappa[r + 1] - kappa[r]);
                    if on_plus.contains(&r) {
                        gammas.push(p);
                    } else {
                        deltas.push(p);
                    }
                }
                let k = gammas.len();
                let d = Divisor::from_points(&kappa, k, &gammas, &deltas, TimeVector::zero()).unwrap();
                (kappa, d)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalization_is_idempotent(d in data_strategy(2, 8)) {
        let again = SolitonData::new(d.kappa(), d.weights()).unwrap();
        prop_assert_eq!(again, d);
    }

    #[test]
    fn alpha_round_trip(d in data_strategy(2, 8)) {
        let back = from_alpha(d.kappa(), &alpha_coordinates(&d)).unwrap();
        for (x, y) in back.weights().iter().zip(d.weights()) {
            prop_assert!(close(*x, *y, 1e-12));
        }
    }

    #[test]
    fn duality_is_an_involution(d in data_strategy(2, 8)) {
        let twice = dual_data(&dual_data(&d));
        for (x, y) in twice.weights().iter().zip(d.weights()) {
            prop_assert!(close(*x, *y, 1e-12));
        }
        let alpha = alpha_coordinates(&d);
        let alpha_hat = alpha_coordinates(&dual_data(&d));
        let products: Vec<f64> = alpha.values().iter().zip(alpha_hat.values()).map(|(x, y)| x * y).collect();
        for p in &products {
            prop_assert!(close(*p, products[0], 1e-12));
        }
    }

    #[test]
    fn isospectral_and_positive(d in data_strategy(2, 8), t in time_strategy(4, 1.0)) {
        let s = jacobi_matrix(&d, &t);
        prop_assert!(s.a_offdiag.iter().all(|&a| a > 0.0));
        for (x, k) in s.eigenvalues().iter().zip(d.kappa()) {
            prop_assert!((x - k).abs() < 1e-9);
        }
        let polys = minor_polynomials(&s);
        prop_assert!(polys.expansion_residual < 1e-9);
    }

    #[test]
    fn residues_recover_weights(d in data_strategy(2, 8)) {
        let s = jacobi_matrix(&d, &TimeVector::zero());
        let r = spectral_residues(&s, d.kappa()).unwrap();
        for (x, y) in r.a.iter().zip(d.weights()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let total: f64 = r.a_hat.iter().sum();
        for (x, y) in r.a_hat.iter().zip(dual_data(&d).weights()) {
            prop_assert!((x / total - y).abs() < 1e-9);
        }
    }

    #[test]
    fn bruhat_route_agrees(d in data_strategy(2, 6), t in time_strategy(3, 0.5)) {
        let s0 = jacobi_matrix(&d, &TimeVector::zero());
        let evolved = bruhat_flow(&s0, &t).unwrap();
        let direct = jacobi_matrix(&d, &t);
        for (x, y) in evolved.a_offdiag.iter().zip(&direct.a_offdiag).chain(evolved.b_diag.iter().zip(&direct.b_diag)) {
            prop_assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn interlacing_and_occupancy(d in data_strategy(2, 8), t in time_strategy(3, 1.0)) {
        let b = vacuum_divisor(&d, &t);
        for (r, br) in b.iter().enumerate() {
            prop_assert!(d.kappa()[r] < *br && *br < d.kappa()[r + 1]);
        }
        for k in 1..d.len() {
            let div = compatible_divisor(&d, k, &t).unwrap();
            prop_assert!(div.ovals.after.iter().all(|&c| c == 1));
            prop_assert_eq!(div.deltas.len(), d.len() - k - 1);
        }
    }

    #[test]
    fn data_round_trip(d in data_strategy(2, 7)) {
        for k in 1..d.len() {
            let div = compatible_divisor(&d, k, &TimeVector::zero()).unwrap();
            prop_assume!(div.generic);
            let back = invert_divisor(d.kappa(), &div).unwrap();
            for (x, y) in back.weights().iter().zip(d.weights()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn divisor_round_trip((kappa, div) in divisor_strategy()) {
        let data = invert_divisor(&kappa, &div).unwrap();
        let again = compatible_divisor(&data, div.k, &TimeVector::zero()).unwrap();
        prop_assert!(again.distance(&div) < 1e-9, "{:?} vs {:?}", again, div);
    }

    #[test]
    fn divisor_zeros_are_ba_zeros(d in data_strategy(2, 6)) {
        let zero = TimeVector::zero();
        for k in 1..d.len() {
            let div = compatible_divisor(&d, k, &zero).unwrap();
            for &g in &div.gammas {
                let v = ba_vectors(&d, g, &zero);
                let scale = v.psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                prop_assert!(v.psi[k].abs() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn identities_hold(d in data_strategy(2, 7), t in time_strategy(3, 1.0)) {
        for k in 1..d.len() {
            let r = divisor_identity_residuals(&d, k, &t).unwrap();
            prop_assert!(r.max() < 1e-9, "k={} {:?}", k, r);
        }
    }

    #[test]
    fn gluing_and_kernels(d in data_strategy(2, 7), t in time_strategy(3, 1.0)) {
        for k in 0..d.len() {
            prop_assert!(gluing_residual(&d, k, &t).unwrap() < 1e-8);
        }
        for k in 1..d.len() {
            prop_assert!(darboux_operator(&d, k, &t).unwrap().kernel_residual < 1e-9);
            prop_assert!(dual_kernel_residual(&d, k, &t).unwrap() < 1e-9);
        }
    }

    #[test]
    fn ladder_agrees_with_minors(d in data_strategy(2, 6), t in time_strategy(3, 1.0)) {
        for k in 1..d.len() {
            let ladder = ladder_coefficients(&d, k, &t).unwrap();
            let op = darboux_operator(&d, k, &t).unwrap();
            for (x, y) in ladder.iter().zip(&op.w) {
                prop_assert!((x - y).abs() < 1e-7 * (1.0 + y.abs()), "k={} {} vs {}", k, x, y);
            }
        }
    }

    #[test]
    fn top_order_is_constant_on_minus_sheet(d in data_strategy(2, 7), t in time_strategy(3, 1.0)) {
        let k = d.len() - 1;
        let probes: Vec<f64> = (0..10).map(|i| d.kappa()[0] - 1.0 + 0.37 * i as f64).collect();
        let values: Vec<f64> = probes
            .iter()
            .filter_map(|&z| {
                wavefunction(&d, k, CurvePoint::finite(Sheet::Minus, z), &t, WaveOptions { normalized: true, probe: true })
                    .ok()
                    .filter(|v| !v.is_pole())
                    .map(|v| v.value())
            })
            .collect();
        for v in &values {
            prop_assert!(close(*v, values[0], 1e-9));
        }
        // dressing the vacuum term by term: the degree n-1 numerator collapses
        // to the same constant
        let zero = TimeVector::zero();
        for &z in &probes {
            if d.kappa().iter().any(|&p| (z - p).abs() < 1e-3) {
                continue;
            }
            let (log_t, sign_t) = dressed_vacuum_minus(&d, k, z, &t).unwrap();
            let (log_0, sign_0) = dressed_vacuum_minus(&d, k, z, &zero).unwrap();
            let dressed = f64::from(sign_t * sign_0) * (log_t - log_0).exp();
            prop_assert!(close(dressed, values[0], 1e-9), "zeta={} {} vs {}", z, dressed, values[0]);
        }
    }

    #[test]
    fn divisor_flow_matches(d in data_strategy(2, 6), t in time_strategy(3, 1.0)) {
        let flow = toda_from_divisor_flow(&d, None, &t, default_step(&t)).unwrap();
        let direct = jacobi_matrix(&d, &t);
        for (x, y) in flow.state.a_offdiag.iter().zip(&direct.a_offdiag).chain(flow.state.b_diag.iter().zip(&direct.b_diag)) {
            prop_assert!((x - y).abs() < 1e-6 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn duality_checks(d in data_strategy(2, 6), t in time_strategy(3, 1.0)) {
        let grid = [(0.4, -0.3, 0.2), (-0.8, 0.9, -0.5), (0.0, 0.0, 1.0)];
        for k in 1..d.len() {
            let r = duality_residuals(&d, k, &t, &grid).unwrap();
            prop_assert!(r.max() < 1e-9, "k={} {:?}", k, r);
            prop_assert!(dual_divisor(&d, k, &t).is_ok());
            let pair = dual_pair(&d, k).unwrap();
            prop_assert!(pair.product_law_spread < 1e-9);
            let a_k = jacobi_matrix(&d, &TimeVector::zero()).a_offdiag[k - 1];
            for r in const_ratios(&d, k).unwrap().into_iter().flatten() {
                prop_assert!(close(r, a_k, 1e-9));
            }
        }
    }
}
