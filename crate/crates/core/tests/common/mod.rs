#![allow(dead_code)]

use kptoda_core::{SolitonData, TimeVector};
use proptest::prelude::*;

/// Phases in `[-2, 2]` with gaps of at least 0.05 and weights in `[0.05, 1]`.
pub fn data_strategy(n_min: usize, n_max: usize) -> impl Strategy<Value = SolitonData> {
    (n_min..=n_max).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.05f64..1.0, n),
            proptest::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(|(gaps, weights)| {
                let total: f64 = gaps.iter().sum();
                let mut kappa = Vec::with_capacity(gaps.len());
                let mut x = -2.0;
                for g in &gaps {
                    kappa.push(x);
                    x += 4.0 * g / total;
                }
                SolitonData::new(&kappa, &weights).unwrap()
            })
    })
}

pub fn time_strategy(len: usize, bound: f64) -> impl Strategy<Value = TimeVector> {
    proptest::collection::vec(-bound..bound, len).prop_map(|t| TimeVector::new(&t).unwrap())
}

pub fn running() -> SolitonData {
    SolitonData::new(&[0.0, 1.0, 2.0], &[2.0, 1.0, 1.0]).unwrap()
}

pub fn close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * x.abs().max(y.abs()).max(1e-300)
}
