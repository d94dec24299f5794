use std::time::Instant;

use kptoda_core::{SolitonData, TimeVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::checks::{check_instance, worked_instance_table, Residuals, CHECKS};
use crate::config::CommandConfig;

/// Smallest gap between drawn phases.
const PHASE_GAP: f64 = 0.02;
const TIMES_PER_INSTANCE: usize = 5;
const FLOWS_SAMPLED: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub trials: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub precision: &'static str,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub trials: usize,
    pub n_max: usize,
    pub checks: Vec<CheckRecord>,
    pub worked_instance: Vec<crate::checks::WorkedValue>,
    pub pass: bool,
    pub environment: Environment,
    pub runtime_seconds: f64,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// One random instance: `n` uniform in `[2, n_max]`, sorted phases uniform in
/// `[-1.5, 1.5]` with gaps of at least [`PHASE_GAP`], weights uniform in
/// `[0.05, 1]`, and times with `|t_j| <= 1`.
pub fn draw_instance(rng: &mut impl Rng, n_max: usize) -> (SolitonData, Vec<TimeVector>) {
    let n = rng.random_range(2..=n_max.max(2));
    let data = draw_data(rng, n);
    let times = draw_times(rng);
    (data, times)
}

pub fn draw_data(rng: &mut impl Rng, n: usize) -> SolitonData {
    loop {
        let mut kappa: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        kappa.sort_by(f64::total_cmp);
        if kappa.windows(2).any(|w| w[1] - w[0] < PHASE_GAP) {
            continue;
        }
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        return SolitonData::new(&kappa, &weights).expect("drawn data satisfies the preconditions");
    }
}

pub fn draw_times(rng: &mut impl Rng) -> Vec<TimeVector> {
    (0..TIMES_PER_INSTANCE)
        .map(|_| {
            let t: Vec<f64> = (0..FLOWS_SAMPLED).map(|_| rng.random_range(-1.0..=1.0)).collect();
            TimeVector::new(&t).expect("bounded times")
        })
        .collect()
}

/// Per-trial seeds drawn sequentially from the master seed.
pub fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| master.random()).collect()
}

pub fn verify_suite(config: &CommandConfig) -> VerificationReport {
    let start = Instant::now();
    let trials = config.trials.max(1);
    let precision = config.precision.into();
    let fixed = config.data.clone();
    let n_max = config.n_max;

    let residuals = trial_seeds(config.seed, trials)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let (data, times) = match &fixed {
                Some(d) => (d.clone(), draw_times(&mut rng)),
                None => draw_instance(&mut rng, n_max),
            };
            check_instance(&data, &times, &mut rng, precision)
        })
        .reduce(Residuals::default, |mut a, b| {
            a.merge(&b);
            a
        });

    let worked = worked_instance_table().unwrap_or_default();
    let worked_max = if worked.is_empty() {
        f64::INFINITY
    } else {
        worked
            .iter()
            .map(|w| w.relative_error)
            .fold(0.0, |m: f64, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
    };
    let worked_tolerance = 1e-12;
    let mut checks = vec![CheckRecord {
        name: "worked_instance".into(),
        trials: 1,
        max_residual: worked_max,
        tolerance: worked_tolerance,
        pass: worked_max <= worked_tolerance,
    }];
    for &(name, class) in CHECKS {
        let max_residual = residuals.get(name).unwrap_or(f64::INFINITY);
        let tolerance = config.tolerances.for_class(class);
        checks.push(CheckRecord {
            name: name.into(),
            trials,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    VerificationReport {
        seed: config.seed,
        trials,
        n_max,
        checks,
        worked_instance: worked,
        pass,
        environment: Environment {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            precision: config.precision.name(),
            threads: rayon::current_num_threads(),
        },
        runtime_seconds: start.elapsed().as_secs_f64(),
    }
}
