//! Batch driver for `kptoda-core`: subcommands emitting JSON or CSV, and the
//! seeded verification suite.
//!
//! Exit codes: 0 success, 1 domain error, 2 verification failure, 3 usage
//! error.

pub mod checks;
pub mod config;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use kptoda_core::darboux_dressing::{wavefunction, CurvePoint, Sheet, WaveOptions};
use kptoda_core::divisor_lab::{compatible_divisor, default_step, invert_divisor, toda_from_divisor_flow, Divisor};
use kptoda_core::duality::{dual_divisor, dual_pair, printed_product_law_spread};
use kptoda_core::soliton_data::alpha_coordinates;
use kptoda_core::tau_engine::kp_field;
use kptoda_core::toda_core::{ba_vectors, bruhat_flow};
use kptoda_core::{jacobi_matrix, SolitonData, TimeVector, TodaState};
use serde_json::{json, Value};

use config::{resolve, Cli, Command, CommandConfig, TodaRoute};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] kptoda_core::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Usage(_) | CliError::Io(_) => 3,
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kptoda: {e}");
            e.exit_code()
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn emit_json(value: &Value, output: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    emit(&text, output)
}

fn data_json(data: &SolitonData) -> Value {
    json!({ "kappa": data.kappa(), "a": data.weights() })
}

fn divisor_json(d: &Divisor) -> Value {
    json!({
        "k": d.k,
        "t": d.t.times(),
        "gamma": d.gammas,
        "delta": d.deltas,
        "ovals": d.oval_of,
        "generic": d.generic,
        "collisions": d.collisions.iter().map(|c| json!({
            "kappa_index": c.kappa_index + 1,
            "gamma_index": c.gamma_index + 1,
            "delta_index": c.delta_index + 1,
        })).collect::<Vec<_>>(),
        "occupancy": { "before": d.ovals.before, "after": d.ovals.after },
    })
}

fn toda_json(s: &TodaState) -> Value {
    json!({ "t": s.t.times(), "a": s.a_offdiag, "b": s.b_diag, "eigenvalues": s.eigenvalues() })
}

/// Lower-level entry point used by [`run_command`] and the tests.
pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate(args) => {
            let config = resolve("validate", &args, None)?;
            let data = config.require_data()?;
            let minors: Vec<f64> = (1..data.len())
                .map(|k| data.min_maximal_minor(k))
                .collect::<Result<_, _>>()?;
            emit_json(
                &json!({
                    "valid": true,
                    "n": data.len(),
                    "data": data_json(data),
                    "alpha": alpha_coordinates(data).values(),
                    "min_maximal_minor": minors,
                }),
                args.output.as_deref(),
            )
        }
        Command::Divisor(args) => {
            let config = resolve("divisor", &args, None)?;
            let d = compatible_divisor(config.require_data()?, config.require_k()?, &config.t)?;
            emit_json(&divisor_json(&d), args.output.as_deref())
        }
        Command::Toda { data, route } => {
            let config = resolve("toda", &data, None)?;
            let soliton = config.require_data()?;
            let (state, anchor) = match route {
                TodaRoute::Tau => (jacobi_matrix(soliton, &config.t), None),
                TodaRoute::Bruhat => {
                    let s0 = jacobi_matrix(soliton, &TimeVector::zero());
                    (bruhat_flow(&s0, &config.t)?, None)
                }
                TodaRoute::Divisor => {
                    let flow = toda_from_divisor_flow(soliton, None, &config.t, default_step(&config.t))?;
                    (flow.state, Some(flow.anchor))
                }
            };
            let mut value = toda_json(&state);
            value["route"] = json!(format!("{route:?}").to_lowercase());
            if let Some(j) = anchor {
                value["anchor"] = json!(j);
            }
            emit_json(&value, data.output.as_deref())
        }
        Command::Field { data, grid } => {
            let config = resolve("field", &data, grid.as_deref())?;
            let soliton = config.require_data()?;
            let k = config.require_k()?;
            let spec = config
                .grid
                .ok_or_else(|| CliError::Usage("--grid is required".into()))?;
            let points = spec.points();
            let values = kp_field(soliton, k, &points)?;
            let mut csv = String::from("x,y,t,u\n");
            for ((x, y, t), u) in points.iter().zip(values) {
                csv.push_str(&format!("{x:.16e},{y:.16e},{t:.16e},{u:.16e}\n"));
            }
            emit(&csv, data.output.as_deref())
        }
        Command::Dual(args) => {
            let config = resolve("dual", &args, None)?;
            let data = config.require_data()?;
            let k = config.require_k()?;
            let pair = dual_pair(data, k)?;
            let divisor = dual_divisor(data, k, &config.t)?;
            emit_json(
                &json!({
                    "k": k,
                    "dual_k": data.len() - k,
                    "primal": data_json(&pair.primal),
                    "dual": data_json(&pair.dual),
                    "log_scale_constant": pair.log_scale_constant,
                    "residue_mismatch": pair.residue_mismatch,
                    "product_law_spread": pair.product_law_spread,
                    "printed_product_law_spread": printed_product_law_spread(data),
                    "dual_divisor": divisor_json(&divisor),
                }),
                args.output.as_deref(),
            )
        }
        Command::Invert {
            kappa,
            k,
            gamma,
            delta,
            output,
        } => {
            let d = Divisor::from_points(&kappa, k, &gamma, &delta, TimeVector::zero())?;
            let data = invert_divisor(&kappa, &d)?;
            emit_json(
                &json!({ "k": k, "generic": d.generic, "data": data_json(&data) }),
                output.as_deref(),
            )
        }
        Command::Ba { data, zeta } => {
            let config = resolve("ba", &data, None)?;
            let soliton = config.require_data()?;
            let k = config.k.unwrap_or(0);
            let pair = ba_vectors(soliton, zeta, &config.t);
            let value_on = |sheet| match wavefunction(
                soliton,
                k,
                CurvePoint::finite(sheet, zeta),
                &config.t,
                WaveOptions::default(),
            ) {
                Ok(v) => json!({ "log_magnitude": v.log_magnitude, "sign": v.sign }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            emit_json(
                &json!({
                    "zeta": zeta,
                    "t": config.t.times(),
                    "psi": pair.psi,
                    "psi_sigma": pair.psi_sigma,
                    "wavefunction": { "k": k, "plus": value_on(Sheet::Plus), "minus": value_on(Sheet::Minus) },
                }),
                data.output.as_deref(),
            )
        }
        Command::Verify(args) => {
            let mut config: CommandConfig = resolve("verify", &args.data, None)?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            if args.trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            if args.n_max < 2 || args.n_max > kptoda_core::soliton_data::MAX_PHASES {
                return Err(CliError::Usage("--n-max must lie in [2, 20]".into()));
            }
            config.trials = args.trials;
            config.n_max = args.n_max;
            if let Some(v) = args.tol_identity {
                config.tolerances.identity = v;
            }
            if let Some(v) = args.tol_fd {
                config.tolerances.finite_difference = v;
            }
            if let Some(v) = args.tol_gluing {
                config.tolerances.gluing = v;
            }
            let report = verify::verify_suite(&config);
            emit_json(
                &serde_json::to_value(&report).expect("report serializes"),
                args.data.output.as_deref(),
            )?;
            if report.pass {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                Err(CliError::Verification(failed.join(", ")))
            }
        }
    }
}
