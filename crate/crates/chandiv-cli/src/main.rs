//! Command-line front end for the chandiv library.
//!
//! Exit codes: 0 success, 1 malformed input (JSON syntax or spec shape),
//! 2 validation failure (non-CP input and similar), 3 indeterminate result.
//! All numeric output is printed with 12 significant digits so golden files
//! are stable. Set CHANDIV_LOG=debug for progress notes on stderr.

mod format;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use chandiv::dilation;
use chandiv::divisibility::{self, DivisibilityClass};
use chandiv::error::Error as ChanError;
use chandiv::io as chio;
use chandiv::lbdecomp::{self, Side};
use chandiv::lorentz;
use chandiv::{ChannelRep, Tolerances};

#[derive(Parser)]
#[command(name = "chandiv", version, about = "Divisibility analysis of quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Path to the input channel spec (JSON).
    #[arg(long)]
    input: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the zero-eigenvalue tolerance.
    #[arg(long = "tol-eig")]
    tol_eig: Option<f64>,
    /// Override the time-bisection tolerance.
    #[arg(long = "tol-t")]
    tol_t: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repr {
    Ptm,
    Choi,
    Kraus,
    Superop,
}

impl Repr {
    fn as_str(self) -> &'static str {
        match self {
            Repr::Ptm => "ptm",
            Repr::Choi => "choi",
            Repr::Kraus => "kraus",
            Repr::Superop => "superop",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanSide {
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a channel spec is well formed, CP and trace preserving.
    Validate(CommonArgs),
    /// Convert a channel spec to another representation.
    Convert {
        #[command(flatten)]
        common: CommonArgs,
        /// Target representation.
        #[arg(long)]
        to: Repr,
    },
    /// Divisibility class of a qubit channel.
    Classify(CommonArgs),
    /// Lindblad-boundary decomposition E = e^L E_boundary.
    #[command(name = "decompose-lb")]
    DecomposeLb {
        #[command(flatten)]
        common: CommonArgs,
        /// Generator spec; a purely dissipative generator is chosen
        /// automatically when omitted.
        #[arg(long)]
        generator: Option<PathBuf>,
        /// Scan horizon override.
        #[arg(long = "t-max")]
        t_max: Option<f64>,
    },
    /// Qubit Lorentz normal form.
    #[command(name = "normal-form")]
    NormalForm(CommonArgs),
    /// Factor an infinitesimally divisible qubit channel into Kraus rank <= 2
    /// channels.
    #[command(name = "factor-rank2")]
    FactorRank2(CommonArgs),
    /// Stinespring dilation unitaries for rank <= 2 factors.
    Dilate(CommonArgs),
    /// Simulated process tomography of the dilation circuit.
    #[command(name = "simulate-tomography")]
    SimulateTomography {
        #[command(flatten)]
        common: CommonArgs,
        /// Shots per tomography setting (0 = exact probabilities).
        #[arg(long, default_value_t = 20_000)]
        shots: u64,
        /// Master seed; trial seeds derive from it by fixed offsets.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of independent tomography trials.
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Sample min Choi eigenvalue and determinant of e^(-tL) E over a grid.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        /// Generator spec (required).
        #[arg(long)]
        generator: PathBuf,
        /// Largest sampled time.
        #[arg(long = "t-max", default_value_t = 1.0)]
        t_max: f64,
        /// Number of grid points (endpoints included).
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Compose the inverse semigroup on the left or the right.
        #[arg(long, value_enum, default_value_t = ScanSide::Left)]
        side: ScanSide,
        /// Output format.
        #[arg(long, value_enum, default_value_t = ScanFormat::Csv)]
        format: ScanFormat,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, value) = err.render();
            // machine-readable error object on stdout, human summary on stderr
            print!("{}", format::write_json(&value));
            eprintln!("error: {}", err.message);
            ExitCode::from(code)
        }
    }
}

struct CliError {
    code: u8,
    kind: String,
    message: String,
    extra: Value,
}

impl CliError {
    fn render(&self) -> (u8, Value) {
        let mut obj = json!({ "error": { "kind": self.kind, "message": self.message } });
        if let Value::Object(extra) = &self.extra {
            for (k, v) in extra {
                obj["error"][k] = v.clone();
            }
        }
        (self.code, obj)
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            code: 1,
            kind: "io".into(),
            message: format!("{}: {e}", path.display()),
            extra: Value::Null,
        }
    }

    fn json(path: &Path, e: serde_json::Error) -> Self {
        Self {
            code: 1,
            kind: "json".into(),
            message: format!("{}: {e}", path.display()),
            extra: json!({ "line": e.line(), "column": e.column() }),
        }
    }
}

impl From<ChanError> for CliError {
    fn from(e: ChanError) -> Self {
        let (code, kind) = match &e {
            ChanError::Spec { .. } => (1, "spec"),
            ChanError::Indeterminate { .. } => (3, "indeterminate"),
            ChanError::NotCompletelyPositive { .. } => (2, "not_completely_positive"),
            ChanError::NotTracePreserving { .. } => (2, "not_trace_preserving"),
            ChanError::NotHermitian { .. } => (2, "not_hermitian"),
            ChanError::UnitaryInput => (2, "unitary_input"),
            ChanError::ConstantFamily => (2, "constant_family"),
            ChanError::AlreadyOnBoundary { .. } => (2, "already_on_boundary"),
            ChanError::NoBoundaryCrossing { .. } => (2, "no_boundary_crossing"),
            ChanError::RankTooHigh { .. } => (2, "rank_too_high"),
            ChanError::NotInfinitesimallyDivisible => (2, "not_infinitesimally_divisible"),
            ChanError::NormalFormExtraction { .. } => (2, "normal_form_extraction"),
            _ => (2, "invalid_input"),
        };
        let mut extra = Value::Null;
        if let ChanError::NotCompletelyPositive { min_eig } = &e {
            extra = json!({ "min_choi_eigenvalue": min_eig });
        }
        CliError { code, kind: kind.into(), message: e.to_string(), extra }
    }
}

fn debug_log(msg: &str) {
    if std::env::var("CHANDIV_LOG").map(|v| v == "debug").unwrap_or(false) {
        eprintln!("chandiv: {msg}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(common) => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            let (cp, min_eig) = ch.is_cp(&tol).map_err(CliError::from)?;
            let (tp, residual) = ch.is_tp(&tol);
            if !cp {
                return Err(ChanError::NotCompletelyPositive { min_eig }.into());
            }
            if !tp {
                return Err(ChanError::NotTracePreserving { residual }.into());
            }
            let rank = ch.kraus_rank(&tol).map_err(CliError::from)?;
            emit(
                &common,
                json!({
                    "valid": true,
                    "dim": ch.dim(),
                    "representation": ch.body().representation_name(),
                    "min_choi_eigenvalue": min_eig,
                    "tp_residual": residual,
                    "kraus_rank": rank,
                }),
            )
        }
        Command::Convert { common, to } => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            let v = chio::channel_to_value_as(&ch, to.as_str(), &tol).map_err(CliError::from)?;
            emit(&common, v)
        }
        Command::Classify(common) => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            debug_log("classifying");
            let report = divisibility::classify(&ch, &tol).map_err(CliError::from)?;
            let eta = report
                .witnesses
                .eta
                .as_ref()
                .map(|c| json!(c.ratios.to_vec()))
                .unwrap_or(Value::Null);
            let witness = witness_value(&report, &tol);
            emit(
                &common,
                json!({
                    "class": report.class.as_str(),
                    "kraus_rank": report.kraus_rank,
                    "eta_conditions": eta,
                    "markovian_candidate": report.markovian_candidate,
                    "witness": witness,
                }),
            )
        }
        Command::DecomposeLb { common, generator, t_max } => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            let dec = match generator {
                Some(path) => {
                    let g = load_generator(&path, &tol)?;
                    let horizon = t_max.unwrap_or_else(|| lbdecomp::default_horizon(&ch, &g));
                    lbdecomp::lb_decompose_sided(&ch, &g, Side::Left, horizon, &tol)
                }
                None => lbdecomp::lb_decompose_auto(&ch, &tol),
            }
            .map_err(CliError::from)?;
            emit(
                &common,
                json!({
                    "t_min": dec.t_min,
                    "generator": chio::generator_to_value(&dec.generator),
                    "boundary": chio::channel_to_value_as(&dec.boundary, "ptm", &tol).map_err(CliError::from)?,
                    "recomposition_error": dec.recomposition_error,
                    "min_choi_eig_at_tmin": dec.min_choi_eig_at_tmin,
                    "bracket_hint": dec.bracket_hint,
                }),
            )
        }
        Command::NormalForm(common) => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            match lorentz::normal_form(&ch, &tol) {
                Ok(nf) => {
                    let kind = match nf.kind {
                        lorentz::FormKind::Diagonal => "diagonal",
                        lorentz::FormKind::NonDiagonal => "nondiagonal",
                    };
                    let sigma = nf.diagonal_entries.map(|s| json!(s.to_vec())).unwrap_or(Value::Null);
                    let params = nf
                        .params
                        .map(|p| json!({ "v": p.v, "x": p.x, "z": p.z }))
                        .unwrap_or(Value::Null);
                    emit(
                        &common,
                        json!({
                            "kind": kind,
                            "sigma": sigma,
                            "params": params,
                            "reconstruction_error": nf.reconstruction_error,
                        }),
                    )
                }
                Err(ChanError::Indeterminate { details }) => {
                    emit(
                        &common,
                        json!({
                            "kind": "indeterminate",
                            "sigma": Value::Null,
                            "params": Value::Null,
                            "reconstruction_error": Value::Null,
                            "details": details,
                        }),
                    )?;
                    Err(CliError {
                        code: 3,
                        kind: "indeterminate".into(),
                        message: "normal form is indeterminate".into(),
                        extra: Value::Null,
                    })
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::FactorRank2(common) => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            let factors = divisibility::factor_rank2(&ch, &tol).map_err(CliError::from)?;
            let mut prod = ChannelRep::identity(ch.dim());
            for f in &factors {
                prod = prod.compose(f).map_err(CliError::from)?;
            }
            let err = (prod.to_ptm() - ch.to_ptm()).norm();
            let list: Vec<Value> = factors.iter().map(chio::channel_to_value).collect();
            emit(&common, json!({ "factors": list, "recomposition_error": err }))
        }
        Command::Dilate(common) => {
            let tol = tolerances(&common);
            let factors = load_factors(&common.input)?;
            let circuit = dilation::build_circuit(&factors, &tol).map_err(CliError::from)?;
            let stages: Vec<Value> = circuit
                .stages
                .iter()
                .map(|s| {
                    json!({
                        "unitary": chio::complex_matrix_value(&s.unitary),
                        "reset_ancilla_after": s.reset_ancilla_after,
                    })
                })
                .collect();
            emit(&common, json!({ "stages": stages }))
        }
        Command::SimulateTomography { common, shots, seed, trials } => {
            let tol = tolerances(&common);
            let factors = load_factors(&common.input)?;
            let circuit = dilation::build_circuit(&factors, &tol).map_err(CliError::from)?;
            debug_log(&format!("running {trials} tomography trials at {shots} shots"));
            let results = dilation::tomography_trials(&circuit, shots, seed, trials).map_err(CliError::from)?;
            let mut fidelities: Vec<f64> = results.iter().filter_map(|r| r.fidelity_vs_exact).collect();
            fidelities.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = fidelities.len().max(1);
            let mean = fidelities.iter().sum::<f64>() / n as f64;
            let median = if fidelities.is_empty() {
                f64::NAN
            } else if fidelities.len() % 2 == 1 {
                fidelities[fidelities.len() / 2]
            } else {
                0.5 * (fidelities[fidelities.len() / 2 - 1] + fidelities[fidelities.len() / 2])
            };
            emit(
                &common,
                json!({
                    "shots": shots,
                    "seed": seed,
                    "trials": trials,
                    "fidelities": fidelities,
                    "min": fidelities.first().cloned().unwrap_or(f64::NAN),
                    "median": median,
                    "mean": mean,
                    "max": fidelities.last().cloned().unwrap_or(f64::NAN),
                }),
            )
        }
        Command::Scan { common, generator, t_max, steps, side, format: fmt } => {
            let tol = tolerances(&common);
            let ch = load_channel(&common.input)?;
            let g = load_generator(&generator, &tol)?;
            let side = match side {
                ScanSide::Left => Side::Left,
                ScanSide::Right => Side::Right,
            };
            let samples = lbdecomp::crossing_scan_sided(&ch, &g, side, t_max, steps).map_err(CliError::from)?;
            match fmt {
                ScanFormat::Csv => {
                    let mut out = String::from("t,min_choi_eig,det,is_cp\n");
                    for s in &samples {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            format::format_float(s.t),
                            format::format_float(s.min_choi_eig),
                            format::format_float(s.det),
                            s.min_choi_eig >= -tol.eig_zero,
                        ));
                    }
                    emit_text(&common, out)
                }
                ScanFormat::Json => {
                    let rows: Vec<Value> = samples
                        .iter()
                        .map(|s| {
                            json!({
                                "t": s.t,
                                "min_choi_eig": s.min_choi_eig,
                                "det": s.det,
                                "is_cp": s.min_choi_eig >= -tol.eig_zero,
                            })
                        })
                        .collect();
                    emit(&common, json!({ "samples": rows }))
                }
            }
        }
    }
}

fn witness_value(report: &divisibility::DivisibilityReport, tol: &Tolerances) -> Value {
    match report.class {
        DivisibilityClass::DivisibleNonInfinitesimal => report
            .witnesses
            .lb
            .as_ref()
            .map(|lb| {
                json!({
                    "type": "lb_decomposition",
                    "t_min": lb.t_min,
                    "boundary": chio::channel_to_value_as(&lb.boundary, "ptm", tol).unwrap_or(Value::Null),
                    "recomposition_error": lb.recomposition_error,
                })
            })
            .unwrap_or(Value::Null),
        DivisibilityClass::InfinitesimallyDivisible => report
            .witnesses
            .rank2_factors
            .as_ref()
            .map(|fs| {
                json!({
                    "type": "rank2_factors",
                    "factors": fs.iter().map(chio::channel_to_value).collect::<Vec<_>>(),
                })
            })
            .unwrap_or(Value::Null),
        _ => Value::Null,
    }
}

fn tolerances(common: &CommonArgs) -> Tolerances {
    let mut tol = Tolerances::default();
    if let Some(e) = common.tol_eig {
        tol.eig_zero = e;
    }
    if let Some(t) = common.tol_t {
        tol.t_tol = t;
    }
    tol
}

fn load_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::json(path, e))
}

fn load_channel(path: &Path) -> Result<ChannelRep, CliError> {
    let v = load_value(path)?;
    chio::channel_from_value(&v).map_err(CliError::from)
}

fn load_generator(path: &Path, tol: &Tolerances) -> Result<chandiv::lindblad::LindbladGenerator, CliError> {
    let v = load_value(path)?;
    chio::generator_from_value(&v, tol).map_err(CliError::from)
}

/// Accepts either a single channel spec or {"factors": [spec, ...]}.
fn load_factors(path: &Path) -> Result<Vec<ChannelRep>, CliError> {
    let v = load_value(path)?;
    if let Some(list) = v.get("factors").and_then(Value::as_array) {
        let mut out = Vec::with_capacity(list.len());
        for item in list {
            out.push(chio::channel_from_value(item).map_err(CliError::from)?);
        }
        Ok(out)
    } else {
        Ok(vec![chio::channel_from_value(&v).map_err(CliError::from)?])
    }
}

fn emit(common: &CommonArgs, value: Value) -> Result<(), CliError> {
    emit_text(common, format::write_json(&value))
}

fn emit_text(common: &CommonArgs, text: String) -> Result<(), CliError> {
    match &common.output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
