//! Command-line front end: run protocols, audit traces, inspect states.
//!
//! Exit codes: 0 success, 2 configuration error, 3 capacity or locality
//! violation, 4 an applicable bound-audit inequality failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qnetcode::boundcheck::{audit_chain, fidelity_thresholds, verify_bound_on_protocol};
use qnetcode::entropy::{conditional_mutual_information, group_entropy, mutual_information};
use qnetcode::error::Error;
use qnetcode::io;
use qnetcode::net::{ExecutionTrace, RunMode};
use qnetcode::protocols::{
    self, baseline_haar_average, InputSpec, ProtocolResult, PROTOCOL_NAMES,
};
use qnetcode::state::PureState;

#[derive(Parser)]
#[command(name = "qnetcode", version, about = "Butterfly-network quantum coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sample,
    Enumerate,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed; every random choice derives from it.
    #[arg(long, env = "QNET_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol and report per-branch fidelities.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// One of: classical-xor, entangled, entangled-joint, baseline.
        #[arg(long)]
        protocol: String,
        /// Side-1 input: zero|one|plus|haar:SEED or a state-file path.
        #[arg(long, default_value = "zero")]
        psi1: String,
        /// Side-2 input, same forms as --psi1.
        #[arg(long, default_value = "zero")]
        psi2: String,
        /// Joint input for entangled-joint: bell-ref|bell-senders or a
        /// state-file path with registers A1, A2 (+ references).
        #[arg(long)]
        phi: Option<String>,
        /// Classical input bits for classical-xor.
        #[arg(long)]
        x1: Option<u8>,
        #[arg(long)]
        x2: Option<u8>,
        #[arg(long, value_enum, default_value_t = Mode::Enumerate)]
        mode: Mode,
        /// In sample mode, number of sampled runs to aggregate.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Also write the execution trace as JSON to this path.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Audit the impossibility chain on a protocol or a stored trace.
    Boundcheck {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, conflicts_with = "trace")]
        protocol: Option<String>,
        /// Audit a trace file produced by `simulate --trace-out`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Print only the two fidelity thresholds.
        #[arg(long, default_value_t = false)]
        thresholds_only: bool,
        /// Trials for the Monte Carlo average-fidelity estimate.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Entropic quantities of a state file.
    Info {
        #[command(flatten)]
        common: CommonOpts,
        /// Path to a state JSON file.
        state: PathBuf,
        /// Register groups: "A;B" or "A;B|C", registers comma-separated.
        #[arg(long)]
        groups: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Capacity { .. } | Error::Locality { .. } => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn emit(common: &CommonOpts, text: String) -> qnetcode::Result<()> {
    match &common.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_qubit_input(spec: &str, name: &str) -> qnetcode::Result<PureState> {
    if let Ok(preset) = InputSpec::parse(spec) {
        return Ok(preset.realize(name));
    }
    // Not a preset: treat as a state-file path.
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Parse(format!("`{spec}` is neither a preset nor a readable file: {e}")))?;
    let rho = io::parse_state_json(&text)?;
    if rho.dim() != 2 {
        return Err(Error::Parse(format!("input state `{spec}` must be a single qubit")));
    }
    io::pure_state_from_file(&rho)
}

fn parse_joint_input(spec: &str) -> qnetcode::Result<PureState> {
    match spec {
        "bell-ref" => Ok(PureState::phi_plus("R", "A1")?.tensor(&PureState::ket_zero("A2"))?),
        "bell-senders" => PureState::phi_plus("A1", "A2"),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Parse(format!("`{path}` is neither a joint preset nor a readable file: {e}"))
            })?;
            io::pure_state_from_file(&io::parse_state_json(&text)?)
        }
    }
}

fn result_table(result: &ProtocolResult, trace: &ExecutionTrace) -> String {
    let mut out = String::new();
    out.push_str(&format!("protocol: {}\n", result.protocol));
    if let Some((b1, b2)) = result.classical_outputs {
        out.push_str(&format!("outputs: b1={} b2={}\n", u8::from(b1), u8::from(b2)));
    }
    out.push_str(&format!(
        "{:<28} {:>12} {:>12} {:>12}\n",
        "branch", "probability", "fidelity_1", "fidelity_2"
    ));
    for b in &result.branches {
        out.push_str(&format!(
            "{:<28} {:>12.6} {:>12.6} {:>12.6}\n",
            if b.label.is_empty() { "-" } else { &b.label },
            b.probability,
            b.fidelity_1,
            b.fidelity_2
        ));
    }
    out.push_str(&format!(
        "fidelity_1 = {:.6}  fidelity_2 = {:.6}  average = {:.6}  min branch = {:.6}\n",
        result.fidelity_1, result.fidelity_2, result.average, result.min_branch_fidelity
    ));
    out.push_str(&format!("resources: prior entanglement {} ebit(s)", trace.prior_ebits));
    for (ch, u) in &trace.channel_uses {
        out.push_str(&format!("; {ch}:"));
        if u.qubits > 0 {
            out.push_str(&format!(" {} qubit", u.qubits));
        }
        if u.cbits > 0 {
            out.push_str(&format!(" {} cbit(s)", u.cbits));
        }
    }
    out.push('\n');
    out
}

#[allow(clippy::too_many_arguments)] // mirrors the clap surface
fn run_simulate(
    common: &CommonOpts,
    protocol: &str,
    psi1: &str,
    psi2: &str,
    phi: Option<&str>,
    x1: Option<u8>,
    x2: Option<u8>,
    mode: Mode,
    trials: usize,
    trace_out: Option<&PathBuf>,
) -> qnetcode::Result<ExitCode> {
    if !PROTOCOL_NAMES.contains(&protocol) {
        return Err(Error::Parse(format!(
            "unknown protocol `{protocol}` (expected one of {})",
            PROTOCOL_NAMES.join(", ")
        )));
    }
    let run_mode = match mode {
        Mode::Enumerate => RunMode::EnumerateBranches,
        Mode::Sample => RunMode::Sample { seed: common.seed },
    };

    let (result, trace) = match protocol {
        "classical-xor" => {
            let bit = |v: Option<u8>, name: &str| -> qnetcode::Result<bool> {
                match v {
                    Some(0) => Ok(false),
                    Some(1) => Ok(true),
                    _ => Err(Error::Parse(format!("--{name} must be 0 or 1"))),
                }
            };
            protocols::classical_xor_result(bit(x1, "x1")?, bit(x2, "x2")?)?
        }
        "entangled" => {
            let a = parse_qubit_input(psi1, "in1")?;
            let b = parse_qubit_input(psi2, "in2")?;
            run_aggregated(run_mode, trials, common.seed, |m| {
                protocols::entangled_protocol(&a, &b, m)
            })?
        }
        "entangled-joint" => {
            let spec = phi.ok_or_else(|| {
                Error::Parse("entangled-joint needs --phi (bell-ref|bell-senders|file)".into())
            })?;
            let joint = parse_joint_input(spec)?;
            run_aggregated(run_mode, trials, common.seed, |m| {
                protocols::entangled_protocol_joint(&joint, m)
            })?
        }
        "baseline" => {
            let a = parse_qubit_input(psi1, "in1")?;
            let b = parse_qubit_input(psi2, "in2")?;
            let seed = common.seed;
            run_aggregated(run_mode, trials, seed, |m| {
                protocols::baseline_route_and_estimate(&a, &b, seed, m)
            })?
        }
        _ => unreachable!("validated above"),
    };

    if let Some(path) = trace_out {
        std::fs::write(path, io::trace_to_json(&trace, false))
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
    }

    let text = match common.format {
        Format::Table => result_table(&result, &trace),
        Format::Json => {
            serde_json::to_string_pretty(&result).expect("plain data serializes") + "\n"
        }
        Format::Csv => io::result_to_csv(&result),
    };
    emit(common, text)?;
    Ok(ExitCode::SUCCESS)
}

/// Runs a protocol once (enumerate) or `trials` times (sample), pooling the
/// sampled branches into one result.
fn run_aggregated(
    mode: RunMode,
    trials: usize,
    seed: u64,
    mut run: impl FnMut(RunMode) -> qnetcode::Result<(ProtocolResult, ExecutionTrace)>,
) -> qnetcode::Result<(ProtocolResult, ExecutionTrace)> {
    match mode {
        RunMode::EnumerateBranches => run(mode),
        RunMode::Sample { .. } if trials <= 1 => run(mode),
        RunMode::Sample { .. } => {
            let mut pooled: Option<(ProtocolResult, ExecutionTrace)> = None;
            let mut branches = Vec::new();
            for t in 0..trials {
                let (r, trace) =
                    run(RunMode::Sample { seed: seed.wrapping_add(t as u64) })?;
                // Each trial is one sampled path; its branch carries the
                // Born weight of that path. Normalize per trial so the
                // pooled weights form a distribution.
                let trial_total: f64 = r.branches.iter().map(|b| b.probability).sum();
                let weight = 1.0 / (trials as f64 * trial_total);
                branches.extend(r.branches.iter().cloned().map(|mut b| {
                    b.probability *= weight;
                    b
                }));
                if pooled.is_none() {
                    pooled = Some((r, trace));
                }
            }
            let (mut first, trace) = pooled.expect("at least one trial");
            let f1: f64 = branches.iter().map(|b| b.probability * b.fidelity_1).sum();
            let f2: f64 = branches.iter().map(|b| b.probability * b.fidelity_2).sum();
            first.fidelity_1 = f1;
            first.fidelity_2 = f2;
            first.average = 0.5 * (f1 + f2);
            first.min_branch_fidelity = branches
                .iter()
                .flat_map(|b| [b.fidelity_1, b.fidelity_2])
                .fold(f64::INFINITY, f64::min);
            first.branches = branches;
            Ok((first, trace))
        }
    }
}

fn run_boundcheck(
    common: &CommonOpts,
    protocol: Option<&str>,
    trace_path: Option<&PathBuf>,
    thresholds_only: bool,
    trials: usize,
) -> qnetcode::Result<ExitCode> {
    let thresholds = fidelity_thresholds();
    if thresholds_only {
        emit(
            common,
            format!(
                "fe_max = {:.6}\nfavg_max = {:.6}\n",
                thresholds.fe_max, thresholds.favg_max
            ),
        )?;
        return Ok(ExitCode::SUCCESS);
    }

    let (trace, monte_carlo): (ExecutionTrace, Option<f64>) = match (protocol, trace_path) {
        (Some("baseline"), None) => (
            protocols::baseline_reference_trace(common.seed, RunMode::EnumerateBranches)?,
            Some(baseline_haar_average(trials, common.seed)?),
        ),
        (Some("entangled"), None) | (Some("entangled-joint"), None) => {
            (protocols::entangled_reference_trace(RunMode::EnumerateBranches)?, None)
        }
        (Some("measure-forward"), None) => (
            protocols::measure_forward_reference_trace(common.seed, RunMode::EnumerateBranches)?,
            None,
        ),
        (Some(other), None) => {
            return Err(Error::Parse(format!(
                "boundcheck supports baseline, entangled, entangled-joint, measure-forward; got `{other}`"
            )))
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
            (io::parse_trace_json(&text)?, None)
        }
        _ => return Err(Error::Parse("boundcheck needs --protocol or --trace".into())),
    };

    let report = audit_chain(&trace)?;
    let mut text = match common.format {
        Format::Json => serde_json::to_string_pretty(&report).expect("plain data serializes") + "\n",
        _ => io::chain_report_table(&report),
    };

    if report.applicable {
        if let Some(avg) = monte_carlo {
            let mut summary = ProtocolResult {
                protocol: "baseline".into(),
                branches: Vec::new(),
                fidelity_1: f64::NAN,
                fidelity_2: f64::NAN,
                average: avg,
                min_branch_fidelity: f64::NAN,
                classical_outputs: None,
            };
            summary.branches.clear();
            let verdict = verify_bound_on_protocol(&summary, &trace)?;
            if common.format != Format::Json {
                text.push_str(&format!(
                    "monte carlo favg ({trials} trials) = {:.6} {} favg_max = {:.6}\n",
                    verdict.average_fidelity,
                    if verdict.within_bound { "<=" } else { ">" },
                    verdict.favg_max
                ));
                text.push_str(&format!(
                    "twirled entropy route: H(R1B1)+H(R2B2) = {:.6} >= 1: {}\n",
                    verdict.twirl_entropy_sum,
                    if verdict.twirl_bound_holds { "holds" } else { "VIOLATED" }
                ));
            }
        }
    }

    emit(common, text)?;
    if report.applicable && !report.all_hold() {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_info(common: &CommonOpts, state: &PathBuf, groups: Option<&str>) -> qnetcode::Result<ExitCode> {
    let text = std::fs::read_to_string(state)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", state.display())))?;
    let rho = io::parse_state_json(&text)?;
    let mut out = String::new();
    out.push_str(&format!(
        "registers: {}\n",
        rho.layout()
            .registers()
            .iter()
            .map(|r| format!("{}({})", r.name, r.dim))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    let all: Vec<&str> = rho.layout().names().collect();
    out.push_str(&format!("H(total) = {:.6}\n", group_entropy(&rho, &all)?));

    if let Some(spec) = groups {
        let (a, b, c) = io::parse_group_spec(spec)?;
        let ar: Vec<&str> = a.iter().map(String::as_str).collect();
        let br: Vec<&str> = b.iter().map(String::as_str).collect();
        let cr: Vec<&str> = c.iter().map(String::as_str).collect();
        out.push_str(&format!("H({}) = {:.6}\n", a.join(","), group_entropy(&rho, &ar)?));
        out.push_str(&format!("H({}) = {:.6}\n", b.join(","), group_entropy(&rho, &br)?));
        out.push_str(&format!(
            "I({}:{}) = {:.6}\n",
            a.join(","),
            b.join(","),
            mutual_information(&rho, &ar, &br)?
        ));
        if !cr.is_empty() {
            out.push_str(&format!(
                "I({}:{}|{}) = {:.6}\n",
                a.join(","),
                b.join(","),
                c.join(","),
                conditional_mutual_information(&rho, &ar, &br, &cr)?
            ));
        }
    }
    emit(common, out)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> qnetcode::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            common,
            protocol,
            psi1,
            psi2,
            phi,
            x1,
            x2,
            mode,
            trials,
            trace_out,
        } => run_simulate(
            &common,
            &protocol,
            &psi1,
            &psi2,
            phi.as_deref(),
            x1,
            x2,
            mode,
            trials,
            trace_out.as_ref(),
        ),
        Command::Boundcheck { common, protocol, trace, thresholds_only, trials } => {
            run_boundcheck(&common, protocol.as_deref(), trace.as_ref(), thresholds_only, trials)
        }
        Command::Info { common, state, groups } => run_info(&common, &state, groups.as_deref()),
    }
}
