//! File formats: states, channels, traces, audit reports.
//!
//! Everything is JSON with complex numbers as `[re, im]` pairs and matrices
//! row-major. These parsers take untrusted input (they back the CLI and the
//! fuzz targets), so every structural assumption is checked before any
//! numerics run.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundcheck::ChainReport;
use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::layout::RegisterLayout;
use crate::matrix::ComplexMatrix;
use crate::net::{BranchTrace, Capacity, ChannelUse, CutId, CutSnapshot, ExecutionTrace, RunMode};
use crate::protocols::ProtocolResult;
use crate::state::{DensityOperator, PureState};

const MAX_STATE_DIM: usize = 4096;

/// On-disk density operator: register list plus row-major matrix entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub layout: Vec<(String, usize)>,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(rho: &DensityOperator) -> Self {
        Self {
            layout: rho
                .layout()
                .registers()
                .iter()
                .map(|r| (r.name.clone(), r.dim))
                .collect(),
            matrix: rho.matrix().data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn into_state(self) -> Result<DensityOperator> {
        let layout = RegisterLayout::new(self.layout)?;
        let d = layout.total_dim();
        if d > MAX_STATE_DIM {
            return Err(Error::Parse(format!(
                "state dimension {d} exceeds the supported maximum {MAX_STATE_DIM}"
            )));
        }
        if self.matrix.len() != d * d {
            return Err(Error::Parse(format!(
                "matrix has {} entries, layout dimension {d} needs {}",
                self.matrix.len(),
                d * d
            )));
        }
        for [re, im] in &self.matrix {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Parse("matrix entries must be finite".into()));
            }
        }
        let data = self.matrix.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let matrix = ComplexMatrix::from_row_major(d, d, data)?;
        DensityOperator::new(layout, matrix)
    }
}

/// Parses the state JSON format.
pub fn parse_state_json(input: &str) -> Result<DensityOperator> {
    let file: StateFile =
        serde_json::from_str(input).map_err(|e| Error::Parse(format!("state json: {e}")))?;
    file.into_state()
}

pub fn state_to_json(rho: &DensityOperator) -> String {
    serde_json::to_string_pretty(&StateFile::from_state(rho)).expect("plain data serializes")
}

/// Extracts a pure state from a (numerically) rank-one density file.
pub fn pure_state_from_file(rho: &DensityOperator) -> Result<PureState> {
    let (vals, vecs) = rho.matrix().eigh();
    let top = vals.len() - 1;
    if vals[..top].iter().any(|&v| v > 1e-9) {
        return Err(Error::Parse("state file is mixed; a pure input state is required".into()));
    }
    PureState::new(rho.layout().clone(), vecs.column(top))
}

/// On-disk Kraus channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub input_dim: usize,
    pub output_dim: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            input_dim: ch.input_dim(),
            output_dim: ch.output_dim(),
            kraus: ch
                .kraus_operators()
                .iter()
                .map(|k| k.data().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn into_channel(self) -> Result<KrausChannel> {
        let (din, dout) = (self.input_dim, self.output_dim);
        if din == 0 || dout == 0 || din > 64 || dout > 64 {
            return Err(Error::Parse(format!("unsupported channel shape {dout}x{din}")));
        }
        if self.kraus.is_empty() || self.kraus.len() > din * dout + 1 {
            return Err(Error::Parse(format!("unreasonable Kraus count {}", self.kraus.len())));
        }
        let mut ops = Vec::with_capacity(self.kraus.len());
        for entries in &self.kraus {
            if entries.len() != din * dout {
                return Err(Error::Parse(format!(
                    "Kraus operator has {} entries, expected {}",
                    entries.len(),
                    din * dout
                )));
            }
            if entries.iter().any(|[re, im]| !re.is_finite() || !im.is_finite()) {
                return Err(Error::Parse("Kraus entries must be finite".into()));
            }
            let data = entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            ops.push(ComplexMatrix::from_row_major(dout, din, data)?);
        }
        KrausChannel::new(din, dout, ops)
    }
}

pub fn parse_channel_json(input: &str) -> Result<KrausChannel> {
    let file: ChannelFile =
        serde_json::from_str(input).map_err(|e| Error::Parse(format!("channel json: {e}")))?;
    file.into_channel()
}

pub fn channel_to_json(ch: &KrausChannel) -> String {
    serde_json::to_string_pretty(&ChannelFile::from_channel(ch)).expect("plain data serializes")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CutFile {
    state: StateFile,
    groups: BTreeMap<String, Vec<String>>,
}

/// On-disk execution trace: branches, audit cuts, resource usage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFile {
    pub mode: RunMode,
    pub prior_ebits: usize,
    pub bottleneck_payload: Option<Capacity>,
    pub channel_uses: BTreeMap<String, ChannelUse>,
    pub branches: Vec<BranchTrace>,
    cuts: BTreeMap<String, CutFile>,
    /// Branch-averaged state at the final cut, included on request.
    pub final_state: Option<StateFile>,
}

fn cut_id_from_name(name: &str) -> Result<CutId> {
    match name {
        "after_sends" => Ok(CutId::AfterSends),
        "after_bottleneck" => Ok(CutId::AfterBottleneck),
        "final" => Ok(CutId::Final),
        _ => Err(Error::Parse(format!("unknown cut `{name}`"))),
    }
}

pub fn trace_to_json(trace: &ExecutionTrace, include_final_state: bool) -> String {
    let cuts = trace
        .cuts
        .iter()
        .map(|(id, snap)| {
            (
                id.to_string(),
                CutFile {
                    state: StateFile::from_state(&snap.state),
                    groups: snap.groups.clone(),
                },
            )
        })
        .collect();
    let final_state = if include_final_state {
        trace.cuts.get(&CutId::Final).map(|s| StateFile::from_state(&s.state))
    } else {
        None
    };
    let file = TraceFile {
        mode: trace.mode,
        prior_ebits: trace.prior_ebits,
        bottleneck_payload: trace.bottleneck_payload,
        channel_uses: trace
            .channel_uses
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        branches: trace
            .branches
            .iter()
            .map(|b| BranchTrace { final_state: None, ..b.clone() })
            .collect(),
        cuts,
        final_state,
    };
    serde_json::to_string_pretty(&file).expect("plain data serializes")
}

/// Rebuilds a trace from its JSON form; enough survives the round trip for
/// every audit (cut states, groups, payload kinds, branch statistics).
pub fn parse_trace_json(input: &str) -> Result<ExecutionTrace> {
    let file: TraceFile =
        serde_json::from_str(input).map_err(|e| Error::Parse(format!("trace json: {e}")))?;
    let mut cuts = BTreeMap::new();
    for (name, cut) in file.cuts {
        let id = cut_id_from_name(&name)?;
        let state = cut.state.into_state()?;
        for regs in cut.groups.values() {
            for reg in regs {
                state.layout().position(reg)?;
            }
        }
        cuts.insert(id, CutSnapshot { state, groups: cut.groups });
    }
    let mut channel_uses = BTreeMap::new();
    for (name, usage) in file.channel_uses {
        channel_uses.insert(name.parse()?, usage);
    }
    let total: f64 = file.branches.iter().map(|b| b.probability).sum();
    if !file.branches.is_empty() && !(0.0..=1.0 + 1e-6).contains(&total) {
        return Err(Error::Parse(format!("branch probabilities sum to {total}")));
    }
    Ok(ExecutionTrace {
        mode: file.mode,
        initial_state: DensityOperator::maximally_mixed(RegisterLayout::new(
            Vec::<(String, usize)>::new(),
        )?),
        branches: file.branches,
        cuts,
        channel_uses,
        prior_ebits: file.prior_ebits,
        bottleneck_payload: file.bottleneck_payload,
    })
}

/// Parses a register-group expression: `"A;B"` or `"A;B|C"`, each group a
/// comma-separated register list. Used by the CLI's `info` command.
pub fn parse_group_spec(spec: &str) -> Result<(Vec<String>, Vec<String>, Vec<String>)> {
    if spec.len() > 4096 {
        return Err(Error::Parse("group expression is unreasonably long".into()));
    }
    let (pair, cond) = match spec.split_once('|') {
        Some((p, c)) => (p, c),
        None => (spec, ""),
    };
    let mut halves = pair.split(';');
    let a = halves.next().unwrap_or_default();
    let b = halves
        .next()
        .ok_or_else(|| Error::Parse("groups must look like \"A;B\" or \"A;B|C\"".into()))?;
    if halves.next().is_some() {
        return Err(Error::Parse("too many `;`-separated groups".into()));
    }
    let split = |s: &str| -> Vec<String> {
        s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(String::from).collect()
    };
    let (a, b, c) = (split(a), split(b), split(cond));
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parse("both sides of the group expression need registers".into()));
    }
    Ok((a, b, c))
}

/// CSV summary of a protocol run: one row per branch.
pub fn result_to_csv(result: &ProtocolResult) -> String {
    let mut out = String::from("protocol,branch,probability,fidelity_1,fidelity_2,average\n");
    for b in &result.branches {
        out.push_str(&format!(
            "{},{},{:.12},{:.12},{:.12},{:.12}\n",
            result.protocol,
            if b.label.is_empty() { "-" } else { &b.label },
            b.probability,
            b.fidelity_1,
            b.fidelity_2,
            0.5 * (b.fidelity_1 + b.fidelity_2),
        ));
    }
    out
}

/// Aligned-column text table for a chain report.
pub fn chain_report_table(report: &ChainReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "thresholds: fe_max = {:.6}  favg_max = {:.6}\n",
        report.thresholds.fe_max, report.thresholds.favg_max
    ));
    out.push_str(&format!(
        "independence: I(R1E1:R2E2) = {:.6}  I(R1E1D1:R2E2D2) = {:.6}\n",
        report.independence.senders_value, report.independence.full_value
    ));
    if !report.applicable {
        out.push_str(
            "chain audit not applicable: the trace shows prior entanglement between the senders\n",
        );
        return out;
    }
    out.push_str(&format!(
        "{:<10} {:>12} {:>12} {:>12}  {}\n",
        "inequality", "lhs", "rhs", "slack", "verdict"
    ));
    for e in &report.entries {
        out.push_str(&format!(
            "{:<10} {:>12.6} {:>12.6} {:>12.6}  {}\n",
            e.id.to_string(),
            e.lhs,
            e.rhs,
            e.slack,
            if e.holds { "holds" } else { "VIOLATED" },
        ));
    }
    if let Some((f1, f2)) = &report.side_fidelities {
        out.push_str(&format!(
            "side fidelities: f_e = ({:.6}, {:.6})  f_avg = ({:.6}, {:.6})\n",
            f1.entanglement_fidelity,
            f2.entanglement_fidelity,
            f1.average_fidelity,
            f2.average_fidelity
        ));
    }
    out
}
