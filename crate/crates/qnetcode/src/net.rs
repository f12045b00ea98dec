//! The butterfly network: capacity-tagged channels, node programs, and the
//! execution engine.
//!
//! A program is an ordered list of node steps over one shared global
//! density operator. The engine enforces locality (a node only touches
//! registers it holds), single use and capacity of every channel, and
//! records everything needed for the entropic audits: at named cuts it
//! snapshots the branch-averaged global state with every message
//! materialized as a register — quantum payloads under their own names,
//! classical payloads as basis-state registers named `msg_<channel>`.
//!
//! Classical outcome values are treated as metadata once recorded: sending
//! them on a channel charges that channel's capacity, but any later step
//! may refer to them by name. Quantum registers, by contrast, are strictly
//! located.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::RegisterLayout;
use crate::matrix::ComplexMatrix;
use crate::pauli::{pauli_correction, pauli_correction_inverse, BellOutcome};
use crate::sampling::seeded_rng;
use crate::state::{DensityOperator, PureState};

/// The six butterfly nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    A1,
    A2,
    C1,
    C2,
    B1,
    B2,
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The seven butterfly channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelId {
    D1,
    D2,
    E1,
    E2,
    F,
    G1,
    G2,
}

impl ChannelId {
    pub const ALL: [ChannelId; 7] = [
        ChannelId::D1,
        ChannelId::D2,
        ChannelId::E1,
        ChannelId::E2,
        ChannelId::F,
        ChannelId::G1,
        ChannelId::G2,
    ];

    /// Fixed endpoints of the butterfly: the direct sender edges cross.
    pub fn endpoints(self) -> (NodeId, NodeId) {
        match self {
            ChannelId::D1 => (NodeId::A1, NodeId::C1),
            ChannelId::D2 => (NodeId::A2, NodeId::C1),
            ChannelId::E1 => (NodeId::A1, NodeId::B2),
            ChannelId::E2 => (NodeId::A2, NodeId::B1),
            ChannelId::F => (NodeId::C1, NodeId::C2),
            ChannelId::G1 => (NodeId::C2, NodeId::B1),
            ChannelId::G2 => (NodeId::C2, NodeId::B2),
        }
    }
}

impl std::fmt::Display for ChannelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelId::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Topology(format!("unknown channel `{s}`")))
    }
}

/// What a single use of a channel may carry: one qubit, or up to two
/// classical bits — never both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Capacity {
    OneQubit,
    TwoCbits,
}

/// One directed edge with its declared capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub id: ChannelId,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: Capacity,
}

/// The butterfly DAG.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    edges: Vec<ChannelSpec>,
}

impl Topology {
    /// Builds the butterfly from a capacity assignment that must cover the
    /// seven channel names exactly — nothing missing, nothing extra.
    pub fn butterfly(capacities: &BTreeMap<String, Capacity>) -> Result<Self> {
        for name in capacities.keys() {
            name.parse::<ChannelId>()?;
        }
        let mut edges = Vec::with_capacity(7);
        for id in ChannelId::ALL {
            let capacity = *capacities
                .get(&id.to_string())
                .ok_or_else(|| Error::Topology(format!("missing capacity for channel {id}")))?;
            let (from, to) = id.endpoints();
            edges.push(ChannelSpec { id, from, to, capacity });
        }
        let t = Self { edges };
        debug_assert!(t.is_dag());
        Ok(t)
    }

    /// Butterfly from per-channel capacities given as `(ChannelId, Capacity)`.
    pub fn butterfly_with(caps: impl IntoIterator<Item = (ChannelId, Capacity)>) -> Self {
        let map: BTreeMap<String, Capacity> =
            caps.into_iter().map(|(id, c)| (id.to_string(), c)).collect();
        Self::butterfly(&map).expect("all seven channels provided")
    }

    /// All channels at one capacity.
    pub fn butterfly_uniform(capacity: Capacity) -> Self {
        Self::butterfly_with(ChannelId::ALL.map(|id| (id, capacity)))
    }

    pub fn edges(&self) -> &[ChannelSpec] {
        &self.edges
    }

    pub fn channel(&self, id: ChannelId) -> &ChannelSpec {
        self.edges.iter().find(|e| e.id == id).expect("all seven channels present")
    }

    /// Kahn's algorithm over the fixed node set.
    pub fn is_dag(&self) -> bool {
        self.topological_order().is_some()
    }

    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let nodes = [NodeId::A1, NodeId::A2, NodeId::C1, NodeId::C2, NodeId::B1, NodeId::B2];
        let mut indeg: BTreeMap<NodeId, usize> = nodes.iter().map(|&n| (n, 0)).collect();
        for e in &self.edges {
            *indeg.get_mut(&e.to).unwrap() += 1;
        }
        let mut ready: Vec<NodeId> =
            nodes.iter().copied().filter(|n| indeg[n] == 0).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(n) = ready.pop() {
            order.push(n);
            for e in self.edges.iter().filter(|e| e.from == n) {
                let d = indeg.get_mut(&e.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(e.to);
                }
            }
        }
        order.sort_by_key(|n| nodes.iter().position(|m| m == n));
        (order.len() == nodes.len()).then_some(order)
    }
}

/// A classical bit value derived from recorded outcomes: the XOR of the
/// listed outcome bits, optionally flipped by a constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitExpr {
    pub terms: Vec<(String, usize)>,
    pub constant: bool,
}

impl BitExpr {
    pub fn constant(value: bool) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn outcome_bit(outcome: &str, bit: usize) -> Self {
        Self { terms: vec![(outcome.to_string(), bit)], constant: false }
    }

    pub fn xor(outcomes: &[&str], bit: usize) -> Self {
        Self {
            terms: outcomes.iter().map(|o| (o.to_string(), bit)).collect(),
            constant: false,
        }
    }

    fn eval(&self, outcomes: &BTreeMap<String, Vec<bool>>) -> Result<bool> {
        let mut v = self.constant;
        for (id, bit) in &self.terms {
            let bits = outcomes
                .get(id)
                .ok_or_else(|| Error::Program(format!("outcome `{id}` not recorded yet")))?;
            let b = bits.get(*bit).ok_or_else(|| {
                Error::Program(format!("outcome `{id}` has no bit {bit}"))
            })?;
            v ^= b;
        }
        Ok(v)
    }
}

/// One node-local operation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Action {
    /// Conjugate the state by a unitary on the listed registers.
    Apply { label: String, unitary_rows: Vec<Vec<(f64, f64)>>, targets: Vec<String> },
    /// Apply the teleportation correction U(⊕outcomes), or its inverse.
    ApplyCorrection { outcomes: Vec<String>, inverse: bool, target: String },
    /// Bell measurement on a pair of qubits; records two bits.
    BellMeasure { pair: (String, String), record: String },
    /// Projective measurement of a qubit in the basis given by the columns
    /// of a 2x2 unitary; records one bit.
    MeasureBasis { target: String, basis_rows: Vec<Vec<(f64, f64)>>, record: String },
    /// Create a fresh qubit in basis state |b⟩ of the given basis, where b
    /// is a recorded classical bit.
    PrepareFromBit { register: String, basis_rows: Vec<Vec<(f64, f64)>>, bit: BitExpr },
    /// Move a register through a one-qubit channel.
    SendQuantum { channel: ChannelId, register: String },
    /// Send up to two classical bits through a channel.
    SendClassical { channel: ChannelId, bits: Vec<BitExpr> },
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<(f64, f64)>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect())
        .collect()
}

fn matrix_of(rows: &[Vec<(f64, f64)>]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows.len(), rows.first().map_or(0, Vec::len), |r, c| {
        Complex64::new(rows[r][c].0, rows[r][c].1)
    })
}

impl Action {
    pub fn apply(label: &str, unitary: &ComplexMatrix, targets: &[&str]) -> Self {
        Action::Apply {
            label: label.to_string(),
            unitary_rows: rows_of(unitary),
            targets: targets.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn measure_basis(target: &str, basis: &ComplexMatrix, record: &str) -> Self {
        Action::MeasureBasis {
            target: target.to_string(),
            basis_rows: rows_of(basis),
            record: record.to_string(),
        }
    }

    pub fn prepare_from_bit(register: &str, basis: &ComplexMatrix, bit: BitExpr) -> Self {
        Action::PrepareFromBit {
            register: register.to_string(),
            basis_rows: rows_of(basis),
            bit,
        }
    }
}

/// A node step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step {
    pub node: NodeId,
    pub action: Action,
}

/// Named cuts at which the engine snapshots the global state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CutId {
    /// After both senders have finished their sends.
    AfterSends,
    /// After the bottleneck channel F has been used.
    AfterBottleneck,
    /// After the receivers have produced their outputs.
    Final,
}

impl std::fmt::Display for CutId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CutId::AfterSends => "after_sends",
            CutId::AfterBottleneck => "after_bottleneck",
            CutId::Final => "final",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProgramItem {
    Step(Step),
    Cut(CutId),
}

/// A full protocol description: steps plus the static register metadata the
/// engine and the audits need.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Program {
    pub items: Vec<ProgramItem>,
    /// Initial node of every owned register. Registers not listed (the
    /// reference systems) are external: no node may operate on them.
    pub placement: BTreeMap<String, NodeId>,
    /// Reference groups for the audits, keyed "R1"/"R2".
    pub reference_groups: BTreeMap<String, Vec<String>>,
    /// Receiver outputs, keyed "B1"/"B2".
    pub outputs: BTreeMap<String, Vec<String>>,
    /// Prior entanglement consumed by the protocol, in ebits.
    pub prior_ebits: usize,
}

impl Program {
    pub fn step(&mut self, node: NodeId, action: Action) {
        self.items.push(ProgramItem::Step(Step { node, action }));
    }

    pub fn cut(&mut self, id: CutId) {
        self.items.push(ProgramItem::Cut(id));
    }

    pub fn new() -> Self {
        Self {
            items: Vec::new(),
            placement: BTreeMap::new(),
            reference_groups: BTreeMap::new(),
            outputs: BTreeMap::new(),
            prior_ebits: 0,
        }
    }
}

impl Default for Program {
    fn default() -> Self {
        Self::new()
    }
}

/// Execution mode: sample one branch per measurement, or follow all of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RunMode {
    Sample { seed: u64 },
    EnumerateBranches,
}

/// One recorded event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: Option<NodeId>,
    pub description: String,
    /// Present for measurements: (outcome id, bits, branch probability).
    pub outcome: Option<(String, Vec<bool>, f64)>,
    /// Present for messages: (channel, payload summary).
    pub message: Option<(ChannelId, String)>,
}

/// One measurement branch of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchTrace {
    pub probability: f64,
    pub outcomes: BTreeMap<String, Vec<bool>>,
    pub steps: Vec<TraceStep>,
    #[serde(skip)]
    pub final_state: Option<DensityOperator>,
    /// Final location of every owned register.
    pub custody: BTreeMap<String, NodeId>,
}

/// Branch-averaged snapshot at a cut, with the audit groups resolved to
/// register names of the snapshot state.
#[derive(Debug, Clone)]
pub struct CutSnapshot {
    pub state: DensityOperator,
    pub groups: BTreeMap<String, Vec<String>>,
}

/// Per-channel usage counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelUse {
    pub qubits: usize,
    pub cbits: usize,
}

/// Complete record of a protocol run.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    pub mode: RunMode,
    pub initial_state: DensityOperator,
    pub branches: Vec<BranchTrace>,
    pub cuts: BTreeMap<CutId, CutSnapshot>,
    pub channel_uses: BTreeMap<ChannelId, ChannelUse>,
    pub prior_ebits: usize,
    /// What the bottleneck carried, if it was used.
    pub bottleneck_payload: Option<Capacity>,
}

impl ExecutionTrace {
    pub fn cut(&self, id: CutId) -> Result<&CutSnapshot> {
        self.cuts
            .get(&id)
            .ok_or_else(|| Error::TraceIncomplete(format!("no snapshot at cut `{id}`")))
    }
}

#[derive(Clone)]
struct Branch {
    prob: f64,
    state: DensityOperator,
    custody: BTreeMap<String, NodeId>,
    outcomes: BTreeMap<String, Vec<bool>>,
    steps: Vec<TraceStep>,
}

/// What each channel carried, fixed across branches (values differ, shapes
/// do not).
#[derive(Clone, Debug)]
enum PayloadShape {
    Quantum { register: String },
    Classical { bits: Vec<BitExpr> },
}

/// Runs a program over an initial global state.
///
/// In `EnumerateBranches` mode every measurement forks; the returned trace
/// carries all branches with Born weights summing to one. In `Sample` mode
/// a single branch is drawn from the seeded generator.
pub fn run_protocol(
    topology: &Topology,
    program: &Program,
    initial: &DensityOperator,
    mode: RunMode,
) -> Result<ExecutionTrace> {
    for reg in program.placement.keys() {
        initial.layout().position(reg)?;
    }
    let mut rng = match mode {
        RunMode::Sample { seed } => Some(seeded_rng(seed)),
        RunMode::EnumerateBranches => None,
    };

    let mut branches = vec![Branch {
        prob: 1.0,
        state: initial.clone(),
        custody: program.placement.clone(),
        outcomes: BTreeMap::new(),
        steps: Vec::new(),
    }];
    let mut used: BTreeSet<ChannelId> = BTreeSet::new();
    let mut payloads: BTreeMap<ChannelId, PayloadShape> = BTreeMap::new();
    let mut channel_uses: BTreeMap<ChannelId, ChannelUse> = BTreeMap::new();
    let mut cuts: BTreeMap<CutId, CutSnapshot> = BTreeMap::new();

    for item in &program.items {
        match item {
            ProgramItem::Cut(id) => {
                let snap = snapshot_cut(*id, &branches, program, &payloads)?;
                cuts.insert(*id, snap);
            }
            ProgramItem::Step(step) => {
                branches = execute_step(
                    step,
                    branches,
                    topology,
                    &mut used,
                    &mut payloads,
                    &mut channel_uses,
                    rng.as_mut(),
                )?;
            }
        }
    }

    let total: f64 = branches.iter().map(|b| b.prob).sum();
    if matches!(mode, RunMode::EnumerateBranches) && (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "branch probabilities sum to {total}, expected 1"
        )));
    }

    let bottleneck_payload = payloads.get(&ChannelId::F).map(|p| match p {
        PayloadShape::Quantum { .. } => Capacity::OneQubit,
        PayloadShape::Classical { .. } => Capacity::TwoCbits,
    });

    Ok(ExecutionTrace {
        mode,
        initial_state: initial.clone(),
        branches: branches
            .into_iter()
            .map(|b| BranchTrace {
                probability: b.prob,
                outcomes: b.outcomes,
                steps: b.steps,
                final_state: Some(b.state),
                custody: b.custody,
            })
            .collect(),
        cuts,
        channel_uses,
        prior_ebits: program.prior_ebits,
        bottleneck_payload,
    })
}

fn execute_step(
    step: &Step,
    branches: Vec<Branch>,
    topology: &Topology,
    used: &mut BTreeSet<ChannelId>,
    payloads: &mut BTreeMap<ChannelId, PayloadShape>,
    channel_uses: &mut BTreeMap<ChannelId, ChannelUse>,
    mut rng: Option<&mut rand_chacha::ChaCha8Rng>,
) -> Result<Vec<Branch>> {
    let node = step.node;
    let mut out = Vec::with_capacity(branches.len());

    // Channel bookkeeping happens once, not per branch.
    match &step.action {
        Action::SendQuantum { channel, register } => {
            let spec = *topology.channel(*channel);
            if spec.from != node {
                return Err(Error::Locality {
                    node: node.to_string(),
                    detail: format!("channel {channel} starts at {}", spec.from),
                });
            }
            if !used.insert(*channel) {
                return Err(Error::Capacity {
                    channel: channel.to_string(),
                    detail: "channel already used in this run".into(),
                });
            }
            if spec.capacity != Capacity::OneQubit {
                return Err(Error::Capacity {
                    channel: channel.to_string(),
                    detail: format!("carries a qubit register `{register}` but is classical"),
                });
            }
            payloads.insert(*channel, PayloadShape::Quantum { register: register.clone() });
            channel_uses.entry(*channel).or_default().qubits += 1;
        }
        Action::SendClassical { channel, bits } => {
            let spec = *topology.channel(*channel);
            if spec.from != node {
                return Err(Error::Locality {
                    node: node.to_string(),
                    detail: format!("channel {channel} starts at {}", spec.from),
                });
            }
            if !used.insert(*channel) {
                return Err(Error::Capacity {
                    channel: channel.to_string(),
                    detail: "channel already used in this run".into(),
                });
            }
            if spec.capacity != Capacity::TwoCbits {
                return Err(Error::Capacity {
                    channel: channel.to_string(),
                    detail: "carries classical bits but is declared one-qubit".into(),
                });
            }
            if bits.is_empty() || bits.len() > 2 {
                return Err(Error::Capacity {
                    channel: channel.to_string(),
                    detail: format!("payload of {} classical bits exceeds 2", bits.len()),
                });
            }
            payloads.insert(*channel, PayloadShape::Classical { bits: bits.clone() });
            channel_uses.entry(*channel).or_default().cbits += bits.len();
        }
        _ => {}
    }

    for mut branch in branches {
        match &step.action {
            Action::Apply { label, unitary_rows, targets } => {
                let refs: Vec<&str> = targets.iter().map(String::as_str).collect();
                require_custody(&branch, node, &refs)?;
                let u = matrix_of(unitary_rows);
                branch.state = branch.state.apply_on(&u, &refs)?;
                branch.steps.push(TraceStep {
                    node: Some(node),
                    description: format!("apply {label} on {}", targets.join(",")),
                    outcome: None,
                    message: None,
                });
                out.push(branch);
            }
            Action::ApplyCorrection { outcomes, inverse, target } => {
                require_custody(&branch, node, &[target.as_str()])?;
                let mut acc = BellOutcome::new(false, false);
                for id in outcomes {
                    let bits = branch.outcomes.get(id).ok_or_else(|| {
                        Error::Program(format!("outcome `{id}` not recorded yet"))
                    })?;
                    if bits.len() != 2 {
                        return Err(Error::Program(format!(
                            "outcome `{id}` is not a Bell outcome"
                        )));
                    }
                    acc = acc ^ BellOutcome::from_bits([bits[0], bits[1]]);
                }
                let u = if *inverse { pauli_correction_inverse(acc) } else { pauli_correction(acc) };
                branch.state = branch.state.apply_on(&u, &[target])?;
                branch.steps.push(TraceStep {
                    node: Some(node),
                    description: format!(
                        "apply U({acc}){} on {target}",
                        if *inverse { "^-1" } else { "" }
                    ),
                    outcome: None,
                    message: None,
                });
                out.push(branch);
            }
            Action::BellMeasure { pair, record } => {
                require_custody(&branch, node, &[pair.0.as_str(), pair.1.as_str()])?;
                let measured = match rng.as_deref_mut() {
                    Some(rng) => {
                        vec![branch.state.bell_measurement_sampled(
                            (&pair.0, &pair.1),
                            rng,
                        )?]
                    }
                    None => branch.state.bell_measurement_branches((&pair.0, &pair.1))?,
                };
                for (outcome, state, p) in measured {
                    let mut next = branch.clone();
                    next.prob *= p;
                    next.state = state;
                    next.custody.remove(&pair.0);
                    next.custody.remove(&pair.1);
                    next.outcomes.insert(record.clone(), outcome.bits().to_vec());
                    next.steps.push(TraceStep {
                        node: Some(node),
                        description: format!(
                            "Bell measurement on ({},{}) -> {outcome}",
                            pair.0, pair.1
                        ),
                        outcome: Some((record.clone(), outcome.bits().to_vec(), p)),
                        message: None,
                    });
                    out.push(next);
                }
            }
            Action::MeasureBasis { target, basis_rows, record } => {
                require_custody(&branch, node, &[target.as_str()])?;
                let basis = matrix_of(basis_rows);
                let measured = branch.state.basis_measurement_branches(target, &basis)?;
                let chosen: Vec<(usize, DensityOperator, f64)> = match rng.as_deref_mut() {
                    Some(rng) => {
                        let total: f64 = measured.iter().map(|m| m.2).sum();
                        let mut ticket = rng.gen::<f64>() * total;
                        let mut pick = measured.len() - 1;
                        for (i, m) in measured.iter().enumerate() {
                            if ticket < m.2 {
                                pick = i;
                                break;
                            }
                            ticket -= m.2;
                        }
                        vec![into_pick(measured, pick)]
                    }
                    None => measured,
                };
                for (k, state, p) in chosen {
                    let mut next = branch.clone();
                    next.prob *= p;
                    next.state = state;
                    next.custody.remove(target);
                    next.outcomes.insert(record.clone(), vec![k == 1]);
                    next.steps.push(TraceStep {
                        node: Some(node),
                        description: format!("measure {target} in basis -> {k}"),
                        outcome: Some((record.clone(), vec![k == 1], p)),
                        message: None,
                    });
                    out.push(next);
                }
            }
            Action::PrepareFromBit { register, basis_rows, bit } => {
                let b = bit.eval(&branch.outcomes)?;
                let basis = matrix_of(basis_rows);
                let ket = PureState::new(
                    RegisterLayout::single(register, 2)?,
                    basis.column(usize::from(b)),
                )?;
                branch.state = branch.state.tensor(&ket.to_density())?;
                branch.custody.insert(register.clone(), node);
                branch.steps.push(TraceStep {
                    node: Some(node),
                    description: format!("prepare {register} from bit {b}"),
                    outcome: None,
                    message: None,
                });
                out.push(branch);
            }
            Action::SendQuantum { channel, register } => {
                let spec = *topology.channel(*channel);
                require_custody(&branch, node, &[register.as_str()])?;
                if branch.state.layout().dim_of(register)? != 2 {
                    return Err(Error::Capacity {
                        channel: channel.to_string(),
                        detail: format!("register `{register}` is not a single qubit"),
                    });
                }
                branch.custody.insert(register.clone(), spec.to);
                branch.steps.push(TraceStep {
                    node: Some(node),
                    description: format!("send qubit {register} via {channel} to {}", spec.to),
                    outcome: None,
                    message: Some((*channel, format!("qubit {register}"))),
                });
                out.push(branch);
            }
            Action::SendClassical { channel, bits } => {
                let values: Vec<bool> = bits
                    .iter()
                    .map(|b| b.eval(&branch.outcomes))
                    .collect::<Result<_>>()?;
                let spec = *topology.channel(*channel);
                branch.steps.push(TraceStep {
                    node: Some(node),
                    description: format!(
                        "send bits {:?} via {channel} to {}",
                        values.iter().map(|&b| u8::from(b)).collect::<Vec<_>>(),
                        spec.to
                    ),
                    outcome: None,
                    message: Some((*channel, format!("{} cbits", values.len()))),
                });
                out.push(branch);
            }
        }
    }
    Ok(out)
}

fn into_pick(
    mut branches: Vec<(usize, DensityOperator, f64)>,
    pick: usize,
) -> (usize, DensityOperator, f64) {
    branches.swap_remove(pick)
}

fn require_custody(branch: &Branch, node: NodeId, regs: &[&str]) -> Result<()> {
    for reg in regs {
        match branch.custody.get(*reg) {
            Some(&at) if at == node => {}
            Some(&at) => {
                return Err(Error::Locality {
                    node: node.to_string(),
                    detail: format!("register `{reg}` is at {at}"),
                })
            }
            None => {
                return Err(Error::Locality {
                    node: node.to_string(),
                    detail: format!("register `{reg}` is external or already consumed"),
                })
            }
        }
    }
    Ok(())
}

/// Audit roles in canonical order, with their sources at each cut.
fn cut_roles(id: CutId) -> &'static [&'static str] {
    match id {
        CutId::AfterSends => &["R1", "R2", "D1", "D2", "E1", "E2"],
        CutId::AfterBottleneck => &["R1", "R2", "E1", "E2", "F"],
        CutId::Final => &["R1", "R2", "B1", "B2"],
    }
}

fn role_channel(role: &str) -> Option<ChannelId> {
    match role {
        "D1" => Some(ChannelId::D1),
        "D2" => Some(ChannelId::D2),
        "E1" => Some(ChannelId::E1),
        "E2" => Some(ChannelId::E2),
        "F" => Some(ChannelId::F),
        _ => None,
    }
}

/// Builds the branch-averaged snapshot at a cut.
///
/// Quantum registers keep their names; each classical message contributes a
/// basis-state register `msg_<channel>` of dimension 2^bits whose value
/// varies per branch. Outcome-averaging the branches makes those registers
/// genuinely classical (diagonal) subsystems of the snapshot state.
fn snapshot_cut(
    id: CutId,
    branches: &[Branch],
    program: &Program,
    payloads: &BTreeMap<ChannelId, PayloadShape>,
) -> Result<CutSnapshot> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut quantum_keep: Vec<String> = Vec::new();
    // (channel register name, bit expressions) in canonical role order.
    let mut classical: Vec<(String, Vec<BitExpr>)> = Vec::new();

    for role in cut_roles(id) {
        if let Some(channel) = role_channel(role) {
            match payloads.get(&channel) {
                Some(PayloadShape::Quantum { register }) => {
                    groups.insert(role.to_string(), vec![register.clone()]);
                    quantum_keep.push(register.clone());
                }
                Some(PayloadShape::Classical { bits }) => {
                    let name = format!("msg_{channel}");
                    groups.insert(role.to_string(), vec![name.clone()]);
                    classical.push((name, bits.clone()));
                }
                None => {}
            }
        } else if role.starts_with('R') {
            if let Some(regs) = program.reference_groups.get(*role) {
                groups.insert(role.to_string(), regs.clone());
                quantum_keep.extend(regs.iter().cloned());
            }
        } else if let Some(regs) = program.outputs.get(*role) {
            groups.insert(role.to_string(), regs.clone());
            quantum_keep.extend(regs.iter().cloned());
        }
    }

    // Canonical register order for the snapshot layout.
    let mut order: Vec<String> = Vec::new();
    for role in cut_roles(id) {
        if let Some(regs) = groups.get(*role) {
            order.extend(regs.iter().cloned());
        }
    }

    let mut accumulated: Option<(RegisterLayout, ComplexMatrix)> = None;
    for branch in branches {
        let reduced = if quantum_keep.is_empty() {
            trivial_state()
        } else {
            let keep: Vec<&str> = quantum_keep.iter().map(String::as_str).collect();
            branch.state.partial_trace(&keep)?
        };
        // Append classical payload registers in their branch values.
        let mut snap = reduced;
        for (name, bits) in &classical {
            let values: Vec<bool> = bits
                .iter()
                .map(|b| b.eval(&branch.outcomes))
                .collect::<Result<_>>()?;
            let dim = 1usize << values.len();
            let index = values.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
            let reg = PureState::basis(RegisterLayout::single(name, dim)?, index).to_density();
            snap = snap.tensor(&reg)?;
        }
        let order_refs: Vec<&str> = order.iter().map(String::as_str).collect();
        let snap = if order_refs.is_empty() { snap } else { snap.reorder(&order_refs)? };
        accumulated = Some(match accumulated {
            None => (snap.layout().clone(), snap.matrix().scale(Complex64::new(branch.prob, 0.0))),
            Some((layout, acc)) => {
                debug_assert_eq!(&layout, snap.layout());
                (layout, acc.add(&snap.matrix().scale(Complex64::new(branch.prob, 0.0))))
            }
        });
    }

    let (layout, matrix) = accumulated.ok_or_else(|| {
        Error::TraceIncomplete("no branches alive at cut snapshot".into())
    })?;
    // In sampled runs the surviving branch carries its path probability;
    // the snapshot is the state conditioned on the branches present.
    let total: f64 = branches.iter().map(|b| b.prob).sum();
    let state = DensityOperator::new(layout, matrix.scale(Complex64::new(1.0 / total, 0.0)))?;
    Ok(CutSnapshot { state, groups })
}

/// The 1-dimensional "no registers" state, used when a cut carries only
/// classical payloads.
fn trivial_state() -> DensityOperator {
    let layout = RegisterLayout::new(Vec::<(String, usize)>::new()).expect("empty layout");
    DensityOperator::from_parts(layout, ComplexMatrix::identity(1))
}
