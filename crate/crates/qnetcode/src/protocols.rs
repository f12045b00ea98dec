//! The concrete butterfly network codes.
//!
//! Three protocols are exposed to the CLI: the classical XOR code, the
//! prior-entanglement code that moves two qubits crossly through the
//! network, and a no-entanglement baseline that routes one qubit through
//! the bottleneck while the other side falls back to measure-and-resend.
//! A fourth, measure-everything variant is kept for the audits' benefit:
//! it exercises the classical-bottleneck branch of the inequality chain.
//!
//! Every protocol also has a reference-mode runner that feeds in halves of
//! maximally entangled pairs (registers R1, R2) instead of concrete input
//! states; those traces are what the entropic audits consume.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::net::{
    Action, BitExpr, Capacity, ChannelId, CutId, ExecutionTrace, NodeId, Program, RunMode,
    Topology,
};
use crate::sampling::{haar_qubit, haar_unitary, seeded_rng};
use crate::state::{DensityOperator, PureState};

/// CLI-facing protocol names.
pub const PROTOCOL_NAMES: [&str; 4] = ["classical-xor", "entangled", "entangled-joint", "baseline"];

/// Input state presets: `zero`, `one`, `plus`, `haar:SEED`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputSpec {
    Zero,
    One,
    Plus,
    Haar { seed: u64 },
}

impl InputSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(InputSpec::Zero),
            "one" => Ok(InputSpec::One),
            "plus" => Ok(InputSpec::Plus),
            _ => {
                let seed = s
                    .strip_prefix("haar:")
                    .and_then(|t| t.parse::<u64>().ok())
                    .ok_or_else(|| {
                        Error::Parse(format!(
                            "unknown input preset `{s}` (expected zero|one|plus|haar:SEED)"
                        ))
                    })?;
                Ok(InputSpec::Haar { seed })
            }
        }
    }

    pub fn realize(&self, name: &str) -> PureState {
        match self {
            InputSpec::Zero => PureState::ket_zero(name),
            InputSpec::One => PureState::ket_one(name),
            InputSpec::Plus => PureState::ket_plus(name),
            InputSpec::Haar { seed } => haar_qubit(name, &mut seeded_rng(*seed)),
        }
    }
}

/// Per-branch outputs of a protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub label: String,
    pub probability: f64,
    pub fidelity_1: f64,
    pub fidelity_2: f64,
}

/// Fidelity summary of a protocol run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub protocol: String,
    pub branches: Vec<BranchOutcome>,
    /// Probability-weighted fidelity of side 1 (A1 → B1).
    pub fidelity_1: f64,
    /// Probability-weighted fidelity of side 2 (A2 → B2).
    pub fidelity_2: f64,
    /// (f1 + f2) / 2.
    pub average: f64,
    /// Worst single-branch, single-side fidelity.
    pub min_branch_fidelity: f64,
    /// Recovered bits for the classical protocol.
    pub classical_outputs: Option<(bool, bool)>,
}

impl ProtocolResult {
    fn from_branches(protocol: &str, branches: Vec<BranchOutcome>) -> Self {
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        let f1: f64 = branches.iter().map(|b| b.probability * b.fidelity_1).sum::<f64>() / total;
        let f2: f64 = branches.iter().map(|b| b.probability * b.fidelity_2).sum::<f64>() / total;
        let min = branches
            .iter()
            .flat_map(|b| [b.fidelity_1, b.fidelity_2])
            .fold(f64::INFINITY, f64::min);
        Self {
            protocol: protocol.to_string(),
            branches,
            fidelity_1: f1,
            fidelity_2: f2,
            average: 0.5 * (f1 + f2),
            min_branch_fidelity: min,
            classical_outputs: None,
        }
    }
}

fn outcome_label(outcomes: &std::collections::BTreeMap<String, Vec<bool>>) -> String {
    outcomes
        .iter()
        .map(|(k, bits)| {
            let s: Vec<String> = bits.iter().map(|&b| u8::from(b).to_string()).collect();
            format!("{k}=({})", s.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Prior-entanglement protocol
// ---------------------------------------------------------------------------

/// Channel capacities used by the prior-entanglement code: the crossing
/// edges carry the qubits, everything else carries two classical bits.
pub fn entangled_topology() -> Topology {
    Topology::butterfly_with([
        (ChannelId::D1, Capacity::TwoCbits),
        (ChannelId::D2, Capacity::TwoCbits),
        (ChannelId::E1, Capacity::OneQubit),
        (ChannelId::E2, Capacity::OneQubit),
        (ChannelId::F, Capacity::TwoCbits),
        (ChannelId::G1, Capacity::TwoCbits),
        (ChannelId::G2, Capacity::TwoCbits),
    ])
}

/// The step sequence of the prior-entanglement code.
///
/// A1 Bell-measures (A1, A11) into X1 and A2 Bell-measures (A2, A22) into
/// X2, each applies the inverse correction of its own outcome to the
/// remaining half of the other pair, the halves cross on E1/E2, X1 and X2
/// travel to C1, the XOR relays through F to both receivers, and each
/// receiver applies U(X1⊕X2).
fn entangled_program(reference_groups: &[(&str, Vec<String>)]) -> Program {
    let mut p = Program::new();
    for (name, node) in [
        ("A1", NodeId::A1),
        ("A11", NodeId::A1),
        ("A12", NodeId::A1),
        ("A2", NodeId::A2),
        ("A21", NodeId::A2),
        ("A22", NodeId::A2),
    ] {
        p.placement.insert(name.into(), node);
    }
    for (role, regs) in reference_groups {
        p.reference_groups.insert((*role).into(), regs.clone());
    }
    p.outputs.insert("B1".into(), vec!["A21".into()]);
    p.outputs.insert("B2".into(), vec!["A12".into()]);
    p.prior_ebits = 2;

    p.step(NodeId::A1, Action::BellMeasure { pair: ("A1".into(), "A11".into()), record: "X1".into() });
    p.step(NodeId::A2, Action::BellMeasure { pair: ("A2".into(), "A22".into()), record: "X2".into() });
    p.step(
        NodeId::A1,
        Action::ApplyCorrection { outcomes: vec!["X1".into()], inverse: true, target: "A12".into() },
    );
    p.step(
        NodeId::A2,
        Action::ApplyCorrection { outcomes: vec!["X2".into()], inverse: true, target: "A21".into() },
    );
    p.step(NodeId::A1, Action::SendQuantum { channel: ChannelId::E1, register: "A12".into() });
    p.step(NodeId::A2, Action::SendQuantum { channel: ChannelId::E2, register: "A21".into() });
    p.step(
        NodeId::A1,
        Action::SendClassical {
            channel: ChannelId::D1,
            bits: vec![BitExpr::outcome_bit("X1", 0), BitExpr::outcome_bit("X1", 1)],
        },
    );
    p.step(
        NodeId::A2,
        Action::SendClassical {
            channel: ChannelId::D2,
            bits: vec![BitExpr::outcome_bit("X2", 0), BitExpr::outcome_bit("X2", 1)],
        },
    );
    p.cut(CutId::AfterSends);
    let xor_bits = vec![BitExpr::xor(&["X1", "X2"], 0), BitExpr::xor(&["X1", "X2"], 1)];
    p.step(NodeId::C1, Action::SendClassical { channel: ChannelId::F, bits: xor_bits.clone() });
    p.cut(CutId::AfterBottleneck);
    p.step(NodeId::C2, Action::SendClassical { channel: ChannelId::G1, bits: xor_bits.clone() });
    p.step(NodeId::C2, Action::SendClassical { channel: ChannelId::G2, bits: xor_bits });
    p.step(
        NodeId::B1,
        Action::ApplyCorrection {
            outcomes: vec!["X1".into(), "X2".into()],
            inverse: false,
            target: "A21".into(),
        },
    );
    p.step(
        NodeId::B2,
        Action::ApplyCorrection {
            outcomes: vec!["X1".into(), "X2".into()],
            inverse: false,
            target: "A12".into(),
        },
    );
    p.cut(CutId::Final);
    p
}

fn two_ebits() -> Result<PureState> {
    PureState::phi_plus("A11", "A21")?.tensor(&PureState::phi_plus("A12", "A22")?)
}

fn single_qubit_named(psi: &PureState, name: &str) -> Result<PureState> {
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "protocol input must be a single qubit, got dimension {}",
            psi.dim()
        )));
    }
    PureState::new(
        crate::layout::RegisterLayout::single(name, 2)?,
        psi.amplitudes().to_vec(),
    )
}

/// Runs the prior-entanglement protocol on two product inputs.
pub fn entangled_protocol(
    psi1: &PureState,
    psi2: &PureState,
    mode: RunMode,
) -> Result<(ProtocolResult, ExecutionTrace)> {
    let a1 = single_qubit_named(psi1, "A1")?;
    let a2 = single_qubit_named(psi2, "A2")?;
    let initial = a1.tensor(&a2)?.tensor(&two_ebits()?)?.to_density();
    let program = entangled_program(&[]);
    let trace = crate::net::run_protocol(&entangled_topology(), &program, &initial, mode)?;

    let mut branches = Vec::new();
    for b in &trace.branches {
        let state = b.final_state.as_ref().expect("engine keeps final states");
        let f1 = state.partial_trace(&["A21"])?.fidelity(&a1)?;
        let f2 = state.partial_trace(&["A12"])?.fidelity(&a2)?;
        branches.push(BranchOutcome {
            label: outcome_label(&b.outcomes),
            probability: b.probability,
            fidelity_1: f1,
            fidelity_2: f2,
        });
    }
    Ok((ProtocolResult::from_branches("entangled", branches), trace))
}

/// Runs the prior-entanglement protocol on a joint input.
///
/// `phi` must contain qubit registers `A1` and `A2`; any further registers
/// are references that no node touches. Per branch, the output on
/// (B1, B2, references) is compared against `phi` itself — fidelity 1 means
/// the joint state (entanglement with references included) was recovered
/// exactly up to a global phase.
pub fn entangled_protocol_joint(
    phi: &PureState,
    mode: RunMode,
) -> Result<(ProtocolResult, ExecutionTrace)> {
    for required in ["A1", "A2"] {
        if phi.layout().dim_of(required)? != 2 {
            return Err(Error::DimensionMismatch(format!("register `{required}` must be a qubit")));
        }
    }
    let reference_regs: Vec<String> = phi
        .layout()
        .names()
        .filter(|n| *n != "A1" && *n != "A2")
        .map(str::to_string)
        .collect();
    let initial = phi.tensor(&two_ebits()?)?.to_density();
    let program = entangled_program(&[]);
    let trace = crate::net::run_protocol(&entangled_topology(), &program, &initial, mode)?;

    // Compare against phi with B-side registers standing in for the inputs.
    let out_order: Vec<String> = phi
        .layout()
        .names()
        .map(|n| match n {
            "A1" => "A21".to_string(),
            "A2" => "A12".to_string(),
            other => other.to_string(),
        })
        .collect();
    let out_refs: Vec<&str> = out_order.iter().map(String::as_str).collect();

    let mut branches = Vec::new();
    for b in &trace.branches {
        let state = b.final_state.as_ref().expect("engine keeps final states");
        let keep: Vec<&str> = state
            .layout()
            .names()
            .filter(|n| out_refs.contains(n))
            .collect();
        let joint = state.partial_trace(&keep)?.reorder(&out_refs)?;
        let f = joint.fidelity(phi)?;
        branches.push(BranchOutcome {
            label: outcome_label(&b.outcomes),
            probability: b.probability,
            fidelity_1: f,
            fidelity_2: f,
        });
    }
    let _ = reference_regs;
    Ok((ProtocolResult::from_branches("entangled-joint", branches), trace))
}

/// Reference-mode run of the prior-entanglement protocol: both inputs are
/// halves of Φ+ pairs with R1, R2. This is the trace the audits inspect.
pub fn entangled_reference_trace(mode: RunMode) -> Result<ExecutionTrace> {
    let initial = PureState::phi_plus("R1", "A1")?
        .tensor(&PureState::phi_plus("R2", "A2")?)?
        .tensor(&two_ebits()?)?
        .to_density();
    let program = entangled_program(&[
        ("R1", vec!["R1".to_string()]),
        ("R2", vec!["R2".to_string()]),
    ]);
    crate::net::run_protocol(&entangled_topology(), &program, &initial, mode)
}

// ---------------------------------------------------------------------------
// Classical XOR protocol
// ---------------------------------------------------------------------------

/// The classical network code: one bit per edge, XOR relay at the
/// bottleneck, each receiver recovers its bit by summing the two bits it
/// hears.
pub fn classical_xor_protocol(x1: bool, x2: bool) -> Result<(bool, bool, ExecutionTrace)> {
    let topology = Topology::butterfly_uniform(Capacity::TwoCbits);
    let mut p = Program::new();
    p.step(NodeId::A1, Action::SendClassical { channel: ChannelId::D1, bits: vec![BitExpr::constant(x1)] });
    p.step(NodeId::A2, Action::SendClassical { channel: ChannelId::D2, bits: vec![BitExpr::constant(x2)] });
    p.step(NodeId::A1, Action::SendClassical { channel: ChannelId::E1, bits: vec![BitExpr::constant(x1)] });
    p.step(NodeId::A2, Action::SendClassical { channel: ChannelId::E2, bits: vec![BitExpr::constant(x2)] });
    p.cut(CutId::AfterSends);
    let xor = BitExpr::constant(x1 ^ x2);
    p.step(NodeId::C1, Action::SendClassical { channel: ChannelId::F, bits: vec![xor.clone()] });
    p.cut(CutId::AfterBottleneck);
    p.step(NodeId::C2, Action::SendClassical { channel: ChannelId::G1, bits: vec![xor.clone()] });
    p.step(NodeId::C2, Action::SendClassical { channel: ChannelId::G2, bits: vec![xor] });
    p.cut(CutId::Final);

    let initial = DensityOperator::maximally_mixed(crate::layout::RegisterLayout::new(
        Vec::<(String, usize)>::new(),
    )?);
    let trace = crate::net::run_protocol(&topology, &p, &initial, RunMode::EnumerateBranches)?;
    // B1 hears x2 on E2 and x1⊕x2 on G1; the sum is x1. Mirrored for B2.
    let b1 = x2 ^ (x1 ^ x2);
    let b2 = x1 ^ (x1 ^ x2);
    Ok((b1, b2, trace))
}

/// [`classical_xor_protocol`] wrapped as a [`ProtocolResult`].
pub fn classical_xor_result(x1: bool, x2: bool) -> Result<(ProtocolResult, ExecutionTrace)> {
    let (b1, b2, trace) = classical_xor_protocol(x1, x2)?;
    let exact_1 = if b1 == x1 { 1.0 } else { 0.0 };
    let exact_2 = if b2 == x2 { 1.0 } else { 0.0 };
    let mut result = ProtocolResult::from_branches(
        "classical-xor",
        vec![BranchOutcome {
            label: format!("x1={} x2={}", u8::from(x1), u8::from(x2)),
            probability: 1.0,
            fidelity_1: exact_1,
            fidelity_2: exact_2,
        }],
    );
    result.classical_outputs = Some((b1, b2));
    Ok((result, trace))
}

// ---------------------------------------------------------------------------
// No-entanglement baselines
// ---------------------------------------------------------------------------

fn baseline_topology() -> Topology {
    Topology::butterfly_with([
        (ChannelId::D1, Capacity::OneQubit),
        (ChannelId::D2, Capacity::TwoCbits),
        (ChannelId::E1, Capacity::TwoCbits),
        (ChannelId::E2, Capacity::TwoCbits),
        (ChannelId::F, Capacity::OneQubit),
        (ChannelId::G1, Capacity::OneQubit),
        (ChannelId::G2, Capacity::TwoCbits),
    ])
}

/// Steps of the route-and-estimate baseline.
///
/// Side 1 routes its qubit through D1 → F → G1 and arrives perfectly. Side
/// 2 cannot reach B2 once the bottleneck is spent, so A2 measures in a
/// seeded random basis and spends its one remaining channel use (E2) on the
/// outcome bit; B2 reprepares the basis state. Classical outcomes are
/// readable network-wide once sent, so B2 may use the bit even though E2's
/// far end is B1.
fn baseline_program(basis: &ComplexMatrix, reference: bool) -> Program {
    let mut p = Program::new();
    p.placement.insert("P1".into(), NodeId::A1);
    p.placement.insert("P2".into(), NodeId::A2);
    if reference {
        p.reference_groups.insert("R1".into(), vec!["R1".into()]);
        p.reference_groups.insert("R2".into(), vec!["R2".into()]);
    }
    p.outputs.insert("B1".into(), vec!["P1".into()]);
    p.outputs.insert("B2".into(), vec!["B2out".into()]);

    p.step(NodeId::A1, Action::SendQuantum { channel: ChannelId::D1, register: "P1".into() });
    p.step(NodeId::A2, Action::measure_basis("P2", basis, "M2"));
    p.step(
        NodeId::A2,
        Action::SendClassical { channel: ChannelId::E2, bits: vec![BitExpr::outcome_bit("M2", 0)] },
    );
    p.cut(CutId::AfterSends);
    p.step(NodeId::C1, Action::SendQuantum { channel: ChannelId::F, register: "P1".into() });
    p.cut(CutId::AfterBottleneck);
    p.step(NodeId::C2, Action::SendQuantum { channel: ChannelId::G1, register: "P1".into() });
    p.step(NodeId::B2, Action::prepare_from_bit("B2out", basis, BitExpr::outcome_bit("M2", 0)));
    p.cut(CutId::Final);
    p
}

/// Seeded random measurement basis for the baseline estimator.
pub fn baseline_basis(seed: u64) -> ComplexMatrix {
    haar_unitary(2, &mut seeded_rng(seed))
}

/// The no-entanglement baseline on concrete inputs.
pub fn baseline_route_and_estimate(
    psi1: &PureState,
    psi2: &PureState,
    basis_seed: u64,
    mode: RunMode,
) -> Result<(ProtocolResult, ExecutionTrace)> {
    let p1 = single_qubit_named(psi1, "P1")?;
    let p2 = single_qubit_named(psi2, "P2")?;
    let basis = baseline_basis(basis_seed);
    let initial = p1.tensor(&p2)?.to_density();
    let program = baseline_program(&basis, false);
    let trace = crate::net::run_protocol(&baseline_topology(), &program, &initial, mode)?;

    let mut branches = Vec::new();
    for b in &trace.branches {
        let state = b.final_state.as_ref().expect("engine keeps final states");
        let f1 = state.partial_trace(&["P1"])?.fidelity(&p1)?;
        let f2 = state.partial_trace(&["B2out"])?.fidelity(&p2)?;
        branches.push(BranchOutcome {
            label: outcome_label(&b.outcomes),
            probability: b.probability,
            fidelity_1: f1,
            fidelity_2: f2,
        });
    }
    Ok((ProtocolResult::from_branches("baseline", branches), trace))
}

/// Reference-mode baseline trace for the audits.
pub fn baseline_reference_trace(basis_seed: u64, mode: RunMode) -> Result<ExecutionTrace> {
    let basis = baseline_basis(basis_seed);
    let initial = PureState::phi_plus("R1", "P1")?
        .tensor(&PureState::phi_plus("R2", "P2")?)?
        .to_density();
    let program = baseline_program(&basis, true);
    crate::net::run_protocol(&baseline_topology(), &program, &initial, mode)
}

/// Measure-everything contrast protocol: both senders measure, both bits
/// share the bottleneck as classical information, both receivers reprepare.
/// Average fidelity 2/3 per side; exercises the classical-F branch of the
/// audit.
fn measure_forward_program(basis1: &ComplexMatrix, basis2: &ComplexMatrix, reference: bool) -> Program {
    let mut p = Program::new();
    p.placement.insert("P1".into(), NodeId::A1);
    p.placement.insert("P2".into(), NodeId::A2);
    if reference {
        p.reference_groups.insert("R1".into(), vec!["R1".into()]);
        p.reference_groups.insert("R2".into(), vec!["R2".into()]);
    }
    p.outputs.insert("B1".into(), vec!["B1out".into()]);
    p.outputs.insert("B2".into(), vec!["B2out".into()]);

    p.step(NodeId::A1, Action::measure_basis("P1", basis1, "M1"));
    p.step(NodeId::A2, Action::measure_basis("P2", basis2, "M2"));
    p.step(
        NodeId::A1,
        Action::SendClassical { channel: ChannelId::D1, bits: vec![BitExpr::outcome_bit("M1", 0)] },
    );
    p.step(
        NodeId::A2,
        Action::SendClassical { channel: ChannelId::D2, bits: vec![BitExpr::outcome_bit("M2", 0)] },
    );
    p.cut(CutId::AfterSends);
    p.step(
        NodeId::C1,
        Action::SendClassical {
            channel: ChannelId::F,
            bits: vec![BitExpr::outcome_bit("M1", 0), BitExpr::outcome_bit("M2", 0)],
        },
    );
    p.cut(CutId::AfterBottleneck);
    p.step(
        NodeId::C2,
        Action::SendClassical { channel: ChannelId::G1, bits: vec![BitExpr::outcome_bit("M1", 0)] },
    );
    p.step(
        NodeId::C2,
        Action::SendClassical { channel: ChannelId::G2, bits: vec![BitExpr::outcome_bit("M2", 0)] },
    );
    p.step(NodeId::B1, Action::prepare_from_bit("B1out", basis1, BitExpr::outcome_bit("M1", 0)));
    p.step(NodeId::B2, Action::prepare_from_bit("B2out", basis2, BitExpr::outcome_bit("M2", 0)));
    p.cut(CutId::Final);
    p
}

/// The measure-everything protocol on concrete inputs.
pub fn measure_forward_protocol(
    psi1: &PureState,
    psi2: &PureState,
    basis_seed: u64,
    mode: RunMode,
) -> Result<(ProtocolResult, ExecutionTrace)> {
    let p1 = single_qubit_named(psi1, "P1")?;
    let p2 = single_qubit_named(psi2, "P2")?;
    let mut rng = seeded_rng(basis_seed);
    let basis1 = haar_unitary(2, &mut rng);
    let basis2 = haar_unitary(2, &mut rng);
    let initial = p1.tensor(&p2)?.to_density();
    let program = measure_forward_program(&basis1, &basis2, false);
    let topology = Topology::butterfly_uniform(Capacity::TwoCbits);
    let trace = crate::net::run_protocol(&topology, &program, &initial, mode)?;

    let mut branches = Vec::new();
    for b in &trace.branches {
        let state = b.final_state.as_ref().expect("engine keeps final states");
        let f1 = state.partial_trace(&["B1out"])?.fidelity(&p1)?;
        let f2 = state.partial_trace(&["B2out"])?.fidelity(&p2)?;
        branches.push(BranchOutcome {
            label: outcome_label(&b.outcomes),
            probability: b.probability,
            fidelity_1: f1,
            fidelity_2: f2,
        });
    }
    Ok((ProtocolResult::from_branches("measure-forward", branches), trace))
}

/// Reference-mode measure-everything trace.
pub fn measure_forward_reference_trace(basis_seed: u64, mode: RunMode) -> Result<ExecutionTrace> {
    let mut rng = seeded_rng(basis_seed);
    let basis1 = haar_unitary(2, &mut rng);
    let basis2 = haar_unitary(2, &mut rng);
    let initial = PureState::phi_plus("R1", "P1")?
        .tensor(&PureState::phi_plus("R2", "P2")?)?
        .to_density();
    let program = measure_forward_program(&basis1, &basis2, true);
    let topology = Topology::butterfly_uniform(Capacity::TwoCbits);
    crate::net::run_protocol(&topology, &program, &initial, mode)
}

/// Monte Carlo Haar-average fidelity of the baseline over `trials` input
/// pairs, exact per trial (branch-enumerated).
pub fn baseline_haar_average(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded_rng(seed);
    let mut acc = 0.0;
    for trial in 0..trials {
        let psi1 = haar_qubit("in1", &mut rng);
        let psi2 = haar_qubit("in2", &mut rng);
        let (result, _) = baseline_route_and_estimate(
            &psi1,
            &psi2,
            seed.wrapping_add(trial as u64).wrapping_mul(0x9e37_79b9),
            RunMode::EnumerateBranches,
        )?;
        acc += result.average;
    }
    Ok(acc / trials as f64)
}
