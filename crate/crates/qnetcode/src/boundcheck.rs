//! Numerical audit of the impossibility chain for no-entanglement runs.
//!
//! Given a reference-mode trace, [`audit_chain`] evaluates every inequality
//! of the bound's derivation against the actual entropic values at three
//! cuts (after the sender transmissions, after the bottleneck, and at the
//! end), and [`verify_bound_on_protocol`] checks the resulting fidelity cap
//! two independent ways: directly against the threshold, and through the
//! twirled-channel entropy route.
//!
//! The chain is only meaningful when the sender sides start uncorrelated;
//! [`audit_independence`] quantifies that, and a trace that shows prior
//! entanglement makes the audit report itself not applicable.

use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::entropy::{
    average_fidelity_from_fe, group_entropy, mutual_information, solve_eta_inverse,
    von_neumann_entropy, FidelityReport, INEQ_TOL,
};
use crate::error::{Error, Result};
use crate::net::{Capacity, CutId, CutSnapshot, ExecutionTrace};
use crate::protocols::ProtocolResult;
use crate::state::DensityOperator;

/// Slack allowed when comparing an average fidelity against the threshold;
/// the threshold itself is only pinned to the solver tolerance.
pub const FIDELITY_SLACK: f64 = 1e-6;

/// The two fidelity ceilings for no-entanglement protocols.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    /// Upper bound on (f_e,1 + f_e,2)/2: the root of η(x) = 1/2.
    pub fe_max: f64,
    /// Upper bound on (f1 + f2)/2: (1 + 2·fe_max)/3.
    pub favg_max: f64,
}

/// Computes the thresholds from scratch: ≈ 0.9256 and ≈ 0.9504.
pub fn fidelity_thresholds() -> Thresholds {
    let fe_max = solve_eta_inverse(0.5).expect("0.5 is in range");
    let favg_max = average_fidelity_from_fe(fe_max).expect("root lies in [1/4, 1]");
    Thresholds { fe_max, favg_max }
}

/// Identifier of one link in the inequality chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityId {
    /// I(R1:E1) + I(R1:B1) ≤ 2H(R1).
    #[serde(rename = "4-16-2")]
    ImaiSideOne,
    /// I(R2:E2) + I(R2:B2) ≤ 2H(R2).
    #[serde(rename = "4-16-3")]
    ImaiSideTwo,
    /// The cross-term identity relating grouped and per-side mutual
    /// informations; an equality.
    #[serde(rename = "4-16-4")]
    CrossDecomposition,
    /// I(R1R2:F|E1E2) ≤ 2H(F) when the bottleneck carried a qubit.
    #[serde(rename = "4-16-5")]
    BottleneckQuantum,
    /// I(R1R2:F|E1E2) ≤ H(F) when the bottleneck carried classical bits.
    #[serde(rename = "4-16-6")]
    BottleneckClassical,
    /// I(R1R2:B1B2) ≤ 2 + (2H(R1) − I(R1:B1)) + (2H(R2) − I(R2:B2)).
    #[serde(rename = "4-16-7")]
    Combined,
    /// (f1 + f2)/2 ≤ favg_max, from the per-side channels the trace induces.
    #[serde(rename = "final")]
    FidelityCap,
}

impl std::fmt::Display for InequalityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InequalityId::ImaiSideOne => "4-16-2",
            InequalityId::ImaiSideTwo => "4-16-3",
            InequalityId::CrossDecomposition => "4-16-4",
            InequalityId::BottleneckQuantum => "4-16-5",
            InequalityId::BottleneckClassical => "4-16-6",
            InequalityId::Combined => "4-16-7",
            InequalityId::FidelityCap => "final",
        };
        f.write_str(s)
    }
}

/// One evaluated inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainEntry {
    pub id: InequalityId,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    /// True for entries that must hold with equality.
    pub is_equality: bool,
}

impl ChainEntry {
    fn le(id: InequalityId, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self { id, lhs, rhs, slack, holds: slack >= -tol, is_equality: false }
    }

    fn eq(id: InequalityId, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self { id, lhs, rhs, slack, holds: slack.abs() <= tol, is_equality: true }
    }
}

/// How uncorrelated the two sender sides are at the post-send cut.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IndependenceReport {
    /// I(R1 E1 : R2 E2).
    pub senders_value: f64,
    /// I(R1 E1 D1 : R2 E2 D2), the quantity that must vanish.
    pub full_value: f64,
    pub independent: bool,
}

/// Full audit outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    /// False when the trace shows prior entanglement; the entries are then
    /// empty and only the independence numbers are meaningful.
    pub applicable: bool,
    pub independence: IndependenceReport,
    pub entries: Vec<ChainEntry>,
    pub thresholds: Thresholds,
    /// Per-side fidelity summaries extracted from the final cut, when the
    /// trace exposes both reference-output pairs.
    pub side_fidelities: Option<(FidelityReport, FidelityReport)>,
}

impl ChainReport {
    pub fn all_hold(&self) -> bool {
        self.applicable && self.entries.iter().all(|e| e.holds)
    }
}

fn group<'a>(snap: &'a CutSnapshot, role: &str) -> Vec<&'a str> {
    snap.groups
        .get(role)
        .map(|v| v.iter().map(String::as_str).collect())
        .unwrap_or_default()
}

/// Mutual information that treats an empty group as a trivial subsystem.
fn mi(state: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    mutual_information(state, a, b)
}

fn join<'a>(parts: &[&[&'a str]]) -> Vec<&'a str> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

/// I(R1 E1 [D1] : R2 E2 [D2]) at the post-send cut.
pub fn audit_independence(trace: &ExecutionTrace) -> Result<IndependenceReport> {
    let snap = trace.cut(CutId::AfterSends)?;
    let (r1, r2) = (group(snap, "R1"), group(snap, "R2"));
    let (e1, e2) = (group(snap, "E1"), group(snap, "E2"));
    let (d1, d2) = (group(snap, "D1"), group(snap, "D2"));
    let senders_value = mi(&snap.state, &join(&[&r1, &e1]), &join(&[&r2, &e2]))?;
    let full_value = mi(&snap.state, &join(&[&r1, &e1, &d1]), &join(&[&r2, &e2, &d2]))?;
    Ok(IndependenceReport { senders_value, full_value, independent: full_value <= INEQ_TOL })
}

/// The channel from side `side`'s input to its output, reconstructed from
/// the (R_i, B_i) marginal of the final cut.
pub fn side_channel_from_trace(trace: &ExecutionTrace, side: u8) -> Result<KrausChannel> {
    let snap = trace.cut(CutId::Final)?;
    let (r_role, b_role) = match side {
        1 => ("R1", "B1"),
        2 => ("R2", "B2"),
        _ => return Err(Error::OutOfRange(format!("side must be 1 or 2, got {side}"))),
    };
    let r = group(snap, r_role);
    let b = group(snap, b_role);
    if r.len() != 1 || b.len() != 1 {
        return Err(Error::TraceIncomplete(format!(
            "final cut lacks a ({r_role}, {b_role}) qubit pair"
        )));
    }
    let marginal = snap.state.partial_trace(&join(&[&r, &b]))?.reorder(&join(&[&r, &b]))?;
    KrausChannel::from_reference_state(&marginal)
}

/// Evaluates the full inequality chain on a reference-mode trace.
///
/// Traces with prior entanglement are reported as not applicable rather
/// than failed: the chain's premise (sender independence) does not hold
/// for them.
pub fn audit_chain(trace: &ExecutionTrace) -> Result<ChainReport> {
    let independence = audit_independence(trace)?;
    let thresholds = fidelity_thresholds();
    if !independence.independent {
        return Ok(ChainReport {
            applicable: false,
            independence,
            entries: Vec::new(),
            thresholds,
            side_fidelities: None,
        });
    }

    let alpha = trace.cut(CutId::AfterSends)?;
    let beta = trace.cut(CutId::AfterBottleneck)?;
    let gamma = trace.cut(CutId::Final)?;

    let (r1a, r2a) = (group(alpha, "R1"), group(alpha, "R2"));
    let (e1a, e2a) = (group(alpha, "E1"), group(alpha, "E2"));
    let h_r1 = group_entropy(&alpha.state, &r1a)?;
    let h_r2 = group_entropy(&alpha.state, &r2a)?;
    let i_r1_e1 = mi(&alpha.state, &r1a, &e1a)?;
    let i_r2_e2 = mi(&alpha.state, &r2a, &e2a)?;
    let i_rr_ee = mi(&alpha.state, &join(&[&r1a, &r2a]), &join(&[&e1a, &e2a]))?;
    let i_r1_r2 = mi(&alpha.state, &r1a, &r2a)?;
    let i_e1_e2 = mi(&alpha.state, &e1a, &e2a)?;
    let i_re_re = mi(&alpha.state, &join(&[&r1a, &e1a]), &join(&[&r2a, &e2a]))?;

    let (r1g, r2g) = (group(gamma, "R1"), group(gamma, "R2"));
    let (b1g, b2g) = (group(gamma, "B1"), group(gamma, "B2"));
    let i_r1_b1 = mi(&gamma.state, &r1g, &b1g)?;
    let i_r2_b2 = mi(&gamma.state, &r2g, &b2g)?;
    let i_rr_bb = mi(&gamma.state, &join(&[&r1g, &r2g]), &join(&[&b1g, &b2g]))?;

    let mut entries = vec![
        ChainEntry::le(InequalityId::ImaiSideOne, i_r1_e1 + i_r1_b1, 2.0 * h_r1, INEQ_TOL),
        ChainEntry::le(InequalityId::ImaiSideTwo, i_r2_e2 + i_r2_b2, 2.0 * h_r2, INEQ_TOL),
        ChainEntry::eq(
            InequalityId::CrossDecomposition,
            i_rr_ee - i_r1_e1 - i_r2_e2,
            -i_r1_r2 - i_e1_e2 + i_re_re,
            INEQ_TOL,
        ),
    ];

    // Bottleneck step at the cut just after F was used.
    let (r1b, r2b) = (group(beta, "R1"), group(beta, "R2"));
    let (e1b, e2b) = (group(beta, "E1"), group(beta, "E2"));
    let f_group = group(beta, "F");
    let h_f = group_entropy(&beta.state, &f_group)?;
    let senders = join(&[&r1b, &r2b]);
    let cond = if f_group.is_empty() || senders.is_empty() {
        0.0
    } else {
        crate::entropy::conditional_mutual_information(
            &beta.state,
            &senders,
            &f_group,
            &join(&[&e1b, &e2b]),
        )?
    };
    entries.push(match trace.bottleneck_payload {
        Some(Capacity::OneQubit) => {
            ChainEntry::le(InequalityId::BottleneckQuantum, cond, 2.0 * h_f, INEQ_TOL)
        }
        _ => ChainEntry::le(InequalityId::BottleneckClassical, cond, h_f, INEQ_TOL),
    });

    entries.push(ChainEntry::le(
        InequalityId::Combined,
        i_rr_bb,
        2.0 + (2.0 * h_r1 - i_r1_b1) + (2.0 * h_r2 - i_r2_b2),
        INEQ_TOL,
    ));

    // Fidelity cap from the per-side channels the trace induces.
    let side_fidelities = match (side_channel_from_trace(trace, 1), side_channel_from_trace(trace, 2))
    {
        (Ok(k1), Ok(k2)) => {
            let f1 = FidelityReport::from_entanglement_fidelity(k1.entanglement_fidelity()?)?;
            let f2 = FidelityReport::from_entanglement_fidelity(k2.entanglement_fidelity()?)?;
            entries.push(ChainEntry::le(
                InequalityId::FidelityCap,
                0.5 * (f1.average_fidelity + f2.average_fidelity),
                thresholds.favg_max,
                FIDELITY_SLACK,
            ));
            Some((f1, f2))
        }
        _ => None,
    };

    Ok(ChainReport { applicable: true, independence, entries, thresholds, side_fidelities })
}

/// Verdict of [`verify_bound_on_protocol`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundVerdict {
    pub average_fidelity: f64,
    pub favg_max: f64,
    pub within_bound: bool,
    /// H(R1B1) + H(R2B2) for the Pauli-twirled per-side channels; the chain
    /// forces this to be at least 1.
    pub twirl_entropy_sum: f64,
    pub twirl_bound_holds: bool,
}

/// Checks a protocol result against the no-entanglement fidelity cap, and
/// re-derives the cap's key intermediate on the twirled per-side channels.
///
/// Errors with [`Error::PriorEntanglement`] when the trace's sender sides
/// are not independent — the bound does not apply there.
pub fn verify_bound_on_protocol(
    result: &ProtocolResult,
    trace: &ExecutionTrace,
) -> Result<BoundVerdict> {
    let independence = audit_independence(trace)?;
    if !independence.independent {
        return Err(Error::PriorEntanglement { independence: independence.senders_value });
    }
    let thresholds = fidelity_thresholds();
    let within_bound = result.average <= thresholds.favg_max + FIDELITY_SLACK;

    let mut twirl_entropy_sum = 0.0;
    for side in [1, 2] {
        let kappa = side_channel_from_trace(trace, side)?;
        let twirled = kappa.pauli_twirl()?;
        twirl_entropy_sum += von_neumann_entropy(&twirled.reference_state()?);
    }
    Ok(BoundVerdict {
        average_fidelity: result.average,
        favg_max: thresholds.favg_max,
        within_bound,
        twirl_entropy_sum,
        twirl_bound_holds: twirl_entropy_sum >= 1.0 - INEQ_TOL,
    })
}
