//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with
//! `cargo test -p qnetcode --test acceptance -- --nocapture`.

use std::time::Instant;

use qnetcode::boundcheck::{audit_chain, audit_independence, fidelity_thresholds, InequalityId};
use qnetcode::channel::KrausChannel;
use qnetcode::entropy::{
    average_fidelity_from_fe, check_imai_sum, check_quantum_fano,
    conditional_mutual_information, mutual_information, solve_eta_inverse, von_neumann_entropy,
};
use qnetcode::layout::RegisterLayout;
use qnetcode::net::RunMode;
use qnetcode::protocols::{
    baseline_haar_average, baseline_reference_trace, classical_xor_protocol, entangled_protocol,
    entangled_protocol_joint,
};
use qnetcode::sampling::{haar_qubit, haar_state, random_density, random_qubit_channel, seeded_rng};
use qnetcode::state::PureState;

fn pass(n: u32, what: &str) {
    println!("[PASS] criterion {n}: {what}");
}

/// Criterion 1: the prior-entanglement protocol moves 100 Haar-random input
/// pairs perfectly through every one of the 16 measurement branches.
#[test]
fn criterion_1_perfect_crossed_transmission() {
    let started = Instant::now();
    let mut rng = seeded_rng(0xC1);
    let mut min_fidelity = f64::INFINITY;
    for _ in 0..100 {
        let psi1 = haar_qubit("in1", &mut rng);
        let psi2 = haar_qubit("in2", &mut rng);
        let (result, _) =
            entangled_protocol(&psi1, &psi2, RunMode::EnumerateBranches).unwrap();
        assert_eq!(result.branches.len(), 16);
        min_fidelity = min_fidelity.min(result.min_branch_fidelity);
    }
    let elapsed = started.elapsed();
    assert!(min_fidelity >= 1.0 - 1e-9, "min branch fidelity {min_fidelity}");
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(1, &format!(
        "100 Haar pairs, 16 branches each, min fidelity {min_fidelity:.3e} above 1-1e-9 in {elapsed:.2?}"
    ));
}

/// Criterion 2: entangled inputs come through exactly — the branch phases
/// cancel for a Bell state shared with a reference and for entanglement
/// across the two senders.
#[test]
fn criterion_2_entangled_input_phase_cancellation() {
    let bell_with_ref = PureState::phi_plus("R", "A1")
        .unwrap()
        .tensor(&PureState::ket_zero("A2"))
        .unwrap();
    let (result, _) =
        entangled_protocol_joint(&bell_with_ref, RunMode::EnumerateBranches).unwrap();
    assert_eq!(result.branches.len(), 16);
    assert!(result.min_branch_fidelity >= 1.0 - 1e-9, "bell-ref: {}", result.min_branch_fidelity);
    let min_a = result.min_branch_fidelity;

    let bell_senders = PureState::phi_plus("A1", "A2").unwrap();
    let (result, _) =
        entangled_protocol_joint(&bell_senders, RunMode::EnumerateBranches).unwrap();
    assert!(
        result.min_branch_fidelity >= 1.0 - 1e-9,
        "bell-senders: {}",
        result.min_branch_fidelity
    );
    pass(2, &format!(
        "joint-input fidelity 1 within 1e-9 on every branch (worst {:.3e})",
        min_a.min(result.min_branch_fidelity)
    ));
}

/// Criterion 3: the two fidelity thresholds come out of the η solver at the
/// published values.
#[test]
fn criterion_3_threshold_reproduction() {
    let fe = solve_eta_inverse(0.5).unwrap();
    assert!((fe - 0.9256).abs() <= 5e-4, "fe_max = {fe}");
    let favg = average_fidelity_from_fe(fe).unwrap();
    assert!((favg - 0.9504).abs() <= 5e-4, "favg_max = {favg}");
    let t = fidelity_thresholds();
    assert!((t.fe_max - fe).abs() < 1e-12 && (t.favg_max - favg).abs() < 1e-12);
    pass(3, &format!("fe_max = {fe:.6}, favg_max = {favg:.6}"));
}

/// Criterion 4: the classical XOR code recovers all four input pairs with
/// one bit per edge.
#[test]
fn criterion_4_classical_protocol_correctness() {
    for (x1, x2) in [(false, false), (true, false), (false, true), (true, true)] {
        let (b1, b2, trace) = classical_xor_protocol(x1, x2).unwrap();
        assert_eq!((b1, b2), (x1, x2), "inputs ({x1}, {x2})");
        for (ch, usage) in &trace.channel_uses {
            assert!(usage.cbits <= 1 && usage.qubits == 0, "channel {ch} carried too much");
        }
    }
    pass(4, "all 4 input pairs recovered exactly, at most 1 bit per edge");
}

/// Criterion 5: on the no-entanglement baseline the whole inequality chain
/// holds, the cross-term identity is an equality, the senders audit as
/// independent, and the measured Haar-average fidelity sits at 5/6, below
/// the cap.
#[test]
fn criterion_5_chain_audit_on_baseline() {
    let trace = baseline_reference_trace(0, RunMode::EnumerateBranches).unwrap();
    let report = audit_chain(&trace).unwrap();
    assert!(report.applicable);
    for e in &report.entries {
        if e.is_equality {
            assert!(e.slack.abs() <= 1e-9, "{} is not an equality: slack {}", e.id, e.slack);
        } else {
            assert!(e.slack >= -1e-9, "{} violated: slack {}", e.id, e.slack);
        }
    }
    assert!(report
        .entries
        .iter()
        .any(|e| e.id == InequalityId::CrossDecomposition && e.is_equality));

    let independence = audit_independence(&trace).unwrap();
    assert!(independence.full_value.abs() <= 1e-9);
    assert!(independence.senders_value.abs() <= 1e-9);

    let avg = baseline_haar_average(10_000, 0xBA5E).unwrap();
    assert!((avg - 5.0 / 6.0).abs() <= 0.01, "Haar average = {avg}");
    assert!(avg <= 0.9504);
    pass(5, &format!(
        "chain holds (equality within 1e-9), independence 0, Haar average {avg:.4} = 5/6 ± 0.01 ≤ 0.9504"
    ));
}

/// Criterion 6: the six information-theoretic properties the impossibility
/// proof leans on, each over at least 200 seeded random instances.
#[test]
fn criterion_6_property_suites() {
    // P1 monotonicity: discarding a subsystem cannot raise mutual information.
    let mut rng = seeded_rng(0x61);
    for i in 0..200 {
        let dims = if i % 2 == 0 { [2, 2, 2] } else { [2, 2, 4] };
        let layout =
            RegisterLayout::new([("A", dims[0]), ("B", dims[1]), ("C", dims[2])]).unwrap();
        let rho = random_density(layout, &mut rng);
        let small = mutual_information(&rho, &["A"], &["B"]).unwrap();
        let big = mutual_information(&rho, &["A"], &["B", "C"]).unwrap();
        assert!(big - small >= -1e-9, "monotonicity violated: {small} > {big}");
    }

    // P2 sum bound: I(R:A) + I(R:B) ≤ 2H(R) on 500 random tripartite states.
    let mut rng = seeded_rng(0x62);
    for i in 0..500 {
        let dims = match i % 3 {
            0 => [2, 2, 2],
            1 => [2, 2, 4],
            _ => [2, 4, 2],
        };
        let layout =
            RegisterLayout::new([("R", dims[0]), ("A", dims[1]), ("B", dims[2])]).unwrap();
        let rho = random_density(layout, &mut rng);
        let check = check_imai_sum(&rho, &["R"], &["A"], &["B"]).unwrap();
        assert!(check.holds, "sum bound violated: {} > {}", check.lhs, check.rhs);
    }

    // P3 chain rule as an exact identity on random 3-qubit states.
    let mut rng = seeded_rng(0x63);
    for _ in 0..200 {
        let rho = random_density(RegisterLayout::qubits(3), &mut rng);
        let joint = mutual_information(&rho, &["q0"], &["q1", "q2"]).unwrap();
        let cond = conditional_mutual_information(&rho, &["q0"], &["q1"], &["q2"]).unwrap();
        let direct = mutual_information(&rho, &["q0"], &["q2"]).unwrap();
        assert!((joint - cond - direct).abs() <= 1e-10, "chain rule broke: {joint} vs {} ", cond + direct);
    }

    // P4 convexity of transmission information at λ = 1/2.
    let mut rng = seeded_rng(0x64);
    for _ in 0..200 {
        let k1 = random_qubit_channel(&mut rng);
        let k2 = random_qubit_channel(&mut rng);
        let mix = KrausChannel::mixture(&[(0.5, &k1), (0.5, &k2)]).unwrap();
        let lhs = 0.5 * k1.transmission_information().unwrap()
            + 0.5 * k2.transmission_information().unwrap();
        let rhs = mix.transmission_information().unwrap();
        assert!(lhs - rhs >= -1e-9, "convexity violated: {lhs} < {rhs}");
    }

    // P5 quantum Fano: entropy exchange is capped by η(f_e).
    let mut rng = seeded_rng(0x65);
    for _ in 0..200 {
        let k = random_qubit_channel(&mut rng);
        let fano = check_quantum_fano(&k).unwrap();
        assert!(
            fano.holds,
            "Fano violated: H(RB) = {} > η = {}",
            fano.entropy_exchange, fano.eta_bound
        );
    }

    // P6 twirling: entanglement fidelity invariant to 1e-10, transmission
    // information never increased.
    let mut rng = seeded_rng(0x66);
    for _ in 0..200 {
        let k = random_qubit_channel(&mut rng);
        let tw = k.pauli_twirl().unwrap();
        let fe = k.entanglement_fidelity().unwrap();
        let fe_tw = tw.entanglement_fidelity().unwrap();
        assert!((fe - fe_tw).abs() <= 1e-10, "twirl changed f_e: {fe} vs {fe_tw}");
        let i = k.transmission_information().unwrap();
        let i_tw = tw.transmission_information().unwrap();
        assert!(i - i_tw >= -1e-9, "twirl raised I: {i} < {i_tw}");
    }

    pass(6, "P1-P6 hold on every seeded instance (200-500 each, slack 1e-9; twirl f_e 1e-10)");
}

/// Criterion 7: the closed-form average fidelity (1 + 2f_e)/3 matches a
/// Monte Carlo Haar average for 20 random channels.
#[test]
fn criterion_7_average_fidelity_relation() {
    let mut rng = seeded_rng(0x07);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let kappa = random_qubit_channel(&mut rng);
        let expected =
            average_fidelity_from_fe(kappa.entanglement_fidelity().unwrap()).unwrap();
        let mut acc = 0.0;
        let samples = 10_000;
        for _ in 0..samples {
            let psi = haar_state(RegisterLayout::single("q", 2).unwrap(), &mut rng);
            let out = kappa.apply_matrix(psi.to_density().matrix()).unwrap();
            let ket = psi.amplitudes();
            let mut fid = num_complex::Complex64::new(0.0, 0.0);
            for r in 0..2 {
                for c in 0..2 {
                    fid += ket[r].conj() * out[(r, c)] * ket[c];
                }
            }
            acc += fid.re;
        }
        let mc = acc / samples as f64;
        worst = worst.max((mc - expected).abs());
        assert!(
            (mc - expected).abs() <= 0.01,
            "Monte Carlo {mc} vs (1+2f_e)/3 = {expected}"
        );
    }
    pass(7, &format!(
        "20 channels: Haar-average fidelity matches (1+2f_e)/3 within 0.01 (worst gap {worst:.4})"
    ));
}

/// The impossibility statement itself is universal over all protocols and
/// cannot be established by simulation; criteria 3, 5 and 6 check every
/// step of its derivation instead. This test just pins the expected
/// behavior on the one protocol that beats the cap: the audit must refuse
/// it for lack of sender independence, reporting mutual information 2.
#[test]
fn entangled_protocol_is_out_of_the_bounds_scope() {
    let trace =
        qnetcode::protocols::entangled_reference_trace(RunMode::EnumerateBranches).unwrap();
    let report = audit_chain(&trace).unwrap();
    assert!(!report.applicable);
    assert!((report.independence.senders_value - 2.0).abs() <= 1e-9);
    // And the protocol genuinely beats the no-entanglement cap.
    let mut rng = seeded_rng(9);
    let (result, _) = entangled_protocol(
        &haar_qubit("a", &mut rng),
        &haar_qubit("b", &mut rng),
        RunMode::EnumerateBranches,
    )
    .unwrap();
    assert!(result.average > fidelity_thresholds().favg_max);
    let _ = von_neumann_entropy(&trace.cut(qnetcode::net::CutId::Final).unwrap().state);
}
