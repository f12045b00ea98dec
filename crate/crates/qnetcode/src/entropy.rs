//! Entropic quantities over register groups, the fidelity bookkeeping
//! that links entanglement fidelity to average fidelity, and executable
//! checks of the entropy inequalities the network audit rests on.
//!
//! All logarithms are base 2; the fidelity thresholds only come out right
//! in bits.

use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::state::{DensityOperator, EIG_CUTOFF};

/// Slack floor for inequality checks: `holds` iff `rhs - lhs >= -INEQ_TOL`.
pub const INEQ_TOL: f64 = 1e-9;

/// Shannon entropy (bits) of a spectrum; eigenvalues below the cutoff count
/// as exact zeros.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let h: f64 = eigenvalues
        .iter()
        .filter(|&&v| v > EIG_CUTOFF)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// Entropy of the marginal on `group`. An empty group is the trivial
/// subsystem and has entropy 0.
pub fn group_entropy(rho: &DensityOperator, group: &[&str]) -> Result<f64> {
    if group.is_empty() {
        return Ok(0.0);
    }
    Ok(von_neumann_entropy(&rho.partial_trace(group)?))
}

fn check_disjoint(groups: &[&[&str]]) -> Result<()> {
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            if let Some(shared) = a.iter().find(|n| b.contains(n)) {
                return Err(Error::LayoutConflict(format!(
                    "register `{shared}` appears in two groups"
                )));
            }
        }
    }
    Ok(())
}

fn union<'a>(a: &[&'a str], b: &[&'a str]) -> Vec<&'a str> {
    a.iter().chain(b.iter()).copied().collect()
}

/// I(A:B) = H(A) + H(B) − H(AB). Groups must be disjoint and nonempty.
///
/// Tiny negative values from round-off are clamped to zero.
pub fn mutual_information(rho: &DensityOperator, a: &[&str], b: &[&str]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange("mutual information groups must be nonempty".into()));
    }
    check_disjoint(&[a, b])?;
    let v = group_entropy(rho, a)? + group_entropy(rho, b)? - group_entropy(rho, &union(a, b))?;
    Ok(clamp_tiny_negative(v))
}

/// I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C). An empty conditioning group
/// reduces to plain mutual information.
pub fn conditional_mutual_information(
    rho: &DensityOperator,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    if c.is_empty() {
        return mutual_information(rho, a, b);
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::OutOfRange("mutual information groups must be nonempty".into()));
    }
    check_disjoint(&[a, b, c])?;
    let v = group_entropy(rho, &union(a, c))? + group_entropy(rho, &union(b, c))?
        - group_entropy(rho, &union(&union(a, b), c))?
        - group_entropy(rho, c)?;
    Ok(clamp_tiny_negative(v))
}

fn clamp_tiny_negative(v: f64) -> f64 {
    if (-INEQ_TOL..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// η(x) = −x·log₂x − (1−x)·log₂((1−x)/3) without domain checks, using the
/// 0·log 0 = 0 convention at both endpoints.
pub(crate) fn eta_raw(x: f64) -> f64 {
    let first = if x > 0.0 { -x * x.log2() } else { 0.0 };
    let rest = 1.0 - x;
    let second = if rest > 0.0 { -rest * (rest / 3.0).log2() } else { 0.0 };
    first + second
}

/// η(x) = −x·log₂x − (1−x)·log₂((1−x)/3) on (0, 1].
///
/// η(1) = 0, and the maximum value 2 is attained at x = 1/4.
pub fn eta(x: f64) -> Result<f64> {
    if x <= 0.0 || x > 1.0 {
        return Err(Error::OutOfRange(format!("eta defined on (0, 1], got {x}")));
    }
    Ok(eta_raw(x))
}

/// Solves η(x) = target on the decreasing branch x ∈ [1/4, 1] by bisection.
pub fn solve_eta_inverse(target: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&target) {
        return Err(Error::OutOfRange(format!("eta ranges over [0, 2], got target {target}")));
    }
    let (mut lo, mut hi) = (0.25_f64, 1.0_f64);
    // η is strictly decreasing from 2 to 0 on this interval.
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if eta_raw(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// f = (1 + 2·f_e) / 3 for qubit channels.
pub fn average_fidelity_from_fe(f_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_e) {
        return Err(Error::OutOfRange(format!(
            "entanglement fidelity must lie in [0, 1], got {f_e}"
        )));
    }
    Ok((1.0 + 2.0 * f_e) / 3.0)
}

/// Entanglement fidelity together with the average fidelity it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub entanglement_fidelity: f64,
    pub average_fidelity: f64,
}

impl FidelityReport {
    pub fn from_entanglement_fidelity(f_e: f64) -> Result<Self> {
        Ok(Self { entanglement_fidelity: f_e, average_fidelity: average_fidelity_from_fe(f_e)? })
    }
}

/// Outcome of a single inequality evaluation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn le(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: rhs - lhs >= -INEQ_TOL }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// I(R:A) + I(R:B) ≤ 2·H(R), the mutual-information sum bound.
pub fn check_imai_sum(
    rho: &DensityOperator,
    r: &[&str],
    a: &[&str],
    b: &[&str],
) -> Result<InequalityCheck> {
    check_disjoint(&[r, a, b])?;
    let lhs = mutual_information(rho, r, a)? + mutual_information(rho, r, b)?;
    let rhs = 2.0 * group_entropy(rho, r)?;
    Ok(InequalityCheck::le(lhs, rhs))
}

/// Entropy exchange versus the η bound for a qubit channel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FanoCheck {
    pub entropy_exchange: f64,
    pub eta_bound: f64,
    pub holds: bool,
}

/// H(RB) ≤ η(f_e): the entropy of (κ⊗ι)(Φ+) is bounded by η of the
/// channel's entanglement fidelity.
pub fn check_quantum_fano(kappa: &KrausChannel) -> Result<FanoCheck> {
    let reference = kappa.reference_state()?;
    let entropy_exchange = von_neumann_entropy(&reference);
    let f_e = kappa.entanglement_fidelity()?;
    // η extends continuously to f_e = 0 with value log₂3.
    let eta_bound = eta_raw(f_e.clamp(0.0, 1.0));
    Ok(FanoCheck { entropy_exchange, eta_bound, holds: eta_bound - entropy_exchange >= -INEQ_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::RegisterLayout;
    use crate::matrix::ComplexMatrix;
    use crate::state::PureState;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_state(names: &[(&str, usize)], probs: &[f64]) -> DensityOperator {
        let layout = RegisterLayout::new(names.iter().map(|&(n, d)| (n, d))).unwrap();
        let mut m = ComplexMatrix::zeros(probs.len(), probs.len());
        for (i, &p) in probs.iter().enumerate() {
            m[(i, i)] = c(p);
        }
        DensityOperator::new(layout, m).unwrap()
    }

    #[test]
    fn entropy_basics() {
        let pure = PureState::phi_plus("a", "b").unwrap().to_density();
        assert!(von_neumann_entropy(&pure).abs() < 1e-10);
        let mixed = DensityOperator::maximally_mixed(RegisterLayout::single("q", 2).unwrap());
        assert!((von_neumann_entropy(&mixed) - 1.0).abs() < 1e-12);
        let spread = diag_state(&[("a", 2), ("b", 2)], &[0.5, 0.25, 0.25, 0.0]);
        assert!((von_neumann_entropy(&spread) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_basics() {
        let bell = PureState::phi_plus("a", "b").unwrap().to_density();
        assert!((mutual_information(&bell, &["a"], &["b"]).unwrap() - 2.0).abs() < 1e-10);

        let product = PureState::ket_plus("a")
            .tensor(&PureState::ket_one("b"))
            .unwrap()
            .to_density();
        assert!(mutual_information(&product, &["a"], &["b"]).unwrap() < 1e-10);

        // ½(|00⟩⟨00| + |11⟩⟨11|): classically perfectly correlated.
        let classical = diag_state(&[("a", 2), ("b", 2)], &[0.5, 0.0, 0.0, 0.5]);
        assert!((mutual_information(&classical, &["a"], &["b"]).unwrap() - 1.0).abs() < 1e-12);

        assert!(mutual_information(&bell, &["a"], &["a"]).is_err());
    }

    #[test]
    fn cmi_on_ghz_is_one() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let layout = RegisterLayout::new([("q0", 2), ("q1", 2), ("q2", 2)]).unwrap();
        let mut amps = vec![c(0.0); 8];
        amps[0] = c(s);
        amps[7] = c(s);
        let ghz = PureState::new(layout, amps).unwrap().to_density();
        let v = conditional_mutual_information(&ghz, &["q0"], &["q1"], &["q2"]).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        // Empty conditioning group reduces to plain mutual information.
        let a = conditional_mutual_information(&ghz, &["q0"], &["q1"], &[]).unwrap();
        let b = mutual_information(&ghz, &["q0"], &["q1"]).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn eta_values() {
        assert!(eta(1.0).unwrap().abs() < 1e-12);
        assert!((eta(0.25).unwrap() - 2.0).abs() < 1e-12);
        assert!((eta(0.9256).unwrap() - 0.5).abs() < 5e-4);
        assert!(eta(0.0).is_err());
        assert!(eta(1.5).is_err());
    }

    #[test]
    fn eta_inverse_on_decreasing_branch() {
        assert!((solve_eta_inverse(0.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((solve_eta_inverse(2.0).unwrap() - 0.25).abs() < 1e-8);
        assert!((solve_eta_inverse(0.5).unwrap() - 0.9256).abs() < 5e-4);
        // Round-trips through eta on the branch.
        for target in [0.1, 0.5, 1.0, 1.7] {
            let x = solve_eta_inverse(target).unwrap();
            assert!((eta(x).unwrap() - target).abs() < 1e-7);
        }
        assert!(solve_eta_inverse(2.5).is_err());
    }

    #[test]
    fn average_fidelity_relation() {
        assert!((average_fidelity_from_fe(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((average_fidelity_from_fe(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((average_fidelity_from_fe(0.9256).unwrap() - 0.9504).abs() < 5e-4);
        assert!(average_fidelity_from_fe(1.2).is_err());
        let report = FidelityReport::from_entanglement_fidelity(0.4).unwrap();
        assert!((report.average_fidelity - (1.0 + 0.8) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_fano_equality_endpoints() {
        // Identity: H(RB) = 0 meets η(1) = 0. Completely depolarizing:
        // H(RB) = 2 meets η(1/4) = 2.
        let id = crate::channel::KrausChannel::identity(2);
        let f = check_quantum_fano(&id).unwrap();
        assert!(f.holds && f.entropy_exchange.abs() < 1e-9 && f.eta_bound.abs() < 1e-9);

        let dep = crate::channel::KrausChannel::completely_depolarizing();
        let f = check_quantum_fano(&dep).unwrap();
        assert!(f.holds);
        assert!((f.entropy_exchange - 2.0).abs() < 1e-9);
        assert!((f.eta_bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn imai_sum_saturation_and_product() {
        // Φ+ on (R, A) with B pure: I(R:A) = 2 = 2H(R), I(R:B) = 0.
        let rho = PureState::phi_plus("R", "A")
            .unwrap()
            .tensor(&PureState::ket_plus("B"))
            .unwrap()
            .to_density();
        let check = check_imai_sum(&rho, &["R"], &["A"], &["B"]).unwrap();
        assert!(check.holds);
        assert!((check.lhs - 2.0).abs() < 1e-10);
        assert!((check.rhs - 2.0).abs() < 1e-10);

        let product = PureState::ket_zero("R")
            .tensor(&PureState::ket_plus("A"))
            .unwrap()
            .tensor(&PureState::ket_one("B"))
            .unwrap()
            .to_density();
        let check = check_imai_sum(&product, &["R"], &["A"], &["B"]).unwrap();
        assert!(check.holds);
        assert!(check.lhs.abs() < 1e-10);
    }
}
