//! Quantum channels as finite Kraus-operator lists.
//!
//! Besides application, this carries the channel functionals the audit
//! machinery needs: entanglement fidelity (two independent routes), quantum
//! transmission information, and twirling. The Pauli twirl is the discrete
//! stand-in for group averaging: it preserves entanglement fidelity and
//! sends the maximally entangled input's output marginal to I/2, which is
//! all the entropic argument uses.

use num_complex::Complex64;
use rand::Rng;

use crate::entropy::mutual_information;
use crate::error::{Error, Result};
use crate::layout::RegisterLayout;
use crate::matrix::ComplexMatrix;
use crate::pauli::Pauli;
use crate::sampling::haar_unitary;
use crate::state::{DensityOperator, PureState, EIG_CUTOFF};

/// Completeness tolerance: Σ K†K must equal the identity this closely.
pub const KRAUS_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    input_dim: usize,
    output_dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validating constructor; each operator must be `output_dim × input_dim`
    /// and the completeness sum must hold within [`KRAUS_TOL`].
    pub fn new(input_dim: usize, output_dim: usize, ops: Vec<ComplexMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidChannel("no Kraus operators".into()));
        }
        for k in &ops {
            if k.rows() != output_dim || k.cols() != input_dim {
                return Err(Error::InvalidChannel(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.rows(),
                    k.cols(),
                    output_dim,
                    input_dim
                )));
            }
        }
        let mut sum = ComplexMatrix::zeros(input_dim, input_dim);
        for k in &ops {
            sum = sum.add(&k.dagger().matmul(k));
        }
        if !sum.approx_eq(&ComplexMatrix::identity(input_dim), KRAUS_TOL) {
            return Err(Error::InvalidChannel(format!(
                "completeness violated by {:.3e}",
                sum.max_abs_diff(&ComplexMatrix::identity(input_dim))
            )));
        }
        Ok(Self { input_dim, output_dim, ops })
    }

    pub fn identity(dim: usize) -> Self {
        Self { input_dim: dim, output_dim: dim, ops: vec![ComplexMatrix::identity(dim)] }
    }

    /// Phase-flip channel {√(1−p)·I, √p·Z}.
    pub fn phase_flip(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("flip probability {p}")));
        }
        Ok(Self {
            input_dim: 2,
            output_dim: 2,
            ops: vec![
                ComplexMatrix::identity(2).scale(c((1.0 - p).sqrt())),
                Pauli::Z.matrix().scale(c(p.sqrt())),
            ],
        })
    }

    /// Depolarizing channel: ρ ↦ (1−p)ρ + p·I/2.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("depolarizing strength {p}")));
        }
        let ops = vec![
            Pauli::I.matrix().scale(c((1.0 - 0.75 * p).sqrt())),
            Pauli::X.matrix().scale(c((0.25 * p).sqrt())),
            Pauli::Y.matrix().scale(c((0.25 * p).sqrt())),
            Pauli::Z.matrix().scale(c((0.25 * p).sqrt())),
        ];
        Ok(Self { input_dim: 2, output_dim: 2, ops })
    }

    /// The channel that outputs I/2 regardless of input.
    pub fn completely_depolarizing() -> Self {
        Self::depolarizing(1.0).expect("p = 1 is in range")
    }

    /// Measure in the basis given by the columns of `basis` and reprepare the
    /// measured basis state.
    pub fn measure_reprepare(basis: &ComplexMatrix) -> Result<Self> {
        if basis.rows() != 2 || basis.cols() != 2 {
            return Err(Error::DimensionMismatch("basis must be 2x2".into()));
        }
        if !basis.is_unitary(1e-10) {
            return Err(Error::NotUnitary(
                basis.dagger().matmul(basis).max_abs_diff(&ComplexMatrix::identity(2)),
            ));
        }
        // |b_k⟩⟨b_k| are rank-one Kraus operators of the dephase-and-resend map.
        let ops = (0..2)
            .map(|k| {
                let col = basis.column(k);
                ComplexMatrix::from_fn(2, 2, |r, cc| col[r] * col[cc].conj())
            })
            .collect();
        Self::new(2, 2, ops)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn kraus_operators(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn is_square(&self) -> bool {
        self.input_dim == self.output_dim
    }

    /// Applies the channel to a raw matrix of the input dimension.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.input_dim || rho.cols() != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, channel input dimension is {}",
                rho.rows(),
                rho.cols(),
                self.input_dim
            )));
        }
        let mut out = ComplexMatrix::zeros(self.output_dim, self.output_dim);
        for k in &self.ops {
            out = out.add(&k.matmul(rho).matmul(&k.dagger()));
        }
        Ok(out)
    }

    /// Applies a square channel to one register of a larger state.
    pub fn apply_to_register(&self, state: &DensityOperator, target: &str) -> Result<DensityOperator> {
        if !self.is_square() {
            return Err(Error::InvalidChannel(
                "only square channels can act in place on a register".into(),
            ));
        }
        let d = state.layout().dim_of(target)?;
        if d != self.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "register `{target}` has dimension {d}, channel expects {}",
                self.input_dim
            )));
        }
        let mut acc: Option<ComplexMatrix> = None;
        for k in &self.ops {
            let term = state.conjugate_unchecked(k, &[target])?;
            acc = Some(match acc {
                None => term.matrix().clone(),
                Some(a) => a.add(term.matrix()),
            });
        }
        Ok(DensityOperator::from_parts(state.layout().clone(), acc.expect("nonempty Kraus list")))
    }

    /// (ι_R ⊗ κ)(Φ): the channel acting on one half of a maximally entangled
    /// pair, on registers `("R", "B")`. This is the Choi state of the channel.
    pub fn reference_state(&self) -> Result<DensityOperator> {
        if !self.is_square() {
            return Err(Error::InvalidChannel("reference state needs a square channel".into()));
        }
        let d = self.input_dim;
        let phi = PureState::maximally_entangled("R", "B", d)?.to_density();
        self.apply_to_register(&phi, "B")
    }

    /// Entanglement fidelity of a qubit channel, closed form Σ|Tr K|²/4.
    pub fn entanglement_fidelity(&self) -> Result<f64> {
        if self.input_dim != 2 || self.output_dim != 2 {
            return Err(Error::DimensionMismatch(
                "entanglement fidelity is defined here for qubit channels".into(),
            ));
        }
        let f = self.ops.iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / 4.0;
        Ok(f.clamp(0.0, 1.0))
    }

    /// Entanglement fidelity via the definition ⟨Φ+|(κ⊗ι)(Φ+)|Φ+⟩; agrees
    /// with the closed form to machine precision.
    pub fn entanglement_fidelity_via_state(&self) -> Result<f64> {
        if self.input_dim != 2 || self.output_dim != 2 {
            return Err(Error::DimensionMismatch(
                "entanglement fidelity is defined here for qubit channels".into(),
            ));
        }
        let phi = PureState::maximally_entangled("R", "B", 2)?;
        self.reference_state()?.fidelity(&phi)
    }

    /// Quantum transmission information I(B:R) on the maximally entangled
    /// input.
    pub fn transmission_information(&self) -> Result<f64> {
        let reference = self.reference_state()?;
        mutual_information(&reference, &["B"], &["R"])
    }

    /// Convex mixture Σ pᵢ·κᵢ of equal-shape channels.
    pub fn mixture(parts: &[(f64, &KrausChannel)]) -> Result<KrausChannel> {
        let Some(&(_, first)) = parts.first() else {
            return Err(Error::InvalidChannel("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-9 || parts.iter().any(|(p, _)| *p < 0.0) {
            return Err(Error::OutOfRange("mixture weights must be a distribution".into()));
        }
        let mut ops = Vec::new();
        for (p, ch) in parts {
            if ch.input_dim != first.input_dim || ch.output_dim != first.output_dim {
                return Err(Error::DimensionMismatch("mixture of unequal channel shapes".into()));
            }
            for k in &ch.ops {
                ops.push(k.scale(c(p.sqrt())));
            }
        }
        KrausChannel::new(first.input_dim, first.output_dim, ops)
    }

    /// Choi state as a plain matrix on the (R ⊗ B) ordering, trace one.
    pub fn choi_matrix(&self) -> Result<ComplexMatrix> {
        Ok(self.reference_state()?.matrix().clone())
    }

    /// Rebuilds a channel from a trace-one Choi state on (R ⊗ B).
    ///
    /// The marginal on R must be I/d (trace preservation); eigenvectors with
    /// weight above the numerical cutoff become Kraus operators, so this also
    /// canonicalizes a channel to at most d_in·d_out operators.
    pub fn from_choi_state(choi: &ComplexMatrix, input_dim: usize, output_dim: usize) -> Result<Self> {
        let d = input_dim * output_dim;
        if choi.rows() != d || choi.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {d}x{d}",
                choi.rows(),
                choi.cols()
            )));
        }
        let (vals, vecs) = choi.eigh();
        let mut ops = Vec::new();
        for (i, &v) in vals.iter().enumerate() {
            if v <= EIG_CUTOFF {
                continue;
            }
            let w = c((v * input_dim as f64).sqrt());
            let col = vecs.column(i);
            ops.push(ComplexMatrix::from_fn(output_dim, input_dim, |b, a| {
                w * col[a * output_dim + b]
            }));
        }
        KrausChannel::new(input_dim, output_dim, ops)
    }

    /// Same as [`from_choi_state`](Self::from_choi_state) but starting from a
    /// two-register density operator holding the reference system first.
    pub fn from_reference_state(state: &DensityOperator) -> Result<Self> {
        let regs = state.layout().registers();
        if regs.len() != 2 {
            return Err(Error::DimensionMismatch(
                "reference state must have exactly two registers".into(),
            ));
        }
        let (din, dout) = (regs[0].dim, regs[1].dim);
        let marginal = state.partial_trace(&[regs[0].name.as_str()])?;
        let mixed = ComplexMatrix::identity(din).scale(c(1.0 / din as f64));
        if !marginal.matrix().approx_eq(&mixed, 1e-8) {
            return Err(Error::InvalidChannel(
                "reference marginal is not maximally mixed; state is not a Choi state".into(),
            ));
        }
        Self::from_choi_state(state.matrix(), din, dout)
    }

    /// Discrete Pauli twirl: κ̄(ρ) = ¼ Σ_P P†·κ(P ρ P†)·P.
    ///
    /// The result is a Pauli channel; it shares the original channel's
    /// entanglement fidelity and cannot have larger transmission
    /// information.
    pub fn pauli_twirl(&self) -> Result<KrausChannel> {
        if self.input_dim != 2 || self.output_dim != 2 {
            return Err(Error::DimensionMismatch("Pauli twirl acts on qubit channels".into()));
        }
        let mut ops = Vec::with_capacity(4 * self.ops.len());
        for p in Pauli::ALL {
            let pm = p.matrix();
            let pd = pm.dagger();
            for k in &self.ops {
                ops.push(pd.matmul(k).matmul(&pm).scale(c(0.5)));
            }
        }
        let raw = KrausChannel::new(2, 2, ops)?;
        // Canonicalize to at most four operators.
        Self::from_choi_state(&raw.choi_matrix()?, 2, 2)
    }

    /// Monte Carlo stand-in for the group-average twirl: an equal mixture of
    /// `samples` random-unitary conjugations U†·κ(U·U†)·U. Kept for
    /// comparison against the exact Pauli twirl.
    pub fn haar_twirl_sampled(&self, samples: usize, rng: &mut impl Rng) -> Result<KrausChannel> {
        if !self.is_square() {
            return Err(Error::InvalidChannel("twirl needs a square channel".into()));
        }
        let d = self.input_dim;
        let w = c(1.0 / (samples as f64).sqrt());
        let mut ops = Vec::with_capacity(samples * self.ops.len());
        for _ in 0..samples {
            let u = haar_unitary(d, rng);
            let ud = u.dagger();
            for k in &self.ops {
                ops.push(ud.matmul(k).matmul(&u).scale(w));
            }
        }
        let raw = KrausChannel::new(d, d, ops)?;
        Self::from_choi_state(&raw.choi_matrix()?, d, d)
    }

    /// Bell-basis diagonal of the Choi state. For Pauli channels these are
    /// the Pauli error weights; the Φ+ entry is the entanglement fidelity.
    pub fn bell_diagonal_weights(&self) -> Result<[f64; 4]> {
        if self.input_dim != 2 || self.output_dim != 2 {
            return Err(Error::DimensionMismatch("Bell weights need a qubit channel".into()));
        }
        let reference = self.reference_state()?;
        let mut out = [0.0; 4];
        for (i, outcome) in crate::pauli::BellOutcome::ALL.into_iter().enumerate() {
            let bell = PureState::new(
                RegisterLayout::new([("R", 2), ("B", 2)])?,
                outcome.bell_vector(),
            )?;
            out[i] = reference.fidelity(&bell)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_qubit_channel, seeded_rng};

    #[test]
    fn identity_channel_functionals() {
        let id = KrausChannel::identity(2);
        assert!((id.entanglement_fidelity().unwrap() - 1.0).abs() < 1e-12);
        assert!((id.entanglement_fidelity_via_state().unwrap() - 1.0).abs() < 1e-10);
        assert!((id.transmission_information().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn completely_depolarizing_functionals() {
        let dep = KrausChannel::completely_depolarizing();
        assert!((dep.entanglement_fidelity().unwrap() - 0.25).abs() < 1e-12);
        assert!(dep.transmission_information().unwrap().abs() < 1e-9);
        // Output is I/2 for any input.
        let rho = PureState::ket_plus("q").to_density();
        let out = dep.apply_matrix(rho.matrix()).unwrap();
        assert!(out.approx_eq(&ComplexMatrix::identity(2).scale(c(0.5)), 1e-12));
    }

    #[test]
    fn phase_flip_fidelity_both_routes() {
        let ch = KrausChannel::phase_flip(0.3).unwrap();
        let closed = ch.entanglement_fidelity().unwrap();
        let via_state = ch.entanglement_fidelity_via_state().unwrap();
        assert!((closed - 0.7).abs() < 1e-12);
        assert!((closed - via_state).abs() < 1e-12);
    }

    #[test]
    fn incomplete_kraus_set_rejected() {
        let bad = vec![ComplexMatrix::identity(2).scale(c(0.9))];
        assert!(KrausChannel::new(2, 2, bad).is_err());
    }

    #[test]
    fn choi_roundtrip_preserves_action() {
        let mut rng = seeded_rng(7);
        for _ in 0..20 {
            let ch = random_qubit_channel(&mut rng);
            let back = KrausChannel::from_choi_state(&ch.choi_matrix().unwrap(), 2, 2).unwrap();
            let probe = PureState::qubit("q", c(0.6), Complex64::new(0.0, 0.8)).unwrap().to_density();
            let a = ch.apply_matrix(probe.matrix()).unwrap();
            let b = back.apply_matrix(probe.matrix()).unwrap();
            assert!(a.approx_eq(&b, 1e-9));
        }
    }

    #[test]
    fn pauli_twirl_is_bell_diagonal_and_fe_preserving() {
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let ch = random_qubit_channel(&mut rng);
            let tw = ch.pauli_twirl().unwrap();
            let fe = ch.entanglement_fidelity().unwrap();
            let fe_tw = tw.entanglement_fidelity().unwrap();
            assert!((fe - fe_tw).abs() < 1e-10, "f_e changed under twirl");
            // Choi state of the twirl is diagonal in the Bell basis: its
            // Bell weights sum to one and reproduce the full spectrum.
            let weights = tw.bell_diagonal_weights().unwrap();
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            let mut eigs = tw.reference_state().unwrap().eigenvalues();
            let mut w = weights.to_vec();
            eigs.sort_by(f64::total_cmp);
            w.sort_by(f64::total_cmp);
            for (a, b) in eigs.iter().zip(&w) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn twirl_of_z_conjugation_is_itself() {
        let z = KrausChannel::new(2, 2, vec![Pauli::Z.matrix()]).unwrap();
        let tw = z.pauli_twirl().unwrap();
        let probe = PureState::ket_plus("q").to_density();
        let a = z.apply_matrix(probe.matrix()).unwrap();
        let b = tw.apply_matrix(probe.matrix()).unwrap();
        assert!(a.approx_eq(&b, 1e-9));
    }

    #[test]
    fn measure_reprepare_has_half_entanglement_fidelity() {
        let ch = KrausChannel::measure_reprepare(&ComplexMatrix::identity(2)).unwrap();
        assert!((ch.entanglement_fidelity().unwrap() - 0.5).abs() < 1e-12);
        let h = crate::pauli::hadamard();
        let ch = KrausChannel::measure_reprepare(&h).unwrap();
        assert!((ch.entanglement_fidelity().unwrap() - 0.5).abs() < 1e-12);
    }
}
