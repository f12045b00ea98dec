//! Pure states and density operators over named registers.
//!
//! The density operator is the single source of truth for protocol state.
//! All register-local operations (unitaries, projections, partial traces)
//! are index contractions against the layout, so nothing here ever builds
//! an embedded full-space operator.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::layout::RegisterLayout;
use crate::matrix::ComplexMatrix;
use crate::pauli::BellOutcome;

/// Hermiticity / trace tolerance for state validation.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalue floor for numerical positive semidefiniteness.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues below this are treated as exact zeros (rank, entropy).
pub const EIG_CUTOFF: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Offsets of a register subset, used to address tensor slots directly.
///
/// `target_offsets[t]` is the contribution of joint sub-index `t` (big-endian
/// over the targets in the order given) to a flat index; `rest_offsets[r]`
/// the same for the remaining registers in layout order.
struct SubsetIndex {
    target_offsets: Vec<usize>,
    rest_offsets: Vec<usize>,
}

impl SubsetIndex {
    fn new(layout: &RegisterLayout, targets: &[&str]) -> Result<Self> {
        let mut positions = Vec::with_capacity(targets.len());
        for name in targets {
            let p = layout.position(name)?;
            if positions.contains(&p) {
                return Err(Error::LayoutConflict(format!("register `{name}` listed twice")));
            }
            positions.push(p);
        }
        let strides = layout.strides();
        let regs = layout.registers();

        let tdims: Vec<usize> = positions.iter().map(|&p| regs[p].dim).collect();
        let tdim: usize = tdims.iter().product();
        let mut target_offsets = vec![0usize; tdim.max(1)];
        for (t, off) in target_offsets.iter_mut().enumerate() {
            let mut rem = t;
            let mut acc = 0usize;
            for (k, &d) in tdims.iter().enumerate().rev() {
                acc += (rem % d) * strides[positions[k]];
                rem /= d;
            }
            *off = acc;
        }

        let rest: Vec<usize> = (0..regs.len()).filter(|p| !positions.contains(p)).collect();
        let rdims: Vec<usize> = rest.iter().map(|&p| regs[p].dim).collect();
        let rdim: usize = rdims.iter().product();
        let mut rest_offsets = vec![0usize; rdim.max(1)];
        for (r, off) in rest_offsets.iter_mut().enumerate() {
            let mut rem = r;
            let mut acc = 0usize;
            for (k, &d) in rdims.iter().enumerate().rev() {
                acc += (rem % d) * strides[rest[k]];
                rem /= d;
            }
            *off = acc;
        }

        Ok(Self { target_offsets, rest_offsets })
    }

    fn target_dim(&self) -> usize {
        self.target_offsets.len()
    }

    fn rest_dim(&self) -> usize {
        self.rest_offsets.len()
    }
}

/// Normalized pure state over a register layout.
#[derive(Debug, Clone)]
pub struct PureState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Shape(format!(
                "amplitude vector has length {}, layout dimension is {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm² = {norm}, expected 1")));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Computational basis state |index⟩.
    pub fn basis(layout: RegisterLayout, index: usize) -> Self {
        let mut amplitudes = vec![c(0.0); layout.total_dim()];
        amplitudes[index] = c(1.0);
        Self { layout, amplitudes }
    }

    /// Single qubit |0⟩.
    pub fn ket_zero(name: &str) -> Self {
        Self::basis(RegisterLayout::single(name, 2).unwrap(), 0)
    }

    /// Single qubit |1⟩.
    pub fn ket_one(name: &str) -> Self {
        Self::basis(RegisterLayout::single(name, 2).unwrap(), 1)
    }

    /// Single qubit (|0⟩+|1⟩)/√2.
    pub fn ket_plus(name: &str) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(RegisterLayout::single(name, 2).unwrap(), vec![c(s), c(s)]).unwrap()
    }

    /// Single-qubit state from two amplitudes, normalized by the caller.
    pub fn qubit(name: &str, a0: Complex64, a1: Complex64) -> Result<Self> {
        Self::new(RegisterLayout::single(name, 2).unwrap(), vec![a0, a1])
    }

    /// The Bell state of the given outcome label across two named qubits.
    pub fn bell_pair(a: &str, b: &str, outcome: BellOutcome) -> Result<Self> {
        let layout = RegisterLayout::new([(a, 2), (b, 2)])?;
        Self::new(layout, outcome.bell_vector())
    }

    /// Φ+ across two named qubits.
    pub fn phi_plus(a: &str, b: &str) -> Result<Self> {
        Self::bell_pair(a, b, BellOutcome::new(false, false))
    }

    /// Maximally entangled state Σ|ii⟩/√d across two registers of dimension `dim`.
    pub fn maximally_entangled(a: &str, b: &str, dim: usize) -> Result<Self> {
        let layout = RegisterLayout::new([(a, dim), (b, dim)])?;
        let mut amplitudes = vec![c(0.0); dim * dim];
        let w = 1.0 / (dim as f64).sqrt();
        for i in 0..dim {
            amplitudes[i * dim + i] = c(w);
        }
        Self::new(layout, amplitudes)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Tensor product; register names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Ok(Self { layout, amplitudes })
    }

    /// Promotes to a density operator via the outer product.
    pub fn to_density(&self) -> DensityOperator {
        let d = self.dim();
        let matrix = ComplexMatrix::from_fn(d, d, |r, cc| {
            self.amplitudes[r] * self.amplitudes[cc].conj()
        });
        DensityOperator { layout: self.layout.clone(), matrix }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a unitary on the given registers.
    pub fn apply_on(&self, u: &ComplexMatrix, targets: &[&str]) -> Result<Self> {
        check_unitary_for(&self.layout, u, targets)?;
        let idx = SubsetIndex::new(&self.layout, targets)?;
        let dt = idx.target_dim();
        let mut out = vec![c(0.0); self.dim()];
        for &base in &idx.rest_offsets {
            for a in 0..dt {
                let mut acc = c(0.0);
                for b in 0..dt {
                    acc += u[(a, b)] * self.amplitudes[base + idx.target_offsets[b]];
                }
                out[base + idx.target_offsets[a]] = acc;
            }
        }
        Ok(Self { layout: self.layout.clone(), amplitudes: out })
    }

    pub fn rename_register(&mut self, old: &str, new: &str) -> Result<()> {
        self.layout.rename(old, new)
    }
}

/// Hermitian, unit-trace, positive semidefinite operator over a layout.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    layout: RegisterLayout,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validating constructor: Hermitian and unit trace within 1e-10,
    /// eigenvalues above −1e-9.
    pub fn new(layout: RegisterLayout, matrix: ComplexMatrix) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, layout dimension is {}",
                matrix.rows(),
                matrix.cols(),
                d
            )));
        }
        let op = Self { layout, matrix };
        op.validate()?;
        Ok(op)
    }

    /// Re-checks the density operator invariants.
    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace = {tr}, expected 1")));
        }
        let min = self.matrix.eigvalsh().into_iter().fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.total_dim();
        let matrix = ComplexMatrix::identity(d).scale(c(1.0 / d as f64));
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Tensor product; register names must be disjoint.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout.concat(&other.layout)?;
        let matrix = self.matrix.kron(&other.matrix);
        Ok(Self { layout, matrix })
    }

    /// Traces out everything except `keep`; the result keeps the original
    /// register order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::OutOfRange("partial trace must keep at least one register".into()));
        }
        let sub_layout = self.layout.subset(keep)?;
        // Re-list in layout order so the offsets match the result indexing.
        let ordered: Vec<&str> = sub_layout.names().collect();
        let idx = SubsetIndex::new(&self.layout, &ordered)?;
        let dk = idx.target_dim();
        let mut out = ComplexMatrix::zeros(dk, dk);
        for ik in 0..dk {
            for jk in 0..dk {
                let mut acc = c(0.0);
                for &e in &idx.rest_offsets {
                    acc += self.matrix[(idx.target_offsets[ik] + e, idx.target_offsets[jk] + e)];
                }
                out[(ik, jk)] = acc;
            }
        }
        Ok(DensityOperator { layout: sub_layout, matrix: out })
    }

    /// Conjugates by a unitary acting on `targets` (in the order given),
    /// identity elsewhere.
    pub fn apply_on(&self, u: &ComplexMatrix, targets: &[&str]) -> Result<DensityOperator> {
        check_unitary_for(&self.layout, u, targets)?;
        self.conjugate_unchecked(u, targets)
    }

    /// Same contraction as [`apply_on`] without the unitarity check; used for
    /// Kraus operators.
    pub(crate) fn conjugate_unchecked(
        &self,
        k: &ComplexMatrix,
        targets: &[&str],
    ) -> Result<DensityOperator> {
        let idx = SubsetIndex::new(&self.layout, targets)?;
        let dt = idx.target_dim();
        let d = self.dim();
        if k.rows() != dt || k.cols() != dt {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, targets span dimension {}",
                k.rows(),
                k.cols(),
                dt
            )));
        }
        // Left multiply: M1 = K_emb · ρ.
        let mut m1 = ComplexMatrix::zeros(d, d);
        for &base in &idx.rest_offsets {
            for a in 0..dt {
                let row = base + idx.target_offsets[a];
                for b in 0..dt {
                    let coeff = k[(a, b)];
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    let src = base + idx.target_offsets[b];
                    for col in 0..d {
                        m1[(row, col)] += coeff * self.matrix[(src, col)];
                    }
                }
            }
        }
        // Right multiply: M2 = M1 · K_emb†.
        let mut m2 = ComplexMatrix::zeros(d, d);
        for &base in &idx.rest_offsets {
            for a in 0..dt {
                let col = base + idx.target_offsets[a];
                for b in 0..dt {
                    let coeff = k[(a, b)].conj();
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    let src = base + idx.target_offsets[b];
                    for row in 0..d {
                        m2[(row, col)] += m1[(row, src)] * coeff;
                    }
                }
            }
        }
        Ok(DensityOperator { layout: self.layout.clone(), matrix: m2 })
    }

    /// Projects `targets` onto the (normalized) vector `ket`, removes them
    /// from the layout, and returns the unnormalized-probability pair
    /// `(normalized post-state, probability)`.
    ///
    /// A probability of (numerically) zero yields a `None` post-state.
    pub fn project_out(
        &self,
        targets: &[&str],
        ket: &[Complex64],
    ) -> Result<(Option<DensityOperator>, f64)> {
        let idx = SubsetIndex::new(&self.layout, targets)?;
        let dt = idx.target_dim();
        if ket.len() != dt {
            return Err(Error::DimensionMismatch(format!(
                "projection vector has length {}, targets span dimension {}",
                ket.len(),
                dt
            )));
        }
        let dr = idx.rest_dim();
        let mut out = ComplexMatrix::zeros(dr, dr);
        for (ir, &ro) in idx.rest_offsets.iter().enumerate() {
            for (jr, &co) in idx.rest_offsets.iter().enumerate() {
                let mut acc = c(0.0);
                for a in 0..dt {
                    let bra = ket[a].conj();
                    if bra.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (b, &amp) in ket.iter().enumerate() {
                        acc += bra
                            * self.matrix[(ro + idx.target_offsets[a], co + idx.target_offsets[b])]
                            * amp;
                    }
                }
                out[(ir, jr)] = acc;
            }
        }
        let prob = out.trace().re;
        let keep: Vec<&str> = self
            .layout
            .names()
            .filter(|n| !targets.contains(n))
            .collect();
        let layout = self.layout.subset(&keep)?;
        if prob <= EIG_CUTOFF {
            return Ok((None, prob.max(0.0)));
        }
        let matrix = out.scale(c(1.0 / prob));
        Ok((Some(DensityOperator { layout, matrix }), prob))
    }

    /// All Bell-measurement branches on a pair of qubit registers.
    ///
    /// Each branch carries the outcome, the renormalized post-state with the
    /// measured pair removed, and its Born probability. Zero-probability
    /// branches are omitted; the returned probabilities sum to 1.
    pub fn bell_measurement_branches(
        &self,
        pair: (&str, &str),
    ) -> Result<Vec<(BellOutcome, DensityOperator, f64)>> {
        self.check_qubit(pair.0)?;
        self.check_qubit(pair.1)?;
        let mut branches = Vec::with_capacity(4);
        for outcome in BellOutcome::ALL {
            let ket = outcome.bell_vector();
            let (state, prob) = self.project_out(&[pair.0, pair.1], &ket)?;
            if let Some(state) = state {
                branches.push((outcome, state, prob));
            }
        }
        Ok(branches)
    }

    /// Bell measurement with a forced outcome; errors if that outcome has
    /// (numerically) zero probability.
    pub fn bell_measurement_forced(
        &self,
        pair: (&str, &str),
        outcome: BellOutcome,
    ) -> Result<(DensityOperator, f64)> {
        self.check_qubit(pair.0)?;
        self.check_qubit(pair.1)?;
        let ket = outcome.bell_vector();
        let (state, prob) = self.project_out(&[pair.0, pair.1], &ket)?;
        match state {
            Some(state) => Ok((state, prob)),
            None => Err(Error::ZeroProbabilityOutcome { probability: prob }),
        }
    }

    /// Bell measurement sampled from the Born distribution.
    pub fn bell_measurement_sampled(
        &self,
        pair: (&str, &str),
        rng: &mut impl Rng,
    ) -> Result<(BellOutcome, DensityOperator, f64)> {
        let branches = self.bell_measurement_branches(pair)?;
        Ok(sample_branches(branches, rng))
    }

    /// Projective measurement of one register in an orthonormal basis given
    /// by the columns of `basis`. Returns one branch per outcome.
    pub fn basis_measurement_branches(
        &self,
        target: &str,
        basis: &ComplexMatrix,
    ) -> Result<Vec<(usize, DensityOperator, f64)>> {
        let d = self.layout.dim_of(target)?;
        if basis.rows() != d || basis.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "basis is {}x{}, register `{target}` has dimension {d}",
                basis.rows(),
                basis.cols()
            )));
        }
        if !basis.is_unitary(STATE_TOL) {
            return Err(Error::NotUnitary(
                basis.dagger().matmul(basis).max_abs_diff(&ComplexMatrix::identity(d)),
            ));
        }
        let mut branches = Vec::with_capacity(d);
        for k in 0..d {
            let ket = basis.column(k);
            let (state, prob) = self.project_out(&[target], &ket)?;
            if let Some(state) = state {
                branches.push((k, state, prob));
            }
        }
        Ok(branches)
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure state of matching dimension.
    pub fn fidelity(&self, psi: &PureState) -> Result<f64> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} vs operator dimension {}",
                psi.dim(),
                self.dim()
            )));
        }
        let mut acc = c(0.0);
        for (r, a) in psi.amplitudes.iter().enumerate() {
            for (cc, b) in psi.amplitudes.iter().enumerate() {
                acc += a.conj() * self.matrix[(r, cc)] * b;
            }
        }
        debug_assert!(acc.im.abs() < 1e-12, "fidelity has imaginary residue {}", acc.im);
        Ok(acc.re.clamp(0.0, 1.0))
    }

    /// Purification: a pure state on `layout ⊕ aux` whose marginal on the
    /// original registers reproduces `self`. The auxiliary dimension is the
    /// numerical rank; rank-one states are returned as-is with the auxiliary
    /// register absorbed.
    pub fn purify(&self, aux_name: &str) -> Result<PureState> {
        if self.layout.contains(aux_name) {
            return Err(Error::LayoutConflict(format!("register `{aux_name}` already exists")));
        }
        let (vals, vecs) = self.matrix.eigh();
        let kept: Vec<(f64, usize)> = vals
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > EIG_CUTOFF)
            .map(|(i, &v)| (v, i))
            .collect();
        let rank = kept.len().max(1);
        let d = self.dim();
        if rank == 1 {
            // Rank one: the dominant eigenvector already is the purification.
            let col = kept.last().map_or(d - 1, |&(_, i)| i);
            return PureState::new(self.layout.clone(), vecs.column(col));
        }
        let layout = self.layout.concat(&RegisterLayout::single(aux_name, rank)?)?;
        let mut amplitudes = vec![c(0.0); d * rank];
        for (a, &(val, col)) in kept.iter().enumerate() {
            let w = c(val.sqrt());
            for r in 0..d {
                amplitudes[r * rank + a] = w * vecs[(r, col)];
            }
        }
        PureState::new(layout, amplitudes)
    }

    /// Reorders registers to `order` (a permutation of the current names).
    pub fn reorder(&self, order: &[&str]) -> Result<DensityOperator> {
        if order.len() != self.layout.len() {
            return Err(Error::LayoutConflict(format!(
                "permutation lists {} registers, layout has {}",
                order.len(),
                self.layout.len()
            )));
        }
        let new_layout = {
            let regs: Result<Vec<(String, usize)>> = order
                .iter()
                .map(|n| Ok((n.to_string(), self.layout.dim_of(n)?)))
                .collect();
            RegisterLayout::new(regs?)?
        };
        let positions: Vec<usize> = order
            .iter()
            .map(|n| self.layout.position(n))
            .collect::<Result<_>>()?;
        let d = self.dim();
        // Map old flat index -> new flat index.
        let mut perm = vec![0usize; d];
        for (old, p) in perm.iter_mut().enumerate() {
            let parts = self.layout.unravel(old);
            let new_parts: Vec<usize> = positions.iter().map(|&q| parts[q]).collect();
            *p = new_layout.ravel(&new_parts);
        }
        let mut matrix = ComplexMatrix::zeros(d, d);
        for r in 0..d {
            for cc in 0..d {
                matrix[(perm[r], perm[cc])] = self.matrix[(r, cc)];
            }
        }
        Ok(DensityOperator { layout: new_layout, matrix })
    }

    pub fn rename_register(&mut self, old: &str, new: &str) -> Result<()> {
        self.layout.rename(old, new)
    }

    /// Sorted eigenvalues (ascending).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.eigvalsh()
    }

    fn check_qubit(&self, name: &str) -> Result<()> {
        if self.layout.dim_of(name)? != 2 {
            return Err(Error::DimensionMismatch(format!("register `{name}` is not a qubit")));
        }
        Ok(())
    }

    /// Builds without validation; for internal steps whose algebra preserves
    /// the invariants. Still shape-checked in debug builds.
    pub(crate) fn from_parts(layout: RegisterLayout, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.rows());
        Self { layout, matrix }
    }
}

/// Tensor product of two states of the same kind.
pub fn tensor_product(a: &DensityOperator, b: &DensityOperator) -> Result<DensityOperator> {
    a.tensor(b)
}

/// Free-function form of [`DensityOperator::fidelity`].
pub fn fidelity(psi: &PureState, rho: &DensityOperator) -> Result<f64> {
    rho.fidelity(psi)
}

fn sample_branches<O: Copy>(
    branches: Vec<(O, DensityOperator, f64)>,
    rng: &mut impl Rng,
) -> (O, DensityOperator, f64) {
    let total: f64 = branches.iter().map(|b| b.2).sum();
    let mut ticket = rng.gen::<f64>() * total;
    let last = branches.len() - 1;
    for (i, (o, s, p)) in branches.into_iter().enumerate() {
        if ticket < p || i == last {
            return (o, s, p);
        }
        ticket -= p;
    }
    unreachable!("branch probabilities sum to a positive total")
}

fn check_unitary_for(layout: &RegisterLayout, u: &ComplexMatrix, targets: &[&str]) -> Result<()> {
    let mut dt = 1usize;
    for t in targets {
        dt *= layout.dim_of(t)?;
    }
    if u.rows() != dt || u.cols() != dt {
        return Err(Error::DimensionMismatch(format!(
            "unitary is {}x{}, targets span dimension {}",
            u.rows(),
            u.cols(),
            dt
        )));
    }
    if !u.is_unitary(STATE_TOL) {
        let dev = u.dagger().matmul(u).max_abs_diff(&ComplexMatrix::identity(dt));
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}
