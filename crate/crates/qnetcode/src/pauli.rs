//! Pauli operators, Bell states and teleportation corrections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::matrix::ComplexMatrix;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]),
            Pauli::Y => ComplexMatrix::from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]]),
            Pauli::Z => ComplexMatrix::from_rows(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]]),
        }
    }
}

/// Result of a two-qubit Bell measurement.
///
/// The encoding is fixed: `(0,0) ↔ Φ+`, `(1,0) ↔ Φ−`, `(0,1) ↔ Ψ+`,
/// `(1,1) ↔ Ψ−`, read as `(x, z)`. So `x` selects the sign and `z` the
/// bit-flip part of the Bell state, and the recovery unitary is
/// `Z^x · X^z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellOutcome {
    pub x: bool,
    pub z: bool,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome { x: false, z: false },
        BellOutcome { x: true, z: false },
        BellOutcome { x: false, z: true },
        BellOutcome { x: true, z: true },
    ];

    pub fn new(x: bool, z: bool) -> Self {
        Self { x, z }
    }

    pub fn bits(self) -> [bool; 2] {
        [self.x, self.z]
    }

    pub fn from_bits(bits: [bool; 2]) -> Self {
        Self { x: bits[0], z: bits[1] }
    }

    /// Amplitudes of the corresponding Bell state, big-endian two-qubit basis.
    pub fn bell_vector(self) -> Vec<Complex64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sign = if self.x { -s } else { s };
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        if self.z {
            // (|01⟩ ± |10⟩)/√2
            amps[1] = Complex64::new(s, 0.0);
            amps[2] = Complex64::new(sign, 0.0);
        } else {
            // (|00⟩ ± |11⟩)/√2
            amps[0] = Complex64::new(s, 0.0);
            amps[3] = Complex64::new(sign, 0.0);
        }
        amps
    }
}

impl std::ops::BitXor for BellOutcome {
    type Output = BellOutcome;

    fn bitxor(self, rhs: BellOutcome) -> BellOutcome {
        BellOutcome { x: self.x ^ rhs.x, z: self.z ^ rhs.z }
    }
}

impl std::fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", u8::from(self.x), u8::from(self.z))
    }
}

/// Teleportation recovery unitary for a Bell outcome.
///
/// Convention: `U(0,0)=I`, `U(1,0)=Z`, `U(0,1)=X`, `U(1,1)=Z·X`. The global
/// phase of the `(1,1)` case is a free choice; everything downstream is
/// phase-insensitive.
pub fn pauli_correction(outcome: BellOutcome) -> ComplexMatrix {
    let z = Pauli::Z.matrix();
    let x = Pauli::X.matrix();
    match (outcome.x, outcome.z) {
        (false, false) => ComplexMatrix::identity(2),
        (true, false) => z,
        (false, true) => x,
        (true, true) => z.matmul(&x),
    }
}

/// Inverse of [`pauli_correction`].
pub fn pauli_correction_inverse(outcome: BellOutcome) -> ComplexMatrix {
    pauli_correction(outcome).dagger()
}

/// Hadamard gate (used by tests and the baseline estimator).
pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_rows(&[&[(s, 0.0), (s, 0.0)], &[(s, 0.0), (-s, 0.0)]])
}

/// CNOT with the first tensor factor as control.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[
        &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0), (0.0, 0.0)],
        &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
        &[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
    ])
}
