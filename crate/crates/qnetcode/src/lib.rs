//! Simulator and verification toolkit for quantum network coding on the
//! butterfly network.
//!
//! The crate has three layers:
//!
//! * dense linear algebra over named registers ([`matrix`], [`layout`],
//!   [`state`], [`pauli`]) — density operators, unitaries, Bell
//!   measurements, purification;
//! * information theory ([`channel`], [`entropy`], [`sampling`]) — Kraus
//!   channels, von Neumann entropies, mutual information, entanglement and
//!   average fidelity, twirling, and executable checks of the standard
//!   entropic properties these rely on;
//! * the network ([`net`], [`protocols`], [`boundcheck`]) — the butterfly
//!   topology with capacity-tagged channels, an execution engine that runs
//!   node programs over one shared global state, the classical XOR code,
//!   the prior-entanglement code, measure-and-resend baselines, and the
//!   entropic audit that bounds what any no-entanglement protocol can do.

pub mod boundcheck;
pub mod channel;
pub mod entropy;
pub mod error;
pub mod io;
pub mod layout;
pub mod matrix;
pub mod net;
pub mod pauli;
pub mod protocols;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};
pub use layout::RegisterLayout;
pub use matrix::ComplexMatrix;
pub use pauli::BellOutcome;
pub use state::{DensityOperator, PureState};
