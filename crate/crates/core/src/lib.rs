//! Entanglement teleportation through maximally entangled mixed state (MEMS)
//! channels.
//!
//! Two qubits `a1, a2` in a target state are teleported through two
//! two-qubit channels `(b1, b2)` and `(b3, b4)` by Bell measurements on the
//! pairs `(a1, b1)` and `(a2, b3)`; the output lives on `(b2, b4)`.
//!
//! * [`linalg`]: dense complex matrices, partial trace/transpose, eigen-solvers.
//! * [`states`]: MEMS, Werner and target states, Bloch form, random states.
//! * [`measures`]: concurrence, linear entropy, negativity, fidelity.
//! * [`teleport`]: the protocol engine, closed forms and sweeps.
//! * [`verify`]: simulation-versus-closed-form checks used by the CLI.
//! * [`cli`]: the `mems-teleport` command line.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod states;
pub mod teleport;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use states::{ChannelFamily, ChannelSpec, DensityOperator, TargetForm, TargetSpec};
