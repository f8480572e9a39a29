//! QuEnc: amplitude-encoded variational optimization of QUBO and MaxCut
//! problems on an embedded state-vector simulator.
//!
//! `n_c` binary variables live in `⌈log₂ n_c⌉` register qubits plus one
//! ancilla whose conditional amplitude on register state `|i⟩` encodes
//! `Pr(x_i = 1)`. Circuits are trained with parameter-shift gradients, and
//! `x_i + x_j = 1` constraints are compiled into postselected circuit blocks.

pub mod analysis;
pub mod ansatz;
pub mod cli;
pub mod constraint;
pub mod error;
pub mod gradient;
pub mod hybrid;
pub mod io;
pub mod objective;
pub mod problem;
pub mod record;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
