//! Simulation and analysis of the kicked rotor with a parity-breaking kick
//! phase sequence: the classical standard map with its accelerator mode, the
//! quantum Floquet evolution on momentum lattices, and the observables used to
//! characterize ratchet transport and dynamical localization.

pub mod analysis;
pub mod classical;
pub mod config;
pub mod distribution;
pub mod error;
pub mod io;
pub mod model;
pub mod quantum;
pub mod sampling;

pub use distribution::{MomentumDistribution, MomentumGrid};
pub use error::{Error, Result};
pub use model::{PhaseSequence, SimParams};
