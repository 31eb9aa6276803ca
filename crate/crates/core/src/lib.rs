//! Simulation and analysis of grid-forming DC/AC converters under
//! synchronous-machine matching control.
//!
//! * [`frames`]: Clarke/Park transforms and the `aI + bJ` operator algebra.
//! * [`plant`]: vector fields of the converter, the synchronous machine, loads
//!   and the two-converter network.
//! * [`control`]: matching modulation, DC current source and amplitude loops.
//! * [`analysis`]: equilibria, passivity certificates, storage functions,
//!   nose curves and power-sharing gains.
//! * [`sim`]: fixed-step RK4 engine, scenarios and recorded time series.
//! * [`config`]: the TOML scenario format and the bundled presets.
//! * [`verify`]: the acceptance suites, also reachable from the CLI.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analysis;
pub mod config;
pub mod control;
mod error;
pub mod frames;
pub mod plant;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

// The guide's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/steady-states.md")]
    mod steady_states {}
    #[doc = include_str!("../../../book/src/passivity.md")]
    mod passivity {}
    #[doc = include_str!("../../../book/src/droop.md")]
    mod droop {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
