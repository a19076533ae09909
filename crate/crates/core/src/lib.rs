//! Delegated reform decisions with career-concerned experts.
//!
//! The principal restricts the actions an expert may take (the full menu
//! `{0, 1, r}`, no compromise `{0, r}` or change `{1, r}`), the expert
//! decides whether to pay for information about the state, acts, and is
//! retained or replaced on the strength of the principal's posterior.
//!
//! - [`model`]: primitives, payoffs and the assumption region.
//! - [`strategy`]: profiles, action frequencies, posteriors and continuation values.
//! - [`pbe`]: equilibrium verification with D1 off-path beliefs.
//! - [`closed_form`]: equilibrium constructors, thresholds and the optimal delegation set.
//! - [`oracle`]: brute-force enumeration of profiles on a probability grid.
//! - [`sweep`]: parameter sweeps and the reports behind the `delegate` CLI.

pub mod closed_form;
pub mod model;
pub mod oracle;
pub mod pbe;
pub mod profile_format;
pub mod strategy;
pub mod sweep;

pub use model::{Action, DelegationSet, ExpertType, ModelParams, State, TAU_NUM};
pub use strategy::StrategyProfile;
